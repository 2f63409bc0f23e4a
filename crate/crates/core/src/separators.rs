//! Separating functions that vanish on `K` and are convex (or affine) along
//! every wave-cone line. A positive value certifies that a state lies
//! outside the hull.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{
    add, dot, max_wave_cone_residual, norm, norm_sq, perp, sub, State, ToleranceConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Separator {
    /// `|m - rho v + (0, c)| - c` with `c = (1 - rho^2)/2`; its sublevel set
    /// `{<= 0}` is the non-stationary hull.
    G1,
    /// `m . v^perp`; affine along wave-cone lines, so both signs separate.
    G2,
    /// `-(v - m) . (v + (0, 1 + rho)) + |v - m|^2 / 2`.
    G3,
    /// `-(v + m) . (v - (0, 1 - rho)) + |v + m|^2 / 2`.
    G4,
}

impl Separator {
    pub const ALL: [Separator; 4] = [Separator::G1, Separator::G2, Separator::G3, Separator::G4];

    pub fn name(self) -> &'static str {
        match self {
            Separator::G1 => "G1",
            Separator::G2 => "G2",
            Separator::G3 => "G3",
            Separator::G4 => "G4",
        }
    }

    /// Whether the function is affine (rather than merely convex) along
    /// wave-cone lines.
    pub fn is_affine(self) -> bool {
        self == Separator::G2
    }

    pub fn evaluate(self, z: &State) -> f64 {
        let State { rho, v, m } = *z;
        match self {
            Separator::G1 => {
                let c = 0.5 * (1.0 - rho * rho);
                norm([m[0] - rho * v[0], m[1] - rho * v[1] + c]) - c
            }
            Separator::G2 => dot(m, perp(v)),
            Separator::G3 => {
                let d = sub(v, m);
                -dot(d, add(v, [0.0, 1.0 + rho])) + 0.5 * norm_sq(d)
            }
            Separator::G4 => {
                let d = add(v, m);
                -dot(d, sub(v, [0.0, 1.0 - rho])) + 0.5 * norm_sq(d)
            }
        }
    }

    /// Whether `value` certifies exclusion from the hull.
    pub fn separates(self, value: f64, tol: &ToleranceConfig) -> bool {
        if self.is_affine() {
            value.abs() > tol.eq_tol
        } else {
            value > tol.eq_tol
        }
    }
}

impl std::str::FromStr for Separator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Separator::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown separator {s:?}")))
    }
}

/// Non-stationary hull test: `G1(z) <= eq_tol`.
pub fn in_non_stationary_hull(z: &State, tol: &ToleranceConfig) -> bool {
    Separator::G1.evaluate(z) <= tol.eq_tol
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub separator: Separator,
    pub min_second_difference: f64,
    pub max_abs_second_difference: f64,
    pub pass: bool,
}

/// `count` equispaced points on `[lo, hi]`.
pub fn uniform_grid(count: usize, lo: f64, hi: f64) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Default parameter grid: 11 points on `[-1, 1]`.
pub fn default_grid() -> Vec<f64> {
    uniform_grid(11, -1.0, 1.0)
}

/// Second differences of `t -> G(z0 + t dir)` over the sorted grid `ts`.
///
/// On a uniform grid the value at an interior node is
/// `g(t+h) - 2 g(t) + g(t-h)`; on a non-uniform grid the divided second
/// difference is rescaled by `h_left * h_right`, which reduces to the same
/// expression.
pub fn check_convex_along(
    sep: Separator,
    z0: &State,
    dir: &State,
    ts: &[f64],
    tol: &ToleranceConfig,
) -> Result<ConvexityReport> {
    let residual = max_wave_cone_residual(dir);
    if residual > tol.eq_tol {
        return Err(Error::NotInWaveCone { residual });
    }
    if ts.len() < 3 {
        return Err(Error::Precondition("need at least three grid points".into()));
    }
    if ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition("grid must be strictly increasing".into()));
    }
    let values: Vec<f64> = ts
        .iter()
        .map(|&t| sep.evaluate(&(*z0 + t * *dir)))
        .collect();
    let mut min = f64::INFINITY;
    let mut max_abs: f64 = 0.0;
    for i in 1..ts.len() - 1 {
        let hl = ts[i] - ts[i - 1];
        let hr = ts[i + 1] - ts[i];
        let d2 = 2.0 * (hl * (values[i + 1] - values[i]) - hr * (values[i] - values[i - 1]))
            / (hl + hr);
        min = min.min(d2);
        max_abs = max_abs.max(d2.abs());
    }
    let pass = if sep.is_affine() {
        max_abs <= tol.eq_tol
    } else {
        min >= -tol.eq_tol
    };
    Ok(ConvexityReport {
        separator: sep,
        min_second_difference: min,
        max_abs_second_difference: max_abs,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparatorValue {
    pub id: Separator,
    pub value: f64,
    pub separates: bool,
}

pub fn separation_bound(z: &State, tol: &ToleranceConfig) -> [SeparatorValue; 4] {
    Separator::ALL.map(|id| {
        let value = id.evaluate(z);
        SeparatorValue {
            id,
            value,
            separates: id.separates(value, tol),
        }
    })
}

/// Names of the separators that fire at `z`.
pub fn firing_separators(z: &State, tol: &ToleranceConfig) -> Vec<String> {
    separation_bound(z, tol)
        .iter()
        .filter(|s| s.separates)
        .map(|s| s.id.name().to_string())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::WaveDirection;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn evaluation_examples() {
        let z = State::new(1.0, [3.0, -2.0], [3.0, -2.0]);
        assert_eq!(Separator::G1.evaluate(&z), 0.0);
        assert_eq!(Separator::G2.evaluate(&State::new(0.0, [1.0, 0.0], [0.0, 1.0])), 1.0);
        assert_eq!(Separator::G3.evaluate(&State::new(1.0, [5.0, 7.0], [5.0, 7.0])), 0.0);
        assert_eq!(Separator::G4.evaluate(&State::new(-1.0, [2.0, 2.0], [-2.0, -2.0])), 0.0);
    }

    #[test]
    fn convexity_examples() {
        let dir = WaveDirection::PureFlux { m: [1.0, 0.0] }.realize().unwrap();
        let r = check_convex_along(Separator::G1, &State::ZERO, &dir, &[-1.0, 0.0, 1.0], &tol())
            .unwrap();
        assert!(r.pass);
        assert!(r.min_second_difference >= 0.0);

        let dir = WaveDirection::Sheared {
            rho: 0.7,
            e: [0.6, -0.8],
            ell: -1.3,
        }
        .realize()
        .unwrap();
        let z0 = State::new(0.3, [-0.4, 1.1], [0.9, 0.2]);
        for sep in Separator::ALL {
            let r = check_convex_along(sep, &z0, &dir, &default_grid(), &tol()).unwrap();
            assert!(r.pass, "{sep:?}: {r:?}");
        }
    }

    #[test]
    fn convexity_rejects_directions_off_the_cone() {
        let dir = State::new(0.0, [1.0, 0.0], [0.0, 0.0]);
        let err = check_convex_along(Separator::G3, &State::ZERO, &dir, &default_grid(), &tol());
        assert!(matches!(err, Err(Error::NotInWaveCone { .. })));
    }

    #[test]
    fn uniform_grid_second_difference_matches_stencil() {
        // A plain quadratic g(t) = t^2 along the line: second difference 2 h^2.
        let z0 = State::new(0.0, [0.0, 0.0], [0.0, -0.5]);
        let dir = WaveDirection::PureFlux { m: [1.0, 0.0] }.realize().unwrap();
        let ts = uniform_grid(5, -1.0, 1.0);
        let r = check_convex_along(Separator::G3, &z0, &dir, &ts, &tol()).unwrap();
        // G3 along (0,0,(t,0)) from z0: d = (-t, 0.5), value t^2/2 + ... + const
        assert!((r.min_second_difference - 0.25).abs() < 1e-14, "{r:?}");
    }

    #[test]
    fn separation_examples() {
        let r = separation_bound(&State::new(0.0, [0.0, -0.5], [0.0, -1.5]), &tol());
        assert!(r[0].separates && r[0].value > 0.0);
        let r = separation_bound(&State::new(0.0, [0.0, -0.5], [0.0, -0.25]), &tol());
        assert!(r[2].separates);
        let r = separation_bound(&State::new(-1.0, [0.4, -1.2], [-0.4, 1.2]), &tol());
        assert!(r.iter().all(|s| !s.separates));
    }
}
