//! State space, constitutive set and wave cone of the stationary IPM
//! inclusion.
//!
//! A state is `z = (rho, v, m)` with density `rho`, velocity `v` and relaxed
//! flux `m`. The linear system is `div m = 0`, `div v = 0`,
//! `curl (v + (0, rho)) = 0`; the constitutive set is
//! `K = { |rho| = 1, m = rho v }`.

use std::ops::{Add, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

/// Default equality tolerance for scalar conditions.
pub const DEFAULT_EQ_TOL: f64 = 1e-9;

/// The unit vector `(0, 1)`; the excluded direction of sheared wave-cone
/// elements.
pub const E_UP: Vec2 = [0.0, 1.0];

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn norm_sq(a: Vec2) -> f64 {
    dot(a, a)
}

/// Counter-clockwise rotation, `(x, y)^perp = (-y, x)`.
#[inline]
pub fn perp(a: Vec2) -> Vec2 {
    [-a[1], a[0]]
}

#[inline]
pub fn scale(s: f64, a: Vec2) -> Vec2 {
    [s * a[0], s * a[1]]
}

#[inline]
pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct State {
    pub rho: f64,
    pub v: Vec2,
    pub m: Vec2,
}

impl State {
    pub const ZERO: State = State {
        rho: 0.0,
        v: [0.0, 0.0],
        m: [0.0, 0.0],
    };

    pub fn new(rho: f64, v: Vec2, m: Vec2) -> Self {
        Self { rho, v, m }
    }

    /// A point of `K`: `(sign, v, sign * v)`.
    pub fn on_k(sign: f64, v: Vec2) -> Self {
        Self::new(sign, v, scale(sign, v))
    }

    pub fn components(&self) -> [f64; 5] {
        [self.rho, self.v[0], self.v[1], self.m[0], self.m[1]]
    }

    pub fn from_components(c: [f64; 5]) -> Self {
        Self::new(c[0], [c[1], c[2]], [c[3], c[4]])
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|c| c.is_finite())
    }

    pub fn max_norm(&self) -> f64 {
        self.components().iter().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn lerp(&self, other: &State, lambda: f64) -> State {
        let mu = 1.0 - lambda;
        State::new(
            lambda * self.rho + mu * other.rho,
            add(scale(lambda, self.v), scale(mu, other.v)),
            add(scale(lambda, self.m), scale(mu, other.m)),
        )
    }
}

impl Add for State {
    type Output = State;
    fn add(self, rhs: State) -> State {
        State::new(self.rho + rhs.rho, add(self.v, rhs.v), add(self.m, rhs.m))
    }
}

impl Sub for State {
    type Output = State;
    fn sub(self, rhs: State) -> State {
        State::new(self.rho - rhs.rho, sub(self.v, rhs.v), sub(self.m, rhs.m))
    }
}

impl Mul<State> for f64 {
    type Output = State;
    fn mul(self, rhs: State) -> State {
        State::new(self * rhs.rho, scale(self, rhs.v), scale(self, rhs.m))
    }
}

impl Neg for State {
    type Output = State;
    fn neg(self) -> State {
        -1.0 * self
    }
}

/// How inequalities at set boundaries are evaluated.
///
/// `Closed` widens non-strict inequalities by `eq_tol` and narrows strict
/// ones by `eq_tol`; `Strict` compares exactly. Equalities always use
/// `eq_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    Strict,
    #[default]
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    pub eq_tol: f64,
    pub boundary_policy: BoundaryPolicy,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            eq_tol: DEFAULT_EQ_TOL,
            boundary_policy: BoundaryPolicy::Closed,
        }
    }
}

impl ToleranceConfig {
    pub fn new(eq_tol: f64) -> Result<Self> {
        let cfg = Self {
            eq_tol,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eq_tol > 0.0 && self.eq_tol.is_finite() {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "eq_tol must be a positive finite number, got {}",
                self.eq_tol
            )))
        }
    }

    /// `|value| <= eq_tol`
    #[inline]
    pub fn is_zero(&self, value: f64) -> bool {
        value.abs() <= self.eq_tol
    }

    /// Non-strict `a <= b` under the boundary policy.
    #[inline]
    pub fn le(&self, a: f64, b: f64) -> bool {
        match self.boundary_policy {
            BoundaryPolicy::Closed => a <= b + self.eq_tol,
            BoundaryPolicy::Strict => a <= b,
        }
    }

    /// Strict `a < b` under the boundary policy.
    #[inline]
    pub fn lt(&self, a: f64, b: f64) -> bool {
        match self.boundary_policy {
            BoundaryPolicy::Closed => a < b - self.eq_tol,
            BoundaryPolicy::Strict => a < b,
        }
    }
}

/// Membership in `K = { |rho| = 1, m = rho v }`.
pub fn in_k(z: &State, tol: &ToleranceConfig) -> bool {
    k_residual(z) <= tol.eq_tol
}

/// `max(||rho| - 1|, |m - rho v|_inf)`; zero exactly on `K`.
pub fn k_residual(z: &State) -> f64 {
    let d = sub(z.m, scale(z.rho, z.v));
    (z.rho.abs() - 1.0).abs().max(d[0].abs()).max(d[1].abs())
}

/// The three quadratic wave-cone conditions evaluated at `z`:
/// `|v|^2 + rho v2`, `m . v^perp` and `m . (v + (0, rho))`.
pub fn wave_cone_residuals(z: &State) -> [f64; 3] {
    let power = norm_sq(z.v) + z.rho * z.v[1];
    let shear = dot(z.m, perp(z.v));
    let flux = dot(z.m, [z.v[0], z.v[1] + z.rho]);
    [power, shear, flux]
}

pub fn max_wave_cone_residual(z: &State) -> f64 {
    wave_cone_residuals(z)
        .iter()
        .fold(0.0, |acc, r| acc.max(r.abs()))
}

pub fn in_wave_cone(z: &State, tol: &ToleranceConfig) -> bool {
    max_wave_cone_residual(z) <= tol.eq_tol
}

/// A covector `xi != 0` for which plane waves `h(x . xi) z` solve the linear
/// system, chosen case by case in the order `v + (0, rho)`, `v^perp`,
/// `m^perp`, `(1, 1)`. Returns `None` when `z` is not in the wave cone.
pub fn recover_covector(z: &State, tol: &ToleranceConfig) -> Option<Vec2> {
    if !in_wave_cone(z, tol) {
        return None;
    }
    let shifted = [z.v[0], z.v[1] + z.rho];
    let v_zero = norm(z.v) <= tol.eq_tol;
    let rho_zero = tol.is_zero(z.rho);
    if norm(shifted) > tol.eq_tol && !(v_zero && rho_zero) {
        return Some(shifted);
    }
    if !v_zero {
        return Some(perp(z.v));
    }
    if norm(z.m) > tol.eq_tol {
        return Some(perp(z.m));
    }
    Some([1.0, 1.0])
}

/// Residuals of the plane-wave conditions `m . xi = 0`, `v . xi = 0`,
/// `(v + (0, rho)) . xi^perp = 0`, normalised by `|xi|`.
pub fn plane_wave_residuals(z: &State, xi: Vec2) -> [f64; 3] {
    let n = norm(xi);
    let xi = scale(1.0 / n, xi);
    [
        dot(z.m, xi),
        dot(z.v, xi),
        dot([z.v[0], z.v[1] + z.rho], perp(xi)),
    ]
}

/// Parametrised wave-cone directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum WaveDirection {
    /// `(rho, (rho/2)(e - (0,1)), ell (e - (0,1)))`, `rho != 0`, `|e| = 1`,
    /// `e != (0,1)`.
    Sheared { rho: f64, e: Vec2, ell: f64 },
    /// `(rho, 0, (m1, 0))`, `rho != 0`.
    HorizontalFlux { rho: f64, m1: f64 },
    /// `(0, 0, m)`.
    PureFlux { m: Vec2 },
}

impl WaveDirection {
    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match *self {
            WaveDirection::Sheared { rho, e, ell } => {
                if !finite(&[rho, e[0], e[1], ell]) {
                    return Err(Error::InvalidWaveDirection("non-finite parameter".into()));
                }
                if rho == 0.0 {
                    return Err(Error::InvalidWaveDirection("sheared form needs rho != 0".into()));
                }
                if (norm(e) - 1.0).abs() > DEFAULT_EQ_TOL {
                    return Err(Error::InvalidWaveDirection(format!(
                        "|e| = {} is not 1",
                        norm(e)
                    )));
                }
                if norm(sub(e, E_UP)) <= DEFAULT_EQ_TOL {
                    return Err(Error::InvalidWaveDirection("e must differ from (0, 1)".into()));
                }
                Ok(())
            }
            WaveDirection::HorizontalFlux { rho, m1 } => {
                if !finite(&[rho, m1]) {
                    return Err(Error::InvalidWaveDirection("non-finite parameter".into()));
                }
                if rho == 0.0 {
                    return Err(Error::InvalidWaveDirection(
                        "horizontal-flux form needs rho != 0".into(),
                    ));
                }
                Ok(())
            }
            WaveDirection::PureFlux { m } => {
                if !finite(&m) {
                    return Err(Error::InvalidWaveDirection("non-finite parameter".into()));
                }
                Ok(())
            }
        }
    }

    pub fn realize(&self) -> Result<State> {
        self.validate()?;
        Ok(match *self {
            WaveDirection::Sheared { rho, e, ell } => {
                let u = sub(e, E_UP);
                State::new(rho, scale(0.5 * rho, u), scale(ell, u))
            }
            WaveDirection::HorizontalFlux { rho, m1 } => State::new(rho, [0.0, 0.0], [m1, 0.0]),
            WaveDirection::PureFlux { m } => State::new(0.0, [0.0, 0.0], m),
        })
    }
}

/// Half-width of the excluded arc around `(0, 1)` when sampling `e`.
const EXCLUDED_HALF_ARC: f64 = 5e-4;
const RHO_GAP: f64 = 1e-3;
const PARAM_RANGE: f64 = 2.0;

/// A unit vector uniform on the circle minus a short arc around `(0, 1)`.
pub fn random_unit_direction<R: Rng + ?Sized>(rng: &mut R) -> Vec2 {
    use std::f64::consts::{FRAC_PI_2, TAU};
    let span = TAU - 2.0 * EXCLUDED_HALF_ARC;
    let theta = FRAC_PI_2 + EXCLUDED_HALF_ARC + rng.random::<f64>() * span;
    [theta.cos(), theta.sin()]
}

pub fn random_wave_direction<R: Rng + ?Sized>(rng: &mut R) -> WaveDirection {
    let nonzero_rho = |rng: &mut R| {
        let magnitude = RHO_GAP + rng.random::<f64>() * (PARAM_RANGE - RHO_GAP);
        if rng.random::<bool>() {
            magnitude
        } else {
            -magnitude
        }
    };
    let uniform = |rng: &mut R| rng.random_range(-PARAM_RANGE..PARAM_RANGE);
    match rng.random_range(0..3u8) {
        0 => WaveDirection::Sheared {
            rho: nonzero_rho(rng),
            e: random_unit_direction(rng),
            ell: uniform(rng),
        },
        1 => WaveDirection::HorizontalFlux {
            rho: nonzero_rho(rng),
            m1: uniform(rng),
        },
        _ => WaveDirection::PureFlux {
            m: [uniform(rng), uniform(rng)],
        },
    }
}

/// `count` seeded wave-cone directions, each realised as a state.
pub fn sample_wave_cone(seed: u64, count: usize) -> Vec<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            random_wave_direction(&mut rng)
                .realize()
                .expect("sampled parameters are valid")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn k_membership_examples() {
        assert!(in_k(&State::new(1.0, [2.0, 3.0], [2.0, 3.0]), &tol()));
        assert!(in_k(&State::new(-1.0, [0.0, 1.0], [0.0, -1.0]), &tol()));
        assert!(!in_k(&State::new(0.0, [1.0, 0.0], [0.0, 0.0]), &tol()));
    }

    #[test]
    fn wave_cone_examples() {
        assert!(in_wave_cone(&State::new(2.0, [0.0, 0.0], [5.0, 0.0]), &tol()));
        assert!(in_wave_cone(&State::new(0.0, [0.0, 0.0], [3.0, 4.0]), &tol()));
        assert!(!in_wave_cone(&State::new(0.0, [1.0, 0.0], [0.0, 0.0]), &tol()));
        // Hand check: |v|^2 + rho v2 = 2 - 2, m . v^perp = (3,-3).(1,1) = 0,
        // m . (v + (0, 2)) = (3,-3).(1,1) = 0.
        let z = State::new(2.0, [1.0, -1.0], [3.0, -3.0]);
        assert_eq!(wave_cone_residuals(&z), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn realize_examples() {
        let z = WaveDirection::Sheared {
            rho: 2.0,
            e: [1.0, 0.0],
            ell: 3.0,
        }
        .realize()
        .unwrap();
        assert_eq!(z, State::new(2.0, [1.0, -1.0], [3.0, -3.0]));
        let z = WaveDirection::HorizontalFlux { rho: -1.0, m1: 0.5 }
            .realize()
            .unwrap();
        assert_eq!(z, State::new(-1.0, [0.0, 0.0], [0.5, 0.0]));
        let z = WaveDirection::PureFlux { m: [0.0, 0.0] }.realize().unwrap();
        assert_eq!(z, State::ZERO);
    }

    #[test]
    fn realize_rejects_bad_parameters() {
        let bad = [
            WaveDirection::Sheared {
                rho: 1.0,
                e: [0.5, 0.0],
                ell: 1.0,
            },
            WaveDirection::Sheared {
                rho: 0.0,
                e: [1.0, 0.0],
                ell: 1.0,
            },
            WaveDirection::Sheared {
                rho: 1.0,
                e: [0.0, 1.0],
                ell: 1.0,
            },
            WaveDirection::HorizontalFlux { rho: 0.0, m1: 1.0 },
            WaveDirection::PureFlux { m: [f64::NAN, 0.0] },
        ];
        for w in bad {
            assert!(matches!(w.realize(), Err(Error::InvalidWaveDirection(_))), "{w:?}");
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        assert!(sample_wave_cone(7, 0).is_empty());
        let a = sample_wave_cone(7, 100);
        let b = sample_wave_cone(7, 100);
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        assert!(a.iter().all(|z| in_wave_cone(z, &tol())));
    }

    #[test]
    fn covector_cases_follow_listed_order() {
        let t = tol();
        // v + (0, rho) nonzero
        let xi = recover_covector(&State::new(2.0, [1.0, -1.0], [3.0, -3.0]), &t).unwrap();
        assert_eq!(xi, [1.0, 1.0]);
        // v = (0, -rho) != 0
        let z = State::new(1.0, [0.0, -1.0], [0.0, 0.0]);
        assert_eq!(recover_covector(&z, &t).unwrap(), perp(z.v));
        // rho = 0, v = 0, m != 0
        let z = State::new(0.0, [0.0, 0.0], [3.0, 4.0]);
        assert_eq!(recover_covector(&z, &t).unwrap(), [-4.0, 3.0]);
        // everything zero
        assert_eq!(recover_covector(&State::ZERO, &t).unwrap(), [1.0, 1.0]);
        // outside the cone
        assert!(recover_covector(&State::new(0.0, [1.0, 0.0], [0.0, 0.0]), &t).is_none());
    }

    #[test]
    fn boundary_policy_comparisons() {
        let closed = ToleranceConfig::default();
        let strict = ToleranceConfig {
            boundary_policy: BoundaryPolicy::Strict,
            ..closed
        };
        assert!(closed.le(1.0 + 1e-10, 1.0));
        assert!(!strict.le(1.0 + 1e-10, 1.0));
        assert!(!closed.lt(1.0 - 1e-10, 1.0));
        assert!(strict.lt(1.0 - 1e-10, 1.0));
        assert!(ToleranceConfig::new(0.0).is_err());
    }

    #[test]
    fn state_json_schema() {
        let z: State = serde_json::from_str(r#"{"rho":0,"v":[1,0],"m":[0,1]}"#).unwrap();
        assert_eq!(z, State::new(0.0, [1.0, 0.0], [0.0, 1.0]));
        assert!(serde_json::from_str::<State>(r#"{"rho":0,"v":[1,0],"m":[0,1],"x":1}"#).is_err());
        let s = serde_json::to_string(&State::new(1.0, [2.0, 3.0], [2.0, 3.0])).unwrap();
        assert_eq!(s, r#"{"rho":1.0,"v":[2.0,3.0],"m":[2.0,3.0]}"#);
    }
}
