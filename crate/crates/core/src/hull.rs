//! Closed-form description of the lamination convex hull.
//!
//! For `v != 0` a hull point satisfies `m = k v` with `k` confined to an
//! interval determined by the bound
//! `k_bound(rho, v) = rho - (1 - rho^2) v2 / |v|^2`:
//!
//! * `X2`: `1 <= k <= k_bound` (inside the upper cone),
//! * `X4`: `k_bound <= k <= -1` (inside the lower cone),
//! * `X3`: `|rho| < 1`, `-1 < k = k_bound < 1` (rigid region).
//!
//! For `v = 0` the hull is the disc
//! `X1 = { (rho, 0, ((1 - rho^2)/2)(e - (0,1))) : |e| <= 1 }`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{add, dot, in_k, norm, norm_sq, perp, scale, State, ToleranceConfig, Vec2, E_UP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RegionTag {
    OnK,
    X1,
    X2,
    X3,
    X4,
    Outside,
}

impl RegionTag {
    pub const ALL: [RegionTag; 6] = [
        RegionTag::OnK,
        RegionTag::X1,
        RegionTag::X2,
        RegionTag::X3,
        RegionTag::X4,
        RegionTag::Outside,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegionTag::OnK => "OnK",
            RegionTag::X1 => "X1",
            RegionTag::X2 => "X2",
            RegionTag::X3 => "X3",
            RegionTag::X4 => "X4",
            RegionTag::Outside => "Outside",
        }
    }

    pub fn in_hull(self) -> bool {
        self != RegionTag::Outside
    }
}

impl std::fmt::Display for RegionTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RegionTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RegionTag::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown region tag {s:?}")))
    }
}

/// Classification of a state with its payload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub tag: RegionTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_bound: Option<f64>,
}

impl Region {
    fn bare(tag: RegionTag) -> Self {
        Self {
            tag,
            k: None,
            e: None,
            k_bound: None,
        }
    }

    fn disc(e: Vec2) -> Self {
        Self {
            e: Some(e),
            ..Self::bare(RegionTag::X1)
        }
    }
}

/// `rho - (1 - rho^2) v2 / |v|^2`, the endpoint of the admissible `k`
/// interval that is not `+-1`. Undefined (infinite or NaN) for `v = 0`.
pub fn k_bound(rho: f64, v: Vec2) -> f64 {
    rho - (1.0 - rho * rho) * v[1] / norm_sq(v)
}

/// `|v|^2 + rho v2`.
pub fn power_balance(z: &State) -> f64 {
    norm_sq(z.v) + z.rho * z.v[1]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeSide {
    /// `|v|^2 + (rho + 1) v2 <= 0`, where `k` may range over `[1, k_bound]`.
    Upper,
    /// `|v|^2 + (rho - 1) v2 <= 0`, where `k` may range over `[k_bound, -1]`.
    Lower,
}

pub fn cone_value(z: &State, side: ConeSide) -> f64 {
    let shift = match side {
        ConeSide::Upper => 1.0,
        ConeSide::Lower => -1.0,
    };
    norm_sq(z.v) + (z.rho + shift) * z.v[1]
}

pub fn in_cone(z: &State, side: ConeSide, tol: &ToleranceConfig) -> bool {
    cone_value(z, side) <= tol.eq_tol
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KRangeKind {
    Flexible,
    Rigid,
    Empty,
}

/// Admissible closed interval of `k` for fixed `(rho, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KRange {
    pub kind: KRangeKind,
    pub lo: f64,
    pub hi: f64,
}

impl KRange {
    pub fn contains(&self, k: f64, tol: f64) -> bool {
        self.kind != KRangeKind::Empty && k >= self.lo - tol && k <= self.hi + tol
    }

    pub fn width(&self) -> f64 {
        match self.kind {
            KRangeKind::Empty => 0.0,
            _ => self.hi - self.lo,
        }
    }
}

pub fn k_range(rho: f64, v: Vec2, tol: &ToleranceConfig) -> Result<KRange> {
    if !(rho.is_finite() && v.iter().all(|c| c.is_finite())) {
        return Err(Error::Precondition("non-finite input".into()));
    }
    if norm(v) <= tol.eq_tol {
        return Err(Error::Precondition(
            "k range needs v != 0; the v = 0 slice is the disc X1".into(),
        ));
    }
    if rho.abs() > 1.0 + tol.eq_tol {
        return Ok(KRange {
            kind: KRangeKind::Empty,
            lo: f64::NAN,
            hi: f64::NAN,
        });
    }
    let b = k_bound(rho, v);
    let range = |kind, lo, hi| Ok(KRange { kind, lo, hi });
    if b >= 1.0 {
        range(KRangeKind::Flexible, 1.0, b)
    } else if b <= -1.0 {
        range(KRangeKind::Flexible, b, -1.0)
    } else if tol.lt(rho.abs(), 1.0) {
        range(KRangeKind::Rigid, b, b)
    } else {
        range(KRangeKind::Rigid, rho, rho)
    }
}

/// `m = k v` test with relative scaling: `|m . v^perp| <= eq_tol (1 + |m||v|)`.
pub fn is_parallel(m: Vec2, v: Vec2, tol: &ToleranceConfig) -> bool {
    dot(m, perp(v)).abs() <= tol.eq_tol * (1.0 + norm(m) * norm(v))
}

/// Proportionality constant `m . v / |v|^2`.
pub fn flux_ratio(z: &State) -> f64 {
    dot(z.m, z.v) / norm_sq(z.v)
}

/// Half-width `(1 - rho^2)/2` of the `v = 0` disc.
pub fn disc_radius(rho: f64) -> f64 {
    0.5 * (1.0 - rho * rho)
}

/// Point of the `v = 0` disc with parameter `e`.
pub fn disc_point(rho: f64, e: Vec2) -> State {
    State::new(rho, [0.0, 0.0], scale(disc_radius(rho), add(e, [0.0, -1.0])))
}

pub fn classify(z: &State, tol: &ToleranceConfig) -> Region {
    if !z.is_finite() {
        return Region::bare(RegionTag::Outside);
    }
    if in_k(z, tol) {
        return Region::bare(RegionTag::OnK);
    }
    let v_zero = norm(z.v) <= tol.eq_tol;
    let k_bound = (!v_zero).then(|| k_bound(z.rho, z.v));
    let outside = Region {
        k_bound,
        ..Region::bare(RegionTag::Outside)
    };
    if !tol.le(z.rho.abs(), 1.0) {
        return outside;
    }
    if v_zero {
        return classify_disc(z, tol).unwrap_or(outside);
    }
    let k_bound = k_bound.expect("v != 0");
    if !is_parallel(z.m, z.v, tol) {
        return outside;
    }
    let k = flux_ratio(z);
    let region = |tag| Region {
        tag,
        k: Some(k),
        e: None,
        k_bound: Some(k_bound),
    };
    if tol.le(1.0, k) && tol.le(k, k_bound) {
        region(RegionTag::X2)
    } else if tol.le(k_bound, k) && tol.le(k, -1.0) {
        region(RegionTag::X4)
    } else if tol.lt(z.rho.abs(), 1.0)
        && (k - k_bound).abs() <= tol.eq_tol
        && tol.lt(-1.0, k)
        && tol.lt(k, 1.0)
    {
        region(RegionTag::X3)
    } else {
        Region {
            k: Some(k),
            ..outside
        }
    }
}

fn classify_disc(z: &State, tol: &ToleranceConfig) -> Option<Region> {
    let c = disc_radius(z.rho).max(0.0);
    if c <= tol.eq_tol {
        return (norm(z.m) <= tol.eq_tol).then(|| Region::disc(E_UP));
    }
    let e = add(scale(1.0 / c, z.m), E_UP);
    let r = norm(e);
    if tol.le(r, 1.0) {
        return Some(Region::disc(e));
    }
    // Near the rim the division by c amplifies rounding; fall back to the
    // unscaled distance |m + (0, c)| - c.
    if norm(add(z.m, [0.0, c])) - c <= tol.eq_tol {
        return Some(Region::disc(scale(1.0 / r, e)));
    }
    None
}

/// Distance of `z` from the first-laminate set: `|m - k_bound v|` for
/// `v != 0`, `||m + (0, c)| - c|` for `v = 0`.
pub fn first_laminate_residual(z: &State, tol: &ToleranceConfig) -> f64 {
    if norm(z.v) <= tol.eq_tol {
        let c = disc_radius(z.rho);
        (norm(add(z.m, [0.0, c])) - c).abs()
    } else {
        let b = k_bound(z.rho, z.v);
        norm([z.m[0] - b * z.v[0], z.m[1] - b * z.v[1]])
    }
}
