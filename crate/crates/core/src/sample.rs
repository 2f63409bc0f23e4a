//! Seeded samplers for hull regions, used by the property suites and the
//! growth driver.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::hull::{disc_point, k_range, KRangeKind, RegionTag};
use crate::state::{scale, State, ToleranceConfig, Vec2};

pub const ANNULUS_INNER: f64 = 0.1;
pub const ANNULUS_OUTER: f64 = 2.0;

/// What to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    OnK,
    /// `v = 0`, `e` uniform in the unit disc.
    DiscInterior,
    /// `v = 0`, `e` uniform on the unit circle.
    DiscRim,
    /// Upper cone, `k` uniform in `[1, k_bound]`.
    UpperCone,
    /// Rigid region, `k = k_bound`.
    Rigid,
    /// Lower cone, `k` uniform in `[k_bound, -1]`.
    LowerCone,
}

impl SampleKind {
    pub const ALL: [SampleKind; 6] = [
        SampleKind::OnK,
        SampleKind::DiscInterior,
        SampleKind::DiscRim,
        SampleKind::UpperCone,
        SampleKind::Rigid,
        SampleKind::LowerCone,
    ];

    /// Region tag the sample is expected to classify as.
    pub fn expected_tag(self) -> RegionTag {
        match self {
            SampleKind::OnK => RegionTag::OnK,
            SampleKind::DiscInterior | SampleKind::DiscRim => RegionTag::X1,
            SampleKind::UpperCone => RegionTag::X2,
            SampleKind::Rigid => RegionTag::X3,
            SampleKind::LowerCone => RegionTag::X4,
        }
    }
}

/// `v` uniform in the annulus `ANNULUS_INNER <= |v| <= ANNULUS_OUTER`.
pub fn annulus_velocity<R: Rng + ?Sized>(rng: &mut R) -> Vec2 {
    let (a, b) = (ANNULUS_INNER * ANNULUS_INNER, ANNULUS_OUTER * ANNULUS_OUTER);
    let r = rng.random_range(a..b).sqrt();
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    [r * theta.cos(), r * theta.sin()]
}

fn unit_circle<R: Rng + ?Sized>(rng: &mut R) -> Vec2 {
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    [theta.cos(), theta.sin()]
}

/// `rho` uniform on `[-1, 1]`, `v` in the annulus, rejection on the region
/// condition, `k` uniform in the admissible interval.
pub fn sample<R: Rng + ?Sized>(rng: &mut R, kind: SampleKind) -> State {
    let tol = ToleranceConfig::default();
    match kind {
        SampleKind::OnK => {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            State::on_k(sign, annulus_velocity(rng))
        }
        SampleKind::DiscInterior => {
            let rho = rng.random_range(-1.0..=1.0);
            let e = scale(rng.random::<f64>().sqrt(), unit_circle(rng));
            disc_point(rho, e)
        }
        SampleKind::DiscRim => {
            let rho = rng.random_range(-1.0..=1.0);
            disc_point(rho, unit_circle(rng))
        }
        SampleKind::UpperCone | SampleKind::Rigid | SampleKind::LowerCone => loop {
            let rho: f64 = rng.random_range(-1.0..=1.0);
            let v = annulus_velocity(rng);
            let Ok(range) = k_range(rho, v, &tol) else {
                continue;
            };
            let wanted = match kind {
                SampleKind::UpperCone => range.kind == KRangeKind::Flexible && range.lo == 1.0,
                SampleKind::LowerCone => range.kind == KRangeKind::Flexible && range.hi == -1.0,
                _ => range.kind == KRangeKind::Rigid && rho.abs() < 1.0,
            };
            if !wanted {
                continue;
            }
            let k = if range.hi > range.lo {
                rng.random_range(range.lo..=range.hi)
            } else {
                range.lo
            };
            return State::new(rho, v, scale(k, v));
        },
    }
}

/// Draws a sample whose `k` sits exactly on an endpoint of its interval.
/// Only meaningful for the cone kinds; other kinds fall back to [`sample`].
pub fn sample_endpoint<R: Rng + ?Sized>(rng: &mut R, kind: SampleKind, upper_end: bool) -> State {
    let z = sample(rng, kind);
    let tol = ToleranceConfig::default();
    match (kind, k_range(z.rho, z.v, &tol)) {
        (SampleKind::UpperCone | SampleKind::LowerCone, Ok(range)) => {
            let k = if upper_end { range.hi } else { range.lo };
            State::new(z.rho, z.v, scale(k, z.v))
        }
        _ => z,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::classify;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_land_in_their_region() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tol = ToleranceConfig::default();
        for kind in SampleKind::ALL {
            for _ in 0..200 {
                let z = sample(&mut rng, kind);
                assert_eq!(classify(&z, &tol).tag, kind.expected_tag(), "{kind:?} {z:?}");
            }
        }
    }
}
