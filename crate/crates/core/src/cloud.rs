//! Iterative growth of a point cloud inside the lamination hull.
//!
//! Round 0 is a grid on `K`. Round 1 pairs every sampled seed with a
//! partner on `K` whose difference lies in the wave cone and samples the
//! segment between them. Later rounds use directional growth: from a cloud
//! point `z1`, step along a realised wave-cone direction to `z2`, keep `z2`
//! only if it classifies inside the hull and its laminate tree verifies,
//! then sample the segment `[z1, z2]`. Segment samples are never filtered,
//! so classifying them tests the closed-form upper bound.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull::{classify, disc_radius, flux_ratio, is_parallel, k_range, KRangeKind, RegionTag};
use crate::laminate::{decompose_classified, verify_tree};
use crate::state::{
    add, dot, in_wave_cone, norm, norm_sq, random_unit_direction, scale, sub, State,
    ToleranceConfig, Vec2, WaveDirection, E_UP,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CloudConfig {
    /// Points per axis of the `v` grid on `[-v_extent, v_extent]^2`.
    pub grid_resolution: usize,
    pub v_extent: f64,
    pub rounds: usize,
    pub pairs_per_round: usize,
    /// Random convex combinations added per accepted pair.
    pub segment_samples: usize,
    pub seed: u64,
}

impl Default for CloudConfig {
    fn default() -> Self {
        Self {
            grid_resolution: 9,
            v_extent: 2.0,
            rounds: 3,
            pairs_per_round: 20_000,
            segment_samples: 5,
            seed: 42,
        }
    }
}

impl CloudConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_resolution < 2 {
            return Err(Error::Precondition("grid_resolution must be at least 2".into()));
        }
        if !(self.v_extent > 0.0 && self.v_extent.is_finite()) {
            return Err(Error::Precondition("v_extent must be positive and finite".into()));
        }
        Ok(())
    }
}

/// How a point entered the cloud. Indices refer to earlier points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Origin {
    Seed,
    /// A point of `K` whose difference with `of` lies in the wave cone.
    Partner { of: usize },
    /// Directional step from `from`.
    Step { from: usize },
    /// `lambda * first + (1 - lambda) * second`.
    Segment {
        first: usize,
        second: usize,
        lambda: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub round: usize,
    pub origin: Origin,
}

impl Provenance {
    pub fn parents(&self) -> Vec<usize> {
        match self.origin {
            Origin::Seed => vec![],
            Origin::Partner { of } => vec![of],
            Origin::Step { from } => vec![from],
            Origin::Segment { first, second, .. } => vec![first, second],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    pub round: usize,
    pub pairs: usize,
    pub accepted: usize,
    pub points_added: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<State>,
    pub provenance: Vec<Provenance>,
    /// `round_ends[r]` is the number of points after round `r`.
    pub round_ends: Vec<usize>,
    pub stats: Vec<RoundStats>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points present after round `r`.
    pub fn up_to_round(&self, r: usize) -> &[State] {
        let end = self
            .round_ends
            .get(r)
            .copied()
            .unwrap_or(self.points.len());
        &self.points[..end]
    }

    pub fn round_points(&self, r: usize) -> &[State] {
        let start = if r == 0 { 0 } else { self.round_ends[r - 1] };
        &self.points[start..self.round_ends[r]]
    }

    /// Appends a point without provenance checks; for injecting test points.
    pub fn push_external(&mut self, z: State) {
        let round = self.round_ends.len();
        self.points.push(z);
        self.provenance.push(Provenance {
            round,
            origin: Origin::Seed,
        });
    }
}

/// Step proposal families for directional growth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    Density,
    FluxAlongV,
    ShearAlongV,
    ShearKeep,
    DiscDensity,
    DiscFlux,
    DiscShear,
}

const DEDUP_QUANTUM: f64 = 1e-6;

fn dedup_key(z: &State) -> [i64; 5] {
    z.components().map(|c| (c / DEDUP_QUANTUM).round() as i64)
}

struct Builder {
    cloud: PointCloud,
    index: HashMap<[i64; 5], usize>,
}

impl Builder {
    fn insert(&mut self, z: State, prov: Provenance) -> usize {
        let key = dedup_key(&z);
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.cloud.points.len();
        self.cloud.points.push(z);
        self.cloud.provenance.push(prov);
        self.index.insert(key, i);
        i
    }
}

struct PairOutput {
    anchor: usize,
    endpoint: State,
    partner: bool,
    segment: Vec<(f64, State)>,
}

/// Per-pair generator, seeded from `(seed, round, index)` so that results do
/// not depend on scheduling.
fn pair_rng(seed: u64, round: usize, idx: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((round as u64) << 40) ^ idx as u64);
    rng
}

pub fn k_seed_grid(cfg: &CloudConfig) -> Vec<State> {
    let n = cfg.grid_resolution;
    let coord = |i: usize| -cfg.v_extent + 2.0 * cfg.v_extent * i as f64 / (n - 1) as f64;
    let mut out = Vec::with_capacity(2 * n * n);
    for sign in [1.0, -1.0] {
        for j in 0..n {
            for i in 0..n {
                out.push(State::on_k(sign, [coord(i), coord(j)]));
            }
        }
    }
    out
}

pub fn grow_cloud(cfg: &CloudConfig) -> Result<PointCloud> {
    grow_cloud_with_tol(cfg, &ToleranceConfig::default())
}

pub fn grow_cloud_with_tol(cfg: &CloudConfig, tol: &ToleranceConfig) -> Result<PointCloud> {
    cfg.validate()?;
    tol.validate()?;
    let mut b = Builder {
        cloud: PointCloud::default(),
        index: HashMap::new(),
    };
    let seeds = k_seed_grid(cfg);
    for z in &seeds {
        b.insert(
            *z,
            Provenance {
                round: 0,
                origin: Origin::Seed,
            },
        );
    }
    let n_seeds = b.cloud.points.len();
    b.cloud.round_ends.push(n_seeds);
    b.cloud.stats.push(RoundStats {
        round: 0,
        pairs: 0,
        accepted: 0,
        points_added: n_seeds,
    });

    for round in 1..=cfg.rounds {
        let prior = &b.cloud.points;
        let outputs: Vec<Option<PairOutput>> = (0..cfg.pairs_per_round)
            .into_par_iter()
            .map(|idx| {
                let mut rng = pair_rng(cfg.seed, round, idx);
                if round == 1 {
                    partner_pair(&mut rng, prior, n_seeds, cfg.segment_samples, tol)
                } else {
                    directional_pair(&mut rng, prior, cfg.segment_samples, tol)
                }
            })
            .collect();
        let before = b.cloud.points.len();
        let mut accepted = 0;
        for out in outputs.into_iter().flatten() {
            accepted += 1;
            let origin = if out.partner {
                Origin::Partner { of: out.anchor }
            } else {
                Origin::Step { from: out.anchor }
            };
            let second = b.insert(out.endpoint, Provenance { round, origin });
            for (lambda, z) in out.segment {
                b.insert(
                    z,
                    Provenance {
                        round,
                        origin: Origin::Segment {
                            first: out.anchor,
                            second,
                            lambda,
                        },
                    },
                );
            }
        }
        let after = b.cloud.points.len();
        b.cloud.round_ends.push(after);
        b.cloud.stats.push(RoundStats {
            round,
            pairs: cfg.pairs_per_round,
            accepted,
            points_added: after - before,
        });
    }
    Ok(b.cloud)
}

fn random_lambdas<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<f64> {
    (0..count).map(|_| rng.random::<f64>()).collect()
}

/// Partner on `K` for a seed `(sigma, a, sigma a)`: the opposite density
/// `-sigma` with a velocity `b` parallel to `a` (or any `b` on the circle
/// `|b - sigma (0, 1)| = 1` when `a = 0`).
pub fn k_partner<R: Rng + ?Sized>(rng: &mut R, seed: &State, tol: &ToleranceConfig) -> State {
    let sigma = seed.rho.signum();
    let a = seed.v;
    let aa = norm_sq(a);
    let b = if aa.sqrt() <= tol.eq_tol {
        if rng.random_bool(0.25) {
            [0.0, 0.0]
        } else {
            let e = random_unit_direction(rng);
            scale(sigma, add(E_UP, e))
        }
    } else if a[1].abs() <= tol.eq_tol {
        a
    } else {
        scale(1.0 + 2.0 * sigma * a[1] / aa, a)
    };
    State::on_k(-sigma, b)
}

fn partner_pair<R: Rng + ?Sized>(
    rng: &mut R,
    prior: &[State],
    n_seeds: usize,
    samples: usize,
    tol: &ToleranceConfig,
) -> Option<PairOutput> {
    let anchor = rng.random_range(0..n_seeds);
    let z1 = prior[anchor];
    let z2 = k_partner(rng, &z1, tol);
    if !in_wave_cone(&(z1 - z2), tol) {
        return None;
    }
    let mut segment: Vec<(f64, State)> = random_lambdas(rng, samples)
        .into_iter()
        .map(|l| (l, z1.lerp(&z2, l)))
        .collect();
    // Where the segment crosses v = 0 it meets the rim of the disc.
    let aa = norm_sq(z1.v);
    if aa > 0.0 {
        let beta = dot(z2.v, z1.v) / aa;
        if beta < 0.0 {
            let l = -beta / (1.0 - beta);
            let mut z = z1.lerp(&z2, l);
            z.v = [0.0, 0.0];
            segment.push((l, z));
        }
    }
    Some(PairOutput {
        anchor,
        endpoint: z2,
        partner: true,
        segment,
    })
}

fn directional_pair<R: Rng + ?Sized>(
    rng: &mut R,
    prior: &[State],
    samples: usize,
    tol: &ToleranceConfig,
) -> Option<PairOutput> {
    let anchor = rng.random_range(0..prior.len());
    let z1 = prior[anchor];
    let step = propose_step(rng, &z1, tol)?;
    let z2 = z1 + step;
    if !z2.is_finite() || !in_wave_cone(&step, tol) {
        return None;
    }
    let region = classify(&z2, tol);
    if !region.tag.in_hull() {
        return None;
    }
    let tree = decompose_classified(&z2, &region, tol).ok()?;
    if !verify_tree(&tree, tol).pass {
        return None;
    }
    let segment = random_lambdas(rng, samples)
        .into_iter()
        .map(|l| (l, z1.lerp(&z2, l)))
        .collect();
    Some(PairOutput {
        anchor,
        endpoint: z2,
        partner: false,
        segment,
    })
}

fn pick_move<R: Rng + ?Sized>(rng: &mut R, on_disc: bool) -> Move {
    let r: f64 = rng.random();
    if on_disc {
        match r {
            r if r < 0.3 => Move::DiscDensity,
            r if r < 0.6 => Move::DiscFlux,
            _ => Move::DiscShear,
        }
    } else {
        match r {
            r if r < 0.25 => Move::Density,
            r if r < 0.5 => Move::FluxAlongV,
            r if r < 0.85 => Move::ShearAlongV,
            _ => Move::ShearKeep,
        }
    }
}

/// Target `k` at `(rho, v)`: mostly an endpoint or interior point of the
/// admissible interval, sometimes a wild draw that the hull test rejects.
fn propose_k<R: Rng + ?Sized>(rng: &mut R, rho: f64, v: Vec2, tol: &ToleranceConfig) -> f64 {
    let wild = |rng: &mut R| rng.random_range(-3.0..3.0);
    let Ok(range) = k_range(rho, v, tol) else {
        return wild(rng);
    };
    let r: f64 = rng.random();
    match range.kind {
        KRangeKind::Empty => wild(rng),
        KRangeKind::Rigid => {
            if r < 0.8 {
                range.lo
            } else {
                wild(rng)
            }
        }
        KRangeKind::Flexible => match r {
            r if r < 0.25 => range.lo,
            r if r < 0.5 => range.hi,
            r if r < 0.8 => range.lo + (range.hi - range.lo) * rng.random::<f64>(),
            _ => wild(rng),
        },
    }
}

fn realize_scaled(w: WaveDirection, s: f64) -> Option<State> {
    w.realize().ok().map(|d| s * d)
}

/// A wave-cone step from `z` that keeps `m` parallel to `v`.
fn propose_step<R: Rng + ?Sized>(rng: &mut R, z: &State, tol: &ToleranceConfig) -> Option<State> {
    let on_disc = norm(z.v) <= tol.eq_tol;
    if !on_disc && !is_parallel(z.m, z.v, tol) {
        return None;
    }
    let rho2: f64 = rng.random_range(-1.0..=1.0);
    let s = rho2 - z.rho;
    let density = WaveDirection::HorizontalFlux { rho: 1.0, m1: 0.0 };
    match pick_move(rng, on_disc) {
        Move::Density | Move::DiscDensity => realize_scaled(density, s),
        Move::DiscFlux => {
            let e = scale(rng.random::<f64>().sqrt(), random_unit_direction(rng));
            let m2 = scale(disc_radius(z.rho), sub(e, E_UP));
            realize_scaled(WaveDirection::PureFlux { m: sub(m2, z.m) }, 1.0)
        }
        Move::DiscShear => {
            if s.abs() < 1e-9 {
                return None;
            }
            let mm = norm(z.m);
            let u = if mm > tol.eq_tol {
                let dir = scale(1.0 / mm, z.m);
                scale(-2.0 * dir[1], dir)
            } else {
                sub(random_unit_direction(rng), E_UP)
            };
            let uu = norm_sq(u);
            if uu < 1e-12 {
                return None;
            }
            let e = add(u, E_UP);
            let v2 = scale(0.5 * s, u);
            let mu = dot(z.m, u) / uu;
            let k2 = propose_k(rng, rho2, v2, tol);
            let ell = (0.5 * k2 * s - mu) / s;
            realize_scaled(WaveDirection::Sheared { rho: 1.0, e, ell }, s)
        }
        Move::FluxAlongV => {
            let k1 = flux_ratio(z);
            let k2 = propose_k(rng, z.rho, z.v, tol);
            realize_scaled(WaveDirection::PureFlux { m: z.v }, k2 - k1)
        }
        Move::ShearAlongV => {
            if s.abs() < 1e-9 {
                return None;
            }
            let k1 = flux_ratio(z);
            let vv = norm_sq(z.v);
            if z.v[1].abs() <= 1e-12 * vv.sqrt() {
                // horizontal velocity: shift the horizontal flux instead
                let k2 = propose_k(rng, rho2, z.v, tol);
                let m1 = (k2 - k1) * z.v[0] / s;
                return realize_scaled(WaveDirection::HorizontalFlux { rho: 1.0, m1 }, s);
            }
            let t = -2.0 * z.v[1] / vv;
            let e = add(E_UP, scale(t, z.v));
            let alpha = 1.0 + 0.5 * s * t;
            let v2 = scale(alpha, z.v);
            if norm(v2) <= tol.eq_tol {
                return None;
            }
            let k2 = propose_k(rng, rho2, v2, tol);
            let ell = (k2 * alpha - k1) / (s * t);
            realize_scaled(WaveDirection::Sheared { rho: 1.0, e, ell }, s)
        }
        Move::ShearKeep => {
            let e = random_unit_direction(rng);
            let ell = 0.5 * flux_ratio(z);
            realize_scaled(WaveDirection::Sheared { rho: 1.0, e, ell }, s)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub total: usize,
    pub counts: BTreeMap<RegionTag, usize>,
    /// Indices of points classifying outside the hull.
    pub violations: Vec<usize>,
}

pub fn classify_all(points: &[State], tol: &ToleranceConfig) -> Vec<RegionTag> {
    points.par_iter().map(|z| classify(z, tol).tag).collect()
}

pub fn containment_report(points: &[State], tol: &ToleranceConfig) -> ContainmentReport {
    let tags = classify_all(points, tol);
    let mut counts = BTreeMap::new();
    let mut violations = Vec::new();
    for (i, tag) in tags.iter().enumerate() {
        *counts.entry(*tag).or_insert(0) += 1;
        if *tag == RegionTag::Outside {
            violations.push(i);
        }
    }
    ContainmentReport {
        total: points.len(),
        counts,
        violations,
    }
}

/// Empirical range of `k` over cloud points near `(rho, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KCoverage {
    pub count: usize,
    pub k_min: Option<f64>,
    pub k_max: Option<f64>,
}

impl KCoverage {
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn spread(&self) -> f64 {
        match (self.k_min, self.k_max) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        matches!((self.k_min, self.k_max), (Some(a), Some(b)) if a <= lo && b >= hi)
    }
}

/// Points with `|(rho', v') - (rho, v)| <= radius` (Euclidean in the
/// three coordinates), `v' != 0` and `m' || v'` contribute their `k`.
pub fn k_coverage(
    points: &[State],
    rho: f64,
    v: Vec2,
    radius: f64,
    tol: &ToleranceConfig,
) -> Result<KCoverage> {
    if norm(v) <= tol.eq_tol {
        return Err(Error::Precondition("k coverage needs v != 0".into()));
    }
    let mut cov = KCoverage {
        count: 0,
        k_min: None,
        k_max: None,
    };
    for z in points {
        let d = sub(z.v, v);
        let dist = ((z.rho - rho).powi(2) + norm_sq(d)).sqrt();
        if dist > radius || norm(z.v) <= tol.eq_tol || !is_parallel(z.m, z.v, tol) {
            continue;
        }
        let k = flux_ratio(z);
        cov.count += 1;
        cov.k_min = Some(cov.k_min.map_or(k, |x| x.min(k)));
        cov.k_max = Some(cov.k_max.map_or(k, |x| x.max(k)));
    }
    Ok(cov)
}

#[derive(Serialize)]
struct CsvRow {
    rho: f64,
    v1: f64,
    v2: f64,
    m1: f64,
    m2: f64,
    round: usize,
    tag: RegionTag,
    k: Option<f64>,
}

/// Writes the cloud as CSV with columns `rho,v1,v2,m1,m2,round,tag,k`.
pub fn write_csv<W: Write>(cloud: &PointCloud, out: W, tol: &ToleranceConfig) -> Result<()> {
    let regions: Vec<_> = cloud.points.par_iter().map(|z| classify(z, tol)).collect();
    let mut w = csv::Writer::from_writer(out);
    for ((z, prov), region) in cloud.points.iter().zip(&cloud.provenance).zip(&regions) {
        w.serialize(CsvRow {
            rho: z.rho,
            v1: z.v[0],
            v2: z.v[1],
            m1: z.m[0],
            m2: z.m[1],
            round: prov.round,
            tag: region.tag,
            k: region.k,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(rounds: usize) -> CloudConfig {
        CloudConfig {
            grid_resolution: 5,
            rounds,
            pairs_per_round: 2000,
            ..CloudConfig::default()
        }
    }

    #[test]
    fn round_zero_is_the_k_grid() {
        let cloud = grow_cloud(&small(0)).unwrap();
        assert_eq!(cloud.len(), 50);
        let report = containment_report(&cloud.points, &ToleranceConfig::default());
        assert_eq!(report.counts.get(&RegionTag::OnK), Some(&50));
        let cov = k_coverage(&cloud.points, 0.3, [0.5, 0.5], 0.5, &ToleranceConfig::default())
            .unwrap();
        assert!(cov.is_empty());
    }

    #[test]
    fn partners_differ_by_wave_cone_directions() {
        let tol = ToleranceConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for z in k_seed_grid(&CloudConfig::default()) {
            for _ in 0..4 {
                let p = k_partner(&mut rng, &z, &tol);
                assert!(in_wave_cone(&(z - p), &tol), "{z:?} {p:?}");
                assert_eq!(p.rho, -z.rho);
            }
        }
    }

    #[test]
    fn growth_is_monotone_and_contained() {
        let tol = ToleranceConfig::default();
        let cloud = grow_cloud(&small(3)).unwrap();
        assert_eq!(cloud.round_ends.len(), 4);
        assert!(cloud.round_ends.windows(2).all(|w| w[0] <= w[1]));
        for (i, p) in cloud.provenance.iter().enumerate() {
            assert!(p.parents().iter().all(|&j| j < i));
        }
        let report = containment_report(&cloud.points, &tol);
        assert!(report.violations.is_empty(), "{:?}", report.counts);
        assert!(cloud.stats[2].accepted > 0 && cloud.stats[3].accepted > 0);
    }

    #[test]
    fn injected_point_is_a_violation() {
        let tol = ToleranceConfig::default();
        let mut cloud = grow_cloud(&small(0)).unwrap();
        cloud.push_external(State::new(0.0, [1.0, 0.0], [0.0, 1.0]));
        let report = containment_report(&cloud.points, &tol);
        assert_eq!(report.violations, vec![50]);
    }

    #[test]
    fn csv_has_expected_header() {
        let cloud = grow_cloud(&small(1)).unwrap();
        let mut buf = Vec::new();
        write_csv(&cloud, &mut buf, &ToleranceConfig::default()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("rho,v1,v2,m1,m2,round,tag,k\n"));
        assert_eq!(text.lines().count(), cloud.len() + 1);
    }
}
