//! Audit of the stationary energy identity for a discrete field.
//!
//! For a stationary subsolution, `int |v|^2 = -int rho v2`, and since
//! `int m2 = 0` this equals `int (m2 - rho v2)`. On each hull region the
//! integrand is bounded above by a non-positive quantity:
//!
//! * disc (`v = 0`): `m2 = c (e2 - 1)`,
//! * upper cone: `(k - rho) v2 <= (1 - rho) v2`,
//! * lower cone: `(k - rho) v2 <= -(1 + rho) v2`,
//! * rigid region: `(k_bound - rho) v2 = -(1 - rho^2) v2^2 / |v|^2`,
//!
//! which forces `v = 0`. On the grid the identity holds up to
//! `<psi_v, curl_h(v + (0, rho))>`, bounded by `|psi_v|_L2 * curl_residual`.

use serde::{Deserialize, Serialize};

use super::field::DiscreteField;
use crate::hull::{classify, disc_radius, RegionTag};
use crate::state::{norm_sq, State, ToleranceConfig};

/// Integrals of the energy chain, one per hull region.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainTerms {
    /// `int_{X1} ((1 - rho^2)/2)(e2 - 1)`, non-positive.
    pub disc: f64,
    /// `int_{X2} (1 - rho) v2`, non-positive.
    pub upper_cone: f64,
    /// `int_{X4} (1 + rho) v2`, non-negative.
    pub lower_cone: f64,
    /// `int_{X3} (1 - rho^2) v2^2 / |v|^2`, non-negative.
    pub rigid: f64,
    /// `int m2`, zero for impermeable stream-function fluxes.
    pub flux: f64,
    /// `int rho v2`.
    pub density_work: f64,
}

impl ChainTerms {
    /// `disc + upper_cone - lower_cone - rigid`, the upper bound for
    /// `int (m2 - rho v2)` over hull cells.
    pub fn chain_upper(&self) -> f64 {
        self.disc + self.upper_cone - self.lower_cone - self.rigid
    }
}

/// Contributions to the certified bound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    /// `stability_constant * curl_residual`.
    pub curl: f64,
    /// `|int m2|`.
    pub flux: f64,
    /// `max(0, chain_upper)`.
    pub chain: f64,
    /// `int_{Outside} |m2 - rho v2|`.
    pub outside: f64,
    /// Integrated excess of `m2 - rho v2` over the region bound on hull
    /// cells (non-zero only through tolerance at region boundaries).
    pub region_slack: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub on_k: usize,
    pub x1: usize,
    pub x2: usize,
    pub x3: usize,
    pub x4: usize,
    pub outside: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Fraction of cells classified outside the hull.
    pub hull_violation_measure: f64,
    /// Discrete L2 norm of `curl(v + (0, rho))` over the free nodes.
    pub curl_residual: f64,
    pub max_divergence_v: f64,
    pub max_divergence_m: f64,
    pub chain_terms: ChainTerms,
    pub cells: CellCounts,
    pub v_energy: f64,
    /// `sqrt(sum psi_v^2 dA)`, multiplying `curl_residual` in the bound.
    pub stability_constant: f64,
    pub bound_terms: BoundTerms,
    pub certified_bound: f64,
    /// No outside cells, zero curl residual (to tolerance) and the chain
    /// signs hold.
    pub clean: bool,
    pub flags: Vec<String>,
    pub pass: bool,
}

pub fn audit_stationary(field: &DiscreteField, tol: &ToleranceConfig) -> AuditReport {
    let grid = &field.grid;
    let da = grid.cell_area();
    let states = field.states();

    let mut terms = ChainTerms::default();
    let mut counts = CellCounts::default();
    let mut bounds = BoundTerms::default();
    let mut v_energy = 0.0;
    for z in &states {
        let State { rho, v, m } = *z;
        v_energy += norm_sq(v) * da;
        terms.flux += m[1] * da;
        terms.density_work += rho * v[1] * da;
        let defect = m[1] - rho * v[1];
        let region = classify(z, tol);
        // bound for the integrand m2 - rho v2 on this cell
        let bound = match region.tag {
            RegionTag::Outside => {
                counts.outside += 1;
                bounds.outside += defect.abs() * da;
                continue;
            }
            RegionTag::OnK => {
                counts.on_k += 1;
                0.0
            }
            RegionTag::X1 => {
                counts.x1 += 1;
                let e = region.e.expect("X1 carries e");
                let b = disc_radius(rho) * (e[1] - 1.0);
                terms.disc += b * da;
                b
            }
            RegionTag::X2 => {
                counts.x2 += 1;
                let b = (1.0 - rho) * v[1];
                terms.upper_cone += b * da;
                b
            }
            RegionTag::X4 => {
                counts.x4 += 1;
                let b = (1.0 + rho) * v[1];
                terms.lower_cone += b * da;
                -b
            }
            RegionTag::X3 => {
                counts.x3 += 1;
                let b = (1.0 - rho * rho) * v[1] * v[1] / norm_sq(v);
                terms.rigid += b * da;
                -b
            }
        };
        bounds.region_slack += (defect - bound).max(0.0) * da;
    }

    let f: Vec<_> = states.iter().map(|z| [z.v[0], z.v[1] + z.rho]).collect();
    let curl_residual = grid
        .node_curl(&f, field.mode)
        .iter()
        .map(|(_, c)| c * c * da)
        .sum::<f64>()
        .sqrt();
    let stability_constant = grid.node_l2(&field.psi_v, field.mode);

    bounds.curl = stability_constant * curl_residual;
    bounds.flux = terms.flux.abs();
    bounds.chain = terms.chain_upper().max(0.0);
    let certified_bound =
        bounds.curl + bounds.flux + bounds.chain + bounds.outside + bounds.region_slack;

    let hull_violation_measure = counts.outside as f64 / states.len() as f64;
    let (dv, dm) = field.max_divergence();
    let sign_slack = tol.eq_tol * grid.area();
    let signs_ok = terms.disc <= sign_slack
        && terms.upper_cone <= sign_slack
        && terms.lower_cone >= -sign_slack
        && terms.rigid >= -sign_slack;

    let mut flags = Vec::new();
    if counts.outside > 0 {
        flags.push("hull_violation".to_string());
    }
    if curl_residual > tol.eq_tol {
        flags.push("curl_residual".to_string());
    }
    if !signs_ok {
        flags.push("chain_sign".to_string());
    }
    if terms.flux.abs() > tol.eq_tol {
        flags.push("flux_mean".to_string());
    }
    let clean = flags.is_empty();
    let pass = v_energy <= certified_bound + tol.eq_tol * (1.0 + certified_bound);

    AuditReport {
        hull_violation_measure,
        curl_residual,
        max_divergence_v: dv,
        max_divergence_m: dm.unwrap_or(f64::NAN),
        chain_terms: terms,
        cells: counts,
        v_energy,
        stability_constant,
        bound_terms: bounds,
        certified_bound,
        clean,
        flags,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subsolution::field::{build_field, BoundaryMode, Grid};
    use std::f64::consts::PI;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn trivial_family_is_clean() {
        for n in [8, 16] {
            let g = Grid::unit_square(n);
            let zero = vec![0.0; g.node_count()];
            let f = build_field(
                g,
                zero.clone(),
                zero,
                g.cellwise(|_, y| (3.0 * y).cos()),
                BoundaryMode::ImpermeableBox,
            )
            .unwrap();
            let r = audit_stationary(&f, &tol());
            assert!(r.pass && r.clean, "{r:?}");
            assert_eq!(r.v_energy, 0.0);
            assert_eq!(r.certified_bound, 0.0);
        }
    }

    #[test]
    fn rotational_flow_is_flagged_by_curl() {
        let g = Grid::unit_square(16);
        let psi = g.nodal(|x, y| (PI * x).sin() * (PI * y).sin());
        let f = build_field(
            g,
            psi.clone(),
            psi,
            vec![1.0; g.cell_count()],
            BoundaryMode::ImpermeableBox,
        )
        .unwrap();
        let r = audit_stationary(&f, &tol());
        assert!(r.curl_residual > 1.0, "{r:?}");
        assert_eq!(r.hull_violation_measure, 0.0);
        assert!(r.v_energy > 0.0 && r.pass && !r.clean);
        assert!(r.flags.contains(&"curl_residual".to_string()));
    }

    #[test]
    fn energy_identity_is_exact_up_to_curl_term() {
        // E + int rho v2 = <psi, curl_h F>, so E <= bound even for arbitrary data.
        let g = Grid::new(12, 10, 1.0, 2.0).unwrap();
        let psi = g.nodal(|x, y| (PI * x).sin() * (PI * y / 2.0).sin() * (1.0 + x * y));
        let f = build_field(
            g,
            psi,
            vec![0.0; g.node_count()],
            g.cellwise(|x, y| 0.5 * (x - y).sin()),
            BoundaryMode::ImpermeableBox,
        )
        .unwrap();
        let r = audit_stationary(&f, &tol());
        assert!(r.pass, "{r:?}");
    }
}
