//! Stream-function discretisation of divergence-free fields on a rectangle.
//!
//! Stream functions live on the `(nx + 1) x (ny + 1)` nodes; densities and
//! derived velocities live on the `nx x ny` cells. Cell velocities are
//! averages of face differences,
//!
//! ```text
//! v1 = [(psi(i,j+1) - psi(i,j)) + (psi(i+1,j+1) - psi(i+1,j))] / (2 dy)
//! v2 = -[(psi(i+1,j) - psi(i,j)) + (psi(i+1,j+1) - psi(i,j+1))] / (2 dx)
//! ```
//!
//! so that face fluxes telescope and every cell has zero net flux. The node
//! curl below is the exact adjoint of this map:
//! `sum_cells v . F dA = sum_nodes psi curl_h(F) dA`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{State, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Stream functions vanish on the whole boundary.
    #[default]
    ImpermeableBox,
    /// Periodic in `x` (first and last node columns equal), stream
    /// functions vanish on the top and bottom rows.
    HorizontalPeriodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    #[serde(rename = "Lx")]
    pub lx: f64,
    #[serde(rename = "Ly")]
    pub ly: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        let g = Self { nx, ny, lx, ly };
        g.validate()?;
        Ok(g)
    }

    pub fn unit_square(n: usize) -> Self {
        Self {
            nx: n,
            ny: n,
            lx: 1.0,
            ly: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::ShapeMismatch("grid needs at least 2 x 2 cells".into()));
        }
        if !(self.lx > 0.0 && self.ly > 0.0 && self.lx.is_finite() && self.ly.is_finite()) {
            return Err(Error::ShapeMismatch("domain lengths must be positive".into()));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn node_position(&self, i: usize, j: usize) -> Vec2 {
        [i as f64 * self.dx(), j as f64 * self.dy()]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Vec2 {
        [(i as f64 + 0.5) * self.dx(), (j as f64 + 0.5) * self.dy()]
    }

    /// Samples `f` at every node.
    pub fn nodal(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.node_count());
        for j in 0..=self.ny {
            for i in 0..=self.nx {
                let [x, y] = self.node_position(i, j);
                out.push(f(x, y));
            }
        }
        out
    }

    /// Samples `f` at every cell centre.
    pub fn cellwise(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.cell_count());
        for j in 0..self.ny {
            for i in 0..self.nx {
                let [x, y] = self.cell_center(i, j);
                out.push(f(x, y));
            }
        }
        out
    }

    /// Cell velocities of a nodal stream function.
    pub fn perp_gradient(&self, psi: &[f64]) -> Vec<Vec2> {
        let (dx, dy) = (self.dx(), self.dy());
        let mut out = Vec::with_capacity(self.cell_count());
        for j in 0..self.ny {
            for i in 0..self.nx {
                let p00 = psi[self.node(i, j)];
                let p10 = psi[self.node(i + 1, j)];
                let p01 = psi[self.node(i, j + 1)];
                let p11 = psi[self.node(i + 1, j + 1)];
                let v1 = ((p01 - p00) + (p11 - p10)) / (2.0 * dy);
                let v2 = -((p10 - p00) + (p11 - p01)) / (2.0 * dx);
                out.push([v1, v2]);
            }
        }
        out
    }

    /// Net outward face flux of a stream-function field divided by the
    /// cell area.
    pub fn stream_divergence(&self, psi: &[f64]) -> Vec<f64> {
        let area = self.cell_area();
        let mut out = Vec::with_capacity(self.cell_count());
        for j in 0..self.ny {
            for i in 0..self.nx {
                let p00 = psi[self.node(i, j)];
                let p10 = psi[self.node(i + 1, j)];
                let p01 = psi[self.node(i, j + 1)];
                let p11 = psi[self.node(i + 1, j + 1)];
                let right = p11 - p10;
                let left = p01 - p00;
                let top = -(p11 - p01);
                let bottom = -(p10 - p00);
                out.push((right - left + top - bottom) / area);
            }
        }
        out
    }

    /// Nodes carrying independent unknowns for the mode: interior nodes for
    /// the box; interior rows without the duplicated last column when
    /// periodic.
    pub fn free_nodes(&self, mode: BoundaryMode) -> Vec<(usize, usize)> {
        let columns = match mode {
            BoundaryMode::ImpermeableBox => 1..self.nx,
            BoundaryMode::HorizontalPeriodic => 0..self.nx,
        };
        (1..self.ny)
            .flat_map(|j| columns.clone().map(move |i| (i, j)))
            .collect()
    }

    /// Discrete `d1 F2 - d2 F1` at each free node from the four surrounding
    /// cells; columns wrap in periodic mode.
    pub fn node_curl(&self, f: &[Vec2], mode: BoundaryMode) -> Vec<((usize, usize), f64)> {
        let (dx, dy) = (self.dx(), self.dy());
        let nx = self.nx;
        self.free_nodes(mode)
            .into_iter()
            .map(|(i, j)| {
                let il = if i == 0 { nx - 1 } else { i - 1 };
                let ir = i % nx;
                let sw = f[self.cell(il, j - 1)];
                let se = f[self.cell(ir, j - 1)];
                let nw = f[self.cell(il, j)];
                let ne = f[self.cell(ir, j)];
                let d1f2 = ((se[1] + ne[1]) - (sw[1] + nw[1])) / (2.0 * dx);
                let d2f1 = ((nw[0] + ne[0]) - (sw[0] + se[0])) / (2.0 * dy);
                ((i, j), d1f2 - d2f1)
            })
            .collect()
    }

    /// `sqrt(sum psi^2 dA)` over the free nodes.
    pub fn node_l2(&self, psi: &[f64], mode: BoundaryMode) -> f64 {
        let area = self.cell_area();
        self.free_nodes(mode)
            .into_iter()
            .map(|(i, j)| psi[self.node(i, j)].powi(2) * area)
            .sum::<f64>()
            .sqrt()
    }

    pub fn check_boundary(&self, psi: &[f64], mode: BoundaryMode, name: &str) -> Result<()> {
        let scale = 1.0 + psi.iter().fold(0.0f64, |a, p| a.max(p.abs()));
        let limit = 1e-12 * scale;
        let bad = |i: usize, j: usize, value: f64| {
            Err(Error::BoundaryViolation(format!(
                "{name} = {value:e} at boundary node ({i}, {j})"
            )))
        };
        for i in 0..=self.nx {
            for j in [0, self.ny] {
                let p = psi[self.node(i, j)];
                if p.abs() > limit {
                    return bad(i, j, p);
                }
            }
        }
        for j in 0..=self.ny {
            let (p0, p1) = (psi[self.node(0, j)], psi[self.node(self.nx, j)]);
            match mode {
                BoundaryMode::ImpermeableBox => {
                    for (i, p) in [(0, p0), (self.nx, p1)] {
                        if p.abs() > limit {
                            return bad(i, j, p);
                        }
                    }
                }
                BoundaryMode::HorizontalPeriodic => {
                    if (p0 - p1).abs() > limit {
                        return Err(Error::BoundaryViolation(format!(
                            "{name} is not periodic in x on row {j}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Flux representation of a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flux {
    /// Nodal stream function; divergence-free by construction.
    Stream(Vec<f64>),
    /// Arbitrary cell values `(m1, m2)`, for time-dependent frames where
    /// `m` carries the density transport.
    Cells(Vec<Vec2>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteField {
    pub grid: Grid,
    pub mode: BoundaryMode,
    pub psi_v: Vec<f64>,
    pub flux: Flux,
    pub rho: Vec<f64>,
}

/// Builds a stationary field from nodal stream functions for `v` and `m`
/// and cell densities.
pub fn build_field(
    grid: Grid,
    psi_v: Vec<f64>,
    psi_m: Vec<f64>,
    rho: Vec<f64>,
    mode: BoundaryMode,
) -> Result<DiscreteField> {
    grid.validate()?;
    if psi_m.len() != grid.node_count() {
        return Err(Error::ShapeMismatch(format!(
            "psi_m has {} values, expected {}",
            psi_m.len(),
            grid.node_count()
        )));
    }
    grid.check_boundary(&psi_m, mode, "psi_m")?;
    build_with_flux(grid, psi_v, Flux::Stream(psi_m), rho, mode)
}

/// Builds a field whose flux is given cellwise.
pub fn build_field_with_cell_flux(
    grid: Grid,
    psi_v: Vec<f64>,
    m: Vec<Vec2>,
    rho: Vec<f64>,
    mode: BoundaryMode,
) -> Result<DiscreteField> {
    grid.validate()?;
    if m.len() != grid.cell_count() {
        return Err(Error::ShapeMismatch(format!(
            "m has {} cells, expected {}",
            m.len(),
            grid.cell_count()
        )));
    }
    build_with_flux(grid, psi_v, Flux::Cells(m), rho, mode)
}

fn build_with_flux(
    grid: Grid,
    psi_v: Vec<f64>,
    flux: Flux,
    rho: Vec<f64>,
    mode: BoundaryMode,
) -> Result<DiscreteField> {
    if psi_v.len() != grid.node_count() {
        return Err(Error::ShapeMismatch(format!(
            "psi_v has {} values, expected {}",
            psi_v.len(),
            grid.node_count()
        )));
    }
    if rho.len() != grid.cell_count() {
        return Err(Error::ShapeMismatch(format!(
            "rho has {} values, expected {}",
            rho.len(),
            grid.cell_count()
        )));
    }
    grid.check_boundary(&psi_v, mode, "psi_v")?;
    let finite = psi_v.iter().chain(&rho).all(|x| x.is_finite())
        && match &flux {
            Flux::Stream(p) => p.iter().all(|x| x.is_finite()),
            Flux::Cells(m) => m.iter().flatten().all(|x| x.is_finite()),
        };
    if !finite {
        return Err(Error::Precondition("field values must be finite".into()));
    }
    if let Some((c, r)) = rho
        .iter()
        .enumerate()
        .find(|(_, r)| r.abs() > 1.0 + crate::state::DEFAULT_EQ_TOL)
    {
        return Err(Error::Precondition(format!(
            "|rho| = {} exceeds 1 in cell {c}",
            r.abs()
        )));
    }
    Ok(DiscreteField {
        grid,
        mode,
        psi_v,
        flux,
        rho,
    })
}

impl DiscreteField {
    pub fn velocity(&self) -> Vec<Vec2> {
        self.grid.perp_gradient(&self.psi_v)
    }

    pub fn flux_cells(&self) -> Vec<Vec2> {
        match &self.flux {
            Flux::Stream(psi) => self.grid.perp_gradient(psi),
            Flux::Cells(m) => m.clone(),
        }
    }

    /// Cell states `(rho, v, m)` in cell order.
    pub fn states(&self) -> Vec<State> {
        let v = self.velocity();
        let m = self.flux_cells();
        self.rho
            .iter()
            .zip(v.iter().zip(&m))
            .map(|(&rho, (&v, &m))| State::new(rho, v, m))
            .collect()
    }

    /// Largest absolute cellwise divergence of `v` and of `m` (the latter
    /// only for stream-function fluxes).
    pub fn max_divergence(&self) -> (f64, Option<f64>) {
        let max_abs = |d: Vec<f64>| d.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let dv = max_abs(self.grid.stream_divergence(&self.psi_v));
        let dm = match &self.flux {
            Flux::Stream(psi) => Some(max_abs(self.grid.stream_divergence(psi))),
            Flux::Cells(_) => None,
        };
        (dv, dm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bump(g: &Grid) -> Vec<f64> {
        g.nodal(|x, y| (PI * x / g.lx).sin().powi(2) * (PI * y / g.ly).sin().powi(2))
    }

    #[test]
    fn trivial_field_builds_with_zero_velocity() {
        let g = Grid::unit_square(8);
        let zero = vec![0.0; g.node_count()];
        let f = build_field(g, zero.clone(), zero, g.cellwise(|_, y| 2.0 * y - 1.0), BoundaryMode::ImpermeableBox)
            .unwrap();
        assert!(f.velocity().iter().all(|v| *v == [0.0, 0.0]));
    }

    #[test]
    fn bump_is_divergence_free() {
        let g = Grid::new(16, 12, 2.0, 1.0).unwrap();
        let f = build_field(
            g,
            bump(&g),
            vec![0.0; g.node_count()],
            vec![1.0; g.cell_count()],
            BoundaryMode::ImpermeableBox,
        )
        .unwrap();
        assert!(f.velocity().iter().any(|v| v[0].abs() > 1e-3));
        let (dv, dm) = f.max_divergence();
        assert!(dv <= 1e-12 && dm.unwrap() <= 1e-12);
    }

    #[test]
    fn build_rejects_bad_input() {
        let g = Grid::unit_square(4);
        let n = g.node_count();
        let c = g.cell_count();
        let mut psi = vec![0.0; n];
        psi[g.node(0, 2)] = 0.1;
        let err = build_field(g, psi, vec![0.0; n], vec![0.0; c], BoundaryMode::ImpermeableBox);
        assert!(matches!(err, Err(Error::BoundaryViolation(_))));
        let err = build_field(g, vec![0.0; n - 1], vec![0.0; n], vec![0.0; c], BoundaryMode::ImpermeableBox);
        assert!(matches!(err, Err(Error::ShapeMismatch(_))));
        let err = build_field(g, vec![0.0; n], vec![0.0; n], vec![1.5; c], BoundaryMode::ImpermeableBox);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn periodic_boundary_accepts_x_independent_stream() {
        let g = Grid::unit_square(8);
        let psi = g.nodal(|_, y| (PI * y).sin());
        assert!(g.check_boundary(&psi, BoundaryMode::HorizontalPeriodic, "psi").is_ok());
        assert!(g.check_boundary(&psi, BoundaryMode::ImpermeableBox, "psi").is_err());
    }

    #[test]
    fn curl_is_adjoint_to_perp_gradient() {
        // sum_cells v . F dA == sum_nodes psi curl_h(F) dA for arbitrary F.
        for mode in [BoundaryMode::ImpermeableBox, BoundaryMode::HorizontalPeriodic] {
            let g = Grid::new(7, 5, 1.3, 0.7).unwrap();
            let psi = match mode {
                BoundaryMode::ImpermeableBox => bump(&g),
                BoundaryMode::HorizontalPeriodic => {
                    g.nodal(|x, y| (PI * y / g.ly).sin() * (1.0 + 0.3 * (2.0 * PI * x / g.lx).cos()))
                }
            };
            let v = g.perp_gradient(&psi);
            let f: Vec<Vec2> = (0..g.cell_count())
                .map(|c| [(c as f64 * 0.37).sin(), (c as f64 * 0.11).cos()])
                .collect();
            let lhs: f64 = v.iter().zip(&f).map(|(a, b)| a[0] * b[0] + a[1] * b[1]).sum::<f64>()
                * g.cell_area();
            let rhs: f64 = g
                .node_curl(&f, mode)
                .into_iter()
                .map(|((i, j), c)| psi[g.node(i, j)] * c)
                .sum::<f64>()
                * g.cell_area();
            assert!((lhs - rhs).abs() < 1e-12, "{mode:?}: {lhs} vs {rhs}");
        }
    }
}
