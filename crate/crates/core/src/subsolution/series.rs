//! Time series of fields and the infinite-time energy bound.
//!
//! With `F(t) = int rho(x, t) x2 dx`, transport `d/dt rho + div m = 0` and
//! impermeable walls give `F(t) = F(0) + int_0^t int m2`. Combined with the
//! energy identity this yields
//! `int_0^T int |v|^2 <= int rho0 x2 + sup|rho| int |x2|`.

use serde::{Deserialize, Serialize};

use super::field::DiscreteField;
use crate::error::{Error, Result};
use crate::separators::Separator;
use crate::state::{norm_sq, ToleranceConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub frames: Vec<DiscreteField>,
    /// Initial density on the cells; the reconstruction of `F` starts from
    /// it at the first frame time.
    pub rho0: Vec<f64>,
}

impl TimeSeries {
    /// `rho0` defaults to the density of the first frame.
    pub fn new(times: Vec<f64>, frames: Vec<DiscreteField>, rho0: Option<Vec<f64>>) -> Result<Self> {
        let first = frames.first().ok_or(Error::EmptySeries)?;
        if times.len() != frames.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} times for {} frames",
                times.len(),
                frames.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition("times must be finite and strictly increasing".into()));
        }
        let grid = first.grid;
        if frames.iter().any(|f| f.grid != grid || f.mode != first.mode) {
            return Err(Error::ShapeMismatch("frames must share grid and boundary mode".into()));
        }
        let rho0 = rho0.unwrap_or_else(|| first.rho.clone());
        if rho0.len() != grid.cell_count() {
            return Err(Error::ShapeMismatch("rho0 does not match the grid".into()));
        }
        Ok(Self {
            times,
            frames,
            rho0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FSample {
    pub t: f64,
    /// `int rho x2` by midpoint quadrature.
    pub direct: f64,
    /// `int rho0 x2 + int_{t0}^t int m2`, trapezoid rule in time.
    pub reconstructed: f64,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FReport {
    pub samples: Vec<FSample>,
    pub max_discrepancy: f64,
}

fn height_moment(field: &DiscreteField, rho: &[f64]) -> f64 {
    let g = &field.grid;
    let da = g.cell_area();
    let mut sum = 0.0;
    for j in 0..g.ny {
        let y = g.cell_center(0, j)[1];
        for i in 0..g.nx {
            sum += rho[g.cell(i, j)] * y * da;
        }
    }
    sum
}

fn vertical_flux(field: &DiscreteField) -> f64 {
    let da = field.grid.cell_area();
    field.flux_cells().iter().map(|m| m[1] * da).sum()
}

fn trapezoid_running(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(values.len());
    out.push(0.0);
    for n in 1..values.len() {
        acc += 0.5 * (times[n] - times[n - 1]) * (values[n] + values[n - 1]);
        out.push(acc);
    }
    out
}

pub fn f_of_t(series: &TimeSeries) -> Result<FReport> {
    let first = series.frames.first().ok_or(Error::EmptySeries)?;
    let base = height_moment(first, &series.rho0);
    let fluxes: Vec<f64> = series.frames.iter().map(vertical_flux).collect();
    let integrated = trapezoid_running(&series.times, &fluxes);
    let samples: Vec<FSample> = series
        .frames
        .iter()
        .zip(&series.times)
        .zip(&integrated)
        .map(|((frame, &t), &acc)| {
            let direct = height_moment(frame, &frame.rho);
            let reconstructed = base + acc;
            FSample {
                t,
                direct,
                reconstructed,
                discrepancy: (direct - reconstructed).abs(),
            }
        })
        .collect();
    let max_discrepancy = samples.iter().fold(0.0f64, |a, s| a.max(s.discrepancy));
    Ok(FReport {
        samples,
        max_discrepancy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeBoundReport {
    /// `int_{t0}^{T} int |v|^2`, trapezoid rule in time.
    pub lhs: f64,
    /// `int rho0 x2 + rho_bound * int |x2|` with `rho_bound = 1`, the bound
    /// on `|rho|` implied by membership in the non-stationary hull.
    pub rhs: f64,
    pub initial_moment: f64,
    pub height_moment: f64,
    pub rho_bound: f64,
    /// Largest `|rho|` observed over all frames.
    pub observed_rho_sup: f64,
    /// The right-hand side with `observed_rho_sup` in place of `rho_bound`.
    pub rhs_observed: f64,
    pub pass: bool,
}

/// Checks every cell of every frame against `G1 <= eq_tol`.
pub fn check_frames(series: &TimeSeries, tol: &ToleranceConfig) -> Result<()> {
    for (n, frame) in series.frames.iter().enumerate() {
        let g = &frame.grid;
        for (c, z) in frame.states().iter().enumerate() {
            let excess = Separator::G1.evaluate(z);
            if !(excess <= tol.eq_tol) {
                return Err(Error::FrameOutsideHull {
                    frame: n,
                    i: c % g.nx,
                    j: c / g.nx,
                    excess,
                });
            }
        }
    }
    Ok(())
}

pub fn infinite_time_bound(series: &TimeSeries, tol: &ToleranceConfig) -> Result<TimeBoundReport> {
    let first = series.frames.first().ok_or(Error::EmptySeries)?;
    check_frames(series, tol)?;
    let g = first.grid;
    let da = g.cell_area();
    let energies: Vec<f64> = series
        .frames
        .iter()
        .map(|f| f.velocity().iter().map(|v| norm_sq(*v) * da).sum())
        .collect();
    let lhs = *trapezoid_running(&series.times, &energies)
        .last()
        .expect("non-empty");
    let initial_moment = height_moment(first, &series.rho0);
    let height_moment: f64 = (0..g.ny)
        .map(|j| g.cell_center(0, j)[1].abs() * da * g.nx as f64)
        .sum();
    let observed_rho_sup = series
        .frames
        .iter()
        .flat_map(|f| f.rho.iter())
        .chain(&series.rho0)
        .fold(0.0f64, |a, r| a.max(r.abs()));
    let rho_bound = 1.0;
    let rhs = initial_moment + rho_bound * height_moment;
    let rhs_observed = initial_moment + observed_rho_sup * height_moment;
    let quadrature_tol = tol.eq_tol * (1.0 + rhs.abs());
    Ok(TimeBoundReport {
        lhs,
        rhs,
        initial_moment,
        height_moment,
        rho_bound,
        observed_rho_sup,
        rhs_observed,
        pass: lhs <= rhs + quadrature_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subsolution::field::{build_field, build_field_with_cell_flux, BoundaryMode, Grid};

    fn trivial(g: Grid) -> DiscreteField {
        let zero = vec![0.0; g.node_count()];
        build_field(g, zero.clone(), zero, g.cellwise(|_, y| y), BoundaryMode::ImpermeableBox).unwrap()
    }

    #[test]
    fn constant_series_has_constant_moment() {
        let g = Grid::unit_square(32);
        let s = TimeSeries::new(vec![0.0, 0.5, 1.0], vec![trivial(g); 3], None).unwrap();
        let r = f_of_t(&s).unwrap();
        for sample in &r.samples {
            assert!((sample.direct - 1.0 / 3.0).abs() < 1e-3);
            assert_eq!(sample.discrepancy, 0.0);
        }
    }

    #[test]
    fn single_frame_and_empty() {
        let g = Grid::unit_square(8);
        let s = TimeSeries::new(vec![0.0], vec![trivial(g)], None).unwrap();
        let r = f_of_t(&s).unwrap();
        assert_eq!(r.samples.len(), 1);
        assert_eq!(r.samples[0].reconstructed, r.samples[0].direct);
        assert!(matches!(TimeSeries::new(vec![], vec![], None), Err(Error::EmptySeries)));
    }

    #[test]
    fn trivial_series_bound() {
        let g = Grid::unit_square(32);
        let s = TimeSeries::new(vec![0.0, 1.0], vec![trivial(g); 2], None).unwrap();
        let r = infinite_time_bound(&s, &ToleranceConfig::default()).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!((r.rhs - 5.0 / 6.0).abs() < 1e-3, "{r:?}");
        assert!(r.pass);
    }

    #[test]
    fn frame_outside_hull_is_reported() {
        let g = Grid::unit_square(8);
        let zero = vec![0.0; g.node_count()];
        let mut m = vec![[0.0, 0.0]; g.cell_count()];
        m[g.cell(3, 2)] = [0.0, 0.4];
        let bad = build_field_with_cell_flux(g, zero, m, vec![0.0; g.cell_count()], BoundaryMode::ImpermeableBox)
            .unwrap();
        let s = TimeSeries::new(vec![0.0, 1.0], vec![trivial(g), bad], None).unwrap();
        match infinite_time_bound(&s, &ToleranceConfig::default()) {
            Err(Error::FrameOutsideHull { frame, i, j, .. }) => assert_eq!((frame, i, j), (1, 3, 2)),
            other => panic!("{other:?}"),
        }
    }
}
