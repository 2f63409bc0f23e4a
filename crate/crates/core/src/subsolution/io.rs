//! Text format for fields and series: one JSON header line
//! `{"nx", "ny", "Lx", "Ly", "boundary_mode", "times"?}` followed by CSV
//! rows `frame,field,i,j,value`.
//!
//! Nodal fields are `psi_v` and `psi_m` (`0 <= i <= nx`, `0 <= j <= ny`);
//! cell fields are `rho`, `m1`, `m2` and the series-level `rho0`
//! (`0 <= i < nx`, `0 <= j < ny`). A frame with `m1`/`m2` rows instead of
//! `psi_m` carries a cellwise flux; a frame with neither has `m = 0`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::field::{
    build_field, build_field_with_cell_flux, BoundaryMode, DiscreteField, Flux, Grid,
};
use super::series::TimeSeries;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub nx: usize,
    pub ny: usize,
    #[serde(rename = "Lx")]
    pub lx: f64,
    #[serde(rename = "Ly")]
    pub ly: f64,
    #[serde(default)]
    pub boundary_mode: BoundaryMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

impl Header {
    fn grid(&self) -> Result<Grid> {
        Grid::new(self.nx, self.ny, self.lx, self.ly)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    frame: usize,
    field: String,
    i: usize,
    j: usize,
    value: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Layout {
    Nodes,
    Cells,
}

fn layout(field: &str) -> Result<Layout> {
    match field {
        "psi_v" | "psi_m" => Ok(Layout::Nodes),
        "rho" | "m1" | "m2" | "rho0" => Ok(Layout::Cells),
        other => Err(Error::Parse(format!("unknown field {other:?}"))),
    }
}

type Frames = BTreeMap<usize, BTreeMap<String, Vec<f64>>>;

fn parse(input: &str) -> Result<(Header, Grid, Frames)> {
    let (first, rest) = input.split_once('\n').unwrap_or((input, ""));
    let header: Header = serde_json::from_str(first.trim())
        .map_err(|e| Error::Parse(format!("header: {e}")))?;
    let grid = header.grid()?;
    let mut frames: Frames = BTreeMap::new();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(rest.as_bytes());
    for row in reader.deserialize() {
        let row: Row = row.map_err(|e| Error::Parse(format!("row: {e}")))?;
        let (w, h, idx) = match layout(&row.field)? {
            Layout::Nodes => (grid.nx + 1, grid.ny + 1, grid.node(row.i, row.j)),
            Layout::Cells => (grid.nx, grid.ny, grid.cell(row.i, row.j)),
        };
        if row.i >= w || row.j >= h {
            return Err(Error::ShapeMismatch(format!(
                "{} index ({}, {}) out of range",
                row.field, row.i, row.j
            )));
        }
        let values = frames
            .entry(row.frame)
            .or_default()
            .entry(row.field.clone())
            .or_insert_with(|| vec![f64::NAN; w * h]);
        values[idx] = row.value;
    }
    for (frame, fields) in &frames {
        for (name, values) in fields {
            if values.iter().any(|v| v.is_nan()) {
                return Err(Error::ShapeMismatch(format!(
                    "frame {frame}: field {name} is incomplete"
                )));
            }
        }
    }
    Ok((header, grid, frames))
}

fn frame_field(
    grid: Grid,
    mode: BoundaryMode,
    frame: usize,
    mut fields: BTreeMap<String, Vec<f64>>,
) -> Result<DiscreteField> {
    let missing = |name: &str| Error::ShapeMismatch(format!("frame {frame}: missing {name}"));
    let psi_v = fields.remove("psi_v").ok_or_else(|| missing("psi_v"))?;
    let rho = fields.remove("rho").ok_or_else(|| missing("rho"))?;
    match (fields.remove("psi_m"), fields.remove("m1"), fields.remove("m2")) {
        (Some(psi_m), None, None) => build_field(grid, psi_v, psi_m, rho, mode),
        (None, Some(m1), Some(m2)) => {
            let m = m1.into_iter().zip(m2).map(|(a, b)| [a, b]).collect();
            build_field_with_cell_flux(grid, psi_v, m, rho, mode)
        }
        (None, None, None) => build_field(grid, psi_v, vec![0.0; grid.node_count()], rho, mode),
        _ => Err(Error::Parse(format!(
            "frame {frame}: give either psi_m or both m1 and m2"
        ))),
    }
}

pub fn read_field<R: Read>(mut reader: R) -> Result<DiscreteField> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let (header, grid, mut frames) = parse(&text)?;
    if frames.len() != 1 || !frames.contains_key(&0) {
        return Err(Error::Parse("a single field must use frame 0 only".into()));
    }
    let fields = frames.remove(&0).expect("frame 0");
    frame_field(grid, header.boundary_mode, 0, fields)
}

pub fn read_series<R: Read>(mut reader: R) -> Result<TimeSeries> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let (header, grid, frames) = parse(&text)?;
    let times = header
        .times
        .clone()
        .ok_or_else(|| Error::Parse("series header needs \"times\"".into()))?;
    if times.is_empty() {
        return Err(Error::EmptySeries);
    }
    let expected: Vec<usize> = (0..times.len()).collect();
    if frames.keys().copied().collect::<Vec<_>>() != expected {
        return Err(Error::ShapeMismatch(format!(
            "expected frames 0..{}, found {:?}",
            times.len(),
            frames.keys().collect::<Vec<_>>()
        )));
    }
    let mut rho0 = None;
    let mut fields_out = Vec::with_capacity(times.len());
    for (n, mut fields) in frames {
        if let Some(r) = fields.remove("rho0") {
            if n != 0 {
                return Err(Error::Parse("rho0 belongs to frame 0".into()));
            }
            rho0 = Some(r);
        }
        fields_out.push(frame_field(grid, header.boundary_mode, n, fields)?);
    }
    TimeSeries::new(times, fields_out, rho0)
}

fn write_rows<W: Write>(w: &mut csv::Writer<W>, frame: usize, field: &DiscreteField) -> Result<()> {
    let g = field.grid;
    let nodal = |w: &mut csv::Writer<W>, name: &str, values: &[f64]| -> Result<()> {
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                w.serialize(Row {
                    frame,
                    field: name.into(),
                    i,
                    j,
                    value: values[g.node(i, j)],
                })?;
            }
        }
        Ok(())
    };
    let cells = |w: &mut csv::Writer<W>, name: &str, values: &mut dyn Iterator<Item = f64>| -> Result<()> {
        for j in 0..g.ny {
            for i in 0..g.nx {
                let value = values.next().expect("cell count");
                w.serialize(Row {
                    frame,
                    field: name.into(),
                    i,
                    j,
                    value,
                })?;
            }
        }
        Ok(())
    };
    nodal(w, "psi_v", &field.psi_v)?;
    match &field.flux {
        Flux::Stream(psi) => nodal(w, "psi_m", psi)?,
        Flux::Cells(m) => {
            cells(w, "m1", &mut m.iter().map(|x| x[0]))?;
            cells(w, "m2", &mut m.iter().map(|x| x[1]))?;
        }
    }
    cells(w, "rho", &mut field.rho.iter().copied())
}

fn header_of(field: &DiscreteField, times: Option<Vec<f64>>) -> Header {
    Header {
        nx: field.grid.nx,
        ny: field.grid.ny,
        lx: field.grid.lx,
        ly: field.grid.ly,
        boundary_mode: field.mode,
        times,
    }
}

pub fn write_field<W: Write>(field: &DiscreteField, mut out: W) -> Result<()> {
    serde_json::to_writer(&mut out, &header_of(field, None))?;
    out.write_all(b"\n")?;
    let mut w = csv::Writer::from_writer(out);
    write_rows(&mut w, 0, field)?;
    w.flush()?;
    Ok(())
}

pub fn write_series<W: Write>(series: &TimeSeries, mut out: W) -> Result<()> {
    let first = series.frames.first().ok_or(Error::EmptySeries)?;
    serde_json::to_writer(&mut out, &header_of(first, Some(series.times.clone())))?;
    out.write_all(b"\n")?;
    let mut w = csv::Writer::from_writer(out);
    for (n, frame) in series.frames.iter().enumerate() {
        write_rows(&mut w, n, frame)?;
    }
    let g = first.grid;
    for j in 0..g.ny {
        for i in 0..g.nx {
            w.serialize(Row {
                frame: 0,
                field: "rho0".into(),
                i,
                j,
                value: series.rho0[g.cell(i, j)],
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip() {
        let g = Grid::new(4, 3, 2.0, 1.0).unwrap();
        let psi = g.nodal(|x, y| x * (2.0 - x) * y * (1.0 - y));
        let f = build_field(g, psi.clone(), psi, g.cellwise(|_, y| y - 0.5), BoundaryMode::ImpermeableBox)
            .unwrap();
        let mut buf = Vec::new();
        write_field(&f, &mut buf).unwrap();
        let back = read_field(buf.as_slice()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn series_round_trip() {
        let g = Grid::unit_square(3);
        let zero = vec![0.0; g.node_count()];
        let m = vec![[0.0, -0.1]; g.cell_count()];
        let f = build_field_with_cell_flux(g, zero, m, vec![0.25; g.cell_count()], BoundaryMode::ImpermeableBox)
            .unwrap();
        let s = TimeSeries::new(vec![0.0, 0.5], vec![f.clone(), f], Some(vec![0.5; 9])).unwrap();
        let mut buf = Vec::new();
        write_series(&s, &mut buf).unwrap();
        assert_eq!(read_series(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(read_field("not json\n".as_bytes()), Err(Error::Parse(_))));
        let text = "{\"nx\":2,\"ny\":2,\"Lx\":1,\"Ly\":1}\nframe,field,i,j,value\n0,rho,0,0,0.5\n";
        assert!(matches!(read_field(text.as_bytes()), Err(Error::ShapeMismatch(_))));
        let text = "{\"nx\":2,\"ny\":2,\"Lx\":1,\"Ly\":1,\"extra\":1}\n";
        assert!(matches!(read_field(text.as_bytes()), Err(Error::Parse(_))));
    }
}
