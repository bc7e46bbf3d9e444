//! Field dumps in legacy VTK and the per-run CSV files.
//!
//! Floats in VTK files use Rust's shortest round-trip form (`{:e}`), so a
//! dump read back reproduces every value bit for bit. CSV floats use six
//! significant digits.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::uzawa::DiscreteSolution;

/// VTK cell type of the six-node quadratic triangle.
pub const VTK_QUADRATIC_TRIANGLE: u8 = 22;

/// Write the P2 velocity at every lattice node and the P1 pressure
/// interpolated onto the same nodes.
pub fn write_vtk<W: Write>(mut w: W, mesh: &Mesh, sol: &DiscreteSolution) -> Result<()> {
    let nodes = mesh.p2_node_count();
    if sol.velocity.len() != 2 * nodes {
        return Err(Error::LengthMismatch {
            expected: 2 * nodes,
            actual: sol.velocity.len(),
        });
    }
    if sol.pressure.len() != mesh.vertex_count() {
        return Err(Error::LengthMismatch {
            expected: mesh.vertex_count(),
            actual: sol.pressure.len(),
        });
    }
    let pressure = nodal_pressure(mesh, &sol.pressure);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{} N={} iterations={}", sol.bc, sol.divisions, sol.iterations)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {nodes} double")?;
    for k in 0..nodes {
        let p = mesh.p2_node_coords(k);
        writeln!(w, "{:e} {:e} 0e0", p[0], p[1])?;
    }
    let cells = mesh.triangle_count();
    writeln!(w, "CELLS {} {}", cells, 7 * cells)?;
    for t in 0..cells {
        let n = mesh.triangle_p2_nodes(t);
        writeln!(w, "6 {} {} {} {} {} {}", n[0], n[1], n[2], n[3], n[4], n[5])?;
    }
    writeln!(w, "CELL_TYPES {cells}")?;
    for _ in 0..cells {
        writeln!(w, "{VTK_QUADRATIC_TRIANGLE}")?;
    }
    writeln!(w, "POINT_DATA {nodes}")?;
    writeln!(w, "VECTORS velocity double")?;
    for k in 0..nodes {
        writeln!(w, "{:e} {:e} 0e0", sol.velocity[2 * k], sol.velocity[2 * k + 1])?;
    }
    writeln!(w, "SCALARS pressure double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for p in &pressure {
        writeln!(w, "{p:e}")?;
    }
    Ok(())
}

/// P1 pressure at every P2 node: vertex values, and edge averages at midpoints.
fn nodal_pressure(mesh: &Mesh, vertex_pressure: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.p2_node_count()];
    for (v, &p) in vertex_pressure.iter().enumerate() {
        out[mesh.vertex_to_p2(v)] = p;
    }
    for e in &mesh.edges {
        let [a, b] = e.vertices;
        out[e.p2_node] = 0.5 * (vertex_pressure[a] + vertex_pressure[b]);
    }
    out
}

/// Contents of a dump written by [`write_vtk`].
#[derive(Clone, Debug, PartialEq)]
pub struct VtkField {
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<[usize; 6]>,
    pub cell_types: Vec<u8>,
    /// Two entries per point.
    pub velocity: Vec<f64>,
    /// One entry per point.
    pub pressure: Vec<f64>,
}

impl VtkField {
    /// Pressure at the mesh vertices, in vertex order.
    pub fn vertex_pressure(&self, mesh: &Mesh) -> Vec<f64> {
        (0..mesh.vertex_count())
            .map(|v| self.pressure[mesh.vertex_to_p2(v)])
            .collect()
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Io(io::Error::new(io::ErrorKind::InvalidData, msg.into()))
}

struct Tokens<R: BufRead> {
    lines: io::Lines<R>,
    pending: std::vec::IntoIter<String>,
}

impl<R: BufRead> Tokens<R> {
    fn next(&mut self) -> Result<String> {
        loop {
            if let Some(t) = self.pending.next() {
                return Ok(t);
            }
            let line = self.lines.next().ok_or_else(|| bad("unexpected end of file"))??;
            self.pending = line
                .split_whitespace()
                .map(str::to_string)
                .collect::<Vec<_>>()
                .into_iter();
        }
    }

    fn expect(&mut self, word: &str) -> Result<()> {
        let t = self.next()?;
        if t != word {
            return Err(bad(format!("expected '{word}', found '{t}'")));
        }
        Ok(())
    }

    fn parse<T: std::str::FromStr>(&mut self) -> Result<T> {
        let t = self.next()?;
        t.parse().map_err(|_| bad(format!("cannot parse '{t}'")))
    }
}

/// Read a dump written by [`write_vtk`].
pub fn read_vtk<R: BufRead>(r: R) -> Result<VtkField> {
    let mut lines = r.lines();
    for _ in 0..2 {
        lines.next().ok_or_else(|| bad("missing header"))??;
    }
    let mut tok = Tokens {
        lines,
        pending: Vec::new().into_iter(),
    };
    tok.expect("ASCII")?;
    tok.expect("DATASET")?;
    tok.expect("UNSTRUCTURED_GRID")?;
    tok.expect("POINTS")?;
    let np: usize = tok.parse()?;
    tok.next()?;
    let mut points = Vec::with_capacity(np);
    for _ in 0..np {
        points.push([tok.parse()?, tok.parse()?, tok.parse()?]);
    }
    tok.expect("CELLS")?;
    let nc: usize = tok.parse()?;
    tok.next()?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let k: usize = tok.parse()?;
        if k != 6 {
            return Err(bad(format!("expected 6-node cells, found {k}")));
        }
        let mut c = [0; 6];
        for v in &mut c {
            *v = tok.parse()?;
        }
        cells.push(c);
    }
    tok.expect("CELL_TYPES")?;
    tok.parse::<usize>()?;
    let mut cell_types = Vec::with_capacity(nc);
    for _ in 0..nc {
        cell_types.push(tok.parse()?);
    }
    tok.expect("POINT_DATA")?;
    tok.parse::<usize>()?;
    tok.expect("VECTORS")?;
    tok.next()?;
    tok.next()?;
    let mut velocity = Vec::with_capacity(2 * np);
    for _ in 0..np {
        velocity.push(tok.parse()?);
        velocity.push(tok.parse()?);
        tok.parse::<f64>()?;
    }
    tok.expect("SCALARS")?;
    tok.next()?;
    tok.next()?;
    tok.next()?;
    tok.expect("LOOKUP_TABLE")?;
    tok.next()?;
    let mut pressure = Vec::with_capacity(np);
    for _ in 0..np {
        pressure.push(tok.parse()?);
    }
    Ok(VtkField {
        points,
        cells,
        cell_types,
        velocity,
        pressure,
    })
}

/// Six significant digits in scientific notation.
pub fn sci(v: f64) -> String {
    format!("{v:.5e}")
}

/// `x,lambda` for every Γ1 chain node.
pub fn multiplier_csv(sol: &DiscreteSolution) -> String {
    let mut out = String::from("x,lambda\n");
    for (x, l) in sol.trace_x.iter().zip(sol.multiplier.values()) {
        let _ = writeln!(out, "{},{}", sci(*x), sci(*l));
    }
    out
}

/// One row per iteration; the increment is empty at `k = 1`.
pub fn iteration_log_csv(sol: &DiscreteSolution) -> String {
    let mut out = String::from("k,increment_h1,energy_residual,n_active_nodes\n");
    for r in &sol.log {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.k,
            r.increment_h1.map(sci).unwrap_or_default(),
            sci(r.energy_residual),
            r.n_active
        );
    }
    out
}
