//! Field export (legacy ASCII VTK, CSV), CSV field reload and step logs.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::HexMesh;
use crate::positivity::StepRecord;
use crate::scheme::Scheme;
use crate::thermo::{Cons, Prim};

const VTK_HEXAHEDRON: u32 = 12;

pub const FIELD_CSV_HEADER: &str = "element,node,x,y,z,rho,u,v,w,T,P,mu_ad";

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn nodal_prims(scheme: &Scheme, u: &[[f64; 5]]) -> Result<Vec<Prim>> {
    u.iter().map(|s| scheme.gas.prim(&Cons(*s))).collect()
}

/// Sub-cell hexahedra of one element in VTK corner order, as local node ids.
fn sub_cells(scheme: &Scheme) -> Vec<[usize; 8]> {
    let ops = &scheme.ops;
    let p = ops.n() - 1;
    let mut cells = Vec::with_capacity(p * p * p);
    for k in 0..p {
        for j in 0..p {
            for i in 0..p {
                cells.push([
                    ops.node(i, j, k),
                    ops.node(i + 1, j, k),
                    ops.node(i + 1, j + 1, k),
                    ops.node(i, j + 1, k),
                    ops.node(i, j, k + 1),
                    ops.node(i + 1, j, k + 1),
                    ops.node(i + 1, j + 1, k + 1),
                    ops.node(i, j + 1, k + 1),
                ]);
            }
        }
    }
    cells
}

/// Nodal density, velocity, temperature, pressure and artificial viscosity as
/// a legacy ASCII unstructured grid. Points are element-major, then k, j, i.
pub fn vtk_string(scheme: &Scheme, u: &[[f64; 5]], mu_ad: &[f64], title: &str) -> Result<String> {
    let prims = nodal_prims(scheme, u)?;
    let np = scheme.ops.nodes_per_element();
    let ne = scheme.num_elements();
    let cells = sub_cells(scheme);
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.lines().next().unwrap_or(""));
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", prims.len());
    for g in 0..prims.len() {
        let x = scheme.coords(g);
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", x[0], x[1], x[2]);
    }
    let total = ne * cells.len();
    let _ = writeln!(s, "CELLS {} {}", total, total * 9);
    for e in 0..ne {
        for c in &cells {
            let ids: Vec<String> = c.iter().map(|l| (e * np + l).to_string()).collect();
            let _ = writeln!(s, "8 {}", ids.join(" "));
        }
    }
    let _ = writeln!(s, "CELL_TYPES {total}");
    for _ in 0..total {
        let _ = writeln!(s, "{VTK_HEXAHEDRON}");
    }
    let _ = writeln!(s, "POINT_DATA {}", prims.len());
    let scalar = |s: &mut String, name: &str, f: &dyn Fn(usize) -> f64| {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for g in 0..prims.len() {
            let _ = writeln!(s, "{:.16e}", f(g));
        }
    };
    scalar(&mut s, "density", &|g| prims[g].rho);
    let _ = writeln!(s, "VECTORS velocity double");
    for q in &prims {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", q.vel[0], q.vel[1], q.vel[2]);
    }
    scalar(&mut s, "temperature", &|g| prims[g].temp);
    scalar(&mut s, "pressure", &|g| scheme.gas.pressure(&prims[g]));
    scalar(&mut s, "mu_ad", &|g| mu_ad.get(g).copied().unwrap_or(0.0));
    Ok(s)
}

pub fn write_vtk(path: &Path, scheme: &Scheme, u: &[[f64; 5]], mu_ad: &[f64]) -> Result<()> {
    write_file(path, &vtk_string(scheme, u, mu_ad, "ppes nodal field")?)
}

/// Mesh-only VTK: one trilinear hexahedron per element.
pub fn mesh_vtk_string(mesh: &HexMesh) -> String {
    // Local vertex a + 2b + 4c to VTK corner order.
    const ORDER: [usize; 8] = [0, 1, 3, 2, 4, 5, 7, 6];
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# vtk DataFile Version 3.0\nppes mesh\nASCII\nDATASET UNSTRUCTURED_GRID"
    );
    let _ = writeln!(s, "POINTS {} double", mesh.vertices.len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", v[0], v[1], v[2]);
    }
    let ne = mesh.num_elements();
    let _ = writeln!(s, "CELLS {} {}", ne, ne * 9);
    for el in &mesh.elements {
        let ids: Vec<String> = ORDER.iter().map(|&c| el[c].to_string()).collect();
        let _ = writeln!(s, "8 {}", ids.join(" "));
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        let _ = writeln!(s, "{VTK_HEXAHEDRON}");
    }
    s
}

/// Nodal field as CSV with 17 significant digits, in VTK point order.
pub fn field_csv_string(scheme: &Scheme, u: &[[f64; 5]], mu_ad: &[f64]) -> Result<String> {
    let prims = nodal_prims(scheme, u)?;
    let np = scheme.ops.nodes_per_element();
    let mut s = String::with_capacity(prims.len() * 200);
    let _ = writeln!(s, "{FIELD_CSV_HEADER}");
    for (g, q) in prims.iter().enumerate() {
        let x = scheme.coords(g);
        let _ = writeln!(
            s,
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            g / np,
            g % np,
            x[0],
            x[1],
            x[2],
            q.rho,
            q.vel[0],
            q.vel[1],
            q.vel[2],
            q.temp,
            scheme.gas.pressure(q),
            mu_ad.get(g).copied().unwrap_or(0.0)
        );
    }
    Ok(s)
}

pub fn write_field_csv(path: &Path, scheme: &Scheme, u: &[[f64; 5]], mu_ad: &[f64]) -> Result<()> {
    write_file(path, &field_csv_string(scheme, u, mu_ad)?)
}

/// Rows of a field CSV: `(rho, velocity, T, mu_ad)` per node.
pub fn parse_field_csv(text: &str) -> Result<Vec<(Prim, f64)>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == FIELD_CSV_HEADER => {}
        _ => {
            return Err(Error::Config(format!(
                "field CSV must start with '{FIELD_CSV_HEADER}'"
            )))
        }
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let v: Vec<f64> = l
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| {
                    Error::Config(format!("field CSV line {}: cannot parse '{l}'", i + 2))
                })?;
            if v.len() != 12 {
                return Err(Error::Config(format!(
                    "field CSV line {}: expected 12 columns",
                    i + 2
                )));
            }
            Ok((Prim::new(v[5], [v[6], v[7], v[8]], v[9]), v[11]))
        })
        .collect()
}

/// Conservative field from a CSV written for the same mesh and degree.
pub fn read_field_csv(path: &Path, scheme: &Scheme) -> Result<Vec<[f64; 5]>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows = parse_field_csv(&text)?;
    if rows.len() != scheme.num_nodes() {
        return Err(Error::Config(format!(
            "{}: {} nodes in file, {} in the discretization",
            path.display(),
            rows.len(),
            scheme.num_nodes()
        )));
    }
    Ok(rows.iter().map(|(q, _)| scheme.gas.cons(q).0).collect())
}

/// Streaming CSV writer for per-step diagnostics.
pub struct StepLog {
    out: BufWriter<File>,
    path: std::path::PathBuf,
}

impl StepLog {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{}", StepRecord::CSV_HEADER).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            out,
            path: path.to_path_buf(),
        })
    }

    pub fn record(&mut self, r: &StepRecord) -> Result<()> {
        writeln!(self.out, "{}", r.csv_row()).map_err(|e| Error::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}
