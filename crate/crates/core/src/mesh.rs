//! Unstructured conforming hexahedral meshes with trilinear elements.
//!
//! Local vertex `a + 2b + 4c` sits at reference corner
//! `(2a - 1, 2b - 1, 2c - 1)`. Face `2 * dir + side` is the face normal to
//! reference direction `dir` at `xi_dir = 2 * side - 1`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type BoundaryTag = u32;

/// Map from tangential coordinates on one face to the matching coordinates
/// on the neighbouring face: optional swap, then optional reversals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Orientation {
    pub swap: bool,
    pub flip_a: bool,
    pub flip_b: bool,
}

impl Orientation {
    pub const IDENTITY: Self = Self {
        swap: false,
        flip_a: false,
        flip_b: false,
    };

    pub fn all() -> [Self; 8] {
        std::array::from_fn(|k| Self {
            swap: k & 4 != 0,
            flip_a: k & 1 != 0,
            flip_b: k & 2 != 0,
        })
    }

    /// Coordinates on the neighbour face for `(a, b)` with `n` points per edge.
    pub fn map(&self, a: usize, b: usize, n: usize) -> (usize, usize) {
        let (mut x, mut y) = if self.swap { (b, a) } else { (a, b) };
        if self.flip_a {
            x = n - 1 - x;
        }
        if self.flip_b {
            y = n - 1 - y;
        }
        (x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceLink {
    Interior {
        element: usize,
        face: usize,
        orientation: Orientation,
    },
    Boundary(BoundaryTag),
}

/// Local vertex at tangential corner `(c1, c2)` of a face.
pub fn face_corner(face: usize, c1: usize, c2: usize) -> usize {
    let dir = face / 2;
    let side = face % 2;
    let (d1, d2) = match dir {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    (side << dir) | (c1 << d1) | (c2 << d2)
}

#[derive(Debug, Clone)]
pub struct HexMesh {
    pub vertices: Vec<[f64; 3]>,
    pub elements: Vec<[usize; 8]>,
    pub faces: Vec<[FaceLink; 6]>,
    /// Vertex identification under periodicity; `canonical[v] <= v`.
    pub canonical: Vec<usize>,
    /// Elements touching each canonical vertex (empty for non-canonical ids).
    pub vertex_elements: Vec<Vec<usize>>,
    pub tag_names: BTreeMap<BoundaryTag, String>,
    /// Typical element size per axis, used to scale random perturbations.
    pub nominal_spacing: [f64; 3],
}

pub const TAG_XMIN: BoundaryTag = 1;
pub const TAG_XMAX: BoundaryTag = 2;
pub const TAG_YMIN: BoundaryTag = 3;
pub const TAG_YMAX: BoundaryTag = 4;
pub const TAG_ZMIN: BoundaryTag = 5;
pub const TAG_ZMAX: BoundaryTag = 6;

fn box_tag_names() -> BTreeMap<BoundaryTag, String> {
    ["xmin", "xmax", "ymin", "ymax", "zmin", "zmax"]
        .iter()
        .enumerate()
        .map(|(k, s)| (k as BoundaryTag + 1, s.to_string()))
        .collect()
}

impl HexMesh {
    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn tag_name(&self, tag: BoundaryTag) -> String {
        self.tag_names
            .get(&tag)
            .cloned()
            .unwrap_or_else(|| tag.to_string())
    }

    /// Canonical vertex ids of an element.
    pub fn element_canonical(&self, e: usize) -> [usize; 8] {
        self.elements[e].map(|v| self.canonical[v])
    }

    pub fn boundary_tags(&self) -> Vec<BoundaryTag> {
        let mut tags: Vec<_> = self
            .faces
            .iter()
            .flatten()
            .filter_map(|f| match f {
                FaceLink::Boundary(t) => Some(*t),
                _ => None,
            })
            .collect();
        tags.sort_unstable();
        tags.dedup();
        tags
    }

    /// Trilinear map of element `e` evaluated at reference point `xi`.
    pub fn map_point(&self, e: usize, xi: [f64; 3]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for (lv, &v) in self.elements[e].iter().enumerate() {
            let w = corner_weight(lv, xi);
            for d in 0..3 {
                x[d] += w * self.vertices[v][d];
            }
        }
        x
    }

    /// Analytic Jacobian determinant of the trilinear map.
    pub fn map_jacobian(&self, e: usize, xi: [f64; 3]) -> f64 {
        let mut g = [[0.0; 3]; 3];
        for (lv, &v) in self.elements[e].iter().enumerate() {
            let dw = corner_weight_grad(lv, xi);
            for (r, row) in g.iter_mut().enumerate() {
                for (c, val) in row.iter_mut().enumerate() {
                    *val += self.vertices[v][r] * dw[c];
                }
            }
        }
        det3(&g)
    }

    fn rebuild_vertex_elements(&mut self) {
        let mut ve = vec![Vec::new(); self.vertices.len()];
        for (e, el) in self.elements.iter().enumerate() {
            for &v in el {
                let c = self.canonical[v];
                if ve[c].last() != Some(&e) && !ve[c].contains(&e) {
                    ve[c].push(e);
                }
            }
        }
        self.vertex_elements = ve;
    }

    /// Check Jacobian positivity on a 3x3x3 sample of every element.
    pub fn check_jacobians(&self) -> Result<()> {
        for e in 0..self.elements.len() {
            for c in 0..27 {
                let xi = [
                    (c % 3) as f64 - 1.0,
                    ((c / 3) % 3) as f64 - 1.0,
                    (c / 9) as f64 - 1.0,
                ];
                let j = self.map_jacobian(e, xi);
                if !(j > 0.0) {
                    return Err(Error::Geometry {
                        element: e,
                        reason: format!("non-positive Jacobian {j:e} at reference point {xi:?}"),
                    });
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn corner_weight(lv: usize, xi: [f64; 3]) -> f64 {
    (0..3)
        .map(|d| {
            if (lv >> d) & 1 == 1 {
                0.5 * (1.0 + xi[d])
            } else {
                0.5 * (1.0 - xi[d])
            }
        })
        .product()
}

fn corner_weight_grad(lv: usize, xi: [f64; 3]) -> [f64; 3] {
    let f = |d: usize| {
        if (lv >> d) & 1 == 1 {
            (0.5 * (1.0 + xi[d]), 0.5)
        } else {
            (0.5 * (1.0 - xi[d]), -0.5)
        }
    };
    let (a, b, c) = (f(0), f(1), f(2));
    [a.1 * b.0 * c.0, a.0 * b.1 * c.0, a.0 * b.0 * c.1]
}

pub fn det3(g: &[[f64; 3]; 3]) -> f64 {
    g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
        - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
        + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0])
}

/// Structured box of `k[0] x k[1] x k[2]` trilinear hexes.
pub fn build_box_mesh(
    k: [usize; 3],
    bounds: [[f64; 2]; 3],
    periodic: [bool; 3],
) -> Result<HexMesh> {
    if k.iter().any(|&n| n == 0) {
        return Err(Error::Parameter(format!(
            "element counts {k:?} must be positive"
        )));
    }
    if bounds.iter().any(|b| !(b[1] > b[0])) {
        return Err(Error::Parameter(format!("invalid box bounds {bounds:?}")));
    }
    let nv = [k[0] + 1, k[1] + 1, k[2] + 1];
    let vid = |i: usize, j: usize, l: usize| i + nv[0] * (j + nv[1] * l);
    let mut vertices = Vec::with_capacity(nv[0] * nv[1] * nv[2]);
    let mut canonical = Vec::with_capacity(vertices.capacity());
    for l in 0..nv[2] {
        for j in 0..nv[1] {
            for i in 0..nv[0] {
                let idx = [i, j, l];
                vertices.push(std::array::from_fn(|d| {
                    bounds[d][0] + (bounds[d][1] - bounds[d][0]) * idx[d] as f64 / k[d] as f64
                }));
                let c: [usize; 3] = std::array::from_fn(|d| {
                    if periodic[d] && idx[d] == k[d] {
                        0
                    } else {
                        idx[d]
                    }
                });
                canonical.push(vid(c[0], c[1], c[2]));
            }
        }
    }
    let eid = |i: usize, j: usize, l: usize| i + k[0] * (j + k[1] * l);
    let mut elements = Vec::with_capacity(k[0] * k[1] * k[2]);
    let mut faces = Vec::with_capacity(elements.capacity());
    let tags = [
        [TAG_XMIN, TAG_XMAX],
        [TAG_YMIN, TAG_YMAX],
        [TAG_ZMIN, TAG_ZMAX],
    ];
    for l in 0..k[2] {
        for j in 0..k[1] {
            for i in 0..k[0] {
                elements.push(std::array::from_fn(|lv| {
                    vid(i + (lv & 1), j + ((lv >> 1) & 1), l + ((lv >> 2) & 1))
                }));
                let idx = [i, j, l];
                faces.push(std::array::from_fn(|f| {
                    let (d, side) = (f / 2, f % 2);
                    let mut nb = idx;
                    let at_edge = if side == 0 {
                        idx[d] == 0
                    } else {
                        idx[d] + 1 == k[d]
                    };
                    if at_edge && !periodic[d] {
                        return FaceLink::Boundary(tags[d][side]);
                    }
                    nb[d] = if side == 0 {
                        (idx[d] + k[d] - 1) % k[d]
                    } else {
                        (idx[d] + 1) % k[d]
                    };
                    FaceLink::Interior {
                        element: eid(nb[0], nb[1], nb[2]),
                        face: 2 * d + 1 - side,
                        orientation: Orientation::IDENTITY,
                    }
                }));
            }
        }
    }
    let mut mesh = HexMesh {
        vertices,
        elements,
        faces,
        canonical,
        vertex_elements: Vec::new(),
        tag_names: box_tag_names(),
        nominal_spacing: std::array::from_fn(|d| (bounds[d][1] - bounds[d][0]) / k[d] as f64),
    };
    mesh.rebuild_vertex_elements();
    Ok(mesh)
}

/// Shift every vertex coordinate by `r * h` with `r` uniform in `[0, r_max)`,
/// `h` the nominal spacing of that axis. Coordinates on a bounding plane of
/// the mesh stay fixed so the domain is preserved; periodic images move together.
pub fn perturb_mesh(mesh: &HexMesh, r_max: f64, seed: u64) -> Result<HexMesh> {
    if !(0.0..0.5).contains(&r_max) {
        return Err(Error::Parameter(format!(
            "perturbation magnitude {r_max} outside [0, 0.5)"
        )));
    }
    let mut out = mesh.clone();
    if r_max == 0.0 {
        return Ok(out);
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in &mesh.vertices {
        for d in 0..3 {
            lo[d] = lo[d].min(v[d]);
            hi[d] = hi[d].max(v[d]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shift = vec![[0.0; 3]; mesh.vertices.len()];
    for (v, c) in mesh.canonical.iter().enumerate() {
        if *c == v {
            shift[v] = std::array::from_fn(|_| rng.gen_range(0.0..r_max));
        }
    }
    for (v, x) in out.vertices.iter_mut().enumerate() {
        let s = shift[mesh.canonical[v]];
        let p = mesh.vertices[v];
        for d in 0..3 {
            let tol = 1e-12 * (hi[d] - lo[d]).max(1.0);
            // Frozen if this vertex or its canonical image lies on a bounding plane.
            let on_plane = |q: [f64; 3]| (q[d] - lo[d]).abs() < tol || (q[d] - hi[d]).abs() < tol;
            if on_plane(p) || on_plane(mesh.vertices[mesh.canonical[v]]) {
                continue;
            }
            x[d] += s[d] * mesh.nominal_spacing[d];
        }
    }
    out.check_jacobians()?;
    Ok(out)
}

/// Build face connectivity by matching canonical vertex sets.
pub fn from_connectivity(
    vertices: Vec<[f64; 3]>,
    elements: Vec<[usize; 8]>,
    boundary: &[(usize, usize, BoundaryTag)],
    periodic_vertices: &[(usize, usize)],
    tag_names: BTreeMap<BoundaryTag, String>,
) -> Result<HexMesh> {
    let nv = vertices.len();
    for (e, el) in elements.iter().enumerate() {
        if let Some(v) = el.iter().find(|&&v| v >= nv) {
            return Err(Error::Mesh(format!(
                "element {e} references missing vertex {v}"
            )));
        }
    }
    // Union-find for periodic identification, smallest id as representative.
    let mut parent: Vec<usize> = (0..nv).collect();
    fn find(p: &mut [usize], v: usize) -> usize {
        let mut r = v;
        while p[r] != r {
            r = p[r];
        }
        let mut c = v;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    for &(a, b) in periodic_vertices {
        if a >= nv || b >= nv {
            return Err(Error::Mesh(format!(
                "periodic pair ({a}, {b}) references missing vertex"
            )));
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        parent[hi] = lo;
    }
    let canonical: Vec<usize> = (0..nv).map(|v| find(&mut parent, v)).collect();

    let corner_ids = |e: usize, f: usize, ids: &dyn Fn(usize) -> usize| -> [usize; 4] {
        [(0, 0), (1, 0), (0, 1), (1, 1)].map(|(a, b)| ids(elements[e][face_corner(f, a, b)]))
    };
    let raw = |v: usize| v;
    let canon = |v: usize| canonical[v];
    let mut tagged: HashMap<(usize, usize), BoundaryTag> = HashMap::new();
    for &(e, f, t) in boundary {
        if e >= elements.len() || f >= 6 {
            return Err(Error::Mesh(format!(
                "boundary entry ({e}, {f}) out of range"
            )));
        }
        tagged.insert((e, f), t);
    }
    let mut faces: Vec<[Option<FaceLink>; 6]> = vec![[None; 6]; elements.len()];
    for (&(e, f), &t) in &tagged {
        faces[e][f] = Some(FaceLink::Boundary(t));
    }
    // Conforming faces share raw vertices; periodic ones only canonical ids.
    for ids in [&raw as &dyn Fn(usize) -> usize, &canon] {
        let mut by_key: HashMap<[usize; 4], Vec<(usize, usize)>> = HashMap::new();
        for e in 0..elements.len() {
            for f in 0..6 {
                if faces[e][f].is_none() {
                    let mut key = corner_ids(e, f, ids);
                    key.sort_unstable();
                    by_key.entry(key).or_default().push((e, f));
                }
            }
        }
        let mut groups: Vec<_> = by_key.into_values().collect();
        groups.sort_unstable();
        for group in groups {
            let mut paired = vec![false; group.len()];
            for i in 0..group.len() {
                if paired[i] {
                    continue;
                }
                let (e, f) = group[i];
                let mine = corner_ids(e, f, ids);
                let mut found = None;
                for j in i + 1..group.len() {
                    if paired[j] {
                        continue;
                    }
                    let (ne, nf) = group[j];
                    let theirs = corner_ids(ne, nf, ids);
                    let o1 = orient_faces(&vertices, &elements, (e, f), (ne, nf), mine, theirs);
                    let o2 = orient_faces(&vertices, &elements, (ne, nf), (e, f), theirs, mine);
                    if let (Some(o1), Some(o2)) = (o1, o2) {
                        if found.is_some() {
                            return Err(Error::Mesh(format!(
                                "face {f} of element {e} matches more than one neighbour"
                            )));
                        }
                        found = Some((j, o1, o2));
                    }
                }
                if let Some((j, o1, o2)) = found {
                    let (ne, nf) = group[j];
                    paired[i] = true;
                    paired[j] = true;
                    faces[e][f] = Some(FaceLink::Interior {
                        element: ne,
                        face: nf,
                        orientation: o1,
                    });
                    faces[ne][nf] = Some(FaceLink::Interior {
                        element: e,
                        face: f,
                        orientation: o2,
                    });
                }
            }
        }
    }
    let faces = faces
        .into_iter()
        .enumerate()
        .map(|(e, fs)| {
            let mut out = [FaceLink::Boundary(0); 6];
            for (f, l) in fs.into_iter().enumerate() {
                out[f] = l.ok_or_else(|| {
                    Error::Mesh(format!(
                        "face {f} of element {e} has no neighbour and no boundary tag"
                    ))
                })?;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut spacing = [0.0; 3];
    for (e, el) in elements.iter().enumerate() {
        let _ = e;
        for d in 0..3 {
            let (a, b) = (vertices[el[0]], vertices[el[1 << d]]);
            spacing[d] +=
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        }
    }
    let ne = elements.len().max(1) as f64;
    let mut mesh = HexMesh {
        vertices,
        elements,
        faces,
        canonical,
        vertex_elements: Vec::new(),
        tag_names,
        nominal_spacing: spacing.map(|s| s / ne),
    };
    mesh.rebuild_vertex_elements();
    mesh.check_jacobians()?;
    Ok(mesh)
}

/// Orientation taking face `a` onto face `b` such that matched corners share
/// an id and differ by a single rigid translation.
fn orient_faces(
    vertices: &[[f64; 3]],
    elements: &[[usize; 8]],
    a: (usize, usize),
    b: (usize, usize),
    ids_a: [usize; 4],
    ids_b: [usize; 4],
) -> Option<Orientation> {
    let corner =
        |(e, f): (usize, usize), x: usize, y: usize| vertices[elements[e][face_corner(f, x, y)]];
    let scale = (0..4)
        .map(|k| corner(a, k & 1, k >> 1))
        .flat_map(|p| p.into_iter())
        .fold(1.0f64, |m, v| m.max(v.abs()));
    Orientation::all().into_iter().find(|o| {
        let mut shift: Option<[f64; 3]> = None;
        [(0, 0), (1, 0), (0, 1), (1, 1)]
            .iter()
            .enumerate()
            .all(|(k, &(x, y))| {
                let (u, v) = o.map(x, y, 2);
                if ids_b[u + 2 * v] != ids_a[k] {
                    return false;
                }
                let (pa, pb) = (corner(a, x, y), corner(b, u, v));
                let d = [pb[0] - pa[0], pb[1] - pa[1], pb[2] - pa[2]];
                match shift {
                    None => {
                        shift = Some(d);
                        true
                    }
                    Some(s0) => (0..3).all(|c| (s0[c] - d[c]).abs() <= 1e-9 * scale),
                }
            })
    })
}

/// Serialise to the plain-text mesh format.
pub fn write_mesh(mesh: &HexMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# hexahedral mesh: local vertex a + 2b + 4c at corner (2a-1, 2b-1, 2c-1)"
    );
    let _ = writeln!(s, "vertices {}", mesh.vertices.len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", v[0], v[1], v[2]);
    }
    let _ = writeln!(s, "elements {}", mesh.elements.len());
    for el in &mesh.elements {
        let line: Vec<String> = el.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    let boundary: Vec<(usize, usize, BoundaryTag)> = mesh
        .faces
        .iter()
        .enumerate()
        .flat_map(|(e, fs)| {
            fs.iter().enumerate().filter_map(move |(f, l)| match l {
                FaceLink::Boundary(t) => Some((e, f, *t)),
                _ => None,
            })
        })
        .collect();
    let _ = writeln!(s, "boundary {}", boundary.len());
    for (e, f, t) in boundary {
        let _ = writeln!(s, "{e} {f} {t}");
    }
    let periodic: Vec<(usize, usize)> = mesh
        .canonical
        .iter()
        .enumerate()
        .filter(|(v, c)| *v != **c)
        .map(|(v, c)| (v, *c))
        .collect();
    if !periodic.is_empty() {
        let _ = writeln!(s, "periodic_vertices {}", periodic.len());
        for (v, c) in periodic {
            let _ = writeln!(s, "{v} {c}");
        }
    }
    if !mesh.tag_names.is_empty() {
        let _ = writeln!(s, "tags {}", mesh.tag_names.len());
        for (t, name) in &mesh.tag_names {
            let _ = writeln!(s, "{t} {name}");
        }
    }
    s
}

/// Parse the plain-text mesh format.
///
/// Box meshes with a single element across a periodic direction cannot be
/// expressed through vertex matching and should be generated instead.
pub fn read_mesh(text: &str) -> Result<HexMesh> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .enumerate()
        .filter(|(_, l)| !l.is_empty());
    let mut vertices = Vec::new();
    let mut elements = Vec::new();
    let mut boundary = Vec::new();
    let mut periodic = Vec::new();
    let mut tags = BTreeMap::new();
    fn nums<T: std::str::FromStr>(line: &str, count: usize, lineno: usize) -> Result<Vec<T>> {
        let v: Vec<T> = line
            .split_whitespace()
            .map(|t| t.parse::<T>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Mesh(format!("line {}: cannot parse '{line}'", lineno + 1)))?;
        if v.len() != count {
            return Err(Error::Mesh(format!(
                "line {}: expected {count} values, found {}",
                lineno + 1,
                v.len()
            )));
        }
        Ok(v)
    }
    while let Some((lineno, header)) = lines.next() {
        let mut parts = header.split_whitespace();
        let section = parts.next().unwrap_or("");
        let count: usize = parts.next().and_then(|c| c.parse().ok()).ok_or_else(|| {
            Error::Mesh(format!("line {}: expected '<section> <count>'", lineno + 1))
        })?;
        for _ in 0..count {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::Mesh(format!("section '{section}' ended early")))?;
            match section {
                "vertices" => {
                    let v: Vec<f64> = nums(line, 3, ln)?;
                    vertices.push([v[0], v[1], v[2]]);
                }
                "elements" => {
                    let v: Vec<usize> = nums(line, 8, ln)?;
                    elements.push(std::array::from_fn(|k| v[k]));
                }
                "boundary" => {
                    let v: Vec<usize> = nums(line, 3, ln)?;
                    boundary.push((v[0], v[1], v[2] as BoundaryTag));
                }
                "periodic_vertices" => {
                    let v: Vec<usize> = nums(line, 2, ln)?;
                    periodic.push((v[0], v[1]));
                }
                "tags" => {
                    let mut it = line.split_whitespace();
                    let t = it
                        .next()
                        .and_then(|t| t.parse::<BoundaryTag>().ok())
                        .ok_or_else(|| Error::Mesh(format!("line {}: bad tag id", ln + 1)))?;
                    let name = it
                        .next()
                        .ok_or_else(|| Error::Mesh(format!("line {}: missing tag name", ln + 1)))?;
                    tags.insert(t, name.to_string());
                }
                other => return Err(Error::Mesh(format!("unknown section '{other}'"))),
            }
        }
    }
    from_connectivity(vertices, elements, &boundary, &periodic, tags)
}

pub fn load_mesh(path: &Path) -> Result<HexMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_mesh(&text)
}

/// L-shaped planar domain (extruded one element in z) for shock diffraction:
/// the unit square `[0, 1]^2` with the block `[0, step_x] x [0, step_y]` removed.
pub fn build_step_mesh(n: usize, step_x: f64, step_y: f64, depth: f64) -> Result<HexMesh> {
    if n < 2 || !(0.0 < step_x && step_x < 1.0 && 0.0 < step_y && step_y < 1.0) {
        return Err(Error::Parameter("invalid step mesh parameters".into()));
    }
    let h = 1.0 / n as f64;
    let nx_step = (step_x / h).round() as usize;
    let ny_step = (step_y / h).round() as usize;
    if nx_step == 0 || ny_step == 0 || nx_step >= n || ny_step >= n {
        return Err(Error::Parameter(
            "step does not align with at least one element".into(),
        ));
    }
    let keep = |i: usize, j: usize| !(i < nx_step && j < ny_step);
    let full = build_box_mesh(
        [n, n, 1],
        [[0.0, 1.0], [0.0, 1.0], [0.0, depth]],
        [false, false, true],
    )?;
    let mut elements = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if keep(i, j) {
                elements.push(full.elements[i + n * j]);
            }
        }
    }
    let mut boundary = Vec::new();
    let mut tags = box_tag_names();
    tags.insert(7, "wall".into());
    let mut e = 0;
    for j in 0..n {
        for i in 0..n {
            if !keep(i, j) {
                continue;
            }
            let tag_x0 = if i == 0 {
                Some(TAG_XMIN)
            } else if !keep(i - 1, j) {
                Some(7)
            } else {
                None
            };
            let tag_y0 = if j == 0 {
                Some(TAG_YMIN)
            } else if !keep(i, j - 1) {
                Some(7)
            } else {
                None
            };
            if let Some(t) = tag_x0 {
                boundary.push((e, 0, t));
            }
            if i + 1 == n {
                boundary.push((e, 1, TAG_XMAX));
            }
            if let Some(t) = tag_y0 {
                boundary.push((e, 2, t));
            }
            if j + 1 == n {
                boundary.push((e, 3, TAG_YMAX));
            }
            e += 1;
        }
    }
    // One element in z: periodic identification degenerates for vertex matching,
    // so the z faces are treated as symmetry planes.
    for el in 0..elements.len() {
        boundary.push((el, 4, TAG_ZMIN));
        boundary.push((el, 5, TAG_ZMAX));
    }
    let nv = (n + 1) * (n + 1) * 2;
    let vertices = full.vertices[..nv].to_vec();
    from_connectivity(vertices, elements, &boundary, &[], tags)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_bounds() -> [[f64; 2]; 3] {
        [[-0.5, 0.5]; 3]
    }

    #[test]
    fn box_counts() {
        let m = build_box_mesh([1; 3], unit_bounds(), [false; 3]).unwrap();
        assert_eq!((m.num_vertices(), m.num_elements()), (8, 1));
        let m = build_box_mesh([3; 3], unit_bounds(), [false; 3]).unwrap();
        assert_eq!((m.num_vertices(), m.num_elements()), (64, 27));
    }

    #[test]
    fn interior_vertex_shared_by_eight() {
        let m = build_box_mesh([2; 3], unit_bounds(), [false; 3]).unwrap();
        let centre = m
            .vertices
            .iter()
            .position(|v| v.iter().all(|c| c.abs() < 1e-15))
            .unwrap();
        assert_eq!(m.vertex_elements[centre].len(), 8);
    }

    #[test]
    fn face_matching_reproduces_structured_links() {
        let m = build_box_mesh([3, 2, 2], unit_bounds(), [false; 3]).unwrap();
        let boundary: Vec<_> = m
            .faces
            .iter()
            .enumerate()
            .flat_map(|(e, fs)| {
                fs.iter().enumerate().filter_map(move |(f, l)| match l {
                    FaceLink::Boundary(t) => Some((e, f, *t)),
                    _ => None,
                })
            })
            .collect();
        let g = from_connectivity(
            m.vertices.clone(),
            m.elements.clone(),
            &boundary,
            &[],
            m.tag_names.clone(),
        )
        .unwrap();
        assert_eq!(g.faces, m.faces);
    }

    #[test]
    fn periodic_text_round_trip() {
        let m = build_box_mesh([2, 3, 2], unit_bounds(), [true, false, true]).unwrap();
        let back = read_mesh(&write_mesh(&m)).unwrap();
        assert_eq!(back.faces, m.faces);
        assert_eq!(back.canonical, m.canonical);
        assert_eq!(back.vertices, m.vertices);
    }

    #[test]
    fn rotated_neighbour_orientation_detected() {
        // Two unit cubes sharing x = 0; the second one's local frame is
        // rotated a quarter turn about the x axis.
        let mut vertices = Vec::new();
        for c in 0..2 {
            for b in 0..2 {
                for a in 0..3 {
                    vertices.push([a as f64 - 1.0, b as f64, c as f64]);
                }
            }
        }
        let id = |a: usize, b: usize, c: usize| a + 3 * (b + 2 * c);
        let e0: [usize; 8] = std::array::from_fn(|lv| id(lv & 1, (lv >> 1) & 1, (lv >> 2) & 1));
        // Local (xi, eta, zeta) -> global (x, z, 1 - y).
        let e1: [usize; 8] =
            std::array::from_fn(|lv| id(1 + (lv & 1), 1 - ((lv >> 2) & 1), (lv >> 1) & 1));
        let mut boundary = Vec::new();
        for f in [0, 2, 3, 4, 5] {
            boundary.push((0, f, 1));
        }
        for f in 1..6 {
            boundary.push((1, f, 1));
        }
        let m = from_connectivity(vertices, vec![e0, e1], &boundary, &[], BTreeMap::new()).unwrap();
        let FaceLink::Interior {
            element,
            face,
            orientation,
        } = m.faces[0][1]
        else {
            panic!("expected interior link");
        };
        assert_eq!((element, face), (1, 0));
        assert_ne!(orientation, Orientation::IDENTITY);
        // Corners must coincide physically under the orientation map.
        for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let (x, y) = orientation.map(a, b, 2);
            assert_eq!(
                m.elements[0][face_corner(1, a, b)],
                m.elements[1][face_corner(0, x, y)]
            );
        }
    }

    #[test]
    fn perturbation_zero_is_identity_and_deterministic() {
        let m = build_box_mesh([3; 3], unit_bounds(), [false; 3]).unwrap();
        let same = perturb_mesh(&m, 0.0, 7).unwrap();
        assert_eq!(same.vertices, m.vertices);
        let a = perturb_mesh(&m, 0.4, 7).unwrap();
        let b = perturb_mesh(&m, 0.4, 7).unwrap();
        assert_eq!(a.vertices, b.vertices);
        assert_ne!(a.vertices, m.vertices);
        a.check_jacobians().unwrap();
        assert!(perturb_mesh(&m, 0.5, 1).is_err());
    }

    #[test]
    fn perturbation_keeps_boundary_planes_and_periodic_images() {
        let m = build_box_mesh([3; 3], unit_bounds(), [true, false, false]).unwrap();
        let p = perturb_mesh(&m, 0.4, 3).unwrap();
        for (v, x) in p.vertices.iter().enumerate() {
            let o = m.vertices[v];
            for d in 0..3 {
                if (o[d].abs() - 0.5).abs() < 1e-14 {
                    assert_eq!(x[d], o[d]);
                }
            }
            let c = m.canonical[v];
            if c != v {
                assert_eq!(x[1] - o[1], p.vertices[c][1] - m.vertices[c][1]);
                assert_eq!(x[2] - o[2], p.vertices[c][2] - m.vertices[c][2]);
            }
        }
    }

    #[test]
    fn inverted_element_is_a_geometry_error() {
        let mut m = build_box_mesh([1; 3], unit_bounds(), [false; 3]).unwrap();
        // Push a corner through the opposite face.
        m.vertices[7] = [-1.0, -1.0, -1.0];
        assert!(matches!(m.check_jacobians(), Err(Error::Geometry { .. })));
    }

    #[test]
    fn step_mesh_has_wall_faces() {
        let m = build_step_mesh(4, 0.25, 0.5, 0.25).unwrap();
        assert_eq!(m.num_elements(), 14);
        assert!(m.boundary_tags().contains(&7));
    }
}
