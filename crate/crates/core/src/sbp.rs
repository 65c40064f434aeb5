//! Diagonal-norm summation-by-parts operators on Legendre-Gauss-Lobatto points.
//!
//! Nodes of a tensor-product element are stored with the first reference
//! direction running fastest: `node = i + n * (j + n * k)`.

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct LglBasis {
    degree: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl LglBasis {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Legendre polynomial values `(P_n(x), P_{n-1}(x))` by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut prev, mut cur) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let next = ((2.0 * k - 1.0) * x * cur - (k - 1.0) * prev) / k;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

pub fn build_lgl_basis(p: usize) -> Result<LglBasis> {
    if !(1..=MAX_DEGREE).contains(&p) {
        return Err(Error::Parameter(format!(
            "polynomial degree {p} outside 1..={MAX_DEGREE}"
        )));
    }
    let n = p + 1;
    let pf = p as f64;
    let mut nodes = vec![0.0; n];
    for (k, x) in nodes.iter_mut().enumerate() {
        // Chebyshev-Gauss-Lobatto starting guess.
        *x = -(std::f64::consts::PI * k as f64 / pf).cos();
    }
    // Interior nodes are roots of P'_p; iterate on q(x) = P_{p+1} - P_{p-1},
    // which vanishes at all LGL points including the endpoints.
    for x in nodes.iter_mut().take(p).skip(1) {
        for _ in 0..100 {
            let (pp, pm) = legendre(p, *x);
            // (1 - x^2) P'_p = p (P_{p-1} - x P_p)
            let g = pm - *x * pp;
            // derivative of g / p-scaled form: d/dx[(P_{p-1} - x P_p)] = -(p+1) P_p
            let dg = -(pf + 1.0) * pp;
            let dx = g / dg;
            *x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
    }
    nodes[0] = -1.0;
    nodes[p] = 1.0;
    // Enforce exact symmetry.
    for k in 0..n / 2 {
        let s = 0.5 * (nodes[p - k] - nodes[k]);
        nodes[k] = -s;
        nodes[p - k] = s;
    }
    if n % 2 == 1 {
        nodes[p / 2] = 0.0;
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (pp, _) = legendre(p, x);
            2.0 / (pf * (pf + 1.0) * pp * pp)
        })
        .collect();
    Ok(LglBasis {
        degree: p,
        nodes,
        weights,
    })
}

/// One-dimensional SBP operator `D = P^-1 Q` with `Q + Q^T = B`.
#[derive(Debug, Clone)]
pub struct Sbp1d {
    basis: LglBasis,
    d: Vec<f64>,
    q: Vec<f64>,
    flux_points: Vec<f64>,
}

impl Sbp1d {
    pub fn new(p: usize) -> Result<Self> {
        Ok(assemble_sbp(build_lgl_basis(p)?))
    }

    pub fn basis(&self) -> &LglBasis {
        &self.basis
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    /// Number of nodes per direction.
    pub fn n(&self) -> usize {
        self.basis.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.basis.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.basis.weights
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n() + j]
    }

    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n() + j]
    }

    pub fn d_row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.d[i * n..(i + 1) * n]
    }

    pub fn q_row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.q[i * n..(i + 1) * n]
    }

    /// Boundary matrix entry, `diag(-1, 0, ..., 0, 1)`.
    pub fn b(&self, i: usize, j: usize) -> f64 {
        let last = self.n() - 1;
        match (i == j, i) {
            (true, 0) => -1.0,
            (true, k) if k == last => 1.0,
            _ => 0.0,
        }
    }

    /// Flux points `-1 = xbar_0 < ... < xbar_n = 1` whose spacings equal the weights.
    pub fn flux_points(&self) -> &[f64] {
        &self.flux_points
    }

    pub fn flux_point_spacings(&self) -> Vec<f64> {
        self.flux_points.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Smallest distance between flux points.
    pub fn min_weight(&self) -> f64 {
        self.basis
            .weights
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn apply_d(&self, f: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|i| self.d_row(i).iter().zip(f).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn apply_q(&self, f: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|i| self.q_row(i).iter().zip(f).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Flux-point values of a two-point flux built by the double-sum
    /// construction; entries `0` and `n` are the pointwise fluxes.
    pub fn flux_point_values<F>(&self, mut two_point: F) -> Vec<f64>
    where
        F: FnMut(usize, usize) -> f64,
    {
        let n = self.n();
        let mut out = vec![0.0; n + 1];
        out[0] = two_point(0, 0);
        out[n] = two_point(n - 1, n - 1);
        for (k, v) in out.iter_mut().enumerate().take(n).skip(1) {
            let mut s = 0.0;
            for l in 0..k {
                for r in k..n {
                    s += 2.0 * self.q(l, r) * two_point(l, r);
                }
            }
            *v = s;
        }
        out
    }
}

pub fn assemble_sbp(basis: LglBasis) -> Sbp1d {
    let n = basis.len();
    let x = &basis.nodes;
    // Barycentric weights.
    let lambda: Vec<f64> = (0..n)
        .map(|j| {
            1.0 / (0..n)
                .filter(|&k| k != j)
                .map(|k| x[j] - x[k])
                .product::<f64>()
        })
        .collect();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = lambda[j] / lambda[i] / (x[i] - x[j]);
                d[i * n + j] = v;
                diag -= v;
            }
        }
        d[i * n + i] = diag;
    }
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            q[i * n + j] = basis.weights[i] * d[i * n + j];
        }
    }
    let mut flux_points = vec![-1.0; n + 1];
    for i in 0..n {
        flux_points[i + 1] = flux_points[i] + basis.weights[i];
    }
    flux_points[n] = 1.0;
    Sbp1d {
        basis,
        d,
        q,
        flux_points,
    }
}

/// `max_i |(P^-1 Q f)_i - (P^-1 Delta fbar)_i|` for a flux-point array `fbar`
/// of length `n + 1` paired with nodal fluxes `f`.
pub fn telescope_residual(sbp: &Sbp1d, f: &[f64], fbar: &[f64]) -> Result<f64> {
    let n = sbp.n();
    if f.len() != n || fbar.len() != n + 1 {
        return Err(Error::Parameter(format!(
            "expected {} nodal and {} flux-point values, got {} and {}",
            n,
            n + 1,
            f.len(),
            fbar.len()
        )));
    }
    let qf = sbp.apply_q(f);
    Ok((0..n)
        .map(|i| ((qf[i] - (fbar[i + 1] - fbar[i])) / sbp.weights()[i]).abs())
        .fold(0.0, f64::max))
}

/// Tensor-product operators on an element with `n^3` nodes.
#[derive(Debug, Clone)]
pub struct TensorOps {
    sbp: Sbp1d,
}

impl TensorOps {
    pub fn new(p: usize) -> Result<Self> {
        Ok(Self {
            sbp: Sbp1d::new(p)?,
        })
    }

    pub fn from_sbp(sbp: Sbp1d) -> Self {
        Self { sbp }
    }

    pub fn sbp(&self) -> &Sbp1d {
        &self.sbp
    }

    pub fn n(&self) -> usize {
        self.sbp.n()
    }

    pub fn nodes_per_element(&self) -> usize {
        let n = self.n();
        n * n * n
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> usize {
        let n = self.n();
        i + n * (j + n * k)
    }

    pub fn ijk(&self, node: usize) -> [usize; 3] {
        let n = self.n();
        [node % n, (node / n) % n, node / (n * n)]
    }

    pub fn stride(&self, dir: usize) -> usize {
        let n = self.n();
        [1, n, n * n][dir]
    }

    /// First node of line `line` (indexed by the two remaining directions,
    /// lower direction fastest) running along `dir`.
    pub fn line_start(&self, dir: usize, line: usize) -> usize {
        let n = self.n();
        let (a, b) = (line % n, line / n);
        match dir {
            0 => self.node(0, a, b),
            1 => self.node(a, 0, b),
            _ => self.node(a, b, 0),
        }
    }

    /// Volume weight `P_ii P_jj P_kk`.
    pub fn volume_weight(&self, node: usize) -> f64 {
        let w = self.sbp.weights();
        let [i, j, k] = self.ijk(node);
        w[i] * w[j] * w[k]
    }

    /// Perpendicular weight for lines along `dir`.
    pub fn perp_weight(&self, dir: usize, line: usize) -> f64 {
        let n = self.n();
        let w = self.sbp.weights();
        let _ = dir;
        w[line % n] * w[line / n]
    }

    /// Node of face `face = 2 * dir + side` at tangential coordinates `(a, b)`,
    /// where `a` runs along the lower remaining direction.
    pub fn face_node(&self, face: usize, a: usize, b: usize) -> usize {
        let last = self.n() - 1;
        let s = if face % 2 == 0 { 0 } else { last };
        match face / 2 {
            0 => self.node(s, a, b),
            1 => self.node(a, s, b),
            _ => self.node(a, b, s),
        }
    }

    /// Derivative along `dir` of a scalar nodal field.
    pub fn apply_d(&self, dir: usize, f: &[f64], out: &mut [f64]) {
        let n = self.n();
        let st = self.stride(dir);
        for line in 0..n * n {
            let s0 = self.line_start(dir, line);
            for i in 0..n {
                let row = self.sbp.d_row(i);
                let mut acc = 0.0;
                for (j, dij) in row.iter().enumerate() {
                    acc += dij * f[s0 + j * st];
                }
                out[s0 + i * st] = acc;
            }
        }
    }

    pub fn d(&self, dir: usize, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        self.apply_d(dir, f, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_degree_bases() {
        let b = build_lgl_basis(1).unwrap();
        assert_eq!(b.nodes(), &[-1.0, 1.0]);
        assert_eq!(b.weights(), &[1.0, 1.0]);
        let b = build_lgl_basis(2).unwrap();
        assert_eq!(b.nodes(), &[-1.0, 0.0, 1.0]);
        for (w, e) in b.weights().iter().zip([1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0]) {
            assert!((w - e).abs() < 1e-15);
        }
    }

    #[test]
    fn degree_four_nodes() {
        let b = build_lgl_basis(4).unwrap();
        let r = (3.0f64 / 7.0).sqrt();
        let expect = [-1.0, -r, 0.0, r, 1.0];
        for (x, e) in b.nodes().iter().zip(expect) {
            assert!((x - e).abs() < 1e-15);
        }
        let w = [0.1, 49.0 / 90.0, 32.0 / 45.0, 49.0 / 90.0, 0.1];
        for (a, e) in b.weights().iter().zip(w) {
            assert!((a - e).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_out_of_range_degree() {
        assert!(matches!(build_lgl_basis(0), Err(Error::Parameter(_))));
        assert!(matches!(build_lgl_basis(9), Err(Error::Parameter(_))));
    }

    #[test]
    fn p1_operator() {
        let s = Sbp1d::new(1).unwrap();
        for i in 0..2 {
            assert!((s.d(i, 0) + 0.5).abs() < 1e-15);
            assert!((s.d(i, 1) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn sbp_property_all_degrees() {
        for p in 1..=MAX_DEGREE {
            let s = Sbp1d::new(p).unwrap();
            let n = s.n();
            for i in 0..n {
                for j in 0..n {
                    let r = s.q(i, j) + s.q(j, i) - s.b(i, j);
                    assert!(r.abs() < 1e-13, "p={p} ({i},{j}) residual {r}");
                }
            }
            let total: f64 = s.weights().iter().sum();
            assert!((total - 2.0).abs() < 1e-14);
            let sp = s.flux_point_spacings();
            for (a, b) in sp.iter().zip(s.weights()) {
                assert!(*a > 0.0 && (a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn differentiates_monomials_exactly() {
        for p in 1..=MAX_DEGREE {
            let s = Sbp1d::new(p).unwrap();
            for deg in 0..=p {
                let f: Vec<f64> = s.nodes().iter().map(|x| x.powi(deg as i32)).collect();
                let df = s.apply_d(&f);
                for (x, v) in s.nodes().iter().zip(df) {
                    let e = if deg == 0 {
                        0.0
                    } else {
                        deg as f64 * x.powi(deg as i32 - 1)
                    };
                    assert!((v - e).abs() < 1e-11, "p={p} deg={deg}");
                }
            }
        }
    }

    #[test]
    fn telescoping_with_arithmetic_flux() {
        let s = Sbp1d::new(1).unwrap();
        let f = [0.3, 1.7];
        let fbar = s.flux_point_values(|l, r| 0.5 * (f[l] + f[r]));
        assert!(telescope_residual(&s, &f, &fbar).unwrap() < 1e-15);
        assert!(telescope_residual(&s, &f, &fbar[..2]).is_err());
    }

    #[test]
    fn tensor_indexing_round_trip() {
        let t = TensorOps::new(3).unwrap();
        for node in 0..t.nodes_per_element() {
            let [i, j, k] = t.ijk(node);
            assert_eq!(t.node(i, j, k), node);
        }
        let w: f64 = (0..t.nodes_per_element()).map(|n| t.volume_weight(n)).sum();
        assert!((w - 8.0).abs() < 1e-13);
    }

    #[test]
    fn tensor_derivative_kills_constants_along_direction() {
        let t = TensorOps::new(4).unwrap();
        let x = t.sbp().nodes().to_vec();
        let f: Vec<f64> = (0..t.nodes_per_element())
            .map(|n| {
                let [_, j, k] = t.ijk(n);
                x[j].sin() + x[k] * x[k]
            })
            .collect();
        let d = t.d(0, &f);
        assert!(d.iter().all(|v| v.abs() < 1e-13));
    }
}
