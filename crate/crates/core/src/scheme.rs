//! Semi-discrete right-hand side of the first-order finite-volume scheme on
//! LGL solution points: entropy conservative volume fluxes with averaged
//! metrics, matrix dissipation, Brenner artificial dissipation, high-order
//! viscous terms and interface penalties.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, FaceLink, HexMesh};
use crate::metrics::{compute_metrics, face_sign, ElementGeometry};
use crate::sbp::TensorOps;
use crate::thermo::{dot, norm, Cons, Flux, GasModel, Prim, Vec3};
use crate::two_point::{brenner_apply, chandrashekar, mr_apply, DiffusionCoeffs, NuW};
use crate::viscous::{contravariant, viscous_flux_from_entropy};

pub type ExactFn = Arc<dyn Fn(&Vec3, f64) -> Prim + Send + Sync>;

#[derive(Clone)]
pub enum BoundaryCondition {
    /// Exterior state from a prescribed field, imposed through the interface flux.
    Dirichlet(ExactFn),
    /// Mirrored normal velocity.
    Symmetry,
    /// Exterior state equal to the interior state.
    Extrapolate,
}

impl std::fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Dirichlet(_) => write!(f, "Dirichlet"),
            Self::Symmetry => write!(f, "Symmetry"),
            Self::Extrapolate => write!(f, "Extrapolate"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeOptions {
    /// Matrix dissipation in the volume and at interfaces; `false` gives a
    /// purely entropy conservative inviscid discretization.
    pub dissipation: bool,
    pub viscous: bool,
    /// Artificial mass-diffusion coefficient relative to the artificial viscosity.
    pub c_rho: f64,
    /// Artificial heat-diffusion coefficient relative to the artificial viscosity.
    pub c_t: f64,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        Self {
            dissipation: true,
            viscous: true,
            c_rho: 1.0,
            c_t: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Ec,
    Ed,
    InviscidPenalty,
    Viscous,
    Ad,
    AdSigma,
    AdPenalty,
}

impl Part {
    pub const ALL: [Part; 7] = [
        Part::Ec,
        Part::Ed,
        Part::InviscidPenalty,
        Part::Viscous,
        Part::Ad,
        Part::AdSigma,
        Part::AdPenalty,
    ];

    fn index(self) -> usize {
        self as usize
    }
}

/// Receives scaled contributions `scale * v` to the right-hand side at a node.
pub trait RhsSink {
    fn add(&mut self, part: Part, node: usize, v: &Flux, scale: f64);
}

impl RhsSink for Vec<[f64; 5]> {
    #[inline]
    fn add(&mut self, _part: Part, node: usize, v: &Flux, scale: f64) {
        let r = &mut self[node];
        for c in 0..5 {
            r[c] += scale * v[c];
        }
    }
}

/// Right-hand side split by term.
#[derive(Debug, Clone)]
pub struct RhsBreakdown {
    pub parts: [Vec<[f64; 5]>; 7],
}

impl RhsBreakdown {
    pub fn zeros(len: usize) -> Self {
        Self {
            parts: std::array::from_fn(|_| vec![[0.0; 5]; len]),
        }
    }

    pub fn part(&self, p: Part) -> &[[f64; 5]] {
        &self.parts[p.index()]
    }

    pub fn total(&self) -> Vec<[f64; 5]> {
        let mut out = vec![[0.0; 5]; self.parts[0].len()];
        for part in &self.parts {
            for (o, v) in out.iter_mut().zip(part) {
                for c in 0..5 {
                    o[c] += v[c];
                }
            }
        }
        out
    }
}

impl RhsSink for RhsBreakdown {
    #[inline]
    fn add(&mut self, part: Part, node: usize, v: &Flux, scale: f64) {
        let r = &mut self.parts[part.index()][node];
        for c in 0..5 {
            r[c] += scale * v[c];
        }
    }
}

/// Face connectivity with node-level maps.
#[derive(Debug, Clone)]
pub enum FaceConn {
    /// Global index of the coincident neighbour node for each face node `a + n b`.
    Interior(Vec<usize>),
    Boundary(BoundaryTag),
}

/// Nodal primitive and entropy variables of a field.
#[derive(Debug, Clone)]
pub struct StateView {
    pub prim: Vec<Prim>,
    pub w: Vec<[f64; 5]>,
    /// Prescribed exterior states on Dirichlet faces at one time, indexed by
    /// the face slot and then the face node.
    pub dirichlet: Option<(f64, Vec<Vec<Prim>>)>,
}

/// Lifted entropy-variable gradients and Cartesian viscous fluxes.
#[derive(Debug, Clone, Default)]
pub struct ViscousData {
    /// `J dw/dx_m` per node.
    pub jgrad: Vec<[[f64; 5]; 3]>,
    /// Cartesian viscous flux per node.
    pub flux: Vec<[Flux; 3]>,
}

/// Scalar coefficient stored at every flux point of every element line:
/// `data[l][(e n^2 + line)(n + 1) + k]`.
#[derive(Debug, Clone)]
pub struct FluxPointField {
    pub data: [Vec<f64>; 3],
}

impl FluxPointField {
    pub fn zeros(elements: usize, n: usize) -> Self {
        Self {
            data: std::array::from_fn(|_| vec![0.0; elements * n * n * (n + 1)]),
        }
    }

    #[inline]
    pub fn index(n: usize, e: usize, line: usize, k: usize) -> usize {
        (e * n * n + line) * (n + 1) + k
    }

    pub fn max(&self) -> f64 {
        self.data.iter().flatten().fold(0.0, |m: f64, &v| m.max(v))
    }
}

/// Exterior data seen from a face node.
#[derive(Debug, Clone, Copy)]
pub struct Partner {
    pub prim: Prim,
    pub w: [f64; 5],
    pub jac: f64,
    /// Global index of the coincident neighbour node, if interior.
    pub node: Option<usize>,
}

pub struct Scheme {
    pub gas: GasModel,
    pub ops: TensorOps,
    pub mesh: HexMesh,
    pub geom: Vec<ElementGeometry>,
    pub conn: Vec<[FaceConn; 6]>,
    pub boundaries: BTreeMap<BoundaryTag, BoundaryCondition>,
    pub options: SchemeOptions,
    /// Slot of each Dirichlet face in `StateView::dirichlet`.
    dirichlet_slots: Vec<[Option<usize>; 6]>,
}

impl Scheme {
    pub fn new(
        gas: GasModel,
        ops: TensorOps,
        mesh: HexMesh,
        boundaries: BTreeMap<BoundaryTag, BoundaryCondition>,
        options: SchemeOptions,
    ) -> Result<Self> {
        for tag in mesh.boundary_tags() {
            if !boundaries.contains_key(&tag) {
                return Err(Error::Config(format!(
                    "no boundary condition for boundary '{}'",
                    mesh.tag_name(tag)
                )));
            }
        }
        let geom = compute_metrics(&mesh, &ops)?;
        let n = ops.n();
        let np = ops.nodes_per_element();
        let conn = (0..mesh.num_elements())
            .map(|e| {
                std::array::from_fn(|f| match mesh.faces[e][f] {
                    FaceLink::Interior {
                        element,
                        face,
                        orientation,
                    } => FaceConn::Interior(
                        (0..n * n)
                            .map(|ab| {
                                let (u, v) = orientation.map(ab % n, ab / n, n);
                                element * np + ops.face_node(face, u, v)
                            })
                            .collect(),
                    ),
                    FaceLink::Boundary(tag) => FaceConn::Boundary(tag),
                })
            })
            .collect::<Vec<[FaceConn; 6]>>();
        let mut slots = 0;
        let dirichlet_slots = conn
            .iter()
            .map(|faces| {
                std::array::from_fn(|f| match &faces[f] {
                    FaceConn::Boundary(tag)
                        if matches!(boundaries[tag], BoundaryCondition::Dirichlet(_)) =>
                    {
                        slots += 1;
                        Some(slots - 1)
                    }
                    _ => None,
                })
            })
            .collect();
        Ok(Self {
            gas,
            ops,
            mesh,
            geom,
            conn,
            boundaries,
            options,
            dirichlet_slots,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.mesh.num_elements()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_elements() * self.ops.nodes_per_element()
    }

    pub fn jac(&self, node: usize) -> f64 {
        let np = self.ops.nodes_per_element();
        self.geom[node / np].jac[node % np]
    }

    pub fn coords(&self, node: usize) -> Vec3 {
        let np = self.ops.nodes_per_element();
        self.geom[node / np].x[node % np]
    }

    /// Nodal conservative field from a primitive-variable function of position.
    pub fn project(&self, f: impl Fn(&Vec3) -> Prim) -> Vec<[f64; 5]> {
        (0..self.num_nodes())
            .map(|g| self.gas.cons(&f(&self.coords(g))).0)
            .collect()
    }

    pub fn view(&self, u: &[[f64; 5]]) -> Result<StateView> {
        let np = self.ops.nodes_per_element();
        let mut prim = Vec::with_capacity(u.len());
        let mut w = Vec::with_capacity(u.len());
        for (g, s) in u.iter().enumerate() {
            let q = self.gas.prim(&Cons(*s)).map_err(|_| {
                let c = Cons(*s);
                Error::InadmissibleAt {
                    element: g / np,
                    node: g % np,
                    rho: c.rho(),
                    internal_energy: c.internal_energy(),
                }
            })?;
            w.push(self.gas.entropy_vars_prim(&q).0);
            prim.push(q);
        }
        Ok(StateView {
            prim,
            w,
            dirichlet: None,
        })
    }

    /// Like `view`, with the Dirichlet exterior states at time `t` evaluated once.
    pub fn view_at(&self, u: &[[f64; 5]], t: f64) -> Result<StateView> {
        let mut view = self.view(u)?;
        let np = self.ops.nodes_per_element();
        let n = self.ops.n();
        let mut states = Vec::new();
        for (e, faces) in self.dirichlet_slots.iter().enumerate() {
            for (f, slot) in faces.iter().enumerate() {
                if slot.is_none() {
                    continue;
                }
                let FaceConn::Boundary(tag) = &self.conn[e][f] else {
                    unreachable!()
                };
                let BoundaryCondition::Dirichlet(exact) = &self.boundaries[tag] else {
                    unreachable!()
                };
                states.push(
                    (0..n * n)
                        .map(|ab| {
                            exact(
                                &self.coords(e * np + self.ops.face_node(f, ab % n, ab / n)),
                                t,
                            )
                        })
                        .collect(),
                );
            }
        }
        view.dirichlet = Some((t, states));
        Ok(view)
    }

    /// Exterior data at face node `(a, b)` of face `f` of element `e`.
    pub fn partner(&self, e: usize, f: usize, ab: usize, t: f64, view: &StateView) -> Partner {
        let np = self.ops.nodes_per_element();
        let n = self.ops.n();
        let own = e * np + self.ops.face_node(f, ab % n, ab / n);
        match &self.conn[e][f] {
            FaceConn::Interior(map) => {
                let g = map[ab];
                Partner {
                    prim: view.prim[g],
                    w: view.w[g],
                    jac: self.jac(g),
                    node: Some(g),
                }
            }
            FaceConn::Boundary(tag) => {
                let q = view.prim[own];
                let prim = match &self.boundaries[tag] {
                    BoundaryCondition::Dirichlet(exact) => {
                        match (&view.dirichlet, self.dirichlet_slots[e][f]) {
                            (Some((tc, states)), Some(slot)) if *tc == t => states[slot][ab],
                            _ => exact(&self.coords(own), t),
                        }
                    }
                    BoundaryCondition::Extrapolate => q,
                    BoundaryCondition::Symmetry => {
                        let a = self.geom[e].metric[own % np][f / 2];
                        let na = norm(&a);
                        let nb = [a[0] / na, a[1] / na, a[2] / na];
                        let vn = dot(&q.vel, &nb);
                        Prim {
                            vel: std::array::from_fn(|i| q.vel[i] - 2.0 * vn * nb[i]),
                            ..q
                        }
                    }
                };
                Partner {
                    prim,
                    w: self.gas.entropy_vars_prim(&prim).0,
                    jac: self.jac(own),
                    node: None,
                }
            }
        }
    }

    /// Inviscid and viscous terms, without artificial dissipation.
    pub fn base_rhs<S: RhsSink>(
        &self,
        t: f64,
        view: &StateView,
        sink: &mut S,
    ) -> Option<ViscousData> {
        self.inviscid_volume(view, sink);
        self.inviscid_faces(t, view, sink);
        if self.options.viscous {
            let vd = self.viscous_data(t, view);
            self.viscous_divergence(t, view, &vd, sink);
            Some(vd)
        } else {
            None
        }
    }

    fn inviscid_volume<S: RhsSink>(&self, view: &StateView, sink: &mut S) {
        let n = self.ops.n();
        let np = self.ops.nodes_per_element();
        let wts = self.ops.sbp().weights();
        for e in 0..self.num_elements() {
            let geom = &self.geom[e];
            let base = e * np;
            for l in 0..3 {
                let st = self.ops.stride(l);
                for line in 0..n * n {
                    let s0 = base + self.ops.line_start(l, line);
                    for k in 1..n {
                        let (i, j) = (s0 + (k - 1) * st, s0 + k * st);
                        let a = geom.flux_metric(l, line, k, n);
                        let (qi, qj) = (&view.prim[i], &view.prim[j]);
                        let f = chandrashekar(&self.gas, qi, qj, &a);
                        sink.add(Part::Ec, i, &f, -1.0 / wts[k - 1]);
                        sink.add(Part::Ec, j, &f, 1.0 / wts[k]);
                        if self.options.dissipation {
                            let dw = std::array::from_fn(|c| view.w[j][c] - view.w[i][c]);
                            let d = mr_apply(&self.gas, qi, qj, &a, &dw);
                            sink.add(Part::Ed, i, &d, 1.0 / wts[k - 1]);
                            sink.add(Part::Ed, j, &d, -1.0 / wts[k]);
                        }
                    }
                    // pointwise fluxes at the two end flux points
                    let (i0, i1) = (s0, s0 + (n - 1) * st);
                    let f0 = self
                        .gas
                        .euler_flux(&view.prim[i0], &geom.flux_metric(l, line, 0, n));
                    let f1 = self
                        .gas
                        .euler_flux(&view.prim[i1], &geom.flux_metric(l, line, n, n));
                    sink.add(Part::Ec, i0, &f0, 1.0 / wts[0]);
                    sink.add(Part::Ec, i1, &f1, -1.0 / wts[n - 1]);
                }
            }
        }
    }

    /// Interface flux in the `+xi` direction between a left and right state.
    #[inline]
    pub fn interface_flux(
        &self,
        ql: &Prim,
        qr: &Prim,
        wl: &[f64; 5],
        wr: &[f64; 5],
        a: &Vec3,
    ) -> Flux {
        let f = chandrashekar(&self.gas, ql, qr, a);
        if self.options.dissipation {
            let dw = std::array::from_fn(|c| wr[c] - wl[c]);
            let d = mr_apply(&self.gas, ql, qr, a, &dw);
            std::array::from_fn(|c| f[c] - d[c])
        } else {
            f
        }
    }

    fn inviscid_faces<S: RhsSink>(&self, t: f64, view: &StateView, sink: &mut S) {
        let n = self.ops.n();
        let np = self.ops.nodes_per_element();
        let wts = self.ops.sbp().weights();
        for e in 0..self.num_elements() {
            for f in 0..6 {
                let l = f / 2;
                let right = f % 2 == 1;
                let w_end = if right { wts[n - 1] } else { wts[0] };
                for ab in 0..n * n {
                    let own = e * np + self.ops.face_node(f, ab % n, ab / n);
                    let p = self.partner(e, f, ab, t, view);
                    let a = self.geom[e].metric[own % np][l];
                    let q = &view.prim[own];
                    let fp = self.gas.euler_flux(q, &a);
                    let (star, sign) = if right {
                        (
                            self.interface_flux(q, &p.prim, &view.w[own], &p.w, &a),
                            -1.0,
                        )
                    } else {
                        (self.interface_flux(&p.prim, q, &p.w, &view.w[own], &a), 1.0)
                    };
                    let g: Flux = std::array::from_fn(|c| star[c] - fp[c]);
                    sink.add(Part::InviscidPenalty, own, &g, sign / w_end);
                }
            }
        }
    }

    /// Lifted entropy-variable gradients and Cartesian viscous fluxes.
    pub fn viscous_data(&self, t: f64, view: &StateView) -> ViscousData {
        let n = self.ops.n();
        let np = self.ops.nodes_per_element();
        let wts = self.ops.sbp().weights();
        let total = self.num_nodes();
        let mut jgrad = vec![[[0.0; 5]; 3]; total];
        let mut col = vec![0.0; np];
        let mut d = vec![0.0; np];
        for e in 0..self.num_elements() {
            let base = e * np;
            let geom = &self.geom[e];
            // computational derivatives with interface lifting
            let mut dxi = vec![[[0.0; 5]; 3]; np];
            for c in 0..5 {
                for a in 0..np {
                    col[a] = view.w[base + a][c];
                }
                for l in 0..3 {
                    self.ops.apply_d(l, &col, &mut d);
                    for a in 0..np {
                        dxi[a][l][c] = d[a];
                    }
                }
            }
            for f in 0..6 {
                let l = f / 2;
                let w_end = if f % 2 == 1 { wts[n - 1] } else { wts[0] };
                let s = face_sign(f);
                for ab in 0..n * n {
                    let a = self.ops.face_node(f, ab % n, ab / n);
                    let p = self.partner(e, f, ab, t, view);
                    for c in 0..5 {
                        dxi[a][l][c] += s * 0.5 * (p.w[c] - view.w[base + a][c]) / w_end;
                    }
                }
            }
            for a in 0..np {
                let g = &mut jgrad[base + a];
                for m in 0..3 {
                    for c in 0..5 {
                        g[m][c] = (0..3).map(|l| geom.metric[a][l][m] * dxi[a][l][c]).sum();
                    }
                }
            }
        }
        let flux = (0..total)
            .map(|g| {
                let inv = 1.0 / self.jac(g);
                let theta = jgrad[g].map(|row| row.map(|v| v * inv));
                viscous_flux_from_entropy(&self.gas, &view.prim[g], &theta)
            })
            .collect();
        ViscousData { jgrad, flux }
    }

    fn viscous_divergence<S: RhsSink>(
        &self,
        t: f64,
        view: &StateView,
        vd: &ViscousData,
        sink: &mut S,
    ) {
        let n = self.ops.n();
        let np = self.ops.nodes_per_element();
        let wts = self.ops.sbp().weights();
        let mut col = vec![0.0; np];
        let mut d = vec![0.0; np];
        for e in 0..self.num_elements() {
            let base = e * np;
            let geom = &self.geom[e];
            let fhat: Vec<[Flux; 3]> = (0..np)
                .map(|a| contravariant(&geom.metric[a], &vd.flux[base + a]))
                .collect();
            let mut acc = vec![[0.0; 5]; np];
            for l in 0..3 {
                for c in 0..5 {
                    for a in 0..np {
                        col[a] = fhat[a][l][c];
                    }
                    self.ops.apply_d(l, &col, &mut d);
                    for a in 0..np {
                        acc[a][c] += d[a];
                    }
                }
            }
            for f in 0..6 {
                let l = f / 2;
                let w_end = if f % 2 == 1 { wts[n - 1] } else { wts[0] };
                let s = face_sign(f);
                for ab in 0..n * n {
                    let a = self.ops.face_node(f, ab % n, ab / n);
                    let Some(g) = self.partner(e, f, ab, t, view).node else {
                        continue;
                    };
                    let m = &geom.metric[a][l];
                    for c in 0..5 {
                        let jump: f64 = (0..3)
                            .map(|k| m[k] * (vd.flux[g][k][c] - vd.flux[base + a][k][c]))
                            .sum();
                        acc[a][c] += s * 0.5 * jump / w_end;
                    }
                }
            }
            for a in 0..np {
                sink.add(Part::Viscous, base + a, &acc[a], 1.0);
            }
        }
    }

    /// Brenner artificial dissipation with nodal viscosity `mu_ad` and extra
    /// mass diffusion `sigma` at flux points.
    pub fn ad_rhs<S: RhsSink>(
        &self,
        t: f64,
        view: &StateView,
        mu_ad: &[f64],
        sigma: &FluxPointField,
        sink: &mut S,
    ) {
        let n = self.ops.n();
        let np = self.ops.nodes_per_element();
        let wts = self.ops.sbp().weights();
        let xi = self.ops.sbp().nodes();
        let (c_rho, c_t) = (self.options.c_rho, self.options.c_t);
        let nu = |q: &Prim| [q.rho, q.vel[0], q.vel[1], q.vel[2], q.temp];
        for e in 0..self.num_elements() {
            let geom = &self.geom[e];
            let base = e * np;
            for l in 0..3 {
                let st = self.ops.stride(l);
                for line in 0..n * n {
                    let s0 = base + self.ops.line_start(l, line);
                    for k in 1..n {
                        let (i, j) = (s0 + (k - 1) * st, s0 + k * st);
                        let mu = 0.5 * (mu_ad[i] + mu_ad[j]);
                        let sig = sigma.data[l][FluxPointField::index(n, e, line, k)];
                        if mu == 0.0 && sig == 0.0 {
                            continue;
                        }
                        let a = geom.flux_metric(l, line, k, n);
                        let (qi, qj) = (&view.prim[i], &view.prim[j]);
                        let nuw = NuW::from_prims(&self.gas, qi, qj);
                        let scale =
                            1.0 / ((self.jac(i) * self.jac(j)).sqrt() * (xi[k] - xi[k - 1]));
                        let (vi, vj) = (nu(qi), nu(qj));
                        let dnu: [f64; 5] = std::array::from_fn(|c| (vj[c] - vi[c]) * scale);
                        if mu > 0.0 {
                            let coeffs = DiffusionCoeffs {
                                sigma: c_rho * mu,
                                mu,
                                kappa: c_t * mu,
                            };
                            let f = brenner_apply(&nuw, &a, &coeffs, &dnu);
                            sink.add(Part::Ad, i, &f, 1.0 / wts[k - 1]);
                            sink.add(Part::Ad, j, &f, -1.0 / wts[k]);
                        }
                        if sig > 0.0 {
                            let coeffs = DiffusionCoeffs {
                                sigma: sig,
                                mu: 0.0,
                                kappa: 0.0,
                            };
                            let f = brenner_apply(&nuw, &a, &coeffs, &dnu);
                            sink.add(Part::AdSigma, i, &f, 1.0 / wts[k - 1]);
                            sink.add(Part::AdSigma, j, &f, -1.0 / wts[k]);
                        }
                    }
                }
            }
            for f in 0..6 {
                let l = f / 2;
                let right = f % 2 == 1;
                let (w_end, k) = if right { (wts[n - 1], n) } else { (wts[0], 0) };
                for ab in 0..n * n {
                    let own_local = self.ops.face_node(f, ab % n, ab / n);
                    let own = base + own_local;
                    let p = self.partner(e, f, ab, t, view);
                    let mu_ext = p.node.map_or(mu_ad[own], |g| mu_ad[g]);
                    let mu = 0.5 * (mu_ad[own] + mu_ext);
                    let line = self.face_line(f, ab);
                    let sig = sigma.data[l][FluxPointField::index(n, e, line, k)];
                    if mu == 0.0 && sig == 0.0 {
                        continue;
                    }
                    let a = geom.metric[own_local][l];
                    let q = &view.prim[own];
                    let nuw = NuW::from_prims(&self.gas, &p.prim, q);
                    let scale = 1.0 / ((p.jac * self.jac(own)).sqrt() * w_end);
                    let (vo, ve) = (nu(q), nu(&p.prim));
                    let dnu: [f64; 5] = std::array::from_fn(|c| (ve[c] - vo[c]) * scale);
                    let coeffs = DiffusionCoeffs {
                        sigma: c_rho * mu + sig,
                        mu,
                        kappa: c_t * mu,
                    };
                    let g = brenner_apply(&nuw, &a, &coeffs, &dnu);
                    sink.add(Part::AdPenalty, own, &g, 1.0 / w_end);
                }
            }
        }
    }

    /// Line index (along the face-normal direction) through face node `ab`.
    #[inline]
    pub fn face_line(&self, _face: usize, ab: usize) -> usize {
        ab
    }

    /// Full right-hand side `dU_hat/dt` for given artificial dissipation fields.
    pub fn rhs(
        &self,
        t: f64,
        u: &[[f64; 5]],
        mu_ad: Option<&[f64]>,
        sigma: Option<&FluxPointField>,
    ) -> Result<Vec<[f64; 5]>> {
        let view = self.view_at(u, t)?;
        let mut out = vec![[0.0; 5]; u.len()];
        self.base_rhs(t, &view, &mut out);
        self.add_ad(t, &view, mu_ad, sigma, &mut out);
        Ok(out)
    }

    pub fn rhs_breakdown(
        &self,
        t: f64,
        u: &[[f64; 5]],
        mu_ad: Option<&[f64]>,
        sigma: Option<&FluxPointField>,
    ) -> Result<RhsBreakdown> {
        let view = self.view(u)?;
        let mut out = RhsBreakdown::zeros(u.len());
        self.base_rhs(t, &view, &mut out);
        self.add_ad(t, &view, mu_ad, sigma, &mut out);
        Ok(out)
    }

    fn add_ad<S: RhsSink>(
        &self,
        t: f64,
        view: &StateView,
        mu_ad: Option<&[f64]>,
        sigma: Option<&FluxPointField>,
        sink: &mut S,
    ) {
        if mu_ad.is_none() && sigma.is_none() {
            return;
        }
        let zeros_mu;
        let mu = match mu_ad {
            Some(m) => m,
            None => {
                zeros_mu = vec![0.0; view.prim.len()];
                &zeros_mu
            }
        };
        let zeros_sig;
        let sig = match sigma {
            Some(s) => s,
            None => {
                zeros_sig = FluxPointField::zeros(self.num_elements(), self.ops.n());
                &zeros_sig
            }
        };
        self.ad_rhs(t, view, mu, sig, sink);
    }

    /// `sum P w^T rhs`: rate of change of the total mathematical entropy.
    pub fn entropy_rate(&self, view: &StateView, rhs: &[[f64; 5]]) -> f64 {
        let np = self.ops.nodes_per_element();
        rhs.iter()
            .enumerate()
            .map(|(g, r)| {
                self.ops.volume_weight(g % np) * (0..5).map(|c| view.w[g][c] * r[c]).sum::<f64>()
            })
            .sum()
    }

    /// Total mathematical entropy `sum P J S`.
    pub fn total_entropy(&self, view: &StateView) -> f64 {
        let np = self.ops.nodes_per_element();
        view.prim
            .iter()
            .enumerate()
            .map(|(g, q)| self.ops.volume_weight(g % np) * self.jac(g) * self.gas.math_entropy(q))
            .sum()
    }

    /// Totals `sum P J U` of the conserved variables.
    pub fn totals(&self, u: &[[f64; 5]]) -> [f64; 5] {
        let np = self.ops.nodes_per_element();
        let mut t = [0.0; 5];
        for (g, s) in u.iter().enumerate() {
            let wj = self.ops.volume_weight(g % np) * self.jac(g);
            for c in 0..5 {
                t[c] += wj * s[c];
            }
        }
        t
    }

    /// Nodal residual of the entropy equation, scaled by `J`, from the
    /// inviscid and viscous parts of the right-hand side.
    pub fn entropy_residual(
        &self,
        view: &StateView,
        base_rhs: &[[f64; 5]],
        vd: Option<&ViscousData>,
    ) -> Vec<f64> {
        let np = self.ops.nodes_per_element();
        let mut out = vec![0.0; view.prim.len()];
        let mut col = vec![0.0; np];
        let mut d = vec![0.0; np];
        for e in 0..self.num_elements() {
            let base = e * np;
            let geom = &self.geom[e];
            let mut div = vec![0.0; np];
            for l in 0..3 {
                for a in 0..np {
                    let g = base + a;
                    let q = &view.prim[g];
                    let s = self.gas.math_entropy(q);
                    let mut v = s * dot(&q.vel, &geom.metric[a][l]);
                    if let Some(vd) = vd {
                        let fh = contravariant(&geom.metric[a], &vd.flux[g]);
                        v -= (0..5).map(|c| view.w[g][c] * fh[l][c]).sum::<f64>();
                    }
                    col[a] = v;
                }
                self.ops.apply_d(l, &col, &mut d);
                for a in 0..np {
                    div[a] += d[a];
                }
            }
            for a in 0..np {
                let g = base + a;
                let mut r = -(0..5).map(|c| view.w[g][c] * base_rhs[g][c]).sum::<f64>() - div[a];
                if let Some(vd) = vd {
                    r -= (0..3)
                        .map(|m| {
                            (0..5)
                                .map(|c| vd.jgrad[g][m][c] * vd.flux[g][m][c])
                                .sum::<f64>()
                        })
                        .sum::<f64>();
                }
                out[g] = r;
            }
        }
        out
    }

    /// Advective and viscous time-step estimates at the current state.
    pub fn step_estimates(&self, view: &StateView, mu_ad: &[f64]) -> (f64, f64) {
        let np = self.ops.nodes_per_element();
        let wts = self.ops.sbp().weights();
        let pmin = self.ops.sbp().min_weight();
        let (c_rho, c_t) = (self.options.c_rho, self.options.c_t);
        let cv = self.gas.cv();
        let mut adv = f64::INFINITY;
        let mut visc = f64::INFINITY;
        for (g, q) in view.prim.iter().enumerate() {
            let a = g % np;
            let geom = &self.geom[g / np];
            let j = geom.jac[a];
            let ijk = self.ops.ijk(a);
            let c = self.gas.sound_speed(q.temp);
            let mut rate = 0.0;
            let mut inv_h2 = 0.0;
            for l in 0..3 {
                let m = &geom.metric[a][l];
                let nm = norm(m);
                rate += (dot(&q.vel, m).abs() + c * nm) / wts[ijk[l]];
                inv_h2 += (nm / (j * pmin)).powi(2);
            }
            if rate > 0.0 {
                adv = adv.min(j / rate);
            }
            let mu = if self.options.viscous {
                self.gas.mu(q.temp)
            } else {
                0.0
            };
            let kappa = if self.options.viscous {
                self.gas.kappa(q.temp)
            } else {
                0.0
            };
            let m_ad = mu_ad[g];
            let diff = ((4.0 / 3.0) * (mu + m_ad)).max((kappa + c_t * m_ad) / cv) + c_rho * m_ad;
            if diff > 0.0 {
                visc = visc.min(q.rho / (diff * inv_h2));
            }
        }
        (adv, visc)
    }
}
