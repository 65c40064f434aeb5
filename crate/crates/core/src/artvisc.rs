//! Sensor-driven artificial viscosity: entropy-residual, compression and
//! pressure sensors, a local reference spacing, the elementwise upper bound
//! and the continuous vertex-interpolated nodal field.

use std::f64::consts::FRAC_PI_2;

use crate::mesh::corner_weight;
use crate::scheme::{Scheme, StateView, ViscousData};
use crate::thermo::{dot, norm, Vec3};
use crate::viscous::cartesian_gradient;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorConfig {
    /// Compression sensor exponent.
    pub b: f64,
    /// Compression sensor switch location.
    pub cn_star: f64,
    /// Compression sensor switch sharpness.
    pub a: f64,
    /// Relative size of the division guards.
    pub eps: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            b: 0.1,
            cn_star: 0.2,
            a: 50.0,
            eps: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ElementSensors {
    pub sn: f64,
    pub cn: f64,
    pub pn: f64,
    pub h_hat: f64,
    pub h: f64,
    pub mu_max: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ViscosityField {
    pub elements: Vec<ElementSensors>,
    /// Per canonical vertex.
    pub vertex: Vec<f64>,
    pub nodal: Vec<f64>,
}

impl ViscosityField {
    pub fn zeros(scheme: &Scheme) -> Self {
        Self {
            elements: vec![ElementSensors::default(); scheme.num_elements()],
            vertex: vec![0.0; scheme.mesh.num_vertices()],
            nodal: vec![0.0; scheme.num_nodes()],
        }
    }

    pub fn flagged(&self) -> usize {
        self.elements.iter().filter(|s| s.sn > 0.0).count()
    }
}

/// Elementwise residual sensor from the pointwise ratios `r`.
pub fn residual_sensor(r: &[f64], p: usize, delta: f64) -> f64 {
    let rmax = r.iter().fold(0.0f64, |m, &v| m.max(v));
    let pf = p as f64;
    let expo = if p >= 2 {
        1f64.max((pf - 1.0) / (pf - 1.5))
    } else {
        1.0
    };
    let sn0 = rmax.powf(expo);
    if sn0 >= 0.2f64.max(delta) {
        sn0
    } else {
        0.0
    }
}

/// Pointwise residual ratio `|R/J| / max(|R/J|, eta)`.
pub fn residual_ratio(r_over_j: f64, eta: f64) -> f64 {
    let a = r_over_j.abs();
    let d = a.max(eta);
    if d > 0.0 {
        a / d
    } else {
        0.0
    }
}

/// Compression sensor from the weighted divergence samples `(P J, div V)`.
pub fn compression_sensor(
    samples: impl Iterator<Item = (f64, f64)>,
    cfg: &SensorConfig,
    eps: f64,
) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (w, div) in samples {
        num -= w * div;
        den += w * div.abs();
    }
    let cn0 = (num / (den + eps)).max(0.0);
    compression_switch(cn0, cfg)
}

pub fn compression_switch(cn0: f64, cfg: &SensorConfig) -> f64 {
    if cn0 <= 0.0 {
        return 0.0;
    }
    cn0.powf(cfg.b) * ((cfg.a * (cn0 - cfg.cn_star)).atan() + FRAC_PI_2)
        / ((cfg.a * (1.0 - cfg.cn_star)).atan() + FRAC_PI_2)
}

/// Pressure sensor from the weighted samples `(P J, V, grad P)`.
pub fn pressure_sensor(samples: impl Iterator<Item = (f64, Vec3, Vec3)>, eps: f64) -> f64 {
    let (mut num, mut den) = (0.0, eps);
    for (w, v, gp) in samples {
        num -= w * dot(&v, &gp);
        den += w * norm(&v) * norm(&gp);
    }
    (num / den).max(0.0)
}

/// Two-point derivative along a line of `n` nodes at index `i`, switching
/// from forward to centered to backward differences across the line.
pub fn two_point_derivative(f: impl Fn(usize) -> f64, xi: &[f64], i: usize) -> f64 {
    let n = xi.len();
    let half = n as f64 / 2.0;
    let i1 = (i + 1) as f64;
    if i1 <= half && i + 1 < n {
        (f(i + 1) - f(i)) / (xi[i + 1] - xi[i])
    } else if i1 <= half + 1.0 && i + 1 < n && i > 0 {
        (f(i + 1) - f(i - 1)) / (xi[i + 1] - xi[i - 1])
    } else {
        (f(i) - f(i - 1)) / (xi[i] - xi[i - 1])
    }
}

/// Weighted geometric means over vertices of the per-element spacings:
/// first per vertex over touching elements with nonzero spacing, then per
/// element over its vertices with nonzero values.
pub fn reference_spacing(scheme: &Scheme, h_hat: &[f64]) -> Vec<f64> {
    let mesh = &scheme.mesh;
    let hv: Vec<f64> = mesh
        .vertex_elements
        .iter()
        .map(|els| geometric_mean(els.iter().map(|&e| h_hat[e])))
        .collect();
    (0..mesh.num_elements())
        .map(|e| {
            if h_hat[e] == 0.0 {
                return 0.0;
            }
            let mut cv = mesh.element_canonical(e).to_vec();
            cv.sort_unstable();
            cv.dedup();
            geometric_mean(cv.iter().map(|&v| hv[v]))
        })
        .collect()
}

fn geometric_mean(vals: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0, 0usize);
    for v in vals.filter(|v| *v > 0.0) {
        s += v.ln();
        c += 1;
    }
    if c == 0 {
        0.0
    } else {
        (s / c as f64).exp()
    }
}

/// Vertex maxima of the elementwise bound and trilinear interpolation to nodes.
pub fn smooth_viscosity(scheme: &Scheme, mu_max: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mesh = &scheme.mesh;
    let vertex: Vec<f64> = mesh
        .vertex_elements
        .iter()
        .map(|els| els.iter().fold(0.0f64, |m, &e| m.max(mu_max[e])))
        .collect();
    let np = scheme.ops.nodes_per_element();
    let xi = scheme.ops.sbp().nodes();
    let mut nodal = vec![0.0; scheme.num_nodes()];
    for e in 0..mesh.num_elements() {
        let cv = mesh.element_canonical(e);
        if cv.iter().all(|&v| vertex[v] == 0.0) {
            continue;
        }
        for a in 0..np {
            let ijk = scheme.ops.ijk(a);
            let r = [xi[ijk[0]], xi[ijk[1]], xi[ijk[2]]];
            nodal[e * np + a] = (0..8)
                .map(|lv| corner_weight(lv, r) * vertex[cv[lv]])
                .sum::<f64>()
                .max(0.0);
        }
    }
    (vertex, nodal)
}

/// Nodal velocity and `sqrt(gamma P)` used by the bound.
struct NodeFields {
    vel: Vec<Vec3>,
    sgp: Vec<f64>,
}

/// Cartesian two-point gradients at node `a` of element `e` of the velocity
/// and `sqrt(gamma P)`, optionally replacing the derivative normal to `face`
/// by the jump to the coincident neighbour node.
fn two_point_gradients(
    scheme: &Scheme,
    fields: &NodeFields,
    e: usize,
    a: usize,
    replace: Option<(usize, usize)>,
) -> ([Vec3; 3], Vec3) {
    let ops = &scheme.ops;
    let np = ops.nodes_per_element();
    let xi = ops.sbp().nodes();
    let w0 = ops.sbp().weights()[0];
    let base = e * np;
    let ijk = ops.ijk(a);
    let mut dxi = [[0.0; 4]; 3];
    for l in 0..3 {
        let st = ops.stride(l);
        let start = a - ijk[l] * st;
        let val = |g: usize, c: usize| {
            if c < 3 {
                fields.vel[g][c]
            } else {
                fields.sgp[g]
            }
        };
        match replace {
            Some((f, nbr)) if f / 2 == l => {
                let s = if f % 2 == 1 { 1.0 } else { -1.0 };
                for c in 0..4 {
                    dxi[l][c] = s * (val(nbr, c) - val(base + a, c)) / w0;
                }
            }
            _ => {
                for c in 0..4 {
                    dxi[l][c] = two_point_derivative(|i| val(base + start + i * st, c), xi, ijk[l]);
                }
            }
        }
    }
    let geom = &scheme.geom[e];
    let inv = 1.0 / geom.jac[a];
    let mut gv = [[0.0; 3]; 3];
    let mut gs = [0.0; 3];
    for m in 0..3 {
        for l in 0..3 {
            let am = geom.metric[a][l][m] * inv;
            for c in 0..3 {
                gv[c][m] += am * dxi[l][c];
            }
            gs[m] += am * dxi[l][3];
        }
    }
    (gv, gs)
}

/// Full viscosity pipeline for the current state.
pub fn compute_viscosity(
    scheme: &Scheme,
    view: &StateView,
    residual: &[f64],
    vd: &ViscousData,
    cfg: &SensorConfig,
) -> ViscosityField {
    let ops = &scheme.ops;
    let gas = &scheme.gas;
    let np = ops.nodes_per_element();
    let n = ops.n();
    let p = n - 1;
    let k_el = scheme.num_elements();
    let wts = ops.sbp().weights();
    let p11 = ops.sbp().min_weight();
    let total_volume: f64 = scheme.geom.iter().map(|g| g.volume(ops)).sum();
    let l_star = total_volume.cbrt();
    let delta = (1.0 / k_el as f64).cbrt();

    let (rho_ref, c_ref) = view.prim.iter().fold((0.0f64, 0.0f64), |(r, c), q| {
        (r.max(q.rho), c.max(gas.sound_speed(q.temp)))
    });

    let fields = NodeFields {
        vel: view.prim.iter().map(|q| q.vel).collect(),
        sgp: view
            .prim
            .iter()
            .map(|q| (gas.gamma * gas.pressure(q)).sqrt())
            .collect(),
    };

    let mut sensors = vec![ElementSensors::default(); k_el];
    for (e, sens) in sensors.iter_mut().enumerate() {
        let base = e * np;
        let geom = &scheme.geom[e];
        let r: Vec<f64> = (0..np)
            .map(|a| {
                let g = base + a;
                let q = &view.prim[g];
                let jac = geom.jac[a];
                let theta = |c: usize| {
                    let v: Vec3 = std::array::from_fn(|m| vd.jgrad[g][m][c] / jac);
                    norm(&v)
                };
                let s = gas.math_entropy(q);
                let ijk = ops.ijk(a);
                let eta = (gas.kappa(q.temp) * theta(4) * q.temp
                    + gas.mu(q.temp) * q.temp.sqrt() * (theta(1) + theta(2) + theta(3)).sqrt()
                    + s.abs() * norm(&q.vel)
                    + q.rho * delta * gas.sound_speed(q.temp))
                    * (1.0 / wts[ijk[0]] + 1.0 / wts[ijk[1]] + 1.0 / wts[ijk[2]])
                    * 2.0
                    / l_star;
                residual_ratio(residual[g] / jac, eta)
            })
            .collect();
        sens.sn = residual_sensor(&r, p, delta);
    }

    for (e, sens) in sensors.iter_mut().enumerate() {
        if sens.sn == 0.0 {
            continue;
        }
        let base = e * np;
        let geom = &scheme.geom[e];
        let vol = geom.volume(ops);
        let vp: Vec<[f64; 4]> = (0..np)
            .map(|a| {
                let q = &view.prim[base + a];
                [q.vel[0], q.vel[1], q.vel[2], gas.pressure(q)]
            })
            .collect();
        let grad = cartesian_gradient(ops, geom, &vp);
        let weight = |a: usize| ops.volume_weight(a) * geom.jac[a];
        let div = |a: usize| grad[a][0][0] + grad[a][1][1] + grad[a][2][2];
        sens.cn = compression_sensor(
            (0..np).map(|a| (weight(a), div(a))),
            cfg,
            cfg.eps * vol * c_ref / l_star,
        );
        sens.pn = pressure_sensor(
            (0..np).map(|a| {
                let gp: Vec3 = std::array::from_fn(|m| grad[a][m][3]);
                (weight(a), view.prim[base + a].vel, gp)
            }),
            cfg.eps * vol * rho_ref * c_ref.powi(3) / l_star,
        );

        // reference lengths weighted by directional velocity variation
        let xs: Vec<[f64; 3]> = geom.x.clone();
        let mut dx = [vec![[0.0; 3]; np], vec![[0.0; 3]; np], vec![[0.0; 3]; np]];
        let mut col = vec![0.0; np];
        let mut d = vec![0.0; np];
        for c in 0..3 {
            for a in 0..np {
                col[a] = xs[a][c];
            }
            for (m, dm) in dx.iter_mut().enumerate() {
                ops.apply_d(m, &col, &mut d);
                for a in 0..np {
                    dm[a][c] = d[a];
                }
            }
        }
        let (mut num, mut den) = (0.0, 0.0);
        for a in 0..np {
            let (gv, _) = two_point_gradients(scheme, &fields, e, a, None);
            let lens: [f64; 3] = std::array::from_fn(|m| norm(&dx[m][a]));
            let emag: [f64; 3] = std::array::from_fn(|m| {
                let t: Vec3 = std::array::from_fn(|c| dx[m][a][c] / lens[m]);
                let v: Vec3 = std::array::from_fn(|i| dot(&gv[i], &t));
                norm(&v) + cfg.eps
            });
            let esum: f64 = emag.iter().sum();
            let l: f64 = 2.0
                * (0..3)
                    .map(|m| lens[m].powf(emag[m] / esum))
                    .product::<f64>();
            num += ops.volume_weight(a) * l;
            den += ops.volume_weight(a);
        }
        sens.h_hat = num / den;
    }

    let h_hat: Vec<f64> = sensors.iter().map(|s| s.h_hat).collect();
    let h = reference_spacing(scheme, &h_hat);
    for (e, sens) in sensors.iter_mut().enumerate() {
        if sens.sn == 0.0 {
            continue;
        }
        sens.h = h[e];
        let z_sn = (1.25 * (sens.sn - 0.2)).clamp(0.0, 0.5);
        if z_sn == 0.0 || sens.h == 0.0 {
            continue;
        }
        let z_cn = 0.5 * p11 * (1.0 - sens.cn) + sens.cn;
        let z_pc = (0.5 * p11 * (1.0 - sens.pn) + sens.pn).min(z_cn);
        let base = e * np;
        let mut best = 0.0f64;
        for a in 0..np {
            let g = base + a;
            let q = &view.prim[g];
            let ijk = ops.ijk(a);
            let mut lr = 0.0;
            let mut cnt = 0.0;
            lr += q.rho.ln();
            cnt += 1.0;
            for l in 0..3 {
                let st = ops.stride(l);
                if ijk[l] > 0 {
                    lr += view.prim[g - st].rho.ln();
                    cnt += 1.0;
                }
                if ijk[l] + 1 < n {
                    lr += view.prim[g + st].rho.ln();
                    cnt += 1.0;
                }
            }
            let rho_bar = (lr / cnt).exp();
            let ma = norm(&q.vel) / gas.sound_speed(q.temp);
            let bracket = |(gv, gs): ([Vec3; 3], Vec3)| {
                let shear = (0..3)
                    .flat_map(|i| (0..3).filter(move |&m| m != i).map(move |m| (i, m)))
                    .map(|(i, m)| gv[i][m] * gv[i][m])
                    .sum::<f64>()
                    .sqrt();
                let div = gv[0][0] + gv[1][1] + gv[2][2];
                z_pc * (rho_bar * dot(&gs, &gs)).sqrt()
                    + rho_bar * (0.5 * p11 * shear + ma.min(z_cn) * div.abs())
            };
            best = best.max(bracket(two_point_gradients(scheme, &fields, e, a, None)));
            for f in 0..6 {
                let l = f / 2;
                let end = if f % 2 == 1 { n - 1 } else { 0 };
                if ijk[l] != end {
                    continue;
                }
                let tang: Vec<usize> = (0..3).filter(|&d| d != l).map(|d| ijk[d]).collect();
                let ab = tang[0] + n * tang[1];
                if let Some(nbr) = scheme.partner(e, f, ab, 0.0, view).node {
                    best = best.max(bracket(two_point_gradients(
                        scheme,
                        &fields,
                        e,
                        a,
                        Some((f, nbr)),
                    )));
                }
            }
        }
        let gamma = gas.gamma;
        sens.mu_max =
            sens.h * sens.h / p as f64 * 3.0 * (gamma + 1.0) / (32.0 * gamma) * z_sn * best;
    }

    let mu_max: Vec<f64> = sensors.iter().map(|s| s.mu_max).collect();
    let (vertex, nodal) = smooth_viscosity(scheme, &mu_max);
    ViscosityField {
        elements: sensors,
        vertex,
        nodal,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_box_mesh;
    use crate::sbp::TensorOps;
    use crate::scheme::SchemeOptions;
    use crate::thermo::{GasModel, Prim};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn box_scheme(k: usize, p: usize) -> Scheme {
        let mesh = build_box_mesh([k; 3], [[0.0, 1.0]; 3], [true; 3]).unwrap();
        Scheme::new(
            GasModel::default(),
            TensorOps::new(p).unwrap(),
            mesh,
            BTreeMap::new(),
            SchemeOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn compression_switch_reference_values() {
        let cfg = SensorConfig::default();
        assert_eq!(compression_switch(0.0, &cfg), 0.0);
        assert!((compression_switch(1.0, &cfg) - 1.0).abs() < 1e-15);
        let expected = 0.2f64.powf(0.1) * FRAC_PI_2 / (40f64.atan() + FRAC_PI_2);
        assert!((compression_switch(0.2, &cfg) - expected).abs() < 1e-15);
        assert!((expected - 0.42908).abs() < 1e-5);
    }

    #[test]
    fn compression_sensor_limits() {
        let cfg = SensorConfig::default();
        let expand = compression_sensor([(1.0, 2.0), (0.5, 1.0)].into_iter(), &cfg, 1e-14);
        assert_eq!(expand, 0.0);
        let compress = compression_sensor([(1.0, -2.0), (0.5, -1.0)].into_iter(), &cfg, 1e-14);
        assert!((compress - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pressure_sensor_limits() {
        let zero = pressure_sensor([(1.0, [1.0, 0.0, 0.0], [0.0; 3])].into_iter(), 1e-14);
        assert_eq!(zero, 0.0);
        let anti = pressure_sensor(
            [(1.0, [1.0, 2.0, 0.0], [-2.0, -4.0, 0.0])].into_iter(),
            1e-14,
        );
        assert!((anti - 1.0).abs() < 1e-12);
        let perp = pressure_sensor([(1.0, [1.0, 0.0, 0.0], [0.0, 3.0, 0.0])].into_iter(), 1e-14);
        assert_eq!(perp, 0.0);
    }

    #[test]
    fn residual_sensor_threshold() {
        assert_eq!(residual_sensor(&[0.0; 8], 4, 0.1), 0.0);
        assert_eq!(residual_sensor(&[1.0, 0.3], 4, 0.1), 1.0);
        // 0.19 is below threshold for p with unit exponent
        assert_eq!(residual_sensor(&[0.19], 2, 0.1), 0.0);
        let expo: f64 = 3.0 / 2.5;
        let v = residual_sensor(&[0.8], 4, 0.1);
        assert!((v - 0.8f64.powf(expo)).abs() < 1e-15);
        // threshold rises with delta on coarse meshes
        assert_eq!(residual_sensor(&[0.4], 2, 0.5), 0.0);
    }

    #[test]
    fn stencil_switching_is_exact_for_linear_data() {
        let sbp = crate::sbp::Sbp1d::new(4).unwrap();
        let xi = sbp.nodes();
        for i in 0..5 {
            let d = two_point_derivative(|j| 3.0 * xi[j] + 1.0, xi, i);
            assert!((d - 3.0).abs() < 1e-13);
        }
        // forward at first nodes, backward at the last
        let f = |j: usize| xi[j] * xi[j];
        assert!((two_point_derivative(f, xi, 0) - (xi[0] + xi[1])).abs() < 1e-14);
        assert!((two_point_derivative(f, xi, 4) - (xi[3] + xi[4])).abs() < 1e-14);
        assert!((two_point_derivative(f, xi, 2) - (xi[1] + xi[3])).abs() < 1e-14);
    }

    #[test]
    fn smoothing_of_uniform_and_single_flag() {
        let s = box_scheme(3, 2);
        let k = s.num_elements();
        let (_, nodal) = smooth_viscosity(&s, &vec![0.7; k]);
        assert!(nodal.iter().all(|v| (v - 0.7).abs() < 1e-14));
        let mut mu = vec![0.0; k];
        mu[13] = 1.0;
        let (vertex, nodal) = smooth_viscosity(&s, &mu);
        for &v in &s.mesh.element_canonical(13) {
            assert_eq!(vertex[v], 1.0);
        }
        // oracle: direct trilinear interpolation on each neighbour
        let np = s.ops.nodes_per_element();
        let xi = s.ops.sbp().nodes();
        for e in 0..k {
            let cv = s.mesh.element_canonical(e);
            for a in 0..np {
                let ijk = s.ops.ijk(a);
                let mut expect = 0.0;
                for lv in 0..8 {
                    let w: f64 = (0..3)
                        .map(|d| {
                            if (lv >> d) & 1 == 1 {
                                0.5 * (1.0 + xi[ijk[d]])
                            } else {
                                0.5 * (1.0 - xi[ijk[d]])
                            }
                        })
                        .product();
                    expect += w * vertex[cv[lv]];
                }
                assert!((nodal[e * np + a] - expect).abs() < 1e-15);
            }
        }
        // continuity across every interior face
        let n = s.ops.n();
        for e in 0..k {
            for f in 0..6 {
                for ab in 0..n * n {
                    let own = e * np + s.ops.face_node(f, ab % n, ab / n);
                    if let crate::scheme::FaceConn::Interior(map) = &s.conn[e][f] {
                        assert!((nodal[own] - nodal[map[ab]]).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn spacing_on_uniform_mesh() {
        let s = box_scheme(4, 3);
        let k = s.num_elements();
        let h = reference_spacing(&s, &vec![0.25; k]);
        assert!(h.iter().all(|v| (v - 0.25).abs() < 1e-14));
        let mut one = vec![0.0; k];
        one[5] = 0.25;
        let h = reference_spacing(&s, &one);
        assert!((h[5] - 0.25).abs() < 1e-14);
        assert_eq!(h[0], 0.0);
    }

    fn pipeline(s: &Scheme, f: impl Fn(&Vec3) -> Prim) -> ViscosityField {
        let u = s.project(f);
        let view = s.view(&u).unwrap();
        let mut rhs = vec![[0.0; 5]; u.len()];
        let vd = s.base_rhs(0.0, &view, &mut rhs).unwrap();
        let res = s.entropy_residual(&view, &rhs, Some(&vd));
        compute_viscosity(s, &view, &res, &vd, &SensorConfig::default())
    }

    #[test]
    fn uniform_state_gives_zero_viscosity() {
        let s = box_scheme(2, 3);
        let v = pipeline(&s, |_| Prim::new(1.0, [0.4, 0.1, -0.2], 1.0));
        assert_eq!(v.flagged(), 0);
        assert!(v.nodal.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn shock_is_flagged_and_smooth_region_is_not() {
        let s = box_scheme(4, 3);
        let v = pipeline(&s, |x| {
            if (x[0] - 0.5).abs() < 0.25 {
                Prim::new(1.0, [0.0; 3], 1.0)
            } else {
                Prim::new(0.125, [0.0; 3], 0.8)
            }
        });
        assert!(v.flagged() > 0);
        assert!(v.nodal.iter().all(|&m| m >= 0.0));
        assert!(v.nodal.iter().any(|&m| m > 0.0));
        let smooth = pipeline(&s, |x| {
            Prim::new(
                1.0 + 0.01 * (std::f64::consts::TAU * x[0]).sin(),
                [0.1, 0.0, 0.0],
                1.0,
            )
        });
        assert_eq!(smooth.flagged(), 0);
    }

    proptest! {
        #[test]
        fn sensors_stay_in_unit_interval(samples in proptest::collection::vec((0.01f64..2.0, -5.0f64..5.0, -1.0f64..1.0, -1.0f64..1.0), 1..30)) {
            let cfg = SensorConfig::default();
            let cn = compression_sensor(samples.iter().map(|s| (s.0, s.1)), &cfg, 1e-14);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&cn));
            let pn = pressure_sensor(samples.iter().map(|s| (s.0, [s.2, s.3, 0.1], [s.1, s.3, -s.2])), 1e-14);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&pn));
            let r: Vec<f64> = samples.iter().map(|s| residual_ratio(s.1, s.0)).collect();
            prop_assert!(r.iter().all(|v| (0.0..=1.0).contains(v)));
            let sn = residual_sensor(&r, 4, 0.1);
            prop_assert!(sn == 0.0 || (0.2..=1.0).contains(&sn));
        }
    }
}
