//! Two-point fluxes and dissipation matrices.
//!
//! All jump conventions are `delta = (state 2) - (state 1)`; the direction
//! `n` is an (unnormalised) contravariant metric vector.

use crate::error::{Error, Result};
use crate::thermo::{dot, harmonic_mean, log_mean, norm, Cons, Flux, GasModel, Prim, Vec3};

pub type Mat5 = [[f64; 5]; 5];

fn cartesian_triple(f: impl Fn(&Vec3) -> Flux) -> [Flux; 3] {
    [
        f(&[1.0, 0.0, 0.0]),
        f(&[0.0, 1.0, 0.0]),
        f(&[0.0, 0.0, 1.0]),
    ]
}

/// Chandrashekar's kinetic-energy-preserving entropy conservative flux.
#[inline]
pub fn chandrashekar(gas: &GasModel, q1: &Prim, q2: &Prim, n: &Vec3) -> Flux {
    let r = gas.r_gas;
    let b1 = 0.5 / (r * q1.temp);
    let b2 = 0.5 / (r * q2.temp);
    let rho_ln = log_mean(q1.rho, q2.rho);
    let beta_ln = log_mean(b1, b2);
    let va = [
        0.5 * (q1.vel[0] + q2.vel[0]),
        0.5 * (q1.vel[1] + q2.vel[1]),
        0.5 * (q1.vel[2] + q2.vel[2]),
    ];
    let p_hat = 0.5 * (q1.rho + q2.rho) / (b1 + b2);
    let mass = rho_ln * dot(&va, n);
    let fm = [
        p_hat * n[0] + va[0] * mass,
        p_hat * n[1] + va[1] * mass,
        p_hat * n[2] + va[2] * mass,
    ];
    let v2 = 0.5 * (dot(&q1.vel, &q1.vel) + dot(&q2.vel, &q2.vel));
    let fe = (0.5 / ((gas.gamma - 1.0) * beta_ln) - 0.5 * v2) * mass + dot(&va, &fm);
    [mass, fm[0], fm[1], fm[2], fe]
}

pub fn ec_flux_chandrashekar(gas: &GasModel, u1: &Cons, u2: &Cons) -> Result<[Flux; 3]> {
    let (q1, q2) = (gas.prim(u1)?, gas.prim(u2)?);
    Ok(cartesian_triple(|n| chandrashekar(gas, &q1, &q2, n)))
}

/// Ismail and Roe's entropy conservative flux.
pub fn ismail_roe(gas: &GasModel, q1: &Prim, q2: &Prim, n: &Vec3) -> Flux {
    let g = gas.gamma;
    let (p1, p2) = (gas.pressure(q1), gas.pressure(q2));
    let (a1, a2) = ((q1.rho / p1).sqrt(), (q2.rho / p2).sqrt());
    let (e1, e2) = ((q1.rho * p1).sqrt(), (q2.rho * p2).sqrt());
    let z1a = 0.5 * (a1 + a2);
    let z1l = log_mean(a1, a2);
    let z5a = 0.5 * (e1 + e2);
    let z5l = log_mean(e1, e2);
    let rho = z1a * z5l;
    let vel = [
        0.5 * (a1 * q1.vel[0] + a2 * q2.vel[0]) / z1a,
        0.5 * (a1 * q1.vel[1] + a2 * q2.vel[1]) / z1a,
        0.5 * (a1 * q1.vel[2] + a2 * q2.vel[2]) / z1a,
    ];
    let p_1 = z5a / z1a;
    let p_2 = (g + 1.0) / (2.0 * g) * z5l / z1l + (g - 1.0) / (2.0 * g) * z5a / z1a;
    let h = g * p_2 / (rho * (g - 1.0)) + 0.5 * dot(&vel, &vel);
    let mass = rho * dot(&vel, n);
    [
        mass,
        mass * vel[0] + p_1 * n[0],
        mass * vel[1] + p_1 * n[1],
        mass * vel[2] + p_1 * n[2],
        mass * h,
    ]
}

pub fn ec_flux_ismail_roe(gas: &GasModel, u1: &Cons, u2: &Cons) -> Result<[Flux; 3]> {
    let (q1, q2) = (gas.prim(u1)?, gas.prim(u2)?);
    Ok(cartesian_triple(|n| ismail_roe(gas, &q1, &q2, n)))
}

/// Two-point analogue of `d(rho, V, T) / dw`, upper triangular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuW {
    pub rho_l: f64,
    pub vel_a: Vec3,
    pub t_h: f64,
    pub t_g2: f64,
    pub e_avg: f64,
    pub r_gas: f64,
}

impl NuW {
    pub fn from_prims(gas: &GasModel, q1: &Prim, q2: &Prim) -> Self {
        let t_g2 = q1.temp * q2.temp;
        let t_l = log_mean(q1.temp, q2.temp);
        Self {
            rho_l: log_mean(q1.rho, q2.rho),
            vel_a: [
                0.5 * (q1.vel[0] + q2.vel[0]),
                0.5 * (q1.vel[1] + q2.vel[1]),
                0.5 * (q1.vel[2] + q2.vel[2]),
            ],
            t_h: harmonic_mean(q1.temp, q2.temp),
            t_g2,
            e_avg: t_g2 / t_l * gas.cv() + 0.5 * dot(&q1.vel, &q2.vel),
            r_gas: gas.r_gas,
        }
    }

    pub fn matrix(&self) -> Mat5 {
        let c = self.rho_l / self.r_gas;
        let v = self.vel_a;
        let mut m = [[0.0; 5]; 5];
        m[0] = [c, c * v[0], c * v[1], c * v[2], c * self.e_avg];
        for i in 0..3 {
            m[1 + i][1 + i] = self.t_h;
            m[1 + i][4] = self.t_h * v[i];
        }
        m[4][4] = self.t_g2;
        m
    }

    pub fn apply(&self, dw: &[f64; 5]) -> [f64; 5] {
        mat_vec(&self.matrix(), dw)
    }

    /// Inverse matrix `w_nu`.
    pub fn inverse(&self) -> Mat5 {
        let m = self.matrix();
        let mut inv = [[0.0; 5]; 5];
        // Back substitution column by column on an upper-triangular matrix.
        for col in 0..5 {
            let mut x = [0.0; 5];
            for row in (0..5).rev() {
                let mut s = if row == col { 1.0 } else { 0.0 };
                for k in row + 1..5 {
                    s -= m[row][k] * x[k];
                }
                x[row] = s / m[row][row];
            }
            for row in 0..5 {
                inv[row][col] = x[row];
            }
        }
        inv
    }
}

pub fn nu_w(gas: &GasModel, u1: &Cons, u2: &Cons) -> Result<NuW> {
    Ok(NuW::from_prims(gas, &gas.prim(u1)?, &gas.prim(u2)?))
}

pub fn w_nu(gas: &GasModel, u1: &Cons, u2: &Cons) -> Result<Mat5> {
    Ok(nu_w(gas, u1, u2)?.inverse())
}

/// Mass, momentum and heat diffusion coefficients of a Brenner-type flux.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiffusionCoeffs {
    pub sigma: f64,
    pub mu: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrennerMatrix {
    /// Acts on primitive jumps `(rho, V, T)`.
    pub c_nu: Mat5,
    /// `c_nu * nu_w`, acts on entropy-variable jumps; symmetric.
    pub c_w: Mat5,
}

/// `c_nu * dnu` without forming the matrix.
#[inline]
pub fn brenner_apply(nuw: &NuW, n: &Vec3, c: &DiffusionCoeffs, dnu: &[f64; 5]) -> Flux {
    let nn2 = dot(n, n);
    if nn2 == 0.0 {
        return [0.0; 5];
    }
    let inv = 1.0 / nn2.sqrt();
    let nb = [n[0] * inv, n[1] * inv, n[2] * inv];
    let dv = [dnu[1], dnu[2], dnu[3]];
    let ndv = dot(&nb, &dv) / 3.0;
    let va = &nuw.vel_a;
    let sr = c.sigma * dnu[0];
    [
        nn2 * sr,
        nn2 * (sr * va[0] + c.mu * (dv[0] + nb[0] * ndv)),
        nn2 * (sr * va[1] + c.mu * (dv[1] + nb[1] * ndv)),
        nn2 * (sr * va[2] + c.mu * (dv[2] + nb[2] * ndv)),
        nn2 * (sr * nuw.e_avg + c.mu * (dot(va, &dv) + dot(va, &nb) * ndv) + c.kappa * dnu[4]),
    ]
}

pub fn brenner_matrix(
    gas: &GasModel,
    u1: &Cons,
    u2: &Cons,
    n: &Vec3,
    c: &DiffusionCoeffs,
) -> Result<BrennerMatrix> {
    if norm(n) == 0.0 {
        return Err(Error::Parameter("direction vector must be nonzero".into()));
    }
    if c.sigma < 0.0 || c.mu < 0.0 || c.kappa < 0.0 {
        return Err(Error::Parameter(
            "diffusion coefficients must be non-negative".into(),
        ));
    }
    let nuw = nu_w(gas, u1, u2)?;
    let mut c_nu = [[0.0; 5]; 5];
    for col in 0..5 {
        let mut e = [0.0; 5];
        e[col] = 1.0;
        let v = brenner_apply(&nuw, n, c, &e);
        for row in 0..5 {
            c_nu[row][col] = v[row];
        }
    }
    let c_w = mat_mul(&c_nu, &nuw.matrix());
    Ok(BrennerMatrix { c_nu, c_w })
}

/// Closed-form `LDL^T` pivots of the symmetric Brenner matrix.
pub fn brenner_pivots(
    gas: &GasModel,
    u1: &Cons,
    u2: &Cons,
    n: &Vec3,
    c: &DiffusionCoeffs,
) -> Result<[f64; 5]> {
    let nuw = nu_w(gas, u1, u2)?;
    let nn2 = dot(n, n);
    let nn = nn2.sqrt();
    let (n1, n2, n3) = (n[0] / nn, n[1] / nn, n[2] / nn);
    let d2 = n1 * n1 + 3.0;
    let d3 = 4.0 * n1.powi(4)
        + 4.0 * n2.powi(4)
        + 7.0 * n2 * n2 * n3 * n3
        + 3.0 * n3.powi(4)
        + n1 * n1 * (8.0 * n2 * n2 + 7.0 * n3 * n3);
    Ok([
        nn2 * nuw.rho_l * c.sigma / gas.r_gas,
        nn2 * nuw.t_h * c.mu * d2 / 3.0,
        nn2 * nuw.t_h * c.mu * d3 / (3.0 + n1 * n1),
        nn2 * nuw.t_h * c.mu * 4.0 / (4.0 - n3 * n3),
        nn2 * nuw.t_g2 * c.kappa,
    ])
}

/// Pivots of an `LDL^T` factorisation without pivoting; `None` on a zero pivot.
pub fn ldl_pivots(m: &Mat5) -> Option<[f64; 5]> {
    let mut a = *m;
    let mut d = [0.0; 5];
    for k in 0..5 {
        d[k] = a[k][k];
        if d[k] == 0.0 {
            return None;
        }
        for i in k + 1..5 {
            let l = a[i][k] / d[k];
            for j in k + 1..5 {
                a[i][j] -= l * a[k][j];
            }
        }
    }
    Some(d)
}

/// Density-row data of the matrix dissipation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensitySpeed {
    pub lambda_c: f64,
    /// Density-independent part of the dissipative mass flux.
    pub script_v: f64,
    /// `|V.n|`, `|V.n - c|n||`, `|V.n + c|n||` at the averaged state.
    pub lambda: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrDissipation {
    pub matrix: Mat5,
    pub density: DensitySpeed,
}

/// Averaged state `[rho_L, (V1 T2 + V2 T1)/(T1 + T2), T_H]` used by the matrix dissipation.
pub fn mr_average(q1: &Prim, q2: &Prim) -> Prim {
    let ts = q1.temp + q2.temp;
    Prim {
        rho: log_mean(q1.rho, q2.rho),
        vel: std::array::from_fn(|i| (q1.vel[i] * q2.temp + q2.vel[i] * q1.temp) / ts),
        temp: 2.0 * q1.temp * q2.temp / ts,
    }
}

struct EigenParts {
    r_minus: [f64; 5],
    r_plus: [f64; 5],
    r_zero: [f64; 5],
    s_acoustic: f64,
    s_zero: f64,
    s_shear: f64,
    nb: Vec3,
    vel: Vec3,
    lambda: [f64; 3],
}

fn eigen_parts(gas: &GasModel, q: &Prim, n: &Vec3) -> EigenParts {
    let g = gas.gamma;
    let r = gas.r_gas;
    let nn = norm(n);
    let nb = [n[0] / nn, n[1] / nn, n[2] / nn];
    let c = gas.sound_speed(q.temp);
    let v = q.vel;
    let h = gas.cp() * q.temp + 0.5 * dot(&v, &v);
    let vnb = dot(&v, &nb);
    let vn = vnb * nn;
    EigenParts {
        r_minus: [
            1.0,
            v[0] - c * nb[0],
            v[1] - c * nb[1],
            v[2] - c * nb[2],
            h - c * vnb,
        ],
        r_plus: [
            1.0,
            v[0] + c * nb[0],
            v[1] + c * nb[1],
            v[2] + c * nb[2],
            h + c * vnb,
        ],
        r_zero: [1.0, v[0], v[1], v[2], 0.5 * dot(&v, &v)],
        s_acoustic: q.rho / (2.0 * g * r),
        s_zero: q.rho * (g - 1.0) / (g * r),
        s_shear: q.rho * q.temp,
        nb,
        vel: v,
        lambda: [vn - c * nn, vn + c * nn, vn],
    }
}

/// `Y f(Lambda) Y^T dw` for the scaled eigensystem of the flux Jacobian in
/// entropy variables at state `q`.
fn eigen_apply(e: &EigenParts, f: impl Fn(f64) -> f64, dw: &[f64; 5]) -> [f64; 5] {
    let d = |a: &[f64; 5]| a.iter().zip(dw).map(|(x, y)| x * y).sum::<f64>();
    let cm = f(e.lambda[0]) * e.s_acoustic * d(&e.r_minus);
    let cp = f(e.lambda[1]) * e.s_acoustic * d(&e.r_plus);
    let l0 = f(e.lambda[2]);
    let c0 = l0 * e.s_zero * d(&e.r_zero);
    // Shear part: projection orthogonal to the direction.
    let a = [
        dw[1] + e.vel[0] * dw[4],
        dw[2] + e.vel[1] * dw[4],
        dw[3] + e.vel[2] * dw[4],
    ];
    let an = dot(&a, &e.nb);
    let pa = [
        a[0] - an * e.nb[0],
        a[1] - an * e.nb[1],
        a[2] - an * e.nb[2],
    ];
    let sh = l0 * e.s_shear;
    let mut out = [0.0; 5];
    for k in 0..5 {
        out[k] = cm * e.r_minus[k] + cp * e.r_plus[k] + c0 * e.r_zero[k];
    }
    out[1] += sh * pa[0];
    out[2] += sh * pa[1];
    out[3] += sh * pa[2];
    out[4] += sh * dot(&e.vel, &pa);
    out
}

/// `M(q1, q2, n) dw`.
#[inline]
pub fn mr_apply(gas: &GasModel, q1: &Prim, q2: &Prim, n: &Vec3, dw: &[f64; 5]) -> Flux {
    let e = eigen_parts(gas, &mr_average(q1, q2), n);
    let v = eigen_apply(&e, f64::abs, dw);
    v.map(|x| 0.5 * x)
}

/// `Y g(Lambda) Y^T` as a dense matrix at a single state.
pub fn eigen_matrix(gas: &GasModel, q: &Prim, n: &Vec3, f: impl Fn(f64) -> f64 + Copy) -> Mat5 {
    let e = eigen_parts(gas, q, n);
    let mut m = [[0.0; 5]; 5];
    for col in 0..5 {
        let mut dw = [0.0; 5];
        dw[col] = 1.0;
        let v = eigen_apply(&e, f, &dw);
        for row in 0..5 {
            m[row][col] = v[row];
        }
    }
    m
}

pub fn mr_density_speed_prim(gas: &GasModel, q1: &Prim, q2: &Prim, n: &Vec3) -> DensitySpeed {
    let g = gas.gamma;
    let r = gas.r_gas;
    let avg = mr_average(q1, q2);
    let nn = norm(n);
    let c = gas.sound_speed(avg.temp);
    let vn = dot(&avg.vel, n);
    let l1 = vn.abs();
    let l2 = (vn - c * nn).abs();
    let l3 = (vn + c * nn).abs();
    let lambda_c = l1 * (g - 1.0) / (2.0 * g) + (l2 + l3) / (4.0 * g);
    let dt = q2.temp - q1.temp;
    let ta = 0.5 * (q1.temp + q2.temp);
    let dv = [
        q2.vel[0] - q1.vel[0],
        q2.vel[1] - q1.vel[1],
        q2.vel[2] - q1.vel[2],
    ];
    let dvn = dot(&dv, n) / nn;
    let ln_t = (dt / q1.temp).ln_1p();
    let script_v = -(ln_t / (g - 1.0) + dt * dot(&dv, &dv) / (8.0 * r * ta * ta)) * lambda_c
        + dt / (4.0 * ta * (g - 1.0)) * (l2 + l3)
        + (l3 - l2) * dvn * avg.temp.sqrt() / (4.0 * ta * (r * g).sqrt());
    DensitySpeed {
        lambda_c,
        script_v,
        lambda: [l1, l2, l3],
    }
}

pub fn mr_density_speed(gas: &GasModel, u1: &Cons, u2: &Cons, n: &Vec3) -> Result<DensitySpeed> {
    if norm(n) == 0.0 {
        return Err(Error::Parameter("direction vector must be nonzero".into()));
    }
    Ok(mr_density_speed_prim(
        gas,
        &gas.prim(u1)?,
        &gas.prim(u2)?,
        n,
    ))
}

pub fn mr_dissipation(gas: &GasModel, u1: &Cons, u2: &Cons, n: &Vec3) -> Result<MrDissipation> {
    if norm(n) == 0.0 {
        return Err(Error::Parameter("direction vector must be nonzero".into()));
    }
    let (q1, q2) = (gas.prim(u1)?, gas.prim(u2)?);
    let mut matrix = eigen_matrix(gas, &mr_average(&q1, &q2), n, f64::abs);
    for row in matrix.iter_mut() {
        for v in row.iter_mut() {
            *v *= 0.5;
        }
    }
    Ok(MrDissipation {
        matrix,
        density: mr_density_speed_prim(gas, &q1, &q2, n),
    })
}

/// Merriam-Roe interface flux: entropy conservative flux minus matrix dissipation.
#[inline]
pub fn mr_flux(
    gas: &GasModel,
    q1: &Prim,
    q2: &Prim,
    w1: &[f64; 5],
    w2: &[f64; 5],
    n: &Vec3,
) -> Flux {
    let f = chandrashekar(gas, q1, q2, n);
    let dw = std::array::from_fn(|k| w2[k] - w1[k]);
    let d = mr_apply(gas, q1, q2, n, &dw);
    std::array::from_fn(|k| f[k] - d[k])
}

pub fn mat_vec(m: &Mat5, v: &[f64; 5]) -> [f64; 5] {
    std::array::from_fn(|i| (0..5).map(|j| m[i][j] * v[j]).sum())
}

pub fn mat_mul(a: &Mat5, b: &Mat5) -> Mat5 {
    let mut c = [[0.0; 5]; 5];
    for i in 0..5 {
        for j in 0..5 {
            c[i][j] = (0..5).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}
