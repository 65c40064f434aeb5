//! Physical and continuous artificial viscous fluxes, and their evaluation
//! from entropy-variable gradients.

use crate::metrics::ElementGeometry;
use crate::sbp::TensorOps;
use crate::thermo::{Flux, GasModel, Prim, Vec3};
use crate::two_point::NuW;

/// Gradients of the primitive variables: `vel[i][j] = dV_i/dx_j`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PrimGradient {
    pub rho: Vec3,
    pub vel: [Vec3; 3],
    pub temp: Vec3,
}

impl PrimGradient {
    pub fn divergence(&self) -> f64 {
        self.vel[0][0] + self.vel[1][1] + self.vel[2][2]
    }
}

/// Gradient of the entropy variables: `theta[m]` is `dw/dx_m`.
pub type EntropyGradient = [[f64; 5]; 3];

/// Deviatoric stress `mu (dV_i/dx_j + dV_j/dx_i - 2/3 delta_ij div V)`.
pub fn stress(mu: f64, vel: &[Vec3; 3]) -> [Vec3; 3] {
    let div = vel[0][0] + vel[1][1] + vel[2][2];
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let d = if i == j { 2.0 / 3.0 * div } else { 0.0 };
            mu * (vel[i][j] + vel[j][i] - d)
        })
    })
}

/// Cartesian viscous fluxes `F_m = [0, tau_{:,m}, tau_{:,m}.V + kappa dT/dx_m]`.
pub fn viscous_flux_cartesian(gas: &GasModel, q: &Prim, g: &PrimGradient) -> [Flux; 3] {
    let tau = stress(gas.mu(q.temp), &g.vel);
    let kappa = gas.kappa(q.temp);
    std::array::from_fn(|m| {
        let work: f64 = (0..3).map(|i| tau[i][m] * q.vel[i]).sum();
        [
            0.0,
            tau[0][m],
            tau[1][m],
            tau[2][m],
            work + kappa * g.temp[m],
        ]
    })
}

/// Continuous Brenner-type artificial dissipation flux.
pub fn brenner_ad_flux_continuous(
    q: &Prim,
    g: &PrimGradient,
    mu_ad: f64,
    c_rho: f64,
    c_t: f64,
) -> [Flux; 3] {
    let base = stress(mu_ad, &g.vel);
    std::array::from_fn(|m| {
        let tau: Vec3 = std::array::from_fn(|i| base[i][m] + c_rho * mu_ad * q.vel[i] * g.rho[m]);
        let work: f64 = (0..3).map(|i| tau[i] * q.vel[i]).sum();
        [
            c_rho * mu_ad * g.rho[m],
            tau[0],
            tau[1],
            tau[2],
            work + c_t * mu_ad * g.temp[m],
        ]
    })
}

/// Primitive gradients from entropy-variable gradients via `d nu / d w` at `q`.
pub fn prim_gradient_from_entropy(
    gas: &GasModel,
    q: &Prim,
    theta: &EntropyGradient,
) -> PrimGradient {
    let nuw = NuW::from_prims(gas, q, q);
    let mut g = PrimGradient::default();
    for m in 0..3 {
        let d = nuw.apply(&theta[m]);
        g.rho[m] = d[0];
        for i in 0..3 {
            g.vel[i][m] = d[1 + i];
        }
        g.temp[m] = d[4];
    }
    g
}

/// Viscous flux as a linear function of the entropy-variable gradient.
pub fn viscous_flux_from_entropy(gas: &GasModel, q: &Prim, theta: &EntropyGradient) -> [Flux; 3] {
    viscous_flux_cartesian(gas, q, &prim_gradient_from_entropy(gas, q, theta))
}

/// Contravariant flux `f_l = sum_m a^l_m F_m` at one node.
pub fn contravariant(metric: &[Vec3; 3], f: &[Flux; 3]) -> [Flux; 3] {
    std::array::from_fn(|l| std::array::from_fn(|c| (0..3).map(|m| metric[l][m] * f[m][c]).sum()))
}

/// Cartesian gradient of nodal scalar fields by the chain rule
/// `d/dx_m = (1/J) sum_l a^l_m D_l`, one output per input component.
pub fn cartesian_gradient<const C: usize>(
    ops: &TensorOps,
    geom: &ElementGeometry,
    f: &[[f64; C]],
) -> Vec<[[f64; C]; 3]> {
    let np = ops.nodes_per_element();
    let mut out = vec![[[0.0; C]; 3]; np];
    let mut col = vec![0.0; np];
    let mut d = vec![0.0; np];
    for c in 0..C {
        for (a, v) in col.iter_mut().enumerate() {
            *v = f[a][c];
        }
        for l in 0..3 {
            ops.apply_d(l, &col, &mut d);
            for a in 0..np {
                for m in 0..3 {
                    out[a][m][c] += geom.metric[a][l][m] * d[a];
                }
            }
        }
    }
    for a in 0..np {
        let inv = 1.0 / geom.jac[a];
        for row in out[a].iter_mut() {
            for v in row.iter_mut() {
                *v *= inv;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, perturb_mesh};
    use crate::metrics::element_geometry;
    use crate::thermo::ViscosityLaw;
    use proptest::prelude::*;

    fn gas() -> GasModel {
        GasModel::new(1.4, 0.7, 0.75, ViscosityLaw::Constant { mu: 0.02 }).unwrap()
    }

    fn grad_strategy() -> impl Strategy<Value = PrimGradient> {
        proptest::collection::vec(-3.0f64..3.0, 15).prop_map(|v| PrimGradient {
            rho: [v[0], v[1], v[2]],
            vel: [[v[3], v[4], v[5]], [v[6], v[7], v[8]], [v[9], v[10], v[11]]],
            temp: [v[12], v[13], v[14]],
        })
    }

    #[test]
    fn zero_gradient_gives_zero_flux() {
        let q = Prim::new(1.2, [0.3, -0.2, 0.5], 1.1);
        let f = viscous_flux_cartesian(&gas(), &q, &PrimGradient::default());
        assert!(f.iter().flatten().all(|&v| v == 0.0));
        let f = brenner_ad_flux_continuous(&q, &PrimGradient::default(), 0.3, 1.0, 1.0);
        assert!(f.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn pure_dilation_is_traceless() {
        let a = 0.7;
        let vel = [[a, 0.0, 0.0], [0.0, a, 0.0], [0.0, 0.0, a]];
        let tau = stress(0.5, &vel);
        assert!((tau[0][0] + tau[1][1] + tau[2][2]).abs() < 1e-15);
        assert!(tau.iter().flatten().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn zero_artificial_viscosity_gives_zero_flux() {
        let q = Prim::new(1.0, [1.0, 2.0, 3.0], 2.0);
        let g = PrimGradient {
            rho: [1.0, 2.0, 3.0],
            vel: [[1.0; 3]; 3],
            temp: [0.5; 3],
        };
        let f = brenner_ad_flux_continuous(&q, &g, 0.0, 1.0, 1.0);
        assert!(f.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn pure_density_gradient_at_rest() {
        let q = Prim::new(1.0, [0.0; 3], 2.0);
        let g = PrimGradient {
            rho: [1.0, -2.0, 0.5],
            ..Default::default()
        };
        let f = brenner_ad_flux_continuous(&q, &g, 0.3, 2.0, 1.0);
        for m in 0..3 {
            assert!((f[m][0] - 0.6 * g.rho[m]).abs() < 1e-15);
            assert!(f[m][1..].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn cartesian_gradient_is_exact_for_linear_fields_on_curved_mesh() {
        let mesh = build_box_mesh([2, 2, 2], [[0.0, 1.0]; 3], [false; 3]).unwrap();
        let mesh = perturb_mesh(&mesh, 0.35, 3).unwrap();
        let ops = TensorOps::new(4).unwrap();
        let geom = element_geometry(&mesh, 5, &ops).unwrap();
        let coef = [[1.0, -2.0, 0.5], [0.3, 0.0, 4.0]];
        let f: Vec<[f64; 2]> = geom
            .x
            .iter()
            .map(|x| std::array::from_fn(|c| (0..3).map(|m| coef[c][m] * x[m]).sum::<f64>() + 0.7))
            .collect();
        let g = cartesian_gradient(&ops, &geom, &f);
        for node in g {
            for m in 0..3 {
                for c in 0..2 {
                    assert!((node[m][c] - coef[c][m]).abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn contravariant_flux_on_cartesian_mesh_is_scaled() {
        let metric = [[0.25, 0.0, 0.0], [0.0, 0.25, 0.0], [0.0, 0.0, 0.25]];
        let f: [Flux; 3] = std::array::from_fn(|m| std::array::from_fn(|c| (m * 5 + c) as f64));
        let fh = contravariant(&metric, &f);
        for l in 0..3 {
            for c in 0..5 {
                assert_eq!(fh[l][c], 0.25 * f[l][c]);
            }
        }
    }

    proptest! {
        #[test]
        fn stress_is_symmetric_and_traceless(g in grad_strategy(), mu in 0.01f64..2.0) {
            let tau = stress(mu, &g.vel);
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!((tau[i][j] - tau[j][i]).abs() < 1e-14);
                }
            }
            prop_assert!((tau[0][0] + tau[1][1] + tau[2][2]).abs() < 1e-13);
        }

        #[test]
        fn brenner_flux_matches_termwise_evaluation(g in grad_strategy(), v in proptest::array::uniform3(-2.0f64..2.0), mu in 0.0f64..1.0) {
            let q = Prim::new(1.3, v, 0.9);
            let (c_rho, c_t) = (0.7, 1.3);
            let f = brenner_ad_flux_continuous(&q, &g, mu, c_rho, c_t);
            let div = g.divergence();
            for m in 0..3 {
                prop_assert!((f[m][0] - c_rho * mu * g.rho[m]).abs() < 1e-13);
                let mut work = 0.0;
                for i in 0..3 {
                    let delta = if i == m { 1.0 } else { 0.0 };
                    let t = mu * (g.vel[i][m] + g.vel[m][i] - delta * 2.0 / 3.0 * div) + c_rho * mu * v[i] * g.rho[m];
                    prop_assert!((f[m][1 + i] - t).abs() < 1e-13);
                    work += t * v[i];
                }
                prop_assert!((f[m][4] - work - c_t * mu * g.temp[m]).abs() < 1e-12);
            }
        }

        #[test]
        fn entropy_gradient_form_is_dissipative(th in proptest::collection::vec(-1.0f64..1.0, 15), v in proptest::array::uniform3(-2.0f64..2.0), t in 0.3f64..3.0) {
            let gas = gas();
            let q = Prim::new(0.8, v, t);
            let theta: EntropyGradient = std::array::from_fn(|m| std::array::from_fn(|c| th[5 * m + c]));
            let f = viscous_flux_from_entropy(&gas, &q, &theta);
            let prod: f64 = (0..3).map(|m| (0..5).map(|c| theta[m][c] * f[m][c]).sum::<f64>()).sum();
            prop_assert!(prod >= -1e-14);
        }

        #[test]
        fn entropy_gradient_recovers_primitive_gradient(g in grad_strategy(), v in proptest::array::uniform3(-2.0f64..2.0), t in 0.3f64..3.0) {
            // build dw/dx from the primitive gradient by finite differences of w(nu)
            let gas = gas();
            let q = Prim::new(1.1, v, t);
            let h = 1e-6;
            let mut theta = [[0.0; 5]; 3];
            for m in 0..3 {
                let shift = |s: f64| Prim::new(q.rho + s * g.rho[m], std::array::from_fn(|i| q.vel[i] + s * g.vel[i][m]), q.temp + s * g.temp[m]);
                let wp = gas.entropy_vars_prim(&shift(h));
                let wm = gas.entropy_vars_prim(&shift(-h));
                for c in 0..5 {
                    theta[m][c] = (wp.0[c] - wm.0[c]) / (2.0 * h);
                }
            }
            let back = prim_gradient_from_entropy(&gas, &q, &theta);
            for m in 0..3 {
                prop_assert!((back.rho[m] - g.rho[m]).abs() < 1e-6);
                prop_assert!((back.temp[m] - g.temp[m]).abs() < 1e-6);
                for i in 0..3 {
                    prop_assert!((back.vel[i][m] - g.vel[i][m]).abs() < 1e-6);
                }
            }
        }
    }
}
