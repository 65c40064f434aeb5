//! Invariant suites: measurements of freestream preservation, the discrete
//! GCL, entropy production, two-point flux algebra, positivity and limiter
//! properties. Each function reports raw residuals; callers decide tolerances.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{Matrix5, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::artvisc::compute_viscosity;
use crate::config::{BoundaryKind, MeshConfig, ProblemConfig, RunConfig, TimeConfig};
use crate::error::Result;
use crate::limiters::{detect_troubled, temperature_limit, velocity_limit, ElementFrame};
use crate::mesh::{build_box_mesh, build_step_mesh, perturb_mesh, HexMesh};
use crate::metrics::gcl_residual;
use crate::positivity::{internal_energy_root, plan_mass_diffusion, Stepper, StepperConfig};
use crate::sbp::TensorOps;
use crate::scheme::{BoundaryCondition, Scheme, SchemeOptions};
use crate::thermo::{dot, log_mean, Cons, GasModel, Prim, Vec3, ViscosityLaw};
use crate::two_point::{
    brenner_matrix, brenner_pivots, chandrashekar, ismail_roe, ldl_pivots, mat_vec, mr_dissipation,
    DiffusionCoeffs, NuW,
};

fn shock_gas() -> GasModel {
    GasModel::new(1.4, 1.0 / 1.4, 0.75, ViscosityLaw::Constant { mu: 0.05 }).expect("valid gas")
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreestreamReport {
    /// `max |RHS|` of the semi-discrete system for the `J`-scaled unknowns.
    pub rhs_max: f64,
    /// `max |RHS / J|`, the corresponding rate of the nodal state.
    pub rate_max: f64,
    /// Largest nodal change of the conservative state after stepping.
    pub drift_max: f64,
    pub steps: usize,
}

/// Uniform flow on a `k^3` perturbed box with Dirichlet boundaries and the
/// full viscous scheme.
pub fn freestream(
    k: usize,
    p: usize,
    perturbation: f64,
    seed: u64,
    steps: usize,
) -> Result<FreestreamReport> {
    let mesh = build_box_mesh([k; 3], [[-0.5, 0.5]; 3], [false; 3])?;
    let mesh = perturb_mesh(&mesh, perturbation, seed)?;
    let state = Prim::new(1.0, [0.8, -0.5, 0.6], 1.0);
    let bc = BoundaryCondition::Dirichlet(Arc::new(move |_: &Vec3, _| state));
    let bcs = mesh
        .boundary_tags()
        .into_iter()
        .map(|t| (t, bc.clone()))
        .collect();
    let scheme = Scheme::new(
        shock_gas(),
        TensorOps::new(p)?,
        mesh,
        bcs,
        SchemeOptions::default(),
    )?;
    let u0 = scheme.project(|_| state);
    let rhs = scheme.rhs(0.0, &u0, None, None)?;
    let rhs_max = rhs.iter().map(|r| max_abs(r)).fold(0.0, f64::max);
    let rate_max = rhs
        .iter()
        .enumerate()
        .map(|(g, r)| max_abs(r) / scheme.jac(g))
        .fold(0.0, f64::max);
    let mut st = Stepper::new(&scheme, StepperConfig::default(), u0.clone())?;
    for _ in 0..steps {
        st.step(1e3)?;
    }
    let drift_max =
        st.u.iter()
            .zip(&u0)
            .map(|(a, b)| max_abs(&std::array::from_fn::<f64, 5, _>(|c| a[c] - b[c])))
            .fold(0.0, f64::max);
    Ok(FreestreamReport {
        rhs_max,
        rate_max,
        drift_max,
        steps: st.steps,
    })
}

/// Meshes exercised by the GCL suite: perturbed boxes over a range of
/// degrees and seeds, a periodic box and the step geometry.
pub fn gcl_test_meshes() -> Result<Vec<(String, HexMesh, usize)>> {
    let mut out = Vec::new();
    let cube = build_box_mesh([3; 3], [[-0.5, 0.5]; 3], [false; 3])?;
    for seed in 0..3 {
        out.push((
            format!("box K=3 p=4 seed {seed}"),
            perturb_mesh(&cube, 0.4, seed)?,
            4,
        ));
    }
    let small = build_box_mesh([2, 3, 2], [[0.0, 2.0], [0.0, 1.0], [-1.0, 1.0]], [false; 3])?;
    for p in 1..=7 {
        out.push((
            format!("box 2x3x2 p={p}"),
            perturb_mesh(&small, 0.45, 10 + p as u64)?,
            p,
        ));
    }
    let periodic = build_box_mesh([3; 3], [[0.0, 1.0]; 3], [true; 3])?;
    out.push((
        "periodic box p=3".into(),
        perturb_mesh(&periodic, 0.4, 7)?,
        3,
    ));
    out.push(("step p=3".into(), build_step_mesh(6, 0.5, 0.5, 0.1)?, 3));
    Ok(out)
}

/// Largest element GCL residual over `gcl_test_meshes`.
pub fn gcl_max() -> Result<f64> {
    let mut worst = 0.0f64;
    for (_, mesh, p) in gcl_test_meshes()? {
        let ops = TensorOps::new(p)?;
        for geom in crate::metrics::compute_metrics(&mesh, &ops)? {
            worst = worst.max(gcl_residual(&geom, &ops));
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    /// Entropy rate of the entropy conservative inviscid discretization.
    pub ec_rate: f64,
    /// Entropy rate of the full discretization with every dissipative term active.
    pub full_rate: f64,
    /// Sum of magnitudes of the terms entering the rates.
    pub scale: f64,
}

/// Entropy rates on a perturbed periodic box carrying a smooth field with
/// mild nodal noise (so interfaces carry jumps). The full rate uses the
/// sensor viscosity raised to at least `1e-3` so every dissipative term acts.
pub fn entropy_rates(k: usize, p: usize, seed: u64) -> Result<EntropyReport> {
    let mesh = build_box_mesh([k; 3], [[0.0, 1.0]; 3], [true; 3])?;
    let mesh = perturb_mesh(&mesh, 0.3, seed)?;
    let ops = TensorOps::new(p)?;
    let tau = std::f64::consts::TAU;
    let field = |x: &Vec3| {
        Prim::new(
            1.0 + 0.3 * (tau * x[0]).sin() * (tau * x[1]).cos(),
            [
                0.5 * (tau * x[1]).sin(),
                -0.4 * (tau * x[2]).cos(),
                0.3 * (tau * x[0]).sin(),
            ],
            1.0 + 0.25 * (tau * x[2]).sin() * (tau * x[0]).cos(),
        )
    };
    let ec_opts = SchemeOptions {
        dissipation: false,
        viscous: false,
        ..SchemeOptions::default()
    };
    let ec = Scheme::new(
        shock_gas(),
        ops.clone(),
        mesh.clone(),
        BTreeMap::new(),
        ec_opts,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let u: Vec<[f64; 5]> = ec
        .project(field)
        .into_iter()
        .map(|mut s| {
            let f = 1.0 + rng.gen_range(-0.02..0.02);
            for c in &mut s {
                *c *= f;
            }
            s
        })
        .collect();

    let magnitude = |s: &Scheme, view: &crate::scheme::StateView, rhs: &[[f64; 5]]| -> f64 {
        let np = s.ops.nodes_per_element();
        rhs.iter()
            .enumerate()
            .map(|(g, r)| {
                s.ops.volume_weight(g % np)
                    * (0..5).map(|c| (view.w[g][c] * r[c]).abs()).sum::<f64>()
            })
            .sum()
    };
    let view = ec.view(&u)?;
    let rhs = ec.rhs(0.0, &u, None, None)?;
    let ec_rate = ec.entropy_rate(&view, &rhs);
    let mut scale = magnitude(&ec, &view, &rhs);

    let full = Scheme::new(
        shock_gas(),
        ops,
        mesh,
        BTreeMap::new(),
        SchemeOptions::default(),
    )?;
    let mut base = vec![[0.0; 5]; u.len()];
    let vd = full.base_rhs(0.0, &view, &mut base);
    let residual = full.entropy_residual(&view, &base, vd.as_ref());
    let vd = vd.unwrap_or_else(|| full.viscous_data(0.0, &view));
    let visc = compute_viscosity(&full, &view, &residual, &vd, &Default::default());
    let mu: Vec<f64> = visc.nodal.iter().map(|m| m.max(1e-3)).collect();
    let plan = plan_mass_diffusion(&full, 0.0, &view, &mu);
    let rhs = full.rhs(0.0, &u, Some(&mu), Some(&plan.sigma))?;
    let full_rate = full.entropy_rate(&view, &rhs);
    scale = scale.max(magnitude(&full, &view, &rhs));
    Ok(EntropyReport {
        ec_rate,
        full_rate,
        scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwoPointReport {
    pub pairs: usize,
    /// Relative Tadmor-condition residuals.
    pub tadmor_chandrashekar: f64,
    pub tadmor_ismail_roe: f64,
    /// Relative residual of `nu_w (w2 - w1) = nu2 - nu1`.
    pub nu_w: f64,
    /// Smallest closed-form Brenner pivot relative to the largest.
    pub brenner_min_pivot: f64,
    /// Mismatch between closed-form and numerical pivots relative to the
    /// diagonal entries they are eliminated from.
    pub brenner_closed_form: f64,
    /// Relative asymmetry of the Brenner matrix in entropy variables.
    pub brenner_symmetry: f64,
    /// Most negative eigenvalue of the matrix dissipation relative to the largest.
    pub mr_min_eigenvalue: f64,
    pub mr_symmetry: f64,
    /// Relative residual of the density row of the matrix dissipation.
    pub mr_density_row: f64,
}

fn random_prim(rng: &mut ChaCha8Rng) -> Prim {
    let rho = 10f64.powf(rng.gen_range(-1.0..1.0));
    let temp = 10f64.powf(rng.gen_range(-1.0..1.0));
    Prim::new(rho, std::array::from_fn(|_| rng.gen_range(-3.0..3.0)), temp)
}

fn random_direction(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let n: Vec3 = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let len = dot(&n, &n).sqrt();
        if len > 0.1 && len <= 1.0 {
            let scale = 10f64.powf(rng.gen_range(-1.0..1.0)) / len;
            return n.map(|c| c * scale);
        }
    }
}

/// Algebraic identities of the two-point fluxes and dissipation operators on
/// `pairs` random admissible state pairs.
pub fn two_point_suite(pairs: usize, seed: u64) -> TwoPointReport {
    let gas = GasModel::new(1.4, 1.0, 0.72, ViscosityLaw::Constant { mu: 0.0 }).expect("valid gas");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = TwoPointReport {
        pairs,
        brenner_min_pivot: f64::INFINITY,
        ..Default::default()
    };
    for _ in 0..pairs {
        let (q1, q2) = (random_prim(&mut rng), random_prim(&mut rng));
        let n = random_direction(&mut rng);
        let (w1, w2) = (gas.entropy_vars_prim(&q1).0, gas.entropy_vars_prim(&q2).0);
        let dw: [f64; 5] = std::array::from_fn(|k| w2[k] - w1[k]);
        let (psi1, psi2) = (dot(&gas.potential(&q1), &n), dot(&gas.potential(&q2), &n));

        let tadmor = |f: [f64; 5]| {
            let terms: Vec<f64> = (0..5).map(|k| dw[k] * f[k]).collect();
            let lhs: f64 = terms.iter().sum();
            let scale = terms.iter().map(|t| t.abs()).sum::<f64>() + psi1.abs() + psi2.abs();
            (lhs - (psi2 - psi1)).abs() / scale
        };
        rep.tadmor_chandrashekar = rep
            .tadmor_chandrashekar
            .max(tadmor(chandrashekar(&gas, &q1, &q2, &n)));
        rep.tadmor_ismail_roe = rep
            .tadmor_ismail_roe
            .max(tadmor(ismail_roe(&gas, &q1, &q2, &n)));

        let m = NuW::from_prims(&gas, &q1, &q2);
        let (a, b) = (q1.as_array(), q2.as_array());
        let lhs = m.apply(&dw);
        for k in 0..5 {
            let scale = a[k].abs() + b[k].abs();
            rep.nu_w = rep.nu_w.max((lhs[k] - (b[k] - a[k])).abs() / scale);
        }

        let (u1, u2) = (gas.cons(&q1), gas.cons(&q2));
        let coeffs = DiffusionCoeffs {
            sigma: rng.gen_range(0.01..2.0),
            mu: rng.gen_range(0.01..2.0),
            kappa: rng.gen_range(0.01..2.0),
        };
        let bm = brenner_matrix(&gas, &u1, &u2, &n, &coeffs).expect("admissible pair");
        let closed = brenner_pivots(&gas, &u1, &u2, &n, &coeffs).expect("admissible pair");
        let big = max_abs(&closed);
        rep.brenner_min_pivot = rep
            .brenner_min_pivot
            .min(closed.iter().fold(f64::INFINITY, |m, &c| m.min(c)) / big);
        let cw_scale = max_abs(&bm.c_w.concat());
        for i in 0..5 {
            for j in 0..5 {
                rep.brenner_symmetry = rep
                    .brenner_symmetry
                    .max((bm.c_w[i][j] - bm.c_w[j][i]).abs() / cw_scale);
            }
        }
        match ldl_pivots(&bm.c_w) {
            Some(num) => {
                // Pivots come from cancellation against the diagonal entry,
                // which sets the roundoff scale.
                for i in 0..5 {
                    let scale = bm.c_w[i][i].abs().max(closed[i].abs());
                    rep.brenner_closed_form = rep
                        .brenner_closed_form
                        .max((num[i] - closed[i]).abs() / scale);
                }
            }
            None => rep.brenner_closed_form = f64::INFINITY,
        }

        let mr = mr_dissipation(&gas, &u1, &u2, &n).expect("admissible pair");
        let mat = Matrix5::from_fn(|i, j| mr.matrix[i][j]);
        let mscale = mat.abs().max();
        rep.mr_symmetry = rep
            .mr_symmetry
            .max((mat - mat.transpose()).abs().max() / mscale);
        let eig = SymmetricEigen::new(0.5 * (mat + mat.transpose())).eigenvalues;
        let (emin, emax) = (eig.min(), eig.abs().max());
        rep.mr_min_eigenvalue = rep.mr_min_eigenvalue.min(emin / emax);
        let mdw = mat_vec(&mr.matrix, &dw);
        let d = mr.density;
        let (t1, t2) = (
            log_mean(q1.rho, q2.rho) * d.script_v,
            (q2.rho - q1.rho) * d.lambda_c,
        );
        let row_scale =
            t1.abs() + t2.abs() + (0..5).map(|k| (mr.matrix[0][k] * dw[k]).abs()).sum::<f64>();
        if row_scale > 0.0 {
            rep.mr_density_row = rep
                .mr_density_row
                .max((mdw[0] - (t1 + t2)).abs() / row_scale);
        }
    }
    rep
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityRun {
    pub name: String,
    pub completed: bool,
    pub steps: usize,
    pub t: f64,
    pub t_end: f64,
    pub min_rho: f64,
    pub min_temp: f64,
    pub failure: Option<String>,
}

impl AdmissibilityRun {
    pub fn admissible(&self) -> bool {
        self.completed && self.min_rho > 0.0 && self.min_temp > 0.0
    }
}

fn tube(k: usize, length: f64) -> MeshConfig {
    let h = length / k as f64;
    MeshConfig::Box {
        elements: [k, 1, 1],
        bounds: [[0.0, length], [0.0, h], [0.0, h]],
        periodic: [false, true, true],
        perturbation: 0.0,
        seed: 0,
    }
}

/// Strong-shock configurations run for admissibility: Sod, a Mach 200 shock
/// tube and Mach 200 shock diffraction over a step (inviscid and viscous).
/// `scale` multiplies the element counts.
pub fn strong_shock_configs(scale: usize) -> Vec<(String, RunConfig)> {
    let scale = scale.max(1);
    let base = |mesh, problem, degree, t_end| RunConfig {
        degree,
        mesh,
        gas: None,
        problem,
        boundary: BTreeMap::new(),
        scheme: Default::default(),
        time: TimeConfig {
            t_end,
            max_steps: 200_000,
            ..Default::default()
        },
        sensors: Default::default(),
        output: Default::default(),
    };
    let mach200 = ProblemConfig::MovingShock {
        mach: 200.0,
        rho: 1.4,
        pressure: 1.0,
        position: 0.5,
    };
    let step = MeshConfig::Step {
        elements: 8 * scale,
        step_x: 0.5,
        step_y: 0.5,
        depth: 0.1,
    };
    let mut diffraction = base(step.clone(), mach200.clone(), 2, 1.5e-3);
    diffraction.boundary = [
        ("xmin", BoundaryKind::Dirichlet),
        ("ymin", BoundaryKind::Symmetry),
        ("wall", BoundaryKind::Symmetry),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let mut viscous = diffraction.clone();
    // Re = 1e4 on the shock speed and pre-shock density, Sutherland law.
    let t_pre = 1.0 / 1.4;
    viscous.gas = Some(crate::config::GasConfig {
        gamma: 1.4,
        r_gas: 1.0,
        prandtl: 0.75,
        viscosity: ViscosityLaw::Sutherland {
            mu_ref: 1.4 * 200.0 / 1e4,
            t_ref: t_pre,
            s: 110.4 / 273.15 * t_pre,
        },
    });
    let mut tube200 = base(tube(24 * scale, 1.0), mach200, 3, 1.0e-3);
    tube200.boundary = [("xmin".to_string(), BoundaryKind::Dirichlet)]
        .into_iter()
        .collect();
    vec![
        (
            "sod tube".into(),
            base(
                tube(24 * scale, 1.0),
                ProblemConfig::Sod { position: 0.5 },
                3,
                0.2,
            ),
        ),
        ("Mach 200 shock tube".into(), tube200),
        ("Mach 200 diffraction, inviscid".into(), diffraction),
        ("Mach 200 diffraction, viscous".into(), viscous),
    ]
}

/// Run a configuration, tracking the smallest density and temperature over
/// every step; failures are reported rather than propagated.
pub fn run_for_admissibility(name: &str, cfg: &RunConfig) -> AdmissibilityRun {
    let mut out = AdmissibilityRun {
        name: name.to_string(),
        completed: false,
        steps: 0,
        t: 0.0,
        t_end: cfg.time.t_end,
        min_rho: f64::INFINITY,
        min_temp: f64::INFINITY,
        failure: None,
    };
    let case = match cfg.build() {
        Ok(c) => c,
        Err(e) => {
            out.failure = Some(e.to_string());
            return out;
        }
    };
    let track = |out: &mut AdmissibilityRun, u: &[[f64; 5]]| {
        for s in u {
            match case.scheme.gas.prim(&Cons(*s)) {
                Ok(q) => {
                    out.min_rho = out.min_rho.min(q.rho);
                    out.min_temp = out.min_temp.min(q.temp);
                }
                Err(_) => {
                    out.min_rho = out.min_rho.min(s[0]);
                    out.min_temp = out.min_temp.min(f64::NEG_INFINITY);
                }
            }
        }
    };
    track(&mut out, &case.initial);
    let result = crate::analysis::run_case(&case, |rec, u, _| {
        out.steps = rec.step;
        out.t = rec.t;
        track(&mut out, u);
        Ok(())
    });
    match result {
        Ok(_) => out.completed = true,
        Err(e) => out.failure = Some(e.to_string()),
    }
    out
}

/// Largest relative deviation of the internal-energy step bound from a
/// bisection oracle over `samples` random nodes; returns `(error, checked)`.
pub fn internal_energy_oracle(samples: usize, seed: u64) -> (f64, usize) {
    let ie = |u: &[f64; 5]| u[4] - 0.5 * (u[1] * u[1] + u[2] * u[2] + u[3] * u[3]) / u[0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut checked) = (0.0f64, 0);
    for _ in 0..samples {
        let rho = rng.gen_range(0.1..3.0);
        let m: Vec3 = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let u = [
            rho,
            m[0],
            m[1],
            m[2],
            0.5 * dot(&m, &m) / rho + rng.gen_range(0.05..3.0),
        ];
        let r: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-5.0..5.0));
        let jac = rng.gen_range(0.01..2.0);
        let c_ie = rng.gen_range(0.5..0.99);
        let Some(tau) = internal_energy_root(&u, &r, jac, c_ie) else {
            continue;
        };
        let at = |t: f64| -> [f64; 5] { std::array::from_fn(|c| u[c] + t / jac * r[c]) };
        if at(tau)[0] <= 0.0 {
            continue;
        }
        let target = c_ie * ie(&u);
        // Sign of the excess internal energy while density stays positive,
        // without the 1/rho pole: rho (rho e - target), from the stepped state.
        let excess = |t: f64| {
            let v = at(t);
            v[0] * (v[4] - target) - 0.5 * (v[1] * v[1] + v[2] * v[2] + v[3] * v[3])
        };
        let span = if r[0] < 0.0 {
            (2.0 * tau).min(-u[0] * jac / r[0])
        } else {
            2.0 * tau
        };
        // First crossing: scan forward from zero, then bisect.
        let steps = 4000;
        let mut lo = 0.0;
        let mut hi = None;
        for i in 1..=steps {
            let t = span * i as f64 / steps as f64;
            if excess(t) <= 0.0 {
                hi = Some(t);
                break;
            }
            lo = t;
        }
        let Some(mut hi) = hi else {
            worst = f64::INFINITY;
            continue;
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if excess(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        worst = worst.max((tau - 0.5 * (lo + hi)).abs() / tau);
        checked += 1;
    }
    (worst, checked)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimiterSuiteReport {
    pub elements: usize,
    pub limited: usize,
    /// Largest relative change of an element total (mass, momentum, energy).
    pub conservation: f64,
    /// Every nodal density bit-identical after limiting.
    pub density_untouched: bool,
    /// Largest relative increase of a nodal mathematical entropy under the
    /// velocity limiter, and of the element total under both limiters.
    pub pointwise_entropy_increase: f64,
    pub element_entropy_increase: f64,
    /// Smallest relative strength over all iterations and acting components;
    /// the contraction factor is `1 - strength`, so a positive value means
    /// every acting iteration contracts.
    pub min_strength: f64,
    /// Elements still violating a bound after iterating to convergence.
    pub unresolved: usize,
    /// Fitted slope of the consistency error against element size.
    pub consistency_slope: f64,
}

fn limiter_gas() -> GasModel {
    GasModel::new(1.4, 1.0 / 1.4, 0.75, ViscosityLaw::Constant { mu: 1.0 }).expect("valid gas")
}

fn random_element(rng: &mut ChaCha8Rng, n: usize) -> (Vec<[f64; 5]>, ElementFrame) {
    let g = limiter_gas();
    let spread = rng.gen_range(0.5..5.0);
    let u = (0..n)
        .map(|_| {
            let q = Prim::new(
                rng.gen_range(0.3..3.0),
                std::array::from_fn(|_| rng.gen_range(-spread..spread)),
                rng.gen_range(0.2..4.0),
            );
            g.cons(&q).0
        })
        .collect();
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.5)).collect();
    let j: Vec<f64> = (0..n).map(|_| rng.gen_range(0.005..0.1)).collect();
    (u, ElementFrame::new(&w, &j, rng.gen_range(1.0..5.0)))
}

fn element_totals(u: &[[f64; 5]], f: &ElementFrame) -> [f64; 5] {
    std::array::from_fn(|c| u.iter().zip(&f.pj).map(|(s, w)| w * s[c]).sum())
}

/// Velocity then temperature limiter on `count` random violating elements,
/// iterated to convergence, plus a smooth refinement sweep for the
/// consistency slope.
pub fn limiter_suite(count: usize, seed: u64) -> LimiterSuiteReport {
    let g = limiter_gas();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = LimiterSuiteReport {
        elements: 0,
        limited: 0,
        conservation: 0.0,
        density_untouched: true,
        pointwise_entropy_increase: 0.0,
        element_entropy_increase: 0.0,
        min_strength: f64::INFINITY,
        unresolved: 0,
        consistency_slope: 0.0,
    };
    let entropy_of = |s: &[f64; 5]| g.math_entropy(&g.prim(&Cons(*s)).expect("admissible"));
    while rep.elements < count {
        let (u0, frame) = random_element(&mut rng, 27);
        let flags = detect_troubled(&g, &u0, &frame);
        if !flags.velocity && !flags.temperature {
            continue;
        }
        rep.elements += 1;
        let t0 = element_totals(&u0, &frame);
        let s0: f64 = u0
            .iter()
            .zip(&frame.pj)
            .map(|(s, w)| w * entropy_of(s))
            .sum();
        let mut u = u0.clone();
        let mut prev = u.clone();
        let mut any = false;
        for _ in 0..5000 {
            let rv = velocity_limit(&g, &mut u, &frame, 1);
            // Kinetic energy turns into heat at fixed density: entropy can
            // only decrease node by node.
            for (a, b) in u.iter().zip(&prev) {
                let (sa, sb) = (entropy_of(a), entropy_of(b));
                rep.pointwise_entropy_increase = rep
                    .pointwise_entropy_increase
                    .max((sa - sb) / sb.abs().max(a[0]));
            }
            let rt = temperature_limit(&g, &mut u, &frame, 1);
            for r in [&rv, &rt] {
                for (theta, st) in r.theta.iter().zip(&r.strength) {
                    for (t, st) in theta.iter().zip(st) {
                        if *t > 0.0 {
                            rep.min_strength = rep.min_strength.min(*st);
                        }
                    }
                }
            }
            prev.clone_from(&u);
            if !rv.applied() && !rt.applied() {
                break;
            }
            any = true;
        }
        if any {
            rep.limited += 1;
        }
        let t1 = element_totals(&u, &frame);
        for c in 0..5 {
            rep.conservation = rep
                .conservation
                .max((t1[c] - t0[c]).abs() / t0[c].abs().max(t0[0]));
        }
        for (a, b) in u.iter().zip(&u0) {
            rep.density_untouched &= a[0].to_bits() == b[0].to_bits();
        }
        let s1: f64 = u
            .iter()
            .zip(&frame.pj)
            .map(|(s, w)| w * entropy_of(s))
            .sum();
        rep.element_entropy_increase = rep.element_entropy_increase.max((s1 - s0) / s0.abs());
        let left = detect_troubled(&g, &u, &frame);
        if left.velocity || left.temperature {
            rep.unresolved += 1;
        }
    }
    rep.consistency_slope = consistency_slope();
    rep
}

/// Change made by one limiter pass to a smooth field on a single cubic
/// element of side `h`, in the max norm.
pub fn limiter_change(h: f64, p: usize) -> f64 {
    let g = limiter_gas();
    let ops = TensorOps::new(p).expect("valid degree");
    let nodes = ops.sbp().nodes().to_vec();
    let np = ops.nodes_per_element();
    let centre = [0.3, -0.2, 0.1];
    let field = |x: &Vec3| {
        Prim::new(
            1.0 + 0.2 * x[0],
            [2.0 * x[0] + x[1], -1.5 * x[2], 3.0 * x[1] - x[0]],
            1.0 + 0.8 * x[1] - 0.5 * x[2],
        )
    };
    let mut u = Vec::with_capacity(np);
    for a in 0..np {
        let [i, j, k] = ops.ijk(a);
        let x: Vec3 = [
            centre[0] + 0.5 * h * nodes[i],
            centre[1] + 0.5 * h * nodes[j],
            centre[2] + 0.5 * h * nodes[k],
        ];
        u.push(g.cons(&field(&x)).0);
    }
    let jac = vec![h * h * h / 8.0; np];
    let w: Vec<f64> = (0..np).map(|a| ops.volume_weight(a)).collect();
    // Viscosity large enough that both bounds are violated at every size.
    let frame = ElementFrame::new(&w, &jac, 50.0);
    let u0 = u.clone();
    velocity_limit(&g, &mut u, &frame, 1);
    temperature_limit(&g, &mut u, &frame, 1);
    u.iter()
        .zip(&u0)
        .map(|(a, b)| max_abs(&std::array::from_fn::<f64, 5, _>(|c| a[c] - b[c])))
        .fold(0.0, f64::max)
}

/// Least-squares slope of `log(change)` against `log(h)` over a halving sweep.
pub fn consistency_slope() -> f64 {
    let hs: Vec<f64> = (0..5).map(|i| 0.2 / 2f64.powi(i)).collect();
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .map(|&h| (h.ln(), limiter_change(h, 3).ln()))
        .collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let num: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    num / den
}
