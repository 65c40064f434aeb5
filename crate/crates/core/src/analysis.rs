//! Time integration of assembled cases, discrete error norms and grid
//! convergence studies.

use std::fmt::Write as _;

use crate::artvisc::ViscosityField;
use crate::config::{Case, Overrides, RunConfig};
use crate::error::{Error, Result};
use crate::positivity::{StepRecord, Stepper};
use crate::scheme::Scheme;
use crate::thermo::{Prim, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    /// Quadrature-weighted RMS over nodes and the five conservative components.
    pub l2: f64,
    /// Largest nodal component error.
    pub linf: f64,
}

/// Errors of the conservative field against `exact`:
/// `L2 = sqrt(sum P J |dU|^2 / (5 sum P J))`, `Linf = max |dU_c|`.
pub fn error_norms(scheme: &Scheme, u: &[[f64; 5]], exact: impl Fn(&Vec3) -> Prim) -> ErrorNorms {
    let np = scheme.ops.nodes_per_element();
    let (mut num, mut vol, mut linf) = (0.0, 0.0, 0.0_f64);
    for (g, s) in u.iter().enumerate() {
        let ex = scheme.gas.cons(&exact(&scheme.coords(g))).0;
        let w = scheme.ops.volume_weight(g % np) * scheme.jac(g);
        for c in 0..5 {
            let d = s[c] - ex[c];
            num += w * d * d;
            linf = linf.max(d.abs());
        }
        vol += w;
    }
    ErrorNorms {
        l2: (num / (5.0 * vol)).sqrt(),
        linf,
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub t: f64,
    pub u: Vec<[f64; 5]>,
    pub viscosity: ViscosityField,
    /// Smallest nodal density and temperature seen over all steps.
    pub min_rho: f64,
    pub min_temp: f64,
    pub errors: Option<ErrorNorms>,
}

/// Integrate `case` to its final time, reporting every step.
pub fn run_case(
    case: &Case,
    mut on_step: impl FnMut(&StepRecord, &[[f64; 5]], &ViscosityField) -> Result<()>,
) -> Result<RunSummary> {
    let mut stepper = Stepper::new(&case.scheme, case.stepper, case.initial.clone())?;
    let (mut min_rho, mut min_temp) = (f64::INFINITY, f64::INFINITY);
    while stepper.t < case.t_end {
        if case.max_steps > 0 && stepper.steps >= case.max_steps {
            return Err(Error::Numerical(format!(
                "step limit {} reached at t = {:e}",
                case.max_steps, stepper.t
            )));
        }
        let rec = stepper.step(case.t_end)?;
        min_rho = min_rho.min(rec.min_rho);
        min_temp = min_temp.min(rec.min_temp);
        on_step(&rec, &stepper.u, &stepper.viscosity)?;
    }
    let view = case.scheme.view(&stepper.u)?;
    for q in &view.prim {
        min_rho = min_rho.min(q.rho);
        min_temp = min_temp.min(q.temp);
    }
    let errors = case
        .exact
        .as_ref()
        .map(|f| error_norms(&case.scheme, &stepper.u, |x| f(x, stepper.t)));
    Ok(RunSummary {
        steps: stepper.steps,
        t: stepper.t,
        u: stepper.u,
        viscosity: stepper.viscosity,
        min_rho,
        min_temp,
        errors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub elements: usize,
    pub nodes: usize,
    pub steps: usize,
    pub norms: ErrorNorms,
    /// Rates against the previous row: `log(e_prev / e) / log(K / K_prev)`.
    pub l2_rate: Option<f64>,
    pub linf_rate: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
}

pub fn rate(e_coarse: f64, e_fine: f64, k_coarse: usize, k_fine: usize) -> f64 {
    (e_coarse / e_fine).ln() / (k_fine as f64 / k_coarse as f64).ln()
}

impl ErrorReport {
    pub fn push(
        &mut self,
        elements: usize,
        nodes: usize,
        steps: usize,
        norms: ErrorNorms,
    ) -> &ErrorRow {
        let (l2_rate, linf_rate) = match self.rows.last() {
            Some(prev) => (
                Some(rate(prev.norms.l2, norms.l2, prev.elements, elements)),
                Some(rate(prev.norms.linf, norms.linf, prev.elements, elements)),
            ),
            None => (None, None),
        };
        self.rows.push(ErrorRow {
            elements,
            nodes,
            steps,
            norms,
            l2_rate,
            linf_rate,
        });
        self.rows.last().expect("just pushed")
    }

    pub fn table(&self) -> String {
        let fmt_rate = |r: Option<f64>| r.map_or_else(|| "-".to_string(), |r| format!("{r:.2}"));
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>4} {:>9} {:>7} {:>11} {:>6} {:>11} {:>6}",
            "K", "nodes", "steps", "L2", "rate", "Linf", "rate"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>4} {:>9} {:>7} {:>11.3e} {:>6} {:>11.3e} {:>6}",
                r.elements,
                r.nodes,
                r.steps,
                r.norms.l2,
                fmt_rate(r.l2_rate),
                r.norms.linf,
                fmt_rate(r.linf_rate)
            );
        }
        s
    }

    pub fn csv(&self) -> String {
        let fmt_rate = |r: Option<f64>| r.map_or_else(String::new, |r| format!("{r:.16e}"));
        let mut s = String::from("K,nodes,steps,l2,l2_rate,linf,linf_rate\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:.16e},{},{:.16e},{}",
                r.elements,
                r.nodes,
                r.steps,
                r.norms.l2,
                fmt_rate(r.l2_rate),
                r.norms.linf,
                fmt_rate(r.linf_rate)
            );
        }
        s
    }
}

/// Run `base` on each element count in `levels` and tabulate final-time errors.
pub fn convergence_study(
    base: &RunConfig,
    levels: &[usize],
    mut on_level: impl FnMut(&ErrorRow),
) -> Result<ErrorReport> {
    if levels.is_empty() {
        return Err(Error::Config(
            "convergence study needs at least one grid level".into(),
        ));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!(
            "grid levels {levels:?} must increase"
        )));
    }
    let mut report = ErrorReport::default();
    for &k in levels {
        let mut cfg = base.clone();
        cfg.apply(&Overrides {
            elements: Some(k),
            ..Default::default()
        });
        let case = cfg.build()?;
        if case.exact.is_none() {
            return Err(Error::Config(
                "convergence study needs a problem with an exact solution".into(),
            ));
        }
        let summary = run_case(&case, |_, _, _| Ok(()))?;
        let norms = summary.errors.expect("exact solution present");
        on_level(report.push(k, case.scheme.num_nodes(), summary.steps, norms));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, perturb_mesh};
    use crate::sbp::TensorOps;
    use crate::scheme::{BoundaryCondition, SchemeOptions};
    use crate::thermo::{GasModel, ViscosityLaw};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn scheme() -> Scheme {
        let mesh =
            build_box_mesh([2, 2, 1], [[0.0, 1.0], [0.0, 2.0], [0.0, 1.0]], [false; 3]).unwrap();
        let mesh = perturb_mesh(&mesh, 0.3, 4).unwrap();
        let gas = GasModel::new(1.4, 1.0, 0.72, ViscosityLaw::Constant { mu: 0.0 }).unwrap();
        let bcs: BTreeMap<_, _> = mesh
            .boundary_tags()
            .into_iter()
            .map(|t| (t, BoundaryCondition::Extrapolate))
            .collect();
        Scheme::new(
            gas,
            TensorOps::new(3).unwrap(),
            mesh,
            bcs,
            SchemeOptions::default(),
        )
        .unwrap()
    }

    fn exact(x: &Vec3) -> Prim {
        Prim::new(
            1.0 + 0.2 * x[0],
            [x[1], 0.5, -x[2]],
            1.5 + 0.1 * x[0] * x[1],
        )
    }

    #[test]
    fn exact_field_has_zero_error() {
        let s = scheme();
        let u = s.project(exact);
        let e = error_norms(&s, &u, exact);
        assert_eq!(e.l2, 0.0);
        assert_eq!(e.linf, 0.0);
    }

    #[test]
    fn density_offset_gives_that_linf() {
        let s = scheme();
        let mut u = s.project(exact);
        let c = 3.5e-3;
        for v in &mut u {
            v[0] += c;
        }
        let e = error_norms(&s, &u, exact);
        assert!((e.linf - c).abs() < 1e-15);
        // One component out of five carries the whole offset.
        assert!((e.l2 - c / 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn random_perturbation_matches_double_loop() {
        let s = scheme();
        let mut u = s.project(exact);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for v in &mut u {
            for c in v.iter_mut() {
                *c += rng.gen_range(-1e-3..1e-3);
            }
        }
        let e = error_norms(&s, &u, exact);
        let w = s.ops.sbp().weights();
        let n = s.ops.n();
        let (mut num, mut den, mut linf) = (0.0, 0.0, 0.0_f64);
        for el in 0..s.num_elements() {
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        let g = el * n * n * n + i + n * (j + n * k);
                        let wt = w[i] * w[j] * w[k] * s.jac(g);
                        let ex = s.gas.cons(&exact(&s.coords(g))).0;
                        for c in 0..5 {
                            let d = u[g][c] - ex[c];
                            num += wt * d * d;
                            linf = linf.max(d.abs());
                        }
                        den += 5.0 * wt;
                    }
                }
            }
        }
        assert!((e.l2 - (num / den).sqrt()).abs() < 1e-14 * e.l2);
        assert_eq!(e.linf, linf);
    }

    #[test]
    fn rates_for_doubling_and_general_ratios() {
        assert!((rate(0.4, 0.1, 3, 6) - 2.0).abs() < 1e-14);
        assert!((rate(0.9, 0.1, 2, 6) - 2.0).abs() < 1e-14);
        let mut r = ErrorReport::default();
        r.push(3, 0, 0, ErrorNorms { l2: 1.0, linf: 2.0 });
        r.push(6, 0, 0, ErrorNorms { l2: 0.5, linf: 2.0 });
        assert_eq!(r.rows[0].l2_rate, None);
        assert!((r.rows[1].l2_rate.unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(r.rows[1].linf_rate, Some(0.0));
        assert_eq!(r.csv().lines().count(), 3);
        assert_eq!(r.table().lines().count(), 3);
    }

    #[test]
    fn smooth_convergence_and_determinism() {
        // Smooth viscous shock on coarse unperturbed grids: error decreases
        // with K and repeated runs agree bit for bit.
        let text = r#"
degree = 2
[mesh]
kind = "box"
elements = [2, 2, 2]
bounds = [[-0.5, 0.5], [-0.5, 0.5], [-0.5, 0.5]]
[problem]
kind = "viscous_shock"
[time]
t_end = 0.05
"#;
        let cfg = RunConfig::parse(text).unwrap();
        let a = convergence_study(&cfg, &[2, 4], |_| {}).unwrap();
        assert!(a.rows[1].norms.l2 < a.rows[0].norms.l2, "{}", a.table());
        let b = convergence_study(&cfg, &[2, 4], |_| {}).unwrap();
        assert_eq!(a.csv(), b.csv());
    }
}
