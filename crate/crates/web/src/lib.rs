//! Browser bindings: LGL operators, a shock tube driven by the full solver
//! and a single-element limiter playground.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

use ppes::artvisc::ViscosityField;
use ppes::config::{Case, RunConfig};
use ppes::limiters::{detect_troubled, temperature_limit, velocity_limit, ElementFrame};
use ppes::positivity::Stepper;
use ppes::sbp::{Sbp1d, TensorOps};
use ppes::thermo::{Cons, GasModel, Prim, ViscosityLaw};

fn js_err(e: impl ToString) -> JsError {
    JsError::new(&e.to_string())
}

/// Nodes, weights and derivative matrix of the degree-`p` LGL operator with
/// its summation-by-parts and exactness residuals.
#[wasm_bindgen(getter_with_clone)]
#[derive(Debug, Clone)]
pub struct LglOperator {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Row-major `(p + 1) x (p + 1)` derivative matrix.
    pub derivative: Vec<f64>,
    /// `max |Q + Q^T - B|`.
    pub sbp_residual: f64,
    /// Largest error differentiating `x^p`.
    pub exactness_residual: f64,
}

impl LglOperator {
    pub fn build(p: usize) -> Result<Self, String> {
        let sbp = Sbp1d::new(p).map_err(|e| e.to_string())?;
        let n = sbp.n();
        let mut derivative = Vec::with_capacity(n * n);
        let mut sbp_residual = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                derivative.push(sbp.d(i, j));
                sbp_residual = sbp_residual.max((sbp.q(i, j) + sbp.q(j, i) - sbp.b(i, j)).abs());
            }
        }
        let x = sbp.nodes();
        let f: Vec<f64> = x.iter().map(|x| x.powi(p as i32)).collect();
        let exactness_residual = sbp
            .apply_d(&f)
            .iter()
            .zip(x)
            .map(|(d, x)| (d - p as f64 * x.powi(p as i32 - 1)).abs())
            .fold(0.0, f64::max);
        Ok(Self {
            nodes: x.to_vec(),
            weights: sbp.weights().to_vec(),
            derivative,
            sbp_residual,
            exactness_residual,
        })
    }
}

#[wasm_bindgen]
pub fn lgl_operator(p: usize) -> Result<LglOperator, JsError> {
    LglOperator::build(p).map_err(js_err)
}

/// Shock tube along x, one element thick, advanced by the full scheme.
#[wasm_bindgen]
pub struct ShockTube {
    case: Case,
    u: Vec<[f64; 5]>,
    t: f64,
    steps: usize,
    viscosity: ViscosityField,
    /// Nodes on the line `y = z = min`, ordered by x.
    line: Vec<usize>,
    min_density: f64,
    min_temperature: f64,
}

impl ShockTube {
    /// `kind` is `"sod"` or `"mach"`; `mach` is used by the latter.
    pub fn create(kind: &str, mach: f64, elements: usize, degree: usize) -> Result<Self, String> {
        if !(2..=400).contains(&elements) || !(1..=6).contains(&degree) {
            return Err(format!(
                "need 2..=400 elements and degree 1..=6 (got {elements}, {degree})"
            ));
        }
        let h = 1.0 / elements as f64;
        let problem = match kind {
            "sod" => "kind = \"sod\"\nposition = 0.5".to_string(),
            "mach" => format!("kind = \"moving_shock\"\nmach = {mach:?}\nposition = 0.3"),
            other => {
                return Err(format!(
                    "unknown shock tube '{other}' (expected sod or mach)"
                ))
            }
        };
        let boundary = if kind == "mach" {
            "[boundary]\nxmin = \"dirichlet\"\n"
        } else {
            ""
        };
        let text = format!(
            "degree = {degree}\n\
             [mesh]\nkind = \"box\"\nelements = [{elements}, 1, 1]\n\
             bounds = [[0.0, 1.0], [0.0, {h:?}], [0.0, {h:?}]]\nperiodic = [false, true, true]\n\
             [problem]\n{problem}\n{boundary}\
             [time]\nt_end = 1.0\n"
        );
        let case = RunConfig::parse(&text)
            .and_then(|c| c.build())
            .map_err(|e| e.to_string())?;
        let scheme = &case.scheme;
        let np = scheme.ops.nodes_per_element();
        let mut line: Vec<usize> = (0..scheme.num_nodes())
            .filter(|g| {
                let [_, j, k] = scheme.ops.ijk(g % np);
                j == 0 && k == 0
            })
            .collect();
        line.sort_by(|a, b| scheme.coords(*a)[0].total_cmp(&scheme.coords(*b)[0]));
        Ok(Self {
            u: case.initial.clone(),
            viscosity: ViscosityField::zeros(scheme),
            case,
            t: 0.0,
            steps: 0,
            line,
            min_density: f64::INFINITY,
            min_temperature: f64::INFINITY,
        })
    }

    /// Take up to `steps` steps without passing `t_end`; returns the time.
    pub fn run(&mut self, steps: usize, t_end: f64) -> Result<f64, String> {
        let mut st = Stepper {
            scheme: &self.case.scheme,
            config: self.case.stepper,
            t: self.t,
            u: std::mem::take(&mut self.u),
            steps: self.steps,
            viscosity: std::mem::replace(
                &mut self.viscosity,
                ViscosityField::zeros(&self.case.scheme),
            ),
        };
        let mut outcome = Ok(());
        for _ in 0..steps {
            if st.t >= t_end {
                break;
            }
            match st.step(t_end) {
                Ok(rec) => {
                    self.min_density = self.min_density.min(rec.min_rho);
                    self.min_temperature = self.min_temperature.min(rec.min_temp);
                }
                Err(e) => {
                    outcome = Err(e.to_string());
                    break;
                }
            }
        }
        self.t = st.t;
        self.steps = st.steps;
        self.u = st.u;
        self.viscosity = st.viscosity;
        outcome.map(|_| self.t)
    }

    fn line_field(&self, f: impl Fn(&Prim, usize) -> f64) -> Vec<f64> {
        let gas = &self.case.scheme.gas;
        self.line
            .iter()
            .map(|&g| f(&gas.prim(&Cons(self.u[g])).expect("admissible state"), g))
            .collect()
    }
}

#[wasm_bindgen]
impl ShockTube {
    #[wasm_bindgen(constructor)]
    pub fn new(
        kind: &str,
        mach: f64,
        elements: usize,
        degree: usize,
    ) -> Result<ShockTube, JsError> {
        Self::create(kind, mach, elements, degree).map_err(js_err)
    }

    pub fn advance(&mut self, steps: usize, t_end: f64) -> Result<f64, JsError> {
        self.run(steps, t_end).map_err(js_err)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn min_density(&self) -> f64 {
        self.min_density
    }

    pub fn min_temperature(&self) -> f64 {
        self.min_temperature
    }

    pub fn x(&self) -> Vec<f64> {
        self.line
            .iter()
            .map(|&g| self.case.scheme.coords(g)[0])
            .collect()
    }

    pub fn density(&self) -> Vec<f64> {
        self.line_field(|q, _| q.rho)
    }

    pub fn velocity(&self) -> Vec<f64> {
        self.line_field(|q, _| q.vel[0])
    }

    pub fn pressure(&self) -> Vec<f64> {
        let gas = self.case.scheme.gas;
        self.line_field(|q, _| gas.pressure(q))
    }

    pub fn temperature(&self) -> Vec<f64> {
        self.line_field(|q, _| q.temp)
    }

    pub fn artificial_viscosity(&self) -> Vec<f64> {
        self.line_field(|_, g| self.viscosity.nodal[g])
    }
}

/// Nodal data of one element before and after the velocity and temperature
/// limiters.
#[wasm_bindgen(getter_with_clone)]
#[derive(Debug, Clone)]
pub struct LimiterDemo {
    pub density: Vec<f64>,
    pub velocity_before: Vec<f64>,
    pub velocity_after: Vec<f64>,
    pub temperature_before: Vec<f64>,
    pub temperature_after: Vec<f64>,
    pub velocity_iterations: usize,
    pub temperature_iterations: usize,
    pub troubled_before: bool,
    pub troubled_after: bool,
    /// Largest relative change of the element's mass, momentum or energy.
    pub conservation_error: f64,
    pub entropy_before: f64,
    pub entropy_after: f64,
}

impl LimiterDemo {
    /// Random `(p + 1)^3` element whose velocity and temperature deviations
    /// scale with `spread`, limited with up to `max_iters` iterations each.
    pub fn build(seed: u64, spread: f64, viscosity: f64, max_iters: usize) -> Result<Self, String> {
        if !(spread >= 0.0) || !(viscosity > 0.0) {
            return Err(format!(
                "need spread >= 0 and viscosity > 0 (got {spread}, {viscosity})"
            ));
        }
        let gas = GasModel::new(
            1.4,
            1.0 / 1.4,
            0.75,
            ViscosityLaw::Constant { mu: viscosity },
        )
        .map_err(|e| e.to_string())?;
        let ops = TensorOps::new(2).map_err(|e| e.to_string())?;
        let np = ops.nodes_per_element();
        let weights: Vec<f64> = (0..np).map(|a| ops.volume_weight(a)).collect();
        let h = 0.1;
        let frame = ElementFrame::new(&weights, &vec![(h / 2.0f64).powi(3); np], viscosity);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u0: Vec<[f64; 5]> = (0..np)
            .map(|_| {
                let q = Prim::new(
                    rng.gen_range(0.5..2.0),
                    [0.3 + spread * rng.gen_range(-1.0..1.0), 0.0, 0.0],
                    1.0 + 0.9 * spread.min(1.0) * rng.gen_range(-1.0..1.0),
                );
                gas.cons(&q).0
            })
            .collect();
        let prims = |u: &[[f64; 5]]| -> Vec<Prim> {
            u.iter()
                .map(|s| gas.prim(&Cons(*s)).expect("admissible"))
                .collect()
        };
        let totals = |u: &[[f64; 5]]| -> [f64; 5] {
            std::array::from_fn(|c| u.iter().zip(&frame.pj).map(|(s, w)| w * s[c]).sum())
        };
        let entropy = |u: &[[f64; 5]]| -> f64 {
            prims(u)
                .iter()
                .zip(&frame.pj)
                .map(|(q, w)| w * gas.math_entropy(q))
                .sum()
        };

        let flags = detect_troubled(&gas, &u0, &frame);
        let mut u = u0.clone();
        let rv = velocity_limit(&gas, &mut u, &frame, max_iters);
        let rt = temperature_limit(&gas, &mut u, &frame, max_iters);
        let after = detect_troubled(&gas, &u, &frame);
        let (t0, t1) = (totals(&u0), totals(&u));
        let conservation_error = (0..5)
            .map(|c| (t1[c] - t0[c]).abs() / t0[c].abs().max(t0[0]))
            .fold(0.0, f64::max);
        let (q0, q1) = (prims(&u0), prims(&u));
        Ok(Self {
            density: q0.iter().map(|q| q.rho).collect(),
            velocity_before: q0.iter().map(|q| q.vel[0]).collect(),
            velocity_after: q1.iter().map(|q| q.vel[0]).collect(),
            temperature_before: q0.iter().map(|q| q.temp).collect(),
            temperature_after: q1.iter().map(|q| q.temp).collect(),
            velocity_iterations: rv.iterations,
            temperature_iterations: rt.iterations,
            troubled_before: flags.velocity || flags.temperature,
            troubled_after: after.velocity || after.temperature,
            conservation_error,
            entropy_before: entropy(&u0),
            entropy_after: entropy(&u),
        })
    }
}

#[wasm_bindgen]
pub fn limiter_demo(
    seed: u64,
    spread: f64,
    viscosity: f64,
    max_iters: usize,
) -> Result<LimiterDemo, JsError> {
    LimiterDemo::build(seed, spread, viscosity, max_iters).map_err(js_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lgl_operator_is_sbp_and_exact() {
        for p in 1..=6 {
            let op = LglOperator::build(p).unwrap();
            assert_eq!(op.nodes.len(), p + 1);
            assert!((op.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            assert!(op.sbp_residual < 1e-13, "{p}: {}", op.sbp_residual);
            assert!(
                op.exactness_residual < 1e-10,
                "{p}: {}",
                op.exactness_residual
            );
        }
        assert!(LglOperator::build(0).is_err());
    }

    #[test]
    fn sod_tube_stays_admissible_and_moves() {
        let mut tube = ShockTube::create("sod", 0.0, 16, 2).unwrap();
        let rho0 = tube.density();
        let t = tube.run(100_000, 0.1).unwrap();
        assert_eq!(t, 0.1);
        assert!(tube.min_density() > 0.0 && tube.min_temperature() > 0.0);
        let x = tube.x();
        assert_eq!(x.len(), 16 * 3);
        assert!(x.windows(2).all(|w| w[0] <= w[1]));
        assert!(tube
            .density()
            .iter()
            .zip(&rho0)
            .any(|(a, b)| (a - b).abs() > 0.05));
        assert!(tube.artificial_viscosity().iter().all(|m| *m >= 0.0));
    }

    #[test]
    fn strong_tube_runs_in_chunks() {
        let mut tube = ShockTube::create("mach", 50.0, 20, 2).unwrap();
        let t1 = tube.run(20, 4e-3).unwrap();
        let t2 = tube.run(100_000, 4e-3).unwrap();
        assert!(t1 <= t2 && t2 == 4e-3);
        assert!(tube.pressure().iter().all(|p| *p > 0.0));
    }

    #[test]
    fn bad_tube_requests_are_rejected() {
        assert!(ShockTube::create("blast", 2.0, 10, 2).is_err());
        assert!(ShockTube::create("sod", 0.0, 1, 2).is_err());
    }

    #[test]
    fn limiter_demo_conserves_and_resolves() {
        let d = LimiterDemo::build(3, 2.0, 0.2, 200).unwrap();
        assert!(d.troubled_before);
        assert!(!d.troubled_after);
        assert!(d.conservation_error < 1e-13);
        assert!(d.entropy_after <= d.entropy_before + 1e-12 * d.entropy_before.abs());
        assert!(d.velocity_iterations + d.temperature_iterations > 0);
        assert!(LimiterDemo::build(1, 1.0, 0.0, 1).is_err());
    }
}
