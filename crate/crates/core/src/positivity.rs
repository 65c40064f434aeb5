//! Positivity machinery for explicit Euler stepping: minimal mass diffusion
//! at flux points, the density and internal-energy step bounds, and the
//! time-stepping driver.

use crate::artvisc::{compute_viscosity, SensorConfig, ViscosityField};
use crate::error::{Error, Result};
use crate::limiters::{limit_field, LimiterConfig, LimiterCounts};
use crate::scheme::{FluxPointField, Scheme, StateView};
use crate::thermo::{dot, log_mean, Cons, GasModel, Prim, Vec3};
use crate::two_point::mr_density_speed_prim;

/// Mass-diffusion data at every flux point.
#[derive(Debug, Clone)]
pub struct MassDiffusionPlan {
    /// Extra mass-diffusion coefficient added on top of the artificial one.
    pub sigma: FluxPointField,
    /// Actual density diffusion rate.
    pub rate: FluxPointField,
    /// Minimum rate required for density positivity.
    pub rate_min: FluxPointField,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointPlan {
    pub sigma: f64,
    pub rate: f64,
    pub rate_min: f64,
}

/// Mass-diffusion requirement between a left and right state across a flux
/// point with metric `a`, geometric-mean Jacobian `jg` and spacing `dxi`.
pub fn point_plan(
    gas: &GasModel,
    ql: &Prim,
    qr: &Prim,
    a: &Vec3,
    jg: f64,
    dxi: f64,
    sigma_ad: f64,
    dissipation: bool,
) -> PointPlan {
    let (lambda_c, script_v) = if dissipation {
        let d = mr_density_speed_prim(gas, ql, qr, a);
        (d.lambda_c, d.script_v)
    } else {
        (0.0, 0.0)
    };
    let va: Vec3 = std::array::from_fn(|i| 0.5 * (ql.vel[i] + qr.vel[i]));
    let m = log_mean(ql.rho, qr.rho) * (dot(&va, a) - script_v);
    let rate_min = m.abs() / (ql.rho + qr.rho);
    let geo = dot(a, a) / (jg * dxi);
    let sigma_min = (rate_min - lambda_c).max(0.0) / geo;
    // slight inflation so the rate bound survives round-off
    let sigma = if sigma_min > sigma_ad {
        (sigma_min - sigma_ad) * (1.0 + 1e-10)
    } else {
        0.0
    };
    PointPlan {
        sigma,
        rate: lambda_c + (sigma_ad + sigma) * geo,
        rate_min,
    }
}

pub fn plan_mass_diffusion(
    scheme: &Scheme,
    t: f64,
    view: &StateView,
    mu_ad: &[f64],
) -> MassDiffusionPlan {
    let ops = &scheme.ops;
    let n = ops.n();
    let np = ops.nodes_per_element();
    let xi = ops.sbp().nodes();
    let p0 = ops.sbp().weights()[0];
    let c_rho = scheme.options.c_rho;
    let dissipation = scheme.options.dissipation;
    let k = scheme.num_elements();
    let mut plan = MassDiffusionPlan {
        sigma: FluxPointField::zeros(k, n),
        rate: FluxPointField::zeros(k, n),
        rate_min: FluxPointField::zeros(k, n),
    };
    let mut store = |l: usize, idx: usize, pp: PointPlan| {
        plan.sigma.data[l][idx] = pp.sigma;
        plan.rate.data[l][idx] = pp.rate;
        plan.rate_min.data[l][idx] = pp.rate_min;
    };
    for e in 0..k {
        let geom = &scheme.geom[e];
        let base = e * np;
        for l in 0..3 {
            let st = ops.stride(l);
            for line in 0..n * n {
                let s0 = base + ops.line_start(l, line);
                for kk in 1..n {
                    let (i, j) = (s0 + (kk - 1) * st, s0 + kk * st);
                    let a = geom.flux_metric(l, line, kk, n);
                    let jg = (scheme.jac(i) * scheme.jac(j)).sqrt();
                    let sig_ad = c_rho * 0.5 * (mu_ad[i] + mu_ad[j]);
                    let pp = point_plan(
                        &scheme.gas,
                        &view.prim[i],
                        &view.prim[j],
                        &a,
                        jg,
                        xi[kk] - xi[kk - 1],
                        sig_ad,
                        dissipation,
                    );
                    store(l, FluxPointField::index(n, e, line, kk), pp);
                }
            }
        }
        for f in 0..6 {
            let l = f / 2;
            let right = f % 2 == 1;
            let kk = if right { n } else { 0 };
            for ab in 0..n * n {
                let own_local = ops.face_node(f, ab % n, ab / n);
                let own = base + own_local;
                let p = scheme.partner(e, f, ab, t, view);
                let mu_ext = p.node.map_or(mu_ad[own], |g| mu_ad[g]);
                let sig_ad = c_rho * 0.5 * (mu_ad[own] + mu_ext);
                let a = geom.metric[own_local][l];
                let jg = (p.jac * scheme.jac(own)).sqrt();
                let (ql, qr) = if right {
                    (&view.prim[own], &p.prim)
                } else {
                    (&p.prim, &view.prim[own])
                };
                let pp = point_plan(&scheme.gas, ql, qr, &a, jg, p0, sig_ad, dissipation);
                store(
                    l,
                    FluxPointField::index(n, e, scheme.face_line(f, ab), kk),
                    pp,
                );
            }
        }
    }
    plan
}

/// Largest step keeping every nodal density positive.
pub fn density_dt_limit(scheme: &Scheme, plan: &MassDiffusionPlan) -> f64 {
    let ops = &scheme.ops;
    let n = ops.n();
    let np = ops.nodes_per_element();
    let wts = ops.sbp().weights();
    let mut tau = f64::INFINITY;
    for e in 0..scheme.num_elements() {
        let mut acc = vec![0.0; np];
        for l in 0..3 {
            let st = ops.stride(l);
            for line in 0..n * n {
                let s0 = ops.line_start(l, line);
                for i in 0..n {
                    let lo = plan.rate.data[l][FluxPointField::index(n, e, line, i)];
                    let hi = plan.rate.data[l][FluxPointField::index(n, e, line, i + 1)];
                    acc[s0 + i * st] += (lo + hi) / wts[i];
                }
            }
        }
        for (a, s) in acc.iter().enumerate() {
            if *s > 0.0 {
                tau = tau.min(scheme.geom[e].jac[a] / (2.0 * s));
            }
        }
    }
    tau
}

/// Smallest positive `tau` at which the internal energy density of
/// `u + tau/J r` drops to `c_ie` times its current value.
pub fn internal_energy_root(u: &[f64; 5], r: &[f64; 5], jac: f64, c_ie: f64) -> Option<f64> {
    let (rho, e) = (u[0], u[4]);
    let m = [u[1], u[2], u[3]];
    let (dr, de) = (r[0], r[4]);
    let dm = [r[1], r[2], r[3]];
    let ie = e - 0.5 * dot(&m, &m) / rho;
    let e_scaled = e - c_ie * ie;
    let qa = de * dr - 0.5 * dot(&dm, &dm);
    let qb = rho * de - dot(&m, &dm) + e_scaled * dr;
    let qc = rho * e_scaled - 0.5 * dot(&m, &m);
    let s = smallest_positive_root(qa, qb, qc)?;
    Some(s * jac)
}

fn smallest_positive_root(a: f64, b: f64, c: f64) -> Option<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return None;
    }
    let roots: Vec<f64> = if a.abs() <= 1e-14 * (b.abs() + c.abs()) {
        if b == 0.0 {
            vec![]
        } else {
            vec![-c / b]
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            vec![]
        } else {
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            let mut v = vec![q / a];
            if q != 0.0 {
                v.push(c / q);
            }
            v
        }
    };
    roots
        .into_iter()
        .filter(|r| *r > 0.0 && r.is_finite())
        .reduce(f64::min)
}

pub fn internal_energy_dt_limit(
    scheme: &Scheme,
    u: &[[f64; 5]],
    rhs: &[[f64; 5]],
    c_ie: f64,
) -> f64 {
    u.iter()
        .zip(rhs)
        .enumerate()
        .filter_map(|(g, (s, r))| internal_energy_root(s, r, scheme.jac(g), c_ie))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    /// Advective CFL number.
    pub cfl: f64,
    /// Safety factor on the explicit viscous estimate.
    pub visc_safety: f64,
    /// Fraction of internal energy that must survive a step.
    pub c_ie: f64,
    pub artificial_viscosity: bool,
    pub sensors: SensorConfig,
    pub limiter: LimiterConfig,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            visc_safety: 1.0,
            c_ie: 0.9,
            artificial_viscosity: true,
            sensors: SensorConfig::default(),
            limiter: LimiterConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Advective,
    Viscous,
    Density,
    InternalEnergy,
    Final,
}

impl Bound {
    pub fn name(self) -> &'static str {
        match self {
            Bound::Advective => "advective",
            Bound::Viscous => "viscous",
            Bound::Density => "density",
            Bound::InternalEnergy => "internal_energy",
            Bound::Final => "final",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub tau: f64,
    pub bound: Bound,
    pub min_rho: f64,
    pub min_temp: f64,
    pub entropy: f64,
    pub limited: LimiterCounts,
    pub flagged: usize,
    pub max_mu_ad: f64,
}

impl StepRecord {
    pub const CSV_HEADER: &'static str = "step,t,tau,bound,min_rho,min_T,entropy,limited_velocity,limited_temperature,flagged_elements,max_mu_ad";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.17e},{:.17e},{},{:.17e},{:.17e},{:.17e},{},{},{},{:.17e}",
            self.step,
            self.t,
            self.tau,
            self.bound.name(),
            self.min_rho,
            self.min_temp,
            self.entropy,
            self.limited.velocity,
            self.limited.temperature,
            self.flagged,
            self.max_mu_ad
        )
    }
}

/// Explicit Euler integrator with the positivity-preserving step budget.
pub struct Stepper<'a> {
    pub scheme: &'a Scheme,
    pub config: StepperConfig,
    pub t: f64,
    pub u: Vec<[f64; 5]>,
    pub steps: usize,
    pub viscosity: ViscosityField,
}

impl<'a> Stepper<'a> {
    pub fn new(scheme: &'a Scheme, config: StepperConfig, u: Vec<[f64; 5]>) -> Result<Self> {
        scheme.view(&u)?;
        Ok(Self {
            scheme,
            config,
            t: 0.0,
            u,
            steps: 0,
            viscosity: ViscosityField::zeros(scheme),
        })
    }

    /// Take one step, never past `t_end`.
    pub fn step(&mut self, t_end: f64) -> Result<StepRecord> {
        let scheme = self.scheme;
        let cfg = self.config;
        let limited = limit_field(scheme, &mut self.u, &cfg.limiter);
        let view = scheme.view_at(&self.u, self.t)?;
        let mut rhs = vec![[0.0; 5]; self.u.len()];
        let vd = scheme.base_rhs(self.t, &view, &mut rhs);
        if cfg.artificial_viscosity {
            let residual = scheme.entropy_residual(&view, &rhs, vd.as_ref());
            let vd_sensor = match &vd {
                Some(v) => v.clone(),
                None => scheme.viscous_data(self.t, &view),
            };
            self.viscosity = compute_viscosity(scheme, &view, &residual, &vd_sensor, &cfg.sensors);
        }
        let mu_ad = &self.viscosity.nodal;
        let plan = plan_mass_diffusion(scheme, self.t, &view, mu_ad);
        scheme.ad_rhs(self.t, &view, mu_ad, &plan.sigma, &mut rhs);

        let (adv, visc) = scheme.step_estimates(&view, mu_ad);
        let tau_rho = density_dt_limit(scheme, &plan);
        let tau_ie = internal_energy_dt_limit(scheme, &self.u, &rhs, cfg.c_ie);
        let candidates = [
            (cfg.cfl * adv, Bound::Advective),
            (cfg.visc_safety * visc, Bound::Viscous),
            (0.99 * tau_rho, Bound::Density),
            (0.99 * tau_ie, Bound::InternalEnergy),
            (t_end - self.t, Bound::Final),
        ];
        let (tau, bound) = candidates
            .into_iter()
            .fold(
                (f64::INFINITY, Bound::Final),
                |m, c| if c.0 < m.0 { c } else { m },
            );
        if !(tau > 1e-14 * t_end) {
            return Err(Error::StepUnderflow {
                tau,
                time: self.t,
                bound: bound.name().into(),
            });
        }

        let entropy = scheme.total_entropy(&view);
        let min_rho = view.prim.iter().fold(f64::INFINITY, |m, q| m.min(q.rho));
        let min_temp = view.prim.iter().fold(f64::INFINITY, |m, q| m.min(q.temp));
        let np = scheme.ops.nodes_per_element();
        for (g, (s, r)) in self.u.iter_mut().zip(&rhs).enumerate() {
            let f = tau / scheme.jac(g);
            for c in 0..5 {
                s[c] += f * r[c];
            }
            let cons = Cons(*s);
            if !cons.is_admissible() {
                return Err(Error::InadmissibleAt {
                    element: g / np,
                    node: g % np,
                    rho: cons.rho(),
                    internal_energy: cons.internal_energy(),
                });
            }
        }
        self.t = if bound == Bound::Final {
            t_end
        } else {
            self.t + tau
        };
        self.steps += 1;
        Ok(StepRecord {
            step: self.steps,
            t: self.t,
            tau,
            bound,
            min_rho,
            min_temp,
            entropy,
            limited,
            flagged: self.viscosity.flagged(),
            max_mu_ad: mu_ad.iter().fold(0.0, |m: f64, &v| m.max(v)),
        })
    }

    /// Advance to `t_end`, reporting every step.
    pub fn run(&mut self, t_end: f64, mut on_step: impl FnMut(&StepRecord)) -> Result<()> {
        while self.t < t_end {
            let rec = self.step(t_end)?;
            on_step(&rec);
        }
        Ok(())
    }
}
