//! Conservative, entropy-dissipative velocity and temperature limiters that
//! bound nodal deviations from element averages without touching density.

use crate::scheme::Scheme;
use crate::thermo::{harmonic_mean, norm, Cons, GasModel, Prim, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimiterConfig {
    pub enabled: bool,
    pub max_iters: usize,
}

impl Default for LimiterConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            max_iters: 1,
        }
    }
}

/// Element data needed by the limiters: `P_a J_a` per node, the reference
/// length and the physical viscosity.
#[derive(Debug, Clone)]
pub struct ElementFrame {
    pub pj: Vec<f64>,
    pub h: f64,
    pub mu: f64,
}

impl ElementFrame {
    pub fn new(weights: &[f64], jac: &[f64], mu: f64) -> Self {
        let pj: Vec<f64> = weights.iter().zip(jac).map(|(p, j)| p * j).collect();
        let volume: f64 = pj.iter().sum();
        Self {
            pj,
            h: volume.cbrt(),
            mu,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LimiterReport {
    pub iterations: usize,
    /// Limiter strengths per iteration (three velocity components or one temperature value).
    pub theta: Vec<Vec<f64>>,
    /// Contraction factor bounds per iteration and component.
    pub contraction: Vec<Vec<f64>>,
    /// Strength relative to its largest admissible value, `1 - contraction`,
    /// kept separately so small strengths are not lost to rounding.
    pub strength: Vec<Vec<f64>>,
}

impl LimiterReport {
    pub fn applied(&self) -> bool {
        self.theta.iter().flatten().any(|&t| t > 0.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Troubled {
    pub velocity: bool,
    pub temperature: bool,
}

struct Averages {
    rho: f64,
    vel: Vec3,
    temp: f64,
    rho_min: f64,
}

fn prims(gas: &GasModel, u: &[[f64; 5]]) -> Vec<Prim> {
    u.iter()
        .map(|s| {
            gas.prim(&Cons(*s))
                .expect("limiter requires admissible states")
        })
        .collect()
}

fn averages(q: &[Prim]) -> Averages {
    let n = q.len() as f64;
    Averages {
        rho: q.iter().map(|s| s.rho).sum::<f64>() / n,
        vel: std::array::from_fn(|l| q.iter().map(|s| s.vel[l]).sum::<f64>() / n),
        temp: q.iter().map(|s| s.temp).sum::<f64>() / n,
        rho_min: q.iter().fold(f64::INFINITY, |m, s| m.min(s.rho)),
    }
}

/// Relative allowance on the bounds, so a violation at rounding level does
/// not request an update smaller than the state's last bit.
const BOUND_TOL: f64 = 1e-12;

fn velocity_bound(q: &Prim, avg: &Averages, frame: &ElementFrame) -> f64 {
    harmonic_mean(q.rho, avg.rho) * frame.h * harmonic_mean(q.temp, avg.temp) / frame.mu
}

fn temperature_excess(
    gas: &GasModel,
    q: &Prim,
    avg: &Averages,
    frame: &ElementFrame,
) -> (f64, f64) {
    let vs: Vec3 = std::array::from_fn(|l| q.vel[l] + avg.vel[l]);
    let lam = 0.5 * norm(&vs) + 0.5 * (gas.sound_speed(q.temp) + gas.sound_speed(avg.temp));
    let lhs = lam * (q.temp - avg.temp).abs() / (q.temp * avg.temp);
    (lhs, harmonic_mean(q.rho, avg.rho) * frame.h / frame.mu)
}

/// Which bounds are violated anywhere on the element.
pub fn detect_troubled(gas: &GasModel, u: &[[f64; 5]], frame: &ElementFrame) -> Troubled {
    if frame.mu <= 0.0 {
        return Troubled::default();
    }
    let q = prims(gas, u);
    let avg = averages(&q);
    let mut out = Troubled::default();
    for s in &q {
        let b = velocity_bound(s, &avg, frame);
        if (0..3).any(|l| (s.vel[l] - avg.vel[l]).abs() > b * (1.0 + BOUND_TOL)) {
            out.velocity = true;
        }
        let (lhs, rhs) = temperature_excess(gas, s, &avg, frame);
        if lhs > rhs * (1.0 + BOUND_TOL) {
            out.temperature = true;
        }
    }
    out
}

/// Velocity limiter on nodal conservative states `u` (not scaled by `J`).
pub fn velocity_limit(
    gas: &GasModel,
    u: &mut [[f64; 5]],
    frame: &ElementFrame,
    max_iters: usize,
) -> LimiterReport {
    let mut report = LimiterReport::default();
    if frame.mu <= 0.0 {
        return report;
    }
    for _ in 0..max_iters {
        let q = prims(gas, u);
        let avg = averages(&q);
        let cap_of = |a: usize| frame.pj[a] * q[a].rho / avg.rho_min;
        let cap = (0..q.len()).map(cap_of).fold(f64::INFINITY, f64::min);
        let cap_max = (0..q.len()).map(cap_of).fold(0.0, f64::max);
        let mut theta = [0.0f64; 3];
        for (a, s) in q.iter().enumerate() {
            let b = velocity_bound(s, &avg, frame);
            for l in 0..3 {
                let dev = (s.vel[l] - avg.vel[l]).abs();
                if dev > b * (1.0 + BOUND_TOL) {
                    theta[l] = theta[l].max(cap_of(a) * (1.0 - b / dev));
                }
            }
        }
        let theta = theta.map(|t| t.min(cap));
        if theta.iter().all(|&t| t == 0.0) {
            break;
        }
        for (a, s) in q.iter().enumerate() {
            // J U += f_v / P, i.e. U += f_v / (P J)
            let scale = avg.rho_min / frame.pj[a];
            let mut de = 0.0;
            for l in 0..3 {
                let dm = scale * theta[l] * (avg.vel[l] - s.vel[l]);
                u[a][1 + l] += dm;
                de += avg.vel[l] * dm;
            }
            u[a][4] += de;
        }
        report.iterations += 1;
        report.theta.push(theta.to_vec());
        report
            .contraction
            .push(theta.iter().map(|t| 1.0 - t / cap_max).collect());
        report
            .strength
            .push(theta.iter().map(|t| t / cap_max).collect());
    }
    report
}

/// Temperature limiter on nodal conservative states `u`; only energy changes.
pub fn temperature_limit(
    gas: &GasModel,
    u: &mut [[f64; 5]],
    frame: &ElementFrame,
    max_iters: usize,
) -> LimiterReport {
    let mut report = LimiterReport::default();
    if frame.mu <= 0.0 {
        return report;
    }
    let rg = gas.r_gas / (gas.gamma - 1.0);
    for _ in 0..max_iters {
        let q = prims(gas, u);
        let avg = averages(&q);
        let cap_of = |a: usize| frame.pj[a] * q[a].rho / avg.rho_min;
        let cap = rg * (0..q.len()).map(cap_of).fold(f64::INFINITY, f64::min);
        let cap_max = (0..q.len()).map(cap_of).fold(0.0, f64::max);
        let mut theta = 0.0f64;
        for (a, s) in q.iter().enumerate() {
            let (lhs, rhs) = temperature_excess(gas, s, &avg, frame);
            if lhs > rhs * (1.0 + BOUND_TOL) {
                theta = theta.max(cap_of(a) * rg * (1.0 - rhs / lhs));
            }
        }
        let theta = theta.min(cap);
        if theta == 0.0 {
            break;
        }
        for (a, s) in q.iter().enumerate() {
            u[a][4] += theta * avg.rho_min * (avg.temp - s.temp) / frame.pj[a];
        }
        report.iterations += 1;
        report.theta.push(vec![theta]);
        report.contraction.push(vec![1.0 - theta / (rg * cap_max)]);
        report.strength.push(vec![theta / (rg * cap_max)]);
    }
    report
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LimiterCounts {
    pub velocity: usize,
    pub temperature: usize,
}

/// Apply both limiters to every troubled element of a nodal field.
pub fn limit_field(scheme: &Scheme, u: &mut [[f64; 5]], cfg: &LimiterConfig) -> LimiterCounts {
    let mut counts = LimiterCounts::default();
    if !cfg.enabled || cfg.max_iters == 0 {
        return counts;
    }
    let gas = &scheme.gas;
    let np = scheme.ops.nodes_per_element();
    let weights: Vec<f64> = (0..np).map(|a| scheme.ops.volume_weight(a)).collect();
    for (e, chunk) in u.chunks_mut(np).enumerate() {
        let geom = &scheme.geom[e];
        let t_avg = chunk
            .iter()
            .map(|s| gas.prim(&Cons(*s)).map(|q| q.temp).unwrap_or(f64::NAN))
            .sum::<f64>()
            / np as f64;
        let mu = gas.mu(t_avg);
        if !(mu > 0.0) {
            continue;
        }
        let frame = ElementFrame::new(&weights, &geom.jac, mu);
        let flags = detect_troubled(gas, chunk, &frame);
        if flags.velocity && velocity_limit(gas, chunk, &frame, cfg.max_iters).applied() {
            counts.velocity += 1;
        }
        if (flags.velocity || flags.temperature)
            && detect_troubled(gas, chunk, &frame).temperature
            && temperature_limit(gas, chunk, &frame, cfg.max_iters).applied()
        {
            counts.temperature += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::ViscosityLaw;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gas() -> GasModel {
        GasModel::new(1.4, 1.0 / 1.4, 0.75, ViscosityLaw::Constant { mu: 1.0 }).unwrap()
    }

    fn element(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> (Vec<[f64; 5]>, ElementFrame) {
        let g = gas();
        let u = (0..n)
            .map(|_| {
                let q = Prim::new(
                    rng.gen_range(0.5..2.0),
                    std::array::from_fn(|_| rng.gen_range(-spread..spread)),
                    rng.gen_range(0.3..3.0),
                );
                g.cons(&q).0
            })
            .collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.5)).collect();
        let j: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..0.1)).collect();
        (u, ElementFrame::new(&w, &j, rng.gen_range(1.0..5.0)))
    }

    fn totals(u: &[[f64; 5]], f: &ElementFrame) -> [f64; 5] {
        std::array::from_fn(|c| u.iter().zip(&f.pj).map(|(s, w)| w * s[c]).sum())
    }

    fn entropy(g: &GasModel, u: &[[f64; 5]], f: &ElementFrame) -> f64 {
        u.iter()
            .zip(&f.pj)
            .map(|(s, w)| w * g.math_entropy(&g.prim(&Cons(*s)).unwrap()))
            .sum()
    }

    #[test]
    fn no_violation_leaves_element_unchanged() {
        let g = gas();
        let u0 = vec![g.cons(&Prim::new(1.0, [0.3, 0.0, 0.1], 1.0)).0; 8];
        let frame = ElementFrame::new(&[0.125; 8], &[1.0; 8], 1.0);
        let mut u = u0.clone();
        let rv = velocity_limit(&g, &mut u, &frame, 5);
        let rt = temperature_limit(&g, &mut u, &frame, 5);
        assert!(!rv.applied() && !rt.applied());
        assert_eq!(u, u0);
        assert_eq!(detect_troubled(&g, &u, &frame), Troubled::default());
    }

    #[test]
    fn two_node_symmetric_velocity_lands_on_bound() {
        let g = gas();
        let (v, t) = (3.0, 1.0);
        let mut u = vec![
            g.cons(&Prim::new(1.0, [v, 0.0, 0.0], t)).0,
            g.cons(&Prim::new(1.0, [-v, 0.0, 0.0], t)).0,
        ];
        let frame = ElementFrame::new(&[1.0, 1.0], &[1e-3, 1e-3], 1.0);
        let bound = frame.h * t / frame.mu;
        let report = velocity_limit(&g, &mut u, &frame, 1);
        let theta = report.theta[0][0];
        assert!((theta - 1e-3 * (1.0 - bound / v)).abs() < 1e-15);
        for (s, sign) in u.iter().zip([1.0, -1.0]) {
            let q = g.prim(&Cons(*s)).unwrap();
            assert!((q.vel[0] - sign * bound).abs() < 1e-13);
            // kinetic energy removed reappears as heat
            let expected = t + (g.gamma - 1.0) / g.r_gas * 0.5 * (v * v - bound * bound);
            assert!((q.temp - expected).abs() < 1e-12);
        }
        // at the cap both velocities reach the mean
        let mut u = vec![
            g.cons(&Prim::new(1.0, [v, 0.0, 0.0], t)).0,
            g.cons(&Prim::new(1.0, [-v, 0.0, 0.0], t)).0,
        ];
        let tiny = ElementFrame { h: 0.0, ..frame };
        velocity_limit(&g, &mut u, &tiny, 1);
        for s in &u {
            let q = g.prim(&Cons(*s)).unwrap();
            assert!(q.vel[0].abs() < 1e-13);
            assert!((q.temp - (t + (g.gamma - 1.0) / g.r_gas * 0.5 * v * v)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_hot_node_moves_by_predicted_factor() {
        let g = gas();
        let mut u: Vec<[f64; 5]> = (0..4)
            .map(|_| g.cons(&Prim::new(1.0, [0.0; 3], 1.0)).0)
            .collect();
        u[2] = g.cons(&Prim::new(1.0, [0.0; 3], 4.0)).0;
        let frame = ElementFrame::new(&[0.25; 4], &[0.01; 4], 2.0);
        let before: Vec<f64> = u.iter().map(|s| g.prim(&Cons(*s)).unwrap().temp).collect();
        let t_bar = before.iter().sum::<f64>() / 4.0;
        let r = temperature_limit(&g, &mut u, &frame, 1);
        let theta = r.theta[0][0];
        for (a, s) in u.iter().enumerate() {
            let t = g.prim(&Cons(*s)).unwrap().temp;
            let factor = 1.0 - (g.gamma - 1.0) / g.r_gas * theta / frame.pj[a];
            assert!((t - t_bar - (before[a] - t_bar) * factor).abs() < 1e-12);
        }
    }

    #[test]
    fn randomized_violating_elements() {
        let g = gas();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut limited = 0;
        for _ in 0..1000 {
            let (u0, frame) = element(&mut rng, 27, 4.0);
            let mut u = u0.clone();
            let t0 = totals(&u, &frame);
            let s0 = entropy(&g, &u, &frame);
            let rv = velocity_limit(&g, &mut u, &frame, 1);
            for (a, b) in u.iter().zip(&u0) {
                assert_eq!(a[0].to_bits(), b[0].to_bits());
                let (qa, qb) = (g.prim(&Cons(*a)).unwrap(), g.prim(&Cons(*b)).unwrap());
                assert!(
                    g.math_entropy(&qa) <= g.math_entropy(&qb) + 1e-13 * g.math_entropy(&qb).abs()
                );
            }
            let s1 = entropy(&g, &u, &frame);
            let rt = temperature_limit(&g, &mut u, &frame, 1);
            let t1 = totals(&u, &frame);
            for c in 0..5 {
                assert!((t1[c] - t0[c]).abs() <= 1e-13 * t0[c].abs().max(t0[0]));
            }
            let s2 = entropy(&g, &u, &frame);
            assert!(s1 <= s0 + 1e-13 * s0.abs() && s2 <= s1 + 1e-13 * s1.abs());
            if rv.applied() || rt.applied() {
                limited += 1;
            }
        }
        assert!(limited > 500);
    }

    #[test]
    fn iterating_contracts_and_reaches_bounds() {
        let g = gas();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let (mut u, frame) = element(&mut rng, 27, 3.0);
            for _ in 0..200 {
                let range = |u: &[[f64; 5]]| -> [f64; 4] {
                    let q = prims(&g, u);
                    std::array::from_fn(|c| {
                        let f = |s: &Prim| if c < 3 { s.vel[c] } else { s.temp };
                        q.iter().map(f).fold(f64::NEG_INFINITY, f64::max)
                            - q.iter().map(f).fold(f64::INFINITY, f64::min)
                    })
                };
                let r0 = range(&u);
                let rv = velocity_limit(&g, &mut u, &frame, 1);
                let r1 = range(&u);
                if let Some(c) = rv.contraction.first() {
                    for l in 0..3 {
                        assert!(c[l] <= 1.0 && r1[l] <= r0[l] * c[l] + 1e-12);
                    }
                }
                let rt = temperature_limit(&g, &mut u, &frame, 1);
                let r2 = range(&u);
                if let Some(c) = rt.contraction.first() {
                    assert!(c[0] < 1.0 && r2[3] <= r1[3] * c[0] + 1e-12);
                }
                if !rv.applied() && !rt.applied() {
                    break;
                }
            }
            let tr = detect_troubled(&g, &u, &frame);
            assert!(!tr.velocity && !tr.temperature, "{tr:?}");
        }
    }

    proptest! {
        #[test]
        fn limiters_conserve_and_keep_density(seed in 0u64..10_000, spread in 0.1f64..6.0) {
            let g = gas();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (u0, frame) = element(&mut rng, 8, spread);
            let mut u = u0.clone();
            velocity_limit(&g, &mut u, &frame, 3);
            temperature_limit(&g, &mut u, &frame, 3);
            let (a, b) = (totals(&u0, &frame), totals(&u, &frame));
            for c in 0..5 {
                prop_assert!((a[c] - b[c]).abs() <= 1e-13 * a[c].abs().max(a[0]));
            }
            for (x, y) in u.iter().zip(&u0) {
                prop_assert_eq!(x[0].to_bits(), y[0].to_bits());
                prop_assert!(g.prim(&Cons(*x)).is_ok());
            }
        }
    }
}
