//! Test problems: the exact steady viscous shock profile (Pr = 3/4), Riemann
//! data for shock tubes and strong-shock diffraction, and uniform flow.

use crate::error::{Error, Result};
use crate::thermo::{dot, norm, GasModel, Prim, Vec3, ViscosityLaw};

/// One-dimensional viscous shock for a calorically perfect gas with constant
/// viscosity and Pr = 3/4, nondimensionalised by the upstream density, the
/// shock speed relative to the upstream gas and a unit length, so `mu = 1/Re`
/// and the upstream sound speed is `1/Ma`. In the lab frame the upstream gas
/// is at rest and the shock travels along `direction` with unit speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscousShock {
    pub gamma: f64,
    pub mach: f64,
    pub reynolds: f64,
    pub prandtl: f64,
    /// Unit propagation direction.
    pub direction: Vec3,
    /// Shock-centre position at `t = 0`, measured along `direction`.
    pub offset: f64,
    /// Length scale of the profile.
    pub alpha: f64,
    /// Downstream-to-upstream shock-frame velocity ratio.
    pub v_final: f64,
    shift: f64,
}

impl ViscousShock {
    pub fn new(
        gamma: f64,
        mach: f64,
        reynolds: f64,
        prandtl: f64,
        direction: Vec3,
    ) -> Result<Self> {
        if (prandtl - 0.75).abs() > 1e-12 {
            return Err(Error::Parameter(format!(
                "the closed-form viscous shock requires Pr = 3/4, got {prandtl}"
            )));
        }
        if !(gamma > 1.0) || !(mach > 1.0) || !(reynolds > 0.0) {
            return Err(Error::Parameter(format!(
                "viscous shock needs gamma > 1, Ma > 1, Re > 0 (got {gamma}, {mach}, {reynolds})"
            )));
        }
        let len = norm(&direction);
        if !(len > 0.0) {
            return Err(Error::Parameter("shock direction must be nonzero".into()));
        }
        let direction = direction.map(|d| d / len);
        let alpha = 8.0 * gamma / (3.0 * (gamma + 1.0) * reynolds);
        let v_final = (gamma - 1.0 + 2.0 / (mach * mach)) / (gamma + 1.0);
        let mut s = Self {
            gamma,
            mach,
            reynolds,
            prandtl,
            direction,
            offset: 0.0,
            alpha,
            v_final,
            shift: 0.0,
        };
        s.shift = s.raw_position(0.0);
        Ok(s)
    }

    /// Mach 2.5, Re 50 shock moving along `[1, 1, 1]`.
    pub fn standard() -> Self {
        Self::new(1.4, 2.5, 50.0, 0.75, [1.0, 1.0, 1.0]).expect("valid parameters")
    }

    pub fn gas(&self) -> GasModel {
        GasModel {
            gamma: self.gamma,
            r_gas: 1.0 / self.gamma,
            prandtl: self.prandtl,
            viscosity: ViscosityLaw::Constant {
                mu: 1.0 / self.reynolds,
            },
        }
    }

    /// Shock-frame coordinate as a function of `z = ln((1 - v) / (v - v_final))`,
    /// before centring. Increasing and concave in `z`.
    fn raw_position(&self, z: f64) -> f64 {
        let vf = self.v_final;
        let k = (1.0 + vf) / (1.0 - vf);
        let ln_d = (1.0 - vf).ln();
        let softplus = if z > 0.0 {
            z + (-z).exp().ln_1p()
        } else {
            z.exp().ln_1p()
        };
        let ln_a = ln_d + z - softplus;
        let ln_b = ln_d - softplus;
        0.5 * self.alpha * ((1.0 + k) * ln_a + (1.0 - k) * ln_b)
    }

    fn raw_slope(&self, z: f64) -> f64 {
        let vf = self.v_final;
        let k = (1.0 + vf) / (1.0 - vf);
        let sigma = if z > 0.0 {
            1.0 / (1.0 + (-z).exp())
        } else {
            z.exp() / (1.0 + z.exp())
        };
        0.5 * self.alpha * (1.0 + k - 2.0 * sigma)
    }

    fn ratio_from_log(&self, z: f64) -> f64 {
        let d = 1.0 - self.v_final;
        if z > 0.0 {
            self.v_final + d * (-z).exp() / (1.0 + (-z).exp())
        } else {
            1.0 - d * z.exp() / (1.0 + z.exp())
        }
    }

    /// Log-ratio `z` at shock-frame coordinate `s`, by Newton iteration
    /// safeguarded with bisection.
    fn log_ratio(&self, s: f64) -> Result<f64> {
        if !s.is_finite() {
            return Err(Error::Numerical(format!("viscous shock queried at {s}")));
        }
        let target = s + self.shift;
        let f = |z: f64| self.raw_position(z) - target;
        // Slopes are bounded below by alpha/2 (k - 1), so this brackets the root.
        let width = (target.abs() + 1.0)
            / (0.5 * self.alpha * ((1.0 + self.v_final) / (1.0 - self.v_final) - 1.0));
        let (mut lo, mut hi) = (-width - 1.0, width + 1.0);
        let mut z = 0.0;
        for _ in 0..200 {
            let r = f(z);
            if r > 0.0 {
                hi = z;
            } else {
                lo = z;
            }
            let newton = z - r / self.raw_slope(z);
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - z).abs() <= 1e-14 * (1.0 + z.abs()) {
                return Ok(next);
            }
            z = next;
        }
        Err(Error::Numerical(format!(
            "viscous shock root find did not converge at s = {s}"
        )))
    }

    /// Velocity ratio `v` in `[v_final, 1]` at shock-frame coordinate `s`.
    pub fn velocity_ratio(&self, s: f64) -> Result<f64> {
        Ok(self.ratio_from_log(self.log_ratio(s)?))
    }

    /// Residual `|x(v) - s|` of the profile relation at the computed root.
    pub fn relation_residual(&self, s: f64) -> Result<f64> {
        let z = self.log_ratio(s)?;
        Ok((self.raw_position(z) - self.shift - s).abs())
    }

    fn shock_frame_coordinate(&self, x: &Vec3, t: f64) -> f64 {
        // The shock-frame flow runs along -direction, from the upstream (+) side.
        -(dot(x, &self.direction) - self.offset) + t
    }

    /// Exact primitive state at `x`, time `t`.
    pub fn exact(&self, x: &Vec3, t: f64) -> Result<Prim> {
        let s = self.shock_frame_coordinate(x, t);
        let v = self.velocity_ratio(s)?;
        Ok(self.state_at_ratio(v))
    }

    /// Lab-frame state at velocity ratio `v`.
    pub fn state_at_ratio(&self, v: f64) -> Prim {
        let g = self.gamma;
        let cp = 1.0 / (g - 1.0);
        let enthalpy = cp / (self.mach * self.mach) + 0.5;
        let temp = (enthalpy - 0.5 * v * v) / cp;
        let speed = 1.0 - v;
        Prim::new(1.0 / v, self.direction.map(|d| speed * d), temp)
    }
}

/// Piecewise-constant data separated by the plane `normal . x = position`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannData {
    pub left: Prim,
    pub right: Prim,
    pub normal: Vec3,
    pub position: f64,
}

impl RiemannData {
    pub fn state(&self, x: &Vec3) -> Prim {
        if dot(x, &self.normal) < self.position {
            self.left
        } else {
            self.right
        }
    }

    /// Sod's shock tube along x for a gas with constant `r_gas`.
    pub fn sod(gas: &GasModel, position: f64) -> Self {
        let r = gas.r_gas;
        Self {
            left: Prim::new(1.0, [0.0; 3], 1.0 / r),
            right: Prim::new(0.125, [0.0; 3], 0.1 / (0.125 * r)),
            normal: [1.0, 0.0, 0.0],
            position,
        }
    }

    /// Shock of Mach number `mach` running along +x into gas at rest with
    /// density `rho` and pressure `pressure`; post-shock state from the
    /// Rankine-Hugoniot relations.
    pub fn moving_shock(
        gas: &GasModel,
        mach: f64,
        rho: f64,
        pressure: f64,
        position: f64,
    ) -> Result<Self> {
        if !(mach >= 1.0) || !(rho > 0.0) || !(pressure > 0.0) {
            return Err(Error::Parameter(format!(
                "moving shock needs Ma >= 1 and positive pre-shock state (got {mach}, {rho}, {pressure})"
            )));
        }
        let g = gas.gamma;
        let m2 = mach * mach;
        let c = (g * pressure / rho).sqrt();
        let rho2 = rho * (g + 1.0) * m2 / ((g - 1.0) * m2 + 2.0);
        let p2 = pressure * (1.0 + 2.0 * g / (g + 1.0) * (m2 - 1.0));
        let u2 = c * 2.0 / (g + 1.0) * (mach - 1.0 / mach);
        Ok(Self {
            left: Prim::new(rho2, [u2, 0.0, 0.0], p2 / (rho2 * gas.r_gas)),
            right: Prim::new(rho, [0.0; 3], pressure / (rho * gas.r_gas)),
            normal: [1.0, 0.0, 0.0],
            position,
        })
    }

    /// Shock speed implied by mass conservation across the discontinuity.
    pub fn shock_speed(&self) -> f64 {
        let (l, r) = (&self.left, &self.right);
        let ml = l.rho * dot(&l.vel, &self.normal);
        let mr = r.rho * dot(&r.vel, &self.normal);
        (ml - mr) / (l.rho - r.rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn standard_parameters() {
        let s = ViscousShock::standard();
        assert!((s.v_final - 0.3).abs() < 1e-15);
        assert!((s.alpha - 8.0 * 1.4 * 0.02 / (3.0 * 2.4)).abs() < 1e-15);
        assert!((s.gas().sound_speed(1.0 / 6.25) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn asymptotic_states_satisfy_rankine_hugoniot() {
        let s = ViscousShock::standard();
        let far = 50.0 * s.alpha;
        assert!((s.velocity_ratio(-far).unwrap() - 1.0).abs() < 1e-12);
        assert!((s.velocity_ratio(far).unwrap() - s.v_final).abs() < 1e-12);

        // Upstream state at rest with unit density and sound speed 1/Ma.
        let dir = s.direction;
        let up = s.exact(&dir.map(|d| 10.0 * d), 0.0).unwrap();
        assert!((up.rho - 1.0).abs() < 1e-12 && (s.gas().sound_speed(up.temp) - 0.4).abs() < 1e-12);
        assert!(norm(&up.vel) < 1e-11);

        // Downstream state from the normal-shock relations for Ma = 2.5.
        let down = s.exact(&dir.map(|d| -10.0 * d), 0.0).unwrap();
        let g: f64 = 1.4;
        let m2 = 6.25;
        let rho2 = (g + 1.0) * m2 / ((g - 1.0) * m2 + 2.0);
        let p2 = 1.0 + 2.0 * g / (g + 1.0) * (m2 - 1.0);
        let gas = s.gas();
        assert!((down.rho - rho2).abs() < 1e-10);
        assert!((gas.pressure(&down) - p2 / (g * m2)).abs() < 1e-10);
        // Downstream gas follows the shock.
        let u2 = 1.0 - 1.0 / rho2;
        assert!((dot(&down.vel, &dir) - u2).abs() < 1e-10);
    }

    #[test]
    fn midpoint_velocity_is_mean_of_end_states() {
        let s = ViscousShock::standard();
        let v = s.velocity_ratio(0.0).unwrap();
        assert!((v - 0.5 * (1.0 + s.v_final)).abs() < 1e-13);
        let mid = s.exact(&[0.0; 3], 0.0).unwrap();
        let (up, down) = (s.state_at_ratio(1.0), s.state_at_ratio(s.v_final));
        let speed = |q: &Prim| dot(&q.vel, &s.direction);
        assert!((speed(&mid) - 0.5 * (speed(&up) + speed(&down))).abs() < 1e-12);
    }

    #[test]
    fn profile_travels_with_shock_speed() {
        let s = ViscousShock::standard();
        let t = 0.07;
        let shift = s.direction.map(|d| t * d);
        for x in [-0.3, -0.05, 0.0, 0.02, 0.4] {
            let p = s.direction.map(|d| x * d);
            let moved: Vec3 = std::array::from_fn(|k| p[k] + shift[k]);
            let (a, b) = (s.exact(&p, 0.0).unwrap(), s.exact(&moved, t).unwrap());
            assert!((a.rho - b.rho).abs() < 1e-12 && (a.temp - b.temp).abs() < 1e-12);
        }
    }

    #[test]
    fn profile_satisfies_steady_momentum_and_energy_balance() {
        // Total enthalpy and momentum flux (with viscous stress) are constant
        // through the shock-frame profile.
        let s = ViscousShock::standard();
        let mu = 1.0 / s.reynolds;
        let cp = 1.0 / (s.gamma - 1.0);
        let u_of = |x: f64| s.velocity_ratio(x).unwrap();
        let h = 1e-5;
        let mut vals = Vec::new();
        for x in [-0.2, -0.05, 0.0, 0.03, 0.15] {
            let u = u_of(x);
            let du = (u_of(x + h) - u_of(x - h)) / (2.0 * h);
            let q = s.state_at_ratio(u);
            let p = q.rho * q.temp / s.gamma;
            let momentum = q.rho * u * u + p - 4.0 / 3.0 * mu * du;
            vals.push(momentum);
            assert!((cp * q.temp + 0.5 * u * u - (cp / 6.25 + 0.5)).abs() < 1e-12);
        }
        for v in &vals {
            assert!((v - vals[0]).abs() < 1e-7 * vals[0].abs(), "{vals:?}");
        }
    }

    #[test]
    fn log_form_matches_velocity_form() {
        let s = ViscousShock::standard();
        let vf = s.v_final;
        let k = (1.0 + vf) / (1.0 - vf);
        let direct = |v: f64| {
            0.5 * s.alpha
                * (((v - 1.0) * (v - vf)).abs().ln() + k * ((v - 1.0) / (v - vf)).abs().ln())
        };
        let centre = direct(0.5 * (1.0 + vf));
        for x in [-0.2, -0.1, -0.03, 0.0, 0.01, 0.05, 0.1] {
            let v = s.velocity_ratio(x).unwrap();
            assert!((direct(v) - centre - x).abs() < 1e-10, "{x}");
            // Becker ODE: alpha v v' = (v - 1)(v - v_final).
            let h = 1e-6;
            let dv =
                (s.velocity_ratio(x + h).unwrap() - s.velocity_ratio(x - h).unwrap()) / (2.0 * h);
            assert!((s.alpha * v * dv - (v - 1.0) * (v - vf)).abs() < 1e-7);
        }
    }

    #[test]
    fn rejects_non_three_quarter_prandtl() {
        assert!(ViscousShock::new(1.4, 2.5, 50.0, 0.72, [1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn moving_shock_jump_conditions() {
        let gas = GasModel::new(1.4, 1.0, 0.75, ViscosityLaw::Constant { mu: 0.0 }).unwrap();
        let r = RiemannData::moving_shock(&gas, 200.0, 1.4, 1.0, 0.5).unwrap();
        let speed = r.shock_speed();
        assert!((speed - 200.0).abs() < 1e-9 * 200.0);
        // Momentum and energy fluxes balance in the shock frame.
        let flux = |q: &Prim| {
            let u = q.vel[0] - speed;
            let p = gas.pressure(q);
            let e = p / (gas.gamma - 1.0) / q.rho + 0.5 * u * u;
            [q.rho * u, q.rho * u * u + p, q.rho * u * (e + p / q.rho)]
        };
        let (a, b) = (flux(&r.left), flux(&r.right));
        for k in 0..3 {
            assert!(
                (a[k] - b[k]).abs() < 1e-10 * a[k].abs().max(b[k].abs()),
                "{k}: {a:?} {b:?}"
            );
        }
    }

    proptest! {
        #[test]
        fn relation_residual_below_tolerance(s in -1.5f64..1.5) {
            let shock = ViscousShock::standard();
            let v = shock.velocity_ratio(s).unwrap();
            prop_assert!(v >= shock.v_final && v <= 1.0);
            prop_assert!(shock.relation_residual(s).unwrap() < 1e-12);
        }

        #[test]
        fn profile_is_monotone(a in -0.5f64..0.5, d in 1e-4f64..0.3) {
            let shock = ViscousShock::standard();
            prop_assert!(shock.velocity_ratio(a).unwrap() >= shock.velocity_ratio(a + d).unwrap());
        }
    }
}
