//! Calorically perfect gas: state conversions, entropy and averaging.
//!
//! Entropy convention: `s = cv ln T - R ln rho`, mathematical entropy
//! `S = -rho s`, which gives the entropy potential `psi = R rho V`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];
pub type Flux = [f64; 5];

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum ViscosityLaw {
    Constant { mu: f64 },
    Sutherland { mu_ref: f64, t_ref: f64, s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasModel {
    pub gamma: f64,
    pub r_gas: f64,
    pub prandtl: f64,
    pub viscosity: ViscosityLaw,
}

impl Default for GasModel {
    fn default() -> Self {
        Self {
            gamma: 1.4,
            r_gas: 287.0,
            prandtl: 0.72,
            viscosity: ViscosityLaw::Sutherland {
                mu_ref: 1.716e-5,
                t_ref: 273.15,
                s: 110.4,
            },
        }
    }
}

impl GasModel {
    pub fn new(gamma: f64, r_gas: f64, prandtl: f64, viscosity: ViscosityLaw) -> Result<Self> {
        let g = Self {
            gamma,
            r_gas,
            prandtl,
            viscosity,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) {
            return Err(Error::Parameter(format!(
                "gamma = {} must exceed 1",
                self.gamma
            )));
        }
        if !(self.r_gas > 0.0) {
            return Err(Error::Parameter(format!(
                "gas constant {} must be positive",
                self.r_gas
            )));
        }
        if !(self.prandtl > 0.0) {
            return Err(Error::Parameter(format!(
                "Prandtl number {} must be positive",
                self.prandtl
            )));
        }
        match self.viscosity {
            ViscosityLaw::Constant { mu } if mu < 0.0 => Err(Error::Parameter(format!(
                "viscosity {mu} must be non-negative"
            ))),
            ViscosityLaw::Sutherland { mu_ref, t_ref, s }
                if mu_ref <= 0.0 || t_ref <= 0.0 || s < 0.0 =>
            {
                Err(Error::Parameter(
                    "Sutherland constants must be positive".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn cv(&self) -> f64 {
        self.r_gas / (self.gamma - 1.0)
    }

    pub fn cp(&self) -> f64 {
        self.gamma * self.r_gas / (self.gamma - 1.0)
    }

    pub fn mu(&self, t: f64) -> f64 {
        match self.viscosity {
            ViscosityLaw::Constant { mu } => mu,
            ViscosityLaw::Sutherland { mu_ref, t_ref, s } => {
                mu_ref * (t / t_ref).powf(1.5) * (t_ref + s) / (t + s)
            }
        }
    }

    pub fn kappa(&self, t: f64) -> f64 {
        self.cp() * self.mu(t) / self.prandtl
    }

    pub fn sound_speed(&self, t: f64) -> f64 {
        (self.gamma * self.r_gas * t).sqrt()
    }

    pub fn prim(&self, u: &Cons) -> Result<Prim> {
        let rho = u.0[0];
        let ie = u.internal_energy();
        if !(rho > 0.0) || !(ie > 0.0) {
            return Err(Error::Inadmissible {
                rho,
                internal_energy: ie,
            });
        }
        let inv = 1.0 / rho;
        Ok(Prim {
            rho,
            vel: [u.0[1] * inv, u.0[2] * inv, u.0[3] * inv],
            temp: ie * inv / self.cv(),
        })
    }

    pub fn cons(&self, q: &Prim) -> Cons {
        let ke = 0.5 * dot(&q.vel, &q.vel);
        Cons([
            q.rho,
            q.rho * q.vel[0],
            q.rho * q.vel[1],
            q.rho * q.vel[2],
            q.rho * (self.cv() * q.temp + ke),
        ])
    }

    pub fn pressure(&self, q: &Prim) -> f64 {
        q.rho * self.r_gas * q.temp
    }

    /// Thermodynamic entropy `s = cv ln T - R ln rho`.
    pub fn specific_entropy(&self, q: &Prim) -> f64 {
        self.cv() * q.temp.ln() - self.r_gas * q.rho.ln()
    }

    pub fn entropy_vars_prim(&self, q: &Prim) -> EntropyVars {
        let s = self.specific_entropy(q);
        let it = 1.0 / q.temp;
        let v2 = dot(&q.vel, &q.vel);
        EntropyVars([
            self.cp() - s - 0.5 * v2 * it,
            q.vel[0] * it,
            q.vel[1] * it,
            q.vel[2] * it,
            -it,
        ])
    }

    pub fn entropy_vars(&self, u: &Cons) -> Result<EntropyVars> {
        Ok(self.entropy_vars_prim(&self.prim(u)?))
    }

    pub fn prim_from_entropy(&self, w: &EntropyVars) -> Result<Prim> {
        let w = &w.0;
        if !(w[4] < 0.0) {
            return Err(Error::Inadmissible {
                rho: f64::NAN,
                internal_energy: f64::NAN,
            });
        }
        let temp = -1.0 / w[4];
        let vel = [w[1] * temp, w[2] * temp, w[3] * temp];
        let s = self.cp() - w[0] - 0.5 * dot(&vel, &vel) / temp;
        let rho = ((self.cv() * temp.ln() - s) / self.r_gas).exp();
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::Inadmissible {
                rho,
                internal_energy: f64::NAN,
            });
        }
        Ok(Prim { rho, vel, temp })
    }

    pub fn cons_from_entropy(&self, w: &EntropyVars) -> Result<Cons> {
        Ok(self.cons(&self.prim_from_entropy(w)?))
    }

    /// Mathematical entropy `S = -rho s` and its Cartesian flux `S V`.
    pub fn entropy_and_flux(&self, u: &Cons) -> Result<(f64, Vec3)> {
        let q = self.prim(u)?;
        let s = -q.rho * self.specific_entropy(&q);
        Ok((s, [s * q.vel[0], s * q.vel[1], s * q.vel[2]]))
    }

    pub fn math_entropy(&self, q: &Prim) -> f64 {
        -q.rho * self.specific_entropy(q)
    }

    /// Entropy potential `psi_m = R rho V_m`.
    pub fn potential(&self, q: &Prim) -> Vec3 {
        let c = self.r_gas * q.rho;
        [c * q.vel[0], c * q.vel[1], c * q.vel[2]]
    }

    /// Inviscid flux contracted with the direction `n`.
    pub fn euler_flux(&self, q: &Prim, n: &Vec3) -> Flux {
        let vn = dot(&q.vel, n);
        let p = self.pressure(q);
        let mass = q.rho * vn;
        let e = q.rho * (self.cv() * q.temp + 0.5 * dot(&q.vel, &q.vel));
        [
            mass,
            mass * q.vel[0] + p * n[0],
            mass * q.vel[1] + p * n[1],
            mass * q.vel[2] + p * n[2],
            (e + p) * vn,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Cons(pub [f64; 5]);

impl Cons {
    pub fn rho(&self) -> f64 {
        self.0[0]
    }

    pub fn momentum(&self) -> Vec3 {
        [self.0[1], self.0[2], self.0[3]]
    }

    pub fn energy(&self) -> f64 {
        self.0[4]
    }

    /// Internal energy per unit volume, `E - |m|^2 / (2 rho)`.
    pub fn internal_energy(&self) -> f64 {
        let m = self.momentum();
        self.0[4] - 0.5 * dot(&m, &m) / self.0[0]
    }

    pub fn is_admissible(&self) -> bool {
        self.0[0] > 0.0 && self.internal_energy() > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prim {
    pub rho: f64,
    pub vel: Vec3,
    pub temp: f64,
}

impl Prim {
    pub fn new(rho: f64, vel: Vec3, temp: f64) -> Self {
        Self { rho, vel, temp }
    }

    /// Primitive vector `[rho, V, T]`.
    pub fn as_array(&self) -> [f64; 5] {
        [self.rho, self.vel[0], self.vel[1], self.vel[2], self.temp]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyVars(pub [f64; 5]);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Means {
    pub arithmetic: f64,
    pub geometric: f64,
    pub harmonic: f64,
    pub logarithmic: f64,
}

pub fn means(z1: f64, z2: f64) -> Result<Means> {
    if !(z1 > 0.0 && z2 > 0.0) {
        return Err(Error::Parameter(format!(
            "means need positive inputs, got {z1}, {z2}"
        )));
    }
    Ok(Means {
        arithmetic: 0.5 * (z1 + z2),
        geometric: (z1 * z2).sqrt(),
        harmonic: 2.0 * z1 * z2 / (z1 + z2),
        logarithmic: log_mean(z1, z2),
    })
}

/// Logarithmic mean `(a - b) / (ln a - ln b)`, series expansion when `a ~ b`.
#[inline]
pub fn log_mean(a: f64, b: f64) -> f64 {
    let d = a - b;
    if (d / b).abs() < 1e-4 {
        let f = d / (a + b);
        let u = f * f;
        (a + b) / (2.0 * (1.0 + u / 3.0 + u * u / 5.0 + u * u * u / 7.0))
    } else {
        d / (d / b).ln_1p()
    }
}

#[inline]
pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}
