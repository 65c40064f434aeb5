//! Run configuration (TOML) and assembly of a ready-to-run case.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::artvisc::SensorConfig;
use crate::error::{Error, Result};
use crate::limiters::LimiterConfig;
use crate::mesh::{build_box_mesh, build_step_mesh, load_mesh, perturb_mesh, HexMesh};
use crate::positivity::StepperConfig;
use crate::problems::{RiemannData, ViscousShock};
use crate::sbp::TensorOps;
use crate::scheme::{BoundaryCondition, ExactFn, Scheme, SchemeOptions};
use crate::thermo::{GasModel, Prim, Vec3, ViscosityLaw};

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Polynomial degree of the LGL grid in each element.
    pub degree: usize,
    pub mesh: MeshConfig,
    pub gas: Option<GasConfig>,
    pub problem: ProblemConfig,
    /// Boundary kind per boundary name; unnamed boundaries use the problem default.
    #[serde(default)]
    pub boundary: BTreeMap<String, BoundaryKind>,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub sensors: SensorsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshConfig {
    Box {
        elements: [usize; 3],
        bounds: [[f64; 2]; 3],
        #[serde(default)]
        periodic: [bool; 3],
        /// Maximum vertex shift as a fraction of the element size.
        #[serde(default)]
        perturbation: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Unit square with a lower-left block removed, one element deep in z.
    Step {
        elements: usize,
        step_x: f64,
        step_y: f64,
        #[serde(default = "default_depth")]
        depth: f64,
    },
    File {
        path: PathBuf,
    },
}

fn default_depth() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GasConfig {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub r_gas: f64,
    #[serde(default = "default_prandtl")]
    pub prandtl: f64,
    #[serde(default = "inviscid")]
    pub viscosity: ViscosityLaw,
}

fn default_gamma() -> f64 {
    1.4
}
fn one() -> f64 {
    1.0
}
fn default_prandtl() -> f64 {
    0.72
}
fn inviscid() -> ViscosityLaw {
    ViscosityLaw::Constant { mu: 0.0 }
}

impl Default for GasConfig {
    fn default() -> Self {
        Self {
            gamma: default_gamma(),
            r_gas: 1.0,
            prandtl: default_prandtl(),
            viscosity: inviscid(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PrimitiveState {
    pub rho: f64,
    #[serde(default)]
    pub velocity: Vec3,
    pub pressure: f64,
}

impl PrimitiveState {
    fn to_prim(self, gas: &GasModel) -> Result<Prim> {
        if !(self.rho > 0.0 && self.pressure > 0.0) {
            return Err(Error::Config(format!(
                "state needs positive density and pressure, got rho = {}, p = {}",
                self.rho, self.pressure
            )));
        }
        Ok(Prim::new(
            self.rho,
            self.velocity,
            self.pressure / (self.rho * gas.r_gas),
        ))
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// Exact viscous shock; determines its own gas model.
    ViscousShock {
        #[serde(default = "default_shock_mach")]
        mach: f64,
        #[serde(default = "default_shock_re")]
        reynolds: f64,
        #[serde(default = "default_shock_pr")]
        prandtl: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default = "default_shock_direction")]
        direction: Vec3,
    },
    Uniform {
        state: PrimitiveState,
    },
    Riemann {
        left: PrimitiveState,
        right: PrimitiveState,
        #[serde(default = "x_axis")]
        normal: Vec3,
        position: f64,
    },
    Sod {
        #[serde(default = "half")]
        position: f64,
    },
    /// Shock of given Mach number running along +x into gas at rest.
    MovingShock {
        mach: f64,
        #[serde(default = "default_pre_rho")]
        rho: f64,
        #[serde(default = "one")]
        pressure: f64,
        #[serde(default = "half")]
        position: f64,
    },
    /// Nodal field read from a CSV file written by this program.
    Field {
        path: PathBuf,
    },
}

fn default_shock_mach() -> f64 {
    2.5
}
fn default_shock_re() -> f64 {
    50.0
}
fn default_shock_pr() -> f64 {
    0.75
}
fn default_shock_direction() -> Vec3 {
    [1.0, 1.0, 1.0]
}
fn x_axis() -> Vec3 {
    [1.0, 0.0, 0.0]
}
fn half() -> f64 {
    0.5
}
fn default_pre_rho() -> f64 {
    1.4
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Dirichlet,
    Symmetry,
    Extrapolate,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeConfig {
    pub dissipation: bool,
    pub viscous: bool,
    pub c_rho: f64,
    pub c_t: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        let o = SchemeOptions::default();
        Self {
            dissipation: o.dissipation,
            viscous: o.viscous,
            c_rho: o.c_rho,
            c_t: o.c_t,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: f64,
    pub cfl: f64,
    pub visc_safety: f64,
    pub c_ie: f64,
    pub artificial_viscosity: bool,
    pub limiter: bool,
    pub limiter_iterations: usize,
    /// Abort with a numerical failure after this many steps (0 = unlimited).
    pub max_steps: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        let s = StepperConfig::default();
        Self {
            t_end: 0.1,
            cfl: s.cfl,
            visc_safety: s.visc_safety,
            c_ie: s.c_ie,
            artificial_viscosity: s.artificial_viscosity,
            limiter: s.limiter.enabled,
            limiter_iterations: s.limiter.max_iters,
            max_steps: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SensorsConfig {
    pub b: f64,
    pub cn_star: f64,
    pub a: f64,
    pub eps: f64,
}

impl Default for SensorsConfig {
    fn default() -> Self {
        let s = SensorConfig::default();
        Self {
            b: s.b,
            cn_star: s.cn_star,
            a: s.a,
            eps: s.eps,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FieldFormat {
    Vtk,
    Csv,
}

impl std::str::FromStr for FieldFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vtk" => Ok(Self::Vtk),
            "csv" => Ok(Self::Csv),
            other => Err(Error::Config(format!(
                "unknown output format '{other}' (expected vtk or csv)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<FieldFormat>,
    /// Write fields every this many steps; 0 writes the final state only.
    pub every: usize,
    pub step_log: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            formats: vec![FieldFormat::Vtk],
            every: 0,
            step_log: true,
        }
    }
}

/// Command-line overrides applied on top of a configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub elements: Option<usize>,
    pub degree: Option<usize>,
    pub seed: Option<u64>,
    pub t_end: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub formats: Option<Vec<FieldFormat>>,
}

/// A fully assembled case.
pub struct Case {
    pub scheme: Scheme,
    pub initial: Vec<[f64; 5]>,
    /// Reference solution for error norms, when one is known.
    pub exact: Option<ExactFn>,
    pub stepper: StepperConfig,
    pub t_end: f64,
    pub max_steps: usize,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.degree == 0 {
            return Err(Error::Config("degree must be at least 1".into()));
        }
        let t = &self.time;
        if !(t.t_end > 0.0)
            || !(t.cfl > 0.0)
            || !(t.visc_safety > 0.0)
            || !(t.c_ie > 0.0 && t.c_ie < 1.0)
        {
            return Err(Error::Config(
                "time: need t_end > 0, cfl > 0, visc_safety > 0 and 0 < c_ie < 1".into(),
            ));
        }
        if matches!(self.problem, ProblemConfig::ViscousShock { .. }) && self.gas.is_some() {
            return Err(Error::Config(
                "the viscous_shock problem defines its own gas; remove [gas]".into(),
            ));
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(k) = o.elements {
            match &mut self.mesh {
                MeshConfig::Box { elements, .. } => {
                    for n in elements.iter_mut().filter(|n| **n > 1) {
                        *n = k;
                    }
                    if elements.iter().all(|&n| n <= 1) {
                        elements[0] = k;
                    }
                }
                MeshConfig::Step { elements, .. } => *elements = k,
                MeshConfig::File { .. } => {}
            }
        }
        if let Some(p) = o.degree {
            self.degree = p;
        }
        if let Some(s) = o.seed {
            if let MeshConfig::Box { seed, .. } = &mut self.mesh {
                *seed = s;
            }
        }
        if let Some(t) = o.t_end {
            self.time.t_end = t;
        }
        if let Some(d) = &o.out_dir {
            self.output.dir = d.clone();
        }
        if let Some(f) = &o.formats {
            self.output.formats = f.clone();
        }
    }

    /// Elements along the first refined axis, used to label convergence levels.
    pub fn level(&self) -> usize {
        match &self.mesh {
            MeshConfig::Box { elements, .. } => *elements.iter().max().unwrap_or(&1),
            MeshConfig::Step { elements, .. } => *elements,
            MeshConfig::File { .. } => 0,
        }
    }

    pub fn build_mesh(&self) -> Result<HexMesh> {
        match &self.mesh {
            MeshConfig::Box {
                elements,
                bounds,
                periodic,
                perturbation,
                seed,
            } => {
                let m = build_box_mesh(*elements, *bounds, *periodic)?;
                perturb_mesh(&m, *perturbation, *seed)
            }
            MeshConfig::Step {
                elements,
                step_x,
                step_y,
                depth,
            } => build_step_mesh(*elements, *step_x, *step_y, *depth),
            MeshConfig::File { path } => load_mesh(path),
        }
    }

    pub fn gas(&self) -> Result<GasModel> {
        let gas = match self.problem {
            ProblemConfig::ViscousShock {
                mach,
                reynolds,
                prandtl,
                gamma,
                direction,
            } => ViscousShock::new(gamma, mach, reynolds, prandtl, direction)?.gas(),
            _ => {
                let g = self.gas.unwrap_or_default();
                GasModel::new(g.gamma, g.r_gas, g.prandtl, g.viscosity)?
            }
        };
        Ok(gas)
    }

    pub fn stepper(&self) -> StepperConfig {
        let t = &self.time;
        let s = &self.sensors;
        StepperConfig {
            cfl: t.cfl,
            visc_safety: t.visc_safety,
            c_ie: t.c_ie,
            artificial_viscosity: t.artificial_viscosity,
            sensors: SensorConfig {
                b: s.b,
                cn_star: s.cn_star,
                a: s.a,
                eps: s.eps,
            },
            limiter: LimiterConfig {
                enabled: t.limiter,
                max_iters: t.limiter_iterations,
            },
        }
    }

    pub fn build(&self) -> Result<Case> {
        let gas = self.gas()?;
        let ops = TensorOps::new(self.degree)?;
        let mesh = self.build_mesh()?;

        let (initial_fn, exact, default_kind): (Option<ExactFn>, Option<ExactFn>, BoundaryKind) =
            match &self.problem {
                ProblemConfig::ViscousShock {
                    mach,
                    reynolds,
                    prandtl,
                    gamma,
                    direction,
                } => {
                    let shock = ViscousShock::new(*gamma, *mach, *reynolds, *prandtl, *direction)?;
                    // Queries outside the solver's reach cannot occur for finite
                    // coordinates; fall back to the far-field state regardless.
                    let f: ExactFn = Arc::new(move |x: &Vec3, t: f64| {
                        shock
                            .exact(x, t)
                            .unwrap_or_else(|_| shock.state_at_ratio(1.0))
                    });
                    (Some(f.clone()), Some(f), BoundaryKind::Dirichlet)
                }
                ProblemConfig::Uniform { state } => {
                    let q = state.to_prim(&gas)?;
                    let f: ExactFn = Arc::new(move |_: &Vec3, _| q);
                    (Some(f.clone()), Some(f), BoundaryKind::Dirichlet)
                }
                ProblemConfig::Riemann {
                    left,
                    right,
                    normal,
                    position,
                } => {
                    let r = RiemannData {
                        left: left.to_prim(&gas)?,
                        right: right.to_prim(&gas)?,
                        normal: *normal,
                        position: *position,
                    };
                    (
                        Some(Arc::new(move |x: &Vec3, _| r.state(x))),
                        None,
                        BoundaryKind::Extrapolate,
                    )
                }
                ProblemConfig::Sod { position } => {
                    let r = RiemannData::sod(&gas, *position);
                    (
                        Some(Arc::new(move |x: &Vec3, _| r.state(x))),
                        None,
                        BoundaryKind::Extrapolate,
                    )
                }
                ProblemConfig::MovingShock {
                    mach,
                    rho,
                    pressure,
                    position,
                } => {
                    let r = RiemannData::moving_shock(&gas, *mach, *rho, *pressure, *position)?;
                    (
                        Some(Arc::new(move |x: &Vec3, _| r.state(x))),
                        None,
                        BoundaryKind::Extrapolate,
                    )
                }
                ProblemConfig::Field { .. } => (None, None, BoundaryKind::Extrapolate),
            };

        let mut names: BTreeMap<String, u32> = BTreeMap::new();
        for tag in mesh.boundary_tags() {
            names.insert(mesh.tag_name(tag), tag);
        }
        for key in self.boundary.keys() {
            if !names.contains_key(key) {
                let known: Vec<&str> = names.keys().map(String::as_str).collect();
                return Err(Error::Config(format!(
                    "boundary '{key}' does not exist on this mesh (boundaries: {})",
                    known.join(", ")
                )));
            }
        }
        let mut boundaries = BTreeMap::new();
        for (name, tag) in &names {
            let kind = self.boundary.get(name).copied().unwrap_or(default_kind);
            let bc = match kind {
                BoundaryKind::Symmetry => BoundaryCondition::Symmetry,
                BoundaryKind::Extrapolate => BoundaryCondition::Extrapolate,
                BoundaryKind::Dirichlet => match &initial_fn {
                    Some(f) => BoundaryCondition::Dirichlet(f.clone()),
                    None => {
                        return Err(Error::Config(format!(
                            "boundary '{name}': dirichlet needs a problem with a prescribed field"
                        )))
                    }
                },
            };
            boundaries.insert(*tag, bc);
        }

        let s = &self.scheme;
        let options = SchemeOptions {
            dissipation: s.dissipation,
            viscous: s.viscous,
            c_rho: s.c_rho,
            c_t: s.c_t,
        };
        let scheme = Scheme::new(gas, ops, mesh, boundaries, options)?;
        let initial = match (&self.problem, &initial_fn) {
            (ProblemConfig::Field { path }, _) => crate::output::read_field_csv(path, &scheme)?,
            (_, Some(f)) => scheme.project(|x| f(x, 0.0)),
            (_, None) => unreachable!("every analytic problem provides an initial field"),
        };
        scheme.view(&initial)?;
        Ok(Case {
            scheme,
            initial,
            exact,
            stepper: self.stepper(),
            t_end: self.time.t_end,
            max_steps: self.time.max_steps,
            output: self.output.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHOCK: &str = r#"
degree = 2
[mesh]
kind = "box"
elements = [2, 2, 2]
bounds = [[-0.5, 0.5], [-0.5, 0.5], [-0.5, 0.5]]
perturbation = 0.2
seed = 3
[problem]
kind = "viscous_shock"
[time]
t_end = 0.01
"#;

    #[test]
    fn parses_and_builds_viscous_shock() {
        let cfg = RunConfig::parse(SHOCK).unwrap();
        assert_eq!(cfg.degree, 2);
        let case = cfg.build().unwrap();
        assert_eq!(case.scheme.num_nodes(), 8 * 27);
        assert!(case.exact.is_some());
        assert!((case.scheme.gas.mu(1.0) - 0.02).abs() < 1e-15);
        assert!(case
            .scheme
            .boundaries
            .values()
            .all(|b| matches!(b, BoundaryCondition::Dirichlet(_))));
    }

    #[test]
    fn unknown_key_is_rejected_with_its_name() {
        let text = SHOCK.replace("t_end = 0.01", "t_end = 0.01\ntend = 3");
        let err = RunConfig::parse(&text).unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("tend"), "{err}");

        let text = SHOCK.replace(
            "kind = \"viscous_shock\"",
            "kind = \"viscous_shock\"\nmachh = 2",
        );
        assert!(RunConfig::parse(&text)
            .unwrap_err()
            .to_string()
            .contains("machh"));
    }

    #[test]
    fn overrides_refine_only_refined_axes() {
        let text = r#"
degree = 3
[mesh]
kind = "box"
elements = [16, 1, 1]
bounds = [[0.0, 1.0], [0.0, 0.1], [0.0, 0.1]]
periodic = [false, true, true]
[problem]
kind = "sod"
"#;
        let mut cfg = RunConfig::parse(text).unwrap();
        cfg.apply(&Overrides {
            elements: Some(32),
            degree: Some(2),
            ..Default::default()
        });
        assert_eq!(
            cfg.mesh,
            MeshConfig::Box {
                elements: [32, 1, 1],
                bounds: [[0.0, 1.0], [0.0, 0.1], [0.0, 0.1]],
                periodic: [false, true, true],
                perturbation: 0.0,
                seed: 0,
            }
        );
        assert_eq!(cfg.degree, 2);
        let case = cfg.build().unwrap();
        assert!(case.exact.is_none());
    }

    #[test]
    fn bad_boundary_name_and_gas_conflict() {
        let text = format!("{SHOCK}\n[boundary]\nleft = \"symmetry\"\n");
        let err = RunConfig::parse(&text).unwrap().build().err().unwrap();
        assert!(err.to_string().contains("left"));
        let text = format!("{SHOCK}\n[gas]\ngamma = 1.3\n");
        assert!(RunConfig::parse(&text).unwrap_err().is_config());
    }

    #[test]
    fn moving_shock_on_step_mesh() {
        let text = r#"
degree = 2
[mesh]
kind = "step"
elements = 4
step_x = 0.5
step_y = 0.5
[problem]
kind = "moving_shock"
mach = 20.0
[boundary]
xmin = "dirichlet"
wall = "symmetry"
ymin = "symmetry"
"#;
        let case = RunConfig::parse(text).unwrap().build().unwrap();
        assert_eq!(case.scheme.num_elements(), 12);
        assert!(matches!(
            case.scheme.boundaries[&7],
            BoundaryCondition::Symmetry
        ));
    }
}
