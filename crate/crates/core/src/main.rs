use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use ppes::analysis::{convergence_study, run_case};
use ppes::checks;
use ppes::config::{FieldFormat, Overrides, RunConfig};
use ppes::mesh::write_mesh;
use ppes::output::{mesh_vtk_string, write_field_csv, write_vtk, StepLog};
use ppes::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ppes",
    version,
    about = "Positivity-preserving entropy stable finite-volume solver on LGL grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single simulation.
    Run(CommonArgs),
    /// Grid convergence study against the exact solution.
    Converge(CommonArgs),
    /// Execute the invariant suites and print pass/fail lines.
    Check(CheckArgs),
    /// Generate (and perturb) the mesh of a configuration and export it.
    Mesh(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    /// Elements per refined axis; a comma-separated list for `converge`.
    #[arg(long = "K", value_delimiter = ',')]
    elements: Vec<usize>,
    /// Polynomial degree.
    #[arg(long)]
    p: Option<usize>,
    /// Mesh perturbation seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Output formats, comma separated: vtk, csv.
    #[arg(long, value_delimiter = ',')]
    format: Vec<String>,
}

#[derive(Args)]
struct CheckArgs {
    /// Smaller samples and grids.
    #[arg(long)]
    quick: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn load(args: &CommonArgs, single_level: bool) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&args.config)?;
    let formats = if args.format.is_empty() {
        None
    } else {
        Some(
            args.format
                .iter()
                .map(|f| f.parse())
                .collect::<Result<Vec<FieldFormat>>>()?,
        )
    };
    if single_level && args.elements.len() > 1 {
        return Err(Error::Config("--K takes a single value here".into()));
    }
    cfg.apply(&Overrides {
        elements: if single_level {
            args.elements.first().copied()
        } else {
            None
        },
        degree: args.p,
        seed: args.seed,
        t_end: args.t_end,
        out_dir: args.out_dir.clone(),
        formats,
    });
    Ok(cfg)
}

fn write_fields(
    dir: &Path,
    stem: &str,
    formats: &[FieldFormat],
    scheme: &ppes::scheme::Scheme,
    u: &[[f64; 5]],
    mu: &[f64],
) -> Result<()> {
    for f in formats {
        match f {
            FieldFormat::Vtk => write_vtk(&dir.join(format!("{stem}.vtk")), scheme, u, mu)?,
            FieldFormat::Csv => write_field_csv(&dir.join(format!("{stem}.csv")), scheme, u, mu)?,
        }
    }
    Ok(())
}

fn run(args: &CommonArgs) -> Result<()> {
    let cfg = load(args, true)?;
    let case = cfg.build()?;
    let out = &case.output;
    let dir = out.dir.clone();
    eprintln!(
        "elements {}, degree {}, nodes {}, t_end {:e}",
        case.scheme.num_elements(),
        cfg.degree,
        case.scheme.num_nodes(),
        case.t_end
    );
    let mut log = if out.step_log {
        Some(StepLog::create(&dir.join("steps.csv"))?)
    } else {
        None
    };
    let start = Instant::now();
    let summary = run_case(&case, |rec, u, visc| {
        if let Some(l) = log.as_mut() {
            l.record(rec)?;
        }
        if out.every > 0 && rec.step % out.every == 0 {
            write_fields(
                &dir,
                &format!("field_{:06}", rec.step),
                &out.formats,
                &case.scheme,
                u,
                &visc.nodal,
            )?;
        }
        if rec.step % 500 == 0 {
            eprintln!(
                "step {:>7}  t = {:.6e}  tau = {:.3e} ({})",
                rec.step,
                rec.t,
                rec.tau,
                rec.bound.name()
            );
        }
        Ok(())
    })?;
    if let Some(l) = log {
        l.finish()?;
    }
    write_fields(
        &dir,
        "field_final",
        &out.formats,
        &case.scheme,
        &summary.u,
        &summary.viscosity.nodal,
    )?;
    let mut line = format!(
        "t = {:.6e} steps = {} min_rho = {:.6e} min_T = {:.6e} wall = {:.1}s",
        summary.t,
        summary.steps,
        summary.min_rho,
        summary.min_temp,
        start.elapsed().as_secs_f64()
    );
    if let Some(e) = summary.errors {
        line.push_str(&format!(" L2 = {:.6e} Linf = {:.6e}", e.l2, e.linf));
    }
    println!("{line}");
    Ok(())
}

fn converge(args: &CommonArgs) -> Result<()> {
    let cfg = load(args, false)?;
    let levels = if args.elements.is_empty() {
        vec![cfg.level()]
    } else {
        args.elements.clone()
    };
    let start = Instant::now();
    let report = convergence_study(&cfg, &levels, |row| {
        eprintln!(
            "K = {:>3}: L2 = {:.4e}  Linf = {:.4e}  ({} steps, {:.1}s elapsed)",
            row.elements,
            row.norms.l2,
            row.norms.linf,
            row.steps,
            start.elapsed().as_secs_f64()
        );
    })?;
    print!("{}", report.table());
    let path = cfg.output.dir.join("convergence.csv");
    std::fs::create_dir_all(&cfg.output.dir).map_err(|e| Error::io(&cfg.output.dir, e))?;
    std::fs::write(&path, report.csv()).map_err(|e| Error::io(&path, e))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn mesh(args: &CommonArgs) -> Result<()> {
    let cfg = load(args, true)?;
    let mesh = cfg.build_mesh()?;
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let text_path = dir.join("mesh.txt");
    std::fs::write(&text_path, write_mesh(&mesh)).map_err(|e| Error::io(&text_path, e))?;
    let vtk_path = dir.join("mesh.vtk");
    std::fs::write(&vtk_path, mesh_vtk_string(&mesh)).map_err(|e| Error::io(&vtk_path, e))?;
    println!(
        "{} elements, {} vertices, boundaries: {}; wrote {} and {}",
        mesh.num_elements(),
        mesh.num_vertices(),
        mesh.boundary_tags()
            .iter()
            .map(|t| mesh.tag_name(*t))
            .collect::<Vec<_>>()
            .join(", "),
        text_path.display(),
        vtk_path.display()
    );
    Ok(())
}

/// Returns true when every suite passes.
fn check(args: &CheckArgs) -> Result<bool> {
    let mut all = true;
    let mut line = |name: &str, passed: bool, detail: String| {
        println!(
            "[{}] {name}: {detail}",
            if passed { "PASS" } else { "FAIL" }
        );
        all &= passed;
    };
    let (pairs, limiter_elems, fs_steps) = if args.quick {
        (10_000, 200, 10)
    } else {
        (100_000, 1000, 100)
    };

    let fs = checks::freestream(3, 4, 0.4, args.seed, fs_steps)?;
    line(
        "freestream",
        fs.rhs_max < 1e-12 && fs.drift_max < 1e-12,
        format!(
            "max|RHS| = {:.2e} (max|RHS/J| = {:.2e}), drift after {} steps = {:.2e}",
            fs.rhs_max, fs.rate_max, fs.steps, fs.drift_max
        ),
    );
    let gcl = checks::gcl_max()?;
    line(
        "metric identities",
        gcl < 1e-12,
        format!("max residual = {gcl:.2e}"),
    );
    let en = checks::entropy_rates(3, 3, args.seed)?;
    line(
        "entropy",
        en.ec_rate.abs() < 1e-10 * en.scale && en.full_rate <= 1e-12 * en.scale,
        format!(
            "EC dS/dt = {:.2e}, full dS/dt = {:.2e}, scale = {:.2e}",
            en.ec_rate, en.full_rate, en.scale
        ),
    );
    let tp = checks::two_point_suite(pairs, args.seed);
    line(
        "two-point algebra",
        tp.tadmor_chandrashekar < 1e-10
            && tp.tadmor_ismail_roe < 1e-10
            && tp.nu_w < 1e-10
            && tp.brenner_min_pivot > 0.0
            && tp.brenner_closed_form < 1e-10
            && tp.brenner_symmetry < 1e-10
            && tp.mr_min_eigenvalue > -1e-10
            && tp.mr_symmetry < 1e-10
            && tp.mr_density_row < 1e-10,
        format!("{tp:?}"),
    );
    let (ie_err, ie_n) =
        checks::internal_energy_oracle(if args.quick { 500 } else { 5000 }, args.seed);
    line(
        "internal-energy step bound",
        ie_err < 1e-10,
        format!("{ie_n} nodes, max rel. error {ie_err:.2e}"),
    );
    for (name, cfg) in checks::strong_shock_configs(1) {
        let r = checks::run_for_admissibility(&name, &cfg);
        line(
            &format!("positivity: {name}"),
            r.admissible(),
            format!(
                "{} steps to t = {:.3e}, min rho = {:.3e}, min T = {:.3e}{}",
                r.steps,
                r.t,
                r.min_rho,
                r.min_temp,
                r.failure
                    .map(|f| format!(", failed: {f}"))
                    .unwrap_or_default()
            ),
        );
    }
    let lim = checks::limiter_suite(limiter_elems, args.seed);
    line(
        "limiters",
        lim.density_untouched
            && lim.conservation <= 1e-13
            && lim.pointwise_entropy_increase <= 1e-13
            && lim.element_entropy_increase <= 1e-13
            && lim.min_strength > 0.0
            && lim.unresolved == 0
            && (0.8..=1.2).contains(&lim.consistency_slope),
        format!("{lim:?}"),
    );
    Ok(all)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a).map(|_| true),
        Command::Converge(a) => converge(a).map(|_| true),
        Command::Mesh(a) => mesh(a).map(|_| true),
        Command::Check(a) => check(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
