mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::Rng;
use vortexlab_core::bundle::{build_background, curvature, BundleData, Gauge1Form, Section};
use vortexlab_core::fields::{e_energy, energy_density, g_energy};
use vortexlab_core::hodge::{hodge_decompose, residual, solve_london, solve_poisson};
use vortexlab_core::io::{write_bundle, write_cochain, write_section, write_vorticity};
use vortexlab_core::lattice::{inner_product, Cochain, TorusGeometry};
use vortexlab_core::seeded_rng;
use vortexlab_core::selftest::run_selftest;
use vortexlab_core::solve::{
    default_initial, epsilon_sweep, minimize_observed, vortex_ansatz, MinimizerResult, SolveError, SweepInit,
    SweepLattice,
};
use vortexlab_core::vortex::{vortex_mass, vorticity};

use crate::config::{LatticePolicy, RunConfig};

#[derive(Parser)]
#[command(name = "vortexlab", version, about = "Gauged Ginzburg-Landau vortices on flat tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for the numerical kernels (default: RAYON_NUM_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the energy at the first configured epsilon.
    Minimize(RunArgs),
    /// Minimize along the configured epsilon list and write a table.
    Sweep(RunArgs),
    /// Run the invariant suite on small lattices.
    Selftest,
    /// Report Hodge decomposition and solver residuals.
    HodgeTest {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write the vortex ansatz for the configured bundle without minimizing.
    Ansatz(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (overrides the configuration).
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn load(&self) -> Result<(RunConfig, PathBuf)> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        let out = self.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
        fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
        // the configuration actually used, overrides included
        write(&out, "config.toml", &cfg.to_toml())?;
        Ok((cfg, out))
    }
}

/// Exit status of a command that ran to completion.
enum Status {
    Ok,
    NotConverged,
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn initial_fields(cfg: &RunConfig, b: &BundleData, eps: f64) -> Result<(Section, Gauge1Form)> {
    Ok(match cfg.ansatz_spec() {
        Some(spec) => vortex_ansatz(&spec, b, eps)?,
        None => default_initial(b, eps, cfg.seed)?,
    })
}

fn summary(r: &MinimizerResult, b: &BundleData) -> Result<String> {
    let mut out = r.energy.to_record();
    let g = b.geometry();
    writeln!(out, "G_over_log_eps = {:.16e}", r.energy.total / r.energy.epsilon.ln().abs())?;
    writeln!(out, "grad_norm = {:.16e}", r.grad_norm)?;
    writeln!(out, "london_residual = {:.16e}", r.london_residual)?;
    writeln!(out, "iterations = {}", r.iterations)?;
    writeln!(out, "converged = {}", r.converged)?;
    if let Ok(v) = vorticity(&r.section, &r.gauge_field, b) {
        writeln!(out, "vortex_mass = {:.16e}", vortex_mass(&v, g))?;
        writeln!(out, "vortex_count = {}", v.support().len())?;
    }
    Ok(out)
}

fn write_fields(dir: &Path, u: &Section, a: &Gauge1Form, b: &BundleData, eps: f64) -> Result<()> {
    write(dir, "section.dump", &write_section(u))?;
    write(dir, "gauge.dump", &write_cochain(a.as_cochain()))?;
    write(dir, "curvature.dump", &write_cochain(&curvature(a, b)?))?;
    write(dir, "density.dump", &write_cochain(&energy_density(u, a, b, eps)?))?;
    write(dir, "bundle.txt", &write_bundle(b))?;
    match vorticity(u, a, b) {
        Ok(v) => write(dir, "vorticity.txt", &write_vorticity(&v))?,
        Err(e) => eprintln!("warning: vorticity not written: {e}"),
    }
    Ok(())
}

fn cmd_minimize(args: &RunArgs) -> Result<Status> {
    let (cfg, out) = args.load()?;
    let geom = cfg.geometry()?;
    let b = build_background(&geom, &cfg.bundle.chern)?;
    let eps = cfg.epsilon[0];
    if cfg.epsilon.len() > 1 {
        eprintln!("note: minimize uses the first epsilon ({eps}); run `sweep` for the whole list");
    }
    let (u, a) = initial_fields(&cfg, &b, eps)?;
    let opts = cfg.minimize_options();
    let outcome = minimize_observed(&u, &a, &b, eps, &opts, |rec| {
        eprintln!(
            "iter {:>7}  G {:.16e}  kinetic {:.6e}  potential {:.6e}  curvature {:.6e}  grad {:.3e}",
            rec.iteration,
            rec.energy.total,
            rec.energy.kinetic,
            rec.energy.potential,
            rec.energy.curvature,
            rec.grad_norm
        );
    });
    let (result, status) = match outcome {
        Ok(r) => (r, Status::Ok),
        Err(SolveError::MaxIterations { best }) | Err(SolveError::Stalled { best }) => (*best, Status::NotConverged),
        Err(e) => return Err(e.into()),
    };
    let text = summary(&result, &b)?;
    write(&out, "summary.txt", &text)?;
    print!("{text}");
    write_fields(&out, &result.section, &result.gauge_field, &b, eps)?;
    Ok(status)
}

fn cmd_sweep(args: &RunArgs) -> Result<Status> {
    let (cfg, out) = args.load()?;
    if cfg.epsilon.len() < 2 {
        bail!("a sweep needs at least two epsilon values");
    }
    let lattice = match &cfg.sweep {
        Some(s) if s.lattice == LatticePolicy::Scaled => {
            SweepLattice::Scaled { lengths: cfg.geometry.lengths.clone(), ratio: s.ratio.unwrap_or(0.25) }
        }
        _ => SweepLattice::Fixed(cfg.geometry()?),
    };
    let init = match cfg.ansatz_spec() {
        Some(spec) => SweepInit::Ansatz(spec),
        None => SweepInit::Default { seed: cfg.seed },
    };
    let (table, _) = epsilon_sweep(&cfg.bundle.chern, &lattice, &init, &cfg.epsilon, &cfg.minimize_options())?;
    let csv = table.to_csv();
    write(&out, "sweep.csv", &csv)?;
    print!("{csv}");
    Ok(if table.all_converged() { Status::Ok } else { Status::NotConverged })
}

fn cmd_selftest() -> Result<Status> {
    let checks = run_selftest();
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {} failed", checks.len(), failed);
    if failed > 0 {
        bail!("{failed} invariant(s) failed");
    }
    Ok(Status::Ok)
}

fn cmd_hodge_test(config: Option<&Path>, seed: Option<u64>) -> Result<Status> {
    let (geoms, seed) = match config {
        Some(p) => {
            let cfg = RunConfig::load(p)?;
            (vec![cfg.geometry()?], seed.unwrap_or(cfg.seed))
        }
        None => (vec![TorusGeometry::uniform(2, 32, 1.0)?, TorusGeometry::uniform(3, 8, 1.0)?], seed.unwrap_or(0)),
    };
    let mut rng = seeded_rng(seed);
    let mut worst = 0.0f64;
    println!("dim,degree,reconstruction,orthogonality,london_residual,poisson_residual");
    for g in &geoms {
        for k in 0..=g.dim() {
            let (mut rec, mut orth, mut lon, mut poi) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
            for _ in 0..20 {
                let w = Cochain::from_fn(g, k, |_, _| rng.gen_range(-1.0..1.0))?;
                let parts = hodge_decompose(&w);
                let (ex, co, h) = (parts.exact_part(), parts.coexact_part(), parts.harmonic.clone());
                rec = rec.max((&(&(&ex + &co) + &h) - &w).max_abs());
                let n2 = w.norm().powi(2);
                for (x, y) in [(&ex, &co), (&ex, &h), (&co, &h)] {
                    orth = orth.max(inner_product(x, y)?.abs() / n2);
                }
                lon = lon.max(residual(&solve_london(&w), &w, 1.0));
                let f = &w - &h;
                poi = poi.max(residual(&solve_poisson(&f)?, &f, 0.0));
            }
            println!("{},{k},{rec:.3e},{orth:.3e},{lon:.3e},{poi:.3e}", g.dim());
            worst = worst.max(rec).max(orth).max(lon).max(poi);
        }
    }
    if worst > 1e-10 {
        bail!("Hodge residual {worst:e} exceeds 1e-10");
    }
    Ok(Status::Ok)
}

fn cmd_ansatz(args: &RunArgs) -> Result<Status> {
    let (cfg, out) = args.load()?;
    let geom = cfg.geometry()?;
    let b = build_background(&geom, &cfg.bundle.chern)?;
    let eps = cfg.epsilon[0];
    let (u, a) = initial_fields(&cfg, &b, eps)?;
    let reduced = e_energy(&u, &b, eps)?;
    let full = g_energy(&u, &a, &b, eps)?;
    let mut text = full.to_record();
    writeln!(text, "E_eps = {:.16e}", reduced.total)?;
    writeln!(text, "E_over_log_eps = {:.16e}", reduced.total / eps.ln().abs())?;
    if let Ok(v) = vorticity(&u, &a, &b) {
        writeln!(text, "vortex_mass = {:.16e}", vortex_mass(&v, &geom))?;
        writeln!(text, "vortex_count = {}", v.support().len())?;
    }
    write(&out, "summary.txt", &text)?;
    print!("{text}");
    write_fields(&out, &u, &a, &b, eps)?;
    Ok(Status::Ok)
}

fn run(cli: &Cli) -> Result<Status> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("cannot configure threads")?;
    }
    match &cli.command {
        Command::Minimize(a) => cmd_minimize(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Selftest => cmd_selftest(),
        Command::HodgeTest { config, seed } => cmd_hodge_test(config.as_deref(), *seed),
        Command::Ansatz(a) => cmd_ansatz(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::NotConverged) => {
            eprintln!("warning: minimization did not converge");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
