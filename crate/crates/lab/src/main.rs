use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use ibwave_core::analysis::{
    energy, energy_rate_check, error_state, residual_tilde, split_initial_data, EnergyRow,
    EnergySample,
};
use ibwave_core::solvers::snapshot::{
    load_ib_trajectory, load_model_trajectory, write_ib_trajectory, write_model_trajectory,
};
use ibwave_core::solvers::{
    ib_solve_with_velocity, model_solve, model_time_derivative, ModelFamily,
};
use ibwave_core::spectral::spectral_derivative;
use ibwave_lab::checks::{evaluate, residual_identity, CheckOutcome};
use ibwave_lab::config::{DataCase, ExperimentConfig, StudyKind};
use ibwave_lab::report::{emit_report, load_stored};
use ibwave_lab::study::{enumerate_runs, grid, initial_data, run_study, step_controls};
use ibwave_lab::verify::verify_suite;

#[derive(Parser)]
#[command(
    name = "ibwave",
    version,
    about = "Decoupling and residual studies for the improved Boussinesq equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Study configuration (flat dotted-key TOML); defaults to the built-in benchmark.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweep points.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for the random-ensemble property suites.
    #[arg(long, global = true, default_value_t = 20240601)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Solve IB and both model equations for every run, exporting snapshots.
    Solve,
    /// Residual study with rate fits.
    Residual,
    /// Decoupling study with rate fits and energy checks.
    Decouple,
    /// Energy and energy-rate check on snapshots written by `solve`.
    Energy,
    /// Re-emit the report from stored records.
    Report,
    /// Seeded operator and solver property suites.
    Verify,
}

fn load_config(cli: &Cli, default: StudyKind) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::benchmark(default),
    };
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn workers(cli: &Cli) -> usize {
    cli.workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn print_checks(checks: &[CheckOutcome]) -> bool {
    for c in checks {
        println!("{}", c.line());
    }
    checks.iter().all(|c| c.passed)
}

fn study(cli: &Cli, kind: StudyKind) -> Result<bool> {
    let cfg = load_config(cli, kind)?;
    if cfg.study.kind != kind {
        bail!("config describes a {} study", cfg.study.kind.name());
    }
    let records = run_study(&cfg, workers(cli))?;
    let identity = match kind {
        StudyKind::Residual => residual_identity(&cfg)?,
        StudyKind::Decouple => None,
    };
    let checks = evaluate(&records, identity);
    let files = emit_report(Some(&cfg), &records, &checks, &cfg.output.dir)?;
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(print_checks(&checks))
}

fn stem(dir: &Path, index: usize, part: &str) -> PathBuf {
    dir.join(format!("run{index:03}_{part}"))
}

fn solve(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli, StudyKind::Decouple)?;
    let dir = cfg.output.dir.join("snapshots");
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let grid = grid(&cfg)?;
    for spec in enumerate_runs(&cfg) {
        let params = cfg.params(spec.point, spec.s)?;
        let (u0, v0) = initial_data(&cfg, &grid, spec.case);
        let (w0p, w0m) = split_initial_data(&u0, &v0)?;
        let (ib_ctrl, ctrl) = step_controls(&cfg, &grid, &params, spec.family)?;
        let wp = model_solve(&w0p, params, ModelFamily::right(spec.family), &ctrl)?;
        let wm = model_solve(&w0m, params, ModelFamily::left(spec.family), &ctrl)?;
        let u1 = match spec.case {
            DataCase::Prepared => &model_time_derivative(&wp[0])? + &model_time_derivative(&wm[0])?,
            _ => spectral_derivative(&v0, 1)?,
        };
        let ib = ib_solve_with_velocity(&u0, &u1, params, &ib_ctrl)?;
        write_ib_trajectory(&stem(&dir, spec.index, "ib"), &ib, &ib_ctrl)?;
        write_model_trajectory(&stem(&dir, spec.index, "wp"), &wp, &ctrl)?;
        write_model_trajectory(&stem(&dir, spec.index, "wm"), &wm, &ctrl)?;
        eprintln!(
            "run {}: {} {} eps={} delta={} s={} -> {} snapshots",
            spec.index,
            spec.family,
            spec.case.name(),
            spec.point.epsilon,
            spec.point.delta,
            spec.s,
            ib.len()
        );
    }
    Ok(true)
}

fn energy_cmd(cli: &Cli) -> Result<bool> {
    let dir = out_dir(cli).join("snapshots");
    let mut index = 0;
    let mut rows = Vec::new();
    let mut ok = true;
    loop {
        let ib_stem = stem(&dir, index, "ib");
        if !ib_stem.with_extension("json").exists() {
            break;
        }
        let (_, ib) = load_ib_trajectory(&ib_stem)?;
        let (_, wp) = load_model_trajectory(&stem(&dir, index, "wp"))?;
        let (_, wm) = load_model_trajectory(&stem(&dir, index, "wm"))?;
        let mut samples = Vec::new();
        for ((u, a), b) in ib.iter().zip(&wp).zip(&wm) {
            let es = error_state(u, a, b)?;
            let rep = residual_tilde(a, b)?;
            let e = energy(&es, &(&a.w + &b.w))?;
            rows.push(EnergyRow::new(a.family.kind.to_string(), &es, &e));
            samples.push(EnergySample::new(&es, &e, &rep));
        }
        match energy_rate_check(&samples) {
            Ok(rep) => println!(
                "run {index}: energy-rate C = {:.4e}, sup ||F~|| = {:.4e}",
                rep.constant, rep.sup_f_tilde
            ),
            Err(e) => {
                ok = false;
                println!("run {index}: {e}");
            }
        }
        index += 1;
    }
    if index == 0 {
        bail!(
            "no snapshots under {} (run `ibwave solve` first)",
            dir.display()
        );
    }
    let path = out_dir(cli).join("energy.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&rows)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(ok)
}

fn report(cli: &Cli) -> Result<bool> {
    let dir = out_dir(cli);
    let stored = load_stored(&dir)?;
    emit_report(
        stored.config.as_ref(),
        &stored.records,
        &stored.checks,
        &dir,
    )?;
    Ok(print_checks(&stored.checks))
}

fn verify(cli: &Cli) -> Result<bool> {
    let checks = verify_suite(cli.seed)?;
    let dir = out_dir(cli);
    emit_report(None, &[], &checks, &dir)?;
    Ok(print_checks(&checks))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve => solve(&cli),
        Command::Residual => study(&cli, StudyKind::Residual),
        Command::Decouple => study(&cli, StudyKind::Decouple),
        Command::Energy => energy_cmd(&cli),
        Command::Report => report(&cli),
        Command::Verify => verify(&cli),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
