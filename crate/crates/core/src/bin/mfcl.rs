use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use mfcl::experiments::{run_sample, verify_suite, Orchestrator, RunManifest, FIGURE_EPSILONS};
use mfcl::model::ExperimentConfig;
use mfcl::{Error, Result};

/// Stochastic mean-field conservation laws: solvers, particle flows and
/// verification runs.
#[derive(Debug, Parser)]
#[command(name = "mfcl", version)]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for the Brownian paths.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated noise levels.
    #[arg(long, global = true, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Start from the full-scale parameters instead of the desk-scale ones.
    #[arg(long, global = true)]
    full: bool,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; changes speed only.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the viscous equation and dump m.
    Pde,
    /// Dump the X and Y particle trajectories of sample 0.
    Flow,
    /// Dump u and v of sample 0.
    Push,
    /// Zero-noise sweep over the noise levels.
    Sweep,
    /// Emit the data bundle of figure N (1 to 5).
    Figure { n: u32 },
    /// Run the analytic diagnostics; exits with 2 if any fails.
    Verify,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let base = if cli.full {
        ExperimentConfig::default()
    } else {
        ExperimentConfig::desk()
    };
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            ExperimentConfig::parse_with_base(&text, base)?
        }
        None => base,
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn tag(eps: f64) -> String {
    format!("eps{:04}", (eps * 1000.0).round() as i64)
}

fn write(path: &Path, body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<PathBuf> {
    let mut buf = Vec::new();
    body(&mut buf).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli)?;
    let orch = Orchestrator::new(cli.threads)?;
    let out = &cli.out;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let start = Instant::now();
    let single = cli.eps.clone().unwrap_or_else(|| vec![cfg.epsilon]);
    let mut manifest = RunManifest::new(format!("{:?}", cli.command).to_lowercase(), &cfg);
    let mut flagged = Vec::new();

    match &cli.command {
        Command::Pde => {
            for &eps in &single {
                let setup = orch.prepare(&ExperimentConfig { epsilon: eps, ..cfg.clone() })?;
                let stride = setup.field.n_times().div_ceil(100);
                let field = setup.field.thinned(stride);
                let path = write(&out.join(format!("m_{}.csv", tag(eps))), |w| field.write_csv(w))?;
                manifest.add("pde_field", &tag(eps), path);
                flagged.push(eps);
            }
        }
        Command::Flow | Command::Push => {
            for &eps in &single {
                let setup = orch.prepare(&ExperimentConfig { epsilon: eps, ..cfg.clone() })?;
                let run = run_sample(&setup, 0)?;
                let t = tag(eps);
                if matches!(cli.command, Command::Flow) {
                    let path = write(&out.join(format!("flow_x_{t}.csv")), |w| run.flow_x.write_csv(w, 1))?;
                    manifest.add("flow_paths", &format!("x_{t}"), path);
                    let path = write(&out.join(format!("flow_y_{t}.csv")), |w| run.flow_y.write_csv(w, 1))?;
                    manifest.add("flow_paths", &format!("y_{t}"), path);
                } else {
                    let path = write(&out.join(format!("density_{t}.csv")), |w| {
                        for (j, d) in run.densities.iter().enumerate() {
                            d.write_carriers_csv(&mut *w, j == 0)?;
                        }
                        Ok(())
                    })?;
                    manifest.add("density", &format!("u_{t}"), path);
                    let times = run.flow_y.times().to_vec();
                    let path = write(&out.join(format!("composition_{t}.csv")), |w| {
                        use std::io::Write;
                        writeln!(w, "t,x,v_eps")?;
                        for (time, row) in times.iter().zip(&run.compositions) {
                            for (x, v) in setup.grid.nodes().iter().zip(row) {
                                writeln!(w, "{time},{x},{v}")?;
                            }
                        }
                        Ok(())
                    })?;
                    manifest.add("density", &format!("v_{t}"), path);
                }
                flagged.push(eps);
            }
        }
        Command::Sweep => {
            let epsilons = cli.eps.clone().unwrap_or_else(|| cfg.epsilons.clone());
            let report = orch.run_zero_noise_sweep(&cfg, &epsilons)?;
            let path = write(&out.join("report.csv"), |w| report.write_csv(w))?;
            manifest.add("report", "sweep", path);
            let path = write(&out.join("paths.csv"), |w| report.write_paths_csv(w))?;
            manifest.add("report", "paths", path);
            print!("{}", report.summary());
            flagged = epsilons;
        }
        Command::Figure { n } => {
            let epsilons = cli.eps.clone().unwrap_or_else(|| FIGURE_EPSILONS.to_vec());
            let dir = out.join(format!("fig{n}"));
            let m = orch.run_figure(*n, &cfg, &epsilons, &dir)?;
            println!("figure {n}: {} files in {}", m.outputs.len(), dir.display());
            return Ok(true);
        }
        Command::Verify => {
            let mut all = true;
            for &eps in &single {
                let dir = out.join(tag(eps));
                std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                let report = verify_suite(&ExperimentConfig { epsilon: eps, ..cfg.clone() }, Some(&dir))?;
                println!("epsilon = {eps}");
                print!("{}", report.lines());
                all &= report.passed();
                manifest.add("report", &format!("verify_{}", tag(eps)), dir.join("verify.txt"));
            }
            manifest.wall_time = start.elapsed();
            manifest.write(out)?;
            return Ok(all);
        }
    }

    manifest.extra_epsilons = flagged
        .into_iter()
        .filter(|e| !FIGURE_EPSILONS.iter().any(|p| (p - e).abs() < 1e-12))
        .collect();
    manifest.note("pde_solves", orch.pde_solves());
    manifest.wall_time = start.elapsed();
    manifest.write(out)?;
    eprintln!("wall time {:.2} s", manifest.wall_time.as_secs_f64());
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
