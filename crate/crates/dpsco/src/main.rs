use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dpsco::build::Components;
use dpsco::core::problems::{gaussian_width_mc, ConstraintSet};
use dpsco::error::{HarnessError, HarnessResult};
use dpsco::harness::stream;
use dpsco::mechcheck::{self, Check};
use dpsco::slope::{fit_slope, summarize, GroupKey};
use dpsco::stats::expected_max_abs_gaussian;
use dpsco::{data_io, read_records, run_experiment, write_records, ExperimentConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

#[derive(Parser)]
#[command(name = "dpsco", version, about = "Private stochastic convex optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SetKind {
    L1,
    L2,
    Lp,
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    Gg,
    Gauss,
    Compose,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid and write one CSV row per trial.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit log(mean excess risk) against log n per group.
    Slope {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "algo,eps,d")]
        group: String,
        /// Also print the per-cell means.
        #[arg(long)]
        cells: bool,
    },
    /// Monte Carlo Gaussian width of a norm ball.
    Width {
        #[arg(long)]
        set: SetKind,
        /// Norm index, required for `--set lp`.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, env = "DPSCO_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Sampler statistics and calibration tables.
    MechCheck {
        #[arg(long)]
        what: What,
        #[arg(long, default_value_t = 100_000)]
        draws: usize,
        #[arg(long, env = "DPSCO_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Draw a dataset from a config's distribution and write it as CSV.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, env = "DPSCO_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn create(path: &PathBuf) -> HarnessResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::Config(format!("cannot create {}: {e}", path.display())))
}

fn run(cli: Cli) -> HarnessResult<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Run { config, out: path } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            cfg.apply_seed_env()?;
            let records = run_experiment(&cfg)?;
            let mut w = create(&path)?;
            write_records(&mut w, &records)?;
            w.flush()?;
            let refused = records.iter().filter(|r| r.refused).count();
            writeln!(out, "wrote {} records ({refused} refused) to {}", records.len(), path.display())?;
        }
        Command::Slope { input, group, cells } => {
            let keys = GroupKey::parse_list(&group)?;
            let file = File::open(&input)
                .map_err(|e| HarnessError::Config(format!("cannot open {}: {e}", input.display())))?;
            let records = read_records(file)?;
            if cells {
                writeln!(out, "group,n,mean,se,count,refused")?;
                for c in summarize(&records, &keys) {
                    writeln!(out, "{},{},{},{},{},{}", c.group, c.n, c.mean, c.std_error, c.count, c.refused)?;
                }
            }
            writeln!(out, "group,slope,intercept,r2,points")?;
            for f in fit_slope(&records, &keys)? {
                for w in &f.warnings {
                    eprintln!("warning [{}]: {w}", f.group);
                }
                writeln!(out, "{},{},{},{},{}", f.group, f.slope, f.intercept, f.r2, f.points)?;
            }
        }
        Command::Width { set, p, d, radius, samples, seed } => {
            let a = match (set, p) {
                (SetKind::L1, _) => 1.0,
                (SetKind::L2, _) => 2.0,
                (SetKind::Lp, Some(p)) => p,
                (SetKind::Lp, None) => return Err(HarnessError::Config("--set lp needs --p".into())),
            };
            let c = ConstraintSet::ball(a, radius, d)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (est, se) = gaussian_width_mc(&c, samples, &mut rng)?;
            writeln!(out, "estimate {est:.6} std_error {se:.6} samples {samples}")?;
            // closed forms: E||xi||_2 and E||xi||_inf
            let exact = if a == 2.0 {
                Some(radius * 2f64.sqrt() * (ln_gamma((d as f64 + 1.0) / 2.0) - ln_gamma(d as f64 / 2.0)).exp())
            } else if a == 1.0 {
                Some(radius * expected_max_abs_gaussian(d))
            } else {
                None
            };
            if let Some(x) = exact {
                writeln!(out, "exact {x:.6} z {:.3}", (est - x) / se)?;
            }
        }
        Command::MechCheck { what, draws, seed } => {
            let check = match what {
                What::Gg => Check::Gg,
                What::Gauss => Check::Gauss,
                What::Compose => Check::Compose,
            };
            write!(out, "{}", mechcheck::report(check, draws, seed)?)?;
        }
        Command::Sample { config, n, seed, out: path } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let comp = Components::build(&cfg)?;
            let data = comp.dist.sample(n, &mut stream(seed, 0))?;
            let mut w = create(&path)?;
            data_io::write_dataset(&mut w, &data)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
