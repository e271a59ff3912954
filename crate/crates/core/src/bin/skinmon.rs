use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use skinmon::compare::{compare_schemes, RunManifest};
use skinmon::engine::milestone_rounds;
use skinmon::metrics::fmt_f64;
use skinmon::output::{load_config, render_rounds, run_to_dir, RunOverrides};
use skinmon::{Error, Scheme, SimConfig};

/// Skin-monitoring sensor network simulator.
#[derive(Parser)]
#[command(name = "skinmon", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write metrics.csv plus SVG snapshots.
    Run(Common),
    /// Run every scheme over a range of seeds and check their ordering.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Number of consecutive seeds, starting at the configured seed.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
    },
    /// Write SVG snapshots after the given round counts.
    Render {
        #[command(flatten)]
        common: Common,
        /// Round counts to snapshot; defaults to the scenario milestones.
        #[arg(long = "at", value_delimiter = ',')]
        at: Vec<u32>,
    },
}

#[derive(Args)]
struct Common {
    /// Config document; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// proposed | wound_only_static | all_active
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    rounds: Option<u32>,
    #[arg(long)]
    snapshot_interval: Option<u32>,
}

impl Common {
    fn config(&self) -> Result<SimConfig, Error> {
        let base = load_config(self.config.as_deref())?;
        let overrides = RunOverrides {
            seed: self.seed,
            scheme: self.scheme,
            rounds: self.rounds,
            snapshot_interval: self.snapshot_interval,
        };
        Ok(overrides.apply(base)?)
    }
}

const EXIT_INVALID: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_ORDERING: u8 = 3;

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) => ExitCode::from(EXIT_INVALID),
        _ => ExitCode::from(EXIT_RUNTIME),
    }
}

fn run(common: &Common) -> Result<ExitCode, Error> {
    let config = common.config()?;
    let (out, files) = run_to_dir(&config, &common.out)?;
    println!(
        "{} rounds, cumulative energy {} nJ, {} dead; wrote {} and {} snapshots",
        out.series.rounds.len(),
        fmt_f64(out.series.final_cum_energy()),
        out.series.final_dead_nodes(),
        files.metrics.display(),
        files.snapshots.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn compare(common: &Common, seeds: u64) -> Result<ExitCode, Error> {
    let config = common.config()?;
    let first = config.run.seed;
    let mut manifest = RunManifest::new(config, first..first.saturating_add(seeds));
    if let Some(s) = common.scheme {
        manifest.schemes = vec![s];
    }
    let cmp = compare_schemes(&manifest)?;
    cmp.write(&common.out)?;
    print!("{}", cmp.summary_csv());
    let violations = cmp.ordering_violations();
    if violations.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    for v in &violations {
        eprintln!("ordering violated: {v}");
    }
    Ok(ExitCode::from(EXIT_ORDERING))
}

fn render(common: &Common, at: &[u32]) -> Result<ExitCode, Error> {
    let config = common.config()?;
    let rounds = if at.is_empty() {
        milestone_rounds(&config).to_vec()
    } else {
        at.to_vec()
    };
    let written = render_rounds(&config, &rounds, &common.out)?;
    for p in &written {
        println!("{}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Run(c) => run(c),
        Command::Compare { common, seeds } => compare(common, *seeds),
        Command::Render { common, at } => render(common, at),
    };
    result.unwrap_or_else(|e| fail(&e))
}
