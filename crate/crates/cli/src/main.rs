//! `dfdr`: run the rule-universe evaluation pipeline from the shell.
//!
//! Every subcommand reads an optional TOML config (`--config`), applies the
//! flags on top, validates the result and writes CSV outputs plus
//! `manifest.json` into `--out`. The directory holds a `.incomplete` marker
//! until the run succeeds.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use dfdr_core::harness::StressRule;
use dfdr_core::rules::DEFAULT_GRID_TOML;
use dfdr_core::SimDesign;

use crate::config::{RunConfig, SelectMethod};
use crate::error::CliError;
use crate::output::OutputDir;

#[derive(Parser, Debug)]
#[command(name = "dfdr", version, about = "Discrete FDR evaluation of technical trading rule universes")]
struct Cli {
    /// TOML run configuration; flags override its keys.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory (config key `output`).
    #[arg(long, short, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Master seed for all random draws (config key `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct DataArgs {
    /// Price CSV (`date,close`), repeatable; the file stem names the market.
    #[arg(long, value_name = "CSV")]
    prices: Vec<PathBuf>,
    /// Risk-free CSV (`date,annual_rate`, decimal fractions).
    #[arg(long, value_name = "CSV")]
    risk_free: Option<PathBuf>,
    /// Universe grid TOML (default: the shipped 1,250-rule grid).
    #[arg(long, value_name = "TOML")]
    universe: Option<PathBuf>,
    /// First date of the sample (YYYY-MM-DD).
    #[arg(long)]
    start: Option<NaiveDate>,
    /// Last date of the sample (YYYY-MM-DD).
    #[arg(long)]
    end: Option<NaiveDate>,
    /// One-way transaction cost in basis points.
    #[arg(long)]
    tc_bps: Option<f64>,
    /// Charge both legs of a long/short reversal.
    #[arg(long)]
    flip_both_legs: bool,
}

#[derive(Args, Debug, Default)]
struct BootArgs {
    /// Bootstrap replications B.
    #[arg(long)]
    replications: Option<usize>,
    /// Expected block length of the stationary bootstrap.
    #[arg(long)]
    block: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct RollArgs {
    #[arg(long)]
    is_months: Option<usize>,
    #[arg(long)]
    oos_months: Option<usize>,
    #[arg(long)]
    step_months: Option<usize>,
    /// FDR⁺ target of the in-sample selection.
    #[arg(long)]
    target: Option<f64>,
    /// FDR⁺ target of the cross-validation selection.
    #[arg(long)]
    cv_target: Option<f64>,
    /// λ grid spacing for the right-boundary search.
    #[arg(long)]
    grid_width: Option<f64>,
    /// Treat windows without survivors as holding the risk-free asset.
    #[arg(long)]
    empty_as_risk_free: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StressArg {
    Sign,
    MedianSplit,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Export the enumerated rule universe as CSV.
    Rules {
        #[arg(long, value_name = "TOML")]
        universe: Option<PathBuf>,
        /// Print the shipped grid TOML (the documented schema) and exit.
        #[arg(long)]
        print_grid: bool,
    },
    /// Per-rule after-cost performance and break-even cost.
    Backtest {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Bootstrap Sharpe p-values and their support histogram.
    Pvalues {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        boot: BootArgs,
    },
    /// Select outperforming rules.
    Select {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        boot: BootArgs,
        #[arg(long, value_enum)]
        method: Option<SelectMethod>,
        /// FDR⁺ target (dfdr, storey).
        #[arg(long)]
        target: Option<f64>,
        /// Fixed λ (storey).
        #[arg(long)]
        lambda: Option<f64>,
        /// FWER level (rw).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        grid_width: Option<f64>,
        /// Read p-values (`id,phi,sign,p`) instead of bootstrapping prices;
        /// B is taken from --replications.
        #[arg(long, value_name = "CSV")]
        pvalues: Option<PathBuf>,
    },
    /// Rolling in-sample selection with out-of-sample evaluation.
    Rolling {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        boot: BootArgs,
        #[command(flatten)]
        roll: RollArgs,
    },
    /// Consecutive OOS blocks in which each window's portfolio beats the risk-free rate.
    Persistence {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        boot: BootArgs,
        #[command(flatten)]
        roll: RollArgs,
        /// Block lengths in months, comma separated.
        #[arg(long, value_delimiter = ',')]
        horizons: Vec<usize>,
    },
    /// Cross-validate in-sample survivors against a full-window selection.
    Crossval {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        boot: BootArgs,
        #[command(flatten)]
        roll: RollArgs,
    },
    /// Break-even cost of the best in-sample rule per window.
    Breakeven {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        boot: BootArgs,
        #[command(flatten)]
        roll: RollArgs,
    },
    /// Split OOS performance by the preceding stress level.
    Stress {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        boot: BootArgs,
        #[command(flatten)]
        roll: RollArgs,
        /// Stress index CSV (`date,stress`).
        #[arg(long, value_name = "CSV")]
        stress: Option<PathBuf>,
        #[arg(long, value_enum)]
        stress_rule: Option<StressArg>,
    },
    /// Power study on synthetic panels with planted performers.
    Montecarlo {
        /// Start from the full-size design before applying other flags.
        #[arg(long)]
        full_scale: bool,
        #[arg(long)]
        rules: Option<usize>,
        #[arg(long)]
        days: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        replications: Option<usize>,
        #[arg(long)]
        block: Option<f64>,
    },
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl DataArgs {
    fn apply(self, c: &mut RunConfig) {
        if !self.prices.is_empty() {
            c.data.prices = self.prices;
        }
        if self.risk_free.is_some() {
            c.data.risk_free = self.risk_free;
        }
        if self.universe.is_some() {
            c.data.universe = self.universe;
        }
        if self.start.is_some() {
            c.data.start = self.start;
            c.rolling.start = self.start;
        }
        if self.end.is_some() {
            c.data.end = self.end;
            c.rolling.end = self.end;
        }
        set(&mut c.cost.tc_bps, self.tc_bps);
        c.cost.flip_charges_both_legs |= self.flip_both_legs;
    }
}

impl BootArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.bootstrap.replications, self.replications);
        set(&mut c.bootstrap.expected_block, self.block);
    }
}

impl RollArgs {
    fn apply(self, c: &mut RunConfig) {
        let r = &mut c.rolling;
        set(&mut r.is_months, self.is_months);
        set(&mut r.oos_months, self.oos_months);
        set(&mut r.step_months, self.step_months);
        set(&mut r.target, self.target);
        set(&mut r.cv_target, self.cv_target);
        set(&mut r.grid_width, self.grid_width);
        r.empty_as_risk_free |= self.empty_as_risk_free;
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.output, cli.out);
    set(&mut cfg.seed, cli.seed);
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    let mut pvalues_file = None;
    let name = match cli.command {
        Command::Rules { universe, print_grid } => {
            if print_grid {
                print!("{DEFAULT_GRID_TOML}");
                return Ok(());
            }
            if universe.is_some() {
                cfg.data.universe = universe;
            }
            "rules"
        }
        Command::Backtest { data } => {
            data.apply(&mut cfg);
            "backtest"
        }
        Command::Pvalues { data, boot } => {
            data.apply(&mut cfg);
            boot.apply(&mut cfg);
            "pvalues"
        }
        Command::Select {
            data,
            boot,
            method,
            target,
            lambda,
            alpha,
            grid_width,
            pvalues,
        } => {
            data.apply(&mut cfg);
            boot.apply(&mut cfg);
            let s = &mut cfg.select;
            set(&mut s.method, method);
            set(&mut s.target, target);
            set(&mut s.lambda, lambda);
            set(&mut s.alpha, alpha);
            set(&mut s.grid_width, grid_width);
            pvalues_file = pvalues;
            "select"
        }
        Command::Rolling { data, boot, roll } => {
            data.apply(&mut cfg);
            boot.apply(&mut cfg);
            roll.apply(&mut cfg);
            "rolling"
        }
        Command::Persistence {
            data,
            boot,
            roll,
            horizons,
        } => {
            data.apply(&mut cfg);
            boot.apply(&mut cfg);
            roll.apply(&mut cfg);
            if !horizons.is_empty() {
                cfg.persistence.horizons = horizons;
            }
            "persistence"
        }
        Command::Crossval { data, boot, roll } => {
            data.apply(&mut cfg);
            boot.apply(&mut cfg);
            roll.apply(&mut cfg);
            "crossval"
        }
        Command::Breakeven { data, boot, roll } => {
            data.apply(&mut cfg);
            boot.apply(&mut cfg);
            roll.apply(&mut cfg);
            "breakeven"
        }
        Command::Stress {
            data,
            boot,
            roll,
            stress,
            stress_rule,
        } => {
            data.apply(&mut cfg);
            boot.apply(&mut cfg);
            roll.apply(&mut cfg);
            if stress.is_some() {
                cfg.data.stress = stress;
            }
            if let Some(r) = stress_rule {
                cfg.stress.rule = match r {
                    StressArg::Sign => StressRule::Sign,
                    StressArg::MedianSplit => StressRule::MedianSplit,
                };
            }
            "stress"
        }
        Command::Montecarlo {
            full_scale,
            rules,
            days,
            reps,
            replications,
            block,
        } => {
            if full_scale {
                cfg.montecarlo = SimDesign::full_scale();
            }
            let d = &mut cfg.montecarlo;
            set(&mut d.n_rules, rules);
            set(&mut d.n_days, days);
            set(&mut d.reps, reps);
            set(&mut d.replications, replications);
            set(&mut d.expected_block, block);
            "montecarlo"
        }
    };
    cfg.validate()?;
    cfg.montecarlo.seed = cfg.seed;

    let mut out = OutputDir::create(&cfg.output)?;
    let summary = match name {
        "rules" => commands::rules(&cfg, &mut out)?,
        "backtest" => commands::backtest(&cfg, &mut out)?,
        "pvalues" => commands::pvalues(&cfg, &mut out)?,
        "select" => {
            let s = commands::select(&cfg, &mut out, pvalues_file.as_deref())?;
            s.iter().map(|x| x.line()).collect::<Vec<_>>().join("\n")
        }
        "rolling" => commands::rolling(&cfg, &mut out)?,
        "persistence" => commands::persistence(&cfg, &mut out)?,
        "crossval" => commands::crossval(&cfg, &mut out)?,
        "breakeven" => commands::breakeven(&cfg, &mut out)?,
        "stress" => commands::stress(&cfg, &mut out)?,
        "montecarlo" => commands::montecarlo(&cfg, &mut out)?,
        _ => unreachable!(),
    };
    let manifest = out.finish(name, &cfg)?;
    println!("{summary}");
    log::info!("wrote {}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dfdr: error: {e}");
            ExitCode::FAILURE
        }
    }
}
