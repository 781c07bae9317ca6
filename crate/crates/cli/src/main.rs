use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use advice_timing::experiments::{
    parse_belief_spec, simulate_to_dir, sweep_to_dir, ExperimentError, SimulateConfig, SweepSpec,
};
use advice_timing::{Context, ContextView, ModelParams, Planner, ThetaGrid};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "advice-timing", version, about = "Simulate and plan engagement-aware AI advice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one episode per policy and write traces plus a summary.
    Simulate {
        /// JSON run config; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Also write figure.svg.
        #[arg(long)]
        plot: bool,
    },
    /// Vary one parameter and compare policies over batches of episodes.
    Sweep {
        /// JSON sweep file.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Print the planner's action values for one belief and context.
    PlanDebug(PlanDebugArgs),
}

#[derive(Debug, Args)]
struct PlanDebugArgs {
    /// `point:<theta>` or comma-separated grid masses.
    #[arg(long, default_value = "point:1.0")]
    belief: String,
    #[arg(long, default_value = "high")]
    context: String,
    /// JSON run config to take parameters from.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha_low: Option<f64>,
    #[arg(long)]
    alpha_high: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    /// current, previous or previous_predictive.
    #[arg(long)]
    view: Option<String>,
}

fn read_config(path: &Path) -> Result<String, ExperimentError> {
    fs::read_to_string(path).map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", path.display())))
}

fn config_error(e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Config(e.to_string())
}

fn plan_debug(args: PlanDebugArgs) -> Result<(), ExperimentError> {
    let base = match &args.config {
        Some(path) => SimulateConfig::from_json(&read_config(path)?)?.base,
        None => SimulateConfig::default().base,
    };
    let mut params: ModelParams = base.params;
    let overrides = [
        (&mut params.alpha_low, args.alpha_low),
        (&mut params.alpha_high, args.alpha_high),
        (&mut params.eta, args.eta),
        (&mut params.phi, args.phi),
        (&mut params.gamma, args.gamma),
    ];
    for (field, value) in overrides {
        if let Some(v) = value {
            *field = v;
        }
    }
    params.grid_size = args.grid_size.unwrap_or(params.grid_size);
    params.horizon = args.horizon.unwrap_or(params.horizon);
    params.validate().map_err(config_error)?;

    let view = match &args.view {
        Some(v) => v.parse::<ContextView>().map_err(config_error)?,
        None => base.context_view,
    };
    let context: Context = args.context.parse().map_err(config_error)?;
    let grid = ThetaGrid::for_params(&params).map_err(config_error)?;
    let belief = parse_belief_spec(&args.belief, &grid).map_err(config_error)?;
    let planner = Planner::with_view(&params, view)?;
    let values = planner.action_values(&belief, context, params.horizon)?;
    println!("horizon={}", params.horizon);
    println!("expected_theta={}", belief.expected_theta(&grid));
    println!("value_on={}", values.on);
    println!("value_off={}", values.off);
    println!("action={}", values.choose());
    Ok(())
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            seed,
            steps,
            plot,
        } => {
            let mut cfg = match &config {
                Some(path) => SimulateConfig::from_json(&read_config(path)?)?,
                None => SimulateConfig::default(),
            };
            cfg.base.seed = seed.unwrap_or(cfg.base.seed);
            cfg.base.steps = steps.unwrap_or(cfg.base.steps);
            cfg.validate()?;
            for path in simulate_to_dir(&cfg, &out, plot)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Sweep {
            config,
            out,
            seed,
            steps,
            episodes,
        } => {
            let mut spec = SweepSpec::from_json(&read_config(&config)?)?;
            spec.base.seed = seed.unwrap_or(spec.base.seed);
            spec.base.steps = steps.unwrap_or(spec.base.steps);
            spec.episodes = episodes.unwrap_or(spec.episodes);
            spec.validate()?;
            let (result, paths) = sweep_to_dir(&spec, &out)?;
            for row in &result.rows {
                let cells: Vec<String> = row
                    .cells
                    .iter()
                    .map(|c| {
                        format!(
                            "{}={:.1}%{} ({:.2})",
                            c.policy,
                            100.0 * c.mean_accuracy,
                            if c.best { "*" } else { "" },
                            c.mean_advice_on_fraction
                        )
                    })
                    .collect();
                println!("{}={}: {}", result.variable.as_str(), row.value, cells.join("  "));
            }
            for path in paths {
                println!("wrote {}", path.display());
            }
        }
        Command::PlanDebug(args) => plan_debug(args)?,
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
