use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use regnl::dataset::FeatureSpec;
use regnl::runner::{
    cmd_build_dataset, cmd_compare, cmd_evaluate, cmd_simulate, cmd_train, Disruption,
    ExperimentConfig, ModelKind, Overrides, SimulationSpec,
};

/// Regional GDP nowcasting from nighttime lights.
#[derive(Parser)]
#[command(name = "regnl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Join radiance, GDP, deflators and centroids into dataset.csv.
    BuildDataset(Common),
    /// Train the requested models on the train years.
    Train(Common),
    /// Weighted error per test period, with reference lines.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Network model to score instead of the default path.
        #[arg(long)]
        model_file: Option<PathBuf>,
    },
    /// Side-by-side errors and per-period plot CSVs.
    Compare(Common),
    /// Write a synthetic scenario and a matching config.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_features)]
    features: Option<FeatureSpec>,
    /// Restrict the run to one model.
    #[arg(long, value_parser = parse_model)]
    model: Option<ModelKind>,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON scenario spec; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "sim")]
    out: PathBuf,
    #[arg(long)]
    regions: Option<usize>,
    #[arg(long)]
    train_periods: Option<usize>,
    #[arg(long)]
    test_periods: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    /// 1-based test period hit by the disruption.
    #[arg(long)]
    disruption_period: Option<usize>,
    /// Fraction of activity left in the disrupted period, in (0, 1].
    #[arg(long)]
    severity: Option<f64>,
    #[arg(long, conflicts_with_all = ["disruption_period", "severity"])]
    no_disruption: bool,
}

fn parse_features(s: &str) -> Result<FeatureSpec, String> {
    s.parse()
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse()
}

impl Common {
    fn load(&self) -> regnl::Result<ExperimentConfig> {
        let overrides = Overrides {
            seed: self.seed,
            out_dir: self.out.clone(),
            features: self.features,
            model: self.model,
        };
        ExperimentConfig::load(self.config.as_deref(), &overrides)
    }
}

impl SimulateArgs {
    fn spec(&self) -> regnl::Result<SimulationSpec> {
        let mut spec = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| regnl::Error::Config(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| regnl::Error::Config(format!("{}: {e}", path.display())))?
            }
            None => SimulationSpec::default(),
        };
        if let Some(v) = self.seed {
            spec.seed = v;
        }
        if let Some(v) = self.regions {
            spec.regions = v;
        }
        if let Some(v) = self.train_periods {
            spec.train_periods = v;
        }
        if let Some(v) = self.test_periods {
            spec.test_periods = v;
        }
        if let Some(v) = self.noise {
            spec.noise = v;
        }
        if self.no_disruption {
            spec.disruption = None;
        } else if self.disruption_period.is_some() || self.severity.is_some() {
            let base = spec.disruption.unwrap_or(Disruption {
                test_period: 1,
                severity: 1.0,
            });
            spec.disruption = Some(Disruption {
                test_period: self.disruption_period.unwrap_or(base.test_period),
                severity: self.severity.unwrap_or(base.severity),
            });
        }
        Ok(spec)
    }
}

fn run(cli: Cli) -> regnl::Result<()> {
    match cli.command {
        Command::BuildDataset(c) => {
            let s = cmd_build_dataset(&c.load()?)?;
            println!("{} rows -> {}", s.rows, s.dataset.display());
            println!("coverage -> {}", s.coverage_file.display());
        }
        Command::Train(c) => {
            for t in cmd_train(&c.load()?)? {
                print!(
                    "{} -> {} ({:.1} s",
                    t.model,
                    t.path.display(),
                    t.wall_time.as_secs_f64()
                );
                if let Some(loss) = t.final_loss {
                    print!(", final scaled MSE {loss:.6}");
                }
                println!(")");
            }
        }
        Command::Evaluate { common, model_file } => {
            print!(
                "{}",
                cmd_evaluate(&common.load()?, model_file.as_deref())?.render_text()
            );
        }
        Command::Compare(c) => {
            print!("{}", cmd_compare(&c.load()?)?.render_text());
        }
        Command::Simulate(args) => {
            let files = cmd_simulate(&args.spec()?, &args.out)?;
            println!("scenario -> {}", files.spec.display());
            println!("config -> {}", files.config.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
