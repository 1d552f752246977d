use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hdlin_core::testkit::{
    test_behrens_fisher, test_common_cov, test_linear_hypothesis, test_two_sample_equal_cov,
    KurtosisSource, Sidedness, TestOptions,
};
use hdlin_core::{GroupSample, LinearHypothesis, TmScale};
use hdlin_harness::config::load_config;
use hdlin_harness::experiment::default_threads;
use hdlin_harness::input::read_matrix;
use hdlin_harness::oracle::{default_grid, render_report, verify_oracle, ClosedForms, VerifyOptions};
use hdlin_harness::output::render_markdown;
use hdlin_harness::{emit_outputs, run_experiment, ExperimentConfig, Format, HarnessError, Preset, Result};
use nalgebra::DVector;

#[derive(Parser)]
#[command(name = "hdlin", version, about = "Corrected T² tests for linear hypotheses on high-dimensional means")]
struct Cli {
    /// Worker threads for Monte Carlo runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for tables and plots.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output formats (comma separated): csv, markdown, svg.
    #[arg(long, global = true, value_delimiter = ',')]
    format: Option<Vec<Format>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML file.
    Run { config: PathBuf },
    /// Three-group sum grid (β = (1, 1, 1)).
    Table1(PresetArgs),
    /// Three-group contrast grid (β = (−½, −½, 1)).
    Table2(PresetArgs),
    /// Two-sample grid with unequal covariances.
    Table3(PresetArgs),
    /// Test a hypothesis on data read from CSV files.
    Test(TestArgs),
    /// Compare closed-form limits with contour-integral oracles.
    VerifyOracle {
        /// Corrupt the closed-form mean to exercise the failure path.
        #[arg(long, hide = true)]
        inject_fault: bool,
        /// Skip the Monte Carlo centering check.
        #[arg(long)]
        no_monte_carlo: bool,
    },
}

#[derive(Args)]
struct PresetArgs {
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum TestVariant {
    General,
    BehrensFisher,
    CommonCov,
    TwoSampleEqualCov,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scale {
    Reciprocal,
    AsPrinted,
}

#[derive(Args)]
struct TestArgs {
    /// One CSV file per group, one observation per row.
    #[arg(long, num_args = 2.., required = true)]
    groups: Vec<PathBuf>,
    /// Hypothesis coefficients, one per group (default 1,-1 for two groups).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta: Option<Vec<f64>>,
    /// Target vector: one value per coordinate, or a single value broadcast.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mu0: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// The CSV files start with a header row.
    #[arg(long)]
    header: bool,
    #[arg(long, value_enum, default_value = "general")]
    variant: TestVariant,
    /// estimate, zero, or user:BETA_X,BETA_Y
    #[arg(long, default_value = "estimate")]
    kurtosis: String,
    #[arg(long)]
    two_sided: bool,
    #[arg(long, value_enum, default_value = "reciprocal")]
    tm_scale: Scale,
}

fn parse_kurtosis(s: &str) -> Result<KurtosisSource> {
    match s {
        "estimate" => Ok(KurtosisSource::Estimate),
        "zero" => Ok(KurtosisSource::Zero),
        _ => {
            let bad = || HarnessError::Usage(format!("invalid --kurtosis '{s}'"));
            let rest = s.strip_prefix("user:").ok_or_else(bad)?;
            let (bx, by) = rest.split_once(',').ok_or_else(bad)?;
            Ok(KurtosisSource::User {
                beta_x: bx.trim().parse().map_err(|_| bad())?,
                beta_y: by.trim().parse().map_err(|_| bad())?,
            })
        }
    }
}

fn run_test(args: &TestArgs) -> Result<()> {
    let groups = args
        .groups
        .iter()
        .enumerate()
        .map(|(i, path)| Ok(GroupSample::new(read_matrix(path, args.header)?, i + 1)?))
        .collect::<Result<Vec<_>>>()?;
    let p = groups[0].p();
    let q = groups.len();
    let two_group = matches!(args.variant, TestVariant::BehrensFisher | TestVariant::TwoSampleEqualCov);
    if two_group && q != 2 {
        return Err(HarnessError::Usage("this variant takes exactly two groups".into()));
    }
    let beta = match (&args.beta, q) {
        (Some(b), _) => b.clone(),
        (None, 2) => vec![1.0, -1.0],
        (None, _) => return Err(HarnessError::Usage("--beta is required for more than two groups".into())),
    };
    let mu0 = match args.mu0.as_deref() {
        None => DVector::zeros(p),
        Some([v]) => DVector::from_element(p, *v),
        Some(v) if v.len() == p => DVector::from_column_slice(v),
        Some(v) => {
            return Err(HarnessError::Usage(format!(
                "--mu0 has {} values, expected 1 or p = {p}",
                v.len()
            )))
        }
    };
    if two_group && (beta != [1.0, -1.0] || mu0.iter().any(|&v| v != 0.0)) {
        return Err(HarnessError::Usage(
            "two-sample variants test mu1 = mu2; omit --beta and --mu0".into(),
        ));
    }
    let opts = TestOptions {
        alpha: args.alpha,
        kurtosis: parse_kurtosis(&args.kurtosis)?,
        sidedness: if args.two_sided { Sidedness::TwoSided } else { Sidedness::Upper },
        tm_scale: match args.tm_scale {
            Scale::Reciprocal => TmScale::Reciprocal,
            Scale::AsPrinted => TmScale::AsPrinted,
        },
    };
    let hypothesis = LinearHypothesis::new(beta, mu0)?;
    let result = match args.variant {
        TestVariant::General => test_linear_hypothesis(&groups, &hypothesis, &opts)?,
        TestVariant::BehrensFisher => test_behrens_fisher(&groups[0], &groups[1], &opts)?,
        TestVariant::CommonCov => test_common_cov(&groups, &hypothesis, &opts)?,
        TestVariant::TwoSampleEqualCov => test_two_sample_equal_cov(&groups[0], &groups[1], &opts)?,
    };
    let json = serde_json::to_string_pretty(&result).map_err(|e| HarnessError::Usage(e.to_string()))?;
    println!("{json}");
    Ok(())
}

fn run_grid(mut config: ExperimentConfig, cli: &Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        config.threads = t;
    }
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    if let Some(f) = &cli.format {
        config.formats = f.clone();
    }
    let table = run_experiment(&config)?;
    for path in emit_outputs(&table, &config.formats, &config.out)? {
        println!("wrote {}", path.display());
    }
    print!("{}", render_markdown(&table));
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run { config } => run_grid(load_config(config)?, cli),
        Command::Table1(a) | Command::Table2(a) | Command::Table3(a) => {
            let preset = match cli.command {
                Command::Table1(_) => Preset::Table1,
                Command::Table2(_) => Preset::Table2,
                _ => Preset::Table3,
            };
            let mut config = ExperimentConfig::new(preset.cells(a.reps, a.seed));
            config.out = PathBuf::from("results").join(preset.name());
            config.threads = default_threads();
            run_grid(config, cli)
        }
        Command::Test(args) => run_test(args),
        Command::VerifyOracle {
            inject_fault,
            no_monte_carlo,
        } => {
            fn corrupted(r: &hdlin_core::DimensionRatios, bx: f64, by: f64) -> f64 {
                hdlin_core::rmt::asymptotic_mean(r, bx, by) * (1.0 + 1e-3)
            }
            let mut opts = VerifyOptions {
                limit: !no_monte_carlo,
                ..VerifyOptions::default()
            };
            if *inject_fault {
                opts.forms = ClosedForms {
                    mean: corrupted,
                    ..ClosedForms::default()
                };
            }
            let report = verify_oracle(&default_grid(), &opts);
            print!("{}", render_report(&report));
            if report.passed {
                Ok(())
            } else {
                Err(HarnessError::OracleFailed)
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
