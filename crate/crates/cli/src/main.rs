mod config;
mod dataset;
mod errors;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use bgm_core::glm::standardize_columns;
use bgm_core::selector::{bgm_statistics, estimate_weights, self_guiding_select};
use bgm_core::sim::{run_replicates, Method, SimScenario};
use bgm_core::BgmError;
use clap::{Args, Parser, Subcommand};

use config::*;
use dataset::{load_dataset, DatasetFile, ResponseSource};
use errors::CliError;
use report::*;

#[derive(Parser)]
#[command(
    name = "bgm",
    version,
    about = "FDR-controlled variable selection with bi-Gaussian mirror statistics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select features from a CSV dataset
    Select(SelectArgs),
    /// Run simulation scenarios and summarize FDP/power per setting
    Simulate(SimulateArgs),
    /// Convert a result JSON into another format
    Report(ReportArgs),
}

#[derive(Args)]
struct SelectArgs {
    /// CSV file with the design matrix (and optionally the response column)
    #[arg(long)]
    data: PathBuf,
    /// Single-column CSV with the response
    #[arg(long)]
    response: Option<PathBuf>,
    /// Response column in the data file, by name or 1-based index
    #[arg(long, conflicts_with = "response")]
    response_col: Option<String>,
    /// Model family: linear or logistic
    #[arg(long)]
    family: Option<String>,
    /// Target FDR level in (0,1); default 0.1
    #[arg(long)]
    q: Option<f64>,
    /// Kappa grid, "LO:HI" or comma list; default 1:10
    #[arg(long)]
    kappa: Option<String>,
    /// Penalty: "cv" or a fixed value; default cv
    #[arg(long)]
    lambda: Option<String>,
    /// Master seed for mirror noise and CV folds; default 0
    #[arg(long)]
    seed: Option<u64>,
    /// Output JSON path
    #[arg(long)]
    out: PathBuf,
    /// Field delimiter; default ','
    #[arg(long)]
    delimiter: Option<char>,
    /// Treat the first line as data, not a header
    #[arg(long)]
    no_header: bool,
    /// JSON config file supplying defaults (flags take precedence)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    cv_folds: Option<usize>,
    #[arg(long)]
    cv_grid_size: Option<usize>,
    #[arg(long)]
    cv_grid_ratio: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// linear-desk | linear-paper | logistic-desk | logistic-paper
    #[arg(long)]
    preset: String,
    /// Comma list of signal amplitudes; default the preset's value
    #[arg(long)]
    delta: Option<String>,
    /// Comma list of correlation factors; default the preset's value
    #[arg(long)]
    rho: Option<String>,
    /// Replicates per scenario point; default the preset's value
    #[arg(long)]
    reps: Option<usize>,
    /// Master seed; default 0
    #[arg(long)]
    seed: Option<u64>,
    /// Target FDR level override
    #[arg(long)]
    q: Option<f64>,
    /// bgm | baseline | both; default both
    #[arg(long)]
    method: Option<String>,
    /// Output CSV path for the per-scenario summary
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV path for the per-replicate log
    #[arg(long)]
    detail: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Result JSON produced by `bgm select`
    #[arg(long = "in")]
    input: PathBuf,
    /// csv | json
    #[arg(long)]
    format: String,
    /// Output path; default is the input with the new extension
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Select(args) => run_select(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Report(args) => run_report(args),
    };
    match result {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn solver(e: impl Into<BgmError>) -> CliError {
    CliError::Solver(e.into())
}

fn run_select(args: SelectArgs) -> Result<(), CliError> {
    let file_cfg = match &args.config {
        Some(path) => load_file_config(path)?,
        None => FileConfig::default(),
    };
    // resolve config before touching the dataset
    let family_str = args
        .family
        .or(file_cfg.family)
        .ok_or_else(|| CliError::Config("--family is required".into()))?;
    let family = parse_family(&family_str)?;
    let q = validate_q(args.q.or(file_cfg.q).unwrap_or(DEFAULT_Q))?;
    let kappa_str = args.kappa.or(file_cfg.kappa).unwrap_or_else(|| "1:10".into());
    let kappa_grid = parse_kappa_grid(&kappa_str)?;
    let seed = args.seed.or(file_cfg.seed).unwrap_or(0);
    let folds = args.cv_folds.or(file_cfg.cv_folds).unwrap_or(DEFAULT_CV_FOLDS);
    let grid_size = args
        .cv_grid_size
        .or(file_cfg.cv_grid_size)
        .unwrap_or(DEFAULT_CV_GRID_SIZE);
    let grid_ratio = args
        .cv_grid_ratio
        .or(file_cfg.cv_grid_ratio)
        .unwrap_or(DEFAULT_CV_GRID_RATIO);
    let lambda_str = args.lambda.or(file_cfg.lambda).unwrap_or_else(|| "cv".into());
    let rule = parse_lambda_rule(&lambda_str, folds, grid_size, grid_ratio, seed)?;
    let delimiter = args.delimiter.or(file_cfg.delimiter).unwrap_or(',');
    if !delimiter.is_ascii() {
        return Err(CliError::Config(format!(
            "delimiter {delimiter:?} must be a single ASCII character"
        )));
    }
    let has_header = if args.no_header {
        false
    } else {
        file_cfg.has_header.unwrap_or(true)
    };
    let response = if let Some(path) = args.response {
        ResponseSource::File(path)
    } else if let Some(col) = args.response_col {
        ResponseSource::Column(col)
    } else if let Some(col) = file_cfg.response_col {
        ResponseSource::Column(col)
    } else if let Some(path) = file_cfg.response {
        ResponseSource::File(PathBuf::from(path))
    } else {
        return Err(CliError::Config(
            "a response is required: --response FILE or --response-col NAME".into(),
        ));
    };

    let spec = DatasetFile {
        path: args.data,
        delimiter: delimiter as u8,
        has_header,
        response,
    };
    let ds = load_dataset(&spec, family)?;

    let t0 = Instant::now();
    let design = standardize_columns(ds.x.view()).map_err(solver)?;
    let selection = self_guiding_select(
        &design,
        ds.y.view(),
        family,
        &kappa_grid,
        q,
        seed,
        &rule,
    )?;

    // per-feature table at the winning kappa
    let weights =
        estimate_weights(selection.initial_fit.coefficients.view(), selection.kappa_max)
            .map_err(solver)?;
    let stats = bgm_statistics(&selection.scores, &weights).map_err(solver)?;
    let (beta_raw, _) = design.destandardize(
        &selection.initial_fit.coefficients,
        selection.initial_fit.intercept,
    );
    let p = design.p();
    let features: Vec<FeatureRow> = (0..p)
        .map(|j| FeatureRow {
            index: j + 1,
            name: ds.feature_names[j].clone(),
            beta_hat: selection.initial_fit.coefficients[j],
            beta_raw: beta_raw[j],
            w1: selection.scores.w1[j],
            w2: selection.scores.w2[j],
            gamma: weights.gamma[j],
            m_hat: stats.m_hat[j],
        })
        .collect();
    let tau = selection
        .per_kappa
        .iter()
        .find(|r| r.kappa == selection.kappa_max)
        .map(|r| r.tau)
        .unwrap_or(f64::INFINITY);
    let record = ResultRecord {
        schema_version: SCHEMA_VERSION,
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        command: "select".into(),
        family: family_label(family).into(),
        n: design.n(),
        p,
        q,
        kappa_grid: kappa_grid.clone(),
        seed,
        lambda_rule: lambda_rule_label(&rule),
        lambda: selection.lambda,
        kappa_max: selection.kappa_max,
        tau: tau.is_finite().then_some(tau),
        selected: selection
            .final_selected
            .iter()
            .map(|&j| SelectedFeature {
                index: j + 1,
                name: ds.feature_names[j].clone(),
            })
            .collect(),
        per_kappa: selection
            .per_kappa
            .iter()
            .map(|r| KappaSummary {
                kappa: r.kappa,
                tau: r.tau.is_finite().then_some(r.tau),
                size: r.size,
            })
            .collect(),
        features,
        timestamp: chrono::Utc::now().to_rfc3339(),
        elapsed_seconds: t0.elapsed().as_secs_f64(),
    };
    write_result_json(&args.out, &record)?;
    println!(
        "selected {} of {} features (kappa_max={}, tau={}); wrote {}",
        record.selected.len(),
        p,
        record.kappa_max,
        record
            .tau
            .map(|t| t.to_string())
            .unwrap_or_else(|| "inf".into()),
        args.out.display()
    );
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let seed = args.seed.unwrap_or(0);
    let mut base = match args.preset.as_str() {
        "linear-desk" => SimScenario::linear_desk(seed),
        "linear-paper" => SimScenario::linear_paper(seed),
        "logistic-desk" => SimScenario::logistic_desk(seed),
        "logistic-paper" => SimScenario::logistic_paper(seed),
        other => {
            return Err(CliError::Config(format!(
                "unknown preset {other:?}; expected linear-desk, linear-paper, logistic-desk, or logistic-paper"
            )))
        }
    };
    if let Some(q) = args.q {
        base.q = validate_q(q)?;
    }
    if let Some(reps) = args.reps {
        base.replicates = reps;
    }
    let deltas = match &args.delta {
        Some(s) => parse_float_list(s, "delta")?,
        None => vec![base.delta],
    };
    let rhos = match &args.rho {
        Some(s) => parse_float_list(s, "rho")?,
        None => vec![base.rho],
    };
    let methods: Vec<Method> = match args.method.as_deref().unwrap_or("both") {
        "bgm" => vec![Method::Bgm],
        "baseline" => vec![Method::SymmetricBaseline],
        "both" => vec![Method::Bgm, Method::SymmetricBaseline],
        other => {
            return Err(CliError::Config(format!(
                "unknown method {other:?}; expected bgm, baseline, or both"
            )))
        }
    };

    let mut summary = String::from(
        "family,n,p,s,delta,rho,q,method,replicates,completed,failed,mean_fdp,sd_fdp,mean_power,sd_power\n",
    );
    let mut detail = String::from(
        "family,n,p,s,delta,rho,q,method,replicate_id,selected_count,fdp,power,tau,kappa_max\n",
    );
    for &delta in &deltas {
        for &rho in &rhos {
            let mut sc = base.clone();
            sc.delta = delta;
            sc.rho = rho;
            sc.validate().map_err(|e| CliError::Config(e.to_string()))?;
            for &method in &methods {
                let run = run_replicates(&sc, method)?;
                let s = &run.summary;
                let fam = family_label(sc.family);
                summary.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    fam,
                    sc.n,
                    sc.p,
                    sc.s,
                    delta,
                    rho,
                    sc.q,
                    method.label(),
                    sc.replicates,
                    s.completed,
                    s.failed,
                    s.mean_fdp,
                    s.sd_fdp,
                    s.mean_power,
                    s.sd_power
                ));
                for o in &run.outcomes {
                    detail.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                        fam,
                        sc.n,
                        sc.p,
                        sc.s,
                        delta,
                        rho,
                        sc.q,
                        method.label(),
                        o.replicate_id,
                        o.selected.len(),
                        o.fdp,
                        o.power,
                        o.tau,
                        o.kappa_max
                    ));
                }
                println!(
                    "simulate {fam} delta={delta} rho={rho} method={}: mean_fdp={:.4} mean_power={:.4} ({} ok, {} failed)",
                    method.label(),
                    s.mean_fdp,
                    s.mean_power,
                    s.completed,
                    s.failed
                );
            }
        }
    }
    write_atomic(&args.out, summary.as_bytes())?;
    if let Some(detail_path) = &args.detail {
        write_atomic(detail_path, detail.as_bytes())?;
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn run_report(args: ReportArgs) -> Result<(), CliError> {
    match args.format.as_str() {
        "csv" => {
            let record = read_result_json(&args.input)?;
            let out = args.out.unwrap_or_else(|| with_extension(&args.input, "csv"));
            write_feature_csv(&out, &record)?;
            println!("wrote {}", out.display());
        }
        "json" => {
            let record = read_result_json(&args.input)?;
            let out = args
                .out
                .unwrap_or_else(|| with_extension(&args.input, "json"));
            write_result_json(&out, &record)?;
            println!("wrote {}", out.display());
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown format {other:?}; expected csv or json"
            )))
        }
    }
    Ok(())
}
