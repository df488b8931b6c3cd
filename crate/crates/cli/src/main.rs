//! `cardpattern`: command-line driver for per-cardholder fraud scoring.
//!
//! Three commands cover the pipeline end to end:
//!
//! * `ingest` reads a raw CSV export, filters unusable rows, and writes the
//!   transaction stream in the line-oriented records format.
//! * `experiment` assembles legitimate and fraud datasets from a stream,
//!   scores every test transaction under the requested model combinations,
//!   sweeps the classification threshold, and writes scores, sweep tables, a
//!   text report, and a manifest into an output directory.
//! * `modelselect` reports in-sample RMSE per autoregressive order candidate
//!   and the autocorrelation series of the log-amounts.
//!
//! Every command is deterministic: all randomness flows from `--seed`, the
//! manifest records the exact configuration and the digest of the input, and
//! re-running with the same inputs produces byte-identical outputs.
//!
//! Exit codes: 0 on success, 2 for usage or input problems, 1 for numerical
//! failures inside the models.

use std::fmt::Write as _;
use std::io::{BufReader, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use cardpattern::ar::{acf, select_order, OrderSelection};
use cardpattern::data::{
    assemble_datasets, experiment_to_records, ingest_csv_with, read_records, records_to_experiment,
    records_to_sequence, sequence_to_records, write_records, AssemblyConfig, DataError, Dataset,
    DatasetRecord, ExperimentSet, FraudAmountDist, FraudGenConfig, IngestOptions,
    DEFAULT_AMOUNT_COLUMN, DEFAULT_REGION_COLUMN,
};
use cardpattern::types::GpOptions;
use cardpattern::{
    log_amounts, outlier_scan, score_experiment, sweep, AmountModelKind, ComboScores, DetectError,
    EvpSide, LagPadding, ModelConfig, OutlierMode, RefitPolicy, RegionModelKind, SweepReport,
};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

const ARTIFACT_VERSION: &str = "cardpattern experiment v1";

// ---------------------------------------------------------------------------
// Errors and exit codes

/// Input problems (unreadable files, bad flags, malformed bundles) exit 2;
/// numerical failures inside the models exit 1. Usage errors raised by the
/// argument parser also exit 2, which clap does on its own.
#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Input(_) => ExitCode::from(2),
            CliError::Numerical(_) => ExitCode::from(1),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<DetectError> for CliError {
    fn from(e: DetectError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Arguments

#[derive(Debug, Parser)]
#[command(
    name = "cardpattern",
    version,
    about = "Learns a cardholder's amount and region patterns and scores transactions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a raw CSV export into a transaction records file.
    Ingest(IngestArgs),
    /// Assemble datasets, score them, and sweep the threshold.
    Experiment(ExperimentArgs),
    /// Rank autoregressive order candidates and print the ACF.
    Modelselect(ModelSelectArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Input CSV file with headered columns.
    #[arg(long)]
    csv: PathBuf,
    /// Output records file.
    #[arg(long)]
    out: PathBuf,
    /// Column holding the transaction amount.
    #[arg(long = "amount-col", default_value = DEFAULT_AMOUNT_COLUMN)]
    amount_col: String,
    /// Column holding the transaction region.
    #[arg(long = "region-col", default_value = DEFAULT_REGION_COLUMN)]
    region_col: String,
    /// Usable transactions to skip before the selection starts.
    #[arg(long, default_value_t = 0)]
    offset: usize,
    /// Maximum number of transactions to keep (default: all).
    #[arg(long)]
    length: Option<usize>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Records file: either a raw stream (from `ingest`) or a previously
    /// assembled experiment (a `datasets.records` file).
    #[arg(long)]
    bundle: PathBuf,
    /// Directory receiving all outputs (created if missing).
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
    /// Amount model(s) to run; repeat the flag to add more. Default: ar, gp.
    #[arg(long = "amount-model", value_parser = parse_enum::<AmountModelKind>)]
    amount_model: Vec<AmountModelKind>,
    /// Region model(s) to run; repeat the flag to add more. Default: assoc.
    #[arg(long = "region-model", value_parser = parse_enum::<RegionModelKind>)]
    region_model: Vec<RegionModelKind>,
    /// Classification thresholds to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = vec![10.0, 20.0, 30.0, 40.0, 50.0])]
    thetas: Vec<f64>,
    /// Master seed for fraud generation and model fitting.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    // Dataset assembly (ignored when the bundle is already assembled).
    /// Training transactions per dataset.
    #[arg(long = "train-len", default_value_t = 100)]
    train_len: usize,
    /// Test transactions per dataset.
    #[arg(long = "block-len", default_value_t = 5)]
    block_len: usize,
    /// Datasets per kind (legitimate and fraud).
    #[arg(long, default_value_t = 20)]
    datasets: usize,

    // Fraud block synthesis.
    /// Fraud amount mean (absolute); overrides --fraud-mean-factor.
    #[arg(long = "fraud-mean")]
    fraud_mean: Option<f64>,
    /// Fraud amount standard deviation (absolute); overrides --fraud-std-factor.
    #[arg(long = "fraud-std")]
    fraud_std: Option<f64>,
    /// Fraud mean as a multiple of the training-window mean amount.
    #[arg(long = "fraud-mean-factor", default_value_t = 3.0)]
    fraud_mean_factor: f64,
    /// Fraud spread as a multiple of the training-window amount deviation.
    #[arg(long = "fraud-std-factor", default_value_t = 1.0)]
    fraud_std_factor: f64,
    /// Fraud amount distribution: truncnormal or lognormal.
    #[arg(long = "fraud-dist", value_parser = parse_enum::<FraudAmountDist>, default_value = "truncnormal")]
    fraud_dist: FraudAmountDist,

    // Model configuration.
    /// Autoregressive order.
    #[arg(long, default_value_t = 5)]
    p: usize,
    /// Differencing order.
    #[arg(long, default_value_t = 0)]
    d: usize,
    /// Standard-deviation band width for intervals and scan flags.
    #[arg(long, default_value_t = 2.0)]
    sd: f64,
    /// Extreme-value probability flag threshold.
    #[arg(long = "theta-ev", default_value_t = 0.6)]
    theta_ev: f64,
    /// Row length for the region path matrix.
    #[arg(long = "row-len", default_value_t = 10)]
    row_len: usize,
    /// Trailing fit window in observations (default: full history).
    #[arg(long)]
    window: Option<usize>,
    /// Refit the amount model before every test transaction, or once.
    #[arg(long, value_parser = parse_enum::<RefitPolicy>, default_value = "step")]
    refit: RefitPolicy,
    /// Missing-lag handling: drop short rows or zero-pad them.
    #[arg(long = "lag-padding", value_parser = parse_enum::<LagPadding>, default_value = "drop")]
    lag_padding: LagPadding,
    /// Deviation standardization for extreme-value scoring.
    #[arg(long = "evp-side", value_parser = parse_enum::<EvpSide>, default_value = "folded")]
    evp_side: EvpSide,
    /// Center log-amounts before the Gaussian-process fit.
    #[arg(long, default_value_t = false)]
    center: bool,
    /// Random restarts per Gaussian-process fit.
    #[arg(long = "gp-restarts", default_value_t = 10)]
    gp_restarts: usize,

    /// Also write per-dataset amount-scan files under plots/.
    #[arg(long = "plot-data", default_value_t = false)]
    plot_data: bool,
}

#[derive(Debug, Args)]
struct ModelSelectArgs {
    /// Records file holding a single raw stream (from `ingest`).
    #[arg(long)]
    bundle: PathBuf,
    /// Order candidate as P,D; repeat the flag to add more.
    /// Default: 1,1 2,1 3,0 4,0 5,0.
    #[arg(long = "candidate", value_parser = parse_candidate)]
    candidate: Vec<(usize, usize)>,
    /// Autocorrelation lags to report.
    #[arg(long = "max-lag", default_value_t = 20)]
    max_lag: usize,
    /// Trailing fit window in observations (default: full history).
    #[arg(long)]
    window: Option<usize>,
    /// Missing-lag handling: drop short rows or zero-pad them.
    #[arg(long = "lag-padding", value_parser = parse_enum::<LagPadding>, default_value = "drop")]
    lag_padding: LagPadding,
    /// Optional directory for orders.csv and acf.csv.
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
}

fn parse_enum<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

fn parse_candidate(s: &str) -> Result<(usize, usize), String> {
    let (p, d) = s
        .split_once([',', ':'])
        .ok_or_else(|| format!("expected P,D (e.g. 5,0), got {s:?}"))?;
    let parse = |v: &str, name| {
        v.trim()
            .parse::<usize>()
            .map_err(|e| format!("bad {name} in candidate {s:?}: {e}"))
    };
    Ok((parse(p, "order")?, parse(d, "differencing")?))
}

// ---------------------------------------------------------------------------
// File helpers

/// Writes via a temporary file in the target directory plus an atomic rename,
/// so readers never observe a half-written file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |e: &dyn std::fmt::Display| {
        CliError::Input(format!("cannot write {}: {e}", path.display()))
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(&e))?;
    tmp.write_all(bytes).map_err(|e| io_err(&e))?;
    tmp.persist(path).map_err(|e| io_err(&e))?;
    Ok(())
}

fn read_records_file(path: &Path) -> Result<Vec<DatasetRecord>, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    read_records(BufReader::new(file))
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn records_to_bytes(records: &[DatasetRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_records(&mut buf, records).expect("writing records to memory cannot fail");
    buf
}

fn sha256_hex(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Formats an optional value with fixed decimals, or an empty field.
fn opt_fixed(v: Option<f64>, decimals: usize) -> String {
    match v {
        Some(v) => format!("{v:.decimals$}"),
        None => String::new(),
    }
}

/// Prints to stdout, treating a closed pipe (e.g. `cardpattern ... | head`)
/// as a normal early exit rather than a panic.
fn print_out(text: &str) {
    use std::io::Write;
    if let Err(e) = std::io::stdout().write_all(text.as_bytes()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
    }
}

// ---------------------------------------------------------------------------
// ingest

fn cmd_ingest(args: &IngestArgs) -> Result<(), CliError> {
    let opts = IngestOptions {
        amount_column: args.amount_col.clone(),
        region_column: args.region_col.clone(),
        offset: args.offset,
        limit: args.length,
    };
    let (sequence, report) = ingest_csv_with(&args.csv, &opts)?;
    write_atomic(
        &args.out,
        &records_to_bytes(&sequence_to_records(&sequence)),
    )?;

    let mut out = format!(
        "read {} rows, dropped {}, kept {} transactions\n",
        report.rows_read, report.rows_dropped, report.rows_used
    );
    let _ = writeln!(
        out,
        "regions ({} distinct, by first appearance):",
        report.regions.len()
    );
    for (label, id) in &report.regions {
        let _ = writeln!(out, "  {id:>4}  {label}");
    }
    let _ = writeln!(
        out,
        "wrote {} records to {}",
        sequence.len(),
        args.out.display()
    );
    print_out(&out);
    Ok(())
}

// ---------------------------------------------------------------------------
// experiment

#[derive(Serialize)]
struct ManifestInput {
    path: String,
    sha256: String,
    /// "raw-stream" when the bundle was assembled here, "assembled" when it
    /// already contained an experiment.
    kind: &'static str,
}

#[derive(Serialize)]
struct Manifest {
    artifact: &'static str,
    seed: u64,
    input: ManifestInput,
    assembly: AssemblyConfig,
    /// Absent when the bundle was already assembled (no blocks generated).
    fraud: Option<FraudGenConfig>,
    config: ModelConfig,
    combos: Vec<String>,
    thetas: Vec<f64>,
    plot_data: bool,
    outputs: Vec<String>,
}

fn combo_tag(amount: AmountModelKind, region: RegionModelKind) -> String {
    format!("{amount}_{region}")
}

fn model_config_from(args: &ExperimentArgs) -> ModelConfig {
    let defaults = ModelConfig::default();
    ModelConfig {
        p: args.p,
        d: args.d,
        sd_multiplier: args.sd,
        theta_ev: args.theta_ev,
        row_len: args.row_len,
        window: args.window,
        seed: args.seed,
        lag_padding: args.lag_padding,
        evp_side: args.evp_side,
        refit: args.refit,
        gp: GpOptions {
            center: args.center,
            restarts: args.gp_restarts,
            ..defaults.gp
        },
        ..defaults
    }
}

/// Builds the experiment set from the bundle. A bundle whose records all
/// carry dataset id 0 is a raw stream and gets assembled here (returning the
/// fraud profile used); an already-assembled bundle is taken as-is.
fn load_experiment(
    args: &ExperimentArgs,
    records: &[DatasetRecord],
) -> Result<(ExperimentSet, Option<FraudGenConfig>, &'static str), CliError> {
    let raw_stream = records.iter().all(|r| r.dataset_id == 0);
    if !raw_stream {
        let set = records_to_experiment(records)?;
        return Ok((set, None, "assembled"));
    }

    let sequence = records_to_sequence(records)?;
    let assembly = AssemblyConfig {
        train_len: args.train_len,
        block_len: args.block_len,
        count: args.datasets,
    };
    let fraud = match (args.fraud_mean, args.fraud_std) {
        (Some(mean), Some(std)) => {
            let cfg = FraudGenConfig {
                amount_mean: mean,
                amount_std: std,
                block_len: assembly.block_len,
                dist: args.fraud_dist,
            };
            cfg.validate()?;
            cfg
        }
        (None, None) => {
            let amounts = sequence.amounts();
            if amounts.len() < assembly.train_len {
                return Err(CliError::Input(format!(
                    "stream has {} transactions, need at least --train-len {}",
                    amounts.len(),
                    assembly.train_len
                )));
            }
            FraudGenConfig::derived_from(
                &amounts[..assembly.train_len],
                assembly.block_len,
                args.fraud_mean_factor,
                args.fraud_std_factor,
                args.fraud_dist,
            )?
        }
        _ => {
            return Err(CliError::Input(
                "--fraud-mean and --fraud-std must be given together".into(),
            ))
        }
    };
    let set = assemble_datasets(&sequence, &assembly, &fraud, args.seed)?;
    Ok((set, Some(fraud), "raw-stream"))
}

fn scored_csv(combo: &ComboScores) -> String {
    let mut out = String::from("dataset_id,kind,pos,x,y,evp,truth\n");
    for s in &combo.scored {
        let (x, y) = match &s.point {
            Some(p) => (Some(p.x), Some(p.y)),
            None => (None, None),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.dataset_id,
            s.kind.code(),
            s.pos,
            opt_fixed(x, 6),
            opt_fixed(y, 6),
            opt_fixed(s.evp, 6),
            s.truth
        );
    }
    out
}

fn sweep_csv(report: &SweepReport) -> String {
    let mut out =
        String::from("theta,accuracy_count,accuracy_rate,false_positive,false_negative\n");
    for e in &report.entries {
        let _ = writeln!(
            out,
            "{},{},{:.6},{},{}",
            e.theta, e.accuracy_count, e.accuracy_rate, e.false_positive, e.false_negative
        );
    }
    out
}

fn sweep_text(combo: &ComboScores, report: &SweepReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "amount={} region={}  ({} test transactions, {} unscored)",
        combo.amount, combo.region, report.total, report.unscored
    );
    let _ = writeln!(
        out,
        "  {:>8} {:>10} {:>8} {:>11} {:>11}",
        "theta", "accuracy", "rate", "false_pos", "false_neg"
    );
    for e in &report.entries {
        let _ = writeln!(
            out,
            "  {:>8} {:>10} {:>8.3} {:>11} {:>11}",
            e.theta, e.accuracy_count, e.accuracy_rate, e.false_positive, e.false_negative
        );
    }
    let best = report
        .entries
        .iter()
        .find(|e| e.theta == report.best_theta)
        .expect("best theta comes from the entries");
    let _ = writeln!(
        out,
        "  best theta: {} (accuracy {}/{} = {:.3})",
        best.theta, best.accuracy_count, report.total, best.accuracy_rate
    );
    out
}

/// Per-dataset amount-scan plot data: the series, the predictive band, and
/// both flag columns, one row per position.
fn scan_csv(
    dataset: &Dataset,
    amount: AmountModelKind,
    config: &ModelConfig,
) -> Result<String, CliError> {
    let sd = outlier_scan(dataset, amount, OutlierMode::Sd, config)?;
    let ev = outlier_scan(dataset, amount, OutlierMode::Evp, config)?;
    let mut out = String::from("index,log_amount,mean,variance,upper,evp,sd_flag,evp_flag\n");
    for (s, e) in sd.iter().zip(&ev) {
        let _ = writeln!(
            out,
            "{},{:.6},{},{},{},{},{},{}",
            s.index,
            s.log_amount,
            opt_fixed(s.mean, 6),
            opt_fixed(s.variance, 6),
            opt_fixed(s.upper, 6),
            opt_fixed(s.evp, 6),
            s.flagged as u8,
            e.flagged as u8
        );
    }
    Ok(out)
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<(), CliError> {
    if args.thetas.is_empty() {
        return Err(CliError::Input(
            "--thetas must list at least one threshold".into(),
        ));
    }
    let amount_models = if args.amount_model.is_empty() {
        vec![AmountModelKind::Ar, AmountModelKind::Gp]
    } else {
        args.amount_model.clone()
    };
    let region_models = if args.region_model.is_empty() {
        vec![RegionModelKind::Assoc]
    } else {
        args.region_model.clone()
    };
    let mut combos = Vec::new();
    for &a in &amount_models {
        for &r in &region_models {
            if !combos.contains(&(a, r)) {
                combos.push((a, r));
            }
        }
    }

    let config = model_config_from(args);
    config
        .validate()
        .map_err(|e| CliError::Input(e.to_string()))?;

    let records = read_records_file(&args.bundle)?;
    let (set, fraud, input_kind) = load_experiment(args, &records)?;
    let input_sha = sha256_hex(&args.bundle)?;

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", args.out_dir.display())))?;

    let scored = score_experiment(&set, &combos, &config)?;

    let mut outputs = vec!["datasets.records".to_string(), "report.txt".to_string()];
    write_atomic(
        &args.out_dir.join("datasets.records"),
        &records_to_bytes(&experiment_to_records(&set)),
    )?;

    let mut report_text = String::new();
    for combo in &scored {
        let report = sweep(&combo.scored, &args.thetas);
        let tag = combo_tag(combo.amount, combo.region);
        let scored_name = format!("scored_{tag}.csv");
        let sweep_name = format!("sweep_{tag}.csv");
        write_atomic(
            &args.out_dir.join(&scored_name),
            scored_csv(combo).as_bytes(),
        )?;
        write_atomic(
            &args.out_dir.join(&sweep_name),
            sweep_csv(&report).as_bytes(),
        )?;
        outputs.push(scored_name);
        outputs.push(sweep_name);
        report_text.push_str(&sweep_text(combo, &report));
        report_text.push('\n');
    }
    write_atomic(&args.out_dir.join("report.txt"), report_text.as_bytes())?;

    if args.plot_data {
        let plots = args.out_dir.join("plots");
        std::fs::create_dir_all(&plots)
            .map_err(|e| CliError::Input(format!("cannot create {}: {e}", plots.display())))?;
        for dataset in set.legitimate.iter().chain(&set.fraud) {
            for &amount in &amount_models {
                let name = format!("scan_{}_{}{}.csv", amount, dataset.kind.code(), dataset.id);
                write_atomic(
                    &plots.join(&name),
                    scan_csv(dataset, amount, &config)?.as_bytes(),
                )?;
            }
        }
    }

    outputs.sort();
    let manifest = Manifest {
        artifact: ARTIFACT_VERSION,
        seed: args.seed,
        input: ManifestInput {
            path: args.bundle.display().to_string(),
            sha256: input_sha,
            kind: input_kind,
        },
        assembly: AssemblyConfig {
            train_len: set.train_len,
            block_len: set.block_len,
            count: set.legitimate.len(),
        },
        fraud,
        config,
        combos: combos.iter().map(|&(a, r)| combo_tag(a, r)).collect(),
        thetas: args.thetas.clone(),
        plot_data: args.plot_data,
        outputs,
    };
    let manifest_json =
        serde_json::to_string_pretty(&manifest).expect("manifest serialization cannot fail") + "\n";
    write_atomic(
        &args.out_dir.join("manifest.json"),
        manifest_json.as_bytes(),
    )?;

    print_out(&report_text);
    print_out(&format!(
        "{} legitimate + {} fraud datasets, {} model combination(s); outputs in {}\n",
        set.legitimate.len(),
        set.fraud.len(),
        scored.len(),
        args.out_dir.display()
    ));
    Ok(())
}

// ---------------------------------------------------------------------------
// modelselect

fn orders_csv(selection: &OrderSelection) -> String {
    let mut out = String::from("p,d,rmse,error\n");
    for c in &selection.table {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            c.p,
            c.d,
            opt_fixed(c.rmse, 6),
            c.error.as_deref().unwrap_or("")
        );
    }
    out
}

fn cmd_modelselect(args: &ModelSelectArgs) -> Result<(), CliError> {
    let records = read_records_file(&args.bundle)?;
    if records.iter().any(|r| r.dataset_id != 0) {
        return Err(CliError::Input(
            "model selection expects a single raw stream (the output of `ingest`), \
             not an assembled experiment"
                .into(),
        ));
    }
    let sequence = records_to_sequence(&records)?;
    let logs = log_amounts(&sequence.amounts()).map_err(|e| CliError::Input(e.to_string()))?;

    let candidates = if args.candidate.is_empty() {
        vec![(1, 1), (2, 1), (3, 0), (4, 0), (5, 0)]
    } else {
        args.candidate.clone()
    };
    let selection = select_order(&logs, &candidates, args.window, args.lag_padding)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let series_acf = acf(&logs, args.max_lag).map_err(|e| CliError::Input(e.to_string()))?;

    let mut out = format!("order selection over {} log-amounts\n", logs.len());
    let _ = writeln!(out, "  {:>4} {:>4} {:>12}", "p", "d", "rmse");
    for c in &selection.table {
        match (c.rmse, &c.error) {
            (Some(rmse), _) => {
                let marker = if (c.p, c.d) == selection.best {
                    "  <- best"
                } else {
                    ""
                };
                let _ = writeln!(out, "  {:>4} {:>4} {:>12.6}{marker}", c.p, c.d, rmse);
            }
            (None, Some(err)) => {
                let _ = writeln!(out, "  {:>4} {:>4} {:>12}  {err}", c.p, c.d, "-");
            }
            (None, None) => {
                let _ = writeln!(out, "  {:>4} {:>4} {:>12}", c.p, c.d, "-");
            }
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "autocorrelation (first {} lags, band +-{:.6})",
        args.max_lag, series_acf.bound
    );
    let _ = writeln!(out, "  {:>4} {:>10} {:>8}", "lag", "acf", "outside");
    for (i, &r) in series_acf.coefficients.iter().enumerate() {
        let outside = if r.abs() > series_acf.bound {
            "        *"
        } else {
            ""
        };
        let _ = writeln!(out, "  {:>4} {:>10.4}{outside}", i + 1, r);
    }
    print_out(&out);

    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
        write_atomic(&dir.join("orders.csv"), orders_csv(&selection).as_bytes())?;
        let mut acf_out = String::from("lag,acf,bound\n");
        for (i, &r) in series_acf.coefficients.iter().enumerate() {
            let _ = writeln!(acf_out, "{},{:.6},{:.6}", i + 1, r, series_acf.bound);
        }
        write_atomic(&dir.join("acf.csv"), acf_out.as_bytes())?;
        print_out(&format!(
            "\nwrote orders.csv and acf.csv to {}\n",
            dir.display()
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Modelselect(args) => cmd_modelselect(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
