//! End-to-end checks of the `cardpattern` binary: each command's outputs,
//! formats, and exit codes, on small synthetic inputs.

use std::io::BufReader;
use std::path::Path;
use std::process::{Command, Output};

use cardpattern::data::{read_records, sequence_to_records, write_records, RECORDS_VERSION_LINE};
use cardpattern::TransactionSequence;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cardpattern"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should spawn")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A 30-transaction stream with a weekly-ish amount wobble and a small
/// region routine; deterministic and fraud-free.
fn synthetic_stream() -> TransactionSequence {
    let amounts: Vec<f64> = (0..30)
        .map(|i| (4.0 + 0.3 * (i as f64 * 0.9).sin() + 0.05 * (i % 3) as f64).exp())
        .collect();
    let regions: Vec<u32> = (0..30).map(|i| [1, 1, 2, 1, 3][i % 5]).collect();
    TransactionSequence::from_parts(&amounts, &regions, cardpattern::Label::Legitimate).unwrap()
}

fn write_stream_records(path: &Path) {
    let records = sequence_to_records(&synthetic_stream());
    let mut buf = Vec::new();
    write_records(&mut buf, &records).unwrap();
    std::fs::write(path, buf).unwrap();
}

const CSV_BODY: &str = "\
Transaction Date,Transaction Amount,Vendor State/Province
2015-01-02,$54.20,ON
2015-01-03,61.90,ON
2015-01-04,48.75,QC
2015-01-05,,ON
2015-01-06,59.10,ON
2015-01-07,-3.00,QC
2015-01-08,44.30,BC
";

#[test]
fn ingest_writes_records_and_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("export.csv");
    let out = dir.path().join("stream.records");
    std::fs::write(&csv, CSV_BODY).unwrap();

    let output = run(&[
        "ingest",
        "--csv",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));

    let stdout = stdout_of(&output);
    assert!(
        stdout.contains("read 7 rows, dropped 2, kept 5 transactions"),
        "stdout: {stdout}"
    );
    assert!(stdout.contains("3 distinct"), "stdout: {stdout}");

    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with(RECORDS_VERSION_LINE));
    let records = read_records(BufReader::new(text.as_bytes())).unwrap();
    assert_eq!(records.len(), 5);
    assert_eq!(records[0].amount, 54.2);
}

#[test]
fn ingest_offset_and_length_select_a_window() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("export.csv");
    let out = dir.path().join("stream.records");
    std::fs::write(&csv, CSV_BODY).unwrap();

    let output = run(&[
        "ingest",
        "--csv",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--offset",
        "1",
        "--length",
        "2",
    ]);
    assert!(output.status.success());
    let records = read_records(BufReader::new(std::fs::File::open(&out).unwrap())).unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0].amount, 61.9);
    // Region ids restart from 1 within the selected window.
    assert_eq!(records[0].region, 1);
}

#[test]
fn ingest_reports_missing_column_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("export.csv");
    std::fs::write(&csv, CSV_BODY).unwrap();

    let output = run(&[
        "ingest",
        "--csv",
        csv.to_str().unwrap(),
        "--out",
        dir.path().join("x.records").to_str().unwrap(),
        "--amount-col",
        "No Such Column",
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("No Such Column"));
}

#[test]
fn ingest_unwritable_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("export.csv");
    std::fs::write(&csv, CSV_BODY).unwrap();

    let output = run(&[
        "ingest",
        "--csv",
        csv.to_str().unwrap(),
        "--out",
        dir.path()
            .join("no-such-dir")
            .join("x.records")
            .to_str()
            .unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn experiment_writes_scores_sweeps_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("stream.records");
    let out_dir = dir.path().join("exp");
    write_stream_records(&bundle);

    let output = run(&[
        "experiment",
        "--bundle",
        bundle.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--train-len",
        "14",
        "--block-len",
        "2",
        "--datasets",
        "3",
        "--p",
        "2",
        "--seed",
        "9",
        "--amount-model",
        "ar",
        "--region-model",
        "assoc",
        "--region-model",
        "adj",
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));

    for name in [
        "datasets.records",
        "scored_ar_assoc.csv",
        "scored_ar_adj.csv",
        "sweep_ar_assoc.csv",
        "sweep_ar_adj.csv",
        "report.txt",
        "manifest.json",
    ] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }

    // 3 legitimate + 3 fraud datasets x 2 test positions, plus the header.
    let scored = std::fs::read_to_string(out_dir.join("scored_ar_assoc.csv")).unwrap();
    assert_eq!(scored.lines().count(), 1 + 12);
    assert_eq!(
        scored.lines().next().unwrap(),
        "dataset_id,kind,pos,x,y,evp,truth"
    );

    // Sweep rows partition the test set: accuracy + fp + fn = 12.
    let sweep = std::fs::read_to_string(out_dir.join("sweep_ar_assoc.csv")).unwrap();
    for line in sweep.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let acc: usize = cols[1].parse().unwrap();
        let fp: usize = cols[3].parse().unwrap();
        let fneg: usize = cols[4].parse().unwrap();
        assert_eq!(acc + fp + fneg, 12, "row: {line}");
    }

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["input"]["kind"], "raw-stream");
    assert_eq!(manifest["assembly"]["count"], 3);
    assert_eq!(
        manifest["combos"],
        serde_json::json!(["ar_assoc", "ar_adj"])
    );
    assert!(manifest["input"]["sha256"].as_str().unwrap().len() == 64);
    assert!(manifest.get("timestamp").is_none());

    // The assembled bundle can be fed back in and scores identically.
    let out_dir2 = dir.path().join("exp2");
    let output = run(&[
        "experiment",
        "--bundle",
        out_dir.join("datasets.records").to_str().unwrap(),
        "--out-dir",
        out_dir2.to_str().unwrap(),
        "--p",
        "2",
        "--seed",
        "9",
        "--amount-model",
        "ar",
        "--region-model",
        "assoc",
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    assert_eq!(
        std::fs::read(out_dir.join("scored_ar_assoc.csv")).unwrap(),
        std::fs::read(out_dir2.join("scored_ar_assoc.csv")).unwrap()
    );
    let manifest2: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir2.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest2["input"]["kind"], "assembled");
    assert!(manifest2["fraud"].is_null());
}

#[test]
fn experiment_plot_data_emits_one_scan_per_dataset_and_model() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("stream.records");
    let out_dir = dir.path().join("exp");
    write_stream_records(&bundle);

    let output = run(&[
        "experiment",
        "--bundle",
        bundle.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--train-len",
        "14",
        "--block-len",
        "2",
        "--datasets",
        "2",
        "--p",
        "2",
        "--amount-model",
        "ar",
        "--plot-data",
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));

    let mut names: Vec<String> = std::fs::read_dir(out_dir.join("plots"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "scan_ar_F1.csv",
            "scan_ar_F2.csv",
            "scan_ar_L1.csv",
            "scan_ar_L2.csv"
        ]
    );

    let scan = std::fs::read_to_string(out_dir.join("plots/scan_ar_L1.csv")).unwrap();
    assert_eq!(
        scan.lines().next().unwrap(),
        "index,log_amount,mean,variance,upper,evp,sd_flag,evp_flag"
    );
    // One row per transaction (14 training + 2 test), plus the header.
    assert_eq!(scan.lines().count(), 1 + 16);
}

#[test]
fn experiment_rejects_half_a_fraud_override() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("stream.records");
    write_stream_records(&bundle);

    let output = run(&[
        "experiment",
        "--bundle",
        bundle.to_str().unwrap(),
        "--out-dir",
        dir.path().join("exp").to_str().unwrap(),
        "--train-len",
        "14",
        "--block-len",
        "2",
        "--datasets",
        "2",
        "--fraud-mean",
        "500",
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("--fraud-mean and --fraud-std"));
}

#[test]
fn experiment_with_too_short_stream_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("stream.records");
    write_stream_records(&bundle);

    let output = run(&[
        "experiment",
        "--bundle",
        bundle.to_str().unwrap(),
        "--out-dir",
        dir.path().join("exp").to_str().unwrap(),
        "--train-len",
        "100",
        "--datasets",
        "20",
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn modelselect_prints_ranked_table_and_acf() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("stream.records");
    let out_dir = dir.path().join("sel");
    write_stream_records(&bundle);

    let output = run(&[
        "modelselect",
        "--bundle",
        bundle.to_str().unwrap(),
        "--candidate",
        "1,0",
        "--candidate",
        "2,0",
        "--max-lag",
        "6",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let stdout = stdout_of(&output);
    assert!(stdout.contains("<- best"), "stdout: {stdout}");
    assert!(
        stdout.contains("autocorrelation (first 6 lags"),
        "stdout: {stdout}"
    );

    let orders = std::fs::read_to_string(out_dir.join("orders.csv")).unwrap();
    assert_eq!(orders.lines().count(), 1 + 2);
    let acf = std::fs::read_to_string(out_dir.join("acf.csv")).unwrap();
    assert_eq!(acf.lines().count(), 1 + 6);
    assert_eq!(acf.lines().next().unwrap(), "lag,acf,bound");
}

#[test]
fn modelselect_rejects_assembled_bundles() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("stream.records");
    let out_dir = dir.path().join("exp");
    write_stream_records(&bundle);
    let output = run(&[
        "experiment",
        "--bundle",
        bundle.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--train-len",
        "14",
        "--block-len",
        "2",
        "--datasets",
        "2",
        "--p",
        "2",
        "--amount-model",
        "ar",
    ]);
    assert!(output.status.success());

    let output = run(&[
        "modelselect",
        "--bundle",
        out_dir.join("datasets.records").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("raw stream"));
}

#[test]
fn modelselect_with_no_viable_candidate_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("stream.records");
    write_stream_records(&bundle);

    let output = run(&[
        "modelselect",
        "--bundle",
        bundle.to_str().unwrap(),
        "--candidate",
        "50,0",
    ]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn unknown_flag_value_exits_2() {
    let output = run(&[
        "experiment",
        "--bundle",
        "x",
        "--out-dir",
        "y",
        "--refit",
        "sometimes",
    ]);
    assert_eq!(output.status.code(), Some(2));
}
