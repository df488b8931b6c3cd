//! Data plumbing: CSV ingestion, synthetic fraud blocks, experiment dataset
//! assembly, and the line-oriented record format used between CLI stages.
//!
//! Experiment construction follows the sliding-window scheme: from one long
//! legitimate stream, the i-th legitimate dataset takes a training window
//! shifted by `(i-1) * block_len` followed by the next `block_len` genuine
//! transactions; the i-th fraud dataset reuses the original training window
//! and appends a synthetic fraud block.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeds::substream;
use crate::types::{CoreError, Label, TransactionSequence};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    UnreadableFile {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column {name:?}; available columns: {available:?}")]
    MissingColumn {
        name: String,
        available: Vec<String>,
    },
    #[error("no usable transactions after filtering/selection")]
    EmptyAfterFiltering,
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("invalid fraud configuration: {0}")]
    InvalidFraudConfig(String),
    #[error("gave up after {attempts} consecutive non-positive amount draws")]
    RejectionOverflow { attempts: usize },
    #[error("legitimate stream too short: need {needed} transactions, have {have}")]
    InsufficientData { needed: usize, have: usize },
    #[error("record format error at line {line}: {msg}")]
    BadRecord { line: usize, msg: String },
}

// ---------------------------------------------------------------------------
// CSV ingestion

pub const DEFAULT_AMOUNT_COLUMN: &str = "Transaction Amount";
pub const DEFAULT_REGION_COLUMN: &str = "Vendor State/Province";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub amount_column: String,
    pub region_column: String,
    /// Transactions to skip (after filtering) before the selection starts.
    pub offset: usize,
    /// Maximum number of transactions to keep; `None` = all remaining.
    pub limit: Option<usize>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            amount_column: DEFAULT_AMOUNT_COLUMN.to_string(),
            region_column: DEFAULT_REGION_COLUMN.to_string(),
            offset: 0,
            limit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestionReport {
    /// Data rows seen in the file.
    pub rows_read: usize,
    /// Rows dropped for a non-positive/unparseable amount or missing region.
    pub rows_dropped: usize,
    /// Transactions kept after filtering and offset/limit selection.
    pub rows_used: usize,
    /// Region label -> id, in order of first appearance within the selection.
    pub regions: Vec<(String, u32)>,
}

/// "$1,234.50" -> 1234.5; currency symbols and thousands separators are
/// cosmetic, anything else unparseable drops the row.
fn parse_amount(raw: &str) -> Option<f64> {
    let cleaned: String = raw
        .trim()
        .chars()
        .filter(|&c| c != '$' && c != ',')
        .collect();
    cleaned.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a transaction stream from a headered CSV file. Rows with a
/// non-positive or unparseable amount, or a missing region, are dropped and
/// counted. Region ids are assigned 1, 2, ... by first appearance within the
/// selected window.
pub fn ingest_csv_with(
    path: &Path,
    opts: &IngestOptions,
) -> Result<(TransactionSequence, IngestionReport), DataError> {
    let file = std::fs::File::open(path).map_err(|e| DataError::UnreadableFile {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(std::io::BufReader::new(file));
    let headers = reader.headers()?.clone();
    let position = |name: &str| headers.iter().position(|h| h.trim() == name);
    let missing = |name: &str| DataError::MissingColumn {
        name: name.to_string(),
        available: headers.iter().map(|h| h.trim().to_string()).collect(),
    };
    let amount_idx = position(&opts.amount_column).ok_or_else(|| missing(&opts.amount_column))?;
    let region_idx = position(&opts.region_column).ok_or_else(|| missing(&opts.region_column))?;

    let mut rows_read = 0;
    let mut rows_dropped = 0;
    let mut kept: Vec<(f64, String)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows_read += 1;
        let amount = record.get(amount_idx).and_then(parse_amount);
        let region = record
            .get(region_idx)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        match (amount, region) {
            (Some(a), Some(r)) if a > 0.0 => kept.push((a, r)),
            _ => rows_dropped += 1,
        }
    }

    let end = opts
        .limit
        .map_or(kept.len(), |l| (opts.offset + l).min(kept.len()));
    let selected = kept.get(opts.offset..end).unwrap_or(&[]);
    if selected.is_empty() {
        return Err(DataError::EmptyAfterFiltering);
    }

    let mut region_ids: HashMap<&str, u32> = HashMap::new();
    let mut regions_in_order: Vec<(String, u32)> = Vec::new();
    let mut amounts = Vec::with_capacity(selected.len());
    let mut regions = Vec::with_capacity(selected.len());
    for (amount, region) in selected {
        let next_id = region_ids.len() as u32 + 1;
        let id = *region_ids.entry(region.as_str()).or_insert_with(|| {
            regions_in_order.push((region.clone(), next_id));
            next_id
        });
        amounts.push(*amount);
        regions.push(id);
    }

    let sequence = TransactionSequence::from_parts(&amounts, &regions, Label::Legitimate)?;
    let report = IngestionReport {
        rows_read,
        rows_dropped,
        rows_used: sequence.len(),
        regions: regions_in_order,
    };
    Ok((sequence, report))
}

/// [`ingest_csv_with`] over the whole file with the given column names.
pub fn ingest_csv(
    path: &Path,
    amount_column: &str,
    region_column: &str,
) -> Result<(TransactionSequence, IngestionReport), DataError> {
    ingest_csv_with(
        path,
        &IngestOptions {
            amount_column: amount_column.to_string(),
            region_column: region_column.to_string(),
            ..IngestOptions::default()
        },
    )
}

// ---------------------------------------------------------------------------
// Fraud blocks

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FraudAmountDist {
    /// Normal(mean, std) with non-positive draws rejected.
    TruncNormal,
    /// Log-normal with the same mean and standard deviation.
    LogNormal,
}

impl std::fmt::Display for FraudAmountDist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FraudAmountDist::TruncNormal => "truncnormal",
            FraudAmountDist::LogNormal => "lognormal",
        })
    }
}

impl std::str::FromStr for FraudAmountDist {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self, CoreError> {
        match s {
            "truncnormal" => Ok(FraudAmountDist::TruncNormal),
            "lognormal" => Ok(FraudAmountDist::LogNormal),
            other => Err(CoreError::InvalidConfig(format!(
                "unknown fraud amount distribution {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FraudGenConfig {
    pub amount_mean: f64,
    pub amount_std: f64,
    pub block_len: usize,
    pub dist: FraudAmountDist,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn std_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

impl FraudGenConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        if !(self.amount_mean > 0.0) {
            return Err(DataError::InvalidFraudConfig(format!(
                "amount_mean must be positive, got {}",
                self.amount_mean
            )));
        }
        if !(self.amount_std > 0.0) {
            return Err(DataError::InvalidFraudConfig(format!(
                "amount_std must be positive, got {}",
                self.amount_std
            )));
        }
        if self.block_len == 0 {
            return Err(DataError::InvalidFraudConfig(
                "block_len must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Default fraud profile relative to the legitimate stream: mean scaled
    /// by `mean_factor` (3 by default upstream), spread scaled by
    /// `std_factor` (1 by default upstream).
    pub fn derived_from(
        amounts: &[f64],
        block_len: usize,
        mean_factor: f64,
        std_factor: f64,
        dist: FraudAmountDist,
    ) -> Result<Self, DataError> {
        if amounts.is_empty() {
            return Err(DataError::InvalidFraudConfig(
                "cannot derive fraud amounts from an empty stream".into(),
            ));
        }
        let cfg = FraudGenConfig {
            amount_mean: mean_factor * mean(amounts),
            amount_std: std_factor * std_dev(amounts),
            block_len,
            dist,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

const REJECTION_LIMIT: usize = 1000;

/// One synthetic fraud block: `block_len` amounts from the configured
/// distribution and regions drawn as the head of a random permutation of the
/// legitimate region multiset (plausible places, implausible order).
/// Amounts/regions are returned positionally; callers assign indices.
pub fn gen_fraud_block(
    config: &FraudGenConfig,
    legit_regions: &[u32],
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, Vec<u32>), DataError> {
    config.validate()?;
    if legit_regions.len() < config.block_len {
        return Err(DataError::InsufficientData {
            needed: config.block_len,
            have: legit_regions.len(),
        });
    }

    let mut amounts = Vec::with_capacity(config.block_len);
    match config.dist {
        FraudAmountDist::TruncNormal => {
            let normal = Normal::new(config.amount_mean, config.amount_std)
                .map_err(|e| DataError::InvalidFraudConfig(e.to_string()))?;
            for _ in 0..config.block_len {
                let mut attempts = 0;
                let accepted = loop {
                    let draw = normal.sample(rng);
                    if draw > 0.0 {
                        break draw;
                    }
                    attempts += 1;
                    if attempts >= REJECTION_LIMIT {
                        return Err(DataError::RejectionOverflow { attempts });
                    }
                };
                amounts.push(accepted);
            }
        }
        FraudAmountDist::LogNormal => {
            // Match the first two moments of the target distribution.
            let ratio = config.amount_std / config.amount_mean;
            let sigma_sq = (1.0 + ratio * ratio).ln();
            let mu = config.amount_mean.ln() - sigma_sq / 2.0;
            let lognormal = LogNormal::new(mu, sigma_sq.sqrt())
                .map_err(|e| DataError::InvalidFraudConfig(e.to_string()))?;
            for _ in 0..config.block_len {
                amounts.push(lognormal.sample(rng));
            }
        }
    }

    let mut permuted = legit_regions.to_vec();
    permuted.shuffle(rng);
    permuted.truncate(config.block_len);
    Ok((amounts, permuted))
}

// ---------------------------------------------------------------------------
// Experiment assembly

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Legitimate,
    Fraud,
}

impl DatasetKind {
    pub fn code(self) -> char {
        match self {
            DatasetKind::Legitimate => 'L',
            DatasetKind::Fraud => 'F',
        }
    }

    pub fn from_code(c: &str) -> Option<Self> {
        match c {
            "L" => Some(DatasetKind::Legitimate),
            "F" => Some(DatasetKind::Fraud),
            _ => None,
        }
    }

    /// Ground truth of the trailing test block.
    pub fn truth(self) -> Label {
        match self {
            DatasetKind::Legitimate => Label::Legitimate,
            DatasetKind::Fraud => Label::Fraudulent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    /// 1-based within its kind.
    pub id: u32,
    pub kind: DatasetKind,
    pub sequence: TransactionSequence,
    /// Leading transactions used for training; the rest are scored.
    pub train_len: usize,
}

impl Dataset {
    pub fn test_len(&self) -> usize {
        self.sequence.len() - self.train_len
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSet {
    pub legitimate: Vec<Dataset>,
    pub fraud: Vec<Dataset>,
    pub train_len: usize,
    pub block_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssemblyConfig {
    pub train_len: usize,
    pub block_len: usize,
    /// Datasets per kind.
    pub count: usize,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig {
            train_len: 100,
            block_len: 5,
            count: 20,
        }
    }
}

/// Builds `count` legitimate and `count` fraud datasets from one legitimate
/// stream. Legitimate dataset i slides the training window forward so its
/// test block is the next `block_len` genuine transactions; every fraud
/// dataset reuses the original window and appends a fresh synthetic block
/// (regions permuted per block from the training multiset).
pub fn assemble_datasets(
    legit: &TransactionSequence,
    assembly: &AssemblyConfig,
    fraud_cfg: &FraudGenConfig,
    seed: u64,
) -> Result<ExperimentSet, DataError> {
    if assembly.count == 0 || assembly.train_len == 0 {
        return Err(DataError::InvalidFraudConfig(
            "dataset count and train_len must be >= 1".into(),
        ));
    }
    if fraud_cfg.block_len != assembly.block_len {
        return Err(DataError::InvalidFraudConfig(format!(
            "fraud block_len {} != assembly block_len {}",
            fraud_cfg.block_len, assembly.block_len
        )));
    }
    let needed = assembly.train_len + assembly.count * assembly.block_len;
    if legit.len() < needed {
        return Err(DataError::InsufficientData {
            needed,
            have: legit.len(),
        });
    }

    let amounts = legit.amounts();
    let regions = legit.regions();
    let train_regions = &regions[..assembly.train_len];

    let mut legitimate = Vec::with_capacity(assembly.count);
    let mut fraud = Vec::with_capacity(assembly.count);
    for i in 0..assembly.count {
        let shift = i * assembly.block_len;
        let window = shift..shift + assembly.train_len;
        let block = assembly.train_len + shift..assembly.train_len + shift + assembly.block_len;

        let mut l_amounts = amounts[window.clone()].to_vec();
        l_amounts.extend_from_slice(&amounts[block.clone()]);
        let mut l_regions = regions[window].to_vec();
        l_regions.extend_from_slice(&regions[block]);
        legitimate.push(Dataset {
            id: i as u32 + 1,
            kind: DatasetKind::Legitimate,
            sequence: TransactionSequence::from_parts(&l_amounts, &l_regions, Label::Legitimate)?,
            train_len: assembly.train_len,
        });

        let mut rng = substream(seed, &[2, i as u64 + 1]);
        let (f_block_amounts, f_block_regions) =
            gen_fraud_block(fraud_cfg, train_regions, &mut rng)?;
        let mut f_amounts = amounts[..assembly.train_len].to_vec();
        f_amounts.extend_from_slice(&f_block_amounts);
        let mut f_regions = train_regions.to_vec();
        f_regions.extend_from_slice(&f_block_regions);
        fraud.push(Dataset {
            id: i as u32 + 1,
            kind: DatasetKind::Fraud,
            sequence: TransactionSequence::from_parts(&f_amounts, &f_regions, Label::Fraudulent)?,
            train_len: assembly.train_len,
        });
    }

    Ok(ExperimentSet {
        legitimate,
        fraud,
        train_len: assembly.train_len,
        block_len: assembly.block_len,
    })
}

// ---------------------------------------------------------------------------
// Line-oriented records

pub const RECORDS_VERSION_LINE: &str = "# cardpattern records v1";
const RECORDS_HEADER: &str = "dataset_id,kind,index,amount,region,split";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// One transaction in the interchange format. `dataset_id` 0 with an all-
/// train split denotes a raw (unassembled) stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub dataset_id: u32,
    pub kind: DatasetKind,
    pub index: usize,
    pub amount: f64,
    pub region: u32,
    pub split: Split,
}

/// Serializes records. Amounts print with the shortest representation that
/// parses back to the identical bits, so write/read round-trips exactly.
pub fn write_records<W: Write>(mut w: W, records: &[DatasetRecord]) -> std::io::Result<()> {
    let mut buf = String::new();
    buf.push_str(RECORDS_VERSION_LINE);
    buf.push('\n');
    buf.push_str(RECORDS_HEADER);
    buf.push('\n');
    for r in records {
        writeln!(
            buf,
            "{},{},{},{},{},{}",
            r.dataset_id,
            r.kind.code(),
            r.index,
            r.amount,
            r.region,
            r.split.as_str()
        )
        .expect("writing to a String cannot fail");
    }
    w.write_all(buf.as_bytes())
}

pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<DatasetRecord>, DataError> {
    let bad = |line: usize, msg: String| DataError::BadRecord { line, msg };
    let mut records = Vec::new();
    let mut saw_header = false;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| bad(line_no, e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !saw_header {
            if trimmed != RECORDS_HEADER {
                return Err(bad(line_no, format!("expected header {RECORDS_HEADER:?}")));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 6 {
            return Err(bad(
                line_no,
                format!("expected 6 fields, got {}", fields.len()),
            ));
        }
        let parse_err = |what: &str| bad(line_no, format!("unparseable {what} {:?}", fields));
        records.push(DatasetRecord {
            dataset_id: fields[0].parse().map_err(|_| parse_err("dataset_id"))?,
            kind: DatasetKind::from_code(fields[1]).ok_or_else(|| parse_err("kind"))?,
            index: fields[2].parse().map_err(|_| parse_err("index"))?,
            amount: fields[3].parse().map_err(|_| parse_err("amount"))?,
            region: fields[4].parse().map_err(|_| parse_err("region"))?,
            split: match fields[5] {
                "train" => Split::Train,
                "test" => Split::Test,
                _ => return Err(parse_err("split")),
            },
        });
    }
    if !saw_header {
        return Err(bad(0, "missing header line".into()));
    }
    Ok(records)
}

/// A raw stream as records: dataset 0, legitimate, all train.
pub fn sequence_to_records(seq: &TransactionSequence) -> Vec<DatasetRecord> {
    seq.transactions()
        .iter()
        .map(|t| DatasetRecord {
            dataset_id: 0,
            kind: DatasetKind::Legitimate,
            index: t.index,
            amount: t.amount,
            region: t.region,
            split: Split::Train,
        })
        .collect()
}

/// Rebuilds a raw stream from records (expects a single dataset id).
pub fn records_to_sequence(records: &[DatasetRecord]) -> Result<TransactionSequence, DataError> {
    if records.is_empty() {
        return Err(DataError::EmptyAfterFiltering);
    }
    let id = records[0].dataset_id;
    let kind = records[0].kind;
    if records.iter().any(|r| r.dataset_id != id || r.kind != kind) {
        return Err(DataError::BadRecord {
            line: 0,
            msg: "expected a single raw stream, found multiple datasets".into(),
        });
    }
    let amounts: Vec<f64> = records.iter().map(|r| r.amount).collect();
    let regions: Vec<u32> = records.iter().map(|r| r.region).collect();
    Ok(TransactionSequence::from_parts(
        &amounts,
        &regions,
        kind.truth(),
    )?)
}

pub fn experiment_to_records(set: &ExperimentSet) -> Vec<DatasetRecord> {
    let mut records = Vec::new();
    for ds in set.legitimate.iter().chain(&set.fraud) {
        for t in ds.sequence.transactions() {
            records.push(DatasetRecord {
                dataset_id: ds.id,
                kind: ds.kind,
                index: t.index,
                amount: t.amount,
                region: t.region,
                split: if t.index <= ds.train_len {
                    Split::Train
                } else {
                    Split::Test
                },
            });
        }
    }
    records
}

pub fn records_to_experiment(records: &[DatasetRecord]) -> Result<ExperimentSet, DataError> {
    let mut groups: Vec<((DatasetKind, u32), Vec<&DatasetRecord>)> = Vec::new();
    for r in records {
        let key = (r.kind, r.dataset_id);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    let mut legitimate = Vec::new();
    let mut fraud = Vec::new();
    let (mut train_len, mut block_len) = (None, None);
    for ((kind, id), rows) in groups {
        let amounts: Vec<f64> = rows.iter().map(|r| r.amount).collect();
        let regions: Vec<u32> = rows.iter().map(|r| r.region).collect();
        let t_len = rows.iter().filter(|r| r.split == Split::Train).count();
        if rows[..t_len].iter().any(|r| r.split != Split::Train) {
            return Err(DataError::BadRecord {
                line: 0,
                msg: format!(
                    "dataset {}{} mixes train/test out of order",
                    kind.code(),
                    id
                ),
            });
        }
        let b_len = rows.len() - t_len;
        if *train_len.get_or_insert(t_len) != t_len || *block_len.get_or_insert(b_len) != b_len {
            return Err(DataError::BadRecord {
                line: 0,
                msg: "datasets disagree on train/test lengths".into(),
            });
        }
        let ds = Dataset {
            id,
            kind,
            sequence: TransactionSequence::from_parts(&amounts, &regions, kind.truth())?,
            train_len: t_len,
        };
        match kind {
            DatasetKind::Legitimate => legitimate.push(ds),
            DatasetKind::Fraud => fraud.push(ds),
        }
    }
    if legitimate.is_empty() && fraud.is_empty() {
        return Err(DataError::EmptyAfterFiltering);
    }
    Ok(ExperimentSet {
        legitimate,
        fraud,
        train_len: train_len.unwrap_or(0),
        block_len: block_len.unwrap_or(0),
    })
}
