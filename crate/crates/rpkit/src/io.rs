//! Transaction CSV, JSON-lines results and small file helpers.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rpkit_core::imputation::{ConvergenceTrace, MonteCarloEstimate};
use rpkit_core::panel::{
    clean_transactions, CleaningConfig, CleaningReport, RawTransaction, TransactionPanel,
};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const REQUIRED_COLUMNS: [&str; 5] =
    ["household_id", "date", "item_id", "quantity", "expenditure"];
pub const FLAG_COLUMNS: [&str; 2] = ["outside_country", "vendor_error"];

/// Parsed rows plus the number of rows that could not be parsed.
#[derive(Debug, Clone, Default)]
pub struct ParsedTransactions {
    pub rows: Vec<RawTransaction>,
    pub malformed: u64,
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "f" | "no" | "n" => Some(false),
        "1" | "true" | "t" | "yes" | "y" => Some(true),
        _ => None,
    }
}

/// Empty means absent; anything else must parse as a number.
fn parse_amount(s: &str) -> Option<Option<f64>> {
    if s.is_empty() {
        Some(None)
    } else {
        s.parse().ok().map(Some)
    }
}

/// Streams transaction rows. A missing required column is an error; a row
/// with the wrong field count, an invalid date, an unparsable number or an
/// unrecognised flag is counted as malformed and skipped. Iteration stops at
/// the first IO error, which [`TransactionReader::finish`] reports.
pub struct TransactionReader<'p, R: Read> {
    csv: csv::Reader<R>,
    path: &'p Path,
    width: usize,
    cols: [usize; 5],
    flags: [Option<usize>; 2],
    record: csv::StringRecord,
    malformed: u64,
    error: Option<CliError>,
}

impl<'p, R: Read> TransactionReader<'p, R> {
    pub fn new(reader: R, path: &'p Path) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new()
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = csv
            .headers()
            .map_err(|e| CliError::format(path, e))?
            .clone();
        let index = |name: &str| headers.iter().position(|h| h == name);
        let mut cols = [0usize; 5];
        for (slot, name) in cols.iter_mut().zip(REQUIRED_COLUMNS) {
            *slot = index(name)
                .ok_or_else(|| CliError::format(path, format!("missing column `{name}`")))?;
        }
        Ok(TransactionReader {
            path,
            width: headers.len(),
            cols,
            flags: FLAG_COLUMNS.map(index),
            csv,
            record: csv::StringRecord::new(),
            malformed: 0,
            error: None,
        })
    }

    fn parse(&self) -> Option<RawTransaction> {
        let field = |i: usize| self.record.get(i).unwrap_or("");
        let flag = |c: Option<usize>| c.map_or(Some(false), |i| parse_flag(field(i)));
        let row = RawTransaction {
            household_id: field(self.cols[0]).to_string(),
            date: field(self.cols[1]).parse().ok()?,
            item_id: field(self.cols[2]).to_string(),
            quantity: parse_amount(field(self.cols[3]))?,
            expenditure: parse_amount(field(self.cols[4]))?,
            outside_country: flag(self.flags[0])?,
            vendor_error: flag(self.flags[1])?,
        };
        (!row.household_id.is_empty() && !row.item_id.is_empty()).then_some(row)
    }

    /// Malformed-row count, or the IO error that ended the stream.
    pub fn finish(self) -> Result<u64> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.malformed),
        }
    }
}

impl<R: Read> Iterator for TransactionReader<'_, R> {
    type Item = RawTransaction;

    fn next(&mut self) -> Option<RawTransaction> {
        while self.error.is_none() {
            match self.csv.read_record(&mut self.record) {
                Ok(false) => return None,
                Ok(true) => {}
                Err(e) if e.is_io_error() => {
                    self.error = Some(CliError::format(self.path, e));
                    return None;
                }
                Err(_) => {
                    self.malformed += 1;
                    continue;
                }
            }
            if self.record.len() == self.width {
                if let Some(row) = self.parse() {
                    return Some(row);
                }
            }
            self.malformed += 1;
        }
        None
    }
}

/// Reads every transaction row into memory.
pub fn read_transactions<R: Read>(reader: R, path: &Path) -> Result<ParsedTransactions> {
    let mut rows = TransactionReader::new(reader, path)?;
    let collected = rows.by_ref().collect();
    Ok(ParsedTransactions {
        rows: collected,
        malformed: rows.finish()?,
    })
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

pub fn ingest(path: &Path, config: &CleaningConfig) -> Result<(TransactionPanel, CleaningReport)> {
    let mut rows = TransactionReader::new(open(path)?, path)?;
    let cleaned = clean_transactions(rows.by_ref(), 0, config);
    let malformed = rows.finish()?;
    let (panel, mut report) = cleaned?;
    report.malformed = malformed;
    report.rows_read += malformed;
    Ok((panel, report))
}

fn fmt_amount(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Writes rows with the required columns, plus the flag columns when any row is flagged.
pub fn write_transactions<W: Write>(rows: &[RawTransaction], writer: W) -> std::io::Result<()> {
    let flagged = rows.iter().any(|r| r.outside_country || r.vendor_error);
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = REQUIRED_COLUMNS.to_vec();
    if flagged {
        header.extend(FLAG_COLUMNS);
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.household_id.clone(),
            r.date.to_string(),
            r.item_id.clone(),
            fmt_amount(r.quantity),
            fmt_amount(r.expenditure),
        ];
        if flagged {
            rec.push(u8::from(r.outside_country).to_string());
            rec.push(u8::from(r.vendor_error).to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()
}

pub fn write_panel(panel: &TransactionPanel, path: &Path) -> Result<()> {
    let file = create(path)?;
    write_transactions(&panel.to_rows(), file).map_err(|e| CliError::io(path, e))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::format(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).map_err(|e| CliError::format(path, e))
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut f = create(path)?;
    for item in items {
        serde_json::to_writer(&mut f, item).map_err(|e| CliError::format(path, e))?;
        f.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    }
    f.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| CliError::format(path, format!("line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}

/// One line of the per-household results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseholdResult {
    pub household_id: String,
    pub days: usize,
    pub missing_cells: usize,
    pub draws: usize,
    pub aei_hat: Option<f64>,
    pub aei_sd: Option<f64>,
    pub warp_aei_hat: Option<f64>,
    pub rho_hat: Option<f64>,
    pub stabilization_draw: Option<usize>,
    /// Why the household was not estimated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

impl HouseholdResult {
    pub fn estimated(
        days: usize,
        est: &MonteCarloEstimate,
        trace: Option<&ConvergenceTrace>,
    ) -> Self {
        HouseholdResult {
            household_id: est.household_id.clone(),
            days,
            missing_cells: est.missing_cells,
            draws: est.draws,
            aei_hat: Some(est.aei_hat),
            aei_sd: Some(est.aei_sd),
            warp_aei_hat: Some(est.warp_aei_hat),
            rho_hat: Some(est.rho_hat),
            stabilization_draw: trace.map(|t| t.stabilization_draw),
            skipped: None,
        }
    }

    pub fn skipped(household_id: &str, days: usize, reason: String) -> Self {
        HouseholdResult {
            household_id: household_id.to_string(),
            days,
            missing_cells: 0,
            draws: 0,
            aei_hat: None,
            aei_sd: None,
            warp_aei_hat: None,
            rho_hat: None,
            stabilization_draw: None,
            skipped: Some(reason),
        }
    }
}

/// One line of the per-draw file: every draw's GARP and WARP index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawRecord {
    pub household_id: String,
    pub garp_aei: Vec<f64>,
    pub warp_aei: Vec<f64>,
}
