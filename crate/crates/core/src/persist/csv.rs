use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::PersistError;
use crate::protocol::{EpochRecord, MetricsLog, TransferReport};

pub const METRICS_HEADER: &str = "round,epoch,split,loss,accuracy,lr";

/// Fixed-point rendering with exactly nine significant digits
/// (`std::f64::consts::LN_10` -> `2.30258509`, `0.1` -> `0.100000000`).
pub fn format_sig9(v: f64) -> Result<String, PersistError> {
    if !v.is_finite() {
        return Err(PersistError::NonFinite(format!("{v}")));
    }
    if v == 0.0 {
        return Ok("0.00000000".to_string());
    }
    let exponent = v.abs().log10().floor() as i32;
    let decimals = |e: i32| (8 - e).max(0) as usize;
    let mut text = format!("{:.*}", decimals(exponent), v);
    // rounding can carry into a new leading digit (9.999999999 -> 10.0000000)
    let digits = text.chars().filter(char::is_ascii_digit).skip_while(|&c| c == '0').count();
    if digits > 9 {
        text = format!("{:.*}", decimals(exponent + 1), v);
    } else if digits < 9 && decimals(exponent) > 0 {
        // log10 overestimated the magnitude
        text = format!("{:.*}", decimals(exponent - 1), v);
    }
    Ok(text)
}

pub fn render_metrics_csv(log: &MetricsLog) -> Result<String, PersistError> {
    let mut records: Vec<&EpochRecord> = log.records().iter().collect();
    records.sort_by_key(|r| (r.round, r.epoch, r.split));
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.round,
            r.epoch,
            r.split,
            format_sig9(r.loss)?,
            format_sig9(r.accuracy)?,
            format_sig9(r.lr)?
        )
        .expect("write to string");
    }
    Ok(out)
}

pub fn write_metrics_csv(log: &MetricsLog, path: impl AsRef<Path>) -> Result<(), PersistError> {
    let text = render_metrics_csv(log)?;
    fs::write(path.as_ref(), text).map_err(|e| PersistError::io(path.as_ref(), e))
}

pub fn parse_metrics_csv(text: &str) -> Result<MetricsLog, PersistError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == METRICS_HEADER => {}
        _ => return Err(PersistError::Csv { line: 1, message: format!("expected header `{METRICS_HEADER}`") }),
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let bad = |message: String| PersistError::Csv { line: i + 1, message };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(format!("expected 6 fields, found {}", f.len())));
        }
        let real = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number `{s}`")));
        records.push(EpochRecord {
            round: f[0].parse().map_err(|_| bad(format!("bad round `{}`", f[0])))?,
            epoch: f[1].parse().map_err(|_| bad(format!("bad epoch `{}`", f[1])))?,
            split: f[2].parse().map_err(|_| bad(format!("bad split `{}`", f[2])))?,
            loss: real(f[3])?,
            accuracy: real(f[4])?,
            lr: real(f[5])?,
        });
    }
    MetricsLog::from_records(records).map_err(|e| PersistError::Csv { line: 0, message: e.to_string() })
}

pub fn read_metrics_csv(path: impl AsRef<Path>) -> Result<MetricsLog, PersistError> {
    let text = fs::read_to_string(path.as_ref()).map_err(|e| PersistError::io(path.as_ref(), e))?;
    parse_metrics_csv(&text)
}

/// `seed,baseline_accuracy,pretrained_accuracy,difference`, one row per pair.
pub fn render_report_csv(report: &TransferReport) -> Result<String, PersistError> {
    let mut out = String::from("seed,baseline_accuracy,pretrained_accuracy,difference\n");
    for p in &report.pairs {
        writeln!(
            out,
            "{},{},{},{}",
            p.seed,
            format_sig9(p.baseline_accuracy())?,
            format_sig9(p.pretrained_accuracy())?,
            format_sig9(p.difference())?
        )
        .expect("write to string");
    }
    Ok(out)
}
