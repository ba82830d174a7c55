//! Result files: comma-separated, LF line endings, UTF-8, floats printed
//! with 6 significant digits. Files are written atomically (temp file in
//! the target directory, then rename).

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

use super::runner::{RegretRecord, SummaryRow};

pub const RECORDS_HEADER: &str =
    "seed,agent,step,action,reward,expected_reward,best_expected,instant_regret,cum_regret";
pub const SUMMARY_HEADER: &str = "agent,metric,mean,std,seeds";

/// Format with 6 significant digits in plain decimal notation.
pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn records_to_csv(records: &[RegretRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.seed,
            r.agent,
            r.step,
            r.action,
            r.reward,
            sig6(r.expected_reward),
            sig6(r.best_expected),
            sig6(r.instant_regret),
            sig6(r.cum_regret),
        ));
    }
    out
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.agent,
            r.metric,
            sig6(r.mean),
            sig6(r.std),
            r.seeds,
        ));
    }
    out
}

/// Atomic text write: temp file next to the target, then rename.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(content.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Write the records and summary files.
pub fn write_outputs(
    records: &[RegretRecord],
    summary: &[SummaryRow],
    records_path: &Path,
    summary_path: &Path,
) -> Result<()> {
    write_atomic(records_path, &records_to_csv(records))?;
    write_atomic(summary_path, &summary_to_csv(summary))?;
    Ok(())
}

/// Parse a records file back (used by `summarize`).
pub fn parse_records(path: &Path) -> Result<Vec<RegretRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == RECORDS_HEADER => {}
        Some((_, header)) => {
            return Err(Error::parse(
                path,
                1,
                format!("unexpected header `{header}`"),
            ))
        }
        None => return Err(Error::parse(path, 1, "empty records file")),
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 9 fields, got {}", fields.len()),
            ));
        }
        let field_err =
            |name: &str, v: &str| Error::parse(path, line_no, format!("bad {name} `{v}`"));
        records.push(RegretRecord {
            seed: fields[0].parse().map_err(|_| field_err("seed", fields[0]))?,
            agent: fields[1].to_string(),
            step: fields[2].parse().map_err(|_| field_err("step", fields[2]))?,
            action: fields[3]
                .parse()
                .map_err(|_| field_err("action", fields[3]))?,
            reward: fields[4]
                .parse::<u8>()
                .ok()
                .filter(|&r| r <= 1)
                .ok_or_else(|| field_err("reward", fields[4]))?,
            expected_reward: fields[5]
                .parse()
                .map_err(|_| field_err("expected_reward", fields[5]))?,
            best_expected: fields[6]
                .parse()
                .map_err(|_| field_err("best_expected", fields[6]))?,
            instant_regret: fields[7]
                .parse()
                .map_err(|_| field_err("instant_regret", fields[7]))?,
            cum_regret: fields[8]
                .parse()
                .map_err(|_| field_err("cum_regret", fields[8]))?,
        });
    }
    Ok(records)
}
