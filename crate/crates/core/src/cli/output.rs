//! CSV results and the gain tables printed from them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::eval::RateReport;
use crate::theory::GainRow;

use super::CliError;

pub const CSV_HEADER: &str = "scheme,snr_db,alpha,beta,metric,mt_or_bs_id,value,stderr,drops";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub scheme: String,
    pub snr_db: f64,
    pub alpha: f64,
    pub beta: f64,
    pub metric: String,
    /// MT index for `per_mt_rate`, BS index for `per_bs_sum`, 0 for `cluster_sum`.
    pub mt_or_bs_id: usize,
    pub value: f64,
    pub stderr: f64,
    pub drops: usize,
}

pub fn report_rows(scheme: &str, snr_db: f64, alpha: f64, beta: f64, r: &RateReport) -> Vec<CsvRow> {
    let row = |metric: &str, id, value, stderr| CsvRow {
        scheme: scheme.into(),
        snr_db,
        alpha,
        beta,
        metric: metric.into(),
        mt_or_bs_id: id,
        value,
        stderr,
        drops: r.num_drops_used,
    };
    let mut rows = Vec::new();
    for (u, (&v, &e)) in r.per_mt_rate.iter().zip(&r.per_mt_stderr).enumerate() {
        rows.push(row("per_mt_rate", u, v, e));
    }
    for (b, (&v, &e)) in r.per_bs_sum.iter().zip(&r.per_bs_stderr).enumerate() {
        rows.push(row("per_bs_sum", b, v, e));
    }
    rows.push(row("cluster_sum", 0, r.cluster_sum, r.stderr));
    rows
}

/// Rows of the closed-form curves: one MT per BS, two BSs, no sampling.
pub fn theory_rows(alpha: f64, beta: f64, table: &[GainRow]) -> Vec<CsvRow> {
    let mut rows = Vec::new();
    for (name, pick) in [
        ("full_reuse", (|r: &GainRow| r.full_reuse) as fn(&GainRow) -> f64),
        ("orthogonal", |r| r.orthogonal),
        ("ia", |r| r.ia),
        ("jt", |r| r.jt),
    ] {
        for r in table {
            let v = pick(r);
            let row = |metric: &str, id, value| CsvRow {
                scheme: name.into(),
                snr_db: r.snr_db,
                alpha,
                beta,
                metric: metric.into(),
                mt_or_bs_id: id,
                value,
                stderr: 0.0,
                drops: 0,
            };
            rows.extend([
                row("per_mt_rate", 0, v),
                row("per_mt_rate", 1, v),
                row("per_bs_sum", 0, v),
                row("per_bs_sum", 1, v),
                row("cluster_sum", 0, 2.0 * v),
            ]);
        }
    }
    rows
}

pub fn write_csv(rows: &[CsvRow], out: impl Write) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn read_csv(input: impl Read) -> Result<Vec<CsvRow>, CliError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| CliError::Config(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(CliError::Config(format!("unexpected CSV header, expected `{CSV_HEADER}`")));
    }
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| CliError::Config(format!("CSV record {}: {e}", i + 1))))
        .collect()
}

/// Key ordering floats by their bit patterns' numeric value.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// `(alpha, beta) -> snr -> scheme -> cluster sum`, schemes in first-seen order.
type Grouped = BTreeMap<(Key, Key), BTreeMap<Key, Vec<(String, f64)>>>;

fn group_cluster_sums(rows: &[CsvRow]) -> Grouped {
    let mut out: Grouped = BTreeMap::new();
    for r in rows.iter().filter(|r| r.metric == "cluster_sum") {
        out.entry((Key(r.alpha), Key(r.beta)))
            .or_default()
            .entry(Key(r.snr_db))
            .or_default()
            .push((r.scheme.clone(), r.value));
    }
    out
}

/// Percentage gain of every scheme's cluster sum rate over `baseline`, per
/// scenario and SNR point. Uses only the rows given.
pub fn gains_table(rows: &[CsvRow], baseline: &str) -> Result<String, CliError> {
    let grouped = group_cluster_sums(rows);
    if !rows.iter().any(|r| r.scheme == baseline) {
        let mut names: Vec<&str> = rows.iter().map(|r| r.scheme.as_str()).collect();
        names.dedup();
        return Err(CliError::Config(format!(
            "baseline `{baseline}` not in CSV (schemes: {})",
            names.join(", ")
        )));
    }
    let mut out = String::new();
    for ((alpha, beta), by_snr) in &grouped {
        let schemes: Vec<&str> = by_snr
            .values()
            .next()
            .map(|v| v.iter().map(|(s, _)| s.as_str()).filter(|s| *s != baseline).collect())
            .unwrap_or_default();
        let _ = writeln!(out, "alpha={} beta={} gain over {baseline} (%)", alpha.0, beta.0);
        let _ = write!(out, "{:>8}", "snr_db");
        for s in &schemes {
            let _ = write!(out, " {s:>18}");
        }
        out.push('\n');
        for (snr, values) in by_snr {
            let base = values.iter().find(|(s, _)| s == baseline).map(|(_, v)| *v);
            let _ = write!(out, "{:>8}", snr.0);
            for s in &schemes {
                let cell = match (base, values.iter().find(|(n, _)| n == s)) {
                    (Some(b), Some((_, v))) if b != 0.0 => format!("{:.1}", (v / b - 1.0) * 100.0),
                    _ => "-".into(),
                };
                let _ = write!(out, " {cell:>18}");
            }
            out.push('\n');
        }
    }
    Ok(out)
}

/// Cluster sum rates per scenario and SNR, one column per scheme.
pub fn rate_table(rows: &[CsvRow]) -> String {
    let mut out = String::new();
    for ((alpha, beta), by_snr) in group_cluster_sums(rows) {
        let schemes: Vec<String> = by_snr
            .values()
            .next()
            .map(|v| v.iter().map(|(s, _)| s.clone()).collect())
            .unwrap_or_default();
        let _ = writeln!(out, "alpha={} beta={} cluster sum rate (bit/s/Hz)", alpha.0, beta.0);
        let _ = write!(out, "{:>8}", "snr_db");
        for s in &schemes {
            let _ = write!(out, " {s:>26}");
        }
        out.push('\n');
        for (snr, values) in by_snr {
            let _ = write!(out, "{:>8}", snr.0);
            for s in &schemes {
                let cell = values.iter().find(|(n, _)| n == s).map_or("-".into(), |(_, v)| format!("{v:.3}"));
                let _ = write!(out, " {cell:>26}");
            }
            out.push('\n');
        }
    }
    out
}

/// Loss of each quantized scheme relative to its ideal-feedback run,
/// averaged over the SNR points.
pub fn feedback_losses(rows: &[CsvRow]) -> Vec<(f64, f64, String, f64)> {
    let mut out = Vec::new();
    for ((alpha, beta), by_snr) in group_cluster_sums(rows) {
        let quantized: Vec<String> = by_snr
            .values()
            .next()
            .map(|v| v.iter().filter(|(s, _)| s.contains('@')).map(|(s, _)| s.clone()).collect())
            .unwrap_or_default();
        for q in quantized {
            let ideal = q.split('@').next().unwrap_or_default();
            let losses: Vec<f64> = by_snr
                .values()
                .filter_map(|v| {
                    let i = v.iter().find(|(s, _)| s == ideal)?.1;
                    let x = v.iter().find(|(s, _)| *s == q)?.1;
                    (i > 0.0).then(|| 100.0 * (1.0 - x / i))
                })
                .collect();
            if !losses.is_empty() {
                out.push((alpha.0, beta.0, q, losses.iter().sum::<f64>() / losses.len() as f64));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(scheme: &str, snr: f64, value: f64) -> CsvRow {
        CsvRow {
            scheme: scheme.into(),
            snr_db: snr,
            alpha: 1.0,
            beta: 0.25,
            metric: "cluster_sum".into(),
            mt_or_bs_id: 0,
            value,
            stderr: 0.0,
            drops: 10,
        }
    }

    #[test]
    fn header_is_exact() {
        let mut buf = Vec::new();
        write_csv(&[row("ia", 0.0, 1.5)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().nth(1).unwrap(), "ia,0.0,1.0,0.25,cluster_sum,0,1.5,0.0,10");
        assert_eq!(read_csv(text.as_bytes()).unwrap(), vec![row("ia", 0.0, 1.5)]);
    }

    #[test]
    fn gains_from_rows() {
        let rows = vec![row("orthogonal", 15.0, 2.0), row("ia", 15.0, 4.0), row("jt", 15.0, 5.0)];
        let t = gains_table(&rows, "orthogonal").unwrap();
        assert!(t.contains("100.0") && t.contains("150.0"), "{t}");
        assert!(gains_table(&rows, "wmmse").is_err());
    }

    #[test]
    fn losses_pair_ideal_and_quantized() {
        let rows = vec![
            row("eigenbeams", 0.0, 10.0),
            row("eigenbeams@lte_dual_stage", 0.0, 8.0),
            row("eigenbeams", 5.0, 10.0),
            row("eigenbeams@lte_dual_stage", 5.0, 9.0),
        ];
        let l = feedback_losses(&rows);
        assert_eq!(l.len(), 1);
        assert!((l[0].3 - 15.0).abs() < 1e-12);
    }
}
