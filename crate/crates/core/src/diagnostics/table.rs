use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{DiagnosticsError, EnergyReport};

pub const CSV_COLUMNS: [&str; 29] = [
    "t",
    "dt",
    "m",
    "P1",
    "P2",
    "P3",
    "E",
    "E_k",
    "E_i",
    "E_p1",
    "E_p2",
    "D1",
    "D2",
    "D_div",
    "D3",
    "D_N",
    "D_cross",
    "drift_d",
    "drift_dw",
    "support_margin",
    "lemma_slack",
    "grad_u_sq",
    "u_sq",
    "N_sq",
    "Ad_sq",
    "dAd_sq",
    "nx",
    "ny",
    "nz",
];

fn row(r: &EnergyReport) -> Vec<String> {
    let f = |x: f64| format!("{x:e}");
    let mut v: Vec<String> = [
        r.t,
        r.dt,
        r.mass,
        r.momentum[0],
        r.momentum[1],
        r.momentum[2],
        r.e_total,
        r.e_kinetic,
        r.e_internal,
        r.e_rotational,
        r.e_elastic,
        r.d1,
        r.d2,
        r.d_div,
        r.d3,
        r.d_n,
        r.d_cross,
        r.drift_d,
        r.drift_dw,
        r.support_margin,
    ]
    .into_iter()
    .map(f)
    .collect();
    v.push(r.lemma_slack.map(f).unwrap_or_default());
    v.extend([r.grad_u_sq, r.u_sq, r.n_sq, r.ad_sq, r.dad_sq].into_iter().map(f));
    v.extend(r.grid.iter().map(|n| n.to_string()));
    v
}

/// Write `# config_hash: …` followed by a header row and one row per report.
/// Floats use Rust's shortest round-trip representation, so the file is
/// byte-identical across reruns.
pub fn write_csv(
    path: impl AsRef<Path>,
    config_hash: &str,
    reports: &[EnergyReport],
) -> Result<(), DiagnosticsError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# config_hash: {config_hash}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in reports {
        w.write_record(row(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_csv`]; returns the recorded config hash and the reports.
pub fn read_csv(path: impl AsRef<Path>) -> Result<(String, Vec<EnergyReport>), DiagnosticsError> {
    let mut rd = BufReader::new(File::open(path)?);
    let mut first = String::new();
    rd.read_line(&mut first)?;
    let hash = first
        .trim_end()
        .strip_prefix("# config_hash: ")
        .ok_or_else(|| DiagnosticsError::Table("missing `# config_hash:` line".into()))?
        .to_string();
    let mut r = csv::Reader::from_reader(rd);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_COLUMNS {
        return Err(DiagnosticsError::Table(format!("unexpected columns {header:?}")));
    }
    let mut reports = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, DiagnosticsError> {
            rec[i].parse::<f64>().map_err(|e| {
                DiagnosticsError::Table(format!("row {}, column {}: {e}", line + 1, CSV_COLUMNS[i]))
            })
        };
        let cells = |i: usize| -> Result<usize, DiagnosticsError> {
            rec[i]
                .parse::<usize>()
                .map_err(|e| DiagnosticsError::Table(format!("row {}, column {}: {e}", line + 1, CSV_COLUMNS[i])))
        };
        reports.push(EnergyReport {
            t: num(0)?,
            dt: num(1)?,
            mass: num(2)?,
            momentum: [num(3)?, num(4)?, num(5)?],
            e_total: num(6)?,
            e_kinetic: num(7)?,
            e_internal: num(8)?,
            e_rotational: num(9)?,
            e_elastic: num(10)?,
            d1: num(11)?,
            d2: num(12)?,
            d_div: num(13)?,
            d3: num(14)?,
            d_n: num(15)?,
            d_cross: num(16)?,
            drift_d: num(17)?,
            drift_dw: num(18)?,
            support_margin: num(19)?,
            lemma_slack: if rec[20].is_empty() { None } else { Some(num(20)?) },
            grad_u_sq: num(21)?,
            u_sq: num(22)?,
            n_sq: num(23)?,
            ad_sq: num(24)?,
            dad_sq: num(25)?,
            grid: [cells(26)?, cells(27)?, cells(28)?],
        });
    }
    Ok((hash, reports))
}
