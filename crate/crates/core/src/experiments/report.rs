use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{ExperimentResult, InvalidCell, SweepOutcome, Trial};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "variant,param,P,frame_ms,fft_len,rate,trials";
pub const AUDIT_HEADER: &str = "variant,param,P,frame_ms,fft_len,utterance,true_id,decided_id,distance";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReportFormat {
    Csv,
    Table,
    PlotScript,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "table" => Ok(Self::Table),
            "plot-script" | "plot" => Ok(Self::PlotScript),
            other => Err(Error::InvalidParameter(format!(
                "unknown report format '{other}'"
            ))),
        }
    }
}

/// One row per valid cell, then one flagged row per invalid cell.
pub fn render_csv(results: &[ExperimentResult], invalid: &[InvalidCell]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in results {
        let c = &r.cell;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.4},{}",
            c.variant, c.parameterization, c.p, c.frame_ms, c.fft_len, r.rate, r.trials
        );
    }
    for i in invalid {
        let c = &i.cell;
        let _ = writeln!(
            out,
            "{},{},{},{},{},invalid,0",
            c.variant, c.parameterization, c.p, c.frame_ms, c.fft_len
        );
    }
    out
}

pub fn render_audit(trials: &[Trial]) -> String {
    let mut out = String::from(AUDIT_HEADER);
    out.push('\n');
    for t in trials {
        let c = &t.cell;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:e}",
            c.variant,
            c.parameterization,
            c.p,
            c.frame_ms,
            c.fft_len,
            t.utterance.display(),
            t.true_id,
            t.decided_id,
            t.distance
        );
    }
    out
}

fn variant_order(results: &[ExperimentResult]) -> Vec<String> {
    let mut seen = Vec::new();
    for r in results {
        if !seen.contains(&r.cell.variant) {
            seen.push(r.cell.variant.clone());
        }
    }
    seen
}

/// Rates as a tab-separated table: one row per P, one column group per frame
/// length (longest first), one column per variant within a group.
pub fn render_table(results: &[ExperimentResult]) -> String {
    let columns = variant_order(results);
    let mut frames: Vec<f64> = Vec::new();
    for r in results {
        if !frames.contains(&r.cell.frame_ms) {
            frames.push(r.cell.frame_ms);
        }
    }
    frames.sort_by(|a, b| b.total_cmp(a));
    let ps: BTreeSet<usize> = results.iter().map(|r| r.cell.p).collect();
    let find = |p: usize, ms: f64, v: &str| {
        results
            .iter()
            .find(|r| r.cell.p == p && r.cell.frame_ms == ms && r.cell.variant == v)
    };

    let mut out = String::from("P");
    for &ms in &frames {
        let ffts: BTreeSet<usize> = results
            .iter()
            .filter(|r| r.cell.frame_ms == ms)
            .map(|r| r.cell.fft_len)
            .collect();
        let label = match ffts.iter().next() {
            Some(n) if ffts.len() == 1 => format!("Frame length={n} samples"),
            _ => format!("Frame length={ms} ms"),
        };
        out.push('\t');
        out.push_str(&label);
        out.push_str(&"\t".repeat(columns.len().saturating_sub(1)));
    }
    out.push('\n');
    for _ in &frames {
        for v in &columns {
            out.push('\t');
            out.push_str(v);
        }
    }
    out.push('\n');
    for &p in &ps {
        out.push_str(&p.to_string());
        for &ms in &frames {
            for v in &columns {
                out.push('\t');
                match find(p, ms, v) {
                    Some(r) => {
                        let _ = write!(out, "{:.2}", r.rate);
                    }
                    None => out.push('-'),
                }
            }
        }
        out.push('\n');
    }
    out
}

/// Gnuplot data (one indexed block per variant and frame length) and a
/// script plotting rate against P.
pub fn render_plot(results: &[ExperimentResult], data_file: &str, image_file: &str) -> (String, String) {
    let mut blocks: Vec<(String, f64)> = Vec::new();
    for r in results {
        let key = (r.cell.variant.clone(), r.cell.frame_ms);
        if !blocks.contains(&key) {
            blocks.push(key);
        }
    }
    let mut dat = String::new();
    let mut plots = Vec::new();
    for (i, (variant, ms)) in blocks.iter().enumerate() {
        if i > 0 {
            dat.push_str("\n\n");
        }
        let _ = writeln!(dat, "# {variant} {ms} ms");
        let mut rows: Vec<&ExperimentResult> = results
            .iter()
            .filter(|r| &r.cell.variant == variant && r.cell.frame_ms == *ms)
            .collect();
        rows.sort_by_key(|r| r.cell.p);
        for r in rows {
            let _ = writeln!(dat, "{} {:.4}", r.cell.p, r.rate);
        }
        plots.push(format!(
            "'{data_file}' index {i} using 1:2 with linespoints title '{variant} {ms} ms'"
        ));
    }
    let mut gp = String::new();
    let _ = writeln!(gp, "set terminal pngcairo size 800,600");
    let _ = writeln!(gp, "set output '{image_file}'");
    let _ = writeln!(gp, "set xlabel 'P'");
    let _ = writeln!(gp, "set ylabel 'Identification rate (%)'");
    let _ = writeln!(gp, "set yrange [0:100]");
    let _ = writeln!(gp, "set key bottom right");
    let _ = writeln!(gp, "set grid");
    if plots.is_empty() {
        let _ = writeln!(gp, "# no results to plot");
    } else {
        let _ = writeln!(gp, "plot {}", plots.join(", \\\n     "));
    }
    (dat, gp)
}

fn write(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes the requested reports into `dir` (created if needed) as
/// `<stem>.csv`, `<stem>_table.txt`, `<stem>.dat` + `<stem>.gp`, and always
/// the per-trial audit `<stem>_audit.csv`. Returns the paths written.
pub fn emit_report(
    outcome: &SweepOutcome,
    dir: &Path,
    stem: &str,
    formats: &[ReportFormat],
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for f in formats {
        match f {
            ReportFormat::Csv => write(
                dir.join(format!("{stem}.csv")),
                &render_csv(&outcome.results, &outcome.invalid),
                &mut written,
            )?,
            ReportFormat::Table => write(
                dir.join(format!("{stem}_table.txt")),
                &render_table(&outcome.results),
                &mut written,
            )?,
            ReportFormat::PlotScript => {
                let data = format!("{stem}.dat");
                let (dat, gp) = render_plot(&outcome.results, &data, &format!("{stem}.png"));
                write(dir.join(&data), &dat, &mut written)?;
                write(dir.join(format!("{stem}.gp")), &gp, &mut written)?;
            }
        }
    }
    write(
        dir.join(format!("{stem}_audit.csv")),
        &render_audit(&outcome.trials),
        &mut written,
    )?;
    Ok(written)
}
