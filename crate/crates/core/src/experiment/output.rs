//! CSV output, the cross-run comparison table and the optional plot
//! script.
//!
//! Trajectory files are named `<algorithm>_T<horizon>_seed<seed>.csv` and
//! have the columns
//! `t,loss,regret_cum,regret_avg,vio1_cum,...,vioK_cum,lambda_norm,alpha,gamma,residual`.
//! `summary.csv` has one row per tuple (see [`SUMMARY_COLUMNS`], followed by
//! `vio1_final..vioK_final` and `message`). Floats carry 17 significant
//! digits so they parse back to the same `f64`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::runner::TupleResult;
use crate::error::{Error, Result};
use crate::metrics::GrowthFit;

/// Leading columns of `summary.csv`.
pub const SUMMARY_COLUMNS: [&str; 17] = [
    "algorithm",
    "horizon",
    "seed",
    "tuple_seed",
    "status",
    "regret",
    "regret_avg",
    "vio_max",
    "vio_max_avg",
    "regret_exponent",
    "vio_exponent",
    "path_length",
    "variation",
    "variation_sampled",
    "comparator_max_violation",
    "max_lambda_norm",
    "max_residual",
];

/// Presets that run the generic primal-dual baseline.
const SADDLE_PRESETS: [&str; 4] = ["cao2018", "chen2017", "chen2018", "chen2019"];

/// 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes records as CSV with `\n` line ends, quoting only where needed.
fn csv_text(records: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in records {
        w.write_record(r).expect("writing to memory cannot fail");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory cannot fail")).expect("fields are UTF-8")
}

/// Splits CSV text into records; ragged rows are kept so callers can
/// report them by line.
fn parse_csv(text: &str) -> std::result::Result<Vec<Vec<String>>, String> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes())
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()).map_err(|e| e.to_string()))
        .collect()
}

/// Header of a trajectory file with `k` constraints (`8 + k` columns).
pub fn trajectory_header(k: usize) -> String {
    let mut cols = vec!["t".to_string(), "loss".into(), "regret_cum".into(), "regret_avg".into()];
    cols.extend((1..=k).map(|i| format!("vio{i}_cum")));
    cols.extend(["lambda_norm", "alpha", "gamma", "residual"].map(String::from));
    cols.join(",")
}

/// Trajectory CSV of a successful tuple; `None` for failed ones.
pub fn trajectory_csv(result: &TupleResult) -> Option<String> {
    let run = result.outcome.as_ref().ok()?;
    let k = run.trajectory.num_constraints();
    let mut out = trajectory_header(k);
    out.push('\n');
    for (i, r) in run.trajectory.records.iter().enumerate() {
        let _ = write!(
            out,
            "{},{},{},{}",
            r.t,
            fmt_float(r.loss),
            fmt_float(run.report.regret_cum[i]),
            fmt_float(run.report.regret_avg[i])
        );
        for series in &run.report.vio_cum {
            let _ = write!(out, ",{}", fmt_float(series[i]));
        }
        let _ = writeln!(
            out,
            ",{},{},{},{}",
            fmt_float(r.lambda_norm),
            fmt_float(r.alpha),
            fmt_float(r.gamma),
            fmt_float(r.residual)
        );
    }
    Some(out)
}

pub fn trajectory_file_name(result: &TupleResult) -> String {
    format!("{}_T{}_seed{}.csv", result.key.algorithm, result.key.horizon, result.key.seed)
}

/// One row of `summary.csv`. Numeric fields are `None` for failed tuples
/// (and for exponents that could not be fitted).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub horizon: usize,
    pub seed: u64,
    pub tuple_seed: u64,
    pub ok: bool,
    pub regret: Option<f64>,
    pub regret_avg: Option<f64>,
    pub vio_max: Option<f64>,
    pub vio_max_avg: Option<f64>,
    pub regret_exponent: Option<f64>,
    /// Largest fitted exponent over the constraints.
    pub vio_exponent: Option<f64>,
    pub path_length: Option<f64>,
    pub variation: Option<f64>,
    pub variation_sampled: Option<bool>,
    pub comparator_max_violation: Option<f64>,
    pub max_lambda_norm: Option<f64>,
    pub max_residual: Option<f64>,
    pub vio_final: Vec<f64>,
    pub message: String,
}

pub fn summary_row(result: &TupleResult) -> SummaryRow {
    let key = &result.key;
    let mut row = SummaryRow {
        algorithm: key.algorithm.clone(),
        horizon: key.horizon,
        seed: key.seed,
        tuple_seed: key.tuple_seed,
        ok: result.is_ok(),
        regret: None,
        regret_avg: None,
        vio_max: None,
        vio_max_avg: None,
        regret_exponent: None,
        vio_exponent: None,
        path_length: None,
        variation: None,
        variation_sampled: None,
        comparator_max_violation: None,
        max_lambda_norm: None,
        max_residual: None,
        vio_final: Vec::new(),
        message: String::new(),
    };
    match &result.outcome {
        Err(msg) => row.message = msg.clone(),
        Ok(run) => {
            let rep = &run.report;
            let t = run.trajectory.len().max(1) as f64;
            let finals = rep.final_violations();
            let vio_max = finals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let vio_max = if finals.is_empty() { 0.0 } else { vio_max };
            row.regret = Some(rep.final_regret());
            row.regret_avg = Some(rep.final_regret() / t);
            row.vio_max = Some(vio_max);
            row.vio_max_avg = Some(vio_max / t);
            row.regret_exponent = rep.regret_exponent.map(|g: GrowthFit| g.slope);
            row.vio_exponent = rep.vio_exponents.iter().flatten().map(|g| g.slope).reduce(f64::max);
            row.path_length = Some(rep.path_length);
            row.variation = Some(rep.variation.value);
            row.variation_sampled = Some(rep.variation.sampled);
            row.comparator_max_violation = Some(rep.comparator_max_violation);
            row.max_lambda_norm = Some(run.trajectory.max_lambda_norm());
            row.max_residual = Some(run.trajectory.max_residual());
            row.vio_final = finals;
            row.message = run.notes.join("; ");
        }
    }
    row
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// `summary.csv` text; `k` sets the number of `vio*_final` columns.
pub fn summary_csv(rows: &[SummaryRow], k: usize) -> String {
    let mut header: Vec<String> = SUMMARY_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((1..=k).map(|i| format!("vio{i}_final")));
    header.push("message".into());
    let mut records = vec![header];
    for r in rows {
        let mut fields = vec![
            r.algorithm.clone(),
            r.horizon.to_string(),
            r.seed.to_string(),
            r.tuple_seed.to_string(),
            if r.ok { "ok" } else { "failed" }.to_string(),
            opt(r.regret),
            opt(r.regret_avg),
            opt(r.vio_max),
            opt(r.vio_max_avg),
            opt(r.regret_exponent),
            opt(r.vio_exponent),
            opt(r.path_length),
            opt(r.variation),
            r.variation_sampled.map(|b| b.to_string()).unwrap_or_default(),
            opt(r.comparator_max_violation),
            opt(r.max_lambda_norm),
            opt(r.max_residual),
        ];
        for i in 0..k {
            fields.push(r.vio_final.get(i).map(|v| fmt_float(*v)).unwrap_or_default());
        }
        fields.push(r.message.clone());
        records.push(fields);
    }
    csv_text(&records)
}

/// Reads a `summary.csv` written by [`summary_csv`].
pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let bad = |m: String| Error::Config(format!("summary.csv: {m}"));
    let rows = parse_csv(text).map_err(bad)?;
    let Some((header, body)) = rows.split_first() else {
        return Err(bad("empty file".into()));
    };
    let col = |name: &str| header.iter().position(|h| h == name);
    let mut index = BTreeMap::new();
    for name in SUMMARY_COLUMNS.iter().chain(&["message"]) {
        index.insert(*name, col(name).ok_or_else(|| bad(format!("missing column '{name}'")))?);
    }
    let vio_cols: Vec<usize> = (1..)
        .map_while(|i| col(&format!("vio{i}_final")))
        .collect();
    let mut out = Vec::with_capacity(body.len());
    for (line, fields) in body.iter().enumerate() {
        let line = line + 2;
        if fields.len() != header.len() {
            return Err(bad(format!("line {line}: expected {} fields, found {}", header.len(), fields.len())));
        }
        let get = |name: &str| fields[index[name]].as_str();
        let float = |name: &str| -> Result<Option<f64>> {
            let s = get(name);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| bad(format!("line {line}: {name}: not a number: '{s}'")))
        };
        let int = |name: &str| -> Result<u64> {
            get(name).parse().map_err(|_| bad(format!("line {line}: {name}: not an integer: '{}'", get(name))))
        };
        let vio_final = vio_cols
            .iter()
            .filter(|c| !fields[**c].is_empty())
            .map(|c| fields[*c].parse().map_err(|_| bad(format!("line {line}: bad violation value"))))
            .collect::<Result<Vec<f64>>>()?;
        out.push(SummaryRow {
            algorithm: get("algorithm").to_string(),
            horizon: int("horizon")? as usize,
            seed: int("seed")?,
            tuple_seed: int("tuple_seed")?,
            ok: get("status") == "ok",
            regret: float("regret")?,
            regret_avg: float("regret_avg")?,
            vio_max: float("vio_max")?,
            vio_max_avg: float("vio_max_avg")?,
            regret_exponent: float("regret_exponent")?,
            vio_exponent: float("vio_exponent")?,
            path_length: float("path_length")?,
            variation: float("variation")?,
            variation_sampled: match get("variation_sampled") {
                "" => None,
                s => Some(s == "true"),
            },
            comparator_max_violation: float("comparator_max_violation")?,
            max_lambda_norm: float("max_lambda_norm")?,
            max_residual: float("max_residual")?,
            vio_final,
            message: get("message").to_string(),
        });
    }
    Ok(out)
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "n/a".into())
}

/// Per (algorithm, horizon): mean, min and max of regret(T)/T over seeds,
/// mean of max_k vio_k(T)/T and the mean fitted exponents ("n/a" when no
/// run produced one). Rows are sorted by mean regret(T)/T, ties broken by
/// algorithm name and then horizon.
pub fn compare_table(rows: &[SummaryRow]) -> String {
    struct Group {
        regret: Vec<f64>,
        vio: Vec<f64>,
        regret_exp: Vec<f64>,
        vio_exp: Vec<f64>,
        failed: usize,
    }
    let mut groups: BTreeMap<(String, usize), Group> = BTreeMap::new();
    for r in rows {
        let g = groups.entry((r.algorithm.clone(), r.horizon)).or_insert(Group {
            regret: Vec::new(),
            vio: Vec::new(),
            regret_exp: Vec::new(),
            vio_exp: Vec::new(),
            failed: 0,
        });
        if !r.ok {
            g.failed += 1;
            continue;
        }
        g.regret.extend(r.regret_avg);
        g.vio.extend(r.vio_max_avg);
        g.regret_exp.extend(r.regret_exponent);
        g.vio_exp.extend(r.vio_exponent);
    }
    let mut table: Vec<((String, usize), Group)> = groups.into_iter().collect();
    table.sort_by(|((na, ha), a), ((nb, hb), b)| {
        let ka = mean(&a.regret).unwrap_or(f64::INFINITY);
        let kb = mean(&b.regret).unwrap_or(f64::INFINITY);
        ka.total_cmp(&kb).then_with(|| na.cmp(nb)).then_with(|| ha.cmp(hb))
    });

    let header = [
        "algorithm",
        "T",
        "runs",
        "failed",
        "regret/T",
        "regret/T min",
        "regret/T max",
        "max vio/T",
        "regret exp",
        "vio exp",
    ];
    let mut lines: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for ((name, horizon), g) in &table {
        let min = g.regret.iter().copied().reduce(f64::min);
        let max = g.regret.iter().copied().reduce(f64::max);
        lines.push(vec![
            name.clone(),
            horizon.to_string(),
            g.regret.len().to_string(),
            g.failed.to_string(),
            cell(mean(&g.regret)),
            cell(min),
            cell(max),
            cell(mean(&g.vio)),
            mean(&g.regret_exp).map(|v| format!("{v:.3}")).unwrap_or_else(|| "n/a".into()),
            mean(&g.vio_exp).map(|v| format!("{v:.3}")).unwrap_or_else(|| "n/a".into()),
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for l in &lines {
        let cells: Vec<String> = l.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    if table.iter().any(|((n, _), _)| SADDLE_PRESETS.contains(&n.as_str())) {
        out.push_str(
            "note: cao2018/chen2017/chen2018/chen2019 run one generic primal-dual update with step sizes \
             mapped from each method's published constants; they approximate, not reproduce, those methods.\n",
        );
    }
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes one trajectory CSV per successful tuple plus `summary.csv` into
/// `dir` (created if needed). Returns the paths written, summary last.
pub fn write_csv(results: &[TupleResult], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    let mut k = 0;
    for r in results {
        if let Some(text) = trajectory_csv(r) {
            k = k.max(r.outcome.as_ref().map(|o| o.trajectory.num_constraints()).unwrap_or(0));
            let path = dir.join(trajectory_file_name(r));
            write(&path, &text)?;
            paths.push(path);
        }
    }
    let rows: Vec<SummaryRow> = results.iter().map(summary_row).collect();
    let path = dir.join("summary.csv");
    write(&path, &summary_csv(&rows, k))?;
    paths.push(path);
    Ok(paths)
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plots regret(t)/t and vio_k(t)/t from the trajectory CSVs in this directory.

Usage: python3 plot.py [DIR]   (needs pandas and matplotlib)
"""
import glob
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

here = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))
files = sorted(f for f in glob.glob(os.path.join(here, "*_T*_seed*.csv")))
if not files:
    sys.exit("no trajectory CSVs found in " + here)

runs = {}
for f in files:
    name = os.path.basename(f)[:-4]
    algo, rest = name.rsplit("_T", 1)
    horizon, seed = rest.split("_seed")
    runs.setdefault((int(horizon), algo), []).append(pd.read_csv(f))

for horizon in sorted({h for h, _ in runs}):
    fig, axes = plt.subplots(1, 2, figsize=(11, 4))
    for (h, algo), frames in sorted(runs.items()):
        if h != horizon:
            continue
        df = pd.concat(frames).groupby("t").mean()
        t = df.index.to_numpy()
        axes[0].plot(t, df["regret_avg"], label=algo)
        vio = df[[c for c in df.columns if c.startswith("vio")]].max(axis=1) / t
        axes[1].plot(t, vio, label=algo)
    axes[0].set_ylabel("regret(t)/t")
    axes[1].set_ylabel("max_k vio_k(t)/t")
    for ax in axes:
        ax.set_xlabel("t")
        ax.legend(fontsize=7)
    fig.tight_layout()
    out = os.path.join(here, "plot_T%d.png" % horizon)
    fig.savefig(out, dpi=120)
    print(out)
"#;

/// Writes `plot.py` into `dir`.
pub fn write_plot_script(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("plot.py");
    write(&path, PLOT_SCRIPT)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::runner::TupleKey;
    use crate::experiment::{parse_config, run_experiment, RunOptions};

    fn results(text_algos: &str, horizon: usize) -> Vec<TupleResult> {
        let cfg = parse_config(&format!(
            "[environment]\ntype = \"orr\"\n[run]\nalgorithms = {text_algos}\nhorizons = [{horizon}]\nseeds = [1]\n"
        ))
        .unwrap();
        run_experiment(&cfg, &RunOptions::default()).unwrap()
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            let s = fmt_float(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn empty_results_give_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_csv(&[], dir.path()).unwrap();
        assert_eq!(paths.len(), 1);
        let text = fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("algorithm,horizon,seed"));
        assert!(parse_summary_csv(&text).unwrap().is_empty());
    }

    #[test]
    fn single_round_run() {
        let r = results("[\"vqb_case1\"]", 1);
        let text = trajectory_csv(&r[0]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let f: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(f[2], f[3], "regret_avg equals regret_cum at t = 1");
    }

    #[test]
    fn column_count_is_eight_plus_k() {
        let r = results("[\"vqb_case1\"]", 12);
        let text = trajectory_csv(&r[0]).unwrap();
        let k = r[0].outcome.as_ref().unwrap().trajectory.num_constraints();
        for line in text.lines() {
            assert_eq!(line.split(',').count(), 8 + k);
        }
        assert_eq!(
            trajectory_header(2),
            "t,loss,regret_cum,regret_avg,vio1_cum,vio2_cum,lambda_norm,alpha,gamma,residual"
        );
    }

    #[test]
    fn summary_round_trips() {
        let mut r = results("[\"vqb_case1\", \"chen2017\"]", 20);
        r.push(TupleResult {
            key: TupleKey {
                algorithm: "slater".into(),
                algorithm_index: 2,
                horizon: 20,
                seed: 1,
                tuple_seed: 99,
            },
            outcome: Err("round 3: bad, \"quoted\"\nsecond line".into()),
        });
        let rows: Vec<SummaryRow> = r.iter().map(summary_row).collect();
        let text = summary_csv(&rows, 1);
        assert_eq!(parse_summary_csv(&text).unwrap(), rows);
    }

    #[test]
    fn compare_sorting_ties_and_na() {
        let base = SummaryRow {
            algorithm: String::new(),
            horizon: 10,
            seed: 1,
            tuple_seed: 0,
            ok: true,
            regret: Some(1.0),
            regret_avg: Some(0.1),
            vio_max: Some(0.0),
            vio_max_avg: Some(0.0),
            regret_exponent: Some(0.5),
            vio_exponent: None,
            path_length: None,
            variation: None,
            variation_sampled: None,
            comparator_max_violation: None,
            max_lambda_norm: None,
            max_residual: None,
            vio_final: vec![],
            message: String::new(),
        };
        let row = |name: &str, avg: f64| SummaryRow {
            algorithm: name.into(),
            regret_avg: Some(avg),
            ..base.clone()
        };
        let table = compare_table(&[row("zeta", 0.1), row("alpha", 0.1), row("mid", 0.05)]);
        let names: Vec<&str> = table.lines().skip(1).map(|l| l.split_whitespace().next().unwrap()).collect();
        assert_eq!(names, vec!["mid", "alpha", "zeta"]);
        assert!(table.lines().nth(1).unwrap().ends_with("n/a"));
        assert!(!table.contains("note:"));

        let one = compare_table(&[row("cao2018", 0.2)]);
        assert_eq!(one.lines().filter(|l| l.starts_with("cao2018")).count(), 1);
        assert!(one.contains("note:"));
    }

    #[test]
    fn write_csv_is_deterministic() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let pa = write_csv(&results("[\"vqb_case2\", \"slater\"]", 30), a.path()).unwrap();
        let pb = write_csv(&results("[\"vqb_case2\", \"slater\"]", 30), b.path()).unwrap();
        assert_eq!(pa.len(), 3);
        for (x, y) in pa.iter().zip(&pb) {
            assert_eq!(x.file_name(), y.file_name());
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
        }
    }
}
