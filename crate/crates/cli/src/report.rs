//! `report`: merges result records, emits a human-readable summary and
//! two-column plot data, and evaluates acceptance checks.

use crate::{AppError, ReportArgs};
use anyhow::Context;
use polymer_core::engine::{
    evaluate_checks, merge_records, records_from_csv, records_to_csv, ResultRecord,
};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

fn load_records(path: &Path) -> Result<Vec<ResultRecord>, AppError> {
    let file = if path.is_dir() {
        path.join("results.csv")
    } else {
        path.to_path_buf()
    };
    let text = std::fs::read_to_string(&file)
        .with_context(|| format!("reading {}", file.display()))
        .map_err(AppError::from)?;
    records_from_csv(&text).map_err(|e| AppError::Runtime(e.to_string()))
}

pub fn run_report(args: ReportArgs) -> Result<(), AppError> {
    let mut merged: Vec<ResultRecord> = Vec::new();
    for path in &args.results {
        merged = merge_records(merged, load_records(path)?);
    }
    if args.dry_run {
        println!(
            "{} records from {} source(s)",
            merged.len(),
            args.results.len()
        );
        return Ok(());
    }

    let outdir = PathBuf::from(
        args.output_dir
            .clone()
            .or_else(|| std::env::var("POLYMER_OUT_DIR").ok())
            .unwrap_or_else(|| "out".into()),
    );
    std::fs::create_dir_all(&outdir)
        .map_err(|e| AppError::Runtime(format!("creating {}: {e}", outdir.display())))?;

    std::fs::write(outdir.join("results.csv"), records_to_csv(&merged, false))
        .map_err(|e| AppError::Runtime(e.to_string()))?;

    // human-readable summary grouped by experiment
    let mut summary = String::new();
    let mut by_exp: BTreeMap<&str, Vec<&ResultRecord>> = BTreeMap::new();
    for r in &merged {
        by_exp.entry(&r.experiment).or_default().push(r);
    }
    for (exp, rows) in &by_exp {
        summary.push_str(&format!("# {exp}\n"));
        for r in rows {
            summary.push_str(&format!(
                "  {:<44} {:<26} {:>14.6e} +- {:.3e}  (m={})\n",
                r.params, r.statistic, r.estimate, r.stderr, r.sample_count
            ));
        }
    }
    std::fs::write(outdir.join("summary.txt"), &summary)
        .map_err(|e| AppError::Runtime(e.to_string()))?;
    print!("{summary}");

    // plot data: x = the n parameter when present, one file per statistic
    let mut plots: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for r in &merged {
        if let Some(x) = r.param("n") {
            plots
                .entry((r.experiment.clone(), r.statistic.clone()))
                .or_default()
                .push((x, r.estimate));
        }
    }
    for ((exp, stat), mut xy) in plots {
        if xy.len() < 2 {
            continue;
        }
        xy.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite x"));
        let mut text = String::from("x,y\n");
        for (x, y) in xy {
            text.push_str(&format!("{x},{y:.12e}\n"));
        }
        let name = format!("plot_{exp}_{stat}.csv").replace(['/', ' '], "_");
        std::fs::write(outdir.join(name), text).map_err(|e| AppError::Runtime(e.to_string()))?;
    }

    if args.check {
        let cfg_path = args
            .config
            .as_deref()
            .ok_or_else(|| AppError::Config("--check needs --config with a checks list".into()))?;
        let text = std::fs::read_to_string(cfg_path)
            .map_err(|e| AppError::Config(format!("reading {}: {e}", cfg_path.display())))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| AppError::Config(format!("parsing checks config: {e}")))?;
        let checks: Vec<polymer_core::engine::CheckRule> = table
            .get("checks")
            .cloned()
            .map(|v| v.try_into())
            .transpose()
            .map_err(|e| AppError::Config(format!("checks list: {e}")))?
            .unwrap_or_default();
        if checks.is_empty() {
            return Err(AppError::Config("config has no checks".into()));
        }
        let outcomes = evaluate_checks(&checks, &merged);
        let mut failed = false;
        for o in &outcomes {
            let status = if o.pass { "PASS" } else { "FAIL" };
            println!(
                "[{status}] {} / {} {}: {}",
                o.rule.experiment,
                o.rule.statistic,
                o.rule.params.as_deref().unwrap_or("*"),
                o.detail
            );
            failed |= !o.pass;
        }
        if failed {
            return Err(AppError::ChecksFailed);
        }
    }
    Ok(())
}
