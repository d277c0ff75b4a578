//! Command-line driver:
//! `ubmlab <subcommand> --config <file> [--seed S] [--out DIR]`.
//!
//! Subcommands mirror the experiment kinds (sample, evolve, cov-check,
//! fh-static, fh-multitime, fredholm, loop-eqn, gmc, decoupling, rigidity);
//! `report` re-reads an emitted JSON report and prints its verdicts.
//! Exit code 0 only if every verdict passes.

use std::path::PathBuf;
use std::process::ExitCode;

use ubm_lab::config::ExperimentConfig;
use ubm_lab::estimate::Verdict;
use ubm_lab::report::Report;
use ubm_lab::runner::{run_experiment, RunOptions};

const KINDS: &[&str] = &[
    "sample",
    "evolve",
    "cov-check",
    "fh-static",
    "fh-multitime",
    "fredholm",
    "loop-eqn",
    "gmc",
    "decoupling",
    "rigidity",
];

fn usage() -> String {
    format!(
        "usage: ubmlab <subcommand> --config <file> [--seed S] [--out DIR]\n\
         subcommands: {} report\n\
         env: UBMLAB_WORKERS limits the worker count",
        KINDS.join(" ")
    )
}

struct Args {
    subcommand: String,
    config: Option<PathBuf>,
    seed: u64,
    out: Option<PathBuf>,
}

fn parse_args(mut argv: std::env::Args) -> Result<Args, String> {
    let _exe = argv.next();
    let subcommand = argv.next().ok_or_else(usage)?;
    let mut config = None;
    let mut seed = 42u64;
    let mut out = None;
    while let Some(flag) = argv.next() {
        match flag.as_str() {
            "--config" => {
                let v = argv.next().ok_or("--config needs a value")?;
                config = Some(PathBuf::from(v));
            }
            "--seed" => {
                let v = argv.next().ok_or("--seed needs a value")?;
                seed = v.parse().map_err(|e| format!("bad seed: {e}"))?;
            }
            "--out" => {
                let v = argv.next().ok_or("--out needs a value")?;
                out = Some(PathBuf::from(v));
            }
            other => return Err(format!("unknown flag {other}\n{}", usage())),
        }
    }
    Ok(Args {
        subcommand,
        config,
        seed,
        out,
    })
}

fn print_report(report: &Report) {
    for row in &report.rows {
        let verdict = match row.verdict {
            Some(Verdict::Pass) => "pass",
            Some(Verdict::Fail) => "FAIL",
            Some(Verdict::Flag) => "flag",
            None => "-",
        };
        let mut line = format!("[{verdict}] {}", row.label);
        for col in &row.columns {
            match &col.value {
                ubm_lab::report::ColValue::Float(v) => {
                    line.push_str(&format!(" {}={v:.6e}", col.name))
                }
                ubm_lab::report::ColValue::Int(v) => line.push_str(&format!(" {}={v}", col.name)),
                ubm_lab::report::ColValue::Text(t) => line.push_str(&format!(" {}={t}", col.name)),
            }
        }
        if let Some(note) = &row.note {
            line.push_str(&format!(" note={note}"));
        }
        println!("{line}");
    }
}

fn run() -> Result<bool, String> {
    let args = parse_args(std::env::args())?;
    if args.subcommand == "report" {
        let path = args.config.ok_or("report needs --config <report.json>")?;
        let text =
            std::fs::read_to_string(&path).map_err(|e| format!("reading {path:?}: {e}"))?;
        let report = Report::from_json(&text)?;
        println!(
            "# kind={} tool_version={} master_seed={}",
            report.kind, report.tool_version, report.master_seed
        );
        print_report(&report);
        return Ok(report.all_passed());
    }
    if !KINDS.contains(&args.subcommand.as_str()) {
        return Err(format!("unknown subcommand {}\n{}", args.subcommand, usage()));
    }
    let path = args.config.ok_or_else(|| format!("{} needs --config", args.subcommand))?;
    let text = std::fs::read_to_string(&path).map_err(|e| format!("reading {path:?}: {e}"))?;
    let cfg = ExperimentConfig::from_json(&text)?;
    if cfg.kind_name() != args.subcommand {
        return Err(format!(
            "config kind {} does not match subcommand {}",
            cfg.kind_name(),
            args.subcommand
        ));
    }
    let report = run_experiment(
        &cfg,
        &RunOptions {
            seed: args.seed,
            out_dir: args.out,
        },
    )?;
    print_report(&report);
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
