//! Subcommand implementations.

use crate::args::{BenchArgs, MaskgenArgs, MaxlenArgs, PresetArgs, SweepArgs, VerifyArgs};
use graphattn::harness::{build_preset, run_benchmark, run_sweep, sweep_csv, BenchReport};
use graphattn::mask::write_csr_file;
use graphattn::memmodel::{accounting_for, max_context_length, HardwareBudget};
use graphattn::verify::run_suites;
use graphattn::{Error, Result};
use std::path::Path;

pub fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::ZeroDimension { .. } => "zero_dimension",
        Error::DataLength { .. } => "data_length",
        Error::ShapeMismatch { .. } => "shape_mismatch",
        Error::InvalidTolerance(_) => "invalid_tolerance",
        Error::InvalidMask(_) => "invalid_mask",
        Error::InvalidPattern(_) => "invalid_pattern",
        Error::RowOutOfRange { .. } => "row_out_of_range",
        Error::MaskOverlap { .. } => "mask_overlap",
        Error::InvalidState(_) => "invalid_state",
        Error::UnknownAlgorithm(_) => "unknown_algorithm",
        Error::InvalidAccounting(_) => "invalid_accounting",
        Error::BudgetBelowFixed { .. } => "budget_below_fixed",
        Error::UnboundedContext => "unbounded_context",
        Error::FootprintExceeded { .. } => "footprint_exceeded",
        Error::InvalidConfig(_) => "invalid_config",
        Error::MaskFile(_) => "mask_file",
        Error::Io(_) => "io",
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn report_text(report: &BenchReport, format: &str) -> Result<String> {
    match format {
        "json" => {
            let mut text = serde_json::to_string_pretty(report)
                .map_err(|e| Error::InvalidConfig(format!("report serialization: {e}")))?;
            text.push('\n');
            Ok(text)
        }
        "csv" => Ok(format!(
            "{}\n{}\n",
            BenchReport::csv_header(),
            report.csv_row()
        )),
        other => Err(Error::InvalidConfig(format!(
            "unknown format `{other}` (expected json or csv)"
        ))),
    }
}

pub fn bench(args: &BenchArgs) -> Result<i32> {
    let cfg = args.to_config()?;
    let report = run_benchmark(&cfg)?;
    emit(args.out.as_deref(), &report_text(&report, &args.format)?)?;
    if report.oracle_check.as_ref().is_some_and(|c| !c.pass) {
        return Ok(3);
    }
    Ok(0)
}

pub fn sweep(args: &SweepArgs) -> Result<i32> {
    let (kind, base) = args.to_parts()?;
    let rows = run_sweep(kind, &args.lengths, &base)?;
    let text = match args.format.as_str() {
        "csv" => sweep_csv(&rows),
        "json" => {
            let mut text = serde_json::to_string_pretty(&rows)
                .map_err(|e| Error::InvalidConfig(format!("sweep serialization: {e}")))?;
            text.push('\n');
            text
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown format `{other}` (expected json or csv)"
            )))
        }
    };
    emit(args.out.as_deref(), &text)?;
    Ok(0)
}

pub fn preset(args: &PresetArgs) -> Result<i32> {
    let preset = build_preset(args.name()?, args.length, args.seed)?;
    if let Some(path) = &args.out {
        write_csr_file(&preset.union, path)?;
    }
    let legs: Vec<serde_json::Value> = preset
        .legs
        .iter()
        .map(|leg| {
            let mask = leg.csr(preset.len)?;
            Ok(serde_json::json!({
                "kernel": leg.kernel.name(),
                "nnz": mask.nnz(),
                "sparsity_factor": mask.sparsity_factor(),
            }))
        })
        .collect::<Result<_>>()?;
    let summary = serde_json::json!({
        "name": preset.name.name(),
        "length": preset.len,
        "seed": args.seed,
        "legs": legs,
        "union_nnz": preset.union.nnz(),
        "union_sparsity_factor": preset.union.sparsity_factor(),
        "mask_file": args.out.as_ref().map(|p| p.display().to_string()),
    });
    println!("{summary:#}");
    Ok(0)
}

pub fn maxlen(args: &MaxlenArgs) -> Result<i32> {
    let budget = HardwareBudget::new(args.budget_bytes)?;
    let mut text = String::from("algorithm,dtype_bytes,index_bytes,d,heads,s_f,max_L\n");
    for algo in args.algorithms()? {
        let acc = accounting_for(
            algo,
            args.dtype_bytes,
            args.index_bytes,
            args.dim,
            args.heads,
        )?;
        for &s_f in &args.sparsity {
            let max = max_context_length(&acc, s_f, budget)?;
            text.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                algo.name(),
                args.dtype_bytes,
                args.index_bytes,
                args.dim,
                args.heads,
                s_f,
                max
            ));
        }
    }
    emit(args.out.as_deref(), &text)?;
    Ok(0)
}

pub fn verify(args: &VerifyArgs) -> Result<i32> {
    let reports = run_suites(args.suite()?, args.seed, args.cases)?;
    let all_pass = reports.iter().all(|r| r.pass);
    if args.json {
        let text = serde_json::to_string_pretty(&reports)
            .map_err(|e| Error::InvalidConfig(format!("summary serialization: {e}")))?;
        println!("{text}");
    } else {
        for report in &reports {
            println!(
                "suite {}: {} ({} cases)",
                report.suite,
                if report.pass { "PASS" } else { "FAIL" },
                report.cases
            );
            for failure in &report.failures {
                println!("  {failure}");
            }
        }
    }
    Ok(if all_pass { 0 } else { 2 })
}

pub fn maskgen(args: &MaskgenArgs) -> Result<i32> {
    let pattern = args.pattern.resolve_standalone(args.length)?;
    let mask = pattern.generate(args.length)?;
    write_csr_file(&mask, &args.out)?;
    println!(
        "{}",
        serde_json::json!({
            "pattern": format!("{pattern:?}"),
            "length": args.length,
            "nnz": mask.nnz(),
            "sparsity_factor": mask.sparsity_factor(),
            "out": args.out.display().to_string(),
        })
    );
    Ok(0)
}
