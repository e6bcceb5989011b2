//! Length sweeps: measure a kernel and the dense reference across ascending
//! context lengths, holding either the window shape or the sparsity factor
//! constant.

use crate::error::{Error, Result};
use crate::harness::bench::{run_benchmark, BenchAlgo, BenchConfig, BenchReport, MaskSource};
use crate::mask::{fit_dilated1d_window, fit_dilated2d_block, fit_local_window, MaskPattern};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Keep the pattern parameters fixed; sparsity decays roughly as `1/L`.
    ConstantWindow,
    /// Refit the pattern parameter at each length to hold sparsity fixed.
    ConstantSparsity,
}

impl SweepKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ConstantWindow => "constant_window",
            Self::ConstantSparsity => "constant_sparsity",
        }
    }
}

impl std::str::FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant_window" => Ok(Self::ConstantWindow),
            "constant_sparsity" => Ok(Self::ConstantSparsity),
            other => Err(Error::InvalidConfig(format!(
                "unknown sweep kind `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub kind: SweepKind,
    pub len: usize,
    pub algo: BenchAlgo,
    pub pattern: MaskPattern,
    pub outcome: SweepOutcome,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOutcome {
    Measured(Box<BenchReport>),
    /// The leg was not run; dense legs whose estimated footprint exceeds the
    /// configured cap land here rather than crashing the sweep.
    Skipped {
        reason: String,
    },
}

/// Run a sweep from a base configuration. For each length the kernel leg and
/// a dense-reference leg on the identical mask are measured.
pub fn run_sweep(kind: SweepKind, lengths: &[usize], base: &BenchConfig) -> Result<Vec<SweepRow>> {
    if lengths.is_empty() {
        return Err(Error::InvalidConfig(
            "sweep needs at least one length".into(),
        ));
    }
    if lengths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "sweep lengths must be strictly ascending".into(),
        ));
    }
    if base.algo == BenchAlgo::Sdp {
        return Err(Error::InvalidConfig(
            "the sweep baseline is already the dense reference; pick a kernel algorithm".into(),
        ));
    }
    let MaskSource::Pattern(base_pattern) = &base.mask else {
        return Err(Error::InvalidConfig(
            "sweeps rescale mask patterns; a fixed mask file cannot change length".into(),
        ));
    };
    base.validate()?;
    let target_sf = base_pattern.sparsity_factor(base.len)?;

    let mut rows = Vec::with_capacity(lengths.len() * 2);
    for &len in lengths {
        let pattern = pattern_at(kind, base_pattern, len, target_sf)?;
        for algo in [base.algo, BenchAlgo::Sdp] {
            let mut cfg = base.clone();
            cfg.algo = algo;
            cfg.len = len;
            cfg.mask = MaskSource::Pattern(pattern.clone());
            let outcome = match run_benchmark(&cfg) {
                Ok(report) => SweepOutcome::Measured(Box::new(report)),
                Err(Error::FootprintExceeded { required, cap }) => SweepOutcome::Skipped {
                    reason: format!("estimated footprint {required} bytes exceeds cap {cap} bytes"),
                },
                Err(e) => return Err(e),
            };
            rows.push(SweepRow {
                kind,
                len,
                algo,
                pattern: pattern.clone(),
                outcome,
            });
        }
    }
    Ok(rows)
}

fn pattern_at(
    kind: SweepKind,
    base: &MaskPattern,
    len: usize,
    target_sf: f64,
) -> Result<MaskPattern> {
    match (kind, base) {
        (SweepKind::ConstantWindow, MaskPattern::Local { .. })
        | (SweepKind::ConstantWindow, MaskPattern::Dilated1d { .. })
        | (SweepKind::ConstantWindow, MaskPattern::Dilated2d { .. }) => {
            let p = base.clone();
            p.validate(len)?;
            Ok(p)
        }
        (SweepKind::ConstantSparsity, MaskPattern::Local { .. }) => Ok(MaskPattern::Local {
            window: fit_local_window(len, target_sf),
        }),
        (SweepKind::ConstantSparsity, MaskPattern::Dilated1d { dilation, .. }) => {
            Ok(MaskPattern::Dilated1d {
                window: fit_dilated1d_window(len, *dilation, target_sf),
                dilation: *dilation,
            })
        }
        (SweepKind::ConstantSparsity, MaskPattern::Dilated2d { dilation, .. }) => {
            Ok(MaskPattern::Dilated2d {
                block: fit_dilated2d_block(len, *dilation, target_sf),
                dilation: *dilation,
            })
        }
        (_, MaskPattern::Random { sparsity, seed }) => match kind {
            // A random mask has no window; only the constant-sparsity sweep
            // is meaningful and simply reuses the factor at each length.
            SweepKind::ConstantSparsity => Ok(MaskPattern::Random {
                sparsity: *sparsity,
                seed: *seed,
            }),
            SweepKind::ConstantWindow => Err(Error::InvalidConfig(
                "random masks have no window to hold constant".into(),
            )),
        },
        (_, MaskPattern::Global { .. }) => Err(Error::InvalidConfig(
            "global masks do not rescale across lengths; sweep local, dilated, or random patterns"
                .into(),
        )),
    }
}

/// Plot-ready CSV: one row per (length, algorithm) leg.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "kind,len,algo,pattern,achieved_sf,mean_s,median_s,min_s,work,skipped_reason\n",
    );
    for row in rows {
        match &row.outcome {
            SweepOutcome::Measured(report) => {
                out.push_str(&format!(
                    "{},{},{},{:?},{:.9},{:.9},{:.9},{:.9},{},\n",
                    row.kind.name(),
                    row.len,
                    row.algo.name(),
                    format!("{:?}", row.pattern),
                    report.achieved_sf,
                    report.mean_s,
                    report.median_s,
                    report.min_s,
                    report.work,
                ));
            }
            SweepOutcome::Skipped { reason } => {
                out.push_str(&format!(
                    "{},{},{},{:?},,,,,,{}\n",
                    row.kind.name(),
                    row.len,
                    row.algo.name(),
                    format!("{:?}", row.pattern),
                    reason,
                ));
            }
        }
    }
    out
}
