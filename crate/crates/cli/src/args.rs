//! Command-line definitions and mask-flag resolution.

use clap::{Args, Parser, Subcommand};
use graphattn::harness::{BenchAlgo, BenchConfig, MaskSource, PresetName, SweepKind};
use graphattn::mask::{fit_dilated1d_window, fit_dilated2d_block, fit_local_window, MaskPattern};
use graphattn::memmodel::Algorithm;
use graphattn::verify::Suite;
use graphattn::{Error, Result};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "graphattn",
    about = "Sparse masked attention kernels: benchmarks, verification, mask files, and memory capacity planning",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Time one algorithm on one mask (warmup runs, then timed iterations).
    Bench(BenchArgs),
    /// Benchmark a kernel and the dense reference across context lengths.
    Sweep(SweepArgs),
    /// Build a named mask preset and report its legs.
    Preset(PresetArgs),
    /// Solve for the maximum context length fitting a memory budget.
    Maxlen(MaxlenArgs),
    /// Run the correctness suites.
    Verify(VerifyArgs),
    /// Generate a mask file.
    Maskgen(MaskgenArgs),
}

/// Mask-selection flags shared by `bench`, `sweep`, and `maskgen`.
#[derive(Args, Debug, Clone)]
pub struct PatternArgs {
    /// Local / dilated window size w (neighbors satisfy |i - j| < w).
    #[arg(long)]
    pub window: Option<usize>,
    /// Dilation factor for dilated windows and blocks.
    #[arg(long)]
    pub dilation: Option<usize>,
    /// Block size for the 2D dilated pattern (must divide the length).
    #[arg(long)]
    pub block: Option<usize>,
    /// Comma-separated global token indices; defaults to first, middle, last.
    #[arg(long, value_delimiter = ',')]
    pub global_indices: Option<Vec<usize>>,
    /// Target sparsity factor: a uniform random mask for explicit
    /// algorithms, or the window/block fit for implicit ones.
    #[arg(long)]
    pub sparsity: Option<f64>,
    /// Seed for random mask coordinates.
    #[arg(long, default_value_t = 0)]
    pub mask_seed: u64,
    /// Load an explicit mask from a file (binary CSR container or 0-1 CSV).
    #[arg(long)]
    pub mask_file: Option<PathBuf>,
}

impl PatternArgs {
    /// Resolve flags for a specific benchmark algorithm at length `len`.
    pub fn resolve_for(&self, algo: BenchAlgo, len: usize) -> Result<MaskSource> {
        if let Some(path) = &self.mask_file {
            return match algo {
                BenchAlgo::Sdp | BenchAlgo::Csr | BenchAlgo::Coo => {
                    Ok(MaskSource::File(path.clone()))
                }
                _ => Err(Error::InvalidConfig(format!(
                    "--mask-file needs an explicit-mask algorithm (sdp, csr, coo), not `{}`",
                    algo.name()
                ))),
            };
        }
        let dilation = self.dilation.unwrap_or(1);
        let pattern = match algo {
            BenchAlgo::Local => MaskPattern::Local {
                window: self.window_or_fit(len, 1, "local")?,
            },
            BenchAlgo::Dilated1d => MaskPattern::Dilated1d {
                window: self.window_or_fit(len, dilation, "dilated1d")?,
                dilation,
            },
            BenchAlgo::Dilated2d => {
                let block = match (self.block, self.sparsity) {
                    (Some(b), _) => b,
                    (None, Some(sf)) => fit_dilated2d_block(len, dilation, sf),
                    (None, None) => {
                        return Err(Error::InvalidConfig(
                            "dilated2d needs --block or --sparsity".into(),
                        ))
                    }
                };
                MaskPattern::Dilated2d { block, dilation }
            }
            BenchAlgo::Global => MaskPattern::Global {
                indices: self.global_indices_or_default(len),
                window: self.window.ok_or_else(|| {
                    Error::InvalidConfig(
                        "global needs --window (the local size it excludes)".into(),
                    )
                })?,
            },
            BenchAlgo::Sdp | BenchAlgo::Csr | BenchAlgo::Coo => self.explicit_pattern(len)?,
        };
        Ok(MaskSource::Pattern(pattern))
    }

    /// Resolve flags with no algorithm in play (`maskgen`).
    pub fn resolve_standalone(&self, len: usize) -> Result<MaskPattern> {
        if self.mask_file.is_some() {
            return Err(Error::InvalidConfig(
                "--mask-file is an input, not a generatable pattern".into(),
            ));
        }
        self.explicit_pattern(len)
    }

    fn explicit_pattern(&self, len: usize) -> Result<MaskPattern> {
        let dilation = self.dilation.unwrap_or(1);
        match (self.block, &self.global_indices, self.window, self.sparsity) {
            (Some(block), None, None, None) => Ok(MaskPattern::Dilated2d { block, dilation }),
            (None, Some(_), Some(window), None) => Ok(MaskPattern::Global {
                indices: self.global_indices_or_default(len),
                window,
            }),
            (None, None, Some(window), None) => {
                if self.dilation.is_some() {
                    Ok(MaskPattern::Dilated1d { window, dilation })
                } else {
                    Ok(MaskPattern::Local { window })
                }
            }
            (None, None, None, Some(sparsity)) => Ok(MaskPattern::Random {
                sparsity,
                seed: self.mask_seed,
            }),
            _ => Err(Error::InvalidConfig(
                "pick one mask family: --window [--dilation], --block [--dilation], \
                 --global-indices --window, or --sparsity"
                    .into(),
            )),
        }
    }

    fn window_or_fit(&self, len: usize, dilation: usize, algo: &str) -> Result<usize> {
        match (self.window, self.sparsity) {
            (Some(w), _) => Ok(w),
            (None, Some(sf)) => Ok(if dilation == 1 {
                fit_local_window(len, sf)
            } else {
                fit_dilated1d_window(len, dilation, sf)
            }),
            (None, None) => Err(Error::InvalidConfig(format!(
                "{algo} needs --window or --sparsity"
            ))),
        }
    }

    fn global_indices_or_default(&self, len: usize) -> Vec<usize> {
        match &self.global_indices {
            Some(indices) => {
                let mut v = indices.clone();
                v.sort_unstable();
                v.dedup();
                v
            }
            None => graphattn::harness::default_global_indices(len),
        }
    }
}

#[derive(Args)]
pub struct BenchArgs {
    /// Algorithm: sdp, csr, coo, local, dilated1d, dilated2d, global.
    #[arg(long)]
    pub algo: String,
    /// Context length L.
    #[arg(long)]
    pub length: usize,
    /// Embedded dimension d.
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[command(flatten)]
    pub pattern: PatternArgs,
    #[arg(long, default_value_t = graphattn::harness::DEFAULT_WARMUP)]
    pub warmup: usize,
    #[arg(long, default_value_t = graphattn::harness::DEFAULT_ITERS)]
    pub iters: usize,
    /// Seed for the generated Q, K, V inputs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also run the double-precision reference and record the deviation.
    #[arg(long, default_value_t = false)]
    pub compare_oracle: bool,
    /// Refuse legs whose estimated footprint exceeds this many bytes.
    #[arg(long, default_value_t = graphattn::harness::DEFAULT_MEMORY_CAP_BYTES)]
    pub memory_cap_bytes: u64,
    /// Output format: json or csv.
    #[arg(long, default_value = "json")]
    pub format: String,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl BenchArgs {
    pub fn to_config(&self) -> Result<BenchConfig> {
        let algo: BenchAlgo = self.algo.parse()?;
        let mask = self.pattern.resolve_for(algo, self.length)?;
        let mut cfg = BenchConfig::new(algo, self.length, self.dim, mask);
        cfg.warmup = self.warmup;
        cfg.iters = self.iters;
        cfg.seed = self.seed;
        cfg.compare_oracle = self.compare_oracle;
        cfg.memory_cap_bytes = self.memory_cap_bytes;
        Ok(cfg)
    }
}

#[derive(Args)]
pub struct SweepArgs {
    /// constant_window or constant_sparsity.
    #[arg(long)]
    pub kind: String,
    /// Ascending context lengths, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub lengths: Vec<usize>,
    /// Kernel algorithm for the graph leg (the dense leg is added per length).
    #[arg(long)]
    pub algo: String,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[command(flatten)]
    pub pattern: PatternArgs,
    #[arg(long, default_value_t = graphattn::harness::DEFAULT_WARMUP)]
    pub warmup: usize,
    #[arg(long, default_value_t = graphattn::harness::DEFAULT_ITERS)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = graphattn::harness::DEFAULT_MEMORY_CAP_BYTES)]
    pub memory_cap_bytes: u64,
    /// Output format: csv or json.
    #[arg(long, default_value = "csv")]
    pub format: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SweepArgs {
    pub fn to_parts(&self) -> Result<(SweepKind, BenchConfig)> {
        let kind: SweepKind = self.kind.parse()?;
        let algo: BenchAlgo = self.algo.parse()?;
        let base_len = *self
            .lengths
            .first()
            .ok_or_else(|| Error::InvalidConfig("sweep needs at least one length".into()))?;
        let mask = self.pattern.resolve_for(algo, base_len)?;
        let mut cfg = BenchConfig::new(algo, base_len, self.dim, mask);
        cfg.warmup = self.warmup;
        cfg.iters = self.iters;
        cfg.seed = self.seed;
        cfg.memory_cap_bytes = self.memory_cap_bytes;
        Ok((kind, cfg))
    }
}

#[derive(Args)]
pub struct PresetArgs {
    /// longformer, longformer_dilated, or bigbird.
    #[arg(long)]
    pub name: String,
    #[arg(long)]
    pub length: usize,
    /// Seed for the random component (bigbird).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the equivalent single CSR mask to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl PresetArgs {
    pub fn name(&self) -> Result<PresetName> {
        self.name.parse()
    }
}

#[derive(Args)]
pub struct MaxlenArgs {
    /// Algorithm family, or `all` for every family.
    #[arg(long, default_value = "all")]
    pub algo: String,
    /// Element width in bytes: 2 (half) or 4 (single).
    #[arg(long, default_value_t = 2)]
    pub dtype_bytes: u32,
    /// Index width in bytes for explicit-mask storage.
    #[arg(long, default_value_t = 4)]
    pub index_bytes: u32,
    #[arg(long, default_value_t = 64)]
    pub dim: u32,
    #[arg(long, default_value_t = 1)]
    pub heads: u32,
    /// Sparsity factors, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.0001")]
    pub sparsity: Vec<f64>,
    /// Memory budget in bytes (default: 80 GiB).
    #[arg(long, default_value_t = graphattn::memmodel::HardwareBudget::A100_80GB.bytes)]
    pub budget_bytes: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl MaxlenArgs {
    pub fn algorithms(&self) -> Result<Vec<Algorithm>> {
        if self.algo == "all" {
            Ok(Algorithm::ALL.to_vec())
        } else {
            Ok(vec![self.algo.parse()?])
        }
    }
}

#[derive(Args)]
pub struct VerifyArgs {
    /// oracle, work, composition, or all.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random patterns per kernel in the oracle suite.
    #[arg(long, default_value_t = 20)]
    pub cases: usize,
    /// Emit a JSON summary instead of per-suite lines.
    #[arg(long, default_value_t = false)]
    pub json: bool,
}

impl VerifyArgs {
    pub fn suite(&self) -> Result<Suite> {
        self.suite.parse()
    }
}

#[derive(Args)]
pub struct MaskgenArgs {
    #[arg(long)]
    pub length: usize,
    #[command(flatten)]
    pub pattern: PatternArgs,
    /// Destination mask file (binary CSR container).
    #[arg(long)]
    pub out: PathBuf,
}
