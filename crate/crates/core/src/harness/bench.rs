//! Single-configuration benchmark runs.
//!
//! Protocol: generate fixed inputs from the seed, run the selected algorithm
//! `warmup` times untimed, then time `iters` runs on a monotonic clock and
//! report every sample plus mean, median, and min. Mask and input generation
//! are never inside the timed region.

use crate::attention::{attend, sdp_masked_oracle, KernelInput, KernelKind};
use crate::error::{Error, Result};
use crate::mask::{load_mask_file, CooMask, CsrMask, MaskPattern};
use crate::tensor::{random_uniform_matrix, DenseMatrix, Tolerances};
use crate::verify::{compare_with_empty_rows, derive_seed};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::time::Instant;

pub const DEFAULT_WARMUP: usize = 10;
pub const DEFAULT_ITERS: usize = 15;
/// Footprint cap for a single benchmark leg; dense legs above it are refused
/// (and recorded as skipped by sweeps) instead of exhausting memory.
pub const DEFAULT_MEMORY_CAP_BYTES: u64 = 2 << 30;

/// What a benchmark leg executes: the materialized-dense reference or one of
/// the neighbor-walking kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchAlgo {
    Sdp,
    Csr,
    Coo,
    Local,
    Dilated1d,
    Dilated2d,
    Global,
}

impl BenchAlgo {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Sdp => "sdp",
            Self::Csr => "csr",
            Self::Coo => "coo",
            Self::Local => "local",
            Self::Dilated1d => "dilated1d",
            Self::Dilated2d => "dilated2d",
            Self::Global => "global",
        }
    }

    pub fn kernel(&self) -> Option<KernelKind> {
        match self {
            Self::Sdp => None,
            Self::Csr => Some(KernelKind::Csr),
            Self::Coo => Some(KernelKind::Coo),
            Self::Local => Some(KernelKind::Local),
            Self::Dilated1d => Some(KernelKind::Dilated1d),
            Self::Dilated2d => Some(KernelKind::Dilated2d),
            Self::Global => Some(KernelKind::Global),
        }
    }
}

impl std::str::FromStr for BenchAlgo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sdp" => Ok(Self::Sdp),
            "csr" => Ok(Self::Csr),
            "coo" => Ok(Self::Coo),
            "local" => Ok(Self::Local),
            "dilated1d" => Ok(Self::Dilated1d),
            "dilated2d" => Ok(Self::Dilated2d),
            "global" => Ok(Self::Global),
            other => Err(Error::UnknownAlgorithm(other.to_string())),
        }
    }
}

/// Where the benchmark mask comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskSource {
    Pattern(MaskPattern),
    File(PathBuf),
}

impl MaskSource {
    pub fn label(&self) -> String {
        match self {
            Self::Pattern(p) => format!("{p:?}"),
            Self::File(path) => path.display().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub algo: BenchAlgo,
    pub len: usize,
    pub dim: usize,
    pub mask: MaskSource,
    pub warmup: usize,
    pub iters: usize,
    pub seed: u64,
    /// Also run the double-precision reference once and record the deviation.
    pub compare_oracle: bool,
    pub memory_cap_bytes: u64,
}

impl BenchConfig {
    pub fn new(algo: BenchAlgo, len: usize, dim: usize, mask: MaskSource) -> Self {
        Self {
            algo,
            len,
            dim,
            mask,
            warmup: DEFAULT_WARMUP,
            iters: DEFAULT_ITERS,
            seed: 0,
            compare_oracle: false,
            memory_cap_bytes: DEFAULT_MEMORY_CAP_BYTES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.len == 0 || self.dim == 0 {
            return Err(Error::InvalidConfig("length and dim must be >= 1".into()));
        }
        if self.iters == 0 {
            return Err(Error::InvalidConfig("iters must be >= 1".into()));
        }
        if let MaskSource::Pattern(p) = &self.mask {
            p.validate(self.len)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub pass: bool,
    pub max_abs_dev: f64,
    pub max_rel_dev: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub samples_s: Vec<f64>,
    pub mean_s: f64,
    pub median_s: f64,
    pub min_s: f64,
    /// Dot products per run: the mask's nnz for kernels, `L^2` for the dense
    /// reference.
    pub work: u64,
    pub achieved_sf: f64,
    pub peak_rss_bytes: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_check: Option<OracleCheck>,
}

impl BenchReport {
    pub fn csv_header() -> &'static str {
        "algo,len,dim,mask,warmup,iters,seed,mean_s,median_s,min_s,work,achieved_sf,peak_rss_bytes"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:?},{},{},{},{:.9},{:.9},{:.9},{},{:.9},{}",
            self.config.algo.name(),
            self.config.len,
            self.config.dim,
            self.config.mask.label(),
            self.config.warmup,
            self.config.iters,
            self.config.seed,
            self.mean_s,
            self.median_s,
            self.min_s,
            self.work,
            self.achieved_sf,
            self.peak_rss_bytes
                .map_or_else(String::new, |b| b.to_string()),
        )
    }
}

/// In-memory footprint estimate in bytes for one benchmark leg, used against
/// the configured cap before anything is allocated.
pub fn estimate_footprint_bytes(
    algo: BenchAlgo,
    len: usize,
    dim: usize,
    nnz: usize,
    compare_oracle: bool,
) -> u64 {
    let elem = std::mem::size_of::<f32>() as u64;
    let index = std::mem::size_of::<usize>() as u64;
    let (len64, dim64, nnz64) = (len as u64, dim as u64, nnz as u64);
    let inputs = 4 * len64 * dim64 * elem;
    let mut total = inputs;
    match algo {
        BenchAlgo::Sdp => total += len64 * len64 * elem,
        BenchAlgo::Csr => total += 2 * len64 * elem + (len64 + 1 + nnz64) * index,
        BenchAlgo::Coo => total += 2 * len64 * elem + 2 * nnz64 * index,
        _ => total += 2 * len64 * elem,
    }
    if compare_oracle {
        // Double-precision inputs, score matrix, and outputs.
        let delem = std::mem::size_of::<f64>() as u64;
        total += 5 * len64 * dim64 * delem + len64 * len64 * delem;
    }
    total
}

enum ResolvedMask {
    Csr(CsrMask),
    Coo(CooMask),
    Implicit(MaskPattern),
}

fn resolve_mask(cfg: &BenchConfig) -> Result<(ResolvedMask, usize)> {
    let explicit = |cfg: &BenchConfig| -> Result<CsrMask> {
        match &cfg.mask {
            MaskSource::Pattern(p) => p.generate(cfg.len),
            MaskSource::File(path) => {
                let mask = load_mask_file(path)?;
                if mask.len() != cfg.len {
                    return Err(Error::InvalidConfig(format!(
                        "mask file length {} does not match --length {}",
                        mask.len(),
                        cfg.len
                    )));
                }
                Ok(mask)
            }
        }
    };
    match cfg.algo {
        BenchAlgo::Sdp | BenchAlgo::Csr => {
            let mask = explicit(cfg)?;
            let nnz = mask.nnz();
            Ok((ResolvedMask::Csr(mask), nnz))
        }
        BenchAlgo::Coo => {
            let mask = explicit(cfg)?.to_coo();
            let nnz = mask.nnz();
            Ok((ResolvedMask::Coo(mask), nnz))
        }
        BenchAlgo::Local | BenchAlgo::Dilated1d | BenchAlgo::Dilated2d | BenchAlgo::Global => {
            let MaskSource::Pattern(pattern) = &cfg.mask else {
                return Err(Error::InvalidConfig(format!(
                    "algorithm `{}` computes its mask implicitly and needs pattern parameters, not a mask file",
                    cfg.algo.name()
                )));
            };
            let matches = matches!(
                (cfg.algo, pattern),
                (BenchAlgo::Local, MaskPattern::Local { .. })
                    | (BenchAlgo::Dilated1d, MaskPattern::Dilated1d { .. })
                    | (BenchAlgo::Dilated2d, MaskPattern::Dilated2d { .. })
                    | (BenchAlgo::Global, MaskPattern::Global { .. })
            );
            if !matches {
                return Err(Error::InvalidConfig(format!(
                    "algorithm `{}` does not run pattern {pattern:?}",
                    cfg.algo.name()
                )));
            }
            let nnz = pattern.nnz(cfg.len)?;
            Ok((ResolvedMask::Implicit(pattern.clone()), nnz))
        }
    }
}

/// Run one benchmark configuration.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let (mask, nnz) = resolve_mask(cfg)?;
    let required = estimate_footprint_bytes(cfg.algo, cfg.len, cfg.dim, nnz, cfg.compare_oracle);
    if required > cfg.memory_cap_bytes {
        return Err(Error::FootprintExceeded {
            required,
            cap: cfg.memory_cap_bytes,
        });
    }

    let q = random_uniform_matrix::<f32>(cfg.len, cfg.dim, derive_seed(cfg.seed, 0))?;
    let k = random_uniform_matrix::<f32>(cfg.len, cfg.dim, derive_seed(cfg.seed, 1))?;
    let v = random_uniform_matrix::<f32>(cfg.len, cfg.dim, derive_seed(cfg.seed, 2))?;

    let csr_for_oracle: Option<CsrMask> = if cfg.compare_oracle || cfg.algo == BenchAlgo::Sdp {
        Some(match &mask {
            ResolvedMask::Csr(m) => m.clone(),
            ResolvedMask::Coo(m) => m.to_csr(),
            ResolvedMask::Implicit(p) => p.generate(cfg.len)?,
        })
    } else {
        None
    };

    let run_once = |out: &mut Option<DenseMatrix<f32>>| -> Result<u64> {
        match (&cfg.algo, &mask) {
            (BenchAlgo::Sdp, _) => {
                let mask = csr_for_oracle.as_ref().expect("sdp resolves a CSR mask");
                *out = Some(sdp_masked_oracle(&q, &k, &v, mask)?);
                Ok(cfg.len as u64 * cfg.len as u64)
            }
            (_, ResolvedMask::Csr(m)) => {
                let r = attend(&q, &k, &v, &KernelInput::Csr(m), None)?;
                let work = r.work;
                *out = Some(r.output);
                Ok(work)
            }
            (_, ResolvedMask::Coo(m)) => {
                let r = attend(&q, &k, &v, &KernelInput::Coo(m), None)?;
                let work = r.work;
                *out = Some(r.output);
                Ok(work)
            }
            (_, ResolvedMask::Implicit(p)) => {
                let input = match p {
                    MaskPattern::Local { window } => KernelInput::Local { window: *window },
                    MaskPattern::Dilated1d { window, dilation } => KernelInput::Dilated1d {
                        window: *window,
                        dilation: *dilation,
                    },
                    MaskPattern::Dilated2d { block, dilation } => KernelInput::Dilated2d {
                        block: *block,
                        dilation: *dilation,
                    },
                    MaskPattern::Global { indices, window } => KernelInput::Global {
                        indices,
                        window: *window,
                    },
                    MaskPattern::Random { .. } => unreachable!("random masks run explicitly"),
                };
                let r = attend(&q, &k, &v, &input, None)?;
                let work = r.work;
                *out = Some(r.output);
                Ok(work)
            }
        }
    };

    let mut last_output = None;
    for _ in 0..cfg.warmup {
        run_once(&mut last_output)?;
    }
    let mut samples_s = Vec::with_capacity(cfg.iters);
    let mut work = 0u64;
    for _ in 0..cfg.iters {
        let start = Instant::now();
        work = run_once(&mut last_output)?;
        samples_s.push(start.elapsed().as_secs_f64());
    }

    let oracle_check = if cfg.compare_oracle && cfg.algo != BenchAlgo::Sdp {
        let mask = csr_for_oracle
            .as_ref()
            .expect("comparison resolves a CSR mask");
        let reference = sdp_masked_oracle(&q.cast::<f64>(), &k.cast(), &v.cast(), mask)?;
        let dev = compare_with_empty_rows(
            &last_output.as_ref().expect("at least one run").cast(),
            &reference,
            &Tolerances::verification(),
        )?;
        Some(OracleCheck {
            pass: dev.pass,
            max_abs_dev: dev.max_abs,
            max_rel_dev: dev.max_rel,
        })
    } else {
        None
    };

    let mut sorted = samples_s.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
    let mean_s = samples_s.iter().sum::<f64>() / samples_s.len() as f64;
    let median_s = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) / 2.0
    };

    Ok(BenchReport {
        config: cfg.clone(),
        mean_s,
        median_s,
        min_s: sorted[0],
        samples_s,
        work,
        achieved_sf: nnz as f64 / (cfg.len as f64 * cfg.len as f64),
        peak_rss_bytes: peak_rss_bytes(),
        oracle_check,
    })
}

/// High-water resident set size from `/proc/self/status`, when available.
fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line
        .trim_start_matches("VmHWM:")
        .trim()
        .trim_end_matches("kB")
        .trim()
        .parse()
        .ok()?;
    Some(kb * 1024)
}
