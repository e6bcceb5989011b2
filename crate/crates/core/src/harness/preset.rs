//! Mask presets modeled on the Longformer and BigBird attention layouts:
//! a local window of 50 tokens in each direction (window 51 under the strict
//! `|i - j| < w` rule), three global tokens, an optional dilation factor of
//! two (effective local reach 100), and uniform random extras at sparsity
//! 0.001.

use crate::attention::KernelKind;
use crate::error::{Error, Result};
use crate::mask::{is_local, union_disjoint, CsrMask, MaskPattern};
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};

/// Neighbors seen in each direction by the local window.
const LOCAL_REACH: usize = 50;
/// Number of global tokens.
const GLOBAL_TOKENS: usize = 3;
/// Dilation factor of the dilated variant.
const DILATION: usize = 2;
/// Sparsity of the random component.
const RANDOM_SF: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    Longformer,
    LongformerDilated,
    Bigbird,
}

impl PresetName {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Longformer => "longformer",
            Self::LongformerDilated => "longformer_dilated",
            Self::Bigbird => "bigbird",
        }
    }
}

impl std::str::FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "longformer" => Ok(Self::Longformer),
            "longformer_dilated" => Ok(Self::LongformerDilated),
            "bigbird" => Ok(Self::Bigbird),
            other => Err(Error::InvalidConfig(format!("unknown preset `{other}`"))),
        }
    }
}

/// One sequential pass: the kernel to run and the mask it covers.
#[derive(Debug, Clone)]
pub struct PresetLeg {
    pub kernel: KernelKind,
    pub mask: LegMask,
}

#[derive(Debug, Clone)]
pub enum LegMask {
    Pattern(MaskPattern),
    Explicit(CsrMask),
}

impl PresetLeg {
    /// Materialize this leg's mask.
    pub fn csr(&self, len: usize) -> Result<CsrMask> {
        match &self.mask {
            LegMask::Pattern(p) => p.generate(len),
            LegMask::Explicit(m) => Ok(m.clone()),
        }
    }
}

/// A preset: pairwise-disjoint sequential legs plus the equivalent single
/// CSR mask, so the carried-state route and the one-call route can be
/// compared on identical coordinates.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: PresetName,
    pub len: usize,
    pub legs: Vec<PresetLeg>,
    pub union: CsrMask,
}

/// Evenly spaced global tokens: first, middle, last.
pub fn default_global_indices(len: usize) -> Vec<usize> {
    let mut v = vec![0, len / 2, len - 1];
    v.sort_unstable();
    v.dedup();
    v
}

/// Build a preset at length `len`. The seed only matters for the random
/// component of `bigbird`.
pub fn build_preset(name: PresetName, len: usize, seed: u64) -> Result<Preset> {
    let reach = match name {
        PresetName::LongformerDilated => LOCAL_REACH * DILATION,
        _ => LOCAL_REACH,
    };
    if len < 2 * reach + 1 {
        return Err(Error::InvalidConfig(format!(
            "preset `{}` needs length >= {}, got {len}",
            name.name(),
            2 * reach + 1
        )));
    }
    let indices = default_global_indices(len);
    if indices.len() < GLOBAL_TOKENS {
        return Err(Error::InvalidConfig(format!(
            "length {len} is too short for {GLOBAL_TOKENS} distinct global tokens"
        )));
    }
    match name {
        PresetName::Longformer => {
            let (local, global) = window_and_global(len, LOCAL_REACH + 1, &indices)?;
            let union = union_disjoint(&local.csr(len)?, &global.csr(len)?)?;
            Ok(Preset {
                name,
                len,
                legs: vec![local, global],
                union,
            })
        }
        PresetName::LongformerDilated => {
            // The dilated composite runs as one explicit CSR pass.
            let union = dilated_union(len, DILATION, &indices)?;
            Ok(Preset {
                name,
                len,
                legs: vec![PresetLeg {
                    kernel: KernelKind::Csr,
                    mask: LegMask::Explicit(union.clone()),
                }],
                union,
            })
        }
        PresetName::Bigbird => {
            let window = LOCAL_REACH + 1;
            let (local, global) = window_and_global(len, window, &indices)?;
            let base = union_disjoint(&local.csr(len)?, &global.csr(len)?)?;
            let random = sample_disjoint_random(len, window, &indices, seed)?;
            let union = union_disjoint(&base, &random)?;
            Ok(Preset {
                name,
                len,
                legs: vec![
                    local,
                    global,
                    PresetLeg {
                        kernel: KernelKind::Csr,
                        mask: LegMask::Explicit(random),
                    },
                ],
                union,
            })
        }
    }
}

fn window_and_global(
    len: usize,
    window: usize,
    indices: &[usize],
) -> Result<(PresetLeg, PresetLeg)> {
    let local = MaskPattern::Local { window };
    let global = MaskPattern::Global {
        indices: indices.to_vec(),
        window,
    };
    local.validate(len)?;
    global.validate(len)?;
    Ok((
        PresetLeg {
            kernel: KernelKind::Local,
            mask: LegMask::Pattern(local),
        },
        PresetLeg {
            kernel: KernelKind::Global,
            mask: LegMask::Pattern(global),
        },
    ))
}

/// Dilated window of 50 steps each side (reach `50 * dilation`) unioned with
/// the global rows and columns outside that reach. With dilation 1 this is
/// exactly the plain longformer union.
pub(crate) fn dilated_union(len: usize, dilation: usize, indices: &[usize]) -> Result<CsrMask> {
    let window = LOCAL_REACH * dilation + 1;
    let dilated = MaskPattern::Dilated1d { window, dilation }.generate(len)?;
    let global = MaskPattern::Global {
        indices: indices.to_vec(),
        window,
    }
    .generate(len)?;
    union_disjoint(&dilated, &global)
}

/// Exactly `round(RANDOM_SF * len^2)` random cells, sampled away from the
/// local window and the global rows and columns so the three legs stay
/// pairwise disjoint.
fn sample_disjoint_random(
    len: usize,
    window: usize,
    indices: &[usize],
    seed: u64,
) -> Result<CsrMask> {
    let total = len * len;
    let target = (RANDOM_SF * total as f64).round() as usize;
    let forbidden = |i: usize, j: usize| {
        is_local(i, j, window)
            || indices.binary_search(&i).is_ok()
            || indices.binary_search(&j).is_ok()
    };
    let local_nnz = MaskPattern::Local { window }.nnz(len)?;
    let global_nnz = MaskPattern::Global {
        indices: indices.to_vec(),
        window,
    }
    .nnz(len)?;
    // The forbidden region is the union of the two leg patterns, which are
    // disjoint, so its size is the sum of their counts.
    let forbidden_cells = local_nnz + global_nnz;
    let available = total - forbidden_cells.min(total);
    if available < target {
        return Err(Error::InvalidConfig(format!(
            "length {len} leaves only {available} free cells for {target} random entries"
        )));
    }

    let mut rng = SplitMix64::split(seed, 0xB1);
    let mut drawn = std::collections::BTreeSet::new();
    while drawn.len() < target {
        let cell = rng.next_below(total as u64) as usize;
        let (i, j) = (cell / len, cell % len);
        if !forbidden(i, j) {
            drawn.insert(cell);
        }
    }
    let mut offsets = Vec::with_capacity(len + 1);
    offsets.push(0usize);
    let mut cols = Vec::with_capacity(target);
    let mut iter = drawn.into_iter().peekable();
    for i in 0..len {
        while let Some(&cell) = iter.peek() {
            if cell / len != i {
                break;
            }
            cols.push(cell % len);
            iter.next();
        }
        offsets.push(cols.len());
    }
    CsrMask::new(len, offsets, cols)
}
