//! Byte-level footprint model and maximum-context-length solver.
//!
//! Each algorithm's working set is modeled as
//! `fixed + per_token * L + per_nnz * s_f * L^2 + quadratic_dense * L^2`
//! bytes; the largest `L` fitting a device budget is the positive root of
//! that polynomial, rounded to the nearest integer (documented slack of one
//! token).
//!
//! Default coefficients, for element width `e`, index width `x`, embedded
//! dimension `d`, and `h` heads:
//!
//! * every algorithm stores Q, K, V, O at `4 * d * e` bytes per token;
//! * the online-softmax algorithms add two statistics vectors per head,
//!   `2 * h * e` per token; the materialized-dense one has none;
//! * `csr` adds `x` per token (row offsets) and `(x + e) * h` per nonzero;
//! * `coo` adds `(2 * x + e) * h` per nonzero;
//! * `sdp` adds `e * h` per `L^2` cell (the materialized score matrix);
//! * `global` adds `x` per token (the global-index vector, length <= L);
//! * `local`, `dilated1d`, `dilated2d`, and `flash_dense` add nothing.
//!
//! Explicit-mask and score-matrix costs scale with the head count because
//! each head materializes its own copy; per-token input costs do not, since
//! `d` is the full model dimension across heads. Although the kernels in
//! this crate store binary masks with no values array, the explicit-mask
//! accounting includes one stored element per nonzero so the model covers
//! the general weighted-mask layout.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Algorithm families the footprint model distinguishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Masked scaled dot product with a materialized `L x L` score matrix.
    Sdp,
    Csr,
    Coo,
    Local,
    Dilated1d,
    Dilated2d,
    Global,
    /// Dense online-softmax attention: no mask storage, no score matrix.
    FlashDense,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Sdp,
        Algorithm::Csr,
        Algorithm::Coo,
        Algorithm::Local,
        Algorithm::Dilated1d,
        Algorithm::Dilated2d,
        Algorithm::Global,
        Algorithm::FlashDense,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sdp => "sdp",
            Self::Csr => "csr",
            Self::Coo => "coo",
            Self::Local => "local",
            Self::Dilated1d => "dilated1d",
            Self::Dilated2d => "dilated2d",
            Self::Global => "global",
            Self::FlashDense => "flash_dense",
        }
    }
}

impl std::str::FromStr for Algorithm {
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
            "flash_dense" => Ok(Self::FlashDense),
            other => Err(Error::UnknownAlgorithm(other.to_string())),
        }
    }
}

/// Byte coefficients of the footprint polynomial. All fields are public and
/// overridable for cell-specific conventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryAccounting {
    /// Coefficient of `L`.
    pub per_token_bytes: f64,
    /// Coefficient of `s_f * L^2`.
    pub per_nnz_bytes: f64,
    /// Coefficient of `L^2` independent of sparsity.
    pub quadratic_dense_bytes: f64,
    /// Constant overhead.
    pub fixed_bytes: f64,
}

impl MemoryAccounting {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.per_token_bytes,
            self.per_nnz_bytes,
            self.quadratic_dense_bytes,
            self.fixed_bytes,
        ];
        if fields.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidAccounting(
                "coefficients must be finite and >= 0".into(),
            ));
        }
        if fields.iter().all(|&c| c == 0.0) {
            return Err(Error::InvalidAccounting(
                "at least one coefficient must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Total bytes occupied at context length `len` and sparsity `s_f`.
    pub fn bytes_at(&self, len: f64, s_f: f64) -> f64 {
        self.fixed_bytes
            + self.per_token_bytes * len
            + (self.per_nnz_bytes * s_f + self.quadratic_dense_bytes) * len * len
    }
}

/// Device memory budget in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardwareBudget {
    pub bytes: u64,
}

impl HardwareBudget {
    /// 80 GiB, the binary capacity under which the high-sparsity context
    /// figures in this crate's regression tests reproduce.
    pub const A100_80GB: HardwareBudget = HardwareBudget {
        bytes: 85_899_345_920,
    };

    pub fn new(bytes: u64) -> Result<Self> {
        if bytes == 0 {
            return Err(Error::InvalidAccounting("budget must be positive".into()));
        }
        Ok(Self { bytes })
    }
}

/// Default accounting for an algorithm family.
pub fn accounting_for(
    algorithm: Algorithm,
    element_bytes: u32,
    index_bytes: u32,
    dim: u32,
    heads: u32,
) -> Result<MemoryAccounting> {
    if element_bytes != 2 && element_bytes != 4 {
        return Err(Error::InvalidAccounting(format!(
            "element width {element_bytes} must be 2 (half) or 4 (single)"
        )));
    }
    if dim == 0 || heads == 0 || index_bytes == 0 {
        return Err(Error::InvalidAccounting(
            "dim, heads, and index width must be >= 1".into(),
        ));
    }
    let e = element_bytes as f64;
    let x = index_bytes as f64;
    let d = dim as f64;
    let h = heads as f64;

    let io_tokens = 4.0 * d * e;
    let stats_tokens = 2.0 * h * e;
    let acc = match algorithm {
        Algorithm::Sdp => MemoryAccounting {
            per_token_bytes: io_tokens,
            per_nnz_bytes: 0.0,
            quadratic_dense_bytes: e * h,
            fixed_bytes: 0.0,
        },
        Algorithm::Csr => MemoryAccounting {
            per_token_bytes: io_tokens + stats_tokens + x,
            per_nnz_bytes: (x + e) * h,
            quadratic_dense_bytes: 0.0,
            fixed_bytes: 0.0,
        },
        Algorithm::Coo => MemoryAccounting {
            per_token_bytes: io_tokens + stats_tokens,
            per_nnz_bytes: (2.0 * x + e) * h,
            quadratic_dense_bytes: 0.0,
            fixed_bytes: 0.0,
        },
        Algorithm::Global => MemoryAccounting {
            per_token_bytes: io_tokens + stats_tokens + x,
            per_nnz_bytes: 0.0,
            quadratic_dense_bytes: 0.0,
            fixed_bytes: 0.0,
        },
        Algorithm::Local | Algorithm::Dilated1d | Algorithm::Dilated2d | Algorithm::FlashDense => {
            MemoryAccounting {
                per_token_bytes: io_tokens + stats_tokens,
                per_nnz_bytes: 0.0,
                quadratic_dense_bytes: 0.0,
                fixed_bytes: 0.0,
            }
        }
    };
    acc.validate()?;
    Ok(acc)
}

/// Largest integer context length whose working set fits the budget: the
/// real root of the footprint polynomial, rounded to nearest. The returned
/// value can overshoot the budget by at most one token's marginal cost.
pub fn max_context_length(acc: &MemoryAccounting, s_f: f64, budget: HardwareBudget) -> Result<u64> {
    acc.validate()?;
    if !(0.0..=1.0).contains(&s_f) {
        return Err(Error::InvalidAccounting(format!(
            "sparsity factor {s_f} must be in [0, 1]"
        )));
    }
    let capacity = budget.bytes as f64 - acc.fixed_bytes;
    if capacity <= 0.0 {
        return Err(Error::BudgetBelowFixed {
            budget: budget.bytes,
            fixed: acc.fixed_bytes,
        });
    }
    let linear = acc.per_token_bytes;
    let quadratic = acc.per_nnz_bytes * s_f + acc.quadratic_dense_bytes;
    let root = if quadratic == 0.0 {
        if linear == 0.0 {
            return Err(Error::UnboundedContext);
        }
        capacity / linear
    } else {
        (-linear + (linear * linear + 4.0 * quadratic * capacity).sqrt()) / (2.0 * quadratic)
    };
    let rounded = root.round();
    if rounded < 1.0 {
        return Err(Error::BudgetBelowFixed {
            budget: budget.bytes,
            fixed: acc.fixed_bytes + linear + quadratic,
        });
    }
    Ok(rounded as u64)
}

/// Maximum context length across a list of sparsity factors.
pub fn capacity_curve(
    algorithm: Algorithm,
    element_bytes: u32,
    index_bytes: u32,
    dim: u32,
    heads: u32,
    s_f_list: &[f64],
    budget: HardwareBudget,
) -> Result<Vec<(f64, u64)>> {
    let acc = accounting_for(algorithm, element_bytes, index_bytes, dim, heads)?;
    s_f_list
        .iter()
        .map(|&s_f| Ok((s_f, max_context_length(&acc, s_f, budget)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const BUDGET: HardwareBudget = HardwareBudget::A100_80GB;

    #[test]
    fn per_token_costs_match_hand_calculation() {
        let acc = accounting_for(Algorithm::Local, 2, 4, 128, 1).unwrap();
        assert_eq!(acc.per_token_bytes, 1028.0);
        assert_eq!(acc.per_nnz_bytes, 0.0);

        let acc = accounting_for(Algorithm::Sdp, 4, 4, 64, 1).unwrap();
        assert_eq!(acc.quadratic_dense_bytes, 4.0);
        assert_eq!(acc.per_token_bytes, 1024.0);

        let acc = accounting_for(Algorithm::Local, 4, 4, 4096, 32).unwrap();
        assert_eq!(acc.per_token_bytes, 65_536.0 + 256.0);
    }

    #[test]
    fn linear_solution_for_implicit_kernels() {
        let acc = accounting_for(Algorithm::Local, 2, 4, 128, 1).unwrap();
        let max = max_context_length(&acc, 1e-4, BUDGET).unwrap();
        // 85_899_345_920 / 1028 = 83_559_675.019..., nearest.
        assert_eq!(max, 83_559_675);
    }

    #[test]
    fn budget_below_fixed_is_an_error() {
        let acc = MemoryAccounting {
            per_token_bytes: 1.0,
            per_nnz_bytes: 0.0,
            quadratic_dense_bytes: 0.0,
            fixed_bytes: 1e12,
        };
        assert!(matches!(
            max_context_length(&acc, 0.5, BUDGET),
            Err(Error::BudgetBelowFixed { .. })
        ));
    }

    #[test]
    fn fixed_only_accounting_is_unbounded() {
        let acc = MemoryAccounting {
            per_token_bytes: 0.0,
            per_nnz_bytes: 0.0,
            quadratic_dense_bytes: 0.0,
            fixed_bytes: 8.0,
        };
        assert!(matches!(
            max_context_length(&acc, 0.5, BUDGET),
            Err(Error::UnboundedContext)
        ));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(accounting_for(Algorithm::Csr, 8, 4, 64, 1).is_err());
        assert!(accounting_for(Algorithm::Csr, 4, 0, 64, 1).is_err());
        assert!(accounting_for(Algorithm::Csr, 4, 4, 0, 1).is_err());
        assert!(accounting_for(Algorithm::Csr, 4, 4, 64, 0).is_err());
        let acc = accounting_for(Algorithm::Csr, 4, 4, 64, 1).unwrap();
        assert!(max_context_length(&acc, 1.5, BUDGET).is_err());
    }

    #[test]
    fn csr_at_zero_sparsity_is_implicit_plus_offsets() {
        let csr = accounting_for(Algorithm::Csr, 4, 4, 64, 1).unwrap();
        let local = accounting_for(Algorithm::Local, 4, 4, 64, 1).unwrap();
        let csr_max = max_context_length(&csr, 0.0, BUDGET).unwrap();
        let expected = (BUDGET.bytes as f64 / (local.per_token_bytes + 4.0)).round() as u64;
        assert_eq!(csr_max, expected);
    }

    #[test]
    fn curve_shapes() {
        let sf = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2];
        let local = capacity_curve(Algorithm::Local, 4, 4, 64, 1, &sf, BUDGET).unwrap();
        assert!(local.windows(2).all(|w| w[0].1 == w[1].1), "local is flat");

        let csr = capacity_curve(Algorithm::Csr, 4, 4, 64, 1, &sf, BUDGET).unwrap();
        assert!(
            csr.windows(2).all(|w| w[0].1 >= w[1].1),
            "csr non-increasing in sparsity"
        );

        // Sparse explicit masks buy roughly two orders of magnitude over the
        // materialized-dense layout.
        let csr_sparse = csr[2].1 as f64;
        let sdp = max_context_length(
            &accounting_for(Algorithm::Sdp, 4, 4, 64, 1).unwrap(),
            1e-4,
            BUDGET,
        )
        .unwrap() as f64;
        let ratio = csr_sparse / sdp;
        assert!((40.0..200.0).contains(&ratio), "ratio {ratio}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn monotone_in_sparsity_and_budget(
            d in 1u32..512,
            sf_a in 0.0f64..1.0,
            sf_b in 0.0f64..1.0,
        ) {
            let acc = accounting_for(Algorithm::Csr, 4, 4, d, 1).unwrap();
            let (lo, hi) = if sf_a <= sf_b { (sf_a, sf_b) } else { (sf_b, sf_a) };
            let at_lo = max_context_length(&acc, lo, BUDGET).unwrap();
            let at_hi = max_context_length(&acc, hi, BUDGET).unwrap();
            prop_assert!(at_lo >= at_hi);

            let half = HardwareBudget::new(BUDGET.bytes / 2).unwrap();
            prop_assert!(max_context_length(&acc, lo, half).unwrap() <= at_lo);
        }

        #[test]
        fn doubling_element_width_halves_linear_capacity(d in 1u32..512, h in 1u32..8) {
            let half = accounting_for(Algorithm::Local, 2, 4, d, h).unwrap();
            let single = accounting_for(Algorithm::Local, 4, 4, d, h).unwrap();
            let a = max_context_length(&half, 1e-4, BUDGET).unwrap();
            let b = max_context_length(&single, 1e-4, BUDGET).unwrap();
            prop_assert!(a.abs_diff(2 * b) <= 2);
        }

        #[test]
        fn solution_respects_budget_within_one_token(
            per_token in 1.0f64..1e6,
            per_nnz in 0.0f64..64.0,
            s_f in 0.0f64..1.0,
        ) {
            let acc = MemoryAccounting {
                per_token_bytes: per_token,
                per_nnz_bytes: per_nnz,
                quadratic_dense_bytes: 0.0,
                fixed_bytes: 0.0,
            };
            let max = max_context_length(&acc, s_f, BUDGET).unwrap() as f64;
            let used = acc.bytes_at(max, s_f);
            let marginal = acc.bytes_at(max + 1.0, s_f) - used;
            prop_assert!(used <= BUDGET.bytes as f64 + marginal);
        }
    }
}
