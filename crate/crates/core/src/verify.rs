//! Correctness harness: kernel-vs-reference comparison, exact work audits,
//! and sequential-composition checks.
//!
//! Kernels run in their default single precision; the reference runs in
//! double precision on upcast copies of the same inputs, isolating kernel
//! rounding from reference rounding. A reference row that is all NaN (a row
//! with no mask nonzeros) is treated as equal to a kernel row of zeros, the
//! only state the neighbor walk can produce for such a row.

use crate::attention::{
    attend, attend_csr, attend_probed, sdp_masked_oracle, AttentionResult, Carry, KernelInput,
    KernelKind,
};
use crate::error::{Error, Result};
use crate::mask::{union_disjoint, CsrMask, MaskPattern};
use crate::rng::SplitMix64;
use crate::tensor::{random_uniform_matrix, DenseMatrix, Tolerances};
use serde::Serialize;

/// Default verification geometry.
pub const DEFAULT_LEN: usize = 256;
pub const DEFAULT_DIM: usize = 32;

/// One comparison case: a mask (implicit or explicit), input geometry, the
/// generation seed, and the tolerances.
#[derive(Debug, Clone)]
pub struct VerifyCase {
    pub mask: CaseMask,
    pub len: usize,
    pub dim: usize,
    pub seed: u64,
    pub tol: Tolerances,
}

#[derive(Debug, Clone)]
pub enum CaseMask {
    Pattern(MaskPattern),
    Explicit(CsrMask),
}

impl VerifyCase {
    pub fn pattern(pattern: MaskPattern) -> Self {
        Self {
            mask: CaseMask::Pattern(pattern),
            len: DEFAULT_LEN,
            dim: DEFAULT_DIM,
            seed: 0,
            tol: Tolerances::verification(),
        }
    }

    pub fn explicit(mask: CsrMask) -> Self {
        let len = mask.len();
        Self {
            mask: CaseMask::Explicit(mask),
            len,
            dim: DEFAULT_DIM,
            seed: 0,
            tol: Tolerances::verification(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_geometry(mut self, len: usize, dim: usize) -> Self {
        self.len = len;
        self.dim = dim;
        self
    }

    fn csr(&self) -> Result<CsrMask> {
        match &self.mask {
            CaseMask::Pattern(p) => p.generate(self.len),
            CaseMask::Explicit(m) => {
                if m.len() != self.len {
                    return Err(Error::InvalidConfig(format!(
                        "explicit mask length {} != case length {}",
                        m.len(),
                        self.len
                    )));
                }
                Ok(m.clone())
            }
        }
    }

    fn inputs(&self) -> Result<(DenseMatrix<f32>, DenseMatrix<f32>, DenseMatrix<f32>)> {
        Ok((
            random_uniform_matrix(self.len, self.dim, derive_seed(self.seed, 0))?,
            random_uniform_matrix(self.len, self.dim, derive_seed(self.seed, 1))?,
            random_uniform_matrix(self.len, self.dim, derive_seed(self.seed, 2))?,
        ))
    }
}

pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    SplitMix64::split(seed, stream).next_u64()
}

/// Outcome of an elementwise comparison under the empty-row convention.
#[derive(Debug, Clone, Serialize)]
pub struct Deviation {
    pub pass: bool,
    pub max_abs: f64,
    pub max_rel: f64,
    /// Coordinates of the first element that failed the tolerance check.
    pub first_failure: Option<(usize, usize)>,
}

/// Compare a kernel output against a reference, both in `f64`. Reference
/// rows that are entirely NaN pass only against exactly-zero kernel rows;
/// all other elements must satisfy `tol` with the reference as the baseline.
pub fn compare_with_empty_rows(
    kernel: &DenseMatrix<f64>,
    reference: &DenseMatrix<f64>,
    tol: &Tolerances,
) -> Result<Deviation> {
    if !kernel.same_shape(reference) {
        return Err(Error::ShapeMismatch {
            a_rows: kernel.rows(),
            a_cols: kernel.cols(),
            b_rows: reference.rows(),
            b_cols: reference.cols(),
        });
    }
    let mut dev = Deviation {
        pass: true,
        max_abs: 0.0,
        max_rel: 0.0,
        first_failure: None,
    };
    let fail = |dev: &mut Deviation, i: usize, j: usize| {
        dev.pass = false;
        if dev.first_failure.is_none() {
            dev.first_failure = Some((i, j));
        }
    };
    for i in 0..kernel.rows() {
        let (krow, rrow) = (kernel.row(i), reference.row(i));
        if rrow.iter().all(|x| x.is_nan()) {
            if let Some(j) = krow.iter().position(|&x| x != 0.0) {
                fail(&mut dev, i, j);
            }
            continue;
        }
        for (j, (&a, &b)) in krow.iter().zip(rrow).enumerate() {
            if !a.is_nan() && !b.is_nan() {
                dev.max_abs = dev.max_abs.max((a - b).abs());
                if b != 0.0 {
                    dev.max_rel = dev.max_rel.max((a - b).abs() / b.abs());
                }
            }
            if !tol.pair_ok(a, b) {
                fail(&mut dev, i, j);
            }
        }
    }
    Ok(dev)
}

/// Run one kernel against the double-precision reference.
pub fn verify_kernel(case: &VerifyCase, kind: KernelKind) -> Result<Deviation> {
    let mask = case.csr()?;
    let (q, k, v) = case.inputs()?;
    let result = run_kernel(case, kind, &mask, &q, &k, &v, None)?;

    let qd: DenseMatrix<f64> = q.cast();
    let kd: DenseMatrix<f64> = k.cast();
    let vd: DenseMatrix<f64> = v.cast();
    let reference = sdp_masked_oracle(&qd, &kd, &vd, &mask)?;
    compare_with_empty_rows(&result.output.cast(), &reference, &case.tol)
}

/// Work audit: the reported dot-product count must equal the mask's nnz
/// exactly, and the probed kernel must have touched exactly the mask's
/// coordinate set.
#[derive(Debug, Clone, Serialize)]
pub struct WorkAudit {
    pub pass: bool,
    pub work: u64,
    pub expected_nnz: u64,
    /// First touched pair outside the mask, or first mask pair not touched.
    pub first_mismatch: Option<(usize, usize)>,
}

pub fn verify_work(case: &VerifyCase, kind: KernelKind) -> Result<WorkAudit> {
    let mask = case.csr()?;
    let (q, k, v) = case.inputs()?;
    let coo;
    let input = match kind {
        KernelKind::Coo => {
            coo = mask.to_coo();
            KernelInput::Coo(&coo)
        }
        _ => kernel_input_for(case, kind, &mask)?,
    };
    let (result, touched) = attend_probed(&q, &k, &v, &input, None)?;

    let expected: Vec<(usize, usize)> = (0..mask.len())
        .flat_map(|i| {
            mask.neighbors(i)
                .expect("row in range")
                .iter()
                .map(move |&j| (i, j))
                .collect::<Vec<_>>()
        })
        .collect();
    let first_mismatch = touched
        .iter()
        .zip(&expected)
        .find(|(a, b)| a != b)
        .map(|(a, _)| *a)
        .or_else(|| {
            if touched.len() > expected.len() {
                Some(touched[expected.len()])
            } else if expected.len() > touched.len() {
                Some(expected[touched.len()])
            } else {
                None
            }
        });
    Ok(WorkAudit {
        pass: result.work == mask.nnz() as u64 && first_mismatch.is_none(),
        work: result.work,
        expected_nnz: mask.nnz() as u64,
        first_mismatch,
    })
}

/// Sequential composition: run one kernel per leg, carrying the softmax
/// state, and compare against a single CSR call on the disjoint union. Leg
/// overlap is a configuration error, not a comparison failure.
pub fn verify_composition(
    legs: &[MaskPattern],
    len: usize,
    dim: usize,
    seed: u64,
) -> Result<Deviation> {
    if legs.is_empty() {
        return Err(Error::InvalidConfig(
            "composition needs at least one leg".into(),
        ));
    }
    let mut union: Option<CsrMask> = None;
    let mut leg_masks = Vec::with_capacity(legs.len());
    for leg in legs {
        let mask = leg.generate(len)?;
        union = Some(match union {
            None => mask.clone(),
            Some(u) => union_disjoint(&u, &mask)?,
        });
        leg_masks.push(mask);
    }
    let union = union.expect("at least one leg");

    let q = random_uniform_matrix::<f32>(len, dim, derive_seed(seed, 0))?;
    let k = random_uniform_matrix::<f32>(len, dim, derive_seed(seed, 1))?;
    let v = random_uniform_matrix::<f32>(len, dim, derive_seed(seed, 2))?;

    let mut carry: Option<Carry<f32>> = None;
    let mut result: Option<AttentionResult<f32>> = None;
    for (leg, mask) in legs.iter().zip(&leg_masks) {
        let next = match leg {
            MaskPattern::Local { window } => attend(
                &q,
                &k,
                &v,
                &KernelInput::Local { window: *window },
                carry.take(),
            )?,
            MaskPattern::Dilated1d { window, dilation } => attend(
                &q,
                &k,
                &v,
                &KernelInput::Dilated1d {
                    window: *window,
                    dilation: *dilation,
                },
                carry.take(),
            )?,
            MaskPattern::Dilated2d { block, dilation } => attend(
                &q,
                &k,
                &v,
                &KernelInput::Dilated2d {
                    block: *block,
                    dilation: *dilation,
                },
                carry.take(),
            )?,
            MaskPattern::Global { indices, window } => attend(
                &q,
                &k,
                &v,
                &KernelInput::Global {
                    indices,
                    window: *window,
                },
                carry.take(),
            )?,
            MaskPattern::Random { .. } => attend_csr(&q, &k, &v, mask, carry.take())?,
        };
        carry = Some(next.clone().into_carry());
        result = Some(next);
    }
    let sequential = result.expect("at least one leg ran");
    let single = attend_csr(&q, &k, &v, &union, None)?;

    // Reduction order differs between the two routes, so the comparison runs
    // at ten times the verification tolerances; the single-call output is the
    // baseline.
    let tol = Tolerances::new(
        Tolerances::verification().rtol * 10.0,
        Tolerances::verification().atol * 10.0,
        true,
    )?;
    compare_with_empty_rows(&sequential.output.cast(), &single.output.cast(), &tol)
}

fn kernel_input_for<'a>(
    case: &'a VerifyCase,
    kind: KernelKind,
    mask: &'a CsrMask,
) -> Result<KernelInput<'a>> {
    match (kind, &case.mask) {
        (KernelKind::Csr, _) => Ok(KernelInput::Csr(mask)),
        (KernelKind::Local, CaseMask::Pattern(MaskPattern::Local { window })) => {
            Ok(KernelInput::Local { window: *window })
        }
        (KernelKind::Dilated1d, CaseMask::Pattern(MaskPattern::Dilated1d { window, dilation })) => {
            Ok(KernelInput::Dilated1d {
                window: *window,
                dilation: *dilation,
            })
        }
        (KernelKind::Dilated2d, CaseMask::Pattern(MaskPattern::Dilated2d { block, dilation })) => {
            Ok(KernelInput::Dilated2d {
                block: *block,
                dilation: *dilation,
            })
        }
        (KernelKind::Global, CaseMask::Pattern(MaskPattern::Global { indices, window })) => {
            Ok(KernelInput::Global {
                indices,
                window: *window,
            })
        }
        (kind, _) => Err(Error::InvalidConfig(format!(
            "kernel `{}` is not compatible with this case's mask form",
            kind.name()
        ))),
    }
}

fn run_kernel(
    case: &VerifyCase,
    kind: KernelKind,
    mask: &CsrMask,
    q: &DenseMatrix<f32>,
    k: &DenseMatrix<f32>,
    v: &DenseMatrix<f32>,
    init: Option<Carry<f32>>,
) -> Result<AttentionResult<f32>> {
    match kind {
        KernelKind::Coo => {
            let coo = mask.to_coo();
            attend(q, k, v, &KernelInput::Coo(&coo), init)
        }
        _ => attend(q, k, v, &kernel_input_for(case, kind, mask)?, init),
    }
}

/// Draw a pattern suitable for exercising `kind` at length `len`.
pub fn random_case_pattern(kind: KernelKind, len: usize, rng: &mut SplitMix64) -> MaskPattern {
    match kind {
        KernelKind::Csr | KernelKind::Coo => MaskPattern::Random {
            // Sparsity in [0.01, 1.0].
            sparsity: (rng.next_below(100) + 1) as f64 / 100.0,
            seed: rng.next_u64(),
        },
        KernelKind::Local => MaskPattern::Local {
            window: rng.next_below(300) as usize + 1,
        },
        KernelKind::Dilated1d => MaskPattern::Dilated1d {
            window: rng.next_below(300) as usize + 1,
            dilation: rng.next_below(8) as usize + 1,
        },
        KernelKind::Dilated2d => {
            let divisors: Vec<usize> = (1..=len).filter(|b| len.is_multiple_of(*b)).collect();
            MaskPattern::Dilated2d {
                block: divisors[rng.next_below(divisors.len() as u64) as usize],
                dilation: rng.next_below(8) as usize + 1,
            }
        }
        KernelKind::Global => {
            let count = rng.next_below(8) as usize;
            let mut indices: Vec<usize> = (0..count)
                .map(|_| rng.next_below(len as u64) as usize)
                .collect();
            indices.sort_unstable();
            indices.dedup();
            MaskPattern::Global {
                indices,
                window: rng.next_below(64) as usize + 1,
            }
        }
    }
}

/// Named suites exposed through the command-line interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Oracle,
    Work,
    Composition,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Self::Oracle),
            "work" => Ok(Self::Work),
            "composition" => Ok(Self::Composition),
            "all" => Ok(Self::All),
            other => Err(Error::InvalidConfig(format!("unknown suite `{other}`"))),
        }
    }
}

/// Aggregated result of one suite run.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub cases: usize,
    pub failures: Vec<String>,
    pub pass: bool,
}

impl SuiteReport {
    fn from_failures(suite: &str, cases: usize, failures: Vec<String>) -> Self {
        Self {
            suite: suite.to_string(),
            cases,
            pass: failures.is_empty(),
            failures,
        }
    }
}

/// Kernel-vs-reference suite: `cases` random patterns per kernel at the
/// default geometry.
pub fn run_oracle_suite(seed: u64, cases: usize) -> Result<SuiteReport> {
    let mut failures = Vec::new();
    let mut total = 0usize;
    for kind in KernelKind::ALL {
        let mut rng = SplitMix64::split(seed, kind as u64);
        for case_index in 0..cases {
            let pattern = random_case_pattern(kind, DEFAULT_LEN, &mut rng);
            let case = VerifyCase::pattern(pattern.clone()).with_seed(rng.next_u64());
            let dev = verify_kernel(&case, kind)?;
            total += 1;
            if !dev.pass {
                failures.push(format!(
                    "{} case {case_index} ({pattern:?}): first failure at {:?}, max abs {:.3e}, max rel {:.3e}",
                    kind.name(),
                    dev.first_failure,
                    dev.max_abs,
                    dev.max_rel
                ));
            }
        }
    }
    Ok(SuiteReport::from_failures("oracle", total, failures))
}

/// Work-count suite: edge masks plus `cases` random patterns per kernel.
pub fn run_work_suite(seed: u64, cases: usize) -> Result<SuiteReport> {
    let mut failures = Vec::new();
    let mut total = 0usize;
    let mut check = |label: String, audit: WorkAudit| {
        total += 1;
        if !audit.pass {
            failures.push(format!(
                "{label}: work {} vs nnz {}, first mismatch {:?}",
                audit.work, audit.expected_nnz, audit.first_mismatch
            ));
        }
    };

    for kind in [KernelKind::Csr, KernelKind::Coo] {
        let empty = VerifyCase::explicit(CsrMask::empty(16)?);
        check(format!("{} empty", kind.name()), verify_work(&empty, kind)?);
        let full = VerifyCase::pattern(MaskPattern::Random {
            sparsity: 1.0,
            seed: 3,
        })
        .with_geometry(16, 8);
        check(format!("{} full", kind.name()), verify_work(&full, kind)?);
    }
    let local = VerifyCase::pattern(MaskPattern::Local { window: 2 }).with_geometry(8, 4);
    check(
        "local w=2 L=8".into(),
        verify_work(&local, KernelKind::Local)?,
    );

    for kind in KernelKind::ALL {
        let mut rng = SplitMix64::split(seed, 0x100 + kind as u64);
        for case_index in 0..cases {
            let pattern = random_case_pattern(kind, 64, &mut rng);
            let case = VerifyCase::pattern(pattern)
                .with_geometry(64, 8)
                .with_seed(rng.next_u64());
            check(
                format!("{} case {case_index}", kind.name()),
                verify_work(&case, kind)?,
            );
        }
    }
    Ok(SuiteReport::from_failures("work", total, failures))
}

/// Composition suite: carried-state leg sequences against their unions.
pub fn run_composition_suite(seed: u64) -> Result<SuiteReport> {
    let mut failures = Vec::new();
    let mut total = 0usize;
    let window = 51;
    let configs: Vec<(String, Vec<MaskPattern>, usize)> = vec![
        (
            "local+global L=512".into(),
            vec![
                MaskPattern::Local { window },
                MaskPattern::Global {
                    indices: vec![0, 256, 511],
                    window,
                },
            ],
            512,
        ),
        (
            "diagonal alone L=64".into(),
            vec![MaskPattern::Local { window: 1 }],
            64,
        ),
        (
            "local+global L=256, small window".into(),
            vec![
                MaskPattern::Local { window: 3 },
                MaskPattern::Global {
                    indices: vec![17, 200],
                    window: 3,
                },
            ],
            256,
        ),
    ];
    for (label, legs, len) in configs {
        let dev = verify_composition(&legs, len, DEFAULT_DIM, derive_seed(seed, total as u64))?;
        total += 1;
        if !dev.pass {
            failures.push(format!(
                "{label}: first failure at {:?}, max abs {:.3e}",
                dev.first_failure, dev.max_abs
            ));
        }
    }
    Ok(SuiteReport::from_failures("composition", total, failures))
}

/// Run the selected suites.
pub fn run_suites(suite: Suite, seed: u64, cases: usize) -> Result<Vec<SuiteReport>> {
    let mut reports = Vec::new();
    if matches!(suite, Suite::Oracle | Suite::All) {
        reports.push(run_oracle_suite(seed, cases)?);
    }
    if matches!(suite, Suite::Work | Suite::All) {
        reports.push(run_work_suite(seed, cases.min(5))?);
    }
    if matches!(suite, Suite::Composition | Suite::All) {
        reports.push(run_composition_suite(seed)?);
    }
    Ok(reports)
}
