use super::*;
use crate::mask::{dense_to_csr, union_disjoint, MaskPattern};
use crate::rng::SplitMix64;
use crate::tensor::{random_uniform_matrix, Tolerances};
use proptest::prelude::*;

/// Independent two-pass reference for one row: subtract the max, exponentiate,
/// normalize, then take the weighted value sum. Used as the oracle for the
/// online recurrence.
fn two_pass_row(scores: &[f64], values: &[Vec<f64>]) -> Vec<f64> {
    let dim = values[0].len();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let denom: f64 = weights.iter().sum();
    let mut out = vec![0.0; dim];
    for (w, value) in weights.iter().zip(values) {
        for (o, v) in out.iter_mut().zip(value) {
            *o += (w / denom) * v;
        }
    }
    out
}

fn inputs<T: crate::tensor::Element>(
    len: usize,
    dim: usize,
    seed: u64,
) -> (DenseMatrix<T>, DenseMatrix<T>, DenseMatrix<T>) {
    (
        random_uniform_matrix(len, dim, seed).unwrap(),
        random_uniform_matrix(len, dim, seed.wrapping_add(1)).unwrap(),
        random_uniform_matrix(len, dim, seed.wrapping_add(2)).unwrap(),
    )
}

#[test]
fn online_matches_two_pass_prefixes() {
    let mut rng = SplitMix64::new(3);
    let dim = 4;
    let scores: Vec<f64> = (0..12).map(|_| rng.next_f64() * 6.0 - 3.0).collect();
    let values: Vec<Vec<f64>> = (0..12)
        .map(|_| (0..dim).map(|_| rng.next_f64()).collect())
        .collect();
    let mut out = vec![0.0f64; dim];
    let (mut m, mut l) = (f64::NEG_INFINITY, 0.0);
    for prefix in 1..=scores.len() {
        let (m2, l2) = online_update(m, l, &mut out, scores[prefix - 1], &values[prefix - 1]);
        m = m2;
        l = l2;
        let reference = two_pass_row(&scores[..prefix], &values[..prefix]);
        for (a, b) in out.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-12, "prefix {prefix}: {a} vs {b}");
        }
    }
}

#[test]
fn diagonal_mask_returns_values() {
    let (q, k, v) = inputs::<f32>(16, 8, 5);
    let mask = MaskPattern::Local { window: 1 }.generate(16).unwrap();
    let got = attend_csr(&q, &k, &v, &mask, None).unwrap();
    assert_eq!(got.output, v);
    assert_eq!(got.work, 16);
}

#[test]
fn empty_mask_gives_zero_rows_and_no_work() {
    let (q, k, v) = inputs::<f32>(8, 4, 9);
    let mask = crate::mask::CsrMask::empty(8).unwrap();
    let got = attend_csr(&q, &k, &v, &mask, None).unwrap();
    assert!(got.output.data().iter().all(|&x| x == 0.0));
    assert_eq!(got.work, 0);
    assert!(got.state.row_is_untouched(3));
}

#[test]
fn singleton_mask_copies_one_value_row() {
    let (q, k, v) = inputs::<f64>(8, 4, 2);
    let mut grid = vec![vec![0u8; 8]; 8];
    grid[2][5] = 1;
    let mask = dense_to_csr(&grid).unwrap();
    let got = attend_coo(&q, &k, &v, &mask.to_coo(), None).unwrap();
    assert_eq!(got.output.row(2), v.row(5));
    for i in (0..8).filter(|&i| i != 2) {
        assert!(got.output.row(i).iter().all(|&x| x == 0.0));
    }
    assert_eq!(got.work, 1);
}

#[test]
fn coo_equals_csr_bit_for_bit() {
    let (q, k, v) = inputs::<f32>(64, 16, 11);
    for sparsity in [0.05, 0.3, 0.9] {
        let csr = MaskPattern::Random { sparsity, seed: 21 }
            .generate(64)
            .unwrap();
        let coo = csr.to_coo();
        let a = attend_csr(&q, &k, &v, &csr, None).unwrap();
        let b = attend_coo(&q, &k, &v, &coo, None).unwrap();
        assert_eq!(a.output, b.output);
        assert_eq!(a.state, b.state);
        assert_eq!(a.work, b.work);
        assert_eq!(a.work, csr.nnz() as u64);
    }
}

#[test]
fn implicit_kernels_equal_csr_on_generated_masks() {
    let len = 48;
    let (q, k, v) = inputs::<f32>(len, 8, 23);
    let indices = vec![0usize, 17, 47];
    let cases: Vec<(KernelInput<'_>, MaskPattern)> = vec![
        (
            KernelInput::Local { window: 5 },
            MaskPattern::Local { window: 5 },
        ),
        (
            KernelInput::Dilated1d {
                window: 9,
                dilation: 3,
            },
            MaskPattern::Dilated1d {
                window: 9,
                dilation: 3,
            },
        ),
        (
            KernelInput::Dilated2d {
                block: 12,
                dilation: 2,
            },
            MaskPattern::Dilated2d {
                block: 12,
                dilation: 2,
            },
        ),
        (
            KernelInput::Global {
                indices: &indices,
                window: 5,
            },
            MaskPattern::Global {
                indices: indices.clone(),
                window: 5,
            },
        ),
    ];
    for (input, pattern) in &cases {
        let mask = pattern.generate(len).unwrap();
        let implicit = attend(&q, &k, &v, input, None).unwrap();
        let explicit = attend_csr(&q, &k, &v, &mask, None).unwrap();
        assert_eq!(implicit.output, explicit.output, "{pattern:?}");
        assert_eq!(implicit.state, explicit.state, "{pattern:?}");
        assert_eq!(implicit.work, mask.nnz() as u64, "{pattern:?}");
    }
}

#[test]
fn dilated1d_with_unit_dilation_equals_local() {
    let (q, k, v) = inputs::<f32>(32, 8, 31);
    let a = attend_local(&q, &k, &v, 4, None).unwrap();
    let b = attend_dilated1d(&q, &k, &v, 4, 1, None).unwrap();
    assert_eq!(a.output, b.output);
    assert_eq!(a.work, b.work);
}

#[test]
fn local_window_one_returns_values() {
    let (q, k, v) = inputs::<f64>(16, 4, 37);
    let got = attend_local(&q, &k, &v, 1, None).unwrap();
    assert_eq!(got.output, v);
}

#[test]
fn kernels_match_oracle_at_verification_tolerances() {
    let len = 64;
    let dim = 16;
    let (q, k, v) = inputs::<f32>(len, dim, 41);
    let qd: DenseMatrix<f64> = q.cast();
    let kd: DenseMatrix<f64> = k.cast();
    let vd: DenseMatrix<f64> = v.cast();
    let tol = Tolerances::verification();
    for sparsity in [0.02, 0.2, 0.7] {
        let mask = MaskPattern::Random { sparsity, seed: 77 }
            .generate(len)
            .unwrap();
        let reference = sdp_masked_oracle(&qd, &kd, &vd, &mask).unwrap();
        let got = attend_csr(&q, &k, &v, &mask, None).unwrap();
        let up: DenseMatrix<f64> = got.output.cast();
        for i in 0..len {
            let empty = mask.neighbors(i).unwrap().is_empty();
            for (a, b) in up.row(i).iter().zip(reference.row(i)) {
                if empty {
                    assert!(b.is_nan());
                    assert_eq!(*a, 0.0);
                } else {
                    assert!(tol.pair_ok(*a, *b), "row {i}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn work_counts_equal_nnz() {
    let (q, k, v) = inputs::<f32>(8, 4, 51);
    let mask = MaskPattern::Local { window: 2 }.generate(8).unwrap();
    assert_eq!(mask.nnz(), 22);
    let got = attend_csr(&q, &k, &v, &mask, None).unwrap();
    assert_eq!(got.work, 22);
    let got = attend_local(&q, &k, &v, 2, None).unwrap();
    assert_eq!(got.work, 22);
}

#[test]
fn probe_records_exactly_the_mask_coordinates() {
    let len = 32;
    let (q, k, v) = inputs::<f32>(len, 8, 61);
    let indices = vec![3usize, 20];
    let pattern = MaskPattern::Global {
        indices: indices.clone(),
        window: 4,
    };
    let mask = pattern.generate(len).unwrap();
    let expected: Vec<TouchedPair> = (0..len)
        .flat_map(|i| {
            mask.neighbors(i)
                .unwrap()
                .iter()
                .map(move |&j| (i, j))
                .collect::<Vec<_>>()
        })
        .collect();
    let (result, touched) = attend_probed(
        &q,
        &k,
        &v,
        &KernelInput::Global {
            indices: &indices,
            window: 4,
        },
        None,
    )
    .unwrap();
    assert_eq!(touched, expected);
    assert_eq!(result.work as usize, expected.len());
}

#[test]
fn composition_over_disjoint_masks_matches_union() {
    let len = 128;
    let dim = 16;
    let (q, k, v) = inputs::<f32>(len, dim, 71);
    let window = 7;
    let indices = vec![0usize, 64, 127];
    let local = MaskPattern::Local { window }.generate(len).unwrap();
    let global = MaskPattern::Global {
        indices: indices.clone(),
        window,
    }
    .generate(len)
    .unwrap();
    let union = union_disjoint(&local, &global).unwrap();

    let first = attend_local(&q, &k, &v, window, None).unwrap();
    let first_work = first.work;
    let second = attend_global(&q, &k, &v, &indices, window, Some(first.into_carry())).unwrap();
    let single = attend_csr(&q, &k, &v, &union, None).unwrap();

    assert_eq!(first_work, local.nnz() as u64);
    assert_eq!(second.work, global.nnz() as u64);
    assert_eq!(single.work, union.nnz() as u64);
    // Reduction order differs between the two routes, so compare at a loose
    // multiple of the verification tolerances rather than bitwise.
    let tol = Tolerances::new(1e-4, 1e-7, true).unwrap();
    let a: DenseMatrix<f64> = second.output.cast();
    let b: DenseMatrix<f64> = single.output.cast();
    assert!(crate::tensor::allclose(&a, &b, &tol).unwrap());
}

#[test]
fn composition_rejects_bad_carry() {
    let (q, k, v) = inputs::<f32>(8, 4, 81);
    let state = SoftmaxState::new(vec![0.0f32; 4], vec![1.0; 4]).unwrap();
    let carry = Carry {
        state,
        output: DenseMatrix::zeros(4, 4).unwrap(),
    };
    assert!(matches!(
        attend_local(&q, &k, &v, 2, Some(carry)),
        Err(Error::InvalidState(_))
    ));

    // Nonzero output on an untouched row is also invalid.
    let state = SoftmaxState::fresh(8);
    let mut output = DenseMatrix::zeros(8, 4).unwrap();
    output.set(3, 0, 1.0);
    let carry = Carry { state, output };
    assert!(matches!(
        attend_local(&q, &k, &v, 2, Some(carry)),
        Err(Error::InvalidState(_))
    ));
}

#[test]
fn large_scores_stay_finite() {
    let len = 32;
    let dim = 8;
    let (q, k, v) = inputs::<f32>(len, dim, 91);
    let boosted =
        DenseMatrix::new(len, dim, q.data().iter().map(|&x| x * 1000.0).collect()).unwrap();
    let mask = MaskPattern::Local { window: 5 }.generate(len).unwrap();
    let got = attend_csr(&boosted, &k, &v, &mask, None).unwrap();
    assert!(got.output.data().iter().all(|x| x.is_finite()));
}

#[test]
fn scheduling_does_not_change_bits() {
    let (q, k, v) = inputs::<f32>(96, 16, 101);
    let mask = MaskPattern::Random {
        sparsity: 0.2,
        seed: 5,
    }
    .generate(96)
    .unwrap();
    let baseline = attend_csr(&q, &k, &v, &mask, None).unwrap();
    for threads in [1usize, 2, 4] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let got = pool.install(|| attend_csr(&q, &k, &v, &mask, None).unwrap());
        assert_eq!(got.output, baseline.output, "{threads} threads");
        assert_eq!(got.state, baseline.state);
    }
}

#[test]
fn shape_mismatch_is_rejected() {
    let q = DenseMatrix::<f32>::zeros(4, 4).unwrap();
    let k = DenseMatrix::<f32>::zeros(4, 5).unwrap();
    let mask = MaskPattern::Local { window: 1 }.generate(4).unwrap();
    assert!(matches!(
        attend_csr(&q, &k, &q, &mask, None),
        Err(Error::ShapeMismatch { .. })
    ));
    assert!(attend_csr(
        &q,
        &q,
        &q,
        &MaskPattern::Local { window: 1 }.generate(5).unwrap(),
        None
    )
    .is_err());
    let _ = k;
}

#[test]
fn invalid_pattern_parameters_are_rejected() {
    let (q, k, v) = inputs::<f32>(8, 4, 111);
    assert!(attend_local(&q, &k, &v, 0, None).is_err());
    assert!(attend_dilated1d(&q, &k, &v, 2, 0, None).is_err());
    assert!(attend_dilated2d(&q, &k, &v, 3, 1, None).is_err());
    assert!(attend_global(&q, &k, &v, &[1, 1], 2, None).is_err());
    assert!(attend_global(&q, &k, &v, &[8], 2, None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn online_equals_two_pass_for_random_rows(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let n = (rng.next_below(64) + 1) as usize;
        let dim = (rng.next_below(8) + 1) as usize;
        let scores: Vec<f64> = (0..n).map(|_| rng.next_f64() * 20.0 - 10.0).collect();
        let values: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.next_f64()).collect())
            .collect();
        let mut out = vec![0.0f64; dim];
        let (mut m, mut l) = (f64::NEG_INFINITY, 0.0);
        for (s, val) in scores.iter().zip(&values) {
            let next = online_update(m, l, &mut out, *s, val);
            m = next.0;
            l = next.1;
        }
        let reference = two_pass_row(&scores, &values);
        for (a, b) in out.iter().zip(&reference) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_precision_online_stays_within_relative_bound(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let n = (rng.next_below(64) + 1) as usize;
        let dim = (rng.next_below(8) + 1) as usize;
        let scores: Vec<f64> = (0..n).map(|_| rng.next_f64() * 20.0 - 10.0).collect();
        let values: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.next_f64()).collect())
            .collect();
        let mut out = vec![0.0f32; dim];
        let (mut m, mut l) = (f32::NEG_INFINITY, 0.0f32);
        for (s, val) in scores.iter().zip(&values) {
            let val32: Vec<f32> = val.iter().map(|&x| x as f32).collect();
            let next = online_update(m, l, &mut out, *s as f32, &val32);
            m = next.0;
            l = next.1;
        }
        let reference = two_pass_row(&scores, &values);
        for (a, b) in out.iter().zip(&reference) {
            let rel = (*a as f64 - b).abs() / b.abs().max(1e-30);
            prop_assert!(rel < 1e-5, "relative deviation {rel:.3e}");
        }
    }

    #[test]
    fn work_always_equals_nnz(seed in any::<u64>(), num in 1usize..100) {
        let len = 24;
        let (q, k, v) = inputs::<f32>(len, 4, seed);
        let mask = MaskPattern::Random { sparsity: num as f64 / 100.0, seed }
            .generate(len)
            .unwrap();
        let got = attend_csr(&q, &k, &v, &mask, None).unwrap();
        prop_assert_eq!(got.work, mask.nnz() as u64);
        let got = attend_coo(&q, &k, &v, &mask.to_coo(), None).unwrap();
        prop_assert_eq!(got.work, mask.nnz() as u64);
    }
}
