use super::*;
use proptest::prelude::*;

/// Brute-force membership over the full grid; the reference every generator
/// and neighbor list is checked against.
fn brute_force_rows(pattern: &MaskPattern, len: usize) -> Vec<Vec<usize>> {
    (0..len)
        .map(|i| {
            (0..len)
                .filter(|&j| match pattern {
                    MaskPattern::Local { window } => is_local(i, j, *window),
                    MaskPattern::Dilated1d { window, dilation } => {
                        is_dilated1d(i, j, *window, *dilation)
                    }
                    MaskPattern::Dilated2d { block, dilation } => {
                        is_dilated2d(i, j, len, *block, *dilation).unwrap()
                    }
                    MaskPattern::Global { indices, window } => {
                        (indices.contains(&i) || indices.contains(&j)) && !is_local(i, j, *window)
                    }
                    MaskPattern::Random { .. } => unreachable!(),
                })
                .collect()
        })
        .collect()
}

#[test]
fn local_predicate_examples() {
    assert!(is_local(0, 0, 1));
    assert!(!is_local(0, 1, 1));
    assert!(is_local(5, 3, 3));
}

#[test]
fn dilated1d_predicate_examples() {
    assert!(is_dilated1d(3, 3, 4, 2));
    assert!(!is_dilated1d(0, 3, 4, 2));
    assert!(is_dilated1d(0, 2, 4, 2));
}

#[test]
fn dilated2d_predicate_examples() {
    // L = 8, b = 4, r = 2.
    assert!(is_dilated2d(0, 2, 8, 4, 2).unwrap());
    assert!(!is_dilated2d(0, 5, 8, 4, 2).unwrap());
    assert!(!is_dilated2d(1, 3, 8, 4, 2).unwrap());
    assert!(is_dilated2d(9, 11, 16, 4, 1).unwrap());
    assert!(matches!(
        is_dilated2d(0, 0, 10, 3, 1),
        Err(Error::InvalidPattern(_))
    ));
}

#[test]
fn local_window_nnz_at_length_eight() {
    // Rows 0 and 7 contribute 2 each, rows 1..=6 contribute 3 each: 22.
    let mask = MaskPattern::Local { window: 2 }.generate(8).unwrap();
    assert_eq!(mask.nnz(), 22);
    assert_eq!(MaskPattern::Local { window: 2 }.nnz(8).unwrap(), 22);
    assert!((mask.sparsity_factor() - 0.34375).abs() < 1e-15);
}

#[test]
fn global_mask_excludes_local_window() {
    let pattern = MaskPattern::Global {
        indices: vec![0],
        window: 1,
    };
    let mask = pattern.generate(6).unwrap();
    assert_eq!(mask.nnz(), 10);
    // Row 0 covers columns 1..=5; rows 1..=5 cover column 0; (0, 0) is
    // excluded because it sits inside the local window.
    assert!(!mask.contains(0, 0));
    assert_eq!(mask.neighbors(0).unwrap(), &[1, 2, 3, 4, 5]);
    for i in 1..6 {
        assert_eq!(mask.neighbors(i).unwrap(), &[0]);
    }
}

#[test]
fn random_full_density_is_the_full_mask() {
    for seed in [0u64, 17] {
        let mask = MaskPattern::Random {
            sparsity: 1.0,
            seed,
        }
        .generate(4)
        .unwrap();
        assert_eq!(mask.nnz(), 16);
    }
}

#[test]
fn random_count_is_exact_and_seeded() {
    let p = MaskPattern::Random {
        sparsity: 0.3,
        seed: 11,
    };
    let a = p.generate(32).unwrap();
    let b = p.generate(32).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.nnz(), (0.3f64 * 1024.0).round() as usize);
    let c = MaskPattern::Random {
        sparsity: 0.3,
        seed: 12,
    }
    .generate(32)
    .unwrap();
    assert_ne!(a, c);
}

#[test]
fn random_complement_sampling_matches_count() {
    // sparsity > 1/2 exercises the complement path.
    let p = MaskPattern::Random {
        sparsity: 0.9,
        seed: 5,
    };
    let mask = p.generate(20).unwrap();
    assert_eq!(mask.nnz(), (0.9f64 * 400.0).round() as usize);
}

#[test]
fn neighbors_examples() {
    let local = MaskPattern::Local { window: 2 };
    assert_eq!(local.neighbors(0, 8).unwrap(), vec![0, 1]);
    assert_eq!(local.neighbors(4, 8).unwrap(), vec![3, 4, 5]);
    assert!(local.neighbors(8, 8).is_err());
}

#[test]
fn pattern_validation_errors() {
    assert!(MaskPattern::Local { window: 0 }.validate(4).is_err());
    assert!(MaskPattern::Dilated1d {
        window: 2,
        dilation: 0
    }
    .validate(4)
    .is_err());
    assert!(MaskPattern::Dilated2d {
        block: 3,
        dilation: 1
    }
    .validate(4)
    .is_err());
    assert!(MaskPattern::Global {
        indices: vec![1, 1],
        window: 1
    }
    .validate(4)
    .is_err());
    assert!(MaskPattern::Global {
        indices: vec![4],
        window: 1
    }
    .validate(4)
    .is_err());
    assert!(MaskPattern::Random {
        sparsity: 0.0,
        seed: 0
    }
    .validate(4)
    .is_err());
    assert!(MaskPattern::Random {
        sparsity: 1.5,
        seed: 0
    }
    .validate(4)
    .is_err());
}

#[test]
fn dilation_one_reduces_to_local() {
    for len in [1usize, 7, 16] {
        for window in [1usize, 2, 5, 40] {
            let a = MaskPattern::Local { window }.generate(len).unwrap();
            let b = MaskPattern::Dilated1d {
                window,
                dilation: 1,
            }
            .generate(len)
            .unwrap();
            assert_eq!(a, b, "len {len} window {window}");
        }
    }
}

#[test]
fn single_block_without_dilation_is_full() {
    let len = 12;
    let mask = MaskPattern::Dilated2d {
        block: len,
        dilation: 1,
    }
    .generate(len)
    .unwrap();
    assert_eq!(mask.nnz(), len * len);
}

#[test]
fn dilated2d_skips_rows_off_the_stride() {
    let mask = MaskPattern::Dilated2d {
        block: 4,
        dilation: 2,
    }
    .generate(8)
    .unwrap();
    // Offsets 1 and 3 in each block are inactive rows.
    assert_eq!(mask.neighbors(1).unwrap(), &[] as &[usize]);
    assert_eq!(mask.neighbors(0).unwrap(), &[0, 2]);
    assert_eq!(mask.neighbors(6).unwrap(), &[4, 6]);
    assert_eq!(mask.nnz(), 2 * 2 * 2);
}

#[test]
fn local_and_global_are_disjoint_by_construction() {
    let len = 64;
    let local = MaskPattern::Local { window: 5 }.generate(len).unwrap();
    let global = MaskPattern::Global {
        indices: vec![0, 31, 63],
        window: 5,
    }
    .generate(len)
    .unwrap();
    let union = union_disjoint(&local, &global).unwrap();
    assert_eq!(union.nnz(), local.nnz() + global.nnz());
}

#[test]
fn generator_agrees_with_predicates_on_fixed_cases() {
    let cases: Vec<(MaskPattern, usize)> = vec![
        (MaskPattern::Local { window: 3 }, 10),
        (MaskPattern::Local { window: 20 }, 10),
        (
            MaskPattern::Dilated1d {
                window: 7,
                dilation: 3,
            },
            12,
        ),
        (
            MaskPattern::Dilated2d {
                block: 5,
                dilation: 2,
            },
            15,
        ),
        (
            MaskPattern::Global {
                indices: vec![2, 9],
                window: 3,
            },
            11,
        ),
    ];
    for (pattern, len) in cases {
        let expected = brute_force_rows(&pattern, len);
        let mask = pattern.generate(len).unwrap();
        for (i, row) in expected.iter().enumerate() {
            assert_eq!(mask.neighbors(i).unwrap(), &row[..], "{pattern:?} row {i}");
            assert_eq!(
                &pattern.neighbors(i, len).unwrap(),
                row,
                "{pattern:?} row {i}"
            );
        }
        assert_eq!(
            pattern.nnz(len).unwrap(),
            expected.iter().map(Vec::len).sum::<usize>()
        );
    }
}

#[test]
fn fitted_windows_land_near_target() {
    let len = 512;
    for target in [0.01f64, 0.05, 0.2] {
        let w = fit_local_window(len, target);
        let got = MaskPattern::Local { window: w }
            .sparsity_factor(len)
            .unwrap();
        // One window step moves sparsity by at most 2L cells.
        assert!(
            (got - target).abs() <= 2.0 / len as f64,
            "target {target} got {got} (w = {w})"
        );
    }
    let w = fit_dilated1d_window(len, 2, 0.05);
    let got = MaskPattern::Dilated1d {
        window: w,
        dilation: 2,
    }
    .sparsity_factor(len)
    .unwrap();
    assert!((got - 0.05).abs() <= 2.0 / len as f64);

    let b = fit_dilated2d_block(len, 1, 0.05);
    assert_eq!(len % b, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generator_rows_match_predicates(
        len in 1usize..40,
        window in 1usize..12,
        dilation in 1usize..5,
    ) {
        let patterns = vec![
            MaskPattern::Local { window },
            MaskPattern::Dilated1d { window, dilation },
        ];
        for pattern in patterns {
            let rows = brute_force_rows(&pattern, len);
            let mask = pattern.generate(len).unwrap();
            for (i, row) in rows.iter().enumerate() {
                prop_assert_eq!(mask.neighbors(i).unwrap(), &row[..]);
            }
        }
    }

    #[test]
    fn dilated2d_generator_matches_predicate(
        blocks in 1usize..6,
        block in 1usize..8,
        dilation in 1usize..4,
    ) {
        let len = blocks * block;
        let pattern = MaskPattern::Dilated2d { block, dilation };
        let rows = brute_force_rows(&pattern, len);
        let mask = pattern.generate(len).unwrap();
        for (i, row) in rows.iter().enumerate() {
            prop_assert_eq!(mask.neighbors(i).unwrap(), &row[..]);
        }
    }

    #[test]
    fn global_generator_matches_predicate(
        len in 2usize..40,
        window in 1usize..8,
        seed in any::<u64>(),
    ) {
        let mut rng = crate::rng::SplitMix64::new(seed);
        let count = (rng.next_below(4) + 1) as usize;
        let mut indices: Vec<usize> = (0..count).map(|_| rng.next_below(len as u64) as usize).collect();
        indices.sort_unstable();
        indices.dedup();
        let pattern = MaskPattern::Global { indices, window };
        let rows = brute_force_rows(&pattern, len);
        let mask = pattern.generate(len).unwrap();
        for (i, row) in rows.iter().enumerate() {
            prop_assert_eq!(mask.neighbors(i).unwrap(), &row[..]);
        }
    }

    #[test]
    fn random_sparsity_is_exact(len in 1usize..40, num in 1usize..100, seed in any::<u64>()) {
        let sparsity = num as f64 / 100.0;
        let pattern = MaskPattern::Random { sparsity, seed };
        let mask = pattern.generate(len).unwrap();
        let expected = (sparsity * (len * len) as f64).round() as usize;
        prop_assert_eq!(mask.nnz(), expected);
        prop_assert_eq!(
            mask.sparsity_factor(),
            expected as f64 / (len * len) as f64
        );
    }

    #[test]
    fn conversions_round_trip(len in 1usize..30, num in 0usize..100, seed in any::<u64>()) {
        let mask = if num == 0 {
            CsrMask::empty(len).unwrap()
        } else {
            MaskPattern::Random { sparsity: num as f64 / 100.0, seed }.generate(len).unwrap()
        };
        let coo = mask.to_coo();
        prop_assert_eq!(coo.nnz(), mask.nnz());
        prop_assert_eq!(&coo.to_csr(), &mask);
        prop_assert_eq!(dense_to_csr(&csr_to_dense(&mask)).unwrap(), mask);
    }
}
