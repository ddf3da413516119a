//! Property tests. Random instances are drawn from seeds chosen by proptest
//! so that shrinking stays meaningful on shapes and exponents.

use num_complex::Complex;
use proptest::prelude::*;
use series_lab::decomposition::{pairing_lower_bound, triple_norm, SolverConfig};
use series_lab::hardy::umd::{umd_transform, umd_transform_norm, SignVector, TransformOptions};
use series_lab::hardy::{random_hardy_polynomial, MultiIndex, Quadrature};
use series_lab::rng::stream_rng;
use series_lab::series::{exact_rademacher_moment, sample_series_norm, Randomizer};
use series_lab::{
    chi_norm, hilbert_sum_norm, hstack, schatten_norm, singular_values, vstack, CMatrix, CoefficientSpace, SchattenExponent,
    Sequence,
};

fn exponent_strategy() -> impl Strategy<Value = SchattenExponent> {
    prop_oneof![
        4 => (1.0f64..8.0).prop_map(|p| SchattenExponent::new(p).unwrap()),
        1 => Just(SchattenExponent::INFINITY),
    ]
}

fn matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
    CMatrix::random_gaussian(rows, cols, &mut stream_rng(seed, 0))
}

fn sequence(n: usize, d1: usize, d2: usize, seed: u64) -> Sequence {
    Sequence::random_gaussian(n, d1, d2, &mut stream_rng(seed, 1))
}

/// Random unitary from the Q factor of a Gram-Schmidt pass.
fn unitary(n: usize, seed: u64) -> CMatrix {
    let g = matrix(n, n, seed);
    let mut cols: Vec<Vec<Complex<f64>>> = Vec::new();
    for j in 0..n {
        let mut v: Vec<Complex<f64>> = (0..n).map(|i| g[(i, j)]).collect();
        for q in &cols {
            let dot: Complex<f64> = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= dot * qi;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols.push(v.into_iter().map(|z| z / norm).collect());
    }
    CMatrix::from_fn(n, n, |i, j| cols[j][i])
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schatten_norm_axioms(rows in 1usize..7, cols in 1usize..7, seed: u64, p in exponent_strategy(), s in -3.0f64..3.0) {
        let x = matrix(rows, cols, seed);
        let y = matrix(rows, cols, seed ^ 1);
        let nx = schatten_norm(&x, p).unwrap();
        prop_assert!(nx > 0.0);
        prop_assert!(close(schatten_norm(&x.scale(s), p).unwrap(), s.abs() * nx, 1e-10));
        prop_assert!(schatten_norm(&x.add(&y), p).unwrap() <= nx + schatten_norm(&y, p).unwrap() + 1e-10);
        prop_assert!(close(schatten_norm(&x.adjoint(), p).unwrap(), nx, 1e-10));
        prop_assert_eq!(schatten_norm(&CMatrix::zeros(rows, cols), p).unwrap(), 0.0);
    }

    #[test]
    fn schatten_norm_decreases_in_p(rows in 1usize..7, cols in 1usize..7, seed: u64, p in 1.0f64..6.0, dp in 0.0f64..4.0) {
        let x = matrix(rows, cols, seed);
        let lo = schatten_norm(&x, SchattenExponent::new(p).unwrap()).unwrap();
        let hi = schatten_norm(&x, SchattenExponent::new(p + dp).unwrap()).unwrap();
        let op = schatten_norm(&x, SchattenExponent::INFINITY).unwrap();
        prop_assert!(hi <= lo * (1.0 + 1e-12));
        prop_assert!(op <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn schatten_norm_is_unitarily_invariant(rows in 1usize..6, cols in 1usize..6, seed: u64, p in exponent_strategy()) {
        let x = matrix(rows, cols, seed);
        let ux = unitary(rows, seed ^ 2).matmul(&x).matmul(&unitary(cols, seed ^ 3));
        prop_assert!(close(schatten_norm(&ux, p).unwrap(), schatten_norm(&x, p).unwrap(), 1e-9));
    }

    #[test]
    fn singular_values_sorted_and_frobenius(rows in 1usize..9, cols in 1usize..9, seed: u64) {
        let x = matrix(rows, cols, seed);
        let s = singular_values(&x).unwrap();
        prop_assert_eq!(s.len(), rows.min(cols));
        prop_assert!(s.values().windows(2).all(|w| w[0] >= w[1]));
        let sq: f64 = s.values().iter().map(|v| v * v).sum();
        prop_assert!(close(sq, x.frobenius_sq(), 1e-10));
    }

    #[test]
    fn chi_is_max_of_stacks(n in 1usize..6, d1 in 1usize..5, d2 in 1usize..5, seed: u64, q in exponent_strategy()) {
        let seq = sequence(n, d1, d2, seed);
        let v = schatten_norm(&vstack(&seq), q).unwrap();
        let h = schatten_norm(&hstack(&seq), q).unwrap();
        prop_assert!(close(chi_norm(&seq, q).unwrap(), v.max(h), 1e-9));
    }

    #[test]
    fn chi_invariant_under_permutation_and_phases(n in 2usize..6, d in 1usize..4, seed: u64, q in exponent_strategy(), rot in 0usize..6) {
        let seq = sequence(n, d, d + 1, seed);
        let mut terms = seq.terms().to_vec();
        terms.rotate_left(rot % n);
        terms.swap(0, n - 1);
        let mut rng = stream_rng(seed, 9);
        let phased: Vec<CMatrix> = terms
            .into_iter()
            .map(|t| t.scale_complex(Randomizer::Steinhaus.draw::<f64, _>(&mut rng)))
            .collect();
        let other = Sequence::new(phased).unwrap();
        prop_assert!(close(chi_norm(&other, q).unwrap(), chi_norm(&seq, q).unwrap(), 1e-9));
    }

    #[test]
    fn chi_ignores_zero_padding(n in 1usize..5, d in 1usize..4, seed: u64, q in exponent_strategy()) {
        let seq = sequence(n, d, d, seed);
        let mut terms = seq.terms().to_vec();
        terms.push(CMatrix::zeros(d, d));
        let padded = Sequence::new(terms).unwrap();
        prop_assert!(close(chi_norm(&padded, q).unwrap(), chi_norm(&seq, q).unwrap(), 1e-12));
        let embedded = seq.map(|t| CMatrix::from_fn(d + 1, d + 2, |i, j| if i < d && j < d { t[(i, j)] } else { Complex::new(0.0, 0.0) }));
        prop_assert!(close(chi_norm(&embedded, q).unwrap(), chi_norm(&seq, q).unwrap(), 1e-9));
    }

    #[test]
    fn chi_two_is_hilbert_sum(n in 1usize..6, d1 in 1usize..5, d2 in 1usize..5, seed: u64) {
        let seq = sequence(n, d1, d2, seed);
        prop_assert!(close(chi_norm(&seq, SchattenExponent::TWO).unwrap(), hilbert_sum_norm(&seq), 1e-12));
    }

    #[test]
    fn exact_c2_identity(n in 1usize..10, d1 in 1usize..4, d2 in 1usize..4, seed: u64) {
        let seq = sequence(n, d1, d2, seed);
        let exact = exact_rademacher_moment(&seq, SchattenExponent::TWO, 2.0).unwrap();
        prop_assert!(exact.exact);
        prop_assert!((exact.estimate - hilbert_sum_norm(&seq)).abs() <= 1e-10 * (1.0 + exact.estimate));
    }

    #[test]
    fn exact_moments_scale_and_increase(n in 1usize..8, d in 1usize..4, seed: u64, p in exponent_strategy(), s in 0.1f64..5.0) {
        let seq = sequence(n, d, d, seed);
        let m2 = exact_rademacher_moment(&seq, p, 2.0).unwrap().estimate;
        let m4 = exact_rademacher_moment(&seq, p, 4.0).unwrap().estimate;
        prop_assert!(m2 <= m4 * (1.0 + 1e-12));
        let scaled = exact_rademacher_moment(&seq.scale(s), p, 2.0).unwrap().estimate;
        prop_assert!(close(scaled, s * m2, 1e-10));
    }

    #[test]
    fn sampled_norms_are_reproducible(n in 1usize..6, d in 1usize..4, seed: u64, p in exponent_strategy()) {
        let seq = sequence(n, d, d, seed);
        for rnd in [Randomizer::Rademacher, Randomizer::Gaussian, Randomizer::Steinhaus] {
            let a = sample_series_norm(&seq, rnd, p, 2.0, 200, seed).unwrap();
            let b = sample_series_norm(&seq, rnd, p, 2.0, 200, seed).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn triple_norm_sandwich(n in 1usize..4, d1 in 1usize..4, d2 in 1usize..4, seed: u64, p in 1.0f64..2.0) {
        let e = SchattenExponent::new(p).unwrap();
        let seq = sequence(n, d1, d2, seed);
        let res = triple_norm(&seq, e, &SolverConfig { seed, ..SolverConfig::default() }).unwrap();
        // feasible split
        let sum = res.y_terms.zip_with(&res.z_terms, |a, b| a.add(b)).unwrap();
        let diff = sum.zip_with(&seq, |a, b| a.sub(b)).unwrap();
        prop_assert!(diff.frobenius_sq().sqrt() <= 1e-9 * (1.0 + seq.frobenius_sq().sqrt()));
        // at most the better pure split, at least the certificate and, as
        // ||.||_p >= ||.||_2 for p <= 2, at least the Hilbert-Schmidt norm
        let pure = schatten_norm(&vstack(&seq), e).unwrap().min(schatten_norm(&hstack(&seq), e).unwrap());
        prop_assert!(res.objective <= pure * (1.0 + 1e-12));
        prop_assert!(res.certificate_lower_bound <= res.objective * (1.0 + 1e-9));
        prop_assert!(hilbert_sum_norm(&seq) <= res.objective * (1.0 + 1e-9));
        if let Some(w) = &res.witness {
            prop_assert!(pairing_lower_bound(&seq, e, w).unwrap() <= res.objective * (1.0 + 1e-9));
        }
    }

    #[test]
    fn triple_norm_is_homogeneous(n in 1usize..4, d in 1usize..3, seed: u64, s in 0.2f64..5.0) {
        let e = SchattenExponent::new(1.0).unwrap();
        let seq = sequence(n, d, d, seed);
        let cfg = SolverConfig { seed, ..SolverConfig::default() };
        let a = triple_norm(&seq, e, &cfg).unwrap().objective;
        let b = triple_norm(&seq.scale(s), e, &cfg).unwrap().objective;
        prop_assert!((b - s * a).abs() <= 1e-4 * s * a);
    }

    #[test]
    fn triple_norm_at_two_is_hilbert_sum(n in 1usize..5, d1 in 1usize..4, d2 in 1usize..4, seed: u64) {
        let seq = sequence(n, d1, d2, seed);
        let obj = triple_norm(&seq, SchattenExponent::TWO, &SolverConfig::default()).unwrap().objective;
        prop_assert!((obj - hilbert_sum_norm(&seq)).abs() <= 1e-6 * hilbert_sum_norm(&seq));
    }
}

fn space_strategy() -> impl Strategy<Value = CoefficientSpace> {
    prop_oneof![
        (1usize..4).prop_map(CoefficientSpace::Euclidean),
        (1usize..4).prop_map(CoefficientSpace::L1),
        (1usize..4).prop_map(CoefficientSpace::LInf),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn hardy_martingale_structure(m in 1usize..7, degree in 1u32..4, terms in 1usize..10, seed: u64, space in space_strategy()) {
        let f = random_hardy_polynomial(m, space, degree, terms, &mut stream_rng(seed, 0));
        prop_assert!(f.is_hardy());
        let mm = m as i64;
        for a in -1..mm {
            for b in -1..mm {
                prop_assert_eq!(
                    f.conditional_expectation(a).conditional_expectation(b),
                    f.conditional_expectation(a.min(b))
                );
            }
            prop_assert!(f.conditional_expectation(a).is_hardy());
        }
        prop_assert_eq!(f.conditional_expectation(mm - 1), f.clone());
        let mut sum = f.conditional_expectation(-1);
        for d in f.martingale_differences() {
            prop_assert!(d.is_hardy());
            sum = sum.add(&d).unwrap();
        }
        prop_assert_eq!(sum, f);
    }

    #[test]
    fn hardy_class_is_closed(m in 2usize..6, seed: u64, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let space = CoefficientSpace::Euclidean(2);
        let f = random_hardy_polynomial(m, space, 2, 5, &mut stream_rng(seed, 0));
        let g = random_hardy_polynomial(m, space, 2, 5, &mut stream_rng(seed, 1));
        let h = f.scale(Complex::new(a, b)).add(&g).unwrap();
        prop_assert!(h.is_hardy());
        let mut bad = f.clone();
        bad.add_term(MultiIndex::new(vec![1, -1]), vec![Complex::new(1.0, 0.0); 2]).unwrap();
        prop_assert!(!bad.is_hardy());
    }

    #[test]
    fn transform_norm_is_sign_symmetric(m in 1usize..5, seed: u64, mask: u64, space in space_strategy(), rotated: bool) {
        let f = random_hardy_polynomial(m, space, 2, 6, &mut stream_rng(seed, 0));
        let opts = TransformOptions { rotated, include_level_zero: false };
        let signs = SignVector::from_mask(m.saturating_sub(1), mask);
        let quad = Quadrature::MonteCarlo { samples: 200, seed };
        let pos = umd_transform_norm(&f, &signs, opts, quad).unwrap().estimate;
        let neg = umd_transform_norm(&f, &-&signs, opts, quad).unwrap().estimate;
        prop_assert!((pos - neg).abs() <= 1e-12 * (1.0 + pos));
        if !rotated {
            let t = umd_transform(&f, &signs, opts).unwrap();
            prop_assert!(t.conditional_expectation(0).is_zero());
        }
    }

    #[test]
    fn parseval_matches_tensor_grid_for_euclidean(m in 1usize..3, seed: u64) {
        let f = random_hardy_polynomial(m, CoefficientSpace::Euclidean(2), 2, 4, &mut stream_rng(seed, 0));
        let grid = f.l2_norm_numeric(Quadrature::TensorGrid { points_per_axis: 8 }).unwrap();
        prop_assert!((grid.estimate - f.parseval_norm()).abs() <= 1e-10 * (1.0 + grid.estimate));
    }
}
