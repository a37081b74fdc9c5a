mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

use holocalc::complex::{
    func_calc_chain, homology_basis, induced_on_homology, validate, verify_homology_compat, ChainComplex,
    ChainEndo, ClassicalRoute, VerifyOptions, DEFAULT_RANK_TOL,
};
use holocalc::io::{from_json, to_json, ComplexSpec, EndoSpec, Grading};
use holocalc::measure::{mu_f, pair};
use holocalc::operator::{eigen_decomposition, func_calc_series, orbit_map, MatrixOp};
use holocalc::random::{
    random_chain, random_diagonalizable, random_integer_complex, random_matrix, random_unitary, rng,
    well_conditioned,
};
use holocalc::series::{eval_scalar, Builtin, PowerSeries};
use holocalc::C64;

fn complex_strategy() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn builtin_strategy() -> impl Strategy<Value = PowerSeries> {
    prop::sample::select(Builtin::ALL.to_vec()).prop_map(PowerSeries::builtin)
}

fn test_functions() -> Vec<PowerSeries> {
    vec![
        PowerSeries::exp(),
        PowerSeries::sin(),
        PowerSeries::cos(),
        PowerSeries::polynomial("z^3-2z", &[0.0, -2.0, 0.0, 1.0]).unwrap(),
    ]
}

fn max_entry(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Each eigenvalue of `a` is within `tol` of one of `b`, and vice versa.
fn same_spectrum(a: &MatrixOp, b: &MatrixOp, tol: f64) -> bool {
    let (ea, _) = eigen_decomposition(a);
    let (eb, _) = eigen_decomposition(b);
    let near = |x: &C64, set: &[C64]| set.iter().any(|y| (x - y).norm() <= tol);
    ea.len() == eb.len() && ea.iter().all(|x| near(x, &eb)) && eb.iter().all(|y| near(y, &ea))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eval_scalar_is_linear_in_the_series(
        f in prop::collection::vec(complex_strategy(), 0..10),
        g in prop::collection::vec(complex_strategy(), 0..10),
        alpha in complex_strategy(),
        beta in complex_strategy(),
        z in complex_strategy(),
    ) {
        let len = f.len().max(g.len());
        let at = |v: &[C64], n: usize| v.get(n).copied().unwrap_or_default();
        let combo: Vec<C64> = (0..len).map(|n| alpha * at(&f, n) + beta * at(&g, n)).collect();
        let ef = eval_scalar(&PowerSeries::explicit("f", f.clone()).unwrap(), z, 1e-14, 100).unwrap();
        let eg = eval_scalar(&PowerSeries::explicit("g", g.clone()).unwrap(), z, 1e-14, 100).unwrap();
        let ec = eval_scalar(&PowerSeries::explicit("c", combo).unwrap(), z, 1e-14, 100).unwrap();
        let scale = 1.0 + ec.norm() + (alpha * ef).norm() + (beta * eg).norm();
        prop_assert!((ec - alpha * ef - beta * eg).norm() <= 1e-12 * scale);
    }

    #[test]
    fn cosh_is_the_even_part_of_exp(z in complex_strategy()) {
        let exp = PowerSeries::exp();
        let cosh = PowerSeries::builtin(Builtin::Cosh);
        let lhs = eval_scalar(&cosh, z, 1e-15, 500).unwrap();
        let rhs = (eval_scalar(&exp, z, 1e-15, 500).unwrap() + eval_scalar(&exp, -z, 1e-15, 500).unwrap()) * 0.5;
        prop_assert!((lhs - rhs).norm() <= 1e-13 * (1.0 + rhs.norm()));
    }

    #[test]
    fn functional_calculus_is_similarity_equivariant(f in builtin_strategy(), seed in any::<u64>(), dim in 1usize..6) {
        let mut r = rng(seed);
        let t = MatrixOp::new(random_matrix(&mut r, dim, dim) * C64::new(0.4, 0.0)).unwrap();
        let s = well_conditioned(&mut r, dim, 10.0);
        let s_inv = s.clone().try_inverse().unwrap();
        let conj = MatrixOp::new(&s * t.matrix() * &s_inv).unwrap();
        let (ft, _) = func_calc_series(&f, &t, 1e-15, 500).unwrap();
        let (fc, _) = func_calc_series(&f, &conj, 1e-15, 500).unwrap();
        let expected = &s * ft.matrix() * &s_inv;
        prop_assert!((fc.matrix() - &expected).norm() <= 1e-11 * (1.0 + expected.norm()));
    }

    #[test]
    fn pairing_is_linear_in_the_measure(seed in any::<u64>(), p in 0.3..=1.0f64) {
        let mut r = rng(seed);
        let t = MatrixOp::new(random_matrix(&mut r, 3, 3) * C64::new(0.5, 0.0)).unwrap();
        let (f, g) = (PowerSeries::exp(), PowerSeries::cos());
        let (alpha, beta) = (C64::new(r.random_range(-1.0..1.0), 0.3), C64::new(0.7, r.random_range(-1.0..1.0)));
        let (mf, mg) = (mu_f(&f, p, 40).unwrap(), mu_f(&g, p, 40).unwrap());
        let combo = mf.linear_combination(alpha, &mg, beta).unwrap();
        prop_assert!(combo.coherence_defect() <= 1e-14);
        // one orbit, so the pairing is linear in the weights alone
        let orbit = orbit_map(&PowerSeries::exp(), &t, 40);
        let phi = |x| orbit.eval(x);
        let a = pair(&mf, phi, 1e-10).unwrap().value;
        let b = pair(&mg, phi, 1e-10).unwrap().value;
        let c = pair(&combo, phi, 1e-10).unwrap().value;
        let expected = a * alpha + b * beta;
        prop_assert!((c - &expected).norm() <= 1e-12 * (1.0 + expected.norm()));
    }

    #[test]
    fn mu_f_is_coherent_and_bounded(
        coeffs in prop::collection::vec(complex_strategy(), 1..12),
        p in 0.1..=1.0f64,
        depth in 0usize..30,
    ) {
        let f = PowerSeries::explicit("f", coeffs).unwrap();
        let mu = mu_f(&f, p, depth).unwrap();
        prop_assert!(mu.is_coherent());
        prop_assert_eq!(mu.coherence_defect(), 0.0);
        prop_assert!(mu.within_bound(1e-9));
    }

    #[test]
    fn complex_json_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let len = r.random_range(1..=4);
        let d_min = r.random_range(-3..=3);
        let chain = random_chain(&mut r, d_min, len, 6, 4.0, 2.0);
        let text = to_json(&ComplexSpec::from_complex(&chain.complex));
        let back = from_json::<ComplexSpec>(&text).unwrap().to_complex(Grading::Homological).unwrap();
        prop_assert_eq!(&back, &chain.complex);
        let text = to_json(&EndoSpec::from_endo(&chain.endo));
        let endo = from_json::<EndoSpec>(&text).unwrap().to_endo(&back, Grading::Homological).unwrap();
        prop_assert_eq!(endo, chain.endo);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn functional_calculus_preserves_chain_maps(seed in any::<u64>()) {
        let mut r = rng(seed);
        let len = r.random_range(1..=4);
        let d_min = r.random_range(-2..=2);
        let chain = random_chain(&mut r, d_min, len, 6, 4.0, 2.0);
        prop_assert!(validate(&chain.complex, Some(&chain.endo)).unwrap().pass);
        for f in test_functions() {
            let ft = func_calc_chain(&f, &chain.endo, &chain.complex, 1e-14, 500).unwrap();
            let diag = validate(&chain.complex, Some(&ft)).unwrap();
            prop_assert!(diag.pass, "{} {:?}", f.name(), diag.chain_map);
        }
    }

    #[test]
    fn induced_maps_do_not_depend_on_representatives(seed in any::<u64>()) {
        let mut r = rng(seed);
        let len = r.random_range(1..=4);
        let chain = random_chain(&mut r, 0, len, 6, 4.0, 2.0);
        let basis = homology_basis(&chain.complex, DEFAULT_RANK_TOL);
        let rotations: Vec<DMatrix<C64>> = basis.degrees.iter().map(|d| random_unitary(&mut r, d.betti)).collect();
        let rotated = basis.rotated(&rotations);
        let h = induced_on_homology(&chain.complex, &chain.endo, &basis);
        let h_rot = induced_on_homology(&chain.complex, &chain.endo, &rotated);
        for ((a, b), u) in h.iter().zip(&h_rot).zip(&rotations) {
            // an exact similarity by the rotation
            let similar = u.adjoint() * a.matrix() * u;
            prop_assert!((b.matrix() - similar).norm() <= 1e-12 * (1.0 + a.frobenius_norm()));
            prop_assert!(same_spectrum(a, b, 1e-9));
        }
        // and similar to the block the complex was built from
        for (a, z) in h.iter().zip(&chain.homology_blocks) {
            prop_assert!(same_spectrum(a, &MatrixOp::new(z.clone()).unwrap(), 1e-9));
        }
    }

    #[test]
    fn betti_numbers_match_exact_ranks(seed in any::<u64>()) {
        let mut r = rng(seed);
        let len = r.random_range(1..=4);
        let ic = random_integer_complex(&mut r, -1, len, 6);
        let exact = common::exact_betti(&ic);
        prop_assert_eq!(&exact, &ic.betti);
        prop_assert_eq!(homology_basis(&ic.to_complex(), DEFAULT_RANK_TOL).betti(), exact);
    }
}

#[test]
fn rational_rank_examples() {
    assert_eq!(common::rational_rank(&[]), 0);
    assert_eq!(common::rational_rank(&[vec![0, 0], vec![0, 0]]), 0);
    assert_eq!(common::rational_rank(&[vec![1, 2], vec![2, 4]]), 1);
    assert_eq!(common::rational_rank(&[vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]]), 2);
    assert_eq!(common::rational_rank(&[vec![2, 0], vec![0, 3], vec![1, 1]]), 2);
}

#[test]
fn compat_on_zero_differentials_with_diagonalizable_maps() {
    let mut r = rng(17);
    for _ in 0..20 {
        let dims: Vec<usize> = (0..3).map(|_| r.random_range(0..=5)).collect();
        let complex = ChainComplex::zero_differentials(0, dims.clone());
        let maps = dims.iter().map(|&n| random_diagonalizable(&mut r, n, 2.0, 20.0)).collect();
        let endo = ChainEndo::new(&complex, maps).unwrap();
        for f in test_functions() {
            let report = verify_homology_compat(&complex, &endo, &f, &VerifyOptions::new(1e-9));
            assert!(report.pass, "{report:?}");
            assert!(report.max_delta <= 1e-9);
        }
    }
}

#[test]
fn compat_for_squaring_is_algebraic() {
    let square = PowerSeries::polynomial("z^2", &[0.0, 0.0, 1.0]).unwrap();
    let mut r = rng(23);
    for _ in 0..50 {
        let len = r.random_range(1..=4);
        let chain = random_chain(&mut r, 0, len, 6, 4.0, 2.0);
        let report = verify_homology_compat(&chain.complex, &chain.endo, &square, &VerifyOptions::new(1e-11));
        assert!(report.pass, "{report:?}");
        assert!(report.max_delta <= 1e-11);
    }
}

#[test]
fn defective_homology_uses_the_series_route() {
    // ℂ² in degree 0 with a Jordan block: the oracle declines
    let complex = ChainComplex::zero_differentials(0, vec![2]);
    let jordan = MatrixOp::from_real(2, &[0.5, 1.0, 0.0, 0.5]).unwrap();
    let endo = ChainEndo::new(&complex, vec![jordan]).unwrap();
    let report = verify_homology_compat(&complex, &endo, &PowerSeries::exp(), &VerifyOptions::new(1e-10));
    assert!(report.pass);
    assert_eq!(report.degrees[0].route, ClassicalRoute::Series);
    // exp of [[a, 1], [0, a]] is e^a·[[1, 1], [0, 1]]
    let (ft, _) = func_calc_series(&PowerSeries::exp(), endo.maps().first().unwrap(), 1e-15, 500).unwrap();
    let e = 0.5f64.exp();
    let expected = MatrixOp::from_real(2, &[e, e, 0.0, e]).unwrap();
    assert!(max_entry(&(ft.matrix() - expected.matrix())) <= 1e-14);
}
