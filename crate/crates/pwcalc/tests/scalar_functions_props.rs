use pwcalc::extended_sa::{Finite, Infinite};
use pwcalc::harness::generators::{log_uniform, random_psd, random_unitary, rng_for};
use pwcalc::matrix_core::max_abs_entry;
use pwcalc::scalar_functions::{
    approximants, calculus, check_operator_convex, from_repr77, neglog, parse_spec, power, power_unchecked, tlogt, transpose,
    verify_boundary_metadata, IntegralRepr77, Measure,
};
use rand::Rng;

fn random_repr(seed: u64) -> IntegralRepr77 {
    let mut rng = rng_for(seed, 0);
    let atoms: Vec<(f64, f64)> = (0..rng.gen_range(1..6)).map(|_| (log_uniform(&mut rng, 1e-2, 1e2), rng.gen_range(0.0..2.0))).collect();
    IntegralRepr77::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(0.0..1.0),
        rng.gen_range(0.0..1.0),
        Measure::atoms(atoms).unwrap(),
    )
    .unwrap()
}

#[test]
fn repr_at_one_is_the_constant_term() {
    for seed in 0..100 {
        let r = random_repr(seed);
        assert_eq!(from_repr77(&r).at_one().unwrap(), Finite(r.a), "seed {seed}");
    }
}

#[test]
fn approximants_increase_to_the_function() {
    let grid: Vec<f64> = (0..41).map(|k| 10f64.powf(-2.0 + 0.1 * k as f64)).collect();
    for seed in 0..50 {
        let r = random_repr(seed);
        let f = from_repr77(&r);
        let mut previous: Option<Vec<f64>> = None;
        for n in [1, 2, 5, 20, 100, 1000] {
            let ap = approximants(&r, n).unwrap();
            let values: Vec<f64> = grid.iter().map(|&t| ap.f_n.raw(t)).collect();
            for (k, &t) in grid.iter().enumerate() {
                let scale = 1.0 + values[k].abs();
                assert!((ap.rewritten(t) - values[k]).abs() <= 1e-9 * scale, "seed {seed}, n {n}, t {t}");
                assert!(values[k] <= f.raw(t) + 1e-9 * scale, "seed {seed}, n {n}, t {t}");
                if let Some(prev) = &previous {
                    assert!(prev[k] <= values[k] + 1e-9 * scale, "seed {seed}, n {n}, t {t}");
                }
            }
            assert!(ap.nu_n.atoms.iter().all(|&(l, w)| l > 0.0 && w >= 0.0));
            previous = Some(values);
        }
        // all atoms of μ lie inside [1/1000, 1000], so only the c and d tails remain
        let ap = approximants(&r, 1000).unwrap();
        for &t in &[0.5, 1.0, 2.0] {
            assert!((ap.f_n.raw(t) - f.raw(t)).abs() < 1e-2 * (1.0 + f.raw(t).abs()), "seed {seed}, t {t}");
        }
    }
}

#[test]
fn transpose_swaps_boundary_data() {
    for f in [power(2.0).unwrap(), power(1.5).unwrap(), power(-1.0).unwrap(), tlogt(), neglog()] {
        let g = transpose(&f);
        assert_eq!(g.at_zero_plus(), f.slope_at_infinity(), "{}", f.name());
        assert_eq!(g.slope_at_infinity(), f.at_zero_plus(), "{}", f.name());
        assert!(verify_boundary_metadata(&g), "{}", f.name());
        for t in [0.1, 1.0, 3.0] {
            assert!((g.raw(t) - t * f.raw(1.0 / t)).abs() < 1e-12 * (1.0 + g.raw(t).abs()));
        }
        let back = transpose(&g);
        assert!((back.raw(2.5) - f.raw(2.5)).abs() < 1e-12 * (1.0 + f.raw(2.5).abs()));
    }
    assert_eq!(transpose(&power(2.0).unwrap()).at_zero_plus(), Some(Infinite));
}

#[test]
fn catalog_metadata_is_consistent() {
    for spec in ["power:2", "power:1.5", "power:-1", "power:-0.5", "tlogt", "neglog", "glambda:0.5", "gn:5", "affine:1,2", "square_minus", "anypower:3"] {
        let f = parse_spec(spec).unwrap();
        assert!(verify_boundary_metadata(&f), "{spec}");
    }
}

#[test]
fn calculus_is_unitarily_covariant() {
    for trial in 0..100 {
        let mut rng = rng_for(41, trial);
        let n = 1 + trial as usize % 6;
        let a = random_psd(&mut rng, n, n);
        let u = random_unitary(&mut rng, n);
        for f in [power(2.0).unwrap(), tlogt(), neglog(), power(-1.0).unwrap()] {
            let lhs = calculus(&f, &(&u * &a * u.adjoint())).unwrap().to_matrix().unwrap();
            let rhs = &u * calculus(&f, &a).unwrap().to_matrix().unwrap() * u.adjoint();
            assert!(max_abs_entry(&(&lhs - &rhs)) <= 1e-8 * (1.0 + max_abs_entry(&rhs)), "trial {trial}, {}", f.name());
        }
    }
}

#[test]
fn convexity_falsifier_separates_square_from_cube() {
    assert!(check_operator_convex(&power(2.0).unwrap(), (4, 2), 200, 7).unwrap().passed());
    assert!(check_operator_convex(&tlogt(), (4, 2), 200, 7).unwrap().passed());
    let cube = check_operator_convex(&power_unchecked(3.0).unwrap(), (4, 2), 200, 7).unwrap();
    assert!(!cube.passed());
    let w = &cube.witnesses[0];
    assert!(w.lhs.to_f64() > w.rhs.to_f64());
}
