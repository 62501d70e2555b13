use pwcalc::extended_sa::{ExtendedReal, Finite};
use pwcalc::harness::generators::{gen_pair, log_uniform, random_density, random_unit_vector, rng_for, Profile, RandomSpec};
use pwcalc::matrix_core::{CMatrix, State};
use pwcalc::perspectives_means::{parallel_sum, perspective_apply};
use pwcalc::scalar_functions::{approximants, from_repr77, power, tlogt, ExtendedFunction, IntegralRepr77, IntegralRepr97, Measure};
use pwcalc::variational::{
    integral_eval_91, integral_eval_92, optimal_bound, optimal_decomposition, split_cost, t_alpha_repr97, tlogt_repr77, two_projections,
    variational_bound_94, Decomposition,
};
use rand::Rng;

fn direct(f: &ExtendedFunction, a: &CMatrix, b: &CMatrix, rho: &State) -> ExtendedReal {
    perspective_apply(f, a, b).unwrap().value.evaluate_state(rho).unwrap()
}

fn agree(x: ExtendedReal, y: ExtendedReal, tol: f64) -> bool {
    match (x, y) {
        (Finite(a), Finite(b)) => (a - b).abs() <= tol * (1.0 + b.abs()),
        (a, b) => a == b,
    }
}

/// A state either spread over everything or supported on the finite part of φ_f(A, B).
fn sample_state(f: &ExtendedFunction, a: &CMatrix, b: &CMatrix, rng: &mut impl Rng) -> State {
    let n = a.nrows();
    let rho = random_density(rng, n);
    if rng.gen_bool(0.5) {
        return State::new(rho).unwrap();
    }
    let p = perspective_apply(f, a, b).unwrap().value.essential().projector();
    let inner = &p * &rho * &p;
    if inner.trace().re > 1e-6 {
        State::new(inner).unwrap()
    } else {
        // ∞ everywhere
        State::new(rho).unwrap()
    }
}

const PROFILES: [Profile; 3] = [Profile::WellConditioned, Profile::RankDeficient(2), Profile::SingularPair];

#[test]
fn integral_paths_match_direct_evaluation() {
    let tlogt_r = tlogt_repr77(200).unwrap();
    let atomic = IntegralRepr77::new(0.3, -0.4, 0.5, 0.2, Measure::atoms(vec![(0.2, 0.7), (3.0, 1.1)]).unwrap()).unwrap();
    let atomic_f = from_repr77(&atomic);
    let t15 = t_alpha_repr97(1.5, 200).unwrap();
    let atomic97 = IntegralRepr97::new(0.4, 0.3, 0.6, Measure::atoms(vec![(0.5, 1.0), (2.0, 0.5)]).unwrap()).unwrap();
    let atomic97_f = atomic97.to_function();
    let mut infinite = 0;
    for trial in 0..100u64 {
        let spec = RandomSpec::with_dims(2, 4, PROFILES[trial as usize % 3], 71);
        let (a, b) = gen_pair(&spec, trial);
        let mut rng = rng_for(71, 1000 + trial);
        let rho = sample_state(&tlogt(), &a, &b, &mut rng);
        let lhs = integral_eval_91(&tlogt_r, &a, &b, &rho).unwrap();
        let rhs = direct(&tlogt(), &a, &b, &rho);
        assert!(agree(lhs, rhs, 1e-5), "trial {trial}: {lhs} vs {rhs}");
        infinite += usize::from(!rhs.is_finite());

        let rho = sample_state(&atomic_f, &a, &b, &mut rng);
        let (lhs, rhs) = (integral_eval_91(&atomic, &a, &b, &rho).unwrap(), direct(&atomic_f, &a, &b, &rho));
        assert!(agree(lhs, rhs, 1e-9), "trial {trial}: {lhs} vs {rhs}");

        let f15 = power(1.5).unwrap();
        let rho = sample_state(&f15, &a, &b, &mut rng);
        let (lhs, rhs) = (integral_eval_92(&t15, &a, &b, &rho).unwrap(), direct(&f15, &a, &b, &rho));
        assert!(agree(lhs, rhs, 1e-5), "trial {trial}: {lhs} vs {rhs}");

        let rho = sample_state(&atomic97_f, &a, &b, &mut rng);
        let (lhs, rhs) = (integral_eval_92(&atomic97, &a, &b, &rho).unwrap(), direct(&atomic97_f, &a, &b, &rho));
        assert!(agree(lhs, rhs, 1e-9), "trial {trial}: {lhs} vs {rhs}");
    }
    assert!(infinite > 0, "no trial exercised the ∞ classification");
}

#[test]
fn sampled_decompositions_are_lower_bounds() {
    let r = IntegralRepr77::new(0.1, 0.2, 0.4, 0.3, Measure::atoms(vec![(0.05, 0.3), (0.7, 1.0), (4.0, 0.6), (30.0, 0.2)]).unwrap()).unwrap();
    let f = from_repr77(&r);
    for trial in 0..100u64 {
        let spec = RandomSpec::with_dims(2, 4, PROFILES[trial as usize % 2], 72);
        let (a, b) = gen_pair(&spec, trial);
        let mut rng = rng_for(72, 1000 + trial);
        let xi = random_unit_vector(&mut rng, a.nrows());
        // ∞ on rank-deficient pairs through the c and d terms
        let exact = direct(&f, &a, &b, &State::vector(&xi).unwrap()).to_f64();
        let scale = 1.0 + if exact.is_finite() { exact.abs() } else { 0.0 };
        let mut previous = f64::NEG_INFINITY;
        for n in [1, 2, 5, 20, 100] {
            let nf = n as f64;
            let best = optimal_bound(&r, &a, &b, &xi, n).unwrap();
            assert!(best <= exact + 1e-8 * scale, "trial {trial} n {n}");
            assert!(best >= previous - 1e-9 * scale, "trial {trial} n {n}");
            previous = best;
            for _ in 0..10 {
                let d = Decomposition::random(&mut rng, &xi, 1.0 / nf, nf, 3);
                let v = variational_bound_94(&r, &a, &b, n, &d).unwrap();
                assert!(v <= best + 1e-9 * scale, "trial {trial} n {n}");
            }
            let sup = direct(&approximants(&r, n).unwrap().f_n, &a, &b, &State::vector(&xi).unwrap()).finite().unwrap();
            assert!((best - sup).abs() <= 1e-7 * scale, "trial {trial} n {n}: {best} vs {sup}");
        }
    }
}

#[test]
fn optimal_splits_attain_parallel_sums() {
    for trial in 0..100u64 {
        let spec = RandomSpec::with_dims(1, 5, PROFILES[trial as usize % 3], 73);
        let (a, b) = gen_pair(&spec, trial);
        let mut rng = rng_for(73, 1000 + trial);
        let xi = random_unit_vector(&mut rng, a.nrows());
        let t = log_uniform(&mut rng, 1e-2, 1e2);
        let (eta, zeta) = optimal_decomposition(&a, &b, &xi, t).unwrap();
        assert!((&eta + &zeta - &xi).norm() < 1e-12);
        let ps = parallel_sum(&a, &b.scale(t)).unwrap();
        let target = xi.dotc(&(ps * &xi)).re;
        let cost = split_cost(&a, &b, &eta, &zeta, t);
        assert!((cost - target).abs() <= 1e-9 * (1.0 + target.abs()), "trial {trial}: {cost} vs {target}");
        for _ in 0..5 {
            let shift = random_unit_vector(&mut rng, a.nrows()).scale(rng.gen_range(0.0..1.0));
            assert!(split_cost(&a, &b, &(&eta + &shift), &(&zeta - &shift), t) >= cost - 1e-9 * (1.0 + cost));
        }
    }
}

#[test]
fn two_projection_formula_matches_direct_calculus() {
    for trial in 0..100u64 {
        let spec = RandomSpec::with_dims(2, 6, Profile::Projection, 74);
        let (p, q) = gen_pair(&spec, trial);
        for f in [tlogt(), power(2.0).unwrap(), power(-1.0).unwrap(), pwcalc::scalar_functions::neglog()] {
            let lhs = two_projections(&f, &p, &q).unwrap();
            let rhs = perspective_apply(&f, &p, &q).unwrap().value;
            assert_eq!(lhs.infinity_dim(), rhs.infinity_dim(), "trial {trial} {}", f.name());
            assert!(lhs.approx_eq(&rhs, 1e-8), "trial {trial} {}", f.name());
        }
    }
}
