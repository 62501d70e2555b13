use pwcalc::extended_sa::{ExtendedReal, ExtendedSelfAdjoint, Finite, Infinite};
use pwcalc::harness::generators::{random_complex, random_density, random_hermitian, random_psd, random_unit_vector, rng_for};
use pwcalc::matrix_core::{range_of, State};
use rand::Rng;

/// Random extended value: ∞ on a random subspace of dimension `inf_dim`, a random Hermitian elsewhere.
fn sample(rng: &mut impl Rng, n: usize, inf_dim: usize) -> ExtendedSelfAdjoint {
    let finite = ExtendedSelfAdjoint::bounded(&random_hermitian(rng, n)).unwrap();
    if inf_dim == 0 {
        return finite;
    }
    let part = range_of(&random_psd(rng, n, inf_dim), 1e-9);
    ExtendedSelfAdjoint::infinite_on(&part).add(&finite).unwrap()
}

fn agree(x: ExtendedReal, y: ExtendedReal, tol: f64) -> bool {
    match (x, y) {
        (Finite(a), Finite(b)) => (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs())),
        (a, b) => a == b,
    }
}

#[test]
fn add_and_scale_commute_with_state_evaluation() {
    for trial in 0..200 {
        let mut rng = rng_for(31, trial);
        let n = 1 + trial as usize % 5;
        let (kx, ky) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let x = sample(&mut rng, n, kx);
        let y = sample(&mut rng, n, ky);
        let alpha = rng.gen_range(0.1..5.0);
        for rho in [State::new(random_density(&mut rng, n)).unwrap(), State::vector(&random_unit_vector(&mut rng, n)).unwrap()] {
            let sum = x.add(&y).unwrap().evaluate_state(&rho).unwrap();
            let parts = x.evaluate_state(&rho).unwrap() + y.evaluate_state(&rho).unwrap();
            assert!(agree(sum, parts, 1e-9), "trial {trial}: {sum} vs {parts}");
            let scaled = x.scale(alpha).unwrap().evaluate_state(&rho).unwrap();
            assert!(agree(scaled, x.evaluate_state(&rho).unwrap().scale(alpha).unwrap(), 1e-9), "trial {trial}");
            let lower = x.evaluate_state(&rho).unwrap();
            assert!(lower.to_f64() >= x.lower_bound() * rho.trace() - 1e-9 * (1.0 + x.lower_bound().abs()));
        }
    }
}

#[test]
fn form_leq_is_antisymmetric_up_to_slack() {
    for trial in 0..100 {
        let mut rng = rng_for(32, trial);
        let x = sample(&mut rng, 4, trial as usize % 3);
        let bump = ExtendedSelfAdjoint::bounded(&random_psd(&mut rng, 4, 1)).unwrap();
        let y = x.add(&bump).unwrap();
        assert!(x.form_leq(&y, 1e-9).holds);
        assert!(x.form_leq(&x, 1e-12).holds && x.approx_eq(&x, 1e-12));
        let reverse = y.form_leq(&x, 1e-9).holds;
        // y ≤ x only when the bump is invisible behind the ∞-part
        assert_eq!(reverse, y.approx_eq(&x, 1e-9), "trial {trial}");
        assert!(ExtendedSelfAdjoint::infinite_on(&range_of(&random_psd(&mut rng, 4, 4), 1e-9)).form_leq(&x, 1e-9).holds == (x.infinity_dim() == 4));
    }
}

#[test]
fn congruences_compose() {
    for trial in 0..100 {
        let mut rng = rng_for(33, trial);
        let x = sample(&mut rng, 3, trial as usize % 3);
        let c1 = random_complex(&mut rng, 3, 3);
        let c2 = random_complex(&mut rng, 3, 2);
        let stepwise = x.congruence(&c1).unwrap().congruence(&c2).unwrap();
        let direct = x.congruence(&(&c1 * &c2)).unwrap();
        assert_eq!(stepwise.infinity_dim(), direct.infinity_dim(), "trial {trial}");
        assert!(stepwise.approx_eq(&direct, 1e-8 * (1.0 + x.finite_part().norm())), "trial {trial}");
        for _ in 0..5 {
            let v = random_unit_vector(&mut rng, 2);
            let lhs = direct.quadratic_form(&v).unwrap();
            let rhs = x.quadratic_form(&(&c1 * &c2 * &v)).unwrap();
            assert!(agree(lhs, rhs, 1e-8), "trial {trial}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn json_round_trip_preserves_values() {
    for trial in 0..50 {
        let mut rng = rng_for(34, trial);
        let x = sample(&mut rng, 4, trial as usize % 4);
        let back = ExtendedSelfAdjoint::from_json(&x.to_json()).unwrap();
        assert_eq!(back.infinity_dim(), x.infinity_dim());
        assert!(back.approx_eq(&x, 1e-12));
        assert_eq!(back.trace() == Infinite, x.infinity_dim() > 0);
    }
}
