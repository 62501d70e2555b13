use pwcalc::extended_sa::{ExtendedSelfAdjoint, Finite};
use pwcalc::harness::checks::scale_of;
use pwcalc::harness::generators::{gen_pair, random_complex, random_isometry, random_psd, random_vector, rng_for, Profile, RandomSpec};
use pwcalc::matrix_core::{hermitian_part, identity, max_abs_entry, CMatrix};
use pwcalc::perspectives_means::perspective_of;
use pwcalc::pw_calculus::{
    check_homogeneity, compatible_representation, invertible_formula, pw_apply, pw_commuting_oracle, HomogeneousFunction,
};
use pwcalc::scalar_functions::{neglog, power, tlogt, ExtendedFunction};

fn convex_list() -> Vec<ExtendedFunction> {
    vec![power(2.0).unwrap(), tlogt(), neglog(), power(1.5).unwrap(), power(-1.0).unwrap()]
}

fn perspectives() -> Vec<HomogeneousFunction> {
    convex_list().iter().map(|f| perspective_of(f).unwrap()).collect()
}

fn block_diag(x: &CMatrix, y: &CMatrix) -> CMatrix {
    let (n, m) = (x.nrows(), y.nrows());
    let mut out = CMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(x);
    out.view_mut((n, n), (m, m)).copy_from(y);
    out
}

#[test]
fn compatible_representation_reproduces_the_pair() {
    for profile in [Profile::WellConditioned, Profile::RankDeficient(2), Profile::Projection, Profile::SingularPair] {
        let spec = RandomSpec::with_dims(1, 8, profile, 51);
        for trial in 0..75 {
            let (a, b) = gen_pair(&spec, trial);
            let rep = compatible_representation(&a, &b).unwrap();
            let k = rep.rank();
            let scale = 1.0 + max_abs_entry(&a) + max_abs_entry(&b);
            assert!(max_abs_entry(&(&rep.r + &rep.s - identity(k))) < 1e-12, "{profile:?} trial {trial}");
            let ta = hermitian_part(&(rep.t.adjoint() * &rep.r * &rep.t));
            let tb = hermitian_part(&(rep.t.adjoint() * &rep.s * &rep.t));
            assert!(max_abs_entry(&(ta - &a)) < 1e-9 * scale, "{profile:?} trial {trial}");
            assert!(max_abs_entry(&(tb - &b)) < 1e-9 * scale, "{profile:?} trial {trial}");
        }
    }
}

#[test]
fn commuting_pairs_match_the_joint_eigenbasis_oracle() {
    let spec = RandomSpec::with_dims(2, 6, Profile::CommutingPair, 52);
    for trial in 0..200 {
        let (a, b) = gen_pair(&spec, trial);
        for phi in perspectives() {
            let lhs = pw_apply(&phi, &a, &b).unwrap();
            let rhs = pw_commuting_oracle(&phi, &a, &b).unwrap();
            assert_eq!(lhs.infinity_dim(), rhs.infinity_dim(), "trial {trial} {}", phi.name());
            let mut rng = rng_for(52, 10_000 + trial);
            for _ in 0..10 {
                // a generic vector and its projection onto the finite part
                let v = random_vector(&mut rng, a.nrows());
                for w in [v.clone(), rhs.essential().project(&v)] {
                    match (lhs.quadratic_form(&w).unwrap(), rhs.quadratic_form(&w).unwrap()) {
                        (Finite(x), Finite(y)) => assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()), "trial {trial}: {x} vs {y}"),
                        (x, y) => assert_eq!(x, y, "trial {trial}"),
                    }
                }
            }
        }
    }
}

#[test]
fn invertible_formula_agrees_with_the_representation() {
    let spec = RandomSpec::with_dims(1, 6, Profile::WellConditioned, 53);
    for trial in 0..100 {
        let (a, b) = gen_pair(&spec, trial);
        for phi in perspectives() {
            let lhs = pw_apply(&phi, &a, &b).unwrap();
            let rhs = invertible_formula(&phi, &a, &b).unwrap();
            assert!(lhs.approx_eq(&rhs, 1e-8 * scale_of(&lhs, &rhs)), "trial {trial} {}", phi.name());
        }
    }
}

#[test]
fn direct_sums_split() {
    let spec = RandomSpec::with_dims(1, 4, Profile::RankDeficient(2), 54);
    for trial in 0..60 {
        let (a1, b1) = gen_pair(&spec, 2 * trial);
        let (a2, b2) = gen_pair(&spec, 2 * trial + 1);
        for phi in perspectives() {
            let whole = pw_apply(&phi, &block_diag(&a1, &a2), &block_diag(&b1, &b2)).unwrap();
            let parts = pw_apply(&phi, &a1, &b1).unwrap().direct_sum(&pw_apply(&phi, &a2, &b2).unwrap());
            assert_eq!(whole.infinity_dim(), parts.infinity_dim(), "trial {trial} {}", phi.name());
            assert!(whole.approx_eq(&parts, 1e-8 * scale_of(&whole, &parts)), "trial {trial} {}", phi.name());
        }
    }
}

#[test]
fn convex_perspectives_are_subadditive() {
    let spec = RandomSpec::new(4, Profile::RankDeficient(3), 55);
    for trial in 0..500 {
        let (a1, b1) = gen_pair(&spec, 2 * trial);
        let (a2, b2) = gen_pair(&spec, 2 * trial + 1);
        for phi in perspectives() {
            let lhs = pw_apply(&phi, &(&a1 + &a2), &(&b1 + &b2)).unwrap();
            let rhs = pw_apply(&phi, &a1, &b1).unwrap().add(&pw_apply(&phi, &a2, &b2).unwrap()).unwrap();
            assert!(lhs.form_leq(&rhs, 1e-8 * scale_of(&lhs, &rhs)).holds, "trial {trial} {}", phi.name());
        }
    }
}

#[test]
fn isometric_compression_decreases() {
    for trial in 0..100 {
        let mut rng = rng_for(56, trial);
        let (a, b) = (random_psd(&mut rng, 5, 3), random_psd(&mut rng, 5, 4));
        let v = random_isometry(&mut rng, 5, 3);
        let (va, vb) = (hermitian_part(&(v.adjoint() * &a * &v)), hermitian_part(&(v.adjoint() * &b * &v)));
        for phi in perspectives() {
            let lhs = pw_apply(&phi, &va, &vb).unwrap();
            let rhs = pw_apply(&phi, &a, &b).unwrap().congruence(&v).unwrap();
            assert!(lhs.form_leq(&rhs, 1e-8 * scale_of(&lhs, &rhs)).holds, "trial {trial} {}", phi.name());
        }
    }
}

#[test]
fn homogeneous_under_congruence_with_full_range() {
    let spec = RandomSpec::with_dims(2, 5, Profile::RankDeficient(2), 57);
    for trial in 0..100 {
        let (a, b) = gen_pair(&spec, trial);
        let c = random_complex(&mut rng_for(57, 1000 + trial), a.nrows(), a.nrows());
        for phi in perspectives() {
            let report = check_homogeneity(&phi, &a, &b, &c, 1e-8 * (1.0 + max_abs_entry(&c).powi(2) * (max_abs_entry(&a) + max_abs_entry(&b))))
                .unwrap();
            assert_eq!(report.holds(), Some(true), "trial {trial} {}: {report:?}", phi.name());
        }
    }
}

#[test]
fn decreasing_generators_are_antitone_in_the_first_argument() {
    for trial in 0..100 {
        let mut rng = rng_for(58, trial);
        let b = random_psd(&mut rng, 4, 4);
        let a1 = random_psd(&mut rng, 4, 4);
        let a2 = &a1 + random_psd(&mut rng, 4, 2);
        for f in [neglog(), power(-1.0).unwrap()] {
            let phi = perspective_of(&f).unwrap();
            let low: ExtendedSelfAdjoint = pw_apply(&phi, &a2, &b).unwrap();
            let high = pw_apply(&phi, &a1, &b).unwrap();
            assert!(low.form_leq(&high, 1e-8 * scale_of(&low, &high)).holds, "trial {trial} {}", f.name());
        }
    }
}
