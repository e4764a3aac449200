//! Property tests for the algebraic invariants of the kernel, geometry
//! and config layers.

use proptest::prelude::*;

use landau_lab::counterexample::CounterexampleParams;
use landau_lab::density::Density;
use landau_lab::experiments::{fit_loglog, ConfigDoc};
use landau_lab::geometry::{annulus_index, transform_t0, Ellipsoid};
use landau_lab::kernels::{cutoff_matrix, eta, eta_prime, landau_matrix, CutoffProfile};
use landau_lab::quadrature::tree_sum;
use landau_lab::vec3::Vec3;

fn nonzero_vec() -> impl Strategy<Value = Vec3> {
    (
        -10.0..10.0f64,
        -10.0..10.0f64,
        -10.0..10.0f64,
    )
        .prop_map(|(x, y, z)| Vec3::new(x, y, z))
        .prop_filter("away from origin", |v| v.norm() > 1e-3)
}

proptest! {
    #[test]
    fn landau_matrix_annihilates_its_argument(v in nonzero_vec()) {
        let m = landau_matrix(v).unwrap();
        prop_assert!(m.mul_vec(v).norm() <= 1e-12 * m.trace() * v.norm());
        prop_assert!((m.trace() - 2.0 / v.norm()).abs() <= 1e-10 * m.trace());
    }

    #[test]
    fn landau_matrix_scaling_law(v in nonzero_vec(), lambda in 0.1..10.0f64) {
        let m = landau_matrix(v).unwrap();
        let scaled = landau_matrix(v * lambda).unwrap();
        let expect = m.scale(1.0 / lambda);
        prop_assert!(scaled.add(&expect.scale(-1.0)).frobenius() <= 1e-12 * expect.frobenius());
    }

    #[test]
    fn cutoff_matrix_dominated_by_landau(v in nonzero_vec(), u in nonzero_vec()) {
        let profile = CutoffProfile::standard();
        let full = landau_matrix(v).unwrap().quad_form(u);
        let cut = cutoff_matrix(v, &profile).quad_form(u);
        prop_assert!(cut <= full + 1e-12 * full.abs().max(1e-300));
        prop_assert!(cut >= -1e-12);
    }

    #[test]
    fn eta_band_and_monotonicity(x in 0.0..3.0f64, y in 0.0..3.0f64) {
        let profile = CutoffProfile::standard();
        let ex = eta(x, &profile);
        prop_assert!((0.0..=1.0).contains(&ex));
        let d = eta_prime(x, &profile);
        prop_assert!((-1e-15..=2.0).contains(&d), "eta'({x}) = {d}");
        if x <= y {
            prop_assert!(ex <= eta(y, &profile) + 1e-15);
        }
    }

    #[test]
    fn annulus_index_characterization(v in nonzero_vec()) {
        let n = annulus_index(v);
        let r = v.norm();
        prop_assert!(n >= 1);
        prop_assert!(f64::from(n - 1) < r || n == 1);
        prop_assert!(r <= f64::from(n));
    }

    #[test]
    fn ellipsoid_membership_matches_flattening(
        dir in nonzero_vec(),
        x in nonzero_vec(),
        shell in 1u32..6,
    ) {
        let center = dir.normalized() * (f64::from(shell) - 0.5);
        let e = Ellipsoid::unit(center, shell);
        let inside_by_test = e.contains(x);
        let inside_by_map = transform_t0(&e, x).norm() <= 1.0;
        prop_assert_eq!(inside_by_test, inside_by_map);
    }

    #[test]
    fn tree_sum_matches_sequential(xs in proptest::collection::vec(-1e3..1e3f64, 0..200)) {
        let naive: f64 = xs.iter().sum();
        prop_assert!((tree_sum(&xs) - naive).abs() <= 1e-9 * naive.abs().max(1.0));
    }

    #[test]
    fn fit_recovers_power_law(
        slope in -3.0..3.0f64,
        scale in 0.1..10.0f64,
        n in 3usize..8,
    ) {
        let pts: Vec<(f64, f64)> = (1..=n)
            .map(|k| {
                let x = 2.0_f64.powi(k as i32);
                (x, scale * x.powf(slope))
            })
            .collect();
        let fit = fit_loglog(&pts).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-9);
        prop_assert!((fit.intercept - scale.ln()).abs() < 1e-9);
    }

    #[test]
    fn maxwellian_gradient_matches_finite_difference(
        v in nonzero_vec(),
        t in 0.5..3.0f64,
    ) {
        let f = Density::Maxwellian { mean: Vec3::new(0.3, -0.2, 0.1), temperature: t, mass: 1.0 };
        let g = f.gradient(v);
        let h = 1e-6;
        let fd = Vec3::new(
            (f.evaluate(v + Vec3::new(h, 0.0, 0.0)) - f.evaluate(v - Vec3::new(h, 0.0, 0.0))) / (2.0 * h),
            (f.evaluate(v + Vec3::new(0.0, h, 0.0)) - f.evaluate(v - Vec3::new(0.0, h, 0.0))) / (2.0 * h),
            (f.evaluate(v + Vec3::new(0.0, 0.0, h)) - f.evaluate(v - Vec3::new(0.0, 0.0, h))) / (2.0 * h),
        );
        prop_assert!((g - fd).norm() <= 1e-5 * g.norm().max(1e-12));
    }

    #[test]
    fn family_invariant_chain(shell in 2u32..5, factor in 1.0..8.0f64) {
        // c ≤ N⁻² ≤ N⁶ ≤ B for every valid parameter pair
        let n6 = f64::from(shell).powi(6);
        let params = CounterexampleParams::new(n6 * factor, shell).unwrap();
        let n = f64::from(shell);
        prop_assert!(params.c <= n.powi(-2) + 1e-15);
        prop_assert!(n.powi(-2) <= n6);
        prop_assert!(n6 <= params.b);
    }

    #[test]
    fn config_doc_round_trip(
        sections in proptest::collection::vec(
            (
                "[a-z][a-z0-9_]{0,8}",
                proptest::collection::vec(("[a-z][a-z0-9_]{0,8}", "[a-zA-Z0-9_. -]{1,12}"), 0..4),
            ),
            1..4,
        )
    ) {
        let doc = ConfigDoc {
            sections: sections
                .into_iter()
                .map(|(name, entries)| {
                    (
                        name,
                        entries
                            .into_iter()
                            .map(|(k, v)| (k, v.trim().to_string()))
                            .filter(|(_, v)| !v.is_empty())
                            .collect(),
                    )
                })
                .collect(),
        };
        let text = doc.serialize();
        let parsed = ConfigDoc::parse(&text).unwrap();
        prop_assert_eq!(&parsed, &doc);
        prop_assert_eq!(parsed.serialize(), text);
    }
}

#[test]
fn max_of_two_dominates_branches() {
    let params = CounterexampleParams::new(64.0, 2).unwrap();
    let f = Density::standard_maxwellian();
    let g = params.bump();
    let h = Density::MaxOfTwo(Box::new(f.clone()), Box::new(g.clone()));
    let mut rng = landau_lab::rng::SplitMix64::new(0xabc);
    for _ in 0..5000 {
        let v = Vec3::new(rng.range(1.9, 2.1), rng.range(-0.05, 0.05), rng.range(-0.05, 0.05));
        let hv = h.evaluate(v);
        assert!(hv >= f.evaluate(v) && hv >= g.evaluate(v));
        assert!(hv == f.evaluate(v) || hv == g.evaluate(v));
    }
}
