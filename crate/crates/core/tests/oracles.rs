//! Independent-oracle checks: every quadrature result that has a second,
//! structurally different route (1D radial reduction, brute-force offset
//! grid, algebraic identity) is compared against it.

use landau_lab::counterexample::{self, CounterexampleParams};
use landau_lab::density::Density;
use landau_lab::functionals;
use landau_lab::geometry;
use landau_lab::kernels::{self, CutoffProfile};
use landau_lab::quadrature::{self, tree_sum, QuadratureSpec};
use landau_lab::rng::SplitMix64;
use landau_lab::vec3::{rotate_vec, rotation_rows, Vec3};

const PI: f64 = std::f64::consts::PI;

fn spec(trunc: f64, nodes: usize) -> QuadratureSpec {
    QuadratureSpec {
        truncation_radius: trunc,
        nodes_per_axis: nodes,
        singular_ball_radius: 0.5,
        radial_nodes: 8,
        sphere_nodes: 16,
        support_clamp: 1e-3,
        refinement_levels: 2,
    }
}

fn gaussian(r: f64) -> f64 {
    (2.0 * PI).powf(-1.5) * (-r * r / 2.0).exp()
}

/// 1D midpoint rule for radial integrands ∫ 4π r² g(r) dr on [0, rmax].
fn radial_quadrature<F: Fn(f64) -> f64>(g: F, rmax: f64, n: usize) -> f64 {
    let h = rmax / n as f64;
    let vals: Vec<f64> = (0..n)
        .map(|i| {
            let r = (i as f64 + 0.5) * h;
            4.0 * PI * r * r * g(r)
        })
        .collect();
    tree_sum(&vals) * h
}

fn mixture() -> Density {
    Density::Mixture(vec![
        (0.5, Density::Maxwellian { mean: Vec3::new(2.0, 0.0, 0.0), temperature: 1.0, mass: 1.0 }),
        (0.5, Density::Maxwellian { mean: Vec3::new(-2.0, 0.0, 0.0), temperature: 1.0, mass: 1.0 }),
    ])
}

/// Plain offset-grid 6D rule with no singular treatment: the inner grid is
/// staggered by a quarter cell so no pair coincides.
fn naive_six_dim<K: Fn(Vec3, Vec3) -> f64>(kernel: K, trunc: f64, n: usize) -> f64 {
    let h = 2.0 * trunc / n as f64;
    let coord = |i: usize, off: f64| -trunc + (i as f64 + 0.5 + off) * h;
    let mut outer = Vec::new();
    let mut inner = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = Vec3::new(coord(i, 0.0), coord(j, 0.0), coord(k, 0.0));
                if v.norm() <= trunc {
                    outer.push(v);
                }
                let w = Vec3::new(coord(i, 0.25), coord(j, 0.25), coord(k, 0.25));
                if w.norm() <= trunc {
                    inner.push(w);
                }
            }
        }
    }
    let sums: Vec<f64> = outer
        .iter()
        .map(|&v| {
            let vals: Vec<f64> = inner.iter().map(|&w| kernel(v, w)).collect();
            tree_sum(&vals)
        })
        .collect();
    tree_sum(&sums) * h.powi(6)
}

#[test]
fn newton_potential_matches_radial_reduction() {
    // ∬ f(v) f(w)/|v-w| dv dw for the standard Maxwellian, against the
    // radial reduction ∫ 4π r² f(r) U(r) dr with the Newton potential
    // U(r) = M(r)/r + ∫_r^∞ 4π s f(s) ds.
    let n1d = 200_000;
    let rmax = 12.0;
    let h = rmax / n1d as f64;
    let mut inner_mass = 0.0;
    let mut outer_pot: Vec<f64> = vec![0.0; n1d + 1];
    for i in (0..n1d).rev() {
        let r = (i as f64 + 0.5) * h;
        outer_pot[i] = outer_pot[i + 1] + 4.0 * PI * r * gaussian(r) * h;
    }
    let mut oracle = 0.0;
    for i in 0..n1d {
        let r = (i as f64 + 0.5) * h;
        inner_mass += 4.0 * PI * r * r * gaussian(r) * h * 0.5;
        let u = inner_mass / r + outer_pot[i + 1] + 4.0 * PI * r * gaussian(r) * h * 0.5;
        oracle += 4.0 * PI * r * r * gaussian(r) * u * h;
        inner_mass += 4.0 * PI * r * r * gaussian(r) * h * 0.5;
    }
    // the reduction itself reproduces the closed form 1/sqrt(pi)
    assert!(
        (oracle - 1.0 / PI.sqrt()).abs() < 1e-6,
        "radial oracle {oracle} vs {}",
        1.0 / PI.sqrt()
    );

    let f = Density::standard_maxwellian();
    let r = quadrature::integrate6_singular(
        |v, w| {
            let d = (v - w).norm();
            if d == 0.0 {
                0.0
            } else {
                f.evaluate(v) * f.evaluate(w) / d
            }
        },
        &spec(8.0, 32),
    )
    .unwrap();
    assert!(
        (r.value - oracle).abs() / oracle < 5e-3,
        "6D {} vs oracle {oracle}",
        r.value
    );
}

#[test]
fn six_dim_symmetry_within_error() {
    // swapping the roles of v and w in a symmetric kernel changes the
    // result by less than the refinement error estimate
    let f = Density::standard_maxwellian();
    let k = |v: Vec3, w: Vec3| {
        let d = (v - w).norm();
        if d == 0.0 {
            0.0
        } else {
            f.evaluate(v) * f.evaluate(w) / d
        }
    };
    let s = spec(6.0, 16);
    let a = quadrature::integrate6_singular(k, &s).unwrap();
    let b = quadrature::integrate6_singular(|v, w| k(w, v), &s).unwrap();
    assert!(
        (a.value - b.value).abs() <= a.error_estimate + b.error_estimate,
        "{} vs {} (err {})",
        a.value,
        b.value,
        a.error_estimate + b.error_estimate
    );
}

#[test]
fn singular_rule_consistent_with_naive_on_mollified_kernel() {
    // singularity replaced by 1/max(|v-w|, 0.1): both rules integrate a
    // bounded kernel and must agree within combined error bars
    let f = Density::standard_maxwellian();
    let k = |v: Vec3, w: Vec3| f.evaluate(v) * f.evaluate(w) / (v - w).norm().max(0.1);
    let s = spec(6.0, 24);
    let engine = quadrature::integrate6_singular(k, &s).unwrap();
    let naive = naive_six_dim(k, 6.0, 24);
    let naive_fine = naive_six_dim(k, 6.0, 32);
    let budget = engine.error_estimate + (naive - naive_fine).abs() + 1e-4 * naive_fine.abs();
    assert!(
        (engine.value - naive_fine).abs() <= budget,
        "engine {} vs naive {} (budget {budget})",
        engine.value,
        naive_fine
    );
}

#[test]
fn weighted_norm_matches_radial_oracle() {
    let f = Density::standard_maxwellian();
    let norm = quadrature::weighted_norm(&f, 3.0, 5.0 / 3.0, &QuadratureSpec::default_maxwellian())
        .unwrap();
    let oracle = radial_quadrature(
        |r| gaussian(r).powi(3) * (1.0 + r * r).powf(-2.5),
        14.0,
        1_000_000,
    )
    .powf(1.0 / 3.0);
    assert!(
        (norm - oracle).abs() / oracle < 5e-3,
        "norm {norm} vs radial oracle {oracle}"
    );
}

#[test]
fn maxwellian_moments_match_radial_oracles() {
    let f = Density::standard_maxwellian();
    let m = functionals::moments(&f, &spec(12.0, 64)).unwrap();
    let mass = radial_quadrature(gaussian, 14.0, 1_000_000);
    let energy = radial_quadrature(|r| r * r * gaussian(r), 14.0, 1_000_000);
    let entropy = radial_quadrature(|r| gaussian(r) * gaussian(r).ln(), 14.0, 1_000_000);
    assert!((m.mass - mass).abs() < 1e-4);
    assert!((m.energy - energy).abs() < 1e-4);
    assert!((m.entropy - entropy).abs() < 1e-4);
    // ∫ f |log f| is controlled by (3/2) log 2π + energy/2
    let abs_entropy = radial_quadrature(|r| gaussian(r) * gaussian(r).ln().abs(), 14.0, 1_000_000);
    assert!(abs_entropy <= 1.5 * (2.0 * PI).ln() + 1.5 + 1e-9);
}

#[test]
fn mixture_dissipation_matches_brute_force() {
    // brute-force oracle: plain offset-grid rule at doubled resolution
    let f = mixture();
    let d = functionals::dissipation(&f, &spec(6.5, 16)).unwrap();
    let oracle = {
        let fd = f.clone();
        0.5 * naive_six_dim(
            move |v, w| {
                let fv = fd.evaluate(v);
                let fw = fd.evaluate(w);
                if fv <= 0.0 || fw <= 0.0 {
                    return 0.0;
                }
                let glv = fd.log_gradient(v).unwrap();
                let glw = fd.log_gradient(w).unwrap();
                let z = v - w;
                let zz = z.norm2();
                let xi = glv - glw;
                let t = xi.dot(z);
                (xi.norm2() - t * t / zz) / zz.sqrt() * fv * fw
            },
            6.5,
            32,
        )
    };
    assert!(d.value > 0.0);
    assert!(
        (d.value - oracle).abs() / oracle < 0.02,
        "dissipation {} vs brute force {oracle}",
        d.value
    );
}

#[test]
fn fisher_identity_two_routes() {
    // ∫ ⟨ã ∇s, ∇s⟩ with s = 2√f (hand-rolled matrix route) equals
    // ∫ ⟨ã ∇f, ∇f⟩/f (the fisher_term contraction route) within 1%
    let f = Density::standard_maxwellian();
    let s = spec(8.0, 24);
    let profile = CutoffProfile::standard();

    // independent route: fixed midpoint ball grid, convolution built as a
    // full matrix per node, quadratic form against ∇s
    let trunc = 8.0;
    let n = 24usize;
    let h = 2.0 * trunc / n as f64;
    let coord = |i: usize| -trunc + (i as f64 + 0.5) * h;
    let mut nodes = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = Vec3::new(coord(i), coord(j), coord(k));
                if v.norm() <= trunc {
                    nodes.push(v);
                }
            }
        }
    }
    let weights: Vec<f64> = nodes.iter().map(|&w| f.evaluate(w) * h.powi(3)).collect();
    let via_s: f64 = nodes
        .iter()
        .map(|&v| {
            let ds = match f.sqrt_gradient(v) {
                Some(ds) => ds,
                None => return 0.0,
            };
            let mut m = landau_lab::vec3::SymMat3::ZERO;
            for (&w, &fw) in nodes.iter().zip(&weights) {
                m = m.add(&kernels::cutoff_matrix(v - w, &profile).scale(fw));
            }
            m.quad_form(ds) * h.powi(3)
        })
        .sum();

    let direct = functionals::fisher_term(&f, &s, &profile).unwrap();
    assert!(direct.value > 0.0);
    assert!(
        (via_s - direct.value).abs() / direct.value < 0.01,
        "{via_s} vs {}",
        direct.value
    );
}

#[test]
fn convolution_asymptotes_at_speed_eight() {
    // oracle: ∫ f |w_⊥|² dw = 2 (radial quadrature) drives the radial
    // eigenvalue, the mass drives the tangential one
    let perp_moment = radial_quadrature(|r| gaussian(r) * (2.0 / 3.0) * r * r, 14.0, 1_000_000);
    let mass = radial_quadrature(gaussian, 14.0, 1_000_000);
    assert!((perp_moment - 2.0).abs() < 1e-8);
    assert!((mass - 1.0).abs() < 1e-9);

    let f = Density::standard_maxwellian();
    let v = Vec3::new(8.0, 0.0, 0.0);
    let m = kernels::convolved_matrix(&f, v, &QuadratureSpec::default_maxwellian()).unwrap();
    assert!(m.is_positive_semidefinite());
    let ae = kernels::aniso_eigen(&m, v);
    let radial = ae.radial_eigenvalue * 8.0_f64.powi(3);
    let tangential = ae.tangential_min() * 8.0;
    assert!((1.6..=2.4).contains(&radial), "radial × |v|³ = {radial}");
    assert!((0.8..=1.2).contains(&tangential), "tangential × |v| = {tangential}");
    // strict anisotropy
    assert!(ae.radial_eigenvalue < ae.tangential_min());
}

#[test]
fn convolution_rotation_equivariance() {
    let f = Density::standard_maxwellian();
    let s = spec(10.0, 32);
    let mut rng = SplitMix64::new(0xe9);
    let v = Vec3::new(1.3, -0.4, 0.7);
    let base = kernels::convolved_matrix(&f, v, &s).unwrap();
    for _ in 0..2 {
        let rot = rotation_rows(rng.unit_vector(), rng.range(0.1, 3.0));
        let rotated_input = kernels::convolved_matrix(&f, rotate_vec(&rot, v), &s).unwrap();
        let rotated_matrix = base.congruence(&rot);
        let diff = rotated_input.add(&rotated_matrix.scale(-1.0)).frobenius();
        assert!(
            diff < 5e-3 * base.frobenius(),
            "equivariance violated: {diff} vs {}",
            base.frobenius()
        );
    }
}

#[test]
fn estimate_c0_minimum_property() {
    let f = Density::standard_maxwellian();
    let s = QuadratureSpec::default_maxwellian();
    let samples: Vec<Vec3> =
        [1.0, 2.0, 4.0, 8.0, 16.0].iter().map(|&t| Vec3::new(t, 0.0, 0.0)).collect();
    let c0 = kernels::estimate_c0(&f, &s, &samples).unwrap();
    assert!(c0 > 0.0);
    for &v in &samples {
        let m = kernels::convolved_matrix(&f, v, &s).unwrap();
        let ae = kernels::aniso_eigen(&m, v);
        let jb = v.bracket();
        assert!(c0 <= ae.radial_eigenvalue * jb.powi(3) + 1e-12);
    }
    // sample at the origin violates the precondition
    assert!(kernels::estimate_c0(&f, &s, &[Vec3::ZERO]).is_err());
}

#[test]
fn integrate3_linearity_and_translation() {
    let s = spec(10.0, 32);
    let f = |v: Vec3| (-v.norm2() / 2.0).exp();
    let g = |v: Vec3| (-(v - Vec3::new(1.0, 0.0, 0.0)).norm2()).exp();
    let a = quadrature::integrate3(f, &s).unwrap();
    let b = quadrature::integrate3(g, &s).unwrap();
    let combo = quadrature::integrate3(|v| 2.5 * f(v) - 0.5 * g(v), &s).unwrap();
    assert!(
        (combo.value - (2.5 * a.value - 0.5 * b.value)).abs()
            <= combo.error_estimate + 2.5 * a.error_estimate + 0.5 * b.error_estimate + 1e-12
    );

    // translation: both supports fit the truncation ball
    let shift = Vec3::new(0.7, -0.3, 0.2);
    let translated = quadrature::integrate3(|v| f(v - shift), &s).unwrap();
    assert!(
        (translated.value - a.value).abs() <= 1e-5,
        "{} vs {}",
        translated.value,
        a.value
    );
}

#[test]
fn refinement_decreases_error_estimate() {
    let f = Density::standard_maxwellian();
    let errs: Vec<f64> = [16usize, 32, 64]
        .iter()
        .map(|&n| {
            quadrature::integrate3(|v| f.evaluate(v) * v.norm2(), &spec(10.0, n))
                .unwrap()
                .error_estimate
        })
        .collect();
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
}

#[test]
fn bump_amplitude_dwarfs_maxwellian_at_center() {
    let params = CounterexampleParams::new(4096.0, 4).unwrap(); // B = N⁶
    let f = Density::standard_maxwellian();
    let g = params.bump();
    let at = Vec3::new(4.0, 0.0, 0.0);
    assert!(g.evaluate(at) > 1e4 * f.evaluate(at));
}

#[test]
fn norm_lower_bound_examples() {
    let s = spec(12.0, 24);
    // p = 1, q = 0: h ≥ f pointwise ⇒ the L¹ norm is at least the f mass
    let params = CounterexampleParams::new(64.0, 2).unwrap();
    let h = counterexample::build_h(&params);
    let mass = quadrature::weighted_norm(&h, 1.0, 0.0, &s).unwrap();
    assert!(mass >= 1.0 - 1e-4, "mass {mass}");

    // p = 3: log norm vs log B slope +1 ± 0.1 at fixed N
    let mut pts = Vec::new();
    for b in [64.0, 256.0, 1024.0] {
        let p = CounterexampleParams::new(b, 2).unwrap();
        let n = quadrature::weighted_norm(&counterexample::build_h(&p), 3.0, 1.0, &s).unwrap();
        pts.push((b, n));
    }
    let fit = landau_lab::experiments::fit_loglog(&pts).unwrap();
    assert!((fit.slope - 1.0).abs() <= 0.1, "slope {}", fit.slope);

    // the calibrated scaling bound holds along the family
    for &(b, n) in &[(64.0, 2u32), (256.0, 2), (128.0, 2)] {
        let p = CounterexampleParams::new(b, n).unwrap();
        let check = counterexample::norm_lower_check(&p, 3.0, 1.0, &s).unwrap();
        assert!(
            check.norm >= check.bound,
            "B={b} N={n}: norm {} below bound {}",
            check.norm,
            check.bound
        );
    }
}

#[test]
fn i2_region_split_decays_with_shell() {
    let s = spec(12.0, 24);
    let shells = [(64.0, 2u32), (4096.0, 4)];
    let mut fracs = Vec::new();
    for &(b, n) in &shells {
        let p = CounterexampleParams::new(b, n).unwrap();
        let (inner, exterior) = counterexample::i2_region_split(&p, &s).unwrap();
        assert!(inner > 0.0 && exterior >= 0.0, "inner {inner}, exterior {exterior}");
        // the inner ball carries the anisotropic bound ≤ Φ-type constant
        let scale = p.c * b * b / f64::from(n);
        assert!(inner / scale < 60.0, "inner/(cB²/N) = {}", inner / scale);
        fracs.push(exterior / (inner + exterior));
    }
    assert!(
        fracs[1] < fracs[0],
        "exterior fraction should shrink with N: {fracs:?}"
    );
}

#[test]
fn support_clamp_halving_changes_nothing() {
    // the clamped boundary layer of the bump carries ~exp(-1/(2δ)) mass,
    // so halving δ must leave ∇log-weighted integrals unchanged
    let params = CounterexampleParams::new(64.0, 2).unwrap();
    let tight = spec(12.0, 16);
    let loose = QuadratureSpec { support_clamp: 5e-4, ..tight.clone() };
    let a = counterexample::grad_log_moment(&params, &tight).unwrap().value;
    let b = counterexample::grad_log_moment(&params, &loose).unwrap().value;
    assert!(a > 0.0);
    assert!((a - b).abs() <= 1e-10 * a, "clamp sensitivity: {a} vs {b}");
    let i3a = counterexample::compute_i3(&params, &tight).unwrap().value;
    let i3b = counterexample::compute_i3(&params, &loose).unwrap().value;
    assert!((i3a - i3b).abs() <= 1e-10 * i3a, "clamp sensitivity: {i3a} vs {i3b}");
}

#[test]
fn per_ellipsoid_estimate_holds_at_shell_two() {
    let f = Density::standard_maxwellian();
    let s = spec(12.0, 16);
    let profile = CutoffProfile::standard();
    let m0 = functionals::moments(&f, &s).unwrap().mass;
    let cover = geometry::vitali_cover(2, 0.45).unwrap();
    let stride = (cover.count() / 8).max(1);
    let mut min_ratio = f64::INFINITY;
    for e in cover.ellipsoids().step_by(stride) {
        let (lhs, rhs) = geometry::ellipsoid_estimate(&f, &e, &s, &profile, m0).unwrap();
        assert!(lhs > 0.0 && rhs > 0.0, "degenerate ellipsoid estimate");
        min_ratio = min_ratio.min(lhs / rhs);
    }
    assert!(min_ratio > 0.0, "min per-ellipsoid ratio {min_ratio}");
}

#[test]
fn concentration_level_above_max_gives_zero_measure() {
    let f = Density::standard_maxwellian();
    let s = spec(6.0, 16);
    let max_f = (2.0 * PI).powf(-1.5);
    let params = functionals::ConcentrationParams {
        radius: 2.0,
        level: 2.0 * max_f,
        mu: 0.1,
        lambda: 1.0,
        h_tilde: 0.1,
    };
    let measure = functionals::concentration_verify(&f, &params, &s).unwrap();
    assert_eq!(measure, 0.0);
}
