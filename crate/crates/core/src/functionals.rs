//! The entropy dissipation D(f), its cutoff lower-bound decomposition,
//! the Fisher-type coercivity term, hydrodynamic moments, and the
//! concentration parameters.
//!
//! The decomposition chain is
//!
//! ```text
//! D(f) ≥ ∫ ⟨ã ∇s, ∇s⟩ dv + ∬ ∂_ij ā_ij(v-w) f(v) f(w) dv dw,
//! ```
//!
//! with s = 2√f and ã = ā ∗ f, and the error term is bounded below by
//! -16 M₀². Every Maxwellian annihilates the dissipation exactly at the
//! quadrature-node level, because ∇log f(v) - ∇log f(w) is parallel to
//! v - w and the kernel projects it away.

use rayon::prelude::*;

use crate::density::{Density, POSITIVITY_FLOOR};
use crate::error::{Error, Result};
use crate::kernels::{cutoff_form, eta_prime, CutoffProfile};
use crate::quadrature::{
    self, fibonacci_sphere, par_chunk_sum, par_chunk_sum_multi, radial_midpoints, DensityNode,
    IntegralResult, QuadratureSpec,
};
use crate::vec3::Vec3;

const TAU: f64 = std::f64::consts::TAU;

/// Mass, kinetic energy and Boltzmann entropy ∫ f log f (the integrand is
/// taken as 0 where f vanishes).
#[derive(Clone, Copy, Debug)]
pub struct Moments {
    pub mass: f64,
    pub energy: f64,
    pub entropy: f64,
    pub error_estimate: f64,
}

pub fn moments(f: &Density, spec: &QuadratureSpec) -> Result<Moments> {
    spec.validate()?;
    let mut levels: Vec<[f64; 3]> = Vec::with_capacity(spec.levels());
    for level in 0..spec.levels() {
        let nodes = quadrature::density_nodes(f, spec, level, 0.0);
        let sums = par_chunk_sum_multi::<_, _, 3>(&nodes, |nd| {
            let ent = if nd.value > POSITIVITY_FLOOR { nd.value * nd.value.ln() } else { 0.0 };
            [
                nd.weight * nd.value,
                nd.weight * nd.value * nd.point.norm2(),
                nd.weight * ent,
            ]
        });
        if sums.iter().any(|s| !s.is_finite()) {
            return Err(Error::Accuracy { previous: 0.0, latest: f64::NAN });
        }
        levels.push(sums);
    }
    let last = levels[levels.len() - 1];
    let prev = levels[levels.len() - 2];
    let err = (0..3).map(|k| (last[k] - prev[k]).abs()).fold(0.0, f64::max);
    Ok(Moments { mass: last[0], energy: last[1], entropy: last[2], error_estimate: err })
}

/// ∫ f log(1 + f), the sharpened entropy moment used to derive the
/// concentration parameters for a concrete closed-form density.
pub fn h_tilde0(f: &Density, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    let mut last = 0.0;
    for level in 0..spec.levels() {
        let nodes = quadrature::density_nodes(f, spec, level, 0.0);
        last = par_chunk_sum(&nodes, |nd| nd.weight * nd.value * nd.value.ln_1p());
    }
    Ok(last)
}

/// Hydrodynamic bounds: mass window, energy and entropy upper bounds.
#[derive(Clone, Copy, Debug)]
pub struct HydroBounds {
    pub mass_min: f64,
    pub mass_max: f64,
    pub energy_max: f64,
    pub entropy_max: f64,
}

impl HydroBounds {
    pub fn new(mass_min: f64, mass_max: f64, energy_max: f64, entropy_max: f64) -> Result<Self> {
        if !mass_min.is_finite() || mass_min <= 0.0 || mass_min > mass_max {
            return Err(Error::InvalidParams(format!(
                "need 0 < mass_min <= mass_max, got {mass_min}, {mass_max}"
            )));
        }
        if !energy_max.is_finite() || energy_max <= 0.0 {
            return Err(Error::InvalidParams("energy_max must be positive".into()));
        }
        Ok(HydroBounds { mass_min, mass_max, energy_max, entropy_max })
    }

    /// Tight bounds of a concrete density: its own moments.
    pub fn from_moments(m: &Moments) -> Result<Self> {
        HydroBounds::new(m.mass, m.mass, m.energy, m.entropy)
    }
}

struct InnerNode {
    point: Vec3,
    /// value × weight, premultiplied
    fw: f64,
    log_grad: Vec3,
}

fn inner_list(nodes: &[DensityNode]) -> Vec<InnerNode> {
    nodes
        .iter()
        .filter(|nd| nd.value > POSITIVITY_FLOOR)
        .map(|nd| InnerNode {
            point: nd.point,
            fw: nd.value * nd.weight,
            log_grad: nd.gradient * (1.0 / nd.value),
        })
        .collect()
}

/// The entropy dissipation
/// D(f) = 1/2 ∬ a(v-w) f(v)f(w) (∇log f(v) - ∇log f(w))⊗² dv dw
/// with the full (uncut) Coulomb kernel. Nonnegative up to quadrature
/// tolerance.
pub fn dissipation(f: &Density, spec: &QuadratureSpec) -> Result<IntegralResult> {
    spec.validate()?;
    if let Density::MaxOfTwo(a, b) = f {
        if matches!(**a, Density::Maxwellian { .. }) && matches!(**b, Density::ScaledBump { .. }) {
            return dissipation_split(a, b, spec);
        }
    }
    dissipation_generic(f, spec)
}

fn dissipation_generic(f: &Density, spec: &QuadratureSpec) -> Result<IntegralResult> {
    let r_loc = spec.singular_ball_radius;
    let r_loc2 = r_loc * r_loc;
    let mut values = Vec::with_capacity(spec.levels());
    for level in 0..spec.levels() {
        let outer = quadrature::density_nodes(f, spec, level, 0.0);
        let inner = inner_list(&quadrature::density_nodes(f, spec, level, 0.25));
        let dirs = fibonacci_sphere(spec.sphere_nodes_at(level));
        let radii = radial_midpoints(r_loc, spec.radial_nodes_at(level));
        let dr = r_loc / radii.len() as f64;
        let dir_w = 2.0 * TAU / dirs.len() as f64;

        let sum = par_chunk_sum(&outer, |nd| {
            if nd.value <= POSITIVITY_FLOOR {
                return 0.0;
            }
            let v = nd.point;
            let glv = nd.gradient * (1.0 / nd.value);
            let mut acc = 0.0;
            for w in &inner {
                let z = v - w.point;
                let zz = z.norm2();
                if zz <= r_loc2 {
                    continue;
                }
                let xi = glv - w.log_grad;
                let t = xi.dot(z);
                acc += (xi.norm2() - t * t / zz) / zz.sqrt() * w.fw;
            }
            let mut local = 0.0;
            for &rho in &radii {
                for &om in &dirs {
                    let w = v + om * rho;
                    let fw = f.evaluate(w);
                    if fw <= POSITIVITY_FLOOR {
                        continue;
                    }
                    if let Some(glw) = f.log_gradient(w) {
                        let xi = glv - glw;
                        let t = xi.dot(om);
                        // a-form 1/ρ cancels against the ρ² Jacobian
                        local += (xi.norm2() - t * t) * rho * fw;
                    }
                }
            }
            nd.weight * nd.value * (acc + local * dr * dir_w)
        });
        if !sum.is_finite() {
            return Err(Error::Accuracy { previous: 0.0, latest: sum });
        }
        values.push(0.5 * sum);
    }
    Ok(IntegralResult::from_levels(&values))
}

/// D(max(f, g)) for a Maxwellian f and a scaled bump g, split by branch
/// regions. Pairs with both points on the Maxwellian branch contribute
/// exactly zero, so
///
/// ```text
/// D(h) = ∬_{E_f × E_g} a ξ⊗ξ f g  +  1/2 ∬_{E_g × E_g} a ξ⊗ξ g g,
/// ```
///
/// with the first integral evaluated on the global grid (plus a local
/// spherical rule at each bump node) and the second entirely in normalized
/// bump coordinates, where the anisotropic metric factor |Sω| replaces the
/// isotropic radius.
fn dissipation_split(
    maxw: &Density,
    bump: &Density,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    let (b, shell) = match bump {
        Density::ScaledBump { b, shell } => (*b, *shell),
        _ => unreachable!(),
    };
    let n = f64::from(shell);
    let scale = Vec3::new(1.0 / (b * n), 1.0 / b, 1.0 / b);
    let center = Vec3::new(n, 0.0, 0.0);
    let det_s = scale.x * scale.y * scale.z;
    let r_loc = spec.singular_ball_radius;
    let r_loc2 = r_loc * r_loc;

    let mut values = Vec::with_capacity(spec.levels());
    for level in 0..spec.levels() {
        // E_g nodes: bump-patch grid masked to g > f
        let g_nodes: Vec<DensityNode> = quadrature::density_nodes(bump, spec, level, 0.0)
            .into_iter()
            .filter(|nd| nd.value > maxw.evaluate(nd.point))
            .collect();
        let g_inner = inner_list(&g_nodes);
        // E_f nodes: global grid masked to f >= g
        let f_nodes: Vec<InnerNode> = {
            let all = quadrature::density_nodes(maxw, spec, level, 0.0);
            let kept: Vec<DensityNode> = all
                .into_par_iter()
                .filter(|nd| nd.value >= bump.evaluate(nd.point))
                .collect();
            inner_list(&kept)
        };
        let dirs = fibonacci_sphere(spec.sphere_nodes_at(level));
        let dir_w = 2.0 * TAU / dirs.len() as f64;
        let radii = radial_midpoints(r_loc, spec.radial_nodes_at(level));
        let dr = r_loc / radii.len() as f64;

        // cross term: outer over E_g, inner over the Maxwellian branch
        let cross = par_chunk_sum(&g_inner, |wn| {
            let w = wn.point;
            let glw = wn.log_grad;
            let mut acc = 0.0;
            for vn in &f_nodes {
                let z = vn.point - w;
                let zz = z.norm2();
                if zz <= r_loc2 {
                    continue;
                }
                let xi = vn.log_grad - glw;
                let t = xi.dot(z);
                acc += (xi.norm2() - t * t / zz) / zz.sqrt() * vn.fw;
            }
            let mut local = 0.0;
            for &rho in &radii {
                for &om in &dirs {
                    let v = w + om * rho;
                    let fv = maxw.evaluate(v);
                    if fv <= POSITIVITY_FLOOR || fv < bump.evaluate(v) {
                        continue;
                    }
                    let glv = maxw.log_gradient(v).expect("maxwellian is positive");
                    let xi = glv - glw;
                    let t = xi.dot(om);
                    local += (xi.norm2() - t * t) * rho * fv;
                }
            }
            wn.fw * (acc + local * dr * dir_w)
        });

        // self term in normalized coordinates
        let self_radial = (4 * spec.radial_nodes_at(level)).max(32);
        let self_dirs = fibonacci_sphere(2 * spec.sphere_nodes_at(level));
        let self_dir_w = 2.0 * TAU / self_dirs.len() as f64;
        let keep = 1.0 - spec.support_clamp;
        let amp = b * b / (n * n * n * n);

        let gg = par_chunk_sum(&g_inner, |vn| {
            let v = vn.point;
            let glv = vn.log_grad;
            let u_local = Vec3::new(b * n * (v.x - n), b * v.y, b * v.z);
            let rho_max = 1.0 + u_local.norm();
            let drho = rho_max / self_radial as f64;
            let mut acc = 0.0;
            for i in 0..self_radial {
                let rho = (i as f64 + 0.5) * drho;
                for &om in &self_dirs {
                    let w_local = u_local + om * rho;
                    if w_local.norm() > keep {
                        continue;
                    }
                    let gw = amp * crate::density::phi(w_local);
                    if gw <= POSITIVITY_FLOOR {
                        continue;
                    }
                    let w_phys = center
                        + Vec3::new(w_local.x * scale.x, w_local.y * scale.y, w_local.z * scale.z);
                    if gw <= maxw.evaluate(w_phys) {
                        continue;
                    }
                    let s_om = Vec3::new(om.x * scale.x, om.y * scale.y, om.z * scale.z);
                    let s_norm = s_om.norm();
                    let z_hat = s_om * (1.0 / s_norm);
                    let u = crate::density::phi_log_gradient(w_local);
                    let glw = Vec3::new(u.x * b * n, u.y * b, u.z * b);
                    let xi = glv - glw;
                    let t = xi.dot(z_hat);
                    acc += (xi.norm2() - t * t) * (rho / s_norm) * gw;
                }
            }
            vn.fw * acc * det_s * drho * self_dir_w
        });

        let total = cross + 0.5 * gg;
        if !total.is_finite() {
            return Err(Error::Accuracy { previous: 0.0, latest: total });
        }
        values.push(total);
    }
    Ok(IntegralResult::from_levels(&values))
}

/// Fisher-type coercivity term ∫ ⟨ã(v) ∇s(v), ∇s(v)⟩ dv with s = 2√f,
/// which equals ∫ ⟨ã ∇f, ∇f⟩ / f dv. Nonnegative.
pub fn fisher_term(
    f: &Density,
    spec: &QuadratureSpec,
    profile: &CutoffProfile,
) -> Result<IntegralResult> {
    spec.validate()?;
    let mut values = Vec::with_capacity(spec.levels());
    for level in 0..spec.levels() {
        let nodes = quadrature::density_nodes(f, spec, level, 0.0);
        let conv = inner_list(&nodes);
        let sum = par_chunk_sum(&nodes, |nd| {
            if nd.value <= POSITIVITY_FLOOR {
                return 0.0;
            }
            let glv = nd.gradient * (1.0 / nd.value);
            let mut acc = 0.0;
            for w in &conv {
                acc += cutoff_form(nd.point - w.point, glv, profile) * w.fw;
            }
            nd.weight * nd.value * acc
        });
        if !sum.is_finite() {
            return Err(Error::Accuracy { previous: 0.0, latest: sum });
        }
        values.push(sum);
    }
    Ok(IntegralResult::from_levels(&values))
}

/// The error term ∬ ∂_ij ā_ij(v-w) f(v) f(w) dv dw. The kernel is bounded
/// (it equals -2η'(|z|)/|z|², which is -6 near the origin) and supported on
/// |z| ≤ 1, so the inner integral is a radial-spherical rule around each
/// outer node. Bounded below by -16 M₀².
pub fn error_term(
    f: &Density,
    spec: &QuadratureSpec,
    profile: &CutoffProfile,
) -> Result<IntegralResult> {
    spec.validate()?;
    // bump patches need an explicit inner correction: the spherical rule
    // cannot see a support of diameter ~1/B
    let (bump_inner, bump_center) = match f {
        Density::MaxOfTwo(a, b) => {
            let inner: Vec<(Vec3, f64)> = quadrature::density_nodes(b, spec, spec.levels() - 1, 0.0)
                .into_iter()
                .filter(|nd| nd.value > a.evaluate(nd.point))
                .map(|nd| (nd.point, (nd.value - a.evaluate(nd.point)) * nd.weight))
                .collect();
            let c = match **b {
                Density::ScaledBump { shell, .. } => Some(Vec3::new(f64::from(shell), 0.0, 0.0)),
                _ => None,
            };
            (inner, c)
        }
        _ => (Vec::new(), None),
    };

    let mut values = Vec::with_capacity(spec.levels());
    for level in 0..spec.levels() {
        let nodes = quadrature::density_nodes(f, spec, level, 0.0);
        let dirs = fibonacci_sphere(spec.sphere_nodes_at(level));
        let dir_w = 2.0 * TAU / dirs.len() as f64;
        let radial = 2 * spec.radial_nodes_at(level);
        let radii = radial_midpoints(1.0, radial);
        let dr = 1.0 / radial as f64;

        let sum = par_chunk_sum(&nodes, |nd| {
            let v = nd.point;
            // ∫ -2η'(ρ)/ρ² f(w) dw over B_1(v): the ρ² Jacobian cancels
            let mut inner = 0.0;
            for &rho in &radii {
                let ep = eta_prime(rho, profile);
                if ep == 0.0 {
                    continue;
                }
                let mut shell_sum = 0.0;
                for &om in &dirs {
                    shell_sum += f.evaluate(v + om * rho);
                }
                inner += -2.0 * ep * shell_sum;
            }
            let mut val = inner * dr * dir_w;
            // spike correction: the max-branch bump replaces f by g on a
            // set too small for the spherical rule to resolve
            if let Some(c) = bump_center {
                if (v - c).norm() <= 1.05 {
                    for &(w, gw) in &bump_inner {
                        let z = v - w;
                        let zz = z.norm2();
                        if zz > 0.0 && zz < 1.0 {
                            val += -2.0 * eta_prime(zz.sqrt(), profile) / zz * gw;
                        }
                    }
                }
            }
            nd.weight * nd.value * val
        });
        if !sum.is_finite() {
            return Err(Error::Accuracy { previous: 0.0, latest: sum });
        }
        values.push(sum);
    }
    Ok(IntegralResult::from_levels(&values))
}

/// The coercivity diagnostic of the main lower bound: D(f), the weighted
/// norm ‖f‖_{L³_{-5/3}}, and the empirical constant
/// c₁ = (D + 20 M₀²) / ‖f‖_{L³_{-5/3}}.
#[derive(Clone, Copy, Debug)]
pub struct CoercivityCheck {
    pub dissipation: IntegralResult,
    pub norm: f64,
    pub c1_estimate: f64,
}

pub fn coercivity_check(
    f: &Density,
    spec: &QuadratureSpec,
    bounds: &HydroBounds,
) -> Result<CoercivityCheck> {
    let d = dissipation(f, spec)?;
    let norm = quadrature::weighted_norm(f, 3.0, 5.0 / 3.0, spec)?;
    if norm <= 0.0 {
        return Err(Error::Degenerate("weighted norm vanishes".into()));
    }
    let c1 = (d.value + 20.0 * bounds.mass_max * bounds.mass_max) / norm;
    Ok(CoercivityCheck { dissipation: d, norm, c1_estimate: c1 })
}

/// Parameters of the mass-concentration bound: on the ball of radius R a
/// set of measure ≥ μ carries density values ≥ l.
#[derive(Clone, Copy, Debug)]
pub struct ConcentrationParams {
    pub radius: f64,
    pub level: f64,
    pub mu: f64,
    pub lambda: f64,
    pub h_tilde: f64,
}

/// Closed-form arithmetic: R = √(2E₀/m₀), l = m₀/(4|B_R|),
/// Λ = exp(8H̃₀/m₀) - 1, μ = m₀/(8Λ).
pub fn concentration_params(bounds: &HydroBounds, h_tilde: f64) -> Result<ConcentrationParams> {
    if !h_tilde.is_finite() || h_tilde <= 0.0 {
        return Err(Error::InvalidParams("h_tilde must be positive".into()));
    }
    let m0 = bounds.mass_min;
    let radius = (2.0 * bounds.energy_max / m0).sqrt();
    let ball = 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3);
    let level = m0 / (4.0 * ball);
    let lambda = (8.0 * h_tilde / m0).exp_m1();
    let mu = m0 / (8.0 * lambda);
    Ok(ConcentrationParams { radius, level, mu, lambda, h_tilde })
}

/// Measure of {v ∈ B_R : f(v) ≥ l} by quadrature of the indicator.
pub fn concentration_verify(
    f: &Density,
    params: &ConcentrationParams,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let local = spec.with_truncation(params.radius);
    let r = quadrature::integrate3(
        |v| if f.evaluate(v) >= params.level { 1.0 } else { 0.0 },
        &local,
    )?;
    Ok(r.value)
}
