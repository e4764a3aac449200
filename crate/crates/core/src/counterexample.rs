//! The optimality family h = max(f, g): a standard Maxwellian plus a far,
//! thin, radially compressed bump of mass c = 1/(BN⁵), tuned so that the
//! dissipation of h grows slower than any weighted norm stronger than
//! L³_{-5/3}.
//!
//! The dissipation upper bound splits by Cauchy-Schwarz into three
//! interaction integrals,
//!
//! ```text
//! I₁ = ∬_{ℝ³×E_g} a(v-w) f(v) g(w) ∇log f(v)⊗² ,   ~ 1/(BN⁶)
//! I₂ = ∬_{ℝ³×E_g} a(v-w) f(v) g(w) ∇log g(w)⊗² ,   ~ B/N⁶   (dominant)
//! I₃ = ∬_{E_g×E_g} a(v-w) g(v) g(w) ∇log g(v)⊗² ,  ~ B/N⁷
//! ```
//!
//! and D(h) ≤ 2(I₁ + I₂ + I₃). The radial compression of g by the extra
//! factor N matches the anisotropy of the kernel: the expensive direction
//! of ∇log g is the one the convolved kernel suppresses by 1/N².

use rayon::prelude::*;

use crate::density::{self, Density, POSITIVITY_FLOOR};
use crate::error::{Error, Result};
use crate::functionals;
use crate::quadrature::{
    self, fibonacci_sphere, par_chunk_sum, par_chunk_sum_multi, radial_midpoints, DensityNode,
    IntegralResult, QuadratureSpec,
};
use crate::vec3::Vec3;

const TAU: f64 = std::f64::consts::TAU;

/// Normalization constant of the unit bump (mass one).
pub use crate::density::ALPHA0;
/// β₀ = ∫ φ |log φ|.
pub use crate::density::BETA0;

/// The radial bump φ(v) = α₀ exp(-1/(1-|v|²)) on the unit ball.
pub fn bump_phi(v: Vec3) -> f64 {
    density::phi(v)
}

/// β₀ = ∫ φ |log φ| dv, a fixed positive constant.
pub fn beta0() -> f64 {
    BETA0
}

/// Parameters (B, N) of the family, with the derived constant c = 1/(BN⁵).
/// Requires N ≥ 2 and B ≥ N⁶, which forces c ≤ N⁻² ≤ N⁶ ≤ B.
#[derive(Clone, Copy, Debug)]
pub struct CounterexampleParams {
    pub b: f64,
    pub shell: u32,
    pub c: f64,
    pub alpha0: f64,
    pub beta0: f64,
}

impl CounterexampleParams {
    pub fn new(b: f64, shell: u32) -> Result<CounterexampleParams> {
        if shell < 2 {
            return Err(Error::InvalidParams(format!("shell must be >= 2, got {shell}")));
        }
        let n6 = f64::from(shell).powi(6);
        if !b.is_finite() || b < n6 {
            return Err(Error::InvalidParams(format!(
                "need B >= N^6 = {n6}, got B = {b}"
            )));
        }
        let n = f64::from(shell);
        Ok(CounterexampleParams { b, shell, c: 1.0 / (b * n.powi(5)), alpha0: ALPHA0, beta0: BETA0 })
    }

    pub fn bump(&self) -> Density {
        Density::ScaledBump { b: self.b, shell: self.shell }
    }
}

/// h = max(f, g) with f the standard Maxwellian.
pub fn build_h(params: &CounterexampleParams) -> Density {
    Density::MaxOfTwo(
        Box::new(Density::standard_maxwellian()),
        Box::new(params.bump()),
    )
}

/// Bump-patch nodes restricted to E_g = {g > f}.
fn e_g_nodes(params: &CounterexampleParams, spec: &QuadratureSpec, level: usize) -> Vec<DensityNode> {
    let maxw = Density::standard_maxwellian();
    quadrature::density_nodes(&params.bump(), spec, level, 0.0)
        .into_iter()
        .filter(|nd| nd.value > maxw.evaluate(nd.point))
        .collect()
}

struct GNode {
    point: Vec3,
    gw: f64,
    log_grad: Vec3,
}

fn g_inner(nodes: &[DensityNode]) -> Vec<GNode> {
    nodes
        .iter()
        .filter(|nd| nd.value > POSITIVITY_FLOOR)
        .map(|nd| GNode {
            point: nd.point,
            gw: nd.value * nd.weight,
            log_grad: nd.gradient * (1.0 / nd.value),
        })
        .collect()
}

/// The two cross integrals in one sweep over (w, v) pairs, plus the
/// region split of I₂ at |v| = N/2 (columns: I₁, I₂ inner, I₂ exterior).
fn cross_integrals(
    params: &CounterexampleParams,
    spec: &QuadratureSpec,
) -> Result<Vec<[f64; 3]>> {
    spec.validate()?;
    let maxw = Density::standard_maxwellian();
    let r_loc = spec.singular_ball_radius;
    let r_loc2 = r_loc * r_loc;
    let half_n = f64::from(params.shell) / 2.0;
    let half_n2 = half_n * half_n;

    let mut levels = Vec::with_capacity(spec.levels());
    for level in 0..spec.levels() {
        let w_nodes = g_inner(&e_g_nodes(params, spec, level));
        // full f measure on the global grid: (point, f·weight, |point|²)
        let v_nodes: Vec<(Vec3, f64, f64)> = quadrature::density_nodes(&maxw, spec, level, 0.0)
            .iter()
            .map(|nd| (nd.point, nd.value * nd.weight, nd.point.norm2()))
            .collect();
        let dirs = fibonacci_sphere(spec.sphere_nodes_at(level));
        let dir_w = 2.0 * TAU / dirs.len() as f64;
        let radii = radial_midpoints(r_loc, spec.radial_nodes_at(level));
        let dr = r_loc / radii.len() as f64;

        let sums = par_chunk_sum_multi::<_, _, 3>(&w_nodes, |wn| {
            let w = wn.point;
            let glw = wn.log_grad;
            let gg = glw.norm2();
            let mut i1 = 0.0;
            let mut i2_in = 0.0;
            let mut i2_out = 0.0;
            for &(v, fw, vv) in &v_nodes {
                let z = v - w;
                let zz = z.norm2();
                if zz <= r_loc2 {
                    continue;
                }
                let inv_zz = 1.0 / zz;
                let inv_r = inv_zz.sqrt();
                let tv = v.dot(z);
                i1 += (vv - tv * tv * inv_zz) * inv_r * fw;
                let tg = glw.dot(z);
                let c2 = (gg - tg * tg * inv_zz) * inv_r * fw;
                if v.norm2() <= half_n2 {
                    i2_in += c2;
                } else {
                    i2_out += c2;
                }
            }
            let mut l1 = 0.0;
            let mut l2_in = 0.0;
            let mut l2_out = 0.0;
            for &rho in &radii {
                for &om in &dirs {
                    let v = w + om * rho;
                    let fv = maxw.evaluate(v);
                    if fv <= POSITIVITY_FLOOR {
                        continue;
                    }
                    let tv = v.dot(om);
                    l1 += (v.norm2() - tv * tv) * rho * fv;
                    let tg = glw.dot(om);
                    let c2 = (gg - tg * tg) * rho * fv;
                    if v.norm2() <= half_n2 {
                        l2_in += c2;
                    } else {
                        l2_out += c2;
                    }
                }
            }
            let lw = dr * dir_w;
            [
                wn.gw * (i1 + l1 * lw),
                wn.gw * (i2_in + l2_in * lw),
                wn.gw * (i2_out + l2_out * lw),
            ]
        });
        if sums.iter().any(|s| !s.is_finite()) {
            return Err(Error::Accuracy { previous: 0.0, latest: f64::NAN });
        }
        levels.push(sums);
    }
    Ok(levels)
}

/// I₁ = ∬_{ℝ³ × E_g} a(v-w) f(v) g(w) ∇log f(v)⊗² dv dw ≲ 1/(BN⁶).
pub fn compute_i1(params: &CounterexampleParams, spec: &QuadratureSpec) -> Result<IntegralResult> {
    let levels = cross_integrals(params, spec)?;
    let vals: Vec<f64> = levels.iter().map(|l| l[0]).collect();
    Ok(IntegralResult::from_levels(&vals))
}

/// I₂ = ∬_{ℝ³ × E_g} a(v-w) f(v) g(w) ∇log g(w)⊗² dv dw ≲ B/N⁶, the
/// dominating term for B ≥ N⁶.
pub fn compute_i2(params: &CounterexampleParams, spec: &QuadratureSpec) -> Result<IntegralResult> {
    let levels = cross_integrals(params, spec)?;
    let vals: Vec<f64> = levels.iter().map(|l| l[1] + l[2]).collect();
    Ok(IntegralResult::from_levels(&vals))
}

/// The split of I₂ at |v| = N/2: the inner ball carries the anisotropic
/// bound, the exterior is exponentially small in N².
pub fn i2_region_split(
    params: &CounterexampleParams,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let levels = cross_integrals(params, spec)?;
    let last = &levels[levels.len() - 1];
    Ok((last[1], last[2]))
}

/// I₃ = ∬_{E_g × E_g} a(v-w) g(v) g(w) ∇log g(v)⊗² dv dw ≲ B/N⁷,
/// evaluated entirely in normalized bump coordinates, where the
/// anisotropic metric factor |Sω| replaces the isotropic radius.
pub fn compute_i3(params: &CounterexampleParams, spec: &QuadratureSpec) -> Result<IntegralResult> {
    Ok(IntegralResult::from_levels(&i3_levels(params, spec)?))
}

fn i3_levels(params: &CounterexampleParams, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let maxw = Density::standard_maxwellian();
    let b = params.b;
    let n = f64::from(params.shell);
    let scale = Vec3::new(1.0 / (b * n), 1.0 / b, 1.0 / b);
    let center = Vec3::new(n, 0.0, 0.0);
    let det_s = scale.x * scale.y * scale.z;
    let amp = b * b / (n * n * n * n);

    let mut values = Vec::with_capacity(spec.levels());
    for level in 0..spec.levels() {
        let v_nodes = g_inner(&e_g_nodes(params, spec, level));
        let radial = (4 * spec.radial_nodes_at(level)).max(32);
        let dirs = fibonacci_sphere(2 * spec.sphere_nodes_at(level));
        let dir_w = 2.0 * TAU / dirs.len() as f64;
        let keep = 1.0 - spec.support_clamp;

        let sum = par_chunk_sum(&v_nodes, |vn| {
            let glv = vn.log_grad;
            let gg = glv.norm2();
            let u_local = Vec3::new(b * n * (vn.point.x - n), b * vn.point.y, b * vn.point.z);
            let rho_max = 1.0 + u_local.norm();
            let drho = rho_max / radial as f64;
            let mut acc = 0.0;
            for i in 0..radial {
                let rho = (i as f64 + 0.5) * drho;
                for &om in &dirs {
                    let w_local = u_local + om * rho;
                    if w_local.norm() > keep {
                        continue;
                    }
                    let gw = amp * density::phi(w_local);
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
                    let t = glv.dot(s_om) / s_norm;
                    acc += (gg - t * t) * (rho / s_norm) * gw;
                }
            }
            vn.gw * acc * det_s * drho * dir_w
        });
        if !sum.is_finite() {
            return Err(Error::Accuracy { previous: 0.0, latest: sum });
        }
        values.push(sum);
    }
    Ok(values)
}

/// D(h) ≤ 2(I₁ + I₂ + I₃), the Cauchy-Schwarz upper bound.
pub fn dissipation_upper(
    params: &CounterexampleParams,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    let cross = cross_integrals(params, spec)?;
    let i3 = i3_levels(params, spec)?;
    let vals: Vec<f64> = cross
        .iter()
        .zip(&i3)
        .map(|(l, i3_level)| 2.0 * (l[0] + l[1] + l[2] + i3_level))
        .collect();
    Ok(IntegralResult::from_levels(&vals))
}

/// Direct quadrature of D(h) through the branch-split regions; intended
/// for coarse resolutions at moderate (B, N).
pub fn dissipation_direct(
    params: &CounterexampleParams,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    functionals::dissipation(&build_h(params), spec)
}

/// ∫_{E_g} g |∇log g|² dv ≲ c B² N²; the normalized ratio against cB²N²
/// is bounded across the family.
pub fn grad_log_moment(
    params: &CounterexampleParams,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    spec.validate()?;
    let mut values = Vec::with_capacity(spec.levels());
    for level in 0..spec.levels() {
        let nodes = g_inner(&e_g_nodes(params, spec, level));
        values.push(par_chunk_sum(&nodes, |nd| nd.gw * nd.log_grad.norm2()));
    }
    Ok(IntegralResult::from_levels(&values))
}

/// sup over v ∈ E_g of the Newton potential ∫_{E_g} g(w)/|v-w| dw, which
/// is ≲ cBN = 1/N⁴.
pub fn newton_sup(params: &CounterexampleParams, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    let b = params.b;
    let n = f64::from(params.shell);
    let scale = Vec3::new(1.0 / (b * n), 1.0 / b, 1.0 / b);
    let center = Vec3::new(n, 0.0, 0.0);
    let det_s = scale.x * scale.y * scale.z;
    let amp = b * b / (n * n * n * n);
    let maxw = Density::standard_maxwellian();
    let level = spec.levels() - 1;
    let keep = 1.0 - spec.support_clamp;

    // probe a spread of E_g points including the center
    let nodes = e_g_nodes(params, spec, level);
    let stride = (nodes.len() / 48).max(1);
    let mut probes: Vec<Vec3> = nodes.iter().step_by(stride).map(|nd| nd.point).collect();
    probes.push(center);

    let radial = (4 * spec.radial_nodes_at(level)).max(48);
    let dirs = fibonacci_sphere(2 * spec.sphere_nodes_at(level));
    let dir_w = 2.0 * TAU / dirs.len() as f64;

    let sup = probes
        .par_iter()
        .map(|&v| {
            let u_local = Vec3::new(b * n * (v.x - n), b * v.y, b * v.z);
            let rho_max = 1.0 + u_local.norm();
            let drho = rho_max / radial as f64;
            let mut acc = 0.0;
            for i in 0..radial {
                let rho = (i as f64 + 0.5) * drho;
                for &om in &dirs {
                    let w_local = u_local + om * rho;
                    if w_local.norm() > keep {
                        continue;
                    }
                    let gw = amp * density::phi(w_local);
                    if gw <= POSITIVITY_FLOOR {
                        continue;
                    }
                    let w_phys = center
                        + Vec3::new(w_local.x * scale.x, w_local.y * scale.y, w_local.z * scale.z);
                    if gw <= maxw.evaluate(w_phys) {
                        continue;
                    }
                    let s_norm =
                        Vec3::new(om.x * scale.x, om.y * scale.y, om.z * scale.z).norm();
                    acc += gw * rho / s_norm;
                }
            }
            acc * det_s * drho * dir_w
        })
        .reduce(|| 0.0, f64::max);
    Ok(sup)
}

/// Result of the norm lower bound: the measured ‖h‖_{L^p_{-q}} and the
/// scaling bound κ · B^{2-3/p} N^{-4-q-1/p} with κ calibrated once at the
/// reference point (B, N) = (64, 2).
#[derive(Clone, Copy, Debug)]
pub struct NormLowerCheck {
    pub norm: f64,
    pub bound: f64,
    pub kappa: f64,
}

/// The algebraic lower-bound expression B^{2-3/p} N^{-4-q-1/p} (up to the
/// family-independent constant).
pub fn norm_bound_raw(b: f64, shell: u32, p: f64, q: f64) -> f64 {
    let n = f64::from(shell);
    b.powf(2.0 - 3.0 / p) * n.powf(-4.0 - q - 1.0 / p)
}

pub fn norm_lower_check(
    params: &CounterexampleParams,
    p: f64,
    q: f64,
    spec: &QuadratureSpec,
) -> Result<NormLowerCheck> {
    let h = build_h(params);
    let norm = quadrature::weighted_norm(&h, p, q, spec)?;
    // calibrate κ at the reference family member with a 1/2 safety margin
    let reference = CounterexampleParams::new(64.0, 2)?;
    let ref_norm = quadrature::weighted_norm(&build_h(&reference), p, q, spec)?;
    let kappa = 0.5 * ref_norm / norm_bound_raw(reference.b, reference.shell, p, q);
    let bound = kappa * norm_bound_raw(params.b, params.shell, p, q);
    Ok(NormLowerCheck { norm, bound, kappa })
}

/// One row of an experiment sweep over the family.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ScalingRecord {
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "N")]
    pub shell: u32,
    pub c: f64,
    #[serde(rename = "I1")]
    pub i1: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
    #[serde(rename = "I3")]
    pub i3: f64,
    #[serde(rename = "D_upper")]
    pub d_upper: f64,
    #[serde(rename = "D_direct", skip_serializing_if = "Option::is_none")]
    pub d_direct: Option<f64>,
    pub mass: f64,
    pub energy: f64,
    pub entropy: f64,
    pub norm: f64,
    pub ratio: f64,
}

impl ScalingRecord {
    pub const CSV_HEADER: &'static str =
        "B,N,c,I1,I2,I3,D_upper,mass,energy,entropy,norm,ratio";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.b,
            self.shell,
            self.c,
            self.i1,
            self.i2,
            self.i3,
            self.d_upper,
            self.mass,
            self.energy,
            self.entropy,
            self.norm,
            self.ratio
        )
    }
}

/// The B- and N-dependent quantities of one family member, independent of
/// any norm choice.
#[derive(Clone, Copy, Debug)]
pub struct FamilyPoint {
    pub params: CounterexampleParams,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub d_upper: f64,
    pub d_upper_error: f64,
    pub mass: f64,
    pub energy: f64,
    pub entropy: f64,
}

pub fn family_point(params: &CounterexampleParams, spec: &QuadratureSpec) -> Result<FamilyPoint> {
    let cross = cross_integrals(params, spec)?;
    let last = cross[cross.len() - 1];
    let prev = cross[cross.len() - 2];
    let i1 = last[0];
    let i2 = last[1] + last[2];
    let i3 = i3_levels(params, spec)?;
    let i3_last = i3[i3.len() - 1];
    let d_upper = 2.0 * (i1 + i2 + i3_last);
    let d_prev = 2.0 * (prev[0] + prev[1] + prev[2] + i3[i3.len() - 2]);
    let m = functionals::moments(&build_h(params), spec)?;
    Ok(FamilyPoint {
        params: *params,
        i1,
        i2,
        i3: i3_last,
        d_upper,
        d_upper_error: (d_upper - d_prev).abs(),
        mass: m.mass,
        energy: m.energy,
        entropy: m.entropy,
    })
}

impl FamilyPoint {
    /// Attach a norm context to form a sweep record.
    pub fn record(&self, norm: f64) -> ScalingRecord {
        ScalingRecord {
            b: self.params.b,
            shell: self.params.shell,
            c: self.params.c,
            i1: self.i1,
            i2: self.i2,
            i3: self.i3,
            d_upper: self.d_upper,
            d_direct: None,
            mass: self.mass,
            energy: self.energy,
            entropy: self.entropy,
            norm,
            ratio: (self.d_upper + 1.0) / norm,
        }
    }
}

/// Evaluate the family along a schedule: per entry the three integrals,
/// the upper bound, the moments of h, the requested weighted norm, and the
/// optimality ratio (D_upper + 1)/‖h‖_{L^p_{-q}}. Entries run in parallel;
/// records are returned in schedule order.
pub fn optimality_ratio(
    p: f64,
    q: f64,
    schedule: &[(u32, f64)],
    spec: &QuadratureSpec,
) -> Result<Vec<ScalingRecord>> {
    if schedule.is_empty() {
        return Err(Error::InvalidParams("empty schedule".into()));
    }
    let params: Vec<CounterexampleParams> = schedule
        .iter()
        .map(|&(shell, b)| CounterexampleParams::new(b, shell))
        .collect::<Result<_>>()?;
    params
        .par_iter()
        .map(|prm| scaling_record(prm, p, q, spec))
        .collect()
}

pub fn scaling_record(
    params: &CounterexampleParams,
    p: f64,
    q: f64,
    spec: &QuadratureSpec,
) -> Result<ScalingRecord> {
    let point = family_point(params, spec)?;
    let norm = quadrature::weighted_norm(&build_h(params), p, q, spec)?;
    Ok(point.record(norm))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(nodes: usize) -> QuadratureSpec {
        QuadratureSpec {
            truncation_radius: 12.0,
            nodes_per_axis: nodes,
            singular_ball_radius: 0.5,
            radial_nodes: 8,
            sphere_nodes: 16,
            support_clamp: 1e-3,
            refinement_levels: 2,
        }
    }

    /// 1D radial midpoint quadrature oracle for radial integrands on [0, 1].
    fn radial_oracle<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
        let h = 1.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let r = (i as f64 + 0.5) * h;
            acc += 4.0 * std::f64::consts::PI * r * r * f(r);
        }
        acc * h
    }

    #[test]
    fn alpha0_normalizes_phi() {
        // recompute the embedded constant with the 1e6-node radial rule
        let mass = radial_oracle(|r| ALPHA0 * (-1.0 / (1.0 - r * r)).exp(), 1_000_000);
        assert!((mass - 1.0).abs() < 1e-8, "phi mass {mass}");
    }

    #[test]
    fn beta0_matches_radial_oracle() {
        let la = ALPHA0.ln();
        let val = radial_oracle(
            |r| {
                let t = 1.0 / (1.0 - r * r);
                ALPHA0 * (-t).exp() * (la - t).abs()
            },
            1_000_000,
        );
        assert!((val - BETA0).abs() < 1e-8, "beta0 {val}");
        assert!(BETA0 > 0.0 && BETA0.is_finite());
        // stability under refinement
        let crude = radial_oracle(
            |r| {
                let t = 1.0 / (1.0 - r * r);
                ALPHA0 * (-t).exp() * (la - t).abs()
            },
            500_000,
        );
        assert!((crude - val).abs() < 1e-6);
    }

    #[test]
    fn phi_at_center() {
        assert!((bump_phi(Vec3::ZERO) - ALPHA0 * (-1.0_f64).exp()).abs() < 1e-14);
        assert_eq!(bump_phi(Vec3::new(1.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(CounterexampleParams::new(64.0, 2).is_ok());
        assert!(CounterexampleParams::new(63.0, 2).is_err());
        assert!(CounterexampleParams::new(64.0, 1).is_err());
        let p = CounterexampleParams::new(64.0, 2).unwrap();
        assert!((p.c - 1.0 / 2048.0).abs() < 1e-18);
        // c ≤ N⁻² ≤ N⁶ ≤ B
        assert!(p.c <= 0.25 && 0.25 <= 64.0 && 64.0 <= p.b);
    }

    #[test]
    fn h_branches() {
        let params = CounterexampleParams::new(64.0, 2).unwrap();
        let h = build_h(&params);
        let f = Density::standard_maxwellian();
        let g = params.bump();
        // at the bump center g dominates f by orders of magnitude
        let at = Vec3::new(2.0, 0.0, 0.0);
        assert!(g.evaluate(at) > 1e3 * f.evaluate(at));
        assert_eq!(h.evaluate(at), g.evaluate(at));
        // far from the support ellipsoid h = f
        let far = Vec3::new(1.0, 1.0, 0.0);
        assert_eq!(g.evaluate(far), 0.0);
        assert_eq!(h.evaluate(far), f.evaluate(far));
        // h dominates both branches
        let mut rng = crate::rng::SplitMix64::new(21);
        for _ in 0..200 {
            let v = Vec3::new(rng.range(-3.0, 3.0), rng.range(-1.0, 1.0), rng.range(-1.0, 1.0));
            assert!(h.evaluate(v) >= f.evaluate(v));
            assert!(h.evaluate(v) >= g.evaluate(v));
        }
    }

    #[test]
    fn g_support_is_the_ellipsoid() {
        let params = CounterexampleParams::new(64.0, 2).unwrap();
        let g = params.bump();
        let e = crate::geometry::Ellipsoid {
            center: Vec3::new(2.0, 0.0, 0.0),
            shell: 2,
            scale: 1.0 / 64.0, // semi-axes (1/(BN), 1/B, 1/B) = (1/B)·(1/N, 1, 1)
        };
        let mut rng = crate::rng::SplitMix64::new(8);
        for _ in 0..2000 {
            let v = Vec3::new(
                2.0 + rng.range(-0.03, 0.03),
                rng.range(-0.03, 0.03),
                rng.range(-0.03, 0.03),
            );
            if g.evaluate(v) > 0.0 {
                assert!(e.contains(v), "{v:?} outside the support ellipsoid");
            }
        }
    }

    #[test]
    fn g_mass_is_c() {
        let params = CounterexampleParams::new(64.0, 2).unwrap();
        let m = quadrature::weighted_norm(&params.bump(), 1.0, 0.0, &spec(32)).unwrap();
        assert!((m - params.c).abs() / params.c < 0.01, "mass {m} vs c {}", params.c);
    }

    #[test]
    fn bump_energy_is_small() {
        let params = CounterexampleParams::new(64.0, 2).unwrap();
        let g = params.bump();
        let s = spec(32);
        let level = s.levels() - 1;
        let nodes = quadrature::density_nodes(&g, &s, level, 0.0);
        let energy = par_chunk_sum(&nodes, |nd| nd.weight * nd.value * nd.point.norm2());
        assert!(energy <= 4.0, "bump energy {energy}");
        assert!((energy - params.c * 4.0).abs() < params.c, "~ c N² = {}", params.c * 4.0);
    }

    #[test]
    fn i_integrals_scale_and_dominate() {
        let s = spec(16);
        let p64 = CounterexampleParams::new(64.0, 2).unwrap();
        let p256 = CounterexampleParams::new(256.0, 2).unwrap();
        let i1a = compute_i1(&p64, &s).unwrap().value;
        let i1b = compute_i1(&p256, &s).unwrap().value;
        let i2a = compute_i2(&p64, &s).unwrap().value;
        let i2b = compute_i2(&p256, &s).unwrap().value;
        let i3a = compute_i3(&p64, &s).unwrap().value;
        // I1 ~ 1/B: quadrupling B divides by ~4
        let r1 = i1a / i1b;
        assert!(r1 > 2.5 && r1 < 6.0, "I1 ratio {r1}");
        // I2 ~ B: quadrupling B multiplies by ~4
        let r2 = i2b / i2a;
        assert!(r2 > 2.5 && r2 < 6.0, "I2 ratio {r2}");
        // I2 dominates
        assert!(i2a > i1a && i2a > i3a, "I2 {i2a} vs I1 {i1a}, I3 {i3a}");
        // doubling g doubles I1 (linearity in g): emulate via half B at
        // fixed amplitude is not available, so check against the c-scaling
        let _ = i3a;
    }

    #[test]
    fn newton_sup_is_bounded() {
        let s = spec(16);
        let p = CounterexampleParams::new(64.0, 2).unwrap();
        let sup = newton_sup(&p, &s).unwrap();
        // ≲ cBN = 1/N⁴ with the bump potential constant ~ O(1)
        assert!(sup > 0.0);
        assert!(sup < 4.0 * p.c * p.b * f64::from(p.shell), "sup {sup}");
    }

    #[test]
    fn empty_schedule_is_rejected() {
        assert!(matches!(
            optimality_ratio(3.0, 1.0, &[], &spec(16)),
            Err(Error::InvalidParams(_))
        ));
    }
}
