//! The Coulomb diffusion kernel, its smooth cutoff, the convolved matrix
//! ã = ā ∗ f and its anisotropic eigenstructure.
//!
//! The kernel in Coulomb scaling is `a(v) = |v|⁻¹ (I - v̂⊗v̂)`; it projects
//! onto the plane orthogonal to v, so `a(v)·v = 0`. The cutoff matrix
//! replaces the |v|⁻¹ blow-up at the origin by `η(|v|)/|v|` with η(x) = x³
//! near zero, which makes ā bounded while keeping ā ≼ a as quadratic forms.

use crate::density::Density;
use crate::error::{Error, Result};
use crate::quadrature::{self, QuadratureSpec, CONVERGENCE_REL_TOL};
use crate::vec3::{SymMat3, Vec3};

/// Smooth monotone cutoff with η(x) = x³ on [0, 1/2], η ≡ 1 on [1, ∞) and
/// 0 ≤ η' ≤ 2 everywhere.
///
/// On the bridge [1/2, 1] the derivative η' ramps from 3/4 up to `plateau`,
/// stays flat, and ramps down to 0, with cubic smoothstep ramps of width
/// `ramp` (in bridge coordinates t = 2x - 1). The ramp width is determined
/// by the plateau height through ∫ η' = 7/8, so the profile is fixed by one
/// parameter. The default plateau 15/8 keeps η' strictly below 2.
#[derive(Clone, Copy, Debug)]
pub struct CutoffProfile {
    pub plateau: f64,
    pub ramp: f64,
}

impl Default for CutoffProfile {
    fn default() -> Self {
        CutoffProfile::standard()
    }
}

impl CutoffProfile {
    /// Plateau 15/8, ramps of width 1/12: max η' = 1.875.
    pub fn standard() -> CutoffProfile {
        CutoffProfile::with_plateau(15.0 / 8.0).unwrap()
    }

    /// The bridge must fit its mass: feasible plateaus lie in (7/4, 2].
    pub fn with_plateau(plateau: f64) -> Result<CutoffProfile> {
        if !plateau.is_finite() || plateau <= 1.75 || plateau > 2.0 {
            return Err(Error::InvalidParams(format!(
                "cutoff plateau must lie in (7/4, 2], got {plateau}"
            )));
        }
        // From ∫₀¹ ψ dt = 7/4 with equal smoothstep ramps of width a:
        // a (3/8 - M/2) + M - M a/2 = 7/4  ⇒  a = (M - 7/4)/(M - 3/8).
        let ramp = (plateau - 1.75) / (plateau - 0.375);
        Ok(CutoffProfile { plateau, ramp })
    }
}

fn smoothstep(u: f64) -> f64 {
    u * u * (3.0 - 2.0 * u)
}

/// ∫₀ᵘ smoothstep = u³ - u⁴/2.
fn smoothstep_integral(u: f64) -> f64 {
    u * u * u * (1.0 - 0.5 * u)
}

/// The cutoff derivative η'(x).
pub fn eta_prime(x: f64, profile: &CutoffProfile) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x <= 0.5 {
        3.0 * x * x
    } else if x >= 1.0 {
        0.0
    } else {
        let t = 2.0 * x - 1.0;
        let a = profile.ramp;
        let m = profile.plateau;
        if t <= a {
            0.75 + (m - 0.75) * smoothstep(t / a)
        } else if t <= 1.0 - a {
            m
        } else {
            m * smoothstep((1.0 - t) / a)
        }
    }
}

/// The cutoff function η(x).
pub fn eta(x: f64, profile: &CutoffProfile) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x <= 0.5 {
        x * x * x
    } else if x >= 1.0 {
        1.0
    } else {
        let t = 2.0 * x - 1.0;
        let a = profile.ramp;
        let m = profile.plateau;
        // ∫₀ᵗ ψ, piecewise through ramp / plateau / ramp
        let acc = if t <= a {
            0.75 * t + (m - 0.75) * a * smoothstep_integral(t / a)
        } else {
            let ramp_up = 0.75 * a + (m - 0.75) * a * 0.5;
            if t <= 1.0 - a {
                ramp_up + m * (t - a)
            } else {
                ramp_up + m * (1.0 - 2.0 * a) + m * a * (0.5 - smoothstep_integral((1.0 - t) / a))
            }
        };
        0.125 + 0.5 * acc
    }
}

/// The Coulomb kernel a(v) = |v|⁻¹ (I - v̂⊗v̂).
pub fn landau_matrix(v: Vec3) -> Result<SymMat3> {
    let r2 = v.norm2();
    if r2 == 0.0 {
        return Err(Error::ZeroVelocity);
    }
    let r = r2.sqrt();
    let proj = SymMat3::identity().add(&SymMat3::outer(v).scale(-1.0 / r2));
    Ok(proj.scale(1.0 / r))
}

/// The cutoff kernel ā(v) = η(|v|)/|v| (I - v̂⊗v̂); zero matrix at v = 0
/// (continuous limit, since η ~ |v|³).
pub fn cutoff_matrix(v: Vec3, profile: &CutoffProfile) -> SymMat3 {
    let r2 = v.norm2();
    if r2 == 0.0 {
        return SymMat3::ZERO;
    }
    let r = r2.sqrt();
    let proj = SymMat3::identity().add(&SymMat3::outer(v).scale(-1.0 / r2));
    proj.scale(eta(r, profile) / r)
}

/// The double-divergence ∂_ij ā_ij(v) = -2 η'(|v|)/|v|², which is -6 on
/// 0 < |v| ≤ 1/2, bounded below by -16, and 0 outside the support of η'.
pub fn error_kernel(v: Vec3, profile: &CutoffProfile) -> Result<f64> {
    let r2 = v.norm2();
    if r2 == 0.0 {
        return Err(Error::ZeroVelocity);
    }
    Ok(-2.0 * eta_prime(r2.sqrt(), profile) / r2)
}

/// Contraction ⟨ā(z) u, u⟩ = η(|z|)/|z| (|u|² - (u·ẑ)²) without building
/// the matrix; the workhorse of Fisher-type integrands.
pub(crate) fn cutoff_form(z: Vec3, u: Vec3, profile: &CutoffProfile) -> f64 {
    let zz = z.norm2();
    if zz == 0.0 {
        return 0.0;
    }
    let uz = u.dot(z);
    let r = zz.sqrt();
    eta(r, profile) / r * (u.norm2() - uz * uz / zz)
}

/// Convolved diffusion matrix ã(v) = (ā ∗ f)(v) by 3D quadrature over the
/// support patches of `f`. Errors if the last two refinement levels
/// disagree by more than a 10% Frobenius fraction.
pub fn convolved_matrix(f: &Density, v: Vec3, spec: &QuadratureSpec) -> Result<SymMat3> {
    let profile = CutoffProfile::standard();
    let (levels, _) = convolved_levels(f, v, spec, &profile)?;
    let n = levels.len();
    let last = levels[n - 1];
    let prev = levels[n - 2];
    let diff = last.add(&prev.scale(-1.0)).frobenius();
    let scale = last.frobenius().max(f64::MIN_POSITIVE);
    if diff > CONVERGENCE_REL_TOL * scale {
        return Err(Error::Accuracy { previous: prev.frobenius(), latest: last.frobenius() });
    }
    Ok(last)
}

fn convolved_levels(
    f: &Density,
    v: Vec3,
    spec: &QuadratureSpec,
    profile: &CutoffProfile,
) -> Result<(Vec<SymMat3>, usize)> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.levels());
    for level in 0..spec.levels() {
        let nodes = quadrature::density_nodes(f, spec, level, 0.0);
        let sums = quadrature::par_chunk_sum_multi::<_, _, 6>(&nodes, |nd| {
            let m = cutoff_matrix(v - nd.point, profile);
            let s = nd.weight * nd.value;
            [m.xx * s, m.xy * s, m.xz * s, m.yy * s, m.yz * s, m.zz * s]
        });
        if sums.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFiniteSample { node: v });
        }
        out.push(SymMat3 {
            xx: sums[0],
            xy: sums[1],
            xz: sums[2],
            yy: sums[3],
            yz: sums[4],
            zz: sums[5],
        });
    }
    Ok((out, spec.levels()))
}

/// Eigenstructure of a symmetric matrix relative to a direction: the
/// Rayleigh quotient along the direction and the two eigenvalues of the
/// 2x2 block on its orthogonal complement.
#[derive(Clone, Copy, Debug)]
pub struct AnisoEigen {
    pub radial_eigenvalue: f64,
    pub tangential_eigenvalues: [f64; 2],
    pub direction: Vec3,
}

impl AnisoEigen {
    pub fn tangential_min(&self) -> f64 {
        self.tangential_eigenvalues[0].min(self.tangential_eigenvalues[1])
    }
}

pub fn aniso_eigen(m: &SymMat3, direction: Vec3) -> AnisoEigen {
    let d = direction.normalized();
    let (t1, t2) = d.orthonormal_complement();
    let radial = m.quad_form(d);
    let b11 = t1.dot(m.mul_vec(t1));
    let b22 = t2.dot(m.mul_vec(t2));
    let b12 = t1.dot(m.mul_vec(t2));
    let mean = 0.5 * (b11 + b22);
    let disc = (0.25 * (b11 - b22) * (b11 - b22) + b12 * b12).sqrt();
    AnisoEigen {
        radial_eigenvalue: radial,
        tangential_eigenvalues: [mean - disc, mean + disc],
        direction: d,
    }
}

/// Empirical version of the anisotropic lower-bound constant: the minimum
/// over sample points of min(radial·⟨v⟩³, tangential_min·⟨v⟩). Strictly
/// positive for positive densities.
pub fn estimate_c0(f: &Density, spec: &QuadratureSpec, sample_points: &[Vec3]) -> Result<f64> {
    if sample_points.is_empty() {
        return Err(Error::Domain("estimate_c0 needs at least one sample point".into()));
    }
    let mut min = f64::INFINITY;
    for &v in sample_points {
        if v.norm2() == 0.0 {
            return Err(Error::ZeroVelocity);
        }
        let m = convolved_matrix(f, v, spec)?;
        let ae = aniso_eigen(&m, v);
        let jb = v.bracket();
        let val = (ae.radial_eigenvalue * jb.powi(3)).min(ae.tangential_min() * jb);
        min = min.min(val);
    }
    Ok(min)
}
