//! Closed-form velocity densities with analytic value, gradient and
//! log-gradient.
//!
//! Every density used by the laboratory is one of a handful of closed-form
//! shapes, so gradients come from the chain rule instead of differencing.
//! The `max(f, g)` construction keeps track of which branch attains the max;
//! integration code asks the density for its patches (a global ball and,
//! for scaled bumps, the tiny support ellipsoid) so that quadrature grids
//! can resolve supports that are far below the global grid spacing.

use crate::vec3::Vec3;

/// Values below this floor are treated as vacuum: log-gradients are not
/// evaluated there and entropy integrands are set to zero.
pub const POSITIVITY_FLOOR: f64 = 1e-300;

/// Normalization of the radial bump phi(v) = ALPHA0 exp(-1/(1-|v|^2)) on B_1,
/// computed by 1D radial midpoint quadrature with 1e6 nodes (unit mass).
pub const ALPHA0: f64 = 2.267116739608378;

/// beta0 = ∫ phi |log phi| dv, same 1D radial rule as ALPHA0.
pub const BETA0: f64 = 0.8437737296733666;

/// The unit radial bump, mass one, supported on the closed unit ball.
pub fn phi(v: Vec3) -> f64 {
    let r2 = v.norm2();
    if r2 >= 1.0 {
        0.0
    } else {
        ALPHA0 * (-1.0 / (1.0 - r2)).exp()
    }
}

/// ∇ log phi = -2 v / (1 - |v|²)², defined for |v| < 1.
pub fn phi_log_gradient(v: Vec3) -> Vec3 {
    let t = 1.0 - v.norm2();
    v * (-2.0 / (t * t))
}

#[derive(Clone, Debug)]
pub enum Density {
    /// mass × (2πT)^{-3/2} exp(-|v-mean|²/(2T)).
    Maxwellian { mean: Vec3, temperature: f64, mass: f64 },
    /// The unit radial bump phi.
    Bump,
    /// g(v) = c B³N phi(BN(v₁-N), Bv₂, Bv₃) with c = 1/(BN⁵); the scaled
    /// bump of the max(f, g) family, supported on the ellipsoid at N e₁
    /// with semi-axes (1/(BN), 1/B, 1/B).
    ScaledBump { b: f64, shell: u32 },
    /// Pointwise max; the first argument wins ties.
    MaxOfTwo(Box<Density>, Box<Density>),
    /// Nonnegative combination Σ wᵢ fᵢ.
    Mixture(Vec<(f64, Density)>),
}

impl Density {
    pub fn standard_maxwellian() -> Density {
        Density::Maxwellian { mean: Vec3::ZERO, temperature: 1.0, mass: 1.0 }
    }

    pub fn evaluate(&self, v: Vec3) -> f64 {
        match self {
            Density::Maxwellian { mean, temperature, mass } => {
                let d2 = (v - *mean).norm2();
                let norm = (2.0 * std::f64::consts::PI * temperature).powf(1.5);
                mass / norm * (-d2 / (2.0 * temperature)).exp()
            }
            Density::Bump => phi(v),
            Density::ScaledBump { b, shell } => {
                let amp = Self::bump_amplitude(*b, *shell);
                amp * phi(Self::bump_local(*b, *shell, v))
            }
            Density::MaxOfTwo(a, b) => a.evaluate(v).max(b.evaluate(v)),
            Density::Mixture(parts) => {
                parts.iter().map(|(w, d)| w * d.evaluate(v)).sum()
            }
        }
    }

    pub fn gradient(&self, v: Vec3) -> Vec3 {
        match self {
            Density::Maxwellian { mean, temperature, .. } => {
                (v - *mean) * (-self.evaluate(v) / temperature)
            }
            Density::Bump => {
                let val = phi(v);
                if val <= POSITIVITY_FLOOR {
                    Vec3::ZERO
                } else {
                    phi_log_gradient(v) * val
                }
            }
            Density::ScaledBump { b, shell } => {
                let val = self.evaluate(v);
                if val <= POSITIVITY_FLOOR {
                    Vec3::ZERO
                } else {
                    let local = Self::bump_local(*b, *shell, v);
                    let u = phi_log_gradient(local);
                    let bn = b * f64::from(*shell);
                    Vec3::new(u.x * bn, u.y * b, u.z * b) * val
                }
            }
            Density::MaxOfTwo(a, b) => {
                if a.evaluate(v) >= b.evaluate(v) {
                    a.gradient(v)
                } else {
                    b.gradient(v)
                }
            }
            Density::Mixture(parts) => {
                let mut g = Vec3::ZERO;
                for (w, d) in parts {
                    g += d.gradient(v) * *w;
                }
                g
            }
        }
    }

    /// ∇ log f = ∇f / f where the density is above the positivity floor.
    pub fn log_gradient(&self, v: Vec3) -> Option<Vec3> {
        match self {
            Density::Maxwellian { mean, temperature, .. } => {
                Some((v - *mean) * (-1.0 / temperature))
            }
            Density::Bump => {
                if phi(v) <= POSITIVITY_FLOOR {
                    None
                } else {
                    Some(phi_log_gradient(v))
                }
            }
            Density::ScaledBump { b, shell } => {
                if self.evaluate(v) <= POSITIVITY_FLOOR {
                    None
                } else {
                    let u = phi_log_gradient(Self::bump_local(*b, *shell, v));
                    let bn = b * f64::from(*shell);
                    Some(Vec3::new(u.x * bn, u.y * b, u.z * b))
                }
            }
            Density::MaxOfTwo(a, b) => {
                if a.evaluate(v) >= b.evaluate(v) {
                    a.log_gradient(v)
                } else {
                    b.log_gradient(v)
                }
            }
            Density::Mixture(_) => {
                let val = self.evaluate(v);
                if val <= POSITIVITY_FLOOR {
                    None
                } else {
                    Some(self.gradient(v) * (1.0 / val))
                }
            }
        }
    }

    /// Gradient of s = 2√f by the chain rule: ∇s = ∇f/√f.
    pub fn sqrt_gradient(&self, v: Vec3) -> Option<Vec3> {
        let val = self.evaluate(v);
        if val <= POSITIVITY_FLOOR {
            None
        } else {
            Some(self.gradient(v) * (1.0 / val.sqrt()))
        }
    }

    /// Radius of a ball outside which the density is negligible.
    pub fn support_radius_hint(&self) -> f64 {
        match self {
            Density::Maxwellian { mean, temperature, .. } => {
                mean.norm() + 12.0 * temperature.sqrt()
            }
            Density::Bump => 1.0,
            Density::ScaledBump { b, shell } => f64::from(*shell) + 2.0 / b,
            Density::MaxOfTwo(a, b) => {
                a.support_radius_hint().max(b.support_radius_hint())
            }
            Density::Mixture(parts) => parts
                .iter()
                .map(|(_, d)| d.support_radius_hint())
                .fold(0.0, f64::max),
        }
    }

    fn bump_amplitude(b: f64, shell: u32) -> f64 {
        // c B³ N with c = 1/(B N⁵), i.e. B²/N⁴.
        let n = f64::from(shell);
        b * b / (n * n * n * n)
    }

    fn bump_local(b: f64, shell: u32, v: Vec3) -> Vec3 {
        let n = f64::from(shell);
        Vec3::new(b * n * (v.x - n), b * v.y, b * v.z)
    }

    /// Integration patches with branch masks (see [`PatchSpec`]).
    pub(crate) fn patches(&self) -> Vec<PatchSpec<'_>> {
        match self {
            Density::MaxOfTwo(a, b) => {
                let mut out = Vec::new();
                for p in a.patches() {
                    out.push(PatchSpec { rival: Some((b, true)), ..p });
                }
                for p in b.patches() {
                    out.push(PatchSpec { rival: Some((a, false)), ..p });
                }
                out
            }
            _ => vec![PatchSpec { kind: self.patch_kind(), component: self, rival: None }],
        }
    }

    fn patch_kind(&self) -> PatchKind {
        match self {
            Density::Bump => PatchKind::Scaled {
                center: Vec3::ZERO,
                scale: Vec3::new(1.0, 1.0, 1.0),
            },
            Density::ScaledBump { b, shell } => {
                let n = f64::from(*shell);
                PatchKind::Scaled {
                    center: Vec3::new(n, 0.0, 0.0),
                    scale: Vec3::new(1.0 / (b * n), 1.0 / b, 1.0 / b),
                }
            }
            _ => PatchKind::Global,
        }
    }
}

/// Where a patch lives: the global truncation ball, or the image of the
/// unit ball under u ↦ center + scale .* u (a support ellipsoid).
#[derive(Clone, Copy, Debug)]
pub(crate) enum PatchKind {
    Global,
    Scaled { center: Vec3, scale: Vec3 },
}

/// One integration patch of a density. `component` supplies values and
/// gradients on the patch; for max-of-two densities `rival` is the other
/// branch, and a node belongs to the patch when the component wins
/// (ties go to the first branch: `tie_wins` is true for it).
#[derive(Clone, Copy)]
pub(crate) struct PatchSpec<'a> {
    pub kind: PatchKind,
    pub component: &'a Density,
    pub rival: Option<(&'a Density, bool)>,
}

impl PatchSpec<'_> {
    /// Branch value and gradient at `v`, or None if the rival branch wins.
    pub fn branch(&self, v: Vec3) -> Option<(f64, Vec3)> {
        let val = self.component.evaluate(v);
        if let Some((rival, tie_wins)) = self.rival {
            let other = rival.evaluate(v);
            let keep = if tie_wins { val >= other } else { val > other };
            if !keep {
                return None;
            }
        }
        Some((val, self.component.gradient(v)))
    }
}
