//! Annuli, anisotropic ellipsoids, the flattening affine map, Vitali-style
//! coverings of each annulus, and the shell coercivity estimate.
//!
//! The natural geometry of the degenerate diffusion on the annulus
//! A_N = {N-1 < |v| ≤ N} is the ellipsoid with semi-axes (1, 1, 1/N),
//! short axis radial. A greedy maximal family whose (1/3)-scale images
//! under the dilation v ↦ Nv are pairwise disjoint yields a cover of A_N
//! by unit ellipsoids in which no point is covered more than 64 times.

use std::io::Write as IoWrite;

use rayon::prelude::*;

use crate::density::Density;
use crate::error::{Error, Result};
use crate::functionals;
use crate::kernels::{cutoff_form, CutoffProfile};
use crate::quadrature::{self, QuadratureSpec};
use crate::rng::SplitMix64;
use crate::vec3::Vec3;

/// Index N of the annulus A_N = {N-1 < |v| ≤ N}; the origin is assigned
/// to A_1 by convention.
pub fn annulus_index(v: Vec3) -> u32 {
    let r = v.norm();
    if r <= 1.0 {
        1
    } else {
        r.ceil() as u32
    }
}

/// Ellipsoid at `center` in shell N with semi-axes (λ, λ, λ/N), the short
/// axis parallel to the center direction. Membership is the exact
/// quadratic-form test N²((x-c)·ĉ)² + |P⊥(x-c)|² ≤ λ².
#[derive(Clone, Copy, Debug)]
pub struct Ellipsoid {
    pub center: Vec3,
    pub shell: u32,
    pub scale: f64,
}

impl Ellipsoid {
    pub fn unit(center: Vec3, shell: u32) -> Ellipsoid {
        Ellipsoid { center, shell, scale: 1.0 }
    }

    pub fn contains(&self, x: Vec3) -> bool {
        let n = f64::from(self.shell);
        let c_hat = self.center.normalized();
        let d = x - self.center;
        let radial = d.dot(c_hat);
        let perp2 = (d - c_hat * radial).norm2();
        n * n * radial * radial + perp2 <= self.scale * self.scale
    }

    /// Largest |x| over the ellipsoid (for containment audits).
    pub fn max_radius(&self) -> f64 {
        let r = self.center.norm();
        let n = f64::from(self.shell);
        let l = self.scale;
        // maximize (r + a/N)² + b² over a² + b² ≤ λ²
        let a_star = r * n / (n * n - 1.0);
        if n <= 1.0 || a_star >= l {
            r + l / n
        } else {
            ((r + a_star / n).powi(2) + l * l - a_star * a_star).sqrt()
        }
    }

    /// Smallest |x| over the ellipsoid.
    pub fn min_radius(&self) -> f64 {
        (self.center.norm() - self.scale / f64::from(self.shell)).max(0.0)
    }
}

/// The affine map that flattens the unit ellipsoid at v₀ onto the unit
/// ball: x ↦ T(x - v₀) with T stretching the radial direction by N and
/// fixing the tangential plane. The linear part has determinant N.
pub fn transform_t0(e: &Ellipsoid, x: Vec3) -> Vec3 {
    let n = f64::from(e.shell);
    let c_hat = e.center.normalized();
    let d = x - e.center;
    let radial = d.dot(c_hat);
    d + c_hat * ((n - 1.0) * radial)
}

/// Inverse of [`transform_t0`], mapping the unit ball onto the ellipsoid.
pub fn transform_t0_inv(e: &Ellipsoid, u: Vec3) -> Vec3 {
    let n = f64::from(e.shell);
    let c_hat = e.center.normalized();
    let radial = u.dot(c_hat);
    e.center + u + c_hat * ((1.0 / n - 1.0) * radial)
}

/// A covering of the annulus A_N by unit ellipsoids.
#[derive(Clone, Debug)]
pub struct Covering {
    pub shell: u32,
    pub centers: Vec<Vec3>,
}

impl Covering {
    pub fn count(&self) -> usize {
        self.centers.len()
    }

    pub fn ellipsoids(&self) -> impl Iterator<Item = Ellipsoid> + '_ {
        self.centers.iter().map(|&c| Ellipsoid::unit(c, self.shell))
    }

    /// Number of covering ellipsoids containing `x`.
    pub fn multiplicity(&self, x: Vec3) -> usize {
        let n = f64::from(self.shell);
        let n2 = n * n;
        self.centers
            .iter()
            .filter(|&&c| {
                let d = x - c;
                let dd = d.norm2();
                if dd > 1.0 {
                    return false;
                }
                let c_hat = c.normalized();
                let radial = d.dot(c_hat);
                let r2 = radial * radial;
                n2 * r2 + (dd - r2) <= 1.0
            })
            .count()
    }

    /// One center per record: shell index then the three coordinates.
    pub fn write_records<W: IoWrite>(&self, mut w: W) -> Result<()> {
        for c in &self.centers {
            writeln!(w, "{} {:.16e} {:.16e} {:.16e}", self.shell, c.x, c.y, c.z)?;
        }
        Ok(())
    }
}

/// Deterministic candidate lattice on A_N: radial layers of spacing
/// seed/N (a single layer at |v| = 1 for N = 1), each carrying polar rings
/// with tangential spacing ≈ seed.
fn candidate_centers(shell: u32, seed_spacing: f64) -> Vec<Vec3> {
    let n = f64::from(shell);
    let mut out = Vec::new();
    let radii: Vec<f64> = if shell == 1 {
        vec![1.0]
    } else {
        let layers = (n / seed_spacing).ceil() as usize;
        let dr = 1.0 / layers as f64;
        (0..layers).map(|j| (n - 1.0) + (j as f64 + 0.5) * dr).collect()
    };
    for r in radii {
        let rings = ((std::f64::consts::PI * r) / seed_spacing).ceil() as usize;
        let dth = std::f64::consts::PI / rings as f64;
        for i in 0..=rings {
            let theta = (i as f64) * dth;
            let ring_r = r * theta.sin();
            let count = ((std::f64::consts::TAU * ring_r) / seed_spacing).ceil().max(1.0) as usize;
            for k in 0..count {
                let phi = std::f64::consts::TAU * (k as f64 + 0.5 * (i % 2) as f64) / count as f64;
                out.push(Vec3::new(
                    ring_r * phi.cos(),
                    ring_r * phi.sin(),
                    r * theta.cos(),
                ));
            }
        }
    }
    out
}

/// Build a covering of A_N: generate the candidate lattice, sort it
/// lexicographically, and greedily keep centers whose (1/3)-radius images
/// under the dilation v ↦ Nv stay pairwise disjoint (mapped center
/// distances > 2/3). Coverage of A_N is then verified on 10⁵ deterministic
/// sample points; an uncovered point aborts the construction.
pub fn vitali_cover(shell: u32, seed_spacing: f64) -> Result<Covering> {
    if shell == 0 {
        return Err(Error::InvalidParams("shell index must be positive".into()));
    }
    if !seed_spacing.is_finite() || seed_spacing <= 0.0 || seed_spacing >= 1.0 {
        return Err(Error::InvalidParams("seed_spacing must lie in (0, 1)".into()));
    }
    let mut candidates = candidate_centers(shell, seed_spacing);
    candidates.sort_by(|a, b| {
        (a.x, a.y, a.z)
            .partial_cmp(&(b.x, b.y, b.z))
            .expect("finite coordinates")
    });

    // greedy selection with a cell hash on the separation scale
    let n = f64::from(shell);
    let sep = 2.0 / (3.0 * n);
    let sep2 = sep * sep;
    let cell = sep;
    let key = |v: Vec3| -> (i64, i64, i64) {
        (
            (v.x / cell).floor() as i64,
            (v.y / cell).floor() as i64,
            (v.z / cell).floor() as i64,
        )
    };
    let mut grid: std::collections::HashMap<(i64, i64, i64), Vec<Vec3>> =
        std::collections::HashMap::new();
    let mut kept: Vec<Vec3> = Vec::new();
    for cand in candidates {
        let (kx, ky, kz) = key(cand);
        let mut ok = true;
        'scan: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(cellv) = grid.get(&(kx + dx, ky + dy, kz + dz)) {
                        for &u in cellv {
                            if (u - cand).norm2() <= sep2 {
                                ok = false;
                                break 'scan;
                            }
                        }
                    }
                }
            }
        }
        if ok {
            grid.entry((kx, ky, kz)).or_default().push(cand);
            kept.push(cand);
        }
    }
    let cover = Covering { shell, centers: kept };

    // coverage verification
    let mut rng = SplitMix64::new(0x5eed_0000 + u64::from(shell));
    let samples: Vec<Vec3> = (0..100_000).map(|_| sample_annulus(&mut rng, shell)).collect();
    let uncovered = samples
        .par_iter()
        .find_first(|&&p| cover.multiplicity(p) == 0)
        .copied();
    if let Some(point) = uncovered {
        return Err(Error::Uncovered { shell, point });
    }
    Ok(cover)
}

/// Uniform sample of the annulus A_N (volume-uniform in radius cubed).
pub fn sample_annulus(rng: &mut SplitMix64, shell: u32) -> Vec3 {
    let n = f64::from(shell);
    let lo3 = (n - 1.0).powi(3);
    let hi3 = n * n * n;
    let r = (rng.range(lo3, hi3)).cbrt();
    rng.unit_vector() * r
}

/// Audit of a covering: sampled coverage fraction of A_N, the maximum
/// sampled multiplicity over A_N and over the covering ellipsoids
/// themselves, and exact containment of the union in the enlarged annulus
/// Ã_N = A_{N-1} ∪ A_N ∪ A_{N+1}.
#[derive(Clone, Copy, Debug)]
pub struct CoverAudit {
    pub coverage_fraction: f64,
    pub max_multiplicity: usize,
    pub inside_enlarged: bool,
    pub samples: usize,
}

pub fn audit_cover(cover: &Covering, samples: usize, seed: u64) -> CoverAudit {
    let mut rng = SplitMix64::new(seed);
    let shell = cover.shell;
    let annulus_pts: Vec<Vec3> = (0..samples).map(|_| sample_annulus(&mut rng, shell)).collect();
    let covered = annulus_pts.par_iter().filter(|&&p| cover.multiplicity(p) > 0).count();

    // multiplicity over the union: sample inside each ellipsoid
    let per_ellipsoid = (samples / cover.count().max(1)).clamp(4, 64);
    let mut union_pts: Vec<Vec3> = Vec::with_capacity(per_ellipsoid * cover.count());
    for e in cover.ellipsoids() {
        for _ in 0..per_ellipsoid {
            // rejection-free: pull back a uniform ball point
            let u = rng.unit_vector() * rng.next_f64().cbrt();
            union_pts.push(transform_t0_inv(&e, u));
        }
    }
    let max_mult_annulus = annulus_pts
        .par_iter()
        .map(|&p| cover.multiplicity(p))
        .max()
        .unwrap_or(0);
    let max_mult_union = union_pts
        .par_iter()
        .map(|&p| cover.multiplicity(p))
        .max()
        .unwrap_or(0);

    // exact radii bounds per ellipsoid
    let lo = f64::from(shell.saturating_sub(2)).max(0.0);
    let hi = f64::from(shell + 1);
    let inside = cover
        .ellipsoids()
        .all(|e| e.min_radius() >= lo - 1e-12 && e.max_radius() <= hi + 1e-12);

    CoverAudit {
        coverage_fraction: covered as f64 / samples as f64,
        max_multiplicity: max_mult_annulus.max(max_mult_union),
        inside_enlarged: inside,
        samples,
    }
}

/// Both sides of the per-shell coercivity estimate: on the enlarged
/// annulus Ã_N,
///
/// ```text
/// lhs = ∫_{Ã_N} ⟨ã ∇s, ∇s⟩ dv + (M₀/N) ∫_{Ã_N} s² dv,
/// rhs = N^{-5/3} (∫_{A_N} s⁶ dv)^{1/3},
/// ```
///
/// with s = 2√f.
#[derive(Clone, Copy, Debug)]
pub struct ShellEstimate {
    pub shell: u32,
    pub fisher_part: f64,
    pub mass_part: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl ShellEstimate {
    /// lhs/rhs, or None when the density vanishes on the shell.
    pub fn ratio(&self) -> Option<f64> {
        (self.rhs > 0.0).then(|| self.lhs / self.rhs)
    }
}

pub fn shell_estimate(
    f: &Density,
    shell: u32,
    spec: &QuadratureSpec,
    profile: &CutoffProfile,
) -> Result<ShellEstimate> {
    let mut v = shell_estimates(f, &[shell], spec, profile)?;
    Ok(v.remove(0))
}

/// Shell estimates for several shells in one grid pass (the convolution
/// against f is the expensive part and is shared).
pub fn shell_estimates(
    f: &Density,
    shells: &[u32],
    spec: &QuadratureSpec,
    profile: &CutoffProfile,
) -> Result<Vec<ShellEstimate>> {
    spec.validate()?;
    let m0 = functionals::moments(f, spec)?.mass;
    let max_shell = *shells.iter().max().unwrap_or(&1);

    let level = spec.levels() - 1;
    let nodes = quadrature::density_nodes(f, spec, level, 0.0);
    let conv: Vec<(Vec3, f64)> = nodes
        .iter()
        .filter(|nd| nd.value > 0.0)
        .map(|nd| (nd.point, nd.value * nd.weight))
        .collect();

    // per-annulus accumulators: fisher density, s², s⁶ (s = 2√f)
    let bins = (max_shell + 2) as usize;
    let per_node: Vec<(usize, f64, f64, f64)> = nodes
        .par_iter()
        .map(|nd| {
            let k = annulus_index(nd.point) as usize;
            if k >= bins || nd.value <= crate::density::POSITIVITY_FLOOR {
                return (bins, 0.0, 0.0, 0.0);
            }
            let glv = nd.gradient * (1.0 / nd.value);
            let mut fisher = 0.0;
            // only shells that can contribute need the convolution
            if k <= (max_shell + 1) as usize {
                for &(w, fw) in &conv {
                    fisher += cutoff_form(nd.point - w, glv, profile) * fw;
                }
                fisher *= nd.value * nd.weight;
            }
            let s2 = 4.0 * nd.value * nd.weight;
            let s6 = 64.0 * nd.value.powi(3) * nd.weight;
            (k, fisher, s2, s6)
        })
        .collect();

    let mut fisher_bins = vec![0.0; bins + 1];
    let mut s2_bins = vec![0.0; bins + 1];
    let mut s6_bins = vec![0.0; bins + 1];
    for (k, fi, s2, s6) in per_node {
        fisher_bins[k] += fi;
        s2_bins[k] += s2;
        s6_bins[k] += s6;
    }

    let mut out = Vec::with_capacity(shells.len());
    for &shell in shells {
        let n = shell as usize;
        let enlarged = |bins_arr: &[f64]| -> f64 {
            let mut t = 0.0;
            for k in [n.saturating_sub(1), n, n + 1] {
                if k >= 1 && k < bins_arr.len() {
                    t += bins_arr[k];
                }
            }
            t
        };
        // A_{N-1} is empty for N = 1
        let fisher_part = if shell == 1 {
            fisher_bins[1] + fisher_bins[2]
        } else {
            enlarged(&fisher_bins)
        };
        let mass_part_raw = if shell == 1 { s2_bins[1] + s2_bins[2] } else { enlarged(&s2_bins) };
        let nf = f64::from(shell);
        let mass_part = m0 / nf * mass_part_raw;
        let rhs = nf.powf(-5.0 / 3.0) * s6_bins.get(n).copied().unwrap_or(0.0).powf(1.0 / 3.0);
        out.push(ShellEstimate {
            shell,
            fisher_part,
            mass_part,
            lhs: fisher_part + mass_part,
            rhs,
        });
    }
    Ok(out)
}

/// Per-ellipsoid version of the estimate, restricted to one covering
/// ellipsoid F₀:
/// ∫_{F₀} ⟨ã ∇s, ∇s⟩ + (M₀/N) ∫_{F₀} s² vs N^{-5/3} (∫_{F₀} s⁶)^{1/3}.
pub fn ellipsoid_estimate(
    f: &Density,
    e: &Ellipsoid,
    spec: &QuadratureSpec,
    profile: &CutoffProfile,
    m0: f64,
) -> Result<(f64, f64)> {
    spec.validate()?;
    let level = spec.levels() - 1;
    let nodes = quadrature::density_nodes(f, spec, level, 0.0);
    let conv: Vec<(Vec3, f64)> = nodes
        .iter()
        .filter(|nd| nd.value > 0.0)
        .map(|nd| (nd.point, nd.value * nd.weight))
        .collect();

    // grid restricted to the ellipsoid via its flattening map: integrate
    // over the unit ball in u and pull back (Jacobian 1/N)
    let n_axis = spec.grid_nodes(level);
    let (unit, w_unit) = quadrature::ball_grid(1.0, n_axis, 0.0);
    let jac = w_unit / f64::from(e.shell);
    let sums = unit
        .par_chunks(quadrature::CHUNK)
        .map(|chunk| {
            let mut fisher = 0.0;
            let mut s2 = 0.0;
            let mut s6 = 0.0;
            for &u in chunk {
                let v = transform_t0_inv(e, u);
                let val = f.evaluate(v);
                if val <= crate::density::POSITIVITY_FLOOR {
                    continue;
                }
                let glv = f.log_gradient(v).unwrap_or(Vec3::ZERO);
                let mut acc = 0.0;
                for &(w, fw) in &conv {
                    acc += cutoff_form(v - w, glv, profile) * fw;
                }
                fisher += val * acc;
                s2 += 4.0 * val;
                s6 += 64.0 * val * val * val;
            }
            [fisher, s2, s6]
        })
        .collect::<Vec<_>>();
    let total: [f64; 3] =
        std::array::from_fn(|k| sums.iter().map(|s| s[k]).sum::<f64>() * jac);
    let nf = f64::from(e.shell);
    let lhs = total[0] + m0 / nf * total[1];
    let rhs = nf.powf(-5.0 / 3.0) * total[2].powf(1.0 / 3.0);
    Ok((lhs, rhs))
}
