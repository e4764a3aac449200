//! Deterministic 3D and 6D numerical integration.
//!
//! All rules are midpoint tensor-product grids on the truncation ball's
//! bounding cube, refined by doubling the node count per axis. The
//! integrable 1/|v-w| singularity of 6D kernels is handled by splitting the
//! inner integral into a small ball around the outer node — integrated in
//! spherical coordinates where the r² Jacobian cancels the singularity —
//! and the exterior on a grid whose nodes are offset by a quarter cell so
//! no inner node can coincide with an outer node.
//!
//! Reductions are fixed-shape pairwise trees over fixed-size chunks, so a
//! result never depends on how many worker threads computed it.

use rayon::prelude::*;

use crate::density::{Density, PatchKind};
use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Chunk size for parallel reductions. Fixed so that the reduction tree is
/// identical for every thread count.
pub(crate) const CHUNK: usize = 4096;

/// Relative disagreement between the last two refinement levels above which
/// matrix-valued convolutions report an accuracy error.
pub(crate) const CONVERGENCE_REL_TOL: f64 = 0.1;

/// Truncation, resolution, singularity treatment and support-clamp
/// parameters for the integration rules.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureSpec {
    /// The integration domain is the ball of this radius.
    pub truncation_radius: f64,
    /// Nodes per axis of the finest refinement level.
    pub nodes_per_axis: usize,
    /// Radius of the local spherical rule around the singular point.
    pub singular_ball_radius: f64,
    /// Radial nodes of the local spherical rule (finest level).
    pub radial_nodes: usize,
    /// Direction count of the local spherical rule (finest level).
    pub sphere_nodes: usize,
    /// Bump supports are clamped to |u| ≤ 1 - δ in normalized coordinates.
    pub support_clamp: f64,
    /// Number of refinement levels; each level doubles the node counts of
    /// the previous one and the finest level is `nodes_per_axis`.
    pub refinement_levels: usize,
}

impl QuadratureSpec {
    pub fn new(
        truncation_radius: f64,
        nodes_per_axis: usize,
        singular_ball_radius: f64,
        radial_nodes: usize,
        sphere_nodes: usize,
        support_clamp: f64,
        refinement_levels: usize,
    ) -> Result<QuadratureSpec> {
        let spec = QuadratureSpec {
            truncation_radius,
            nodes_per_axis,
            singular_ball_radius,
            radial_nodes,
            sphere_nodes,
            support_clamp,
            refinement_levels,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.truncation_radius.is_finite() || self.truncation_radius <= 0.0 {
            return Err(Error::InvalidSpec("truncation_radius must be positive".into()));
        }
        if self.singular_ball_radius >= self.truncation_radius {
            return Err(Error::InvalidSpec(
                "singular_ball_radius must be smaller than truncation_radius".into(),
            ));
        }
        if !self.support_clamp.is_finite() || self.support_clamp <= 0.0 || self.support_clamp > 0.1 {
            return Err(Error::InvalidSpec("support_clamp must lie in (0, 0.1]".into()));
        }
        if self.refinement_levels < 2 {
            return Err(Error::InvalidSpec("refinement_levels must be at least 2".into()));
        }
        let shift = self.refinement_levels - 1;
        let base = self.nodes_per_axis >> shift;
        if base < 2 || (base << shift) != self.nodes_per_axis {
            return Err(Error::InvalidSpec(format!(
                "nodes_per_axis ({}) must be divisible by 2^{} with quotient >= 2",
                self.nodes_per_axis, shift
            )));
        }
        if self.radial_nodes == 0 || self.sphere_nodes == 0 {
            return Err(Error::InvalidSpec("local rule needs at least one node".into()));
        }
        Ok(())
    }

    /// Default rule for Maxwellian-dominated integrands: the tail mass
    /// beyond radius 12 is below 1e-30.
    pub fn default_maxwellian() -> QuadratureSpec {
        QuadratureSpec {
            truncation_radius: 12.0,
            nodes_per_axis: 64,
            singular_ball_radius: 0.5,
            radial_nodes: 16,
            sphere_nodes: 32,
            support_clamp: 1e-3,
            refinement_levels: 2,
        }
    }

    pub fn with_truncation(&self, radius: f64) -> QuadratureSpec {
        QuadratureSpec { truncation_radius: radius, ..self.clone() }
    }

    pub fn levels(&self) -> usize {
        self.refinement_levels
    }

    /// Grid nodes per axis at refinement `level` (0 = coarsest).
    pub fn grid_nodes(&self, level: usize) -> usize {
        self.nodes_per_axis >> (self.refinement_levels - 1 - level)
    }

    pub fn radial_nodes_at(&self, level: usize) -> usize {
        (self.radial_nodes >> (self.refinement_levels - 1 - level)).max(1)
    }

    pub fn sphere_nodes_at(&self, level: usize) -> usize {
        (self.sphere_nodes >> (self.refinement_levels - 1 - level)).max(6)
    }
}

/// Value of an integral together with the difference of the last two
/// refinement levels.
#[derive(Clone, Copy, Debug)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub levels_used: usize,
}

impl IntegralResult {
    pub(crate) fn from_levels(values: &[f64]) -> IntegralResult {
        let n = values.len();
        let value = values[n - 1];
        let error_estimate = if n >= 2 { (value - values[n - 2]).abs() } else { 0.0 };
        IntegralResult { value, error_estimate, levels_used: n }
    }
}

/// Fixed-shape pairwise tree sum: the summation order depends only on the
/// slice length.
pub fn tree_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            tree_sum(&xs[..mid]) + tree_sum(&xs[mid..])
        }
    }
}

/// Parallel sum over fixed chunks with a pairwise combine tree.
pub(crate) fn par_chunk_sum<T, F>(items: &[T], per_item: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync,
{
    let partials: Vec<f64> = items
        .par_chunks(CHUNK)
        .map(|chunk| {
            let vals: Vec<f64> = chunk.iter().map(&per_item).collect();
            tree_sum(&vals)
        })
        .collect();
    tree_sum(&partials)
}

/// As `par_chunk_sum` but with `K` accumulated channels.
pub(crate) fn par_chunk_sum_multi<T, F, const K: usize>(items: &[T], per_item: F) -> [f64; K]
where
    T: Sync,
    F: Fn(&T) -> [f64; K] + Sync,
{
    let partials: Vec<[f64; K]> = items
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut cols: [Vec<f64>; K] = std::array::from_fn(|_| Vec::with_capacity(chunk.len()));
            for it in chunk {
                let vals = per_item(it);
                for (c, v) in cols.iter_mut().zip(vals) {
                    c.push(v);
                }
            }
            std::array::from_fn(|k| tree_sum(&cols[k]))
        })
        .collect();
    std::array::from_fn(|k| {
        let col: Vec<f64> = partials.iter().map(|p| p[k]).collect();
        tree_sum(&col)
    })
}

/// Midpoint nodes of the cube [-R, R]³ restricted to the ball of radius R,
/// shifted by `offset` cells (0 for the primary grid, 1/4 for the staggered
/// inner grid of 6D rules). Returns the nodes and the cell weight h³.
pub(crate) fn ball_grid(radius: f64, n: usize, offset: f64) -> (Vec<Vec3>, f64) {
    let h = 2.0 * radius / n as f64;
    let r2 = radius * radius;
    let coord = |i: usize| -radius + (i as f64 + 0.5 + offset) * h;
    let mut nodes = Vec::with_capacity(n * n * n / 2 + n * n);
    for i in 0..n {
        let x = coord(i);
        for j in 0..n {
            let y = coord(j);
            let xy2 = x * x + y * y;
            if xy2 > r2 {
                continue;
            }
            for k in 0..n {
                let z = coord(k);
                if xy2 + z * z <= r2 {
                    nodes.push(Vec3::new(x, y, z));
                }
            }
        }
    }
    (nodes, h * h * h)
}

/// Deterministic, nearly uniform directions on the unit sphere
/// (Fibonacci lattice). Equal weights 4π/n.
pub(crate) fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = 0.6180339887498949_f64;
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let phi = std::f64::consts::TAU * ((k as f64 * golden) % 1.0);
            let r = (1.0 - z * z).max(0.0).sqrt();
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Radial midpoint nodes on (0, radius].
pub(crate) fn radial_midpoints(radius: f64, n: usize) -> Vec<f64> {
    let dr = radius / n as f64;
    (0..n).map(|i| (i as f64 + 0.5) * dr).collect()
}

fn find_non_finite<F: Fn(Vec3) -> f64>(nodes: &[Vec3], f: &F) -> Error {
    for &v in nodes {
        if !f(v).is_finite() {
            return Error::NonFiniteSample { node: v };
        }
    }
    // the chunk sum overflowed without a single bad node
    Error::Accuracy { previous: f64::INFINITY, latest: f64::INFINITY }
}

/// Midpoint rule over the truncation ball with refinement-based error
/// estimate. Second-order accurate for piecewise-smooth integrands.
pub fn integrate3<F>(f: F, spec: &QuadratureSpec) -> Result<IntegralResult>
where
    F: Fn(Vec3) -> f64 + Sync,
{
    spec.validate()?;
    let mut values = Vec::with_capacity(spec.levels());
    for level in 0..spec.levels() {
        let (nodes, w) = ball_grid(spec.truncation_radius, spec.grid_nodes(level), 0.0);
        let sum = par_chunk_sum(&nodes, |&v| f(v));
        if !sum.is_finite() {
            return Err(find_non_finite(&nodes, &f));
        }
        values.push(sum * w);
    }
    Ok(IntegralResult::from_levels(&values))
}

/// 6D rule for kernels of the form smooth(v, w) / |v - w|.
///
/// The outer integral runs on the primary ball grid. For each outer node v
/// the inner integral splits into the ball B_r(v) in spherical coordinates
/// centered at v — where the r² Jacobian cancels the singularity — and the
/// exterior on the quarter-cell-offset grid with nodes inside B_r(v)
/// excluded.
pub fn integrate6_singular<K>(kernel: K, spec: &QuadratureSpec) -> Result<IntegralResult>
where
    K: Fn(Vec3, Vec3) -> f64 + Sync,
{
    spec.validate()?;
    let r_loc = spec.singular_ball_radius;
    let mut values = Vec::with_capacity(spec.levels());
    for level in 0..spec.levels() {
        let n = spec.grid_nodes(level);
        let (outer, w_out) = ball_grid(spec.truncation_radius, n, 0.0);
        let (inner, w_in) = ball_grid(spec.truncation_radius, n, 0.25);
        let dirs = fibonacci_sphere(spec.sphere_nodes_at(level));
        let radii = radial_midpoints(r_loc, spec.radial_nodes_at(level));
        let dr = r_loc / spec.radial_nodes_at(level) as f64;
        let dir_w = 4.0 * std::f64::consts::PI / dirs.len() as f64;
        let r_loc2 = r_loc * r_loc;

        let sum = par_chunk_sum(&outer, |&v| {
            let mut ext = 0.0;
            for &w in &inner {
                if (w - v).norm2() > r_loc2 {
                    ext += kernel(v, w);
                }
            }
            let mut local = 0.0;
            for &rho in &radii {
                for &om in &dirs {
                    local += kernel(v, v + om * rho) * rho * rho;
                }
            }
            ext * w_in + local * dr * dir_w
        });
        if !sum.is_finite() {
            return Err(find_non_finite(&outer, &|v| {
                inner.iter().map(|&w| kernel(v, w)).sum()
            }));
        }
        values.push(sum * w_out);
    }
    Ok(IntegralResult::from_levels(&values))
}

/// One evaluated quadrature node of a density patch.
#[derive(Clone, Copy, Debug)]
pub(crate) struct DensityNode {
    pub point: Vec3,
    pub weight: f64,
    pub value: f64,
    pub gradient: Vec3,
}

/// Quadrature nodes adapted to the support structure of a density: the
/// global truncation ball plus, for scaled bumps, a grid on the support
/// ellipsoid in normalized coordinates (clamped to |u| ≤ 1 - δ). Nodes on
/// max-branches that lose to the rival branch are dropped, as are nodes
/// where the density vanishes.
pub(crate) fn density_nodes(
    d: &Density,
    spec: &QuadratureSpec,
    level: usize,
    offset: f64,
) -> Vec<DensityNode> {
    let n = spec.grid_nodes(level);
    let mut out = Vec::new();
    for patch in d.patches() {
        match patch.kind {
            PatchKind::Global => {
                let (nodes, w) = ball_grid(spec.truncation_radius, n, offset);
                collect_patch(&mut out, &nodes, w, &patch);
            }
            PatchKind::Scaled { center, scale } => {
                let (unit, w_unit) = ball_grid(1.0, n, offset);
                let keep = 1.0 - spec.support_clamp;
                let jac = scale.x * scale.y * scale.z;
                let nodes: Vec<Vec3> = unit
                    .iter()
                    .filter(|u| u.norm() <= keep)
                    .map(|u| center + Vec3::new(u.x * scale.x, u.y * scale.y, u.z * scale.z))
                    .collect();
                collect_patch(&mut out, &nodes, w_unit * jac, &patch);
            }
        }
    }
    out
}

fn collect_patch(
    out: &mut Vec<DensityNode>,
    nodes: &[Vec3],
    weight: f64,
    patch: &crate::density::PatchSpec<'_>,
) {
    let evaluated: Vec<Option<DensityNode>> = nodes
        .par_iter()
        .map(|&p| {
            patch.branch(p).and_then(|(value, gradient)| {
                (value > 0.0).then_some(DensityNode { point: p, weight, value, gradient })
            })
        })
        .collect();
    out.extend(evaluated.into_iter().flatten());
}

/// Weighted Lebesgue norm ‖f‖_{L^p_{-q}} = (∫ |f|^p ⟨v⟩^{-pq} dv)^{1/p}.
pub fn weighted_norm(f: &Density, p: f64, q: f64, spec: &QuadratureSpec) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::Domain(format!("weighted norm needs p >= 1, got {p}")));
    }
    spec.validate()?;
    let mut last = 0.0;
    for level in 0..spec.levels() {
        let nodes = density_nodes(f, spec, level, 0.0);
        let sum = par_chunk_sum(&nodes, |nd| {
            nd.weight * nd.value.powf(p) * nd.point.bracket().powf(-p * q)
        });
        if !sum.is_finite() {
            return Err(Error::Accuracy { previous: last, latest: sum });
        }
        last = sum;
    }
    Ok(last.powf(1.0 / p))
}
