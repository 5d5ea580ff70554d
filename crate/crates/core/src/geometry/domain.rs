//! Layered partitions of a box by graph interfaces `x3 = phi_k(x1, x2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance of the regularity test.
pub const TOL_REG: f64 = 1e-3;
/// Default number of samples per axis for regularity checks and volume quadrature.
pub const DEFAULT_REG_GRID: usize = 200;

/// A scalar function over the horizontal plane.
pub trait GraphFunction: Sync {
    fn value(&self, x: f64, y: f64) -> f64;

    /// Gradient `(d/dx1, d/dx2)`. The default uses fourth-order central
    /// differences, for functions without an analytic derivative.
    fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let h = 1e-4;
        let d = |dx: f64, dy: f64| {
            (-self.value(x + 2.0 * dx, y + 2.0 * dy) + 8.0 * self.value(x + dx, y + dy)
                - 8.0 * self.value(x - dx, y - dy)
                + self.value(x - 2.0 * dx, y - 2.0 * dy))
                / (12.0 * h)
        };
        [d(h, 0.0), d(0.0, h)]
    }
}

/// Wraps a closure as a [`GraphFunction`] with finite-difference gradient.
pub struct FnGraph<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Sync> GraphFunction for FnGraph<F> {
    fn value(&self, x: f64, y: f64) -> f64 {
        (self.0)(x, y)
    }
}

/// Interface shapes that can be written in an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InterfaceShape {
    /// `x3 = level`
    Flat { level: f64 },
    /// `x3 = level + amplitude * sin(2 pi (kx x1 + ky x2))`
    Wave {
        level: f64,
        amplitude: f64,
        #[serde(default)]
        kx: f64,
        #[serde(default)]
        ky: f64,
    },
}

impl InterfaceShape {
    /// Nominal height of the interface.
    pub fn level(&self) -> f64 {
        match *self {
            InterfaceShape::Flat { level } | InterfaceShape::Wave { level, .. } => level,
        }
    }
}

impl GraphFunction for InterfaceShape {
    fn value(&self, x: f64, y: f64) -> f64 {
        match *self {
            InterfaceShape::Flat { level } => level,
            InterfaceShape::Wave { level, amplitude, kx, ky } => {
                level + amplitude * (2.0 * std::f64::consts::PI * (kx * x + ky * y)).sin()
            }
        }
    }

    fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        match *self {
            InterfaceShape::Flat { .. } => [0.0, 0.0],
            InterfaceShape::Wave { amplitude, kx, ky, .. } => {
                let tau = 2.0 * std::f64::consts::PI;
                let c = amplitude * tau * (tau * (kx * x + ky * y)).cos();
                [c * kx, c * ky]
            }
        }
    }
}

/// Deviation of an interface from its mean level, i.e. the graph expressed
/// in coordinates where the interface sits at height zero.
struct Deviation<'a> {
    shape: &'a InterfaceShape,
    mean: f64,
}

impl GraphFunction for Deviation<'_> {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.shape.value(x, y) - self.mean
    }
    fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        self.shape.gradient(x, y)
    }
}

/// Open rectangular patch of the top face `x3 = a3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaRegion {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl SigmaRegion {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x > self.x[0] && x < self.x[1] && y > self.y[0] && y < self.y[1]
    }

    pub fn area(&self) -> f64 {
        (self.x[1] - self.x[0]).max(0.0) * (self.y[1] - self.y[0]).max(0.0)
    }
}

/// Input of [`build_layered_partition`]; also the geometry section of the
/// experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(rename = "box")]
    pub box_dims: [f64; 3],
    pub r0: f64,
    #[serde(default)]
    pub interfaces: Vec<InterfaceShape>,
    pub sigma: SigmaRegion,
    #[serde(rename = "L")]
    pub l_const: f64,
    pub alpha: f64,
    #[serde(rename = "A")]
    pub volume_bound: f64,
    #[serde(default)]
    pub regularity_grid: Option<usize>,
}

/// The D0 slab glued on top of the boundary patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabExtension {
    pub footprint: SigmaRegion,
    pub thickness: f64,
}

impl SlabExtension {
    pub fn volume(&self) -> f64 {
        self.footprint.area() * self.thickness
    }
}

/// A validated layered partition of the box `[0,a1]x[0,a2]x[0,a3]`.
///
/// Subdomain `D_1` is the top layer (it carries the patch `sigma`), `D_N` the
/// bottom one. Interface `k` (1-based) separates `D_k` above from `D_{k+1}`
/// below.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedDomain {
    pub r0: f64,
    pub box_dims: [f64; 3],
    pub interfaces: Vec<InterfaceShape>,
    pub sigma: SigmaRegion,
    pub l_const: f64,
    pub alpha: f64,
    pub volume_bound: f64,
    /// Quadrature volumes `|D_j|`, `j = 1..N` (index 0 here is `D_1`).
    pub volumes: Vec<f64>,
    /// Mean height of each interface over the footprint.
    pub interface_means: Vec<f64>,
    pub regularity: Vec<RegularityReport>,
    pub extension: Option<SlabExtension>,
}

impl PartitionedDomain {
    /// Number of subdomains `N`.
    pub fn n_sub(&self) -> usize {
        self.interfaces.len() + 1
    }

    /// Subdomain label of a point: `1 + #{k : x3 <= phi_k(x')}` with ties
    /// (within `1e-12 r0`) going to the layer below. Points above the box top
    /// are labeled 0 when the D0 extension is present.
    pub fn label_of(&self, x: f64, y: f64, z: f64) -> usize {
        if self.extension.is_some() && z > self.box_dims[2] + 1e-12 * self.r0 {
            return 0;
        }
        let tie = 1e-12 * self.r0;
        1 + self
            .interfaces
            .iter()
            .filter(|phi| z - phi.value(x, y) < tie)
            .count()
    }

    pub fn top(&self) -> f64 {
        self.box_dims[2]
    }
}

/// Result of [`validate_regularity`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub sup_norm: f64,
    pub grad_sup: f64,
    pub holder_seminorm: f64,
    pub c1alpha_norm_estimate: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Sampling window and grid for [`validate_regularity`].
#[derive(Debug, Clone, Copy)]
pub struct SampleWindow {
    pub x: [f64; 2],
    pub y: [f64; 2],
    /// Samples per axis (at least 2).
    pub grid: usize,
}

impl SampleWindow {
    fn point(&self, i: usize, j: usize) -> (f64, f64) {
        let g = (self.grid - 1) as f64;
        (
            self.x[0] + (self.x[1] - self.x[0]) * i as f64 / g,
            self.y[0] + (self.y[1] - self.y[0]) * j as f64 / g,
        )
    }
}

/// Estimate the scaled `C^{1,alpha}` norm
/// `|phi|_inf + r0 |grad phi|_inf + r0^(1+alpha) [grad phi]_alpha`
/// by sampling on a regular grid.
///
/// The Hölder quotient is evaluated on pairs separated by dyadic grid
/// offsets along the axes and diagonals, so a grid of `2g - 1` points
/// always sees a superset of the pairs of a grid of `g` points on the same
/// window.
pub fn validate_regularity(
    phi: &dyn GraphFunction,
    window: SampleWindow,
    r0: f64,
    l_const: f64,
    alpha: f64,
) -> Result<RegularityReport> {
    let g = window.grid.max(2);
    let window = SampleWindow { grid: g, ..window };
    let mut vals = Vec::with_capacity(g * g);
    let mut grads = Vec::with_capacity(g * g);
    for j in 0..g {
        for i in 0..g {
            let (x, y) = window.point(i, j);
            let v = phi.value(x, y);
            let gr = phi.gradient(x, y);
            if !v.is_finite() || !gr[0].is_finite() || !gr[1].is_finite() {
                return Err(Error::NonfiniteSample { x, y });
            }
            vals.push(v);
            grads.push(gr);
        }
    }
    let sup_norm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let grad_sup = grads.iter().fold(0.0f64, |m, gr| m.max(gr[0].hypot(gr[1])));

    let mut holder = 0.0f64;
    let mut step = 1usize;
    while step < g {
        let s = step as isize;
        for (di, dj) in [(s, 0), (0, s), (s, s), (s, -s)] {
            for j in 0..g as isize {
                let j2 = j + dj;
                if j2 < 0 || j2 >= g as isize {
                    continue;
                }
                for i in 0..(g as isize - di) {
                    let (i1, j1, i2, j2) = (i as usize, j as usize, (i + di) as usize, j2 as usize);
                    let (x1, y1) = window.point(i1, j1);
                    let (x2, y2) = window.point(i2, j2);
                    let dist = (x2 - x1).hypot(y2 - y1);
                    let a = grads[j1 * g + i1];
                    let b = grads[j2 * g + i2];
                    let q = (a[0] - b[0]).hypot(a[1] - b[1]) / dist.powf(alpha);
                    holder = holder.max(q);
                }
            }
        }
        step *= 2;
    }

    let estimate = sup_norm + r0 * grad_sup + r0.powf(1.0 + alpha) * holder;
    let bound = l_const * r0;
    Ok(RegularityReport {
        sup_norm,
        grad_sup,
        holder_seminorm: holder,
        c1alpha_norm_estimate: estimate,
        bound,
        pass: estimate <= bound * (1.0 + TOL_REG),
    })
}

/// Midpoint-rule average of `phi` over the rectangle, `grid x grid` cells.
fn mean_over(phi: &dyn GraphFunction, x: [f64; 2], y: [f64; 2], grid: usize) -> f64 {
    let mut sum = 0.0;
    for j in 0..grid {
        for i in 0..grid {
            let px = x[0] + (x[1] - x[0]) * (i as f64 + 0.5) / grid as f64;
            let py = y[0] + (y[1] - y[0]) * (j as f64 + 0.5) / grid as f64;
            sum += phi.value(px, py);
        }
    }
    sum / (grid * grid) as f64
}

/// Build and validate a layered partition.
///
/// Rejects crossing interfaces, subdomains exceeding `A r0^3` and empty
/// patches. Interface regularity is measured on the deviation of each
/// interface from its mean level.
pub fn build_layered_partition(spec: &DomainSpec) -> Result<PartitionedDomain> {
    let [a1, a2, a3] = spec.box_dims;
    if !(a1 > 0.0 && a2 > 0.0 && a3 > 0.0) {
        return Err(Error::InvalidGeometry("box dimensions must be positive".into()));
    }
    if !(spec.r0 > 0.0) {
        return Err(Error::InvalidGeometry("r0 must be positive".into()));
    }
    if !(spec.alpha > 0.0 && spec.alpha <= 1.0) {
        return Err(Error::InvalidGeometry("alpha must lie in (0, 1]".into()));
    }
    if !(spec.l_const > 0.0 && spec.volume_bound > 0.0) {
        return Err(Error::InvalidGeometry("L and A must be positive".into()));
    }
    let s = spec.sigma;
    if !(s.x[0] < s.x[1] && s.y[0] < s.y[1]) || s.x[0] < 0.0 || s.y[0] < 0.0 || s.x[1] > a1 || s.y[1] > a2 {
        return Err(Error::EmptySigma);
    }

    let grid = spec.regularity_grid.unwrap_or(DEFAULT_REG_GRID).max(2);
    let n_if = spec.interfaces.len();

    // ordering, including the box top (index 0) and bottom (index N)
    for j in 0..grid {
        for i in 0..grid {
            let x = a1 * i as f64 / (grid - 1) as f64;
            let y = a2 * j as f64 / (grid - 1) as f64;
            let mut above = a3;
            for (k, phi) in spec.interfaces.iter().enumerate() {
                let v = phi.value(x, y);
                if !v.is_finite() {
                    return Err(Error::NonfiniteSample { x, y });
                }
                if !(v < above) {
                    return Err(Error::InterfacesCross { upper: k, lower: k + 1, x, y });
                }
                above = v;
            }
            if !(above > 0.0) {
                return Err(Error::InterfacesCross { upper: n_if, lower: n_if + 1, x, y });
            }
        }
    }

    let means: Vec<f64> = spec
        .interfaces
        .iter()
        .map(|phi| mean_over(phi, [0.0, a1], [0.0, a2], grid))
        .collect();
    let area = a1 * a2;
    let mut volumes = Vec::with_capacity(n_if + 1);
    let mut above = a3;
    for &m in &means {
        volumes.push((above - m) * area);
        above = m;
    }
    volumes.push(above * area);
    let bound = spec.volume_bound * spec.r0.powi(3);
    for (j, &v) in volumes.iter().enumerate() {
        if v > bound * (1.0 + 1e-12) {
            return Err(Error::VolumeBound { index: j + 1, volume: v, bound });
        }
    }

    let window = SampleWindow { x: [0.0, a1], y: [0.0, a2], grid };
    let mut regularity = Vec::with_capacity(n_if);
    for (k, phi) in spec.interfaces.iter().enumerate() {
        let dev = Deviation { shape: phi, mean: means[k] };
        let rep = validate_regularity(&dev, window, spec.r0, spec.l_const, spec.alpha)?;
        if !rep.pass {
            return Err(Error::Regularity {
                index: k + 1,
                estimate: rep.c1alpha_norm_estimate,
                bound: rep.bound,
            });
        }
        regularity.push(rep);
    }

    Ok(PartitionedDomain {
        r0: spec.r0,
        box_dims: spec.box_dims,
        interfaces: spec.interfaces.clone(),
        sigma: spec.sigma,
        l_const: spec.l_const,
        alpha: spec.alpha,
        volume_bound: spec.volume_bound,
        volumes,
        interface_means: means,
        regularity,
        extension: None,
    })
}
