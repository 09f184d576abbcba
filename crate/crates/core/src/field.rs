//! Ground-truth composite functions and discretized white-noise observations.
//!
//! A field is a regular grid of cell increments `X_i = g(t_i) v + eps sqrt(v) xi_i`
//! with the noise drawn from a stream keyed by `(seed, cell index)`, so any
//! sub-window of a field is bit-identical to the same window of the full one.

use std::io::Write as _;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// smooth bumps shared by presets and hypothesis families

/// Even smooth bump: 1 at 0, supported on [-1/2, 1/2], strictly decreasing on
/// [0, 1/2].
pub fn smooth_bump(u: f64) -> f64 {
    let x = 2.0 * u;
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

pub fn smooth_bump_deriv(u: f64) -> f64 {
    let x = 2.0 * u;
    if x.abs() >= 1.0 {
        0.0
    } else {
        let s = 1.0 - x * x;
        smooth_bump(u) * (-2.0 * x / (s * s)) * 2.0
    }
}

/// Smooth bump that equals 1 on [-1/4, 1/4] and vanishes outside [-1/2, 1/2].
pub fn plateau_bump(u: f64) -> f64 {
    let a = u.abs();
    if a >= 0.5 {
        0.0
    } else if a <= 0.25 {
        1.0
    } else {
        smooth_step((0.5 - a) / 0.25)
    }
}

pub fn plateau_bump_deriv(u: f64) -> f64 {
    let a = u.abs();
    if a >= 0.5 || a <= 0.25 {
        0.0
    } else {
        let ds = smooth_step_deriv((0.5 - a) / 0.25) / 0.25;
        -u.signum() * ds
    }
}

fn smooth_step(x: f64) -> f64 {
    // 0 -> 0, 1 -> 1, infinitely differentiable
    let e = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let a = e(x);
    let b = e(1.0 - x);
    a / (a + b)
}

fn smooth_step_deriv(x: f64) -> f64 {
    let e = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let de = |t: f64| if t > 0.0 { (-1.0 / t).exp() / (t * t) } else { 0.0 };
    let (a, b) = (e(x), e(1.0 - x));
    let (da, db) = (de(x), -de(1.0 - x));
    (da * (a + b) - a * (da + db)) / ((a + b) * (a + b))
}

/// Scanned sup norms of the smooth bump and its first two derivatives.
fn bump_norms() -> &'static (f64, f64) {
    static NORMS: OnceLock<(f64, f64)> = OnceLock::new();
    NORMS.get_or_init(|| {
        let n = 200_000;
        let mut d1: f64 = 0.0;
        let mut d2: f64 = 0.0;
        let h = 1e-5;
        for k in 0..n {
            let u = -0.5 + k as f64 / n as f64;
            d1 = d1.max(smooth_bump_deriv(u).abs());
            let dd = (smooth_bump_deriv(u + h) - smooth_bump_deriv(u - h)) / (2.0 * h);
            d2 = d2.max(dd.abs());
        }
        (d1, d2)
    })
}

// ---------------------------------------------------------------------------
// composite functions

/// A composite function `g = f(G(.))` with declared smoothness tags for both
/// components and an analytic gradient for the inner one.
#[derive(Clone)]
pub struct CompositeFunction {
    pub name: String,
    pub dim: usize,
    /// Outer order and constant: `f` lies in the 1-d Hoelder class with these.
    pub outer_order: f64,
    pub outer_const: f64,
    /// Inner order and constant for `G`.
    pub inner_order: f64,
    pub inner_const: f64,
    outer: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    inner: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    inner_grad: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl std::fmt::Debug for CompositeFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompositeFunction")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("outer", &(self.outer_order, self.outer_const))
            .field("inner", &(self.inner_order, self.inner_const))
            .finish()
    }
}

impl CompositeFunction {
    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        outer_tag: (f64, f64),
        inner_tag: (f64, f64),
        outer: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        inner: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        inner_grad: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            outer_order: outer_tag.0,
            outer_const: outer_tag.1,
            inner_order: inner_tag.0,
            inner_const: inner_tag.1,
            outer,
            inner,
            inner_grad,
        }
    }

    pub fn value(&self, t: &[f64]) -> f64 {
        (self.outer)((self.inner)(t))
    }

    pub fn inner_value(&self, t: &[f64]) -> f64 {
        (self.inner)(t)
    }

    pub fn outer_value(&self, u: f64) -> f64 {
        (self.outer)(u)
    }

    pub fn inner_gradient(&self, t: &[f64]) -> Vec<f64> {
        (self.inner_grad)(t)
    }
}

/// Built-in ground-truth families.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Preset {
    /// `G = l0 sin(omega theta.t)`, outer a scaled smooth bump.
    SinRidge { l0: f64, gamma: f64, beta: f64, bump_scale: f64, omega: f64 },
    /// `G = offset + theta.t + kappa |t_perp|^2`, outer `amp sin(omega u)`.
    /// A nonconstant gradient field, so the right window orientation varies
    /// from point to point.
    QuadRidge { gamma: f64, beta: f64, kappa: f64, offset: f64, omega: f64, amp: f64 },
    /// `g = |l0 width^beta phi0((t - center)/width)|^gamma` with a plateau bump.
    PowerBump { l0: f64, gamma: f64, beta: f64, width: f64 },
}

impl Preset {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "sin-ridge" => Ok(Preset::SinRidge {
                l0: 0.9,
                gamma: 1.0,
                beta: 2.0,
                bump_scale: 0.5,
                omega: 1.0,
            }),
            "quad-ridge" => Ok(Preset::QuadRidge {
                gamma: 1.0,
                beta: 2.0,
                kappa: 0.6,
                offset: 0.3,
                omega: 1.0,
                amp: 1.0,
            }),
            "power-bump" => {
                Ok(Preset::PowerBump { l0: 0.5, gamma: 0.7, beta: 0.9, width: 0.8 })
            }
            other => Err(Error::Config(format!("unknown preset '{other}'"))),
        }
    }

    pub fn composite(&self, dim: usize) -> Result<CompositeFunction> {
        if dim < 2 {
            return Err(Error::Domain("presets need dim >= 2".into()));
        }
        match *self {
            Preset::SinRidge { l0, gamma, beta, bump_scale, omega } => {
                if !(gamma > 0.0 && gamma <= 2.0 && beta > 0.0 && beta <= 2.0) {
                    return Err(Error::Domain("sin-ridge orders must lie in (0,2]".into()));
                }
                let h = bump_scale;
                let theta: Vec<f64> = {
                    let mut t = vec![0.0; dim];
                    t[0] = 1.0;
                    t
                };
                let th = theta.clone();
                let inner = move |t: &[f64]| {
                    l0 * (omega * dot(&th, t)).sin()
                };
                let th = theta.clone();
                let grad = move |t: &[f64]| {
                    let c = l0 * omega * (omega * dot(&th, t)).cos();
                    th.iter().map(|x| c * x).collect()
                };
                let outer = move |u: f64| l0 * h.powf(gamma) * smooth_bump(u / h);
                let (d1, d2) = *bump_norms();
                let outer_const = 1.05
                    * l0
                    * if gamma <= 1.0 {
                        d1.max(2.0)
                    } else {
                        (0.5 * d2).max(2.0 + d1)
                    };
                let diam = 8.0 * (dim as f64).sqrt();
                let inner_const = 1.05
                    * l0
                    * omega.max(omega * omega / 2.0)
                    * diam.powf((2.0 - beta).max(0.0));
                Ok(CompositeFunction::custom(
                    "sin-ridge",
                    dim,
                    (gamma, outer_const),
                    (beta, inner_const),
                    Arc::new(outer),
                    Arc::new(inner),
                    Arc::new(grad),
                ))
            }
            Preset::QuadRidge { gamma, beta, kappa, offset, omega, amp } => {
                if !(beta > 1.0 && beta <= 2.0) {
                    return Err(Error::Domain(
                        "quad-ridge needs inner order in (1,2]".into(),
                    ));
                }
                let theta = {
                    let mut t = vec![1.0; dim];
                    let n = (dim as f64).sqrt();
                    t.iter_mut().for_each(|x| *x /= n);
                    t
                };
                let th = theta.clone();
                let inner = move |t: &[f64]| {
                    let proj = dot(&th, t);
                    let perp_sq = t.iter().map(|x| x * x).sum::<f64>() - proj * proj;
                    offset + proj + kappa * perp_sq
                };
                let th = theta.clone();
                let grad = move |t: &[f64]| {
                    let proj = dot(&th, t);
                    th.iter()
                        .zip(t)
                        .map(|(thk, tk)| thk + 2.0 * kappa * (tk - proj * thk))
                        .collect()
                };
                let outer = move |u: f64| amp * (omega * u).sin();
                let outer_const = 3.0 * amp * omega.powf(gamma) * 1.05;
                let diam = 8.0 * (dim as f64).sqrt();
                let inner_const = 1.05 * kappa.max(0.01) * diam.powf(2.0 - beta);
                Ok(CompositeFunction::custom(
                    "quad-ridge",
                    dim,
                    (gamma, outer_const),
                    (beta, inner_const),
                    Arc::new(outer),
                    Arc::new(inner),
                    Arc::new(grad),
                ))
            }
            Preset::PowerBump { l0, gamma, beta, width } => {
                if !(gamma > 0.0 && gamma <= 1.0 && beta > 0.0 && beta <= 1.0) {
                    return Err(Error::Domain(
                        "power-bump orders must lie in (0,1]".into(),
                    ));
                }
                let h = width;
                let inner = move |t: &[f64]| {
                    let phi: f64 = t.iter().map(|&x| plateau_bump(x / h)).product();
                    l0 * h.powf(beta) * phi
                };
                let grad = move |t: &[f64]| {
                    let vals: Vec<f64> = t.iter().map(|&x| plateau_bump(x / h)).collect();
                    (0..t.len())
                        .map(|j| {
                            let mut prod = l0 * h.powf(beta) / h;
                            for (k, v) in vals.iter().enumerate() {
                                if k == j {
                                    prod *= plateau_bump_deriv(t[k] / h);
                                } else {
                                    prod *= v;
                                }
                            }
                            prod
                        })
                        .collect()
                };
                let outer = move |u: f64| u.abs().powf(gamma);
                // |a|^g is (g,1)-Hoelder; the inner constant comes from scanned
                // plateau norms
                let grad_norm = {
                    let n = 20_000;
                    let mut m: f64 = 0.0;
                    for k in 0..n {
                        let u = -0.5 + k as f64 / n as f64;
                        m = m.max(plateau_bump_deriv(u).abs());
                    }
                    m
                };
                let inner_const =
                    1.1 * l0 * (grad_norm * (dim as f64).sqrt()).max(2.0);
                Ok(CompositeFunction::custom(
                    "power-bump",
                    dim,
                    (gamma, 1.05),
                    (beta, inner_const),
                    Arc::new(outer),
                    Arc::new(inner),
                    Arc::new(grad),
                ))
            }
        }
    }
}

/// Convenience constructor used by the command line: preset by name with its
/// default parameters.
pub fn make_composite(preset: &Preset, dim: usize) -> Result<CompositeFunction> {
    preset.composite(dim)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------------------
// empirical smoothness certificates

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderReport {
    pub max_ratio: f64,
    pub pass: bool,
    pub worst_x: Vec<f64>,
    pub worst_y: Vec<f64>,
    pub samples: usize,
}

/// Sample random pairs and test the Taylor-remainder inequality
/// `|h(y) - T_x h(y)| <= l * |y - x|^order` of the Hoelder class.
///
/// The Taylor degree is the largest integer strictly below `order`, so order 1
/// tests the plain increment and orders in (1,2] use the gradient.
pub fn holder_check(
    h: &dyn Fn(&[f64]) -> f64,
    grad: Option<&dyn Fn(&[f64]) -> Vec<f64>>,
    order: f64,
    l: f64,
    dim: usize,
    samples: usize,
    seed: u64,
    half_width: f64,
) -> Result<HolderReport> {
    if !(order > 0.0 && order <= 2.0) {
        return Err(Error::Domain(format!("order must lie in (0,2], got {order}")));
    }
    let degree = (order.ceil() as i64 - 1).clamp(0, 1);
    if degree == 1 && grad.is_none() {
        return Err(Error::Domain("orders above 1 need a gradient oracle".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9a1d_c4ec);
    let mut worst = (0.0f64, vec![0.0; dim], vec![0.0; dim]);
    for _ in 0..samples {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-half_width..half_width)).collect();
        let y: Vec<f64> = (0..dim).map(|_| rng.gen_range(-half_width..half_width)).collect();
        let dist = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if dist < 1e-12 {
            continue;
        }
        let mut taylor = h(&x);
        if degree == 1 {
            let g = grad.unwrap()(&x);
            taylor += g.iter().zip(y.iter().zip(&x)).map(|(gk, (yk, xk))| gk * (yk - xk)).sum::<f64>();
        }
        let ratio = (h(&y) - taylor).abs() / (l * dist.powf(order));
        if ratio > worst.0 {
            worst = (ratio, x, y);
        }
    }
    Ok(HolderReport {
        max_ratio: worst.0,
        pass: worst.0 <= 1.0,
        worst_x: worst.1,
        worst_y: worst.2,
        samples,
    })
}

// ---------------------------------------------------------------------------
// observation fields

/// Regular lattice of cells covering `[-a, a]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub cells_per_axis: usize,
    pub half_width: f64,
}

impl Grid {
    pub fn new(dim: usize, cells_per_axis: usize, half_width: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Domain("grid needs dim >= 2".into()));
        }
        if cells_per_axis < 8 {
            return Err(Error::Domain("grid needs at least 8 cells per axis".into()));
        }
        if !(half_width > 1.0) {
            return Err(Error::Domain(format!(
                "domain half-width must exceed 1, got {half_width}"
            )));
        }
        Ok(Self { dim, cells_per_axis, half_width })
    }

    pub fn cell_size(&self) -> f64 {
        2.0 * self.half_width / self.cells_per_axis as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_size().powi(self.dim as i32)
    }

    pub fn total_cells(&self) -> usize {
        self.cells_per_axis.pow(self.dim as u32)
    }

    pub fn center_coord(&self, index: usize) -> f64 {
        -self.half_width + (index as f64 + 0.5) * self.cell_size()
    }

    pub fn center(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().map(|&i| self.center_coord(i)).collect()
    }

    /// Index of the cell whose center is nearest to `x` along one axis.
    pub fn nearest_index(&self, x: f64) -> usize {
        let raw = ((x + self.half_width) / self.cell_size() - 0.5).round();
        raw.clamp(0.0, (self.cells_per_axis - 1) as f64) as usize
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        let mut out = 0;
        for &i in idx {
            out = out * self.cells_per_axis + i;
        }
        out
    }
}

/// Noisy cell increments over a (possibly windowed) grid region.
#[derive(Debug, Clone)]
pub struct ObservationField {
    pub grid: Grid,
    pub eps: f64,
    pub seed: u64,
    /// Inclusive lower and exclusive upper cell bounds per axis.
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
    data: Vec<f64>,
}

/// Hard cap on synthesized cells; guards against accidental huge grids.
pub const MAX_FIELD_CELLS: usize = 1 << 26;

/// Standard normal draw keyed by `(seed, cell)`: reproducible regardless of
/// iteration or thread order.
pub fn cell_noise(seed: u64, flat_index: u64) -> f64 {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&flat_index.to_le_bytes());
    key[16..24].copy_from_slice(&0x6669_656c_646e_6f69u64.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    let x: f64 = StandardNormal.sample(&mut rng);
    x
}

impl ObservationField {
    /// Synthesize the full field over `[-a, a]^d`.
    pub fn synthesize(
        g: &CompositeFunction,
        eps: f64,
        grid: Grid,
        seed: u64,
    ) -> Result<Self> {
        let lo = vec![0; grid.dim];
        let hi = vec![grid.cells_per_axis; grid.dim];
        Self::synthesize_window(g, eps, grid, seed, lo, hi)
    }

    /// Synthesize only the cells in the given index window; values agree
    /// bit-for-bit with the corresponding cells of the full field.
    pub fn synthesize_window(
        g: &CompositeFunction,
        eps: f64,
        grid: Grid,
        seed: u64,
        lo: Vec<usize>,
        hi: Vec<usize>,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::Domain(format!("eps must lie in [0,1), got {eps}")));
        }
        if g.dim != grid.dim {
            return Err(Error::Domain("function and grid dimension mismatch".into()));
        }
        let mut count = 1usize;
        for k in 0..grid.dim {
            if lo[k] >= hi[k] || hi[k] > grid.cells_per_axis {
                return Err(Error::Domain("invalid window bounds".into()));
            }
            count = count.saturating_mul(hi[k] - lo[k]);
        }
        if count > MAX_FIELD_CELLS {
            return Err(Error::Domain(format!(
                "window of {count} cells exceeds the cap of {MAX_FIELD_CELLS}"
            )));
        }
        let vol = grid.cell_volume();
        let noise_scale = eps * vol.sqrt();
        let mut data = vec![0.0; count];
        let mut idx = lo.clone();
        let mut point = vec![0.0; grid.dim];
        for slot in data.iter_mut() {
            for k in 0..grid.dim {
                point[k] = grid.center_coord(idx[k]);
            }
            let drift = g.value(&point) * vol;
            *slot = if eps == 0.0 {
                drift
            } else {
                drift + noise_scale * cell_noise(seed, grid.flat(&idx) as u64)
            };
            // advance the window multi-index, last axis fastest
            for k in (0..grid.dim).rev() {
                idx[k] += 1;
                if idx[k] < hi[k] {
                    break;
                }
                idx[k] = lo[k];
            }
        }
        Ok(Self { grid, eps, seed, lo, hi, data })
    }

    pub fn window_extent(&self, axis: usize) -> usize {
        self.hi[axis] - self.lo[axis]
    }

    pub fn value(&self, idx: &[usize]) -> Option<f64> {
        let mut flat = 0;
        for k in 0..self.grid.dim {
            if idx[k] < self.lo[k] || idx[k] >= self.hi[k] {
                return None;
            }
            flat = flat * self.window_extent(k) + (idx[k] - self.lo[k]);
        }
        Some(self.data[flat])
    }

    /// Raw window data, row-major with the last axis fastest.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_full(&self) -> bool {
        self.lo.iter().all(|&l| l == 0) && self.hi.iter().all(|&h| h == self.grid.cells_per_axis)
    }

    /// Write the raw values as little-endian f64 plus a JSON sidecar with the
    /// grid metadata.
    pub fn write_binary(&self, path: &std::path::Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        let mut buf = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        f.write_all(&buf)?;
        let sidecar = path.with_extension("json");
        let meta = serde_json::json!({
            "grid": self.grid,
            "eps": self.eps,
            "seed": self.seed,
            "lo": self.lo,
            "hi": self.hi,
            "layout": "row-major, last axis fastest, little-endian f64",
        });
        std::fs::write(sidecar, serde_json::to_string_pretty(&meta).unwrap())?;
        Ok(())
    }
}

/// Noise level equivalent to `n` regression observations with noise `sigma`.
pub fn eps_for_samples(n: usize, sigma: f64) -> f64 {
    sigma / (n as f64).sqrt()
}
