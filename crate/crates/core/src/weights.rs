//! Zone-dependent signed piecewise-constant weights.
//!
//! Every weight is a symmetric function of unit mass. It is stored as a list
//! of axis-aligned boxes in the positive orthant together with signed heights;
//! evaluation folds a point to its componentwise absolute value and looks up
//! the containing box. The height of each box is `2^-d / mu` where `mu` is the
//! box volume, so each box carries exactly one unit of absolute mass and the
//! signed masses telescope to one.
//!
//! Four constructions are used, chosen by zone:
//! * plain boxcar for `P4` (half-width set by the effective smoothness),
//! * an anisotropic rectangle for `P1`,
//! * a two-step pavement for the easy part of `P2`/`P3`,
//! * multistep pavements (power-spaced for `P3`, log-spaced for deep `P2`)
//!   whose alternating signs cancel the transverse bias exactly.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{orthogonal_frame, Frame};
use crate::quad::{integrate_box, integrate_interval};
use crate::zones::{classify, SmoothnessPair, Zone};

/// Shape family of a weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    /// Boxcar with half-width `lambda^{1/(gamma beta)}` (both orders <= 1).
    BoxcarSlow,
    /// Boxcar with half-width `lambda^{1/beta}` (inner order limits the rate).
    BoxcarInactive,
    /// Oriented rectangle for the single-index zone.
    Rectangle,
    /// Signed pavement with `2r - 1` boxes.
    Multistep,
}

/// One axis-aligned box in the positive orthant with a signed height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub height: f64,
}

impl Piece {
    /// Volume of the box itself (not of its symmetrized copies).
    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    fn contains_abs(&self, y_abs: &[f64]) -> bool {
        y_abs
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(y, (l, h))| *y >= *l && *y < *h)
    }
}

/// A fully built weight: breakpoints, pavement and analytic norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub a: SmoothnessPair,
    pub lambda: f64,
    pub kind: WeightKind,
    /// Number of steps; 1 for boxcar and rectangle kinds.
    pub steps: usize,
    /// Increasing first-axis breakpoints `u_1 < ... < u_r`.
    pub u: Vec<f64>,
    /// Decreasing transverse breakpoints `v_1 > ... > v_r`; the final
    /// breakpoint `v_{r+1} = 0` is implicit.
    pub v: Vec<f64>,
    pub pieces: Vec<Piece>,
    /// Analytic L1 norm; equals `2r - 1` for multistep weights.
    pub l1: f64,
    /// Analytic squared L2 norm, `2^-d * sum(1/mu)` over the pavement.
    pub l2sq: f64,
}

/// Build the weight for the pair `a` at size parameter `lambda`.
pub fn build_weight(a: &SmoothnessPair, lambda: f64) -> Result<WeightSpec> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Domain(format!("lambda must lie in (0,1], got {lambda}")));
    }
    let zone = classify(a)?;
    let (g, b) = (a.gamma, a.beta);
    match zone {
        Zone::P4 => {
            if g <= 1.0 && b <= 1.0 {
                boxcar(a, lambda, lambda.powf(1.0 / (g * b)), WeightKind::BoxcarSlow)
            } else {
                // beta < gamma with gamma > 1: effective smoothness is beta
                boxcar(a, lambda, lambda.powf(1.0 / b), WeightKind::BoxcarInactive)
            }
        }
        Zone::P1 => rectangle(a, lambda),
        Zone::P3 => p3_weight(a, lambda),
        Zone::P2 => {
            let rho = a.rho();
            let slack = (b - g) / g;
            if slack <= (1.0 + rho) * rho {
                p3_weight(a, lambda)
            } else {
                let v_gauge = log_gauge(a, lambda);
                if v_gauge <= 0.0 {
                    two_step(a, lambda)
                } else {
                    log_multistep(a, lambda, v_gauge)
                }
            }
        }
    }
}

/// `ln{ (gamma-1)(beta-gamma) / (gamma beta^2) * ln(1/lambda) }`, the gauge
/// that decides how many log-spaced steps are needed.
pub fn log_gauge(a: &SmoothnessPair, lambda: f64) -> f64 {
    let (g, b) = (a.gamma, a.beta);
    ((g - 1.0) * (b - g) / (g * b * b) * (1.0 / lambda).ln()).ln()
}

fn boxcar(a: &SmoothnessPair, lambda: f64, half: f64, kind: WeightKind) -> Result<WeightSpec> {
    let d = a.dim;
    let piece = Piece {
        lo: vec![0.0; d],
        hi: vec![half; d],
        height: 0.5f64.powi(d as i32) / half.powi(d as i32),
    };
    assemble(a, lambda, kind, vec![half], vec![half], vec![piece])
}

fn rectangle(a: &SmoothnessPair, lambda: f64) -> Result<WeightSpec> {
    let d = a.dim;
    let u1 = lambda.powf(1.0 / a.gamma);
    let v1 = lambda.powf(1.0 / (a.gamma * a.beta));
    let mu = u1 * v1.powi(d as i32 - 1);
    let mut lo = vec![0.0; d];
    let mut hi = vec![v1; d];
    lo[0] = 0.0;
    hi[0] = u1;
    let piece = Piece { lo, hi, height: 0.5f64.powi(d as i32) / mu };
    assemble(a, lambda, WeightKind::Rectangle, vec![u1], vec![v1], vec![piece])
}

fn two_step(a: &SmoothnessPair, lambda: f64) -> Result<WeightSpec> {
    let (g, b) = (a.gamma, a.beta);
    let u = vec![lambda.powf(1.0 / g), lambda.powf(1.0 / b)];
    let v = vec![lambda.powf((b - g + 1.0) / (b * b)), 0.5 * lambda.powf(1.0 / b)];
    multistep(a, lambda, u, v)
}

fn p3_weight(a: &SmoothnessPair, lambda: f64) -> Result<WeightSpec> {
    let (g, b) = (a.gamma, a.beta);
    let rho = a.rho();
    if rho >= (b - g) / g {
        return two_step(a, lambda);
    }
    // alpha_0 = 1/beta, alpha_{k+1} = alpha_k * rho + 1/beta; stop once the
    // sequence clears 1/gamma
    let mut alphas = vec![1.0 / b];
    while *alphas.last().unwrap() < 1.0 / g {
        let next = alphas.last().unwrap() * rho + 1.0 / b;
        if alphas.len() > 10_000 {
            return Err(Error::Internal(format!(
                "step recursion failed to terminate for ({g}, {b})"
            )));
        }
        alphas.push(next);
    }
    let r = alphas.len(); // alpha_{r-1} >= 1/gamma > alpha_{r-2}, r >= 2
    let mut u = vec![lambda.powf(1.0 / g)];
    for i in 2..=r {
        u.push(lambda.powf(alphas[r - i]));
    }
    let mut v = Vec::with_capacity(r);
    for i in 1..r {
        v.push(lambda.powf(1.0 / b) * u[i].powf(-(g - 1.0) / b));
    }
    v.push(0.5 * lambda.powf(1.0 / b));
    multistep(a, lambda, u, v)
}

fn log_multistep(a: &SmoothnessPair, lambda: f64, v_gauge: f64) -> Result<WeightSpec> {
    let (g, b) = (a.gamma, a.beta);
    let golden = 0.5 * (5f64.sqrt() + 1.0);
    let cap = 0.5 * golden.ln();
    let mut r = 2usize;
    while v_gauge / (r as f64 - 1.0) >= cap {
        r += 1;
        if r > 10_000 {
            return Err(Error::Internal("log-spaced step count diverged".into()));
        }
    }
    let alpha = v_gauge / (r as f64 - 1.0);
    let nu = golden.sqrt();
    let mut u = vec![lambda.powf(1.0 / g)];
    for i in 2..=r {
        u.push(lambda.powf(1.0 / g) * (b / (g - 1.0) * (alpha * (i as f64 - 1.0)).exp()).exp());
    }
    let mut v = Vec::with_capacity(r);
    for i in 1..r {
        v.push(lambda.powf(1.0 / (g * b)) * (-nu * (alpha * i as f64).exp()).exp());
    }
    v.push(0.5 * lambda.powf(1.0 / b));
    multistep(a, lambda, u, v)
}

fn multistep(a: &SmoothnessPair, lambda: f64, u: Vec<f64>, v: Vec<f64>) -> Result<WeightSpec> {
    let d = a.dim;
    let r = u.len();
    let half = 0.5f64.powi(d as i32);
    let vv = |j: usize| if j <= r { v[j - 1] } else { 0.0 };

    let mut pieces = Vec::with_capacity(2 * r - 1);
    let mut push = |ulo: f64, uhi: f64, vlo: f64, vhi: f64, sign: f64| {
        let mu = (uhi - ulo) * (vhi - vlo).powi(d as i32 - 1);
        let mut lo = vec![vlo; d];
        let mut hi = vec![vhi; d];
        lo[0] = ulo;
        hi[0] = uhi;
        pieces.push(Piece { lo, hi, height: sign * half / mu });
    };
    push(0.0, u[0], vv(2), vv(1), 1.0);
    for i in 2..=r {
        push(u[i - 2], u[i - 1], vv(i + 1), vv(i), 1.0);
        push(u[i - 2], u[i - 1], vv(i), vv(i - 1), -1.0);
    }
    assemble(a, lambda, WeightKind::Multistep, u, v, pieces)
}

fn assemble(
    a: &SmoothnessPair,
    lambda: f64,
    kind: WeightKind,
    u: Vec<f64>,
    v: Vec<f64>,
    pieces: Vec<Piece>,
) -> Result<WeightSpec> {
    let d = a.dim;
    // breakpoint sequences must be strictly monotone with non-degenerate gaps;
    // inverse-volume heights would overflow otherwise
    let mut prev = 0.0;
    for &x in &u {
        if !(x.is_finite() && x > prev && x - prev > 1e-14 * x) {
            return Err(Error::Build(format!(
                "degenerate first-axis breakpoints {u:?} for (gamma, beta, lambda) = ({}, {}, {lambda})",
                a.gamma, a.beta
            )));
        }
        prev = x;
    }
    for j in 0..v.len() {
        let next = if j + 1 < v.len() { v[j + 1] } else { 0.0 };
        if !(v[j].is_finite() && v[j] > next && v[j] - next > 1e-14 * v[j]) {
            return Err(Error::Build(format!(
                "degenerate transverse breakpoints {v:?} for (gamma, beta, lambda) = ({}, {}, {lambda})",
                a.gamma, a.beta
            )));
        }
    }
    let l1 = pieces.len() as f64;
    let l2sq = 0.5f64.powi(d as i32) * pieces.iter().map(|p| 1.0 / p.volume()).sum::<f64>();
    Ok(WeightSpec { a: *a, lambda, kind, steps: u.len(), u, v, pieces, l1, l2sq })
}

impl WeightSpec {
    /// Pointwise value; symmetric by construction.
    pub fn eval(&self, y: &[f64]) -> f64 {
        let y_abs: Vec<f64> = y.iter().map(|t| t.abs()).collect();
        for p in &self.pieces {
            if p.contains_abs(&y_abs) {
                return p.height;
            }
        }
        0.0
    }

    /// `(l1, l2)` analytic norms.
    pub fn norms(&self) -> (f64, f64) {
        (self.l1, self.l2sq.sqrt())
    }

    /// Total signed mass computed piece by piece; 1 up to roundoff.
    pub fn mass(&self) -> f64 {
        let sym = 2f64.powi(self.a.dim as i32);
        self.pieces.iter().map(|p| p.height * (sym * p.volume())).sum()
    }

    /// L1 norm recomputed from the pavement (cross-check for the stored value).
    pub fn l1_from_pieces(&self) -> f64 {
        let sym = 2f64.powi(self.a.dim as i32);
        self.pieces.iter().map(|p| p.height.abs() * (sym * p.volume())).sum()
    }

    /// Squared L2 norm recomputed from the pavement.
    pub fn l2sq_from_pieces(&self) -> f64 {
        let sym = 2f64.powi(self.a.dim as i32);
        self.pieces.iter().map(|p| p.height * p.height * (sym * p.volume())).sum()
    }

    /// Per-axis half-widths of the support box.
    pub fn support_halfwidths(&self) -> Vec<f64> {
        let mut out = vec![self.v[0]; self.a.dim];
        out[0] = *self.u.last().unwrap();
        out
    }

    /// Euclidean radius of the support.
    pub fn support_radius(&self) -> f64 {
        self.support_halfwidths().iter().map(|h| h * h).sum::<f64>().sqrt()
    }

    /// Smallest distance between consecutive breakpoints on either axis
    /// (including the implicit zeros). Lattice samplers must resolve it.
    pub fn min_breakpoint_gap(&self) -> f64 {
        let mut gap = self.u[0];
        for w in self.u.windows(2) {
            gap = gap.min(w[1] - w[0]);
        }
        gap = gap.min(*self.v.last().unwrap());
        for w in self.v.windows(2) {
            gap = gap.min(w[0] - w[1]);
        }
        gap
    }

    /// Integrals of the weight against a function of the first coordinate and
    /// a function of the remaining coordinates, by exact piecewise
    /// integration.
    ///
    /// The transverse factors of paired boxes cancel exactly (they share the
    /// same first-axis interval), so the first integral reduces to the uniform
    /// average of `q1` over `[-u_1, u_1]`; symmetrically the second reduces to
    /// the uniform average of `q_rest` over `[-v_r, v_r]^{d-1}`.
    pub fn marginal_averages(
        &self,
        q1: &dyn Fn(f64) -> f64,
        q_rest: &dyn Fn(&[f64]) -> f64,
    ) -> (f64, f64) {
        let d = self.a.dim;
        let mut first = 0.0;
        let mut second = 0.0;
        for p in &self.pieces {
            let sign = p.height.signum();
            let du = p.hi[0] - p.lo[0];
            let dv = p.hi[1] - p.lo[1];
            // symmetrized 1-d integral over +-[lo, hi]
            let iu = integrate_interval(&|t| q1(t) + q1(-t), p.lo[0], p.hi[0], 24);
            first += sign * iu / (2.0 * du);
            // symmetrized (d-1)-d integral over the transverse shell
            let mut jv = 0.0;
            let axes = d - 1;
            for mask in 0..(1usize << axes) {
                let mut lo = vec![0.0; axes];
                let mut hi = vec![0.0; axes];
                for k in 0..axes {
                    if mask & (1 << k) == 0 {
                        lo[k] = p.lo[1];
                        hi[k] = p.hi[1];
                    } else {
                        lo[k] = -p.hi[1];
                        hi[k] = -p.lo[1];
                    }
                }
                jv += integrate_box(q_rest, &lo, &hi, 24);
            }
            second += sign * jv * 0.5f64.powi(axes as i32) / dv.powi(axes as i32);
        }
        (first, second)
    }

    /// `int |K(y)| * |y|^m dy`; exact per-piece monomial integration for even
    /// integer `m`, tensorized 32-node quadrature otherwise.
    pub fn moment(&self, m: f64) -> Result<f64> {
        if !(m >= 0.0) {
            return Err(Error::Domain(format!("moment order must be >= 0, got {m}")));
        }
        let d = self.a.dim;
        let sym = 2f64.powi(d as i32);
        if m == 0.0 {
            return Ok(self.l1);
        }
        if m.fract() == 0.0 && (m as u64) % 2 == 0 {
            let s = (m as usize) / 2;
            let mut total = 0.0;
            for p in &self.pieces {
                total += p.height.abs() * even_norm_power_integral(p, s, d);
            }
            return Ok(total);
        }
        let mut total = 0.0;
        for p in &self.pieces {
            let val = integrate_box(
                &|y: &[f64]| y.iter().map(|t| t * t).sum::<f64>().powf(m / 2.0),
                &p.lo,
                &p.hi,
                32,
            );
            total += p.height.abs() * sym * val;
        }
        Ok(total)
    }
}

/// A weight rotated so that its first axis points along `theta`.
#[derive(Debug, Clone)]
pub struct OrientedWeight {
    pub spec: Arc<WeightSpec>,
    pub frame: Frame,
}

impl OrientedWeight {
    pub fn theta(&self) -> Vec<f64> {
        self.frame.orientation()
    }

    /// Evaluate at an ambient point by rotating into the weight frame.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.spec.eval(&self.frame.apply_transpose(x))
    }

    /// Euclidean support radius (rotation invariant).
    pub fn support_radius(&self) -> f64 {
        self.spec.support_radius()
    }
}

/// Attach an orientation to a weight. The input must be a unit vector within
/// 1e-9; it is renormalized internally.
pub fn orient(spec: Arc<WeightSpec>, theta: &[f64]) -> Result<OrientedWeight> {
    if theta.len() != spec.a.dim {
        return Err(Error::Domain(format!(
            "orientation has dimension {}, weight has {}",
            theta.len(),
            spec.a.dim
        )));
    }
    let frame = orthogonal_frame(theta)?;
    Ok(OrientedWeight { spec, frame })
}

/// Integral of `|y|^{2s}` over the symmetrized copies of a box, via the
/// multinomial expansion of `(y_1^2 + ... + y_d^2)^s`.
fn even_norm_power_integral(p: &Piece, s: usize, d: usize) -> f64 {
    // per-axis symmetric monomial integrals: int_{+-[lo,hi]} t^{2k} dt
    let axis_int = |axis: usize, k: usize| -> f64 {
        let e = 2 * k as i32 + 1;
        2.0 * (p.hi[axis].powi(e) - p.lo[axis].powi(e)) / e as f64
    };
    let mut total = 0.0;
    let mut expo = vec![0usize; d];
    fn rec(
        axis: usize,
        left: usize,
        d: usize,
        expo: &mut Vec<usize>,
        axis_int: &dyn Fn(usize, usize) -> f64,
        total: &mut f64,
        s: usize,
    ) {
        if axis == d - 1 {
            expo[axis] = left;
            let mut coef = factorial(s);
            let mut val = 1.0;
            for k in 0..d {
                coef /= factorial(expo[k]);
                val *= axis_int(k, expo[k]);
            }
            *total += coef as f64 * val;
            return;
        }
        for k in 0..=left {
            expo[axis] = k;
            rec(axis + 1, left - k, d, expo, axis_int, total, s);
        }
    }
    rec(0, s, d, &mut expo, &axis_int, &mut total, s);
    total
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product::<u64>().max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pair(g: f64, b: f64, d: usize) -> SmoothnessPair {
        SmoothnessPair::new(g, b, d).unwrap()
    }

    #[test]
    fn rectangle_reference_geometry() {
        let w = build_weight(&pair(1.0, 2.0, 2), 0.01).unwrap();
        assert_eq!(w.kind, WeightKind::Rectangle);
        assert_relative_eq!(w.u[0], 0.01, max_relative = 1e-14);
        assert_relative_eq!(w.v[0], 0.1, max_relative = 1e-14);
        assert_relative_eq!(w.pieces[0].height, 250.0, max_relative = 1e-12);
        assert_relative_eq!(w.mass(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn two_step_reference_breakpoints() {
        let w = build_weight(&pair(1.9, 2.0, 2), 0.01).unwrap();
        assert_eq!(w.kind, WeightKind::Multistep);
        assert_eq!(w.steps, 2);
        assert_relative_eq!(w.u[0], 0.01f64.powf(1.0 / 1.9), max_relative = 1e-14);
        assert_relative_eq!(w.u[0], 0.0885867, max_relative = 1e-6);
        assert_relative_eq!(w.u[1], 0.1, max_relative = 1e-12);
        assert_relative_eq!(w.v[0], 0.01f64.powf(1.1 / 4.0), max_relative = 1e-14);
        assert_relative_eq!(w.v[0], 0.28184, max_relative = 1e-4);
        assert_relative_eq!(w.v[1], 0.05, max_relative = 1e-12);
    }

    #[test]
    fn two_step_eval_and_norms() {
        let w = build_weight(&pair(1.9, 2.0, 2), 0.01).unwrap();
        // inside the positive box of the first piece: 2^-2 / mu_11
        assert_relative_eq!(w.eval(&[0.05, 0.1]), 12.1727, max_relative = 1e-4);
        // symmetric in every axis
        assert_relative_eq!(w.eval(&[-0.05, 0.1]), w.eval(&[0.05, -0.1]), epsilon = 0.0);
        // outside the support
        assert_eq!(w.eval(&[0.5, 0.5]), 0.0);
        let (l1, l2) = w.norms();
        assert_eq!(l1, 3.0);
        // squared norm is the symmetrization factor times the inverse-volume sum
        let inv_mu: f64 = w.pieces.iter().map(|p| 1.0 / p.volume()).sum();
        assert_relative_eq!(inv_mu, 2178.95, max_relative = 1e-4);
        assert_relative_eq!(l2 * l2, 0.25 * inv_mu, max_relative = 1e-13);
        assert_relative_eq!(w.l2sq_from_pieces(), w.l2sq, max_relative = 1e-12);
    }

    #[test]
    fn p3_power_multistep_step_count() {
        let w = build_weight(&pair(1.5, 1.99, 2), 0.05).unwrap();
        assert_eq!(w.steps, 4);
        assert_eq!(w.pieces.len(), 7);
        assert_eq!(w.l1, 7.0);
    }

    #[test]
    fn p2_shallow_lambda_falls_back_to_two_step() {
        let a = pair(1.3, 2.0, 2);
        let gauge = log_gauge(&a, 1e-3);
        assert_relative_eq!(gauge, -1.277, max_relative = 1e-3);
        let w = build_weight(&a, 1e-3).unwrap();
        assert_eq!(w.steps, 2);
    }

    #[test]
    fn p2_deep_lambda_uses_log_spaced_steps() {
        let a = pair(1.4142, 2.0, 2);
        let w = build_weight(&a, 1e-12).unwrap();
        assert_eq!(w.steps, 2);
        assert_relative_eq!(w.u[0], 1e-12f64.powf(1.0 / 1.4142), max_relative = 1e-12);
        assert_relative_eq!(
            *w.u.last().unwrap(),
            1e-12f64.powf(0.5),
            max_relative = 1e-3
        );
        let w = build_weight(&a, 1e-16).unwrap();
        assert_eq!(w.steps, 3);
        assert_eq!(w.l1, 5.0);
        assert_relative_eq!(w.mass(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn boxcar_norms_match_closed_form() {
        let w = build_weight(&pair(0.7, 0.9, 2), 0.3).unwrap();
        assert_eq!(w.kind, WeightKind::BoxcarSlow);
        let h = 0.3f64.powf(1.0 / 0.63);
        let (l1, l2) = w.norms();
        assert_eq!(l1, 1.0);
        assert_relative_eq!(l2, (2.0 * h).powf(-1.0), max_relative = 1e-13);

        let w = build_weight(&pair(2.0, 1.5, 3), 0.3).unwrap();
        assert_eq!(w.kind, WeightKind::BoxcarInactive);
        let h = 0.3f64.powf(1.0 / 1.5);
        assert_relative_eq!(w.norms().1, (2.0 * h).powf(-1.5), max_relative = 1e-13);
    }

    #[test]
    fn equal_orders_above_one_are_rejected_as_degenerate() {
        assert!(matches!(build_weight(&pair(1.7, 1.7, 2), 0.1), Err(Error::Build(_))));
    }

    #[test]
    fn lambda_domain_is_enforced() {
        let a = pair(1.0, 2.0, 2);
        assert!(build_weight(&a, 0.0).is_err());
        assert!(build_weight(&a, 1.5).is_err());
    }

    #[test]
    fn marginal_averages_match_uniform_averages() {
        let w = build_weight(&pair(1.9, 2.0, 2), 0.01).unwrap();
        let (one, _) = w.marginal_averages(&|_| 1.0, &|_| 1.0);
        assert_relative_eq!(one, 1.0, epsilon = 1e-12);
        let (sq, _) = w.marginal_averages(&|t| t * t, &|_| 1.0);
        let u1 = w.u[0];
        assert_relative_eq!(sq, u1 * u1 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(sq, 2.61587e-3, max_relative = 1e-4);
        let (_, tr) = w.marginal_averages(&|_| 1.0, &|y| y[0] * y[0]);
        let vr = *w.v.last().unwrap();
        assert_relative_eq!(tr, vr * vr / 3.0, max_relative = 1e-12);
        assert_relative_eq!(tr, 8.333e-4, max_relative = 1e-3);
    }

    #[test]
    fn moments_reference_values() {
        let w = build_weight(&pair(0.7, 0.9, 2), 0.3).unwrap();
        let h = 0.3f64.powf(1.0 / 0.63);
        assert_relative_eq!(w.moment(0.0).unwrap(), w.l1, epsilon = 0.0);
        assert_relative_eq!(w.moment(2.0).unwrap(), 2.0 * h * h / 3.0, max_relative = 1e-12);
        // quadrature path agrees with the exact even route
        let w = build_weight(&pair(1.9, 2.0, 2), 0.05).unwrap();
        let exact = w.moment(2.0).unwrap();
        let quad = {
            let v = w.moment(2.0 + 1e-12).unwrap();
            v
        };
        assert_relative_eq!(exact, quad, max_relative = 1e-6);
    }

    #[test]
    fn moment_of_order_gamma_beta_scales_linearly_in_lambda() {
        let a = pair(1.6, 2.0, 2);
        let m = a.gamma * a.beta;
        let mut ratios = Vec::new();
        for k in 1..=5 {
            let lambda = 10f64.powi(-k);
            let w = build_weight(&a, lambda).unwrap();
            ratios.push(w.moment(m).unwrap() / lambda);
        }
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0f64, f64::max);
        assert!(hi / lo < 50.0, "moment/lambda must stay bounded, got {ratios:?}");
    }

    #[test]
    fn support_box_contains_all_pieces() {
        let w = build_weight(&pair(1.5, 1.99, 2), 0.05).unwrap();
        let hw = w.support_halfwidths();
        for p in &w.pieces {
            assert!(p.hi[0] <= hw[0] + 1e-15);
            assert!(p.hi[1] <= hw[1] + 1e-15);
        }
        // outside in the sup-norm sense means zero
        assert_eq!(w.eval(&[hw[0] * 1.01, 0.0]), 0.0);
        assert_eq!(w.eval(&[0.0, hw[1] * 1.01]), 0.0);
    }
}
