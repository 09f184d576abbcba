//! Small quadrature toolbox: Gauss–Legendre rules and tensorized box
//! integration used by the analytic weight checks.

use std::sync::OnceLock;

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence. Exact for polynomials of degree 2n-1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-style initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        let (_, d) = legendre_with_derivative(n, 0.0);
        nodes[n / 2] = 0.0;
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn cached_rule(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static RULES: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    let rules = RULES.get_or_init(|| [8, 16, 24, 32].iter().map(|&k| gauss_legendre(k)).collect());
    match n {
        8 => &rules[0],
        16 => &rules[1],
        24 => &rules[2],
        32 => &rules[3],
        _ => panic!("uncached rule size {n}"),
    }
}

/// Integral of `f` over the interval [lo, hi] with a cached n-point rule.
pub fn integrate_interval(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let (nodes, weights) = cached_rule(n);
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Integral of `f` over the axis-aligned box given by per-axis bounds,
/// tensorizing an n-point rule per axis.
pub fn integrate_box(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], n: usize) -> f64 {
    let dim = lo.len();
    let (nodes, weights) = cached_rule(n);
    let mut point = vec![0.0; dim];
    let mut jacobian = 1.0;
    for k in 0..dim {
        jacobian *= 0.5 * (hi[k] - lo[k]);
    }
    let mut acc = 0.0;
    let mut idx = vec![0usize; dim];
    'outer: loop {
        let mut w = 1.0;
        for k in 0..dim {
            let t = nodes[idx[k]];
            point[k] = 0.5 * (lo[k] + hi[k]) + 0.5 * (hi[k] - lo[k]) * t;
            w *= weights[idx[k]];
        }
        acc += w * f(&point);
        for k in 0..dim {
            idx[k] += 1;
            if idx[k] < n {
                continue 'outer;
            }
            idx[k] = 0;
        }
        break;
    }
    acc * jacobian
}
