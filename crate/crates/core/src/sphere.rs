//! Deterministic quasi-uniform direction nets on the unit sphere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite set of unit vectors whose first element is always `e1`, together
/// with an estimate of its covering radius.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphereNet {
    pub directions: Vec<Vec<f64>>,
    /// Exact for d = 2 (largest angular gap); sampled estimate for d >= 3.
    pub covering_radius: f64,
}

/// Build a deterministic net of `size` directions on the sphere in `dim`
/// dimensions. Equispaced angles for d = 2, a Fibonacci lattice for d = 3 and
/// a fixed-seed isotropic sample for higher dimensions; `e1` always comes
/// first.
pub fn sphere_net(dim: usize, size: usize) -> Result<SphereNet> {
    if dim < 2 {
        return Err(Error::Domain(format!("sphere net needs dim >= 2, got {dim}")));
    }
    if size < 2 {
        return Err(Error::Domain(format!("sphere net needs size >= 2, got {size}")));
    }
    let mut directions = Vec::with_capacity(size);
    let mut e1 = vec![0.0; dim];
    e1[0] = 1.0;
    directions.push(e1);
    match dim {
        2 => {
            for k in 1..size {
                let angle = 2.0 * std::f64::consts::PI * k as f64 / size as f64;
                directions.push(vec![angle.cos(), angle.sin()]);
            }
        }
        3 => {
            directions.extend(fibonacci_sphere(size - 1));
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5fe2_9e1d);
            while directions.len() < size {
                let v: Vec<f64> = (0..dim).map(|_| standard_normal(&mut rng)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 1e-6 {
                    directions.push(v.into_iter().map(|x| x / n).collect());
                }
            }
        }
    }
    let covering_radius = if dim == 2 {
        covering_radius_circle(&directions)
    } else {
        covering_radius_sampled(dim, &directions)
    };
    Ok(SphereNet { directions, covering_radius })
}

fn fibonacci_sphere(n: usize) -> Vec<Vec<f64>> {
    // spiral points with the lattice axis mapped onto e1
    let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden_angle * k as f64;
            vec![z, r * phi.cos(), r * phi.sin()]
        })
        .collect()
}

fn covering_radius_circle(directions: &[Vec<f64>]) -> f64 {
    let mut angles: Vec<f64> = directions.iter().map(|v| v[1].atan2(v[0])).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut max_gap = 0.0f64;
    for k in 0..angles.len() {
        let next = if k + 1 < angles.len() {
            angles[k + 1]
        } else {
            angles[0] + 2.0 * std::f64::consts::PI
        };
        max_gap = max_gap.max(next - angles[k]);
    }
    2.0 * (max_gap / 4.0).sin()
}

fn covering_radius_sampled(dim: usize, directions: &[Vec<f64>]) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0de_5eed);
    let samples = 4096.max(8 * directions.len());
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let v: Vec<f64> = (0..dim).map(|_| standard_normal(&mut rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n < 1e-6 {
            continue;
        }
        let probe: Vec<f64> = v.iter().map(|x| x / n).collect();
        let best = directions
            .iter()
            .map(|d| {
                d.iter()
                    .zip(&probe)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(best);
    }
    worst
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller keeps the draw count per sample fixed
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_element_is_e1() {
        for dim in 2..=4 {
            let net = sphere_net(dim, 16).unwrap();
            assert_eq!(net.directions[0][0], 1.0);
            assert!(net.directions[0][1..].iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn all_elements_unit_norm() {
        for dim in 2..=4 {
            let net = sphere_net(dim, 33).unwrap();
            assert_eq!(net.directions.len(), 33);
            for v in &net.directions {
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn circle_covering_radius_matches_chord_bound() {
        for &n in &[8usize, 16, 64] {
            let net = sphere_net(2, n).unwrap();
            let bound = std::f64::consts::PI / n as f64;
            assert!(net.covering_radius <= bound + 1e-12);
            let exact = 2.0 * (std::f64::consts::PI / (2 * n) as f64).sin();
            assert!((net.covering_radius - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn fibonacci_net_covers_reasonably() {
        let net = sphere_net(3, 128).unwrap();
        assert!(net.covering_radius < 0.45, "got {}", net.covering_radius);
    }
}
