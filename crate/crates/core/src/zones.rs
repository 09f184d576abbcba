//! Smoothness-pair bookkeeping: zone classification of the square (0,2]^2,
//! rate exponents, and the pointwise rate functions used throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smoothness description of a composite function: outer order `gamma`,
/// inner order `beta`, ambient dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessPair {
    pub gamma: f64,
    pub beta: f64,
    pub dim: usize,
}

impl SmoothnessPair {
    pub fn new(gamma: f64, beta: f64, dim: usize) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!("gamma must be positive, got {gamma}")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        if dim < 2 {
            return Err(Error::Domain(format!("dim must be at least 2, got {dim}")));
        }
        Ok(Self { gamma, beta, dim })
    }

    /// True when both orders lie in the square (0, 2] where the estimator is defined.
    pub fn in_estimator_square(&self) -> bool {
        self.gamma <= 2.0 && self.beta <= 2.0
    }

    pub fn require_estimator_square(&self) -> Result<()> {
        if self.in_estimator_square() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "(gamma, beta) = ({}, {}) outside the estimator square (0,2]^2",
                self.gamma, self.beta
            )))
        }
    }

    /// Anisotropy ratio `(d-1)(gamma-1)/beta` that controls the step count of
    /// the multistep weight construction.
    pub fn rho(&self) -> f64 {
        (self.dim as f64 - 1.0) * (self.gamma - 1.0) / self.beta
    }

    /// Smoothness of the composition when the structure is ignored:
    /// `gamma*beta` when both orders are at most 1, `min(gamma, beta)` otherwise.
    pub fn effective_smoothness(&self) -> f64 {
        if self.gamma <= 1.0 && self.beta <= 1.0 {
            self.gamma * self.beta
        } else {
            self.gamma.min(self.beta)
        }
    }
}

/// Classification of the smoothness square (0,2]^2. Each zone gets its own
/// weight construction.
///
/// * `P1` — outer order at most 1, inner order above 1: the local model is a
///   single-index profile and a plain oriented rectangle suffices.
/// * `P2` — both orders above 1 with `beta >= d(gamma-1)+1`: anisotropic local
///   model, weight built from the log-spaced multistep family.
/// * `P3` — both orders above 1 with `beta < d(gamma-1)+1`: anisotropic local
///   model, weight built from the power-spaced multistep family.
/// * `P4` — no exploitable local structure; plain boxcar tuned to the
///   effective smoothness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Zone {
    P1,
    P2,
    P3,
    P4,
}

/// Which of the three cases of the rate function applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateBranch {
    /// Rate driven by the outer order through the composition structure.
    Structured,
    /// Rate equals the isotropic d-dimensional rate of the inner order.
    InnerLimited,
    /// Both orders at most 1; rate of the product smoothness.
    Slow,
}

/// Rate metadata for a smoothness pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateInfo {
    /// Power of `eps * sqrt(ln(1/eps))` in the pointwise rate; always in (0,1).
    pub exponent: f64,
    pub branch: RateBranch,
    /// Smoothness of the composition seen as an ordinary isotropic function.
    pub effective_smoothness: f64,
    /// Anisotropy ratio `(d-1)(gamma-1)/beta`.
    pub rho: f64,
}

/// Assign a smoothness pair in (0,2]^2 to its zone.
///
/// The four predicates partition the square; boundary ties follow the
/// inequalities exactly as written (no tolerance).
pub fn classify(a: &SmoothnessPair) -> Result<Zone> {
    a.require_estimator_square()?;
    let (g, b, d) = (a.gamma, a.beta, a.dim as f64);
    if g <= 1.0 && b > 1.0 && b <= 2.0 {
        return Ok(Zone::P1);
    }
    if g > 1.0 && g <= b && b <= 2.0 {
        if b >= d * (g - 1.0) + 1.0 {
            return Ok(Zone::P2);
        }
        return Ok(Zone::P3);
    }
    Ok(Zone::P4)
}

/// Rate exponent and auxiliary quantities; valid on all positive pairs, not
/// just the estimator square.
pub fn rate_info(a: &SmoothnessPair) -> RateInfo {
    let (g, b, d) = (a.gamma, a.beta, a.dim as f64);
    let ridge_boundary = d * (g - 1.0) + 1.0;
    let (exponent, branch) = if b > 1.0 && b >= ridge_boundary {
        (2.0 * g / (2.0 * g + 1.0 + (d - 1.0) / b), RateBranch::Structured)
    } else if g > 1.0 && b < ridge_boundary {
        (2.0 / (2.0 + d / b), RateBranch::InnerLimited)
    } else {
        // remaining case: gamma <= 1 and beta <= 1
        (2.0 / (2.0 + d / (g * b)), RateBranch::Slow)
    };
    RateInfo {
        exponent,
        branch,
        effective_smoothness: a.effective_smoothness(),
        rho: a.rho(),
    }
}

/// `eps * sqrt(ln(1/eps))`, the base quantity all rates are powers of.
pub fn noise_scale(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0,1), got {eps}")));
    }
    Ok(eps * (1.0 / eps).ln().sqrt())
}

/// Pointwise rate `(eps sqrt(ln 1/eps))^exponent` for the pair `a`.
pub fn phi(eps: f64, a: &SmoothnessPair) -> Result<f64> {
    Ok(noise_scale(eps)?.powf(rate_info(a).exponent))
}

/// Classical isotropic d-dimensional rate `(eps sqrt(ln 1/eps))^{2a/(2a+d)}`.
pub fn psi(eps: f64, alpha: f64, dim: usize) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    let base = noise_scale(eps)?;
    Ok(base.powf(2.0 * alpha / (2.0 * alpha + dim as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pair(g: f64, b: f64) -> SmoothnessPair {
        SmoothnessPair::new(g, b, 2).unwrap()
    }

    #[test]
    fn classify_matches_reference_points() {
        assert_eq!(classify(&pair(0.5, 1.5)).unwrap(), Zone::P1);
        assert_eq!(classify(&pair(1.3, 2.0)).unwrap(), Zone::P2);
        assert_eq!(classify(&pair(1.5, 1.8)).unwrap(), Zone::P3);
        assert_eq!(classify(&pair(0.7, 0.9)).unwrap(), Zone::P4);
        // gamma above 1 with beta below it also has no usable structure
        assert_eq!(classify(&pair(1.5, 0.5)).unwrap(), Zone::P4);
        assert_eq!(classify(&pair(2.0, 1.5)).unwrap(), Zone::P4);
    }

    #[test]
    fn classify_rejects_pairs_outside_square() {
        assert!(classify(&pair(2.5, 1.0)).is_err());
        assert!(classify(&pair(1.0, 2.5)).is_err());
    }

    #[test]
    fn rate_exponent_reference_values() {
        let r = rate_info(&pair(1.0, 2.0));
        assert_eq!(r.branch, RateBranch::Structured);
        assert_relative_eq!(r.exponent, 4.0 / 7.0, max_relative = 1e-15);

        let r = rate_info(&pair(0.5, 0.5));
        assert_eq!(r.branch, RateBranch::Slow);
        assert_relative_eq!(r.exponent, 0.2, max_relative = 1e-15);

        let r = rate_info(&pair(2.0, 1.5));
        assert_eq!(r.branch, RateBranch::InnerLimited);
        assert_relative_eq!(r.exponent, 0.6, max_relative = 1e-15);

        assert_relative_eq!(
            rate_info(&pair(0.5, 0.5)).effective_smoothness,
            0.25,
            max_relative = 1e-15
        );
    }

    #[test]
    fn inner_limited_exponent_is_isotropic_beta_rate() {
        for &(g, b) in &[(1.7, 1.2), (2.0, 1.0), (1.9, 1.5)] {
            let a = pair(g, b);
            let r = rate_info(&a);
            assert_eq!(r.branch, RateBranch::InnerLimited);
            assert_relative_eq!(r.exponent, 2.0 * b / (2.0 * b + 2.0), epsilon = 1e-15);
        }
    }

    #[test]
    fn phi_reference_values() {
        let e = 1.0 / std::f64::consts::E;
        let a = pair(1.0, 2.0);
        let expo = rate_info(&a).exponent;
        assert_relative_eq!(phi(e, &a).unwrap(), (-expo).exp(), max_relative = 1e-14);
        assert_relative_eq!(phi(0.01, &a).unwrap(), 0.11134, max_relative = 1e-4);
        assert!(phi(1.0, &a).is_err());
    }

    #[test]
    fn phi_monotone_below_half_log_threshold() {
        let a = pair(1.0, 2.0);
        let cut = (-0.5f64).exp();
        let mut prev = 0.0;
        for k in 1..40 {
            let eps = cut * k as f64 / 40.0;
            let v = phi(eps, &a).unwrap();
            assert!(v > prev, "phi must increase in eps on (0, e^-1/2)");
            prev = v;
        }
    }

    #[test]
    fn improved_zone_beats_isotropic_rate() {
        for &(g, b) in &[(0.5, 1.5), (1.0, 2.0), (1.3, 1.9)] {
            let a = pair(g, b);
            let alpha = a.effective_smoothness();
            let mut prev = f64::INFINITY;
            for k in 2..=8 {
                let eps = 10f64.powi(-k);
                let ratio = phi(eps, &a).unwrap() / psi(eps, alpha, 2).unwrap();
                assert!(ratio < prev, "ratio must decrease strictly");
                prev = ratio;
            }
            assert!(prev < 1.0);
        }
    }

    #[test]
    fn zone_and_branch_partition_grid() {
        // every grid point of (0,2]^2 carries exactly one zone and one branch
        let d = 2.0;
        for i in 1..=200 {
            for j in 1..=200 {
                let (g, b) = (i as f64 * 0.01, j as f64 * 0.01);
                let a = pair(g, b);
                let p1 = g <= 1.0 && b > 1.0 && b <= 2.0;
                let p2 = g > 1.0 && g <= b && b <= 2.0 && b >= d * (g - 1.0) + 1.0;
                let p3 = g > 1.0 && g <= b && b <= 2.0 && b < d * (g - 1.0) + 1.0;
                let p4 = (g <= 1.0 && b <= 1.0) || (g > 1.0 && b < g);
                assert_eq!(
                    [p1, p2, p3, p4].iter().filter(|&&x| x).count(),
                    1,
                    "predicates must partition at ({g}, {b})"
                );
                let z = classify(&a).unwrap();
                let expected = if p1 {
                    Zone::P1
                } else if p2 {
                    Zone::P2
                } else if p3 {
                    Zone::P3
                } else {
                    Zone::P4
                };
                assert_eq!(z, expected);

                let bound = d * (g - 1.0) + 1.0;
                let b1 = b > 1.0 && b >= bound;
                let b2 = g > 1.0 && b < bound;
                let b3 = g <= 1.0 && b <= 1.0;
                assert_eq!([b1, b2, b3].iter().filter(|&&x| x).count(), 1);
            }
        }
    }
}
