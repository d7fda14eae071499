//! Inverse Gaussian law IG(μ, λ), the exponential integral, and the moment
//! formulas for `X_W ~ IG(1/W, 1)`.
//!
//! `μ = ∞` is allowed throughout: it is the Lévy law with density
//! `√(λ/(2πx³)) e^{−λ/(2x)}`, the `μ → ∞` limit of IG(μ, λ).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad;

/// Euler–Mascheroni constant.
pub const GAMMA_EM: f64 = 0.577_215_664_901_532_9;
/// `γ + ln 2`.
pub const C2: f64 = 1.270_362_845_461_478_2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IgParams {
    pub mu: f64,
    pub lambda: f64,
}

impl IgParams {
    /// Requires `μ ∈ (0, ∞]` and `λ ∈ (0, ∞)`.
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        if !(mu > 0.0) || !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::domain(format!("IG parameters mu = {mu}, lambda = {lambda}")));
        }
        Ok(IgParams { mu, lambda })
    }

    pub fn mean(&self) -> f64 {
        self.mu
    }

    pub fn variance(&self) -> f64 {
        self.mu.powi(3) / self.lambda
    }

    /// Mode `μ(√(1 + (3μ/2λ)²) − 3μ/2λ)`.
    pub fn mode(&self) -> f64 {
        if self.mu.is_infinite() {
            return self.lambda / 3.0;
        }
        let k = 1.5 * self.mu / self.lambda;
        // same value as mu * (sqrt(1 + k^2) - k), without cancellation
        self.mu / ((1.0 + k * k).sqrt() + k)
    }
}

impl Distribution<f64> for IgParams {
    /// Transformation with one uniform choice between the two roots `x` and
    /// `μ²/x` of the chi-square equation. The root is written so that huge or
    /// infinite `μ` loses no precision.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v: f64 = rng.sample(StandardNormal);
        let v2 = v * v;
        let r = 4.0 * self.lambda / (self.mu * v2);
        let d = 1.0 + (1.0 + r).sqrt();
        let x = 4.0 * self.lambda / (v2 * d * d);
        let u: f64 = rng.random();
        if u * (1.0 + x / self.mu) <= 1.0 {
            x
        } else {
            self.mu * (self.mu / x)
        }
    }
}

pub fn ig_sample<R: Rng + ?Sized>(p: &IgParams, rng: &mut R) -> f64 {
    p.sample(rng)
}

pub fn ig_density(x: f64, p: &IgParams) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("IG density at x = {x}")));
    }
    let d = x / p.mu - 1.0;
    Ok((p.lambda / (2.0 * std::f64::consts::PI * x.powi(3))).sqrt()
        * (-p.lambda * d * d / (2.0 * x)).exp())
}

/// `Φ(√(λ/x)(x/μ − 1)) + e^{2λ/μ} Φ(−√(λ/x)(x/μ + 1))`.
pub fn ig_cdf(x: f64, p: &IgParams) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    let s = (p.lambda / x).sqrt();
    let phi_neg = |z: f64| 0.5 * erfc(z / std::f64::consts::SQRT_2);
    let a = phi_neg(-s * (x / p.mu - 1.0));
    let tail = phi_neg(s * (x / p.mu + 1.0));
    let b = if tail > 0.0 { (2.0 * p.lambda / p.mu + tail.ln()).exp() } else { 0.0 };
    (a + b).min(1.0)
}

/// CDF by quadrature of [`ig_density`].
pub fn ig_cdf_quadrature(x: f64, p: &IgParams) -> Result<f64> {
    if !(x > 0.0) {
        return Ok(0.0);
    }
    quad::integrate(|t| if t > 0.0 { ig_density(t, p).unwrap_or(0.0) } else { 0.0 }, 0.0, x, 1e-13, 1e-12)
}

/// `E[e^{tX}] = exp((λ/μ)(1 − √(1 − 2μ²t/λ)))` for `t ≤ λ/(2μ²)`.
pub fn ig_laplace(t: f64, p: &IgParams) -> Result<f64> {
    let (mu, lambda) = (p.mu, p.lambda);
    if mu.is_infinite() {
        if t > 0.0 {
            return Err(Error::domain(format!("t = {t} above threshold 0")));
        }
        return Ok((-(-2.0 * lambda * t).sqrt()).exp());
    }
    let threshold = lambda / (2.0 * mu * mu);
    if t > threshold {
        return Err(Error::domain(format!("t = {t} above threshold {threshold}")));
    }
    let z = 2.0 * mu * mu * t / lambda;
    // (λ/μ)(1 − √(1−z)) rewritten as 2μt / (1 + √(1−z))
    Ok((2.0 * mu * t / (1.0 + (1.0 - z).max(0.0).sqrt())).exp())
}

/// `e^x E₁(x)` for `x ≥ 1.5` by continued fraction.
fn e1_scaled_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        term *= -x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    -GAMMA_EM - x.ln() - sum
}

/// Exponential integral `E₁(x) = ∫_x^∞ e^{−u}/u du`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("E1 at x = {x}")));
    }
    Ok(if x < 1.5 { e1_series(x) } else { e1_scaled_cf(x) * (-x).exp() })
}

/// `e^x E₁(x)`, finite for all `x > 0`.
pub fn exp_integral_e1_scaled(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("E1 at x = {x}")));
    }
    Ok(if x < 1.5 { e1_series(x) * x.exp() } else { e1_scaled_cf(x) })
}

/// `C_α = 2^{−α} Γ(½ − α) / √π` for `α ∈ [0, ½)`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&alpha) {
        return Err(Error::domain(format!("C_alpha needs 0 <= alpha < 1/2, got {alpha}")));
    }
    Ok(2f64.powf(-alpha) * gamma(0.5 - alpha) / std::f64::consts::PI.sqrt())
}

/// `E[X_W^α]` for `X_W ~ IG(1/W, 1)` and `α ∈ [0, 1]`.
///
/// Integrates `(2π)^{-1/2} x^{α−3/2} e^{−(Wx−1)²/(2x)}` in `s = ln x`, where
/// the integrand is smooth and both tails are doubly exponential.
pub fn frac_moment(w: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain(format!("fractional moment needs 0 <= alpha <= 1, got {alpha}")));
    }
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::domain(format!("fractional moment needs W > 0, got {w}")));
    }
    if alpha == 0.0 {
        return Ok(1.0);
    }
    let g = |s: f64| {
        let x = s.exp();
        let d = w * x - 1.0;
        ((alpha - 0.5) * s - d * d / (2.0 * x)).exp()
    };
    // e^{-s}/2 and W²e^s/2 each exceed 800 outside this window
    let lo = -(1600f64).ln();
    let hi = (1600.0 / (w * w)).ln();
    let v = quad::integrate(g, lo, hi, 1e-13, 1e-13)?;
    Ok(v / (2.0 * std::f64::consts::PI).sqrt())
}

/// `E[ln X_W] = −ln W − e^{2W} E₁(2W)`.
pub fn log_moment(w: f64) -> Result<f64> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::domain(format!("log moment needs W > 0, got {w}")));
    }
    Ok(-w.ln() - exp_integral_e1_scaled(2.0 * w)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn density_normalized_with_mean_mu() {
        for &(mu, lambda) in &[(0.1, 1.0), (1.0, 1.0), (2.0, 0.5), (10.0, 1.0)] {
            let p = IgParams::new(mu, lambda).unwrap();
            let mass = quad::integrate_to_infinity(|x| if x > 0.0 { ig_density(x, &p).unwrap() } else { 0.0 }, 0.0, 1e-12, 1e-12).unwrap();
            let mean = quad::integrate_to_infinity(|x| if x > 0.0 { x * ig_density(x, &p).unwrap() } else { 0.0 }, 0.0, 1e-12, 1e-12).unwrap();
            assert_relative_eq!(mass, 1.0, epsilon = 1e-8);
            assert_relative_eq!(mean, mu, epsilon = 1e-8 * mu.max(1.0));
        }
    }

    #[test]
    fn mode_matches_grid_argmax() {
        for &(mu, lambda) in &[(1.0, 1.0), (2.0, 0.5), (0.3, 4.0)] {
            let p = IgParams::new(mu, lambda).unwrap();
            let (mut best, mut arg) = (0.0, 0.0);
            for k in 1..200_000 {
                let x = k as f64 * 1e-5 * 4.0 * mu;
                let f = ig_density(x, &p).unwrap();
                if f > best {
                    best = f;
                    arg = x;
                }
            }
            assert!((arg - p.mode()).abs() <= 4e-5 * mu);
        }
    }

    #[test]
    fn cdf_closed_form_matches_quadrature() {
        for &(mu, lambda) in &[(0.1, 1.0), (1.0, 1.0), (10.0, 1.0), (2.0, 0.5), (f64::INFINITY, 1.0)] {
            let p = IgParams::new(mu, lambda).unwrap();
            for &x in &[0.01, 0.1, 0.5, 1.0, 3.0, 20.0] {
                assert_relative_eq!(ig_cdf(x, &p), ig_cdf_quadrature(x, &p).unwrap(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn laplace_examples() {
        let p = IgParams::new(2.0, 3.0).unwrap();
        assert_eq!(ig_laplace(0.0, &p).unwrap(), 1.0);
        let t = 3.0 / 8.0;
        assert_relative_eq!(ig_laplace(t, &p).unwrap(), (1.5f64).exp(), epsilon = 1e-14);
        assert!(ig_laplace(t + 1e-9, &p).is_err());
        let a = 1.7;
        let p = IgParams::new(a / 2.0, a * a / 2.0).unwrap();
        for s in [0.25, 1.0, 4.0] {
            assert_relative_eq!(ig_laplace(1.0 - s, &p).unwrap(), (a * (1.0 - f64::sqrt(s))).exp(), epsilon = 1e-13);
        }
    }

    #[test]
    fn sampler_stable_for_huge_mean() {
        // IG(μ, 1) for μ → ∞ tends to 1/Z²; the sampler must stay positive
        let mut r = rng(1);
        for mu in [1e8, 1e50, 1e200, f64::INFINITY] {
            let p = IgParams::new(mu, 1.0).unwrap();
            for _ in 0..1000 {
                let x = p.sample(&mut r);
                assert!(x > 0.0, "mu {mu} gave {x}");
            }
        }
    }

    #[test]
    fn sampler_mean() {
        let p = IgParams::new(2.0, 1.0).unwrap();
        let mut r = rng(2);
        let n = 200_000;
        let mean = (0..n).map(|_| p.sample(&mut r)).sum::<f64>() / n as f64;
        let se = (p.variance() / n as f64).sqrt();
        assert!((mean - 2.0).abs() < 4.0 * se);
    }

    #[test]
    fn e1_values() {
        assert_relative_eq!(exp_integral_e1(1.0).unwrap(), 0.219_383_934_395_520_3, max_relative = 1e-13);
        let q = quad::integrate_to_infinity(|u| (-u).exp() / u, 1.0, 1e-15, 1e-14).unwrap();
        assert_relative_eq!(exp_integral_e1(1.0).unwrap(), q, max_relative = 1e-12);
        assert_relative_eq!(e1_series(1.5), e1_scaled_cf(1.5) * (-1.5f64).exp(), max_relative = 1e-13);
        for x in [0.01, 0.3, 1.0, 2.0, 7.0, 30.0] {
            let s = exp_integral_e1_scaled(x).unwrap();
            assert!(s <= (1.0 + 1.0 / x).ln());
        }
        for x in [10.0, 100.0] {
            let s = exp_integral_e1_scaled(x).unwrap();
            let q = quad::integrate_to_infinity(|t| (-t).exp() / (x + t), 0.0, 1e-15, 1e-14).unwrap();
            assert_relative_eq!(s, q, max_relative = 1e-12);
            assert!((x * s - 1.0).abs() < 1.5 / x);
        }
        assert!(exp_integral_e1(0.0).is_err());
    }

    #[test]
    fn constants() {
        let g = quad::integrate_to_infinity(|t| if t > 0.0 { -(-t).exp() * t.ln() } else { 0.0 }, 0.0, 1e-15, 1e-15).unwrap();
        assert_relative_eq!(g, GAMMA_EM, epsilon = 1e-12);
        assert_relative_eq!(C2, GAMMA_EM + 2f64.ln(), epsilon = 1e-15);
        assert_eq!(c_alpha(0.0).unwrap(), 1.0);
        // Γ(1/4) = 3.625609908221908...
        let oracle = 2f64.powf(-0.25) * 3.625_609_908_221_908 / std::f64::consts::PI.sqrt();
        assert_relative_eq!(c_alpha(0.25).unwrap(), oracle, max_relative = 1e-13);
        assert!((c_alpha(0.25).unwrap() - 1.720_22).abs() < 1e-3);
        let mut prev = 0.0;
        for k in 0..50 {
            let c = c_alpha(0.49 * k as f64 / 49.0).unwrap();
            assert!(c > prev);
            prev = c;
        }
        assert!(c_alpha(0.4999999).unwrap() > 1e6);
        assert!(c_alpha(0.5).is_err());
    }

    /// `K_ν(z) = π (I_{−ν}(z) − I_ν(z)) / (2 sin νπ)` by power series.
    fn bessel_k(nu: f64, z: f64) -> f64 {
        let i = |v: f64| {
            let mut sum = 0.0;
            for k in 0..60 {
                let t = (z / 2.0).powf(2.0 * k as f64 + v) / (gamma(k as f64 + 1.0) * gamma(k as f64 + v + 1.0));
                sum += t;
            }
            sum
        };
        std::f64::consts::PI * (i(-nu) - i(nu)) / (2.0 * (nu * std::f64::consts::PI).sin())
    }

    /// `E[X^α] = √(2/π) e^W W^{½−α} K_{½−α}(W)` for `X ~ IG(1/W, 1)`.
    fn bessel_moment(w: f64, alpha: f64) -> f64 {
        let nu = 0.5 - alpha;
        (2.0 / std::f64::consts::PI).sqrt() * w.exp() * w.powf(nu) * bessel_k(nu, w)
    }

    #[test]
    fn frac_moment_properties() {
        assert_eq!(frac_moment(0.3, 0.0).unwrap(), 1.0);
        // α = 1 is the mean 1/W
        for w in [0.05, 1.0, 8.0] {
            assert_relative_eq!(frac_moment(w, 1.0).unwrap(), 1.0 / w, max_relative = 1e-9);
        }
        // the gap to C_α closes like W^{1−2α}
        let c = c_alpha(0.25).unwrap();
        assert!((frac_moment(1e-8, 0.25).unwrap() - c).abs() < 1e-3);
        assert!((frac_moment(1e-4, 0.25).unwrap() - c).abs() > 1e-2);
        for alpha in [0.1, 0.25, 0.4, 0.7, 0.9] {
            for w in [1e-4, 0.01, 0.3, 1.0, 2.0] {
                assert_relative_eq!(frac_moment(w, alpha).unwrap(), bessel_moment(w, alpha), max_relative = 1e-9);
            }
        }
        for alpha in [0.1, 0.25, 0.4, 0.75, 1.0] {
            let mut prev = f64::INFINITY;
            for k in 0..40 {
                let w = 0.01 * 1000f64.powf(k as f64 / 39.0);
                let m = frac_moment(w, alpha).unwrap();
                assert!(m < prev);
                assert!(m <= w.powf(-alpha) * (1.0 + 1e-12));
                if alpha < 0.5 {
                    assert!(m <= c_alpha(alpha).unwrap());
                }
                prev = m;
            }
        }
        assert!(frac_moment(1.0, 1.1).is_err());
    }

    #[test]
    fn log_moment_forms_agree() {
        for w in [0.1, 1.0, 5.0] {
            let t = 2.0 * w;
            // substitute t = 2W s² to tame the log singularity
            let inner = quad::integrate(|s| {
                if s <= 0.0 { return 0.0; }
                let x = t * s * s;
                (x.ln() + GAMMA_EM) * (-x).exp() * 2.0 * t * s
            }, 0.0, 1.0, 1e-15, 1e-14).unwrap();
            let second = t.exp() * inner + C2;
            assert_relative_eq!(log_moment(w).unwrap(), second, epsilon = 1e-10);
        }
        assert!((log_moment(1e-9).unwrap() - C2).abs() < 1e-3);
    }

    #[test]
    fn log_moment_bounds() {
        for k in 0..50 {
            let w = 1e-4 * 1e6f64.powf(k as f64 / 49.0);
            let v = log_moment(w).unwrap();
            assert!(v <= (-w.ln()).min(C2));
            assert!(v >= -(w + 0.5).ln());
            if w <= 0.5 * (-GAMMA_EM).exp() {
                assert!(v >= C2 + 4.0 * w * (w.ln() + C2 - 1.0));
            }
        }
    }
}
