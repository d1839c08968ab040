//! Beta-distributed wind plant output on `[0, capacity]`.
//!
//! The second moment entering the prosumer and community costs is obtained
//! from the iterated CDF integrals
//! `CF(w) = ∫₀^w F` and `CCF(w) = ∫₀^w CF`, using
//! `E[w²] = cap² − 2 (cap·CF(cap) − CCF(cap))`.

use statrs::function::beta::{beta_reg, ln_beta};

use crate::error::{Error, Result};
use crate::quadrature::integrate;

/// Absolute tolerance for the CF/CCF quadratures.
pub const QUAD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaWind {
    pub alpha: f64,
    pub beta: f64,
    pub capacity: f64,
}

impl BetaWind {
    pub fn new(alpha: f64, beta: f64, capacity: f64) -> Result<Self> {
        if !(alpha > 1.0 && beta > 1.0) {
            return Err(Error::Parameter(format!(
                "beta shapes must exceed 1, got alpha = {alpha}, beta = {beta}"
            )));
        }
        if !(capacity > 0.0 && capacity.is_finite()) {
            return Err(Error::Parameter(format!(
                "capacity must be > 0, got {capacity}"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            capacity,
        })
    }

    /// Builds the model from a physical mean (MWh) and a percentage spread.
    pub fn from_spread(mean: f64, spread: f64, capacity: f64) -> Result<Self> {
        let m = mean / capacity;
        match_moments(mean, variance_from_spread(spread, m), capacity)
    }

    pub fn mean(&self) -> f64 {
        self.capacity * self.alpha / (self.alpha + self.beta)
    }

    pub fn variance(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.capacity * self.capacity * self.alpha * self.beta / (s * s * (s + 1.0))
    }

    pub fn normalized_mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn normalized_variance(&self) -> f64 {
        self.variance() / (self.capacity * self.capacity)
    }

    fn check_support(&self, w: f64) -> Result<f64> {
        if !(0.0..=self.capacity).contains(&w) {
            return Err(Error::Domain(format!(
                "w = {w} outside [0, {}]",
                self.capacity
            )));
        }
        Ok(w / self.capacity)
    }

    pub fn pdf(&self, w: f64) -> Result<f64> {
        let x = self.check_support(w)?;
        if x == 0.0 || x == 1.0 {
            return Ok(0.0);
        }
        let ln = (self.alpha - 1.0) * x.ln() + (self.beta - 1.0) * (1.0 - x).ln()
            - ln_beta(self.alpha, self.beta);
        Ok(ln.exp() / self.capacity)
    }

    pub fn cdf(&self, w: f64) -> Result<f64> {
        let x = self.check_support(w)?;
        Ok(self.cdf_unchecked(x))
    }

    fn cdf_unchecked(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            beta_reg(self.alpha, self.beta, x)
        }
    }

    /// `CF(w) = ∫₀^w F(s) ds`.
    pub fn cf(&self, w: f64) -> Result<f64> {
        self.check_support(w)?;
        let cap = self.capacity;
        integrate(|s| self.cdf_unchecked(s / cap), 0.0, w, QUAD_TOL)
    }

    /// `CCF(w) = ∫₀^w CF(s) ds`, evaluated as `∫₀^w (w − s) F(s) ds`.
    pub fn ccf(&self, w: f64) -> Result<f64> {
        self.check_support(w)?;
        let cap = self.capacity;
        integrate(|s| (w - s) * self.cdf_unchecked(s / cap), 0.0, w, QUAD_TOL)
    }

    /// `(CF(cap), CCF(cap))`.
    pub fn cf_ccf(&self) -> Result<(f64, f64)> {
        Ok((self.cf(self.capacity)?, self.ccf(self.capacity)?))
    }

    /// `E[w²]` through the CF/CCF expression.
    pub fn second_moment(&self) -> Result<f64> {
        let (cf, ccf) = self.cf_ccf()?;
        let cap = self.capacity;
        Ok(cap * cap - 2.0 * (cap * cf - ccf))
    }
}

/// Normalized variance implied by a percentage spread: `(ν/100)·m(1−m)`,
/// with the fraction clipped to 1 (which then fails the shape check).
pub fn variance_from_spread(spread: f64, normalized_mean: f64) -> f64 {
    let frac = (spread / 100.0).min(1.0);
    frac * normalized_mean * (1.0 - normalized_mean)
}

/// Method-of-moments fit from a physical mean and a normalized variance
/// (variance of `w / capacity`).
pub fn match_moments(mean: f64, normalized_variance: f64, capacity: f64) -> Result<BetaWind> {
    if !(capacity > 0.0 && capacity.is_finite()) {
        return Err(Error::Parameter(format!(
            "capacity must be > 0, got {capacity}"
        )));
    }
    let m = mean / capacity;
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::Parameter(format!(
            "mean {mean} must lie strictly inside (0, {capacity})"
        )));
    }
    let bound = m * (1.0 - m);
    if !(normalized_variance > 0.0 && normalized_variance < bound) {
        return Err(Error::Parameter(format!(
            "normalized variance {normalized_variance} must lie in (0, m(1-m) = {bound})"
        )));
    }
    let k = bound / normalized_variance - 1.0;
    let (alpha, beta) = (m * k, (1.0 - m) * k);
    if alpha <= 1.0 {
        return Err(Error::Parameter(format!(
            "implied alpha = {alpha} must exceed 1"
        )));
    }
    if beta <= 1.0 {
        return Err(Error::Parameter(format!(
            "implied beta = {beta} must exceed 1"
        )));
    }
    BetaWind::new(alpha, beta, capacity)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn beta22_density_at_midpoint() {
        let m = BetaWind::new(2.0, 2.0, 1.0).unwrap();
        // 6 w (1 - w)
        assert!(close(m.pdf(0.5).unwrap(), 1.5, 1e-12));
        assert!(close(m.pdf(0.2).unwrap(), 6.0 * 0.2 * 0.8, 1e-12));
        assert_eq!(m.pdf(0.0).unwrap(), 0.0);
    }

    #[test]
    fn pdf_outside_support_is_domain_error() {
        let m = BetaWind::new(2.0, 3.0, 10.0).unwrap();
        assert!(matches!(m.pdf(-0.1), Err(Error::Domain(_))));
        assert!(matches!(m.cdf(10.5), Err(Error::Domain(_))));
    }

    #[test]
    fn pdf_integrates_to_one() {
        for (a, b, cap) in [(2.0, 2.0, 1.0), (1.7, 4.2, 10.0), (6.0, 1.3, 3.5)] {
            let m = BetaWind::new(a, b, cap).unwrap();
            let total = integrate(|w| m.pdf(w).unwrap(), 0.0, cap, 1e-11).unwrap();
            assert!(close(total, 1.0, 1e-8), "{a} {b} {cap}: {total}");
        }
    }

    #[test]
    fn beta22_second_moment() {
        let m = BetaWind::new(2.0, 2.0, 1.0).unwrap();
        assert!(close(m.second_moment().unwrap(), 0.3, 1e-6));
    }

    #[test]
    fn near_deterministic_second_moment_tends_to_mean_squared() {
        let m = BetaWind::new(2e4, 2e4, 10.0).unwrap();
        let mean = m.mean();
        let got = m.second_moment().unwrap();
        assert!(close(got, mean * mean, 1e-3), "{got}");
    }

    #[test]
    fn cdf_is_monotone() {
        let m = BetaWind::new(2.5, 3.5, 10.0).unwrap();
        let mut prev = 0.0;
        for k in 0..=100 {
            let f = m.cdf(k as f64 * 0.1).unwrap();
            assert!(f >= prev);
            prev = f;
        }
        assert!(close(prev, 1.0, 1e-15));
    }

    #[test]
    fn moment_match_examples() {
        let m = match_moments(0.5, 0.05, 1.0).unwrap();
        assert!(close(m.alpha, 2.0, 1e-12) && close(m.beta, 2.0, 1e-12));
        let m = match_moments(5.0, 0.05, 10.0).unwrap();
        assert!(close(m.alpha, 2.0, 1e-12) && close(m.beta, 2.0, 1e-12));
        assert!(close(m.mean(), 5.0, 1e-12));
    }

    #[test]
    fn variance_at_bound_is_rejected() {
        assert!(matches!(
            match_moments(0.5, 0.25, 1.0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            match_moments(0.5, 0.25 - 1e-12, 1.0),
            Err(Error::Parameter(_))
        ));
        // alpha <= 1 for a skewed mean
        assert!(matches!(
            match_moments(0.1, 0.02, 1.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn spread_of_twenty_percent() {
        let m = BetaWind::from_spread(5.0, 20.0, 10.0).unwrap();
        // m(1-m)/v² = 5, so alpha + beta = 4.
        assert!(close(m.alpha, 2.0, 1e-12) && close(m.beta, 2.0, 1e-12));
        assert!(BetaWind::from_spread(2.0, 20.0, 10.0).is_err());
        assert!(BetaWind::from_spread(5.0, 100.0, 10.0).is_err());
    }
}
