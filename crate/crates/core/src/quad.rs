//! Cached Gauss rules.

use std::sync::OnceLock;

use gauss_quad::{GaussHermite, GaussLegendre};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, 8 points.
pub(crate) fn legendre8() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        GaussLegendre::new(8)
            .expect("degree 8 is valid")
            .iter()
            .map(|&(x, w)| (x, w))
            .collect()
    })
}

/// Gauss–Hermite nodes and weights for weight `e^{-x²}`, 64 points.
pub(crate) fn hermite64() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        GaussHermite::new(64)
            .expect("degree 64 is valid")
            .iter()
            .map(|&(x, w)| (x, w))
            .collect()
    })
}

/// `∫_a^b f` with the 8-point Legendre rule.
pub(crate) fn legendre_panel(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    half * legendre8().iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let v = legendre_panel(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
    }

    #[test]
    fn hermite_moments() {
        let rule = hermite64();
        let m0: f64 = rule.iter().map(|p| p.1).sum();
        let m2: f64 = rule.iter().map(|p| p.1 * p.0 * p.0).sum();
        let pi = std::f64::consts::PI;
        assert!((m0 - pi.sqrt()).abs() < 1e-12);
        assert!((m2 - 0.5 * pi.sqrt()).abs() < 1e-12);
    }
}
