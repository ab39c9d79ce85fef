use crate::error::{Error, Result};

/// Digamma Ψ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    check_domain("digamma", x)?;
    Ok(psi(x))
}

/// Trigamma Ψ'(x) for x > 0.
pub fn trigamma(x: f64) -> Result<f64> {
    check_domain("trigamma", x)?;
    Ok(psi1(x))
}

/// Tetragamma Ψ''(x) for x > 0.
pub fn tetragamma(x: f64) -> Result<f64> {
    check_domain("tetragamma", x)?;
    Ok(psi2(x))
}

/// ln Γ(x) for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    check_domain("log_gamma", x)?;
    Ok(lgamma(x))
}

fn check_domain(function: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { function, value: x })
    }
}

#[inline]
pub(crate) fn psi(x: f64) -> f64 {
    statrs::function::gamma::digamma(x)
}

#[inline]
pub(crate) fn lgamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Unchecked trigamma: upward recurrence to x >= 10, then the asymptotic series.
pub(crate) fn psi1(mut x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let r = 1.0 / x;
    let r2 = r * r;
    // Bernoulli-number coefficients B_2k for the terms r^(2k+1)
    let series = r2
        * (1.0 / 6.0
            - r2 * (1.0 / 30.0
                - r2 * (1.0 / 42.0
                    - r2 * (1.0 / 30.0
                        - r2 * (5.0 / 66.0 - r2 * (691.0 / 2730.0 - r2 * (7.0 / 6.0)))))));
    acc + r + 0.5 * r2 + r * series
}

/// Unchecked tetragamma Ψ''(x), by the same recurrence and series as [`psi1`].
pub(crate) fn psi2(mut x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 2.0 / (x * x * x);
        x += 1.0;
    }
    let r = 1.0 / x;
    let r2 = r * r;
    // (2k+1) B_2k for the terms r^(2k+2)
    let series = r2
        * r2
        * (0.5
            - r2 * (1.0 / 6.0
                - r2 * (1.0 / 6.0
                    - r2 * (3.0 / 10.0
                        - r2 * (5.0 / 6.0 - r2 * (691.0 / 210.0 - r2 * (35.0 / 2.0)))))));
    acc - r2 - r2 * r - series
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_errors() {
        assert!(digamma(0.0).is_err());
        assert!(digamma(-1.5).is_err());
        assert!(log_gamma(0.0).is_err());
        assert!(trigamma(f64::NAN).is_err());
    }

    #[test]
    fn recurrence_identities() {
        for &x in &[1e-3, 0.2, 0.9, 1.7, 4.4, 12.5, 300.0] {
            assert!((psi(x + 1.0) - psi(x) - 1.0 / x).abs() < 1e-9 * (1.0 / x).max(1.0));
            assert!(
                (psi1(x) - psi1(x + 1.0) - 1.0 / (x * x)).abs() < 1e-9 * (1.0 / (x * x)).max(1.0)
            );
            let cube = x * x * x;
            assert!((psi2(x + 1.0) - psi2(x) - 2.0 / cube).abs() < 1e-9 * (2.0 / cube).max(1.0));
        }
    }

    #[test]
    fn trigamma_matches_finite_difference_of_digamma() {
        for &x in &[0.05, 0.5, 2.0, 9.9, 10.1, 55.0] {
            let h = 1e-5 * x;
            let fd = (psi(x + h) - psi(x - h)) / (2.0 * h);
            assert!((fd - psi1(x)).abs() < 1e-6 * psi1(x), "x={x}");
        }
    }
}
