//! Special functions for the achievable-rate solution.
//!
//! Everything here reduces to the upper incomplete gamma function at
//! non-positive integer order:
//!
//! * `exp_integral_gamma0(t)` is `Γ(0,t) = ∫_t^∞ e^{-u}/u du`,
//! * `upper_gamma_neg(n, t)` is `Γ(-n,t)` via the closed form
//!   `((-1)^n/n!) [Γ(0,t) - e^{-t} Σ_{i=0}^{n-1} (-1)^i i!/t^{i+1}]`,
//! * `lambda_coefficient(n, t)` is `t^n e^t Γ(-n,t)`, the scale-free factor
//!   entering the rate optimisation. For large `t` the product overflows
//!   term-by-term, so past `t > 30` it is evaluated directly through the
//!   continued fraction of the incomplete gamma, in which `e^t` and `t^n`
//!   cancel exactly.

use crate::error::{BicmError, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// Switch point between series/closed-form evaluation and the continued
/// fraction for `lambda_coefficient`.
const LAMBDA_CF_THRESHOLD: f64 = 30.0;

fn check_positive(t: f64) -> Result<()> {
    if !t.is_finite() || t <= 0.0 {
        return Err(BicmError::Domain(format!(
            "argument must be finite and positive, got {t}"
        )));
    }
    Ok(())
}

/// `Γ(0,t)`, the exponential integral `E_1(t)`. Relative error below 1e-12
/// over the usable range.
pub fn exp_integral_gamma0(t: f64) -> Result<f64> {
    check_positive(t)?;
    if t <= 1.0 {
        // Power series: E1 = -γ - ln t + Σ_{k≥1} (-1)^{k+1} t^k / (k·k!)
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -t / k as f64;
            let contrib = -term / k as f64;
            sum += contrib;
            if contrib.abs() < sum.abs() * 1e-17 + 1e-300 {
                break;
            }
        }
        Ok(-EULER_GAMMA - t.ln() + sum)
    } else {
        // Modified Lentz continued fraction: E1 = e^{-t}/(t+1- 1/(t+3- 4/(t+5-...)))
        let mut b = t + 1.0;
        let mut c = 1e308;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..300u32 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        Ok(h * (-t).exp())
    }
}

/// `Γ(-n,t)` for integer `n ≥ 0` through the finite closed form.
pub fn upper_gamma_neg(n: u32, t: f64) -> Result<f64> {
    check_positive(t)?;
    let g0 = exp_integral_gamma0(t)?;
    if n == 0 {
        return Ok(g0);
    }
    // Σ_{i=0}^{n-1} (-1)^i i!/t^{i+1}
    let mut sum = 0.0;
    let mut term = 1.0 / t;
    let mut sign = 1.0;
    for i in 0..n {
        if i > 0 {
            term *= i as f64 / t;
            sign = -sign;
        }
        sum += sign * term;
    }
    let mut prefactor = 1.0;
    for i in 1..=n {
        prefactor /= i as f64;
    }
    if n % 2 == 1 {
        prefactor = -prefactor;
    }
    Ok(prefactor * (g0 - (-t).exp() * sum))
}

/// `λ(n,t) = t^n e^t Γ(-n,t)`; finite and positive for all `t > 0`.
pub fn lambda_coefficient(n: u32, t: f64) -> Result<f64> {
    check_positive(t)?;
    if t <= LAMBDA_CF_THRESHOLD {
        let g = upper_gamma_neg(n, t)?;
        Ok(t.powi(n as i32) * t.exp() * g)
    } else {
        Ok(lambda_continued_fraction(n, t))
    }
}

/// Continued fraction for `t^n e^t Γ(-n,t)`:
/// `1/(t+1+n - 1(1+n)/(t+3+n - 2(2+n)/(t+5+n - ...)))`.
fn lambda_continued_fraction(n: u32, t: f64) -> f64 {
    let nf = n as f64;
    let b0 = t + 1.0 + nf;
    let mut c = 1e308;
    let mut d = 1.0 / b0;
    let mut h = d;
    for i in 1..500u32 {
        let fi = i as f64;
        let a = -fi * (fi + nf);
        let b = b0 + 2.0 * fi;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}
