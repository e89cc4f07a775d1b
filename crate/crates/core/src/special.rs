//! Gamma function and the Hurst-dependent constants built from it.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Lanczos approximation (g = 7, 9 terms) with reflection below 1/2.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let series = LANCZOS_COEFFS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS_COEFFS[0], |acc, (i, &c)| acc + c / (x + i as f64 + 1.0));
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * series
}

fn check_hurst_half_open(hurst: f64) -> Result<()> {
    if !(0.5..1.0).contains(&hurst) {
        return Err(Error::param(format!("Hurst index {hurst} outside [1/2, 1)")));
    }
    Ok(())
}

/// Normalizing constant of the weighted fractional operator `K^H`:
/// `C(H) = (2H Γ(H+1/2) Γ(3/2-H) / Γ(2-2H))^{1/2}`.
pub fn c_hurst(hurst: f64) -> f64 {
    (2.0 * hurst * gamma(hurst + 0.5) * gamma(1.5 - hurst) / gamma(2.0 - 2.0 * hurst)).sqrt()
}

/// Drift constants of the hidden semimartingale representation of `exp(μt + σB^H_t)`.
///
/// Returns `(C1, C2)` with `C2 = C1 (3/2 - H)`.
pub fn c1_c2_constants(hurst: f64) -> Result<(f64, f64)> {
    check_hurst_half_open(hurst)?;
    let c1 = (1.5 - hurst).recip()
        * (gamma(1.5 - hurst)
            / (2.0 * hurst * gamma(2.0 - 2.0 * hurst) * gamma(hurst + 0.5)))
        .sqrt();
    Ok((c1, c1 * (1.5 - hurst)))
}
