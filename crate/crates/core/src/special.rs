//! Gamma function, reciprocal Gamma, unit-ball volumes and binomials.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;

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

/// Tolerance used to decide that an argument sits on a pole.
pub const POLE_TOLERANCE: f64 = 1e-12;

/// Γ(x) for 0.5 ≤ x, Lanczos g = 7.
fn lanczos_gamma(x: f64) -> f64 {
    let z = x - 1.0;
    let mut sum = LANCZOS_COEFFS[0];
    for (k, &c) in LANCZOS_COEFFS[1..].iter().enumerate() {
        sum += c / (z + (k + 1) as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    // Split the power so large arguments do not overflow early.
    let half = t.powf(0.5 * (z + 0.5));
    (2.0 * PI).sqrt() * half * (half * (-t).exp()) * sum
}

/// sin(πx) with exact argument reduction, so values near integers keep
/// full relative accuracy.
pub fn sin_pi(x: f64) -> f64 {
    let n = x.round();
    let r = x - n;
    let s = (PI * r).sin();
    if (n as i64) % 2 == 0 {
        s
    } else {
        -s
    }
}

fn exact_factorial(x: f64) -> Option<f64> {
    if x >= 1.0 && x <= 171.0 && x.fract() == 0.0 {
        let mut acc = 1.0;
        let mut k = 2.0;
        while k < x {
            acc *= k;
            k += 1.0;
        }
        Some(acc)
    } else {
        None
    }
}

fn near_pole(x: f64) -> bool {
    x <= POLE_TOLERANCE && (x - x.round()).abs() < POLE_TOLERANCE
}

/// Γ(x) for real `x` outside the poles {0, −1, −2, …}.
///
/// Positive integers are returned exactly; negative arguments go through the
/// reflection formula Γ(x)Γ(1−x) = π / sin(πx).
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma of non-finite {x}")));
    }
    if near_pole(x) {
        return Err(Error::GammaPole(x));
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if let Some(f) = exact_factorial(x) {
        return f;
    }
    if x < 0.5 {
        PI / (sin_pi(x) * lanczos_gamma(1.0 - x))
    } else {
        lanczos_gamma(x)
    }
}

/// 1/Γ(x), an entire function: exactly zero at the poles of Γ and accurate
/// in their neighbourhood.
pub fn recip_gamma(x: f64) -> f64 {
    if x <= 0.0 && x.fract() == 0.0 {
        return 0.0;
    }
    if x < 0.5 {
        sin_pi(x) * lanczos_gamma(1.0 - x) / PI
    } else if x > 171.0 {
        0.0
    } else {
        1.0 / gamma_unchecked(x)
    }
}

/// Volume of the unit ball in ℝ^m, κ_m = π^{m/2} / Γ(m/2 + 1).
pub fn kappa(m: usize) -> f64 {
    let half = m as f64 / 2.0;
    PI.powf(half) * recip_gamma(half + 1.0)
}

/// Surface area of the unit sphere S^{m−1}, equal to m·κ_m.
pub fn sphere_area(m: usize) -> f64 {
    m as f64 * kappa(m)
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}
