//! Bessel-function helpers on top of `puruspe`.

use std::f64::consts::PI;

/// Above this argument `e^{-z} I_nu(z)` comes from the large-z expansion.
const ASYMPTOTIC_Z: f64 = 600.0;

pub fn bessel_j0(x: f64) -> f64 {
    puruspe::Jn(0, x)
}

pub fn bessel_j1(x: f64) -> f64 {
    puruspe::Jn(1, x)
}

/// `e^{-z} I_nu(z)` for `z > 0` and `nu > -1` (negative orders through the reflection with `K_nu`).
pub fn scaled_bessel_i(nu: f64, z: f64) -> f64 {
    assert!(z > 0.0, "scaled_bessel_i needs z > 0, got {z}");
    if z > ASYMPTOTIC_Z {
        // e^{-z} I_nu(z) ~ (2 pi z)^{-1/2} sum_k (-1)^k a_k(nu) / z^k
        let mu = 4.0 * nu * nu;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..30 {
            let kf = k as f64;
            term *= -(mu - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf * z);
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return sum / (2.0 * PI * z).sqrt();
    }
    let ez = (-z).exp();
    if nu >= 0.0 {
        puruspe::Inu_Knu(nu, z).0 * ez
    } else {
        let (i, k) = puruspe::Inu_Knu(-nu, z);
        // I_{-nu} = I_nu + (2/pi) sin(nu pi) K_nu
        (i + 2.0 / PI * (-nu * PI).sin() * k) * ez
    }
}

pub fn gamma(x: f64) -> f64 {
    puruspe::gamma(x)
}
