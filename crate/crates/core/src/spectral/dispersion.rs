//! Dispersion relations: closed forms for the Grover coins and a numeric model
//! for anything else.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::coin::{coin_index, CoinMatrix, Direction};
use crate::error::{QwError, Result};
use crate::spectral::eigen::eigensystem_at;

/// Denominators below this make a group velocity undefined.
pub const SINGULAR_TOL: f64 = 1e-9;

/// A labeled family of dispersion sheets `omega^(s)(k)`, `s = 1..=branches`.
pub trait DispersionModel: Send + Sync {
    fn name(&self) -> &str;
    fn dim_n(&self) -> usize;
    fn branches(&self) -> usize {
        2 * self.dim_n()
    }
    /// All phases at `k`, in branch order.
    fn omegas(&self, k: &[f64]) -> Result<Vec<f64>>;
    fn omega(&self, k: &[f64], s: usize) -> Result<f64> {
        self.check_branch(s)?;
        Ok(self.omegas(k)?[s - 1])
    }
    /// `grad_k omega^(s)`.
    fn group_velocity(&self, k: &[f64], s: usize) -> Result<Vec<f64>>;
    /// Closed-form Hessian, when one is available.
    fn analytic_hessian(&self, _k: &[f64], _s: usize) -> Option<Result<Vec<Vec<f64>>>> {
        None
    }
    fn is_flat(&self, _s: usize) -> bool {
        false
    }
    fn check_branch(&self, s: usize) -> Result<()> {
        if s == 0 || s > self.branches() {
            return Err(QwError::invalid(format!(
                "branch {s} out of range 1..={}",
                self.branches()
            )));
        }
        Ok(())
    }
    fn check_k(&self, k: &[f64]) -> Result<()> {
        if k.len() != self.dim_n() {
            return Err(QwError::DimensionMismatch {
                expected: self.dim_n(),
                found: k.len(),
            });
        }
        Ok(())
    }
}

/// `Omega = arccos((cos k1 + cos k2) / 2)` without cancellation near 0 or pi.
pub fn grover2d_omega(k: &[f64]) -> f64 {
    let u = 0.5 * (k[0].cos() + k[1].cos());
    if u >= 0.0 {
        let one_minus = (k[0] / 2.0).sin().powi(2) + (k[1] / 2.0).sin().powi(2);
        2.0 * (0.5 * one_minus).sqrt().min(1.0).asin()
    } else {
        let one_plus = (k[0] / 2.0).cos().powi(2) + (k[1] / 2.0).cos().powi(2);
        PI - 2.0 * (0.5 * one_plus).sqrt().min(1.0).asin()
    }
}

/// Third-order expansion of `Omega` around `k = 0` along azimuth `theta`:
/// `k / sqrt2 - k^3 cos^2(2 theta) / (48 sqrt2)`.
pub fn grover2d_cone_series(k: f64, theta: f64) -> f64 {
    k / SQRT_2 - k.powi(3) * (2.0 * theta).cos().powi(2) / (48.0 * SQRT_2)
}

/// `(pi + Omega, pi - Omega, pi, 0)`.
pub fn grover2d_dispersion(k: &[f64]) -> [f64; 4] {
    let w = grover2d_omega(k);
    [PI + w, PI - w, PI, 0.0]
}

pub fn grover2d_group_velocity(k: &[f64], s: usize) -> Result<[f64; 2]> {
    match s {
        1 | 2 => {
            let sum = k[0].cos() + k[1].cos();
            let den = (4.0 - sum * sum).max(0.0).sqrt();
            if den < SINGULAR_TOL {
                return Err(QwError::SingularPoint { k: k.to_vec() });
            }
            let sign = if s == 1 { 1.0 } else { -1.0 };
            Ok([sign * k[0].sin() / den, sign * k[1].sin() / den])
        }
        3 | 4 => Ok([0.0, 0.0]),
        _ => Err(QwError::invalid(format!("branch {s} out of range 1..=4"))),
    }
}

/// Second derivatives of `omega^(s)` for the 2D Grover walk.
pub fn grover2d_hessian(k: &[f64], s: usize) -> Result<[[f64; 2]; 2]> {
    match s {
        1 | 2 => {
            let u = 0.5 * (k[0].cos() + k[1].cos());
            let q = 1.0 - u * u;
            if q.sqrt() < SINGULAR_TOL {
                return Err(QwError::SingularPoint { k: k.to_vec() });
            }
            let ui = [-0.5 * k[0].sin(), -0.5 * k[1].sin()];
            let uii = [-0.5 * k[0].cos(), -0.5 * k[1].cos()];
            let sign = if s == 1 { 1.0 } else { -1.0 };
            let mut h = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    let uij = if i == j { uii[i] } else { 0.0 };
                    h[i][j] = sign * (-uij / q.sqrt() - u * ui[i] * ui[j] / q.powf(1.5));
                }
            }
            Ok(h)
        }
        3 | 4 => Ok([[0.0; 2]; 2]),
        _ => Err(QwError::invalid(format!("branch {s} out of range 1..=4"))),
    }
}

/// Limits `k -> 0` along azimuth `theta` of the 2D Grover eigenvectors,
/// returned in branch order.
pub fn grover2d_eigenvectors_near_origin(theta: f64) -> [[Complex64; 4]; 4] {
    let (s, c) = theta.sin_cos();
    let r = |x: f64| Complex64::new(x, 0.0);
    let a = 1.0 / (2.0 * SQRT_2);
    let v1 = [
        r(a * (1.0 + SQRT_2 * c)),
        r(a * (1.0 - SQRT_2 * c)),
        r(a * (-1.0 - SQRT_2 * s)),
        r(a * (-1.0 + SQRT_2 * s)),
    ];
    let v2 = [
        r(a * (1.0 - SQRT_2 * c)),
        r(a * (1.0 + SQRT_2 * c)),
        r(a * (-1.0 + SQRT_2 * s)),
        r(a * (-1.0 - SQRT_2 * s)),
    ];
    let b = 1.0 / SQRT_2;
    let v3 = [r(b * s), r(-b * s), r(b * c), r(-b * c)];
    let v4 = [r(0.5); 4];
    [v1, v2, v3, v4]
}

/// `(Omega+, Omega-)` for the 3D Grover walk, with
/// `cos Omega± = -(S ± R) / 3`.
///
/// Evaluated through `1 ± cos` forms so that neither sheet loses digits at
/// its contact points.
pub fn grover3d_omegas(k: &[f64]) -> (f64, f64) {
    let c: Vec<f64> = k.iter().map(|x| x.cos()).collect();
    let a: Vec<f64> = k.iter().map(|x| 2.0 * (x / 2.0).sin().powi(2)).collect();
    let b: Vec<f64> = k.iter().map(|x| 2.0 * (x / 2.0).cos().powi(2)).collect();
    let r = (0.5 * ((c[0] - c[1]).powi(2) + (c[1] - c[2]).powi(2) + (c[0] - c[2]).powi(2))).sqrt();
    let sum_a: f64 = a.iter().sum();
    let sum_b: f64 = b.iter().sum();
    let pair = |v: &[f64]| v[0] * v[1] + v[1] * v[2] + v[0] * v[2];
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };

    // 1 + cos(Omega+) = (A - R)/3 = sum_{i<j} a_i a_j / (A + R)
    let plus_p = ratio(pair(&a), sum_a + r);
    let plus_m = (sum_b + r) / 3.0;
    // 1 - cos(Omega-) = (B - R)/3 = sum_{i<j} b_i b_j / (B + R)
    let minus_p = (sum_a + r) / 3.0;
    let minus_m = ratio(pair(&b), sum_b + r);

    let half_angle = |one_plus: f64, one_minus: f64| 2.0 * one_minus.max(0.0).sqrt().atan2(one_plus.max(0.0).sqrt());
    (half_angle(plus_p, plus_m), half_angle(minus_p, minus_m))
}

/// `(Omega+, -Omega+, Omega-, -Omega-, 0, pi)`.
pub fn grover3d_dispersion(k: &[f64]) -> [f64; 6] {
    let (wp, wm) = grover3d_omegas(k);
    [wp, -wp, wm, -wm, 0.0, PI]
}

pub fn grover3d_group_velocity(k: &[f64], s: usize) -> Result<[f64; 3]> {
    let (wp, wm) = grover3d_omegas(k);
    let (w, sign) = match s {
        1 => (wp, -1.0),
        2 => (wp, 1.0),
        3 => (wm, -1.0),
        4 => (wm, 1.0),
        5 | 6 => return Ok([0.0; 3]),
        _ => return Err(QwError::invalid(format!("branch {s} out of range 1..=6"))),
    };
    let c: Vec<f64> = k.iter().map(|x| x.cos()).collect();
    let sum: f64 = c.iter().sum();
    let den = 2.0 * (3.0 * w.cos() + sum) * w.sin();
    if den.abs() < SINGULAR_TOL {
        return Err(QwError::SingularPoint { k: k.to_vec() });
    }
    let mut v = [0.0; 3];
    for i in 0..3 {
        let others = sum - c[i];
        v[i] = sign * (2.0 * w.cos() + others) * k[i].sin() / den;
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Grover2d;

impl DispersionModel for Grover2d {
    fn name(&self) -> &str {
        "grover2d"
    }
    fn dim_n(&self) -> usize {
        2
    }
    fn omegas(&self, k: &[f64]) -> Result<Vec<f64>> {
        self.check_k(k)?;
        Ok(grover2d_dispersion(k).to_vec())
    }
    fn group_velocity(&self, k: &[f64], s: usize) -> Result<Vec<f64>> {
        self.check_k(k)?;
        self.check_branch(s)?;
        Ok(grover2d_group_velocity(k, s)?.to_vec())
    }
    fn analytic_hessian(&self, k: &[f64], s: usize) -> Option<Result<Vec<Vec<f64>>>> {
        Some(
            self.check_k(k)
                .and_then(|_| grover2d_hessian(k, s))
                .map(|h| h.iter().map(|r| r.to_vec()).collect()),
        )
    }
    fn is_flat(&self, s: usize) -> bool {
        s == 3 || s == 4
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Grover3d;

impl DispersionModel for Grover3d {
    fn name(&self) -> &str {
        "grover3d"
    }
    fn dim_n(&self) -> usize {
        3
    }
    fn omegas(&self, k: &[f64]) -> Result<Vec<f64>> {
        self.check_k(k)?;
        Ok(grover3d_dispersion(k).to_vec())
    }
    fn group_velocity(&self, k: &[f64], s: usize) -> Result<Vec<f64>> {
        self.check_k(k)?;
        self.check_branch(s)?;
        Ok(grover3d_group_velocity(k, s)?.to_vec())
    }
    fn is_flat(&self, s: usize) -> bool {
        s == 5 || s == 6
    }
}

/// Dispersion of an arbitrary coin from its numeric eigensystem.
///
/// Group velocities come from the eigenvectors directly:
/// `d omega / d k_a = |phi_{a+}|^2 - |phi_{a-}|^2`.
#[derive(Debug, Clone)]
pub struct NumericDispersion {
    coin: CoinMatrix,
}

impl NumericDispersion {
    pub fn new(coin: CoinMatrix) -> Self {
        NumericDispersion { coin }
    }

    pub fn coin(&self) -> &CoinMatrix {
        &self.coin
    }
}

impl DispersionModel for NumericDispersion {
    fn name(&self) -> &str {
        "numeric"
    }
    fn dim_n(&self) -> usize {
        self.coin.dim_n()
    }
    fn omegas(&self, k: &[f64]) -> Result<Vec<f64>> {
        Ok(eigensystem_at(&self.coin, k)?.omegas)
    }
    fn group_velocity(&self, k: &[f64], s: usize) -> Result<Vec<f64>> {
        self.check_branch(s)?;
        let e = eigensystem_at(&self.coin, k)?;
        if e.gap(s) < SINGULAR_TOL {
            return Err(QwError::SingularPoint { k: k.to_vec() });
        }
        let v = e.vector(s);
        Ok((0..self.dim_n())
            .map(|a| {
                v[coin_index(a, Direction::Plus)].norm_sqr() - v[coin_index(a, Direction::Minus)].norm_sqr()
            })
            .collect())
    }
}

/// Closed-form model for Grover coins of dimension 2 or 3, numeric otherwise.
pub fn model_for(coin: &CoinMatrix) -> Box<dyn DispersionModel> {
    if coin.is_grover() {
        match coin.dim_n() {
            2 => return Box::new(Grover2d),
            3 => return Box::new(Grover3d),
            _ => {}
        }
    }
    Box::new(NumericDispersion::new(coin.clone()))
}
