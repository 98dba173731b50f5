//! Radially symmetric packets launched at the conical point of the 2D Grover walk:
//! amplitude integrals, the long-time ring profile and ring features.

pub mod quad;
pub mod special;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coin::CoinMatrix;
use crate::error::{QwError, Result};
use crate::evolve::evolve_spectral;
use crate::lattice::{probability_field, Grid, LatticeField, ProbabilityField};
use crate::packet::{build_packet, phi_d, CoinSelector, WavePacketSpec};
use special::{bessel_j0, bessel_j1, gamma, scaled_bessel_i};

/// Cone slope of the 2D Grover dispersion at the origin.
pub const GROUP_SPEED: f64 = FRAC_1_SQRT_2;
/// Spectrum cut-off in units of `1/sigma`.
pub const K_CUTOFF: f64 = 8.0;
/// Relative tolerance handed to the quadrature.
pub const QUAD_TOL: f64 = 1e-10;
/// Largest `xi` spacing accepted by [`ring_features`].
pub const MAX_XI_STEP: f64 = 0.05;
/// Below this `ct / sigma` the long-time profile is not meaningful.
pub const ASYMPTOTIC_MIN_RATIO: f64 = 5.0;
const SERIES_LIMIT: f64 = 3.0;
const AZIMUTH_SECTORS: usize = 16;

/// `1/2 (1, 1, -1, -1)`: equal parts of the two conical branches, nothing on the flat ones.
pub fn diabolo_coin_state() -> Vec<Complex64> {
    phi_d()
}

/// A radially symmetric packet spectrum `F(k)`.
#[derive(Debug, Clone)]
pub enum RadialSpectrum {
    /// `2 sigma sqrt(pi) exp(-sigma^2 k^2 / 2)`, the transform of a unit-norm Gaussian.
    Gaussian { sigma: f64 },
    /// Tabulated values, linearly interpolated and zero beyond the last sample.
    Sampled { k: Vec<f64>, values: Vec<f64>, sigma: f64 },
}

impl RadialSpectrum {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(QwError::invalid(format!("sigma must be positive, got {sigma}")));
        }
        Ok(RadialSpectrum::Gaussian { sigma })
    }

    pub fn sampled(k: Vec<f64>, values: Vec<f64>, sigma: f64) -> Result<Self> {
        if k.len() != values.len() || k.len() < 2 {
            return Err(QwError::invalid("sampled spectrum needs matching k and value arrays of length >= 2"));
        }
        if k[0] < 0.0 || k.windows(2).any(|w| w[1] <= w[0]) {
            return Err(QwError::invalid("spectrum samples must be non-negative and increasing in k"));
        }
        if !(sigma > 0.0) {
            return Err(QwError::invalid(format!("sigma must be positive, got {sigma}")));
        }
        Ok(RadialSpectrum::Sampled { k, values, sigma })
    }

    pub fn sigma(&self) -> f64 {
        match self {
            RadialSpectrum::Gaussian { sigma } | RadialSpectrum::Sampled { sigma, .. } => *sigma,
        }
    }

    pub fn k_max(&self) -> f64 {
        match self {
            RadialSpectrum::Gaussian { sigma } => K_CUTOFF / sigma,
            RadialSpectrum::Sampled { k, .. } => *k.last().expect("validated"),
        }
    }

    pub fn value(&self, kk: f64) -> f64 {
        match self {
            RadialSpectrum::Gaussian { sigma } => 2.0 * sigma * PI.sqrt() * (-0.5 * (sigma * kk).powi(2)).exp(),
            RadialSpectrum::Sampled { k, values, .. } => {
                if kk < k[0] || kk > k[k.len() - 1] {
                    return 0.0;
                }
                let i = k.partition_point(|&x| x <= kk).clamp(1, k.len() - 1);
                let t = (kk - k[i - 1]) / (k[i] - k[i - 1]);
                values[i - 1] + t * (values[i] - values[i - 1])
            }
        }
    }

    /// `n` equally spaced samples on `[0, k_max]`.
    pub fn samples(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let km = self.k_max();
        let k: Vec<f64> = (0..n).map(|i| km * i as f64 / (n.max(2) - 1) as f64).collect();
        let v = k.iter().map(|&x| self.value(x)).collect();
        (k, v)
    }
}

/// `(p0, p1)` at radius `x` and time `t` for cone speed `c`:
/// `p0 = (2 pi)^{-1} int cos(kct) J0(kx) k F(k) dk` and the same with `sin`, `J1` for `p1`.
pub fn p0_p1(spectrum: &RadialSpectrum, c: f64, t: f64, x: f64) -> Result<(f64, f64)> {
    if !(c > 0.0) {
        return Err(QwError::invalid(format!("cone speed must be positive, got {c}")));
    }
    if x < 0.0 || t < 0.0 {
        return Err(QwError::invalid(format!("need x >= 0 and t >= 0, got x={x} t={t}")));
    }
    let ct = c * t;
    let max_len = PI / (4.0 * ct.max(x).max(1.0));
    let km = spectrum.k_max();
    let p0 = quad::integrate(
        |k| (k * ct).cos() * bessel_j0(k * x) * k * spectrum.value(k),
        0.0,
        km,
        max_len,
        QUAD_TOL,
    )?;
    let p1 = if x == 0.0 || t == 0.0 {
        0.0
    } else {
        quad::integrate(
            |k| (k * ct).sin() * bessel_j1(k * x) * k * spectrum.value(k),
            0.0,
            km,
            max_len,
            QUAD_TOL,
        )?
        .value
    };
    Ok((p0.value / (2.0 * PI), p1 / (2.0 * PI)))
}

/// [`p0_p1`] at many radii in parallel.
pub fn p0_p1_many(spectrum: &RadialSpectrum, c: f64, t: f64, xs: &[f64]) -> Result<Vec<(f64, f64)>> {
    xs.par_iter().map(|&x| p0_p1(spectrum, c, t, x)).collect()
}

/// The long-time amplitude `p0 = p1` for a Gaussian packet times `sqrt(sigma c t)`:
/// `e^{-z}/8 { xi |xi|^{1/2} [I_{-1/4}(z) - I_{3/4}(z)] + [xi^2 I_{5/4}(z) - (xi^2 - 2) I_{1/4}(z)] / |xi|^{1/2} }`
/// with `z = xi^2 / 4`.
///
/// Cross terms oscillating like `e^{2ikct}` are dropped, an `O(sigma / ct)` correction.
pub fn poggendorff_amplitude(xi: f64) -> f64 {
    let z = 0.25 * xi * xi;
    if xi.abs() <= SERIES_LIMIT {
        return (-z).exp() * bracket_series(xi) / 8.0;
    }
    let r = xi.abs().sqrt();
    let (im, i34, i54, i14) = (
        scaled_bessel_i(-0.25, z),
        scaled_bessel_i(0.75, z),
        scaled_bessel_i(1.25, z),
        scaled_bessel_i(0.25, z),
    );
    (xi * r * (im - i34) + (xi * xi * i54 - (xi * xi - 2.0) * i14) / r) / 8.0
}

// The bracket is entire in xi; its power series avoids the |xi|^{+-1/2} factors near 0.
fn bracket_series(xi: f64) -> f64 {
    let u = xi * xi / 8.0;
    let (a, b, c, d) = (8f64.powf(0.25), 8f64.powf(-0.75), 8f64.powf(-1.25), 8f64.powf(-0.25));
    let mut sum = 0.0;
    let mut pow = 1.0;
    let mut fact = 1.0;
    for m in 0..60 {
        let mf = m as f64;
        if m > 0 {
            pow *= u * u;
            fact *= mf;
        }
        let term = pow / fact
            * (xi * a / gamma(mf + 0.75) - xi.powi(3) * b / gamma(mf + 1.75) + xi.powi(4) * c / gamma(mf + 2.25)
                - (xi * xi - 2.0) * d / gamma(mf + 1.25));
        sum += term;
        if m > 2 && term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// `P(xi) = 2 p0(xi)^2`, without the `1 / (sigma c t)` prefactor.
pub fn poggendorff_asymptotic(xi: f64) -> f64 {
    2.0 * poggendorff_amplitude(xi).powi(2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub xi: Vec<f64>,
    pub p: Vec<f64>,
}

impl RadialProfile {
    pub fn new(xi: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if xi.len() != p.len() {
            return Err(QwError::DimensionMismatch {
                expected: xi.len(),
                found: p.len(),
            });
        }
        if xi.windows(2).any(|w| w[1] <= w[0]) {
            return Err(QwError::invalid("profile xi samples must be increasing"));
        }
        if p.iter().any(|&v| !(v >= 0.0)) {
            return Err(QwError::invalid("profile values must be non-negative"));
        }
        Ok(RadialProfile { xi, p })
    }

    fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
    }

    /// [`poggendorff_asymptotic`] sampled on `[lo, hi]`.
    pub fn asymptotic(lo: f64, hi: f64, step: f64) -> Self {
        let xi = Self::grid(lo, hi, step);
        let p = xi.iter().map(|&x| poggendorff_asymptotic(x)).collect();
        RadialProfile { xi, p }
    }

    /// `sigma c t (p0^2 + p1^2)` by quadrature, on the same scale as [`poggendorff_asymptotic`].
    pub fn from_quadrature(spectrum: &RadialSpectrum, c: f64, t: f64, lo: f64, hi: f64, step: f64) -> Result<Self> {
        let sigma = spectrum.sigma();
        let ct = c * t;
        let xi: Vec<f64> = Self::grid(lo, hi, step)
            .into_iter()
            .filter(|&x| ct + sigma * x >= 0.0)
            .collect();
        let xs: Vec<f64> = xi.iter().map(|&x| ct + sigma * x).collect();
        let p = p0_p1_many(spectrum, c, t, &xs)?
            .into_iter()
            .map(|(a, b)| sigma * ct * (a * a + b * b))
            .collect();
        RadialProfile::new(xi, p)
    }

    /// Azimuthal average of a lattice field around `center` in radial bins of width `bin`,
    /// scaled by `sigma c t` and placed at `xi = (r - ct) / sigma`.
    pub fn from_field(p: &ProbabilityField, center: &[f64], sigma: f64, ct: f64, bin: f64) -> Result<Self> {
        if p.grid.dim() != 2 || center.len() != 2 {
            return Err(QwError::invalid("radial profiles are defined for two-dimensional fields"));
        }
        let nb = (radius_limit(&p.grid, center) / bin).floor() as usize;
        let mut acc = vec![(0.0, 0.0, 0usize); nb];
        for i in 0..p.grid.sites() {
            let x = p.grid.coords(i);
            let r = ((x[0] as f64 - center[0]).powi(2) + (x[1] as f64 - center[1]).powi(2)).sqrt();
            let b = (r / bin) as usize;
            if b < nb {
                acc[b].0 += r;
                acc[b].1 += p.values[i];
                acc[b].2 += 1;
            }
        }
        let scale = sigma * ct;
        let (xi, vals) = acc
            .into_iter()
            .filter(|a| a.2 > 0)
            .map(|(r, v, n)| (((r / n as f64) - ct) / sigma, scale * v / n as f64))
            .unzip();
        RadialProfile::new(xi, vals)
    }

    pub fn at(&self, xi: f64) -> f64 {
        let i = self.xi.partition_point(|&x| x <= xi).clamp(1, self.xi.len() - 1);
        let t = (xi - self.xi[i - 1]) / (self.xi[i] - self.xi[i - 1]);
        self.p[i - 1] + t * (self.p[i] - self.p[i - 1])
    }

    /// Two-column CSV `xi,P`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("xi,P\n");
        for (x, p) in self.xi.iter().zip(&self.p) {
            s.push_str(&format!("{x:.16e},{p:.16e}\n"));
        }
        s
    }
}

// Largest radius whose circle stays inside the box.
fn radius_limit(grid: &Grid, center: &[f64]) -> f64 {
    grid.shape
        .iter()
        .zip(&grid.origin)
        .zip(center)
        .map(|((&l, &o), &c)| (c - o as f64).min(o as f64 + l as f64 - 1.0 - c))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingFeatures {
    pub xi_inner_max: f64,
    pub xi_zero: f64,
    pub xi_outer_max: f64,
    /// Outer over inner maximum height.
    pub peak_ratio: f64,
}

impl RingFeatures {
    pub fn to_text(&self) -> String {
        format!(
            "xi_inner_max={:.6} xi_zero={:.6} xi_outer_max={:.6} peak_ratio={:.6}\n",
            self.xi_inner_max, self.xi_zero, self.xi_outer_max, self.peak_ratio
        )
    }
}

// Vertex of the parabola through three neighbouring samples.
fn parabolic(xi: &[f64], p: &[f64], i: usize) -> (f64, f64) {
    if i == 0 || i + 1 >= xi.len() {
        return (xi[i], p[i]);
    }
    let (x0, x1, x2) = (xi[i - 1], xi[i], xi[i + 1]);
    let (y0, y1, y2) = (p[i - 1], p[i], p[i + 1]);
    let d1 = (y1 - y0) / (x1 - x0);
    let d2 = (y2 - y1) / (x2 - x1);
    let a = (d2 - d1) / (x2 - x0);
    if a == 0.0 {
        return (x1, y1);
    }
    let b = d1 - a * (x0 + x1);
    let xv = (-b / (2.0 * a)).clamp(x0, x2);
    (xv, y1 + (xv - x1) * (d1 + a * (xv - x0)))
}

/// The two highest local maxima of a profile and the lowest point between them.
pub fn ring_features(profile: &RadialProfile) -> Result<RingFeatures> {
    let (xi, p) = (&profile.xi, &profile.p);
    if xi.len() < 5 {
        return Err(QwError::FeatureExtraction("profile too short".into()));
    }
    let step = xi.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if step > MAX_XI_STEP + 1e-12 {
        return Err(QwError::invalid(format!(
            "profile spacing {step:.4} exceeds {MAX_XI_STEP}"
        )));
    }
    let mut maxima: Vec<usize> = (1..p.len() - 1).filter(|&i| p[i] > p[i - 1] && p[i] >= p[i + 1]).collect();
    if maxima.len() < 2 {
        return Err(QwError::FeatureExtraction(format!(
            "found {} local maxima, need two",
            maxima.len()
        )));
    }
    maxima.sort_by(|&a, &b| p[b].total_cmp(&p[a]));
    let (mut i, mut j) = (maxima[0], maxima[1]);
    if i > j {
        std::mem::swap(&mut i, &mut j);
    }
    let m = (i..=j).min_by(|&a, &b| p[a].total_cmp(&p[b])).expect("non-empty range");
    let (x_in, p_in) = parabolic(xi, p, i);
    let (x_out, p_out) = parabolic(xi, p, j);
    let (x_zero, _) = parabolic(xi, p, m);
    Ok(RingFeatures {
        xi_inner_max: x_in,
        xi_zero: x_zero,
        xi_outer_max: x_out,
        peak_ratio: p_out / p_in,
    })
}

/// Largest relative spread of `P` over azimuth, over radial bins of width one site
/// whose mean exceeds `1e-3` of the brightest bin. Each bin is split into 16 sectors.
pub fn azimuthal_symmetry(p: &ProbabilityField, center: &[f64]) -> Result<f64> {
    if p.grid.dim() != 2 || center.len() != 2 {
        return Err(QwError::invalid("azimuthal symmetry is defined for two-dimensional fields"));
    }
    let nb = radius_limit(&p.grid, center).floor() as usize;
    let mut sums = vec![[(0.0f64, 0usize); AZIMUTH_SECTORS]; nb];
    for i in 0..p.grid.sites() {
        let x = p.grid.coords(i);
        let (dx, dy) = (x[0] as f64 - center[0], x[1] as f64 - center[1]);
        let b = (dx * dx + dy * dy).sqrt() as usize;
        if b >= nb {
            continue;
        }
        let a = (dy.atan2(dx) + PI) / (2.0 * PI);
        let s = ((a * AZIMUTH_SECTORS as f64) as usize).min(AZIMUTH_SECTORS - 1);
        sums[b][s].0 += p.values[i];
        sums[b][s].1 += 1;
    }
    let stats: Vec<(f64, f64)> = sums
        .iter()
        .filter(|sec| sec.iter().all(|s| s.1 > 0))
        .map(|sec| {
            let means: Vec<f64> = sec.iter().map(|s| s.0 / s.1 as f64).collect();
            let mean = means.iter().sum::<f64>() / means.len() as f64;
            let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / means.len() as f64;
            (mean, var.sqrt())
        })
        .collect();
    let peak = stats.iter().map(|s| s.0).fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(QwError::DegenerateField);
    }
    Ok(stats
        .iter()
        .filter(|s| s.0 > 1e-3 * peak)
        .map(|s| s.1 / s.0)
        .fold(0.0, f64::max))
}

/// Gaussian packet of width `sigma` at the conical point with coin `coin`, evolved `t` steps
/// on a centred `side x side` box.
pub fn lattice_run(c: &CoinMatrix, sigma: f64, coin: Vec<Complex64>, side: usize, t: u64) -> Result<LatticeField> {
    if c.dim_n() != 2 {
        return Err(QwError::invalid("the conical-point run is defined for two-dimensional coins"));
    }
    let spec = WavePacketSpec::gaussian(sigma, vec![0.0, 0.0], CoinSelector::Explicit(coin)).with_center(vec![0.0, 0.0]);
    let state = build_packet(&spec, c, Grid::centered(vec![side, side])?)?;
    evolve_spectral(&state, c, t)
}

/// Ring features of an exact lattice run from the `phi_D` Gaussian.
pub fn lattice_ring_features(c: &CoinMatrix, sigma: f64, side: usize, t: u64) -> Result<(ProbabilityField, RingFeatures)> {
    let p = probability_field(&lattice_run(c, sigma, diabolo_coin_state(), side, t)?);
    let window = lattice_profile(&p, sigma, GROUP_SPEED * t as f64, -4.0, 3.0)?;
    Ok((p, ring_features(&window)?))
}

/// Radial profile of a conical-point run about the origin, restricted to `lo <= xi <= hi`.
/// Bins are narrow enough that the mean radii stay within [`MAX_XI_STEP`] of each other.
pub fn lattice_profile(p: &ProbabilityField, sigma: f64, ct: f64, lo: f64, hi: f64) -> Result<RadialProfile> {
    let prof = RadialProfile::from_field(p, &[0.0, 0.0], sigma, ct, (0.8 * MAX_XI_STEP * sigma).min(1.0))?;
    let a = prof.xi.partition_point(|&x| x < lo);
    let b = prof.xi.partition_point(|&x| x <= hi);
    RadialProfile::new(prof.xi[a..b].to_vec(), prof.p[a..b].to_vec())
}
