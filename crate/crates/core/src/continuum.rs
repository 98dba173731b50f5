//! Envelope dynamics around a regular carrier: advection at the group velocity
//! plus the second-order (Schrodinger-like) spreading term.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coin::CoinMatrix;
use crate::error::{QwError, Result};
use crate::evolve::{branch_weights, evolve_spectral};
use crate::fft::{bin_wavenumber, FftNd};
use crate::lattice::{moments_where, probability_field, Grid, ProbabilityField};
use crate::packet::{build_packet, CoinSelector, WavePacketSpec};
use crate::spectral::dispersion::{model_for, DispersionModel};
use crate::spectral::eigen::eigensystem_at;
use crate::spectral::hessian::{check_regular, hessian_at};

/// Minimum weight on the compared branches for a comparison to make sense.
pub const MIN_PROJECTION: f64 = 0.99;
/// Branches carrying less than this share of the coin are ignored for explicit coins.
const BRANCH_PRESENCE: f64 = 1e-6;
const THIRD_ORDER_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumCoefficients {
    pub k0: Vec<f64>,
    pub branch: usize,
    pub omega0: f64,
    pub v_g: Vec<f64>,
    /// Symmetric `d^2 omega / dk_i dk_j`.
    pub hessian: Vec<Vec<f64>>,
}

impl ContinuumCoefficients {
    pub fn dim(&self) -> usize {
        self.k0.len()
    }

    /// `q . hessian . q`.
    pub fn quadratic(&self, q: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, qi) in q.iter().enumerate() {
            for (j, qj) in q.iter().enumerate() {
                s += qi * self.hessian[i][j] * qj;
            }
        }
        s
    }
}

fn hessian_of(model: &dyn DispersionModel, k0: &[f64], s: usize) -> Result<Vec<Vec<f64>>> {
    let h = match model.analytic_hessian(k0, s) {
        Some(h) => h?,
        None => hessian_at(model, k0, s)?.matrix,
    };
    let n = h.len();
    Ok((0..n)
        .map(|i| (0..n).map(|j| 0.5 * (h[i][j] + h[j][i])).collect())
        .collect())
}

/// Group velocity and Hessian of branch `s` at the carrier `k0`.
pub fn continuum_coefficients(c: &CoinMatrix, k0: &[f64], s: usize) -> Result<ContinuumCoefficients> {
    let model = model_for(c);
    model.check_k(k0)?;
    check_regular(model.as_ref(), k0, s)?;
    Ok(ContinuumCoefficients {
        k0: k0.to_vec(),
        branch: s,
        omega0: model.omega(k0, s)?,
        v_g: model.group_velocity(k0, s)?,
        hessian: hessian_of(model.as_ref(), k0, s)?,
    })
}

/// Third derivatives `T_ijk` by central differences of the Hessian; flattened `i*n*n + j*n + k`.
#[derive(Debug, Clone)]
pub struct ThirdOrder {
    pub dim: usize,
    pub tensor: Vec<f64>,
}

impl ThirdOrder {
    pub fn cubic(&self, q: &[f64]) -> f64 {
        let n = self.dim;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    s += self.tensor[(i * n + j) * n + k] * q[i] * q[j] * q[k];
                }
            }
        }
        s
    }
}

pub fn third_order_terms(c: &CoinMatrix, k0: &[f64], s: usize) -> Result<ThirdOrder> {
    let model = model_for(c);
    check_regular(model.as_ref(), k0, s)?;
    let n = k0.len();
    let h = THIRD_ORDER_STEP;
    let mut tensor = vec![0.0; n * n * n];
    for k in 0..n {
        let mut kp = k0.to_vec();
        let mut km = k0.to_vec();
        kp[k] += h;
        km[k] -= h;
        let hp = hessian_of(model.as_ref(), &kp, s)?;
        let hm = hessian_of(model.as_ref(), &km, s)?;
        for i in 0..n {
            for j in 0..n {
                tensor[(i * n + j) * n + k] = (hp[i][j] - hm[i][j]) / (2.0 * h);
            }
        }
    }
    // symmetrise over the three index orderings that differ
    let mut sym = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let perms = [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)];
                sym[(i * n + j) * n + k] =
                    perms.iter().map(|&(a, b, c)| tensor[(a * n + b) * n + c]).sum::<f64>() / 6.0;
            }
        }
    }
    Ok(ThirdOrder { dim: n, tensor: sym })
}

/// A complex envelope sampled on the co-moving coordinates `X = x - frame_shift`.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub frame_shift: Vec<f64>,
    pub time: f64,
}

impl Envelope {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.sites() {
            return Err(QwError::DimensionMismatch {
                expected: grid.sites(),
                found: values.len(),
            });
        }
        let n = grid.dim();
        Ok(Envelope {
            grid,
            values,
            frame_shift: vec![0.0; n],
            time: 0.0,
        })
    }

    pub fn from_fn<F: Fn(&[f64]) -> Complex64 + Sync>(grid: Grid, f: F) -> Self {
        let values = (0..grid.sites())
            .into_par_iter()
            .map(|i| {
                let x: Vec<f64> = grid.coords(i).iter().map(|&v| v as f64).collect();
                f(&x)
            })
            .collect();
        let n = grid.dim();
        Envelope {
            grid,
            values,
            frame_shift: vec![0.0; n],
            time: 0.0,
        }
    }

    /// Unit-norm Gaussian `exp(-|x - center|^2 / (2 sigma^2))`.
    pub fn gaussian(grid: Grid, sigma: f64, center: &[f64]) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(QwError::invalid(format!("sigma must be positive, got {sigma}")));
        }
        let mut env = Envelope::from_fn(grid, |x| {
            let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum();
            Complex64::new((-r2 / (2.0 * sigma * sigma)).exp(), 0.0)
        });
        let n = env.norm_sqr().sqrt();
        env.values.iter_mut().for_each(|z| *z /= n);
        Ok(env)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn probability(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn scaled(mut self, a: Complex64) -> Self {
        self.values.iter_mut().for_each(|z| *z *= a);
        self
    }

    /// The same envelope sampled at lab coordinates `x`, by a Fourier shift of `frame_shift`.
    pub fn lab_frame(&self) -> Envelope {
        let mut out = self.clone();
        if self.frame_shift.iter().all(|&s| s == 0.0) {
            return out;
        }
        let shift = self.frame_shift.clone();
        apply_multiplier(&mut out, |q| {
            let phase: f64 = q.iter().zip(&shift).map(|(a, b)| a * b).sum();
            Complex64::from_polar(1.0, -phase)
        });
        out.frame_shift = vec![0.0; shift.len()];
        out
    }
}

fn apply_multiplier<F: Fn(&[f64]) -> Complex64 + Sync>(env: &mut Envelope, m: F) {
    let plan = FftNd::new(&env.grid.shape);
    plan.forward(&mut env.values);
    let shape = env.grid.shape.clone();
    let grid = &env.grid;
    env.values.par_iter_mut().enumerate().for_each(|(i, z)| {
        let q: Vec<f64> = grid
            .unravel(i)
            .iter()
            .zip(&shape)
            .map(|(&m, &l)| bin_wavenumber(m, l))
            .collect();
        *z *= m(&q);
    });
    plan.inverse(&mut env.values);
}

/// Exact solution of the truncated envelope equation over a time `t`:
/// `A(q) -> exp(-(i/2) q.W.q t) A(q)` with the frame moved by `v_g t`.
pub fn evolve_envelope(env: &Envelope, coeffs: &ContinuumCoefficients, t: f64) -> Result<Envelope> {
    evolve_envelope_with(env, coeffs, None, t)
}

/// As [`evolve_envelope`], optionally adding the cubic term `-(i/6) T q q q t`.
pub fn evolve_envelope_with(
    env: &Envelope,
    coeffs: &ContinuumCoefficients,
    third: Option<&ThirdOrder>,
    t: f64,
) -> Result<Envelope> {
    if coeffs.dim() != env.grid.dim() {
        return Err(QwError::DimensionMismatch {
            expected: env.grid.dim(),
            found: coeffs.dim(),
        });
    }
    let mut out = env.clone();
    if t != 0.0 && (coeffs.hessian.iter().flatten().any(|&w| w != 0.0) || third.is_some()) {
        apply_multiplier(&mut out, |q| {
            let mut phase = 0.5 * coeffs.quadratic(q) * t;
            if let Some(th) = third {
                phase += th.cubic(q) * t / 6.0;
            }
            Complex64::from_polar(1.0, -phase)
        });
    }
    for (s, v) in out.frame_shift.iter_mut().zip(&coeffs.v_g) {
        *s += v * t;
    }
    out.time += t;
    Ok(out)
}

/// One-dimensional factor `exp(-x^2 / (2 (sigma^2 + i w t))) / sqrt(sigma^2 + i w t)`.
pub fn gaussian_closed_form(sigma: f64, w: f64, t: f64, x: f64) -> Complex64 {
    let s2 = Complex64::new(sigma * sigma, w * t);
    (-(x * x) / (2.0 * s2)).exp() / s2.sqrt()
}

#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub l1: f64,
    /// Largest centroid offset over the packet regions, in sites.
    pub centroid_err: f64,
    /// Exact over continuum standard deviation, per region and axis.
    pub width_ratio: Vec<Vec<f64>>,
    pub projection: f64,
    pub predicted_centers: Vec<Vec<f64>>,
    pub exact: ProbabilityField,
    pub continuum: ProbabilityField,
}

impl ErrorReport {
    pub fn to_text(&self) -> String {
        let widths: Vec<String> = self
            .width_ratio
            .iter()
            .map(|r| r.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(","))
            .collect();
        format!(
            "L1={:.6e} centroid_err={:.6} width_ratio=({}) projection={:.6}\n",
            self.l1,
            self.centroid_err,
            widths.join(";"),
            self.projection
        )
    }
}

fn branch_set(spec: &WavePacketSpec, c: &CoinMatrix, coin: &[Complex64]) -> Result<Vec<usize>> {
    match &spec.coin {
        CoinSelector::Branch(s) => Ok(vec![*s]),
        CoinSelector::Branches(v) => Ok(v.clone()),
        CoinSelector::PhiD | CoinSelector::Explicit(_) => {
            let e = eigensystem_at(c, &spec.k0)?;
            Ok((1..=c.side())
                .filter(|&s| {
                    let a: Complex64 = e.vector(s).iter().zip(coin).map(|(p, x)| p.conj() * x).sum();
                    a.norm_sqr() > BRANCH_PRESENCE
                })
                .collect())
        }
    }
}

fn minimal_image(d: f64, l: usize) -> f64 {
    let l = l as f64;
    d - l * (d / l).round()
}

/// Exact walk versus the sum of per-branch continuum envelopes after `t` steps.
pub fn compare_exact_continuum(spec: &WavePacketSpec, c: &CoinMatrix, grid: Grid, t: u64) -> Result<ErrorReport> {
    let state = build_packet(spec, c, grid.clone())?;
    let coin = crate::packet::resolve_coin(spec, c)?;
    let branches = branch_set(spec, c, &coin)?;
    let weights = branch_weights(&state, c)?;
    let projection: f64 = branches.iter().map(|&s| weights[s - 1]).sum();
    if projection < MIN_PROJECTION {
        return Err(QwError::IllPosedComparison { projection });
    }

    let exact = probability_field(&evolve_spectral(&state, c, t)?);
    let _ = exact.wrap_warning();

    let center = spec.center_on(&grid);
    let base = Envelope::from_fn(grid.clone(), |x| Complex64::new(spec.envelope_at(x, &center), 0.0));
    let norm = base.norm_sqr().sqrt();
    let base = base.scaled(Complex64::new(1.0 / norm, 0.0));
    let e0 = eigensystem_at(c, &spec.k0)?;

    let mut cont = vec![0.0; grid.sites()];
    let mut centers: Vec<Vec<f64>> = Vec::new();
    for &s in &branches {
        let coeffs = continuum_coefficients(c, &spec.k0, s)?;
        let amp: Complex64 = e0.vector(s).iter().zip(&coin).map(|(p, x)| p.conj() * x).sum();
        let env = evolve_envelope(&base.clone().scaled(amp), &coeffs, t as f64)?.lab_frame();
        for (p, z) in cont.iter_mut().zip(&env.values) {
            *p += z.norm_sqr();
        }
        let pc: Vec<f64> = center.iter().zip(&coeffs.v_g).map(|(x, v)| x + v * t as f64).collect();
        if !centers
            .iter()
            .any(|o| o.iter().zip(&pc).map(|(a, b)| (a - b).powi(2)).sum::<f64>() < 1.0)
        {
            centers.push(pc);
        }
    }
    let continuum = ProbabilityField {
        grid: grid.clone(),
        values: cont,
        time: t,
    };

    let l1 = exact.l1_distance(&continuum);
    let nearest = |x: &[i64]| -> usize {
        let mut best = (0, f64::INFINITY);
        for (r, pc) in centers.iter().enumerate() {
            let d: f64 = x
                .iter()
                .zip(pc)
                .zip(&grid.shape)
                .map(|((&a, b), &l)| minimal_image(a as f64 - b, l).powi(2))
                .sum();
            if d < best.1 {
                best = (r, d);
            }
        }
        best.0
    };
    let mut centroid_err = 0.0f64;
    let mut width_ratio = Vec::new();
    for r in 0..centers.len() {
        let me = moments_where(&exact, |x| nearest(x) == r)?;
        let mc = moments_where(&continuum, |x| nearest(x) == r)?;
        let d: f64 = me
            .centroid
            .iter()
            .zip(&mc.centroid)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        centroid_err = centroid_err.max(d);
        width_ratio.push(me.std_devs().iter().zip(mc.std_devs()).map(|(a, b)| a / b).collect());
    }
    Ok(ErrorReport {
        l1,
        centroid_err,
        width_ratio,
        projection,
        predicted_centers: centers,
        exact,
        continuum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::grover_coin;
    use proptest::prelude::*;
    use std::f64::consts::{PI, SQRT_2};

    fn coeffs(hessian: Vec<Vec<f64>>) -> ContinuumCoefficients {
        let n = hessian.len();
        ContinuumCoefficients {
            k0: vec![0.0; n],
            branch: 1,
            omega0: 0.0,
            v_g: vec![0.0; n],
            hessian,
        }
    }

    #[test]
    fn ballistic_point_coefficients() {
        let c = grover_coin(2).unwrap();
        let cc = continuum_coefficients(&c, &[PI / 2.0, PI / 2.0], 1).unwrap();
        assert!((cc.v_g[0] - 0.5).abs() < 1e-12 && (cc.v_g[1] - 0.5).abs() < 1e-12);
        assert!(cc.hessian.iter().flatten().all(|w| w.abs() < 1e-12));
    }

    #[test]
    fn saddle_and_anisotropic_coefficients() {
        let c = grover_coin(2).unwrap();
        let cc = continuum_coefficients(&c, &[0.0, PI], 2).unwrap();
        assert!(cc.v_g.iter().all(|v| v.abs() < 1e-12));
        assert!((cc.hessian[0][0] + 0.5).abs() < 1e-10 && (cc.hessian[1][1] - 0.5).abs() < 1e-10);
        assert!(cc.hessian[0][1].abs() < 1e-10);

        let c3 = grover_coin(3).unwrap();
        let cc = continuum_coefficients(&c3, &[0.0, 0.0, PI], 3).unwrap();
        let expect = [-1.0, -1.0, 4.0].map(|v| v / (4.0 * SQRT_2));
        for i in 0..3 {
            assert!((cc.hessian[i][i] - expect[i]).abs() < 1e-6, "{:?}", cc.hessian);
        }
        assert!(cc.v_g.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn degeneracy_is_rejected() {
        let c = grover_coin(2).unwrap();
        assert!(matches!(
            continuum_coefficients(&c, &[0.0, 0.0], 1),
            Err(QwError::RegularityViolation { .. })
        ));
    }

    #[test]
    fn zero_hessian_is_identity() {
        let grid = Grid::centered(vec![32, 32]).unwrap();
        let env = Envelope::gaussian(grid, 3.0, &[1.0, -2.0]).unwrap();
        let out = evolve_envelope(&env, &coeffs(vec![vec![0.0; 2]; 2]), 1e4).unwrap();
        assert_eq!(out.values, env.values);
    }

    #[test]
    fn isotropic_gaussian_matches_closed_form() {
        let (sigma, w, t) = (4.0, 0.8, 25.0);
        let grid = Grid::centered(vec![96, 96]).unwrap();
        let init = Envelope::from_fn(grid.clone(), |x| {
            gaussian_closed_form(sigma, w, 0.0, x[0]) * gaussian_closed_form(sigma, w, 0.0, x[1])
        });
        let out = evolve_envelope(&init, &coeffs(vec![vec![w, 0.0], vec![0.0, w]]), t).unwrap();
        let worst = (0..grid.sites())
            .map(|i| {
                let x = grid.coords(i);
                let f = gaussian_closed_form(sigma, w, t, x[0] as f64) * gaussian_closed_form(sigma, w, t, x[1] as f64);
                (f - out.values[i]).norm()
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn anisotropic_3d_product_matches_multiplier() {
        let w = [-1.0, -1.0, 4.0].map(|v| v / (4.0 * SQRT_2));
        let (sigma, t) = (3.0, 12.0);
        let grid = Grid::centered(vec![64, 64, 64]).unwrap();
        let f = |x: &[f64], t: f64| -> Complex64 { (0..3).map(|a| gaussian_closed_form(sigma, w[a], t, x[a])).product() };
        let init = Envelope::from_fn(grid.clone(), |x| f(x, 0.0));
        let h = vec![vec![w[0], 0.0, 0.0], vec![0.0, w[1], 0.0], vec![0.0, 0.0, w[2]]];
        let out = evolve_envelope(&init, &coeffs(h), t).unwrap();
        let exact = Envelope::from_fn(grid, |x| f(x, t));
        let worst = out
            .values
            .iter()
            .zip(&exact.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn closed_form_limits() {
        let (sigma, w) = (5.0, 0.3);
        for &x in &[0.0, 2.0, 7.5] {
            let z = gaussian_closed_form(sigma, w, 0.0, x);
            assert!((z.re - (-x * x / (2.0 * sigma * sigma)).exp() / sigma).abs() < 1e-15 && z.im == 0.0);
        }
        // squared amplitude width doubles at t = sigma^2 / |w|
        let width2 = |t: f64| {
            let (mut m0, mut m2) = (0.0, 0.0);
            for i in -400..=400 {
                let x = i as f64 * 0.1;
                let p = gaussian_closed_form(sigma, w, t, x).norm_sqr();
                m0 += p;
                m2 += p * x * x;
            }
            m2 / m0
        };
        assert!((width2(sigma * sigma / w) / width2(0.0) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn saddle_spreading_is_swap_symmetric() {
        let grid = Grid::centered(vec![64, 64]).unwrap();
        let env = Envelope::gaussian(grid.clone(), 4.0, &[0.0, 0.0]).unwrap();
        let out = evolve_envelope(&env, &coeffs(vec![vec![-0.5, 0.0], vec![0.0, 0.5]]), 30.0).unwrap();
        let p = out.probability();
        let mut worst = 0.0f64;
        for i in 0..grid.sites() {
            let x = grid.coords(i);
            let j = grid.index_wrapped(&[x[1], x[0]]);
            worst = worst.max((p[i] - p[j]).abs());
        }
        assert!(worst < 1e-10);
        // opposite chirps: the phase curvature changes sign between the axes
        let at = |x: [i64; 2]| out.values[grid.index_of(&x).unwrap()];
        let c0 = at([0, 0]);
        let ax = (at([3, 0]) / c0).arg();
        let ay = (at([0, 3]) / c0).arg();
        assert!(ax * ay < 0.0 && (ax + ay).abs() < 1e-10);
    }

    #[test]
    fn lab_frame_shift() {
        let grid = Grid::centered(vec![64]).unwrap();
        let env = Envelope::gaussian(grid.clone(), 4.0, &[0.0]).unwrap();
        let mut cc = coeffs(vec![vec![0.0]]);
        cc.v_g = vec![0.5];
        let lab = evolve_envelope(&env, &cc, 20.0).unwrap().lab_frame();
        let p = lab.probability();
        let mean: f64 = (0..grid.sites()).map(|i| grid.coords(i)[0] as f64 * p[i]).sum();
        assert!((mean - 10.0).abs() < 1e-10, "{mean}");
    }

    #[test]
    fn ill_posed_comparison() {
        let c = grover_coin(2).unwrap();
        let grid = Grid::centered(vec![64, 64]).unwrap();
        let good = WavePacketSpec::gaussian(10.0, vec![0.3, 1.1], CoinSelector::Branch(1));
        assert!(compare_exact_continuum(&good, &c, grid.clone(), 5).is_ok());
        // a narrow packet has a broad spectrum and leaks into the other branches
        let bad = WavePacketSpec::gaussian(1.0, vec![0.3, 1.1], CoinSelector::Branch(1));
        match compare_exact_continuum(&bad, &c, grid, 5) {
            Err(QwError::IllPosedComparison { projection }) => assert!(projection < 0.99),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ballistic_comparison() {
        let c = grover_coin(2).unwrap();
        let spec = WavePacketSpec::gaussian(10.0, vec![PI / 2.0, PI / 2.0], CoinSelector::Branches(vec![1, 2]));
        let r = compare_exact_continuum(&spec, &c, Grid::centered(vec![256, 256]).unwrap(), 80).unwrap();
        assert_eq!(r.predicted_centers.len(), 2);
        assert!(r.centroid_err < 1.0, "{}", r.to_text());
        for w in r.width_ratio.iter().flatten() {
            assert!((w - 1.0).abs() < 0.05, "{}", r.to_text());
        }
        assert!(r.to_text().starts_with("L1="));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn multiplier_conserves_norm(a in -2.0f64..2.0, b in -2.0f64..2.0, d in -2.0f64..2.0, t in 0.0f64..200.0) {
            let grid = Grid::centered(vec![32, 32]).unwrap();
            let env = Envelope::gaussian(grid, 3.0, &[2.0, -1.0]).unwrap();
            let out = evolve_envelope(&env, &coeffs(vec![vec![a, b], vec![b, d]]), t).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn centroid_moves_with_mean_wavenumber(a in -1.0f64..1.0, b in -1.0f64..1.0, d in -1.0f64..1.0, q0 in -0.3f64..0.3) {
            let grid = Grid::centered(vec![128, 128]).unwrap();
            let env = Envelope::gaussian(grid.clone(), 5.0, &[0.0, 0.0]).unwrap();
            let env = Envelope::new(grid.clone(), env.values.iter().enumerate().map(|(i, z)| {
                z * Complex64::from_polar(1.0, q0 * grid.coords(i)[0] as f64)
            }).collect()).unwrap();
            let t = 15.0;
            let out = evolve_envelope(&env, &coeffs(vec![vec![a, b], vec![b, d]]), t).unwrap();
            let p = out.probability();
            let mean = |axis: usize| -> f64 { (0..grid.sites()).map(|i| grid.coords(i)[axis] as f64 * p[i]).sum() };
            // <k> of the sampled Gaussian is q0 up to exponentially small aliasing
            prop_assert!((mean(0) - t * a * q0).abs() < 1e-8);
            prop_assert!((mean(1) - t * b * q0).abs() < 1e-8);
        }

        #[test]
        fn symmetric_envelope_centroid_is_stationary(a in -1.0f64..1.0, b in -1.0f64..1.0, d in -1.0f64..1.0, t in 0.0f64..40.0) {
            // odd sides keep the sample set symmetric about the origin
            let grid = Grid::centered(vec![65, 65]).unwrap();
            let env = Envelope::gaussian(grid.clone(), 4.0, &[0.0, 0.0]).unwrap();
            let p = evolve_envelope(&env, &coeffs(vec![vec![a, b], vec![b, d]]), t).unwrap().probability();
            for axis in 0..2 {
                let m: f64 = (0..grid.sites()).map(|i| grid.coords(i)[axis] as f64 * p[i]).sum();
                prop_assert!(m.abs() < 1e-10);
            }
        }
    }
}
