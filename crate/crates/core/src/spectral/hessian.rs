//! Finite-difference Hessians of a dispersion sheet.

use crate::error::{QwError, Result};
use crate::spectral::dispersion::DispersionModel;
use crate::spectral::eigen::{circular_distance, wrap_phase};

/// Base finite-difference step.
pub const HESSIAN_STEP: f64 = 1e-4;
/// Asymmetry of the velocity Jacobian above which a warning is raised.
pub const ASYMMETRY_WARN: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct HessianEstimate {
    pub matrix: Vec<Vec<f64>>,
    /// `max |dv_j/dk_i - dv_i/dk_j|` from differenced group velocities.
    pub asymmetry: f64,
    pub warning: Option<String>,
}

/// Smallest circular distance between branch `s` and the other branches at `k`.
pub fn branch_gap(model: &dyn DispersionModel, k: &[f64], s: usize) -> Result<f64> {
    let w = model.omegas(k)?;
    Ok(w.iter()
        .enumerate()
        .filter(|(i, _)| *i != s - 1)
        .map(|(_, &o)| circular_distance(w[s - 1], o))
        .fold(f64::INFINITY, f64::min))
}

/// Gap a branch must keep at `k0` for the difference stencil to stay on one sheet.
pub fn regularity_margin(dim_n: usize) -> f64 {
    2.0 * (dim_n as f64).sqrt() * 10.0 * HESSIAN_STEP
}

/// Fails with a regularity violation when branch `s` is too close to another one.
pub fn check_regular(model: &dyn DispersionModel, k0: &[f64], s: usize) -> Result<()> {
    model.check_branch(s)?;
    let gap = branch_gap(model, k0, s)?;
    if gap <= regularity_margin(model.dim_n()) {
        return Err(QwError::RegularityViolation {
            k: k0.to_vec(),
            branch: s,
            distance: gap,
        });
    }
    Ok(())
}

fn second_differences(f: &dyn Fn(&[f64]) -> Result<f64>, k0: &[f64], h: f64) -> Result<Vec<Vec<f64>>> {
    let n = k0.len();
    let at = |offsets: &[(usize, f64)]| -> Result<f64> {
        let mut k = k0.to_vec();
        for &(i, d) in offsets {
            k[i] += d;
        }
        f(&k)
    };
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        let fp = at(&[(i, h)])?;
        let fm = at(&[(i, -h)])?;
        m[i][i] = (fp + fm) / (h * h);
        for j in 0..i {
            let pp = at(&[(i, h), (j, h)])?;
            let pm = at(&[(i, h), (j, -h)])?;
            let mp = at(&[(i, -h), (j, h)])?;
            let mm = at(&[(i, -h), (j, -h)])?;
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    Ok(m)
}

/// `d^2 omega^(s) / dk_i dk_j` at `k0` by central differences with one
/// Richardson step, `(4 D(h) - D(2h)) / 3`.
pub fn hessian_at(model: &dyn DispersionModel, k0: &[f64], s: usize) -> Result<HessianEstimate> {
    model.check_k(k0)?;
    check_regular(model, k0, s)?;
    let w0 = model.omega(k0, s)?;
    // phases are compared relative to the centre so wrap-around at +-pi is harmless
    let f = |k: &[f64]| -> Result<f64> { Ok(wrap_phase(model.omega(k, s)? - w0)) };
    let h = HESSIAN_STEP;
    let d1 = second_differences(&f, k0, h)?;
    let d2 = second_differences(&f, k0, 2.0 * h)?;
    let n = k0.len();
    let matrix: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (4.0 * d1[i][j] - d2[i][j]) / 3.0).collect())
        .collect();

    let asymmetry = velocity_asymmetry(model, k0, s).unwrap_or(0.0);
    let warning = (asymmetry > ASYMMETRY_WARN).then(|| {
        let msg = format!(
            "Hessian at k = {k0:?}, branch {s}: velocity Jacobian asymmetry {asymmetry:.2e}; k0 may be near a singularity"
        );
        log::warn!("{msg}");
        msg
    });
    Ok(HessianEstimate {
        matrix,
        asymmetry,
        warning,
    })
}

fn velocity_asymmetry(model: &dyn DispersionModel, k0: &[f64], s: usize) -> Result<f64> {
    let n = k0.len();
    let h = HESSIAN_STEP;
    let mut jac = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut kp = k0.to_vec();
        let mut km = k0.to_vec();
        kp[i] += h;
        km[i] -= h;
        let vp = model.group_velocity(&kp, s)?;
        let vm = model.group_velocity(&km, s)?;
        for j in 0..n {
            jac[i][j] = (vp[j] - vm[j]) / (2.0 * h);
        }
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((jac[i][j] - jac[j][i]).abs());
        }
    }
    Ok(worst)
}

/// Eigen-decomposition of a symmetric 2x2 or general symmetric matrix.
pub fn symmetric_eigen(m: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.len();
    let mat = nalgebra::DMatrix::from_fn(n, n, |i, j| 0.5 * (m[i][j] + m[j][i]));
    let e = nalgebra::SymmetricEigen::new(mat);
    let vals = e.eigenvalues.iter().copied().collect();
    let vecs = (0..n)
        .map(|c| e.eigenvectors.column(c).iter().copied().collect())
        .collect();
    (vals, vecs)
}
