//! Eigensystems of the momentum coin, with branch labels.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::Schur;
use num_complex::Complex64;

use crate::coin::{momentum_matrix, CMatrix, CoinMatrix};
use crate::error::{QwError, Result};
use crate::spectral::dispersion::{grover2d_dispersion, grover3d_dispersion};

/// Phases closer than this are treated as one when breaking sort ties.
const TIE_TOL: f64 = 1e-12;

/// Eigenphase `omega` with `lambda = e^{-i omega}`, on `(-pi, pi]`.
pub fn phase_of(lambda: Complex64) -> f64 {
    let w = -lambda.im.atan2(lambda.re);
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Maps any angle onto `(-pi, pi]`.
pub fn wrap_phase(w: f64) -> f64 {
    let y = (w + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// Distance between two phases on the circle, in `[0, pi]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

/// Eigenphases and eigenvectors of `C_k`. `omegas[s - 1]` and column `s - 1`
/// of `vectors` belong to branch `s`.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub k: Vec<f64>,
    pub omegas: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenSystem {
    pub fn branches(&self) -> usize {
        self.omegas.len()
    }

    /// Eigenvector of branch `s` (1-based).
    pub fn vector(&self, s: usize) -> Vec<Complex64> {
        self.vectors.column(s - 1).iter().copied().collect()
    }

    /// Smallest circular distance from branch `s` to any other branch.
    pub fn gap(&self, s: usize) -> f64 {
        let w = self.omegas[s - 1];
        self.omegas
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != s - 1)
            .map(|(_, &o)| circular_distance(w, o))
            .fold(f64::INFINITY, f64::min)
    }

    /// Branches whose phase lies within `tol` of branch `s`, including `s`.
    pub fn degenerate_set(&self, s: usize, tol: f64) -> Vec<usize> {
        let w = self.omegas[s - 1];
        (1..=self.branches())
            .filter(|&t| circular_distance(w, self.omegas[t - 1]) < tol)
            .collect()
    }

    /// `max |C_k phi - e^{-i omega} phi|` over all branches.
    pub fn residual(&self, ck: &CMatrix) -> f64 {
        let mut worst = 0.0f64;
        for s in 0..self.branches() {
            let v = self.vectors.column(s);
            let lam = Complex64::from_polar(1.0, -self.omegas[s]);
            let r = ck * v - v * lam;
            worst = worst.max(r.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        worst
    }
}

/// Unlabeled eigen-decomposition of a unitary matrix via complex Schur form.
pub(crate) fn unitary_eigen(m: &CMatrix) -> Option<(Vec<f64>, CMatrix)> {
    let schur = Schur::try_new(m.clone(), 1e-15, 2000)?;
    let (q, t) = schur.unpack();
    let phases = (0..t.nrows()).map(|i| phase_of(t[(i, i)])).collect();
    Some((phases, q))
}

/// Rotates a vector so its largest-modulus component is real and positive.
pub fn fix_global_phase(v: &mut [Complex64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-12))
        .unwrap_or(0);
    let rot = v[pivot].conj() / v[pivot].norm();
    v.iter_mut().for_each(|z| *z *= rot);
}

fn lex_cmp(a: &[Complex64], b: &[Complex64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x
            .re
            .partial_cmp(&y.re)
            .unwrap_or(Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(Ordering::Equal));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Reference phases for coins with closed-form dispersion.
fn analytic_labels(c: &CoinMatrix, k: &[f64]) -> Option<Vec<f64>> {
    if !c.is_grover() {
        return None;
    }
    match c.dim_n() {
        2 => Some(grover2d_dispersion(k).to_vec()),
        3 => Some(grover3d_dispersion(k).to_vec()),
        _ => None,
    }
}

/// Assigns each reference phase the closest unused numeric phase, taking the
/// globally closest pairs first.
fn match_to_labels(labels: &[f64], phases: &[f64]) -> Vec<usize> {
    let n = labels.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (l, &target) in labels.iter().enumerate() {
        for (p, &w) in phases.iter().enumerate() {
            pairs.push((circular_distance(target, w), l, p));
        }
    }
    pairs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let mut assign = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for (_, l, p) in pairs {
        if assign[l] == usize::MAX && !used[p] {
            assign[l] = p;
            used[p] = true;
        }
    }
    assign
}

pub fn eigensystem_at(c: &CoinMatrix, k: &[f64]) -> Result<EigenSystem> {
    if k.len() != c.dim_n() {
        return Err(QwError::DimensionMismatch {
            expected: c.dim_n(),
            found: k.len(),
        });
    }
    let ck = momentum_matrix(c, k);
    let (phases, q) = unitary_eigen(&ck).ok_or_else(|| QwError::NumericalFailure { k: k.to_vec() })?;
    let d = phases.len();
    let mut cols: Vec<Vec<Complex64>> = (0..d)
        .map(|j| {
            let mut v: Vec<Complex64> = q.column(j).iter().copied().collect();
            fix_global_phase(&mut v);
            v
        })
        .collect();

    let order: Vec<usize> = match analytic_labels(c, k) {
        Some(labels) => match_to_labels(&labels, &phases),
        None => {
            let mut idx: Vec<usize> = (0..d).collect();
            idx.sort_by(|&a, &b| phases[a].partial_cmp(&phases[b]).unwrap_or(Ordering::Equal));
            // deterministic order inside near-equal phase groups
            let mut start = 0;
            while start < d {
                let mut end = start + 1;
                while end < d && phases[idx[end]] - phases[idx[end - 1]] < TIE_TOL {
                    end += 1;
                }
                idx[start..end].sort_by(|&a, &b| lex_cmp(&cols[a], &cols[b]));
                start = end;
            }
            idx
        }
    };

    let omegas: Vec<f64> = order.iter().map(|&i| phases[i]).collect();
    let mut vectors = CMatrix::zeros(d, d);
    for (s, &i) in order.iter().enumerate() {
        let v = std::mem::take(&mut cols[i]);
        for (r, z) in v.into_iter().enumerate() {
            vectors[(r, s)] = z;
        }
    }
    let sys = EigenSystem {
        k: k.to_vec(),
        omegas,
        vectors,
    };
    if !sys.residual(&ck).is_finite() || sys.residual(&ck) > 1e-10 {
        return Err(QwError::NumericalFailure { k: k.to_vec() });
    }
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::{dft_coin, grover_coin};

    fn sorted_circular(mut v: Vec<f64>) -> Vec<f64> {
        v.iter_mut().for_each(|w| *w = wrap_phase(*w));
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    fn multiset_distance(a: Vec<f64>, b: Vec<f64>) -> f64 {
        // greedy match is exact for tiny perturbations of the same multiset
        let mut b = b;
        let mut worst = 0.0f64;
        for x in a {
            let (j, d) = b
                .iter()
                .enumerate()
                .map(|(j, &y)| (j, circular_distance(x, y)))
                .min_by(|p, q| p.1.partial_cmp(&q.1).unwrap())
                .unwrap();
            worst = worst.max(d);
            b.remove(j);
        }
        worst
    }

    #[test]
    fn grover_2d_center_and_edge() {
        let c = grover_coin(2).unwrap();
        let e = eigensystem_at(&c, &[0.0, 0.0]).unwrap();
        let pi_count = e.omegas.iter().filter(|&&w| circular_distance(w, PI) < 1e-12).count();
        assert_eq!(pi_count, 3);
        assert!(circular_distance(e.omegas[3], 0.0) < 1e-12);

        let e = eigensystem_at(&c, &[PI, 0.0]).unwrap();
        let expected = [-PI / 2.0, PI / 2.0, PI, 0.0];
        for (w, x) in e.omegas.iter().zip(expected) {
            assert!(circular_distance(*w, x) < 1e-12, "{:?}", e.omegas);
        }
    }

    #[test]
    fn grover_3d_center_is_fivefold() {
        let c = grover_coin(3).unwrap();
        let e = eigensystem_at(&c, &[0.0, 0.0, 0.0]).unwrap();
        let pi_count = e.omegas.iter().filter(|&&w| circular_distance(w, PI) < 1e-12).count();
        assert_eq!(pi_count, 5);
        assert_eq!(e.degenerate_set(6, 1e-9), vec![1, 2, 3, 4, 6]);
    }

    #[test]
    fn orthonormal_and_reconstructs_coin() {
        for c in [grover_coin(2).unwrap(), dft_coin(2).unwrap(), grover_coin(3).unwrap()] {
            let n = c.dim_n();
            for j in 0..12 {
                let k: Vec<f64> = (0..n).map(|a| -PI + 0.37 * (j + 3 * a) as f64).map(wrap_phase).collect();
                let e = eigensystem_at(&c, &k).unwrap();
                let gram = e.vectors.adjoint() * &e.vectors;
                for r in 0..2 * n {
                    for s in 0..2 * n {
                        let t = if r == s { 1.0 } else { 0.0 };
                        assert!((gram[(r, s)] - Complex64::new(t, 0.0)).norm() < 1e-10);
                    }
                }
                let ck = momentum_matrix(&c, &k);
                let mut rebuilt = CMatrix::zeros(2 * n, 2 * n);
                for s in 0..2 * n {
                    let v = e.vectors.column(s);
                    rebuilt += v * v.adjoint() * Complex64::from_polar(1.0, -e.omegas[s]);
                }
                let err = (rebuilt - ck).iter().map(|z| z.norm()).fold(0.0, f64::max);
                assert!(err < 1e-10);
            }
        }
    }

    #[test]
    fn analytic_and_numeric_phases_agree_on_grids() {
        let g2 = grover_coin(2).unwrap();
        for i in 0..32 {
            for j in 0..32 {
                let k = [-PI + 2.0 * PI * i as f64 / 32.0, -PI + 2.0 * PI * j as f64 / 32.0];
                let e = eigensystem_at(&g2, &k).unwrap();
                let d = multiset_distance(grover2d_dispersion(&k).to_vec(), e.omegas.clone());
                assert!(d < 1e-10, "k = {k:?}: {d}");
            }
        }
        let g3 = grover_coin(3).unwrap();
        for i in 0..32 {
            for j in 0..32 {
                for l in 0..32 {
                    let k = [
                        -PI + 2.0 * PI * i as f64 / 32.0,
                        -PI + 2.0 * PI * j as f64 / 32.0,
                        -PI + 2.0 * PI * l as f64 / 32.0,
                    ];
                    let e = eigensystem_at(&g3, &k).unwrap();
                    let d = multiset_distance(grover3d_dispersion(&k).to_vec(), e.omegas.clone());
                    assert!(d < 1e-10, "k = {k:?}: {d}");
                }
            }
        }
    }

    #[test]
    fn labels_follow_analytic_values_away_from_degeneracies() {
        let c = grover_coin(2).unwrap();
        let k = [0.4, -1.1];
        let e = eigensystem_at(&c, &k).unwrap();
        for (w, x) in e.omegas.iter().zip(grover2d_dispersion(&k)) {
            assert!(circular_distance(*w, x) < 1e-12);
        }
    }

    #[test]
    fn phases_are_symmetric_under_reflection_and_swap() {
        let c = grover_coin(2).unwrap();
        for (k1, k2) in [(0.3, 1.9), (-2.2, 0.7), (1.0, 1.0)] {
            let base = sorted_circular(eigensystem_at(&c, &[k1, k2]).unwrap().omegas);
            for k in [[-k1, k2], [k1, -k2], [k2, k1]] {
                let other = sorted_circular(eigensystem_at(&c, &k).unwrap().omegas);
                assert!(multiset_distance(base.clone(), other) < 1e-10);
            }
        }
    }

    #[test]
    fn generic_coins_sort_ascending() {
        let c = dft_coin(2).unwrap();
        let e = eigensystem_at(&c, &[0.3, -0.8]).unwrap();
        assert!(e.omegas.windows(2).all(|w| w[0] <= w[1]));
        assert!(e.omegas.iter().all(|&w| w > -PI && w <= PI));
    }

    #[test]
    fn phase_convention() {
        assert_eq!(phase_of(Complex64::new(-1.0, 0.0)), PI);
        assert!((phase_of(Complex64::new(0.0, -1.0)) - PI / 2.0).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_phase(-PI), PI);
        assert!(circular_distance(PI, -PI + 1e-3) < 1.1e-3);
    }

    #[test]
    fn fixed_phase_has_positive_pivot() {
        let mut v = vec![Complex64::new(0.1, 0.2), Complex64::new(0.0, -0.9)];
        fix_global_phase(&mut v);
        assert!(v[1].im.abs() < 1e-15 && v[1].re > 0.0);
    }
}
