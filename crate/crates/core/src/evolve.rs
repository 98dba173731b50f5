//! Spectral (k-space) evolution and branch projection.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coin::{momentum_matrix, CMatrix, CoinMatrix};
use crate::error::{QwError, Result};
use crate::fft::{bin_wavenumber, FftNd};
use crate::lattice::{evolve_position, Grid, LatticeField};
use crate::spectral::degeneracy::degenerate_groups;
use crate::spectral::eigen::{eigensystem_at, unitary_eigen};

/// Branches closer than this at a grid k are projected as one eigenspace.
pub const PROJECTION_DEGENERACY_TOL: f64 = 1e-9;
/// Eigen-decompositions are kept in memory below this many bytes.
const CACHE_LIMIT_BYTES: usize = 256 << 20;

fn grid_k(grid: &Grid, flat: usize) -> Vec<f64> {
    grid.unravel(flat)
        .iter()
        .zip(&grid.shape)
        .map(|(&m, &l)| bin_wavenumber(m, l))
        .collect()
}

/// Site-major array of FFT'd coin components.
fn to_k_space(state: &LatticeField, plan: &FftNd) -> Vec<Complex64> {
    let mut comps = state.components();
    comps.par_iter_mut().for_each(|c| plan.forward(c));
    interleave(&comps)
}

fn from_k_space(grid: &Grid, dim_n: usize, time: u64, data: &[Complex64], plan: &FftNd) -> LatticeField {
    let d = 2 * dim_n;
    let mut comps: Vec<Vec<Complex64>> = (0..d)
        .map(|c| data.iter().skip(c).step_by(d).copied().collect())
        .collect();
    comps.par_iter_mut().for_each(|c| plan.inverse(c));
    let mut out = LatticeField::zeros(grid.clone());
    out.time = time;
    out.set_components(&comps);
    out
}

fn interleave(comps: &[Vec<Complex64>]) -> Vec<Complex64> {
    let d = comps.len();
    let n = comps[0].len();
    let mut out = vec![Complex64::new(0.0, 0.0); n * d];
    out.par_chunks_mut(d).enumerate().for_each(|(site, chunk)| {
        for (c, z) in chunk.iter_mut().enumerate() {
            *z = comps[c][site];
        }
    });
    out
}

fn apply_power(phases: &[f64], q: &CMatrix, steps: u64, v: &mut [Complex64]) {
    let d = v.len();
    // coefficients in the eigenbasis, rotated, then mapped back
    let mut coef = vec![Complex64::new(0.0, 0.0); d];
    for s in 0..d {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..d {
            acc += q[(r, s)].conj() * v[r];
        }
        // reduce omega * t modulo 2 pi in two steps to keep the argument small
        let turns = (phases[s] * steps as f64).rem_euclid(2.0 * std::f64::consts::PI);
        coef[s] = acc * Complex64::from_polar(1.0, -turns);
    }
    for (r, z) in v.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for s in 0..d {
            acc += q[(r, s)] * coef[s];
        }
        *z = acc;
    }
}

/// Evolution operator `C_k^t` at every grid k, applied to a fixed initial state.
///
/// The initial state is transformed once; each call to [`SpectralPropagator::at`]
/// costs one pass of `2N x 2N` work per k plus inverse FFTs.
pub struct SpectralPropagator {
    grid: Grid,
    dim_n: usize,
    time0: u64,
    plan: FftNd,
    initial: Vec<Complex64>,
    coin: CoinMatrix,
    cache: Option<Vec<(Vec<f64>, CMatrix)>>,
}

impl SpectralPropagator {
    pub fn new(state: &LatticeField, coin: &CoinMatrix) -> Result<Self> {
        state.check_coin(coin)?;
        let plan = FftNd::new(&state.grid.shape);
        let initial = to_k_space(state, &plan);
        let d = state.coin_dim();
        let bytes = state.grid.sites() * d * (d + 1) * 16;
        let cache = if bytes <= CACHE_LIMIT_BYTES {
            Some(
                (0..state.grid.sites())
                    .into_par_iter()
                    .map(|i| {
                        let k = grid_k(&state.grid, i);
                        unitary_eigen(&momentum_matrix(coin, &k)).ok_or(QwError::NumericalFailure { k })
                    })
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        Ok(SpectralPropagator {
            grid: state.grid.clone(),
            dim_n: state.dim_n,
            time0: state.time,
            plan,
            initial,
            coin: coin.clone(),
            cache,
        })
    }

    /// State after `steps` further steps.
    pub fn at(&self, steps: u64) -> Result<LatticeField> {
        let d = 2 * self.dim_n;
        let mut data = self.initial.clone();
        let failure: std::sync::Mutex<Option<Vec<f64>>> = std::sync::Mutex::new(None);
        data.par_chunks_mut(d).enumerate().for_each(|(i, v)| match &self.cache {
            Some(cache) => apply_power(&cache[i].0, &cache[i].1, steps, v),
            None => {
                let k = grid_k(&self.grid, i);
                match unitary_eigen(&momentum_matrix(&self.coin, &k)) {
                    Some((phases, q)) => apply_power(&phases, &q, steps, v),
                    None => {
                        let mut slot = failure.lock().unwrap();
                        if slot.is_none() {
                            *slot = Some(k);
                        }
                    }
                }
            }
        });
        if let Some(k) = failure.into_inner().unwrap() {
            return Err(QwError::NumericalFailure { k });
        }
        Ok(from_k_space(&self.grid, self.dim_n, self.time0 + steps, &data, &self.plan))
    }
}

/// `steps` steps of the walk computed in k-space.
pub fn evolve_spectral(state: &LatticeField, coin: &CoinMatrix, steps: u64) -> Result<LatticeField> {
    state.check_coin(coin)?;
    if steps == 0 {
        return Ok(state.clone());
    }
    let plan = FftNd::new(&state.grid.shape);
    let mut data = to_k_space(state, &plan);
    let d = state.coin_dim();
    let grid = &state.grid;
    data.par_chunks_mut(d)
        .enumerate()
        .try_for_each(|(i, v)| {
            let k = grid_k(grid, i);
            let (phases, q) = unitary_eigen(&momentum_matrix(coin, &k)).ok_or(QwError::NumericalFailure { k })?;
            apply_power(&phases, &q, steps, v);
            Ok::<(), QwError>(())
        })?;
    Ok(from_k_space(grid, state.dim_n, state.time + steps, &data, &plan))
}

fn check_branches(coin: &CoinMatrix, branches: &[usize]) -> Result<Vec<bool>> {
    let d = coin.side();
    let mut mask = vec![false; d];
    for &s in branches {
        if s == 0 || s > d {
            return Err(QwError::invalid(format!("branch {s} out of range 1..={d}")));
        }
        mask[s - 1] = true;
    }
    Ok(mask)
}

/// Keeps only the components along the selected branches at every k.
///
/// Where branches are degenerate at a grid k the eigenspace projector is used,
/// weighted by the fraction of the degenerate set that was selected.
pub fn project_onto_branches(state: &LatticeField, coin: &CoinMatrix, branches: &[usize]) -> Result<LatticeField> {
    state.check_coin(coin)?;
    let mask = check_branches(coin, branches)?;
    if !mask.iter().any(|&m| m) {
        let mut z = LatticeField::zeros(state.grid.clone());
        z.time = state.time;
        return Ok(z);
    }
    let plan = FftNd::new(&state.grid.shape);
    let mut data = to_k_space(state, &plan);
    let d = state.coin_dim();
    let grid = &state.grid;
    data.par_chunks_mut(d)
        .enumerate()
        .try_for_each(|(i, v)| {
            let k = grid_k(grid, i);
            let e = eigensystem_at(coin, &k)?;
            let mut out = vec![Complex64::new(0.0, 0.0); d];
            for group in degenerate_groups(&e, PROJECTION_DEGENERACY_TOL) {
                let chosen = group.iter().filter(|&&s| mask[s - 1]).count();
                if chosen == 0 {
                    continue;
                }
                let w = chosen as f64 / group.len() as f64;
                for &s in &group {
                    let col = e.vectors.column(s - 1);
                    let amp: Complex64 = col.iter().zip(v.iter()).map(|(p, x)| p.conj() * x).sum();
                    for r in 0..d {
                        out[r] += col[r] * amp * w;
                    }
                }
            }
            v.copy_from_slice(&out);
            Ok::<(), QwError>(())
        })?;
    Ok(from_k_space(grid, state.dim_n, state.time, &data, &plan))
}

/// Fraction of the squared norm carried by each branch (summing to the norm).
/// Degenerate groups share their weight equally among members.
pub fn branch_weights(state: &LatticeField, coin: &CoinMatrix) -> Result<Vec<f64>> {
    state.check_coin(coin)?;
    let plan = FftNd::new(&state.grid.shape);
    let data = to_k_space(state, &plan);
    let d = state.coin_dim();
    let grid = &state.grid;
    let per_k: Vec<Vec<f64>> = data
        .par_chunks(d)
        .enumerate()
        .map(|(i, v)| {
            let e = eigensystem_at(coin, &grid_k(grid, i))?;
            let mut w = vec![0.0; d];
            for group in degenerate_groups(&e, PROJECTION_DEGENERACY_TOL) {
                let total: f64 = group
                    .iter()
                    .map(|&s| {
                        let col = e.vectors.column(s - 1);
                        col.iter().zip(v).map(|(p, x)| p.conj() * x).sum::<Complex64>().norm_sqr()
                    })
                    .sum();
                for &s in &group {
                    w[s - 1] = total / group.len() as f64;
                }
            }
            Ok(w)
        })
        .collect::<Result<_>>()?;
    let n = grid.sites() as f64;
    let mut out = vec![0.0; d];
    for w in per_k {
        for s in 0..d {
            out[s] += w[s] / n;
        }
    }
    Ok(out)
}

/// A way of advancing lattice states in time.
pub trait Evolver: Send + Sync {
    fn name(&self) -> &str;
    fn evolve(&self, state: &LatticeField, coin: &CoinMatrix, steps: u64) -> Result<LatticeField>;

    /// Calls `sink` with the state at each of the increasing `times`.
    fn trajectory(
        &self,
        state: &LatticeField,
        coin: &CoinMatrix,
        times: &[u64],
        sink: &mut dyn FnMut(&LatticeField) -> Result<()>,
    ) -> Result<()> {
        let mut cur = state.clone();
        let mut now = 0;
        for &t in times {
            if t < now {
                return Err(QwError::invalid("snapshot times must be increasing"));
            }
            cur = self.evolve(&cur, coin, t - now)?;
            now = t;
            sink(&cur)?;
        }
        Ok(())
    }
}

pub struct PositionBackend;

impl Evolver for PositionBackend {
    fn name(&self) -> &str {
        "position"
    }
    fn evolve(&self, state: &LatticeField, coin: &CoinMatrix, steps: u64) -> Result<LatticeField> {
        evolve_position(state, coin, steps)
    }
}

pub struct SpectralBackend;

impl Evolver for SpectralBackend {
    fn name(&self) -> &str {
        "spectral"
    }
    fn evolve(&self, state: &LatticeField, coin: &CoinMatrix, steps: u64) -> Result<LatticeField> {
        evolve_spectral(state, coin, steps)
    }
    fn trajectory(
        &self,
        state: &LatticeField,
        coin: &CoinMatrix,
        times: &[u64],
        sink: &mut dyn FnMut(&LatticeField) -> Result<()>,
    ) -> Result<()> {
        let prop = SpectralPropagator::new(state, coin)?;
        let mut last = 0;
        for &t in times {
            if t < last {
                return Err(QwError::invalid("snapshot times must be increasing"));
            }
            last = t;
            let s = if t == 0 { state.clone() } else { prop.at(t)? };
            sink(&s)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::{dft_coin, grover_coin};
    use crate::lattice::{probability_field, step_position};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(shape: Vec<usize>, seed: u64) -> LatticeField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = LatticeField::zeros(Grid::centered(shape).unwrap());
        for z in f.amplitudes.iter_mut() {
            *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let n = f.norm_sqr().sqrt();
        f.amplitudes.iter_mut().for_each(|z| *z /= n);
        f
    }

    #[test]
    fn zero_steps_is_identity() {
        let f = random_state(vec![8, 8], 1);
        let g = evolve_spectral(&f, &grover_coin(2).unwrap(), 0).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn matches_position_stepping_in_2d() {
        let coin = grover_coin(2).unwrap();
        let f = random_state(vec![16, 16], 2);
        let a = evolve_spectral(&f, &coin, 10).unwrap();
        let b = evolve_position(&f, &coin, 10).unwrap();
        assert!(a.max_abs_diff(&b) <= 1e-10);
        assert_eq!(a.time, 10);
    }

    #[test]
    fn one_dimensional_point_source() {
        let coin = grover_coin(1).unwrap();
        let grid = Grid::centered(vec![32]).unwrap();
        let f = LatticeField::point_source(grid, &[0], &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
        let a = evolve_spectral(&f, &coin, 5).unwrap();
        let b = evolve_position(&f, &coin, 5).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-10);
        // the flip coin just bounces the walker between two sites
        let idx = a.grid.index_of(&[-1]).unwrap();
        assert!((a.site(idx)[1] - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        let idx = a.grid.index_of(&[0]).unwrap();
        let g = evolve_spectral(&f, &coin, 6).unwrap();
        assert!((g.site(idx)[0] - Complex64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn propagator_matches_direct_evolution() {
        let coin = dft_coin(2).unwrap();
        let f = random_state(vec![8, 16], 9);
        let prop = SpectralPropagator::new(&f, &coin).unwrap();
        for t in [0, 3, 7] {
            let a = prop.at(t).unwrap();
            let b = evolve_position(&f, &coin, t).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-10);
        }
    }

    #[test]
    fn projection_completeness_and_empty_set() {
        for coin in [grover_coin(2).unwrap(), dft_coin(2).unwrap()] {
            let f = random_state(vec![8, 8], 4);
            let all = project_onto_branches(&f, &coin, &[1, 2, 3, 4]).unwrap();
            assert!(all.max_abs_diff(&f) < 1e-12);
            let none = project_onto_branches(&f, &coin, &[]).unwrap();
            assert!(none.norm_sqr() == 0.0);
            let w = branch_weights(&f, &coin).unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(project_onto_branches(&random_state(vec![4, 4], 1), &grover_coin(2).unwrap(), &[5]).is_err());
    }

    #[test]
    fn flat_sheets_do_not_move() {
        let coin = grover_coin(2).unwrap();
        let f = random_state(vec![16, 16], 5);
        let p4 = project_onto_branches(&f, &coin, &[4]).unwrap();
        let after = step_position(&p4, &coin).unwrap();
        assert!(after.max_abs_diff(&p4) < 1e-10);

        let p3 = project_onto_branches(&f, &coin, &[3]).unwrap();
        let one = step_position(&p3, &coin).unwrap();
        let two = step_position(&one, &coin).unwrap();
        let negated: Vec<Complex64> = p3.amplitudes.iter().map(|z| -z).collect();
        let neg = LatticeField::from_amplitudes(p3.grid.clone(), negated, 1).unwrap();
        assert!(one.max_abs_diff(&neg) < 1e-10);
        assert!(two.max_abs_diff(&p3) < 1e-10);
        let pa = probability_field(&p3);
        let pb = probability_field(&one);
        assert!(pa.l1_distance(&pb) < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn spectral_equals_position(seed in any::<u64>(), n in 1usize..=3, steps in 0u64..=20, use_dft in any::<bool>()) {
            let side = match n { 1 => 32, 2 => 12, _ => 6 };
            let coin = if use_dft { dft_coin(n).unwrap() } else { grover_coin(n).unwrap() };
            let f = random_state(vec![side; n], seed);
            let a = evolve_spectral(&f, &coin, steps).unwrap();
            let b = evolve_position(&f, &coin, steps).unwrap();
            prop_assert!(a.max_abs_diff(&b) < 1e-10);
        }

        #[test]
        fn results_do_not_depend_on_worker_count(seed in any::<u64>(), threads in 1usize..=4) {
            let coin = grover_coin(2).unwrap();
            let f = random_state(vec![16, 8], seed);
            let reference = evolve_spectral(&f, &coin, 7).unwrap();
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let other = pool.install(|| evolve_spectral(&f, &coin, 7)).unwrap();
            prop_assert!(reference.amplitudes == other.amplitudes);
            let pos = pool.install(|| step_position(&f, &coin)).unwrap();
            prop_assert!(pos == step_position(&f, &coin).unwrap());
        }
    }
}
