//! Lattice states, the position-space map and probability moments.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coin::{coin_axis_dir, CoinMatrix};
use crate::error::{QwError, Result};

/// Sites closer than this to a box face count as "near the edge".
pub const EDGE_MARGIN: usize = 3;
/// Probability above which a near-edge site triggers a wrap-risk warning.
pub const EDGE_THRESHOLD: f64 = 1e-8;

/// Row-major site layout (last axis fastest) shared by fields and FFTs.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub shape: Vec<usize>,
    /// Lattice coordinate of array index 0 along each axis.
    pub origin: Vec<i64>,
}

impl Grid {
    pub fn new(shape: Vec<usize>, origin: Vec<i64>) -> Result<Self> {
        if shape.is_empty() {
            return Err(QwError::InvalidDimension(0));
        }
        if shape.contains(&0) {
            return Err(QwError::invalid("every axis needs at least one site"));
        }
        if origin.len() != shape.len() {
            return Err(QwError::DimensionMismatch {
                expected: shape.len(),
                found: origin.len(),
            });
        }
        Ok(Grid { shape, origin })
    }

    /// Box with the coordinate origin at the center site (origin `-L/2`).
    pub fn centered(shape: Vec<usize>) -> Result<Self> {
        let origin = shape.iter().map(|&l| -((l / 2) as i64)).collect();
        Grid::new(shape, origin)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn sites(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.shape.len()];
        for a in (0..self.shape.len().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.shape[a + 1];
        }
        s
    }

    /// Array indices of a flat site index.
    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let mut c = vec![0usize; self.shape.len()];
        for a in (0..self.shape.len()).rev() {
            c[a] = idx % self.shape[a];
            idx /= self.shape[a];
        }
        c
    }

    /// Lattice coordinates of a flat site index.
    pub fn coords(&self, idx: usize) -> Vec<i64> {
        self.unravel(idx)
            .iter()
            .zip(&self.origin)
            .map(|(&i, &o)| i as i64 + o)
            .collect()
    }

    /// Flat index of a lattice point, wrapping periodically.
    pub fn index_wrapped(&self, x: &[i64]) -> usize {
        let mut idx = 0usize;
        for a in 0..self.shape.len() {
            let l = self.shape[a] as i64;
            let i = (x[a] - self.origin[a]).rem_euclid(l) as usize;
            idx = idx * self.shape[a] + i;
        }
        idx
    }

    /// Flat index of a lattice point, or `None` if it lies outside the box.
    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        if x.len() != self.shape.len() {
            return None;
        }
        let mut idx = 0usize;
        for a in 0..self.shape.len() {
            let i = x[a] - self.origin[a];
            if i < 0 || i >= self.shape[a] as i64 {
                return None;
            }
            idx = idx * self.shape[a] + i as usize;
        }
        Some(idx)
    }

    /// Distance in sites from a flat index to the nearest box face.
    pub fn edge_distance(&self, idx: usize) -> usize {
        self.unravel(idx)
            .iter()
            .zip(&self.shape)
            .map(|(&i, &l)| i.min(l - 1 - i))
            .min()
            .unwrap_or(0)
    }
}

/// Per-site coin amplitudes, site-major with the coin component fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    pub grid: Grid,
    pub dim_n: usize,
    pub amplitudes: Vec<Complex64>,
    pub time: u64,
}

impl LatticeField {
    pub fn zeros(grid: Grid) -> Self {
        let dim_n = grid.dim();
        let len = grid.sites() * 2 * dim_n;
        LatticeField {
            grid,
            dim_n,
            amplitudes: vec![Complex64::new(0.0, 0.0); len],
            time: 0,
        }
    }

    pub fn from_amplitudes(grid: Grid, amplitudes: Vec<Complex64>, time: u64) -> Result<Self> {
        let dim_n = grid.dim();
        let expected = grid.sites() * 2 * dim_n;
        if amplitudes.len() != expected {
            return Err(QwError::DimensionMismatch {
                expected,
                found: amplitudes.len(),
            });
        }
        Ok(LatticeField {
            grid,
            dim_n,
            amplitudes,
            time,
        })
    }

    /// A single occupied site at lattice point `x` carrying `coin`.
    pub fn point_source(grid: Grid, x: &[i64], coin: &[Complex64]) -> Result<Self> {
        let mut f = LatticeField::zeros(grid);
        if coin.len() != f.coin_dim() {
            return Err(QwError::DimensionMismatch {
                expected: f.coin_dim(),
                found: coin.len(),
            });
        }
        let site = f
            .grid
            .index_of(x)
            .ok_or_else(|| QwError::invalid(format!("point {x:?} lies outside the box")))?;
        let d = f.coin_dim();
        f.amplitudes[site * d..(site + 1) * d].copy_from_slice(coin);
        Ok(f)
    }

    pub fn coin_dim(&self) -> usize {
        2 * self.dim_n
    }

    pub fn shape(&self) -> &[usize] {
        &self.grid.shape
    }

    pub fn origin(&self) -> &[i64] {
        &self.grid.origin
    }

    pub fn site(&self, idx: usize) -> &[Complex64] {
        let d = self.coin_dim();
        &self.amplitudes[idx * d..(idx + 1) * d]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest entrywise modulus of the difference of two same-shaped fields.
    pub fn max_abs_diff(&self, other: &LatticeField) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Splits into one contiguous array per coin component.
    pub fn components(&self) -> Vec<Vec<Complex64>> {
        let d = self.coin_dim();
        (0..d)
            .map(|c| self.amplitudes.iter().skip(c).step_by(d).copied().collect())
            .collect()
    }

    /// Inverse of [`LatticeField::components`].
    pub fn set_components(&mut self, comps: &[Vec<Complex64>]) {
        let d = self.coin_dim();
        self.amplitudes
            .par_chunks_mut(d)
            .enumerate()
            .for_each(|(site, chunk)| {
                for (c, z) in chunk.iter_mut().enumerate() {
                    *z = comps[c][site];
                }
            });
    }

    pub(crate) fn check_coin(&self, c: &CoinMatrix) -> Result<()> {
        if c.dim_n() != self.dim_n {
            return Err(QwError::invalid(format!(
                "coin acts on N = {} but the lattice has N = {}",
                c.dim_n(),
                self.dim_n
            )));
        }
        Ok(())
    }
}

/// One application of the walk map on the periodic box.
pub fn step_position(state: &LatticeField, c: &CoinMatrix) -> Result<LatticeField> {
    state.check_coin(c)?;
    let d = state.coin_dim();
    let strides = state.grid.strides();
    let shape = &state.grid.shape;
    let coin: Vec<Complex64> = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| c.get(i, j))
        .collect();
    // For each output component, the axis and signed displacement it arrives by.
    let moves: Vec<(usize, isize)> = (0..d)
        .map(|r| {
            let (axis, dir) = coin_axis_dir(r);
            (axis, dir.step())
        })
        .collect();
    let src = &state.amplitudes;
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    out.par_chunks_mut(d).enumerate().for_each(|(site, chunk)| {
        for (r, z) in chunk.iter_mut().enumerate() {
            let (axis, step) = moves[r];
            let l = shape[axis];
            let i = (site / strides[axis]) % l;
            // amplitude arriving at x along +u came from x - u
            let from = (i as isize - step).rem_euclid(l as isize) as usize;
            let source = site + from * strides[axis] - i * strides[axis];
            let row = &coin[r * d..(r + 1) * d];
            let cell = &src[source * d..(source + 1) * d];
            let mut acc = Complex64::new(0.0, 0.0);
            for (cij, psi) in row.iter().zip(cell) {
                acc += cij * psi;
            }
            *z = acc;
        }
    });
    Ok(LatticeField {
        grid: state.grid.clone(),
        dim_n: state.dim_n,
        amplitudes: out,
        time: state.time + 1,
    })
}

/// `steps` applications of [`step_position`].
pub fn evolve_position(state: &LatticeField, c: &CoinMatrix, steps: u64) -> Result<LatticeField> {
    state.check_coin(c)?;
    let mut cur = state.clone();
    for _ in 0..steps {
        cur = step_position(&cur, c)?;
    }
    Ok(cur)
}

/// Periodic translation by the integer vector `d`.
pub fn translate(state: &LatticeField, d: &[i64]) -> Result<LatticeField> {
    if d.len() != state.dim_n {
        return Err(QwError::DimensionMismatch {
            expected: state.dim_n,
            found: d.len(),
        });
    }
    let cd = state.coin_dim();
    let mut out = LatticeField::zeros(state.grid.clone());
    out.time = state.time;
    for site in 0..state.grid.sites() {
        let x: Vec<i64> = state
            .grid
            .coords(site)
            .iter()
            .zip(d)
            .map(|(a, b)| a + b)
            .collect();
        let dst = state.grid.index_wrapped(&x);
        out.amplitudes[dst * cd..(dst + 1) * cd].copy_from_slice(state.site(site));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub time: u64,
}

impl ProbabilityField {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn at(&self, x: &[i64]) -> Option<f64> {
        self.grid.index_of(x).map(|i| self.values[i])
    }

    /// L1 distance between two fields on the same grid.
    pub fn l1_distance(&self, other: &ProbabilityField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Largest probability found within [`EDGE_MARGIN`] sites of a face.
    pub fn edge_mass(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.edge_distance(*i) < EDGE_MARGIN)
            .map(|(_, &v)| v)
            .fold(0.0, f64::max)
    }

    /// Text of a wrap-risk warning, if the field touches the box edge.
    pub fn wrap_warning(&self) -> Option<String> {
        let m = self.edge_mass();
        if m > EDGE_THRESHOLD {
            let msg = format!(
                "wrap risk at t = {}: probability {m:.3e} within {EDGE_MARGIN} sites of the box edge",
                self.time
            );
            log::warn!("{msg}");
            Some(msg)
        } else {
            None
        }
    }
}

pub fn probability_field(state: &LatticeField) -> ProbabilityField {
    let d = state.coin_dim();
    let values = state
        .amplitudes
        .par_chunks(d)
        .map(|cell| cell.iter().map(|z| z.norm_sqr()).sum())
        .collect();
    ProbabilityField {
        grid: state.grid.clone(),
        values,
        time: state.time,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary {
    pub total: f64,
    pub centroid: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
}

impl MomentSummary {
    /// Square roots of the covariance diagonal.
    pub fn std_devs(&self) -> Vec<f64> {
        (0..self.centroid.len())
            .map(|a| self.covariance[a][a].max(0.0).sqrt())
            .collect()
    }

    /// Variance along a (not necessarily unit) direction.
    pub fn variance_along(&self, dir: &[f64]) -> f64 {
        let n: f64 = dir.iter().map(|x| x * x).sum::<f64>();
        let mut v = 0.0;
        for i in 0..dir.len() {
            for j in 0..dir.len() {
                v += dir[i] * self.covariance[i][j] * dir[j];
            }
        }
        v / n
    }
}

pub fn moments(p: &ProbabilityField) -> Result<MomentSummary> {
    moments_where(p, |_| true)
}

/// Moments of the part of `p` on sites whose lattice coordinates satisfy `keep`.
pub fn moments_where<F: Fn(&[i64]) -> bool>(p: &ProbabilityField, keep: F) -> Result<MomentSummary> {
    let n = p.grid.dim();
    let mut total = 0.0;
    let mut first = vec![0.0; n];
    let mut second = vec![vec![0.0; n]; n];
    for (idx, &w) in p.values.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let x = p.grid.coords(idx);
        if !keep(&x) {
            continue;
        }
        total += w;
        for a in 0..n {
            first[a] += w * x[a] as f64;
            for b in 0..n {
                second[a][b] += w * (x[a] * x[b]) as f64;
            }
        }
    }
    if total <= 0.0 {
        return Err(QwError::DegenerateField);
    }
    let centroid: Vec<f64> = first.iter().map(|m| m / total).collect();
    let covariance = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| second[a][b] / total - centroid[a] * centroid[b])
                .collect()
        })
        .collect();
    Ok(MomentSummary {
        total,
        centroid,
        covariance,
    })
}
