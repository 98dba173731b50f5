//! Dispersion sheets sampled on regular k-grids.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{QwError, Result};
use crate::spectral::dispersion::DispersionModel;

/// Sampled `omega^(s)(k)`; grid-major with the branch index fastest. Values
/// follow the branch convention of the model that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionSurface {
    /// k samples per axis; an axis held fixed has a single sample.
    pub axes: Vec<Vec<f64>>,
    pub branches: usize,
    pub omegas: Vec<f64>,
}

impl DispersionSurface {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len()).collect()
    }

    pub fn points(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }

    pub fn k_at(&self, mut flat: usize) -> Vec<f64> {
        let mut k = vec![0.0; self.axes.len()];
        for a in (0..self.axes.len()).rev() {
            let n = self.axes[a].len();
            k[a] = self.axes[a][flat % n];
            flat /= n;
        }
        k
    }

    pub fn omega(&self, flat: usize, s: usize) -> f64 {
        self.omegas[flat * self.branches + s - 1]
    }
}

/// Uniform samples `-pi + 2 pi m / n`, `m = 0..n`.
pub fn uniform_axis(n: usize) -> Vec<f64> {
    (0..n).map(|m| -PI + 2.0 * PI * m as f64 / n as f64).collect()
}

/// Samples `model` on a full `resolution^N` grid.
pub fn compute_surface(model: &dyn DispersionModel, resolution: usize) -> Result<DispersionSurface> {
    compute_slice(model, resolution, &vec![None; model.dim_n()])
}

/// Samples `model` with some axes pinned: `fixed[a] = Some(k_a)`.
pub fn compute_slice(model: &dyn DispersionModel, resolution: usize, fixed: &[Option<f64>]) -> Result<DispersionSurface> {
    if fixed.len() != model.dim_n() {
        return Err(QwError::DimensionMismatch {
            expected: model.dim_n(),
            found: fixed.len(),
        });
    }
    if resolution == 0 {
        return Err(QwError::invalid("surface resolution must be positive"));
    }
    let axes: Vec<Vec<f64>> = fixed
        .iter()
        .map(|f| match f {
            Some(v) => vec![*v],
            None => uniform_axis(resolution),
        })
        .collect();
    let mut surf = DispersionSurface {
        axes,
        branches: model.branches(),
        omegas: Vec::new(),
    };
    let rows: Vec<Vec<f64>> = (0..surf.points())
        .into_par_iter()
        .map(|i| model.omegas(&surf.k_at(i)))
        .collect::<Result<_>>()?;
    surf.omegas = rows.into_iter().flatten().collect();
    Ok(surf)
}

/// Group velocity of branch `s` on the surface grid; `None` at singular points.
pub fn velocity_field(model: &dyn DispersionModel, surf: &DispersionSurface, s: usize) -> Result<Vec<Option<Vec<f64>>>> {
    model.check_branch(s)?;
    Ok((0..surf.points())
        .into_par_iter()
        .map(|i| model.group_velocity(&surf.k_at(i), s).ok())
        .collect())
}
