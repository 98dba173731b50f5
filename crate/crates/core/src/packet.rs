//! Extended initial states: envelope times carrier times a fixed coin vector.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coin::CoinMatrix;
use crate::error::{QwError, Result};
use crate::lattice::{Grid, LatticeField};
use crate::spectral::eigen::eigensystem_at;

/// Branches closer than this at `k0` make a branch label ambiguous.
pub const AMBIGUITY_TOL: f64 = 1e-9;
/// Envelope magnitude at the box edge (relative to peak) that triggers a warning.
pub const EDGE_ENVELOPE_RATIO: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum EnvelopeKind {
    Gaussian,
    /// Gaussian multiplied by `prod_a sinc((x_a - c_a) / sigma0)`.
    GaussianSinc { sigma0: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoinSelector {
    /// Eigenvector of branch `s` at the carrier.
    Branch(usize),
    /// Equal-weight sum of the listed branch eigenvectors at the carrier.
    Branches(Vec<usize>),
    /// `1/2 (1, 1, -1, -1)` for the 2D Grover conical point.
    PhiD,
    Explicit(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavePacketSpec {
    pub envelope: EnvelopeKind,
    pub sigma: f64,
    /// Carrier wavenumber in radians per site.
    pub k0: Vec<f64>,
    pub coin: CoinSelector,
    /// Envelope centre in lattice coordinates; the box centre when `None`.
    pub center: Option<Vec<f64>>,
}

impl WavePacketSpec {
    pub fn gaussian(sigma: f64, k0: Vec<f64>, coin: CoinSelector) -> Self {
        WavePacketSpec {
            envelope: EnvelopeKind::Gaussian,
            sigma,
            k0,
            coin,
            center: None,
        }
    }

    pub fn with_center(mut self, center: Vec<f64>) -> Self {
        self.center = Some(center);
        self
    }

    pub fn with_sinc(mut self, sigma0: f64) -> Self {
        self.envelope = EnvelopeKind::GaussianSinc { sigma0 };
        self
    }

    pub fn dim(&self) -> usize {
        self.k0.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(QwError::invalid(format!("sigma must be positive, got {}", self.sigma)));
        }
        if let EnvelopeKind::GaussianSinc { sigma0 } = self.envelope {
            if !(sigma0 > 0.0) || !sigma0.is_finite() {
                return Err(QwError::invalid(format!("sigma0 must be positive, got {sigma0}")));
            }
        }
        if self.k0.is_empty() {
            return Err(QwError::InvalidDimension(0));
        }
        if let Some(c) = &self.center {
            if c.len() != self.k0.len() {
                return Err(QwError::DimensionMismatch {
                    expected: self.k0.len(),
                    found: c.len(),
                });
            }
        }
        Ok(())
    }

    /// Envelope centre on `grid` (the coordinate origin of a centred box by default).
    pub fn center_on(&self, grid: &Grid) -> Vec<f64> {
        self.center.clone().unwrap_or_else(|| {
            grid.shape
                .iter()
                .zip(&grid.origin)
                .map(|(&l, &o)| (o + (l / 2) as i64) as f64)
                .collect()
        })
    }

    /// Unnormalised envelope value at lattice point `x`.
    pub fn envelope_at(&self, x: &[f64], center: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum();
        let g = (-r2 / (2.0 * self.sigma * self.sigma)).exp();
        match self.envelope {
            EnvelopeKind::Gaussian => g,
            EnvelopeKind::GaussianSinc { sigma0 } => {
                g * x.iter().zip(center).map(|(a, c)| sinc((a - c) / sigma0)).product::<f64>()
            }
        }
    }
}

/// `sin(pi x) / (pi x)`, equal to 1 at `x = 0`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - (std::f64::consts::PI * x).powi(2) / 6.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// `1/2 (1, 1, -1, -1)`.
pub fn phi_d() -> Vec<Complex64> {
    [0.5, 0.5, -0.5, -0.5].iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// Eigenvector of branch `s` at `k0`, with its largest component real and positive.
pub fn branch_coin_at(c: &CoinMatrix, k0: &[f64], s: usize) -> Result<Vec<Complex64>> {
    if s == 0 || s > c.side() {
        return Err(QwError::invalid(format!("branch {s} out of range 1..={}", c.side())));
    }
    let e = eigensystem_at(c, k0)?;
    if e.gap(s) < AMBIGUITY_TOL {
        return Err(QwError::AmbiguousBranch {
            k: k0.to_vec(),
            branch: s,
        });
    }
    Ok(e.vector(s))
}

/// The coin vector a packet description asks for.
pub fn resolve_coin(spec: &WavePacketSpec, c: &CoinMatrix) -> Result<Vec<Complex64>> {
    let d = c.side();
    let v = match &spec.coin {
        CoinSelector::Branch(s) => branch_coin_at(c, &spec.k0, *s)?,
        CoinSelector::Branches(set) => {
            if set.is_empty() {
                return Err(QwError::invalid("empty branch list in coin selector"));
            }
            let mut acc = vec![Complex64::new(0.0, 0.0); d];
            for &s in set {
                for (a, b) in acc.iter_mut().zip(branch_coin_at(c, &spec.k0, s)?) {
                    *a += b;
                }
            }
            let n = (set.len() as f64).sqrt();
            acc.into_iter().map(|z| z / n).collect()
        }
        CoinSelector::PhiD => {
            if d != 4 {
                return Err(QwError::invalid("phi_D is defined for the two-dimensional walk only"));
            }
            phi_d()
        }
        CoinSelector::Explicit(v) => {
            if v.len() != d {
                return Err(QwError::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                });
            }
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(QwError::invalid(format!(
                    "explicit coin vector must be normalised (|v|^2 = {norm})"
                )));
            }
            v.clone()
        }
    };
    Ok(v)
}

fn build(spec: &WavePacketSpec, c: &CoinMatrix, grid: Grid) -> Result<LatticeField> {
    spec.validate()?;
    if spec.dim() != grid.dim() || c.dim_n() != grid.dim() {
        return Err(QwError::DimensionMismatch {
            expected: grid.dim(),
            found: if spec.dim() != grid.dim() { spec.dim() } else { c.dim_n() },
        });
    }
    let coin = resolve_coin(spec, c)?;
    let center = spec.center_on(&grid);
    let d = coin.len();
    let mut field = LatticeField::zeros(grid);
    let grid = &field.grid;
    let site_amp: Vec<Complex64> = (0..grid.sites())
        .into_par_iter()
        .map(|i| {
            let x: Vec<f64> = grid.coords(i).iter().map(|&v| v as f64).collect();
            let phase: f64 = x.iter().zip(&spec.k0).map(|(a, k)| a * k).sum();
            Complex64::from_polar(spec.envelope_at(&x, &center), phase)
        })
        .collect();
    let norm = site_amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(QwError::DegenerateField);
    }
    let peak = site_amp.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let edge = site_amp
        .iter()
        .enumerate()
        .filter(|(i, _)| grid.edge_distance(*i) == 0)
        .map(|(_, z)| z.norm())
        .fold(0.0, f64::max);
    if edge > EDGE_ENVELOPE_RATIO * peak {
        log::warn!(
            "packet envelope reaches {:.3e} of its peak at the box edge; periodic wrap-around likely",
            edge / peak
        );
    }
    field
        .amplitudes
        .par_chunks_mut(d)
        .zip(site_amp.par_iter())
        .for_each(|(cell, a)| {
            for (z, v) in cell.iter_mut().zip(&coin) {
                *z = a / norm * v;
            }
        });
    Ok(field)
}

/// Normalised packet `N envelope(x) e^{i k0.x} coin` on `grid`.
pub fn build_packet(spec: &WavePacketSpec, c: &CoinMatrix, grid: Grid) -> Result<LatticeField> {
    build(spec, c, grid)
}

/// As [`build_packet`], but insists on the sinc-tapered envelope.
pub fn build_sinc_packet(spec: &WavePacketSpec, c: &CoinMatrix, grid: Grid) -> Result<LatticeField> {
    match spec.envelope {
        EnvelopeKind::GaussianSinc { .. } => build(spec, c, grid),
        EnvelopeKind::Gaussian => Err(QwError::invalid("build_sinc_packet needs a gaussian-sinc envelope")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::grover_coin;
    use crate::evolve::branch_weights;
    use crate::fft::{bin_wavenumber, FftNd};
    use std::f64::consts::{PI, SQRT_2};

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() < tol)
    }

    fn up_to_phase(a: &[Complex64], b: &[Complex64]) -> f64 {
        let ov: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
        (ov.norm() - 1.0).abs()
    }

    #[test]
    fn branch_vectors_at_the_ballistic_point() {
        let c = grover_coin(2).unwrap();
        let k0 = [PI / 2.0, PI / 2.0];
        let h = 1.0 / SQRT_2;
        let r = |x: f64| Complex64::new(x, 0.0);
        assert!(close(&branch_coin_at(&c, &k0, 1).unwrap(), &[r(h), r(0.0), r(-h), r(0.0)], 1e-12));
        assert!(close(&branch_coin_at(&c, &k0, 2).unwrap(), &[r(0.0), r(h), r(0.0), r(-h)], 1e-12));
    }

    #[test]
    fn saddle_vector_up_to_phase() {
        let c = grover_coin(2).unwrap();
        let v = branch_coin_at(&c, &[0.0, PI], 2).unwrap();
        let expected: Vec<Complex64> = [(1.0, 1.0), (1.0, 1.0), (1.0, -1.0), (1.0, -1.0)]
            .iter()
            .map(|&(a, b)| Complex64::new(a, b) / (2.0 * SQRT_2))
            .collect();
        assert!(up_to_phase(&v, &expected) < 1e-12, "{v:?}");
    }

    #[test]
    fn conical_point_is_ambiguous() {
        let c = grover_coin(2).unwrap();
        assert!(matches!(
            branch_coin_at(&c, &[0.0, 0.0], 1),
            Err(QwError::AmbiguousBranch { branch: 1, .. })
        ));
    }

    #[test]
    fn packets_are_normalised_with_uniform_coin() {
        let c = grover_coin(2).unwrap();
        let spec = WavePacketSpec::gaussian(5.0, vec![PI / 2.0, PI / 2.0], CoinSelector::Branches(vec![1, 2]));
        let f = build_packet(&spec, &c, Grid::centered(vec![64, 64]).unwrap()).unwrap();
        assert!((f.norm_sqr() - 1.0).abs() < 1e-12);
        // same coin direction at every occupied site
        let coin = resolve_coin(&spec, &c).unwrap();
        let mut worst = 0.0f64;
        for i in 0..f.grid.sites() {
            let cell = f.site(i);
            let amp: Complex64 = cell.iter().zip(&coin).map(|(a, v)| v.conj() * a).sum();
            for (a, v) in cell.iter().zip(&coin) {
                worst = worst.max((a - amp * v).norm());
            }
        }
        assert!(worst == 0.0 || worst < 1e-15);
    }

    #[test]
    fn gaussian_spectrum_width() {
        let c = grover_coin(2).unwrap();
        let e1 = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        let spec = WavePacketSpec::gaussian(5.0, vec![0.0, 0.0], CoinSelector::Explicit(e1));
        let f = build_packet(&spec, &c, Grid::centered(vec![128, 128]).unwrap()).unwrap();
        let mut comp = f.components().remove(0);
        FftNd::new(&[128, 128]).forward(&mut comp);
        let (mut w, mut m2) = (0.0, 0.0);
        for (i, z) in comp.iter().enumerate() {
            let q = bin_wavenumber(i % 128, 128);
            w += z.norm_sqr();
            m2 += z.norm_sqr() * q * q;
        }
        // |F(q)|^2 ~ exp(-sigma^2 q^2): std of q is 1/(sqrt2 sigma), so sqrt(2 <q^2>) = 1/sigma
        let width = (2.0 * m2 / w).sqrt();
        assert!((width * 5.0 - 1.0).abs() < 0.02, "{width}");
        let peak = comp.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap().0;
        assert_eq!(peak, 0);
    }

    #[test]
    fn carrier_sets_the_spectral_peak() {
        let c = grover_coin(2).unwrap();
        let k0 = vec![0.3 * PI, -0.6 * PI];
        let spec = WavePacketSpec::gaussian(6.0, k0.clone(), CoinSelector::Branch(1));
        let f = build_packet(&spec, &c, Grid::centered(vec![64, 64]).unwrap()).unwrap();
        let mut comp = f.components().remove(0);
        FftNd::new(&[64, 64]).forward(&mut comp);
        let peak = comp.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap().0;
        let kp = [bin_wavenumber(peak / 64, 64), bin_wavenumber(peak % 64, 64)];
        let bin = 2.0 * PI / 64.0;
        assert!((kp[0] - k0[0]).abs() <= bin && (kp[1] - k0[1]).abs() <= bin);
    }

    #[test]
    fn branch_purity_at_regular_points() {
        let c = grover_coin(2).unwrap();
        let spec = WavePacketSpec::gaussian(10.0, vec![PI / 2.0, PI / 2.0], CoinSelector::Branches(vec![1, 2]));
        let f = build_packet(&spec, &c, Grid::centered(vec![128, 128]).unwrap()).unwrap();
        let w = branch_weights(&f, &c).unwrap();
        assert!(w[0] + w[1] >= 0.999, "{w:?}");
        let spec = WavePacketSpec::gaussian(10.0, vec![0.3, 1.2], CoinSelector::Branch(2));
        let f = build_packet(&spec, &c, Grid::centered(vec![128, 128]).unwrap()).unwrap();
        assert!(branch_weights(&f, &c).unwrap()[1] >= 0.99);
    }

    #[test]
    fn sinc_envelope() {
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(1.0).abs() < 1e-15);
        let c = grover_coin(2).unwrap();
        let spec = WavePacketSpec::gaussian(30.0, vec![0.0, PI], CoinSelector::Branch(2)).with_sinc(8.0);
        let grid = Grid::centered(vec![128, 128]).unwrap();
        let f = build_sinc_packet(&spec, &c, grid.clone()).unwrap();
        assert!((f.norm_sqr() - 1.0).abs() < 1e-12);
        // zeros of the taper at multiples of sigma0 along each axis
        let idx = grid.index_of(&[8, 0]).unwrap();
        assert!(f.site(idx).iter().all(|z| z.norm() < 1e-15));
        // spectrum is flat across |q| < pi / sigma0 and small beyond it
        let mut comp = f.components().remove(0);
        FftNd::new(&[128, 128]).forward(&mut comp);
        let at = |m0: usize, m1: usize| comp[m0 * 128 + m1].norm();
        let inside = at(0, 64 + 4);
        let centre = at(0, 64);
        let outside = at(0, 64 + 12);
        assert!((inside / centre - 1.0).abs() < 0.1, "{inside} {centre}");
        assert!(outside / centre < 0.05);
        let plain = WavePacketSpec::gaussian(3.0, vec![0.0, 0.0], CoinSelector::PhiD);
        assert!(build_sinc_packet(&plain, &c, grid).is_err());
    }

    #[test]
    fn invalid_specs() {
        let c = grover_coin(2).unwrap();
        let grid = Grid::centered(vec![16, 16]).unwrap();
        let bad = WavePacketSpec::gaussian(0.0, vec![0.0, 0.0], CoinSelector::PhiD);
        assert!(matches!(build_packet(&bad, &c, grid.clone()), Err(QwError::InvalidArgument(_))));
        let bad = WavePacketSpec::gaussian(2.0, vec![0.0, 0.0], CoinSelector::PhiD).with_sinc(-1.0);
        assert!(build_packet(&bad, &c, grid.clone()).is_err());
        let unnorm = vec![Complex64::new(1.0, 0.0); 4];
        let bad = WavePacketSpec::gaussian(2.0, vec![0.0, 0.0], CoinSelector::Explicit(unnorm));
        assert!(build_packet(&bad, &c, grid).is_err());
    }
}
