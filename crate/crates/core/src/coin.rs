//! Coin operators and their quasi-momentum forms.
//!
//! Coin basis order is fixed crate-wide as `|1+>, |1->, ..., |N+>, |N->`; use
//! [`coin_index`] rather than computing offsets by hand.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Deref;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{QwError, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Tolerance on `max|C^dag C - I|` for a matrix to count as unitary.
pub const UNITARITY_TOL: f64 = 1e-12;

/// Displacement direction attached to a coin state along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Plus,
    Minus,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Plus => 1.0,
            Direction::Minus => -1.0,
        }
    }

    pub fn step(self) -> isize {
        match self {
            Direction::Plus => 1,
            Direction::Minus => -1,
        }
    }
}

/// Flat index of the coin state `|(axis+1)_dir>`; `axis` is zero based.
#[inline]
pub fn coin_index(axis: usize, dir: Direction) -> usize {
    2 * axis
        + match dir {
            Direction::Plus => 0,
            Direction::Minus => 1,
        }
}

/// Inverse of [`coin_index`].
#[inline]
pub fn coin_axis_dir(index: usize) -> (usize, Direction) {
    let dir = if index.is_multiple_of(2) {
        Direction::Plus
    } else {
        Direction::Minus
    };
    (index / 2, dir)
}

/// Where a coin came from; used for analytic shortcuts and as the id written
/// into snapshot headers.
#[derive(Debug, Clone, PartialEq)]
pub enum CoinKind {
    Grover,
    Dft,
    Custom(String),
}

impl CoinKind {
    pub fn id(&self) -> &str {
        match self {
            CoinKind::Grover => "grover",
            CoinKind::Dft => "dft",
            CoinKind::Custom(id) => id,
        }
    }
}

/// A `2N x 2N` unitary acting on the coin space.
#[derive(Debug, Clone, PartialEq)]
pub struct CoinMatrix {
    dim_n: usize,
    entries: CMatrix,
    kind: CoinKind,
}

impl CoinMatrix {
    /// Wraps a matrix after checking that it is square, of even side and unitary.
    pub fn new(entries: CMatrix, kind: CoinKind) -> Result<Self> {
        let side = entries.nrows();
        if side == 0 || side != entries.ncols() || !side.is_multiple_of(2) {
            return Err(QwError::invalid(format!(
                "coin matrix must be square with even side, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let residual = unitarity_residual(&entries);
        if residual > UNITARITY_TOL {
            return Err(QwError::NotUnitary { residual });
        }
        Ok(CoinMatrix {
            dim_n: side / 2,
            entries,
            kind,
        })
    }

    pub fn dim_n(&self) -> usize {
        self.dim_n
    }

    /// Side of the matrix, `2N`.
    pub fn side(&self) -> usize {
        2 * self.dim_n
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn kind(&self) -> &CoinKind {
        &self.kind
    }

    pub fn id(&self) -> &str {
        self.kind.id()
    }

    pub fn is_grover(&self) -> bool {
        self.kind == CoinKind::Grover
    }

    /// Entry `C^{row}_{col}` with rows and columns in coin basis order.
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    /// Loads a coin from CSV rows `re,im,re,im,...`, one row per matrix row.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let id = format!("file:{}", path.display());
        Self::from_csv_str(&text, CoinKind::Custom(id))
    }

    pub fn from_csv_str(text: &str, kind: CoinKind) -> Result<Self> {
        let mut rows: Vec<Vec<Complex64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let values = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| QwError::format("coin CSV", format!("line {}: {e}", lineno + 1)))?;
            if values.len() % 2 != 0 {
                return Err(QwError::format(
                    "coin CSV",
                    format!("line {}: odd number of values", lineno + 1),
                ));
            }
            rows.push(
                values
                    .chunks(2)
                    .map(|p| Complex64::new(p[0], p[1]))
                    .collect(),
            );
        }
        let side = rows.len();
        if side == 0 || !side.is_multiple_of(2) {
            return Err(QwError::format(
                "coin CSV",
                format!("expected an even, non-zero number of rows, found {side}"),
            ));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != side) {
            return Err(QwError::format(
                "coin CSV",
                format!("row {} has {} entries, expected {side}", i + 1, r.len()),
            ));
        }
        let entries = CMatrix::from_fn(side, side, |i, j| rows[i][j]);
        CoinMatrix::new(entries, kind)
    }

    /// Serializes in the same CSV layout accepted by [`CoinMatrix::from_csv_str`].
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.side() {
            let row: Vec<String> = (0..self.side())
                .map(|j| {
                    let z = self.entries[(i, j)];
                    format!("{:.16e},{:.16e}", z.re, z.im)
                })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for CoinMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} coin (N = {})", self.id(), self.dim_n)
    }
}

/// `max|M^dag M - I|` over all entries.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    let prod = m.adjoint() * m;
    let mut worst = 0.0f64;
    for i in 0..prod.nrows() {
        for j in 0..prod.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Grover entry `1/n - delta` as an exact fraction `(numerator, denominator)`.
pub fn grover_rational_entry(n: usize, row: usize, col: usize) -> (i64, i64) {
    let n = n as i64;
    let delta = i64::from(row == col);
    (1 - n * delta, n)
}

/// The `2n`-dimensional Grover coin `C = (1/n) J - I`.
pub fn grover_coin(n: usize) -> Result<CoinMatrix> {
    if n == 0 {
        return Err(QwError::InvalidDimension(n));
    }
    let side = 2 * n;
    let entries = CMatrix::from_fn(side, side, |i, j| {
        let (num, den) = grover_rational_entry(n, i, j);
        Complex64::new(num as f64 / den as f64, 0.0)
    });
    CoinMatrix::new(entries, CoinKind::Grover)
}

/// The `2n`-point discrete Fourier matrix, `e^{-2 pi i ab / 2n} / sqrt(2n)`.
pub fn dft_coin(n: usize) -> Result<CoinMatrix> {
    if n == 0 {
        return Err(QwError::InvalidDimension(n));
    }
    let side = 2 * n;
    let norm = 1.0 / (side as f64).sqrt();
    let entries = CMatrix::from_fn(side, side, |a, b| {
        // reduce a*b mod side first so the phase argument stays small
        let ab = (a * b) % side;
        Complex64::from_polar(norm, -2.0 * PI * ab as f64 / side as f64)
    });
    CoinMatrix::new(entries, CoinKind::Dft)
}

/// A quasi-momentum vector; components are expected in `[-pi, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KPoint(Vec<f64>);

impl KPoint {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(QwError::InvalidDimension(0));
        }
        for &c in &components {
            if !c.is_finite() || c.abs() > PI + 1e-9 {
                return Err(QwError::invalid(format!(
                    "k component {c} outside [-pi, pi]"
                )));
            }
        }
        Ok(KPoint(components))
    }

    /// Builds a point from components given in units of pi.
    pub fn from_pi_units(units: &[f64]) -> Result<Self> {
        Self::new(units.iter().map(|u| u * PI).collect())
    }

    /// Maps arbitrary components onto `[-pi, pi)`.
    pub fn wrapped(components: &[f64]) -> Self {
        KPoint(components.iter().map(|&c| wrap_angle(c)).collect())
    }

    pub fn zero(dim: usize) -> Self {
        KPoint(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

impl Deref for KPoint {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Wraps an angle onto `[-pi, pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// The coin in quasi-momentum space: row `(alpha, eta)` of the base coin
/// multiplied by `e^{-i eta k_alpha}`.
#[derive(Debug, Clone)]
pub struct MomentumCoin {
    pub k: Vec<f64>,
    pub entries: CMatrix,
}

impl MomentumCoin {
    pub fn dim_n(&self) -> usize {
        self.k.len()
    }
}

pub fn momentum_coin(c: &CoinMatrix, k: &[f64]) -> Result<MomentumCoin> {
    if k.len() != c.dim_n() {
        return Err(QwError::DimensionMismatch {
            expected: c.dim_n(),
            found: k.len(),
        });
    }
    Ok(MomentumCoin {
        k: k.to_vec(),
        entries: momentum_matrix(c, k),
    })
}

/// Unchecked variant of [`momentum_coin`] for hot loops; `k.len()` must equal `N`.
pub(crate) fn momentum_matrix(c: &CoinMatrix, k: &[f64]) -> CMatrix {
    let mut m = c.entries.clone();
    for (axis, &ka) in k.iter().enumerate() {
        for dir in [Direction::Plus, Direction::Minus] {
            let row = coin_index(axis, dir);
            let phase = Complex64::from_polar(1.0, -dir.sign() * ka);
            for j in 0..m.ncols() {
                m[(row, j)] *= phase;
            }
        }
    }
    m
}
