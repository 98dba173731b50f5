//! Adaptive Gauss-Kronrod (7/15) quadrature on a finite interval.

use std::collections::BinaryHeap;

use crate::error::{QwError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Upper bound on the number of starting subintervals.
pub const MAX_BASE_INTERVALS: usize = 200_000;
const MAX_INTERVALS: usize = 1_000_000;

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    /// Estimate of `int |f|`, the scale the tolerance is relative to.
    pub abs_value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    abs_value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    for j in 0..7 {
        let x = h * XGK[j];
        let (f1, f2) = (f(c - x), f(c + x));
        k += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    Piece {
        a,
        b,
        value: k * h,
        abs_value: abs * h.abs(),
        error: ((k - g) * h).abs(),
    }
}

/// Integrates `f` over `[a, b]` with subintervals no longer than `max_len`,
/// bisecting until the error estimate is below `rel_tol * int |f|`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, max_len: f64, rel_tol: f64) -> Result<QuadResult> {
    if !(b > a) || !(max_len > 0.0) {
        return Err(QwError::invalid(format!("bad quadrature interval [{a}, {b}] / {max_len}")));
    }
    let n = ((b - a) / max_len).ceil();
    if n > MAX_BASE_INTERVALS as f64 {
        return Err(QwError::Resolution(format!(
            "oscillation scale needs {n:.0} subintervals (limit {MAX_BASE_INTERVALS})"
        )));
    }
    let n = n.max(1.0) as usize;
    let w = (b - a) / n as f64;
    let mut heap: BinaryHeap<Piece> = (0..n)
        .map(|i| gk15(&f, a + i as f64 * w, if i + 1 == n { b } else { a + (i + 1) as f64 * w }))
        .collect();
    loop {
        let (value, abs_value, error) = heap
            .iter()
            .fold((0.0, 0.0, 0.0), |(v, s, e), p| (v + p.value, s + p.abs_value, e + p.error));
        if error <= rel_tol * abs_value || abs_value == 0.0 {
            return Ok(QuadResult {
                value,
                abs_value,
                error,
                intervals: heap.len(),
            });
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(QwError::Resolution(format!(
                "error estimate {error:.3e} above {:.3e} after {} subintervals",
                rel_tol * abs_value,
                heap.len()
            )));
        }
        let worst = heap.pop().expect("non-empty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            return Err(QwError::Resolution("subinterval collapsed to machine precision".into()));
        }
        heap.push(gk15(&f, worst.a, m));
        heap.push(gk15(&f, m, worst.b));
    }
}
