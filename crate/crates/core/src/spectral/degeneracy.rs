//! Locating and classifying band contacts on a k-grid.

use std::collections::{BTreeSet, HashSet};
use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;

use crate::coin::CoinMatrix;
use crate::error::{QwError, Result};
use crate::optimize::nelder_mead;
use crate::spectral::eigen::{circular_distance, eigensystem_at, wrap_phase, EigenSystem};

pub const DEFAULT_TOL: f64 = 1e-6;
/// Radii (in units of this step) at which rays probe the splitting.
const RAY_STEP: f64 = 1e-3;
const RAY_COUNT: usize = 8;
/// A phase this close to the contact value on every ray marks a flat sheet.
const FLAT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ContactClass {
    Conical,
    FlatContact,
    Line,
    Unclassified,
}

impl ContactClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ContactClass::Conical => "conical",
            ContactClass::FlatContact => "flat-contact",
            ContactClass::Line => "line",
            ContactClass::Unclassified => "unclassified",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Degeneracy {
    /// Contact point; for lines, the grid point of the line closest to k = 0.
    pub k: Vec<f64>,
    pub branches: Vec<usize>,
    pub multiplicity: usize,
    pub classes: Vec<ContactClass>,
    /// Unit direction of a line contact.
    pub direction: Option<Vec<f64>>,
    /// Number of grid points in the cluster.
    pub grid_points: usize,
}

impl Degeneracy {
    pub fn class_label(&self) -> String {
        self.classes
            .iter()
            .map(|c| c.as_str())
            .collect::<Vec<_>>()
            .join("+")
    }

    pub fn is(&self, class: ContactClass) -> bool {
        self.classes.contains(&class)
    }
}

impl fmt::Display for Degeneracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k: Vec<String> = self.k.iter().map(|x| format!("{x:.16e}")).collect();
        let b: Vec<String> = self.branches.iter().map(|s| s.to_string()).collect();
        write!(
            f,
            "k=({}) branches={{{}}} multiplicity={} class={}",
            k.join(","),
            b.join(","),
            self.multiplicity,
            self.class_label()
        )?;
        if let Some(d) = &self.direction {
            let d: Vec<String> = d.iter().map(|x| format!("{x:.16e}")).collect();
            write!(f, " direction=({})", d.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyReport {
    pub locations: Vec<Degeneracy>,
    pub tolerance: f64,
    pub resolution: usize,
}

impl DegeneracyReport {
    pub fn to_text(&self) -> String {
        let mut out = format!("# tolerance={:e} resolution={}\n", self.tolerance, self.resolution);
        for loc in &self.locations {
            out.push_str(&loc.to_string());
            out.push('\n');
        }
        out
    }

    pub fn points(&self) -> impl Iterator<Item = &Degeneracy> {
        self.locations.iter().filter(|l| !l.is(ContactClass::Line))
    }

    pub fn lines(&self) -> impl Iterator<Item = &Degeneracy> {
        self.locations.iter().filter(|l| l.is(ContactClass::Line))
    }
}

/// Largest group of phases fitting in a window narrower than `tol`.
#[derive(Debug, Clone)]
struct Window {
    size: usize,
    spread: f64,
    center: f64,
    branches: Vec<usize>,
}

fn widest_window(omegas: &[f64], tol: f64) -> Window {
    let n = omegas.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| wrap_phase(omegas[a]).total_cmp(&wrap_phase(omegas[b])));
    let sorted: Vec<f64> = idx.iter().map(|&i| wrap_phase(omegas[i])).collect();
    let mut best = Window {
        size: 1,
        spread: 0.0,
        center: sorted[0],
        branches: vec![idx[0] + 1],
    };
    for start in 0..n {
        let mut end = start;
        while end + 1 < start + n {
            let next = sorted[(end + 1) % n] + if end + 1 >= n { 2.0 * PI } else { 0.0 };
            if next - sorted[start] < tol {
                end += 1;
            } else {
                break;
            }
        }
        let size = end - start + 1;
        let last = sorted[end % n] + if end >= n { 2.0 * PI } else { 0.0 };
        let spread = last - sorted[start];
        if size > best.size || (size == best.size && size > 1 && spread < best.spread) {
            let mut branches: Vec<usize> = (start..=end).map(|j| idx[j % n] + 1).collect();
            branches.sort_unstable();
            best = Window {
                size,
                spread,
                center: wrap_phase(sorted[start] + 0.5 * spread),
                branches,
            };
        }
    }
    best
}

/// Spread of the `m` phases closest to each other (circularly).
fn m_spread(omegas: &[f64], m: usize) -> f64 {
    let n = omegas.len();
    let mut sorted: Vec<f64> = omegas.iter().map(|&w| wrap_phase(w)).collect();
    sorted.sort_by(f64::total_cmp);
    (0..n)
        .map(|s| {
            let e = s + m - 1;
            sorted[e % n] + if e >= n { 2.0 * PI } else { 0.0 } - sorted[s]
        })
        .fold(f64::INFINITY, f64::min)
}

fn min_gap(omegas: &[f64]) -> f64 {
    m_spread(omegas, 2)
}

struct GridScan {
    res: usize,
    dim: usize,
    systems: Vec<EigenSystem>,
    windows: Vec<Window>,
    gaps: Vec<f64>,
}

impl GridScan {
    fn k_of(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .map(|&m| -PI + 2.0 * PI * m as f64 / self.res as f64)
            .collect()
    }

    fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut c = vec![0; self.dim];
        for a in (0..self.dim).rev() {
            c[a] = flat % self.res;
            flat /= self.res;
        }
        c
    }

    fn ravel(&self, c: &[usize]) -> usize {
        c.iter().fold(0, |acc, &i| acc * self.res + i)
    }

    fn neighbours(&self, flat: usize) -> Vec<usize> {
        let c = self.unravel(flat);
        let r = self.res as i64;
        let mut out = Vec::new();
        for off in offsets(self.dim) {
            let n: Vec<usize> = c
                .iter()
                .zip(&off)
                .map(|(&i, &d)| (i as i64 + d).rem_euclid(r) as usize)
                .collect();
            out.push(self.ravel(&n));
        }
        out
    }
}

/// All non-zero offsets in `{-1, 0, 1}^dim`.
fn offsets(dim: usize) -> Vec<Vec<i64>> {
    let total = 3usize.pow(dim as u32);
    (0..total)
        .map(|mut t| {
            let mut v = vec![0i64; dim];
            for a in (0..dim).rev() {
                v[a] = (t % 3) as i64 - 1;
                t /= 3;
            }
            v
        })
        .filter(|v| v.iter().any(|&x| x != 0))
        .collect()
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, mut a: usize) -> usize {
        while self.0[a] != a {
            self.0[a] = self.0[self.0[a]];
            a = self.0[a];
        }
        a
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Groups `members` (flat grid indices) into connected components.
fn components(scan: &GridScan, members: &[usize]) -> Vec<Vec<usize>> {
    let pos: std::collections::HashMap<usize, usize> =
        members.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let mut uf = UnionFind::new(members.len());
    for (i, &m) in members.iter().enumerate() {
        for n in scan.neighbours(m) {
            if let Some(&j) = pos.get(&n) {
                uf.union(i, j);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, &m) in members.iter().enumerate() {
        groups.entry(uf.find(i)).or_default().push(m);
    }
    groups.into_values().collect()
}

/// Longest run of cluster points along a fixed lattice direction.
fn longest_chain(scan: &GridScan, set: &HashSet<usize>) -> Option<(Vec<i64>, Vec<usize>)> {
    let r = scan.res as i64;
    let step = |flat: usize, d: &[i64], sign: i64| -> usize {
        let c = scan.unravel(flat);
        let n: Vec<usize> = c
            .iter()
            .zip(d)
            .map(|(&i, &x)| (i as i64 + sign * x).rem_euclid(r) as usize)
            .collect();
        scan.ravel(&n)
    };
    let mut best: Option<(Vec<i64>, Vec<usize>)> = None;
    let mut sorted: Vec<usize> = set.iter().copied().collect();
    sorted.sort_unstable();
    // only one of each +-d pair is needed
    for d in offsets(scan.dim).into_iter().filter(|d| d.iter().find(|&&x| x != 0) == Some(&1)) {
        let mut seen: HashSet<usize> = HashSet::new();
        for &p in &sorted {
            if seen.contains(&p) {
                continue;
            }
            // walk back to the start of the run (or around a closed loop)
            let mut start = p;
            loop {
                let prev = step(start, &d, -1);
                if !set.contains(&prev) || prev == p {
                    break;
                }
                start = prev;
            }
            let mut chain = vec![start];
            seen.insert(start);
            let mut cur = start;
            loop {
                let next = step(cur, &d, 1);
                if !set.contains(&next) || next == start {
                    break;
                }
                chain.push(next);
                seen.insert(next);
                cur = next;
            }
            if best.as_ref().is_none_or(|(_, b)| chain.len() > b.len()) {
                best = Some((d.clone(), chain));
            }
        }
    }
    best
}

fn ray_directions(dim: usize) -> Vec<Vec<f64>> {
    (0..RAY_COUNT)
        .map(|j| {
            let v: Vec<f64> = if dim == 2 {
                let t = 2.0 * PI * j as f64 / RAY_COUNT as f64 + 0.3;
                vec![t.cos(), t.sin()]
            } else {
                (0..dim)
                    .map(|i| (1.0 + 1.618_033_988_75 * j as f64 + 2.414_213_562_37 * i as f64 + 0.7 * (i * j) as f64).sin())
                    .collect()
            };
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect()
        })
        .collect()
}

fn classify_point(coin: &CoinMatrix, kc: &[f64], m: usize, center: f64) -> Result<Vec<ContactClass>> {
    let mut conical = true;
    let mut flat = true;
    for dir in ray_directions(kc.len()) {
        let mut rs = Vec::new();
        let mut splits = Vec::new();
        let mut flat_here = true;
        for j in 1..=4 {
            let r = RAY_STEP * j as f64;
            let k: Vec<f64> = kc.iter().zip(&dir).map(|(a, b)| a + r * b).collect();
            let w = eigensystem_at(coin, &k)?.omegas;
            let mut near: Vec<f64> = w.iter().map(|&x| wrap_phase(x - center)).collect();
            near.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
            let group = &near[..m];
            let split = group.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - group.iter().copied().fold(f64::INFINITY, f64::min);
            flat_here &= near[0].abs() < FLAT_TOL;
            rs.push(r);
            splits.push(split);
        }
        flat &= flat_here;
        // least-squares line through (r, split)
        let n = rs.len() as f64;
        let mr = rs.iter().sum::<f64>() / n;
        let ms = splits.iter().sum::<f64>() / n;
        let sxy: f64 = rs.iter().zip(&splits).map(|(r, s)| (r - mr) * (s - ms)).sum();
        let sxx: f64 = rs.iter().map(|r| (r - mr).powi(2)).sum();
        let a = sxy / sxx;
        let b = ms - a * mr;
        let rms = (rs
            .iter()
            .zip(&splits)
            .map(|(r, s)| (a * r + b - s).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let smax = splits.iter().copied().fold(0.0, f64::max);
        let linear = a > 0.0 && ms > 0.0 && rms / ms < 0.1 && b.abs() < 0.1 * smax;
        conical &= linear;
    }
    let mut classes = Vec::new();
    if conical {
        classes.push(ContactClass::Conical);
    }
    if flat {
        classes.push(ContactClass::FlatContact);
    }
    if classes.is_empty() {
        classes.push(ContactClass::Unclassified);
    }
    Ok(classes)
}

/// All images of `k` under `k_a -> -k_a` for components sitting on the zone face.
fn face_images(k: &[f64]) -> Vec<Vec<f64>> {
    let mut images = vec![k.to_vec()];
    for a in 0..k.len() {
        if (k[a].abs() - PI).abs() < 1e-9 {
            let mut more = Vec::new();
            for img in &images {
                let mut lo = img.clone();
                let mut hi = img.clone();
                lo[a] = -PI;
                hi[a] = PI;
                more.push(lo);
                more.push(hi);
            }
            images = more;
        }
    }
    images
}

/// Scans a `resolution^N` grid over `[-pi, pi)^N` for phase gaps below `tol`,
/// refines isolated contacts and classifies each cluster.
pub fn find_degeneracies(coin: &CoinMatrix, resolution: usize, tol: f64) -> Result<DegeneracyReport> {
    if resolution < 16 {
        return Err(QwError::invalid(format!(
            "grid resolution must be at least 16 per axis, got {resolution}"
        )));
    }
    if !(tol > 0.0) {
        return Err(QwError::invalid("degeneracy tolerance must be positive"));
    }
    let dim = coin.dim_n();
    let total = resolution
        .checked_pow(dim as u32)
        .ok_or_else(|| QwError::invalid("grid too large"))?;
    let mut scan = GridScan {
        res: resolution,
        dim,
        systems: Vec::new(),
        windows: Vec::new(),
        gaps: Vec::new(),
    };
    let systems: Vec<EigenSystem> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let k = scan.k_of(&scan.unravel(flat));
            eigensystem_at(coin, &k)
        })
        .collect::<Result<_>>()?;
    scan.windows = systems.iter().map(|e| widest_window(&e.omegas, tol)).collect();
    scan.gaps = systems.iter().map(|e| min_gap(&e.omegas)).collect();
    scan.systems = systems;

    let spacing = 2.0 * PI / resolution as f64;
    let mut locations = Vec::new();

    // Isolated contacts between grid points: refine local gap minima.
    let candidates: Vec<usize> = (0..total)
        .filter(|&i| scan.windows[i].size < 2 && scan.gaps[i] < spacing)
        .filter(|&i| scan.neighbours(i).iter().all(|&n| scan.gaps[i] <= scan.gaps[n]))
        .collect();
    let refined: Vec<Option<(Vec<f64>, Window)>> = candidates
        .par_iter()
        .map(|&i| {
            let start = scan.k_of(&scan.unravel(i));
            let f = |k: &[f64]| eigensystem_at(coin, k).map(|e| min_gap(&e.omegas)).unwrap_or(f64::INFINITY);
            let m = nelder_mead(f, &start, 0.25 * spacing, 1e-11, 4000);
            let k: Vec<f64> = m.x.iter().map(|&x| wrap_phase(x)).collect();
            let e = eigensystem_at(coin, &k).ok()?;
            let w = widest_window(&e.omegas, tol);
            (w.size >= 2).then_some((k, w))
        })
        .collect();
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for (k, w) in refined.into_iter().flatten() {
        let k = snap_to_face(&k);
        if kept.iter().any(|q| torus_distance(q, &k) < spacing) {
            continue;
        }
        kept.push(k.clone());
        let classes = classify_point(coin, &k, w.size, w.center)?;
        for img in face_images(&k) {
            locations.push(Degeneracy {
                k: img,
                branches: w.branches.clone(),
                multiplicity: w.size,
                classes: classes.clone(),
                direction: None,
                grid_points: 0,
            });
        }
    }

    // Grid hits, clustered separately for each multiplicity.
    let mut by_mult: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..total {
        if scan.windows[i].size >= 2 {
            by_mult.entry(scan.windows[i].size).or_default().push(i);
        }
    }
    let line_min = 3.max(resolution / 4);
    for (mult, hits) in by_mult {
        for cluster in components(&scan, &hits) {
            let mut rest: HashSet<usize> = cluster.iter().copied().collect();
            while rest.len() >= line_min {
                let Some((d, chain)) = longest_chain(&scan, &rest) else { break };
                if chain.len() < line_min {
                    break;
                }
                for p in &chain {
                    rest.remove(p);
                }
                let rep = *chain
                    .iter()
                    .min_by(|&&a, &&b| {
                        let ka = scan.k_of(&scan.unravel(a));
                        let kb = scan.k_of(&scan.unravel(b));
                        norm(&ka).total_cmp(&norm(&kb)).then(ka.partial_cmp(&kb).unwrap())
                    })
                    .unwrap();
                let nd = norm(&d.iter().map(|&x| x as f64).collect::<Vec<_>>());
                locations.push(Degeneracy {
                    k: scan.k_of(&scan.unravel(rep)),
                    branches: scan.windows[rep].branches.clone(),
                    multiplicity: mult,
                    classes: vec![ContactClass::Line],
                    direction: Some(d.iter().map(|&x| x as f64 / nd).collect()),
                    grid_points: chain.len(),
                });
            }
            let leftover: Vec<usize> = {
                let mut v: Vec<usize> = rest.into_iter().collect();
                v.sort_unstable();
                v
            };
            for blob in components(&scan, &leftover) {
                let best = *blob
                    .iter()
                    .min_by(|&&a, &&b| scan.windows[a].spread.total_cmp(&scan.windows[b].spread).then(a.cmp(&b)))
                    .unwrap();
                let start = scan.k_of(&scan.unravel(best));
                let k = if scan.windows[best].spread > 1e-12 {
                    let f = |k: &[f64]| {
                        eigensystem_at(coin, k)
                            .map(|e| m_spread(&e.omegas, mult))
                            .unwrap_or(f64::INFINITY)
                    };
                    let m = nelder_mead(f, &start, 0.25 * spacing, 1e-11, 4000);
                    if m.value < scan.windows[best].spread {
                        snap_to_face(&m.x.iter().map(|&x| wrap_phase(x)).collect::<Vec<_>>())
                    } else {
                        start
                    }
                } else {
                    start
                };
                let e = eigensystem_at(coin, &k)?;
                let w = widest_window(&e.omegas, tol);
                let classes = classify_point(coin, &k, mult, w.center)?;
                for img in face_images(&k) {
                    locations.push(Degeneracy {
                        k: img,
                        branches: w.branches.clone(),
                        multiplicity: mult,
                        classes: classes.clone(),
                        direction: None,
                        grid_points: blob.len(),
                    });
                }
            }
        }
    }

    locations.sort_by(|a, b| {
        a.k.partial_cmp(&b.k)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.multiplicity.cmp(&b.multiplicity))
    });
    Ok(DegeneracyReport {
        locations,
        tolerance: tol,
        resolution,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| circular_distance(*x, *y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Components within 1e-9 of the zone face are put exactly on it.
fn snap_to_face(k: &[f64]) -> Vec<f64> {
    k.iter()
        .map(|&x| if (x.abs() - PI).abs() < 1e-9 { -PI } else { x })
        .collect()
}

/// Degenerate branch sets of an eigensystem, as ordered sets of labels.
pub fn degenerate_groups(e: &EigenSystem, tol: f64) -> Vec<BTreeSet<usize>> {
    let mut groups: Vec<BTreeSet<usize>> = Vec::new();
    for s in 1..=e.branches() {
        if groups.iter().any(|g| g.contains(&s)) {
            continue;
        }
        groups.push(e.degenerate_set(s, tol).into_iter().collect());
    }
    groups
}
