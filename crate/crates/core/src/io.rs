//! On-disk formats. Binary files start with a short text header ending in a line
//! `end`, followed by little-endian `f64` data.
//!
//! - `QWF1`: complex amplitudes (lattice states and envelopes).
//! - `QWP1`: probability grids.
//! - `QWD1`: sampled dispersion sheets.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::continuum::Envelope;
use crate::error::{QwError, Result};
use crate::lattice::{Grid, LatticeField, ProbabilityField};
use crate::spectral::surface::DispersionSurface;

pub const FIELD_MAGIC: &str = "QWF1";
pub const PROB_MAGIC: &str = "QWP1";
pub const DISP_MAGIC: &str = "QWD1";

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn push_f64s(out: &mut Vec<u8>, v: impl IntoIterator<Item = f64>) {
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

struct Header<'a> {
    format: &'static str,
    entries: Vec<(&'a str, &'a str)>,
    body: &'a [u8],
}

impl<'a> Header<'a> {
    fn parse(format: &'static str, bytes: &'a [u8]) -> Result<Self> {
        let mut pos = 0;
        let mut lines = Vec::new();
        loop {
            let rest = &bytes[pos..];
            let nl = rest
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| QwError::format(format, "header not terminated by an `end` line"))?;
            let line = std::str::from_utf8(&rest[..nl]).map_err(|_| QwError::format(format, "header is not UTF-8"))?;
            pos += nl + 1;
            if line == "end" {
                break;
            }
            lines.push(line);
        }
        if lines.first() != Some(&format) {
            return Err(QwError::format(format, format!("missing magic {format:?}")));
        }
        let entries = lines[1..]
            .iter()
            .map(|l| l.split_once(' ').unwrap_or((l, "")))
            .collect();
        Ok(Header {
            format,
            entries,
            body: &bytes[pos..],
        })
    }

    fn get(&self, key: &str) -> Option<&'a str> {
        self.entries.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    fn req(&self, key: &str) -> Result<&'a str> {
        self.get(key)
            .ok_or_else(|| QwError::format(self.format, format!("missing header field {key:?}")))
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>> {
        self.req(key)?
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| QwError::format(self.format, format!("bad value {t:?} in field {key:?}")))
            })
            .collect()
    }

    fn one<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v: Vec<T> = self.list(key)?;
        if v.len() != 1 {
            return Err(QwError::format(self.format, format!("field {key:?} needs one value")));
        }
        Ok(v.into_iter().next().expect("length checked"))
    }

    fn grid(&self) -> Result<Grid> {
        let shape: Vec<usize> = self.list("shape")?;
        let origin: Vec<i64> = self.list("origin")?;
        if shape.len() != self.one::<usize>("dim_n")? {
            return Err(QwError::format(self.format, "shape length differs from dim"));
        }
        Grid::new(shape, origin).map_err(|e| QwError::format(self.format, e.to_string()))
    }

    fn f64s(&self, count: usize) -> Result<Vec<f64>> {
        if self.body.len() != 8 * count {
            return Err(QwError::format(
                self.format,
                format!("expected {} payload bytes, found {}", 8 * count, self.body.len()),
            ));
        }
        Ok(self
            .body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    }
}

fn grid_header(kind: &str, grid: &Grid) -> String {
    format!(
        "{kind}\ndim_n {}\nshape {}\norigin {}\n",
        grid.dim(),
        join(&grid.shape),
        join(&grid.origin)
    )
}

/// `QWF1` bytes of a lattice state; `coin` is recorded for reference.
pub fn field_bytes(f: &LatticeField, coin: &str) -> Vec<u8> {
    let mut out = grid_header(FIELD_MAGIC, &f.grid).into_bytes();
    out.extend_from_slice(
        format!("components {}\ntime {}\ncoin {}\nend\n", f.coin_dim(), f.time, coin).as_bytes(),
    );
    push_f64s(&mut out, f.amplitudes.iter().flat_map(|z| [z.re, z.im]));
    out
}

fn complex_payload(h: &Header, count: usize) -> Result<Vec<Complex64>> {
    Ok(h.f64s(2 * count)?
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect())
}

/// Reads a `QWF1` lattice state, returning it with the recorded coin id.
pub fn parse_field(bytes: &[u8]) -> Result<(LatticeField, String)> {
    let h = Header::parse(FIELD_MAGIC, bytes)?;
    let grid = h.grid()?;
    let comps: usize = h.one("components")?;
    if comps != 2 * grid.dim() {
        return Err(QwError::format(FIELD_MAGIC, "lattice states carry 2N components per site"));
    }
    if h.get("frame_shift").is_some() {
        return Err(QwError::format(FIELD_MAGIC, "this file holds an envelope, not a lattice state"));
    }
    let time: u64 = h.one("time")?;
    let amps = complex_payload(&h, grid.sites() * comps)?;
    let coin = h.get("coin").unwrap_or("").to_string();
    Ok((LatticeField::from_amplitudes(grid, amps, time)?, coin))
}

/// `QWF1` bytes of an envelope, with its frame shift.
pub fn envelope_bytes(e: &Envelope) -> Vec<u8> {
    let mut out = grid_header(FIELD_MAGIC, &e.grid).into_bytes();
    out.extend_from_slice(
        format!(
            "components 1\ntime {:e}\ncoin envelope\nframe_shift {}\nend\n",
            e.time,
            e.frame_shift.iter().map(|s| format!("{s:e}")).collect::<Vec<_>>().join(" ")
        )
        .as_bytes(),
    );
    push_f64s(&mut out, e.values.iter().flat_map(|z| [z.re, z.im]));
    out
}

pub fn parse_envelope(bytes: &[u8]) -> Result<Envelope> {
    let h = Header::parse(FIELD_MAGIC, bytes)?;
    let grid = h.grid()?;
    if h.one::<usize>("components")? != 1 {
        return Err(QwError::format(FIELD_MAGIC, "envelopes have one component per site"));
    }
    let frame_shift: Vec<f64> = h.list("frame_shift")?;
    if frame_shift.len() != grid.dim() {
        return Err(QwError::format(FIELD_MAGIC, "frame_shift length differs from dim"));
    }
    let time: f64 = h.one("time")?;
    let values = complex_payload(&h, grid.sites())?;
    let mut e = Envelope::new(grid, values)?;
    e.frame_shift = frame_shift;
    e.time = time;
    Ok(e)
}

pub fn probability_bytes(p: &ProbabilityField) -> Vec<u8> {
    let mut out = grid_header(PROB_MAGIC, &p.grid).into_bytes();
    out.extend_from_slice(format!("time {}\nend\n", p.time).as_bytes());
    push_f64s(&mut out, p.values.iter().copied());
    out
}

pub fn parse_probability(bytes: &[u8]) -> Result<ProbabilityField> {
    let h = Header::parse(PROB_MAGIC, bytes)?;
    let grid = h.grid()?;
    let time: u64 = h.one("time")?;
    let values = h.f64s(grid.sites())?;
    Ok(ProbabilityField { grid, values, time })
}

/// `QWD1`: header with per-axis sample counts, then all axis samples, then the
/// phases (grid-major, branch fastest).
pub fn surface_bytes(s: &DispersionSurface, model: &str) -> Vec<u8> {
    let mut out = format!(
        "{DISP_MAGIC}\ndim_n {}\nbranches {}\naxis_len {}\nmodel {model}\nend\n",
        s.axes.len(),
        s.branches,
        join(&s.shape())
    )
    .into_bytes();
    push_f64s(&mut out, s.axes.iter().flatten().copied());
    push_f64s(&mut out, s.omegas.iter().copied());
    out
}

pub fn parse_surface(bytes: &[u8]) -> Result<DispersionSurface> {
    let h = Header::parse(DISP_MAGIC, bytes)?;
    let lens: Vec<usize> = h.list("axis_len")?;
    if lens.len() != h.one::<usize>("dim_n")? || lens.contains(&0) {
        return Err(QwError::format(DISP_MAGIC, "axis_len must list dim positive counts"));
    }
    let branches: usize = h.one("branches")?;
    let na: usize = lens.iter().sum();
    let np: usize = lens.iter().product();
    let data = h.f64s(na + np * branches)?;
    let mut axes = Vec::new();
    let mut pos = 0;
    for l in lens {
        axes.push(data[pos..pos + l].to_vec());
        pos += l;
    }
    Ok(DispersionSurface {
        axes,
        branches,
        omegas: data[pos..].to_vec(),
    })
}

/// CSV `k1..kN,v1..vN` of a group-velocity field; singular points are written as `nan`.
pub fn velocity_csv(s: &DispersionSurface, v: &[Option<Vec<f64>>]) -> String {
    let n = s.axes.len();
    let mut out: Vec<String> = (1..=n).map(|a| format!("k{a}")).collect();
    out.extend((1..=n).map(|a| format!("v{a}")));
    let mut text = out.join(",") + "\n";
    for (i, vel) in v.iter().enumerate() {
        let mut row: Vec<String> = s.k_at(i).iter().map(|k| format!("{k:.16e}")).collect();
        match vel {
            Some(vv) => row.extend(vv.iter().map(|x| format!("{x:.16e}"))),
            None => row.extend((0..n).map(|_| "nan".to_string())),
        }
        text.push_str(&row.join(","));
        text.push('\n');
    }
    text
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn write_field(path: &Path, f: &LatticeField, coin: &str) -> Result<()> {
    write_bytes(path, &field_bytes(f, coin))
}

pub fn read_field(path: &Path) -> Result<(LatticeField, String)> {
    parse_field(&fs::read(path)?)
}

pub fn write_envelope(path: &Path, e: &Envelope) -> Result<()> {
    write_bytes(path, &envelope_bytes(e))
}

pub fn read_envelope(path: &Path) -> Result<Envelope> {
    parse_envelope(&fs::read(path)?)
}

pub fn write_probability(path: &Path, p: &ProbabilityField) -> Result<()> {
    write_bytes(path, &probability_bytes(p))
}

pub fn read_probability(path: &Path) -> Result<ProbabilityField> {
    parse_probability(&fs::read(path)?)
}

pub fn write_surface(path: &Path, s: &DispersionSurface, model: &str) -> Result<()> {
    write_bytes(path, &surface_bytes(s, model))
}

pub fn read_surface(path: &Path) -> Result<DispersionSurface> {
    parse_surface(&fs::read(path)?)
}
