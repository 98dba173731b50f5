//! Run configuration (TOML). Wavevectors are written in units of pi.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use qwalk_core::{CoinSelector, Grid, WavePacketSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Coin id understood by the coin registry (`grover`, `dft`, `file:<path>`).
    pub coin: String,
    pub dim: usize,
    #[serde(default)]
    pub shape: Vec<usize>,
    #[serde(default = "default_backend")]
    pub backend: String,
    #[serde(default)]
    pub steps: u64,
    #[serde(default = "default_stride")]
    pub stride: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packet: Option<PacketConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<DispersionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diabolo: Option<DiaboloConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub project: Option<ProjectConfig>,
}

fn default_backend() -> String {
    "spectral".into()
}

fn default_stride() -> u64 {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "yes")]
    pub probability: bool,
    #[serde(default = "yes")]
    pub moments: bool,
    /// Azimuthally averaged profiles around the box centre (2D only).
    #[serde(default)]
    pub radial_cuts: bool,
    /// Final amplitudes as `QWF1`.
    #[serde(default)]
    pub field: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            probability: true,
            moments: true,
            radial_cuts: false,
            field: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeName {
    Gaussian,
    GaussianSinc,
}

/// `branch:1`, `branch:1,2`, `phi_D`, or an explicit list of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoinField {
    Named(String),
    Explicit(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    pub envelope: EnvelopeName,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<f64>,
    /// Carrier in units of pi.
    pub k0: Vec<f64>,
    pub coin: CoinField,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionConfig {
    pub resolution: usize,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "yes")]
    pub degeneracies: bool,
    /// Values of the last k component (units of pi); one slice each.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slices: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity_branch: Option<usize>,
}

fn default_model() -> String {
    "auto".into()
}

fn default_tolerance() -> f64 {
    qwalk_core::spectral::degeneracy::DEFAULT_TOL
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiaboloMode {
    Full,
    Asymptotic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiaboloConfig {
    pub sigma: f64,
    pub t: u64,
    #[serde(default = "default_mode")]
    pub mode: DiaboloMode,
    #[serde(default = "default_xi_min")]
    pub xi_min: f64,
    #[serde(default = "default_xi_max")]
    pub xi_max: f64,
    #[serde(default = "default_xi_step")]
    pub xi_step: f64,
    /// Box side of the optional exact-walk cross-check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice_side: Option<usize>,
}

fn default_mode() -> DiaboloMode {
    DiaboloMode::Full
}

fn default_xi_min() -> f64 {
    -4.0
}

fn default_xi_max() -> f64 {
    3.0
}

fn default_xi_step() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub branches: Vec<usize>,
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{field}`: {msg}"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configurations always serialise")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.dim == 0 {
            return Err(field_err("dim", "must be at least 1"));
        }
        if self.stride == 0 {
            return Err(field_err("stride", "must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(field_err("threads", "must be at least 1"));
        }
        if !self.shape.is_empty() {
            if self.shape.len() != self.dim {
                return Err(field_err("shape", format!("needs {} entries, found {}", self.dim, self.shape.len())));
            }
            if self.shape.contains(&0) {
                return Err(field_err("shape", "entries must be positive"));
            }
        }
        if let Some(p) = &self.packet {
            if p.k0.len() != self.dim {
                return Err(field_err("packet.k0", format!("needs {} entries, found {}", self.dim, p.k0.len())));
            }
            if let Some(c) = &p.center {
                if c.len() != self.dim {
                    return Err(field_err("packet.center", format!("needs {} entries", self.dim)));
                }
            }
            if p.envelope == EnvelopeName::GaussianSinc && p.sigma0.is_none() {
                return Err(field_err("packet.sigma0", "required by the gaussian_sinc envelope"));
            }
            if let CoinField::Named(name) = &p.coin {
                parse_selector_name(name).map_err(|m| field_err("packet.coin", m))?;
            }
        }
        if let Some(d) = &self.dispersion {
            if d.slices.is_some() && self.dim < 2 {
                return Err(field_err("dispersion.slices", "slicing needs at least two dimensions"));
            }
        }
        if let Some(d) = &self.diabolo {
            if !(d.xi_step > 0.0) || !(d.xi_min < d.xi_max) {
                return Err(field_err("diabolo", "need xi_min < xi_max and xi_step > 0"));
            }
        }
        if let Some(p) = &self.project {
            if p.branches.is_empty() {
                return Err(field_err("project.branches", "list at least one branch"));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        if self.shape.is_empty() {
            return Err(field_err("shape", "required by this command"));
        }
        Grid::centered(self.shape.clone()).map_err(CliError::Run)
    }

    pub fn packet_spec(&self) -> Result<WavePacketSpec, CliError> {
        let p = self
            .packet
            .as_ref()
            .ok_or_else(|| CliError::Config("section [packet] is required by this command".into()))?;
        let coin = match &p.coin {
            CoinField::Named(name) => parse_selector_name(name).map_err(|m| field_err("packet.coin", m))?,
            CoinField::Explicit(v) => CoinSelector::Explicit(v.iter().map(|z| Complex64::new(z[0], z[1])).collect()),
        };
        let k0 = p.k0.iter().map(|k| k * PI).collect();
        let mut spec = WavePacketSpec::gaussian(p.sigma, k0, coin);
        if let Some(s0) = p.sigma0 {
            if p.envelope == EnvelopeName::GaussianSinc {
                spec = spec.with_sinc(s0);
            }
        }
        if let Some(c) = &p.center {
            spec = spec.with_center(c.clone());
        }
        Ok(spec)
    }
}

fn parse_selector_name(name: &str) -> Result<CoinSelector, String> {
    if name.eq_ignore_ascii_case("phi_d") {
        return Ok(CoinSelector::PhiD);
    }
    let list = name
        .strip_prefix("branch:")
        .ok_or_else(|| format!("expected `branch:s`, `branch:s1,s2`, `phi_D` or a list of [re, im] pairs, got {name:?}"))?;
    let branches = list
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| format!("bad branch number {s:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(match branches.as_slice() {
        [s] => CoinSelector::Branch(*s),
        _ => CoinSelector::Branches(branches),
    })
}
