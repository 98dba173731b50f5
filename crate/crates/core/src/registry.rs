//! Name-based lookup of coins, evolution backends and dispersion models.

use std::collections::BTreeMap;
use std::path::Path;

use crate::coin::{dft_coin, grover_coin, CoinMatrix};
use crate::error::{QwError, Result};
use crate::evolve::{Evolver, PositionBackend, SpectralBackend};
use crate::spectral::dispersion::{DispersionModel, Grover2d, Grover3d, NumericDispersion};

/// A named family of coins, parameterised by the spatial dimension and an
/// optional argument (the text after `name:` in an id).
pub trait CoinFamily: Send + Sync {
    fn name(&self) -> &str;
    fn build(&self, dim_n: usize, arg: Option<&str>) -> Result<CoinMatrix>;
}

struct GroverFamily;

impl CoinFamily for GroverFamily {
    fn name(&self) -> &str {
        "grover"
    }
    fn build(&self, dim_n: usize, _arg: Option<&str>) -> Result<CoinMatrix> {
        grover_coin(dim_n)
    }
}

struct DftFamily;

impl CoinFamily for DftFamily {
    fn name(&self) -> &str {
        "dft"
    }
    fn build(&self, dim_n: usize, _arg: Option<&str>) -> Result<CoinMatrix> {
        dft_coin(dim_n)
    }
}

struct FileFamily;

impl CoinFamily for FileFamily {
    fn name(&self) -> &str {
        "file"
    }
    fn build(&self, dim_n: usize, arg: Option<&str>) -> Result<CoinMatrix> {
        let path = arg.filter(|p| !p.is_empty()).ok_or_else(|| QwError::invalid("file coin needs a path: file:<path>"))?;
        let c = CoinMatrix::from_csv_path(Path::new(path))?;
        if c.dim_n() != dim_n {
            return Err(QwError::DimensionMismatch {
                expected: dim_n,
                found: c.dim_n(),
            });
        }
        Ok(c)
    }
}

pub struct CoinRegistry {
    families: BTreeMap<String, Box<dyn CoinFamily>>,
}

impl Default for CoinRegistry {
    fn default() -> Self {
        let mut r = CoinRegistry {
            families: BTreeMap::new(),
        };
        r.register(Box::new(GroverFamily));
        r.register(Box::new(DftFamily));
        r.register(Box::new(FileFamily));
        r
    }
}

impl CoinRegistry {
    pub fn register(&mut self, family: Box<dyn CoinFamily>) {
        self.families.insert(family.name().to_string(), family);
    }

    pub fn available(&self) -> Vec<String> {
        self.families
            .keys()
            .map(|k| if k == "file" { "file:<path>".to_string() } else { k.clone() })
            .collect()
    }

    /// Resolves ids such as `grover`, `dft` or `file:coin.csv`.
    pub fn resolve(&self, id: &str, dim_n: usize) -> Result<CoinMatrix> {
        let (name, arg) = match id.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (id, None),
        };
        let family = self.families.get(name).ok_or_else(|| QwError::UnknownCoin {
            id: id.to_string(),
            available: self.available().join(", "),
        })?;
        family.build(dim_n, arg)
    }
}

pub struct BackendRegistry {
    backends: BTreeMap<String, Box<dyn Evolver>>,
}

impl Default for BackendRegistry {
    fn default() -> Self {
        let mut r = BackendRegistry {
            backends: BTreeMap::new(),
        };
        r.register(Box::new(PositionBackend));
        r.register(Box::new(SpectralBackend));
        r
    }
}

impl BackendRegistry {
    pub fn register(&mut self, backend: Box<dyn Evolver>) {
        self.backends.insert(backend.name().to_string(), backend);
    }

    pub fn available(&self) -> Vec<String> {
        self.backends.keys().cloned().collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn Evolver> {
        self.backends
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| QwError::UnknownBackend {
                id: name.to_string(),
                available: self.available().join(", "),
            })
    }
}

/// Dispersion models by name: `auto` picks a closed form when one exists.
pub fn dispersion_model(name: &str, coin: &CoinMatrix) -> Result<Box<dyn DispersionModel>> {
    match name {
        "auto" => Ok(crate::spectral::dispersion::model_for(coin)),
        "numeric" => Ok(Box::new(NumericDispersion::new(coin.clone()))),
        "grover2d" if coin.is_grover() && coin.dim_n() == 2 => Ok(Box::new(Grover2d)),
        "grover3d" if coin.is_grover() && coin.dim_n() == 3 => Ok(Box::new(Grover3d)),
        "grover2d" | "grover3d" => Err(QwError::invalid(format!(
            "dispersion model {name} does not describe the {} coin with N = {}",
            coin.id(),
            coin.dim_n()
        ))),
        other => Err(QwError::invalid(format!(
            "unknown dispersion model {other:?}; available: auto, grover2d, grover3d, numeric"
        ))),
    }
}
