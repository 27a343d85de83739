//! TOML system definitions.
//!
//! ```toml
//! name = "ex3d"
//!
//! [matrices]
//! A = [[1.0, -1.0], [-1.0, 1.0]]
//! B = [[1.0], [-1.0]]
//! B_e = [[1.0], [-1.0]]
//! C = [[1.0, 1.0]]
//! D = [[1.0]]
//! D_e = [[1.0]]
//!
//! [nonlinearity]
//! kind = "expression"
//! p = 1
//! outputs = ["xi_1 - atan(xi_1)"]
//!
//! [input]
//! kind = "polynomial"
//! coefficients = [[0.0, 1.0]]
//!
//! [defaults]
//! x0 = [-1.0, 1.0]
//! tmax = 2.0
//! method = "rk45_adaptive"
//! ```
//!
//! `input` defaults to zero, `defaults` to `t0 = 0`, `x0 = 0`, `tmax = 10`,
//! `dt = 1e-3` and `rk4_fixed`. Optional `[solver]` and `[analyzer]` tables
//! override the numerical settings. Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::analyzer::AnalyzerOptions;
use crate::catalog::CatalogEntry;
use crate::error::{Error, Result};
use crate::integrator::Method;
use crate::model::{InputSignal, LureSystem, Nonlinearity, NonlinearityDesc, SystemMatrices};
use crate::output::SolveOptions;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct MatricesConfig {
    pub A: Vec<Vec<f64>>,
    pub B: Vec<Vec<f64>>,
    pub B_e: Vec<Vec<f64>>,
    pub C: Vec<Vec<f64>>,
    pub D: Vec<Vec<f64>>,
    pub D_e: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunDefaults {
    pub t0: f64,
    /// Initial state; zero when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    pub tmax: f64,
    pub dt: f64,
    pub method: Method,
}

impl Default for RunDefaults {
    fn default() -> Self {
        Self {
            t0: 0.0,
            x0: None,
            tmax: 10.0,
            dt: 1e-3,
            method: Method::Rk4Fixed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub matrices: MatricesConfig,
    pub nonlinearity: NonlinearityDesc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSignal>,
    #[serde(default)]
    pub defaults: RunDefaults,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolveOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analyzer: Option<AnalyzerOptions>,
}

/// Parse and validate configuration text.
pub fn parse_config(text: &str) -> Result<SystemConfig> {
    let cfg: SystemConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string().trim_end().to_string()))?;
    cfg.system()?;
    cfg.x0()?;
    if let Some(s) = &cfg.solver {
        s.validate()?;
    }
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<SystemConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

impl SystemConfig {
    pub fn matrices(&self) -> Result<SystemMatrices<f64>> {
        let m = &self.matrices;
        SystemMatrices::from_rows(&m.A, &m.B, &m.B_e, &m.C, &m.D, &m.D_e)
    }

    pub fn system(&self) -> Result<LureSystem> {
        let matrices = self.matrices()?;
        let nonlinearity = Nonlinearity::new(self.nonlinearity.clone()).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("nonlinearity: {msg}")),
            other => other,
        })?;
        let input = self
            .input
            .clone()
            .unwrap_or_else(|| InputSignal::zero(matrices.dims().me));
        LureSystem::new(matrices, nonlinearity, input)
    }

    /// Default initial state, checked against `n`.
    pub fn x0(&self) -> Result<Vec<f64>> {
        let n = self.matrices()?.dims().n;
        match &self.defaults.x0 {
            Some(x) if x.len() != n => Err(Error::dim("defaults.x0", n, x.len())),
            Some(x) => Ok(x.clone()),
            None => Ok(vec![0.0; n]),
        }
    }

    /// Configuration reproducing a catalog entry.
    pub fn from_entry(entry: &CatalogEntry) -> Self {
        let m = &entry.system.matrices;
        Self {
            name: Some(entry.name.clone()),
            matrices: MatricesConfig {
                A: m.a().to_f64_rows(),
                B: m.b().to_f64_rows(),
                B_e: m.be().to_f64_rows(),
                C: m.c().to_f64_rows(),
                D: m.d().to_f64_rows(),
                D_e: m.de().to_f64_rows(),
            },
            nonlinearity: entry.system.nonlinearity.desc().clone(),
            input: Some(entry.system.input.clone()),
            defaults: RunDefaults {
                t0: entry.t0,
                x0: Some(entry.x0.clone()),
                tmax: entry.tmax,
                dt: entry.dt,
                method: entry.method,
            },
            solver: None,
            analyzer: None,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize configuration: {e}")))
    }
}
