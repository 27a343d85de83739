//! Probe grids and sampling regions.

use serde::{Deserialize, Serialize};

use crate::derivative::{DEFAULT_CLARKE_RADIUS, DEFAULT_CLARKE_SAMPLES};
use crate::error::{Error, Result};
use crate::output::SolveOptions;

/// Compact time window with `n_t` samples, probe radii and sphere
/// directions per radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeGrid {
    pub t_window: [f64; 2],
    pub n_t: usize,
    pub radii: Vec<f64>,
    pub n_dir: usize,
    pub seed: u64,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        Self {
            t_window: [0.0, 10.0],
            n_t: 25,
            radii: (0..=10).map(|k| f64::from(1u32 << k)).collect(),
            n_dir: 64,
            seed: 0,
        }
    }
}

impl ProbeGrid {
    pub fn validate(&self) -> Result<()> {
        let [ta, tb] = self.t_window;
        if !(ta >= 0.0) || !(tb >= ta) || !tb.is_finite() {
            return Err(Error::Config(format!("invalid time window [{ta}, {tb}]")));
        }
        if self.n_t == 0 || self.n_dir == 0 {
            return Err(Error::Config("n_t and n_dir must be at least 1".into()));
        }
        if self.radii.is_empty()
            || self.radii.iter().any(|r| !(*r > 0.0) || !r.is_finite())
            || self.radii.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::Config("radii must be positive and strictly increasing".into()));
        }
        Ok(())
    }

    /// The `n_t` sample times, evenly spread over the window.
    pub fn times(&self) -> Vec<f64> {
        let [ta, tb] = self.t_window;
        if self.n_t == 1 || ta == tb {
            return vec![ta; 1];
        }
        (0..self.n_t)
            .map(|k| ta + (tb - ta) * k as f64 / (self.n_t - 1) as f64)
            .collect()
    }
}

/// Settings of every probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzerOptions {
    pub grid: ProbeGrid,
    /// Centre of the sampling box `K`; the origin when absent.
    pub box_center: Option<Vec<f64>>,
    pub box_half_width: f64,
    /// Levels `rho` for radial unboundedness and growth.
    pub rho_levels: Vec<f64>,
    pub n_pairs: usize,
    /// Output targets sampled per time for the fibre probes.
    pub n_w: usize,
    /// Random base points for the determinant probe.
    pub n_det_points: usize,
    pub clarke_radius: f64,
    pub clarke_samples: usize,
    pub delta_floor: f64,
    pub epsilon_floor: f64,
    /// Strictness required of `c |D| < 1` and of the monotonicity bounds.
    pub margin: f64,
    /// Fibre points closer than this (but at least `1e-3` apart) witness a
    /// failure of local injectivity for unstructured nonlinearities.
    pub local_radius: f64,
    pub solver: SolveOptions,
}

impl Default for AnalyzerOptions {
    fn default() -> Self {
        Self {
            grid: ProbeGrid::default(),
            box_center: None,
            box_half_width: 4.0,
            rho_levels: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            n_pairs: 4096,
            n_w: 8,
            n_det_points: 256,
            clarke_radius: DEFAULT_CLARKE_RADIUS,
            clarke_samples: DEFAULT_CLARKE_SAMPLES / 4,
            delta_floor: 1e-6,
            epsilon_floor: 1e-6,
            margin: 1e-2,
            local_radius: 0.5,
            solver: SolveOptions::default(),
        }
    }
}

impl AnalyzerOptions {
    pub fn validate(&self, p: usize) -> Result<()> {
        self.grid.validate()?;
        if let Some(c) = &self.box_center {
            if c.len() != p {
                return Err(Error::dim("box_center", p, c.len()));
            }
        }
        if !(self.box_half_width > 0.0) {
            return Err(Error::Config("box_half_width must be positive".into()));
        }
        if self.rho_levels.is_empty() || self.rho_levels.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Config("rho_levels must be positive".into()));
        }
        if self.n_pairs == 0 || self.clarke_samples == 0 {
            return Err(Error::Config("n_pairs and clarke_samples must be at least 1".into()));
        }
        if !(self.clarke_radius > 0.0) {
            return Err(Error::Config("clarke_radius must be positive".into()));
        }
        self.solver.validate()
    }

    pub fn center(&self, p: usize) -> Vec<f64> {
        self.box_center.clone().unwrap_or_else(|| vec![0.0; p])
    }

    pub fn bounds(&self, p: usize) -> (Vec<f64>, Vec<f64>) {
        let c = self.center(p);
        let lo = c.iter().map(|v| v - self.box_half_width).collect();
        let hi = c.iter().map(|v| v + self.box_half_width).collect();
        (lo, hi)
    }
}
