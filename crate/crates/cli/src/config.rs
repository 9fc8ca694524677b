use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

/// Which observations constrain the guessing SDP.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Every cell of the correlation table.
    FullTable,
    /// Only the observed value of S.
    ViolationOnly,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::FullTable => "full-table",
            Mode::ViolationOnly => "violation-only",
        })
    }
}

/// Sweep parameters, read from TOML. Missing keys take the defaults below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub d: usize,
    pub p_min: f64,
    pub p_max: f64,
    /// Number of evenly spaced points on `[p_min, p_max]`.
    pub grid: usize,
    /// Explicit grid; replaces `p_min`, `p_max` and `grid` when present.
    pub points: Option<Vec<f64>>,
    /// Multiplicative visibility: the simulated state uses `p · visibility`.
    pub visibility: f64,
    pub sdp_tol: f64,
    pub trials: usize,
    pub seed: u64,
    pub mode: Mode,
    /// Expected detections per populated cell; each setting receives `d` times this.
    pub counts_per_cell: f64,
    /// Setting whose outcome is certified.
    pub x_star: usize,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            d: 3,
            p_min: 0.6,
            p_max: 1.0,
            grid: 21,
            points: None,
            visibility: 0.987,
            sdp_tol: qsteer::sdp::SDP_TOL,
            trials: qsteer::protocol::DEFAULT_TRIALS,
            seed: 2024,
            mode: Mode::FullTable,
            counts_per_cell: 1e4,
            x_star: 0,
            workers: 0,
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn grid_points(&self) -> Vec<f64> {
        if let Some(points) = &self.points {
            return points.clone();
        }
        match self.grid {
            0 => Vec::new(),
            1 => vec![self.p_min],
            n => {
                let step = (self.p_max - self.p_min) / (n - 1) as f64;
                (0..n)
                    .map(|i| if i == n - 1 { self.p_max } else { self.p_min + step * i as f64 })
                    .collect()
            }
        }
    }

    pub fn counts_per_setting(&self) -> f64 {
        self.counts_per_cell * self.d as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=4).contains(&self.d) {
            bail!("d must be 2, 3 or 4, got {}", self.d);
        }
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if self.points.is_none() {
            if !unit(self.p_min) || !unit(self.p_max) || self.p_min > self.p_max {
                bail!("need 0 <= p_min <= p_max <= 1, got [{}, {}]", self.p_min, self.p_max);
            }
            if self.grid == 0 {
                bail!("grid needs at least one point");
            }
        }
        let points = self.grid_points();
        if points.is_empty() {
            bail!("grid is empty");
        }
        if points.iter().any(|&p| !unit(p)) {
            bail!("grid values must lie in [0, 1]");
        }
        if points.windows(2).any(|w| w[0] > w[1]) {
            bail!("grid values must be sorted");
        }
        if !unit(self.visibility) {
            bail!("visibility must lie in [0, 1], got {}", self.visibility);
        }
        if !(self.sdp_tol > 0.0 && self.sdp_tol < 1.0) {
            bail!("sdp_tol must lie in (0, 1), got {}", self.sdp_tol);
        }
        if self.trials < 2 {
            bail!("trials must be at least 2, got {}", self.trials);
        }
        if !(self.counts_per_cell > 0.0 && self.counts_per_cell.is_finite()) {
            bail!("counts_per_cell must be positive, got {}", self.counts_per_cell);
        }
        if self.x_star >= 2 {
            bail!("x_star must be 0 or 1, got {}", self.x_star);
        }
        Ok(())
    }
}
