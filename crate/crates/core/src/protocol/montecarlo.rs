use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{dim_err, Error, Result};

use super::table::CorrelationTable;

pub const DEFAULT_TRIALS: usize = 100;

/// Expected counts per cell of a correlation table, plus the resampling plan.
#[derive(Clone, Debug, PartialEq)]
pub struct CountsTable {
    alice_outcomes: usize,
    bob_outcomes: usize,
    settings: usize,
    expected: Vec<f64>,
    trials: usize,
    seed: u64,
}

impl CountsTable {
    pub fn new(
        alice_outcomes: usize,
        bob_outcomes: usize,
        settings: usize,
        expected: Vec<f64>,
        trials: usize,
        seed: u64,
    ) -> Result<Self> {
        if expected.len() != alice_outcomes * bob_outcomes * settings {
            return Err(dim_err("expected counts do not match table shape"));
        }
        if expected.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
            return Err(Error::InvalidParameter("expected counts must be finite and nonnegative".into()));
        }
        if trials < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 trials, got {trials}")));
        }
        Ok(Self {
            alice_outcomes,
            bob_outcomes,
            settings,
            expected,
            trials,
            seed,
        })
    }

    /// Expected counts `N · p(a,b|j)` with `N` detections per setting.
    pub fn from_table(table: &CorrelationTable, counts_per_setting: f64, trials: usize, seed: u64) -> Result<Self> {
        let expected = table.as_slice().iter().map(|p| (p * counts_per_setting).max(0.0)).collect();
        Self::new(
            table.alice_outcomes(),
            table.bob_outcomes(),
            table.settings(),
            expected,
            trials,
            seed,
        )
    }

    pub fn expected(&self) -> &[f64] {
        &self.expected
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Copy with every expected count multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let expected = self.expected.iter().map(|c| c * factor).collect();
        Self::new(
            self.alice_outcomes,
            self.bob_outcomes,
            self.settings,
            expected,
            self.trials,
            self.seed,
        )
    }

    /// One Poisson resample, drawn from substream `trial` of the master seed.
    pub fn sample(&self, trial: usize) -> Result<CorrelationTable> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial as u64);
        let mut counts = Vec::with_capacity(self.expected.len());
        for &lambda in &self.expected {
            let c = if lambda > 0.0 {
                Poisson::new(lambda)
                    .map_err(|e| Error::InvalidParameter(format!("Poisson mean {lambda}: {e}")))?
                    .sample(&mut rng)
            } else {
                0.0
            };
            counts.push(c);
        }
        CorrelationTable::from_counts(self.alice_outcomes, self.bob_outcomes, self.settings, &counts)
    }
}

/// Sample mean and standard deviation of a statistic over Poisson resamples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McSummary {
    pub mean: f64,
    pub stddev: f64,
    pub trials: usize,
}

/// Resamples every cell from a Poisson law, renormalizes per setting and
/// evaluates `statistic` on each trial. Trials run in parallel; each draws
/// from its own ChaCha stream so the result is independent of scheduling.
pub fn poisson_mc<F>(counts: &CountsTable, statistic: F) -> Result<McSummary>
where
    F: Fn(&CorrelationTable) -> Result<f64> + Sync,
{
    let values = (0..counts.trials)
        .into_par_iter()
        .map(|t| statistic(&counts.sample(t)?))
        .collect::<Result<Vec<f64>>>()?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(McSummary {
        mean,
        stddev: var.sqrt(),
        trials: counts.trials,
    })
}
