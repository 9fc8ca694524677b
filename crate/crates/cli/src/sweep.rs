use std::time::Instant;

use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use qsteer::protocol::effective_visibility;

use crate::config::SweepConfig;
use crate::point::{point_seed, row_values, RowValues, Scenario};

pub const CSV_HEADER: [&str; 10] = [
    "p",
    "p_eff",
    "S",
    "S_LHS",
    "W_QRS",
    "steering_detected",
    "H_min",
    "P_guess",
    "S_stddev",
    "H_stddev",
];

/// Marker written in place of every value a failed row could not produce.
pub const ERROR_CELL: &str = "error";

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub p: f64,
    pub p_eff: f64,
    pub values: std::result::Result<RowValues, String>,
    pub seconds: f64,
}

impl SweepRow {
    /// First error met on this row, if any.
    pub fn error(&self) -> Option<&str> {
        match &self.values {
            Err(e) => Some(e.as_str()),
            Ok(v) => v.h_stddev.as_ref().err().map(String::as_str),
        }
    }

    pub fn is_error(&self) -> bool {
        self.error().is_some()
    }

    fn status(&self) -> &'static str {
        match &self.values {
            Err(_) => "error",
            Ok(v) if v.h_stddev.is_err() => "partial",
            Ok(_) => "ok",
        }
    }

    fn record(&self) -> Vec<String> {
        let num = |x: f64| format!("{x:.10}");
        let mut rec = vec![num(self.p), num(self.p_eff)];
        match &self.values {
            Ok(v) => rec.extend([
                num(v.s),
                num(v.s_lhs),
                num(v.w_qrs),
                v.steering_detected.to_string(),
                num(v.h_min),
                num(v.p_guess),
                num(v.s_stddev),
                v.h_stddev.as_ref().map_or(ERROR_CELL.to_string(), |&h| num(h)),
            ]),
            Err(_) => rec.extend(std::iter::repeat_n(ERROR_CELL.to_string(), CSV_HEADER.len() - 2)),
        }
        rec
    }
}

#[derive(Clone, Debug)]
pub struct SweepRun {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub seconds: f64,
}

#[derive(Serialize)]
struct RowStatus<'a> {
    p: f64,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    seconds: f64,
}

impl SweepRun {
    pub fn errors(&self) -> usize {
        self.rows.iter().filter(|r| r.is_error()).count()
    }

    pub fn csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            w.write_record(row.record())?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }

    /// Config echo, versions, timings and per-row status.
    pub fn report(&self) -> serde_json::Value {
        let rows: Vec<RowStatus> = self
            .rows
            .iter()
            .map(|r| RowStatus {
                p: r.p,
                status: r.status(),
                error: r.error(),
                seconds: r.seconds,
            })
            .collect();
        json!({
            "config": self.config,
            "grid": self.config.grid_points(),
            "counts_per_setting": self.config.counts_per_setting(),
            "versions": {
                "qsteer": qsteer::VERSION,
                "qsteer-cli": env!("CARGO_PKG_VERSION"),
            },
            "timings": {
                "total_seconds": self.seconds,
                "row_seconds": self.rows.iter().map(|r| r.seconds).collect::<Vec<_>>(),
            },
            "rows": rows,
            "errors": self.errors(),
        })
    }
}

/// Runs `f` on a pool of `workers` threads (0 = rayon's default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    Ok(pool.install(f))
}

/// Evaluates every grid point. Rows come back in grid order whatever the
/// completion order; a failing point yields an error row, not an abort.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepRun> {
    config.validate()?;
    let start = Instant::now();
    let sc = Scenario::new(config.d)?;
    let grid = config.grid_points();
    let rows = with_workers(config.workers, || {
        grid.par_iter()
            .enumerate()
            .map(|(i, &p)| {
                let t = Instant::now();
                let p_eff = effective_visibility(p, config.visibility).unwrap_or(f64::NAN);
                let values = row_values(&sc, p_eff, config, point_seed(config.seed, i)).map_err(|e| e.to_string());
                SweepRow {
                    p,
                    p_eff,
                    values,
                    seconds: t.elapsed().as_secs_f64(),
                }
            })
            .collect::<Vec<_>>()
    })?;
    Ok(SweepRun {
        config: config.clone(),
        rows,
        seconds: start.elapsed().as_secs_f64(),
    })
}
