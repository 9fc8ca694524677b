//! Everything computed at a single grid point.

use qsteer::protocol::{
    correlations, critical_p, effective_visibility, mdi_table, poisson_mc, qrs_witness, steering_parameter,
    CorrelationTable, CountsTable, McSummary, WitnessReport,
};
use qsteer::scenario::{isotropic, question_states, steering_functional_two_mubs, two_mubs, Povm, QuestionStateSet};
use qsteer::scenario::SteeringFunctional;
use qsteer::sdp::{assemblage, guessing_probability, lhs_membership, GuessData, LhsDecision, RandomnessResult};
use qsteer::{Error, Result};

use crate::config::{Mode, SweepConfig};

/// Largest disagreement tolerated between the steering and MDI routes to `W_QRS`.
pub const ROUTE_TOL: f64 = 1e-9;

/// Measurements, functional and question states for one dimension.
pub struct Scenario {
    pub d: usize,
    pub mubs: Vec<Povm>,
    pub functional: SteeringFunctional,
    pub questions: QuestionStateSet,
}

impl Scenario {
    pub fn new(d: usize) -> Result<Self> {
        Ok(Self {
            d,
            mubs: two_mubs(d)?,
            functional: steering_functional_two_mubs(d)?,
            questions: question_states(d)?,
        })
    }

    pub fn state(&self, p_eff: f64) -> Result<qsteer::qmath::ComplexMatrix> {
        Ok(isotropic(self.d, p_eff)?.into_matrix())
    }

    pub fn table(&self, p_eff: f64) -> Result<CorrelationTable> {
        correlations(&self.state(p_eff)?, &self.mubs, &self.mubs)
    }

    pub fn guess(&self, table: &CorrelationTable, mode: Mode, x_star: usize, tol: f64) -> Result<RandomnessResult> {
        match mode {
            Mode::FullTable => guessing_probability(&GuessData::FullTable { table, bob: &self.mubs }, x_star, tol),
            Mode::ViolationOnly => {
                let s_value = steering_parameter(table, &self.functional)?.s;
                let data = GuessData::ViolationOnly {
                    s_value,
                    functional: &self.functional,
                    bob: &self.mubs,
                };
                guessing_probability(&data, x_star, tol)
            }
        }
    }
}

/// Witness values at one point, by both routes.
#[derive(Clone, Debug)]
pub struct WitnessPoint {
    pub p_eff: f64,
    pub steering: WitnessReport,
    pub mdi: WitnessReport,
    pub critical_p: f64,
    pub lhs: LhsDecision,
}

pub fn witness_point(sc: &Scenario, p: f64, visibility: f64, tol: f64) -> Result<WitnessPoint> {
    let p_eff = effective_visibility(p, visibility)?;
    let rho = sc.state(p_eff)?;
    let steering = steering_parameter(&correlations(&rho, &sc.mubs, &sc.mubs)?, &sc.functional)?;
    let mdi = qrs_witness(&mdi_table(&rho, &sc.mubs, &sc.questions, None)?, &sc.questions, &sc.functional)?;
    let lhs = lhs_membership(&assemblage(&rho, &sc.mubs)?, tol.max(1e-7))?;
    Ok(WitnessPoint {
        p_eff,
        steering,
        mdi,
        critical_p: critical_p(sc.d)?,
        lhs,
    })
}

/// Poisson error bars on `S` and `H_min` around the exact table at `p_eff`.
///
/// The `H_min` bar fails on its own when a resampled table admits no quantum
/// assemblage, as happens at `p_eff = 1` where empty cells pin Bob's marginal.
pub fn error_bars(sc: &Scenario, p_eff: f64, cfg: &SweepConfig, seed: u64) -> Result<(McSummary, Result<McSummary>)> {
    let counts = CountsTable::from_table(&sc.table(p_eff)?, cfg.counts_per_setting(), cfg.trials, seed)?;
    let s = poisson_mc(&counts, |t| Ok(steering_parameter(t, &sc.functional)?.s))?;
    let h = poisson_mc(&counts, |t| Ok(sc.guess(t, cfg.mode, cfg.x_star, cfg.sdp_tol)?.h_min));
    Ok((s, h))
}

/// One CSV row's worth of numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct RowValues {
    pub s: f64,
    pub s_lhs: f64,
    pub w_qrs: f64,
    pub steering_detected: bool,
    pub h_min: f64,
    pub p_guess: f64,
    pub s_stddev: f64,
    pub h_stddev: std::result::Result<f64, String>,
}

/// Seed of the Monte Carlo stream for grid point `index`.
pub fn point_seed(master: u64, index: usize) -> u64 {
    master ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// `S` comes from the exact correlation table, `W_QRS` from the simulated
/// MDI experiment; the two must agree.
pub fn row_values(sc: &Scenario, p_eff: f64, cfg: &SweepConfig, seed: u64) -> Result<RowValues> {
    let rho = sc.state(p_eff)?;
    let table = correlations(&rho, &sc.mubs, &sc.mubs)?;
    let steering = steering_parameter(&table, &sc.functional)?;
    let mdi = qrs_witness(&mdi_table(&rho, &sc.mubs, &sc.questions, None)?, &sc.questions, &sc.functional)?;
    if (mdi.w_qrs - steering.w_qrs).abs() > ROUTE_TOL {
        return Err(Error::InvalidParameter(format!(
            "MDI witness {} disagrees with W_S/d = {}",
            mdi.w_qrs, steering.w_qrs
        )));
    }
    let guess = sc.guess(&table, cfg.mode, cfg.x_star, cfg.sdp_tol)?;
    let (s_mc, h_mc) = error_bars(sc, p_eff, cfg, seed)?;
    Ok(RowValues {
        s: steering.s,
        s_lhs: steering.s_lhs,
        w_qrs: mdi.w_qrs,
        steering_detected: steering.s > steering.s_lhs,
        h_min: guess.h_min,
        p_guess: guess.p_guess,
        s_stddev: s_mc.stddev,
        h_stddev: h_mc.map(|h| h.stddev).map_err(|e| format!("H_min error bar: {e}")),
    })
}
