use crate::error::{dim_err, Error, Result};
use crate::scenario::SteeringFunctional;

use super::table::CorrelationTable;

/// Value of the steering functional and its derived witnesses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WitnessReport {
    /// `S`.
    pub s: f64,
    /// `S_LHS`.
    pub s_lhs: f64,
    /// `W_S = S - S_LHS`.
    pub w_s: f64,
    /// `W_QRS`; positive values certify steering.
    pub w_qrs: f64,
    /// `W_QRS > 0`.
    pub steering_detected: bool,
}

impl WitnessReport {
    pub(crate) fn new(s: f64, s_lhs: f64, w_qrs: f64) -> Self {
        Self {
            s,
            s_lhs,
            w_s: s - s_lhs,
            w_qrs,
            steering_detected: w_qrs > 0.0,
        }
    }
}

pub(crate) fn check_table_shape(table: &CorrelationTable, functional: &SteeringFunctional) -> Result<()> {
    let d = functional.dim();
    if table.alice_outcomes() != d || table.bob_outcomes() != d || table.settings() != functional.settings() {
        return Err(dim_err(format!(
            "table shape {}x{}x{} does not match functional over {d} outcomes and {} settings",
            table.alice_outcomes(),
            table.bob_outcomes(),
            table.settings(),
            functional.settings()
        )));
    }
    Ok(())
}

/// Evaluates `S` on a correlation table. `W_QRS` is reported as `W_S / d`,
/// the value an ideal MDI run reproduces.
pub fn steering_parameter(table: &CorrelationTable, functional: &SteeringFunctional) -> Result<WitnessReport> {
    check_table_shape(table, functional)?;
    let s = functional.evaluate(|a, b, j| table.get(a, b, j));
    let d = functional.dim() as f64;
    Ok(WitnessReport::new(s, functional.lhs_bound(), (s - functional.lhs_bound()) / d))
}

/// Isotropic visibility at which the two-MUB functional reaches its bound:
/// `2p + 2(1-p)/d = 1 + 1/√d`.
pub fn critical_p(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    let d = d as f64;
    Ok((1.0 + 1.0 / d.sqrt() - 2.0 / d) / (2.0 - 2.0 / d))
}

/// Source visibility after an extra depolarizing factor, `p_eff = p · v`.
pub fn effective_visibility(p: f64, v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!(
            "visibilities must lie in [0, 1], got p = {p}, v = {v}"
        )));
    }
    Ok(p * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::correlations;
    use crate::scenario::{isotropic, steering_functional_two_mubs, two_mubs};

    fn s_of(d: usize, p: f64) -> f64 {
        let m = two_mubs(d).unwrap();
        let t = correlations(isotropic(d, p).unwrap().matrix(), &m, &m).unwrap();
        steering_parameter(&t, &steering_functional_two_mubs(d).unwrap()).unwrap().s
    }

    #[test]
    fn critical_p_sits_on_the_bound() {
        for d in 2..=5 {
            let pc = critical_p(d).unwrap();
            let bound = 1.0 + 1.0 / (d as f64).sqrt();
            assert!((s_of(d, pc) - bound).abs() < 1e-12);
        }
    }

    #[test]
    fn critical_p_falls_with_dimension() {
        let ps: Vec<f64> = (2..=12).map(|d| critical_p(d).unwrap()).collect();
        assert!(ps.windows(2).all(|w| w[1] < w[0]));
        assert!(critical_p(1).is_err());
    }

    #[test]
    fn report_fields() {
        let f = steering_functional_two_mubs(3).unwrap();
        let t = CorrelationTable::uniform(3, 3, 2);
        let r = steering_parameter(&t, &f).unwrap();
        assert!((r.s - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.w_qrs - r.w_s / 3.0).abs() < 1e-15);
        assert!(!r.steering_detected);
        assert!(steering_parameter(&CorrelationTable::uniform(2, 2, 2), &f).is_err());
    }

    #[test]
    fn effective_visibility_range() {
        assert!((effective_visibility(0.5, 0.987).unwrap() - 0.4935).abs() < 1e-15);
        assert!(effective_visibility(1.2, 0.9).is_err());
    }
}
