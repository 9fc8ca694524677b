use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qmath::{hermitian_op_norm, ComplexMatrix};
use crate::scenario::{fourier_mub, max_entangled, MubSetting};

use super::lm::minimize;
use super::network::{effective_operators, OpticalNetwork, Target};

/// Target-versus-effective comparison for one network.
#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub name: String,
    pub target: Target,
    /// Operator-norm distance per outcome (measurement targets) or of the
    /// normalized success operator (Bell targets).
    pub distances: Vec<f64>,
    pub distance: f64,
    /// `‖Σ_o E_o − I‖` over the detected outcomes.
    pub completeness_defect: f64,
    /// `⟨Φ_d|E_0|Φ_d⟩` for Bell targets.
    pub success_probability: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Target operators: one projector per outcome, or `|Φ_d⟩⟨Φ_d|`.
pub fn target_operators(target: Target) -> Result<Vec<ComplexMatrix>> {
    match target {
        Target::Mub { d, setting } => {
            let s = if setting == 0 { MubSetting::Computational } else { MubSetting::Fourier };
            Ok(fourier_mub(d, s)?.elements().to_vec())
        }
        Target::Bell { d } => Ok(vec![max_entangled(d)?.projector()]),
    }
}

fn target_dim(target: Target) -> usize {
    match target {
        Target::Mub { d, .. } => d,
        Target::Bell { d } => d * d,
    }
}

/// `E/Tr E`, or `None` for a (numerically) vanishing operator.
fn normalized(e: &ComplexMatrix) -> Option<ComplexMatrix> {
    let tr = e.trace().re;
    (tr > 1e-12).then(|| e.scale_real(1.0 / tr))
}

fn require_target(net: &OpticalNetwork) -> Result<Target> {
    let target = net
        .target
        .ok_or_else(|| Error::Network(format!("network `{}` declares no target", net.name)))?;
    if target_dim(target) != net.dim() {
        return Err(Error::Network(format!(
            "network encodes {} levels but its target acts on {}",
            net.dim(),
            target_dim(target)
        )));
    }
    if let Target::Mub { d, .. } = target {
        if net.outcomes() != d {
            return Err(Error::Network(format!("{} detector outcomes for a {d}-outcome target", net.outcomes())));
        }
    }
    Ok(target)
}

/// Compares the detector operators of `net` against its declared target.
/// Outcome operators are positive, so per-outcome phases never enter.
pub fn verify_network(net: &OpticalNetwork) -> Result<Verification> {
    let target = require_target(net)?;
    let ops = effective_operators(net)?;
    let want = target_operators(target)?;
    let d = net.dim();
    let total = ops.iter().fold(ComplexMatrix::zeros(d, d), |acc, e| &acc + e);
    let completeness_defect = hermitian_op_norm(&total.try_sub(&ComplexMatrix::identity(d))?)?;
    let (distances, success_probability) = match target {
        Target::Mub { .. } => {
            let dist = ops
                .iter()
                .zip(&want)
                .map(|(e, p)| hermitian_op_norm(&e.try_sub(p)?))
                .collect::<Result<Vec<_>>>()?;
            (dist, None)
        }
        Target::Bell { .. } => {
            let dist = match normalized(&ops[0]) {
                Some(n) => hermitian_op_norm(&n.try_sub(&want[0])?)?,
                None => 1.0,
            };
            (vec![dist], Some(want[0].trace_product(&ops[0])?.re))
        }
    };
    let distance = distances.iter().copied().fold(0.0, f64::max);
    let passed = distance <= net.tolerance && success_probability.is_none_or(|p| p <= 1.0 + 1e-12);
    Ok(Verification {
        name: net.name.clone(),
        target,
        distances,
        distance,
        completeness_defect,
        success_probability,
        tolerance: net.tolerance,
        passed,
    })
}

fn mismatch_residual(net: &OpticalNetwork, target: Target, want: &[ComplexMatrix], angles: &[f64]) -> Vec<f64> {
    let ops = match net.with_angles(angles).and_then(|n| effective_operators(&n)) {
        Ok(ops) => ops,
        Err(_) => return vec![1e3; 2 * want.iter().map(|w| w.as_slice().len()).sum::<usize>()],
    };
    let flatten = |a: &ComplexMatrix, b: &ComplexMatrix| {
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .flat_map(|(x, y)| [(x - y).re, (x - y).im])
            .collect::<Vec<_>>()
    };
    match target {
        Target::Mub { .. } => ops.iter().zip(want).flat_map(|(e, p)| flatten(e, p)).collect(),
        Target::Bell { .. } => match normalized(&ops[0]) {
            Some(n) => flatten(&n, &want[0]),
            None => vec![1.0; 2 * want[0].as_slice().len()],
        },
    }
}

/// Solves for the `?` wave-plate angles that best reproduce the target,
/// from `starts` seeded random starting points. Returns the angles (degrees,
/// reduced to `[0, 180)`) and the verification of the filled network.
pub fn solve_angles(net: &OpticalNetwork, starts: usize, seed: u64) -> Result<(Vec<f64>, Verification)> {
    let target = require_target(net)?;
    let n = net.free_slots();
    if n == 0 {
        return Err(Error::Network(format!("network `{}` has no open angles", net.name)));
    }
    let want = target_operators(target)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..starts.max(1) {
        let start: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..180.0)).collect();
        let (x, cost) = minimize(|a| mismatch_residual(net, target, &want, a), &start, 300);
        if best.as_ref().is_none_or(|b| cost < b.1) {
            best = Some((x, cost));
        }
        if best.as_ref().is_some_and(|b| b.1 < 1e-24) {
            break;
        }
    }
    let (x, _) = best.expect("at least one start");
    let angles: Vec<f64> = x.iter().map(|a| a.rem_euclid(180.0)).collect();
    let report = verify_network(&net.with_angles(&angles)?)?;
    Ok((angles, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SWAP_NET: &str = "
        name swap
        paths a b
        encode a H
        encode b H
        hwp a ? X
        detect 0 a H
        detect 1 a V
        detect 1 b
        target mub 2 computational
        tolerance 1e-9
    ";

    #[test]
    fn solver_recovers_a_single_plate() {
        let net: OpticalNetwork = SWAP_NET.parse().unwrap();
        let (angles, report) = solve_angles(&net, 4, 1).unwrap();
        assert!(report.passed, "{report:?}");
        // the click probabilities are quadratic in the detuning
        let a = angles[0];
        assert!(a.min(180.0 - a) < 1e-3 || (a - 90.0).abs() < 1e-3, "{a}");
    }

    #[test]
    fn wrong_setting_fails_verification() {
        let net: OpticalNetwork = SWAP_NET.replace("computational", "fourier").parse().unwrap();
        let report = verify_network(&net.with_angles(&[0.0]).unwrap()).unwrap();
        assert!(!report.passed);
        assert!(report.distance > 0.4);
        assert!(report.completeness_defect < 1e-12);
    }

    #[test]
    fn target_shape_is_checked() {
        let net: OpticalNetwork = SWAP_NET.replace("mub 2", "mub 3").parse().unwrap();
        assert!(verify_network(&net.with_angles(&[0.0]).unwrap()).is_err());
        let bare: OpticalNetwork = "paths a\nencode a H\ndetect 0 a".parse().unwrap();
        assert!(verify_network(&bare).is_err());
    }
}
