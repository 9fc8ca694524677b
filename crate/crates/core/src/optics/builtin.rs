use crate::error::{Error, Result};
use crate::qmath::ComplexMatrix;
use crate::scenario::Povm;

use super::network::{effective_operators, OpticalNetwork};

/// Network descriptions shipped with the crate, by name.
pub const BUILTIN_NETWORKS: [(&str, &str); 5] = [
    ("alice-d3-x1", include_str!("../../data/networks/alice_d3_x1.net")),
    ("alice-d3-x2", include_str!("../../data/networks/alice_d3_x2.net")),
    ("alice-d3-x2-open", include_str!("../../data/networks/alice_d3_x2_open.net")),
    ("bsm-d3", include_str!("../../data/networks/bsm_d3.net")),
    ("bsm-d4", include_str!("../../data/networks/bsm_d4.net")),
];

pub fn builtin_network(name: &str) -> Result<OpticalNetwork> {
    BUILTIN_NETWORKS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Network(format!("no built-in network named `{name}`")))?
        .1
        .parse()
}

/// Alice's qutrit measurement for setting `j ∈ {1, 2}` and the POVM its
/// detectors implement.
pub fn alice_measurement_network(j: usize) -> Result<(OpticalNetwork, Povm)> {
    let name = match j {
        1 => "alice-d3-x1",
        2 => "alice-d3-x2",
        _ => return Err(Error::InvalidParameter(format!("setting {j} is not 1 or 2"))),
    };
    let net = builtin_network(name)?;
    let povm = Povm::with_tolerance(effective_operators(&net)?, 1e-9)?;
    Ok((net, povm))
}

/// Partial Bell-state measurement for `d ∈ {3, 4}` and its success operator on
/// Bob ⊗ Charlie.
pub fn bsm_projector_network(d: usize) -> Result<(OpticalNetwork, ComplexMatrix)> {
    let name = match d {
        3 => "bsm-d3",
        4 => "bsm-d4",
        _ => return Err(Error::UnsupportedDimension(d)),
    };
    let net = builtin_network(name)?;
    let op = effective_operators(&net)?.swap_remove(0);
    Ok((net, op))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{apply_network, solve_angles, verify_network, PathPolState};
    use crate::qmath::random::random_ket;
    use crate::qmath::{phase, Ket};
    use crate::scenario::max_entangled;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn every_builtin_parses() {
        for (name, _) in BUILTIN_NETWORKS {
            let net = builtin_network(name).unwrap();
            assert_eq!(net.name, name);
        }
        assert!(builtin_network("nope").is_err());
    }

    #[test]
    fn alice_settings_match_the_two_bases() {
        for j in [1, 2] {
            let (net, _) = alice_measurement_network(j).unwrap();
            let report = verify_network(&net).unwrap();
            assert!(report.passed && report.distance < 1e-3, "{report:?}");
            assert!(report.completeness_defect < 1e-12);
        }
        assert!(alice_measurement_network(3).is_err());
    }

    #[test]
    fn alice_detectors_are_complete_for_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for j in [1, 2] {
            let (net, _) = alice_measurement_network(j).unwrap();
            for _ in 0..20 {
                let ket = random_ket(&mut rng, 3);
                let mut input = PathPolState::vacuum(&net.paths);
                for (level, a) in ket.amplitudes().iter().enumerate() {
                    let (path, pol) = net.encoding[level];
                    input.set(&net.paths[path], pol, *a).unwrap();
                }
                let out = apply_network(&net, &input).unwrap();
                let clicked: f64 = net
                    .detectors
                    .iter()
                    .flatten()
                    .map(|&(path, pol)| match pol {
                        Some(q) => out.amplitude(&net.paths[path], q).unwrap().norm_sqr(),
                        None => out.amplitudes()[2 * path].norm_sqr() + out.amplitudes()[2 * path + 1].norm_sqr(),
                    })
                    .sum();
                assert!((clicked - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn open_fourier_network_is_solved_exactly() {
        let net = builtin_network("alice-d3-x2-open").unwrap();
        let (_, report) = solve_angles(&net, 16, 7).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn fourier_third_plate_solves_near_listed_angle() {
        let text = BUILTIN_NETWORKS[1]
            .1
            .replace("hwp p1 72.37 HWP3", "hwp p1 ? HWP3")
            .replace("tolerance 1e-3", "tolerance 1e-9");
        let net: OpticalNetwork = text.parse().unwrap();
        let (angles, report) = solve_angles(&net, 4, 3).unwrap();
        assert!(report.passed, "{report:?}");
        assert!((angles[0] - 72.37).abs() < 5e-3, "{angles:?}");
    }

    #[test]
    fn bell_networks_project_onto_phi() {
        for d in [3, 4] {
            let (net, op) = bsm_projector_network(d).unwrap();
            let report = verify_network(&net).unwrap();
            assert!(report.passed && report.distance < 1e-6, "{report:?}");
            let phi = max_entangled(d).unwrap().projector();
            assert!(op.max_abs_diff(&phi) < 1e-6);
        }
    }

    #[test]
    fn twisted_bell_state_never_succeeds() {
        for d in [3, 4] {
            let (_, op) = bsm_projector_network(d).unwrap();
            let w = 2.0 * std::f64::consts::PI / d as f64;
            let mut amps = vec![crate::qmath::ZERO; d * d];
            for i in 0..d {
                amps[i * d + i] = phase(w * i as f64) / (d as f64).sqrt();
            }
            let v = Ket::from_amplitudes(amps).projector();
            assert!(op.trace_product(&v).unwrap().re.abs() < 1e-12);
        }
    }

    #[test]
    fn detuned_plate_breaks_the_bell_network() {
        let (mut net, _) = bsm_projector_network(3).unwrap();
        net.waveplate_mut("HWP4").unwrap().angle = crate::optics::Angle::Fixed(44.0);
        let report = verify_network(&net).unwrap();
        assert!(!report.passed);
        assert!(report.distance > 1e-3);
    }

    #[test]
    fn encodings_are_injective() {
        for (name, _) in BUILTIN_NETWORKS {
            let net = builtin_network(name).unwrap();
            let mut modes: Vec<_> = net.encoding.iter().map(|&(p, q)| (p, q.to_string())).collect();
            modes.sort();
            modes.dedup();
            assert_eq!(modes.len(), net.dim());
        }
    }
}
