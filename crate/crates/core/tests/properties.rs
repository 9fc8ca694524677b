use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qsteer::optics::{apply_network, jones, phase_distance, OpticalNetwork, PathPolState, WaveplateKind};
use qsteer::protocol::{
    correlations, mdi_table, qrs_witness, steering_parameter, CorrelationTable, LhsModel,
};
use qsteer::qmath::random::{random_density, random_hermitian, random_ket, random_unitary};
use qsteer::qmath::{eig_max_hermitian, is_psd, kron, partial_trace, Complex64, ComplexMatrix};
use qsteer::scenario::{
    isotropic, max_entangled, mub_kets, question_states, steering_functional_two_mubs, two_mubs, MubSetting, Povm,
};
use qsteer::sdp::{assemblage, guessing_probability, lhs_membership, Assemblage, GuessData};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn isotropic_table(d: usize, p: f64) -> CorrelationTable {
    let m = two_mubs(d).unwrap();
    correlations(isotropic(d, p).unwrap().matrix(), &m, &m).unwrap()
}

/// Projective measurement onto the columns of a random unitary.
fn random_basis_povm(rng: &mut ChaCha8Rng, d: usize) -> Povm {
    let u = random_unitary(rng, d);
    let kets: Vec<_> = (0..d)
        .map(|c| qsteer::qmath::Ket::from_amplitudes((0..d).map(|r| u[(r, c)]).collect()))
        .collect();
    Povm::from_basis(&kets).unwrap()
}

fn h_min(d: usize, p: f64, mode: &str) -> f64 {
    let m = two_mubs(d).unwrap();
    let f = steering_functional_two_mubs(d).unwrap();
    let rho = isotropic(d, p).unwrap().into_matrix();
    let table = correlations(&rho, &m, &m).unwrap();
    let r = match mode {
        "assemblage" => guessing_probability(&GuessData::Assemblage(&assemblage(&rho, &m).unwrap()), 0, 1e-8),
        "table" => guessing_probability(&GuessData::FullTable { table: &table, bob: &m }, 0, 1e-8),
        _ => {
            let s_value = steering_parameter(&table, &f).unwrap().s;
            guessing_probability(&GuessData::ViolationOnly { s_value, functional: &f, bob: &m }, 0, 1e-8)
        }
    };
    r.unwrap().h_min
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), da in 2usize..5, db in 2usize..5) {
        let mut r = rng(seed);
        let (a, b) = (random_hermitian(&mut r, da), random_hermitian(&mut r, db));
        let ab = kron(&a, &b);
        let keep_a = partial_trace(&ab, &[da, db], 0).unwrap();
        let keep_b = partial_trace(&ab, &[da, db], 1).unwrap();
        prop_assert!(keep_a.max_abs_diff(&a.scale(b.trace())) < 1e-12);
        prop_assert!(keep_b.max_abs_diff(&b.scale(a.trace())) < 1e-12);
    }

    #[test]
    fn largest_eigenvalue_matches_nalgebra(seed in any::<u64>(), n in 2usize..=16) {
        let h = random_hermitian(&mut rng(seed), n);
        let m = DMatrix::from_fn(n, n, |r, c| h[(r, c)]);
        let oracle = m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((eig_max_hermitian(&h).unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn bell_projection_transposes(seed in any::<u64>(), d in 2usize..=4) {
        let rho = random_density(&mut rng(seed), d);
        let phi = max_entangled(d).unwrap().projector();
        let joint = kron(&rho, &ComplexMatrix::identity(d)).matmul(&phi).unwrap();
        let reduced = partial_trace(&joint, &[d, d], 1).unwrap();
        prop_assert!(reduced.max_abs_diff(&rho.transpose().scale_real(1.0 / d as f64)) < 1e-12);
    }

    #[test]
    fn isotropic_states_are_twirl_invariant(seed in any::<u64>(), d in 2usize..=4, p in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let rho = isotropic(d, p).unwrap().into_matrix();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12 && is_psd(&rho, 1e-12));
        let u = random_unitary(&mut r, d);
        let uu = kron(&u, &u.conj());
        let twirled = uu.matmul(&rho).unwrap().matmul(&uu.adjoint()).unwrap();
        prop_assert!(twirled.max_abs_diff(&rho) < 1e-12);
    }

    #[test]
    fn qrs_witness_equals_ws_over_d(seed in any::<u64>(), d in 2usize..=4) {
        // arbitrary two-qudit state and arbitrary projective settings for Alice
        let mut r = rng(seed);
        let rho = random_density(&mut r, d * d);
        let alice = vec![random_basis_povm(&mut r, d), random_basis_povm(&mut r, d)];
        let bob = two_mubs(d).unwrap();
        let f = steering_functional_two_mubs(d).unwrap();
        let q = question_states(d).unwrap();
        let mdi = mdi_table(&rho, &alice, &q, None).unwrap();
        prop_assert!(mdi.as_slice().iter().all(|&v| v >= -1e-12 && v <= 1.0 / d as f64 + 1e-10));
        let w = qrs_witness(&mdi, &q, &f).unwrap();
        let ws = steering_parameter(&correlations(&rho, &alice, &bob).unwrap(), &f).unwrap();
        prop_assert!((w.w_qrs - ws.w_s / d as f64).abs() < 1e-12);
        prop_assert!((ws.w_qrs - ws.w_s / d as f64).abs() < 1e-12);
        prop_assert!((ws.w_s - (ws.s - ws.s_lhs)).abs() < 1e-15);
    }

    #[test]
    fn mdi_cells_are_table_over_d(d in 2usize..=4, p in 0.0f64..=1.0) {
        let m = two_mubs(d).unwrap();
        let q = question_states(d).unwrap();
        let rho = isotropic(d, p).unwrap().into_matrix();
        let mdi = mdi_table(&rho, &m, &q, None).unwrap();
        let table = correlations(&rho, &m, &m).unwrap();
        for j in 0..2 {
            for a in 0..d {
                for b in 0..d {
                    prop_assert!((mdi.reconstructed(&q, a, b, j) - table.get(a, b, j) / d as f64).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn steering_parameter_is_affine_in_p(d in 2usize..=4, p in 0.0f64..=1.0, t in 0.0f64..=1.0) {
        let f = steering_functional_two_mubs(d).unwrap();
        let s = |p: f64| steering_parameter(&isotropic_table(d, p), &f).unwrap().s;
        let q = 1.0 - p * t;
        let mixed = t * s(p) + (1.0 - t) * s(1.0);
        prop_assert!((s(t * p + (1.0 - t)) - mixed).abs() < 1e-12, "q={q}");
        prop_assert!((s(p) - (2.0 * p + 2.0 * (1.0 - p) / d as f64)).abs() < 1e-12);
    }

    #[test]
    fn steering_detection_is_monotone(d in 2usize..=4, p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
        let f = steering_functional_two_mubs(d).unwrap();
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let det = |p: f64| steering_parameter(&isotropic_table(d, p), &f).unwrap().steering_detected;
        prop_assert!(!det(lo) || det(hi));
    }

    #[test]
    fn lhs_models_respect_the_bound(seed in any::<u64>(), d in 2usize..=4, n in 1usize..8, extremal in any::<bool>()) {
        let mut r = rng(seed);
        let m = two_mubs(d).unwrap();
        let f = steering_functional_two_mubs(d).unwrap();
        let model = if extremal {
            LhsModel::random_deterministic(&mut r, d, 2, d, n)
        } else {
            LhsModel::random(&mut r, d, 2, d, n)
        };
        let s = steering_parameter(&model.table(&m).unwrap(), &f).unwrap().s;
        prop_assert!(s <= 1.0 + 1.0 / (d as f64).sqrt() + 1e-9, "S = {s}");
    }

    #[test]
    fn assemblages_are_valid(seed in any::<u64>(), d in 2usize..=3) {
        let mut r = rng(seed);
        let rho = random_density(&mut r, d * d);
        let asm = assemblage(&rho, &two_mubs(d).unwrap()).unwrap();
        for x in 0..2 {
            prop_assert!((asm.reduced_state(x).trace().re - 1.0).abs() < 1e-10);
            prop_assert!(asm.reduced_state(x).max_abs_diff(&asm.reduced_state(0)) < 1e-10);
            for a in 0..d {
                prop_assert!(is_psd(asm.member(a, x), 1e-10));
            }
        }
    }

    #[test]
    fn mub_overlaps_are_flat(d in 2usize..=6) {
        let (e, f) = (mub_kets(d, MubSetting::Computational).unwrap(), mub_kets(d, MubSetting::Fourier).unwrap());
        for u in &e {
            for v in &f {
                prop_assert!((u.inner(v).unwrap().norm_sqr() - 1.0 / d as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn half_wave_plates_square_to_identity(theta in -360.0f64..360.0) {
        for kind in [WaveplateKind::Hwp, WaveplateKind::Qwp] {
            prop_assert!(jones(kind, theta).unitarity_defect() < 1e-12);
        }
        let h = jones(WaveplateKind::Hwp, theta);
        prop_assert!(phase_distance(&h.matmul(&h).unwrap(), &ComplexMatrix::identity(2)).unwrap() < 1e-12);
    }

    #[test]
    fn lossless_networks_conserve_probability(seed in any::<u64>(), len in 1usize..12) {
        let mut r = rng(seed);
        let paths = ["a", "b", "c"];
        let mut text = String::from("paths a b c\nencode a H\n");
        for _ in 0..len {
            let path = paths[r.random_range(0..3)];
            match r.random_range(0..3) {
                0 => text += &format!("hwp {path} {}\n", r.random_range(0.0..180.0)),
                1 => text += &format!("qwp {path} {}\n", r.random_range(0.0..180.0)),
                _ => text += if r.random_bool(0.5) { "bd a>b b>c c>a\n" } else { "bd a>c c>a\n" },
            }
        }
        text += "detect 0 a";
        let net: OpticalNetwork = text.parse().unwrap();
        let amps = random_ket(&mut r, 6).amplitudes().to_vec();
        let out = apply_network(&net, &PathPolState::from_amplitudes(&net.paths, amps).unwrap()).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn randomness_bounds(d in 2usize..=3, p in 0.0f64..=1.0, x_star in 0usize..2) {
        let m = two_mubs(d).unwrap();
        let table = isotropic_table(d, p);
        let r = guessing_probability(&GuessData::FullTable { table: &table, bob: &m }, x_star, 1e-8).unwrap();
        prop_assert!(r.p_guess >= 1.0 / d as f64 - 1e-7, "P_guess = {}", r.p_guess);
        prop_assert!((r.h_min + r.p_guess.log2()).abs() < 1e-12);
        let c = &r.certificate;
        prop_assert!(c.primal_value <= c.dual_value + 1e-6, "{} > {}", c.primal_value, c.dual_value);
        for block in &c.blocks {
            prop_assert!(is_psd(block, 1e-7));
        }
    }

    #[test]
    fn lhs_assemblages_give_no_randomness(seed in any::<u64>(), d in 2usize..=3, n in 1usize..5) {
        let model = LhsModel::random(&mut rng(seed), d, 2, d, n);
        let asm = Assemblage::from_lhs_model(&model).unwrap();
        let decision = lhs_membership(&asm, 1e-6).unwrap();
        prop_assert!(decision.is_lhs(), "robustness {}", decision.robustness());
        let pg = guessing_probability(&GuessData::Assemblage(&asm), 0, 1e-8).unwrap().p_guess;
        prop_assert!((pg - 1.0).abs() < 1e-6, "P_guess = {pg}");
    }
}

#[test]
fn relaxing_constraints_never_raises_h_min() {
    for p in [0.8, 0.9, 1.0] {
        let (asm, table, viol) = (h_min(3, p, "assemblage"), h_min(3, p, "table"), h_min(3, p, "violation"));
        assert!(asm >= table - 1e-6 && table >= viol - 1e-6, "p={p}: {asm} {table} {viol}");
    }
}

#[test]
fn h_min_is_monotone_in_p() {
    for mode in ["table", "violation"] {
        let values: Vec<f64> = (0..=10).map(|i| h_min(3, 0.6 + 0.04 * i as f64, mode)).collect();
        for w in values.windows(2) {
            assert!(w[1] >= w[0] - 1e-6, "{mode}: {values:?}");
        }
        assert!(values[10] > 1.0, "{mode}: {values:?}");
    }
}

#[test]
fn lhs_decision_flips_once_along_p() {
    let m = two_mubs(3).unwrap();
    let is_lhs = |p: f64| lhs_membership(&assemblage(isotropic(3, p).unwrap().matrix(), &m).unwrap(), 1e-6).unwrap().is_lhs();
    let grid: Vec<bool> = (0..=20).map(|i| is_lhs(i as f64 / 20.0)).collect();
    let flips = grid.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(flips, 1, "{grid:?}");
    assert!(grid[0] && !grid[20]);
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if is_lhs(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // the steering inequality can only detect steering above the true boundary
    let threshold = qsteer::protocol::critical_p(3).unwrap();
    assert!(hi <= threshold + 1e-6, "boundary {hi} above the inequality threshold {threshold}");
    assert!(is_lhs(lo - 1e-3) && !is_lhs(hi + 1e-3));
}

#[test]
fn fourier_phases_wrap() {
    let f = mub_kets(3, MubSetting::Fourier).unwrap();
    let want = Complex64::from_polar(1.0 / 3f64.sqrt(), 2.0 * PI * 4.0 / 3.0);
    assert!((f[2].amplitudes()[2] - want).norm() < 1e-15);
}

#[test]
fn question_states_are_pure_and_reconstruct() {
    for d in 2..=4 {
        let q = question_states(d).unwrap();
        for k in 0..q.len() {
            let tau = q.tau(k);
            assert!((tau.trace().re - 1.0).abs() < 1e-12);
            assert!(tau.matmul(tau).unwrap().max_abs_diff(tau) < 1e-12, "d={d} k={k} not rank one");
        }
        assert!(q.reconstruction_residual() < 1e-12, "d={d}");
    }
}
