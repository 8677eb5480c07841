use std::f64::consts::{FRAC_PI_4, LN_2};

use ergotransport::bounds::{binary_entropy, envelope, inv_binary_entropy_upper, qmp_two_qubit, QmpSpectra};
use ergotransport::cycles::{
    closed_form_gain, extracted_ergotropy, initial_correlated_state, injected_ergotropy, run_cycles, CycleConfig,
};
use ergotransport::ensemble::{
    convex_hull, min_area_rectangle, run_ensemble, sample_transport, EnsembleConfig, StateClass,
};
use ergotransport::ergotropy::{ergotropy, ergotropy_gain, gibbs_state, total_hamiltonian, Hamiltonian};
use ergotransport::qmat::{conjugate_by, hermitian_eig, partial_trace, permutation_matrix, tensor, Subsystem};
use ergotransport::sampling::{
    energy_conserving_unitary, gap_matched_pair, ginibre, gue_hamiltonian, haar_unitary, hdu_separable, hs_state,
    pfhs_separable, DrawKind, RngStream, DEFAULT_GAP_MATCH_ATTEMPTS,
};
use ergotransport::states::{
    mutual_information, mutual_information_change, von_neumann_entropy, BipartiteState, DensityMatrix,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn stream(seed: u64) -> RngStream {
    RngStream::new(seed, 0)
}

fn random_bipartite(seed: u64, d_b: usize, d_c: usize) -> BipartiteState {
    let rho = hs_state(d_b * d_c, &mut stream(seed).rng(DrawKind::State)).unwrap();
    BipartiteState::new(d_b, d_c, rho).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_of_tensor(seed in any::<u64>(), d_b in 2usize..=4, d_c in 2usize..=4) {
        let mut rng = stream(seed).rng(DrawKind::State);
        let a = ginibre(d_b, &mut rng).unwrap();
        let b = ginibre(d_c, &mut rng).unwrap();
        let reduced = partial_trace(&tensor(&a, &b), d_b, d_c, Subsystem::B).unwrap();
        let expected = a.scale_c(b.trace());
        prop_assert!((&reduced - &expected).max_abs() <= 1e-12);
    }

    #[test]
    fn eigenvalues_are_permutation_stable(seed in any::<u64>(), d in 2usize..=6) {
        let mut rng = stream(seed).rng(DrawKind::Hamiltonian);
        let h = gue_hamiltonian(d, &mut rng).unwrap();
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(&mut rng);
        let p = permutation_matrix(&perm);
        let permuted = &(&p * h.matrix()) * &p.adjoint();
        let e = hermitian_eig(&permuted).unwrap();
        prop_assert!(close(&e.values, h.energies(), 1e-11));
    }

    #[test]
    fn entropy_is_unitarily_invariant(seed in any::<u64>(), d in 2usize..=6) {
        let s = stream(seed);
        let rho = hs_state(d, &mut s.rng(DrawKind::State)).unwrap();
        let u = haar_unitary(d, &mut s.rng(DrawKind::Unitary)).unwrap();
        let moved = DensityMatrix::validate(&conjugate_by(&u, rho.matrix()).unwrap()).unwrap();
        prop_assert!((von_neumann_entropy(&rho) - von_neumann_entropy(&moved)).abs() <= 1e-10);
    }

    #[test]
    fn mutual_information_is_subadditive(seed in any::<u64>(), d_b in 2usize..=3, d_c in 2usize..=3) {
        prop_assert!(mutual_information(&random_bipartite(seed, d_b, d_c)) >= -1e-9);
    }

    #[test]
    fn mutual_information_change_matches_evolution(seed in any::<u64>(), d_b in 2usize..=3, d_c in 2usize..=3) {
        let s = stream(seed);
        let pair = gap_matched_pair(d_b, d_c, 0.2, &mut s.rng(DrawKind::Hamiltonian), DEFAULT_GAP_MATCH_ATTEMPTS).unwrap();
        let u = energy_conserving_unitary(&pair, &mut s.rng(DrawKind::Unitary)).unwrap();
        let state = random_bipartite(seed, d_b, d_c);
        let after = state.evolve(u.matrix()).unwrap();
        let direct = mutual_information(&after) - mutual_information(&state);
        prop_assert!((mutual_information_change(&state, &u).unwrap() - direct).abs() <= 1e-10);
    }

    #[test]
    fn ergotropy_is_nonnegative_and_covariant(seed in any::<u64>(), d in 2usize..=5) {
        let s = stream(seed);
        let rho = hs_state(d, &mut s.rng(DrawKind::State)).unwrap();
        let h = gue_hamiltonian(d, &mut s.rng(DrawKind::Hamiltonian)).unwrap();
        let e = ergotropy(&rho, &h).unwrap();
        prop_assert!(e >= -1e-12);
        let u = haar_unitary(d, &mut s.rng(DrawKind::Unitary)).unwrap();
        let rho_u = DensityMatrix::validate(&conjugate_by(&u, rho.matrix()).unwrap()).unwrap();
        let h_u = Hamiltonian::from_matrix(&conjugate_by(&u, h.matrix()).unwrap()).unwrap();
        prop_assert!((ergotropy(&rho_u, &h_u).unwrap() - e).abs() <= 1e-10);
    }

    #[test]
    fn gibbs_states_are_passive(seed in any::<u64>(), d in 2usize..=5, beta in 0.01f64..10.0) {
        let h = gue_hamiltonian(d, &mut stream(seed).rng(DrawKind::Hamiltonian)).unwrap();
        prop_assert!(ergotropy(&gibbs_state(&h, beta).unwrap(), &h).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn energy_conserving_unitaries_preserve_global_quantities(
        seed in any::<u64>(), d_b in 2usize..=3, d_c in 2usize..=4,
    ) {
        let s = stream(seed);
        let pair = gap_matched_pair(d_b, d_c, 0.2, &mut s.rng(DrawKind::Hamiltonian), DEFAULT_GAP_MATCH_ATTEMPTS).unwrap();
        let u = energy_conserving_unitary(&pair, &mut s.rng(DrawKind::Unitary)).unwrap();
        prop_assert!(u.matrix().is_unitary(1e-10));
        let h = total_hamiltonian(&pair.h_b, &pair.h_c);
        let state = random_bipartite(seed, d_b, d_c);
        let after = state.evolve(u.matrix()).unwrap();
        prop_assert!(close(state.state().spectrum(), after.state().spectrum(), 1e-9));
        prop_assert!((ergotropy(state.state(), &h).unwrap() - ergotropy(after.state(), &h).unwrap()).abs() <= 1e-9);
        let e0 = state.state().expectation(h.matrix()).unwrap();
        let e1 = after.state().expectation(h.matrix()).unwrap();
        prop_assert!((e0 - e1).abs() <= 1e-9);
    }

    #[test]
    fn gain_equals_gap_decrease(seed in any::<u64>(), d_b in 2usize..=3, d_c in 2usize..=3, class in 0u8..4) {
        let class = match class {
            0 => StateClass::General,
            1 => StateClass::Product,
            2 => StateClass::SeparableHdu,
            _ => StateClass::SeparablePfhs,
        };
        let class = if class == StateClass::SeparablePfhs && d_b * d_c > 6 { StateClass::General } else { class };
        let cfg = EnsembleConfig::new(d_b, d_c, 1, class, seed);
        let x = sample_transport(&cfg, 0).unwrap();
        prop_assert!((x.gain_over_e - (x.gap_before - x.gap_after)).abs() <= 1e-9);
        prop_assert!(x.gap_before >= -1e-10 && x.gap_after >= -1e-10);
    }

    #[test]
    fn zero_gap_means_no_gain(seed in any::<u64>(), d_b in 2usize..=3, d_c in 2usize..=4, beta in 0.05f64..5.0) {
        let s = stream(seed);
        let pair = gap_matched_pair(d_b, d_c, 0.2, &mut s.rng(DrawKind::Hamiltonian), DEFAULT_GAP_MATCH_ATTEMPTS).unwrap();
        let state = BipartiteState::product(
            &gibbs_state(&pair.h_b, beta).unwrap(),
            &gibbs_state(&pair.h_c, beta).unwrap(),
        ).unwrap();
        let u = energy_conserving_unitary(&pair, &mut s.rng(DrawKind::Unitary)).unwrap();
        let out = ergotropy_gain(&state, &pair.h_b, &pair.h_c, &u).unwrap();
        prop_assert!(out.gap_before <= 1e-12);
        prop_assert!(out.gain <= 1e-9);
    }

    #[test]
    fn two_qubit_marginal_inequalities_hold(seed in any::<u64>()) {
        let spectra = QmpSpectra::from_state(&random_bipartite(seed, 2, 2)).unwrap();
        prop_assert!(qmp_two_qubit(&spectra).unwrap().passed());
    }

    #[test]
    fn separable_samplers_respect_propeller(seed in any::<u64>(), hdu in any::<bool>()) {
        let cfg = EnsembleConfig::new(
            2, 2, 1,
            if hdu { StateClass::SeparableHdu } else { StateClass::SeparablePfhs },
            seed,
        );
        let x = sample_transport(&cfg, 0).unwrap();
        prop_assert!(envelope(x.delta_mi).unwrap().contains(x.gain_over_e, 1e-9));
    }

    #[test]
    fn hull_and_rectangle_contain_points(seed in any::<u64>(), n in 3usize..200) {
        let mut rng = stream(seed).rng(DrawKind::State);
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let Ok(hull) = convex_hull(&pts) else { return Ok(()) };
        for k in 0..hull.len() {
            let (a, b) = (hull[k], hull[(k + 1) % hull.len()]);
            for p in &pts {
                let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
                prop_assert!(cross >= -1e-12);
            }
        }
        let rect = min_area_rectangle(&hull).unwrap();
        let (c, s) = (rect.angle.cos(), rect.angle.sin());
        let extent = |f: &dyn Fn(&(f64, f64)) -> f64| {
            let v: Vec<f64> = pts.iter().map(f).collect();
            v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        let e1 = extent(&|p| p.0 * c + p.1 * s);
        let e2 = extent(&|p| -p.0 * s + p.1 * c);
        prop_assert!((e1 * e2 - rect.area).abs() <= 1e-9);
        let bbox = extent(&|p| p.0) * extent(&|p| p.1);
        prop_assert!(rect.area <= bbox + 1e-12);
        prop_assert!(rect.width <= rect.length && rect.ratio <= 1.0);
    }

    #[test]
    fn cycles_match_closed_forms(kappa in 0.05f64..FRAC_PI_4, eps in 0.005f64..0.1) {
        let trace = run_cycles(&CycleConfig::new(kappa, eps, 30).unwrap()).unwrap();
        for r in &trace.records {
            prop_assert!((r.gap_after - (r.gap_before - r.gain)).abs() <= 1e-10);
            if !r.in_regime {
                continue;
            }
            prop_assert!((r.gain - closed_form_gain(r.iteration, kappa, eps).unwrap()).abs() <= 1e-11);
            prop_assert!((r.injected - injected_ergotropy(r.iteration, kappa, eps).unwrap()).abs() <= 1e-11);
            prop_assert!((r.extracted - extracted_ergotropy(r.iteration, kappa, eps).unwrap()).abs() <= 1e-11);
        }
    }
}

#[test]
fn inverse_binary_entropy_round_trip() {
    for k in 0..=1000 {
        let y = LN_2 * k as f64 / 1000.0;
        let x = inv_binary_entropy_upper(y).unwrap();
        assert!(x >= 0.5 - 1e-12);
        assert!((binary_entropy(x).unwrap() - y).abs() <= 1e-10, "y = {y}");
    }
}

#[test]
fn linear_bounds_enclose_curved_bounds() {
    let ln4 = 2.0 * LN_2;
    let (mut upper, mut lower) = (f64::INFINITY, f64::INFINITY);
    for k in 0..10_000 {
        let x = -ln4 + 2.0 * ln4 * k as f64 / 9_999.0;
        let env = envelope(x).unwrap();
        upper = upper.min(env.linear_upper - env.gamma_upper);
        lower = lower.min(env.gamma_lower - env.linear_lower);
    }
    assert!(upper >= -1e-9, "upper slack {upper}");
    assert!(lower >= -1e-9, "lower slack {lower}");
}

#[test]
fn ideal_channel_restores_initial_state() {
    let kappa = 0.3;
    let initial = initial_correlated_state(kappa).unwrap();
    let trace = run_cycles(&CycleConfig::new(kappa, 0.0, 10).unwrap()).unwrap();
    for r in &trace.records {
        assert!((r.state_after.matrix() - initial.matrix()).max_abs() <= 1e-12);
    }
}

#[test]
fn ensembles_do_not_depend_on_thread_count() {
    let mut cfg = EnsembleConfig::new(2, 3, 64, StateClass::General, 7);
    cfg.threads = Some(1);
    let one = run_ensemble(&cfg).unwrap();
    cfg.threads = Some(4);
    assert_eq!(one, run_ensemble(&cfg).unwrap());
    assert!(one.iter().enumerate().all(|(i, s)| s.sample_index == i as u64));
}

#[test]
fn pfhs_and_hdu_are_ppt() {
    let s = stream(3);
    let mut rng = s.rng(DrawKind::State);
    for _ in 0..50 {
        let h = hdu_separable(2, 3, &mut rng).unwrap();
        assert!(ergotransport::states::is_ppt(&h, 1e-9));
        let (p, attempts) = pfhs_separable(2, 2, &mut rng, 100_000).unwrap();
        assert!(attempts >= 1 && ergotransport::states::is_ppt(&p, 1e-9));
    }
}
