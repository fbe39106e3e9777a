use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use proptest::prelude::*;
use qst_memory::chain::{BoundaryProvider, ChainSpec, PstClosedForm, SpectralPropagator};
use qst_memory::channel::{choi, first_use_map, gad_superoperator, pd_superoperator, second_use_map, GadParams};
use qst_memory::entanglement::{apply_local_map, concurrence, TwoQubitState};
use qst_memory::kernel::{self, enumerate_paths};
use qst_memory::oracle::{BlochAngles, Design, ManyBodyModel, Oracle};

fn chain() -> impl Strategy<Value = ChainSpec> {
    prop_oneof![
        (3usize..40).prop_map(|n| ChainSpec::pst(n).unwrap()),
        prop::collection::vec(0.2f64..2.0, 2..25).prop_map(|c| ChainSpec::custom(c).unwrap()),
    ]
}

fn small_chain() -> impl Strategy<Value = ChainSpec> {
    prop_oneof![
        (3usize..7).prop_map(|n| ChainSpec::pst(n).unwrap()),
        prop::collection::vec(0.2f64..2.0, 2..6).prop_map(|c| ChainSpec::custom(c).unwrap()),
    ]
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn propagator_is_unitary(spec in chain(), t in -20.0f64..20.0) {
        let u = SpectralPropagator::for_chain(&spec).unwrap().unitary(t);
        let id = DMatrix::<Complex64>::identity(u.nrows(), u.ncols());
        prop_assert!(max_abs(&(u.adjoint() * &u - id)) < 1e-10);
    }

    #[test]
    fn mirror_symmetric_chains_have_equal_edge_returns(n in 3usize..60, t in 0.0f64..10.0) {
        let b = PstClosedForm::new(n).unwrap().boundary(t);
        prop_assert!((b.f11 - b.fnn).norm() < 1e-12);
        prop_assert!((b.f1n - b.fn1).norm() < 1e-12);
    }

    #[test]
    fn fidelity_lies_between_half_and_one(
        spec in chain(),
        times in prop::collection::vec(0.0f64..4.0, 1..6),
    ) {
        let prop = SpectralPropagator::for_chain(&spec).unwrap();
        let f = kernel::nth_use_fidelity(&times, &prop).unwrap();
        prop_assert!((0.5 - 1e-12..=1.0 + 1e-12).contains(&f), "{}", f);
    }

    #[test]
    fn memory_decays_at_equal_times(n in 3usize..200, t in 0.0f64..3.2) {
        let p = PstClosedForm::new(n).unwrap();
        let mut previous = 1.0;
        for steps in 1..=5 {
            let a = kernel::memory_factor(&vec![t; steps], &p).unwrap().value();
            prop_assert!(a >= -1e-12 && a <= previous + 1e-12, "steps {}: {} after {}", steps, a, previous);
            previous = a;
        }
    }

    #[test]
    fn motzkin_paths_stay_nonnegative_and_close(steps in 0usize..10) {
        for p in enumerate_paths(steps) {
            let l = p.levels();
            prop_assert_eq!(l.len(), steps + 1);
            prop_assert_eq!(l[0], 0);
            prop_assert_eq!(*l.last().unwrap(), 0);
            for w in l.windows(2) {
                prop_assert!((w[0] as i64 - w[1] as i64).abs() <= 1);
            }
        }
    }

    #[test]
    fn haar_averaged_channels_are_sector_diagonal(
        spec in small_chain(),
        times in prop::collection::vec(0.0f64..3.0, 1..4),
    ) {
        let o = Oracle::new(&ManyBodyModel::xx(&spec).unwrap(), times.len() + 1).unwrap();
        let ch = o.haar_channel(&times).unwrap();
        prop_assert!(ch.is_sector_diagonal());
        prop_assert!((ch.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn fixed_senders_keep_states_physical(
        spec in small_chain(),
        senders in prop::collection::vec((0.0f64..std::f64::consts::PI, 0.0f64..6.3), 1..4),
        t in 0.0f64..3.0,
        anisotropy in -1.0f64..1.0,
    ) {
        let o = Oracle::new(&ManyBodyModel::xxz(&spec, anisotropy).unwrap(), senders.len() + 1).unwrap();
        let densities: Vec<_> = senders.iter().map(|&(a, b)| BlochAngles::new(a, b).density()).collect();
        let ch = o.channel_after(&vec![t; senders.len()], &densities).unwrap();
        prop_assert!((ch.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        prop_assert!(ch.hermiticity_defect() < 1e-10);
        prop_assert!(ch.min_eigenvalue().unwrap() > -1e-9);
    }

    #[test]
    fn designs_agree(spec in small_chain(), t0 in 0.0f64..3.0, t1 in 0.0f64..3.0) {
        let o = Oracle::new(&ManyBodyModel::xx(&spec).unwrap(), 2).unwrap();
        let ch = o.haar_channel(&[t0]).unwrap();
        let six = o.average_fidelity(&ch, t1, Design::PauliSix).unwrap();
        let sic = o.average_fidelity(&ch, t1, Design::Sic).unwrap();
        prop_assert!((six - sic).abs() < 1e-10);
    }

    #[test]
    fn analytic_maps_are_cptp(spec in chain(), t1 in 0.0f64..4.0, t2 in 0.0f64..4.0) {
        let prop = SpectralPropagator::for_chain(&spec).unwrap();
        for map in [first_use_map(t1, &prop).unwrap(), second_use_map(t1, t2, &prop).unwrap()] {
            prop_assert!(map.trace_defect() < 1e-12);
            prop_assert!(choi(&map).min_eigenvalue().unwrap() > -1e-9);
            let tr = choi(&map).output_partial_trace();
            prop_assert!((tr - nalgebra::Matrix2::identity()).iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn damping_factors_are_cptp(gamma in 0.0f64..=1.0, p in 0.0f64..=1.0, a1 in 0.0f64..=1.0) {
        let map = gad_superoperator(&GadParams::new(gamma, p).unwrap())
            .compose(&pd_superoperator(a1).unwrap());
        prop_assert!(map.trace_defect() < 1e-12);
        prop_assert!(choi(&map).min_eigenvalue().unwrap() > -1e-12);
    }

    #[test]
    fn concurrence_is_bounded(entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16)) {
        // rho = M M^dagger / Tr
        let m = Matrix4::from_iterator(entries.iter().map(|&(a, b)| Complex64::new(a, b)));
        let rho = m * m.adjoint();
        let rho = rho / rho.trace();
        let c = concurrence(&TwoQubitState::new(rho).unwrap()).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
    }

    #[test]
    fn local_channels_do_not_create_entanglement(spec in chain(), t in 0.0f64..4.0) {
        let prop = SpectralPropagator::for_chain(&spec).unwrap();
        let out = apply_local_map(&TwoQubitState::bell(), &first_use_map(t, &prop).unwrap()).unwrap();
        prop_assert!(concurrence(&out).unwrap() <= 1.0 + 1e-12);
        prop_assert!(out.min_eigenvalue().unwrap() > -1e-12);
    }
}
