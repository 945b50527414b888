use ibwave_core::analysis::{
    defining_residual, energy, error_state, initial_rho_t, residual_model, residual_tilde,
    split_initial_data, uniform_bound_monitor, ErrorState,
};
use ibwave_core::solvers::{
    ib_solve, model_solve, Direction, Equation, ModelFamily, ModelKind, StepControl, WaveState,
};
use ibwave_core::spectral::{linf_norm, sobolev_norm, spectral_derivative};
use ibwave_core::{Error, Field, PeriodicGrid, PhysParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussian(g: &PeriodicGrid, a: f64, sigma: f64, c: f64) -> Field {
    Field::from_fn(g, |x| a * (-(x - c) * (x - c) / (sigma * sigma)).exp())
}

fn state(w: Field, params: PhysParams, family: ModelFamily) -> WaveState {
    WaveState {
        w,
        t: 0.0,
        params,
        family,
    }
}

#[test]
fn residual_two_route_identity_for_every_family() {
    let g = PeriodicGrid::new(64.0, 512).unwrap();
    let w = Field::from_fn(&g, |x| {
        (-x * x / 16.0).exp() * (1.0 + 0.3 * (x / 2.0).sin())
    });
    for (eps, delta) in [(0.01, 0.1), (0.16, 0.4), (0.2, 0.2)] {
        let p = PhysParams::new(eps, delta, 2.0).unwrap();
        for family in ModelFamily::all() {
            let s = state(w.clone(), p, family);
            let lhs = spectral_derivative(&residual_model(&s).unwrap(), 1).unwrap();
            let rhs = defining_residual(&s).unwrap();
            let rel = lhs.max_abs_diff(&rhs).unwrap() / linf_norm(&rhs);
            assert!(rel < 1e-8, "{family} eps={eps} delta={delta}: {rel:e}");
        }
    }
}

#[test]
fn zero_state_has_zero_residual() {
    let g = PeriodicGrid::new(8.0, 64).unwrap();
    let p = PhysParams::new(0.01, 0.1, 2.0).unwrap();
    for family in ModelFamily::all() {
        let f = residual_model(&state(Field::zeros(&g), p, family)).unwrap();
        assert_eq!(linf_norm(&f), 0.0);
    }
}

#[test]
fn residual_report_identities() {
    let g = PeriodicGrid::new(64.0, 512).unwrap();
    let p = PhysParams::new(0.01, 0.1, 2.0).unwrap();
    for kind in ModelKind::ALL {
        let wp = state(gaussian(&g, 0.6, 4.0, 0.0), p, ModelFamily::right(kind));
        let wm = state(gaussian(&g, 0.4, 5.0, 1.0), p, ModelFamily::left(kind));
        let rep = residual_tilde(&wp, &wm).unwrap();
        let sum = &(&rep.f_plus + &rep.f_minus) - &rep.interaction;
        assert!(sum.max_abs_diff(&rep.f_tilde).unwrap() < 1e-12);
        let expected = &spectral_derivative(&(&wp.w * &wm.w), 1).unwrap() * (2.0 * p.epsilon);
        assert!(rep.interaction.max_abs_diff(&expected).unwrap() < 1e-14);

        // no left wave: F~ = F+
        let zero = state(Field::zeros(&g), p, ModelFamily::left(kind));
        let rep = residual_tilde(&wp, &zero).unwrap();
        assert_eq!(linf_norm(&rep.interaction), 0.0);
        assert_eq!(rep.f_tilde, rep.f_plus);

        // numerically disjoint supports
        let a = state(gaussian(&g, 1.0, 4.0, -32.0), p, ModelFamily::right(kind));
        let b = state(gaussian(&g, 1.0, 4.0, 32.0), p, ModelFamily::left(kind));
        let rep = residual_tilde(&a, &b).unwrap();
        assert!(sobolev_norm(&rep.interaction, 2.0).unwrap() < 1e-10 * p.epsilon);

        // wrong direction is refused
        assert!(matches!(
            residual_tilde(&wm, &wp),
            Err(Error::FamilyMismatch { .. })
        ));
    }
}

#[test]
fn split_examples_and_exact_resum() {
    let g = PeriodicGrid::new(8.0, 64).unwrap();
    let u = gaussian(&g, 1.0, 1.0, 0.0);
    let (p, m) = split_initial_data(&u, &(&u * 0.5)).unwrap();
    assert!(p.max_abs_diff(&(&u * 0.25)).unwrap() < 1e-16);
    assert!(m.max_abs_diff(&(&u * 0.75)).unwrap() < 1e-16);
    let other = PeriodicGrid::new(4.0, 64).unwrap();
    assert!(split_initial_data(&u, &Field::zeros(&other)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn split_resums_bit_for_bit(values in proptest::collection::vec((-1e3f64..1e3, -1.0f64..1.0), 8)) {
        let g = PeriodicGrid::new(1.0, 8).unwrap();
        // |v0| <= |u0| pointwise
        let u = Field::new(&g, values.iter().map(|v| v.0).collect()).unwrap();
        let v = Field::new(&g, values.iter().map(|v| v.0 * v.1).collect()).unwrap();
        let (p, m) = split_initial_data(&u, &v).unwrap();
        prop_assert_eq!(&(&p + &m), &u);
    }

    #[test]
    fn split_resum_is_within_an_ulp(values in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 8)) {
        let g = PeriodicGrid::new(1.0, 8).unwrap();
        let u = Field::new(&g, values.iter().map(|v| v.0).collect()).unwrap();
        let v = Field::new(&g, values.iter().map(|v| v.1).collect()).unwrap();
        let (p, m) = split_initial_data(&u, &v).unwrap();
        let sum = &p + &m;
        for j in 0..8 {
            let big = p.values()[j].abs().max(m.values()[j].abs());
            prop_assert!((sum.values()[j] - u.values()[j]).abs() <= f64::EPSILON * big);
        }
    }
}

#[test]
fn initial_rho_t_single_mode_closed_form() {
    let g = PeriodicGrid::new(std::f64::consts::PI, 64).unwrap();
    let delta: f64 = 0.3;
    let p = PhysParams::unchecked(0.0, delta, 2.0).unwrap();
    let v0 = Field::from_fn(&g, |x| x.sin());
    let got = initial_rho_t(&Field::zeros(&g), &v0, &p).unwrap();
    let expected = &v0 * (0.5 * delta * delta / (1.0 + 1.25 * delta * delta));
    assert!(got.max_abs_diff(&expected).unwrap() < 1e-15);
    let zero = initial_rho_t(&Field::zeros(&g), &Field::zeros(&g), &p).unwrap();
    assert_eq!(linf_norm(&zero), 0.0);
}

/// Error state at `t = 0` assembled from split data and the CH right-hand sides.
fn initial_error_state(u0: &Field, v0: &Field, p: PhysParams) -> ErrorState {
    let g = u0.grid();
    let ctrl = StepControl::default_for(Equation::Ib, g, &p, 0.1, 1).unwrap();
    let ib = ib_solve(u0, v0, p, &ctrl).unwrap().remove(0);
    let (wp, wm) = split_initial_data(u0, v0).unwrap();
    let wp = state(wp, p, ModelFamily::right(ModelKind::Ch));
    let wm = state(wm, p, ModelFamily::new(ModelKind::Ch, Direction::Left));
    error_state(&ib, &wp, &wm).unwrap()
}

#[test]
fn initial_rho_t_agrees_with_solver_derived_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let g = PeriodicGrid::new(64.0, 1024).unwrap();
    for _ in 0..20 {
        let delta = rng.random_range(0.05..0.5);
        let eps = rng.random_range(0.01..1.0) * delta;
        let p = PhysParams::new(eps, delta, 2.0).unwrap();
        let u0 = gaussian(
            &g,
            rng.random_range(0.2..1.5),
            rng.random_range(2.0..6.0),
            rng.random_range(-5.0..5.0),
        );
        let v0 = gaussian(
            &g,
            rng.random_range(-1.0..1.0),
            rng.random_range(2.0..6.0),
            rng.random_range(-5.0..5.0),
        );
        let es = initial_error_state(&u0, &v0, p);
        // exact except in the far tails, where |v0| >> |u0| forces an ulp of |v0|
        assert!(linf_norm(&es.r) <= f64::EPSILON * linf_norm(&v0));
        let formula = initial_rho_t(&u0, &v0, &p).unwrap();
        let d = es.rho_t.max_abs_diff(&formula).unwrap();
        assert!(d < 1e-9, "eps={eps} delta={delta}: {d:e}");
    }
}

#[test]
fn error_state_rejects_mismatched_inputs() {
    let g = PeriodicGrid::new(16.0, 128).unwrap();
    let p = PhysParams::new(0.01, 0.1, 2.0).unwrap();
    let u0 = gaussian(&g, 1.0, 2.0, 0.0);
    let ctrl = StepControl::default_for(Equation::Ib, &g, &p, 1.0, 1000).unwrap();
    let ib = ib_solve(&u0, &Field::zeros(&g), p, &ctrl).unwrap();
    let wp = state(&u0 * 0.5, p, ModelFamily::right(ModelKind::Ch));
    let wm = state(&u0 * 0.5, p, ModelFamily::left(ModelKind::Ch));
    assert!(matches!(
        error_state(&ib[1], &wp, &wm),
        Err(Error::TimeMismatch(..))
    ));
    let bad = state(&u0 * 0.5, p, ModelFamily::left(ModelKind::Bbm));
    assert!(error_state(&ib[0], &wp, &bad).is_err());
    // a mass defect leaves r without a periodic antiderivative
    let shifted = state(
        &(&u0 * 0.5) + &Field::constant(&g, 1e-3),
        p,
        ModelFamily::right(ModelKind::Ch),
    );
    assert!(matches!(
        error_state(&ib[0], &shifted, &wm),
        Err(Error::NonzeroMean { .. })
    ));
}

#[test]
fn exact_decomposition_gives_zero_error() {
    let g = PeriodicGrid::new(16.0, 128).unwrap();
    let p = PhysParams::new(0.01, 0.1, 2.0).unwrap();
    let u0 = gaussian(&g, 1.0, 2.0, 0.0);
    let es = initial_error_state(&u0, &Field::zeros(&g), p);
    assert_eq!(linf_norm(&es.r), 0.0);
    let e = energy(&ErrorState::zero(&u0, 0.0, p), &u0).unwrap();
    assert_eq!(e.e_s, 0.0);
}

#[test]
fn energy_without_nonlinearity_is_the_quadratic_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = PeriodicGrid::new(16.0, 128).unwrap();
    let p = PhysParams::unchecked(0.0, 0.3, 2.0).unwrap();
    let f = |rng: &mut ChaCha8Rng| {
        gaussian(
            &g,
            rng.random_range(-1.0..1.0),
            2.0,
            rng.random_range(-3.0..3.0),
        )
    };
    let rho = &f(&mut rng) - &f(&mut rng).reflect();
    let rho_t = &f(&mut rng) - &f(&mut rng);
    let mean_free = |h: Field| {
        let m = h.mean();
        h.map(|v| v - m)
    };
    let rho = mean_free(rho);
    let rho_t = mean_free(rho_t);
    let es = ErrorState {
        r: spectral_derivative(&rho, 1).unwrap(),
        r_t: spectral_derivative(&rho_t, 1).unwrap(),
        rho,
        rho_t,
        t: 0.0,
        params: p,
    };
    let n = |h: &Field| sobolev_norm(h, 2.0).unwrap().powi(2);
    let expected = 0.5 * (n(&es.rho_t) + 0.09 * n(&es.r_t) + n(&es.r));
    let e = energy(&es, &f(&mut rng)).unwrap();
    assert_eq!(e.epsilon_terms, 0.0);
    assert!((e.e_s * e.e_s - expected).abs() < 1e-12 * expected);
}

#[test]
fn energy_dominates_quarter_of_quadratic_form_in_regime() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let g = PeriodicGrid::new(32.0, 256).unwrap();
    for _ in 0..100 {
        let delta = rng.random_range(0.05..1.0);
        let eps = rng.random_range(0.0..0.05f64).min(delta).max(1e-6);
        let s = [1.0, 2.0, 3.0][rng.random_range(0..3)];
        let p = PhysParams::new(eps, delta, s).unwrap();
        let bump = |rng: &mut ChaCha8Rng| {
            gaussian(
                &g,
                rng.random_range(-1.0..1.0),
                rng.random_range(1.5..4.0),
                rng.random_range(-8.0..8.0),
            )
        };
        let rho = bump(&mut rng);
        let rho = rho.map(|v| v - rho.mean());
        let r = spectral_derivative(&rho, 1).unwrap();
        let scale = 1.0 / sobolev_norm(&r, s).unwrap().max(1.0) * rng.random_range(0.0..1.0);
        let rho = &rho * scale;
        let r = &r * scale;
        let rho_t = bump(&mut rng);
        let rho_t = rho_t.map(|v| v - rho_t.mean());
        let es = ErrorState {
            r_t: spectral_derivative(&rho_t, 1).unwrap(),
            r,
            rho,
            rho_t,
            t: 0.0,
            params: p,
        };
        let w_tilde = bump(&mut rng);
        let e = energy(&es, &w_tilde).unwrap();
        assert!(e.e_s * e.e_s >= 0.5 * e.quadratic_part, "{e:?}");
    }
}

#[test]
fn uniform_bound_monitor_examples() {
    let g = PeriodicGrid::new(16.0, 128).unwrap();
    let p = PhysParams::new(0.01, 0.1, 2.0).unwrap();
    let family = ModelFamily::right(ModelKind::Ch);
    let z: Vec<_> = (0..3).map(|_| state(Field::zeros(&g), p, family)).collect();
    assert_eq!(uniform_bound_monitor(&z, 1).unwrap(), 0.0);
    assert!(uniform_bound_monitor(&z, 0).is_err());
    let ctrl = StepControl::default_for(Equation::Model(ModelKind::Ch), &g, &p, 2.0, 20).unwrap();
    let traj = model_solve(&gaussian(&g, 1.0, 3.0, 0.0), p, family, &ctrl).unwrap();
    let b = uniform_bound_monitor(&traj, 1).unwrap();
    assert!(b.is_finite() && b > 0.0 && b < 1e3);
}

#[test]
fn unidirectional_data_keeps_left_wave_at_zero() {
    let g = PeriodicGrid::new(32.0, 256).unwrap();
    let p = PhysParams::new(0.04, 0.2, 2.0).unwrap();
    let u0 = gaussian(&g, 1.0, 4.0, 0.0);
    let (wp0, wm0) = split_initial_data(&u0, &-&u0).unwrap();
    assert_eq!(wp0, u0);
    for kind in ModelKind::ALL {
        let ctrl = StepControl::default_for(Equation::Model(kind), &g, &p, 2.0, 10).unwrap();
        let wm = model_solve(&wm0, p, ModelFamily::left(kind), &ctrl).unwrap();
        assert!(wm.iter().all(|s| linf_norm(&s.w) == 0.0));
        let wp = model_solve(&wp0, p, ModelFamily::right(kind), &ctrl).unwrap();
        let rep = residual_tilde(wp.last().unwrap(), wm.last().unwrap()).unwrap();
        assert_eq!(rep.f_tilde, rep.f_plus);
    }
}
