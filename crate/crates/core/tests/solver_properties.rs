use std::f64::consts::PI;

use ibwave_core::solvers::snapshot::{
    load_ib_trajectory, load_model_trajectory, read_trajectory, write_ib_trajectory,
    write_model_trajectory,
};
use ibwave_core::solvers::{
    ib_solve, ib_solve_with_velocity, linear_ib_frequency, linear_phase_speed, model_solve,
    stability_bound, Equation, ModelFamily, ModelKind, Scheme, StepControl,
};
use ibwave_core::spectral::{l2_inner, spectral_derivative};
use ibwave_core::{Error, Field, PeriodicGrid, PhysParams};

fn gaussian(g: &PeriodicGrid, a: f64, sigma: f64, c: f64) -> Field {
    Field::from_fn(g, |x| a * (-(x - c) * (x - c) / (sigma * sigma)).exp())
}

/// Phase of the discrete Fourier coefficient at index `m`.
fn mode_phase(f: &Field, m: usize) -> f64 {
    f.spectrum()[m].arg()
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

fn model_ctrl(
    kind: ModelKind,
    g: &PeriodicGrid,
    p: &PhysParams,
    t: f64,
    stride: usize,
) -> StepControl {
    StepControl::default_for(Equation::Model(kind), g, p, t, stride).unwrap()
}

#[test]
fn single_mode_phase_speeds_match_dispersion_relations() {
    let g = PeriodicGrid::new(PI, 64).unwrap();
    let (delta, t_end) = (0.1, 5.0);
    let p = PhysParams::new(1e-8, delta, 2.0).unwrap();
    for m in [1usize, 2, 4] {
        let k = m as f64;
        let w0 = Field::from_fn(&g, |x| 1e-3 * (k * x).cos());
        for family in ModelFamily::all() {
            let ctrl = model_ctrl(family.kind, &g, &p, t_end, 1_000_000);
            let traj = model_solve(&w0, p, family, &ctrl).unwrap();
            let end = traj.last().unwrap();
            assert!((end.t - t_end).abs() < 1e-12);
            let c = linear_phase_speed(family, delta, k);
            // cos(k(x - c t)): coefficient phase rotates by -k c t
            let dphi = wrap(mode_phase(&end.w, m) - mode_phase(&w0, m) + k * c * t_end);
            let err = dphi.abs() / (k * t_end * c.abs());
            assert!(
                err < 1e-5,
                "{family} k={k}: relative phase-speed error {err:e}"
            );
        }
        // right-moving IB mode: u = cos(k x - omega t), u_t = omega sin(k x - omega t)
        let omega = linear_ib_frequency(delta, k);
        let u1 = Field::from_fn(&g, |x| 1e-3 * omega * (k * x).sin());
        let ctrl = StepControl::default_for(Equation::Ib, &g, &p, t_end, 1_000_000).unwrap();
        let traj = ib_solve_with_velocity(&w0, &u1, p, &ctrl).unwrap();
        let end = traj.last().unwrap();
        let dphi = wrap(mode_phase(&end.u, m) - mode_phase(&w0, m) + omega * t_end);
        let err = dphi.abs() / omega / t_end;
        assert!(err < 1e-5, "IB k={k}: relative phase-speed error {err:e}");
    }
}

#[test]
fn linear_mode_keeps_its_amplitude() {
    let g = PeriodicGrid::new(PI, 64).unwrap();
    let p = PhysParams::unchecked(0.0, 0.1, 2.0).unwrap();
    let w0 = Field::from_fn(&g, |x| x.sin());
    for family in ModelFamily::all() {
        let ctrl = model_ctrl(family.kind, &g, &p, 10.0, 40);
        for s in model_solve(&w0, p, family, &ctrl).unwrap() {
            let amp = s.w.spectrum()[1].norm() * 2.0 / 64.0;
            assert!(
                (amp - 1.0).abs() < 1e-8,
                "{family} t={}: amplitude {amp}",
                s.t
            );
        }
    }
}

#[test]
fn mass_is_conserved_by_every_solver() {
    let g = PeriodicGrid::new(32.0, 512).unwrap();
    let p = PhysParams::new(0.04, 0.2, 2.0).unwrap();
    let w0 = &gaussian(&g, 1.0, 3.0, -2.0) + &gaussian(&g, 0.3, 2.0, 5.0);
    let m0 = w0.mean();
    for family in ModelFamily::all() {
        let ctrl = model_ctrl(family.kind, &g, &p, 5.0, 20);
        for s in model_solve(&w0, p, family, &ctrl).unwrap() {
            assert!((s.w.mean() - m0).abs() < 1e-10, "{family}");
        }
    }
    let v0 = gaussian(&g, 0.5, 4.0, 0.0);
    let ctrl = StepControl::default_for(Equation::Ib, &g, &p, 5.0, 20).unwrap();
    for s in ib_solve(&w0, &v0, p, &ctrl).unwrap() {
        assert!((s.u.mean() - m0).abs() < 1e-10);
        assert!(s.p.mean().abs() < 1e-10);
    }
}

#[test]
fn left_family_is_the_mirror_image_of_the_right() {
    let g = PeriodicGrid::new(32.0, 512).unwrap();
    let p = PhysParams::new(0.04, 0.2, 2.0).unwrap();
    let w0 = &gaussian(&g, 1.0, 3.0, -4.0) + &gaussian(&g, -0.4, 2.0, 3.0);
    for kind in ModelKind::ALL {
        let ctrl = model_ctrl(kind, &g, &p, 5.0, 50);
        let right = model_solve(&w0, p, ModelFamily::right(kind), &ctrl).unwrap();
        let left = model_solve(&w0.reflect(), p, ModelFamily::left(kind), &ctrl).unwrap();
        assert_eq!(right.len(), left.len());
        for (a, b) in right.iter().zip(&left) {
            let d = a.w.reflect().max_abs_diff(&b.w).unwrap();
            assert!(d < 1e-9, "{kind} t={}: {d:e}", a.t);
        }
    }
}

fn order_slope(errors: &[f64]) -> f64 {
    // least squares of log2(err) against log2(dt) on a halving ladder
    let n = errors.len() as f64;
    let xs: Vec<f64> = (0..errors.len()).map(|i| -(i as f64)).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn dt_ladder(bound: f64) -> Vec<f64> {
    (0..4).map(|i| bound / 2f64.powi(i)).collect()
}

#[test]
fn time_steppers_converge_at_fourth_order() {
    let g = PeriodicGrid::new(16.0, 128).unwrap();
    let p = PhysParams::new(0.3, 0.5, 2.0).unwrap();
    let t_end = 2.0;
    let w0 = gaussian(&g, 1.0, 2.0, 0.0);
    for kind in ModelKind::ALL {
        let family = ModelFamily::right(kind);
        let eq = Equation::Model(kind);
        let scheme = kind.default_scheme();
        let bound = stability_bound(eq, scheme, &g, &p).unwrap();
        let solve = |dt: f64| {
            let ctrl = StepControl::new(eq, &g, &p, dt, scheme, t_end, 1_000_000).unwrap();
            model_solve(&w0, p, family, &ctrl).unwrap().pop().unwrap().w
        };
        let reference = solve(bound / 64.0);
        let errs: Vec<f64> = dt_ladder(bound)
            .into_iter()
            .map(|dt| solve(dt).max_abs_diff(&reference).unwrap())
            .collect();
        let slope = order_slope(&errs);
        assert!(
            (slope - 4.0).abs() < 0.3,
            "{kind}: slope {slope} from {errs:?}"
        );
    }
    let v0 = gaussian(&g, 0.5, 3.0, 0.0);
    let bound = stability_bound(Equation::Ib, Scheme::Rk4, &g, &p).unwrap();
    let solve = |dt: f64| {
        let ctrl =
            StepControl::new(Equation::Ib, &g, &p, dt, Scheme::Rk4, t_end, 1_000_000).unwrap();
        ib_solve(&w0, &v0, p, &ctrl).unwrap().pop().unwrap().u
    };
    let reference = solve(bound / 64.0);
    let errs: Vec<f64> = dt_ladder(bound)
        .into_iter()
        .map(|dt| solve(dt).max_abs_diff(&reference).unwrap())
        .collect();
    let slope = order_slope(&errs);
    assert!((slope - 4.0).abs() < 0.3, "IB: slope {slope} from {errs:?}");
}

#[test]
fn linear_ib_energy_is_conserved() {
    let g = PeriodicGrid::new(64.0, 1024).unwrap();
    let p = PhysParams::unchecked(0.0, 0.1, 2.0).unwrap();
    let u0 = gaussian(&g, 1.0, 4.0, 0.0);
    let v0 = gaussian(&g, 0.5, 6.0, 0.0);
    let ctrl = StepControl::default_for(Equation::Ib, &g, &p, 10.0, 40).unwrap();
    let energy = |u: &Field, ut: &Field| {
        let uxt = spectral_derivative(ut, 1).unwrap();
        let ux = spectral_derivative(u, 1).unwrap();
        0.5 * (l2_inner(ut, ut).unwrap()
            + 0.01 * l2_inner(&uxt, &uxt).unwrap()
            + l2_inner(&ux, &ux).unwrap())
    };
    let traj = ib_solve(&u0, &v0, p, &ctrl).unwrap();
    let e0 = energy(&traj[0].u, &traj[0].p);
    for s in &traj {
        let e = energy(&s.u, &s.p);
        assert!(((e - e0) / e0).abs() < 1e-8, "t={}: {e} vs {e0}", s.t);
    }
}

#[test]
fn blow_up_aborts_with_its_time() {
    let g = PeriodicGrid::new(8.0, 64).unwrap();
    // far outside the regime: a huge amplitude makes the quadratic term explode
    let p = PhysParams::unchecked(1.0, 0.5, 2.0).unwrap();
    let u0 = gaussian(&g, 200.0, 1.0, 0.0);
    let ctrl = StepControl::default_for(Equation::Ib, &g, &p, 20.0, 1).unwrap();
    match ib_solve(&u0, &Field::zeros(&g), p, &ctrl) {
        Err(Error::BlowUp { time, .. }) => assert!(time > 0.0 && time <= 20.0),
        other => panic!("expected blow-up, got {:?}", other.map(|t| t.len())),
    }
}

#[test]
fn snapshots_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let g = PeriodicGrid::new(16.0, 64).unwrap();
    let p = PhysParams::new(0.01, 0.1, 2.0).unwrap();
    let w0 = gaussian(&g, 1.0, 2.0, 0.0);
    let family = ModelFamily::left(ModelKind::Bbm);
    let ctrl = model_ctrl(ModelKind::Bbm, &g, &p, 1.0, 10);
    let traj = model_solve(&w0, p, family, &ctrl).unwrap();
    let stem = dir.path().join("bbm");
    let side = write_model_trajectory(&stem, &traj, &ctrl).unwrap();
    assert_eq!(side.records.len(), traj.len());
    let (back_side, back) = load_model_trajectory(&stem).unwrap();
    assert_eq!(back_side, side);
    assert_eq!(back.len(), traj.len());
    for (a, b) in traj.iter().zip(&back) {
        assert_eq!(a.w, b.w);
        assert_eq!(a.t, b.t);
        assert_eq!(b.family, family);
    }
    assert!(load_ib_trajectory(&stem).is_err());

    let ib_ctrl = StepControl::default_for(Equation::Ib, &g, &p, 1.0, 10).unwrap();
    let ib = ib_solve(&w0, &w0, p, &ib_ctrl).unwrap();
    let ib_stem = dir.path().join("ib");
    write_ib_trajectory(&ib_stem, &ib, &ib_ctrl).unwrap();
    let (_, back) = load_ib_trajectory(&ib_stem).unwrap();
    assert_eq!(back.last().unwrap().p, ib.last().unwrap().p);

    // flip one sample byte: the checksum must catch it
    let bin = ib_stem.with_extension("bin");
    let mut bytes = std::fs::read(&bin).unwrap();
    bytes[100] ^= 1;
    std::fs::write(&bin, bytes).unwrap();
    assert!(matches!(read_trajectory(&ib_stem), Err(Error::Format(_))));
}
