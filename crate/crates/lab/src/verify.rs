//! Seeded property suites behind AC-1 (spectral operators) and AC-8 (solvers).

use std::f64::consts::PI;
use std::time::Instant;

use ibwave_core::solvers::{
    ib_solve, ib_solve_with_velocity, linear_ib_frequency, linear_phase_speed, model_solve,
    stability_bound, Equation, ModelFamily, ModelKind, Scheme, StepControl,
};
use ibwave_core::spectral::{
    antiderivative, apply_helmholtz, apply_helmholtz_inverse, apply_lambda_s, commutator_bracket,
    l2_inner, linf_norm, sobolev_norm, spectral_derivative,
};
use ibwave_core::{Field, PeriodicGrid, PhysParams};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::checks::CheckOutcome;
use crate::config::{DataCase, ExperimentConfig, StudyKind};
use crate::error::Result;
use crate::report::records_csv;
use crate::study::run_study;

pub const LADDER: [f64; 4] = [0.05, 0.1, 0.2, 0.4];
pub const ENSEMBLE: usize = 100;
pub const AC1_BUDGET_SECS: f64 = 30.0;

/// Random real trigonometric polynomial with modes `1..=kmax`, amplitudes `~1/k`.
pub fn random_field(g: &PeriodicGrid, rng: &mut impl Rng, kmax: usize, with_mean: bool) -> Field {
    let l = g.half_length();
    let coeffs: Vec<(f64, f64)> = (0..=kmax)
        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    Field::from_fn(g, |x| {
        let mut v = if with_mean { coeffs[0].0 } else { 0.0 };
        for (k, &(a, b)) in coeffs.iter().enumerate().skip(1) {
            let xi = PI * k as f64 / l;
            v += (a * (xi * x).cos() + b * (xi * x).sin()) / k as f64;
        }
        v
    })
}

fn rel_diff(a: &Field, b: &Field) -> f64 {
    a.max_abs_diff(b).unwrap_or(f64::INFINITY) / linf_norm(b).max(f64::MIN_POSITIVE)
}

fn gaussian(g: &PeriodicGrid, a: f64, sigma: f64, c: f64) -> Field {
    Field::from_fn(g, |x| a * (-(x - c) * (x - c) / (sigma * sigma)).exp())
}

/// Modes `|k| <= TEST_BAND` carry the test functions of the commutator estimates.
pub const TEST_BAND: usize = 12;

/// Keep only modes `|k| <= band`.
fn project(f: &Field, band: usize) -> Field {
    let n = f.len();
    let mut spec = f.spectrum();
    for (i, c) in spec.iter_mut().enumerate() {
        if i.min(n - i) > band {
            *c *= 0.0;
        }
    }
    Field::from_spectrum(f.grid(), spec)
}

/// Constant, `cos(xi_k x)` and `sin(xi_k x)` for `1 <= k <= band`: orthogonal
/// in every `H^r`.
fn band_basis(g: &PeriodicGrid, band: usize) -> Vec<Field> {
    let l = g.half_length();
    let mut out = vec![Field::constant(g, 1.0)];
    for k in 1..=band {
        let xi = PI * k as f64 / l;
        out.push(Field::from_fn(g, |x| (xi * x).cos()));
        out.push(Field::from_fn(g, |x| (xi * x).sin()));
    }
    out
}

/// `sup_a |sum_j a_j col_j|_{L^2} / |a|`: largest singular value of the columns.
fn largest_singular_value(cols: &[Field]) -> Result<f64> {
    let n = cols.len();
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = l2_inner(&cols[i], &cols[j])?;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let top = gram
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(0.0, f64::max);
    Ok(top.max(0.0).sqrt())
}

/// Sharpest (est1) ratio for fixed `w` over band-limited `g`, `h`:
/// `sup <[L^s, w] g, L^s h> / (|g|_{s-1} |h|_s) / |w|_{s+1}`.
fn est1_constant(w: &Field, basis: &[Field], s: f64) -> Result<f64> {
    let cols = basis
        .iter()
        .map(|e| {
            Ok(&project(&commutator_bracket(w, e, s)?, TEST_BAND)
                * (1.0 / sobolev_norm(e, s - 1.0)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(largest_singular_value(&cols)? / sobolev_norm(w, s + 1.0)?)
}

/// Sharpest (est2) ratio for fixed `w` over band-limited `h`, `g`:
/// `sup <L [L^s, w] h, L^{s-1} g> / (|h|_s |g|_{s-1}) / |w|_{s+1}`.
fn est2_constant(w: &Field, basis: &[Field], s: f64) -> Result<f64> {
    let cols = basis
        .iter()
        .map(|e| {
            let x = apply_lambda_s(&commutator_bracket(w, e, s)?, 1.0)?;
            Ok(&project(&x, TEST_BAND) * (1.0 / sobolev_norm(e, s)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(largest_singular_value(&cols)? / sobolev_norm(w, s + 1.0)?)
}

type Estimate = fn(&Field, &[Field], f64) -> Result<f64>;

/// Max of an estimate over `ENSEMBLE` random band-limited `w`.
fn ensemble_max(
    grid: &PeriodicGrid,
    rng: &mut impl Rng,
    s: f64,
    estimate: Estimate,
) -> Result<f64> {
    let basis = band_basis(grid, TEST_BAND);
    let mut max = 0.0_f64;
    for _ in 0..ENSEMBLE {
        let w = random_field(grid, rng, TEST_BAND, true);
        max = max.max(estimate(&w, &basis, s)?);
    }
    Ok(max)
}

/// AC-1: spectral invariants, operator bounds and commutator ensembles.
pub fn spectral_suite(seed: u64) -> Result<CheckOutcome> {
    let start = Instant::now();
    let mut out = CheckOutcome::new("AC-1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // transforms and exact operators on a mid-size grid
    let g = PeriodicGrid::new(16.0, 512)?;
    let (mut rt, mut lam, mut helm, mut anti, mut mono) =
        (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, true);
    for _ in 0..20 {
        let f = random_field(&g, &mut rng, 150, true);
        rt = rt.max(rel_diff(&Field::from_spectrum(&g, f.spectrum()), &f));
        let s = rng.random_range(0.0..3.0);
        lam = lam.max(rel_diff(&apply_lambda_s(&apply_lambda_s(&f, s)?, -s)?, &f));
        let delta = rng.random_range(0.0..1.0);
        let q = apply_helmholtz_inverse(&f, delta, 1.25)?;
        helm = helm.max(rel_diff(&apply_helmholtz(&q, delta, 1.25)?, &f));
        let z = random_field(&g, &mut rng, 150, false);
        anti = anti.max(rel_diff(&antiderivative(&spectral_derivative(&z, 1)?)?, &z));
        let ds = rng.random_range(0.0..2.0);
        mono &= sobolev_norm(&f, s)? <= sobolev_norm(&f, s + ds)? * (1.0 + 1e-14);
    }
    out.metric("round_trip", rt);
    out.metric("lambda_inverse", lam);
    out.metric("helmholtz_inverse", helm);
    out.metric("antiderivative", anti);
    out.require(rt <= 1e-12, format!("round trip {rt:.1e}"));
    out.require(
        lam <= 1e-10 && helm <= 1e-10,
        format!("Lambda^s and Q inverses {:.1e}", lam.max(helm)),
    );
    out.require(
        anti <= 1e-10,
        format!("antiderivative of derivative {anti:.1e}"),
    );
    out.require(mono, "Sobolev norm monotone in s");

    // closed forms
    let gp = PeriodicGrid::new(PI, 64)?;
    let cos = Field::from_fn(&gp, f64::cos);
    let sin = Field::from_fn(&gp, f64::sin);
    let d1 = rel_diff(&spectral_derivative(&sin, 1)?, &cos);
    let d2 = rel_diff(&spectral_derivative(&sin, 2)?, &(-&sin));
    let ad = rel_diff(&antiderivative(&cos)?, &sin);
    out.require(
        d1.max(d2).max(ad) <= 1e-12,
        format!("trigonometric closed forms {:.1e}", d1.max(d2).max(ad)),
    );
    out.require(
        antiderivative(&Field::constant(&gp, 1.0)).is_err(),
        "constant field has no periodic antiderivative",
    );

    // operator bounds: per symbol on the benchmark grid, then on random fields
    let gb = PeriodicGrid::new(64.0, 2048)?;
    let mut symbol_ok = true;
    let mut worst_dq = 0.0_f64;
    for delta in LADDER {
        for &xi in gb.wavenumbers() {
            let q = 1.0 / (1.0 + 1.25 * delta * delta * xi * xi);
            let dq = delta * delta * xi * xi * q;
            symbol_ok &= q <= 1.0 && dq <= 0.8;
            worst_dq = worst_dq.max(dq);
        }
    }
    out.metric("delta2_q_d2_symbol_max", worst_dq);
    out.require(
        symbol_ok,
        format!("symbol bounds |Q| <= 1, |delta^2 Q D^2| = {worst_dq:.4} <= 4/5"),
    );
    let mut field_ok = true;
    for delta in LADDER {
        for _ in 0..50 {
            let f = random_field(&g, &mut rng, 200, true);
            let s = rng.random_range(0.0..3.0);
            let nf = sobolev_norm(&f, s)?;
            let qf = apply_helmholtz_inverse(&f, delta, 1.25)?;
            let dq = &spectral_derivative(&qf, 2)? * (delta * delta);
            field_ok &= sobolev_norm(&qf, s)? <= nf * (1.0 + 1e-12);
            field_ok &= sobolev_norm(&dq, s)? <= 0.8 * nf * (1.0 + 1e-12);
        }
    }
    out.require(field_ok, "Q bounds on 50 random fields per delta");

    // commutator
    let gc = PeriodicGrid::new(2.0 * PI, 128)?;
    let h = random_field(&gc, &mut rng, 20, true);
    let w = random_field(&gc, &mut rng, 20, true);
    let trivial = linf_norm(&commutator_bracket(&Field::constant(&gc, 2.5), &h, 2.0)?)
        .max(linf_norm(&commutator_bracket(&w, &h, 0.0)?));
    out.require(
        trivial <= 1e-12,
        format!("commutator trivial cases {trivial:.1e}"),
    );
    for s in [1.0, 2.0, 3.0] {
        for (name, ratio) in [("est1", est1_constant as Estimate), ("est2", est2_constant)] {
            let calibrated = ensemble_max(&gc, &mut rng, s, ratio)?;
            let fresh = ensemble_max(&gc, &mut rng, s, ratio)?;
            out.metric(format!("{name}_s{s}_calibrated"), calibrated);
            out.metric(format!("{name}_s{s}_fresh"), fresh);
            out.require(
                calibrated.is_finite() && calibrated > 0.0 && fresh <= 2.0 * calibrated,
                format!("{name} s={s}: fresh {fresh:.3} vs calibrated {calibrated:.3}"),
            );
        }
    }

    let secs = start.elapsed().as_secs_f64();
    out.metric("runtime_secs", secs);
    out.require(
        secs < AC1_BUDGET_SECS,
        format!("runtime {secs:.1} s (< 30 s)"),
    );
    Ok(out)
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// Least-squares slope of `log2 err` against `log2 dt` on a halving ladder.
fn order_slope(errors: &[f64]) -> f64 {
    let points: Vec<(f64, f64)> = errors
        .iter()
        .enumerate()
        .map(|(i, &e)| (0.5f64.powi(i as i32), e))
        .collect();
    crate::fit::fit_loglog_slope(&points).map_or(f64::NAN, |f| f.slope)
}

/// Worst relative phase-speed error over the seven linear dispersion relations.
pub fn dispersion_error() -> Result<f64> {
    let g = PeriodicGrid::new(PI, 64)?;
    let (delta, t_end) = (0.1, 5.0);
    let p = PhysParams::new(1e-8, delta, 2.0)?;
    let mut worst = 0.0_f64;
    for m in [1usize, 2, 4] {
        let k = m as f64;
        let w0 = Field::from_fn(&g, |x| 1e-3 * (k * x).cos());
        let phase = |f: &Field| f.spectrum()[m].arg();
        for family in ModelFamily::all() {
            let ctrl =
                StepControl::default_for(Equation::Model(family.kind), &g, &p, t_end, usize::MAX)?;
            let end = model_solve(&w0, p, family, &ctrl)?
                .pop()
                .expect("final state");
            let c = linear_phase_speed(family, delta, k);
            let dphi = wrap(phase(&end.w) - phase(&w0) + k * c * t_end);
            worst = worst.max(dphi.abs() / (k * t_end * c.abs()));
        }
        let omega = linear_ib_frequency(delta, k);
        let u1 = Field::from_fn(&g, |x| 1e-3 * omega * (k * x).sin());
        let ctrl = StepControl::default_for(Equation::Ib, &g, &p, t_end, usize::MAX)?;
        let end = ib_solve_with_velocity(&w0, &u1, p, &ctrl)?
            .pop()
            .expect("final state");
        let dphi = wrap(phase(&end.u) - phase(&w0) + omega * t_end);
        worst = worst.max(dphi.abs() / (omega * t_end));
    }
    Ok(worst)
}

/// Temporal order of each stepper: `(name, slope)`.
pub fn step_orders() -> Result<Vec<(String, f64)>> {
    let g = PeriodicGrid::new(16.0, 128)?;
    let p = PhysParams::new(0.3, 0.5, 2.0)?;
    let t_end = 2.0;
    let w0 = gaussian(&g, 1.0, 2.0, 0.0);
    let mut out = Vec::new();
    for kind in ModelKind::ALL {
        let family = ModelFamily::right(kind);
        let eq = Equation::Model(kind);
        let scheme = kind.default_scheme();
        let bound = stability_bound(eq, scheme, &g, &p)?;
        let solve = |dt: f64| -> Result<Field> {
            let ctrl = StepControl::new(eq, &g, &p, dt, scheme, t_end, usize::MAX)?;
            Ok(model_solve(&w0, p, family, &ctrl)?
                .pop()
                .expect("final state")
                .w)
        };
        let reference = solve(bound / 64.0)?;
        let errs = (0..4)
            .map(|i| Ok(solve(bound / 2f64.powi(i))?.max_abs_diff(&reference)?))
            .collect::<Result<Vec<f64>>>()?;
        out.push((
            format!("{kind}_{scheme:?}").to_lowercase(),
            order_slope(&errs),
        ));
    }
    let v0 = gaussian(&g, 0.5, 3.0, 0.0);
    let bound = stability_bound(Equation::Ib, Scheme::Rk4, &g, &p)?;
    let solve = |dt: f64| -> Result<Field> {
        let ctrl = StepControl::new(Equation::Ib, &g, &p, dt, Scheme::Rk4, t_end, usize::MAX)?;
        Ok(ib_solve(&w0, &v0, p, &ctrl)?.pop().expect("final state").u)
    };
    let reference = solve(bound / 64.0)?;
    let errs = (0..4)
        .map(|i| Ok(solve(bound / 2f64.powi(i))?.max_abs_diff(&reference)?))
        .collect::<Result<Vec<f64>>>()?;
    out.push(("ib_rk4".into(), order_slope(&errs)));
    Ok(out)
}

/// Largest drift of the mean over every solver, and largest mirror mismatch
/// between the right and left families.
pub fn mass_and_parity() -> Result<(f64, f64)> {
    let g = PeriodicGrid::new(32.0, 512)?;
    let p = PhysParams::new(0.04, 0.2, 2.0)?;
    let w0 = &gaussian(&g, 1.0, 3.0, -4.0) + &gaussian(&g, -0.4, 2.0, 3.0);
    let m0 = w0.mean();
    let (mut mass, mut parity) = (0.0_f64, 0.0_f64);
    for kind in ModelKind::ALL {
        let ctrl = StepControl::default_for(Equation::Model(kind), &g, &p, 5.0, 50)?;
        let right = model_solve(&w0, p, ModelFamily::right(kind), &ctrl)?;
        let left = model_solve(&w0.reflect(), p, ModelFamily::left(kind), &ctrl)?;
        for (a, b) in right.iter().zip(&left) {
            mass = mass
                .max((a.w.mean() - m0).abs())
                .max((b.w.mean() - m0).abs());
            parity = parity.max(a.w.reflect().max_abs_diff(&b.w)?);
        }
    }
    let v0 = gaussian(&g, 0.5, 4.0, 0.0);
    let ctrl = StepControl::default_for(Equation::Ib, &g, &p, 5.0, 50)?;
    for s in ib_solve(&w0, &v0, p, &ctrl)? {
        mass = mass.max((s.u.mean() - m0).abs()).max(s.p.mean().abs());
    }
    Ok((mass, parity))
}

/// Small decoupling study used for the determinism check.
pub fn determinism_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::benchmark(StudyKind::Decouple);
    cfg.grid.half_length = 32.0;
    cfg.grid.n_points = 256;
    cfg.sweep.deltas = vec![0.2, 0.4];
    cfg.study.cases = vec![DataCase::General, DataCase::Prepared];
    cfg.time.t_end = 1.0;
    cfg.time.snapshot_interval = 0.25;
    cfg
}

/// AC-8: step order, dispersion, mass, parity and byte-identical CSV.
pub fn solver_suite() -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("AC-8");
    for (name, slope) in step_orders()? {
        out.metric(format!("order_{name}"), slope);
        out.require(
            (slope - 4.0).abs() <= 0.3,
            format!("{name} order {slope:.2}"),
        );
    }
    let disp = dispersion_error()?;
    out.metric("phase_speed_rel_error", disp);
    out.require(
        disp < 1e-5,
        format!("phase speeds of 7 equations {disp:.1e} (< 1e-5)"),
    );
    let (mass, parity) = mass_and_parity()?;
    out.metric("mass_drift", mass);
    out.metric("parity_mismatch", parity);
    out.require(mass < 1e-10, format!("mass drift {mass:.1e} (< 1e-10)"));
    out.require(
        parity < 1e-9,
        format!("mirror parity {parity:.1e} (< 1e-9)"),
    );
    let cfg = determinism_config();
    let a = records_csv(&run_study(&cfg, 1)?)?;
    let b = records_csv(&run_study(&cfg, 2)?)?;
    out.metric("csv_bytes", a.len() as f64);
    out.require(
        !a.is_empty() && a == b,
        "byte-identical CSV across repeated runs and worker counts",
    );
    Ok(out)
}

/// AC-1 and AC-8.
pub fn verify_suite(seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![spectral_suite(seed)?, solver_suite()?])
}
