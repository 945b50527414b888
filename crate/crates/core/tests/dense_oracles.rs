//! Dense-matrix evaluations of the spectral operators, built from the
//! closed-form periodic differentiation matrices rather than from FFTs.

use std::f64::consts::PI;

use ibwave_core::analysis::initial_rho_t;
use ibwave_core::solvers::{ib_rhs, IBState};
use ibwave_core::spectral::{apply_helmholtz_inverse, dealias, spectral_derivative};
use ibwave_core::{Field, PeriodicGrid, PhysParams};
use nalgebra::{DMatrix, DVector};

const N: usize = 64;

/// First and second derivative matrices on `N` equispaced points of `[-L, L)`.
fn diff_matrices(l: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let h = 2.0 * PI / N as f64;
    let scale = PI / l;
    let mut d1 = DMatrix::zeros(N, N);
    let mut d2 = DMatrix::zeros(N, N);
    for i in 0..N {
        for j in 0..N {
            if i == j {
                d2[(i, j)] = (-PI * PI / (3.0 * h * h) - 1.0 / 6.0) * scale * scale;
                continue;
            }
            let m = i as i64 - j as i64;
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let half = m as f64 * h / 2.0;
            d1[(i, j)] = 0.5 * sign / half.tan() * scale;
            d2[(i, j)] = -0.5 * sign / (half.sin() * half.sin()) * scale * scale;
        }
    }
    (d1, d2)
}

/// 2/3-rule projector `P[i, j] = (1/N) sum_{3|k|<N} cos(2 pi k (i - j) / N)`.
fn dealias_matrix() -> DMatrix<f64> {
    let kmax = (N as i64 - 1) / 3;
    DMatrix::from_fn(N, N, |i, j| {
        let m = i as f64 - j as f64;
        (-kmax..=kmax)
            .map(|k| (2.0 * PI * k as f64 * m / N as f64).cos())
            .sum::<f64>()
            / N as f64
    })
}

fn vec_of(f: &Field) -> DVector<f64> {
    DVector::from_column_slice(f.values())
}

fn max_diff(a: &DVector<f64>, f: &Field) -> f64 {
    a.iter()
        .zip(f.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn helmholtz_solve(d2: &DMatrix<f64>, a: f64, rhs: &DVector<f64>) -> DVector<f64> {
    let m = DMatrix::identity(N, N) - d2 * a;
    m.lu().solve(rhs).expect("Helmholtz matrix is invertible")
}

#[test]
fn derivative_and_projector_matrices_match_fft() {
    let g = PeriodicGrid::new(6.0, N).unwrap();
    let (d1, d2) = diff_matrices(6.0);
    let f = Field::from_fn(&g, |x| {
        (-(x - 0.5) * (x - 0.5) / 2.0).exp() * (1.0 + 0.2 * x)
    });
    let v = vec_of(&f);
    assert!(max_diff(&(&d1 * &v), &spectral_derivative(&f, 1).unwrap()) < 1e-11);
    assert!(max_diff(&(&d2 * &v), &spectral_derivative(&f, 2).unwrap()) < 1e-10);
    let rough = Field::from_fn(&g, |x| (x * 7.0).sin().abs());
    assert!(max_diff(&(dealias_matrix() * vec_of(&rough)), &dealias(&rough)) < 1e-12);
}

#[test]
fn helmholtz_inverse_matches_dense_solve() {
    let g = PeriodicGrid::new(6.0, N).unwrap();
    let (_, d2) = diff_matrices(6.0);
    let f = Field::from_fn(&g, |x| (x / 2.0).cos() * (-x * x / 8.0).exp());
    for (delta, coeff) in [(0.1, 1.25), (0.4, 1.0), (1.0, 1.25)] {
        let dense = helmholtz_solve(&d2, coeff * delta * delta, &vec_of(&f));
        let fft = apply_helmholtz_inverse(&f, delta, coeff).unwrap();
        assert!(max_diff(&dense, &fft) < 1e-12, "delta {delta}");
    }
}

#[test]
fn ib_acceleration_matches_dense_operator() {
    // L = pi so sin(x) is a grid mode
    let g = PeriodicGrid::new(PI, N).unwrap();
    let (_, d2) = diff_matrices(PI);
    let p = dealias_matrix();
    let (eps, delta) = (0.1, 0.3);
    let u = Field::from_fn(&g, |x| x.sin());
    let uv = vec_of(&u);
    let sq = uv.map(|v| v * v);
    let inner = &uv + (&p * sq) * eps;
    let dense = helmholtz_solve(&d2, delta * delta, &(&d2 * inner));
    let state = IBState {
        u: u.clone(),
        p: Field::zeros(&g),
        t: 0.0,
        params: PhysParams::new(eps, delta, 2.0).unwrap(),
    };
    let (vel, acc) = ib_rhs(&state).unwrap();
    assert_eq!(vel, state.p);
    assert!(max_diff(&dense, &acc) < 1e-12);
    // sin^2 x = (1 - cos 2x) / 2
    let closed = Field::from_fn(&g, |x| {
        -x.sin() / (1.0 + delta * delta) + eps * 2.0 * (2.0 * x).cos() / (1.0 + 4.0 * delta * delta)
    });
    assert!(acc.max_abs_diff(&closed).unwrap() < 1e-12);
}

#[test]
fn initial_rho_t_matches_dense_evaluation() {
    let l = 8.0;
    let g = PeriodicGrid::new(l, N).unwrap();
    let (d1, d2) = diff_matrices(l);
    let (eps, delta) = (0.1, 0.1);
    let u0 = Field::from_fn(&g, |x| (-x * x / 4.0).exp());
    let v0 = Field::from_fn(&g, |x| 0.5 * (-(x - 1.0) * (x - 1.0) / 6.0).exp());
    let u = vec_of(&u0);
    let v = vec_of(&v0);
    let uv = u.component_mul(&v);
    let ux_vx = (&d1 * &u).component_mul(&(&d1 * &v));
    let bracket = (&d2 * &v) * (-0.5 * delta * delta)
        - &uv * (0.5 * eps)
        - (ux_vx - &d2 * &uv) * (0.375 * eps * delta * delta);
    let mut dense = helmholtz_solve(&d2, 1.25 * delta * delta, &bracket);
    let mean = dense.mean();
    dense.apply(|v| *v -= mean);
    let params = PhysParams::new(eps, delta, 2.0).unwrap();
    let got = initial_rho_t(&u0, &v0, &params).unwrap();
    assert!(max_diff(&dense, &got) < 1e-10);
}
