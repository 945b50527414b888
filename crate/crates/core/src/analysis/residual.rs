//! Residuals of the unidirectional models inside the IB equation.
//!
//! A model solution `w` leaves the defining residual
//!
//! ```text
//! f = w_tt - w_xx - delta^2 w_xxtt - eps (w^2)_xx
//! ```
//!
//! and every family admits a closed form `F` with `D_x F = f`, obtained by
//! substituting the model equation for the time derivatives. Here `F` is
//! evaluated with every `D_t` expanded by the product rule, using the exact
//! `w_t` and `w_tt` of the model (never finite differences in time).
//!
//! Left-moving states use the right-moving formula with `t -> -t`: writing
//! `W_t = sigma w_t`, `W_tt = w_tt`, with `sigma = -1` for left waves.
//!
//! Expansion table (`A = w_x^2 + 2 w w_xx`, `B = 3 w_xxx + 5 W_xxt`):
//!
//! ```text
//! A_t = 2 w_x W_xt + 2 W_t w_xx + 2 w W_xxt
//!
//! CH:  F = eps^2 D(w^3/3)
//!        - eps^2 delta^2/8  (3 w A_x - 3 w (w^2)_xxx + 2 w_xx (w^2)_x + w_x (w^2)_xx)
//!        + delta^4/16       (5 D^3 W_tt - 12 D^4 W_t - 9 D^5 w)
//!        + eps delta^4/32   (3 D^2 A_t - 9 D^3 A + 2 (-3 w B_xx + 2 w_xx B + w_x B_x))
//!        + eps^2 delta^4/32 (-9 w A_xxx + 6 w_xx A_x + 3 w_x A_xx)
//!
//! BBM: F = eps^2 D(w^3/3)
//!        - eps delta^2/4 (6 w W_xxt + 2 w_x W_xt + W_t w_xx - 9 w_x w_xx)
//!        + delta^4/16 D^3 (5 W_tt - 12 W_xt - 9 w_xx)
//!
//! KdV: F = D ( eps^2 w^3/3 + eps delta^2/4 (-3 w_x^2 + 4 (W_t w_x + w W_xt))
//!            + delta^4/4 (-w_xxxx + 2 W_xxxt) )
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::PhysParams;
use crate::solvers::{
    model_second_time_derivative, model_time_derivative, Direction, ModelFamily, ModelKind,
    WaveState,
};
use crate::spectral::{sobolev_norm, Field};

fn d(f: &Field, order: u32) -> Field {
    let mut spec = f.spectrum();
    f.grid().differentiate_spectrum(&mut spec, order);
    Field::from_spectrum(f.grid(), spec)
}

fn mul(a: &Field, b: &Field) -> Field {
    a * b
}

/// Linear combination `sum c_i f_i` of fields on one grid.
fn combo(terms: &[(f64, &Field)]) -> Field {
    let (c0, f0) = terms[0];
    let mut out = f0 * c0;
    for &(c, f) in &terms[1..] {
        out = &out + &(f * c);
    }
    out
}

/// `w`, `W_t` and `W_tt` of a state in the right-moving time convention.
struct Jet {
    w: Field,
    wt: Field,
    wtt: Field,
}

fn jet(state: &WaveState) -> Result<Jet> {
    state.w.check_finite()?;
    let sigma = state.family.direction.sign();
    let wt = model_time_derivative(state)?;
    let wtt = model_second_time_derivative(state)?;
    Ok(Jet {
        w: state.w.clone(),
        wt: &wt * sigma,
        wtt,
    })
}

fn residual_ch(j: &Jet, p: &PhysParams) -> Field {
    let (eps, d2) = (p.epsilon, p.delta * p.delta);
    let d4 = d2 * d2;
    let w = &j.w;
    let wx = d(w, 1);
    let wxx = d(w, 2);
    let wxxx = d(w, 3);
    let wxt = d(&j.wt, 1);
    let wxxt = d(&j.wt, 2);
    let w2 = mul(w, w);
    let w3 = mul(&w2, w);
    let a = &mul(&wx, &wx) + &(&mul(w, &wxx) * 2.0);
    let a_t = combo(&[
        (2.0, &mul(&wx, &wxt)),
        (2.0, &mul(&j.wt, &wxx)),
        (2.0, &mul(w, &wxxt)),
    ]);
    let b = combo(&[(3.0, &wxxx), (5.0, &wxxt)]);
    let ax = d(&a, 1);
    let axx = d(&a, 2);
    let axxx = d(&a, 3);

    let cubic = &d(&w3, 1) * (1.0 / 3.0);
    let quartic = combo(&[
        (3.0, &mul(w, &ax)),
        (-3.0, &mul(w, &d(&w2, 3))),
        (2.0, &mul(&wxx, &d(&w2, 1))),
        (1.0, &mul(&wx, &d(&w2, 2))),
    ]);
    let linear = combo(&[
        (5.0, &d(&j.wtt, 3)),
        (-12.0, &d(&j.wt, 4)),
        (-9.0, &d(w, 5)),
    ]);
    let bracket = combo(&[
        (-3.0, &mul(w, &d(&b, 2))),
        (2.0, &mul(&wxx, &b)),
        (1.0, &mul(&wx, &d(&b, 1))),
    ]);
    let quadratic = combo(&[(3.0, &d(&a_t, 2)), (-9.0, &d(&a, 3)), (2.0, &bracket)]);
    let top = combo(&[
        (-9.0, &mul(w, &axxx)),
        (6.0, &mul(&wxx, &ax)),
        (3.0, &mul(&wx, &axx)),
    ]);

    combo(&[
        (eps * eps, &cubic),
        (-eps * eps * d2 / 8.0, &quartic),
        (d4 / 16.0, &linear),
        (eps * d4 / 32.0, &quadratic),
        (eps * eps * d4 / 32.0, &top),
    ])
}

fn residual_bbm(j: &Jet, p: &PhysParams) -> Field {
    let (eps, d2) = (p.epsilon, p.delta * p.delta);
    let w = &j.w;
    let wx = d(w, 1);
    let wxx = d(w, 2);
    let wxt = d(&j.wt, 1);
    let wxxt = d(&j.wt, 2);
    let cubic = &d(&mul(&mul(w, w), w), 1) * (1.0 / 3.0);
    let mixed = combo(&[
        (6.0, &mul(w, &wxxt)),
        (2.0, &mul(&wx, &wxt)),
        (1.0, &mul(&j.wt, &wxx)),
        (-9.0, &mul(&wx, &wxx)),
    ]);
    let linear = d(&combo(&[(5.0, &j.wtt), (-12.0, &wxt), (-9.0, &wxx)]), 3);
    combo(&[
        (eps * eps, &cubic),
        (-eps * d2 / 4.0, &mixed),
        (d2 * d2 / 16.0, &linear),
    ])
}

fn residual_kdv(j: &Jet, p: &PhysParams) -> Field {
    let (eps, d2) = (p.epsilon, p.delta * p.delta);
    let w = &j.w;
    let wx = d(w, 1);
    let wxt = d(&j.wt, 1);
    let inner = combo(&[
        (eps * eps / 3.0, &mul(&mul(w, w), w)),
        (-0.75 * eps * d2, &mul(&wx, &wx)),
        (eps * d2, &(&mul(&j.wt, &wx) + &mul(w, &wxt))),
        (-0.25 * d2 * d2, &d(w, 4)),
        (0.5 * d2 * d2, &d(&j.wt, 3)),
    ]);
    d(&inner, 1)
}

/// Residual `F` of a model state, in antiderivative form.
pub fn residual_model(state: &WaveState) -> Result<Field> {
    let j = jet(state)?;
    let f = match state.family.kind {
        ModelKind::Ch => residual_ch(&j, &state.params),
        ModelKind::Bbm => residual_bbm(&j, &state.params),
        ModelKind::Kdv => residual_kdv(&j, &state.params),
    };
    f.check_finite()?;
    Ok(f)
}

/// `w_tt - w_xx - delta^2 w_xxtt - eps (w^2)_xx`, evaluated directly from the
/// model time derivatives. Its mean-zero antiderivative is [`residual_model`].
pub fn defining_residual(state: &WaveState) -> Result<Field> {
    state.w.check_finite()?;
    let p = &state.params;
    let w = &state.w;
    let wtt = model_second_time_derivative(state)?;
    Ok(combo(&[
        (1.0, &wtt),
        (-1.0, &d(w, 2)),
        (-p.delta * p.delta, &d(&wtt, 2)),
        (-p.epsilon, &d(&mul(w, w), 2)),
    ]))
}

/// Sobolev norms of the three residual fields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualNorms {
    pub plus: f64,
    pub minus: f64,
    pub tilde: f64,
}

/// Residuals of a right/left pair and of their sum inside the IB equation.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub kind: ModelKind,
    pub t: f64,
    pub params: PhysParams,
    pub f_plus: Field,
    pub f_minus: Field,
    /// `2 eps D_x(w+ w-)`.
    pub interaction: Field,
    /// `F+ + F- - interaction`.
    pub f_tilde: Field,
    pub norms: ResidualNorms,
}

/// One serialized row of a [`ResidualReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub family: String,
    pub epsilon: f64,
    pub delta: f64,
    pub s: f64,
    pub t: f64,
    pub f_plus: f64,
    pub f_minus: f64,
    pub f_tilde: f64,
    pub interaction: f64,
}

impl ResidualReport {
    pub fn row(&self) -> Result<ResidualRow> {
        Ok(ResidualRow {
            family: self.kind.to_string(),
            epsilon: self.params.epsilon,
            delta: self.params.delta,
            s: self.params.sobolev_index,
            t: self.t,
            f_plus: self.norms.plus,
            f_minus: self.norms.minus,
            f_tilde: self.norms.tilde,
            interaction: sobolev_norm(&self.interaction, self.params.sobolev_index)?,
        })
    }
}

pub(crate) fn check_pair(wp: &WaveState, wm: &WaveState) -> Result<()> {
    wp.w.same_grid(&wm.w)?;
    if wp.family != ModelFamily::right(wp.family.kind) {
        return Err(Error::FamilyMismatch {
            expected: ModelFamily::right(wp.family.kind).to_string(),
            found: wp.family.to_string(),
        });
    }
    let expected = ModelFamily::new(wp.family.kind, Direction::Left);
    if wm.family != expected {
        return Err(Error::FamilyMismatch {
            expected: expected.to_string(),
            found: wm.family.to_string(),
        });
    }
    if !times_match(wp.t, wm.t) {
        return Err(Error::TimeMismatch(wp.t, wm.t));
    }
    if wp.params != wm.params {
        return Err(Error::InvalidArgument(
            "right and left states carry different parameters".into(),
        ));
    }
    Ok(())
}

pub(crate) fn times_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Residual report for a right-moving `wp` and left-moving `wm` of one family.
pub fn residual_tilde(wp: &WaveState, wm: &WaveState) -> Result<ResidualReport> {
    check_pair(wp, wm)?;
    let p = wp.params;
    let s = p.sobolev_index;
    let f_plus = residual_model(wp)?;
    let f_minus = residual_model(wm)?;
    let interaction = &d(&mul(&wp.w, &wm.w), 1) * (2.0 * p.epsilon);
    let f_tilde = &(&f_plus + &f_minus) - &interaction;
    let norms = ResidualNorms {
        plus: sobolev_norm(&f_plus, s)?,
        minus: sobolev_norm(&f_minus, s)?,
        tilde: sobolev_norm(&f_tilde, s)?,
    };
    Ok(ResidualReport {
        kind: wp.family.kind,
        t: wp.t,
        params: p,
        f_plus,
        f_minus,
        interaction,
        f_tilde,
        norms,
    })
}
