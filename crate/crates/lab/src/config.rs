//! Study configuration.
//!
//! A config is a flat TOML file of dotted keys, one study per file:
//!
//! ```toml
//! study.kind = "decouple"
//! study.families = ["ch", "bbm", "kdv"]
//! study.cases = ["general"]
//! study.sobolev_indices = [2.0]
//! grid.half_length = 64.0
//! grid.n_points = 2048
//! profile.u0.shape = "gaussian"
//! profile.u0.amplitude = 1.0
//! profile.u0.width = 4.0
//! profile.u0.center = 0.0
//! profile.v0.shape = "gaussian"
//! profile.v0.amplitude = 0.5
//! profile.v0.width = 6.0
//! profile.v0.center = 0.0
//! sweep.coupling = "eps_eq_delta_sq"
//! sweep.deltas = [0.05, 0.1, 0.2, 0.4]
//! time.t_end = 10.0
//! time.snapshot_interval = 0.5
//! output.dir = "out"
//! ```
//!
//! Optional keys: `sweep.epsilons` (required for `explicit` coupling),
//! `sweep.kdv_c1` / `sweep.kdv_c2` (KdV window `delta^2/c2 <= eps <= delta^2/c1`,
//! both default 1), `time.dt` (cap below the stability bound), `time.kdv_scheme`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ibwave_core::solvers::{ModelKind, Scheme};
use ibwave_core::PhysParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Decouple,
    Residual,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Decouple => "decouple",
            StudyKind::Residual => "residual",
        }
    }
}

/// How the IB initial data relate to the split halves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataCase {
    /// `(u0, v0)` from the profile, `u_t(0) = v0_x`.
    General,
    /// `v0 = -u0`, `u_t(0) = v0_x`: the left wave vanishes.
    Unidirectional,
    /// `v0 = -u0` with `u_t(0) = w+_t(0)`, the model's own velocity.
    Prepared,
}

impl DataCase {
    pub fn name(self) -> &'static str {
        match self {
            DataCase::General => "general",
            DataCase::Unidirectional => "unidirectional",
            DataCase::Prepared => "prepared",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Gaussian,
    Sech2,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    EpsEqDelta,
    EpsEqDeltaSq,
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub kind: StudyKind,
    pub families: Vec<ModelKind>,
    #[serde(default = "default_cases")]
    pub cases: Vec<DataCase>,
    #[serde(default = "default_sobolev")]
    pub sobolev_indices: Vec<f64>,
}

fn default_cases() -> Vec<DataCase> {
    vec![DataCase::General]
}

fn default_sobolev() -> Vec<f64> {
    vec![PhysParams::DEFAULT_SOBOLEV_INDEX]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_length: f64,
    pub n_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSpec {
    pub shape: Shape,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default)]
    pub center: f64,
}

fn one() -> f64 {
    1.0
}

impl ShapeSpec {
    pub fn gaussian(amplitude: f64, width: f64, center: f64) -> Self {
        Self {
            shape: Shape::Gaussian,
            amplitude,
            width,
            center,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.width;
        match self.shape {
            Shape::Gaussian => self.amplitude * (-z * z).exp(),
            Shape::Sech2 => self.amplitude / z.cosh().powi(2),
            Shape::Zero => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub u0: ShapeSpec,
    pub v0: ShapeSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub coupling: Coupling,
    pub deltas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilons: Vec<f64>,
    #[serde(default = "one")]
    pub kdv_c1: f64,
    #[serde(default = "one")]
    pub kdv_c2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_end: f64,
    pub snapshot_interval: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kdv_scheme: Option<Scheme>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub study: StudySpec,
    pub grid: GridSpec,
    pub profile: ProfileSpec,
    pub sweep: SweepSpec,
    pub time: TimeSpec,
    pub output: OutputSpec,
}

/// One `(eps, delta)` pair of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub delta: f64,
}

impl ExperimentConfig {
    /// Default benchmark: Gaussian `u0` (a = 1, sigma = 4), `v0 = 0.5` Gaussian
    /// (sigma = 6), L = 64, N = 2048, s = 2, t* = 10, `eps = delta^2` on
    /// `delta in {0.05, 0.1, 0.2, 0.4}`.
    pub fn benchmark(kind: StudyKind) -> Self {
        Self {
            study: StudySpec {
                kind,
                families: ModelKind::ALL.to_vec(),
                cases: default_cases(),
                sobolev_indices: default_sobolev(),
            },
            grid: GridSpec {
                half_length: 64.0,
                n_points: 2048,
            },
            profile: ProfileSpec {
                u0: ShapeSpec::gaussian(1.0, 4.0, 0.0),
                v0: ShapeSpec::gaussian(0.5, 6.0, 0.0),
            },
            sweep: SweepSpec {
                coupling: Coupling::EpsEqDeltaSq,
                deltas: vec![0.05, 0.1, 0.2, 0.4],
                epsilons: Vec::new(),
                kdv_c1: 1.0,
                kdv_c2: 1.0,
            },
            time: TimeSpec {
                t_end: 10.0,
                snapshot_interval: 0.5,
                dt: None,
                kdv_scheme: None,
            },
            output: OutputSpec {
                dir: PathBuf::from("out"),
            },
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let cfg = Self::parse(&text)?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Flat dotted-key form; `parse(serialize(cfg)) == cfg`.
    pub fn serialize(&self) -> String {
        let value = toml::Value::try_from(self).expect("config is representable as TOML");
        let mut out = String::new();
        flatten("", &value, &mut out);
        out
    }

    /// SHA-256 of the serialized form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.serialize().as_bytes()))
    }

    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let s = &self.sweep;
        s.deltas
            .iter()
            .enumerate()
            .map(|(i, &delta)| SweepPoint {
                delta,
                epsilon: match s.coupling {
                    Coupling::EpsEqDelta => delta,
                    Coupling::EpsEqDeltaSq => delta * delta,
                    Coupling::Explicit => s.epsilons[i],
                },
            })
            .collect()
    }

    /// Physical parameters at a sweep point and Sobolev index.
    pub fn params(&self, point: SweepPoint, s: f64) -> Result<PhysParams> {
        PhysParams::new(point.epsilon, point.delta, s).map_err(LabError::from)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LabError::Config(m));
        if self.study.families.is_empty() {
            return bad("study.families is empty".into());
        }
        if self.study.cases.is_empty() {
            return bad("study.cases is empty".into());
        }
        if self.study.sobolev_indices.iter().any(|&s| s.is_nan() || s <= 0.5) {
            return bad("every Sobolev index must exceed 1/2".into());
        }
        if ibwave_core::PeriodicGrid::new(self.grid.half_length, self.grid.n_points).is_err() {
            return bad(format!(
                "grid needs L > 0 and even N >= 8, got L={}, N={}",
                self.grid.half_length, self.grid.n_points
            ));
        }
        let t = &self.time;
        if !(t.t_end > 0.0 && t.snapshot_interval > 0.0) {
            return bad("time.t_end and time.snapshot_interval must be positive".into());
        }
        let ratio = t.t_end / t.snapshot_interval;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return bad("time.t_end must be a multiple of time.snapshot_interval".into());
        }
        if let Some(dt) = t.dt {
            if dt.is_nan() || dt <= 0.0 {
                return bad("time.dt must be positive".into());
            }
        }
        let s = &self.sweep;
        if s.coupling == Coupling::Explicit && s.epsilons.len() != s.deltas.len() {
            return bad("explicit coupling needs one epsilon per delta".into());
        }
        if s.coupling != Coupling::Explicit && !s.epsilons.is_empty() {
            return bad("sweep.epsilons is only used with explicit coupling".into());
        }
        if !(s.kdv_c1 > 0.0 && s.kdv_c2 >= s.kdv_c1) {
            return bad("need 0 < sweep.kdv_c1 <= sweep.kdv_c2".into());
        }
        for p in self.sweep_points() {
            if !(p.epsilon > 0.0 && p.epsilon <= p.delta && p.delta <= 1.0) {
                return bad(format!(
                    "sweep point (eps={}, delta={}) violates 0 < eps <= delta <= 1",
                    p.epsilon, p.delta
                ));
            }
        }
        if self.study.families.contains(&ModelKind::Kdv) {
            if s.coupling == Coupling::EpsEqDelta {
                return bad(
                    "KdV needs eps ~ delta^2: use eps_eq_delta_sq or explicit coupling".into(),
                );
            }
            for p in self.sweep_points() {
                let d2 = p.delta * p.delta;
                let tol = 1e-12 * d2;
                if p.epsilon < d2 / s.kdv_c2 - tol || p.epsilon > d2 / s.kdv_c1 + tol {
                    return bad(format!(
                        "KdV sweep point (eps={}, delta={}) outside [delta^2/c2, delta^2/c1]",
                        p.epsilon, p.delta
                    ));
                }
            }
        }
        Ok(())
    }
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut String) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        other => {
            let _ = writeln!(out, "{prefix} = {other}");
        }
    }
}
