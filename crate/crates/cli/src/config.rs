//! Run configuration: parsing, command-line overrides and model assembly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qubit_riccati::model::{
    build_commuting, build_spin_boson, from_system_terms, CommutingParams, EnvOperatorSet, SpinBosonParams,
};
use qubit_riccati::numerics::ComplexMatrix;
use qubit_riccati::riccati::{SolverTolerances, Strategy};
use qubit_riccati::verify::{Thresholds, DEFAULT_TIMES};
use qubit_riccati::wire::{decode_matrix, WireMatrix};
use qubit_riccati::{BlockHamiltonian, C64};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    SpinBoson,
    Commuting,
    CustomTerms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    InvariantSubspace,
    Newton,
    #[default]
    Analytic,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelName,
    pub params: Map<String, Value>,
    #[serde(default)]
    pub solver: SolverChoice,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_strategy() -> Strategy {
    Strategy::MaxInvertibility
}

fn default_times() -> Vec<f64> {
    DEFAULT_TIMES.to_vec()
}

/// Recognised keys of the `tolerances` map.
pub const TOLERANCE_KEYS: &[&str] = &[
    "tol_acc",
    "kappa_floor",
    "dedup",
    "tol_herm",
    "relative",
    "stationarity",
    "density",
    "newton_tol",
];

/// Scalar parameters a sweep may vary, per model.
fn sweepable(model: ModelName) -> &'static [&'static str] {
    match model {
        ModelName::SpinBoson => &["omega", "g", "alpha", "beta"],
        ModelName::Commuting => &["alpha"],
        ModelName::CustomTerms => &[],
    }
}

/// Numeric settings resolved from the `tolerances` map.
#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub solver: SolverTolerances,
    pub thresholds: Thresholds,
    /// Newton stops at `newton_tol * ||H||_F`.
    pub newton_tol: f64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("config does not parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (k, v) in &self.tolerances {
            if !TOLERANCE_KEYS.contains(&k.as_str()) {
                return Err(CliError::Invalid(format!(
                    "unknown tolerance '{k}' (expected one of {})",
                    TOLERANCE_KEYS.join(", ")
                )));
            }
            if !(v.is_finite() && *v > 0.0) {
                return Err(CliError::Invalid(format!("tolerance '{k}' must be positive, got {v}")));
            }
        }
        if self.times.is_empty() || self.times.iter().any(|t| !t.is_finite()) {
            return Err(CliError::Invalid("times must be a nonempty list of finite numbers".into()));
        }
        if self.workers == Some(0) {
            return Err(CliError::Invalid("workers must be at least 1".into()));
        }
        if let Some(sweep) = &self.sweep {
            if !sweepable(self.model).contains(&sweep.param.as_str()) {
                return Err(CliError::Invalid(format!(
                    "parameter '{}' cannot be swept for this model (sweepable: {:?})",
                    sweep.param,
                    sweepable(self.model)
                )));
            }
            if !self.params.contains_key(&sweep.param) {
                return Err(CliError::Invalid(format!("sweep parameter '{}' is not set in params", sweep.param)));
            }
            if sweep.values.iter().any(|v| !v.is_finite()) {
                return Err(CliError::Invalid("sweep values must be finite".into()));
            }
        }
        // Surface parameter errors before any work starts.
        self.build()?;
        Ok(())
    }

    /// Applies `KEY=VAL` tolerance overrides.
    pub fn apply_tol_overrides(&mut self, overrides: &[String]) -> Result<(), CliError> {
        for item in overrides {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::Invalid(format!("--tol expects KEY=VAL, got '{item}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::Invalid(format!("--tol value for '{k}' is not a number")))?;
            self.tolerances.insert(k.trim().to_string(), v);
        }
        Ok(())
    }

    /// The configuration for one sweep point: the swept parameter is
    /// substituted and the sweep block dropped, so the result replays as a
    /// plain run.
    pub fn at_sweep_point(&self, value: f64) -> Self {
        let mut cfg = self.clone();
        if let Some(sweep) = cfg.sweep.take() {
            cfg.params.insert(sweep.param, Value::from(value));
        }
        cfg.out = None;
        cfg.workers = None;
        cfg
    }

    pub fn settings(&self) -> Settings {
        let mut solver = SolverTolerances::default();
        let mut thresholds = Thresholds::default();
        let mut newton_tol = 1e-12;
        for (k, &v) in &self.tolerances {
            match k.as_str() {
                "tol_acc" => solver.tol_acc_rel = v,
                "kappa_floor" => solver.kappa_floor = v,
                "dedup" => solver.dedup = v,
                "tol_herm" => solver.tol_herm = v,
                "relative" => thresholds.relative = v,
                "stationarity" => thresholds.stationarity = v,
                "density" => thresholds.density = v,
                "newton_tol" => newton_tol = v,
                _ => {}
            }
        }
        Settings { solver, thresholds, newton_tol }
    }

    pub fn build(&self) -> Result<Built, CliError> {
        let params = Value::Object(self.params.clone());
        match self.model {
            ModelName::SpinBoson => {
                let spec: SpinBosonSpec = parse_params(params)?;
                let p = SpinBosonParams {
                    n_env: spec.n_env,
                    omega: spec.omega,
                    g: spec.g.into(),
                    alpha: spec.alpha,
                    beta: spec.beta,
                };
                let (h, ops) = build_spin_boson(&p).map_err(CliError::from_core)?;
                Ok(Built { h, ops: Some(ops) })
            }
            ModelName::Commuting => {
                let spec: CommutingSpec = parse_params(params)?;
                let basis_rotation = spec.basis_rotation.as_ref().map(decode).transpose()?;
                let p = CommutingParams { lambdas: spec.lambdas, xis: spec.xis, alpha: spec.alpha, basis_rotation };
                let h = build_commuting(&p).map_err(CliError::from_core)?;
                Ok(Built { h, ops: None })
            }
            ModelName::CustomTerms => {
                let spec: CustomTermsSpec = parse_params(params)?;
                let couplings = spec
                    .couplings
                    .iter()
                    .map(|(a, b)| Ok((decode(a)?, decode(b)?)))
                    .collect::<Result<Vec<_>, CliError>>()?;
                let h = from_system_terms(&decode(&spec.h_q)?, &decode(&spec.h_env)?, &couplings)
                    .map_err(CliError::from_core)?;
                Ok(Built { h, ops: None })
            }
        }
    }
}

pub struct Built {
    pub h: BlockHamiltonian,
    /// Bosonic operators, for the spin-boson model only.
    pub ops: Option<EnvOperatorSet>,
}

fn parse_params<T: for<'de> Deserialize<'de>>(params: Value) -> Result<T, CliError> {
    serde_json::from_value(params).map_err(|e| CliError::Invalid(format!("invalid params: {e}")))
}

fn decode(m: &WireMatrix) -> Result<ComplexMatrix, CliError> {
    decode_matrix(m).map_err(|e| CliError::Invalid(format!("invalid matrix: {e}")))
}

/// A coupling given either as a real number or as `[re, im]`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Scalar> for C64 {
    fn from(s: Scalar) -> Self {
        match s {
            Scalar::Real(re) => C64::new(re, 0.0),
            Scalar::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpinBosonSpec {
    n_env: usize,
    omega: f64,
    g: Scalar,
    alpha: f64,
    #[serde(default)]
    beta: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommutingSpec {
    lambdas: Vec<f64>,
    xis: Vec<f64>,
    alpha: f64,
    #[serde(default)]
    basis_rotation: Option<WireMatrix>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomTermsSpec {
    h_q: WireMatrix,
    h_env: WireMatrix,
    #[serde(default)]
    couplings: Vec<(WireMatrix, WireMatrix)>,
}
