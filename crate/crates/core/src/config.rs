//! JSON experiment configuration and its conversion to ensemble specs.
//!
//! Every section has defaults for the standard setup (L = 12, mu = -0.5,
//! W = 1, l = 4), so a config only needs to name what it changes. Unknown
//! keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::{EnsembleSpec, InitialState, Observable, Protocol, StageSpec, StateKind};
use crate::error::{Error, Result};
use crate::evolution::TimeKind;
use crate::hilbert::{ModelParams, DEFAULT_DISORDER, DEFAULT_MU};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub state: StateSection,
    #[serde(default = "default_protocols")]
    pub protocols: Vec<ProtocolSection>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub observe: ObserveSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Run metadata written into sidecars; ignored when read back.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<RunMeta>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    #[serde(rename = "L")]
    pub sites: usize,
    pub gamma_sym: f64,
    pub gamma_asym: f64,
    pub mu: f64,
    #[serde(rename = "W")]
    pub disorder: f64,
    pub periodic: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            sites: 12,
            gamma_sym: 1.0,
            gamma_asym: 0.6,
            mu: DEFAULT_MU,
            disorder: DEFAULT_DISORDER,
            periodic: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateSection {
    pub kind: StateKind,
    pub theta_over_pi: f64,
}

impl Default for StateSection {
    fn default() -> Self {
        StateSection {
            kind: StateKind::Ferro,
            theta_over_pi: 0.2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaName {
    Sym,
    Asym,
}

/// Stage anisotropy: a number, or `"sym"` / `"asym"` from the model section.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaRef {
    Value(f64),
    Named(GammaName),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSection {
    pub gamma: GammaRef,
    /// `null` means "until the end of the grid"; only the last stage may
    /// leave it open.
    #[serde(default)]
    pub duration: Option<f64>,
    #[serde(default = "default_kind")]
    pub kind: TimeKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub name: String,
    pub stages: Vec<StageSection>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Geometric,
    Linear,
}

/// Observation times. A geometric grid spans `[t_min, t_max]` in `points`
/// log-spaced steps and is preceded by `t = 0` unless `include_zero` is off.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub kind: GridKind,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub include_zero: bool,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            kind: GridKind::Geometric,
            t_min: 0.01,
            t_max: 20.0,
            points: 60,
            include_zero: true,
        }
    }
}

impl GridSection {
    pub fn times(&self) -> Result<Vec<f64>> {
        if self.points == 0 {
            return Err(Error::Config("grid needs at least one point".into()));
        }
        if !(self.t_min.is_finite() && self.t_max.is_finite() && self.t_min >= 0.0) {
            return Err(Error::Config("grid bounds must be finite and >= 0".into()));
        }
        if self.t_max < self.t_min || (self.points > 1 && self.t_max == self.t_min) {
            return Err(Error::Config(format!(
                "grid needs t_max > t_min for {} points",
                self.points
            )));
        }
        let n = self.points;
        let step = |k: usize| k as f64 / (n - 1).max(1) as f64;
        let mut times: Vec<f64> = match self.kind {
            GridKind::Linear => (0..n)
                .map(|k| self.t_min + (self.t_max - self.t_min) * step(k))
                .collect(),
            GridKind::Geometric => {
                if self.t_min <= 0.0 {
                    return Err(Error::Config("geometric grid needs t_min > 0".into()));
                }
                let ratio = (self.t_max / self.t_min).ln();
                (0..n).map(|k| self.t_min * (ratio * step(k)).exp()).collect()
            }
        };
        if n > 1 {
            times[n - 1] = self.t_max;
        }
        if self.kind == GridKind::Geometric && self.include_zero {
            times.insert(0, 0.0);
        }
        Ok(times)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObserveSection {
    pub observables: Vec<Observable>,
    pub subsystem_size: usize,
    pub pe_bins: usize,
}

impl Default for ObserveSection {
    fn default() -> Self {
        ObserveSection {
            observables: vec![Observable::Ea],
            subsystem_size: 4,
            pe_bins: default_pe_bins(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub n_realizations: usize,
    pub master_seed: u64,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection {
            n_realizations: 100,
            master_seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub format: OutputFormat,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: PathBuf::from("out"),
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMeta {
    pub command: String,
    pub git_describe: String,
    pub wall_time_s: f64,
    pub master_seed: u64,
}

fn default_kind() -> TimeKind {
    TimeKind::Real
}

fn default_pe_bins() -> usize {
    60
}

/// Direct quench, asymmetric-only evolution and the two-step protocol
/// switching at `t = 0.5`.
fn default_protocols() -> Vec<ProtocolSection> {
    let stage = |gamma, duration| StageSection {
        gamma: GammaRef::Named(gamma),
        duration,
        kind: TimeKind::Real,
    };
    vec![
        ProtocolSection {
            name: "direct".into(),
            stages: vec![stage(GammaName::Sym, None)],
        },
        ProtocolSection {
            name: "asym".into(),
            stages: vec![stage(GammaName::Asym, None)],
        },
        ProtocolSection {
            name: "twostep".into(),
            stages: vec![stage(GammaName::Asym, Some(0.5)), stage(GammaName::Sym, None)],
        },
    ]
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn model_params(&self, gamma: f64) -> ModelParams {
        ModelParams {
            sites: self.model.sites,
            gamma,
            mu: self.model.mu,
            disorder: self.model.disorder,
            fields: vec![0.0; self.model.sites],
            periodic: self.model.periodic,
        }
    }

    pub fn initial_state(&self) -> InitialState {
        InitialState {
            kind: self.state.kind,
            theta_over_pi: self.state.theta_over_pi,
        }
    }

    fn resolve_gamma(&self, g: GammaRef) -> f64 {
        match g {
            GammaRef::Value(v) => v,
            GammaRef::Named(GammaName::Sym) => self.model.gamma_sym,
            GammaRef::Named(GammaName::Asym) => self.model.gamma_asym,
        }
    }

    fn resolve_protocol(&self, p: &ProtocolSection, end: f64) -> Result<Protocol> {
        if p.stages.is_empty() {
            return Err(Error::Config(format!("protocol {:?} has no stages", p.name)));
        }
        let mut elapsed = 0.0;
        let mut stages = Vec::with_capacity(p.stages.len());
        for (k, s) in p.stages.iter().enumerate() {
            let last = k + 1 == p.stages.len();
            let duration = match s.duration {
                Some(d) if d.is_finite() && d >= 0.0 => d,
                Some(d) => {
                    return Err(Error::Config(format!(
                        "protocol {:?}: stage duration {d} must be finite and >= 0",
                        p.name
                    )))
                }
                None if last => (end - elapsed).max(0.0),
                None => {
                    return Err(Error::Config(format!(
                        "protocol {:?}: only the last stage may omit its duration",
                        p.name
                    )))
                }
            };
            elapsed += duration;
            stages.push(StageSpec {
                gamma: self.resolve_gamma(s.gamma),
                duration,
                kind: s.kind,
            });
        }
        Ok(Protocol::new(p.name.clone(), stages))
    }

    /// Ensemble for the `evolve` command.
    pub fn ensemble_spec(&self) -> Result<EnsembleSpec> {
        let grid = self.grid.times()?;
        let end = grid.last().copied().unwrap_or(0.0);
        let protocols = self
            .protocols
            .iter()
            .map(|p| self.resolve_protocol(p, end))
            .collect::<Result<Vec<_>>>()?;
        if self.observe.observables.is_empty() {
            return Err(Error::Config("observe.observables is empty".into()));
        }
        let spec = EnsembleSpec {
            n_realizations: self.ensemble.n_realizations,
            master_seed: self.ensemble.master_seed,
            model: self.model_params(self.model.gamma_sym),
            protocols,
            initial_state: self.initial_state(),
            grid,
            observables: self.observe.observables.clone(),
            subsystem_size: self.observe.subsystem_size,
            pe_bins: self.observe.pe_bins,
        };
        spec.validate().map_err(as_config_error)?;
        Ok(spec)
    }

    /// Ensemble for the `overlap` command: the initial state's eigenstate
    /// histograms against the symmetric and asymmetric Hamiltonians.
    pub fn overlap_spec(&self) -> Result<EnsembleSpec> {
        let spec = EnsembleSpec {
            n_realizations: self.ensemble.n_realizations,
            master_seed: self.ensemble.master_seed,
            model: self.model_params(self.model.gamma_sym),
            protocols: vec![
                Protocol::direct("sym", self.model.gamma_sym, 0.0, TimeKind::Real),
                Protocol::direct("asym", self.model.gamma_asym, 0.0, TimeKind::Real),
            ],
            initial_state: self.initial_state(),
            grid: vec![0.0],
            observables: vec![Observable::Pe],
            subsystem_size: self.observe.subsystem_size,
            pe_bins: self.observe.pe_bins,
        };
        spec.validate().map_err(as_config_error)?;
        Ok(spec)
    }

    /// Symmetric model for the `spectrum` command; rejects `gamma_sym != 1`.
    pub fn spectrum_params(&self) -> Result<ModelParams> {
        if self.model.gamma_sym != 1.0 {
            return Err(Error::Config(format!(
                "spectrum needs gamma_sym = 1, got {}",
                self.model.gamma_sym
            )));
        }
        if self.ensemble.n_realizations == 0 {
            return Err(Error::Config("need at least one realization".into()));
        }
        let p = self.model_params(1.0);
        p.validate().map_err(as_config_error)?;
        Ok(p)
    }
}

fn as_config_error(e: Error) -> Error {
    match e {
        Error::InvalidParameter(msg) => Error::Config(msg),
        other => other,
    }
}
