//! Disorder ensembles: seeded field sampling, paired protocol runs and
//! mean/standard-error aggregation.
//!
//! Every realization is an isolated task keyed by its index. Results are
//! collected in index order, so the output does not depend on how many
//! worker threads ran the sweep.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{decompose_model, run_plan, validate_grid, SpectralDecomposition, StagePlan, TimeKind};
use crate::hilbert::ModelParams;
use crate::observables::{
    charge_sector_probs, charge_variance, eigenstate_overlap_hist, entanglement_asymmetry,
    spectrum_bins,
};
use crate::state::{tilted_ferromagnet, tilted_neel, StateVector};

/// Uniform fields on `[-W, W)` from the ChaCha stream `(master_seed, realization)`.
pub fn sample_fields(master_seed: u64, realization: u64, sites: usize, disorder: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(realization);
    (0..sites)
        .map(|_| disorder * (2.0 * rng.random::<f64>() - 1.0))
        .collect()
}

/// Dense kernels run single-threaded so results are independent of the
/// worker count.
pub(crate) fn pin_dense_kernels() {
    faer::set_global_parallelism(faer::Par::Seq);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    /// Entanglement asymmetry of the leading block.
    Ea,
    /// Energy with respect to the protocol's final-stage Hamiltonian.
    Energy,
    /// Total charge variance.
    Cv,
    /// Charge-sector probabilities.
    Pq,
    /// Eigenstate overlap histogram against the final-stage Hamiltonian.
    Pe,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::Ea => "ea",
            Observable::Energy => "energy",
            Observable::Cv => "cv",
            Observable::Pq => "pq",
            Observable::Pe => "pe",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Ferro,
    Neel,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialState {
    pub kind: StateKind,
    /// Tilt angle in units of pi.
    pub theta_over_pi: f64,
}

impl InitialState {
    pub fn theta(&self) -> f64 {
        self.theta_over_pi * PI
    }

    pub fn prepare(&self, sites: usize) -> Result<StateVector> {
        match self.kind {
            StateKind::Ferro => tilted_ferromagnet(sites, self.theta()),
            StateKind::Neel => tilted_neel(sites, self.theta()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageSpec {
    pub gamma: f64,
    pub duration: f64,
    pub kind: TimeKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Protocol {
    pub name: String,
    pub stages: Vec<StageSpec>,
}

impl Protocol {
    pub fn new(name: impl Into<String>, stages: Vec<StageSpec>) -> Self {
        Protocol {
            name: name.into(),
            stages,
        }
    }

    /// Single stage of `gamma` lasting `duration`.
    pub fn direct(name: impl Into<String>, gamma: f64, duration: f64, kind: TimeKind) -> Self {
        Self::new(name, vec![StageSpec { gamma, duration, kind }])
    }

    /// `gamma_first` until `switch`, then `gamma_second` for the remaining time.
    pub fn two_step(
        name: impl Into<String>,
        gamma_first: f64,
        switch: f64,
        gamma_second: f64,
        total: f64,
        kind: TimeKind,
    ) -> Self {
        Self::new(
            name,
            vec![
                StageSpec { gamma: gamma_first, duration: switch, kind },
                StageSpec { gamma: gamma_second, duration: (total - switch).max(0.0), kind },
            ],
        )
    }

    pub fn total_duration(&self) -> f64 {
        self.stages.iter().map(|s| s.duration).sum()
    }

    pub fn final_gamma(&self) -> f64 {
        self.stages.last().map(|s| s.gamma).unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub n_realizations: usize,
    pub master_seed: u64,
    /// Couplings shared by all protocols; `gamma` and `fields` are replaced
    /// per stage and per realization.
    pub model: ModelParams,
    pub protocols: Vec<Protocol>,
    pub initial_state: InitialState,
    pub grid: Vec<f64>,
    pub observables: Vec<Observable>,
    pub subsystem_size: usize,
    pub pe_bins: usize,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        let probe = self.model.with_gamma(1.0).with_fields(vec![0.0; self.model.sites]);
        probe.validate()?;
        if self.n_realizations == 0 {
            return Err(Error::invalid("need at least one realization"));
        }
        if self.protocols.is_empty() {
            return Err(Error::invalid("need at least one protocol"));
        }
        validate_grid(&self.grid)?;
        let mut names = std::collections::BTreeSet::new();
        for p in &self.protocols {
            if !names.insert(p.name.as_str()) {
                return Err(Error::invalid(format!("duplicate protocol name {:?}", p.name)));
            }
            if p.stages.is_empty() {
                return Err(Error::invalid(format!("protocol {:?} has no stages", p.name)));
            }
            for s in &p.stages {
                if !s.gamma.is_finite() {
                    return Err(Error::invalid(format!("protocol {:?}: gamma must be finite", p.name)));
                }
            }
            if let Some(&last) = self.grid.last() {
                let total = p.total_duration();
                if last > total + 1e-12 * total.abs().max(1.0) {
                    return Err(Error::invalid(format!(
                        "protocol {:?} lasts {total} but the grid reaches {last}",
                        p.name
                    )));
                }
            }
        }
        if !self.initial_state.theta_over_pi.is_finite() {
            return Err(Error::invalid("tilt angle must be finite"));
        }
        self.initial_state.prepare(self.model.sites)?;
        if self.observables.contains(&Observable::Ea)
            && (self.subsystem_size == 0 || self.subsystem_size >= self.model.sites)
        {
            return Err(Error::invalid(format!(
                "subsystem size {} must lie in 1..{}",
                self.subsystem_size, self.model.sites
            )));
        }
        if self.observables.contains(&Observable::Pe) && self.pe_bins == 0 {
            return Err(Error::invalid("pe_bins must be >= 1"));
        }
        Ok(())
    }

    fn gammas(&self) -> Vec<f64> {
        self.protocols
            .iter()
            .flat_map(|p| p.stages.iter().map(|s| s.gamma))
            .collect()
    }

    /// Number of values recorded per grid point for `obs`.
    pub fn components(&self, obs: Observable) -> usize {
        match obs {
            Observable::Ea | Observable::Energy | Observable::Cv => 1,
            Observable::Pq => self.model.sites + 1,
            Observable::Pe => 2 * self.pe_bins,
        }
    }

    /// Labels of the recorded components: charges for `pq`, weight then
    /// center per bin for `pe`, nothing for scalars.
    pub fn component_labels(&self, obs: Observable) -> Vec<String> {
        let l = self.model.sites as i32;
        match obs {
            Observable::Pq => (0..=l).map(|k| (2 * k - l).to_string()).collect(),
            Observable::Pe => (0..self.pe_bins)
                .map(|b| format!("weight{b}"))
                .chain((0..self.pe_bins).map(|b| format!("center{b}")))
                .collect(),
            _ => vec![String::new()],
        }
    }
}

/// Observable values of one protocol in one realization:
/// `values[observable][time][component]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolTrace {
    pub values: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealizationSample {
    pub index: u64,
    pub fields: Vec<f64>,
    /// One trace per protocol, in spec order.
    pub protocols: Vec<ProtocolTrace>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleResult {
    pub spec: EnsembleSpec,
    pub samples: Vec<RealizationSample>,
}

/// Mean and standard error of an observable along the grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleSeries {
    pub protocol: String,
    pub observable: String,
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_realizations: usize,
}

impl EnsembleSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Sample mean and `stddev / sqrt(n)` (zero for a single sample).
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

impl EnsembleResult {
    fn protocol_index(&self, name: &str) -> Result<usize> {
        self.spec
            .protocols
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| Error::invalid(format!("no protocol named {name:?}")))
    }

    fn observable_index(&self, obs: Observable) -> Result<usize> {
        self.spec
            .observables
            .iter()
            .position(|&o| o == obs)
            .ok_or_else(|| Error::invalid(format!("observable {} was not recorded", obs.name())))
    }

    /// Per-realization values `[realization][time]` of one component.
    pub fn component_samples(
        &self,
        protocol: &str,
        obs: Observable,
        component: usize,
    ) -> Result<Vec<Vec<f64>>> {
        let p = self.protocol_index(protocol)?;
        let o = self.observable_index(obs)?;
        if component >= self.spec.components(obs) {
            return Err(Error::invalid(format!("component {component} out of range")));
        }
        Ok(self
            .samples
            .iter()
            .map(|s| s.protocols[p].values[o].iter().map(|v| v[component]).collect())
            .collect())
    }

    /// Per-realization values of a scalar observable.
    pub fn scalar_samples(&self, protocol: &str, obs: Observable) -> Result<Vec<Vec<f64>>> {
        self.component_samples(protocol, obs, 0)
    }

    pub fn component_series(
        &self,
        protocol: &str,
        obs: Observable,
        component: usize,
    ) -> Result<EnsembleSeries> {
        let samples = self.component_samples(protocol, obs, component)?;
        let times = self.spec.grid.clone();
        let mut mean = Vec::with_capacity(times.len());
        let mut stderr = Vec::with_capacity(times.len());
        let mut column = Vec::with_capacity(samples.len());
        for t in 0..times.len() {
            column.clear();
            column.extend(samples.iter().map(|s| s[t]));
            let (m, e) = mean_and_stderr(&column);
            mean.push(m);
            stderr.push(e);
        }
        let label = &self.spec.component_labels(obs)[component];
        let observable = if label.is_empty() {
            obs.name().to_string()
        } else {
            format!("{}[{label}]", obs.name())
        };
        Ok(EnsembleSeries {
            protocol: protocol.to_string(),
            observable,
            times,
            mean,
            stderr,
            n_realizations: samples.len(),
        })
    }

    pub fn series(&self, protocol: &str, obs: Observable) -> Result<EnsembleSeries> {
        self.component_series(protocol, obs, 0)
    }
}

/// `a - b` pointwise with standard errors added in quadrature.
pub fn series_difference(a: &EnsembleSeries, b: &EnsembleSeries) -> Result<EnsembleSeries> {
    if a.times != b.times {
        return Err(Error::invalid("series are sampled on different grids"));
    }
    let observable = if a.observable == b.observable {
        a.observable.clone()
    } else {
        format!("{}-{}", a.observable, b.observable)
    };
    Ok(EnsembleSeries {
        protocol: format!("{}-{}", a.protocol, b.protocol),
        observable,
        times: a.times.clone(),
        mean: a.mean.iter().zip(&b.mean).map(|(x, y)| x - y).collect(),
        stderr: a
            .stderr
            .iter()
            .zip(&b.stderr)
            .map(|(x, y)| x.hypot(*y))
            .collect(),
        n_realizations: a.n_realizations.min(b.n_realizations),
    })
}

fn check_batch(specs: &[EnsembleSpec]) -> Result<()> {
    let first = specs.first().ok_or_else(|| Error::invalid("empty batch"))?;
    for s in specs {
        s.validate()?;
        let m = &s.model;
        let f = &first.model;
        if m.sites != f.sites
            || m.mu != f.mu
            || m.disorder != f.disorder
            || m.periodic != f.periodic
            || s.master_seed != first.master_seed
        {
            return Err(Error::invalid(
                "batched ensembles must share the model couplings and master seed",
            ));
        }
    }
    Ok(())
}

fn evaluate(
    spec: &EnsembleSpec,
    decomps: &BTreeMap<u64, SpectralDecomposition>,
) -> Result<Vec<ProtocolTrace>> {
    let psi0 = spec.initial_state.prepare(spec.model.sites)?;
    let mut traces = Vec::with_capacity(spec.protocols.len());
    for protocol in &spec.protocols {
        let plan: Vec<StagePlan<'_>> = protocol
            .stages
            .iter()
            .map(|s| StagePlan {
                decomposition: &decomps[&s.gamma.to_bits()],
                duration: s.duration,
                kind: s.kind,
            })
            .collect();
        let target = &decomps[&protocol.final_gamma().to_bits()];
        let states = run_plan(&psi0, &plan, &spec.grid)?;
        let mut values = Vec::with_capacity(spec.observables.len());
        for &obs in &spec.observables {
            let per_time: Vec<Vec<f64>> = match obs {
                Observable::Energy => target
                    .expectations(&states)?
                    .into_iter()
                    .map(|e| vec![e])
                    .collect(),
                Observable::Ea => states
                    .iter()
                    .map(|s| entanglement_asymmetry(s, spec.subsystem_size).map(|v| vec![v]))
                    .collect::<Result<_>>()?,
                Observable::Cv => states.iter().map(|s| vec![charge_variance(s)]).collect(),
                Observable::Pq => states
                    .iter()
                    .map(|s| charge_sector_probs(s).probabilities().to_vec())
                    .collect(),
                Observable::Pe => {
                    let edges = spectrum_bins(target, spec.pe_bins)?;
                    let centers: Vec<f64> = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
                    states
                        .iter()
                        .map(|s| {
                            let h = eigenstate_overlap_hist(s, target, &edges)?;
                            Ok(h.weights.into_iter().chain(centers.iter().copied()).collect())
                        })
                        .collect::<Result<_>>()?
                }
            };
            values.push(per_time);
        }
        traces.push(ProtocolTrace { values });
    }
    Ok(traces)
}

fn run_realization(specs: &[EnsembleSpec], index: u64) -> Result<Vec<Option<RealizationSample>>> {
    let template = &specs[0].model;
    let fields = sample_fields(specs[0].master_seed, index, template.sites, template.disorder);
    let active: Vec<&EnsembleSpec> = specs
        .iter()
        .filter(|s| (index as usize) < s.n_realizations)
        .collect();

    let mut decomps = BTreeMap::new();
    for spec in &active {
        for g in spec.gammas() {
            if let std::collections::btree_map::Entry::Vacant(slot) = decomps.entry(g.to_bits()) {
                let params = template.with_gamma(g).with_fields(fields.clone());
                slot.insert(decompose_model(&params)?);
            }
        }
    }

    specs
        .iter()
        .map(|spec| {
            if (index as usize) < spec.n_realizations {
                Ok(Some(RealizationSample {
                    index,
                    fields: fields.clone(),
                    protocols: evaluate(spec, &decomps)?,
                }))
            } else {
                Ok(None)
            }
        })
        .collect()
}

/// Runs several ensembles over one shared disorder sequence. Each
/// realization decomposes every distinct Hamiltonian once and evaluates all
/// specs against it.
pub fn run_ensembles(specs: &[EnsembleSpec]) -> Result<Vec<EnsembleResult>> {
    check_batch(specs)?;
    pin_dense_kernels();
    let count = specs.iter().map(|s| s.n_realizations).max().unwrap_or(0) as u64;
    let per_index: Vec<Vec<Option<RealizationSample>>> = (0..count)
        .into_par_iter()
        .map(|i| {
            run_realization(specs, i).map_err(|e| Error::Realization {
                index: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut results: Vec<EnsembleResult> = specs
        .iter()
        .map(|s| EnsembleResult {
            spec: s.clone(),
            samples: Vec::with_capacity(s.n_realizations),
        })
        .collect();
    for row in per_index {
        for (k, sample) in row.into_iter().enumerate() {
            if let Some(sample) = sample {
                results[k].samples.push(sample);
            }
        }
    }
    Ok(results)
}

pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EnsembleResult> {
    Ok(run_ensembles(std::slice::from_ref(spec))?.remove(0))
}
