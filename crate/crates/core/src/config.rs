//! Experiment description and its flat `key = value` file format.
//!
//! The format is line-oriented and diff-friendly: one `key = value` pair per
//! line, `#` starts a comment, sections are spelled with dotted keys. A full
//! incoherent-regime example:
//!
//! ```text
//! regime = incoherent
//! eta = 0.268
//! g = 10.0
//! recoil.enabled = true
//! recoil.eta1 = 0.142
//! recoil.eta2 = 0.142
//! recoil.gamma1_over_gamma2 = 2.8787879
//! n_max = 350
//! cycles = 400
//! initial.delta_n = 0
//! checkpoints = 0,100,200,400
//! seed = 42
//! leak_tolerance = 1e-3
//! trajectories = 20000
//! ```
//!
//! Coherent configs replace `g` with `pulse_area`. Exactly one of the two
//! drive keys must be present and it must match the regime. The initial
//! state is either `initial.delta_n` or `initial.file` (a CSV `n,prob`
//! distribution). The pump is assumed to reach its stationary state every
//! cycle, so only the branching ratio and the emission Lamb–Dicke parameters
//! enter; pump saturation and trap frequency do not appear here.

use std::path::{Path, PathBuf};

use crate::engine::{
    self, cycle_kernel, default_n_max, pump_kernel, CycleKernel, MomentSeries,
    NumberDistribution, RecoilKernel, RecoilParams,
};
use crate::error::{Error, Result};
use crate::montecarlo::{run_ensemble, EnsembleOutput, TrajectoryConfig};
use crate::rates::{coherent_rates, incoherent_rates, Regime, TransitionRates};
use crate::specfun::{tabulate_coupling, CouplingProfile};

/// Spontaneous-recoil description of the optical pumping stage.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoilConfig {
    pub enabled: bool,
    pub eta1: f64,
    pub eta2: f64,
    pub gamma1_over_gamma2: f64,
}

impl Default for RecoilConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            eta1: 0.142,
            eta2: 0.142,
            gamma1_over_gamma2: 9.5 / 3.3,
        }
    }
}

impl RecoilConfig {
    /// Probability of the decay branching back to the pumped state.
    pub fn branch_p1(&self) -> f64 {
        self.gamma1_over_gamma2 / (1.0 + self.gamma1_over_gamma2)
    }

    pub fn params(&self) -> Option<RecoilParams> {
        self.enabled.then(|| RecoilParams {
            eta1: self.eta1,
            eta2: self.eta2,
            branch_p1: self.branch_p1(),
        })
    }
}

/// Initial vibrational state.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Delta(usize),
    File(PathBuf),
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Delta(0)
    }
}

/// Complete description of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub regime: Regime,
    pub eta: f64,
    /// Sideband pulse area (coherent regime only).
    pub pulse_area: Option<f64>,
    /// Saturation-time product `G` (incoherent regime only).
    pub saturation: Option<f64>,
    pub recoil: RecoilConfig,
    pub n_max: usize,
    pub cycles: usize,
    pub initial: InitialState,
    pub checkpoints: Vec<usize>,
    pub seed: u64,
    pub leak_tolerance: f64,
    pub n_trajectories: usize,
}

#[derive(Default)]
struct RawConfig {
    regime: Option<String>,
    eta: Option<f64>,
    pulse_area: Option<f64>,
    saturation: Option<f64>,
    recoil_enabled: Option<bool>,
    recoil_eta1: Option<f64>,
    recoil_eta2: Option<f64>,
    recoil_ratio: Option<f64>,
    n_max: Option<usize>,
    cycles: Option<usize>,
    delta_n: Option<usize>,
    initial_file: Option<String>,
    checkpoints: Option<Vec<usize>>,
    seed: Option<u64>,
    leak_tolerance: Option<f64>,
    trajectories: Option<usize>,
}

fn bad_value(key: &str, value: &str) -> Error {
    Error::Config(format!("invalid value for {key}: {value:?}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse::<T>().map_err(|_| bad_value(key, value))
}

impl ExperimentConfig {
    /// Parse the flat `key = value` format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (idx, full_line) in text.lines().enumerate() {
            let line = match full_line.find('#') {
                Some(pos) => &full_line[..pos],
                None => full_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", idx + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "regime" => raw.regime = Some(value.to_string()),
                "eta" => raw.eta = Some(parse_num(key, value)?),
                "pulse_area" => raw.pulse_area = Some(parse_num(key, value)?),
                "g" => raw.saturation = Some(parse_num(key, value)?),
                "recoil.enabled" => {
                    raw.recoil_enabled = Some(match value {
                        "true" => true,
                        "false" => false,
                        _ => return Err(bad_value(key, value)),
                    })
                }
                "recoil.eta1" => raw.recoil_eta1 = Some(parse_num(key, value)?),
                "recoil.eta2" => raw.recoil_eta2 = Some(parse_num(key, value)?),
                "recoil.gamma1_over_gamma2" => raw.recoil_ratio = Some(parse_num(key, value)?),
                "n_max" => raw.n_max = Some(parse_num(key, value)?),
                "cycles" => raw.cycles = Some(parse_num(key, value)?),
                "initial.delta_n" => raw.delta_n = Some(parse_num(key, value)?),
                "initial.file" => raw.initial_file = Some(value.to_string()),
                "checkpoints" => {
                    let list = value
                        .split(',')
                        .map(|v| parse_num::<usize>(key, v.trim()))
                        .collect::<Result<Vec<_>>>()?;
                    raw.checkpoints = Some(list);
                }
                "seed" => raw.seed = Some(parse_num(key, value)?),
                "leak_tolerance" => raw.leak_tolerance = Some(parse_num(key, value)?),
                "trajectories" => raw.trajectories = Some(parse_num(key, value)?),
                _ => return Err(Error::Config(format!("unknown key {key:?}"))),
            }
        }
        Self::assemble(raw)
    }

    fn assemble(raw: RawConfig) -> Result<Self> {
        let regime = match raw
            .regime
            .ok_or_else(|| Error::Config("missing key: regime".into()))?
            .as_str()
        {
            "coherent" => Regime::Coherent,
            "incoherent" => Regime::Incoherent,
            other => return Err(Error::Config(format!("unknown regime {other:?}"))),
        };
        let eta = raw
            .eta
            .ok_or_else(|| Error::Config("missing key: eta".into()))?;
        let cycles = raw
            .cycles
            .ok_or_else(|| Error::Config("missing key: cycles".into()))?;

        let defaults = RecoilConfig::default();
        let recoil = RecoilConfig {
            enabled: raw.recoil_enabled.unwrap_or(defaults.enabled),
            eta1: raw.recoil_eta1.unwrap_or(defaults.eta1),
            eta2: raw.recoil_eta2.unwrap_or(defaults.eta2),
            gamma1_over_gamma2: raw.recoil_ratio.unwrap_or(defaults.gamma1_over_gamma2),
        };

        let initial = match (raw.delta_n, raw.initial_file) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "initial.delta_n and initial.file are mutually exclusive".into(),
                ))
            }
            (None, Some(path)) => InitialState::File(PathBuf::from(path)),
            (delta, None) => InitialState::Delta(delta.unwrap_or(0)),
        };

        let n_max = raw.n_max.unwrap_or_else(|| {
            let start = match initial {
                InitialState::Delta(n) => n as f64,
                InitialState::File(_) => 0.0,
            };
            default_n_max(start + cycles as f64 / 2.0)
        });

        let config = Self {
            regime,
            eta,
            pulse_area: raw.pulse_area,
            saturation: raw.saturation,
            recoil,
            n_max,
            cycles,
            initial,
            checkpoints: raw.checkpoints.unwrap_or_else(|| vec![cycles]),
            seed: raw.seed.unwrap_or(1),
            leak_tolerance: raw.leak_tolerance.unwrap_or(engine::DEFAULT_LEAK_TOLERANCE),
            n_trajectories: raw.trajectories.unwrap_or(10_000),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() || self.eta < 0.0 {
            return Err(Error::Config(format!("eta must be >= 0, got {}", self.eta)));
        }
        match (self.regime, self.pulse_area, self.saturation) {
            (Regime::Coherent, Some(area), None) => {
                if !area.is_finite() || area < 0.0 {
                    return Err(Error::Config(format!(
                        "pulse_area must be >= 0, got {area}"
                    )));
                }
            }
            (Regime::Incoherent, None, Some(g)) => {
                if !g.is_finite() || g < 0.0 {
                    return Err(Error::Config(format!("g must be >= 0, got {g}")));
                }
            }
            (Regime::Coherent, _, _) => {
                return Err(Error::Config(
                    "coherent regime needs pulse_area (and no g)".into(),
                ))
            }
            (Regime::Incoherent, _, _) => {
                return Err(Error::Config(
                    "incoherent regime needs g (and no pulse_area)".into(),
                ))
            }
        }
        if self.recoil.eta1 < 0.0 || self.recoil.eta2 < 0.0 {
            return Err(Error::Config("recoil Lamb-Dicke parameters must be >= 0".into()));
        }
        if !self.recoil.gamma1_over_gamma2.is_finite() || self.recoil.gamma1_over_gamma2 <= 0.0 {
            return Err(Error::Config(format!(
                "recoil.gamma1_over_gamma2 must be > 0, got {}",
                self.recoil.gamma1_over_gamma2
            )));
        }
        if self.n_max < 1 {
            return Err(Error::Config("n_max must be >= 1".into()));
        }
        if let InitialState::Delta(n) = self.initial {
            if n > self.n_max {
                return Err(Error::Config(format!(
                    "initial.delta_n = {n} exceeds n_max = {}",
                    self.n_max
                )));
            }
        }
        if self.checkpoints.is_empty() {
            return Err(Error::Config("checkpoints must not be empty".into()));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("checkpoints must be strictly ascending".into()));
        }
        if *self.checkpoints.last().unwrap() > self.cycles {
            return Err(Error::Config(format!(
                "checkpoint {} beyond cycles = {}",
                self.checkpoints.last().unwrap(),
                self.cycles
            )));
        }
        if !self.leak_tolerance.is_finite() || self.leak_tolerance <= 0.0 {
            return Err(Error::Config("leak_tolerance must be > 0".into()));
        }
        if self.n_trajectories == 0 {
            return Err(Error::Config("trajectories must be >= 1".into()));
        }
        Ok(())
    }

    pub fn coupling_profile(&self) -> CouplingProfile {
        tabulate_coupling(self.eta, self.n_max)
    }

    /// Per-cycle transition rates for the configured regime and drive.
    pub fn transition_rates(&self) -> TransitionRates {
        let profile = self.coupling_profile();
        match self.regime {
            Regime::Coherent => coherent_rates(&profile, self.pulse_area.unwrap()),
            Regime::Incoherent => incoherent_rates(&profile, self.saturation.unwrap()),
        }
    }

    pub fn recoil_params(&self) -> Option<RecoilParams> {
        self.recoil.params()
    }

    /// Composite pump recoil kernel, when recoil is enabled.
    pub fn pump(&self) -> Result<Option<RecoilKernel>> {
        match self.recoil_params() {
            Some(params) => Ok(Some(pump_kernel(params, self.n_max)?)),
            None => Ok(None),
        }
    }

    /// Full cycle kernel for the deterministic engine.
    pub fn kernel(&self) -> Result<CycleKernel> {
        cycle_kernel(self.transition_rates(), self.pump()?)
    }

    /// Initial number distribution (reading the distribution file if one was
    /// configured), padded or checked against `n_max`.
    pub fn initial_distribution(&self) -> Result<NumberDistribution> {
        match &self.initial {
            InitialState::Delta(n) => NumberDistribution::delta(*n, self.n_max),
            InitialState::File(path) => {
                let text = std::fs::read_to_string(path)?;
                let mut probs = crate::io::read_distribution_csv(&text)?;
                if probs.len() > self.n_max + 1 {
                    return Err(Error::Config(format!(
                        "initial distribution has {} levels but n_max = {}",
                        probs.len() - 1,
                        self.n_max
                    )));
                }
                probs.resize(self.n_max + 1, 0.0);
                NumberDistribution::from_probs(probs)
            }
        }
    }

    /// Run the deterministic evolution with the configured checkpoints.
    pub fn run_evolution(&self) -> Result<(Vec<(usize, NumberDistribution)>, MomentSeries)> {
        let kernel = self.kernel()?;
        let p0 = self.initial_distribution()?;
        engine::evolve_recorded(
            &p0,
            &kernel,
            self.cycles,
            &self.checkpoints,
            self.leak_tolerance,
        )
    }

    /// Run the trajectory ensemble with the configured checkpoints and seed.
    pub fn run_trajectories(&self) -> Result<EnsembleOutput> {
        let rates = self.transition_rates();
        let p0 = self.initial_distribution()?;
        let cfg = TrajectoryConfig {
            n_trajectories: self.n_trajectories,
            master_seed: self.seed,
            checkpoints: self.checkpoints.clone(),
        };
        run_ensemble(&p0, &rates, self.recoil_params().as_ref(), &cfg)
    }
}
