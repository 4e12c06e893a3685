use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cocycle::{Budget, Bundle, SearchPlan};
use crate::error::{Error, Result};
use crate::measure::{DrivingMeasure, GridPlan};
use crate::models::ModelConfig;
use crate::spectral::ProbeSet;
use crate::stats::{CorrelationMethod, GreenKuboOptions, Observable};

/// One experiment: a model, its driving measure, and what to compute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub model: ModelConfig,
    /// Defaults to the model's template measure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<DrivingMeasure>,
    #[serde(default)]
    pub budget: Budget,
    pub experiment: Experiment,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }
}

/// An observable in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObservableSpec {
    /// `amplitude · cos(2π⟨mode, x⟩)`.
    Cos {
        mode: Vec<i64>,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Sin {
        mode: Vec<i64>,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `Σ (re + i·im) e^{2πi⟨mode, x⟩}`.
    Terms { dim: usize, terms: Vec<TermSpec> },
    /// Sum of other observables.
    Sum { parts: Vec<ObservableSpec> },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub mode: Vec<i64>,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl ObservableSpec {
    pub fn build(&self) -> Result<Observable> {
        match self {
            ObservableSpec::Cos { mode, amplitude } => Ok(Observable::cos_mode(mode, *amplitude)),
            ObservableSpec::Sin { mode, amplitude } => Ok(Observable::sin_mode(mode, *amplitude)),
            ObservableSpec::Terms { dim, terms } => {
                Observable::new(*dim, terms.iter().map(|t| (t.mode.clone(), Complex64::new(t.re, t.im))))
            }
            ObservableSpec::Sum { parts } => {
                let built = parts.iter().map(|p| p.build()).collect::<Result<Vec<_>>>()?;
                let dim = built
                    .first()
                    .map(|o| o.dim)
                    .ok_or_else(|| Error::Config("empty observable sum".into()))?;
                Observable::new(dim, built.iter().flat_map(|o| o.terms().iter().cloned()))
            }
        }
    }
}

fn default_period() -> usize {
    10
}

fn default_s_list() -> Vec<f64> {
    vec![0.02, 0.05, 0.1]
}

fn default_pairs() -> usize {
    10_000
}

fn default_word_length() -> usize {
    8
}

fn default_samples() -> usize {
    100_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FurstenbergSpec {
    pub burn_in: usize,
    pub samples: usize,
    /// Seed of the projective orbit; defaults to the run seed plus one.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyMember {
    pub label: String,
    pub parameter: f64,
    pub measure: DrivingMeasure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StabilityFamily {
    /// Uniform Pierrehumbert phases replaced by `q` equally spaced ones.
    PhaseDiscretisation {
        qs: Vec<usize>,
    },
    Measures {
        members: Vec<FamilyMember>,
    },
}

/// What to compute, with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    /// Expansion rate after `n` steps. With `direction`, at that frame;
    /// otherwise the infimum over frames.
    Expansion {
        n: usize,
        #[serde(default)]
        bundle: Bundle,
        #[serde(default)]
        base: Option<Vec<f64>>,
        #[serde(default)]
        direction: Option<Vec<f64>>,
        #[serde(default)]
        search: Option<SearchPlan>,
    },
    Lyapunov {
        t: usize,
        #[serde(default)]
        x0: Option<Vec<f64>>,
        #[serde(default = "default_period")]
        period: usize,
        #[serde(default)]
        furstenberg: Option<FurstenbergSpec>,
    },
    Conormal {
        #[serde(default = "default_pairs")]
        pairs: usize,
        #[serde(default = "default_word_length")]
        word_length: usize,
    },
    Spectrum {
        k: usize,
        #[serde(default)]
        s: f64,
    },
    EssentialRadius {
        #[serde(default = "default_s_list")]
        s_list: Vec<f64>,
        r: f64,
        n_max: usize,
        #[serde(default)]
        probes: ProbeSet,
    },
    LasotaYorke {
        s: f64,
        s_bar: f64,
        r: f64,
        n_max: usize,
        n_list: Vec<usize>,
        #[serde(default)]
        probes: ProbeSet,
    },
    Stability {
        k: usize,
        #[serde(default)]
        s: f64,
        family: StabilityFamily,
        #[serde(default)]
        grid: Option<GridPlan>,
    },
    Correlation {
        phi: ObservableSpec,
        #[serde(default)]
        psi: Option<ObservableSpec>,
        n_max: usize,
        method: CorrelationMethod,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        k: Option<usize>,
    },
    MultipleMixing {
        phi0: ObservableSpec,
        phi1: ObservableSpec,
        phi2: ObservableSpec,
        n1: usize,
        n2: usize,
        method: CorrelationMethod,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        k: Option<usize>,
    },
    GreenKubo {
        phi: ObservableSpec,
        #[serde(default)]
        green_kubo: GreenKuboOptions,
    },
    Clt {
        phi: ObservableSpec,
        n: usize,
        trials: usize,
        #[serde(default)]
        green_kubo: GreenKuboOptions,
    },
    BerryEsseen {
        phi: ObservableSpec,
        horizons: Vec<usize>,
        trials: usize,
        #[serde(default)]
        green_kubo: GreenKuboOptions,
    },
    DdDistance {
        other: DrivingMeasure,
        #[serde(default)]
        grid: GridPlan,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Expansion { .. } => "expansion",
            Experiment::Lyapunov { .. } => "lyapunov",
            Experiment::Conormal { .. } => "conormal",
            Experiment::Spectrum { .. } => "spectrum",
            Experiment::EssentialRadius { .. } => "essential-radius",
            Experiment::LasotaYorke { .. } => "lasota-yorke",
            Experiment::Stability { .. } => "stability",
            Experiment::Correlation { .. } => "correlation",
            Experiment::MultipleMixing { .. } => "multiple-mixing",
            Experiment::GreenKubo { .. } => "green-kubo",
            Experiment::Clt { .. } => "clt",
            Experiment::BerryEsseen { .. } => "berry-esseen",
            Experiment::DdDistance { .. } => "dd-distance",
        }
    }
}
