//! Driving measures on map tables, composition words, and the algebraic
//! transforms (inverse, transpose, inverse-transpose) of a measure.

mod dd;

pub use dd::{dd_distance, GridPlan};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Model;
use crate::rng::{uniform01, StreamFamily};

const WEIGHT_TOL: f64 = 1e-12;

/// Which associated map an atom stands for. The four values form the group
/// `Z/2 × Z/2` generated by inverse and transpose.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    #[default]
    Identity,
    Inverse,
    Transpose,
    InverseTranspose,
}

impl Transform {
    fn bits(self) -> u8 {
        match self {
            Transform::Identity => 0,
            Transform::Inverse => 1,
            Transform::Transpose => 2,
            Transform::InverseTranspose => 3,
        }
    }

    fn from_bits(b: u8) -> Self {
        match b & 3 {
            0 => Transform::Identity,
            1 => Transform::Inverse,
            2 => Transform::Transpose,
            _ => Transform::InverseTranspose,
        }
    }

    /// Group product; the group is abelian so order is irrelevant.
    pub fn then(self, other: Transform) -> Transform {
        Transform::from_bits(self.bits() ^ other.bits())
    }

    pub fn has_inverse(self) -> bool {
        self.bits() & 1 == 1
    }

    pub fn has_transpose(self) -> bool {
        self.bits() & 2 == 2
    }

    /// Inverse and transpose are anti-homomorphisms of composition, so a
    /// transformed composite runs its factors in reverse.
    pub fn reverses_order(self) -> bool {
        self.has_inverse() != self.has_transpose()
    }

    pub fn is_identity(&self) -> bool {
        *self == Transform::Identity
    }
}

impl std::fmt::Display for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Transform::Identity => "identity",
            Transform::Inverse => "inverse",
            Transform::Transpose => "transpose",
            Transform::InverseTranspose => "inverse-transpose",
        };
        f.write_str(s)
    }
}

/// One map of a model's table together with its probability.
///
/// `phase` selects a member of a one-parameter family; it is set on letters
/// sampled from parametric measures and on finite atoms that discretise such
/// a family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapAtom {
    pub map_id: usize,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
    #[serde(default, skip_serializing_if = "Transform::is_identity")]
    pub transform: Transform,
}

impl MapAtom {
    pub fn new(map_id: usize, weight: f64) -> Self {
        Self {
            map_id,
            weight,
            phase: None,
            transform: Transform::Identity,
        }
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = Some(phase);
        self
    }

    pub fn with_transform(mut self, t: Transform) -> Self {
        self.transform = t;
        self
    }
}

/// A probability law on maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DrivingMeasure {
    FiniteAtoms {
        atoms: Vec<MapAtom>,
    },
    /// The family `map_id` with phase uniform on `[0, phase_period)`.
    ParametricUniformPhase {
        map_id: usize,
        phase_period: f64,
        #[serde(default, skip_serializing_if = "Transform::is_identity")]
        transform: Transform,
    },
    /// `factors[0]` is sampled and applied first.
    ConvolutionOfMeasures {
        factors: Vec<DrivingMeasure>,
    },
}

impl DrivingMeasure {
    pub fn finite(atoms: Vec<MapAtom>) -> Self {
        DrivingMeasure::FiniteAtoms { atoms }
    }

    /// Uniform weights over the given map ids.
    pub fn uniform(map_ids: &[usize]) -> Self {
        let w = 1.0 / map_ids.len() as f64;
        DrivingMeasure::FiniteAtoms {
            atoms: map_ids.iter().map(|&id| MapAtom::new(id, w)).collect(),
        }
    }

    pub fn dirac(map_id: usize) -> Self {
        Self::uniform(&[map_id])
    }

    pub fn parametric(map_id: usize, phase_period: f64) -> Self {
        DrivingMeasure::ParametricUniformPhase {
            map_id,
            phase_period,
            transform: Transform::Identity,
        }
    }

    pub fn convolution(factors: Vec<DrivingMeasure>) -> Self {
        DrivingMeasure::ConvolutionOfMeasures { factors }
    }

    /// Checks the structural invariants (weights, periods, nonempty factors).
    pub fn validate(&self) -> Result<()> {
        match self {
            DrivingMeasure::FiniteAtoms { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::Config("finite measure has no atoms".into()));
                }
                let mut total = 0.0;
                for a in atoms {
                    if !(0.0..=1.0).contains(&a.weight) || !a.weight.is_finite() {
                        return Err(Error::Config(format!(
                            "atom weight {} of map {} is outside [0, 1]",
                            a.weight, a.map_id
                        )));
                    }
                    total += a.weight;
                }
                if (total - 1.0).abs() > WEIGHT_TOL {
                    return Err(Error::Config(format!("atom weights sum to {total}, not 1")));
                }
                Ok(())
            }
            DrivingMeasure::ParametricUniformPhase { phase_period, .. } => {
                if !(*phase_period > 0.0 && phase_period.is_finite()) {
                    return Err(Error::Config(format!("phase_period {phase_period} must be positive")));
                }
                Ok(())
            }
            DrivingMeasure::ConvolutionOfMeasures { factors } => {
                if factors.is_empty() {
                    return Err(Error::Config("convolution has no factors".into()));
                }
                factors.iter().try_for_each(|f| f.validate())
            }
        }
    }

    pub fn is_finitely_supported(&self) -> bool {
        match self {
            DrivingMeasure::FiniteAtoms { .. } => true,
            DrivingMeasure::ParametricUniformPhase { .. } => false,
            DrivingMeasure::ConvolutionOfMeasures { factors } => factors.iter().all(|f| f.is_finitely_supported()),
        }
    }

    /// Every distinct one-step choice with its probability. Convolutions
    /// expand to the product of their factors' choices (factor 0 first).
    pub fn step_choices(&self) -> Result<Vec<(Vec<MapAtom>, f64)>> {
        match self {
            DrivingMeasure::FiniteAtoms { atoms } => Ok(atoms.iter().map(|a| (vec![a.clone()], a.weight)).collect()),
            DrivingMeasure::ParametricUniformPhase { .. } => Err(Error::UnsupportedMeasure(
                "parametric measures are sampled, not enumerated".into(),
            )),
            DrivingMeasure::ConvolutionOfMeasures { factors } => {
                let mut acc: Vec<(Vec<MapAtom>, f64)> = vec![(Vec::new(), 1.0)];
                for f in factors {
                    let choices = f.step_choices()?;
                    let mut next = Vec::with_capacity(acc.len() * choices.len());
                    for (prefix, w) in &acc {
                        for (letters, v) in &choices {
                            let mut l = prefix.clone();
                            l.extend(letters.iter().cloned());
                            next.push((l, w * v));
                        }
                    }
                    acc = next;
                }
                Ok(acc)
            }
        }
    }

    /// All map ids referenced anywhere in the measure.
    pub fn map_ids(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_ids(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_ids(&self, out: &mut Vec<usize>) {
        match self {
            DrivingMeasure::FiniteAtoms { atoms } => out.extend(atoms.iter().map(|a| a.map_id)),
            DrivingMeasure::ParametricUniformPhase { map_id, .. } => out.push(*map_id),
            DrivingMeasure::ConvolutionOfMeasures { factors } => factors.iter().for_each(|f| f.collect_ids(out)),
        }
    }

    fn transforms(&self, out: &mut Vec<(usize, Transform)>) {
        match self {
            DrivingMeasure::FiniteAtoms { atoms } => out.extend(atoms.iter().map(|a| (a.map_id, a.transform))),
            DrivingMeasure::ParametricUniformPhase { map_id, transform, .. } => out.push((*map_id, *transform)),
            DrivingMeasure::ConvolutionOfMeasures { factors } => factors.iter().for_each(|f| f.transforms(out)),
        }
    }

    fn apply_transform(&self, t: Transform) -> DrivingMeasure {
        match self {
            DrivingMeasure::FiniteAtoms { atoms } => DrivingMeasure::FiniteAtoms {
                atoms: atoms
                    .iter()
                    .map(|a| MapAtom {
                        transform: a.transform.then(t),
                        ..a.clone()
                    })
                    .collect(),
            },
            DrivingMeasure::ParametricUniformPhase {
                map_id,
                phase_period,
                transform,
            } => DrivingMeasure::ParametricUniformPhase {
                map_id: *map_id,
                phase_period: *phase_period,
                transform: transform.then(t),
            },
            DrivingMeasure::ConvolutionOfMeasures { factors } => {
                let mut f: Vec<DrivingMeasure> = factors.iter().map(|f| f.apply_transform(t)).collect();
                if t.reverses_order() {
                    f.reverse();
                }
                DrivingMeasure::ConvolutionOfMeasures { factors: f }
            }
        }
    }
}

/// An `n`-step composition; `letters[0]` acts first. A step of a
/// convolution contributes one letter per factor, so `letters.len()` can
/// exceed `steps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Word {
    pub letters: Vec<MapAtom>,
    /// Product of finite-atom weights; parametric letters contribute 1.
    pub weight: f64,
    pub steps: usize,
}

/// A measure compiled for repeated sampling.
#[derive(Clone, Debug)]
pub struct Sampler {
    node: SamplerNode,
}

#[derive(Clone, Debug)]
enum SamplerNode {
    Finite {
        atoms: Vec<MapAtom>,
        cdf: Vec<f64>,
    },
    Parametric {
        map_id: usize,
        period: f64,
        transform: Transform,
    },
    Convolution(Vec<SamplerNode>),
}

impl Sampler {
    pub fn new(measure: &DrivingMeasure) -> Result<Self> {
        measure.validate()?;
        Ok(Self { node: compile(measure) })
    }

    /// Append the letters of one step.
    pub fn sample_step<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<MapAtom>) {
        sample_node(&self.node, rng, out)
    }

    pub fn sample_word<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Word {
        let mut letters = Vec::with_capacity(n);
        for _ in 0..n {
            self.sample_step(rng, &mut letters);
        }
        let weight = letters.iter().map(|a| a.weight).product();
        Word {
            letters,
            weight,
            steps: n,
        }
    }
}

fn compile(m: &DrivingMeasure) -> SamplerNode {
    match m {
        DrivingMeasure::FiniteAtoms { atoms } => {
            let mut acc = 0.0;
            let mut cdf: Vec<f64> = atoms
                .iter()
                .map(|a| {
                    acc += a.weight;
                    acc
                })
                .collect();
            if let Some(last) = cdf.last_mut() {
                *last = f64::INFINITY;
            }
            SamplerNode::Finite {
                atoms: atoms.clone(),
                cdf,
            }
        }
        DrivingMeasure::ParametricUniformPhase {
            map_id,
            phase_period,
            transform,
        } => SamplerNode::Parametric {
            map_id: *map_id,
            period: *phase_period,
            transform: *transform,
        },
        DrivingMeasure::ConvolutionOfMeasures { factors } => {
            SamplerNode::Convolution(factors.iter().map(compile).collect())
        }
    }
}

fn sample_node<R: Rng + ?Sized>(node: &SamplerNode, rng: &mut R, out: &mut Vec<MapAtom>) {
    match node {
        SamplerNode::Finite { atoms, cdf } => {
            let u = uniform01(rng);
            let i = cdf.partition_point(|&c| c <= u).min(atoms.len() - 1);
            out.push(atoms[i].clone());
        }
        SamplerNode::Parametric {
            map_id,
            period,
            transform,
        } => {
            let phase = uniform01(rng) * period;
            out.push(MapAtom {
                map_id: *map_id,
                weight: 1.0,
                phase: Some(phase),
                transform: *transform,
            });
        }
        SamplerNode::Convolution(parts) => {
            for p in parts {
                sample_node(p, rng, out);
            }
        }
    }
}

/// Draw one word of `n` i.i.d. steps. The word depends only on
/// `(measure, n, seed)`.
pub fn sample_word(measure: &DrivingMeasure, n: usize, seed: u64) -> Result<Word> {
    if n == 0 {
        return Err(Error::Config("word length must be at least 1".into()));
    }
    let sampler = Sampler::new(measure)?;
    let mut rng = StreamFamily::new(seed).stream(0);
    Ok(sampler.sample_word(&mut rng, n))
}

/// Number of distinct `n`-step words, saturating.
pub fn word_count(measure: &DrivingMeasure, n: usize) -> Result<u128> {
    let m = measure.step_choices()?.len() as u128;
    let mut total: u128 = 1;
    for _ in 0..n {
        total = total.saturating_mul(m);
    }
    Ok(total)
}

/// Every `n`-step word with its exact probability.
pub fn enumerate_words(measure: &DrivingMeasure, n: usize, cap: u128) -> Result<Vec<Word>> {
    if n == 0 {
        return Err(Error::Config("word length must be at least 1".into()));
    }
    measure.validate()?;
    let choices = measure.step_choices()?;
    let total = word_count(measure, n)?;
    if total > cap {
        return Err(Error::BudgetExceeded {
            what: format!("enumeration of {}^{} words", choices.len(), n),
            required: total,
            limit: cap,
        });
    }
    let m = choices.len();
    let mut words = Vec::with_capacity(total as usize);
    let mut digits = vec![0usize; n];
    loop {
        let mut letters = Vec::new();
        let mut weight = 1.0;
        for &d in &digits {
            letters.extend(choices[d].0.iter().cloned());
            weight *= choices[d].1;
        }
        words.push(Word {
            letters,
            weight,
            steps: n,
        });
        // odometer; the last step varies fastest
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(words);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < m {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// The measure whose atoms are the `kind`-transformed maps, weights kept.
pub fn transform_measure(model: &Model, measure: &DrivingMeasure, kind: Transform) -> Result<DrivingMeasure> {
    measure.validate()?;
    let mut used = Vec::new();
    measure.transforms(&mut used);
    for (id, t) in used {
        let target = t.then(kind);
        if !model.supports_transform(id, target) {
            return Err(Error::UnsupportedTransform {
                transform: target.to_string(),
                model: model.name().to_string(),
            });
        }
    }
    Ok(measure.apply_transform(kind))
}
