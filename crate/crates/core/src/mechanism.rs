//! Selection mechanisms and the expected-ratio evaluator.
//!
//! Probabilities are exact rationals. Any mass not assigned to an agent is
//! kept as explicit abstention ("select nobody") rather than renormalized.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::graph::{Agent, Closure, Dag};
use crate::influence::{influential_set, most_influential};

pub type Prob = BigRational;

pub fn prob(numer: i64, denom: i64) -> Prob {
    Prob::new(BigInt::from(numer), BigInt::from(denom))
}

/// `1 / 2^exp`.
pub fn dyadic(exp: usize) -> Prob {
    Prob::new(BigInt::one(), BigInt::one() << exp)
}

pub fn to_f64(p: &Prob) -> f64 {
    p.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MechanismError {
    #[error("probability {value} for agent {agent} is outside [0, 1]")]
    OutOfRange { agent: usize, value: String },
    #[error("probabilities sum to {total}, above 1")]
    Overfull { total: String },
    #[error("distribution covers {got} agents, graph has {n}")]
    SizeMismatch { got: usize, n: usize },
    #[error("unknown mechanism {0:?}")]
    UnknownMechanism(String),
}

/// Per-agent selection probabilities plus the abstention mass; the two
/// always sum to exactly one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionDistribution {
    probs: Vec<Prob>,
    abstain: Prob,
}

impl SelectionDistribution {
    /// Abstention is whatever mass `probs` leaves over.
    pub fn new(probs: Vec<Prob>) -> Result<Self, MechanismError> {
        for (i, p) in probs.iter().enumerate() {
            if p.is_negative() || *p > Prob::one() {
                return Err(MechanismError::OutOfRange {
                    agent: i + 1,
                    value: p.to_string(),
                });
            }
        }
        let total: Prob = probs.iter().sum();
        if total > Prob::one() {
            return Err(MechanismError::Overfull {
                total: total.to_string(),
            });
        }
        Ok(SelectionDistribution {
            abstain: Prob::one() - total,
            probs,
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Zero for agents outside the distribution's range.
    pub fn prob(&self, agent: Agent) -> Prob {
        self.probs
            .get(agent.index())
            .cloned()
            .unwrap_or_else(Prob::zero)
    }

    pub fn probs(&self) -> &[Prob] {
        &self.probs
    }

    pub fn abstain(&self) -> &Prob {
        &self.abstain
    }

    /// Agents with positive probability, by ID.
    pub fn support(&self) -> impl Iterator<Item = (Agent, &Prob)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_positive())
            .map(|(i, p)| (Agent::from_index(i), p))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.probs.iter().map(to_f64).collect()
    }
}

impl Serialize for SelectionDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let exact: BTreeMap<usize, String> = self
            .support()
            .map(|(a, p)| (a.id(), p.to_string()))
            .collect();
        let float: BTreeMap<usize, f64> =
            self.support().map(|(a, p)| (a.id(), to_f64(p))).collect();
        let mut s = serializer.serialize_struct("SelectionDistribution", 4)?;
        s.serialize_field("probabilities", &exact)?;
        s.serialize_field("probabilities_float", &float)?;
        s.serialize_field("abstain", &self.abstain.to_string())?;
        s.serialize_field("abstain_float", &to_f64(&self.abstain))?;
        s.end()
    }
}

/// A selection mechanism maps a reported graph to a distribution over its
/// agents. Implementations must be deterministic.
pub trait Mechanism: Sync {
    fn name(&self) -> &str;
    fn select(&self, dag: &Dag) -> SelectionDistribution;
}

/// Ranks the influential set and gives the `j`-th member (1-based, `s_1`
/// the most influential) probability `1 / 2^(m - j + 1)`.
pub fn geometric(dag: &Dag) -> SelectionDistribution {
    let set = influential_set(dag);
    let m = set.len();
    let mut probs = vec![Prob::zero(); dag.n()];
    for (pos, member) in set.members().iter().enumerate() {
        probs[member.agent.index()] = dyadic(m - pos);
    }
    SelectionDistribution::new(probs).expect("geometric weights sum below one")
}

pub fn uniform(dag: &Dag) -> SelectionDistribution {
    let n = dag.n() as i64;
    SelectionDistribution::new(vec![prob(1, n); dag.n()]).expect("uniform weights sum to one")
}

/// Picks the progeny maximum outright. Not incentive compatible.
pub fn optimal_non_ic(dag: &Dag) -> SelectionDistribution {
    let mut probs = vec![Prob::zero(); dag.n()];
    probs[most_influential(dag).index()] = Prob::one();
    SelectionDistribution::new(probs).expect("point mass")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismKind {
    Geometric,
    Uniform,
    OptimalNonIc,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 3] = [
        MechanismKind::Geometric,
        MechanismKind::Uniform,
        MechanismKind::OptimalNonIc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MechanismKind::Geometric => "geometric",
            MechanismKind::Uniform => "uniform",
            MechanismKind::OptimalNonIc => "optimal-non-ic",
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MechanismKind {
    type Err = MechanismError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MechanismKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| MechanismError::UnknownMechanism(s.to_string()))
    }
}

impl Mechanism for MechanismKind {
    fn name(&self) -> &str {
        self.as_str()
    }

    fn select(&self, dag: &Dag) -> SelectionDistribution {
        match self {
            MechanismKind::Geometric => geometric(dag),
            MechanismKind::Uniform => uniform(dag),
            MechanismKind::OptimalNonIc => optimal_non_ic(dag),
        }
    }
}

/// Wraps a closure as a [`Mechanism`]; handy for negative controls.
pub struct FnMechanism<F> {
    name: String,
    f: F,
}

impl<F> FnMechanism<F>
where
    F: Fn(&Dag) -> SelectionDistribution + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        FnMechanism {
            name: name.into(),
            f,
        }
    }
}

impl<F> Mechanism for FnMechanism<F>
where
    F: Fn(&Dag) -> SelectionDistribution + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&self, dag: &Dag) -> SelectionDistribution {
        (self.f)(dag)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioReport {
    pub expected_progeny: Prob,
    pub max_progeny: usize,
    pub ratio: Prob,
}

impl RatioReport {
    pub fn ratio_f64(&self) -> f64 {
        to_f64(&self.ratio)
    }
}

impl Serialize for RatioReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("RatioReport", 5)?;
        s.serialize_field("expected_progeny", &self.expected_progeny.to_string())?;
        s.serialize_field("expected_progeny_float", &to_f64(&self.expected_progeny))?;
        s.serialize_field("max_progeny", &self.max_progeny)?;
        s.serialize_field("ratio", &self.ratio.to_string())?;
        s.serialize_field("ratio_float", &to_f64(&self.ratio))?;
        s.end()
    }
}

/// `R(G) = Σ x_i p_i / p*`, exactly.
pub fn expected_ratio(
    dag: &Dag,
    dist: &SelectionDistribution,
) -> Result<RatioReport, MechanismError> {
    if dist.len() != dag.n() {
        return Err(MechanismError::SizeMismatch {
            got: dist.len(),
            n: dag.n(),
        });
    }
    let table = Closure::new(dag).progeny();
    let expected: Prob = dist
        .support()
        .map(|(a, p)| p * BigInt::from(table.get(a)))
        .sum();
    let max = table.max();
    Ok(RatioReport {
        ratio: &expected / BigInt::from(max),
        expected_progeny: expected,
        max_progeny: max,
    })
}
