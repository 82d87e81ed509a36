//! The equalized worst-case ratio system behind the `1/(1 + ln 2)` ceiling
//! for incentive compatible and fair mechanisms.
//!
//! On the family `G_k, ..., G_{2k-1}` (see [`worst_case_graph`]) a root
//! mechanism that gives agent `i` probability `β_{i-k}` whenever `i` is
//! influential scores
//!
//! ```text
//! R(G_j) = Σ_{i=k}^{j} β_{i-k} · i / j
//! ```
//!
//! Requiring every `R(G_j)` to equal a common `r` with `Σ β = 1` is a
//! lower-triangular system. Forward substitution gives `β_0 = r`,
//! `β_t = r / (k + t)`, hence `r_k = 1 / (1 + H_{2k-1} - H_k)`, which
//! decreases to `1 / (1 + ln 2)`.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::generators::{worst_case_graph, GeneratorError};
use crate::graph::{Agent, Dag};
use crate::influence::influential_set;
use crate::mechanism::{expected_ratio, Mechanism, Prob, SelectionDistribution};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("k = {0} is too small (need k >= 2)")]
    KTooSmall(usize),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
}

fn check_k(k: usize) -> Result<(), BoundError> {
    if k < 2 {
        Err(BoundError::KTooSmall(k))
    } else {
        Ok(())
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Above this `k` the harmonic tail switches from summation to the
/// asymptotic expansion.
pub const DIRECT_SUM_LIMIT: usize = 10_000_000;

/// `Σ_{j=k+1}^{2k-1} 1/j` by compensated summation, smallest terms first.
pub fn harmonic_tail_direct(k: usize) -> f64 {
    (k + 1..2 * k)
        .rev()
        .map(|j| 1.0 / j as f64)
        .collect::<CompensatedSum>()
        .value()
}

/// `H_{2k-1} - H_k` from the Euler–Maclaurin expansion of `H_n`.
pub fn harmonic_tail_asymptotic(k: usize) -> f64 {
    let k = k as f64;
    let a = 2.0 * k - 1.0;
    let log = std::f64::consts::LN_2 + (-0.5 / k).ln_1p();
    let c1 = 0.5 / a - 0.5 / k;
    let c2 = -(1.0 / (12.0 * a * a) - 1.0 / (12.0 * k * k));
    let c4 = 1.0 / (120.0 * a.powi(4)) - 1.0 / (120.0 * k.powi(4));
    let c6 = -(1.0 / (252.0 * a.powi(6)) - 1.0 / (252.0 * k.powi(6)));
    log + c1 + c2 + c4 + c6
}

pub fn harmonic_tail(k: usize) -> f64 {
    if k <= DIRECT_SUM_LIMIT {
        harmonic_tail_direct(k)
    } else {
        harmonic_tail_asymptotic(k)
    }
}

/// `r_k = 1 / (1 + H_{2k-1} - H_k)`.
pub fn equalized_ratio(k: usize) -> Result<f64, BoundError> {
    check_k(k)?;
    Ok(1.0 / (1.0 + harmonic_tail(k)))
}

/// `1 / (1 + ln 2)`.
pub fn limit_constant() -> f64 {
    1.0 / (1.0 + std::f64::consts::LN_2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSolution {
    pub k: usize,
    /// `β_0, ..., β_{k-1}`: the probability of agents `k, ..., 2k-1`.
    pub betas: Vec<f64>,
    pub ratio: f64,
}

impl BoundSolution {
    /// `R(G_j)` for `j` in `k..=2k-1` under these weights.
    pub fn graph_ratios(&self) -> Vec<f64> {
        let k = self.k;
        (k..2 * k)
            .map(|j| {
                (k..=j)
                    .map(|i| self.betas[i - k] * i as f64 / j as f64)
                    .collect::<CompensatedSum>()
                    .value()
            })
            .collect()
    }
}

/// Closed-form solution of the equalized system.
pub fn solve_equalized_system(k: usize) -> Result<BoundSolution, BoundError> {
    let ratio = equalized_ratio(k)?;
    let betas = (0..k)
        .map(|t| {
            if t == 0 {
                ratio
            } else {
                ratio / (k + t) as f64
            }
        })
        .collect();
    Ok(BoundSolution { k, betas, ratio })
}

/// A square lower-triangular matrix accessed entry by entry.
pub trait LowerTriangular {
    fn dim(&self) -> usize;
    /// Entry at `(row, col)` with `col <= row`.
    fn entry(&self, row: usize, col: usize) -> f64;
}

/// Solves `L x = b` by forward substitution with compensated row sums.
pub fn forward_substitute<M: LowerTriangular + ?Sized>(matrix: &M, rhs: &[f64]) -> Vec<f64> {
    let n = matrix.dim();
    assert_eq!(rhs.len(), n, "right-hand side has the wrong length");
    let mut x = Vec::with_capacity(n);
    for (row, &b) in rhs.iter().enumerate() {
        let mut acc = CompensatedSum::default();
        acc.add(b);
        for (col, &xc) in x.iter().enumerate() {
            acc.add(-matrix.entry(row, col) * xc);
        }
        x.push(acc.value() / matrix.entry(row, row));
    }
    x
}

/// Row-major dense lower-triangular storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLower {
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl DenseLower {
    /// `rows[r]` must hold exactly `r + 1` entries.
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), r + 1, "row {r} must have {} entries", r + 1);
        }
        DenseLower {
            n: rows.len(),
            rows,
        }
    }
}

impl LowerTriangular for DenseLower {
    fn dim(&self) -> usize {
        self.n
    }

    fn entry(&self, row: usize, col: usize) -> f64 {
        self.rows[row][col]
    }
}

/// The equalized system with `r` fixed to one: row `j - k` reads
/// `Σ_{i=k}^{j} (i / j) y_{i-k} = 1`.
#[derive(Debug, Clone, Copy)]
pub struct EqualizedSystem {
    pub k: usize,
}

impl LowerTriangular for EqualizedSystem {
    fn dim(&self) -> usize {
        self.k
    }

    fn entry(&self, row: usize, col: usize) -> f64 {
        (self.k + col) as f64 / (self.k + row) as f64
    }
}

/// Generic route: forward-substitute with `r = 1`, then rescale so the
/// weights sum to one.
pub fn solve_equalized_generic(k: usize) -> Result<BoundSolution, BoundError> {
    check_k(k)?;
    let y = forward_substitute(&EqualizedSystem { k }, &vec![1.0; k]);
    let total = y.iter().copied().collect::<CompensatedSum>().value();
    let ratio = 1.0 / total;
    Ok(BoundSolution {
        k,
        betas: y.iter().map(|v| v * ratio).collect(),
        ratio,
    })
}

/// The equalized solution in exact arithmetic: `(r_k, β)`.
pub fn solve_equalized_exact(k: usize) -> Result<(Prob, Vec<Prob>), BoundError> {
    check_k(k)?;
    let tail: Prob = (k + 1..2 * k)
        .map(|j| Prob::new(BigInt::one(), BigInt::from(j)))
        .sum();
    let ratio = Prob::one() / (Prob::one() + tail);
    let betas = (0..k)
        .map(|t| {
            if t == 0 {
                ratio.clone()
            } else {
                &ratio / BigInt::from(k + t)
            }
        })
        .collect();
    Ok((ratio, betas))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub k: usize,
    pub ratio: f64,
    pub gap: f64,
}

/// `(k, r_k, r_k - 1/(1 + ln 2))`, sorted by `k`.
pub fn convergence_table(ks: &[usize]) -> Result<Vec<ConvergenceRow>, BoundError> {
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let limit = limit_constant();
    ks.into_iter()
        .map(|k| {
            let ratio = equalized_ratio(k)?;
            Ok(ConvergenceRow {
                k,
                ratio,
                gap: ratio - limit,
            })
        })
        .collect()
}

/// Root mechanism on the worst-case family: agent `i >= k` gets `β_{i-k}`
/// whenever it is influential, every other agent gets nothing.
#[derive(Debug, Clone)]
pub struct EqualizedAssignment {
    k: usize,
    betas: Vec<Prob>,
}

impl EqualizedAssignment {
    pub fn new(k: usize) -> Result<Self, BoundError> {
        let (_, betas) = solve_equalized_exact(k)?;
        Ok(EqualizedAssignment { k, betas })
    }
}

impl Mechanism for EqualizedAssignment {
    fn name(&self) -> &str {
        "equalized-assignment"
    }

    fn select(&self, dag: &Dag) -> SelectionDistribution {
        let mut probs = vec![Prob::zero(); dag.n()];
        for agent in influential_set(dag).agents() {
            if let Some(beta) = agent
                .id()
                .checked_sub(self.k)
                .and_then(|t| self.betas.get(t))
            {
                probs[agent.index()] = beta.clone();
            }
        }
        SelectionDistribution::new(probs).expect("weights sum to at most one")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CeilingRow {
    pub j: usize,
    #[serde(serialize_with = "crate::exact::serialize")]
    pub ratio: Prob,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CeilingReport {
    pub k: usize,
    pub mechanism: String,
    pub rows: Vec<CeilingRow>,
    pub min_j: usize,
    #[serde(serialize_with = "crate::exact::serialize")]
    pub min_ratio: Prob,
    pub equalized_ratio: f64,
    /// Whether `x_i(G_j) >= x_i(G_i)` for all `k <= i < j <= 2k-1`: an agent
    /// keeping its out-edge never does worse than after deleting it.
    pub keeps_edge_monotone: bool,
    pub monotonicity_failures: Vec<(usize, usize)>,
}

/// Evaluates `mechanism` exactly on `G_k, ..., G_{2k-1}` and reports the
/// worst ratio.
pub fn empirical_ceiling_check<M: Mechanism + ?Sized>(
    mechanism: &M,
    k: usize,
) -> Result<CeilingReport, BoundError> {
    check_k(k)?;
    let mut dists = Vec::with_capacity(k);
    let mut rows = Vec::with_capacity(k);
    for j in k..2 * k {
        let graph = worst_case_graph(k, j)?;
        let dist = mechanism.select(&graph);
        let ratio = expected_ratio(&graph, &dist)
            .expect("mechanism covers every agent")
            .ratio;
        rows.push(CeilingRow { j, ratio });
        dists.push(dist);
    }
    let min = rows
        .iter()
        .min_by(|a, b| a.ratio.cmp(&b.ratio))
        .expect("k >= 2 gives rows")
        .clone();
    let mut failures = Vec::new();
    for i in k..2 * k {
        for j in i + 1..2 * k {
            let agent = Agent::new(i);
            if dists[j - k].prob(agent) < dists[i - k].prob(agent) {
                failures.push((i, j));
            }
        }
    }
    Ok(CeilingReport {
        k,
        mechanism: mechanism.name().to_string(),
        rows,
        min_j: min.j,
        min_ratio: min.ratio,
        equalized_ratio: equalized_ratio(k)?,
        keeps_edge_monotone: failures.is_empty(),
        monotonicity_failures: failures,
    })
}
