//! Deterministic graph families: seeded random ensembles, the bound
//! constructions and fixtures.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Dag, GraphError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("edge probability {0} is outside [0, 1]")]
    BadProbability(f64),
    #[error("need at least one agent")]
    NoAgents,
    #[error("k = {0} is too small (need k >= {1})")]
    KTooSmall(usize, usize),
    #[error("j = {j} outside [{k}, {}]", 2 * .k - 1)]
    JOutOfRange { k: usize, j: usize },
    #[error("invalid node range {min}..={max}")]
    BadRange { min: usize, max: usize },
    #[error("unknown graph family {0:?}")]
    UnknownFamily(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// SplitMix64 finalizer, used to derive independent per-task seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, stream))
}

fn check_p(p: f64) -> Result<(), GeneratorError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(GeneratorError::BadProbability(p))
    }
}

/// Random DAG with the identity as topological order: each pair `i > j`
/// carries edge `(i, j)` independently with probability `p`.
pub fn gnp_dag(n: usize, p: f64, seed: u64) -> Result<Dag, GeneratorError> {
    gnp_dag_bounded(n, p, None, seed)
}

/// [`gnp_dag`] where each agent keeps at most `max_out` of its sampled
/// out-edges (a uniformly random subset).
pub fn gnp_dag_bounded(
    n: usize,
    p: f64,
    max_out: Option<usize>,
    seed: u64,
) -> Result<Dag, GeneratorError> {
    check_p(p)?;
    if n == 0 {
        return Err(GeneratorError::NoAgents);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 2..=n {
        let mut targets: Vec<usize> = (1..i).filter(|_| rng.random_bool(p)).collect();
        if let Some(cap) = max_out {
            if targets.len() > cap {
                targets.shuffle(&mut rng);
                targets.truncate(cap);
            }
        }
        edges.extend(targets.into_iter().map(|j| (i, j)));
    }
    Ok(Dag::new(n, edges)?)
}

/// Every agent but the first gets a parent with probability `p_attach`,
/// chosen uniformly among lower IDs.
pub fn random_forest(n: usize, p_attach: f64, seed: u64) -> Result<Dag, GeneratorError> {
    check_p(p_attach)?;
    if n == 0 {
        return Err(GeneratorError::NoAgents);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 2..=n {
        if rng.random_bool(p_attach) {
            edges.push((i, rng.random_range(1..i)));
        }
    }
    Ok(Dag::new(n, edges)?)
}

/// `n -> n-1 -> ... -> 1`.
pub fn chain(n: usize) -> Result<Dag, GeneratorError> {
    if n == 0 {
        return Err(GeneratorError::NoAgents);
    }
    Ok(Dag::new(n, (2..=n).map(|i| (i, i - 1)))?)
}

/// Relabels agents by a uniformly random permutation.
pub fn permute_labels<R: Rng + ?Sized>(dag: &Dag, rng: &mut R) -> Dag {
    let mut perm: Vec<usize> = (1..=dag.n()).collect();
    perm.shuffle(rng);
    Dag::new(
        dag.n(),
        dag.edges().map(|(u, v)| (perm[u.index()], perm[v.index()])),
    )
    .expect("relabelling preserves validity")
}

/// Leaves `1..k-1` all follow agent `k`, which heads the chain
/// `k -> k+1 -> ... -> 2k-1`. Agent `i >= k` has progeny `i`, and the
/// influential set is `2k-1, 2k-2, ..., k`.
pub fn upper_bound_graph(k: usize) -> Result<Dag, GeneratorError> {
    if k < 1 {
        return Err(GeneratorError::KTooSmall(k, 1));
    }
    let leaves = (1..k).map(|i| (i, k));
    let spine = (k..=2 * k - 2).map(|j| (j, j + 1));
    Ok(Dag::new(2 * k - 1, leaves.chain(spine))?)
}

/// [`upper_bound_graph`] with the out-edges of agents `j..=2k-2` deleted.
/// For `k >= 3` its influential set is `j, j-1, ..., k`.
pub fn worst_case_graph(k: usize, j: usize) -> Result<Dag, GeneratorError> {
    if k < 2 {
        return Err(GeneratorError::KTooSmall(k, 2));
    }
    if j < k || j > 2 * k - 1 {
        return Err(GeneratorError::JOutOfRange { k, j });
    }
    let leaves = (1..k).map(|i| (i, k));
    let spine = (k..j).map(|i| (i, i + 1));
    Ok(Dag::new(2 * k - 1, leaves.chain(spine))?)
}

/// Two nested stars whose geometric ratio approaches 1/2 from above:
/// agent 2 follows the sink 1 and is followed by `k` leaves; `k - 1` more
/// leaves follow agent 1.
pub fn tightness_family(k: usize) -> Result<Dag, GeneratorError> {
    if k < 1 {
        return Err(GeneratorError::KTooSmall(k, 1));
    }
    Ok(fixtures::nested_star(k - 1, k))
}

/// All labelled DAGs on `n` agents, in a fixed order. Feasible for `n <= 6`.
pub fn all_labeled_dags(n: usize) -> Vec<Dag> {
    assert!(
        (1..=6).contains(&n),
        "exhaustive enumeration is limited to n <= 6"
    );
    let pairs: Vec<(usize, usize)> = (1..=n)
        .flat_map(|u| (u + 1..=n).map(move |v| (u, v)))
        .collect();
    let total = 3usize.pow(pairs.len() as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let mut edges = Vec::with_capacity(pairs.len());
        for &(u, v) in &pairs {
            match c % 3 {
                1 => edges.push((u, v)),
                2 => edges.push((v, u)),
                _ => {}
            }
            c /= 3;
        }
        if let Ok(dag) = Dag::new(n, edges) {
            out.push(dag);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphFamily {
    GnpDag,
    RandomForest,
    Chain,
    UpperBound,
    WorstCase,
    Tightness,
}

impl GraphFamily {
    pub const ALL: [GraphFamily; 6] = [
        GraphFamily::GnpDag,
        GraphFamily::RandomForest,
        GraphFamily::Chain,
        GraphFamily::UpperBound,
        GraphFamily::WorstCase,
        GraphFamily::Tightness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GraphFamily::GnpDag => "gnp-dag",
            GraphFamily::RandomForest => "random-forest",
            GraphFamily::Chain => "chain",
            GraphFamily::UpperBound => "upper-bound",
            GraphFamily::WorstCase => "worst-case",
            GraphFamily::Tightness => "tightness",
        }
    }
}

impl fmt::Display for GraphFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GraphFamily {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = match s {
            "gnp" => "gnp-dag",
            "forest" => "random-forest",
            other => other,
        };
        GraphFamily::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| GeneratorError::UnknownFamily(s.to_string()))
    }
}

/// A reproducible stream of graphs. Trial `t` is generated from a seed
/// derived from `(seed, t)`, so trials can be produced in any order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub family: GraphFamily,
    /// Node counts are drawn uniformly from `n_min..=n_max`.
    pub n_min: usize,
    pub n_max: usize,
    pub p: f64,
    pub k: usize,
    pub j: Option<usize>,
    pub max_out_degree: Option<usize>,
    pub shuffle_labels: bool,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(family: GraphFamily, seed: u64) -> Self {
        EnsembleSpec {
            family,
            n_min: 1,
            n_max: 12,
            p: 0.3,
            k: 3,
            j: None,
            max_out_degree: None,
            shuffle_labels: false,
            seed,
        }
    }

    pub fn nodes(mut self, min: usize, max: usize) -> Self {
        self.n_min = min;
        self.n_max = max;
        self
    }

    pub fn edge_probability(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn j(mut self, j: usize) -> Self {
        self.j = Some(j);
        self
    }

    pub fn max_out_degree(mut self, cap: usize) -> Self {
        self.max_out_degree = Some(cap);
        self
    }

    pub fn shuffled(mut self, on: bool) -> Self {
        self.shuffle_labels = on;
        self
    }

    pub fn graph(&self, trial: u64) -> Result<Dag, GeneratorError> {
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(GeneratorError::BadRange {
                min: self.n_min,
                max: self.n_max,
            });
        }
        let mut rng = rng_for(self.seed, trial);
        let n = rng.random_range(self.n_min..=self.n_max);
        let graph_seed: u64 = rng.random();
        let dag = match self.family {
            GraphFamily::GnpDag => gnp_dag_bounded(n, self.p, self.max_out_degree, graph_seed)?,
            GraphFamily::RandomForest => random_forest(n, self.p, graph_seed)?,
            GraphFamily::Chain => chain(n)?,
            GraphFamily::UpperBound => upper_bound_graph(self.k)?,
            GraphFamily::WorstCase => worst_case_graph(self.k, self.j.unwrap_or(self.k))?,
            GraphFamily::Tightness => tightness_family(self.k)?,
        };
        Ok(if self.shuffle_labels {
            permute_labels(&dag, &mut rng)
        } else {
            dag
        })
    }

    pub fn graphs(&self, trials: u64) -> impl Iterator<Item = Result<Dag, GeneratorError>> + '_ {
        (0..trials).map(move |t| self.graph(t))
    }
}

/// Small hand-built graphs used across tests, examples and the CLI.
pub mod fixtures {
    use crate::graph::Dag;

    /// Sink 1, agent 2 following it with `inner` leaves `3..inner+2`
    /// following agent 2, and `outer` further leaves following agent 1.
    /// Progenies: `p_2 = inner + 1`, `p_1 = inner + outer + 2`.
    pub fn nested_star(outer: usize, inner: usize) -> Dag {
        let n = inner + outer + 2;
        let inner_leaves = (3..inner + 3).map(|i| (i, 2));
        let outer_leaves = (inner + 3..=n).map(|i| (i, 1));
        let edges = std::iter::once((2, 1))
            .chain(inner_leaves)
            .chain(outer_leaves);
        Dag::new(n, edges).expect("nested star is acyclic")
    }

    /// Seven agents where agent 2 gains outright selection under the
    /// progeny-maximum rule by hiding its edge to agent 1.
    pub fn manipulation_witness() -> Dag {
        Dag::new(7, [(2, 1), (5, 1), (3, 2), (4, 2), (7, 3), (6, 5)]).expect("witness is acyclic")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{progeny, serialize, Agent, GraphFormat};
    use crate::influence::influential_set;

    fn ids(dag: &Dag) -> Vec<(usize, usize)> {
        dag.edges().map(|(a, b)| (a.id(), b.id())).collect()
    }

    fn ranked(dag: &Dag) -> Vec<usize> {
        influential_set(dag).agents().map(Agent::id).collect()
    }

    #[test]
    fn gnp_extremes() {
        assert_eq!(gnp_dag(5, 0.0, 1).unwrap().edge_count(), 0);
        assert_eq!(
            ids(&gnp_dag(3, 1.0, 1).unwrap()),
            vec![(2, 1), (3, 1), (3, 2)]
        );
        assert!(matches!(
            gnp_dag(3, 1.5, 1),
            Err(GeneratorError::BadProbability(_))
        ));
        assert!(matches!(gnp_dag(0, 0.5, 1), Err(GeneratorError::NoAgents)));
    }

    #[test]
    fn bounded_out_degree() {
        let dag = gnp_dag_bounded(30, 1.0, Some(6), 9).unwrap();
        assert!(dag.agents().all(|a| dag.out_degree(a) <= 6));
        assert_eq!(dag.out_degree(Agent::new(30)), 6);
    }

    #[test]
    fn forest_has_out_degree_at_most_one() {
        let dag = random_forest(50, 0.8, 3).unwrap();
        assert!(dag.agents().all(|a| dag.out_degree(a) <= 1));
        assert_eq!(random_forest(50, 0.0, 3).unwrap().edge_count(), 0);
    }

    #[test]
    fn upper_bound_small_cases() {
        let g = upper_bound_graph(2).unwrap();
        assert_eq!(ids(&g), vec![(1, 2), (2, 3)]);
        assert_eq!(progeny(&g).counts(), &[1, 2, 3]);
        assert_eq!(ranked(&g), vec![3, 2]);
        assert_eq!(ranked(&upper_bound_graph(3).unwrap()), vec![5, 4, 3]);
        assert_eq!(ranked(&upper_bound_graph(1).unwrap()), vec![1]);
        assert!(upper_bound_graph(0).is_err());
    }

    #[test]
    fn upper_bound_progeny_up_to_fifty() {
        for k in 2..=50 {
            let t = progeny(&upper_bound_graph(k).unwrap());
            for i in k..=2 * k - 1 {
                assert_eq!(t.get(Agent::new(i)), i);
            }
        }
    }

    #[test]
    fn worst_case_family() {
        for k in 3..=12 {
            let g = worst_case_graph(k, k).unwrap();
            assert!(ids(&g).iter().all(|&(_, v)| v == k));
            assert_eq!(ranked(&g), vec![k]);
            for j in k..=2 * k - 1 {
                let expected: Vec<usize> = (k..=j).rev().collect();
                assert_eq!(ranked(&worst_case_graph(k, j).unwrap()), expected);
            }
            assert_eq!(
                worst_case_graph(k, 2 * k - 1).unwrap(),
                upper_bound_graph(k).unwrap()
            );
        }
        assert_eq!(ranked(&worst_case_graph(3, 4).unwrap()), vec![4, 3]);
        assert!(worst_case_graph(3, 2).is_err());
        assert!(worst_case_graph(3, 6).is_err());
    }

    #[test]
    fn worst_case_degenerate_k2() {
        // With k = 2 and j = k, agent 1 ties every isolated agent at
        // progeny 1 after deleting its edge and wins on ID.
        assert_eq!(ranked(&worst_case_graph(2, 2).unwrap()), vec![2, 1]);
    }

    #[test]
    fn tightness_shape() {
        let g = tightness_family(1).unwrap();
        assert_eq!(ids(&g), vec![(2, 1), (3, 2)]);
        for k in 1..=20 {
            let g = tightness_family(k).unwrap();
            let t = progeny(&g);
            assert_eq!(g.n(), 2 * k + 1);
            assert_eq!(t.get(Agent::new(1)), 2 * k + 1);
            assert_eq!(t.get(Agent::new(2)), k + 1);
            assert_eq!(ranked(&g), vec![1, 2]);
        }
    }

    #[test]
    fn exhaustive_counts() {
        // Labelled DAG counts (OEIS A003024).
        let counts: Vec<usize> = (1..=5).map(|n| all_labeled_dags(n).len()).collect();
        assert_eq!(counts, vec![1, 3, 25, 543, 29281]);
    }

    #[test]
    fn ensembles_are_reproducible() {
        for family in [
            GraphFamily::GnpDag,
            GraphFamily::RandomForest,
            GraphFamily::Chain,
        ] {
            let spec = EnsembleSpec::new(family, 42).nodes(1, 30).shuffled(true);
            let a: Vec<String> = spec
                .graphs(20)
                .map(|g| serialize(&g.unwrap(), GraphFormat::EdgeList))
                .collect();
            let b: Vec<String> = (0..20)
                .rev()
                .map(|t| serialize(&spec.graph(t).unwrap(), GraphFormat::EdgeList))
                .collect::<Vec<_>>()
                .into_iter()
                .rev()
                .collect();
            assert_eq!(a, b);
        }
        let a = EnsembleSpec::new(GraphFamily::GnpDag, 1).graph(0).unwrap();
        let b = EnsembleSpec::new(GraphFamily::GnpDag, 2).graph(0).unwrap();
        let c = EnsembleSpec::new(GraphFamily::GnpDag, 1).graph(0).unwrap();
        assert_eq!(a, c);
        assert!(a != b || a.n() == 1);
    }

    #[test]
    fn family_names() {
        for f in GraphFamily::ALL {
            assert_eq!(f.as_str().parse::<GraphFamily>().unwrap(), f);
        }
        assert_eq!(
            "forest".parse::<GraphFamily>().unwrap(),
            GraphFamily::RandomForest
        );
        assert!("scale-free".parse::<GraphFamily>().is_err());
    }

    #[test]
    fn fixtures_progenies() {
        let w = fixtures::manipulation_witness();
        let t = progeny(&w);
        assert_eq!(t.get(Agent::new(1)), 7);
        assert_eq!(t.get(Agent::new(2)), 4);
        let e = fixtures::nested_star(1, 5);
        let t = progeny(&e);
        assert_eq!((t.get(Agent::new(1)), t.get(Agent::new(2))), (8, 6));
    }
}
