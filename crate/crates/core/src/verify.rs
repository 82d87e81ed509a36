//! Brute-force verifiers for incentive compatibility, fairness, the
//! root-mechanism property and the structural observations about
//! influential nodes.
//!
//! Every verifier takes the mechanism as a parameter so that negative
//! controls run through exactly the same code as the mechanisms under test.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::{mix_seed, rng_for, EnsembleSpec, GeneratorError};
use crate::graph::{
    parse_edge_list, progeny_set, progeny_subgraph, restrict_out_edges, serialize, Agent, Closure,
    Dag, GraphError, GraphFormat,
};
use crate::influence::{influential_set, is_influential, precedes, InfluentialSet};
use crate::mechanism::{Mechanism, Prob};

/// How many misreports to try per agent. Agents whose out-degree `d`
/// satisfies `2^d <= cap` are checked exhaustively; the rest get the empty
/// report plus `cap` seeded random subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetBudget {
    pub cap: u64,
    pub seed: u64,
}

impl SubsetBudget {
    pub fn new(cap: u64, seed: u64) -> Self {
        SubsetBudget { cap, seed }
    }
}

impl Default for SubsetBudget {
    fn default() -> Self {
        SubsetBudget {
            cap: 1 << 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SubsetScope {
    Exhaustive { subsets: u64 },
    Sampled { subsets: u64, out_degree: usize },
}

impl SubsetScope {
    pub fn subsets(&self) -> u64 {
        match *self {
            SubsetScope::Exhaustive { subsets } | SubsetScope::Sampled { subsets, .. } => subsets,
        }
    }

    pub fn is_exhaustive(&self) -> bool {
        matches!(self, SubsetScope::Exhaustive { .. })
    }
}

enum Source {
    Exhaustive {
        next: u64,
        full: u64,
    },
    Sampled {
        left: u64,
        rng: Box<ChaCha8Rng>,
        empty_sent: bool,
    },
}

/// Strict subsets of an agent's true out-edges.
pub struct Misreports {
    targets: Vec<Agent>,
    source: Source,
}

impl Misreports {
    pub fn new(dag: &Dag, agent: Agent, budget: SubsetBudget) -> Self {
        let targets: Vec<Agent> = dag.out_edges(agent).collect();
        let d = targets.len();
        let source = if d < 64 && (1u64 << d) <= budget.cap.max(1) {
            Source::Exhaustive {
                next: 0,
                full: (1u64 << d) - 1,
            }
        } else {
            Source::Sampled {
                left: budget.cap,
                rng: Box::new(rng_for(budget.seed, agent.id() as u64)),
                empty_sent: false,
            }
        };
        Misreports { targets, source }
    }

    pub fn scope(&self) -> SubsetScope {
        match &self.source {
            Source::Exhaustive { full, .. } => SubsetScope::Exhaustive { subsets: *full },
            Source::Sampled { .. } => SubsetScope::Sampled {
                subsets: 0,
                out_degree: self.targets.len(),
            },
        }
    }
}

impl Iterator for Misreports {
    type Item = Vec<Agent>;

    fn next(&mut self) -> Option<Vec<Agent>> {
        match &mut self.source {
            Source::Exhaustive { next, full } => {
                if *next >= *full {
                    return None;
                }
                let mask = *next;
                *next += 1;
                Some(
                    self.targets
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| mask >> b & 1 == 1)
                        .map(|(_, &t)| t)
                        .collect(),
                )
            }
            Source::Sampled {
                left,
                rng,
                empty_sent,
            } => {
                if !*empty_sent {
                    *empty_sent = true;
                    return Some(Vec::new());
                }
                if *left == 0 {
                    return None;
                }
                *left -= 1;
                loop {
                    let subset: Vec<Agent> = self
                        .targets
                        .iter()
                        .copied()
                        .filter(|_| rng.random_bool(0.5))
                        .collect();
                    if subset.len() < self.targets.len() {
                        return Some(subset);
                    }
                }
            }
        }
    }
}

/// An agent that strictly gains by hiding some of its out-edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcViolation {
    pub agent: Agent,
    #[serde(with = "crate::exact")]
    pub truthful_prob: Prob,
    /// The out-edges the agent keeps in the misreport.
    pub misreport: Vec<Agent>,
    #[serde(with = "crate::exact")]
    pub misreport_prob: Prob,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcCheck {
    pub agent: Agent,
    pub scope: SubsetScope,
    pub violation: Option<IcViolation>,
}

/// Looks for a misreport that raises `agent`'s selection probability.
/// Stops at the first one found.
pub fn check_ic<M: Mechanism + ?Sized>(
    mechanism: &M,
    dag: &Dag,
    agent: Agent,
    budget: SubsetBudget,
) -> Result<IcCheck, GraphError> {
    dag.check_agent(agent)?;
    let truthful = mechanism.select(dag).prob(agent);
    let mut misreports = Misreports::new(dag, agent, budget);
    let mut scope = misreports.scope();
    let mut tried = 0u64;
    let mut violation = None;
    for keep in misreports.by_ref() {
        tried += 1;
        let graph = restrict_out_edges(dag, agent, &keep)?;
        let p = mechanism.select(&graph).prob(agent);
        if p > truthful {
            violation = Some(IcViolation {
                agent,
                truthful_prob: truthful.clone(),
                misreport: keep,
                misreport_prob: p,
            });
            break;
        }
    }
    if let SubsetScope::Sampled { subsets, .. } = &mut scope {
        *subsets = tried;
    }
    Ok(IcCheck {
        agent,
        scope,
        violation,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcReport {
    pub checks: Vec<IcCheck>,
}

impl IcReport {
    pub fn violations(&self) -> impl Iterator<Item = &IcViolation> + '_ {
        self.checks.iter().filter_map(|c| c.violation.as_ref())
    }

    pub fn is_clean(&self) -> bool {
        self.violations().next().is_none()
    }

    pub fn subsets_checked(&self) -> u64 {
        self.checks.iter().map(|c| c.scope.subsets()).sum()
    }

    pub fn sampled_agents(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| !c.scope.is_exhaustive())
            .count()
    }
}

/// [`check_ic`] for every agent. A clean report certifies incentive
/// compatibility on this graph within the recorded scope.
pub fn check_ic_all<M: Mechanism + ?Sized>(
    mechanism: &M,
    dag: &Dag,
    budget: SubsetBudget,
) -> IcReport {
    IcReport {
        checks: dag
            .agents()
            .map(|a| check_ic(mechanism, dag, a, budget).expect("agent in range"))
            .collect(),
    }
}

/// A self-contained, replayable incentive-compatibility counterexample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub mechanism: String,
    /// The truthful graph in edge-list format.
    pub graph: String,
    pub violation: IcViolation,
}

impl Counterexample {
    pub fn new(mechanism: &str, dag: &Dag, violation: IcViolation) -> Self {
        Counterexample {
            mechanism: mechanism.to_string(),
            graph: serialize(dag, GraphFormat::EdgeList),
            violation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Replay {
    #[serde(with = "crate::exact")]
    pub truthful_prob: Prob,
    #[serde(with = "crate::exact")]
    pub misreport_prob: Prob,
    /// Both probabilities match the record and the misreport still wins.
    pub reproduced: bool,
}

/// Re-evaluates a counterexample from its recorded graph and misreport.
pub fn replay<M: Mechanism + ?Sized>(
    mechanism: &M,
    cex: &Counterexample,
) -> Result<Replay, GraphError> {
    let dag = parse_edge_list(&cex.graph)?;
    let v = &cex.violation;
    dag.check_agent(v.agent)?;
    let truthful_prob = mechanism.select(&dag).prob(v.agent);
    let lied = restrict_out_edges(&dag, v.agent, &v.misreport)?;
    let misreport_prob = mechanism.select(&lied).prob(v.agent);
    let reproduced = truthful_prob == v.truthful_prob
        && misreport_prob == v.misreport_prob
        && misreport_prob > truthful_prob
        && v.misreport.len() < dag.out_degree(v.agent);
    Ok(Replay {
        truthful_prob,
        misreport_prob,
        reproduced,
    })
}

/// A misreport under which an influential agent lost some of the
/// influential nodes ranked below it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankFailure {
    pub agent: Agent,
    pub misreport: Vec<Agent>,
    pub lost: Vec<Agent>,
}

/// For an influential agent `i`, the influential nodes ranked below `i`
/// can only grow when `i` hides edges; this is what keeps its geometric
/// probability from rising. Non-influential agents pass trivially.
pub fn check_rank_monotonicity(
    dag: &Dag,
    agent: Agent,
    budget: SubsetBudget,
) -> Result<Option<RankFailure>, GraphError> {
    dag.check_agent(agent)?;
    let set = influential_set(dag);
    if !set.contains(agent) {
        return Ok(None);
    }
    let below: BTreeSet<Agent> = set.ranked_below(agent).into_iter().collect();
    for keep in Misreports::new(dag, agent, budget) {
        let lied = restrict_out_edges(dag, agent, &keep)?;
        let after = influential_set(&lied);
        let below_after: BTreeSet<Agent> = after.ranked_below(agent).into_iter().collect();
        let lost: Vec<Agent> = if after.contains(agent) {
            below.difference(&below_after).copied().collect()
        } else {
            vec![agent]
        };
        if !lost.is_empty() {
            return Ok(Some(RankFailure {
                agent,
                misreport: keep,
                lost,
            }));
        }
    }
    Ok(None)
}

/// Only influential nodes receive positive probability.
pub fn check_root_property<M: Mechanism + ?Sized>(mechanism: &M, dag: &Dag) -> bool {
    let set = influential_set(dag);
    mechanism
        .select(dag)
        .support()
        .all(|(agent, _)| set.contains(agent))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ObservationReport {
    /// Each influential node lies in the progeny of every node ranked above it.
    pub nesting: bool,
    /// `s_1` has no out-edges and beats every other agent.
    pub sink_max: bool,
    /// No non-influential agent becomes influential by hiding edges.
    pub closure: bool,
}

impl ObservationReport {
    pub fn all(&self) -> bool {
        self.nesting && self.sink_max && self.closure
    }
}

pub fn check_observations(dag: &Dag, budget: SubsetBudget) -> ObservationReport {
    let set = influential_set(dag);
    let closure = Closure::new(dag);
    let members = set.members();

    let nesting = members.iter().enumerate().all(|(idx, hi)| {
        members[idx + 1..]
            .iter()
            .all(|lo| closure.in_progeny(lo.agent, hi.agent))
    });

    let s1 = set.first();
    let table = closure.progeny();
    let sink_max = dag.out_degree(s1.agent) == 0
        && table.get(s1.agent) == s1.progeny
        && table
            .iter()
            .all(|(j, p_j)| j == s1.agent || precedes(s1.progeny, s1.agent, p_j, j));

    let stays_out = dag.agents().filter(|&a| !set.contains(a)).all(|agent| {
        Misreports::new(dag, agent, budget).all(|keep| {
            let lied = restrict_out_edges(dag, agent, &keep).expect("subset of true edges");
            !is_influential(&lied, agent).expect("agent in range")
        })
    });

    ObservationReport {
        nesting,
        sink_max,
        closure: stays_out,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FairnessError {
    #[error("graphs differ in size ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error("influential sets differ")]
    InfluentialSetMismatch,
    #[error("progeny subgraphs of the most influential node differ")]
    SubgraphMismatch,
}

/// Two graphs that fairness says must give `pivot` the same probability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FairnessSample {
    pub base: Dag,
    pub mutated: Dag,
    pub pivot: Agent,
}

impl FairnessSample {
    /// Re-validates the pair from the two graphs alone.
    pub fn new(base: Dag, mutated: Dag) -> Result<Self, FairnessError> {
        let pivot = validate_pair(&base, &mutated)?;
        Ok(FairnessSample {
            base,
            mutated,
            pivot,
        })
    }
}

/// Checks equal size, equal ranked influential sets and equal `G(s_1)`,
/// returning `s_1`.
pub fn validate_pair(base: &Dag, mutated: &Dag) -> Result<Agent, FairnessError> {
    if base.n() != mutated.n() {
        return Err(FairnessError::SizeMismatch(base.n(), mutated.n()));
    }
    let set: InfluentialSet = influential_set(base);
    if set != influential_set(mutated) {
        return Err(FairnessError::InfluentialSetMismatch);
    }
    let pivot = set.first().agent;
    let a = progeny_subgraph(base, pivot).expect("pivot in range");
    let b = progeny_subgraph(mutated, pivot).expect("pivot in range");
    if a != b {
        return Err(FairnessError::SubgraphMismatch);
    }
    Ok(pivot)
}

const MUTATION_ATTEMPTS: usize = 32;

/// Toggles a few edges between agents outside `P_{s_1}`, keeping the graph
/// acyclic. Returns `None` when there is nothing to mutate or the result
/// no longer forms a valid fairness pair.
pub fn mutate_outside(dag: &Dag, seed: u64) -> Option<FairnessSample> {
    let pivot = influential_set(dag).first().agent;
    let inside: BTreeSet<Agent> = progeny_set(dag, pivot)
        .expect("pivot in range")
        .into_iter()
        .collect();
    let outside: Vec<Agent> = dag.agents().filter(|a| !inside.contains(a)).collect();
    if outside.len() < 2 {
        return None;
    }
    let mut rng = rng_for(seed, 0);
    let mut edges: BTreeSet<(usize, usize)> = dag.edges().map(|(u, v)| (u.id(), v.id())).collect();
    let mut current = dag.clone();
    let toggles = rng.random_range(1..=3usize);
    let mut done = 0;
    for _ in 0..MUTATION_ATTEMPTS {
        if done == toggles {
            break;
        }
        let u = outside[rng.random_range(0..outside.len())];
        let v = outside[rng.random_range(0..outside.len())];
        if u == v {
            continue;
        }
        let e = (u.id(), v.id());
        let mut next = edges.clone();
        if !next.remove(&e) {
            next.insert(e);
        }
        if let Ok(g) = Dag::new(dag.n(), next.iter().copied()) {
            edges = next;
            current = g;
            done += 1;
        }
    }
    if done == 0 || current == *dag {
        return None;
    }
    FairnessSample::new(dag.clone(), current).ok()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FairnessOutcome {
    pub pivot: Agent,
    #[serde(with = "crate::exact")]
    pub base_prob: Prob,
    #[serde(with = "crate::exact")]
    pub mutated_prob: Prob,
    pub fair: bool,
}

pub fn check_fairness<M: Mechanism + ?Sized>(
    mechanism: &M,
    sample: &FairnessSample,
) -> Result<FairnessOutcome, FairnessError> {
    let pivot = validate_pair(&sample.base, &sample.mutated)?;
    if pivot != sample.pivot {
        return Err(FairnessError::InfluentialSetMismatch);
    }
    let base_prob = mechanism.select(&sample.base).prob(pivot);
    let mutated_prob = mechanism.select(&sample.mutated).prob(pivot);
    Ok(FairnessOutcome {
        pivot,
        fair: base_prob == mutated_prob,
        base_prob,
        mutated_prob,
    })
}

/// Result of an IC sweep over many graphs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IcRun {
    pub mechanism: String,
    pub graphs: usize,
    pub agents: usize,
    pub subsets: u64,
    pub sampled_agents: usize,
    pub counterexamples: Vec<Counterexample>,
}

/// Runs [`check_ic_all`] over `graphs` in parallel. Output order follows
/// the input order.
pub fn run_ic<M: Mechanism + ?Sized>(mechanism: &M, graphs: &[Dag], budget: SubsetBudget) -> IcRun {
    let reports: Vec<IcReport> = graphs
        .par_iter()
        .enumerate()
        .map(|(idx, dag)| {
            let budget = SubsetBudget::new(budget.cap, mix_seed(budget.seed, idx as u64));
            check_ic_all(mechanism, dag, budget)
        })
        .collect();
    let mut counterexamples = Vec::new();
    for (dag, report) in graphs.iter().zip(&reports) {
        counterexamples.extend(
            report
                .violations()
                .map(|v| Counterexample::new(mechanism.name(), dag, v.clone())),
        );
    }
    IcRun {
        mechanism: mechanism.name().to_string(),
        graphs: graphs.len(),
        agents: reports.iter().map(|r| r.checks.len()).sum(),
        subsets: reports.iter().map(IcReport::subsets_checked).sum(),
        sampled_agents: reports.iter().map(IcReport::sampled_agents).sum(),
        counterexamples,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FairnessFailure {
    pub trial: u64,
    pub base: String,
    pub mutated: String,
    pub outcome: FairnessOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FairnessRun {
    pub mechanism: String,
    pub accepted: usize,
    pub discarded: usize,
    pub attempts: u64,
    pub failures: Vec<FairnessFailure>,
}

const FAIRNESS_BATCH: u64 = 256;

/// Draws graphs from `spec`, mutates them outside `P_{s_1}` and checks
/// fairness until `target` samples are accepted or `max_attempts` graphs
/// have been tried. Deterministic regardless of thread scheduling.
pub fn run_fairness<M: Mechanism + ?Sized>(
    mechanism: &M,
    spec: &EnsembleSpec,
    target: usize,
    max_attempts: u64,
) -> Result<FairnessRun, GeneratorError> {
    run_fairness_on(
        mechanism,
        spec.seed,
        |t| spec.graph(t),
        target,
        max_attempts,
    )
}

/// [`run_fairness`] over any trial-indexed graph source. Mutation seeds
/// derive from `seed` and the trial index.
pub fn run_fairness_on<M, F>(
    mechanism: &M,
    seed: u64,
    source: F,
    target: usize,
    max_attempts: u64,
) -> Result<FairnessRun, GeneratorError>
where
    M: Mechanism + ?Sized,
    F: Fn(u64) -> Result<Dag, GeneratorError> + Sync,
{
    let mut run = FairnessRun {
        mechanism: mechanism.name().to_string(),
        accepted: 0,
        discarded: 0,
        attempts: 0,
        failures: Vec::new(),
    };
    let mut start = 0;
    while run.accepted < target && start < max_attempts {
        let end = (start + FAIRNESS_BATCH).min(max_attempts);
        let batch: Vec<Result<Option<(FairnessSample, FairnessOutcome)>, GeneratorError>> = (start
            ..end)
            .into_par_iter()
            .map(|trial| {
                let dag = source(trial)?;
                Ok(
                    mutate_outside(&dag, mix_seed(seed ^ 0xFA1, trial)).map(|s| {
                        let outcome = check_fairness(mechanism, &s).expect("validated sample");
                        (s, outcome)
                    }),
                )
            })
            .collect();
        for (trial, item) in (start..end).zip(batch) {
            if run.accepted == target {
                break;
            }
            run.attempts += 1;
            match item? {
                None => run.discarded += 1,
                Some((sample, outcome)) => {
                    run.accepted += 1;
                    if !outcome.fair {
                        run.failures.push(FairnessFailure {
                            trial,
                            base: serialize(&sample.base, GraphFormat::EdgeList),
                            mutated: serialize(&sample.mutated, GraphFormat::EdgeList),
                            outcome,
                        });
                    }
                }
            }
        }
        start = end;
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{all_labeled_dags, fixtures, gnp_dag, upper_bound_graph, GraphFamily};
    use crate::mechanism::{dyadic, prob, FnMechanism, MechanismKind, SelectionDistribution};
    use num_traits::{One, Zero};
    use proptest::prelude::*;

    fn a(id: usize) -> Agent {
        Agent::new(id)
    }

    fn budget() -> SubsetBudget {
        SubsetBudget::default()
    }

    /// Puts probability `p` on `s_1` and nothing elsewhere.
    fn pivot_only(dag: &Dag, p: Prob) -> SelectionDistribution {
        let mut probs = vec![Prob::zero(); dag.n()];
        probs[influential_set(dag).first().agent.index()] = p;
        SelectionDistribution::new(probs).unwrap()
    }

    #[test]
    fn misreports_enumerate_strict_subsets() {
        let dag = Dag::new(4, [(4, 1), (4, 2), (4, 3)]).unwrap();
        let all: Vec<Vec<Agent>> = Misreports::new(&dag, a(4), budget()).collect();
        assert_eq!(all.len(), 7);
        assert!(all.iter().all(|s| s.len() < 3));
        let distinct: BTreeSet<_> = all.iter().cloned().collect();
        assert_eq!(distinct.len(), 7);
        assert_eq!(Misreports::new(&dag, a(1), budget()).count(), 0);
    }

    #[test]
    fn misreports_fall_back_to_sampling() {
        let dag = Dag::new(5, [(5, 1), (5, 2), (5, 3), (5, 4)]).unwrap();
        let tight = SubsetBudget::new(8, 7);
        let m = Misreports::new(&dag, a(5), tight);
        assert!(!m.scope().is_exhaustive());
        let drawn: Vec<_> = m.collect();
        assert_eq!(drawn.len(), 9);
        assert!(drawn[0].is_empty());
        assert!(drawn.iter().all(|s| s.len() < 4));
        let again: Vec<_> = Misreports::new(&dag, a(5), tight).collect();
        assert_eq!(drawn, again);
        let check = check_ic(&MechanismKind::Geometric, &dag, a(5), tight).unwrap();
        assert_eq!(
            check.scope,
            SubsetScope::Sampled {
                subsets: 9,
                out_degree: 4
            }
        );
    }

    #[test]
    fn uniform_never_violates() {
        for dag in all_labeled_dags(4) {
            assert!(check_ic_all(&MechanismKind::Uniform, &dag, budget()).is_clean());
        }
    }

    #[test]
    fn witness_breaks_the_progeny_maximum() {
        let w = fixtures::manipulation_witness();
        let check = check_ic(&MechanismKind::OptimalNonIc, &w, a(2), budget()).unwrap();
        let v = check.violation.expect("agent 2 gains by hiding (2,1)");
        assert_eq!(v.misreport, Vec::<Agent>::new());
        assert!(v.truthful_prob.is_zero());
        assert_eq!(v.misreport_prob, Prob::one());

        let cex = Counterexample::new("optimal-non-ic", &w, v);
        let json = serde_json::to_string(&cex).unwrap();
        let back: Counterexample = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cex);
        assert!(
            replay(&MechanismKind::OptimalNonIc, &back)
                .unwrap()
                .reproduced
        );
        assert!(!replay(&MechanismKind::Geometric, &back).unwrap().reproduced);
    }

    #[test]
    fn geometric_is_clean_on_witness() {
        let w = fixtures::manipulation_witness();
        assert!(check_ic_all(&MechanismKind::Geometric, &w, budget()).is_clean());
        for agent in w.agents() {
            assert_eq!(check_rank_monotonicity(&w, agent, budget()).unwrap(), None);
        }
    }

    #[test]
    fn geometric_exhaustive_small() {
        for n in 1..=4 {
            for dag in all_labeled_dags(n) {
                let report = check_ic_all(&MechanismKind::Geometric, &dag, budget());
                assert!(
                    report.is_clean(),
                    "{}",
                    serialize(&dag, GraphFormat::EdgeList)
                );
                assert_eq!(report.sampled_agents(), 0);
            }
        }
    }

    #[test]
    fn root_property() {
        let w = fixtures::manipulation_witness();
        assert!(check_root_property(&MechanismKind::Geometric, &w));
        assert!(check_root_property(&MechanismKind::OptimalNonIc, &w));
        assert!(!check_root_property(&MechanismKind::Uniform, &w));
    }

    #[test]
    fn observations_on_fixtures() {
        assert!(check_observations(&Dag::edgeless(1).unwrap(), budget()).all());
        for k in 2..=50 {
            let report = check_observations(&upper_bound_graph(k).unwrap(), budget());
            assert!(report.all(), "k = {k}");
        }
    }

    #[test]
    fn nothing_to_mutate() {
        let chain = Dag::new(3, [(2, 1), (3, 2)]).unwrap();
        assert!(mutate_outside(&chain, 1).is_none());
        for k in 2..10 {
            assert!(mutate_outside(&upper_bound_graph(k).unwrap(), 5).is_none());
        }
    }

    #[test]
    fn deleting_an_outside_edge_is_a_valid_pair() {
        // s_1 = 1 with P = {1,2,3,4}; agents 5 -> 6 -> 7 form a separate chain.
        let base = Dag::new(7, [(2, 1), (3, 1), (4, 2), (5, 6), (6, 7)]).unwrap();
        let mutated = Dag::new(7, [(2, 1), (3, 1), (4, 2), (5, 6)]).unwrap();
        let sample = FairnessSample::new(base.clone(), mutated).unwrap();
        assert_eq!(sample.pivot, a(1));
        let out = check_fairness(&MechanismKind::Geometric, &sample).unwrap();
        assert!(out.fair);
        assert_eq!(out.base_prob, prob(1, 2));

        let accepted = (0..64).filter_map(|s| mutate_outside(&base, s)).count();
        assert!(accepted > 0);
    }

    #[test]
    fn invalid_pairs_are_rejected() {
        let base = Dag::new(4, [(2, 1), (3, 1)]).unwrap();
        // Adding (4,2) grows P_1.
        let grown = Dag::new(4, [(2, 1), (3, 1), (4, 2)]).unwrap();
        assert!(FairnessSample::new(base.clone(), grown).is_err());
        assert_eq!(
            FairnessSample::new(base, Dag::edgeless(5).unwrap()),
            Err(FairnessError::SizeMismatch(4, 5))
        );
        // Same influential set {1}, but the inside edges differ.
        let a_ = Dag::new(5, [(2, 1), (3, 1), (4, 3)]).unwrap();
        let b_ = Dag::new(5, [(2, 1), (3, 1), (4, 1)]).unwrap();
        assert_eq!(
            validate_pair(&a_, &b_),
            Err(FairnessError::SubgraphMismatch)
        );
    }

    #[test]
    fn fairness_harness_and_negative_control() {
        let spec = EnsembleSpec::new(GraphFamily::GnpDag, 11)
            .nodes(6, 20)
            .edge_probability(0.12);
        let geo = run_fairness(&MechanismKind::Geometric, &spec, 100, 20_000).unwrap();
        assert_eq!(geo.accepted, 100);
        assert!(geo.failures.is_empty());

        let uni = run_fairness(&MechanismKind::Uniform, &spec, 100, 20_000).unwrap();
        assert!(uni.failures.is_empty());

        let one_over_n =
            FnMechanism::new("one-over-n", |d: &Dag| pivot_only(d, prob(1, d.n() as i64)));
        assert!(run_fairness(&one_over_n, &spec, 100, 20_000)
            .unwrap()
            .failures
            .is_empty());

        let by_edges = FnMechanism::new("edge-parity", |d: &Dag| {
            pivot_only(
                d,
                if d.edge_count().is_multiple_of(2) {
                    prob(1, 2)
                } else {
                    prob(1, 4)
                },
            )
        });
        let bad = run_fairness(&by_edges, &spec, 100, 20_000).unwrap();
        assert!(!bad.failures.is_empty());
        let f = &bad.failures[0];
        let base = parse_edge_list(&f.base).unwrap();
        let mutated = parse_edge_list(&f.mutated).unwrap();
        assert!(validate_pair(&base, &mutated).is_ok());
    }

    #[test]
    fn fairness_run_is_deterministic() {
        let spec = EnsembleSpec::new(GraphFamily::RandomForest, 3)
            .nodes(5, 15)
            .edge_probability(0.6);
        let a = run_fairness(&MechanismKind::Geometric, &spec, 50, 5_000).unwrap();
        let b = run_fairness(&MechanismKind::Geometric, &spec, 50, 5_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn run_ic_collects_counterexamples() {
        let graphs = vec![fixtures::manipulation_witness(), Dag::edgeless(3).unwrap()];
        let geo = run_ic(&MechanismKind::Geometric, &graphs, budget());
        assert!(geo.counterexamples.is_empty());
        assert_eq!(geo.agents, 10);
        let opt = run_ic(&MechanismKind::OptimalNonIc, &graphs, budget());
        assert!(!opt.counterexamples.is_empty());
        for cex in &opt.counterexamples {
            assert!(
                replay(&MechanismKind::OptimalNonIc, cex)
                    .unwrap()
                    .reproduced
            );
        }
    }

    #[test]
    fn geometric_pivot_gets_half_to_the_m() {
        let w = fixtures::manipulation_witness();
        let m = influential_set(&w).len();
        assert_eq!(MechanismKind::Geometric.select(&w).prob(a(1)), dyadic(m));
    }

    proptest! {
        #[test]
        fn geometric_ic_and_rank_monotone(n in 1usize..=9, p in 0.0f64..=0.7, seed: u64) {
            let dag = gnp_dag(n, p, seed).unwrap();
            prop_assert!(check_ic_all(&MechanismKind::Geometric, &dag, budget()).is_clean());
            for agent in dag.agents() {
                prop_assert_eq!(check_rank_monotonicity(&dag, agent, budget()).unwrap(), None);
            }
            prop_assert!(check_root_property(&MechanismKind::Geometric, &dag));
            prop_assert!(check_observations(&dag, SubsetBudget::new(1 << 8, seed)).all());
        }

        #[test]
        fn every_violation_replays(n in 2usize..=9, p in 0.1f64..=0.7, seed: u64) {
            let dag = gnp_dag(n, p, seed).unwrap();
            for v in check_ic_all(&MechanismKind::OptimalNonIc, &dag, budget()).violations() {
                let cex = Counterexample::new("optimal-non-ic", &dag, v.clone());
                prop_assert!(replay(&MechanismKind::OptimalNonIc, &cex).unwrap().reproduced);
            }
        }
    }
}
