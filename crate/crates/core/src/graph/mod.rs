//! Directed acyclic graphs over agents `1..=n`.
//!
//! An edge `(u, v)` means agent `u` follows agent `v`. Agents are always
//! reported with their 1-based external ID; storage is 0-based.

mod io;
mod ops;
mod reach;

pub use io::{parse_edge_list, serialize, GraphFormat};
pub use ops::{
    apply_report, progeny_subgraph, remove_out_edges, restrict_out_edges, ReportProfile, Subgraph,
};
pub use reach::{progeny, progeny_set, Closure, ProgenyTable};

use std::collections::VecDeque;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An agent, identified by its 1-based external ID.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Agent(usize);

impl Agent {
    /// # Panics
    /// If `id` is zero.
    pub fn new(id: usize) -> Self {
        assert!(id >= 1, "agent IDs are 1-based");
        Agent(id)
    }

    pub fn from_index(index: usize) -> Self {
        Agent(index + 1)
    }

    pub fn id(self) -> usize {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn line_suffix(line: &Option<usize>) -> String {
    match line {
        Some(l) => format!(" (line {l})"),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("empty input: expected the agent count on the first line")]
    EmptyInput,
    #[error("line {line}: expected the agent count, found {text:?}")]
    BadHeader { line: usize, text: String },
    #[error("line {line}: expected \"u v\", found {text:?}")]
    MalformedLine { line: usize, text: String },
    #[error("a graph needs at least one agent")]
    NoAgents,
    #[error("edge {from} -> {to} references an agent outside 1..={n}{}", line_suffix(.line))]
    OutOfRange {
        from: usize,
        to: usize,
        n: usize,
        line: Option<usize>,
    },
    #[error("self-loop on agent {agent}{}", line_suffix(.line))]
    SelfLoop { agent: usize, line: Option<usize> },
    #[error("duplicate edge {from} -> {to}{}", line_suffix(.line))]
    DuplicateEdge {
        from: usize,
        to: usize,
        line: Option<usize>,
    },
    #[error("cycle detected through edge {from} -> {to}{}", line_suffix(.line))]
    Cycle {
        from: usize,
        to: usize,
        line: Option<usize>,
    },
    #[error("unknown agent {agent} (graph has {n} agents)")]
    UnknownAgent { agent: usize, n: usize },
    #[error("report declares edge {from} -> {to}, which is not a true out-edge")]
    FabricatedEdge { from: usize, to: usize },
    #[error("report covers {got} agents, graph has {n}")]
    ReportSize { got: usize, n: usize },
}

/// An immutable DAG in compressed adjacency form. Successor and
/// predecessor lists are sorted, and a topological order is cached; it stays
/// valid for every graph derived by deleting edges.
#[derive(Debug, Clone)]
pub struct Dag {
    succ_start: Vec<usize>,
    succ: Vec<usize>,
    pred_start: Vec<usize>,
    pred: Vec<usize>,
    topo: Vec<usize>,
}

impl PartialEq for Dag {
    fn eq(&self, other: &Self) -> bool {
        self.succ_start == other.succ_start && self.succ == other.succ
    }
}

impl Eq for Dag {}

impl Hash for Dag {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.succ_start.hash(state);
        self.succ.hash(state);
    }
}

impl Dag {
    /// Builds a validated DAG from 1-based `(follower, followee)` pairs.
    pub fn new<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let edges: Vec<(usize, usize)> = edges.into_iter().collect();
        Self::build(n, &edges, None)
    }

    pub fn edgeless(n: usize) -> Result<Self, GraphError> {
        Self::build(n, &[], None)
    }

    pub(crate) fn build(
        n: usize,
        edges: &[(usize, usize)],
        lines: Option<&[usize]>,
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::NoAgents);
        }
        let line_of = |idx: usize| lines.map(|l| l[idx]);
        let mut sorted = Vec::with_capacity(edges.len());
        for (idx, &(from, to)) in edges.iter().enumerate() {
            if from == 0 || to == 0 || from > n || to > n {
                return Err(GraphError::OutOfRange {
                    from,
                    to,
                    n,
                    line: line_of(idx),
                });
            }
            if from == to {
                return Err(GraphError::SelfLoop {
                    agent: from,
                    line: line_of(idx),
                });
            }
            sorted.push((from - 1, to - 1));
        }
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            let (from, to) = (w[0].0 + 1, w[0].1 + 1);
            let line = edges
                .iter()
                .enumerate()
                .filter(|(_, &e)| e == (from, to))
                .nth(1)
                .and_then(|(idx, _)| line_of(idx));
            return Err(GraphError::DuplicateEdge { from, to, line });
        }
        let mut dag = Self::assemble(n, &sorted, Vec::new());
        match dag.kahn() {
            Ok(order) => {
                dag.topo = order;
                Ok(dag)
            }
            Err(done) => {
                let rank = |e: (usize, usize)| {
                    edges
                        .iter()
                        .position(|&x| x == e)
                        .and_then(line_of)
                        .unwrap_or(0)
                };
                let (from, to) = dag.cycle_edge(&done, rank);
                let line = edges
                    .iter()
                    .position(|&x| x == (from, to))
                    .and_then(line_of);
                Err(GraphError::Cycle { from, to, line })
            }
        }
    }

    /// Builds the adjacency arrays from lexicographically sorted,
    /// duplicate-free 0-based edges.
    fn assemble(n: usize, sorted: &[(usize, usize)], topo: Vec<usize>) -> Self {
        let mut succ_start = vec![0; n + 1];
        let mut pred_start = vec![0; n + 1];
        for &(u, v) in sorted {
            succ_start[u + 1] += 1;
            pred_start[v + 1] += 1;
        }
        for i in 0..n {
            succ_start[i + 1] += succ_start[i];
            pred_start[i + 1] += pred_start[i];
        }
        let succ = sorted.iter().map(|&(_, v)| v).collect();
        let mut fill = pred_start.clone();
        let mut pred = vec![0; sorted.len()];
        // Edges are sorted by source, so each predecessor list fills in order.
        for &(u, v) in sorted {
            pred[fill[v]] = u;
            fill[v] += 1;
        }
        Dag {
            succ_start,
            succ,
            pred_start,
            pred,
            topo,
        }
    }

    /// A graph on the same agents keeping only the edges `keep` accepts.
    pub(crate) fn filter_edges<F>(&self, mut keep: F) -> Self
    where
        F: FnMut(usize, usize) -> bool,
    {
        let sorted: Vec<(usize, usize)> = (0..self.n())
            .flat_map(|u| self.succ_of(u).iter().map(move |&v| (u, v)))
            .filter(|&(u, v)| keep(u, v))
            .collect();
        Self::assemble(self.n(), &sorted, self.topo.clone())
    }

    fn kahn(&self) -> Result<Vec<usize>, Vec<bool>> {
        let n = self.n();
        let mut indeg: Vec<usize> = (0..n).map(|v| self.pred_of(v).len()).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in self.succ_of(u) {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    queue.push_back(v);
                }
            }
        }
        if order.len() == n {
            Ok(order)
        } else {
            let mut done = vec![false; n];
            for v in order {
                done[v] = true;
            }
            Err(done)
        }
    }

    /// An edge on some directed cycle among the nodes Kahn's algorithm could
    /// not place, preferring the one ranked highest by `rank`.
    fn cycle_edge<F>(&self, done: &[bool], rank: F) -> (usize, usize)
    where
        F: Fn((usize, usize)) -> usize,
    {
        let n = self.n();
        let start = (0..n).find(|&v| !done[v]).expect("a cycle exists");
        // Every leftover node has a leftover predecessor; walk back until a
        // node repeats.
        let mut seen_at = vec![usize::MAX; n];
        let mut walk = Vec::new();
        let mut v = start;
        while seen_at[v] == usize::MAX {
            seen_at[v] = walk.len();
            walk.push(v);
            v = *self
                .pred_of(v)
                .iter()
                .find(|&&u| !done[u])
                .expect("leftover node without leftover predecessor");
        }
        // walk[i+1] is a predecessor of walk[i]: the cycle edges run backwards.
        let cycle = &walk[seen_at[v]..];
        let mut edges: Vec<(usize, usize)> =
            cycle.windows(2).map(|w| (w[1] + 1, w[0] + 1)).collect();
        edges.push((cycle[0] + 1, cycle[cycle.len() - 1] + 1));
        edges
            .into_iter()
            .max_by_key(|&e| (rank(e), e))
            .expect("cycles have edges")
    }

    pub fn n(&self) -> usize {
        self.succ_start.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.succ.len()
    }

    pub fn agents(&self) -> impl Iterator<Item = Agent> + '_ {
        (0..self.n()).map(Agent::from_index)
    }

    pub fn contains(&self, agent: Agent) -> bool {
        agent.id() <= self.n()
    }

    pub fn check_agent(&self, agent: Agent) -> Result<(), GraphError> {
        if self.contains(agent) {
            Ok(())
        } else {
            Err(GraphError::UnknownAgent {
                agent: agent.id(),
                n: self.n(),
            })
        }
    }

    /// All edges as `(follower, followee)`, lexicographically sorted.
    pub fn edges(&self) -> impl Iterator<Item = (Agent, Agent)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.succ_of(u)
                .iter()
                .map(move |&v| (Agent::from_index(u), Agent::from_index(v)))
        })
    }

    pub fn out_edges(&self, agent: Agent) -> impl Iterator<Item = Agent> + '_ {
        self.succ_of(agent.index())
            .iter()
            .map(|&v| Agent::from_index(v))
    }

    pub fn in_edges(&self, agent: Agent) -> impl Iterator<Item = Agent> + '_ {
        self.pred_of(agent.index())
            .iter()
            .map(|&u| Agent::from_index(u))
    }

    pub fn out_degree(&self, agent: Agent) -> usize {
        self.succ_of(agent.index()).len()
    }

    pub fn has_edge(&self, from: Agent, to: Agent) -> bool {
        self.contains(from)
            && self
                .succ_of(from.index())
                .binary_search(&to.index())
                .is_ok()
    }

    /// Order in which every follower precedes the agents it follows.
    pub fn topological_order(&self) -> Vec<Agent> {
        self.topo.iter().map(|&v| Agent::from_index(v)).collect()
    }

    pub(crate) fn topo(&self) -> &[usize] {
        &self.topo
    }

    pub(crate) fn succ_of(&self, u: usize) -> &[usize] {
        &self.succ[self.succ_start[u]..self.succ_start[u + 1]]
    }

    pub(crate) fn pred_of(&self, v: usize) -> &[usize] {
        &self.pred[self.pred_start[v]..self.pred_start[v + 1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_agents() {
        assert_eq!(Dag::edgeless(0), Err(GraphError::NoAgents));
    }

    #[test]
    fn rejects_self_loop_and_range() {
        assert!(matches!(
            Dag::new(2, [(1, 1)]),
            Err(GraphError::SelfLoop { agent: 1, .. })
        ));
        assert!(matches!(
            Dag::new(2, [(1, 3)]),
            Err(GraphError::OutOfRange { from: 1, to: 3, .. })
        ));
        assert!(matches!(
            Dag::new(2, [(0, 1)]),
            Err(GraphError::OutOfRange { .. })
        ));
    }

    #[test]
    fn rejects_duplicates() {
        assert!(matches!(
            Dag::new(3, [(2, 1), (3, 1), (2, 1)]),
            Err(GraphError::DuplicateEdge { from: 2, to: 1, .. })
        ));
    }

    #[test]
    fn cycle_reports_an_edge_on_the_cycle() {
        let err = Dag::new(4, [(1, 2), (2, 3), (3, 1), (4, 1)]).unwrap_err();
        match err {
            GraphError::Cycle { from, to, .. } => {
                assert!([(1, 2), (2, 3), (3, 1)].contains(&(from, to)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn edges_are_sorted_and_topological_order_is_valid() {
        let dag = Dag::new(4, [(4, 1), (2, 1), (3, 2), (4, 3)]).unwrap();
        let edges: Vec<_> = dag.edges().map(|(a, b)| (a.id(), b.id())).collect();
        assert_eq!(edges, vec![(2, 1), (3, 2), (4, 1), (4, 3)]);
        let order = dag.topological_order();
        let pos = |a: Agent| order.iter().position(|&x| x == a).unwrap();
        for (u, v) in dag.edges() {
            assert!(pos(u) < pos(v));
        }
    }
}
