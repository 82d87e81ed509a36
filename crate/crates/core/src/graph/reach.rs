use std::collections::VecDeque;

use super::{Agent, Dag, GraphError};

/// Progeny sizes `p_i`: the number of agents with a directed path to `i`,
/// counting `i` itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgenyTable {
    counts: Vec<usize>,
}

impl ProgenyTable {
    pub fn get(&self, agent: Agent) -> usize {
        self.counts[agent.index()]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// `p*`, the largest progeny in the graph.
    pub fn max(&self) -> usize {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Agent, usize)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &p)| (Agent::from_index(i), p))
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Reverse-adjacency BFS from every agent.
pub fn progeny(dag: &Dag) -> ProgenyTable {
    let n = dag.n();
    let mut stamp = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let mut counts = Vec::with_capacity(n);
    for root in 0..n {
        stamp[root] = root;
        queue.push_back(root);
        let mut count = 0;
        while let Some(v) = queue.pop_front() {
            count += 1;
            for &u in dag.pred_of(v) {
                if stamp[u] != root {
                    stamp[u] = root;
                    queue.push_back(u);
                }
            }
        }
        counts.push(count);
    }
    ProgenyTable { counts }
}

/// The set `P_i`, sorted by ID.
pub fn progeny_set(dag: &Dag, agent: Agent) -> Result<Vec<Agent>, GraphError> {
    dag.check_agent(agent)?;
    let mut seen = vec![false; dag.n()];
    let mut stack = vec![agent.index()];
    seen[agent.index()] = true;
    while let Some(v) = stack.pop() {
        for &u in dag.pred_of(v) {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    Ok(seen
        .iter()
        .enumerate()
        .filter(|(_, &s)| s)
        .map(|(i, _)| Agent::from_index(i))
        .collect())
}

/// Bitset transitive closure: row `v` holds the ancestors of `v`
/// (its progeny set), including `v`.
#[derive(Debug, Clone)]
pub struct Closure {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Closure {
    pub fn new(dag: &Dag) -> Self {
        let n = dag.n();
        let words = n.div_ceil(64);
        let mut bits = vec![0u64; n * words];
        let mut acc = vec![0u64; words];
        for &v in dag.topo() {
            acc.fill(0);
            acc[v / 64] |= 1 << (v % 64);
            for &u in dag.pred_of(v) {
                // u precedes v in topological order, so row u is final.
                for (dst, src) in acc.iter_mut().zip(&bits[u * words..(u + 1) * words]) {
                    *dst |= *src;
                }
            }
            bits[v * words..(v + 1) * words].copy_from_slice(&acc);
        }
        Closure { n, words, bits }
    }

    fn row(&self, v: usize) -> &[u64] {
        &self.bits[v * self.words..(v + 1) * self.words]
    }

    /// Whether `member` lies in `P_of`, i.e. a path `member -> ... -> of`
    /// exists.
    pub fn in_progeny(&self, member: Agent, of: Agent) -> bool {
        let m = member.index();
        self.row(of.index())[m / 64] >> (m % 64) & 1 == 1
    }

    pub fn count(&self, agent: Agent) -> usize {
        self.row(agent.index())
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    pub fn progeny(&self) -> ProgenyTable {
        ProgenyTable {
            counts: (0..self.n)
                .map(|v| self.count(Agent::from_index(v)))
                .collect(),
        }
    }
}
