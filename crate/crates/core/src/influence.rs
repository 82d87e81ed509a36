//! Influential nodes: agents that become the progeny maximum once their own
//! out-edges are deleted.

use std::cmp::{Ordering, Reverse};

use serde::Serialize;

use crate::graph::{remove_out_edges, Agent, Closure, Dag, GraphError, ProgenyTable};

/// The tie-break order: larger progeny wins, equal progeny goes to the
/// lower ID.
pub fn precedes(p_i: usize, i: Agent, p_j: usize, j: Agent) -> bool {
    p_i > p_j || (p_i == p_j && i < j)
}

/// Total order consistent with [`precedes`]; `Less` means "ranks first".
pub fn rank_cmp(p_i: usize, i: Agent, p_j: usize, j: Agent) -> Ordering {
    (Reverse(p_i), i).cmp(&(Reverse(p_j), j))
}

fn is_max(table: &ProgenyTable, agent: Agent) -> bool {
    let p = table.get(agent);
    table
        .iter()
        .all(|(j, p_j)| j == agent || precedes(p, agent, p_j, j))
}

/// Deletes `agent`'s out-edges, recomputes every progeny and asks whether
/// `agent` is the maximum.
pub fn is_influential(dag: &Dag, agent: Agent) -> Result<bool, GraphError> {
    let cut = remove_out_edges(dag, agent)?;
    Ok(is_max(&Closure::new(&cut).progeny(), agent))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InfluentialNode {
    pub agent: Agent,
    pub progeny: usize,
}

/// Influential nodes in rank order `s_1, s_2, ..., s_m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct InfluentialSet {
    members: Vec<InfluentialNode>,
}

impl InfluentialSet {
    pub fn members(&self) -> &[InfluentialNode] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn agents(&self) -> impl Iterator<Item = Agent> + '_ {
        self.members.iter().map(|m| m.agent)
    }

    /// 0-based rank of `agent`, if influential.
    pub fn position(&self, agent: Agent) -> Option<usize> {
        self.members.iter().position(|m| m.agent == agent)
    }

    pub fn contains(&self, agent: Agent) -> bool {
        self.position(agent).is_some()
    }

    /// `s_1`, the most influential node.
    pub fn first(&self) -> InfluentialNode {
        self.members[0]
    }

    /// Members ranked strictly after `agent`.
    pub fn ranked_below(&self, agent: Agent) -> Vec<Agent> {
        match self.position(agent) {
            Some(pos) => self.members[pos + 1..].iter().map(|m| m.agent).collect(),
            None => Vec::new(),
        }
    }
}

fn sorted(mut members: Vec<InfluentialNode>) -> InfluentialSet {
    members.sort_by(|a, b| rank_cmp(a.progeny, a.agent, b.progeny, b.agent));
    InfluentialSet { members }
}

/// Evaluates the influential-node test for every agent.
///
/// Candidates are pruned first: deleting `i`'s out-edges lowers `p*` by at
/// most `p_i`, so an influential `i` needs `2 p_i >= p*`.
pub fn influential_set(dag: &Dag) -> InfluentialSet {
    let table = Closure::new(dag).progeny();
    let p_star = table.max();
    let members = table
        .iter()
        .filter(|&(_, p)| 2 * p >= p_star)
        .filter(|&(agent, _)| is_influential(dag, agent).expect("agent in range"))
        .map(|(agent, progeny)| InfluentialNode { agent, progeny })
        .collect();
    sorted(members)
}

/// [`influential_set`] without candidate pruning, ordered by the progeny
/// each member holds in its own out-edge-deleted graph.
pub fn influential_set_unpruned(dag: &Dag) -> InfluentialSet {
    let members = dag
        .agents()
        .filter_map(|agent| {
            let cut = remove_out_edges(dag, agent).expect("agent in range");
            let table = Closure::new(&cut).progeny();
            is_max(&table, agent).then(|| InfluentialNode {
                agent,
                progeny: table.get(agent),
            })
        })
        .collect();
    sorted(members)
}

/// The agent with the maximum progeny under the tie-break order.
pub fn most_influential(dag: &Dag) -> Agent {
    let table = Closure::new(dag).progeny();
    table
        .iter()
        .min_by(|&(a, pa), &(b, pb)| rank_cmp(pa, a, pb, b))
        .map(|(a, _)| a)
        .expect("graphs have at least one agent")
}
