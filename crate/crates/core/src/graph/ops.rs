use std::collections::BTreeSet;

use super::{progeny_set, Agent, Dag, GraphError};

/// Declared out-edge sets, one per agent. A report is only meaningful
/// against the true graph it was derived from: every declared edge must be
/// a true out-edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportProfile {
    declared: Vec<BTreeSet<Agent>>,
}

impl ReportProfile {
    /// Every agent reports all of its true out-edges.
    pub fn truthful(dag: &Dag) -> Self {
        ReportProfile {
            declared: dag.agents().map(|a| dag.out_edges(a).collect()).collect(),
        }
    }

    pub fn with_report<I>(mut self, agent: Agent, targets: I) -> Self
    where
        I: IntoIterator<Item = Agent>,
    {
        self.declared[agent.index()] = targets.into_iter().collect();
        self
    }

    pub fn declared(&self, agent: Agent) -> &BTreeSet<Agent> {
        &self.declared[agent.index()]
    }

    pub fn len(&self) -> usize {
        self.declared.len()
    }

    pub fn is_empty(&self) -> bool {
        self.declared.is_empty()
    }
}

/// The graph induced by a report profile.
pub fn apply_report(truth: &Dag, report: &ReportProfile) -> Result<Dag, GraphError> {
    if report.len() != truth.n() {
        return Err(GraphError::ReportSize {
            got: report.len(),
            n: truth.n(),
        });
    }
    for agent in truth.agents() {
        let declared = report.declared(agent);
        if let Some(bad) = declared.iter().find(|&&t| !truth.has_edge(agent, t)) {
            return Err(GraphError::FabricatedEdge {
                from: agent.id(),
                to: bad.id(),
            });
        }
    }
    Ok(truth.filter_edges(|u, v| {
        report
            .declared(Agent::from_index(u))
            .contains(&Agent::from_index(v))
    }))
}

/// Deletes exactly `agent`'s out-edges.
pub fn remove_out_edges(dag: &Dag, agent: Agent) -> Result<Dag, GraphError> {
    restrict_out_edges(dag, agent, &[])
}

/// Replaces `agent`'s out-edges with `keep`, which must be a subset of them.
pub fn restrict_out_edges(dag: &Dag, agent: Agent, keep: &[Agent]) -> Result<Dag, GraphError> {
    dag.check_agent(agent)?;
    if let Some(bad) = keep.iter().find(|&&t| !dag.has_edge(agent, t)) {
        return Err(GraphError::FabricatedEdge {
            from: agent.id(),
            to: bad.id(),
        });
    }
    let a = agent.index();
    Ok(dag.filter_edges(|u, v| u != a || keep.iter().any(|t| t.index() == v)))
}

/// The subgraph `G(i)` induced by an agent's progeny, relabelled
/// `1..=p_i` in increasing order of original ID.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgraph {
    pub graph: Dag,
    pub original: Vec<Agent>,
}

impl Subgraph {
    pub fn original_id(&self, local: Agent) -> Agent {
        self.original[local.index()]
    }
}

pub fn progeny_subgraph(dag: &Dag, agent: Agent) -> Result<Subgraph, GraphError> {
    let members = progeny_set(dag, agent)?;
    let mut local = vec![usize::MAX; dag.n()];
    for (pos, a) in members.iter().enumerate() {
        local[a.index()] = pos;
    }
    let mut edges = Vec::new();
    for (pos, &a) in members.iter().enumerate() {
        for t in dag.out_edges(a) {
            if local[t.index()] != usize::MAX {
                edges.push((pos + 1, local[t.index()] + 1));
            }
        }
    }
    Ok(Subgraph {
        graph: Dag::new(members.len(), edges).expect("subgraphs of a DAG are DAGs"),
        original: members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gnp_dag, upper_bound_graph};
    use crate::graph::progeny;
    use proptest::prelude::*;

    fn ids(dag: &Dag) -> Vec<(usize, usize)> {
        dag.edges().map(|(a, b)| (a.id(), b.id())).collect()
    }

    fn chain() -> Dag {
        Dag::new(3, [(2, 1), (3, 2)]).unwrap()
    }

    #[test]
    fn remove_out_edges_examples() {
        let g = remove_out_edges(&chain(), Agent::new(2)).unwrap();
        assert_eq!(ids(&g), vec![(3, 2)]);
        let same = remove_out_edges(&chain(), Agent::new(1)).unwrap();
        assert_eq!(same, chain());
        assert!(remove_out_edges(&chain(), Agent::new(4)).is_err());
    }

    #[test]
    fn remove_out_edges_on_upper_bound_graph() {
        // Agent 3 loses (3,4): agent 4 keeps only itself, agent 5 keeps {4,5}.
        let g = remove_out_edges(&upper_bound_graph(3).unwrap(), Agent::new(3)).unwrap();
        assert_eq!(progeny(&g).counts(), &[1, 1, 3, 1, 2]);
    }

    #[test]
    fn apply_report_examples() {
        let truth = chain();
        let honest = ReportProfile::truthful(&truth);
        assert_eq!(apply_report(&truth, &honest).unwrap(), truth);

        let hide = honest.clone().with_report(Agent::new(2), []);
        assert_eq!(ids(&apply_report(&truth, &hide).unwrap()), vec![(3, 2)]);

        let fake = honest.with_report(Agent::new(1), [Agent::new(3)]);
        assert_eq!(
            apply_report(&truth, &fake),
            Err(GraphError::FabricatedEdge { from: 1, to: 3 })
        );
    }

    #[test]
    fn progeny_subgraph_examples() {
        let leaf = progeny_subgraph(&chain(), Agent::new(3)).unwrap();
        assert_eq!(leaf.graph.n(), 1);
        assert_eq!(leaf.original, vec![Agent::new(3)]);

        let whole = progeny_subgraph(&chain(), Agent::new(1)).unwrap();
        assert_eq!(whole.graph, chain());

        let g = upper_bound_graph(3).unwrap();
        let sub = progeny_subgraph(&g, Agent::new(4)).unwrap();
        let orig: Vec<_> = sub.original.iter().map(|a| a.id()).collect();
        assert_eq!(orig, vec![1, 2, 3, 4]);
        assert_eq!(ids(&sub.graph), vec![(1, 3), (2, 3), (3, 4)]);
        assert_eq!(sub.original_id(Agent::new(4)), Agent::new(4));
    }

    proptest! {
        #[test]
        fn removal_only_touches_downstream(n in 1usize..=12, p in 0.0f64..=1.0, seed: u64, pick: usize) {
            let dag = gnp_dag(n, p, seed).unwrap();
            let i = Agent::from_index(pick % n);
            let before = progeny(&dag);
            let cut = remove_out_edges(&dag, i).unwrap();
            prop_assert_eq!(cut.topological_order().len(), n);
            let after = progeny(&cut);
            for j in dag.agents() {
                if !progeny_set(&dag, j).unwrap().contains(&i) {
                    prop_assert_eq!(before.get(j), after.get(j));
                }
            }
            prop_assert_eq!(before.get(i), after.get(i));
        }
    }
}
