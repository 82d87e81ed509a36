use std::fmt::Write;
use std::str::FromStr;

use super::{Dag, GraphError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    EdgeList,
    Dot,
}

impl FromStr for GraphFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edge-list" | "edges" => Ok(GraphFormat::EdgeList),
            "dot" => Ok(GraphFormat::Dot),
            other => Err(format!("unknown graph format {other:?}")),
        }
    }
}

/// Parses the edge-list format: the agent count on the first significant
/// line, then one `u v` pair per line (`u` follows `v`). Blank lines and
/// lines starting with `#` are ignored.
pub fn parse_edge_list(text: &str) -> Result<Dag, GraphError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = lines.next().ok_or(GraphError::EmptyInput)?;
    let n: usize = header.parse().map_err(|_| GraphError::BadHeader {
        line: header_line,
        text: header.to_string(),
    })?;

    let mut edges = Vec::new();
    let mut line_numbers = Vec::new();
    for (line, text) in lines {
        let malformed = || GraphError::MalformedLine {
            line,
            text: text.to_string(),
        };
        let mut fields = text.split_whitespace();
        let (Some(u), Some(v), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(malformed());
        };
        let u: usize = u.parse().map_err(|_| malformed())?;
        let v: usize = v.parse().map_err(|_| malformed())?;
        edges.push((u, v));
        line_numbers.push(line);
    }
    Dag::build(n, &edges, Some(&line_numbers))
}

/// Canonical text form. Edge lists are sorted so that equal graphs always
/// serialize to identical bytes.
pub fn serialize(dag: &Dag, format: GraphFormat) -> String {
    let mut out = String::new();
    match format {
        GraphFormat::EdgeList => {
            writeln!(out, "{}", dag.n()).unwrap();
            for (u, v) in dag.edges() {
                writeln!(out, "{u} {v}").unwrap();
            }
        }
        GraphFormat::Dot => {
            out.push_str("digraph G {\n");
            for a in dag.agents() {
                writeln!(out, "  {a} [label=\"{a}\"];").unwrap();
            }
            for (u, v) in dag.edges() {
                writeln!(out, "  {u} -> {v};").unwrap();
            }
            out.push_str("}\n");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gnp_dag;
    use proptest::prelude::*;

    #[test]
    fn parses_chain() {
        let dag = parse_edge_list("3\n2 1\n3 2").unwrap();
        assert_eq!(dag, Dag::new(3, [(2, 1), (3, 2)]).unwrap());
    }

    #[test]
    fn comments_and_blank_lines() {
        let dag = parse_edge_list("# header\n\n3\n  # edge\n2 1\n\n3\t2\n").unwrap();
        assert_eq!(dag.edge_count(), 2);
    }

    #[test]
    fn error_cases_name_the_line() {
        assert!(matches!(
            parse_edge_list("2\n1 1"),
            Err(GraphError::SelfLoop {
                agent: 1,
                line: Some(2)
            })
        ));
        assert!(matches!(
            parse_edge_list("2\n1 2\n2 1"),
            Err(GraphError::Cycle {
                from: 2,
                to: 1,
                line: Some(3)
            })
        ));
        assert!(matches!(
            parse_edge_list("2\n1 2\n1 2"),
            Err(GraphError::DuplicateEdge {
                from: 1,
                to: 2,
                line: Some(3)
            })
        ));
        assert!(matches!(
            parse_edge_list("2\n1 5"),
            Err(GraphError::OutOfRange { line: Some(2), .. })
        ));
        assert!(matches!(
            parse_edge_list("2\n1 x"),
            Err(GraphError::MalformedLine { line: 2, .. })
        ));
        assert!(matches!(
            parse_edge_list("2\n1 2 3"),
            Err(GraphError::MalformedLine { line: 2, .. })
        ));
        assert!(matches!(
            parse_edge_list("two"),
            Err(GraphError::BadHeader { line: 1, .. })
        ));
        assert_eq!(parse_edge_list("# nothing\n"), Err(GraphError::EmptyInput));
        assert_eq!(parse_edge_list("0\n"), Err(GraphError::NoAgents));
    }

    #[test]
    fn cycle_message_names_the_edge() {
        let err = parse_edge_list("3\n1 2\n2 3\n3 1\n").unwrap_err();
        assert_eq!(
            err.to_string(),
            "cycle detected through edge 3 -> 1 (line 4)"
        );
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(
            serialize(&Dag::edgeless(2).unwrap(), GraphFormat::EdgeList),
            "2\n"
        );
        let chain = parse_edge_list("3\n3 2\n2 1").unwrap();
        assert_eq!(serialize(&chain, GraphFormat::EdgeList), "3\n2 1\n3 2\n");
        let dot = serialize(&chain, GraphFormat::Dot);
        assert!(dot.starts_with("digraph G {"));
        assert!(dot.contains("  3 -> 2;\n"));
        assert!(dot.contains("  1 [label=\"1\"];\n"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn edge_list_round_trip(n in 1usize..=40, p in 0.0f64..=1.0, seed: u64) {
            let dag = gnp_dag(n, p, seed).unwrap();
            let text = serialize(&dag, GraphFormat::EdgeList);
            prop_assert_eq!(parse_edge_list(&text).unwrap(), dag);
        }
    }
}
