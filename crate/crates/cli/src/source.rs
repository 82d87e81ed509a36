use std::fs;
use std::io::Read;
use std::path::Path;

use geomech_core::generators::{EnsembleSpec, GeneratorError, GraphFamily};
use geomech_core::graph::parse_edge_list;
use geomech_core::Dag;
use serde::Serialize;

use crate::args::SourceArgs;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceInfo {
    File {
        path: String,
    },
    Ensemble {
        #[serde(flatten)]
        spec: EnsembleSpec,
    },
}

/// A single parsed graph, or a seeded generator indexed by trial.
pub enum Source {
    File { path: String, dag: Dag },
    Ensemble(EnsembleSpec),
}

impl Source {
    pub fn info(&self) -> SourceInfo {
        match self {
            Source::File { path, .. } => SourceInfo::File { path: path.clone() },
            Source::Ensemble(spec) => SourceInfo::Ensemble { spec: spec.clone() },
        }
    }

    pub fn graph(&self, trial: u64) -> Result<Dag, GeneratorError> {
        match self {
            Source::File { dag, .. } => Ok(dag.clone()),
            Source::Ensemble(spec) => spec.graph(trial),
        }
    }

    /// Graphs `0..trials`; a file always yields its one graph.
    pub fn graphs(&self, trials: u64) -> Result<Vec<Dag>, CliError> {
        match self {
            Source::File { dag, .. } => Ok(vec![dag.clone()]),
            Source::Ensemble(spec) => spec
                .graphs(trials)
                .map(|g| g.map_err(generator_error))
                .collect(),
        }
    }
}

pub fn generator_error(e: GeneratorError) -> CliError {
    match e {
        GeneratorError::UnknownFamily(_) => CliError::Config(e.to_string()),
        other => CliError::Input(other.to_string()),
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| CliError::Input(format!("reading standard input: {e}")))?;
        Ok(buf)
    } else {
        fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

fn parse_nodes(text: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Config(format!("--n expects N or A-B, got {text:?}"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let (lo, hi) = match text.split_once('-') {
        Some((a, b)) => (num(a)?, num(b)?),
        None => {
            let n = num(text)?;
            (n, n)
        }
    };
    if lo == 0 || lo > hi {
        return Err(CliError::Input(format!("invalid node range {lo}-{hi}")));
    }
    Ok((lo, hi))
}

pub fn resolve(args: &SourceArgs) -> Result<Source, CliError> {
    if let Some(path) = &args.input {
        let text = read_text(path)?;
        let dag = parse_edge_list(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        return Ok(Source::File {
            path: path.display().to_string(),
            dag,
        });
    }
    let Some(family) = &args.family else {
        return Err(CliError::Config(
            "no graph given: pass --input FILE or --family NAME".into(),
        ));
    };
    let family: GraphFamily = family.parse().map_err(generator_error)?;
    let mut spec = EnsembleSpec::new(family, args.seed)
        .edge_probability(args.p)
        .k(args.k)
        .shuffled(args.shuffle);
    if let Some(n) = &args.n {
        let (lo, hi) = parse_nodes(n)?;
        spec = spec.nodes(lo, hi);
    }
    if let Some(j) = args.j {
        spec = spec.j(j);
    }
    if let Some(cap) = args.max_out_degree {
        spec = spec.max_out_degree(cap);
    }
    // Surface parameter errors before any work starts.
    spec.graph(0).map_err(generator_error)?;
    Ok(Source::Ensemble(spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_ranges() {
        assert_eq!(parse_nodes("12").unwrap(), (12, 12));
        assert_eq!(parse_nodes("1-12").unwrap(), (1, 12));
        assert!(matches!(parse_nodes("x"), Err(CliError::Config(_))));
        assert!(matches!(parse_nodes("5-2"), Err(CliError::Input(_))));
        assert!(matches!(parse_nodes("0"), Err(CliError::Input(_))));
    }
}
