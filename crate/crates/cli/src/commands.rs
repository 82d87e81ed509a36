use std::fmt::Write as _;

use geomech_core::bounds::{convergence_table, limit_constant, ConvergenceRow};
use geomech_core::graph::{parse_edge_list, progeny, serialize, GraphFormat};
use geomech_core::influence::influential_set;
use geomech_core::mechanism::{expected_ratio, to_f64};
use geomech_core::verify::{
    check_observations, check_root_property, replay, run_fairness_on, run_ic, Counterexample,
    FairnessRun, IcViolation, ObservationReport, SubsetBudget,
};
use geomech_core::{
    Agent, Dag, InfluentialSet, Mechanism, MechanismKind, Prob, RatioReport, SelectionDistribution,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{BoundArgs, EvalArgs, GenerateArgs, SelectArgs, VerifyArgs};
use crate::render::{csv_pairs, render, text_pairs, write_out, Format, Render};
use crate::source::{generator_error, read_text, resolve, Source, SourceInfo};
use crate::{CliError, Status};

const DEFAULT_TRIALS: u64 = 100;
const DEFAULT_FAIRNESS_SAMPLES: u64 = 500;

fn mechanism(name: &Option<String>) -> Result<MechanismKind, CliError> {
    match name {
        None => Ok(MechanismKind::Geometric),
        Some(s) => s.parse().map_err(|_| {
            CliError::Config(format!(
                "unknown mechanism {s:?} (expected geometric, uniform or optimal-non-ic)"
            ))
        }),
    }
}

fn edge_list(dag: &Dag) -> String {
    serialize(dag, GraphFormat::EdgeList)
}

fn exact(p: &Prob) -> String {
    format!("{p} ({})", to_f64(p))
}

#[derive(Serialize)]
struct SelectReport {
    command: &'static str,
    seed: u64,
    mechanism: MechanismKind,
    source: SourceInfo,
    n: usize,
    edges: usize,
    influential_set: InfluentialSet,
    distribution: SelectionDistribution,
    #[serde(flatten)]
    ratio: RatioReport,
    #[serde(skip)]
    progeny: Vec<usize>,
}

impl SelectReport {
    fn meta(&self) -> String {
        format!(
            "select seed={} mechanism={} n={} edges={}",
            self.seed, self.mechanism, self.n, self.edges
        )
    }
}

impl Render for SelectReport {
    fn csv(&self) -> String {
        let mut out = format!(
            "# {} ratio={} expected_progeny={} max_progeny={}\n",
            self.meta(),
            self.ratio.ratio,
            self.ratio.expected_progeny,
            self.ratio.max_progeny
        );
        out.push_str("agent,progeny,influential_rank,probability,probability_float\n");
        for (idx, p) in self.progeny.iter().enumerate() {
            let agent = Agent::from_index(idx);
            let rank = self
                .influential_set
                .position(agent)
                .map(|r| (r + 1).to_string())
                .unwrap_or_default();
            let x = self.distribution.prob(agent);
            let _ = writeln!(out, "{agent},{p},{rank},{x},{}", to_f64(&x));
        }
        let a = self.distribution.abstain();
        let _ = writeln!(out, "abstain,,,{a},{}", to_f64(a));
        out
    }

    fn text(&self) -> String {
        let set = self
            .influential_set
            .members()
            .iter()
            .map(|m| format!("{} (progeny {})", m.agent, m.progeny))
            .collect::<Vec<_>>()
            .join(", ");
        let mut out = format!("# {}\ninfluential set: {set}\n", self.meta());
        for (agent, p) in self.distribution.support() {
            let _ = writeln!(out, "  agent {agent}: {}", exact(p));
        }
        let _ = writeln!(out, "  abstain: {}", exact(self.distribution.abstain()));
        let _ = writeln!(
            out,
            "expected progeny: {}\nmax progeny: {}\nratio: {}",
            exact(&self.ratio.expected_progeny),
            self.ratio.max_progeny,
            exact(&self.ratio.ratio)
        );
        out
    }
}

pub fn select(args: &SelectArgs) -> Result<Status, CliError> {
    let format = Format::parse(&args.output.format)?;
    let mech = mechanism(&args.mechanism)?;
    let source = resolve(&args.source)?;
    let dag = source.graph(0).map_err(generator_error)?;
    let distribution = mech.select(&dag);
    let ratio = expected_ratio(&dag, &distribution).expect("mechanism covers every agent");
    let report = SelectReport {
        command: "select",
        seed: args.source.seed,
        mechanism: mech,
        source: source.info(),
        n: dag.n(),
        edges: dag.edge_count(),
        influential_set: influential_set(&dag),
        distribution,
        ratio,
        progeny: progeny(&dag).counts().to_vec(),
    };
    write_out(&render(&report, format), &args.output.output)?;
    Ok(Status::Pass)
}

/// A counterexample plus the edges the agent hid, for reading convenience.
#[derive(Serialize)]
struct CounterexampleView {
    #[serde(flatten)]
    counterexample: Counterexample,
    hidden: Vec<(Agent, Agent)>,
}

impl CounterexampleView {
    fn new(counterexample: Counterexample) -> Self {
        let v: &IcViolation = &counterexample.violation;
        let hidden = parse_edge_list(&counterexample.graph)
            .map(|dag| {
                dag.out_edges(v.agent)
                    .filter(|t| !v.misreport.contains(t))
                    .map(|t| (v.agent, t))
                    .collect()
            })
            .unwrap_or_default();
        CounterexampleView {
            counterexample,
            hidden,
        }
    }

    fn describe(&self) -> String {
        let v = &self.counterexample.violation;
        let hidden = self
            .hidden
            .iter()
            .map(|(a, b)| format!("({a},{b})"))
            .collect::<Vec<_>>()
            .join(" ");
        format!(
            "agent {} hides [{hidden}]: {} -> {}",
            v.agent, v.truthful_prob, v.misreport_prob
        )
    }
}

#[derive(Serialize)]
struct IcOut {
    command: &'static str,
    mode: &'static str,
    seed: u64,
    mechanism: MechanismKind,
    source: SourceInfo,
    subset_cap: u64,
    exhaustive: bool,
    graphs: usize,
    agents: usize,
    subsets: u64,
    sampled_agents: usize,
    violations: usize,
    counterexamples: Vec<CounterexampleView>,
}

impl IcOut {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("subset_cap", self.subset_cap.to_string()),
            ("exhaustive", self.exhaustive.to_string()),
            ("graphs", self.graphs.to_string()),
            ("agents", self.agents.to_string()),
            ("subsets", self.subsets.to_string()),
            ("sampled_agents", self.sampled_agents.to_string()),
            ("violations", self.violations.to_string()),
        ]
    }

    fn meta(&self) -> String {
        format!(
            "verify mode=ic seed={} mechanism={}",
            self.seed, self.mechanism
        )
    }
}

impl Render for IcOut {
    fn csv(&self) -> String {
        csv_pairs(&self.meta(), &self.pairs())
    }

    fn text(&self) -> String {
        let mut out = text_pairs(&self.meta(), &self.pairs());
        for c in &self.counterexamples {
            let _ = writeln!(out, "violation: {}", c.describe());
        }
        out
    }
}

#[derive(Serialize)]
struct ReplayItem {
    #[serde(flatten)]
    counterexample: CounterexampleView,
    replayed_with: MechanismKind,
    replay: geomech_core::verify::Replay,
}

#[derive(Serialize)]
struct ReplayOut {
    command: &'static str,
    mode: &'static str,
    seed: u64,
    file: String,
    reproduced: usize,
    replays: Vec<ReplayItem>,
}

impl ReplayOut {
    fn meta(&self) -> String {
        format!("verify mode=replay seed={} file={}", self.seed, self.file)
    }
}

impl Render for ReplayOut {
    fn csv(&self) -> String {
        let mut out = format!("# {}\n", self.meta());
        out.push_str("mechanism,agent,truthful_prob,misreport_prob,reproduced\n");
        for r in &self.replays {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.replayed_with,
                r.counterexample.counterexample.violation.agent,
                r.replay.truthful_prob,
                r.replay.misreport_prob,
                r.replay.reproduced
            );
        }
        out
    }

    fn text(&self) -> String {
        let mut out = format!("# {}\n", self.meta());
        for r in &self.replays {
            let verdict = if r.replay.reproduced {
                "reproduced"
            } else {
                "not reproduced"
            };
            let _ = writeln!(
                out,
                "{} {}: {verdict}",
                r.replayed_with,
                r.counterexample.describe()
            );
        }
        let _ = writeln!(
            out,
            "{} of {} reproduced",
            self.reproduced,
            self.replays.len()
        );
        out
    }
}

fn load_counterexamples(text: &str) -> Result<Vec<Counterexample>, CliError> {
    let bad = |e: serde_json::Error| CliError::Input(format!("replay file: {e}"));
    let value: serde_json::Value = serde_json::from_str(text).map_err(bad)?;
    let items = match value {
        serde_json::Value::Array(items) => items,
        serde_json::Value::Object(mut map) => match map.remove("counterexamples") {
            Some(serde_json::Value::Array(items)) => items,
            Some(_) => return Err(CliError::Input("\"counterexamples\" is not a list".into())),
            None => vec![serde_json::Value::Object(map)],
        },
        _ => {
            return Err(CliError::Input(
                "replay file holds no counterexample".into(),
            ))
        }
    };
    items
        .into_iter()
        .map(|v| serde_json::from_value(v).map_err(bad))
        .collect()
}

fn verify_replay(args: &VerifyArgs, format: Format) -> Result<Status, CliError> {
    let path = args.replay.as_ref().expect("replay path");
    let override_mech = args
        .mechanism
        .as_ref()
        .map(|_| mechanism(&args.mechanism))
        .transpose()?;
    let mut replays = Vec::new();
    for cex in load_counterexamples(&read_text(path)?)? {
        let mech = match override_mech {
            Some(m) => m,
            None => mechanism(&Some(cex.mechanism.clone()))?,
        };
        let rep = replay(&mech, &cex).map_err(|e| CliError::Input(format!("replay graph: {e}")))?;
        replays.push(ReplayItem {
            counterexample: CounterexampleView::new(cex),
            replayed_with: mech,
            replay: rep,
        });
    }
    let reproduced = replays.iter().filter(|r| r.replay.reproduced).count();
    let report = ReplayOut {
        command: "verify",
        mode: "replay",
        seed: args.source.seed,
        file: path.display().to_string(),
        reproduced,
        replays,
    };
    write_out(&render(&report, format), &args.output.output)?;
    Ok(if reproduced > 0 {
        Status::Violation
    } else {
        Status::Pass
    })
}

#[derive(Serialize)]
struct FairnessOut {
    command: &'static str,
    mode: &'static str,
    seed: u64,
    source: SourceInfo,
    target: u64,
    max_attempts: u64,
    #[serde(flatten)]
    run: FairnessRun,
}

impl FairnessOut {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("target", self.target.to_string()),
            ("max_attempts", self.max_attempts.to_string()),
            ("attempts", self.run.attempts.to_string()),
            ("accepted", self.run.accepted.to_string()),
            ("discarded", self.run.discarded.to_string()),
            ("failures", self.run.failures.len().to_string()),
        ]
    }

    fn meta(&self) -> String {
        format!(
            "verify mode=fairness seed={} mechanism={}",
            self.seed, self.run.mechanism
        )
    }
}

impl Render for FairnessOut {
    fn csv(&self) -> String {
        csv_pairs(&self.meta(), &self.pairs())
    }

    fn text(&self) -> String {
        let mut out = text_pairs(&self.meta(), &self.pairs());
        for f in &self.run.failures {
            let _ = writeln!(
                out,
                "unfair at trial {}: agent {} gets {} vs {}",
                f.trial, f.outcome.pivot, f.outcome.base_prob, f.outcome.mutated_prob
            );
        }
        out
    }
}

#[derive(Serialize)]
struct GraphFailure<T: Serialize> {
    trial: u64,
    graph: String,
    #[serde(flatten)]
    detail: T,
}

#[derive(Serialize)]
struct CheckOut<T: Serialize> {
    command: &'static str,
    mode: &'static str,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mechanism: Option<MechanismKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    subset_cap: Option<u64>,
    source: SourceInfo,
    graphs: usize,
    failures: Vec<GraphFailure<T>>,
}

impl<T: Serialize> CheckOut<T> {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut pairs = Vec::new();
        if let Some(cap) = self.subset_cap {
            pairs.push(("subset_cap", cap.to_string()));
        }
        pairs.push(("graphs", self.graphs.to_string()));
        pairs.push(("failures", self.failures.len().to_string()));
        pairs
    }

    fn meta(&self) -> String {
        let mut m = format!("verify mode={} seed={}", self.mode, self.seed);
        if let Some(mech) = self.mechanism {
            let _ = write!(m, " mechanism={mech}");
        }
        m
    }
}

impl<T: Serialize> Render for CheckOut<T> {
    fn csv(&self) -> String {
        csv_pairs(&self.meta(), &self.pairs())
    }

    fn text(&self) -> String {
        let mut out = text_pairs(&self.meta(), &self.pairs());
        for f in &self.failures {
            let detail = serde_json::to_string(&f.detail).expect("serializable");
            let _ = writeln!(out, "failure at trial {}: {detail}", f.trial);
        }
        out
    }
}

#[derive(Serialize)]
struct RootFailure {
    outside: Vec<Agent>,
}

#[derive(Serialize)]
struct ObservationFailure {
    #[serde(flatten)]
    report: ObservationReport,
}

pub fn verify(args: &VerifyArgs) -> Result<Status, CliError> {
    let format = Format::parse(&args.output.format)?;
    let mode = args.mode.as_str();
    if !matches!(mode, "ic" | "fairness" | "observations" | "root") {
        return Err(CliError::Config(format!(
            "unknown mode {mode:?} (expected ic, fairness, observations or root)"
        )));
    }
    if args.replay.is_some() {
        if mode != "ic" {
            return Err(CliError::Config(
                "--replay only applies to --mode ic".into(),
            ));
        }
        return verify_replay(args, format);
    }
    let mech = mechanism(&args.mechanism)?;
    let source = resolve(&args.source)?;
    let seed = args.source.seed;
    let budget = SubsetBudget::new(args.subset_cap, seed);
    let (text, violated) = match mode {
        "ic" => {
            let graphs = source.graphs(args.trials.unwrap_or(DEFAULT_TRIALS))?;
            let run = run_ic(&mech, &graphs, budget);
            let report = IcOut {
                command: "verify",
                mode: "ic",
                seed,
                mechanism: mech,
                source: source.info(),
                subset_cap: args.subset_cap,
                exhaustive: run.sampled_agents == 0,
                graphs: run.graphs,
                agents: run.agents,
                subsets: run.subsets,
                sampled_agents: run.sampled_agents,
                violations: run.counterexamples.len(),
                counterexamples: run
                    .counterexamples
                    .into_iter()
                    .map(CounterexampleView::new)
                    .collect(),
            };
            (render(&report, format), report.violations > 0)
        }
        "fairness" => {
            let target = args.trials.unwrap_or(DEFAULT_FAIRNESS_SAMPLES);
            let max_attempts = args.max_attempts.unwrap_or(target.saturating_mul(100));
            let run = run_fairness_on(
                &mech,
                seed,
                |t| source.graph(t),
                target as usize,
                max_attempts,
            )
            .map_err(generator_error)?;
            let violated = !run.failures.is_empty();
            let report = FairnessOut {
                command: "verify",
                mode: "fairness",
                seed,
                source: source.info(),
                target,
                max_attempts,
                run,
            };
            (render(&report, format), violated)
        }
        "observations" => {
            let graphs = source.graphs(args.trials.unwrap_or(DEFAULT_TRIALS))?;
            let failures = collect_failures(&graphs, |g| {
                let r = check_observations(g, budget);
                (!r.all()).then_some(ObservationFailure { report: r })
            });
            let report = CheckOut {
                command: "verify",
                mode: "observations",
                seed,
                mechanism: None,
                subset_cap: Some(args.subset_cap),
                source: source.info(),
                graphs: graphs.len(),
                failures,
            };
            (render(&report, format), !report.failures.is_empty())
        }
        _ => {
            let graphs = source.graphs(args.trials.unwrap_or(DEFAULT_TRIALS))?;
            let failures = collect_failures(&graphs, |g| {
                if check_root_property(&mech, g) {
                    return None;
                }
                let set = influential_set(g);
                let outside = mech
                    .select(g)
                    .support()
                    .map(|(a, _)| a)
                    .filter(|a| !set.contains(*a))
                    .collect();
                Some(RootFailure { outside })
            });
            let report = CheckOut {
                command: "verify",
                mode: "root",
                seed,
                mechanism: Some(mech),
                subset_cap: None,
                source: source.info(),
                graphs: graphs.len(),
                failures,
            };
            (render(&report, format), !report.failures.is_empty())
        }
    };
    write_out(&text, &args.output.output)?;
    Ok(if violated {
        Status::Violation
    } else {
        Status::Pass
    })
}

fn collect_failures<T, F>(graphs: &[Dag], check: F) -> Vec<GraphFailure<T>>
where
    T: Serialize + Send,
    F: Fn(&Dag) -> Option<T> + Sync,
{
    let found: Vec<Option<T>> = graphs.par_iter().map(&check).collect();
    found
        .into_iter()
        .zip(graphs)
        .enumerate()
        .filter_map(|(trial, (detail, g))| {
            detail.map(|detail| GraphFailure {
                trial: trial as u64,
                graph: edge_list(g),
                detail,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct EvalRow {
    trial: u64,
    n: usize,
    edges: usize,
    influential: usize,
    #[serde(flatten)]
    ratio: RatioReport,
}

#[derive(Serialize)]
struct EvalSummary {
    graphs: usize,
    min_ratio: String,
    min_ratio_float: f64,
    min_trial: u64,
    mean_ratio_float: f64,
    max_ratio: String,
    max_ratio_float: f64,
}

#[derive(Serialize)]
struct EvalOut {
    command: &'static str,
    seed: u64,
    mechanism: MechanismKind,
    source: SourceInfo,
    summary: EvalSummary,
    rows: Vec<EvalRow>,
}

impl EvalOut {
    fn meta(&self) -> String {
        format!("eval seed={} mechanism={}", self.seed, self.mechanism)
    }
}

impl Render for EvalOut {
    fn csv(&self) -> String {
        let mut out = format!("# {}\n", self.meta());
        out.push_str("trial,n,edges,influential,expected_progeny,max_progeny,ratio,ratio_float\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.trial,
                r.n,
                r.edges,
                r.influential,
                r.ratio.expected_progeny,
                r.ratio.max_progeny,
                r.ratio.ratio,
                r.ratio.ratio_f64()
            );
        }
        out
    }

    fn text(&self) -> String {
        let s = &self.summary;
        text_pairs(
            &self.meta(),
            &[
                ("graphs", s.graphs.to_string()),
                (
                    "min ratio",
                    format!(
                        "{} ({}) at trial {}",
                        s.min_ratio, s.min_ratio_float, s.min_trial
                    ),
                ),
                ("mean ratio", s.mean_ratio_float.to_string()),
                (
                    "max ratio",
                    format!("{} ({})", s.max_ratio, s.max_ratio_float),
                ),
            ],
        )
    }
}

pub fn eval(args: &EvalArgs) -> Result<Status, CliError> {
    let format = Format::parse(&args.output.format)?;
    let mech = mechanism(&args.mechanism)?;
    let source = resolve(&args.source)?;
    let graphs = source.graphs(args.trials.unwrap_or(DEFAULT_TRIALS))?;
    let rows: Vec<EvalRow> = graphs
        .par_iter()
        .enumerate()
        .map(|(trial, g)| EvalRow {
            trial: trial as u64,
            n: g.n(),
            edges: g.edge_count(),
            influential: influential_set(g).len(),
            ratio: expected_ratio(g, &mech.select(g)).expect("mechanism covers every agent"),
        })
        .collect();
    let min = rows
        .iter()
        .min_by(|a, b| a.ratio.ratio.cmp(&b.ratio.ratio))
        .ok_or_else(|| CliError::Config("--trials must be at least 1".into()))?;
    let max = rows
        .iter()
        .max_by(|a, b| a.ratio.ratio.cmp(&b.ratio.ratio))
        .expect("nonempty");
    let summary = EvalSummary {
        graphs: rows.len(),
        min_ratio: min.ratio.ratio.to_string(),
        min_ratio_float: min.ratio.ratio_f64(),
        min_trial: min.trial,
        mean_ratio_float: rows.iter().map(|r| r.ratio.ratio_f64()).sum::<f64>() / rows.len() as f64,
        max_ratio: max.ratio.ratio.to_string(),
        max_ratio_float: max.ratio.ratio_f64(),
    };
    let report = EvalOut {
        command: "eval",
        seed: args.source.seed,
        mechanism: mech,
        source: source.info(),
        summary,
        rows,
    };
    write_out(&render(&report, format), &args.output.output)?;
    Ok(Status::Pass)
}

#[derive(Serialize)]
struct Limit {
    value: f64,
    expression: &'static str,
}

#[derive(Serialize)]
struct BoundOut {
    command: &'static str,
    seed: u64,
    rows: Vec<ConvergenceRow>,
    limit: Limit,
}

impl Render for BoundOut {
    fn csv(&self) -> String {
        let mut out = format!("# bound seed={}\nk,r_k,gap\n", self.seed);
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", r.k, r.ratio, r.gap);
        }
        let _ = writeln!(out, "limit,{},0", self.limit.value);
        out
    }

    fn text(&self) -> String {
        let mut out = format!(
            "# bound seed={}\n{:>10}  {:<20}  {}\n",
            self.seed, "k", "r_k", "gap"
        );
        for r in &self.rows {
            let _ = writeln!(out, "{:>10}  {:<20}  {:e}", r.k, r.ratio, r.gap);
        }
        let _ = writeln!(
            out,
            "{:>10}  {:<20}  {}",
            "limit", self.limit.value, self.limit.expression
        );
        out
    }
}

pub fn bound(args: &BoundArgs) -> Result<Status, CliError> {
    let format = Format::parse(&args.format)?;
    if args.k.is_empty() {
        return Err(CliError::Input("no values of k given".into()));
    }
    let rows = convergence_table(&args.k).map_err(|e| CliError::Input(e.to_string()))?;
    let report = BoundOut {
        command: "bound",
        seed: args.seed,
        rows,
        limit: Limit {
            value: limit_constant(),
            expression: "1/(1+ln 2)",
        },
    };
    write_out(&render(&report, format), &args.output)?;
    Ok(Status::Pass)
}

pub fn generate(args: &GenerateArgs) -> Result<Status, CliError> {
    let format: GraphFormat = args.graph_format.parse().map_err(|_| {
        CliError::Config(format!(
            "unknown graph format {:?} (expected edge-list or dot)",
            args.graph_format
        ))
    })?;
    let source = resolve(&args.source)?;
    let Source::Ensemble(spec) = &source else {
        return Err(CliError::Config(
            "generate needs --family, not --input".into(),
        ));
    };
    let dag = spec.graph(0).map_err(generator_error)?;
    let mut meta = format!("generated family={} seed={}", spec.family, spec.seed);
    match spec.family.as_str() {
        "gnp-dag" | "random-forest" => {
            let _ = write!(meta, " n={} p={}", dag.n(), spec.p);
        }
        "chain" => {
            let _ = write!(meta, " n={}", dag.n());
        }
        _ => {
            let _ = write!(meta, " k={}", spec.k);
        }
    }
    if let Some(j) = spec.j {
        let _ = write!(meta, " j={j}");
    }
    if let Some(cap) = spec.max_out_degree {
        let _ = write!(meta, " max_out_degree={cap}");
    }
    if spec.shuffle_labels {
        meta.push_str(" shuffled");
    }
    let comment = match format {
        GraphFormat::EdgeList => "#",
        GraphFormat::Dot => "//",
    };
    let text = format!("{comment} {meta}\n{}", serialize(&dag, format));
    write_out(&text, &args.output)?;
    Ok(Status::Pass)
}
