//! Command-line front end: identification queries, counterexample bundles,
//! estimand evaluation, and reproduction of the shipped model pairs.
//!
//! Exit codes: 0 success (and: query identifiable), 1 usage or input error,
//! 2 internal contradiction (a verification that can only fail on a bug),
//! 3 query not identifiable.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use gidkit_core::error::Error as CoreError;
use gidkit_core::estimand::Estimand;
use gidkit_core::gid::{failing_components, gid, GidResult, GivenCollection};
use gidkit_core::graph::{CausalGraph, VarId, VarSet};
use gidkit_core::rational::{format_rat, rat, Rat};
use gidkit_core::sem::{builtin_models, random_positive_sem, DiscreteSem};
use gidkit_core::table::DistTable;
use gidkit_core::witness::{build_witness, verify_witness, VerificationReport, WitnessPair};

#[derive(Parser)]
#[command(name = "gidkit", version, about = "Causal-effect identification toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide identifiability of P_x(y) from a collection of inputs and,
    /// when identifiable, derive the estimand.
    Check {
        /// Graph JSON file ({"observed", "directed", "bidirected"}).
        #[arg(long)]
        graph: PathBuf,
        /// Comma-separated treatment variables (may be empty).
        #[arg(long, default_value = "")]
        treatment: String,
        /// Comma-separated outcome variables.
        #[arg(long)]
        outcome: String,
        /// JSON file with the input collection: a list whose members are
        /// name lists, with "*" standing for all observed variables.
        /// Defaults to the single observational input.
        #[arg(long)]
        given: Option<PathBuf>,
        /// Cross-check the derived estimand numerically against brute-force
        /// enumeration on a random positive model with this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the decision and estimand as JSON to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Construct and verify a counterexample pair for a non-identifiable
    /// query, emitting the bundle as JSON.
    Witness {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value = "")]
        treatment: String,
        #[arg(long)]
        outcome: String,
        #[arg(long)]
        given: Option<PathBuf>,
        /// Write the bundle to this path instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-verify a previously emitted witness bundle.
    Verify {
        /// Bundle JSON file produced by `witness`.
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Evaluate an estimand expression against distribution tables.
    Eval {
        /// Estimand JSON file.
        #[arg(long)]
        estimand: PathBuf,
        /// JSON file with the list of input tables, in collection order.
        #[arg(long)]
        tables: PathBuf,
        /// Realization to evaluate at, as inline JSON, e.g. '{"X":0,"Y":1}'.
        #[arg(long)]
        at: String,
    },
    /// Re-derive the shipped counterexample pair by name and check its
    /// published numbers.
    Reproduce {
        /// `example2` or `thicket`.
        name: String,
    },
}

/// A witness pair together with the verification that was run on it.
#[derive(Serialize, Deserialize)]
struct Bundle {
    #[serde(flatten)]
    pair: WitnessPair,
    verification: VerificationReport,
}

#[derive(Serialize)]
struct CheckReport<'a> {
    #[serde(flatten)]
    result: &'a GidResult,
    rendered: Option<String>,
    failing: Vec<VarSet>,
}

enum Failure {
    Usage(String),
    Contradiction(String),
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InternalContradiction(_) | CoreError::ConstructionFailed(_) => {
                Failure::Contradiction(e.to_string())
            }
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().cmd) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Contradiction(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Cmd) -> Result<u8, Failure> {
    match cmd {
        Cmd::Check {
            graph,
            treatment,
            outcome,
            given,
            seed,
            out,
        } => check(&graph, &treatment, &outcome, given.as_deref(), seed, out.as_deref()),
        Cmd::Witness {
            graph,
            treatment,
            outcome,
            given,
            out,
        } => witness(&graph, &treatment, &outcome, given.as_deref(), out.as_deref()),
        Cmd::Verify { bundle } => verify(&bundle),
        Cmd::Eval {
            estimand,
            tables,
            at,
        } => eval(&estimand, &tables, &at),
        Cmd::Reproduce { name } => reproduce(&name),
    }
}

fn read_to_string(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read_to_string(path)?)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::Contradiction(format!("serialization failed: {e}")))?;
    match out {
        Some(path) => fs::write(path, text + "\n")
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn parse_names(arg: &str) -> VarSet {
    arg.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

/// One member of the `--given` file: either an explicit name list or the
/// shorthand `"*"` for all observed variables.
#[derive(Deserialize)]
#[serde(untagged)]
enum InputSpec {
    Star(String),
    Named(Vec<String>),
}

fn load_collection(
    path: Option<&Path>,
    g: &CausalGraph,
) -> Result<GivenCollection, Failure> {
    let sets: Vec<VarSet> = match path {
        None => vec![g.observed().clone()],
        Some(p) => {
            let specs: Vec<InputSpec> = parse_json(p)?;
            specs
                .into_iter()
                .map(|spec| match spec {
                    InputSpec::Star(s) if s == "*" => Ok(g.observed().clone()),
                    InputSpec::Star(s) => Err(Failure::Usage(format!(
                        "input set must be a name list or \"*\", got \"{s}\""
                    ))),
                    InputSpec::Named(names) => Ok(names.into_iter().collect()),
                })
                .collect::<Result<_, _>>()?
        }
    };
    Ok(GivenCollection::new(sets)?)
}

fn braces(s: &VarSet) -> String {
    format!("{{{}}}", s.iter().cloned().collect::<Vec<_>>().join(", "))
}

/// `P_x(y)` for every realization of `x ∪ y` on a binary-domain model,
/// keyed by the codes of `x ∪ y` in sorted order.
fn enumerated_effect(
    m: &DiscreteSem,
    x: &VarSet,
    y: &VarSet,
) -> Result<BTreeMap<Vec<usize>, Rat>, CoreError> {
    let xy: Vec<VarId> = x.union(y).cloned().collect();
    let xs: Vec<VarId> = x.iter().cloned().collect();
    let mut out = BTreeMap::new();
    let mut xbind = vec![0usize; xs.len()];
    loop {
        let at: BTreeMap<VarId, usize> =
            xs.iter().cloned().zip(xbind.iter().copied()).collect();
        let cut = m.intervene(&at)?;
        for (codes, value) in cut.iter() {
            let mut bind = at.clone();
            for (v, c) in cut.scope().iter().zip(codes.iter()) {
                bind.insert(v.clone(), *c);
            }
            let key: Vec<usize> = xy.iter().map(|v| bind[v]).collect();
            *out.entry(key).or_insert_with(Rat::zero) += value;
        }
        let mut i = 0;
        loop {
            if i == xbind.len() {
                return Ok(out);
            }
            xbind[i] += 1;
            if xbind[i] < 2 {
                break;
            }
            xbind[i] = 0;
            i += 1;
        }
    }
}

fn cross_check(
    g: &CausalGraph,
    x: &VarSet,
    y: &VarSet,
    coll: &GivenCollection,
    est: &Estimand,
    seed: u64,
) -> Result<(), Failure> {
    let m = random_positive_sem(g, seed);
    let tables: Vec<DistTable> = coll
        .iter()
        .map(|a| m.q_eval(a))
        .collect::<Result<_, _>>()
        .map_err(Failure::from)?;
    let truth = enumerated_effect(&m, x, y).map_err(Failure::from)?;
    let xy: Vec<VarId> = x.union(y).cloned().collect();
    for (key, want) in &truth {
        let mut at: BTreeMap<VarId, usize> =
            xy.iter().cloned().zip(key.iter().copied()).collect();
        for v in g.observed() {
            at.entry(v.clone()).or_insert(0);
        }
        let got = est.evaluate(&tables, &at)?;
        if &got != want {
            return Err(Failure::Contradiction(format!(
                "estimand disagrees with enumeration at {at:?}: {} != {}",
                format_rat(&got),
                format_rat(want)
            )));
        }
    }
    Ok(())
}

fn check(
    graph: &Path,
    treatment: &str,
    outcome: &str,
    given: Option<&Path>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    let g: CausalGraph = parse_json(graph)?;
    let x = parse_names(treatment);
    let y = parse_names(outcome);
    let coll = load_collection(given, &g)?;
    let res = gid(&x, &y, &coll, &g)?;
    let failing = if res.decision {
        Vec::new()
    } else {
        failing_components(&x, &y, &coll, &g)?
    };
    if res.decision {
        println!("decision: identifiable");
        for c in &res.per_component {
            println!(
                "component {} from input {}: {}",
                braces(&c.component),
                c.source_index,
                c.estimand.render()
            );
        }
        let est = res.final_estimand.as_ref().expect("identifiable");
        println!("estimand: {}", est.render());
        if let Some(seed) = seed {
            cross_check(&g, &x, &y, &coll, est, seed)?;
            println!("numeric cross-check (seed {seed}): PASS");
        }
    } else {
        println!("decision: not identifiable");
        for s in &failing {
            println!("unidentified component: {}", braces(s));
        }
    }
    if out.is_some() {
        let report = CheckReport {
            result: &res,
            rendered: res.final_estimand.as_ref().map(Estimand::render),
            failing,
        };
        write_json(&report, out)?;
    }
    Ok(if res.decision { 0 } else { 3 })
}

fn witness(
    graph: &Path,
    treatment: &str,
    outcome: &str,
    given: Option<&Path>,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    let g: CausalGraph = parse_json(graph)?;
    let x = parse_names(treatment);
    let y = parse_names(outcome);
    let coll = load_collection(given, &g)?;
    let pair = build_witness(&x, &y, &coll, &g)?;
    let verification = verify_witness(&pair)?;
    if !verification.ok {
        return Err(Failure::Contradiction(
            "constructed witness fails its own verification".into(),
        ));
    }
    let component = braces(&pair.s);
    let bundle = Bundle { pair, verification };
    write_json(&bundle, out)?;
    if let Some(path) = out {
        println!(
            "verified witness for component {component} written to {}",
            path.display()
        );
    }
    Ok(0)
}

fn verify(bundle: &Path) -> Result<u8, Failure> {
    let bundle: Bundle = parse_json(bundle)?;
    let fresh = verify_witness(&bundle.pair)?;
    let line = |label: &str, ok: bool| {
        println!("{label}: {}", if ok { "PASS" } else { "FAIL" });
    };
    line("both models strictly positive", fresh.positive);
    for (i, ok) in fresh.inputs_match.iter().enumerate() {
        line(&format!("models agree on input {i}"), *ok);
    }
    line(
        &format!(
            "target differs at the witness realization ({} vs {})",
            format_rat(&fresh.target_m1),
            format_rat(&fresh.target_m2)
        ),
        fresh.target_differs,
    );
    if fresh.ok {
        println!("verification: PASS");
        Ok(0)
    } else {
        Err(Failure::Contradiction("bundle fails verification".into()))
    }
}

fn eval(estimand: &Path, tables: &Path, at: &str) -> Result<u8, Failure> {
    let est: Estimand = parse_json(estimand)?;
    let tabs: Vec<DistTable> = parse_json(tables)?;
    let at: BTreeMap<VarId, usize> = serde_json::from_str(at)
        .map_err(|e| Failure::Usage(format!("--at: {e}")))?;
    let value = est.evaluate(&tabs, &at)?;
    println!("{}", format_rat(&value));
    Ok(0)
}

fn reproduce(name: &str) -> Result<u8, Failure> {
    let models = builtin_models();
    let Some((m1, m2)) = models.get(name) else {
        let known: Vec<&str> = models.keys().map(String::as_str).collect();
        return Err(Failure::Usage(format!(
            "unknown model pair `{name}`; available: {}",
            known.join(", ")
        )));
    };
    let mut all = true;
    let mut line = |label: &str, ok: bool| {
        println!("{label}: {}", if ok { "PASS" } else { "FAIL" });
        all &= ok;
    };

    let j1 = m1.joint()?;
    let j2 = m2.joint()?;
    line("joint distributions agree entrywise", j1 == j2);
    match name {
        "example2" => {
            line(
                "joint vanishes exactly where the treatments disagree",
                j1.iter().all(|(codes, v)| v.is_zero() == (codes[0] != codes[1])),
            );
            let at: BTreeMap<VarId, usize> =
                [("X1".to_string(), 0), ("X2".to_string(), 1)].into_iter().collect();
            let p1 = m1.intervene(&at)?;
            let p2 = m2.intervene(&at)?;
            let cell = |t: &DistTable, y1: usize, y2: usize| -> Rat {
                t.get(
                    &[("Y1".to_string(), y1), ("Y2".to_string(), y2)]
                        .into_iter()
                        .collect(),
                )
                .expect("outcome cell")
                .clone()
            };
            line(
                "do(x1=0,x2=1) outcome cells are (2/9, 5/18, 5/18, 2/9) vs (5/18, 2/9, 2/9, 5/18)",
                cell(&p1, 0, 0) == rat(2, 9)
                    && cell(&p1, 0, 1) == rat(5, 18)
                    && cell(&p1, 1, 0) == rat(5, 18)
                    && cell(&p1, 1, 1) == rat(2, 9)
                    && cell(&p2, 0, 0) == rat(5, 18)
                    && cell(&p2, 0, 1) == rat(2, 9)
                    && cell(&p2, 1, 0) == rat(2, 9)
                    && cell(&p2, 1, 1) == rat(5, 18),
            );
            // The published gap pair is the agreement probability — twice
            // the (0,0) cell in each model, not the cell itself.
            line(
                "P_{x1=0,x2=1}(Y1=Y2) = 4/9 vs 5/9",
                cell(&p1, 0, 0) + cell(&p1, 1, 1) == rat(4, 9)
                    && cell(&p2, 0, 0) + cell(&p2, 1, 1) == rat(5, 9),
            );
        }
        "thicket" => {
            line(
                "joint vanishes whenever the first component of t2 differs from t3",
                j1.iter()
                    .filter(|(codes, _)| codes[2] >> 1 != codes[3])
                    .all(|(_, v)| v.is_zero()),
            );
            let g = m1.graph();
            let r: VarSet = ["R".to_string()].into_iter().collect();
            let q1 = m1.q_eval(&r)?;
            let q2 = m2.q_eval(&r)?;
            let v0: BTreeMap<VarId, usize> = [
                ("R".to_string(), 1),
                ("T1".to_string(), 0),
                ("T2".to_string(), 0),
                ("T3".to_string(), 0),
            ]
            .into_iter()
            .collect();
            line(
                "Q[R](r=1) under t1=(0,0) is 1/4 vs 0",
                q1.get(&v0)? == &rat(1, 4) && q2.get(&v0)?.is_zero(),
            );
            let coll = GivenCollection::new(vec![g.observed().clone()])?;
            let x: VarSet = ["T1", "T2", "T3"].map(String::from).into_iter().collect();
            let res = gid(&x, &r, &coll, g)?;
            line(
                "query on R with every treatment fixed is not identifiable",
                !res.decision,
            );
        }
        _ => unreachable!("model pair names are known"),
    }
    if all {
        Ok(0)
    } else {
        Err(Failure::Contradiction(format!(
            "reproduction of `{name}` failed"
        )))
    }
}
