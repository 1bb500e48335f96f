use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use graphanon::attack::{self, AttackEnvironment, AttackParams, Defence};
use graphanon::generators::GeneratorSpec;
use graphanon::harness::{self, ExperimentConfig};
use graphanon::kmatch;
use graphanon::oracle::{self, AdversaryModel, OracleBudget};
use graphanon::privacy::{self, Budget, Property};
use graphanon::{fixtures, rng, Graph};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Parser)]
#[command(name = "graphanon", version, about = "Graph anonymisation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a collection of random graphs as numbered edge lists.
    Generate(GenerateArgs),
    /// Anonymise an edge-list graph.
    Anonymize(AnonymizeArgs),
    /// Insert sybils into a graph and save the attack environment.
    Inject(InjectArgs),
    /// Publish an environment under a defence and run the re-identification attack.
    Attack(AttackArgs),
    /// Check privacy properties; exits 1 if any fails.
    Check(CheckArgs),
    /// Exact adversary success probabilities on small instances.
    Oracle(OracleArgs),
    /// Run an experiment grid and write CSV plus summary JSON.
    Experiment(ExperimentArgs),
    /// Write the example graphs and their expected property reports.
    Fixtures(FixturesArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Er,
    Ba,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Order of ER graphs.
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    /// Edges per new BA vertex.
    #[arg(long, default_value_t = 5)]
    m: usize,
    #[arg(long, default_value_t = 50)]
    seed_order: usize,
    #[arg(long, default_value_t = 150)]
    growth: usize,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Kmatch,
    PseudonymOnly,
}

impl From<Method> for Defence {
    fn from(m: Method) -> Self {
        match m {
            Method::Kmatch => Defence::Kmatch,
            Method::PseudonymOnly => Defence::PseudonymOnly,
        }
    }
}

#[derive(Args)]
struct AnonymizeArgs {
    #[arg(long, value_enum, default_value = "kmatch")]
    method: Method,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    input: PathBuf,
    output: PathBuf,
    /// Write the alignment table (kmatch) as JSON.
    #[arg(long)]
    vat: Option<PathBuf>,
    /// Write the pseudonym map (pseudonym-only) as JSON.
    #[arg(long)]
    mapping: Option<PathBuf>,
}

#[derive(Args)]
struct InjectArgs {
    input: PathBuf,
    #[arg(long)]
    ell: usize,
    /// Number of victims; min(n/10, 2^ell - 1) by default.
    #[arg(long)]
    victims: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Environment bundle (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Also write the sybil-extended graph.
    #[arg(long)]
    extended: Option<PathBuf>,
}

#[derive(Args)]
struct AttackArgs {
    bundle: PathBuf,
    #[arg(long, value_enum, default_value = "kmatch")]
    method: Method,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Attack parameters as JSON; missing fields take their defaults.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Write the published graph.
    #[arg(long)]
    published: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    graph: PathBuf,
    /// Property to check (repeatable); all of them by default.
    #[arg(long = "property", value_parser = parse_property)]
    properties: Vec<Property>,
    #[arg(long)]
    k: usize,
    /// Sybil count for the (k,l) properties.
    #[arg(long)]
    l: Option<usize>,
    #[arg(long, default_value_t = Budget::default().max_subsets)]
    max_subsets: u64,
}

fn parse_property(s: &str) -> Result<Property, String> {
    Property::parse(s).ok_or_else(|| {
        let names: Vec<_> = Property::ALL.iter().map(|p| p.name()).collect();
        format!("unknown property {s:?}; expected one of {}", names.join(", "))
    })
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Labelled,
    Isomorphic,
}

impl From<Model> for AdversaryModel {
    fn from(m: Model) -> Self {
        match m {
            Model::Labelled => AdversaryModel::Labelled,
            Model::Isomorphic => AdversaryModel::Isomorphic,
        }
    }
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("target").required(true).args(["bundle", "max_attack"]))]
struct OracleArgs {
    /// Publish this environment and report every victim's probability.
    #[arg(long)]
    bundle: Option<PathBuf>,
    /// Report the strongest attack with at most --ell sybils on this graph.
    #[arg(long)]
    max_attack: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    ell: usize,
    #[arg(long, value_enum, default_value = "pseudonym-only")]
    method: Method,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "labelled")]
    model: Model,
    #[arg(long, default_value_t = OracleBudget::default().max_vars)]
    max_vars: usize,
    #[arg(long, default_value_t = OracleBudget::default().max_n)]
    max_n: usize,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON configuration; the desk-scale grid when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV (overrides the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
    /// 10,000 graphs per parameter value.
    #[arg(long, conflicts_with = "count")]
    paper_scale: bool,
    /// Graphs per parameter value.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct FixturesArgs {
    #[arg(long)]
    out: PathBuf,
}

/// Graph as stored inside JSON bundles.
#[derive(Serialize, Deserialize)]
struct EdgeList {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl EdgeList {
    fn of(g: &Graph) -> Self {
        EdgeList {
            n: g.n(),
            edges: g.edges().collect(),
        }
    }

    fn graph(&self) -> Result<Graph> {
        Ok(Graph::from_edges(self.n, self.edges.iter().copied())?)
    }
}

#[derive(Serialize, Deserialize)]
struct Bundle {
    original: EdgeList,
    extended: EdgeList,
    sybils: Vec<usize>,
    victims: Vec<usize>,
    knowledge: EdgeList,
    fingerprints: Vec<u64>,
}

impl Bundle {
    fn of(env: &AttackEnvironment) -> Self {
        Bundle {
            original: EdgeList::of(&env.g_original),
            extended: EdgeList::of(&env.g_plus),
            sybils: env.sybils.clone(),
            victims: env.victims.clone(),
            knowledge: EdgeList::of(&env.knowledge),
            fingerprints: env.fingerprints.clone(),
        }
    }

    fn env(&self) -> Result<AttackEnvironment> {
        Ok(AttackEnvironment {
            g_original: self.original.graph()?,
            g_plus: self.extended.graph()?,
            sybils: self.sybils.clone(),
            victims: self.victims.clone(),
            knowledge: self.knowledge.graph()?,
            fingerprints: self.fingerprints.clone(),
        })
    }

    fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing bundle {}", path.display()))
    }
}

fn load_graph(path: &Path) -> Result<Graph> {
    Graph::load_edge_list(path).with_context(|| format!("loading {}", path.display()))
}

fn save_graph(g: &Graph, path: &Path) -> Result<()> {
    g.save_edge_list(path).with_context(|| format!("writing {}", path.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn ratio(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn generate(a: GenerateArgs) -> Result<()> {
    fs::create_dir_all(&a.out)?;
    let mut manifest = Vec::new();
    for i in 0..a.count {
        let rng_seed = rng::derive(a.seed, i as u64);
        let spec = match a.kind {
            Kind::Er => GeneratorSpec::Er {
                n: a.n,
                density: a.density,
                rng_seed,
            },
            Kind::Ba => GeneratorSpec::Ba {
                m: a.m,
                seed_order: a.seed_order,
                growth: a.growth,
                rng_seed,
            },
        };
        let g = spec.generate()?;
        let file = format!("graph-{i:04}.el");
        save_graph(&g, &a.out.join(&file))?;
        manifest.push(json!({ "file": file, "spec": spec, "edges": g.edge_count() }));
    }
    write_json(&a.out.join("manifest.json"), &manifest)?;
    println!("wrote {} graphs to {}", a.count, a.out.display());
    Ok(())
}

fn anonymize(a: AnonymizeArgs) -> Result<()> {
    let g = load_graph(&a.input)?;
    match a.method {
        Method::Kmatch => {
            let res = kmatch::kmatch(&g, a.k, a.seed)?;
            let (ok, violations) = kmatch::verify_kmatch_conditions(&res);
            save_graph(&res.graph_out, &a.output)?;
            if let Some(p) = &a.vat {
                write_json(p, &res.vat)?;
            }
            println!(
                "{}",
                json!({
                    "method": "kmatch",
                    "k": a.k,
                    "n_in": g.n(),
                    "n_out": res.graph_out.n(),
                    "edges_in": g.edge_count(),
                    "edges_out": res.graph_out.edge_count(),
                    "added_edges": res.added_edges.len(),
                    "dummies": res.vat.dummies,
                    "conditions_hold": ok,
                    "violations": violations,
                })
            );
        }
        Method::PseudonymOnly => {
            let (published, phi) = attack::pseudonymize(&g, a.seed);
            save_graph(&published, &a.output)?;
            if let Some(p) = &a.mapping {
                write_json(p, &phi.as_slice())?;
            }
            println!("{}", json!({ "method": "pseudonym-only", "n": g.n(), "edges": g.edge_count() }));
        }
    }
    Ok(())
}

fn inject(a: InjectArgs) -> Result<()> {
    let g = load_graph(&a.input)?;
    let env = attack::prepare(&g, a.ell, a.victims, a.seed)?;
    write_json(&a.out, &Bundle::of(&env))?;
    if let Some(p) = &a.extended {
        save_graph(&env.g_plus, p)?;
    }
    println!(
        "{}",
        json!({ "n": g.n(), "sybils": env.sybils, "victims": env.victims, "fingerprints": env.fingerprints })
    );
    Ok(())
}

fn attack_cmd(a: AttackArgs) -> Result<()> {
    let env = Bundle::load(&a.bundle)?.env()?;
    let params: AttackParams = match &a.params {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?).context("parsing attack parameters")?,
        None => AttackParams::default(),
    };
    let out = attack::play(&env, a.method.into(), a.k, &params, a.seed)?;
    if let Some(p) = &a.published {
        save_graph(&out.publication.published, p)?;
    }
    println!(
        "{}",
        json!({
            "method": Defence::from(a.method).name(),
            "k": a.k,
            "success_rate": ratio(&out.success),
            "success": attack::to_f64(&out.success),
            "candidates": out.result.candidates.len(),
            "best_score": out.result.best_score,
            "truncated": out.result.truncated || out.result.any_matchings_truncated(),
            "search_nodes": out.result.search_nodes,
        })
    );
    Ok(())
}

fn check(a: CheckArgs) -> Result<bool> {
    let g = load_graph(&a.graph)?;
    let props = if a.properties.is_empty() {
        Property::ALL.to_vec()
    } else {
        a.properties.clone()
    };
    if a.l.is_none() {
        if let Some(p) = props.iter().find(|p| p.needs_l()) {
            bail!("--l is required for {}", p.name());
        }
    }
    let budget = Budget {
        max_subsets: a.max_subsets,
        ..Budget::default()
    };
    let mut all = true;
    for p in props {
        let report = privacy::check(&g, p, a.k, a.l.filter(|_| p.needs_l()), &budget)?;
        all &= report.holds;
        println!("{}", serde_json::to_string(&report)?);
    }
    Ok(all)
}

fn oracle_cmd(a: OracleArgs) -> Result<()> {
    let budget = OracleBudget {
        max_vars: a.max_vars,
        max_n: a.max_n,
        ..OracleBudget::default()
    };
    let model: AdversaryModel = a.model.into();
    if let Some(path) = &a.max_attack {
        let g = load_graph(path)?;
        let b = oracle::max_attack_success(&g, a.ell, model, &budget)?;
        println!(
            "{}",
            json!({
                "ell": a.ell,
                "model": model.name(),
                "probability": ratio(&b.value),
                "decimal": b.value.to_f64(),
                "sybils": b.sybils,
                "victims": b.victims,
                "victim": b.victim,
            })
        );
        return Ok(());
    }
    let bundle = a.bundle.as_ref().expect("clap requires one target");
    let env = Bundle::load(bundle)?.env()?;
    let publication = attack::publish(&env, a.method.into(), a.k, a.seed)?;
    let ell = env.ell();
    let g_pub = &publication.published;
    let probs: Vec<BigRational> = match model {
        AdversaryModel::Labelled => {
            let dist = oracle::enumerate_consistent_mappings(g_pub, &env.knowledge, ell, &budget)?;
            (0..env.victims.len())
                .map(|j| oracle::victim_success_probability(&dist, ell + j, publication.phi.apply(env.victims[j])))
                .collect::<Result<_, _>>()?
        }
        AdversaryModel::Isomorphic => {
            let guesses = oracle::enumerate_isomorphic_guesses(g_pub, &env.knowledge, ell, &budget)?;
            env.victims
                .iter()
                .map(|&v| guesses.success_probability(publication.phi.apply(v)))
                .collect()
        }
    };
    for (v, p) in env.victims.iter().zip(&probs) {
        println!(
            "{}",
            json!({
                "victim": v,
                "published": publication.phi.apply(*v),
                "probability": ratio(p),
                "decimal": p.to_f64(),
            })
        );
    }
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let mut config = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::desk("results.csv"),
    };
    if let Some(out) = a.out {
        config.output = out;
    }
    if a.paper_scale {
        config = config.paper_scale();
    }
    if let Some(c) = a.count {
        config = config.with_count(c);
    }
    if let Some(t) = a.threads {
        config.threads = Some(t);
    }
    if let Some(s) = a.seed {
        config.master_seed = s;
    }
    if a.dry_run {
        println!("{}", serde_json::to_string_pretty(&config)?);
        return Ok(());
    }
    let report = harness::run_experiment_with(&config, |done, total| {
        eprintln!("{done}/{total} instances");
    })?;
    println!(
        "{}",
        json!({
            "csv": config.output,
            "summary": config.summary_path(),
            "rows_written": report.rows_written,
            "rows_skipped": report.rows_skipped,
            "cells": report.summary.cells.len(),
        })
    );
    Ok(())
}

fn write_fixtures(a: FixturesArgs) -> Result<()> {
    fs::create_dir_all(&a.out)?;
    for f in fixtures::all() {
        let path = a.out.join(format!("{}.el", f.name));
        fs::write(&path, f.to_edge_list()).with_context(|| format!("writing {}", path.display()))?;
        let mut reports = Vec::new();
        for e in fixtures::expectations(f.name) {
            let r = privacy::check(&f.graph, e.property, e.k, e.l, &Budget::default())?;
            if r.holds != e.holds {
                bail!("{}: {} k={} l={:?} gave {}", f.name, e.property.name(), e.k, e.l, r.holds);
            }
            reports.push(r);
        }
        write_json(&a.out.join(format!("{}.expected.json", f.name)), &reports)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate(a) => generate(a)?,
        Command::Anonymize(a) => anonymize(a)?,
        Command::Inject(a) => inject(a)?,
        Command::Attack(a) => attack_cmd(a)?,
        Command::Check(a) => {
            return Ok(if check(a)? { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::Oracle(a) => oracle_cmd(a)?,
        Command::Experiment(a) => experiment(a)?,
        Command::Fixtures(a) => write_fixtures(a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
