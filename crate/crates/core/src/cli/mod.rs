//! Command-line front end.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{distance, distance_to_empty, EhFeatures, PNorm};
use crate::persistence::Barcode;
use crate::pipeline::{EhSystem, NodeEh};
use crate::protein::{bfactor_experiment, sweep, ProteinModel, ProteinReport, SweepReport};

pub use config::{parse_config, RunConfig};
use output::{
    csv_row, feature_csv, format_significant, input_error, load_input, protein_csv, stem, to_json, write_all, Input,
    InputStamp, Provenance,
};

pub const BUDGET_ENV: &str = "EVOHOM_BUDGET";

#[derive(Debug, Parser)]
#[command(name = "evohom", version, about = "Evolutionary homology of perturbed coupled oscillator networks")]
pub struct Cli {
    /// Configuration file (`key = value` lines, optional `[section]` headers).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads; overrides `run.workers`.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Barcode bundles and a feature table for one input.
    Eh(EhArgs),
    /// Feature/B-factor correlations for PDB files.
    Bfactor(InputsArgs),
    /// Threshold sweep of the B-factor experiment.
    Sweep(InputsArgs),
    /// Distance between two barcode files.
    Distance(DistanceArgs),
    /// Deviation trajectories after perturbing one node.
    Simulate(SimulateArgs),
    /// Runs the built-in oracle checks.
    Selftest,
}

#[derive(Debug, Args)]
pub struct EhArgs {
    /// Node to perturb (zero-based) or `all`.
    #[arg(long, default_value = "all")]
    pub node: String,
    /// Highest homology dimension; overrides `persistence.max_dim`.
    #[arg(long = "max-dim")]
    pub max_dim: Option<usize>,
    /// Points file or PDB file; defaults to the first `input.paths` entry.
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InputsArgs {
    /// PDB files; default to `input.paths`.
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    /// Wasserstein order, or `inf` for the bottleneck distance.
    #[arg(long, default_value = "inf")]
    pub p: PNorm,
    /// Compare only this dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    pub a: PathBuf,
    pub b: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Node to perturb (zero-based).
    #[arg(long)]
    pub node: usize,
    pub input: Option<PathBuf>,
}

/// Machine-readable failure description printed to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    pub exit_code: i32,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protein: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residue: Option<String>,
}

impl ErrorReport {
    pub fn new(e: &Error) -> Self {
        let mut residue = None;
        let mut protein = None;
        let mut cur = e;
        loop {
            match cur {
                Error::Residue { residue: r, source } => {
                    residue.get_or_insert_with(|| r.clone());
                    cur = source;
                }
                Error::Protein { protein: p, source } => {
                    protein.get_or_insert_with(|| p.clone());
                    cur = source;
                }
                _ => break,
            }
        }
        Self {
            kind: e.kind(),
            exit_code: e.exit_code(),
            message: e.to_string(),
            protein,
            residue,
        }
    }

    pub fn usage(message: String) -> Self {
        Self {
            kind: "usage",
            exit_code: 1,
            message,
            protein: None,
            residue: None,
        }
    }

    fn print(&self) {
        let body = serde_json::json!({ "error": self });
        eprintln!("{body}");
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Results go to stdout and files; failures go to stderr as JSON.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("{e}");
            ErrorReport::usage(e.kind().to_string()).print();
            return 1;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            ErrorReport::new(&e).print();
            e.exit_code()
        }
    }
}

/// Loads the configuration and applies command-line and environment
/// overrides.
pub fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
                line: 0,
                key: "--config".into(),
                message: format!("{}: {e}", path.display()),
            })?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Ok(value) = std::env::var(BUDGET_ENV) {
        cfg.eh_mut().budget = value.trim().parse::<u64>().ok().filter(|b| *b > 0).ok_or_else(|| Error::Config {
            line: 0,
            key: BUDGET_ENV.into(),
            message: format!("expected a positive integer, got {value:?}"),
        })?;
    }
    if let Command::Eh(EhArgs { max_dim: Some(k), .. }) = &cli.command {
        if *k > crate::persistence::MAX_SUPPORTED_DIM {
            return Err(Error::Config {
                line: 0,
                key: "--max-dim".into(),
                message: format!("{k} is out of range; must be <= {}", crate::persistence::MAX_SUPPORTED_DIM),
            });
        }
        cfg.eh_mut().max_dim = *k;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<i32> {
    let cfg = effective_config(cli)?;
    match &cli.command {
        Command::Eh(args) => cmd_eh(&cfg, args),
        Command::Bfactor(args) => cmd_bfactor(&cfg, &inputs(&cfg, &args.inputs)?),
        Command::Sweep(args) => cmd_sweep(&cfg, &inputs(&cfg, &args.inputs)?),
        Command::Distance(args) => cmd_distance(args),
        Command::Simulate(args) => cmd_simulate(&cfg, args),
        Command::Selftest => Ok(cmd_selftest(&cfg)),
    }
}

fn inputs(cfg: &RunConfig, given: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let list = if given.is_empty() { cfg.inputs.clone() } else { given.to_vec() };
    if list.is_empty() {
        return Err(Error::invalid("no input files given"));
    }
    Ok(list)
}

fn single_input(cfg: &RunConfig, given: &Option<PathBuf>) -> Result<PathBuf> {
    Ok(inputs(cfg, given.as_slice())?.remove(0))
}

/// Network positions and, for proteins, residue labels.
struct Network {
    points: Vec<Vec<f64>>,
    labels: Vec<(String, String)>,
    bfactors: Vec<Option<f64>>,
    warnings: Vec<String>,
}

fn network(input: Input) -> Network {
    match input {
        Input::Points(points) => Network {
            labels: (0..points.len()).map(|i| (String::new(), i.to_string())).collect(),
            bfactors: vec![None; points.len()],
            points,
            warnings: Vec::new(),
        },
        Input::Pdb(models) => {
            let model: &ProteinModel = &models[0];
            let mut warnings = Vec::new();
            if models.len() > 1 {
                warnings.push(format!("{} models present; only model {} is used", models.len(), model.index));
            }
            Network {
                points: model.positions().iter().map(|p| p.to_vec()).collect(),
                labels: model.residues.iter().map(|r| (r.chain.to_string(), r.label())).collect(),
                bfactors: model.residues.iter().map(|r| r.b_factor).collect(),
                warnings,
            }
        }
    }
}

/// Per-node JSON bundle.
#[derive(Serialize)]
struct Bundle<'a> {
    provenance: &'a Provenance,
    input: &'a str,
    node: usize,
    chain: &'a str,
    residue: &'a str,
    t_sync: f64,
    affected_count: usize,
    affected: &'a [usize],
    horizon: f64,
    noop: bool,
    perturbed_forced: bool,
    warnings: Vec<String>,
    features: &'a EhFeatures,
    barcodes: &'a [Barcode],
}

fn cmd_eh(cfg: &RunConfig, args: &EhArgs) -> Result<i32> {
    let path = single_input(cfg, &args.input)?;
    let (input, stamp) = load_input(&path)?;
    let net = network(input);
    let system = EhSystem::prepare(&net.points, cfg.eh().clone())?;
    let nodes: Vec<usize> = if args.node == "all" {
        (0..system.nodes()).collect()
    } else {
        let i: usize = args
            .node
            .parse()
            .map_err(|_| Error::invalid(format!("--node expects a zero-based index or `all`, got {:?}", args.node)))?;
        vec![i]
    };
    let results: Vec<NodeEh> = system.nodes_eh(&nodes, cfg.workers())?;

    let name = stem(&path);
    let provenance = Provenance::new(format!("eh --node {}", args.node), vec![stamp], cfg);
    let mut files = Vec::new();
    let mut rows = Vec::new();
    for r in &results {
        let (chain, residue) = &net.labels[r.node];
        let mut warnings = net.warnings.clone();
        warnings.extend(r.warnings.iter().cloned());
        let bundle = Bundle {
            provenance: &provenance,
            input: &name,
            node: r.node,
            chain,
            residue,
            t_sync: r.t_sync,
            affected_count: r.affected.len(),
            affected: &r.affected,
            horizon: r.horizon,
            noop: r.noop,
            perturbed_forced: r.perturbed_forced,
            warnings,
            features: &r.features,
            barcodes: &r.barcodes,
        };
        files.push((format!("{name}.node{}.json", r.node), to_json(&bundle)?));
        rows.push(csv_row(&name, chain, residue, &r.features, net.bfactors[r.node]));
    }
    files.push((format!("{name}.features.csv"), feature_csv(&provenance, &rows)));
    for w in &net.warnings {
        eprintln!("warning: {w}");
    }
    for p in write_all(&cfg.out_dir, &files)? {
        println!("{}", p.display());
    }
    Ok(0)
}

fn load_models(path: &Path) -> Result<(Vec<ProteinModel>, InputStamp)> {
    match load_input(path)? {
        (Input::Pdb(models), stamp) => Ok((models, stamp)),
        (Input::Points(_), _) => Err(input_error(path, "expected a .pdb or .ent file")),
    }
}

#[derive(Serialize)]
struct ProteinReportFile<'a> {
    provenance: &'a Provenance,
    report: &'a ProteinReport,
    /// Mean t_sync and affected-set size over residues.
    mean_t_sync: f64,
    mean_affected: f64,
    warnings: &'a [String],
}

#[derive(Serialize)]
struct Failure {
    path: String,
    error: ErrorReport,
}

#[derive(Serialize)]
struct Aggregate<'a> {
    provenance: &'a Provenance,
    proteins: Vec<&'a str>,
    /// Unweighted mean over proteins where the value is defined.
    mean: Vec<(String, Option<f64>)>,
    failures: Vec<Failure>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn finish_with_failures(failures: &[Failure]) -> i32 {
    for f in failures {
        eprintln!("{}", serde_json::json!({ "error": f.error, "path": f.path }));
    }
    failures.first().map_or(0, |f| f.error.exit_code)
}

fn cmd_bfactor(cfg: &RunConfig, paths: &[PathBuf]) -> Result<i32> {
    let mut reports: Vec<ProteinReport> = Vec::new();
    let mut stamps = Vec::new();
    let mut failures = Vec::new();
    for path in paths {
        let outcome = load_models(path).and_then(|(models, stamp)| {
            let name = stem(path);
            let (features, report) = bfactor_experiment(&name, &models, &cfg.protein, cfg.workers())?;
            let provenance = Provenance::new("bfactor", vec![stamp.clone()], cfg);
            let n = features.rows.len() as f64;
            let file = ProteinReportFile {
                provenance: &provenance,
                report: &report,
                mean_t_sync: features.rows.iter().map(|r| r.t_sync).sum::<f64>() / n,
                mean_affected: features.rows.iter().map(|r| r.affected).sum::<f64>() / n,
                warnings: &features.warnings,
            };
            let files = vec![
                (format!("{name}.report.json"), to_json(&file)?),
                (format!("{name}.features.csv"), protein_csv(&provenance, &name, &features.rows)),
            ];
            for p in write_all(&cfg.out_dir, &files)? {
                println!("{}", p.display());
            }
            Ok((report, stamp))
        });
        match outcome {
            Ok((report, stamp)) => {
                reports.push(report);
                stamps.push(stamp);
            }
            Err(e) => failures.push(Failure {
                path: path.display().to_string(),
                error: ErrorReport::new(&e),
            }),
        }
    }

    let provenance = Provenance::new("bfactor", stamps, cfg);
    let mut columns = vec![("EH".to_string(), mean(reports.iter().map(|r| Some(r.regression))))];
    for name in EhFeatures::NAMES {
        columns.push((name.to_string(), mean(reports.iter().map(|r| r.blind(name)))));
    }
    let mut table = provenance.comment_lines();
    table.push_str("protein,residues,EH");
    for name in EhFeatures::NAMES {
        table.push(',');
        table.push_str(name);
    }
    table.push('\n');
    for r in &reports {
        let mut line = format!("{},{},{}", r.protein, r.residues, r.regression);
        for name in EhFeatures::NAMES {
            line.push(',');
            line.push_str(&cell(r.blind(name)));
        }
        table.push_str(&line);
        table.push('\n');
    }
    let total: usize = reports.iter().map(|r| r.residues).sum();
    table.push_str(&format!("mean,{total}"));
    for (_, v) in &columns {
        table.push(',');
        table.push_str(&cell(*v));
    }
    table.push('\n');
    let aggregate = Aggregate {
        provenance: &provenance,
        proteins: reports.iter().map(|r| r.protein.as_str()).collect(),
        mean: columns,
        failures,
    };
    let files = vec![
        ("bfactor_summary.csv".to_string(), table),
        ("bfactor_summary.json".to_string(), to_json(&aggregate)?),
    ];
    for p in write_all(&cfg.out_dir, &files)? {
        println!("{}", p.display());
    }
    Ok(finish_with_failures(&aggregate.failures))
}

#[derive(Serialize)]
struct SweepFile<'a> {
    provenance: &'a Provenance,
    sweep: &'a SweepReport,
}

fn cmd_sweep(cfg: &RunConfig, paths: &[PathBuf]) -> Result<i32> {
    let mut summary = String::new();
    let mut stamps = Vec::new();
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for path in paths {
        let outcome = load_models(path).and_then(|(models, stamp)| {
            let name = stem(path);
            let report = sweep(&name, &models, &cfg.protein, &cfg.sweep, cfg.workers());
            let provenance = Provenance::new("sweep", vec![stamp.clone()], cfg);
            let file = SweepFile {
                provenance: &provenance,
                sweep: &report,
            };
            for p in write_all(&cfg.out_dir, &[(format!("{name}.sweep.json"), to_json(&file)?)])? {
                println!("{}", p.display());
            }
            Ok((report, stamp))
        });
        match outcome {
            Ok((report, stamp)) => {
                let best = |p: &Option<crate::protein::SweepPoint>, v: fn(&crate::protein::SweepPoint) -> Option<f64>| {
                    p.as_ref().map_or(",,,".to_string(), |p| {
                        format!("{},{},{},{}", cell(v(p)), p.eps_p, p.eps_sync, p.eps_d)
                    })
                };
                lines.push(format!(
                    "{},{},{}\n",
                    report.protein,
                    best(&report.best_regression, |p| p.regression),
                    best(&report.best_eh_inf_0, |p| p.eh_inf_0)
                ));
                stamps.push(stamp);
            }
            Err(e) => failures.push(Failure {
                path: path.display().to_string(),
                error: ErrorReport::new(&e),
            }),
        }
    }
    let provenance = Provenance::new("sweep", stamps, cfg);
    summary.push_str(&provenance.comment_lines());
    summary.push_str("protein,best_EH,eps_p,eps_sync,eps_d,best_EH_inf_0,eps_p,eps_sync,eps_d\n");
    for l in lines {
        summary.push_str(&l);
    }
    for p in write_all(&cfg.out_dir, &[("sweep_summary.csv".to_string(), summary)])? {
        println!("{}", p.display());
    }
    Ok(finish_with_failures(&failures))
}

/// Barcodes from a bundle (`{"barcodes": [...]}`), a list of barcodes, or a
/// single barcode object.
pub fn read_barcodes(path: &Path) -> Result<Vec<Barcode>> {
    let text = std::fs::read_to_string(path).map_err(|e| input_error(path, e.to_string()))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| input_error(path, e.to_string()))?;
    let parsed = match &value {
        serde_json::Value::Object(map) if map.contains_key("barcodes") => {
            serde_json::from_value::<Vec<Barcode>>(map["barcodes"].clone())
        }
        serde_json::Value::Array(_) => serde_json::from_value::<Vec<Barcode>>(value),
        _ => serde_json::from_value::<Barcode>(value).map(|b| vec![b]),
    };
    let mut barcodes = parsed.map_err(|e| input_error(path, format!("not a barcode file: {e}")))?;
    barcodes.sort_by_key(|b| b.dim);
    if barcodes.windows(2).any(|w| w[0].dim == w[1].dim) {
        return Err(input_error(path, "a dimension appears twice"));
    }
    if barcodes.iter().flat_map(|b| &b.bars).any(|b| !(b.birth.is_finite() && b.death.is_finite())) {
        return Err(input_error(path, "bars must have finite endpoints"));
    }
    Ok(barcodes)
}

/// Per-dimension distances between two barcode files.
pub fn barcode_file_distances(a: &Path, b: &Path, p: PNorm, dim: Option<usize>) -> Result<Vec<(usize, f64)>> {
    let (ba, bb) = (read_barcodes(a)?, read_barcodes(b)?);
    let dims = |v: &[Barcode]| v.iter().map(|b| b.dim).collect::<Vec<_>>();
    if dims(&ba) != dims(&bb) {
        return Err(Error::Input {
            path: format!("{} vs {}", a.display(), b.display()),
            message: format!("dimension mismatch: {:?} vs {:?}", dims(&ba), dims(&bb)),
        });
    }
    let selected: Vec<(&Barcode, &Barcode)> = ba.iter().zip(&bb).filter(|(x, _)| dim.map_or(true, |d| x.dim == d)).collect();
    if selected.is_empty() {
        return Err(Error::invalid(format!("dimension {dim:?} is not present in the inputs")));
    }
    selected
        .into_iter()
        .map(|(x, y)| {
            let d = if y.bars.is_empty() {
                distance_to_empty(&x.bars, p)?
            } else {
                distance(&x.bars, &y.bars, p)?
            };
            Ok((x.dim, d))
        })
        .collect()
}

fn cmd_distance(args: &DistanceArgs) -> Result<i32> {
    let values = barcode_file_distances(&args.a, &args.b, args.p, args.dim)?;
    if values.len() == 1 {
        println!("{}", format_significant(values[0].1, 12));
    } else {
        for (k, v) in values {
            println!("H{k} {}", format_significant(v, 12));
        }
    }
    Ok(0)
}

fn cmd_simulate(cfg: &RunConfig, args: &SimulateArgs) -> Result<i32> {
    let path = single_input(cfg, &args.input)?;
    let (input, stamp) = load_input(&path)?;
    let net = network(input);
    let system = EhSystem::prepare(&net.points, cfg.eh().clone())?;
    let steps = ((cfg.eh().horizon / cfg.eh().h).round() as usize).max(1);
    let traj = system.node_trajectories(args.node, steps)?;
    let provenance = Provenance::new(format!("simulate --node {}", args.node), vec![stamp], cfg);
    let mut out = provenance.comment_lines();
    out.push('t');
    for (chain, residue) in &net.labels {
        out.push(',');
        if chain.is_empty() {
            out.push_str(&format!("node{residue}"));
        } else {
            out.push_str(&format!("{chain}:{residue}"));
        }
    }
    out.push('\n');
    for m in 0..traj.len() {
        out.push_str(&traj.grid().time(m).to_string());
        for j in 0..traj.nodes() {
            out.push(',');
            out.push_str(&traj.node(j)[m].to_string());
        }
        out.push('\n');
    }
    let name = format!("{}.node{}.trajectory.csv", stem(&path), args.node);
    for p in write_all(&cfg.out_dir, &[(name, out)])? {
        println!("{}", p.display());
    }
    Ok(0)
}

fn cmd_selftest(cfg: &RunConfig) -> i32 {
    let checks = crate::selftest::run_all(cfg.seed, cfg.workers());
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if checks.iter().all(|c| c.passed) {
        0
    } else {
        3
    }
}
