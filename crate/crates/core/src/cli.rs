//! The `probelab` command line. The binary is a thin wrapper over [`run_cli`].

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::arena::IntervalTag;
use crate::error::{Error, Result};
use crate::games::{run_bloom_protocol, run_nondet_protocol, Cut, CutSource, Prover};
use crate::instances::{
    appendix_rounds, gen_dynamic_with, gen_incremental_with, metaquery_oracle, AppendixParams,
    DynOptions, DynParams, IncOptions, IncOverrides, IncParams,
};
use crate::replay::StructureKind;
use crate::report::{
    content_hash, run_report, write_csv, ChargeRow, EpochRow, RunReport, CSV_VERSION,
};
use crate::trace::OpTrace;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_EXPECTATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "probelab",
    version,
    about = "Cell-probe instrumented union-find and connectivity workloads"
)]
pub struct Cli {
    /// Seed for generators and protocol hashes [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a workload trace and its ground-truth sidecar (`<out>.truth.json`).
    Gen(GenArgs),
    /// Replay a trace against a structure, checking every expectation.
    Run(RunArgs),
    /// Per-epoch and per-timeline-node tables from run reports.
    Stats(StatsArgs),
    /// Cut a trace into a two-party game and run a protocol on it.
    Game(GameArgs),
    /// One summary row per run report.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Inc,
    Dyn,
    Appendix,
}

/// Every field may also come from `--params`; flags win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default)]
pub struct GenParams {
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Tree degree B (inc).
    #[arg(long)]
    pub branching: Option<u64>,
    /// Number of colors C (inc, dyn).
    #[arg(long)]
    pub colors: Option<u64>,
    /// Number of trees M (inc, dyn).
    #[arg(long)]
    pub trees: Option<u64>,
    /// Number of epochs d (inc).
    #[arg(long)]
    pub depth: Option<u32>,
    /// Columns of the permutation grid (dyn); overrides n.
    #[arg(long)]
    pub columns: Option<u64>,
    #[arg(long)]
    pub metaqueries: Option<usize>,
    /// Wrongly colored leaves per metaquery (inc).
    #[arg(long)]
    pub inconsistencies: Option<usize>,
    /// Step whose query gets a wrong coloring (dyn).
    #[arg(long)]
    pub corrupt_step: Option<u64>,
    /// Round blocks (appendix).
    #[arg(long)]
    pub rounds: Option<u32>,
    /// Links per find round (appendix).
    #[arg(long)]
    pub finds: Option<u64>,
    /// Misdirect one link per find round (appendix).
    #[arg(long)]
    pub corrupt: bool,
}

impl GenParams {
    fn merged(self, file: GenParams) -> GenParams {
        GenParams {
            n: self.n.or(file.n),
            eps: self.eps.or(file.eps),
            branching: self.branching.or(file.branching),
            colors: self.colors.or(file.colors),
            trees: self.trees.or(file.trees),
            depth: self.depth.or(file.depth),
            columns: self.columns.or(file.columns),
            metaqueries: self.metaqueries.or(file.metaqueries),
            inconsistencies: self.inconsistencies.or(file.inconsistencies),
            corrupt_step: self.corrupt_step.or(file.corrupt_step),
            rounds: self.rounds.or(file.rounds),
            finds: self.finds.or(file.finds),
            corrupt: self.corrupt || file.corrupt,
        }
    }
}

/// `{"family": "inc", "seed": 7, "n": 4096, "eps": 0.25, "overrides": {"colors": 4}}`;
/// fields under `overrides` take precedence over top-level ones.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct ParamsFile {
    pub family: Option<String>,
    pub seed: Option<u64>,
    pub overrides: GenParams,
    #[serde(flatten)]
    pub values: GenParams,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub family: Family,
    /// JSON object with any of the parameter fields.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[command(flatten)]
    pub values: GenParams,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// uf-amortized, uf-worstcase:K, lf-general, lf-forest or naive.
    #[arg(long)]
    pub structure: String,
    /// Also write the full JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Table {
    Epochs,
    Charges,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Run reports written by `run --format json` or `run --report`.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Table::Epochs)]
    pub table: Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Protocol {
    Bloom,
    Nondet,
}

#[derive(Debug, Args)]
pub struct GameArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long, default_value = "naive")]
    pub structure: String,
    /// Comma-separated interval tags run by Alice, e.g. `epoch:2`.
    #[arg(long)]
    pub alice: String,
    /// Comma-separated interval tags run by Bob, e.g. `epoch:1,metaquery:0`.
    #[arg(long)]
    pub bob: String,
    #[arg(long, value_enum, default_value_t = Protocol::Bloom)]
    pub protocol: Protocol,
    /// Bloom filter false-positive rate.
    #[arg(long, default_value_t = 1.0 / 64.0)]
    pub p: f64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
}

/// Parse `args` (including the program name) and execute; returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::ExpectationFailed { .. } => EXIT_EXPECTATION,
                _ => EXIT_USAGE,
            }
        }
    }
}

pub fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(cli, a),
        Command::Run(a) => cmd_run(cli, a),
        Command::Stats(a) => cmd_stats(cli, a),
        Command::Game(a) => cmd_game(cli, a),
        Command::Report(a) => cmd_report(cli, a),
    }
}

fn output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut w = output(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_trace(path: &Path) -> Result<OpTrace> {
    OpTrace::parse(&fs::read_to_string(path)?)
}

fn read_report(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: format!("{}: {e}", path.display()),
    })
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".truth.json");
    PathBuf::from(s)
}

fn missing(name: &str, family: &str) -> Error {
    Error::InvalidParams(format!("--{name} is required for {family}"))
}

/// The trace and its ground truth.
pub fn generate(family: Family, v: &GenParams, seed: u64) -> Result<(OpTrace, serde_json::Value)> {
    match family {
        Family::Inc => {
            let n = v.n.ok_or_else(|| missing("n", "inc"))?;
            let eps = v.eps.ok_or_else(|| missing("eps", "inc"))?;
            let p = IncParams::derive(
                n,
                eps,
                IncOverrides {
                    branching: v.branching,
                    colors: v.colors,
                    trees: v.trees,
                    depth: v.depth,
                },
            )?;
            let mut opts = IncOptions::default();
            if let Some(m) = v.metaqueries {
                opts.metaqueries = m;
            }
            opts.inconsistencies = v.inconsistencies.unwrap_or(0);
            let inst = gen_incremental_with(&p, seed, opts)?;
            let queries: Vec<_> = inst
                .queries
                .iter()
                .map(|(q, chi)| json!({ "leaves": q, "colors": chi, "verdict": metaquery_oracle(q, chi, &inst.forest) }))
                .collect();
            let truth = json!({
                "family": "inc",
                "params": p,
                "seed": seed,
                "leaf_colors": inst.ground_truth(),
                "metaqueries": queries,
            });
            Ok((inst.trace, truth))
        }
        Family::Dyn => {
            let p = match v.columns {
                Some(cols) => DynParams::new(
                    v.trees.ok_or_else(|| missing("trees", "dyn --columns"))?,
                    v.colors.ok_or_else(|| missing("colors", "dyn --columns"))?,
                    cols,
                )?,
                None => DynParams::from_n(
                    v.n.ok_or_else(|| missing("n", "dyn"))?,
                    v.eps.ok_or_else(|| missing("eps", "dyn"))?,
                    v.trees,
                    v.colors,
                )?,
            };
            let inst = gen_dynamic_with(
                &p,
                seed,
                DynOptions {
                    corrupt_step: v.corrupt_step,
                },
            )?;
            let truth = json!({ "family": "dyn", "params": p, "seed": seed, "steps": inst.steps });
            Ok((inst.trace, truth))
        }
        Family::Appendix => {
            let mut p = AppendixParams::new(
                v.n.ok_or_else(|| missing("n", "appendix"))?,
                v.rounds.ok_or_else(|| missing("rounds", "appendix"))?,
            );
            p.finds_per_round = v.finds;
            p.corrupt = v.corrupt;
            let inst = appendix_rounds(&p, seed)?;
            let truth = json!({ "family": "appendix", "params": p, "seed": seed, "find_rounds": inst.find_rounds });
            Ok((inst.trace, truth))
        }
    }
}

fn cmd_gen(cli: &Cli, a: &GenArgs) -> Result<i32> {
    let file: ParamsFile = match &a.params {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| Error::InvalidParams(format!("{}: {e}", path.display())))?,
        None => ParamsFile::default(),
    };
    if let Some(f) = &file.family {
        let named = a.family.to_possible_value().expect("no skipped variants");
        if !named.matches(f, true) {
            return Err(Error::InvalidParams(format!(
                "params file is for family {f:?}, not {:?}",
                named.get_name()
            )));
        }
    }
    let values = a.values.clone().merged(file.overrides.merged(file.values));
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let (trace, truth) = generate(a.family, &values, seed)?;
    let mut w = output(&cli.out)?;
    w.write_all(trace.to_text().as_bytes())?;
    w.flush()?;
    if let Some(out) = &cli.out {
        let mut truth = truth;
        truth["trace_hash"] = json!(content_hash(&trace.to_text()));
        write_json(&Some(sidecar_path(out)), &truth)?;
    }
    Ok(EXIT_OK)
}

fn cmd_run(cli: &Cli, a: &RunArgs) -> Result<i32> {
    let kind: StructureKind = a.structure.parse()?;
    let trace = read_trace(&a.trace)?;
    let (report, _) = run_report(&trace, kind)?;
    match cli.format {
        Format::Csv => {
            let w = output(&cli.out)?;
            write_csv(w, "ops", &report.per_op)?;
        }
        Format::Json => write_json(&cli.out, &report)?,
    }
    if let Some(path) = &a.report {
        write_json(&Some(path.clone()), &report)?;
    }
    if report.mismatches.is_empty() {
        return Ok(EXIT_OK);
    }
    for m in &report.mismatches {
        eprintln!(
            "expectation failed at op {}: {} answered {}",
            m.index, m.op, m.answer
        );
    }
    Ok(EXIT_EXPECTATION)
}

fn cmd_stats(cli: &Cli, a: &StatsArgs) -> Result<i32> {
    let mut epochs: Vec<EpochRow> = Vec::new();
    let mut charges: Vec<ChargeRow> = Vec::new();
    for path in &a.reports {
        let r = read_report(path)?;
        epochs.extend(r.epochs);
        charges.extend(r.timeline);
    }
    match cli.format {
        Format::Csv => {
            let w = output(&cli.out)?;
            match a.table {
                Table::Epochs => write_csv(w, "epochs", &epochs)?,
                Table::Charges => write_csv(w, "charges", &charges)?,
            }
        }
        Format::Json => write_json(&cli.out, &json!({ "epochs": epochs, "charges": charges }))?,
    }
    Ok(EXIT_OK)
}

fn parse_tags(s: &str) -> Result<Vec<IntervalTag>> {
    s.split(',').map(|t| t.trim().parse()).collect()
}

/// One protocol run, with the quantities the bit bounds are stated in.
#[derive(Debug, Clone, Serialize)]
pub struct GameSummary {
    pub trace_hash: String,
    pub structure: String,
    pub alice: String,
    pub bob: String,
    pub protocol: String,
    pub p: f64,
    pub answer: bool,
    pub ground_truth: bool,
    pub total_bits: u64,
    pub written: usize,
    pub read: usize,
    pub overlap: usize,
    /// `|W_A|·lg(1/p)·lg e + 128·|W_A ∩ R_B|` for Bloom, `128·|W_A ∩ R_B| + 1.23·|W_A ∪ R_B|` for nondet.
    pub formula_bits: f64,
}

pub fn play(
    trace: &OpTrace,
    kind: StructureKind,
    alice: &str,
    bob: &str,
    protocol: Protocol,
    p: f64,
    seed: u64,
) -> Result<(GameSummary, serde_json::Value)> {
    let cut = Cut::new(parse_tags(alice)?, parse_tags(bob)?);
    let g = CutSource::new(trace, kind)?.cut(&cut)?;
    let (answer, total_bits, formula_bits, detail) = match protocol {
        Protocol::Bloom => {
            let o = run_bloom_protocol(&g, p, seed)?;
            let formula =
                g.alice.written.len() as f64 * (1.0 / p).log2() * std::f64::consts::LOG2_E
                    + 128.0 * g.overlap() as f64;
            let messages = o.transcript.messages.clone();
            (
                o.answer,
                o.transcript.total_bits,
                formula,
                json!({ "hash_seed": o.transcript.hash_seed, "false_positives": o.false_positives, "messages": messages }),
            )
        }
        Protocol::Nondet => {
            let o = run_nondet_protocol(&g, &Prover::Honest, seed)?;
            let formula = 128.0 * g.overlap() as f64 + 1.23 * g.union_size() as f64;
            (
                o.accepted(),
                o.proof_bits,
                formula,
                serde_json::to_value(&o).map_err(|e| Error::Io(e.to_string()))?,
            )
        }
    };
    let summary = GameSummary {
        trace_hash: content_hash(&trace.to_text()),
        structure: kind.to_string(),
        alice: alice.to_string(),
        bob: bob.to_string(),
        protocol: format!("{protocol:?}").to_lowercase(),
        p,
        answer,
        ground_truth: g.ground_truth,
        total_bits,
        written: g.alice.written.len(),
        read: g.bob_read.len(),
        overlap: g.overlap(),
        formula_bits,
    };
    Ok((summary, detail))
}

fn cmd_game(cli: &Cli, a: &GameArgs) -> Result<i32> {
    let kind: StructureKind = a.structure.parse()?;
    let trace = read_trace(&a.trace)?;
    let (summary, detail) = play(
        &trace,
        kind,
        &a.alice,
        &a.bob,
        a.protocol,
        a.p,
        cli.seed.unwrap_or(0),
    )?;
    match cli.format {
        Format::Csv => write_csv(output(&cli.out)?, "games", std::slice::from_ref(&summary))?,
        Format::Json => {
            let mut v = serde_json::to_value(&summary).map_err(|e| Error::Io(e.to_string()))?;
            v["trace"] = json!(a.trace.display().to_string());
            v["detail"] = detail;
            write_json(&cli.out, &v)?;
        }
    }
    Ok(if summary.answer {
        EXIT_OK
    } else {
        EXIT_EXPECTATION
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub structure: String,
    pub params: String,
    pub seed: u64,
    pub trace_hash: String,
    pub ops: usize,
    pub construction_probes: u64,
    pub total_probes: u64,
    pub probes_per_op: f64,
    pub expectations: usize,
    pub mismatches: usize,
}

impl From<&RunReport> for SummaryRow {
    fn from(r: &RunReport) -> Self {
        let ops = r.per_op.len();
        Self {
            structure: r.structure.clone(),
            params: r.params.clone(),
            seed: r.seed,
            trace_hash: r.trace_hash.clone(),
            ops,
            construction_probes: r.construction_probes,
            total_probes: r.total_probes,
            probes_per_op: if ops == 0 {
                0.0
            } else {
                r.total_probes as f64 / ops as f64
            },
            expectations: r.expectations,
            mismatches: r.mismatches.len(),
        }
    }
}

fn cmd_report(cli: &Cli, a: &ReportArgs) -> Result<i32> {
    let rows = a
        .reports
        .iter()
        .map(|p| read_report(p).map(|r| SummaryRow::from(&r)))
        .collect::<Result<Vec<_>>>()?;
    match cli.format {
        Format::Csv => write_csv(output(&cli.out)?, "summary", &rows)?,
        Format::Json => write_json(&cli.out, &json!({ "version": CSV_VERSION, "runs": rows }))?,
    }
    Ok(if rows.iter().all(|r| r.mismatches == 0) {
        EXIT_OK
    } else {
        EXIT_EXPECTATION
    })
}
