//! Batch front end. Flags or a TOML file (same keys, flags win) become a
//! [`RunConfig`]; each task writes one JSON report, optionally a CSV, and
//! prints a one-line summary.
//!
//! Exit codes: 0 on a completed analysis whatever the verdict, 2 for bad
//! configuration or a refused request, 3 for numerical failure.
//!
//! CSV layouts (fixed column order):
//! - `criterion`: `label,dim,weight,term`
//! - `trace`, `spectrum`, `lidskii`: `index,re,im,modulus`
//! - `heat-trace`: `label,dim,lambda_sq,weight,term`
//! - `carleman-demo`: `n,r,sum`

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::catalog::{
    carleman_demo, catalog_listing, instantiate, CarlemanReport, CatalogListing, ExpectedCriterion, OperatorParams,
    CATALOG_NAMES, SEPARABLE_DEMO_T,
};
use crate::group::{enumerate_dual, GroupId, IrrepLabel};
use crate::nuclearity::{
    csv_err, matching_criterion, nr_upper_bound, CriterionInfo, CriterionQuery, Diagnostics, LambdaSchedule,
    PartialSum, TermRow, Verdict,
};
use crate::quantize::{assemble_matrix, Symbol, SymbolJson};
use crate::spectral::{
    cutoff_for_level, heat_trace, kernel_rule, lidskii_verify, trace_eigsum, trace_kernel_diagonal, trace_symbol,
    summability_check, HeatTrace, LidskiiRegime, Summability, DEFAULT_EIGEN_BUDGET,
};
use crate::{Error, Result, C64, VERSION};

pub const SCHEMA_VERSION: u32 = 1;
pub const OUT_DIR_ENV: &str = "LIENUC_OUT_DIR";
const DEFAULT_SCHEDULE: [f64; 4] = [2.0, 4.0, 8.0, 16.0];
const DEFAULT_CARLEMAN_N: u64 = 1 << 20;

#[derive(Parser, Debug)]
#[command(name = "lienuc", version, about = "Nuclearity criteria, traces and spectra for symbols on T^n, SU(2) and SO(3)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Evaluate the criterion series that matches the symbol's kind.
    Criterion(Settings),
    /// Symbol, kernel and eigenvalue traces of the finite section.
    Trace(Settings),
    /// Eigenvalues of the finite section.
    Spectrum(Settings),
    /// Trace = eigenvalue sum check with its hypothesis gate.
    Lidskii(Settings),
    /// Truncated heat trace with a tail bound.
    HeatTrace(Settings),
    /// Continuous function whose convolution operator is not trace class.
    CarlemanDemo(Settings),
    /// List catalog operators.
    Catalog(Settings),
    /// Run the task named by `task` in the config file.
    Run(Settings),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Criterion,
    Trace,
    Spectrum,
    Lidskii,
    HeatTrace,
    CarlemanDemo,
    Catalog,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Criterion => "criterion",
            Task::Trace => "trace",
            Task::Spectrum => "spectrum",
            Task::Lidskii => "lidskii",
            Task::HeatTrace => "heat-trace",
            Task::CarlemanDemo => "carleman-demo",
            Task::Catalog => "catalog",
        }
    }
}

/// Every flag, doubling as the TOML schema.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// TOML file with the same keys as the flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Only read from config files.
    #[arg(skip)]
    pub task: Option<Task>,
    /// t1, t2, …, su2 or so3.
    #[arg(long)]
    pub group: Option<String>,
    /// Catalog operator name.
    #[arg(long)]
    pub op: Option<String>,
    /// JSON symbol instead of a catalog operator.
    #[arg(long)]
    pub symbol_file: Option<PathBuf>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Frequency budget for the Carleman coefficients.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub p1: Option<f64>,
    #[arg(long)]
    pub p2: Option<f64>,
    /// Sets p1 = p2.
    #[arg(long)]
    pub p: Option<f64>,
    /// Finite section up to spin ℓ (or |k| on a torus).
    #[arg(long)]
    pub lmax: Option<f64>,
    /// Finite section ⟨ξ⟩ ≤ Λ.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Comma-separated increasing cutoffs.
    #[arg(long, value_delimiter = ',')]
    pub schedule: Option<Vec<f64>>,
    /// Report path, relative to the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output directory; falls back to $LIENUC_OUT_DIR, then ".".
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr, $($f:ident),*) => {
        Settings { config: $hi.config.or($lo.config), $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl Settings {
    /// `self` with gaps filled from `lower`.
    pub fn over(self, lower: Settings) -> Settings {
        overlay!(
            self, lower, task, group, op, symbol_file, t, alpha, n, r, p1, p2, p, lmax, lambda, schedule, out,
            out_dir, csv, seed, threads
        )
    }

    pub fn from_toml_file(path: &Path) -> Result<Settings> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("config {}: {e}", path.display())))
    }
}

/// Normalized configuration; the serialized form is echoed into reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub task: Task,
    pub group: GroupId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol_file: Option<PathBuf>,
    pub params: OperatorParams,
    pub r: f64,
    pub p1: f64,
    pub p2: f64,
    pub p1_tilde: f64,
    pub p2_tilde: f64,
    /// `s = 2r/(2 − r)`.
    pub s: f64,
    pub schedule: LambdaSchedule,
    #[serde(skip)]
    pub schedule_given: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lmax: Option<f64>,
    pub seed: u64,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub csv: Option<PathBuf>,
    #[serde(skip)]
    pub threads: Option<usize>,
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Domain(m) => Error::Config(m),
        other => other,
    }
}

/// Reads a TOML config that names its own `task`.
pub fn validate_config(path: &Path) -> Result<RunConfig> {
    let s = Settings::from_toml_file(path)?;
    let task = s
        .task
        .ok_or_else(|| Error::Config(format!("config {} does not name a task", path.display())))?;
    normalize(task, s)
}

/// Fills defaults, checks ranges and resolves output paths.
pub fn normalize(task: Task, s: Settings) -> Result<RunConfig> {
    let r = s.r.unwrap_or(1.0);
    if r > 1.0 {
        return Err(Error::Config(format!(
            "r = {r} > 1: for r > 1 only the zero operator is r-nuclear, so the question is trivial"
        )));
    }
    if !(r > 0.0) {
        return Err(Error::Config(format!("r must lie in (0, 1], got {r}")));
    }
    let (p1, p2) = match (s.p, s.p1, s.p2) {
        (Some(p), a, b) => {
            if a.is_some_and(|a| a != p) || b.is_some_and(|b| b != p) {
                return Err(Error::Config("--p conflicts with --p1/--p2".into()));
            }
            (p, p)
        }
        (None, a, b) => (a.unwrap_or(2.0), b.unwrap_or(2.0)),
    };
    let query = CriterionQuery::new(r, p1, p2).map_err(config_err)?;

    let mut t = s.t;
    if t.is_none() && s.op.as_deref() == Some("separable-demo") {
        t = Some(SEPARABLE_DEMO_T);
    }
    let file_symbol = match &s.symbol_file {
        Some(path) => Some(read_symbol_json(path)?),
        None => None,
    };
    let group = match (&s.group, task, &file_symbol) {
        (Some(g), _, _) => g.parse::<GroupId>().map_err(config_err)?,
        (None, Task::CarlemanDemo, _) => GroupId::Torus(1),
        (None, Task::Catalog, _) => GroupId::SU2,
        (None, _, Some(json)) => json_group(json),
        (None, _, None) => return Err(Error::Config("--group is required".into())),
    };
    if let Some(json) = &file_symbol {
        if json_group(json) != group {
            return Err(Error::Config(format!(
                "symbol file is on {} but --group is {group}",
                json_group(json)
            )));
        }
    }
    let needs_operator = matches!(task, Task::Criterion | Task::Trace | Task::Spectrum | Task::Lidskii);
    if let Some(op) = &s.op {
        if s.symbol_file.is_some() {
            return Err(Error::Config("give either --op or --symbol-file, not both".into()));
        }
        if !CATALOG_NAMES.contains(&op.as_str()) {
            return Err(Error::Config(format!(
                "unknown catalog operator {op:?}; known: {}",
                CATALOG_NAMES.join(", ")
            )));
        }
    } else if needs_operator && s.symbol_file.is_none() {
        return Err(Error::Config(format!("{} needs --op or --symbol-file", task.name())));
    }

    let schedule_given = s.schedule.is_some();
    let schedule = LambdaSchedule::new(s.schedule.clone().unwrap_or_else(|| DEFAULT_SCHEDULE.to_vec()))
        .map_err(config_err)?;
    let cutoff = match (s.lambda, s.lmax) {
        (Some(_), Some(_)) => return Err(Error::Config("give either --lambda or --lmax, not both".into())),
        (Some(l), None) => {
            if !(l >= 1.0 && l.is_finite()) {
                return Err(Error::Config(format!("lambda must be finite and ≥ 1, got {l}")));
            }
            Some(l)
        }
        (None, Some(l)) => Some(cutoff_for_level(group, l).map_err(config_err)?),
        (None, None) => None,
    };
    if cutoff.is_none() && matches!(task, Task::Trace | Task::Spectrum | Task::Lidskii | Task::HeatTrace) {
        return Err(Error::Config(format!("{} needs --lambda or --lmax", task.name())));
    }
    if task == Task::HeatTrace && s.t.is_none() {
        return Err(Error::Config("heat-trace needs --t".into()));
    }
    if s.threads == Some(0) {
        return Err(Error::Config("--threads must be positive".into()));
    }

    let out_dir = s
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let label = s
        .op
        .clone()
        .or_else(|| s.symbol_file.as_ref().map(|_| "symbol".to_string()))
        .unwrap_or_else(|| "report".into());
    let default_name = format!("{}-{}-{}.json", task.name(), group.to_string().to_lowercase(), label);
    let out = out_dir.join(s.out.clone().unwrap_or_else(|| PathBuf::from(default_name)));
    let csv = s.csv.as_ref().map(|c| out_dir.join(c));
    let seed = s.seed.unwrap_or(0);
    Ok(RunConfig {
        task,
        group,
        operator: s.op.clone(),
        symbol_file: s.symbol_file.clone(),
        params: OperatorParams {
            t,
            alpha: s.alpha,
            n: s.n,
            seed: Some(seed),
        },
        r,
        p1,
        p2,
        p1_tilde: query.p1_tilde(),
        p2_tilde: query.p2_tilde(),
        s: query.summability_exponent(),
        schedule,
        schedule_given,
        cutoff,
        lmax: s.lmax,
        seed,
        out,
        csv,
        threads: s.threads,
    })
}

fn read_symbol_json(path: &Path) -> Result<SymbolJson> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read symbol file {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("symbol file {}: {e}", path.display())))
}

fn json_group(json: &SymbolJson) -> GroupId {
    match json {
        SymbolJson::Invariant { group, .. }
        | SymbolJson::Diagonal { group, .. }
        | SymbolJson::Separable { group, .. }
        | SymbolJson::General { group, .. } => *group,
    }
}

impl RunConfig {
    pub fn query(&self) -> CriterionQuery {
        CriterionQuery::new(self.r, self.p1, self.p2).expect("validated")
    }

    /// The symbol named by the config, truncated at `cutoff`.
    pub fn symbol(&self, cutoff: f64) -> Result<(Symbol, Vec<ExpectedCriterion>)> {
        if let Some(path) = &self.symbol_file {
            let s = Symbol::from_json(&read_symbol_json(path)?)?;
            let s = if cutoff.is_finite() { s.with_cutoff(cutoff)? } else { s };
            return Ok((s, Vec::new()));
        }
        let op = self.operator.as_deref().ok_or_else(|| Error::Config("no operator given".into()))?;
        let entry = instantiate(op, self.group, &self.params, cutoff)?;
        Ok((entry.symbol, entry.expected))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualRow {
    pub label: IrrepLabel,
    pub dim: usize,
    pub lambda_sq: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Traces {
    pub symbol: C64,
    pub kernel: C64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigsum: Option<C64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<C64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residuals {
    /// `|trace_symbol − trace_kernel|`.
    pub kernel: f64,
    /// `|trace_symbol − trace_eigsum|`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lidskii: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lidskii_relative: Option<f64>,
}

/// JSON report. Fields that do not apply to a task are omitted.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub lienuc_version: &'static str,
    pub config: RunConfig,
    pub group: GroupId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<CriterionInfo>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub dual_table: Vec<DualRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<TermRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub partial_sums: Vec<PartialSum>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_tail_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nr_upper_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traces: Option<Traces>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<C64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<Residuals>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lidskii_regime: Option<LidskiiRegime>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summability: Option<Summability>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvalue_count_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heat_trace: Option<HeatTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub carleman: Option<CarlemanReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub catalog: Option<Vec<CatalogListing>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub expected: Vec<ExpectedCriterion>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Report {
    fn new(config: &RunConfig) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            lienuc_version: VERSION,
            config: config.clone(),
            group: config.group,
            criterion: None,
            dual_table: Vec::new(),
            terms: Vec::new(),
            partial_sums: Vec::new(),
            verdict: None,
            diagnostics: None,
            fitted_tail_exponent: None,
            nr_upper_bound: None,
            traces: None,
            eigenvalues: None,
            residuals: None,
            lidskii_regime: None,
            summability: None,
            eigenvalue_count_bound: None,
            heat_trace: None,
            carleman: None,
            catalog: None,
            expected: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Header plus string rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn eigenvalues(e: &[C64]) -> Table {
        Table {
            header: vec!["index", "re", "im", "modulus"],
            rows: e
                .iter()
                .enumerate()
                .map(|(i, z)| vec![i.to_string(), format!("{:e}", z.re), format!("{:e}", z.im), format!("{:e}", z.norm())])
                .collect(),
        }
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Finished analysis: report, optional table and the summary line.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub report: Report,
    pub table: Option<Table>,
    pub summary: String,
}

fn dual_table(group: GroupId, cutoff: f64) -> Result<Vec<DualRow>> {
    Ok(enumerate_dual(group, cutoff)?
        .into_iter()
        .map(|ir| DualRow {
            label: ir.label,
            dim: ir.dim,
            lambda_sq: ir.lambda_sq,
            weight: ir.weight,
        })
        .collect())
}

/// Runs the analysis in the current thread pool without touching the
/// filesystem (apart from reading a symbol file).
pub fn execute(config: &RunConfig) -> Result<Outcome> {
    let mut report = Report::new(config);
    let (table, summary) = match config.task {
        Task::Criterion => run_criterion(config, &mut report)?,
        Task::Trace => run_trace(config, &mut report)?,
        Task::Spectrum => run_spectrum(config, &mut report)?,
        Task::Lidskii => run_lidskii(config, &mut report)?,
        Task::HeatTrace => run_heat_trace(config, &mut report)?,
        Task::CarlemanDemo => run_carleman(config, &mut report)?,
        Task::Catalog => {
            let list = catalog_listing();
            let summary = format!("{} catalog operators: {}", list.len(), CATALOG_NAMES.join(", "));
            report.catalog = Some(list);
            (None, summary)
        }
    };
    Ok(Outcome { report, table, summary })
}

type TaskResult = Result<(Option<Table>, String)>;

fn run_criterion(c: &RunConfig, report: &mut Report) -> TaskResult {
    let (symbol, expected) = c.symbol(c.cutoff.unwrap_or(f64::INFINITY))?;
    let q = c.query();
    let rep = matching_criterion(&symbol, &q, &c.schedule)?;
    if rep.verdict != Verdict::DivergenceDetected && (symbol.is_invariant() || c.cutoff.is_some()) {
        let at = c.cutoff.unwrap_or(c.schedule.max());
        match nr_upper_bound(&symbol, &q, at) {
            Ok(b) => report.nr_upper_bound = Some(b.value),
            Err(Error::Divergent(m)) => report.warnings.push(format!("no n_r bound: {m}")),
            Err(e) => return Err(e),
        }
    }
    let summary = format!(
        "{} on {}: {:?}, partial sum {:.6e} at Λ = {}",
        rep.criterion.id,
        c.group,
        rep.verdict,
        rep.final_sum(),
        c.schedule.max()
    );
    let table = Table {
        header: vec!["label", "dim", "weight", "term"],
        rows: rep
            .terms
            .iter()
            .map(|t| vec![t.label.to_string(), t.dim.to_string(), format!("{:e}", t.weight), format!("{:e}", t.term)])
            .collect(),
    };
    report.criterion = Some(rep.criterion);
    report.terms = rep.terms;
    report.partial_sums = rep.partial_sums;
    report.verdict = Some(rep.verdict);
    report.diagnostics = Some(rep.diagnostics);
    report.fitted_tail_exponent = rep.fitted_tail_exponent;
    report.expected = expected;
    Ok((Some(table), summary))
}

fn run_trace(c: &RunConfig, report: &mut Report) -> TaskResult {
    let cutoff = c.cutoff.expect("validated");
    let (symbol, _) = c.symbol(cutoff)?;
    let ts = trace_symbol(&symbol, cutoff)?;
    let tk = trace_kernel_diagonal(&symbol, &kernel_rule(&symbol))?;
    let op = assemble_matrix(&symbol, cutoff)?;
    report.warnings.extend(op.warnings.iter().cloned());
    let mut residuals = Residuals {
        kernel: (ts - tk).norm(),
        lidskii: None,
        lidskii_relative: None,
    };
    let (eig, table) = if op.size() <= DEFAULT_EIGEN_BUDGET {
        let et = trace_eigsum(&op)?;
        let res = (ts - et.eigsum).norm();
        residuals.lidskii = Some(res);
        residuals.lidskii_relative = Some(res / ts.norm().max(1e-12));
        let table = Table::eigenvalues(&et.eigenvalues);
        report.eigenvalues = Some(et.eigenvalues);
        (Some((et.eigsum, et.matrix_trace)), Some(table))
    } else {
        report
            .warnings
            .push(format!("finite section of size {} skipped by the eigensolver budget", op.size()));
        (None, None)
    };
    report.traces = Some(Traces {
        symbol: ts,
        kernel: tk,
        eigsum: eig.map(|e| e.0),
        matrix: eig.map(|e| e.1),
    });
    report.dual_table = dual_table(c.group, cutoff)?;
    let summary = format!(
        "trace on {} at Λ = {cutoff}: symbol {:.10}, kernel residual {:.2e}{}",
        c.group,
        ts.re,
        residuals.kernel,
        residuals.lidskii.map_or(String::new(), |r| format!(", eigenvalue residual {r:.2e}"))
    );
    report.residuals = Some(residuals);
    Ok((table, summary))
}

fn run_spectrum(c: &RunConfig, report: &mut Report) -> TaskResult {
    let cutoff = c.cutoff.expect("validated");
    let (symbol, _) = c.symbol(cutoff)?;
    let op = assemble_matrix(&symbol, cutoff)?;
    report.warnings.extend(op.warnings.iter().cloned());
    let et = trace_eigsum(&op)?;
    let summary = format!(
        "spectrum on {} at Λ = {cutoff}: {} eigenvalues, largest modulus {:.6e}",
        c.group,
        et.eigenvalues.len(),
        et.eigenvalues.first().map_or(0.0, |z| z.norm())
    );
    let table = Table::eigenvalues(&et.eigenvalues);
    report.traces = None;
    report.eigenvalues = Some(et.eigenvalues);
    report.dual_table = dual_table(c.group, cutoff)?;
    Ok((Some(table), summary))
}

fn run_lidskii(c: &RunConfig, report: &mut Report) -> TaskResult {
    let cutoff = c.cutoff.expect("validated");
    let (symbol, _) = c.symbol(cutoff)?;
    let rep = lidskii_verify(&symbol, &c.query(), cutoff)?;
    let summary = format!(
        "lidskii on {} ({:?}) at Λ = {cutoff}: trace {:.10}, residual {:.2e} (relative {:.2e}), summability {}",
        c.group,
        rep.regime,
        rep.trace_symbol.re,
        rep.lidskii_residual,
        rep.lidskii_residual_relative,
        if rep.summability_pass { "holds" } else { "FAILS" }
    );
    let table = Table::eigenvalues(&rep.eigenvalues);
    report.traces = Some(Traces {
        symbol: rep.trace_symbol,
        kernel: rep.trace_kernel,
        eigsum: Some(rep.trace_eigsum),
        matrix: Some(rep.matrix_trace),
    });
    report.residuals = Some(Residuals {
        kernel: rep.kernel_residual,
        lidskii: Some(rep.lidskii_residual),
        lidskii_relative: Some(rep.lidskii_residual_relative),
    });
    report.lidskii_regime = Some(rep.regime);
    report.verdict = Some(rep.criterion_verdict);
    report.nr_upper_bound = Some(rep.nr_upper_bound);
    report.summability = Some(summability_check(&rep.eigenvalues, c.r, rep.nr_upper_bound));
    report.criterion = Some(rep.criterion);
    report.eigenvalue_count_bound = rep.eigenvalue_count_bound;
    report.warnings.extend(rep.warnings);
    report.eigenvalues = Some(rep.eigenvalues);
    report.dual_table = dual_table(c.group, cutoff)?;
    Ok((Some(table), summary))
}

fn run_heat_trace(c: &RunConfig, report: &mut Report) -> TaskResult {
    let cutoff = c.cutoff.expect("validated");
    let t = c.params.t.expect("validated");
    let h = heat_trace(c.group, t, cutoff)?;
    let rows = enumerate_dual(c.group, cutoff)?;
    let table = Table {
        header: vec!["label", "dim", "lambda_sq", "weight", "term"],
        rows: rows
            .iter()
            .map(|ir| {
                vec![
                    ir.label.to_string(),
                    ir.dim.to_string(),
                    format!("{:e}", ir.lambda_sq),
                    format!("{:e}", ir.weight),
                    format!("{:e}", (ir.dim * ir.dim) as f64 * (-t * ir.lambda_sq).exp()),
                ]
            })
            .collect(),
    };
    let summary = format!(
        "heat trace on {} at t = {t}, Λ = {cutoff:.6}: {:.10} ({} irreps, tail ≤ {:.2e})",
        c.group, h.value, h.irreps, h.tail_bound
    );
    report.dual_table = dual_table(c.group, cutoff)?;
    report.heat_trace = Some(h);
    Ok((Some(table), summary))
}

fn run_carleman(c: &RunConfig, report: &mut Report) -> TaskResult {
    if c.group != GroupId::Torus(1) {
        return Err(Error::Config("carleman-demo runs on T1".into()));
    }
    let schedule = if c.schedule_given {
        c.schedule.clone()
    } else {
        LambdaSchedule::deep(GroupId::Torus(1))
    };
    let demo = carleman_demo(c.params.n.unwrap_or(DEFAULT_CARLEMAN_N), &schedule)?;
    let summary = format!(
        "carleman N = {}: sup {:.6} ≤ {:.6}, Σ|c|² = {:.8} (limit {:.8}), r = 1.5 growth ×{:.3}, trace-class criterion {:?}",
        demo.n_max,
        demo.measured_sup,
        demo.sup_certificate,
        demo.l2_sum,
        demo.l2_limit,
        demo.growth_ratio_r15,
        demo.criterion_verdict
    );
    let table = Table {
        header: vec!["n", "r", "sum"],
        rows: demo
            .power_sums
            .iter()
            .map(|p| vec![p.n.to_string(), p.r.to_string(), format!("{:e}", p.sum)])
            .collect(),
    };
    report.verdict = Some(demo.criterion_verdict);
    report.partial_sums = demo.criterion_partial_sums.clone();
    report.carleman = Some(demo);
    Ok((Some(table), summary))
}

/// Executes under a pool of `config.threads` workers and writes the report
/// (and CSV, if requested). Returns the summary line.
pub fn run(config: &RunConfig) -> Result<String> {
    let outcome = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} threads: {e}")))?
            .install(|| execute(config))?,
        None => execute(config)?,
    };
    write_file(&config.out, |w| {
        serde_json::to_writer_pretty(&mut *w, &outcome.report)?;
        w.write_all(b"\n")?;
        Ok(())
    })?;
    if let (Some(path), Some(table)) = (&config.csv, &outcome.table) {
        write_file(path, |w| table.write(w))?;
    }
    Ok(format!("{} [{}]", outcome.summary, config.out.display()))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> Result<()>) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Parsed command line to normalized config.
pub fn config_from_cli(cli: Cli) -> Result<RunConfig> {
    let (task, settings) = match cli.command {
        Command::Criterion(s) => (Some(Task::Criterion), s),
        Command::Trace(s) => (Some(Task::Trace), s),
        Command::Spectrum(s) => (Some(Task::Spectrum), s),
        Command::Lidskii(s) => (Some(Task::Lidskii), s),
        Command::HeatTrace(s) => (Some(Task::HeatTrace), s),
        Command::CarlemanDemo(s) => (Some(Task::CarlemanDemo), s),
        Command::Catalog(s) => (Some(Task::Catalog), s),
        Command::Run(s) => (None, s),
    };
    let settings = match &settings.config {
        Some(path) => settings.clone().over(Settings::from_toml_file(path)?),
        None => settings,
    };
    let task = match (task, settings.task) {
        (Some(t), Some(f)) if t != f => {
            return Err(Error::Config(format!(
                "subcommand {} disagrees with config task {}",
                t.name(),
                f.name()
            )))
        }
        (Some(t), _) | (None, Some(t)) => t,
        (None, None) => return Err(Error::Config("`run` needs a config file that names a task".into())),
    };
    normalize(task, settings)
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numeric(_) | Error::NonFinite { .. } | Error::NoConvergence(_) => 3,
        _ => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig> {
        let cli = Cli::try_parse_from(std::iter::once("lienuc").chain(args.iter().copied()))
            .map_err(|e| Error::Config(e.to_string()))?;
        config_from_cli(cli)
    }

    #[test]
    fn defaults_and_derived() {
        let c = parse(&["criterion", "--group", "su2", "--op", "heat", "--t", "1", "--out-dir", "/tmp/x"]).unwrap();
        assert_eq!(c.schedule.points(), &DEFAULT_SCHEDULE);
        assert_eq!((c.r, c.p1, c.p2), (1.0, 2.0, 2.0));
        assert_eq!(c.s, 2.0);
        assert_eq!(c.out, PathBuf::from("/tmp/x/criterion-su2-heat.json"));
    }

    #[test]
    fn rejects_large_r_and_unknown_op() {
        let e = parse(&["criterion", "--group", "su2", "--op", "heat", "--r", "1.2"]).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
        assert_eq!(exit_code(&e), 2);
        let e = parse(&["criterion", "--group", "su2", "--op", "laplace"]).unwrap_err();
        assert!(e.to_string().contains("sublaplacian"));
        assert!(parse(&["trace", "--group", "su2", "--op", "heat", "--t", "1"]).is_err());
        assert!(parse(&["criterion", "--group", "su2", "--op", "heat", "--p", "4", "--p1", "2"]).is_err());
    }

    #[test]
    fn lmax_maps_to_cutoff() {
        let c = parse(&["heat-trace", "--group", "su2", "--t", "1", "--lmax", "3.5"]).unwrap();
        assert!((c.cutoff.unwrap() - (1.0f64 + 3.5 * 4.5).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn toml_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "task = \"criterion\"\ngroup = \"so3\"\nop = \"bessel\"\nalpha = 4.0\nschedule = [2.0, 4.0, 8.0]\n")
            .unwrap();
        let c = validate_config(&path).unwrap();
        assert_eq!(c.task, Task::Criterion);
        assert_eq!(c.group, GroupId::SO3);
        assert_eq!(c.schedule.points(), &[2.0, 4.0, 8.0]);
        fs::write(&path, "group = \"so3\"\nbogus = 1\n").unwrap();
        assert!(matches!(validate_config(&path), Err(Error::Config(_))));
    }

    #[test]
    fn heat_criterion_converges() {
        let c = parse(&["criterion", "--group", "su2", "--op", "heat", "--t", "1"]).unwrap();
        let out = execute(&c).unwrap();
        assert_eq!(out.report.verdict, Some(Verdict::ConvergedNumerically));
        assert!(out.report.nr_upper_bound.is_some());
        assert!(out.report.to_json().unwrap().contains("\"invariant-l2\""));
    }
}
