use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use concept_fock::classicality::{check_classical, classify_deviation, compute_derived, DEFAULT_TOL};
use concept_fock::datamodel::{likert_dataset, load_dataset, load_likert, write_dataset};
use concept_fock::document::{ModelDocument, ModelEntry, SummaryEntry};
use concept_fock::fitter::{fit_dataset, verify_published, DatasetSummary, M2Mode};
use concept_fock::stats::{panel_tests, sorted_regression, value_band};
use concept_fock::{ConceptPairDataset, Error, MembershipRecord, Pair};

const VERIFY_TOL: f64 = 0.03;

#[derive(Parser)]
#[command(name = "concept-fock", version, about = "Classicality diagnostics and two-sector Fock-space fits for concept membership data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Tabular,
    Structured,
    Markdown,
}

#[derive(Subcommand)]
enum Command {
    /// Derived diagnostics and deviation flags per exemplar.
    Analyze {
        #[arg(required = true)]
        datasets: Vec<PathBuf>,
        /// Tolerance of the classicality verdict and negation deviations.
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Fit the two-sector model to every exemplar.
    Fit {
        #[arg(required = true)]
        datasets: Vec<PathBuf>,
        /// `minimal` or `target:<value>`.
        #[arg(long, default_value = "minimal")]
        m2_mode: String,
        /// Record the fitter version in each model.
        #[arg(long)]
        provenance: bool,
    },
    /// Residuals of a model document against measured data.
    Verify {
        document: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        data: Vec<PathBuf>,
        #[arg(long, default_value_t = VERIFY_TOL)]
        tol: f64,
    },
    /// Sorted regressions and bands of the diagnostics, and t-tests on raw panels.
    Stats {
        datasets: Vec<PathBuf>,
        /// Raw Likert panels in `subject,question,score` form.
        #[arg(long, num_args = 1..)]
        likert: Vec<PathBuf>,
        /// Degrees of freedom for every t-test instead of n - 1.
        #[arg(long)]
        df: Option<f64>,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Weights and diagnostics in published table layout, with a fit summary.
    Report {
        #[arg(required = true)]
        datasets: Vec<PathBuf>,
        #[arg(long, default_value = "minimal")]
        m2_mode: String,
    },
    /// Aggregate a raw Likert panel into a dataset file.
    Convert {
        likert: PathBuf,
        /// Dataset label; defaults to the file stem.
        #[arg(long)]
        label: Option<String>,
    },
}

enum Failure {
    Input(String),
    Breach(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn plain(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn rounded(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() && v.abs() >= 1e-3 || *v == 0.0 => {
                let s = format!("{v:.2}");
                if s == "-0.00" { "0.00".into() } else { s }
            }
            Cell::Num(v) => format!("{v:.2e}"),
            other => other.plain(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(n) => Value::from(*n),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Empty => Value::Null,
        }
    }
}

fn num(v: f64) -> Cell {
    Cell::Num(v)
}

fn text(s: impl Into<String>) -> Cell {
    Cell::Text(s.into())
}

struct Table {
    title: String,
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(title: impl Into<String>, columns: &[&str]) -> Self {
        Table {
            title: title.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Failure::Input(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::plain)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::Input(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    fn markdown(&self) -> String {
        let mut s = format!("## {}\n\n| {} |\n|", self.title, self.columns.join(" | "));
        for _ in &self.columns {
            s.push_str(" --- |");
        }
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|c| c.rounded().replace('|', "\\|")).collect();
            s.push_str(&format!("| {} |\n", cells.join(" | ")));
        }
        s
    }

    fn json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let mut m = Map::new();
                    for (c, v) in self.columns.iter().zip(r) {
                        m.insert(c.clone(), v.json());
                    }
                    Value::Object(m)
                })
                .collect(),
        )
    }
}

fn render(tables: &[Table], format: Format) -> CliResult<String> {
    Ok(match format {
        Format::Tabular => tables.iter().map(Table::csv).collect::<CliResult<Vec<_>>>()?.join("\n"),
        Format::Markdown => tables.iter().map(Table::markdown).collect::<Vec<_>>().join("\n"),
        Format::Structured => {
            let mut m = Map::new();
            for t in tables {
                m.insert(t.title.clone(), t.json());
            }
            let mut s = serde_json::to_string_pretty(&Value::Object(m)).map_err(Error::from)?;
            s.push('\n');
            s
        }
    })
}

fn emit(out: &Option<PathBuf>, body: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, body)?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

/// Opens `path`, or `path` with a `.csv` suffix when the former is missing.
fn resolve(path: &Path) -> CliResult<PathBuf> {
    if path.is_file() {
        return Ok(path.to_path_buf());
    }
    let mut with = path.as_os_str().to_owned();
    with.push(".csv");
    let with = PathBuf::from(with);
    if path.extension().is_none_or(|e| e != "csv") && with.is_file() {
        return Ok(with);
    }
    Err(Failure::Input(format!("cannot open `{}`", path.display())))
}

fn label_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn load(path: &Path) -> CliResult<ConceptPairDataset> {
    let p = resolve(path)?;
    let label = label_of(&p);
    load_dataset(File::open(&p)?, &label)
        .map_err(|e| Failure::Input(format!("{}: {e}", p.display())))
}

fn load_all(paths: &[PathBuf]) -> CliResult<Vec<ConceptPairDataset>> {
    paths.iter().map(|p| load(p)).collect()
}

fn analyze(datasets: &[ConceptPairDataset], tol: f64) -> Table {
    let mut t = Table::new(
        "diagnostics",
        &[
            "dataset", "exemplar", "deltaAB", "deltaABp", "deltaApB", "deltaApBp", "iTotal", "iA", "iB",
            "iAp", "iBp", "classical", "deviations",
        ],
    );
    for ds in datasets {
        for r in &ds.records {
            let d = compute_derived(r);
            let mut row = vec![text(&ds.pair_label), text(&r.exemplar)];
            row.extend(d.delta.iter().map(|&v| num(v)));
            row.extend([d.i_total, d.i_a, d.i_b, d.i_ap, d.i_bp].map(num));
            row.push(Cell::Bool(check_classical(r, tol).holds));
            let devs: Vec<String> = classify_deviation(r, tol).iter().map(|d| d.to_string()).collect();
            row.push(text(devs.join(" ")));
            t.rows.push(row);
        }
    }
    t
}

fn fraction_note(label: &str, s: &DatasetSummary) -> String {
    match s.fraction {
        Some(f) => format!(
            "{label}: {}/{} conjunctions fitted exactly ({:.1}%)",
            s.fitted,
            s.targets,
            100.0 * f
        ),
        None => format!("{label}: no conjunctions, fraction n/a"),
    }
}

fn cmd_fit(datasets: &[ConceptPairDataset], mode: M2Mode, provenance: bool, format: Format) -> CliResult<String> {
    let mut doc = ModelDocument::default();
    let mut rows = Table::new(
        "fit",
        &["dataset", "exemplar", "pair", "target", "feasible", "m", "n", "phi_deg", "predicted", "residual", "distance"],
    );
    for ds in datasets {
        let fit = fit_dataset(ds, mode);
        eprintln!("{}", fraction_note(&ds.pair_label, &fit.summary));
        for (ex, why) in &fit.summary.failures {
            eprintln!("{}: {ex}: {why}", ds.pair_label);
        }
        for r in &fit.results {
            let entry = ModelEntry::from_fit(r, Some(&ds.pair_label));
            doc.models.push(if provenance { entry.with_provenance() } else { entry });
            for c in &r.combinations {
                let p = r.params.combination(c.pair);
                rows.rows.push(vec![
                    text(&ds.pair_label),
                    text(&r.exemplar),
                    text(c.pair.label()),
                    num(c.target),
                    Cell::Bool(c.feasible),
                    num(p.m),
                    num(p.n),
                    num(p.phi_deg),
                    num(c.predicted),
                    num(c.residual),
                    num(c.distance),
                ]);
            }
        }
        doc.summary.push(SummaryEntry::new(&ds.pair_label, &fit.summary));
    }
    match format {
        Format::Structured => {
            let mut s = doc.to_json()?;
            s.push('\n');
            Ok(s)
        }
        f => render(&[rows], f),
    }
}

fn find_record<'a>(
    datasets: &'a [ConceptPairDataset],
    m: &ModelEntry,
) -> CliResult<(&'a str, &'a MembershipRecord)> {
    let named = m
        .dataset
        .as_deref()
        .filter(|d| datasets.iter().any(|ds| ds.pair_label == *d));
    let hits: Vec<_> = datasets
        .iter()
        .filter(|ds| named.is_none_or(|d| ds.pair_label == d))
        .filter_map(|ds| ds.get(&m.exemplar).map(|r| (ds.pair_label.as_str(), r)))
        .collect();
    match hits.as_slice() {
        [one] => Ok(*one),
        [] => Err(Failure::Input(format!("no measured record for `{}`", m.exemplar))),
        _ => Err(Failure::Input(format!(
            "`{}` occurs in several datasets; name one in the model's `dataset` field",
            m.exemplar
        ))),
    }
}

fn cmd_verify(doc: &ModelDocument, datasets: &[ConceptPairDataset], tol: f64, format: Format) -> CliResult<(String, usize)> {
    let mut t = Table::new("residuals", &["dataset", "exemplar", "quantity", "model", "measured", "residual", "within"]);
    let mut breaches = 0;
    let mut push = |t: &mut Table, ds: &str, ex: &str, q: &str, model: Cell, measured: Cell, res: f64| {
        let ok = res.abs() <= tol;
        breaches += usize::from(!ok);
        t.rows.push(vec![text(ds), text(ex), text(q), model, measured, num(res), Cell::Bool(ok)]);
    };
    for m in &doc.models {
        let (ds, r) = find_record(datasets, m)?;
        let params = m.params()?;
        let rep = verify_published(&params, &m.frame, r);
        for (k, name) in ["A", "B", "A'", "B'"].iter().enumerate() {
            let measured = r.marginals()[k];
            push(&mut t, ds, &m.exemplar, name, num(measured + rep.born[k]), num(measured), rep.born[k]);
        }
        for p in Pair::ALL {
            let k = p.index();
            push(&mut t, ds, &m.exemplar, p.label(), num(rep.predicted[k]), num(r.conjunction(p)), rep.conjunctions[k]);
        }
        push(&mut t, ds, &m.exemplar, "norm", Cell::Empty, Cell::Empty, rep.frame.norm);
        push(&mut t, ds, &m.exemplar, "orthogonality", Cell::Empty, Cell::Empty, rep.frame.orth);
    }
    Ok((render(&[t], format)?, breaches))
}

const QUANTITIES: [&str; 5] = ["iA", "iB", "iAp", "iBp", "iTotal"];

fn band_rows(t: &mut Table, scope: &str, records: &[&MembershipRecord], level: f64) -> CliResult<()> {
    if records.len() < 3 {
        return Err(Failure::Input(format!(
            "{scope}: {} records, 3 or more are needed",
            records.len()
        )));
    }
    let values: Vec<[f64; 5]> = records.iter().map(|r| compute_derived(r).i_values()).collect();
    for (q, name) in QUANTITIES.iter().enumerate() {
        let col: Vec<f64> = values.iter().map(|v| v[q]).collect();
        let reg = sorted_regression(&col)?;
        let band = value_band(&col, level)?;
        t.rows.push(vec![
            text(scope),
            text(*name),
            Cell::Int(col.len()),
            num(reg.slope),
            num(reg.intercept),
            num(reg.r_squared),
            num(band.mean_ci.lo),
            num(band.mean_ci.hi),
            num(band.quantile.lo),
            num(band.quantile.hi),
        ]);
    }
    Ok(())
}

fn cmd_stats(
    datasets: &[ConceptPairDataset],
    panels: &[PathBuf],
    df: Option<f64>,
    level: f64,
    alpha: f64,
    format: Format,
) -> CliResult<String> {
    if datasets.is_empty() && panels.is_empty() {
        return Err(Failure::Input("nothing to analyse: give datasets or --likert panels".into()));
    }
    let mut tables = Vec::new();
    if !datasets.is_empty() {
        let mut t = Table::new(
            "regressions",
            &["scope", "quantity", "n", "slope", "intercept", "r_squared", "mean_ci_lo", "mean_ci_hi", "band_lo", "band_hi"],
        );
        if datasets.len() == 1 {
            let ds = &datasets[0];
            band_rows(&mut t, &ds.pair_label, &ds.records.iter().collect::<Vec<_>>(), level)?;
        } else {
            for ds in datasets.iter().filter(|d| d.len() >= 3) {
                band_rows(&mut t, &ds.pair_label, &ds.records.iter().collect::<Vec<_>>(), level)?;
            }
            let pooled: Vec<&MembershipRecord> = datasets.iter().flat_map(|d| d.records.iter()).collect();
            band_rows(&mut t, "pooled", &pooled, level)?;
        }
        tables.push(t);
    }
    if !panels.is_empty() {
        let mut t = Table::new("tests", &["label", "t", "df", "p", "threshold", "rejected"]);
        for p in panels {
            let m = load_likert(File::open(resolve(p)?)?)
                .map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
            for (label, res) in panel_tests(&m, alpha, df)? {
                match res {
                    Ok(r) => t.rows.push(vec![
                        text(label),
                        num(r.statistic),
                        num(r.df),
                        num(r.p_value),
                        num(r.threshold),
                        Cell::Bool(r.rejected),
                    ]),
                    Err(e) => eprintln!("{label}: {e}"),
                }
            }
        }
        tables.push(t);
    }
    render(&tables, format)
}

fn cmd_report(datasets: &[ConceptPairDataset], mode: M2Mode, format: Format) -> CliResult<String> {
    let mut tables = Vec::new();
    let mut summary = Table::new(
        "fit summary",
        &["dataset", "records", "targets", "fitted", "fraction", "first_sector_only", "mean_m_AB", "mean_m_ABp", "mean_m_ApB", "mean_m_ApBp"],
    );
    for ds in datasets {
        let mut t = Table::new(
            ds.pair_label.clone(),
            &[
                "Exemplar", "μ(A)", "μ(B)", "μ(A')", "μ(B')", "μ(A and B)", "μ(A and B')", "μ(A' and B)",
                "μ(A' and B')", "Δ_AB", "Δ_AB'", "Δ_A'B", "Δ_A'B'", "I_ABA'B'", "I_A", "I_B", "I_A'", "I_B'",
            ],
        );
        for r in &ds.records {
            let d = compute_derived(r);
            let mut row = vec![text(&r.exemplar)];
            row.extend(r.weights().map(num));
            row.extend(d.delta.map(num));
            row.extend([d.i_total, d.i_a, d.i_b, d.i_ap, d.i_bp].map(num));
            t.rows.push(row);
        }
        tables.push(t);
        let s = fit_dataset(ds, mode).summary;
        let mut row = vec![
            text(&ds.pair_label),
            Cell::Int(s.records),
            Cell::Int(s.targets),
            Cell::Int(s.fitted),
            s.fraction.map_or(text("n/a"), num),
            Cell::Int(s.first_sector_only),
        ];
        row.extend(s.mean_m.map(num));
        summary.rows.push(row);
    }
    tables.push(summary);
    render(&tables, format)
}

fn run(cli: Cli) -> CliResult<()> {
    let Common { format, out } = cli.common;
    match cli.command {
        Command::Analyze { datasets, tol } => {
            let ds = load_all(&datasets)?;
            emit(&out, &render(&[analyze(&ds, tol)], format.unwrap_or(Format::Tabular))?)
        }
        Command::Fit { datasets, m2_mode, provenance } => {
            let mode: M2Mode = m2_mode.parse()?;
            let ds = load_all(&datasets)?;
            emit(&out, &cmd_fit(&ds, mode, provenance, format.unwrap_or(Format::Structured))?)
        }
        Command::Verify { document, data, tol } => {
            let doc = ModelDocument::from_json(&std::fs::read_to_string(&document)?)
                .map_err(|e| Failure::Input(format!("{}: {e}", document.display())))?;
            let ds = load_all(&data)?;
            let (body, breaches) = cmd_verify(&doc, &ds, tol, format.unwrap_or(Format::Tabular))?;
            emit(&out, &body)?;
            if breaches > 0 {
                return Err(Failure::Breach(format!("{breaches} residuals exceed {tol}")));
            }
            Ok(())
        }
        Command::Stats { datasets, likert, df, level, alpha } => {
            let ds = load_all(&datasets)?;
            emit(&out, &cmd_stats(&ds, &likert, df, level, alpha, format.unwrap_or(Format::Tabular))?)
        }
        Command::Report { datasets, m2_mode } => {
            let mode: M2Mode = m2_mode.parse()?;
            let ds = load_all(&datasets)?;
            emit(&out, &cmd_report(&ds, mode, format.unwrap_or(Format::Markdown))?)
        }
        Command::Convert { likert, label } => {
            let p = resolve(&likert)?;
            let m = load_likert(File::open(&p)?).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
            let ds = likert_dataset(&m, &label.unwrap_or_else(|| label_of(&p)))?;
            let mut buf = Vec::new();
            write_dataset(&mut buf, &ds)?;
            emit(&out, &String::from_utf8(buf).expect("csv output is UTF-8"))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Breach(msg)) => {
            eprintln!("tolerance breach: {msg}");
            ExitCode::from(2)
        }
    }
}
