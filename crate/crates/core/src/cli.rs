//! Command-line front end: analyze, certify, sweep and audit.
//!
//! Exit codes: 0 success or holds, 1 refuted, 2 inconclusive, 3 input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::corpus::{audit_cases, builtin_cases, load_corpus, random_cases, RandomBatch};
use crate::criteria::{
    check_qualitative, check_quantitative, margin_verdict, positivity_verdict, Certificate,
    Evaluation, QuantityKey, Scalar, Verdict, DEFAULT_GAMMAS,
};
use crate::dual_slopes::LimitingKind;
use crate::error::{Error, Result};
use crate::ext;
use crate::mappings::{Phi, VarthetaEstimate};
use crate::primal_slopes::Family;
use crate::problem::{Problem, RhoSchedule};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REFUTED: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

/// Random sampled graphs added to the built-in audit corpus.
pub const DEFAULT_RANDOM: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaugeSel {
    F,
    G,
    Phi,
    Holder(f64),
}

impl FromStr for GaugeSel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "f" => Ok(GaugeSel::F),
            "g" => Ok(GaugeSel::G),
            "phi" => Ok(GaugeSel::Phi),
            _ => {
                let q = s
                    .strip_prefix("holder:")
                    .ok_or_else(|| format!("unknown gauge {s}; expected f, g, phi or holder:q"))?
                    .parse::<f64>()
                    .map_err(|e| e.to_string())?;
                if q > 0.0 && q <= 1.0 {
                    Ok(GaugeSel::Holder(q))
                } else {
                    Err(format!("holder order {q} outside (0, 1]"))
                }
            }
        }
    }
}

impl GaugeSel {
    /// Criteria family: f and g both use the g-tables, φ and Hölder the φ-tables.
    fn family(self) -> Family {
        match self {
            GaugeSel::F | GaugeSel::G => Family::G,
            GaugeSel::Phi | GaugeSel::Holder(_) => Family::Phi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Q,
    Gamma,
    Rho0,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Problem specification (JSON).
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// f, g, phi or holder:q with q in (0, 1].
    #[arg(long, default_value = "phi")]
    pub gauge: GaugeSel,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub rho0: Option<f64>,
    #[arg(long)]
    pub rho_factor: Option<f64>,
    #[arg(long)]
    pub rho_steps: Option<usize>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(
    name = "subreg",
    version,
    about = "Subregularity under a nonlinear gauge: slopes, criteria and implication audits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// All slopes, moduli, ϑ[φ] and coderivative data at the reference point.
    Analyze {
        #[command(flatten)]
        common: Common,
    },
    /// Certificates for the quantitative (needs --gamma) or qualitative criteria.
    Certify {
        #[command(flatten)]
        common: Common,
        /// Condition whose verdict sets the exit code; defaults to (a), or sr with --qualitative.
        #[arg(long)]
        condition: Option<String>,
        #[arg(long)]
        qualitative: bool,
    },
    /// One row per axis value with moduli, slopes and verdicts.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated axis values; may be empty.
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        values: String,
    },
    /// Checks every arrow of the implication diagrams on a corpus.
    Audit {
        #[command(flatten)]
        common: Common,
        /// Corpus JSON; without it the built-in corpus is used.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Random sampled graphs added to the built-in corpus.
        #[arg(long)]
        random: Option<usize>,
    },
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

/// Runs a parsed command, returning its exit code; input errors surface as Err.
pub fn execute(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Analyze { common } => {
            let problem = load_problem(common)?;
            let report = analyze(&problem)?;
            match common.format {
                Format::Json => emit(common, &to_json(&report)?)?,
                Format::Csv => emit(common, &analyze_csv(&report)?)?,
            }
            Ok(EXIT_OK)
        }
        Command::Certify {
            common,
            condition,
            qualitative,
        } => {
            let problem = load_problem(common)?;
            let report = certify(&problem, common, condition.as_deref(), *qualitative)?;
            match common.format {
                Format::Json => emit(common, &to_json(&report)?)?,
                Format::Csv => emit(common, &certify_csv(&report.certificates)?)?,
            }
            Ok(match report.verdict {
                Verdict::Holds => EXIT_OK,
                Verdict::Fails => EXIT_REFUTED,
                Verdict::Inconclusive => EXIT_INCONCLUSIVE,
            })
        }
        Command::Sweep {
            common,
            axis,
            values,
        } => {
            let problem = load_problem(common)?;
            let values = parse_values(values)?;
            let report = sweep(&problem, common, *axis, &values)?;
            for n in &report.notes {
                eprintln!("note: {n}");
            }
            match common.format {
                Format::Json => emit(common, &to_json(&report)?)?,
                Format::Csv => emit(common, &sweep_csv(&report)?)?,
            }
            Ok(EXIT_OK)
        }
        Command::Audit {
            common,
            corpus,
            random,
        } => {
            let mut cases = match corpus {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
                    load_corpus(&text)?
                }
                None => builtin_cases()?,
            };
            let n = random.unwrap_or(if corpus.is_some() { 0 } else { DEFAULT_RANDOM });
            cases.extend(random_cases(RandomBatch {
                count: n,
                seed: common.seed,
            }));
            let gammas = match common.gamma {
                Some(g) => vec![g],
                None => DEFAULT_GAMMAS.to_vec(),
            };
            let summary = audit_cases(&cases, &gammas, common.seed)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            emit(common, &to_json(&summary)?)?;
            Ok(if summary.total_violations == 0 {
                EXIT_OK
            } else {
                EXIT_REFUTED
            })
        }
    }
}

fn load_problem(common: &Common) -> Result<Problem> {
    let path = common
        .problem
        .as_ref()
        .ok_or_else(|| Error::Input("--problem is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    apply_overrides(Problem::from_json(&text)?, common)
}

/// Applies the command-line sampling and gauge overrides to a problem.
pub fn apply_overrides(problem: Problem, common: &Common) -> Result<Problem> {
    let mut s = problem.sampling;
    let r = &mut s.rho_schedule;
    *r = RhoSchedule::new(
        common.rho0.unwrap_or(r.rho0),
        common.rho_factor.unwrap_or(r.factor),
        common.rho_steps.unwrap_or(r.steps),
    )?;
    if let Some(radius) = common.radius {
        s.radius = radius;
    }
    if let Some(res) = common.resolution {
        s.resolution = res;
    }
    let mut p = problem.with_sampling(s)?;
    if let GaugeSel::Holder(q) = common.gauge {
        p = p.with_phi(Phi::Power { q })?;
    }
    Ok(p)
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| Error::Input(e.to_string()))
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn parse_values(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| Error::Input(format!("axis value {t}: {e}")))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantityRow {
    pub quantity: QuantityKey,
    #[serde(flatten)]
    pub scalar: Scalar,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitingRow {
    pub kind: LimitingKind,
    #[serde(with = "ext")]
    pub inf_norm: f64,
    pub kernel_contains_zero: bool,
    pub pairs: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub schema_version: u32,
    pub instance: String,
    pub vartheta: VarthetaEstimate,
    pub quantities: Vec<QuantityRow>,
    pub limiting: Vec<LimitingRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

pub fn analyze(problem: &Problem) -> Result<AnalyzeReport> {
    let ev = Evaluation::new(problem)?;
    let quantities: Vec<QuantityRow> = ev
        .estimates
        .iter()
        .map(|(k, _)| QuantityRow {
            quantity: *k,
            scalar: ev.get(*k).expect("estimate present"),
        })
        .collect();
    let mut diagnostics = Vec::new();
    if let Some(r) = ev.dual_unsupported_reason() {
        diagnostics.push(format!("dual slopes not computed: {r}"));
    }
    if ev.admissible_count() == 0 {
        diagnostics.push("admissible set empty at every step: slopes and moduli are +inf (inf over the empty set)".into());
    }
    for (k, e) in &ev.estimates {
        diagnostics.extend(e.diagnostics.iter().map(|d| format!("{k}: {d}")));
    }
    Ok(AnalyzeReport {
        schema_version: 1,
        instance: problem.name.clone().unwrap_or_else(|| "unnamed".into()),
        vartheta: ev.vartheta,
        quantities,
        limiting: ev
            .limiting
            .iter()
            .map(|(k, l)| LimitingRow {
                kind: *k,
                inf_norm: l.inf_norm,
                kernel_contains_zero: l.kernel_contains_zero,
                pairs: l.pairs.len(),
                diagnostics: l.diagnostics.clone(),
            })
            .collect(),
        diagnostics,
    })
}

fn fmt_ext(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "+inf".into()
    } else {
        "-inf".into()
    }
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Input(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Input(e.to_string()))?)
        .map_err(|e| Error::Input(e.to_string()))
}

fn analyze_csv(r: &AnalyzeReport) -> Result<String> {
    let mut rows: Vec<Vec<String>> = r
        .quantities
        .iter()
        .map(|q| {
            vec![
                q.quantity.to_string(),
                fmt_ext(q.scalar.value),
                fmt_ext(q.scalar.lower),
                fmt_ext(q.scalar.upper),
                q.scalar.rho.map(fmt_ext).unwrap_or_default(),
            ]
        })
        .collect();
    rows.push(vec![
        "vartheta".into(),
        fmt_ext(r.vartheta.value),
        fmt_ext(r.vartheta.lower),
        fmt_ext(r.vartheta.upper),
        String::new(),
    ]);
    csv_string(&["quantity", "value", "lower", "upper", "rho"], rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifyReport {
    pub schema_version: u32,
    pub instance: String,
    pub family: Family,
    pub condition: String,
    pub verdict: Verdict,
    pub certificates: Vec<Certificate>,
}

pub fn certify(
    problem: &Problem,
    common: &Common,
    condition: Option<&str>,
    qualitative: bool,
) -> Result<CertifyReport> {
    let family = common.gauge.family();
    let ev = Evaluation::new(problem)?;
    let certificates = if qualitative {
        check_qualitative(&ev, family)?
    } else {
        let gamma = common
            .gamma
            .ok_or_else(|| Error::Input("--gamma is required for quantitative criteria".into()))?;
        check_quantitative(&ev, family, gamma)?
    };
    let condition = condition
        .unwrap_or(if qualitative { "sr" } else { "a" })
        .to_string();
    let verdict = certificates
        .iter()
        .find(|c| c.criterion_id == condition)
        .ok_or_else(|| Error::Input(format!("no condition ({condition}) in this table")))?
        .verdict;
    Ok(CertifyReport {
        schema_version: 1,
        instance: problem.name.clone().unwrap_or_else(|| "unnamed".into()),
        family,
        condition,
        verdict,
        certificates,
    })
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Fails => "fails",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn certify_csv(certs: &[Certificate]) -> Result<String> {
    let rows = certs
        .iter()
        .map(|c| {
            vec![
                c.criterion_id.clone(),
                c.gamma.map(fmt_ext).unwrap_or_default(),
                verdict_str(c.verdict).into(),
                fmt_ext(c.value),
                fmt_ext(c.lower),
                fmt_ext(c.upper),
                c.rho_used.map(fmt_ext).unwrap_or_default(),
            ]
        })
        .collect();
    csv_string(
        &[
            "criterion_id",
            "gamma",
            "verdict",
            "value",
            "lower",
            "upper",
            "rho",
        ],
        rows,
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    #[serde(with = "ext")]
    pub axis_value: f64,
    pub modulus: Scalar,
    pub strict: Scalar,
    pub uniform: Scalar,
    /// Positivity of the modulus: qualitative subregularity.
    pub subregular: Verdict,
    /// (a) at the row's γ when one is defined.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition_a: Option<Verdict>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub instance: String,
    pub axis: &'static str,
    pub family: Family,
    pub rows: Vec<SweepRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn sweep_row(ev: &Evaluation, family: Family, axis_value: f64, gamma: Option<f64>) -> SweepRow {
    use crate::primal_slopes::StrictVariant;
    let modulus = ev
        .get(QuantityKey::Modulus)
        .expect("modulus always computed");
    SweepRow {
        axis_value,
        subregular: positivity_verdict(modulus.value),
        condition_a: gamma.map(|g| margin_verdict(modulus.value, g)),
        strict: ev
            .get(QuantityKey::Primal(family, StrictVariant::Plain))
            .expect("primal computed"),
        uniform: ev
            .get(QuantityKey::Primal(family, StrictVariant::Uniform))
            .expect("primal computed"),
        modulus,
    }
}

pub fn sweep(
    problem: &Problem,
    common: &Common,
    axis: Axis,
    values: &[f64],
) -> Result<SweepReport> {
    let family = common.gauge.family();
    let mut rows = Vec::with_capacity(values.len());
    let mut notes = Vec::new();
    match axis {
        Axis::Q => {
            for &q in values {
                let p = problem.with_phi(Phi::Power { q })?;
                rows.push(sweep_row(
                    &Evaluation::primal_only(&p)?,
                    Family::Phi,
                    q,
                    common.gamma,
                ));
            }
            let mut order: Vec<&SweepRow> = rows.iter().collect();
            order.sort_by(|a, b| a.axis_value.total_cmp(&b.axis_value));
            let monotone = order
                .windows(2)
                .all(|w| !(w[1].subregular == Verdict::Holds && w[0].subregular == Verdict::Fails));
            notes.push(if monotone {
                "Hoelder verdicts monotone in q: smaller q is never harder on these rows".into()
            } else {
                "Hoelder verdicts NOT monotone in q on these rows".into()
            });
        }
        Axis::Gamma => {
            let ev = Evaluation::primal_only(problem)?;
            for &g in values {
                if !(g > 0.0 && g.is_finite()) {
                    return Err(Error::Input(format!("gamma {g} must be positive")));
                }
                rows.push(sweep_row(&ev, family, g, Some(g)));
            }
        }
        Axis::Rho0 => {
            for &r0 in values {
                let mut s = problem.sampling;
                s.rho_schedule = RhoSchedule::new(r0, s.rho_schedule.factor, s.rho_schedule.steps)?;
                let p = problem.with_sampling(s)?;
                rows.push(sweep_row(
                    &Evaluation::primal_only(&p)?,
                    family,
                    r0,
                    common.gamma,
                ));
            }
        }
    }
    Ok(SweepReport {
        schema_version: 1,
        instance: problem.name.clone().unwrap_or_else(|| "unnamed".into()),
        axis: match axis {
            Axis::Q => "q",
            Axis::Gamma => "gamma",
            Axis::Rho0 => "rho0",
        },
        family,
        rows,
        notes,
    })
}

fn sweep_csv(r: &SweepReport) -> Result<String> {
    let rows = r
        .rows
        .iter()
        .map(|row| {
            let mut v = vec![fmt_ext(row.axis_value)];
            for s in [&row.modulus, &row.strict, &row.uniform] {
                v.extend([fmt_ext(s.value), fmt_ext(s.lower), fmt_ext(s.upper)]);
            }
            v.push(verdict_str(row.subregular).into());
            v.push(row.condition_a.map(verdict_str).unwrap_or_default().into());
            v
        })
        .collect();
    csv_string(
        &[
            r.axis,
            "modulus",
            "modulus_lower",
            "modulus_upper",
            "strict",
            "strict_lower",
            "strict_upper",
            "uniform",
            "uniform_lower",
            "uniform_upper",
            "subregular",
            "condition_a",
        ],
        rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauge_parsing() {
        assert_eq!(
            "holder:0.5".parse::<GaugeSel>().unwrap(),
            GaugeSel::Holder(0.5)
        );
        assert!("holder:1.5".parse::<GaugeSel>().is_err());
        assert!("holder:0".parse::<GaugeSel>().is_err());
        assert!("h".parse::<GaugeSel>().is_err());
    }

    #[test]
    fn values_parsing() {
        assert_eq!(parse_values("").unwrap(), Vec::<f64>::new());
        assert_eq!(parse_values("1, 0.5").unwrap(), vec![1.0, 0.5]);
        assert!(parse_values("x").is_err());
    }
}
