use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;

use super::docs::{self, Annotations};
use super::{num, CliError, Report, ReportBody, RowError, RunConfig, TableRef};
use crate::airquality::{
    aqi_subindex, asi, bqi, category, compare_vectors, exceedance_stats, index_a, overall_aqi, pindex,
    population_weighted, relative_change, shannon_index, BreakpointTable, CityReading, DailyRecord, Divergence,
    EmissionRecord, ExceedanceStats, Pollutant, PollutantVector, ToleranceTable,
};
use crate::health::{bmi, classify, ponderal, BmiCategory, BodyMetrics};
use crate::statements::{check, CheckOptions, Verdict};
use crate::stats::{kendall_tau, linear_regression, pearson_r, spearman_rho, PairedSample, Regression};

const STANDARD_BREAKPOINTS: &str = include_str!("../../fixtures/breakpoints/standard.toml");

/// Table used by `aqi` when no `--breakpoints` file is given.
pub fn standard_breakpoints() -> BreakpointTable {
    docs::parse_breakpoints(STANDARD_BREAKPOINTS, "standard.toml").expect("bundled table is valid")
}

// ---------------------------------------------------------------------------
// CSV input

struct Row {
    line: u64,
    fields: Vec<String>,
}

/// Reads the named columns (case-insensitive) from a headed CSV file. A file
/// with no content yields no rows.
fn read_csv(path: &Path, columns: &[&str]) -> Result<(Vec<Row>, Vec<RowError>), CliError> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: origin.clone(),
        source,
    })?;
    if text.trim().is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|source| CliError::Csv {
            path: origin.clone(),
            source,
        })?
        .clone();
    let mut idx = Vec::with_capacity(columns.len());
    for c in columns {
        let i = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(c))
            .ok_or_else(|| CliError::MissingColumn {
                path: origin.clone(),
                column: c.to_string(),
            })?;
        idx.push(i);
    }
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for rec in reader.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                errors.push(RowError {
                    line: e.position().map(|p| p.line()),
                    context: origin.clone(),
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        match idx
            .iter()
            .map(|&i| rec.get(i).map(str::to_string))
            .collect::<Option<Vec<_>>>()
        {
            Some(fields) => rows.push(Row { line, fields }),
            None => errors.push(RowError {
                line: Some(line),
                context: origin.clone(),
                message: format!("expected {} fields, found {}", headers.len(), rec.len()),
            }),
        }
    }
    Ok((rows, errors))
}

fn number(field: &str, name: &str) -> Result<f64, String> {
    let v: f64 = field
        .parse()
        .map_err(|_| format!("{name}: `{field}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{name}: `{field}` is not finite"))
    }
}

fn count(field: &str, name: &str) -> Result<u64, String> {
    field
        .parse()
        .map_err(|_| format!("{name}: `{field}` is not a non-negative integer"))
}

fn row_error(row: &Row, context: &str, message: impl ToString) -> RowError {
    RowError {
        line: Some(row.line),
        context: context.to_string(),
        message: message.to_string(),
    }
}

/// Keys in order of first appearance with the indices of their rows.
fn group_by<K: Clone + PartialEq, T>(items: &[T], key: impl Fn(&T) -> K) -> Vec<(K, Vec<usize>)> {
    let mut groups: Vec<(K, Vec<usize>)> = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let k = key(item);
        match groups.iter_mut().find(|g| g.0 == k) {
            Some(g) => g.1.push(i),
            None => groups.push((k, vec![i])),
        }
    }
    groups
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), num)
}

// ---------------------------------------------------------------------------
// bmi

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BmiRow {
    pub line: u64,
    pub id: String,
    pub weight_kg: f64,
    pub height_m: f64,
    pub bmi: f64,
    pub ponderal: f64,
    pub category: BmiCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BmiBody {
    pub rows: Vec<BmiRow>,
    pub mean_bmi: Option<f64>,
    pub mean_ponderal: Option<f64>,
}

impl ReportBody for BmiBody {
    fn rows(&self) -> usize {
        self.rows.len()
    }

    fn write_text(&self, out: &mut String) {
        let _ = writeln!(out, "id\tbmi\tponderal\tcategory");
        for r in &self.rows {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", r.id, num(r.bmi), num(r.ponderal), r.category);
        }
        let _ = writeln!(out, "mean\t{}\t{}", opt(self.mean_bmi), opt(self.mean_ponderal));
    }
}

/// BMI, Ponderal index and category per row of `id, weight, weight_unit,
/// height, height_unit`.
pub fn cmd_bmi(input: &Path, config: &RunConfig) -> Result<Report<BmiBody>, CliError> {
    let origin = input.display().to_string();
    let (rows, mut errors) = read_csv(input, &["id", "weight", "weight_unit", "height", "height_unit"])?;
    let mut out = Vec::new();
    for row in &rows {
        let f = &row.fields;
        let parsed = (|| -> Result<BodyMetrics, String> {
            let w = number(&f[1], "weight")?;
            let wu = f[2].parse().map_err(|e: crate::health::HealthError| e.to_string())?;
            let h = number(&f[3], "height")?;
            let hu = f[4].parse().map_err(|e: crate::health::HealthError| e.to_string())?;
            BodyMetrics::new(w, wu, h, hu).map_err(|e| e.to_string())
        })();
        match parsed {
            Ok(m) => {
                let b = bmi(&m);
                out.push(BmiRow {
                    line: row.line,
                    id: f[0].clone(),
                    weight_kg: m.weight_kg(),
                    height_m: m.height_m(),
                    bmi: b.value(),
                    ponderal: ponderal(&m),
                    category: classify(b),
                });
            }
            Err(msg) => errors.push(row_error(row, &origin, msg)),
        }
    }
    errors.sort_by_key(|e| e.line);
    let body = BmiBody {
        mean_bmi: mean(out.iter().map(|r| r.bmi)),
        mean_ponderal: mean(out.iter().map(|r| r.ponderal)),
        rows: out,
    };
    Ok(Report::new("bmi", config, Vec::new(), Vec::new(), body, errors))
}

// ---------------------------------------------------------------------------
// aqi

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubIndex {
    pub pollutant: Pollutant,
    pub concentration: f64,
    pub unit: String,
    pub sub_index: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AqiRow {
    pub location: String,
    pub date: String,
    pub sub_indices: Vec<SubIndex>,
    pub overall: f64,
    pub dominant: Pollutant,
    pub category: String,
    pub color: String,
    pub bqi: f64,
    pub bqi_category: String,
    pub shannon: Option<f64>,
    /// The mean places the vector in a different band than the max rule.
    pub category_mismatch: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AqiDivergence {
    pub date: String,
    pub locations: (String, String),
    pub overall: (f64, f64),
    pub bqi: (f64, f64),
    pub divergence: Divergence,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AqiBody {
    pub rows: Vec<AqiRow>,
    /// Pairs of locations on the same date ranked differently by the max
    /// rule and the mean.
    pub divergences: Vec<AqiDivergence>,
}

impl ReportBody for AqiBody {
    fn rows(&self) -> usize {
        self.rows.len()
    }

    fn write_text(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "location\tdate\tsub-indices\toverall\tdominant\tcategory\tbqi\tshannon"
        );
        for r in &self.rows {
            let subs: Vec<String> = r
                .sub_indices
                .iter()
                .map(|s| format!("{}={}", s.pollutant, num(s.sub_index)))
                .collect();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}/{}{}\t{}\t{}",
                r.location,
                r.date,
                subs.join(","),
                num(r.overall),
                r.dominant,
                r.category,
                r.color,
                if r.category_mismatch {
                    " (mean: ".to_string() + &r.bqi_category + ")"
                } else {
                    String::new()
                },
                num(r.bqi),
                opt(r.shannon)
            );
        }
        for d in &self.divergences {
            let _ = writeln!(
                out,
                "divergence {:?} on {}: {} vs {}: max {} vs {}, mean {} vs {}",
                d.divergence,
                d.date,
                d.locations.0,
                d.locations.1,
                num(d.overall.0),
                num(d.overall.1),
                num(d.bqi.0),
                num(d.bqi.1)
            );
        }
    }
}

fn load_breakpoints(config: &RunConfig) -> Result<BreakpointTable, CliError> {
    match &config.breakpoints {
        Some(p) => docs::load_breakpoints(p),
        None => Ok(standard_breakpoints()),
    }
}

/// Sub-indices, overall AQI and summary indices per `(location, date)` from
/// rows of `location, date, pollutant, concentration, unit`.
pub fn cmd_aqi(input: &Path, config: &RunConfig) -> Result<Report<AqiBody>, CliError> {
    let origin = input.display().to_string();
    let table = load_breakpoints(config)?;
    let (rows, mut errors) = read_csv(input, &["location", "date", "pollutant", "concentration", "unit"])?;

    let mut readings: Vec<(&Row, SubIndex)> = Vec::new();
    for row in &rows {
        let f = &row.fields;
        let parsed = (|| -> Result<SubIndex, String> {
            let p: Pollutant = f[2].parse().map_err(|e: crate::airquality::AirError| e.to_string())?;
            let c = number(&f[3], "concentration")?;
            let s = aqi_subindex(p, c, &f[4], &table).map_err(|e| e.to_string())?;
            Ok(SubIndex {
                pollutant: p,
                concentration: c,
                unit: f[4].clone(),
                sub_index: s,
            })
        })();
        match parsed {
            Ok(s) => readings.push((row, s)),
            Err(msg) => errors.push(row_error(row, &origin, msg)),
        }
    }

    let mut out = Vec::new();
    for ((location, date), members) in group_by(&readings, |(r, _)| (r.fields[0].clone(), r.fields[1].clone())) {
        let mut subs: Vec<SubIndex> = Vec::new();
        for i in members {
            let (row, s) = &readings[i];
            if subs.iter().any(|x| x.pollutant == s.pollutant) {
                errors.push(row_error(
                    row,
                    &origin,
                    format!("{} listed twice for {location} {date}", s.pollutant),
                ));
                continue;
            }
            subs.push(s.clone());
        }
        subs.sort_by_key(|s| s.pollutant);
        let v = PollutantVector::new(subs.iter().map(|s| (s.pollutant, s.sub_index)).collect())?;
        let (overall, dominant) = overall_aqi(&v)?;
        let cat = category(overall)?;
        let q = bqi(&v)?;
        let q_cat = category(q)?;
        out.push(AqiRow {
            location,
            date,
            sub_indices: subs,
            overall,
            dominant,
            category: cat.name().to_string(),
            color: cat.color().to_string(),
            bqi: q,
            bqi_category: q_cat.name().to_string(),
            shannon: shannon_index(&v).ok(),
            category_mismatch: cat != q_cat,
        });
    }

    let mut divergences = Vec::new();
    for (i, a) in out.iter().enumerate() {
        for b in out.iter().skip(i + 1).filter(|b| b.date == a.date) {
            let va = PollutantVector::new(a.sub_indices.iter().map(|s| (s.pollutant, s.sub_index)).collect())?;
            let vb = PollutantVector::new(b.sub_indices.iter().map(|s| (s.pollutant, s.sub_index)).collect())?;
            let cmp = compare_vectors(&va, &vb)?;
            if let Some(divergence) = cmp.divergence {
                divergences.push(AqiDivergence {
                    date: a.date.clone(),
                    locations: (a.location.clone(), b.location.clone()),
                    overall: cmp.overall,
                    bqi: cmp.bqi,
                    divergence,
                });
            }
        }
    }

    errors.sort_by_key(|e| e.line);
    let tables = vec![TableRef {
        role: "breakpoints".into(),
        name: table.name.clone(),
        identity: table.identity(),
    }];
    Ok(Report::new(
        "aqi",
        config,
        tables,
        Vec::new(),
        AqiBody { rows: out, divergences },
        errors,
    ))
}

// ---------------------------------------------------------------------------
// check

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictReport {
    pub document: String,
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub statement: String,
    pub verdict: Verdict,
    /// Explanation of the deciding rule, if a rule decided.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
    /// Whether the attached witness replays to its recorded truth flip.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_replayed: Option<bool>,
    pub annotations: Annotations,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckBody {
    pub reports: Vec<VerdictReport>,
}

impl ReportBody for CheckBody {
    fn rows(&self) -> usize {
        self.reports.len()
    }

    fn write_text(&self, out: &mut String) {
        for r in &self.reports {
            let _ = writeln!(out, "{} ({})", r.name, r.document);
            let _ = writeln!(out, "  statement: {}", r.statement);
            let _ = write!(out, "  verdict: {}", r.verdict.label());
            if let Some(rule) = r.verdict.rule() {
                let _ = write!(out, " [{}]", rule.name());
            }
            let _ = writeln!(out);
            if let Some(e) = &r.explanation {
                let _ = writeln!(out, "  rule: {e}");
            }
            if let Some(w) = r.verdict.witness() {
                let ts: Vec<String> = w.transforms.iter().map(|(id, t)| format!("{id} -> {t}")).collect();
                let _ = writeln!(
                    out,
                    "  witness: {} turns {} into {}{}",
                    ts.join("; "),
                    w.truth_before,
                    w.truth_after,
                    match r.witness_replayed {
                        Some(true) => " (replayed)",
                        _ => " (REPLAY FAILED)",
                    }
                );
            }
            if let Verdict::Undetermined { trials } = r.verdict {
                let _ = writeln!(out, "  no rule applies and {trials} trials found no flip");
            }
            if let Some(u) = &r.annotations.usefulness {
                let _ = writeln!(out, "  usefulness: {u}");
            }
            if let Some(l) = &r.annotations.legitimacy {
                let _ = writeln!(out, "  legitimacy: {l}");
            }
        }
    }
}

/// Verdict for each statement document. A document that fails to parse or
/// check is a row error; the rest are still reported.
pub fn cmd_check(documents: &[PathBuf], config: &RunConfig) -> Result<Report<CheckBody>, CliError> {
    let opts = CheckOptions {
        trials: config.trials,
        seed: config.seed,
        rel_tol: config.tolerance,
        validate: true,
    };
    let mut reports = Vec::new();
    let mut errors = Vec::new();
    for path in documents {
        let origin = path.display().to_string();
        let doc = match docs::load_statement_doc(path) {
            Ok(d) => d,
            Err(e @ CliError::Io { .. }) => return Err(e),
            Err(e) => {
                errors.push(RowError {
                    line: None,
                    context: origin,
                    message: e.to_string(),
                });
                continue;
            }
        };
        match check(&doc.statement, &doc.bindings, &opts) {
            Ok(verdict) => {
                let witness_replayed = match verdict.witness() {
                    Some(w) => Some(
                        w.verify(&doc.statement, &doc.bindings, config.tolerance)
                            .unwrap_or(false),
                    ),
                    None => None,
                };
                reports.push(VerdictReport {
                    document: origin,
                    name: doc.name,
                    description: doc.description,
                    statement: doc.statement.to_string(),
                    explanation: verdict.rule().map(|r| r.explanation().to_string()),
                    verdict,
                    witness_replayed,
                    annotations: doc.annotations,
                });
            }
            Err(e) => errors.push(RowError {
                line: None,
                context: origin,
                message: e.to_string(),
            }),
        }
    }
    Ok(Report::new(
        "check",
        config,
        Vec::new(),
        Vec::new(),
        CheckBody { reports },
        errors,
    ))
}

// ---------------------------------------------------------------------------
// stats

/// Conventional cut-offs for a "strong" correlation by discipline. Advisory
/// only; nothing is decided by them.
pub const DISCIPLINE_THRESHOLDS: [(&str, f64, f64); 4] = [
    ("physics", 0.95, 0.9),
    ("chemistry", 0.9, 0.8),
    ("biology", 0.7, 0.5),
    ("social sciences", 0.6, 0.35),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Advisory {
    pub discipline: String,
    pub r_threshold: f64,
    pub r_squared_threshold: f64,
    pub meets_r: bool,
    pub meets_r_squared: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsBody {
    pub columns: (String, String),
    pub n: usize,
    pub kendall_tau: Option<f64>,
    pub spearman_rho: Option<f64>,
    pub pearson_r: Option<f64>,
    pub regression: Option<Regression>,
    pub advisories: Vec<Advisory>,
}

impl ReportBody for StatsBody {
    fn rows(&self) -> usize {
        self.n
    }

    fn write_text(&self, out: &mut String) {
        let _ = writeln!(out, "x = {}, y = {}, n = {}", self.columns.0, self.columns.1, self.n);
        let _ = writeln!(out, "kendall tau\t{}", opt(self.kendall_tau));
        let _ = writeln!(out, "spearman rho\t{}", opt(self.spearman_rho));
        let _ = writeln!(out, "pearson r\t{}", opt(self.pearson_r));
        if let Some(r) = &self.regression {
            let sign = if r.intercept < 0.0 { '-' } else { '+' };
            let _ = writeln!(
                out,
                "regression\ty = {} x {sign} {}",
                num(r.slope),
                num(r.intercept.abs())
            );
            let _ = writeln!(out, "r squared\t{}", num(r.r_squared));
        }
        for a in &self.advisories {
            let _ = writeln!(
                out,
                "advisory {}: |r| >= {} {}, r^2 >= {} {}",
                a.discipline,
                a.r_threshold,
                if a.meets_r { "met" } else { "not met" },
                a.r_squared_threshold,
                if a.meets_r_squared { "met" } else { "not met" }
            );
        }
    }
}

/// Rank and linear correlation of the first two columns of a numeric CSV.
/// Ties and zero variance are reported per statistic.
pub fn cmd_stats(input: &Path, config: &RunConfig) -> Result<Report<StatsBody>, CliError> {
    let origin = input.display().to_string();
    let text = std::fs::read_to_string(input).map_err(|source| CliError::Io {
        path: origin.clone(),
        source,
    })?;
    let header: Vec<String> = text
        .lines()
        .next()
        .map(|l| l.split(',').map(|s| s.trim().to_string()).collect())
        .unwrap_or_default();
    let (rows, mut errors) = if header.len() >= 2 {
        read_csv(input, &[&header[0], &header[1]])?
    } else if text.trim().is_empty() {
        (Vec::new(), Vec::new())
    } else {
        return Err(CliError::Input(format!("{origin}: expected two columns")));
    };
    let mut points = Vec::new();
    for row in &rows {
        match number(&row.fields[0], &header[0]).and_then(|x| number(&row.fields[1], &header[1]).map(|y| (x, y))) {
            Ok(p) => points.push(p),
            Err(msg) => errors.push(row_error(row, &origin, msg)),
        }
    }
    let columns = match header.as_slice() {
        [a, b, ..] => (a.clone(), b.clone()),
        _ => (String::new(), String::new()),
    };
    let mut body = StatsBody {
        columns,
        n: points.len(),
        kendall_tau: None,
        spearman_rho: None,
        pearson_r: None,
        regression: None,
        advisories: Vec::new(),
    };
    if !points.is_empty() {
        let sample = PairedSample::new(points).map_err(|e| CliError::Input(e.to_string()))?;
        let mut record = |name: &str, r: Result<f64, crate::stats::StatsError>| match r {
            Ok(v) => Some(v),
            Err(e) => {
                errors.push(RowError {
                    line: None,
                    context: name.to_string(),
                    message: e.to_string(),
                });
                None
            }
        };
        body.kendall_tau = record("kendall_tau", kendall_tau(&sample));
        body.spearman_rho = record("spearman_rho", spearman_rho(&sample));
        body.pearson_r = record("pearson_r", pearson_r(&sample));
        match linear_regression(&sample) {
            Ok(r) => body.regression = Some(r),
            Err(e) => errors.push(RowError {
                line: None,
                context: "regression".into(),
                message: e.to_string(),
            }),
        }
        if let (Some(r), Some(reg)) = (body.pearson_r, body.regression) {
            body.advisories = DISCIPLINE_THRESHOLDS
                .iter()
                .map(|&(d, rt, r2t)| Advisory {
                    discipline: d.to_string(),
                    r_threshold: rt,
                    r_squared_threshold: r2t,
                    meets_r: r.abs() >= rt,
                    meets_r_squared: reg.r_squared >= r2t,
                })
                .collect();
        }
    }
    let notes = if body.advisories.is_empty() {
        Vec::new()
    } else {
        vec!["discipline thresholds are advisory conventions, not tests".to_string()]
    };
    Ok(Report::new("stats", config, Vec::new(), notes, body, errors))
}

// ---------------------------------------------------------------------------
// pollution-aggregate

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PollutionKind {
    /// pollutant, period, source, mass, unit -> A and Pindex
    Emissions,
    /// country, city, pm25, population -> population-weighted exposure
    Cities,
    /// period, pollutant, count, reference -> air stress index
    Asi,
    /// date, exceeded -> exceedance-day statistics per configured year
    Exceedance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmissionsRow {
    pub period: String,
    pub source: String,
    pub a: f64,
    pub pindex: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmissionsBody {
    pub rows: Vec<EmissionsRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CityRow {
    pub country: String,
    pub cities: usize,
    pub population: u64,
    pub weighted_pm25: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CityBody {
    pub rows: Vec<CityRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsiRow {
    pub period: String,
    pub pollutants: Vec<String>,
    pub asi: f64,
    /// Relative change from the previous period, when both cover the same
    /// pollutants.
    pub change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsiBody {
    pub rows: Vec<AsiRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExceedanceYear {
    pub stats: ExceedanceStats,
    /// Relative change in `days_elapsed` from the previous year.
    pub change_in_days_elapsed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExceedanceBody {
    pub year_start: String,
    pub threshold_count: u32,
    pub years: Vec<ExceedanceYear>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PollutionBody {
    Emissions(EmissionsBody),
    Cities(CityBody),
    Asi(AsiBody),
    Exceedance(ExceedanceBody),
}

impl ReportBody for PollutionBody {
    fn rows(&self) -> usize {
        match self {
            PollutionBody::Emissions(b) => b.rows.len(),
            PollutionBody::Cities(b) => b.rows.len(),
            PollutionBody::Asi(b) => b.rows.len(),
            PollutionBody::Exceedance(b) => b.years.len(),
        }
    }

    fn write_text(&self, out: &mut String) {
        match self {
            PollutionBody::Emissions(b) => {
                let _ = writeln!(out, "period\tsource\tA\tPindex");
                for r in &b.rows {
                    let _ = writeln!(out, "{}\t{}\t{}\t{}", r.period, r.source, num(r.a), num(r.pindex));
                }
            }
            PollutionBody::Cities(b) => {
                let _ = writeln!(out, "country\tcities\tpopulation\tI(A)");
                for r in &b.rows {
                    let _ = writeln!(
                        out,
                        "{}\t{}\t{}\t{}",
                        r.country,
                        r.cities,
                        r.population,
                        num(r.weighted_pm25)
                    );
                }
            }
            PollutionBody::Asi(b) => {
                let _ = writeln!(out, "period\tASI\tchange");
                for r in &b.rows {
                    let change = r
                        .change
                        .map_or_else(|| "-".to_string(), |c| format!("{}%", num(100.0 * c)));
                    let _ = writeln!(out, "{}\t{}\t{}", r.period, num(r.asi), change);
                }
            }
            PollutionBody::Exceedance(b) => {
                let _ = writeln!(
                    out,
                    "year begins\tdays\texceedances\treached {}\tdays elapsed\tdays remaining\tchange",
                    b.threshold_count
                );
                for y in &b.years {
                    let s = &y.stats;
                    let _ = writeln!(
                        out,
                        "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                        s.year_begins,
                        s.year_length,
                        s.total_days,
                        s.first_date_reaching
                            .map_or_else(|| "never".to_string(), |d| d.to_string()),
                        s.days_elapsed.map_or_else(|| "-".to_string(), |d| d.to_string()),
                        s.days_remaining_in_year,
                        y.change_in_days_elapsed
                            .map_or_else(|| "-".to_string(), |c| format!("{}%", num(100.0 * c)))
                    );
                }
            }
        }
    }
}

fn load_tolerances(config: &RunConfig) -> Result<ToleranceTable, CliError> {
    match &config.tolerances {
        Some(p) => docs::load_tolerances(p),
        None => Ok(ToleranceTable::reference()),
    }
}

pub fn cmd_pollution_aggregate(
    kind: PollutionKind,
    input: &Path,
    config: &RunConfig,
) -> Result<Report<PollutionBody>, CliError> {
    let name = "pollution-aggregate";
    match kind {
        PollutionKind::Emissions => {
            let table = load_tolerances(config)?;
            let (body, errors) = emissions(input, &table)?;
            let tables = vec![TableRef {
                role: "tolerances".into(),
                name: table.name.clone(),
                identity: table.identity(),
            }];
            Ok(Report::new(
                name,
                config,
                tables,
                Vec::new(),
                PollutionBody::Emissions(body),
                errors,
            ))
        }
        PollutionKind::Cities => {
            let (body, errors) = cities(input)?;
            Ok(Report::new(
                name,
                config,
                Vec::new(),
                Vec::new(),
                PollutionBody::Cities(body),
                errors,
            ))
        }
        PollutionKind::Asi => {
            let (body, errors) = air_stress(input)?;
            Ok(Report::new(
                name,
                config,
                Vec::new(),
                Vec::new(),
                PollutionBody::Asi(body),
                errors,
            ))
        }
        PollutionKind::Exceedance => {
            let (body, errors) = exceedance(input, config)?;
            let notes = vec![format!(
                "years begin on {} (MM-DD); days elapsed count from that date through the day the {}th exceedance occurs, inclusive",
                config.year_start, config.threshold_count
            )];
            Ok(Report::new(
                name,
                config,
                Vec::new(),
                notes,
                PollutionBody::Exceedance(body),
                errors,
            ))
        }
    }
}

fn emissions(input: &Path, table: &ToleranceTable) -> Result<(EmissionsBody, Vec<RowError>), CliError> {
    let origin = input.display().to_string();
    let (rows, mut errors) = read_csv(input, &["pollutant", "period", "source", "mass", "unit"])?;
    let mut records: Vec<(&Row, EmissionRecord)> = Vec::new();
    for row in &rows {
        let f = &row.fields;
        match number(&f[3], "mass")
            .and_then(|m| EmissionRecord::new(&f[0], &f[1], &f[2], m, &f[4]).map_err(|e| e.to_string()))
        {
            Ok(r) => records.push((row, r)),
            Err(msg) => errors.push(row_error(row, &origin, msg)),
        }
    }
    let mut out = Vec::new();
    for ((period, source), members) in group_by(&records, |(_, r)| (r.period.clone(), r.source.clone())) {
        let group: Vec<EmissionRecord> = members.iter().map(|&i| records[i].1.clone()).collect();
        let result = index_a(&group, &period, &source).and_then(|a| Ok((a, pindex(&group, table, &period, &source)?)));
        match result {
            Ok((a, p)) => out.push(EmissionsRow {
                period,
                source,
                a,
                pindex: p,
            }),
            Err(e) => errors.push(RowError {
                line: Some(records[members[0]].0.line),
                context: format!("{origin}: period {period}, source {source}"),
                message: e.to_string(),
            }),
        }
    }
    errors.sort_by_key(|e| e.line);
    Ok((EmissionsBody { rows: out }, errors))
}

fn cities(input: &Path) -> Result<(CityBody, Vec<RowError>), CliError> {
    let origin = input.display().to_string();
    let (rows, mut errors) = read_csv(input, &["country", "city", "pm25", "population"])?;
    let mut readings: Vec<(String, CityReading)> = Vec::new();
    for row in &rows {
        let f = &row.fields;
        let parsed = number(&f[2], "pm25").and_then(|m| {
            let p = count(&f[3], "population")?;
            CityReading::new(&f[1], m, p).map_err(|e| e.to_string())
        });
        match parsed {
            Ok(r) => readings.push((f[0].clone(), r)),
            Err(msg) => errors.push(row_error(row, &origin, msg)),
        }
    }
    let mut out = Vec::new();
    for (country, members) in group_by(&readings, |(c, _)| c.clone()) {
        let group: Vec<CityReading> = members.iter().map(|&i| readings[i].1.clone()).collect();
        out.push(CityRow {
            country,
            cities: group.len(),
            population: group.iter().map(|r| r.population).sum(),
            weighted_pm25: population_weighted(&group)?,
        });
    }
    Ok((CityBody { rows: out }, errors))
}

fn air_stress(input: &Path) -> Result<(AsiBody, Vec<RowError>), CliError> {
    let origin = input.display().to_string();
    let (rows, mut errors) = read_csv(input, &["period", "pollutant", "count", "reference"])?;
    let mut entries: Vec<(&Row, u64, u64)> = Vec::new();
    for row in &rows {
        let f = &row.fields;
        match count(&f[2], "count").and_then(|c| Ok((c, count(&f[3], "reference")?))) {
            Ok((c, r)) => entries.push((row, c, r)),
            Err(msg) => errors.push(row_error(row, &origin, msg)),
        }
    }
    let mut out: Vec<AsiRow> = Vec::new();
    for (period, members) in group_by(&entries, |(r, _, _)| r.fields[0].clone()) {
        let pollutants: Vec<String> = members.iter().map(|&i| entries[i].0.fields[1].clone()).collect();
        let counts: Vec<u64> = members.iter().map(|&i| entries[i].1).collect();
        let refs: Vec<u64> = members.iter().map(|&i| entries[i].2).collect();
        match asi(&counts, &refs) {
            Ok(v) => {
                let change = out
                    .last()
                    .filter(|prev| {
                        let mut a = prev.pollutants.clone();
                        let mut b = pollutants.clone();
                        a.sort();
                        b.sort();
                        a == b
                    })
                    .map(|prev| relative_change(prev.asi, v));
                out.push(AsiRow {
                    period,
                    pollutants,
                    asi: v,
                    change,
                });
            }
            Err(e) => errors.push(RowError {
                line: Some(entries[members[0]].0.line),
                context: format!("{origin}: period {period}"),
                message: e.to_string(),
            }),
        }
    }
    errors.sort_by_key(|e| e.line);
    Ok((AsiBody { rows: out }, errors))
}

fn flag(field: &str) -> Result<bool, String> {
    match field.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Ok(true),
        "0" | "false" | "no" | "n" => Ok(false),
        _ => Err(format!("exceeded: `{field}` is not a boolean")),
    }
}

fn exceedance(input: &Path, config: &RunConfig) -> Result<(ExceedanceBody, Vec<RowError>), CliError> {
    let origin = input.display().to_string();
    let (rows, mut errors) = read_csv(input, &["date", "exceeded"])?;
    let mut days = Vec::new();
    for row in &rows {
        let parsed = NaiveDate::parse_from_str(&row.fields[0], "%Y-%m-%d")
            .map_err(|e| format!("date `{}`: {e}", row.fields[0]))
            .and_then(|d| Ok((d, flag(&row.fields[1])?)));
        match parsed {
            Ok(d) => days.push(d),
            Err(msg) => errors.push(row_error(row, &origin, msg)),
        }
    }
    let mut body = ExceedanceBody {
        year_start: config.year_start.to_string(),
        threshold_count: config.threshold_count,
        years: Vec::new(),
    };
    if days.is_empty() {
        return Ok((body, errors));
    }
    let record = match DailyRecord::from_days(&days) {
        Ok(r) => r,
        Err(e) => {
            errors.push(RowError {
                line: None,
                context: origin,
                message: e.to_string(),
            });
            return Ok((body, errors));
        }
    };
    let mut previous: Option<u32> = None;
    for series in record.years(config.year_start) {
        let stats = exceedance_stats(&series, config.threshold_count)?;
        let change = match (previous, stats.days_elapsed) {
            (Some(then), Some(now)) => Some(relative_change(f64::from(then), f64::from(now))),
            _ => None,
        };
        previous = stats.days_elapsed;
        body.years.push(ExceedanceYear {
            stats,
            change_in_days_elapsed: change,
        });
    }
    if body.years.is_empty() {
        errors.push(RowError {
            line: None,
            context: origin,
            message: format!("no complete year starting {} in the series", config.year_start),
        });
    }
    Ok((body, errors))
}
