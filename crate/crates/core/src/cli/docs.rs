//! TOML documents: statement fixtures, breakpoint tables, tolerance tables.
//!
//! Schemas are versioned with `format_version`. Deserialization errors are
//! reported with the path of the offending field.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CliError, FORMAT_VERSION};
use crate::airquality::{BreakpointTable, Pollutant, PollutantBreakpoints, Segment, ToleranceTable};
use crate::scales::{Bindings, DerivedScale, ScaleBinding, ScaleType};
use crate::statements::{MeanKind, Quantity, Statement};

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_toml<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T, CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Schema {
        path: origin.to_string(),
        message: e.message().to_string(),
    })?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        CliError::Schema {
            path: if field == "." {
                origin.to_string()
            } else {
                format!("{origin}: {field}")
            },
            message: e.inner().message().to_string(),
        }
    })
}

fn check_version(version: u32, origin: &str) -> Result<(), CliError> {
    if version != FORMAT_VERSION {
        return Err(CliError::Schema {
            path: format!("{origin}: format_version"),
            message: format!("unsupported version {version}, expected {FORMAT_VERSION}"),
        });
    }
    Ok(())
}

fn schema(origin: &str, field: &str, message: impl Into<String>) -> CliError {
    CliError::Schema {
        path: format!("{origin}: {field}"),
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// Statement documents

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usefulness: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub legitimacy: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScaleDoc {
    id: String,
    #[serde(rename = "type")]
    scale_type: ScaleType,
    #[serde(default)]
    group: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorDoc {
    scale: String,
    #[serde(default = "one")]
    exponent: i32,
    value: f64,
}

fn one() -> i32 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuantityDoc {
    entity: String,
    #[serde(default)]
    scale: Option<String>,
    #[serde(default)]
    value: Option<f64>,
    #[serde(default)]
    monomial: Option<Vec<FactorDoc>>,
    #[serde(default)]
    sum: Option<Vec<FactorDoc>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
enum FormDoc {
    Order {
        lhs: QuantityDoc,
        rhs: QuantityDoc,
    },
    Ratio {
        lhs: QuantityDoc,
        c: f64,
        rhs: QuantityDoc,
    },
    Threshold {
        q: QuantityDoc,
        c: f64,
        unit_fixed: bool,
    },
    MeanOrder {
        group_a: Vec<QuantityDoc>,
        group_b: Vec<QuantityDoc>,
        mean: MeanKind,
    },
    MeanRatio {
        group_a: Vec<QuantityDoc>,
        c: f64,
        group_b: Vec<QuantityDoc>,
        mean: MeanKind,
    },
    PercentChange {
        now: QuantityDoc,
        factor: f64,
        then: QuantityDoc,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StatementFile {
    format_version: u32,
    name: String,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    annotations: Option<Annotations>,
    scales: Vec<ScaleDoc>,
    statement: FormDoc,
}

/// A parsed statement document.
#[derive(Debug, Clone, PartialEq)]
pub struct StatementDoc {
    pub name: String,
    pub description: Option<String>,
    pub annotations: Annotations,
    pub bindings: Bindings,
    pub statement: Statement,
}

type Factors = (Vec<(String, i32)>, Vec<f64>);

fn quantity(q: QuantityDoc, origin: &str, field: &str) -> Result<Quantity, CliError> {
    let factors = |fs: Vec<FactorDoc>, sub: &str| -> Result<Factors, CliError> {
        if fs.is_empty() {
            return Err(schema(origin, &format!("{field}.{sub}"), "needs at least one factor"));
        }
        Ok(fs.into_iter().map(|f| ((f.scale, f.exponent), f.value)).unzip())
    };
    match (q.scale, q.value, q.monomial, q.sum) {
        (Some(scale), Some(value), None, None) => Ok(Quantity::base(scale, q.entity, value)),
        (None, None, Some(m), None) => {
            let (fs, values) = factors(m, "monomial")?;
            Ok(Quantity::derived(
                DerivedScale::Monomial { factors: fs },
                q.entity,
                values,
            ))
        }
        (None, None, None, Some(s)) => {
            let (fs, values) = factors(s, "sum")?;
            if fs.iter().any(|(_, e)| *e != 1) {
                return Err(schema(origin, &format!("{field}.sum"), "sum terms take no exponent"));
            }
            let bases = fs.into_iter().map(|(id, _)| id).collect();
            Ok(Quantity::derived(DerivedScale::Sum { bases }, q.entity, values))
        }
        _ => Err(schema(
            origin,
            field,
            "give exactly one of `scale` + `value`, `monomial`, or `sum`",
        )),
    }
}

fn group(qs: Vec<QuantityDoc>, origin: &str, field: &str) -> Result<Vec<Quantity>, CliError> {
    qs.into_iter()
        .enumerate()
        .map(|(i, q)| quantity(q, origin, &format!("{field}[{i}]")))
        .collect()
}

pub fn parse_statement_doc(text: &str, origin: &str) -> Result<StatementDoc, CliError> {
    let file: StatementFile = parse_toml(text, origin)?;
    check_version(file.format_version, origin)?;
    let bindings = Bindings::new(file.scales.into_iter().map(|s| match s.group {
        Some(g) => ScaleBinding::grouped(s.id, s.scale_type, g),
        None => ScaleBinding::independent(s.id, s.scale_type),
    }))
    .map_err(|e| schema(origin, "scales", e.to_string()))?;
    let p = |f: &str| format!("statement.{f}");
    let statement = match file.statement {
        FormDoc::Order { lhs, rhs } => Statement::Order {
            lhs: quantity(lhs, origin, &p("lhs"))?,
            rhs: quantity(rhs, origin, &p("rhs"))?,
        },
        FormDoc::Ratio { lhs, c, rhs } => Statement::Ratio {
            lhs: quantity(lhs, origin, &p("lhs"))?,
            c,
            rhs: quantity(rhs, origin, &p("rhs"))?,
        },
        FormDoc::Threshold { q, c, unit_fixed } => Statement::Threshold {
            q: quantity(q, origin, &p("q"))?,
            c,
            unit_fixed,
        },
        FormDoc::MeanOrder { group_a, group_b, mean } => Statement::MeanOrder {
            group_a: group(group_a, origin, &p("group_a"))?,
            group_b: group(group_b, origin, &p("group_b"))?,
            mean_kind: mean,
        },
        FormDoc::MeanRatio {
            group_a,
            c,
            group_b,
            mean,
        } => Statement::MeanRatio {
            group_a: group(group_a, origin, &p("group_a"))?,
            c,
            group_b: group(group_b, origin, &p("group_b"))?,
            mean_kind: mean,
        },
        FormDoc::PercentChange { now, factor, then } => Statement::PercentChange {
            now: quantity(now, origin, &p("now"))?,
            factor,
            then: quantity(then, origin, &p("then"))?,
        },
    };
    // resolve every scale now so errors carry the document origin
    for q in statement.quantities() {
        for id in q.scale_ids() {
            if bindings.get(id).is_err() {
                return Err(schema(
                    origin,
                    "statement",
                    format!("scale `{id}` is not declared in [[scales]]"),
                ));
            }
        }
    }
    Ok(StatementDoc {
        name: file.name,
        description: file.description,
        annotations: file.annotations.unwrap_or_default(),
        bindings,
        statement,
    })
}

pub fn load_statement_doc(path: &Path) -> Result<StatementDoc, CliError> {
    parse_statement_doc(&read(path)?, &path.display().to_string())
}

// ---------------------------------------------------------------------------
// Tables

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BreakpointEntry {
    code: String,
    unit: String,
    #[serde(default)]
    averaging_period: Option<String>,
    segments: Vec<[f64; 4]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BreakpointFile {
    format_version: u32,
    name: String,
    pollutant: Vec<BreakpointEntry>,
}

pub fn parse_breakpoints(text: &str, origin: &str) -> Result<BreakpointTable, CliError> {
    let file: BreakpointFile = parse_toml(text, origin)?;
    check_version(file.format_version, origin)?;
    let mut pollutants = BTreeMap::new();
    for (i, e) in file.pollutant.into_iter().enumerate() {
        let field = format!("pollutant[{i}].code");
        let p: Pollutant = e
            .code
            .parse()
            .map_err(|err: crate::airquality::AirError| schema(origin, &field, err.to_string()))?;
        let bp = PollutantBreakpoints {
            unit: e.unit,
            averaging_period: e.averaging_period,
            segments: e.segments.into_iter().map(|[a, b, c, d]| Segment(a, b, c, d)).collect(),
        };
        if pollutants.insert(p, bp).is_some() {
            return Err(schema(origin, &field, format!("{p} listed twice")));
        }
    }
    BreakpointTable::new(file.name, pollutants).map_err(|e| schema(origin, "pollutant", e.to_string()))
}

pub fn load_breakpoints(path: &Path) -> Result<BreakpointTable, CliError> {
    parse_breakpoints(&read(path)?, &path.display().to_string())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToleranceFile {
    format_version: u32,
    name: String,
    unit: String,
    tolerances: BTreeMap<String, f64>,
}

pub fn parse_tolerances(text: &str, origin: &str) -> Result<ToleranceTable, CliError> {
    let file: ToleranceFile = parse_toml(text, origin)?;
    check_version(file.format_version, origin)?;
    ToleranceTable::new(file.name, file.unit, file.tolerances).map_err(|e| schema(origin, "tolerances", e.to_string()))
}

pub fn load_tolerances(path: &Path) -> Result<ToleranceTable, CliError> {
    parse_tolerances(&read(path)?, &path.display().to_string())
}
