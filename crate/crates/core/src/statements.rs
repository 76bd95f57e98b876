//! Statements over scaled quantities and their meaningfulness verdicts.
//!
//! A statement is meaningful when its truth value survives every admissible
//! transformation of the scales it mentions, applied independently per
//! independence group. Two engines produce verdicts:
//!
//! * [`classify_symbolic`] consults a fixed rule table keyed on statement form,
//!   scale types and independence groups. It is the only source of
//!   [`Verdict::Meaningful`].
//! * [`falsify`] samples admissible transformations and looks for one that
//!   flips the statement's truth. A hit is a replayable [`Witness`]; a miss is
//!   [`Verdict::Undetermined`], never a proof.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scales::{sample_transform, Bindings, DerivedScale, ScaleError, ScaleId, ScaleType, Transform};

type TransformMap = BTreeMap<ScaleId, Transform>;

pub const DEFAULT_REL_TOL: f64 = 1e-9;
pub const DEFAULT_TRIALS: u64 = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatementError {
    #[error(transparent)]
    Binding(#[from] ScaleError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid statement: {0}")]
    Invalid(String),
    #[error("engines disagree: rule `{rule}` says meaningful but trial {trial} flips the statement")]
    Contradiction { rule: Rule, trial: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuantityKind {
    Base { scale: ScaleId, value: f64 },
    Derived { scale: DerivedScale, values: Vec<f64> },
}

/// A measured value of some entity on a base or derived scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub entity: String,
    #[serde(flatten)]
    pub kind: QuantityKind,
}

impl Quantity {
    pub fn base(scale: impl Into<ScaleId>, entity: impl Into<String>, value: f64) -> Self {
        Self {
            entity: entity.into(),
            kind: QuantityKind::Base {
                scale: scale.into(),
                value,
            },
        }
    }

    pub fn derived(scale: DerivedScale, entity: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            entity: entity.into(),
            kind: QuantityKind::Derived { scale, values },
        }
    }

    pub fn scale_ids(&self) -> Vec<&ScaleId> {
        match &self.kind {
            QuantityKind::Base { scale, .. } => vec![scale],
            QuantityKind::Derived { scale, .. } => scale.base_ids(),
        }
    }

    fn validate(&self) -> Result<(), StatementError> {
        match &self.kind {
            QuantityKind::Base { value, .. } if !value.is_finite() => Err(StatementError::Invalid(format!(
                "non-finite value for `{}`",
                self.entity
            ))),
            QuantityKind::Derived { scale, values } => {
                if values.len() != scale.arity() {
                    return Err(StatementError::Invalid(format!(
                        "derived quantity for `{}` has {} values for {} base scales",
                        self.entity,
                        values.len(),
                        scale.arity()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(StatementError::Invalid(format!(
                        "non-finite value for `{}`",
                        self.entity
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Value after transforming each base value, plus the magnitude used to
    /// size the comparison tolerance.
    fn eval(&self, tf: &TransformMap) -> (f64, f64) {
        let map = |id: &str, v: f64| tf.get(id).map_or(v, |t| t.apply(v));
        match &self.kind {
            QuantityKind::Base { scale, value } => {
                let v = map(scale, *value);
                (v, v.abs())
            }
            QuantityKind::Derived { scale, values } => {
                let vs: Vec<f64> = scale
                    .base_ids()
                    .into_iter()
                    .zip(values)
                    .map(|(id, v)| map(id, *v))
                    .collect();
                let v = scale.combine(&vs);
                let mag = match scale {
                    DerivedScale::Monomial { .. } => v.abs(),
                    DerivedScale::Sum { .. } => vs.iter().fold(0.0f64, |m, x| m.max(x.abs())),
                };
                (v, mag)
            }
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            QuantityKind::Base { scale, value } => write!(f, "{scale}({})={value}", self.entity),
            QuantityKind::Derived { scale, values } => {
                match scale {
                    DerivedScale::Monomial { factors } => {
                        for (i, (id, e)) in factors.iter().enumerate() {
                            if i > 0 {
                                f.write_str("*")?;
                            }
                            write!(f, "{id}^{e}")?;
                        }
                    }
                    DerivedScale::Sum { bases } => f.write_str(&bases.join("+"))?,
                }
                write!(f, "({})=[", self.entity)?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanKind {
    Arithmetic,
    Geometric,
    Median,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Statement {
    /// `lhs > rhs`
    Order { lhs: Quantity, rhs: Quantity },
    /// `lhs = c·rhs`
    Ratio { lhs: Quantity, c: f64, rhs: Quantity },
    /// `q ≥ c`; `unit_fixed` records that the units of `q` are specified.
    Threshold { q: Quantity, c: f64, unit_fixed: bool },
    /// `mean(group_a) > mean(group_b)`
    MeanOrder {
        group_a: Vec<Quantity>,
        group_b: Vec<Quantity>,
        mean_kind: MeanKind,
    },
    /// `mean(group_a) = c·mean(group_b)`
    MeanRatio {
        group_a: Vec<Quantity>,
        c: f64,
        group_b: Vec<Quantity>,
        mean_kind: MeanKind,
    },
    /// `now = factor·then`
    PercentChange { now: Quantity, factor: f64, then: Quantity },
}

impl Statement {
    pub fn quantities(&self) -> Vec<&Quantity> {
        match self {
            Statement::Order { lhs, rhs }
            | Statement::Ratio { lhs, rhs, .. }
            | Statement::PercentChange {
                now: lhs, then: rhs, ..
            } => vec![lhs, rhs],
            Statement::Threshold { q, .. } => vec![q],
            Statement::MeanOrder { group_a, group_b, .. } | Statement::MeanRatio { group_a, group_b, .. } => {
                group_a.iter().chain(group_b).collect()
            }
        }
    }

    /// Scales whose transformations can affect this statement.
    pub fn transformable_scales(&self) -> BTreeSet<&ScaleId> {
        match self {
            Statement::Threshold { unit_fixed: true, .. } => BTreeSet::new(),
            _ => self.quantities().into_iter().flat_map(|q| q.scale_ids()).collect(),
        }
    }

    fn validate(&self, bindings: &Bindings) -> Result<(), StatementError> {
        for q in self.quantities() {
            q.validate()?;
            for id in q.scale_ids() {
                bindings.get(id)?;
            }
        }
        let positive = |name: &str, c: f64| {
            if c.is_finite() && c > 0.0 {
                Ok(())
            } else {
                Err(StatementError::Invalid(format!(
                    "{name} must be a positive real, got {c}"
                )))
            }
        };
        match self {
            Statement::Ratio { c, .. } | Statement::MeanRatio { c, .. } => positive("c", *c)?,
            Statement::PercentChange { factor, .. } => positive("factor", *factor)?,
            Statement::Threshold { c, .. } if !c.is_finite() => {
                return Err(StatementError::Invalid("threshold must be finite".into()))
            }
            _ => {}
        }
        if let Statement::MeanOrder { group_a, group_b, .. } | Statement::MeanRatio { group_a, group_b, .. } = self {
            if group_a.is_empty() || group_b.is_empty() {
                return Err(StatementError::Invalid("mean comparison needs non-empty groups".into()));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let group = |g: &[Quantity]| g.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(", ");
        let kind = |k: &MeanKind| match k {
            MeanKind::Arithmetic => "amean",
            MeanKind::Geometric => "gmean",
            MeanKind::Median => "median",
        };
        match self {
            Statement::Order { lhs, rhs } => write!(f, "{lhs} > {rhs}"),
            Statement::Ratio { lhs, c, rhs } => write!(f, "{lhs} = {c} * {rhs}"),
            Statement::Threshold { q, c, unit_fixed } => {
                write!(f, "{q} >= {c}")?;
                if !unit_fixed {
                    f.write_str(" (units unspecified)")?;
                }
                Ok(())
            }
            Statement::MeanOrder {
                group_a,
                group_b,
                mean_kind,
            } => write!(
                f,
                "{k}{{{}}} > {k}{{{}}}",
                group(group_a),
                group(group_b),
                k = kind(mean_kind)
            ),
            Statement::MeanRatio {
                group_a,
                c,
                group_b,
                mean_kind,
            } => write!(
                f,
                "{k}{{{}}} = {c} * {k}{{{}}}",
                group(group_a),
                group(group_b),
                k = kind(mean_kind)
            ),
            Statement::PercentChange { now, factor, then } => write!(f, "{now} = {factor} * {then}"),
        }
    }
}

fn mean_of(values: &[(f64, f64)], kind: MeanKind) -> Result<(f64, f64), StatementError> {
    let n = values.len() as f64;
    match kind {
        MeanKind::Arithmetic => {
            let sum: f64 = values.iter().map(|(v, _)| v).sum();
            let mag = values.iter().fold(0.0f64, |m, (_, g)| m.max(*g));
            Ok((sum / n, mag))
        }
        MeanKind::Geometric => {
            if let Some((v, _)) = values.iter().find(|(v, _)| *v <= 0.0) {
                return Err(StatementError::Domain(format!(
                    "geometric mean over non-positive value {v}"
                )));
            }
            let g = (values.iter().map(|(v, _)| v.ln()).sum::<f64>() / n).exp();
            Ok((g, g))
        }
        MeanKind::Median => {
            let mut sorted = values.to_vec();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let k = sorted.len();
            if k % 2 == 1 {
                Ok(sorted[k / 2])
            } else {
                let (a, b) = (sorted[k / 2 - 1], sorted[k / 2]);
                Ok(((a.0 + b.0) / 2.0, a.1.max(b.1)))
            }
        }
    }
}

fn eval_group(group: &[Quantity], kind: MeanKind, tf: &TransformMap) -> Result<(f64, f64), StatementError> {
    let values: Vec<(f64, f64)> = group.iter().map(|q| q.eval(tf)).collect();
    mean_of(&values, kind)
}

fn holds_equal(lhs: (f64, f64), c: f64, rhs: (f64, f64), rel_tol: f64) -> bool {
    let scaled = c * rhs.0;
    (lhs.0 - scaled).abs() <= rel_tol * lhs.1.max(c * rhs.1).max(lhs.0.abs()).max(scaled.abs())
}

fn holds_greater(lhs: (f64, f64), rhs: (f64, f64), rel_tol: f64) -> bool {
    lhs.0 - rhs.0 > rel_tol * lhs.1.max(rhs.1).max(lhs.0.abs()).max(rhs.0.abs())
}

fn evaluate_inner(s: &Statement, rel_tol: f64, tf: &TransformMap) -> Result<bool, StatementError> {
    Ok(match s {
        Statement::Order { lhs, rhs } => holds_greater(lhs.eval(tf), rhs.eval(tf), rel_tol),
        Statement::Ratio { lhs, c, rhs } => holds_equal(lhs.eval(tf), *c, rhs.eval(tf), rel_tol),
        Statement::PercentChange { now, factor, then } => holds_equal(now.eval(tf), *factor, then.eval(tf), rel_tol),
        Statement::Threshold { q, c, unit_fixed } => {
            let (v, mag) = if *unit_fixed {
                q.eval(&TransformMap::new())
            } else {
                q.eval(tf)
            };
            v >= *c - rel_tol * mag.max(c.abs())
        }
        Statement::MeanOrder {
            group_a,
            group_b,
            mean_kind,
        } => holds_greater(
            eval_group(group_a, *mean_kind, tf)?,
            eval_group(group_b, *mean_kind, tf)?,
            rel_tol,
        ),
        Statement::MeanRatio {
            group_a,
            c,
            group_b,
            mean_kind,
        } => holds_equal(
            eval_group(group_a, *mean_kind, tf)?,
            *c,
            eval_group(group_b, *mean_kind, tf)?,
            rel_tol,
        ),
    })
}

/// Truth value of `s` as stated.
///
/// Equality forms hold within `rel_tol` of the larger side; order forms are
/// strict and require the gap to exceed the same band.
pub fn evaluate(s: &Statement, bindings: &Bindings, rel_tol: f64) -> Result<bool, StatementError> {
    evaluate_transformed(s, bindings, rel_tol, &BTreeMap::new())
}

/// Truth value of `s` after applying `transforms` (keyed by scale id; missing
/// scales are left unchanged).
pub fn evaluate_transformed(
    s: &Statement,
    bindings: &Bindings,
    rel_tol: f64,
    transforms: &BTreeMap<ScaleId, Transform>,
) -> Result<bool, StatementError> {
    if !(rel_tol > 0.0 && rel_tol.is_finite()) {
        return Err(StatementError::Invalid(format!(
            "rel_tol must be positive, got {rel_tol}"
        )));
    }
    s.validate(bindings)?;
    evaluate_inner(s, rel_tol, transforms)
}

/// Named entries of the symbolic rule table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    AbsoluteScale,
    OrderSharedScale,
    EqualityInjective,
    ProportionalScaling,
    MonomialHomogeneity,
    RatioOnNonRatioScale,
    UnitsSpecified,
    ThresholdWithoutUnits,
    ArithmeticMeanSharedUnit,
    ArithmeticMeanInterval,
    ArithmeticMeanOrdinal,
    ArithmeticMeanIndependentUnits,
    GeometricMeanBalancedUnits,
    MedianSharedScale,
    SumOfIndependentUnits,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::AbsoluteScale => "absolute_scale",
            Rule::OrderSharedScale => "order_shared_scale",
            Rule::EqualityInjective => "equality_injective",
            Rule::ProportionalScaling => "proportional_scaling",
            Rule::MonomialHomogeneity => "monomial_homogeneity",
            Rule::RatioOnNonRatioScale => "ratio_on_non_ratio_scale",
            Rule::UnitsSpecified => "units_specified",
            Rule::ThresholdWithoutUnits => "threshold_without_units",
            Rule::ArithmeticMeanSharedUnit => "arithmetic_mean_shared_unit",
            Rule::ArithmeticMeanInterval => "arithmetic_mean_interval",
            Rule::ArithmeticMeanOrdinal => "arithmetic_mean_ordinal",
            Rule::ArithmeticMeanIndependentUnits => "arithmetic_mean_independent_units",
            Rule::GeometricMeanBalancedUnits => "geometric_mean_balanced_units",
            Rule::MedianSharedScale => "median_shared_scale",
            Rule::SumOfIndependentUnits => "sum_of_independent_units",
        }
    }

    pub fn explanation(self) -> &'static str {
        match self {
            Rule::AbsoluteScale => "absolute scales admit only the identity",
            Rule::OrderSharedScale => "both sides pass through the same strictly increasing map",
            Rule::EqualityInjective => "equality of values on one scale survives any injective map",
            Rule::ProportionalScaling => "both sides are multiplied by the same positive constant",
            Rule::MonomialHomogeneity => {
                "rescaling ratio-scale bases multiplies every monomial value by the same positive constant"
            }
            Rule::RatioOnNonRatioScale => "a change of zero point alters ratios",
            Rule::UnitsSpecified => "the threshold is stated together with its units",
            Rule::ThresholdWithoutUnits => "a fixed threshold depends on the choice of unit",
            Rule::ArithmeticMeanSharedUnit => "a common positive factor scales both means",
            Rule::ArithmeticMeanInterval => "arithmetic means commute with a shared positive affine map",
            Rule::ArithmeticMeanOrdinal => "monotone maps do not preserve comparisons of arithmetic means",
            Rule::ArithmeticMeanIndependentUnits => "independent unit changes reweight the terms of each mean",
            Rule::GeometricMeanBalancedUnits => "each unit factor enters both geometric means with the same power",
            Rule::MedianSharedScale => "the median commutes with the shared increasing map",
            Rule::SumOfIndependentUnits => "adding values with independent units is unit dependent",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Concrete admissible transformations that flip a statement's truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub transforms: BTreeMap<ScaleId, Transform>,
    pub truth_before: bool,
    pub truth_after: bool,
    /// Falsifier trial that produced the witness, if any.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trial: Option<u64>,
}

impl Witness {
    /// Re-evaluates `s` under the recorded transforms.
    pub fn replay(&self, s: &Statement, bindings: &Bindings, rel_tol: f64) -> Result<bool, StatementError> {
        evaluate_transformed(s, bindings, rel_tol, &self.transforms)
    }

    /// True when every transform is admissible for its scale and replay
    /// reproduces the recorded truth values.
    pub fn verify(&self, s: &Statement, bindings: &Bindings, rel_tol: f64) -> Result<bool, StatementError> {
        for (id, t) in &self.transforms {
            if !t.is_admissible(bindings.get(id)?.scale_type) {
                return Ok(false);
            }
        }
        Ok(evaluate(s, bindings, rel_tol)? == self.truth_before
            && self.replay(s, bindings, rel_tol)? == self.truth_after
            && self.truth_before != self.truth_after)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Verdict {
    Meaningful {
        rule: Rule,
    },
    /// `rule` is set when the rule table decided; `witness` when a concrete
    /// flip was found for this instance.
    Meaningless {
        #[serde(skip_serializing_if = "Option::is_none", default)]
        rule: Option<Rule>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        witness: Option<Witness>,
    },
    Undetermined {
        trials: u64,
    },
}

impl Verdict {
    pub fn is_meaningful(&self) -> bool {
        matches!(self, Verdict::Meaningful { .. })
    }

    pub fn is_meaningless(&self) -> bool {
        matches!(self, Verdict::Meaningless { .. })
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Meaningless { witness, .. } => witness.as_ref(),
            _ => None,
        }
    }

    pub fn rule(&self) -> Option<Rule> {
        match self {
            Verdict::Meaningful { rule } => Some(*rule),
            Verdict::Meaningless { rule, .. } => *rule,
            Verdict::Undetermined { .. } => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Meaningful { .. } => "meaningful",
            Verdict::Meaningless { .. } => "meaningless",
            Verdict::Undetermined { .. } => "undetermined",
        }
    }
}

// How a quantity responds to admissible transformations.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Shape {
    /// Multiplied by Π α_g^k_g over ratio groups (empty map: invariant).
    Homogeneous(BTreeMap<String, i64>),
    /// Base value on a single interval or ordinal group.
    Plain {
        group: String,
        scale_type: ScaleType,
    },
    /// Sum over bases; records distinct ratio groups among them.
    Sum {
        ratio_groups: usize,
    },
    Other,
}

fn shape_of(q: &Quantity, bindings: &Bindings) -> Result<Shape, StatementError> {
    Ok(match &q.kind {
        QuantityKind::Base { scale, .. } => {
            let b = bindings.get(scale)?;
            match b.scale_type {
                ScaleType::Absolute => Shape::Homogeneous(BTreeMap::new()),
                ScaleType::Ratio => Shape::Homogeneous(BTreeMap::from([(b.independence_group.clone(), 1)])),
                t => Shape::Plain {
                    group: b.independence_group.clone(),
                    scale_type: t,
                },
            }
        }
        QuantityKind::Derived {
            scale: DerivedScale::Monomial { factors },
            ..
        } => {
            let mut k: BTreeMap<String, i64> = BTreeMap::new();
            for (id, e) in factors {
                let b = bindings.get(id)?;
                match b.scale_type {
                    ScaleType::Absolute => {}
                    ScaleType::Ratio => *k.entry(b.independence_group.clone()).or_default() += i64::from(*e),
                    _ => return Ok(Shape::Other),
                }
            }
            k.retain(|_, e| *e != 0);
            Shape::Homogeneous(k)
        }
        QuantityKind::Derived {
            scale: DerivedScale::Sum { bases },
            ..
        } => {
            let mut groups = BTreeSet::new();
            for id in bases {
                let b = bindings.get(id)?;
                if b.scale_type == ScaleType::Ratio {
                    groups.insert(b.independence_group.clone());
                }
            }
            Shape::Sum {
                ratio_groups: groups.len(),
            }
        }
    })
}

fn all_absolute(qs: &[&Quantity], bindings: &Bindings) -> Result<bool, StatementError> {
    for q in qs {
        for id in q.scale_ids() {
            if bindings.get(id)?.scale_type != ScaleType::Absolute {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn common_homogeneous(shapes: &[Shape]) -> bool {
    match shapes.first() {
        Some(first @ Shape::Homogeneous(_)) => shapes.iter().all(|s| s == first),
        _ => false,
    }
}

/// Single interval/ordinal group shared by every shape, if any.
fn common_plain(shapes: &[Shape]) -> Option<ScaleType> {
    match shapes.first() {
        Some(Shape::Plain { group, scale_type }) => shapes
            .iter()
            .all(|s| matches!(s, Shape::Plain { group: g, .. } if g == group))
            .then_some(*scale_type),
        _ => None,
    }
}

fn homogeneous_rule(shapes: &[Shape]) -> Rule {
    let derived = shapes
        .iter()
        .any(|s| matches!(s, Shape::Homogeneous(k) if k.values().any(|e| *e != 1) || k.len() > 1));
    if derived {
        Rule::MonomialHomogeneity
    } else {
        Rule::ProportionalScaling
    }
}

fn any_sum_of_independent(shapes: &[Shape]) -> bool {
    shapes
        .iter()
        .any(|s| matches!(s, Shape::Sum { ratio_groups } if *ratio_groups >= 2))
}

/// Group exponents of a geometric mean, scaled by the other side's size so
/// the two sides compare as integers.
fn balanced_geometric(a: &[Shape], b: &[Shape]) -> bool {
    let total = |side: &[Shape], scale: i64| -> Option<BTreeMap<String, i64>> {
        let mut acc: BTreeMap<String, i64> = BTreeMap::new();
        for s in side {
            let Shape::Homogeneous(k) = s else { return None };
            for (g, e) in k {
                *acc.entry(g.clone()).or_default() += e * scale;
            }
        }
        acc.retain(|_, e| *e != 0);
        Some(acc)
    };
    match (total(a, b.len() as i64), total(b, a.len() as i64)) {
        (Some(x), Some(y)) => x == y,
        _ => false,
    }
}

/// Rule-table verdict, or `None` when no rule applies.
pub fn classify_symbolic(s: &Statement, bindings: &Bindings) -> Result<Option<Verdict>, StatementError> {
    s.validate(bindings)?;
    let meaningful = |rule| Ok(Some(Verdict::Meaningful { rule }));
    let meaningless = |rule| {
        Ok(Some(Verdict::Meaningless {
            rule: Some(rule),
            witness: None,
        }))
    };

    if let Statement::Threshold { unit_fixed: true, .. } = s {
        return meaningful(Rule::UnitsSpecified);
    }
    if all_absolute(&s.quantities(), bindings)? {
        return meaningful(Rule::AbsoluteScale);
    }

    match s {
        Statement::Order { lhs, rhs } => {
            let shapes = [shape_of(lhs, bindings)?, shape_of(rhs, bindings)?];
            order_rule(&shapes, meaningful, meaningless)
        }
        Statement::Ratio { lhs, c, rhs }
        | Statement::PercentChange {
            now: lhs,
            factor: c,
            then: rhs,
        } => {
            let shapes = [shape_of(lhs, bindings)?, shape_of(rhs, bindings)?];
            if common_homogeneous(&shapes) {
                return meaningful(homogeneous_rule(&shapes));
            }
            if common_plain(&shapes).is_some() {
                return if *c == 1.0 {
                    meaningful(Rule::EqualityInjective)
                } else {
                    meaningless(Rule::RatioOnNonRatioScale)
                };
            }
            if any_sum_of_independent(&shapes) {
                return meaningless(Rule::SumOfIndependentUnits);
            }
            Ok(None)
        }
        // unit_fixed and absolute cases returned above
        Statement::Threshold { .. } => meaningless(Rule::ThresholdWithoutUnits),
        Statement::MeanOrder {
            group_a,
            group_b,
            mean_kind,
        } => {
            let a = group_a
                .iter()
                .map(|q| shape_of(q, bindings))
                .collect::<Result<Vec<_>, _>>()?;
            let b = group_b
                .iter()
                .map(|q| shape_of(q, bindings))
                .collect::<Result<Vec<_>, _>>()?;
            if a.len() == 1 && b.len() == 1 && !(matches!(mean_kind, MeanKind::Geometric)) {
                // a single value is its own arithmetic mean and median
                return order_rule(&[a[0].clone(), b[0].clone()], meaningful, meaningless);
            }
            let all: Vec<Shape> = a.iter().chain(&b).cloned().collect();
            mean_rule(&a, &b, &all, *mean_kind, None, meaningful, meaningless)
        }
        Statement::MeanRatio {
            group_a,
            c,
            group_b,
            mean_kind,
        } => {
            let a = group_a
                .iter()
                .map(|q| shape_of(q, bindings))
                .collect::<Result<Vec<_>, _>>()?;
            let b = group_b
                .iter()
                .map(|q| shape_of(q, bindings))
                .collect::<Result<Vec<_>, _>>()?;
            let all: Vec<Shape> = a.iter().chain(&b).cloned().collect();
            mean_rule(&a, &b, &all, *mean_kind, Some(*c), meaningful, meaningless)
        }
    }
}

type RuleOut = Result<Option<Verdict>, StatementError>;

fn order_rule(
    shapes: &[Shape],
    meaningful: impl Fn(Rule) -> RuleOut,
    meaningless: impl Fn(Rule) -> RuleOut,
) -> RuleOut {
    if common_homogeneous(shapes) {
        return match homogeneous_rule(shapes) {
            Rule::ProportionalScaling => meaningful(Rule::OrderSharedScale),
            r => meaningful(r),
        };
    }
    if common_plain(shapes).is_some() {
        return meaningful(Rule::OrderSharedScale);
    }
    if any_sum_of_independent(shapes) {
        return meaningless(Rule::SumOfIndependentUnits);
    }
    Ok(None)
}

fn mean_rule(
    a: &[Shape],
    b: &[Shape],
    all: &[Shape],
    kind: MeanKind,
    ratio_c: Option<f64>,
    meaningful: impl Fn(Rule) -> RuleOut,
    meaningless: impl Fn(Rule) -> RuleOut,
) -> RuleOut {
    let homogeneous = common_homogeneous(all);
    let plain = common_plain(all);
    let has_ordinal = all.iter().any(|s| {
        matches!(
            s,
            Shape::Plain {
                scale_type: ScaleType::Ordinal,
                ..
            }
        )
    });
    match kind {
        MeanKind::Arithmetic => {
            if homogeneous {
                return match homogeneous_rule(all) {
                    Rule::ProportionalScaling => meaningful(Rule::ArithmeticMeanSharedUnit),
                    r => meaningful(r),
                };
            }
            if plain == Some(ScaleType::Interval) {
                return match ratio_c {
                    None | Some(1.0) => meaningful(Rule::ArithmeticMeanInterval),
                    Some(_) => meaningless(Rule::RatioOnNonRatioScale),
                };
            }
            if has_ordinal {
                return meaningless(Rule::ArithmeticMeanOrdinal);
            }
            let ratio_groups: BTreeSet<&String> = all
                .iter()
                .filter_map(|s| match s {
                    Shape::Homogeneous(k) => Some(k.keys()),
                    _ => None,
                })
                .flatten()
                .collect();
            let only_base_ratio = all
                .iter()
                .all(|s| matches!(s, Shape::Homogeneous(k) if k.len() <= 1 && k.values().all(|e| *e == 1)));
            if only_base_ratio && ratio_groups.len() >= 2 {
                return meaningless(Rule::ArithmeticMeanIndependentUnits);
            }
            if any_sum_of_independent(all) {
                return meaningless(Rule::SumOfIndependentUnits);
            }
            if plain.is_none()
                && all.iter().any(|s| {
                    matches!(
                        s,
                        Shape::Plain {
                            scale_type: ScaleType::Interval,
                            ..
                        }
                    )
                })
                && ratio_c.is_some()
            {
                return meaningless(Rule::RatioOnNonRatioScale);
            }
            Ok(None)
        }
        MeanKind::Geometric => {
            if balanced_geometric(a, b) {
                return meaningful(Rule::GeometricMeanBalancedUnits);
            }
            Ok(None)
        }
        MeanKind::Median => {
            if homogeneous {
                return meaningful(Rule::MedianSharedScale);
            }
            match plain {
                Some(t) => {
                    let odd = a.len() % 2 == 1 && b.len() % 2 == 1;
                    let equality = ratio_c.is_none_or(|c| c == 1.0);
                    match t {
                        ScaleType::Interval if equality => meaningful(Rule::MedianSharedScale),
                        ScaleType::Ordinal if equality && odd => meaningful(Rule::MedianSharedScale),
                        _ if !equality => meaningless(Rule::RatioOnNonRatioScale),
                        _ => Ok(None),
                    }
                }
                None => Ok(None),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckOptions {
    pub trials: u64,
    pub seed: u64,
    pub rel_tol: f64,
    /// Also run the falsifier when a rule claims meaningfulness and fail on
    /// any witness.
    pub validate: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            trials: DEFAULT_TRIALS,
            seed: 0,
            rel_tol: DEFAULT_REL_TOL,
            validate: false,
        }
    }
}

// FNV-1a, so per-group streams do not depend on unrelated scales.
fn group_seed(seed: u64, group: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in group.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    seed ^ h
}

/// Transforms drawn for one trial, keyed by scale id.
fn trial_transforms(
    s: &Statement,
    bindings: &Bindings,
    seed: u64,
    trial: u64,
) -> Result<BTreeMap<ScaleId, Transform>, StatementError> {
    let scales = s.transformable_scales();
    let mut by_group: BTreeMap<String, (ScaleType, Vec<&ScaleId>)> = BTreeMap::new();
    for id in &scales {
        let b = bindings.get(id)?;
        by_group
            .entry(b.independence_group.clone())
            .or_insert_with(|| (b.scale_type, Vec::new()))
            .1
            .push(id);
    }
    let mut out = BTreeMap::new();
    for (group, (scale_type, ids)) in by_group {
        let mut t = sample_transform(scale_type, group_seed(seed, &group), trial);
        if let Transform::Monotone { map } = &t {
            let (lo, hi) = group_span(s, &ids);
            let width = if hi > lo { hi - lo } else { lo.abs().max(1.0) };
            t = Transform::Monotone {
                map: map.rescaled(lo, width),
            };
        }
        for id in ids {
            out.insert(id.clone(), t.clone());
        }
    }
    Ok(out)
}

fn group_span(s: &Statement, ids: &[&ScaleId]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for q in s.quantities() {
        let pairs: Vec<(&ScaleId, f64)> = match &q.kind {
            QuantityKind::Base { scale, value } => vec![(scale, *value)],
            QuantityKind::Derived { scale, values } => {
                scale.base_ids().into_iter().zip(values.iter().copied()).collect()
            }
        };
        for (id, v) in pairs {
            if ids.contains(&id) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    (lo, hi)
}

/// Randomized search for an admissible transformation that flips `s`.
///
/// Each trial samples one transform per independence group from streams that
/// depend only on `(seed, group, trial)`. A flip counts only if it persists at
/// ten times and a tenth of `rel_tol`.
pub fn falsify(
    s: &Statement,
    bindings: &Bindings,
    trials: u64,
    seed: u64,
    rel_tol: f64,
) -> Result<Verdict, StatementError> {
    if trials == 0 {
        return Err(StatementError::Invalid("trials must be at least 1".into()));
    }
    let before = evaluate(s, bindings, rel_tol)?;
    let tols = [rel_tol * 0.1, rel_tol * 10.0];
    let none = BTreeMap::new();
    for tol in tols {
        if evaluate_transformed(s, bindings, tol, &none)? != before {
            // borderline instance; no flip can be certified
            return Ok(Verdict::Undetermined { trials: 0 });
        }
    }
    if s.transformable_scales().is_empty() {
        return Ok(Verdict::Undetermined { trials });
    }
    for trial in 0..trials {
        let transforms = trial_transforms(s, bindings, seed, trial)?;
        let after = match evaluate_transformed(s, bindings, rel_tol, &transforms) {
            Ok(v) => v,
            // a transform can push values out of a mean's domain; not a flip
            Err(StatementError::Domain(_)) => continue,
            Err(e) => return Err(e),
        };
        if after == before {
            continue;
        }
        let stable = tols
            .iter()
            .all(|&tol| evaluate_transformed(s, bindings, tol, &transforms).ok() == Some(after));
        if stable {
            return Ok(Verdict::Meaningless {
                rule: None,
                witness: Some(Witness {
                    transforms,
                    truth_before: before,
                    truth_after: after,
                    trial: Some(trial),
                }),
            });
        }
    }
    Ok(Verdict::Undetermined { trials })
}

/// Symbolic verdict when a rule applies, otherwise the falsifier's.
///
/// Rule-based "meaningless" verdicts are paired with a falsifier witness when
/// one exists for this instance.
pub fn check(s: &Statement, bindings: &Bindings, opts: &CheckOptions) -> Result<Verdict, StatementError> {
    match classify_symbolic(s, bindings)? {
        Some(Verdict::Meaningful { rule }) => {
            if opts.validate {
                if let Verdict::Meaningless { witness: Some(w), .. } =
                    falsify(s, bindings, opts.trials, opts.seed, opts.rel_tol)?
                {
                    return Err(StatementError::Contradiction {
                        rule,
                        trial: w.trial.unwrap_or(0),
                    });
                }
            }
            Ok(Verdict::Meaningful { rule })
        }
        Some(Verdict::Meaningless { rule, .. }) => {
            let witness = match falsify(s, bindings, opts.trials, opts.seed, opts.rel_tol)? {
                Verdict::Meaningless { witness, .. } => witness,
                _ => None,
            };
            Ok(Verdict::Meaningless { rule, witness })
        }
        Some(v @ Verdict::Undetermined { .. }) => Ok(v),
        None => falsify(s, bindings, opts.trials, opts.seed, opts.rel_tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scales::ScaleBinding;

    fn interval(id: &str) -> Bindings {
        Bindings::new([ScaleBinding::independent(id, ScaleType::Interval)]).unwrap()
    }

    fn ordinal_means(kind: MeanKind) -> (Statement, Bindings) {
        let b = Bindings::new([ScaleBinding::independent("rank", ScaleType::Ordinal)]).unwrap();
        let s = Statement::MeanOrder {
            group_a: vec![Quantity::base("rank", "a1", 1.0), Quantity::base("rank", "a2", 4.0)],
            group_b: vec![Quantity::base("rank", "b1", 2.0), Quantity::base("rank", "b2", 2.0)],
            mean_kind: kind,
        };
        (s, b)
    }

    #[test]
    fn evaluate_examples() {
        let b = interval("temp_f");
        let s = Statement::Ratio {
            lhs: Quantity::base("temp_f", "a", 80.0),
            c: 2.0,
            rhs: Quantity::base("temp_f", "b", 40.0),
        };
        assert!(evaluate(&s, &b, DEFAULT_REL_TOL).unwrap());

        let q = Quantity::base("temp_f", "a", 80.0);
        let irreflexive = Statement::Order { lhs: q.clone(), rhs: q };
        assert!(!evaluate(&irreflexive, &b, DEFAULT_REL_TOL).unwrap());

        let bmi = Bindings::new([ScaleBinding::independent("bmi", ScaleType::Ratio)]).unwrap();
        let pc = Statement::PercentChange {
            now: Quantity::base("bmi", "x@t", 36.0),
            factor: 1.2,
            then: Quantity::base("bmi", "x@t-1", 30.0),
        };
        assert!(evaluate(&pc, &bmi, DEFAULT_REL_TOL).unwrap());
    }

    #[test]
    fn evaluate_errors() {
        let b = interval("temp_f");
        let s = Statement::Order {
            lhs: Quantity::base("temp_c", "a", 1.0),
            rhs: Quantity::base("temp_f", "b", 1.0),
        };
        assert!(matches!(evaluate(&s, &b, 1e-9), Err(StatementError::Binding(_))));

        let g = Bindings::new([ScaleBinding::independent("x", ScaleType::Ratio)]).unwrap();
        let s = Statement::MeanOrder {
            group_a: vec![Quantity::base("x", "a", -1.0)],
            group_b: vec![Quantity::base("x", "b", 1.0), Quantity::base("x", "c", 2.0)],
            mean_kind: MeanKind::Geometric,
        };
        assert!(matches!(evaluate(&s, &g, 1e-9), Err(StatementError::Domain(_))));
        let ok = Statement::Order {
            lhs: Quantity::base("x", "a", 1.0),
            rhs: Quantity::base("x", "b", 1.0),
        };
        assert!(matches!(evaluate(&ok, &g, 0.0), Err(StatementError::Invalid(_))));
    }

    #[test]
    fn hand_built_monotone_witness_flips_ordinal_means() {
        let (s, b) = ordinal_means(MeanKind::Arithmetic);
        assert!(evaluate(&s, &b, DEFAULT_REL_TOL).unwrap());
        let w = Witness {
            transforms: BTreeMap::from([(
                "rank".to_string(),
                Transform::monotone(vec![(1.0, 1.0), (2.0, 3.0), (4.0, 4.0)]).unwrap(),
            )]),
            truth_before: true,
            truth_after: false,
            trial: None,
        };
        assert!(!w.replay(&s, &b, DEFAULT_REL_TOL).unwrap());
        assert!(w.verify(&s, &b, DEFAULT_REL_TOL).unwrap());
    }

    #[test]
    fn falsifier_finds_ordinal_mean_witness() {
        let (s, b) = ordinal_means(MeanKind::Arithmetic);
        let v = falsify(&s, &b, 1000, 0, DEFAULT_REL_TOL).unwrap();
        let w = v.witness().expect("witness");
        assert!(w.verify(&s, &b, DEFAULT_REL_TOL).unwrap());
    }

    #[test]
    fn median_on_ordinal_is_meaningful() {
        // odd groups so the median is a data value
        let b = Bindings::new([ScaleBinding::independent("rank", ScaleType::Ordinal)]).unwrap();
        let s = Statement::MeanOrder {
            group_a: [1.0, 5.0, 4.0]
                .iter()
                .map(|v| Quantity::base("rank", "a", *v))
                .collect(),
            group_b: [2.0, 2.0, 3.0]
                .iter()
                .map(|v| Quantity::base("rank", "b", *v))
                .collect(),
            mean_kind: MeanKind::Median,
        };
        let v = classify_symbolic(&s, &b).unwrap().unwrap();
        assert_eq!(
            v,
            Verdict::Meaningful {
                rule: Rule::MedianSharedScale
            }
        );
        let (even, b) = ordinal_means(MeanKind::Median);
        assert_eq!(classify_symbolic(&even, &b).unwrap(), None);
    }

    #[test]
    fn ratio_on_interval_symbolic_and_witness() {
        let b = interval("temp_f");
        let s = Statement::Ratio {
            lhs: Quantity::base("temp_f", "a", 80.0),
            c: 2.0,
            rhs: Quantity::base("temp_f", "b", 40.0),
        };
        let v = check(&s, &b, &CheckOptions::default()).unwrap();
        assert_eq!(v.rule(), Some(Rule::RatioOnNonRatioScale));
        let w = v.witness().unwrap();
        assert!(matches!(w.transforms["temp_f"], Transform::Affine { .. }));
        assert!(w.verify(&s, &b, DEFAULT_REL_TOL).unwrap());
    }

    #[test]
    fn absolute_scales_never_flip() {
        let b = Bindings::new([ScaleBinding::independent("count", ScaleType::Absolute)]).unwrap();
        let s = Statement::Ratio {
            lhs: Quantity::base("count", "a", 6.0),
            c: 2.0,
            rhs: Quantity::base("count", "b", 3.0),
        };
        assert_eq!(
            falsify(&s, &b, 200, 1, 1e-9).unwrap(),
            Verdict::Undetermined { trials: 200 }
        );
        assert_eq!(
            classify_symbolic(&s, &b).unwrap().unwrap().rule(),
            Some(Rule::AbsoluteScale)
        );
    }

    #[test]
    fn equal_measurer_counts_geometric() {
        let b = Bindings::new([
            ScaleBinding::independent("sf1", ScaleType::Ratio),
            ScaleBinding::independent("sf2", ScaleType::Ratio),
        ])
        .unwrap();
        let side = |e: &str, v1: f64, v2: f64| vec![Quantity::base("sf1", e, v1), Quantity::base("sf2", e, v2)];
        let geo = Statement::MeanOrder {
            group_a: side("x", 10.0, 20.0),
            group_b: side("y", 12.0, 17.0),
            mean_kind: MeanKind::Geometric,
        };
        assert_eq!(
            check(
                &geo,
                &b,
                &CheckOptions {
                    validate: true,
                    ..Default::default()
                }
            )
            .unwrap(),
            Verdict::Meaningful {
                rule: Rule::GeometricMeanBalancedUnits
            }
        );
        let arith = Statement::MeanOrder {
            group_a: side("x", 10.0, 20.0),
            group_b: side("y", 12.0, 17.0),
            mean_kind: MeanKind::Arithmetic,
        };
        let v = check(&arith, &b, &CheckOptions::default()).unwrap();
        assert_eq!(v.rule(), Some(Rule::ArithmeticMeanIndependentUnits));
        assert!(v.witness().unwrap().verify(&arith, &b, DEFAULT_REL_TOL).unwrap());
    }

    #[test]
    fn unbalanced_geometric_falls_through() {
        let b = Bindings::new([
            ScaleBinding::independent("sf1", ScaleType::Ratio),
            ScaleBinding::independent("sf2", ScaleType::Ratio),
        ])
        .unwrap();
        let s = Statement::MeanOrder {
            group_a: vec![Quantity::base("sf1", "x", 10.0), Quantity::base("sf1", "x", 20.0)],
            group_b: vec![Quantity::base("sf2", "y", 12.0), Quantity::base("sf1", "y", 17.0)],
            mean_kind: MeanKind::Geometric,
        };
        assert_eq!(classify_symbolic(&s, &b).unwrap(), None);
        assert!(falsify(&s, &b, 1000, 5, 1e-9).unwrap().is_meaningless());
    }

    #[test]
    fn check_is_deterministic() {
        let (s, b) = ordinal_means(MeanKind::Arithmetic);
        let opts = CheckOptions {
            seed: 42,
            ..Default::default()
        };
        let a = serde_json::to_string(&check(&s, &b, &opts).unwrap()).unwrap();
        let c = serde_json::to_string(&check(&s, &b, &opts).unwrap()).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn statement_serde_round_trip() {
        let (s, _) = ordinal_means(MeanKind::Median);
        let json = serde_json::to_string(&s).unwrap();
        let back: Statement = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }
}
