//! Scale types and their admissible transformations.
//!
//! A scale type is identified by the family of transformations that map one
//! acceptable numerical representation onto another. Statements are checked
//! for meaningfulness by applying members of these families.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a scale (e.g. `"weight"`, `"sf_2"`).
pub type ScaleId = String;

/// Lower/upper bound for sampled multiplicative constants.
pub const ALPHA_RANGE: (f64, f64) = (1e-3, 1e3);
/// Bound on sampled additive constants.
pub const BETA_RANGE: (f64, f64) = (-100.0, 100.0);
/// Control points in a sampled ordinal transform.
pub const MONOTONE_POINTS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScaleError {
    #[error("affine transform requires alpha > 0, got {0}")]
    NonPositiveAlpha(f64),
    #[error("monotone transform needs at least 2 control points, got {0}")]
    TooFewPoints(usize),
    #[error("monotone control points must be strictly increasing in both coordinates (at index {0})")]
    NotIncreasing(usize),
    #[error("non-finite value in transform definition")]
    NonFinite,
    #[error("scale `{0}` is bound more than once")]
    DuplicateScale(ScaleId),
    #[error("independence group `{group}` mixes scale types {first} and {second}")]
    MixedGroup {
        group: String,
        first: ScaleType,
        second: ScaleType,
    },
    #[error("unknown scale `{0}`")]
    UnknownScale(ScaleId),
    #[error("derived scale needs at least one base")]
    EmptyDerived,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleType {
    Absolute,
    Ratio,
    Interval,
    Ordinal,
}

impl ScaleType {
    pub fn name(self) -> &'static str {
        match self {
            ScaleType::Absolute => "absolute",
            ScaleType::Ratio => "ratio",
            ScaleType::Interval => "interval",
            ScaleType::Ordinal => "ordinal",
        }
    }
}

impl fmt::Display for ScaleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Strictly increasing piecewise-linear map, extended linearly past both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct MonotoneMap {
    points: Vec<(f64, f64)>,
}

impl MonotoneMap {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, ScaleError> {
        if points.len() < 2 {
            return Err(ScaleError::TooFewPoints(points.len()));
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(ScaleError::NonFinite);
        }
        for (i, w) in points.windows(2).enumerate() {
            if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                return Err(ScaleError::NotIncreasing(i + 1));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn apply(&self, v: f64) -> f64 {
        let pts = &self.points;
        let last = pts.len() - 1;
        // index of the segment whose left end is the last point <= v,
        // clamped so the end segments extend outward
        let seg = match pts.partition_point(|&(x, _)| x <= v) {
            0 => 0,
            k if k > last => last - 1,
            k => k - 1,
        };
        let (x0, y0) = pts[seg];
        let (x1, y1) = pts[seg + 1];
        y0 + (v - x0) * (y1 - y0) / (x1 - x0)
    }

    /// Conjugates the map by the affine change of coordinates `u ↦ offset + width·u`.
    ///
    /// Used to place a map sampled on the unit square over the span of some data.
    pub fn rescaled(&self, offset: f64, width: f64) -> Self {
        let points = self
            .points
            .iter()
            .map(|&(x, y)| (offset + width * x, offset + width * y))
            .collect();
        Self { points }
    }
}

impl TryFrom<Vec<(f64, f64)>> for MonotoneMap {
    type Error = ScaleError;

    fn try_from(points: Vec<(f64, f64)>) -> Result<Self, Self::Error> {
        Self::new(points)
    }
}

impl From<MonotoneMap> for Vec<(f64, f64)> {
    fn from(m: MonotoneMap) -> Self {
        m.points
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transform {
    Identity,
    Affine { alpha: f64, beta: f64 },
    Monotone { map: MonotoneMap },
}

impl Transform {
    pub fn affine(alpha: f64, beta: f64) -> Result<Self, ScaleError> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(ScaleError::NonFinite);
        }
        if alpha <= 0.0 {
            return Err(ScaleError::NonPositiveAlpha(alpha));
        }
        Ok(Transform::Affine { alpha, beta })
    }

    pub fn proportional(alpha: f64) -> Result<Self, ScaleError> {
        Self::affine(alpha, 0.0)
    }

    pub fn monotone(points: Vec<(f64, f64)>) -> Result<Self, ScaleError> {
        MonotoneMap::new(points).map(|map| Transform::Monotone { map })
    }

    pub fn apply(&self, v: f64) -> f64 {
        match self {
            Transform::Identity => v,
            Transform::Affine { alpha, beta } => alpha * v + beta,
            Transform::Monotone { map } => map.apply(v),
        }
    }

    /// Whether this transform belongs to the admissible family of `scale`.
    pub fn is_admissible(&self, scale: ScaleType) -> bool {
        match (self, scale) {
            (Transform::Identity, _) => true,
            (Transform::Affine { alpha, beta }, ScaleType::Absolute) => *alpha == 1.0 && *beta == 0.0,
            (Transform::Affine { alpha, beta }, ScaleType::Ratio) => *alpha > 0.0 && *beta == 0.0,
            (Transform::Affine { alpha, .. }, ScaleType::Interval | ScaleType::Ordinal) => *alpha > 0.0,
            (Transform::Monotone { map }, ScaleType::Ordinal) => MonotoneMap::new(map.points.clone()).is_ok(),
            // a piecewise-linear map is admissible for a metric scale only if it
            // is globally linear
            (Transform::Monotone { map }, s) => match as_affine(map) {
                Some((alpha, beta)) => Transform::Affine { alpha, beta }.is_admissible(s),
                None => false,
            },
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::Identity => f.write_str("identity"),
            Transform::Affine { alpha, beta } if *beta == 0.0 => write!(f, "v -> {alpha}*v"),
            Transform::Affine { alpha, beta } => write!(f, "v -> {alpha}*v + {beta}"),
            Transform::Monotone { map } => {
                f.write_str("monotone[")?;
                for (i, (x, y)) in map.points.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}->{y}")?;
                }
                f.write_str("]")
            }
        }
    }
}

fn as_affine(map: &MonotoneMap) -> Option<(f64, f64)> {
    let (x0, y0) = map.points[0];
    let (x1, y1) = map.points[1];
    let alpha = (y1 - y0) / (x1 - x0);
    let beta = y0 - alpha * x0;
    map.points
        .iter()
        .all(|&(x, y)| alpha * x + beta == y)
        .then_some((alpha, beta))
}

/// Free-function form of [`Transform::apply`].
pub fn apply(t: &Transform, v: f64) -> f64 {
    t.apply(v)
}

/// Free-function form of [`Transform::is_admissible`].
pub fn is_admissible(t: &Transform, s: ScaleType) -> bool {
    t.is_admissible(s)
}

/// Draws an admissible transform for `scale_type`.
///
/// Deterministic in `(seed, trial)`: each trial reads its own ChaCha stream.
/// Ordinal maps are sampled on the unit square; see [`MonotoneMap::rescaled`].
pub fn sample_transform(scale_type: ScaleType, seed: u64, trial: u64) -> Transform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    match scale_type {
        ScaleType::Absolute => Transform::Identity,
        ScaleType::Ratio => Transform::Affine {
            alpha: sample_alpha(&mut rng),
            beta: 0.0,
        },
        ScaleType::Interval => {
            let alpha = sample_alpha(&mut rng);
            let beta = rng.random_range(BETA_RANGE.0..=BETA_RANGE.1);
            Transform::Affine { alpha, beta }
        }
        ScaleType::Ordinal => Transform::Monotone {
            map: sample_monotone(&mut rng),
        },
    }
}

fn sample_alpha(rng: &mut ChaCha8Rng) -> f64 {
    let (lo, hi) = (ALPHA_RANGE.0.ln(), ALPHA_RANGE.1.ln());
    rng.random_range(lo..=hi).exp()
}

fn sample_monotone(rng: &mut ChaCha8Rng) -> MonotoneMap {
    loop {
        let mut xs: Vec<f64> = (0..MONOTONE_POINTS).map(|_| rng.random::<f64>()).collect();
        let mut ys: Vec<f64> = (0..MONOTONE_POINTS).map(|_| rng.random::<f64>()).collect();
        xs.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        if let Ok(map) = MonotoneMap::new(xs.into_iter().zip(ys).collect()) {
            return map;
        }
    }
}

/// A scale as used in a statement, together with its independence group.
///
/// Scales sharing a group receive the same transformation; distinct groups
/// transform independently.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleBinding {
    pub scale_id: ScaleId,
    pub scale_type: ScaleType,
    pub independence_group: String,
}

impl ScaleBinding {
    /// Binding in its own independence group (independent units).
    pub fn independent(scale_id: impl Into<ScaleId>, scale_type: ScaleType) -> Self {
        let scale_id = scale_id.into();
        Self {
            independence_group: scale_id.clone(),
            scale_id,
            scale_type,
        }
    }

    pub fn grouped(scale_id: impl Into<ScaleId>, scale_type: ScaleType, group: impl Into<String>) -> Self {
        Self {
            scale_id: scale_id.into(),
            scale_type,
            independence_group: group.into(),
        }
    }
}

/// A validated set of scale bindings.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Bindings {
    scales: BTreeMap<ScaleId, ScaleBinding>,
}

impl Bindings {
    pub fn new(bindings: impl IntoIterator<Item = ScaleBinding>) -> Result<Self, ScaleError> {
        let mut scales = BTreeMap::new();
        let mut group_types: BTreeMap<String, ScaleType> = BTreeMap::new();
        for b in bindings {
            if let Some(&first) = group_types.get(&b.independence_group) {
                if first != b.scale_type {
                    return Err(ScaleError::MixedGroup {
                        group: b.independence_group,
                        first,
                        second: b.scale_type,
                    });
                }
            }
            group_types.insert(b.independence_group.clone(), b.scale_type);
            if scales.contains_key(&b.scale_id) {
                return Err(ScaleError::DuplicateScale(b.scale_id));
            }
            scales.insert(b.scale_id.clone(), b);
        }
        Ok(Self { scales })
    }

    pub fn get(&self, id: &str) -> Result<&ScaleBinding, ScaleError> {
        self.scales
            .get(id)
            .ok_or_else(|| ScaleError::UnknownScale(id.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &ScaleBinding> {
        self.scales.values()
    }

    /// Independence groups in sorted order with their scale type.
    pub fn groups(&self) -> Vec<(String, ScaleType)> {
        let mut out: BTreeMap<String, ScaleType> = BTreeMap::new();
        for b in self.scales.values() {
            out.insert(b.independence_group.clone(), b.scale_type);
        }
        out.into_iter().collect()
    }
}

/// A scale built from base scales.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DerivedScale {
    /// Product of bases raised to integer exponents, e.g. weight¹·height⁻².
    Monomial { factors: Vec<(ScaleId, i32)> },
    /// Plain sum of bases.
    Sum { bases: Vec<ScaleId> },
}

impl DerivedScale {
    pub fn monomial(factors: Vec<(ScaleId, i32)>) -> Result<Self, ScaleError> {
        if factors.is_empty() {
            return Err(ScaleError::EmptyDerived);
        }
        Ok(DerivedScale::Monomial { factors })
    }

    pub fn sum(bases: Vec<ScaleId>) -> Result<Self, ScaleError> {
        if bases.is_empty() {
            return Err(ScaleError::EmptyDerived);
        }
        Ok(DerivedScale::Sum { bases })
    }

    pub fn base_ids(&self) -> Vec<&ScaleId> {
        match self {
            DerivedScale::Monomial { factors } => factors.iter().map(|(id, _)| id).collect(),
            DerivedScale::Sum { bases } => bases.iter().collect(),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            DerivedScale::Monomial { factors } => factors.len(),
            DerivedScale::Sum { bases } => bases.len(),
        }
    }

    /// Combines one value per base scale.
    pub fn combine(&self, values: &[f64]) -> f64 {
        match self {
            DerivedScale::Monomial { factors } => factors.iter().zip(values).map(|((_, e), v)| v.powi(*e)).product(),
            DerivedScale::Sum { .. } => values.iter().sum(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ALL: [ScaleType; 4] = [
        ScaleType::Absolute,
        ScaleType::Ratio,
        ScaleType::Interval,
        ScaleType::Ordinal,
    ];

    #[test]
    fn absolute_samples_identity() {
        for trial in 0..20 {
            assert_eq!(sample_transform(ScaleType::Absolute, 7, trial), Transform::Identity);
        }
    }

    #[test]
    fn ratio_samples_are_proportional() {
        for trial in 0..50 {
            match sample_transform(ScaleType::Ratio, 99, trial) {
                Transform::Affine { alpha, beta } => {
                    assert!(alpha > 0.0);
                    assert!((ALPHA_RANGE.0..=ALPHA_RANGE.1).contains(&alpha));
                    assert_eq!(beta, 0.0);
                }
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        for s in ALL {
            assert_eq!(sample_transform(s, 3, 11), sample_transform(s, 3, 11));
        }
        assert_ne!(
            sample_transform(ScaleType::Interval, 3, 11),
            sample_transform(ScaleType::Interval, 3, 12)
        );
    }

    #[test]
    fn fahrenheit_to_centigrade() {
        let t = Transform::affine(5.0 / 9.0, -160.0 / 9.0).unwrap();
        assert!((apply(&t, 80.0) - 26.67).abs() < 0.01);
        assert!((apply(&t, 40.0) - 4.44).abs() < 0.01);
    }

    #[test]
    fn simple_applications() {
        assert_eq!(apply(&Transform::Identity, 42.0), 42.0);
        assert_eq!(apply(&Transform::proportional(2.0).unwrap(), 3.5), 7.0);
    }

    #[test]
    fn admissibility_table() {
        let shift = Transform::affine(2.0, 3.0).unwrap();
        assert!(!is_admissible(&shift, ScaleType::Ratio));
        assert!(is_admissible(&shift, ScaleType::Interval));
        assert!(is_admissible(&shift, ScaleType::Ordinal));
        assert!(!is_admissible(&shift, ScaleType::Absolute));
        let bent = Transform::monotone(vec![(0.0, 0.0), (1.0, 5.0), (2.0, 6.0)]).unwrap();
        assert!(is_admissible(&bent, ScaleType::Ordinal));
        assert!(!is_admissible(&bent, ScaleType::Interval));
        let straight = Transform::monotone(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 6.0)]).unwrap();
        assert!(is_admissible(&straight, ScaleType::Ratio));
        assert!(is_admissible(&Transform::Identity, ScaleType::Absolute));
    }

    #[test]
    fn constructor_errors() {
        assert_eq!(Transform::affine(0.0, 1.0), Err(ScaleError::NonPositiveAlpha(0.0)));
        assert_eq!(Transform::affine(-2.0, 0.0), Err(ScaleError::NonPositiveAlpha(-2.0)));
        assert_eq!(
            Transform::monotone(vec![(0.0, 0.0), (1.0, 0.0)]),
            Err(ScaleError::NotIncreasing(1))
        );
        assert_eq!(Transform::monotone(vec![(0.0, 0.0)]), Err(ScaleError::TooFewPoints(1)));
    }

    #[test]
    fn monotone_extends_linearly() {
        let m = MonotoneMap::new(vec![(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)]).unwrap();
        assert_eq!(m.apply(-1.0), -2.0);
        assert_eq!(m.apply(0.5), 1.0);
        assert_eq!(m.apply(1.0), 2.0);
        assert_eq!(m.apply(4.0), 5.0);
    }

    #[test]
    fn mixed_group_rejected() {
        let err = Bindings::new([
            ScaleBinding::grouped("a", ScaleType::Ratio, "g"),
            ScaleBinding::grouped("b", ScaleType::Interval, "g"),
        ])
        .unwrap_err();
        assert!(matches!(err, ScaleError::MixedGroup { .. }));
        assert!(Bindings::new([
            ScaleBinding::independent("a", ScaleType::Ratio),
            ScaleBinding::independent("a", ScaleType::Ratio),
        ])
        .is_err());
    }

    #[test]
    fn monomial_homogeneity_grid() {
        let bmi = DerivedScale::monomial(vec![("w".into(), 1), ("h".into(), -2)]).unwrap();
        let base = bmi.combine(&[90.0, 1.5]);
        for a1 in [1e-3, 1.0, 1e3] {
            for a2 in [1e-3, 1.0, 1e3] {
                let scaled = bmi.combine(&[a1 * 90.0, a2 * 1.5]);
                let expect = base * a1 * a2.powi(-2);
                assert!((scaled - expect).abs() <= 1e-12 * expect.abs());
            }
        }
    }

    proptest! {
        #[test]
        fn sampled_transforms_are_admissible(seed in any::<u64>(), trial in 0u64..10_000, k in 0usize..4) {
            let s = ALL[k];
            prop_assert!(sample_transform(s, seed, trial).is_admissible(s));
        }

        #[test]
        fn monotone_preserves_strict_order(seed in any::<u64>(), trial in 0u64..1000,
                                           v in -1e3f64..1e3, d in 1e-6f64..1e3) {
            let t = sample_transform(ScaleType::Ordinal, seed, trial);
            prop_assert!(t.apply(v) < t.apply(v + d));
        }

        #[test]
        fn monomial_rescaling_factor(a in -3i32..=3, b in -3i32..=3,
                                     w in 0.1f64..100.0, h in 0.1f64..3.0,
                                     s1 in 0usize..200, s2 in 0usize..200) {
            let alpha1 = match sample_transform(ScaleType::Ratio, 1, s1 as u64) {
                Transform::Affine { alpha, .. } => alpha,
                _ => unreachable!(),
            };
            let alpha2 = match sample_transform(ScaleType::Ratio, 2, s2 as u64) {
                Transform::Affine { alpha, .. } => alpha,
                _ => unreachable!(),
            };
            let m = DerivedScale::monomial(vec![("w".into(), a), ("h".into(), b)]).unwrap();
            let before = m.combine(&[w, h]);
            let after = m.combine(&[alpha1 * w, alpha2 * h]);
            let factor = alpha1.powi(a) * alpha2.powi(b);
            prop_assert!((after - factor * before).abs() <= 1e-12 * after.abs().max((factor * before).abs()));
        }
    }
}
