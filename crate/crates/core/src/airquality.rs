//! Air pollution indices: emission weight index, Pindex, AQI sub-indices and
//! categories, BQI, Likert mean, Shannon index, population-weighted city
//! exposure, air stress index, and exceedance-day counting.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::provenance::identity_hash;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AirError {
    #[error("unknown pollutant `{0}`")]
    UnknownPollutant(String),
    #[error("mixed mass units: `{0}` and `{1}`")]
    MixedUnits(String, String),
    #[error("unit mismatch for {what}: expected `{expected}`, got `{got}`")]
    UnitMismatch {
        what: String,
        expected: String,
        got: String,
    },
    #[error("no tolerance configured for pollutant `{0}`")]
    MissingTolerance(String),
    #[error("no breakpoints configured for {0}")]
    MissingBreakpoints(Pollutant),
    #[error("{pollutant} concentration {concentration} is outside table coverage [{lo}, {hi}]")]
    OutOfRange {
        pollutant: Pollutant,
        concentration: f64,
        lo: f64,
        hi: f64,
    },
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("negative value: {0}")]
    Negative(String),
    #[error("Likert rating {0} is not an integer in 1..=5")]
    BadRating(f64),
    #[error("length mismatch: {0} counts vs {1} references")]
    LengthMismatch(usize, usize),
    #[error("reference count must be at least 1 (entry {0})")]
    ZeroReference(usize),
    #[error("invalid year start {0:02}-{1:02}")]
    BadYearStart(u32, u32),
    #[error("series does not cover a configured year: {0}")]
    IncompleteYear(String),
    #[error("threshold count must be at least 1")]
    BadThreshold,
    #[error("population must be at least 1 (city `{0}`)")]
    BadPopulation(String),
}

/// Pollutants carried by an AQI vector, in canonical (tie-breaking) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pollutant {
    #[serde(rename = "PM")]
    Pm,
    #[serde(rename = "CO")]
    Co,
    #[serde(rename = "SO2")]
    So2,
    #[serde(rename = "NO2")]
    No2,
    #[serde(rename = "O3")]
    O3,
}

impl Pollutant {
    pub const CANONICAL: [Pollutant; 5] = [
        Pollutant::Pm,
        Pollutant::Co,
        Pollutant::So2,
        Pollutant::No2,
        Pollutant::O3,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Pollutant::Pm => "PM",
            Pollutant::Co => "CO",
            Pollutant::So2 => "SO2",
            Pollutant::No2 => "NO2",
            Pollutant::O3 => "O3",
        }
    }
}

impl fmt::Display for Pollutant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Pollutant {
    type Err = AirError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter_map(|c| match c {
                '.' | '_' | '-' | ' ' => None,
                '₂' => Some('2'),
                '₃' => Some('3'),
                '₅' => Some('5'),
                c => Some(c.to_ascii_uppercase()),
            })
            .collect();
        match norm.as_str() {
            "PM" | "PM25" => Ok(Pollutant::Pm),
            "CO" => Ok(Pollutant::Co),
            "SO2" => Ok(Pollutant::So2),
            "NO2" => Ok(Pollutant::No2),
            "O3" => Ok(Pollutant::O3),
            _ => Err(AirError::UnknownPollutant(s.to_string())),
        }
    }
}

// ---------------------------------------------------------------------------
// Emissions

/// Mass of one pollutant emitted by one source over one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionRecord {
    pub pollutant: String,
    pub period: String,
    pub source: String,
    pub mass: f64,
    pub unit: String,
}

impl EmissionRecord {
    pub fn new(
        pollutant: impl Into<String>,
        period: impl Into<String>,
        source: impl Into<String>,
        mass: f64,
        unit: impl Into<String>,
    ) -> Result<Self, AirError> {
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(AirError::Negative(format!("emission mass {mass}")));
        }
        Ok(Self {
            pollutant: pollutant.into(),
            period: period.into(),
            source: source.into(),
            mass,
            unit: unit.into(),
        })
    }
}

fn selected<'a>(
    records: &'a [EmissionRecord],
    period: &'a str,
    source: &'a str,
) -> impl Iterator<Item = &'a EmissionRecord> {
    records.iter().filter(move |r| r.period == period && r.source == source)
}

fn common_unit<'a>(records: impl Iterator<Item = &'a EmissionRecord>) -> Result<Option<&'a str>, AirError> {
    let mut unit: Option<&str> = None;
    for r in records {
        match unit {
            None => unit = Some(&r.unit),
            Some(u) if u != r.unit => return Err(AirError::MixedUnits(u.to_string(), r.unit.clone())),
            _ => {}
        }
    }
    Ok(unit)
}

/// Total emitted mass over all pollutants for one period and source.
pub fn index_a(records: &[EmissionRecord], period: &str, source: &str) -> Result<f64, AirError> {
    common_unit(records.iter())?;
    Ok(selected(records, period, source).map(|r| r.mass).sum())
}

/// Per-pollutant tolerance levels; severity is the reciprocal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceTable {
    pub name: String,
    pub unit: String,
    pub tolerances: BTreeMap<String, f64>,
}

impl ToleranceTable {
    pub fn new(
        name: impl Into<String>,
        unit: impl Into<String>,
        tolerances: BTreeMap<String, f64>,
    ) -> Result<Self, AirError> {
        for (p, t) in &tolerances {
            if !(t.is_finite() && *t > 0.0) {
                return Err(AirError::InvalidTable(format!(
                    "tolerance for `{p}` must be positive, got {t}"
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            unit: unit.into(),
            tolerances,
        })
    }

    /// Tolerances of the five pollutants in the reference emission study.
    pub fn reference() -> Self {
        let t = [
            ("CO", 7800.0),
            ("NO2", 330.0),
            ("HC", 788.0),
            ("SO2", 266.0),
            ("PM", 150.0),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Self::new("reference-tolerances", "units", t).expect("static table")
    }

    pub fn severity(&self, pollutant: &str) -> Result<f64, AirError> {
        tolerance_of(self, pollutant).map(|t| 1.0 / t)
    }

    pub fn identity(&self) -> String {
        identity_hash(self)
    }
}

fn tolerance_of(table: &ToleranceTable, pollutant: &str) -> Result<f64, AirError> {
    table
        .tolerances
        .get(pollutant)
        .copied()
        .ok_or_else(|| AirError::MissingTolerance(pollutant.to_string()))
}

/// Severity-weighted emission sum Σ e/τ; 1.0 per pollutant is 100% of tolerance.
pub fn pindex(
    records: &[EmissionRecord],
    tolerances: &ToleranceTable,
    period: &str,
    source: &str,
) -> Result<f64, AirError> {
    if let Some(u) = common_unit(records.iter())? {
        if u != tolerances.unit {
            return Err(AirError::UnitMismatch {
                what: format!("tolerance table `{}`", tolerances.name),
                expected: tolerances.unit.clone(),
                got: u.to_string(),
            });
        }
    }
    selected(records, period, source)
        .map(|r| tolerance_of(tolerances, &r.pollutant).map(|t| r.mass / t))
        .sum()
}

// ---------------------------------------------------------------------------
// AQI breakpoints

/// `(conc_lo, conc_hi, aqi_lo, aqi_hi)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment(pub f64, pub f64, pub f64, pub f64);

impl Segment {
    pub fn interpolate(&self, c: f64) -> f64 {
        let Segment(c_lo, c_hi, i_lo, i_hi) = *self;
        i_lo + (c - c_lo) / (c_hi - c_lo) * (i_hi - i_lo)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollutantBreakpoints {
    pub unit: String,
    /// Declared averaging period; metadata only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub averaging_period: Option<String>,
    pub segments: Vec<Segment>,
}

impl PollutantBreakpoints {
    fn validate(&self, p: Pollutant) -> Result<(), AirError> {
        let bad = |msg: String| Err(AirError::InvalidTable(format!("{p}: {msg}")));
        if self.segments.is_empty() {
            return bad("no segments".into());
        }
        for (i, s) in self.segments.iter().enumerate() {
            let Segment(c_lo, c_hi, i_lo, i_hi) = *s;
            if [c_lo, c_hi, i_lo, i_hi].iter().any(|v| !v.is_finite()) {
                return bad(format!("segment {i} has a non-finite bound"));
            }
            if c_lo < 0.0 || c_hi <= c_lo {
                return bad(format!("segment {i} concentration bounds must satisfy 0 <= lo < hi"));
            }
            if !(0.0..=500.0).contains(&i_lo) || !(0.0..=500.0).contains(&i_hi) || i_hi <= i_lo {
                return bad(format!("segment {i} index bounds must increase within [0, 500]"));
            }
        }
        for (i, w) in self.segments.windows(2).enumerate() {
            if w[0].1 != w[1].0 || w[0].3 != w[1].2 {
                return bad(format!("segments {i} and {} are not contiguous", i + 1));
            }
        }
        Ok(())
    }

    pub fn coverage(&self) -> (f64, f64) {
        (self.segments[0].0, self.segments[self.segments.len() - 1].1)
    }
}

/// Concentration-to-index mapping per pollutant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakpointTable {
    pub name: String,
    pub pollutants: BTreeMap<Pollutant, PollutantBreakpoints>,
}

impl BreakpointTable {
    pub fn new(
        name: impl Into<String>,
        pollutants: BTreeMap<Pollutant, PollutantBreakpoints>,
    ) -> Result<Self, AirError> {
        for (p, bp) in &pollutants {
            bp.validate(*p)?;
        }
        Ok(Self {
            name: name.into(),
            pollutants,
        })
    }

    /// Moderate bands for O₃, CO and PM₂.₅ with Good bands below them.
    /// Concentrations above the moderate band are out of range until the
    /// caller supplies upper bands.
    pub fn moderate_bands() -> Self {
        let entry = |unit: &str, period: &str, lo: f64, hi: f64| PollutantBreakpoints {
            unit: unit.into(),
            averaging_period: Some(period.into()),
            segments: vec![Segment(0.0, lo, 0.0, 51.0), Segment(lo, hi, 51.0, 100.0)],
        };
        let pollutants = BTreeMap::from([
            (Pollutant::O3, entry("ppm", "8h", 0.055, 0.070)),
            (Pollutant::Co, entry("ppm", "8h", 4.5, 9.4)),
            (Pollutant::Pm, entry("ug/m3", "24h", 12.1, 35.4)),
        ]);
        Self::new("moderate-bands", pollutants).expect("static table")
    }

    pub fn get(&self, p: Pollutant) -> Result<&PollutantBreakpoints, AirError> {
        self.pollutants.get(&p).ok_or(AirError::MissingBreakpoints(p))
    }

    /// Same mapping with concentrations expressed in a unit `factor` times
    /// smaller (a value of 1 old unit reads `factor` new units).
    pub fn rescale_concentration(&self, p: Pollutant, factor: f64, new_unit: &str) -> Result<Self, AirError> {
        let mut out = self.clone();
        let bp = out.pollutants.get_mut(&p).ok_or(AirError::MissingBreakpoints(p))?;
        bp.unit = new_unit.to_string();
        for s in &mut bp.segments {
            s.0 *= factor;
            s.1 *= factor;
        }
        Ok(out)
    }

    pub fn identity(&self) -> String {
        identity_hash(self)
    }
}

/// Linear interpolation within the segment containing `concentration`.
pub fn aqi_subindex(
    pollutant: Pollutant,
    concentration: f64,
    unit: &str,
    table: &BreakpointTable,
) -> Result<f64, AirError> {
    let bp = table.get(pollutant)?;
    if bp.unit != unit {
        return Err(AirError::UnitMismatch {
            what: format!("{pollutant} breakpoints"),
            expected: bp.unit.clone(),
            got: unit.to_string(),
        });
    }
    let (lo, hi) = bp.coverage();
    if !(concentration >= lo && concentration <= hi) {
        return Err(AirError::OutOfRange {
            pollutant,
            concentration,
            lo,
            hi,
        });
    }
    // exact endpoints first so every breakpoint maps to its declared index
    for s in &bp.segments {
        if concentration == s.0 {
            return Ok(s.2);
        }
        if concentration == s.1 {
            return Ok(s.3);
        }
    }
    let seg = bp
        .segments
        .iter()
        .find(|s| concentration > s.0 && concentration < s.1)
        .expect("coverage is contiguous");
    Ok(seg.interpolate(concentration))
}

// ---------------------------------------------------------------------------
// Categories

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoryBand {
    Good,
    Moderate,
    UnhealthyForSensitiveGroups,
    Unhealthy,
    VeryUnhealthy,
    Hazardous,
}

impl CategoryBand {
    pub const ALL: [CategoryBand; 6] = [
        CategoryBand::Good,
        CategoryBand::Moderate,
        CategoryBand::UnhealthyForSensitiveGroups,
        CategoryBand::Unhealthy,
        CategoryBand::VeryUnhealthy,
        CategoryBand::Hazardous,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CategoryBand::Good => "Good",
            CategoryBand::Moderate => "Moderate",
            CategoryBand::UnhealthyForSensitiveGroups => "Unhealthy for Sensitive Groups",
            CategoryBand::Unhealthy => "Unhealthy",
            CategoryBand::VeryUnhealthy => "Very Unhealthy",
            CategoryBand::Hazardous => "Hazardous",
        }
    }

    pub fn color(self) -> &'static str {
        match self {
            CategoryBand::Good => "Green",
            CategoryBand::Moderate => "Yellow",
            CategoryBand::UnhealthyForSensitiveGroups => "Orange",
            CategoryBand::Unhealthy => "Red",
            CategoryBand::VeryUnhealthy => "Purple",
            CategoryBand::Hazardous => "Maroon",
        }
    }

    /// Inclusive integer index range; `None` means unbounded above.
    pub fn range(self) -> (u32, Option<u32>) {
        match self {
            CategoryBand::Good => (0, Some(50)),
            CategoryBand::Moderate => (51, Some(100)),
            CategoryBand::UnhealthyForSensitiveGroups => (101, Some(150)),
            CategoryBand::Unhealthy => (151, Some(200)),
            CategoryBand::VeryUnhealthy => (201, Some(300)),
            CategoryBand::Hazardous => (301, None),
        }
    }
}

impl fmt::Display for CategoryBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name(), self.color())
    }
}

/// Band of an index value, rounded half-up to an integer first.
pub fn category(aqi: f64) -> Result<CategoryBand, AirError> {
    if aqi.is_nan() || aqi < 0.0 {
        return Err(AirError::Negative(format!("AQI value {aqi}")));
    }
    let rounded = (aqi + 0.5).floor();
    Ok(CategoryBand::ALL
        .into_iter()
        .find(|b| match b.range() {
            (_, Some(hi)) => rounded <= f64::from(hi),
            (_, None) => true,
        })
        .expect("last band is unbounded"))
}

// ---------------------------------------------------------------------------
// Vectors of sub-indices

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollutantVector {
    entries: Vec<(Pollutant, f64)>,
}

impl PollutantVector {
    pub fn new(entries: Vec<(Pollutant, f64)>) -> Result<Self, AirError> {
        if let Some((p, v)) = entries.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return Err(AirError::Negative(format!("{p} score {v}")));
        }
        Ok(Self { entries })
    }

    /// Scores for PM, CO, SO₂, NO₂, O₃ in that order.
    pub fn canonical(scores: [f64; 5]) -> Result<Self, AirError> {
        Self::new(Pollutant::CANONICAL.into_iter().zip(scores).collect())
    }

    pub fn entries(&self) -> &[(Pollutant, f64)] {
        &self.entries
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.1).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Highest sub-index and its pollutant; ties go to the earliest pollutant in
/// canonical order.
pub fn overall_aqi(v: &PollutantVector) -> Result<(f64, Pollutant), AirError> {
    let mut sorted = v.entries.clone();
    sorted.sort_by_key(|e| e.0);
    sorted
        .into_iter()
        .fold(None, |best: Option<(f64, Pollutant)>, (p, x)| match best {
            Some((b, _)) if b >= x => best,
            _ => Some((x, p)),
        })
        .ok_or(AirError::Empty("pollutant vector"))
}

/// Arithmetic mean of the sub-indices.
pub fn bqi(v: &PollutantVector) -> Result<f64, AirError> {
    if v.is_empty() {
        return Err(AirError::Empty("pollutant vector"));
    }
    Ok(v.entries.iter().map(|e| e.1).sum::<f64>() / v.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikertMean {
    pub value: f64,
    /// Ratings are ordinal, so comparing these means is not meaningful.
    pub ordinal_caveat: bool,
}

pub fn likert_mean(ratings: &PollutantVector) -> Result<LikertMean, AirError> {
    if ratings.is_empty() {
        return Err(AirError::Empty("Likert ratings"));
    }
    if let Some(&(_, r)) = ratings
        .entries
        .iter()
        .find(|(_, r)| r.fract() != 0.0 || !(1.0..=5.0).contains(r))
    {
        return Err(AirError::BadRating(r));
    }
    Ok(LikertMean {
        value: bqi(ratings)?,
        ordinal_caveat: true,
    })
}

/// H = −Σ aᵢ ln aᵢ with aᵢ = xᵢ/Σx; zero entries contribute nothing.
pub fn shannon_index(v: &PollutantVector) -> Result<f64, AirError> {
    let total: f64 = v.entries.iter().map(|e| e.1).sum();
    if total.is_nan() || total <= 0.0 {
        return Err(AirError::Empty("Shannon index needs a positive entry"));
    }
    let h: f64 = v
        .entries
        .iter()
        .filter(|e| e.1 > 0.0)
        .map(|e| {
            let a = e.1 / total;
            -a * a.ln()
        })
        .sum();
    Ok(h.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Divergence {
    /// Max rule and mean rank the two vectors in opposite order.
    Inversion,
    /// Max rule ties vectors that the mean separates.
    Conflation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorComparison {
    pub overall: (f64, f64),
    pub bqi: (f64, f64),
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence: Option<Divergence>,
}

/// Compares two vectors under the max rule and under the mean.
pub fn compare_vectors(a: &PollutantVector, b: &PollutantVector) -> Result<VectorComparison, AirError> {
    let (ma, _) = overall_aqi(a)?;
    let (mb, _) = overall_aqi(b)?;
    let (qa, qb) = (bqi(a)?, bqi(b)?);
    let by_max = ma.partial_cmp(&mb).expect("finite");
    let by_mean = qa.partial_cmp(&qb).expect("finite");
    use std::cmp::Ordering::Equal;
    let divergence = match (by_max, by_mean) {
        (Equal, Equal) => None,
        (Equal, _) => Some(Divergence::Conflation),
        (x, y) if y != Equal && x != y => Some(Divergence::Inversion),
        _ => None,
    };
    Ok(VectorComparison {
        overall: (ma, mb),
        bqi: (qa, qb),
        divergence,
    })
}

// ---------------------------------------------------------------------------
// Population-weighted exposure

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityReading {
    pub city: String,
    /// Annual mean PM₂.₅ concentration, µg/m³.
    pub mean_pm25: f64,
    pub population: u64,
}

impl CityReading {
    pub fn new(city: impl Into<String>, mean_pm25: f64, population: u64) -> Result<Self, AirError> {
        let city = city.into();
        if !(mean_pm25.is_finite() && mean_pm25 >= 0.0) {
            return Err(AirError::Negative(format!("concentration {mean_pm25} for `{city}`")));
        }
        if population < 1 {
            return Err(AirError::BadPopulation(city));
        }
        Ok(Self {
            city,
            mean_pm25,
            population,
        })
    }
}

/// Σ M·P / Σ P
pub fn population_weighted(readings: &[CityReading]) -> Result<f64, AirError> {
    if readings.is_empty() {
        return Err(AirError::Empty("city readings"));
    }
    let pop: f64 = readings.iter().map(|r| r.population as f64).sum();
    let weighted: f64 = readings.iter().map(|r| r.mean_pm25 * r.population as f64).sum();
    Ok(weighted / pop)
}

// ---------------------------------------------------------------------------
// Air stress index and exceedance days

/// Mean over pollutants of exceedance count over permitted count.
pub fn asi(counts: &[u64], refs: &[u64]) -> Result<f64, AirError> {
    if counts.len() != refs.len() {
        return Err(AirError::LengthMismatch(counts.len(), refs.len()));
    }
    if counts.is_empty() {
        return Err(AirError::Empty("ASI needs at least one pollutant"));
    }
    if let Some(i) = refs.iter().position(|r| *r == 0) {
        return Err(AirError::ZeroReference(i));
    }
    let sum: f64 = counts.iter().zip(refs).map(|(c, r)| *c as f64 / *r as f64).sum();
    Ok(sum / counts.len() as f64)
}

/// `now / then − 1`, e.g. 0.2 for a 20% increase.
pub fn relative_change(then: f64, now: f64) -> f64 {
    now / then - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearStart {
    pub month: u32,
    pub day: u32,
}

impl YearStart {
    pub const JANUARY_1: YearStart = YearStart { month: 1, day: 1 };
    pub const OCTOBER_1: YearStart = YearStart { month: 10, day: 1 };

    pub fn new(month: u32, day: u32) -> Result<Self, AirError> {
        // must exist in every year, so Feb 29 is excluded
        if NaiveDate::from_ymd_opt(2001, month, day).is_none() {
            return Err(AirError::BadYearStart(month, day));
        }
        Ok(Self { month, day })
    }

    /// Start date of the configured year that contains `date`.
    pub fn year_containing(self, date: NaiveDate) -> NaiveDate {
        let this = self.on(date.year());
        if date >= this {
            this
        } else {
            self.on(date.year() - 1)
        }
    }

    pub fn on(self, year: i32) -> NaiveDate {
        NaiveDate::from_ymd_opt(year, self.month, self.day).expect("validated")
    }

    /// First day of the following configured year.
    pub fn next(self, start: NaiveDate) -> NaiveDate {
        self.on(start.year() + 1)
    }
}

impl FromStr for YearStart {
    type Err = AirError;

    /// Parses `MM-DD`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (m, d) = s.split_once('-').ok_or(AirError::BadYearStart(0, 0))?;
        let m: u32 = m.trim().parse().map_err(|_| AirError::BadYearStart(0, 0))?;
        let d: u32 = d.trim().parse().map_err(|_| AirError::BadYearStart(m, 0))?;
        Self::new(m, d)
    }
}

impl fmt::Display for YearStart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}-{:02}", self.month, self.day)
    }
}

/// Daily exceedance flags over a contiguous date range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub start: NaiveDate,
    pub exceeded: Vec<bool>,
}

impl DailyRecord {
    pub fn new(start: NaiveDate, exceeded: Vec<bool>) -> Self {
        Self { start, exceeded }
    }

    /// Builds a record from (date, flag) pairs which must be consecutive days.
    pub fn from_days(days: &[(NaiveDate, bool)]) -> Result<Self, AirError> {
        let (first, _) = *days.first().ok_or(AirError::Empty("daily series"))?;
        for (i, (d, _)) in days.iter().enumerate() {
            if *d != first + chrono::Days::new(i as u64) {
                return Err(AirError::IncompleteYear(format!("dates are not contiguous at {d}")));
            }
        }
        Ok(Self::new(first, days.iter().map(|d| d.1).collect()))
    }

    pub fn end(&self) -> NaiveDate {
        self.start + chrono::Days::new(self.exceeded.len() as u64)
    }

    /// Every complete configured year inside the record.
    pub fn years(&self, year_start: YearStart) -> Vec<ExceedanceSeries> {
        let mut out = Vec::new();
        let mut y = year_start.year_containing(self.start);
        if y < self.start {
            y = year_start.next(y);
        }
        loop {
            let next = year_start.next(y);
            if next > self.end() {
                break;
            }
            let from = (y - self.start).num_days() as usize;
            let to = (next - self.start).num_days() as usize;
            out.push(ExceedanceSeries {
                year_start,
                start: y,
                exceeded: self.exceeded[from..to].to_vec(),
            });
            y = next;
        }
        out
    }
}

/// One configured year of daily exceedance flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceSeries {
    pub year_start: YearStart,
    pub start: NaiveDate,
    pub exceeded: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceStats {
    pub year_start: YearStart,
    pub year_begins: NaiveDate,
    pub year_length: u32,
    pub total_days: u32,
    pub first_date_reaching: Option<NaiveDate>,
    /// Days from the start of the year through the reaching date, inclusive.
    pub days_elapsed: Option<u32>,
    /// Days of the year left after the reaching date (the whole year if never reached).
    pub days_remaining_in_year: u32,
}

/// Counts exceedances in one configured year and finds the day the count
/// first reaches `threshold_count`.
pub fn exceedance_stats(series: &ExceedanceSeries, threshold_count: u32) -> Result<ExceedanceStats, AirError> {
    if threshold_count < 1 {
        return Err(AirError::BadThreshold);
    }
    if series.start != series.year_start.year_containing(series.start) {
        return Err(AirError::IncompleteYear(format!(
            "series starts {} but the year starts {}",
            series.start, series.year_start
        )));
    }
    let year_length = (series.year_start.next(series.start) - series.start).num_days() as u32;
    if series.exceeded.len() as u32 != year_length {
        return Err(AirError::IncompleteYear(format!(
            "{} days supplied for a {year_length}-day year",
            series.exceeded.len()
        )));
    }
    let mut count = 0u32;
    let mut reached = None;
    for (i, &e) in series.exceeded.iter().enumerate() {
        if e {
            count += 1;
            if count == threshold_count && reached.is_none() {
                reached = Some(i as u32 + 1);
            }
        }
    }
    Ok(ExceedanceStats {
        year_start: series.year_start,
        year_begins: series.start,
        year_length,
        total_days: count,
        first_date_reaching: reached.map(|n| series.start + chrono::Days::new(u64::from(n - 1))),
        days_elapsed: reached,
        days_remaining_in_year: year_length - reached.unwrap_or(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vector(s: [f64; 5]) -> PollutantVector {
        PollutantVector::canonical(s).unwrap()
    }

    #[test]
    fn index_a_sums() {
        let r = |p: &str, m: f64| EmissionRecord::new(p, "2024", "plant", m, "t").unwrap();
        assert_eq!(index_a(&[r("CO", 100.0)], "2024", "plant").unwrap(), 100.0);
        assert_eq!(
            index_a(&[r("CO", 10.0), r("NO2", 20.0), r("SO2", 30.0)], "2024", "plant").unwrap(),
            60.0
        );
        assert_eq!(index_a(&[], "2024", "plant").unwrap(), 0.0);
        let mixed = [
            r("CO", 1.0),
            EmissionRecord::new("NO2", "2024", "plant", 1.0, "kg").unwrap(),
        ];
        assert!(matches!(
            index_a(&mixed, "2024", "plant"),
            Err(AirError::MixedUnits(..))
        ));
        assert!(EmissionRecord::new("CO", "p", "s", -1.0, "t").is_err());
    }

    #[test]
    fn pindex_examples() {
        let tol = ToleranceTable::reference();
        let r = |p: &str, m: f64| EmissionRecord::new(p, "t", "k", m, "units").unwrap();
        assert_eq!(pindex(&[r("CO", 7800.0), r("PM", 0.0)], &tol, "t", "k").unwrap(), 1.0);
        let fifth: Vec<_> = tol.tolerances.iter().map(|(p, t)| r(p, 0.2 * t)).collect();
        assert!((pindex(&fifth, &tol, "t", "k").unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(pindex(&[r("CO", 0.0)], &tol, "t", "k").unwrap(), 0.0);
        assert!(matches!(
            pindex(&[r("O3", 1.0)], &tol, "t", "k"),
            Err(AirError::MissingTolerance(_))
        ));
    }

    #[test]
    fn subindex_endpoints_and_midpoint() {
        let t = BreakpointTable::moderate_bands();
        assert_eq!(aqi_subindex(Pollutant::O3, 0.055, "ppm", &t).unwrap(), 51.0);
        assert_eq!(aqi_subindex(Pollutant::O3, 0.070, "ppm", &t).unwrap(), 100.0);
        assert!((aqi_subindex(Pollutant::O3, 0.0625, "ppm", &t).unwrap() - 75.5).abs() < 1e-9);
        assert_eq!(aqi_subindex(Pollutant::Co, 9.4, "ppm", &t).unwrap(), 100.0);
        assert!(matches!(
            aqi_subindex(Pollutant::O3, 0.071, "ppm", &t),
            Err(AirError::OutOfRange { .. })
        ));
        assert!(matches!(
            aqi_subindex(Pollutant::O3, 0.06, "ppb", &t),
            Err(AirError::UnitMismatch { .. })
        ));
        assert!(matches!(
            aqi_subindex(Pollutant::So2, 1.0, "ppb", &t),
            Err(AirError::MissingBreakpoints(_))
        ));
    }

    #[test]
    fn table_validation() {
        let bp = |segments| PollutantBreakpoints {
            unit: "ppm".into(),
            averaging_period: None,
            segments,
        };
        let gap = bp(vec![Segment(0.0, 1.0, 0.0, 50.0), Segment(1.1, 2.0, 51.0, 100.0)]);
        assert!(BreakpointTable::new("t", BTreeMap::from([(Pollutant::Co, gap)])).is_err());
        let over = bp(vec![Segment(0.0, 1.0, 0.0, 600.0)]);
        assert!(BreakpointTable::new("t", BTreeMap::from([(Pollutant::Co, over)])).is_err());
        let backwards = bp(vec![Segment(1.0, 0.5, 0.0, 50.0)]);
        assert!(BreakpointTable::new("t", BTreeMap::from([(Pollutant::Co, backwards)])).is_err());
    }

    #[test]
    fn categories() {
        assert_eq!(category(301.0).unwrap(), CategoryBand::Hazardous);
        assert_eq!(category(50.0).unwrap(), CategoryBand::Good);
        assert_eq!(category(120.0).unwrap(), CategoryBand::UnhealthyForSensitiveGroups);
        assert_eq!(category(50.4).unwrap(), CategoryBand::Good);
        assert_eq!(category(50.5).unwrap(), CategoryBand::Moderate);
        assert_eq!(category(300.0).unwrap(), CategoryBand::VeryUnhealthy);
        assert!(category(-1.0).is_err());
    }

    #[test]
    fn overall_and_bqi() {
        assert_eq!(
            overall_aqi(&vector([25.0, 25.0, 301.0, 25.0, 25.0])).unwrap(),
            (301.0, Pollutant::So2)
        );
        assert_eq!(overall_aqi(&vector([300.0; 5])).unwrap(), (300.0, Pollutant::Pm));
        assert_eq!(
            overall_aqi(&vector([10.0, 10.0, 10.0, 10.0, 100.0])).unwrap(),
            (100.0, Pollutant::O3)
        );
        assert!((bqi(&vector([25.0, 25.0, 301.0, 25.0, 25.0])).unwrap() - 80.2).abs() < 1e-12);
        assert_eq!(bqi(&vector([300.0; 5])).unwrap(), 300.0);
        assert_eq!(bqi(&vector([100.0; 5])).unwrap(), 100.0);
        assert_eq!(bqi(&vector([10.0, 10.0, 10.0, 10.0, 100.0])).unwrap(), 28.0);
        let empty = PollutantVector::new(vec![]).unwrap();
        assert!(overall_aqi(&empty).is_err());
        assert!(bqi(&empty).is_err());
    }

    #[test]
    fn tie_break_ignores_entry_order() {
        let v = PollutantVector::new(vec![(Pollutant::O3, 90.0), (Pollutant::Co, 90.0)]).unwrap();
        assert_eq!(overall_aqi(&v).unwrap(), (90.0, Pollutant::Co));
    }

    #[test]
    fn divergence_flags() {
        let c = compare_vectors(&vector([25.0, 25.0, 301.0, 25.0, 25.0]), &vector([300.0; 5])).unwrap();
        assert_eq!(c.divergence, Some(Divergence::Inversion));
        let c = compare_vectors(&vector([100.0; 5]), &vector([10.0, 10.0, 10.0, 10.0, 100.0])).unwrap();
        assert_eq!(c.divergence, Some(Divergence::Conflation));
        let c = compare_vectors(&vector([1.0; 5]), &vector([2.0; 5])).unwrap();
        assert_eq!(c.divergence, None);
    }

    #[test]
    fn likert() {
        assert_eq!(likert_mean(&vector([1.0; 5])).unwrap().value, 1.0);
        assert_eq!(likert_mean(&vector([5.0; 5])).unwrap().value, 5.0);
        let m = likert_mean(&vector([1.0, 2.0, 3.0, 4.0, 5.0])).unwrap();
        assert_eq!(m.value, 3.0);
        assert!(m.ordinal_caveat);
        assert!(matches!(
            likert_mean(&vector([1.0, 2.0, 6.0, 1.0, 1.0])),
            Err(AirError::BadRating(_))
        ));
        assert!(matches!(
            likert_mean(&vector([1.5, 2.0, 3.0, 1.0, 1.0])),
            Err(AirError::BadRating(_))
        ));
    }

    #[test]
    fn shannon_examples() {
        assert!((shannon_index(&vector([1.0; 5])).unwrap() - 5f64.ln()).abs() < 1e-12);
        assert_eq!(shannon_index(&vector([1.0, 0.0, 0.0, 0.0, 0.0])).unwrap(), 0.0);
        // a = (1/14, 1/14, 1/14, 1/14, 10/14)
        let direct = 4.0 / 14.0 * 14f64.ln() + 10.0 / 14.0 * 1.4f64.ln();
        assert!((shannon_index(&vector([10.0, 10.0, 10.0, 10.0, 100.0])).unwrap() - direct).abs() < 1e-12);
        assert!((direct - 0.994_35).abs() < 1e-4);
        assert!(shannon_index(&vector([0.0; 5])).is_err());
    }

    #[test]
    fn population_weighting() {
        let c = |m, p| CityReading::new("c", m, p).unwrap();
        assert!((population_weighted(&[c(89.7, 12_345)]).unwrap() - 89.7).abs() < 1e-12);
        assert!((population_weighted(&[c(4.2, 1000), c(3.4, 1000)]).unwrap() - 3.8).abs() < 1e-12);
        assert_eq!(population_weighted(&[c(10.0, 1), c(20.0, 3)]).unwrap(), 17.5);
        assert!(population_weighted(&[]).is_err());
        assert!(CityReading::new("x", 1.0, 0).is_err());
    }

    #[test]
    fn asi_examples() {
        assert_eq!(asi(&[3, 5, 7], &[3, 5, 7]).unwrap(), 1.0);
        assert_eq!(asi(&[0, 0, 0], &[4, 5, 6]).unwrap(), 0.0);
        assert!(matches!(asi(&[1, 2], &[1]), Err(AirError::LengthMismatch(2, 1))));
        assert!(matches!(asi(&[1], &[0]), Err(AirError::ZeroReference(0))));
        let then = asi(&[10, 20], &[10, 20]).unwrap();
        let now = asi(&[12, 24], &[10, 20]).unwrap();
        assert!((relative_change(then, now) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn year_start_parsing() {
        assert_eq!("10-01".parse::<YearStart>().unwrap(), YearStart::OCTOBER_1);
        assert!("02-29".parse::<YearStart>().is_err());
        assert!("13-01".parse::<YearStart>().is_err());
        assert!("junk".parse::<YearStart>().is_err());
    }

    #[test]
    fn no_exceedances() {
        let start = NaiveDate::from_ymd_opt(2023, 1, 1).unwrap();
        let s = ExceedanceSeries {
            year_start: YearStart::JANUARY_1,
            start,
            exceeded: vec![false; 365],
        };
        let st = exceedance_stats(&s, 100).unwrap();
        assert_eq!(
            (st.total_days, st.first_date_reaching, st.days_remaining_in_year),
            (0, None, 365)
        );
        let short = ExceedanceSeries {
            exceeded: vec![false; 200],
            ..s.clone()
        };
        assert!(matches!(
            exceedance_stats(&short, 100),
            Err(AirError::IncompleteYear(_))
        ));
        assert!(matches!(exceedance_stats(&s, 0), Err(AirError::BadThreshold)));
    }
}
