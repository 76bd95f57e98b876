//! Means, rank and product-moment correlation, least squares, and
//! sensitivity/specificity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty input")]
    Empty,
    #[error("geometric mean needs positive values, got {0}")]
    NonPositive(f64),
    #[error("need at least {need} points, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("tie in {coordinate} coordinate at value {value}")]
    Tie { coordinate: char, value: f64 },
    #[error("zero variance in {0} coordinate")]
    Degenerate(char),
    #[error("zero denominator: {0}")]
    ZeroDenominator(&'static str),
    #[error("non-finite value in input")]
    NonFinite,
    #[error("measurement matrix is ragged or empty")]
    Ragged,
}

pub fn arithmetic_mean(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// n-th root of the product, computed in log space.
pub fn geometric_mean(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if let Some(v) = values.iter().find(|v| **v <= 0.0) {
        return Err(StatsError::NonPositive(*v));
    }
    Ok((values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp())
}

/// Middle element, or the average of the two middle elements for even lengths.
pub fn median(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    points: Vec<(f64, f64)>,
}

impl PairedSample {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, StatsError> {
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        Ok(Self { points })
    }

    pub fn from_columns(xs: &[f64], ys: &[f64]) -> Result<Self, StatsError> {
        if xs.len() != ys.len() {
            return Err(StatsError::Ragged);
        }
        Self::new(xs.iter().copied().zip(ys.iter().copied()).collect())
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    /// Applies one map to every x and another to every y.
    pub fn map(&self, fx: impl Fn(f64) -> f64, fy: impl Fn(f64) -> f64) -> Self {
        Self {
            points: self.points.iter().map(|&(x, y)| (fx(x), fy(y))).collect(),
        }
    }

    fn require(&self, need: usize) -> Result<(), StatsError> {
        if self.points.len() < need {
            Err(StatsError::TooFew {
                need,
                got: self.points.len(),
            })
        } else {
            Ok(())
        }
    }
}

fn reject_ties(values: &[f64], coordinate: char) -> Result<(), StatsError> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    match v.windows(2).find(|w| w[0] == w[1]) {
        Some(w) => Err(StatsError::Tie {
            coordinate,
            value: w[0],
        }),
        None => Ok(()),
    }
}

/// 1-based ranks of tie-free values.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut r = vec![0.0; values.len()];
    for (rank, i) in idx.into_iter().enumerate() {
        r[i] = (rank + 1) as f64;
    }
    r
}

// merge sort returning the number of inversions
fn count_inversions(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = count_inversions(&mut v[..mid], buf) + count_inversions(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[i] <= v[j] {
            buf.push(v[i]);
            i += 1;
        } else {
            buf.push(v[j]);
            inv += (mid - i) as u64;
            j += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    inv
}

/// Concordant and discordant pair counts of a tie-free sample.
pub fn concordance(s: &PairedSample) -> Result<(u64, u64), StatsError> {
    s.require(2)?;
    let (xs, ys) = (s.xs(), s.ys());
    reject_ties(&xs, 'x')?;
    reject_ties(&ys, 'y')?;
    let mut sorted = s.points.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut y: Vec<f64> = sorted.iter().map(|p| p.1).collect();
    let discordant = count_inversions(&mut y, &mut Vec::with_capacity(sorted.len()));
    let n = s.len() as u64;
    let pairs = n * (n - 1) / 2;
    Ok((pairs - discordant, discordant))
}

/// Kendall's τ = (C − D)/(C + D). Ties are rejected.
pub fn kendall_tau(s: &PairedSample) -> Result<f64, StatsError> {
    let (c, d) = concordance(s)?;
    Ok((c as f64 - d as f64) / (c + d) as f64)
}

/// Spearman's ρ = 1 − 6Σd²/(n(n²−1)). Ties are rejected.
pub fn spearman_rho(s: &PairedSample) -> Result<f64, StatsError> {
    s.require(2)?;
    let (xs, ys) = (s.xs(), s.ys());
    reject_ties(&xs, 'x')?;
    reject_ties(&ys, 'y')?;
    let (rx, ry) = (ranks(&xs), ranks(&ys));
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
    let n = s.len() as f64;
    Ok(1.0 - 6.0 * d2 / (n * (n * n - 1.0)))
}

struct Moments {
    mean_x: f64,
    mean_y: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

fn moments(s: &PairedSample) -> Moments {
    let n = s.len() as f64;
    let mean_x = s.points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = s.points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in &s.points {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    Moments {
        mean_x,
        mean_y,
        sxx,
        syy,
        sxy,
    }
}

pub fn pearson_r(s: &PairedSample) -> Result<f64, StatsError> {
    s.require(2)?;
    let m = moments(s);
    if m.sxx == 0.0 {
        return Err(StatsError::Degenerate('x'));
    }
    if m.syy == 0.0 {
        return Err(StatsError::Degenerate('y'));
    }
    Ok((m.sxy / (m.sxx.sqrt() * m.syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of y on x. `r_squared` is the squared Pearson r, or
/// 0 when y is constant.
pub fn linear_regression(s: &PairedSample) -> Result<Regression, StatsError> {
    s.require(2)?;
    let m = moments(s);
    if m.sxx == 0.0 {
        return Err(StatsError::Degenerate('x'));
    }
    let slope = m.sxy / m.sxx;
    let intercept = m.mean_y - slope * m.mean_x;
    let r_squared = if m.syy == 0.0 {
        0.0
    } else {
        let r = (m.sxy / (m.sxx.sqrt() * m.syy.sqrt())).clamp(-1.0, 1.0);
        r * r
    };
    Ok(Regression {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

pub fn sensitivity(c: &ConfusionCounts) -> Result<f64, StatsError> {
    let positives = c.tp + c.fn_;
    if positives == 0 {
        return Err(StatsError::ZeroDenominator("no positives (tp + fn = 0)"));
    }
    Ok(c.tp as f64 / positives as f64)
}

pub fn specificity(c: &ConfusionCounts) -> Result<f64, StatsError> {
    let negatives = c.tn + c.fp;
    if negatives == 0 {
        return Err(StatsError::ZeroDenominator("no negatives (tn + fp = 0)"));
    }
    Ok(c.tn as f64 / negatives as f64)
}

/// Measurer × subject grid, e.g. skinfold thickness of each subject as
/// recorded by each measurer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementMatrix {
    rows: Vec<Vec<f64>>,
}

impl MeasurementMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        let width = rows.first().map_or(0, Vec::len);
        if width == 0 || rows.iter().any(|r| r.len() != width) {
            return Err(StatsError::Ragged);
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        Ok(Self { rows })
    }

    pub fn measurers(&self) -> usize {
        self.rows.len()
    }

    pub fn subjects(&self) -> usize {
        self.rows[0].len()
    }

    pub fn value(&self, measurer: usize, subject: usize) -> f64 {
        self.rows[measurer][subject]
    }

    /// One column: every measurer's value for `subject`.
    pub fn subject(&self, subject: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[subject]).collect()
    }

    /// Multiplies row i by `factors[i]` (an independent unit change per measurer).
    pub fn rescale_rows(&self, factors: &[f64]) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .zip(factors)
                .map(|(r, a)| r.iter().map(|v| v * a).collect())
                .collect(),
        }
    }

    pub fn arithmetic_greater(&self, x: usize, y: usize) -> Result<bool, StatsError> {
        Ok(arithmetic_mean(&self.subject(x))? > arithmetic_mean(&self.subject(y))?)
    }

    pub fn geometric_greater(&self, x: usize, y: usize) -> Result<bool, StatsError> {
        Ok(geometric_mean(&self.subject(x))? > geometric_mean(&self.subject(y))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(points: &[(f64, f64)]) -> PairedSample {
        PairedSample::new(points.to_vec()).unwrap()
    }

    #[test]
    fn means() {
        assert!((arithmetic_mean(&[25.0, 25.0, 301.0, 25.0, 25.0]).unwrap() - 80.2).abs() < 1e-12);
        assert!((geometric_mean(&[4.0, 9.0]).unwrap() - 6.0).abs() < 1e-12);
        assert_eq!(median(&[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]).unwrap(), 2.5);
        assert_eq!(arithmetic_mean(&[]), Err(StatsError::Empty));
        assert_eq!(median(&[]), Err(StatsError::Empty));
        assert_eq!(geometric_mean(&[1.0, 0.0]), Err(StatsError::NonPositive(0.0)));
    }

    #[test]
    fn rank_correlations_extremes() {
        let up = sample(&[(1.0, 10.0), (2.0, 20.0), (3.0, 30.0), (4.0, 40.0)]);
        assert_eq!(kendall_tau(&up).unwrap(), 1.0);
        assert_eq!(spearman_rho(&up).unwrap(), 1.0);
        let down = sample(&[(1.0, 3.0), (2.0, 2.0), (3.0, 1.0)]);
        assert_eq!(kendall_tau(&down).unwrap(), -1.0);
        // d = (2, 0, 2): 1 - 6*8/24
        assert_eq!(spearman_rho(&down).unwrap(), -1.0);
    }

    #[test]
    fn ties_and_short_samples_rejected() {
        let tied = sample(&[(1.0, 1.0), (1.0, 2.0), (3.0, 3.0)]);
        assert!(matches!(
            kendall_tau(&tied),
            Err(StatsError::Tie { coordinate: 'x', .. })
        ));
        assert!(matches!(spearman_rho(&tied), Err(StatsError::Tie { .. })));
        let one = sample(&[(1.0, 1.0)]);
        assert!(matches!(kendall_tau(&one), Err(StatsError::TooFew { .. })));
    }

    #[test]
    fn pearson_cases() {
        let lin = sample(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0), (5.0, 11.0)]);
        assert!((pearson_r(&lin).unwrap() - 1.0).abs() < 1e-15);
        let neg = sample(&[(1.0, -1.0), (2.0, -2.0), (3.0, -3.0)]);
        assert!((pearson_r(&neg).unwrap() + 1.0).abs() < 1e-15);
        let flat = sample(&[(1.0, 2.0), (2.0, 2.0)]);
        assert_eq!(pearson_r(&flat), Err(StatsError::Degenerate('y')));
        let noisy = sample(&[(1.0, 2.3), (2.0, 1.9), (3.5, 4.4), (4.0, 3.7), (6.0, 8.1)]);
        let moved = noisy.map(|x| 2.0 * x + 1.0, |y| 3.0 * y - 7.0);
        assert!((pearson_r(&noisy).unwrap() - pearson_r(&moved).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn regression_cases() {
        let xs = [18.0, 21.5, 24.0, 27.3, 31.0, 35.2];
        let pts: Vec<_> = xs.iter().map(|&x| (x, 1.446 * x - 3.6)).collect();
        let fit = linear_regression(&sample(&pts)).unwrap();
        assert!((fit.slope - 1.446).abs() < 1e-9);
        assert!((fit.intercept + 3.6).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);

        let flat: Vec<_> = xs.iter().map(|&x| (x, 4.0)).collect();
        let fit = linear_regression(&sample(&flat)).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r_squared, 0.0);

        let vertical = sample(&[(2.0, 1.0), (2.0, 3.0)]);
        assert_eq!(linear_regression(&vertical), Err(StatsError::Degenerate('x')));
    }

    #[test]
    fn confusion_rates() {
        let c = ConfusionCounts {
            tp: 443,
            fn_: 557,
            tn: 901,
            fp: 99,
        };
        assert!((sensitivity(&c).unwrap() - 0.443).abs() < 1e-12);
        assert!((specificity(&c).unwrap() - 0.901).abs() < 1e-12);
        let half = ConfusionCounts {
            tp: 5,
            fn_: 5,
            ..Default::default()
        };
        assert_eq!(sensitivity(&half).unwrap(), 0.5);
        assert!(specificity(&half).is_err());
    }

    #[test]
    fn measurement_matrix_rescaling() {
        // rows are measurers, columns subjects x and y
        let m = MeasurementMatrix::new(vec![vec![10.0, 12.0], vec![20.0, 15.0]]).unwrap();
        assert!(m.arithmetic_greater(0, 1).unwrap());
        assert!(m.geometric_greater(0, 1).unwrap());
        let r = m.rescale_rows(&[100.0, 1.0]);
        assert!(!r.arithmetic_greater(0, 1).unwrap());
        assert!(r.geometric_greater(0, 1).unwrap());
        assert!(MeasurementMatrix::new(vec![vec![1.0], vec![]]).is_err());
    }
}
