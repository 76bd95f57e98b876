#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scalecheck::scales::{Bindings, DerivedScale, ScaleBinding, ScaleType};
use scalecheck::statements::{MeanKind, Quantity, QuantityKind, Statement};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub const SCALE_TYPES: [ScaleType; 4] = [
    ScaleType::Absolute,
    ScaleType::Ratio,
    ScaleType::Interval,
    ScaleType::Ordinal,
];

fn value(rng: &mut ChaCha8Rng) -> f64 {
    // two decimals keeps ties and exact ratios reachable
    (rng.random_range(50..10_000) as f64) / 100.0
}

fn mean_kind(rng: &mut ChaCha8Rng) -> MeanKind {
    match rng.random_range(0..3) {
        0 => MeanKind::Arithmetic,
        1 => MeanKind::Geometric,
        _ => MeanKind::Median,
    }
}

/// Quantity drawn from one of: base value on `s`, monomial over ratio scales
/// `w` and `h`, or a sum of `w` and `h`.
fn quantity(rng: &mut ChaCha8Rng, entity: String, shape: u8) -> Quantity {
    match shape {
        0 => Quantity::base("s", entity, value(rng)),
        1 => {
            let hp = rng.random_range(-3..=3);
            Quantity::derived(
                DerivedScale::Monomial {
                    factors: vec![("w".into(), 1), ("h".into(), hp)],
                },
                entity,
                vec![value(rng), value(rng)],
            )
        }
        _ => Quantity::derived(
            DerivedScale::Sum {
                bases: vec!["w".into(), "h".into()],
            },
            entity,
            vec![value(rng), value(rng)],
        ),
    }
}

fn plain(q: &Quantity) -> f64 {
    match &q.kind {
        QuantityKind::Base { value, .. } => *value,
        QuantityKind::Derived { scale, values } => scale.combine(values),
    }
}

/// A random statement with its bindings. Roughly half of the equality forms
/// are constructed to hold exactly.
pub fn random_statement(seed: u64) -> (Statement, Bindings) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s_type = SCALE_TYPES[rng.random_range(0..4)];
    let independent_members = rng.random_bool(0.25);
    let mut scales = vec![
        ScaleBinding::independent("s", s_type),
        ScaleBinding::independent("w", ScaleType::Ratio),
        ScaleBinding::independent("h", ScaleType::Ratio),
    ];
    let form = rng.random_range(0..6);
    let shape = if form >= 4 { 0 } else { rng.random_range(0..3) };
    let statement = match form {
        0 => Statement::Order {
            lhs: quantity(&mut rng, "x".into(), shape),
            rhs: quantity(&mut rng, "y".into(), shape),
        },
        1 | 2 => {
            let lhs = quantity(&mut rng, "x".into(), shape);
            let mut rhs = quantity(&mut rng, "y".into(), shape);
            let c = match rng.random_range(0..3) {
                0 => plain(&lhs) / plain(&rhs),
                1 => {
                    rhs = lhs.clone();
                    1.0
                }
                _ => value(&mut rng) / 10.0,
            };
            if form == 1 {
                Statement::Ratio { lhs, c, rhs }
            } else {
                Statement::PercentChange {
                    now: lhs,
                    factor: c,
                    then: rhs,
                }
            }
        }
        3 => Statement::Threshold {
            q: quantity(&mut rng, "x".into(), shape),
            c: value(&mut rng),
            unit_fixed: rng.random_bool(0.5),
        },
        _ => {
            let kind = mean_kind(&mut rng);
            let n = rng.random_range(1..=4);
            let m = if independent_members {
                n
            } else {
                rng.random_range(1..=4)
            };
            let member = |rng: &mut ChaCha8Rng, i: usize, who: &str| {
                let scale = if independent_members {
                    format!("m{i}")
                } else {
                    "s".to_string()
                };
                Quantity::base(scale, format!("{who}{i}"), value(rng))
            };
            if independent_members {
                let t = if rng.random_bool(0.5) { ScaleType::Ratio } else { s_type };
                scales.extend((0..n).map(|i| ScaleBinding::independent(format!("m{i}"), t)));
            }
            let group_a: Vec<Quantity> = (0..n).map(|i| member(&mut rng, i, "a")).collect();
            let group_b: Vec<Quantity> = (0..m).map(|i| member(&mut rng, i, "b")).collect();
            if form == 4 {
                Statement::MeanOrder {
                    group_a,
                    group_b,
                    mean_kind: kind,
                }
            } else {
                let c = if rng.random_bool(0.3) {
                    1.0
                } else {
                    value(&mut rng) / 10.0
                };
                Statement::MeanRatio {
                    group_a,
                    c,
                    group_b,
                    mean_kind: kind,
                }
            }
        }
    };
    (statement, Bindings::new(scales).unwrap())
}
