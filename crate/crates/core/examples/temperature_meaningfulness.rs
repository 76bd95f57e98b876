//! "It is twice as hot today as yesterday" on an interval scale, versus the
//! same claim about temperature differences.

use scalecheck::scales::{Bindings, ScaleBinding, ScaleType, Transform};
use scalecheck::statements::{check, evaluate, evaluate_transformed, CheckOptions, Quantity, Statement};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bindings = Bindings::new([ScaleBinding::independent("temp", ScaleType::Interval)])?;
    let claim = Statement::Ratio {
        lhs: Quantity::base("temp", "today", 80.0),
        c: 2.0,
        rhs: Quantity::base("temp", "yesterday", 40.0),
    };
    println!("claim: {claim}");
    println!("true in the recorded units: {}", evaluate(&claim, &bindings, 1e-9)?);

    // Fahrenheit to Celsius
    let to_c = Transform::affine(5.0 / 9.0, -160.0 / 9.0)?;
    let tf = [("temp".to_string(), to_c)].into_iter().collect();
    println!(
        "true after converting to Celsius: {}",
        evaluate_transformed(&claim, &bindings, 1e-9, &tf)?
    );

    let opts = CheckOptions {
        seed: 7,
        ..CheckOptions::default()
    };
    let verdict = check(&claim, &bindings, &opts)?;
    println!(
        "verdict: {} ({})",
        verdict.label(),
        verdict.rule().map(|r| r.explanation()).unwrap_or("")
    );
    if let Some(w) = verdict.witness() {
        for (scale, t) in &w.transforms {
            println!("  witness on {scale}: {t}");
        }
        println!("  replay: {} -> {}", w.truth_before, w.replay(&claim, &bindings, 1e-9)?);
    }

    let order = Statement::Order {
        lhs: Quantity::base("temp", "today", 80.0),
        rhs: Quantity::base("temp", "yesterday", 40.0),
    };
    println!("{order}: {}", check(&order, &bindings, &opts)?.label());
    Ok(())
}
