//! Body mass index: classification, unit changes, and which comparisons
//! survive them.

use scalecheck::health::{self, BodyMetrics, LengthUnit, MassUnit};
use scalecheck::scales::Bindings;
use scalecheck::statements::{check, CheckOptions, Statement};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ann = BodyMetrics::new(90.0, MassUnit::Kg, 1.5, LengthUnit::M)?;
    let bob = BodyMetrics::new(198.4, MassUnit::Lb, 70.0, LengthUnit::In)?;
    for (name, m) in [("ann", &ann), ("bob", &bob)] {
        let b = health::bmi(m);
        println!(
            "{name}: bmi {:.2} ({}), ponderal {:.2}",
            b.value(),
            health::classify(b),
            health::ponderal(m)
        );
    }

    let bindings = Bindings::new(health::body_scales())?;
    let opts = CheckOptions::default();
    let statements = [
        Statement::Order {
            lhs: health::bmi_quantity("ann", &ann),
            rhs: health::bmi_quantity("bob", &bob),
        },
        Statement::Threshold {
            q: health::bmi_quantity("ann", &ann),
            c: 30.0,
            unit_fixed: false,
        },
        Statement::Threshold {
            q: health::bmi_quantity("ann", &ann),
            c: 30.0,
            unit_fixed: true,
        },
        Statement::Order {
            lhs: health::weight_plus_height("ann", &ann),
            rhs: health::weight_plus_height("bob", &bob),
        },
    ];
    for s in &statements {
        let v = check(s, &bindings, &opts)?;
        println!("{s}\n  -> {}", v.label());
    }
    Ok(())
}
