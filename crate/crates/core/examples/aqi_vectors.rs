//! Sub-indices, the max rule, and how it can disagree with a mean-based index.

use scalecheck::airquality::{self, BreakpointTable, Pollutant, PollutantVector};
use scalecheck::cli::standard_breakpoints;

fn show(name: &str, v: &PollutantVector) -> Result<(), airquality::AirError> {
    let (overall, dominant) = airquality::overall_aqi(v)?;
    println!(
        "{name}: {:?} overall {overall} ({dominant}, {}) bqi {:.1} shannon {:.4}",
        v.values(),
        airquality::category(overall)?,
        airquality::bqi(v)?,
        airquality::shannon_index(v)?
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let table = standard_breakpoints();
    for c in [0.0625, 0.070, 0.080] {
        let i = airquality::aqi_subindex(Pollutant::O3, c, "ppm", &table)?;
        println!("O3 {c} ppm -> {i:.1}");
    }
    let moderate = BreakpointTable::moderate_bands();
    println!(
        "moderate-only table covers O3 up to {:?}",
        moderate.get(Pollutant::O3)?.coverage()
    );

    let a = PollutantVector::canonical([25.0, 25.0, 301.0, 25.0, 25.0])?;
    let b = PollutantVector::canonical([250.0, 250.0, 250.0, 250.0, 250.0])?;
    let c = PollutantVector::canonical([100.0, 100.0, 100.0, 100.0, 100.0])?;
    let d = PollutantVector::canonical([10.0, 10.0, 10.0, 10.0, 100.0])?;
    show("a", &a)?;
    show("b", &b)?;
    show("c", &c)?;
    show("d", &d)?;
    for (x, y, label) in [(&a, &b, "a vs b"), (&c, &d, "c vs d")] {
        let cmp = airquality::compare_vectors(x, y)?;
        println!(
            "{label}: max {:?}, mean {:?}, divergence {:?}",
            cmp.overall, cmp.bqi, cmp.divergence
        );
    }
    Ok(())
}
