//! Emission totals, tolerance-weighted indices, population weighting, and the
//! air stress index.

use scalecheck::airquality::{self, CityReading, EmissionRecord, ToleranceTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let records = vec![
        EmissionRecord::new("CO", "2023", "plant", 7800.0, "units")?,
        EmissionRecord::new("SO2", "2023", "plant", 266.0, "units")?,
        EmissionRecord::new("CO", "2023", "road", 100.0, "units")?,
        EmissionRecord::new("SO2", "2023", "road", 532.0, "units")?,
    ];
    let tol = ToleranceTable::reference();
    println!("tolerances: {} ({})", tol.name, tol.identity());
    for source in ["plant", "road"] {
        println!(
            "{source}: A = {}, pindex = {:.4}",
            airquality::index_a(&records, "2023", source)?,
            airquality::pindex(&records, &tol, "2023", source)?
        );
    }

    let cities = [
        CityReading::new("north", 20.0, 2_000_000)?,
        CityReading::new("south", 40.0, 500_000)?,
        CityReading::new("east", 10.0, 1_500_000)?,
    ];
    println!(
        "population-weighted PM2.5: {:.3}",
        airquality::population_weighted(&cities)?
    );

    let refs = [35, 35, 25];
    let then = airquality::asi(&[35, 35, 25], &refs)?;
    let now = airquality::asi(&[42, 30, 25], &refs)?;
    println!(
        "ASI {then:.3} -> {now:.3} ({:+.1}%)",
        100.0 * airquality::relative_change(then, now)
    );
    Ok(())
}
