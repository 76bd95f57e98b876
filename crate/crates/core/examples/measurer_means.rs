//! Several measurers each using their own unit: the arithmetic mean can
//! reverse a comparison after one measurer rescales, the geometric mean cannot.

use scalecheck::stats::MeasurementMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // rows are measurers, columns are subjects x and y
    let m = MeasurementMatrix::new(vec![vec![10.0, 12.0], vec![20.0, 15.0]])?;
    let scaled = m.rescale_rows(&[10.0, 1.0]);
    for (label, mm) in [("original", &m), ("measurer 0 x10", &scaled)] {
        println!(
            "{label:>15}: arithmetic x>y {}, geometric x>y {}",
            mm.arithmetic_greater(0, 1)?,
            mm.geometric_greater(0, 1)?
        );
    }
    Ok(())
}
