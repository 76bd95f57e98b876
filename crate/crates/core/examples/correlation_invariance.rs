//! Rank correlations survive monotone rescaling of either variable; Pearson r
//! only survives affine ones.

use scalecheck::stats::{self, PairedSample};

fn summary(label: &str, s: &PairedSample) -> Result<(), stats::StatsError> {
    println!(
        "{label:>10}: tau {:+.6} rho {:+.6} r {:+.6}",
        stats::kendall_tau(s)?,
        stats::spearman_rho(s)?,
        stats::pearson_r(s)?
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sample = PairedSample::from_columns(
        &[1.2, 2.9, 3.1, 4.8, 5.0, 6.7, 7.4, 8.8],
        &[2.0, 2.6, 4.1, 3.9, 6.3, 6.0, 8.2, 9.9],
    )?;
    summary("raw", &sample)?;
    summary("affine", &sample.map(|x| 3.0 * x - 10.0, |y| 0.5 * y + 2.0))?;
    summary("monotone", &sample.map(f64::exp, |y| y.powi(3)))?;
    summary("reversed", &sample.map(|x| -x, |y| y))?;

    let reg = stats::linear_regression(&sample)?;
    println!(
        "y = {:.4} x + {:.4}, r^2 {:.4}",
        reg.slope, reg.intercept, reg.r_squared
    );
    Ok(())
}
