//! Days until the 100th exceedance, counted from January 1 and from October 1.

use chrono::{Datelike, NaiveDate};
use scalecheck::airquality::{self, DailyRecord, YearStart};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // every other day from January through September, plus every third day
    // of autumn 2022
    let start = NaiveDate::from_ymd_opt(2020, 10, 1).unwrap();
    let end = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
    let days: Vec<(NaiveDate, bool)> = start
        .iter_days()
        .take_while(|d| *d < end)
        .map(|d| {
            let autumn = d.year() == 2022 && d.month() >= 10 && d.ordinal() % 3 == 0;
            (d, (d.month() <= 9 && d.ordinal() % 2 == 0) || autumn)
        })
        .collect();
    let record = DailyRecord::from_days(&days)?;

    for year_start in [YearStart::JANUARY_1, YearStart::OCTOBER_1] {
        println!("year starting {year_start}:");
        let mut last: Option<u32> = None;
        for series in record.years(year_start) {
            let s = airquality::exceedance_stats(&series, 100)?;
            let change = match (last, s.days_elapsed) {
                (Some(a), Some(b)) => format!("{:+.2}%", 100.0 * airquality::relative_change(a as f64, b as f64)),
                _ => "-".into(),
            };
            println!(
                "  {}: {} exceedances, 100th on {:?}, day {:?} of {}, {change}",
                s.year_begins, s.total_days, s.first_date_reaching, s.days_elapsed, s.year_length
            );
            last = s.days_elapsed;
        }
    }
    Ok(())
}
