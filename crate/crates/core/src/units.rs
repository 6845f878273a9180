//! Time base. Everything inside the engine is in seconds; the year is the
//! 8766-hour year, so three nines of availability is 8.766 h of downtime.

pub const SECOND: f64 = 1.0;
pub const MINUTE: f64 = 60.0;
pub const HOUR: f64 = 3600.0;
pub const DAY: f64 = 24.0 * HOUR;
pub const YEAR: f64 = 8766.0 * HOUR;
pub const MONTH: f64 = YEAR / 12.0;

/// Converts an event count per year into a rate per second.
pub fn per_year(count: f64) -> f64 {
    count / YEAR
}

pub fn per_month(count: f64) -> f64 {
    count / MONTH
}

pub fn per_day(count: f64) -> f64 {
    count / DAY
}

pub fn per_hour(count: f64) -> f64 {
    count / HOUR
}

/// Rate of an exponential delay with the given mean duration in seconds.
pub fn rate_from_mean(seconds: f64) -> f64 {
    1.0 / seconds
}
