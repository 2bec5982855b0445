//! Logical clock in integer ticks so that cost sums are exact.

pub const TICKS_PER_UNIT: f64 = 1e9;

pub fn to_ticks(units: f64) -> u64 {
    (units.max(0.0) * TICKS_PER_UNIT).round() as u64
}

pub fn to_units(ticks: u64) -> f64 {
    ticks as f64 / TICKS_PER_UNIT
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        assert_eq!(to_ticks(0.002), 2_000_000);
        assert_eq!(to_units(to_ticks(1.25)), 1.25);
        assert_eq!(to_ticks(-1.0), 0);
    }
}
