//! Power unit conversions. Everything internal is in watts.

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts / 1e-3).log10()
}

/// Decibels relative to one microwatt, the unit of the harvested-power plots.
pub fn watts_to_dbuw(watts: f64) -> f64 {
    10.0 * (watts / 1e-6).log10()
}

pub fn dbuw_to_watts(dbuw: f64) -> f64 {
    10f64.powf(dbuw / 10.0) * 1e-6
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_points() {
        assert!((dbm_to_watts(20.0) - 0.1).abs() < 1e-15);
        assert!((dbm_to_watts(-110.0) - 1e-14).abs() < 1e-28);
        assert!((dbm_to_watts(-75.0) - 3.162_277_660_168_379e-11).abs() < 1e-24);
        assert!((watts_to_dbuw(1e-6)).abs() < 1e-12);
        assert!((watts_to_dbuw(4.7e-6) - 6.720_978_579_357_175).abs() < 1e-9);
        // 13 dB rounds to the linear reliability threshold of 20.
        assert!((db_to_linear(13.0) - 20.0).abs() < 0.05);
    }

    #[test]
    fn conversions_round_trip() {
        for w in [1e-14, 3.3e-9, 2.5e-6, 0.1, 7.0] {
            assert!((dbm_to_watts(watts_to_dbm(w)) / w - 1.0).abs() < 1e-12);
            assert!((dbuw_to_watts(watts_to_dbuw(w)) / w - 1.0).abs() < 1e-12);
            // dB reporting agrees with watts to well below 1e-9 dB.
            let db = watts_to_dbuw(w);
            assert!((watts_to_dbuw(dbuw_to_watts(db)) - db).abs() < 1e-9);
        }
        assert!((linear_to_db(db_to_linear(7.5)) - 7.5).abs() < 1e-12);
    }
}
