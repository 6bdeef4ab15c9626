use num_complex::Complex64;

use crate::constellation::{LabeledConstellation, LabeledPoint};

/// Joint detection on the detector branch of the splitter.
///
/// `sample` is the post-split observation `sqrt(rho) y + n`. Returns the
/// point whose scaled value `sqrt(rho) v` lies closest to it; ties go to
/// the point listed first.
///
/// # Panics
///
/// If the constellation is empty.
pub fn jd_detect(sample: Complex64, c: &LabeledConstellation, rho: f64) -> &LabeledPoint {
    let scale = rho.sqrt();
    let mut best: Option<(&LabeledPoint, f64)> = None;
    for point in c.points() {
        let dist = (point.value * scale - sample).norm_sqr();
        if best.map_or(true, |(_, d)| dist < d) {
            best = Some((point, dist));
        }
    }
    best.expect("joint detection needs a non-empty constellation").0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::ActivityState;

    fn point(re: f64, mask: u32) -> LabeledPoint {
        LabeledPoint {
            value: Complex64::new(re, 0.0),
            label: ActivityState::from_mask(mask, 2),
        }
    }

    #[test]
    fn exact_point_is_found() {
        let c = LabeledConstellation::new(vec![point(-1.0, 1), point(0.0, 0), point(1.0, 1)]);
        let got = jd_detect(Complex64::new(0.5, 0.0), &c, 0.25);
        assert_eq!(got.value.re, 1.0);
        assert_eq!(jd_detect(Complex64::new(0.0, 0.0), &c, 0.25).label.mask(), 0);
    }

    #[test]
    fn ties_go_to_the_lower_index() {
        let c = LabeledConstellation::new(vec![point(1.0, 2), point(-1.0, 1)]);
        let got = jd_detect(Complex64::new(0.0, 0.0), &c, 1.0);
        assert_eq!(got.label.mask(), 2);
        let c = LabeledConstellation::new(vec![point(-1.0, 1), point(1.0, 2)]);
        assert_eq!(jd_detect(Complex64::new(0.0, 0.0), &c, 1.0).label.mask(), 1);
    }
}
