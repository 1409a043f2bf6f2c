//! Analytic reference values: the a₂ ↔ ρ relation and the catalogue of small
//! knots used for classification and spot checks.

use serde::Serialize;

/// Second Conway coefficient from ρ: a₂ = (ρ + 1/12)/2.
pub fn conway_a2(rho: f64) -> f64 {
    (rho + 1.0 / 12.0) / 2.0
}

/// Analytic ρ of a knot class with integer a₂: ρ = 2a₂ − 1/12.
pub fn rho_from_a2(a2: f64) -> f64 {
    2.0 * a2 - 1.0 / 12.0
}

/// A knot class with known a₂ (Alexander–Briggs naming).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KnotClass {
    pub name: &'static str,
    pub a2: i64,
}

impl KnotClass {
    pub fn rho(&self) -> f64 {
        rho_from_a2(self.a2 as f64)
    }
}

/// Small prime knots through nine crossings (first knot of each crossing
/// number), plus the unknot.
pub const ANALYTIC_TABLE: &[KnotClass] = &[
    KnotClass { name: "0_1", a2: 0 },
    KnotClass { name: "3_1", a2: 1 },
    KnotClass { name: "4_1", a2: -1 },
    KnotClass { name: "5_1", a2: 3 },
    KnotClass { name: "6_1", a2: -2 },
    KnotClass { name: "7_1", a2: 6 },
    KnotClass { name: "8_1", a2: -3 },
    KnotClass { name: "9_1", a2: 10 },
];

pub fn analytic_rho(name: &str) -> Option<f64> {
    ANALYTIC_TABLE.iter().find(|k| k.name == name).map(|k| k.rho())
}

/// Catalogue entry whose analytic ρ is closest to the measurement, with the
/// distance. Distinct a₂ classes sit at least 2 apart, so a distance well
/// below 1 identifies the class.
pub fn nearest_class(rho: f64) -> (&'static KnotClass, f64) {
    ANALYTIC_TABLE
        .iter()
        .map(|k| (k, (k.rho() - rho).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("catalogue is non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a2_round_trip_is_exact_for_spotcheck_knots() {
        // These four must invert exactly in double precision.
        for (name, a2) in [("0_1", 0.0), ("3_1", 1.0), ("4_1", -1.0), ("5_1", 3.0)] {
            let rho = analytic_rho(name).unwrap();
            assert_eq!(conway_a2(rho), a2, "{name}");
        }
        assert_eq!(conway_a2(-1.0 / 12.0), 0.0);
    }

    #[test]
    fn catalogue_values() {
        let twelfths = [
            ("0_1", -1.0),
            ("3_1", 23.0),
            ("4_1", -25.0),
            ("5_1", 71.0),
            ("6_1", -49.0),
            ("7_1", 143.0),
            ("8_1", -73.0),
            ("9_1", 239.0),
        ];
        for (name, num) in twelfths {
            let rho = analytic_rho(name).unwrap();
            assert!((rho - num / 12.0).abs() < 1e-14, "{name}: {rho} vs {}", num / 12.0);
        }
        assert!(analytic_rho("10_1").is_none());
    }

    #[test]
    fn distinct_classes_separate_by_at_least_two() {
        for a in ANALYTIC_TABLE {
            for b in ANALYTIC_TABLE {
                if a.a2 != b.a2 {
                    assert!(
                        (a.rho() - b.rho()).abs() >= 2.0 - 1e-12,
                        "{} vs {}",
                        a.name,
                        b.name
                    );
                }
            }
        }
    }

    #[test]
    fn classification_by_nearest_value() {
        let (k, d) = nearest_class(1.88);
        assert_eq!(k.name, "3_1");
        assert!(d < 0.05);
        let (k, _) = nearest_class(-0.083);
        assert_eq!(k.name, "0_1");
        let (k, d) = nearest_class(-2.0847);
        assert_eq!(k.name, "4_1");
        assert!(d < 0.01);
    }
}
