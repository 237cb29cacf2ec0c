//! Arc energy use and charging durations.

use crate::instance::{EnergySettings, RoadArc, VehicleType};

pub const GRAVITY: f64 = 9.81;

const JOULES_PER_KWH: f64 = 3.6e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    pub horizontal_kwh_per_km: f64,
    pub mass_t: f64,
    pub gravity: f64,
    pub regen_efficiency: f64,
    pub charger_kw: f64,
}

impl EnergyParams {
    pub fn for_vehicle(v: &VehicleType, settings: &EnergySettings, charger_kw: f64) -> Self {
        EnergyParams {
            horizontal_kwh_per_km: v.consumption_kwh_per_km,
            mass_t: v.mass_t,
            gravity: GRAVITY,
            regen_efficiency: settings.regen_efficiency,
            charger_kw,
        }
    }
}

/// Net traction energy over one arc, floored at zero. Ferries carry the
/// truck for free.
pub fn arc_energy(arc: &RoadArc, p: &EnergyParams) -> f64 {
    if arc.is_ferry() {
        return 0.0;
    }
    let mg = p.mass_t * 1000.0 * p.gravity;
    let e = p.horizontal_kwh_per_km * arc.length_km + mg * arc.climb_m / JOULES_PER_KWH
        - p.regen_efficiency * mg * arc.descent_m / JOULES_PER_KWH;
    e.max(0.0)
}

/// Hours needed to deliver `energy_kwh` at the charger rating.
pub fn charge_duration(energy_kwh: f64, p: &EnergyParams) -> f64 {
    debug_assert!(energy_kwh >= 0.0);
    energy_kwh / p.charger_kw
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::ArcCategory;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn arc(len: f64, climb: f64, descent: f64, cat: ArcCategory) -> RoadArc {
        RoadArc {
            tail: "a".into(),
            head: "b".into(),
            category: cat,
            length_km: len,
            speed_kmh: 60.0,
            climb_m: climb,
            descent_m: descent,
        }
    }

    fn params(eta: f64) -> EnergyParams {
        EnergyParams {
            horizontal_kwh_per_km: 1.5,
            mass_t: 30.0,
            gravity: GRAVITY,
            regen_efficiency: eta,
            charger_kw: 400.0,
        }
    }

    #[test]
    fn flat_arc() {
        assert_abs_diff_eq!(arc_energy(&arc(100.0, 0.0, 0.0, ArcCategory::Road), &params(0.5)), 150.0, epsilon = 1e-12);
    }

    #[test]
    fn ferry_is_free() {
        assert_eq!(arc_energy(&arc(80.0, 300.0, 0.0, ArcCategory::Ferry), &params(0.5)), 0.0);
    }

    #[test]
    fn climb_term() {
        let e = arc_energy(&arc(10.0, 100.0, 0.0, ArcCategory::Road), &params(0.0));
        assert_abs_diff_eq!(e, 23.175, epsilon = 1e-9);
    }

    #[test]
    fn steep_descent_floors_at_zero() {
        assert_eq!(arc_energy(&arc(1.0, 0.0, 500.0, ArcCategory::Road), &params(1.0)), 0.0);
    }

    #[test]
    fn durations() {
        let p = params(0.5);
        assert_abs_diff_eq!(charge_duration(400.0, &p), 1.0);
        assert_eq!(charge_duration(0.0, &p), 0.0);
        assert_abs_diff_eq!(charge_duration(100.0, &p), 0.25);
    }

    proptest! {
        #[test]
        fn monotone(len in 0.1..500.0f64, climb in 0.0..2000.0f64, descent in 0.0..2000.0f64,
                    dl in 0.0..50.0f64, dc in 0.0..200.0f64, eta in 0.0..1.0f64) {
            let p = params(eta);
            let base = arc_energy(&arc(len, climb, descent, ArcCategory::Road), &p);
            prop_assert!(arc_energy(&arc(len + dl, climb, descent, ArcCategory::Road), &p) >= base);
            prop_assert!(arc_energy(&arc(len, climb + dc, descent, ArcCategory::Road), &p) >= base);
            prop_assert!(arc_energy(&arc(len, climb, descent + dc, ArcCategory::Road), &p) <= base);
        }

        #[test]
        fn duration_is_linear(a in 0.0..1000.0f64, b in 0.0..1000.0f64) {
            let p = params(0.5);
            prop_assert!((charge_duration(a + b, &p) - charge_duration(a, &p) - charge_duration(b, &p)).abs() < 1e-12);
        }
    }
}
