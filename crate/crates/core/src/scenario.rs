//! Demand and grid-capacity scenarios.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::instance::{Instance, PowerZone};

const ADOPTION_STREAM: u64 = 11;
const GRID_STREAM: u64 = 12;

/// Per-period bounds on the share of heavy-duty traffic that is
/// battery-electric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdoptionEnvelope {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl AdoptionEnvelope {
    /// Synthetic default: 5-10 % in the first period rising linearly to
    /// 30-60 % in the last.
    pub fn synthetic(periods: usize) -> Self {
        let frac = |t: usize| if periods > 1 { t as f64 / (periods - 1) as f64 } else { 0.0 };
        AdoptionEnvelope {
            min: (0..periods).map(|t| 0.05 + 0.25 * frac(t)).collect(),
            max: (0..periods).map(|t| 0.10 + 0.50 * frac(t)).collect(),
        }
    }

    pub fn constant(periods: usize, share: f64) -> Self {
        AdoptionEnvelope { min: vec![share; periods], max: vec![share; periods] }
    }

    pub fn midpoint(&self, t: usize) -> f64 {
        0.5 * (self.min[t] + self.max[t])
    }

    pub fn validate(&self, periods: usize) -> Result<(), ScenarioError> {
        if self.min.len() != periods || self.max.len() != periods {
            return Err(ScenarioError::EnvelopeLength { got: self.min.len().min(self.max.len()), want: periods });
        }
        for t in 0..periods {
            if !(0.0 <= self.min[t] && self.min[t] <= self.max[t] && self.max[t] <= 1.0) {
                return Err(ScenarioError::EnvelopeBounds(t));
            }
        }
        Ok(())
    }
}

/// Yearly grid-capacity increment per zone, drawn uniformly in MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridIncrements {
    pub min_mw: f64,
    pub max_mw: f64,
}

impl Default for GridIncrements {
    fn default() -> Self {
        GridIncrements { min_mw: 0.0, max_mw: 1.0 }
    }
}

impl GridIncrements {
    pub fn mean(&self) -> f64 {
        0.5 * (self.min_mw + self.max_mw)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub envelope: AdoptionEnvelope,
    pub grid: GridIncrements,
}

impl ScenarioConfig {
    pub fn synthetic(periods: usize) -> Self {
        ScenarioConfig { envelope: AdoptionEnvelope::synthetic(periods), grid: GridIncrements::default() }
    }
}

/// Stage-wise demand and charger limits. Period indices into the second-stage
/// tables are offsets from the first second-stage period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub seed: u64,
    pub generator: String,
    pub config: ScenarioConfig,
    pub first_stage_len: usize,
    pub periods: usize,
    pub probabilities: Vec<f64>,
    /// Adoption share per scenario and second-stage period.
    pub adoption: Vec<Vec<f64>>,
    /// Capacity increment MW per scenario, zone and second-stage period.
    pub increments: Vec<Vec<Vec<f64>>>,
    /// Zone capacity MW at the end of the first stage.
    pub first_stage_capacity: Vec<f64>,
    /// F̃ per OD pair, vehicle type and first-stage period.
    pub first_demand: Vec<Vec<Vec<f64>>>,
    /// L̃ per zone and first-stage period.
    pub first_limits: Vec<Vec<u32>>,
    /// F per scenario, OD pair, vehicle type and second-stage period.
    pub demand: Vec<Vec<Vec<Vec<f64>>>>,
    /// L per scenario, zone and second-stage period.
    pub limits: Vec<Vec<Vec<u32>>>,
}

pub fn fleet_share(v: usize, t: usize, mix: &[Vec<f64>]) -> f64 {
    mix[t][v]
}

pub fn demand(base_flow: f64, share: f64, adoption: f64) -> f64 {
    base_flow * adoption * share
}

/// Chargers a zone can connect in period `t`. `increments[τ]` is the
/// capacity added at the start of period τ.
pub fn zone_limit(zone: &PowerZone, t: usize, increments: &[f64]) -> u32 {
    let mw = zone.initial_capacity_mw + increments[..=t].iter().sum::<f64>();
    chargers_for(mw, zone.charger_kw)
}

/// Whole chargers that fit in `mw`; a small tolerance absorbs decimal
/// rounding such as 1.2 / 0.4.
pub fn chargers_for(mw: f64, charger_kw: f64) -> u32 {
    ((mw * 1000.0 / charger_kw) + 1e-9).floor().max(0.0) as u32
}

impl ScenarioSet {
    pub fn count(&self) -> usize {
        self.probabilities.len()
    }

    pub fn second_stage_len(&self) -> usize {
        self.periods - self.first_stage_len
    }

    /// Demand in any period: first-stage values for t in T₁, scenario `s`
    /// otherwise.
    pub fn flow(&self, s: usize, q: usize, v: usize, t: usize) -> f64 {
        if t < self.first_stage_len {
            self.first_demand[q][v][t]
        } else {
            self.demand[s][q][v][t - self.first_stage_len]
        }
    }

    pub fn limit(&self, s: usize, r: usize, t: usize) -> u32 {
        if t < self.first_stage_len {
            self.first_limits[r][t]
        } else {
            self.limits[s][r][t - self.first_stage_len]
        }
    }

    /// Total expected demand over all periods.
    pub fn expected_total_demand(&self) -> f64 {
        let first: f64 = self.first_demand.iter().flatten().flatten().sum();
        let second: f64 = (0..self.count())
            .map(|s| self.probabilities[s] * self.demand[s].iter().flatten().flatten().sum::<f64>())
            .sum();
        first + second
    }

    pub fn check(&self, inst: &Instance) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Mismatch(m));
        if self.periods != inst.horizon.len() || self.first_stage_len != inst.horizon.first_stage_len {
            return bad("horizon differs".into());
        }
        if self.count() == 0 {
            return Err(ScenarioError::EmptySet);
        }
        let (nq, nv, nr) = (inst.od_pairs.len(), inst.vehicle_types.len(), inst.power_zones.len());
        if self.first_demand.len() != nq || self.first_limits.len() != nr {
            return bad("first-stage tables have the wrong size".into());
        }
        for s in 0..self.count() {
            if self.demand[s].len() != nq
                || self.demand[s].iter().any(|d| d.len() != nv)
                || self.limits[s].len() != nr
            {
                return bad(format!("scenario {s} tables have the wrong size"));
            }
        }
        if (self.probabilities.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("probabilities do not sum to one".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario set serialises")
    }

    pub fn from_json(text: &str) -> Result<ScenarioSet, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }
}

fn first_stage_tables(inst: &Instance, cfg: &ScenarioConfig) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<u32>>, Vec<f64>) {
    let t1 = inst.horizon.first_stage_len;
    let demand_t1 = inst
        .od_pairs
        .iter()
        .map(|q| {
            (0..inst.vehicle_types.len())
                .map(|v| {
                    (0..t1)
                        .map(|t| demand(q.base_flow, fleet_share(v, t, &inst.fleet_mix), cfg.envelope.midpoint(t)))
                        .collect()
                })
                .collect()
        })
        .collect();
    let expected: Vec<f64> = (0..t1).map(|t| if t == 0 { 0.0 } else { cfg.grid.mean() }).collect();
    let limits_t1 = inst
        .power_zones
        .iter()
        .map(|z| (0..t1).map(|t| zone_limit(z, t, &expected)).collect())
        .collect();
    let cap_end = inst
        .power_zones
        .iter()
        .map(|z| z.initial_capacity_mw + expected.iter().sum::<f64>())
        .collect();
    (demand_t1, limits_t1, cap_end)
}

fn second_stage_tables(
    inst: &Instance,
    adoption: &[f64],
    increments: &[Vec<f64>],
    cap_end: &[f64],
) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<u32>>) {
    let t1 = inst.horizon.first_stage_len;
    let demand_t2 = inst
        .od_pairs
        .iter()
        .map(|q| {
            (0..inst.vehicle_types.len())
                .map(|v| {
                    adoption
                        .iter()
                        .enumerate()
                        .map(|(k, &e)| demand(q.base_flow, fleet_share(v, t1 + k, &inst.fleet_mix), e))
                        .collect()
                })
                .collect()
        })
        .collect();
    let limits = inst
        .power_zones
        .iter()
        .zip(increments)
        .zip(cap_end)
        .map(|((z, inc), &cap)| {
            let mut mw = cap;
            inc.iter()
                .map(|d| {
                    mw += d;
                    chargers_for(mw, z.charger_kw)
                })
                .collect()
        })
        .collect();
    (demand_t2, limits)
}

/// Sample `count` equiprobable scenarios. Adoption shares and grid
/// increments come from separate ChaCha8 streams of `seed`. Second-stage
/// zone capacity starts from the first-stage capacity, which keeps limits
/// nondecreasing across the stage boundary.
pub fn build_scenarios(inst: &Instance, count: usize, seed: u64, cfg: &ScenarioConfig) -> Result<ScenarioSet, ScenarioError> {
    if count == 0 {
        return Err(ScenarioError::EmptySet);
    }
    let periods = inst.horizon.len();
    cfg.envelope.validate(periods)?;
    if !(0.0 <= cfg.grid.min_mw && cfg.grid.min_mw <= cfg.grid.max_mw) {
        return Err(ScenarioError::Mismatch("grid increment range is invalid".into()));
    }
    let t1 = inst.horizon.first_stage_len;
    let t2 = inst.horizon.second_stage();
    let mut rng_e = ChaCha8Rng::seed_from_u64(seed);
    rng_e.set_stream(ADOPTION_STREAM);
    let mut rng_g = ChaCha8Rng::seed_from_u64(seed);
    rng_g.set_stream(GRID_STREAM);
    let uniform = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| if hi > lo { rng.gen_range(lo..hi) } else { lo };

    let adoption: Vec<Vec<f64>> = (0..count)
        .map(|_| t2.clone().map(|t| uniform(&mut rng_e, cfg.envelope.min[t], cfg.envelope.max[t])).collect())
        .collect();
    let increments: Vec<Vec<Vec<f64>>> = (0..count)
        .map(|_| {
            inst.power_zones
                .iter()
                .map(|_| t2.clone().map(|_| uniform(&mut rng_g, cfg.grid.min_mw, cfg.grid.max_mw)).collect())
                .collect()
        })
        .collect();

    let (first_demand, first_limits, cap_end) = first_stage_tables(inst, cfg);
    let mut demand = Vec::with_capacity(count);
    let mut limits = Vec::with_capacity(count);
    for s in 0..count {
        let (d, l) = second_stage_tables(inst, &adoption[s], &increments[s], &cap_end);
        demand.push(d);
        limits.push(l);
    }
    Ok(ScenarioSet {
        seed,
        generator: "chacha8".into(),
        config: cfg.clone(),
        first_stage_len: t1,
        periods,
        probabilities: vec![1.0 / count as f64; count],
        adoption,
        increments,
        first_stage_capacity: cap_end,
        first_demand,
        first_limits,
        demand,
        limits,
    })
}

/// One scenario carrying the probability-weighted mean of every random
/// parameter. Mean charger limits are rounded down.
pub fn expected_value_scenario(set: &ScenarioSet) -> ScenarioSet {
    let n = set.count();
    let p = &set.probabilities;
    if n == 1 {
        let mut one = set.clone();
        one.probabilities = vec![1.0];
        return one;
    }
    fn weighted<'a>(p: &[f64], f: impl Fn(usize) -> &'a [f64]) -> Vec<f64> {
        (0..f(0).len()).map(|k| (0..p.len()).map(|s| p[s] * f(s)[k]).sum()).collect()
    }
    let adoption = weighted(p, |s| &set.adoption[s]);
    let nr = set.first_limits.len();
    let increments: Vec<Vec<f64>> = (0..nr).map(|r| weighted(p, |s| &set.increments[s][r])).collect();
    let demand: Vec<Vec<Vec<f64>>> = (0..set.first_demand.len())
        .map(|q| {
            (0..set.first_demand[q].len())
                .map(|v| weighted(p, |s| &set.demand[s][q][v]))
                .collect()
        })
        .collect();
    let limits: Vec<Vec<u32>> = (0..nr)
        .map(|r| {
            (0..set.second_stage_len())
                .map(|k| {
                    let m: f64 = (0..n).map(|s| p[s] * set.limits[s][r][k] as f64).sum();
                    (m + 1e-9).floor() as u32
                })
                .collect()
        })
        .collect();
    ScenarioSet {
        seed: set.seed,
        generator: set.generator.clone(),
        config: set.config.clone(),
        first_stage_len: set.first_stage_len,
        periods: set.periods,
        probabilities: vec![1.0],
        adoption: vec![adoption],
        increments: vec![increments],
        first_stage_capacity: set.first_stage_capacity.clone(),
        first_demand: set.first_demand.clone(),
        first_limits: set.first_limits.clone(),
        demand: vec![demand],
        limits: vec![limits],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{synth_instance, SynthSpec};
    use approx::assert_abs_diff_eq;

    fn zone(mw: f64) -> PowerZone {
        PowerZone { id: "r".into(), stations: vec![], initial_capacity_mw: mw, charger_kw: 400.0 }
    }

    #[test]
    fn shares_follow_the_fleet_mix() {
        let mix = crate::instance::default_fleet_mix(6);
        assert_abs_diff_eq!(fleet_share(0, 0, &mix), 0.45, epsilon = 1e-12);
        assert_abs_diff_eq!(fleet_share(3, 5, &mix), 0.25, epsilon = 1e-12);
        for row in &mix {
            assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn demand_arithmetic() {
        assert_abs_diff_eq!(demand(10.0, 0.45, 0.2), 0.9, epsilon = 1e-12);
        assert_eq!(demand(10.0, 0.45, 0.0), 0.0);
        let mix = crate::instance::default_fleet_mix(4);
        let total: f64 = (0..4).map(|v| demand(7.0, fleet_share(v, 2, &mix), 1.0)).sum();
        assert_abs_diff_eq!(total, 7.0, epsilon = 1e-12);
    }

    #[test]
    fn zone_limits() {
        assert_eq!(zone_limit(&zone(1.0), 0, &[0.0]), 2);
        assert_eq!(zone_limit(&zone(0.0), 0, &[0.0]), 0);
        let inc = [0.0, 0.4];
        assert_eq!(zone_limit(&zone(0.8), 0, &inc), 2);
        assert_eq!(zone_limit(&zone(0.8), 1, &inc), 3);
    }

    fn inst() -> Instance {
        synth_instance(&SynthSpec { junctions: 10, od_nodes: 3, stations: 3, ..SynthSpec::default() }, 5).unwrap()
    }

    #[test]
    fn deterministic_and_monotone() {
        let i = inst();
        let cfg = ScenarioConfig::synthetic(i.horizon.len());
        let a = build_scenarios(&i, 20, 9, &cfg).unwrap();
        assert_eq!(a, build_scenarios(&i, 20, 9, &cfg).unwrap());
        assert_abs_diff_eq!(a.probabilities.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        for s in 0..a.count() {
            for r in 0..i.power_zones.len() {
                let path: Vec<u32> = (0..a.periods).map(|t| a.limit(s, r, t)).collect();
                assert!(path.windows(2).all(|w| w[0] <= w[1]), "{path:?}");
            }
        }
    }

    #[test]
    fn degenerate_single_scenario_is_its_own_mean() {
        let i = inst();
        let cfg = ScenarioConfig {
            envelope: AdoptionEnvelope::constant(i.horizon.len(), 0.3),
            grid: GridIncrements { min_mw: 0.5, max_mw: 0.5 },
        };
        let a = build_scenarios(&i, 1, 3, &cfg).unwrap();
        assert_eq!(expected_value_scenario(&a), a);
    }

    #[test]
    fn mean_of_two_limits() {
        let i = inst();
        let cfg = ScenarioConfig::synthetic(i.horizon.len());
        let mut a = build_scenarios(&i, 2, 3, &cfg).unwrap();
        a.limits[0][0][0] = 2;
        a.limits[1][0][0] = 4;
        assert_eq!(expected_value_scenario(&a).limits[0][0][0], 3);
    }

    #[test]
    fn mean_demand_matches_brute_force() {
        let i = inst();
        let cfg = ScenarioConfig::synthetic(i.horizon.len());
        let a = build_scenarios(&i, 7, 21, &cfg).unwrap();
        let ev = expected_value_scenario(&a);
        for q in 0..i.od_pairs.len() {
            for v in 0..i.vehicle_types.len() {
                for k in 0..a.second_stage_len() {
                    let mut sum = 0.0;
                    for s in 0..7 {
                        sum += a.demand[s][q][v][k];
                    }
                    assert_abs_diff_eq!(ev.demand[0][q][v][k], sum / 7.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn sample_mean_near_midpoint() {
        let i = inst();
        let cfg = ScenarioConfig::synthetic(i.horizon.len());
        let a = build_scenarios(&i, 300, 17, &cfg).unwrap();
        for (k, t) in i.horizon.second_stage().enumerate() {
            let mean = (0..300).map(|s| a.adoption[s][k]).sum::<f64>() / 300.0;
            let width = cfg.envelope.max[t] - cfg.envelope.min[t];
            let se = width / 12f64.sqrt() / 300f64.sqrt();
            assert!((mean - cfg.envelope.midpoint(t)).abs() < 3.0 * se);
        }
    }

    #[test]
    fn adoption_and_grid_draws_uncorrelated() {
        let i = inst();
        let cfg = ScenarioConfig::synthetic(i.horizon.len());
        let a = build_scenarios(&i, 200, 4, &cfg).unwrap();
        let xs: Vec<f64> = (0..200).map(|s| a.adoption[s][0]).collect();
        let ys: Vec<f64> = (0..200).map(|s| a.increments[s][0][0]).collect();
        let mx = xs.iter().sum::<f64>() / 200.0;
        let my = ys.iter().sum::<f64>() / 200.0;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        assert!((cov / (vx * vy).sqrt()).abs() < 0.2);
    }
}
