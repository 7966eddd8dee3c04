//! Status-reporting dynamic bandwidth allocation.
//!
//! Each allocation cycle the OLT turns the previous cycle's occupancy
//! reports into per-T-CONT byte grants in two phases: assured bandwidth
//! first, then the remaining cycle capacity spread over still-hungry
//! T-CONTs by equal-share water-filling. Demand is smoothed with an
//! exponential moving average, which is the tunable that governs how fast
//! the allocator reacts to new load.
//!
//! All grant arithmetic is integer bytes, and ties (single leftover bytes)
//! always resolve in T-CONT id order, so allocation is exactly reproducible.

use std::collections::BTreeMap;

use crate::sim::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TcontId(pub u8);

#[derive(Clone, Copy, Debug)]
pub struct TContProfile {
    pub id: TcontId,
    /// Bandwidth the OLT must grant whenever demanded (T-CONT type 3:
    /// assured plus best-effort surplus).
    pub assured_bps: u64,
    /// Provisioned ceiling on the T-CONT's total bandwidth. Demand beyond
    /// what this allows per cycle is invisible to the allocator, so the
    /// smoothed demand of a capped T-CONT climbs toward its ceiling rather
    /// than toward its raw backlog. `u64::MAX` means uncapped.
    pub max_bps: u64,
    pub queue_capacity_bytes: u64,
}

impl TContProfile {
    pub fn max_bytes_per_cycle(&self, cycle_ns: u64) -> u64 {
        if self.max_bps == u64::MAX {
            u64::MAX
        } else {
            assured_bytes_per_cycle(self.max_bps, cycle_ns)
        }
    }
}

/// Assured bytes a profile is owed per allocation cycle, rounded to the
/// nearest byte. 150 Mb/s over a 125 us cycle comes to 2344 B.
pub fn assured_bytes_per_cycle(assured_bps: u64, cycle_ns: u64) -> u64 {
    let num = assured_bps as u128 * cycle_ns as u128;
    let den = 8_000_000_000u128;
    ((num + den / 2) / den) as u64
}

/// Usable upstream bytes per cycle at `capacity_bps` (8.64 Gb/s over
/// 125 us is exactly 135000 B).
pub fn cycle_capacity_bytes(capacity_bps: u64, cycle_ns: u64) -> u64 {
    assured_bytes_per_cycle(capacity_bps, cycle_ns)
}

#[derive(Clone, Copy, Debug)]
pub struct OccupancyReport {
    pub tcont: TcontId,
    pub reported_bytes: u64,
    pub at: SimTime,
}

#[derive(Clone, Debug, Default)]
pub struct GrantMap {
    pub cycle_start: SimTime,
    /// Byte grants in T-CONT id order.
    pub grants: Vec<(TcontId, u64)>,
}

impl GrantMap {
    pub fn get(&self, id: TcontId) -> u64 {
        self.grants
            .iter()
            .find(|(t, _)| *t == id)
            .map(|(_, g)| *g)
            .unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.grants.iter().map(|(_, g)| g).sum()
    }
}

#[derive(Clone, Debug)]
pub struct DbaState {
    /// EMA weight on the newest report, in (0, 1].
    pub ema_alpha: f64,
    pub cycle_ns: u64,
    smoothed: BTreeMap<TcontId, f64>,
    /// Cycles where assured commitments alone exceeded capacity. Nonzero
    /// means the profile set is misconfigured; grants are scaled to fit.
    pub overcommitted_cycles: u64,
}

impl DbaState {
    pub fn new(ema_alpha: f64, cycle_ns: u64) -> Self {
        assert!(
            ema_alpha > 0.0 && ema_alpha <= 1.0,
            "ema_alpha must be in (0, 1], got {ema_alpha}"
        );
        assert!(cycle_ns > 0);
        DbaState {
            ema_alpha,
            cycle_ns,
            smoothed: BTreeMap::new(),
            overcommitted_cycles: 0,
        }
    }

    pub fn smoothed_demand(&self, id: TcontId) -> f64 {
        self.smoothed.get(&id).copied().unwrap_or(0.0)
    }
}

/// Compute the grant map for one cycle. Missing reports count as zero
/// demand. The returned grants never exceed `cycle_capacity_bytes` in sum.
pub fn dba_allocate(
    reports: &[OccupancyReport],
    state: &mut DbaState,
    cycle_capacity_bytes: u64,
    profiles: &[TContProfile],
    cycle_start: SimTime,
) -> GrantMap {
    let mut ids: Vec<TcontId> = profiles.iter().map(|p| p.id).collect();
    ids.sort_unstable();

    // Clamp each report at the profile's per-cycle ceiling, then EMA, then
    // work with the rounded smoothed demand. Clamping before smoothing means
    // a deeply backlogged but rate-capped T-CONT ramps toward its ceiling at
    // the EMA's pace instead of jumping there on the strength of raw backlog.
    let mut demand: Vec<(TcontId, u64)> = Vec::with_capacity(profiles.len());
    for &id in &ids {
        let profile = profiles.iter().find(|p| p.id == id).expect("profile");
        let reported = reports
            .iter()
            .find(|r| r.tcont == id)
            .map(|r| r.reported_bytes)
            .unwrap_or(0)
            .min(profile.max_bytes_per_cycle(state.cycle_ns));
        let prev = state.smoothed.get(&id).copied().unwrap_or(0.0);
        let sm = state.ema_alpha * reported as f64 + (1.0 - state.ema_alpha) * prev;
        state.smoothed.insert(id, sm);
        demand.push((id, sm.round() as u64));
    }

    // Phase 1: assured bandwidth, capped by demand.
    let mut grants: Vec<(TcontId, u64)> = Vec::with_capacity(demand.len());
    for (id, d) in &demand {
        let profile = profiles.iter().find(|p| p.id == *id).expect("profile");
        let assured = assured_bytes_per_cycle(profile.assured_bps, state.cycle_ns);
        grants.push((*id, (*d).min(assured)));
    }
    let assured_total: u64 = grants.iter().map(|(_, g)| g).sum();

    if assured_total > cycle_capacity_bytes {
        // Assured commitments alone overflow the cycle: scale down
        // proportionally and flag the cycle.
        state.overcommitted_cycles += 1;
        let mut scaled: Vec<(TcontId, u64)> = grants
            .iter()
            .map(|(id, g)| {
                let s = (*g as u128 * cycle_capacity_bytes as u128 / assured_total as u128) as u64;
                (*id, s)
            })
            .collect();
        let mut leftover = cycle_capacity_bytes - scaled.iter().map(|(_, g)| g).sum::<u64>();
        for (idx, (_, g)) in scaled.iter_mut().enumerate() {
            if leftover == 0 {
                break;
            }
            if *g < grants[idx].1 {
                *g += 1;
                leftover -= 1;
            }
        }
        return GrantMap {
            cycle_start,
            grants: scaled,
        };
    }

    // Phase 2: water-fill the leftover capacity over residual demand.
    let remaining = cycle_capacity_bytes - assured_total;
    let residuals: Vec<(TcontId, u64)> = demand
        .iter()
        .zip(&grants)
        .map(|((id, d), (_, g))| (*id, d - g))
        .collect();
    let fills = water_fill(remaining, &residuals);
    for ((_, g), (_, extra)) in grants.iter_mut().zip(&fills) {
        *g += extra;
    }

    debug_assert!(grants.iter().map(|(_, g)| g).sum::<u64>() <= cycle_capacity_bytes);
    GrantMap {
        cycle_start,
        grants,
    }
}

/// Equal-share water-filling of `remaining` bytes over residual demands.
/// Equivalent to granting one byte at a time round-robin in id order, but
/// runs in O(n^2) instead of O(bytes).
pub fn water_fill(mut remaining: u64, residuals: &[(TcontId, u64)]) -> Vec<(TcontId, u64)> {
    let mut fills: Vec<(TcontId, u64)> = residuals.iter().map(|(id, _)| (*id, 0)).collect();
    let mut left: Vec<u64> = residuals.iter().map(|(_, r)| *r).collect();

    loop {
        let active: Vec<usize> = (0..left.len()).filter(|&i| left[i] > 0).collect();
        if active.is_empty() || remaining == 0 {
            break;
        }
        let share = remaining / active.len() as u64;
        if share == 0 {
            // Fewer bytes than takers: lowest ids win the stragglers.
            for &i in &active {
                if remaining == 0 {
                    break;
                }
                fills[i].1 += 1;
                left[i] -= 1;
                remaining -= 1;
            }
            break;
        }
        let saturated: Vec<usize> = active
            .iter()
            .copied()
            .filter(|&i| left[i] <= share)
            .collect();
        if saturated.is_empty() {
            // Everyone can absorb a full share; spread the division
            // remainder one byte each from the lowest id up.
            let extra = remaining - share * active.len() as u64;
            for (rank, &i) in active.iter().enumerate() {
                let mut give = share;
                if (rank as u64) < extra {
                    give += 1;
                }
                fills[i].1 += give;
                left[i] -= give;
            }
            break;
        }
        for &i in &saturated {
            let give = left[i];
            fills[i].1 += give;
            left[i] = 0;
            remaining -= give;
        }
    }
    fills
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profiles_2() -> Vec<TContProfile> {
        vec![
            TContProfile {
                id: TcontId(0),
                assured_bps: 150_000_000,
                max_bps: u64::MAX,
                queue_capacity_bytes: 1_000_000,
            },
            TContProfile {
                id: TcontId(1),
                assured_bps: 150_000_000,
                max_bps: u64::MAX,
                queue_capacity_bytes: 1_000_000,
            },
        ]
    }

    fn reports(a: u64, b: u64) -> Vec<OccupancyReport> {
        vec![
            OccupancyReport {
                tcont: TcontId(0),
                reported_bytes: a,
                at: SimTime::ZERO,
            },
            OccupancyReport {
                tcont: TcontId(1),
                reported_bytes: b,
                at: SimTime::ZERO,
            },
        ]
    }

    #[test]
    fn per_cycle_constants_match_hand_values() {
        assert_eq!(assured_bytes_per_cycle(150_000_000, 125_000), 2344);
        assert_eq!(cycle_capacity_bytes(8_640_000_000, 125_000), 135_000);
    }

    #[test]
    fn small_demand_is_granted_fully_and_surplus_goes_to_the_hungry() {
        let mut state = DbaState::new(1.0, 125_000);
        let g = dba_allocate(
            &reports(1000, 200_000),
            &mut state,
            135_000,
            &profiles_2(),
            SimTime::ZERO,
        );
        assert_eq!(g.get(TcontId(0)), 1000);
        assert_eq!(g.get(TcontId(1)), 134_000);
    }

    #[test]
    fn two_saturated_tconts_split_the_cycle_evenly() {
        let mut state = DbaState::new(1.0, 125_000);
        let g = dba_allocate(
            &reports(1_000_000_000, 1_000_000_000),
            &mut state,
            135_000,
            &profiles_2(),
            SimTime::ZERO,
        );
        assert_eq!(g.get(TcontId(0)), 67_500);
        assert_eq!(g.get(TcontId(1)), 67_500);
        assert_eq!(g.total(), 135_000);
    }

    #[test]
    fn zero_demand_zero_grants() {
        let mut state = DbaState::new(1.0, 125_000);
        let g = dba_allocate(&reports(0, 0), &mut state, 135_000, &profiles_2(), SimTime::ZERO);
        assert_eq!(g.total(), 0);
    }

    #[test]
    fn missing_report_counts_as_zero_demand() {
        let mut state = DbaState::new(1.0, 125_000);
        let only_b = vec![OccupancyReport {
            tcont: TcontId(1),
            reported_bytes: 5000,
            at: SimTime::ZERO,
        }];
        let g = dba_allocate(&only_b, &mut state, 135_000, &profiles_2(), SimTime::ZERO);
        assert_eq!(g.get(TcontId(0)), 0);
        assert_eq!(g.get(TcontId(1)), 5000);
    }

    #[test]
    fn ema_smooths_a_demand_step() {
        let mut state = DbaState::new(0.5, 125_000);
        let g1 = dba_allocate(&reports(1000, 0), &mut state, 135_000, &profiles_2(), SimTime::ZERO);
        assert_eq!(g1.get(TcontId(0)), 500);
        let g2 = dba_allocate(&reports(1000, 0), &mut state, 135_000, &profiles_2(), SimTime::ZERO);
        assert_eq!(g2.get(TcontId(0)), 750);
        // Demand vanishes; the smoothed value decays rather than dropping.
        let g3 = dba_allocate(&reports(0, 0), &mut state, 135_000, &profiles_2(), SimTime::ZERO);
        assert_eq!(g3.get(TcontId(0)), 375);
    }

    #[test]
    fn overcommitted_assured_scales_down_and_is_flagged() {
        // Two profiles promising more than the cycle can carry.
        let profiles = profiles_2();
        let mut state = DbaState::new(1.0, 125_000);
        let g = dba_allocate(
            &reports(1_000_000, 1_000_000),
            &mut state,
            3000, // artificially tiny cycle
            &profiles,
            SimTime::ZERO,
        );
        assert_eq!(g.total(), 3000);
        assert_eq!(state.overcommitted_cycles, 1);
        assert_eq!(g.get(TcontId(0)), 1500);
        assert_eq!(g.get(TcontId(1)), 1500);
    }

    #[test]
    fn rate_cap_clamps_demand_before_smoothing() {
        // 160 Mb/s over 250 us is 5000 B per cycle. A megabyte of backlog
        // must look like 5000 B to the EMA, so with alpha = 0.5 the first
        // grant is 2500, not half a megabyte.
        let profiles = vec![TContProfile {
            id: TcontId(0),
            assured_bps: 150_000_000,
            max_bps: 160_000_000,
            queue_capacity_bytes: 10_000_000,
        }];
        assert_eq!(profiles[0].max_bytes_per_cycle(250_000), 5000);
        let mut state = DbaState::new(0.5, 250_000);
        let one = |bytes| {
            vec![OccupancyReport {
                tcont: TcontId(0),
                reported_bytes: bytes,
                at: SimTime::ZERO,
            }]
        };
        let g1 = dba_allocate(&one(1_000_000), &mut state, 135_000, &profiles, SimTime::ZERO);
        assert_eq!(g1.get(TcontId(0)), 2500);
        // Second cycle: EMA is 3750, assured phase covers 4688 at this cycle
        // length, so the whole smoothed demand is granted.
        let g2 = dba_allocate(&one(1_000_000), &mut state, 135_000, &profiles, SimTime::ZERO);
        assert_eq!(g2.get(TcontId(0)), 3750);
        // The grant can never exceed the per-cycle ceiling no matter how
        // long the backlog persists.
        let mut g = 0;
        for _ in 0..200 {
            g = dba_allocate(&one(1_000_000), &mut state, 135_000, &profiles, SimTime::ZERO)
                .get(TcontId(0));
        }
        assert_eq!(g, 5000);
    }

    #[test]
    fn water_fill_respects_saturation_and_id_order() {
        let r = vec![(TcontId(0), 10), (TcontId(1), 1000), (TcontId(2), 1000)];
        let fills = water_fill(507, &r);
        // Id 0 saturates at 10; the rest split 497: 249 and 248, with the
        // odd byte to the lower id.
        assert_eq!(fills, vec![(TcontId(0), 10), (TcontId(1), 249), (TcontId(2), 248)]);
    }

    #[test]
    fn water_fill_never_overgrants() {
        let r = vec![(TcontId(0), 3), (TcontId(1), 2)];
        let fills = water_fill(100, &r);
        assert_eq!(fills.iter().map(|(_, f)| f).sum::<u64>(), 5);
    }
}
