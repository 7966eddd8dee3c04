//! Emulated aggregation network: a switch whose forwarding path adds a
//! configurable constant latency plus normally distributed jitter per
//! packet, independently per packet and per direction.
//!
//! Because each packet's transit time is drawn independently and packets do
//! not re-serialize on exit, a small enough inter-packet gap relative to the
//! jitter spread lets a later packet overtake an earlier one. This is the
//! only element in the pipeline that can reorder; every queue elsewhere is
//! strictly FIFO. For adjacent packets spaced g apart the overtake
//! probability is the tail mass of the difference of two independent
//! normals, which is how the jitter knob turns into a reordering knob.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;

use crate::sim::{sample_normal_secs, secs_to_ns, SimTime};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegradationParams {
    /// Constant component of the forwarding latency.
    pub mean_ns: u64,
    /// Standard deviation of the jitter around the mean.
    pub sigma_ns: u64,
    /// Lower clamp on the total transit time. Keeps the rare deep-left tail
    /// of the normal from going below the switch's minimum forwarding time.
    pub floor_ns: u64,
}

impl DegradationParams {
    pub fn off() -> Self {
        DegradationParams {
            mean_ns: 0,
            sigma_ns: 0,
            floor_ns: 0,
        }
    }

    pub fn is_off(&self) -> bool {
        self.mean_ns == 0 && self.sigma_ns == 0
    }
}

/// One direction of the degraded forwarding path.
pub struct Degrader {
    pub params: DegradationParams,
    rng: ChaCha8Rng,
    pub transited: u64,
}

impl Degrader {
    pub fn new(params: DegradationParams, rng: ChaCha8Rng) -> Self {
        Degrader {
            params,
            rng,
            transited: 0,
        }
    }

    /// When a packet entering now leaves the switch. Draws are independent
    /// per packet; there is no output queue to restore ordering.
    pub fn transit(&mut self, now: SimTime) -> SimTime {
        self.transited += 1;
        if self.params.is_off() {
            return now + self.params.floor_ns.max(self.params.mean_ns);
        }
        let delay_s = sample_normal_secs(
            &mut self.rng,
            self.params.mean_ns as f64 * 1e-9,
            self.params.sigma_ns as f64 * 1e-9,
        );
        let delay = secs_to_ns(delay_s.max(0.0)).max(self.params.floor_ns);
        now + delay
    }
}

/// VLAN-keyed mux/demux at the switch: which egress each tag belongs to.
/// Frames with an unknown or missing tag are dropped and counted.
#[derive(Debug, Default)]
pub struct SwitchPortMap {
    routes: BTreeMap<u16, usize>,
    pub misrouted: u64,
}

impl SwitchPortMap {
    pub fn assign(&mut self, vlan: u16, egress: usize) {
        self.routes.insert(vlan, egress);
    }

    pub fn route(&mut self, vlan: Option<u16>) -> Option<usize> {
        match vlan.and_then(|v| self.routes.get(&v).copied()) {
            Some(e) => Some(e),
            None => {
                self.misrouted += 1;
                None
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{RngHub, StreamId};

    fn degrader(mean_us: u64, sigma_us: u64, floor_us: u64) -> Degrader {
        let hub = RngHub::new(7);
        Degrader::new(
            DegradationParams {
                mean_ns: mean_us * 1000,
                sigma_ns: sigma_us * 1000,
                floor_ns: floor_us * 1000,
            },
            hub.stream(StreamId::DegradeDownlink),
        )
    }

    #[test]
    fn zero_sigma_is_a_pure_constant_shift() {
        let mut d = degrader(2000, 0, 10);
        let mut prev_exit = SimTime::ZERO;
        for k in 0..1000u64 {
            let entry = SimTime::from_ns(k * 64_000);
            let exit = d.transit(entry);
            assert_eq!(exit.as_ns(), entry.as_ns() + 2_000_000);
            assert!(exit.as_ns() > prev_exit.as_ns());
            prev_exit = exit;
        }
    }

    #[test]
    fn off_params_add_nothing() {
        let mut d = degrader(0, 0, 0);
        assert_eq!(d.transit(SimTime::from_us(5)).as_ns(), 5000);
    }

    #[test]
    fn floor_clamps_the_left_tail() {
        // Mean 0 with wide jitter: roughly half the raw draws are negative,
        // all of which must clamp to the floor.
        let mut d = degrader(0, 500, 25);
        for k in 0..10_000u64 {
            let entry = SimTime::from_ns(k * 1000);
            let exit = d.transit(entry);
            assert!(exit.as_ns() >= entry.as_ns() + 25_000);
        }
    }

    #[test]
    fn adjacent_overtake_rate_matches_gaussian_tail() {
        // Packets spaced g apart with i.i.d. normal jitter overtake with
        // probability Phi(-g / (sigma * sqrt(2))). Spot-check one operating
        // point well away from the floor clamp.
        use statrs::distribution::{ContinuousCDF, Normal};
        let gap_ns = 64_000.0;
        let sigma_ns = 660_000.0;
        let predicted = Normal::new(0.0, 1.0)
            .unwrap()
            .cdf(-gap_ns / (sigma_ns * std::f64::consts::SQRT_2));

        let mut d = degrader(2000, 660, 10);
        let n = 200_000u64;
        let mut overtakes = 0u64;
        let mut prev_exit = d.transit(SimTime::ZERO);
        for k in 1..n {
            let exit = d.transit(SimTime::from_ns(k * 64_000));
            if exit < prev_exit {
                overtakes += 1;
            }
            prev_exit = exit;
        }
        let observed = overtakes as f64 / (n - 1) as f64;
        assert!(
            (observed - predicted).abs() < 0.02,
            "observed {observed:.4}, predicted {predicted:.4}"
        );
    }

    #[test]
    fn unknown_vlan_is_counted_as_misrouted() {
        let mut map = SwitchPortMap::default();
        map.assign(100, 0);
        map.assign(300, 1);
        assert_eq!(map.route(Some(100)), Some(0));
        assert_eq!(map.route(Some(300)), Some(1));
        assert_eq!(map.route(Some(42)), None);
        assert_eq!(map.route(None), None);
        assert_eq!(map.misrouted, 2);
    }
}
