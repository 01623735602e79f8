//! The delay learning rule. On each post-synaptic spike, the arrival times of
//! contributing pre-synaptic spikes are pulled toward their mean: an early
//! arrival has its delay lengthened, a late one shortened, by a saturating
//! tanh of the deviation. Updates are computed from a frozen snapshot of the
//! arrival window and applied atomically, so one post spike never sees its
//! own updates.

use crate::error::{Error, Result};
use crate::topology::{NetworkTopology, DELAY_CEIL_MS, DELAY_FLOOR_MS};

/// Parameters of the delay rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlasticityConfig {
    /// Arrival window before a post spike within which arrivals participate (ms).
    pub window_ms: f64,
    /// Maximum delay change magnitude per event (ms); the tanh prefactor.
    pub amplitude_ms: f64,
    /// Deviation scale of the tanh (ms).
    pub slope_ms: f64,
    /// Lower clamp for trained delays (ms).
    pub delay_min_ms: f64,
    /// Upper clamp for trained delays (ms).
    pub delay_max_ms: f64,
}

impl Default for PlasticityConfig {
    fn default() -> Self {
        Self {
            window_ms: 10.0,
            amplitude_ms: 3.0,
            slope_ms: 3.0,
            delay_min_ms: DELAY_FLOOR_MS,
            delay_max_ms: DELAY_CEIL_MS,
        }
    }
}

impl PlasticityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_ms <= 0.0 || self.amplitude_ms <= 0.0 || self.slope_ms <= 0.0 {
            return Err(Error::Config(
                "plasticity window, amplitude and slope must be positive".into(),
            ));
        }
        if self.delay_min_ms >= self.delay_max_ms {
            return Err(Error::Config(format!(
                "delay clamp [{}, {}] is empty",
                self.delay_min_ms, self.delay_max_ms
            )));
        }
        Ok(())
    }
}

/// One planned delay change. `new_delay_ms` is the post-clamp target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayUpdate {
    /// Index into the topology's synapse list.
    pub synapse: usize,
    pub delta_ms: f64,
    pub new_delay_ms: f64,
}

impl DelayUpdate {
    pub fn new(synapse: usize, old_delay_ms: f64, delta_ms: f64, config: &PlasticityConfig) -> Self {
        Self {
            synapse,
            delta_ms,
            new_delay_ms: (old_delay_ms + delta_ms).clamp(config.delay_min_ms, config.delay_max_ms),
        }
    }
}

/// Select the arrivals that participate in an update event: those with
/// `0 <= post_spike_time - arrival < window`. The lag-zero boundary is
/// inclusive, the window edge exclusive.
pub fn collect_window(
    post_spike_time: f64,
    arrivals: &[(usize, f64)],
    window_ms: f64,
) -> Vec<(usize, f64)> {
    arrivals
        .iter()
        .copied()
        .filter(|&(_, t)| {
            let lag = post_spike_time - t;
            lag >= 0.0 && lag < window_ms
        })
        .collect()
}

/// Arithmetic mean of participating arrival times; `None` when the window is
/// empty (no update event).
pub fn mean_arrival(participants: &[(usize, f64)]) -> Option<f64> {
    if participants.is_empty() {
        return None;
    }
    Some(participants.iter().map(|&(_, t)| t).sum::<f64>() / participants.len() as f64)
}

/// Delay change for one arrival: `-amplitude * tanh((arrival - mean) / slope)`.
/// Strictly decreasing in the deviation and bounded by the amplitude.
pub fn delay_update(arrival_time: f64, mean: f64, config: &PlasticityConfig) -> f64 {
    -config.amplitude_ms * ((arrival_time - mean) / config.slope_ms).tanh()
}

/// Plan the updates for one post-spike event from a frozen participant
/// snapshot. Empty participants yield no updates.
pub fn plan_updates(
    topology: &NetworkTopology,
    participants: &[(usize, f64)],
    config: &PlasticityConfig,
) -> Vec<DelayUpdate> {
    let Some(mean) = mean_arrival(participants) else {
        return Vec::new();
    };
    participants
        .iter()
        .map(|&(syn, arrival)| {
            let delta = delay_update(arrival, mean, config);
            DelayUpdate::new(syn, topology.synapses[syn].delay, delta, config)
        })
        .collect()
}

/// Write planned updates into the topology.
pub fn apply_updates(topology: &mut NetworkTopology, updates: &[DelayUpdate]) -> Result<()> {
    for u in updates {
        let syn = topology
            .synapses
            .get_mut(u.synapse)
            .ok_or_else(|| Error::Fault(format!("delay update for unknown synapse {}", u.synapse)))?;
        syn.delay = u.new_delay_ms;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Synapse;

    fn cfg() -> PlasticityConfig {
        PlasticityConfig::default()
    }

    #[test]
    fn window_selects_half_open_lag_interval() {
        let arrivals = vec![(0, 41.0), (1, 45.0), (2, 49.0)];
        let got = collect_window(50.0, &arrivals, 10.0);
        assert_eq!(got.len(), 3);

        // Lag exactly equal to the window is excluded; lag zero is included.
        let arrivals = vec![(0, 39.9), (1, 40.0), (2, 40.1), (3, 50.0)];
        let got = collect_window(50.0, &arrivals, 10.0);
        assert_eq!(got, vec![(2, 40.1), (3, 50.0)]);

        assert!(collect_window(50.0, &[(0, 12.0)], 10.0).is_empty());
        assert!(collect_window(50.0, &[], 10.0).is_empty());
    }

    #[test]
    fn mean_arrival_examples() {
        assert_eq!(mean_arrival(&[(0, 41.0), (1, 45.0), (2, 49.0)]), Some(45.0));
        assert_eq!(mean_arrival(&[(7, 47.3)]), Some(47.3));
        assert_eq!(mean_arrival(&[(0, 40.0), (1, 50.0)]), Some(45.0));
        assert_eq!(mean_arrival(&[]), None);
    }

    #[test]
    fn delay_update_fixed_point_and_analytic_values() {
        assert_eq!(delay_update(45.0, 45.0, &cfg()), 0.0);
        // 3*tanh(1) and -3*tanh(2), frozen from direct evaluation.
        assert!((delay_update(42.0, 45.0, &cfg()) - 2.2847824678672946).abs() < 1e-12);
        assert!((delay_update(51.0, 45.0, &cfg()) - -2.8920827402274507).abs() < 1e-12);
        // Deep saturation stays strictly below the amplitude.
        let sat = delay_update(15.0, 45.0, &cfg());
        assert!(sat > 2.999999 && sat < 3.0, "saturated delta {sat}");
    }

    #[test]
    fn delta_is_bounded_monotone_and_contracting() {
        let c = cfg();
        let mut prev = f64::INFINITY;
        for i in 0..10_000 {
            let dev = -25.0 + 50.0 * (i as f64 / 9_999.0);
            let delta = delay_update(dev, 0.0, &c);
            assert!(delta.abs() < c.amplitude_ms, "unbounded at dev {dev}");
            assert!(delta < prev || dev == 0.0, "not strictly decreasing at {dev}");
            prev = delta;
            if dev != 0.0 {
                let next = dev + delta;
                assert!(next.abs() < dev.abs(), "overshoot at {dev}: {next}");
                assert_eq!(next.signum(), dev.signum(), "sign flip at {dev}");
            }
        }
    }

    #[test]
    fn single_participant_gets_zero_delta() {
        let topo = one_synapse_topology(20.0);
        let updates = plan_updates(&topo, &[(0, 12.5)], &cfg());
        assert_eq!(updates.len(), 1);
        assert_eq!(updates[0].delta_ms, 0.0);
        assert_eq!(updates[0].new_delay_ms, 20.0);
    }

    #[test]
    fn update_event_shrinks_arrival_variance() {
        let cases: Vec<Vec<f64>> = vec![
            vec![41.0, 45.0, 49.0],
            vec![40.0, 40.5, 41.0, 49.9],
            vec![45.0, 45.0, 45.0],
            vec![44.0, 46.0],
        ];
        for times in cases {
            let participants: Vec<(usize, f64)> = times.iter().copied().enumerate().collect();
            let mean = mean_arrival(&participants).unwrap();
            let var_before: f64 = times.iter().map(|t| (t - mean).powi(2)).sum();
            let var_after: f64 = participants
                .iter()
                .map(|&(_, t)| (t + delay_update(t, mean, &cfg()) - mean).powi(2))
                .sum();
            if var_before == 0.0 {
                assert_eq!(var_after, 0.0);
            } else {
                assert!(var_after < var_before, "{times:?}");
            }
        }
    }

    fn one_synapse_topology(delay: f64) -> NetworkTopology {
        NetworkTopology::new(
            vec![1, 1],
            vec![Synapse {
                pre: 0,
                post: 1,
                weight: 6.0,
                delay,
            }],
        )
        .unwrap()
    }

    #[test]
    fn apply_adds_and_clamps() {
        let c = cfg();
        let mut topo = one_synapse_topology(20.0);
        let up = DelayUpdate::new(0, 20.0, 2.2847824678672946, &c);
        apply_updates(&mut topo, &[up]).unwrap();
        assert!((topo.synapses[0].delay - 22.284782467867295).abs() < 1e-12);

        let mut topo = one_synapse_topology(1.5);
        let up = DelayUpdate::new(0, 1.5, -2.8920827402274507, &c);
        apply_updates(&mut topo, &[up]).unwrap();
        assert_eq!(topo.synapses[0].delay, 1.0);

        let mut topo = one_synapse_topology(59.0);
        let up = DelayUpdate::new(0, 59.0, 2.9, &c);
        apply_updates(&mut topo, &[up]).unwrap();
        assert_eq!(topo.synapses[0].delay, 60.0);
    }

    #[test]
    fn empty_update_list_changes_nothing() {
        let mut topo = one_synapse_topology(20.0);
        let before = topo.clone();
        apply_updates(&mut topo, &[]).unwrap();
        assert_eq!(topo, before);
    }

    #[test]
    fn unknown_synapse_is_a_fault() {
        let mut topo = one_synapse_topology(20.0);
        let up = DelayUpdate::new(5, 20.0, 0.1, &cfg());
        assert!(apply_updates(&mut topo, &[up]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        let bad = PlasticityConfig {
            window_ms: 0.0,
            ..cfg()
        };
        assert!(bad.validate().is_err());
        let bad = PlasticityConfig {
            delay_min_ms: 10.0,
            delay_max_ms: 5.0,
            ..cfg()
        };
        assert!(bad.validate().is_err());
    }
}
