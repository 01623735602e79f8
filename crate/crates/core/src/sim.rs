//! Clock-driven trial simulation.
//!
//! One trial presents a latency-coded input pattern to a network for a fixed
//! duration. Input-layer neurons are pure spike sources; the other layers run
//! Izhikevich dynamics. Spikes travel along synapses with per-synapse delays
//! and arrive as instantaneous charge deposits: each arrival contributes its
//! weight as one millisecond's worth of input current, concentrated in the
//! arrival step (so a weight of 6 deflects the membrane by about 6 mV
//! regardless of the integration step). Delayed deliveries sit in a ring
//! buffer indexed by step, sized to the delay horizon.
//!
//! Per-step processing order is fixed and pinned by golden-record tests:
//! (1) deliver all arrivals due this step, (2) advance all neuron states,
//! (3) record spikes and schedule their deliveries, (4) apply plasticity
//! updates triggered by this step's spikes.

use std::io::Write;

use crate::encoder::InputSpikePattern;
use crate::error::{Error, Result};
use crate::neuron::{self, IzhikevichParams, NeuronState};
use crate::plasticity::{self, PlasticityConfig};
use crate::topology::{NetworkTopology, Synapse};

/// One spike: emitting neuron and grid-aligned time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeEvent {
    pub neuron: u32,
    pub time_ms: f64,
}

/// All spikes of one trial, sorted by (time, neuron index). Includes the
/// input-layer source spikes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeRecord {
    pub events: Vec<SpikeEvent>,
    pub duration_ms: f64,
}

impl SpikeRecord {
    /// Spikes of the given neuron, in time order.
    pub fn times_of(&self, neuron: u32) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| e.neuron == neuron)
            .map(|e| e.time_ms)
            .collect()
    }

    /// Raster dump: `time_ms neuron_index` lines sorted by time.
    pub fn write_raster<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in &self.events {
            writeln!(w, "{:.3} {}", e.time_ms, e.neuron)?;
        }
        Ok(())
    }
}

/// A spike in flight toward its post-synaptic neuron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendingDelivery {
    /// Index into the topology's synapse list.
    pub synapse: usize,
    /// Emission time plus the delay at emission; plasticity reads this
    /// unrounded value.
    pub arrival_time_exact_ms: f64,
    /// Grid step at which the drive is applied.
    pub arrival_step: u64,
}

/// Compute when a spike crossing `synapse` arrives. The exact arrival is the
/// spike time plus the current delay; the delivery step rounds to the nearest
/// grid step, ties to even.
pub fn schedule_delivery(
    spike: &SpikeEvent,
    synapse_index: usize,
    synapse: &Synapse,
    dt_ms: f64,
) -> PendingDelivery {
    let arrival = spike.time_ms + synapse.delay;
    PendingDelivery {
        synapse: synapse_index,
        arrival_time_exact_ms: arrival,
        arrival_step: (arrival / dt_ms).round_ties_even() as u64,
    }
}

/// Trial-level simulation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig {
    pub duration_ms: f64,
    pub dt_ms: f64,
    pub neuron: IzhikevichParams,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            duration_ms: 200.0,
            dt_ms: neuron::DT_MS,
            neuron: IzhikevichParams::regular_spiking(),
        }
    }
}

/// Run one trial. All neuron states start at rest and nothing but synapse
/// delays survives the call. With `plasticity` set, every non-input spike
/// triggers a delay update event over the arrivals of the preceding window,
/// applied to the topology immediately (in-flight deliveries keep their
/// scheduled arrival).
pub fn run_trial(
    topology: &mut NetworkTopology,
    input: &InputSpikePattern,
    config: &TrialConfig,
    plasticity: Option<&PlasticityConfig>,
) -> Result<SpikeRecord> {
    if config.dt_ms <= 0.0 || config.duration_ms <= 0.0 {
        return Err(Error::Config("trial duration and dt must be positive".into()));
    }
    if let Some(p) = plasticity {
        p.validate()?;
    }
    let dt = config.dt_ms;
    let n_steps = (config.duration_ms / dt).round() as u64;
    let n_inputs = topology.layer_sizes()[0];

    // Input spikes snapped to the grid, bucketed by step.
    let mut input_steps: Vec<(u64, u32)> = Vec::with_capacity(input.spikes.len());
    {
        let mut seen = vec![false; n_inputs];
        for &(neuron_idx, t) in &input.spikes {
            if (neuron_idx as usize) >= n_inputs {
                return Err(Error::Config(format!(
                    "input spike for neuron {neuron_idx}, but the input layer has {n_inputs} neurons"
                )));
            }
            if seen[neuron_idx as usize] {
                return Err(Error::Config(format!(
                    "multiple input spikes for neuron {neuron_idx}"
                )));
            }
            seen[neuron_idx as usize] = true;
            if !(0.0..config.duration_ms).contains(&t) {
                return Err(Error::Config(format!(
                    "input spike at {t} ms outside the {} ms trial",
                    config.duration_ms
                )));
            }
            let step = (t / dt).round_ties_even() as u64;
            if step >= n_steps {
                return Err(Error::Config(format!("input spike at {t} ms rounds past the trial end")));
            }
            input_steps.push((step, neuron_idx));
        }
    }
    input_steps.sort_unstable();

    // Outgoing adjacency.
    let num_neurons = topology.num_neurons();
    let mut outgoing: Vec<Vec<u32>> = vec![Vec::new(); num_neurons];
    let mut max_delay: f64 = 0.0;
    for (i, s) in topology.synapses.iter().enumerate() {
        outgoing[s.pre as usize].push(i as u32);
        max_delay = max_delay.max(s.delay);
    }
    if let Some(p) = plasticity {
        max_delay = max_delay.max(p.delay_max_ms);
    }

    // Delivery ring sized to the horizon; scheduling more than
    // `horizon - 1` steps ahead is a fault.
    let horizon = (max_delay / dt).ceil() as u64 + 2;
    let mut ring: Vec<Vec<PendingDelivery>> = vec![Vec::new(); horizon as usize];

    let mut states: Vec<NeuronState> = vec![neuron::rest_state(&config.neuron); num_neurons];
    let mut drive: Vec<f64> = vec![0.0; num_neurons];
    // Most recent arrival per synapse, per post-synaptic neuron.
    let mut arrival_log: Vec<Vec<(usize, f64)>> = vec![Vec::new(); num_neurons];

    let mut events: Vec<SpikeEvent> = Vec::new();
    let mut fired: Vec<u32> = Vec::new();
    let mut slot_scratch: Vec<PendingDelivery> = Vec::new();
    let mut input_cursor = 0usize;

    let schedule = |spike: &SpikeEvent,
                        topology: &NetworkTopology,
                        outgoing: &[Vec<u32>],
                        ring: &mut Vec<Vec<PendingDelivery>>,
                        now: u64|
     -> Result<()> {
        for &syn_idx in &outgoing[spike.neuron as usize] {
            let syn = &topology.synapses[syn_idx as usize];
            let d = schedule_delivery(spike, syn_idx as usize, syn, dt);
            if d.arrival_step <= now || d.arrival_step - now >= horizon {
                return Err(Error::Fault(format!(
                    "delivery at step {} outside the horizon of step {now}",
                    d.arrival_step
                )));
            }
            ring[(d.arrival_step % horizon) as usize].push(d);
        }
        Ok(())
    };

    for step in 0..n_steps {
        // 1. Deliveries due this step.
        let slot = (step % horizon) as usize;
        std::mem::swap(&mut ring[slot], &mut slot_scratch);
        for d in &slot_scratch {
            let syn = &topology.synapses[d.synapse];
            drive[syn.post as usize] += syn.weight;
            let log = &mut arrival_log[syn.post as usize];
            match log.iter_mut().find(|(s, _)| *s == d.synapse) {
                Some(entry) => entry.1 = d.arrival_time_exact_ms,
                None => log.push((d.synapse, d.arrival_time_exact_ms)),
            }
        }
        slot_scratch.clear();

        // 2. Advance the dynamic (non-input) neurons. `drive` holds charge
        // (weight x 1 ms); dividing by dt turns it into this step's current.
        fired.clear();
        let spike_time = (step + 1) as f64 * dt;
        for i in n_inputs..num_neurons {
            let (next, did_fire) = neuron::step(states[i], &config.neuron, drive[i] / dt, dt)?;
            states[i] = next;
            drive[i] = 0.0;
            if did_fire {
                fired.push(i as u32);
            }
        }

        // 3. Record and schedule this step's spikes: input sources first.
        while input_cursor < input_steps.len() && input_steps[input_cursor].0 == step {
            let (_, neuron_idx) = input_steps[input_cursor];
            let spike = SpikeEvent {
                neuron: neuron_idx,
                time_ms: step as f64 * dt,
            };
            events.push(spike);
            schedule(&spike, topology, &outgoing, &mut ring, step)?;
            input_cursor += 1;
        }
        for &neuron_idx in &fired {
            let spike = SpikeEvent {
                neuron: neuron_idx,
                time_ms: spike_time,
            };
            events.push(spike);
            schedule(&spike, topology, &outgoing, &mut ring, step)?;
        }

        // 4. Plasticity events for this step's non-input spikes.
        if let Some(p) = plasticity {
            for &neuron_idx in &fired {
                let mut log = arrival_log[neuron_idx as usize].clone();
                log.sort_unstable_by_key(|&(syn, _)| syn);
                let participants = plasticity::collect_window(spike_time, &log, p.window_ms);
                let updates = plasticity::plan_updates(topology, &participants, p);
                plasticity::apply_updates(topology, &updates)?;
            }
        }
    }

    events.sort_by(|a, b| {
        a.time_ms
            .total_cmp(&b.time_ms)
            .then(a.neuron.cmp(&b.neuron))
    });
    Ok(SpikeRecord {
        events,
        duration_ms: config.duration_ms,
    })
}
