//! Reference simulations used to check [`BandwidthShareModel`].
//!
//! Both are deliberately naive and share no allocation code with the model:
//!
//! * [`global_recompute_oracle`] is event driven like the model but, on every
//!   start and completion, recounts every host's load from scratch and
//!   re-evaluates the rate of every active flow. It must agree with the
//!   model bit for bit, which checks that restricting reallocation to the
//!   endpoints of the changed flow loses nothing.
//! * [`fluid_timestep_oracle`] integrates the fluid model with a fixed time
//!   step, so it shares not even the event machinery with the model.
//!
//! [`BandwidthShareModel`]: super::BandwidthShareModel

use crate::engine::EventQueue;
use crate::time::SimTime;

use super::{ModelError, Scenario};

#[derive(Debug, Clone, Copy)]
enum Step {
    Start(usize),
    Done { flow: usize, version: u64 },
}

struct OracleFlow {
    src: usize,
    dst: usize,
    remaining: f64,
    rate: f64,
    last: f64,
    version: u64,
    active: bool,
}

/// Delivery times of every scenario flow, with all rates recomputed at every
/// event.
pub fn global_recompute_oracle(scenario: &Scenario) -> Result<Vec<SimTime>, ModelError> {
    let net = &scenario.network;
    let mut flows = Vec::with_capacity(scenario.flows.len());
    let mut queue = EventQueue::new();
    for (i, f) in scenario.flows.iter().enumerate() {
        let (src, dst) = (net.host_index(f.src)?, net.host_index(f.dst)?);
        if src == dst {
            return Err(ModelError::SameEndpoints(f.src));
        }
        if f.size == 0 {
            return Err(ModelError::ZeroSize);
        }
        flows.push(OracleFlow { src, dst, remaining: f.size as f64, rate: 0.0, last: 0.0, version: 0, active: false });
        queue.schedule(f.start, Step::Start(i))?;
    }

    let mut delivered = vec![None; flows.len()];
    while let Some(event) = queue.next_event() {
        let now = event.time.as_secs();
        match event.payload {
            Step::Start(i) => {
                flows[i].active = true;
                flows[i].last = now;
            }
            Step::Done { flow, version } => {
                let f = &mut flows[flow];
                if !f.active || f.version != version {
                    continue;
                }
                f.active = false;
                let latency = net.latency_at(f.src, f.dst).as_secs_f64();
                delivered[flow] = Some(SimTime::new(now + latency)?);
            }
        }

        let mut load = vec![0u32; net.host_count()];
        for f in flows.iter().filter(|f| f.active) {
            load[f.src] += 1;
            load[f.dst] += 1;
        }
        for (i, f) in flows.iter_mut().enumerate().filter(|(_, f)| f.active) {
            let rate =
                f64::min(net.bandwidth_at(f.src) / load[f.src] as f64, net.bandwidth_at(f.dst) / load[f.dst] as f64);
            if rate == f.rate {
                continue;
            }
            f.remaining = (f.remaining - f.rate * (now - f.last) / 8.0).max(0.0);
            f.last = now;
            f.rate = rate;
            f.version += 1;
            let finish = now + 8.0 * f.remaining / f.rate;
            queue.schedule(SimTime::new(finish)?, Step::Done { flow: i, version: f.version })?;
        }
    }
    Ok(delivered.into_iter().map(|d| d.expect("every flow completes")).collect())
}

/// Delivery times of every scenario flow under fixed-step integration.
///
/// Time advances in steps of `dt`. A flow joins at the first step boundary at
/// or after its start time. During each step every active flow drains at its
/// minimum-share rate, computed from the flows active at the step's
/// beginning. A flow finishes in the step its remaining bytes reach zero and
/// is reported at that step's end plus the path latency.
pub fn fluid_timestep_oracle(scenario: &Scenario, dt: f64) -> Result<Vec<f64>, ModelError> {
    assert!(dt > 0.0 && dt.is_finite(), "time step must be positive");
    let net = &scenario.network;
    let n = scenario.flows.len();
    let mut ends = Vec::with_capacity(n);
    let mut join = Vec::with_capacity(n);
    let mut remaining = Vec::with_capacity(n);
    for f in &scenario.flows {
        let (src, dst) = (net.host_index(f.src)?, net.host_index(f.dst)?);
        if src == dst {
            return Err(ModelError::SameEndpoints(f.src));
        }
        ends.push((src, dst));
        join.push(first_step_at_or_after(f.start.as_secs(), dt));
        remaining.push(f.size as f64);
    }

    let mut done: Vec<Option<f64>> = vec![None; n];
    let mut load = vec![0u32; net.host_count()];
    let mut active = Vec::with_capacity(n);
    let mut step = join.iter().copied().min().unwrap_or(0);
    let mut left = n;
    while left > 0 {
        active.clear();
        active.extend((0..n).filter(|&i| done[i].is_none() && join[i] <= step));
        if active.is_empty() {
            step = (0..n).filter(|&i| done[i].is_none()).map(|i| join[i]).min().expect("flows left");
            continue;
        }
        load.iter_mut().for_each(|l| *l = 0);
        for &i in &active {
            load[ends[i].0] += 1;
            load[ends[i].1] += 1;
        }
        let rates: Vec<f64> = active
            .iter()
            .map(|&i| {
                let (s, d) = ends[i];
                f64::min(net.bandwidth_at(s) / load[s] as f64, net.bandwidth_at(d) / load[d] as f64)
            })
            .collect();
        let step_end = (step + 1) as f64 * dt;
        for (&i, rate) in active.iter().zip(rates) {
            remaining[i] -= rate * dt / 8.0;
            // tolerate the rounding left over from many small drains
            if remaining[i] <= 1e-9 * scenario.flows[i].size as f64 {
                let (s, d) = ends[i];
                done[i] = Some(step_end + net.latency_at(s, d).as_secs_f64());
                left -= 1;
            }
        }
        step += 1;
    }
    Ok(done.into_iter().map(|d| d.expect("loop ends when all flows are done")).collect())
}

fn first_step_at_or_after(t: f64, dt: f64) -> u64 {
    let mut k = (t / dt).ceil().max(0.0) as u64;
    while k > 0 && (k - 1) as f64 * dt >= t {
        k -= 1;
    }
    while (k as f64) * dt < t {
        k += 1;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_alignment() {
        assert_eq!(first_step_at_or_after(0.0, 1e-3), 0);
        assert_eq!(first_step_at_or_after(0.5, 1e-3), 500);
        assert_eq!(first_step_at_or_after(0.5000001, 1e-3), 501);
        assert_eq!(first_step_at_or_after(0.0009, 1e-3), 1);
    }
}
