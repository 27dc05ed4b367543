use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use flowsim::topology::NodeId;
use flowsim::SimTime;

use crate::config::Arrival;

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("need at least two end hosts, found {0}")]
    TooFewHosts(usize),
    #[error("invalid poisson rate {0}")]
    InvalidRate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkloadFlow {
    pub start: SimTime,
    pub src: NodeId,
    pub dst: NodeId,
    pub size: u64,
}

/// Random transfers between distinct end hosts. Each flow picks its source
/// uniformly and its destination uniformly among the other hosts, so pairs
/// may repeat across flows.
pub fn random_workload(
    hosts: &[NodeId],
    flow_count: usize,
    size: u64,
    arrival: Arrival,
    seed: u64,
) -> Result<Vec<WorkloadFlow>, WorkloadError> {
    if hosts.len() < 2 {
        return Err(WorkloadError::TooFewHosts(hosts.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaps = match arrival {
        Arrival::AllAtOnce => None,
        Arrival::Poisson { rate, horizon } => {
            Some((Exp::new(rate).map_err(|_| WorkloadError::InvalidRate(rate))?, horizon.unwrap_or(f64::INFINITY)))
        }
    };
    let mut flows = Vec::with_capacity(if gaps.is_none() { flow_count } else { 0 });
    let mut t = 0.0;
    while flows.len() < flow_count {
        if let Some((exp, horizon)) = &gaps {
            t += exp.sample(&mut rng);
            if t > *horizon {
                break;
            }
        }
        let src = rng.random_range(0..hosts.len());
        let mut dst = rng.random_range(0..hosts.len() - 1);
        if dst >= src {
            dst += 1;
        }
        flows.push(WorkloadFlow { start: SimTime::from_secs(t), src: hosts[src], dst: hosts[dst], size });
    }
    Ok(flows)
}
