use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("no records to aggregate")]
pub struct EmptyInput;

/// Summary of flow durations, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DurationStats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    /// Nearest-rank 95th percentile.
    pub p95: f64,
    pub max: f64,
}

/// Mean, median (average of the middle pair for even counts), nearest-rank
/// 95th percentile and maximum.
pub fn aggregate(durations: &[f64]) -> Result<DurationStats, EmptyInput> {
    let n = durations.len();
    if n == 0 {
        return Err(EmptyInput);
    }
    let mut sorted = durations.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 { sorted[n / 2] } else { (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0 };
    let rank = (0.95 * n as f64).ceil() as usize;
    Ok(DurationStats {
        count: n,
        mean: sorted.iter().sum::<f64>() / n as f64,
        median,
        p95: sorted[rank.max(1) - 1],
        max: sorted[n - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sets() {
        let s = aggregate(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!((s.mean, s.median, s.p95, s.max, s.count), (2.0, 2.0, 3.0, 3.0, 3));
        let s = aggregate(&[4.5]).unwrap();
        assert_eq!((s.mean, s.median, s.p95, s.max), (4.5, 4.5, 4.5, 4.5));
        assert_eq!(aggregate(&[1.0, 2.0, 3.0, 4.0]).unwrap().median, 2.5);
        assert_eq!(aggregate(&[]), Err(EmptyInput));
    }

    #[test]
    fn nearest_rank() {
        let v: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(aggregate(&v).unwrap().p95, 19.0);
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(aggregate(&v).unwrap().p95, 95.0);
        let v: Vec<f64> = (1..=101).map(f64::from).collect();
        assert_eq!(aggregate(&v).unwrap().p95, 96.0);
    }
}
