//! Disk-access cost model for sampling runs.
//!
//! Successor rows are assumed to live on slow storage, so a sampling engine
//! pays one transfer per step. A trace resolved at a flower root stops
//! early; building the flower costs `k` transfers, and the solve itself
//! runs in memory.

use bouquet_core::EstimationResult;

/// Transfers saved by resolving `flower_resolved` of `n_samples` traces at
/// flower roots, net of one flower construction:
/// `flower_resolved * (l_avg - l_stalk_avg) - k`.
pub fn io_savings_predicted(n_samples: u64, flower_resolved: u64, l_avg: f64, l_stalk_avg: f64, k: usize) -> f64 {
    debug_assert!(flower_resolved <= n_samples);
    flower_resolved as f64 * (l_avg - l_stalk_avg) - k as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IoCostReport {
    /// Row fetches of the bouquet run.
    pub total_fetches: u64,
    pub n_samples: u64,
    pub flower_resolved: u64,
    /// Mean trace length of the reference sampling run.
    pub mean_trace_length: f64,
    pub mean_stalk_length: f64,
    pub k: usize,
    pub predicted_savings: f64,
}

impl IoCostReport {
    /// Combines a plain sampling run with a bouquet run of the same size.
    pub fn new(smc: &EstimationResult, bouquet: &EstimationResult, bouquet_fetches: u64, k: usize) -> Self {
        let n_samples = bouquet.samples_used as u64;
        let flower_resolved = bouquet.tally.flower_resolved;
        let mean_stalk_length = bouquet.mean_stalk_length.unwrap_or(smc.mean_trace_length);
        IoCostReport {
            total_fetches: bouquet_fetches,
            n_samples,
            flower_resolved,
            mean_trace_length: smc.mean_trace_length,
            mean_stalk_length,
            k,
            predicted_savings: io_savings_predicted(
                n_samples,
                flower_resolved,
                smc.mean_trace_length,
                mean_stalk_length,
                k,
            ),
        }
    }

    /// Savings when every flower was served from the cache, so no
    /// construction cost applies.
    pub fn cached_savings(&self) -> f64 {
        self.predicted_savings + self.k as f64
    }
}
