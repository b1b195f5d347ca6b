//! All-bus study versus one study per fault bus.

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::error::ScError;
use crate::grid_model::{BusId, Network};
use crate::io::generator::{generate_radial_grid, RadialGridSpec};
use crate::network_builder::{FaultBuses, FaultStudyOptions};
use crate::sc_solver::{calc_sc, BusResult};

/// Relative agreement required between the two paths before timings count.
pub const EQUIVALENCE_TOL: f64 = 1e-10;
const TARGET_BUSES_PER_FEEDER: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchEntry {
    pub buses: usize,
    pub vectorized_s: f64,
    pub looped_s: f64,
    pub speedup: f64,
    pub max_rel_diff: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BenchReport {
    pub entries: Vec<BenchEntry>,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("bus count must be at least 3, got {0}")]
    TooSmall(usize),
    #[error(transparent)]
    Study(#[from] ScError),
    #[error("vectorized and per-bus results differ at bus {bus} (relative {diff:e})")]
    EquivalenceFailed { bus: BusId, diff: f64 },
}

/// Radial grid with exactly `buses` buses: feeders of equal length, about
/// fifty buses each, converters on every fifth feeder bus.
pub fn grid_for_bus_count(buses: usize, seed: u64) -> Result<(RadialGridSpec, Network), BenchError> {
    if buses < 3 {
        return Err(BenchError::TooSmall(buses));
    }
    let feeder_buses = buses - 2;
    let target = (feeder_buses / TARGET_BUSES_PER_FEEDER).max(1);
    let feeders = (1..=feeder_buses)
        .filter(|f| feeder_buses % f == 0)
        .min_by_key(|&f| f.abs_diff(target))
        .unwrap_or(1);
    let spec = RadialGridSpec {
        feeders,
        buses_per_feeder: feeder_buses / feeders,
        dg_every: Some(5),
        seed,
    };
    Ok((spec, generate_radial_grid(spec)))
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn row_diff(a: &BusResult, b: &BusResult) -> f64 {
    match (a.currents, b.currents) {
        (Some(x), Some(y)) => rel_diff(x.ikss_source_ka, y.ikss_source_ka)
            .max(rel_diff(x.ikss_converter_ka, y.ikss_converter_ka))
            .max(rel_diff(x.ikss_ka, y.ikss_ka)),
        (None, None) if a.status == b.status => 0.0,
        _ => f64::INFINITY,
    }
}

/// Time one study over all buses against `n` single-bus studies. Fails if
/// any bus disagrees beyond [`EQUIVALENCE_TOL`].
pub fn bench_network(network: &Network, options: &FaultStudyOptions) -> Result<BenchEntry, BenchError> {
    let all_opts = FaultStudyOptions { fault_buses: FaultBuses::All, ..options.clone() };
    let t0 = Instant::now();
    let all = calc_sc(network, &all_opts)?;
    let vectorized_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let mut looped = Vec::with_capacity(network.buses.len());
    for bus in &network.buses {
        let one = FaultStudyOptions {
            fault_buses: FaultBuses::Explicit(vec![bus.id]),
            ..options.clone()
        };
        looped.push(calc_sc(network, &one)?.rows.remove(0));
    }
    let looped_s = t1.elapsed().as_secs_f64();

    let mut max_rel_diff = 0.0f64;
    for single in &looped {
        let full = all.bus(single.bus).expect("bus in all-bus result");
        let diff = row_diff(full, single);
        if !(diff <= EQUIVALENCE_TOL) {
            return Err(BenchError::EquivalenceFailed { bus: single.bus, diff });
        }
        max_rel_diff = max_rel_diff.max(diff);
    }

    Ok(BenchEntry {
        buses: network.buses.len(),
        vectorized_s,
        looped_s,
        speedup: looped_s / vectorized_s.max(f64::MIN_POSITIVE),
        max_rel_diff,
    })
}

pub fn benchmark(sizes: &[usize], seed: u64) -> Result<BenchReport, BenchError> {
    let mut report = BenchReport::default();
    for &n in sizes {
        let (_, network) = grid_for_bus_count(n, seed)?;
        report.entries.push(bench_network(&network, &FaultStudyOptions::default())?);
    }
    Ok(report)
}
