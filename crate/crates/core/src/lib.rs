//! Vectorized IEC 60909 initial short-circuit currents.
//!
//! The pipeline runs in three stages:
//!
//! 1. [`grid_model`]: nameplate element data and its validation.
//! 2. [`network_builder`]: correction factors, switch fusion, three-winding
//!    star reduction and the per-unit nodal admittance matrix.
//! 3. [`sc_solver`]: voltage-source and converter components of `I''_k` at
//!    every bus from one factorization.
//!
//! [`io`] covers grid/result files, the synthetic feeder generator and the
//! benchmark used by the command-line tool.
//!
//! ```
//! use sccalc::{calc_sc, BusId, FaultStudyOptions, Network};
//!
//! let mut net = Network::new("example");
//! let hv = net.add_bus(1, "grid", 110.0);
//! let remote = net.add_bus(2, "remote", 110.0);
//! net.add_external_grid(hv, 3000.0, 3000.0, 0.0);
//! net.add_line(hv, remote, 1.0, 0.0, 4.0);
//!
//! let res = calc_sc(&net, &FaultStudyOptions::default()).unwrap();
//! assert!((res.ikss_ka(BusId(2)).unwrap() - 8.280448).abs() < 1e-6);
//! ```

pub mod error;
pub mod grid_model;
pub mod io;
pub mod linalg;
pub mod network_builder;
pub mod sc_solver;
pub mod union_find;
pub mod units;

pub use error::{Result, ScError};
pub use grid_model::{
    validate, Bus, BusId, ConverterSource, ExternalGrid, Line, Network, Switch, SwitchKind,
    SwitchTarget, Transformer2W, Transformer3W, Violation,
};
pub use linalg::SolverStrategy;
pub use network_builder::{build_bbm, BusBranchModel, Case, FaultBuses, FaultStudyOptions};
pub use sc_solver::{calc_sc, BusResult, BusStatus, ComponentCurrents, ShortCircuitResult};
