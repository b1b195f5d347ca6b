//! Files, fixtures and tooling around the engine.

pub mod bench;
pub mod generator;
pub mod grid_file;
pub mod result_file;

pub use bench::{benchmark, grid_for_bus_count, BenchEntry, BenchError, BenchReport};
pub use generator::{generate_radial_grid, RadialGridSpec};
pub use grid_file::{load_network, parse_network, save_network, to_json, GridFile, GridFileError, FORMAT_VERSION};
pub use result_file::{ResultFile, ResultMetadata, ResultRow};
