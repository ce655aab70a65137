//! Shared fixtures for the criterion benches.

use dmimo_core::numerics::ComplexMatrix;
use dmimo_core::rng::RandomStream;
use dmimo_core::scene::{parse_config, SimConfig};

/// The default desk scene used by the benches.
pub fn desk() -> SimConfig {
    parse_config(dmimo_core::scene::desk_config_toml()).expect("desk config parses")
}

/// Random complex matrix with CN(0,1) entries.
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
    let mut stream = RandomStream::new(seed, &[rows as u64, cols as u64]);
    ComplexMatrix::from_fn(rows, cols, |_, _| stream.complex_normal())
}
