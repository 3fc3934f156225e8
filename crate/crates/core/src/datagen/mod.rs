//! Inputs for the experiments: planted sparse eigenproblems, structured
//! denoising signals, the pit-prop correlations, and CSV/JSON plumbing.

mod denoising;
mod io;
mod pitprops;
mod planted;

pub use denoising::{
    block_support, denoising_signals, pixel, to_grid, DenoisingData, BLOCK, BLOCK_CORNERS, COEFFICIENT_COV,
    DEFAULT_NOISE_SIGMA, DEFAULT_SIGNALS, GRID, SIGNAL_DIM,
};
pub use io::{
    dump_instance, load_instance, load_matrix, read_matrix, regenerate_instance, write_matrix, write_matrix_csv,
    LoadOptions, MatrixFormat,
};
pub use pitprops::{pitprops, PITPROPS_OBSERVATIONS, PITPROPS_VARIABLES};
pub use planted::{planted_instance, step_spectrum, OverlapCase, PlantedInstance, PlantedParams, DEFAULT_K_BAR};
