//! Config-driven experiment sweeps comparing BPDN against the minimum-energy
//! baseline across measurement ratios, noise levels and sampling densities.

mod config;
mod export;
mod run;

pub use config::{ExperimentConfig, Seeds};
pub use export::{
    export_csv, export_images, export_summary_csv, export_timings_csv, image_slices, mask_slice, read_records_csv,
    write_outputs, RECORD_COLUMNS,
};
pub use run::{
    calibrate_fixed, measurements_for_ratio, run_experiment, summarize, CellSummary, Exemplar, ExperimentOutput,
    ExperimentRecord,
};
