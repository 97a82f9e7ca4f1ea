//! Simulation study harness: phantoms, probes, scan plans, metrics and the
//! benchmark sweep.

mod benchmark;
mod config;
mod idx;
mod metrics;
mod phantom;

pub use benchmark::{run_benchmark, Aggregate, BenchmarkRow, BenchmarkSettings, BenchmarkTable, Method};
pub use config::{make_disk_probe, make_scan_plan, scan_step, ExperimentConfig, Seeds};
pub use idx::{decode_idx, ingest_idx};
pub use metrics::{align_global_phase, error_maps, l2_error, pearson, spearman, uncertainty_error_report, MetricsReport};
pub use phantom::{bilinear_resize, make_phantom, map_intensity, synthetic_digits, GrayImage, PHANTOM_OFFSET};
