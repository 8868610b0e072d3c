//! Experiment configuration, Monte-Carlo runners and result output.

pub mod config;
pub mod output;
pub mod sim;

pub use config::{ChannelModel, PhnModel, ReceiverKind, SimConfig};
pub use output::{emit_csv, emit_plot, plot_series, read_csv, write_csv, CsvRow, Series};
pub use sim::{count_ops, run_ber, run_mse, run_point, MseConfig, MseRow, OpReport, PointResult, SimResult};
