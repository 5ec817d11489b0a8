//! Files in and out: delimited data, result documents, grid specs.

pub mod csv;
pub mod gridspec;
pub mod result;

pub use self::csv::{read_csv, read_csv_from, write_csv, write_csv_to, DEFAULT_NA_TOKENS};
pub use gridspec::{parse_grid_spec, read_grid_spec, GridSpec};
pub use result::{read_result, write_result, ResultDocument, RunManifest};
