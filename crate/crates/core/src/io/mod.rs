//! On-disk interchange, dataset statistics and train/val/test splits.

mod csv_load;
mod jsonl;
mod split;
mod stats;

pub use csv_load::{load_lpg_csv, load_lpg_csv_with, ColumnKind, CsvManifest};
pub use jsonl::{load_lpg_jsonl, read_lpg_jsonl, save_lpg_jsonl, write_lpg_jsonl};
pub use split::{make_splits, SplitMasks, DEFAULT_RATIOS};
pub use stats::{dataset_stats, DatasetStats};
