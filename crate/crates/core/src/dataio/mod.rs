//! Raw series ingestion, preprocessing, windowing, subject-level splits
//! and the synthetic shift-injected generator.

mod dataset;
mod preprocess;
mod raw;
mod split;
mod synthetic;
mod window;

pub use dataset::{load_dataset, save_dataset, write_atomic};
pub use preprocess::{preprocess, Normalization, Normalizer, PreprocessConfig, ResampleStat};
pub use raw::{load_csv, RawSeries};
pub use split::{split_by_subject, Split, SplitAssignment};
pub use synthetic::{generate_synthetic, NoiseProfile, SyntheticSpec, SYNTHETIC_FRACTIONS};
pub use window::{windowize, WindowedDataset};
