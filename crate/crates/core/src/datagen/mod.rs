//! Synthetic 15-class Bluetooth/WiFi/Zigbee I/Q dataset.

mod catalog;
mod dataset;
mod io;
mod noise;
mod waveform;

pub use catalog::{class_spec, CaptureSpec, ClassSpec, Technology, CATALOG};
pub use dataset::{
    build_dataset, Dataset, DatasetConfig, SampleRecord, Split, PAPER_TRAIN_FRACTION, SNR_GRID,
};
pub use io::{read_dataset, read_dataset_from, write_dataset, write_dataset_to, DATASET_MAGIC};
pub use noise::apply_awgn;
pub use waveform::synth_frame;
