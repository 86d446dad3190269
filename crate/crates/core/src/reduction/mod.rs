//! Training-cost reductions: band selection, training-SNR selection, PCA and
//! row subsampling.

mod band;
mod pca;
mod snr;
mod subsample;

pub use band::{apply_band, apply_band_set, band_to_bins, observable_classes, BandSpec};
pub use pca::{pca_fit, pca_fit_rows, pca_project, PcaModel};
pub use snr::{snr_filter, snr_filter_features};
pub use subsample::{
    subsample_apply, subsample_count, subsample_resolve, SubsampleMethod, SubsampleSpec,
};
