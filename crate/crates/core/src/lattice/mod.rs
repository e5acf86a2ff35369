//! Optical-lattice imaging: from camera frames to site differences and phase.
//!
//! The probe standing wave fixes the relative phase of two trapped atoms
//! through their integer site separation alone.  This module maps site
//! differences to that phase, transforms fitted camera positions into the
//! lattice frame (rotation plus skew correction), snaps position differences
//! onto the site grid with an explicit discard policy, renders synthetic
//! fluorescence frames, fits Gaussian spot profiles, and calibrates the
//! transform angles from folded position histograms.

mod fitting;
mod geometry;
mod imaging;
mod io;

pub use fitting::{
    calibrate_angles, fit_psf, fit_psf_with, CalibrationConfig, FitConfig, FittedAtom, PsfFit,
};
pub use geometry::{
    assign_pair, assign_sites, phase_from_sites, LatticeGeometry, SiteAssignment, SiteDifference,
    DEFAULT_SITE_THRESHOLD,
};
pub use imaging::{
    default_psf_fwhm, fwhm_to_sigma, pair_differences, sample_pairs, sigma_to_fwhm, synth_image,
    AtomImage, SyntheticPair, DIFFRACTION_FWHM_PX, PSF_WIDTH_INFLATION,
};
pub use io::{read_image, write_centroids, write_image};
