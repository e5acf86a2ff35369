//! Synthetic fluorescence frames: Gaussian spots over a flat background.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::geometry::{LatticeGeometry, SiteDifference};
use crate::error::{Error, Result};

/// Diffraction-limited spot FWHM along the two camera axes (pixels).
pub const DIFFRACTION_FWHM_PX: (f64, f64) = (1.23, 1.78);
/// Observed spots are wider than the diffraction limit by this shared factor.
pub const PSF_WIDTH_INFLATION: f64 = 1.5;

/// Default spot widths for synthesising and fitting frames (FWHM, pixels).
pub fn default_psf_fwhm() -> (f64, f64) {
    (
        DIFFRACTION_FWHM_PX.0 * PSF_WIDTH_INFLATION,
        DIFFRACTION_FWHM_PX.1 * PSF_WIDTH_INFLATION,
    )
}

pub fn fwhm_to_sigma(fwhm: f64) -> f64 {
    fwhm / (8.0 * std::f64::consts::LN_2).sqrt()
}

pub fn sigma_to_fwhm(sigma: f64) -> f64 {
    sigma * (8.0 * std::f64::consts::LN_2).sqrt()
}

/// A fluorescence frame plus the exposure metadata needed to interpret it.
#[derive(Debug, Clone)]
pub struct AtomImage {
    /// Counts per pixel, row-major `(rows, cols)`.
    pub counts: Array2<f64>,
    /// Camera magnification (µm per pixel).
    pub pixel_scale: f64,
    /// Uniform background level (counts per pixel).
    pub background: f64,
    /// Integrated signal per atom above background (counts).
    pub amplitude: f64,
}

impl AtomImage {
    /// `(rows, cols)` of the pixel grid.
    pub fn shape(&self) -> (usize, usize) {
        self.counts.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.counts.is_empty() {
            return Err(Error::InvalidParameter("image has no pixels".into()));
        }
        if !self.counts.iter().all(|c| c.is_finite() && *c >= 0.0) {
            return Err(Error::InvalidParameter(
                "image counts must be finite and non-negative".into(),
            ));
        }
        for (name, value) in [
            ("pixel_scale", self.pixel_scale),
            ("background", self.background),
            ("amplitude", self.amplitude),
        ] {
            if !(value.is_finite() && value >= 0.0) || (name == "pixel_scale" && value == 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "image metadata: {name} must be non-negative and finite, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Render a synthetic fluorescence frame.
///
/// Each atom at a camera-frame position (µm) contributes a 2-D Gaussian spot
/// carrying `amplitude` integrated counts on top of a uniform `background`.
/// With a seed every pixel draws from a Poisson distribution at its model
/// mean, so frames are reproducible; `None` returns the noise-free model.
pub fn synth_image(
    positions: &[(f64, f64)],
    geom: &LatticeGeometry,
    shape: (usize, usize),
    psf_fwhm: (f64, f64),
    amplitude: f64,
    background: f64,
    noise_seed: Option<u64>,
) -> Result<AtomImage> {
    geom.validate()?;
    let (rows, cols) = shape;
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter("frame must have pixels".into()));
    }
    if !(psf_fwhm.0 > 0.0 && psf_fwhm.1 > 0.0 && amplitude >= 0.0 && background >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "spot widths must be positive and counts non-negative, got \
             fwhm {psf_fwhm:?}, amplitude {amplitude}, background {background}"
        )));
    }

    let (sx, sy) = (fwhm_to_sigma(psf_fwhm.0), fwhm_to_sigma(psf_fwhm.1));
    let peak = amplitude / (crate::units::TWO_PI * sx * sy);
    let mut model = Array2::from_elem(shape, background);
    for &(x_um, y_um) in positions {
        let x = x_um / geom.pixel_scale;
        let y = y_um / geom.pixel_scale;
        if !(0.0..=(cols - 1) as f64).contains(&x) || !(0.0..=(rows - 1) as f64).contains(&y) {
            return Err(Error::InvalidParameter(format!(
                "atom at ({x:.2}, {y:.2}) px lies outside the {rows}x{cols} frame"
            )));
        }
        // A spot's mass beyond 6σ is < 1e-8 of the total; skip those pixels.
        let r0 = ((y - 6.0 * sy).floor().max(0.0)) as usize;
        let r1 = ((y + 6.0 * sy).ceil()).min((rows - 1) as f64) as usize;
        let c0 = ((x - 6.0 * sx).floor().max(0.0)) as usize;
        let c1 = ((x + 6.0 * sx).ceil()).min((cols - 1) as f64) as usize;
        for r in r0..=r1 {
            let dy = (r as f64 - y) / sy;
            for c in c0..=c1 {
                let dx = (c as f64 - x) / sx;
                model[[r, c]] += peak * (-0.5 * (dx * dx + dy * dy)).exp();
            }
        }
    }

    let counts = match noise_seed {
        None => model,
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            model.mapv(|mean| {
                if mean <= 0.0 {
                    0.0
                } else {
                    Poisson::new(mean).expect("mean is finite").sample(&mut rng)
                }
            })
        }
    };

    Ok(AtomImage {
        counts,
        pixel_scale: geom.pixel_scale,
        background,
        amplitude,
    })
}

/// One synthetic atom pair: the true site difference plus noisy camera-frame
/// positions in µm, with atom `a` near the origin.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticPair {
    pub difference: SiteDifference,
    pub atom_a: (f64, f64),
    pub atom_b: (f64, f64),
}

impl SyntheticPair {
    /// Camera-frame difference vector `b − a` (µm).
    pub fn camera_difference(&self) -> (f64, f64) {
        (
            self.atom_b.0 - self.atom_a.0,
            self.atom_b.1 - self.atom_a.1,
        )
    }
}

/// Draw reproducible synthetic pairs on the site grid.
///
/// Site offsets are uniform over `[-site_span, site_span]²` excluding the
/// shared site.  Pairs closer than `min_separation` (µm, before noise) are
/// redrawn, mirroring the discard of pairs too close to resolve on camera.
/// Each atom position then receives isotropic Gaussian noise of
/// `noise_sigma` µm.  Shift both positions by a common offset to place the
/// pair inside a frame.
pub fn sample_pairs(
    n: usize,
    geom: &LatticeGeometry,
    site_span: i64,
    noise_sigma: f64,
    min_separation: f64,
    seed: u64,
) -> Vec<SyntheticPair> {
    assert!(site_span > 0, "site span must cover at least one site");
    assert!(noise_sigma >= 0.0 && min_separation >= 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sigma).expect("finite noise width");
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let dnx = rand::Rng::random_range(&mut rng, -site_span..=site_span);
        let dny = rand::Rng::random_range(&mut rng, -site_span..=site_span);
        if dnx == 0 && dny == 0 {
            continue;
        }
        let lattice = (dnx as f64 * geom.period_x, dny as f64 * geom.period_y);
        let diff = geom.deskew_inverse(lattice);
        if diff.0.hypot(diff.1) < min_separation {
            continue;
        }
        let atom_a = (noise.sample(&mut rng), noise.sample(&mut rng));
        let atom_b = (
            diff.0 + noise.sample(&mut rng),
            diff.1 + noise.sample(&mut rng),
        );
        out.push(SyntheticPair {
            difference: SiteDifference::new(dnx, dny),
            atom_a,
            atom_b,
        });
    }
    out
}

/// Camera-frame difference vectors of a batch of pairs (µm).
pub fn pair_differences(pairs: &[SyntheticPair]) -> Vec<(f64, f64)> {
    pairs.iter().map(|p| p.camera_difference()).collect()
}
