//! Site-difference phase map, imaging transform, and site assignment.

use crate::error::{Error, Result};
use crate::units::TWO_PI;

/// Steepest tilt the imaging transform is expected to correct (rad).
const MAX_TILT: f64 = 10.0 * std::f64::consts::PI / 180.0;

/// Largest residual (in site units) still accepted when snapping a position
/// difference onto the site grid; anything farther is discarded as ambiguous.
pub const DEFAULT_SITE_THRESHOLD: f64 = 0.35;

/// Integer lattice-site difference between the two atoms of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SiteDifference {
    /// Sites along the transversal lattice axis.
    pub dnx: i64,
    /// Sites along the cavity axis.
    pub dny: i64,
}

impl SiteDifference {
    pub fn new(dnx: i64, dny: i64) -> Self {
        Self { dnx, dny }
    }
}

impl std::ops::Neg for SiteDifference {
    type Output = Self;

    fn neg(self) -> Self {
        Self::new(-self.dnx, -self.dny)
    }
}

/// Probe-field phase difference between two atoms separated by `d` sites.
///
/// A transversal site step advances the relative phase by 532/780 of a full
/// cycle (transversal period over probe wavelength); a step along the cavity
/// axis advances it by half a cycle.  Both steps are integer multiples of
/// 2π/390, so the sum is reduced modulo one cycle in integer arithmetic and
/// the modular identities hold without rounding error.
pub fn phase_from_sites(d: SiteDifference) -> f64 {
    let m = (266 * d.dnx + 195 * d.dny).rem_euclid(390);
    TWO_PI * m as f64 / 390.0
}

/// Geometry of the crossed optical lattice as seen by the camera.
///
/// Lengths are in micrometres, angles in radians.
#[derive(Debug, Clone, Copy)]
pub struct LatticeGeometry {
    /// Lattice period along the transversal axis (µm).
    pub period_x: f64,
    /// Lattice period along the cavity axis (µm).
    pub period_y: f64,
    /// Wavelength of the probe light whose phase the site map tracks (µm).
    pub probe_wavelength: f64,
    /// Global rotation between camera and lattice axes (rad).
    pub alpha: f64,
    /// Skew angle between the two lattice axes on the camera (rad).
    pub beta: f64,
    /// Camera magnification (µm per pixel).
    pub pixel_scale: f64,
}

impl Default for LatticeGeometry {
    fn default() -> Self {
        Self {
            period_x: 0.532,
            period_y: 0.386,
            probe_wavelength: 0.780,
            alpha: 0.64_f64.to_radians(),
            beta: 1.6_f64.to_radians(),
            pixel_scale: 0.48,
        }
    }
}

impl LatticeGeometry {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("period_x", self.period_x),
            ("period_y", self.period_y),
            ("probe_wavelength", self.probe_wavelength),
            ("pixel_scale", self.pixel_scale),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "lattice geometry: {name} must be positive, got {value}"
                )));
            }
        }
        for (name, angle) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(angle.is_finite() && angle.abs() < MAX_TILT) {
                return Err(Error::InvalidParameter(format!(
                    "lattice geometry: |{name}| must stay below 10 degrees, got {angle} rad"
                )));
            }
        }
        Ok(())
    }

    /// Row-major matrix of the camera-to-lattice map: rotation by `alpha`
    /// followed by the shear that removes the `beta` skew.
    pub fn deskew_matrix(&self) -> [[f64; 2]; 2] {
        let (sa, ca) = self.alpha.sin_cos();
        let (sb, cb) = self.beta.sin_cos();
        [[cb * ca + sb * sa, cb * sa - sb * ca], [-sa, ca]]
    }

    /// Map camera-frame coordinates (µm) to lattice-aligned coordinates (µm).
    pub fn deskew(&self, p: (f64, f64)) -> (f64, f64) {
        let m = self.deskew_matrix();
        (m[0][0] * p.0 + m[0][1] * p.1, m[1][0] * p.0 + m[1][1] * p.1)
    }

    /// Inverse of [`deskew`]: lattice-aligned coordinates back to the camera
    /// frame.  Undoes the shear first, then the rotation.
    pub fn deskew_inverse(&self, p: (f64, f64)) -> (f64, f64) {
        let (sa, ca) = self.alpha.sin_cos();
        let (sb, cb) = self.beta.sin_cos();
        let y1 = p.1;
        let x1 = (p.0 + sb * y1) / cb;
        (ca * x1 - sa * y1, sa * x1 + ca * y1)
    }
}

/// A pair difference snapped onto the site grid.
#[derive(Debug, Clone, Copy)]
pub struct SiteAssignment {
    pub difference: SiteDifference,
    /// Distance to the assigned site in units of the lattice periods.
    pub residual: f64,
}

/// Snap one deskewed position pair (µm) onto the site grid.
///
/// The difference `b − a` is divided by the lattice periods and rounded to
/// the nearest integers.  A residual above `threshold` (in site units) means
/// the pair cannot be placed unambiguously and is rejected, as is a pair
/// whose atoms land on the same site.
pub fn assign_pair(
    a: (f64, f64),
    b: (f64, f64),
    geom: &LatticeGeometry,
    threshold: f64,
) -> Result<SiteAssignment> {
    geom.validate()?;
    if !(threshold.is_finite() && (0.0..0.5).contains(&threshold)) {
        return Err(Error::InvalidParameter(format!(
            "site threshold must lie in [0, 0.5), got {threshold}"
        )));
    }
    let fx = (b.0 - a.0) / geom.period_x;
    let fy = (b.1 - a.1) / geom.period_y;
    let (nx, ny) = (fx.round(), fy.round());
    let residual = (fx - nx).hypot(fy - ny);
    if residual > threshold {
        return Err(Error::AmbiguousAssignment { residual, threshold });
    }
    let difference = SiteDifference::new(nx as i64, ny as i64);
    if difference.dnx == 0 && difference.dny == 0 {
        return Err(Error::SharedSite);
    }
    Ok(SiteAssignment {
        difference,
        residual,
    })
}

/// [`assign_pair`] over a batch; each pair succeeds or is discarded on its own.
pub fn assign_sites(
    pairs: &[((f64, f64), (f64, f64))],
    geom: &LatticeGeometry,
    threshold: f64,
) -> Vec<Result<SiteAssignment>> {
    pairs
        .iter()
        .map(|&(a, b)| assign_pair(a, b, geom, threshold))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::fitting::folded_fwhm;
    use super::super::imaging::sample_pairs;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;
    use std::f64::consts::PI;

    #[test]
    fn phase_of_printed_site_steps() {
        assert_eq!(phase_from_sites(SiteDifference::new(0, 1)), PI);
        assert_eq!(phase_from_sites(SiteDifference::new(0, 2)), 0.0);
        let one_x = phase_from_sites(SiteDifference::new(1, 0));
        assert!((one_x - 4.2854).abs() < 1e-3);
        assert!((one_x - TWO_PI * 532.0 / 780.0).abs() < 1e-12);
    }

    #[test]
    fn phase_is_periodic_in_two_axial_sites() {
        for dnx in -5..=5 {
            for dny in -5..=5 {
                let base = phase_from_sites(SiteDifference::new(dnx, dny));
                let shifted = phase_from_sites(SiteDifference::new(dnx, dny + 2));
                assert_eq!(base, shifted, "({dnx}, {dny})");
            }
        }
    }

    #[test]
    fn phase_of_negated_difference_is_complement() {
        for dnx in -5..=5 {
            for dny in -5..=5 {
                let d = SiteDifference::new(dnx, dny);
                let sum = phase_from_sites(d) + phase_from_sites(-d);
                // φ(d) + φ(−d) ≡ 0 (mod 2π): either both zero or they sum to 2π.
                assert!(
                    sum.abs() < 1e-12 || (sum - TWO_PI).abs() < 1e-12,
                    "({dnx}, {dny}): {sum}"
                );
            }
        }
    }

    #[test]
    fn deskew_without_tilt_is_identity() {
        let geom = LatticeGeometry {
            alpha: 0.0,
            beta: 0.0,
            ..LatticeGeometry::default()
        };
        let p = (1.75, -0.625);
        assert_eq!(geom.deskew(p), p);
        assert_eq!(geom.deskew_inverse(p), p);
    }

    #[test]
    fn deskew_determinant_is_cosine_of_skew() {
        let geom = LatticeGeometry::default();
        let m = geom.deskew_matrix();
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        assert!((det - geom.beta.cos()).abs() < 1e-12);
    }

    #[test]
    fn deskew_round_trips_and_is_linear() {
        let geom = LatticeGeometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let p = (
                20.0 * (rng.random::<f64>() - 0.5),
                20.0 * (rng.random::<f64>() - 0.5),
            );
            let q = (
                20.0 * (rng.random::<f64>() - 0.5),
                20.0 * (rng.random::<f64>() - 0.5),
            );
            let (a, b) = (rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);

            let back = geom.deskew_inverse(geom.deskew(p));
            assert!((back.0 - p.0).abs() < 1e-12 && (back.1 - p.1).abs() < 1e-12);

            let combined = geom.deskew((a * p.0 + b * q.0, a * p.1 + b * q.1));
            let (dp, dq) = (geom.deskew(p), geom.deskew(q));
            let separate = (a * dp.0 + b * dq.0, a * dp.1 + b * dq.1);
            assert!((combined.0 - separate.0).abs() < 1e-12);
            assert!((combined.1 - separate.1).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_lattice_positions_assign_exactly() {
        let geom = LatticeGeometry::default();
        let a = (0.0, 0.0);
        let b = (3.0 * geom.period_x, -2.0 * geom.period_y);
        let got = assign_pair(a, b, &geom, DEFAULT_SITE_THRESHOLD).unwrap();
        assert_eq!(got.difference, SiteDifference::new(3, -2));
        assert!(got.residual < 1e-12);
    }

    #[test]
    fn shared_site_and_large_residual_are_rejected() {
        let geom = LatticeGeometry::default();
        let drift = (0.1 * geom.period_x, 0.0);
        match assign_pair((0.0, 0.0), drift, &geom, DEFAULT_SITE_THRESHOLD) {
            Err(Error::SharedSite) => {}
            other => panic!("expected shared-site rejection, got {other:?}"),
        }
        let midway = (0.5 * geom.period_x, 0.45 * geom.period_y);
        match assign_pair((0.0, 0.0), midway, &geom, DEFAULT_SITE_THRESHOLD) {
            Err(Error::AmbiguousAssignment { residual, .. }) => {
                assert!(residual > DEFAULT_SITE_THRESHOLD)
            }
            other => panic!("expected ambiguous assignment, got {other:?}"),
        }
    }

    /// Position noise of 30 nm per atom leaves site assignment essentially
    /// error-free: across 10,000 pairs no accepted assignment may be wrong
    /// beyond a 1e-3 rate, and only a small fraction may be discarded.
    #[test]
    fn noisy_assignment_misses_fewer_than_one_in_a_thousand() {
        let geom = LatticeGeometry::default();
        let pairs = sample_pairs(10_000, &geom, 5, 0.030, 0.0, 71);
        let mut wrong = 0usize;
        let mut discarded = 0usize;
        for pair in &pairs {
            let a = geom.deskew(pair.atom_a);
            let b = geom.deskew(pair.atom_b);
            match assign_pair(a, b, &geom, DEFAULT_SITE_THRESHOLD) {
                Ok(got) => {
                    if got.difference != pair.difference {
                        wrong += 1;
                    }
                }
                Err(_) => discarded += 1,
            }
        }
        let accepted = pairs.len() - discarded;
        assert!(accepted > 9_000, "only {accepted} pairs accepted");
        assert!(
            (wrong as f64) < 1e-3 * accepted as f64,
            "{wrong} of {accepted} accepted pairs misassigned"
        );
    }

    /// The histogram of pair differences reproduces the site grid, and the
    /// folded peak has the width set by the two-atom position noise:
    /// FWHM = 2·sqrt(2 ln 2)·sqrt(2)·30 nm ≈ 100 nm.
    #[test]
    fn difference_histogram_shows_grid_with_100nm_peaks() {
        let geom = LatticeGeometry {
            alpha: 0.0,
            beta: 0.0,
            ..LatticeGeometry::default()
        };
        let pairs = sample_pairs(10_000, &geom, 5, 0.030, 0.0, 5);
        let dx: Vec<f64> = pairs
            .iter()
            .map(|p| p.atom_b.0 - p.atom_a.0)
            .collect();
        let dy: Vec<f64> = pairs
            .iter()
            .map(|p| p.atom_b.1 - p.atom_a.1)
            .collect();

        let sites: HashSet<_> = pairs.iter().map(|p| p.difference).collect();
        assert!(sites.len() > 25, "only {} distinct sites drawn", sites.len());

        let fwhm_x = folded_fwhm(&dx, geom.period_x, 64);
        let fwhm_y = folded_fwhm(&dy, geom.period_y, 64);
        for fwhm in [fwhm_x, fwhm_y] {
            assert!(
                (fwhm - 0.100).abs() < 0.015,
                "folded peak FWHM {:.1} nm, expected ≈100 nm",
                fwhm * 1e3
            );
        }
    }

    #[test]
    fn invalid_geometry_is_rejected() {
        let mut geom = LatticeGeometry::default();
        geom.period_y = 0.0;
        assert!(geom.validate().is_err());
        let mut geom = LatticeGeometry::default();
        geom.beta = 0.2;
        assert!(geom.validate().is_err());
        assert!(LatticeGeometry::default().validate().is_ok());
    }
}
