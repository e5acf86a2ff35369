//! Gaussian spot fits and imaging-angle calibration.

use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;

use super::geometry::LatticeGeometry;
use super::imaging::{sigma_to_fwhm, AtomImage};
use crate::error::{Error, Result};
use crate::units::TWO_PI;

/// One fitted atom spot; positions and widths in pixels, counts above
/// background at the peak.
#[derive(Debug, Clone, Copy)]
pub struct FittedAtom {
    pub x: f64,
    pub y: f64,
    pub fwhm_x: f64,
    pub fwhm_y: f64,
    pub peak: f64,
}

impl FittedAtom {
    /// Counts integrated over the fitted spot.
    pub fn integrated(&self) -> f64 {
        let sx = super::imaging::fwhm_to_sigma(self.fwhm_x);
        let sy = super::imaging::fwhm_to_sigma(self.fwhm_y);
        self.peak * TWO_PI * sx * sy
    }
}

/// Result of a frame fit: atoms sorted by x position, plus the shared flat
/// background and the number of accepted solver steps.
#[derive(Debug, Clone)]
pub struct PsfFit {
    pub atoms: Vec<FittedAtom>,
    pub background: f64,
    pub iterations: usize,
}

/// Tuning knobs for [`fit_psf_with`].
#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    /// Give up after this many solver iterations.
    pub max_iterations: usize,
    /// Converged when no pixel-valued parameter moves by more than this (px)
    /// and no count-valued parameter by more than this relative step.
    pub step_tolerance: f64,
    /// Two-atom fits whose centroids end up closer than this are rejected (px).
    pub min_separation: f64,
    /// Fitted peaks below this many background shot-noise units mean the
    /// requested atom could not be resolved.
    pub min_peak_significance: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tolerance: 1e-4,
            min_separation: 2.0,
            min_peak_significance: 5.0,
        }
    }
}

/// Fit `n_atoms` Gaussian spots plus a flat background with default settings.
pub fn fit_psf(image: &AtomImage, n_atoms: usize) -> Result<PsfFit> {
    fit_psf_with(image, n_atoms, &FitConfig::default())
}

/// Nonlinear least squares over `n_atoms` 2-D Gaussians and a shared flat
/// background (Levenberg–Marquardt with an analytic Jacobian).
///
/// Frames whose two fitted centroids come closer than
/// [`FitConfig::min_separation`], or where a fitted peak sinks into the
/// background noise, are rejected so that unresolvable pairs are discarded
/// rather than guessed at.
pub fn fit_psf_with(image: &AtomImage, n_atoms: usize, config: &FitConfig) -> Result<PsfFit> {
    if !(1..=2).contains(&n_atoms) {
        return Err(Error::InvalidParameter(format!(
            "can fit one or two atoms per frame, not {n_atoms}"
        )));
    }
    image.validate()?;
    let (rows, cols) = image.shape();
    let nparams = 1 + 5 * n_atoms;
    if rows * cols < 4 * nparams {
        return Err(Error::InvalidParameter(format!(
            "{rows}x{cols} frame is too small for a {n_atoms}-atom fit"
        )));
    }

    let data = Array1::from_iter(image.counts.iter().copied());
    let background0 = border_mean(&image.counts);
    let peaks = peak_pixels(&image.counts, n_atoms, config.min_separation);

    let mut p = Array1::zeros(nparams);
    p[0] = background0;
    for (k, &(r, c)) in peaks.iter().enumerate() {
        let base = 1 + 5 * k;
        p[base] = c as f64;
        p[base + 1] = r as f64;
        p[base + 2] = (image.counts[[r, c]] - background0).max(1.0);
        p[base + 3] = 1.2;
        p[base + 4] = 1.2;
    }

    let (mut model, mut jac) = model_and_jacobian(&p, n_atoms, (rows, cols));
    let mut residual = &data - &model;
    let mut sse = residual.dot(&residual);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0usize;

    while iterations < config.max_iterations && !converged {
        iterations += 1;
        let h = jac.t().dot(&jac);
        let grad = jac.t().dot(&residual);
        let mut accepted = false;
        for _ in 0..16 {
            let mut damped = h.clone();
            for j in 0..nparams {
                damped[[j, j]] += lambda * h[[j, j]].max(1e-12);
            }
            let step = match damped.solve_into(grad.clone()) {
                Ok(step) => step,
                Err(_) => {
                    lambda *= 4.0;
                    continue;
                }
            };
            let mut trial = &p + &step;
            // Keep the trial physical: spots stay in the frame with
            // non-negative amplitudes.  Without the amplitude bound, two
            // components can collapse onto each other with diverging ±
            // amplitudes, shaving the residual forever while describing
            // nothing.
            trial[0] = trial[0].max(0.0);
            for k in 0..n_atoms {
                let base = 1 + 5 * k;
                trial[base] = trial[base].clamp(0.0, (cols - 1) as f64);
                trial[base + 1] = trial[base + 1].clamp(0.0, (rows - 1) as f64);
                trial[base + 2] = trial[base + 2].max(0.0);
                trial[base + 3] = trial[base + 3].clamp(0.3, 20.0);
                trial[base + 4] = trial[base + 4].clamp(0.3, 20.0);
            }
            let small = step_is_small(&p, &trial, n_atoms, config.step_tolerance);
            let (tm, tj) = model_and_jacobian(&trial, n_atoms, (rows, cols));
            let tr = &data - &tm;
            let tsse = tr.dot(&tr);
            if tsse < sse {
                p = trial;
                model = tm;
                jac = tj;
                residual = tr;
                sse = tsse;
                lambda = (lambda * 0.4).max(1e-12);
                converged = small;
                accepted = true;
                break;
            }
            if small {
                // a vanishing step no longer improves the fit: at the minimum
                converged = true;
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    let _ = model;
    if !converged {
        return Err(Error::FitNotConverged { iterations });
    }

    let mut atoms: Vec<FittedAtom> = (0..n_atoms)
        .map(|k| {
            let base = 1 + 5 * k;
            FittedAtom {
                x: p[base],
                y: p[base + 1],
                fwhm_x: sigma_to_fwhm(p[base + 3].abs()),
                fwhm_y: sigma_to_fwhm(p[base + 4].abs()),
                peak: p[base + 2],
            }
        })
        .collect();
    atoms.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));

    let background = p[0];
    let noise_floor = config.min_peak_significance * background.max(1.0).sqrt();
    if n_atoms == 2 {
        let separation = (atoms[0].x - atoms[1].x).hypot(atoms[0].y - atoms[1].y);
        if separation < config.min_separation {
            return Err(Error::OverlappingAtoms {
                separation,
                min: config.min_separation,
            });
        }
        if atoms.iter().any(|a| a.peak < noise_floor) {
            // One component vanished into the noise floor: the frame does not
            // resolve two spots, so its position carries no information.
            return Err(Error::OverlappingAtoms {
                separation: 0.0,
                min: config.min_separation,
            });
        }
    }

    Ok(PsfFit {
        atoms,
        background,
        iterations,
    })
}

fn border_mean(counts: &Array2<f64>) -> f64 {
    let (rows, cols) = counts.dim();
    let mut sum = 0.0;
    let mut n = 0usize;
    for r in 0..rows {
        for c in 0..cols {
            if r == 0 || r == rows - 1 || c == 0 || c == cols - 1 {
                sum += counts[[r, c]];
                n += 1;
            }
        }
    }
    sum / n as f64
}

/// Brightest pixel, then the brightest pixel at least `min_separation` away.
fn peak_pixels(counts: &Array2<f64>, n_atoms: usize, min_separation: f64) -> Vec<(usize, usize)> {
    let (rows, cols) = counts.dim();
    let mut peaks = Vec::with_capacity(n_atoms);
    let mut best = (0, 0);
    for r in 0..rows {
        for c in 0..cols {
            if counts[[r, c]] > counts[best] {
                best = (r, c);
            }
        }
    }
    peaks.push(best);
    if n_atoms == 2 {
        let mut second: Option<(usize, usize)> = None;
        for r in 0..rows {
            for c in 0..cols {
                let dist = (r as f64 - best.0 as f64).hypot(c as f64 - best.1 as f64);
                if dist >= min_separation
                    && second.is_none_or(|s| counts[[r, c]] > counts[s])
                {
                    second = Some((r, c));
                }
            }
        }
        peaks.push(second.unwrap_or(best));
    }
    peaks
}

/// Model counts and Jacobian of the background-plus-Gaussians model,
/// flattened row-major over the frame.
fn model_and_jacobian(
    p: &Array1<f64>,
    n_atoms: usize,
    shape: (usize, usize),
) -> (Array1<f64>, Array2<f64>) {
    let (rows, cols) = shape;
    let npix = rows * cols;
    let nparams = 1 + 5 * n_atoms;
    let mut model = Array1::from_elem(npix, p[0]);
    let mut jac = Array2::zeros((npix, nparams));
    jac.column_mut(0).fill(1.0);
    for k in 0..n_atoms {
        let base = 1 + 5 * k;
        let (x, y, a, sx, sy) = (p[base], p[base + 1], p[base + 2], p[base + 3], p[base + 4]);
        let mut i = 0usize;
        for r in 0..rows {
            let dy = (r as f64 - y) / sy;
            for c in 0..cols {
                let dx = (c as f64 - x) / sx;
                let e = (-0.5 * (dx * dx + dy * dy)).exp();
                let g = a * e;
                model[i] += g;
                jac[[i, base]] += g * dx / sx;
                jac[[i, base + 1]] += g * dy / sy;
                jac[[i, base + 2]] += e;
                jac[[i, base + 3]] += g * dx * dx / sx;
                jac[[i, base + 4]] += g * dy * dy / sy;
                i += 1;
            }
        }
    }
    (model, jac)
}

fn step_is_small(p: &Array1<f64>, trial: &Array1<f64>, n_atoms: usize, tol: f64) -> bool {
    let relative = |old: f64, new: f64| (new - old).abs() < tol * old.abs().max(1.0);
    if !relative(p[0], trial[0]) {
        return false;
    }
    for k in 0..n_atoms {
        let base = 1 + 5 * k;
        for j in [base, base + 1, base + 3, base + 4] {
            if (trial[j] - p[j]).abs() >= tol {
                return false;
            }
        }
        if !relative(p[base + 2], trial[base + 2]) {
            return false;
        }
    }
    true
}

/// Scan settings for [`calibrate_angles`].
#[derive(Debug, Clone, Copy)]
pub struct CalibrationConfig {
    /// Half-width of the rotation scan (rad).
    pub theta_span: f64,
    /// Number of scan points across `±theta_span`.
    pub theta_steps: usize,
    /// Histogram bins across one lattice period.
    pub bins: usize,
    /// Scan points on each side of the minimum used for the quadratic fit.
    pub fit_halfwidth: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            theta_span: 5.0_f64.to_radians(),
            theta_steps: 81,
            bins: 64,
            fit_halfwidth: 6,
        }
    }
}

/// Recover the imaging angles from camera-frame pair differences (µm).
///
/// Rotating the differences by a trial angle θ and folding each projection
/// into one lattice period gives a sharp histogram exactly when the rotated
/// axis lines up with a lattice axis.  The cavity-axis fold collapses at
/// θ = α; because of the skew, the transversal fold collapses at θ = α − β.
/// Quadratic fits around the two scan minima therefore give both angles:
/// α from the y minimum and β from the difference of the minima.
///
/// Only the lattice periods of `geom` are read; its angle fields are the
/// quantities being calibrated.
pub fn calibrate_angles(
    differences: &[(f64, f64)],
    geom: &LatticeGeometry,
    config: &CalibrationConfig,
) -> Result<(f64, f64)> {
    let n = differences.len();
    if n < 1000 {
        return Err(Error::InsufficientData(format!(
            "angle calibration needs at least 1000 pair differences, got {n}"
        )));
    }
    if config.theta_steps < 2 * config.fit_halfwidth + 5 || config.bins < 8 {
        return Err(Error::InvalidParameter(
            "angle scan needs more steps than the fit window and at least 8 bins".into(),
        ));
    }
    for (axis, period, component) in [
        ("x", geom.period_x, 0usize),
        ("y", geom.period_y, 1usize),
    ] {
        let mean = differences.iter().map(|d| [d.0, d.1][component]).sum::<f64>() / n as f64;
        let var = differences
            .iter()
            .map(|d| ([d.0, d.1][component] - mean).powi(2))
            .sum::<f64>()
            / n as f64;
        if var.sqrt() < period {
            return Err(Error::InsufficientData(format!(
                "pair differences must span several lattice sites along {axis}"
            )));
        }
    }

    let steps = config.theta_steps;
    let thetas: Vec<f64> = (0..steps)
        .map(|j| -config.theta_span + 2.0 * config.theta_span * j as f64 / (steps - 1) as f64)
        .collect();
    let mut widths_x = Vec::with_capacity(steps);
    let mut widths_y = Vec::with_capacity(steps);
    let mut wx = vec![0.0; n];
    let mut wy = vec![0.0; n];
    for &theta in &thetas {
        let (s, c) = theta.sin_cos();
        for (i, &(dx, dy)) in differences.iter().enumerate() {
            wx[i] = c * dx + s * dy;
            wy[i] = -s * dx + c * dy;
        }
        widths_x.push(folded_fwhm(&wx, geom.period_x, config.bins));
        widths_y.push(folded_fwhm(&wy, geom.period_y, config.bins));
    }

    let theta_x = refine_minimum(&thetas, &widths_x, config.fit_halfwidth, "x")?;
    let theta_y = refine_minimum(&thetas, &widths_y, config.fit_halfwidth, "y")?;
    Ok((theta_y, theta_y - theta_x))
}

/// FWHM of the histogram of `values` folded into one `period`, in the same
/// units as the period.  The fold is centred on the circular mean first so
/// the peak never straddles the wrap-around; a fold with no concentration
/// (near-uniform) reports the full period.
pub(crate) fn folded_fwhm(values: &[f64], period: f64, bins: usize) -> f64 {
    let n = values.len();
    if n == 0 {
        return period;
    }
    let (mut cs, mut sn) = (0.0, 0.0);
    for &v in values {
        let (s, c) = (TWO_PI * v / period).sin_cos();
        cs += c;
        sn += s;
    }
    if cs.hypot(sn) / (n as f64) < 0.1 {
        return period;
    }
    let centre = sn.atan2(cs) * period / TWO_PI;

    let mut hist = vec![0u32; bins];
    for &v in values {
        let t = (v - centre + 0.5 * period).rem_euclid(period);
        let b = ((t / period) * bins as f64) as usize;
        hist[b.min(bins - 1)] += 1;
    }
    let peak = (0..bins).max_by_key(|&b| hist[b]).expect("bins > 0");
    let half = hist[peak] as f64 / 2.0;
    let bin_width = period / bins as f64;
    let x_of = |b: usize| (b as f64 + 0.5) * bin_width;

    let mut left = 0.0;
    for b in (0..peak).rev() {
        if (hist[b] as f64) < half {
            let frac = (half - hist[b] as f64) / (hist[b + 1] - hist[b]) as f64;
            left = x_of(b) + frac * bin_width;
            break;
        }
    }
    let mut right = period;
    for b in peak + 1..bins {
        if (hist[b] as f64) < half {
            let frac = (half - hist[b] as f64) / (hist[b - 1] - hist[b]) as f64;
            right = x_of(b) - frac * bin_width;
            break;
        }
    }
    right - left
}

/// Quadratic refinement of the scan minimum: least-squares parabola over a
/// window around the smallest width, vertex returned as the angle.
fn refine_minimum(
    thetas: &[f64],
    widths: &[f64],
    halfwidth: usize,
    axis: &'static str,
) -> Result<f64> {
    let n = thetas.len();
    let jmin = (0..n)
        .min_by(|&a, &b| widths[a].total_cmp(&widths[b]))
        .expect("scan is non-empty");
    if jmin < 2 || jmin > n - 3 {
        return Err(Error::NoClearMinimum { axis });
    }
    let lo = jmin.saturating_sub(halfwidth);
    let hi = (jmin + halfwidth).min(n - 1);
    if hi - lo + 1 < 5 {
        return Err(Error::NoClearMinimum { axis });
    }

    // Parabola w ≈ a t² + b t + c in t = θ − θ_min, solved by normal equations.
    let mut s = [0.0f64; 5];
    let mut m = [0.0f64; 3];
    for j in lo..=hi {
        let t = thetas[j] - thetas[jmin];
        let w = widths[j];
        let t2 = t * t;
        s[0] += 1.0;
        s[1] += t;
        s[2] += t2;
        s[3] += t2 * t;
        s[4] += t2 * t2;
        m[0] += w * t2;
        m[1] += w * t;
        m[2] += w;
    }
    let normal = ndarray::arr2(&[[s[4], s[3], s[2]], [s[3], s[2], s[1]], [s[2], s[1], s[0]]]);
    let rhs = ndarray::arr1(&[m[0], m[1], m[2]]);
    let coeff = normal
        .solve_into(rhs)
        .map_err(|_| Error::NoClearMinimum { axis })?;
    let (a, b) = (coeff[0], coeff[1]);
    if !(a.is_finite() && b.is_finite()) || a <= 0.0 {
        return Err(Error::NoClearMinimum { axis });
    }
    let vertex = thetas[jmin] - b / (2.0 * a);
    if vertex < thetas[lo] || vertex > thetas[hi] {
        return Err(Error::NoClearMinimum { axis });
    }
    Ok(vertex)
}
