//! Averaging over experimental imperfections: Boltzmann-distributed thermal
//! detunings and imperfect state preparation.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};

use crate::error::{Error, Result};
use crate::models::{build_single_atom, build_two_atom, SystemParams};

/// Thermal ensemble of atomic detunings. An atom exploring the trap sees a
/// reduced light shift, so its detuning is displaced upward from the
/// trap-bottom value: ⟨f⟩ = (4/√π)∫₀^∞ f(Δ + τr²) r² e^{−r²} dr.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalParams {
    /// Temperature parameter τ (rad/s): thermal energy scaled by the
    /// relative excited/ground polarizability difference.
    pub tau: f64,
    /// Atom detuning at the trap bottom (rad/s).
    pub base_detuning: f64,
    /// Quadrature nodes used before the doubling check.
    pub quad_order: usize,
}

impl ThermalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "temperature parameter must be non-negative and finite, got {}",
                self.tau
            )));
        }
        if !self.base_detuning.is_finite() {
            return Err(Error::InvalidParameter(
                "base detuning must be finite".into(),
            ));
        }
        if self.quad_order < 8 {
            return Err(Error::InvalidParameter(format!(
                "quadrature order must be at least 8, got {}",
                self.quad_order
            )));
        }
        Ok(())
    }
}

/// How a two-atom observable is averaged over the thermal ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThermalMode {
    /// Both atoms share one detuning draw (identical light shifts).
    Common,
    /// Each atom draws its own detuning (independent motion); this reduces
    /// the indistinguishability of the atoms.
    Independent,
}

/// Nodes and weights for ∫₀^∞ u^{1/2} e^{−u} h(u) du rescaled so the weights
/// sum to one: ⟨h⟩ = Σᵢ wᵢ h(uᵢ) equals (2/√π)∫ u^{1/2}e^{−u}h(u)du.
///
/// Computed by the Golub-Welsch method for generalized Gauss-Laguerre
/// (α = 1/2): nodes are eigenvalues of the symmetric tridiagonal recurrence
/// matrix, weights the squared first eigenvector components, which sum to
/// one by orthonormality.
pub fn gauss_laguerre_half(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if order < 1 {
        return Err(Error::InvalidParameter(
            "quadrature order must be at least 1".into(),
        ));
    }
    let alpha = 0.5;
    let mut j = Array2::<f64>::zeros((order, order));
    for k in 0..order {
        j[[k, k]] = 2.0 * k as f64 + alpha + 1.0;
        if k > 0 {
            let b = ((k as f64) * (k as f64 + alpha)).sqrt();
            j[[k, k - 1]] = b;
            j[[k - 1, k]] = b;
        }
    }
    let (nodes, vectors) = j.eigh(UPLO::Lower)?;
    let weights = (0..order).map(|i| vectors[[0, i]].powi(2)).collect();
    Ok((nodes.to_vec(), weights))
}

/// Single-order thermal average Σᵢ wᵢ f(base + τuᵢ), no convergence check.
pub fn thermal_average_at_order<F>(f: &F, base: f64, tau: f64, order: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if tau == 0.0 {
        return f(base);
    }
    let (nodes, weights) = gauss_laguerre_half(order)?;
    let mut acc = 0.0;
    for (u, w) in nodes.iter().zip(&weights) {
        acc += w * f(base + tau * u)?;
    }
    Ok(acc)
}

/// Thermal average of a detuning-dependent observable, verified by doubling
/// the quadrature order; relative agreement better than 1e-4 is required.
/// τ = 0 short-circuits to f(base_detuning) exactly.
pub fn thermal_average<F>(f: F, thermal: &ThermalParams) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    thermal.validate()?;
    if thermal.tau == 0.0 {
        return f(thermal.base_detuning);
    }
    let coarse = thermal_average_at_order(&f, thermal.base_detuning, thermal.tau, thermal.quad_order)?;
    let fine =
        thermal_average_at_order(&f, thermal.base_detuning, thermal.tau, 2 * thermal.quad_order)?;
    check_convergence(thermal.quad_order, coarse, fine)?;
    Ok(fine)
}

fn check_convergence(order: usize, coarse: f64, fine: f64) -> Result<()> {
    let scale = coarse.abs().max(fine.abs()).max(1e-300);
    if (coarse - fine).abs() > 1e-4 * scale {
        return Err(Error::QuadratureNotConverged {
            order,
            coarse,
            fine,
        });
    }
    Ok(())
}

/// Single-order two-atom average; `Common` evaluates f on the diagonal,
/// `Independent` over the tensor-product grid.
pub fn thermal_average_pair_at_order<F>(
    f: &F,
    base: f64,
    tau: f64,
    order: usize,
    mode: ThermalMode,
) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    if tau == 0.0 {
        return f(base, base);
    }
    match mode {
        ThermalMode::Common => {
            let diag = |d: f64| f(d, d);
            thermal_average_at_order(&diag, base, tau, order)
        }
        ThermalMode::Independent => {
            let (nodes, weights) = gauss_laguerre_half(order)?;
            let mut acc = 0.0;
            for (u1, w1) in nodes.iter().zip(&weights) {
                for (u2, w2) in nodes.iter().zip(&weights) {
                    acc += w1 * w2 * f(base + tau * u1, base + tau * u2)?;
                }
            }
            Ok(acc)
        }
    }
}

/// Two-atom thermal average with the doubling convergence check.
pub fn thermal_average_pair<F>(f: F, thermal: &ThermalParams, mode: ThermalMode) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    thermal.validate()?;
    if thermal.tau == 0.0 {
        return f(thermal.base_detuning, thermal.base_detuning);
    }
    let coarse = thermal_average_pair_at_order(
        &f,
        thermal.base_detuning,
        thermal.tau,
        thermal.quad_order,
        mode,
    )?;
    let fine = thermal_average_pair_at_order(
        &f,
        thermal.base_detuning,
        thermal.tau,
        2 * thermal.quad_order,
        mode,
    )?;
    check_convergence(thermal.quad_order, coarse, fine)?;
    Ok(fine)
}

/// Thermally averaged mean photon number of the configured system, with the
/// trap-bottom atom detuning taken from `thermal.base_detuning` (the
/// detunings in `params.delta_a` are overridden).
pub fn thermal_photon_number(
    params: &SystemParams,
    thermal: &ThermalParams,
    mode: ThermalMode,
) -> Result<f64> {
    match params.n_atoms() {
        1 => thermal_average(
            |d| {
                let mut p = params.clone();
                p.delta_a = vec![d];
                build_single_atom(&p)?.steady_state().map(|rho| rho.mean_photon_number())
            },
            thermal,
        ),
        _ => thermal_average_pair(
            |d1, d2| {
                let mut p = params.clone();
                p.delta_a = vec![d1, d2];
                build_two_atom(&p)?.steady_state().map(|rho| rho.mean_photon_number())
            },
            thermal,
            mode,
        ),
    }
}

/// Thermally averaged emission-rate curve over a laser-detuning scan.
///
/// `detuning_grid` lists laser − cavity detunings. The atom at the trap
/// bottom sits `thermal.tau` above the cavity resonance, so its detuning at
/// grid point Δ is Δ − τ before the upward thermal shift;
/// `thermal.base_detuning` is recomputed per point and ignored on input.
/// Rates are `rate_constant · ⟨a†a⟩`.
pub fn spectrum_with_temperature(
    params: &SystemParams,
    thermal: &ThermalParams,
    detuning_grid: &[f64],
    rate_constant: f64,
    mode: ThermalMode,
) -> Result<Vec<f64>> {
    thermal.validate()?;
    let mut rates = Vec::with_capacity(detuning_grid.len());
    for &delta in detuning_grid {
        let mut point_params = params.clone();
        point_params.delta_c = delta;
        let point_thermal = ThermalParams {
            base_detuning: delta - thermal.tau,
            ..*thermal
        };
        rates.push(rate_constant * thermal_photon_number(&point_params, &point_thermal, mode)?);
    }
    Ok(rates)
}

/// Optical-pumping success probability per atom.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PumpingParams {
    pub eta: f64,
}

impl PumpingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "pumping efficiency must lie in [0, 1], got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

/// Two-atom rate with imperfect preparation: η²·r2_full + 2η(1−η)·r1.
/// The weights sum to 1 − (1−η)² because the no-atom case emits nothing.
pub fn mixture_rate(r2_full: f64, r1: f64, pumping: &PumpingParams) -> f64 {
    let eta = pumping.eta;
    eta * eta * r2_full + 2.0 * eta * (1.0 - eta) * r1
}

/// Measured single-atom rate: preparation failure emits nothing, so η only
/// rescales the ideal rate.
pub fn pumped_single_rate(r1: f64, pumping: &PumpingParams) -> f64 {
    pumping.eta * r1
}

/// One member of an incoherent mixture: occupation probability, intensity,
/// and the unnormalized correlation G²(τ) on a shared τ grid. `rate` and
/// `correlations` must share one intensity scale (G² in rate² units).
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureComponent {
    pub probability: f64,
    pub rate: f64,
    pub correlations: Vec<f64>,
}

/// Pool correlations over an incoherent mixture: G²_mix = Σ pᵢG²ᵢ,
/// R_mix = Σ pᵢRᵢ, g²_mix = G²_mix / R²_mix.
///
/// This extends the preparation-mixture model from rates to correlations
/// under an incoherent-mixture assumption; callers should flag its use in
/// output metadata. Returns (R_mix, g²_mix values over `taus`).
pub fn mixture_g2(taus: &[f64], components: &[MixtureComponent]) -> Result<(f64, Vec<f64>)> {
    if components.is_empty() {
        return Err(Error::InvalidParameter(
            "mixture requires at least one component".into(),
        ));
    }
    let mut p_total = 0.0;
    for comp in components {
        if !(comp.probability >= 0.0) || !(comp.rate >= 0.0) {
            return Err(Error::InvalidParameter(
                "mixture probabilities and rates must be non-negative".into(),
            ));
        }
        if comp.correlations.len() != taus.len() {
            return Err(Error::DimensionMismatch {
                context: "mixture correlation series",
                expected: taus.len(),
                got: comp.correlations.len(),
            });
        }
        p_total += comp.probability;
    }
    if p_total > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "mixture probabilities sum to {p_total}, exceeding 1"
        )));
    }
    let rate_mix: f64 = components.iter().map(|c| c.probability * c.rate).sum();
    if rate_mix <= 0.0 {
        return Err(Error::NoSteadyStateField {
            photon_number: rate_mix,
        });
    }
    let values = (0..taus.len())
        .map(|k| {
            let g2_mix: f64 = components
                .iter()
                .map(|c| c.probability * c.correlations[k])
                .sum();
            g2_mix / (rate_mix * rate_mix)
        })
        .collect();
    Ok((rate_mix, values))
}
