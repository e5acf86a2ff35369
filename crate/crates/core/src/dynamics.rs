//! Lindblad generator, steady states, time evolution, emission rates, and
//! two-time photon correlations.
//!
//! Convention: a channel (rate, C) contributes rate·(2 C ρ C† − C†C ρ − ρ C†C)
//! to dρ/dt, so the cavity intensity decays at 2κ and the atomic population
//! at 2γ.

use ndarray::linalg::kron;
use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, Norm, OperationNorm, Solve, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{expm, frobenius_norm, null_space, unvec_r, vec_r};
use crate::operators::{dagger, expectation, identity, trace, Space};

/// Hamiltonian plus decay channels; the generator of the master equation.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    pub space: Space,
    pub hamiltonian: Array2<Complex64>,
    /// (rate, jump operator) pairs; rates in rad/s, operators unscaled.
    pub channels: Vec<(f64, Array2<Complex64>)>,
}

impl LindbladModel {
    pub fn new(
        space: Space,
        hamiltonian: Array2<Complex64>,
        channels: Vec<(f64, Array2<Complex64>)>,
    ) -> Result<Self> {
        let d = space.dim();
        if hamiltonian.nrows() != d || hamiltonian.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "Hamiltonian",
                expected: d,
                got: hamiltonian.nrows(),
            });
        }
        let h_norm = frobenius_norm(&hamiltonian).max(1e-300);
        let asym = frobenius_norm(&(&hamiltonian - &dagger(&hamiltonian)));
        if asym > 1e-10 * h_norm {
            return Err(Error::InvalidParameter(format!(
                "Hamiltonian is not Hermitian: ‖H−H†‖/‖H‖ = {:.3e}",
                asym / h_norm
            )));
        }
        for (rate, op) in &channels {
            if *rate < 0.0 || !rate.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "channel rate must be finite and ≥ 0, got {rate}"
                )));
            }
            if op.nrows() != d || op.ncols() != d {
                return Err(Error::DimensionMismatch {
                    context: "jump operator",
                    expected: d,
                    got: op.nrows(),
                });
            }
        }
        Ok(Self {
            space,
            hamiltonian,
            channels,
        })
    }

    /// Dense superoperator L with d/dt vec(ρ) = L vec(ρ) in the
    /// row-stacking convention.
    pub fn liouvillian(&self) -> Array2<Complex64> {
        let d = self.space.dim();
        let eye = identity(d);
        let i = Complex64::new(0.0, 1.0);
        let ht = self.hamiltonian.t().to_owned();
        let mut l = kron(&self.hamiltonian, &eye) * (-i) + kron(&eye, &ht) * i;
        for (rate, c) in &self.channels {
            let r = Complex64::new(*rate, 0.0);
            let cdc = dagger(c).dot(c);
            let c_conj = c.mapv(|z| z.conj());
            let cdc_t = cdc.t().to_owned();
            l = l + kron(c, &c_conj) * (2.0 * r) - kron(&cdc, &eye) * r - kron(&eye, &cdc_t) * r;
        }
        l
    }

    /// Steady state from the trace-constrained linear system: one row of
    /// L vec(ρ) = 0 is replaced by Tr ρ = 1.
    pub fn steady_state(&self) -> Result<DensityMatrix> {
        let l = self.liouvillian();
        let d = self.space.dim();
        let mut m = l.clone();
        for j in 0..d * d {
            m[[0, j]] = Complex64::new(0.0, 0.0);
        }
        for i in 0..d {
            m[[0, i * d + i]] = Complex64::new(1.0, 0.0);
        }
        let mut b = Array1::zeros(d * d);
        b[0] = Complex64::new(1.0, 0.0);
        let v = m.solve(&b)?;
        self.finish_state(&l, &v)
    }

    /// Steady state from the SVD null space of L.  Detects degenerate
    /// (non-unique) steady states, which signal decoupled subspaces.
    pub fn steady_state_nullspace(&self) -> Result<DensityMatrix> {
        let l = self.liouvillian();
        let vectors = null_space(&l, 1e-10)?;
        if vectors.len() > 1 {
            return Err(Error::NonUniqueSteadyState {
                null_dim: vectors.len(),
            });
        }
        self.finish_state(&l, &vectors[0])
    }

    fn finish_state(&self, l: &Array2<Complex64>, v: &Array1<Complex64>) -> Result<DensityMatrix> {
        let d = self.space.dim();
        let raw = unvec_r(v, d)?;
        let mut rho = (&raw + &dagger(&raw)) / Complex64::new(2.0, 0.0);
        let tr = trace(&rho);
        if tr.norm() < 1e-12 {
            return Err(Error::InvalidParameter(
                "steady-state candidate has vanishing trace".into(),
            ));
        }
        rho = rho / tr;
        let residual = l.dot(&vec_r(&rho)).norm_l2();
        let tolerance = 1e-10 * frobenius_norm(l);
        if residual > tolerance {
            return Err(Error::SteadyStateResidual {
                residual,
                tolerance,
            });
        }
        Ok(DensityMatrix {
            space: self.space,
            matrix: rho,
        })
    }

    /// Steady state by relaxing the ground state under L until the state
    /// stops moving; independent of the linear-solve and SVD paths.
    pub fn steady_state_by_integration(&self, tol: f64) -> Result<DensityMatrix> {
        let min_rate = self
            .channels
            .iter()
            .map(|(r, _)| *r)
            .filter(|r| *r > 0.0)
            .fold(f64::INFINITY, f64::min);
        if !min_rate.is_finite() {
            return Err(Error::InvalidParameter(
                "model has no dissipation; relaxation cannot converge".into(),
            ));
        }
        let d = self.space.dim();
        let mut rho = DensityMatrix::pure_ground(self.space);
        let segment = 6.0 / min_rate;
        let mut last_diff = f64::INFINITY;
        for k in 1..=60 {
            let next = self
                .evolve_with_tol(&rho, &[segment], 1e-10, 1e-13)?
                .pop()
                .expect("one output time");
            last_diff = frobenius_norm(&(&next.matrix - &rho.matrix));
            rho = next;
            if last_diff < tol {
                // Clean up accumulated integration round-off.
                let herm = (&rho.matrix + &dagger(&rho.matrix)) / Complex64::new(2.0, 0.0);
                let tr = trace(&herm);
                return Ok(DensityMatrix {
                    space: self.space,
                    matrix: herm / tr,
                });
            }
            let _ = (k, d);
        }
        Err(Error::SteadyStateResidual {
            residual: last_diff,
            tolerance: tol,
        })
    }

    /// Propagate ρ0 and report the state at each requested time (ascending,
    /// starting at or after 0).  Dormand-Prince 5(4) with adaptive steps.
    pub fn evolve(&self, rho0: &DensityMatrix, times: &[f64]) -> Result<Vec<DensityMatrix>> {
        self.evolve_with_tol(rho0, times, 1e-8, 1e-12)
    }

    pub fn evolve_with_tol(
        &self,
        rho0: &DensityMatrix,
        times: &[f64],
        rtol: f64,
        atol: f64,
    ) -> Result<Vec<DensityMatrix>> {
        if times.is_empty() {
            return Ok(Vec::new());
        }
        if times[0] < 0.0 || times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter(
                "output times must be non-negative and ascending".into(),
            ));
        }
        let l = self.liouvillian();
        let l_norm = l.opnorm_one()?.max(1e-300);
        let mut y = vec_r(&rho0.matrix);
        let mut t = 0.0;
        let mut h = 0.1 / l_norm;
        let h_min = 1e-15 * times.last().unwrap().max(1.0 / l_norm);
        let mut k1 = l.dot(&y);
        let mut outputs = Vec::with_capacity(times.len());

        for &target in times {
            while t < target {
                let step = h.min(target - t);
                let (y_new, err, k_last) = dp45_step(&l, &y, &k1, step, rtol, atol);
                if err <= 1.0 {
                    t += step;
                    y = y_new;
                    k1 = k_last;
                    let grow = if err > 0.0 {
                        0.9 * err.powf(-0.2)
                    } else {
                        5.0
                    };
                    h = (step * grow.clamp(0.2, 5.0)).max(h_min);
                } else {
                    h = step * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                    if h < h_min {
                        return Err(Error::StepSizeUnderflow { t });
                    }
                }
            }
            outputs.push(DensityMatrix {
                space: self.space,
                matrix: unvec_r(&y, self.space.dim())?,
            });
        }
        Ok(outputs)
    }
}

/// One Dormand-Prince 5(4) step; returns (y_new, scaled error, f(y_new)).
/// The last stage is f at the new point (FSAL), reused as k1 next step.
fn dp45_step(
    l: &Array2<Complex64>,
    y: &Array1<Complex64>,
    k1: &Array1<Complex64>,
    h: f64,
    rtol: f64,
    atol: f64,
) -> (Array1<Complex64>, f64, Array1<Complex64>) {
    let hc = Complex64::new(h, 0.0);
    let c = |x: f64| Complex64::new(x, 0.0);

    let k2 = l.dot(&(y + &(k1 * (hc * c(1.0 / 5.0)))));
    let k3 = l.dot(&(y + &(k1 * (hc * c(3.0 / 40.0))) + &(&k2 * (hc * c(9.0 / 40.0)))));
    let k4 = l.dot(
        &(y + &(k1 * (hc * c(44.0 / 45.0))) - &(&k2 * (hc * c(56.0 / 15.0)))
            + &(&k3 * (hc * c(32.0 / 9.0)))),
    );
    let k5 = l.dot(
        &(y + &(k1 * (hc * c(19372.0 / 6561.0))) - &(&k2 * (hc * c(25360.0 / 2187.0)))
            + &(&k3 * (hc * c(64448.0 / 6561.0)))
            - &(&k4 * (hc * c(212.0 / 729.0)))),
    );
    let k6 = l.dot(
        &(y + &(k1 * (hc * c(9017.0 / 3168.0))) - &(&k2 * (hc * c(355.0 / 33.0)))
            + &(&k3 * (hc * c(46732.0 / 5247.0)))
            + &(&k4 * (hc * c(49.0 / 176.0)))
            - &(&k5 * (hc * c(5103.0 / 18656.0)))),
    );
    let y_new = y
        + &(k1 * (hc * c(35.0 / 384.0)))
        + &(&k3 * (hc * c(500.0 / 1113.0)))
        + &(&k4 * (hc * c(125.0 / 192.0)))
        - &(&k5 * (hc * c(2187.0 / 6784.0)))
        + &(&k6 * (hc * c(11.0 / 84.0)));
    let k7 = l.dot(&y_new);

    // Difference between the 5th- and embedded 4th-order solutions.
    let e = k1 * (hc * c(71.0 / 57600.0)) - &(&k3 * (hc * c(71.0 / 16695.0)))
        + &(&k4 * (hc * c(71.0 / 1920.0)))
        - &(&k5 * (hc * c(17253.0 / 339200.0)))
        + &(&k6 * (hc * c(22.0 / 525.0)))
        - &(&k7 * (hc * c(1.0 / 40.0)));

    let mut err_sq = 0.0;
    for (ei, (yi, yni)) in e.iter().zip(y.iter().zip(y_new.iter())) {
        let scale = atol + rtol * yi.norm().max(yni.norm());
        let r = ei.norm() / scale;
        err_sq += r * r;
    }
    let err = (err_sq / e.len() as f64).sqrt();
    (y_new, err, k7)
}

/// State of the joint system.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    pub space: Space,
    pub matrix: Array2<Complex64>,
}

impl DensityMatrix {
    /// |0, g…g⟩⟨0, g…g|.
    pub fn pure_ground(space: Space) -> Self {
        let mut matrix = Array2::zeros((space.dim(), space.dim()));
        matrix[[0, 0]] = Complex64::new(1.0, 0.0);
        Self { space, matrix }
    }

    pub fn expectation(&self, op: &Array2<Complex64>) -> Complex64 {
        expectation(op, &self.matrix)
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.expectation(&self.space.number()).re
    }

    /// Check Hermiticity (1e-9), unit trace (1e-9), and positivity
    /// (minimum eigenvalue ≥ −1e-8).
    pub fn validate(&self) -> Result<()> {
        let asym = frobenius_norm(&(&self.matrix - &dagger(&self.matrix)));
        if asym > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "density matrix not Hermitian: ‖ρ−ρ†‖ = {asym:.3e}"
            )));
        }
        let tr = trace(&self.matrix);
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "density matrix trace {tr} differs from 1"
            )));
        }
        let min_eig = self.min_eigenvalue()?;
        if min_eig < -1e-8 {
            return Err(Error::InvalidParameter(format!(
                "density matrix has negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let herm = (&self.matrix + &dagger(&self.matrix)) / Complex64::new(2.0, 0.0);
        let (eigs, _) = herm.eigh(UPLO::Lower)?;
        Ok(eigs.iter().cloned().fold(f64::INFINITY, f64::min))
    }
}

/// Photon emission rate R = rate_constant · ⟨a†a⟩ in photons/s.
pub fn emission_rate(rho: &DensityMatrix, rate_constant: f64) -> f64 {
    rate_constant * rho.mean_photon_number()
}

/// τ grid with g²(τ) values and the unnormalized correlations they came
/// from; `correlations[k] / mean_photon_number²  = values[k]`.
#[derive(Clone, Debug)]
pub struct CorrelationSeries {
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
    pub correlations: Vec<f64>,
    pub mean_photon_number: f64,
}

/// Two-time correlation g²(τ) = ⟨a†(0) a†a (τ) a(0)⟩ / ⟨a†a⟩² by the
/// quantum regression theorem: the collapsed state a ρ_ss a† is propagated
/// under L and read out with the number operator.  Matrix exponentials are
/// cached per unique grid spacing.
pub fn g2_of_tau(
    model: &LindbladModel,
    rho_ss: &DensityMatrix,
    taus: &[f64],
) -> Result<CorrelationSeries> {
    if taus.is_empty() {
        return Err(Error::InvalidParameter("empty τ grid".into()));
    }
    if taus[0] < 0.0 || taus.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter(
            "τ grid must be non-negative and ascending".into(),
        ));
    }
    let n_bar = rho_ss.mean_photon_number();
    if !(n_bar > 1e-25) {
        return Err(Error::NoSteadyStateField {
            photon_number: n_bar,
        });
    }

    let d = model.space.dim();
    let a = model.space.annihilation();
    let collapsed = a.dot(&rho_ss.matrix).dot(&dagger(&a));
    let mut v = vec_r(&collapsed);

    // Weights picking Re Σ_i n_i B_ii out of vec(B).
    let mut weights = vec![0.0; d * d];
    for i in 0..d {
        let (photons, _) = model.space.basis_state(i);
        weights[i * d + i] = photons as f64;
    }
    let read_out = |v: &Array1<Complex64>| -> f64 {
        v.iter()
            .zip(weights.iter())
            .map(|(z, w)| z.re * w)
            .sum::<f64>()
    };

    let l = model.liouvillian();
    let mut cache: Vec<(f64, Array2<Complex64>)> = Vec::new();
    let mut current = 0.0;
    let mut correlations = Vec::with_capacity(taus.len());
    for &tau in taus {
        let dt = tau - current;
        if dt > 0.0 {
            let propagator = match cache
                .iter()
                .find(|(cached_dt, _)| (cached_dt - dt).abs() <= 1e-12 * dt.abs())
            {
                Some((_, e)) => e.clone(),
                None => {
                    let e = expm(&(&l * Complex64::new(dt, 0.0)))?;
                    cache.push((dt, e.clone()));
                    e
                }
            };
            v = propagator.dot(&v);
            current = tau;
        }
        correlations.push(read_out(&v));
    }

    let values: Vec<f64> = correlations.iter().map(|g| g / (n_bar * n_bar)).collect();
    Ok(CorrelationSeries {
        taus: taus.to_vec(),
        values,
        correlations,
        mean_photon_number: n_bar,
    })
}

/// Equal-time statistic g²(0) = ⟨a†a†aa⟩ / ⟨a†a⟩² read directly off the
/// steady state.
pub fn g2_zero(model: &LindbladModel, rho_ss: &DensityMatrix) -> Result<f64> {
    let n_bar = rho_ss.mean_photon_number();
    if !(n_bar > 1e-25) {
        return Err(Error::NoSteadyStateField {
            photon_number: n_bar,
        });
    }
    Ok(g2_numerator(model, rho_ss) / (n_bar * n_bar))
}

/// Unnormalized ⟨a†a†aa⟩.
pub fn g2_numerator(model: &LindbladModel, rho_ss: &DensityMatrix) -> f64 {
    let a = model.space.annihilation();
    let collapsed = a.dot(&rho_ss.matrix).dot(&dagger(&a));
    expectation(&model.space.number(), &collapsed).re
}
