//! Scan execution and CSV emission.
//!
//! Each grid point is evaluated independently (in parallel when a thread pool
//! is available); rows are always written in grid order.  A per-point cache
//! keyed on the full parameter set lets curves that share steady states — the
//! pumping mixture reuses the thermal averages, g²(0) reuses the rate solves —
//! pay for each Liouvillian solve only once.

use std::cell::RefCell;
use std::collections::HashMap;
use std::io::{self, Write};

use cavity_sim::dynamics::{g2_numerator, g2_of_tau, LindbladModel};
use cavity_sim::ensemble::{
    mixture_g2, mixture_rate, pumped_single_rate, thermal_average, thermal_average_pair,
    MixtureComponent, PumpingParams, ThermalParams,
};
use cavity_sim::error::{Error, Result as SimResult};
use cavity_sim::lattice::{phase_from_sites, SiteDifference};
use cavity_sim::models::{build_single_atom, build_two_atom, SystemParams};
use cavity_sim::units::TWO_PI;
use rayon::prelude::*;

use crate::experiment::{CurveSpec, Experiment, Quantity, ScanAxis, ThermalSpec};

/// How a run went: row counts for the exit-code decision.
#[derive(Debug, Clone, Copy)]
pub struct RunOutcome {
    pub points: usize,
    pub failed_points: usize,
}

impl RunOutcome {
    /// More than 10% of scan points hit a solver error.
    pub fn mostly_failed(&self) -> bool {
        self.failed_points * 10 > self.points
    }
}

/// Evaluate the experiment and write the CSV to `out`.
pub fn run(exp: &Experiment, out: &mut dyn Write) -> io::Result<RunOutcome> {
    let rows = compute_rows(exp);
    let failed_points = rows.iter().filter(|r| r.iter().any(|c| c.is_err())).count();
    write_csv(exp, &rows, out)?;
    Ok(RunOutcome { points: rows.len(), failed_points })
}

type Cell = Result<f64, String>;

fn compute_rows(exp: &Experiment) -> Vec<Vec<Cell>> {
    if let ScanAxis::Tau(taus) = &exp.scan {
        // One propagation yields the whole delay curve; splitting it per point
        // would recompute the propagator for every row.
        let columns: Vec<Vec<Cell>> =
            exp.curves.iter().map(|curve| delay_curve(curve, taus)).collect();
        return (0..taus.len())
            .map(|i| columns.iter().map(|col| col[i].clone()).collect())
            .collect();
    }

    let points: Vec<AxisValue> = match &exp.scan {
        ScanAxis::Phi(grid) => grid.iter().map(|&phi| AxisValue::Phi(phi)).collect(),
        ScanAxis::Detuning(grid) => grid.iter().map(|&d| AxisValue::Detuning(d)).collect(),
        ScanAxis::Sites(pairs) => pairs
            .iter()
            .map(|&(dnx, dny)| AxisValue::Phi(phase_from_sites(SiteDifference { dnx, dny })))
            .collect(),
        ScanAxis::Tau(_) => unreachable!("handled above"),
    };

    points
        .par_iter()
        .map(|value| {
            let ctx = PointContext::new();
            exp.curves
                .iter()
                .map(|curve| evaluate(exp, curve, *value, &ctx).map_err(|e| e.to_string()))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
enum AxisValue {
    Phi(f64),
    Detuning(f64),
}

/// Steady-state observables that every quantity is built from.
#[derive(Debug, Clone, Copy)]
struct Observables {
    /// ⟨a†a⟩ in the steady state.
    mean_photons: f64,
    /// ⟨a†a†aa⟩ in the steady state.
    pair_moment: f64,
}

/// Memoised steady-state solves for one scan point.
struct PointContext {
    cache: RefCell<HashMap<Vec<u64>, Observables>>,
}

impl PointContext {
    fn new() -> Self {
        Self { cache: RefCell::new(HashMap::new()) }
    }

    fn solve(&self, sys: &SystemParams) -> SimResult<Observables> {
        let key = fingerprint(sys);
        if let Some(hit) = self.cache.borrow().get(&key) {
            return Ok(*hit);
        }
        let model = build_model(sys)?;
        let rho = model.steady_state()?;
        let obs = Observables {
            mean_photons: rho.mean_photon_number(),
            pair_moment: g2_numerator(&model, &rho),
        };
        self.cache.borrow_mut().insert(key, obs);
        Ok(obs)
    }
}

fn build_model(sys: &SystemParams) -> SimResult<LindbladModel> {
    match sys.n_atoms() {
        1 => build_single_atom(sys),
        _ => build_two_atom(sys),
    }
}

fn fingerprint(sys: &SystemParams) -> Vec<u64> {
    let mut key = vec![
        sys.g.to_bits(),
        sys.kappa.to_bits(),
        sys.kappa_oc.to_bits(),
        sys.gamma.to_bits(),
        sys.omega_drive.to_bits(),
        sys.delta_c.to_bits(),
        sys.phi.to_bits(),
        sys.n_max as u64,
    ];
    key.extend(sys.delta_a.iter().map(|d| d.to_bits()));
    key
}

/// The curve's system at this scan point, before any thermal draw.
fn system_at(curve: &CurveSpec, value: AxisValue) -> SystemParams {
    let mut sys = curve.system.clone();
    match value {
        AxisValue::Phi(phi) => sys.phi = phi,
        AxisValue::Detuning(delta) => {
            // Scanning the probe laser shifts every detuning together, so the
            // static atom−cavity offsets of the template are preserved.
            let offsets: Vec<f64> =
                curve.system.delta_a.iter().map(|d| curve.system.delta_c - d).collect();
            sys.delta_c = delta;
            for (slot, offset) in sys.delta_a.iter_mut().zip(offsets) {
                *slot = delta - offset;
            }
        }
    }
    sys
}

/// Single-atom view of a two-atom template: same cavity, drive, and coupling.
fn single_view(sys: &SystemParams) -> SystemParams {
    let mut one = sys.clone();
    one.delta_a = vec![sys.delta_a[0]];
    one.phi = 0.0;
    one
}

fn thermal_params(spec: &ThermalSpec, delta_c: f64) -> ThermalParams {
    ThermalParams {
        tau: spec.tau,
        base_detuning: delta_c - spec.offset,
        quad_order: spec.order,
    }
}

/// Thermally averaged observables for `sys` (thermal draws replace `delta_a`).
fn averaged(
    ctx: &PointContext,
    sys: &SystemParams,
    spec: &ThermalSpec,
    pick: impl Fn(Observables) -> f64,
) -> SimResult<f64> {
    let params = thermal_params(spec, sys.delta_c);
    if sys.n_atoms() == 2 {
        thermal_average_pair(
            |d1, d2| {
                let mut drawn = sys.clone();
                drawn.delta_a = vec![d1, d2];
                ctx.solve(&drawn).map(&pick)
            },
            &params,
            spec.mode,
        )
    } else {
        thermal_average(
            |d| {
                let mut drawn = sys.clone();
                drawn.delta_a = vec![d];
                ctx.solve(&drawn).map(&pick)
            },
            &params,
        )
    }
}

fn mean_photons(ctx: &PointContext, sys: &SystemParams, spec: Option<&ThermalSpec>) -> SimResult<f64> {
    match spec {
        Some(spec) => averaged(ctx, sys, spec, |o| o.mean_photons),
        None => ctx.solve(sys).map(|o| o.mean_photons),
    }
}

fn pair_moment(ctx: &PointContext, sys: &SystemParams, spec: Option<&ThermalSpec>) -> SimResult<f64> {
    match spec {
        Some(spec) => averaged(ctx, sys, spec, |o| o.pair_moment),
        None => ctx.solve(sys).map(|o| o.pair_moment),
    }
}

fn evaluate(
    exp: &Experiment,
    curve: &CurveSpec,
    value: AxisValue,
    ctx: &PointContext,
) -> SimResult<f64> {
    let sys = system_at(curve, value);
    let k = exp.rate_constant.value(sys.kappa_oc);
    let thermal = curve.thermal.as_ref();
    match curve.quantity {
        Quantity::Rate => {
            let r_full = k * mean_photons(ctx, &sys, thermal)?;
            match curve.eta {
                None => Ok(r_full),
                Some(eta) => {
                    let pumping = PumpingParams { eta };
                    if sys.n_atoms() == 1 {
                        Ok(pumped_single_rate(r_full, &pumping))
                    } else {
                        let one = single_view(&sys);
                        let r_one = k * mean_photons(ctx, &one, thermal)?;
                        Ok(mixture_rate(r_full, r_one, &pumping))
                    }
                }
            }
        }
        Quantity::G2Zero => {
            let mut components = Vec::new();
            match curve.eta {
                None => components.push(MixtureComponent {
                    probability: 1.0,
                    rate: k * mean_photons(ctx, &sys, thermal)?,
                    correlations: vec![k * k * pair_moment(ctx, &sys, thermal)?],
                }),
                Some(eta) => {
                    components.push(MixtureComponent {
                        probability: eta * eta,
                        rate: k * mean_photons(ctx, &sys, thermal)?,
                        correlations: vec![k * k * pair_moment(ctx, &sys, thermal)?],
                    });
                    let one = single_view(&sys);
                    components.push(MixtureComponent {
                        probability: 2.0 * eta * (1.0 - eta),
                        rate: k * mean_photons(ctx, &one, thermal)?,
                        correlations: vec![k * k * pair_moment(ctx, &one, thermal)?],
                    });
                }
            }
            let (_, values) = mixture_g2(&[0.0], &components)?;
            Ok(values[0])
        }
        Quantity::G2Tau => Err(Error::InvalidParameter(
            "delayed correlations are evaluated per curve, not per point".into(),
        )),
    }
}

/// Whole-curve g²(τ): one steady state, one propagation over all delays.
fn delay_curve(curve: &CurveSpec, taus: &[f64]) -> Vec<Cell> {
    let result = (|| -> SimResult<Vec<f64>> {
        let model = build_model(&curve.system)?;
        let rho = model.steady_state()?;
        Ok(g2_of_tau(&model, &rho, taus)?.values)
    })();
    match result {
        Ok(values) => values.into_iter().map(Ok).collect(),
        Err(e) => vec![Err(e.to_string()); taus.len()],
    }
}

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

/// Numbers in metadata: shortest form, nano-rounded so unit conversions that
/// are exact analytically stay exact in print.
fn fmt_meta(v: f64) -> String {
    let rounded = (v * 1e9).round() / 1e9;
    format!("{rounded}")
}

fn mhz(omega: f64) -> f64 {
    omega / (TWO_PI * 1e6)
}

fn khz(omega: f64) -> f64 {
    omega / (TWO_PI * 1e3)
}

fn sanitize(message: &str) -> String {
    message.replace(',', ";").replace('\n', " ")
}

fn curve_metadata(exp: &Experiment, curve: &CurveSpec) -> String {
    let sys = &curve.system;
    let mut parts = vec![
        format!("atoms={}", sys.n_atoms()),
        format!("g_mhz={}", fmt_meta(mhz(sys.g))),
        format!("kappa_mhz={}", fmt_meta(mhz(sys.kappa))),
        format!("kappa_oc_mhz={}", fmt_meta(mhz(sys.kappa_oc))),
        format!("gamma_mhz={}", fmt_meta(mhz(sys.gamma))),
        format!("omega_drive_khz={}", fmt_meta(khz(sys.omega_drive))),
        format!("n_max={}", sys.n_max),
    ];
    let scanned_detuning = matches!(exp.scan, ScanAxis::Detuning(_));
    if scanned_detuning {
        parts.push("delta_c_mhz=scan".into());
    } else {
        parts.push(format!("delta_c_mhz={}", fmt_meta(mhz(sys.delta_c))));
    }
    if curve.thermal.is_none() {
        if scanned_detuning {
            let offset = mhz(sys.delta_c - sys.delta_a[0]);
            if offset == 0.0 {
                parts.push("delta_a_mhz=scan".into());
            } else if offset > 0.0 {
                parts.push(format!("delta_a_mhz=scan-{}", fmt_meta(offset)));
            } else {
                parts.push(format!("delta_a_mhz=scan+{}", fmt_meta(-offset)));
            }
        } else {
            parts.push(format!("delta_a_mhz={}", fmt_meta(mhz(sys.delta_a[0]))));
        }
    } else {
        parts.push("delta_a_mhz=thermal".into());
    }
    if sys.n_atoms() == 2 {
        if matches!(exp.scan, ScanAxis::Phi(_) | ScanAxis::Sites(_)) {
            parts.push("phi_rad=scan".into());
        } else {
            parts.push(format!("phi_rad={}", fmt_meta(sys.phi)));
        }
    }
    if let Some(thermal) = &curve.thermal {
        parts.push(format!("thermal.tau_mhz={}", fmt_meta(mhz(thermal.tau))));
        parts.push(format!(
            "thermal.trap_bottom_offset_mhz={}",
            fmt_meta(mhz(thermal.offset))
        ));
        parts.push(format!("thermal.quadrature_order={}", thermal.order));
        parts.push(format!("thermal.mode={:?}", thermal.mode).to_lowercase());
    }
    if let Some(eta) = curve.eta {
        parts.push(format!("pumping.eta={}", fmt_meta(eta)));
        if curve.quantity == Quantity::G2Zero {
            // Rates and correlations are mixture-averaged separately before
            // forming the quotient, as a time-averaged measurement would.
            parts.push("g2_model=separately_averaged_mixture".into());
        }
    }
    if curve.quantity != Quantity::G2Tau {
        parts.push(format!(
            "rate_constant_hz={}",
            fmt_meta(exp.rate_constant.value(sys.kappa_oc))
        ));
    }
    parts.join(" ")
}

fn write_csv(exp: &Experiment, rows: &[Vec<Cell>], out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "# simulate {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# experiment = {}", exp.label)?;
    writeln!(out, "# seed = {}", exp.seed)?;
    match exp.threads {
        Some(n) => writeln!(out, "# threads = {n}")?,
        None => writeln!(out, "# threads = auto")?,
    }
    writeln!(out, "# n_max = {}", exp.curves[0].system.n_max)?;
    writeln!(out, "# scan.axis = {}", exp.scan.kind_name())?;
    writeln!(out, "# scan.points = {}", exp.scan.len())?;
    match &exp.scan {
        ScanAxis::Phi(grid) => {
            writeln!(out, "# scan.start_rad = {}", fmt_meta(grid[0]))?;
            writeln!(out, "# scan.stop_rad = {}", fmt_meta(grid[grid.len() - 1]))?;
        }
        ScanAxis::Detuning(grid) => {
            writeln!(out, "# scan.start_mhz = {}", fmt_meta(mhz(grid[0])))?;
            writeln!(out, "# scan.stop_mhz = {}", fmt_meta(mhz(grid[grid.len() - 1])))?;
        }
        ScanAxis::Tau(grid) => {
            writeln!(out, "# scan.start_ns = {}", fmt_meta(grid[0] * 1e9))?;
            writeln!(out, "# scan.stop_ns = {}", fmt_meta(grid[grid.len() - 1] * 1e9))?;
        }
        ScanAxis::Sites(pairs) => {
            let list: Vec<String> =
                pairs.iter().map(|(x, y)| format!("{x},{y}")).collect();
            writeln!(out, "# scan.sites = {}", list.join("; "))?;
        }
    }
    for curve in &exp.curves {
        writeln!(out, "# curve {}: {}", curve.name, curve_metadata(exp, curve))?;
    }

    let axis_header = match &exp.scan {
        ScanAxis::Phi(_) => "phi_rad",
        ScanAxis::Detuning(_) => "probe_detuning_hz",
        ScanAxis::Tau(_) => "tau_s",
        ScanAxis::Sites(_) => "dnx,dny,phi_rad",
    };
    let names: Vec<&str> = exp.curves.iter().map(|c| c.name.as_str()).collect();
    writeln!(out, "{axis_header},{},error", names.join(","))?;

    for (i, row) in rows.iter().enumerate() {
        match &exp.scan {
            ScanAxis::Phi(grid) => write!(out, "{:.10e}", grid[i])?,
            ScanAxis::Detuning(grid) => write!(out, "{:.10e}", grid[i] / TWO_PI)?,
            ScanAxis::Tau(grid) => write!(out, "{:.10e}", grid[i])?,
            ScanAxis::Sites(pairs) => {
                let (dnx, dny) = pairs[i];
                let phi = phase_from_sites(SiteDifference { dnx, dny });
                write!(out, "{dnx},{dny},{phi:.10e}")?;
            }
        }
        let mut errors: Vec<String> = Vec::new();
        for (curve, cell) in exp.curves.iter().zip(row) {
            match cell {
                Ok(v) => write!(out, ",{v:.10e}")?,
                Err(message) => {
                    write!(out, ",nan")?;
                    errors.push(sanitize(&format!("{}: {message}", curve.name)));
                }
            }
        }
        writeln!(out, ",{}", errors.join("; "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{self, CliOverrides};
    use cavity_sim::units::angular_mhz;

    fn run_to_string(exp: &Experiment) -> (RunOutcome, String) {
        let mut buf = Vec::new();
        let outcome = run(exp, &mut buf).unwrap();
        (outcome, String::from_utf8(buf).unwrap())
    }

    fn resolve(text: &str) -> Experiment {
        let mut cfg = crate::config::parse(text).unwrap();
        let mut exp = experiment::from_raw(&mut cfg).unwrap();
        experiment::apply_cli(&mut exp, &CliOverrides::default()).unwrap();
        exp
    }

    #[test]
    fn ideal_phase_scan_emits_ordered_rows() {
        let exp = resolve("preset = fig3a\nideal = true\nscan.phi.points = 5\n");
        let (outcome, text) = run_to_string(&exp);
        assert_eq!(outcome.points, 5);
        assert_eq!(outcome.failed_points, 0);
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data[0], "phi_rad,rate_hz_ideal,error");
        assert_eq!(data.len(), 6);
        let phis: Vec<f64> = data[1..]
            .iter()
            .map(|l| l.split(',').next().unwrap().parse().unwrap())
            .collect();
        assert!(phis.windows(2).all(|w| w[1] > w[0]));
        // Constructive and destructive interference differ strongly.
        let rates: Vec<f64> =
            data[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
        let max = rates.iter().cloned().fold(0.0, f64::max);
        let min = rates.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min > 3.0, "max {max}, min {min}");
    }

    #[test]
    fn site_rows_carry_their_phase() {
        let exp = resolve("preset = fig3a\nideal = true\nscan.sites = 0,1; 0,2; 1,0\n");
        let (_, text) = run_to_string(&exp);
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data[0], "dnx,dny,phi_rad,rate_hz_ideal,error");
        let row: Vec<&str> = data[1].split(',').collect();
        assert_eq!(&row[..2], ["0", "1"]);
        let phi: f64 = row[2].parse().unwrap();
        assert!((phi - std::f64::consts::PI).abs() < 1e-9);
        let row2: Vec<&str> = data[2].split(',').collect();
        assert_eq!(row2[2].parse::<f64>().unwrap(), 0.0);
    }

    #[test]
    fn detuning_rows_report_linear_hz() {
        let exp = resolve(
            "system.atoms = 1\nscan.detuning.points = 3\nscan.detuning.start_mhz = -5\nscan.detuning.stop_mhz = 5\n",
        );
        let (_, text) = run_to_string(&exp);
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        let first: f64 = data[1].split(',').next().unwrap().parse().unwrap();
        assert!((first + 5e6).abs() < 1.0, "{first}");
    }

    #[test]
    fn solver_failures_flag_the_error_column() {
        // An order-2 quadrature cannot meet the doubling check at this τ.
        let exp = resolve(
            "system.atoms = 1\nthermal.tau_mhz = 5\nthermal.quadrature_order = 2\nscan.detuning.points = 2\nscan.detuning.start_mhz = -14\nscan.detuning.stop_mhz = 14\n",
        );
        let (outcome, text) = run_to_string(&exp);
        assert_eq!(outcome.points, 2);
        assert!(outcome.failed_points > 0);
        assert!(outcome.mostly_failed());
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        let failing: Vec<&str> =
            data[1..].iter().filter(|l| l.contains("nan")).cloned().collect();
        assert!(!failing.is_empty());
        assert!(failing[0].contains("rate_hz:"), "{}", failing[0]);
    }

    #[test]
    fn byte_identical_reruns() {
        let exp = resolve("preset = fig3b\nideal = true\nscan.phi.points = 4\n");
        let (_, a) = run_to_string(&exp);
        let (_, b) = run_to_string(&exp);
        assert_eq!(a, b);
        assert!(!a.contains('\r'));
    }

    #[test]
    fn metadata_names_every_parameter() {
        let exp = resolve("preset = figS4\n");
        let mut buf = Vec::new();
        write_csv(&exp, &[], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for needle in [
            "# simulate ",
            "# experiment = figS4",
            "# scan.axis = detuning",
            "g_mhz=7.6",
            "kappa_mhz=2.8",
            "kappa_oc_mhz=2.4",
            "gamma_mhz=3",
            "omega_drive_khz=300",
            "thermal.tau_mhz=2.28",
            "thermal.trap_bottom_offset_mhz=2.89",
            "thermal.quadrature_order=64",
            "thermal.mode=common",
            "pumping.eta=0.87",
            "rate_constant_hz=30400000",
            "n_max=4",
        ] {
            assert!(text.contains(needle), "missing {needle} in:\n{text}");
        }
        assert!(!text.contains("202"), "metadata must not embed timestamps:\n{text}");
    }

    #[test]
    fn g2_mixture_differs_from_pure_two_atom_value() {
        let ideal = resolve("preset = fig3b\nideal = true\nscan.phi.points = 2\n");
        let mixed = resolve(
            "preset = fig3b\nthermal.tau_mhz = 0\nthermal.trap_bottom_offset_mhz = 0\nscan.phi.points = 2\n",
        );
        let pick = |text: &str, col: usize| -> Vec<f64> {
            text.lines()
                .filter(|l| !l.starts_with('#'))
                .skip(1)
                .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
                .collect()
        };
        let (_, ideal_text) = run_to_string(&ideal);
        let (_, mixed_text) = run_to_string(&mixed);
        // Row 1 is φ=π on the two-point [0, 2π) grid; with the thermal spread
        // frozen the g2_full column differs from g2_ideal only by the
        // imperfect-pumping mixture.
        let g2_ideal = pick(&ideal_text, 1)[1];
        let g2_full = pick(&mixed_text, 2)[1];
        assert!(g2_ideal > 20.0, "{g2_ideal}");
        assert!(g2_full.is_finite() && g2_full > 1.0, "{g2_full}");
        assert!((g2_full - g2_ideal).abs() > 1e-6, "mixture should shift g2");
    }

    #[test]
    fn thermal_tau_zero_matches_ideal_exactly() {
        let ideal = resolve("preset = fig3a\nideal = true\nscan.phi.points = 3\n");
        let frozen = resolve(
            "preset = fig3a\nthermal.tau_mhz = 0\nthermal.trap_bottom_offset_mhz = 0\nscan.phi.points = 3\n",
        );
        let (_, a) = run_to_string(&ideal);
        let (_, b) = run_to_string(&frozen);
        let col = |text: &str, idx: usize| -> Vec<f64> {
            text.lines()
                .filter(|l| !l.starts_with('#'))
                .skip(1)
                .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
                .collect()
        };
        assert_eq!(col(&a, 1), col(&b, 2));
    }

    #[test]
    fn rate_constant_variant_scales_output() {
        let calibrated = resolve("system.atoms = 1\nscan.detuning.points = 1\n");
        let twice = resolve(
            "system.atoms = 1\nscan.detuning.points = 1\nrate_constant = twice_kappa_oc\n",
        );
        let value = |exp: &Experiment| -> f64 {
            let (_, text) = run_to_string(exp);
            let row = text.lines().filter(|l| !l.starts_with('#')).nth(1).unwrap();
            row.split(',').nth(1).unwrap().parse().unwrap()
        };
        let a = value(&calibrated);
        let b = value(&twice);
        let expected = 2.0 * angular_mhz(2.4) / 3.04e7;
        assert!((b / a - expected).abs() < 1e-9 * expected, "{a} {b}");
    }
}
