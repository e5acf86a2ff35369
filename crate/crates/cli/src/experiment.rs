//! Runnable experiment descriptions: which quantity is measured, over which
//! scan axis, for which system variants, plus the preset catalogue and the
//! resolution of configuration files into experiments.

use std::path::PathBuf;

use cavity_sim::ensemble::ThermalMode;
use cavity_sim::models::{RateConstant, SystemParams};
use cavity_sim::units::{angular_khz, angular_mhz, TWO_PI};

use crate::config::{ConfigError, RawConfig, Value};

/// Names accepted as `simulate <preset>`.
pub const PRESET_NAMES: [&str; 8] = [
    "fig3a",
    "fig3b",
    "fig4b",
    "fig4c",
    "figS3",
    "figS4",
    "figS5",
    "single_atom_baseline",
];

/// Optical-pumping efficiency of the preparation sequence.
pub const PUMPING_EFFICIENCY: f64 = 0.87;

/// What a curve reports at each scan point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// Steady-state photon emission rate in Hz.
    Rate,
    /// Equal-time intensity correlation g²(0).
    G2Zero,
    /// Delayed intensity correlation g²(τ); the scan axis is τ itself.
    G2Tau,
}

/// Thermal inhomogeneous broadening of the atomic detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalSpec {
    /// Temperature parameter τ (rad/s): detuning shift per unit of the
    /// dimensionless thermal coordinate.
    pub tau: f64,
    /// How far the trap-bottom atom sits above the cavity resonance (rad/s).
    pub offset: f64,
    /// Gauss–Laguerre quadrature order (a doubled-order check guards accuracy).
    pub order: usize,
    /// Whether the two atoms share one thermal coordinate or draw independently.
    pub mode: ThermalMode,
}

/// One output column: a system variant and the quantity evaluated on it.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    pub name: String,
    /// Template parameters; the scanned field is overwritten per point.
    pub system: SystemParams,
    pub thermal: Option<ThermalSpec>,
    /// Optical-pumping efficiency; `None` means perfect preparation.
    pub eta: Option<f64>,
    pub quantity: Quantity,
}

impl CurveSpec {
    fn same_physics(&self, other: &CurveSpec) -> bool {
        self.system == other.system
            && self.thermal == other.thermal
            && self.eta == other.eta
            && self.quantity == other.quantity
    }
}

/// The independent variable of a scan.
#[derive(Debug, Clone, PartialEq)]
pub enum ScanAxis {
    /// Interatomic phase φ in radians.
    Phi(Vec<f64>),
    /// Laser−cavity detuning in rad/s; the atoms follow as configured.
    Detuning(Vec<f64>),
    /// Correlation delay τ in seconds.
    Tau(Vec<f64>),
    /// Lattice site differences; each row carries its derived phase.
    Sites(Vec<(i64, i64)>),
}

impl ScanAxis {
    pub fn len(&self) -> usize {
        match self {
            ScanAxis::Phi(g) | ScanAxis::Detuning(g) | ScanAxis::Tau(g) => g.len(),
            ScanAxis::Sites(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ScanAxis::Phi(_) => "phi",
            ScanAxis::Detuning(_) => "detuning",
            ScanAxis::Tau(_) => "tau",
            ScanAxis::Sites(_) => "sites",
        }
    }
}

/// A fully resolved, runnable experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    /// Preset name, or `custom` for config-built experiments.
    pub label: String,
    pub curves: Vec<CurveSpec>,
    pub scan: ScanAxis,
    pub rate_constant: RateConstant,
    pub seed: u64,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
}

fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![start];
    }
    (0..points)
        .map(|i| start + (stop - start) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Uniform grid over [0, 2π): the last point stops one step short of 2π.
fn phase_grid(points: usize) -> Vec<f64> {
    (0..points).map(|j| TWO_PI * j as f64 / points as f64).collect()
}

fn detuning_grid_mhz(start: f64, stop: f64, points: usize) -> Vec<f64> {
    linspace(start, stop, points).into_iter().map(angular_mhz).collect()
}

/// Shared cavity/atom working parameters of all presets.
fn base_system(atoms: usize) -> SystemParams {
    SystemParams {
        g: angular_mhz(7.6),
        kappa: angular_mhz(2.8),
        kappa_oc: angular_mhz(2.4),
        gamma: angular_mhz(3.0),
        omega_drive: angular_khz(920.0),
        delta_c: 0.0,
        delta_a: vec![0.0; atoms],
        phi: 0.0,
        n_max: 4,
    }
}

/// Thermal model fitted to the single-atom detuning scan.
fn fitted_thermal(order: usize) -> ThermalSpec {
    ThermalSpec {
        tau: angular_mhz(2.28),
        offset: angular_mhz(2.89),
        order,
        mode: ThermalMode::Common,
    }
}

fn experiment(label: &str, curves: Vec<CurveSpec>, scan: ScanAxis) -> Experiment {
    Experiment {
        label: label.to_string(),
        curves,
        scan,
        rate_constant: RateConstant::Calibrated,
        seed: 0,
        threads: None,
        output: None,
    }
}

/// Emission rate vs φ with imperfections added one at a time.  `fig3a` and
/// `figS5` share this curve set; the 75 kHz single-atom reference line is the
/// `single_atom_baseline` preset.
fn phase_rate_scan(label: &str) -> Experiment {
    let sys = base_system(2);
    let curves = vec![
        CurveSpec {
            name: "rate_hz_ideal".into(),
            system: sys.clone(),
            thermal: None,
            eta: None,
            quantity: Quantity::Rate,
        },
        CurveSpec {
            name: "rate_hz_thermal".into(),
            system: sys.clone(),
            thermal: Some(fitted_thermal(32)),
            eta: None,
            quantity: Quantity::Rate,
        },
        CurveSpec {
            name: "rate_hz_thermal_pumping".into(),
            system: sys,
            thermal: Some(fitted_thermal(32)),
            eta: Some(PUMPING_EFFICIENCY),
            quantity: Quantity::Rate,
        },
    ];
    experiment(label, curves, ScanAxis::Phi(phase_grid(49)))
}

/// Photon statistics g²(0) vs φ, ideal and with all imperfections.
fn phase_statistics_scan() -> Experiment {
    let sys = base_system(2);
    let curves = vec![
        CurveSpec {
            name: "g2_ideal".into(),
            system: sys.clone(),
            thermal: None,
            eta: None,
            quantity: Quantity::G2Zero,
        },
        CurveSpec {
            name: "g2_full".into(),
            system: sys,
            thermal: Some(fitted_thermal(32)),
            eta: Some(PUMPING_EFFICIENCY),
            quantity: Quantity::G2Zero,
        },
    ];
    experiment("fig3b", curves, ScanAxis::Phi(phase_grid(49)))
}

/// g²(τ) at fixed φ; the range covers several collective vacuum-Rabi periods.
fn correlation_scan(label: &str, phi: f64, stop_s: f64, points: usize) -> Experiment {
    let mut sys = base_system(2);
    sys.phi = phi;
    let curves = vec![CurveSpec {
        name: "g2".into(),
        system: sys,
        thermal: None,
        eta: None,
        quantity: Quantity::G2Tau,
    }];
    experiment(label, curves, ScanAxis::Tau(linspace(0.0, stop_s, points)))
}

/// Single-atom detuning scans at several temperatures, trap bottom detuned by τ.
fn temperature_scan() -> Experiment {
    let mut sys = base_system(1);
    sys.omega_drive = angular_khz(200.0);
    let table: [(f64, usize, &str); 4] = [
        (0.0, 32, "rate_hz_tau0p00"),
        (1.0, 32, "rate_hz_tau1p00"),
        (2.28, 64, "rate_hz_tau2p28"),
        (5.0, 128, "rate_hz_tau5p00"),
    ];
    let curves = table
        .into_iter()
        .map(|(tau_mhz, order, name)| CurveSpec {
            name: name.into(),
            system: sys.clone(),
            thermal: Some(ThermalSpec {
                tau: angular_mhz(tau_mhz),
                offset: angular_mhz(tau_mhz),
                order,
                mode: ThermalMode::Common,
            }),
            eta: None,
            quantity: Quantity::Rate,
        })
        .collect();
    experiment("figS3", curves, ScanAxis::Detuning(detuning_grid_mhz(-14.0, 14.0, 113)))
}

/// One vs two in-phase atoms across the probe detuning, with the fitted
/// imperfection chain applied to both.
fn collective_splitting_scan() -> Experiment {
    let mut one = base_system(1);
    one.omega_drive = angular_khz(300.0);
    let mut two = base_system(2);
    two.omega_drive = angular_khz(300.0);
    let curves = vec![
        CurveSpec {
            name: "rate_hz_one_atom".into(),
            system: one,
            thermal: Some(fitted_thermal(64)),
            eta: Some(PUMPING_EFFICIENCY),
            quantity: Quantity::Rate,
        },
        CurveSpec {
            name: "rate_hz_two_atom".into(),
            system: two,
            thermal: Some(fitted_thermal(64)),
            eta: Some(PUMPING_EFFICIENCY),
            quantity: Quantity::Rate,
        },
    ];
    experiment("figS4", curves, ScanAxis::Detuning(detuning_grid_mhz(-14.0, 14.0, 57)))
}

/// The resonant single-atom emission rate under the fitted imperfections.
fn single_atom_baseline() -> Experiment {
    let curves = vec![CurveSpec {
        name: "rate_hz".into(),
        system: base_system(1),
        thermal: Some(fitted_thermal(32)),
        eta: Some(PUMPING_EFFICIENCY),
        quantity: Quantity::Rate,
    }];
    experiment("single_atom_baseline", curves, ScanAxis::Detuning(vec![0.0]))
}

/// Look up a preset by name.
pub fn preset(name: &str) -> Result<Experiment, ConfigError> {
    match name {
        "fig3a" => Ok(phase_rate_scan("fig3a")),
        "figS5" => Ok(phase_rate_scan("figS5")),
        "fig3b" => Ok(phase_statistics_scan()),
        "fig4b" => Ok(correlation_scan("fig4b", std::f64::consts::PI, 400e-9, 81)),
        "fig4c" => Ok(correlation_scan("fig4c", 0.0, 300e-9, 61)),
        "figS3" => Ok(temperature_scan()),
        "figS4" => Ok(collective_splitting_scan()),
        "single_atom_baseline" => Ok(single_atom_baseline()),
        _ => Err(ConfigError::new(format!(
            "unknown preset `{name}`; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

/// Strip thermal and pumping imperfections, then drop curves that became
/// physically identical (keeping the first of each group).
pub fn make_ideal(exp: &mut Experiment) {
    for curve in &mut exp.curves {
        curve.thermal = None;
        curve.eta = None;
    }
    let mut kept: Vec<CurveSpec> = Vec::new();
    for curve in exp.curves.drain(..) {
        if !kept.iter().any(|k| k.same_physics(&curve)) {
            kept.push(curve);
        }
    }
    exp.curves = kept;
}

/// Command-line settings layered over a preset or config file.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub n_max: Option<usize>,
    pub ideal: bool,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

pub fn apply_cli(exp: &mut Experiment, cli: &CliOverrides) -> Result<(), ConfigError> {
    if let Some(n_max) = cli.n_max {
        for curve in &mut exp.curves {
            curve.system.n_max = n_max;
        }
    }
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(ConfigError::new("--threads must be at least 1"));
        }
        exp.threads = Some(threads);
    }
    if let Some(seed) = cli.seed {
        exp.seed = seed;
    }
    if let Some(path) = &cli.output {
        exp.output = Some(path.clone());
    }
    if cli.ideal {
        make_ideal(exp);
    }
    validate(exp)
}

/// Build an experiment from a parsed configuration file.
pub fn from_raw(cfg: &mut RawConfig) -> Result<Experiment, ConfigError> {
    let mut exp = match cfg.take("preset") {
        Some(v) => {
            let mut exp = preset(v.str()).map_err(|e| ConfigError::at(v.line(), e.message))?;
            apply_preset_overrides(&mut exp, cfg)?;
            exp
        }
        None => custom_experiment(cfg)?,
    };

    if let Some(v) = cfg.take("rate_constant") {
        exp.rate_constant = match v.keyword(&["calibrated", "twice_kappa_oc"])?.as_str() {
            "calibrated" => RateConstant::Calibrated,
            _ => RateConstant::TwiceKappaOc,
        };
    }
    if let Some(v) = cfg.take("seed") {
        exp.seed = v.u64()?;
    }
    if let Some(v) = cfg.take("threads") {
        let threads = v.usize()?;
        if threads == 0 {
            return Err(ConfigError::at(v.line(), "threads: must be at least 1"));
        }
        exp.threads = Some(threads);
    }
    if let Some(v) = cfg.take("output.path") {
        exp.output = Some(PathBuf::from(v.str()));
    }
    if let Some(v) = cfg.take("ideal") {
        if v.keyword(&["true", "false"])? == "true" {
            make_ideal(&mut exp);
        }
    }

    cfg.ensure_consumed()?;
    validate(&exp)?;
    Ok(exp)
}

/// Collected as (value, field) so preset application can check uniformity;
/// for custom experiments the caller applies them to the single template.
fn take_system_overrides(cfg: &mut RawConfig) -> Vec<(Value, SystemField)> {
    let fields = [
        ("system.g_mhz", SystemField::G),
        ("system.kappa_mhz", SystemField::Kappa),
        ("system.kappa_oc_mhz", SystemField::KappaOc),
        ("system.gamma_mhz", SystemField::Gamma),
        ("system.omega_drive_khz", SystemField::OmegaDrive),
        ("system.delta_c_mhz", SystemField::DeltaC),
        ("system.delta_a_mhz", SystemField::DeltaA),
        ("system.phi_rad", SystemField::Phi),
        ("system.n_max", SystemField::NMax),
    ];
    let mut out = Vec::new();
    for (key, field) in fields {
        if let Some(v) = cfg.take(key) {
            out.push((v, field));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SystemField {
    G,
    Kappa,
    KappaOc,
    Gamma,
    OmegaDrive,
    DeltaC,
    DeltaA,
    Phi,
    NMax,
}

impl SystemField {
    fn current(self, sys: &SystemParams) -> f64 {
        match self {
            SystemField::G => sys.g,
            SystemField::Kappa => sys.kappa,
            SystemField::KappaOc => sys.kappa_oc,
            SystemField::Gamma => sys.gamma,
            SystemField::OmegaDrive => sys.omega_drive,
            SystemField::DeltaC => sys.delta_c,
            SystemField::DeltaA => sys.delta_a[0],
            SystemField::Phi => sys.phi,
            SystemField::NMax => sys.n_max as f64,
        }
    }

    fn apply(self, sys: &mut SystemParams, v: &Value) -> Result<(), ConfigError> {
        match self {
            SystemField::G => sys.g = angular_mhz(v.positive_f64()?),
            SystemField::Kappa => sys.kappa = angular_mhz(v.positive_f64()?),
            SystemField::KappaOc => sys.kappa_oc = angular_mhz(v.positive_f64()?),
            SystemField::Gamma => sys.gamma = angular_mhz(v.positive_f64()?),
            SystemField::OmegaDrive => sys.omega_drive = angular_khz(v.nonnegative_f64()?),
            SystemField::DeltaC => sys.delta_c = angular_mhz(v.f64()?),
            SystemField::DeltaA => {
                let d = angular_mhz(v.f64()?);
                for slot in &mut sys.delta_a {
                    *slot = d;
                }
            }
            SystemField::Phi => sys.phi = v.f64()?,
            SystemField::NMax => sys.n_max = v.usize()?,
        }
        Ok(())
    }
}

fn apply_preset_overrides(exp: &mut Experiment, cfg: &mut RawConfig) -> Result<(), ConfigError> {
    if let Some(v) = cfg.take("quantity") {
        return Err(ConfigError::at(
            v.line(),
            format!("quantity: fixed by preset `{}`", exp.label),
        ));
    }
    if let Some(v) = cfg.take("system.atoms") {
        return Err(ConfigError::at(
            v.line(),
            format!("system.atoms: fixed by preset `{}`", exp.label),
        ));
    }

    for (v, field) in take_system_overrides(cfg) {
        let first = field.current(&exp.curves[0].system);
        if exp.curves.iter().any(|c| field.current(&c.system) != first) {
            return Err(ConfigError::at(
                v.line(),
                format!("{}: preset `{}` sets this per curve; it cannot be overridden globally", v.key(), exp.label),
            ));
        }
        for curve in &mut exp.curves {
            field.apply(&mut curve.system, &v)?;
        }
    }

    apply_thermal_overrides(exp, cfg)?;
    if let Some(v) = cfg.take("pumping.eta") {
        let eta = parse_eta(&v)?;
        if !exp.curves.iter().any(|c| c.eta.is_some()) {
            return Err(ConfigError::at(
                v.line(),
                format!("pumping.eta: preset `{}` has no pumped curve", exp.label),
            ));
        }
        for curve in &mut exp.curves {
            if curve.eta.is_some() {
                curve.eta = Some(eta);
            }
        }
    }

    if let Some(axis) = read_scan(cfg)? {
        let compatible = axis.kind_name() == exp.scan.kind_name()
            || (matches!(axis, ScanAxis::Sites(_)) && matches!(exp.scan, ScanAxis::Phi(_)));
        if !compatible {
            return Err(ConfigError::new(format!(
                "preset `{}` scans {}; a {} grid does not apply",
                exp.label,
                exp.scan.kind_name(),
                axis.kind_name()
            )));
        }
        exp.scan = axis;
    }
    Ok(())
}

fn apply_thermal_overrides(exp: &mut Experiment, cfg: &mut RawConfig) -> Result<(), ConfigError> {
    let keys = [
        "thermal.tau_mhz",
        "thermal.trap_bottom_offset_mhz",
        "thermal.quadrature_order",
        "thermal.mode",
    ];
    for key in keys {
        let Some(v) = cfg.take(key) else { continue };
        let thermal_curves: Vec<&ThermalSpec> =
            exp.curves.iter().filter_map(|c| c.thermal.as_ref()).collect();
        if thermal_curves.is_empty() {
            return Err(ConfigError::at(
                v.line(),
                format!("{key}: preset `{}` has no thermal curve", exp.label),
            ));
        }
        let first = thermal_curves[0].clone();
        if thermal_curves.iter().any(|t| **t != first) {
            return Err(ConfigError::at(
                v.line(),
                format!("{key}: preset `{}` sets thermal parameters per curve; they cannot be overridden globally", exp.label),
            ));
        }
        let mut updated = first;
        match key {
            "thermal.tau_mhz" => updated.tau = angular_mhz(v.nonnegative_f64()?),
            "thermal.trap_bottom_offset_mhz" => updated.offset = angular_mhz(v.f64()?),
            "thermal.quadrature_order" => updated.order = v.usize()?,
            _ => updated.mode = parse_mode(&v)?,
        }
        for curve in &mut exp.curves {
            if curve.thermal.is_some() {
                curve.thermal = Some(updated.clone());
            }
        }
    }
    Ok(())
}

fn parse_mode(v: &Value) -> Result<ThermalMode, ConfigError> {
    Ok(match v.keyword(&["common", "independent"])?.as_str() {
        "common" => ThermalMode::Common,
        _ => ThermalMode::Independent,
    })
}

fn parse_eta(v: &Value) -> Result<f64, ConfigError> {
    let eta = v.positive_f64()?;
    if eta > 1.0 {
        return Err(ConfigError::at(
            v.line(),
            format!("{}: efficiency must lie in (0, 1], got {eta}", v.key()),
        ));
    }
    Ok(eta)
}

fn custom_experiment(cfg: &mut RawConfig) -> Result<Experiment, ConfigError> {
    let quantity = match cfg.take("quantity") {
        Some(v) => match v.keyword(&["rate", "g2_zero", "g2_tau"])?.as_str() {
            "rate" => Quantity::Rate,
            "g2_zero" => Quantity::G2Zero,
            _ => Quantity::G2Tau,
        },
        None => Quantity::Rate,
    };

    let atoms = match cfg.take("system.atoms") {
        Some(v) => {
            let n = v.usize()?;
            if n != 1 && n != 2 {
                return Err(ConfigError::at(
                    v.line(),
                    format!("system.atoms: expected 1 or 2, got {n}"),
                ));
            }
            n
        }
        None => 2,
    };

    let mut sys = base_system(atoms);
    for (v, field) in take_system_overrides(cfg) {
        field.apply(&mut sys, &v)?;
    }

    let thermal = if cfg.has_prefix("thermal.") {
        let Some(tau_v) = cfg.take("thermal.tau_mhz") else {
            return Err(ConfigError::new(
                "thermal.* keys given but thermal.tau_mhz is missing",
            ));
        };
        let tau = angular_mhz(tau_v.nonnegative_f64()?);
        let offset = match cfg.take("thermal.trap_bottom_offset_mhz") {
            Some(v) => angular_mhz(v.f64()?),
            None => angular_mhz(2.89),
        };
        let order = match cfg.take("thermal.quadrature_order") {
            Some(v) => v.usize()?,
            None => 32,
        };
        let mode = match cfg.take("thermal.mode") {
            Some(v) => parse_mode(&v)?,
            None => ThermalMode::Common,
        };
        Some(ThermalSpec { tau, offset, order, mode })
    } else {
        None
    };

    let eta = match cfg.take("pumping.eta") {
        Some(v) => Some(parse_eta(&v)?),
        None => None,
    };

    let scan = read_scan(cfg)?.ok_or_else(|| {
        ConfigError::new(
            "no scan axis configured; set scan.phi.*, scan.detuning.*, scan.tau.*, or scan.sites",
        )
    })?;

    let name = match quantity {
        Quantity::Rate => "rate_hz",
        Quantity::G2Zero | Quantity::G2Tau => "g2",
    };
    let curves = vec![CurveSpec { name: name.into(), system: sys, thermal, eta, quantity }];
    Ok(experiment("custom", curves, scan))
}

/// Read whichever scan group is present; error if more than one is.
fn read_scan(cfg: &mut RawConfig) -> Result<Option<ScanAxis>, ConfigError> {
    let phi_points = cfg.take("scan.phi.points");
    let phi_start = cfg.take("scan.phi.start_rad");
    let phi_stop = cfg.take("scan.phi.stop_rad");
    let det_points = cfg.take("scan.detuning.points");
    let det_start = cfg.take("scan.detuning.start_mhz");
    let det_stop = cfg.take("scan.detuning.stop_mhz");
    let tau_points = cfg.take("scan.tau.points");
    let tau_start = cfg.take("scan.tau.start_ns");
    let tau_stop = cfg.take("scan.tau.stop_ns");
    let sites = cfg.take("scan.sites");

    let has_phi = phi_points.is_some() || phi_start.is_some() || phi_stop.is_some();
    let has_det = det_points.is_some() || det_start.is_some() || det_stop.is_some();
    let has_tau = tau_points.is_some() || tau_start.is_some() || tau_stop.is_some();
    let has_sites = sites.is_some();
    let groups = [has_phi, has_det, has_tau, has_sites].iter().filter(|b| **b).count();
    if groups == 0 {
        return Ok(None);
    }
    if groups > 1 {
        return Err(ConfigError::new(
            "configuration selects more than one scan axis; exactly one of scan.phi.*, scan.detuning.*, scan.tau.*, scan.sites is allowed",
        ));
    }

    let take_points = |v: Option<Value>, default: usize| -> Result<usize, ConfigError> {
        match v {
            Some(v) => {
                let n = v.usize()?;
                if n == 0 {
                    return Err(ConfigError::at(v.line(), format!("{}: scan grid must be non-empty", v.key())));
                }
                Ok(n)
            }
            None => Ok(default),
        }
    };

    if has_phi {
        let points = take_points(phi_points, 49)?;
        // Without explicit endpoints the grid covers [0, 2π) uniformly.
        if phi_start.is_none() && phi_stop.is_none() {
            return Ok(Some(ScanAxis::Phi(phase_grid(points))));
        }
        let start = phi_start.map(|v| v.f64()).transpose()?.unwrap_or(0.0);
        let stop = phi_stop.map(|v| v.f64()).transpose()?.unwrap_or(TWO_PI);
        require_ascending("scan.phi", start, stop, points)?;
        return Ok(Some(ScanAxis::Phi(linspace(start, stop, points))));
    }
    if has_det {
        let points = take_points(det_points, 113)?;
        let start = det_start.map(|v| v.f64()).transpose()?.unwrap_or(-14.0);
        let stop = det_stop.map(|v| v.f64()).transpose()?.unwrap_or(14.0);
        require_ascending("scan.detuning", start, stop, points)?;
        return Ok(Some(ScanAxis::Detuning(detuning_grid_mhz(start, stop, points))));
    }
    if has_tau {
        let points = take_points(tau_points, 81)?;
        let start = tau_start.map(|v| v.nonnegative_f64()).transpose()?.unwrap_or(0.0);
        let stop = tau_stop.map(|v| v.nonnegative_f64()).transpose()?.unwrap_or(400.0);
        require_ascending("scan.tau", start, stop, points)?;
        return Ok(Some(ScanAxis::Tau(linspace(start * 1e-9, stop * 1e-9, points))));
    }
    let v = sites.unwrap();
    let pairs = v.sites()?;
    if let Some((dnx, dny)) = pairs.iter().find(|(x, y)| *x == 0 && *y == 0) {
        return Err(ConfigError::at(
            v.line(),
            format!("scan.sites: difference ({dnx},{dny}) would put both atoms on the same site"),
        ));
    }
    Ok(Some(ScanAxis::Sites(pairs)))
}

fn require_ascending(key: &str, start: f64, stop: f64, points: usize) -> Result<(), ConfigError> {
    if points > 1 && stop <= start {
        return Err(ConfigError::new(format!(
            "{key}: stop ({stop}) must exceed start ({start}) for an ascending grid"
        )));
    }
    Ok(())
}

/// Check every invariant a runnable experiment must satisfy.
pub fn validate(exp: &Experiment) -> Result<(), ConfigError> {
    if exp.curves.is_empty() {
        return Err(ConfigError::new("experiment has no curves"));
    }
    if exp.scan.is_empty() {
        return Err(ConfigError::new("scan grid must be non-empty"));
    }
    match &exp.scan {
        ScanAxis::Phi(grid) | ScanAxis::Detuning(grid) => ensure_sorted(grid)?,
        ScanAxis::Tau(grid) => {
            ensure_sorted(grid)?;
            if grid[0] < 0.0 {
                return Err(ConfigError::new("correlation delays must be non-negative"));
            }
        }
        ScanAxis::Sites(pairs) => {
            if pairs.iter().any(|(x, y)| *x == 0 && *y == 0) {
                return Err(ConfigError::new(
                    "site difference (0,0) would put both atoms on the same site",
                ));
            }
        }
    }

    let tau_axis = matches!(exp.scan, ScanAxis::Tau(_));
    let phase_axis = matches!(exp.scan, ScanAxis::Phi(_) | ScanAxis::Sites(_));
    for curve in &exp.curves {
        let name = &curve.name;
        curve
            .system
            .validate()
            .map_err(|e| ConfigError::new(format!("curve {name}: {e}")))?;
        if let Some(thermal) = &curve.thermal {
            if !(thermal.tau.is_finite() && thermal.tau >= 0.0) {
                return Err(ConfigError::new(format!(
                    "curve {name}: thermal tau must be finite and non-negative"
                )));
            }
            if !thermal.offset.is_finite() {
                return Err(ConfigError::new(format!("curve {name}: thermal offset must be finite")));
            }
            if thermal.order < 2 {
                return Err(ConfigError::new(format!(
                    "curve {name}: quadrature order must be at least 2"
                )));
            }
        }
        if let Some(eta) = curve.eta {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(ConfigError::new(format!(
                    "curve {name}: pumping efficiency must lie in (0, 1]"
                )));
            }
        }
        match curve.quantity {
            Quantity::G2Tau => {
                if !tau_axis {
                    return Err(ConfigError::new(format!(
                        "curve {name}: g2_tau needs a scan.tau axis"
                    )));
                }
                if curve.thermal.is_some() || curve.eta.is_some() {
                    return Err(ConfigError::new(format!(
                        "curve {name}: delayed correlations support ideal dynamics only"
                    )));
                }
            }
            Quantity::Rate | Quantity::G2Zero => {
                if tau_axis {
                    return Err(ConfigError::new(format!(
                        "curve {name}: a tau axis requires quantity = g2_tau"
                    )));
                }
            }
        }
        if phase_axis && curve.system.n_atoms() != 2 {
            return Err(ConfigError::new(format!(
                "curve {name}: phase scans need two atoms"
            )));
        }
    }
    Ok(())
}

fn ensure_sorted(grid: &[f64]) -> Result<(), ConfigError> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConfigError::new("scan grid must be strictly ascending"));
    }
    Ok(())
}
