//! Parameter-sensitivity analysis and the sweep studies built on top of the
//! optimizer: coupling strength, bias step, phonon spectrum, loss rates, and
//! the zero-bias comparison.
//!
//! Sweeps always echo the exact grid they were asked for; a point that cannot
//! be evaluated carries an error marker instead of silently vanishing. Grid
//! points are independent and evaluated in parallel with per-point seeds
//! derived from the global seed and the point index, so results do not depend
//! on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{pinned_load_rate, RatePieces};
use crate::hamiltonian::{build, diagonalize, EigenBasis};
use crate::model::{
    ChainSpec, EnvProcess, LoadRate, ModelError, ModelParams, OperatorPattern, SpectralDensity,
    K_BOLTZMANN, LABEL_EXTRACTION, LABEL_INJECTION, LABEL_NONRADIATIVE, LABEL_OPTICAL,
    LABEL_PHONON, LABEL_RETURN,
};
use crate::observables::{
    emission_report, enhancement, max_power, power_reading, ObservableError, PowerReading,
};
use crate::optimize::{run_ensemble, EnergyProblem, Method, Objective};

/// Step in the scaled coordinate ln(theta) for sensitivity derivatives.
pub const SENSITIVITY_STEP: f64 = 1e-4;

/// Richardson floor, as a fraction of the report's largest derivative
/// magnitude. Directions flattened by a preceding optimization have true
/// derivatives near zero amid large curvature; measured against their own
/// magnitude their step-halving residual is pure truncation noise, so
/// stability is judged against the scale of the report instead.
pub const RICHARDSON_REL_FLOOR: f64 = 1e-2;

/// Ramps are recognized as uniform when adjacent steps agree to this.
const RAMP_TOL: f64 = 1e-9;

/// Band width of the per-temperature study: min/max over this many best
/// optima at each grid point.
const BAND_SIZE: usize = 5;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error("grid for {axis} must be non-empty, finite, and strictly monotone")]
    BadGrid { axis: &'static str },
    #[error("expected {expected} on-site energies, got {got}")]
    EnergyCount { expected: usize, got: usize },
    #[error("on-site energies do not form a uniform ramp; sweep needs a linear base chain")]
    RampNotUniform,
    #[error("bias grid must include 0")]
    MissingZeroPoint,
    #[error("no grid point clears the phonon linewidth {width}; peak position undefined everywhere")]
    PeakUndefinedEverywhere { width: f64 },
    #[error("power not evaluable at the sensitivity base point (power = {power})")]
    BaseNotEvaluable { power: f64 },
}

// ---------------------------------------------------------------------------
// Sensitivity
// ---------------------------------------------------------------------------

/// One parameter's entry in the sensitivity report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityEntry {
    /// 1-based position in the enumeration.
    pub index: usize,
    pub name: String,
    /// d(power)/d(ln theta). Unscalable entries carry the raw derivative
    /// d(power)/d(theta) at unit reference scale instead, or 0 when even the
    /// raw probe leaves the model invalid.
    pub derivative: f64,
    /// Step-halving residual |D(h) - D(h/2)| / max(|D(h)|, floor) with the
    /// floor set by [`RICHARDSON_REL_FLOOR`]; NaN when a probe failed.
    pub richardson: f64,
    /// Parameter sits at zero (or is otherwise not positive-finite), so a
    /// logarithmic step is undefined.
    pub unscalable: bool,
}

/// Log-sensitivities of the delivered power with respect to every scalar
/// model parameter, at one energy vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// Canonical enumeration: interior on-site energies (sites 2..N-1), the
    /// cold-bath / load-rate pair, the return pair, one (beta, width, peak,
    /// rate) quadruple per site's vibrational bath, the injection,
    /// extraction, and optical pairs, and the inter-site coupling. Exactly
    /// 5N + 9 entries for an N-site chain; temperatures enter as
    /// beta = 1/(k_B T).
    pub entries: Vec<SensitivityEntry>,
    /// Channels outside the canonical list: non-radiative decay, which is
    /// flagged unscalable when its rate is zero.
    pub extras: Vec<SensitivityEntry>,
    /// Power at the base point with the load pinned at `load_rate`.
    pub base_power: f64,
    /// Load rate found by maximizing power at the base point. Every probe
    /// holds it fixed so the derivative sees a smooth function rather than
    /// the kinked envelope of the inner load optimization; the load-rate
    /// entry itself then reports the near-zero slope at that optimum.
    pub load_rate: f64,
}

impl SensitivityReport {
    /// Entry by name, searching the canonical list first, then the extras.
    pub fn entry(&self, name: &str) -> Option<&SensitivityEntry> {
        self.entries
            .iter()
            .chain(self.extras.iter())
            .find(|e| e.name == name)
    }
}

/// A single scalar parameter of the model, with read/write access.
enum Knob {
    /// On-site energy of one chain site (1-based).
    Onsite(usize),
    /// Inverse ambient temperature 1/(k_B t_cold); thermalizes the load
    /// link and enters the voltage through the level-population ratio.
    ColdBeta,
    /// Pinned load rate.
    Load,
    /// Inverse bath temperature of a labeled process.
    ProcBeta(String),
    /// Coupling rate of a labeled process.
    ProcRate(String),
    /// Lorentzian linewidth of a labeled vibrational bath.
    PhononWidth(String),
    /// Lorentzian peak frequency of a labeled vibrational bath.
    PhononPeak(String),
    /// Nearest-neighbor coupling.
    Coupling,
    /// Shared inverse temperature of the non-radiative channels.
    NonradBeta,
    /// Shared rate of the non-radiative channels; setting it materializes
    /// or removes the per-site channels like the model-level editor does,
    /// except that a negative probe is pushed through so validation can
    /// reject it.
    NonradRate,
}

fn inv_kt(temperature: f64) -> f64 {
    1.0 / (K_BOLTZMANN * temperature)
}

impl Knob {
    fn get(&self, p: &ModelParams) -> f64 {
        match self {
            Knob::Onsite(site) => p.chain.onsite_energies[site - 1],
            Knob::ColdBeta => inv_kt(p.t_cold),
            Knob::Load => match p.load_rate {
                LoadRate::Pinned(g) => g,
                LoadRate::Optimized => f64::NAN,
            },
            Knob::ProcBeta(l) => p
                .process(l)
                .map(|q| inv_kt(q.spectrum.temperature()))
                .unwrap_or(f64::NAN),
            Knob::ProcRate(l) => p.process_rate(l),
            Knob::PhononWidth(l) => match p.process(l).map(|q| &q.spectrum) {
                Some(SpectralDensity::DrudeLorentz { width, .. }) => *width,
                _ => f64::NAN,
            },
            Knob::PhononPeak(l) => match p.process(l).map(|q| &q.spectrum) {
                Some(SpectralDensity::DrudeLorentz { omega0, .. }) => *omega0,
                _ => f64::NAN,
            },
            Knob::Coupling => p.chain.coupling.j_coupling(),
            Knob::NonradBeta => p
                .processes
                .iter()
                .find(|q| q.label.starts_with(LABEL_NONRADIATIVE))
                .map(|q| inv_kt(q.spectrum.temperature()))
                .unwrap_or(f64::NAN),
            Knob::NonradRate => p.nonradiative_rate(),
        }
    }

    fn set(&self, p: &mut ModelParams, v: f64) {
        match self {
            Knob::Onsite(site) => p.chain.onsite_energies[site - 1] = v,
            Knob::ColdBeta => p.t_cold = 1.0 / (K_BOLTZMANN * v),
            Knob::Load => p.load_rate = LoadRate::Pinned(v),
            Knob::ProcBeta(l) => {
                if let Some(q) = p.process_mut(l) {
                    q.spectrum.set_temperature(1.0 / (K_BOLTZMANN * v));
                }
            }
            Knob::ProcRate(l) => {
                let _ = p.set_process_rate(l, v);
            }
            Knob::PhononWidth(l) => {
                if let Some(q) = p.process_mut(l) {
                    if let SpectralDensity::DrudeLorentz { width, .. } = &mut q.spectrum {
                        *width = v;
                    }
                }
            }
            Knob::PhononPeak(l) => {
                if let Some(q) = p.process_mut(l) {
                    if let SpectralDensity::DrudeLorentz { omega0, .. } = &mut q.spectrum {
                        *omega0 = v;
                    }
                }
            }
            Knob::Coupling => p.chain.coupling.set_j_coupling(v),
            Knob::NonradBeta => {
                let t = 1.0 / (K_BOLTZMANN * v);
                for q in &mut p.processes {
                    if q.label.starts_with(LABEL_NONRADIATIVE) {
                        q.spectrum.set_temperature(t);
                    }
                }
            }
            Knob::NonradRate => {
                let t_cold = p.t_cold;
                let n = p.chain.n_sites;
                p.processes
                    .retain(|q| !q.label.starts_with(LABEL_NONRADIATIVE));
                if v != 0.0 {
                    for site in 1..=n {
                        p.processes.push(EnvProcess {
                            label: format!("{LABEL_NONRADIATIVE}_{site}"),
                            operator: OperatorPattern::LocalDecay { site },
                            spectrum: SpectralDensity::Flat {
                                rate: v,
                                temperature: t_cold,
                            },
                        });
                    }
                }
            }
        }
    }
}

/// Canonical knob enumeration (5N + 9 entries), then the supplementary
/// non-radiative knobs.
fn knob_list(params: &ModelParams) -> (Vec<(String, Knob)>, Vec<(String, Knob)>) {
    let n = params.n_sites();
    let mut main: Vec<(String, Knob)> = Vec::with_capacity(5 * n + 9);
    for site in 2..n {
        main.push((format!("eps_{site}"), Knob::Onsite(site)));
    }
    main.push(("beta_load".into(), Knob::ColdBeta));
    main.push(("gamma_load".into(), Knob::Load));
    main.push(("beta_return".into(), Knob::ProcBeta(LABEL_RETURN.into())));
    main.push(("gamma_return".into(), Knob::ProcRate(LABEL_RETURN.into())));
    for site in 1..=n {
        let label = format!("{LABEL_PHONON}_{site}");
        main.push((format!("beta_phonon_{site}"), Knob::ProcBeta(label.clone())));
        main.push((
            format!("width_phonon_{site}"),
            Knob::PhononWidth(label.clone()),
        ));
        main.push((format!("peak_phonon_{site}"), Knob::PhononPeak(label.clone())));
        main.push((format!("gamma_phonon_{site}"), Knob::ProcRate(label)));
    }
    for (name, label) in [
        ("injection", LABEL_INJECTION),
        ("extraction", LABEL_EXTRACTION),
        ("optical", LABEL_OPTICAL),
    ] {
        main.push((format!("beta_{name}"), Knob::ProcBeta(label.into())));
        main.push((format!("gamma_{name}"), Knob::ProcRate(label.into())));
    }
    main.push(("j_coupling".into(), Knob::Coupling));

    let mut extra = Vec::new();
    if params
        .processes
        .iter()
        .any(|q| q.label.starts_with(LABEL_NONRADIATIVE))
    {
        extra.push(("beta_nonradiative".into(), Knob::NonradBeta));
    }
    extra.push(("gamma_nonradiative".into(), Knob::NonradRate));
    (main, extra)
}

/// Power with the chain rebuilt and the load held at its pinned rate; None
/// when the probed model is invalid or the steady state is unusable.
fn pinned_power(params: &ModelParams) -> Option<f64> {
    params.validate().ok()?;
    let basis = diagonalize(&build(&params.chain));
    let pieces = RatePieces::new(params, &basis);
    let rate = pinned_load_rate(params)?;
    let r = power_reading(params, &basis, &pieces, rate).ok()?;
    r.power.is_finite().then_some(r.power)
}

struct RawEntry {
    index: usize,
    name: String,
    d_full: Option<f64>,
    d_half: Option<f64>,
    unscalable: bool,
}

fn raw_entry(params: &ModelParams, index: usize, name: &str, knob: &Knob) -> RawEntry {
    let theta0 = knob.get(params);
    let probe = |theta: f64| -> Option<f64> {
        let mut q = params.clone();
        knob.set(&mut q, theta);
        pinned_power(&q)
    };
    let h = SENSITIVITY_STEP;
    // theta <= 0 or non-finite: no logarithmic step exists. Fall back to an
    // additive probe at unit reference scale; a probe outside the model's
    // domain (for example a negative rate) fails validation and the entry
    // reports derivative 0.
    if !(theta0 != 0.0 && theta0.is_finite()) {
        let d = |step: f64| -> Option<f64> {
            Some((probe(theta0 + step)? - probe(theta0 - step)?) / (2.0 * step))
        };
        return RawEntry {
            index,
            name: name.into(),
            d_full: d(h),
            d_half: d(h / 2.0),
            unscalable: true,
        };
    }
    let d = |step: f64| -> Option<f64> {
        let plus = probe(theta0 * step.exp())?;
        let minus = probe(theta0 * (-step).exp())?;
        Some((plus - minus) / (2.0 * step))
    };
    RawEntry {
        index,
        name: name.into(),
        d_full: d(h),
        d_half: d(h / 2.0),
        unscalable: false,
    }
}

fn finalize(raw: Vec<RawEntry>, floor: f64) -> Vec<SensitivityEntry> {
    raw.into_iter()
        .map(|r| match (r.d_full, r.d_half) {
            (Some(a), Some(b)) => SensitivityEntry {
                index: r.index,
                name: r.name,
                derivative: a,
                richardson: (a - b).abs() / a.abs().max(floor),
                unscalable: r.unscalable,
            },
            // A failed probe on an unscalable entry means the parameter
            // cannot leave zero in at least one direction: report 0. A
            // failed probe on a scalable entry is surfaced as NaN, never
            // silently zeroed.
            _ => SensitivityEntry {
                index: r.index,
                name: r.name,
                derivative: if r.unscalable { 0.0 } else { f64::NAN },
                richardson: if r.unscalable { 0.0 } else { f64::NAN },
                unscalable: r.unscalable,
            },
        })
        .collect()
}

/// Central log-derivatives of delivered power for every model parameter at
/// the given on-site energy vector, with step-halving stability estimates.
///
/// The load rate is frozen at its base-point optimum (or at an existing pin)
/// before any probing, so every derivative is taken on a smooth function.
pub fn sensitivity(
    base: &ModelParams,
    at_energies: &[f64],
) -> Result<SensitivityReport, AnalysisError> {
    let mut params = base.clone();
    if at_energies.len() != params.n_sites() {
        return Err(AnalysisError::EnergyCount {
            expected: params.n_sites(),
            got: at_energies.len(),
        });
    }
    params.chain.onsite_energies = at_energies.to_vec();
    params.validate()?;

    let basis = diagonalize(&build(&params.chain));
    let pieces = RatePieces::new(&params, &basis);
    let reading = match pinned_load_rate(&params) {
        Some(g) => power_reading(&params, &basis, &pieces, g)?,
        None => max_power(&params, &basis, &pieces)?,
    };
    if !reading.power.is_finite() || reading.flat_objective {
        return Err(AnalysisError::BaseNotEvaluable {
            power: reading.power,
        });
    }
    params.load_rate = LoadRate::Pinned(reading.load_rate);

    let (main, extra) = knob_list(&params);
    let raw_main: Vec<RawEntry> = main
        .par_iter()
        .enumerate()
        .map(|(i, (name, knob))| raw_entry(&params, i + 1, name, knob))
        .collect();
    let raw_extra: Vec<RawEntry> = extra
        .par_iter()
        .enumerate()
        .map(|(i, (name, knob))| raw_entry(&params, main.len() + i + 1, name, knob))
        .collect();

    let scale = raw_main
        .iter()
        .chain(raw_extra.iter())
        .filter_map(|r| r.d_full)
        .fold(0.0_f64, |m, d| if d.is_finite() { m.max(d.abs()) } else { m })
        .max(reading.power.abs() * f64::EPSILON)
        .max(f64::MIN_POSITIVE);
    let floor = RICHARDSON_REL_FLOOR * scale;

    Ok(SensitivityReport {
        entries: finalize(raw_main, floor),
        extras: finalize(raw_extra, floor),
        base_power: reading.power,
        load_rate: reading.load_rate,
    })
}

// ---------------------------------------------------------------------------
// Sweep plumbing
// ---------------------------------------------------------------------------

/// One grid point of a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Coordinates along the sweep axes, in axis order.
    pub coords: Vec<f64>,
    /// Seed used for this point's ensemble; None for deterministic sweeps.
    pub seed: Option<u64>,
    /// Named scalar outputs; empty when the point failed.
    pub values: Vec<(String, f64)>,
    /// Qualitative markers, such as resonance or held-peak annotations.
    pub flags: Vec<String>,
    /// Why the point could not be evaluated, if it could not.
    pub error: Option<String>,
}

impl SweepPoint {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }

    pub fn has_flag(&self, prefix: &str) -> bool {
        self.flags.iter().any(|f| f.starts_with(prefix))
    }
}

/// A sweep's full output: the exact requested grid and one point per grid
/// cell, row-major with the last axis fastest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub axes: Vec<String>,
    pub grid: Vec<Vec<f64>>,
    pub points: Vec<SweepPoint>,
    /// Run-level notes: seeds, ensemble sizes, method names.
    pub metadata: Vec<(String, String)>,
}

/// Deterministic per-point seed; depends only on the global seed and the
/// point's position, never on evaluation order.
pub fn point_seed(global_seed: u64, point_index: usize) -> u64 {
    global_seed ^ (point_index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn check_grid(axis: &'static str, grid: &[f64]) -> Result<(), AnalysisError> {
    let finite = grid.iter().all(|v| v.is_finite());
    let inc = grid.windows(2).all(|w| w[1] > w[0]);
    let dec = grid.windows(2).all(|w| w[1] < w[0]);
    if grid.is_empty() || !finite || !(inc || dec) {
        return Err(AnalysisError::BadGrid { axis });
    }
    Ok(())
}

/// Excited-manifold reference energy and step of a uniform downhill ramp:
/// site j sits at eps_excited - j * step.
fn ramp_reference(onsite: &[f64]) -> Result<(f64, f64), AnalysisError> {
    let step = if onsite.len() >= 2 {
        onsite[0] - onsite[1]
    } else {
        0.0
    };
    for w in onsite.windows(2) {
        if ((w[0] - w[1]) - step).abs() > RAMP_TOL {
            return Err(AnalysisError::RampNotUniform);
        }
    }
    Ok((onsite[0] + step, step))
}

/// Steady-state reading at the model's own load policy (pinned rate if set,
/// otherwise the power-maximizing rate), plus the eigenbasis behind it.
fn full_reading(params: &ModelParams) -> Result<(PowerReading, EigenBasis), String> {
    params.validate().map_err(|e| e.to_string())?;
    let basis = diagonalize(&build(&params.chain));
    let pieces = RatePieces::new(params, &basis);
    let r = match pinned_load_rate(params) {
        Some(g) => power_reading(params, &basis, &pieces, g),
        None => max_power(params, &basis, &pieces),
    }
    .map_err(|e| e.to_string())?;
    Ok((r, basis))
}

/// Baseline reading, interior-energy ensemble, and the usual diagnostics at
/// one sweep point.
fn optimize_point(
    params: &ModelParams,
    count: usize,
    seed: u64,
) -> Result<Vec<(String, f64)>, String> {
    let (lin, lin_basis) = full_reading(params)?;
    if !(lin.power.is_finite() && lin.power > 0.0) {
        return Err(format!("baseline power unusable: {}", lin.power));
    }
    let problem = EnergyProblem::interior(params.clone(), Objective::Power);
    let runs = run_ensemble(&problem, count, seed, &[Method::Sequential]);
    let best = runs
        .iter()
        .find(|r| r.error.is_none() && r.final_objective.is_finite())
        .ok_or_else(|| "no successful optimization run".to_string())?;
    let mut best_params = params.clone();
    best_params.chain.onsite_energies = best.final_energies.clone();
    let (opt, opt_basis) = full_reading(&best_params)?;
    Ok(vec![
        ("baseline_power".into(), lin.power),
        ("best_power".into(), opt.power),
        ("enhancement".into(), enhancement(opt.power, lin.power)),
        ("mean_pr".into(), lin_basis.mean_participation_ratio()),
        (
            "total_emission_baseline".into(),
            emission_report(&lin_basis, &lin.populations).total_emission,
        ),
        (
            "total_emission_best".into(),
            emission_report(&opt_basis, &opt.populations).total_emission,
        ),
    ])
}

fn finish_point(
    coords: Vec<f64>,
    seed: Option<u64>,
    outcome: Result<(Vec<(String, f64)>, Vec<String>), String>,
) -> SweepPoint {
    match outcome {
        Ok((values, flags)) => SweepPoint {
            coords,
            seed,
            values,
            flags,
            error: None,
        },
        Err(e) => SweepPoint {
            coords,
            seed,
            values: Vec::new(),
            flags: Vec::new(),
            error: Some(e),
        },
    }
}

fn ensemble_metadata(count: usize, seed: u64) -> Vec<(String, String)> {
    vec![
        ("objective".into(), "power".into()),
        ("method".into(), "sequential".into()),
        ("ensemble_count".into(), count.to_string()),
        ("seed".into(), seed.to_string()),
    ]
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Optimization outcome versus inter-site coupling: at each grid value the
/// interior energies are re-optimized from scratch and the enhancement over
/// the unoptimized ramp is recorded together with the pre-optimization mean
/// participation ratio.
pub fn sweep_j(
    base: &ModelParams,
    grid: &[f64],
    count: usize,
    seed: u64,
) -> Result<SweepResult, AnalysisError> {
    check_grid("j_coupling", grid)?;
    let points: Vec<SweepPoint> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &j)| {
            let s = point_seed(seed, i);
            let mut p = base.clone();
            p.chain.coupling.set_j_coupling(j);
            finish_point(
                vec![j],
                Some(s),
                optimize_point(&p, count, s).map(|v| (v, Vec::new())),
            )
        })
        .collect();
    Ok(SweepResult {
        axes: vec!["j_coupling".into()],
        grid: vec![grid.to_vec()],
        points,
        metadata: ensemble_metadata(count, seed),
    })
}

/// Set every vibrational peak to sqrt(delta_e^2 - width^2); Err when the
/// bias does not clear some linewidth.
fn retune_phonons(p: &mut ModelParams, delta_e: f64) -> Result<(), String> {
    for q in &mut p.processes {
        if !q.label.starts_with(LABEL_PHONON) {
            continue;
        }
        if let SpectralDensity::DrudeLorentz { width, omega0, .. } = &mut q.spectrum {
            let d = delta_e * delta_e - *width * *width;
            if d <= 0.0 {
                return Err(format!(
                    "phonon peak undefined: bias {delta_e} does not clear linewidth {width}"
                ));
            }
            *omega0 = d.sqrt();
        }
    }
    Ok(())
}

/// Optimization outcome versus bias step. The chain is rebuilt as a uniform
/// ramp at each delta_e (the base chain must itself be a ramp, which fixes
/// the excited-manifold reference) and the vibrational peaks are retuned to
/// keep them on the inter-site gap; grid points whose bias does not clear
/// the linewidth carry per-point errors and the sweep continues.
pub fn sweep_de(
    base: &ModelParams,
    grid: &[f64],
    count: usize,
    seed: u64,
) -> Result<SweepResult, AnalysisError> {
    check_grid("delta_e", grid)?;
    let (eps_excited, _) = ramp_reference(&base.chain.onsite_energies)?;
    let n = base.n_sites();
    let points: Vec<SweepPoint> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &de)| {
            let s = point_seed(seed, i);
            let mut p = base.clone();
            p.chain.onsite_energies = ChainSpec::biased(n, eps_excited, de);
            let outcome = retune_phonons(&mut p, de)
                .and_then(|()| optimize_point(&p, count, s))
                .map(|v| (v, Vec::new()));
            finish_point(vec![de], Some(s), outcome)
        })
        .collect();
    Ok(SweepResult {
        axes: vec!["delta_e".into()],
        grid: vec![grid.to_vec()],
        points,
        metadata: ensemble_metadata(count, seed),
    })
}

/// Which vibrational-bath property a phonon sweep varies.
pub enum PhononAxis {
    /// Peak frequency, compared on two fixed energy vectors.
    Peak { linear: Vec<f64>, spiked: Vec<f64> },
    /// Linewidth, compared on two fixed energy vectors.
    Width { linear: Vec<f64>, spiked: Vec<f64> },
    /// Bath temperature, with a fresh ensemble per temperature and a
    /// min/max band over the best optima.
    Temperature { count: usize },
}

fn local_step(grid: &[f64], idx: usize) -> f64 {
    let mut s = f64::INFINITY;
    if idx > 0 {
        s = s.min((grid[idx] - grid[idx - 1]).abs());
    }
    if idx + 1 < grid.len() {
        s = s.min((grid[idx + 1] - grid[idx]).abs());
    }
    if s.is_finite() {
        s
    } else {
        0.0
    }
}

/// Flag the grid point nearest an integer multiple of the ramp step.
fn resonance_flags(grid: &[f64], idx: usize, step: f64) -> Vec<String> {
    if step <= 0.0 {
        return Vec::new();
    }
    let v = grid[idx];
    let k = (v / step).round();
    if k >= 1.0 && (v - k * step).abs() <= 0.5 * local_step(grid, idx) {
        vec![format!("resonance_multiple={}", k as i64)]
    } else {
        Vec::new()
    }
}

fn fixed_pair_point(
    base: &ModelParams,
    linear: &[f64],
    spiked: &[f64],
    edit: impl Fn(&mut SpectralDensity),
) -> Result<Vec<(String, f64)>, String> {
    let mut p = base.clone();
    p.edit_phonons(&edit);
    p.chain.onsite_energies = linear.to_vec();
    let (lin, lin_basis) = full_reading(&p)?;
    p.chain.onsite_energies = spiked.to_vec();
    let (spk, _) = full_reading(&p)?;
    Ok(vec![
        ("linear_power".into(), lin.power),
        ("spiked_power".into(), spk.power),
        ("advantage".into(), enhancement(spk.power, lin.power)),
        ("mean_pr_linear".into(), lin_basis.mean_participation_ratio()),
    ])
}

fn check_vector(n: usize, v: &[f64]) -> Result<(), AnalysisError> {
    if v.len() != n {
        return Err(AnalysisError::EnergyCount {
            expected: n,
            got: v.len(),
        });
    }
    Ok(())
}

/// Power versus a vibrational-bath property.
///
/// Peak and linewidth sweeps compare two supplied fixed energy vectors with
/// no re-optimization; the peak sweep additionally marks grid points sitting
/// on integer multiples of the linear ramp's step. The temperature sweep
/// runs a fresh ensemble per grid point and reports a band over the best
/// optima.
pub fn sweep_phonon(
    base: &ModelParams,
    axis: &PhononAxis,
    grid: &[f64],
    seed: u64,
) -> Result<SweepResult, AnalysisError> {
    let n = base.n_sites();
    match axis {
        PhononAxis::Peak { linear, spiked } => {
            check_grid("phonon_peak", grid)?;
            check_vector(n, linear)?;
            check_vector(n, spiked)?;
            let step = ramp_reference(linear).map(|(_, s)| s).unwrap_or(0.0);
            let points: Vec<SweepPoint> = grid
                .par_iter()
                .enumerate()
                .map(|(i, &v)| {
                    let outcome = fixed_pair_point(base, linear, spiked, |spec| {
                        if let SpectralDensity::DrudeLorentz { omega0, .. } = spec {
                            *omega0 = v;
                        }
                    })
                    .map(|vals| (vals, resonance_flags(grid, i, step)));
                    finish_point(vec![v], None, outcome)
                })
                .collect();
            Ok(SweepResult {
                axes: vec!["phonon_peak".into()],
                grid: vec![grid.to_vec()],
                points,
                metadata: vec![("comparison".into(), "fixed linear vs spiked".into())],
            })
        }
        PhononAxis::Width { linear, spiked } => {
            check_grid("phonon_width", grid)?;
            check_vector(n, linear)?;
            check_vector(n, spiked)?;
            let points: Vec<SweepPoint> = grid
                .par_iter()
                .map(|&v| {
                    let outcome = fixed_pair_point(base, linear, spiked, |spec| {
                        if let SpectralDensity::DrudeLorentz { width, .. } = spec {
                            *width = v;
                        }
                    })
                    .map(|vals| (vals, Vec::new()));
                    finish_point(vec![v], None, outcome)
                })
                .collect();
            Ok(SweepResult {
                axes: vec!["phonon_width".into()],
                grid: vec![grid.to_vec()],
                points,
                metadata: vec![("comparison".into(), "fixed linear vs spiked".into())],
            })
        }
        PhononAxis::Temperature { count } => {
            check_grid("phonon_temperature", grid)?;
            let points: Vec<SweepPoint> = grid
                .par_iter()
                .enumerate()
                .map(|(i, &t)| {
                    let s = point_seed(seed, i);
                    let mut p = base.clone();
                    p.edit_phonons(|spec| spec.set_temperature(t));
                    let outcome = temperature_point(&p, *count, s).map(|v| (v, Vec::new()));
                    finish_point(vec![t], Some(s), outcome)
                })
                .collect();
            let mut metadata = ensemble_metadata(*count, seed);
            metadata.push(("band".into(), format!("best_{BAND_SIZE}")));
            Ok(SweepResult {
                axes: vec!["phonon_temperature".into()],
                grid: vec![grid.to_vec()],
                points,
                metadata,
            })
        }
    }
}

/// Like `optimize_point` but with a min/max band over the best optima.
fn temperature_point(
    params: &ModelParams,
    count: usize,
    seed: u64,
) -> Result<Vec<(String, f64)>, String> {
    let (lin, lin_basis) = full_reading(params)?;
    if !(lin.power.is_finite() && lin.power > 0.0) {
        return Err(format!("baseline power unusable: {}", lin.power));
    }
    let problem = EnergyProblem::interior(params.clone(), Objective::Power);
    let runs = run_ensemble(&problem, count, seed, &[Method::Sequential]);
    let top: Vec<f64> = runs
        .iter()
        .filter(|r| r.error.is_none() && r.final_objective.is_finite())
        .take(BAND_SIZE)
        .map(|r| r.final_objective)
        .collect();
    let best = *top
        .first()
        .ok_or_else(|| "no successful optimization run".to_string())?;
    let low = top.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(vec![
        ("baseline_power".into(), lin.power),
        ("best_power".into(), best),
        ("enhancement".into(), enhancement(best, lin.power)),
        ("band_low".into(), low),
        ("band_high".into(), best),
        ("mean_pr".into(), lin_basis.mean_participation_ratio()),
    ])
}

/// Enhancement over a 2D grid of optical and non-radiative decay rates,
/// points row-major with the non-radiative axis fastest. The non-radiative
/// channel is one equal-rate decay per site thermalized at the ambient
/// temperature. The per-cell ensemble size is recorded in the metadata.
pub fn loss_grid(
    base: &ModelParams,
    em_grid: &[f64],
    nr_grid: &[f64],
    count: usize,
    seed: u64,
) -> Result<SweepResult, AnalysisError> {
    check_grid("gamma_optical", em_grid)?;
    check_grid("gamma_nonradiative", nr_grid)?;
    let cells: Vec<(usize, f64, f64)> = em_grid
        .iter()
        .flat_map(|&em| nr_grid.iter().map(move |&nr| (em, nr)))
        .enumerate()
        .map(|(i, (em, nr))| (i, em, nr))
        .collect();
    let points: Vec<SweepPoint> = cells
        .par_iter()
        .map(|&(i, em, nr)| {
            let s = point_seed(seed, i);
            let mut p = base.clone();
            let outcome = p
                .set_process_rate(LABEL_OPTICAL, em)
                .map_err(|e| e.to_string())
                .and_then(|()| {
                    p.set_nonradiative_rate(nr);
                    optimize_point(&p, count, s)
                })
                .map(|v| (v, Vec::new()));
            finish_point(vec![em, nr], Some(s), outcome)
        })
        .collect();
    Ok(SweepResult {
        axes: vec!["gamma_optical".into(), "gamma_nonradiative".into()],
        grid: vec![em_grid.to_vec(), nr_grid.to_vec()],
        points,
        metadata: ensemble_metadata(count, seed),
    })
}

/// Unoptimized ramp power over (phonon rate, bias step), points row-major
/// with the bias axis fastest. The bias grid must include 0.
///
/// The vibrational peak follows sqrt(delta_e^2 - width^2) wherever the bias
/// clears the linewidth. Below that (including the flat chain itself, where
/// the tie is undefined) the peak is held at the value it takes at the
/// smallest grid bias that does clear the linewidth, and the point is
/// flagged; a grid with no such bias is an error.
pub fn zero_bias_study(
    base: &ModelParams,
    gamma_phonon_values: &[f64],
    de_grid: &[f64],
) -> Result<SweepResult, AnalysisError> {
    check_grid("gamma_phonon", gamma_phonon_values)?;
    check_grid("delta_e", de_grid)?;
    if !de_grid.contains(&0.0) {
        return Err(AnalysisError::MissingZeroPoint);
    }
    let (eps_excited, _) = ramp_reference(&base.chain.onsite_energies)?;
    let n = base.n_sites();

    // Smallest grid bias clearing each distinct linewidth, probed up front
    // so an unusable grid fails the whole sweep rather than every point.
    let hold_bias = |width: f64| -> Result<f64, AnalysisError> {
        de_grid
            .iter()
            .copied()
            .filter(|&d| d > width)
            .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |x| x.min(d))))
            .ok_or(AnalysisError::PeakUndefinedEverywhere { width })
    };
    for q in &base.processes {
        if let SpectralDensity::DrudeLorentz { width, .. } = q.spectrum {
            if q.label.starts_with(LABEL_PHONON) {
                hold_bias(width)?;
            }
        }
    }

    let cells: Vec<(usize, f64, f64)> = gamma_phonon_values
        .iter()
        .flat_map(|&g| de_grid.iter().map(move |&d| (g, d)))
        .enumerate()
        .map(|(i, (g, d))| (i, g, d))
        .collect();
    let points: Vec<SweepPoint> = cells
        .par_iter()
        .map(|&(_, g, de)| {
            let mut p = base.clone();
            p.chain.onsite_energies = ChainSpec::biased(n, eps_excited, de);
            let mut held = false;
            for q in &mut p.processes {
                if !q.label.starts_with(LABEL_PHONON) {
                    continue;
                }
                if let SpectralDensity::DrudeLorentz { rate, width, omega0, .. } = &mut q.spectrum
                {
                    *rate = g;
                    let bias = if de > *width {
                        de
                    } else {
                        held = true;
                        // cannot fail: probed above
                        hold_bias(*width).unwrap_or(de)
                    };
                    *omega0 = (bias * bias - *width * *width).max(0.0).sqrt();
                }
            }
            let peak = p.processes.iter().find_map(|q| {
                if !q.label.starts_with(LABEL_PHONON) {
                    return None;
                }
                match q.spectrum {
                    SpectralDensity::DrudeLorentz { omega0, .. } => Some(omega0),
                    _ => None,
                }
            });
            let outcome = full_reading(&p).map(|(r, basis)| {
                let mut values = vec![
                    ("power".into(), r.power),
                    ("mean_pr".into(), basis.mean_participation_ratio()),
                    (
                        "total_emission".into(),
                        emission_report(&basis, &r.populations).total_emission,
                    ),
                ];
                if let Some(w) = peak {
                    values.push(("phonon_peak".into(), w));
                }
                let flags = if held {
                    vec!["peak_held".into()]
                } else {
                    Vec::new()
                };
                (values, flags)
            });
            finish_point(vec![g, de], None, outcome)
        })
        .collect();
    Ok(SweepResult {
        axes: vec!["gamma_phonon".into(), "delta_e".into()],
        grid: vec![gamma_phonon_values.to_vec(), de_grid.to_vec()],
        points,
        metadata: vec![("optimization".into(), "none".into())],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn linear(params: &ModelParams) -> Vec<f64> {
        params.chain.onsite_energies.clone()
    }

    #[test]
    fn enumeration_matches_reference_layout() {
        let params = ModelParams::reference(20);
        let report = sensitivity(&params, &linear(&params)).unwrap();
        assert_eq!(report.entries.len(), 109);
        let name = |i: usize| report.entries[i - 1].name.as_str();
        assert_eq!(name(1), "eps_2");
        assert_eq!(name(18), "eps_19");
        assert_eq!(name(19), "beta_load");
        assert_eq!(name(20), "gamma_load");
        assert_eq!(name(21), "beta_return");
        assert_eq!(name(22), "gamma_return");
        assert_eq!(name(23), "beta_phonon_1");
        assert_eq!(name(24), "width_phonon_1");
        assert_eq!(name(25), "peak_phonon_1");
        assert_eq!(name(26), "gamma_phonon_1");
        assert_eq!(name(99), "beta_phonon_20");
        assert_eq!(name(102), "gamma_phonon_20");
        assert_eq!(name(103), "beta_injection");
        assert_eq!(name(104), "gamma_injection");
        assert_eq!(name(105), "beta_extraction");
        assert_eq!(name(106), "gamma_extraction");
        assert_eq!(name(107), "beta_optical");
        assert_eq!(name(108), "gamma_optical");
        assert_eq!(name(109), "j_coupling");
        for (i, e) in report.entries.iter().enumerate() {
            assert_eq!(e.index, i + 1);
        }

        // no non-radiative channel at the reference point: supplementary
        // entry is unscalable with derivative exactly zero
        assert_eq!(report.extras.len(), 1);
        let nr = &report.extras[0];
        assert_eq!(nr.name, "gamma_nonradiative");
        assert_eq!(nr.index, 110);
        assert!(nr.unscalable);
        assert_eq!(nr.derivative, 0.0);

        assert!(report.base_power > 0.0);
        assert!(report.load_rate > 0.0);
    }

    #[test]
    fn load_rate_slope_is_negligible_at_its_own_optimum() {
        let params = ModelParams::reference(6);
        let report = sensitivity(&params, &linear(&params)).unwrap();
        let max_abs = report
            .entries
            .iter()
            .map(|e| e.derivative.abs())
            .fold(0.0_f64, f64::max);
        let load = report.entry("gamma_load").unwrap();
        assert!(load.derivative.abs() < 1e-2 * max_abs);
    }

    #[test]
    fn zero_coupling_parameters_have_zero_derivative() {
        let mut params = ModelParams::reference(4);
        params.set_process_rate("phonon_2", 0.0).unwrap();
        let report = sensitivity(&params, &linear(&params)).unwrap();
        for name in ["beta_phonon_2", "width_phonon_2", "peak_phonon_2"] {
            let e = report.entry(name).unwrap();
            assert!(!e.unscalable, "{name} is scalable (parameter nonzero)");
            assert_eq!(e.derivative, 0.0, "{name}");
        }
        // the rate itself sits at zero and cannot go negative
        let g = report.entry("gamma_phonon_2").unwrap();
        assert!(g.unscalable);
        assert_eq!(g.derivative, 0.0);
    }

    #[test]
    fn nonradiative_channels_get_scalable_entries_when_present() {
        let mut params = ModelParams::reference(4);
        params.set_nonradiative_rate(2e-4);
        let report = sensitivity(&params, &linear(&params)).unwrap();
        assert_eq!(report.entries.len(), 5 * 4 + 9);
        assert_eq!(report.extras.len(), 2);
        assert_eq!(report.extras[0].name, "beta_nonradiative");
        assert_eq!(report.extras[1].name, "gamma_nonradiative");
        let g = report.extras.last().unwrap();
        assert!(!g.unscalable);
        // more decay can only cost power
        assert!(g.derivative < 0.0);
    }

    #[test]
    fn richardson_residuals_are_small_on_a_smooth_model() {
        let params = ModelParams::reference(4);
        let report = sensitivity(&params, &linear(&params)).unwrap();
        for e in report.entries.iter().filter(|e| !e.unscalable) {
            assert!(
                e.richardson.is_finite() && e.richardson < 1e-2,
                "{}: residual {}",
                e.name,
                e.richardson
            );
        }
    }

    #[test]
    fn energy_vector_length_is_checked() {
        let params = ModelParams::reference(4);
        let err = sensitivity(&params, &[1.0, 2.0]).unwrap_err();
        assert!(matches!(
            err,
            AnalysisError::EnergyCount {
                expected: 4,
                got: 2
            }
        ));
    }

    #[test]
    fn point_seeds_are_stable_and_distinct() {
        assert_eq!(point_seed(7, 3), point_seed(7, 3));
        assert_ne!(point_seed(7, 0), point_seed(7, 1));
        assert_ne!(point_seed(7, 0), point_seed(8, 0));
    }

    #[test]
    fn grids_must_be_strictly_monotone() {
        let params = ModelParams::reference(4);
        assert!(matches!(
            sweep_j(&params, &[0.1, 0.1], 1, 0),
            Err(AnalysisError::BadGrid { axis: "j_coupling" })
        ));
        assert!(matches!(
            sweep_j(&params, &[], 1, 0),
            Err(AnalysisError::BadGrid { .. })
        ));
        // decreasing grids are fine
        assert!(sweep_j(&params, &[0.2, 0.1], 1, 0).is_ok());
    }

    #[test]
    fn coupling_sweep_records_enhancement_and_pr() {
        let params = ModelParams::reference(4);
        let sw = sweep_j(&params, &[0.05, 0.1], 2, 11).unwrap();
        assert_eq!(sw.grid, vec![vec![0.05, 0.1]]);
        assert_eq!(sw.points.len(), 2);
        for p in &sw.points {
            assert!(p.error.is_none(), "{:?}", p.error);
            // the clean start is part of every ensemble, so optimization
            // can only match or beat the ramp
            assert!(p.value("enhancement").unwrap() > 0.999);
            let pr = p.value("mean_pr").unwrap();
            assert!(pr >= 1.0 && pr <= 4.0);
            assert!(p.value("total_emission_baseline").unwrap() > 0.0);
        }
        assert!(sw
            .metadata
            .iter()
            .any(|(k, v)| k == "ensemble_count" && v == "2"));
    }

    #[test]
    fn coupling_sweep_is_deterministic_in_the_seed() {
        let params = ModelParams::reference(4);
        let a = sweep_j(&params, &[0.1], 2, 42).unwrap();
        let b = sweep_j(&params, &[0.1], 2, 42).unwrap();
        assert_eq!(
            serde_json::to_string(&a.points).unwrap(),
            serde_json::to_string(&b.points).unwrap()
        );
        let c = sweep_j(&params, &[0.1], 2, 43).unwrap();
        assert_ne!(a.points[0].seed, c.points[0].seed);
    }

    #[test]
    fn bias_sweep_marks_points_under_the_linewidth() {
        let params = ModelParams::reference(4);
        let sw = sweep_de(&params, &[0.01, 0.05], 2, 5).unwrap();
        assert_eq!(sw.points.len(), 2);
        assert!(sw.points[0].error.as_deref().unwrap().contains("linewidth"));
        assert!(sw.points[1].error.is_none());
        assert!(sw.points[1].value("enhancement").unwrap() > 0.999);
    }

    #[test]
    fn bias_sweep_requires_a_uniform_ramp() {
        let mut params = ModelParams::reference(4);
        params.chain.onsite_energies[1] += 0.2;
        assert!(matches!(
            sweep_de(&params, &[0.05], 1, 0),
            Err(AnalysisError::RampNotUniform)
        ));
    }

    #[test]
    fn peak_sweep_flags_ramp_multiples() {
        let params = ModelParams::reference(4);
        let lin = linear(&params);
        let mut spiked = lin.clone();
        spiked[1] += 0.1;
        let grid = [0.04, 0.05, 0.06, 0.09, 0.10, 0.11];
        let axis = PhononAxis::Peak {
            linear: lin,
            spiked,
        };
        let sw = sweep_phonon(&params, &axis, &grid, 0).unwrap();
        let flagged: Vec<usize> = sw
            .points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.has_flag("resonance_multiple"))
            .map(|(i, _)| i)
            .collect();
        assert_eq!(flagged, vec![1, 4]);
        assert!(sw.points[1].flags.contains(&"resonance_multiple=1".to_string()));
        assert!(sw.points[4].flags.contains(&"resonance_multiple=2".to_string()));
        for p in &sw.points {
            assert!(p.value("linear_power").unwrap() > 0.0);
            assert!(p.value("spiked_power").unwrap() > 0.0);
        }
    }

    #[test]
    fn temperature_sweep_reports_a_band() {
        let params = ModelParams::reference(4);
        let sw = sweep_phonon(&params, &PhononAxis::Temperature { count: 3 }, &[0.0, 300.0], 9)
            .unwrap();
        for p in &sw.points {
            assert!(p.error.is_none(), "{:?}", p.error);
            let low = p.value("band_low").unwrap();
            let high = p.value("band_high").unwrap();
            assert!(low <= high);
            assert_eq!(high, p.value("best_power").unwrap());
        }
        assert!(sw.metadata.iter().any(|(k, v)| k == "band" && v == "best_5"));
    }

    #[test]
    fn loss_grid_is_row_major_with_metadata() {
        let params = ModelParams::reference(4);
        let sw = loss_grid(&params, &[1e-3, 1e-2], &[0.0, 1e-2], 1, 3).unwrap();
        assert_eq!(sw.points.len(), 4);
        let coords: Vec<Vec<f64>> = sw.points.iter().map(|p| p.coords.clone()).collect();
        assert_eq!(
            coords,
            vec![
                vec![1e-3, 0.0],
                vec![1e-3, 1e-2],
                vec![1e-2, 0.0],
                vec![1e-2, 1e-2]
            ]
        );
        for p in &sw.points {
            assert!(p.error.is_none(), "{:?}", p.error);
            assert!(p.value("enhancement").unwrap() > 0.0);
        }
        assert!(sw
            .metadata
            .iter()
            .any(|(k, v)| k == "ensemble_count" && v == "1"));
    }

    #[test]
    fn zero_bias_study_holds_the_peak_below_the_linewidth() {
        let params = ModelParams::reference(4);
        let sw = zero_bias_study(&params, &[0.0, 1.4e-3], &[0.0, 0.025, 0.05]).unwrap();
        assert_eq!(sw.points.len(), 6);
        // row-major, bias fastest
        assert_eq!(sw.points[0].coords, vec![0.0, 0.0]);
        assert_eq!(sw.points[5].coords, vec![1.4e-3, 0.05]);
        for p in &sw.points {
            assert!(p.error.is_none(), "{:?}", p.error);
            assert!(p.value("power").unwrap() > 0.0);
            let de = p.coords[1];
            let peak = p.value("phonon_peak").unwrap();
            if de == 0.0 {
                // held at the smallest grid bias clearing the linewidth
                assert!(p.has_flag("peak_held"));
                assert_abs_diff_eq!(peak, 0.015, epsilon = 1e-12);
            } else if de == 0.05 {
                assert!(!p.has_flag("peak_held"));
                assert_abs_diff_eq!(peak, (0.05f64 * 0.05 - 0.02 * 0.02).sqrt(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zero_bias_study_validates_its_grid() {
        let params = ModelParams::reference(4);
        assert!(matches!(
            zero_bias_study(&params, &[0.0, 1e-3], &[0.01, 0.05]),
            Err(AnalysisError::MissingZeroPoint)
        ));
        assert!(matches!(
            zero_bias_study(&params, &[0.0, 1e-3], &[0.0, 0.01]),
            Err(AnalysisError::PeakUndefinedEverywhere { .. })
        ));
    }

    #[test]
    fn enhancement_ratios_survive_uniform_rescaling() {
        let base = ModelParams::reference(6);
        let mut spiked = base.chain.onsite_energies.clone();
        spiked[1] += 0.1;
        spiked[3] += 0.1;

        let ratio = |params: &ModelParams, vec: &[f64]| -> f64 {
            let (lin, _) = full_reading(params).unwrap();
            let mut p = params.clone();
            p.chain.onsite_energies = vec.to_vec();
            let (spk, _) = full_reading(&p).unwrap();
            spk.power / lin.power
        };

        let r1 = ratio(&base, &spiked);
        let scaled = base.rescaled(2.0);
        let spiked2: Vec<f64> = spiked.iter().map(|e| 2.0 * e).collect();
        let r2 = ratio(&scaled, &spiked2);
        assert!(
            (r1 - r2).abs() <= 1e-8 * r1.abs().max(1.0),
            "{r1} vs {r2}"
        );
    }
}
