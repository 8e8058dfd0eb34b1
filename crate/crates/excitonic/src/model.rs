//! Model parameters, validation, and the TOML run-configuration format.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Boltzmann constant in eV/K (CODATA).
pub const K_BOLTZMANN: f64 = 8.617_333_262e-5;

/// Chain length the reference parameter set was tuned for. Collective decay
/// rates are scaled by `REFERENCE_CHAIN_LEN / n` when comparing chains of
/// different length so the total optical coupling stays fixed.
pub const REFERENCE_CHAIN_LEN: usize = 20;

/// Hard cap on configurable chain length; guards allocation before validation.
pub const MAX_CHAIN_SITES: usize = 10_000;

/// Hard cap on generated grid points; guards allocation from typo'd counts.
pub const MAX_GRID_POINTS: usize = 1_000_000;

/// Labels for the single-excitation basis states.
///
/// `Site(j)` is the excitation on chain site `j` (1-based). `Ground` is the
/// shared electronic ground state. `EcExcited` / `EcGround` are the upper and
/// lower levels of the two-level extraction center that feeds the load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateLabel {
    Site(usize),
    Ground,
    EcExcited,
    EcGround,
}

impl StateLabel {
    /// Basis index of this state: sites 1..n occupy 0..n-1, then ground,
    /// EC excited, EC ground.
    pub fn index(&self, n_sites: usize) -> usize {
        match *self {
            StateLabel::Site(j) => {
                assert!(j >= 1 && j <= n_sites, "site label {j} out of range");
                j - 1
            }
            StateLabel::Ground => n_sites,
            StateLabel::EcExcited => n_sites + 1,
            StateLabel::EcGround => n_sites + 2,
        }
    }
}

/// How chain sites couple to each other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CouplingLaw {
    /// Hopping element `j_coupling / 2` between adjacent sites only.
    NearestNeighbor { j_coupling: f64 },
    /// Dipole-dipole law: hopping `j_coupling / (2 r^3)` between every pair,
    /// with `r` the distance between the sites' positions. Unit spacing
    /// reproduces the nearest-neighbor element between adjacent sites.
    DistanceDependent {
        j_coupling: f64,
        positions: Vec<[f64; 3]>,
    },
}

impl CouplingLaw {
    /// Collinear unit-spaced positions, the default geometry for the
    /// distance-dependent law.
    pub fn distance_dependent_default(n_sites: usize, j_coupling: f64) -> Self {
        let positions = (0..n_sites).map(|i| [i as f64, 0.0, 0.0]).collect();
        CouplingLaw::DistanceDependent {
            j_coupling,
            positions,
        }
    }

    pub fn j_coupling(&self) -> f64 {
        match *self {
            CouplingLaw::NearestNeighbor { j_coupling } => j_coupling,
            CouplingLaw::DistanceDependent { j_coupling, .. } => j_coupling,
        }
    }

    pub fn set_j_coupling(&mut self, value: f64) {
        match self {
            CouplingLaw::NearestNeighbor { j_coupling } => *j_coupling = value,
            CouplingLaw::DistanceDependent { j_coupling, .. } => *j_coupling = value,
        }
    }
}

/// Geometry and bare energies of the electronic system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n_sites: usize,
    /// On-site energy of site j at index j-1, eV.
    pub onsite_energies: Vec<f64>,
    /// Shared ground state energy, eV.
    pub eps_ground: f64,
    /// Upper extraction-center level, eV. Sits below the chain so extraction
    /// is downhill, and above the lower level so the load is driven forward.
    pub eps_alpha: f64,
    /// Lower extraction-center level, eV.
    pub eps_beta: f64,
    pub coupling: CouplingLaw,
}

impl ChainSpec {
    /// Linearly biased chain: site j at `eps_excited - j * delta_e` for
    /// j = 1..=n_sites, so the whole ladder sits below the excited-manifold
    /// reference energy and shifts with the bias step.
    pub fn biased(n_sites: usize, eps_excited: f64, delta_e: f64) -> Vec<f64> {
        (1..=n_sites)
            .map(|j| eps_excited - delta_e * j as f64)
            .collect()
    }

    /// Total dimension of the single-excitation space (sites + ground + EC).
    pub fn dim(&self) -> usize {
        self.n_sites + 3
    }

    /// Energy of a labeled basis state.
    pub fn energy(&self, label: StateLabel) -> f64 {
        match label {
            StateLabel::Site(j) => self.onsite_energies[j - 1],
            StateLabel::Ground => self.eps_ground,
            StateLabel::EcExcited => self.eps_alpha,
            StateLabel::EcGround => self.eps_beta,
        }
    }
}

/// Bath spectral density, symmetrized over positive and negative frequencies
/// with detailed balance built in via the Bose occupation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpectralDensity {
    /// Frequency-independent coupling `rate`, occupation at `temperature`.
    Flat { rate: f64, temperature: f64 },
    /// Lorentzian peak of width `width` centered at `omega0`, unit-normalized
    /// so the on-peak value is `pi * |omega0| * rate / width` at T = 0.
    DrudeLorentz {
        rate: f64,
        width: f64,
        omega0: f64,
        temperature: f64,
    },
}

impl SpectralDensity {
    pub fn rate(&self) -> f64 {
        match *self {
            SpectralDensity::Flat { rate, .. } => rate,
            SpectralDensity::DrudeLorentz { rate, .. } => rate,
        }
    }

    pub fn set_rate(&mut self, value: f64) {
        match self {
            SpectralDensity::Flat { rate, .. } => *rate = value,
            SpectralDensity::DrudeLorentz { rate, .. } => *rate = value,
        }
    }

    pub fn temperature(&self) -> f64 {
        match *self {
            SpectralDensity::Flat { temperature, .. } => temperature,
            SpectralDensity::DrudeLorentz { temperature, .. } => temperature,
        }
    }

    pub fn set_temperature(&mut self, value: f64) {
        match self {
            SpectralDensity::Flat { temperature, .. } => *temperature = value,
            SpectralDensity::DrudeLorentz { temperature, .. } => *temperature = value,
        }
    }
}

/// Coupling operator of an environment, expressed in the site basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OperatorPattern {
    /// Pure dephasing projector |site><site| on one chain site.
    LocalDephase { site: usize },
    /// Collective dipole sum_j (|site_j><ground| + h.c.), one shared field.
    CollectiveOptical,
    /// Incoherent link (|a><b| + h.c.) between two labeled states.
    TwoLevel { a: StateLabel, b: StateLabel },
    /// Non-radiative decay channel |site><ground| + h.c. on one chain site.
    LocalDecay { site: usize },
}

/// One environment: a coupling operator and the bath spectrum behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvProcess {
    pub label: String,
    pub operator: OperatorPattern,
    pub spectrum: SpectralDensity,
}

/// The load link between the extraction-center levels either carries a fixed
/// rate or is left free for the power optimizer to tune.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LoadRate {
    Optimized,
    Pinned(f64),
}

/// Complete model: electronic system, every environment except the load link,
/// and the load-link policy. The load spectrum is flat at `t_cold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub chain: ChainSpec,
    pub processes: Vec<EnvProcess>,
    pub load_rate: LoadRate,
    /// Cold (ambient) temperature in K; thermalizes the load link and enters
    /// the voltage through the EC population ratio.
    pub t_cold: f64,
}

pub(crate) const LABEL_LOAD: &str = "load";
pub(crate) const LABEL_INJECTION: &str = "injection";
pub(crate) const LABEL_EXTRACTION: &str = "extraction";
pub(crate) const LABEL_RETURN: &str = "return";
pub(crate) const LABEL_OPTICAL: &str = "optical";
pub(crate) const LABEL_PHONON: &str = "phonon";
pub(crate) const LABEL_NONRADIATIVE: &str = "nonradiative";

/// Everything `ModelParams::reference` needs; mirrors the run-config file.
#[derive(Debug, Clone)]
pub struct ReferenceSettings {
    pub n_sites: usize,
    pub delta_e: f64,
    /// Excited-manifold reference energy; site j sits at
    /// `eps_excited - j * delta_e`.
    pub eps_excited: f64,
    pub j_coupling: f64,
    pub eps_ground: f64,
    pub eps_alpha: f64,
    pub eps_beta: f64,
    pub gamma_phonon: f64,
    pub phonon_width: f64,
    /// Resonant phonon frequency; `None` ties it to the bias via
    /// `sqrt(delta_e^2 - width^2)`.
    pub omega0: Option<f64>,
    pub t_phonon: f64,
    pub gamma_optical: f64,
    pub gamma_injection: f64,
    pub t_hot: f64,
    pub gamma_extraction: f64,
    pub gamma_return: f64,
    pub gamma_nonradiative: f64,
    pub t_cold: f64,
    pub distance_coupling: bool,
}

impl Default for ReferenceSettings {
    fn default() -> Self {
        ReferenceSettings {
            n_sites: 20,
            delta_e: 0.05,
            eps_excited: 1.65,
            j_coupling: 0.1,
            eps_ground: 0.0,
            eps_alpha: 0.5,
            eps_beta: 0.2,
            gamma_phonon: 1.4e-3,
            phonon_width: 0.02,
            omega0: None,
            t_phonon: 300.0,
            gamma_optical: 1.0e-3,
            gamma_injection: 2.3e-3,
            t_hot: 6000.0,
            gamma_extraction: 1.05e-3,
            gamma_return: 1.3e-3,
            gamma_nonradiative: 0.0,
            t_cold: 300.0,
            distance_coupling: false,
        }
    }
}

impl ReferenceSettings {
    /// Tied phonon peak frequency, `Err` when the peak would be undefined
    /// because the bias does not clear the linewidth.
    pub fn resolved_omega0(&self) -> Result<f64, ModelError> {
        match self.omega0 {
            Some(w) => Ok(w),
            None => {
                let d = self.delta_e * self.delta_e - self.phonon_width * self.phonon_width;
                if d <= 0.0 {
                    Err(ModelError::PhononPeakUndefined {
                        delta_e: self.delta_e,
                        width: self.phonon_width,
                    })
                } else {
                    Ok(d.sqrt())
                }
            }
        }
    }
}

impl ModelParams {
    /// Reference parameter set at the given chain length: linear bias, tied
    /// phonon peak, no non-radiative decay.
    pub fn reference(n_sites: usize) -> Self {
        let settings = ReferenceSettings {
            n_sites,
            ..ReferenceSettings::default()
        };
        Self::from_settings(&settings).expect("reference settings are valid")
    }

    pub fn from_settings(s: &ReferenceSettings) -> Result<Self, ModelError> {
        if s.n_sites < 2 {
            return Err(ModelError::ChainTooShort { n_sites: s.n_sites });
        }
        // dense eigensolves scale cubically; reject sizes that could only
        // come from a typo before allocating per-site state
        if s.n_sites > MAX_CHAIN_SITES {
            return Err(ModelError::Config(format!(
                "chain of {} sites exceeds the {MAX_CHAIN_SITES}-site cap",
                s.n_sites
            )));
        }
        let omega0 = s.resolved_omega0()?;
        let coupling = if s.distance_coupling {
            CouplingLaw::distance_dependent_default(s.n_sites, s.j_coupling)
        } else {
            CouplingLaw::NearestNeighbor {
                j_coupling: s.j_coupling,
            }
        };
        let chain = ChainSpec {
            n_sites: s.n_sites,
            onsite_energies: ChainSpec::biased(s.n_sites, s.eps_excited, s.delta_e),
            eps_ground: s.eps_ground,
            eps_alpha: s.eps_alpha,
            eps_beta: s.eps_beta,
            coupling,
        };

        let mut processes = Vec::new();
        for site in 1..=s.n_sites {
            processes.push(EnvProcess {
                label: format!("{LABEL_PHONON}_{site}"),
                operator: OperatorPattern::LocalDephase { site },
                spectrum: SpectralDensity::DrudeLorentz {
                    rate: s.gamma_phonon,
                    width: s.phonon_width,
                    omega0,
                    temperature: s.t_phonon,
                },
            });
        }
        processes.push(EnvProcess {
            label: LABEL_OPTICAL.into(),
            operator: OperatorPattern::CollectiveOptical,
            spectrum: SpectralDensity::Flat {
                rate: s.gamma_optical,
                temperature: s.t_cold,
            },
        });
        processes.push(EnvProcess {
            label: LABEL_INJECTION.into(),
            operator: OperatorPattern::TwoLevel {
                a: StateLabel::Ground,
                b: StateLabel::Site(1),
            },
            spectrum: SpectralDensity::Flat {
                rate: s.gamma_injection,
                temperature: s.t_hot,
            },
        });
        processes.push(EnvProcess {
            label: LABEL_EXTRACTION.into(),
            operator: OperatorPattern::TwoLevel {
                a: StateLabel::Site(s.n_sites),
                b: StateLabel::EcExcited,
            },
            spectrum: SpectralDensity::Flat {
                rate: s.gamma_extraction,
                temperature: s.t_cold,
            },
        });
        processes.push(EnvProcess {
            label: LABEL_RETURN.into(),
            operator: OperatorPattern::TwoLevel {
                a: StateLabel::EcGround,
                b: StateLabel::Ground,
            },
            spectrum: SpectralDensity::Flat {
                rate: s.gamma_return,
                temperature: s.t_cold,
            },
        });
        if s.gamma_nonradiative > 0.0 {
            for site in 1..=s.n_sites {
                processes.push(EnvProcess {
                    label: format!("{LABEL_NONRADIATIVE}_{site}"),
                    operator: OperatorPattern::LocalDecay { site },
                    spectrum: SpectralDensity::Flat {
                        rate: s.gamma_nonradiative,
                        temperature: s.t_cold,
                    },
                });
            }
        }

        let params = ModelParams {
            chain,
            processes,
            load_rate: LoadRate::Optimized,
            t_cold: s.t_cold,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn n_sites(&self) -> usize {
        self.chain.n_sites
    }

    pub fn dim(&self) -> usize {
        self.chain.dim()
    }

    /// First process whose label matches, if any.
    pub fn process(&self, label: &str) -> Option<&EnvProcess> {
        self.processes.iter().find(|p| p.label == label)
    }

    pub fn process_mut(&mut self, label: &str) -> Option<&mut EnvProcess> {
        self.processes.iter_mut().find(|p| p.label == label)
    }

    /// Rate of the labeled process, 0 when the process is absent (an absent
    /// channel and a zero-rate channel produce identical dynamics).
    pub fn process_rate(&self, label: &str) -> f64 {
        self.process(label).map(|p| p.spectrum.rate()).unwrap_or(0.0)
    }

    pub fn set_process_rate(&mut self, label: &str, rate: f64) -> Result<(), ModelError> {
        match self.process_mut(label) {
            Some(p) => {
                p.spectrum.set_rate(rate);
                Ok(())
            }
            None => Err(ModelError::NoSuchProcess {
                label: label.into(),
            }),
        }
    }

    /// Set the non-radiative decay rate on every site, materializing or
    /// removing the per-site channels as needed.
    pub fn set_nonradiative_rate(&mut self, rate: f64) {
        self.processes
            .retain(|p| !p.label.starts_with(LABEL_NONRADIATIVE));
        if rate > 0.0 {
            let t_cold = self.t_cold;
            for site in 1..=self.chain.n_sites {
                self.processes.push(EnvProcess {
                    label: format!("{LABEL_NONRADIATIVE}_{site}"),
                    operator: OperatorPattern::LocalDecay { site },
                    spectrum: SpectralDensity::Flat {
                        rate,
                        temperature: t_cold,
                    },
                });
            }
        }
    }

    pub fn nonradiative_rate(&self) -> f64 {
        self.process_rate(&format!("{LABEL_NONRADIATIVE}_1"))
    }

    /// Apply an edit to every per-site vibrational spectrum.
    pub fn edit_phonons(&mut self, mut f: impl FnMut(&mut SpectralDensity)) {
        for p in &mut self.processes {
            if p.label.starts_with(LABEL_PHONON) {
                f(&mut p.spectrum);
            }
        }
    }

    /// Replace the interior on-site energies (sites 2..n-1) in order.
    pub fn set_interior_energies(&mut self, interior: &[f64]) {
        let n = self.chain.n_sites;
        assert_eq!(interior.len(), n.saturating_sub(2), "interior length");
        self.chain.onsite_energies[1..n - 1].copy_from_slice(interior);
    }

    /// Kinetic-cascade variant used for the current objective: every contact
    /// is made cold and irreversible (T = 0) and the extraction-center links
    /// are made fast, so the chain's delivery rate to the last site is the
    /// bottleneck being measured.
    pub fn current_mode(&self, fast_rate: f64) -> Self {
        let mut p = self.clone();
        p.load_rate = LoadRate::Pinned(fast_rate);
        p.t_cold = 0.0;
        for proc in &mut p.processes {
            match proc.label.as_str() {
                LABEL_EXTRACTION => proc.spectrum.set_temperature(0.0),
                LABEL_RETURN => {
                    proc.spectrum.set_rate(fast_rate);
                    proc.spectrum.set_temperature(0.0);
                }
                _ => {}
            }
        }
        p
    }

    /// Uniform rescaling of every energy-dimensioned quantity by `factor`:
    /// energies, couplings, rates, spectral widths and peaks, and
    /// temperatures alike. Dimensionless observables are invariant under
    /// this map; power scales as `factor^2`.
    pub fn rescaled(&self, factor: f64) -> Self {
        let mut p = self.clone();
        for e in &mut p.chain.onsite_energies {
            *e *= factor;
        }
        p.chain.eps_ground *= factor;
        p.chain.eps_alpha *= factor;
        p.chain.eps_beta *= factor;
        match &mut p.chain.coupling {
            CouplingLaw::NearestNeighbor { j_coupling } => *j_coupling *= factor,
            CouplingLaw::DistanceDependent { j_coupling, .. } => *j_coupling *= factor,
        }
        p.t_cold *= factor;
        if let LoadRate::Pinned(g) = &mut p.load_rate {
            *g *= factor;
        }
        for proc in &mut p.processes {
            match &mut proc.spectrum {
                SpectralDensity::Flat { rate, temperature } => {
                    *rate *= factor;
                    *temperature *= factor;
                }
                SpectralDensity::DrudeLorentz {
                    rate,
                    width,
                    omega0,
                    temperature,
                } => {
                    *rate *= factor;
                    *width *= factor;
                    *omega0 *= factor;
                    *temperature *= factor;
                }
            }
        }
        p
    }

    /// Validate the full parameter set. Returns advisory warnings; hard
    /// inconsistencies come back as errors.
    pub fn validate(&self) -> Result<Vec<String>, ModelError> {
        let n = self.chain.n_sites;
        if n < 2 {
            return Err(ModelError::ChainTooShort { n_sites: n });
        }
        if self.chain.onsite_energies.len() != n {
            return Err(ModelError::EnergyCountMismatch {
                expected: n,
                got: self.chain.onsite_energies.len(),
            });
        }
        let all_energies = self
            .chain
            .onsite_energies
            .iter()
            .copied()
            .chain([self.chain.eps_ground, self.chain.eps_alpha, self.chain.eps_beta]);
        for (i, e) in all_energies.enumerate() {
            if !e.is_finite() {
                return Err(ModelError::NonFinite {
                    what: format!("energy #{i}"),
                });
            }
        }
        if !self.chain.coupling.j_coupling().is_finite() {
            return Err(ModelError::NonFinite {
                what: "chain coupling".into(),
            });
        }
        if let CouplingLaw::DistanceDependent { positions, .. } = &self.chain.coupling {
            if positions.len() != n {
                return Err(ModelError::PositionCountMismatch {
                    expected: n,
                    got: positions.len(),
                });
            }
            for (i, a) in positions.iter().enumerate() {
                for (j, b) in positions.iter().enumerate().skip(i + 1) {
                    let r2: f64 = (0..3).map(|k| (a[k] - b[k]) * (a[k] - b[k])).sum();
                    if r2 == 0.0 {
                        return Err(ModelError::CoincidentSites { a: i + 1, b: j + 1 });
                    }
                }
            }
        }
        if !(self.t_cold.is_finite() && self.t_cold >= 0.0) {
            return Err(ModelError::BadTemperature {
                label: "t_cold".into(),
                value: self.t_cold,
            });
        }
        if let LoadRate::Pinned(g) = self.load_rate {
            if !(g.is_finite() && g >= 0.0) {
                return Err(ModelError::BadRate {
                    label: "load".into(),
                    value: g,
                });
            }
        }
        for p in &self.processes {
            let rate = p.spectrum.rate();
            if !(rate.is_finite() && rate >= 0.0) {
                return Err(ModelError::BadRate {
                    label: p.label.clone(),
                    value: rate,
                });
            }
            let t = p.spectrum.temperature();
            if !(t.is_finite() && t >= 0.0) {
                return Err(ModelError::BadTemperature {
                    label: p.label.clone(),
                    value: t,
                });
            }
            if let SpectralDensity::DrudeLorentz { width, omega0, .. } = p.spectrum {
                if !(width.is_finite() && width > 0.0) {
                    return Err(ModelError::BadWidth {
                        label: p.label.clone(),
                        value: width,
                    });
                }
                if !(omega0.is_finite() && omega0 >= 0.0) {
                    return Err(ModelError::BadPeak {
                        label: p.label.clone(),
                        value: omega0,
                    });
                }
            }
            match p.operator {
                OperatorPattern::LocalDephase { site } | OperatorPattern::LocalDecay { site } => {
                    if site < 1 || site > n {
                        return Err(ModelError::SiteOutOfRange {
                            label: p.label.clone(),
                            site,
                        });
                    }
                }
                OperatorPattern::TwoLevel { a, b } => {
                    for s in [a, b] {
                        if let StateLabel::Site(j) = s {
                            if j < 1 || j > n {
                                return Err(ModelError::SiteOutOfRange {
                                    label: p.label.clone(),
                                    site: j,
                                });
                            }
                        }
                    }
                    if a == b {
                        return Err(ModelError::DegenerateLink {
                            label: p.label.clone(),
                        });
                    }
                }
                OperatorPattern::CollectiveOptical => {}
            }
        }

        let mut warnings = Vec::new();
        if self.chain.eps_alpha >= self.chain.onsite_energies[n - 1] {
            warnings.push(format!(
                "extraction is uphill: upper EC level {} eV is not below the last site {} eV",
                self.chain.eps_alpha,
                self.chain.onsite_energies[n - 1]
            ));
        }
        if self.chain.eps_alpha <= self.chain.eps_beta {
            warnings.push(format!(
                "inverted extraction center: eps_alpha {} eV <= eps_beta {} eV gives zero or negative bare voltage",
                self.chain.eps_alpha, self.chain.eps_beta
            ));
        }
        Ok(warnings)
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("chain needs at least 2 sites, got {n_sites}")]
    ChainTooShort { n_sites: usize },
    #[error("expected {expected} on-site energies, got {got}")]
    EnergyCountMismatch { expected: usize, got: usize },
    #[error("expected {expected} site positions, got {got}")]
    PositionCountMismatch { expected: usize, got: usize },
    #[error("sites {a} and {b} share a position; distance-dependent coupling diverges")]
    CoincidentSites { a: usize, b: usize },
    #[error("{what} is not finite")]
    NonFinite { what: String },
    #[error("process '{label}' has invalid rate {value} (must be finite and >= 0)")]
    BadRate { label: String, value: f64 },
    #[error("'{label}' has invalid temperature {value} K (must be finite and >= 0)")]
    BadTemperature { label: String, value: f64 },
    #[error("process '{label}' has invalid spectral width {value} (must be finite and > 0)")]
    BadWidth { label: String, value: f64 },
    #[error("process '{label}' has invalid peak frequency {value}")]
    BadPeak { label: String, value: f64 },
    #[error("process '{label}' references site {site}, outside the chain")]
    SiteOutOfRange { label: String, site: usize },
    #[error("process '{label}' links a state to itself")]
    DegenerateLink { label: String },
    #[error("no process labeled '{label}'")]
    NoSuchProcess { label: String },
    #[error(
        "phonon peak undefined: bias {delta_e} eV does not exceed linewidth {width} eV; \
         set omega0 explicitly"
    )]
    PhononPeakUndefined { delta_e: f64, width: f64 },
    #[error("config: {0}")]
    Config(String),
}

/// Quantity a run maximizes or reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Delivered power, maximized over the load rate per configuration.
    Power,
    /// Extracted steady-state current with fast, irreversible contacts.
    Current,
}

/// Run configuration as read from a TOML file. Every field is optional and
/// overrides the reference set; unknown keys are rejected so typos surface
/// instead of silently reverting a parameter to its default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub n_sites: Option<usize>,
    pub delta_e: Option<f64>,
    pub eps_excited: Option<f64>,
    pub j_coupling: Option<f64>,
    pub eps_ground: Option<f64>,
    pub eps_alpha: Option<f64>,
    pub eps_beta: Option<f64>,
    /// Explicit on-site energies; overrides the `eps_excited` / `delta_e` ramp.
    pub onsite_energies: Option<Vec<f64>>,
    pub gamma_phonon: Option<f64>,
    pub phonon_width: Option<f64>,
    pub omega0: Option<f64>,
    pub t_phonon: Option<f64>,
    pub gamma_optical: Option<f64>,
    pub gamma_injection: Option<f64>,
    pub t_hot: Option<f64>,
    pub gamma_extraction: Option<f64>,
    pub gamma_return: Option<f64>,
    pub gamma_nonradiative: Option<f64>,
    /// Pin the load rate instead of optimizing it.
    pub gamma_load: Option<f64>,
    pub t_cold: Option<f64>,
    /// Use the dipole distance law instead of nearest-neighbor coupling.
    pub distance_coupling: Option<bool>,
    /// Site positions for the distance law; defaults to a unit-spaced line.
    pub positions: Option<Vec<[f64; 3]>>,
    /// Quantity runs maximize or report; consumed by the runner, not by
    /// `into_params`.
    pub objective: Option<Objective>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        toml::from_str(text).map_err(|e| ModelError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Build the full parameter set: reference values overridden field by
    /// field, then validated.
    pub fn into_params(&self) -> Result<ModelParams, ModelError> {
        let mut s = ReferenceSettings::default();
        if let Some(v) = self.n_sites {
            s.n_sites = v;
        }
        if let Some(v) = self.delta_e {
            s.delta_e = v;
        }
        if let Some(v) = self.eps_excited {
            s.eps_excited = v;
        }
        if let Some(v) = self.j_coupling {
            s.j_coupling = v;
        }
        if let Some(v) = self.eps_ground {
            s.eps_ground = v;
        }
        if let Some(v) = self.eps_alpha {
            s.eps_alpha = v;
        }
        if let Some(v) = self.eps_beta {
            s.eps_beta = v;
        }
        if let Some(v) = self.gamma_phonon {
            s.gamma_phonon = v;
        }
        if let Some(v) = self.phonon_width {
            s.phonon_width = v;
        }
        if let Some(v) = self.omega0 {
            s.omega0 = Some(v);
        }
        if let Some(v) = self.t_phonon {
            s.t_phonon = v;
        }
        if let Some(v) = self.gamma_optical {
            s.gamma_optical = v;
        }
        if let Some(v) = self.gamma_injection {
            s.gamma_injection = v;
        }
        if let Some(v) = self.t_hot {
            s.t_hot = v;
        }
        if let Some(v) = self.gamma_extraction {
            s.gamma_extraction = v;
        }
        if let Some(v) = self.gamma_return {
            s.gamma_return = v;
        }
        if let Some(v) = self.gamma_nonradiative {
            s.gamma_nonradiative = v;
        }
        if let Some(v) = self.t_cold {
            s.t_cold = v;
        }
        if let Some(v) = self.distance_coupling {
            s.distance_coupling = v;
        }

        let mut params = ModelParams::from_settings(&s)?;
        if let Some(energies) = &self.onsite_energies {
            if energies.len() != s.n_sites {
                return Err(ModelError::EnergyCountMismatch {
                    expected: s.n_sites,
                    got: energies.len(),
                });
            }
            params.chain.onsite_energies = energies.clone();
        }
        if let Some(positions) = &self.positions {
            params.chain.coupling = CouplingLaw::DistanceDependent {
                j_coupling: s.j_coupling,
                positions: positions.clone(),
            };
        }
        if let Some(g) = self.gamma_load {
            params.load_rate = LoadRate::Pinned(g);
        }
        params.validate()?;
        Ok(params)
    }
}

/// Numeric grid specification for sweep axes.
///
/// Text forms: `"a:b:count"` for a linear grid, `"log:a:b:count"` for a
/// log-spaced grid (a, b > 0), or a comma-separated list `"x1,x2,..."`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub values: Vec<f64>,
}

impl GridSpec {
    pub fn linear(a: f64, b: f64, count: usize) -> Result<Self, ModelError> {
        if count == 0 {
            return Err(ModelError::Config("grid needs at least one point".into()));
        }
        if count > MAX_GRID_POINTS {
            return Err(ModelError::Config(format!(
                "grid of {count} points exceeds the {MAX_GRID_POINTS}-point cap"
            )));
        }
        if !(a.is_finite() && b.is_finite()) {
            return Err(ModelError::Config("grid endpoints must be finite".into()));
        }
        let values = if count == 1 {
            vec![a]
        } else {
            (0..count)
                .map(|i| a + (b - a) * i as f64 / (count - 1) as f64)
                .collect()
        };
        Ok(GridSpec { values })
    }

    pub fn logarithmic(a: f64, b: f64, count: usize) -> Result<Self, ModelError> {
        if !(a > 0.0 && b > 0.0) {
            return Err(ModelError::Config(
                "log grid endpoints must be positive".into(),
            ));
        }
        let lin = Self::linear(a.ln(), b.ln(), count)?;
        Ok(GridSpec {
            values: lin.values.into_iter().map(f64::exp).collect(),
        })
    }

    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(ModelError::Config("empty grid spec".into()));
        }
        let bad = |why: &str| ModelError::Config(format!("grid spec '{text}': {why}"));

        if let Some(rest) = text.strip_prefix("log:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(bad("expected log:start:stop:count"));
            }
            let a: f64 = parts[0].trim().parse().map_err(|_| bad("bad start"))?;
            let b: f64 = parts[1].trim().parse().map_err(|_| bad("bad stop"))?;
            let n: usize = parts[2].trim().parse().map_err(|_| bad("bad count"))?;
            return Self::logarithmic(a, b, n);
        }
        if text.contains(':') {
            let parts: Vec<&str> = text.split(':').collect();
            if parts.len() != 3 {
                return Err(bad("expected start:stop:count"));
            }
            let a: f64 = parts[0].trim().parse().map_err(|_| bad("bad start"))?;
            let b: f64 = parts[1].trim().parse().map_err(|_| bad("bad stop"))?;
            let n: usize = parts[2].trim().parse().map_err(|_| bad("bad count"))?;
            return Self::linear(a, b, n);
        }
        let mut values = Vec::new();
        for piece in text.split(',') {
            let v: f64 = piece
                .trim()
                .parse()
                .map_err(|_| bad(&format!("bad value '{}'", piece.trim())))?;
            if !v.is_finite() {
                return Err(bad("values must be finite"));
            }
            values.push(v);
        }
        Ok(GridSpec { values })
    }
}
