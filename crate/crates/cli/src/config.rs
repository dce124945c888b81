//! Run configuration: one flat TOML file, overridable by command-line flags
//! (flags win). The resolved configuration is hashed into every output
//! manifest so identical config + seed reproduces identical data files.

use std::path::PathBuf;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const EXPERIMENTS: &[&str] = &[
    "dispersion",
    "spectrum",
    "scheme1",
    "scheme2",
    "bounds",
    "scaling",
    "fidelity-scan",
    "spin-spectrum",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// experiment name; informational when a subcommand is given (the
    /// subcommand wins)
    pub experiment: String,
    /// number of atoms
    pub n: usize,
    /// lattice constant in units of the resonant wavelength: k0·d
    pub kd: f64,
    /// dipole orientation tag; only "parallel" (along the chain) is supported
    pub dipole: String,
    /// excitation-number truncation of the basis
    pub n_max: usize,
    /// dissipative scale factor β multiplying the imaginary kernel
    pub beta: f64,
    /// Rabi frequency Ω in γ0
    pub omega: f64,
    /// drive momentum k·d/π
    pub k_drive_over_pi: f64,
    /// rotating-frame target: "band-edge" (detune to Re ω_eff at the driven
    /// band edge) or "bare"
    pub resonance: String,
    /// number of stochastic trajectories
    pub traj: usize,
    /// observable record step in 1/γ0
    pub dt: f64,
    /// trajectory horizon in 1/γ0
    pub t_end: f64,
    /// settling time before steady-state sampling, 1/γ0 (0 = auto)
    pub settle: f64,
    /// steady-state sampling window, 1/γ0 (0 = auto)
    pub window: f64,
    /// master RNG seed; trajectory i uses stream i+1
    pub seed: u64,
    /// momentum-grid size for P_k profiles over [-π/d, π/d]
    pub k_points: usize,
    /// per-axis grid size for G(k1,k2) maps
    pub g_points: usize,
    /// G-map axis maximum, k·d/π
    pub g_max_over_pi: f64,
    /// dispersion-scan grid size
    pub grid: usize,
    /// band-edge family: "zero" or "pi"
    pub edge: String,
    /// dissipation model for scheme2: "full" or "minimal"
    pub model: String,
    /// excitation number for fidelity-scan / spin-spectrum (0 = all up to n_max)
    pub ne: usize,
    /// match only the top_m most sub- and superradiant eigenstates (0 = all)
    pub top_m: usize,
    /// scheme-1 arrest time in 1/γ0 (negative = auto-detect at F_b = F_f)
    pub arrest_time: f64,
    /// random (string, k) samples for the bounds check
    pub samples: usize,
    /// chain lengths for the scaling experiment
    pub n_list: Vec<usize>,
    /// output directory
    pub out: PathBuf,
    /// output format; only "csv" is supported
    pub format: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: String::new(),
            n: 20,
            kd: std::f64::consts::FRAC_PI_2,
            dipole: "parallel".to_string(),
            n_max: 3,
            beta: 1.0,
            omega: 0.01,
            k_drive_over_pi: 0.0,
            resonance: "band-edge".to_string(),
            traj: 1000,
            dt: 0.1,
            t_end: 40.0,
            settle: 0.0,
            window: 0.0,
            seed: 1,
            k_points: 201,
            g_points: 41,
            g_max_over_pi: 0.2,
            grid: 401,
            edge: "zero".to_string(),
            model: "full".to_string(),
            ne: 0,
            top_m: 0,
            arrest_time: -1.0,
            samples: 200,
            n_list: vec![16, 24, 32, 48, 64],
            out: PathBuf::from("out"),
            format: "csv".to_string(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.experiment.is_empty() && !EXPERIMENTS.contains(&self.experiment.as_str()) {
            bail!("unknown experiment name '{}'", self.experiment);
        }
        if self.dipole != "parallel" {
            bail!("unsupported dipole tag '{}' (only 'parallel')", self.dipole);
        }
        if self.format != "csv" {
            bail!("unsupported output format '{}' (only 'csv')", self.format);
        }
        if !matches!(self.edge.as_str(), "zero" | "pi") {
            bail!("edge must be 'zero' or 'pi'");
        }
        if !matches!(self.model.as_str(), "full" | "minimal") {
            bail!("model must be 'full' or 'minimal'");
        }
        if !matches!(self.resonance.as_str(), "band-edge" | "bare") {
            bail!("resonance must be 'band-edge' or 'bare'");
        }
        for (name, v) in [
            ("n", self.n as f64),
            ("kd", self.kd),
            ("n_max", self.n_max as f64),
            ("beta", self.beta),
            ("traj", self.traj as f64),
            ("dt", self.dt),
            ("t_end", self.t_end),
            ("k_points", self.k_points as f64),
            ("g_points", self.g_points as f64),
            ("grid", self.grid as f64),
            ("samples", self.samples as f64),
        ] {
            if !(v > 0.0) {
                bail!("config field '{name}' must be positive");
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialized configuration.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn load(path: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            Ok(toml::from_str(&text)?)
        }
        None => Ok(ExperimentConfig::default()),
    }
}
