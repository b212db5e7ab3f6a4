//! Device configuration and the derived couplings every other module consumes.
//!
//! Every frequency, rate and coupling is angular (rad/s) internally. Config
//! files may give rates either as `*_hz` (multiplied by 2π on read) or as
//! `*_rad_s` (taken verbatim). The coupling g₁ quoted for the reference device
//! is an angular rate as well: (ω_c/L)·x_zpf evaluates to ≈1347 rad/s.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 exact/recommended values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub k_b: f64,
    pub c: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    k_b: 1.380_649e-23,
    c: 299_792_458.0,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Cavity length L (m).
    pub cavity_length: f64,
    /// Pump wavelength λ_p (m).
    pub pump_wavelength: f64,
    /// Effective mechanical mass (kg).
    pub mass: f64,
    /// Bare mechanical frequency ω_m (rad/s).
    pub omega_m: f64,
    /// Mechanical damping γ_m (rad/s).
    pub gamma_m: f64,
    /// Cavity decay rate κ (rad/s).
    pub kappa: f64,
    /// Detuning Δ = ω_c − ω_p (rad/s).
    pub detuning: f64,
    /// Pump power (W).
    pub pump_power: f64,
    /// Bath temperature (K).
    pub temperature: f64,
    /// Signed ratio g₂/g₁.
    pub qoc_ratio: f64,
    /// Replaces the geometric g₁ when set (rad/s).
    pub g1_override: Option<f64>,
    /// Replaces r·g₁ when set (rad/s).
    pub g2_override: Option<f64>,
}

impl SystemConfig {
    /// The reference device: L = 1 mm, λ_p = 810 nm, m = 5 ng,
    /// ω_m = 2π×10 MHz, γ_m = 2π×100 Hz, κ = 2π×1 MHz, driven at Δ = ω_m
    /// with 100 µW at 1 mK and no quadratic coupling.
    pub fn reference() -> Self {
        let omega_m = TAU * 10.0e6;
        SystemConfig {
            cavity_length: 1.0e-3,
            pump_wavelength: 810.0e-9,
            mass: 5.0e-12,
            omega_m,
            gamma_m: TAU * 100.0,
            kappa: TAU * 1.0e6,
            detuning: omega_m,
            pump_power: 100.0e-6,
            temperature: 1.0e-3,
            qoc_ratio: 0.0,
            g1_override: None,
            g2_override: None,
        }
    }

    pub fn with_power(mut self, watts: f64) -> Self {
        self.pump_power = watts;
        self
    }

    pub fn with_qoc_ratio(mut self, r: f64) -> Self {
        self.qoc_ratio = r;
        self
    }

    pub fn with_temperature(mut self, kelvin: f64) -> Self {
        self.temperature = kelvin;
        self
    }

    pub fn with_detuning_ratio(mut self, ratio: f64) -> Self {
        self.detuning = ratio * self.omega_m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cavity_length_m", self.cavity_length),
            ("pump_wavelength_m", self.pump_wavelength),
            ("mass_kg", self.mass),
            ("omega_m", self.omega_m),
            ("kappa", self.kappa),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(name, format!("must be finite and > 0, got {v}")));
            }
        }
        let non_negative = [
            ("gamma_m", self.gamma_m),
            ("power_w", self.pump_power),
            ("temperature_k", self.temperature),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [("detuning", self.detuning), ("qoc_ratio", self.qoc_ratio)] {
            if !v.is_finite() {
                return Err(Error::config(name, format!("must be finite, got {v}")));
            }
        }
        for (name, v) in [("g1_rad_s", self.g1_override), ("g2_rad_s", self.g2_override)] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::config(name, format!("must be finite, got {v}")));
                }
            }
        }
        Ok(())
    }

    /// Sets one parameter by its config-file key. `*_hz` keys are converted
    /// to rad/s.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "cavity_length_m" => self.cavity_length = value,
            "pump_wavelength_m" => self.pump_wavelength = value,
            "mass_kg" => self.mass = value,
            "omega_m_hz" => self.omega_m = TAU * value,
            "omega_m_rad_s" => self.omega_m = value,
            "gamma_m_hz" => self.gamma_m = TAU * value,
            "gamma_m_rad_s" => self.gamma_m = value,
            "kappa_hz" => self.kappa = TAU * value,
            "kappa_rad_s" => self.kappa = value,
            "detuning_over_omega_m" => self.detuning = value * self.omega_m,
            "power_w" => self.pump_power = value,
            "temperature_k" => self.temperature = value,
            "qoc_ratio" => self.qoc_ratio = value,
            "g1_rad_s" => self.g1_override = Some(value),
            "g2_rad_s" => self.g2_override = Some(value),
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Parses the `key = value` format; `#` starts a comment. Keys absent
    /// from the text keep their reference values. The detuning is stored
    /// relative to ω_m, so it is applied after all other keys.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SystemConfig::reference();
        let mut detuning_ratio = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}", lineno + 1), format!("expected `key = value`, got `{line}`"))
            })?;
            let key = key.trim();
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::config(key, format!("not a number: `{}`", value.trim())))?;
            if key == "detuning_over_omega_m" {
                detuning_ratio = Some(value);
            } else {
                cfg.set(key, value)?;
            }
        }
        if let Some(ratio) = detuning_ratio {
            cfg.detuning = ratio * cfg.omega_m;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::parse(&text)
    }

    /// Writes the config back in the file format, rates in rad/s.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "cavity_length_m = {}", self.cavity_length);
        let _ = writeln!(s, "pump_wavelength_m = {}", self.pump_wavelength);
        let _ = writeln!(s, "mass_kg = {}", self.mass);
        let _ = writeln!(s, "omega_m_rad_s = {}", self.omega_m);
        let _ = writeln!(s, "gamma_m_rad_s = {}", self.gamma_m);
        let _ = writeln!(s, "kappa_rad_s = {}", self.kappa);
        let _ = writeln!(s, "detuning_over_omega_m = {}", self.detuning / self.omega_m);
        let _ = writeln!(s, "power_w = {}", self.pump_power);
        let _ = writeln!(s, "temperature_k = {}", self.temperature);
        let _ = writeln!(s, "qoc_ratio = {}", self.qoc_ratio);
        if let Some(g1) = self.g1_override {
            let _ = writeln!(s, "g1_rad_s = {g1}");
        }
        if let Some(g2) = self.g2_override {
            let _ = writeln!(s, "g2_rad_s = {g2}");
        }
        s
    }

    /// FNV-1a over the bit patterns of every field; stable across runs and
    /// platforms, used as a provenance tag.
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |v: f64| {
            for b in v.to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for v in [
            self.cavity_length,
            self.pump_wavelength,
            self.mass,
            self.omega_m,
            self.gamma_m,
            self.kappa,
            self.detuning,
            self.pump_power,
            self.temperature,
            self.qoc_ratio,
            self.g1_override.unwrap_or(f64::NAN),
            self.g2_override.unwrap_or(f64::NAN),
        ] {
            feed(v);
        }
        format!("{h:016x}")
    }
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self::reference()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub config: SystemConfig,
    /// Cavity frequency (rad/s), taken as 2πc/λ_p.
    pub omega_c: f64,
    /// Pump frequency (rad/s).
    pub omega_p: f64,
    /// Zero-point displacement √(ħ/(m ω_m)) (m).
    pub x_zpf: f64,
    pub g1: f64,
    pub g2: f64,
    /// Drive amplitude ε = √(2κP/(ħω_p)) (rad/s · √photon).
    pub epsilon: f64,
    /// Mean thermal phonon number.
    pub n_th: f64,
}

/// Bose occupation of a mode at `omega` (rad/s) and `temperature` (K);
/// zero at T = 0.
pub fn thermal_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return 0.0;
    }
    1.0 / (CONSTANTS.hbar * omega / (CONSTANTS.k_b * temperature)).exp_m1()
}

pub fn derive(config: &SystemConfig) -> Result<DerivedParams> {
    config.validate()?;
    let k = CONSTANTS;
    let omega_p = TAU * k.c / config.pump_wavelength;
    // Cavity and pump are near resonant; Δ enters separately.
    let omega_c = omega_p;
    let x_zpf = (k.hbar / (config.mass * config.omega_m)).sqrt();
    let g1 = config
        .g1_override
        .unwrap_or(omega_c / config.cavity_length * x_zpf);
    let g2 = config.g2_override.unwrap_or(config.qoc_ratio * g1);
    let epsilon = (2.0 * config.kappa * config.pump_power / (k.hbar * omega_p)).sqrt();
    let n_th = thermal_occupation(config.omega_m, config.temperature);

    let fields = [
        ("omega_c", omega_c),
        ("x_zpf", x_zpf),
        ("g1", g1),
        ("g2", g2),
        ("epsilon", epsilon),
        ("n_th", n_th),
    ];
    for (name, v) in fields {
        if !v.is_finite() {
            return Err(Error::config(name, format!("derived value is not finite ({v})")));
        }
    }
    Ok(DerivedParams {
        config: *config,
        omega_c,
        omega_p,
        x_zpf,
        g1,
        g2,
        epsilon,
        n_th,
    })
}

impl DerivedParams {
    pub fn omega_m(&self) -> f64 {
        self.config.omega_m
    }

    pub fn gamma_m(&self) -> f64 {
        self.config.gamma_m
    }

    pub fn kappa(&self) -> f64 {
        self.config.kappa
    }

    pub fn detuning(&self) -> f64 {
        self.config.detuning
    }

    pub fn temperature(&self) -> f64 {
        self.config.temperature
    }
}
