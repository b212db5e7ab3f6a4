//! Frequency-domain response of the linearized system.
//!
//! Fourier convention: d/dt → −iω, so a positive-frequency component
//! evolves as e^{−iωt}. The output field fluctuation is
//! δa_out(ω) = c₁(ω)·a_in(ω) + c₂(ω)·a_in†(ω) + c₃(ω)·ξ(ω) with
//! c₁ = √(2κ)A_a/D − 1, c₂ = −√(2κ)A_{a†}/D, c₃ = √(2κ)A_ξ/D.
//! Correlators are symmetrized in ω ↔ −ω, which is the combination a
//! homodyne spectrum measures.

mod peaks;
mod series;
mod thermal;

pub use peaks::{
    eval_frequency, peak_frequencies, s_opt_approx, spectral_peak, EvalFrequency, PeakFrequencies,
};
pub use series::{default_grid, uniform_grid, SpectrumKind, SpectrumSeries};
pub use thermal::{critical_temperature, squeeze_point, SqueezePoint};

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::params::{thermal_occupation, DerivedParams, CONSTANTS};
use crate::steady::SteadyState;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// Colored thermal kernel (γ_mω/ω_m)·[coth(ħω/2k_BT) ± 1].
    Exact,
    /// White thermal kernel: ω·coth replaced by ω_m(2n_th + 1).
    Markov,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Exact => "exact",
            NoiseKind::Markov => "markov",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// Bath temperature (K).
    pub temperature: f64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, temperature: f64) -> Self {
        NoiseModel { kind, temperature }
    }

    pub fn exact(temperature: f64) -> Self {
        Self::new(NoiseKind::Exact, temperature)
    }

    pub fn markov(temperature: f64) -> Self {
        Self::new(NoiseKind::Markov, temperature)
    }

    /// Symmetric thermal kernel K̄(ω) = (γ_m/ω_m)·ω·coth(ħω/2k_BT), even in ω.
    pub fn symmetric_kernel(&self, omega: f64, p: &DerivedParams) -> f64 {
        let (g, wm) = (p.gamma_m(), p.omega_m());
        match self.kind {
            NoiseKind::Markov => g * (2.0 * thermal_occupation(wm, self.temperature) + 1.0),
            NoiseKind::Exact => {
                let t = self.temperature;
                if t == 0.0 {
                    return g / wm * omega.abs();
                }
                let scale = 2.0 * CONSTANTS.k_b * t / CONSTANTS.hbar;
                let x = omega / scale;
                let x_coth_x = if x.abs() < 1e-4 {
                    1.0 + x * x / 3.0
                } else {
                    x / x.tanh()
                };
                g / wm * scale * x_coth_x
            }
        }
    }

    /// N(ω) = K̄(ω) + γ_mω/ω_m; N(−ω) is the weight of |A_ξ|² in S_out.
    /// At T = 0 the exact kernel is 2γ_mω/ω_m for ω > 0 and 0 otherwise.
    pub fn kernel(&self, omega: f64, p: &DerivedParams) -> f64 {
        let drift = p.gamma_m() * omega / p.omega_m();
        if self.kind == NoiseKind::Exact && self.temperature == 0.0 {
            return if omega > 0.0 { 2.0 * drift } else { 0.0 };
        }
        self.symmetric_kernel(omega, p) + drift
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferCoefficients {
    pub omega: f64,
    pub a_a: Complex64,
    pub a_adag: Complex64,
    pub a_xi: Complex64,
    pub d: Complex64,
}

impl TransferCoefficients {
    /// (c₁, c₂, c₃) of the output field.
    pub fn output(&self, kappa: f64) -> (Complex64, Complex64, Complex64) {
        let r = (2.0 * kappa).sqrt();
        (
            r * self.a_a / self.d - 1.0,
            -r * self.a_adag / self.d,
            r * self.a_xi / self.d,
        )
    }
}

pub fn transfer(omega: f64, s: &SteadyState, p: &DerivedParams) -> TransferCoefficients {
    let (k, g, wm) = (p.kappa(), p.gamma_m(), p.omega_m());
    let sq = (2.0 * k).sqrt();
    let g2i = s.g_eff * s.g_eff * s.intensity;
    let mech = Complex64::new(omega * omega - wm * s.omega_m_eff, g * omega);
    let cav = Complex64::new(k, -(omega + s.delta_eff));
    let a_a = sq * (mech * cav - I * wm * g2i);
    let a_adag = I * sq * wm * s.a_s * s.a_s * s.g_eff * s.g_eff;
    let a_xi = I * wm * s.g_eff * s.a_s * cav;
    let kw = Complex64::new(k, -omega);
    let d = (kw * kw + s.delta_eff * s.delta_eff) * mech + 2.0 * g2i * s.delta_eff * wm;
    TransferCoefficients { omega, a_a, a_adag, a_xi, d }
}

/// Output intensity spectrum: thermal plus back-action terms, with the
/// vacuum floor excluded.
pub fn s_out(omega: f64, s: &SteadyState, p: &DerivedParams, noise: &NoiseModel) -> f64 {
    let t = transfer(omega, s, p);
    let n_minus = noise.kernel(-omega, p);
    2.0 * p.kappa() / t.d.norm_sqr() * (n_minus * t.a_xi.norm_sqr() + t.a_adag.norm_sqr())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputCorrelations {
    pub c_aa: Complex64,
    pub c_adag_a: f64,
    pub c_a_adag: f64,
}

pub fn output_correlations(
    omega: f64,
    s: &SteadyState,
    p: &DerivedParams,
    noise: &NoiseModel,
) -> OutputCorrelations {
    let k = p.kappa();
    let (c1p, c2p, c3p) = transfer(omega, s, p).output(k);
    let (c1m, c2m, c3m) = transfer(-omega, s, p).output(k);
    let kbar = noise.symmetric_kernel(omega, p);
    let n_plus = noise.kernel(omega, p);
    let n_minus = noise.kernel(-omega, p);
    let c_aa = 0.5 * (c1p * c2m + c1m * c2p) + c3p * c3m * kbar;
    let c_adag_a = 0.5
        * (c2m.norm_sqr() + c3m.norm_sqr() * n_plus + c2p.norm_sqr() + c3p.norm_sqr() * n_minus);
    let c_a_adag = 0.5
        * (c1p.norm_sqr() + c3p.norm_sqr() * n_plus + c1m.norm_sqr() + c3m.norm_sqr() * n_minus);
    OutputCorrelations { c_aa, c_adag_a, c_a_adag }
}

/// Quadrature noise spectrum at homodyne phase `phi`; 1 is the vacuum level.
pub fn s_phi(omega: f64, phi: f64, s: &SteadyState, p: &DerivedParams, noise: &NoiseModel) -> f64 {
    let c = output_correlations(omega, s, p, noise);
    c.c_a_adag + c.c_adag_a + 2.0 * (Complex64::from_polar(1.0, -2.0 * phi) * c.c_aa).re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalSqueezing {
    pub value: f64,
    pub phi_opt: f64,
    /// C_aa vanishes, so every phase is optimal and `phi_opt` is 0.
    pub degenerate: bool,
}

pub fn s_opt(omega: f64, s: &SteadyState, p: &DerivedParams, noise: &NoiseModel) -> OptimalSqueezing {
    let c = output_correlations(omega, s, p, noise);
    let mag = c.c_aa.norm();
    if mag == 0.0 {
        return OptimalSqueezing {
            value: c.c_a_adag + c.c_adag_a,
            phi_opt: 0.0,
            degenerate: true,
        };
    }
    // e^{2iφ} = −C_aa/|C_aa|, folded into [0, π).
    let phi = 0.5 * (-c.c_aa).arg();
    OptimalSqueezing {
        value: c.c_a_adag + c.c_adag_a - 2.0 * mag,
        phi_opt: phi.rem_euclid(std::f64::consts::PI),
        degenerate: false,
    }
}

pub fn squeezing_percent(s_opt_value: f64) -> f64 {
    (1.0 - s_opt_value) * 100.0
}

/// −10·log₁₀(S_opt); +∞ for perfect squeezing.
pub fn to_db(s_opt_value: f64) -> f64 {
    if s_opt_value == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * s_opt_value.log10()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive, SystemConfig};
    use crate::steady::{state_from_intensity, steady_states, SteadyMode};

    fn point(r: f64) -> (DerivedParams, SteadyState) {
        let p = derive(&SystemConfig::reference().with_qoc_ratio(r)).unwrap();
        let s = steady_states(&p, SteadyMode::Exact).unwrap().states[0];
        (p, s)
    }

    #[test]
    fn undriven_transfer_has_no_field_terms() {
        let p = derive(&SystemConfig::reference().with_power(0.0)).unwrap();
        let s = state_from_intensity(&p, SteadyMode::Approx, 0.0);
        let t = transfer(0.7 * p.omega_m(), &s, &p);
        assert_eq!(t.a_xi.norm(), 0.0);
        assert_eq!(t.a_adag.norm(), 0.0);
        assert!(t.a_a.norm() > 0.0 && t.d.norm() > 0.0);
        assert_eq!(s_out(0.7 * p.omega_m(), &s, &p, &NoiseModel::exact(1e-3)), 0.0);
    }

    #[test]
    fn vacuum_gives_unit_spectrum() {
        let p = derive(&SystemConfig::reference().with_power(0.0)).unwrap();
        let s = state_from_intensity(&p, SteadyMode::Approx, 0.0);
        for w in [-2.0, -0.3, 0.0, 0.3, 1.0, 2.5] {
            let w = w * p.omega_m();
            let c = output_correlations(w, &s, &p, &NoiseModel::exact(1e-3));
            assert_eq!(c.c_aa.norm(), 0.0);
            assert_eq!(c.c_adag_a, 0.0);
            let o = s_opt(w, &s, &p, &NoiseModel::exact(1e-3));
            assert!(o.degenerate);
            assert!((o.value - 1.0).abs() < 1e-12);
            assert!((s_phi(w, 0.4, &s, &p, &NoiseModel::exact(1e-3)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_limits() {
        let p = derive(&SystemConfig::reference()).unwrap();
        let n = NoiseModel::exact(1e-3);
        let zero = n.symmetric_kernel(0.0, &p);
        let want = p.gamma_m() / p.omega_m() * 2.0 * CONSTANTS.k_b * 1e-3 / CONSTANTS.hbar;
        assert!((zero / want - 1.0).abs() < 1e-14);
        let tiny = n.symmetric_kernel(1e-3, &p);
        assert!((tiny / zero - 1.0).abs() < 1e-12);
        let cold = NoiseModel::exact(0.0);
        let w = 0.8 * p.omega_m();
        assert_eq!(cold.kernel(-w, &p), 0.0);
        assert!((cold.kernel(w, &p) - 2.0 * w * p.gamma_m() / p.omega_m()).abs() < 1e-9);
        let m = NoiseModel::markov(1e-3);
        let flat = p.gamma_m() * (2.0 * p.n_th + 1.0);
        assert_eq!(m.symmetric_kernel(3.0, &p), flat);
    }

    #[test]
    fn conjugation_identity_of_coefficients() {
        let (p, s) = point(-1e-2);
        for w in [0.13, 0.66, 1.0, 2.2] {
            let w = w * p.omega_m();
            let a = transfer(w, &s, &p);
            let b = transfer(-w, &s, &p);
            // D(−ω) = D(ω)* for real ω because every ω enters with i·ω.
            assert!((a.d.conj() - b.d).norm() <= 1e-12 * a.d.norm());
        }
    }

    #[test]
    fn output_identity_links_thermal_and_vacuum_terms() {
        let (p, s) = point(-1e-2);
        for w in [-1.3, -0.6, 0.2, 0.66, 1.4] {
            let w = w * p.omega_m();
            let (c1, c2, c3) = transfer(w, &s, &p).output(p.kappa());
            let lhs = c1.norm_sqr() - c2.norm_sqr() - 1.0;
            let rhs = -c3.norm_sqr() * 2.0 * p.gamma_m() * w / p.omega_m();
            assert!((lhs - rhs).abs() < 1e-9 * (1.0 + c1.norm_sqr()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn s_opt_is_phi_minimum_and_periodic() {
        let (p, s) = point(-5e-3);
        let n = NoiseModel::exact(1e-3);
        let w = 0.8 * p.omega_m();
        let o = s_opt(w, &s, &p, &n);
        assert!((s_phi(w, o.phi_opt, &s, &p, &n) - o.value).abs() < 1e-9);
        let a = s_phi(w, 0.3, &s, &p, &n);
        let b = s_phi(w, 0.3 + std::f64::consts::PI, &s, &p, &n);
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        assert!(o.value >= 0.0 && o.value <= a + 1e-12);
    }

    #[test]
    fn percent_and_db() {
        assert_eq!(squeezing_percent(1.0), 0.0);
        assert_eq!(to_db(1.0), 0.0);
        assert!((squeezing_percent(0.674) - 32.6).abs() < 1e-9);
        assert!((to_db(0.674) - 1.713).abs() < 1e-3);
        assert!((squeezing_percent(0.1) - 90.0).abs() < 1e-12);
        assert!((to_db(0.1) - 10.0).abs() < 1e-12);
        assert_eq!(to_db(0.0), f64::INFINITY);
        assert!(squeezing_percent(1.5) < 0.0);
    }
}
