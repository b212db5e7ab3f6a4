//! Resonance frequencies of the coupled response and the resolved-sideband
//! approximation of S_opt.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::transfer;
use crate::error::{Error, Result};
use crate::params::DerivedParams;
use crate::poly;
use crate::steady::SteadyState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakFrequencies {
    pub omega_minus: f64,
    pub omega_plus: f64,
    /// |Re D(ω∓)| / |D(ω∓)|.
    pub residual_minus: f64,
    pub residual_plus: f64,
}

/// Positive roots of Re D(ω) = 0.
///
/// With y = ω² and ω_a² = ω_mω̃_m, Re D = 0 reads y² − S·y − C = 0 where
/// S = κ² + Δ̃² + 2κγ_m + ω_a² and C = 2ω_m·I·G̃²·Δ̃ − (κ² + Δ̃²)·ω_a².
/// The smaller root is taken as −C/y₊ to avoid cancellation.
pub fn peak_frequencies(s: &SteadyState, p: &DerivedParams) -> Result<PeakFrequencies> {
    let (k, g, wm) = (p.kappa(), p.gamma_m(), p.omega_m());
    let d2 = s.delta_eff * s.delta_eff;
    let wa2 = wm * s.omega_m_eff;
    let q = k * k + d2;
    let e = 2.0 * k * g;
    let c0 = 2.0 * wm * s.intensity * s.g_eff * s.g_eff * s.delta_eff;
    let big_s = q + e + wa2;
    let big_c = c0 - q * wa2;
    // S² + 4C expanded so the near-cancelling (q + ω_a²)² − 4q·ω_a² appears
    // as a square.
    let disc = (q - wa2).powi(2) + 2.0 * e * (q + wa2) + e * e + 4.0 * c0;
    if !(disc >= 0.0) {
        return Err(Error::NoPeakFrequency {
            discriminant: disc,
            y_lo: f64::NAN,
            y_hi: f64::NAN,
        });
    }
    let y_hi = 0.5 * (big_s + disc.sqrt());
    let y_lo = if y_hi != 0.0 { -big_c / y_hi } else { 0.0 };
    if !(y_lo > 0.0 && y_hi > 0.0) {
        return Err(Error::NoPeakFrequency { discriminant: disc, y_lo, y_hi });
    }
    let (omega_minus, omega_plus) = (y_lo.sqrt(), y_hi.sqrt());
    let res = |w: f64| {
        let d = transfer(w, s, p).d;
        d.re.abs() / d.norm()
    };
    Ok(PeakFrequencies {
        omega_minus,
        omega_plus,
        residual_minus: res(omega_minus),
        residual_plus: res(omega_plus),
    })
}

/// Ascending real coefficients of |D(ω)|²/ω_m⁸ as a polynomial in
/// y = (ω/ω_m)². |D|² is even in ω, so only even powers of w survive.
fn d_norm_sqr_polynomial(s: &SteadyState, p: &DerivedParams) -> Vec<f64> {
    let wm = p.omega_m();
    let k = p.kappa() / wm;
    let g = p.gamma_m() / wm;
    let d = s.delta_eff / wm;
    let wa2 = s.omega_m_eff / wm;
    let c0 = 2.0 * s.g_eff * s.g_eff * s.intensity * s.delta_eff / (wm * wm * wm);
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let cav = [c(k * k + d * d, 0.0), c(0.0, -2.0 * k), c(-1.0, 0.0)];
    let mech = [c(-wa2, 0.0), c(0.0, g), c(1.0, 0.0)];
    let mut dp = poly::mul_complex(&cav, &mech);
    dp[0] += c0;
    let conj: Vec<Complex64> = dp.iter().map(|z| z.conj()).collect();
    poly::mul_complex(&dp, &conj)
        .iter()
        .step_by(2)
        .map(|z| z.re)
        .collect()
}

/// Local minimum of |D(ω)|² closest to `near` (rad/s), i.e. the centre of
/// the response peak that the Re D root only approximates.
pub fn spectral_peak(s: &SteadyState, p: &DerivedParams, near: f64) -> Result<f64> {
    let wm = p.omega_m();
    let f = d_norm_sqr_polynomial(s, p);
    let df = poly::derivative(&f);
    let ddf = poly::derivative(&df);
    let target = near / wm;
    // d|D|²/dw = 2w·P'(y), and at P'(y) = 0 the curvature in w has the sign
    // of P''(y).
    let best = poly::roots(&df)?
        .into_iter()
        .filter(|z| z.im.abs() <= 1e-6 * (1.0 + z.norm()))
        .map(|z| poly::polish(&df, z.re, 30))
        .filter(|&y| y > 0.0 && poly::eval(&ddf, y) > 0.0)
        .map(f64::sqrt)
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()));
    best.map(|w| w * wm).ok_or_else(|| {
        Error::Numerical(format!("|D(ω)|² has no positive local minimum near {near:.6e} rad/s"))
    })
}

/// Frequency at which squeezing is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EvalFrequency {
    /// Minimum of |D(ω)|² nearest ω₋ (the visible spectral peak).
    Peak,
    /// ω₋ itself, the lower root of Re D(ω).
    Root,
}

impl fmt::Display for EvalFrequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalFrequency::Peak => "peak",
            EvalFrequency::Root => "root",
        })
    }
}

pub fn eval_frequency(s: &SteadyState, p: &DerivedParams, which: EvalFrequency) -> Result<f64> {
    let pf = peak_frequencies(s, p)?;
    match which {
        EvalFrequency::Root => Ok(pf.omega_minus),
        EvalFrequency::Peak => spectral_peak(s, p, pf.omega_minus),
    }
}

/// Resolved-sideband, zero-temperature, γ_m → 0 closed form of S_opt.
pub fn s_opt_approx(omega: f64, s: &SteadyState, p: &DerivedParams) -> f64 {
    let k = p.kappa();
    let wm = p.omega_m();
    let d = s.delta_eff;
    let w2 = omega * omega;
    let x = w2 - wm * s.omega_m_eff;
    let gi = s.g_eff * s.g_eff * s.intensity;
    let dd = x * Complex64::new(d * d - w2, -2.0 * k * omega) + 2.0 * wm * d * gi;
    let dn = dd.norm_sqr();
    let first = 8.0 * k * k * wm * gi * (wm * gi + d * x) + 4.0 * k * k * x * x * (d * d - w2);
    let inner = 2.0 * gi * wm * Complex64::new(k, -d)
        + Complex64::new(0.0, x) * Complex64::new(w2 - d * d, -2.0 * k * d);
    1.0 + first / dn - 4.0 * k * wm * gi * inner.norm() / dn
}
