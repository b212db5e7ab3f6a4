//! Mean-field operating points of the driven cavity.
//!
//! With x_s and (x²)_s eliminated, the intracavity photon number obeys
//! I·(κ² + Δ̃(I)²) = ε². Writing I = I₀·z with I₀ = ε²/κ² confines every
//! physical root to z ∈ (0, 1], and clearing the denominators in
//! u = ω_m + 2g₂I turns the condition into a real polynomial of degree ≤ 5 in z.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::DerivedParams;
use crate::poly;

/// How (x²)_s enters the effective detuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SteadyMode {
    /// Thermal position variance ω_m(1+2n_th)/(ω_m+2g₂I) included.
    Exact,
    /// (x²)_s ≈ (x_s)².
    Approx,
}

impl fmt::Display for SteadyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SteadyMode::Exact => "exact",
            SteadyMode::Approx => "approx",
        })
    }
}

impl FromStr for SteadyMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SteadyMode::Exact),
            "approx" => Ok(SteadyMode::Approx),
            _ => Err(Error::config("mode", format!("expected exact|approx, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub a_s: Complex64,
    /// Intracavity photon number I = |a_s|².
    pub intensity: f64,
    pub x_s: f64,
    /// (x²)_s as used in Δ̃.
    pub x2_s: f64,
    pub p_s: f64,
    pub xp_s: f64,
    pub p2_s: f64,
    /// ω̃_m = ω_m + 2g₂I (rad/s).
    pub omega_m_eff: f64,
    /// Δ̃ = Δ + g₁x_s + g₂(x²)_s (rad/s).
    pub delta_eff: f64,
    /// G̃ = g₁ + 2g₂x_s (rad/s).
    pub g_eff: f64,
    /// X_s = √2·Re a_s.
    pub x_quad: f64,
    /// P_s = √2·Im a_s.
    pub p_quad: f64,
    pub mode: SteadyMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSet {
    /// Ascending in intensity.
    pub states: Vec<SteadyState>,
    pub params_hash: String,
    /// Real polynomial roots considered.
    pub candidates: usize,
    /// Real roots rejected (I < 0, ω̃_m ≤ 0 or failed residual check).
    pub excluded: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BranchStrategy {
    Lowest,
    Continuity,
}

impl fmt::Display for BranchStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BranchStrategy::Lowest => "lowest",
            BranchStrategy::Continuity => "continuity",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchSelect {
    LowestIntensity,
    /// Root closest in intensity to a previously tracked state.
    Continuity { previous_intensity: f64 },
}

const RESIDUAL_TOL: f64 = 1e-10;
const DUPLICATE_TOL: f64 = 1e-8;
const POLE_MARGIN: f64 = 1e-6;

/// Builds the operating point implied by a photon number `intensity`.
pub fn state_from_intensity(p: &DerivedParams, mode: SteadyMode, intensity: f64) -> SteadyState {
    let wm = p.omega_m();
    let u = wm + 2.0 * p.g2 * intensity;
    let x_s = if intensity == 0.0 { 0.0 } else { -p.g1 * intensity / u };
    let x2_s = match mode {
        SteadyMode::Approx => x_s * x_s,
        SteadyMode::Exact => x_s * x_s + wm * (1.0 + 2.0 * p.n_th) / u,
    };
    let delta_eff = p.detuning() + p.g1 * x_s + p.g2 * x2_s;
    let g_eff = p.g1 + 2.0 * p.g2 * x_s;
    let a_s = Complex64::new(p.epsilon, 0.0) / Complex64::new(p.kappa(), delta_eff);
    SteadyState {
        a_s,
        intensity,
        x_s,
        x2_s,
        p_s: 0.0,
        xp_s: 0.0,
        p2_s: 1.0 + 2.0 * p.n_th,
        omega_m_eff: u,
        delta_eff,
        g_eff,
        x_quad: std::f64::consts::SQRT_2 * a_s.re,
        p_quad: std::f64::consts::SQRT_2 * a_s.im,
        mode,
    }
}

/// Coefficients (ascending in z = I/I₀) of
/// z·(û⁴ + (N̂/k)²) − û⁴ with û = u/ω_m and N̂ = Δ̃·û²/ω_m.
pub fn intensity_polynomial(p: &DerivedParams, mode: SteadyMode) -> Vec<f64> {
    let wm = p.omega_m();
    let i0 = (p.epsilon / p.kappa()).powi(2);
    let k = p.kappa() / wm;
    let d = p.detuning() / wm;
    let (g1, g2) = (p.g1, p.g2);
    let uhat = [1.0, 2.0 * g2 * i0 / wm];
    let u2 = poly::mul(&uhat, &uhat);
    let u4 = poly::mul(&u2, &u2);
    let zu = poly::mul(&[0.0, 1.0], &uhat);
    let mut n = poly::add(
        &poly::scale(&u2, d),
        &poly::scale(&zu, -g1 * g1 * i0 / (wm * wm)),
    );
    n = poly::add(&n, &[0.0, 0.0, g2 * g1 * g1 * i0 * i0 / (wm * wm * wm)]);
    if mode == SteadyMode::Exact {
        n = poly::add(&n, &poly::scale(&uhat, g2 / wm * (1.0 + 2.0 * p.n_th)));
    }
    let q = poly::scale(&n, 1.0 / k);
    let inner = poly::add(&u4, &poly::mul(&q, &q));
    poly::add(&poly::mul(&[0.0, 1.0], &inner), &poly::scale(&u4, -1.0))
}

/// Scalar form of the intensity condition, z·(1 + (Δ̃/κ)²) − 1.
fn scalar_condition(p: &DerivedParams, mode: SteadyMode, z: f64) -> f64 {
    let i0 = (p.epsilon / p.kappa()).powi(2);
    let s = state_from_intensity(p, mode, i0 * z);
    z * (1.0 + (s.delta_eff / p.kappa()).powi(2)) - 1.0
}

/// Secant refinement of a root on the scalar condition itself. Clearing
/// denominators worsens conditioning near ω̃_m → 0, so a root that is exact
/// for the polynomial can still miss the physical residual bound.
fn refine_scalar(p: &DerivedParams, mode: SteadyMode, z0: f64) -> f64 {
    let f = |z: f64| scalar_condition(p, mode, z);
    let (mut z, mut fz) = (z0, f(z0));
    let (mut zp, mut fp) = {
        let h = z0 * (1.0 + 1e-8) + 1e-300;
        (h, f(h))
    };
    for _ in 0..30 {
        if fz == 0.0 || fz == fp {
            break;
        }
        let zn = z - fz * (z - zp) / (fz - fp);
        let fnew = f(zn);
        if !(fnew.abs() < fz.abs()) {
            break;
        }
        (zp, fp) = (z, fz);
        (z, fz) = (zn, fnew);
    }
    z
}

pub fn params_hash(p: &DerivedParams, mode: SteadyMode) -> String {
    format!("{}-{}", p.config.fingerprint(), mode)
}

pub fn steady_states(p: &DerivedParams, mode: SteadyMode) -> Result<BranchSet> {
    let hash = params_hash(p, mode);
    if p.epsilon == 0.0 {
        return Ok(BranchSet {
            states: vec![state_from_intensity(p, mode, 0.0)],
            params_hash: hash,
            candidates: 1,
            excluded: 0,
        });
    }
    let i0 = (p.epsilon / p.kappa()).powi(2);
    let wm = p.omega_m();
    let coeffs = poly::trim(&intensity_polynomial(p, mode), 1e-15);
    let roots = poly::roots(&coeffs)?;

    let mut candidates = 0;
    let mut excluded = 0;
    let mut accepted: Vec<f64> = Vec::new();
    for z in &roots {
        if z.im.abs() > 1e-6 * (1.0 + z.norm()) {
            continue;
        }
        candidates += 1;
        let zr = refine_scalar(p, mode, poly::polish(&coeffs, z.re, 60));
        let intensity = i0 * zr;
        if !(intensity >= 0.0) || zr > 1.0 + 1e-9 {
            excluded += 1;
            continue;
        }
        if wm + 2.0 * p.g2 * intensity <= POLE_MARGIN * wm {
            excluded += 1;
            continue;
        }
        let s = state_from_intensity(p, mode, intensity);
        if residual(&s, p) >= RESIDUAL_TOL {
            excluded += 1;
            continue;
        }
        accepted.push(intensity);
    }

    if accepted.is_empty() {
        // Bracketing fallback on the scalar condition for polynomials whose
        // companion eigenvalues lost a root to ill-conditioning.
        accepted = bracket_roots(p, mode, 4000)
            .into_iter()
            .map(|z| i0 * z)
            .filter(|&i| residual(&state_from_intensity(p, mode, i), p) < RESIDUAL_TOL)
            .collect();
    }

    accepted.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::new();
    for i in accepted {
        match merged.last() {
            Some(&prev) if (i - prev).abs() <= DUPLICATE_TOL * i.abs().max(prev.abs()) => {}
            _ => merged.push(i),
        }
    }

    if merged.is_empty() {
        let real: Vec<String> = roots
            .iter()
            .map(|z| format!("{:.6e}{:+.3e}i", z.re, z.im))
            .collect();
        return Err(Error::NoSteadyState {
            candidates,
            excluded,
            detail: format!("coefficients {coeffs:?}, roots in z=I/I0: [{}]", real.join(", ")),
        });
    }

    Ok(BranchSet {
        states: merged
            .into_iter()
            .map(|i| state_from_intensity(p, mode, i))
            .collect(),
        params_hash: hash,
        candidates,
        excluded,
    })
}

/// Roots of the scalar intensity condition located by sign changes on a
/// uniform grid in z ∈ [0, 1] (stopping short of the pole at ω̃_m = 0) and
/// refined by bisection.
pub fn bracket_roots(p: &DerivedParams, mode: SteadyMode, points: usize) -> Vec<f64> {
    if p.epsilon == 0.0 {
        return vec![0.0];
    }
    let i0 = (p.epsilon / p.kappa()).powi(2);
    let b = 2.0 * p.g2 * i0 / p.omega_m();
    let mut z_hi = 1.0;
    if b < 0.0 {
        z_hi = f64::min(z_hi, (1.0 - POLE_MARGIN) / -b);
    }
    let f = |z: f64| scalar_condition(p, mode, z);
    let mut out = Vec::new();
    let mut z_prev = 0.0;
    let mut f_prev = f(0.0);
    for k in 1..=points {
        let z = z_hi * k as f64 / points as f64;
        let fz = f(z);
        if fz == 0.0 {
            out.push(z);
        } else if f_prev.signum() != fz.signum() && f_prev != 0.0 {
            let (mut lo, mut hi, mut flo) = (z_prev, z, f_prev);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = f(mid);
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        z_prev = z;
        f_prev = fz;
    }
    out
}

/// Largest relative residual of the position, variance and field equations,
/// plus the consistency of I with |a_s|².
pub fn residual(s: &SteadyState, p: &DerivedParams) -> f64 {
    fn rel(diff: f64, scale: f64) -> f64 {
        if scale == 0.0 {
            diff.abs()
        } else {
            diff.abs() / scale
        }
    }
    let wm = p.omega_m();
    let i = s.intensity;

    let pos = wm * s.x_s + p.g1 * i + 2.0 * p.g2 * i * s.x_s;
    let pos_scale = (wm * s.x_s).abs() + (p.g1 * i).abs() + (2.0 * p.g2 * i * s.x_s).abs();
    let r_pos = rel(pos, pos_scale);

    let expected_x2 = match s.mode {
        SteadyMode::Approx => s.x_s * s.x_s,
        SteadyMode::Exact => s.x_s * s.x_s + wm * (1.0 + 2.0 * p.n_th) / (wm + 2.0 * p.g2 * i),
    };
    let r_var = rel(s.x2_s - expected_x2, s.x2_s.abs().max(expected_x2.abs()));

    let delta = p.detuning() + p.g1 * s.x_s + p.g2 * s.x2_s;
    let field = s.a_s * Complex64::new(p.kappa(), delta) - p.epsilon;
    let r_field = rel(field.norm(), p.epsilon.max(s.a_s.norm() * p.kappa()));

    let n2 = s.a_s.norm_sqr();
    let r_int = rel(i - n2, i.abs().max(n2));

    r_pos.max(r_var).max(r_field).max(r_int)
}

pub fn select_branch(b: &BranchSet, strategy: BranchSelect) -> Result<SteadyState> {
    let first = b.states.first().ok_or(Error::EmptyBranchSet)?;
    Ok(match strategy {
        BranchSelect::LowestIntensity => *first,
        BranchSelect::Continuity { previous_intensity } => *b
            .states
            .iter()
            .min_by(|x, y| {
                (x.intensity - previous_intensity)
                    .abs()
                    .total_cmp(&(y.intensity - previous_intensity).abs())
            })
            .unwrap_or(first),
    })
}
