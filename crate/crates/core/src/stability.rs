//! Linear stability of an operating point: the 4×4 drift matrix of the
//! fluctuations u = (δx, δp, δX, δP), the Routh–Hurwitz conditions on its
//! characteristic polynomial, and a direct eigenvalue cross-check.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{derive, DerivedParams, SystemConfig};
use crate::steady::{steady_states, SteadyMode, SteadyState};

/// Relative floor applied to every Routh–Hurwitz inequality, so exact
/// equality (a marginal mode) counts as unstable.
const RH_REL_FLOOR: f64 = 1e-12;
/// Eigenvalues must satisfy Re λ < −EIG_MARGIN·κ.
pub const EIG_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftMatrix {
    pub m: [[f64; 4]; 4],
}

impl DriftMatrix {
    pub fn to_matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.m[i][j])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    /// s₁ > 0, s₂ > 0, s₃ > 0, (2κ+γ)s₁ > s₂, s₁s₂(2κ+γ) > s₂² + (2κ+γ)²s₃.
    pub conditions: [bool; 5],
    pub eig_real_parts: [f64; 4],
    pub rh_stable: bool,
    pub eig_stable: bool,
    pub agreement: bool,
}

impl StabilityReport {
    pub fn max_real_part(&self) -> f64 {
        self.eig_real_parts.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest |Re λ|, used to recognise points near a stability boundary.
    pub fn min_abs_real_part(&self) -> f64 {
        self.eig_real_parts.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }
}

pub fn drift_matrix(s: &SteadyState, p: &DerivedParams) -> DriftMatrix {
    let wm = p.omega_m();
    let (k, g) = (p.kappa(), p.gamma_m());
    let gx = s.g_eff * s.x_quad;
    let gp = s.g_eff * s.p_quad;
    let d = s.delta_eff;
    DriftMatrix {
        m: [
            [0.0, wm, 0.0, 0.0],
            [-s.omega_m_eff, -g, -gx, -gp],
            [gp, 0.0, -k, d],
            [-gx, 0.0, -d, -k],
        ],
    }
}

fn exceeds(lhs: f64, rhs: f64) -> bool {
    lhs - rhs > RH_REL_FLOOR * (lhs.abs() + rhs.abs())
}

/// Real parts of the eigenvalues (sorted descending) and the strict verdict
/// Re λ < −EIG_MARGIN·κ.
pub fn eigen_stable(m: &DriftMatrix, kappa: f64) -> Result<(bool, [f64; 4])> {
    let ev = m
        .to_matrix()
        .try_schur(f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("drift matrix QR iteration did not converge".into()))?
        .complex_eigenvalues();
    let mut re = [ev[0].re, ev[1].re, ev[2].re, ev[3].re];
    re.sort_by(|a, b| b.total_cmp(a));
    let stable = re.iter().all(|&r| r < -EIG_MARGIN * kappa);
    Ok((stable, re))
}

pub fn routh_hurwitz(s: &SteadyState, p: &DerivedParams) -> StabilityReport {
    let wm = p.omega_m();
    let (k, g) = (p.kappa(), p.gamma_m());
    let wt = s.omega_m_eff;
    let d = s.delta_eff;
    let q = k * k + d * d;
    let quad2 = s.x_quad * s.x_quad + s.p_quad * s.p_quad;
    let s1 = q + 2.0 * k * g + wt * wm;
    let s2 = q * g + 2.0 * k * wt * wm;
    let s3 = q * wt * wm - d * wm * s.g_eff * s.g_eff * quad2;
    let a = 2.0 * k + g;
    let conditions = [
        exceeds(s1, 0.0),
        exceeds(s2, 0.0),
        exceeds(s3, 0.0),
        exceeds(a * s1, s2),
        exceeds(s1 * s2 * a, s2 * s2 + a * a * s3),
    ];
    let rh_stable = conditions.iter().all(|&c| c);
    // A non-converged eigensolve is reported as NaN real parts and an
    // unstable eigenvalue verdict.
    let (eig_stable, eig_real_parts) =
        eigen_stable(&drift_matrix(s, p), k).unwrap_or((false, [f64::NAN; 4]));
    StabilityReport {
        s1,
        s2,
        s3,
        conditions,
        eig_real_parts,
        rh_stable,
        eig_stable,
        agreement: rh_stable == eig_stable,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointStability {
    pub branches: Vec<(SteadyState, StabilityReport)>,
    /// At least one branch is stable by Routh–Hurwitz.
    pub stable: bool,
}

impl PointStability {
    /// Lowest-intensity branch that is stable.
    pub fn first_stable(&self) -> Option<&SteadyState> {
        self.branches.iter().find(|(_, r)| r.rh_stable).map(|(s, _)| s)
    }
}

pub fn point_stability(p: &DerivedParams, mode: SteadyMode) -> Result<PointStability> {
    let set = steady_states(p, mode)?;
    let branches: Vec<_> = set
        .states
        .into_iter()
        .map(|s| {
            let r = routh_hurwitz(&s, p);
            (s, r)
        })
        .collect();
    let stable = branches.iter().any(|(_, r)| r.rh_stable);
    Ok(PointStability { branches, stable })
}

/// Largest pump power in `[0, p_max]` for which the point is stable, found
/// by scanning `points` powers and bisecting the last stable→unstable
/// transition to relative precision 1e-6.
pub fn max_stable_power(
    cfg: &SystemConfig,
    mode: SteadyMode,
    p_max: f64,
    points: usize,
) -> Result<f64> {
    let is_stable = |pw: f64| -> Result<bool> {
        let p = derive(&cfg.with_power(pw))?;
        Ok(point_stability(&p, mode).map(|s| s.stable).unwrap_or(false))
    };
    let mut last_stable = None;
    for i in 1..=points {
        let pw = p_max * i as f64 / points as f64;
        if is_stable(pw)? {
            last_stable = Some(i);
        }
    }
    let Some(i) = last_stable else {
        return Ok(0.0);
    };
    if i == points {
        return Ok(p_max);
    }
    let mut lo = p_max * i as f64 / points as f64;
    let mut hi = p_max * (i + 1) as f64 / points as f64;
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if is_stable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
