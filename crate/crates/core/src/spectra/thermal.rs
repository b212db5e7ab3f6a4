//! Squeezing at the resonance and its temperature threshold.

use serde::{Deserialize, Serialize};

use super::{eval_frequency, peak_frequencies, s_opt, squeezing_percent, to_db};
use super::{EvalFrequency, NoiseKind, NoiseModel};
use crate::error::{Error, Result};
use crate::params::{derive, DerivedParams, SystemConfig};
use crate::steady::{select_branch, steady_states, BranchSelect, SteadyMode, SteadyState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezePoint {
    pub omega_eval: f64,
    pub omega_minus: f64,
    pub omega_plus: f64,
    pub s_opt: f64,
    pub phi_opt: f64,
    pub percent: f64,
    pub db: f64,
}

pub fn squeeze_point(
    s: &SteadyState,
    p: &DerivedParams,
    noise: &NoiseModel,
    which: EvalFrequency,
) -> Result<SqueezePoint> {
    let pf = peak_frequencies(s, p)?;
    let omega_eval = eval_frequency(s, p, which)?;
    let o = s_opt(omega_eval, s, p, noise);
    Ok(SqueezePoint {
        omega_eval,
        omega_minus: pf.omega_minus,
        omega_plus: pf.omega_plus,
        s_opt: o.value,
        phi_opt: o.phi_opt,
        percent: squeezing_percent(o.value),
        db: to_db(o.value),
    })
}

/// S_opt − 1 at temperature `t`, with the operating point and evaluation
/// frequency re-solved at that temperature.
fn excess_noise(
    cfg: &SystemConfig,
    t: f64,
    mode: SteadyMode,
    kind: NoiseKind,
    which: EvalFrequency,
) -> Result<f64> {
    let p = derive(&cfg.with_temperature(t))?;
    let s = select_branch(&steady_states(&p, mode)?, BranchSelect::LowestIntensity)?;
    Ok(squeeze_point(&s, &p, &NoiseModel::new(kind, t), which)?.s_opt - 1.0)
}

/// Temperature at which S_opt at the evaluation frequency crosses 1,
/// bracketed by `t_range` and bisected to relative precision 1e-4.
pub fn critical_temperature(
    cfg: &SystemConfig,
    mode: SteadyMode,
    kind: NoiseKind,
    which: EvalFrequency,
    t_range: (f64, f64),
) -> Result<f64> {
    let (mut lo, mut hi) = t_range;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::config(
            "temperature range",
            format!("need 0 <= lo < hi, got [{lo}, {hi}]"),
        ));
    }
    let f_lo = excess_noise(cfg, lo, mode, kind, which)?;
    let f_hi = excess_noise(cfg, hi, mode, kind, which)?;
    if !(f_lo < 0.0 && f_hi >= 0.0) {
        return Err(Error::NoCrossing { t_lo: lo, t_hi: hi, f_lo, f_hi });
    }
    while hi - lo > 1e-4 * hi {
        let mid = 0.5 * (lo + hi);
        if excess_noise(cfg, mid, mode, kind, which)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
