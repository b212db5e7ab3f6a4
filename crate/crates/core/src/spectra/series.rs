//! Frequency grids and tabulated spectra.

use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{peak_frequencies, s_opt, s_opt_approx, s_out, s_phi, NoiseModel};
use crate::params::DerivedParams;
use crate::steady::SteadyState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    SOut,
    SPhi,
    SOpt,
    SOptApprox,
}

impl fmt::Display for SpectrumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpectrumKind::SOut => "s_out",
            SpectrumKind::SPhi => "s_phi",
            SpectrumKind::SOpt => "s_opt",
            SpectrumKind::SOptApprox => "s_opt_approx",
        })
    }
}

pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// 4001 points over [−3ω_m, 3ω_m], with ten times the density inside
/// ±5κ of ±ω₋ and ±ω₊ when those exist.
pub fn default_grid(s: &SteadyState, p: &DerivedParams) -> Vec<f64> {
    let wm = p.omega_m();
    let (lo, hi) = (-3.0 * wm, 3.0 * wm);
    let base = 4001;
    let step = (hi - lo) / (base - 1) as f64;
    let mut grid = uniform_grid(lo, hi, base);
    if let Ok(pf) = peak_frequencies(s, p) {
        let half = 5.0 * p.kappa();
        for c in [-pf.omega_plus, -pf.omega_minus, pf.omega_minus, pf.omega_plus] {
            let a = (c - half).max(lo);
            let b = (c + half).min(hi);
            if b > a {
                let n = ((b - a) / (step / 10.0)).ceil() as usize + 1;
                grid.extend(uniform_grid(a, b, n));
            }
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * step);
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSeries {
    pub kind: SpectrumKind,
    pub omega_m: f64,
    pub omega_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Homodyne phase of an `SPhi` series.
    pub phi: Option<f64>,
    /// Optimal phase per point of an `SOpt` series.
    pub phi_opt: Option<Vec<f64>>,
    pub operating_point: SteadyState,
    pub noise: NoiseModel,
    /// Constant applied to the correlators to pin the vacuum level at 1.
    pub normalization_factor: f64,
}

impl SpectrumSeries {
    pub fn compute(
        kind: SpectrumKind,
        grid: Vec<f64>,
        s: &SteadyState,
        p: &DerivedParams,
        noise: &NoiseModel,
        phi: Option<f64>,
    ) -> Self {
        let (values, phi_opt) = match kind {
            SpectrumKind::SOut => (grid.par_iter().map(|&w| s_out(w, s, p, noise)).collect(), None),
            SpectrumKind::SPhi => {
                let ph = phi.unwrap_or(0.0);
                (grid.par_iter().map(|&w| s_phi(w, ph, s, p, noise)).collect(), None)
            }
            SpectrumKind::SOpt => {
                let both: Vec<(f64, f64)> = grid
                    .par_iter()
                    .map(|&w| {
                        let o = s_opt(w, s, p, noise);
                        (o.value, o.phi_opt)
                    })
                    .collect();
                let (v, ph): (Vec<f64>, Vec<f64>) = both.into_iter().unzip();
                (v, Some(ph))
            }
            SpectrumKind::SOptApprox => (grid.par_iter().map(|&w| s_opt_approx(w, s, p)).collect(), None),
        };
        SpectrumSeries {
            kind,
            omega_m: p.omega_m(),
            omega_grid: grid,
            values,
            phi: if kind == SpectrumKind::SPhi { Some(phi.unwrap_or(0.0)) } else { None },
            phi_opt,
            operating_point: *s,
            noise: *noise,
            normalization_factor: 1.0,
        }
    }

    /// Grid point with the largest value.
    pub fn argmax(&self) -> Option<usize> {
        (0..self.values.len()).max_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega_rad_s,omega_over_omega_m,value");
        if self.phi_opt.is_some() {
            out.push_str(",phi_opt_rad");
        }
        out.push('\n');
        for (i, (&w, &v)) in self.omega_grid.iter().zip(&self.values).enumerate() {
            let _ = write!(out, "{},{},{}", w, w / self.omega_m, v);
            if let Some(ph) = &self.phi_opt {
                let _ = write!(out, ",{}", ph[i]);
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive, SystemConfig};
    use crate::steady::{steady_states, SteadyMode};

    #[test]
    fn default_grid_is_sorted_and_refined() {
        let p = derive(&SystemConfig::reference()).unwrap();
        let s = steady_states(&p, SteadyMode::Exact).unwrap().states[0];
        let g = default_grid(&s, &p);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g.len() > 4001);
        assert_eq!(g[0], -3.0 * p.omega_m());
        assert_eq!(*g.last().unwrap(), 3.0 * p.omega_m());
        let pf = peak_frequencies(&s, &p).unwrap();
        let near = g.iter().filter(|w| (**w - pf.omega_minus).abs() < p.kappa()).count();
        assert!(near > 100, "{near}");
    }

    #[test]
    fn csv_layout() {
        let p = derive(&SystemConfig::reference()).unwrap();
        let s = steady_states(&p, SteadyMode::Exact).unwrap().states[0];
        let n = NoiseModel::exact(1e-3);
        let grid = uniform_grid(0.5 * p.omega_m(), 1.5 * p.omega_m(), 3);
        let sr = SpectrumSeries::compute(SpectrumKind::SOpt, grid.clone(), &s, &p, &n, None);
        let csv = sr.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "omega_rad_s,omega_over_omega_m,value,phi_opt_rad");
        assert_eq!(lines.len(), 4);
        let cells: Vec<f64> = lines[2].split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells[0], grid[1]);
        assert_eq!(cells[2], sr.values[1]);
        let so = SpectrumSeries::compute(SpectrumKind::SOut, grid, &s, &p, &n, None);
        assert!(so.to_csv().starts_with("omega_rad_s,omega_over_omega_m,value\n"));
    }
}
