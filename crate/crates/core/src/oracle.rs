//! Stochastic time-domain check of the analytic output spectrum.
//!
//! The fluctuations obey du = M·u dt + B·dW with a white thermal force on
//! δp (intensity γ_m(2n_th+1)) and vacuum input quadratures of intensity ½
//! each. Trajectories are generated either by the exact Gaussian
//! discretization of this linear SDE or by Euler–Maruyama. The output field
//! a_out = √(2κ)·a − a_in is reconstructed in-stream as a per-step average,
//! and its Welch periodogram is compared with S_out(markov) + ½, the ½ being
//! the symmetrized vacuum floor the classical estimator sees.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{thermal_occupation, DerivedParams};
use crate::spectra::{peak_frequencies, s_out, NoiseKind, NoiseModel};
use crate::stability::{drift_matrix, eigen_stable, DriftMatrix};
use crate::steady::SteadyState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Exact one-step propagator and covariance of the linear SDE.
    Exact,
    EulerMaruyama,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    /// Step (s).
    pub dt: f64,
    /// Recorded length per member (s).
    pub duration: f64,
    /// Discarded warm-up (s).
    pub burn_in: f64,
    pub seed: u64,
    pub ensemble: usize,
    /// Welch segments per member.
    pub segments: usize,
    pub integrator: Integrator,
    /// Must be Markov.
    pub noise: NoiseModel,
}

impl TrajectoryConfig {
    /// Largest admissible step, 0.05/max(ω₊, κ).
    pub fn max_dt(s: &SteadyState, p: &DerivedParams) -> Result<f64> {
        let pf = peak_frequencies(s, p)?;
        Ok(0.05 / pf.omega_plus.max(p.kappa()))
    }

    /// Step at the admissible limit, ten slowest decay times of burn-in,
    /// 2 ms per member, 32 members of 8 segments.
    pub fn for_point(s: &SteadyState, p: &DerivedParams, seed: u64) -> Result<Self> {
        let dt = Self::max_dt(s, p)?;
        let (_, re) = eigen_stable(&drift_matrix(s, p), p.kappa())?;
        let slowest = re.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        let burn_in = (10.0 / slowest).min(1e-3);
        Ok(TrajectoryConfig {
            dt,
            duration: 2e-3,
            burn_in,
            seed,
            ensemble: 32,
            segments: 8,
            integrator: Integrator::Exact,
            noise: NoiseModel::markov(p.temperature()),
        })
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    fn burn_in_steps(&self) -> usize {
        (self.burn_in / self.dt).round() as usize
    }

    fn check(&self, s: &SteadyState, p: &DerivedParams) -> Result<()> {
        if self.noise.kind != NoiseKind::Markov {
            return Err(Error::config("noise", "the time-domain oracle supports the markov model only"));
        }
        let limit = Self::max_dt(s, p)?;
        if !(self.dt > 0.0 && self.dt <= limit * (1.0 + 1e-12)) {
            return Err(Error::config(
                "dt",
                format!("must be in (0, {limit:.6e}] s (0.05/max(ω₊, κ)), got {:e}", self.dt),
            ));
        }
        if !(self.duration > 0.0 && self.burn_in >= 0.0 && self.duration.is_finite()) {
            return Err(Error::config("duration", "duration must be > 0 and burn_in >= 0"));
        }
        if self.ensemble == 0 {
            return Err(Error::config("ensemble", "must be at least 1"));
        }
        if self.segments == 0 {
            return Err(Error::config("segments", "must be at least 1"));
        }
        Ok(())
    }
}

/// One ensemble member: fluctuation samples u(t_k) and the step-averaged
/// output field over (t_{k−1}, t_k].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub u: Vec<[f64; 4]>,
    pub a_out: Vec<Complex64>,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("t_s,dx,dp,dX,dP,a_out_re,a_out_im\n");
        for (k, (u, a)) in self.u.iter().zip(&self.a_out).enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                (k + 1) as f64 * self.dt,
                u[0],
                u[1],
                u[2],
                u[3],
                a.re,
                a.im
            );
        }
        out
    }
}

/// Per-step linear update of the augmented state
/// (u, ∫X dt/dt, ∫P dt/dt, ΔW_X/√dt, ΔW_P/√dt) from u alone.
struct Stepper {
    /// Rows 0..8, columns 0..4 of the propagator (the augmented block starts
    /// at zero every step, so its columns are never needed).
    phi: [[f64; 4]; 8],
    /// Noise loading: increment = chol · z with z ~ N(0, I₈).
    chol: [[f64; 8]; 8],
    dt: f64,
    sqrt_2kappa: f64,
}

fn noise_intensities(p: &DerivedParams, noise: &NoiseModel) -> [f64; 3] {
    let n = thermal_occupation(p.omega_m(), noise.temperature);
    [p.gamma_m() * (2.0 * n + 1.0), 0.5, 0.5]
}

impl Stepper {
    fn exact(m: &DriftMatrix, p: &DerivedParams, noise: &NoiseModel, dt: f64) -> Result<Self> {
        let kappa = p.kappa();
        let sq = (2.0 * kappa).sqrt();
        let q = noise_intensities(p, noise);
        // Augmented drift A and loading B for v = (u, yX, yP, wX, wP).
        let mut a = DMatrix::<f64>::zeros(8, 8);
        for i in 0..4 {
            for j in 0..4 {
                a[(i, j)] = m.m[i][j];
            }
        }
        a[(4, 2)] = 1.0;
        a[(5, 3)] = 1.0;
        let mut b = DMatrix::<f64>::zeros(8, 3);
        b[(1, 0)] = 1.0;
        b[(2, 1)] = sq;
        b[(3, 2)] = sq;
        b[(6, 1)] = 1.0;
        b[(7, 2)] = 1.0;
        // Scale y by 1/dt and w by 1/√dt so every block is O(1).
        let scale = [1.0, 1.0, 1.0, 1.0, 1.0 / dt, 1.0 / dt, 1.0 / dt.sqrt(), 1.0 / dt.sqrt()];
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&scale));
        let d_inv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(8, scale.iter().map(|v| 1.0 / v)));
        let a_s = &d * &a * &d_inv;
        let qm = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&q));
        let g_s = &d * &b * qm * b.transpose() * &d;

        // Van Loan: exp([[−A, G], [0, Aᵀ]]·dt) = [[·, F12], [0, F22]],
        // Φ = F22ᵀ, Q_d = Φ·F12.
        let mut c = DMatrix::<f64>::zeros(16, 16);
        c.view_mut((0, 0), (8, 8)).copy_from(&(-&a_s * dt));
        c.view_mut((0, 8), (8, 8)).copy_from(&(&g_s * dt));
        c.view_mut((8, 8), (8, 8)).copy_from(&(a_s.transpose() * dt));
        let e = c.exp();
        let phi_full = e.view((8, 8), (8, 8)).transpose();
        let f12 = e.view((0, 8), (8, 8)).clone_owned();
        let mut qd = &phi_full * f12;
        qd = 0.5 * (&qd + qd.transpose());
        if qd.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite discretized covariance".into()));
        }
        let eig = SymmetricEigen::new(qd);
        let mut chol = [[0.0; 8]; 8];
        for i in 0..8 {
            for j in 0..8 {
                chol[i][j] = eig.eigenvectors[(i, j)] * eig.eigenvalues[j].max(0.0).sqrt();
            }
        }
        let mut phi = [[0.0; 4]; 8];
        for i in 0..8 {
            for j in 0..4 {
                phi[i][j] = phi_full[(i, j)];
            }
        }
        Ok(Stepper { phi, chol, dt, sqrt_2kappa: sq })
    }

    fn euler(m: &DriftMatrix, p: &DerivedParams, noise: &NoiseModel, dt: f64) -> Self {
        let sq = (2.0 * p.kappa()).sqrt();
        let q = noise_intensities(p, noise);
        let mut phi = [[0.0; 4]; 8];
        for i in 0..4 {
            for j in 0..4 {
                phi[i][j] = m.m[i][j] * dt + if i == j { 1.0 } else { 0.0 };
            }
        }
        // Left-point rule for the step average of X, P.
        phi[4][2] = 1.0;
        phi[5][3] = 1.0;
        // z₀ drives ξ; z₁, z₂ drive X_in, P_in and are reused as the
        // scaled input increments.
        let mut chol = [[0.0; 8]; 8];
        chol[1][0] = (q[0] * dt).sqrt();
        chol[2][1] = sq * (q[1] * dt).sqrt();
        chol[3][2] = sq * (q[2] * dt).sqrt();
        chol[6][1] = q[1].sqrt();
        chol[7][2] = q[2].sqrt();
        Stepper { phi, chol, dt, sqrt_2kappa: sq }
    }

    #[inline]
    fn step(&self, u: &[f64; 4], z: &[f64; 8]) -> ([f64; 4], Complex64) {
        let mut v = [0.0; 8];
        for (i, vi) in v.iter_mut().enumerate() {
            let row = &self.phi[i];
            let mut acc = row[0] * u[0] + row[1] * u[1] + row[2] * u[2] + row[3] * u[3];
            let c = &self.chol[i];
            for k in 0..8 {
                acc += c[k] * z[k];
            }
            *vi = acc;
        }
        let rdt = 1.0 / self.dt.sqrt();
        let x_out = self.sqrt_2kappa * v[4] - v[6] * rdt;
        let p_out = self.sqrt_2kappa * v[5] - v[7] * rdt;
        ([v[0], v[1], v[2], v[3]], Complex64::new(x_out, p_out) / SQRT_2)
    }
}

fn stepper(s: &SteadyState, p: &DerivedParams, cfg: &TrajectoryConfig) -> Result<Stepper> {
    let m = drift_matrix(s, p);
    match cfg.integrator {
        Integrator::Exact => Stepper::exact(&m, p, &cfg.noise, cfg.dt),
        Integrator::EulerMaruyama => Ok(Stepper::euler(&m, p, &cfg.noise, cfg.dt)),
    }
}

fn require_stable(s: &SteadyState, p: &DerivedParams) -> Result<()> {
    let (stable, re) = eigen_stable(&drift_matrix(s, p), p.kappa())?;
    if stable {
        Ok(())
    } else {
        Err(Error::Unstable { max_real_part: re[0] })
    }
}

fn member_rng(seed: u64, member: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(member as u64);
    rng
}

fn run_member(
    st: &Stepper,
    cfg: &TrajectoryConfig,
    member: usize,
    mut record: impl FnMut(&[f64; 4], Complex64),
) {
    let mut rng = member_rng(cfg.seed, member);
    let mut u = [0.0; 4];
    let mut z = [0.0; 8];
    let total = cfg.burn_in_steps() + cfg.steps();
    for k in 0..total {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        let (next, out) = st.step(&u, &z);
        u = next;
        if k >= cfg.burn_in_steps() {
            record(&u, out);
        }
    }
}

/// Trajectory of ensemble member `member`; reproducible for a given seed.
pub fn simulate(
    s: &SteadyState,
    p: &DerivedParams,
    cfg: &TrajectoryConfig,
    member: usize,
) -> Result<Trajectory> {
    require_stable(s, p)?;
    cfg.check(s, p)?;
    let st = stepper(s, p, cfg)?;
    let n = cfg.steps();
    let mut u = Vec::with_capacity(n);
    let mut a_out = Vec::with_capacity(n);
    run_member(&st, cfg, member, |x, a| {
        u.push(*x);
        a_out.push(a);
    });
    Ok(Trajectory { dt: cfg.dt, u, a_out })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    /// Ascending signed angular frequencies (rad/s).
    pub omega_grid: Vec<f64>,
    pub psd: Vec<f64>,
    pub n_segments: usize,
    pub segment_len: usize,
    pub estimator: String,
}

/// Welch estimate with a Hann window and 50% overlap; `segments` is the
/// number of overlapping segments. The transform uses e^{+iωt}, matching
/// the frequency convention of the analytic spectra, and is normalised so
/// white noise of intensity σ² (⟨x(t)x*(t')⟩ = σ²δ(t−t')) gives σ².
pub fn psd_estimate(series: &[Complex64], dt: f64, segments: usize) -> Result<PsdEstimate> {
    let seg_len = if segments == 0 { 0 } else { 2 * series.len() / (segments + 1) };
    if segments == 0 || seg_len < 16 {
        return Err(Error::SeriesTooShort { len: series.len(), segments });
    }
    let hop = seg_len / 2;
    let n_segments = (series.len() - seg_len) / hop + 1;
    let window: Vec<f64> = (0..seg_len)
        .map(|k| 0.5 - 0.5 * (std::f64::consts::TAU * k as f64 / seg_len as f64).cos())
        .collect();
    let w2: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(seg_len);
    let mut acc = vec![0.0; seg_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); seg_len];
    for s in 0..n_segments {
        let start = s * hop;
        for (k, b) in buf.iter_mut().enumerate() {
            *b = series[start + k] * window[k];
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }
    let norm = dt / (w2 * n_segments as f64);
    let d_omega = std::f64::consts::TAU / (seg_len as f64 * dt);
    // Bins ≥ N/2 are negative frequencies; rotate them to the front.
    let half = seg_len.div_ceil(2);
    let order: Vec<usize> = (half..seg_len).chain(0..half).collect();
    let omega_grid = order
        .iter()
        .map(|&k| {
            let kk = if k >= half { k as f64 - seg_len as f64 } else { k as f64 };
            kk * d_omega
        })
        .collect();
    let psd = order.iter().map(|&k| acc[k] * norm).collect();
    Ok(PsdEstimate {
        omega_grid,
        psd,
        n_segments,
        segment_len: seg_len,
        estimator: "welch-hann-50".into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// ‖PSD − (S_out + ½)‖ / ‖S_out + ½‖ over the band.
    pub deviation: f64,
    /// ‖(PSD − ½) − S_out‖ / ‖S_out‖ over the band.
    pub floor_subtracted_deviation: f64,
    /// Part of `deviation` expected from finite averaging alone, from the
    /// bin-wise spread across members.
    pub statistical_deviation: f64,
    pub band_rad_s: (f64, f64),
    pub bins: usize,
    pub omega_minus: f64,
    pub peak_empirical: f64,
    pub peak_analytic: f64,
    pub peak_shift_bins: f64,
    pub bin_width: f64,
    pub config: TrajectoryConfig,
}

/// Simulates the ensemble and compares the mean output PSD with the Markov
/// analytic spectrum in |ω| ∈ [ω₋ − 5κ, ω₋ + 5κ].
pub fn validate_s_out(
    s: &SteadyState,
    p: &DerivedParams,
    cfg: &TrajectoryConfig,
) -> Result<ValidationReport> {
    require_stable(s, p)?;
    cfg.check(s, p)?;
    let st = stepper(s, p, cfg)?;
    let members: Vec<PsdEstimate> = (0..cfg.ensemble)
        .into_par_iter()
        .map(|m| {
            let mut out = Vec::with_capacity(cfg.steps());
            run_member(&st, cfg, m, |_, a| out.push(a));
            psd_estimate(&out, cfg.dt, cfg.segments)
        })
        .collect::<Result<_>>()?;

    let grid = members[0].omega_grid.clone();
    let n = grid.len();
    let m = members.len() as f64;
    let mut mean = vec![0.0; n];
    let mut sq = vec![0.0; n];
    for est in &members {
        for k in 0..n {
            mean[k] += est.psd[k] / m;
            sq[k] += est.psd[k] * est.psd[k] / m;
        }
    }

    let pf = peak_frequencies(s, p)?;
    let half_band = 5.0 * p.kappa();
    let (lo, hi) = ((pf.omega_minus - half_band).max(0.0), pf.omega_minus + half_band);
    let band: Vec<usize> = (0..n)
        .filter(|&k| {
            let w = grid[k].abs();
            w >= lo && w <= hi
        })
        .collect();
    let analytic: Vec<f64> = band.iter().map(|&k| s_out(grid[k], s, p, &cfg.noise)).collect();

    let mut num = 0.0;
    let mut den = 0.0;
    let mut num_fs = 0.0;
    let mut den_fs = 0.0;
    let mut stat = 0.0;
    for (i, &k) in band.iter().enumerate() {
        let a = analytic[i] + 0.5;
        num += (mean[k] - a).powi(2);
        den += a * a;
        num_fs += (mean[k] - 0.5 - analytic[i]).powi(2);
        den_fs += analytic[i].powi(2);
        let var = (sq[k] - mean[k] * mean[k]).max(0.0);
        stat += var / m;
    }
    let argmax = |vals: &dyn Fn(usize) -> f64, sign: f64| {
        band.iter()
            .copied()
            .filter(|&k| sign == 0.0 || grid[k] * sign > 0.0)
            .max_by(|&a, &b| vals(a).total_cmp(&vals(b)))
            .map(|k| grid[k])
            .unwrap_or(f64::NAN)
    };
    // The empirical maximum is searched on the same frequency sign as the
    // analytic one, since the ±ω₋ lobes can have similar heights.
    let peak_analytic = argmax(&|k| analytic[band.binary_search(&k).unwrap()], 0.0);
    let peak_empirical = argmax(&|k| mean[k], peak_analytic.signum());
    let bin_width = grid[1] - grid[0];
    Ok(ValidationReport {
        deviation: (num / den).sqrt(),
        floor_subtracted_deviation: if den_fs > 0.0 { (num_fs / den_fs).sqrt() } else { f64::NAN },
        statistical_deviation: (stat / den).sqrt(),
        band_rad_s: (lo, hi),
        bins: band.len(),
        omega_minus: pf.omega_minus,
        peak_empirical,
        peak_analytic,
        peak_shift_bins: (peak_empirical - peak_analytic).abs() / bin_width,
        bin_width,
        config: *cfg,
    })
}
