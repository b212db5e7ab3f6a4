//! Stochastic integrator checks against Ornstein–Uhlenbeck closed forms and
//! a convergence ladder for the spectrum comparison.

use num_complex::Complex64;

use squeezelab::oracle::{psd_estimate, simulate, validate_s_out, Integrator, TrajectoryConfig};
use squeezelab::params::{derive, DerivedParams, SystemConfig};
use squeezelab::spectra::NoiseModel;
use squeezelab::steady::{steady_states, SteadyMode, SteadyState};

/// Undriven, uncoupled device: cavity and oscillator are independent OU
/// processes.
fn decoupled(detuning_ratio: f64, gamma: f64, temperature: f64) -> (DerivedParams, SteadyState) {
    let mut cfg = SystemConfig::reference()
        .with_power(0.0)
        .with_detuning_ratio(detuning_ratio)
        .with_temperature(temperature);
    cfg.g1_override = Some(0.0);
    cfg.gamma_m = gamma;
    let p = derive(&cfg).unwrap();
    let s = steady_states(&p, SteadyMode::Approx).unwrap().states[0];
    (p, s)
}

fn mean_square(series: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in series {
        sum += v * v;
        n += 1;
    }
    sum / n as f64
}

#[test]
fn cavity_quadrature_variance_is_vacuum_level() {
    // Resonant cavity: a detuned one adds an O(Δ²dt/κ) Euler bias.
    let (p, s) = decoupled(0.0, SystemConfig::reference().gamma_m, 0.0);
    let mut cfg = TrajectoryConfig::for_point(&s, &p, 11).unwrap();
    cfg.integrator = Integrator::EulerMaruyama;
    cfg.dt = TrajectoryConfig::max_dt(&s, &p).unwrap();
    cfg.burn_in = 20.0 / p.kappa();
    cfg.duration = 4e-4;
    let mut var = 0.0;
    for member in 0..4 {
        let t = simulate(&s, &p, &cfg, member).unwrap();
        var += 0.5 * (mean_square(t.u.iter().map(|u| u[2])) + mean_square(t.u.iter().map(|u| u[3]))) / 4.0;
    }
    // Euler–Maruyama bias is O(κ·dt) = 0.5%.
    assert!((var / 0.5 - 1.0).abs() < 0.03, "⟨δX²⟩ = {var}");
}

#[test]
fn hot_oscillator_reaches_equipartition() {
    let wm = SystemConfig::reference().omega_m;
    let (p, s) = decoupled(1.0, 0.1 * wm, 1.0);
    let mut cfg = TrajectoryConfig::for_point(&s, &p, 12).unwrap();
    cfg.burn_in = 50.0 / p.gamma_m();
    cfg.duration = 1e-3;
    let mut var = 0.0;
    for member in 0..4 {
        let t = simulate(&s, &p, &cfg, member).unwrap();
        var += mean_square(t.u.iter().map(|u| u[0])) / 4.0;
    }
    let want = p.n_th + 0.5;
    assert!(p.n_th > 1000.0);
    assert!((var / want - 1.0).abs() < 0.05, "⟨δx²⟩ = {var}, n_th + ½ = {want}");
}

#[test]
fn resonant_cavity_spectrum_is_lorentzian_with_width_kappa() {
    let (p, s) = decoupled(0.0, SystemConfig::reference().gamma_m, 0.0);
    let mut cfg = TrajectoryConfig::for_point(&s, &p, 13).unwrap();
    cfg.burn_in = 20.0 / p.kappa();
    cfg.duration = 1e-3;
    let k = p.kappa();
    let mut mean: Option<(Vec<f64>, Vec<f64>)> = None;
    let members = 4;
    for member in 0..members {
        let t = simulate(&s, &p, &cfg, member).unwrap();
        let field: Vec<Complex64> = t
            .u
            .iter()
            .map(|u| Complex64::new(u[2], u[3]) / std::f64::consts::SQRT_2)
            .collect();
        let est = psd_estimate(&field, t.dt, cfg.segments).unwrap();
        match &mut mean {
            None => mean = Some((est.omega_grid, est.psd.iter().map(|v| v / members as f64).collect())),
            Some((_, acc)) => acc.iter_mut().zip(&est.psd).for_each(|(a, v)| *a += v / members as f64),
        }
    }
    let (grid, psd) = mean.unwrap();
    // 1/S = (κ² + ω²)/A is linear in ω²; least squares over |ω| < 3κ.
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .zip(&psd)
        .filter(|(w, _)| w.abs() < 3.0 * k)
        .map(|(w, v)| ((w / k).powi(2), 1.0 / v))
        .collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx).powi(2)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let width = (intercept / slope).sqrt() * k;
    assert!((width / k - 1.0).abs() < 0.05, "half-width {width} vs κ {k}");
}

#[test]
fn uncoupled_output_is_flat_vacuum() {
    let (p, s) = decoupled(1.0, SystemConfig::reference().gamma_m, 1e-3);
    let mut cfg = TrajectoryConfig::for_point(&s, &p, 14).unwrap();
    cfg.burn_in = 20.0 / p.kappa();
    cfg.duration = 5e-4;
    cfg.ensemble = 4;
    let wm = p.omega_m();
    // Eight sub-bands across ±3ω_m, each averaged over all members.
    let mut bands = [0.0f64; 8];
    let mut counts = [0usize; 8];
    for member in 0..cfg.ensemble {
        let t = simulate(&s, &p, &cfg, member).unwrap();
        let est = psd_estimate(&t.a_out, t.dt, cfg.segments).unwrap();
        for (w, v) in est.omega_grid.iter().zip(&est.psd) {
            let x = (w / wm + 3.0) / 6.0;
            if (0.0..1.0).contains(&x) {
                let b = (x * 8.0) as usize;
                bands[b] += v;
                counts[b] += 1;
            }
        }
    }
    for (sum, n) in bands.iter().zip(counts) {
        let level = sum / n as f64;
        assert!((level / 0.5 - 1.0).abs() < 0.02, "sub-band level {level}");
    }
    // The analytic spectrum is identically zero, so the per-bin deviation
    // from the floor is pure estimator noise.
    let rep = validate_s_out(&s, &p, &cfg).unwrap();
    assert!(rep.deviation < 1.25 * rep.statistical_deviation, "{rep:?}");
}

#[test]
fn spectrum_deviation_shrinks_with_ensemble() {
    let p = derive(&SystemConfig::reference().with_qoc_ratio(-1e-2)).unwrap();
    let s = steady_states(&p, SteadyMode::Approx).unwrap().states[0];
    let mut cfg = TrajectoryConfig::for_point(&s, &p, 15).unwrap();
    cfg.duration = 5e-4;
    assert_eq!(cfg.noise, NoiseModel::markov(p.temperature()));
    let ladder: Vec<f64> = [2, 6, 18]
        .iter()
        .map(|&e| {
            cfg.ensemble = e;
            validate_s_out(&s, &p, &cfg).unwrap().deviation
        })
        .collect();
    assert!(ladder[0] > ladder[1] && ladder[1] > ladder[2], "{ladder:?}");
}
