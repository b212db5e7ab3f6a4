//! Figure recipes and sweep behaviour.

use squeezelab::params::{derive, SystemConfig};
use squeezelab::spectra::{
    critical_temperature, default_grid, peak_frequencies, spectral_peak, EvalFrequency, NoiseKind,
    NoiseModel, SpectrumKind, SpectrumSeries,
};
use squeezelab::steady::{steady_states, BranchStrategy, SteadyMode};
use squeezelab::sweep::{
    figure_table, reproduce, run_sweep, Axis, Cell, FigureId, FigureRecipe, Output, SweepSpec, Table,
    QOC_RATIOS,
};

fn col(t: &Table, name: &str) -> usize {
    t.column(name).unwrap_or_else(|| panic!("missing column {name} in {:?}", t.columns))
}

fn rows_for(t: &Table, r: f64) -> impl Iterator<Item = &Vec<Cell>> {
    let c = col(t, "qoc_ratio");
    t.rows.iter().filter(move |row| row[c].value() == Some(r))
}

/// Largest stable power at Δ = ω_m in a stability-map table.
fn edge_at_resonance(t: &Table, r: f64) -> f64 {
    let (d, p, s) = (col(t, "detuning_over_omega_m"), col(t, "power_w"), col(t, "stable"));
    rows_for(t, r)
        .filter(|row| (row[d].value().unwrap() - 1.0).abs() < 1e-9 && row[s].value() == Some(1.0))
        .map(|row| row[p].value().unwrap())
        .fold(0.0, f64::max)
}

#[test]
fn sub_milliwatt_map_loses_stability_near_140_microwatt() {
    let t = figure_table(&FigureRecipe::new(FigureId::Fig2b)).unwrap();
    let edge = edge_at_resonance(&t, -1e-2);
    assert!((edge / 140e-6 - 1.0).abs() <= 0.2, "edge {edge}");
    let edge = edge_at_resonance(&t, -5e-3);
    assert!((edge / 280e-6 - 1.0).abs() <= 0.2, "edge {edge}");
}

#[test]
fn milliwatt_map_has_nested_regions() {
    let t = figure_table(&FigureRecipe::new(FigureId::Fig2a)).unwrap();
    let s = col(&t, "stable");
    let stable = |r: f64| -> Vec<bool> { rows_for(&t, r).map(|row| row[s].value() == Some(1.0)).collect() };
    let (lin, quad) = (stable(0.0), stable(-1e-4));
    assert_eq!(lin.len(), 201 * 201);
    let n_lin = lin.iter().filter(|&&b| b).count();
    let n_quad = quad.iter().filter(|&&b| b).count();
    assert!(n_quad < n_lin, "{n_quad} vs {n_lin}");
    // The quadratic-coupling region lies almost entirely inside the linear one.
    let outside = lin.iter().zip(&quad).filter(|(l, q)| **q && !**l).count();
    assert!(outside * 100 < n_quad, "{outside} of {n_quad} points outside");
    assert!(edge_at_resonance(&t, -1e-4) < edge_at_resonance(&t, 0.0));
}

#[test]
fn spectra_peak_at_the_lower_resonance() {
    let t = figure_table(&FigureRecipe::new(FigureId::Fig3)).unwrap();
    let (w, v) = (col(&t, "omega_rad_s"), col(&t, "value"));
    let mut peaks = Vec::new();
    for r in QOC_RATIOS {
        let rows: Vec<&Vec<Cell>> = rows_for(&t, r).collect();
        assert!(rows.len() > 4000);
        let best = rows
            .iter()
            .max_by(|a, b| a[v].value().unwrap().total_cmp(&b[v].value().unwrap()))
            .unwrap();
        let p = derive(&SystemConfig::reference().with_qoc_ratio(r)).unwrap();
        let s = steady_states(&p, SteadyMode::Exact).unwrap().states[0];
        let pf = peak_frequencies(&s, &p).unwrap();
        let peak = spectral_peak(&s, &p, pf.omega_minus).unwrap();
        let grid = default_grid(&s, &p);
        let i = grid.partition_point(|&x| x < peak);
        let step = (grid[i] - grid[i - 1]).max(grid[i + 1] - grid[i]);
        assert!((best[w].value().unwrap().abs() - peak).abs() <= step, "r = {r}");
        peaks.push((peak, best[v].value().unwrap()));
    }
    // Red shift and roughly tenfold growth from r = 0 to r = −10⁻².
    assert!(peaks[4].0 < 0.8 * peaks[0].0);
    let growth = peaks[4].1 / peaks[0].1;
    assert!((5.0..=20.0).contains(&growth), "growth {growth}");
}

#[test]
fn optimal_ratio_gives_deepest_squeezing_over_power() {
    let t = figure_table(&FigureRecipe::new(FigureId::Fig6)).unwrap();
    let (s, pc) = (col(&t, "stable"), col(&t, "percent"));
    let best = |r: f64| {
        rows_for(&t, r)
            .filter(|row| row[s].value() == Some(1.0))
            .filter_map(|row| row[pc].value())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    assert!(best(-5e-3) > 90.0, "{}", best(-5e-3));
    assert!(best(-5e-3) > best(-1e-2));
}

#[test]
fn temperature_curves_cross_zero_at_critical_temperature() {
    let recipe = FigureRecipe::new(FigureId::Fig5a);
    let t = figure_table(&recipe).unwrap();
    let (tc, pc) = (col(&t, "temperature_k"), col(&t, "percent"));
    for r in QOC_RATIOS {
        let curve: Vec<(f64, f64)> = rows_for(&t, r)
            .map(|row| (row[tc].value().unwrap(), row[pc].value().unwrap()))
            .collect();
        assert_eq!(curve.len(), 151);
        let crossing = curve.windows(2).position(|w| w[0].1 > 0.0 && w[1].1 <= 0.0);
        let i = crossing.unwrap_or_else(|| panic!("r = {r}: no zero crossing"));
        let cfg = SystemConfig::reference().with_qoc_ratio(r);
        let t_c = critical_temperature(&cfg, SteadyMode::Exact, NoiseKind::Exact, EvalFrequency::Peak, (1e-4, 0.15))
            .unwrap();
        assert!(curve[i].0 <= t_c && t_c <= curve[i + 1].0, "r = {r}: {t_c} not in row {i}");
    }
}

#[test]
fn critical_temperature_ordering() {
    let tc = |power: f64, r: f64| {
        let cfg = SystemConfig::reference().with_power(power).with_qoc_ratio(r);
        critical_temperature(&cfg, SteadyMode::Exact, NoiseKind::Exact, EvalFrequency::Peak, (1e-4, 0.3)).unwrap()
    };
    assert!(tc(100e-6, -1e-2) > tc(100e-6, 0.0));
    assert!(tc(140e-6, -1e-2) > tc(140e-6, 0.0));
}

#[test]
fn continuity_tracks_hysteresis_through_bistable_window() {
    let powers: Vec<f64> = (0..=60).map(|i| i as f64 * 5e-4).collect();
    let descending: Vec<f64> = powers.iter().rev().copied().collect();
    let run = |values: &[f64]| {
        let mut spec = SweepSpec::new(Axis::list("power_w", values), SystemConfig::reference(), vec![Output::StableFlag]);
        spec.branch = BranchStrategy::Continuity;
        let t = run_sweep(&spec).unwrap();
        let (p, i, b) = (col(&t, "power_w"), col(&t, "intensity"), col(&t, "branches"));
        t.rows
            .iter()
            .map(|row| (row[p].value().unwrap(), row[i].value().unwrap(), row[b].value().unwrap()))
            .collect::<Vec<_>>()
    };
    let up = run(&powers);
    let mut down = run(&descending);
    down.reverse();
    let mut split = 0;
    for ((pw, iu, n), (_, id, _)) in up.iter().zip(&down) {
        if *n >= 3.0 {
            assert!(iu < id, "P = {pw}: upward sweep should hold the lower branch");
            split += 1;
        } else {
            assert_eq!(iu, id);
        }
    }
    assert!(split > 0, "the path never crosses a bistable window");
}

#[test]
fn reproduce_writes_data_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let files = reproduce(&FigureRecipe::new(FigureId::Fig6), dir.path()).unwrap();
    assert_eq!(files.len(), 2);
    let csv = std::fs::read_to_string(&files[0]).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("qoc_ratio,power_w,"));
    assert_eq!(csv.lines().count(), 1 + 5 * 30);
    for line in csv.lines().skip(1) {
        for cell in line.split(',') {
            assert!(cell.starts_with("ERR_") || cell.parse::<f64>().map(f64::is_finite).unwrap_or(false), "{cell}");
        }
    }
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&files[1]).unwrap()).unwrap();
    for key in ["git_describe", "config_hash", "branch_strategy", "noise_model", "steady_mode"] {
        assert!(meta[key].is_string(), "{key}");
    }
    assert_eq!(meta["ranges_are_estimates"], true);
}

#[test]
fn one_point_sweep_equals_direct_spectrum() {
    let cfg = SystemConfig::reference().with_qoc_ratio(-1e-3);
    let p = derive(&cfg).unwrap();
    let s = steady_states(&p, SteadyMode::Exact).unwrap().states[0];
    let w = 0.97 * p.omega_m();
    let mut spec = SweepSpec::new(Axis::list("omega", &[w]), cfg, vec![Output::SOut, Output::SOpt]);
    spec.mode = SteadyMode::Exact;
    let t = run_sweep(&spec).unwrap();
    let n = NoiseModel::exact(cfg.temperature);
    let direct = SpectrumSeries::compute(SpectrumKind::SOpt, vec![w], &s, &p, &n, None);
    assert_eq!(t.rows[0][col(&t, "s_opt")].value(), Some(direct.values[0]));
    assert_eq!(t.rows[0][col(&t, "omega_eval_rad_s")].value(), Some(w));
}
