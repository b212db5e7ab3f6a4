//! Parameter grids, per-point evaluation and canned figure recipes.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{derive, SystemConfig};
use crate::spectra::{
    default_grid, eval_frequency, peak_frequencies, s_opt, s_out, squeezing_percent,
    critical_temperature, EvalFrequency, NoiseKind, NoiseModel, SpectrumKind, SpectrumSeries,
};
use crate::stability::routh_hurwitz;
use crate::steady::{select_branch, steady_states, BranchSelect, BranchSet, BranchStrategy, SteadyMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisScale {
    Lin,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisValues {
    Range {
        min: f64,
        max: f64,
        points: usize,
        scale: AxisScale,
    },
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    /// A config-file key, `temperature`, or `omega` (evaluation frequency
    /// in rad/s, replacing ω₋).
    pub name: String,
    pub values: AxisValues,
}

impl Axis {
    pub fn lin(name: &str, min: f64, max: f64, points: usize) -> Self {
        Axis {
            name: name.into(),
            values: AxisValues::Range { min, max, points, scale: AxisScale::Lin },
        }
    }

    pub fn list(name: &str, values: &[f64]) -> Self {
        Axis { name: name.into(), values: AxisValues::List(values.to_vec()) }
    }

    pub fn points(&self) -> Vec<f64> {
        match &self.values {
            AxisValues::List(v) => v.clone(),
            AxisValues::Range { min, max, points, scale } => {
                let n = *points;
                (0..n)
                    .map(|i| {
                        let t = i as f64 / (n - 1) as f64;
                        match scale {
                            AxisScale::Lin => min + (max - min) * t,
                            AxisScale::Log => (min.ln() + (max.ln() - min.ln()) * t).exp(),
                        }
                    })
                    .collect()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let mut probe = SystemConfig::reference();
        if self.name != "omega" && probe.set(&self.name, 1.0).is_err() {
            return Err(Error::config("axis", format!("unknown axis `{}`", self.name)));
        }
        match &self.values {
            AxisValues::List(v) => {
                if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::config("axis", format!("`{}` needs finite values", self.name)));
                }
            }
            AxisValues::Range { min, max, points, scale } => {
                if *points < 2 || !min.is_finite() || !max.is_finite() {
                    return Err(Error::config(
                        "axis",
                        format!("`{}` needs finite bounds and at least 2 points", self.name),
                    ));
                }
                if *scale == AxisScale::Log && !(*min > 0.0 && *max > 0.0) {
                    return Err(Error::config("axis", format!("log axis `{}` needs positive bounds", self.name)));
                }
            }
        }
        Ok(())
    }
}

/// `name=min:max:points[:log]` or `name=v1,v2,...`.
impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config("axis", format!("expected name=min:max:points[:log] or name=v1,v2,..., got `{s}`"));
        let (name, rest) = s.split_once('=').ok_or_else(bad)?;
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let values = if rest.contains(':') {
            let parts: Vec<&str> = rest.split(':').collect();
            if !(parts.len() == 3 || (parts.len() == 4 && matches!(parts[3], "log" | "lin"))) {
                return Err(bad());
            }
            AxisValues::Range {
                min: num(parts[0])?,
                max: num(parts[1])?,
                points: parts[2].trim().parse().map_err(|_| bad())?,
                scale: if parts.get(3) == Some(&"log") { AxisScale::Log } else { AxisScale::Lin },
            }
        } else {
            AxisValues::List(rest.split(',').map(num).collect::<Result<_>>()?)
        };
        let axis = Axis { name: name.trim().to_string(), values };
        axis.validate()?;
        Ok(axis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Output {
    StableFlag,
    SOut,
    SOpt,
    Percent,
    OmegaMinus,
    #[value(name = "t_c", alias = "tc")]
    Tc,
}

impl Output {
    fn column(&self) -> &'static str {
        match self {
            Output::StableFlag => "stable",
            Output::SOut => "s_out",
            Output::SOpt => "s_opt",
            Output::Percent => "percent",
            Output::OmegaMinus => "omega_minus_rad_s",
            Output::Tc => "t_c_k",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub fixed: SystemConfig,
    pub outputs: Vec<Output>,
    pub mode: SteadyMode,
    pub noise: NoiseKind,
    pub branch: BranchStrategy,
    pub eval: EvalFrequency,
    /// Bracket for T_c (K).
    pub tc_range: (f64, f64),
}

impl SweepSpec {
    pub fn new(axis1: Axis, fixed: SystemConfig, outputs: Vec<Output>) -> Self {
        SweepSpec {
            axis1,
            axis2: None,
            fixed,
            outputs,
            mode: SteadyMode::Approx,
            noise: NoiseKind::Exact,
            branch: BranchStrategy::Lowest,
            eval: EvalFrequency::Peak,
            tc_range: (1e-5, 1.0),
        }
    }

    /// True when an output needs the evaluation frequency, which then gets
    /// its own `omega_eval_rad_s` column.
    fn spectral(&self) -> bool {
        self.outputs.iter().any(|o| matches!(o, Output::SOut | Output::SOpt | Output::Percent))
    }

    fn meta_columns(&self) -> Vec<&'static str> {
        let mut c = vec!["branches", "intensity", "branch_stable"];
        if self.spectral() {
            c.push("omega_eval_rad_s");
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.axis1.validate()?;
        if let Some(a) = &self.axis2 {
            a.validate()?;
        }
        if self.outputs.is_empty() {
            return Err(Error::config("outputs", "at least one output is required"));
        }
        self.fixed.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Value(f64),
    Error(&'static str),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Value(v) if v.is_finite() => write!(f, "{v}"),
            Cell::Value(_) => f.write_str("ERR_NUMERICAL"),
            Cell::Error(code) => f.write_str(code),
        }
    }
}

impl Cell {
    pub fn value(&self) -> Option<f64> {
        match self {
            Cell::Value(v) if v.is_finite() => Some(*v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Appends another table with identical columns.
    fn extend(&mut self, other: Table) {
        debug_assert_eq!(self.columns, other.columns);
        self.rows.extend(other.rows);
    }
}

fn apply(cfg: &mut SystemConfig, omega: &mut Option<f64>, name: &str, v: f64) -> Result<()> {
    if name == "omega" {
        *omega = Some(v);
        Ok(())
    } else {
        cfg.set(name, v)
    }
}

fn point_config(spec: &SweepSpec, v1: f64, v2: Option<f64>) -> Result<(SystemConfig, Option<f64>)> {
    let mut cfg = spec.fixed;
    let mut omega = None;
    // Detuning is relative to ω_m, so it is applied after any ω_m change.
    let mut pairs = vec![(spec.axis1.name.as_str(), v1)];
    if let (Some(a), Some(v)) = (&spec.axis2, v2) {
        pairs.push((a.name.as_str(), v));
    }
    pairs.sort_by_key(|(n, _)| *n == "detuning_over_omega_m");
    for (n, v) in pairs {
        apply(&mut cfg, &mut omega, n, v)?;
    }
    cfg.validate()?;
    Ok((cfg, omega))
}

fn code(e: &Error) -> Cell {
    Cell::Error(e.table_code())
}

fn evaluate_point(
    spec: &SweepSpec,
    cfg: &SystemConfig,
    omega_axis: Option<f64>,
    branches: &Result<BranchSet>,
    chosen: Option<usize>,
) -> Vec<Cell> {
    let mut cells = Vec::new();
    let set = match branches {
        Ok(b) => b,
        Err(e) => {
            let c = code(e);
            cells.push(Cell::Value(0.0));
            cells.extend(vec![c; spec.meta_columns().len() - 1]);
            cells.extend(spec.outputs.iter().map(|o| if *o == Output::StableFlag { Cell::Value(0.0) } else { c }));
            return cells;
        }
    };
    let p = match derive(cfg) {
        Ok(p) => p,
        Err(e) => {
            let c = code(&e);
            return vec![c; spec.meta_columns().len() + spec.outputs.len()];
        }
    };
    let s = set.states[chosen.unwrap_or(0)];
    let reports: Vec<_> = set.states.iter().map(|st| routh_hurwitz(st, &p)).collect();
    let point_stable = reports.iter().any(|r| r.rh_stable);
    let branch_stable = reports[chosen.unwrap_or(0)].rh_stable;
    let noise = NoiseModel::new(spec.noise, cfg.temperature);
    let omega_eval = match omega_axis {
        Some(w) => Ok(w),
        None if spec.spectral() => eval_frequency(&s, &p, spec.eval),
        None => Ok(f64::NAN),
    };
    cells.push(Cell::Value(set.states.len() as f64));
    cells.push(Cell::Value(s.intensity));
    cells.push(Cell::Value(if branch_stable { 1.0 } else { 0.0 }));
    if spec.spectral() {
        cells.push(match &omega_eval {
            Ok(w) => Cell::Value(*w),
            Err(e) => code(e),
        });
    }
    for o in &spec.outputs {
        let cell = match o {
            Output::StableFlag => Cell::Value(if point_stable { 1.0 } else { 0.0 }),
            Output::OmegaMinus => match peak_frequencies(&s, &p) {
                Ok(pf) => Cell::Value(pf.omega_minus),
                Err(e) => code(&e),
            },
            Output::SOut => match &omega_eval {
                Ok(w) => Cell::Value(s_out(*w, &s, &p, &noise)),
                Err(e) => code(e),
            },
            Output::SOpt => match &omega_eval {
                Ok(w) => Cell::Value(s_opt(*w, &s, &p, &noise).value),
                Err(e) => code(e),
            },
            Output::Percent => match &omega_eval {
                Ok(w) => Cell::Value(squeezing_percent(s_opt(*w, &s, &p, &noise).value)),
                Err(e) => code(e),
            },
            Output::Tc => match critical_temperature(cfg, spec.mode, spec.noise, spec.eval, spec.tc_range) {
                Ok(t) => Cell::Value(t),
                Err(e) => code(&e),
            },
        };
        cells.push(cell);
    }
    cells
}

/// Evaluates the Cartesian grid. Branch sets are solved independently per
/// point; with the continuity strategy the branch is then chosen in a
/// sequential pass along axis 1 for each axis-2 value, so results do not
/// depend on evaluation order or thread count. Failed points carry error
/// codes instead of values.
pub fn run_sweep(spec: &SweepSpec) -> Result<Table> {
    spec.validate()?;
    let a1 = spec.axis1.points();
    let a2: Vec<Option<f64>> = match &spec.axis2 {
        Some(a) => a.points().into_iter().map(Some).collect(),
        None => vec![None],
    };
    let grid: Vec<(f64, Option<f64>)> = a2
        .iter()
        .flat_map(|&v2| a1.iter().map(move |&v1| (v1, v2)))
        .collect();

    let solved: Vec<(Result<(SystemConfig, Option<f64>)>, Result<BranchSet>)> = grid
        .par_iter()
        .map(|&(v1, v2)| {
            let pc = point_config(spec, v1, v2);
            let set = match &pc {
                Ok((cfg, _)) => derive(cfg).and_then(|p| steady_states(&p, spec.mode)),
                Err(e) => Err(Error::config("axis", e.to_string())),
            };
            (pc, set)
        })
        .collect();

    let mut chosen: Vec<Option<usize>> = vec![None; grid.len()];
    for row in 0..a2.len() {
        let mut prev: Option<f64> = None;
        for col in 0..a1.len() {
            let idx = row * a1.len() + col;
            if let Ok(set) = &solved[idx].1 {
                let strategy = match (spec.branch, prev) {
                    (BranchStrategy::Continuity, Some(i)) => BranchSelect::Continuity { previous_intensity: i },
                    _ => BranchSelect::LowestIntensity,
                };
                if let Ok(s) = select_branch(set, strategy) {
                    chosen[idx] = set.states.iter().position(|x| x.intensity == s.intensity);
                    prev = Some(s.intensity);
                }
            }
        }
    }

    let mut columns = vec![spec.axis1.name.clone()];
    if let Some(a) = &spec.axis2 {
        columns.push(a.name.clone());
    }
    columns.extend(spec.meta_columns().into_iter().map(String::from));
    columns.extend(spec.outputs.iter().map(|o| o.column().to_string()));

    let rows: Vec<Vec<Cell>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (v1, v2) = grid[idx];
            let mut row = vec![Cell::Value(v1)];
            if let Some(v) = v2 {
                row.push(Cell::Value(v));
            }
            match &solved[idx].0 {
                Ok((cfg, omega)) => row.extend(evaluate_point(spec, cfg, *omega, &solved[idx].1, chosen[idx])),
                Err(e) => row.extend(vec![code(e); spec.meta_columns().len() + spec.outputs.len()]),
            }
            row
        })
        .collect();
    Ok(Table { columns, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    Fig2a,
    Fig2b,
    Fig3,
    Fig4,
    Fig5a,
    Fig5b,
    Fig6,
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FigureId::Fig2a => "fig2a",
            FigureId::Fig2b => "fig2b",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5a => "fig5a",
            FigureId::Fig5b => "fig5b",
            FigureId::Fig6 => "fig6",
        };
        f.write_str(s)
    }
}

/// The quadratic-to-linear coupling ratios compared in every figure.
pub const QOC_RATIOS: [f64; 5] = [0.0, -1e-4, -1e-3, -5e-3, -1e-2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RecipeKind {
    /// One sweep per ratio, concatenated with a leading `qoc_ratio` column.
    Sweep(SweepSpec),
    /// One spectrum per ratio on its own refined default grid.
    Spectra { kind: SpectrumKind, mode: SteadyMode, noise: NoiseKind },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureRecipe {
    pub id: FigureId,
    pub description: String,
    pub base: SystemConfig,
    pub ratios: Vec<f64>,
    pub kind: RecipeKind,
    /// Grid ranges chosen to cover the published panels, which state no
    /// numeric ranges.
    pub ranges_are_estimates: bool,
}

impl FigureRecipe {
    /// Canned recipes: Δ = ω_m, T = 1 mK, P = 100 µW unless swept.
    pub fn new(id: FigureId) -> Self {
        let base = SystemConfig::reference();
        let stability = |p_max: f64| {
            let mut s = SweepSpec::new(
                Axis::lin("detuning_over_omega_m", -2.0, 2.0, 201),
                base,
                vec![Output::StableFlag],
            );
            s.axis2 = Some(Axis::lin("power_w", 0.0, p_max, 201));
            s
        };
        let temperature = |power: f64| {
            let mut s = SweepSpec::new(
                Axis::lin("temperature_k", 0.0, 0.15, 151),
                base.with_power(power),
                vec![Output::StableFlag, Output::OmegaMinus, Output::SOpt, Output::Percent],
            );
            s.mode = SteadyMode::Exact;
            s
        };
        let (description, ratios, kind, estimates) = match id {
            FigureId::Fig2a => (
                "stability map over detuning and pump power, mW scale",
                vec![0.0, -1e-4],
                RecipeKind::Sweep(stability(30e-3)),
                true,
            ),
            FigureId::Fig2b => (
                "stability map over detuning and pump power, sub-mW scale",
                vec![-1e-3, -5e-3, -1e-2],
                RecipeKind::Sweep(stability(1.5e-3)),
                true,
            ),
            FigureId::Fig3 => (
                "output-field spectrum S_out versus frequency",
                QOC_RATIOS.to_vec(),
                RecipeKind::Spectra { kind: SpectrumKind::SOut, mode: SteadyMode::Exact, noise: NoiseKind::Exact },
                false,
            ),
            FigureId::Fig4 => (
                "optimal quadrature squeezing spectrum S_opt versus frequency",
                QOC_RATIOS.to_vec(),
                RecipeKind::Spectra { kind: SpectrumKind::SOpt, mode: SteadyMode::Exact, noise: NoiseKind::Exact },
                false,
            ),
            FigureId::Fig5a => (
                "squeezing at the lower resonance versus bath temperature, 100 uW",
                QOC_RATIOS.to_vec(),
                RecipeKind::Sweep(temperature(100e-6)),
                true,
            ),
            FigureId::Fig5b => (
                "squeezing at the lower resonance versus bath temperature, 140 uW",
                QOC_RATIOS.to_vec(),
                RecipeKind::Sweep(temperature(140e-6)),
                true,
            ),
            FigureId::Fig6 => {
                let mut s = SweepSpec::new(
                    Axis::lin("power_w", 10e-6, 300e-6, 30),
                    base,
                    vec![Output::StableFlag, Output::OmegaMinus, Output::SOpt, Output::Percent],
                );
                s.mode = SteadyMode::Exact;
                (
                    "squeezing at the lower resonance versus pump power",
                    QOC_RATIOS.to_vec(),
                    RecipeKind::Sweep(s),
                    true,
                )
            }
        };
        FigureRecipe {
            id,
            description: description.into(),
            base,
            ratios,
            kind,
            ranges_are_estimates: estimates,
        }
    }

    /// Applies CLI-level choices to the recipe.
    pub fn with_options(mut self, opts: &RunOptions) -> Self {
        if let Some(cfg) = opts.base {
            self.base = cfg;
        }
        let base = self.base;
        match &mut self.kind {
            RecipeKind::Sweep(s) => {
                // Keep the recipe's own swept/fixed power and temperature.
                let (pw, t) = (s.fixed.pump_power, s.fixed.temperature);
                s.fixed = base;
                if opts.base.is_none() {
                    s.fixed.pump_power = pw;
                    s.fixed.temperature = t;
                }
                if let Some(m) = opts.mode {
                    s.mode = m;
                }
                if let Some(n) = opts.noise {
                    s.noise = n;
                }
                if let Some(b) = opts.branch {
                    s.branch = b;
                }
                if let Some(e) = opts.eval {
                    s.eval = e;
                }
            }
            RecipeKind::Spectra { mode, noise, .. } => {
                if let Some(m) = opts.mode {
                    *mode = m;
                }
                if let Some(n) = opts.noise {
                    *noise = n;
                }
            }
        }
        self
    }
}

/// Overrides shared by the CLI subcommands.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    pub base: Option<SystemConfig>,
    pub mode: Option<SteadyMode>,
    pub noise: Option<NoiseKind>,
    pub branch: Option<BranchStrategy>,
    pub eval: Option<EvalFrequency>,
}

/// Evaluates a recipe into one long-format table with a leading
/// `qoc_ratio` column.
pub fn figure_table(recipe: &FigureRecipe) -> Result<Table> {
    let mut table: Option<Table> = None;
    for &r in &recipe.ratios {
        let t = match &recipe.kind {
            RecipeKind::Sweep(spec) => {
                let mut spec = spec.clone();
                spec.fixed = spec.fixed.with_qoc_ratio(r);
                run_sweep(&spec)?
            }
            RecipeKind::Spectra { kind, mode, noise } => {
                let cfg = recipe.base.with_qoc_ratio(r);
                let p = derive(&cfg)?;
                let s = select_branch(&steady_states(&p, *mode)?, BranchSelect::LowestIntensity)?;
                let nm = NoiseModel::new(*noise, cfg.temperature);
                let series = SpectrumSeries::compute(*kind, default_grid(&s, &p), &s, &p, &nm, None);
                spectrum_table(&series)
            }
        };
        let mut t = t;
        t.columns.insert(0, "qoc_ratio".into());
        for row in &mut t.rows {
            row.insert(0, Cell::Value(r));
        }
        match &mut table {
            None => table = Some(t),
            Some(acc) => acc.extend(t),
        }
    }
    table.ok_or_else(|| Error::config("ratios", "figure recipe has no ratios"))
}

fn spectrum_table(series: &SpectrumSeries) -> Table {
    let mut columns = vec!["omega_rad_s".to_string(), "omega_over_omega_m".into(), "value".into()];
    if series.phi_opt.is_some() {
        columns.push("phi_opt_rad".into());
    }
    let rows = series
        .omega_grid
        .iter()
        .zip(&series.values)
        .enumerate()
        .map(|(i, (&w, &v))| {
            let mut row = vec![Cell::Value(w), Cell::Value(w / series.omega_m), Cell::Value(v)];
            if let Some(ph) = &series.phi_opt {
                row.push(Cell::Value(ph[i]));
            }
            row
        })
        .collect();
    Table { columns, rows }
}

/// `git describe` of the working tree, or "unknown" outside a repository.
pub fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureMetadata {
    pub figure: String,
    pub description: String,
    pub code_version: String,
    pub git_describe: String,
    pub config_hash: String,
    pub config: SystemConfig,
    pub qoc_ratios: Vec<f64>,
    pub recipe: RecipeKind,
    pub branch_strategy: String,
    pub noise_model: String,
    pub steady_mode: String,
    pub eval_frequency: String,
    pub ranges_are_estimates: bool,
    pub correlator_normalization_factor: f64,
    pub rows: usize,
}

/// Writes `<id>.csv` and `<id>.json` into `dir`.
pub fn reproduce(recipe: &FigureRecipe, dir: &Path) -> Result<Vec<PathBuf>> {
    let table = figure_table(recipe)?;
    std::fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{}.csv", recipe.id));
    std::fs::write(&csv, table.to_csv())?;
    let (branch, noise, mode, eval) = match &recipe.kind {
        RecipeKind::Sweep(s) => (s.branch.to_string(), s.noise.to_string(), s.mode.to_string(), s.eval.to_string()),
        RecipeKind::Spectra { noise, mode, .. } => {
            ("lowest".into(), noise.to_string(), mode.to_string(), "n/a".into())
        }
    };
    let meta = FigureMetadata {
        figure: recipe.id.to_string(),
        description: recipe.description.clone(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        git_describe: git_describe(),
        config_hash: recipe.base.fingerprint(),
        config: recipe.base,
        qoc_ratios: recipe.ratios.clone(),
        recipe: recipe.kind.clone(),
        branch_strategy: branch,
        noise_model: noise,
        steady_mode: mode,
        eval_frequency: eval,
        ranges_are_estimates: recipe.ranges_are_estimates,
        correlator_normalization_factor: 1.0,
        rows: table.rows.len(),
    };
    let json = dir.join(format!("{}.json", recipe.id));
    std::fs::write(&json, serde_json::to_string_pretty(&meta)?)?;
    Ok(vec![csv, json])
}

/// Pretty-prints a table as JSON objects keyed by column name.
pub fn table_to_json(table: &Table) -> Result<String> {
    let rows: Vec<serde_json::Map<String, serde_json::Value>> = table
        .rows
        .iter()
        .map(|row| {
            table
                .columns
                .iter()
                .zip(row)
                .map(|(c, cell)| {
                    let v = match cell {
                        Cell::Value(x) if x.is_finite() => serde_json::json!(x),
                        Cell::Value(_) => serde_json::json!("ERR_NUMERICAL"),
                        Cell::Error(code) => serde_json::json!(code),
                    };
                    (c.clone(), v)
                })
                .collect()
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&rows)?;
    let _ = writeln!(s);
    Ok(s)
}
