use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use squeezelab::oracle::{simulate, validate_s_out, Integrator, TrajectoryConfig};
use squeezelab::params::{derive, DerivedParams, SystemConfig};
use squeezelab::spectra::{
    critical_temperature, default_grid, squeeze_point, uniform_grid, EvalFrequency, NoiseKind,
    NoiseModel, SpectrumKind, SpectrumSeries,
};
use squeezelab::stability::routh_hurwitz;
use squeezelab::steady::{select_branch, steady_states, BranchSelect, BranchStrategy, SteadyMode, SteadyState};
use squeezelab::sweep::{
    reproduce, run_sweep, table_to_json, Axis, FigureId, FigureRecipe, Output, RunOptions, SweepSpec, Table,
};
use squeezelab::{Error, Result};

/// Steady states, stability, output spectra and squeezing of a cavity with
/// linear and quadratic optomechanical coupling.
#[derive(Debug, Parser)]
#[command(name = "squeezelab", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// `key = value` configuration file; the reference device is used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; results go to stdout when absent (except `reproduce`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads for grid evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    noise: Option<NoiseKind>,
    #[arg(long, global = true, value_enum)]
    branch: Option<BranchStrategy>,
    #[arg(long, global = true, value_enum)]
    mode: Option<SteadyMode>,
    /// Frequency at which squeezing is reported.
    #[arg(long = "eval-at", global = true, value_enum)]
    eval_at: Option<EvalFrequency>,
    /// Override one config key, e.g. `--set power_w=1.4e-4` (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    SOut,
    SPhi,
    SOpt,
    SOptApprox,
}

impl From<Kind> for SpectrumKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::SOut => SpectrumKind::SOut,
            Kind::SPhi => SpectrumKind::SPhi,
            Kind::SOpt => SpectrumKind::SOpt,
            Kind::SOptApprox => SpectrumKind::SOptApprox,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Derived couplings, drive amplitude and thermal occupation.
    Derive,
    /// All physical steady-state branches.
    Steady,
    /// Stability flag over detuning (Δ/ω_m) and pump power (W).
    StabilityMap {
        #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
        delta_min: f64,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        delta_max: f64,
        #[arg(long, default_value_t = 201)]
        delta_points: usize,
        #[arg(long, default_value_t = 0.0)]
        power_min: f64,
        #[arg(long, default_value_t = 30e-3)]
        power_max: f64,
        #[arg(long, default_value_t = 201)]
        power_points: usize,
    },
    /// A spectrum on the refined default grid or a uniform grid.
    Spectrum {
        #[arg(long, value_enum, default_value_t = Kind::SOpt)]
        kind: Kind,
        /// Homodyne phase (rad) for `s-phi`.
        #[arg(long, allow_negative_numbers = true)]
        phi: Option<f64>,
        /// Uniform grid bounds in rad/s; both required together.
        #[arg(long, allow_negative_numbers = true, requires = "omega_max")]
        omega_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true, requires = "omega_min")]
        omega_max: Option<f64>,
        #[arg(long, default_value_t = 4001)]
        points: usize,
    },
    /// Optimal squeezing at the lower resonance.
    Squeeze,
    /// Cartesian parameter sweep.
    Sweep {
        /// `name=min:max:points[:log]` or `name=v1,v2,...`.
        #[arg(long, allow_hyphen_values = true)]
        axis: Axis,
        #[arg(long, allow_hyphen_values = true)]
        axis2: Option<Axis>,
        #[arg(long = "output", value_enum, value_delimiter = ',', default_values_t = [Output::StableFlag, Output::Percent])]
        outputs: Vec<Output>,
        /// T_c search bracket (K).
        #[arg(long, default_value_t = 1e-5)]
        tc_min: f64,
        #[arg(long, default_value_t = 1.0)]
        tc_max: f64,
    },
    /// Writes `<fig>.csv` and `<fig>.json` (default directory `figures`).
    Reproduce {
        #[arg(value_enum)]
        figure: FigureId,
    },
    /// Compares a stochastic simulation with the analytic output spectrum.
    Validate {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long)]
        ensemble: Option<usize>,
        /// Recorded time per member (s).
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        segments: Option<usize>,
        #[arg(long, value_enum)]
        integrator: Option<Integrator>,
        /// Also write the first member's trajectory as CSV.
        #[arg(long)]
        dump_trajectory: Option<PathBuf>,
    },
    /// Temperature where squeezing at the lower resonance disappears.
    Tc {
        #[arg(long, default_value_t = 1e-4)]
        t_min: f64,
        #[arg(long, default_value_t = 0.3)]
        t_max: f64,
    },
}

fn load_config(g: &Global) -> Result<SystemConfig> {
    let mut cfg = match &g.config {
        Some(path) => SystemConfig::load(path)?,
        None => SystemConfig::reference(),
    };
    for kv in &g.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config { field: "set".into(), reason: format!("expected KEY=VALUE, got `{kv}`") })?;
        let v: f64 = v.trim().parse().map_err(|_| Error::Config {
            field: k.trim().into(),
            reason: format!("`{}` is not a number", v.trim()),
        })?;
        cfg.set(k.trim(), v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Flattens nested JSON into `(dotted.key, scalar)` pairs.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::String(s) => out.push((prefix.into(), s.clone())),
        Value::Null => out.push((prefix.into(), String::new())),
        other => out.push((prefix.into(), other.to_string())),
    }
}

fn key_value_csv(v: &Value) -> String {
    let mut pairs = Vec::new();
    flatten("", v, &mut pairs);
    let mut s = String::from("key,value\n");
    for (k, v) in pairs {
        s.push_str(&format!("{k},{v}\n"));
    }
    s
}

fn records_csv(records: &[Value]) -> String {
    let rows: Vec<Vec<(String, String)>> = records
        .iter()
        .map(|r| {
            let mut p = Vec::new();
            flatten("", r, &mut p);
            p
        })
        .collect();
    let Some(first) = rows.first() else {
        return String::new();
    };
    let mut s = first.iter().map(|(k, _)| k.as_str()).collect::<Vec<_>>().join(",");
    s.push('\n');
    for row in &rows {
        s.push_str(&row.iter().map(|(_, v)| v.as_str()).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

struct Emitter<'a> {
    out: Option<&'a Path>,
    format: Format,
}

impl Emitter<'_> {
    fn write(&self, name: &str, csv: impl FnOnce() -> String, json: impl FnOnce() -> Result<String>) -> Result<()> {
        let (ext, body) = match self.format {
            Format::Csv => ("csv", csv()),
            Format::Json => ("json", json()?),
        };
        match self.out {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let path = dir.join(format!("{name}.{ext}"));
                std::fs::write(&path, body)?;
                eprintln!("wrote {}", path.display());
            }
            None => print!("{body}"),
        }
        Ok(())
    }

    fn value<T: Serialize>(&self, name: &str, v: &T) -> Result<()> {
        let json = serde_json::to_value(v)?;
        self.write(name, || key_value_csv(&json), || Ok(serde_json::to_string_pretty(&json)? + "\n"))
    }

    fn table(&self, name: &str, t: &Table) -> Result<()> {
        self.write(name, || t.to_csv(), || table_to_json(t))
    }
}

fn operating_point(p: &DerivedParams, g: &Global) -> Result<SteadyState> {
    let set = steady_states(p, g.mode.unwrap_or(SteadyMode::Exact))?;
    select_branch(&set, BranchSelect::LowestIntensity)
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config { field: "threads".into(), reason: e.to_string() })?;
    }
    let cfg = load_config(g)?;
    let emit = Emitter { out: g.out.as_deref(), format: g.format };
    let mode = g.mode.unwrap_or(SteadyMode::Exact);
    let noise_kind = g.noise.unwrap_or(NoiseKind::Exact);
    let eval = g.eval_at.unwrap_or(EvalFrequency::Peak);

    match &cli.command {
        Command::Derive => emit.value("derive", &derive(&cfg)?),
        Command::Steady => {
            let p = derive(&cfg)?;
            let set = steady_states(&p, mode)?;
            let records: Vec<Value> = set
                .states
                .iter()
                .map(|s| {
                    let mut v = serde_json::to_value(s)?;
                    v["rh_stable"] = Value::Bool(routh_hurwitz(s, &p).rh_stable);
                    Ok(v)
                })
                .collect::<Result<_>>()?;
            emit.write(
                "steady",
                || records_csv(&records),
                || Ok(serde_json::to_string_pretty(&set)? + "\n"),
            )
        }
        Command::StabilityMap { delta_min, delta_max, delta_points, power_min, power_max, power_points } => {
            let mut spec = SweepSpec::new(
                Axis::lin("detuning_over_omega_m", *delta_min, *delta_max, *delta_points),
                cfg,
                vec![Output::StableFlag],
            );
            spec.axis2 = Some(Axis::lin("power_w", *power_min, *power_max, *power_points));
            spec.mode = g.mode.unwrap_or(SteadyMode::Approx);
            spec.branch = g.branch.unwrap_or(BranchStrategy::Lowest);
            emit.table("stability_map", &run_sweep(&spec)?)
        }
        Command::Spectrum { kind, phi, omega_min, omega_max, points } => {
            let p = derive(&cfg)?;
            let s = operating_point(&p, g)?;
            let grid = match (omega_min, omega_max) {
                (Some(a), Some(b)) => {
                    if *points < 2 || !(b > a) {
                        return Err(Error::Config { field: "omega".into(), reason: "need omega_min < omega_max and ≥ 2 points".into() });
                    }
                    uniform_grid(*a, *b, *points)
                }
                _ => default_grid(&s, &p),
            };
            let noise = NoiseModel::new(noise_kind, cfg.temperature);
            let series = SpectrumSeries::compute((*kind).into(), grid, &s, &p, &noise, *phi);
            emit.write("spectrum", || series.to_csv(), || Ok(serde_json::to_string_pretty(&series)? + "\n"))
        }
        Command::Squeeze => {
            let p = derive(&cfg)?;
            let s = operating_point(&p, g)?;
            let noise = NoiseModel::new(noise_kind, cfg.temperature);
            emit.value("squeeze", &squeeze_point(&s, &p, &noise, eval)?)
        }
        Command::Sweep { axis, axis2, outputs, tc_min, tc_max } => {
            let spec = SweepSpec {
                axis1: axis.clone(),
                axis2: axis2.clone(),
                fixed: cfg,
                outputs: outputs.clone(),
                mode,
                noise: noise_kind,
                branch: g.branch.unwrap_or(BranchStrategy::Lowest),
                eval,
                tc_range: (*tc_min, *tc_max),
            };
            emit.table("sweep", &run_sweep(&spec)?)
        }
        Command::Reproduce { figure } => {
            let opts = RunOptions {
                base: (g.config.is_some() || !g.set.is_empty()).then_some(cfg),
                mode: g.mode,
                noise: g.noise,
                branch: g.branch,
                eval: g.eval_at,
            };
            let recipe = FigureRecipe::new(*figure).with_options(&opts);
            let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("figures"));
            for path in reproduce(&recipe, &dir)? {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Validate { seed, ensemble, duration, segments, integrator, dump_trajectory } => {
            let p = derive(&cfg)?;
            let s = operating_point(&p, g)?;
            let mut tc = TrajectoryConfig::for_point(&s, &p, *seed)?;
            if let Some(e) = ensemble {
                tc.ensemble = *e;
            }
            if let Some(d) = duration {
                tc.duration = *d;
            }
            if let Some(n) = segments {
                tc.segments = *n;
            }
            if let Some(i) = integrator {
                tc.integrator = *i;
            }
            if let Some(path) = dump_trajectory {
                std::fs::write(path, simulate(&s, &p, &tc, 0)?.to_csv())?;
            }
            emit.value("validate", &validate_s_out(&s, &p, &tc)?)
        }
        Command::Tc { t_min, t_max } => {
            let t_c = critical_temperature(&cfg, mode, noise_kind, eval, (*t_min, *t_max))?;
            #[derive(Serialize)]
            struct Report {
                t_c_k: f64,
                qoc_ratio: f64,
                power_w: f64,
                eval_at: String,
                noise: String,
            }
            emit.value(
                "tc",
                &Report {
                    t_c_k: t_c,
                    qoc_ratio: cfg.qoc_ratio,
                    power_w: cfg.pump_power,
                    eval_at: eval.to_string(),
                    noise: noise_kind.to_string(),
                },
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
