use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use optonoise_core::check::run_checks;
use optonoise_core::config::{AxisName, ConfigMap, SweepConfig};
use optonoise_core::steady_state::{hysteresis_sweep, SweepDirection};
use optonoise_core::sweep::{
    emit, emit_table, fig2_preset, fig3_preset, run_fig3, run_sweep, Cell, Fig3Options, RegridSpec, RASTER_HEADER,
};
use optonoise_core::Error;

#[derive(Parser)]
#[command(name = "optonoise", version, about = "Optomechanical steady states, cooling and entanglement under laser phase noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// All branches at a single operating point.
    Steady(Settings),
    /// Grid sweep over up to two axes.
    Sweep(Settings),
    /// Power hysteresis trace (up then down) with the branch-end points.
    Fig1(Settings),
    /// Phase-noise strength and η versus detuning for two linewidths.
    Fig2(Settings),
    /// Log-negativity rasters over (η, Δ/ω_m) for several linewidths.
    Fig3 {
        #[command(flatten)]
        settings: Settings,
        /// Linewidths in Hz, one raster each.
        #[arg(long, value_delimiter = ',', default_value = "0,10,100")]
        linewidths: Vec<f64>,
        /// Raster bins along η.
        #[arg(long, default_value_t = 60)]
        eta_bins: usize,
        /// Raster bins along Δ/ω_m.
        #[arg(long, default_value_t = 60)]
        detuning_bins: usize,
        /// Extra powers sampled towards each branch end, per detuning.
        #[arg(long, default_value_t = 12)]
        fold_samples: usize,
        /// Also write the underlying sweep records here.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Run the built-in oracle checks.
    Check,
}

/// Configuration file plus per-key overrides; flags win over the file.
#[derive(Args)]
struct Settings {
    /// key = value configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Cavity length, m.
    #[arg(long)]
    cavity_length: Option<String>,
    /// Mirror mass, kg.
    #[arg(long)]
    mass: Option<String>,
    #[arg(long)]
    mechanical_freq_hz: Option<String>,
    #[arg(long)]
    mechanical_damping_hz: Option<String>,
    #[arg(long)]
    cavity_decay_hz: Option<String>,
    /// Laser wavelength, m.
    #[arg(long)]
    wavelength: Option<String>,
    /// Input power, W.
    #[arg(long)]
    power: Option<String>,
    #[arg(long)]
    detuning_hz: Option<String>,
    /// Bath temperature, K.
    #[arg(long)]
    temperature: Option<String>,
    #[arg(long)]
    linewidth_hz: Option<String>,
    #[arg(long)]
    correlation_rate_hz: Option<String>,
    /// "name start stop count [linear|log]"
    #[arg(long)]
    axis1: Option<String>,
    #[arg(long)]
    axis2: Option<String>,
    /// all | lowest | continuity
    #[arg(long)]
    branch_policy: Option<String>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    /// Output path; standard output when omitted.
    #[arg(long, short)]
    output: Option<String>,
    #[arg(long)]
    workers: Option<String>,
}

impl Settings {
    fn flags(&self) -> [(&'static str, &Option<String>); 17] {
        [
            ("cavity_length", &self.cavity_length),
            ("mass", &self.mass),
            ("mechanical_freq_hz", &self.mechanical_freq_hz),
            ("mechanical_damping_hz", &self.mechanical_damping_hz),
            ("cavity_decay_hz", &self.cavity_decay_hz),
            ("wavelength", &self.wavelength),
            ("power", &self.power),
            ("detuning_hz", &self.detuning_hz),
            ("temperature", &self.temperature),
            ("linewidth_hz", &self.linewidth_hz),
            ("correlation_rate_hz", &self.correlation_rate_hz),
            ("axis1", &self.axis1),
            ("axis2", &self.axis2),
            ("branch_policy", &self.branch_policy),
            ("format", &self.format),
            ("output", &self.output),
            ("workers", &self.workers),
        ]
    }

    /// Preset, then file, then flags.
    fn resolve(&self, mut map: ConfigMap) -> Result<ConfigMap, Error> {
        if let Some(path) = &self.config {
            let file = ConfigMap::load(path)?;
            for key in optonoise_core::config::KEYS {
                if let Some(v) = file.get(key) {
                    map.set(key, v)?;
                }
            }
        }
        for (key, value) in self.flags() {
            if let Some(v) = value {
                map.set(key, v)?;
            }
        }
        Ok(map)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain { .. } => 1,
        Error::Io { .. } => 2,
        Error::Numerical { .. } | Error::Unstable { .. } => 3,
    }
}

fn steady(settings: &Settings) -> Result<(), Error> {
    let mut cfg = settings.resolve(ConfigMap::default())?.build()?;
    cfg.axes.clear();
    emit(&run_sweep(&cfg)?, cfg.format, cfg.output.as_deref())
}

fn sweep(settings: &Settings, preset: ConfigMap) -> Result<(), Error> {
    let cfg = settings.resolve(preset)?.build()?;
    emit(&run_sweep(&cfg)?, cfg.format, cfg.output.as_deref())
}

const FIG1_HEADER: &[&str] = &["direction", "power", "photon_number", "branch_index", "eta", "stable", "terminal"];

fn fig1(settings: &Settings) -> Result<(), Error> {
    let mut preset = ConfigMap::default();
    preset.set("detuning_hz", "30e6")?;
    // The trace does not involve phase noise.
    preset.set("correlation_rate_hz", "1e6")?;
    preset.set("axis1", "power 1e-3 0.3 300 linear")?;
    let cfg: SweepConfig = settings.resolve(preset)?.build()?;
    let axis = match cfg.axes.as_slice() {
        [a] if a.name == AxisName::Power => a,
        _ => return Err(Error::Config("fig1 needs exactly one axis, over power".into())),
    };
    let mut powers = axis.values();
    powers.sort_by(f64::total_cmp);
    let trace = hysteresis_sweep(&cfg.params, &powers)?;
    let rows: Vec<Vec<Cell>> = trace
        .points
        .iter()
        .map(|p| {
            let dir = match p.direction {
                SweepDirection::Up => "up",
                SweepDirection::Down => "down",
            };
            vec![
                Cell::Text(Some(dir.into())),
                Cell::Float(Some(p.power)),
                Cell::Float(Some(p.photons)),
                Cell::Int(Some(p.branch_index)),
                Cell::Float(Some(p.eta)),
                Cell::Bool(Some(p.stable)),
                Cell::Bool(Some(p.terminal)),
            ]
        })
        .collect();
    emit_table(FIG1_HEADER, &rows, cfg.format, cfg.output.as_deref())
}

fn fig3(settings: &Settings, opts: &Fig3Options, records: Option<&Path>) -> Result<(), Error> {
    let map = settings.resolve(fig3_preset())?;
    if !map.contains("temperature") {
        return Err(Error::Config("fig3 requires an explicit temperature".into()));
    }
    let cfg = map.build()?;
    let runs = run_fig3(&cfg, opts)?;
    let mut header = vec!["linewidth_hz"];
    header.extend_from_slice(RASTER_HEADER);
    let mut rows = Vec::new();
    let mut all = Vec::new();
    for (lw, recs, raster) in runs {
        for mut row in raster.rows() {
            row.insert(0, Cell::Float(Some(lw)));
            rows.push(row);
        }
        all.extend(recs);
    }
    if let Some(path) = records {
        emit(&all, cfg.format, Some(path))?;
    }
    emit_table(&header, &rows, cfg.format, cfg.output.as_deref())
}

fn check() -> Result<(), Error> {
    let outcomes = run_checks();
    for c in &outcomes {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    match outcomes.iter().filter(|c| !c.passed).count() {
        0 => Ok(()),
        n => Err(Error::Numerical {
            context: "check",
            detail: format!("{n} check(s) failed"),
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Steady(s) => steady(s),
        Command::Sweep(s) => sweep(s, ConfigMap::default()),
        Command::Fig1(s) => fig1(s),
        Command::Fig2(s) => sweep(s, fig2_preset()),
        Command::Fig3 {
            settings,
            linewidths,
            eta_bins,
            detuning_bins,
            fold_samples,
            records,
        } => {
            let opts = Fig3Options {
                linewidths_hz: linewidths.clone(),
                regrid: RegridSpec {
                    eta_bins: *eta_bins,
                    detuning_bins: *detuning_bins,
                    ..RegridSpec::default()
                },
                fold_samples: *fold_samples,
            };
            fig3(settings, &opts, records.as_deref())
        }
        Command::Check => check(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
