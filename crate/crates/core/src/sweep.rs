//! Parameter-grid sweeps, record emission and the figure presets.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{AxisName, BranchPolicy, ConfigMap, OutputFormat, SweepConfig};
use crate::error::{Error, Result};
use crate::noise::{phase_noise_spectrum, NoiseModel};
use crate::params::{derive, DerivedParams, SystemParams};
use crate::pipeline::analyze_branch;
use crate::steady_state::{fold_points, solve_branches, SteadyState};

const TWO_PI: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyOutputs {
    pub photon_number: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub displacement: f64,
    /// Δ/2π, Hz.
    pub effective_detuning_hz: f64,
    pub detuning_over_wm: f64,
    /// G/2π, Hz.
    pub coupling_hz: f64,
    pub eta: f64,
    pub stable: bool,
    /// Largest real part of the drift eigenvalues, s⁻¹.
    pub max_real_part: f64,
    pub tangent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryOutputs {
    /// N, s⁻¹.
    pub phase_noise: f64,
    pub noise_over_kappa: f64,
    /// Upper triangle of V: v11 v12 v13 v14 v22 v23 v24 v33 v34 v44.
    pub covariance: [f64; 10],
    pub phonons_raw: f64,
    pub phonons: f64,
    pub condition: f64,
    pub ill_conditioned: bool,
    pub phonons_limit_exact_noise: f64,
    pub phonons_limit_closed_noise: f64,
    pub phonons_limit_spectrum: f64,
    pub log_negativity: f64,
    pub nu_min: f64,
    pub sigma: f64,
}

/// One grid point and branch. Inputs are in configuration units.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub point_index: usize,
    pub cavity_length: f64,
    pub mass: f64,
    pub mechanical_freq_hz: f64,
    pub mechanical_damping_hz: f64,
    pub cavity_decay_hz: f64,
    pub wavelength: f64,
    pub power: f64,
    pub detuning_hz: f64,
    pub temperature: f64,
    pub linewidth_hz: f64,
    pub correlation_rate_hz: f64,
    pub branch_index: Option<usize>,
    pub branch_count: Option<usize>,
    pub steady: Option<SteadyOutputs>,
    /// S(ω_m), rad/s.
    pub spectrum_at_wm: f64,
    /// Absent for unstable branches and failed points.
    pub stationary: Option<StationaryOutputs>,
    pub error: Option<String>,
}

/// Column order of the CSV header and of every JSON object.
pub const HEADER: &[&str] = &[
    "point_index",
    "cavity_length",
    "mass",
    "mechanical_freq_hz",
    "mechanical_damping_hz",
    "cavity_decay_hz",
    "wavelength",
    "power",
    "detuning_hz",
    "temperature",
    "linewidth_hz",
    "correlation_rate_hz",
    "branch_index",
    "branch_count",
    "photon_number",
    "alpha_re",
    "alpha_im",
    "displacement",
    "effective_detuning_hz",
    "detuning_over_wm",
    "coupling_hz",
    "eta",
    "stable",
    "max_real_part",
    "tangent",
    "spectrum_at_wm",
    "phase_noise",
    "noise_over_kappa",
    "v11",
    "v12",
    "v13",
    "v14",
    "v22",
    "v23",
    "v24",
    "v33",
    "v34",
    "v44",
    "phonons_raw",
    "phonons",
    "condition",
    "ill_conditioned",
    "phonons_limit_exact_noise",
    "phonons_limit_closed_noise",
    "phonons_limit_spectrum",
    "log_negativity",
    "nu_min",
    "sigma",
    "error",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(Option<f64>),
    Int(Option<usize>),
    Bool(Option<bool>),
    Text(Option<String>),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(Some(x)) => format!("{x:.16e}"),
            Cell::Int(Some(i)) => i.to_string(),
            Cell::Bool(Some(b)) => b.to_string(),
            Cell::Text(Some(s)) => s.clone(),
            _ => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Float(Some(x)) if x.is_finite() => format!("{x:.16e}"),
            Cell::Int(Some(i)) => i.to_string(),
            Cell::Bool(Some(b)) => b.to_string(),
            Cell::Text(Some(s)) => serde_json::Value::from(s.as_str()).to_string(),
            _ => "null".to_string(),
        }
    }
}

impl SweepRecord {
    /// Values in [`HEADER`] order.
    pub fn cells(&self) -> Vec<Cell> {
        let f = |x: f64| Cell::Float(Some(x));
        let s = self.steady.as_ref();
        let st = self.stationary.as_ref();
        let sf = |g: fn(&SteadyOutputs) -> f64| Cell::Float(s.map(g));
        let tf = |g: fn(&StationaryOutputs) -> f64| Cell::Float(st.map(g));
        let mut out = vec![
            Cell::Int(Some(self.point_index)),
            f(self.cavity_length),
            f(self.mass),
            f(self.mechanical_freq_hz),
            f(self.mechanical_damping_hz),
            f(self.cavity_decay_hz),
            f(self.wavelength),
            f(self.power),
            f(self.detuning_hz),
            f(self.temperature),
            f(self.linewidth_hz),
            f(self.correlation_rate_hz),
            Cell::Int(self.branch_index),
            Cell::Int(self.branch_count),
            sf(|x| x.photon_number),
            sf(|x| x.alpha_re),
            sf(|x| x.alpha_im),
            sf(|x| x.displacement),
            sf(|x| x.effective_detuning_hz),
            sf(|x| x.detuning_over_wm),
            sf(|x| x.coupling_hz),
            sf(|x| x.eta),
            Cell::Bool(s.map(|x| x.stable)),
            sf(|x| x.max_real_part),
            Cell::Bool(s.map(|x| x.tangent)),
            f(self.spectrum_at_wm),
            tf(|x| x.phase_noise),
            tf(|x| x.noise_over_kappa),
        ];
        out.extend((0..10).map(|k| Cell::Float(st.map(|x| x.covariance[k]))));
        out.extend([
            tf(|x| x.phonons_raw),
            tf(|x| x.phonons),
            tf(|x| x.condition),
            Cell::Bool(st.map(|x| x.ill_conditioned)),
            tf(|x| x.phonons_limit_exact_noise),
            tf(|x| x.phonons_limit_closed_noise),
            tf(|x| x.phonons_limit_spectrum),
            tf(|x| x.log_negativity),
            tf(|x| x.nu_min),
            tf(|x| x.sigma),
            Cell::Text(self.error.clone()),
        ]);
        out
    }

    pub fn eta(&self) -> Option<f64> {
        self.steady.map(|s| s.eta)
    }

    pub fn log_negativity(&self) -> Option<f64> {
        self.stationary.map(|s| s.log_negativity)
    }
}

/// One grid point's inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub params: SystemParams,
    pub noise: NoiseModel,
}

/// Grid points in row-major order: the first axis varies slowest.
pub fn grid(cfg: &SweepConfig) -> Vec<GridPoint> {
    let mut points = vec![GridPoint {
        params: cfg.params,
        noise: cfg.noise,
    }];
    for axis in &cfg.axes {
        let values = axis.values();
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p;
                    axis.name.apply(v, &mut q.params, &mut q.noise);
                    q
                })
            })
            .collect();
    }
    points
}

fn base_record(index: usize, point: &GridPoint) -> SweepRecord {
    let p = &point.params;
    SweepRecord {
        point_index: index,
        cavity_length: p.cavity_length,
        mass: p.mirror_mass,
        mechanical_freq_hz: p.mechanical_freq / TWO_PI,
        mechanical_damping_hz: p.mechanical_damping / TWO_PI,
        cavity_decay_hz: p.cavity_decay / TWO_PI,
        wavelength: p.laser_wavelength,
        power: p.input_power,
        detuning_hz: p.detuning / TWO_PI,
        temperature: p.bath_temperature,
        linewidth_hz: point.noise.linewidth / TWO_PI,
        correlation_rate_hz: point.noise.correlation_rate / TWO_PI,
        branch_index: None,
        branch_count: None,
        steady: None,
        spectrum_at_wm: phase_noise_spectrum(p.mechanical_freq, &point.noise),
        stationary: None,
        error: None,
    }
}

type Solved = Result<(DerivedParams, Vec<SteadyState>)>;

fn solve_point(point: &GridPoint) -> Solved {
    point.noise.validate()?;
    let derived = derive(&point.params)?;
    Ok((derived, solve_branches(&point.params, &derived)?))
}

fn evaluate(index: usize, point: &GridPoint, derived: &DerivedParams, ss: &SteadyState, count: usize) -> SweepRecord {
    let p = &point.params;
    let mut rec = base_record(index, point);
    rec.branch_index = Some(ss.branch_index);
    rec.branch_count = Some(count);
    rec.steady = Some(SteadyOutputs {
        photon_number: ss.photon_number,
        alpha_re: ss.alpha_s.re,
        alpha_im: ss.alpha_s.im,
        displacement: ss.displacement,
        effective_detuning_hz: ss.effective_detuning / TWO_PI,
        detuning_over_wm: ss.effective_detuning / p.mechanical_freq,
        coupling_hz: ss.enhanced_coupling / TWO_PI,
        eta: ss.eta,
        stable: ss.stable,
        max_real_part: ss.max_real_part,
        tangent: ss.tangent,
    });
    if !ss.stable {
        return rec;
    }
    match analyze_branch(p, derived, &point.noise, ss) {
        Ok(a) => {
            rec.stationary = Some(StationaryOutputs {
                phase_noise: a.diffusion.phase_noise,
                noise_over_kappa: a.diffusion.phase_noise / p.cavity_decay,
                covariance: a.covariance.upper_triangle(),
                phonons_raw: a.phonons.raw,
                phonons: a.phonons.clamped,
                condition: a.covariance.condition,
                ill_conditioned: a.covariance.ill_conditioned,
                phonons_limit_exact_noise: a.asymptotics.exact_noise_limit,
                phonons_limit_closed_noise: a.asymptotics.closed_noise_limit,
                phonons_limit_spectrum: a.asymptotics.spectrum_limit,
                log_negativity: a.entanglement.log_negativity,
                nu_min: a.entanglement.nu_min,
                sigma: a.entanglement.sigma,
            })
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

fn par_map<T: Sync, U: Send>(workers: usize, items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Result<Vec<U>> {
    if workers <= 1 {
        return Ok(items.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}

/// Branches to report at each point, as (point, branch) pairs.
/// `inner` is the number of points per step along the continuity axis.
fn select(policy: BranchPolicy, inner: usize, solved: &[Solved]) -> Vec<(usize, Option<usize>)> {
    let pick_all = |i: usize, policy_one: Option<usize>| match &solved[i] {
        Err(_) => vec![(i, None)],
        Ok((_, b)) => match policy_one {
            Some(k) => vec![(i, Some(k))],
            None => (0..b.len()).map(|k| (i, Some(k))).collect(),
        },
    };
    match policy {
        BranchPolicy::All => (0..solved.len()).flat_map(|i| pick_all(i, None)).collect(),
        BranchPolicy::Lowest => (0..solved.len()).flat_map(|i| pick_all(i, Some(0))).collect(),
        BranchPolicy::Continuity => {
            let outer = solved.len() / inner;
            let mut choice = vec![None; solved.len()];
            for j in 0..inner {
                let mut previous: Option<f64> = None;
                for i in 0..outer {
                    let idx = i * inner + j;
                    let Ok((_, branches)) = &solved[idx] else {
                        previous = None;
                        continue;
                    };
                    let k = match previous {
                        None => 0,
                        Some(n) => branches
                            .iter()
                            .enumerate()
                            .min_by(|a, b| (a.1.photon_number - n).abs().total_cmp(&(b.1.photon_number - n).abs()))
                            .map_or(0, |(k, _)| k),
                    };
                    previous = branches.get(k).map(|s| s.photon_number);
                    choice[idx] = Some(k);
                }
            }
            choice.into_iter().enumerate().collect()
        }
    }
}

fn run_points(points: &[GridPoint], policy: BranchPolicy, inner: usize, workers: usize, first_index: usize) -> Result<Vec<SweepRecord>> {
    let solved = par_map(workers, points, solve_point)?;
    let work = select(policy, inner, &solved);
    par_map(workers, &work, |&(i, k)| {
        let index = first_index + i;
        match (&solved[i], k) {
            (Ok((derived, branches)), Some(k)) => evaluate(index, &points[i], derived, &branches[k], branches.len()),
            (Err(e), _) => SweepRecord {
                error: Some(e.to_string()),
                ..base_record(index, &points[i])
            },
            (Ok(_), None) => base_record(index, &points[i]),
        }
    })
}

/// Evaluates the full pipeline over the configured grid. Failures at one
/// point are recorded in that point's `error` field.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let inner = if cfg.axes.len() == 2 { cfg.axes[1].count } else { 1 };
    run_points(&grid(cfg), cfg.branch_policy, inner, cfg.workers, 0)
}

/// Input powers approaching each branch end of `params` from the side where
/// that branch exists, at relative offsets 10^(−1 − k/2) for k < `count`.
pub fn fold_approach_powers(params: &SystemParams, count: usize) -> Result<Vec<f64>> {
    let derived = derive(params)?;
    let Some((lower_end, upper_end)) = fold_points(params, &derived) else {
        return Ok(Vec::new());
    };
    let mut powers = Vec::with_capacity(2 * count);
    for k in 0..count {
        let offset = 10f64.powf(-1.0 - 0.5 * k as f64);
        powers.push(lower_end.power * (1.0 - offset));
        powers.push(upper_end.power * (1.0 + offset));
    }
    Ok(powers)
}

/// Writes rows of cells under `header` in the given format.
pub fn write_table(out: &mut impl Write, header: &[&str], rows: &[Vec<Cell>], format: OutputFormat) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(header)?;
            for row in rows {
                w.write_record(row.iter().map(Cell::csv))?;
            }
            w.flush()
        }
        OutputFormat::Json => {
            out.write_all(b"[")?;
            for (i, row) in rows.iter().enumerate() {
                let mut obj = String::from(if i == 0 { "\n{" } else { ",\n{" });
                for (k, (name, cell)) in header.iter().zip(row).enumerate() {
                    if k > 0 {
                        obj.push(',');
                    }
                    let _ = write!(obj, "\"{name}\":{}", cell.json());
                }
                obj.push('}');
                out.write_all(obj.as_bytes())?;
            }
            out.write_all(b"\n]\n")
        }
    }
}

fn io_error(path: Option<&Path>, source: std::io::Error) -> Error {
    Error::Io {
        path: path.map_or_else(|| "<stdout>".into(), Path::to_path_buf),
        source,
    }
}

/// Writes a table to `path`, or to standard output when `path` is `None`.
pub fn emit_table(header: &[&str], rows: &[Vec<Cell>], format: OutputFormat, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let file = std::fs::File::create(p).map_err(|e| io_error(path, e))?;
            let mut w = std::io::BufWriter::new(file);
            write_table(&mut w, header, rows, format).map_err(|e| io_error(path, e))?;
            w.flush().map_err(|e| io_error(path, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_table(&mut lock, header, rows, format).map_err(|e| io_error(path, e))
        }
    }
}

pub fn emit(records: &[SweepRecord], format: OutputFormat, path: Option<&Path>) -> Result<()> {
    let rows: Vec<Vec<Cell>> = records.iter().map(SweepRecord::cells).collect();
    emit_table(HEADER, &rows, format, path)
}

/// Renders records to an in-memory string.
pub fn render(records: &[SweepRecord], format: OutputFormat) -> String {
    let rows: Vec<Vec<Cell>> = records.iter().map(SweepRecord::cells).collect();
    let mut buf = Vec::new();
    write_table(&mut buf, HEADER, &rows, format).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("table output is UTF-8")
}

/// Bin layout for [`fig3_regrid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegridSpec {
    pub eta_bins: usize,
    pub detuning_bins: usize,
    pub eta_range: (f64, f64),
    /// Range of Δ/ω_m; taken from the data when `None`.
    pub detuning_range: Option<(f64, f64)>,
}

impl Default for RegridSpec {
    fn default() -> Self {
        RegridSpec {
            eta_bins: 60,
            detuning_bins: 60,
            eta_range: (0.0, 1.0),
            detuning_range: None,
        }
    }
}

/// Maximum log-negativity per (η, Δ/ω_m) bin; row-major with η outer.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub eta_edges: Vec<f64>,
    pub detuning_edges: Vec<f64>,
    pub cells: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterCell {
    pub eta: (f64, f64),
    pub detuning: (f64, f64),
    pub value: Option<f64>,
}

pub const RASTER_HEADER: &[&str] = &["eta_lo", "eta_hi", "detuning_lo", "detuning_hi", "max_log_negativity"];

impl Raster {
    pub fn iter(&self) -> impl Iterator<Item = RasterCell> + '_ {
        let nd = self.detuning_edges.len() - 1;
        self.cells.iter().enumerate().map(move |(k, &value)| {
            let (i, j) = (k / nd, k % nd);
            RasterCell {
                eta: (self.eta_edges[i], self.eta_edges[i + 1]),
                detuning: (self.detuning_edges[j], self.detuning_edges[j + 1]),
                value,
            }
        })
    }

    pub fn populated(&self) -> impl Iterator<Item = (RasterCell, f64)> + '_ {
        self.iter().filter_map(|c| c.value.map(|v| (c, v)))
    }

    /// Populated cell with the largest value.
    pub fn argmax(&self) -> Option<(RasterCell, f64)> {
        self.populated().max_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn rows(&self) -> Vec<Vec<Cell>> {
        self.iter()
            .map(|c| {
                vec![
                    Cell::Float(Some(c.eta.0)),
                    Cell::Float(Some(c.eta.1)),
                    Cell::Float(Some(c.detuning.0)),
                    Cell::Float(Some(c.detuning.1)),
                    Cell::Float(c.value),
                ]
            })
            .collect()
    }
}

fn edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins).map(|i| if i == bins { hi } else { lo + (hi - lo) * i as f64 / bins as f64 }).collect()
}

fn bin_of(x: f64, lo: f64, hi: f64, bins: usize) -> Option<usize> {
    if !(x >= lo && x <= hi) {
        return None;
    }
    if hi == lo {
        return Some(0);
    }
    Some((((x - lo) / (hi - lo)) * bins as f64).floor().min(bins as f64 - 1.0) as usize)
}

/// Bins stable records by (η, Δ/ω_m), keeping the largest log-negativity.
pub fn fig3_regrid(records: &[SweepRecord], spec: &RegridSpec) -> Raster {
    let samples: Vec<(f64, f64, f64)> = records
        .iter()
        .filter_map(|r| {
            let s = r.steady?;
            let st = r.stationary?;
            s.stable.then_some((s.eta, s.detuning_over_wm, st.log_negativity))
        })
        .collect();
    let (dlo, dhi) = spec.detuning_range.or_else(|| detuning_span(records)).unwrap_or((0.0, 1.0));
    let (elo, ehi) = spec.eta_range;
    let mut cells = vec![None; spec.eta_bins * spec.detuning_bins];
    for (eta, det, en) in samples {
        let (Some(i), Some(j)) = (bin_of(eta, elo, ehi, spec.eta_bins), bin_of(det, dlo, dhi, spec.detuning_bins)) else {
            continue;
        };
        let cell: &mut Option<f64> = &mut cells[i * spec.detuning_bins + j];
        *cell = Some(cell.map_or(en, |v: f64| v.max(en)));
    }
    Raster {
        eta_edges: edges(elo, ehi, spec.eta_bins),
        detuning_edges: edges(dlo, dhi, spec.detuning_bins),
        cells,
    }
}

/// Baseline settings for the `fig2` preset: a Δ0 sweep at 50 mW for two
/// linewidths. File entries and flags are merged over these.
pub fn fig2_preset() -> ConfigMap {
    let mut m = ConfigMap::default();
    for (k, v) in [
        ("power", "0.05"),
        ("axis1", "linewidth_hz 30 100 2 linear"),
        ("axis2", "detuning_hz 0 50e6 201 linear"),
        ("branch_policy", "all"),
    ] {
        m.set(k, v).expect("preset keys are valid");
    }
    m
}

/// Baseline settings for the `fig3` preset: a Δ0 × P grid. The linewidth
/// is set per run.
pub fn fig3_preset() -> ConfigMap {
    let mut m = ConfigMap::default();
    for (k, v) in [
        ("axis1", "detuning_hz 0.5e6 40e6 60 linear"),
        ("axis2", "power 1e-3 0.3 400 log"),
        ("branch_policy", "all"),
    ] {
        m.set(k, v).expect("preset keys are valid");
    }
    m
}

fn detuning_span(records: &[SweepRecord]) -> Option<(f64, f64)> {
    let values = records
        .iter()
        .filter_map(|r| r.steady.filter(|s| s.stable && r.stationary.is_some()))
        .map(|s| s.detuning_over_wm);
    values.fold(None, |acc, x| match acc {
        None => Some((x, x)),
        Some((lo, hi)) => Some((lo.min(x), hi.max(x))),
    })
}

/// Options for [`run_fig3`].
#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Options {
    /// Linewidths in Hz, one run each.
    pub linewidths_hz: Vec<f64>,
    pub regrid: RegridSpec,
    /// Extra powers per branch end and detuning, see [`fold_approach_powers`].
    /// Without them a power grid rarely lands close enough to a branch end
    /// to populate the smallest-η bins.
    pub fold_samples: usize,
}

impl Default for Fig3Options {
    fn default() -> Self {
        Fig3Options {
            linewidths_hz: vec![0.0, 10.0, 100.0],
            regrid: RegridSpec::default(),
            fold_samples: 12,
        }
    }
}

/// Runs the `fig3` grid once per linewidth, adding fold-approach powers at
/// every grid detuning, and returns the records and raster of each run.
/// Without an explicit detuning range all rasters share the span of the
/// pooled data.
pub fn run_fig3(cfg: &SweepConfig, opts: &Fig3Options) -> Result<Vec<(f64, Vec<SweepRecord>, Raster)>> {
    cfg.validate()?;
    if opts.regrid.eta_bins == 0 || opts.regrid.detuning_bins == 0 {
        return Err(Error::Config("raster bin counts must be at least 1".into()));
    }
    let runs = opts
        .linewidths_hz
        .iter()
        .map(|&lw| {
            let mut c = cfg.clone();
            c.axes.retain(|a| a.name != AxisName::Linewidth);
            AxisName::Linewidth.apply(lw, &mut c.params, &mut c.noise);
            let mut records = run_sweep(&c)?;
            let mut extra = Vec::new();
            let mut seen = Vec::new();
            for point in grid(&c) {
                // One set per distinct detuning; powers on the grid do not matter.
                let key = (point.params.detuning, point.noise.correlation_rate, point.params.bath_temperature);
                if seen.contains(&key) {
                    continue;
                }
                seen.push(key);
                if let Ok(powers) = fold_approach_powers(&point.params, opts.fold_samples) {
                    extra.extend(powers.into_iter().map(|p| {
                        let mut q = point;
                        q.params.input_power = p;
                        q
                    }));
                }
            }
            let first = grid(&c).len();
            records.extend(run_points(&extra, c.branch_policy, 1, c.workers, first)?);
            Ok((lw, records))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut spec = opts.regrid;
    if spec.detuning_range.is_none() {
        let pooled: Vec<SweepRecord> = runs.iter().flat_map(|r| r.1.iter().cloned()).collect();
        spec.detuning_range = detuning_span(&pooled);
    }
    Ok(runs
        .into_iter()
        .map(|(lw, records)| {
            let raster = fig3_regrid(&records, &spec);
            (lw, records, raster)
        })
        .collect())
}
