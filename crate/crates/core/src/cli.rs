//! Command-line front end for the `energy-models` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::drive_cycles::{
    self, integrate_fuel, moving_average, realizability, relative_error_pct, resolve_cycle,
    trapezoid, DriveCycle, ValidationRow, BUNDLED_CYCLES, MOVING_WINDOW_S,
};
use crate::map_fitting::{
    extract_empirical_constants, fit_empirical_maps, generate_vcd_schedule, read_samples_csv,
    run_vcd, write_samples_csv, write_schedule_csv, DriveTrace, TraceRow,
};
use crate::reduction_pipeline::reduce;
use crate::semi_principled::{export_grid, GridModel, GridSpec, SemiOutput, SemiPrincipledVehicle};
use crate::simplified_model::{self, read_points_csv, write_eval_csv, Duty, SimplifiedParams};
use crate::{Error, FuelModel, ModelSample, OperatingPoint, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_FIT: i32 = 4;

/// Grades of the constant-grade validation table, rad.
pub const TABLE_GRADES: [f64; 7] = [-0.03, -0.02, -0.01, 0.0, 0.01, 0.02, 0.03];

#[derive(Debug, Parser)]
#[command(name = "energy-models", version, about = "Vehicle fuel models, reduction and drive-cycle validation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a model on a points CSV, over a cycle, or dump it on a grid.
    Eval(EvalArgs),
    /// Fit a simplified model to an oracle.
    Fit(FitArgs),
    /// Compare models against a reference over drive cycles and grades.
    Validate(ValidateArgs),
    #[command(subcommand)]
    Cycles(CyclesCommand),
    #[command(subcommand)]
    Vcd(VcdCommand),
    /// Extract empirical constants from a drive trace.
    ExtractConstants(ExtractArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Bundled vehicle key or a model file (simplified JSON, semi-principled JSON, grid dump CSV).
    #[arg(long)]
    pub vehicle: String,
    /// CSV of `v,a,theta` points.
    #[arg(long, conflicts_with_all = ["cycle", "export_grid"])]
    pub input: Option<PathBuf>,
    /// Bundled cycle name or cycle CSV; writes a per-sample fuel trace.
    #[arg(long, conflicts_with = "export_grid")]
    pub cycle: Option<String>,
    /// Constant grade applied to `--cycle`, rad.
    #[arg(long, allow_hyphen_values = true)]
    pub grade: Option<f64>,
    /// Replace infeasible accelerations by the boundary (simplified models).
    #[arg(long)]
    pub project: bool,
    /// Override the fuel specific energy, J/g (simplified models).
    #[arg(long)]
    pub specific_energy: Option<f64>,
    /// Sample the model on the default 3-D grid and write the dump.
    #[arg(long)]
    pub export_grid: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Oracle: semi-principled JSON, grid dump CSV, or a simplified model.
    #[arg(long)]
    pub vehicle: String,
    /// Name stored in the fitted parameter file.
    #[arg(long)]
    pub name: Option<String>,
    /// Fitted parameter file; the fit report goes next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Models under test.
    #[arg(long, required = true)]
    pub vehicle: Vec<String>,
    /// Reference model.
    #[arg(long, required_unless_present = "reference_traces")]
    pub reference: Option<String>,
    /// Directory of reference drive traces named `<cycle>_<grade>.csv`
    /// (grade with two decimals, e.g. `udds_-0.01.csv`).
    #[arg(long)]
    pub reference_traces: Option<PathBuf>,
    /// Bundled cycle names or cycle CSVs. Defaults to every bundled cycle.
    #[arg(long)]
    pub cycle: Vec<String>,
    /// Comma-separated grades, rad, or `table` for -0.03..0.03 in 0.01 steps.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub grade: String,
    /// Accept grades outside the studied range.
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub project: bool,
    #[arg(long)]
    pub specific_energy: Option<f64>,
    /// Report CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for moving-average fuel traces, one CSV per cycle and grade.
    #[arg(long)]
    pub plot_dir: Option<PathBuf>,
    #[arg(long, default_value_t = MOVING_WINDOW_S)]
    pub window: f64,
}

#[derive(Debug, Subcommand)]
pub enum CyclesCommand {
    /// List the bundled drive cycles.
    List,
}

#[derive(Debug, Subcommand)]
pub enum VcdCommand {
    /// Write the test schedule for a semi-principled vehicle.
    Schedule {
        #[arg(long)]
        vehicle: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the schedule against a semi-principled vehicle and write the samples.
    Run {
        #[arg(long)]
        vehicle: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the empirical maps to captured samples.
    FitMaps {
        #[arg(long)]
        samples: PathBuf,
        /// Vehicle whose maps are replaced; the output is the updated vehicle.
        #[arg(long, required_unless_present = "gears")]
        vehicle: Option<PathBuf>,
        /// Gear count when no vehicle is given; the output is the maps alone.
        #[arg(long)]
        gears: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Drive trace CSV `t,v,gear,N,T,fuel,F_wheel,tc_state`.
    #[arg(long)]
    pub trace: PathBuf,
    /// Semi-principled vehicle: enables the torque correction and fills
    /// fields the trace does not cover.
    #[arg(long)]
    pub vehicle: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Csv(_) | Error::Input(_) => EXIT_PARSE,
        Error::Fit { .. } | Error::NonConvergence { .. } | Error::Singularity { .. } => EXIT_FIT,
        Error::Config(_) | Error::Unsupported(_) | Error::MapDomain(_) | Error::Io(_) | Error::Json(_) => {
            EXIT_CONFIG
        }
    }
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Cycles(CyclesCommand::List) => cmd_cycles_list(),
        Command::Vcd(c) => cmd_vcd(c),
        Command::ExtractConstants(a) => cmd_extract(a),
    }
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`,
/// then records the tool version in `<path>.version`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?
        .to_string_lossy()
        .into_owned();
    let tmp = dir.join(format!(".{file_name}.tmp"));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    let sidecar = dir.join(format!("{file_name}.version"));
    let stamp = format!("{} {}\n", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    let tmp = dir.join(format!(".{file_name}.version.tmp"));
    std::fs::write(&tmp, stamp)?;
    std::fs::rename(&tmp, sidecar)?;
    Ok(())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn read_file(path: &Path, what: &str) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {what} {}: {e}", path.display())))
}

fn open_file(path: &Path, what: &str) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::Config(format!("cannot open {what} {}: {e}", path.display())))
}

/// A model loaded from a bundled key or a file.
#[derive(Debug, Clone)]
pub enum LoadedModel {
    Simplified(SimplifiedParams),
    Semi(Box<SemiPrincipledVehicle>),
    Grid { name: String, model: GridModel },
}

impl LoadedModel {
    pub fn name(&self) -> &str {
        match self {
            LoadedModel::Simplified(p) => &p.name,
            LoadedModel::Semi(v) => &v.name,
            LoadedModel::Grid { name, .. } => name,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LoadedModel::Simplified(_) => "simplified",
            LoadedModel::Semi(_) => "semi_principled",
            LoadedModel::Grid { .. } => "grid",
        }
    }

    pub fn duty(&self) -> Duty {
        match self {
            LoadedModel::Simplified(p) => p.duty(),
            _ => Duty::LightDuty,
        }
    }

    fn apply_specific_energy(self, se: Option<f64>) -> Result<Self> {
        match (self, se) {
            (m, None) => Ok(m),
            (LoadedModel::Simplified(p), Some(e)) => Ok(LoadedModel::Simplified(p.with_specific_energy(e)?)),
            (m, Some(_)) => Err(Error::Config(format!(
                "--specific-energy applies to simplified models, not {}",
                m.kind()
            ))),
        }
    }

    /// The model as seen by the harness, optionally projecting simplified
    /// models onto their feasible boundary.
    pub fn fuel_model(&self, project: bool) -> Box<dyn FuelModel + '_> {
        match self {
            LoadedModel::Simplified(p) if project => Box::new(Projected(p)),
            LoadedModel::Simplified(p) => Box::new(p),
            LoadedModel::Semi(v) => Box::new(v.as_ref()),
            LoadedModel::Grid { model, .. } => Box::new(model),
        }
    }
}

struct Projected<'a>(&'a SimplifiedParams);

impl FuelModel for Projected<'_> {
    fn sample(&self, pt: OperatingPoint) -> Result<ModelSample> {
        let e = self.0.eval(pt, true)?;
        Ok(ModelSample {
            fuel_rate: e.fuel_rate,
            feasible: e.feasibility == simplified_model::Feasibility::Feasible,
        })
    }
}

pub fn load_model(spec: &str) -> Result<LoadedModel> {
    if simplified_model::BUNDLED_VEHICLES.contains(&spec) {
        return Ok(LoadedModel::Simplified(simplified_model::bundled(spec)?));
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::Config(format!(
            "vehicle {spec:?} is neither a bundled key ({}) nor an existing file",
            simplified_model::BUNDLED_VEHICLES.join(", ")
        )));
    }
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let model = GridModel::read(open_file(path, "grid dump")?)?;
        return Ok(LoadedModel::Grid { name: stem, model });
    }
    let text = read_file(path, "vehicle file")?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("principled_constants").is_some() {
        Ok(LoadedModel::Semi(Box::new(SemiPrincipledVehicle::from_json_str(&text)?)))
    } else {
        Ok(LoadedModel::Simplified(SimplifiedParams::from_json_str(&text)?))
    }
}

#[derive(Serialize)]
struct SemiRow {
    v: f64,
    a: f64,
    theta: f64,
    #[serde(rename = "N")]
    n: f64,
    #[serde(rename = "T")]
    t: f64,
    fuel_rate: f64,
    #[serde(rename = "N_output")]
    n_output: f64,
    #[serde(rename = "F_wheel")]
    f_wheel: f64,
    #[serde(rename = "P_wheel")]
    p_wheel: f64,
    #[serde(rename = "P_engine")]
    p_engine: f64,
    gear: usize,
    feasible: u8,
    penalty: f64,
    extrapolations: u32,
}

impl SemiRow {
    fn new(pt: OperatingPoint, o: Option<SemiOutput>) -> Self {
        let o = o.unwrap_or(SemiOutput {
            n: 0.0,
            t: 0.0,
            fuel_rate: 0.0,
            n_output: 0.0,
            f_wheel: 0.0,
            p_wheel: 0.0,
            p_engine: 0.0,
            gear: 0,
            feasible: false,
            penalty: 0.0,
            extrapolations: 0,
        });
        Self {
            v: pt.v,
            a: pt.a,
            theta: pt.theta,
            n: o.n,
            t: o.t,
            fuel_rate: o.fuel_rate,
            n_output: o.n_output,
            f_wheel: o.f_wheel,
            p_wheel: o.p_wheel,
            p_engine: o.p_engine,
            gear: o.gear,
            feasible: o.feasible as u8,
            penalty: o.penalty,
            extrapolations: o.extrapolations,
        }
    }
}

fn eval_points(model: &LoadedModel, points: &[OperatingPoint], project: bool) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match model {
        LoadedModel::Simplified(p) => {
            let evals = points.iter().map(|&pt| p.eval(pt, project)).collect::<Result<Vec<_>>>()?;
            write_eval_csv(&mut buf, points, &evals)?;
        }
        LoadedModel::Semi(veh) => {
            let mut w = csv::Writer::from_writer(&mut buf);
            for &pt in points {
                // Negative speeds are flagged in the output rather than aborting the batch.
                let out = if pt.v < 0.0 { None } else { Some(veh.eval(pt)?) };
                w.serialize(SemiRow::new(pt, out))?;
            }
            w.flush()?;
        }
        LoadedModel::Grid { model: g, .. } => {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(["v", "a", "theta", "fuel_rate", "feasible"])?;
            for &pt in points {
                let s = g.sample(pt)?;
                w.write_record([
                    pt.v.to_string(),
                    pt.a.to_string(),
                    pt.theta.to_string(),
                    s.fuel_rate.to_string(),
                    u8::from(s.feasible).to_string(),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(buf)
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let model = load_model(&args.vehicle)?.apply_specific_energy(args.specific_energy)?;
    if args.project && !matches!(model, LoadedModel::Simplified(_)) {
        log::warn!("--project only affects simplified models");
    }
    if args.export_grid {
        let mut buf = Vec::new();
        export_grid(&*model.fuel_model(args.project), &GridSpec::default(), &mut buf)?;
        return emit(args.out.as_deref(), &buf);
    }
    let points = if let Some(cycle) = &args.cycle {
        let mut c = resolve_cycle(cycle)?;
        if let Some(g) = args.grade {
            c = c.with_constant_grade(g, model.duty());
        }
        c.operating_points()?
    } else if let Some(input) = &args.input {
        read_points_csv(open_file(input, "points file")?)?
    } else {
        return Err(Error::Config("eval needs --input, --cycle or --export-grid".into()));
    };
    let buf = eval_points(&model, &points, args.project)?;
    emit(args.out.as_deref(), &buf)
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let model = load_model(&args.vehicle)?;
    let name = args.name.clone().unwrap_or_else(|| format!("{} (fitted)", model.name()));
    let (params, report) = reduce(model.fuel_model(false), &name)?;
    let params_json = params.to_json_string()?;
    let report_json = report.to_json_string()?;
    match &args.out {
        Some(out) => {
            write_atomic(out, params_json.as_bytes())?;
            let report_path = args.report.clone().unwrap_or_else(|| out.with_extension("report.json"));
            write_atomic(&report_path, report_json.as_bytes())
        }
        None => {
            println!("{params_json}");
            match &args.report {
                Some(r) => write_atomic(r, report_json.as_bytes()),
                None => {
                    eprintln!("{report_json}");
                    Ok(())
                }
            }
        }
    }
}

/// Parses a comma-separated grade list; `table` expands to the seven
/// grades of the constant-grade study.
pub fn parse_grades(s: &str) -> Result<Vec<f64>> {
    if s.trim() == "table" {
        return Ok(TABLE_GRADES.to_vec());
    }
    s.split(',')
        .map(|g| {
            g.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Config(format!("bad grade {g:?}")))
        })
        .collect()
}

pub fn reference_trace_path(dir: &Path, cycle: &str, grade: f64) -> PathBuf {
    // Avoid "-0.00" for a zero grade.
    let grade = if grade == 0.0 { 0.0 } else { grade };
    dir.join(format!("{cycle}_{grade:.2}.csv"))
}

/// File name, time axis and named series.
type PlotTable = (String, Vec<f64>, Vec<(String, Vec<f64>)>);

struct Reference {
    total: f64,
    speeds: Option<Vec<f64>>,
    rates: Vec<f64>,
    times: Vec<f64>,
}

fn reference_from_trace(trace: &DriveTrace) -> Reference {
    let rows: &[TraceRow] = trace.rows();
    let times: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let rates: Vec<f64> = rows.iter().map(|r| r.fuel).collect();
    Reference {
        total: trapezoid(&times, &rates),
        speeds: Some(rows.iter().map(|r| r.v).collect()),
        rates,
        times,
    }
}

/// Reference fuel for a graded cycle, plus the achieved speed trace if known.
pub type ReferenceFn<'a> = dyn FnMut(&DriveCycle, f64) -> Result<(f64, Option<Vec<f64>>)> + 'a;

/// Validation rows for every `(model, cycle, grade)` combination, in model,
/// cycle, grade order.
pub fn validation_rows(
    models: &[LoadedModel],
    reference: &mut ReferenceFn<'_>,
    cycles: &[DriveCycle],
    grades: &[f64],
    project: bool,
) -> Result<Vec<ValidationRow>> {
    let mut rows = Vec::new();
    for m in models {
        let fm = m.fuel_model(project);
        for c in cycles {
            for &g in grades {
                let graded = c.with_constant_grade(g, m.duty());
                let model_fuel = integrate_fuel(&*fm, &graded)?.total;
                let (reference_fuel, achieved) = reference(&graded, g)?;
                let realizable = achieved
                    .map(|a| realizability(&graded.speeds(), &a).map(|r| r.realizable))
                    .transpose()?;
                rows.push(ValidationRow {
                    vehicle: m.name().to_string(),
                    model: m.kind().to_string(),
                    cycle: c.name.clone(),
                    grade: g,
                    model_fuel,
                    reference_fuel,
                    rel_error_pct: relative_error_pct(model_fuel, reference_fuel),
                    realizable,
                });
            }
        }
    }
    Ok(rows)
}

fn cmd_validate(args: ValidateArgs) -> Result<()> {
    let models = args
        .vehicle
        .iter()
        .map(|v| load_model(v)?.apply_specific_energy(args.specific_energy))
        .collect::<Result<Vec<_>>>()?;
    let grades = parse_grades(&args.grade)?;
    for m in &models {
        for &g in &grades {
            if !drive_cycles::grade_in_range(g, m.duty()) && !args.force {
                return Err(Error::Config(format!(
                    "grade {g} is outside ±{} rad for {}; pass --force to accept",
                    drive_cycles::grade_bound(m.duty()),
                    m.name()
                )));
            }
        }
    }
    let cycle_specs: Vec<String> = if args.cycle.is_empty() {
        BUNDLED_CYCLES.iter().map(|s| s.to_string()).collect()
    } else {
        args.cycle.clone()
    };
    let cycles = cycle_specs.iter().map(|c| resolve_cycle(c)).collect::<Result<Vec<_>>>()?;
    let ref_model = args.reference.as_deref().map(load_model).transpose()?;

    let mut plots: Vec<PlotTable> = Vec::new();
    let reference_fn = |cycle: &DriveCycle, grade: f64| -> Result<Reference> {
        if let Some(dir) = &args.reference_traces {
            let path = reference_trace_path(dir, &cycle.name, grade);
            let trace = DriveTrace::read_csv(open_file(&path, "reference trace")?)?;
            return Ok(reference_from_trace(&trace));
        }
        let m = ref_model.as_ref().expect("reference required by the parser");
        let fi = integrate_fuel(&*m.fuel_model(args.project), cycle)?;
        Ok(Reference {
            total: fi.total,
            speeds: None,
            rates: fi.rates,
            times: cycle.times(),
        })
    };

    let rows = {
        let mut cb = |c: &DriveCycle, g: f64| {
            let r = reference_fn(c, g)?;
            Ok((r.total, r.speeds))
        };
        validation_rows(&models, &mut cb, &cycles, &grades, args.project)?
    };

    if let Some(dir) = &args.plot_dir {
        std::fs::create_dir_all(dir)?;
        for c in &cycles {
            for &g in &grades {
                let reference = reference_fn(&c.with_constant_grade(g, Duty::LightDuty), g)?;
                let t = c.times();
                let dt = if t.len() > 1 { (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64 } else { 1.0 };
                let mut cols = Vec::new();
                for m in &models {
                    let graded = c.with_constant_grade(g, m.duty());
                    let fi = integrate_fuel(&*m.fuel_model(args.project), &graded)?;
                    cols.push((format!("fuel_{}", m.name()), moving_average(&fi.rates, dt, args.window)));
                }
                if reference.times.len() == t.len() {
                    cols.push(("fuel_reference".into(), moving_average(&reference.rates, dt, args.window)));
                } else {
                    log::warn!("reference for {} at grade {g} is not aligned with the cycle; not plotted", c.name);
                }
                let name = reference_trace_path(Path::new(""), &c.name, g)
                    .to_string_lossy()
                    .into_owned();
                plots.push((name, t, cols));
            }
        }
        for (name, t, cols) in &plots {
            let mut buf = Vec::new();
            drive_cycles::write_plot_csv(&mut buf, t, cols)?;
            write_atomic(&dir.join(name), &buf)?;
        }
    }

    let mut buf = Vec::new();
    drive_cycles::write_report_csv(&mut buf, &rows)?;
    emit(args.out.as_deref(), &buf)
}

fn cmd_cycles_list() -> Result<()> {
    let mut out = String::from("name,samples,duration_s,distance_km,max_speed_mps\n");
    for name in BUNDLED_CYCLES {
        let c = drive_cycles::bundled_cycle(name)?;
        let distance = trapezoid(&c.times(), &c.speeds()) / 1000.0;
        let vmax = c.speeds().into_iter().fold(0.0, f64::max);
        out.push_str(&format!("{name},{},{},{distance:.3},{vmax:.2}\n", c.len(), c.duration()));
    }
    print!("{out}");
    Ok(())
}

fn load_semi(path: &Path) -> Result<SemiPrincipledVehicle> {
    SemiPrincipledVehicle::from_json_str(&read_file(path, "vehicle file")?)
}

fn cmd_vcd(cmd: VcdCommand) -> Result<()> {
    match cmd {
        VcdCommand::Schedule { vehicle, out } => {
            let v = load_semi(&vehicle)?;
            let mut buf = Vec::new();
            write_schedule_csv(&mut buf, &generate_vcd_schedule(&v.principled_constants))?;
            emit(out.as_deref(), &buf)
        }
        VcdCommand::Run { vehicle, out } => {
            let v = load_semi(&vehicle)?;
            let samples = run_vcd(&v, &generate_vcd_schedule(&v.principled_constants))?;
            let mut buf = Vec::new();
            write_samples_csv(&mut buf, &samples)?;
            emit(out.as_deref(), &buf)
        }
        VcdCommand::FitMaps {
            samples,
            vehicle,
            gears,
            out,
        } => {
            let samples = read_samples_csv(open_file(&samples, "samples file")?)?;
            let base = vehicle.as_deref().map(load_semi).transpose()?;
            let gears = match (&base, gears) {
                (Some(v), Some(g)) if g != v.gears() => {
                    return Err(Error::Config(format!("--gears {g} but the vehicle has {}", v.gears())))
                }
                (Some(v), _) => v.gears(),
                (None, Some(g)) => g,
                (None, None) => unreachable!("enforced by the parser"),
            };
            let (maps, report) = fit_empirical_maps(&samples, gears)?;
            eprintln!("{}", serde_json::to_string(&report)?);
            let json = match base {
                Some(mut v) => {
                    v.empirical_maps = maps;
                    v.validate()?;
                    v.to_json_string()?
                }
                None => serde_json::to_string_pretty(&maps)?,
            };
            emit(out.as_deref(), json.as_bytes())
        }
    }
}

fn cmd_extract(args: ExtractArgs) -> Result<()> {
    let trace = DriveTrace::read_csv(open_file(&args.trace, "drive trace")?)?;
    let vehicle = args.vehicle.as_deref().map(load_semi).transpose()?;
    let predictor = vehicle
        .as_ref()
        .map(|v| move |r: &TraceRow, _a: f64| Ok(v.steady_first_gear_torque(r.v, r.f_wheel)));
    let extracted = extract_empirical_constants(
        &trace,
        predictor.as_ref().map(|p| p as &dyn Fn(&TraceRow, f64) -> Result<f64>),
    )?;
    let json = match &vehicle {
        Some(v) => serde_json::to_string_pretty(&extracted.into_empirical(Some(&v.empirical_constants))?)?,
        None => serde_json::to_string_pretty(&extracted)?,
    };
    emit(args.out.as_deref(), json.as_bytes())
}
