use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use planar_eof::camera::CameraModel;
use planar_eof::config::{seed_override, ConfigError, RunConfig, Scenario};
use planar_eof::eval::{evaluate as eval_report, EvalError};
use planar_eof::events::io::{write_csv, BinaryEventReader, BinaryEventWriter, CsvEventReader, BINARY_MAGIC};
use planar_eof::events::{to_intensity, Event, EventError, FrameStream};
use planar_eof::flow::debug::{quiver_svg, write_flow_csv};
use planar_eof::flow::pyramid::Plane;
use planar_eof::flow::compute_flow;
use planar_eof::pipeline::{LatencyStats, Pipeline, PipelineError};
use planar_eof::plot::{blur_budget_table, emit_plots};
use planar_eof::scenarios;
use planar_eof::synth::{ground_truth, synth_imu, EventSimulator, SynthError};
use planar_eof::vehicle::{
    read_imu_csv, read_velocity_csv, write_imu_csv, write_velocity_csv, write_velocity_row, VehicleError,
    VelocityEstimate, VELOCITY_CSV_HEADER,
};

use crate::EventFormat;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("input: {0}")]
    Input(String),
    #[error("evaluation: {0}")]
    Eval(#[from] EvalError),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Input(_) => 3,
            CliError::Eval(_) => 4,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<EventError> for CliError {
    fn from(e: EventError) -> Self {
        match e {
            EventError::InvalidConfig(m) => CliError::Config(m),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<VehicleError> for CliError {
    fn from(e: VehicleError) -> Self {
        match e {
            VehicleError::InvalidExtrinsics(_) | VehicleError::NoImu => CliError::Config(e.to_string()),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Events(e) => e.into(),
            PipelineError::Vehicle(e) => e.into(),
            e => CliError::Config(e.to_string()),
        }
    }
}

fn io_err(context: impl std::fmt::Display) -> impl FnOnce(io::Error) -> CliError {
    let context = context.to_string();
    move |source| CliError::Io { context, source }
}

/// Missing inputs are configuration errors: the config names files that
/// must exist.
fn open_input(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(io_err(format!("cannot create {}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(io_err(format!("cannot write {}", path.display())))
}

fn make_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(io_err(format!("cannot create {}", path.display())))
}

/// A run configuration with relative paths resolved against its own directory
/// and the seed override applied.
fn load_run_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut rc: RunConfig = text.parse()?;
    let base = path.parent().unwrap_or(Path::new(""));
    for p in [
        &mut rc.paths.events,
        &mut rc.paths.imu,
        &mut rc.paths.ground_truth,
        &mut rc.paths.output_dir,
    ] {
        if let Some(rel) = p.take() {
            *p = Some(if rel.is_absolute() { rel } else { base.join(rel) });
        }
    }
    if let Some(seed) = seed_override()? {
        rc.pipeline.seed = seed;
    }
    Ok(rc)
}

type EventIter = Box<dyn Iterator<Item = Result<Event, EventError>>>;

/// Opens a binary or CSV event file, picked by its leading magic bytes.
fn open_events(path: &Path, cam: &CameraModel) -> Result<EventIter, CliError> {
    let mut reader = open_input(path)?;
    let head = reader.fill_buf().map_err(io_err(format!("cannot read {}", path.display())))?;
    if head.starts_with(BINARY_MAGIC) {
        let r = BinaryEventReader::new(reader)?;
        if (r.width(), r.height()) != (cam.width, cam.height) {
            return Err(CliError::Input(format!(
                "{} holds a {}x{} sensor, the config says {}x{}",
                path.display(),
                r.width(),
                r.height(),
                cam.width,
                cam.height
            )));
        }
        Ok(Box::new(r))
    } else {
        Ok(Box::new(CsvEventReader::new(reader, cam.width, cam.height)?))
    }
}

fn read_velocities(path: &Path) -> Result<Vec<VelocityEstimate>, CliError> {
    read_velocity_csv(open_input(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn simulate(
    name: Option<&str>,
    config: Option<&Path>,
    out: &Path,
    format: EventFormat,
    duration: Option<f64>,
) -> Result<(), CliError> {
    let mut sc: Scenario = match (name, config) {
        (Some(n), _) => scenarios::by_name(n).ok_or_else(|| {
            CliError::Config(format!("unknown scenario '{n}', expected one of {}", scenarios::NAMES.join(", ")))
        })?,
        (None, Some(p)) => std::fs::read_to_string(p)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?
            .parse()?,
        (None, None) => return Err(CliError::Config("give --scenario or --config".into())),
    };
    if let Some(seed) = seed_override()? {
        sc.reseed(seed);
    }
    if let Some(d) = duration {
        if !(d > 0.0 && d <= sc.sim.duration) {
            return Err(CliError::Config(format!("--duration must lie in (0, {}]", sc.sim.duration)));
        }
        sc.sim.duration = d;
        sc.run.pipeline.span_us = Some((0, (d * 1e6).round() as u64));
    }
    make_dir(out)?;

    let events_name = match format {
        EventFormat::Bin => "events.bin",
        EventFormat::Csv => "events.csv",
    };
    let events_path = out.join(events_name);
    let sim = EventSimulator::new(&sc.sim, &sc.trajectory)?;
    let mut count = 0u64;
    let w = create(&events_path)?;
    let context = format!("cannot write {}", events_path.display());
    match format {
        EventFormat::Bin => {
            let mut bw = BinaryEventWriter::new(w, sc.sim.cam.width, sc.sim.cam.height).map_err(io_err(&context))?;
            for ev in sim {
                bw.write(&ev).map_err(io_err(&context))?;
                count += 1;
            }
            bw.finish().and_then(|mut w| w.flush()).map_err(io_err(&context))?;
        }
        EventFormat::Csv => {
            let mut w = w;
            write_csv(&mut w, sim.inspect(|_| count += 1)).map_err(io_err(&context))?;
            w.flush().map_err(io_err(&context))?;
        }
    }

    let gt = ground_truth(&sc.trajectory, &sc.sim.ext, sc.gt_rate_hz, sc.sim.duration)?;
    let gt_path = out.join("ground_truth.csv");
    write_velocity_csv(create(&gt_path)?, &gt).map_err(io_err(gt_path.display()))?;
    let imu = synth_imu(&sc.trajectory, sc.imu_rate_hz, sc.sim.duration, sc.imu_bias)?;
    let imu_path = out.join("imu.csv");
    write_imu_csv(create(&imu_path)?, &imu).map_err(io_err(imu_path.display()))?;

    write_file(&out.join("scenario.cfg"), &sc.to_text())?;
    let mut run = sc.run.clone();
    run.paths.events = Some(events_name.into());
    run.paths.imu = Some("imu.csv".into());
    run.paths.ground_truth = Some("ground_truth.csv".into());
    run.paths.output_dir = Some(".".into());
    write_file(&out.join("run.cfg"), &run.to_text())?;

    println!(
        "wrote {count} events, {} ground-truth rows, {} IMU samples to {}",
        gt.len(),
        imu.len(),
        out.display()
    );
    Ok(())
}

pub const VELOCITY_FILE: &str = "velocity.csv";
pub const REASONS_FILE: &str = "reasons.csv";
pub const LATENCY_FILE: &str = "latency.csv";
const LATENCY_HEADER: &str = "stage,mean_ms,std_ms,p95_ms";

pub fn estimate(
    config: &Path,
    events: Option<PathBuf>,
    imu: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut rc = load_run_config(config)?;
    rc.paths.events = events.or(rc.paths.events);
    rc.paths.imu = imu.or(rc.paths.imu);
    let events_path = rc
        .paths
        .events
        .clone()
        .ok_or_else(|| CliError::Config("no event file: set paths.events or pass --events".into()))?;
    let out = out
        .or(rc.paths.output_dir.clone())
        .ok_or_else(|| CliError::Config("no output directory: set paths.output_dir or pass --out".into()))?;
    let imu = match &rc.paths.imu {
        Some(p) if rc.pipeline.omega_source == planar_eof::vehicle::OmegaSource::Imu => Some(read_imu_csv(open_input(p)?)?),
        _ => None,
    };
    let pipeline = Pipeline::new(rc.pipeline.clone(), imu)?;
    let source = open_events(&events_path, &rc.pipeline.cam)?;
    make_dir(&out)?;

    let vel_path = out.join(VELOCITY_FILE);
    let reasons_path = out.join(REASONS_FILE);
    let mut vel = create(&vel_path)?;
    let mut reasons = create(&reasons_path)?;
    let mut write_err: Option<io::Error> = None;
    let mut header = || -> io::Result<()> {
        writeln!(vel, "{VELOCITY_CSV_HEADER}")?;
        writeln!(reasons, "frame_index,t_s,reason")
    };
    header().map_err(io_err(vel_path.display()))?;
    let summary = pipeline.run(source, |fr| {
        if write_err.is_some() {
            return;
        }
        let res = write_velocity_row(&mut vel, &fr.estimate).and_then(|_| {
            writeln!(
                reasons,
                "{},{},{}",
                fr.frame_index,
                fr.estimate.t_mid,
                fr.reason.map_or("ok", |r| r.as_str())
            )
        });
        if let Err(e) = res {
            write_err = Some(e);
        }
    })?;
    if let Some(e) = write_err {
        return Err(io_err(vel_path.display())(e));
    }
    vel.flush().map_err(io_err(vel_path.display()))?;
    reasons.flush().map_err(io_err(reasons_path.display()))?;

    let mut lat = String::from(LATENCY_HEADER);
    lat.push('\n');
    let mut row = |name: &str, l: &LatencyStats| {
        lat.push_str(&format!("{name},{:.6},{:.6},{:.6}\n", l.mean_ms, l.std_ms, l.p95_ms));
    };
    for (name, l) in summary.timings.stage_stats() {
        row(name, &l);
    }
    row("total", &summary.timings.total_stats());
    lat.push_str(&format!("overhead,{:.6},,\n", summary.timings.overhead_ms()));
    write_file(&out.join(LATENCY_FILE), &lat)?;

    println!(
        "frames_in {} frames_valid {} frames_invalid {} mean_latency_ms {:.3}",
        summary.frames_in(),
        summary.frames_valid,
        summary.frames_invalid,
        summary.timings.total_stats().mean_ms
    );
    Ok(())
}

fn read_latency(path: &Path) -> Result<Vec<(String, LatencyStats)>, CliError> {
    let bad = |line: usize, msg: &str| CliError::Input(format!("{}:{line}: {msg}", path.display()));
    let mut lines = open_input(path)?.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == LATENCY_HEADER => {}
        _ => return Err(bad(1, "missing latency header")),
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line.map_err(io_err(path.display()))?;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(bad(n + 2, "expected 4 fields"));
        }
        if f[0] == "overhead" {
            continue;
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(n + 2, "bad number"));
        rows.push((
            f[0].to_string(),
            LatencyStats {
                mean_ms: num(f[1])?,
                std_ms: num(f[2])?,
                p95_ms: num(f[3])?,
            },
        ));
    }
    Ok(rows)
}

fn tolerance(explicit: Option<f64>, config: Option<&Path>) -> Result<f64, CliError> {
    match (explicit, config) {
        (Some(t), _) if t > 0.0 => Ok(t),
        (Some(t), _) => Err(CliError::Config(format!("tolerance must be positive, got {t}"))),
        (None, Some(c)) => Ok(load_run_config(c)?.tolerance_s()),
        (None, None) => Err(CliError::Config("give --tolerance or --config".into())),
    }
}

pub fn evaluate(
    estimates: &Path,
    gt: &Path,
    tol: Option<f64>,
    config: Option<&Path>,
    latency: Option<&Path>,
    report: Option<&Path>,
) -> Result<(), CliError> {
    let tol = tolerance(tol, config)?;
    let est = read_velocities(estimates)?;
    let truth = read_velocities(gt)?;
    let mut r = eval_report(&est, &truth, tol)?;
    if let Some(p) = latency {
        r.latency = read_latency(p)?;
    }
    let text = r.to_text();
    print!("{text}");
    if let Some(p) = report {
        write_file(p, &text)?;
    }
    Ok(())
}

pub fn plot(estimates: &Path, gt: &Path, tol: Option<f64>, config: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let tol = tolerance(tol, config)?;
    let est = read_velocities(estimates)?;
    let truth = read_velocities(gt)?;
    let written = emit_plots(&est, &truth, tol, out).map_err(io_err(out.display()))?;
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

pub fn blur_budget(speeds: &[f64], budgets: &[f64], z: f64, fov_deg: f64, out: Option<&Path>) -> Result<(), CliError> {
    let cam = CameraModel::from_fov(640, 480, fov_deg.to_radians(), z);
    let table = blur_budget_table(speeds, budgets, &cam).map_err(|e| CliError::Config(e.to_string()))?;
    let csv = table.to_csv();
    print!("{csv}");
    if let Some(dir) = out {
        make_dir(dir)?;
        write_file(&dir.join("blur_budget.csv"), &csv)?;
        write_file(&dir.join("blur_budget.svg"), &table.to_svg())?;
    }
    Ok(())
}

pub fn flow_debug(
    config: &Path,
    events: Option<PathBuf>,
    frame: usize,
    stride: usize,
    gain: f64,
    out: &Path,
) -> Result<(), CliError> {
    if stride == 0 {
        return Err(CliError::Config("--stride must be positive".into()));
    }
    let rc = load_run_config(config)?;
    let cfg = &rc.pipeline;
    cfg.validate()?;
    let events_path = events
        .or(rc.paths.events.clone())
        .ok_or_else(|| CliError::Config("no event file: set paths.events or pass --events".into()))?;
    let mut frames = FrameStream::new(open_events(&events_path, &cfg.cam)?, cfg.accumulation.clone())?;
    if let Some((a, b)) = cfg.span_us {
        frames = frames.with_span(a, b);
    }
    let mut frames = frames.skip(frame);
    let (Some(a), Some(b)) = (frames.next().transpose()?, frames.next().transpose()?) else {
        return Err(CliError::Input(format!("the stream has fewer than {} frames", frame + 2)));
    };
    let ia = to_intensity(&a, cfg.accumulation.merge);
    let ib = to_intensity(&b, cfg.accumulation.merge);
    let field = compute_flow(
        &Plane::from_gray(&ia),
        &Plane::from_gray(&ib),
        &cfg.flow,
        cfg.accumulation.window_secs(),
    )
    .map_err(|e| CliError::Config(e.to_string()))?;

    make_dir(out)?;
    let csv_path = out.join(format!("flow_{frame}.csv"));
    let mut w = create(&csv_path)?;
    write_flow_csv(&mut w, &field)
        .and_then(|_| w.flush())
        .map_err(io_err(csv_path.display()))?;
    write_file(&out.join(format!("quiver_{frame}.svg")), &quiver_svg(&field, Some(&ia), stride, gain))?;
    let mean = field.mean_interior(cfg.margin);
    match mean {
        Some((u, v)) => println!(
            "frame {frame}: {} of {} vectors valid, mean interior flow ({u:.3}, {v:.3}) px",
            field.valid_count(),
            field.width * field.height
        ),
        None => println!("frame {frame}: no valid flow vectors"),
    }
    Ok(())
}
