//! Drive one run end to end: generate the initial condition, run the chosen
//! scheme, write snapshots, metrics, optional frames, and a manifest with
//! content hashes and the fully resolved config.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use mvac::asymptotics::{run_on_diffusion, AsymptoticsError};
use mvac::field::{
    det_sign_field, energy, index_pair, project_to_orthogonal, FieldError, MatrixField,
};
use mvac::grid::Grid;
use mvac::interface::{extract_interface_from_signs, InterfaceError};
use mvac::io::{
    render_ppm, write_metrics_csv, write_snapshot_file, MetricsRecord, RenderError, RenderStyle,
    SchemeTag, Snapshot, SnapshotError,
};
use mvac::mbo::{run_mbo, MboConfig, MboError};
use mvac::pde::{run_pde, PdeConfig, PdeError};
use mvac::spectral::{SpectralError, SpectralWorkspace};

use crate::config::{ConfigError, RunConfig, Scheme};
use crate::initial::generate_initial;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Grid(#[from] mvac::grid::GridError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Mbo(#[from] MboError),
    #[error(transparent)]
    Pde(#[from] PdeError),
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
    #[error(transparent)]
    Interface(#[from] InterfaceError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("run did not converge within {max_iters} iterations (last increment {last_increment:e}); artifacts were still written")]
    NotConverged { max_iters: usize, last_increment: f64 },
}

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub scheme: String,
    pub steps: usize,
    pub converged: Option<bool>,
    pub final_time: f64,
    pub final_increment: Option<f64>,
    pub final_energy: Option<f64>,
    pub final_index: Option<(i64, i64)>,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub summary: RunSummary,
    pub outputs: Vec<OutputEntry>,
}

pub struct RunOutputs {
    pub dir: PathBuf,
    pub manifest_path: PathBuf,
    /// Set when the projection scheme hit its iteration cap; artifacts are
    /// complete but the exit status must be nonzero.
    pub not_converged: Option<(usize, f64)>,
}

fn hash_file(path: &Path) -> std::io::Result<(String, u64)> {
    let bytes = fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok((hex::encode(digest), bytes.len() as u64))
}

struct OutputCollector {
    dir: PathBuf,
    entries: Vec<OutputEntry>,
}

impl OutputCollector {
    fn new(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutputCollector { dir: dir.to_path_buf(), entries: Vec::new() })
    }

    fn register(&mut self, name: &str) -> std::io::Result<()> {
        let (sha256, bytes) = hash_file(&self.dir.join(name))?;
        self.entries.push(OutputEntry { path: name.to_string(), sha256, bytes });
        Ok(())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

/// Interface/index diagnostics for one recorded state, honoring the
/// analysis toggles.
fn analyze_state(cfg: &RunConfig, field: &MatrixField, record: &mut MetricsRecord) {
    if cfg.analyze_interface {
        if let Ok(signs) = det_sign_field(field) {
            match extract_interface_from_signs(&signs) {
                Ok(curves) => {
                    record.interface_count = Some(curves.len());
                    if !curves.is_empty() {
                        let mean = curves.iter().map(|c| c.mean_position()).sum::<f64>()
                            / curves.len() as f64;
                        record.mean_radius = Some(mean);
                    }
                }
                Err(InterfaceError::EmptyInterface) => {
                    record.interface_count = Some(0);
                }
                Err(_) => {}
            }
        }
    }
    if cfg.analyze_index {
        if let Ok(pair) = index_pair(field) {
            record.index_m = Some(pair.m);
            record.index_k = Some(pair.k);
        }
    }
}

fn write_frame(
    collector: &mut OutputCollector,
    field: &MatrixField,
    step: usize,
) -> Result<(), RunError> {
    let style = RenderStyle { raster_size: field.grid().points_per_side(), arrow_stride: 16 };
    let ppm = render_ppm(field, &style)?;
    let name = format!("frame_{step:06}.ppm");
    fs::write(collector.path(&name), ppm)?;
    collector.register(&name)?;
    Ok(())
}

fn snapshot_name(step: usize) -> String {
    format!("snap_{step:06}.snap")
}

/// Generate the configured initial condition and write it (plus an optional
/// frame) to the output directory; the `init` subcommand.
pub fn init_from_config(cfg: &RunConfig, quiet: bool) -> Result<RunOutputs, RunError> {
    cfg.validate()?;
    let grid = Grid::new(cfg.grid_points)?;
    let field =
        generate_initial(&cfg.initial_condition, grid, cfg.matrix_dim, cfg.seed.unwrap_or(0))?;
    let scheme = cfg.scheme()?;
    let mut collector = OutputCollector::new(cfg.output_dir())?;
    let tag = match scheme {
        Scheme::Mbo => SchemeTag::Mbo,
        Scheme::Pde => SchemeTag::Pde,
        Scheme::Ondiff => SchemeTag::OnDiffusion,
    };
    let snap = Snapshot {
        time: 0.0,
        epsilon: cfg.epsilon.unwrap_or(f64::NAN),
        scheme: tag,
        field,
    };
    let name = snapshot_name(0);
    write_snapshot_file(&snap, &collector.path(&name))?;
    collector.register(&name)?;
    if cfg.render_frames {
        write_frame(&mut collector, &snap.field, 0)?;
    }
    let manifest = Manifest {
        config: cfg.clone(),
        summary: RunSummary {
            scheme: scheme.name().to_string(),
            steps: 0,
            converged: None,
            final_time: 0.0,
            final_increment: None,
            final_energy: None,
            final_index: index_pair(&snap.field).ok().map(|p| (p.m, p.k)),
        },
        outputs: collector.entries,
    };
    let manifest_path = cfg.output_dir().join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    if !quiet {
        println!("initial state written to {}", cfg.output_dir().display());
    }
    Ok(RunOutputs { dir: cfg.output_dir().to_path_buf(), manifest_path, not_converged: None })
}

/// Run the configured scheme and write every artifact; the `run`
/// subcommand.
pub fn run_from_config(cfg: &RunConfig, quiet: bool) -> Result<RunOutputs, RunError> {
    cfg.validate()?;
    let grid = Grid::new(cfg.grid_points)?;
    let a0 =
        generate_initial(&cfg.initial_condition, grid, cfg.matrix_dim, cfg.seed.unwrap_or(0))?;
    let scheme = cfg.scheme()?;
    let mut collector = OutputCollector::new(cfg.output_dir())?;

    let (records, summary, not_converged) = match scheme {
        Scheme::Mbo => run_mbo_scheme(cfg, &a0, grid, &mut collector, quiet)?,
        Scheme::Pde => run_pde_scheme(cfg, &a0, grid, &mut collector, quiet)?,
        Scheme::Ondiff => run_ondiff_scheme(cfg, &a0, grid, &mut collector, quiet)?,
    };

    let metrics_path = collector.path("metrics.csv");
    let mut writer = BufWriter::new(File::create(&metrics_path)?);
    write_metrics_csv(&records, &mut writer)?;
    writer.flush()?;
    collector.register("metrics.csv")?;

    let manifest = Manifest { config: cfg.clone(), summary, outputs: collector.entries };
    let manifest_path = cfg.output_dir().join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    if !quiet {
        println!("run artifacts written to {}", cfg.output_dir().display());
    }
    Ok(RunOutputs { dir: cfg.output_dir().to_path_buf(), manifest_path, not_converged })
}

type SchemeResult = (Vec<MetricsRecord>, RunSummary, Option<(usize, f64)>);

fn run_mbo_scheme(
    cfg: &RunConfig,
    a0: &MatrixField,
    _grid: Grid,
    collector: &mut OutputCollector,
    quiet: bool,
) -> Result<SchemeResult, RunError> {
    let tau = cfg.tau.unwrap();
    let mbo_cfg = MboConfig::new(tau, cfg.tol.unwrap(), cfg.max_iters.unwrap(), cfg.record_every)?;
    let ws = SpectralWorkspace::with_cached_tau(a0.grid(), tau)?;
    let (trajectory, not_converged) = match run_mbo(a0, &mbo_cfg, &ws) {
        Ok(t) => (t, None),
        Err(MboError::MaxItersExceeded { max_iters, last_increment, trajectory }) => {
            (*trajectory, Some((max_iters, last_increment)))
        }
        Err(other) => return Err(other.into()),
    };
    let mut records = Vec::new();
    for snap in &trajectory.snapshots {
        let name = snapshot_name(snap.step);
        write_snapshot_file(
            &Snapshot {
                time: snap.time,
                epsilon: f64::NAN,
                scheme: SchemeTag::Mbo,
                field: snap.field.field().clone(),
            },
            &collector.path(&name),
        )?;
        collector.register(&name)?;
        if cfg.render_frames {
            write_frame(collector, &snap.field, snap.step)?;
        }
        let mut record = MetricsRecord {
            step: snap.step,
            time: snap.time,
            increment: snap.step.checked_sub(1).and_then(|s| trajectory.increments.get(s)).copied(),
            lyapunov: trajectory.lyapunov.get(snap.step).copied(),
            ..Default::default()
        };
        analyze_state(cfg, &snap.field, &mut record);
        records.push(record);
        if !quiet {
            println!(
                "step {:>6}  t = {:.6}  increment = {}",
                snap.step,
                snap.time,
                record_increment(&records)
            );
        }
    }
    let last = trajectory.snapshots.last().expect("trajectory has the final iterate");
    let summary = RunSummary {
        scheme: "mbo".into(),
        steps: trajectory.iterations,
        converged: Some(trajectory.converged),
        final_time: last.time,
        final_increment: trajectory.increments.last().copied(),
        final_energy: None,
        final_index: index_pair(&last.field).ok().map(|p| (p.m, p.k)),
    };
    Ok((records, summary, not_converged))
}

fn record_increment(records: &[MetricsRecord]) -> String {
    records
        .last()
        .and_then(|r| r.increment)
        .map(|v| format!("{v:.3e}"))
        .unwrap_or_else(|| "-".into())
}

fn run_pde_scheme(
    cfg: &RunConfig,
    a0: &MatrixField,
    grid: Grid,
    collector: &mut OutputCollector,
    quiet: bool,
) -> Result<SchemeResult, RunError> {
    let epsilon = cfg.epsilon.unwrap();
    let pde_cfg = PdeConfig::new(epsilon, cfg.dt.unwrap(), cfg.t_end.unwrap(), cfg.record_every)?;
    let ws = SpectralWorkspace::new(grid)?;
    let trajectory = run_pde(a0, &pde_cfg, &ws)?;
    let mut records = Vec::new();
    for (snap, e) in trajectory.snapshots.iter().zip(&trajectory.energies) {
        let name = snapshot_name(snap.step);
        write_snapshot_file(
            &Snapshot {
                time: snap.time,
                epsilon,
                scheme: SchemeTag::Pde,
                field: snap.field.clone(),
            },
            &collector.path(&name),
        )?;
        collector.register(&name)?;
        if cfg.render_frames {
            write_frame(collector, &snap.field, snap.step)?;
        }
        let mut record = MetricsRecord {
            step: snap.step,
            time: snap.time,
            energy_dirichlet: cfg.analyze_energy.then_some(e.dirichlet),
            energy_potential: cfg.analyze_energy.then_some(e.potential),
            energy_total: cfg.analyze_energy.then_some(e.total),
            ..Default::default()
        };
        analyze_state(cfg, &snap.field, &mut record);
        records.push(record);
        if !quiet {
            println!("step {:>6}  t = {:.6}  E = {:.9}", snap.step, snap.time, e.total);
        }
    }
    let last = trajectory.snapshots.last().expect("at least the initial state");
    let summary = RunSummary {
        scheme: "pde".into(),
        steps: trajectory.steps,
        converged: None,
        final_time: last.time,
        final_increment: None,
        final_energy: trajectory.energies.last().map(|e| e.total),
        final_index: index_pair(&last.field).ok().map(|p| (p.m, p.k)),
    };
    Ok((records, summary, None))
}

fn run_ondiff_scheme(
    cfg: &RunConfig,
    a0: &MatrixField,
    grid: Grid,
    collector: &mut OutputCollector,
    quiet: bool,
) -> Result<SchemeResult, RunError> {
    let epsilon = cfg.epsilon.unwrap();
    let ws = SpectralWorkspace::new(grid)?;
    let b0 = project_to_orthogonal(a0)?;
    let trajectory =
        run_on_diffusion(&b0, cfg.dt.unwrap(), cfg.t_end.unwrap(), cfg.record_every, false, &ws)?;
    let mut records = Vec::new();
    for snap in &trajectory.snapshots {
        let name = snapshot_name(snap.step);
        write_snapshot_file(
            &Snapshot {
                time: snap.time,
                epsilon,
                scheme: SchemeTag::OnDiffusion,
                field: snap.field.field().clone(),
            },
            &collector.path(&name),
        )?;
        collector.register(&name)?;
        if cfg.render_frames {
            write_frame(collector, &snap.field, snap.step)?;
        }
        let mut record = MetricsRecord { step: snap.step, time: snap.time, ..Default::default() };
        if cfg.analyze_energy {
            let e = energy(&snap.field, epsilon, &ws)?;
            record.energy_dirichlet = Some(e.dirichlet);
            record.energy_potential = Some(e.potential);
            record.energy_total = Some(e.total);
        }
        analyze_state(cfg, &snap.field, &mut record);
        records.push(record);
        if !quiet {
            println!("step {:>6}  t = {:.6}", snap.step, snap.time);
        }
    }
    let last = trajectory.snapshots.last().expect("at least the initial state");
    let final_energy = records.last().and_then(|r| r.energy_total);
    let summary = RunSummary {
        scheme: "ondiff".into(),
        steps: trajectory.steps,
        converged: None,
        final_time: last.time,
        final_increment: None,
        final_energy,
        final_index: index_pair(&last.field).ok().map(|p| (p.m, p.k)),
    };
    Ok((records, summary, None))
}

impl From<serde_json::Error> for RunError {
    fn from(e: serde_json::Error) -> Self {
        RunError::Io(std::io::Error::other(e))
    }
}
