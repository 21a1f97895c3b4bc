//! Offline analysis of a snapshot set: per-snapshot energy / index /
//! interface tables and per-pair velocity tables.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use mvac::field::{det_sign_field, energy, index_pair};
use mvac::grid::Grid;
use mvac::interface::{
    extract_interface_from_signs, measure_velocity, phase_jump, predict_velocity, InterfaceCurve,
    InterfaceError, VelocityScale,
};
use mvac::io::{format_f64, read_snapshot_file, write_metrics_csv, MetricsRecord, Snapshot, SnapshotError};
use mvac::spectral::{SpectralError, SpectralWorkspace};

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error("no snapshot files (*.snap) found in {0}")]
    NoSnapshots(PathBuf),
    #[error("snapshot {path} header (side {side}, n {n}, scheme {scheme}) differs from the first snapshot")]
    HeaderMismatch { path: PathBuf, side: usize, n: usize, scheme: String },
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy)]
pub struct AnalyzeToggles {
    pub interface: bool,
    pub index: bool,
    pub energy: bool,
}

impl Default for AnalyzeToggles {
    fn default() -> Self {
        AnalyzeToggles { interface: true, index: true, energy: true }
    }
}

fn sorted_snapshot_paths(dir: &Path) -> Result<Vec<PathBuf>, AnalyzeError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().map(|x| x == "snap").unwrap_or(false))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(AnalyzeError::NoSnapshots(dir.to_path_buf()));
    }
    Ok(paths)
}

fn interface_curves(snapshot: &Snapshot) -> Vec<InterfaceCurve> {
    match det_sign_field(&snapshot.field) {
        Ok(signs) => extract_interface_from_signs(&signs).unwrap_or_default(),
        Err(_) => Vec::new(),
    }
}

/// Analyze every snapshot in `dir` and write `metrics.csv`,
/// `interfaces.csv` and `velocity.csv` into `out_dir`.
pub fn analyze_directory(
    dir: &Path,
    out_dir: &Path,
    toggles: AnalyzeToggles,
    delta_override: Option<f64>,
) -> Result<(), AnalyzeError> {
    let paths = sorted_snapshot_paths(dir)?;
    let mut snapshots = Vec::with_capacity(paths.len());
    for path in &paths {
        let snap = read_snapshot_file(path)?;
        if let Some(first) = snapshots.first() {
            let (f, _): &(Snapshot, _) = first;
            if !f.header_matches(&snap) {
                return Err(AnalyzeError::HeaderMismatch {
                    path: path.clone(),
                    side: snap.field.grid().points_per_side(),
                    n: snap.field.matrix_dim(),
                    scheme: snap.scheme.name().to_string(),
                });
            }
        }
        snapshots.push((snap, path.clone()));
    }

    let grid = snapshots[0].0.field.grid();
    let h = grid.spacing();
    let epsilon = snapshots[0].0.epsilon;
    // the projection scheme stores epsilon = NaN: orthogonal iterates carry
    // no potential energy, so a unit epsilon only labels the column
    let energy_eps = if epsilon.is_finite() { epsilon } else { 1.0 };
    let delta = delta_override
        .unwrap_or_else(|| (3.0 * h).max(if epsilon.is_finite() { 3.0 * epsilon } else { 0.0 }));
    let ws = if toggles.energy { Some(SpectralWorkspace::new(grid)?) } else { None };

    std::fs::create_dir_all(out_dir)?;

    let mut records = Vec::new();
    let mut curves_by_snapshot: Vec<(f64, Vec<InterfaceCurve>)> = Vec::new();

    let mut interfaces_csv = BufWriter::new(File::create(out_dir.join("interfaces.csv"))?);
    writeln!(
        interfaces_csv,
        "snapshot,time,curve,vertices,length,area,mean_position,winding_x1,winding_x2,mean_curvature,mean_phase_jump"
    )?;

    for (idx, (snap, _)) in snapshots.iter().enumerate() {
        let mut record = MetricsRecord { step: idx, time: snap.time, ..Default::default() };
        if let Some(ws) = &ws {
            if let Ok(e) = energy(&snap.field, energy_eps, ws) {
                record.energy_dirichlet = Some(e.dirichlet);
                record.energy_potential = Some(e.potential);
                record.energy_total = Some(e.total);
            }
        }
        if toggles.index {
            if let Ok(pair) = index_pair(&snap.field) {
                record.index_m = Some(pair.m);
                record.index_k = Some(pair.k);
            }
        }
        if toggles.interface {
            let mut curves = interface_curves(snap);
            record.interface_count = Some(curves.len());
            if !curves.is_empty() {
                record.mean_radius = Some(
                    curves.iter().map(|c| c.mean_position()).sum::<f64>() / curves.len() as f64,
                );
            }
            for (ci, curve) in curves.iter_mut().enumerate() {
                let jump_mean = if snap.field.matrix_dim() == 2 {
                    phase_jump(&snap.field, curve, delta)
                        .ok()
                        .map(|j| j.iter().sum::<f64>() / j.len().max(1) as f64)
                } else {
                    None
                };
                let mean_curv =
                    curve.curvature.iter().sum::<f64>() / curve.curvature.len().max(1) as f64;
                writeln!(
                    interfaces_csv,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    idx,
                    format_f64(snap.time),
                    ci,
                    curve.len(),
                    format_f64(curve.total_length()),
                    curve.signed_area().map(format_f64).unwrap_or_default(),
                    format_f64(curve.mean_position()),
                    curve.winding.0,
                    curve.winding.1,
                    format_f64(mean_curv),
                    jump_mean.map(format_f64).unwrap_or_default(),
                )?;
            }
            curves_by_snapshot.push((snap.time, curves));
        }
        records.push(record);
    }
    interfaces_csv.flush()?;

    let mut metrics_csv = BufWriter::new(File::create(out_dir.join("metrics.csv"))?);
    write_metrics_csv(&records, &mut metrics_csv)?;
    metrics_csv.flush()?;

    let mut velocity_csv = BufWriter::new(File::create(out_dir.join("velocity.csv"))?);
    writeln!(
        velocity_csv,
        "pair,t0,t1,curve,vertex,x1,x2,vn_measured,vn_predicted_fast,vn_predicted_slow"
    )?;
    if toggles.interface {
        for (pair_idx, window) in curves_by_snapshot.windows(2).enumerate() {
            let (t0, earlier) = &window[0];
            let (t1, later) = &window[1];
            if earlier.is_empty() || t1 <= t0 {
                continue;
            }
            let measured = match measure_velocity(earlier, later, t1 - t0, h) {
                Ok(v) => v,
                Err(InterfaceError::CorrespondenceFailure { .. }) => continue,
                Err(_) => continue,
            };
            for (ci, curve) in earlier.iter().enumerate() {
                let fast = predict_velocity(curve, None, VelocityScale::Fast, 1.0);
                let slow = curve.eta_plus.as_ref().map(|_| ()).and_then(|_| {
                    // the jump was already folded into interfaces.csv; for the
                    // per-vertex table recompute it on a fresh clone
                    let mut c = curve.clone();
                    let st = &snapshots[pair_idx].0;
                    phase_jump(&st.field, &mut c, delta)
                        .ok()
                        .map(|j| predict_velocity(&c, Some(&j), VelocityScale::Slow, energy_eps))
                });
                for (vi, vn) in measured[ci].iter().enumerate() {
                    let v = curve.vertices[vi];
                    writeln!(
                        velocity_csv,
                        "{},{},{},{},{},{},{},{},{},{}",
                        pair_idx,
                        format_f64(*t0),
                        format_f64(*t1),
                        ci,
                        vi,
                        format_f64(v[0]),
                        format_f64(v[1]),
                        vn.map(format_f64).unwrap_or_default(),
                        format_f64(fast[vi]),
                        slow.as_ref().map(|s| format_f64(s[vi])).unwrap_or_default(),
                    )?;
                }
            }
        }
    }
    velocity_csv.flush()?;
    Ok(())
}

/// Grid accessor reused by the renderer subcommand.
pub fn snapshot_grid(snapshot: &Snapshot) -> Grid {
    snapshot.field.grid()
}
