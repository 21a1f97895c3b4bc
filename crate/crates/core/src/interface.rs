//! Interface extraction and measurement: marching-squares contours of the
//! determinant-sign (or any scalar) field on the periodic grid, curvature
//! along the extracted curves, side-phase sampling with the tangential
//! jump, and normal-velocity measurement between snapshots.
//!
//! Conventions: curves are oriented with the positive region on the left,
//! i.e. counterclockwise around det-positive regions; the normal
//! `n = (t2, -t1)` points out of the det-positive region; curvature is
//! positive for a shrinking det-positive disk.

use std::collections::HashMap;

use thiserror::Error;

use crate::asymptotics::surface_tension;
use crate::field::{wrap_angle, FieldError, MatrixField};
use crate::grid::{ScalarField, SignField};

#[derive(Debug, Error)]
pub enum InterfaceError {
    #[error("one phase is absent; there is no interface to extract")]
    EmptyInterface,
    #[error("curve count changed between snapshots ({earlier} -> {later}); correspondence is undefined")]
    CorrespondenceFailure { earlier: usize, later: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Closed polyline on the torus. Vertices are stored unwrapped (continuous
/// coordinates, first vertex inside the fundamental domain); `winding` is
/// the integer translation accumulated around the loop, zero for
/// contractible curves.
#[derive(Debug, Clone)]
pub struct InterfaceCurve {
    pub vertices: Vec<[f64; 2]>,
    pub winding: (i32, i32),
    /// Cumulative arclength per vertex, starting at 0.
    pub arclength: Vec<f64>,
    /// Signed curvature per vertex (three-point circumcircle on smoothed
    /// vertices).
    pub curvature: Vec<f64>,
    /// Side phases at `+delta n` / `-delta n`, filled by [`phase_jump`].
    pub eta_plus: Option<Vec<f64>>,
    pub eta_minus: Option<Vec<f64>>,
}

impl InterfaceCurve {
    /// Build a curve from an ordered closed vertex loop (unwrapped
    /// coordinates; the closing edge from the last vertex back to
    /// `first + winding` is implicit).
    pub fn from_points(vertices: Vec<[f64; 2]>, winding: (i32, i32)) -> Self {
        let mut curve = InterfaceCurve {
            vertices,
            winding,
            arclength: Vec::new(),
            curvature: Vec::new(),
            eta_plus: None,
            eta_minus: None,
        };
        curve.dedupe();
        curve.arclength = cumulative_arclength(&curve.vertices);
        curve.curvature = polyline_curvature(&curve.vertices, curve.winding);
        curve
    }

    fn dedupe(&mut self) {
        let mut keep: Vec<[f64; 2]> = Vec::with_capacity(self.vertices.len());
        for v in self.vertices.drain(..) {
            if let Some(last) = keep.last() {
                if (v[0] - last[0]).abs() < 1e-12 && (v[1] - last[1]).abs() < 1e-12 {
                    continue;
                }
            }
            keep.push(v);
        }
        // drop a duplicated closing vertex
        if keep.len() > 1 && self.windingless_closure(&keep) {
            keep.pop();
        }
        self.vertices = keep;
    }

    fn windingless_closure(&self, pts: &[[f64; 2]]) -> bool {
        let first = pts[0];
        let last = pts[pts.len() - 1];
        let cx = first[0] + self.winding.0 as f64;
        let cy = first[1] + self.winding.1 as f64;
        (last[0] - cx).abs() < 1e-12 && (last[1] - cy).abs() < 1e-12
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_wrapping(&self) -> bool {
        self.winding != (0, 0)
    }

    /// Offset that the closing edge must add to the first vertex.
    fn closure_offset(&self) -> [f64; 2] {
        [self.winding.0 as f64, self.winding.1 as f64]
    }

    /// Neighbor vertex with periodic unwrapped indexing.
    fn vertex_cyclic(&self, k: isize) -> [f64; 2] {
        let m = self.vertices.len() as isize;
        let off = self.closure_offset();
        let wraps = (k.rem_euclid(m) - k) / m; // negative for k >= m
        let idx = k.rem_euclid(m) as usize;
        let shift = -(wraps as f64);
        [self.vertices[idx][0] + shift * off[0], self.vertices[idx][1] + shift * off[1]]
    }

    /// Total length including the closing edge.
    pub fn total_length(&self) -> f64 {
        let last = *self.arclength.last().unwrap_or(&0.0);
        let end = self.vertices[self.vertices.len() - 1];
        let close = self.vertex_cyclic(self.vertices.len() as isize);
        last + dist(end, close)
    }

    /// Shoelace area; positive for counterclockwise (det-positive inside).
    /// `None` for torus-wrapping curves.
    pub fn signed_area(&self) -> Option<f64> {
        if self.is_wrapping() {
            return None;
        }
        let m = self.vertices.len();
        let mut sum = 0.0;
        for k in 0..m {
            let a = self.vertices[k];
            let b = self.vertices[(k + 1) % m];
            sum += a[0] * b[1] - b[0] * a[1];
        }
        Some(0.5 * sum)
    }

    /// Mean of the unwrapped vertices.
    pub fn centroid(&self) -> [f64; 2] {
        let m = self.vertices.len() as f64;
        let mut c = [0.0, 0.0];
        for v in &self.vertices {
            c[0] += v[0];
            c[1] += v[1];
        }
        [c[0] / m, c[1] / m]
    }

    /// Mean distance to the centroid (meaningful for contractible curves).
    pub fn mean_radius(&self) -> f64 {
        let c = self.centroid();
        let m = self.vertices.len() as f64;
        self.vertices.iter().map(|v| dist(*v, c)).sum::<f64>() / m
    }

    /// Mean-radius for contractible curves, transverse mean coordinate for
    /// wrapping curves (the quantity that actually moves).
    pub fn mean_position(&self) -> f64 {
        match self.winding {
            (0, 0) => self.mean_radius(),
            (w, 0) if w != 0 => self.centroid()[1],
            (0, _) => self.centroid()[0],
            _ => self.mean_radius(),
        }
    }

    /// Unit tangents from smoothed centered differences.
    pub fn tangents(&self) -> Vec<[f64; 2]> {
        let smoothed = self.smoothed_vertices();
        let m = smoothed.len() as isize;
        let off = self.closure_offset();
        let at = |k: isize| -> [f64; 2] {
            let wraps = (k.rem_euclid(m) - k) / m;
            let idx = k.rem_euclid(m) as usize;
            let shift = -(wraps as f64);
            [smoothed[idx][0] + shift * off[0], smoothed[idx][1] + shift * off[1]]
        };
        (0..m)
            .map(|k| {
                let a = at(k - 1);
                let b = at(k + 1);
                let d = [b[0] - a[0], b[1] - a[1]];
                let norm = d[0].hypot(d[1]).max(1e-300);
                [d[0] / norm, d[1] / norm]
            })
            .collect()
    }

    /// Unit normals pointing out of the positive region (right of the
    /// tangent).
    pub fn normals(&self) -> Vec<[f64; 2]> {
        self.tangents().iter().map(|t| [t[1], -t[0]]).collect()
    }

    /// Total signed turning of the tangent divided by `2 pi`; `+1` for a
    /// contractible counterclockwise loop, `0` for straight wrapping lines.
    pub fn turning_number(&self) -> f64 {
        let tangents = self.tangents();
        let m = tangents.len();
        let mut total = 0.0;
        for k in 0..m {
            let a = tangents[k];
            let b = tangents[(k + 1) % m];
            total += wrap_angle(b[1].atan2(b[0]) - a[1].atan2(a[0]));
        }
        total / (2.0 * std::f64::consts::PI)
    }

    fn smoothed_vertices(&self) -> Vec<[f64; 2]> {
        smoothed_closed(&self.vertices, self.winding)
    }

    /// Vertices mapped back into the fundamental domain.
    pub fn wrapped_vertices(&self) -> Vec<[f64; 2]> {
        self.vertices.iter().map(|v| [wrap_coord(v[0]), wrap_coord(v[1])]).collect()
    }
}

#[inline]
fn wrap_coord(x: f64) -> f64 {
    x - (x + 0.5).floor()
}

#[inline]
fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[inline]
fn min_image(d: f64) -> f64 {
    d - d.round()
}

fn cumulative_arclength(vertices: &[[f64; 2]]) -> Vec<f64> {
    let mut out = vec![0.0; vertices.len()];
    let mut acc = 0.0;
    for k in 1..vertices.len() {
        acc += dist(vertices[k - 1], vertices[k]);
        out[k] = acc;
    }
    out
}

fn smoothed_closed(vertices: &[[f64; 2]], winding: (i32, i32)) -> Vec<[f64; 2]> {
    let m = vertices.len();
    if m < 3 {
        return vertices.to_vec();
    }
    let off = [winding.0 as f64, winding.1 as f64];
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let prev = if k == 0 {
            [vertices[m - 1][0] - off[0], vertices[m - 1][1] - off[1]]
        } else {
            vertices[k - 1]
        };
        let next = if k == m - 1 {
            [vertices[0][0] + off[0], vertices[0][1] + off[1]]
        } else {
            vertices[k + 1]
        };
        out.push([
            0.25 * prev[0] + 0.5 * vertices[k][0] + 0.25 * next[0],
            0.25 * prev[1] + 0.5 * vertices[k][1] + 0.25 * next[1],
        ]);
    }
    out
}

/// Signed curvature of a closed polyline by the three-point circumcircle
/// formula after one smoothing pass; positive where the curve turns left
/// (counterclockwise).
pub fn polyline_curvature(vertices: &[[f64; 2]], winding: (i32, i32)) -> Vec<f64> {
    let m = vertices.len();
    if m < 3 {
        return vec![0.0; m];
    }
    let pts = smoothed_closed(vertices, winding);
    let off = [winding.0 as f64, winding.1 as f64];
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let prev = if k == 0 { [pts[m - 1][0] - off[0], pts[m - 1][1] - off[1]] } else { pts[k - 1] };
        let next = if k == m - 1 { [pts[0][0] + off[0], pts[0][1] + off[1]] } else { pts[k + 1] };
        let a = [pts[k][0] - prev[0], pts[k][1] - prev[1]];
        let b = [next[0] - pts[k][0], next[1] - pts[k][1]];
        let cross = a[0] * b[1] - a[1] * b[0];
        let la = a[0].hypot(a[1]);
        let lb = b[0].hypot(b[1]);
        let lc = (a[0] + b[0]).hypot(a[1] + b[1]);
        let denom = la * lb * lc;
        out.push(if denom > 1e-300 { 2.0 * cross / denom } else { 0.0 });
    }
    out
}

// ---------------------------------------------------------------------------
// marching squares
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct EdgeId {
    horizontal: bool,
    i: u32,
    j: u32,
}

/// Marching-squares contour of the bilinear interpolant at level zero on
/// the periodic grid. Curves are oriented with the positive side on the
/// left; saddle cells are resolved by the average-corner rule.
pub fn extract_interface(field: &ScalarField) -> Result<Vec<InterfaceCurve>, InterfaceError> {
    let grid = field.grid;
    let side = grid.points_per_side();
    let positive = |i: usize, j: usize| field.at(i, j) > 0.0;

    let any_pos = field.data.iter().any(|&v| v > 0.0);
    let any_neg = field.data.iter().any(|&v| !(v > 0.0));
    if !any_pos || !any_neg {
        return Err(InterfaceError::EmptyInterface);
    }

    // crossing coordinate on an edge, canonical for both adjacent cells
    let crossing = |edge: EdgeId| -> [f64; 2] {
        let (i, j) = (edge.i as usize, edge.j as usize);
        let a = field.at(i, j);
        let (x0, y0) = grid.coord(i, j);
        let h = grid.spacing();
        if edge.horizontal {
            let b = field.at((i + 1) % side, j);
            let t = (a / (a - b)).clamp(1e-9, 1.0 - 1e-9);
            [x0 + t * h, y0]
        } else {
            let b = field.at(i, (j + 1) % side);
            let t = (a / (a - b)).clamp(1e-9, 1.0 - 1e-9);
            [x0, y0 + t * h]
        }
    };

    let mut saddles = 0usize;
    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    for j in 0..side {
        for i in 0..side {
            let ip = (i + 1) % side;
            let jp = (j + 1) % side;
            let code = (positive(i, j) as u8)
                | (positive(ip, j) as u8) << 1
                | (positive(ip, jp) as u8) << 2
                | (positive(i, jp) as u8) << 3;
            if code == 0 || code == 15 {
                continue;
            }
            let s = EdgeId { horizontal: true, i: i as u32, j: j as u32 };
            let e = EdgeId { horizontal: false, i: ip as u32, j: j as u32 };
            let n = EdgeId { horizontal: true, i: i as u32, j: jp as u32 };
            let w = EdgeId { horizontal: false, i: i as u32, j: j as u32 };
            match code {
                1 => segments.push((s, w)),
                2 => segments.push((e, s)),
                3 => segments.push((e, w)),
                4 => segments.push((n, e)),
                6 => segments.push((n, s)),
                7 => segments.push((n, w)),
                8 => segments.push((w, n)),
                9 => segments.push((s, n)),
                11 => segments.push((e, n)),
                12 => segments.push((w, e)),
                13 => segments.push((s, e)),
                14 => segments.push((w, s)),
                5 | 10 => {
                    saddles += 1;
                    let center = 0.25
                        * (field.at(i, j) + field.at(ip, j) + field.at(ip, jp) + field.at(i, jp));
                    if code == 5 {
                        if center > 0.0 {
                            segments.push((s, e));
                            segments.push((n, w));
                        } else {
                            segments.push((s, w));
                            segments.push((n, e));
                        }
                    } else if center > 0.0 {
                        segments.push((w, s));
                        segments.push((e, n));
                    } else {
                        segments.push((e, s));
                        segments.push((w, n));
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    if saddles > 0 {
        log::debug!("resolved {saddles} saddle cells by the average-corner rule");
    }

    let mut by_start: HashMap<EdgeId, usize> = HashMap::with_capacity(segments.len());
    for (idx, (start, _)) in segments.iter().enumerate() {
        let clash = by_start.insert(*start, idx);
        debug_assert!(clash.is_none(), "inconsistent contour orientation at {start:?}");
    }

    let mut visited = vec![false; segments.len()];
    let mut curves = Vec::new();
    for first in 0..segments.len() {
        if visited[first] {
            continue;
        }
        let mut loop_pts: Vec<[f64; 2]> = Vec::new();
        let mut cur = first;
        let start_edge = segments[first].0;
        let mut prev_canonical = crossing(start_edge);
        let mut prev_unwrapped = prev_canonical;
        loop {
            visited[cur] = true;
            loop_pts.push(prev_unwrapped);
            let next_edge = segments[cur].1;
            let canon = crossing(next_edge);
            let step = [
                min_image(canon[0] - prev_canonical[0]),
                min_image(canon[1] - prev_canonical[1]),
            ];
            prev_unwrapped = [prev_unwrapped[0] + step[0], prev_unwrapped[1] + step[1]];
            prev_canonical = canon;
            if next_edge == start_edge {
                break;
            }
            cur = *by_start
                .get(&next_edge)
                .expect("contour walk left the segment set; broken case table");
        }
        let w1 = (prev_unwrapped[0] - loop_pts[0][0]).round() as i32;
        let w2 = (prev_unwrapped[1] - loop_pts[0][1]).round() as i32;
        curves.push(InterfaceCurve::from_points(loop_pts, (w1, w2)));
    }
    Ok(curves)
}

/// Contour of a determinant-sign field: one majority-filter pass first, then
/// the scalar extraction at level zero.
pub fn extract_interface_from_signs(signs: &SignField) -> Result<Vec<InterfaceCurve>, InterfaceError> {
    let filtered = signs.majority_filtered();
    extract_interface(&filtered.to_scalar())
}

// ---------------------------------------------------------------------------
// phase sampling
// ---------------------------------------------------------------------------

fn bilinear_entry(field: &MatrixField, r: usize, c: usize, x1: f64, x2: f64) -> f64 {
    let grid = field.grid();
    let side = grid.points_per_side();
    let h = grid.spacing();
    let u = (wrap_coord(x1) + 0.5) / h;
    let v = (wrap_coord(x2) + 0.5) / h;
    let i0 = (u.floor() as usize).min(side - 1);
    let j0 = (v.floor() as usize).min(side - 1);
    let fu = u - i0 as f64;
    let fv = v - j0 as f64;
    let i1 = (i0 + 1) % side;
    let j1 = (j0 + 1) % side;
    field.entry(i0, j0, r, c) * (1.0 - fu) * (1.0 - fv)
        + field.entry(i1, j0, r, c) * fu * (1.0 - fv)
        + field.entry(i0, j1, r, c) * (1.0 - fu) * fv
        + field.entry(i1, j1, r, c) * fu * fv
}

fn sample_phase(field: &MatrixField, x1: f64, x2: f64) -> f64 {
    let b11 = bilinear_entry(field, 0, 0, x1, x2);
    let b21 = bilinear_entry(field, 1, 0, x1, x2);
    b21.atan2(b11)
}

/// Sample the phase at `+-delta` along the vertex normals, differentiate it
/// tangentially and return the jump `(d_s eta_plus)^2 - (d_s eta_minus)^2`
/// per vertex. Fills the curve's side-phase fields.
///
/// The curve must stay at least `delta` away from other interfaces; pick
/// `delta >= 3h` (and `>= 3 eps` for diffuse runs).
pub fn phase_jump(
    field: &MatrixField,
    curve: &mut InterfaceCurve,
    delta: f64,
) -> Result<Vec<f64>, InterfaceError> {
    if field.matrix_dim() < 2 {
        return Err(InterfaceError::InvalidParameter(
            "phase sampling needs a 2x2 field".into(),
        ));
    }
    if !(delta > 0.0) {
        return Err(InterfaceError::InvalidParameter(format!(
            "offset delta must be positive, got {delta}"
        )));
    }
    let m = curve.len();
    let normals = curve.normals();
    let mut eta_plus = Vec::with_capacity(m);
    let mut eta_minus = Vec::with_capacity(m);
    for k in 0..m {
        let v = curve.vertices[k];
        let n = normals[k];
        eta_plus.push(sample_phase(field, v[0] + delta * n[0], v[1] + delta * n[1]));
        eta_minus.push(sample_phase(field, v[0] - delta * n[0], v[1] - delta * n[1]));
    }
    let deriv = |phases: &[f64]| -> Result<Vec<f64>, InterfaceError> {
        let limit = std::f64::consts::PI * (1.0 - 1e-6);
        let mut out = Vec::with_capacity(m);
        for k in 0..m {
            let prev = (k + m - 1) % m;
            let next = (k + 1) % m;
            let dphi = wrap_angle(phases[next] - phases[prev]);
            if dphi.abs() >= limit {
                return Err(FieldError::AmbiguousWinding { value: dphi }.into());
            }
            let a = curve.vertex_cyclic(k as isize - 1);
            let b = curve.vertex_cyclic(k as isize + 1);
            let ds = dist(a, b).max(1e-300);
            out.push(dphi / ds);
        }
        Ok(out)
    };
    let dplus = deriv(&eta_plus)?;
    let dminus = deriv(&eta_minus)?;
    let jump: Vec<f64> = dplus
        .iter()
        .zip(&dminus)
        .map(|(p, q)| p * p - q * q)
        .collect();
    curve.eta_plus = Some(eta_plus);
    curve.eta_minus = Some(eta_minus);
    Ok(jump)
}

// ---------------------------------------------------------------------------
// motion laws and measured velocities
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityScale {
    /// Order-one time scale: `v n = -kappa`.
    Fast,
    /// Slow time scale, in original time units:
    /// `v n = eps (-kappa + jump / surface_tension)`.
    Slow,
}

/// Predicted normal velocity per vertex from the measured curvature and
/// (for the slow scale) the tangential phase jump.
pub fn predict_velocity(
    curve: &InterfaceCurve,
    jump: Option<&[f64]>,
    scale: VelocityScale,
    epsilon: f64,
) -> Vec<f64> {
    match scale {
        VelocityScale::Fast => curve.curvature.iter().map(|k| -k).collect(),
        VelocityScale::Slow => {
            let jump = jump.expect("slow-scale prediction needs the phase jump");
            assert_eq!(jump.len(), curve.len());
            let gamma = surface_tension();
            curve
                .curvature
                .iter()
                .zip(jump)
                .map(|(k, j)| epsilon * (-k + j / gamma))
                .collect()
        }
    }
}

/// Normal velocities of `earlier` against `later` over the time gap:
/// for each vertex, the signed normal projection of the displacement to the
/// closest point of the matched later curve. `None` where no correspondence
/// exists within `5h`.
pub fn measure_velocity(
    earlier: &[InterfaceCurve],
    later: &[InterfaceCurve],
    dt_gap: f64,
    grid_spacing: f64,
) -> Result<Vec<Vec<Option<f64>>>, InterfaceError> {
    if earlier.len() != later.len() {
        return Err(InterfaceError::CorrespondenceFailure {
            earlier: earlier.len(),
            later: later.len(),
        });
    }
    if !(dt_gap > 0.0) {
        return Err(InterfaceError::InvalidParameter(format!(
            "time gap must be positive, got {dt_gap}"
        )));
    }
    let pairing = match_curves(earlier, later);
    let max_dist = 5.0 * grid_spacing;
    let mut out = Vec::with_capacity(earlier.len());
    for (ci, curve) in earlier.iter().enumerate() {
        let target = &later[pairing[ci]];
        let normals = curve.normals();
        let mut velocities = Vec::with_capacity(curve.len());
        for (v, n) in curve.vertices.iter().zip(&normals) {
            let disp = closest_displacement(*v, target);
            let len = disp[0].hypot(disp[1]);
            velocities.push(if len < max_dist {
                Some((disp[0] * n[0] + disp[1] * n[1]) / dt_gap)
            } else {
                None
            });
        }
        out.push(velocities);
    }
    Ok(out)
}

/// Match curves across snapshots by centroid proximity (periodic).
fn match_curves(earlier: &[InterfaceCurve], later: &[InterfaceCurve]) -> Vec<usize> {
    let m = earlier.len();
    let mut taken = vec![false; m];
    let mut pairing = vec![0usize; m];
    for (ci, c) in earlier.iter().enumerate() {
        let cc = c.centroid();
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (ti, t) in later.iter().enumerate() {
            if taken[ti] {
                continue;
            }
            let tc = t.centroid();
            let d = min_image(tc[0] - cc[0]).hypot(min_image(tc[1] - cc[1]));
            if d < best_d {
                best_d = d;
                best = Some(ti);
            }
        }
        let ti = best.expect("curve counts already checked equal");
        taken[ti] = true;
        pairing[ci] = ti;
    }
    pairing
}

/// Minimum-image displacement from `p` to the closest point of `curve`.
fn closest_displacement(p: [f64; 2], curve: &InterfaceCurve) -> [f64; 2] {
    let m = curve.vertices.len();
    let mut best = [f64::INFINITY, f64::INFINITY];
    let mut best_d = f64::INFINITY;
    for k in 0..m {
        let a_raw = curve.vertices[k];
        let b_raw = curve.vertex_cyclic(k as isize + 1);
        // bring the segment into the frame of p
        let a = [p[0] + min_image(a_raw[0] - p[0]), p[1] + min_image(a_raw[1] - p[1])];
        let b = [a[0] + (b_raw[0] - a_raw[0]), a[1] + (b_raw[1] - a_raw[1])];
        let ab = [b[0] - a[0], b[1] - a[1]];
        let len2 = ab[0] * ab[0] + ab[1] * ab[1];
        let t = if len2 > 0.0 {
            (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
        let d = dist(p, q);
        if d < best_d {
            best_d = d;
            best = [q[0] - p[0], q[1] - p[1]];
        }
    }
    best
}

/// Per-pair velocity summary between time-ordered interface snapshots.
#[derive(Debug, Clone)]
pub struct MotionSample {
    /// Midpoint time of the snapshot pair.
    pub time: f64,
    /// Mean radius (contractible) or transverse position (wrapping) of each
    /// earlier curve.
    pub curve_positions: Vec<f64>,
    /// Measured normal velocity per curve per vertex; `None` without an
    /// unambiguous correspondence.
    pub velocities: Vec<Vec<Option<f64>>>,
    /// Curvature-flow prediction `-kappa` per curve per vertex; slow-scale
    /// predictions need the field and are attached via
    /// [`predict_velocity`].
    pub predicted: Vec<Vec<f64>>,
    /// False when the topology changed between the snapshots.
    pub valid: bool,
}

impl MotionSample {
    /// Mean of the valid measured velocities of one curve.
    pub fn mean_velocity(&self, curve: usize) -> Option<f64> {
        let vs = self.velocities.get(curve)?;
        let valid: Vec<f64> = vs.iter().flatten().copied().collect();
        if valid.is_empty() {
            None
        } else {
            Some(valid.iter().sum::<f64>() / valid.len() as f64)
        }
    }
}

/// Centered velocity samples for every consecutive snapshot pair; topology
/// changes invalidate the sample instead of being bridged.
pub fn motion_samples(
    snapshots: &[(f64, Vec<InterfaceCurve>)],
    grid_spacing: f64,
) -> Vec<MotionSample> {
    let mut out = Vec::new();
    for pair in snapshots.windows(2) {
        let (t0, earlier) = (&pair[0].0, &pair[0].1);
        let (t1, later) = (&pair[1].0, &pair[1].1);
        let time = 0.5 * (t0 + t1);
        let curve_positions = earlier.iter().map(|c| c.mean_position()).collect();
        let predicted = earlier
            .iter()
            .map(|c| predict_velocity(c, None, VelocityScale::Fast, 0.0))
            .collect();
        match measure_velocity(earlier, later, t1 - t0, grid_spacing) {
            Ok(velocities) => {
                out.push(MotionSample { time, curve_positions, velocities, predicted, valid: true })
            }
            Err(InterfaceError::CorrespondenceFailure { .. }) => out.push(MotionSample {
                time,
                curve_positions,
                velocities: Vec::new(),
                predicted,
                valid: false,
            }),
            Err(_) => unreachable!("only topology changes invalidate samples"),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn disk_scalar(side: usize, r: f64) -> ScalarField {
        ScalarField::from_fn(Grid::new(side).unwrap(), |x1, x2| r - x1.hypot(x2))
    }

    fn circle_points(r: f64, m: usize) -> Vec<[f64; 2]> {
        (0..m)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / m as f64;
                [r * th.cos(), r * th.sin()]
            })
            .collect()
    }

    #[test]
    fn disk_extraction_geometry() {
        let curves = extract_interface(&disk_scalar(256, 0.25)).unwrap();
        assert_eq!(curves.len(), 1);
        let c = &curves[0];
        assert_eq!(c.winding, (0, 0));
        let len = c.total_length();
        let expect = 2.0 * PI * 0.25;
        assert!((len - expect).abs() / expect < 0.02, "length {len} vs {expect}");
        let area = c.signed_area().unwrap();
        assert!(area > 0.0, "positive region must be enclosed counterclockwise");
        assert!((area - PI * 0.25 * 0.25).abs() / (PI * 0.0625) < 0.01);
        assert!((c.turning_number() - 1.0).abs() < 0.05);
    }

    #[test]
    fn disk_sign_field_extraction_stays_close() {
        let g = Grid::new(256).unwrap();
        let signs = SignField {
            grid: g,
            signs: ScalarField::from_fn(g, |x1, x2| 0.25 - x1.hypot(x2))
                .data
                .iter()
                .map(|&v| if v > 0.0 { 1 } else { -1 })
                .collect(),
        };
        let curves = extract_interface_from_signs(&signs).unwrap();
        assert_eq!(curves.len(), 1);
        let len = curves[0].total_length();
        let expect = 2.0 * PI * 0.25;
        // spec envelope: within 2 h sqrt(perimeter / h)
        let h = g.spacing();
        let envelope = 2.0 * h * (expect / h).sqrt();
        assert!((len - expect).abs() < envelope, "length {len} vs {expect} (envelope {envelope})");
        let area = curves[0].signed_area().unwrap();
        assert!((area - PI * 0.0625).abs() / (PI * 0.0625) < 0.02);
    }

    #[test]
    fn inverted_disk_is_clockwise() {
        let f = ScalarField::from_fn(Grid::new(128).unwrap(), |x1, x2| x1.hypot(x2) - 0.25);
        let curves = extract_interface(&f).unwrap();
        assert_eq!(curves.len(), 1);
        assert!(curves[0].signed_area().unwrap() < 0.0);
    }

    #[test]
    fn strip_extraction_two_straight_lines() {
        let f = ScalarField::from_fn(Grid::new(128).unwrap(), |_, x2| x2.abs() - 0.25);
        let curves = extract_interface(&f).unwrap();
        assert_eq!(curves.len(), 2);
        for c in &curves {
            assert_eq!(c.winding.0.abs(), 1);
            assert_eq!(c.winding.1, 0);
            assert!((c.total_length() - 1.0).abs() < 1e-9);
            for k in &c.curvature {
                assert!(k.abs() <= 1e-3);
            }
            assert!(c.turning_number().abs() < 1e-6);
        }
    }

    #[test]
    fn strip_normals_point_out_of_positive_region() {
        // positive region is |x2| > 0.25: normals on both lines point into
        // the strip
        let f = ScalarField::from_fn(Grid::new(64).unwrap(), |_, x2| x2.abs() - 0.25);
        let curves = extract_interface(&f).unwrap();
        for c in &curves {
            let y = c.centroid()[1];
            let normals = c.normals();
            for n in &normals {
                assert!(n[0].abs() < 1e-9);
                if y > 0.0 {
                    assert!(n[1] < -0.9, "upper line normal points down into the strip");
                } else {
                    assert!(n[1] > 0.9, "lower line normal points up into the strip");
                }
            }
        }
    }

    #[test]
    fn empty_interface_reported() {
        let f = ScalarField::from_fn(Grid::new(16).unwrap(), |_, _| 1.0);
        assert!(matches!(extract_interface(&f), Err(InterfaceError::EmptyInterface)));
        let g = Grid::new(16).unwrap();
        let signs = SignField { grid: g, signs: vec![1; g.num_points()] };
        assert!(matches!(
            extract_interface_from_signs(&signs),
            Err(InterfaceError::EmptyInterface)
        ));
    }

    #[test]
    fn saddle_cells_resolve_consistently() {
        // thin positive diagonal band produces saddle configurations
        let f = ScalarField::from_fn(Grid::new(64).unwrap(), |x1, x2| {
            0.02 - (x1 - x2).abs()
        });
        let curves = extract_interface(&f).unwrap();
        assert!(!curves.is_empty());
        let total: f64 = curves.iter().map(|c| c.total_length()).sum();
        // two lines of length sqrt(2) each, up to corner effects
        assert!((total - 2.0 * 2.0f64.sqrt()).abs() < 0.2, "total {total}");
    }

    #[test]
    fn curvature_of_analytic_circle() {
        let c = InterfaceCurve::from_points(circle_points(0.25, 400), (0, 0));
        for k in &c.curvature {
            assert!((k - 4.0).abs() < 0.2, "kappa {k}");
        }
    }

    #[test]
    fn curvature_of_extracted_smooth_disk() {
        let curves = extract_interface(&disk_scalar(256, 0.25)).unwrap();
        let mean: f64 =
            curves[0].curvature.iter().sum::<f64>() / curves[0].curvature.len() as f64;
        assert!((mean - 4.0).abs() / 4.0 < 0.05, "mean curvature {mean}");
    }

    #[test]
    fn curvature_of_wavy_polar_curve() {
        // r(theta) = 0.15 + 0.03 sin(12 theta), checked at theta = pi/24
        let m = 4800; // multiple of 48 so theta = pi/24 lands on a sample
        let pts: Vec<[f64; 2]> = (0..m)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / m as f64;
                let r = 0.15 + 0.03 * (12.0 * th).sin();
                [r * th.cos(), r * th.sin()]
            })
            .collect();
        let c = InterfaceCurve::from_points(pts, (0, 0));
        let k_idx = m / 48; // theta = pi/24
        let theta = PI / 24.0;
        let r = 0.15 + 0.03 * (12.0 * theta).sin();
        let rp = 0.36 * (12.0 * theta).cos();
        let rpp = -4.32 * (12.0 * theta).sin();
        let analytic = (r * r + 2.0 * rp * rp - r * rpp) / (r * r + rp * rp).powf(1.5);
        let got = c.curvature[k_idx];
        assert!(
            (got - analytic).abs() / analytic.abs() < 0.05,
            "kappa {got} vs analytic {analytic}"
        );
    }

    #[test]
    fn phase_jump_zero_for_equal_sides() {
        let g = Grid::new(128).unwrap();
        // det-positive strip inside, same linear phase on both sides
        let field = MatrixField::from_matrix_fn(g, 2, |x1, x2, m| {
            let eta = 2.0 * PI * x1;
            let (s, c) = eta.sin_cos();
            if x2.abs() < 0.25 {
                m.copy_from_slice(&[c, -s, s, c]);
            } else {
                m.copy_from_slice(&[c, s, s, -c]);
            }
        });
        let signs = crate::field::det_sign_field(&field).unwrap();
        let mut curves = extract_interface_from_signs(&signs).unwrap();
        assert_eq!(curves.len(), 2);
        let delta = 3.0 * g.spacing();
        for c in curves.iter_mut() {
            let jump = phase_jump(&field, c, delta).unwrap();
            for j in &jump {
                assert!(j.abs() < 0.5, "jump {j}");
            }
        }
    }

    #[test]
    fn phase_jump_matches_hand_value() {
        let g = Grid::new(256).unwrap();
        // det-positive strip inside with eta = 4 pi x1; outside reflection
        // with eta = 2 pi x1. Outward normal points to the slow side:
        // jump = (2 pi)^2 - (4 pi)^2 = -12 pi^2.
        let field = MatrixField::from_matrix_fn(g, 2, |x1, x2, m| {
            if x2.abs() < 0.25 {
                let (s, c) = (4.0 * PI * x1).sin_cos();
                m.copy_from_slice(&[c, -s, s, c]);
            } else {
                let (s, c) = (2.0 * PI * x1).sin_cos();
                m.copy_from_slice(&[c, s, s, -c]);
            }
        });
        let signs = crate::field::det_sign_field(&field).unwrap();
        let mut curves = extract_interface_from_signs(&signs).unwrap();
        assert_eq!(curves.len(), 2);
        let expect = -12.0 * PI * PI;
        let delta = 3.0 * g.spacing();
        for c in curves.iter_mut() {
            let jump = phase_jump(&field, c, delta).unwrap();
            let mean: f64 = jump.iter().sum::<f64>() / jump.len() as f64;
            assert!(
                (mean - expect).abs() < 0.02 * expect.abs(),
                "jump {mean} vs {expect}"
            );
        }
    }

    #[test]
    fn phase_jump_steeper_contrast() {
        let g = Grid::new(256).unwrap();
        // inside 8 pi x1, outside 2 pi x1: jump = (2 pi)^2 - (8 pi)^2 = -60 pi^2
        let field = MatrixField::from_matrix_fn(g, 2, |x1, x2, m| {
            if x2.abs() < 0.25 {
                let (s, c) = (8.0 * PI * x1).sin_cos();
                m.copy_from_slice(&[c, -s, s, c]);
            } else {
                let (s, c) = (2.0 * PI * x1).sin_cos();
                m.copy_from_slice(&[c, s, s, -c]);
            }
        });
        let signs = crate::field::det_sign_field(&field).unwrap();
        let mut curves = extract_interface_from_signs(&signs).unwrap();
        let expect = -60.0 * PI * PI;
        let delta = 3.0 * g.spacing();
        for c in curves.iter_mut() {
            let jump = phase_jump(&field, c, delta).unwrap();
            let mean: f64 = jump.iter().sum::<f64>() / jump.len() as f64;
            assert!((mean - expect).abs() < 0.02 * expect.abs(), "jump {mean} vs {expect}");
        }
    }

    #[test]
    fn predict_velocity_fast_circle() {
        let c = InterfaceCurve::from_points(circle_points(0.25, 400), (0, 0));
        let v = predict_velocity(&c, None, VelocityScale::Fast, 0.0);
        for x in &v {
            assert!((x + 4.0).abs() < 0.2, "v {x}");
        }
    }

    #[test]
    fn predict_velocity_slow_cases() {
        let line: Vec<[f64; 2]> = (0..64).map(|k| [k as f64 / 64.0 - 0.5, 0.1]).collect();
        let c = InterfaceCurve::from_points(line, (1, 0));
        let zero_jump = vec![0.0; c.len()];
        let v = predict_velocity(&c, Some(&zero_jump), VelocityScale::Slow, 0.05);
        for x in &v {
            assert!(x.abs() < 1e-9);
        }
        let j1 = vec![-12.0 * PI * PI; c.len()];
        let j2 = vec![-60.0 * PI * PI; c.len()];
        let v1 = predict_velocity(&c, Some(&j1), VelocityScale::Slow, 0.05);
        let v2 = predict_velocity(&c, Some(&j2), VelocityScale::Slow, 0.05);
        assert!((v2[0] / v1[0] - 5.0).abs() < 1e-9, "speed ratio {}", v2[0] / v1[0]);
        assert!(v1[0] < 0.0);
    }

    #[test]
    fn measured_velocity_of_identical_snapshots_is_zero() {
        let c = InterfaceCurve::from_points(circle_points(0.2, 200), (0, 0));
        let v = measure_velocity(&[c.clone()], &[c], 0.1, 1.0 / 128.0).unwrap();
        for x in v[0].iter().flatten() {
            assert!(x.abs() < 1e-12);
        }
    }

    #[test]
    fn measured_velocity_of_shrinking_circle() {
        // R(t)^2 = R0^2 - 2t sampled at t and t + gap
        let r0: f64 = 0.25;
        let gap = 1e-3;
        let r1 = (r0 * r0 - 2.0 * gap).sqrt();
        let c0 = InterfaceCurve::from_points(circle_points(r0, 300), (0, 0));
        let c1 = InterfaceCurve::from_points(circle_points(r1, 300), (0, 0));
        let v = measure_velocity(&[c0], &[c1], gap, 1.0 / 256.0).unwrap();
        let mid = -1.0 / (0.5 * (r0 + r1));
        for x in v[0].iter().flatten() {
            assert!((x - mid).abs() / mid.abs() < 0.05, "v {x} vs {mid}");
        }
    }

    #[test]
    fn measured_velocity_of_translating_line() {
        let h = 1.0 / 128.0;
        let d = 3.0 * h;
        let gap = 0.01;
        let line = |y: f64| -> Vec<[f64; 2]> {
            (0..128).map(|k| [k as f64 / 128.0 - 0.5, y]).collect()
        };
        let c0 = InterfaceCurve::from_points(line(0.0), (1, 0));
        let c1 = InterfaceCurve::from_points(line(d), (1, 0));
        let v = measure_velocity(&[c0.clone()], &[c1], gap, h).unwrap();
        // normal is (t2,-t1); for the +x1-oriented line it points to -x2,
        // so motion toward +x2 is a negative normal velocity
        for x in v[0].iter().flatten() {
            assert!((x.abs() - d / gap).abs() <= h / gap, "v {x}");
        }
        assert!(v[0][0].unwrap() < 0.0);
    }

    #[test]
    fn correspondence_failure_on_topology_change() {
        let c0 = InterfaceCurve::from_points(circle_points(0.2, 100), (0, 0));
        let c1 = InterfaceCurve::from_points(circle_points(0.1, 100), (0, 0));
        let err = measure_velocity(&[c0.clone(), c1.clone()], &[c0.clone()], 0.1, 0.01);
        assert!(matches!(err, Err(InterfaceError::CorrespondenceFailure { .. })));

        let samples = motion_samples(
            &[(0.0, vec![c0.clone(), c1]), (1.0, vec![c0])],
            0.01,
        );
        assert_eq!(samples.len(), 1);
        assert!(!samples[0].valid);
        // curvature-flow predictions are attached even for invalid samples
        assert_eq!(samples[0].predicted.len(), 2);
        let mean_pred: f64 =
            samples[0].predicted[0].iter().sum::<f64>() / samples[0].predicted[0].len() as f64;
        assert!((mean_pred + 5.0).abs() < 0.3, "predicted -1/R for R = 0.2, got {mean_pred}");
    }

    #[test]
    fn velocity_invalid_when_too_far() {
        let h = 1.0 / 64.0;
        let c0 = InterfaceCurve::from_points(circle_points(0.1, 100), (0, 0));
        let c1 = InterfaceCurve::from_points(circle_points(0.3, 100), (0, 0));
        let v = measure_velocity(&[c0], &[c1], 1.0, h).unwrap();
        assert!(v[0].iter().all(|x| x.is_none()), "0.2 displacement is beyond 5h");
    }
}
