//! Kirchhoff migration over a closed scan contour under the exploding-source
//! model, plus the contour, derivative and datum helpers it needs.

use std::f64::consts::TAU;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdtd::{AScan, BScan, C0};
use crate::scene::{BlobShape, GridSpec};
use crate::signal::peak_position;

/// Half the propagation speed in a medium of relative permittivity `eps`.
pub fn velocity_from_permittivity(eps: f64) -> Result<f64> {
    if !(eps >= 1.0) {
        return Err(Error::Domain(format!("permittivity must be >= 1, got {eps}")));
    }
    Ok(C0 / eps.sqrt() / 2.0)
}

/// Surface samples under each scan station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub points: Vec<[f64; 2]>,
    /// Unit normals pointing into the object.
    pub normals: Vec<[f64; 2]>,
    pub ds: Vec<f64>,
    pub total_length: f64,
}

impl Contour {
    /// Builds the contour from ordered points and inward normals; `ds` is the
    /// mean of the two adjacent chord lengths.
    pub fn new(points: Vec<[f64; 2]>, normals: Vec<[f64; 2]>) -> Result<Self> {
        let n = points.len();
        if n < 3 || normals.len() != n {
            return Err(Error::Shape(format!(
                "contour needs >= 3 points with one normal each ({n} points, {} normals)",
                normals.len()
            )));
        }
        let normals = normals
            .into_iter()
            .map(|[x, y]| {
                let len = x.hypot(y);
                if len > 0.0 && len.is_finite() {
                    Ok([x / len, y / len])
                } else {
                    Err(Error::Geometry("contour normal has zero length".into()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let chord = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
        let ds: Vec<f64> = (0..n)
            .map(|i| {
                let prev = points[(i + n - 1) % n];
                let next = points[(i + 1) % n];
                0.5 * (chord(prev, points[i]) + chord(points[i], next))
            })
            .collect();
        let total_length = ds.iter().sum();
        Ok(Self {
            points,
            normals,
            ds,
            total_length,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Even-odd point-in-polygon test against the contour polyline.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let n = self.points.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (self.points[i], self.points[j]);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }
}

/// Projects every trace position radially onto `outline`.
pub fn contour_from_scan(b: &BScan, outline: &BlobShape) -> Result<Contour> {
    if b.trace_positions.len() != b.n_traces() {
        return Err(Error::Shape(format!(
            "{} trace positions for {} traces",
            b.trace_positions.len(),
            b.n_traces()
        )));
    }
    let mut points = Vec::with_capacity(b.n_traces());
    let mut normals = Vec::with_capacity(b.n_traces());
    for &p in &b.trace_positions {
        let (r, theta) = outline.polar(p);
        if r <= outline.radius_at(theta) {
            return Err(Error::Geometry(format!(
                "scan position {p:?} lies on or inside the object outline"
            )));
        }
        points.push(outline.point_at(theta));
        normals.push(outline.inward_normal(theta));
    }
    Contour::new(points, normals)
}

/// Time derivative of every trace: central differences inside, one-sided at
/// the ends.
pub fn time_derivative(b: &BScan) -> Result<BScan> {
    let n = b.n_samples();
    if n < 3 {
        return Err(Error::Shape(format!("need at least 3 samples, got {n}")));
    }
    let inv = 1.0 / b.dt;
    let g = &b.traces;
    let d = Array2::from_shape_fn(g.dim(), |(i, k)| {
        if k == 0 {
            (g[[i, 1]] - g[[i, 0]]) * inv
        } else if k == n - 1 {
            (g[[i, n - 1]] - g[[i, n - 2]]) * inv
        } else {
            (g[[i, k + 1]] - g[[i, k - 1]]) * 0.5 * inv
        }
    });
    Ok(b.with_traces(d))
}

fn interpolate(samples: &[f64], dt: f64, t: f64) -> f64 {
    if !(t >= 0.0) {
        return 0.0;
    }
    let x = t / dt;
    let i = x.floor() as usize;
    if i + 1 >= samples.len() {
        return if i + 1 == samples.len() && x == i as f64 {
            samples[i]
        } else {
            0.0
        };
    }
    let f = x - i as f64;
    samples[i] * (1.0 - f) + samples[i + 1] * f
}

/// Linear interpolation of a trace at time `t`, zero outside the record.
pub fn sample_trace(trace: &AScan, t: f64) -> f64 {
    interpolate(&trace.samples, trace.dt, t)
}

/// Moves `t = 0` of each trace onto the surface echo. A trace is advanced by
/// the time from its current origin to the direct-pulse peak of `reference`,
/// plus the two-way air gap between its station and contour point.
pub fn surface_datum(b: &BScan, contour: &Contour, reference: &AScan) -> Result<BScan> {
    if contour.len() != b.n_traces() || b.trace_positions.len() != b.n_traces() {
        return Err(Error::Shape(format!(
            "{} contour points for {} traces",
            contour.len(),
            b.n_traces()
        )));
    }
    let magnitude: Vec<f64> = reference.samples.iter().map(|v| v.abs()).collect();
    let peak = peak_position(&magnitude)
        .filter(|_| reference.peak_abs() > 0.0)
        .ok_or(Error::Alignment {
            threshold: 0.0,
            peak: 0.0,
        })?;
    let lead = peak * reference.dt - b.t0_offset;
    let mut out = b.traces.clone();
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        let (p, q) = (b.trace_positions[i], contour.points[i]);
        let shift = lead + 2.0 * (p[0] - q[0]).hypot(p[1] - q[1]) / C0;
        let src = b.traces.row(i).to_vec();
        for (k, v) in row.iter_mut().enumerate() {
            *v = interpolate(&src, b.dt, k as f64 * b.dt + shift);
        }
    }
    let mut shifted = b.with_traces(out);
    shifted.t0_offset += lead;
    Ok(shifted)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MigrationParams {
    pub eps_medium: f64,
    pub image_spec: GridSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MigratedImage {
    pub spec: GridSpec,
    /// Indexed `[ix, iy]` like the grid cells.
    pub intensity: Array2<f64>,
    pub eps_medium_used: f64,
}

impl MigratedImage {
    /// `|I| / max|I|`; all zeros when the image is empty.
    pub fn normalized_magnitude(&self) -> Array2<f64> {
        let peak = self.intensity.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.0 {
            self.intensity.mapv(|v| v.abs() / peak)
        } else {
            Array2::zeros(self.intensity.dim())
        }
    }

    /// Cell of the largest `|I|`.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = ((0, 0), f64::NEG_INFINITY);
        for (idx, v) in self.intensity.indexed_iter() {
            if v.abs() > best.1 {
                best = (idx, v.abs());
            }
        }
        best.0
    }
}

/// Kirchhoff migration of a time-zeroed B-scan onto `params.image_spec`.
pub fn kirchhoff_migrate(g: &BScan, contour: &Contour, params: &MigrationParams) -> Result<MigratedImage> {
    if contour.len() != g.n_traces() {
        return Err(Error::Shape(format!(
            "{} contour points for {} traces",
            contour.len(),
            g.n_traces()
        )));
    }
    params.image_spec.validate()?;
    let v = velocity_from_permittivity(params.eps_medium)?;
    let dg = time_derivative(g)?;
    let spec = params.image_spec;
    let guard = 2.0 * spec.spacing;
    let rows: Vec<Vec<f64>> = g.traces.rows().into_iter().map(|r| r.to_vec()).collect();
    let drows: Vec<Vec<f64>> = dg.traces.rows().into_iter().map(|r| r.to_vec()).collect();

    let columns: Vec<Vec<f64>> = (0..spec.nx)
        .into_par_iter()
        .map(|ix| {
            let mut dist = vec![0.0; contour.len()];
            (0..spec.ny)
                .map(|iy| {
                    let r = spec.cell_center(ix, iy);
                    if !contour.contains(r) {
                        return 0.0;
                    }
                    let mut r_min = f64::INFINITY;
                    for (d, p) in dist.iter_mut().zip(&contour.points) {
                        *d = (r[0] - p[0]).hypot(r[1] - p[1]);
                        r_min = r_min.min(*d);
                    }
                    if r_min < guard {
                        return 0.0;
                    }
                    let mut sum = 0.0;
                    for i in 0..contour.len() {
                        let (p, n, big_r) = (contour.points[i], contour.normals[i], dist[i]);
                        let obliquity = ((r[0] - p[0]) * n[0] + (r[1] - p[1]) * n[1]) / big_r;
                        let t = big_r / v;
                        let gv = interpolate(&rows[i], g.dt, t);
                        let dv = interpolate(&drows[i], g.dt, t);
                        sum += obliquity * (gv / (big_r * big_r) - dv / (v * big_r)) * contour.ds[i];
                    }
                    r_min / TAU * sum
                })
                .collect()
        })
        .collect();
    let intensity = Array2::from_shape_fn((spec.nx, spec.ny), |(ix, iy)| columns[ix][iy]);
    Ok(MigratedImage {
        spec,
        intensity,
        eps_medium_used: params.eps_medium,
    })
}
