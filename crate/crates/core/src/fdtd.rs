//! Two-dimensional TMz finite-difference time-domain solver with a
//! convolutional PML, and the circumferential scan built on top of it.
//!
//! Field layout on the Yee lattice (cell size `Δ`):
//! `Ez` at cell centres `(i, j)`, `Hx` at `(i, j+½)`, `Hy` at `(i+½, j)`.
//! The outermost `Ez` ring is held at zero behind the absorbing layer.

use std::f64::consts::{PI, TAU};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{rasterize, GridSpec, MaterialGrid, Scene};

pub const C0: f64 = 299_792_458.0;
pub const EPS0: f64 = 8.854_187_812_8e-12;
pub const MU0: f64 = 1.256_637_062_12e-6;
const ETA0: f64 = 376.730_313_668;

/// Field storage precision.
type Field = f64;

/// Polynomial order of the PML conductivity/stretch grading.
const PML_ORDER: i32 = 3;
const PML_KAPPA_MAX: f64 = 1.0;
const PML_ALPHA_MAX: f64 = 0.05;
/// Extra interior cells kept between the scan circle and the PML.
const SCAN_GUARD_CELLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Cell size in metres.
    pub spacing: f64,
    pub courant_factor: f64,
    /// Recorded time window in seconds.
    pub duration: f64,
    pub pml_cells: usize,
    pub source_center_freq: f64,
    /// Ricker peak time; `None` means `1.5 / f_c`.
    pub source_delay: Option<f64>,
    pub source_amplitude: f64,
    /// Output sampling interval; `None` records every time step.
    pub sample_interval: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            spacing: 1.5e-3,
            courant_factor: 0.99,
            duration: 8e-9,
            pml_cells: 10,
            source_center_freq: 1e9,
            source_delay: None,
            source_amplitude: 1.0,
            sample_interval: Some(4e-11),
        }
    }
}

impl SimConfig {
    pub fn dt(&self) -> f64 {
        courant_dt(self.spacing, self.courant_factor)
    }

    pub fn delay(&self) -> f64 {
        self.source_delay
            .unwrap_or(1.5 / self.source_center_freq)
    }

    pub fn n_steps(&self) -> usize {
        (self.duration / self.dt()).ceil() as usize
    }

    pub fn output_dt(&self) -> f64 {
        self.sample_interval.unwrap_or_else(|| self.dt())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spacing > 0.0) {
            return Err(Error::Parameter(format!("spacing must be positive, got {}", self.spacing)));
        }
        if !(self.courant_factor > 0.0 && self.courant_factor <= 1.0) {
            return Err(Error::Parameter(format!(
                "courant factor must lie in (0, 1], got {}",
                self.courant_factor
            )));
        }
        if !(self.source_center_freq > 0.0) {
            return Err(Error::Parameter("source centre frequency must be positive".into()));
        }
        if self.pml_cells < 4 {
            return Err(Error::Parameter(format!(
                "at least 4 PML cells required, got {}",
                self.pml_cells
            )));
        }
        if !(self.duration / self.output_dt() >= 1.0) || !(self.duration / self.dt() >= 1.0) {
            return Err(Error::Parameter(
                "duration must span at least two output samples".into(),
            ));
        }
        if let Some(s) = self.sample_interval {
            if !(s > 0.0) {
                return Err(Error::Parameter("sample interval must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    pub n_traces: usize,
    /// Gap between the scan circle and the outermost point of the object.
    pub standoff: f64,
    pub tx_rx_offset_cells: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            n_traces: 60,
            standoff: 0.05,
            tx_rx_offset_cells: 4,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_traces < 8 {
            return Err(Error::Parameter(format!(
                "need at least 8 traces, got {}",
                self.n_traces
            )));
        }
        if !(self.standoff > 0.0) {
            return Err(Error::Parameter("standoff must be positive".into()));
        }
        Ok(())
    }
}

/// Single time-domain trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AScan {
    pub samples: Vec<f64>,
    pub dt: f64,
    /// Time removed from the start of the record by alignment.
    pub t0_offset: f64,
}

impl AScan {
    pub fn new(samples: Vec<f64>, dt: f64) -> Self {
        Self {
            samples,
            dt,
            t0_offset: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn peak_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Radargram with one row per scan station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BScan {
    /// `n_traces × n_samples`.
    pub traces: Array2<f64>,
    pub dt: f64,
    pub angles: Vec<f64>,
    pub trace_positions: Vec<[f64; 2]>,
    pub t0_offset: f64,
}

impl BScan {
    pub fn n_traces(&self) -> usize {
        self.traces.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.traces.ncols()
    }

    pub fn trace(&self, i: usize) -> AScan {
        AScan {
            samples: self.traces.row(i).to_vec(),
            dt: self.dt,
            t0_offset: self.t0_offset,
        }
    }

    pub fn with_traces(&self, traces: Array2<f64>) -> BScan {
        BScan {
            traces,
            dt: self.dt,
            angles: self.angles.clone(),
            trace_positions: self.trace_positions.clone(),
            t0_offset: self.t0_offset,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_traces();
        if self.angles.len() != n || self.trace_positions.len() != n {
            return Err(Error::Shape(format!(
                "{} traces but {} angles and {} positions",
                n,
                self.angles.len(),
                self.trace_positions.len()
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Parameter("dt must be positive".into()));
        }
        if self.angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Shape("trace angles must increase".into()));
        }
        Ok(())
    }
}

/// Ricker wavelet `(1 − 2π²f²τ²)·exp(−π²f²τ²)`, `τ = t − t0`.
pub fn ricker(t: f64, f_c: f64, t0: f64) -> f64 {
    let a = (PI * f_c * (t - t0)).powi(2);
    (1.0 - 2.0 * a) * (-a).exp()
}

/// Largest stable 2-D time step scaled by `courant_factor`.
pub fn courant_dt(spacing: f64, courant_factor: f64) -> f64 {
    courant_factor / (C0 * 2f64.sqrt() / spacing)
}

/// 1-D CPML profile along one axis, for the E nodes (integer positions) and
/// H nodes (half-integer positions).
struct PmlAxis {
    inv_kappa_e: Vec<Field>,
    inv_kappa_h: Vec<Field>,
    e_nodes: Vec<PmlNode>,
    h_nodes: Vec<PmlNode>,
}

#[derive(Clone, Copy)]
struct PmlNode {
    index: usize,
    b: Field,
    c: Field,
}

impl PmlAxis {
    fn new(n: usize, cells: usize, spacing: f64, dt: f64) -> Self {
        let sigma_max = 0.8 * (PML_ORDER as f64 + 1.0) / (ETA0 * spacing);
        let inner_hi = (n - 1 - cells) as f64;
        let depth = |x: f64| -> f64 {
            let d = if x < cells as f64 {
                cells as f64 - x
            } else if x > inner_hi {
                x - inner_hi
            } else {
                0.0
            };
            (d / cells as f64).min(1.0)
        };
        let node = |index: usize, x: f64| -> (Field, Option<PmlNode>) {
            let rho = depth(x);
            if rho <= 0.0 {
                return (1.0, None);
            }
            let g = rho.powi(PML_ORDER);
            let sigma = sigma_max * g;
            let kappa = 1.0 + (PML_KAPPA_MAX - 1.0) * g;
            let alpha = PML_ALPHA_MAX * (1.0 - rho);
            let b = (-(sigma / kappa + alpha) * dt / EPS0).exp();
            let c = if sigma > 0.0 {
                sigma * (b - 1.0) / (sigma * kappa + kappa * kappa * alpha)
            } else {
                0.0
            };
            (
                (1.0 / kappa) as Field,
                Some(PmlNode {
                    index,
                    b: b as Field,
                    c: c as Field,
                }),
            )
        };
        let mut inv_kappa_e = vec![1.0; n];
        let mut inv_kappa_h = vec![1.0; n - 1];
        let mut e_nodes = Vec::new();
        let mut h_nodes = Vec::new();
        for i in 0..n {
            let (k, p) = node(i, i as f64);
            inv_kappa_e[i] = k;
            // boundary E nodes are pinned to zero and need no auxiliary field
            if i > 0 && i < n - 1 {
                e_nodes.extend(p);
            }
        }
        for i in 0..n - 1 {
            let (k, p) = node(i, i as f64 + 0.5);
            inv_kappa_h[i] = k;
            h_nodes.extend(p);
        }
        Self {
            inv_kappa_e,
            inv_kappa_h,
            e_nodes,
            h_nodes,
        }
    }
}

/// Steps between full-lattice finiteness and peak scans.
pub const PEAK_SCAN_INTERVAL: usize = 64;

pub struct RunOutput {
    pub traces: Vec<AScan>,
    pub peak_field: f64,
}

/// Yee-lattice solver bound to one material grid.
pub struct Solver<'a> {
    grid: &'a MaterialGrid,
    cfg: SimConfig,
}

impl<'a> Solver<'a> {
    pub fn new(grid: &'a MaterialGrid, cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        grid.validate()?;
        let (nx, ny) = grid.spec.shape();
        if nx < 2 * cfg.pml_cells + 3 || ny < 2 * cfg.pml_cells + 3 {
            return Err(Error::Geometry(format!(
                "grid {nx}x{ny} too small for {} PML cells",
                cfg.pml_cells
            )));
        }
        Ok(Self { grid, cfg })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Cell of a physical position, rejecting positions in or beyond the PML.
    pub fn interior_cell(&self, p: [f64; 2]) -> Result<(usize, usize)> {
        let spec = &self.grid.spec;
        let (ix, iy) = spec.nearest_cell(p).ok_or(Error::Placement { position: p })?;
        let lo = self.cfg.pml_cells + 1;
        if ix < lo || iy < lo || ix + lo >= spec.nx || iy + lo >= spec.ny {
            return Err(Error::Placement { position: p });
        }
        Ok((ix, iy))
    }

    /// Runs one simulation with identical soft Ricker sources at `sources` and
    /// returns the `Ez` record at each probe.
    pub fn run(&self, sources: &[(usize, usize)], probes: &[(usize, usize)]) -> Result<Vec<AScan>> {
        self.run_tracked(sources, probes).map(|r| r.traces)
    }

    /// As [`Solver::run`], also reporting the largest `|Ez|` seen anywhere on
    /// the lattice (full-grid scans every [`PEAK_SCAN_INTERVAL`] steps).
    pub fn run_tracked(&self, sources: &[(usize, usize)], probes: &[(usize, usize)]) -> Result<RunOutput> {
        let _ftz = FlushDenormals::enable();
        let cfg = &self.cfg;
        let spec = &self.grid.spec;
        let (nx, ny) = spec.shape();
        let dt = cfg.dt();
        let n_steps = cfg.n_steps();
        let dx = spec.spacing;

        let mut ca = vec![0.0 as Field; nx * ny];
        let mut cb = vec![0.0 as Field; nx * ny];
        for ((ix, iy), &eps_r) in self.grid.eps_r.indexed_iter() {
            let eps = eps_r * EPS0;
            let loss = self.grid.sigma[[ix, iy]] * dt / (2.0 * eps);
            ca[ix * ny + iy] = ((1.0 - loss) / (1.0 + loss)) as Field;
            cb[ix * ny + iy] = (dt / (eps * dx) / (1.0 + loss)) as Field;
        }
        let db = (dt / (MU0 * dx)) as Field;

        let px = PmlAxis::new(nx, cfg.pml_cells, dx, dt);
        let py = PmlAxis::new(ny, cfg.pml_cells, dx, dt);

        let mut ez = vec![0.0 as Field; nx * ny];
        let mut hx = vec![0.0 as Field; nx * (ny - 1)];
        let mut hy = vec![0.0 as Field; (nx - 1) * ny];
        // auxiliary convolution fields, one row per PML node
        let mut psi_hx_y = vec![0.0 as Field; nx * py.h_nodes.len()];
        let mut psi_hy_x = vec![0.0 as Field; px.h_nodes.len() * ny];
        let mut psi_ez_x = vec![0.0 as Field; px.e_nodes.len() * ny];
        let mut psi_ez_y = vec![0.0 as Field; nx * py.e_nodes.len()];

        let mut records: Vec<Vec<f64>> = vec![Vec::with_capacity(n_steps + 1); probes.len()];
        for r in &mut records {
            r.push(0.0);
        }
        let mut peak_field: Field = 0.0;
        let delay = cfg.delay();
        let nyh = ny - 1;
        let m = ny - 2;
        let nh = py.h_nodes.len();
        let ne = py.e_nodes.len();
        let ky = &py.inv_kappa_e[1..ny - 1];
        let slots = |nodes: &[PmlNode], n: usize| {
            let mut v = vec![None; n];
            for (k, node) in nodes.iter().enumerate() {
                v[node.index] = Some(k);
            }
            v
        };
        let hx_slot = slots(&px.h_nodes, nx);
        let ex_slot = slots(&px.e_nodes, nx);

        for step in 0..n_steps {
            // Row-fused leapfrog: Hx/Hy of row i only read Ez rows i and i+1,
            // which are still at the previous time level when Ez row i updates.
            for i in 0..nx {
                let row = i * ny;
                {
                    let e = &ez[row..row + ny];
                    let (e0, e1) = (&e[..nyh], &e[1..]);
                    let h = &mut hx[i * nyh..(i + 1) * nyh];
                    let k = &py.inv_kappa_h[..nyh];
                    for j in 0..nyh {
                        h[j] -= db * (e1[j] - e0[j]) * k[j];
                    }
                    let psi = &mut psi_hx_y[i * nh..(i + 1) * nh];
                    for (node, psi) in py.h_nodes.iter().zip(psi) {
                        let j = node.index;
                        *psi = node.b * *psi + node.c * (e[j + 1] - e[j]);
                        h[j] -= db * *psi;
                    }
                }
                if i < nx - 1 {
                    let k = px.inv_kappa_h[i] * db;
                    let (e0, e1) = ez[row..row + 2 * ny].split_at(ny);
                    let h = &mut hy[row..row + ny];
                    for j in 0..ny {
                        h[j] += k * (e1[j] - e0[j]);
                    }
                    if let Some(n) = hx_slot[i] {
                        let node = px.h_nodes[n];
                        let psi = &mut psi_hy_x[n * ny..(n + 1) * ny];
                        for j in 0..ny {
                            psi[j] = node.b * psi[j] + node.c * (e1[j] - e0[j]);
                            h[j] += db * psi[j];
                        }
                    }
                }
                if i == 0 || i == nx - 1 {
                    continue;
                }
                let kx = px.inv_kappa_e[i];
                let (hy0, hy1) = hy[row - ny..row + ny].split_at(ny);
                let hxr = &hx[i * nyh..(i + 1) * nyh];
                let e = &mut ez[row..row + ny];
                let a = &ca[row..row + ny];
                let b = &cb[row..row + ny];
                {
                    let (a, b) = (&a[1..1 + m], &b[1..1 + m]);
                    let (h1, h0) = (&hy1[1..1 + m], &hy0[1..1 + m]);
                    let (hx0, hx1) = (&hxr[..m], &hxr[1..1 + m]);
                    let e = &mut e[1..1 + m];
                    for j in 0..m {
                        let curl = (h1[j] - h0[j]) * kx - (hx1[j] - hx0[j]) * ky[j];
                        e[j] = a[j] * e[j] + b[j] * curl;
                    }
                }
                if let Some(n) = ex_slot[i] {
                    let node = px.e_nodes[n];
                    let psi = &mut psi_ez_x[n * ny..(n + 1) * ny];
                    for j in 1..ny - 1 {
                        psi[j] = node.b * psi[j] + node.c * (hy1[j] - hy0[j]);
                        e[j] += b[j] * psi[j];
                    }
                }
                let psi = &mut psi_ez_y[i * ne..(i + 1) * ne];
                for (node, psi) in py.e_nodes.iter().zip(psi) {
                    let j = node.index;
                    *psi = node.b * *psi + node.c * (hxr[j] - hxr[j - 1]);
                    e[j] -= b[j] * *psi;
                }
            }

            let t = (step + 1) as f64 * dt;
            let s = (cfg.source_amplitude * ricker(t, cfg.source_center_freq, delay)) as Field;
            for &(i, j) in sources {
                ez[i * ny + j] += s;
            }
            for (rec, &(i, j)) in records.iter_mut().zip(probes) {
                let v = ez[i * ny + j];
                if !v.is_finite() {
                    return Err(Error::Instability { step: step + 1 });
                }
                rec.push(v as f64);
            }
            if step % PEAK_SCAN_INTERVAL == PEAK_SCAN_INTERVAL - 1 || step + 1 == n_steps {
                let mut finite = true;
                for v in &ez {
                    finite &= v.is_finite();
                    peak_field = peak_field.max(v.abs());
                }
                if !finite {
                    return Err(Error::Instability { step: step + 1 });
                }
            }
        }

        Ok(RunOutput {
            traces: records
                .into_iter()
                .map(|rec| resample(&rec, dt, cfg.output_dt(), cfg.duration))
                .collect(),
            peak_field: peak_field as f64,
        })
    }
}

/// Sets flush-to-zero / denormals-are-zero for the current thread while alive.
/// The lattice carries an exponentially small precursor ahead of every
/// wavefront; without this the subnormal arithmetic dominates the run time.
struct FlushDenormals {
    #[cfg(target_arch = "x86_64")]
    saved: u32,
}

impl FlushDenormals {
    #[allow(deprecated)]
    fn enable() -> Self {
        #[cfg(target_arch = "x86_64")]
        {
            use std::arch::x86_64::{_mm_getcsr, _mm_setcsr};
            // SAFETY: only the FTZ (bit 15) and DAZ (bit 6) control bits change.
            let saved = unsafe { _mm_getcsr() };
            unsafe { _mm_setcsr(saved | 0x8040) };
            Self { saved }
        }
        #[cfg(not(target_arch = "x86_64"))]
        Self {}
    }
}

impl Drop for FlushDenormals {
    #[allow(deprecated)]
    fn drop(&mut self) {
        #[cfg(target_arch = "x86_64")]
        // SAFETY: restores the control word read in `enable`.
        unsafe {
            std::arch::x86_64::_mm_setcsr(self.saved)
        };
    }
}

/// Linear interpolation of a native-step record onto a uniform output grid.
fn resample(record: &[f64], dt: f64, out_dt: f64, duration: f64) -> AScan {
    if (out_dt - dt).abs() <= 1e-6 * dt {
        return AScan::new(record.to_vec(), dt);
    }
    let n_out = (duration / out_dt).floor() as usize + 1;
    let last = record.len() - 1;
    let samples = (0..n_out)
        .map(|k| {
            let x = k as f64 * out_dt / dt;
            let i = (x.floor() as usize).min(last);
            let frac = x - i as f64;
            if i >= last {
                record[last]
            } else {
                record[i] * (1.0 - frac) + record[i + 1] * frac
            }
        })
        .collect();
    AScan::new(samples, out_dt)
}

/// Records `Ez` at `rx` for a soft Ricker source at `tx`.
pub fn simulate_ascan(grid: &MaterialGrid, tx: [f64; 2], rx: [f64; 2], cfg: &SimConfig) -> Result<AScan> {
    let solver = Solver::new(grid, *cfg)?;
    let src = solver.interior_cell(tx)?;
    let probe = solver.interior_cell(rx)?;
    Ok(solver.run(&[src], &[probe])?.remove(0))
}

/// One scan station: antenna cells and the recorded position (Tx/Rx midpoint).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Station {
    pub angle: f64,
    pub tx: (usize, usize),
    pub rx: (usize, usize),
    pub position: [f64; 2],
}

/// Simulation grid and antenna placement for a circumferential scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanLayout {
    pub grid_spec: GridSpec,
    pub scan_radius: f64,
    pub stations: Vec<Station>,
}

impl ScanLayout {
    pub fn new(scene: &Scene, scan: &ScanConfig, cfg: &SimConfig) -> Result<Self> {
        scan.validate()?;
        cfg.validate()?;
        let center = scene.outer_shape.center;
        let dx = cfg.spacing;
        let scan_radius = scene.outer_shape.max_radius() + scan.standoff;
        let margin = (scan.tx_rx_offset_cells / 2 + SCAN_GUARD_CELLS + cfg.pml_cells + 1) as f64;
        let half_cells = (scan_radius / dx).ceil() as usize + margin as usize;
        let n = 2 * half_cells + 1;
        let grid_spec = GridSpec {
            origin: [
                center[0] - half_cells as f64 * dx,
                center[1] - half_cells as f64 * dx,
            ],
            spacing: dx,
            nx: n,
            ny: n,
        };
        let offset = scan.tx_rx_offset_cells as isize;
        let lo = offset / 2;
        let hi = offset - lo;
        let stations = (0..scan.n_traces)
            .map(|i| {
                let angle = i as f64 * TAU / scan.n_traces as f64;
                let p = [
                    center[0] + scan_radius * angle.cos(),
                    center[1] + scan_radius * angle.sin(),
                ];
                let (cx, cy) = grid_spec.nearest_cell(p).ok_or(Error::Placement { position: p })?;
                let (cx, cy) = (cx as isize, cy as isize);
                // offset along the lattice axis closest to the scan tangent
                let (tx, rx) = if angle.sin().abs() >= angle.cos().abs() {
                    let s = -angle.sin().signum() as isize;
                    ((cx - s * lo, cy), (cx + s * hi, cy))
                } else {
                    let s = angle.cos().signum() as isize;
                    ((cx, cy - s * lo), (cx, cy + s * hi))
                };
                let to_cell = |(x, y): (isize, isize)| (x as usize, y as usize);
                let (tx, rx) = (to_cell(tx), to_cell(rx));
                let a = grid_spec.cell_center(tx.0, tx.1);
                let b = grid_spec.cell_center(rx.0, rx.1);
                Ok(Station {
                    angle,
                    tx,
                    rx,
                    position: [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let lo_cell = cfg.pml_cells + 1;
        for s in &stations {
            for (x, y) in [s.tx, s.rx] {
                if x < lo_cell || y < lo_cell || x + lo_cell >= n || y + lo_cell >= n {
                    return Err(Error::Placement { position: s.position });
                }
            }
        }
        Ok(Self {
            grid_spec,
            scan_radius,
            stations,
        })
    }
}

fn run_stations(grid: &MaterialGrid, layout: &ScanLayout, cfg: &SimConfig) -> Result<BScan> {
    let solver = Solver::new(grid, *cfg)?;
    let traces: Vec<AScan> = layout
        .stations
        .par_iter()
        .map(|s| solver.run(&[s.tx], &[s.rx]).map(|mut v| v.remove(0)))
        .collect::<Result<_>>()?;
    let n_samples = traces[0].len();
    let dt = traces[0].dt;
    let mut data = Array2::zeros((traces.len(), n_samples));
    for (mut row, tr) in data.rows_mut().into_iter().zip(&traces) {
        row.assign(&ndarray::ArrayView1::from(&tr.samples));
    }
    Ok(BScan {
        traces: data,
        dt,
        angles: layout.stations.iter().map(|s| s.angle).collect(),
        trace_positions: layout.stations.iter().map(|s| s.position).collect(),
        t0_offset: 0.0,
    })
}

/// Simulates the full circumferential B-scan of `scene`.
pub fn simulate_bscan(scene: &Scene, scan: &ScanConfig, cfg: &SimConfig) -> Result<BScan> {
    let layout = ScanLayout::new(scene, scan, cfg)?;
    let grid = rasterize(scene, &layout.grid_spec)?;
    run_stations(&grid, &layout, cfg)
}

/// B-scan of an already rasterized grid with a precomputed layout.
pub fn simulate_bscan_on(grid: &MaterialGrid, layout: &ScanLayout, cfg: &SimConfig) -> Result<BScan> {
    if grid.spec != layout.grid_spec {
        return Err(Error::Shape("material grid does not match the scan layout".into()));
    }
    run_stations(grid, layout, cfg)
}

/// Direct-coupling reference: the first station's antenna pair in free space
/// on the same lattice.
pub fn simulate_reference(layout: &ScanLayout, cfg: &SimConfig) -> Result<AScan> {
    let grid = MaterialGrid::free_space(layout.grid_spec);
    let solver = Solver::new(&grid, *cfg)?;
    let s = &layout.stations[0];
    Ok(solver.run(&[s.tx], &[s.rx])?.remove(0))
}
