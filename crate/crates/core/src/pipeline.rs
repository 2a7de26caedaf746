//! End-to-end helpers shared by the command-line tool and the benchmarks:
//! simulate a scene, condition its B-scan, migrate and run both autofocus
//! criteria.

use serde::{Deserialize, Serialize};

use crate::autofocus::{
    entropy_aft, ring_mask, scene_rms_permittivity, sobel_edges, ssim_aft, AftResult, SsimParams, SweepSpec,
};
use crate::error::Result;
use crate::fdtd::{simulate_bscan_on, simulate_reference, AScan, BScan, ScanConfig, ScanLayout, SimConfig};
use crate::migrate::{contour_from_scan, surface_datum, Contour};
use crate::preprocess::{apply_path, ProcessingPath};
use crate::scene::{defect_mask, rasterize, BinaryMask, BlobShape, GridSpec, Scene};

/// Raw simulation output for one scene.
#[derive(Debug, Clone)]
pub struct SimulatedScan {
    pub layout: ScanLayout,
    pub raw: BScan,
    /// Antenna pair of station 0 in free space on the same lattice.
    pub reference: AScan,
}

pub fn simulate_scene(scene: &Scene, sim: &SimConfig, scan: &ScanConfig) -> Result<SimulatedScan> {
    scene.validate()?;
    let layout = ScanLayout::new(scene, scan, sim)?;
    let grid = rasterize(scene, &layout.grid_spec)?;
    let raw = simulate_bscan_on(&grid, &layout, sim)?;
    let reference = simulate_reference(&layout, sim)?;
    Ok(SimulatedScan {
        layout,
        raw,
        reference,
    })
}

/// Surface-referenced B-scan and contour ready for migration.
#[derive(Debug, Clone)]
pub struct MigrationInput {
    pub bscan: BScan,
    pub contour: Contour,
    pub image_spec: GridSpec,
}

/// Runs the migration processing path and moves time zero to the surface.
pub fn prepare_migration(
    raw: &BScan,
    reference: &AScan,
    outline: &BlobShape,
    path: &ProcessingPath,
) -> Result<MigrationInput> {
    let processed = apply_path(raw, reference, path)?;
    let contour = contour_from_scan(raw, outline)?;
    let bscan = surface_datum(&processed.bscan, &contour, reference)?;
    Ok(MigrationInput {
        bscan,
        contour,
        image_spec: GridSpec::imaging_window(outline.center),
    })
}

/// Ring mask around the defect outline on the imaging window.
pub fn defect_ring(scene: &Scene, image_spec: &GridSpec, thickness_px: usize) -> Result<BinaryMask> {
    ring_mask(&sobel_edges(&defect_mask(scene, image_spec)), thickness_px)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AftConfig {
    pub sweep: SweepSpec,
    pub ssim: SsimParams,
    pub ring_thickness_px: usize,
}

impl Default for AftConfig {
    fn default() -> Self {
        Self {
            sweep: SweepSpec::default(),
            ssim: SsimParams::default(),
            ring_thickness_px: 5,
        }
    }
}

/// Both autofocus selections and the RMS reference for one scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermittivityEstimate {
    pub ssim: AftResult,
    pub entropy: AftResult,
    pub eps_rms: f64,
}

pub fn estimate_permittivity(scene: &Scene, input: &MigrationInput, cfg: &AftConfig) -> Result<PermittivityEstimate> {
    let ring = defect_ring(scene, &input.image_spec, cfg.ring_thickness_px)?;
    let ssim = ssim_aft(&input.bscan, &input.contour, &input.image_spec, &ring, &cfg.sweep, &cfg.ssim)?;
    let entropy = entropy_aft(&input.bscan, &input.contour, &input.image_spec, &cfg.sweep)?;
    Ok(PermittivityEstimate {
        ssim,
        entropy,
        eps_rms: scene_rms_permittivity(scene)?,
    })
}
