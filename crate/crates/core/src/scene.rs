//! Layered cylindrical scenes: star-convex blob outlines, random sampling,
//! rasterization onto material grids and ground-truth defect masks.
//!
//! Coordinates are metres. Grids are indexed `[ix, iy]` with cell `(0, 0)`
//! centred on [`GridSpec::origin`].

use std::f64::consts::TAU;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on `Σ|a_k|` that keeps a blob star-convex about its centre.
pub const MAX_HARMONIC_SUM: f64 = 0.3;

/// Attempts made by [`sample_scene`] before giving up on a seed.
pub const MAX_SAMPLING_ATTEMPTS: usize = 1000;

/// Boundary samples used when checking containment and clearance.
pub const BOUNDARY_CHECK_SAMPLES: usize = 360;

pub type BinaryMask = Array2<bool>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub order: u32,
    pub amplitude: f64,
    pub phase: f64,
}

/// Closed outline `r(θ) = r0 · (1 + Σ a_k cos(kθ + φ_k))` around `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobShape {
    pub base_radius: f64,
    pub harmonics: Vec<Harmonic>,
    pub center: [f64; 2],
}

impl BlobShape {
    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        Self {
            base_radius: radius,
            harmonics: Vec::new(),
            center,
        }
    }

    pub fn harmonic_sum(&self) -> f64 {
        self.harmonics.iter().map(|h| h.amplitude.abs()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_radius > 0.0) || !self.base_radius.is_finite() {
            return Err(Error::Geometry(format!(
                "blob base radius must be positive, got {}",
                self.base_radius
            )));
        }
        if let Some(h) = self.harmonics.iter().find(|h| h.order < 2) {
            return Err(Error::Geometry(format!(
                "harmonic order must be at least 2, got {}",
                h.order
            )));
        }
        let sum = self.harmonic_sum();
        if sum > MAX_HARMONIC_SUM + 1e-12 {
            return Err(Error::Geometry(format!(
                "harmonic amplitudes sum to {sum}, above {MAX_HARMONIC_SUM}"
            )));
        }
        Ok(())
    }

    pub fn radius_at(&self, theta: f64) -> f64 {
        let modulation: f64 = self
            .harmonics
            .iter()
            .map(|h| h.amplitude * (h.order as f64 * theta + h.phase).cos())
            .sum();
        self.base_radius * (1.0 + modulation)
    }

    /// dr/dθ.
    pub fn radius_derivative(&self, theta: f64) -> f64 {
        let d: f64 = self
            .harmonics
            .iter()
            .map(|h| {
                let k = h.order as f64;
                -h.amplitude * k * (k * theta + h.phase).sin()
            })
            .sum();
        self.base_radius * d
    }

    fn radius_second_derivative(&self, theta: f64) -> f64 {
        let d: f64 = self
            .harmonics
            .iter()
            .map(|h| {
                let k = h.order as f64;
                -h.amplitude * k * k * (k * theta + h.phase).cos()
            })
            .sum();
        self.base_radius * d
    }

    pub fn point_at(&self, theta: f64) -> [f64; 2] {
        let r = self.radius_at(theta);
        [
            self.center[0] + r * theta.cos(),
            self.center[1] + r * theta.sin(),
        ]
    }

    /// Unit normal pointing away from the centre side of the outline.
    pub fn outward_normal(&self, theta: f64) -> [f64; 2] {
        let r = self.radius_at(theta);
        let dr = self.radius_derivative(theta);
        let (s, c) = theta.sin_cos();
        let n = [r * c + dr * s, r * s - dr * c];
        let len = n[0].hypot(n[1]);
        [n[0] / len, n[1] / len]
    }

    pub fn inward_normal(&self, theta: f64) -> [f64; 2] {
        let n = self.outward_normal(theta);
        [-n[0], -n[1]]
    }

    /// Polar coordinates `(r, θ)` of `p` relative to the centre, θ in `[0, 2π)`.
    pub fn polar(&self, p: [f64; 2]) -> (f64, f64) {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        (dx.hypot(dy), dy.atan2(dx).rem_euclid(TAU))
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let (r, theta) = self.polar(p);
        r < self.radius_at(theta)
    }

    /// Largest radius over a dense angular sampling.
    pub fn max_radius(&self) -> f64 {
        sample_angles(3600)
            .map(|t| self.radius_at(t))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_radius(&self) -> f64 {
        sample_angles(3600)
            .map(|t| self.radius_at(t))
            .fold(f64::INFINITY, f64::min)
    }

    /// Enclosed area, `½∮r² dθ`. The periodic trapezoid rule is exact here.
    pub fn area(&self) -> f64 {
        let n = 4096;
        let sum: f64 = sample_angles(n).map(|t| self.radius_at(t).powi(2)).sum();
        0.5 * sum * TAU / n as f64
    }

    /// Signed curvature numerator `r² + 2r′² − r·r″`; positive everywhere iff convex.
    pub fn is_convex(&self) -> bool {
        sample_angles(720).all(|t| {
            let r = self.radius_at(t);
            let d1 = self.radius_derivative(t);
            let d2 = self.radius_second_derivative(t);
            r * r + 2.0 * d1 * d1 - r * d2 > 0.0
        })
    }

    /// Lower bound on `cos ψ`, ψ being the angle between the radial direction
    /// and the outline normal.
    fn min_normal_cosine(&self) -> f64 {
        sample_angles(720)
            .map(|t| {
                let r = self.radius_at(t);
                let d = self.radius_derivative(t);
                r / r.hypot(d)
            })
            .fold(1.0, f64::min)
    }

    /// Euclidean distance from `p` to the outline.
    pub fn distance_to_boundary(&self, p: [f64; 2]) -> f64 {
        const COARSE: usize = 256;
        let step = TAU / COARSE as f64;
        let dist2 = |t: f64| {
            let q = self.point_at(t);
            (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)
        };
        let (best, _) = (0..COARSE)
            .map(|k| k as f64 * step)
            .map(|t| (t, dist2(t)))
            .fold((0.0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        // golden-section refinement in the bracketing interval
        let (mut a, mut b) = (best - step, best + step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (dist2(c), dist2(d));
        for _ in 0..40 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = dist2(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = dist2(d);
            }
        }
        fc.min(fd).sqrt()
    }
}

/// Evaluates the blob outline radius at angle `theta`.
pub fn blob_radius(shape: &BlobShape, theta: f64) -> f64 {
    shape.radius_at(theta)
}

fn sample_angles(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| k as f64 * TAU / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Background,
    /// Layer index 0 (outermost) to 2 (innermost).
    Layer(usize),
    Defect,
}

/// Three-layer cylindrical object with one embedded defect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub outer_shape: BlobShape,
    /// Thickness of layers 1 and 2 along the inward normal; layer 3 fills the rest.
    pub layer_thicknesses: [f64; 2],
    pub layer_eps: [f64; 3],
    pub layer_sigma: [f64; 3],
    pub defect_shape: BlobShape,
    pub defect_eps: f64,
    pub defect_sigma: f64,
    pub seed: u64,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        self.outer_shape.validate()?;
        self.defect_shape.validate()?;
        let eps_ok = self.layer_eps.iter().chain([&self.defect_eps]).all(|e| *e >= 1.0);
        let sigma_ok = self
            .layer_sigma
            .iter()
            .chain([&self.defect_sigma])
            .all(|s| *s >= 0.0);
        if !eps_ok || !sigma_ok {
            return Err(Error::Geometry(
                "permittivities must be >= 1 and conductivities >= 0".into(),
            ));
        }
        if self.layer_thicknesses.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Geometry("layer thicknesses must be positive".into()));
        }
        let clearance = self.defect_clearance();
        if clearance < 0.0 {
            return Err(Error::Geometry(format!(
                "defect protrudes {:.4} m out of the innermost layer",
                -clearance
            )));
        }
        Ok(())
    }

    /// Depth of the innermost layer's outer boundary below the surface.
    pub fn core_depth(&self) -> f64 {
        self.layer_thicknesses[0] + self.layer_thicknesses[1]
    }

    /// Smallest margin between the defect outline and the innermost layer
    /// boundary over [`BOUNDARY_CHECK_SAMPLES`] defect boundary points.
    /// Negative when the defect leaves layer 3.
    pub fn defect_clearance(&self) -> f64 {
        let core = self.core_depth();
        sample_angles(BOUNDARY_CHECK_SAMPLES)
            .map(|t| {
                let p = self.defect_shape.point_at(t);
                if !self.outer_shape.contains(p) {
                    return f64::NEG_INFINITY;
                }
                self.outer_shape.distance_to_boundary(p) - core
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance below the outer surface, `None` outside the object.
    pub fn depth_below_surface(&self, p: [f64; 2]) -> Option<f64> {
        self.outer_shape
            .contains(p)
            .then(|| self.outer_shape.distance_to_boundary(p))
    }

    pub fn region_at(&self, p: [f64; 2]) -> Region {
        let classifier = RegionClassifier::new(self);
        classifier.classify(p)
    }

    pub fn material(&self, region: Region) -> (f64, f64) {
        match region {
            Region::Background => (1.0, 0.0),
            Region::Layer(i) => (self.layer_eps[i], self.layer_sigma[i]),
            Region::Defect => (self.defect_eps, self.defect_sigma),
        }
    }

    /// Same scene with the defect filled by layer-3 material.
    pub fn without_defect(&self) -> Scene {
        Scene {
            defect_eps: self.layer_eps[2],
            defect_sigma: self.layer_sigma[2],
            ..self.clone()
        }
    }
}

/// Caches the per-outline bounds used to skip exact distance queries.
struct RegionClassifier<'a> {
    scene: &'a Scene,
    min_cos: f64,
}

impl<'a> RegionClassifier<'a> {
    fn new(scene: &'a Scene) -> Self {
        Self {
            scene,
            min_cos: scene.outer_shape.min_normal_cosine(),
        }
    }

    fn classify(&self, p: [f64; 2]) -> Region {
        let outer = &self.scene.outer_shape;
        let (r, theta) = outer.polar(p);
        let radial_gap = outer.radius_at(theta) - r;
        if radial_gap <= 0.0 {
            return Region::Background;
        }
        let [t1, t2] = self.scene.layer_thicknesses;
        // depth <= radial gap and depth >= radial gap · cos ψ
        let depth = if radial_gap < t1 {
            radial_gap
        } else if radial_gap * self.min_cos >= t1 + t2 {
            radial_gap * self.min_cos
        } else {
            outer.distance_to_boundary(p)
        };
        if depth < t1 {
            Region::Layer(0)
        } else if depth < t1 + t2 {
            Region::Layer(1)
        } else if self.scene.defect_shape.contains(p) {
            Region::Defect
        } else {
            Region::Layer(2)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub min: f64,
    pub max: f64,
}

impl Span {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub const fn fixed(value: f64) -> Self {
        Self::new(value, value)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.max > self.min {
            rng.gen_range(self.min..=self.max)
        } else {
            self.min
        }
    }
}

/// Parameter ranges for [`sample_scene`]. Defaults describe a three-layer
/// tree trunk: bark, a high-permittivity band and inner wood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneRanges {
    pub object_radius: Span,
    pub defect_radius: Span,
    pub layer_thickness: [Span; 2],
    pub layer_eps: [Span; 3],
    pub layer_sigma: [Span; 3],
    pub defect_eps: Span,
    pub defect_sigma: Span,
    /// Per-harmonic amplitude bound for the outer outline (orders 2 to 4).
    pub outer_harmonic_amplitude: f64,
    /// Per-harmonic amplitude bound for the defect outline (orders 2 to 5).
    pub defect_harmonic_amplitude: f64,
    /// Minimum gap between the defect and the layer-2/layer-3 interface.
    pub clearance: f64,
}

impl Default for SceneRanges {
    fn default() -> Self {
        Self {
            object_radius: Span::new(0.15, 0.33),
            defect_radius: Span::new(0.04, 0.23),
            layer_thickness: [Span::new(0.01, 0.02), Span::new(0.01, 0.03)],
            layer_eps: [Span::new(2.0, 3.0), Span::new(23.0, 25.0), Span::new(4.0, 5.0)],
            layer_sigma: [
                Span::new(0.01, 0.03),
                Span::new(0.1, 0.3),
                Span::new(0.01, 0.03),
            ],
            defect_eps: Span::new(5.0, 40.0),
            defect_sigma: Span::new(0.01, 0.03),
            outer_harmonic_amplitude: 0.04,
            defect_harmonic_amplitude: 0.15,
            clearance: 0.01,
        }
    }
}

impl SceneRanges {
    pub fn validate(&self) -> Result<()> {
        let spans = [
            ("object_radius", self.object_radius),
            ("defect_radius", self.defect_radius),
            ("layer_thickness[0]", self.layer_thickness[0]),
            ("layer_thickness[1]", self.layer_thickness[1]),
            ("layer_eps[0]", self.layer_eps[0]),
            ("layer_eps[1]", self.layer_eps[1]),
            ("layer_eps[2]", self.layer_eps[2]),
            ("layer_sigma[0]", self.layer_sigma[0]),
            ("layer_sigma[1]", self.layer_sigma[1]),
            ("layer_sigma[2]", self.layer_sigma[2]),
            ("defect_eps", self.defect_eps),
            ("defect_sigma", self.defect_sigma),
        ];
        for (name, span) in spans {
            if !(span.min <= span.max) || !span.min.is_finite() || !span.max.is_finite() {
                return Err(Error::Parameter(format!(
                    "range {name} is degenerate: [{}, {}]",
                    span.min, span.max
                )));
            }
        }
        if self.object_radius.min <= 0.0 || self.defect_radius.min <= 0.0 {
            return Err(Error::Parameter("radii must be positive".into()));
        }
        if self.layer_thickness.iter().any(|s| s.min <= 0.0) {
            return Err(Error::Parameter("layer thicknesses must be positive".into()));
        }
        let eps_min = self
            .layer_eps
            .iter()
            .chain([&self.defect_eps])
            .map(|s| s.min)
            .fold(f64::INFINITY, f64::min);
        let sigma_min = self
            .layer_sigma
            .iter()
            .chain([&self.defect_sigma])
            .map(|s| s.min)
            .fold(f64::INFINITY, f64::min);
        if eps_min < 1.0 || sigma_min < 0.0 {
            return Err(Error::Parameter(
                "permittivity ranges must be >= 1 and conductivity ranges >= 0".into(),
            ));
        }
        if !(0.0..=MAX_HARMONIC_SUM).contains(&self.outer_harmonic_amplitude)
            || !(0.0..=MAX_HARMONIC_SUM).contains(&self.defect_harmonic_amplitude)
            || self.clearance < 0.0
        {
            return Err(Error::Parameter("harmonic bounds or clearance out of range".into()));
        }
        Ok(())
    }
}

fn random_harmonics(
    rng: &mut impl Rng,
    orders: std::ops::RangeInclusive<u32>,
    bound: f64,
) -> Vec<Harmonic> {
    let mut harmonics: Vec<Harmonic> = orders
        .map(|order| Harmonic {
            order,
            amplitude: if bound > 0.0 {
                rng.gen_range(-bound..=bound)
            } else {
                0.0
            },
            phase: rng.gen_range(0.0..TAU),
        })
        .collect();
    let sum: f64 = harmonics.iter().map(|h| h.amplitude.abs()).sum();
    if sum > MAX_HARMONIC_SUM {
        let scale = MAX_HARMONIC_SUM / sum;
        for h in &mut harmonics {
            h.amplitude *= scale;
        }
    }
    harmonics
}

/// Draws a random scene. The same seed always yields the same scene.
pub fn sample_scene(seed: u64, ranges: &SceneRanges) -> Result<Scene> {
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fail = |reason: &str| Error::Sampling {
        seed,
        attempts: MAX_SAMPLING_ATTEMPTS,
        reason: reason.to_string(),
    };

    let outer_shape = (0..MAX_SAMPLING_ATTEMPTS)
        .map(|_| BlobShape {
            base_radius: ranges.object_radius.sample(&mut rng),
            harmonics: random_harmonics(&mut rng, 2..=4, ranges.outer_harmonic_amplitude),
            center: [0.0, 0.0],
        })
        .find(BlobShape::is_convex)
        .ok_or_else(|| fail("no convex outer outline"))?;

    let layer_thicknesses = [
        ranges.layer_thickness[0].sample(&mut rng),
        ranges.layer_thickness[1].sample(&mut rng),
    ];
    let layer_eps = [
        ranges.layer_eps[0].sample(&mut rng),
        ranges.layer_eps[1].sample(&mut rng),
        ranges.layer_eps[2].sample(&mut rng),
    ];
    let layer_sigma = [
        ranges.layer_sigma[0].sample(&mut rng),
        ranges.layer_sigma[1].sample(&mut rng),
        ranges.layer_sigma[2].sample(&mut rng),
    ];
    let defect_eps = ranges.defect_eps.sample(&mut rng);
    let defect_sigma = ranges.defect_sigma.sample(&mut rng);

    // inscribed radius of the innermost region, conservatively
    let core_radius = outer_shape.min_radius() - layer_thicknesses[0] - layer_thicknesses[1]
        - ranges.clearance;

    let mut scene = Scene {
        outer_shape,
        layer_thicknesses,
        layer_eps,
        layer_sigma,
        defect_shape: BlobShape::circle([0.0, 0.0], ranges.defect_radius.min),
        defect_eps,
        defect_sigma,
        seed,
    };

    for _ in 0..MAX_SAMPLING_ATTEMPTS {
        let harmonics = random_harmonics(&mut rng, 2..=5, ranges.defect_harmonic_amplitude);
        let sum: f64 = harmonics.iter().map(|h| h.amplitude.abs()).sum();
        let fit = core_radius / (1.0 + sum);
        let hi = ranges.defect_radius.max.min(fit);
        if hi < ranges.defect_radius.min {
            continue;
        }
        let base_radius = Span::new(ranges.defect_radius.min, hi).sample(&mut rng);
        let slack = (core_radius - base_radius * (1.0 + sum)).max(0.0);
        let rho = slack * rng.gen::<f64>().sqrt();
        let phi = rng.gen_range(0.0..TAU);
        scene.defect_shape = BlobShape {
            base_radius,
            harmonics,
            center: [rho * phi.cos(), rho * phi.sin()],
        };
        if scene.defect_clearance() >= ranges.clearance {
            return Ok(scene);
        }
    }
    Err(fail("defect does not fit inside the innermost layer"))
}

/// Regular 2-D grid; cell `(ix, iy)` is centred at `origin + spacing·(ix, iy)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: [f64; 2],
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// Square `n × n` window of physical width `side` centred on `center`.
    pub fn centered(center: [f64; 2], side: f64, n: usize) -> Self {
        let spacing = side / n as f64;
        let half = 0.5 * (n as f64 - 1.0) * spacing;
        Self {
            origin: [center[0] - half, center[1] - half],
            spacing,
            nx: n,
            ny: n,
        }
    }

    /// The 128 × 128, 0.70 m imaging window used for migrated images and masks.
    pub fn imaging_window(center: [f64; 2]) -> Self {
        Self::centered(center, 0.70, 128)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spacing > 0.0) || self.nx == 0 || self.ny == 0 {
            return Err(Error::Geometry(format!(
                "grid needs positive spacing and non-zero size (spacing {}, {}x{})",
                self.spacing, self.nx, self.ny
            )));
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.origin[0] + ix as f64 * self.spacing,
            self.origin[1] + iy as f64 * self.spacing,
        ]
    }

    /// Nearest cell to `p`, `None` outside the grid.
    pub fn nearest_cell(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        let fx = ((p[0] - self.origin[0]) / self.spacing).round();
        let fy = ((p[1] - self.origin[1]) / self.spacing).round();
        (fx >= 0.0 && fy >= 0.0 && (fx as usize) < self.nx && (fy as usize) < self.ny)
            .then(|| (fx as usize, fy as usize))
    }

    /// Lower-left and upper-right cell-centre coordinates.
    pub fn extent(&self) -> ([f64; 2], [f64; 2]) {
        (self.origin, self.cell_center(self.nx - 1, self.ny - 1))
    }

    pub fn covers_disk(&self, center: [f64; 2], radius: f64) -> bool {
        let (lo, hi) = self.extent();
        center[0] - radius >= lo[0]
            && center[0] + radius <= hi[0]
            && center[1] - radius >= lo[1]
            && center[1] + radius <= hi[1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialGrid {
    pub spec: GridSpec,
    pub eps_r: Array2<f64>,
    pub sigma: Array2<f64>,
}

impl MaterialGrid {
    /// Homogeneous grid.
    pub fn uniform(spec: GridSpec, eps_r: f64, sigma: f64) -> Self {
        Self {
            spec,
            eps_r: Array2::from_elem(spec.shape(), eps_r),
            sigma: Array2::from_elem(spec.shape(), sigma),
        }
    }

    pub fn free_space(spec: GridSpec) -> Self {
        Self::uniform(spec, 1.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.eps_r.dim() != self.spec.shape() || self.sigma.dim() != self.spec.shape() {
            return Err(Error::Shape(format!(
                "material arrays {:?}/{:?} do not match grid {:?}",
                self.eps_r.dim(),
                self.sigma.dim(),
                self.spec.shape()
            )));
        }
        if self.eps_r.iter().any(|e| !(*e >= 1.0)) || self.sigma.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::Geometry(
                "material grid needs eps >= 1 and sigma >= 0 everywhere".into(),
            ));
        }
        Ok(())
    }
}

/// Samples scene materials at every cell centre.
pub fn rasterize(scene: &Scene, spec: &GridSpec) -> Result<MaterialGrid> {
    spec.validate()?;
    let outer = &scene.outer_shape;
    if !spec.covers_disk(outer.center, outer.max_radius()) {
        return Err(Error::Geometry(
            "grid window does not cover the object outline".into(),
        ));
    }
    let classifier = RegionClassifier::new(scene);
    let mut grid = MaterialGrid::free_space(*spec);
    for ((ix, iy), eps) in grid.eps_r.indexed_iter_mut() {
        let region = classifier.classify(spec.cell_center(ix, iy));
        let (e, s) = scene.material(region);
        *eps = e;
        grid.sigma[[ix, iy]] = s;
    }
    Ok(grid)
}

/// Ground-truth defect mask on an image grid: true inside the defect outline.
pub fn defect_mask(scene: &Scene, image_spec: &GridSpec) -> BinaryMask {
    Array2::from_shape_fn(image_spec.shape(), |(ix, iy)| {
        scene.defect_shape.contains(image_spec.cell_center(ix, iy))
    })
}

/// True inside the object outline.
pub fn object_mask(outline: &BlobShape, image_spec: &GridSpec) -> BinaryMask {
    Array2::from_shape_fn(image_spec.shape(), |(ix, iy)| {
        outline.contains(image_spec.cell_center(ix, iy))
    })
}
