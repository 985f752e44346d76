//! Analytic vessel phantoms with known excess wall volume.
//!
//! A tube of constant lumen radius is surrounded by a wall whose thickness
//! `t(θ, s)` is the nominal thickness plus optional bumps and a smooth seeded
//! noise field. `s` is arc length along the centerline and `θ` the angle around
//! it. Voxels are labeled by their center point.

use std::f64::consts::{PI, TAU};

use nalgebra::{Point3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{LabelVolume, VolumeError, VolumeGeometry, BACKGROUND, LUMEN, WALL};

/// Angular and axial node spacing of the noise field.
const NOISE_ANGULAR_NODES: usize = 16;
const NOISE_AXIAL_CELL_MM: f64 = 3.0;

/// Quadrature refinement relative to the voxel size.
const QUADRATURE_REFINEMENT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum PhantomKind {
    StraightTube,
    /// Centerline is a circular arc in the x-z plane.
    CurvedTube { bend_radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BumpProfile {
    /// `amplitude * exp(-Δs²/2σs² - Δθ²/2σθ²)`.
    Gaussian,
    /// Flat top over `|Δs| ≤ sigma_axial`, `|Δθ| ≤ sigma_angular` with cosine
    /// roll-off of the given width in each direction (mm axially, rad angularly).
    Plateau { edge_axial: f64, edge_angular: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center_axial: f64,
    pub center_angular: f64,
    pub amplitude: f64,
    pub sigma_axial: f64,
    pub sigma_angular: f64,
    #[serde(default = "default_profile")]
    pub profile: BumpProfile,
}

fn default_profile() -> BumpProfile {
    BumpProfile::Gaussian
}

impl Bump {
    pub fn gaussian(center_axial: f64, center_angular: f64, amplitude: f64, sigma_axial: f64, sigma_angular: f64) -> Self {
        Self { center_axial, center_angular, amplitude, sigma_axial, sigma_angular, profile: BumpProfile::Gaussian }
    }

    /// Extra wall thickness at arc length `s` and angle `theta`.
    pub fn height(&self, s: f64, theta: f64) -> f64 {
        let ds = s - self.center_axial;
        let dt = wrap_angle(theta - self.center_angular);
        match self.profile {
            BumpProfile::Gaussian => {
                let e = 0.5 * (ds / self.sigma_axial).powi(2) + 0.5 * (dt / self.sigma_angular).powi(2);
                self.amplitude * (-e).exp()
            }
            BumpProfile::Plateau { edge_axial, edge_angular } => {
                self.amplitude
                    * cosine_box(ds.abs(), self.sigma_axial, edge_axial)
                    * cosine_box(dt.abs(), self.sigma_angular, edge_angular)
            }
        }
    }
}

fn cosine_box(x: f64, half_width: f64, edge: f64) -> f64 {
    if x <= half_width {
        1.0
    } else if edge > 0.0 && x < half_width + edge {
        0.5 * (1.0 + (PI * (x - half_width) / edge).cos())
    } else {
        0.0
    }
}

/// Maps an angle difference to `(-π, π]`.
pub(crate) fn wrap_angle(a: f64) -> f64 {
    let mut a = a % TAU;
    if a > PI {
        a -= TAU;
    } else if a <= -PI {
        a += TAU;
    }
    a
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    pub lumen_radius: f64,
    pub wall_thickness: f64,
    #[serde(default)]
    pub bumps: Vec<Bump>,
    #[serde(default)]
    pub noise_sigma: f64,
    pub voxel_size: f64,
    pub length: f64,
    #[serde(default)]
    pub seed: u64,
}

impl PhantomSpec {
    /// Straight healthy tube without bumps or noise.
    pub fn straight(lumen_radius: f64, wall_thickness: f64, length: f64, voxel_size: f64) -> Self {
        Self {
            kind: PhantomKind::StraightTube,
            lumen_radius,
            wall_thickness,
            bumps: Vec::new(),
            noise_sigma: 0.0,
            voxel_size,
            length,
            seed: 0,
        }
    }

    pub fn with_bump(mut self, bump: Bump) -> Self {
        self.bumps.push(bump);
        self
    }

    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.noise_sigma = sigma;
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), VolumeError> {
        let invalid = |m: String| Err(VolumeError::Invalid(m));
        if !(self.lumen_radius > 0.0) {
            return invalid(format!("lumen_radius must be > 0, got {}", self.lumen_radius));
        }
        if !(self.wall_thickness > 0.0) {
            return invalid(format!("wall_thickness must be > 0, got {}", self.wall_thickness));
        }
        if !(self.voxel_size > 0.0) {
            return invalid(format!("voxel_size must be > 0, got {}", self.voxel_size));
        }
        if !(self.length > 0.0) {
            return invalid(format!("length must be > 0, got {}", self.length));
        }
        if !(self.noise_sigma >= 0.0) {
            return invalid(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        if let PhantomKind::CurvedTube { bend_radius } = self.kind {
            let outer = self.lumen_radius + self.wall_thickness + self.max_bump_amplitude();
            if !(bend_radius > outer) {
                return invalid(format!("bend_radius {bend_radius} must exceed the outer radius {outer}"));
            }
        }
        for (n, b) in self.bumps.iter().enumerate() {
            if !(b.amplitude >= 0.0) {
                return invalid(format!("bump {n}: amplitude must be >= 0"));
            }
            if !(b.sigma_axial > 0.0 && b.sigma_angular > 0.0) {
                return invalid(format!("bump {n}: widths must be > 0"));
            }
            if !(0.0..=self.length).contains(&b.center_axial) {
                return invalid(format!("bump {n}: center_axial {} outside the tube [0, {}]", b.center_axial, self.length));
            }
            let (axial_extent, angular_extent) = match b.profile {
                BumpProfile::Gaussian => (2.0 * b.sigma_axial, b.sigma_angular),
                BumpProfile::Plateau { edge_axial, edge_angular } => {
                    (b.sigma_axial + edge_axial, b.sigma_angular + edge_angular)
                }
            };
            if axial_extent > 0.5 * self.length || angular_extent > PI {
                return invalid(format!("bump {n} is larger than the volume extent"));
            }
        }
        Ok(())
    }

    fn max_bump_amplitude(&self) -> f64 {
        self.bumps.iter().map(|b| b.amplitude).sum()
    }
}

/// Analytic reference values for a generated phantom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// `∫∫∫ over the wall beyond the nominal thickness`, all contributions (bumps and noise).
    pub excess_volume_mm3: f64,
    /// Same, counting only the bumps (noise excluded).
    pub bump_excess_volume_mm3: f64,
    /// Area of the nominal outer surface where bumps exceed 10% of their amplitude.
    pub bump_footprint_mm2: f64,
    pub wall_voxels: usize,
    pub lumen_voxels: usize,
}

/// Smooth, seeded thickness perturbation on a periodic (θ, s) node grid.
struct NoiseField {
    axial_nodes: usize,
    cell: f64,
    values: Vec<f64>,
}

impl NoiseField {
    fn new(spec: &PhantomSpec) -> Option<Self> {
        if spec.noise_sigma == 0.0 {
            return None;
        }
        let axial_nodes = (spec.length / NOISE_AXIAL_CELL_MM).ceil() as usize + 1;
        let cell = spec.length / (axial_nodes - 1) as f64;
        let normal = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let values = (0..axial_nodes * NOISE_ANGULAR_NODES).map(|_| normal.sample(&mut rng)).collect();
        Some(Self { axial_nodes, cell, values })
    }

    fn sample(&self, s: f64, theta: f64) -> f64 {
        let u = theta.rem_euclid(TAU) / TAU * NOISE_ANGULAR_NODES as f64;
        let v = (s / self.cell).clamp(0.0, (self.axial_nodes - 1) as f64);
        let (i0, fu) = (u.floor() as usize % NOISE_ANGULAR_NODES, u - u.floor());
        let i1 = (i0 + 1) % NOISE_ANGULAR_NODES;
        let j0 = (v.floor() as usize).min(self.axial_nodes - 2);
        let fv = v - j0 as f64;
        let at = |i: usize, j: usize| self.values[j * NOISE_ANGULAR_NODES + i];
        let a = at(i0, j0) * (1.0 - fu) + at(i1, j0) * fu;
        let b = at(i0, j0 + 1) * (1.0 - fu) + at(i1, j0 + 1) * fu;
        a * (1.0 - fv) + b * fv
    }
}

struct TubeModel<'a> {
    spec: &'a PhantomSpec,
    noise: Option<NoiseField>,
}

/// Position of a point relative to the tube centerline.
struct TubeCoords {
    s: f64,
    theta: f64,
    rho: f64,
}

impl<'a> TubeModel<'a> {
    fn bump_height(&self, s: f64, theta: f64) -> f64 {
        self.spec.bumps.iter().map(|b| b.height(s, theta)).sum()
    }

    fn thickness(&self, s: f64, theta: f64) -> f64 {
        let noise = self.noise.as_ref().map_or(0.0, |n| n.sample(s, theta));
        (self.spec.wall_thickness + self.bump_height(s, theta) + noise).max(0.0)
    }

    fn coords(&self, p: &Point3<f64>) -> Option<TubeCoords> {
        match self.spec.kind {
            PhantomKind::StraightTube => {
                if p.z < 0.0 || p.z > self.spec.length {
                    return None;
                }
                Some(TubeCoords { s: p.z, theta: p.y.atan2(p.x), rho: p.x.hypot(p.y) })
            }
            PhantomKind::CurvedTube { bend_radius } => {
                let q = Vector3::new(p.x - bend_radius, p.y, p.z);
                let phi = q.z.atan2(-q.x);
                let s = bend_radius * phi;
                if !(0.0..=self.spec.length).contains(&s) {
                    return None;
                }
                let e1 = Vector3::new(-phi.cos(), 0.0, phi.sin());
                let axis = Vector3::new(bend_radius, 0.0, 0.0) + bend_radius * e1;
                let d = p.coords - axis;
                let (a, b) = (d.dot(&e1), d.y);
                Some(TubeCoords { s, theta: b.atan2(a), rho: a.hypot(b) })
            }
        }
    }

    fn label(&self, p: &Point3<f64>) -> u8 {
        let Some(c) = self.coords(p) else {
            return BACKGROUND;
        };
        let r = self.spec.lumen_radius;
        if c.rho < r {
            LUMEN
        } else if c.rho < r + self.thickness(c.s, c.theta) {
            WALL
        } else {
            BACKGROUND
        }
    }

    fn curvature(&self) -> f64 {
        match self.spec.kind {
            PhantomKind::StraightTube => 0.0,
            PhantomKind::CurvedTube { bend_radius } => 1.0 / bend_radius,
        }
    }

    /// Volume of the shell `r0 < ρ < r1` per unit dθ ds, including the bend factor.
    fn shell_element(&self, r0: f64, r1: f64, theta: f64) -> f64 {
        let kappa = self.curvature();
        0.5 * (r1 * r1 - r0 * r0) + kappa * theta.cos() * (r1.powi(3) - r0.powi(3)) / 3.0
    }

    /// Midpoint-rule quadrature over (θ, s).
    fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let step = self.spec.voxel_size / QUADRATURE_REFINEMENT;
        let n_s = (self.spec.length / step).ceil() as usize;
        let ds = self.spec.length / n_s as f64;
        let outer = self.spec.lumen_radius + self.spec.wall_thickness;
        let n_t = ((TAU * outer / step).ceil() as usize).max(360);
        let dt = TAU / n_t as f64;
        let mut total = 0.0;
        for j in 0..n_s {
            let s = (j as f64 + 0.5) * ds;
            let mut row = 0.0;
            for i in 0..n_t {
                row += f(s, -PI + (i as f64 + 0.5) * dt);
            }
            total += row;
        }
        total * ds * dt
    }

    fn excess(&self, s: f64, theta: f64, with_noise: bool) -> f64 {
        let nominal = self.spec.lumen_radius + self.spec.wall_thickness;
        let t = if with_noise {
            self.thickness(s, theta)
        } else {
            self.spec.wall_thickness + self.bump_height(s, theta)
        };
        let r1 = self.spec.lumen_radius + t;
        if r1 > nominal {
            self.shell_element(nominal, r1, theta)
        } else {
            0.0
        }
    }

    fn footprint(&self) -> f64 {
        if self.spec.bumps.is_empty() {
            return 0.0;
        }
        let nominal = self.spec.lumen_radius + self.spec.wall_thickness;
        let kappa = self.curvature();
        self.integrate(|s, theta| {
            let visible = self.spec.bumps.iter().any(|b| b.amplitude > 0.0 && b.height(s, theta) > 0.1 * b.amplitude);
            if visible {
                nominal * (1.0 + kappa * nominal * theta.cos())
            } else {
                0.0
            }
        })
    }

    fn bounds(&self) -> (Point3<f64>, Point3<f64>) {
        let spec = self.spec;
        let reach = spec.lumen_radius
            + spec.wall_thickness
            + spec.max_bump_amplitude()
            + 4.0 * spec.noise_sigma
            + 2.0 * spec.voxel_size;
        match spec.kind {
            PhantomKind::StraightTube => (Point3::new(-reach, -reach, 0.0), Point3::new(reach, reach, spec.length)),
            PhantomKind::CurvedTube { bend_radius } => {
                let mut lo = Point3::new(f64::MAX, -reach, f64::MAX);
                let mut hi = Point3::new(f64::MIN, reach, f64::MIN);
                let steps = 256;
                for n in 0..=steps {
                    let phi = spec.length / bend_radius * n as f64 / steps as f64;
                    let x = bend_radius - bend_radius * phi.cos();
                    let z = bend_radius * phi.sin();
                    lo.x = lo.x.min(x - reach);
                    hi.x = hi.x.max(x + reach);
                    lo.z = lo.z.min(z - reach);
                    hi.z = hi.z.max(z + reach);
                }
                (lo, hi)
            }
        }
    }
}

/// Voxelizes the phantom and evaluates its ground truth.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<(LabelVolume, GroundTruth), VolumeError> {
    spec.validate()?;
    let model = TubeModel { spec, noise: NoiseField::new(spec) };

    let (lo, hi) = model.bounds();
    let vs = spec.voxel_size;
    let mut dims = [0usize; 3];
    let mut origin = [0.0; 3];
    for a in 0..3 {
        let extent = hi[a] - lo[a];
        dims[a] = (extent / vs).floor() as usize + 1;
        // center the voxel lattice inside the bounds
        origin[a] = lo[a] + 0.5 * (extent - (dims[a] - 1) as f64 * vs);
    }
    let geometry = VolumeGeometry::new(dims, [vs; 3], origin)?;

    let mut labels = vec![BACKGROUND; geometry.voxel_count()];
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                labels[geometry.linear_index(i, j, k)] = model.label(&geometry.voxel_center(i, j, k));
            }
        }
    }
    let volume = LabelVolume::new(geometry, labels)?;

    let truth = GroundTruth {
        excess_volume_mm3: model.integrate(|s, t| model.excess(s, t, true)),
        bump_excess_volume_mm3: model.integrate(|s, t| model.excess(s, t, false)),
        bump_footprint_mm2: model.footprint(),
        wall_voxels: volume.count(WALL),
        lumen_voxels: volume.count(LUMEN),
    };
    Ok((volume, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        for a in [-10.0, -PI, -1.0, 0.0, 1.0, PI, 7.0] {
            let w = wrap_angle(a);
            assert!(w > -PI - 1e-12 && w <= PI + 1e-12);
            assert!(((a - w) / TAU - ((a - w) / TAU).round()).abs() < 1e-12);
        }
    }

    #[test]
    fn healthy_tube_has_no_excess() {
        let spec = PhantomSpec::straight(3.0, 1.0, 10.0, 0.5);
        let (vol, truth) = generate_phantom(&spec).unwrap();
        assert_eq!(truth.excess_volume_mm3, 0.0);
        assert_eq!(truth.bump_footprint_mm2, 0.0);
        assert!(truth.wall_voxels > 0 && truth.lumen_voxels > 0);
        assert_eq!(vol.count(WALL), truth.wall_voxels);
    }

    #[test]
    fn labels_follow_radii() {
        let spec = PhantomSpec::straight(3.0, 1.0, 6.0, 0.25);
        let model = TubeModel { spec: &spec, noise: None };
        assert_eq!(model.label(&Point3::new(0.0, 0.0, 3.0)), LUMEN);
        assert_eq!(model.label(&Point3::new(2.9, 0.0, 3.0)), LUMEN);
        assert_eq!(model.label(&Point3::new(0.0, 3.5, 3.0)), WALL);
        assert_eq!(model.label(&Point3::new(-4.1, 0.0, 3.0)), BACKGROUND);
        assert_eq!(model.label(&Point3::new(0.0, 0.0, 6.5)), BACKGROUND);
    }

    #[test]
    fn curved_tube_coordinates() {
        let mut spec = PhantomSpec::straight(2.0, 1.0, 10.0, 0.5);
        spec.kind = PhantomKind::CurvedTube { bend_radius: 20.0 };
        let model = TubeModel { spec: &spec, noise: None };
        // centerline point at phi = 0.25 rad
        let phi: f64 = 0.25;
        let p = Point3::new(20.0 - 20.0 * phi.cos(), 0.0, 20.0 * phi.sin());
        let c = model.coords(&p).unwrap();
        assert!((c.s - 5.0).abs() < 1e-12 && c.rho < 1e-12);
        let off = p + Vector3::new(0.0, 1.5, 0.0);
        let c = model.coords(&off).unwrap();
        assert!((c.rho - 1.5).abs() < 1e-12 && (c.theta - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn oversized_bump_is_rejected() {
        let spec = PhantomSpec::straight(3.0, 1.0, 10.0, 0.5).with_bump(Bump::gaussian(5.0, 0.0, 1.0, 4.0, 0.5));
        assert!(generate_phantom(&spec).is_err());
        let spec = PhantomSpec::straight(3.0, 1.0, 10.0, 0.5).with_bump(Bump::gaussian(12.0, 0.0, 1.0, 1.0, 0.5));
        assert!(generate_phantom(&spec).is_err());
    }

    #[test]
    fn noise_is_deterministic_and_smooth() {
        let spec = PhantomSpec::straight(3.0, 1.0, 12.0, 0.5).with_noise(0.1, 7);
        let a = NoiseField::new(&spec).unwrap();
        let b = NoiseField::new(&spec).unwrap();
        assert_eq!(a.values, b.values);
        // continuity across the θ seam
        let (x, y) = (a.sample(4.0, PI - 1e-9), a.sample(4.0, -PI + 1e-9));
        assert!((x - y).abs() < 1e-6);
    }
}
