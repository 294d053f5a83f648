use super::{rotate, ModelSpace, Point, SpaceKind};
use crate::error::{Error, Result};
use std::f64::consts::PI;

pub const DEFAULT_POINT_CAP: usize = 20_000;

const NONE: u32 = u32::MAX;

/// Region of the canonical chart to discretize.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extent {
    /// Whole space (torus, sphere only).
    Full,
    /// Box [-R, R]^n for Euclidean/Gaussian spaces, radial cutoff r ≤ R on the
    /// cone, whole space on compact spaces.
    Radius(f64),
    /// Box in (lifted) chart coordinates; periodic coordinates may exceed the
    /// fundamental domain and are wrapped.
    Box { lo: [f64; 2], hi: [f64; 2] },
}

#[derive(Clone, Debug, PartialEq)]
pub enum GridChart {
    /// Cell (i, j) has chart coordinates origin + (i, j)·spacing.
    Canonical { origin: [f64; 2] },
    /// Cell (i, j) sits at exp_center(R(angle)·(origin + (i, j)·spacing)).
    Normal { center: Point, angle: f64, origin: [f64; 2] },
}

/// Tensor-grid neighbor structure; grids may be masked (not every grid cell
/// carries a point).
#[derive(Clone, Debug)]
pub struct GridLayout {
    pub shape: [usize; 2],
    pub periodic: [bool; 2],
    pub spacing: [f64; 2],
    pub chart: GridChart,
    index: Vec<u32>,
    cells: Vec<[u32; 2]>,
}

impl GridLayout {
    pub fn cell(&self, i: usize) -> [usize; 2] {
        let c = self.cells[i];
        [c[0] as usize, c[1] as usize]
    }

    pub fn index(&self, c: [i64; 2]) -> Option<usize> {
        let mut k = [0usize; 2];
        for a in 0..2 {
            let n = self.shape[a] as i64;
            let v = if self.periodic[a] { c[a].rem_euclid(n) } else { c[a] };
            if v < 0 || v >= n {
                return None;
            }
            k[a] = v as usize;
        }
        let i = self.index[k[0] * self.shape[1] + k[1]];
        (i != NONE).then_some(i as usize)
    }

    /// Location of grid cell `c`, whether or not it carries a point.
    pub fn position(&self, space: &ModelSpace, c: [i64; 2]) -> Option<Point> {
        let u = |origin: [f64; 2]| [origin[0] + c[0] as f64 * self.spacing[0], origin[1] + c[1] as f64 * self.spacing[1]];
        match &self.chart {
            GridChart::Canonical { origin } => {
                let v = u(*origin);
                space.point(&v[..space.dim()]).ok()
            }
            GridChart::Normal { center, angle, origin } => {
                let mut v = u(*origin);
                if space.dim() == 1 {
                    v[1] = 0.0;
                }
                Some(space.exp(center, rotate(*angle, v)))
            }
        }
    }

    pub fn neighbor(&self, i: usize, axis: usize, step: i64) -> Option<usize> {
        let c = self.cells[i];
        let mut k = [c[0] as i64, c[1] as i64];
        k[axis] += step;
        self.index(k)
    }
}

/// Finite carrier of the reference measure: cell centers with their m-measure.
#[derive(Clone, Debug)]
pub struct Discretization {
    space: ModelSpace,
    points: Vec<Point>,
    cell_measures: Vec<f64>,
    resolution: f64,
    grid: Option<GridLayout>,
}

impl Discretization {
    /// Scattered discretization from explicit cells.
    pub fn from_cells(space: ModelSpace, points: Vec<Point>, cell_measures: Vec<f64>, resolution: f64) -> Result<Self> {
        if points.is_empty() || points.len() != cell_measures.len() {
            return Err(Error::InvalidArgument("discretization needs matching, nonempty cells".into()));
        }
        for p in &points {
            space.check(p)?;
        }
        if cell_measures.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidArgument("cell measures must be positive".into()));
        }
        Ok(Self { space, points, cell_measures, resolution, grid: None })
    }

    pub fn space(&self) -> &ModelSpace {
        &self.space
    }
    pub fn points(&self) -> &[Point] {
        &self.points
    }
    pub fn cell_measures(&self) -> &[f64] {
        &self.cell_measures
    }
    pub fn resolution(&self) -> f64 {
        self.resolution
    }
    pub fn grid(&self) -> Option<&GridLayout> {
        self.grid.as_ref()
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    pub fn total_measure(&self) -> f64 {
        self.cell_measures.iter().sum()
    }

    /// Index of the nearest cell center; ties go to the lowest index.
    pub fn nearest(&self, p: &Point) -> usize {
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for (i, q) in self.points.iter().enumerate() {
            let d = self.space.dist(p, q);
            if d < bd {
                bd = d;
                best = i;
            }
        }
        best
    }

    /// Canonical tensor grid over `extent` with cells no wider than `resolution`.
    pub fn discretize(space: &ModelSpace, resolution: f64, extent: Extent) -> Result<Self> {
        Self::discretize_capped(space, resolution, extent, DEFAULT_POINT_CAP)
    }

    pub fn discretize_capped(space: &ModelSpace, resolution: f64, extent: Extent, cap: usize) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidArgument(format!("resolution {resolution}")));
        }
        let (lo, hi) = chart_box(space, extent)?;
        let dim = space.dim();
        let mut counts = [1usize; 2];
        for a in 0..dim {
            let scale = match (space.kind(), a) {
                (SpaceKind::Cone { .. }, 1) => hi[0].max(1e-300),
                (SpaceKind::Sphere { radius }, _) => radius,
                _ => 1.0,
            };
            let len = (hi[a] - lo[a]) * scale;
            let n = (len / resolution - 1e-9).ceil().max(1.0);
            if n > cap as f64 {
                return Err(Error::ResourceLimit { what: "discretization points", requested: usize::MAX, cap });
            }
            counts[a] = n as usize;
        }
        Self::canonical_grid(space, lo, hi, counts, cap)
    }

    /// Canonical grid with explicit cell counts per axis.
    pub fn canonical_grid(space: &ModelSpace, lo: [f64; 2], hi: [f64; 2], counts: [usize; 2], cap: usize) -> Result<Self> {
        let dim = space.dim();
        let counts = if dim == 1 { [counts[0], 1] } else { counts };
        let total = counts[0].saturating_mul(counts[1]);
        if total > cap {
            return Err(Error::ResourceLimit { what: "discretization points", requested: total, cap });
        }
        if (0..dim).any(|a| !(hi[a] > lo[a])) || counts.iter().any(|&c| c == 0) {
            return Err(Error::InvalidArgument("empty chart box".into()));
        }
        let mut spacing = [1.0, 1.0];
        for a in 0..dim {
            spacing[a] = (hi[a] - lo[a]) / counts[a] as f64;
        }
        let mut periodic = [false; 2];
        let full = |a: usize, l: f64| ((hi[a] - lo[a]) - l).abs() < 1e-12 * l;
        match space.kind() {
            SpaceKind::FlatTorus { l1, l2 } => periodic = [full(0, l1), full(1, l2)],
            SpaceKind::Cone { alpha } => periodic[1] = full(1, alpha),
            SpaceKind::Sphere { .. } => periodic[1] = full(1, 2.0 * PI),
            _ => {}
        }
        let origin = [lo[0] + 0.5 * spacing[0], lo[1] + 0.5 * spacing[1]];
        let mut points = Vec::with_capacity(total);
        let mut measures = Vec::with_capacity(total);
        let mut cells = Vec::with_capacity(total);
        let mut max_diam: f64 = 0.0;
        for i in 0..counts[0] {
            for j in 0..counts[1] {
                let c = [origin[0] + i as f64 * spacing[0], origin[1] + j as f64 * spacing[1]];
                let (p, m, diam) = match space.kind() {
                    SpaceKind::Euclidean { .. } | SpaceKind::Gaussian { .. } => {
                        let p = space.point(&c[..dim])?;
                        let vol = if dim == 1 { spacing[0] } else { spacing[0] * spacing[1] };
                        let diam = if dim == 1 { spacing[0] } else { spacing[0].hypot(spacing[1]) };
                        (p, vol * (-space.weight_f(&p)).exp(), diam)
                    }
                    SpaceKind::FlatTorus { .. } => (space.point(&c)?, spacing[0] * spacing[1], spacing[0].hypot(spacing[1])),
                    SpaceKind::Cone { .. } => {
                        let p = space.point(&c)?;
                        let r_out = c[0] + 0.5 * spacing[0];
                        (p, c[0] * spacing[0] * spacing[1], spacing[0].hypot(r_out * spacing[1]))
                    }
                    SpaceKind::Sphere { radius } => {
                        let p = space.point(&c)?;
                        let t0 = c[0] - 0.5 * spacing[0];
                        let t1 = c[0] + 0.5 * spacing[0];
                        let m = radius * radius * (t0.cos() - t1.cos()) * spacing[1];
                        let smax = if t0 <= PI / 2.0 && t1 >= PI / 2.0 { 1.0 } else { t0.sin().max(t1.sin()) };
                        (p, m, radius * spacing[0].hypot(smax * spacing[1]))
                    }
                };
                max_diam = max_diam.max(diam);
                points.push(p);
                measures.push(m);
                cells.push([i as u32, j as u32]);
            }
        }
        let index = (0..total as u32).collect();
        Ok(Self {
            space: *space,
            points,
            cell_measures: measures,
            resolution: max_diam,
            grid: Some(GridLayout { shape: counts, periodic, spacing: [spacing[0], spacing[1]], chart: GridChart::Canonical { origin }, index, cells }),
        })
    }

    /// Grid in normal coordinates around `center` (frame rotated by `angle`),
    /// cells at integer multiples of `spacing`, masked to the disc of the given
    /// radius. The center itself is a cell.
    pub fn normal_patch(space: &ModelSpace, center: &Point, angle: f64, radius: f64, spacing: f64, cap: usize) -> Result<Self> {
        space.check(center)?;
        if space.is_vertex(center) {
            return Err(Error::InvalidArgument("normal patch at the cone vertex".into()));
        }
        if radius >= space.normal_radius(center) {
            return Err(Error::InvalidArgument(format!("normal patch radius {radius} beyond injectivity")));
        }
        let dim = space.dim();
        let k = (radius / spacing + 1e-9).floor() as i64;
        let side = (2 * k + 1) as usize;
        let shape = if dim == 1 { [side, 1] } else { [side, side] };
        let full = shape[0] * shape[1];
        if (full as f64) * 0.79 > cap as f64 {
            return Err(Error::ResourceLimit { what: "discretization points", requested: full, cap });
        }
        let mut index = vec![NONE; full];
        let mut points = Vec::new();
        let mut measures = Vec::new();
        let mut cells = Vec::new();
        let vol = spacing.powi(dim as i32);
        let r2 = (radius + 1e-12 * spacing) * (radius + 1e-12 * spacing);
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                let u = [(i as i64 - k) as f64 * spacing, if dim == 1 { 0.0 } else { (j as i64 - k) as f64 * spacing }];
                let s2 = u[0] * u[0] + u[1] * u[1];
                if s2 > r2 {
                    continue;
                }
                let p = space.exp(center, rotate(angle, u));
                let m = vol * space.exp_jacobian(s2.sqrt()) * (-space.weight_f(&p)).exp();
                index[i * shape[1] + j] = points.len() as u32;
                points.push(p);
                measures.push(m);
                cells.push([i as u32, j as u32]);
            }
        }
        if points.len() > cap {
            return Err(Error::ResourceLimit { what: "discretization points", requested: points.len(), cap });
        }
        let diam = if dim == 1 { spacing } else { spacing * 2f64.sqrt() };
        Ok(Self {
            space: *space,
            points,
            cell_measures: measures,
            resolution: diam,
            grid: Some(GridLayout {
                shape,
                periodic: [false, false],
                spacing: [spacing, if dim == 1 { 1.0 } else { spacing }],
                chart: GridChart::Normal { center: *center, angle, origin: [-(k as f64) * spacing, if dim == 1 { 0.0 } else { -(k as f64) * spacing }] },
                index,
                cells,
            }),
        })
    }

    /// Discretization of the ball B_radius(center) at the given spacing: a
    /// normal patch where exp is injective, otherwise a canonical grid over a
    /// chart box containing the ball (restricted to the ball).
    pub fn ball_patch(space: &ModelSpace, center: &Point, angle: f64, radius: f64, spacing: f64, cap: usize) -> Result<Self> {
        space.check(center)?;
        let fits = !space.is_vertex(center) && radius < 0.98 * space.normal_radius(center);
        let fits = fits && !matches!(space.kind(), SpaceKind::Sphere { radius: rho } if radius > 0.8 * PI * rho);
        if fits {
            return Self::normal_patch(space, center, angle, radius, spacing, cap);
        }
        let c = center.raw();
        let (lo, hi, counts) = match space.kind() {
            SpaceKind::FlatTorus { l1, l2 } => ([0.0, 0.0], [l1, l2], [(l1 / spacing).ceil() as usize, (l2 / spacing).ceil() as usize]),
            SpaceKind::Sphere { radius: rho } => {
                let n_t = (PI * rho / spacing).ceil() as usize;
                ([0.0, -PI], [PI, PI], [n_t, 2 * n_t])
            }
            SpaceKind::Cone { alpha } => {
                let r0 = (c[0] - radius).max(0.0);
                let r1 = c[0] + radius;
                let (p0, p1) = if r0 > 0.0 && (radius / c[0]).asin() < 0.5 * alpha {
                    let w = (radius / c[0]).asin();
                    (c[1] - w, c[1] + w)
                } else {
                    (-0.5 * alpha, 0.5 * alpha)
                };
                let n_r = ((r1 - r0) / spacing).ceil().max(1.0) as usize;
                let n_p = ((p1 - p0) * r1 / spacing).ceil().max(1.0) as usize;
                ([r0, p0], [r1, p1], [n_r, n_p])
            }
            _ => return Self::normal_patch(space, center, angle, radius, spacing, cap),
        };
        let grid = Self::canonical_grid(space, lo, hi, counts, cap.saturating_mul(4))?;
        grid.restrict(|p| space.dist(center, p) <= radius, cap)
    }

    /// Keep the cells satisfying `keep` (grid structure is preserved as a mask).
    pub fn restrict(&self, keep: impl Fn(&Point) -> bool, cap: usize) -> Result<Self> {
        let mut points = Vec::new();
        let mut measures = Vec::new();
        let mut old_to_new = vec![NONE; self.points.len()];
        for (i, p) in self.points.iter().enumerate() {
            if keep(p) {
                old_to_new[i] = points.len() as u32;
                points.push(*p);
                measures.push(self.cell_measures[i]);
            }
        }
        if points.is_empty() {
            return Err(Error::InvalidArgument("restriction removed every cell".into()));
        }
        if points.len() > cap {
            return Err(Error::ResourceLimit { what: "discretization points", requested: points.len(), cap });
        }
        let grid = self.grid.as_ref().map(|g| {
            let index = g.index.iter().map(|&i| if i == NONE { NONE } else { old_to_new[i as usize] }).collect();
            let cells = g.cells.iter().enumerate().filter(|(i, _)| old_to_new[*i] != NONE).map(|(_, c)| *c).collect();
            GridLayout { index, cells, ..g.clone() }
        });
        Ok(Self { space: self.space, points, cell_measures: measures, resolution: self.resolution, grid })
    }
}

fn chart_box(space: &ModelSpace, extent: Extent) -> Result<([f64; 2], [f64; 2])> {
    let dim = space.dim();
    match (space.kind(), extent) {
        (_, Extent::Box { lo, hi }) => {
            for a in 0..dim {
                if !(hi[a] > lo[a]) {
                    return Err(Error::InvalidArgument(format!("empty extent on axis {a}")));
                }
            }
            let mut lo = lo;
            let mut hi = hi;
            if dim == 1 {
                lo[1] = 0.0;
                hi[1] = 1.0;
            }
            match space.kind() {
                SpaceKind::Cone { .. } if lo[0] < 0.0 => Err(Error::InvalidArgument("negative radius in extent".into())),
                SpaceKind::Sphere { .. } if lo[0] < 0.0 || hi[0] > PI => Err(Error::InvalidArgument("polar range outside [0, π]".into())),
                _ => Ok((lo, hi)),
            }
        }
        (SpaceKind::Euclidean { .. } | SpaceKind::Gaussian { .. }, Extent::Radius(r)) if r > 0.0 => {
            Ok(([-r, if dim == 1 { 0.0 } else { -r }], [r, if dim == 1 { 1.0 } else { r }]))
        }
        (SpaceKind::Cone { alpha }, Extent::Radius(r)) if r > 0.0 => Ok(([0.0, -alpha / 2.0], [r, alpha / 2.0])),
        (SpaceKind::FlatTorus { l1, l2 }, Extent::Full | Extent::Radius(_)) => Ok(([0.0, 0.0], [l1, l2])),
        (SpaceKind::Sphere { .. }, Extent::Full | Extent::Radius(_)) => Ok(([0.0, -PI], [PI, PI])),
        (_, e) => Err(Error::InvalidArgument(format!("extent {e:?} not valid for {}", space.label()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_two_cells() {
        let e = ModelSpace::euclidean(1).unwrap();
        let d = Discretization::discretize(&e, 0.5, Extent::Box { lo: [0.0, 0.0], hi: [1.0, 0.0] }).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.cell_measures().iter().all(|m| (m - 0.5).abs() < 1e-15));
    }

    #[test]
    fn cone_grid_area() {
        let c = ModelSpace::cone(PI).unwrap();
        let d = Discretization::canonical_grid(&c, [0.0, -PI / 2.0], [1.0, PI / 2.0], [10, 10], 1000).unwrap();
        assert!((d.total_measure() - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_grid_area() {
        let s = ModelSpace::sphere(1.0).unwrap();
        let d = Discretization::discretize(&s, 0.05, Extent::Full).unwrap();
        assert!((d.total_measure() / (4.0 * PI) - 1.0).abs() < 0.01);
    }

    #[test]
    fn cap_enforced() {
        let e = ModelSpace::euclidean(2).unwrap();
        let r = Discretization::discretize(&e, 0.001, Extent::Radius(1.0));
        assert!(matches!(r, Err(Error::ResourceLimit { .. })));
    }

    #[test]
    fn normal_patch_contains_center_and_neighbors() {
        let s = ModelSpace::sphere(1.0).unwrap();
        let x = s.point(&[1.0, 0.5]).unwrap();
        let d = Discretization::normal_patch(&s, &x, 0.3, 0.2, 0.05, 10_000).unwrap();
        let g = d.grid().unwrap();
        let c = g.index([4, 4]).unwrap();
        assert!(s.dist(&d.points()[c], &x) < 1e-14);
        let nb = g.neighbor(c, 0, 1).unwrap();
        assert!((s.dist(&d.points()[nb], &x) - 0.05).abs() < 1e-12);
    }
}
