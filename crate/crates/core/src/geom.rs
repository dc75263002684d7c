//! Vector helpers shared by the sampling, hull and boundary code.

use std::collections::HashMap;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

pub type Vec3 = Vector3<f64>;

/// `π (3 - √5)`.
pub const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

/// Deterministic near-uniform unit vectors: `z_k = 1 - (2k+1)/n`,
/// azimuth `k` times the golden angle.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = k as f64 * GOLDEN_ANGLE;
            Vec3::new(rho * phi.cos(), rho * phi.sin(), z)
        })
        .collect()
}

/// For every direction, the indices of its `k` nearest neighbours by angle.
pub fn direction_neighbors(dirs: &[Vec3], k: usize) -> Vec<Vec<usize>> {
    dirs.iter()
        .enumerate()
        .map(|(i, d)| {
            let mut cand: Vec<(f64, usize)> = dirs.iter().enumerate().filter(|&(j, _)| j != i).map(|(j, e)| (-d.dot(e), j)).collect();
            let k = k.min(cand.len());
            if k == 0 {
                return Vec::new();
            }
            cand.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut nb: Vec<(f64, usize)> = cand[..k].to_vec();
            nb.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            nb.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

/// Two unit vectors completing `n` to a right-handed orthonormal frame.
pub fn tangent_basis(n: &Vec3) -> (Vec3, Vec3) {
    let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = (helper - n * n.dot(&helper)).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}

/// Spherical interpolation between unit vectors; falls back to normalized
/// linear interpolation for nearly parallel inputs.
pub fn slerp(a: &Vec3, b: &Vec3, t: f64) -> Vec3 {
    let cos = a.dot(b).clamp(-1.0, 1.0);
    let omega = cos.acos();
    if omega < 1e-12 {
        return (a * (1.0 - t) + b * t).normalize();
    }
    let s = omega.sin();
    (a * (((1.0 - t) * omega).sin() / s) + b * ((t * omega).sin() / s)).normalize()
}

pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Principal axes of a point set.
#[derive(Debug, Clone)]
pub struct Pca {
    pub centroid: Vec3,
    /// Unit axes ordered by decreasing variance.
    pub axes: [Vec3; 3],
    /// Max minus min coordinate along each axis.
    pub extents: [f64; 3],
}

pub fn pca(points: &[Vec3]) -> Pca {
    assert!(!points.is_empty());
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vec3::zeros(), |a, p| a + p) / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov / n);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let axes = order.map(|i| eig.eigenvectors.column(i).into_owned());
    let extents = axes.map(|ax| {
        let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            let v = (p - centroid).dot(&ax);
            (lo.min(v), hi.max(v))
        });
        hi - lo
    });
    Pca { centroid, axes, extents }
}

pub fn bounding_box(points: &[Vec3]) -> (Vec3, Vec3) {
    points.iter().fold((Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY)), |(lo, hi), p| (lo.inf(p), hi.sup(p)))
}

/// Exact diameter by pairwise comparison; intended for hull vertex sets.
pub fn diameter_brute(points: &[Vec3]) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.max((points[i] - points[j]).norm_squared());
        }
    }
    best.sqrt()
}

/// Uniform-grid spatial index for nearest-neighbour queries.
#[derive(Debug, Clone)]
pub struct PointGrid {
    points: Vec<Vec3>,
    origin: Vec3,
    cell: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
    max_ring: i64,
}

impl PointGrid {
    pub fn new(points: &[Vec3]) -> Self {
        let (lo, hi) = bounding_box(points);
        let diag = (hi - lo).norm();
        let n = points.len().max(1) as f64;
        let cell = if diag > 0.0 { (diag / n.cbrt()).max(diag * 1e-6) } else { 1.0 };
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key_of(&lo, cell, p)).or_default().push(i);
        }
        let max_ring = ((diag / cell).ceil() as i64 + 1).max(1);
        Self { points: points.to_vec(), origin: lo, cell, cells, max_ring }
    }

    fn key_of(origin: &Vec3, cell: f64, p: &Vec3) -> [i64; 3] {
        let q = (p - origin) / cell;
        [q.x.floor() as i64, q.y.floor() as i64, q.z.floor() as i64]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Up to `k` nearest points as `(distance, index)`, closest first.
    pub fn nearest_k(&self, q: &Vec3, k: usize) -> Vec<(f64, usize)> {
        let k = k.min(self.points.len());
        if k == 0 {
            return Vec::new();
        }
        let c = Self::key_of(&self.origin, self.cell, q);
        let mut best: Vec<(f64, usize)> = Vec::new();
        // Distance from q to the boundary of its own cell bounds the ring search.
        let rel = (q - self.origin) / self.cell;
        let frac = [rel.x - c[0] as f64, rel.y - c[1] as f64, rel.z - c[2] as f64];
        let inner = frac.iter().map(|f| f.min(1.0 - f)).fold(f64::INFINITY, f64::min).max(0.0);
        let mut ring = 0i64;
        loop {
            self.visit_ring(c, ring, |i| {
                let d = (self.points[i] - q).norm();
                best.push((d, i));
            });
            best.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            best.truncate(k);
            // Every unvisited point is at least this far away.
            let covered = (ring as f64 + inner) * self.cell;
            if (best.len() == k && best[k - 1].0 <= covered) || ring > self.max_ring + 2 {
                return best;
            }
            ring += 1;
        }
    }

    pub fn nearest(&self, q: &Vec3) -> (f64, usize) {
        self.nearest_k(q, 1)[0]
    }

    fn visit_ring(&self, c: [i64; 3], r: i64, mut f: impl FnMut(usize)) {
        for dx in -r..=r {
            for dy in -r..=r {
                for dz in -r..=r {
                    if dx.abs().max(dy.abs()).max(dz.abs()) != r {
                        continue;
                    }
                    if let Some(ids) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        ids.iter().for_each(|&i| f(i));
                    }
                }
            }
        }
    }
}
