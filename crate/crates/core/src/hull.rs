//! Convex hulls of point clouds in ℝ³ with affine-rank handling, support
//! queries, membership tests, coplanar facet merging and set distances.

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{bounding_box, diameter_brute, pca, PointGrid, Vec3};
use crate::ranges::PointCloud3;

pub const DEFAULT_ANGLE_TOL: f64 = 1e-4;
const TOL_HULL_REL: f64 = 1e-9;
const TOL_PLANE_REL: f64 = 1e-7;

/// A group of coplanar hull triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub normal: Vec3,
    pub offset: f64,
    /// Indices into [`ConvexPolytope3::vertices`].
    pub vertices: Vec<usize>,
    pub triangles: Vec<usize>,
    pub area: f64,
}

/// Orthonormal frame of the affine hull of a low-rank cloud.
#[derive(Debug, Clone, PartialEq)]
struct Frame {
    origin: Vec3,
    axes: [Vec3; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolytope3 {
    pub vertices: Vec<Vec3>,
    /// Index of each vertex in the input cloud.
    pub source: Vec<usize>,
    /// Outward-oriented triangles over `vertices`. Rank-2 hulls store a fan
    /// of the polygon oriented along the first facet normal.
    pub triangles: Vec<[usize; 3]>,
    pub facets: Vec<Facet>,
    pub affine_rank: usize,
    pub diameter: f64,
    pub tol_hull: f64,
    pub tol_plane: f64,
    frame: Frame,
    /// Counter-clockwise polygon (vertex indices) for rank 2.
    polygon: Vec<usize>,
}

fn lex_less(a: &Vec3, b: &Vec3) -> bool {
    (a.x, a.y, a.z) < (b.x, b.y, b.z)
}

/// Index maximizing `key`; exact ties go to the lexicographically smaller point.
fn argmax_by(points: &[Vec3], ids: impl Iterator<Item = usize>, key: impl Fn(usize) -> f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for i in ids {
        let k = key(i);
        best = match best {
            None => Some((i, k)),
            Some((j, bk)) if k > bk || (k == bk && lex_less(&points[i], &points[j])) => Some((i, k)),
            b => b,
        };
    }
    best
}

#[derive(Debug, Clone)]
struct Face {
    v: [usize; 3],
    n: Vec3,
    d: f64,
    outside: Vec<usize>,
    alive: bool,
}

fn make_face(points: &[Vec3], v: [usize; 3]) -> Face {
    let (a, b, c) = (points[v[0]], points[v[1]], points[v[2]]);
    let cr = (b - a).cross(&(c - a));
    let n = if cr.norm() > 0.0 { cr.normalize() } else { cr };
    Face { v, n, d: n.dot(&a), outside: Vec::new(), alive: true }
}

impl Face {
    fn dist(&self, p: &Vec3) -> f64 {
        self.n.dot(p) - self.d
    }
    fn edges(&self) -> [(usize, usize); 3] {
        [(self.v[0], self.v[1]), (self.v[1], self.v[2]), (self.v[2], self.v[0])]
    }
}

/// Incremental quickhull for a cloud of full affine rank. Returns outward
/// triangles over input indices.
fn quickhull3(points: &[Vec3], tol: f64) -> Vec<[usize; 3]> {
    let n = points.len();
    let mut extremes = Vec::new();
    for axis in 0..3 {
        extremes.push(argmax_by(points, 0..n, |i| -points[i][axis]).unwrap().0);
        extremes.push(argmax_by(points, 0..n, |i| points[i][axis]).unwrap().0);
    }
    let mut pair = (extremes[0], extremes[1]);
    let mut best = -1.0;
    for i in 0..extremes.len() {
        for j in i + 1..extremes.len() {
            let d = (points[extremes[i]] - points[extremes[j]]).norm();
            if d > best {
                best = d;
                pair = (extremes[i], extremes[j]);
            }
        }
    }
    let (p0, p1) = pair;
    let axis = (points[p1] - points[p0]).normalize();
    let p2 = argmax_by(points, 0..n, |i| {
        let w = points[i] - points[p0];
        (w - axis * w.dot(&axis)).norm()
    })
    .unwrap()
    .0;
    let base = make_face(points, [p0, p1, p2]);
    let p3 = argmax_by(points, 0..n, |i| base.dist(&points[i]).abs()).unwrap().0;

    let centroid = (points[p0] + points[p1] + points[p2] + points[p3]) / 4.0;
    let mut faces: Vec<Face> = Vec::new();
    for v in [[p0, p1, p2], [p0, p3, p1], [p1, p3, p2], [p2, p3, p0]] {
        let mut f = make_face(points, v);
        if f.dist(&centroid) > 0.0 {
            f = make_face(points, [v[0], v[2], v[1]]);
        }
        faces.push(f);
    }
    let mut edge_map: HashMap<(usize, usize), usize> = HashMap::new();
    for (fi, f) in faces.iter().enumerate() {
        for e in f.edges() {
            edge_map.insert(e, fi);
        }
    }
    let simplex = [p0, p1, p2, p3];
    for (i, q) in points.iter().enumerate() {
        if simplex.contains(&i) {
            continue;
        }
        if let Some(f) = faces.iter_mut().find(|f| f.dist(q) > tol) {
            f.outside.push(i);
        }
    }

    let mut pending: Vec<usize> = (0..faces.len()).rev().collect();
    while let Some(fi) = pending.pop() {
        if !faces[fi].alive || faces[fi].outside.is_empty() {
            continue;
        }
        let eye = {
            let f = &faces[fi];
            argmax_by(points, f.outside.iter().copied(), |i| f.dist(&points[i])).unwrap().0
        };
        let ep = points[eye];

        let mut visible = vec![fi];
        let mut is_visible: HashMap<usize, bool> = HashMap::new();
        is_visible.insert(fi, true);
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        let mut queue = VecDeque::from([fi]);
        while let Some(cur) = queue.pop_front() {
            for (a, b) in faces[cur].edges() {
                let nb = edge_map[&(b, a)];
                let vis = *is_visible.entry(nb).or_insert_with(|| faces[nb].dist(&ep) > tol);
                if vis {
                    if !visible.contains(&nb) {
                        visible.push(nb);
                        queue.push_back(nb);
                    }
                } else {
                    horizon.push((a, b));
                }
            }
        }

        let mut orphans = Vec::new();
        for &vf in &visible {
            faces[vf].alive = false;
            for e in faces[vf].edges() {
                edge_map.remove(&e);
            }
            orphans.extend(std::mem::take(&mut faces[vf].outside));
        }
        let first_new = faces.len();
        for &(a, b) in &horizon {
            let f = make_face(points, [a, b, eye]);
            let id = faces.len();
            for e in f.edges() {
                edge_map.insert(e, id);
            }
            faces.push(f);
        }
        for i in orphans {
            if i == eye {
                continue;
            }
            if let Some(f) = faces[first_new..].iter_mut().find(|f| f.dist(&points[i]) > tol) {
                f.outside.push(i);
            }
        }
        for id in (first_new..faces.len()).rev() {
            if !faces[id].outside.is_empty() {
                pending.push(id);
            }
        }
    }
    faces.into_iter().filter(|f| f.alive).map(|f| f.v).collect()
}

/// Andrew's monotone chain over 2D coordinates; returns a counter-clockwise
/// polygon of input indices without collinear vertices.
fn monotone_chain(pts: &[(f64, f64)], tol: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&i, &j| pts[i].0.total_cmp(&pts[j].0).then(pts[i].1.total_cmp(&pts[j].1)).then(i.cmp(&j)));
    order.dedup_by(|a, b| pts[*a] == pts[*b]);
    if order.len() < 3 {
        return order;
    }
    let cross = |o: usize, a: usize, b: usize| {
        (pts[a].0 - pts[o].0) * (pts[b].1 - pts[o].1) - (pts[a].1 - pts[o].1) * (pts[b].0 - pts[o].0)
    };
    let mut hull: Vec<usize> = Vec::with_capacity(2 * order.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 { Box::new(order.iter()) } else { Box::new(order.iter().rev()) };
        for &i in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], i) <= tol {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    hull
}

/// Convex hull of a cloud. The affine rank is detected first from the
/// principal extents; rank-deficient clouds are hulled in their affine span.
pub fn convex_hull(cloud: &PointCloud3) -> Result<ConvexPolytope3> {
    hull_of_points(&cloud.points)
}

pub fn hull_of_points(points: &[Vec3]) -> Result<ConvexPolytope3> {
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(Error::NonFinite);
    }
    let (lo, hi) = bounding_box(points);
    let scale = (hi - lo).norm();
    let p = pca(points);
    let rank = p.extents.iter().filter(|&&e| e > TOL_HULL_REL * scale).count();
    let frame = Frame { origin: p.centroid, axes: p.axes };

    let (src, triangles_src, polygon_src) = match rank {
        0 => (vec![argmax_by(points, 0..points.len(), |_| 0.0).unwrap().0], Vec::new(), Vec::new()),
        1 => {
            let ax = frame.axes[0];
            let a = argmax_by(points, 0..points.len(), |i| -points[i].dot(&ax)).unwrap().0;
            let b = argmax_by(points, 0..points.len(), |i| points[i].dot(&ax)).unwrap().0;
            (vec![a.min(b), a.max(b)], Vec::new(), Vec::new())
        }
        2 => {
            let pts2: Vec<(f64, f64)> = points
                .iter()
                .map(|q| {
                    let w = q - frame.origin;
                    (w.dot(&frame.axes[0]), w.dot(&frame.axes[1]))
                })
                .collect();
            let poly = monotone_chain(&pts2, TOL_HULL_REL * scale * scale);
            let mut src = poly.clone();
            src.sort_unstable();
            let tris: Vec<[usize; 3]> = (1..poly.len().saturating_sub(1)).map(|k| [poly[0], poly[k], poly[k + 1]]).collect();
            (src, tris, poly)
        }
        _ => {
            let tris = quickhull3(points, TOL_HULL_REL * scale);
            let mut src: Vec<usize> = tris.iter().flatten().copied().collect();
            src.sort_unstable();
            src.dedup();
            (src, tris, Vec::new())
        }
    };
    let remap: HashMap<usize, usize> = src.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let vertices: Vec<Vec3> = src.iter().map(|&i| points[i]).collect();
    let triangles: Vec<[usize; 3]> = triangles_src.iter().map(|t| t.map(|i| remap[&i])).collect();
    let polygon: Vec<usize> = polygon_src.iter().map(|i| remap[i]).collect();
    let diameter = diameter_brute(&vertices);
    let mut poly = ConvexPolytope3 {
        vertices,
        source: src,
        triangles,
        facets: Vec::new(),
        affine_rank: rank,
        diameter,
        tol_hull: TOL_HULL_REL * diameter,
        tol_plane: TOL_PLANE_REL * diameter,
        frame,
        polygon,
    };
    if rank == 2 {
        let n = poly.frame.axes[0].cross(&poly.frame.axes[1]);
        let area = poly.triangles.iter().map(|t| poly.triangle_area(t)).sum();
        let mut verts = poly.polygon.clone();
        verts.sort_unstable();
        poly.facets = vec![Facet {
            normal: n,
            offset: n.dot(&poly.frame.origin),
            vertices: verts,
            triangles: (0..poly.triangles.len()).collect(),
            area,
        }];
    } else if rank == 3 {
        poly = poly.merge_coplanar(DEFAULT_ANGLE_TOL);
    }
    Ok(poly)
}

impl ConvexPolytope3 {
    fn triangle_area(&self, t: &[usize; 3]) -> f64 {
        let (a, b, c) = (self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    fn triangle_normal(&self, t: &[usize; 3]) -> Vec3 {
        let (a, b, c) = (self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]);
        let cr = (b - a).cross(&(c - a));
        if cr.norm() > 0.0 {
            cr.normalize()
        } else {
            cr
        }
    }

    /// Regroups the triangles into facets: neighbours whose normals are within
    /// `angle_tol` of the seed triangle and whose vertices lie within
    /// `tol_plane` of its plane join the seed's facet.
    pub fn merge_coplanar(&self, angle_tol: f64) -> ConvexPolytope3 {
        self.merge_coplanar_with(angle_tol, self.tol_plane)
    }

    /// [`ConvexPolytope3::merge_coplanar`] with an explicit plane tolerance.
    pub fn merge_coplanar_with(&self, angle_tol: f64, plane_tol: f64) -> ConvexPolytope3 {
        let mut out = self.clone();
        if self.affine_rank != 3 {
            return out;
        }
        let mut edge_owner: HashMap<(usize, usize), usize> = HashMap::new();
        for (ti, t) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                edge_owner.insert((t[k], t[(k + 1) % 3]), ti);
            }
        }
        let normals: Vec<Vec3> = self.triangles.iter().map(|t| self.triangle_normal(t)).collect();
        let areas: Vec<f64> = self.triangles.iter().map(|t| self.triangle_area(t)).collect();
        let mut assigned = vec![false; self.triangles.len()];
        let mut facets = Vec::new();
        for seed in 0..self.triangles.len() {
            if assigned[seed] {
                continue;
            }
            assigned[seed] = true;
            let n0 = normals[seed];
            let d0 = n0.dot(&self.vertices[self.triangles[seed][0]]);
            let mut members = vec![seed];
            let mut queue = VecDeque::from([seed]);
            while let Some(ti) = queue.pop_front() {
                let t = self.triangles[ti];
                for k in 0..3 {
                    let Some(&nb) = edge_owner.get(&(t[(k + 1) % 3], t[k])) else { continue };
                    if assigned[nb] {
                        continue;
                    }
                    let angle = n0.cross(&normals[nb]).norm().atan2(n0.dot(&normals[nb]));
                    let flat = self.triangles[nb].iter().all(|&v| (n0.dot(&self.vertices[v]) - d0).abs() <= plane_tol);
                    if angle < angle_tol && flat {
                        assigned[nb] = true;
                        members.push(nb);
                        queue.push_back(nb);
                    }
                }
            }
            members.sort_unstable();
            let weighted = members.iter().fold(Vec3::zeros(), |acc, &m| acc + normals[m] * areas[m]);
            let normal = if weighted.norm() > 0.0 { weighted.normalize() } else { n0 };
            let mut verts: Vec<usize> = members.iter().flat_map(|&m| self.triangles[m]).collect();
            verts.sort_unstable();
            verts.dedup();
            let offset = verts.iter().map(|&v| normal.dot(&self.vertices[v])).sum::<f64>() / verts.len() as f64;
            let area = members.iter().map(|&m| areas[m]).sum();
            facets.push(Facet { normal, offset, vertices: verts, triangles: members, area });
        }
        out.facets = facets;
        out
    }

    /// Maximum of `dir · v` over the vertices and the vertices attaining it
    /// within `tol_hull`.
    pub fn support(&self, dir: &Vec3) -> (f64, Vec<usize>) {
        self.support_with_tol(dir, self.tol_hull)
    }

    pub fn support_with_tol(&self, dir: &Vec3, tol: f64) -> (f64, Vec<usize>) {
        let value = self.support_value(dir);
        let active = (0..self.vertices.len()).filter(|&i| dir.dot(&self.vertices[i]) >= value - tol).collect();
        (value, active)
    }

    pub fn support_value(&self, dir: &Vec3) -> f64 {
        self.vertices.iter().map(|v| dir.dot(v)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Distance-style membership: facet-plane test for full rank, exact
    /// distance inside the affine span otherwise.
    pub fn contains(&self, q: &Vec3, eps: f64) -> bool {
        self.outside_distance(q) <= eps
    }

    /// Zero inside; otherwise the largest plane violation (rank 3) or the
    /// Euclidean distance (lower ranks).
    pub fn outside_distance(&self, q: &Vec3) -> f64 {
        match self.affine_rank {
            0 => (q - self.vertices[0]).norm(),
            1 => {
                let (a, b) = (self.vertices[0], self.vertices[1]);
                let ab = b - a;
                let t = ((q - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
                (q - (a + ab * t)).norm()
            }
            2 => {
                let n = self.facets[0].normal;
                let off = (q - self.frame.origin).dot(&n);
                let to2 = |p: &Vec3| {
                    let w = p - self.frame.origin;
                    (w.dot(&self.frame.axes[0]), w.dot(&self.frame.axes[1]))
                };
                let (qx, qy) = to2(q);
                let poly: Vec<(f64, f64)> = self.polygon.iter().map(|&i| to2(&self.vertices[i])).collect();
                let m = poly.len();
                let mut inside = true;
                let mut best = f64::INFINITY;
                for k in 0..m {
                    let (ax, ay) = poly[k];
                    let (bx, by) = poly[(k + 1) % m];
                    let (ex, ey) = (bx - ax, by - ay);
                    if ex * (qy - ay) - ey * (qx - ax) < 0.0 {
                        inside = false;
                    }
                    let len2 = ex * ex + ey * ey;
                    let t = if len2 > 0.0 { (((qx - ax) * ex + (qy - ay) * ey) / len2).clamp(0.0, 1.0) } else { 0.0 };
                    let (dx, dy) = (qx - ax - t * ex, qy - ay - t * ey);
                    best = best.min((dx * dx + dy * dy).sqrt());
                }
                let planar = if inside { 0.0 } else { best };
                (planar * planar + off * off).sqrt()
            }
            _ => self
                .triangles
                .iter()
                .map(|t| {
                    let n = self.triangle_normal(t);
                    n.dot(q) - n.dot(&self.vertices[t[0]])
                })
                .fold(0.0, f64::max),
        }
    }

    /// Facets whose area exceeds `min_area`.
    pub fn large_facets(&self, min_area: f64) -> Vec<&Facet> {
        self.facets.iter().filter(|f| f.area > min_area).collect()
    }
}

fn directed_hausdorff(a: &[Vec3], grid: &PointGrid) -> f64 {
    a.par_iter().map(|p| grid.nearest(p).0).reduce(|| 0.0, f64::max)
}

/// Symmetric Hausdorff distance between two point clouds.
pub fn hausdorff(a: &PointCloud3, b: &PointCloud3) -> Result<f64> {
    hausdorff_points(&a.points, &b.points)
}

pub fn hausdorff_points(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let ga = PointGrid::new(a);
    let gb = PointGrid::new(b);
    Ok(directed_hausdorff(a, &gb).max(directed_hausdorff(b, &ga)))
}

/// Hausdorff distance between the two convex bodies, `max_u |h_A(u) - h_B(u)|`,
/// evaluated over the given unit directions.
pub fn body_hausdorff(a: &ConvexPolytope3, b: &ConvexPolytope3, dirs: &[Vec3]) -> f64 {
    dirs.par_iter().map(|u| (a.support_value(u) - b.support_value(u)).abs()).reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::fibonacci_sphere;
    use crate::ranges::RangeKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube() -> Vec<Vec3> {
        let mut v = Vec::new();
        for x in [0.0, 1.0] {
            for y in [0.0, 1.0] {
                for z in [0.0, 1.0] {
                    v.push(Vec3::new(x, y, z));
                }
            }
        }
        v
    }

    fn check_closed(p: &ConvexPolytope3) {
        let mut edges = std::collections::HashSet::new();
        for t in &p.triangles {
            for k in 0..3 {
                assert!(edges.insert((t[k], t[(k + 1) % 3])), "duplicate directed edge");
            }
        }
        for &(a, b) in &edges {
            assert!(edges.contains(&(b, a)), "open edge");
        }
    }

    #[test]
    fn cube_hull() {
        let p = hull_of_points(&cube()).unwrap();
        assert_eq!(p.affine_rank, 3);
        assert_eq!(p.vertices.len(), 8);
        assert_eq!(p.triangles.len(), 12);
        assert_eq!(p.facets.len(), 6);
        check_closed(&p);
        let (v, act) = p.support(&Vec3::z());
        assert_eq!(v, 1.0);
        assert_eq!(act.len(), 4);
        let centroid = Vec3::repeat(0.5);
        for t in &p.triangles {
            let n = p.triangle_normal(t);
            assert!(n.dot(&(p.vertices[t[0]] - centroid)) > 0.0);
        }
        for f in &p.facets {
            assert!((f.area - 1.0).abs() < 1e-12);
            assert!((f.normal.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn cube_with_interior_and_face_points() {
        let mut pts = cube();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            pts.push(Vec3::new(rng.gen(), rng.gen(), rng.gen()));
            pts.push(Vec3::new(rng.gen(), rng.gen(), 1.0));
        }
        let p = hull_of_points(&pts).unwrap();
        assert_eq!(p.facets.len(), 6);
        check_closed(&p);
        for q in &pts {
            assert!(p.contains(q, p.tol_hull));
        }
    }

    #[test]
    fn planar_disk_is_rank_two() {
        let pts: Vec<Vec3> = (0..100)
            .map(|k| {
                let a = k as f64 * 0.7;
                let r = (k as f64 / 100.0).sqrt();
                Vec3::new(r * a.cos(), r * a.sin(), 0.5)
            })
            .collect();
        let p = hull_of_points(&pts).unwrap();
        assert_eq!(p.affine_rank, 2);
        assert_eq!(p.facets.len(), 1);
        assert!(pts.iter().all(|q| p.contains(q, p.tol_hull)));
        assert!(!p.contains(&Vec3::new(0.0, 0.0, 0.6), 1e-3));
        assert!(p.contains(&Vec3::new(0.0, 0.0, 0.5), 1e-12));
    }

    #[test]
    fn segment_and_point_ranks() {
        let seg: Vec<Vec3> = (0..10).map(|k| Vec3::new(k as f64, 2.0 * k as f64, 0.0)).collect();
        let p = hull_of_points(&seg).unwrap();
        assert_eq!(p.affine_rank, 1);
        assert_eq!(p.vertices.len(), 2);
        assert!(p.contains(&Vec3::new(4.5, 9.0, 0.0), 1e-9));
        let one = hull_of_points(&[Vec3::new(1., 2., 3.); 5]).unwrap();
        assert_eq!(one.affine_rank, 0);
        assert!(matches!(hull_of_points(&[]), Err(Error::EmptyCloud)));
    }

    #[test]
    fn sphere_hull_is_closed_and_has_no_large_facets() {
        let pts = fibonacci_sphere(3000);
        let p = hull_of_points(&pts).unwrap();
        check_closed(&p);
        assert_eq!(p.vertices.len(), 3000);
        let merged = p.merge_coplanar(1e-3);
        assert!(merged.large_facets(0.01 * p.diameter * p.diameter).is_empty());
    }

    #[test]
    fn cloud_hausdorff() {
        let a = PointCloud3::new(cube(), RangeKind::Pi).unwrap();
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        let shifted = PointCloud3::new(cube().iter().map(|p| p + Vec3::new(0.1, 0., 0.)).collect(), RangeKind::Pi).unwrap();
        assert!((hausdorff(&a, &shifted).unwrap() - 0.1).abs() < 1e-12);
    }
}
