//! Supporting-plane analysis of Θ: contact sets, boundary features,
//! Π-membership and classification of ruled boundary pieces.

use std::collections::HashMap;

use nalgebra::DVector;
use petgraph::unionfind::UnionFind;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{angle_between, direction_neighbors, fibonacci_sphere, pca, slerp, PointGrid, Vec3};
use crate::hull::{convex_hull, ConvexPolytope3};
use crate::qops::ObservableTriple;
use crate::ranges::{
    sample_pi, sample_pi_plus, seesaw_support, symmetric_support, PointCloud3, ProductMap, ProductParams, ProductState,
    Provenance, RangeKind, SamplerConfig, Weighted,
};

/// Boundary-analysis settings. Lengths are relative to the hull diameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConfig {
    /// Half-width of the slab that defines a support slice.
    pub eps_slab: f64,
    /// Minimal spread that counts as a line or face direction.
    pub delta_line: f64,
    /// Distance below which a point counts as a member of Π.
    pub eps_member: f64,
    /// Endpoint continuity for neighbouring rulings of one patch.
    pub continuity: f64,
    pub n_probes: usize,
    /// Fraction of a segment excluded at each end when probing.
    pub margin: f64,
    /// Member fraction at or below which a feature is symmetry breaking.
    pub sb_fraction: f64,
    /// Minimal loosely merged hull facet area (relative to diameter²) that
    /// triggers a planar-face probe.
    pub face_area: f64,
    /// Window below the support value from which slice seeds are drawn.
    pub seed_window: f64,
    pub max_seeds: usize,
    /// Angular neighbours per sweep direction.
    pub neighbors: usize,
    /// Endpoint distance under which two features are the same.
    pub dedupe: f64,
    /// Largest probe distance for which a ruling may bracket a seam.
    pub seam_window: f64,
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        Self {
            eps_slab: 1e-3,
            delta_line: 2e-2,
            eps_member: 1e-11,
            continuity: 5e-2,
            n_probes: 9,
            margin: 0.05,
            sb_fraction: 0.1,
            face_area: 1e-2,
            seed_window: 5e-2,
            max_seeds: 128,
            neighbors: 6,
            dedupe: 1e-3,
            seam_window: 1e-2,
        }
    }
}

impl BoundaryConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eps_slab", self.eps_slab),
            ("delta_line", self.delta_line),
            ("eps_member", self.eps_member),
            ("continuity", self.continuity),
            ("seed_window", self.seed_window),
            ("dedupe", self.dedupe),
            ("seam_window", self.seam_window),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_probes == 0 || self.max_seeds == 0 || self.neighbors == 0 {
            return Err(Error::InvalidArgument("probe, seed and neighbour counts must be positive".into()));
        }
        if !(0.0..0.5).contains(&self.margin) {
            return Err(Error::InvalidArgument(format!("margin must lie in [0, 0.5), got {}", self.margin)));
        }
        if !(0.0..1.0).contains(&self.sb_fraction) {
            return Err(Error::InvalidArgument(format!("sb_fraction must lie in [0, 1), got {}", self.sb_fraction)));
        }
        Ok(())
    }

    pub fn absolute(&self, diameter: f64) -> Tolerances {
        let scale = if diameter > 0.0 { diameter } else { 1.0 };
        Tolerances {
            diameter,
            eps_slab: self.eps_slab * scale,
            delta_line: self.delta_line * scale,
            eps_member: self.eps_member * scale,
            continuity: self.continuity * scale,
            dedupe: self.dedupe * scale,
            seed_window: self.seed_window * scale,
            seam_window: self.seam_window * scale,
            face_area: self.face_area * scale * scale,
            tau: 1e-4 * self.eps_slab * scale,
        }
    }
}

/// Absolute tolerances derived from a [`BoundaryConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub diameter: f64,
    pub eps_slab: f64,
    pub delta_line: f64,
    pub eps_member: f64,
    pub continuity: f64,
    pub dedupe: f64,
    pub seed_window: f64,
    pub seam_window: f64,
    pub face_area: f64,
    /// Minimal gain for a block move while spreading slice points.
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureClass {
    Gapless,
    SymmetryBreaking,
    Unclassified,
}

/// Points of a cloud lying in the slab under a supporting plane.
#[derive(Debug, Clone, Serialize)]
pub struct SupportSlice {
    pub direction: Vec3,
    pub value: f64,
    pub active_points: Vec<Vec3>,
    /// Product parameters of the active points, when known.
    #[serde(skip)]
    pub active_params: Vec<ProductParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeatureKind {
    ExposedPoint { point: Vec3 },
    Segment { p_a: Vec3, p_b: Vec3 },
    PlanarFace { polygon: Vec<Vec3>, normal: Vec3 },
}

impl FeatureKind {
    pub fn name(&self) -> &'static str {
        match self {
            FeatureKind::ExposedPoint { .. } => "exposed_point",
            FeatureKind::Segment { .. } => "segment",
            FeatureKind::PlanarFace { .. } => "planar_face",
        }
    }
}

/// One membership test on a feature.
#[derive(Debug, Clone, Serialize)]
pub struct Probe {
    pub point: Vec3,
    pub distance: f64,
    pub member: bool,
    pub certificate: Option<ProductState>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryFeature {
    pub kind: FeatureKind,
    pub direction: Vec3,
    pub class: FeatureClass,
    pub value: f64,
    /// Separated groups of active points along the principal axis.
    pub clusters: usize,
    pub probes: Vec<Probe>,
    /// Parameters of the extreme active points.
    #[serde(skip)]
    pub contacts: Vec<ProductParams>,
}

impl BoundaryFeature {
    pub fn endpoints(&self) -> Option<(Vec3, Vec3)> {
        match &self.kind {
            FeatureKind::Segment { p_a, p_b } => Some((*p_a, *p_b)),
            _ => None,
        }
    }

    pub fn is_segment(&self) -> bool {
        matches!(self.kind, FeatureKind::Segment { .. })
    }

    /// Largest probe distance; infinite before classification.
    pub fn max_probe_distance(&self) -> f64 {
        if self.probes.is_empty() {
            return f64::INFINITY;
        }
        self.probes.iter().map(|p| p.distance).fold(0.0, f64::max)
    }

    pub fn member_fraction(&self) -> f64 {
        if self.probes.is_empty() {
            return 0.0;
        }
        self.probes.iter().filter(|p| p.member).count() as f64 / self.probes.len() as f64
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Membership {
    pub member: bool,
    pub certificate: Option<ProductState>,
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentClassification {
    pub class: FeatureClass,
    pub probes: Vec<Probe>,
    pub member_fraction: f64,
}

/// Segments joined through neighbouring rulings of equal class.
#[derive(Debug, Clone, Serialize)]
pub struct RuledPatch {
    /// Indices into the feature list, in traversal order.
    pub segments: Vec<usize>,
    pub class: FeatureClass,
    /// All rulings coincide within the continuity tolerance: the patch is a
    /// single line rather than a surface.
    pub seam_line: bool,
}

/// Endpoint distance of two segments, minimized over the two pairings.
pub fn segment_distance(a: (Vec3, Vec3), b: (Vec3, Vec3)) -> f64 {
    let direct = (a.0 - b.0).norm().max((a.1 - b.1).norm());
    let swapped = (a.0 - b.1).norm().max((a.1 - b.0).norm());
    direct.min(swapped)
}

fn check_direction(d: &Vec3) -> Result<()> {
    if !d.iter().all(|c| c.is_finite()) {
        return Err(Error::NonFinite);
    }
    if (d.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm: d.norm() });
    }
    Ok(())
}

/// Support slices of a cloud: per direction the maximal value of `dir · p`
/// and the points within `eps_slab` of it.
pub fn sweep(pi: &PointCloud3, dirs: &[Vec3], eps_slab: f64) -> Result<Vec<SupportSlice>> {
    if pi.is_empty() {
        return Err(Error::EmptyCloud);
    }
    dirs.iter().try_for_each(check_direction)?;
    Ok(dirs
        .par_iter()
        .map(|d| {
            let value = pi.points.iter().map(|p| d.dot(p)).fold(f64::NEG_INFINITY, f64::max);
            let idx: Vec<usize> = (0..pi.len()).filter(|&i| d.dot(&pi.points[i]) >= value - eps_slab).collect();
            let active_params = idx.iter().filter_map(|&i| pi.params_of(i)).collect::<Vec<_>>();
            let active_params = if active_params.len() == idx.len() { active_params } else { Vec::new() };
            SupportSlice { direction: *d, value, active_points: idx.iter().map(|&i| pi.points[i]).collect(), active_params }
        })
        .collect())
}

fn convex_polygon_2d(pts: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&i, &j| pts[i].0.total_cmp(&pts[j].0).then(pts[i].1.total_cmp(&pts[j].1)).then(i.cmp(&j)));
    if order.len() < 3 {
        return order;
    }
    let cross = |o: usize, a: usize, b: usize| {
        (pts[a].0 - pts[o].0) * (pts[b].1 - pts[o].1) - (pts[a].1 - pts[o].1) * (pts[b].0 - pts[o].0)
    };
    let mut hull: Vec<usize> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let seq: Vec<usize> = if pass == 0 { order.clone() } else { order.iter().rev().copied().collect() };
        for &i in &seq {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0 {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    hull
}

/// Reads the contact set of a slice as a point, a segment or a face.
pub fn feature_of_slice(s: &SupportSlice, delta_line: f64) -> Result<BoundaryFeature> {
    if s.active_points.is_empty() {
        return Err(Error::DegenerateSlice);
    }
    let pts = &s.active_points;
    let has_params = s.active_params.len() == pts.len();
    let p = pca(pts);
    let spread = p.extents.iter().filter(|&&e| e > delta_line).count();
    let mut feature = BoundaryFeature {
        kind: FeatureKind::ExposedPoint { point: p.centroid },
        direction: s.direction,
        class: FeatureClass::Unclassified,
        value: s.value,
        clusters: 1,
        probes: Vec::new(),
        contacts: Vec::new(),
    };
    match spread {
        0 => {
            if has_params {
                let best = (0..pts.len()).max_by(|&i, &j| s.direction.dot(&pts[i]).total_cmp(&s.direction.dot(&pts[j])).then(j.cmp(&i)));
                feature.contacts = best.map(|i| vec![s.active_params[i]]).unwrap_or_default();
            }
        }
        1 => {
            let axis = p.axes[0];
            let proj: Vec<f64> = pts.iter().map(|q| (q - p.centroid).dot(&axis)).collect();
            let lo = (0..pts.len()).min_by(|&i, &j| proj[i].total_cmp(&proj[j]).then(i.cmp(&j))).expect("nonempty");
            let hi = (0..pts.len()).max_by(|&i, &j| proj[i].total_cmp(&proj[j]).then(j.cmp(&i))).expect("nonempty");
            let mut sorted = proj.clone();
            sorted.sort_by(f64::total_cmp);
            feature.clusters = 1 + sorted.windows(2).filter(|w| w[1] - w[0] > delta_line).count();
            feature.kind = FeatureKind::Segment { p_a: pts[lo], p_b: pts[hi] };
            if has_params {
                feature.contacts = vec![s.active_params[lo], s.active_params[hi]];
            }
        }
        _ => {
            let (e1, e2) = (p.axes[0], p.axes[1]);
            let flat: Vec<(f64, f64)> = pts.iter().map(|q| ((q - p.centroid).dot(&e1), (q - p.centroid).dot(&e2))).collect();
            let ring = convex_polygon_2d(&flat);
            let mut normal = p.axes[2];
            if normal.dot(&s.direction) < 0.0 {
                normal = -normal;
            }
            feature.kind = FeatureKind::PlanarFace { polygon: ring.iter().map(|&i| pts[i]).collect(), normal };
            if has_params {
                feature.contacts = ring.iter().map(|&i| s.active_params[i]).collect();
            }
        }
    }
    Ok(feature)
}

/// Damped Gauss-Newton on the parameter spheres for `min ‖F(p) − q‖`.
fn nearest_product(map: &ProductMap, q: &Vec3, start: ProductParams, max_iters: usize, stop: f64) -> (f64, ProductParams) {
    let n = map.n_tangent();
    let mut p = start;
    let (mut f, mut jac) = map.jacobian(&p);
    let mut cost = (f - q).norm_squared();
    let mut mu = 1e-3;
    for _ in 0..max_iters {
        if cost.sqrt() <= stop {
            break;
        }
        let r = DVector::from_column_slice((f - q).as_slice());
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * &r;
        let scale = (0..n).map(|i| jtj[(i, i)]).fold(0.0, f64::max).max(1e-12);
        let mut accepted = None;
        while mu < 1e12 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += mu * scale;
            }
            let Some(ch) = a.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let step = -ch.solve(&g);
            let cand = map.retract(&p, step.as_slice());
            let fc = map.eval(&cand);
            let cc = (fc - q).norm_squared();
            if cc < cost {
                accepted = Some((cand, fc, cc, step.norm()));
                mu = (mu * 0.3).max(1e-12);
                break;
            }
            mu *= 4.0;
        }
        let Some((cand, fc, cc, step)) = accepted else { break };
        let gain = cost - cc;
        p = cand;
        f = fc;
        cost = cc;
        if step < 1e-15 || gain <= 1e-16 * cost {
            break;
        }
        jac = map.jacobian(&p).1;
    }
    (cost.sqrt(), p)
}

/// Multi-start distance-to-Π oracle over a sampled cloud.
#[derive(Debug, Clone)]
pub struct MembershipOracle {
    map: ProductMap,
    params: Vec<ProductParams>,
    grid: PointGrid,
    restarts: usize,
    max_iters: usize,
    seed: u64,
    pub eps_member: f64,
}

impl MembershipOracle {
    /// `cloud` must carry product parameters (a Π or Π₊ sample).
    pub fn new(map: ProductMap, cloud: &PointCloud3, cfg: &SamplerConfig, eps_member: f64) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let params: Vec<ProductParams> = (0..cloud.len())
            .map(|i| cloud.params_of(i).ok_or_else(|| Error::InvalidArgument("cloud has no product parameters".into())))
            .collect::<Result<_>>()?;
        Ok(Self { map, params, grid: PointGrid::new(&cloud.points), restarts: cfg.restarts, max_iters: cfg.max_iters, seed: cfg.seed, eps_member })
    }

    pub fn map(&self) -> &ProductMap {
        &self.map
    }

    /// Minimal distance from `q` to Π found from the 8 nearest samples and
    /// `restarts` random starts.
    pub fn query(&self, q: &Vec3) -> Membership {
        let mut starts: Vec<ProductParams> = self.grid.nearest_k(q, 8).into_iter().map(|(_, i)| self.params[i]).collect();
        let key = q.iter().fold(self.seed, |h, c| h.rotate_left(17) ^ c.to_bits());
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        starts.extend((0..self.restarts).map(|_| self.map.random_params(&mut rng)));
        let stop = 1e-3 * self.eps_member;
        let mut best = (f64::INFINITY, starts[0]);
        for s in starts {
            let (d, p) = nearest_product(&self.map, q, s, self.max_iters, stop);
            if d < best.0 {
                best = (d, p);
            }
            if best.0 <= stop {
                break;
            }
        }
        let member = best.0 <= self.eps_member;
        Membership { member, certificate: member.then(|| best.1.state()), distance: best.0 }
    }

    fn probe(&self, q: &Vec3) -> Probe {
        let m = self.query(q);
        Probe { point: *q, distance: m.distance, member: m.member, certificate: m.certificate }
    }
}

/// Π-membership of a point for a general two-qubit triple.
pub fn membership(tr: &ObservableTriple, q: &Vec3, cfg: &SamplerConfig, eps_member: f64) -> Result<Membership> {
    let map = ProductMap::general(tr)?;
    if !q.iter().all(|c| c.is_finite()) {
        return Err(Error::NonFinite);
    }
    let cloud = sample_pi(tr, cfg)?;
    Ok(MembershipOracle::new(map, &cloud, cfg, eps_member)?.query(q))
}

fn segment_probe_points(p_a: &Vec3, p_b: &Vec3, n: usize, margin: f64) -> Vec<Vec3> {
    (0..n)
        .map(|k| {
            let t = if n == 1 { 0.5 } else { margin + (1.0 - 2.0 * margin) * k as f64 / (n - 1) as f64 };
            p_a + (p_b - p_a) * t
        })
        .collect()
}

fn face_probe_points(polygon: &[Vec3], n: usize) -> Vec<Vec3> {
    let c = polygon.iter().fold(Vec3::zeros(), |a, p| a + p) / polygon.len() as f64;
    let mut out = vec![c];
    for k in 0..n.saturating_sub(1) {
        let v = polygon[k * polygon.len() / (n - 1)];
        out.push(c + (v - c) * 0.8);
    }
    out
}

fn class_of(probes: &[Probe], sb_fraction: f64) -> FeatureClass {
    let members = probes.iter().filter(|p| p.member).count();
    if members == probes.len() {
        FeatureClass::Gapless
    } else if members as f64 <= sb_fraction * probes.len() as f64 {
        FeatureClass::SymmetryBreaking
    } else {
        FeatureClass::Unclassified
    }
}

/// Gapless when every interior probe is in Π, symmetry breaking when at most
/// a tenth are, unclassified otherwise.
pub fn classify_segment(
    tr: &ObservableTriple,
    seg: (Vec3, Vec3),
    n_probes: usize,
    cfg: &SamplerConfig,
    eps_member: f64,
) -> Result<SegmentClassification> {
    if n_probes == 0 {
        return Err(Error::InvalidArgument("n_probes must be positive".into()));
    }
    let map = ProductMap::general(tr)?;
    let cloud = sample_pi(tr, cfg)?;
    let oracle = MembershipOracle::new(map, &cloud, cfg, eps_member)?;
    let defaults = BoundaryConfig::default();
    let pts = segment_probe_points(&seg.0, &seg.1, n_probes, defaults.margin);
    let probes: Vec<Probe> = pts.par_iter().map(|q| oracle.probe(q)).collect();
    let class = class_of(&probes, defaults.sb_fraction);
    let member_fraction = probes.iter().filter(|p| p.member).count() as f64 / probes.len() as f64;
    Ok(SegmentClassification { class, probes, member_fraction })
}

/// Neighbour lists of the relative neighbourhood graph of segments under
/// [`segment_distance`], restricted to pairs within `tol`.
fn neighbourhood_graph(segs: &[(Vec3, Vec3)], tol: f64) -> Vec<Vec<usize>> {
    let n = segs.len();
    let d: Vec<Vec<f64>> = (0..n).into_par_iter().map(|i| (0..n).map(|j| segment_distance(segs[i], segs[j])).collect()).collect();
    let near: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut v: Vec<usize> = (0..n).filter(|&j| j != i && d[i][j] <= tol).collect();
            v.sort_by(|&a, &b| d[i][a].total_cmp(&d[i][b]).then(a.cmp(&b)));
            v
        })
        .collect();
    let mut adj = vec![Vec::new(); n];
    for p in 0..n {
        for &q in &near[p] {
            if q < p {
                continue;
            }
            let dpq = d[p][q];
            let blocked = near[p].iter().take_while(|&&r| d[p][r] < dpq).any(|&r| r != q && d[q][r] < dpq);
            if !blocked {
                adj[p].push(q);
                adj[q].push(p);
            }
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
    }
    adj
}

/// Groups Segment features into patches: connected components of the
/// relative neighbourhood graph (edges of endpoint distance at most
/// `continuity_tol`) after dropping edges between different classes.
pub fn assemble_patches(features: &[BoundaryFeature], continuity_tol: f64) -> Vec<RuledPatch> {
    let idx: Vec<usize> = (0..features.len()).filter(|&i| features[i].is_segment()).collect();
    let segs: Vec<(Vec3, Vec3)> = idx.iter().map(|&i| features[i].endpoints().expect("segment")).collect();
    let adj = neighbourhood_graph(&segs, continuity_tol);
    let n = idx.len();
    let same = |a: usize, b: usize| features[idx[a]].class == features[idx[b]].class;
    let mut uf = UnionFind::<usize>::new(n);
    for (a, near) in adj.iter().enumerate() {
        for &b in near {
            if same(a, b) {
                uf.union(a, b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of: HashMap<usize, usize> = HashMap::new();
    for a in 0..n {
        let r = uf.find(a);
        let g = *root_of.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(a);
    }
    groups
        .into_iter()
        .map(|members| {
            let degree = |a: usize| adj[a].iter().filter(|&&b| same(a, b)).count();
            let start = *members.iter().min_by_key(|&&a| (degree(a), a)).expect("nonempty");
            let mut order = Vec::with_capacity(members.len());
            let mut seen = vec![false; n];
            let mut stack = vec![start];
            while let Some(a) = stack.pop() {
                if seen[a] {
                    continue;
                }
                seen[a] = true;
                order.push(a);
                for &b in adj[a].iter().rev() {
                    if !seen[b] && same(a, b) {
                        stack.push(b);
                    }
                }
            }
            let class = features[idx[start]].class;
            let seam_line = class == FeatureClass::Gapless
                && members.iter().all(|&a| members.iter().all(|&b| segment_distance(segs[a], segs[b]) <= continuity_tol));
            RuledPatch { segments: order.into_iter().map(|a| idx[a]).collect(), class, seam_line }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub tolerances: Tolerances,
    pub n_directions: usize,
    /// Neighbouring direction pairs whose contacts jump.
    pub n_jumps: usize,
    pub features: Vec<BoundaryFeature>,
    pub patches: Vec<RuledPatch>,
}

impl ClassifyReport {
    /// One representative segment per Gapless seam line: the ruling with
    /// the smallest probe distance.
    pub fn seam_segments(&self) -> Vec<&BoundaryFeature> {
        self.patches
            .iter()
            .filter(|p| p.seam_line)
            .map(|p| {
                let best = p
                    .segments
                    .iter()
                    .min_by(|&&a, &&b| self.features[a].max_probe_distance().total_cmp(&self.features[b].max_probe_distance()).then(a.cmp(&b)))
                    .expect("nonempty patch");
                &self.features[*best]
            })
            .collect()
    }

    pub fn patches_of(&self, class: FeatureClass) -> Vec<&RuledPatch> {
        self.patches.iter().filter(|p| p.class == class).collect()
    }

    pub fn segments(&self) -> impl Iterator<Item = &BoundaryFeature> {
        self.features.iter().filter(|f| f.is_segment())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseSample {
    pub lambda: Vec3,
    /// Minimal energy from the refined support of Θ.
    pub e0: f64,
    /// Minimal energy from the alternating product-state optimizer.
    pub e0_check: f64,
    pub agree: bool,
    pub kind: &'static str,
    pub class: FeatureClass,
    pub contact: Vec3,
}

#[derive(Debug, Clone, Serialize)]
pub struct Transition {
    /// The transition lies between samples `index` and `index + 1` (mod n).
    pub index: usize,
    pub feature: BoundaryFeature,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseReport {
    pub samples: Vec<PhaseSample>,
    pub transitions: Vec<Transition>,
    pub max_disagreement: f64,
}

/// `steps` equally spaced unit vectors on the great circle through `a` and `b`.
pub fn great_circle(a: &Vec3, b: &Vec3, steps: usize) -> Result<Vec<Vec3>> {
    let a = a.try_normalize(1e-300).ok_or(Error::NonFinite)?;
    let w = b - a * a.dot(b);
    let Some(w) = w.try_normalize(1e-12) else {
        return Err(Error::InvalidArgument("great circle needs two non-parallel directions".into()));
    };
    if steps < 3 {
        return Err(Error::InvalidArgument("a closed path needs at least 3 steps".into()));
    }
    Ok((0..steps)
        .map(|k| {
            let th = std::f64::consts::TAU * k as f64 / steps as f64;
            a * th.cos() + w * th.sin()
        })
        .collect())
}

/// Sampled range, hull and membership oracle of one instance, with the
/// refinement and classification machinery built on them.
#[derive(Debug, Clone)]
pub struct Classifier {
    pub triple: ObservableTriple,
    pub cloud: PointCloud3,
    pub hull: ConvexPolytope3,
    pub cfg: SamplerConfig,
    pub bcfg: BoundaryConfig,
    pub tol: Tolerances,
    oracle: MembershipOracle,
}

impl Classifier {
    /// `symmetric` selects Π₊ (states `|α⟩⊗|α⟩`) instead of Π.
    pub fn new(triple: &ObservableTriple, symmetric: bool, cfg: &SamplerConfig, bcfg: &BoundaryConfig) -> Result<Self> {
        cfg.validate()?;
        bcfg.validate()?;
        let (map, cloud) = if symmetric {
            (ProductMap::symmetric(triple)?, sample_pi_plus(triple, cfg)?)
        } else {
            (ProductMap::general(triple)?, sample_pi(triple, cfg)?)
        };
        let hull = convex_hull(&cloud)?;
        let tol = bcfg.absolute(hull.diameter);
        let oracle = MembershipOracle::new(map, &cloud, cfg, tol.eps_member)?;
        Ok(Self { triple: triple.clone(), cloud, hull, cfg: *cfg, bcfg: *bcfg, tol, oracle })
    }

    pub fn map(&self) -> &ProductMap {
        &self.oracle.map
    }

    pub fn is_symmetric(&self) -> bool {
        self.oracle.map.is_symmetric()
    }

    pub fn membership(&self, q: &Vec3) -> Membership {
        self.oracle.query(q)
    }

    /// Best cloud sample per `delta_line` cell among the samples within the
    /// seed window of the support value.
    fn seeds(&self, dir: &Vec3) -> Vec<ProductParams> {
        let pts = &self.cloud.points;
        let vals: Vec<f64> = pts.iter().map(|p| dir.dot(p)).collect();
        let vmax = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let cell = self.tol.delta_line;
        let mut best: HashMap<[i64; 3], usize> = HashMap::new();
        for i in (0..pts.len()).filter(|&i| vals[i] >= vmax - self.tol.seed_window) {
            let p = pts[i] / cell;
            let key = [p.x.floor() as i64, p.y.floor() as i64, p.z.floor() as i64];
            let e = best.entry(key).or_insert(i);
            if vals[i] > vals[*e] || (vals[i] == vals[*e] && i < *e) {
                *e = i;
            }
        }
        let mut idx: Vec<usize> = best.into_values().collect();
        idx.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
        idx.truncate(self.bcfg.max_seeds);
        idx.into_iter().map(|i| self.oracle.params[i]).collect()
    }

    fn polish(&self, w: &Weighted, p: &ProductParams, tau: f64) -> ProductParams {
        let q = w.ascend(p, tau, self.cfg.max_iters);
        w.newton_polish(&q, self.map(), 30)
    }

    /// Support slice from polished cloud seeds plus `extra` starting points.
    pub fn refined_slice(&self, dir: &Vec3, extra: &[ProductParams]) -> SupportSlice {
        let w = self.map().weighted(dir);
        let mut starts = self.seeds(dir);
        starts.extend_from_slice(extra);
        let polished: Vec<(f64, ProductParams)> = starts
            .iter()
            .map(|p| {
                let q = self.polish(&w, p, self.tol.tau);
                (w.value(&q), q)
            })
            .collect();
        let value = polished.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max);
        let same = 1e-9 * self.tol.diameter.max(1e-300);
        let mut active_points: Vec<Vec3> = Vec::new();
        let mut active_params = Vec::new();
        for (v, q) in polished {
            if v < value - self.tol.eps_slab {
                continue;
            }
            let f = self.map().eval(&q);
            if active_points.iter().all(|a| (a - f).norm() > same) {
                active_points.push(f);
                active_params.push(q);
            }
        }
        SupportSlice { direction: *dir, value, active_points, active_params }
    }

    /// Global maximizer of `dir · F` among polished seeds.
    pub fn contact(&self, dir: &Vec3, extra: &[ProductParams]) -> (ProductParams, Vec3) {
        let w = self.map().weighted(dir);
        let mut starts = self.seeds(dir);
        starts.extend_from_slice(extra);
        let mut best: Option<(f64, ProductParams)> = None;
        for p in &starts {
            let q = self.polish(&w, p, 0.0);
            let v = w.value(&q);
            if best.is_none_or(|(bv, _)| v > bv) {
                best = Some((v, q));
            }
        }
        let p = best.expect("seeds are never empty").1;
        (p, self.map().eval(&p))
    }

    /// Boundary samples of Θ: for each `λ` the product point minimizing
    /// `λ · F`, refined from the sampled cloud. Provenance holds `λ`.
    pub fn boundary_samples(&self, dirs: &[Vec3]) -> Result<PointCloud3> {
        dirs.iter().try_for_each(check_direction)?;
        let points: Vec<Vec3> = dirs.par_iter().map(|d| self.contact(&-d, &[]).1).collect();
        let mut prov = Provenance::new(&["lambda_1", "lambda_2", "lambda_3"]);
        for d in dirs {
            prov.values.extend([d.x, d.y, d.z]);
        }
        let kind = if self.is_symmetric() { RangeKind::ThetaPlus } else { RangeKind::Theta };
        let mut cloud = PointCloud3::new(points, kind)?;
        cloud.provenance = Some(prov);
        Ok(cloud)
    }

    /// Refined slice read as a feature; segment ends are pushed outwards by
    /// maximizing along slightly tilted directions.
    pub fn slice_feature(&self, dir: &Vec3, extra: &[ProductParams]) -> Result<BoundaryFeature> {
        let mut s = self.refined_slice(dir, extra);
        let f = feature_of_slice(&s, self.tol.delta_line)?;
        let FeatureKind::Segment { p_a, p_b } = f.kind else { return Ok(f) };
        let e = (p_b - p_a).normalize();
        let w = self.map().weighted(dir);
        for (sign, start) in [(-1.0, f.contacts[0]), (1.0, f.contacts[1])] {
            let tilted = (dir + e * (sign * 1e-6)).normalize();
            let q = self.polish(&self.map().weighted(&tilted), &start, 0.0);
            let q = w.newton_polish(&q, self.map(), 30);
            if w.value(&q) >= s.value - self.tol.eps_slab {
                s.active_points.push(self.map().eval(&q));
                s.active_params.push(q);
            }
        }
        feature_of_slice(&s, self.tol.delta_line)
    }

    /// Bisects between two directions whose contacts differ by more than
    /// `delta_line` until the jump is pinned to one direction, and returns
    /// the flat feature there.
    pub fn locate_flat(&self, d0: &Vec3, c0: ProductParams, d1: &Vec3, c1: ProductParams) -> Result<Option<BoundaryFeature>> {
        let map = self.map();
        let (mut u0, mut u1, mut p0, mut p1) = (*d0, *d1, c0, c1);
        for _ in 0..80 {
            if (map.eval(&p0) - map.eval(&p1)).norm() <= self.tol.delta_line {
                return Ok(None);
            }
            if angle_between(&u0, &u1) < 1e-12 {
                break;
            }
            let Some(um) = (u0 + u1).try_normalize(1e-300) else { break };
            let w = map.weighted(&um);
            let q0 = self.polish(&w, &p0, 0.0);
            let q1 = self.polish(&w, &p1, 0.0);
            let pm = if w.value(&q0) >= w.value(&q1) { q0 } else { q1 };
            let fm = map.eval(&pm);
            if (fm - map.eval(&p0)).norm() >= (fm - map.eval(&p1)).norm() {
                u1 = um;
                p1 = pm;
            } else {
                u0 = um;
                p0 = pm;
            }
        }
        let u = (u0 + u1).normalize();
        let f = self.slice_feature(&u, &[p0, p1])?;
        Ok((!matches!(f.kind, FeatureKind::ExposedPoint { .. })).then_some(f))
    }

    /// Probes a segment or face for Π-membership and sets its class.
    pub fn classify_feature(&self, f: &mut BoundaryFeature) {
        let pts = match &f.kind {
            FeatureKind::ExposedPoint { .. } => return,
            FeatureKind::Segment { p_a, p_b } => segment_probe_points(p_a, p_b, self.bcfg.n_probes, self.bcfg.margin),
            FeatureKind::PlanarFace { polygon, .. } => face_probe_points(polygon, self.bcfg.n_probes),
        };
        f.probes = pts.par_iter().map(|q| self.oracle.probe(q)).collect();
        f.class = class_of(&f.probes, self.bcfg.sb_fraction);
    }

    fn is_duplicate(&self, list: &[BoundaryFeature], f: &BoundaryFeature) -> bool {
        list.iter().any(|g| match (&g.kind, &f.kind) {
            (FeatureKind::Segment { .. }, FeatureKind::Segment { .. }) => {
                segment_distance(g.endpoints().expect("segment"), f.endpoints().expect("segment")) <= self.tol.dedupe
            }
            (FeatureKind::PlanarFace { polygon: a, normal: na }, FeatureKind::PlanarFace { polygon: b, normal: nb }) => {
                let ca = a.iter().fold(Vec3::zeros(), |s, p| s + p) / a.len() as f64;
                let cb = b.iter().fold(Vec3::zeros(), |s, p| s + p) / b.len() as f64;
                (ca - cb).norm() <= self.tol.dedupe && na.dot(nb) > 1.0 - 1e-6
            }
            _ => false,
        })
    }

    /// Full sweep: contact jumps between neighbouring directions are pinned
    /// to flat features, large hull facets are probed as faces, every feature
    /// is classified, seams between patches are localized and patches
    /// assembled.
    pub fn classify(&self) -> Result<ClassifyReport> {
        let dirs = fibonacci_sphere(self.cfg.n_dirs);
        let contacts: Vec<(ProductParams, Vec3)> = dirs.par_iter().map(|d| self.contact(d, &[])).collect();
        let nbrs = direction_neighbors(&dirs, self.bcfg.neighbors);
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for (i, list) in nbrs.iter().enumerate() {
            for &j in list {
                let pair = (i.min(j), i.max(j));
                if (contacts[i].1 - contacts[j].1).norm() > self.tol.delta_line {
                    pairs.push(pair);
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let located: Vec<Result<Option<BoundaryFeature>>> = pairs
            .par_iter()
            .map(|&(i, j)| self.locate_flat(&dirs[i], contacts[i].0, &dirs[j], contacts[j].0))
            .collect();
        let mut candidates: Vec<BoundaryFeature> = Vec::new();
        for r in located {
            if let Some(f) = r? {
                candidates.push(f);
            }
        }
        if self.hull.affine_rank == 3 {
            let loose = self.hull.merge_coplanar_with(1e-2, 1e-3 * self.tol.diameter);
            let normals: Vec<Vec3> = loose.large_facets(self.tol.face_area).iter().map(|f| f.normal).collect();
            let faces: Vec<Result<BoundaryFeature>> = normals.par_iter().map(|n| self.slice_feature(n, &[])).collect();
            for f in faces {
                let f = f?;
                if !matches!(f.kind, FeatureKind::ExposedPoint { .. }) {
                    candidates.push(f);
                }
            }
        } else if self.hull.affine_rank == 2 {
            let n = self.hull.facets[0].normal;
            for d in [n, -n] {
                candidates.push(self.slice_feature(&d, &[])?);
            }
        }
        let mut features: Vec<BoundaryFeature> = Vec::new();
        for f in candidates {
            if !self.is_duplicate(&features, &f) {
                features.push(f);
            }
        }
        features.par_iter_mut().for_each(|f| self.classify_feature(f));
        self.fill_gaps(&mut features)?;
        self.localize_seams(&mut features)?;
        let patches = assemble_patches(&features, self.tol.continuity);
        Ok(ClassifyReport { tolerances: self.tol, n_directions: dirs.len(), n_jumps: pairs.len(), features, patches })
    }

    /// Ruling crossing the short arc through `n` perpendicular to `axis`.
    fn ruling_across(&self, n: &Vec3, axis: &Vec3, h: f64) -> Result<Option<BoundaryFeature>> {
        let d0 = slerp(n, axis, -h / angle_between(n, axis)).normalize();
        let d1 = slerp(n, axis, h / angle_between(n, axis)).normalize();
        let (c0, f0) = self.contact(&d0, &[]);
        let (c1, f1) = self.contact(&d1, &[]);
        if (f0 - f1).norm() <= self.tol.delta_line {
            return Ok(None);
        }
        let Some(mut f) = self.locate_flat(&d0, c0, &d1, c1)? else { return Ok(None) };
        if !f.is_segment() {
            return Ok(None);
        }
        self.classify_feature(&mut f);
        Ok(Some(f))
    }

    /// Inserts rulings between neighbouring segments whose endpoints are
    /// further apart than half the continuity tolerance, so that one ruled
    /// family is sampled densely enough to stay connected.
    fn fill_gaps(&self, features: &mut Vec<BoundaryFeature>) -> Result<()> {
        for _ in 0..6 {
            let idx: Vec<usize> = (0..features.len()).filter(|&i| features[i].is_segment()).collect();
            let segs: Vec<(Vec3, Vec3)> = idx.iter().map(|&i| features[i].endpoints().expect("segment")).collect();
            let adj = neighbourhood_graph(&segs, 4.0 * self.tol.continuity);
            let mut gaps: Vec<(Vec3, Vec3)> = Vec::new();
            for (a, list) in adj.iter().enumerate() {
                for &b in list.iter().filter(|&&b| b > a) {
                    if segment_distance(segs[a], segs[b]) > 0.5 * self.tol.continuity {
                        gaps.push((features[idx[a]].direction, features[idx[b]].direction));
                    }
                }
            }
            let found: Vec<Result<Option<BoundaryFeature>>> = gaps
                .par_iter()
                .map(|(na, nb)| {
                    let Some(axis) = na.cross(nb).try_normalize(1e-12) else { return Ok(None) };
                    let h = angle_between(na, nb).max(1e-2);
                    self.ruling_across(&slerp(na, nb, 0.5), &axis, h)
                })
                .collect();
            let mut added = 0;
            for f in found {
                if let Some(f) = f? {
                    if !self.is_duplicate(features, &f) {
                        features.push(f);
                        added += 1;
                    }
                }
            }
            if added == 0 {
                break;
            }
        }
        Ok(())
    }

    /// Where the probe distance of rulings has a local minimum below the seam
    /// window next to a non-gapless ruling, a golden-section search along the
    /// ruling family looks for a ruling inside Π. Gapless finds are added.
    fn localize_seams(&self, features: &mut Vec<BoundaryFeature>) -> Result<()> {
        let idx: Vec<usize> = (0..features.len()).filter(|&i| features[i].is_segment()).collect();
        let segs: Vec<(Vec3, Vec3)> = idx.iter().map(|&i| features[i].endpoints().expect("segment")).collect();
        let adj = neighbourhood_graph(&segs, self.tol.continuity);
        let dmax: Vec<f64> = idx.iter().map(|&i| features[i].max_probe_distance()).collect();
        let class: Vec<FeatureClass> = idx.iter().map(|&i| features[i].class).collect();
        let mut brackets: Vec<(Vec3, Vec3, f64)> = Vec::new();
        for m in 0..idx.len() {
            if adj[m].is_empty() || dmax[m] >= self.tol.seam_window || adj[m].iter().any(|&b| dmax[b] < dmax[m]) {
                continue;
            }
            if class[m] == FeatureClass::Gapless && adj[m].iter().all(|&b| class[b] == FeatureClass::Gapless) {
                continue;
            }
            let nm = features[idx[m]].direction;
            if adj[m].len() >= 2 {
                let mut best = (adj[m][0], adj[m][1], -1.0);
                for (x, &j) in adj[m].iter().enumerate() {
                    for &k in &adj[m][x + 1..] {
                        let d = segment_distance(segs[j], segs[k]);
                        if d > best.2 {
                            best = (j, k, d);
                        }
                    }
                }
                brackets.push((features[idx[best.0]].direction, features[idx[best.1]].direction, 1.0));
            } else {
                brackets.push((features[idx[adj[m][0]]].direction, nm, 2.0));
            }
        }
        let found: Vec<Result<Option<BoundaryFeature>>> = brackets.par_iter().map(|&(a, b, span)| self.golden_seam(&a, &b, span)).collect();
        for f in found {
            if let Some(f) = f? {
                if f.class == FeatureClass::Gapless && !self.is_duplicate(features, &f) {
                    features.push(f);
                }
            }
        }
        Ok(())
    }

    fn golden_seam(&self, a: &Vec3, b: &Vec3, span: f64) -> Result<Option<BoundaryFeature>> {
        let Some(axis) = a.cross(b).try_normalize(1e-12) else { return Ok(None) };
        let h = angle_between(a, b).max(1e-2);
        let eval = |t: f64| -> Result<(f64, Option<BoundaryFeature>)> {
            let n = slerp(a, b, t);
            let f = self.ruling_across(&n, &axis, h)?;
            Ok((f.as_ref().map_or(f64::INFINITY, |f| f.max_probe_distance()), f))
        };
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (0.0, span);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let mut e1 = eval(x1)?;
        let mut e2 = eval(x2)?;
        let mut best: Option<(f64, BoundaryFeature)> = None;
        fn keep(best: &mut Option<(f64, BoundaryFeature)>, e: &(f64, Option<BoundaryFeature>)) {
            if let Some(f) = &e.1 {
                if best.as_ref().is_none_or(|b| e.0 < b.0) {
                    *best = Some((e.0, f.clone()));
                }
            }
        }
        keep(&mut best, &e1);
        keep(&mut best, &e2);
        for _ in 0..30 {
            if e1.0 <= e2.0 {
                hi = x2;
                x2 = x1;
                e2 = e1;
                x1 = hi - g * (hi - lo);
                e1 = eval(x1)?;
                keep(&mut best, &e1);
            } else {
                lo = x1;
                x1 = x2;
                e1 = e2;
                x2 = lo + g * (hi - lo);
                e2 = eval(x2)?;
                keep(&mut best, &e2);
            }
            if best.as_ref().is_some_and(|b| b.0 <= 1e-3 * self.tol.eps_member) {
                break;
            }
        }
        Ok(best.map(|b| b.1))
    }

    /// Energy, feature and transitions along a path of Hamiltonian
    /// directions λ; the ground side of `λ · H` is the support in `−λ`.
    pub fn phase_scan(&self, path: &[Vec3], closed: bool) -> Result<PhaseReport> {
        if path.is_empty() {
            return Err(Error::InvalidArgument("empty path".into()));
        }
        path.iter().try_for_each(check_direction)?;
        let agree_tol = 1e-4 * self.tol.diameter.max(1e-300);
        let rows: Vec<Result<(PhaseSample, ProductParams, BoundaryFeature)>> = path
            .par_iter()
            .map(|lam| {
                let u = -lam;
                let mut f = self.slice_feature(&u, &[])?;
                self.classify_feature(&mut f);
                let (cp, cf) = self.contact(&u, &[]);
                let e0 = -f.value.max(u.dot(&cf));
                let e0_check = if self.is_symmetric() {
                    symmetric_support(self.map(), lam, &self.cfg)?.0
                } else {
                    seesaw_support(&self.triple, lam, &self.cfg)?.0
                };
                let sample = PhaseSample {
                    lambda: *lam,
                    e0,
                    e0_check,
                    agree: (e0 - e0_check).abs() <= agree_tol,
                    kind: f.kind.name(),
                    class: f.class,
                    contact: cf,
                };
                Ok((sample, cp, f))
            })
            .collect();
        let rows: Vec<(PhaseSample, ProductParams, BoundaryFeature)> = rows.into_iter().collect::<Result<_>>()?;
        let n = rows.len();
        let last = if closed { n } else { n - 1 };
        let steps: Vec<usize> = (0..last).filter(|&k| n > 1 || k == 0).collect();
        let found: Vec<Result<Option<Transition>>> = steps
            .par_iter()
            .map(|&k| {
                let (a, b) = (&rows[k], &rows[(k + 1) % n]);
                if n < 2 {
                    return Ok(None);
                }
                if (a.0.contact - b.0.contact).norm() > self.tol.delta_line {
                    let f = self.locate_flat(&-a.0.lambda, a.1, &-b.0.lambda, b.1)?;
                    return Ok(f.map(|mut f| {
                        self.classify_feature(&mut f);
                        Transition { index: k, feature: f }
                    }));
                }
                if a.0.kind != b.0.kind || a.0.class != b.0.class {
                    let f = if a.0.kind == "exposed_point" { b.2.clone() } else { a.2.clone() };
                    return Ok(Some(Transition { index: k, feature: f }));
                }
                Ok(None)
            })
            .collect();
        let mut transitions: Vec<Transition> = Vec::new();
        for t in found {
            if let Some(t) = t? {
                let dup = transitions.iter().any(|s| self.is_duplicate(std::slice::from_ref(&s.feature), &t.feature));
                if !dup {
                    transitions.push(t);
                }
            }
        }
        let max_disagreement = rows.iter().map(|r| (r.0.e0 - r.0.e0_check).abs()).fold(0.0, f64::max);
        Ok(PhaseReport { samples: rows.into_iter().map(|r| r.0).collect(), transitions, max_disagreement })
    }
}

/// Phase scan of a general triple with default boundary settings.
pub fn phase_scan(tr: &ObservableTriple, path: &[Vec3], cfg: &SamplerConfig) -> Result<PhaseReport> {
    Classifier::new(tr, false, cfg, &BoundaryConfig::default())?.phase_scan(path, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{appendix_instance, oloid_blocks, oloid_instance};
    use crate::qops::{block_compose, HermitianOperator, Pauli};
    use crate::ranges::{product_expectation, random_unit};
    use approx::assert_abs_diff_eq;

    fn small() -> SamplerConfig {
        SamplerConfig { n_dirs: 400, n_grid_a: 60, n_grid_b: 60, ..SamplerConfig::default() }
    }

    fn eg(k: usize) -> ObservableTriple {
        appendix_instance(k).unwrap().triple
    }

    fn seg_of(f: &BoundaryFeature) -> (Vec3, Vec3) {
        let (a, b) = f.endpoints().expect("segment");
        if a.x <= b.x {
            (a, b)
        } else {
            (b, a)
        }
    }

    #[test]
    fn sweep_examples() {
        let cfg = SamplerConfig::default();
        let z = [Vec3::z()];
        let s1 = &sweep(&sample_pi(&eg(1), &cfg).unwrap(), &z, 4e-3).unwrap()[0];
        let xs: Vec<f64> = s1.active_points.iter().map(|p| p.x).collect();
        assert!(xs.iter().copied().fold(f64::INFINITY, f64::min) < -0.9);
        assert!(xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) > 0.9);
        let s2 = &sweep(&sample_pi(&eg(2), &cfg).unwrap(), &z, 4e-3).unwrap()[0];
        assert!(s2.active_points.iter().all(|p| p.x.abs() > 0.9));
        let s3 = &sweep(&sample_pi(&oloid_instance().triple, &cfg).unwrap(), &z, 3e-3).unwrap()[0];
        assert!(s3.active_points.iter().all(|p| (p - Vec3::new(1.0, 0.0, 1.0)).norm() < 8e-2));
        for s in [s1, s2, s3] {
            assert!(s.active_points.iter().all(|p| (s.direction.dot(p) - s.value).abs() <= 4e-3));
            assert_eq!(s.active_params.len(), s.active_points.len());
        }
    }

    #[test]
    fn sweep_rejects_empty_cloud_and_bad_direction() {
        let empty = PointCloud3::new(Vec::new(), crate::ranges::RangeKind::Pi).unwrap();
        assert!(matches!(sweep(&empty, &[Vec3::z()], 1e-3), Err(Error::EmptyCloud)));
        let cloud = PointCloud3::new(vec![Vec3::zeros()], crate::ranges::RangeKind::Pi).unwrap();
        assert!(matches!(sweep(&cloud, &[Vec3::new(0.0, 0.0, 2.0)], 1e-3), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn feature_of_slice_examples() {
        let bcfg = BoundaryConfig::default();
        let c = Classifier::new(&oloid_instance().triple, false, &small(), &bcfg).unwrap();
        let generic = Vec3::new(0.3, 0.5, 0.8).normalize();
        let f = feature_of_slice(&c.refined_slice(&generic, &[]), c.tol.delta_line).unwrap();
        assert!(matches!(f.kind, FeatureKind::ExposedPoint { .. }));

        let c1 = Classifier::new(&eg(1), false, &small(), &bcfg).unwrap();
        let f = c1.slice_feature(&Vec3::z(), &[]).unwrap();
        let (a, b) = seg_of(&f);
        assert!((a - Vec3::new(-1.0, 0.0, 1.0)).norm() < 1e-6 && (b - Vec3::new(1.0, 0.0, 1.0)).norm() < 1e-6);

        let (ha, _) = oloid_blocks();
        let disk = ObservableTriple::new(
            block_compose(&ha[0], &ha[0]).unwrap(),
            block_compose(&ha[1], &ha[1]).unwrap(),
            block_compose(&ha[2], &ha[2]).unwrap(),
        )
        .unwrap();
        let cloud = sample_pi(&disk, &small()).unwrap();
        let s = &sweep(&cloud, &[Vec3::z()], 1e-3).unwrap()[0];
        assert_eq!(s.active_points.len(), cloud.len());
        let f = feature_of_slice(s, 2e-2).unwrap();
        let FeatureKind::PlanarFace { polygon, normal } = &f.kind else { panic!("expected a face, got {:?}", f.kind.name()) };
        assert!(polygon.iter().all(|p| p.z.abs() < 1e-12 && p.norm() <= 1.0 + 1e-12));
        assert!(polygon.iter().all(|p| p.norm() > 0.95) && polygon.len() >= 12);
        assert_abs_diff_eq!(normal.z, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn empty_slice_is_degenerate() {
        let s = SupportSlice { direction: Vec3::z(), value: 0.0, active_points: Vec::new(), active_params: Vec::new() };
        assert!(matches!(feature_of_slice(&s, 1e-2), Err(Error::DegenerateSlice)));
    }

    #[test]
    fn membership_examples() {
        let cfg = small();
        let m1 = membership(&eg(1), &Vec3::z(), &cfg, 1e-8).unwrap();
        assert!(m1.member && m1.distance <= 1e-8);
        let cert = m1.certificate.unwrap();
        assert!((product_expectation(&eg(1), &cert).unwrap() - Vec3::z()).norm() <= 1e-8);
        let m2 = membership(&eg(2), &Vec3::z(), &cfg, 1e-8).unwrap();
        assert!(!m2.member && m2.distance > 1e-3 && m2.certificate.is_none());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let tr = oloid_instance().triple;
        for _ in 0..5 {
            let p = ProductParams { a: random_unit(&mut rng), b: random_unit(&mut rng) };
            let q = product_expectation(&tr, &p.state()).unwrap();
            let m = membership(&tr, &q, &cfg, 1e-8).unwrap();
            assert!(m.member && m.distance <= 1e-8);
        }
        let dim2 = ObservableTriple::new(HermitianOperator::pauli(Pauli::X), HermitianOperator::pauli(Pauli::Y), HermitianOperator::pauli(Pauli::Z)).unwrap();
        assert!(matches!(membership(&dim2, &Vec3::zeros(), &cfg, 1e-8), Err(Error::BadDim { .. })));
    }

    #[test]
    fn classify_segment_examples() {
        let cfg = small();
        let ends = (Vec3::new(-1.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 1.0));
        let g = classify_segment(&eg(1), ends, 9, &cfg, 1e-8).unwrap();
        assert_eq!(g.class, FeatureClass::Gapless);
        assert_eq!(g.probes.len(), 9);
        for p in &g.probes {
            let back = product_expectation(&eg(1), p.certificate.as_ref().unwrap()).unwrap();
            assert!((back - p.point).norm() <= 1e-8);
        }
        assert_eq!(classify_segment(&eg(2), ends, 9, &cfg, 1e-8).unwrap().class, FeatureClass::SymmetryBreaking);
        let seam = (Vec3::new(0.0, 1.0, 0.0), Vec3::new(1.0, 0.0, 1.0));
        assert_eq!(classify_segment(&oloid_instance().triple, seam, 9, &cfg, 1e-8).unwrap().class, FeatureClass::Gapless);
    }

    #[test]
    fn probe_points_skip_the_margins() {
        let pts = segment_probe_points(&Vec3::zeros(), &Vec3::x(), 9, 0.05);
        assert_abs_diff_eq!(pts[0].x, 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(pts[8].x, 0.95, epsilon = 1e-15);
        assert_abs_diff_eq!(pts[4].x, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(segment_probe_points(&Vec3::zeros(), &Vec3::x(), 1, 0.05)[0].x, 0.5);
    }

    fn probe(member: bool) -> Probe {
        Probe { point: Vec3::zeros(), distance: if member { 0.0 } else { 1.0 }, member, certificate: None }
    }

    #[test]
    fn three_way_class_thresholds() {
        let mk = |k: usize| (0..10).map(|i| probe(i < k)).collect::<Vec<_>>();
        assert_eq!(class_of(&mk(10), 0.1), FeatureClass::Gapless);
        assert_eq!(class_of(&mk(0), 0.1), FeatureClass::SymmetryBreaking);
        assert_eq!(class_of(&mk(1), 0.1), FeatureClass::SymmetryBreaking);
        assert_eq!(class_of(&mk(2), 0.1), FeatureClass::Unclassified);
        assert_eq!(class_of(&mk(9), 0.1), FeatureClass::Unclassified);
    }

    fn ruling(y: f64, class: FeatureClass) -> BoundaryFeature {
        BoundaryFeature {
            kind: FeatureKind::Segment { p_a: Vec3::new(-1.0, y, 0.0), p_b: Vec3::new(1.0, y, 0.0) },
            direction: Vec3::z(),
            class,
            value: 0.0,
            clusters: 1,
            probes: Vec::new(),
            contacts: Vec::new(),
        }
    }

    #[test]
    fn patches_split_at_class_changes_and_gaps() {
        use FeatureClass::*;
        let mut fs: Vec<BoundaryFeature> = (0..10).map(|k| ruling(k as f64 * 0.02, SymmetryBreaking)).collect();
        fs.push(ruling(0.2, Gapless));
        fs.extend((11..20).map(|k| ruling(k as f64 * 0.02, SymmetryBreaking)));
        fs.extend((0..5).map(|k| ruling(2.0 + k as f64 * 0.02, SymmetryBreaking)));
        let patches = assemble_patches(&fs, 0.05);
        let sb: Vec<&RuledPatch> = patches.iter().filter(|p| p.class == SymmetryBreaking).collect();
        assert_eq!(sb.len(), 3);
        assert_eq!(sb.iter().map(|p| p.segments.len()).collect::<Vec<_>>(), vec![10, 9, 5]);
        let gl: Vec<&RuledPatch> = patches.iter().filter(|p| p.class == Gapless).collect();
        assert_eq!(gl.len(), 1);
        assert!(gl[0].seam_line);
        // Traversal follows the ruling family.
        let order = &sb[0].segments;
        assert!(order == &(0..10).collect::<Vec<_>>() || order == &(0..10).rev().collect::<Vec<_>>());
    }

    #[test]
    fn segment_distance_ignores_orientation() {
        let a = (Vec3::zeros(), Vec3::x());
        let b = (Vec3::x(), Vec3::new(0.0, 0.1, 0.0));
        assert_abs_diff_eq!(segment_distance(a, b), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn sphere_like_instance_has_no_patches() {
        let i = HermitianOperator::pauli(Pauli::I);
        let ops = [Pauli::X, Pauli::Y, Pauli::Z].map(|p| HermitianOperator::pauli(p).kron(&i).unwrap());
        let [a, b, c] = ops;
        let tr = ObservableTriple::new(a, b, c).unwrap();
        let c = Classifier::new(&tr, false, &small(), &BoundaryConfig::default()).unwrap();
        let r = c.classify().unwrap();
        assert_eq!(r.features.len(), 0);
        assert!(r.patches.is_empty());
    }

    #[test]
    fn ex1_ground_energy_and_block_spectrum() {
        let cfg = small();
        let r = phase_scan(&eg(1), &[Vec3::new(-1.0, 0.0, 0.0)], &cfg).unwrap();
        assert_abs_diff_eq!(r.samples[0].e0, -2.0, epsilon = 1e-9);
        assert!(r.samples[0].agree);
        let tr = oloid_instance().triple;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let path: Vec<Vec3> = (0..5).map(|_| random_unit(&mut rng)).collect();
        let r = phase_scan(&tr, &path, &cfg).unwrap();
        for s in &r.samples {
            let h = tr.combination([s.lambda.x, s.lambda.y, s.lambda.z]);
            let e = crate::qops::eigh(&h).unwrap().eigenvalues[0];
            assert_abs_diff_eq!(s.e0, e, epsilon = 1e-6);
        }
    }

    #[test]
    fn oloid_scan_crosses_two_seams() {
        let c = Classifier::new(&oloid_instance().triple, false, &small(), &BoundaryConfig::default()).unwrap();
        let m = Vec3::new(0.0, 1.0, 1.0).normalize();
        let path = great_circle(&m, &Vec3::x(), 73).unwrap();
        let r = c.phase_scan(&path, true).unwrap();
        assert_eq!(r.transitions.len(), 2);
        for t in &r.transitions {
            assert_eq!(t.feature.class, FeatureClass::Gapless);
            let (a, b) = t.feature.endpoints().unwrap();
            let (lo, hi) = if a.x < b.x { (a, b) } else { (b, a) };
            assert!(lo.x.abs() < 1e-3 && (lo.y.abs() - 1.0).abs() < 1e-3 && (hi - Vec3::new(1.0, 0.0, hi.z.signum())).norm() < 1e-3);
        }
    }

    #[test]
    fn great_circle_is_closed_and_unit() {
        let p = great_circle(&Vec3::z(), &Vec3::new(1.0, 0.0, 1.0), 8).unwrap();
        assert_eq!(p.len(), 8);
        assert!(p.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
        assert!((p[2] - Vec3::x()).norm() < 1e-12);
        assert!(great_circle(&Vec3::z(), &Vec3::z(), 8).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(BoundaryConfig::default().validate().is_ok());
        assert!(BoundaryConfig { margin: 0.5, ..Default::default() }.validate().is_err());
        assert!(BoundaryConfig { eps_slab: -1.0, ..Default::default() }.validate().is_err());
        assert!(BoundaryConfig { n_probes: 0, ..Default::default() }.validate().is_err());
        let t = BoundaryConfig::default().absolute(2.0);
        assert_abs_diff_eq!(t.eps_slab, 2e-3);
        assert_abs_diff_eq!(t.face_area, 4e-2);
    }

    #[test]
    fn boundary_samples_reach_the_ground_energy() {
        let tr = eg(2);
        let c = Classifier::new(&tr, false, &small(), &BoundaryConfig::default()).unwrap();
        let dirs = fibonacci_sphere(50);
        let cloud = c.boundary_samples(&dirs).unwrap();
        assert_eq!(cloud.tag, RangeKind::Theta);
        for (d, p) in dirs.iter().zip(&cloud.points) {
            let e0 = crate::qops::eigh(&tr.combination([d.x, d.y, d.z])).unwrap().eigenvalues[0];
            assert_abs_diff_eq!(d.dot(p), e0, epsilon = 1e-9);
        }
    }
}
