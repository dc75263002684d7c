//! Sampling of the joint range Λ, the product range Π, its symmetric variant
//! Π₊ and the real range Λ_ℝ, plus the quadratic-map view of symmetric
//! observables and product-state support optimizers.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, SymmetricEigen, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{fibonacci_sphere, tangent_basis, Vec3};
use crate::qops::{
    eigh, min_eig_pauli2, pauli_decompose, pauli_decompose1, symmetric_pauli, HermitianOperator, ObservableTriple,
    SymmetricPauliCoeffs, C64,
};

/// Bloch coordinates `(r, s, t)` of a pure qubit state.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct BlochVector {
    pub r: f64,
    pub s: f64,
    pub t: f64,
}

impl BlochVector {
    pub fn new(r: f64, s: f64, t: f64) -> Result<Self> {
        let norm = (r * r + s * s + t * t).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { r, s, t })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn from_vec3(v: &Vec3) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(Self { r: v.x / n, s: v.y / n, t: v.z / n })
    }

    pub fn to_vec3(&self) -> Vec3 {
        Vec3::new(self.r, self.s, self.t)
    }
}

/// A product state `|α⟩ ⊗ |β⟩` described by the two Bloch vectors.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ProductState {
    pub alpha: BlochVector,
    pub beta: BlochVector,
}

impl ProductState {
    pub fn to_vector(&self) -> DVector<C64> {
        let a = bloch_to_state(&self.alpha);
        let b = bloch_to_state(&self.beta);
        a.kronecker(&b)
    }

    pub fn params(&self) -> ProductParams {
        ProductParams { a: self.alpha.to_vec3(), b: self.beta.to_vec3() }
    }
}

/// Unit vector with density matrix `½(I + rX + sY + tZ)`; the larger-modulus
/// amplitude (first on ties) is real and nonnegative.
pub fn bloch_to_state(b: &BlochVector) -> DVector<C64> {
    let (r, s, t) = (b.r, b.s, b.t);
    if t >= 0.0 {
        let a0 = ((1.0 + t) / 2.0).sqrt();
        let a1 = C64::new(r, s) / (2.0 * (1.0 + t)).sqrt();
        DVector::from_vec(vec![C64::new(a0, 0.0), a1])
    } else {
        let a0 = C64::new(r, -s) / (2.0 * (1.0 - t)).sqrt();
        let a1 = ((1.0 - t) / 2.0).sqrt();
        DVector::from_vec(vec![a0, C64::new(a1, 0.0)])
    }
}

/// Inverse of [`bloch_to_state`] up to phase.
pub fn state_to_bloch(v: &DVector<C64>) -> Result<BlochVector> {
    if v.len() != 2 {
        return Err(Error::BadDim { expected: "2", got: v.len() });
    }
    let norm = v.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm });
    }
    let cross = v[0] * v[1].conj();
    Ok(BlochVector { r: 2.0 * cross.re, s: -2.0 * cross.im, t: v[0].norm_sqr() - v[1].norm_sqr() })
}

/// `constant + linear·r + rᵀ quad r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticForm {
    pub constant: f64,
    pub linear: Vec3,
    pub quad: Matrix3<f64>,
}

impl QuadraticForm {
    pub fn eval(&self, r: &Vec3) -> f64 {
        self.constant + self.linear.dot(r) + r.dot(&(self.quad * r))
    }

    pub fn gradient(&self, r: &Vec3) -> Vec3 {
        self.linear + 2.0 * self.quad * r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFormTriple {
    pub f: [QuadraticForm; 3],
}

impl QuadraticFormTriple {
    pub fn eval(&self, r: &Vec3) -> Vec3 {
        Vec3::new(self.f[0].eval(r), self.f[1].eval(r), self.f[2].eval(r))
    }
}

pub type RealSymmetric3 = Matrix3<f64>;

/// Sampling and optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_dirs: usize,
    pub n_grid_a: usize,
    pub n_grid_b: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { n_dirs: 2000, n_grid_a: 200, n_grid_b: 200, seed: 0, restarts: 8, max_iters: 200 }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid_a == 0 || self.n_grid_b == 0 || self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidArgument("sampler sizes must be positive".into()));
        }
        if self.n_dirs < 12 {
            return Err(Error::InvalidArgument(format!("n_dirs must be at least 12, got {}", self.n_dirs)));
        }
        Ok(())
    }

    /// Number of points on the single Bloch grid used for Π₊ and Λ_ℝ.
    pub fn plus_grid_len(&self) -> usize {
        self.n_grid_a * self.n_grid_b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RangeKind {
    Lambda,
    Pi,
    Theta,
    PiPlus,
    ThetaPlus,
    LambdaR,
}

impl RangeKind {
    pub fn name(self) -> &'static str {
        match self {
            RangeKind::Lambda => "lambda",
            RangeKind::Pi => "pi",
            RangeKind::Theta => "theta",
            RangeKind::PiPlus => "pi_plus",
            RangeKind::ThetaPlus => "theta_plus",
            RangeKind::LambdaR => "lambda_r",
        }
    }
}

/// Generating parameters stored row by row next to the points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl Provenance {
    pub fn new(names: &[&str]) -> Self {
        Self { names: names.iter().map(|s| s.to_string()).collect(), values: Vec::new() }
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.values[i * w..(i + 1) * w]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud3 {
    pub points: Vec<Vec3>,
    pub tag: RangeKind,
    pub provenance: Option<Provenance>,
}

impl PointCloud3 {
    pub fn new(points: Vec<Vec3>, tag: RangeKind) -> Result<Self> {
        if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite);
        }
        Ok(Self { points, tag, provenance: None })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Product parameters of point `i` for Π / Π₊ clouds.
    pub fn params_of(&self, i: usize) -> Option<ProductParams> {
        let prov = self.provenance.as_ref()?;
        let row = prov.row(i);
        match (self.tag, row.len()) {
            (RangeKind::Pi, 6) => Some(ProductParams { a: Vec3::new(row[0], row[1], row[2]), b: Vec3::new(row[3], row[4], row[5]) }),
            (RangeKind::PiPlus | RangeKind::LambdaR, 3) => {
                let r = Vec3::new(row[0], row[1], row[2]);
                Some(ProductParams { a: r, b: r })
            }
            _ => None,
        }
    }
}

/// Product-state parameters: the Bloch vectors of the two factors. In the
/// symmetric setting `b` always equals `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductParams {
    pub a: Vec3,
    pub b: Vec3,
}

impl ProductParams {
    pub fn state(&self) -> ProductState {
        let na = self.a.normalize();
        let nb = self.b.normalize();
        ProductState { alpha: BlochVector { r: na.x, s: na.y, t: na.z }, beta: BlochVector { r: nb.x, s: nb.y, t: nb.z } }
    }

    pub fn distance(&self, other: &ProductParams) -> f64 {
        ((self.a - other.a).norm_squared() + (self.b - other.b).norm_squared()).sqrt()
    }
}

fn rb4(v: &Vec3) -> Vector4<f64> {
    Vector4::new(1.0, v.x, v.y, v.z)
}

fn tail(v: &Vector4<f64>) -> Vec3 {
    Vec3::new(v[1], v[2], v[3])
}

/// The product expectation map written in Bloch coordinates. For general
/// triples `F_i(a, b) = (1,a)ᵀ C_i (1,b)` with `C_i[j][k]` the Pauli
/// coefficients of `H_i`; for swap-symmetric triples `F(r) = f(r)` with the
/// quadratic map of [`quadratic_map`].
#[derive(Debug, Clone, PartialEq)]
pub enum ProductMap {
    General { c: [Matrix4<f64>; 3] },
    Symmetric { q: QuadraticFormTriple },
}

/// A single linear functional `u · F` of a [`ProductMap`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weighted {
    General(Matrix4<f64>),
    Symmetric { constant: f64, linear: Vec3, quad: Matrix3<f64> },
}

impl ProductMap {
    pub fn general(tr: &ObservableTriple) -> Result<Self> {
        if tr.dim() != 4 {
            return Err(Error::BadDim { expected: "4", got: tr.dim() });
        }
        let mut c = [Matrix4::zeros(); 3];
        for (i, h) in tr.ops().iter().enumerate() {
            let p = pauli_decompose(h)?;
            c[i] = Matrix4::from_fn(|j, k| p.c[j][k]);
        }
        Ok(ProductMap::General { c })
    }

    pub fn symmetric(tr: &ObservableTriple) -> Result<Self> {
        if tr.dim() != 4 {
            return Err(Error::BadDim { expected: "4", got: tr.dim() });
        }
        let coeffs = [symmetric_pauli(tr.get(0))?, symmetric_pauli(tr.get(1))?, symmetric_pauli(tr.get(2))?];
        Ok(ProductMap::Symmetric { q: quadratic_map(&coeffs) })
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(self, ProductMap::Symmetric { .. })
    }

    pub fn range_kind(&self) -> RangeKind {
        if self.is_symmetric() {
            RangeKind::PiPlus
        } else {
            RangeKind::Pi
        }
    }

    pub fn eval(&self, p: &ProductParams) -> Vec3 {
        match self {
            ProductMap::General { c } => {
                let ra = rb4(&p.a);
                let rb = rb4(&p.b);
                Vec3::new(ra.dot(&(c[0] * rb)), ra.dot(&(c[1] * rb)), ra.dot(&(c[2] * rb)))
            }
            ProductMap::Symmetric { q } => q.eval(&p.a),
        }
    }

    pub fn weighted(&self, u: &Vec3) -> Weighted {
        match self {
            ProductMap::General { c } => Weighted::General(c[0] * u.x + c[1] * u.y + c[2] * u.z),
            ProductMap::Symmetric { q } => {
                let mut constant = 0.0;
                let mut linear = Vec3::zeros();
                let mut quad = Matrix3::zeros();
                for (f, w) in q.f.iter().zip(u.iter()) {
                    constant += w * f.constant;
                    linear += f.linear * *w;
                    quad += f.quad * *w;
                }
                Weighted::Symmetric { constant, linear, quad }
            }
        }
    }

    /// Number of tangent coordinates of the parameter manifold.
    pub fn n_tangent(&self) -> usize {
        if self.is_symmetric() {
            2
        } else {
            4
        }
    }

    /// Value and 3 x n_tangent Jacobian in the frames of [`tangent_basis`].
    pub fn jacobian(&self, p: &ProductParams) -> (Vec3, DMatrix<f64>) {
        match self {
            ProductMap::General { c } => {
                let ra = rb4(&p.a);
                let rb = rb4(&p.b);
                let (ea1, ea2) = tangent_basis(&p.a);
                let (eb1, eb2) = tangent_basis(&p.b);
                let mut jac = DMatrix::zeros(3, 4);
                let mut f = Vec3::zeros();
                for i in 0..3 {
                    let cb = c[i] * rb;
                    let ca = c[i].transpose() * ra;
                    f[i] = ra.dot(&cb);
                    let ka = tail(&cb);
                    let kb = tail(&ca);
                    jac[(i, 0)] = ea1.dot(&ka);
                    jac[(i, 1)] = ea2.dot(&ka);
                    jac[(i, 2)] = eb1.dot(&kb);
                    jac[(i, 3)] = eb2.dot(&kb);
                }
                (f, jac)
            }
            ProductMap::Symmetric { q } => {
                let (e1, e2) = tangent_basis(&p.a);
                let mut jac = DMatrix::zeros(3, 2);
                for i in 0..3 {
                    let g = q.f[i].gradient(&p.a);
                    jac[(i, 0)] = e1.dot(&g);
                    jac[(i, 1)] = e2.dot(&g);
                }
                (q.eval(&p.a), jac)
            }
        }
    }

    /// Moves `p` by tangent coordinates `xi` and renormalizes.
    pub fn retract(&self, p: &ProductParams, xi: &[f64]) -> ProductParams {
        let (ea1, ea2) = tangent_basis(&p.a);
        let a = (p.a + ea1 * xi[0] + ea2 * xi[1]).normalize();
        if self.is_symmetric() {
            ProductParams { a, b: a }
        } else {
            let (eb1, eb2) = tangent_basis(&p.b);
            ProductParams { a, b: (p.b + eb1 * xi[2] + eb2 * xi[3]).normalize() }
        }
    }

    pub fn random_params(&self, rng: &mut impl Rng) -> ProductParams {
        let a = random_unit(rng);
        if self.is_symmetric() {
            ProductParams { a, b: a }
        } else {
            ProductParams { a, b: random_unit(rng) }
        }
    }
}

impl Weighted {
    pub fn value(&self, p: &ProductParams) -> f64 {
        match self {
            Weighted::General(k) => rb4(&p.a).dot(&(k * rb4(&p.b))),
            Weighted::Symmetric { constant, linear, quad } => constant + linear.dot(&p.a) + p.a.dot(&(quad * p.a)),
        }
    }

    /// One round of exact block maximization. A block update is kept only
    /// when it raises the value by more than `tau`.
    pub fn ascent_step(&self, p: &ProductParams, tau: f64) -> (ProductParams, bool) {
        let mut cur = *p;
        let mut val = self.value(&cur);
        let mut moved = false;
        match self {
            Weighted::General(k) => {
                let g = tail(&(k * rb4(&cur.b)));
                if g.norm() > 0.0 {
                    let cand = ProductParams { a: g.normalize(), b: cur.b };
                    let v = self.value(&cand);
                    if v > val + tau {
                        cur = cand;
                        val = v;
                        moved = true;
                    }
                }
                let h = tail(&(k.transpose() * rb4(&cur.a)));
                if h.norm() > 0.0 {
                    let cand = ProductParams { a: cur.a, b: h.normalize() };
                    if self.value(&cand) > val + tau {
                        cur = cand;
                        moved = true;
                    }
                }
            }
            Weighted::Symmetric { linear, quad, .. } => {
                let lo = SymmetricEigen::new(*quad).eigenvalues.min();
                let sigma = (-lo).max(0.0);
                let step = (quad + Matrix3::identity() * sigma) * cur.a + linear * 0.5;
                if step.norm() > 0.0 {
                    let a = step.normalize();
                    let cand = ProductParams { a, b: a };
                    if self.value(&cand) > val + tau {
                        cur = cand;
                        moved = true;
                    }
                }
            }
        }
        (cur, moved)
    }

    /// Repeated [`Weighted::ascent_step`] until no block moves.
    pub fn ascend(&self, p: &ProductParams, tau: f64, max_iters: usize) -> ProductParams {
        let mut cur = *p;
        for _ in 0..max_iters {
            let (next, moved) = self.ascent_step(&cur, tau);
            let change = next.distance(&cur);
            cur = next;
            if !moved || change < 1e-15 {
                break;
            }
        }
        cur
    }

    /// Riemannian gradient and Hessian in the tangent frames at `p`.
    fn tangent_model(&self, p: &ProductParams) -> (DVector<f64>, DMatrix<f64>) {
        match self {
            Weighted::General(k) => {
                let ra = rb4(&p.a);
                let rb = rb4(&p.b);
                let ka = tail(&(k * rb));
                let kb = tail(&(k.transpose() * ra));
                let (ea1, ea2) = tangent_basis(&p.a);
                let (eb1, eb2) = tangent_basis(&p.b);
                let ea = [ea1, ea2];
                let eb = [eb1, eb2];
                let kab = k.fixed_view::<3, 3>(1, 1).into_owned();
                let mut g = DVector::zeros(4);
                let mut h = DMatrix::zeros(4, 4);
                for i in 0..2 {
                    g[i] = ea[i].dot(&ka);
                    g[2 + i] = eb[i].dot(&kb);
                    h[(i, i)] = -p.a.dot(&ka);
                    h[(2 + i, 2 + i)] = -p.b.dot(&kb);
                    for j in 0..2 {
                        let v = ea[i].dot(&(kab * eb[j]));
                        h[(i, 2 + j)] = v;
                        h[(2 + j, i)] = v;
                    }
                }
                (g, h)
            }
            Weighted::Symmetric { linear, quad, .. } => {
                let grad = linear + 2.0 * quad * p.a;
                let (e1, e2) = tangent_basis(&p.a);
                let e = [e1, e2];
                let radial = p.a.dot(&grad);
                let mut g = DVector::zeros(2);
                let mut h = DMatrix::zeros(2, 2);
                for i in 0..2 {
                    g[i] = e[i].dot(&grad);
                    for j in 0..2 {
                        h[(i, j)] = 2.0 * e[i].dot(&(quad * e[j])) - if i == j { radial } else { 0.0 };
                    }
                }
                (g, h)
            }
        }
    }

    fn scale(&self) -> f64 {
        match self {
            Weighted::General(k) => k.norm().max(1e-300),
            Weighted::Symmetric { linear, quad, .. } => (linear.norm() + quad.norm()).max(1e-300),
        }
    }

    /// Newton refinement towards a local maximum, restricted to directions
    /// of clearly negative curvature. Flat directions of the objective are
    /// left untouched.
    pub fn newton_polish(&self, p: &ProductParams, map: &ProductMap, iters: usize) -> ProductParams {
        let cutoff = 1e-7 * self.scale();
        let mut cur = *p;
        let mut val = self.value(&cur);
        for _ in 0..iters {
            let (g, h) = self.tangent_model(&cur);
            let eig = SymmetricEigen::new(h);
            let mut xi = DVector::zeros(g.len());
            for (k, &lam) in eig.eigenvalues.iter().enumerate() {
                if lam < -cutoff {
                    let v = eig.eigenvectors.column(k);
                    xi -= v * (v.dot(&g) / lam);
                }
            }
            let step = xi.norm();
            if step < 1e-15 {
                break;
            }
            if step > 0.5 {
                xi *= 0.5 / step;
            }
            let cand = map.retract(&cur, xi.as_slice());
            let cv = self.value(&cand);
            if cv < val - 1e-15 * (1.0 + val.abs()) {
                break;
            }
            cur = cand;
            val = cv;
        }
        cur
    }
}

pub fn random_unit(rng: &mut impl Rng) -> Vec3 {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let rho = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(rho * phi.cos(), rho * phi.sin(), z)
}

/// `(⟨α|⊗⟨β|) H_i (|α⟩⊗|β⟩)` for each observable.
pub fn product_expectation(tr: &ObservableTriple, p: &ProductState) -> Result<Vec3> {
    if tr.dim() != 4 {
        return Err(Error::BadDim { expected: "4", got: tr.dim() });
    }
    let v = p.to_vector();
    let e = tr.expectations(&v)?;
    Ok(Vec3::new(e[0], e[1], e[2]))
}

/// Π over the product of two Fibonacci Bloch grids (α-major order).
pub fn sample_pi(tr: &ObservableTriple, cfg: &SamplerConfig) -> Result<PointCloud3> {
    cfg.validate()?;
    let map = ProductMap::general(tr)?;
    let ga = fibonacci_sphere(cfg.n_grid_a);
    let gb = fibonacci_sphere(cfg.n_grid_b);
    let rows: Vec<(Vec3, [f64; 6])> = ga
        .par_iter()
        .flat_map_iter(|a| {
            let map = &map;
            gb.iter().map(move |b| {
                let p = ProductParams { a: *a, b: *b };
                (map.eval(&p), [a.x, a.y, a.z, b.x, b.y, b.z])
            })
        })
        .collect();
    let mut prov = Provenance::new(&["alpha_r", "alpha_s", "alpha_t", "beta_r", "beta_s", "beta_t"]);
    prov.values = rows.iter().flat_map(|(_, r)| r.iter().copied()).collect();
    let mut cloud = PointCloud3::new(rows.into_iter().map(|(p, _)| p).collect(), RangeKind::Pi)?;
    cloud.provenance = Some(prov);
    Ok(cloud)
}

fn sample_on_sphere(n: usize, tag: RangeKind, f: impl Fn(&Vec3) -> Vec3 + Sync) -> Result<PointCloud3> {
    let grid = fibonacci_sphere(n);
    let pts: Vec<Vec3> = grid.par_iter().map(&f).collect();
    let mut prov = Provenance::new(&["r", "s", "t"]);
    prov.values = grid.iter().flat_map(|g| [g.x, g.y, g.z]).collect();
    let mut cloud = PointCloud3::new(pts, tag)?;
    cloud.provenance = Some(prov);
    Ok(cloud)
}

/// Π₊ = { f(α, α) } over a Fibonacci grid of `n_grid_a * n_grid_b` Bloch vectors.
pub fn sample_pi_plus(tr: &ObservableTriple, cfg: &SamplerConfig) -> Result<PointCloud3> {
    cfg.validate()?;
    let ProductMap::Symmetric { q } = ProductMap::symmetric(tr)? else { unreachable!() };
    sample_on_sphere(cfg.plus_grid_len(), RangeKind::PiPlus, |r| q.eval(r))
}

/// `f_i(r,s,t) = c0 + 2(cx r + cy s + cz t) + cxx r² + cyy s² + czz t² + 2(cxy rs + cxz rt + cyz st)`.
pub fn quadratic_map(coeffs: &[SymmetricPauliCoeffs; 3]) -> QuadraticFormTriple {
    let f = coeffs.map(|c| QuadraticForm {
        constant: c.c0,
        linear: Vec3::new(2.0 * c.cx, 2.0 * c.cy, 2.0 * c.cz),
        quad: Matrix3::new(c.cxx, c.cxy, c.cxz, c.cxy, c.cyy, c.cyz, c.cxz, c.cyz, c.czz),
    });
    QuadraticFormTriple { f }
}

fn max_affine_coefficient(q: &QuadraticFormTriple) -> f64 {
    q.f.iter().map(|f| f.constant.abs().max(f.linear.amax())).fold(0.0, f64::max)
}

pub fn is_homogeneous(q: &QuadraticFormTriple) -> bool {
    max_affine_coefficient(q) <= 1e-12
}

/// The matrices `M_i` with `f_i(r) = rᵀ M_i r` on the unit sphere.
pub fn m_matrices(q: &QuadraticFormTriple) -> Result<[RealSymmetric3; 3]> {
    if !is_homogeneous(q) {
        return Err(Error::NotHomogeneous { max_coefficient: max_affine_coefficient(q) });
    }
    Ok(q.f.map(|f| f.quad))
}

fn check_unit(d: &Vec3) -> Result<()> {
    if (d.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm: d.norm() });
    }
    Ok(())
}

/// Boundary samples of Λ: for each direction λ the expectation triple of the
/// lowest eigenvector of `λ·H`. A degenerate lowest level contributes each
/// cluster eigenvector plus 8 seeded random unit combinations inside it.
pub fn sample_lambda_boundary(tr: &ObservableTriple, dirs: &[Vec3], seed: u64) -> Result<PointCloud3> {
    dirs.iter().try_for_each(check_unit)?;
    let per_dir: Vec<Result<Vec<(Vec3, Vec3)>>> = dirs
        .par_iter()
        .enumerate()
        .map(|(idx, d)| {
            let h = tr.combination([d.x, d.y, d.z]);
            let eig = eigh(&h)?;
            let cluster = eig.ground_cluster();
            let mut out = Vec::new();
            let mut push = |v: &DVector<C64>| -> Result<()> {
                let e = tr.expectations(v)?;
                out.push((Vec3::new(e[0], e[1], e[2]), *d));
                Ok(())
            };
            for &k in &cluster {
                push(&eig.vector(k))?;
            }
            if cluster.len() > 1 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                for _ in 0..8 {
                    let mut v = DVector::<C64>::zeros(tr.dim());
                    for &k in &cluster {
                        let w = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                        v += eig.vector(k) * w;
                    }
                    let n = v.norm();
                    if n > 1e-8 {
                        push(&(v / C64::new(n, 0.0)))?;
                    }
                }
            }
            Ok(out)
        })
        .collect();
    let mut points = Vec::new();
    let mut prov = Provenance::new(&["lambda_1", "lambda_2", "lambda_3"]);
    for r in per_dir {
        for (p, d) in r? {
            points.push(p);
            prov.values.extend([d.x, d.y, d.z]);
        }
    }
    let mut cloud = PointCloud3::new(points, RangeKind::Lambda)?;
    cloud.provenance = Some(prov);
    Ok(cloud)
}

fn lambda_r_point(m: &[RealSymmetric3; 3], r: &Vec3) -> Vec3 {
    Vec3::new(r.dot(&(m[0] * r)), r.dot(&(m[1] * r)), r.dot(&(m[2] * r)))
}

/// Λ_ℝ over a real Fibonacci grid of `n_grid_a * n_grid_b` unit vectors.
pub fn sample_lambda_r(m: &[RealSymmetric3; 3], cfg: &SamplerConfig) -> Result<PointCloud3> {
    cfg.validate()?;
    sample_on_sphere(cfg.plus_grid_len(), RangeKind::LambdaR, |r| lambda_r_point(m, r))
}

/// Minimum of `dir · x` over Λ_ℝ: the lowest eigenpair of `u M₁ + v M₂ + w M₃`.
pub fn support_lambda_r(m: &[RealSymmetric3; 3], dir: &Vec3) -> Result<(f64, Vec3)> {
    check_unit(dir)?;
    let mat = m[0] * dir.x + m[1] * dir.y + m[2] * dir.z;
    let eig = SymmetricEigen::new(mat);
    let k = eig.eigenvalues.imin();
    let r = eig.eigenvectors.column(k).into_owned();
    let point = lambda_r_point(m, &r);
    Ok((dir.dot(&point), point))
}

/// Real/imaginary split of a unit complex 3-vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealSplit {
    pub t: f64,
    pub x: Option<Vec3>,
    pub y: Option<Vec3>,
}

/// Writes `v = x + i y` so that `⟨v|M|v⟩ = t x'ᵀMx' + (1-t) y'ᵀMy'` for every
/// real symmetric `M`, with `t = |x|²` and `x', y'` the normalized parts.
pub fn complex_to_real_split(v: &[C64; 3]) -> Result<RealSplit> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm });
    }
    let x = Vec3::new(v[0].re, v[1].re, v[2].re);
    let y = Vec3::new(v[0].im, v[1].im, v[2].im);
    let (nx, ny) = (x.norm(), y.norm());
    if ny < 1e-12 {
        return Ok(RealSplit { t: 1.0, x: Some(x / nx), y: None });
    }
    if nx < 1e-12 {
        return Ok(RealSplit { t: 0.0, x: None, y: Some(y / ny) });
    }
    let t = nx * nx;
    Ok(RealSplit { t, x: Some(x / t.sqrt()), y: Some(y / (1.0 - t).sqrt()) })
}

/// `(I ⊗ ⟨β|) H (I ⊗ |β⟩)` or `(⟨α| ⊗ I) H (|α⟩ ⊗ I)`.
fn partial_expectation(h: &HermitianOperator, v: &DVector<C64>, keep_first: bool) -> Result<HermitianOperator> {
    let m = h.matrix();
    let mut out = DMatrix::<C64>::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..2 {
                for l in 0..2 {
                    let (row, col) = if keep_first { (2 * i + k, 2 * j + l) } else { (2 * k + i, 2 * l + j) };
                    acc += v[k].conj() * m[(row, col)] * v[l];
                }
            }
            out[(i, j)] = acc;
        }
    }
    HermitianOperator::from_matrix(out)
}

fn lowest_bloch(h2: &HermitianOperator, fallback: &BlochVector) -> Result<(f64, BlochVector)> {
    let c = pauli_decompose1(h2)?;
    let (val, dir) = min_eig_pauli2(c[0], [c[1], c[2], c[3]]);
    let b = match dir {
        Some(d) => BlochVector::from_vec3(&Vec3::new(d[0], d[1], d[2]))?,
        None => *fallback,
    };
    Ok((val, b))
}

/// Alternating minimization of `dir · F` over product states. Each half-step
/// takes the lowest eigenvector of the reduced 2x2 operator of one factor.
/// Returns the best value and state over `cfg.restarts` seeded starts.
pub fn seesaw_support(tr: &ObservableTriple, dir: &Vec3, cfg: &SamplerConfig) -> Result<(f64, ProductState)> {
    if tr.dim() != 4 {
        return Err(Error::BadDim { expected: "4", got: tr.dim() });
    }
    check_unit(dir)?;
    cfg.validate()?;
    let h = tr.combination([dir.x, dir.y, dir.z]);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let starts: Vec<(BlochVector, BlochVector)> = (0..cfg.restarts)
        .map(|_| {
            let a = BlochVector::from_vec3(&random_unit(&mut rng)).expect("unit");
            let b = BlochVector::from_vec3(&random_unit(&mut rng)).expect("unit");
            (a, b)
        })
        .collect();
    let runs: Vec<Result<(f64, ProductState)>> = starts
        .par_iter()
        .map(|&(mut alpha, mut beta)| {
            let mut value = f64::INFINITY;
            for _ in 0..cfg.max_iters {
                let ha = partial_expectation(&h, &bloch_to_state(&beta), true)?;
                alpha = lowest_bloch(&ha, &alpha)?.1;
                let hb = partial_expectation(&h, &bloch_to_state(&alpha), false)?;
                let (v, b) = lowest_bloch(&hb, &beta)?;
                beta = b;
                let done = (value - v).abs() < 1e-12;
                value = v;
                if done {
                    break;
                }
            }
            Ok((value, ProductState { alpha, beta }))
        })
        .collect();
    let mut best: Option<(f64, ProductState)> = None;
    for r in runs {
        let (v, s) = r?;
        let better = match &best {
            None => true,
            Some((bv, bs)) => v < *bv || (v == *bv && s.partial_cmp(bs) == Some(std::cmp::Ordering::Less)),
        };
        if better {
            best = Some((v, s));
        }
    }
    Ok(best.expect("restarts is positive"))
}

/// Minimum of `dir · f(r)` over the symmetric product states and the Bloch
/// vector attaining it. Solved globally, see [`sphere_quadratic_min`].
pub fn symmetric_support(map: &ProductMap, dir: &Vec3, cfg: &SamplerConfig) -> Result<(f64, Vec3)> {
    check_unit(dir)?;
    cfg.validate()?;
    match map.weighted(dir) {
        Weighted::Symmetric { constant, linear, quad } => {
            let r = sphere_quadratic_min(&linear, &quad);
            Ok((constant + linear.dot(&r) + r.dot(&(quad * r)), r))
        }
        Weighted::General(_) => Err(Error::InvalidArgument("symmetric support needs a symmetric product map".into())),
    }
}

/// Global minimizer of `l·r + rᵀQr` over unit `r`. Stationary points satisfy
/// `r = -(Q - μ)⁻¹ l / 2`; the global one has `μ ≤ λ_min(Q)`, found by
/// bisection on `|r(μ)| = 1`. When `l` has no weight on the lowest eigenspace
/// and `|r(λ_min)| ≤ 1`, the remainder is filled along the lowest eigenvector.
pub fn sphere_quadratic_min(l: &Vec3, q: &Matrix3<f64>) -> Vec3 {
    let eig = SymmetricEigen::new(*q);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let d = idx.map(|i| eig.eigenvalues[i]);
    let v = idx.map(|i| eig.eigenvectors.column(i).into_owned());
    let bt = v.map(|vi| vi.dot(l));
    let scale = l.norm() + q.norm() + 1.0;
    let low: Vec<usize> = (0..3).filter(|&i| d[i] - d[0] <= 1e-12 * scale).collect();
    let r_at = |mu: f64, skip: &[usize]| -> Vec3 {
        (0..3).filter(|i| !skip.contains(i)).map(|i| v[i] * (-bt[i] / (2.0 * (d[i] - mu)))).sum()
    };
    if low.iter().all(|&i| bt[i].abs() <= 1e-12 * scale) {
        let r = r_at(d[0], &low);
        let rest = r.norm_squared();
        if rest <= 1.0 {
            return r + v[0] * (1.0 - rest).sqrt();
        }
    }
    let (mut lo, mut hi) = (d[0] - l.norm() / 2.0 - 1e-300, d[0]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if r_at(mid, &[]).norm_squared() > 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    r_at(lo, &[]).try_normalize(1e-300).unwrap_or(v[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qops::{block_compose, expectation, Pauli};
    use approx::assert_abs_diff_eq;

    fn p2(a: Pauli, b: Pauli) -> HermitianOperator {
        HermitianOperator::pauli2(a, b)
    }

    fn oloid() -> ObservableTriple {
        let i = HermitianOperator::pauli(Pauli::I);
        let x = HermitianOperator::pauli(Pauli::X);
        let y = HermitianOperator::pauli(Pauli::Y);
        let z2 = HermitianOperator::zeros(2).unwrap();
        ObservableTriple::new(
            block_compose(&x, &(&i + &x)).unwrap(),
            block_compose(&y, &z2).unwrap(),
            block_compose(&z2, &y).unwrap(),
        )
        .unwrap()
    }

    fn cone() -> ObservableTriple {
        ObservableTriple::new(
            &p2(Pauli::X, Pauli::X) - &p2(Pauli::Y, Pauli::Y),
            &p2(Pauli::X, Pauli::Y) + &p2(Pauli::Y, Pauli::X),
            p2(Pauli::Z, Pauli::Z),
        )
        .unwrap()
    }

    fn ising() -> ObservableTriple {
        ObservableTriple::new(
            p2(Pauli::X, Pauli::X),
            (&p2(Pauli::Z, Pauli::I) + &p2(Pauli::I, Pauli::Z)).scaled(0.5),
            (&p2(Pauli::X, Pauli::I) + &p2(Pauli::I, Pauli::X)).scaled(0.5),
        )
        .unwrap()
    }

    fn bv(r: f64, s: f64, t: f64) -> BlochVector {
        BlochVector::new(r, s, t).unwrap()
    }

    #[test]
    fn bloch_examples() {
        let up = bloch_to_state(&bv(0., 0., 1.));
        assert_abs_diff_eq!(up[0].re, 1.0);
        assert_abs_diff_eq!(up[1].norm(), 0.0);
        let plus = bloch_to_state(&bv(1., 0., 0.));
        assert_abs_diff_eq!(plus[0].re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(plus[1].re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        let yplus = bloch_to_state(&bv(0., 1., 0.));
        let y = HermitianOperator::pauli(Pauli::Y);
        assert_abs_diff_eq!(expectation(&y, &yplus).unwrap(), 1.0, epsilon = 1e-14);
        assert!(BlochVector::new(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn bloch_round_trip_and_phase() {
        for v in fibonacci_sphere(300) {
            let b = BlochVector::from_vec3(&v).unwrap();
            let st = bloch_to_state(&b);
            let back = state_to_bloch(&st).unwrap();
            assert!((back.to_vec3() - v).norm() < 1e-12);
            let big = if st[0].norm() >= st[1].norm() - 1e-15 { st[0] } else { st[1] };
            assert!(big.im.abs() < 1e-15 && big.re >= 0.0);
        }
    }

    #[test]
    fn product_expectation_examples() {
        let o = oloid();
        let s = ProductState { alpha: bv(0., 0., 1.), beta: bv(1., 0., 0.) };
        assert!((product_expectation(&o, &s).unwrap() - Vec3::new(1., 0., 0.)).norm() < 1e-14);
        let s = ProductState { alpha: bv(0., 0., -1.), beta: bv(0., 0., 1.) };
        assert!((product_expectation(&o, &s).unwrap() - Vec3::new(1., 0., 0.)).norm() < 1e-14);
        assert!(matches!(product_expectation(&ObservableTriple::new(
            HermitianOperator::pauli(Pauli::X), HermitianOperator::pauli(Pauli::Y), HermitianOperator::pauli(Pauli::Z)).unwrap(), &s), Err(Error::BadDim { .. })));
    }

    #[test]
    fn bilinear_map_matches_state_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for tr in [oloid(), cone(), ising()] {
            let map = ProductMap::general(&tr).unwrap();
            for _ in 0..50 {
                let p = map.random_params(&mut rng);
                let direct = product_expectation(&tr, &p.state()).unwrap();
                assert!((map.eval(&p) - direct).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_triple_samples_collapse() {
        let id = HermitianOperator::identity(4).unwrap();
        let tr = ObservableTriple::new(id.clone(), id.clone(), id).unwrap();
        let cfg = SamplerConfig { n_grid_a: 10, n_grid_b: 10, ..Default::default() };
        let c = sample_pi(&tr, &cfg).unwrap();
        assert_eq!(c.len(), 100);
        assert!(c.points.iter().all(|p| (p - Vec3::new(1., 1., 1.)).norm() < 1e-12));
        assert_eq!(c.params_of(7).unwrap().a, fibonacci_sphere(10)[0]);
    }

    #[test]
    fn pi_plus_examples() {
        let q = match ProductMap::symmetric(&ising()).unwrap() {
            ProductMap::Symmetric { q } => q,
            _ => unreachable!(),
        };
        assert!((q.eval(&Vec3::new(0., 0., 1.)) - Vec3::new(0., 1., 0.)).norm() < 1e-14);
        assert!((q.eval(&Vec3::new(1., 0., 0.)) - Vec3::new(1., 0., 1.)).norm() < 1e-14);
        let cfg = SamplerConfig { n_grid_a: 20, n_grid_b: 20, ..Default::default() };
        let c = sample_pi_plus(&cone(), &cfg).unwrap();
        assert_eq!(c.len(), 400);
        for p in &c.points {
            assert!((p.x * p.x + p.y * p.y - (1.0 - p.z).powi(2)).abs() < 1e-10);
        }
        assert!(matches!(sample_pi_plus(&oloid(), &cfg), Err(Error::NotSwapSymmetric { .. })));
    }

    #[test]
    fn quadratic_maps_of_named_triples() {
        let cone_q = match ProductMap::symmetric(&cone()).unwrap() {
            ProductMap::Symmetric { q } => q,
            _ => unreachable!(),
        };
        // (r² - s², 2rs, t²)
        let m = m_matrices(&cone_q).unwrap();
        assert_eq!(m[0], Matrix3::new(1., 0., 0., 0., -1., 0., 0., 0., 0.));
        assert_eq!(m[1], Matrix3::new(0., 1., 0., 1., 0., 0., 0., 0., 0.));
        assert_eq!(m[2], Matrix3::new(0., 0., 0., 0., 0., 0., 0., 0., 1.));
        assert!(is_homogeneous(&cone_q));

        let iq = match ProductMap::symmetric(&ising()).unwrap() {
            ProductMap::Symmetric { q } => q,
            _ => unreachable!(),
        };
        assert!(!is_homogeneous(&iq));
        assert!(matches!(m_matrices(&iq), Err(Error::NotHomogeneous { .. })));

        let zero = quadratic_map(&[SymmetricPauliCoeffs::default(); 3]);
        assert!(is_homogeneous(&zero));
        assert_eq!(m_matrices(&zero).unwrap(), [Matrix3::zeros(); 3]);

        let zz = ObservableTriple::new(p2(Pauli::Z, Pauli::Z), HermitianOperator::zeros(4).unwrap(), HermitianOperator::zeros(4).unwrap()).unwrap();
        let zq = match ProductMap::symmetric(&zz).unwrap() {
            ProductMap::Symmetric { q } => q,
            _ => unreachable!(),
        };
        assert_eq!(m_matrices(&zq).unwrap()[0], Matrix3::new(0., 0., 0., 0., 0., 0., 0., 0., 1.));
    }

    #[test]
    fn lambda_boundary_examples() {
        let x = HermitianOperator::pauli(Pauli::X);
        let y = HermitianOperator::pauli(Pauli::Y);
        let block_a = ObservableTriple::new(x, y, HermitianOperator::zeros(2).unwrap()).unwrap();
        let c = sample_lambda_boundary(&block_a, &[Vec3::new(-1., 0., 0.)], 0).unwrap();
        assert!((c.points[0] - Vec3::new(1., 0., 0.)).norm() < 1e-12);

        let t = ObservableTriple::new(p2(Pauli::Z, Pauli::Z), p2(Pauli::X, Pauli::X), p2(Pauli::Y, Pauli::Y)).unwrap();
        let c = sample_lambda_boundary(&t, &[Vec3::new(1., 0., 0.)], 0).unwrap();
        assert!(c.points.iter().all(|p| (p.x + 1.0).abs() < 1e-10));
        assert!(c.len() > 2);

        let c = sample_lambda_boundary(&oloid(), &[Vec3::new(0., 0., -1.)], 0).unwrap();
        assert!(c.points.iter().any(|p| (p.z - 1.0).abs() < 1e-10));
        assert!(sample_lambda_boundary(&oloid(), &[Vec3::new(0., 0., -2.)], 0).is_err());
    }

    #[test]
    fn lambda_r_examples() {
        let cone_q = match ProductMap::symmetric(&cone()).unwrap() {
            ProductMap::Symmetric { q } => q,
            _ => unreachable!(),
        };
        let m = m_matrices(&cone_q).unwrap();
        assert_eq!(lambda_r_point(&m, &Vec3::x()), Vec3::new(1., 0., 0.));
        assert_eq!(lambda_r_point(&m, &Vec3::z()), Vec3::new(0., 0., 1.));
        let (v, p) = support_lambda_r(&m, &Vec3::z()).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.z, 0.0, epsilon = 1e-14);
        let (v, p) = support_lambda_r(&m, &-Vec3::z()).unwrap();
        assert_abs_diff_eq!(v, -1.0, epsilon = 1e-14);
        assert!((p - Vec3::z()).norm() < 1e-12);
        let (v, _) = support_lambda_r(&m, &Vec3::x()).unwrap();
        assert_abs_diff_eq!(v, -1.0, epsilon = 1e-14);
        let zero = sample_lambda_r(&[Matrix3::zeros(); 3], &SamplerConfig { n_grid_a: 5, n_grid_b: 5, ..Default::default() }).unwrap();
        assert!(zero.points.iter().all(|p| p.norm() == 0.0));
    }

    #[test]
    fn real_split_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = [C64::new(h, 0.), C64::new(0., h), C64::new(0., 0.)];
        let s = complex_to_real_split(&v).unwrap();
        assert_abs_diff_eq!(s.t, 0.5, epsilon = 1e-15);
        assert!((s.x.unwrap() - Vec3::x()).norm() < 1e-15);
        assert!((s.y.unwrap() - Vec3::y()).norm() < 1e-15);
        let v = [C64::new(0.6, 0.), C64::new(0.8, 0.), C64::new(0., 0.)];
        let s = complex_to_real_split(&v).unwrap();
        assert_eq!(s.t, 1.0);
        assert!(s.y.is_none());
        assert!(matches!(complex_to_real_split(&[C64::new(1., 0.); 3]), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn seesaw_examples() {
        let cfg = SamplerConfig::default();
        let (v, _) = seesaw_support(&oloid(), &Vec3::x(), &cfg).unwrap();
        assert_abs_diff_eq!(v, -1.0, epsilon = 1e-10);
        let h1 = &p2(Pauli::Z, Pauli::I) + &p2(Pauli::I, Pauli::Z);
        let z = HermitianOperator::zeros(4).unwrap();
        let tr = ObservableTriple::new(h1, z.clone(), z).unwrap();
        let (v, s) = seesaw_support(&tr, &Vec3::x(), &cfg).unwrap();
        assert_abs_diff_eq!(v, -2.0, epsilon = 1e-10);
        assert!((s.alpha.t + 1.0).abs() < 1e-8 && (s.beta.t + 1.0).abs() < 1e-8);
    }

    #[test]
    fn partial_expectation_matches_bilinear_form() {
        let tr = oloid();
        let map = ProductMap::general(&tr).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let u = random_unit(&mut rng);
            let p = map.random_params(&mut rng);
            let h = tr.combination([u.x, u.y, u.z]);
            let st = p.state();
            let ha = partial_expectation(&h, &bloch_to_state(&st.beta), true).unwrap();
            let va = expectation(&ha, &bloch_to_state(&st.alpha)).unwrap();
            let hb = partial_expectation(&h, &bloch_to_state(&st.alpha), false).unwrap();
            let vb = expectation(&hb, &bloch_to_state(&st.beta)).unwrap();
            let direct = u.dot(&map.eval(&p));
            assert_abs_diff_eq!(va, direct, epsilon = 1e-12);
            assert_abs_diff_eq!(vb, direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for map in [ProductMap::general(&oloid()).unwrap(), ProductMap::symmetric(&ising()).unwrap()] {
            for _ in 0..10 {
                let p = map.random_params(&mut rng);
                let (f, j) = map.jacobian(&p);
                let h = 1e-6;
                for k in 0..map.n_tangent() {
                    let mut xi = vec![0.0; map.n_tangent()];
                    xi[k] = h;
                    let fp = map.eval(&map.retract(&p, &xi));
                    xi[k] = -h;
                    let fm = map.eval(&map.retract(&p, &xi));
                    let fd = (fp - fm) / (2.0 * h);
                    for i in 0..3 {
                        assert_abs_diff_eq!(j[(i, k)], fd[i], epsilon = 1e-7);
                    }
                }
                assert!((f - map.eval(&p)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn ascent_and_newton_reach_local_maximum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for map in [ProductMap::general(&oloid()).unwrap(), ProductMap::symmetric(&cone()).unwrap()] {
            for _ in 0..10 {
                let u = random_unit(&mut rng);
                let w = map.weighted(&u);
                let start = map.random_params(&mut rng);
                let p = w.ascend(&start, 0.0, 500);
                let p = w.newton_polish(&p, &map, 30);
                assert!(w.value(&p) >= w.value(&start) - 1e-12);
                let (g, _) = w.tangent_model(&p);
                assert!(g.norm() < 1e-7, "gradient {}", g.norm());
            }
        }
    }

    #[test]
    fn sphere_quadratic_min_matches_brute_force() {
        let grid = fibonacci_sphere(200_000);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut cases: Vec<(Vec3, Matrix3<f64>)> = (0..40)
            .map(|_| {
                let a = Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
                (random_unit(&mut rng) * rng.gen_range(0.0..2.0), (a + a.transpose()) * 0.5)
            })
            .collect();
        cases.push((Vec3::new(0.0, 0.0, 0.023), Matrix3::from_diagonal(&Vec3::new(0.45, 0.89, 0.0))));
        cases.push((Vec3::new(0.0, 0.1, 0.0), Matrix3::from_diagonal(&Vec3::new(-1.0, 0.0, 1.0))));
        cases.push((Vec3::zeros(), Matrix3::from_diagonal(&Vec3::new(2.0, -1.0, -1.0))));
        for (l, q) in cases {
            let f = |r: &Vec3| l.dot(r) + r.dot(&(q * r));
            let r = sphere_quadratic_min(&l, &q);
            assert_abs_diff_eq!(r.norm(), 1.0, epsilon = 1e-12);
            let brute = grid.iter().map(f).fold(f64::INFINITY, f64::min);
            assert!(f(&r) <= brute + 1e-12, "{} > {brute}", f(&r));
            assert!(f(&r) >= brute - 1e-3);
        }
    }

    #[test]
    fn xy_support_finds_the_lower_pole() {
        let map = ProductMap::symmetric(
            &ObservableTriple::new(
                p2(Pauli::X, Pauli::X),
                p2(Pauli::Y, Pauli::Y),
                (&p2(Pauli::Z, Pauli::I) + &p2(Pauli::I, Pauli::Z)).scaled(0.5),
            )
            .unwrap(),
        )
        .unwrap();
        let dir = Vec3::new(0.45007349563068083, 0.8926857428592523, 0.023366921633033888);
        let (v, r) = symmetric_support(&map, &dir, &SamplerConfig::default()).unwrap();
        assert_abs_diff_eq!(v, -dir.z, epsilon = 1e-12);
        assert_abs_diff_eq!(r.z, -1.0, epsilon = 1e-12);
    }
}
