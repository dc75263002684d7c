//! Small dense complex Hermitian linear algebra for one- and two-qubit
//! observables: validation, a cyclic Jacobi eigensolver, Pauli-basis
//! decompositions, block composition and expectation values.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Absolute tolerance on `|M - M^H|` entries.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const DEGENERACY_GAP: f64 = 1e-9;
const MAX_SWEEPS: usize = 100;

/// Single-qubit Pauli label; `I` is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        ['I', 'X', 'Y', 'Z'][self.index()]
    }

    /// The 2x2 matrix of this Pauli operator.
    pub fn matrix(self) -> DMatrix<C64> {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let entries = match self {
            Pauli::I => [one, z, z, one],
            Pauli::X => [z, one, one, z],
            Pauli::Y => [z, -i, i, z],
            Pauli::Z => [one, z, z, -one],
        };
        DMatrix::from_row_slice(2, 2, &entries)
    }
}

/// A validated Hermitian matrix of dimension 2 or 4.
#[derive(Clone, PartialEq)]
pub struct HermitianOperator {
    mat: DMatrix<C64>,
    correction: f64,
}

impl fmt::Debug for HermitianOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HermitianOperator")
            .field("dim", &self.dim())
            .field("rows", &self.mat.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>())
            .finish()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 4 {
        Ok(())
    } else {
        Err(Error::BadDim { expected: "2 or 4", got: dim })
    }
}

/// Validates a row-major `dim x dim` complex matrix and returns its Hermitian
/// part `(M + M^H) / 2`. The size of the removed anti-Hermitian part is kept in
/// [`HermitianOperator::correction`].
pub fn validate_hermitian(dim: usize, entries: &[C64]) -> Result<HermitianOperator> {
    check_dim(dim)?;
    if entries.len() != dim * dim {
        return Err(Error::BadDim { expected: "dim*dim entries", got: entries.len() });
    }
    if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    HermitianOperator::from_matrix(DMatrix::from_row_slice(dim, dim, entries))
}

impl HermitianOperator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::BadDim { expected: "square matrix", got: m.ncols() });
        }
        check_dim(m.nrows())?;
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let adj = m.adjoint();
        let asym = m.iter().zip(adj.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if asym > HERMITIAN_TOL {
            return Err(Error::NotHermitian { max_asymmetry: asym });
        }
        let mat = (&m + adj).map(|z| z * 0.5);
        Ok(Self { mat, correction: asym / 2.0 })
    }

    /// Builds from a real symmetric or complex matrix that is Hermitian by
    /// construction (used for catalog instances).
    fn exact(mat: DMatrix<C64>) -> Self {
        Self { mat, correction: 0.0 }
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::exact(DMatrix::zeros(dim, dim)))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::exact(DMatrix::identity(dim, dim)))
    }

    pub fn pauli(p: Pauli) -> Self {
        Self::exact(p.matrix())
    }

    /// `a ⊗ b` for two Pauli labels.
    pub fn pauli2(a: Pauli, b: Pauli) -> Self {
        Self::exact(a.matrix().kronecker(&b.matrix()))
    }

    /// Tensor product of two 2x2 operators.
    pub fn kron(&self, other: &HermitianOperator) -> Result<Self> {
        if self.dim() != 2 || other.dim() != 2 {
            return Err(Error::BadDim { expected: "2", got: self.dim().max(other.dim()) });
        }
        Ok(Self::exact(self.mat.kronecker(&other.mat)))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    /// Half of the largest `|M - M^H|` entry removed during validation.
    pub fn correction(&self) -> f64 {
        self.correction
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::exact(self.mat.map(|z| z * s))
    }

    /// Row-major entries.
    pub fn entries(&self) -> Vec<C64> {
        let n = self.dim();
        (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).map(|(r, c)| self.mat[(r, c)]).collect()
    }

    /// True when every entry is within `tol` of the other operator's.
    pub fn approx_eq(&self, other: &HermitianOperator, tol: f64) -> bool {
        self.dim() == other.dim() && self.mat.iter().zip(other.mat.iter()).all(|(a, b)| (a - b).norm() <= tol)
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        HermitianOperator::exact(&self.mat + &rhs.mat)
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        HermitianOperator::exact(&self.mat - &rhs.mat)
    }
}

impl Neg for &HermitianOperator {
    type Output = HermitianOperator;
    fn neg(self) -> HermitianOperator {
        self.scaled(-1.0)
    }
}

impl Mul<&HermitianOperator> for f64 {
    type Output = HermitianOperator;
    fn mul(self, rhs: &HermitianOperator) -> HermitianOperator {
        rhs.scaled(self)
    }
}

/// An ordered triple `(H1, H2, H3)` of equal-dimension observables.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableTriple {
    ops: [HermitianOperator; 3],
}

impl ObservableTriple {
    pub fn new(h1: HermitianOperator, h2: HermitianOperator, h3: HermitianOperator) -> Result<Self> {
        let d = h1.dim();
        for h in [&h2, &h3] {
            if h.dim() != d {
                return Err(Error::BadDim { expected: "equal dimensions", got: h.dim() });
            }
        }
        Ok(Self { ops: [h1, h2, h3] })
    }

    pub fn dim(&self) -> usize {
        self.ops[0].dim()
    }

    pub fn ops(&self) -> &[HermitianOperator; 3] {
        &self.ops
    }

    pub fn get(&self, i: usize) -> &HermitianOperator {
        &self.ops[i]
    }

    /// `λ1 H1 + λ2 H2 + λ3 H3`.
    pub fn combination(&self, lambda: [f64; 3]) -> HermitianOperator {
        let m = self.ops.iter().zip(lambda).fold(DMatrix::zeros(self.dim(), self.dim()), |acc, (h, l)| acc + h.mat.map(|z| z * l));
        HermitianOperator::exact(m)
    }

    /// Expectation triple `(<v|H1|v>, <v|H2|v>, <v|H3|v>)`.
    pub fn expectations(&self, v: &DVector<C64>) -> Result<[f64; 3]> {
        Ok([expectation(&self.ops[0], v)?, expectation(&self.ops[1], v)?, expectation(&self.ops[2], v)?])
    }
}

/// Ascending eigenvalues with orthonormal eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<C64>,
}

impl EigenDecomposition {
    pub fn vector(&self, k: usize) -> DVector<C64> {
        self.eigenvectors.column(k).into_owned()
    }

    /// Indices of the eigenvalues within [`DEGENERACY_GAP`] of the smallest one.
    pub fn ground_cluster(&self) -> Vec<usize> {
        let lo = self.eigenvalues[0];
        (0..self.eigenvalues.len()).take_while(|&k| self.eigenvalues[k] - lo < DEGENERACY_GAP).collect()
    }
}

fn off_diagonal_norm(a: &DMatrix<C64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                s += a[(p, q)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic complex Jacobi eigendecomposition with a fixed `(p, q)` sweep order.
///
/// Each rotation first removes the phase of `a_pq` with a diagonal unitary and
/// then applies a real Jacobi rotation. Eigenvectors are phase-fixed so that
/// their largest-modulus component (lowest index on ties) is real and
/// nonnegative; degenerate clusters are re-orthonormalized in index order.
pub fn eigh(h: &HermitianOperator) -> Result<EigenDecomposition> {
    let n = h.dim();
    let scale = h.frobenius_norm().max(1.0);
    let mut a = h.mat.clone();
    let mut v = DMatrix::<C64>::identity(n, n);
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        if off_diagonal_norm(&a) <= 1e-15 * scale {
            break;
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = if theta == 0.0 { 1.0 } else { theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt()) };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let mut g = DMatrix::<C64>::identity(n, n);
                g[(p, p)] = C64::new(c, 0.0);
                g[(p, q)] = C64::new(s, 0.0);
                g[(q, p)] = -phase.conj() * s;
                g[(q, q)] = phase.conj() * c;
                a = g.adjoint() * &a * &g;
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                for k in 0..n {
                    a[(k, k)] = C64::new(a[(k, k)].re, 0.0);
                }
                v = &v * &g;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re).then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vecs = DMatrix::<C64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &v.column(src));
    }

    // Gram-Schmidt inside degenerate clusters, in index order.
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eigenvalues[end] - eigenvalues[end - 1] < DEGENERACY_GAP {
            end += 1;
        }
        if end - start > 1 {
            for k in start..end {
                let mut col = vecs.column(k).into_owned();
                for j in start..k {
                    let prev = vecs.column(j).into_owned();
                    let overlap = prev.dotc(&col);
                    col -= prev * overlap;
                }
                let norm = col.norm();
                vecs.set_column(k, &(col / C64::new(norm, 0.0)));
            }
        }
        start = end;
    }

    for k in 0..n {
        let col = vecs.column(k).into_owned();
        let max_mod = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let pivot = col.iter().position(|z| z.norm() >= max_mod - 1e-12).unwrap_or(0);
        let ph = col[pivot] / col[pivot].norm();
        vecs.set_column(k, &(col * ph.conj()));
    }

    let residual = (0..n)
        .map(|k| {
            let col = vecs.column(k).into_owned();
            (&h.mat * &col - &col * C64::new(eigenvalues[k], 0.0)).norm()
        })
        .fold(0.0, f64::max);
    if residual > 1e-10 * scale {
        return Err(Error::NoConvergence { sweeps, residual });
    }
    Ok(EigenDecomposition { eigenvalues, eigenvectors: vecs })
}

/// Closed-form lowest eigenpair of a 2x2 Hermitian matrix written in the
/// Pauli basis as `c0 I + c·σ`: eigenvalue `c0 - |c|`, Bloch vector `-c/|c|`.
/// Returns `None` for the Bloch vector when `|c|` vanishes.
pub fn min_eig_pauli2(c0: f64, c: [f64; 3]) -> (f64, Option<[f64; 3]>) {
    let norm = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
    if norm < 1e-300 {
        (c0, None)
    } else {
        (c0 - norm, Some([-c[0] / norm, -c[1] / norm, -c[2] / norm]))
    }
}

/// Real coefficients of `σ_a ⊗ σ_b`, indexed `c[a][b]` in the order I, X, Y, Z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliCoeffs16 {
    pub c: [[f64; 4]; 4],
}

impl PauliCoeffs16 {
    pub fn get(&self, a: Pauli, b: Pauli) -> f64 {
        self.c[a.index()][b.index()]
    }

    pub fn reconstruct(&self) -> HermitianOperator {
        let mut m = DMatrix::<C64>::zeros(4, 4);
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                let w = self.c[a.index()][b.index()];
                if w != 0.0 {
                    m += a.matrix().kronecker(&b.matrix()).map(|z| z * w);
                }
            }
        }
        HermitianOperator::exact(m)
    }
}

/// `c[a][b] = Tr(H (σ_a ⊗ σ_b)) / 4`.
pub fn pauli_decompose(h: &HermitianOperator) -> Result<PauliCoeffs16> {
    if h.dim() != 4 {
        return Err(Error::BadDim { expected: "4", got: h.dim() });
    }
    let mut c = [[0.0; 4]; 4];
    for a in Pauli::ALL {
        for b in Pauli::ALL {
            let basis = a.matrix().kronecker(&b.matrix());
            c[a.index()][b.index()] = (&h.mat * basis).trace().re / 4.0;
        }
    }
    Ok(PauliCoeffs16 { c })
}

/// Single-qubit decomposition `H = c0 I + cx X + cy Y + cz Z`.
pub fn pauli_decompose1(h: &HermitianOperator) -> Result<[f64; 4]> {
    if h.dim() != 2 {
        return Err(Error::BadDim { expected: "2", got: h.dim() });
    }
    let mut c = [0.0; 4];
    for a in Pauli::ALL {
        c[a.index()] = (&h.mat * a.matrix()).trace().re / 2.0;
    }
    Ok(c)
}

/// Coefficients of a swap-symmetric two-qubit operator
/// `c0 + Σ c_aa σ_a⊗σ_a + Σ_{a<b} c_ab (σ_a⊗σ_b + σ_b⊗σ_a) + Σ c_a (σ_a⊗I + I⊗σ_a)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct SymmetricPauliCoeffs {
    pub c0: f64,
    pub cxx: f64,
    pub cyy: f64,
    pub czz: f64,
    pub cxy: f64,
    pub cxz: f64,
    pub cyz: f64,
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
}

impl SymmetricPauliCoeffs {
    pub fn to_coeffs16(&self) -> PauliCoeffs16 {
        let mut c = [[0.0; 4]; 4];
        c[0][0] = self.c0;
        c[1][1] = self.cxx;
        c[2][2] = self.cyy;
        c[3][3] = self.czz;
        for (a, b, v) in [(1, 2, self.cxy), (1, 3, self.cxz), (2, 3, self.cyz), (0, 1, self.cx), (0, 2, self.cy), (0, 3, self.cz)] {
            c[a][b] = v;
            c[b][a] = v;
        }
        PauliCoeffs16 { c }
    }
}

pub fn symmetric_pauli(h: &HermitianOperator) -> Result<SymmetricPauliCoeffs> {
    let p = pauli_decompose(h)?;
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            worst = worst.max((p.c[a][b] - p.c[b][a]).abs());
        }
    }
    if worst > HERMITIAN_TOL {
        return Err(Error::NotSwapSymmetric { max_violation: worst });
    }
    let c = p.c;
    Ok(SymmetricPauliCoeffs {
        c0: c[0][0],
        cxx: c[1][1],
        cyy: c[2][2],
        czz: c[3][3],
        cxy: c[1][2],
        cxz: c[1][3],
        cyz: c[2][3],
        cx: c[0][1],
        cy: c[0][2],
        cz: c[0][3],
    })
}

/// `ha ⊕ hb`: `ha` in the upper-left block, `hb` in the lower-right.
pub fn block_compose(ha: &HermitianOperator, hb: &HermitianOperator) -> Result<HermitianOperator> {
    if ha.dim() != 2 || hb.dim() != 2 {
        return Err(Error::BadDim { expected: "2", got: if ha.dim() != 2 { ha.dim() } else { hb.dim() } });
    }
    let mut m = DMatrix::<C64>::zeros(4, 4);
    m.view_mut((0, 0), (2, 2)).copy_from(&ha.mat);
    m.view_mut((2, 2), (2, 2)).copy_from(&hb.mat);
    Ok(HermitianOperator::exact(m))
}

/// `<v|H|v>` for a unit vector `v`.
pub fn expectation(h: &HermitianOperator, v: &DVector<C64>) -> Result<f64> {
    if v.len() != h.dim() {
        return Err(Error::BadDim { expected: "vector length equal to operator dimension", got: v.len() });
    }
    let norm = v.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm });
    }
    let val = v.dotc(&(&h.mat * v));
    debug_assert!(val.im.abs() <= 1e-12 * h.frobenius_norm().max(1.0));
    Ok(val.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn oloid_h1() -> HermitianOperator {
        let one = HermitianOperator::pauli(Pauli::I);
        let x = HermitianOperator::pauli(Pauli::X);
        block_compose(&x, &(&one + &x)).unwrap()
    }

    #[test]
    fn pauli_z_is_accepted_unchanged() {
        let z = validate_hermitian(2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]).unwrap();
        assert_eq!(z, HermitianOperator::pauli(Pauli::Z));
        assert_eq!(z.correction(), 0.0);
    }

    #[test]
    fn anti_hermitian_offdiagonal_is_rejected() {
        let err = validate_hermitian(2, &[c(0., 0.), c(0., 1.), c(0., 1.), c(0., 0.)]).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
    }

    #[test]
    fn tiny_asymmetry_is_symmetrized_and_recorded() {
        let h = validate_hermitian(2, &[c(1., 0.), c(1., 1e-13), c(1., 1e-13), c(0., 0.)]).unwrap();
        assert!(h.correction() > 0.0);
        assert_abs_diff_eq!(h.get(0, 1).im, 0.0, epsilon = 1e-20);
    }

    #[test]
    fn bad_dimensions_and_nonfinite_entries() {
        assert!(matches!(validate_hermitian(3, &[c(0., 0.); 9]), Err(Error::BadDim { .. })));
        assert!(matches!(validate_hermitian(2, &[c(f64::NAN, 0.), c(0., 0.), c(0., 0.), c(0., 0.)]), Err(Error::NonFinite)));
    }

    #[test]
    fn eigh_of_pauli_z() {
        let e = eigh(&HermitianOperator::pauli(Pauli::Z)).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[1], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvectors[(1, 0)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvectors[(0, 1)].re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eigh_of_xx_is_doubly_degenerate() {
        let e = eigh(&HermitianOperator::pauli2(Pauli::X, Pauli::X)).unwrap();
        for (got, want) in e.eigenvalues.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert_eq!(e.ground_cluster(), vec![0, 1]);
        let gram = e.eigenvectors.adjoint() * &e.eigenvectors;
        assert!((gram - DMatrix::<C64>::identity(4, 4)).norm() < 1e-10);
    }

    #[test]
    fn eigh_of_oloid_h1_matches_block_characteristic_polynomials() {
        // Block X has roots ±1; block [[1,1],[1,1]] has roots of x² - 2x = 0.
        let e = eigh(&oloid_h1()).unwrap();
        for (got, want) in e.eigenvalues.iter().zip([-1.0, 0.0, 1.0, 2.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn eigh_phase_convention() {
        let y = HermitianOperator::pauli(Pauli::Y);
        let e = eigh(&y).unwrap();
        for k in 0..2 {
            let col = e.vector(k);
            let (pivot, _) = col.iter().enumerate().fold((0, -1.0), |acc, (i, z)| if z.norm() > acc.1 + 1e-12 { (i, z.norm()) } else { acc });
            assert!(col[pivot].im.abs() < 1e-14 && col[pivot].re > 0.0);
        }
    }

    #[test]
    fn pauli_decompose_basics() {
        let p = pauli_decompose(&HermitianOperator::pauli2(Pauli::X, Pauli::X)).unwrap();
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                let want = if (a, b) == (Pauli::X, Pauli::X) { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(p.get(a, b), want, epsilon = 1e-15);
            }
        }
        let p = pauli_decompose(&HermitianOperator::identity(4).unwrap()).unwrap();
        assert_abs_diff_eq!(p.get(Pauli::I, Pauli::I), 1.0, epsilon = 1e-15);
        assert!(matches!(pauli_decompose(&HermitianOperator::pauli(Pauli::X)), Err(Error::BadDim { .. })));
    }

    #[test]
    fn oloid_h1_pauli_coefficients_match_direct_traces() {
        let h = oloid_h1();
        let p = pauli_decompose(&h).unwrap();
        // Independent oracle: sum of elementwise products with the conjugated basis.
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                let basis = a.matrix().kronecker(&b.matrix());
                let mut tr = C64::new(0.0, 0.0);
                for i in 0..4 {
                    for j in 0..4 {
                        tr += h.get(i, j) * basis[(j, i)];
                    }
                }
                assert_abs_diff_eq!(p.get(a, b), tr.re / 4.0, epsilon = 1e-15);
            }
        }
        // H1 = |0><0|⊗X + |1><1|⊗(I+X) = ½ I⊗I - ½ Z⊗I + I⊗X
        assert_abs_diff_eq!(p.get(Pauli::I, Pauli::X), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.get(Pauli::Z, Pauli::X), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.get(Pauli::I, Pauli::I), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.get(Pauli::Z, Pauli::I), -0.5, epsilon = 1e-15);
        assert!(p.reconstruct().approx_eq(&h, 1e-12));
    }

    #[test]
    fn symmetric_pauli_examples() {
        let h = &HermitianOperator::pauli2(Pauli::X, Pauli::Y) + &HermitianOperator::pauli2(Pauli::Y, Pauli::X);
        let s = symmetric_pauli(&h).unwrap();
        assert_eq!(s, SymmetricPauliCoeffs { cxy: 1.0, ..Default::default() });
        assert!(s.to_coeffs16().reconstruct().approx_eq(&h, 1e-12));
        assert!(matches!(symmetric_pauli(&oloid_h1()), Err(Error::NotSwapSymmetric { .. })));
    }

    #[test]
    fn block_compose_examples() {
        let x = HermitianOperator::pauli(Pauli::X);
        let z = HermitianOperator::pauli(Pauli::Z);
        let xx = block_compose(&x, &x).unwrap();
        assert!(xx.approx_eq(&HermitianOperator::pauli2(Pauli::I, Pauli::X), 0.0));
        let d = block_compose(&z, &-&z).unwrap();
        for (k, want) in [1.0, -1.0, -1.0, 1.0].into_iter().enumerate() {
            assert_eq!(d.get(k, k).re, want);
        }
        let h1 = oloid_h1();
        assert_eq!(h1.get(0, 1).re, 1.0);
        assert_eq!(h1.get(2, 3).re, 1.0);
        assert_eq!(h1.get(2, 2).re, 1.0);
        assert_eq!(h1.get(1, 2).re, 0.0);
        assert!(matches!(block_compose(&h1, &x), Err(Error::BadDim { .. })));
    }

    #[test]
    fn expectation_examples() {
        let z = HermitianOperator::pauli(Pauli::Z);
        let ket0 = DVector::from_vec(vec![c(1., 0.), c(0., 0.)]);
        assert_abs_diff_eq!(expectation(&z, &ket0).unwrap(), 1.0);
        let ket00 = DVector::from_vec(vec![c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
        assert_abs_diff_eq!(expectation(&HermitianOperator::pauli2(Pauli::X, Pauli::X), &ket00).unwrap(), 0.0);
        // |1> ⊗ |+> sees the lower block I + X, whose <+|I+X|+> = 2.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = DVector::from_vec(vec![c(0., 0.), c(0., 0.), c(s, 0.), c(s, 0.)]);
        assert_abs_diff_eq!(expectation(&oloid_h1(), &v).unwrap(), 2.0, epsilon = 1e-14);
        let bad = DVector::from_vec(vec![c(1., 0.), c(1., 0.)]);
        assert!(matches!(expectation(&z, &bad), Err(Error::NotNormalized { .. })));
    }
}
