//! Catalog of named observable triples with closed-form product-range maps.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::qops::{block_compose, HermitianOperator, ObservableTriple, Pauli};
use crate::ranges::ProductParams;

/// Names accepted by [`instance_by_name`].
pub const CATALOG: [&str; 7] = ["oloid", "cone", "ising", "xy", "eg1", "eg2", "eg3"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oracle {
    Oloid,
    Cone,
    Ising,
    Xy,
    Eg1,
    Eg2,
    Eg3,
}

#[derive(Debug, Clone)]
pub struct InstanceSpec {
    pub name: String,
    pub triple: ObservableTriple,
    pub oracle: Option<Oracle>,
    pub notes: String,
    /// Warnings to surface whenever the instance is used.
    pub warnings: Vec<String>,
    /// True when the natural range for the instance is the symmetric one (Π₊).
    pub symmetric: bool,
}

fn pauli(p: Pauli) -> HermitianOperator {
    HermitianOperator::pauli(p)
}

fn p2(a: Pauli, b: Pauli) -> HermitianOperator {
    HermitianOperator::pauli2(a, b)
}

fn zero2() -> HermitianOperator {
    HermitianOperator::zeros(2).expect("dim 2")
}

fn triple(h: [HermitianOperator; 3]) -> ObservableTriple {
    let [a, b, c] = h;
    ObservableTriple::new(a, b, c).expect("equal dimensions")
}

fn blocks(a: [HermitianOperator; 3], b: [HermitianOperator; 3]) -> ObservableTriple {
    let h = [0, 1, 2].map(|i| block_compose(&a[i], &b[i]).expect("2x2 blocks"));
    triple(h)
}

/// The 2x2 blocks `(H^a, H^b)` of the oloid triple.
pub fn oloid_blocks() -> ([HermitianOperator; 3], [HermitianOperator; 3]) {
    let i = pauli(Pauli::I);
    let x = pauli(Pauli::X);
    let y = pauli(Pauli::Y);
    ([x.clone(), y.clone(), zero2()], [&i + &x, zero2(), y])
}

pub fn oloid_instance() -> InstanceSpec {
    let (a, b) = oloid_blocks();
    InstanceSpec {
        name: "oloid".into(),
        triple: blocks(a, b),
        oracle: Some(Oracle::Oloid),
        notes: "block diagonal; joint ranges of the blocks are the unit disks x²+y²≤1 (z=0) and (x-1)²+z²≤1 (y=0)".into(),
        warnings: Vec::new(),
        symmetric: false,
    }
}

/// `(1 - s1 + s2 cos t, s1 s2 sin t, (1 - s1) s2 sin t)` for `s1, s2 ∈ [0,1]`, `t ∈ [0, 2π]`.
pub fn oloid_pi_oracle(s1: f64, s2: f64, t: f64) -> Result<Vec3> {
    if !(0.0..=1.0).contains(&s1) || !(0.0..=1.0).contains(&s2) || !(0.0..=TAU).contains(&t) {
        return Err(Error::OutOfDomain(format!("oloid parameters (s1={s1}, s2={s2}, t={t})")));
    }
    Ok(Vec3::new(1.0 - s1 + s2 * t.cos(), s1 * s2 * t.sin(), (1.0 - s1) * s2 * t.sin()))
}

pub fn cone_instance() -> InstanceSpec {
    InstanceSpec {
        name: "cone".into(),
        triple: triple([
            &p2(Pauli::X, Pauli::X) - &p2(Pauli::Y, Pauli::Y),
            &p2(Pauli::X, Pauli::Y) + &p2(Pauli::Y, Pauli::X),
            p2(Pauli::Z, Pauli::Z),
        ]),
        oracle: Some(Oracle::Cone),
        notes: "homogeneous symmetric map f = (r²-s², 2rs, t²)".into(),
        warnings: Vec::new(),
        symmetric: true,
    }
}

pub fn ising_instance() -> InstanceSpec {
    InstanceSpec {
        name: "ising".into(),
        triple: triple([
            p2(Pauli::X, Pauli::X),
            (&p2(Pauli::Z, Pauli::I) + &p2(Pauli::I, Pauli::Z)).scaled(0.5),
            (&p2(Pauli::X, Pauli::I) + &p2(Pauli::I, Pauli::X)).scaled(0.5),
        ]),
        oracle: Some(Oracle::Ising),
        notes: "symmetric map f = (r², t, r)".into(),
        warnings: Vec::new(),
        symmetric: true,
    }
}

pub fn xy_instance() -> InstanceSpec {
    InstanceSpec {
        name: "xy".into(),
        triple: triple([
            p2(Pauli::X, Pauli::X),
            p2(Pauli::Y, Pauli::Y),
            (&p2(Pauli::Z, Pauli::I) + &p2(Pauli::I, Pauli::Z)).scaled(0.5),
        ]),
        oracle: Some(Oracle::Xy),
        notes: "symmetric map f = (r², s², t)".into(),
        warnings: Vec::new(),
        symmetric: true,
    }
}

/// Example instances 1-3: block compositions sharing the capsule hull.
pub fn appendix_instance(k: usize) -> Result<InstanceSpec> {
    let i = pauli(Pauli::I);
    let x = pauli(Pauli::X);
    let y = pauli(Pauli::Y);
    let z = pauli(Pauli::Z);
    let up = &i + &z;
    let down = &z - &i;
    let (a, b, oracle, warnings) = match k {
        1 => ([up, x.clone(), y.clone()], [down, x, y], Oracle::Eg1, Vec::new()),
        2 => ([up, x.clone(), y.clone()], [down, -&x, -&y], Oracle::Eg2, Vec::new()),
        3 => (
            [up.clone(), x.clone(), y.clone()],
            [-&up, -&x, -&y],
            Oracle::Eg3,
            vec!["eg3: the printed product-range formula ((2t-1)cosθ, ...) disagrees with the printed matrices; the oracle used here is derived from the matrices: ((2t-1)(1+cosθ), (2t-1)sinθcosφ, (2t-1)sinθsinφ)".to_string()],
        ),
        _ => return Err(Error::BadIndex(k)),
    };
    Ok(InstanceSpec {
        name: format!("eg{k}"),
        triple: blocks(a, b),
        oracle: Some(oracle),
        notes: "block diagonal; separable range is the capsule conv of unit spheres at (±1,0,0)".into(),
        warnings,
        symmetric: false,
    })
}

/// Closed-form product range of examples 1-3 at `t ∈ [0,1]`, `θ ∈ [0,π]`, `φ ∈ [0,2π]`.
pub fn appendix_oracle(k: usize, t: f64, theta: f64, phi: f64) -> Result<Vec3> {
    if !(0.0..=1.0).contains(&t) || !(0.0..=PI).contains(&theta) || !(0.0..=TAU).contains(&phi) {
        return Err(Error::OutOfDomain(format!("example parameters (t={t}, θ={theta}, φ={phi})")));
    }
    let m = 2.0 * t - 1.0;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    match k {
        1 => Ok(Vec3::new(m + ct, st * cp, st * sp)),
        2 => Ok(Vec3::new(m + ct, m * st * cp, m * st * sp)),
        3 => Ok(Vec3::new(m * (1.0 + ct), m * st * cp, m * st * sp)),
        _ => Err(Error::BadIndex(k)),
    }
}

pub fn instance_by_name(name: &str) -> Result<InstanceSpec> {
    match name.to_ascii_lowercase().as_str() {
        "oloid" => Ok(oloid_instance()),
        "cone" => Ok(cone_instance()),
        "ising" => Ok(ising_instance()),
        "xy" => Ok(xy_instance()),
        "eg1" => appendix_instance(1),
        "eg2" => appendix_instance(2),
        "eg3" => appendix_instance(3),
        _ => Err(Error::NotFound(name.to_string())),
    }
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w.is_finite() {
        w
    } else {
        0.0
    }
}

/// Evaluates the instance's closed form at the parameters equivalent to the
/// product state `p`: `|α⟩ = u₁|0⟩ + u₂|1⟩` gives `s₁ = t = |u₁|² = (1+a_t)/2`;
/// `β` gives the polar angles `(θ, φ)`, and for the oloid `s₂ = √(b_r² + b_s²)`
/// and `t = atan2(b_s, b_r)`. Symmetric maps read the Bloch vector `a`.
pub fn oracle_at(oracle: Oracle, p: &ProductParams) -> Vec3 {
    let a = p.a;
    let b = p.b;
    let s1 = ((1.0 + a.z) / 2.0).clamp(0.0, 1.0);
    match oracle {
        Oracle::Oloid => {
            let s2 = (b.x * b.x + b.y * b.y).sqrt().min(1.0);
            let t = wrap_angle(b.y.atan2(b.x));
            oloid_pi_oracle(s1, s2, t).expect("parameters in domain")
        }
        Oracle::Eg1 | Oracle::Eg2 | Oracle::Eg3 => {
            let theta = b.z.clamp(-1.0, 1.0).acos();
            let phi = wrap_angle(b.y.atan2(b.x));
            let k = match oracle {
                Oracle::Eg1 => 1,
                Oracle::Eg2 => 2,
                _ => 3,
            };
            appendix_oracle(k, s1, theta, phi).expect("parameters in domain")
        }
        Oracle::Cone => Vec3::new(a.x * a.x - a.y * a.y, 2.0 * a.x * a.y, a.z * a.z),
        Oracle::Ising => Vec3::new(a.x * a.x, a.z, a.x),
        Oracle::Xy => Vec3::new(a.x * a.x, a.y * a.y, a.z),
    }
}

/// True when every observable is block diagonal with respect to the first qubit.
pub fn is_block_diagonal(tr: &ObservableTriple) -> bool {
    tr.dim() == 4
        && tr.ops().iter().all(|h| (0..2).all(|i| (2..4).all(|j| h.get(i, j).norm() == 0.0 && h.get(j, i).norm() == 0.0)))
}
