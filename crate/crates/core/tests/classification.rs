use numrange::boundary::{BoundaryConfig, Classifier, ClassifyReport, FeatureClass};
use numrange::geom::Vec3;
use numrange::models::instance_by_name;
use numrange::ranges::{product_expectation, seesaw_support, SamplerConfig};

fn run(name: &str) -> (Classifier, ClassifyReport) {
    let spec = instance_by_name(name).unwrap();
    let c = Classifier::new(&spec.triple, spec.symmetric, &SamplerConfig::default(), &BoundaryConfig::default()).unwrap();
    let r = c.classify().unwrap();
    (c, r)
}

/// Largest excess of `p` over Θ along the normals of the sampled-hull facets
/// it violates, with Θ's support taken from the see-saw optimizer.
fn excess_over_theta(c: &Classifier, p: &Vec3, cfg: &SamplerConfig) -> f64 {
    let h = &c.hull;
    let center: Vec3 = h.vertices.iter().sum::<Vec3>() / h.vertices.len() as f64;
    let mut worst: f64 = 0.0;
    for t in &h.triangles {
        let [a, b, d] = t.map(|i| h.vertices[i]);
        let mut n = (b - a).cross(&(d - a)).normalize();
        if n.dot(&(a - center)) < 0.0 {
            n = -n;
        }
        if n.dot(&(p - a)) > h.tol_hull {
            let top = -seesaw_support(&c.triple, &-n, cfg).unwrap().0;
            worst = worst.max(n.dot(p) - top);
        }
    }
    worst
}

#[test]
fn rulings_lie_on_the_boundary() {
    let (c, r) = run("eg2");
    let cfg = SamplerConfig::default();
    let mut outside: f64 = 0.0;
    let mut excess: f64 = 0.0;
    for f in r.segments().step_by(10) {
        let (a, b) = f.endpoints().unwrap();
        let u = f.direction;
        let top = -seesaw_support(&c.triple, &-u, &cfg).unwrap().0;
        assert!((f.value - top).abs() <= 1e-9 * c.tol.diameter, "slice value {} vs optimizer {top}", f.value);
        for p in [a, b, (a + b) * 0.5] {
            assert!((u.dot(&p) - f.value).abs() <= c.tol.eps_slab, "{} vs {}", u.dot(&p), f.value);
            outside = outside.max(c.hull.outside_distance(&p));
            excess = excess.max(excess_over_theta(&c, &p, &cfg));
        }
    }
    println!("outside the sampled hull by up to {outside:.3e}; excess over Θ {excess:.3e}");
    assert!(excess <= 1e-9 * c.tol.diameter);
}

#[test]
fn member_certificates_reproduce_their_probes() {
    let (c, r) = run("eg1");
    let mut checked = 0;
    for f in r.segments() {
        for p in f.probes.iter().filter(|p| p.member) {
            let cert = p.certificate.as_ref().expect("members carry a certificate");
            let q = product_expectation(&c.triple, cert).unwrap();
            assert!((q - p.point).norm() <= c.tol.eps_member * 10.0 + 1e-12);
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn symmetry_breaking_rulings_have_two_clusters_and_outside_probes() {
    let (_, r) = run("eg3");
    let sb: Vec<_> = r.segments().filter(|f| f.class == FeatureClass::SymmetryBreaking).collect();
    assert!(!sb.is_empty());
    for f in sb {
        assert!(f.clusters >= 2, "clusters {}", f.clusters);
        let ends_in = f.probes.first().unwrap().member || f.probes.last().unwrap().member;
        assert!(ends_in || f.member_fraction() == 0.0);
        assert!(f.member_fraction() <= 0.1);
    }
}

#[test]
fn gapless_rulings_are_fully_inside() {
    let (_, r) = run("eg1");
    for f in r.segments() {
        assert_eq!(f.class, FeatureClass::Gapless);
        assert_eq!(f.member_fraction(), 1.0);
        let (a, b) = f.endpoints().unwrap();
        assert!(((b - a).normalize().x).abs() > 0.99);
    }
}

#[test]
fn phase_energy_matches_check() {
    let (c, _) = run("cone");
    let path: Vec<Vec3> = (0..24).map(|k| {
        let t = k as f64 * 0.26;
        Vec3::new(t.cos(), t.sin() * 0.6, t.sin() * 0.8)
    }).collect();
    let scan = c.phase_scan(&path, false).unwrap();
    assert!(scan.samples.iter().all(|s| s.agree));
    assert!(scan.max_disagreement <= 1e-4 * c.tol.diameter);
}
