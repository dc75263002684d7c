//! Command-line front end: instance files, point-cloud and mesh export, and
//! JSON reports.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::boundary::{great_circle, BoundaryConfig, Classifier, ClassifyReport, FeatureClass, FeatureKind};
use crate::error::{Error, Result};
use crate::geom::{bounding_box, Vec3};
use crate::hull::{convex_hull, ConvexPolytope3};
use crate::models::{instance_by_name, is_block_diagonal, oracle_at, InstanceSpec, Oracle};
use crate::qops::{symmetric_pauli, HermitianOperator, ObservableTriple, Pauli, C64};
use crate::ranges::{
    is_homogeneous, m_matrices, quadratic_map, sample_lambda_r, sample_pi, sample_pi_plus, PointCloud3, Provenance,
    RangeKind, SamplerConfig,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "numrange", version, about = "Joint, product and separable numerical ranges of two-qubit observable triples")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write Π (and Π₊ / Λ_ℝ where defined) point clouds as CSV.
    Sample(Common),
    /// Convex hull of a sampled range or of a CSV cloud: OBJ mesh and stats.
    Hull(HullArgs),
    /// Sweep, feature detection and classification report.
    Classify(Common),
    /// Ground-energy and feature scan along a path of directions λ.
    Phase(PhaseArgs),
    /// sample, hull, classify and phase with defaults for a catalog instance.
    Demo(DemoArgs),
    /// Instance diagnostics and cloud identity checks.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Symmetric range for instances marked symmetric, general otherwise.
    Auto,
    General,
    Symmetric,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Catalog instance name.
    #[arg(long, conflicts_with = "file")]
    pub demo: Option<String>,
    /// Instance file (JSON).
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Points per Bloch grid; Π uses grid², Π₊ and Λ_ℝ grid² points on one sphere.
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    /// Sweep directions.
    #[arg(long, default_value_t = 2000)]
    pub dirs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Slab half-width relative to the hull diameter.
    #[arg(long, default_value_t = 1e-3)]
    pub eps_slab: f64,
    /// Membership distance relative to the hull diameter.
    #[arg(long, default_value_t = 1e-11)]
    pub eps_member: f64,
    #[arg(long, default_value_t = 9)]
    pub probes: usize,
    #[arg(long, value_enum, default_value_t = Mode::Auto)]
    pub mode: Mode,
}

#[derive(Debug, Clone, Args)]
pub struct HullArgs {
    #[command(flatten)]
    pub common: Common,
    /// Hull this CSV cloud instead of sampling an instance.
    #[arg(long)]
    pub cloud: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PhaseArgs {
    #[command(flatten)]
    pub common: Common,
    /// First direction of the great-circle path, as x,y,z.
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<String>,
    /// Second direction of the great-circle path, as x,y,z.
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<String>,
    #[arg(long, default_value_t = 360)]
    pub steps: usize,
    /// Explicit open path: CSV with columns x,y,z.
    #[arg(long, conflicts_with_all = ["from", "to"])]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    /// Catalog instance name.
    pub name: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: Common,
    /// Check this CSV cloud instead of a fresh sample.
    #[arg(long)]
    pub cloud: Option<PathBuf>,
}

/// Process exit code for an error: 2 input/usage, 3 validation, 4 numerical.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::NotHermitian { .. }
        | Error::BadDim { .. }
        | Error::NonFinite
        | Error::NotSwapSymmetric { .. }
        | Error::NotNormalized { .. }
        | Error::NotHomogeneous { .. } => 3,
        Error::NoConvergence { .. } | Error::DegenerateSlice => 4,
        _ => 2,
    }
}

fn parse_error(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { location: location.into(), message: message.into() }
}

fn parse_entry(v: &Value, loc: &str) -> Result<C64> {
    match v {
        Value::Number(n) => Ok(C64::new(n.as_f64().ok_or_else(|| parse_error(loc, "not a finite number"))?, 0.0)),
        Value::Object(o) => {
            let part = |k: &str| -> Result<f64> {
                match o.get(k) {
                    None => Ok(0.0),
                    Some(Value::Number(n)) => n.as_f64().ok_or_else(|| parse_error(format!("{loc}.{k}"), "not a finite number")),
                    Some(_) => Err(parse_error(format!("{loc}.{k}"), "expected a number")),
                }
            };
            if let Some(k) = o.keys().find(|k| *k != "re" && *k != "im") {
                return Err(parse_error(format!("{loc}.{k}"), "unknown field (expected re, im)"));
            }
            Ok(C64::new(part("re")?, part("im")?))
        }
        _ => Err(parse_error(loc, "expected a number or {re, im}")),
    }
}

fn parse_operator(v: &Value, name: &str) -> Result<HermitianOperator> {
    match v {
        Value::Array(rows) => {
            if rows.len() != 4 {
                return Err(parse_error(name, format!("expected a 4x4 matrix, got {} rows", rows.len())));
            }
            let mut entries = Vec::with_capacity(16);
            for (i, row) in rows.iter().enumerate() {
                let Value::Array(cols) = row else { return Err(parse_error(format!("{name}[{i}]"), "expected a row array")) };
                if cols.len() != 4 {
                    return Err(parse_error(format!("{name}[{i}]"), format!("expected 4 entries, got {}", cols.len())));
                }
                for (j, e) in cols.iter().enumerate() {
                    entries.push(parse_entry(e, &format!("{name}[{i}][{j}]"))?);
                }
            }
            crate::qops::validate_hermitian(4, &entries).map_err(|e| e.context(name))
        }
        Value::Object(terms) => {
            let mut h = HermitianOperator::zeros(4)?;
            for (k, c) in terms {
                let loc = format!("{name}.{k}");
                let letters: Vec<Pauli> = k.chars().filter_map(Pauli::from_char).collect();
                if k.chars().count() != 2 || letters.len() != 2 {
                    return Err(parse_error(loc, "expected a two-letter Pauli label over I, X, Y, Z"));
                }
                let Some(c) = c.as_f64() else { return Err(parse_error(loc, "expected a real coefficient")) };
                if !c.is_finite() {
                    return Err(Error::NonFinite.context(loc));
                }
                h = &h + &(c * &HermitianOperator::pauli2(letters[0], letters[1]));
            }
            Ok(h)
        }
        _ => Err(parse_error(name, "expected a dense 4x4 matrix or a Pauli-coefficient map")),
    }
}

/// Parses an instance document:
/// `{"name": ..., "symmetric": bool, "h1": M, "h2": M, "h3": M}` where each `M`
/// is a 4x4 array of numbers or `{re, im}` objects, or a map from two-letter
/// Pauli labels to real coefficients. Missing operators are zero.
pub fn parse_instance(text: &str, default_name: &str) -> Result<InstanceSpec> {
    let doc: Value = serde_json::from_str(text).map_err(|e| parse_error(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    let Value::Object(obj) = &doc else { return Err(parse_error("document", "expected a JSON object")) };
    for k in obj.keys() {
        if !["name", "symmetric", "h1", "h2", "h3", "notes"].contains(&k.as_str()) {
            return Err(parse_error(k.clone(), "unknown field"));
        }
    }
    let name = match obj.get("name") {
        None => default_name.to_string(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(parse_error("name", "expected a string")),
    };
    let symmetric = match obj.get("symmetric") {
        None => false,
        Some(Value::Bool(b)) => *b,
        Some(_) => return Err(parse_error("symmetric", "expected a boolean")),
    };
    let op = |k: &str| -> Result<HermitianOperator> {
        match obj.get(k) {
            None => HermitianOperator::zeros(4),
            Some(v) => parse_operator(v, k),
        }
    };
    let triple = ObservableTriple::new(op("h1")?, op("h2")?, op("h3")?)?;
    let notes = obj.get("notes").and_then(Value::as_str).unwrap_or_default().to_string();
    Ok(InstanceSpec { name, triple, oracle: None, notes, warnings: Vec::new(), symmetric })
}

/// Catalog name or instance file.
pub fn load_instance(demo: Option<&str>, file: Option<&Path>) -> Result<InstanceSpec> {
    match (demo, file) {
        (Some(name), None) => instance_by_name(name),
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("instance");
            parse_instance(&text, stem).map_err(|e| e.context(path.display().to_string()))
        }
        (Some(_), Some(_)) => Err(Error::InvalidArgument("give either --demo or --file, not both".into())),
        (None, None) => Err(Error::InvalidArgument("an instance is required: --demo NAME or --file PATH".into())),
    }
}

/// SHA-256 over the little-endian bytes of all matrix entries (row major,
/// real then imaginary part, `-0` read as `0`).
pub fn instance_hash(tr: &ObservableTriple) -> String {
    let mut h = Sha256::new();
    for op in tr.ops() {
        for z in op.entries() {
            h.update((z.re + 0.0).to_le_bytes());
            h.update((z.im + 0.0).to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `# kind=<tag>`, a header `x,y,z[,provenance...]` and one row per point.
pub fn write_cloud_csv(path: &Path, cloud: &PointCloud3) -> Result<()> {
    let mut text = format!("# kind={}\n", cloud.tag.name());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["x".to_string(), "y".to_string(), "z".to_string()];
    if let Some(p) = &cloud.provenance {
        header.extend(p.names.iter().cloned());
    }
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(&header).map_err(io)?;
    for (i, p) in cloud.points.iter().enumerate() {
        let mut row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        if let Some(prov) = &cloud.provenance {
            row.extend(prov.row(i).iter().map(|v| v.to_string()));
        }
        w.write_record(&row).map_err(io)?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    text.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    fs::write(path, text).map_err(|e| Error::from(e).context(path.display().to_string()))
}

fn kind_from_name(s: &str) -> Option<RangeKind> {
    [RangeKind::Lambda, RangeKind::Pi, RangeKind::Theta, RangeKind::PiPlus, RangeKind::ThetaPlus, RangeKind::LambdaR]
        .into_iter()
        .find(|k| k.name() == s)
}

/// Reads a cloud written by [`write_cloud_csv`]; the kind line is optional
/// (default `pi`) and extra columns become provenance.
pub fn read_cloud_csv(path: &Path) -> Result<PointCloud3> {
    let ctx = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::from(e).context(ctx.clone()))?;
    let mut tag = RangeKind::Pi;
    let mut body = text.as_str();
    if let Some(rest) = text.strip_prefix("# kind=") {
        let (kind, tail) = rest.split_once('\n').unwrap_or((rest, ""));
        tag = kind_from_name(kind.trim()).ok_or_else(|| parse_error(format!("{ctx}:1"), format!("unknown kind {:?}", kind.trim())))?;
        body = tail;
    }
    let line0 = if body.len() < text.len() { 2 } else { 1 };
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(body.as_bytes());
    let header: Vec<String> = rd.headers().map_err(|e| parse_error(format!("{ctx}:{line0}"), e.to_string()))?.iter().map(|s| s.trim().to_string()).collect();
    if header.len() < 3 || header[0] != "x" || header[1] != "y" || header[2] != "z" {
        return Err(parse_error(format!("{ctx}:{line0}"), "header must start with x,y,z"));
    }
    let names: Vec<&str> = header[3..].iter().map(String::as_str).collect();
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let line = rec.as_ref().ok().and_then(|r| r.position()).map_or(line0 + 1 + k as u64 as usize, |p| p.line() as usize + line0 - 1);
        let rec = rec.map_err(|e| parse_error(format!("{ctx}:{line}"), e.to_string()))?;
        if rec.len() != header.len() {
            return Err(parse_error(format!("{ctx}:{line}"), format!("expected {} fields, got {}", header.len(), rec.len())));
        }
        let nums: Vec<f64> = rec
            .iter()
            .enumerate()
            .map(|(j, s)| s.trim().parse::<f64>().map_err(|_| parse_error(format!("{ctx}:{line}:{}", header[j]), format!("not a number: {s:?}"))))
            .collect::<Result<_>>()?;
        points.push(Vec3::new(nums[0], nums[1], nums[2]));
        values.extend_from_slice(&nums[3..]);
    }
    let mut cloud = PointCloud3::new(points, tag).map_err(|e| e.context(ctx.clone()))?;
    if !names.is_empty() {
        let mut prov = Provenance::new(&names);
        prov.values = values;
        cloud.provenance = Some(prov);
    }
    Ok(cloud)
}

/// Vertices and triangles as Wavefront OBJ (rank 1: a polyline).
pub fn write_obj(path: &Path, hull: &ConvexPolytope3) -> Result<()> {
    let mut s = String::from("# convex hull\n");
    for v in &hull.vertices {
        s.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for t in &hull.triangles {
        s.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    if hull.affine_rank == 1 {
        s.push_str("l 1 2\n");
    }
    fs::write(path, s).map_err(|e| Error::from(e).context(path.display().to_string()))
}

/// Reads the `v` and `f` records of an OBJ file.
pub fn read_obj(path: &Path) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let ctx = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::from(e).context(ctx.clone()))?;
    let mut verts = Vec::new();
    let mut faces = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let loc = format!("{ctx}:{}", i + 1);
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it.map(|t| t.parse::<f64>().map_err(|_| parse_error(loc.clone(), "bad vertex"))).collect::<Result<_>>()?;
                if c.len() != 3 {
                    return Err(parse_error(loc, "vertex needs 3 coordinates"));
                }
                verts.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let c: Vec<usize> = it.map(|t| t.parse::<usize>().map_err(|_| parse_error(loc.clone(), "bad face"))).collect::<Result<_>>()?;
                if c.len() != 3 || c.iter().any(|&k| k == 0 || k > verts.len()) {
                    return Err(parse_error(loc, "face needs 3 valid vertex indices"));
                }
                faces.push([c[0] - 1, c[1] - 1, c[2] - 1]);
            }
            _ => {}
        }
    }
    Ok((verts, faces))
}

/// Rounds every float to 12 decimals (and `-0` to `0`) so that reports are
/// byte-stable.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64");
            let r = (x * 1e12).round() / 1e12;
            let r = if r == 0.0 { 0.0 } else { r };
            if r.is_finite() {
                json!(r)
            } else {
                Value::Number(n)
            }
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect::<Map<String, Value>>()),
        v => v,
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Resolved settings of one run, echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub source: String,
    pub mode: Mode,
    pub symmetric_range: bool,
    pub out: PathBuf,
    pub sampler: SamplerConfig,
    pub boundary: BoundaryConfig,
}

impl Common {
    pub fn instance(&self) -> Result<InstanceSpec> {
        load_instance(self.demo.as_deref(), self.file.as_deref())
    }

    pub fn run_config(&self, inst: &InstanceSpec) -> Result<RunConfig> {
        let sampler = SamplerConfig { n_dirs: self.dirs, n_grid_a: self.grid, n_grid_b: self.grid, seed: self.seed, ..SamplerConfig::default() };
        sampler.validate()?;
        let boundary = BoundaryConfig { eps_slab: self.eps_slab, eps_member: self.eps_member, n_probes: self.probes, ..BoundaryConfig::default() };
        boundary.validate()?;
        let symmetric_range = match self.mode {
            Mode::Auto => inst.symmetric,
            Mode::General => false,
            Mode::Symmetric => true,
        };
        let source = match (&self.demo, &self.file) {
            (Some(n), _) => format!("demo:{n}"),
            (_, Some(p)) => format!("file:{}", p.display()),
            _ => String::new(),
        };
        Ok(RunConfig { source, mode: self.mode, symmetric_range, out: self.out.clone(), sampler, boundary })
    }
}

fn envelope(command: &str, inst: &InstanceSpec, cfg: &RunConfig, result: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "tool": "numrange",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "instance": {
            "name": inst.name,
            "hash": instance_hash(&inst.triple),
            "notes": inst.notes,
            "warnings": inst.warnings,
        },
        "config": to_value(cfg),
        "result": result,
    })
}

fn write_report(path: &Path, report: Value) -> Result<()> {
    let text = serde_json::to_string_pretty(&round_json(report)).expect("json");
    fs::write(path, text + "\n").map_err(|e| Error::from(e).context(path.display().to_string()))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::from(e).context(dir.display().to_string()))
}

fn sample_main(inst: &InstanceSpec, cfg: &RunConfig) -> Result<PointCloud3> {
    if cfg.symmetric_range {
        sample_pi_plus(&inst.triple, &cfg.sampler)
    } else {
        sample_pi(&inst.triple, &cfg.sampler)
    }
}

fn warn(msgs: &[String]) {
    for m in msgs {
        eprintln!("warning: {m}");
    }
}

/// Writes the clouds; returns the written paths.
pub fn cmd_sample(common: &Common) -> Result<Vec<PathBuf>> {
    let inst = common.instance()?;
    let cfg = common.run_config(&inst)?;
    warn(&inst.warnings);
    ensure_dir(&cfg.out)?;
    let mut written = Vec::new();
    let pi = sample_pi(&inst.triple, &cfg.sampler)?;
    let p = cfg.out.join(format!("{}_pi.csv", inst.name));
    write_cloud_csv(&p, &pi)?;
    written.push(p);
    if let Ok(plus) = sample_pi_plus(&inst.triple, &cfg.sampler) {
        let p = cfg.out.join(format!("{}_pi_plus.csv", inst.name));
        write_cloud_csv(&p, &plus)?;
        written.push(p);
        let coeffs = [0, 1, 2].map(|i| symmetric_pauli(inst.triple.get(i)).expect("swap symmetric"));
        if let Ok(m) = m_matrices(&quadratic_map(&coeffs)) {
            let lr = sample_lambda_r(&m, &cfg.sampler)?;
            let p = cfg.out.join(format!("{}_lambda_r.csv", inst.name));
            write_cloud_csv(&p, &lr)?;
            written.push(p);
        }
    } else if cfg.symmetric_range {
        sample_pi_plus(&inst.triple, &cfg.sampler)?;
    }
    Ok(written)
}

#[derive(Debug, Clone, Serialize)]
pub struct HullStats {
    pub points: usize,
    pub vertices: usize,
    pub triangles: usize,
    pub facets: usize,
    /// The ten largest facet areas.
    pub largest_facet_areas: Vec<f64>,
    pub diameter: f64,
    pub affine_rank: usize,
    /// Support values in the coordinate directions ±x, ±y, ±z.
    pub support: [f64; 6],
    pub warnings: Vec<String>,
}

pub fn hull_stats(hull: &ConvexPolytope3, points: usize) -> HullStats {
    let mut areas: Vec<f64> = hull.facets.iter().map(|f| f.area).collect();
    areas.sort_by(|a, b| b.total_cmp(a));
    areas.truncate(10);
    let dirs = [Vec3::x(), -Vec3::x(), Vec3::y(), -Vec3::y(), Vec3::z(), -Vec3::z()];
    let mut warnings = Vec::new();
    if hull.affine_rank < 3 {
        warnings.push(format!("hull has affine rank {}: the range is flat", hull.affine_rank));
    }
    HullStats {
        points,
        vertices: hull.vertices.len(),
        triangles: hull.triangles.len(),
        facets: hull.facets.len(),
        largest_facet_areas: areas,
        diameter: hull.diameter,
        affine_rank: hull.affine_rank,
        support: dirs.map(|d| hull.support_value(&d)),
        warnings,
    }
}

pub fn cmd_hull(args: &HullArgs) -> Result<HullStats> {
    let common = &args.common;
    ensure_dir(&common.out)?;
    let (inst, cfg, cloud, stem) = match &args.cloud {
        Some(path) => {
            let cloud = read_cloud_csv(path)?;
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("cloud").to_string();
            let inst = match common.instance() {
                Ok(i) => Some(i),
                Err(_) if common.demo.is_none() && common.file.is_none() => None,
                Err(e) => return Err(e),
            };
            let cfg = match &inst {
                Some(i) => Some(common.run_config(i)?),
                None => None,
            };
            (inst, cfg, cloud, stem)
        }
        None => {
            let inst = common.instance()?;
            let cfg = common.run_config(&inst)?;
            let cloud = sample_main(&inst, &cfg)?;
            let stem = format!("{}_{}", inst.name, cloud.tag.name());
            (Some(inst), Some(cfg), cloud, stem)
        }
    };
    let hull = convex_hull(&cloud)?;
    let stats = hull_stats(&hull, cloud.len());
    warn(&stats.warnings);
    write_obj(&common.out.join(format!("{stem}_hull.obj")), &hull)?;
    let result = to_value(&stats);
    let report = match (&inst, &cfg) {
        (Some(i), Some(c)) => envelope("hull", i, c, result),
        _ => json!({
            "schema_version": SCHEMA_VERSION,
            "tool": "numrange",
            "version": env!("CARGO_PKG_VERSION"),
            "command": "hull",
            "cloud": args.cloud.as_ref().map(|p| p.display().to_string()),
            "result": result,
        }),
    };
    write_report(&common.out.join(format!("{stem}_hull.json")), report)?;
    Ok(stats)
}

fn classify_summary(r: &ClassifyReport) -> Value {
    let count = |c: FeatureClass| r.segments().filter(|f| f.class == c).count();
    let patches = |c: FeatureClass| r.patches_of(c).iter().filter(|p| !p.seam_line).count();
    let faces: Vec<Value> = r
        .features
        .iter()
        .filter_map(|f| match &f.kind {
            FeatureKind::PlanarFace { normal, polygon } => Some(json!({"normal": normal, "vertices": polygon.len(), "class": f.class})),
            _ => None,
        })
        .collect();
    let seams: Vec<Value> = r
        .seam_segments()
        .iter()
        .map(|f| {
            let (a, b) = f.endpoints().expect("segment");
            json!({"p_a": a, "p_b": b, "direction": f.direction, "max_probe_distance": f.max_probe_distance()})
        })
        .collect();
    json!({
        "segments": {
            "gapless": count(FeatureClass::Gapless),
            "symmetry_breaking": count(FeatureClass::SymmetryBreaking),
            "unclassified": count(FeatureClass::Unclassified),
        },
        "ruled_patches": {
            "gapless": patches(FeatureClass::Gapless),
            "symmetry_breaking": patches(FeatureClass::SymmetryBreaking),
            "unclassified": patches(FeatureClass::Unclassified),
        },
        "seam_segments": seams,
        "planar_faces": faces,
    })
}

pub fn cmd_classify(common: &Common) -> Result<ClassifyReport> {
    let inst = common.instance()?;
    let cfg = common.run_config(&inst)?;
    warn(&inst.warnings);
    ensure_dir(&cfg.out)?;
    let c = Classifier::new(&inst.triple, cfg.symmetric_range, &cfg.sampler, &cfg.boundary)?;
    let r = c.classify()?;
    let result = json!({"summary": classify_summary(&r), "detail": to_value(&r)});
    write_report(&cfg.out.join(format!("{}_classify.json", inst.name)), envelope("classify", &inst, &cfg, result))?;
    Ok(r)
}

fn parse_vec3(s: &str, what: &str) -> Result<Vec3> {
    let c: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| parse_error(what, format!("expected x,y,z, got {s:?}"))))
        .collect::<Result<_>>()?;
    if c.len() != 3 || !c.iter().all(|v| v.is_finite()) {
        return Err(parse_error(what, format!("expected three finite numbers, got {s:?}")));
    }
    let v = Vec3::new(c[0], c[1], c[2]);
    v.try_normalize(1e-300).ok_or_else(|| parse_error(what, "zero direction"))
}

/// The path of a phase run and whether it closes on itself.
pub fn phase_path(args: &PhaseArgs) -> Result<(Vec<Vec3>, bool, Value)> {
    if let Some(path) = &args.path {
        let cloud = read_cloud_csv(path)?;
        if cloud.is_empty() {
            return Err(parse_error(path.display().to_string(), "path has no rows"));
        }
        let mut dirs = Vec::with_capacity(cloud.len());
        for (i, p) in cloud.points.iter().enumerate() {
            let d = p.try_normalize(1e-300).ok_or_else(|| parse_error(format!("{}:{}", path.display(), i + 2), "zero direction"))?;
            dirs.push(d);
        }
        return Ok((dirs, false, json!({"file": path.display().to_string()})));
    }
    let from = args.from.as_deref().map(|s| parse_vec3(s, "--from")).transpose()?.unwrap_or_else(|| Vec3::new(0.0, 1.0, 1.0).normalize());
    let to = args.to.as_deref().map(|s| parse_vec3(s, "--to")).transpose()?.unwrap_or_else(Vec3::x);
    let dirs = great_circle(&from, &to, args.steps).map_err(|e| parse_error("path", e.to_string()))?;
    Ok((dirs, true, json!({"great_circle": {"from": from, "to": to, "steps": args.steps}})))
}

pub fn cmd_phase(args: &PhaseArgs) -> Result<crate::boundary::PhaseReport> {
    let common = &args.common;
    let (path, closed, spec) = phase_path(args)?;
    let inst = common.instance()?;
    let cfg = common.run_config(&inst)?;
    warn(&inst.warnings);
    ensure_dir(&cfg.out)?;
    let c = Classifier::new(&inst.triple, cfg.symmetric_range, &cfg.sampler, &cfg.boundary)?;
    let r = c.phase_scan(&path, closed)?;
    let result = json!({"path": spec, "closed": closed, "transitions": r.transitions.len(), "scan": to_value(&r)});
    write_report(&cfg.out.join(format!("{}_phase.json", inst.name)), envelope("phase", &inst, &cfg, result))?;
    Ok(r)
}

fn max_oracle_deviation(oracle: Oracle, cloud: &PointCloud3) -> Option<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..cloud.len() {
        let p = cloud.params_of(i)?;
        worst = worst.max((oracle_at(oracle, &p) - cloud.points[i]).norm());
    }
    Some(worst)
}

pub fn cmd_report(args: &ReportArgs) -> Result<Value> {
    let common = &args.common;
    let inst = common.instance()?;
    let cfg = common.run_config(&inst)?;
    warn(&inst.warnings);
    ensure_dir(&cfg.out)?;
    let tr = &inst.triple;
    let sym: Option<[crate::qops::SymmetricPauliCoeffs; 3]> =
        (0..3).map(|i| symmetric_pauli(tr.get(i)).ok()).collect::<Option<Vec<_>>>().map(|v| [v[0], v[1], v[2]]);
    let quad = sym.map(|c| quadratic_map(&c));
    let homogeneous = quad.as_ref().map(is_homogeneous);
    let m = quad.as_ref().and_then(|q| m_matrices(q).ok()).map(|m| m.map(|x| [[x[(0, 0)], x[(0, 1)], x[(0, 2)]], [x[(1, 0)], x[(1, 1)], x[(1, 2)]], [x[(2, 0)], x[(2, 1)], x[(2, 2)]]]));
    let cloud = match &args.cloud {
        Some(p) => read_cloud_csv(p)?,
        None => sample_main(&inst, &cfg)?,
    };
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let (lo, hi) = bounding_box(&cloud.points);
    let mut checks = Map::new();
    if let Some(o) = inst.oracle {
        if let Some(d) = max_oracle_deviation(o, &cloud) {
            checks.insert("max_closed_form_deviation".into(), json!(d));
        }
        if o == Oracle::Cone {
            let dev = cloud.points.iter().map(|p| (p.x * p.x + p.y * p.y - (1.0 - p.z).powi(2)).abs()).fold(0.0, f64::max);
            let zmin = cloud.points.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
            let zmax = cloud.points.iter().map(|p| p.z).fold(f64::NEG_INFINITY, f64::max);
            checks.insert("cone_identity_max_violation".into(), json!(dev));
            checks.insert("cone_identity_holds".into(), json!(dev <= 1e-9 && zmin >= -1e-10 && zmax <= 1.0 + 1e-10));
            checks.insert("z_range".into(), json!([zmin, zmax]));
        }
    }
    let result = json!({
        "dim": tr.dim(),
        "block_diagonal": is_block_diagonal(tr),
        "swap_symmetric": sym.is_some(),
        "symmetric_coefficients": sym.map(|s| to_value(&s)),
        "homogeneous": homogeneous,
        "m_matrices": m,
        "cloud": {
            "kind": cloud.tag.name(),
            "rows": cloud.len(),
            "source": args.cloud.as_ref().map_or("sampled".to_string(), |p| p.display().to_string()),
            "bounding_box": [lo, hi],
        },
        "checks": checks,
    });
    let report = envelope("report", &inst, &cfg, result);
    write_report(&cfg.out.join(format!("{}_report.json", inst.name)), report.clone())?;
    Ok(round_json(report))
}

pub fn cmd_demo(args: &DemoArgs) -> Result<()> {
    let mut common = args.common.clone();
    common.demo = Some(args.name.clone());
    common.file = None;
    for p in cmd_sample(&common)? {
        println!("wrote {}", p.display());
    }
    let stats = cmd_hull(&HullArgs { common: common.clone(), cloud: None })?;
    println!("hull: {} vertices, rank {}, diameter {:.6}", stats.vertices, stats.affine_rank, stats.diameter);
    let r = cmd_classify(&common)?;
    print_classify(&r);
    let p = cmd_phase(&PhaseArgs { common, from: None, to: None, steps: 360, path: None })?;
    println!("phase: {} transitions, max E0 disagreement {:.3e}", p.transitions.len(), p.max_disagreement);
    Ok(())
}

fn print_classify(r: &ClassifyReport) {
    let s = classify_summary(r);
    println!("segments: {}", s["segments"]);
    println!("ruled patches: {}", s["ruled_patches"]);
    for seam in s["seam_segments"].as_array().into_iter().flatten() {
        println!("seam: {} - {}", seam["p_a"], seam["p_b"]);
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Sample(c) => {
            for p in cmd_sample(c)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Hull(h) => {
            let s = cmd_hull(h)?;
            println!("hull: {} vertices, {} facets, rank {}, diameter {:.6}", s.vertices, s.facets, s.affine_rank, s.diameter);
        }
        Command::Classify(c) => print_classify(&cmd_classify(c)?),
        Command::Phase(p) => {
            let r = cmd_phase(p)?;
            println!("phase: {} samples, {} transitions, max E0 disagreement {:.3e}", r.samples.len(), r.transitions.len(), r.max_disagreement);
        }
        Command::Demo(d) => cmd_demo(d)?,
        Command::Report(r) => {
            let v = cmd_report(r)?;
            println!("{}", serde_json::to_string_pretty(&v["result"]["checks"]).expect("json"));
        }
    }
    Ok(())
}
