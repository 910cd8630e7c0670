//! Plain-text scenario configuration.
//!
//! ```text
//! # comment
//! [mesh]
//! generate = rect            # or: file = specimen.mesh
//! width = 1
//! height = 2
//! nx = 25
//! ny = 50
//! crossed = true
//! region = 1 circle 0.75 1.0 0.1
//! crack = 0.40 0.90 0.2 33
//!
//! [material.0]
//! E = 10
//! nu = 0.45
//!
//! [cohesive]
//! law = sawtooth             # or: none
//! sigma_max = 1
//! u_c = 0.02
//!
//! [bc.top]
//! type = prescribed
//! ux = 0
//! uy = delta
//!
//! [schedule]
//! delta_max = 0.1
//! steps = 20
//!
//! [output]
//! dir = out
//! ```
//!
//! Every error carries the line it was found on.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use czdg_core::cohesive::{PureModeLaw, SecantVariant};
use czdg_core::mesh::{tags, CrackSegment, RectSpec, Region, Shape};
use czdg_core::solver::NonlinearSettings;
use nalgebra::Point2;
use thiserror::Error;

use crate::scenario::{
    Affine, BoundaryCondition, CohesiveSpec, Component, CrackMarking, CrackSpec, MaterialSpec, MeshSource,
    OutputSpec, Scenario, ScheduleSpec,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        line,
        message: message.into(),
    })
}

struct Entry {
    key: String,
    value: String,
    line: usize,
}

/// One `[section]` with its entries; keys are consumed as they are read so
/// that leftovers can be reported as unknown.
struct Table {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

impl Table {
    fn take_all(&mut self, key: &str) -> Vec<(String, usize)> {
        let (hit, rest): (Vec<_>, Vec<_>) = std::mem::take(&mut self.entries).into_iter().partition(|e| e.key == key);
        self.entries = rest;
        hit.into_iter().map(|e| (e.value, e.line)).collect()
    }

    fn take(&mut self, key: &str) -> Result<Option<(String, usize)>, ConfigError> {
        let mut all = self.take_all(key);
        if all.len() > 1 {
            return err(all[1].1, format!("duplicate key '{key}' in [{}]", self.name));
        }
        Ok(all.pop())
    }

    fn require(&mut self, key: &str) -> Result<(String, usize), ConfigError> {
        match self.take(key)? {
            Some(v) => Ok(v),
            None => err(self.line, format!("missing required key '{key}' in [{}]", self.name)),
        }
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.take(key)? {
            None => Ok(None),
            Some((v, line)) => value(&v, line, key).map(Some),
        }
    }

    fn parse_required<T: FromStr>(&mut self, key: &str) -> Result<T, ConfigError> {
        let (v, line) = self.require(key)?;
        value(&v, line, key)
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.first() {
            Some(e) => err(e.line, format!("unknown key '{}' in [{}]", e.key, self.name)),
            None => Ok(()),
        }
    }
}

fn value<T: FromStr>(v: &str, line: usize, key: &str) -> Result<T, ConfigError> {
    v.parse()
        .or_else(|_| err(line, format!("'{key}': cannot read '{v}' as {}", type_name::<T>())))
}

fn type_name<T>() -> &'static str {
    let full = std::any::type_name::<T>();
    match full {
        "f64" => "a number",
        "usize" | "u32" => "a non-negative integer",
        "bool" => "true or false",
        _ => full,
    }
}

fn numbers(v: &str, line: usize, what: &str, n: usize) -> Result<Vec<f64>, ConfigError> {
    let out: Vec<f64> = v
        .split_whitespace()
        .map(|w| value::<f64>(w, line, what))
        .collect::<Result<_, _>>()?;
    if out.len() != n {
        return err(line, format!("'{what}' expects {n} numbers, got {}", out.len()));
    }
    Ok(out)
}

fn tokenize(text: &str) -> Result<Vec<Table>, ConfigError> {
    let mut tables: Vec<Table> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return err(line, format!("malformed section header '{content}'"));
            };
            let name = name.trim().to_string();
            if tables.iter().any(|t| t.name == name) {
                return err(line, format!("duplicate section [{name}]"));
            }
            tables.push(Table {
                name,
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((key, val)) = content.split_once('=') else {
            return err(line, format!("expected 'key = value', got '{content}'"));
        };
        let Some(table) = tables.last_mut() else {
            return err(line, "entry before the first section");
        };
        table.entries.push(Entry {
            key: key.trim().to_string(),
            value: val.trim().to_string(),
            line,
        });
    }
    Ok(tables)
}

/// Boundary tag from a number or, for generated rectangles, an edge name.
fn boundary_tag(s: &str, line: usize) -> Result<u32, ConfigError> {
    tags::from_name(s)
        .or_else(|| s.parse().ok())
        .map_or_else(|| err(line, format!("'{s}' is not a boundary tag")), Ok)
}

fn affine(s: &str, line: usize, key: &str) -> Result<Affine, ConfigError> {
    let bad = || err(line, format!("'{key}': expected a number, 'delta', 'k*delta' or 'c + k*delta', got '{s}'"));
    let term = |t: &str| -> Option<Affine> {
        let t = t.trim();
        if t == "delta" {
            return Some(Affine::delta(1.0));
        }
        if let Some(k) = t.strip_suffix("*delta") {
            return k.trim().parse().ok().map(Affine::delta);
        }
        t.parse().ok().map(Affine::constant)
    };
    // "c + k*delta" with an optional sign on the second term
    let split = s
        .char_indices()
        .skip(1)
        .find(|&(i, c)| (c == '+' || c == '-') && !matches!(s.as_bytes()[i - 1], b'e' | b'E'));
    let parsed = match split {
        Some((i, c)) => {
            let (a, b) = (term(&s[..i]), term(&s[i + 1..]));
            match (a, b) {
                (Some(a), Some(b)) if a.per_delta == 0.0 && b.constant == 0.0 => Some(Affine {
                    constant: a.constant,
                    per_delta: if c == '-' { -b.per_delta } else { b.per_delta },
                }),
                _ => None,
            }
        }
        None => term(s),
    };
    parsed.map_or_else(bad, Ok)
}

fn component(s: &str, line: usize, key: &str) -> Result<Component, ConfigError> {
    if s == "free" {
        Ok(Component::Free)
    } else {
        affine(s, line, key).map(Component::Value)
    }
}

fn parse_mesh(t: &mut Table) -> Result<(MeshSource, Option<CrackSpec>), ConfigError> {
    let file = t.take("file")?;
    let generate = t.take("generate")?;
    let source = match (file, generate) {
        (Some(_), Some((_, line))) => return err(line, "[mesh] takes either 'file' or 'generate', not both"),
        (None, None) => return err(t.line, "missing required key 'file' or 'generate' in [mesh]"),
        (Some((path, _)), None) => MeshSource::File(PathBuf::from(path)),
        (None, Some((kind, line))) => {
            if kind != "rect" {
                return err(line, format!("unknown mesh generator '{kind}'"));
            }
            let rect = RectSpec {
                width: t.parse_required("width")?,
                height: t.parse_required("height")?,
                nx: t.parse_required("nx")?,
                ny: t.parse_required("ny")?,
                crossed: t.parse("crossed")?.unwrap_or(false),
            };
            let mut regions = Vec::new();
            for (v, line) in t.take_all("region") {
                let words: Vec<&str> = v.split_whitespace().collect();
                if words.len() < 2 {
                    return err(line, "'region' expects '<tag> circle cx cy r' or '<tag> rect x0 y0 x1 y1'");
                }
                let tag: u32 = value(words[0], line, "region")?;
                let rest = words[2..].join(" ");
                let shape = match words[1] {
                    "circle" => {
                        let n = numbers(&rest, line, "region", 3)?;
                        Shape::Circle {
                            center: Point2::new(n[0], n[1]),
                            radius: n[2],
                        }
                    }
                    "rect" => {
                        let n = numbers(&rest, line, "region", 4)?;
                        Shape::Rect {
                            min: Point2::new(n[0], n[1]),
                            max: Point2::new(n[2], n[3]),
                        }
                    }
                    other => return err(line, format!("unknown region shape '{other}'")),
                };
                regions.push(Region { shape, tag });
            }
            MeshSource::Generated { rect, regions }
        }
    };
    let marking = match t.take("crack_marking")? {
        None => None,
        Some((v, line)) => Some(if v == "path" {
            CrackMarking::Path
        } else {
            CrackMarking::Tolerance(value(&v, line, "crack_marking")?)
        }),
    };
    let crack = match t.take("crack")? {
        None => {
            if marking.is_some() {
                return err(t.line, "'crack_marking' without 'crack'");
            }
            None
        }
        Some((v, line)) => {
            let n = numbers(&v, line, "crack", 4)?;
            Some(CrackSpec {
                segment: CrackSegment {
                    center: Point2::new(n[0], n[1]),
                    length: n[2],
                    angle_deg: n[3],
                },
                marking: marking.unwrap_or(CrackMarking::Path),
            })
        }
    };
    Ok((source, crack))
}

fn parse_cohesive(t: &mut Table) -> Result<(CohesiveSpec, f64), ConfigError> {
    let gamma0 = t.parse("gamma0")?.unwrap_or(10.0);
    let law = t.take("law")?;
    let explicit_none = matches!(&law, Some((l, _)) if l == "none");
    if let Some((l, line)) = &law {
        if l != "none" && l != "sawtooth" {
            return err(*line, format!("unknown cohesive law '{l}'"));
        }
    }
    if explicit_none {
        return Ok((CohesiveSpec::None, gamma0));
    }
    let pair = |t: &mut Table, both: &str, n: &str, tt: &str| -> Result<(f64, f64), ConfigError> {
        let common: Option<f64> = t.parse(both)?;
        let a: Option<f64> = t.parse(n)?;
        let b: Option<f64> = t.parse(tt)?;
        match (a.or(common), b.or(common)) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => err(t.line, format!("missing required key '{both}' (or '{n}' and '{tt}') in [cohesive]")),
        }
    };
    let (sn, st) = pair(t, "sigma_max", "sigma_max_n", "sigma_max_t")?;
    // an unbounded strength keeps every interface bonded
    if sn == f64::INFINITY && st == f64::INFINITY {
        for key in ["u_c", "u_nc", "u_tc", "secant"] {
            t.take_all(key);
        }
        return Ok((CohesiveSpec::None, gamma0));
    }
    let (un, ut) = pair(t, "u_c", "u_nc", "u_tc")?;
    let law_at = |s: f64, u: f64| {
        PureModeLaw::new(s, u).or_else(|e| err(t.line, format!("invalid cohesive law: {e}")))
    };
    let normal = law_at(sn, un)?;
    let tangential = law_at(st, ut)?;
    let variant = match t.take("secant")? {
        None => SecantVariant::default(),
        Some((v, line)) => match v.as_str() {
            "diagonal" => SecantVariant::Diagonal,
            "cross" => SecantVariant::CrossTerms,
            _ => return err(line, format!("'secant': expected 'diagonal' or 'cross', got '{v}'")),
        },
    };
    Ok((
        CohesiveSpec::Sawtooth {
            normal,
            tangential,
            variant,
        },
        gamma0,
    ))
}

fn parse_bc(t: &mut Table) -> Result<BoundaryCondition, ConfigError> {
    let (kind, line) = t.require("type")?;
    Ok(match kind.as_str() {
        "clamped" => BoundaryCondition::Clamped,
        "free" => BoundaryCondition::Free,
        "prescribed" => {
            let mut get = |key: &str| -> Result<Component, ConfigError> {
                match t.take(key)? {
                    None => Ok(Component::Free),
                    Some((v, line)) => component(&v, line, key),
                }
            };
            BoundaryCondition::Prescribed {
                ux: get("ux")?,
                uy: get("uy")?,
            }
        }
        "traction" => {
            let mut get = |key: &str| -> Result<Affine, ConfigError> {
                match t.take(key)? {
                    None => Ok(Affine::ZERO),
                    Some((v, line)) => affine(&v, line, key),
                }
            };
            BoundaryCondition::Traction {
                tx: get("tx")?,
                ty: get("ty")?,
            }
        }
        other => {
            return err(
                line,
                format!("unknown boundary condition '{other}' (clamped, prescribed, traction or free)"),
            )
        }
    })
}

fn parse_schedule(t: &mut Table) -> Result<(ScheduleSpec, NonlinearSettings), ConfigError> {
    let list = t.take("deltas")?;
    let max = t.take("delta_max")?;
    let schedule = match (list, max) {
        (Some(_), Some((_, line))) => return err(line, "give either 'deltas' or 'delta_max' with 'steps'"),
        (Some((v, line)), None) => {
            let vals = if v.is_empty() {
                Vec::new()
            } else {
                v.split(',')
                    .map(|w| value::<f64>(w.trim(), line, "deltas"))
                    .collect::<Result<_, _>>()?
            };
            if vals.windows(2).any(|w| w[1] < w[0]) {
                return err(line, "'deltas' must be nondecreasing");
            }
            ScheduleSpec::List(vals)
        }
        (None, Some((v, line))) => ScheduleSpec::Uniform {
            delta_max: value(&v, line, "delta_max")?,
            steps: t.parse_required("steps")?,
        },
        (None, None) => return err(t.line, "missing required key 'deltas' or 'delta_max' in [schedule]"),
    };
    let d = NonlinearSettings::default();
    let settings = NonlinearSettings {
        tol_rel: t.parse("tol_rel")?.unwrap_or(d.tol_rel),
        max_iter: t.parse("max_iter")?.unwrap_or(d.max_iter),
        relaxation: t.parse("relaxation")?.unwrap_or(d.relaxation),
        max_bisections: t.parse("max_bisections")?.unwrap_or(d.max_bisections),
        initiation_seed: t.parse("initiation_seed")?.unwrap_or(d.initiation_seed),
    };
    settings.validate().or_else(|e| err(t.line, e.to_string()))?;
    Ok((schedule, settings))
}

fn parse_output(t: &mut Table) -> Result<OutputSpec, ConfigError> {
    let d = OutputSpec::default();
    Ok(OutputSpec {
        dir: t.take("dir")?.map(|(v, _)| PathBuf::from(v)),
        vtk_every: t.parse("vtk_every")?.unwrap_or(d.vtk_every),
        reaction: match t.take("reaction")? {
            None => None,
            Some((v, line)) => Some(boundary_tag(&v, line)?),
        },
    })
}

/// Parses and validates a scenario.
///
/// Boundary tags of generated meshes are checked here; those of mesh files
/// are checked when the scenario is built.
pub fn parse_config(text: &str) -> Result<Scenario, ConfigError> {
    let eof = text.lines().count().max(1);
    let mut mesh = None;
    let mut materials = BTreeMap::new();
    let mut cohesive = None;
    let mut bcs = BTreeMap::new();
    let mut bc_lines = BTreeMap::new();
    let mut schedule = None;
    let mut output = None;
    for mut t in tokenize(text)? {
        let (head, tail) = match t.name.split_once('.') {
            Some((h, tl)) => (h.to_string(), Some(tl.to_string())),
            None => (t.name.clone(), None),
        };
        match (head.as_str(), tail) {
            ("mesh", None) => mesh = Some((parse_mesh(&mut t)?, t.line)),
            ("cohesive", None) => cohesive = Some(parse_cohesive(&mut t)?),
            ("schedule", None) => schedule = Some(parse_schedule(&mut t)?),
            ("output", None) => output = Some(parse_output(&mut t)?),
            ("material", Some(tag)) => {
                let tag: u32 = value(&tag, t.line, "material tag")?;
                let spec = MaterialSpec {
                    e: t.parse_required("E")?,
                    nu: t.parse_required("nu")?,
                };
                if materials.insert(tag, spec).is_some() {
                    return err(t.line, format!("material {tag} given twice"));
                }
            }
            ("bc", Some(tag)) => {
                let tag = boundary_tag(&tag, t.line)?;
                let bc = parse_bc(&mut t)?;
                if bcs.insert(tag, bc).is_some() {
                    return err(t.line, format!("boundary tag {tag} bound twice"));
                }
                bc_lines.insert(tag, t.line);
            }
            _ => return err(t.line, format!("unknown section [{}]", t.name)),
        }
        t.finish()?;
    }
    let Some(((source, crack), mesh_line)) = mesh else {
        return err(eof, "missing section [mesh]");
    };
    let Some((schedule, settings)) = schedule else {
        return err(eof, "missing section [schedule]");
    };
    if materials.is_empty() {
        return err(eof, "missing section [material.<tag>]");
    }
    if let MeshSource::Generated { regions, .. } = &source {
        let boundary = BTreeSet::from([tags::BOTTOM, tags::RIGHT, tags::TOP, tags::LEFT]);
        if let Some(t) = boundary.iter().find(|t| !bcs.contains_key(t)) {
            return err(
                mesh_line,
                format!("boundary tag {t} ({}) has no [bc] section", tags::name(*t).unwrap_or("?")),
            );
        }
        if let Some((t, line)) = bc_lines.iter().find(|(t, _)| !boundary.contains(t)) {
            return err(*line, format!("boundary tag {t} does not exist on a generated rectangle"));
        }
        let used: BTreeSet<u32> = regions.iter().map(|r| r.tag).chain([0]).collect();
        if let Some(t) = used.iter().find(|t| !materials.contains_key(t)) {
            return err(mesh_line, format!("region {t} has no [material.{t}] section"));
        }
    }
    let (cohesive, gamma0) = cohesive.unwrap_or((CohesiveSpec::None, 10.0));
    if !(gamma0 > 0.0 && f64::is_finite(gamma0)) {
        return err(eof, format!("gamma0 = {gamma0} must be positive"));
    }
    Ok(Scenario {
        mesh: source,
        crack,
        materials,
        cohesive,
        gamma0,
        bcs,
        schedule,
        settings,
        output: output.unwrap_or_default(),
    })
}

fn tag_name(tag: u32, generated: bool) -> String {
    match tags::name(tag) {
        Some(n) if generated => n.to_string(),
        _ => tag.to_string(),
    }
}

fn print_affine(a: &Affine) -> String {
    match (a.constant, a.per_delta) {
        (c, 0.0) => format!("{c}"),
        (0.0, k) => format!("{k}*delta"),
        (c, k) => format!("{c} + {k}*delta"),
    }
}

fn print_component(c: &Component) -> String {
    match c {
        Component::Free => "free".into(),
        Component::Value(a) => print_affine(a),
    }
}

/// Writes a scenario back in configuration syntax; [`parse_config`] of the
/// result reproduces it.
pub fn print_config(s: &Scenario) -> String {
    let mut o = String::new();
    let generated = matches!(s.mesh, MeshSource::Generated { .. });
    o.push_str("[mesh]\n");
    match &s.mesh {
        MeshSource::File(p) => {
            let _ = writeln!(o, "file = {}", p.display());
        }
        MeshSource::Generated { rect, regions } => {
            let _ = writeln!(o, "generate = rect");
            let _ = writeln!(o, "width = {}\nheight = {}", rect.width, rect.height);
            let _ = writeln!(o, "nx = {}\nny = {}\ncrossed = {}", rect.nx, rect.ny, rect.crossed);
            for r in regions {
                match r.shape {
                    Shape::Circle { center, radius } => {
                        let _ = writeln!(o, "region = {} circle {} {} {}", r.tag, center.x, center.y, radius);
                    }
                    Shape::Rect { min, max } => {
                        let _ = writeln!(o, "region = {} rect {} {} {} {}", r.tag, min.x, min.y, max.x, max.y);
                    }
                }
            }
        }
    }
    if let Some(c) = &s.crack {
        let g = &c.segment;
        let _ = writeln!(o, "crack = {} {} {} {}", g.center.x, g.center.y, g.length, g.angle_deg);
        match c.marking {
            CrackMarking::Path => o.push_str("crack_marking = path\n"),
            CrackMarking::Tolerance(t) => {
                let _ = writeln!(o, "crack_marking = {t}");
            }
        }
    }
    for (tag, m) in &s.materials {
        let _ = writeln!(o, "\n[material.{tag}]\nE = {}\nnu = {}", m.e, m.nu);
    }
    o.push_str("\n[cohesive]\n");
    match s.cohesive {
        CohesiveSpec::None => o.push_str("law = none\n"),
        CohesiveSpec::Sawtooth {
            normal,
            tangential,
            variant,
        } => {
            o.push_str("law = sawtooth\n");
            let _ = writeln!(o, "sigma_max_n = {}\nsigma_max_t = {}", normal.sigma_max, tangential.sigma_max);
            let _ = writeln!(o, "u_nc = {}\nu_tc = {}", normal.u_c, tangential.u_c);
            let v = match variant {
                SecantVariant::Diagonal => "diagonal",
                SecantVariant::CrossTerms => "cross",
            };
            let _ = writeln!(o, "secant = {v}");
        }
    }
    let _ = writeln!(o, "gamma0 = {}", s.gamma0);
    for (&tag, bc) in &s.bcs {
        let _ = writeln!(o, "\n[bc.{}]", tag_name(tag, generated));
        match bc {
            BoundaryCondition::Clamped => o.push_str("type = clamped\n"),
            BoundaryCondition::Free => o.push_str("type = free\n"),
            BoundaryCondition::Prescribed { ux, uy } => {
                let _ = writeln!(
                    o,
                    "type = prescribed\nux = {}\nuy = {}",
                    print_component(ux),
                    print_component(uy)
                );
            }
            BoundaryCondition::Traction { tx, ty } => {
                let _ = writeln!(o, "type = traction\ntx = {}\nty = {}", print_affine(tx), print_affine(ty));
            }
        }
    }
    o.push_str("\n[schedule]\n");
    match &s.schedule {
        ScheduleSpec::Uniform { delta_max, steps } => {
            let _ = writeln!(o, "delta_max = {delta_max}\nsteps = {steps}");
        }
        ScheduleSpec::List(v) => {
            let list: Vec<String> = v.iter().map(|d| d.to_string()).collect();
            let _ = writeln!(o, "deltas = {}", list.join(", "));
        }
    }
    let n = &s.settings;
    let _ = writeln!(
        o,
        "tol_rel = {}\nmax_iter = {}\nrelaxation = {}\nmax_bisections = {}\ninitiation_seed = {}",
        n.tol_rel, n.max_iter, n.relaxation, n.max_bisections, n.initiation_seed
    );
    o.push_str("\n[output]\n");
    if let Some(d) = &s.output.dir {
        let _ = writeln!(o, "dir = {}", d.display());
    }
    let _ = writeln!(o, "vtk_every = {}", s.output.vtk_every);
    if let Some(r) = s.output.reaction {
        let _ = writeln!(o, "reaction = {}", tag_name(r, generated));
    }
    o
}
