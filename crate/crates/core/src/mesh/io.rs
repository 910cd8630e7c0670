//! Line-oriented ASCII mesh format.
//!
//! ```text
//! $Nodes
//! <N>
//! <id> <x> <y>
//! $Triangles
//! <M>
//! <id> <tag> <n1> <n2> <n3>
//! $BoundaryEdges
//! <B>
//! <id> <tag> <n1> <n2>
//! ```
//!
//! `#` starts a comment. Ids are 0-based and dense within each section.

use std::fmt::Write as _;

use nalgebra::Point2;

use super::{signed_area, BoundaryEdge, MeshData, MeshError, Triangle};

struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, Vec<&'a str>)> + 'a>>,
    last_line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, Vec<&'a str>)> + 'a> =
            Box::new(text.lines().enumerate().filter_map(|(i, raw)| {
                let body = raw.split('#').next().unwrap_or("");
                let toks: Vec<&str> = body.split_whitespace().collect();
                (!toks.is_empty()).then_some((i + 1, toks))
            }));
        Self {
            inner: it.peekable(),
            last_line: 0,
        }
    }

    fn next(&mut self) -> Result<(usize, Vec<&'a str>), MeshError> {
        match self.inner.next() {
            Some((line, toks)) => {
                self.last_line = line;
                Ok((line, toks))
            }
            None => Err(MeshError::Parse {
                line: self.last_line + 1,
                msg: "unexpected end of file".into(),
            }),
        }
    }

    fn header(&mut self, name: &str) -> Result<(), MeshError> {
        let (line, toks) = self.next()?;
        if toks != [name] {
            return Err(MeshError::Parse {
                line,
                msg: format!("expected section header {name}, found `{}`", toks.join(" ")),
            });
        }
        Ok(())
    }

    fn count(&mut self) -> Result<usize, MeshError> {
        let (line, toks) = self.next()?;
        match toks.as_slice() {
            [n] => parse(n, line),
            _ => Err(MeshError::Parse {
                line,
                msg: "expected a single count".into(),
            }),
        }
    }

    fn record(&mut self, len: usize) -> Result<(usize, Vec<&'a str>), MeshError> {
        let (line, toks) = self.next()?;
        if toks.len() != len {
            return Err(MeshError::Parse {
                line,
                msg: format!("expected {len} fields, found {}", toks.len()),
            });
        }
        Ok((line, toks))
    }
}

fn parse<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T, MeshError> {
    tok.parse().map_err(|_| MeshError::Parse {
        line,
        msg: format!("cannot parse `{tok}`"),
    })
}

fn dense_slot<T: Clone>(
    slots: &mut [Option<T>],
    id: usize,
    value: T,
    line: usize,
) -> Result<(), MeshError> {
    match slots.get_mut(id) {
        Some(slot @ None) => {
            *slot = Some(value);
            Ok(())
        }
        Some(Some(_)) => Err(MeshError::Parse {
            line,
            msg: format!("duplicate id {id}"),
        }),
        None => Err(MeshError::Parse {
            line,
            msg: format!("id {id} out of range 0..{}", slots.len()),
        }),
    }
}

fn check_node(n: usize, n_nodes: usize, line: usize) -> Result<usize, MeshError> {
    if n < n_nodes {
        Ok(n)
    } else {
        Err(MeshError::Parse {
            line,
            msg: format!("node index {n} out of range 0..{n_nodes}"),
        })
    }
}

/// Parses a mesh. Clockwise triangles are reoriented with a warning.
pub fn read_mesh(text: &str) -> Result<MeshData, MeshError> {
    let mut lines = Lines::new(text);

    lines.header("$Nodes")?;
    let n = lines.count()?;
    let mut nodes = vec![None; n];
    for _ in 0..n {
        let (line, t) = lines.record(3)?;
        let p = Point2::new(parse::<f64>(t[1], line)?, parse::<f64>(t[2], line)?);
        if !(p.x.is_finite() && p.y.is_finite()) {
            return Err(MeshError::Parse {
                line,
                msg: "non-finite coordinate".into(),
            });
        }
        dense_slot(&mut nodes, parse(t[0], line)?, p, line)?;
    }
    let nodes: Vec<Point2<f64>> = nodes.into_iter().flatten().collect();

    lines.header("$Triangles")?;
    let m = lines.count()?;
    let mut triangles = vec![None; m];
    for _ in 0..m {
        let (line, t) = lines.record(5)?;
        let id: usize = parse(t[0], line)?;
        let region: u32 = parse(t[1], line)?;
        let mut tri = [0usize; 3];
        for k in 0..3 {
            tri[k] = check_node(parse(t[2 + k], line)?, n, line)?;
        }
        if signed_area(&nodes[tri[0]], &nodes[tri[1]], &nodes[tri[2]]) < 0.0 {
            log::warn!("line {line}: triangle {id} is clockwise, reordering its nodes");
            tri.swap(1, 2);
        }
        dense_slot(&mut triangles, id, Triangle { nodes: tri, region }, line)?;
    }

    lines.header("$BoundaryEdges")?;
    let b = lines.count()?;
    let mut edges = vec![None; b];
    for _ in 0..b {
        let (line, t) = lines.record(4)?;
        let id: usize = parse(t[0], line)?;
        let tag: u32 = parse(t[1], line)?;
        let e = [
            check_node(parse(t[2], line)?, n, line)?,
            check_node(parse(t[3], line)?, n, line)?,
        ];
        dense_slot(&mut edges, id, BoundaryEdge { nodes: e, tag }, line)?;
    }
    if let Some((line, toks)) = lines.inner.next() {
        return Err(MeshError::Parse {
            line,
            msg: format!("trailing content `{}`", toks.join(" ")),
        });
    }

    Ok(MeshData {
        nodes,
        triangles: triangles.into_iter().flatten().collect(),
        boundary_edges: edges.into_iter().flatten().collect(),
    })
}

pub fn write_mesh(data: &MeshData) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "$Nodes\n{}", data.nodes.len());
    for (i, p) in data.nodes.iter().enumerate() {
        let _ = writeln!(out, "{i} {} {}", p.x, p.y);
    }
    let _ = writeln!(out, "$Triangles\n{}", data.triangles.len());
    for (i, t) in data.triangles.iter().enumerate() {
        let [a, b, c] = t.nodes;
        let _ = writeln!(out, "{i} {} {a} {b} {c}", t.region);
    }
    let _ = writeln!(out, "$BoundaryEdges\n{}", data.boundary_edges.len());
    for (i, e) in data.boundary_edges.iter().enumerate() {
        let _ = writeln!(out, "{i} {} {} {}", e.tag, e.nodes[0], e.nodes[1]);
    }
    out
}
