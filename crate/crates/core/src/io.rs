//! Text formats: edge lists and community files.
//!
//! Edge lists hold one edge per line, `u v [multiplicity]`, with `#`
//! comments. Unipartite ids are arbitrary tokens unless a `%unipartite n`
//! header fixes them to `0..n`. Bipartite files either prefix every id with
//! `u:` or `v:`, or start with `%bipartite nu nv` and number side `V` from
//! `nu`. Community files hold one community per line, using the same tokens.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;

use crate::community::CommunityRef;
use crate::graph::{GraphBuilder, GraphError, GraphMode, Side, SparseGraph};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: negative multiplicity {value}")]
    NegativeMultiplicity { line: usize, value: i64 },
    #[error("line {line}: real-valued weight {value:?} (only integer multiplicities are supported)")]
    RealWeight { line: usize, value: String },
    #[error("line {line}: bipartite edge joins two nodes on the same side")]
    SameSideEdge { line: usize },
    #[error("line {line}: {source}")]
    Graph {
        line: usize,
        #[source]
        source: GraphError,
    },
}

fn malformed(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Malformed {
        line,
        message: message.into(),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, FormatError> {
    File::open(path).map(BufReader::new).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads an edge list from disk.
pub fn load_edge_list(path: impl AsRef<Path>, mode: GraphMode) -> Result<SparseGraph, FormatError> {
    parse_edge_list(open(path.as_ref())?, mode)
}

#[derive(Debug, Clone, Copy)]
enum Header {
    Unipartite(usize),
    Bipartite(usize, usize),
}

struct RawEdge<'a> {
    line: usize,
    u: Token<'a>,
    v: Token<'a>,
    multiplicity: u64,
}

#[derive(Clone, Copy)]
struct Token<'a> {
    side: Option<Side>,
    label: &'a str,
}

impl<'a> Token<'a> {
    fn parse(s: &'a str) -> Self {
        if let Some(rest) = s.strip_prefix("u:") {
            Token { side: Some(Side::U), label: rest }
        } else if let Some(rest) = s.strip_prefix("v:") {
            Token { side: Some(Side::V), label: rest }
        } else {
            Token { side: None, label: s }
        }
    }
}

fn parse_multiplicity(line: usize, s: &str) -> Result<u64, FormatError> {
    match s.parse::<i64>() {
        Ok(v) if v < 0 => Err(FormatError::NegativeMultiplicity { line, value: v }),
        Ok(v) => Ok(v as u64),
        Err(_) if s.parse::<f64>().is_ok() => Err(FormatError::RealWeight {
            line,
            value: s.to_string(),
        }),
        Err(_) => Err(malformed(line, format!("invalid multiplicity {s:?}"))),
    }
}

fn parse_header(line: usize, rest: &str) -> Result<Header, FormatError> {
    let fields: Vec<&str> = rest.split_whitespace().collect();
    let count = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| malformed(line, format!("invalid node count {s:?} in header")))
    };
    match fields.as_slice() {
        ["unipartite", n] => Ok(Header::Unipartite(count(n)?)),
        ["bipartite", nu, nv] => Ok(Header::Bipartite(count(nu)?, count(nv)?)),
        _ => Err(malformed(line, format!("unrecognized header %{rest}"))),
    }
}

/// Parses an edge list. See the module docs for the format.
pub fn parse_edge_list<R: BufRead>(reader: R, mode: GraphMode) -> Result<SparseGraph, FormatError> {
    let lines: Vec<String> = reader
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|source| FormatError::Io {
            path: "<input>".into(),
            source,
        })?;

    let mut header = None;
    let mut edges = Vec::new();
    for (i, raw) in lines.iter().enumerate() {
        let line = i + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        if let Some(rest) = text.strip_prefix('%') {
            if header.is_some() || !edges.is_empty() {
                return Err(malformed(line, "header must precede all edges and appear once"));
            }
            let h = parse_header(line, rest)?;
            match (h, mode) {
                (Header::Unipartite(_), GraphMode::Unipartite)
                | (Header::Bipartite(..), GraphMode::Bipartite) => header = Some(h),
                _ => return Err(malformed(line, format!("header does not match {mode:?} mode"))),
            }
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        let multiplicity = match fields.len() {
            2 => 1,
            3 => parse_multiplicity(line, fields[2])?,
            k => return Err(malformed(line, format!("expected 2 or 3 fields, found {k}"))),
        };
        edges.push(RawEdge {
            line,
            u: Token::parse(fields[0]),
            v: Token::parse(fields[1]),
            multiplicity,
        });
    }

    match (mode, header) {
        (_, Some(Header::Unipartite(n))) => build_dense(GraphBuilder::unipartite(n), &edges, |t| {
            // prefixes carry no meaning in unipartite mode
            dense_id(t.label, n)
        }),
        (_, Some(Header::Bipartite(nu, nv))) => {
            build_dense(GraphBuilder::bipartite(nu, nv), &edges, |t| match t.side {
                Some(Side::U) => dense_id(t.label, nu),
                Some(Side::V) => dense_id(t.label, nv).map(|j| nu + j),
                None => dense_id(t.label, nu + nv),
            })
        }
        (GraphMode::Unipartite, None) => build_named_unipartite(&edges),
        (GraphMode::Bipartite, None) => build_named_bipartite(&edges),
    }
}

fn dense_id(label: &str, bound: usize) -> Result<usize, String> {
    match label.parse::<usize>() {
        Ok(id) if id < bound => Ok(id),
        Ok(id) => Err(format!("node id {id} out of range (bound {bound})")),
        Err(_) => Err(format!("expected integer node id, found {label:?}")),
    }
}

fn build_dense<F>(mut builder: GraphBuilder, edges: &[RawEdge<'_>], resolve: F) -> Result<SparseGraph, FormatError>
where
    F: Fn(Token<'_>) -> Result<usize, String>,
{
    for e in edges {
        let u = resolve(e.u).map_err(|m| malformed(e.line, m))?;
        let v = resolve(e.v).map_err(|m| malformed(e.line, m))?;
        add(&mut builder, e.line, u, v, e.multiplicity)?;
    }
    Ok(builder.build())
}

fn add(builder: &mut GraphBuilder, line: usize, u: usize, v: usize, m: u64) -> Result<(), FormatError> {
    builder.add_edge(u, v, m).map_err(|source| match source {
        GraphError::SameSideEdge { .. } => FormatError::SameSideEdge { line },
        source => FormatError::Graph { line, source },
    })
}

/// Sorted label order: numeric when every label is an integer.
fn ordered_labels<'a>(labels: impl Iterator<Item = &'a str>) -> Vec<String> {
    let set: BTreeSet<&str> = labels.collect();
    let mut out: Vec<&str> = set.into_iter().collect();
    if out.iter().all(|l| l.parse::<u64>().is_ok()) {
        out.sort_by_key(|l| l.parse::<u64>().unwrap_or(0));
    }
    out.into_iter().map(str::to_string).collect()
}

fn is_identity(labels: &[String]) -> bool {
    labels.iter().enumerate().all(|(i, l)| *l == i.to_string())
}

fn build_named_unipartite(edges: &[RawEdge<'_>]) -> Result<SparseGraph, FormatError> {
    let labels = ordered_labels(edges.iter().flat_map(|e| [e.u.label, e.v.label]));
    let index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut builder = GraphBuilder::unipartite(labels.len());
    for e in edges {
        add(&mut builder, e.line, index[e.u.label], index[e.v.label], e.multiplicity)?;
    }
    let g = builder.build();
    Ok(if is_identity(&labels) { g } else { g.with_labels(labels) })
}

fn build_named_bipartite(edges: &[RawEdge<'_>]) -> Result<SparseGraph, FormatError> {
    for e in edges {
        match (e.u.side, e.v.side) {
            (Some(a), Some(b)) if a == b => return Err(FormatError::SameSideEdge { line: e.line }),
            (Some(_), Some(_)) => {}
            _ => {
                return Err(malformed(
                    e.line,
                    "bipartite ids need u:/v: prefixes or a %bipartite header",
                ))
            }
        }
    }
    let side_tokens = |side: Side| {
        edges
            .iter()
            .flat_map(|e| [e.u, e.v])
            .filter(move |t| t.side == Some(side))
            .map(|t| t.label)
    };
    let u_labels = ordered_labels(side_tokens(Side::U));
    let v_labels = ordered_labels(side_tokens(Side::V));
    let nu = u_labels.len();
    let u_index: HashMap<&str, usize> = u_labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let v_index: HashMap<&str, usize> = v_labels.iter().enumerate().map(|(i, l)| (l.as_str(), nu + i)).collect();
    let id = |t: Token<'_>| match t.side {
        Some(Side::U) => u_index[t.label],
        _ => v_index[t.label],
    };

    let mut builder = GraphBuilder::bipartite(nu, v_labels.len());
    for e in edges {
        add(&mut builder, e.line, id(e.u), id(e.v), e.multiplicity)?;
    }
    let g = builder.build();
    if is_identity(&u_labels) && is_identity(&v_labels) {
        Ok(g)
    } else {
        Ok(g.with_labels(u_labels.into_iter().chain(v_labels).collect()))
    }
}

/// Writes `g` so that [`parse_edge_list`] reproduces it exactly.
pub fn write_edge_list<W: Write>(g: &SparseGraph, mut out: W) -> std::io::Result<()> {
    let identity = g.has_identity_labels();
    let token = |u: usize| if identity { u.to_string() } else { g.display_label(u) };
    if identity {
        match g.mode() {
            GraphMode::Unipartite => writeln!(out, "%unipartite {}", g.node_count())?,
            GraphMode::Bipartite => {
                writeln!(out, "%bipartite {} {}", g.node_count_u(), g.node_count_v())?
            }
        }
    }
    for u in 0..g.node_count() {
        if !identity && g.degree(u) == 0 {
            // keep isolated named nodes alive with a zero-multiplicity line
            let partner = match g.side(u) {
                Some(side) => g.side_range(side.other()).next(),
                None => Some(u),
            };
            if let Some(v) = partner {
                writeln!(out, "{} {} 0", token(u), token(v))?;
            }
            continue;
        }
        for (v, w) in g.neighbors(u) {
            if v < u {
                continue;
            }
            let m = if u == v { w / 2 } else { w };
            if m == 1 {
                writeln!(out, "{} {}", token(u), token(v))?;
            } else {
                writeln!(out, "{} {} {}", token(u), token(v), m)?;
            }
        }
    }
    Ok(())
}

/// Reads a community file against the labels of `g`.
pub fn load_communities(path: impl AsRef<Path>, g: &SparseGraph) -> Result<Vec<CommunityRef>, FormatError> {
    parse_communities(open(path.as_ref())?, g)
}

pub fn parse_communities<R: BufRead>(reader: R, g: &SparseGraph) -> Result<Vec<CommunityRef>, FormatError> {
    let index = g.label_index();
    let mut out = Vec::new();
    for (i, raw) in reader.lines().enumerate() {
        let line = i + 1;
        let raw = raw.map_err(|source| FormatError::Io {
            path: "<input>".into(),
            source,
        })?;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let nodes = text
            .split_whitespace()
            .map(|t| index.resolve(t))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|source| FormatError::Graph { line, source })?;
        let community = CommunityRef::from_nodes(g, nodes).map_err(|source| FormatError::Graph { line, source })?;
        out.push(community);
    }
    Ok(out)
}

pub fn write_communities<W: Write>(g: &SparseGraph, communities: &[CommunityRef], mut out: W) -> std::io::Result<()> {
    for c in communities {
        let line: Vec<String> = c.members().into_iter().map(|u| g.display_label(u)).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, mode: GraphMode) -> Result<SparseGraph, FormatError> {
        parse_edge_list(text.as_bytes(), mode)
    }

    #[test]
    fn triangle_file() {
        let g = parse("0 1\n1 2\n0 2", GraphMode::Unipartite).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert!(g.degrees().iter().all(|&d| d == 2));
        assert!(g.has_identity_labels());
    }

    #[test]
    fn duplicate_lines_accumulate() {
        let g = parse("0 1\n0 1", GraphMode::Unipartite).unwrap();
        assert_eq!(g.multiplicity(0, 1), 2);
        assert_eq!(g.degree(0), 2);
    }

    #[test]
    fn comments_and_multiplicity_column() {
        let g = parse("# header\n\na b 3\nb c\n", GraphMode::Unipartite).unwrap();
        assert_eq!(g.multiplicity(0, 1), 3);
        assert_eq!(g.label(2), "c");
        assert_eq!(g.label_index().resolve("b").unwrap(), 1);
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        let g = parse("10 2\n2 7", GraphMode::Unipartite).unwrap();
        assert_eq!(g.label(0), "2");
        assert_eq!(g.label(1), "7");
        assert_eq!(g.label(2), "10");
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse("0 1\n0\n", GraphMode::Unipartite) {
            Err(FormatError::Malformed { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse("0 1\n1 2 -1\n", GraphMode::Unipartite) {
            Err(FormatError::NegativeMultiplicity { line: 2, value: -1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse("0 1 0.5\n", GraphMode::Unipartite) {
            Err(FormatError::RealWeight { line: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse("u:1 v:2\nu:1 u:3\n", GraphMode::Bipartite) {
            Err(FormatError::SameSideEdge { line: 2 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse("%bipartite 2 2\n0 1\n", GraphMode::Bipartite) {
            Err(FormatError::SameSideEdge { line: 2 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("%unipartite 2\n0 5\n", GraphMode::Unipartite).is_err());
        assert!(parse("0 1\n1 2\n", GraphMode::Bipartite).is_err());
    }

    #[test]
    fn bipartite_prefix_and_header_forms_agree() {
        let a = parse("u:0 v:0\nu:1 v:0\nv:1 u:1\n", GraphMode::Bipartite).unwrap();
        let b = parse("%bipartite 2 2\n0 2\n1 2\n3 1\n", GraphMode::Bipartite).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.node_count_u(), 2);
        assert_eq!(a.node_count_v(), 2);
        assert_eq!(a.degree(2), 2);
    }

    #[test]
    fn communities_resolve_labels() {
        let g = parse("u:a v:x\nu:b v:x\nu:b v:y\n", GraphMode::Bipartite).unwrap();
        let cs = parse_communities("u:a v:x u:b\n# skip\nv:y\n".as_bytes(), &g).unwrap();
        assert_eq!(
            cs[0],
            CommunityRef::Bipartite {
                u_side: vec![0, 1],
                v_side: vec![2]
            }
        );
        assert!(parse_communities("a\n".as_bytes(), &g).is_err());
        let mut buf = Vec::new();
        write_communities(&g, &cs, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "u:a u:b v:x\nv:y\n");
    }

    #[test]
    fn named_round_trip_keeps_isolated_nodes() {
        let g = parse("a b\nc c 0\nb b 2\n", GraphMode::Unipartite).unwrap();
        assert_eq!(g.node_count(), 3);
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let back = parse_edge_list(buf.as_slice(), GraphMode::Unipartite).unwrap();
        assert_eq!(back, g);
    }
}
