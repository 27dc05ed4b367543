//! Line-oriented topology files.
//!
//! ```text
//! flowsim-topo v1 seed=7
//! node 0 transit
//! node 1 stub
//! node 2 host bw=1500000
//! link 0 1 bw=1000000000 lat=0.020000000
//! link 1 2 bw=1500000 lat=0.005000000
//! ```
//!
//! Nodes and links are written in ascending id order, so saving a loaded file
//! reproduces it byte for byte. Blank lines and `#` comments are ignored when
//! reading.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use super::{Latency, Link, Node, NodeId, NodeKind, Topology, TopologyError};

const MAGIC: &str = "flowsim-topo";
const VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum TopologyFileError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Invalid(#[from] TopologyError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

fn kind_token(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::TransitRouter => "transit",
        NodeKind::StubRouter => "stub",
        NodeKind::EndHost => "host",
    }
}

/// Canonical text form of `topology`.
pub fn write_topology(topology: &Topology) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC} {VERSION} seed={}", topology.seed()).unwrap();
    for node in topology.nodes() {
        write!(out, "node {} {}", node.id, kind_token(node.kind)).unwrap();
        if let Some(bw) = node.access_bandwidth {
            write!(out, " bw={bw}").unwrap();
        }
        out.push('\n');
    }
    for link in topology.links() {
        writeln!(out, "link {} {} bw={} lat={}", link.a, link.b, link.bandwidth, link.latency).unwrap();
    }
    out
}

pub fn save_topology(topology: &Topology, path: impl AsRef<Path>) -> Result<(), TopologyFileError> {
    let mut file = io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(write_topology(topology).as_bytes())?;
    file.flush()?;
    Ok(())
}

pub fn load_topology(path: impl AsRef<Path>) -> Result<Topology, TopologyFileError> {
    let text = std::fs::read_to_string(path)?;
    parse_topology(&text)
}

struct LineParser<'a> {
    line: usize,
    tokens: std::str::SplitWhitespace<'a>,
}

impl<'a> LineParser<'a> {
    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, message: message.into() }
    }

    fn next(&mut self, what: &str) -> Result<&'a str, ParseError> {
        self.tokens.next().ok_or_else(|| self.err(format!("missing {what}")))
    }

    fn id(&mut self) -> Result<u32, ParseError> {
        let tok = self.next("node id")?;
        tok.parse().map_err(|_| self.err(format!("bad node id {tok:?}")))
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str, ParseError> {
        let tok = self.next(key)?;
        tok.strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .ok_or_else(|| self.err(format!("expected {key}=<value>, found {tok:?}")))
    }

    fn bandwidth(&mut self) -> Result<f64, ParseError> {
        let v = self.keyed("bw")?;
        v.parse::<f64>()
            .ok()
            .filter(|b| b.is_finite() && *b > 0.0)
            .ok_or_else(|| self.err(format!("bad bandwidth {v:?}")))
    }

    fn finish(mut self) -> Result<(), ParseError> {
        match self.tokens.next() {
            Some(extra) => Err(self.err(format!("unexpected trailing token {extra:?}"))),
            None => Ok(()),
        }
    }
}

fn parse_latency(p: &mut LineParser<'_>) -> Result<Latency, ParseError> {
    let v = p.keyed("lat")?;
    v.parse::<f64>().ok().and_then(Latency::from_secs_f64).ok_or_else(|| p.err(format!("bad latency {v:?}")))
}

pub fn parse_topology(text: &str) -> Result<Topology, TopologyFileError> {
    let mut seed = None;
    let mut nodes = Vec::new();
    let mut links = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut p = LineParser { line: i + 1, tokens: content.split_whitespace() };
        let keyword = p.next("keyword")?;
        if seed.is_none() {
            if keyword != MAGIC {
                return Err(p.err(format!("expected header `{MAGIC} {VERSION} seed=<int>`")).into());
            }
            let version = p.next("version")?;
            if version != VERSION {
                return Err(p.err(format!("unsupported version {version:?}")).into());
            }
            let s = p.keyed("seed")?;
            seed = Some(s.parse::<u64>().map_err(|_| p.err(format!("bad seed {s:?}")))?);
            p.finish()?;
            continue;
        }
        match keyword {
            "node" => {
                let id = p.id()?;
                let node = match p.next("node kind")? {
                    "transit" => Node::router(id, NodeKind::TransitRouter),
                    "stub" => Node::router(id, NodeKind::StubRouter),
                    "host" => Node::host(id, p.bandwidth()?),
                    other => return Err(p.err(format!("unknown node kind {other:?}")).into()),
                };
                p.finish()?;
                nodes.push(node);
            }
            "link" => {
                let (a, b) = (p.id()?, p.id()?);
                let bandwidth = p.bandwidth()?;
                let latency = parse_latency(&mut p)?;
                p.finish()?;
                links.push(Link { a: NodeId(a), b: NodeId(b), bandwidth, latency });
            }
            other => return Err(p.err(format!("unknown record {other:?}")).into()),
        }
    }

    let seed = seed.ok_or(ParseError { line: 1, message: "empty topology file".into() })?;
    Ok(Topology::new(nodes, links, seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{generate_transit_stub, TSParams};

    #[test]
    fn minimal_round_trip() {
        let t = generate_transit_stub(&TSParams::minimal()).unwrap();
        let text = write_topology(&t);
        assert!(text.starts_with("flowsim-topo v1 seed=1\nnode 0 transit\nnode 1 stub\nnode 2 host bw="));
        let back = parse_topology(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(write_topology(&back), text);
    }

    #[test]
    fn default_round_trip_is_byte_identical() {
        let t = generate_transit_stub(&TSParams { seed: 99, ..TSParams::default() }).unwrap();
        let text = write_topology(&t);
        let back = parse_topology(&text).unwrap();
        assert_eq!(back.seed(), 99);
        assert_eq!(back, t);
        assert_eq!(write_topology(&back), text);
    }

    #[test]
    fn host_with_two_links_is_invariant_violation() {
        let text = "flowsim-topo v1 seed=0\n\
                    node 0 stub\nnode 1 stub\nnode 2 host bw=1000000\n\
                    link 0 1 bw=1000000000 lat=0.001\n\
                    link 0 2 bw=1000000 lat=0.001\n\
                    link 1 2 bw=1000000 lat=0.001\n";
        let err = parse_topology(text).unwrap_err();
        assert!(matches!(err, TopologyFileError::Invalid(TopologyError::InvariantViolation(_))));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("bogus\n", 1),
            ("flowsim-topo v2 seed=1\n", 1),
            ("flowsim-topo v1 seed=1\n\nnode 0 router\n", 3),
            ("flowsim-topo v1 seed=1\n# comment\nnode 0 host bw=-5\n", 3),
            ("flowsim-topo v1 seed=1\nnode 0 stub\nnode 1 stub\nlink 0 1 bw=1 lat=x\n", 4),
            ("flowsim-topo v1 seed=1\nnode 0 stub extra\n", 2),
        ];
        for (text, line) in cases {
            match parse_topology(text) {
                Err(TopologyFileError::Parse(e)) => assert_eq!(e.line, line, "{text:?}: {e}"),
                other => panic!("{text:?}: expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn comments_and_unordered_records() {
        let text = "# generated by hand\nflowsim-topo v1 seed=3\n\
                    link 2 1 bw=1500000 lat=0.005 # access\n\
                    node 2 host bw=1500000\nnode 0 transit\nnode 1 stub\n\
                    link 1 0 bw=1e9 lat=0.02\n";
        let t = parse_topology(text).unwrap();
        assert_eq!(
            write_topology(&t),
            "flowsim-topo v1 seed=3\nnode 0 transit\nnode 1 stub\nnode 2 host bw=1500000\n\
             link 0 1 bw=1000000000 lat=0.020000000\nlink 1 2 bw=1500000 lat=0.005000000\n"
        );
    }
}
