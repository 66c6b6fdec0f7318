//! Line-oriented text format for graphs.
//!
//! ```text
//! adrcm-graph 1
//! dimension 1
//! beta 1
//! gamma 0.5
//! profile indicator(a=0.5)
//! horizon 100
//! seed 7
//! volume 1
//! V 0 0.8137 -0.2211
//! E 3 0
//! ```
//!
//! Floats are written in shortest round-trip form, so reading a written
//! graph reproduces it exactly.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::{Space, Volume};
use crate::growth::Graph;
use crate::kernel::{ModelParams, Profile};

const MAGIC: &str = "adrcm-graph 1";

pub fn write_graph<W: Write>(g: &Graph, mut out: W) -> Result<()> {
    let p = g.params();
    let volume = match g.space().volume() {
        Volume::Finite(v) => v,
        Volume::Infinite => f64::INFINITY,
    };
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "dimension {}", g.dimension())?;
    writeln!(out, "beta {}", p.beta())?;
    writeln!(out, "gamma {}", p.gamma())?;
    writeln!(out, "profile {}", p.profile())?;
    writeln!(out, "horizon {}", g.horizon())?;
    writeln!(out, "seed {}", g.seed())?;
    writeln!(out, "volume {volume}")?;
    for id in 0..g.len() {
        write!(out, "V {id} {}", g.birth(id))?;
        for x in g.position(id) {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    for (y, o) in g.edges() {
        writeln!(out, "E {y} {o}")?;
    }
    Ok(())
}

pub fn graph_to_string(g: &Graph) -> String {
    let mut buf = Vec::new();
    write_graph(g, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<Option<String>> {
        loop {
            match self.inner.next() {
                None => return Ok(None),
                Some(line) => {
                    self.number += 1;
                    let line = line?;
                    if !line.trim().is_empty() {
                        return Ok(Some(line));
                    }
                }
            }
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.number,
            message: message.into(),
        }
    }

    fn header(&mut self, key: &str) -> Result<String> {
        let line = self
            .next_line()?
            .ok_or_else(|| self.error(format!("missing `{key}` line")))?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.trim().to_string()),
            _ => Err(self.error(format!("expected `{key}`"))),
        }
    }

    fn parse<T: std::str::FromStr>(&self, s: &str, what: &str) -> Result<T> {
        s.parse().map_err(|_| self.error(format!("bad {what} `{s}`")))
    }
}

pub fn read_graph<R: BufRead>(input: R) -> Result<Graph> {
    let mut lines = Lines {
        inner: input.lines(),
        number: 0,
    };
    let magic = lines.next_line()?.unwrap_or_default();
    if magic.trim() != MAGIC {
        return Err(lines.error("not an adrcm graph file"));
    }
    let d: usize = {
        let v = lines.header("dimension")?;
        lines.parse(&v, "dimension")?
    };
    let beta: f64 = {
        let v = lines.header("beta")?;
        lines.parse(&v, "beta")?
    };
    let gamma: f64 = {
        let v = lines.header("gamma")?;
        lines.parse(&v, "gamma")?
    };
    let profile: Profile = {
        let v = lines.header("profile")?;
        v.parse().map_err(|e: Error| lines.error(e.to_string()))?
    };
    let horizon: f64 = {
        let v = lines.header("horizon")?;
        lines.parse(&v, "horizon")?
    };
    let seed: u64 = {
        let v = lines.header("seed")?;
        lines.parse(&v, "seed")?
    };
    let volume: f64 = {
        let v = lines.header("volume")?;
        lines.parse(&v, "volume")?
    };
    let space = if volume.is_infinite() {
        Space::euclidean(d)?
    } else {
        Space::torus(d, volume)?
    };
    let params = ModelParams::new(beta, gamma, profile, space)?;
    let mut births = Vec::new();
    let mut positions = Vec::new();
    let mut edges = Vec::new();
    while let Some(line) = lines.next_line()? {
        let mut parts = line.split_ascii_whitespace();
        match parts.next() {
            Some("V") => {
                if !edges.is_empty() {
                    return Err(lines.error("vertex after edges"));
                }
                let id: usize = lines.parse(parts.next().unwrap_or(""), "vertex id")?;
                if id != births.len() {
                    return Err(lines.error(format!("vertex id {id} out of order")));
                }
                births.push(lines.parse(parts.next().unwrap_or(""), "birth")?);
                for _ in 0..d {
                    positions.push(lines.parse(parts.next().unwrap_or(""), "coordinate")?);
                }
                if parts.next().is_some() {
                    return Err(lines.error("too many coordinates"));
                }
            }
            Some("E") => {
                let y: usize = lines.parse(parts.next().unwrap_or(""), "edge end")?;
                let o: usize = lines.parse(parts.next().unwrap_or(""), "edge end")?;
                if parts.next().is_some() {
                    return Err(lines.error("trailing fields on edge"));
                }
                edges.push((y, o));
            }
            _ => return Err(lines.error("expected `V` or `E` record")),
        }
    }
    Graph::from_edges(params, horizon, seed, births, positions, &edges)
}

pub fn graph_from_str(s: &str) -> Result<Graph> {
    read_graph(s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::{simulate, Mode};

    #[test]
    fn round_trip_is_exact() {
        let space = Space::unit_torus(2).unwrap();
        let p = ModelParams::new(0.7, 0.3, Profile::polynomial(2.5).unwrap(), space).unwrap();
        let g = simulate(&p, 150.0, 11, Mode::CellIndex).unwrap();
        let text = graph_to_string(&g);
        let h = graph_from_str(&text).unwrap();
        assert_eq!(graph_to_string(&h), text);
        assert_eq!(g.births(), h.births());
        for i in 0..g.len() {
            assert_eq!(g.position(i), h.position(i));
        }
        assert_eq!(g.edges().collect::<Vec<_>>(), h.edges().collect::<Vec<_>>());
    }

    #[test]
    fn malformed_input_reports_line() {
        let text = "adrcm-graph 1\ndimension 1\nbeta 1\ngamma 0.5\nprofile indicator(a=1)\nhorizon 2\nseed 0\nvolume 1\nV 0 x 0.1\n";
        match graph_from_str(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 9),
            other => panic!("{other:?}"),
        }
        assert!(graph_from_str("hello").is_err());
    }
}
