//! Point-list CSV: a `# dim=<d> n=<N>` header, then one comma-separated point per line.

use super::ParticleMeasure;
use crate::{Error, Result};
use std::fmt::Write;

/// Serializes with shortest round-trip float formatting, so re-reading is bit-exact.
pub fn write_points_csv(m: &ParticleMeasure) -> String {
    let mut out = format!("# dim={} n={}\n", m.dim(), m.len());
    for p in m.points() {
        for (k, c) in p.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            write!(out, "{c}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn read_points_csv(text: &str) -> Result<ParticleMeasure> {
    let mut dim: Option<usize> = None;
    let mut n: Option<usize> = None;
    let mut coords = Vec::new();
    let mut rows = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            for tok in comment.split_whitespace() {
                if let Some(v) = tok.strip_prefix("dim=") {
                    dim = Some(v.parse().map_err(|_| bad(lineno, "bad dim"))?);
                } else if let Some(v) = tok.strip_prefix("n=") {
                    n = Some(v.parse().map_err(|_| bad(lineno, "bad n"))?);
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let d = *dim.get_or_insert(fields.len());
        if fields.len() != d {
            return Err(bad(
                lineno,
                &format!("expected {d} coordinates, got {}", fields.len()),
            ));
        }
        for f in fields {
            coords.push(
                f.parse::<f64>()
                    .map_err(|_| bad(lineno, &format!("not a number: {f:?}")))?,
            );
        }
        rows += 1;
    }
    if let Some(n) = n {
        if n != rows {
            return Err(Error::MalformedCsv(format!(
                "header says n={n}, found {rows} points"
            )));
        }
    }
    let dim = dim.ok_or_else(|| Error::MalformedCsv("no points".into()))?;
    ParticleMeasure::new(dim, coords)
}

fn bad(lineno: usize, msg: &str) -> Error {
    Error::MalformedCsv(format!("line {}: {msg}", lineno + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_rows() {
        let m = read_points_csv("# dim=2 n=2\n0,1\n0.5, -2\n").unwrap();
        assert_eq!(m.dim(), 2);
        assert_eq!(m.coords(), &[0.0, 1.0, 0.5, -2.0]);
        assert!(read_points_csv("# dim=2 n=3\n0,1\n").is_err());
        assert!(read_points_csv("# dim=1\n0,1\n").is_err());
        assert!(read_points_csv("0\nx\n").is_err());
        assert!(read_points_csv("").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(v in prop::collection::vec(-1e6f64..1e6, 1..40), d in 1usize..3) {
            let len = v.len() / d * d;
            prop_assume!(len > 0);
            let m = ParticleMeasure::new(d, v[..len].to_vec()).unwrap();
            let back = read_points_csv(&write_points_csv(&m)).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
