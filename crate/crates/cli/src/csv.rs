//! Versioned CSV encoding of regret traces.
//!
//! ```text
//! # gpbandit-trace v1 config_hash=<hex> seed=<u64> best_value_mode=exact|grid best_value=<f> recommendation=<f;f>
//! t,n_e,x,y,delta,cumulative_regret,simple_regret,active_count,wall_ns
//! ```
//!
//! Floats use 17 significant digits, so parsing recovers every value exactly.
//! Vector fields join coordinates with `;`.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use gpbandit::{RegretTrace, TraceRow};

pub const MAGIC: &str = "gpbandit-trace";
pub const VERSION: &str = "v1";
pub const COLUMNS: &str = "t,n_e,x,y,delta,cumulative_regret,simple_regret,active_count,wall_ns";

/// Header metadata of a trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub config_hash: String,
    pub seed: u64,
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn vector(v: &[f64]) -> String {
    v.iter().map(|x| float(*x)).collect::<Vec<_>>().join(";")
}

fn parse_vector(s: &str) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(|p| p.parse::<f64>().map_err(|e| anyhow!("bad float `{p}`: {e}"))).collect()
}

pub fn encode(trace: &RegretTrace, meta: &TraceMeta) -> String {
    let mut out = String::new();
    let mode = if trace.best_exact { "exact" } else { "grid" };
    writeln!(
        out,
        "# {MAGIC} {VERSION} config_hash={} seed={} best_value_mode={mode} best_value={} recommendation={}",
        meta.config_hash,
        meta.seed,
        float(trace.best_value),
        vector(&trace.recommendation)
    )
    .unwrap();
    writeln!(out, "{COLUMNS}").unwrap();
    for r in &trace.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.t,
            r.n_e,
            vector(&r.x),
            float(r.y),
            float(r.delta),
            float(r.cumulative_regret),
            float(r.simple_regret),
            r.active_count,
            r.wall_ns
        )
        .unwrap();
    }
    out
}

pub fn decode(text: &str) -> Result<(RegretTrace, TraceMeta)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("empty trace"))?;
    let mut fields = header.strip_prefix("# ").ok_or_else(|| anyhow!("missing header line"))?.split(' ');
    if fields.next() != Some(MAGIC) {
        bail!("not a {MAGIC} file");
    }
    match fields.next() {
        Some(VERSION) => {}
        other => bail!("unsupported trace version {other:?}"),
    }
    let (mut hash, mut seed, mut exact, mut best, mut rec) = (None, None, None, None, None);
    for kv in fields {
        let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("bad header field `{kv}`"))?;
        match k {
            "config_hash" => hash = Some(v.to_string()),
            "seed" => seed = Some(v.parse::<u64>()?),
            "best_value_mode" => {
                exact = Some(match v {
                    "exact" => true,
                    "grid" => false,
                    _ => bail!("bad best_value_mode `{v}`"),
                })
            }
            "best_value" => best = Some(v.parse::<f64>()?),
            "recommendation" => rec = Some(parse_vector(v)?),
            _ => bail!("unknown header field `{k}`"),
        }
    }
    let missing = |name: &str| anyhow!("header lacks `{name}`");
    let meta = TraceMeta { config_hash: hash.ok_or_else(|| missing("config_hash"))?, seed: seed.ok_or_else(|| missing("seed"))? };
    if lines.next() != Some(COLUMNS) {
        bail!("unexpected column line");
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = parse_row(line).with_context(|| format!("row {}", i + 1))?;
        rows.push(row);
    }
    let trace = RegretTrace {
        rows,
        best_value: best.ok_or_else(|| missing("best_value"))?,
        best_exact: exact.ok_or_else(|| missing("best_value_mode"))?,
        recommendation: rec.ok_or_else(|| missing("recommendation"))?,
    };
    Ok((trace, meta))
}

fn parse_row(line: &str) -> Result<TraceRow> {
    let c: Vec<&str> = line.split(',').collect();
    if c.len() != 9 {
        bail!("expected 9 columns, found {}", c.len());
    }
    Ok(TraceRow {
        t: c[0].parse()?,
        n_e: c[1].parse()?,
        x: parse_vector(c[2])?,
        y: c[3].parse()?,
        delta: c[4].parse()?,
        cumulative_regret: c[5].parse()?,
        simple_regret: c[6].parse()?,
        active_count: c[7].parse()?,
        wall_ns: c[8].parse()?,
    })
}

pub fn read(path: &Path) -> Result<(RegretTrace, TraceMeta)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading trace {}", path.display()))?;
    decode(&text).with_context(|| format!("parsing trace {}", path.display()))
}

pub fn write(path: &Path, trace: &RegretTrace, meta: &TraceMeta) -> Result<()> {
    std::fs::write(path, encode(trace, meta)).with_context(|| format!("writing trace {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RegretTrace {
        RegretTrace {
            rows: vec![
                TraceRow {
                    t: 1,
                    n_e: 1,
                    x: vec![0.1, 1.0 / 3.0],
                    y: -0.25,
                    delta: 0.5,
                    cumulative_regret: 0.5,
                    simple_regret: 0.4,
                    active_count: 3,
                    wall_ns: 0,
                },
                TraceRow {
                    t: 3,
                    n_e: 2,
                    x: vec![f64::MIN_POSITIVE, 0.7],
                    y: 1e300,
                    delta: 0.1 + 0.2,
                    cumulative_regret: 0.8,
                    simple_regret: 0.0,
                    active_count: 5,
                    wall_ns: 12,
                },
            ],
            best_value: std::f64::consts::PI,
            best_exact: false,
            recommendation: vec![0.5, 0.25],
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let meta = TraceMeta { config_hash: "abc123".into(), seed: 7 };
        let text = encode(&sample(), &meta);
        let (back, m) = decode(&text).unwrap();
        assert_eq!(back, sample());
        assert_eq!(m, meta);
        assert_eq!(encode(&back, &m), text);
    }

    #[test]
    fn rejects_bad_input() {
        let meta = TraceMeta { config_hash: "h".into(), seed: 0 };
        let text = encode(&sample(), &meta);
        assert!(decode(&text.replace(" v1 ", " v9 ")).is_err());
        assert!(decode(&text.replace("best_value_mode=grid", "best_value_mode=maybe")).is_err());
        assert!(decode(&format!("{text}1,2,3\n")).is_err());
        assert!(decode("").is_err());
    }

    #[test]
    fn empty_trace_round_trips() {
        let t = RegretTrace { rows: vec![], best_value: 1.0, best_exact: true, recommendation: vec![] };
        let meta = TraceMeta { config_hash: "h".into(), seed: 0 };
        assert_eq!(decode(&encode(&t, &meta)).unwrap().0, t);
    }
}
