//! Text formats for topologies, demands, placements, curves, reports and
//! solver traces.
//!
//! Every file opens with one comment line `#<kind> key=value ...`. The TSV
//! model files follow it directly with data rows; the CSV files add a column
//! name line. Floats are written in shortest round-trip form, so files are
//! byte-identical across runs and read back exactly.

use std::fmt::Display;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::adaptive::TraceRow;
use crate::allocate::{Policy, ServiceCurve};
use crate::error::{Error, Result};
use crate::model::{Demand, Placement, StorageMode, Topology};

/// The `#<kind> key=value ...` line at the top of every file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub kind: String,
    pub fields: Vec<(String, String)>,
}

impl Header {
    pub fn new(kind: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            fields: Vec::new(),
        }
    }

    /// Appends a field, replacing an existing one with the same key.
    pub fn with(mut self, key: impl Into<String>, value: impl Display) -> Self {
        self.set(key, value);
        self
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Display) {
        let key = key.into();
        let value = value.to_string();
        match self.fields.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.fields.push((key, value)),
        }
    }

    /// Appends every field of `other` (same replacement rule).
    pub fn extend(mut self, other: &Header) -> Self {
        for (k, v) in &other.fields {
            self.set(k.clone(), v);
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Parses a required field.
    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key).ok_or_else(|| parse_err(1, format!("header lacks `{key}`")))?;
        raw.parse()
            .map_err(|_| parse_err(1, format!("header field `{key}={raw}` is malformed")))
    }

    pub fn parse(line: &str) -> Result<Self> {
        let body = line
            .strip_prefix('#')
            .ok_or_else(|| parse_err(1, "expected a `#` header line"))?;
        let mut tokens = body.split_whitespace();
        let kind = tokens.next().filter(|t| !t.contains('=')).unwrap_or_default().to_string();
        let mut header = Header::new(kind);
        for token in body.split_whitespace().filter(|t| t.contains('=')) {
            let (k, v) = token.split_once('=').expect("filtered on '='");
            header.set(k, v);
        }
        Ok(header)
    }
}

impl Display for Header {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "#{}", self.kind)?;
        for (k, v) in &self.fields {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

fn field<T: FromStr>(raw: &str, line: usize, what: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("bad {what} `{raw}`")))
}

/// Header plus data rows (1-based line number, cells). Blank lines and
/// later comment lines are skipped; `columns` names the CSV column line.
fn read_rows(reader: impl BufRead, kind: &str, sep: char, columns: Option<&str>) -> Result<(Header, Vec<(usize, Vec<String>)>)> {
    let mut lines = reader.lines();
    let first = lines.next().transpose()?.ok_or_else(|| parse_err(1, "empty file"))?;
    let header = Header::parse(&first)?;
    if header.kind != kind {
        return Err(parse_err(1, format!("expected a `{kind}` file, found `{}`", header.kind)));
    }
    let mut rows = Vec::new();
    let mut columns_seen = columns.is_none();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let number = i + 2;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !columns_seen {
            if Some(trimmed) != columns {
                return Err(parse_err(number, format!("expected column line `{}`", columns.unwrap_or_default())));
            }
            columns_seen = true;
            continue;
        }
        rows.push((number, trimmed.split(sep).map(str::to_string).collect()));
    }
    Ok((header, rows))
}

fn expect_cells(cells: &[String], n: usize, line: usize) -> Result<()> {
    if cells.len() != n {
        return Err(parse_err(line, format!("expected {n} fields, found {}", cells.len())));
    }
    Ok(())
}

pub fn topology_header(topology: &Topology) -> Header {
    Header::new("topology")
        .with("caches", topology.num_caches)
        .with("peers", topology.num_peers)
        .with("degree", topology.degree)
        .with("seed", topology.seed)
}

pub fn write_topology(mut w: impl Write, topology: &Topology) -> Result<()> {
    writeln!(w, "{}", topology_header(topology))?;
    for (u, row) in topology.adjacency.iter().enumerate() {
        write!(w, "{u}")?;
        for h in row {
            write!(w, "\t{h}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_topology(reader: impl BufRead) -> Result<Topology> {
    let (header, rows) = read_rows(reader, "topology", '\t', None)?;
    let caches: usize = header.require("caches")?;
    let peers: usize = header.require("peers")?;
    let degree: usize = header.require("degree")?;
    let seed: u64 = header.require("seed")?;
    if rows.len() != peers {
        return Err(parse_err(1, format!("header says {peers} peers, file has {} rows", rows.len())));
    }
    let mut adjacency = Vec::with_capacity(peers);
    for (expected, (line, cells)) in rows.iter().enumerate() {
        expect_cells(cells, degree + 1, *line)?;
        let id: usize = field(&cells[0], *line, "peer id")?;
        if id != expected {
            return Err(parse_err(*line, format!("peer ids must be 0..{peers} in order, found {id}")));
        }
        let row = cells[1..]
            .iter()
            .map(|c| field(c, *line, "cache id"))
            .collect::<Result<Vec<usize>>>()?;
        adjacency.push(row);
    }
    Topology::from_adjacency(caches, adjacency, seed)
}

pub fn demand_header(demand: &Demand) -> Header {
    Header::new("demand")
        .with("videos", demand.num_videos)
        .with("exponent", demand.zipf_exponent)
        .with("seed", demand.seed)
}

pub fn write_demand(mut w: impl Write, demand: &Demand) -> Result<()> {
    writeln!(w, "{}", demand_header(demand))?;
    for (u, m) in demand.requests.iter().enumerate() {
        writeln!(w, "{u}\t{m}")?;
    }
    Ok(())
}

pub fn read_demand(reader: impl BufRead) -> Result<Demand> {
    let (header, rows) = read_rows(reader, "demand", '\t', None)?;
    let videos: usize = header.require("videos")?;
    let exponent: f64 = header.require("exponent")?;
    let seed: u64 = header.require("seed")?;
    let mut requests = Vec::with_capacity(rows.len());
    for (expected, (line, cells)) in rows.iter().enumerate() {
        expect_cells(cells, 2, *line)?;
        let id: usize = field(&cells[0], *line, "peer id")?;
        if id != expected {
            return Err(parse_err(*line, format!("peer ids must be consecutive from 0, found {id}")));
        }
        requests.push(field(&cells[1], *line, "video id")?);
    }
    Demand::from_requests(videos, exponent, requests, seed)
}

const PLACEMENT_COLUMNS: &str = "video_id,cache_id,fraction";

/// Writes nonzero entries, video-major. `extra` carries run parameters.
pub fn write_placement(mut w: impl Write, placement: &Placement, extra: &Header) -> Result<()> {
    let mode = match placement.mode {
        StorageMode::Whole => "whole",
        StorageMode::Fractional => "fractional",
    };
    let header = Header::new("placement")
        .with("caches", placement.num_caches)
        .with("videos", placement.num_videos)
        .with("mode", mode)
        .extend(extra);
    writeln!(w, "{header}")?;
    writeln!(w, "{PLACEMENT_COLUMNS}")?;
    let mut entries = placement.entries();
    entries.sort_by_key(|&(m, h, _)| (m, h));
    for (m, h, f) in entries {
        writeln!(w, "{m},{h},{f}")?;
    }
    Ok(())
}

pub fn read_placement(reader: impl BufRead) -> Result<(Header, Placement)> {
    let (header, rows) = read_rows(reader, "placement", ',', Some(PLACEMENT_COLUMNS))?;
    let caches: usize = header.require("caches")?;
    let videos: usize = header.require("videos")?;
    let mode = match header.get("mode") {
        Some("whole") => StorageMode::Whole,
        Some("fractional") | None => StorageMode::Fractional,
        Some(other) => return Err(parse_err(1, format!("unknown storage mode `{other}`"))),
    };
    let mut placement = Placement::empty(caches, videos, mode);
    for (line, cells) in &rows {
        expect_cells(cells, 3, *line)?;
        let m: usize = field(&cells[0], *line, "video id")?;
        let h: usize = field(&cells[1], *line, "cache id")?;
        let f: f64 = field(&cells[2], *line, "fraction")?;
        if m >= videos || h >= caches {
            return Err(parse_err(*line, format!("entry ({m},{h}) outside {videos} videos x {caches} caches")));
        }
        placement.set(h, m, f).map_err(|e| parse_err(*line, e.to_string()))?;
    }
    Ok((header, placement))
}

/// One line of an allocation report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub video: usize,
    pub copies: f64,
    /// Policy chosen for this video (hybrid runs only).
    pub policy: Option<Policy>,
    pub served_estimate: f64,
}

const REPORT_COLUMNS: &str = "video_id,copies,policy,served_estimate";

pub fn write_report(mut w: impl Write, header: &Header, rows: &[ReportRow]) -> Result<()> {
    writeln!(w, "{}", Header::new("allocation").extend(header))?;
    writeln!(w, "{REPORT_COLUMNS}")?;
    for r in rows {
        let policy = r.policy.map(|p| p.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{policy},{}", r.video, r.copies, r.served_estimate)?;
    }
    Ok(())
}

pub fn read_report(reader: impl BufRead) -> Result<(Header, Vec<ReportRow>)> {
    let (header, rows) = read_rows(reader, "allocation", ',', Some(REPORT_COLUMNS))?;
    let rows = rows
        .iter()
        .map(|(line, cells)| {
            expect_cells(cells, 4, *line)?;
            Ok(ReportRow {
                video: field(&cells[0], *line, "video id")?,
                copies: field(&cells[1], *line, "copies")?,
                policy: if cells[2].is_empty() {
                    None
                } else {
                    Some(field(&cells[2], *line, "policy")?)
                },
                served_estimate: field(&cells[3], *line, "served estimate")?,
            })
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

const CURVE_COLUMNS: &str = "copies,value";

/// A single `copies,value` series.
pub fn write_curve(mut w: impl Write, header: &Header, points: &[(f64, f64)]) -> Result<()> {
    writeln!(w, "{}", Header::new("curve").extend(header))?;
    writeln!(w, "{CURVE_COLUMNS}")?;
    for (c, v) in points {
        writeln!(w, "{c},{v}")?;
    }
    Ok(())
}

pub fn read_curve(reader: impl BufRead) -> Result<(Header, Vec<(f64, f64)>)> {
    let (header, rows) = read_rows(reader, "curve", ',', Some(CURVE_COLUMNS))?;
    let points = rows
        .iter()
        .map(|(line, cells)| {
            expect_cells(cells, 2, *line)?;
            Ok((field(&cells[0], *line, "copies")?, field(&cells[1], *line, "value")?))
        })
        .collect::<Result<_>>()?;
    Ok((header, points))
}

/// Grid points of a service curve as `(copies, value)`.
pub fn curve_points(curve: &ServiceCurve) -> Vec<(f64, f64)> {
    curve
        .values
        .iter()
        .enumerate()
        .map(|(k, &v)| (curve.copies_at(k), v))
        .collect()
}

const BUNDLE_COLUMNS: &str = "video_id,policy,copies,value";

pub fn write_curve_bundle(mut w: impl Write, header: &Header, curves: &[ServiceCurve]) -> Result<()> {
    writeln!(w, "{}", Header::new("curves").extend(header))?;
    writeln!(w, "{BUNDLE_COLUMNS}")?;
    for curve in curves {
        for (c, v) in curve_points(curve) {
            writeln!(w, "{},{},{c},{v}", curve.video, curve.policy)?;
        }
    }
    Ok(())
}

/// Bundle rows as `(video, policy, copies, value)`.
pub fn read_curve_bundle(reader: impl BufRead) -> Result<(Header, Vec<(usize, Policy, f64, f64)>)> {
    let (header, rows) = read_rows(reader, "curves", ',', Some(BUNDLE_COLUMNS))?;
    let rows = rows
        .iter()
        .map(|(line, cells)| {
            expect_cells(cells, 4, *line)?;
            Ok((
                field(&cells[0], *line, "video id")?,
                field(&cells[1], *line, "policy")?,
                field(&cells[2], *line, "copies")?,
                field(&cells[3], *line, "value")?,
            ))
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

const TRACE_COLUMNS: &str = "iter,objective,storage_residual,omega";

pub fn write_trace(mut w: impl Write, header: &Header, trace: &[TraceRow]) -> Result<()> {
    writeln!(w, "{}", Header::new("trace").extend(header))?;
    writeln!(w, "{TRACE_COLUMNS}")?;
    for r in trace {
        writeln!(w, "{},{},{},{}", r.iter, r.objective, r.storage_residual, r.omega)?;
    }
    Ok(())
}

pub fn read_trace(reader: impl BufRead) -> Result<(Header, Vec<TraceRow>)> {
    let (header, rows) = read_rows(reader, "trace", ',', Some(TRACE_COLUMNS))?;
    let rows = rows
        .iter()
        .map(|(line, cells)| {
            expect_cells(cells, 4, *line)?;
            Ok(TraceRow {
                iter: field(&cells[0], *line, "iteration")?,
                objective: field(&cells[1], *line, "objective")?,
                storage_residual: field(&cells[2], *line, "residual")?,
                omega: field(&cells[3], *line, "omega")?,
            })
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

/// Generic table with a header and column line, for files such as the
/// reproduction bundles whose columns vary.
pub fn write_table(mut w: impl Write, header: &Header, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    writeln!(w, "{header}")?;
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
