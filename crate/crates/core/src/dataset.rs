//! Flow CSV and ground-truth event file formats.
//!
//! Flow files are `#`-separated with a mandatory header naming the 53 flow
//! columns in schema order, optionally followed by `Label` and `Attack`.
//! Readers map columns by header name, so column order is not significant on
//! input. Ground-truth files are comma-separated with the header
//! `src_ip,dst_ip,src_port,dst_port,protocol,start_ms,end_ms,attack`.

use std::collections::HashMap;
use std::io::{self, Read, Write};
use std::net::Ipv4Addr;

use thiserror::Error;

use crate::record::{FlowRecord, Label, ATTACK_COLUMN, BENIGN, FLOW_COLUMNS, LABEL_COLUMN};

pub const FLOW_SEPARATOR: u8 = b'#';

pub const GROUND_TRUTH_COLUMNS: [&str; 8] =
    ["src_ip", "dst_ip", "src_port", "dst_port", "protocol", "start_ms", "end_ms", "attack"];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed writing output: {0}")]
    SinkFailure(#[source] io::Error),
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: u64, reason: String },
    #[error("header is not '#'-separated")]
    UnknownSeparator,
    #[error("event on row {row} ends before it starts ({start_ms} > {end_ms})")]
    InvertedInterval { row: u64, start_ms: u64, end_ms: u64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl From<csv::Error> for DatasetError {
    fn from(e: csv::Error) -> Self {
        let row = e.position().map_or(0, |p| p.line());
        match e.into_kind() {
            csv::ErrorKind::Io(io) => DatasetError::Io(io),
            other => DatasetError::MalformedRow { row, reason: format!("{other:?}") },
        }
    }
}

/// One ground-truth attack interval. Zero ports or protocol are wildcards.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroundTruthEvent {
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    pub protocol: u8,
    pub start_ms: u64,
    pub end_ms: u64,
    pub attack: String,
}

/// The flow CSV header line (without newline).
pub fn flow_header(include_labels: bool) -> String {
    let mut cols: Vec<&str> = FLOW_COLUMNS.to_vec();
    if include_labels {
        cols.push(LABEL_COLUMN);
        cols.push(ATTACK_COLUMN);
    }
    cols.join("#")
}

/// Write records in the given order. Returns the number of data rows.
///
/// With `include_labels`, unlabeled records are written as benign.
pub fn write_flows<W: Write>(records: &[FlowRecord], sink: W, include_labels: bool) -> Result<usize, DatasetError> {
    let mut out = io::BufWriter::new(sink);
    let sink_err = DatasetError::SinkFailure;
    out.write_all(flow_header(include_labels).as_bytes()).map_err(sink_err)?;
    out.write_all(b"\n").map_err(sink_err)?;
    let mut line = String::with_capacity(512);
    for rec in records {
        line.clear();
        line.push_str(&rec.values().join("#"));
        if include_labels {
            let label = rec.label.clone().unwrap_or_else(Label::benign);
            line.push('#');
            line.push_str(&label.binary().to_string());
            line.push('#');
            line.push_str(label.attack());
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(sink_err)?;
    }
    out.flush().map_err(sink_err)?;
    Ok(records.len())
}

/// Read a flow CSV written by [`write_flows`] (or any column permutation of it).
pub fn read_flows<R: Read>(source: R) -> Result<Vec<FlowRecord>, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(FLOW_SEPARATOR)
        .has_headers(true)
        .flexible(false)
        .quoting(false)
        .from_reader(source);
    let headers = rdr.headers()?.clone();
    // A '#'-separated flow header always has many fields.
    if headers.len() <= 1 {
        return Err(DatasetError::UnknownSeparator);
    }
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h.trim(), i)).collect();
    let mut positions = [0usize; FLOW_COLUMNS.len()];
    for (slot, col) in positions.iter_mut().zip(FLOW_COLUMNS) {
        *slot = *index.get(col).ok_or_else(|| DatasetError::MissingColumn(col.to_string()))?;
    }
    let label_pos = index.get(LABEL_COLUMN).copied();
    let attack_pos = index.get(ATTACK_COLUMN).copied();
    if label_pos.is_some() != attack_pos.is_some() {
        let missing = if label_pos.is_none() { LABEL_COLUMN } else { ATTACK_COLUMN };
        return Err(DatasetError::MissingColumn(missing.to_string()));
    }

    let mut records = Vec::new();
    let mut row = csv::StringRecord::new();
    let mut row_no = 1u64;
    while rdr.read_record(&mut row)? {
        row_no += 1;
        let mut rec = FlowRecord::parse_columns(|i| row.get(positions[i]).unwrap_or("")).map_err(|(i, raw)| {
            DatasetError::MalformedRow { row: row_no, reason: format!("{}: cannot parse '{raw}'", FLOW_COLUMNS[i]) }
        })?;
        if let (Some(lp), Some(ap)) = (label_pos, attack_pos) {
            let binary = row.get(lp).unwrap_or("").trim();
            let attack = row.get(ap).unwrap_or("").trim();
            let label = Label::class(attack);
            let consistent = match binary {
                "0" => attack == BENIGN,
                "1" => !attack.is_empty() && attack != BENIGN,
                _ => false,
            };
            if !consistent {
                return Err(DatasetError::MalformedRow {
                    row: row_no,
                    reason: format!("label '{binary}' inconsistent with attack '{attack}'"),
                });
            }
            rec.label = Some(label);
        }
        records.push(rec);
    }
    Ok(records)
}

/// Read a comma-separated ground-truth event file.
pub fn read_ground_truth<R: Read>(source: R) -> Result<Vec<GroundTruthEvent>, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(source);
    let headers = rdr.headers()?.clone();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let mut pos = [0usize; 8];
    for (slot, col) in pos.iter_mut().zip(GROUND_TRUTH_COLUMNS) {
        *slot = *index.get(col).ok_or_else(|| DatasetError::MissingColumn(col.to_string()))?;
    }

    let mut events = Vec::new();
    let mut row = csv::StringRecord::new();
    let mut row_no = 1u64;
    while rdr.read_record(&mut row)? {
        row_no += 1;
        let field = |i: usize| row.get(pos[i]).unwrap_or("");
        fn parse<T: std::str::FromStr>(raw: &str, col: &str, row: u64) -> Result<T, DatasetError> {
            raw.parse().map_err(|_| DatasetError::MalformedRow { row, reason: format!("{col}: cannot parse '{raw}'") })
        }
        let c = &GROUND_TRUTH_COLUMNS;
        let event = GroundTruthEvent {
            src_ip: parse(field(0), c[0], row_no)?,
            dst_ip: parse(field(1), c[1], row_no)?,
            src_port: parse(field(2), c[2], row_no)?,
            dst_port: parse(field(3), c[3], row_no)?,
            protocol: parse(field(4), c[4], row_no)?,
            start_ms: parse(field(5), c[5], row_no)?,
            end_ms: parse(field(6), c[6], row_no)?,
            attack: field(7).to_string(),
        };
        if event.attack.is_empty() {
            return Err(DatasetError::MalformedRow { row: row_no, reason: "empty attack name".into() });
        }
        if event.start_ms > event.end_ms {
            return Err(DatasetError::InvertedInterval { row: row_no, start_ms: event.start_ms, end_ms: event.end_ms });
        }
        events.push(event);
    }
    Ok(events)
}

/// Write events in the format accepted by [`read_ground_truth`].
pub fn write_ground_truth<W: Write>(events: &[GroundTruthEvent], sink: W) -> Result<(), DatasetError> {
    let mut out = io::BufWriter::new(sink);
    let sink_err = DatasetError::SinkFailure;
    writeln!(out, "{}", GROUND_TRUTH_COLUMNS.join(",")).map_err(sink_err)?;
    for e in events {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            e.src_ip, e.dst_ip, e.src_port, e.dst_port, e.protocol, e.start_ms, e.end_ms, e.attack
        )
        .map_err(sink_err)?;
    }
    out.flush().map_err(sink_err)
}
