//! Result tables as CSV or JSON.
//!
//! Both formats write floats in Rust's shortest round-trip notation, so a
//! value read back from either file is bit-identical to the computed one.
//! The CSV carries its metadata as leading `# key: value` comment lines.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::grid_model::BusId;
use crate::network_builder::{Case, FaultBuses};
use crate::sc_solver::{BusStatus, ShortCircuitResult};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultMetadata {
    pub case: Case,
    pub lv_tolerance_percent: u8,
    pub fault_buses: String,
    pub consider_converters: bool,
    pub s_base_mva: f64,
    pub engine_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub bus: BusId,
    pub name: String,
    pub vn_kv: f64,
    pub c: Option<f64>,
    pub ikss_source_ka: Option<f64>,
    pub ikss_converter_ka: Option<f64>,
    pub ikss_ka: Option<f64>,
    pub energized: bool,
    pub status: BusStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub metadata: ResultMetadata,
    pub rows: Vec<ResultRow>,
}

const CSV_HEADER: [&str; 9] = [
    "bus",
    "name",
    "vn_kv",
    "c",
    "ikss_source_ka",
    "ikss_converter_ka",
    "ikss_ka",
    "energized",
    "status",
];

fn status_str(s: BusStatus) -> &'static str {
    match s {
        BusStatus::Energized => "energized",
        BusStatus::NotEnergized => "not_energized",
        BusStatus::DegenerateImpedance => "degenerate_impedance",
    }
}

fn parse_status(s: &str) -> Option<BusStatus> {
    Some(match s {
        "energized" => BusStatus::Energized,
        "not_energized" => BusStatus::NotEnergized,
        "degenerate_impedance" => BusStatus::DegenerateImpedance,
        _ => return None,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn bad(msg: impl Into<String>) -> std::io::Error {
    std::io::Error::new(std::io::ErrorKind::InvalidData, msg.into())
}

impl ResultFile {
    pub fn from_result(result: &ShortCircuitResult) -> Self {
        let o = &result.options;
        let fault_buses = match &o.fault_buses {
            FaultBuses::All => "all".to_string(),
            FaultBuses::Explicit(ids) => ids
                .iter()
                .map(|b| b.to_string())
                .collect::<Vec<_>>()
                .join(","),
        };
        let mut rows: Vec<ResultRow> = result
            .rows
            .iter()
            .map(|r| ResultRow {
                bus: r.bus,
                name: r.name.clone(),
                vn_kv: r.vn_kv,
                c: r.c,
                ikss_source_ka: r.ikss_source_ka(),
                ikss_converter_ka: r.ikss_converter_ka(),
                ikss_ka: r.ikss_ka(),
                energized: r.energized(),
                status: r.status,
            })
            .collect();
        rows.sort_by_key(|r| r.bus);
        ResultFile {
            metadata: ResultMetadata {
                case: result.case,
                lv_tolerance_percent: o.lv_tolerance_percent,
                fault_buses,
                consider_converters: o.consider_converters,
                s_base_mva: o.s_base_mva,
                engine_version: ENGINE_VERSION.to_string(),
            },
            rows,
        }
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)
    }

    pub fn read_json<R: Read>(r: R) -> std::io::Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let m = &self.metadata;
        writeln!(w, "# case: {}", m.case)?;
        writeln!(w, "# lv_tolerance_percent: {}", m.lv_tolerance_percent)?;
        writeln!(w, "# fault_buses: {}", m.fault_buses)?;
        writeln!(w, "# consider_converters: {}", m.consider_converters)?;
        writeln!(w, "# s_base_mva: {}", m.s_base_mva)?;
        writeln!(w, "# engine_version: {}", m.engine_version)?;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        for r in &self.rows {
            out.write_record([
                r.bus.to_string(),
                r.name.clone(),
                r.vn_kv.to_string(),
                opt(r.c),
                opt(r.ikss_source_ka),
                opt(r.ikss_converter_ka),
                opt(r.ikss_ka),
                r.energized.to_string(),
                status_str(r.status).to_string(),
            ])?;
        }
        out.flush()
    }

    pub fn read_csv<R: BufRead>(mut r: R) -> std::io::Result<Self> {
        let mut meta = std::collections::HashMap::new();
        let mut body = String::new();
        let mut line = String::new();
        while r.read_line(&mut line)? > 0 {
            match line.strip_prefix("# ") {
                Some(kv) if body.is_empty() => {
                    let (k, v) = kv.trim_end().split_once(": ").ok_or_else(|| bad("bad metadata line"))?;
                    meta.insert(k.to_string(), v.to_string());
                }
                _ => body.push_str(&line),
            }
            line.clear();
        }
        let get = |k: &str| meta.get(k).cloned().ok_or_else(|| bad(format!("missing metadata {k}")));
        let parse_f = |s: &str| s.parse::<f64>().map_err(|e| bad(e.to_string()));
        let metadata = ResultMetadata {
            case: match get("case")?.as_str() {
                "max" => Case::Max,
                "min" => Case::Min,
                other => return Err(bad(format!("unknown case {other}"))),
            },
            lv_tolerance_percent: get("lv_tolerance_percent")?.parse().map_err(|_| bad("tolerance"))?,
            fault_buses: get("fault_buses")?,
            consider_converters: get("consider_converters")? == "true",
            s_base_mva: parse_f(&get("s_base_mva")?)?,
            engine_version: get("engine_version")?,
        };

        let mut rd = csv::Reader::from_reader(body.as_bytes());
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).ok_or_else(|| bad("short row"));
            let opt_f = |i: usize| -> std::io::Result<Option<f64>> {
                let s = field(i)?;
                if s.is_empty() {
                    Ok(None)
                } else {
                    parse_f(s).map(Some)
                }
            };
            rows.push(ResultRow {
                bus: BusId(field(0)?.parse().map_err(|_| bad("bus id"))?),
                name: field(1)?.to_string(),
                vn_kv: parse_f(field(2)?)?,
                c: opt_f(3)?,
                ikss_source_ka: opt_f(4)?,
                ikss_converter_ka: opt_f(5)?,
                ikss_ka: opt_f(6)?,
                energized: field(7)? == "true",
                status: parse_status(field(8)?).ok_or_else(|| bad("status"))?,
            });
        }
        Ok(ResultFile { metadata, rows })
    }
}
