//! JSONL event logs: a header line, the initial cells, then one line per
//! division or immigration in time order.

use brt_core::simulator::{BranchingTessellation, CellId, Change};
use brt_core::{BicolouredHyperplane, Cell, Colour, SpatialHyperplane};
use serde::{Deserialize, Serialize};

use crate::config::{CellSpec, ConfigError, KernelConfig, LambdaSpec, WindowSpec};

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub schema_version: String,
    pub dimension: usize,
    pub window: WindowSpec,
    pub colours: Vec<String>,
    pub seed: u64,
    pub replicate: u64,
    pub t_end: f64,
    pub kernel: KernelConfig,
    pub lambda: LambdaSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct InitialCell {
    id: usize,
    #[serde(flatten)]
    cell: CellSpec,
    birth_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct InitialLine {
    cells: Vec<InitialCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventLine {
    s: f64,
    parent: usize,
    u: Vec<f64>,
    r: f64,
    col_plus: usize,
    col_minus: usize,
    child_plus: usize,
    child_minus: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImmigrantLine {
    immigrant: usize,
    s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    interval: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vertices: Option<Vec<[f64; 2]>>,
    colour: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Line {
    Event(EventLine),
    Immigrant(ImmigrantLine),
}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(format!("event log: {}", msg.into()))
}

/// Serialises a history. Identical inputs give identical bytes.
pub fn write_log(header: &LogHeader, history: &BranchingTessellation) -> String {
    let mut out = String::new();
    let mut push = |v: String| {
        out.push_str(&v);
        out.push('\n');
    };
    push(serde_json::to_string(header).expect("header serialises"));
    let cells = history
        .initial_ids()
        .iter()
        .map(|id| {
            let c = history.cell(*id).expect("initial cell");
            InitialCell { id: id.0, cell: CellSpec::from_cell(c), birth_time: c.birth_time }
        })
        .collect();
    push(serde_json::to_string(&InitialLine { cells }).expect("cells serialise"));
    let dimension = history.window().dimension();
    let mut replay = history.replay();
    while let Some(change) = replay.apply_next() {
        let line = match change {
            Change::Division(_, e) => {
                let n = e.hyperplane.spatial.normal;
                Line::Event(EventLine {
                    s: e.time,
                    parent: e.parent.0,
                    u: if dimension == 1 { vec![n[0]] } else { n.to_vec() },
                    r: e.hyperplane.spatial.offset,
                    col_plus: e.hyperplane.colour_plus.0,
                    col_minus: e.hyperplane.colour_minus.0,
                    child_plus: e.child_plus.0,
                    child_minus: e.child_minus.0,
                })
            }
            Change::Immigration(m) => {
                let c = history.cell(m.cell).expect("immigrant cell");
                let spec = CellSpec::from_cell(c);
                Line::Immigrant(ImmigrantLine { immigrant: m.cell.0, s: m.time, interval: spec.interval, vertices: spec.vertices, colour: spec.colour })
            }
        };
        push(serde_json::to_string(&line).expect("line serialises"));
    }
    out
}

/// Parses a log and replays it, recomputing every cell by splitting.
pub fn read_log(text: &str) -> Result<(LogHeader, BranchingTessellation), ConfigError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header_line = lines.next().ok_or_else(|| bad("empty"))?;
    let probe: serde_json::Value = serde_json::from_str(header_line)?;
    let version = probe.get("schema_version").and_then(|v| v.as_str()).ok_or_else(|| bad("missing schema_version"))?;
    let major = version.split('.').next().unwrap_or("");
    if major != SCHEMA_VERSION.split('.').next().expect("version") {
        return Err(bad(format!("unsupported schema version {version}")));
    }
    let header: LogHeader = serde_json::from_value(probe)?;
    let window = header.window.polytope()?;
    let initial: InitialLine = serde_json::from_str(lines.next().ok_or_else(|| bad("missing initial cells"))?)?;
    let mut cells = Vec::with_capacity(initial.cells.len());
    for (i, c) in initial.cells.iter().enumerate() {
        if c.id != i {
            return Err(bad(format!("initial cell ids must be 0..n, found {} at position {i}", c.id)));
        }
        cells.push(Cell::new(c.cell.polytope()?, Colour(c.cell.colour), c.birth_time));
    }
    let mut history = BranchingTessellation::new(window, cells);
    for line in lines {
        match serde_json::from_str::<Line>(line)? {
            Line::Event(e) => {
                let normal = match e.u.as_slice() {
                    [x] => [*x, 0.0],
                    [x, y] => [*x, *y],
                    _ => return Err(bad("normal must have one or two components")),
                };
                let hp = BicolouredHyperplane {
                    spatial: SpatialHyperplane { normal, offset: e.r },
                    colour_plus: Colour(e.col_plus),
                    colour_minus: Colour(e.col_minus),
                };
                let (p, m) = history.push_division(e.s, CellId(e.parent), hp)?;
                if (p.0, m.0) != (e.child_plus, e.child_minus) {
                    return Err(bad(format!("child ids {}/{} do not match replay ({p}/{m})", e.child_plus, e.child_minus)));
                }
            }
            Line::Immigrant(m) => {
                let spec = CellSpec { interval: m.interval, vertices: m.vertices, colour: m.colour };
                let id = history.push_immigrant(m.s, Cell::new(spec.polytope()?, Colour(m.colour), m.s));
                if id.0 != m.immigrant {
                    return Err(bad(format!("immigrant id {} does not match replay ({id})", m.immigrant)));
                }
            }
        }
    }
    history.set_t_end(header.t_end);
    Ok((header, history))
}
