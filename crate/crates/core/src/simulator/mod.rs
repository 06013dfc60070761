//! Branching tessellations: histories of binary cell divisions, their
//! replay, and window projections.

mod engine;

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{BicolouredHyperplane, Cell, Colour, Polytope, TOL_GEOM};

pub use engine::{simulate, simulate_conditional, SimOptions, DEFAULT_EVENT_CAP};

/// Stable identifier of a cell within one history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId(pub usize);

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Cells in a window. A full tessellation covers the window; the inner part
/// of a conditional history need not.
#[derive(Debug, Clone, PartialEq)]
pub struct Tessellation {
    pub window: Polytope,
    pub cells: Vec<Cell>,
}

impl Tessellation {
    /// The window as a single cell of colour 0.
    pub fn single(window: Polytope) -> Self {
        let cell = Cell::new(window.clone(), Colour(0), 0.0);
        Tessellation { window, cells: vec![cell] }
    }

    /// A window of `[lo, hi]` tiled by the unit lattice `shift + ℤ`, cut at
    /// the window ends. Pieces shorter than the geometric tolerance are merged
    /// into their neighbour.
    pub fn shifted_unit_lattice(lo: f64, hi: f64, shift: f64, colour: Colour) -> Result<Self> {
        let window = Polytope::interval(lo, hi)?;
        let mut cuts = Vec::new();
        let mut k = (lo - shift).ceil();
        loop {
            let x = shift + k;
            if x >= hi - 1e-9 {
                break;
            }
            if x > lo + 1e-9 {
                cuts.push(x);
            }
            k += 1.0;
        }
        let mut cells = Vec::with_capacity(cuts.len() + 1);
        let mut a = lo;
        for x in cuts.into_iter().chain(std::iter::once(hi)) {
            cells.push(Cell::new(Polytope::interval(a, x)?, colour, 0.0));
            a = x;
        }
        Ok(Tessellation { window, cells })
    }

    /// A `nx × ny` grid of equal rectangles covering a box.
    pub fn grid(lo: [f64; 2], hi: [f64; 2], nx: usize, ny: usize, colour: impl Fn(usize, usize) -> Colour) -> Result<Self> {
        let window = Polytope::rectangle(lo, hi)?;
        let dx = (hi[0] - lo[0]) / nx as f64;
        let dy = (hi[1] - lo[1]) / ny as f64;
        let mut cells = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                let x0 = lo[0] + dx * i as f64;
                let y0 = lo[1] + dy * j as f64;
                let x1 = if i + 1 == nx { hi[0] } else { x0 + dx };
                let y1 = if j + 1 == ny { hi[1] } else { y0 + dy };
                cells.push(Cell::new(Polytope::rectangle([x0, y0], [x1, y1])?, colour(i, j), 0.0));
            }
        }
        Ok(Tessellation { window, cells })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Checks containment, pairwise interior-disjointness and coverage.
    pub fn validate(&self) -> Result<()> {
        self.validate_partial()?;
        let total: f64 = self.cells.iter().map(|c| c.polytope.area()).sum();
        let w = self.window.area();
        if (total - w).abs() > 1e-9 * w {
            return Err(Error::InvalidTessellation(format!("cells cover {total} of a window of size {w}")));
        }
        Ok(())
    }

    /// As [`validate`](Self::validate) without the coverage requirement.
    pub fn validate_partial(&self) -> Result<()> {
        for (i, c) in self.cells.iter().enumerate() {
            if c.polytope.dimension() != self.window.dimension() {
                return Err(Error::DimensionMismatch { expected: self.window.dimension(), found: c.polytope.dimension() });
            }
            if !c.polytope.is_inside(&self.window) {
                return Err(Error::InvalidTessellation(format!("cell {i} leaves the window")));
            }
        }
        for i in 0..self.cells.len() {
            for j in i + 1..self.cells.len() {
                if let Some(x) = self.cells[i].polytope.intersection(&self.cells[j].polytope) {
                    if x.area() > TOL_GEOM {
                        return Err(Error::InvalidTessellation(format!("cells {i} and {j} overlap")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// One division: `parent` is replaced by the two halves cut by `hyperplane`.
#[derive(Debug, Clone, PartialEq)]
pub struct DivisionEvent {
    pub time: f64,
    pub parent: CellId,
    pub hyperplane: BicolouredHyperplane,
    pub child_plus: CellId,
    pub child_minus: CellId,
}

/// A cell entering the population from outside at `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Immigration {
    pub time: f64,
    pub cell: CellId,
}

#[derive(Debug, Clone, PartialEq)]
struct Lineage {
    /// Index of the event that created this cell.
    born_by: Option<usize>,
    /// Index of the event that divided this cell.
    divided_by: Option<usize>,
}

/// A finite forest of binary family trees: the initial cells, every cell
/// ever alive, and the ordered division events.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchingTessellation {
    window: Polytope,
    initial: Vec<CellId>,
    immigrants: Vec<Immigration>,
    events: Vec<DivisionEvent>,
    arena: Vec<Cell>,
    lineage: Vec<Lineage>,
    t_end: f64,
}

impl BranchingTessellation {
    /// An empty history with the given initial cells (ids `0..n`).
    pub fn new(window: Polytope, initial: Vec<Cell>) -> Self {
        let n = initial.len();
        BranchingTessellation {
            window,
            initial: (0..n).map(CellId).collect(),
            immigrants: Vec::new(),
            events: Vec::new(),
            lineage: vec![Lineage { born_by: None, divided_by: None }; n],
            arena: initial,
            t_end: 0.0,
        }
    }

    /// Rebuilds a history from its initial cells and a division log,
    /// recomputing every child by splitting. Child ids in the log must be
    /// consecutive arena indices in event order.
    pub fn from_events(window: Polytope, initial: Vec<Cell>, events: &[(f64, CellId, BicolouredHyperplane)], t_end: f64) -> Result<Self> {
        let mut h = BranchingTessellation::new(window, initial);
        for (s, parent, hp) in events {
            h.push_division(*s, *parent, *hp)?;
        }
        h.t_end = t_end;
        Ok(h)
    }

    pub fn window(&self) -> &Polytope {
        &self.window
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn set_t_end(&mut self, t: f64) {
        self.t_end = t;
    }

    pub fn initial_ids(&self) -> &[CellId] {
        &self.initial
    }

    pub fn initial(&self) -> Tessellation {
        Tessellation { window: self.window.clone(), cells: self.initial.iter().map(|id| self.arena[id.0].clone()).collect() }
    }

    pub fn events(&self) -> &[DivisionEvent] {
        &self.events
    }

    pub fn immigrants(&self) -> &[Immigration] {
        &self.immigrants
    }

    pub fn cell(&self, id: CellId) -> Result<&Cell> {
        self.arena.get(id.0).ok_or(Error::UnknownCell(id))
    }

    pub fn num_cells_ever(&self) -> usize {
        self.arena.len()
    }

    /// Whether `id` is alive at time `s` (born at or before `s`, not yet
    /// divided at `s`).
    pub fn is_alive(&self, id: CellId, s: f64) -> bool {
        let Some(cell) = self.arena.get(id.0) else { return false };
        let lin = &self.lineage[id.0];
        let born = match lin.born_by {
            Some(_) => cell.birth_time <= s,
            None => self.immigrants.iter().find(|m| m.cell == id).is_none_or(|m| m.time <= s),
        };
        born && lin.divided_by.is_none_or(|e| self.events[e].time > s)
    }

    /// Age of a living cell.
    pub fn age(&self, id: CellId, s: f64) -> Result<f64> {
        if !self.is_alive(id, s) {
            return Err(Error::CellNotAlive(id));
        }
        Ok(s - self.arena[id.0].birth_time)
    }

    pub(crate) fn push_cell(&mut self, cell: Cell) -> CellId {
        self.arena.push(cell);
        self.lineage.push(Lineage { born_by: None, divided_by: None });
        CellId(self.arena.len() - 1)
    }

    pub fn push_immigrant(&mut self, time: f64, cell: Cell) -> CellId {
        let id = self.push_cell(cell);
        self.immigrants.push(Immigration { time, cell: id });
        id
    }

    /// Appends a division of `parent` at time `s`, computing the children.
    pub fn push_division(&mut self, s: f64, parent: CellId, hp: BicolouredHyperplane) -> Result<(CellId, CellId)> {
        let p = self.arena.get(parent.0).ok_or(Error::UnknownCell(parent))?;
        if self.lineage[parent.0].divided_by.is_some() {
            return Err(Error::CellNotAlive(parent));
        }
        if let Some(last) = self.events.last() {
            if s <= last.time {
                return Err(Error::InvalidTime(s));
            }
        }
        let (plus, minus) = p.polytope.split(&hp.spatial)?;
        let k = self.events.len();
        let child_plus = self.push_cell(Cell::new(plus, hp.colour_plus, s));
        let child_minus = self.push_cell(Cell::new(minus, hp.colour_minus, s));
        self.lineage[child_plus.0].born_by = Some(k);
        self.lineage[child_minus.0].born_by = Some(k);
        self.lineage[parent.0].divided_by = Some(k);
        self.events.push(DivisionEvent { time: s, parent, hyperplane: hp, child_plus, child_minus });
        Ok((child_plus, child_minus))
    }

    /// A replay cursor positioned before time 0.
    pub fn replay(&self) -> Replay<'_> {
        Replay { history: self, live: BTreeMap::new(), next_event: 0, next_immigrant: 0, started: false }
    }

    /// The living cells at time `s` (right-continuous), keyed by id.
    pub fn live_at(&self, s: f64) -> BTreeMap<CellId, Cell> {
        let mut r = self.replay();
        r.advance_to(s);
        r.live
    }

    /// The tessellation `T_s`.
    pub fn state_at(&self, s: f64) -> Tessellation {
        Tessellation { window: self.window.clone(), cells: self.live_at(s).into_values().collect() }
    }

    /// Leaves of the family tree below `root`, with the events inside it.
    pub fn descendants(&self, root: CellId) -> Result<FamilyTree> {
        if root.0 >= self.arena.len() {
            return Err(Error::UnknownCell(root));
        }
        let mut events = Vec::new();
        let mut leaves = Vec::new();
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            match self.lineage[id.0].divided_by {
                Some(k) if self.events[k].time <= self.t_end => {
                    events.push(k);
                    let e = &self.events[k];
                    stack.push(e.child_minus);
                    stack.push(e.child_plus);
                }
                _ => leaves.push(id),
            }
        }
        events.sort_unstable();
        leaves.sort_unstable();
        Ok(FamilyTree { root, events, leaves })
    }

    /// The immigration schedule into `w`: every cell that lies in the
    /// interior of `w` while its parent did not, with its birth time.
    pub fn outer_boundary_path(&self, w: &Polytope) -> BoundaryPath {
        let mut immigrants = Vec::new();
        for e in &self.events {
            if self.arena[e.parent.0].polytope.is_inside_interior_of(w) {
                continue;
            }
            for child in [e.child_plus, e.child_minus] {
                let c = &self.arena[child.0];
                if c.polytope.is_inside_interior_of(w) {
                    immigrants.push((e.time, c.clone()));
                }
            }
        }
        BoundaryPath { window: w.clone(), immigrants }
    }
}

/// Cells of `t` lying in the interior of `w`.
pub fn inner_projection(t: &Tessellation, w: &Polytope) -> Vec<Cell> {
    t.cells.iter().filter(|c| c.polytope.is_inside_interior_of(w)).cloned().collect()
}

/// Incremental replay of a history in time order.
#[derive(Debug, Clone)]
pub struct Replay<'a> {
    history: &'a BranchingTessellation,
    live: BTreeMap<CellId, Cell>,
    next_event: usize,
    next_immigrant: usize,
    started: bool,
}

/// The next change produced by a replay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Change<'a> {
    Division(usize, &'a DivisionEvent),
    Immigration(Immigration),
}

impl<'a> Replay<'a> {
    fn start(&mut self) {
        if !self.started {
            self.started = true;
            for id in &self.history.initial {
                self.live.insert(*id, self.history.arena[id.0].clone());
            }
        }
    }

    pub fn live(&self) -> &BTreeMap<CellId, Cell> {
        &self.live
    }

    /// Time of the next pending change. Immigrations precede divisions at
    /// equal times.
    pub fn peek_time(&self) -> Option<f64> {
        self.peek().map(|c| match c {
            Change::Division(_, e) => e.time,
            Change::Immigration(m) => m.time,
        })
    }

    pub fn peek(&self) -> Option<Change<'a>> {
        let h = self.history;
        let e = h.events.get(self.next_event);
        let m = h.immigrants.get(self.next_immigrant);
        match (e, m) {
            (Some(e), Some(m)) if m.time <= e.time => Some(Change::Immigration(*m)),
            (Some(e), _) => Some(Change::Division(self.next_event, e)),
            (None, Some(m)) => Some(Change::Immigration(*m)),
            (None, None) => None,
        }
    }

    /// Applies the next change and returns it.
    pub fn apply_next(&mut self) -> Option<Change<'a>> {
        self.start();
        let change = self.peek()?;
        let h = self.history;
        match change {
            Change::Division(_, e) => {
                self.live.remove(&e.parent);
                self.live.insert(e.child_plus, h.arena[e.child_plus.0].clone());
                self.live.insert(e.child_minus, h.arena[e.child_minus.0].clone());
                self.next_event += 1;
            }
            Change::Immigration(m) => {
                self.live.insert(m.cell, h.arena[m.cell.0].clone());
                self.next_immigrant += 1;
            }
        }
        Some(change)
    }

    /// Applies all changes at times `≤ s`.
    pub fn advance_to(&mut self, s: f64) {
        self.start();
        while self.peek_time().is_some_and(|t| t <= s) {
            self.apply_next();
        }
    }

    /// Applies all changes at times `< s`, leaving the state `T_{s−}`.
    pub fn advance_before(&mut self, s: f64) {
        self.start();
        while self.peek_time().is_some_and(|t| t < s) {
            self.apply_next();
        }
    }
}

/// The binary subtree below a root cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyTree {
    pub root: CellId,
    /// Indices of division events in the subtree, in time order.
    pub events: Vec<usize>,
    /// Cells of the subtree alive at the end of the history.
    pub leaves: Vec<CellId>,
}

impl FamilyTree {
    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }
}

/// Cells immigrating into a window, as `(arrival time, cell)` in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPath {
    pub window: Polytope,
    pub immigrants: Vec<(f64, Cell)>,
}

impl BoundaryPath {
    pub fn empty(window: Polytope) -> Self {
        BoundaryPath { window, immigrants: Vec::new() }
    }
}
