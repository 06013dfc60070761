//! Thinning simulation of the division process.
//!
//! Each living cell carries one exponential clock at its dominating rate
//! `M(c)`. When the earliest clock rings at time `s`, a hyperplane is drawn
//! from `Λ(·|⟨c⟩)` and the division is accepted with probability
//! `ψ Λ(⟨c⟩) / M(c)`; otherwise the cell draws a fresh clock.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rand::Rng;

use super::{BoundaryPath, BranchingTessellation, CellId, Change, Tessellation};
use crate::driving::DrivingMeasure;
use crate::error::{Error, Result};
use crate::geometry::{Cell, Polytope};
use crate::kernels::{KernelContext, KernelSpec};

pub const DEFAULT_EVENT_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Maximum number of accepted divisions per run.
    pub event_cap: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { event_cap: DEFAULT_EVENT_CAP }
    }
}

#[derive(Debug, Clone, Copy)]
struct Clock {
    time: f64,
    id: CellId,
}

impl PartialEq for Clock {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Clock {}

impl PartialOrd for Clock {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Clock {
    // Reversed so that the max-heap pops the earliest clock.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.id.cmp(&self.id))
    }
}

fn exp_sample<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln() / rate
}

/// The mutable state of one run.
struct Engine<'a, R: Rng + ?Sized> {
    kernel: &'a KernelSpec,
    lambda: &'a DrivingMeasure,
    /// Window handed to kernel densities.
    kernel_window: &'a Polytope,
    history: BranchingTessellation,
    live: BTreeMap<CellId, Cell>,
    bounds: BTreeMap<CellId, f64>,
    clocks: BinaryHeap<Clock>,
    opts: SimOptions,
    rng: &'a mut R,
}

impl<'a, R: Rng + ?Sized> Engine<'a, R> {
    fn add_live(&mut self, id: CellId, cell: Cell, now: f64) -> Result<()> {
        let bound = self.kernel.proposal_bound(&cell, self.lambda).ok_or(Error::NonModerate)?;
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(Error::NonModerate);
        }
        if bound > 0.0 {
            let t = now + exp_sample(self.rng, bound);
            self.clocks.push(Clock { time: t, id });
        }
        self.bounds.insert(id, bound);
        self.live.insert(id, cell);
        Ok(())
    }

    fn rearm(&mut self, id: CellId, now: f64) {
        let bound = self.bounds[&id];
        let t = now + exp_sample(self.rng, bound);
        self.clocks.push(Clock { time: t, id });
    }

    /// Runs clocks up to (excluding) `until`, reading `environment`.
    fn run_until(&mut self, until: f64, environment: &[Cell]) -> Result<()> {
        while let Some(&Clock { time: s, id }) = self.clocks.peek() {
            if s >= until {
                break;
            }
            self.clocks.pop();
            let Some(cell) = self.live.get(&id) else { continue };
            let hp = self.lambda.sample_hyperplane(cell, self.rng)?;
            let ctx = KernelContext { time: s, lambda: self.lambda, window: self.kernel_window, live: &self.live, environment };
            let psi = self.kernel.density(&ctx, id, cell, &hp);
            let accept = psi * self.lambda.cell_mass(cell) / self.bounds[&id];
            let u: f64 = self.rng.gen();
            if u >= accept {
                self.rearm(id, s);
                continue;
            }
            if self.history.events().len() >= self.opts.event_cap {
                return Err(Error::BudgetExceeded { cap: self.opts.event_cap });
            }
            match self.history.push_division(s, id, hp) {
                Ok((plus, minus)) => {
                    self.live.remove(&id);
                    self.bounds.remove(&id);
                    let cp = self.history.cell(plus)?.clone();
                    let cm = self.history.cell(minus)?.clone();
                    self.add_live(plus, cp, s)?;
                    self.add_live(minus, cm, s)?;
                }
                // A cut inside the tolerance band: treated as a rejection.
                Err(Error::DegenerateChild) | Err(Error::NotHitting { .. }) => self.rearm(id, s),
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidTime(t));
    }
    Ok(())
}

fn check_inputs(initial: &Tessellation, kernel: &KernelSpec, lambda: &DrivingMeasure) -> Result<()> {
    if initial.window.dimension() != lambda.dimension() {
        return Err(Error::DimensionMismatch { expected: lambda.dimension(), found: initial.window.dimension() });
    }
    kernel.check_compatible(lambda)
}

/// Simulates the branching tessellation on `initial.window` from time 0 to
/// `t_end`.
pub fn simulate<R: Rng + ?Sized>(
    initial: &Tessellation,
    kernel: &KernelSpec,
    lambda: &DrivingMeasure,
    t_end: f64,
    rng: &mut R,
    opts: SimOptions,
) -> Result<BranchingTessellation> {
    check_time(t_end)?;
    check_inputs(initial, kernel, lambda)?;
    initial.validate_partial()?;
    let mut engine = Engine {
        kernel,
        lambda,
        kernel_window: &initial.window,
        history: BranchingTessellation::new(initial.window.clone(), initial.cells.clone()),
        live: BTreeMap::new(),
        bounds: BTreeMap::new(),
        clocks: BinaryHeap::new(),
        opts,
        rng,
    };
    for (i, c) in initial.cells.iter().enumerate() {
        engine.add_live(CellId(i), c.clone(), 0.0)?;
    }
    engine.run_until(t_end, &[])?;
    let mut history = engine.history;
    history.set_t_end(t_end);
    Ok(history)
}

/// Simulates the inner cells of `window` given the evolution outside it.
///
/// The population starts from `inner_initial` and receives the immigrants
/// of `boundary` at their arrival times. Interacting kernels see, besides
/// the inner population, every cell of `outer` alive at the current time
/// that is not inside the interior of `window`.
pub fn simulate_conditional<R: Rng + ?Sized>(
    window: &Polytope,
    boundary: &BoundaryPath,
    inner_initial: &Tessellation,
    kernel: &KernelSpec,
    lambda: &DrivingMeasure,
    outer: &BranchingTessellation,
    rng: &mut R,
    opts: SimOptions,
) -> Result<BranchingTessellation> {
    let t_end = outer.t_end();
    check_time(t_end)?;
    check_inputs(inner_initial, kernel, lambda)?;
    for c in &inner_initial.cells {
        if !c.polytope.is_inside(window) {
            return Err(Error::InconsistentBoundary("initial inner cell outside the window".into()));
        }
    }
    inner_initial.validate_partial()?;
    let mut engine = Engine {
        kernel,
        lambda,
        kernel_window: outer.window(),
        history: BranchingTessellation::new(window.clone(), inner_initial.cells.clone()),
        live: BTreeMap::new(),
        bounds: BTreeMap::new(),
        clocks: BinaryHeap::new(),
        opts,
        rng,
    };
    for (i, c) in inner_initial.cells.iter().enumerate() {
        engine.add_live(CellId(i), c.clone(), 0.0)?;
    }

    let outside = |c: &Cell| !c.polytope.is_inside_interior_of(window);
    let mut replay = outer.replay();
    replay.advance_to(0.0);
    let mut environment: Vec<Cell> = replay.live().values().filter(|c| outside(c)).cloned().collect();
    let mut immigrants = boundary.immigrants.iter().peekable();

    loop {
        let next_outer = replay.peek_time().filter(|t| *t <= t_end);
        let next_imm = immigrants.peek().map(|(t, _)| *t).filter(|t| *t <= t_end);
        let next = match (next_outer, next_imm) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => break,
        };
        engine.run_until(next, &environment)?;
        while immigrants.peek().is_some_and(|(t, _)| *t <= next) {
            let (t, cell) = immigrants.next().expect("peeked");
            if engine.live.values().any(|c| c.polytope.intersection(&cell.polytope).is_some_and(|x| x.area() > 1e-9)) {
                return Err(Error::InconsistentBoundary(format!("immigrant at {t} overlaps living inner cells")));
            }
            let id = engine.history.push_immigrant(*t, cell.clone());
            engine.add_live(id, cell.clone(), *t)?;
        }
        let mut changed = false;
        while replay.peek_time().is_some_and(|t| t <= next) {
            if let Some(Change::Division(_, e)) = replay.apply_next() {
                changed |= outside(outer.cell(e.parent)?);
            }
        }
        if changed {
            environment = replay.live().values().filter(|c| outside(c)).cloned().collect();
        }
    }
    engine.run_until(t_end, &environment)?;
    let mut history = engine.history;
    history.set_t_end(t_end);
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Colour;
    use crate::rng::StreamSeed;

    fn line_window(len: f64) -> Tessellation {
        Tessellation::single(Polytope::interval(0.0, len).unwrap())
    }

    #[test]
    fn zero_horizon_keeps_initial_state() {
        let t = line_window(10.0);
        let h = simulate(&t, &KernelSpec::stit(), &DrivingMeasure::lebesgue_line(), 0.0, &mut StreamSeed(1).replicate(0), SimOptions::default())
            .unwrap();
        assert!(h.events().is_empty());
        assert_eq!(h.state_at(0.0), t);
        assert_eq!(h.state_at(1.0), t);
    }

    #[test]
    fn event_times_increase_and_states_stay_valid() {
        let w = Polytope::rectangle([0.0, 0.0], [4.0, 4.0]).unwrap();
        let lambda = DrivingMeasure::isotropic_plane(vec![0.5, 0.5]).unwrap();
        let k = KernelSpec::size_balance(0.3).unwrap();
        let mut rng = StreamSeed(3).replicate(0);
        let h = simulate(&Tessellation::single(w), &k, &lambda, 1.0, &mut rng, SimOptions::default()).unwrap();
        assert!(h.events().len() > 3);
        assert!(h.events().windows(2).all(|p| p[0].time < p[1].time));
        let mut prev = 0;
        for i in 0..16 {
            let s = i as f64 / 15.0;
            let t = h.state_at(s);
            t.validate().unwrap();
            assert!(t.len() >= prev);
            prev = t.len();
        }
        assert_eq!(prev, 1 + h.events().len());
    }

    #[test]
    fn budget_is_enforced() {
        let t = line_window(100.0);
        let r = simulate(&t, &KernelSpec::stit(), &DrivingMeasure::lebesgue_line(), 1.0, &mut StreamSeed(1).replicate(0), SimOptions { event_cap: 5 });
        assert_eq!(r.unwrap_err(), Error::BudgetExceeded { cap: 5 });
    }

    #[test]
    fn directional_kernel_needs_a_bound() {
        let w = Polytope::rectangle([0.0, 0.0], [1.0, 1.0]).unwrap();
        let lambda = crate::kernels::directional_driving_measure();
        let r = simulate(&Tessellation::single(w.clone()), &KernelSpec::directional(None), &lambda, 1.0, &mut StreamSeed(1).replicate(0), SimOptions::default());
        assert_eq!(r.unwrap_err(), Error::NonModerate);
        let h = simulate(&Tessellation::single(w), &KernelSpec::directional(Some(1.0)), &lambda, 1.0, &mut StreamSeed(1).replicate(0), SimOptions::default()).unwrap();
        h.state_at(1.0).validate().unwrap();
    }

    #[test]
    fn same_seed_same_history() {
        let w = Polytope::rectangle([0.0, 0.0], [3.0, 3.0]).unwrap();
        let lambda = DrivingMeasure::isotropic_plane(vec![0.5, 0.5]).unwrap();
        let k = KernelSpec::mutation(0.5, crate::kernels::BetaFunction::HalfOnePlusFraction, Default::default()).unwrap();
        let a = simulate(&Tessellation::single(w.clone()), &k, &lambda, 1.0, &mut StreamSeed(9).replicate(2), SimOptions::default()).unwrap();
        let b = simulate(&Tessellation::single(w), &k, &lambda, 1.0, &mut StreamSeed(9).replicate(2), SimOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn conditional_without_inner_cells_is_empty() {
        let w = Polytope::rectangle([0.0, 0.0], [4.0, 4.0]).unwrap();
        let inner = Polytope::rectangle([1.0, 1.0], [3.0, 3.0]).unwrap();
        let lambda = DrivingMeasure::isotropic_plane(vec![1.0]).unwrap();
        let outer = BranchingTessellation::new(w.clone(), vec![Cell::new(w, Colour(0), 0.0)]);
        let mut outer = outer;
        outer.set_t_end(1.0);
        let empty = Tessellation { window: inner.clone(), cells: vec![] };
        let h = simulate_conditional(&inner, &BoundaryPath::empty(inner.clone()), &empty, &KernelSpec::stit(), &lambda, &outer, &mut StreamSeed(1).replicate(0), SimOptions::default())
            .unwrap();
        for s in [0.0, 0.5, 1.0] {
            assert!(h.state_at(s).is_empty());
        }
    }

    #[test]
    fn conditional_rejects_overlapping_immigrants() {
        let w = Polytope::rectangle([0.0, 0.0], [4.0, 4.0]).unwrap();
        let inner = Polytope::rectangle([1.0, 1.0], [3.0, 3.0]).unwrap();
        let lambda = DrivingMeasure::isotropic_plane(vec![1.0]).unwrap();
        let mut outer = BranchingTessellation::new(w.clone(), vec![Cell::new(w, Colour(0), 0.0)]);
        outer.set_t_end(1.0);
        let c = Cell::new(Polytope::rectangle([1.5, 1.5], [2.5, 2.5]).unwrap(), Colour(0), 0.0);
        let init = Tessellation { window: inner.clone(), cells: vec![c.clone()] };
        let boundary = BoundaryPath { window: inner.clone(), immigrants: vec![(0.5, Cell { birth_time: 0.5, ..c })] };
        let r = simulate_conditional(&inner, &boundary, &init, &KernelSpec::constant(1e-9).unwrap(), &lambda, &outer, &mut StreamSeed(1).replicate(0), SimOptions::default());
        assert!(matches!(r, Err(Error::InconsistentBoundary(_))));
    }
}
