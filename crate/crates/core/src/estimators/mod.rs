//! Monte Carlo estimators for entropy, energy, pressure and excess free
//! energy densities of simulated branching tessellations.
//!
//! Time-integrated cell averages are taken over `K` stratified times per
//! replicate and over the cells whose centroid lies in the observation
//! window, normalised by its volume. Error bars come from replicate-level
//! values only, since cells within a replicate are dependent.

pub mod stats;

use rand::Rng;
use rayon::prelude::*;

use crate::driving::DrivingMeasure;
use crate::error::{Error, Result};
use crate::geometry::{BicolouredHyperplane, Cell, Polytope};
use crate::kernels::{KernelContext, KernelSpec};
use crate::rng::{SimRng, StreamSeed};
use crate::simulator::{BranchingTessellation, CellId, Change};

/// Fraction of vanishing-reference draws above which a relative entropy is
/// reported as infinite.
pub const DIVERGENCE_FRACTION: f64 = 1e-3;

/// `ρ(a) = 1 − a + a ln a`, with `ρ(0) = 1`.
pub fn rho(a: f64) -> Result<f64> {
    if a < 0.0 || a.is_nan() {
        return Err(Error::NegativeInput(a));
    }
    if a == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - a + a * a.ln())
}

/// `ψ_Ψ ρ(ψ_Φ / ψ_Ψ)`, or `None` when `ψ_Ψ = 0 < ψ_Φ`.
fn rel_integrand(phi: f64, psi: f64) -> Option<f64> {
    if psi > 0.0 {
        Some(psi * rho(phi / psi).expect("densities are non-negative"))
    } else if phi > 0.0 {
        None
    } else {
        Some(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub value: f64,
    pub std_error: f64,
}

/// Components of a free-energy estimate. `direct` is the Palm average of
/// per-cell relative entropies, which equals `h − u + v` in expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakdown {
    pub h: Component,
    pub u: Component,
    pub v: Component,
    pub direct: Component,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
    pub breakdown: Option<Breakdown>,
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    if xs.iter().all(|x| *x == xs[0]) {
        return (xs[0], 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

impl Estimate {
    /// Mean and standard error of i.i.d. values.
    pub fn from_samples(xs: &[f64]) -> Self {
        let (value, std_error) = mean_se(xs);
        Estimate { value, std_error, n: xs.len(), breakdown: None }
    }

    /// Whether `target` lies within `k` standard errors.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

impl Component {
    fn from_samples(xs: &[f64]) -> Self {
        let (value, std_error) = mean_se(xs);
        Component { value, std_error }
    }
}

/// Where cells are counted: an observation window well inside the
/// simulation window.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationScheme {
    simulation: Polytope,
    observation: Polytope,
    margin: f64,
}

impl ObservationScheme {
    /// Requires the observation window dilated by `margin` to fit inside the
    /// simulation window.
    pub fn new(simulation: Polytope, observation: Polytope, margin: f64) -> Result<Self> {
        if simulation.dimension() != observation.dimension() {
            return Err(Error::DimensionMismatch { expected: simulation.dimension(), found: observation.dimension() });
        }
        if !(margin >= 0.0) || clearance(&observation, &simulation) < margin - 1e-12 {
            return Err(Error::InsufficientMargin { margin });
        }
        Ok(ObservationScheme { simulation, observation, margin })
    }

    /// Centred cubes (intervals in d = 1) of the given sides.
    pub fn centred(dimension: usize, simulation_side: f64, observation_side: f64, margin: f64) -> Result<Self> {
        let cube = |side: f64| match dimension {
            1 => Polytope::interval(-0.5 * side, 0.5 * side),
            2 => Polytope::rectangle([-0.5 * side, -0.5 * side], [0.5 * side, 0.5 * side]),
            d => Err(Error::DimensionMismatch { expected: 2, found: d }),
        };
        ObservationScheme::new(cube(simulation_side)?, cube(observation_side)?, margin)
    }

    pub fn simulation(&self) -> &Polytope {
        &self.simulation
    }

    pub fn observation(&self) -> &Polytope {
        &self.observation
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn volume(&self) -> f64 {
        self.observation.area()
    }

    /// Checks that the margin covers the interaction range of `kernel`.
    pub fn check_kernel(&self, kernel: &KernelSpec) -> Result<()> {
        if kernel.range() > self.margin {
            return Err(Error::InsufficientMargin { margin: self.margin });
        }
        Ok(())
    }

    fn observes(&self, c: &Cell) -> bool {
        self.observation.contains_point(c.polytope.centroid())
    }
}

/// Smallest distance from a vertex of `inner` to the boundary lines of
/// `outer` (negative if a vertex lies outside).
fn clearance(inner: &Polytope, outer: &Polytope) -> f64 {
    if let (Some((a, b)), Some((c, d))) = (inner.as_interval(), outer.as_interval()) {
        return (a - c).min(d - b);
    }
    let ws = outer.vertices();
    let vs = inner.vertices();
    let mut best = f64::INFINITY;
    for i in 0..ws.len() {
        let a = ws[i];
        let b = ws[(i + 1) % ws.len()];
        let e = [b[0] - a[0], b[1] - a[1]];
        let len = e[0].hypot(e[1]);
        for v in &vs {
            let dist = (e[0] * (v[1] - a[1]) - e[1] * (v[0] - a[0])) / len;
            best = best.min(dist);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorOptions {
    /// Stratified times per replicate.
    pub strata: usize,
    /// Hyperplane draws per sampled cell.
    pub n_mc: usize,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions { strata: 32, n_mc: 16 }
    }
}

/// `∫⟨c⟩ ψ_Ψ ρ(ψ_Φ/ψ_Ψ) dΛ` by `n_mc` draws from `Λ(·|⟨c⟩)`.
pub fn cell_rel_entropy<R: Rng + ?Sized>(
    phi: impl Fn(&BicolouredHyperplane) -> f64,
    psi: impl Fn(&BicolouredHyperplane) -> f64,
    c: &Cell,
    lambda: &DrivingMeasure,
    n_mc: usize,
    rng: &mut R,
) -> Result<Estimate> {
    let mass = lambda.cell_mass(c);
    if !(mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    let mut xs = Vec::with_capacity(n_mc);
    let mut diverging = 0;
    for _ in 0..n_mc {
        let h = lambda.sample_hyperplane(c, rng)?;
        match rel_integrand(phi(&h), psi(&h)) {
            Some(x) => xs.push(mass * x),
            None => diverging += 1,
        }
    }
    if diverging > 0 {
        return Err(Error::Diverged { diverging, draws: n_mc });
    }
    Ok(Estimate::from_samples(&xs))
}

/// Per-replicate accumulators, already normalised by volume and time.
#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    h: f64,
    u: f64,
    v: f64,
    direct: f64,
    draws: usize,
    diverging: usize,
}

/// What a Palm sweep should accumulate.
#[derive(Clone, Copy)]
struct Targets<'a> {
    phi: Option<&'a KernelSpec>,
    psi: Option<&'a KernelSpec>,
}

fn sweep(history: &BranchingTessellation, targets: Targets<'_>, lambda: &DrivingMeasure, scheme: &ObservationScheme, opts: EstimatorOptions, rng: &mut SimRng) -> Sums {
    let mut sums = Sums::default();
    let t_end = history.t_end();
    let k = opts.strata.max(1);
    if t_end <= 0.0 {
        return sums;
    }
    let weight = t_end / (k as f64 * scheme.volume());
    let mut replay = history.replay();
    let mut hs = Vec::with_capacity(opts.n_mc);
    for j in 0..k {
        let s = t_end * (j as f64 + rng.gen::<f64>()) / k as f64;
        replay.advance_to(s);
        let live = replay.live();
        let ctx = KernelContext { time: s, lambda, window: history.window(), live, environment: &[] };
        for (id, c) in live {
            if !scheme.observes(c) {
                continue;
            }
            let mass = lambda.cell_mass(c);
            if mass <= 0.0 {
                continue;
            }
            hs.clear();
            for _ in 0..opts.n_mc {
                hs.push(lambda.sample_hyperplane(c, rng).expect("positive mass"));
            }
            let scale = weight * mass / opts.n_mc as f64;
            for h in &hs {
                let phi = targets.phi.map(|k| k.density(&ctx, *id, c, h));
                let psi = targets.psi.map(|k| k.density(&ctx, *id, c, h));
                sums.draws += 1;
                if let Some(p) = phi {
                    sums.h += scale * rho(p).expect("densities are non-negative");
                }
                if let Some(q) = psi {
                    sums.v += scale * (q - 1.0);
                }
                if let (Some(p), Some(q)) = (phi, psi) {
                    match rel_integrand(p, q) {
                        Some(x) => sums.direct += scale * x,
                        None => sums.diverging += 1,
                    }
                }
            }
        }
    }
    sums
}

/// `Σ log ψ(s, T_{s−}, c, H)` over events whose parent is centred in the
/// observation window, per unit volume. `None` if some `ψ` vanishes.
fn event_log_sum(history: &BranchingTessellation, psi: &KernelSpec, lambda: &DrivingMeasure, scheme: &ObservationScheme) -> Option<f64> {
    let mut total = 0.0;
    let mut replay = history.replay();
    replay.advance_to(0.0);
    while let Some(change) = replay.peek() {
        if let Change::Division(_, e) = change {
            if e.time > history.t_end() {
                break;
            }
            let live = replay.live();
            let parent = &live[&e.parent];
            if scheme.observes(parent) {
                let ctx = KernelContext { time: e.time, lambda, window: history.window(), live, environment: &[] };
                let d = psi.density(&ctx, e.parent, parent, &e.hyperplane);
                if d <= 0.0 {
                    return None;
                }
                total += d.ln();
            }
        }
        replay.apply_next();
    }
    Some(total / scheme.volume())
}

fn per_replicate<T: Send>(
    replicates: &[BranchingTessellation],
    seed: StreamSeed,
    f: impl Fn(&BranchingTessellation, &mut SimRng) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    replicates
        .par_iter()
        .enumerate()
        .map(|(i, h)| {
            let mut rng = seed.derive(i as u64, 1);
            f(h, &mut rng)
        })
        .collect()
}

fn check_scheme(replicates: &[BranchingTessellation], scheme: &ObservationScheme) -> Result<()> {
    for h in replicates {
        if clearance(scheme.observation(), h.window()) < scheme.margin() - 1e-12 {
            return Err(Error::InsufficientMargin { margin: scheme.margin() });
        }
    }
    Ok(())
}

/// Inner entropy density relative to the STIT reference, for replicates
/// generated with division kernel `phi`.
pub fn estimate_entropy_density(
    replicates: &[BranchingTessellation],
    phi: &KernelSpec,
    lambda: &DrivingMeasure,
    scheme: &ObservationScheme,
    opts: EstimatorOptions,
    seed: StreamSeed,
) -> Result<Estimate> {
    check_scheme(replicates, scheme)?;
    scheme.check_kernel(phi)?;
    let targets = Targets { phi: Some(phi), psi: None };
    let xs = per_replicate(replicates, seed, |h, rng| Ok(sweep(h, targets, lambda, scheme, opts, rng).h))?;
    Ok(Estimate::from_samples(&xs))
}

/// Inner energy density: the event sum of `log ψ` per unit volume.
pub fn estimate_u_in(replicates: &[BranchingTessellation], psi: &KernelSpec, lambda: &DrivingMeasure, scheme: &ObservationScheme) -> Result<Estimate> {
    check_scheme(replicates, scheme)?;
    scheme.check_kernel(psi)?;
    let xs: Vec<Option<f64>> = replicates.par_iter().map(|h| event_log_sum(h, psi, lambda, scheme)).collect();
    let diverging = xs.iter().filter(|x| x.is_none()).count();
    if diverging > 0 {
        return Err(Error::Diverged { diverging, draws: xs.len() });
    }
    let xs: Vec<f64> = xs.into_iter().flatten().collect();
    Ok(Estimate::from_samples(&xs))
}

/// Inner pressure density `∫ (ψ − 1) dΛ` averaged over observed cells.
pub fn estimate_v_in(
    replicates: &[BranchingTessellation],
    psi: &KernelSpec,
    lambda: &DrivingMeasure,
    scheme: &ObservationScheme,
    opts: EstimatorOptions,
    seed: StreamSeed,
) -> Result<Estimate> {
    check_scheme(replicates, scheme)?;
    scheme.check_kernel(psi)?;
    let targets = Targets { phi: None, psi: Some(psi) };
    let xs = per_replicate(replicates, seed, |h, rng| Ok(sweep(h, targets, lambda, scheme, opts, rng).v))?;
    Ok(Estimate::from_samples(&xs))
}

/// Excess free energy density of the generating law (kernel `phi`)
/// relative to the target kernel `psi`.
///
/// The value is `h − u + v` from replicate-wise combinations; the breakdown
/// also carries the direct average of per-cell relative entropies, drawn
/// with the same hyperplanes.
pub fn estimate_free_energy(
    replicates: &[BranchingTessellation],
    phi: &KernelSpec,
    psi: &KernelSpec,
    lambda: &DrivingMeasure,
    scheme: &ObservationScheme,
    opts: EstimatorOptions,
    seed: StreamSeed,
) -> Result<Estimate> {
    check_scheme(replicates, scheme)?;
    scheme.check_kernel(phi)?;
    scheme.check_kernel(psi)?;
    let targets = Targets { phi: Some(phi), psi: Some(psi) };
    let sums = per_replicate(replicates, seed, |h, rng| {
        let mut s = sweep(h, targets, lambda, scheme, opts, rng);
        match event_log_sum(h, psi, lambda, scheme) {
            Some(u) => s.u = u,
            None => s.diverging = usize::MAX,
        }
        Ok(s)
    })?;
    let draws: usize = sums.iter().map(|s| s.draws).sum();
    let diverging = sums.iter().fold(0usize, |a, s| a.saturating_add(s.diverging));
    if diverging > 0 && diverging as f64 > DIVERGENCE_FRACTION * draws as f64 {
        return Err(Error::Diverged { diverging, draws });
    }
    let pick = |f: fn(&Sums) -> f64| sums.iter().map(f).collect::<Vec<_>>();
    let combined = pick(|s| s.h - s.u + s.v);
    let mut est = Estimate::from_samples(&combined);
    est.breakdown = Some(Breakdown {
        h: Component::from_samples(&pick(|s| s.h)),
        u: Component::from_samples(&pick(|s| s.u)),
        v: Component::from_samples(&pick(|s| s.v)),
        direct: Component::from_samples(&pick(|s| s.direct)),
    });
    Ok(est)
}

/// Number of cells of the final state whose interior meets the observation
/// window.
pub fn hitting_intensity(replicates: &[BranchingTessellation], scheme: &ObservationScheme) -> Result<Estimate> {
    let xs: Vec<f64> = replicates.par_iter().map(|h| hitting_count(h, h.t_end(), scheme) as f64).collect();
    Ok(Estimate::from_samples(&xs))
}

pub(crate) fn hitting_count(h: &BranchingTessellation, s: f64, scheme: &ObservationScheme) -> usize {
    h.live_at(s).values().filter(|c| c.polytope.interiors_meet(scheme.observation())).count()
}

/// Sampled Palm cells: `(time, id)` pairs with centroid in the
/// observation window, for callers that need custom functionals.
pub fn palm_samples(history: &BranchingTessellation, scheme: &ObservationScheme, strata: usize, rng: &mut SimRng) -> Vec<(f64, CellId)> {
    let mut out = Vec::new();
    let mut replay = history.replay();
    for j in 0..strata {
        let s = history.t_end() * (j as f64 + rng.gen::<f64>()) / strata as f64;
        replay.advance_to(s);
        out.extend(replay.live().iter().filter(|(_, c)| scheme.observes(c)).map(|(id, _)| (s, *id)));
    }
    out
}
