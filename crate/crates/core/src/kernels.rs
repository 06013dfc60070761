//! Division kernels given by a density with respect to the driving measure.
//!
//! Every kernel here has the form `Ψ(s, T, c, dH) = ψ(s, T, c, H) 𝟙⟨c⟩(H) Λ(dH)`.
//! The density sees the current time, the living cells (inner population
//! plus any fixed environment) and the cell to be divided. Birth times are
//! stored on the cells, so no built-in kernel needs more of the past.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::driving::DrivingMeasure;
use crate::error::{Error, Result};
use crate::geometry::{BicolouredHyperplane, Cell, Colour, Point, Polytope};
use crate::simulator::CellId;

/// Interaction range of the mutation kernel: it reads only cells touching
/// the divided cell.
pub const TOUCHING_RANGE: f64 = 1e-9;

/// What a kernel density may look at.
#[derive(Debug, Clone, Copy)]
pub struct KernelContext<'a> {
    pub time: f64,
    pub lambda: &'a DrivingMeasure,
    /// Simulation window; its boundary is colourless for surface fractions.
    pub window: &'a Polytope,
    pub live: &'a BTreeMap<CellId, Cell>,
    /// Cells outside the evolving population (e.g. a fixed outer boundary
    /// condition) that the kernel can see but that never divide here.
    pub environment: &'a [Cell],
}

impl<'a> KernelContext<'a> {
    /// All visible cells except `id`.
    pub fn neighbours(&self, id: CellId) -> impl Iterator<Item = &'a Cell> + 'a {
        let live = self.live;
        live.iter()
            .filter(move |(k, _)| **k != id)
            .map(|(_, c)| c)
            .chain(self.environment.iter())
    }

    pub fn all_cells(&self) -> impl Iterator<Item = &'a Cell> + 'a {
        self.live.values().chain(self.environment.iter())
    }
}

/// How the simulation-window boundary enters the opposite-type surface
/// fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeConvention {
    /// Window edges count in the perimeter but belong to neither colour.
    #[default]
    WindowNeutral,
    /// Window edges are left out of the perimeter altogether.
    WindowExcluded,
}

/// Opposite-type surface fraction of `c` among `others`. Assumes a
/// two-letter alphabet where the opposite of colour `k` is `1 − k`.
pub fn surface_fraction<'a>(c: &Cell, others: impl Iterator<Item = &'a Cell>, convention: EdgeConvention) -> f64 {
    let mut opposite = 0.0;
    let mut shared = 0.0;
    for o in others {
        let len = c.polytope.shared_boundary_length(&o.polytope);
        if len > 0.0 {
            shared += len;
            if o.colour != c.colour {
                opposite += len;
            }
        }
    }
    let denom = match convention {
        EdgeConvention::WindowNeutral => c.polytope.perimeter(),
        EdgeConvention::WindowExcluded => shared,
    };
    if denom > 0.0 {
        (opposite / denom).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Age of a cell at time `s`.
pub fn age(c: &Cell, s: f64) -> f64 {
    s - c.birth_time
}

/// The mutation rate `β(age, surface fraction)`.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaFunction {
    Constant(f64),
    /// `β(𝗌) = (1 + 𝗌)/2`, without aging.
    HalfOnePlusFraction,
    /// Bilinear interpolation on a rectangular grid; `values[i][j]` sits at
    /// `(ages[i], fractions[j])`. Arguments are clamped to the grid.
    Grid { ages: Vec<f64>, fractions: Vec<f64>, values: Vec<Vec<f64>> },
}

impl BetaFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            BetaFunction::Constant(b) if !(*b > 0.0 && b.is_finite()) => {
                Err(Error::InvalidKernel(format!("β = {b} must be positive")))
            }
            BetaFunction::Grid { ages, fractions, values } => {
                let increasing = |v: &[f64]| !v.is_empty() && v.windows(2).all(|w| w[0] < w[1]);
                if !increasing(ages) || !increasing(fractions) {
                    return Err(Error::InvalidKernel("β grid axes must be strictly increasing".into()));
                }
                if values.len() != ages.len() || values.iter().any(|r| r.len() != fractions.len()) {
                    return Err(Error::InvalidKernel("β grid shape does not match its axes".into()));
                }
                if values.iter().flatten().any(|b| !(*b > 0.0 && b.is_finite())) {
                    return Err(Error::InvalidKernel("β grid values must be positive".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, age: f64, fraction: f64) -> f64 {
        match self {
            BetaFunction::Constant(b) => *b,
            BetaFunction::HalfOnePlusFraction => 0.5 * (1.0 + fraction.clamp(0.0, 1.0)),
            BetaFunction::Grid { ages, fractions, values } => {
                let (i, ta) = bracket(ages, age);
                let (j, tf) = bracket(fractions, fraction);
                let i1 = (i + 1).min(ages.len() - 1);
                let j1 = (j + 1).min(fractions.len() - 1);
                let v0 = values[i][j] * (1.0 - tf) + values[i][j1] * tf;
                let v1 = values[i1][j] * (1.0 - tf) + values[i1][j1] * tf;
                v0 * (1.0 - ta) + v1 * ta
            }
        }
    }

    /// `(inf β, sup β)`.
    pub fn range(&self) -> (f64, f64) {
        match self {
            BetaFunction::Constant(b) => (*b, *b),
            BetaFunction::HalfOnePlusFraction => (0.5, 1.0),
            BetaFunction::Grid { values, .. } => values
                .iter()
                .flatten()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), b| (lo.min(*b), hi.max(*b))),
        }
    }
}

/// Index of the lower grid node and the interpolation weight.
fn bracket(axis: &[f64], x: f64) -> (usize, f64) {
    if axis.len() == 1 || x <= axis[0] {
        return (0, 0.0);
    }
    let last = axis.len() - 1;
    if x >= axis[last] {
        return (last, 0.0);
    }
    let i = axis.partition_point(|a| *a <= x) - 1;
    (i, (x - axis[i]) / (axis[i + 1] - axis[i]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutationParams {
    pub epsilon: f64,
    pub beta: BetaFunction,
    pub convention: EdgeConvention,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelKind {
    /// `ψ ≡ 1`.
    Stit,
    /// `ψ ≡ a`.
    ConstantDensity { a: f64 },
    /// `ψ = ε 𝟙⟨c⟩ + ε⁻¹ 𝟙⟨ε⋆c⟩`: cuts concentrate near the centroid.
    SizeBalance { epsilon: f64 },
    /// `ψ = 1/Λ(⟨c⟩)`: every cell divides at rate one.
    UnitRate,
    /// Size balancing with contact-driven colour mutation and aging.
    Mutation(MutationParams),
    /// Horizontal or vertical cuts depending on which cell shape dominates
    /// the window. Not moderate: infinite range and `ψ ∈ {0, 1}`.
    Directional { bound: Option<f64> },
    /// `inner` for cells inside a box of the shifted grid, STIT otherwise.
    Block { inner: Box<KernelSpec>, box_side: f64, corridor: f64 },
}

/// A division kernel together with its moderation constants.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    kind: KernelKind,
    kappa: f64,
    range: f64,
    kappa_prime: f64,
}

fn size_balance_bounds(epsilon: f64) -> (f64, f64) {
    (epsilon, epsilon + 1.0 / epsilon)
}

fn log_bound(lo: f64, hi: f64) -> f64 {
    lo.ln().abs().max(hi.ln().abs())
}

/// `(min, max)` of `w(σ⁺) w(σ⁻) / (Z² μ)` over colours and `β ∈ [lo, hi]`
/// for the uniform reference law on two colours (`μ ≡ 1/4`).
fn mutation_colour_range(beta_lo: f64, beta_hi: f64) -> (f64, f64) {
    let mut probes = vec![beta_lo, beta_hi];
    if beta_lo < 1.0 && 1.0 < beta_hi {
        probes.push(1.0);
    }
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for b in probes {
        let z = 1.0 + b;
        for (wp, wm) in [(1.0, 1.0), (1.0, b), (b, 1.0), (b, b)] {
            let f = 4.0 * wp * wm / (z * z);
            lo = lo.min(f);
            hi = hi.max(f);
        }
    }
    (lo, hi)
}

impl KernelSpec {
    pub fn stit() -> Self {
        KernelSpec { kind: KernelKind::Stit, kappa: 0.0, range: 0.0, kappa_prime: 0.0 }
    }

    pub fn constant(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidKernel(format!("constant density {a} must be positive")));
        }
        let kappa_prime = if a == 1.0 { 0.0 } else { f64::INFINITY };
        Ok(KernelSpec { kind: KernelKind::ConstantDensity { a }, kappa: a.ln().abs(), range: 0.0, kappa_prime })
    }

    pub fn size_balance(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        let (lo, hi) = size_balance_bounds(epsilon);
        Ok(KernelSpec {
            kind: KernelKind::SizeBalance { epsilon },
            kappa: log_bound(lo, hi),
            range: 0.0,
            kappa_prime: f64::INFINITY,
        })
    }

    pub fn unit_rate() -> Self {
        KernelSpec { kind: KernelKind::UnitRate, kappa: f64::INFINITY, range: 0.0, kappa_prime: f64::INFINITY }
    }

    pub fn mutation(epsilon: f64, beta: BetaFunction, convention: EdgeConvention) -> Result<Self> {
        check_epsilon(epsilon)?;
        beta.validate()?;
        let (glo, ghi) = size_balance_bounds(epsilon);
        let (blo, bhi) = beta.range();
        let (clo, chi) = mutation_colour_range(blo, bhi);
        Ok(KernelSpec {
            kind: KernelKind::Mutation(MutationParams { epsilon, beta, convention }),
            kappa: log_bound(glo, ghi) + log_bound(clo, chi),
            range: TOUCHING_RANGE,
            kappa_prime: f64::INFINITY,
        })
    }

    /// The directional kernel. `bound` is a factor `b` such that
    /// `b · Λ(⟨c⟩)` dominates the total division rate; `None` leaves the
    /// kernel unusable for simulation.
    pub fn directional(bound: Option<f64>) -> Self {
        KernelSpec {
            kind: KernelKind::Directional { bound },
            kappa: f64::INFINITY,
            range: f64::INFINITY,
            kappa_prime: f64::INFINITY,
        }
    }

    /// Boxes `[−n/2, n/2]^d + (n + r) i`, `i ∈ ℤ^d`, separated by corridors
    /// of width `r`. The grid is anchored at the origin.
    pub fn block(inner: KernelSpec, box_side: f64, corridor: f64) -> Result<Self> {
        if !(box_side > 0.0 && box_side.is_finite()) || !(corridor >= 0.0 && corridor.is_finite()) {
            return Err(Error::InvalidKernel("block box side must be positive and corridor non-negative".into()));
        }
        let (kappa, range) = (inner.kappa, inner.range);
        Ok(KernelSpec {
            kind: KernelKind::Block { inner: Box::new(inner), box_side, corridor },
            kappa,
            range,
            kappa_prime: f64::INFINITY,
        })
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    /// Bound on `|log ψ|` (for the mutation kernel, relative to a uniform
    /// two-colour reference law).
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    /// Bound on `∫⟨c⟩ |ψ − 1| dΛ`; infinite when no uniform bound holds.
    pub fn kappa_prime(&self) -> f64 {
        self.kappa_prime
    }

    pub fn is_moderate(&self) -> bool {
        self.kappa.is_finite() && self.range.is_finite() && self.kappa_prime.is_finite()
    }

    /// Whether the density reads anything beyond the cell itself.
    pub fn is_interacting(&self) -> bool {
        match &self.kind {
            KernelKind::Mutation(_) | KernelKind::Directional { .. } => true,
            KernelKind::Block { inner, .. } => inner.is_interacting(),
            _ => false,
        }
    }

    /// Checks that the kernel can be used with this driving measure.
    pub fn check_compatible(&self, lambda: &DrivingMeasure) -> Result<()> {
        match &self.kind {
            KernelKind::Mutation(_) if lambda.num_colours() != 2 => {
                Err(Error::InvalidKernel("the mutation kernel needs exactly two colours".into()))
            }
            KernelKind::Directional { .. } if lambda.dimension() != 2 => {
                Err(Error::InvalidKernel("the directional kernel is planar".into()))
            }
            KernelKind::Block { inner, .. } => inner.check_compatible(lambda),
            _ => Ok(()),
        }
    }

    /// `ψ(s, T_s, c, H)` for a hyperplane hitting `c`.
    pub fn density(&self, ctx: &KernelContext<'_>, id: CellId, c: &Cell, h: &BicolouredHyperplane) -> f64 {
        match &self.kind {
            KernelKind::Stit => 1.0,
            KernelKind::ConstantDensity { a } => *a,
            KernelKind::SizeBalance { epsilon } => size_balance_factor(c, h, *epsilon),
            KernelKind::UnitRate => 1.0 / ctx.lambda.cell_mass(c),
            KernelKind::Mutation(p) => {
                let geom = size_balance_factor(c, h, p.epsilon);
                let mu = ctx.lambda.colour_prob(h);
                if mu <= 0.0 {
                    return 0.0;
                }
                let frac = surface_fraction(c, ctx.neighbours(id), p.convention);
                let beta = p.beta.eval(age(c, ctx.time).clamp(0.0, 1.0), frac);
                let w = |s: Colour| if s == c.colour { 1.0 } else { beta };
                let z = 1.0 + beta;
                geom * w(h.colour_plus) * w(h.colour_minus) / (z * z * mu)
            }
            KernelKind::Directional { .. } => {
                let horizontal_cut = h.spatial.normal == [0.0, 1.0];
                let vertical_cut = h.spatial.normal == [1.0, 0.0];
                if horizontal_dominates(ctx) {
                    f64::from(u8::from(horizontal_cut))
                } else {
                    f64::from(u8::from(vertical_cut))
                }
            }
            KernelKind::Block { inner, box_side, corridor } => {
                if in_some_box(&c.polytope, *box_side, *corridor) {
                    inner.density(ctx, id, c, h)
                } else {
                    1.0
                }
            }
        }
    }

    /// `M(c) ≥ sup ψ · Λ(⟨c⟩)`, the dominating rate for thinning. `None`
    /// when no finite bound is known.
    pub fn proposal_bound(&self, c: &Cell, lambda: &DrivingMeasure) -> Option<f64> {
        let mass = lambda.cell_mass(c);
        match &self.kind {
            KernelKind::Stit => Some(mass),
            KernelKind::ConstantDensity { a } => Some(a * mass),
            KernelKind::SizeBalance { epsilon } => Some(size_balance_bounds(*epsilon).1 * mass),
            KernelKind::UnitRate => (mass > 0.0).then_some(1.0),
            KernelKind::Mutation(p) => {
                let (blo, bhi) = p.beta.range();
                let sup = mutation_colour_sup(lambda, blo, bhi)?;
                Some(size_balance_bounds(p.epsilon).1 * sup * mass)
            }
            KernelKind::Directional { bound } => bound.map(|b| b * mass),
            KernelKind::Block { inner, box_side, corridor } => {
                if in_some_box(&c.polytope, *box_side, *corridor) {
                    inner.proposal_bound(c, lambda)
                } else {
                    Some(mass)
                }
            }
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidKernel(format!("ε = {epsilon} outside (0, 1]")));
    }
    Ok(())
}

/// `ε + ε⁻¹ 𝟙{H hits ε⋆c}` for `H` hitting `c`. The retracted support is
/// computed from that of `c` rather than from a retracted polygon.
fn size_balance_factor(c: &Cell, h: &BicolouredHyperplane, epsilon: f64) -> f64 {
    let u = h.spatial.normal;
    let m = c.polytope.centroid();
    let mu = m[0] * u[0] + m[1] * u[1];
    let (lo, hi) = c.polytope.support(u);
    let (rlo, rhi) = (mu + epsilon * (lo - mu), mu + epsilon * (hi - mu));
    let r = h.spatial.offset;
    if rlo < r && r < rhi {
        epsilon + 1.0 / epsilon
    } else {
        epsilon
    }
}

/// `max w(σ⁺) w(σ⁻) / (Z² μ(σ⁺, σ⁻))` over colours, directions and `β`.
fn mutation_colour_sup(lambda: &DrivingMeasure, beta_lo: f64, beta_hi: f64) -> Option<f64> {
    use crate::driving::{DirectionComponent, DirectionalMeasure};
    let kernel = lambda.colour_kernel();
    let n_atoms = match lambda.directional() {
        DirectionalMeasure::Isotropic => 0,
        DirectionalMeasure::Atoms(a) | DirectionalMeasure::Mixture { atoms: a, .. } => a.len(),
    };
    let components: Vec<DirectionComponent> =
        std::iter::once(DirectionComponent::Isotropic).chain((0..n_atoms).map(DirectionComponent::Atom)).collect();
    let mut probes = vec![beta_lo, beta_hi];
    if beta_lo < 1.0 && 1.0 < beta_hi {
        probes.push(1.0);
    }
    let mut sup: f64 = 0.0;
    for comp in components {
        for own in 0..2 {
            for plus in 0..2 {
                for minus in 0..2 {
                    let mu = kernel.prob(comp, Colour(plus), Colour(minus));
                    if mu <= 0.0 {
                        continue;
                    }
                    for &b in &probes {
                        let w = |s: usize| if s == own { 1.0 } else { b };
                        let z = 1.0 + b;
                        sup = sup.max(w(plus) * w(minus) / (z * z * mu));
                    }
                }
            }
        }
    }
    (sup > 0.0 && sup.is_finite()).then_some(sup)
}

/// Whether horizontal cells (wider than tall) outnumber vertical ones among
/// the cells centred in the window.
fn horizontal_dominates(ctx: &KernelContext<'_>) -> bool {
    let (mut hor, mut vert) = (0usize, 0usize);
    for c in ctx.all_cells() {
        if !ctx.window.contains_point(c.polytope.centroid()) {
            continue;
        }
        let (dx, dy) = c.polytope.extents();
        if dx > dy {
            hor += 1;
        } else if dy > dx {
            vert += 1;
        }
    }
    hor > vert
}

fn in_some_box(p: &Polytope, box_side: f64, corridor: f64) -> bool {
    let pitch = box_side + corridor;
    let m = p.centroid();
    let centre: Point = if p.dimension() == 1 {
        [(m[0] / pitch).round() * pitch, 0.0]
    } else {
        [(m[0] / pitch).round() * pitch, (m[1] / pitch).round() * pitch]
    };
    let half = 0.5 * box_side;
    let tol = crate::geometry::TOL_GEOM;
    p.vertices().iter().all(|v| {
        (v[0] - centre[0]).abs() <= half + tol && (p.dimension() == 1 || (v[1] - centre[1]).abs() <= half + tol)
    })
}

/// Axis-aligned two-atom driving measure for use with the directional kernel.
pub fn directional_driving_measure() -> DrivingMeasure {
    use crate::driving::{ColourKernel, DirectionAtom, DirectionalMeasure};
    let atoms = vec![DirectionAtom::new(0.0, 1.0).expect("valid"), DirectionAtom::new(0.5 * PI, 1.0).expect("valid")];
    DrivingMeasure::new(2, DirectionalMeasure::Atoms(atoms), ColourKernel::single(), 1.0).expect("valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SpatialHyperplane;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(lo: Point, side: f64, colour: usize) -> Cell {
        Cell::new(Polytope::rectangle(lo, [lo[0] + side, lo[1] + side]).unwrap(), Colour(colour), 0.0)
    }

    fn through(c: &Cell, theta: f64, offset_from_centroid: f64) -> BicolouredHyperplane {
        let m = c.polytope.centroid();
        let h = SpatialHyperplane::from_angle(theta, 0.0);
        let r = m[0] * h.normal[0] + m[1] * h.normal[1] + offset_from_centroid;
        BicolouredHyperplane {
            spatial: SpatialHyperplane { normal: h.normal, offset: r },
            colour_plus: Colour(0),
            colour_minus: Colour(0),
        }
    }

    struct Fixture {
        lambda: DrivingMeasure,
        window: Polytope,
        live: BTreeMap<CellId, Cell>,
    }

    impl Fixture {
        fn new(cells: Vec<Cell>, lambda: DrivingMeasure) -> Self {
            let window = Polytope::rectangle([-10.0, -10.0], [10.0, 10.0]).unwrap();
            let live = cells.into_iter().enumerate().map(|(i, c)| (CellId(i), c)).collect();
            Fixture { lambda, window, live }
        }

        fn ctx(&self, s: f64) -> KernelContext<'_> {
            KernelContext { time: s, lambda: &self.lambda, window: &self.window, live: &self.live, environment: &[] }
        }
    }

    fn two_colour() -> DrivingMeasure {
        DrivingMeasure::isotropic_plane(vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn stit_density_is_one() {
        let f = Fixture::new(vec![square([0.0, 0.0], 1.0, 0)], two_colour());
        let c = &f.live[&CellId(0)];
        assert_eq!(KernelSpec::stit().density(&f.ctx(0.5), CellId(0), c, &through(c, 0.3, 0.2)), 1.0);
    }

    #[test]
    fn size_balance_density_values() {
        let f = Fixture::new(vec![square([0.0, 0.0], 1.0, 0)], two_colour());
        let c = &f.live[&CellId(0)];
        let k = KernelSpec::size_balance(0.05).unwrap();
        let centre = k.density(&f.ctx(0.0), CellId(0), c, &through(c, 1.1, 0.0));
        assert!((centre - 20.05).abs() < 1e-12);
        let outer = k.density(&f.ctx(0.0), CellId(0), c, &through(c, 0.0, 0.4));
        assert_eq!(outer, 0.05);
    }

    #[test]
    fn surface_fraction_examples() {
        // Checkerboard 3×3, centre cell colour 0 surrounded by colour 1 on all edges.
        let mut cells = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                cells.push(square([i as f64, j as f64], 1.0, (i + j) % 2));
            }
        }
        let centre = cells[4].clone();
        let others: Vec<&Cell> = cells.iter().enumerate().filter(|(k, _)| *k != 4).map(|(_, c)| c).collect();
        assert!((surface_fraction(&centre, others.iter().copied(), EdgeConvention::WindowNeutral) - 1.0).abs() < 1e-12);

        let same: Vec<Cell> = cells.iter().map(|c| Cell { colour: Colour(0), ..c.clone() }).collect();
        let others: Vec<&Cell> = same.iter().enumerate().filter(|(k, _)| *k != 4).map(|(_, c)| c).collect();
        assert_eq!(surface_fraction(&same[4], others.into_iter(), EdgeConvention::WindowNeutral), 0.0);

        // Two of four unit neighbours opposite: 2 / 4 by shared lengths.
        let c = square([0.0, 0.0], 1.0, 0);
        let ns = [square([1.0, 0.0], 1.0, 1), square([-1.0, 0.0], 1.0, 1), square([0.0, 1.0], 1.0, 0), square([0.0, -1.0], 1.0, 0)];
        let oracle: f64 = ns.iter().filter(|n| n.colour != c.colour).map(|n| c.polytope.shared_boundary_length(&n.polytope)).sum::<f64>()
            / c.polytope.perimeter();
        assert!((oracle - 0.5).abs() < 1e-12);
        assert!((surface_fraction(&c, ns.iter(), EdgeConvention::WindowNeutral) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn window_edge_conventions_differ_on_boundary_cells() {
        let c = square([0.0, 0.0], 1.0, 0);
        let ns = [square([1.0, 0.0], 1.0, 1)];
        assert!((surface_fraction(&c, ns.iter(), EdgeConvention::WindowNeutral) - 0.25).abs() < 1e-12);
        assert!((surface_fraction(&c, ns.iter(), EdgeConvention::WindowExcluded) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn age_examples() {
        let mut c = square([0.0, 0.0], 1.0, 0);
        assert!((age(&c, 0.3) - 0.3).abs() < 1e-15);
        c.birth_time = 0.25;
        assert_eq!(age(&c, 0.25), 0.0);
        assert!((age(&c, 0.9) - 0.65).abs() < 1e-15);
    }

    #[test]
    fn mutation_colour_weights() {
        // Constant β = 0.5; the cell (colour 0) is isolated so 𝗌 = 0.
        let f = Fixture::new(vec![square([0.0, 0.0], 1.0, 0)], two_colour());
        let c = &f.live[&CellId(0)];
        let k = KernelSpec::mutation(0.5, BetaFunction::Constant(0.5), EdgeConvention::WindowNeutral).unwrap();
        let mut h = through(c, 0.0, 0.4);
        let geom = 0.5;
        let z: f64 = 1.5;
        for (plus, minus, w) in [(0, 0, 1.0), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 0.25)] {
            h.colour_plus = Colour(plus);
            h.colour_minus = Colour(minus);
            let d = k.density(&f.ctx(0.1), CellId(0), c, &h);
            assert!((d - geom * w / (z * z * 0.25)).abs() < 1e-12, "{plus}{minus}: {d}");
        }
    }

    #[test]
    fn mutation_uses_surface_fraction_of_beta() {
        // Fully surrounded by opposite cells: 𝗌 = 1, β = (1 + 1)/2 = 1.
        let mut cells = vec![square([0.0, 0.0], 1.0, 0)];
        for lo in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            cells.push(square(lo, 1.0, 1));
        }
        let f = Fixture::new(cells, two_colour());
        let c = &f.live[&CellId(0)];
        let k = KernelSpec::mutation(0.5, BetaFunction::HalfOnePlusFraction, EdgeConvention::WindowNeutral).unwrap();
        let mut h = through(c, 0.0, 0.4);
        h.colour_plus = Colour(1);
        h.colour_minus = Colour(0);
        // β = 1 makes every colour pair equally likely: factor (1/4)/(1/4) = 1.
        assert!((k.density(&f.ctx(0.0), CellId(0), c, &h) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mutation_with_unit_beta_reduces_to_size_balance() {
        let f = Fixture::new(vec![square([0.0, 0.0], 1.0, 0), square([1.0, 0.0], 1.0, 1)], two_colour());
        let c = &f.live[&CellId(0)];
        let m = KernelSpec::mutation(0.2, BetaFunction::Constant(1.0), EdgeConvention::WindowNeutral).unwrap();
        let sb = KernelSpec::size_balance(0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let h = f.lambda.sample_hyperplane(c, &mut rng).unwrap();
            let a = m.density(&f.ctx(0.3), CellId(0), c, &h);
            let b = sb.density(&f.ctx(0.3), CellId(0), c, &h);
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(m.proposal_bound(c, &f.lambda), sb.proposal_bound(c, &f.lambda));
    }

    #[test]
    fn proposal_bound_examples() {
        let iso = DrivingMeasure::isotropic_plane(vec![1.0]).unwrap();
        let sq = square([0.0, 0.0], 1.0, 0);
        let b = KernelSpec::stit().proposal_bound(&sq, &iso).unwrap();
        assert!((b - 4.0 / PI).abs() < 1e-12);
        let b = KernelSpec::size_balance(0.05).unwrap().proposal_bound(&sq, &iso).unwrap();
        assert!((b - 20.05 * 4.0 / PI).abs() < 1e-10);
        assert!((b - 25.529).abs() < 1e-3);
        let line = DrivingMeasure::lebesgue_line();
        let iv = Cell::new(Polytope::interval(0.0, 3.0).unwrap(), Colour(0), 0.0);
        assert_eq!(KernelSpec::constant(2.0).unwrap().proposal_bound(&iv, &line), Some(6.0));
        assert_eq!(KernelSpec::directional(None).proposal_bound(&sq, &iso), None);
    }

    #[test]
    fn block_density_branches() {
        let f = Fixture::new(vec![square([-0.5, -0.5], 1.0, 0), square([1.5, -0.5], 1.0, 0)], two_colour());
        let inner = KernelSpec::size_balance(0.05).unwrap();
        let k = KernelSpec::block(inner, 2.0, 1.0).unwrap();
        let inside = &f.live[&CellId(0)];
        let d = k.density(&f.ctx(0.0), CellId(0), inside, &through(inside, 0.7, 0.0));
        assert!((d - 20.05).abs() < 1e-12);
        // [1.5, 2.5] straddles the corridor between [−1, 1] and [2, 4].
        let straddle = &f.live[&CellId(1)];
        assert_eq!(k.density(&f.ctx(0.0), CellId(1), straddle, &through(straddle, 0.7, 0.0)), 1.0);
        let stit_block = KernelSpec::block(KernelSpec::stit(), 2.0, 1.0).unwrap();
        for (id, c) in &f.live {
            assert_eq!(stit_block.density(&f.ctx(0.0), *id, c, &through(c, 0.2, 0.0)), 1.0);
        }
    }

    #[test]
    fn directional_follows_dominant_shape() {
        let lambda = directional_driving_measure();
        let wide = Cell::new(Polytope::rectangle([0.0, 0.0], [2.0, 1.0]).unwrap(), Colour(0), 0.0);
        let f = Fixture::new(vec![wide.clone()], lambda);
        let k = KernelSpec::directional(Some(1.0));
        let horizontal = BicolouredHyperplane {
            spatial: SpatialHyperplane { normal: [0.0, 1.0], offset: 0.5 },
            colour_plus: Colour(0),
            colour_minus: Colour(0),
        };
        let vertical = BicolouredHyperplane { spatial: SpatialHyperplane { normal: [1.0, 0.0], offset: 1.0 }, ..horizontal };
        assert_eq!(k.density(&f.ctx(0.0), CellId(0), &wide, &horizontal), 1.0);
        assert_eq!(k.density(&f.ctx(0.0), CellId(0), &wide, &vertical), 0.0);
        assert!(!k.is_moderate());
    }

    #[test]
    fn beta_grid_interpolates() {
        let beta = BetaFunction::Grid { ages: vec![0.0, 1.0], fractions: vec![0.0, 1.0], values: vec![vec![1.0, 3.0], vec![2.0, 4.0]] };
        beta.validate().unwrap();
        assert!((beta.eval(0.5, 0.5) - 2.5).abs() < 1e-12);
        assert_eq!(beta.eval(-1.0, 2.0), 3.0);
        assert_eq!(beta.range(), (1.0, 4.0));
        let bad = BetaFunction::Grid { ages: vec![0.0], fractions: vec![0.0, 1.0], values: vec![vec![1.0]] };
        assert!(bad.validate().is_err());
    }

    /// Random cell, shift and hyperplane for the property checks below.
    fn probe(rng: &mut ChaCha8Rng, lambda: &DrivingMeasure) -> (Cell, BicolouredHyperplane) {
        let w = rng.gen_range(0.05..3.0);
        let h = rng.gen_range(0.05..3.0);
        let x = rng.gen_range(-4.0..4.0);
        let y = rng.gen_range(-4.0..4.0);
        let c = Cell::new(Polytope::rectangle([x, y], [x + w, y + h]).unwrap(), Colour(rng.gen_range(0..2)), rng.gen_range(0.0..0.5));
        let hp = lambda.sample_hyperplane(&c, rng).unwrap();
        (c, hp)
    }

    fn moderate_kernels() -> Vec<KernelSpec> {
        vec![
            KernelSpec::stit(),
            KernelSpec::constant(2.0).unwrap(),
            KernelSpec::constant(0.3).unwrap(),
            KernelSpec::size_balance(0.05).unwrap(),
            KernelSpec::size_balance(0.5).unwrap(),
            KernelSpec::mutation(0.5, BetaFunction::HalfOnePlusFraction, EdgeConvention::WindowNeutral).unwrap(),
            KernelSpec::mutation(0.1, BetaFunction::Constant(3.0), EdgeConvention::WindowNeutral).unwrap(),
        ]
    }

    #[test]
    fn envelope_and_proposal_consistency() {
        let lambda = two_colour();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let neighbour = square([10.0, 10.0], 1.0, 1);
        for k in moderate_kernels() {
            for _ in 0..15_000 {
                let (c, h) = probe(&mut rng, &lambda);
                let f = Fixture::new(vec![c.clone(), neighbour.clone()], lambda.clone());
                let s = rng.gen_range(c.birth_time..1.0);
                let d = k.density(&f.ctx(s), CellId(0), &c, &h);
                assert!(d.ln().abs() <= k.kappa() + 1e-9, "{k:?}: ψ = {d}");
                let m = lambda.cell_mass(&c);
                assert!(d * m <= k.proposal_bound(&c, &lambda).unwrap() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn densities_are_translation_covariant() {
        let lambda = two_colour();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in moderate_kernels() {
            for _ in 0..2_000 {
                let (c, h) = probe(&mut rng, &lambda);
                let other = Cell::new(
                    Polytope::rectangle([c.polytope.vertices()[1][0], c.polytope.vertices()[1][1]], [c.polytope.vertices()[1][0] + 1.0, c.polytope.vertices()[2][1]]).unwrap(),
                    Colour(1),
                    0.0,
                );
                let x = [rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0)];
                let f = Fixture::new(vec![c.clone(), other.clone()], lambda.clone());
                let g = Fixture {
                    lambda: lambda.clone(),
                    window: f.window.translate(x),
                    live: f.live.iter().map(|(i, c)| (*i, c.translate(x))).collect(),
                };
                let a = k.density(&f.ctx(0.7), CellId(0), &c, &h);
                let b = k.density(&g.ctx(0.7), CellId(0), &c.translate(x), &h.translate(x));
                assert!((a - b).abs() <= 1e-10 * a.max(1.0), "{k:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn densities_ignore_far_cells() {
        let lambda = two_colour();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for k in moderate_kernels() {
            for _ in 0..1_000 {
                let (c, h) = probe(&mut rng, &lambda);
                let far_a = square([30.0, 30.0], 1.0, 0);
                let far_b = square([-30.0, 25.0], 2.0, 1);
                let f = Fixture::new(vec![c.clone(), far_a], lambda.clone());
                let g = Fixture::new(vec![c.clone(), far_b], lambda.clone());
                let a = k.density(&f.ctx(0.6), CellId(0), &c, &h);
                let b = k.density(&g.ctx(0.6), CellId(0), &c, &h);
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
