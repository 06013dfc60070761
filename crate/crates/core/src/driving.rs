//! Translation-invariant driving measures on bicoloured hyperplanes.
//!
//! A driving measure factorises as `λ(du) dr μ(u; dσ⁺, dσ⁻)`: a finite
//! measure on normal directions, Lebesgue measure on offsets and a colour
//! law per direction. The offset part is never configurable.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{BicolouredHyperplane, Cell, Colour, Point, Polytope, SpatialHyperplane, TOL_SPLIT};

const PROB_TOL: f64 = 1e-12;

/// A point mass of the direction measure at normal angle `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionAtom {
    pub theta: f64,
    pub weight: f64,
    normal: Point,
}

impl DirectionAtom {
    pub fn new(theta: f64, weight: f64) -> Result<Self> {
        if !(0.0..PI).contains(&theta) {
            return Err(Error::InvalidMeasure(format!("atom angle {theta} outside [0, π)")));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidMeasure(format!("atom weight {weight} must be positive")));
        }
        // Exact axis normals for the two axis directions.
        let normal = if theta == 0.0 {
            [1.0, 0.0]
        } else if theta == 0.5 * PI {
            [0.0, 1.0]
        } else {
            [theta.cos(), theta.sin()]
        };
        Ok(DirectionAtom { theta, weight, normal })
    }

    pub fn normal(&self) -> Point {
        self.normal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DirectionalMeasure {
    /// Normalised uniform measure on the half circle.
    Isotropic,
    Atoms(Vec<DirectionAtom>),
    Mixture { iso_weight: f64, atoms: Vec<DirectionAtom> },
}

impl DirectionalMeasure {
    fn iso_weight(&self) -> f64 {
        match self {
            DirectionalMeasure::Isotropic => 1.0,
            DirectionalMeasure::Atoms(_) => 0.0,
            DirectionalMeasure::Mixture { iso_weight, .. } => *iso_weight,
        }
    }

    fn atoms(&self) -> &[DirectionAtom] {
        match self {
            DirectionalMeasure::Isotropic => &[],
            DirectionalMeasure::Atoms(a) | DirectionalMeasure::Mixture { atoms: a, .. } => a,
        }
    }
}

/// Which part of the direction measure a hyperplane belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionComponent {
    Isotropic,
    Atom(usize),
}

/// Joint law of `(σ⁺, σ⁻)` given the direction.
#[derive(Debug, Clone, PartialEq)]
pub enum ColourKernel {
    /// `ν ⊗ ν` for a reference law `ν`.
    Product { nu: Vec<f64> },
    /// One joint matrix `m[σ⁺][σ⁻]` for every direction.
    Joint { matrix: Vec<Vec<f64>> },
    /// A joint matrix per direction atom, and one for the isotropic part.
    PerDirection { isotropic: Vec<Vec<f64>>, atoms: Vec<Vec<Vec<f64>>> },
}

impl ColourKernel {
    pub fn uniform(n: usize) -> Self {
        ColourKernel::Product { nu: vec![1.0 / n as f64; n] }
    }

    pub fn single() -> Self {
        ColourKernel::Product { nu: vec![1.0] }
    }

    pub fn num_colours(&self) -> usize {
        match self {
            ColourKernel::Product { nu } => nu.len(),
            ColourKernel::Joint { matrix } => matrix.len(),
            ColourKernel::PerDirection { isotropic, .. } => isotropic.len(),
        }
    }

    fn validate(&self, n_atoms: usize) -> Result<()> {
        fn check_vec(v: &[f64]) -> Result<()> {
            if v.is_empty() || v.iter().any(|p| !(*p >= 0.0)) || (v.iter().sum::<f64>() - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidMeasure("colour law must be a probability vector".into()));
            }
            Ok(())
        }
        fn check_matrix(m: &[Vec<f64>], n: usize) -> Result<()> {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                return Err(Error::InvalidMeasure(format!("colour matrix must be {n}×{n}")));
            }
            let flat: Vec<f64> = m.iter().flatten().copied().collect();
            check_vec(&flat)
        }
        match self {
            ColourKernel::Product { nu } => check_vec(nu),
            ColourKernel::Joint { matrix } => check_matrix(matrix, matrix.len()),
            ColourKernel::PerDirection { isotropic, atoms } => {
                let n = isotropic.len();
                check_matrix(isotropic, n)?;
                if atoms.len() != n_atoms {
                    return Err(Error::InvalidMeasure(format!(
                        "{} per-direction colour matrices for {n_atoms} atoms",
                        atoms.len()
                    )));
                }
                atoms.iter().try_for_each(|m| check_matrix(m, n))
            }
        }
    }

    /// `μ(u; {σ⁺}, {σ⁻})`.
    pub fn prob(&self, component: DirectionComponent, plus: Colour, minus: Colour) -> f64 {
        let n = self.num_colours();
        if plus.0 >= n || minus.0 >= n {
            return 0.0;
        }
        match self {
            ColourKernel::Product { nu } => nu[plus.0] * nu[minus.0],
            ColourKernel::Joint { matrix } => matrix[plus.0][minus.0],
            ColourKernel::PerDirection { isotropic, atoms } => match component {
                DirectionComponent::Isotropic => isotropic[plus.0][minus.0],
                DirectionComponent::Atom(k) => atoms[k][plus.0][minus.0],
            },
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, component: DirectionComponent, rng: &mut R) -> (Colour, Colour) {
        fn draw<R: Rng + ?Sized>(p: impl Iterator<Item = f64>, rng: &mut R) -> usize {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut last = 0;
            for (i, pi) in p.enumerate() {
                if pi > 0.0 {
                    last = i;
                }
                acc += pi;
                if u < acc {
                    return i;
                }
            }
            last
        }
        match self {
            ColourKernel::Product { nu } => {
                let a = draw(nu.iter().copied(), rng);
                let b = draw(nu.iter().copied(), rng);
                (Colour(a), Colour(b))
            }
            _ => {
                let n = self.num_colours();
                let k = draw((0..n * n).map(|k| self.prob(component, Colour(k / n), Colour(k % n))), rng);
                (Colour(k / n), Colour(k % n))
            }
        }
    }
}

/// The measure `Λ` driving every division kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingMeasure {
    dimension: usize,
    directional: DirectionalMeasure,
    colour: ColourKernel,
    intensity: f64,
}

impl DrivingMeasure {
    /// In one dimension the direction part is forced to the single normal
    /// `u = 1` with weight one, whatever `directional` says.
    pub fn new(dimension: usize, directional: DirectionalMeasure, colour: ColourKernel, intensity: f64) -> Result<Self> {
        if dimension != 1 && dimension != 2 {
            return Err(Error::InvalidMeasure(format!("unsupported dimension {dimension}")));
        }
        if !(intensity > 0.0 && intensity.is_finite()) {
            return Err(Error::InvalidMeasure(format!("intensity {intensity} must be positive")));
        }
        let directional = if dimension == 1 {
            DirectionalMeasure::Atoms(vec![DirectionAtom::new(0.0, 1.0)?])
        } else {
            directional
        };
        let iso = directional.iso_weight();
        if !(iso >= 0.0 && iso.is_finite()) {
            return Err(Error::InvalidMeasure(format!("isotropic weight {iso} must be non-negative")));
        }
        let atoms = directional.atoms();
        if iso == 0.0 && atoms.is_empty() {
            return Err(Error::InvalidMeasure("direction measure has no mass".into()));
        }
        for (i, a) in atoms.iter().enumerate() {
            if atoms[..i].iter().any(|b| b.theta == a.theta) {
                return Err(Error::InvalidMeasure(format!("duplicate atom at angle {}", a.theta)));
            }
        }
        colour.validate(atoms.len())?;
        Ok(DrivingMeasure { dimension, directional, colour, intensity })
    }

    /// Lebesgue measure on the line with a single colour.
    pub fn lebesgue_line() -> Self {
        Self::new(1, DirectionalMeasure::Isotropic, ColourKernel::single(), 1.0).expect("valid")
    }

    /// Lebesgue measure on the line with colours drawn from `ν ⊗ ν`.
    pub fn lebesgue_line_coloured(nu: Vec<f64>) -> Result<Self> {
        Self::new(1, DirectionalMeasure::Isotropic, ColourKernel::Product { nu }, 1.0)
    }

    /// The motion-invariant planar measure with colour law `ν ⊗ ν`.
    pub fn isotropic_plane(nu: Vec<f64>) -> Result<Self> {
        Self::new(2, DirectionalMeasure::Isotropic, ColourKernel::Product { nu }, 1.0)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn directional(&self) -> &DirectionalMeasure {
        &self.directional
    }

    pub fn colour_kernel(&self) -> &ColourKernel {
        &self.colour
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn num_colours(&self) -> usize {
        self.colour.num_colours()
    }

    fn atom_masses<'a>(&'a self, p: &'a Polytope) -> impl Iterator<Item = f64> + 'a {
        self.directional.atoms().iter().map(move |a| a.weight * p.width(a.normal))
    }

    fn iso_mass(&self, p: &Polytope) -> f64 {
        let w = self.directional.iso_weight();
        if w == 0.0 {
            0.0
        } else {
            w * p.isotropic_mean_width()
        }
    }

    /// `Λ(⟨p⟩)`, the mass of hyperplanes hitting the polytope.
    pub fn polytope_mass(&self, p: &Polytope) -> f64 {
        self.intensity * (self.iso_mass(p) + self.atom_masses(p).sum::<f64>())
    }

    /// `Λ(⟨c⟩)`; colours contribute a factor one.
    pub fn cell_mass(&self, c: &Cell) -> f64 {
        self.polytope_mass(&c.polytope)
    }

    /// The component of the direction measure a hyperplane's normal belongs to.
    pub fn component_of(&self, h: &SpatialHyperplane) -> DirectionComponent {
        self.directional
            .atoms()
            .iter()
            .position(|a| (a.normal[0] - h.normal[0]).abs() <= 1e-12 && (a.normal[1] - h.normal[1]).abs() <= 1e-12)
            .map_or(DirectionComponent::Isotropic, DirectionComponent::Atom)
    }

    /// `μ(u; {σ⁺}, {σ⁻})` for the direction of `h`.
    pub fn colour_prob(&self, h: &BicolouredHyperplane) -> f64 {
        self.colour.prob(self.component_of(&h.spatial), h.colour_plus, h.colour_minus)
    }

    /// Draws from `Λ(· | ⟨c⟩)`. Directions are chosen in proportion to
    /// weight × width (rejection against twice the radius for the isotropic
    /// part), offsets uniformly on the support interval.
    pub fn sample_hyperplane<R: Rng + ?Sized>(&self, c: &Cell, rng: &mut R) -> Result<BicolouredHyperplane> {
        let p = &c.polytope;
        let iso = self.iso_mass(p);
        let atoms: Vec<f64> = self.atom_masses(p).collect();
        let total = iso + atoms.iter().sum::<f64>();
        if !(total > 0.0) {
            return Err(Error::ZeroMass);
        }
        let mut pick = rng.gen::<f64>() * total;
        let mut component = DirectionComponent::Isotropic;
        if pick >= iso {
            pick -= iso;
            let mut k = atoms.len() - 1;
            for (i, m) in atoms.iter().enumerate() {
                if pick < *m {
                    k = i;
                    break;
                }
                pick -= m;
            }
            while atoms[k] == 0.0 {
                k -= 1;
            }
            component = DirectionComponent::Atom(k);
        }
        let normal = match component {
            DirectionComponent::Atom(k) => self.directional.atoms()[k].normal,
            DirectionComponent::Isotropic => {
                let bound = 2.0 * p.radius();
                loop {
                    let theta = rng.gen::<f64>() * PI;
                    let u = [theta.cos(), theta.sin()];
                    if rng.gen::<f64>() * bound < p.width(u) {
                        break u;
                    }
                }
            }
        };
        let (lo, hi) = p.support(normal);
        let offset = loop {
            let r = lo + rng.gen::<f64>() * (hi - lo);
            if lo + TOL_SPLIT < r && r < hi - TOL_SPLIT {
                break r;
            }
        };
        let (colour_plus, colour_minus) = self.colour.sample(component, rng);
        Ok(BicolouredHyperplane { spatial: SpatialHyperplane { normal, offset }, colour_plus, colour_minus })
    }

    /// Log-density of the sampling law of [`Self::sample_hyperplane`]
    /// relative to `Λ(· ∩ ⟨c⟩)/Λ(⟨c⟩)`. The sampler is exact, so this is 0.
    pub fn log_density_ratio(&self, _c: &Cell, _h: &BicolouredHyperplane) -> f64 {
        0.0
    }
}
