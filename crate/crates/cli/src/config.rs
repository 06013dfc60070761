//! Run configuration (JSON).

use std::path::Path;

use brt_core::driving::{ColourKernel, DirectionAtom, DirectionalMeasure};
use brt_core::kernels::{BetaFunction, EdgeConvention};
use brt_core::{Cell, Colour, DrivingMeasure, KernelSpec, ObservationScheme, Polytope, SimRng, Tessellation};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed configuration: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] brt_core::Error),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowSpec {
    Interval([f64; 2]),
    Box { lo: [f64; 2], hi: [f64; 2] },
    Polygon(Vec<[f64; 2]>),
}

impl WindowSpec {
    pub fn polytope(&self) -> Result<Polytope, ConfigError> {
        Ok(match self {
            WindowSpec::Interval([a, b]) => Polytope::interval(*a, *b)?,
            WindowSpec::Box { lo, hi } => Polytope::rectangle(*lo, *hi)?,
            WindowSpec::Polygon(vs) => Polytope::polygon(vs.clone())?,
        })
    }

    pub fn from_polytope(p: &Polytope) -> Self {
        match p.as_interval() {
            Some((a, b)) => WindowSpec::Interval([a, b]),
            None => WindowSpec::Polygon(p.vertices()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub theta: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DirectionalSpec {
    #[default]
    Isotropic,
    Atoms { atoms: Vec<AtomSpec> },
    Mixture { iso_weight: f64, atoms: Vec<AtomSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ColourKernelSpec {
    Product { nu: Vec<f64> },
    Matrix { rows: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSpec {
    #[serde(default)]
    pub directional: DirectionalSpec,
    /// Defaults to the uniform product law over the colour alphabet.
    #[serde(default)]
    pub colour_kernel: Option<ColourKernelSpec>,
    #[serde(default = "one")]
    pub intensity: f64,
}

impl Default for LambdaSpec {
    fn default() -> Self {
        LambdaSpec { directional: DirectionalSpec::Isotropic, colour_kernel: None, intensity: 1.0 }
    }
}

fn one() -> f64 {
    1.0
}

impl LambdaSpec {
    pub fn build(&self, dimension: usize, n_colours: usize) -> Result<DrivingMeasure, ConfigError> {
        let atoms = |a: &[AtomSpec]| a.iter().map(|x| DirectionAtom::new(x.theta, x.weight)).collect::<Result<Vec<_>, _>>();
        let directional = match &self.directional {
            DirectionalSpec::Isotropic => DirectionalMeasure::Isotropic,
            DirectionalSpec::Atoms { atoms: a } => DirectionalMeasure::Atoms(atoms(a)?),
            DirectionalSpec::Mixture { iso_weight, atoms: a } => DirectionalMeasure::Mixture { iso_weight: *iso_weight, atoms: atoms(a)? },
        };
        let colour = match &self.colour_kernel {
            None => ColourKernel::uniform(n_colours),
            Some(ColourKernelSpec::Product { nu }) => ColourKernel::Product { nu: nu.clone() },
            Some(ColourKernelSpec::Matrix { rows }) => ColourKernel::Joint { matrix: rows.clone() },
        };
        let lambda = DrivingMeasure::new(dimension, directional, colour, self.intensity)?;
        if lambda.num_colours() != n_colours {
            return Err(invalid(format!("colour kernel has {} colours but the alphabet has {n_colours}", lambda.num_colours())));
        }
        Ok(lambda)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BetaSpec {
    Constant { value: f64 },
    /// `β = (1 + f) / 2` in the surface fraction `f`.
    HalfOnePlusFraction,
    Grid { ages: Vec<f64>, fractions: Vec<f64>, values: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EdgeSpec {
    #[default]
    Neutral,
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelConfig {
    Stit,
    Constant { a: f64 },
    SizeBalance { epsilon: f64 },
    UnitRate,
    Mutation {
        epsilon: f64,
        beta: BetaSpec,
        #[serde(default)]
        edge: EdgeSpec,
    },
    Directional {
        #[serde(default)]
        bound: Option<f64>,
    },
    Block { inner: Box<KernelConfig>, n: f64, corridor: f64 },
}

impl KernelConfig {
    pub fn build(&self) -> Result<KernelSpec, ConfigError> {
        Ok(match self {
            KernelConfig::Stit => KernelSpec::stit(),
            KernelConfig::Constant { a } => KernelSpec::constant(*a)?,
            KernelConfig::SizeBalance { epsilon } => KernelSpec::size_balance(*epsilon)?,
            KernelConfig::UnitRate => KernelSpec::unit_rate(),
            KernelConfig::Mutation { epsilon, beta, edge } => {
                let beta = match beta {
                    BetaSpec::Constant { value } => BetaFunction::Constant(*value),
                    BetaSpec::HalfOnePlusFraction => BetaFunction::HalfOnePlusFraction,
                    BetaSpec::Grid { ages, fractions, values } => {
                        BetaFunction::Grid { ages: ages.clone(), fractions: fractions.clone(), values: values.clone() }
                    }
                };
                let edge = match edge {
                    EdgeSpec::Neutral => EdgeConvention::WindowNeutral,
                    EdgeSpec::Excluded => EdgeConvention::WindowExcluded,
                };
                KernelSpec::mutation(*epsilon, beta, edge)?
            }
            KernelConfig::Directional { bound } => KernelSpec::directional(*bound),
            KernelConfig::Block { inner, n, corridor } => KernelSpec::block(inner.build()?, *n, *corridor)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub colour: usize,
}

impl CellSpec {
    pub fn from_cell(c: &Cell) -> Self {
        match c.polytope.as_interval() {
            Some((a, b)) => CellSpec { interval: Some([a, b]), vertices: None, colour: c.colour.0 },
            None => CellSpec { interval: None, vertices: Some(c.polytope.vertices()), colour: c.colour.0 },
        }
    }

    pub fn polytope(&self) -> Result<Polytope, ConfigError> {
        match (&self.interval, &self.vertices) {
            (Some([a, b]), None) => Ok(Polytope::interval(*a, *b)?),
            (None, Some(vs)) => Ok(Polytope::polygon(vs.clone())?),
            _ => Err(invalid("a cell needs exactly one of `interval` or `vertices`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitialSpec {
    /// The whole window as one cell.
    Single {
        #[serde(default)]
        colour: usize,
    },
    /// A lattice of cubes of side `spacing`; `shift` in units of the
    /// spacing, drawn uniformly per replicate when absent. Only unit
    /// spacing is supported in d = 1 with a random shift.
    Lattice {
        #[serde(default = "one")]
        spacing: f64,
        #[serde(default)]
        shift: Option<[f64; 2]>,
        #[serde(default)]
        colour: usize,
    },
    Cells { cells: Vec<CellSpec> },
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Single { colour: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationSpec {
    /// Side of the observation cube, centred at the window centroid.
    pub side: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    pub window: WindowSpec,
    #[serde(default = "default_colours")]
    pub colours: Vec<String>,
    #[serde(default)]
    pub lambda: LambdaSpec,
    pub kernel: KernelConfig,
    #[serde(default)]
    pub initial: InitialSpec,
    pub t_end: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_usize")]
    pub replicates: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<ObservationSpec>,
    #[serde(default = "default_cap")]
    pub event_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_colours() -> Vec<String> {
    vec!["A".into()]
}

fn one_usize() -> usize {
    1
}

fn default_cap() -> usize {
    brt_core::simulator::DEFAULT_EVENT_CAP
}

/// Everything a run needs, built and checked.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub window: Polytope,
    pub lambda: DrivingMeasure,
    pub kernel: KernelSpec,
    pub scheme: Option<ObservationScheme>,
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serialises")
    }

    /// Builds the library objects and checks every cross-field constraint.
    pub fn prepare(&self) -> Result<Prepared, ConfigError> {
        if !(1..=2).contains(&self.dimension) {
            return Err(invalid(format!("dimension {} not supported (1 or 2)", self.dimension)));
        }
        if !(0.0..=1.0).contains(&self.t_end) {
            return Err(invalid(format!("t_end = {} outside [0, 1]", self.t_end)));
        }
        if self.colours.is_empty() {
            return Err(invalid("the colour alphabet is empty"));
        }
        if self.replicates == 0 {
            return Err(invalid("replicates must be positive"));
        }
        let window = self.window.polytope()?;
        if window.dimension() != self.dimension {
            return Err(invalid(format!("window has dimension {} but dimension is {}", window.dimension(), self.dimension)));
        }
        let lambda = self.lambda.build(self.dimension, self.colours.len())?;
        let kernel = self.kernel.build()?;
        kernel.check_compatible(&lambda)?;
        let scheme = match &self.observation {
            None => None,
            Some(o) => {
                if o.margin < kernel.range() {
                    return Err(invalid(format!("observation margin {} is smaller than the kernel range {}", o.margin, kernel.range())));
                }
                let m = window.centroid();
                let obs = match self.dimension {
                    1 => Polytope::interval(m[0] - 0.5 * o.side, m[0] + 0.5 * o.side)?,
                    _ => Polytope::rectangle([m[0] - 0.5 * o.side, m[1] - 0.5 * o.side], [m[0] + 0.5 * o.side, m[1] + 0.5 * o.side])?,
                };
                Some(ObservationScheme::new(window.clone(), obs, o.margin).map_err(|_| {
                    invalid(format!("observation window of side {} with margin {} does not fit the simulation window", o.side, o.margin))
                })?)
            }
        };
        if let InitialSpec::Cells { cells } = &self.initial {
            for c in cells {
                if c.colour >= self.colours.len() {
                    return Err(invalid(format!("cell colour {} outside the alphabet", c.colour)));
                }
            }
        }
        Ok(Prepared { window, lambda, kernel, scheme })
    }

    /// The initial tessellation of one replicate.
    pub fn initial_tessellation(&self, window: &Polytope, rng: &mut SimRng) -> Result<Tessellation, ConfigError> {
        match &self.initial {
            InitialSpec::Single { colour } => {
                Ok(Tessellation { window: window.clone(), cells: vec![Cell::new(window.clone(), Colour(*colour), 0.0)] })
            }
            InitialSpec::Lattice { spacing, shift, colour } => {
                let shift = shift.unwrap_or_else(|| [rng.gen(), rng.gen()]);
                lattice(window, *spacing, shift, Colour(*colour))
            }
            InitialSpec::Cells { cells } => {
                let cells = cells.iter().map(|c| Ok(Cell::new(c.polytope()?, Colour(c.colour), 0.0))).collect::<Result<Vec<_>, ConfigError>>()?;
                let t = Tessellation { window: window.clone(), cells };
                t.validate()?;
                Ok(t)
            }
        }
    }
}

/// Cubes `spacing · (shift + k + [0,1]^d)` clipped to the window.
fn lattice(window: &Polytope, spacing: f64, shift: [f64; 2], colour: Colour) -> Result<Tessellation, ConfigError> {
    if !(spacing > 0.0) {
        return Err(invalid("lattice spacing must be positive"));
    }
    if let Some((lo, hi)) = window.as_interval() {
        let mut t = Tessellation::shifted_unit_lattice(lo / spacing, hi / spacing, shift[0], colour)?;
        if spacing != 1.0 {
            t.window = window.clone();
            t.cells = t
                .cells
                .iter()
                .map(|c| {
                    let (a, b) = c.polytope.as_interval().expect("interval");
                    Ok(Cell::new(Polytope::interval(a * spacing, b * spacing)?, colour, 0.0))
                })
                .collect::<Result<_, ConfigError>>()?;
        }
        return Ok(t);
    }
    let vs = window.vertices();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in &vs {
        for k in 0..2 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    let start = |k: usize| ((lo[k] / spacing - shift[k]).floor() + shift[k]) * spacing;
    let mut cells = Vec::new();
    let mut x = start(0);
    while x < hi[0] {
        let mut y = start(1);
        while y < hi[1] {
            let square = Polytope::rectangle([x, y], [x + spacing, y + spacing])?;
            if let Some(piece) = square.intersection(window) {
                if piece.area() > 1e-9 {
                    cells.push(Cell::new(piece, colour, 0.0));
                }
            }
            y += spacing;
        }
        x += spacing;
    }
    Ok(Tessellation { window: window.clone(), cells })
}
