//! Coloured convex polytopes in one and two dimensions.
//!
//! A [`Polytope`] is either a closed interval or a strictly convex polygon
//! with counter-clockwise vertices. Intervals embed into the plane on the
//! x-axis, so every point is a `[f64; 2]` and the single direction of the
//! line is the normal `(1, 0)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Absolute tolerance for coordinates of order one.
pub const TOL_GEOM: f64 = 1e-12;
/// Band at both ends of the support interval in which hyperplanes count as
/// tangential and do not split.
pub const TOL_SPLIT: f64 = 1e-10;
/// Distance below which two edges count as lying on a common line when
/// measuring shared boundary. Vertices created by independent splits of
/// neighbouring cells agree only up to rounding.
const COLLINEAR_TOL: f64 = 1e-9;

pub type Point = [f64; 2];

#[inline]
fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Interval { lo: f64, hi: f64 },
    Polygon(Vec<Point>),
}

/// A compact convex set with non-empty interior.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    shape: Shape,
}

impl Polytope {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi - lo <= TOL_GEOM {
            return Err(Error::InvalidPolytope(format!("interval [{lo}, {hi}] has no interior")));
        }
        Ok(Polytope { shape: Shape::Interval { lo, hi } })
    }

    /// Builds a convex polygon. Clockwise input is reversed; vertices closer
    /// than [`TOL_GEOM`] are merged and collinear vertices dropped. Fails if
    /// the result is not strictly convex or has no area.
    pub fn polygon(vertices: Vec<Point>) -> Result<Self> {
        if vertices.iter().any(|v| !(v[0].is_finite() && v[1].is_finite())) {
            return Err(Error::InvalidPolytope("non-finite vertex".into()));
        }
        let mut vs = vertices;
        if signed_area(&vs) < 0.0 {
            vs.reverse();
        }
        let vs = canonicalise(vs)?;
        let area = signed_area(&vs);
        if area <= TOL_GEOM {
            return Err(Error::InvalidPolytope(format!("polygon area {area} too small")));
        }
        Ok(Polytope { shape: Shape::Polygon(vs) })
    }

    /// Axis-parallel rectangle `[lo.0, hi.0] × [lo.1, hi.1]`.
    pub fn rectangle(lo: Point, hi: Point) -> Result<Self> {
        Self::polygon(vec![lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]])
    }

    pub fn dimension(&self) -> usize {
        match self.shape {
            Shape::Interval { .. } => 1,
            Shape::Polygon(_) => 2,
        }
    }

    pub fn as_interval(&self) -> Option<(f64, f64)> {
        match self.shape {
            Shape::Interval { lo, hi } => Some((lo, hi)),
            Shape::Polygon(_) => None,
        }
    }

    pub fn as_polygon(&self) -> Option<&[Point]> {
        match &self.shape {
            Shape::Polygon(vs) => Some(vs),
            Shape::Interval { .. } => None,
        }
    }

    /// Extreme points (interval endpoints embedded on the x-axis).
    pub fn vertices(&self) -> Vec<Point> {
        match &self.shape {
            Shape::Interval { lo, hi } => vec![[*lo, 0.0], [*hi, 0.0]],
            Shape::Polygon(vs) => vs.clone(),
        }
    }

    /// Area centroid, or the midpoint of an interval.
    pub fn centroid(&self) -> Point {
        match &self.shape {
            Shape::Interval { lo, hi } => [0.5 * (lo + hi), 0.0],
            Shape::Polygon(vs) => {
                // Relative to the first vertex to keep translations exact.
                let o = vs[0];
                let (mut a2, mut cx, mut cy) = (0.0, 0.0, 0.0);
                for i in 1..vs.len() - 1 {
                    let p = sub(vs[i], o);
                    let q = sub(vs[i + 1], o);
                    let w = cross(p, q);
                    a2 += w;
                    cx += w * (p[0] + q[0]);
                    cy += w * (p[1] + q[1]);
                }
                [o[0] + cx / (3.0 * a2), o[1] + cy / (3.0 * a2)]
            }
        }
    }

    /// d-dimensional volume: length for intervals, area for polygons.
    pub fn area(&self) -> f64 {
        match &self.shape {
            Shape::Interval { lo, hi } => hi - lo,
            Shape::Polygon(vs) => signed_area(vs),
        }
    }

    /// Boundary measure. For intervals this is the number of endpoints.
    pub fn perimeter(&self) -> f64 {
        match &self.shape {
            Shape::Interval { .. } => 2.0,
            Shape::Polygon(vs) => edges(vs).map(|(a, b)| norm(sub(b, a))).sum(),
        }
    }

    /// Largest distance from the centroid.
    pub fn radius(&self) -> f64 {
        let m = self.centroid();
        match &self.shape {
            Shape::Interval { lo, hi } => 0.5 * (hi - lo),
            Shape::Polygon(vs) => vs.iter().map(|v| norm(sub(*v, m))).fold(0.0, f64::max),
        }
    }

    /// `(min, max)` of `⟨x, u⟩` over the polytope for a unit normal `u`.
    pub fn support(&self, u: Point) -> (f64, f64) {
        match &self.shape {
            Shape::Interval { lo, hi } => {
                let (a, b) = (lo * u[0], hi * u[0]);
                (a.min(b), a.max(b))
            }
            Shape::Polygon(vs) => vs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                let p = dot(*v, u);
                (lo.min(p), hi.max(p))
            }),
        }
    }

    pub fn width(&self, u: Point) -> f64 {
        let (lo, hi) = self.support(u);
        hi - lo
    }

    /// Axis-aligned extents `(x-extent, y-extent)`.
    pub fn extents(&self) -> (f64, f64) {
        (self.width([1.0, 0.0]), self.width([0.0, 1.0]))
    }

    /// Whether `h` passes through the interior, away from the tolerance band.
    pub fn is_hit_by(&self, h: &SpatialHyperplane) -> bool {
        let (lo, hi) = self.support(h.normal);
        lo + TOL_SPLIT < h.offset && h.offset < hi - TOL_SPLIT
    }

    /// Cuts the polytope along `h` into `(p ∩ {⟨x,u⟩ ≥ r}, p ∩ {⟨x,u⟩ ≤ r})`.
    pub fn split(&self, h: &SpatialHyperplane) -> Result<(Polytope, Polytope)> {
        let (lo, hi) = self.support(h.normal);
        let r = h.offset;
        if !(lo + TOL_SPLIT < r && r < hi - TOL_SPLIT) {
            return Err(Error::NotHitting { offset: r, lo, hi });
        }
        match &self.shape {
            Shape::Interval { lo, hi } => {
                let plus = Polytope::interval(r, *hi).map_err(|_| Error::DegenerateChild)?;
                let minus = Polytope::interval(*lo, r).map_err(|_| Error::DegenerateChild)?;
                Ok((plus, minus))
            }
            Shape::Polygon(vs) => {
                let n = vs.len();
                let d: Vec<f64> = vs.iter().map(|v| dot(*v, h.normal) - r).collect();
                let side = |x: f64| {
                    if x > TOL_GEOM {
                        1
                    } else if x < -TOL_GEOM {
                        -1
                    } else {
                        0
                    }
                };
                let mut plus = Vec::with_capacity(n + 2);
                let mut minus = Vec::with_capacity(n + 2);
                for i in 0..n {
                    let j = (i + 1) % n;
                    let (si, sj) = (side(d[i]), side(d[j]));
                    if si >= 0 {
                        plus.push(vs[i]);
                    }
                    if si <= 0 {
                        minus.push(vs[i]);
                    }
                    if si * sj < 0 {
                        let t = d[i] / (d[i] - d[j]);
                        let e = sub(vs[j], vs[i]);
                        let p = [vs[i][0] + t * e[0], vs[i][1] + t * e[1]];
                        plus.push(p);
                        minus.push(p);
                    }
                }
                let plus = Polytope::polygon(plus).map_err(|_| Error::DegenerateChild)?;
                let minus = Polytope::polygon(minus).map_err(|_| Error::DegenerateChild)?;
                Ok((plus, minus))
            }
        }
    }

    /// The similarity image `m + ε (x − m)` about the centroid `m`.
    pub fn retract(&self, epsilon: f64) -> Result<Polytope> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidPolytope(format!("retraction factor {epsilon} outside (0, 1]")));
        }
        let m = self.centroid();
        let scale = |v: Point| [m[0] + epsilon * (v[0] - m[0]), m[1] + epsilon * (v[1] - m[1])];
        match &self.shape {
            Shape::Interval { lo, hi } => {
                Polytope::interval(scale([*lo, 0.0])[0], scale([*hi, 0.0])[0]).map_err(|_| Error::DegenerateChild)
            }
            Shape::Polygon(vs) => {
                Polytope::polygon(vs.iter().map(|v| scale(*v)).collect()).map_err(|_| Error::DegenerateChild)
            }
        }
    }

    pub fn translate(&self, x: Point) -> Polytope {
        let shape = match &self.shape {
            Shape::Interval { lo, hi } => Shape::Interval { lo: lo + x[0], hi: hi + x[0] },
            Shape::Polygon(vs) => Shape::Polygon(vs.iter().map(|v| [v[0] + x[0], v[1] + x[1]]).collect()),
        };
        Polytope { shape }
    }

    /// (d−1)-measure of `∂p ∩ ∂q`, assuming disjoint interiors. In one
    /// dimension this counts a shared endpoint as 1.
    pub fn shared_boundary_length(&self, other: &Polytope) -> f64 {
        match (&self.shape, &other.shape) {
            (Shape::Interval { lo: a, hi: b }, Shape::Interval { lo: c, hi: d }) => {
                if (b - c).abs() <= TOL_GEOM || (d - a).abs() <= TOL_GEOM {
                    1.0
                } else {
                    0.0
                }
            }
            (Shape::Polygon(p), Shape::Polygon(q)) => {
                let mut total = 0.0;
                for (a, b) in edges(p) {
                    let e = sub(b, a);
                    let len = norm(e);
                    let dir = [e[0] / len, e[1] / len];
                    for (c, d) in edges(q) {
                        if cross(dir, sub(c, a)).abs() > COLLINEAR_TOL || cross(dir, sub(d, a)).abs() > COLLINEAR_TOL {
                            continue;
                        }
                        let tc = dot(sub(c, a), dir);
                        let td = dot(sub(d, a), dir);
                        let overlap = tc.max(td).min(len) - tc.min(td).max(0.0);
                        if overlap > 0.0 {
                            total += overlap;
                        }
                    }
                }
                total
            }
            _ => 0.0,
        }
    }

    /// Whether this polytope lies in the interior of `w`, with a margin of
    /// [`TOL_GEOM`].
    pub fn is_inside_interior_of(&self, w: &Polytope) -> bool {
        match (&self.shape, &w.shape) {
            (Shape::Interval { lo, hi }, Shape::Interval { lo: wl, hi: wh }) => {
                *lo > wl + TOL_GEOM && *hi < wh - TOL_GEOM
            }
            (Shape::Polygon(vs), Shape::Polygon(ws)) => edges(ws).all(|(a, b)| {
                let e = sub(b, a);
                let len = norm(e);
                vs.iter().all(|v| cross(e, sub(*v, a)) / len > TOL_GEOM)
            }),
            _ => false,
        }
    }

    /// Whether this polytope lies in `w` (closed containment up to tolerance).
    pub fn is_inside(&self, w: &Polytope) -> bool {
        match (&self.shape, &w.shape) {
            (Shape::Interval { lo, hi }, Shape::Interval { lo: wl, hi: wh }) => {
                *lo >= wl - TOL_GEOM && *hi <= wh + TOL_GEOM
            }
            (Shape::Polygon(vs), Shape::Polygon(ws)) => edges(ws).all(|(a, b)| {
                let e = sub(b, a);
                let len = norm(e);
                vs.iter().all(|v| cross(e, sub(*v, a)) / len >= -TOL_GEOM)
            }),
            _ => false,
        }
    }

    pub fn contains_point(&self, x: Point) -> bool {
        match &self.shape {
            Shape::Interval { lo, hi } => *lo <= x[0] && x[0] <= *hi,
            Shape::Polygon(vs) => edges(vs).all(|(a, b)| cross(sub(b, a), sub(x, a)) >= 0.0),
        }
    }

    /// Whether the interiors intersect.
    pub fn interiors_meet(&self, other: &Polytope) -> bool {
        self.intersection(other).is_some()
    }

    /// `self ∩ other`, or `None` when the intersection has no interior.
    pub fn intersection(&self, other: &Polytope) -> Option<Polytope> {
        match (&self.shape, &other.shape) {
            (Shape::Interval { lo, hi }, Shape::Interval { lo: c, hi: d }) => {
                Polytope::interval(lo.max(*c), hi.min(*d)).ok()
            }
            (Shape::Polygon(p), Shape::Polygon(q)) => {
                let mut poly = p.clone();
                for (a, b) in edges(q) {
                    poly = clip_left_of(&poly, a, b);
                    if poly.len() < 3 {
                        return None;
                    }
                }
                Polytope::polygon(poly).ok()
            }
            _ => None,
        }
    }

    /// Mean width under the normalised isotropic direction measure,
    /// `(1/π) ∫_0^π width(θ) dθ`, by Gauss–Legendre quadrature on the pieces
    /// where the extreme vertices do not change.
    pub fn isotropic_mean_width(&self) -> f64 {
        match &self.shape {
            Shape::Interval { lo, hi } => hi - lo,
            Shape::Polygon(vs) => {
                let mut cuts: Vec<f64> = edges(vs)
                    .map(|(a, b)| {
                        let e = sub(b, a);
                        // Normal direction of this edge.
                        (e[1].atan2(e[0]) + 0.5 * PI).rem_euclid(PI)
                    })
                    .collect();
                cuts.push(0.0);
                cuts.push(PI);
                cuts.sort_by(f64::total_cmp);
                cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
                let mut total = 0.0;
                for w in cuts.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    if b - a <= 0.0 {
                        continue;
                    }
                    let half = 0.5 * (b - a);
                    let mid = 0.5 * (a + b);
                    for (x, wt) in GAUSS_LEGENDRE_8 {
                        let t = mid + half * x;
                        total += wt * half * self.width([t.cos(), t.sin()]);
                    }
                }
                total / PI
            }
        }
    }
}

const GAUSS_LEGENDRE_8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

fn edges(vs: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    (0..vs.len()).map(move |i| (vs[i], vs[(i + 1) % vs.len()]))
}

fn signed_area(vs: &[Point]) -> f64 {
    if vs.len() < 3 {
        return 0.0;
    }
    let o = vs[0];
    let mut a2 = 0.0;
    for i in 1..vs.len() - 1 {
        a2 += cross(sub(vs[i], o), sub(vs[i + 1], o));
    }
    0.5 * a2
}

/// Merges near-coincident vertices, drops collinear ones and checks strict
/// convexity.
fn canonicalise(mut vs: Vec<Point>) -> Result<Vec<Point>> {
    loop {
        let n = vs.len();
        if n < 3 {
            return Err(Error::InvalidPolytope("fewer than three distinct vertices".into()));
        }
        if let Some(i) = (0..n).find(|&i| norm(sub(vs[(i + 1) % n], vs[i])) < TOL_GEOM) {
            vs.remove((i + 1) % n);
            continue;
        }
        let mut dropped = false;
        for i in 0..n {
            let prev = vs[(i + n - 1) % n];
            let next = vs[(i + 1) % n];
            let e1 = sub(vs[i], prev);
            let e2 = sub(next, vs[i]);
            let c = cross(e1, e2);
            let scale = norm(e1) * norm(e2);
            if c.abs() <= TOL_GEOM * scale.max(TOL_GEOM) {
                vs.remove(i);
                dropped = true;
                break;
            }
            if c < 0.0 {
                return Err(Error::InvalidPolytope("polygon is not convex".into()));
            }
        }
        if !dropped {
            return Ok(vs);
        }
    }
}

/// Sutherland–Hodgman step keeping the part left of the directed line `a → b`.
fn clip_left_of(poly: &[Point], a: Point, b: Point) -> Vec<Point> {
    let e = sub(b, a);
    let len = norm(e);
    let dist = |p: Point| cross(e, sub(p, a)) / len;
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let (dp, dq) = (dist(p), dist(q));
        if dp >= -TOL_GEOM {
            out.push(p);
        }
        if (dp > TOL_GEOM && dq < -TOL_GEOM) || (dp < -TOL_GEOM && dq > TOL_GEOM) {
            let t = dp / (dp - dq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// An unoriented line `{x : ⟨x, u⟩ = r}` with unit normal `u` in the upper
/// half circle. The normal is stored directly so that serialised
/// hyperplanes replay bit-exactly. "Horizontal lines" have `u = (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialHyperplane {
    pub normal: Point,
    pub offset: f64,
}

impl SpatialHyperplane {
    /// From an angle `θ`, canonicalised into `[0, π)`.
    pub fn from_angle(theta: f64, offset: f64) -> Self {
        let t = theta.rem_euclid(2.0 * PI);
        if t >= PI {
            let t = t - PI;
            SpatialHyperplane { normal: [t.cos(), t.sin()], offset: -offset }
        } else {
            SpatialHyperplane { normal: [t.cos(), t.sin()], offset }
        }
    }

    /// From an explicit normal; flipped into the upper half circle if needed.
    pub fn new(normal: Point, offset: f64) -> Result<Self> {
        let n = norm(normal);
        if !((n - 1.0).abs() <= 1e-9) {
            return Err(Error::InvalidPolytope(format!("hyperplane normal has length {n}")));
        }
        let upper = normal[1] > 0.0 || (normal[1] == 0.0 && normal[0] > 0.0);
        Ok(if upper {
            SpatialHyperplane { normal, offset }
        } else {
            SpatialHyperplane { normal: [-normal[0], -normal[1]], offset: -offset }
        })
    }

    /// The hyperplane of a line (d = 1) through `x`.
    pub fn point(x: f64) -> Self {
        SpatialHyperplane { normal: [1.0, 0.0], offset: x }
    }

    pub fn angle(&self) -> f64 {
        self.normal[1].atan2(self.normal[0]).rem_euclid(PI)
    }

    pub fn translate(&self, x: Point) -> Self {
        SpatialHyperplane { normal: self.normal, offset: self.offset + dot(x, self.normal) }
    }
}

/// Index into a finite colour alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Colour(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub polytope: Polytope,
    pub colour: Colour,
    pub birth_time: f64,
}

impl Cell {
    pub fn new(polytope: Polytope, colour: Colour, birth_time: f64) -> Self {
        Cell { polytope, colour, birth_time }
    }

    pub fn translate(&self, x: Point) -> Cell {
        Cell { polytope: self.polytope.translate(x), ..self.clone() }
    }
}

/// A cutting line whose two sides impose colours on the daughter cells:
/// `colour_plus` on `{⟨x,u⟩ ≥ r}`, `colour_minus` on the other side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BicolouredHyperplane {
    pub spatial: SpatialHyperplane,
    pub colour_plus: Colour,
    pub colour_minus: Colour,
}

impl BicolouredHyperplane {
    pub fn translate(&self, x: Point) -> Self {
        BicolouredHyperplane { spatial: self.spatial.translate(x), ..*self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_square() -> Polytope {
        Polytope::rectangle([0.0, 0.0], [1.0, 1.0]).unwrap()
    }

    fn triangle(s: f64) -> Polytope {
        Polytope::polygon(vec![[0.0, 0.0], [s, 0.0], [0.0, s]]).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn centroid_examples() {
        assert_eq!(unit_square().centroid(), [0.5, 0.5]);
        assert_eq!(Polytope::interval(2.0, 5.0).unwrap().centroid()[0], 3.5);
        let c = triangle(3.0).centroid();
        // Vertex average of a triangle.
        let avg = [(0.0 + 3.0 + 0.0) / 3.0, (0.0 + 0.0 + 3.0) / 3.0];
        assert!(close(c[0], avg[0], 1e-14) && close(c[1], avg[1], 1e-14));
    }

    #[test]
    fn radius_examples() {
        assert!(close(unit_square().radius(), 0.5f64.sqrt(), 1e-15));
        assert_eq!(Polytope::interval(0.0, 4.0).unwrap().radius(), 2.0);
        assert!(close(triangle(3.0).radius(), 5f64.sqrt(), 1e-14));
    }

    #[test]
    fn support_examples() {
        let sq = unit_square();
        assert_eq!(sq.support([0.0, 1.0]), (0.0, 1.0));
        let h = 0.5f64.sqrt();
        let (lo, hi) = sq.support([h, h]);
        assert!(close(lo, 0.0, 1e-15) && close(hi, 2f64.sqrt(), 1e-15));
        let iv = Polytope::interval(2.0, 5.0).unwrap();
        assert_eq!(iv.support([1.0, 0.0]), (2.0, 5.0));
        assert_eq!(iv.width([1.0, 0.0]), 3.0);
    }

    #[test]
    fn split_examples() {
        let (p, m) = unit_square().split(&SpatialHyperplane::from_angle(0.0, 0.5)).unwrap();
        assert!(close(p.area(), 0.5, 1e-15) && close(m.area(), 0.5, 1e-15));
        assert!(p.centroid()[0] > m.centroid()[0]);

        let (p, m) = triangle(1.0).split(&SpatialHyperplane::from_angle(0.0, 0.5)).unwrap();
        // Shoelace on the clipped vertex lists.
        let shoelace = |vs: &[Point]| {
            let n = vs.len();
            0.5 * (0..n).map(|i| vs[i][0] * vs[(i + 1) % n][1] - vs[(i + 1) % n][0] * vs[i][1]).sum::<f64>()
        };
        let plus_ref = shoelace(&[[0.5, 0.0], [1.0, 0.0], [0.5, 0.5]]);
        let minus_ref = shoelace(&[[0.0, 0.0], [0.5, 0.0], [0.5, 0.5], [0.0, 1.0]]);
        assert!(close(plus_ref, 0.125, 1e-15) && close(minus_ref, 0.375, 1e-15));
        assert!(close(p.area(), plus_ref, 1e-15));
        assert!(close(m.area(), minus_ref, 1e-15));

        let err = unit_square().split(&SpatialHyperplane::from_angle(0.0, 2.0)).unwrap_err();
        assert!(matches!(err, Error::NotHitting { .. }));
    }

    #[test]
    fn split_rejects_tangential_band() {
        let sq = unit_square();
        assert!(sq.split(&SpatialHyperplane::from_angle(0.0, 1e-11)).is_err());
        assert!(sq.split(&SpatialHyperplane::from_angle(0.0, 1.0)).is_err());
        assert!(sq.split(&SpatialHyperplane::from_angle(0.0, 1e-9)).is_ok());
    }

    #[test]
    fn split_through_vertices() {
        let h = 0.5f64.sqrt();
        let diag = SpatialHyperplane::new([h, -h], 0.0).unwrap();
        let (p, m) = unit_square().split(&diag).unwrap();
        assert_eq!(p.as_polygon().unwrap().len(), 3);
        assert_eq!(m.as_polygon().unwrap().len(), 3);
        assert!(close(p.area() + m.area(), 1.0, 1e-15));
    }

    #[test]
    fn area_perimeter_examples() {
        assert_eq!(unit_square().area(), 1.0);
        assert_eq!(unit_square().perimeter(), 4.0);
        assert_eq!(Polytope::interval(0.0, 3.0).unwrap().area(), 3.0);
        let t = triangle(1.0);
        assert!(close(t.area(), 0.5, 1e-15));
        assert!(close(t.perimeter(), 2.0 + 2f64.sqrt(), 1e-14));
    }

    #[test]
    fn retract_examples() {
        let sq = unit_square();
        assert_eq!(sq.retract(1.0).unwrap(), sq);
        let half = sq.retract(0.5).unwrap();
        assert_eq!(half.as_polygon().unwrap(), &[[0.25, 0.25], [0.75, 0.25], [0.75, 0.75], [0.25, 0.75]]);
        assert!(close(half.area(), 0.25, 1e-15));
        assert_eq!(Polytope::interval(0.0, 4.0).unwrap().retract(0.25).unwrap().as_interval(), Some((1.5, 2.5)));
        assert!(sq.retract(0.0).is_err());
        assert!(matches!(sq.retract(1e-7), Err(Error::DegenerateChild)));
    }

    #[test]
    fn shared_boundary_examples() {
        let a = unit_square();
        let b = Polytope::rectangle([1.0, 0.0], [2.0, 1.0]).unwrap();
        let c = Polytope::rectangle([2.0, 2.0], [3.0, 3.0]).unwrap();
        let d = Polytope::rectangle([1.0, 0.5], [2.0, 1.5]).unwrap();
        assert!(close(a.shared_boundary_length(&b), 1.0, 1e-15));
        assert_eq!(a.shared_boundary_length(&c), 0.0);
        assert!(close(a.shared_boundary_length(&d), 0.5, 1e-15));
        let i = Polytope::interval(0.0, 1.0).unwrap();
        assert_eq!(i.shared_boundary_length(&Polytope::interval(1.0, 2.0).unwrap()), 1.0);
        assert_eq!(i.shared_boundary_length(&Polytope::interval(1.5, 2.0).unwrap()), 0.0);
    }

    #[test]
    fn invalid_polygons_rejected() {
        assert!(Polytope::polygon(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        assert!(Polytope::polygon(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
        // A non-convex quadrilateral.
        assert!(Polytope::polygon(vec![[0.0, 0.0], [2.0, 0.0], [0.5, 0.5], [0.0, 2.0]]).is_err());
        assert!(Polytope::interval(1.0, 1.0).is_err());
    }

    #[test]
    fn clockwise_and_collinear_input_is_canonicalised() {
        let p = Polytope::polygon(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.5], [1.0, 0.0]]).unwrap();
        assert_eq!(p.as_polygon().unwrap().len(), 4);
        assert!(p.area() > 0.0);
    }

    #[test]
    fn inside_checks() {
        let w = Polytope::rectangle([0.5, 0.5], [1.5, 1.5]).unwrap();
        for (lo, hi) in [([0.0, 0.0], [1.0, 1.0]), ([1.0, 1.0], [2.0, 2.0])] {
            assert!(!Polytope::rectangle(lo, hi).unwrap().is_inside_interior_of(&w));
        }
        let small = Polytope::rectangle([0.6, 0.6], [0.9, 0.9]).unwrap();
        assert!(small.is_inside_interior_of(&w));
        assert!(!w.is_inside_interior_of(&w));
        assert!(w.is_inside(&w));
    }

    #[test]
    fn intersection_of_overlapping_squares() {
        let a = unit_square();
        let b = Polytope::rectangle([0.5, 0.5], [1.5, 1.5]).unwrap();
        assert!(close(a.intersection(&b).unwrap().area(), 0.25, 1e-15));
        let c = Polytope::rectangle([1.0, 0.0], [2.0, 1.0]).unwrap();
        assert!(a.intersection(&c).is_none());
    }

    #[test]
    fn unit_square_mean_width() {
        assert!(close(unit_square().isotropic_mean_width(), 4.0 / PI, 1e-13));
    }

    #[test]
    fn hyperplane_canonicalisation() {
        let h = SpatialHyperplane::from_angle(3.0 * PI / 2.0, 0.25);
        assert!(close(h.normal[0], 0.0, 1e-15) && close(h.normal[1], 1.0, 1e-15));
        assert_eq!(h.offset, -0.25);
        let g = SpatialHyperplane::new([-1.0, 0.0], 2.0).unwrap();
        assert_eq!(g.normal, [1.0, 0.0]);
        assert_eq!(g.offset, -2.0);
        assert!(SpatialHyperplane::new([2.0, 0.0], 0.0).is_err());
    }

    /// Random convex polygon: sorted angles on an ellipse, plus a shift.
    fn arb_polygon() -> impl Strategy<Value = Polytope> {
        (
            proptest::collection::vec(0.0..(2.0 * PI), 3..12),
            0.2f64..3.0,
            0.2f64..3.0,
            -5.0f64..5.0,
            -5.0f64..5.0,
        )
            .prop_filter_map("degenerate polygon", |(mut angles, a, b, x, y)| {
                angles.sort_by(f64::total_cmp);
                let vs = angles.iter().map(|t| [x + a * t.cos(), y + b * t.sin()]).collect();
                Polytope::polygon(vs).ok().filter(|p| p.area() > 1e-3)
            })
    }

    proptest! {
        #[test]
        fn split_conserves_area(p in arb_polygon(), theta in 0.0..PI, frac in 0.001f64..0.999) {
            let u = [theta.cos(), theta.sin()];
            let (lo, hi) = p.support(u);
            let h = SpatialHyperplane::from_angle(theta, lo + frac * (hi - lo));
            match p.split(&h) {
                Ok((a, b)) => {
                    prop_assert!((a.area() + b.area() - p.area()).abs() <= 1e-9 * p.area());
                    prop_assert!(a.is_inside(&p) && b.is_inside(&p));
                }
                Err(e) => prop_assert_eq!(e, Error::DegenerateChild),
            }
        }

        #[test]
        fn outside_support_never_splits(p in arb_polygon(), theta in 0.0..PI, gap in 0.0f64..2.0) {
            let u = [theta.cos(), theta.sin()];
            let (lo, hi) = p.support(u);
            let above = p.split(&SpatialHyperplane::from_angle(theta, hi + gap));
            let below = p.split(&SpatialHyperplane::from_angle(theta, lo - gap));
            let is_not_hitting = |r: &Result<(Polytope, Polytope)>| matches!(r, Err(Error::NotHitting { .. }));
            prop_assert!(is_not_hitting(&above));
            prop_assert!(is_not_hitting(&below));
        }

        #[test]
        fn translation_covariance(p in arb_polygon(), theta in 0.0..PI, frac in 0.05f64..0.95,
                                  x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let shift = [x, y];
            let c0 = p.centroid();
            let c1 = p.translate(shift).centroid();
            prop_assert!((c1[0] - c0[0] - x).abs() <= 1e-12 && (c1[1] - c0[1] - y).abs() <= 1e-12);
            let (lo, hi) = p.support([theta.cos(), theta.sin()]);
            let h = SpatialHyperplane::from_angle(theta, lo + frac * (hi - lo));
            if let (Ok((a, b)), Ok((a2, b2))) = (p.split(&h), p.translate(shift).split(&h.translate(shift))) {
                for (orig, moved) in [(a, a2), (b, b2)] {
                    let vs = orig.translate(shift).vertices();
                    let ws = moved.vertices();
                    prop_assert_eq!(vs.len(), ws.len());
                    for (v, w) in vs.iter().zip(&ws) {
                        prop_assert!((v[0] - w[0]).abs() <= 1e-12 && (v[1] - w[1]).abs() <= 1e-12);
                    }
                }
            }
        }

        #[test]
        fn cauchy_mean_width(p in arb_polygon()) {
            prop_assert!((p.isotropic_mean_width() - p.perimeter() / PI).abs() <= 1e-6);
        }
    }
}
