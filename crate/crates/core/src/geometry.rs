//! Planar domains, uniform sampling and nearest-generator (Voronoi) labelling.
//!
//! Cells of the tessellation are never materialised. A location belongs to
//! the cell of its nearest generator, with ties going to the lowest index,
//! and that rule is all the sampler ever needs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Location<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Location<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Location { x, y }
    }

    #[inline]
    pub fn dist2(&self, other: &Self) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(&self, other: &Self) -> T {
        self.dist2(other).sqrt()
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Raw description of a domain, before validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DomainShape<T> {
    Rectangle {
        xmin: T,
        xmax: T,
        ymin: T,
        ymax: T,
    },
    /// Counterclockwise vertex list; the closing edge is implicit.
    Polygon(Vec<Location<T>>),
}

/// Area of a domain: width times height, or the shoelace formula.
pub fn domain_volume<T: Real>(shape: &DomainShape<T>) -> Result<T> {
    let area = match shape {
        DomainShape::Rectangle { xmin, xmax, ymin, ymax } => (*xmax - *xmin) * (*ymax - *ymin),
        DomainShape::Polygon(v) => signed_area(v),
    };
    if !(area > T::zero()) || !area.is_finite() {
        return Err(Error::InvalidDomain(format!(
            "non-positive area {area} (polygons must be counterclockwise)"
        )));
    }
    Ok(area)
}

fn signed_area<T: Real>(v: &[Location<T>]) -> T {
    if v.len() < 3 {
        return T::zero();
    }
    let mut acc = T::zero();
    for i in 0..v.len() {
        let a = v[i];
        let b = v[(i + 1) % v.len()];
        acc = acc + (a.x * b.y - b.x * a.y);
    }
    acc * T::lit(0.5)
}

fn orient<T: Real>(a: Location<T>, b: Location<T>, c: Location<T>) -> T {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_intersect<T: Real>(p1: Location<T>, p2: Location<T>, q1: Location<T>, q2: Location<T>) -> bool {
    let on_segment = |a: Location<T>, b: Location<T>, c: Location<T>| {
        c.x >= a.x.min(b.x) && c.x <= a.x.max(b.x) && c.y >= a.y.min(b.y) && c.y <= a.y.max(b.y)
    };
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    let zero = T::zero();
    if ((d1 > zero && d2 < zero) || (d1 < zero && d2 > zero)) && ((d3 > zero && d4 < zero) || (d3 < zero && d4 > zero))
    {
        return true;
    }
    (d1 == zero && on_segment(q1, q2, p1))
        || (d2 == zero && on_segment(q1, q2, p2))
        || (d3 == zero && on_segment(p1, p2, q1))
        || (d4 == zero && on_segment(p1, p2, q2))
}

fn is_simple<T: Real>(v: &[Location<T>]) -> bool {
    let n = v.len();
    for i in 0..n {
        let (a1, a2) = (v[i], v[(i + 1) % n]);
        for j in (i + 1)..n {
            // adjacent edges share a vertex by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (b1, b2) = (v[j], v[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

/// A validated compact region of the plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialDomain<T> {
    shape: DomainShape<T>,
    area: T,
    bbox: [T; 4],
}

impl<T: Real> SpatialDomain<T> {
    pub fn rectangle(xmin: T, xmax: T, ymin: T, ymax: T) -> Result<Self> {
        Self::new(DomainShape::Rectangle { xmin, xmax, ymin, ymax })
    }

    pub fn polygon(vertices: Vec<Location<T>>) -> Result<Self> {
        Self::new(DomainShape::Polygon(vertices))
    }

    pub fn new(shape: DomainShape<T>) -> Result<Self> {
        let bbox = match &shape {
            DomainShape::Rectangle { xmin, xmax, ymin, ymax } => {
                if ![*xmin, *xmax, *ymin, *ymax].iter().all(|v| v.is_finite()) {
                    return Err(Error::InvalidDomain("non-finite bounds".into()));
                }
                [*xmin, *xmax, *ymin, *ymax]
            }
            DomainShape::Polygon(v) => {
                if v.len() < 3 {
                    return Err(Error::InvalidDomain(format!(
                        "polygon needs at least 3 vertices, got {}",
                        v.len()
                    )));
                }
                if !v.iter().all(Location::is_finite) {
                    return Err(Error::InvalidDomain("non-finite vertex".into()));
                }
                if !is_simple(v) {
                    return Err(Error::InvalidDomain("polygon is self-intersecting".into()));
                }
                let mut b = [v[0].x, v[0].x, v[0].y, v[0].y];
                for p in v {
                    b[0] = b[0].min(p.x);
                    b[1] = b[1].max(p.x);
                    b[2] = b[2].min(p.y);
                    b[3] = b[3].max(p.y);
                }
                b
            }
        };
        let area = domain_volume(&shape)?;
        Ok(SpatialDomain { shape, area, bbox })
    }

    pub fn shape(&self) -> &DomainShape<T> {
        &self.shape
    }

    #[inline]
    pub fn area(&self) -> T {
        self.area
    }

    /// `[xmin, xmax, ymin, ymax]` of the bounding rectangle.
    #[inline]
    pub fn bbox(&self) -> [T; 4] {
        self.bbox
    }

    /// Closed-set membership for rectangles; crossing-number test for polygons.
    pub fn contains(&self, s: &Location<T>) -> bool {
        match &self.shape {
            DomainShape::Rectangle { xmin, xmax, ymin, ymax } => {
                s.x >= *xmin && s.x <= *xmax && s.y >= *ymin && s.y <= *ymax
            }
            DomainShape::Polygon(v) => {
                let mut inside = false;
                let n = v.len();
                let mut j = n - 1;
                for i in 0..n {
                    let (a, b) = (v[i], v[j]);
                    if (a.y > s.y) != (b.y > s.y) {
                        let xc = (b.x - a.x) * (s.y - a.y) / (b.y - a.y) + a.x;
                        if s.x < xc {
                            inside = !inside;
                        }
                    }
                    j = i;
                }
                inside
            }
        }
    }

    /// One uniform draw; polygons use bounding-box rejection.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Location<T> {
        let [x0, x1, y0, y1] = self.bbox;
        loop {
            let s = Location::new(
                x0 + (x1 - x0) * T::lit(rng.random::<f64>()),
                y0 + (y1 - y0) * T::lit(rng.random::<f64>()),
            );
            if matches!(self.shape, DomainShape::Rectangle { .. }) || self.contains(&s) {
                return s;
            }
        }
    }
}

/// `n` i.i.d. uniform locations on the domain.
pub fn sample_uniform<T: Real, R: Rng + ?Sized>(domain: &SpatialDomain<T>, n: usize, rng: &mut R) -> Vec<Location<T>> {
    (0..n).map(|_| domain.sample_one(rng)).collect()
}

/// Generator points of a Voronoi tessellation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition<T> {
    generators: Vec<Location<T>>,
}

impl<T: Real> Partition<T> {
    pub fn new(generators: Vec<Location<T>>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidPartition("at least one generator required".into()));
        }
        if !generators.iter().all(Location::is_finite) {
            return Err(Error::InvalidPartition("non-finite generator".into()));
        }
        for i in 0..generators.len() {
            for j in 0..i {
                if generators[i] == generators[j] {
                    return Err(Error::InvalidPartition(format!("generators {j} and {i} coincide")));
                }
            }
        }
        Ok(Partition { generators })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    #[inline]
    pub fn generators(&self) -> &[Location<T>] {
        &self.generators
    }

    /// Index of the nearest generator; ties resolve to the lowest index.
    #[inline]
    pub fn assign(&self, s: &Location<T>) -> usize {
        nearest_index(&self.generators, s)
    }

    /// Indices of generator `l` and its `count - 1` nearest co-generators,
    /// ordered by distance with ties broken by index.
    pub fn neighborhood(&self, l: usize, count: usize) -> Vec<usize> {
        neighborhood(&self.generators, l, count)
    }
}

/// Nearest-generator rule on a raw generator slice.
#[inline]
pub fn nearest_index<T: Real>(generators: &[Location<T>], s: &Location<T>) -> usize {
    let mut best = 0;
    let mut best_d = generators[0].dist2(s);
    for (i, g) in generators.iter().enumerate().skip(1) {
        let d = g.dist2(s);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

pub fn neighborhood<T: Real>(generators: &[Location<T>], l: usize, count: usize) -> Vec<usize> {
    let count = count.clamp(1, generators.len());
    let centre = generators[l];
    let mut others: Vec<(T, usize)> = generators
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != l)
        .map(|(i, g)| (g.dist2(&centre), i))
        .collect();
    others.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    std::iter::once(l)
        .chain(others.into_iter().take(count - 1).map(|(_, i)| i))
        .collect()
}

/// Convenience wrapper over [`Partition::assign`].
#[inline]
pub fn assign_region<T: Real>(s: &Location<T>, partition: &Partition<T>) -> usize {
    partition.assign(s)
}

/// Points whose region label differs between two tessellations, with the
/// old and new labels.
pub fn region_changed_points<T: Real>(
    old: &Partition<T>,
    new: &Partition<T>,
    points: &[Location<T>],
) -> Result<Vec<(Location<T>, usize, usize)>> {
    if old.len() != new.len() {
        return Err(Error::InvalidPartition(format!(
            "generator counts differ: {} vs {}",
            old.len(),
            new.len()
        )));
    }
    Ok(points
        .iter()
        .filter_map(|s| {
            let (a, b) = (old.assign(s), new.assign(s));
            (a != b).then_some((*s, a, b))
        })
        .collect())
}
