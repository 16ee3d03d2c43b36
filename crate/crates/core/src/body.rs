//! Origin-symmetric polytopes with both V- and H-representations.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tolerance::Tolerance;

pub type Point = DVector<f64>;

pub fn point(coords: &[f64]) -> Point {
    DVector::from_column_slice(coords)
}

/// Invertible linear map with its determinant cached.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
    det: f64,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        assert!(matrix.is_square());
        let det = matrix.determinant();
        LinearMap { matrix, det }
    }

    pub fn identity(n: usize) -> Self {
        LinearMap::new(DMatrix::identity(n, n))
    }

    pub fn from_row_slice(n: usize, entries: &[f64]) -> Self {
        LinearMap::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        LinearMap::from_row_slice(2, &[c, -s, s, c])
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        let scale = self.matrix.norm().max(f64::MIN_POSITIVE);
        if self.det.abs() <= 1e-14 * scale.powi(self.dim() as i32) {
            return Err(Error::SingularMap);
        }
        self.matrix.clone().try_inverse().ok_or(Error::SingularMap)
    }

    pub fn apply(&self, x: &Point) -> Point {
        &self.matrix * x
    }

    pub fn condition_number(&self) -> f64 {
        let sv = self.matrix.singular_values();
        sv.max() / sv.min()
    }
}

/// Sign-normalize so the first coordinate that is not negligible is positive.
pub fn canonical(mut x: Point) -> Point {
    let scale = x.amax();
    if let Some(c) = x.iter().find(|c| c.abs() > 1e-12 * scale) {
        if *c < 0.0 {
            x.neg_mut();
        }
    }
    x
}

fn canonical_angle(x: &Point) -> f64 {
    // Angle in (-pi/2, pi/2] of the canonical representative.
    let a = x[1].atan2(x[0]);
    if a > PI / 2.0 + 1e-15 {
        a - PI
    } else if a <= -PI / 2.0 + 1e-15 {
        a + PI
    } else {
        a
    }
}

fn det2(p: &Point, q: &Point) -> f64 {
    p[0] * q[1] - p[1] * q[0]
}

/// Origin-symmetric polytope. Each antipodal pair of vertices and facets is
/// stored once in canonical sign; in the plane both lists are sorted by angle
/// so that `boundary_2d` walks the polygon counterclockwise.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricBody {
    dim: usize,
    vertices: Vec<Point>,
    facets: Vec<Point>,
    pub label: String,
}

impl SymmetricBody {
    /// Build from both representations and validate them against each other.
    pub fn new(dim: usize, vertices: Vec<Point>, facets: Vec<Point>, tol: f64) -> Result<Self> {
        if !(2..=4).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        for p in vertices.iter().chain(&facets) {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
        }
        let vertices = dedup_pairs(vertices);
        let facets = dedup_pairs(facets);
        if rank(&vertices) < dim || rank(&facets) < dim {
            return Err(Error::Degenerate);
        }
        let body = SymmetricBody {
            dim,
            vertices,
            facets,
            label: String::new(),
        };
        body.validate(tol)?;
        if dim == 2 {
            let rebuilt = SymmetricBody::from_points_2d(&body.vertices)?;
            return Ok(rebuilt);
        }
        Ok(body)
    }

    /// Symmetric convex hull of `points` and their negatives in the plane.
    pub fn from_points_2d(points: &[Point]) -> Result<Self> {
        for p in points {
            if p.len() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    found: p.len(),
                });
            }
        }
        let mut all: Vec<(f64, f64)> = Vec::with_capacity(2 * points.len());
        for p in points {
            all.push((p[0], p[1]));
            all.push((-p[0], -p[1]));
        }
        let hull = convex_hull(&mut all);
        if hull.len() < 4 {
            return Err(Error::Degenerate);
        }
        let cycle: Vec<Point> = hull.iter().map(|&(x, y)| point(&[x, y])).collect();
        let k = cycle.len();
        let mut facets = Vec::with_capacity(k);
        for i in 0..k {
            let p = &cycle[i];
            let q = &cycle[(i + 1) % k];
            let d = det2(p, q);
            if d <= 0.0 {
                return Err(Error::Degenerate);
            }
            facets.push(point(&[(q[1] - p[1]) / d, (p[0] - q[0]) / d]));
        }
        Ok(SymmetricBody {
            dim: 2,
            vertices: half_by_angle(cycle),
            facets: half_by_angle(facets),
            label: String::new(),
        })
    }

    /// Planar body from facet functionals; redundant ones are dropped.
    pub fn from_facets_2d(facets: &[Point]) -> Result<Self> {
        Ok(SymmetricBody::from_points_2d(facets)?.polar())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let n = self.dim;
        for v in &self.vertices {
            let mut tight = 0;
            for a in &self.facets {
                let s = a.dot(v).abs();
                if s > 1.0 + tol {
                    return Err(Error::InconsistentBody(format!(
                        "vertex {:?} violates facet {:?} ({s})",
                        v.as_slice(),
                        a.as_slice()
                    )));
                }
                if s >= 1.0 - tol {
                    tight += 1;
                }
            }
            if tight < n {
                return Err(Error::InconsistentBody(format!(
                    "vertex {:?} lies on only {tight} facets",
                    v.as_slice()
                )));
            }
        }
        for a in &self.facets {
            let tight = self
                .vertices
                .iter()
                .filter(|v| a.dot(v).abs() >= 1.0 - tol)
                .count();
            if tight < n {
                return Err(Error::InconsistentBody(format!(
                    "facet {:?} touches only {tight} vertices",
                    a.as_slice()
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// One vertex per antipodal pair.
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// One facet functional per antipodal pair.
    pub fn facets(&self) -> &[Point] {
        &self.facets
    }

    pub fn all_vertices(&self) -> Vec<Point> {
        with_negatives(&self.vertices)
    }

    pub fn all_facets(&self) -> Vec<Point> {
        with_negatives(&self.facets)
    }

    /// Counterclockwise vertex cycle of a planar body.
    pub fn boundary_2d(&self) -> Vec<Point> {
        assert_eq!(self.dim, 2);
        let mut cycle = self.vertices.clone();
        cycle.extend(self.vertices.iter().map(|v| -v));
        cycle
    }

    fn check_dim(&self, x: &Point) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Minkowski functional ‖x‖_K.
    pub fn gauge(&self, x: &Point) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.gauge_unchecked(x))
    }

    pub(crate) fn gauge_unchecked(&self, x: &Point) -> f64 {
        self.facets.iter().map(|a| a.dot(x).abs()).fold(0.0, f64::max)
    }

    /// Support function h_K(u).
    pub fn support(&self, u: &Point) -> Result<f64> {
        self.check_dim(u)?;
        Ok(self.support_unchecked(u))
    }

    pub(crate) fn support_unchecked(&self, u: &Point) -> f64 {
        self.vertices.iter().map(|v| v.dot(u).abs()).fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        self.gauge_unchecked(x) <= 1.0 + tol
    }

    pub fn polar(&self) -> SymmetricBody {
        SymmetricBody {
            dim: self.dim,
            vertices: self.facets.clone(),
            facets: self.vertices.clone(),
            label: if self.label.is_empty() {
                String::new()
            } else {
                format!("polar({})", self.label)
            },
        }
    }

    /// T(K): vertices pushed forward, facets by the inverse transpose.
    pub fn apply_map(&self, t: &LinearMap) -> Result<SymmetricBody> {
        if t.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: t.dim(),
            });
        }
        let inv = t.inverse()?;
        let inv_t = inv.transpose();
        let vertices: Vec<Point> = self.vertices.iter().map(|v| canonical(t.matrix() * v)).collect();
        let facets: Vec<Point> = self.facets.iter().map(|a| canonical(&inv_t * a)).collect();
        let (vertices, facets) = if self.dim == 2 {
            (sort_by_angle(vertices), sort_by_angle(facets))
        } else {
            (vertices, facets)
        };
        Ok(SymmetricBody {
            dim: self.dim,
            vertices,
            facets,
            label: self.label.clone(),
        })
    }

    pub fn scaled(&self, lambda: f64) -> SymmetricBody {
        let t = LinearMap::new(DMatrix::identity(self.dim, self.dim) * lambda);
        self.apply_map(&t).expect("positive scaling is invertible")
    }

    /// Euclidean inradius and circumradius (r, R).
    pub fn in_circum(&self) -> (f64, f64) {
        let r = self
            .facets
            .iter()
            .map(|a| 1.0 / a.norm())
            .fold(f64::INFINITY, f64::min);
        let big_r = self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
        (r, big_r)
    }

    /// Vertices with |‖v‖ − ρ| ≤ τρ.
    pub fn outer_contacts(&self, rho: f64, band: f64) -> Vec<Point> {
        self.vertices
            .iter()
            .filter(|v| (v.norm() - rho).abs() <= band * rho)
            .cloned()
            .collect()
    }

    /// Facet feet a/‖a‖² whose distance from the origin is within τρ of ρ.
    pub fn inner_contacts(&self, rho: f64, band: f64) -> Vec<Point> {
        self.facets
            .iter()
            .filter(|a| (1.0 / a.norm() - rho).abs() <= band * rho)
            .map(|a| a / a.norm_squared())
            .collect()
    }

    /// Boundary points at Euclidean norm ρ: outer candidates then inner ones.
    pub fn contact_points(&self, rho: f64, tol: &Tolerance) -> Vec<Point> {
        let mut pts = self.outer_contacts(rho, tol.contact_band);
        pts.extend(self.inner_contacts(rho, tol.contact_band));
        pts
    }

    /// Section K ∩ U for U spanned by the orthonormal columns of `basis`,
    /// expressed in those coordinates. Vertices are found by enumerating
    /// intersections of facet hyperplanes, which is fine at these sizes.
    pub fn section(&self, basis: &DMatrix<f64>, tol: f64) -> Result<SymmetricBody> {
        let k = basis.ncols();
        if basis.nrows() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: basis.nrows(),
            });
        }
        let ortho = basis.transpose() * basis - DMatrix::identity(k, k);
        if ortho.norm() > 1e-9 {
            return Err(Error::Invalid("section basis is not orthonormal".into()));
        }
        if k == self.dim {
            let t = LinearMap::new(basis.transpose());
            return self.apply_map(&t);
        }
        let restricted: Vec<Point> = self
            .facets
            .iter()
            .map(|a| basis.transpose() * a)
            .filter(|a| a.norm() > 1e-12)
            .collect();
        if k == 2 {
            return SymmetricBody::from_facets_2d(&restricted);
        }
        if k < 2 {
            return Err(Error::UnsupportedDimension(k));
        }
        let vertices = enumerate_vertices(k, &restricted, tol);
        let facets: Vec<Point> = restricted
            .into_iter()
            .filter(|a| vertices.iter().filter(|v| a.dot(v).abs() >= 1.0 - tol).count() >= k)
            .collect();
        SymmetricBody::new(k, vertices, facets, tol)
    }
}

fn with_negatives(v: &[Point]) -> Vec<Point> {
    let mut out = v.to_vec();
    out.extend(v.iter().map(|p| -p));
    out
}

fn dedup_pairs(points: Vec<Point>) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(points.len());
    for p in points {
        let c = canonical(p);
        let scale = c.norm().max(1.0);
        if !out.iter().any(|q| (q - &c).norm() <= 1e-12 * scale) {
            out.push(c);
        }
    }
    out
}

fn rank(points: &[Point]) -> usize {
    if points.is_empty() {
        return 0;
    }
    let n = points[0].len();
    let m = DMatrix::from_fn(n, points.len(), |i, j| points[j][i]);
    let sv = m.singular_values();
    let top = sv.max();
    sv.iter().filter(|s| **s > 1e-10 * top).count()
}

fn sort_by_angle(mut pts: Vec<Point>) -> Vec<Point> {
    pts.sort_by(|a, b| canonical_angle(a).total_cmp(&canonical_angle(b)));
    pts
}

fn half_by_angle(cycle: Vec<Point>) -> Vec<Point> {
    let half: Vec<Point> = cycle
        .into_iter()
        .filter(|p| {
            let a = p[1].atan2(p[0]);
            a > -PI / 2.0 + 1e-15 && a <= PI / 2.0 + 1e-15
        })
        .collect();
    sort_by_angle(half)
}

/// Andrew's monotone chain; strictly convex counterclockwise cycle.
fn convex_hull(pts: &mut [(f64, f64)]) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let scale = pts.iter().map(|p| p.0.abs().max(p.1.abs())).fold(0.0, f64::max);
    let eps = 1e-13 * scale * scale;
    let cross =
        |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter() {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= eps {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= eps {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Vertices of {x : |⟨a,x⟩| ≤ 1} in dimension `k` by brute force.
fn enumerate_vertices(k: usize, facets: &[Point], tol: f64) -> Vec<Point> {
    let mut found: Vec<Point> = Vec::new();
    let f = facets.len();
    let mut idx: Vec<usize> = (0..k).collect();
    if f < k {
        return found;
    }
    loop {
        // First sign fixed to + by symmetry.
        for signs in 0..(1u32 << (k - 1)) {
            let a = DMatrix::from_fn(k, k, |i, j| facets[idx[i]][j]);
            let b = DVector::from_fn(k, |i, _| {
                if i > 0 && signs & (1 << (i - 1)) != 0 {
                    -1.0
                } else {
                    1.0
                }
            });
            if let Some(x) = a.lu().solve(&b) {
                if x.iter().all(|c| c.is_finite()) && facets.iter().all(|fa| fa.dot(&x).abs() <= 1.0 + tol) {
                    found.push(x);
                }
            }
        }
        // Next combination.
        let mut i = k;
        loop {
            if i == 0 {
                return dedup_pairs(found);
            }
            i -= 1;
            if idx[i] < f - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}
