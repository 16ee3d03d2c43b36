//! Planar 1-symmetric bodies: bodies invariant under coordinate sign changes
//! and the coordinate swap.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, FRAC_PI_8, PI};

use crate::body::{point, LinearMap, Point, SymmetricBody};
use crate::distance::{bm_planar_from, bm_to_parallelogram, BMResult};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::search::SearchOptions;

/// Boundary points with polar angles in [0, π/4], sorted by angle.
#[derive(Clone, Debug)]
pub struct SectorProfile {
    pub points: Vec<Point>,
}

impl SectorProfile {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let mut last = -1.0;
        for p in &points {
            if p.len() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    found: p.len(),
                });
            }
            let a = p[1].atan2(p[0]);
            if !(-1e-12..=FRAC_PI_4 + 1e-12).contains(&a) || p.norm() == 0.0 {
                return Err(Error::Invalid(format!("profile point {p:?} outside the sector")));
            }
            if a < last - 1e-12 {
                return Err(Error::Invalid("profile points not sorted by angle".into()));
            }
            last = a;
        }
        if points.is_empty() {
            return Err(Error::Invalid("empty profile".into()));
        }
        Ok(SectorProfile { points })
    }
}

/// The eight images of p under sign changes and the coordinate swap.
pub fn orbit(p: &Point) -> [Point; 8] {
    let (x, y) = (p[0], p[1]);
    [
        point(&[x, y]),
        point(&[-x, y]),
        point(&[x, -y]),
        point(&[-x, -y]),
        point(&[y, x]),
        point(&[-y, x]),
        point(&[y, -x]),
        point(&[-y, -x]),
    ]
}

/// Body generated by the orbits of the profile points; every profile point
/// must end up on its boundary.
pub fn expand_profile(p: &SectorProfile) -> Result<SymmetricBody> {
    let pts: Vec<Point> = p.points.iter().flat_map(orbit).collect();
    let k = SymmetricBody::from_points_2d(&pts)?;
    for q in &p.points {
        if k.gauge_unchecked(q) < 1.0 - 1e-9 {
            return Err(Error::NotConvexPosition(format!(
                "profile point {q:?} is interior"
            )));
        }
    }
    Ok(k)
}

pub fn is_one_symmetric(k: &SymmetricBody, tol: f64) -> bool {
    k.dim() == 2
        && k.vertices()
            .iter()
            .all(|v| orbit(v).iter().all(|w| k.gauge_unchecked(w) <= 1.0 + tol))
}

fn require_one_symmetric(k: &SymmetricBody) -> Result<()> {
    if k.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: k.dim(),
        });
    }
    if !is_one_symmetric(k, 1e-9) {
        return Err(Error::Precondition(format!("{} is not 1-symmetric", k.label)));
    }
    Ok(())
}

/// φ(K°) with φ the rotation by +45°.
pub fn rotate45_polar(k: &SymmetricBody) -> Result<SymmetricBody> {
    rotate45_polar_dir(k, 1.0)
}

/// φ(K°) with the rotation direction given by the sign of `dir`.
pub fn rotate45_polar_dir(k: &SymmetricBody, dir: f64) -> Result<SymmetricBody> {
    require_one_symmetric(k)?;
    k.polar()
        .apply_map(&LinearMap::rotation(dir.signum() * FRAC_PI_4))
}

#[derive(Clone, Debug)]
pub struct OneSymReport {
    pub body: SymmetricBody,
    pub is_one_symmetric: bool,
    pub condition_holds: bool,
    /// min over x ∈ bd K of h_{φ(K)}(x) − ⟨x, x⟩.
    pub worst_margin: f64,
    pub witness: Point,
    pub distance_to_square: f64,
}

/// Evaluates ‖x‖_K ‖x‖_{φ(K°)} ≥ ‖x‖² on bd K in its support-function form.
/// On an edge of K the margin is concave between the directions where the
/// maximizing vertex of φ(K) changes, so those breakpoints and the edge
/// endpoints give the exact minimum; `samples` extra points per edge are
/// evaluated as well.
pub fn equality_condition_check(k: &SymmetricBody, samples: usize, tol: f64) -> Result<OneSymReport> {
    let sym = is_one_symmetric(k, 1e-9);
    if k.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: k.dim(),
        });
    }
    let phik = k.apply_map(&LinearMap::rotation(FRAC_PI_4))?;
    let normals = phik.all_facets();
    let margin = |x: &Point| phik.support_unchecked(x) - x.dot(x);
    let cycle = k.boundary_2d();
    let mut worst = (f64::INFINITY, cycle[0].clone());
    let mut consider = |x: Point| {
        let m = margin(&x);
        if m < worst.0 {
            worst = (m, x);
        }
    };
    for i in 0..cycle.len() {
        let p = &cycle[i];
        let q = &cycle[(i + 1) % cycle.len()];
        let e = q - p;
        consider(p.clone());
        for n in &normals {
            // x = p + s e parallel to n: det(p + s e, n) = 0.
            let den = e[0] * n[1] - e[1] * n[0];
            if den.abs() > 1e-300 {
                let s = -(p[0] * n[1] - p[1] * n[0]) / den;
                if (0.0..=1.0).contains(&s) {
                    consider(p + &e * s);
                }
            }
        }
        for j in 1..=samples {
            consider(p + &e * (j as f64 / (samples + 1) as f64));
        }
    }
    let distance_to_square = bm_to_parallelogram(k)?.value;
    Ok(OneSymReport {
        body: k.clone(),
        is_one_symmetric: sym,
        condition_holds: worst.0 >= -tol,
        worst_margin: worst.0,
        witness: worst.1,
        distance_to_square,
    })
}

fn reflect_v(x: &Point) -> Point {
    // Reflection at the line through the origin at angle π/8.
    let (s, c) = (2.0 * FRAC_PI_8).sin_cos();
    point(&[c * x[0] + s * x[1], s * x[0] - c * x[1]])
}

fn in_disk(x: &Point, center: &Point, tol: f64) -> bool {
    (x - center).norm() <= 0.5 + tol
}

/// The curve a → v → reflect(v) → b, expanded to a 1-symmetric body. The
/// piece from a to v is a quadratic Bézier arc, the middle piece is the
/// segment [v, reflect(v)] and the last piece is the segment to b, so the
/// result is not 45°-invariant. With `mirrored` the last piece is the
/// reflection of the first instead and the body is 45°-invariant. No
/// admissible v lies on span{a + b}: there the disk a/2 + ½𝔹² ends on [a, b].
pub fn example4_body(v: &Point, arc_samples: usize) -> Result<SymmetricBody> {
    example4_body_with(v, arc_samples, false)
}

pub fn example4_body_with(v: &Point, arc_samples: usize, mirrored: bool) -> Result<SymmetricBody> {
    let a = point(&[1.0, 0.0]);
    let b = point(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
    let apex = (&a + &b) / 2f64.sqrt();
    // Counterclockwise: a, apex, b.
    let tri = [a.clone(), apex, b.clone()];
    let inside_tri = |x: &Point, strict: bool| {
        (0..3).all(|i| {
            let p = &tri[i];
            let q = &tri[(i + 1) % 3];
            let d = (q[0] - p[0]) * (x[1] - p[1]) - (q[1] - p[1]) * (x[0] - p[0]);
            if strict {
                d > 1e-12
            } else {
                d >= -1e-12
            }
        })
    };
    if v.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: v.len(),
        });
    }
    let ca = &a / 2.0;
    let cb = &b / 2.0;
    if !inside_tri(v, true) || !in_disk(v, &ca, 0.0) {
        return Err(Error::Precondition("v must lie in int T ∩ (a/2 + ½𝔹²)".into()));
    }
    let w = reflect_v(v);
    let arc_samples = arc_samples.max(2);
    // Control point on the tangent x = 1 at a, pulled toward the chord
    // until the arc satisfies the disk constraint and the curve stays convex.
    let dir = &w - v;
    let tangent_hit = if dir[0].abs() > 1e-15 {
        let s = (1.0 - v[0]) / dir[0];
        v + &dir * s
    } else {
        (&a + v) / 2.0
    };
    let chord_mid = (&a + v) / 2.0;
    for lambda in [1.0, 0.8, 0.6, 0.4, 0.25, 0.1] {
        let c = &tangent_hit * lambda + &chord_mid * (1.0 - lambda);
        let first: Vec<Point> = (0..=arc_samples)
            .map(|j| {
                let t = j as f64 / arc_samples as f64;
                &a * ((1.0 - t) * (1.0 - t)) + &c * (2.0 * t * (1.0 - t)) + v * (t * t)
            })
            .collect();
        if !first
            .iter()
            .all(|x| in_disk(x, &ca, 1e-12) && inside_tri(x, false))
        {
            continue;
        }
        let mut curve = first.clone();
        if mirrored {
            curve.extend(first.iter().rev().map(reflect_v));
        } else {
            curve.push(w.clone());
            curve.push(b.clone());
        }
        let last: Vec<&Point> = if mirrored {
            curve[curve.len() - first.len()..].iter().collect()
        } else {
            vec![&w, &b]
        };
        if !last.iter().all(|x| in_disk(x, &cb, 1e-12)) {
            continue;
        }
        if !turns_left(&curve) {
            continue;
        }
        let Ok(k) = SymmetricBody::from_points_2d(&curve.iter().flat_map(orbit).collect::<Vec<_>>()) else {
            continue;
        };
        if curve.iter().all(|x| k.gauge_unchecked(x) >= 1.0 - 1e-9) {
            let tag = if mirrored { "-mirrored" } else { "" };
            return Ok(k.with_label(format!("example4({:.4},{:.4}){tag}", v[0], v[1])));
        }
    }
    Err(Error::Precondition(format!(
        "no convex curve through a, {v:?}, reflect(v), b found"
    )))
}

/// Whether consecutive points of the curve turn counterclockwise or go
/// straight, including the joins with the mirror images at a and b.
fn turns_left(curve: &[Point]) -> bool {
    let mut ext: Vec<Point> = vec![point(&[curve[1][0], -curve[1][1]])];
    ext.extend(curve.iter().cloned());
    let n = curve.len();
    ext.push(point(&[curve[n - 2][1], curve[n - 2][0]]));
    ext.windows(3).all(|w| {
        let d1 = &w[1] - &w[0];
        let d2 = &w[2] - &w[1];
        d1[0] * d2[1] - d1[1] * d2[0] >= -1e-12 * d1.norm() * d2.norm()
    })
}

/// Upper bound on d_BM(K, L) for 1-symmetric K and L from the two aligned
/// positions (identity and 45° rotation), locally optimized.
pub fn one_sym_pair_distance(k: &SymmetricBody, l: &SymmetricBody, opts: &SearchOptions) -> Result<BMResult> {
    require_one_symmetric(k)?;
    require_one_symmetric(l)?;
    bm_planar_from(k, l, &[vec![0.0, 0.0, 0.0], vec![FRAC_PI_4, 0.0, 0.0]], opts)
}

/// Random 1-symmetric polygon: the points at angles 0 and π/4 plus up to
/// six random points in between, radii log-uniform in [1/2, 2].
pub fn random_one_symmetric(rng: &mut SplitMix64) -> SymmetricBody {
    let extra = rng.range_inclusive(0, 6) as usize;
    let mut angles: Vec<f64> = (0..extra).map(|_| rng.uniform(0.0, FRAC_PI_4)).collect();
    angles.push(0.0);
    angles.push(FRAC_PI_4);
    angles.sort_by(f64::total_cmp);
    let pts: Vec<Point> = angles
        .iter()
        .map(|t| {
            let r = rng.log_uniform(0.5, 2.0);
            point(&[r * t.cos(), r * t.sin()])
        })
        .collect();
    let orbit_pts: Vec<Point> = pts.iter().flat_map(orbit).collect();
    SymmetricBody::from_points_2d(&orbit_pts)
        .expect("orbit spans the plane")
        .with_label("random-1sym")
}

/// Random 1-symmetric polygon that is also invariant under rotation by 45°.
pub fn random_octagonal(rng: &mut SplitMix64) -> SymmetricBody {
    let extra = rng.range_inclusive(0, 4) as usize;
    let mut pts: Vec<Point> = Vec::new();
    for j in 0..=extra {
        let t = if j == 0 { 0.0 } else { rng.uniform(0.0, FRAC_PI_8) };
        let r = rng.log_uniform(0.5, 2.0);
        let p = point(&[r * t.cos(), r * t.sin()]);
        pts.push(reflect_v(&p));
        pts.push(p);
    }
    if rng.next_f64() < 0.5 {
        let r = rng.log_uniform(0.5, 2.0);
        pts.push(point(&[r * (PI / 8.0).cos(), r * (PI / 8.0).sin()]));
    }
    let orbit_pts: Vec<Point> = pts.iter().flat_map(orbit).collect();
    SymmetricBody::from_points_2d(&orbit_pts)
        .expect("orbit spans the plane")
        .with_label("random-octagonal")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use approx::assert_relative_eq;

    fn same_vertices(a: &SymmetricBody, b: &SymmetricBody, tol: f64) -> bool {
        a.vertices().len() == b.vertices().len()
            && a.vertices().iter().all(|v| {
                b.vertices()
                    .iter()
                    .any(|w| (v - w).norm() < tol || (v + w).norm() < tol)
            })
    }

    #[test]
    fn profiles() {
        let k = expand_profile(&SectorProfile::new(vec![point(&[1.0, 0.0])]).unwrap()).unwrap();
        assert!(same_vertices(&k, &cross(2), 1e-12));
        let k = expand_profile(&SectorProfile::new(vec![point(&[1.0, 0.0]), point(&[1.0, 1.0])]).unwrap())
            .unwrap();
        assert!(same_vertices(&k, &cube(2), 1e-12));
        let pts: Vec<Point> = [0.0f64, 15.0, 30.0, 45.0]
            .iter()
            .map(|d| {
                let t = d.to_radians();
                point(&[t.cos(), t.sin()])
            })
            .collect();
        let k = expand_profile(&SectorProfile::new(pts).unwrap()).unwrap();
        assert_eq!(k.vertices().len(), 12);
        assert!(same_vertices(&k, &regular_polygon(24), 1e-12));
        assert!(SectorProfile::new(vec![point(&[0.0, 1.0])]).is_err());
        let bad = SectorProfile::new(vec![point(&[0.5, 0.0]), point(&[1.0, 1.0])]).unwrap();
        assert!(expand_profile(&bad).is_err());
    }

    #[test]
    fn rotated_polars() {
        let p = rotate45_polar(&cube(2)).unwrap();
        let h = FRAC_1_SQRT_2;
        let expected = SymmetricBody::from_points_2d(&[point(&[h, h]), point(&[h, -h])]).unwrap();
        assert!(same_vertices(&p, &expected, 1e-12));
        let oct = regular_polygon(8);
        let p = rotate45_polar(&oct).unwrap();
        // The polar's vertices sit on the edge normals, at angles π/8 + kπ/4.
        let s = p.vertices()[0].norm();
        let turned = oct.apply_map(&LinearMap::rotation(FRAC_PI_8)).unwrap().scaled(s);
        assert!(same_vertices(&p, &turned, 1e-12));
        for k in [cube(2), oct, regular_polygon(24)] {
            let a = rotate45_polar_dir(&k, 1.0).unwrap();
            let b = rotate45_polar_dir(&k, -1.0).unwrap();
            assert!(same_vertices(&a, &b, 1e-12));
        }
        let skew = SymmetricBody::from_points_2d(&[point(&[1.0, 0.0]), point(&[0.3, 1.0])]).unwrap();
        assert!(rotate45_polar(&skew).is_err());
    }

    #[test]
    fn condition_examples() {
        let r = equality_condition_check(&regular_polygon(8), 16, 1e-9).unwrap();
        assert!(r.condition_holds && r.is_one_symmetric);
        assert_relative_eq!(r.distance_to_square, 2f64.sqrt(), epsilon = 1e-6);
        let r = equality_condition_check(&cube(2), 16, 1e-9).unwrap();
        assert!(!r.condition_holds);
        assert_relative_eq!(r.worst_margin, 2f64.sqrt() - 2.0, epsilon = 1e-12);
        assert_relative_eq!(r.witness[0].abs(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.witness[1].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn example4() {
        let k = example4_body(&point(&[0.9, 0.28]), 64).unwrap();
        assert!(is_one_symmetric(&k, 1e-9));
        let r = equality_condition_check(&k, 8, 1e-9).unwrap();
        assert!(r.condition_holds, "margin {}", r.worst_margin);
        assert!(
            (r.distance_to_square - 2f64.sqrt()).abs() < 1e-4,
            "{}",
            r.distance_to_square
        );
        let rot = k.apply_map(&LinearMap::rotation(FRAC_PI_4)).unwrap();
        assert!(!same_vertices(&k, &rot, 1e-6));

        let m = example4_body_with(&point(&[0.9, 0.28]), 16, true).unwrap();
        let rot = m.apply_map(&LinearMap::rotation(FRAC_PI_4)).unwrap();
        assert!(same_vertices(&m, &rot, 1e-9));
        assert!(equality_condition_check(&m, 0, 1e-9).unwrap().condition_holds);

        assert!(example4_body(&point(&[0.5, 0.1]), 16).is_err());
        assert!(example4_body(&point(&[0.99, 0.01]), 16).is_err());
    }

    #[test]
    fn pair_examples() {
        let opts = SearchOptions::default();
        let r = one_sym_pair_distance(&regular_polygon(8), &cube(2), &opts).unwrap();
        assert!((r.value - 2f64.sqrt()).abs() < 1e-5, "{}", r.value);
        let r = one_sym_pair_distance(&cube(2), &cross(2), &opts).unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-9);
        let r = one_sym_pair_distance(&disk(512), &lp_ball(4.0, 512), &opts).unwrap();
        assert!((r.value - 2f64.powf(0.25)).abs() < 1e-3, "{}", r.value);
    }

    #[test]
    fn random_families() {
        let mut rng = SplitMix64::new(5);
        for _ in 0..20 {
            let k = random_one_symmetric(&mut rng);
            assert!(is_one_symmetric(&k, 1e-9));
            let o = random_octagonal(&mut rng);
            let rot = o.apply_map(&LinearMap::rotation(FRAC_PI_4)).unwrap();
            assert!(same_vertices(&o, &rot, 1e-9));
        }
    }
}
