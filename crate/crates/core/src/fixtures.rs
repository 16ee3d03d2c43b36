//! Named bodies with known distances.

use std::f64::consts::PI;

use nalgebra::DVector;

use serde::Serialize;

use crate::body::{point, Point, SymmetricBody};
use crate::distance::{bm_to_ball, bm_to_parallelogram};
use crate::error::Result;
use crate::onesym::{equality_condition_check, example4_body, is_one_symmetric};
use crate::search::SearchOptions;

/// 𝒫ⁿ = [−1, 1]ⁿ.
pub fn cube(n: usize) -> SymmetricBody {
    let vertices: Vec<Point> = (0..1usize << (n - 1))
        .map(|mask| {
            DVector::from_fn(n, |i, _| {
                if i > 0 && mask & (1 << (i - 1)) != 0 {
                    -1.0
                } else {
                    1.0
                }
            })
        })
        .collect();
    let facets: Vec<Point> = (0..n)
        .map(|i| DVector::from_fn(n, |j, _| (i == j) as u8 as f64))
        .collect();
    SymmetricBody::new(n, vertices, facets, 1e-12)
        .expect("cube is valid")
        .with_label(format!("cube{n}"))
}

/// 𝒞ⁿ, the unit ball of the ℓ₁ norm.
pub fn cross(n: usize) -> SymmetricBody {
    cube(n).polar().with_label(format!("cross{n}"))
}

/// Regular m-gon (m even) with circumradius 1 and a vertex at angle 0.
pub fn regular_polygon(m: usize) -> SymmetricBody {
    assert!(m >= 4 && m.is_multiple_of(2));
    let pts: Vec<Point> = (0..m / 2)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / m as f64;
            point(&[t.cos(), t.sin()])
        })
        .collect();
    SymmetricBody::from_points_2d(&pts)
        .expect("regular polygon is valid")
        .with_label(format!("regular{m}"))
}

/// Inscribed polygonal approximation of the unit disk.
pub fn disk(m: usize) -> SymmetricBody {
    regular_polygon(m).with_label(format!("disk{m}"))
}

/// Polygon inscribed in the ℓ_p unit circle at equally spaced angles.
pub fn lp_ball(p: f64, m: usize) -> SymmetricBody {
    let pts: Vec<Point> = (0..m / 2)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / m as f64;
            let (s, c) = t.sin_cos();
            let norm = (c.abs().powf(p) + s.abs().powf(p)).powf(1.0 / p);
            point(&[c / norm, s / norm])
        })
        .collect();
    SymmetricBody::from_points_2d(&pts)
        .expect("lp ball polygon is valid")
        .with_label(format!("l{p}ball{m}"))
}

/// 𝒫⁴ with the vertex pair ±(1,1,1,1) cut off by ±⟨(1,1,1,1)/4, x⟩ ≤ 15/16.
pub fn truncated_cube4() -> SymmetricBody {
    let c = 15.0 / 16.0;
    let mut vertices: Vec<Point> = cube(4)
        .vertices()
        .iter()
        .filter(|v| !v.iter().all(|x| *x > 0.0))
        .cloned()
        .collect();
    // The cut meets the four edges leaving (1,1,1,1).
    let t = 4.0 * c - 3.0;
    for i in 0..4 {
        let mut v = DVector::from_element(4, 1.0);
        v[i] = t;
        vertices.push(v);
    }
    let mut facets = cube(4).facets().to_vec();
    facets.push(DVector::from_element(4, 0.25 / c));
    SymmetricBody::new(4, vertices, facets, 1e-12)
        .expect("truncated cube is valid")
        .with_label("truncated-cube4")
}

/// {|x₁|,|x₂|,|x₃| ≤ 1, |x₁|+|x₂|+1.2|x₃| ≤ 2}: a body in ℝ³ whose outer
/// contacts in ball position are the square's vertices in the plane x₃ = 0.
pub fn pointed_prism() -> SymmetricBody {
    let t = 1.2;
    let h = 1.0 / t;
    let top = 2.0 - t;
    let vertices = vec![
        point(&[1.0, 1.0, 0.0]),
        point(&[1.0, -1.0, 0.0]),
        point(&[1.0, 0.0, h]),
        point(&[1.0, 0.0, -h]),
        point(&[0.0, 1.0, h]),
        point(&[0.0, 1.0, -h]),
        point(&[top, 0.0, 1.0]),
        point(&[top, 0.0, -1.0]),
        point(&[0.0, top, 1.0]),
        point(&[0.0, top, -1.0]),
    ];
    let mut facets = cube(3).facets().to_vec();
    for (s1, s2) in [(1.0, 1.0), (1.0, -1.0)] {
        for s3 in [1.0, -1.0] {
            facets.push(point(&[s1 / 2.0, s2 / 2.0, s3 * t / 2.0]));
        }
    }
    SymmetricBody::new(3, vertices, facets, 1e-12)
        .expect("pointed prism is valid")
        .with_label("pointed-prism")
}

/// The Example-4 body for v = (0.9, 0.28) with 64 samples on the arc.
pub fn example4() -> SymmetricBody {
    example4_body(&point(&[0.9, 0.28]), 64)
        .expect("default Example-4 point is admissible")
        .with_label("example4")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// d_BM(K, 𝔹ⁿ) from `bm_to_ball`.
    DistBall,
    /// d_BM(K, 𝒫²) from `bm_to_parallelogram`.
    DistPgram,
    /// 1 if the equality condition holds on K, else 0.
    EqualityCondition,
    /// 1 if K is invariant under the 45° rotation, else 0.
    Invariant45,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Closed form for the exact body.
    ClosedForm,
    /// Closed form for the smooth body the polygon approximates.
    Approximation,
    /// Holds by construction.
    Construction,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KnownValue {
    pub quantity: Quantity,
    pub value: f64,
    pub tol: f64,
    pub provenance: Provenance,
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub body: SymmetricBody,
    pub known_values: Vec<KnownValue>,
}

fn kv(quantity: Quantity, value: f64, tol: f64, provenance: Provenance) -> KnownValue {
    KnownValue {
        quantity,
        value,
        tol,
        provenance,
    }
}

/// The shipped fixture corpus. Names match the files under `fixtures/`.
pub fn catalog() -> Vec<Fixture> {
    use Provenance::*;
    use Quantity::*;
    let r2 = 2f64.sqrt();
    let r3 = 3f64.sqrt();
    let f = |name, body: SymmetricBody, known_values| Fixture {
        name,
        body: body.with_label(name),
        known_values,
    };
    vec![
        f(
            "cube2",
            cube(2),
            vec![
                kv(DistBall, r2, 1e-6, ClosedForm),
                kv(DistPgram, 1.0, 1e-9, ClosedForm),
            ],
        ),
        f(
            "cross2",
            cross(2),
            vec![
                kv(DistBall, r2, 1e-6, ClosedForm),
                kv(DistPgram, 1.0, 1e-9, ClosedForm),
            ],
        ),
        f("cube3", cube(3), vec![kv(DistBall, r3, 1e-6, ClosedForm)]),
        f("cross3", cross(3), vec![kv(DistBall, r3, 1e-6, ClosedForm)]),
        f(
            "truncated-cube4",
            truncated_cube4(),
            vec![kv(DistBall, 2.0, 1e-4, ClosedForm)],
        ),
        f(
            "hexagon",
            regular_polygon(6),
            vec![
                kv(DistBall, 2.0 / r3, 1e-6, ClosedForm),
                kv(DistPgram, 1.5, 1e-6, ClosedForm),
            ],
        ),
        f(
            "octagon",
            regular_polygon(8),
            vec![
                kv(DistBall, 1.0 / (PI / 8.0).cos(), 1e-6, ClosedForm),
                kv(DistPgram, r2, 1e-6, ClosedForm),
                kv(EqualityCondition, 1.0, 0.0, ClosedForm),
                kv(Invariant45, 1.0, 0.0, Construction),
            ],
        ),
        f(
            "16-gon",
            regular_polygon(16),
            vec![kv(DistBall, 1.0 / (PI / 16.0).cos(), 1e-6, ClosedForm)],
        ),
        f(
            "l4-512",
            lp_ball(4.0, 512),
            vec![
                kv(DistBall, 2f64.powf(0.25), 1e-3, Approximation),
                kv(DistPgram, 2f64.powf(0.25), 1e-3, Approximation),
            ],
        ),
        f(
            "l1.5-512",
            lp_ball(1.5, 512),
            vec![kv(DistBall, 2f64.powf(1.0 / 6.0), 1e-3, Approximation)],
        ),
        f(
            "example4",
            example4(),
            vec![
                kv(EqualityCondition, 1.0, 0.0, Construction),
                kv(Invariant45, 0.0, 0.0, Construction),
                kv(DistPgram, r2, 1e-4, Construction),
            ],
        ),
    ]
}

pub fn fixture(name: &str) -> Option<Fixture> {
    catalog().into_iter().find(|f| f.name == name)
}

#[derive(Clone, Debug, Serialize)]
pub struct KnownValueCheck {
    pub fixture: String,
    pub quantity: Quantity,
    pub expected: f64,
    pub computed: f64,
    pub tol: f64,
    pub pass: bool,
}

fn invariant45(k: &SymmetricBody) -> bool {
    let rot = crate::body::LinearMap::rotation(std::f64::consts::FRAC_PI_4);
    let Ok(r) = k.apply_map(&rot) else { return false };
    r.vertices().len() == k.vertices().len()
        && r.vertices().iter().all(|v| {
            k.vertices()
                .iter()
                .any(|w| (v - w).norm() < 1e-9 || (v + w).norm() < 1e-9)
        })
}

/// Recomputes every known value of `f`.
pub fn verify_fixture(f: &Fixture, opts: &SearchOptions) -> Result<Vec<KnownValueCheck>> {
    f.known_values
        .iter()
        .map(|kv| {
            let computed = match kv.quantity {
                Quantity::DistBall => bm_to_ball(&f.body, opts)?.value,
                Quantity::DistPgram => bm_to_parallelogram(&f.body)?.value,
                Quantity::EqualityCondition => {
                    let ok = is_one_symmetric(&f.body, 1e-9)
                        && equality_condition_check(&f.body, 8, 1e-9)?.condition_holds;
                    ok as u8 as f64
                }
                Quantity::Invariant45 => invariant45(&f.body) as u8 as f64,
            };
            Ok(KnownValueCheck {
                fixture: f.name.to_string(),
                quantity: kv.quantity,
                expected: kv.value,
                computed,
                tol: kv.tol,
                pass: (computed - kv.value).abs() <= kv.tol,
            })
        })
        .collect()
}
