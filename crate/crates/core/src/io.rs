//! JSON formats for bodies, ellipsoids, decompositions, separation
//! certificates and distance results. Numbers go through serde_json, which
//! writes the shortest string that parses back to the same double.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::body::{Point, SymmetricBody};
use crate::decomposition::{AderDecomposition, SeparationCertificate};
use crate::distance::{BMResult, Witness};
use crate::ellipsoid::Ellipsoid;
use crate::error::{Error, Result};

/// Geometric tolerance used to cross-check the two representations on read.
pub const READ_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BodyJson {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facets: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub label: String,
}

fn rows(points: &[Point]) -> Vec<Vec<f64>> {
    points.iter().map(|p| p.iter().copied().collect()).collect()
}

fn points(rows: &[Vec<f64>]) -> Vec<Point> {
    rows.iter().map(|r| Point::from_column_slice(r)).collect()
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Invalid("matrix must be square".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl From<&SymmetricBody> for BodyJson {
    fn from(k: &SymmetricBody) -> Self {
        BodyJson {
            dim: k.dim(),
            vertices: Some(rows(k.vertices())),
            facets: Some(rows(k.facets())),
            label: k.label.clone(),
        }
    }
}

impl BodyJson {
    /// Either list may be omitted in the plane; in dimensions 3 and 4 both
    /// are required and checked against each other.
    pub fn into_body(self) -> Result<SymmetricBody> {
        for p in self.vertices.iter().chain(&self.facets).flatten() {
            if p.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invalid("non-finite coordinate".into()));
            }
        }
        let body = match (self.dim, self.vertices, self.facets) {
            (2, Some(v), None) => SymmetricBody::from_points_2d(&points(&v))?,
            (2, None, Some(f)) => SymmetricBody::from_facets_2d(&points(&f))?,
            (_, Some(v), Some(f)) => SymmetricBody::new(self.dim, points(&v), points(&f), READ_TOL)?,
            (2, None, None) => return Err(Error::Invalid("body has neither vertices nor facets".into())),
            (n, _, _) if !(2..=4).contains(&n) => return Err(Error::UnsupportedDimension(n)),
            _ => return Err(Error::MissingRepresentation),
        };
        Ok(body.with_label(self.label))
    }
}

pub fn body_to_json(k: &SymmetricBody) -> String {
    serde_json::to_string_pretty(&BodyJson::from(k)).expect("body serializes")
}

pub fn body_from_json(s: &str) -> Result<SymmetricBody> {
    serde_json::from_str::<BodyJson>(s)?.into_body()
}

pub fn read_body(path: impl AsRef<Path>) -> Result<SymmetricBody> {
    body_from_json(&std::fs::read_to_string(path)?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EllipsoidJson {
    pub dim: usize,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
}

impl From<&Ellipsoid> for EllipsoidJson {
    fn from(e: &Ellipsoid) -> Self {
        EllipsoidJson {
            dim: e.dim(),
            q: matrix_rows(e.q()),
        }
    }
}

impl EllipsoidJson {
    pub fn into_ellipsoid(self) -> Result<Ellipsoid> {
        let q = matrix_from_rows(&self.q)?;
        if q.nrows() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: q.nrows(),
            });
        }
        Ellipsoid::new(q)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OuterJson {
    pub y: Vec<f64>,
    pub lambda: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InnerJson {
    pub z: Vec<f64>,
    pub mu: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub outer: Vec<OuterJson>,
    pub inner: Vec<InnerJson>,
}

impl From<&AderDecomposition> for DecompositionJson {
    fn from(d: &AderDecomposition) -> Self {
        DecompositionJson {
            r: d.r,
            big_r: d.big_r,
            outer: d
                .outer
                .iter()
                .map(|(y, l)| OuterJson {
                    y: y.iter().copied().collect(),
                    lambda: *l,
                })
                .collect(),
            inner: d
                .inner
                .iter()
                .map(|(z, m)| InnerJson {
                    z: z.iter().copied().collect(),
                    mu: *m,
                })
                .collect(),
        }
    }
}

impl DecompositionJson {
    pub fn into_decomposition(self) -> AderDecomposition {
        AderDecomposition {
            r: self.r,
            big_r: self.big_r,
            outer: self
                .outer
                .into_iter()
                .map(|o| (Point::from_vec(o.y), o.lambda))
                .collect(),
            inner: self
                .inner
                .into_iter()
                .map(|i| (Point::from_vec(i.z), i.mu))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateJson {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub margin: f64,
}

impl From<&SeparationCertificate> for CertificateJson {
    fn from(c: &SeparationCertificate) -> Self {
        CertificateJson {
            a: matrix_rows(&c.a),
            margin: c.margin,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WitnessJson {
    /// Inner distance ellipsoid.
    Ellipsoid {
        #[serde(rename = "Q")]
        q: Vec<Vec<f64>>,
    },
    Map {
        matrix: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BMResultJson {
    pub value: f64,
    pub witness: WitnessJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<DecompositionJson>,
    pub converged: bool,
    pub iterations: usize,
}

impl From<&BMResult> for BMResultJson {
    fn from(r: &BMResult) -> Self {
        BMResultJson {
            value: r.value,
            witness: match &r.witness {
                Witness::Ellipsoid(e) => WitnessJson::Ellipsoid {
                    q: matrix_rows(e.q()),
                },
                Witness::Map(t) => WitnessJson::Map {
                    matrix: matrix_rows(t.matrix()),
                },
            },
            certificate: r.certificate.as_ref().map(DecompositionJson::from),
            converged: r.converged,
            iterations: r.iterations,
        }
    }
}
