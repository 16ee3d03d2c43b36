//! Origin-centered ellipsoids, λ-means, and the Loewner/John solvers.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::body::{LinearMap, Point, SymmetricBody};
use crate::error::{Error, Result};

/// E = {x : xᵀQx ≤ 1}.
#[derive(Clone, Debug, PartialEq)]
pub struct Ellipsoid {
    q: DMatrix<f64>,
}

impl Ellipsoid {
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::Invalid("Q must be square".into()));
        }
        let asym = (&q - q.transpose()).norm();
        if asym > 1e-12 * q.norm().max(1.0) {
            return Err(Error::Invalid("Q is not symmetric".into()));
        }
        let q = (&q + q.transpose()) * 0.5;
        if q.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Ellipsoid { q })
    }

    pub fn ball(n: usize) -> Self {
        Ellipsoid {
            q: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn gauge(&self, x: &Point) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(x.dot(&(&self.q * x)).max(0.0).sqrt())
    }

    pub fn polar(&self) -> Ellipsoid {
        let inv = self
            .q
            .clone()
            .cholesky()
            .expect("Q is positive definite")
            .inverse();
        Ellipsoid {
            q: (&inv + inv.transpose()) * 0.5,
        }
    }

    /// The point y = Qx of the polar ellipsoid with ⟨x, y⟩ = 1.
    pub fn tangent_dual_point(&self, x: &Point, tol: f64) -> Result<Point> {
        let g = self.gauge(x)?;
        if (g - 1.0).abs() > tol {
            return Err(Error::Precondition(format!("x has gauge {g}, not 1")));
        }
        Ok(&self.q * x)
    }

    pub fn scaled(&self, factor: f64) -> Ellipsoid {
        Ellipsoid {
            q: &self.q / (factor * factor),
        }
    }

    /// T(E) = {Tx : x ∈ E}.
    pub fn image(&self, t: &LinearMap) -> Result<Ellipsoid> {
        let inv = t.inverse()?;
        let q = inv.transpose() * &self.q * &inv;
        Ellipsoid::new((&q + q.transpose()) * 0.5)
    }

    /// Map L with L(E) = 𝔹ⁿ, namely Lᵀ for the Cholesky factor Q = LLᵀ.
    pub fn normalizing_map(&self) -> LinearMap {
        let l = self.q.clone().cholesky().expect("Q is positive definite").l();
        LinearMap::new(l.transpose())
    }

    /// Q rescaled to unit determinant.
    pub fn det_normalized(&self) -> DMatrix<f64> {
        let d = self.q.determinant();
        &self.q / d.powf(1.0 / self.dim() as f64)
    }
}

/// Orthonormal axes v¹..vⁿ, semiaxis factors αᵢ and the mean parameter λ.
#[derive(Clone, Debug)]
pub struct MeanSpec {
    pub basis: DMatrix<f64>,
    pub alphas: Vec<f64>,
    pub lambda: f64,
}

/// Absolute tolerance deciding αᵢ = 1.
pub const UNIT_AXIS_TOL: f64 = 1e-8;

impl MeanSpec {
    pub fn new(basis: DMatrix<f64>, alphas: Vec<f64>, lambda: f64) -> Result<Self> {
        let n = basis.nrows();
        if basis.ncols() != n || alphas.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: alphas.len(),
            });
        }
        if (basis.transpose() * &basis - DMatrix::identity(n, n)).norm() > 1e-10 {
            return Err(Error::Invalid("basis is not orthonormal".into()));
        }
        if alphas.iter().any(|a| *a <= 0.0) || !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Invalid("need αᵢ > 0 and λ ∈ [0, 1]".into()));
        }
        Ok(MeanSpec {
            basis,
            alphas,
            lambda,
        })
    }

    /// Axes of E₁ = {Σ⟨x,vⁱ⟩²/αᵢ² ≤ 1}.
    pub fn from_ellipsoid(e1: &Ellipsoid, lambda: f64) -> Result<Self> {
        let eig = e1.q().clone().symmetric_eigen();
        let alphas = eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()).collect();
        MeanSpec::new(eig.eigenvectors, alphas, lambda)
    }

    /// Indices i with αᵢ = 1, spanning the subspace V.
    pub fn unit_axes(&self) -> Vec<usize> {
        (0..self.alphas.len())
            .filter(|&i| (self.alphas[i] - 1.0).abs() <= UNIT_AXIS_TOL)
            .collect()
    }

    /// Orthogonal projector onto V.
    pub fn v_projector(&self) -> DMatrix<f64> {
        let n = self.alphas.len();
        let mut p = DMatrix::zeros(n, n);
        for i in self.unit_axes() {
            let v = self.basis.column(i);
            p += v * v.transpose();
        }
        p
    }
}

/// E_λ with Q = Σ αᵢ^{−2λ} vⁱ(vⁱ)ᵀ.
pub fn mean_ellipsoid(spec: &MeanSpec) -> Ellipsoid {
    let n = spec.alphas.len();
    let mut q = DMatrix::zeros(n, n);
    for (i, a) in spec.alphas.iter().enumerate() {
        let v = spec.basis.column(i);
        q += v * v.transpose() * a.powf(-2.0 * spec.lambda);
    }
    Ellipsoid {
        q: (&q + q.transpose()) * 0.5,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MeanCheckReport {
    pub lambda: f64,
    pub v_dim: usize,
    /// max over facets of aᵀQ_λ⁻¹a; E_λ ⊆ K iff this is ≤ 1.
    pub inner_excess: f64,
    /// max over vertices of ‖v‖_{E_λ}/d; K ⊆ dE_λ iff this is ≤ 1.
    pub outer_excess: f64,
    pub inner_contacts: Vec<Vec<f64>>,
    pub outer_contacts: Vec<Vec<f64>>,
    /// Largest relative distance of a contact point from V.
    pub max_offset_from_v: f64,
    pub pass: bool,
}

/// Checks E_λ ⊆ K ⊆ dE_λ and that every contact point lies in V.
pub fn mean_ellipsoid_check(
    k: &SymmetricBody,
    e1: &Ellipsoid,
    d: f64,
    lambda: f64,
    tol: f64,
) -> Result<MeanCheckReport> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Precondition(format!("λ = {lambda} is not in (0, 1)")));
    }
    if e1.dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            found: e1.dim(),
        });
    }
    let e1_polar = e1.polar();
    for a in k.facets() {
        if a.norm() > 1.0 + tol {
            return Err(Error::Precondition(format!(
                "ball not inside K at facet {:?}",
                a.as_slice()
            )));
        }
        if e1_polar.gauge(a)? > 1.0 + tol {
            return Err(Error::Precondition(format!(
                "E₁ not inside K at facet {:?}",
                a.as_slice()
            )));
        }
    }
    for v in k.vertices() {
        if v.norm() > d * (1.0 + tol) {
            return Err(Error::Precondition(format!(
                "vertex {:?} outside d𝔹ⁿ",
                v.as_slice()
            )));
        }
        if e1.gauge(v)? > d * (1.0 + tol) {
            return Err(Error::Precondition(format!(
                "vertex {:?} outside dE₁",
                v.as_slice()
            )));
        }
    }

    let spec = MeanSpec::from_ellipsoid(e1, lambda)?;
    let e = mean_ellipsoid(&spec);
    let e_polar = e.polar();
    let proj = spec.v_projector();
    let offset = |x: &Point| (x - &proj * x).norm() / x.norm();
    // A facet within δ of tangency can sit ~√δ off V, so the offset
    // threshold is tied to the band.
    let band: f64 = 1e-12;
    let max_allowed_offset = 10.0 * band.sqrt();

    let mut inner_excess: f64 = 0.0;
    let mut inner_contacts = Vec::new();
    let mut max_offset: f64 = 0.0;
    for a in k.facets() {
        let g2 = e_polar.gauge(a)?.powi(2);
        inner_excess = inner_excess.max(g2);
        if g2 >= 1.0 - band {
            let x: DVector<f64> = e_polar.q() * a / g2;
            max_offset = max_offset.max(offset(&x));
            inner_contacts.push(x.as_slice().to_vec());
        }
    }
    let mut outer_excess: f64 = 0.0;
    let mut outer_contacts = Vec::new();
    for v in k.vertices() {
        let g = e.gauge(v)? / d;
        outer_excess = outer_excess.max(g);
        if g >= 1.0 - band {
            max_offset = max_offset.max(offset(v));
            outer_contacts.push(v.as_slice().to_vec());
        }
    }
    let pass = inner_excess <= 1.0 + tol && outer_excess <= 1.0 + tol && max_offset <= max_allowed_offset;
    Ok(MeanCheckReport {
        lambda,
        v_dim: spec.unit_axes().len(),
        inner_excess,
        outer_excess,
        inner_contacts,
        outer_contacts,
        max_offset_from_v: max_offset,
        pass,
    })
}

pub const DEFAULT_EPS: f64 = 1e-8;
const MAX_ITER: usize = 1_000_000;

/// (1+ε)-approximate minimum-volume centered ellipsoid containing `points`
/// and their negatives: Khachiyan's multiplicative-weights iteration with
/// Todd-Yildirim away steps.
pub fn loewner(points: &[Point], eps: f64) -> Result<Ellipsoid> {
    let q = khachiyan(points, eps.max(KHACHIYAN_FLOOR))?;
    let q = if eps < KHACHIYAN_FLOOR {
        loewner_newton(points, q * (1.0 - 1e-3), eps)?
    } else {
        q
    };
    Ellipsoid::new((&q + q.transpose()) * 0.5)
}

/// Khachiyan's iteration with away steps stalls on clustered contact
/// points, so tighter tolerances are reached by Newton's method.
const KHACHIYAN_FLOOR: f64 = 1e-6;

fn khachiyan(points: &[Point], eps: f64) -> Result<DMatrix<f64>> {
    let n = points.first().ok_or(Error::Degenerate)?.len();
    let m = points.len();
    let pts = DMatrix::from_fn(n, m, |i, j| points[j][i]);
    if pts.clone().svd(false, false).rank(1e-10 * pts.amax()) < n {
        return Err(Error::Degenerate);
    }
    let nf = n as f64;
    let mut u = vec![1.0 / m as f64; m];
    let mut g = vec![0.0; m];
    let mut minv = DMatrix::zeros(n, n);
    let refresh = |u: &[f64], g: &mut [f64], minv: &mut DMatrix<f64>| -> Result<()> {
        let mut mm = DMatrix::zeros(n, n);
        for (j, w) in u.iter().enumerate() {
            if *w > 0.0 {
                let p = pts.column(j);
                mm += p * p.transpose() * *w;
            }
        }
        *minv = mm.cholesky().ok_or(Error::Degenerate)?.inverse();
        for (j, gj) in g.iter_mut().enumerate() {
            let p = pts.column(j);
            *gj = p.dot(&(&*minv * p));
        }
        Ok(())
    };
    refresh(&u, &mut g, &mut minv)?;
    for iter in 1..=MAX_ITER {
        let (jmax, kappa) = argmax(&g);
        let (kmin, gmin) = g
            .iter()
            .enumerate()
            .filter(|(j, _)| u[*j] > 0.0)
            .map(|(j, v)| (j, *v))
            .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        let up = kappa / nf - 1.0;
        let down = 1.0 - gmin / nf;
        if up <= eps && down <= eps {
            break;
        }
        let (j, beta, drop) = if up >= down {
            (jmax, (kappa - nf) / (nf * (kappa - 1.0)), false)
        } else {
            let uk = u[kmin];
            let floor = -uk / (1.0 - uk);
            let mut beta = (gmin - nf) / (nf * (gmin - 1.0));
            if !(beta < 0.0) || beta < floor {
                beta = floor;
            }
            (kmin, beta, beta == floor)
        };
        for w in u.iter_mut() {
            *w *= 1.0 - beta;
        }
        u[j] += beta;
        if drop {
            u[j] = 0.0;
        }
        // M' = (1 − β)(M + c ppᵀ) with c = β/(1 − β); Sherman-Morrison on M⁻¹.
        let c = beta / (1.0 - beta);
        let p = pts.column(j);
        let mp = &minv * p;
        let denom = 1.0 + c * g[j];
        if iter % 256 == 0 || !(denom.abs() > 1e-8) {
            refresh(&u, &mut g, &mut minv)?;
            continue;
        }
        for (i, gi) in g.iter_mut().enumerate() {
            let t = pts.column(i).dot(&mp);
            *gi = (*gi - c * t * t / denom) / (1.0 - beta);
        }
        minv = (&minv - &mp * mp.transpose() * (c / denom)) / (1.0 - beta);
    }
    refresh(&u, &mut g, &mut minv)?;
    let kappa = g.iter().cloned().fold(0.0, f64::max);
    Ok(&minv / kappa)
}

/// Log-barrier Newton method for min −log det Q s.t. pᵀQp ≤ 1, started
/// from a strictly feasible Q; the result is scaled to touch the points.
fn loewner_newton(points: &[Point], q0: DMatrix<f64>, eps: f64) -> Result<DMatrix<f64>> {
    let n = q0.nrows();
    let basis: Vec<DMatrix<f64>> = (0..n)
        .flat_map(|k| (k..n).map(move |l| (k, l)))
        .map(|(k, l)| {
            let mut e = DMatrix::zeros(n, n);
            e[(k, l)] = 1.0;
            e[(l, k)] = 1.0;
            e
        })
        .collect();
    let dim = basis.len();
    let grads: Vec<DVector<f64>> = points
        .iter()
        .map(|p| DVector::from_iterator(dim, basis.iter().map(|e| p.dot(&(e * p)))))
        .collect();
    let slacks = |q: &DMatrix<f64>| -> Option<Vec<f64>> {
        let s: Vec<f64> = points.iter().map(|p| 1.0 - p.dot(&(q * p))).collect();
        s.iter().all(|x| *x > 0.0).then_some(s)
    };
    let objective = |q: &DMatrix<f64>, tau: f64| -> Option<f64> {
        let chol = q.clone().cholesky()?;
        let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        let s = slacks(q)?;
        Some(-tau * logdet - s.iter().map(|x| x.ln()).sum::<f64>())
    };
    let m = points.len() as f64;
    let mut q = q0;
    let mut tau = m;
    let target = m / (eps * 1e-4).max(1e-14);
    loop {
        for _ in 0..100 {
            let qinv = q.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.inverse();
            let s = slacks(&q).ok_or(Error::NoConvergence("barrier left its domain".into()))?;
            let qe: Vec<DMatrix<f64>> = basis.iter().map(|e| &qinv * e).collect();
            let mut g = DVector::from_fn(dim, |j, _| -tau * qe[j].trace());
            let mut h = DMatrix::from_fn(dim, dim, |j, k| tau * (&qe[j] * &qe[k]).trace());
            for (gr, si) in grads.iter().zip(&s) {
                g += gr / *si;
                h += gr * gr.transpose() / (si * si);
            }
            // Late in the path the slacks are tiny and H can lose definiteness
            // numerically; a ridge keeps the step a descent direction.
            let dx = match h.clone().cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    let ridge = 1e-12 * h.norm();
                    (h + DMatrix::identity(dim, dim) * ridge)
                        .cholesky()
                        .ok_or(Error::NotPositiveDefinite)?
                        .solve(&(-&g))
                }
            };
            let dec = -g.dot(&dx);
            if !(dec > 1e-20) {
                break;
            }
            let step = DMatrix::from_fn(n, n, |k, l| {
                let (a, b) = if k <= l { (k, l) } else { (l, k) };
                let j = a * n - a * (a + 1) / 2 + b;
                dx[j]
            });
            let f0 = objective(&q, tau).ok_or(Error::NotPositiveDefinite)?;
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let cand = &q + &step * alpha;
                if let Some(f1) = objective(&cand, tau) {
                    if f1 <= f0 - 0.25 * alpha * dec || dec < 1e-12 && f1 <= f0 {
                        q = cand;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if tau >= target {
            break;
        }
        tau *= 8.0;
    }
    let kappa = points.iter().map(|p| p.dot(&(&q * p))).fold(0.0, f64::max);
    Ok(q / kappa)
}

fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |b, (j, x)| if *x > b.1 { (j, *x) } else { b },
    )
}

/// Maximal-volume inscribed ellipsoid, the polar of the Loewner ellipsoid of K°.
pub fn john(k: &SymmetricBody, eps: f64) -> Result<Ellipsoid> {
    Ok(loewner(k.facets(), eps)?.polar())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::point;
    use crate::fixtures;
    use approx::assert_relative_eq;

    fn diag(d: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(d))
    }

    #[test]
    fn gauge_polar_tangent() {
        let b = Ellipsoid::ball(2);
        assert_relative_eq!(b.gauge(&point(&[3.0, 4.0])).unwrap(), 5.0);
        let e = Ellipsoid::new(diag(&[0.25, 1.0])).unwrap();
        assert_relative_eq!(e.gauge(&point(&[2.0, 0.0])).unwrap(), 1.0);
        assert_eq!(e.gauge(&point(&[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(b.polar(), b);
        assert_relative_eq!(e.polar().q(), &diag(&[4.0, 1.0]), epsilon = 1e-14);
        let y = e.tangent_dual_point(&point(&[2.0, 0.0]), 1e-12).unwrap();
        assert_relative_eq!(y, point(&[0.5, 0.0]), epsilon = 1e-14);
        let y = b.tangent_dual_point(&point(&[1.0, 0.0]), 1e-12).unwrap();
        assert_relative_eq!(y, point(&[1.0, 0.0]));
        assert!(e.tangent_dual_point(&point(&[1.0, 0.0]), 1e-9).is_err());
    }

    #[test]
    fn mean_examples() {
        let spec = MeanSpec::new(DMatrix::identity(2, 2), vec![2.0, 1.0], 0.0).unwrap();
        assert_relative_eq!(mean_ellipsoid(&spec).q(), &DMatrix::identity(2, 2));
        let spec = MeanSpec::new(DMatrix::identity(2, 2), vec![2.0, 1.0], 1.0).unwrap();
        assert_relative_eq!(mean_ellipsoid(&spec).q(), &diag(&[0.25, 1.0]), epsilon = 1e-15);
        let spec = MeanSpec::new(DMatrix::identity(2, 2), vec![2.0, 1.0], 0.5).unwrap();
        assert_relative_eq!(mean_ellipsoid(&spec).q(), &diag(&[0.5, 1.0]), epsilon = 1e-15);
    }

    #[test]
    fn mean_check_square() {
        let k = fixtures::cube(2);
        let r = mean_ellipsoid_check(&k, &Ellipsoid::ball(2), 2f64.sqrt(), 0.5, 1e-9).unwrap();
        assert!(r.pass);
        assert_eq!(r.v_dim, 2);
        assert!(mean_ellipsoid_check(&k, &Ellipsoid::ball(2), 2f64.sqrt(), 0.0, 1e-9).is_err());
    }

    #[test]
    fn loewner_examples() {
        for n in 2..=4 {
            let e = loewner(fixtures::cube(n).vertices(), 1e-10).unwrap();
            assert_relative_eq!(e.q(), &(DMatrix::identity(n, n) / n as f64), epsilon = 1e-9);
            let e = loewner(fixtures::cross(n).vertices(), 1e-10).unwrap();
            assert_relative_eq!(e.q(), &DMatrix::identity(n, n), epsilon = 1e-9);
        }
        let e = loewner(&[point(&[2.0, 0.0]), point(&[0.0, 1.0])], 1e-10).unwrap();
        assert_relative_eq!(e.q(), &diag(&[0.25, 1.0]), epsilon = 1e-9);
        assert!(loewner(&[point(&[1.0, 1.0]), point(&[2.0, 2.0])], 1e-8).is_err());
    }

    #[test]
    fn john_examples() {
        let e = john(&fixtures::cube(3), 1e-10).unwrap();
        assert_relative_eq!(e.q(), &DMatrix::identity(3, 3), epsilon = 1e-8);
        let e = john(&fixtures::cross(3), 1e-10).unwrap();
        assert_relative_eq!(e.q(), &(DMatrix::identity(3, 3) * 3.0), epsilon = 1e-8);
        let e = john(&fixtures::regular_polygon(6), 1e-10).unwrap();
        assert_relative_eq!(e.q(), &(DMatrix::identity(2, 2) * (4.0 / 3.0)), epsilon = 1e-8);
    }
}
