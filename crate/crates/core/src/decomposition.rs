//! John and Ader decompositions, separation certificates and the
//! bookkeeping around them.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::body::{LinearMap, Point, SymmetricBody};
use crate::ellipsoid::Ellipsoid;
use crate::error::{Error, Result};
use crate::lp::{Cmp, LinearProgram, LpOutcome};
use crate::tolerance::Tolerance;

/// Weights below this are dropped.
pub const WEIGHT_FLOOR: f64 = 1e-12;

/// Index pairs (k, l), k ≤ l, of the upper triangle of an n×n matrix.
fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(n * (n + 1) / 2);
    for k in 0..n {
        for l in k..n {
            v.push((k, l));
        }
    }
    v
}

/// Isometric coordinates of xxᵀ in symmetric-matrix space.
fn svec_outer(x: &Point) -> Vec<f64> {
    upper_pairs(x.len())
        .into_iter()
        .map(|(k, l)| {
            if k == l {
                x[k] * x[k]
            } else {
                std::f64::consts::SQRT_2 * x[k] * x[l]
            }
        })
        .collect()
}

fn weighted_gram(points: &[(Point, f64)], n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for (p, w) in points {
        a += p * p.transpose() * *w;
    }
    a
}

#[derive(Clone, Debug, Serialize)]
pub struct JohnDecomposition {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

/// Solves Σλᵢuⁱ(uⁱ)ᵀ = I over λ ≥ 0; `None` when infeasible.
pub fn find_john_decomposition(contacts: &[Point], n: usize) -> Option<JohnDecomposition> {
    if contacts.len() < n || contacts.iter().any(|u| u.len() != n) {
        return None;
    }
    let cols: Vec<Vec<f64>> = contacts.iter().map(svec_outer).collect();
    let mut lp = LinearProgram::minimize(vec![0.0; contacts.len()]);
    for (row, (k, l)) in upper_pairs(n).into_iter().enumerate() {
        let coeffs = cols.iter().map(|c| c[row]).collect();
        lp.constrain(coeffs, Cmp::Eq, if k == l { 1.0 } else { 0.0 });
    }
    match lp.solve(1e-9) {
        LpOutcome::Optimal { x, .. } => {
            let (points, weights) = contacts
                .iter()
                .zip(x)
                .filter(|(_, w)| *w > WEIGHT_FLOOR)
                .map(|(p, w)| (p.clone(), w))
                .unzip();
            Some(JohnDecomposition { points, weights })
        }
        _ => None,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct JohnReport {
    pub identity_residual: f64,
    pub weight_sum_residual: f64,
    pub unit_residual: f64,
    pub pass: bool,
}

pub fn verify_john(d: &JohnDecomposition, tol: f64) -> JohnReport {
    let n = d.points.first().map_or(0, |p| p.len());
    let pairs: Vec<(Point, f64)> = d.points.iter().cloned().zip(d.weights.iter().cloned()).collect();
    let identity_residual = (weighted_gram(&pairs, n) - DMatrix::identity(n, n)).norm();
    let weight_sum_residual = (d.weights.iter().sum::<f64>() - n as f64).abs();
    let unit_residual = d
        .points
        .iter()
        .map(|p| (p.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    JohnReport {
        identity_residual,
        weight_sum_residual,
        unit_residual,
        pass: identity_residual <= tol && weight_sum_residual <= tol && unit_residual <= tol,
    }
}

/// Σλᵢyⁱ(yⁱ)ᵀ = Σμⱼzʲ(zʲ)ᵀ with ‖yⁱ‖ = R and ‖zʲ‖ = r.
#[derive(Clone, Debug, PartialEq)]
pub struct AderDecomposition {
    pub r: f64,
    pub big_r: f64,
    pub outer: Vec<(Point, f64)>,
    pub inner: Vec<(Point, f64)>,
}

impl AderDecomposition {
    pub fn dim(&self) -> usize {
        self.outer.first().map_or(0, |p| p.0.len())
    }

    /// A = Σλᵢyⁱ(yⁱ)ᵀ.
    pub fn matrix(&self) -> DMatrix<f64> {
        weighted_gram(&self.outer, self.dim())
    }

    pub fn inner_matrix(&self) -> DMatrix<f64> {
        weighted_gram(&self.inner, self.dim())
    }

    pub fn support_size(&self) -> usize {
        self.outer.len() + self.inner.len()
    }

    pub fn support_bound(&self) -> usize {
        let n = self.dim();
        n * (n + 1) / 2 + 1
    }

    pub fn ratio(&self) -> f64 {
        self.big_r / self.r
    }

    /// R²Σλ − r²Σμ.
    pub fn trace_defect(&self) -> f64 {
        let sl: f64 = self.outer.iter().map(|p| p.1).sum();
        let sm: f64 = self.inner.iter().map(|p| p.1).sum();
        self.big_r * self.big_r * sl - self.r * self.r * sm
    }
}

/// A symmetric, trace-free, ‖A‖_F = 1, with
/// ⟨ŷ, Aŷ⟩ ≤ ⟨ẑ, Aẑ⟩ − margin for all unit outer ŷ and inner ẑ.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparationCertificate {
    pub a: DMatrix<f64>,
    pub margin: f64,
}

impl SeparationCertificate {
    /// Smallest gap ⟨ẑ, Aẑ⟩ − ⟨ŷ, Aŷ⟩ over the given contacts.
    pub fn realized_margin(&self, outer: &[Point], inner: &[Point]) -> f64 {
        let quad = |p: &Point| {
            let u = p / p.norm();
            u.dot(&(&self.a * &u))
        };
        let top = outer.iter().map(quad).fold(f64::NEG_INFINITY, f64::max);
        let bottom = inner.iter().map(quad).fold(f64::INFINITY, f64::min);
        bottom - top
    }
}

#[derive(Clone, Debug)]
pub enum AderOutcome {
    Decomposition(AderDecomposition),
    Separation(SeparationCertificate),
}

/// Decides whether the contact sets of K at (r, R) admit an Ader
/// decomposition; otherwise returns a maximal-margin separating matrix.
pub fn find_ader(k: &SymmetricBody, r: f64, big_r: f64, tol: &Tolerance) -> Result<AderOutcome> {
    let n = k.dim();
    if !(r > 0.0 && big_r >= r) {
        return Err(Error::Precondition(format!(
            "need 0 < r ≤ R, got r={r}, R={big_r}"
        )));
    }
    let slack = tol.contact_band.max(tol.geometric);
    for a in k.facets() {
        if 1.0 / a.norm() < r * (1.0 - slack) {
            return Err(Error::Precondition(format!(
                "r𝔹ⁿ not inside K at facet {:?}",
                a.as_slice()
            )));
        }
    }
    for v in k.vertices() {
        if v.norm() > big_r * (1.0 + slack) {
            return Err(Error::Precondition(format!(
                "vertex {:?} outside R𝔹ⁿ",
                v.as_slice()
            )));
        }
    }
    // Snap contacts onto the spheres so the trace identity is exact.
    let outer: Vec<Point> = k
        .outer_contacts(big_r, tol.contact_band)
        .into_iter()
        .map(|y| &y * (big_r / y.norm()))
        .collect();
    let inner: Vec<Point> = k
        .inner_contacts(r, tol.contact_band)
        .into_iter()
        .map(|z| &z * (r / z.norm()))
        .collect();
    if outer.is_empty() || inner.is_empty() {
        return Err(Error::NoContacts);
    }
    let unit = |p: &Point| p / p.norm();
    let ycols: Vec<Vec<f64>> = outer.iter().map(|y| svec_outer(&unit(y))).collect();
    let zcols: Vec<Vec<f64>> = inner.iter().map(|z| svec_outer(&unit(z))).collect();
    let nn = ycols.len();
    let mm = zcols.len();
    let pairs = upper_pairs(n);

    let mut lp = LinearProgram::minimize(vec![0.0; nn + mm]);
    for (row, &(kk, ll)) in pairs.iter().enumerate() {
        if kk == ll && kk == n - 1 {
            continue; // implied by the two weight sums
        }
        let mut c: Vec<f64> = ycols.iter().map(|y| y[row]).collect();
        c.extend(zcols.iter().map(|z| -z[row]));
        lp.constrain(c, Cmp::Eq, 0.0);
    }
    let mut c = vec![1.0; nn];
    c.extend(vec![0.0; mm]);
    lp.constrain(c, Cmp::Eq, 1.0);
    let mut c = vec![0.0; nn];
    c.extend(vec![1.0; mm]);
    lp.constrain(c, Cmp::Eq, 1.0);

    if let LpOutcome::Optimal { x, .. } = lp.solve(tol.contact_band) {
        // Scale so that Σμ = n, the John normalization of the inner side.
        let s = n as f64 * r * r;
        let outer_w: Vec<(Point, f64)> = outer
            .iter()
            .zip(&x[..nn])
            .filter(|(_, w)| **w > WEIGHT_FLOOR)
            .map(|(y, w)| (y.clone(), s * w / (big_r * big_r)))
            .collect();
        let inner_w: Vec<(Point, f64)> = inner
            .iter()
            .zip(&x[nn..])
            .filter(|(_, w)| **w > WEIGHT_FLOOR)
            .map(|(z, w)| (z.clone(), s * w / (r * r)))
            .collect();
        let d = AderDecomposition {
            r,
            big_r,
            outer: outer_w,
            inner: inner_w,
        };
        return Ok(AderOutcome::Decomposition(reduce_support(&d)));
    }

    separation(&outer, &inner, n).map(AderOutcome::Separation)
}

fn separation(outer: &[Point], inner: &[Point], n: usize) -> Result<SeparationCertificate> {
    // Variables: A's upper triangle (free), c (free), δ (free); maximize δ.
    let pairs = upper_pairs(n);
    let m = pairs.len();
    let nv = m + 2;
    let quad_coeffs = |p: &Point| -> Vec<f64> {
        let u = p / p.norm();
        pairs
            .iter()
            .map(|&(k, l)| if k == l { u[k] * u[k] } else { 2.0 * u[k] * u[l] })
            .collect()
    };
    let mut obj = vec![0.0; nv];
    obj[m + 1] = -1.0;
    let mut lp = LinearProgram::minimize(obj);
    for j in 0..nv {
        lp.set_free(j);
    }
    for y in outer {
        let mut c = quad_coeffs(y);
        c.push(-1.0);
        c.push(0.0);
        lp.constrain(c, Cmp::Le, 0.0);
    }
    for z in inner {
        let mut c = quad_coeffs(z);
        c.push(-1.0);
        c.push(-1.0);
        lp.constrain(c, Cmp::Ge, 0.0);
    }
    let mut tr = vec![0.0; nv];
    for (j, &(k, l)) in pairs.iter().enumerate() {
        if k == l {
            tr[j] = 1.0;
        }
    }
    lp.constrain(tr, Cmp::Eq, 0.0);
    for j in 0..m {
        let mut c = vec![0.0; nv];
        c[j] = 1.0;
        lp.constrain(c.clone(), Cmp::Le, 1.0);
        lp.constrain(c, Cmp::Ge, -1.0);
    }
    let x = match lp.solve(1e-9) {
        LpOutcome::Optimal { x, .. } => x,
        other => return Err(Error::NoConvergence(format!("separation LP: {other:?}"))),
    };
    let mut a = DMatrix::zeros(n, n);
    for (j, &(k, l)) in pairs.iter().enumerate() {
        a[(k, l)] = x[j];
        a[(l, k)] = x[j];
    }
    let norm = a.norm();
    let delta = x[m + 1];
    if norm == 0.0 || delta <= 1e-14 {
        return Err(Error::ToleranceMismatch(
            "contacts admit no decomposition yet are not separable".into(),
        ));
    }
    Ok(SeparationCertificate {
        a: a / norm,
        margin: delta / norm,
    })
}

/// Carathéodory pivoting until the active columns are independent, which
/// leaves at most n(n+1)/2 + 1 points.
pub fn reduce_support(d: &AderDecomposition) -> AderDecomposition {
    let big_r2 = d.big_r * d.big_r;
    let r2 = d.r * d.r;
    // Columns [svec(ŷŷᵀ); 1; 0] and [−svec(ẑẑᵀ); 0; 1] with weights λ̃ = R²λ, μ̃ = r²μ.
    let mut cols: Vec<DVector<f64>> = Vec::new();
    let mut w: Vec<f64> = Vec::new();
    for (y, l) in &d.outer {
        let mut c = svec_outer(&(y / y.norm()));
        c.extend([1.0, 0.0]);
        cols.push(DVector::from_vec(c));
        w.push(l * big_r2);
    }
    for (z, m) in &d.inner {
        let mut c: Vec<f64> = svec_outer(&(z / z.norm())).into_iter().map(|v| -v).collect();
        c.extend([0.0, 1.0]);
        cols.push(DVector::from_vec(c));
        w.push(m * r2);
    }
    let mut active: Vec<usize> = (0..cols.len()).filter(|&i| w[i] > WEIGHT_FLOOR).collect();
    let rows = cols.first().map_or(0, |c| c.len());
    let build = |idx: &[usize]| DMatrix::from_fn(rows, idx.len(), |i, j| cols[idx[j]][i]);

    loop {
        let a = build(&active);
        let svd = a.clone().svd(false, true);
        let sv = &svd.singular_values;
        let top = sv.max();
        let rank = sv.iter().filter(|s| **s > 1e-10 * top).count();
        if rank == active.len() {
            break;
        }
        // Null vector: right singular vector of the smallest singular value.
        let vt = svd.v_t.expect("requested");
        let (imin, _) = sv
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |b, (i, s)| if *s < b.1 { (i, *s) } else { b });
        let null: Vec<f64> = if active.len() > sv.len() {
            // Wide matrix: complete the basis by projecting a unit vector.
            wide_null_vector(&a)
        } else {
            vt.row(imin).iter().cloned().collect()
        };
        // Candidate moves in both directions; each zeroes one weight.
        let mut best: Option<(Vec<f64>, usize, f64)> = None;
        for sign in [1.0, -1.0] {
            let mut tmax = f64::INFINITY;
            for (j, &i) in active.iter().enumerate() {
                let dj = sign * null[j];
                if dj < -1e-15 {
                    tmax = tmax.min(w[i] / -dj);
                }
            }
            if !tmax.is_finite() {
                continue;
            }
            let neww: Vec<f64> = active
                .iter()
                .enumerate()
                .map(|(j, &i)| (w[i] + tmax * sign * null[j]).max(0.0))
                .collect();
            let (jz, _) =
                neww.iter()
                    .enumerate()
                    .fold((0, f64::INFINITY), |b, (j, x)| if *x < b.1 { (j, *x) } else { b });
            let rest: Vec<usize> = active
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != jz)
                .map(|(_, &i)| i)
                .collect();
            let smin = build(&rest).singular_values().min();
            if best.as_ref().is_none_or(|b| smin > b.2) {
                best = Some((neww, jz, smin));
            }
        }
        let Some((neww, jz, _)) = best else { break };
        for (j, &i) in active.iter().enumerate() {
            w[i] = neww[j];
        }
        w[active[jz]] = 0.0;
        active.retain(|&i| w[i] > WEIGHT_FLOOR);
    }

    let no = d.outer.len();
    let outer = active
        .iter()
        .filter(|&&i| i < no)
        .map(|&i| (d.outer[i].0.clone(), w[i] / big_r2))
        .collect();
    let inner = active
        .iter()
        .filter(|&&i| i >= no)
        .map(|&i| (d.inner[i - no].0.clone(), w[i] / r2))
        .collect();
    AderDecomposition {
        r: d.r,
        big_r: d.big_r,
        outer,
        inner,
    }
}

fn wide_null_vector(a: &DMatrix<f64>) -> Vec<f64> {
    // For more columns than rows, pad with zero rows so the SVD is square.
    let k = a.ncols();
    let mut sq = DMatrix::zeros(k, k);
    sq.view_mut((0, 0), (a.nrows(), k)).copy_from(a);
    let svd = sq.svd(false, true);
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |b, (i, s)| if *s < b.1 { (i, *s) } else { b });
    svd.v_t.expect("requested").row(imin).iter().cloned().collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct AderReport {
    pub matrix_residual: f64,
    pub trace_residual: f64,
    pub sphere_residual: f64,
    pub support_size: usize,
    pub support_bound: usize,
    pub pass: bool,
}

pub fn verify_ader(d: &AderDecomposition, tol: f64) -> AderReport {
    let matrix_residual = (d.matrix() - d.inner_matrix()).norm();
    let trace_residual = d.trace_defect().abs();
    let sphere_residual = d
        .outer
        .iter()
        .map(|(y, _)| (y.norm() - d.big_r).abs() / d.big_r)
        .chain(d.inner.iter().map(|(z, _)| (z.norm() - d.r).abs() / d.r))
        .fold(0.0, f64::max);
    let positive = d.outer.iter().chain(&d.inner).all(|p| p.1 > 0.0);
    let nonempty = !d.outer.is_empty() && !d.inner.is_empty();
    AderReport {
        matrix_residual,
        trace_residual,
        sphere_residual,
        support_size: d.support_size(),
        support_bound: d.support_bound(),
        pass: nonempty
            && positive
            && matrix_residual <= tol
            && trace_residual <= tol
            && sphere_residual <= tol
            && d.support_size() <= d.support_bound(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SqrtnReport {
    /// ⟨A, A⟩_F with A scaled to unit trace.
    pub frobenius_sq: f64,
    /// 1/√⟨A, A⟩_F, an upper bound for R/r.
    pub ratio_bound: f64,
    pub sqrt_n: f64,
    /// ‖A − I/n‖_F.
    pub distance_from_identity: f64,
    /// max over support pairs of | |⟨zⁱ, yʲ⟩| − r² |.
    pub inner_product_deviation: f64,
}

pub fn sqrtn_diagnostics(d: &AderDecomposition) -> SqrtnReport {
    let n = d.dim();
    let a = d.matrix();
    let a = &a / a.trace();
    let frobenius_sq = a.norm_squared();
    let r2 = d.r * d.r;
    let inner_product_deviation = d
        .inner
        .iter()
        .flat_map(|(z, _)| d.outer.iter().map(move |(y, _)| (z.dot(y).abs() - r2).abs()))
        .fold(0.0, f64::max);
    SqrtnReport {
        frobenius_sq,
        ratio_bound: 1.0 / frobenius_sq.sqrt(),
        sqrt_n: (n as f64).sqrt(),
        distance_from_identity: (&a - DMatrix::identity(n, n) / n as f64).norm(),
        inner_product_deviation,
    }
}

#[derive(Clone, Debug)]
pub struct Improvement {
    pub ellipsoid: Ellipsoid,
    pub old_ratio: f64,
    pub new_ratio: f64,
    pub epsilon: f64,
}

/// Ratio R/r of K in the position where E becomes the unit ball.
pub fn position_ratio(k: &SymmetricBody, e: &Ellipsoid) -> Result<f64> {
    let kn = k.apply_map(&e.normalizing_map())?;
    let (r, big_r) = kn.in_circum();
    Ok(big_r / r)
}

/// Moves the E-normalized body by T_ε = I + εA, with ε line-searched in
/// (0, 1/‖A‖₂), and returns the improved ellipsoid.
pub fn improve_position(
    e: &Ellipsoid,
    cert: &SeparationCertificate,
    k: &SymmetricBody,
) -> Result<Improvement> {
    let n = k.dim();
    let l = e.normalizing_map();
    let kn = k.apply_map(&l)?;
    let (r0, big_r0) = kn.in_circum();
    let old_ratio = big_r0 / r0;
    let spectral = cert.a.clone().singular_values().max();
    let mut best: Option<(f64, f64)> = None;
    let mut eps = 1.0 / spectral;
    for _ in 0..60 {
        eps *= 0.5;
        let t = LinearMap::new(DMatrix::identity(n, n) + &cert.a * eps);
        let moved = kn.apply_map(&t)?;
        let (r, big_r) = moved.in_circum();
        let ratio = big_r / r;
        if best.is_none_or(|b| ratio < b.1) {
            best = Some((eps, ratio));
        }
    }
    let (eps, new_ratio) = best.expect("nonempty search");
    if new_ratio >= old_ratio {
        return Err(Error::ToleranceMismatch(format!(
            "no ε improves the ratio {old_ratio} (certificate margin {})",
            cert.margin
        )));
    }
    let t = DMatrix::identity(n, n) + &cert.a * eps;
    let tl = t * l.matrix();
    let q = tl.transpose() * &tl;
    Ok(Improvement {
        ellipsoid: Ellipsoid::new((&q + q.transpose()) * 0.5)?,
        old_ratio,
        new_ratio,
        epsilon: eps,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SubspaceReport {
    pub outer_in_u: bool,
    pub inner_in_u: bool,
    /// Contacts in U on one side force contacts in U on the other.
    pub propagation_ok: bool,
    pub full_ratio: f64,
    pub restricted_ratio: f64,
    pub restricted_matches: bool,
    pub inner_contact_rank: usize,
    pub rank_lower_bound: usize,
    pub rank_ok: bool,
    pub pass: bool,
}

fn rank_of(points: &[Point]) -> usize {
    if points.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(points[0].len(), points.len(), |i, j| {
        points[j][i] / points[j].norm()
    });
    m.svd(false, false).rank(1e-8)
}

/// Checks the contact-subspace lemma for U spanned by the orthonormal
/// columns of `basis`, using the Ader decomposition of K at (r, R).
pub fn subspace_restriction_check(
    k: &SymmetricBody,
    r: f64,
    big_r: f64,
    basis: &DMatrix<f64>,
    tol: &Tolerance,
) -> Result<SubspaceReport> {
    let d = match find_ader(k, r, big_r, tol)? {
        AderOutcome::Decomposition(d) => d,
        AderOutcome::Separation(_) => {
            return Err(Error::Precondition("position is not optimal at (r, R)".into()))
        }
    };
    let proj = basis * basis.transpose();
    let off = |p: &Point| (p - &proj * p).norm() / p.norm();
    let band = 1e-6;
    let outer_in_u = d.outer.iter().all(|(y, _)| off(y) <= band);
    let inner_in_u = d.inner.iter().all(|(z, _)| off(z) <= band);
    if !outer_in_u && !inner_in_u {
        let witness = d
            .outer
            .iter()
            .map(|p| &p.0)
            .find(|y| off(y) > band)
            .expect("exists");
        return Err(Error::Precondition(format!(
            "neither contact set lies in U; outer witness {:?}",
            witness.as_slice()
        )));
    }
    let propagation_ok = outer_in_u == inner_in_u;
    let section = k.section(basis, tol.geometric.max(1e-9))?;
    let (rs, big_rs) = section.in_circum();
    let full_ratio = big_r / r;
    let restricted_ratio = big_rs / rs;
    let restricted_matches = (restricted_ratio - full_ratio).abs() <= 1e-6 * full_ratio;
    let contacts = k.inner_contacts(r, tol.contact_band);
    let inner_contact_rank = rank_of(&contacts);
    let rank_lower_bound = (full_ratio * full_ratio - 1e-9).ceil() as usize;
    let rank_ok = inner_contact_rank >= rank_lower_bound;
    Ok(SubspaceReport {
        outer_in_u,
        inner_in_u,
        propagation_ok,
        full_ratio,
        restricted_ratio,
        restricted_matches,
        inner_contact_rank,
        rank_lower_bound,
        rank_ok,
        pass: propagation_ok && restricted_matches && rank_ok,
    })
}
