//! Banach-Mazur distances: body to ball, planar body to body, planar body
//! to parallelogram.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::body::{LinearMap, Point, SymmetricBody};
use crate::decomposition::{find_ader, improve_position, AderDecomposition, AderOutcome};
use crate::ellipsoid::{john, loewner, Ellipsoid, DEFAULT_EPS};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::lp::{Cmp, LinearProgram, LpOutcome};
use crate::rng::SplitMix64;
use crate::search::{golden, nelder_mead, SearchOptions};
use crate::tolerance::Tolerance;

#[derive(Clone, Debug)]
pub enum Witness {
    /// Inner distance ellipsoid E with E ⊆ K ⊆ value·E.
    Ellipsoid(Ellipsoid),
    /// Map T with s·K ⊆ T(L) ⊆ value·s·K.
    Map(LinearMap),
}

#[derive(Clone, Debug)]
pub struct BMResult {
    pub value: f64,
    pub witness: Witness,
    pub certificate: Option<AderDecomposition>,
    pub iterations: usize,
    pub converged: bool,
}

/// Smallest ρ with s·K ⊆ T(L) ⊆ ρ·s·K.
pub fn ratio_for_map(k: &SymmetricBody, l: &SymmetricBody, t: &LinearMap) -> Result<f64> {
    if k.dim() != l.dim() || t.dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            found: l.dim(),
        });
    }
    let tl = l.apply_map(t)?;
    let a = k
        .vertices()
        .iter()
        .map(|v| tl.gauge_unchecked(v))
        .fold(0.0, f64::max);
    let b = tl
        .vertices()
        .iter()
        .map(|w| k.gauge_unchecked(w))
        .fold(0.0, f64::max);
    Ok(a * b)
}

// ---------------------------------------------------------------------------
// Distance to the ball.

/// Upper-triangle index pairs; coordinate j of Q is Q[k,l] = Q[l,k].
fn sym_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for k in 0..n {
        for l in k..n {
            v.push((k, l));
        }
    }
    v
}

struct Barrier<'a> {
    n: usize,
    pairs: Vec<(usize, usize)>,
    verts: &'a [Point],
    facets: &'a [Point],
}

struct BarrierState {
    q: DMatrix<f64>,
    t: f64,
}

impl Barrier<'_> {
    fn q_from(&self, x: &[f64]) -> DMatrix<f64> {
        let mut q = DMatrix::zeros(self.n, self.n);
        for (j, &(k, l)) in self.pairs.iter().enumerate() {
            q[(k, l)] = x[j];
            q[(l, k)] = x[j];
        }
        q
    }

    fn coords(&self, q: &DMatrix<f64>) -> Vec<f64> {
        self.pairs.iter().map(|&(k, l)| q[(k, l)]).collect()
    }

    /// ∂(vᵀQv)/∂q_j.
    fn quad_grad(&self, v: &Point) -> Vec<f64> {
        self.pairs
            .iter()
            .map(|&(k, l)| if k == l { v[k] * v[k] } else { 2.0 * v[k] * v[l] })
            .collect()
    }

    /// Slacks t − vᵀQv and 1 − aᵀQ⁻¹a, or None outside the domain.
    fn slacks(&self, s: &BarrierState) -> Option<(Vec<f64>, Vec<f64>, DMatrix<f64>)> {
        let chol = s.q.clone().cholesky()?;
        let qinv = chol.inverse();
        let vs: Vec<f64> = self.verts.iter().map(|v| s.t - v.dot(&(&s.q * v))).collect();
        let fs: Vec<f64> = self.facets.iter().map(|a| 1.0 - a.dot(&(&qinv * a))).collect();
        if vs.iter().chain(&fs).any(|x| !(*x > 0.0)) {
            return None;
        }
        Some((vs, fs, qinv))
    }

    /// Gradient and Hessian of τt − Σ log slacks in (q, t).
    fn derivatives(&self, s: &BarrierState, tau: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let (vs, fs, qinv) = self.slacks(s)?;
        let m = self.pairs.len();
        let p = m + 1;
        let mut g = DVector::zeros(p);
        let mut h = DMatrix::zeros(p, p);
        g[m] = tau;
        for (v, sv) in self.verts.iter().zip(&vs) {
            // slack = t − vᵀQv, ∇slack = (−quad_grad, 1)
            let mut d = DVector::from_vec(self.quad_grad(v).into_iter().map(|x| -x).collect());
            d = d.insert_row(m, 1.0);
            g -= &d / *sv;
            h += &d * d.transpose() / (sv * sv);
        }
        for (a, sf) in self.facets.iter().zip(&fs) {
            // φ = aᵀQ⁻¹a, slack = 1 − φ, ∂φ/∂q_j = −wᵀE_j w, ∂²φ = 2(E_j w)ᵀQ⁻¹(E_k w)
            let w = &qinv * a;
            let ew: Vec<DVector<f64>> = self
                .pairs
                .iter()
                .map(|&(k, l)| {
                    let mut e = DVector::zeros(self.n);
                    if k == l {
                        e[k] = w[k];
                    } else {
                        e[k] = w[l];
                        e[l] = w[k];
                    }
                    e
                })
                .collect();
            let qew: Vec<DVector<f64>> = ew.iter().map(|e| &qinv * e).collect();
            let dphi = DVector::from_fn(p, |j, _| if j < m { -w.dot(&ew[j]) } else { 0.0 });
            g += &dphi / *sf;
            h += &dphi * dphi.transpose() / (sf * sf);
            for j in 0..m {
                for k in j..m {
                    let v = 2.0 * ew[j].dot(&qew[k]) / sf;
                    h[(j, k)] += v;
                    if j != k {
                        h[(k, j)] += v;
                    }
                }
            }
        }
        Some((g, h))
    }

    /// Change of the barrier objective, computed from slack ratios.
    fn delta(&self, from: &BarrierState, to: &BarrierState, tau: f64) -> Option<f64> {
        let (v0, f0, _) = self.slacks(from)?;
        let (v1, f1, _) = self.slacks(to)?;
        let mut d = tau * (to.t - from.t);
        for (a, b) in v0.iter().zip(&v1).chain(f0.iter().zip(&f1)) {
            d -= (b / a).ln();
        }
        Some(d)
    }
}

/// Result of optimizing the ellipsoid position from one start.
#[derive(Clone, Debug)]
pub struct BallPosition {
    /// Inner distance ellipsoid, scaled so it touches K.
    pub ellipsoid: Ellipsoid,
    pub value: f64,
    pub newton_steps: usize,
}

/// Ratio √(max vᵀQv · max aᵀQ⁻¹a) of K in the position given by Q.
pub fn position_value(k: &SymmetricBody, q: &DMatrix<f64>) -> Result<f64> {
    let qinv = q.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.inverse();
    let outer = k.vertices().iter().map(|v| v.dot(&(q * v))).fold(0.0, f64::max);
    let inner = k.facets().iter().map(|a| a.dot(&(&qinv * a))).fold(0.0, f64::max);
    Ok((outer * inner).sqrt())
}

/// Minimizes max vᵀQv subject to aᵀQ⁻¹a ≤ 1, a convex program whose value
/// is the squared distance to the ball, by a log-barrier Newton method.
pub fn ball_position_from(k: &SymmetricBody, q0: &DMatrix<f64>, gap: f64) -> Result<BallPosition> {
    let n = k.dim();
    let bar = Barrier {
        n,
        pairs: sym_pairs(n),
        verts: k.vertices(),
        facets: k.facets(),
    };
    let qinv0 = q0.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.inverse();
    let c = k
        .facets()
        .iter()
        .map(|a| a.dot(&(&qinv0 * a)))
        .fold(0.0, f64::max);
    let q = q0 * (1.05 * c);
    let t = 1.05 * k.vertices().iter().map(|v| v.dot(&(&q * v))).fold(0.0, f64::max);
    let mut s = BarrierState { q, t };
    let ncons = (k.vertices().len() + k.facets().len()) as f64;
    let m = bar.pairs.len();
    let mut tau = ncons / s.t;
    let mut steps = 0;
    loop {
        for _ in 0..200 {
            let Some((g, h)) = bar.derivatives(&s, tau) else {
                return Err(Error::NoConvergence("barrier left its domain".into()));
            };
            let dx = match h.clone().cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    let reg = h.clone() + DMatrix::identity(m + 1, m + 1) * (1e-12 * h.norm());
                    reg.lu()
                        .solve(&(-&g))
                        .ok_or(Error::NoConvergence("singular Newton system".into()))?
                }
            };
            let dec = -g.dot(&dx);
            steps += 1;
            if !(dec > 1e-14) {
                break;
            }
            let x0 = bar.coords(&s.q);
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..80 {
                let x1: Vec<f64> = x0.iter().zip(dx.iter()).map(|(a, d)| a + alpha * d).collect();
                let cand = BarrierState {
                    q: bar.q_from(&x1),
                    t: s.t + alpha * dx[m],
                };
                if let Some(df) = bar.delta(&s, &cand, tau) {
                    if df <= -0.25 * alpha * dec || (dec < 1e-9 && df <= 1e-12) {
                        s = cand;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved || dec < 1e-12 {
                break;
            }
        }
        if ncons / tau <= gap * s.t {
            break;
        }
        tau *= 8.0;
    }
    let q = (&s.q + s.q.transpose()) * 0.5;
    let qinv = q.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.inverse();
    let inner = k.facets().iter().map(|a| a.dot(&(&qinv * a))).fold(0.0, f64::max);
    let q = q * inner;
    let value = position_value(k, &q)?;
    Ok(BallPosition {
        ellipsoid: Ellipsoid::new(q)?,
        value,
        newton_steps: steps,
    })
}

/// Unit-determinant SPD matrix from log-Cholesky coordinates.
pub fn log_cholesky(params: &[f64], n: usize) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    let mut it = params.iter();
    let mut trace = 0.0;
    for i in 0..n {
        for j in 0..=i {
            let p = *it.next().expect("n(n+1)/2 parameters");
            if i == j {
                l[(i, i)] = p;
                trace += p;
            } else {
                l[(i, j)] = p;
            }
        }
    }
    let shift = trace / n as f64;
    for i in 0..n {
        l[(i, i)] = (l[(i, i)] - shift).exp();
    }
    &l * l.transpose()
}

pub fn random_spd(rng: &mut SplitMix64, n: usize) -> DMatrix<f64> {
    let params: Vec<f64> = (0..n * (n + 1) / 2).map(|_| rng.uniform(-1.0, 1.0)).collect();
    log_cholesky(&params, n)
}

/// Duality gap at which the barrier method stops.
pub const BALL_GAP: f64 = 1e-12;

/// d_BM(K, 𝔹ⁿ) with an Ader certificate when the position is optimal.
pub fn bm_to_ball(k: &SymmetricBody, opts: &SearchOptions) -> Result<BMResult> {
    let n = k.dim();
    let tol = Tolerance::default();
    let mut starts = vec![john(k, DEFAULT_EPS)?.q().clone()];
    if opts.restarts > 0 {
        starts.push(loewner(k.vertices(), DEFAULT_EPS)?.q().clone());
        let mut rng = SplitMix64::new(opts.seed);
        for _ in 1..opts.restarts {
            starts.push(random_spd(&mut rng, n));
        }
    }
    let mut best: Option<BallPosition> = None;
    let mut iterations = 0;
    for q0 in &starts {
        let pos = ball_position_from(k, q0, BALL_GAP)?;
        iterations += pos.newton_steps;
        if best.as_ref().is_none_or(|b| pos.value < b.value) {
            best = Some(pos);
        }
    }
    let mut pos = best.expect("at least one start");
    let mut certificate = None;
    // On a flat optimal face the barrier point can sit ~√gap off the contact
    // structure, so the band is widened when the contacts are neither
    // decomposable nor separable, or when the step does not improve.
    let bands = [tol.contact_band, 1e-6, 1e-5];
    let mut band = 0;
    for _ in 0..6 {
        let kn = k.apply_map(&pos.ellipsoid.normalizing_map())?;
        let (r, big_r) = kn.in_circum();
        match find_ader(&kn, r, big_r, &tol.with_band(bands[band])) {
            Ok(AderOutcome::Decomposition(d)) => {
                certificate = Some(d);
                break;
            }
            Ok(AderOutcome::Separation(c)) => {
                let Ok(step) = improve_position(&pos.ellipsoid, &c, k) else {
                    if band + 1 == bands.len() {
                        break;
                    }
                    band += 1;
                    continue;
                };
                let next = ball_position_from(k, step.ellipsoid.q(), BALL_GAP)?;
                iterations += next.newton_steps;
                if next.value < pos.value {
                    pos = next;
                } else {
                    pos.ellipsoid = step.ellipsoid;
                    pos.value = step.new_ratio;
                }
            }
            Err(Error::ToleranceMismatch(_)) if band + 1 < bands.len() => band += 1,
            Err(Error::ToleranceMismatch(_)) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(BMResult {
        value: pos.value,
        converged: certificate.is_some(),
        witness: Witness::Ellipsoid(pos.ellipsoid),
        certificate,
        iterations,
    })
}

// ---------------------------------------------------------------------------
// Planar body-to-body search.

type M2 = [[f64; 2]; 2];

fn det2(t: &M2) -> f64 {
    t[0][0] * t[1][1] - t[0][1] * t[1][0]
}

fn inv2(t: &M2) -> M2 {
    let d = det2(t);
    [[t[1][1] / d, -t[0][1] / d], [-t[1][0] / d, t[0][0] / d]]
}

fn mul2(t: &M2, x: [f64; 2]) -> [f64; 2] {
    [t[0][0] * x[0] + t[0][1] * x[1], t[1][0] * x[0] + t[1][1] * x[1]]
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn to2(p: &Point) -> [f64; 2] {
    [p[0], p[1]]
}

fn to_map(t: &M2) -> LinearMap {
    LinearMap::from_row_slice(2, &[t[0][0], t[0][1], t[1][0], t[1][1]])
}

/// Two planar bodies flattened for fast repeated ratio evaluation.
struct PlanarPair {
    kv: Vec<[f64; 2]>,
    kf: Vec<[f64; 2]>,
    lv: Vec<[f64; 2]>,
    lf: Vec<[f64; 2]>,
}

impl PlanarPair {
    fn new(k: &SymmetricBody, l: &SymmetricBody) -> Self {
        PlanarPair {
            kv: k.vertices().iter().map(to2).collect(),
            kf: k.facets().iter().map(to2).collect(),
            lv: l.vertices().iter().map(to2).collect(),
            lf: l.facets().iter().map(to2).collect(),
        }
    }

    /// (max_w ‖Tw‖_K, max_v ‖T⁻¹v‖_L), whose product is ratio_for_map.
    fn factors(&self, t: &M2) -> (f64, f64) {
        let ti = inv2(t);
        let mut f1: f64 = 0.0;
        for w in &self.lv {
            let tw = mul2(t, *w);
            for a in &self.kf {
                f1 = f1.max(dot2(*a, tw).abs());
            }
        }
        let mut f2: f64 = 0.0;
        for v in &self.kv {
            let tv = mul2(&ti, *v);
            for b in &self.lf {
                f2 = f2.max(dot2(*b, tv).abs());
            }
        }
        (f1, f2)
    }

    fn ratio(&self, t: &M2) -> f64 {
        if det2(t).abs() < 1e-300 {
            return f64::INFINITY;
        }
        let (a, b) = self.factors(t);
        a * b
    }

    /// Sequential linear programming on log f₁ + log f₂ with a box trust
    /// region; converges to the kink at the local minimax point.
    fn polish(&self, t0: &M2) -> (M2, f64, usize) {
        let mut t = normalize_det(t0);
        let mut val = self.ratio(&t);
        let mut rho = 0.05;
        let mut iters = 0;
        for _ in 0..300 {
            iters += 1;
            let scale = t.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
            let ti = inv2(&t);
            let (f1, f2) = self.factors(&t);
            let window = (8.0 * rho * scale * (1.0 + mat_norm(&ti) * scale)).clamp(1e-9, 0.3);
            // Rows: (log value, gradient of log value w.r.t. the 4 entries).
            let mut rows1: Vec<(f64, [f64; 4])> = Vec::new();
            for w in &self.lv {
                let tw = mul2(&t, *w);
                for a in &self.kf {
                    let p = dot2(*a, tw);
                    if p.abs() >= f1 * (1.0 - window) {
                        let s = p.signum() / p.abs();
                        rows1.push((
                            p.abs().ln(),
                            [s * a[0] * w[0], s * a[0] * w[1], s * a[1] * w[0], s * a[1] * w[1]],
                        ));
                    }
                }
            }
            let mut rows2: Vec<(f64, [f64; 4])> = Vec::new();
            for v in &self.kv {
                let tv = mul2(&ti, *v);
                for b in &self.lf {
                    let p = dot2(*b, tv);
                    if p.abs() >= f2 * (1.0 - window) {
                        // d(bᵀT⁻¹v) = −(T⁻ᵀb)ᵀ dT (T⁻¹v)
                        let tb = [
                            ti[0][0] * b[0] + ti[1][0] * b[1],
                            ti[0][1] * b[0] + ti[1][1] * b[1],
                        ];
                        let s = -p.signum() / p.abs();
                        rows2.push((
                            p.abs().ln(),
                            [
                                s * tb[0] * tv[0],
                                s * tb[0] * tv[1],
                                s * tb[1] * tv[0],
                                s * tb[1] * tv[1],
                            ],
                        ));
                    }
                }
            }
            truncate_rows(&mut rows1, 48);
            truncate_rows(&mut rows2, 48);
            // Variables: Δ (4, free), u₁, u₂ (free).
            let mut lp = LinearProgram::minimize(vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
            for j in 0..6 {
                lp.set_free(j);
            }
            for (c, g) in &rows1 {
                lp.constrain(vec![g[0], g[1], g[2], g[3], -1.0, 0.0], Cmp::Le, -c);
            }
            for (c, g) in &rows2 {
                lp.constrain(vec![g[0], g[1], g[2], g[3], 0.0, -1.0], Cmp::Le, -c);
            }
            // tr(T⁻¹Δ) = 0 keeps the determinant fixed to first order.
            lp.constrain(
                vec![ti[0][0], ti[1][0], ti[0][1], ti[1][1], 0.0, 0.0],
                Cmp::Eq,
                0.0,
            );
            for j in 0..4 {
                let mut c = vec![0.0; 6];
                c[j] = 1.0;
                lp.constrain(c.clone(), Cmp::Le, rho * scale);
                lp.constrain(c, Cmp::Ge, -rho * scale);
            }
            let LpOutcome::Optimal { x, objective } = lp.solve(1e-10) else {
                break;
            };
            let current = f1.ln() + f2.ln();
            let predicted = current - objective;
            if !(predicted > 1e-15) {
                if rho * scale < 1e-13 {
                    break;
                }
                rho *= 0.25;
                continue;
            }
            let cand = [[t[0][0] + x[0], t[0][1] + x[1]], [t[1][0] + x[2], t[1][1] + x[3]]];
            if det2(&cand).abs() < 1e-12 * scale * scale {
                rho *= 0.25;
                continue;
            }
            let cand = normalize_det(&cand);
            let cval = self.ratio(&cand);
            let actual = current - cval.ln();
            if actual >= 0.1 * predicted {
                t = cand;
                val = cval;
                if actual >= 0.75 * predicted {
                    rho = (rho * 2.0).min(0.5);
                }
            } else {
                rho *= 0.25;
            }
            if rho < 1e-14 {
                break;
            }
        }
        (t, val, iters)
    }
}

fn truncate_rows(rows: &mut Vec<(f64, [f64; 4])>, keep: usize) {
    if rows.len() > keep {
        rows.sort_by(|a, b| b.0.total_cmp(&a.0));
        rows.truncate(keep);
    }
}

fn mat_norm(t: &M2) -> f64 {
    t.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize_det(t: &M2) -> M2 {
    let s = det2(t).abs().sqrt();
    [[t[0][0] / s, t[0][1] / s], [t[1][0] / s, t[1][1] / s]]
}

/// T = R(θ)·diag(s, 1/s)·Shear(k) for p = (θ, ln s, k).
pub fn planar_chart(p: &[f64]) -> LinearMap {
    to_map(&chart(p))
}

fn chart(p: &[f64]) -> M2 {
    let (sn, cs) = p[0].sin_cos();
    let s = p[1].exp();
    let k = p[2];
    // R · D = [[c s, −sn/s], [sn s, c/s]], then · [[1, k], [0, 1]].
    let rd = [[cs * s, -sn / s], [sn * s, cs / s]];
    [
        [rd[0][0], rd[0][0] * k + rd[0][1]],
        [rd[1][0], rd[1][0] * k + rd[1][1]],
    ]
}

fn require_planar(k: &SymmetricBody) -> Result<()> {
    if k.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: k.dim(),
        });
    }
    Ok(())
}

/// Planar d_BM(K, L) by simplex search over the chart, multi-started from
/// the identity, the 45° rotation and `restarts` random chart points, in
/// both orders of the pair, then polished by sequential linear programming.
pub fn bm_planar(k: &SymmetricBody, l: &SymmetricBody, opts: &SearchOptions) -> Result<BMResult> {
    let mut starts = vec![vec![0.0, 0.0, 0.0], vec![PI / 4.0, 0.0, 0.0]];
    let mut rng = SplitMix64::new(opts.seed);
    for _ in 0..opts.restarts {
        starts.push(vec![
            rng.uniform(0.0, PI),
            rng.uniform(0.25f64.ln(), 4f64.ln()),
            rng.uniform(-3.0, 3.0),
        ]);
    }
    bm_planar_from(k, l, &starts, opts)
}

/// bm_planar restricted to the given chart starting points.
pub fn bm_planar_from(
    k: &SymmetricBody,
    l: &SymmetricBody,
    starts: &[Vec<f64>],
    opts: &SearchOptions,
) -> Result<BMResult> {
    require_planar(k)?;
    require_planar(l)?;
    let pair = PlanarPair::new(k, l);
    // The search is also run on (L, K); a map T' there gives T'⁻¹ here
    // with the same ratio, and the two landscapes have different basins.
    let rev = PlanarPair::new(l, k);
    let mut iterations = 0;
    let mut found: Vec<(M2, f64)> = Vec::new();
    for s in starts {
        let m = nelder_mead(
            |p| pair.ratio(&chart(p)),
            s,
            opts.initial_step,
            opts.max_iterations,
            1e-11,
        );
        iterations += m.evaluations;
        found.push((chart(&m.x), m.value));
        let m = nelder_mead(
            |p| rev.ratio(&chart(p)),
            s,
            opts.initial_step,
            opts.max_iterations,
            1e-11,
        );
        iterations += m.evaluations;
        let t = inv2(&chart(&m.x));
        found.push((t, pair.ratio(&t)));
    }
    found.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut best: Option<(M2, f64)> = None;
    for (t, v) in found.iter().take(3) {
        let (pt, pv, it) = pair.polish(t);
        iterations += it;
        let (t, v) = if pv <= *v { (pt, pv) } else { (*t, *v) };
        best = Some(match best {
            None => (t, v),
            Some(b) => pick(b, (t, v)),
        });
    }
    let (t, value) = best.expect("at least one start");
    Ok(BMResult {
        value,
        witness: Witness::Map(to_map(&t)),
        certificate: None,
        iterations,
        converged: value.is_finite(),
    })
}

/// Lower value wins; near-ties go to the better conditioned map.
fn pick(a: (M2, f64), b: (M2, f64)) -> (M2, f64) {
    if (a.1 - b.1).abs() <= 1e-12 * a.1 {
        if to_map(&b.0).condition_number() < to_map(&a.0).condition_number() {
            b
        } else {
            a
        }
    } else if b.1 < a.1 {
        b
    } else {
        a
    }
}

// ---------------------------------------------------------------------------
// Distance to the parallelogram.

fn det(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn lerp(a: [f64; 2], b: [f64; 2], u: f64) -> [f64; 2] {
    [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])]
}

struct PgramSearch {
    cycle: Vec<[f64; 2]>,
    reps: Vec<[f64; 2]>,
}

impl PgramSearch {
    fn half(&self) -> usize {
        self.reps.len()
    }

    /// Point at global parameter τ ∈ [0, k) along the first half of the cycle.
    fn boundary(&self, tau: f64) -> (usize, f64, [f64; 2]) {
        let k = self.half();
        let tau = tau.rem_euclid(k as f64);
        let i = (tau.floor() as usize).min(k - 1);
        let s = tau - i as f64;
        (i, s, lerp(self.cycle[i], self.cycle[i + 1], s))
    }

    /// max_w (|det(w,p)| + |det(x,w)|)/det(x,p): the factor by which the
    /// parallelogram conv{±x, ±p} must be scaled to cover K.
    fn value(&self, x: [f64; 2], p: [f64; 2]) -> f64 {
        let d = det(x, p);
        if !(d > 0.0) {
            return f64::INFINITY;
        }
        self.reps
            .iter()
            .map(|w| det(*w, p).abs() + det(x, *w).abs())
            .fold(0.0, f64::max)
            / d
    }

    /// Best p on the segment [p0, p1] for fixed x. Each term is a monotone
    /// Möbius function of the segment parameter, so the optimum is where the
    /// envelope of the increasing terms crosses that of the decreasing ones.
    fn on_segment(&self, x: [f64; 2], p0: [f64; 2], p1: [f64; 2]) -> ([f64; 2], f64) {
        let e = [p1[0] - p0[0], p1[1] - p0[1]];
        let d0 = det(x, p0);
        let d1 = det(x, e);
        let eps = 1e-12 * (d0.abs() + d1.abs());
        // Restrict to det(x, p(u)) > eps.
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        if d1.abs() > 0.0 {
            let root = (eps - d0) / d1;
            if d1 > 0.0 {
                lo = lo.max(root);
            } else {
                hi = hi.min(root);
            }
        } else if d0 <= eps {
            return (p0, f64::INFINITY);
        }
        if lo > hi {
            return (p0, f64::INFINITY);
        }
        let mut inc: Vec<(f64, f64)> = Vec::new();
        let mut dec: Vec<(f64, f64)> = Vec::new();
        for w in &self.reps {
            let c = det(x, *w).abs();
            let a = det(*w, p0);
            let b = det(*w, e);
            for (alpha, beta) in [(a + c, b), (-a + c, -b)] {
                if beta * d0 - alpha * d1 >= 0.0 {
                    inc.push((alpha, beta));
                } else {
                    dec.push((alpha, beta));
                }
            }
        }
        let env = |set: &[(f64, f64)], u: f64| {
            let den = d0 + d1 * u;
            set.iter()
                .map(|(a, b)| (a + b * u) / den)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let (mut a, mut b) = (lo, hi);
        for _ in 0..64 {
            let mid = 0.5 * (a + b);
            if env(&inc, mid) < env(&dec, mid) {
                a = mid;
            } else {
                b = mid;
            }
        }
        let mut best = (p0, f64::INFINITY);
        for u in [lo, hi, a, b] {
            let p = lerp(p0, p1, u);
            let v = self.value(x, p);
            if v < best.1 {
                best = (p, v);
            }
        }
        best
    }

    /// min over p of value(x, p). The objective is quasiconvex along the
    /// arc from x to −x, so the best arc vertex brackets the optimum.
    fn inner(&self, tau: f64) -> ([f64; 2], [f64; 2], f64) {
        let k = self.half();
        let (i, s, x) = self.boundary(tau);
        let mut arc: Vec<[f64; 2]> = vec![x];
        for j in 1..=k {
            arc.push(self.cycle[(i + j) % (2 * k)]);
        }
        arc.push([-x[0], -x[1]]);
        if s == 0.0 {
            // x is a vertex, so the last cycle vertex is −x itself.
            arc.pop();
        }
        let last = arc.len() - 1;
        let (mut jbest, mut vbest) = (1, f64::INFINITY);
        for (j, p) in arc.iter().enumerate().take(last).skip(1) {
            let v = self.value(x, *p);
            if v < vbest {
                jbest = j;
                vbest = v;
            }
        }
        let mut best = (arc[jbest], vbest);
        for (a, b) in [(jbest - 1, jbest), (jbest, jbest + 1)] {
            let cand = self.on_segment(x, arc[a], arc[b]);
            if cand.1 < best.1 {
                best = cand;
            }
        }
        (x, best.0, best.1)
    }
}

/// d_BM(K, 𝒫²) over inscribed parallelograms conv{±x, ±p} with x, p on bd K,
/// followed by a local polish of the resulting map.
pub fn bm_to_parallelogram(k: &SymmetricBody) -> Result<BMResult> {
    require_planar(k)?;
    let search = PgramSearch {
        cycle: {
            let mut c: Vec<[f64; 2]> = k.boundary_2d().iter().map(to2).collect();
            c.push(c[0]);
            c
        },
        reps: k.vertices().iter().map(to2).collect(),
    };
    let half = search.half();
    // The profile over τ has several shallow minima per edge.
    let per_edge = (1024 / half).clamp(2, 32);
    let n_samples = half * per_edge;
    let step = 1.0 / per_edge as f64;
    let samples: Vec<f64> = (0..n_samples)
        .map(|j| {
            let tau = j as f64 * step;
            search.inner(tau).2
        })
        .collect();
    let mut iterations = n_samples;
    // A minimum can sit in a dip narrower than the sample spacing, next to a
    // sample that is not itself a local minimum, so each interval adjacent to
    // a near-best sample is refined on its own.
    let mut order: Vec<usize> = (0..n_samples).collect();
    order.sort_by(|a, b| samples[*a].total_cmp(&samples[*b]));
    let floor = samples[order[0]];
    order.retain(|&j| samples[j] <= floor * 1.02);
    order.truncate(12);
    let mut best: (f64, [f64; 2], [f64; 2], f64) = {
        let j = order[0];
        let (x, p, v) = search.inner(j as f64 * step);
        (j as f64 * step, x, p, v)
    };
    for &j in &order {
        let center = j as f64 * step;
        for (lo, hi) in [(center - step, center), (center, center + step)] {
            let (tau, _) = golden(|t| search.inner(t).2, lo, hi, 50);
            iterations += 52;
            let (x, p, v) = search.inner(tau);
            if v < best.3 {
                best = (tau, x, p, v);
            }
        }
    }
    let (_, x, p, v) = best;
    let t0: M2 = [
        [(x[0] + p[0]) / 2.0, (x[0] - p[0]) / 2.0],
        [(x[1] + p[1]) / 2.0, (x[1] - p[1]) / 2.0],
    ];
    let square = fixtures::cube(2);
    let pair = PlanarPair::new(k, &square);
    let (t1, v1, it) = pair.polish(&t0);
    iterations += it;
    let (t, value) = if v1 < v {
        (t1, v1)
    } else {
        (normalize_det(&t0), pair.ratio(&t0))
    };
    Ok(BMResult {
        value,
        witness: Witness::Map(to_map(&t)),
        certificate: None,
        iterations,
        converged: true,
    })
}

/// Map of a BMResult witness, for callers that need the matrix.
pub fn witness_map(r: &BMResult) -> Option<LinearMap> {
    match &r.witness {
        Witness::Map(m) => Some(m.clone()),
        Witness::Ellipsoid(_) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{sqrtn_diagnostics, verify_ader};
    use crate::fixtures::*;
    use approx::assert_relative_eq;

    #[test]
    fn ratio_examples() {
        let sq = cube(2);
        let cr = cross(2);
        assert_relative_eq!(ratio_for_map(&sq, &sq, &LinearMap::identity(2)).unwrap(), 1.0);
        assert_relative_eq!(ratio_for_map(&sq, &cr, &LinearMap::identity(2)).unwrap(), 2.0);
        let r = ratio_for_map(&sq, &cr, &LinearMap::rotation(PI / 4.0)).unwrap();
        assert_relative_eq!(r, 1.0, epsilon = 1e-12);
        assert!(ratio_for_map(&sq, &cr, &LinearMap::from_row_slice(2, &[1.0, 1.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn ball_square_and_cubes() {
        let opts = SearchOptions::default();
        let r = bm_to_ball(&cube(2), &opts).unwrap();
        assert!((r.value - 2f64.sqrt()).abs() < 1e-6, "{}", r.value);
        let c = r.certificate.expect("certificate");
        assert_eq!((c.outer.len(), c.inner.len()), (2, 2));
        assert!(verify_ader(&c, 1e-8).pass);
        for body in [cube(3), cross(3)] {
            let r = bm_to_ball(&body, &opts).unwrap();
            assert!((r.value - 3f64.sqrt()).abs() < 1e-6, "{}", r.value);
            let d = sqrtn_diagnostics(&r.certificate.expect("certificate"));
            assert!(d.distance_from_identity < 1e-8);
            assert!(d.inner_product_deviation < 1e-8);
        }
    }

    #[test]
    fn ball_hexagon_and_l4() {
        let opts = SearchOptions::default();
        let r = bm_to_ball(&regular_polygon(6), &opts).unwrap();
        assert_relative_eq!(r.value, 2.0 / 3f64.sqrt(), epsilon = 1e-8);
        assert!(r.converged);
        let r = bm_to_ball(&lp_ball(4.0, 512), &SearchOptions { restarts: 0, ..opts }).unwrap();
        assert!((r.value - 2f64.powf(0.25)).abs() < 1e-3, "{}", r.value);
    }

    #[test]
    fn planar_examples() {
        let opts = SearchOptions::default();
        let r = bm_planar(&cube(2), &regular_polygon(6), &opts).unwrap();
        assert!((r.value - 1.5).abs() < 1e-4, "{}", r.value);
        let r = bm_planar(&cube(2), &disk(256), &opts).unwrap();
        assert!((r.value - 2f64.sqrt()).abs() < 1e-4, "{}", r.value);
        let h = regular_polygon(6);
        let r = bm_planar(&h, &h, &opts).unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn parallelogram_examples() {
        assert_relative_eq!(bm_to_parallelogram(&cube(2)).unwrap().value, 1.0, epsilon = 1e-12);
        let r = bm_to_parallelogram(&regular_polygon(8)).unwrap();
        assert!((r.value - 2f64.sqrt()).abs() < 1e-6, "{}", r.value);
        let r = bm_to_parallelogram(&regular_polygon(6)).unwrap();
        assert!((r.value - 1.5).abs() < 1e-4, "{}", r.value);
        let l4 = lp_ball(4.0, 512);
        let r = bm_to_parallelogram(&l4).unwrap();
        assert!((r.value - 2f64.powf(0.25)).abs() < 1e-3, "{}", r.value);
        let m = witness_map(&r).unwrap();
        assert_relative_eq!(ratio_for_map(&l4, &cube(2), &m).unwrap(), r.value, epsilon = 1e-9);
    }
}
