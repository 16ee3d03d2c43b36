//! Stability of the parallelogram among planar bodies far from the disk:
//! the polynomial inequality behind it, the constructive bound, and the
//! two-ball cover of the planar Banach-Mazur compactum.

use std::f64::consts::{FRAC_PI_4, SQRT_2};

use nalgebra::DMatrix;

use crate::body::{point, LinearMap, Point, SymmetricBody};
use crate::distance::{bm_to_ball, bm_to_parallelogram};
use crate::ellipsoid::{john, DEFAULT_EPS};
use crate::error::{Error, Result};
use crate::exact::{poly_positive_on, rational, ExactNumber, ExactPolynomial, Positivity};
use crate::par;
use crate::rng::{random_polygon, SplitMix64};
use crate::search::SearchOptions;

/// Linear stability constant: d(K, 𝒫²) < 1 + C·(√2 − d(K, 𝔹²)).
pub const STABILITY_CONSTANT: f64 = 5.0 * SQRT_2;

/// Covering radius 11√2/(10 + √2) around 𝔹² and 𝒫².
pub fn cover_radius() -> f64 {
    11.0 * SQRT_2 / (10.0 + SQRT_2)
}

/// Slack allowed on the inequalities checked against computed distances.
pub const STABILITY_TOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityScalars {
    pub r: f64,
    pub x: f64,
    pub y: f64,
    pub s: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// x(r), y(r), s(r) and both sides of the inequality lhs < 1 + 10(1 − r),
/// for r ∈ [0.95, 1]; r = 1 is the square's limit case.
pub fn stability_scalars(r: f64) -> Result<StabilityScalars> {
    if !(0.95..=1.0).contains(&r) {
        return Err(Error::Precondition(format!("r = {r} outside [0.95, 1]")));
    }
    let r2 = r * r;
    let r4 = r2 * r2;
    let r6 = r4 * r2;
    let den = r6 + r2 - 1.0;
    let x = SQRT_2 * (2.0 * r6 - 1.0) / (r * den);
    let y = SQRT_2 * r * (1.0 - r4) / den;
    let n2 = x * x + y * y;
    let s = n2 / (x + y * (n2 - 1.0).sqrt());
    Ok(StabilityScalars {
        r,
        x,
        y,
        s,
        lhs: SQRT_2 / r / s,
        rhs: 1.0 + 10.0 * (1.0 - r),
    })
}

/// The polynomials f and g of the factorization.
pub fn lemma_polynomials() -> (ExactPolynomial, ExactPolynomial) {
    let f = ExactPolynomial::from_ints(&[50, 0, 9, 8, 68, 18, -190, 12, -128, -28, -29, -30, 250]);
    let g = ExactPolynomial::from_ints(&[1, 0, 0, 0, 1, 0, -4, 0, -2, 0, 0, 0, 5]);
    (f, g)
}

#[derive(Clone, Debug)]
pub struct FactorizationReport {
    /// Squared difference of both sides with the radical isolated.
    pub expression: ExactPolynomial,
    /// 2(r − 1)² f g.
    pub product: ExactPolynomial,
    pub difference: ExactPolynomial,
    pub holds: bool,
}

/// Expands ((1 + 10(1−r))(A² + r⁴C²) − AB)² − r²C²(2A² + 2r⁴C² − r²B²) with
/// A = 2r⁶ − 1, B = r⁶ + r² − 1, C = 1 − r⁴ and compares it with 2(r−1)²fg.
pub fn verify_factorization() -> FactorizationReport {
    let p = ExactPolynomial::from_ints;
    let r = ExactPolynomial::var();
    let a = p(&[-1, 0, 0, 0, 0, 0, 2]);
    let b = p(&[-1, 0, 1, 0, 0, 0, 1]);
    let c = p(&[1, 0, 0, 0, -1]);
    let r2 = r.pow(2);
    let r4 = r.pow(4);
    let factor = p(&[11, -10]);
    let a2 = a.pow(2);
    let c2 = c.pow(2);
    let rhs = &(&factor * &(&a2 + &(&r4 * &c2))) - &(&a * &b);
    let radicand = &(&a2 + &(&r4 * &c2)).scale(&ExactNumber::from_int(2)) - &(&r2 * &b.pow(2));
    let expression = &rhs.pow(2) - &(&(&r2 * &c2) * &radicand);
    let (f, g) = lemma_polynomials();
    let product = &(&p(&[-1, 1]).pow(2).scale(&ExactNumber::from_int(2)) * &f) * &g;
    let difference = &expression - &product;
    FactorizationReport {
        holds: difference.is_zero(),
        expression,
        product,
        difference,
    }
}

/// The by-hand positivity argument for f and g, step by step, in exact
/// rational arithmetic.
#[derive(Clone, Debug)]
pub struct HandArgument {
    pub g_095: f64,
    pub f_096: f64,
    pub fprime_095: f64,
    pub fprime_096: f64,
    /// 15·0.95⁸ − 4 − 6 + 1, a lower bound of the bracket in g′ on [0.95, 1].
    pub g_bracket_bound: f64,
    /// Monomial-wise lower bound of f″ on [0.95, 1].
    pub fsecond_lower: f64,
    /// g′ and f′, f″ agree with their printed forms.
    pub derivatives_match: bool,
    pub g_095_gt_02: bool,
    pub f_096_gt_1: bool,
    pub fprime_bound_lt_36: bool,
    pub g_bracket_gt_09: bool,
    pub fsecond_gt_400: bool,
    pub fprime_096_positive: bool,
    pub pass: bool,
}

pub fn hand_argument() -> HandArgument {
    let (f, g) = lemma_polynomials();
    let at095 = rational(95, 100);
    let at096 = rational(96, 100);
    let one = rational(1, 1);
    let fp = f.derivative();
    let fpp = fp.derivative();
    let gp = g.derivative();
    let p = ExactPolynomial::from_ints;
    let printed_gp = &p(&[0, 0, 0, 4]) * &p(&[1, 0, -6, 0, -4, 0, 0, 0, 15]);
    let printed_fp = &p(&[0, 2]) * &p(&[9, 12, 136, 45, -570, 42, -512, -126, -145, -165, 1500]);
    let printed_fpp =
        p(&[9, 24, 408, 180, -2850, 252, -3584, -1008, -1305, -1650, 16500]).scale(&ExactNumber::from_int(2));
    let derivatives_match = gp == printed_gp && fp == printed_fp && fpp == printed_fpp;

    let g095 = g.eval_rational(&at095);
    let f096 = f.eval_rational(&at096);
    let fp095 = fp.eval_rational(&at095);
    let fp096 = fp.eval_rational(&at096);
    let bracket = {
        let x = ExactNumber::from_rational(at095.clone()).pow(8);
        &(&x * &ExactNumber::from_int(15)) - &ExactNumber::from_int(9)
    };
    let (fpp_low, _) = fpp.range_bounds(&at095, &one);
    let c = |n: i64, d: i64| ExactNumber::ratio(n, d);
    let h = HandArgument {
        g_095: g095.to_f64(),
        f_096: f096.to_f64(),
        fprime_095: fp095.to_f64(),
        fprime_096: fp096.to_f64(),
        g_bracket_bound: bracket.to_f64(),
        fsecond_lower: fpp_low.to_f64(),
        derivatives_match,
        g_095_gt_02: g095 > c(1, 5),
        f_096_gt_1: f096 > c(1, 1),
        fprime_bound_lt_36: fp095.abs().max(fp096.abs()) < c(36, 1),
        g_bracket_gt_09: bracket > c(9, 10),
        fsecond_gt_400: fpp_low > c(400, 1),
        fprime_096_positive: fp096.is_positive(),
        pass: false,
    };
    HandArgument {
        pass: h.derivatives_match
            && h.g_095_gt_02
            && h.f_096_gt_1
            && h.fprime_bound_lt_36
            && h.g_bracket_gt_09
            && h.fsecond_gt_400
            && h.fprime_096_positive,
        ..h
    }
}

/// Machine positivity certificates for f and g on [0.95, 1].
pub fn verify_positivity() -> (Positivity, Positivity) {
    let (f, g) = lemma_polynomials();
    let lo = rational(95, 100);
    let hi = rational(1, 1);
    (poly_positive_on(&f, &lo, &hi), poly_positive_on(&g, &lo, &hi))
}

// ---------------------------------------------------------------------------
// The two-variable inequality used for 1-symmetric bodies.

fn lemma41_xmax(y: f64) -> f64 {
    (y * (SQRT_2 - 1.0) / (1.0 - y * (2.0 - SQRT_2))).min(1.0 / SQRT_2)
}

pub fn lemma41_admissible(x: f64, y: f64) -> bool {
    let eps = 1e-15;
    (0.5 - eps..=1.0 / SQRT_2 + eps).contains(&x)
        && (1.0 / SQRT_2 - eps..=1.0 + eps).contains(&y)
        && x <= y * (SQRT_2 - 1.0) / (1.0 - y * (2.0 - SQRT_2)) + eps
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lemma41Report {
    pub x: f64,
    pub y: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    pub equality: bool,
}

/// √2y(2x−1)(1−x)/(x + y − 2xy) ≤ √2x + y − √2 on the admissible region.
pub fn lemma41_check(x: f64, y: f64) -> Result<Lemma41Report> {
    if !lemma41_admissible(x, y) {
        return Err(Error::Precondition(format!("({x}, {y}) is not admissible")));
    }
    let lhs = SQRT_2 * y * (2.0 * x - 1.0) * (1.0 - x) / (x + y - 2.0 * x * y);
    let rhs = SQRT_2 * x + y - SQRT_2;
    let slack = rhs - lhs;
    Ok(Lemma41Report {
        x,
        y,
        lhs,
        rhs,
        slack,
        holds: slack >= -1e-12,
        equality: slack.abs() <= 1e-12,
    })
}

/// (√2x + y − √2)(x + y − 2xy) − √2y(2x − 1)(1 − x), exactly; its sign is
/// the sign of the slack.
pub fn lemma41_exact(x: &ExactNumber, y: &ExactNumber) -> ExactNumber {
    let s = ExactNumber::sqrt2();
    let one = ExactNumber::one();
    let two = ExactNumber::from_int(2);
    let rhs = &(&(&s * x) + y) - &s;
    let den = &(x + y) - &(&two * &(x * y));
    let lhs = &(&(&s * y) * &(&(&two * x) - &one)) * &(&one - x);
    &(&rhs * &den) - &lhs
}

/// The two points where the inequality is tight.
pub fn lemma41_equality_points() -> [(f64, f64); 2] {
    [(0.5, 1.0 / SQRT_2), (1.0 / SQRT_2, 1.0)]
}

#[derive(Clone, Debug)]
pub struct Lemma41Sweep {
    pub points: usize,
    pub violations: usize,
    pub min_slack: f64,
    /// Points flagged as equality cases.
    pub equality_points: Vec<(f64, f64)>,
    /// Equality cases away from the two known points.
    pub unexpected_equalities: usize,
}

/// Random admissible points plus a grid over the region (its corners
/// included).
pub fn lemma41_sweep(random: usize, grid: usize, seed: u64) -> Lemma41Sweep {
    let chunk = 10_000;
    let chunks = random.div_ceil(chunk);
    let sample = |i: usize| -> Vec<(f64, f64)> {
        let mut rng = SplitMix64::for_trial(seed, i as u64);
        let n = chunk.min(random - i * chunk);
        (0..n)
            .map(|_| {
                let y = rng.uniform(1.0 / SQRT_2, 1.0);
                let x = rng.uniform(0.5, lemma41_xmax(y));
                (x, y)
            })
            .collect()
    };
    let mut pts: Vec<(f64, f64)> = par::map(chunks, sample).into_iter().flatten().collect();
    if grid >= 2 {
        for i in 0..grid {
            let y = 1.0 / SQRT_2 + (1.0 - 1.0 / SQRT_2) * i as f64 / (grid - 1) as f64;
            let y = if i == grid - 1 { 1.0 } else { y };
            let xm = lemma41_xmax(y);
            for j in 0..grid {
                let x = if j == grid - 1 {
                    xm
                } else {
                    0.5 + (xm - 0.5) * j as f64 / (grid - 1) as f64
                };
                pts.push((x, y));
            }
        }
    }
    let known = lemma41_equality_points();
    let reports: Vec<Lemma41Report> = pts
        .iter()
        .filter_map(|(x, y)| lemma41_check(*x, *y).ok())
        .collect();
    let mut out = Lemma41Sweep {
        points: reports.len(),
        violations: 0,
        min_slack: f64::INFINITY,
        equality_points: Vec::new(),
        unexpected_equalities: 0,
    };
    for r in &reports {
        out.min_slack = out.min_slack.min(r.slack);
        if !r.holds {
            out.violations += 1;
        }
        if r.equality {
            out.equality_points.push((r.x, r.y));
            if !known.iter().any(|(a, b)| (r.x - a).hypot(r.y - b) < 1e-6) {
                out.unexpected_equalities += 1;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// The orthogonal-frame bound in John position.

/// K mapped so that its John ellipse is 𝔹², with the map used.
pub fn john_position(k: &SymmetricBody) -> Result<(SymmetricBody, LinearMap)> {
    let t = john(k, DEFAULT_EPS)?.normalizing_map();
    Ok((k.apply_map(&t)?, t))
}

#[derive(Clone, Debug)]
pub struct OrthReport {
    pub norm_v: f64,
    pub bound: f64,
    /// max over K of |⟨x, e¹⟩| and |⟨x, e²⟩|.
    pub max_abs: [f64; 2],
    pub slack: f64,
    pub pass: bool,
}

/// Unit vectors e¹, e² at ∓45° from v, so ⟨v, eⁱ⟩ = ‖v‖/√2.
pub fn orth_frame(v: &Point) -> [Point; 2] {
    let u = v / v.norm();
    [
        LinearMap::rotation(-FRAC_PI_4).apply(&u),
        LinearMap::rotation(FRAC_PI_4).apply(&u),
    ]
}

/// Checks |⟨x, eⁱ⟩| ≤ √2/‖v‖ over the vertices of K, for K in John position.
pub fn lemma_orth_check(k: &SymmetricBody, v: &Point, tol: f64) -> Result<OrthReport> {
    if k.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: k.dim(),
        });
    }
    let q = john(k, DEFAULT_EPS)?;
    if (q.q() - DMatrix::identity(2, 2)).norm() > 1e-6 {
        return Err(Error::Precondition("John ellipse is not the unit disk".into()));
    }
    if v.norm() == 0.0 || k.gauge(v)? > 1.0 + tol {
        return Err(Error::NotInBody);
    }
    let e = orth_frame(v);
    let max_abs = [0, 1].map(|i| {
        k.vertices()
            .iter()
            .map(|x| x.dot(&e[i]).abs())
            .fold(0.0, f64::max)
    });
    let bound = SQRT_2 / v.norm();
    let slack = bound - max_abs[0].max(max_abs[1]);
    Ok(OrthReport {
        norm_v: v.norm(),
        bound,
        max_abs,
        slack,
        pass: slack >= -tol,
    })
}

// ---------------------------------------------------------------------------
// Pipeline.

/// Replay of the constructive bound: in John position with v of norm r√2
/// turned to (0, r√2), K ⊆ (√2/r)𝒞² and s(r)𝒞² ⊆ K.
#[derive(Clone, Debug)]
pub struct ProofReplay {
    pub scalars: StabilityScalars,
    pub v_in_k: bool,
    pub cross_ok: bool,
    /// Largest first coordinate over K, which must reach x(r).
    pub w_max: f64,
    pub w_ok: bool,
    pub s_point_ok: bool,
    /// (√2/r)/s(r), an upper bound for d(K, 𝒫²).
    pub realized: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct StabilityRecord {
    pub id: String,
    pub epsilon: f64,
    pub dist_ball: f64,
    pub dist_pgram: f64,
    pub bound: f64,
    /// √2/dist_ball, a lower bound for d(K, 𝒫²).
    pub floor: f64,
    pub slack: f64,
    pub pass: bool,
    pub floor_ok: bool,
    pub converged: bool,
    pub replay: Option<ProofReplay>,
}

fn replay(k: &SymmetricBody, dist_ball: f64, dist_pgram: f64) -> Result<ProofReplay> {
    let tol = 1e-6;
    let r = (dist_ball / SQRT_2).min(1.0);
    let sc = stability_scalars(r)?;
    let (kj, _) = john_position(k)?;
    let far = kj
        .vertices()
        .iter()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("vertices")
        .clone();
    let v = &far * (r * SQRT_2 / far.norm());
    let v_in_k = kj.gauge_unchecked(&v) <= 1.0 + tol;
    // Turn v onto the positive second axis.
    let theta = std::f64::consts::FRAC_PI_2 - v[1].atan2(v[0]);
    let kr = kj.apply_map(&LinearMap::rotation(theta))?;
    let cross = kr
        .vertices()
        .iter()
        .map(|x| x[0].abs() + x[1].abs())
        .fold(0.0, f64::max);
    let cross_ok = cross <= SQRT_2 / r + tol;
    let w_max = kr.vertices().iter().map(|x| x[0].abs()).fold(0.0, f64::max);
    let w_ok = w_max >= sc.x - tol;
    let s_point_ok = kr.gauge_unchecked(&point(&[sc.s, 0.0])) <= 1.0 + tol;
    let realized = sc.lhs;
    Ok(ProofReplay {
        pass: v_in_k
            && cross_ok
            && w_ok
            && s_point_ok
            && sc.lhs < sc.rhs
            && dist_pgram <= realized + STABILITY_TOL,
        scalars: sc,
        v_in_k,
        cross_ok,
        w_max,
        w_ok,
        s_point_ok,
        realized,
    })
}

/// Search options used by the sweeps: the distance-to-ball program is
/// convex, so a single start suffices.
pub fn sweep_options(seed: u64) -> SearchOptions {
    SearchOptions {
        restarts: 0,
        seed,
        ..SearchOptions::default()
    }
}

pub fn stability_pipeline(k: &SymmetricBody, opts: &SearchOptions) -> Result<StabilityRecord> {
    if k.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: k.dim(),
        });
    }
    let ball = bm_to_ball(k, opts)?;
    let pgram = bm_to_parallelogram(k)?;
    let epsilon = SQRT_2 - ball.value;
    let bound = 1.0 + STABILITY_CONSTANT * epsilon;
    let floor = SQRT_2 / ball.value;
    let replay = if epsilon <= SQRT_2 / 20.0 {
        Some(replay(k, ball.value, pgram.value)?)
    } else {
        None
    };
    let pass = pgram.value < bound + STABILITY_TOL && replay.as_ref().is_none_or(|r| r.pass);
    Ok(StabilityRecord {
        id: k.label.clone(),
        epsilon,
        dist_ball: ball.value,
        dist_pgram: pgram.value,
        bound,
        floor,
        slack: bound - pgram.value,
        pass,
        floor_ok: pgram.value >= floor - STABILITY_TOL,
        converged: ball.converged,
        replay,
    })
}

/// The body used for trial `index` of a seeded sweep.
pub fn trial_body(seed: u64, index: usize) -> SymmetricBody {
    let mut rng = SplitMix64::for_trial(seed, index as u64);
    random_polygon(&mut rng)
        .expect("random polygon spans the plane")
        .with_label(format!("trial-{index}"))
}

/// Pipeline over `trials` random polygons, ordered by trial index.
pub fn stability_scan(trials: usize, seed: u64) -> Vec<Result<StabilityRecord>> {
    par::map(trials, |i| {
        stability_pipeline(&trial_body(seed, i), &sweep_options(seed))
    })
}

#[derive(Clone, Debug)]
pub struct CoverRow {
    pub id: String,
    pub dist_ball: f64,
    pub dist_pgram: f64,
    pub min: f64,
}

#[derive(Clone, Debug)]
pub struct CoverReport {
    pub trials: usize,
    pub radius: f64,
    pub max_min: f64,
    pub argmax: usize,
    pub violations: usize,
    pub rows: Vec<CoverRow>,
}

pub fn cover_row(k: &SymmetricBody, opts: &SearchOptions) -> Result<CoverRow> {
    let b = bm_to_ball(k, opts)?.value;
    let p = bm_to_parallelogram(k)?.value;
    Ok(CoverRow {
        id: k.label.clone(),
        dist_ball: b,
        dist_pgram: p,
        min: b.min(p),
    })
}

pub fn cover_experiment(trials: usize, seed: u64) -> Result<CoverReport> {
    if trials == 0 {
        return Err(Error::Precondition("trials must be positive".into()));
    }
    let rows: Vec<CoverRow> = par::map(trials, |i| cover_row(&trial_body(seed, i), &sweep_options(seed)))
        .into_iter()
        .collect::<Result<_>>()?;
    let radius = cover_radius();
    let (argmax, max_min) =
        rows.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |b, (i, r)| if r.min > b.1 { (i, r.min) } else { b },
        );
    Ok(CoverReport {
        trials,
        radius,
        max_min,
        argmax,
        violations: rows.iter().filter(|r| r.min >= radius).count(),
        rows,
    })
}
