//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//! Run with `cargo test --release --test acceptance`.

use std::f64::consts::{FRAC_PI_4, SQRT_2};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use bmlab_core::decomposition::{find_ader, sqrtn_diagnostics, verify_ader, AderDecomposition, AderOutcome};
use bmlab_core::distance::{ball_position_from, bm_to_ball, bm_to_parallelogram, random_spd, BALL_GAP};
use bmlab_core::ellipsoid::{mean_ellipsoid_check, Ellipsoid};
use bmlab_core::fixtures::{
    catalog, cross, cube, example4, fixture, lp_ball, pointed_prism, regular_polygon,
};
use bmlab_core::onesym::{
    equality_condition_check, is_one_symmetric, one_sym_pair_distance, random_octagonal, random_one_symmetric,
};
use bmlab_core::rng::{random_map, random_map_2d, random_polygon, SplitMix64};
use bmlab_core::search::SearchOptions;
use bmlab_core::stability::{
    cover_experiment, hand_argument, john_position, lemma41_sweep, lemma_orth_check, stability_scan,
    verify_factorization, verify_positivity, STABILITY_TOL,
};
use bmlab_core::{LinearMap, Point, SymmetricBody};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Certificates produced along the way, for the trace and support checks.
#[derive(Default)]
struct Certificates(Vec<(String, AderDecomposition)>);

impl Certificates {
    fn push(&mut self, label: &str, d: &AderDecomposition) {
        self.0.push((label.to_string(), d.clone()));
    }
}

fn opts() -> SearchOptions {
    SearchOptions {
        seed: SEED,
        ..SearchOptions::default()
    }
}

fn criterion1(certs: &mut Certificates) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for (k, target, pairs) in [
        (cube(2), SQRT_2, Some((2, 2))),
        (cube(3), 3f64.sqrt(), None),
        (cross(3), 3f64.sqrt(), None),
    ] {
        let t = Instant::now();
        let r = match bm_to_ball(&k, &opts()) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("{}: {e}", k.label)),
        };
        let elapsed = t.elapsed();
        let Some(d) = r.certificate.as_ref() else {
            return outcome(false, format!("{}: no certificate", k.label));
        };
        certs.push(&k.label, d);
        let v = verify_ader(d, 1e-8);
        let diag = sqrtn_diagnostics(d);
        let mut ok = (r.value - target).abs() <= 1e-6 && v.pass && elapsed < Duration::from_secs(10);
        if let Some((n, m)) = pairs {
            ok &= d.outer.len() == n && d.inner.len() == m;
        }
        if k.dim() == 3 {
            ok &= diag.distance_from_identity <= 1e-8 && diag.inner_product_deviation <= 1e-8;
        }
        pass &= ok;
        notes.push(format!(
            "{} {:.9} N={} M={} |A-I/n|={:.1e} dev={:.1e} {:.2}s",
            k.label,
            r.value,
            d.outer.len(),
            d.inner.len(),
            diag.distance_from_identity,
            diag.inner_product_deviation,
            elapsed.as_secs_f64()
        ));
    }
    outcome(pass, notes.join("; "))
}

fn criterion2(certs: &mut Certificates) -> Outcome {
    let t = Instant::now();
    let k = fixture("truncated-cube4").expect("fixture").body;
    let (r, big_r) = k.in_circum();
    let d = match find_ader(&k, 1.0, 2.0, &Default::default()) {
        Ok(AderOutcome::Decomposition(d)) => d,
        Ok(AderOutcome::Separation(c)) => return outcome(false, format!("separated, margin {}", c.margin)),
        Err(e) => return outcome(false, e.to_string()),
    };
    certs.push("truncated-cube4", &d);
    let cut_absent = d
        .outer
        .iter()
        .all(|(y, _)| !(y.iter().all(|c| *c > 0.0) || y.iter().all(|c| *c < 0.0)));
    let ball = bm_to_ball(&k, &opts());
    let value = ball.as_ref().map(|b| b.value).unwrap_or(f64::NAN);
    if let Ok(Some(c)) = ball.as_ref().map(|b| b.certificate.as_ref()) {
        certs.push("truncated-cube4 (bm_to_ball)", c);
    }
    let elapsed = t.elapsed();
    let pass = (r - 1.0).abs() < 1e-12
        && (big_r - 2.0).abs() < 1e-12
        && verify_ader(&d, 1e-8).pass
        && (d.ratio() - 2.0).abs() <= 1e-4
        && (value - 2.0).abs() <= 1e-4
        && cut_absent
        && elapsed < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "r={r} R={big_r} N={} M={} cut pair absent={cut_absent} bm_to_ball={value:.9} {:.2}s",
            d.outer.len(),
            d.inner.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion3(certs: &mut Certificates) -> Outcome {
    // Add certificates from the remaining fixtures and random bodies.
    for f in catalog() {
        if let Ok(r) = bm_to_ball(&f.body, &opts()) {
            if let Some(d) = &r.certificate {
                certs.push(f.name, d);
            }
        }
    }
    let mut rng = SplitMix64::new(SEED ^ 3);
    for i in 0..100 {
        let k = random_polygon(&mut rng).expect("random polygon");
        if let Ok(r) = bm_to_ball(&k, &opts()) {
            if let Some(d) = &r.certificate {
                certs.push(&format!("random-{i}"), d);
            }
        }
    }
    for (i, k) in [cube(3), cross(3), pointed_prism()].iter().enumerate() {
        for j in 0..5 {
            let t = LinearMap::new(random_map(&mut rng, 3));
            if let Ok(r) = bm_to_ball(&k.apply_map(&t).expect("invertible"), &opts()) {
                if let Some(d) = &r.certificate {
                    certs.push(&format!("3d-{i}-{j}"), d);
                }
            }
        }
    }
    let mut worst_trace: f64 = 0.0;
    let mut bad = Vec::new();
    for (label, d) in &certs.0 {
        let trace = d.trace_defect();
        worst_trace = worst_trace.max(trace);
        if trace > 1e-8 || d.support_size() > d.support_bound() {
            bad.push(label.clone());
        }
    }
    outcome(
        bad.is_empty() && !certs.0.is_empty(),
        format!(
            "{} certificates, max trace defect {worst_trace:.1e}, failures {bad:?}",
            certs.0.len()
        ),
    )
}

fn criterion4() -> Outcome {
    let t = Instant::now();
    let fact = verify_factorization();
    let (pf, pg) = verify_positivity();
    let hand = hand_argument();
    let elapsed = t.elapsed();
    let pass = fact.holds
        && pf.is_certified()
        && pg.is_certified()
        && hand.g_095_gt_02
        && hand.f_096_gt_1
        && hand.fprime_bound_lt_36
        && elapsed < Duration::from_secs(5);
    outcome(
        pass,
        format!(
            "difference zero={} f>0: {:?} g>0: {:?} g(0.95)={:.4} f(0.96)={:.4} max|f'|={:.3} {:.2}s",
            fact.holds,
            pf,
            pg,
            hand.g_095,
            hand.f_096,
            hand.fprime_095.abs().max(hand.fprime_096.abs()),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion5() -> Outcome {
    let t = Instant::now();
    let records = stability_scan(1000, SEED);
    let errors = records.iter().filter(|r| r.is_err()).count();
    let ok: Vec<_> = records.into_iter().filter_map(|r| r.ok()).collect();
    let bound_fail = ok.iter().filter(|r| !r.pass).count();
    let floor_fail = ok.iter().filter(|r| !r.floor_ok).count();
    let min_slack = ok.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
    let replays = ok.iter().filter(|r| r.replay.is_some()).count();
    let elapsed = t.elapsed();
    outcome(
        errors == 0 && bound_fail == 0 && floor_fail == 0 && elapsed < Duration::from_secs(15 * 60),
        format!(
            "1000 bodies: errors={errors} bound failures={bound_fail} floor failures={floor_fail} \
             min slack={min_slack:.2e} (tol {STABILITY_TOL:e}) proof replays={replays} {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion6() -> Outcome {
    let t = Instant::now();
    let rep = match cover_experiment(10_000, SEED) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let l4 = lp_ball(4.0, 512);
    let target = 2f64.powf(0.25);
    let b = bm_to_ball(&l4, &opts()).map(|r| r.value).unwrap_or(f64::NAN);
    let p = bm_to_parallelogram(&l4).map(|r| r.value).unwrap_or(f64::NAN);
    let elapsed = t.elapsed();
    let pass = rep.max_min < 1.363
        && (b - target).abs() <= 1e-3
        && (p - target).abs() <= 1e-3
        && elapsed < Duration::from_secs(30 * 60);
    outcome(
        pass,
        format!(
            "10^4 bodies: max min-distance={:.6} at {} (< 1.363); l4: ball={b:.6} square={p:.6} target={target:.6} {:.1}s",
            rep.max_min,
            rep.rows[rep.argmax].id,
            elapsed.as_secs_f64()
        ),
    )
}

fn invariant45(k: &SymmetricBody) -> bool {
    let r = k.apply_map(&LinearMap::rotation(FRAC_PI_4)).expect("rotation");
    r.vertices().len() == k.vertices().len()
        && r.vertices().iter().all(|v| {
            k.vertices()
                .iter()
                .any(|w| (v - w).norm() < 1e-9 || (v + w).norm() < 1e-9)
        })
}

fn criterion7() -> Outcome {
    let t = Instant::now();
    let o = opts();
    let pair_max = (0..500)
        .map(|i| {
            let mut rng = SplitMix64::for_trial(SEED, i);
            let k = random_one_symmetric(&mut rng);
            let l = random_one_symmetric(&mut rng);
            one_sym_pair_distance(&k, &l, &o)
                .map(|r| r.value)
                .unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max);
    let oct = one_sym_pair_distance(&regular_polygon(8), &cube(2), &o)
        .map(|r| r.value)
        .unwrap_or(f64::NAN);

    // Condition holds: 45°-invariant bodies.
    let mut rng = SplitMix64::new(SEED ^ 7);
    let mut holds_dev: f64 = 0.0;
    let mut holds_ok = true;
    for _ in 0..50 {
        let k = random_octagonal(&mut rng);
        let rep = equality_condition_check(&k, 8, 1e-9).expect("1-symmetric");
        let d = bm_to_parallelogram(&k).map(|r| r.value).unwrap_or(f64::NAN);
        holds_ok &= rep.condition_holds;
        holds_dev = holds_dev.max((d - SQRT_2).abs());
    }
    // Strong failure: margin below −0.01.
    let mut fails = 0;
    let mut fail_max: f64 = 0.0;
    let mut drawn = 0;
    while fails < 50 && drawn < 10_000 {
        drawn += 1;
        let k = random_one_symmetric(&mut rng);
        let rep = equality_condition_check(&k, 8, 1e-9).expect("1-symmetric");
        if rep.worst_margin < -0.01 {
            fails += 1;
            fail_max = fail_max.max(bm_to_parallelogram(&k).map(|r| r.value).unwrap_or(f64::INFINITY));
        }
    }
    let ex = example4();
    let ex_rep = equality_condition_check(&ex, 8, 1e-9).expect("1-symmetric");
    let ex_ok = is_one_symmetric(&ex, 1e-9) && ex_rep.condition_holds && !invariant45(&ex);
    let pass = pair_max <= SQRT_2 + 1e-5
        && (oct - SQRT_2).abs() <= 1e-5
        && holds_ok
        && holds_dev <= 1e-5
        && fails == 50
        && fail_max < SQRT_2 - 1e-5
        && ex_ok;
    outcome(
        pass,
        format!(
            "500 pairs max={pair_max:.7}; octagon/square={oct:.9}; condition family dev={holds_dev:.1e}; \
             failing family ({fails}) max={fail_max:.5}; example4 condition={} 45-invariant={} {:.1}s",
            ex_rep.condition_holds,
            invariant45(&ex),
            t.elapsed().as_secs_f64()
        ),
    )
}

fn same_vertices(a: &SymmetricBody, b: &SymmetricBody, tol: f64) -> bool {
    a.vertices().len() == b.vertices().len()
        && a.vertices().iter().all(|v| {
            b.vertices()
                .iter()
                .any(|w| (v - w).norm() <= tol || (v + w).norm() <= tol)
        })
}

fn random_unit(rng: &mut SplitMix64, n: usize) -> Point {
    loop {
        let x = Point::from_fn(n, |_, _| rng.normal());
        if x.norm() > 1e-3 {
            return &x / x.norm();
        }
    }
}

/// Planar K between 𝔹² and E₁ and inside d𝔹², dE₁: facets with support
/// max(h_𝔹², h_E₁) in random directions, d from the vertices.
fn mean_instance(rng: &mut SplitMix64) -> (SymmetricBody, Ellipsoid, f64) {
    let theta = rng.uniform(0.0, std::f64::consts::PI);
    let rot = LinearMap::rotation(theta);
    let unit_axis = rng.next_f64() < 0.5;
    let a1 = if unit_axis { 1.0 } else { rng.log_uniform(0.4, 2.5) };
    let a2 = rng.log_uniform(0.4, 2.5);
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        1.0 / (a1 * a1),
        1.0 / (a2 * a2),
    ]));
    let q = rot.matrix() * diag * rot.matrix().transpose();
    let e1 = Ellipsoid::new((&q + q.transpose()) * 0.5).expect("spd");
    let e1_polar = e1.polar();
    let m = rng.range_inclusive(6, 40) as usize;
    let facets: Vec<Point> = (0..m)
        .map(|_| {
            let u = random_unit(rng, 2);
            let h = 1.0f64.max(e1_polar.gauge(&u).expect("dim"));
            &u / h
        })
        .collect();
    let k = SymmetricBody::from_facets_2d(&facets).expect("bounded");
    let d = k
        .vertices()
        .iter()
        .map(|v| v.norm().max(e1.gauge(v).expect("dim")))
        .fold(0.0, f64::max);
    (k, e1, d)
}

fn criterion8() -> Outcome {
    let t = Instant::now();
    let mut rng = SplitMix64::new(SEED ^ 8);
    let mut notes = Vec::new();
    let mut pass = true;

    // Bipolar round trip and gauge/support duality.
    let mut bodies: Vec<SymmetricBody> = catalog().into_iter().map(|f| f.body).collect();
    bodies.extend((0..1000).map(|_| random_polygon(&mut rng).expect("random polygon")));
    let mut bipolar_bad = 0;
    let mut duality_err: f64 = 0.0;
    for k in &bodies {
        if !same_vertices(&k.polar().polar(), k, 1e-9) {
            bipolar_bad += 1;
        }
        let p = k.polar();
        for _ in 0..10 {
            let x = random_unit(&mut rng, k.dim()) * rng.uniform(0.1, 3.0);
            let g = k.gauge(&x).unwrap();
            duality_err = duality_err.max((g - p.support(&x).unwrap()).abs() / g.max(1.0));
            let h = k.support(&x).unwrap();
            duality_err = duality_err.max((h - p.gauge(&x).unwrap()).abs() / h.max(1.0));
        }
    }
    let ok = bipolar_bad == 0 && duality_err <= 1e-12;
    pass &= ok;
    notes.push(format!(
        "bipolar {} bodies bad={bipolar_bad}, duality err={duality_err:.1e}",
        bodies.len()
    ));

    // Affine invariance of bm_to_ball.
    let tol = opts().tolerance;
    let mut drift: f64 = 0.0;
    for i in 0..100 {
        let (k, t) = if i < 80 {
            (
                random_polygon(&mut rng).expect("random polygon"),
                LinearMap::new(random_map_2d(&mut rng)),
            )
        } else {
            let k = [cube(3), cross(3), pointed_prism()][i % 3].clone();
            (k, LinearMap::new(random_map(&mut rng, 3)))
        };
        let a = bm_to_ball(&k, &opts()).map(|r| r.value);
        let b = bm_to_ball(&k.apply_map(&t).unwrap(), &opts()).map(|r| r.value);
        match (a, b) {
            (Ok(a), Ok(b)) => drift = drift.max((a - b).abs()),
            (a, b) => {
                eprintln!("affine case {i} ({}): {:?} {:?}", k.label, a.err(), b.err());
                drift = f64::INFINITY;
            }
        }
    }
    let ok = drift <= 2.0 * tol;
    pass &= ok;
    notes.push(format!("affine drift={drift:.1e} (<= {:.0e})", 2.0 * tol));

    // Uniqueness of the planar distance ellipse from 20 starts.
    let mut spread: f64 = 0.0;
    for _ in 0..20 {
        let k = random_polygon(&mut rng).expect("random polygon");
        let pos: Vec<_> = (0..20)
            .map(|_| ball_position_from(&k, &random_spd(&mut rng, 2), BALL_GAP).expect("barrier"))
            .collect();
        let q0 = pos[0].ellipsoid.det_normalized();
        for p in &pos[1..] {
            spread = spread.max((p.value - pos[0].value).abs());
            spread = spread.max((p.ellipsoid.det_normalized() - &q0).norm() / q0.norm());
        }
    }
    let ok = spread <= 1e-5;
    pass &= ok;
    notes.push(format!("planar uniqueness spread={spread:.1e}"));

    // Orthogonal-frame bound in John position.
    let mut orth_bad = 0;
    let mut orth_cases = 0;
    while orth_cases < 2000 {
        let k = random_polygon(&mut rng).expect("random polygon");
        let Ok((kj, _)) = john_position(&k) else {
            orth_bad += 1;
            orth_cases += 1;
            continue;
        };
        for _ in 0..10 {
            let u = random_unit(&mut rng, 2);
            let v = &u / kj.gauge(&u).unwrap() * rng.uniform(0.5, 1.0);
            match lemma_orth_check(&kj, &v, 1e-9) {
                Ok(r) if r.pass => {}
                _ => orth_bad += 1,
            }
            orth_cases += 1;
        }
    }
    pass &= orth_bad == 0;
    notes.push(format!("orth {orth_cases} cases violations={orth_bad}"));

    // Mean-ellipsoid contact confinement.
    let mut mean_bad = 0;
    let mut with_v = 0;
    for i in 0..400 {
        let (k, e1, d) = mean_instance(&mut rng);
        let lambda = [0.25, 0.5, 0.75][i % 3];
        match mean_ellipsoid_check(&k, &e1, d, lambda, 1e-9) {
            Ok(r) => {
                with_v += (r.v_dim > 0) as usize;
                if !r.pass {
                    eprintln!("mean case {i}: {r:?}");
                    mean_bad += 1;
                }
            }
            Err(e) => {
                eprintln!("mean case {i}: {e}");
                mean_bad += 1;
            }
        }
    }
    pass &= mean_bad == 0;
    notes.push(format!(
        "mean ellipsoid 400 cases ({with_v} with V != 0) failures={mean_bad}"
    ));

    // Two-variable inequality.
    let sweep = lemma41_sweep(1_000_000, 201, SEED);
    let ok = sweep.violations == 0 && sweep.unexpected_equalities == 0 && sweep.points >= 1_000_000;
    pass &= ok;
    notes.push(format!(
        "two-variable inequality {} points violations={} equality hits={} unexpected={}",
        sweep.points,
        sweep.violations,
        sweep.equality_points.len(),
        sweep.unexpected_equalities
    ));

    notes.push(format!("{:.1}s", t.elapsed().as_secs_f64()));
    outcome(pass, notes.join("; "))
}

fn main() {
    // Numeric arguments select criteria; other runner flags are ignored.
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |n: usize| only.is_empty() || only.contains(&n);
    let mut certs = Certificates::default();
    let mut failed = 0;
    let mut report = |n: usize, name: &str, o: &dyn Fn(&mut Certificates) -> Outcome| {
        if !run(n) {
            return;
        }
        let o = o(&mut certs);
        println!(
            "criterion {n} {}: {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += (!o.pass) as usize;
    };
    report(1, "extremal values with certificates", &criterion1);
    report(2, "truncated 4-cube at (1, 2)", &criterion2);
    report(3, "trace identity and support bound", &criterion3);
    report(4, "exact polynomial machinery", &|_| criterion4());
    report(5, "stability bound over 1000 bodies", &|_| criterion5());
    report(6, "two-ball cover over 10^4 bodies", &|_| criterion6());
    report(7, "1-symmetric bound and equality condition", &|_| criterion7());
    report(8, "property suites", &|_| criterion8());
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
