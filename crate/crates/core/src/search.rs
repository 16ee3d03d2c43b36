//! Derivative-free simplex search and search options.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Objective evaluations allowed per start.
    pub max_iterations: usize,
    /// Random starts on top of the structured ones.
    pub restarts: usize,
    pub seed: u64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    pub tolerance: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_iterations: 2000,
            restarts: 8,
            seed: 0,
            initial_step: 0.25,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Nelder-Mead with standard coefficients, restarted from the incumbent
/// until a restart no longer improves it.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: f64,
    max_evals: usize,
    xtol: f64,
) -> Minimum {
    let mut best = Minimum {
        x: x0.to_vec(),
        value: f(x0),
        evaluations: 1,
    };
    let mut step = step;
    for _ in 0..6 {
        if best.evaluations >= max_evals {
            break;
        }
        let budget = max_evals - best.evaluations;
        let run = simplex_run(&mut f, &best.x, step, budget, xtol);
        let evals = best.evaluations + run.evaluations;
        let improved = run.value < best.value - 1e-15 * best.value.abs();
        if run.value <= best.value {
            best = Minimum {
                x: run.x,
                value: run.value,
                evaluations: evals,
            };
        } else {
            best.evaluations = evals;
        }
        if !improved {
            break;
        }
        step *= 0.5;
    }
    best
}

fn simplex_run<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    step: f64,
    max_evals: usize,
    xtol: f64,
) -> Minimum {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut evals = n + 1;
    while evals < max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let diameter = pts[1..]
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&pts[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        let spread = vals[n] - vals[0];
        if diameter < xtol || (spread <= 1e-15 * vals[0].abs() && diameter < 1e3 * xtol) {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < vals[0] {
            let xe = along(2.0);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < vals[n].min(fr) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    let p: Vec<f64> = pts[i]
                        .iter()
                        .zip(&pts[0])
                        .map(|(a, b)| b + 0.5 * (a - b))
                        .collect();
                    vals[i] = f(&p);
                    pts[i] = p;
                }
                evals += n;
            }
        }
    }
    let (i, v) = vals
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |b, (i, v)| if *v < b.1 { (i, *v) } else { b });
    Minimum {
        x: pts[i].clone(),
        value: v,
        evaluations: evals,
    }
}

/// Golden-section minimization of a unimodal function on [a, b].
pub fn golden<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let m = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            0.5,
            20_000,
            1e-12,
        );
        assert!(
            (m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6,
            "{m:?}"
        );
    }

    #[test]
    fn kinked_objective() {
        let m = nelder_mead(
            |x| (x[0] - 0.3).abs() + 2.0 * (x[1] + 0.1).abs(),
            &[1.0, 1.0],
            0.4,
            10_000,
            1e-13,
        );
        assert!(m.value < 1e-9, "{m:?}");
    }

    #[test]
    fn golden_section() {
        let (x, _) = golden(|t| (t - 0.7).powi(2), 0.0, 2.0, 80);
        assert!((x - 0.7).abs() < 1e-9);
    }
}
