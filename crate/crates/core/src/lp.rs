//! Dense two-phase simplex for the small programs in this crate.
//!
//! Problems here have at most a few hundred rows, so a full tableau is fine.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct LinearProgram {
    n: usize,
    objective: Vec<f64>,
    free: Vec<bool>,
    rows: Vec<(Vec<f64>, Cmp, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal {
        x: Vec<f64>,
        objective: f64,
    },
    /// Phase one stopped with this sum of infeasibilities.
    Infeasible {
        residual: f64,
    },
    Unbounded,
}

const PIVOT_EPS: f64 = 1e-9;

impl LinearProgram {
    /// Minimize `objective . x`; variables are nonnegative unless marked free.
    pub fn minimize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            n,
            objective,
            free: vec![false; n],
            rows: Vec::new(),
        }
    }

    pub fn set_free(&mut self, j: usize) {
        self.free[j] = true;
    }

    pub fn constrain(&mut self, coeffs: Vec<f64>, cmp: Cmp, rhs: f64) {
        assert_eq!(coeffs.len(), self.n);
        self.rows.push((coeffs, cmp, rhs));
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Solve; a phase-one residual up to `feas_tol` counts as feasible.
    pub fn solve(&self, feas_tol: f64) -> LpOutcome {
        // Column layout: structural (free ones split), slacks, artificials.
        let mut col_of = Vec::with_capacity(self.n);
        let mut ncols = 0;
        for j in 0..self.n {
            col_of.push(ncols);
            ncols += if self.free[j] { 2 } else { 1 };
        }
        let n_struct = ncols;
        let n_slack = self.rows.iter().filter(|r| r.1 != Cmp::Eq).count();
        let m = self.rows.len();
        let n_art = m;
        let total = n_struct + n_slack + n_art;
        let rhs_col = total;

        let mut t = vec![vec![0.0; total + 1]; m];
        let mut basis = vec![0usize; m];
        let mut slack = n_struct;
        for (i, (coeffs, cmp, rhs)) in self.rows.iter().enumerate() {
            let row = &mut t[i];
            for j in 0..self.n {
                let c = col_of[j];
                row[c] = coeffs[j];
                if self.free[j] {
                    row[c + 1] = -coeffs[j];
                }
            }
            match cmp {
                Cmp::Le => {
                    row[slack] = 1.0;
                    slack += 1;
                }
                Cmp::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                }
                Cmp::Eq => {}
            }
            row[rhs_col] = *rhs;
            if *rhs < 0.0 {
                for v in row.iter_mut() {
                    *v = -*v;
                }
            }
            let a = n_struct + n_slack + i;
            row[a] = 1.0;
            basis[i] = a;
        }

        let art_start = n_struct + n_slack;
        let mut cost1 = vec![0.0; total];
        for c in cost1.iter_mut().skip(art_start) {
            *c = 1.0;
        }
        let allowed_all = vec![true; total];
        if run_simplex(&mut t, &mut basis, &cost1, &allowed_all).is_err() {
            // Phase one is bounded below by zero; treat as numerical failure.
            return LpOutcome::Infeasible {
                residual: f64::INFINITY,
            };
        }
        let residual: f64 = basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= art_start)
            .map(|(i, _)| t[i][rhs_col].abs())
            .sum();
        if residual > feas_tol {
            return LpOutcome::Infeasible { residual };
        }
        // Drive artificials out where possible.
        for i in 0..m {
            if basis[i] >= art_start {
                if let Some(j) = (0..art_start).find(|&j| t[i][j].abs() > 1e-9) {
                    pivot(&mut t, &mut basis, i, j);
                }
            }
        }

        let mut cost2 = vec![0.0; total];
        for (j, &c) in col_of.iter().enumerate().take(self.n) {
            cost2[c] = self.objective[j];
            if self.free[j] {
                cost2[c + 1] = -self.objective[j];
            }
        }
        let mut allowed = vec![true; total];
        for a in allowed.iter_mut().skip(art_start) {
            *a = false;
        }
        if run_simplex(&mut t, &mut basis, &cost2, &allowed).is_err() {
            return LpOutcome::Unbounded;
        }

        let mut xs = vec![0.0; total];
        for (i, &b) in basis.iter().enumerate() {
            xs[b] = t[i][rhs_col];
        }
        let x: Vec<f64> = (0..self.n)
            .map(|j| {
                let c = col_of[j];
                if self.free[j] {
                    xs[c] - xs[c + 1]
                } else {
                    xs[c]
                }
            })
            .collect();
        let objective = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        LpOutcome::Optimal { x, objective }
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, c: usize) {
    let p = t[r][c];
    for v in t[r].iter_mut() {
        *v /= p;
    }
    let prow = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i == r {
            continue;
        }
        let f = row[c];
        if f != 0.0 {
            for (v, pv) in row.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            row[c] = 0.0;
        }
    }
    basis[r] = c;
}

struct Unbounded;

fn run_simplex(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    allowed: &[bool],
) -> Result<(), Unbounded> {
    let m = t.len();
    let total = cost.len();
    let rhs = total;
    let mut degenerate_run = 0usize;
    let mut bland = false;
    let max_iter = 50 * (m + total) + 1000;
    for _ in 0..max_iter {
        // Reduced costs.
        let mut in_basis = vec![false; total];
        for &b in basis.iter() {
            in_basis[b] = true;
        }
        // Once stalling is seen, stay with Bland's rule: tiny nonzero steps
        // would otherwise reset the counter and let Dantzig's rule cycle.
        bland |= degenerate_run > 30;
        let mut enter = None;
        let mut best = -1e-10;
        for j in 0..total {
            if !allowed[j] || in_basis[j] {
                continue;
            }
            let mut d = cost[j];
            for i in 0..m {
                d -= cost[basis[i]] * t[i][j];
            }
            if d < best {
                enter = Some(j);
                if bland {
                    break;
                }
                best = d;
            }
        }
        let Some(c) = enter else {
            return Ok(());
        };
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            let a = t[i][c];
            if a > PIVOT_EPS {
                let ratio = t[i][rhs].max(0.0) / a;
                let better = match leave {
                    None => true,
                    Some(l) => {
                        // On ties prefer the larger pivot for stability,
                        // or the smaller index under Bland's rule.
                        let tie_break = if bland { basis[i] < basis[l] } else { a > t[l][c] };
                        ratio < best_ratio - 1e-14 || (ratio <= best_ratio + 1e-14 && tie_break)
                    }
                };
                if better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(r) = leave else {
            return Err(Unbounded);
        };
        if best_ratio < 1e-9 {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
        pivot(t, basis, r, c);
    }
    Ok(())
}
