//! Feasibility of `Ax = b, x ≥ 0` by a dense phase-1 simplex with Bland's rule.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Entries smaller than this are never pivoted on.
pub const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    /// A basic feasible point.
    Feasible { x: Vec<f64>, margin: f64 },
    /// Minimal total slack `min ‖Ax − b‖₁` over `x ≥ 0`.
    Infeasible { margin: f64 },
}

impl LpOutcome {
    pub fn margin(&self) -> f64 {
        match self {
            LpOutcome::Feasible { margin, .. } | LpOutcome::Infeasible { margin } => *margin,
        }
    }
}

struct Tableau {
    /// `m` constraint rows then the cost row; last column is the right-hand side.
    t: DMatrix<f64>,
    basis: Vec<usize>,
    m: usize,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.t[(r, self.cols)]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[(row, col)];
        let width = self.cols + 1;
        for c in 0..width {
            self.t[(row, c)] /= p;
        }
        for r in 0..=self.m {
            if r == row {
                continue;
            }
            let f = self.t[(r, col)];
            if f != 0.0 {
                for c in 0..width {
                    let v = self.t[(row, c)];
                    self.t[(r, c)] -= f * v;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Leaving row by minimum ratio; ties go to the smallest basic index.
    fn leaving(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.m {
            let a = self.t[(r, col)];
            if a > PIVOT_TOL {
                let ratio = self.rhs(r) / a;
                let take = match best {
                    None => true,
                    Some((br, bv)) => ratio < bv - 1e-15 || (ratio <= bv + 1e-15 && self.basis[r] < self.basis[br]),
                };
                if take {
                    best = Some((r, ratio));
                }
            }
        }
        best.map(|(r, _)| r)
    }
}

/// Phase-1 simplex. `tol` decides feasibility of the optimal total slack.
pub fn lp_feasibility(a: &DMatrix<f64>, b: &[f64], tol: f64) -> Result<LpOutcome> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{} right-hand sides for {m} rows",
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("linear program"));
    }
    let cols = n + m;
    let mut t = DMatrix::zeros(m + 1, cols + 1);
    for r in 0..m {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for c in 0..n {
            t[(r, c)] = sign * a[(r, c)];
        }
        t[(r, n + r)] = 1.0;
        t[(r, cols)] = sign * b[r];
    }
    // cost row: reduced costs of minimizing the artificial sum
    for c in 0..n {
        t[(m, c)] = -(0..m).map(|r| t[(r, c)]).sum::<f64>();
    }
    t[(m, cols)] = -(0..m).map(|r| t[(r, cols)]).sum::<f64>();
    let mut tab = Tableau {
        t,
        basis: (n..n + m).collect(),
        m,
        cols,
    };

    let guard = 50 * (m + cols);
    let mut iters = 0;
    loop {
        let entering = (0..cols).find(|&c| tab.t[(m, c)] < -COST_TOL);
        let Some(col) = entering else { break };
        let Some(row) = tab.leaving(col) else {
            return Err(Error::LpNumericalFailure("unbounded phase-1 direction".into()));
        };
        tab.pivot(row, col);
        iters += 1;
        if iters > guard {
            return Err(Error::LpNumericalFailure(format!(
                "no convergence after {iters} pivots"
            )));
        }
    }
    let margin = (-tab.t[(m, cols)]).max(0.0);
    if margin > tol {
        return Ok(LpOutcome::Infeasible { margin });
    }
    // drive zero-level artificials out where a structural column allows
    for r in 0..m {
        if tab.basis[r] >= n {
            if let Some(c) = (0..n).find(|&c| tab.t[(r, c)].abs() > PIVOT_TOL) {
                tab.pivot(r, c);
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in 0..m {
        if tab.basis[r] < n {
            x[tab.basis[r]] = tab.rhs(r).max(0.0);
        }
    }
    Ok(LpOutcome::Feasible { x, margin })
}
