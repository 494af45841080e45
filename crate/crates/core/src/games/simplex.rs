//! Dense revised simplex for `min cᵀy  s.t.  A y = b, y ≥ 0` with few rows and
//! many columns. Entering columns are chosen by full pricing (Dantzig's rule,
//! switching to Bland's rule after a run of degenerate pivots), so a problem
//! with thousands of columns but a handful of rows stays cheap.

use crate::error::{Error, Result};

const PRICE_TOL: f64 = 1e-11;
const PIVOT_TOL: f64 = 1e-12;
const FEASIBILITY_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;

/// Problem in standard form; `columns[j]` is column `j` of `A`.
pub struct StandardForm<'a> {
    pub columns: &'a [Vec<f64>],
    pub rhs: &'a [f64],
    pub cost: &'a [f64],
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub objective: f64,
    /// Simplex multipliers `π` with `πᵀB = c_B`; an optimal solution of the dual
    /// `max bᵀπ  s.t.  Aᵀπ ≤ c`.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

#[derive(Debug, PartialEq)]
pub enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solves the problem, or reports that it is infeasible (as `Err(Infeasible)`
/// translated by the caller) or unbounded.
pub fn solve(problem: &StandardForm<'_>, max_pivots: usize) -> Result<(Outcome, Option<Solution>)> {
    let m = problem.rhs.len();
    let n = problem.columns.len();
    if problem.cost.len() != n || problem.columns.iter().any(|c| c.len() != m) {
        return Err(Error::Lp("inconsistent problem shape".into()));
    }

    // Flip rows so b ≥ 0, then append one artificial column per row.
    let sign: Vec<f64> = problem.rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
    let rhs: Vec<f64> = problem.rhs.iter().zip(&sign).map(|(b, s)| b * s).collect();
    let mut columns: Vec<Vec<f64>> =
        problem.columns.iter().map(|c| c.iter().zip(&sign).map(|(a, s)| a * s).collect()).collect();
    for i in 0..m {
        let mut e = vec![0.0; m];
        e[i] = 1.0;
        columns.push(e);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut tableau = Tableau { columns: &columns, rhs: &rhs, m };
    let mut pivots = 0;

    let phase1_cost: Vec<f64> = (0..n + m).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    let allowed_all = |_: usize| true;
    match tableau.optimize(&mut basis, &phase1_cost, &allowed_all, max_pivots, &mut pivots)? {
        Outcome::Optimal => {}
        other => return Err(Error::Lp(format!("phase one ended {other:?}"))),
    }
    let (x_b, _) = tableau.basic_solution(&basis)?;
    let infeasibility: f64 = basis.iter().zip(&x_b).filter(|(&j, _)| j >= n).map(|(_, v)| v).sum();
    if infeasibility > FEASIBILITY_TOL {
        return Ok((Outcome::Infeasible, None));
    }
    tableau.drive_out_artificials(&mut basis, n)?;

    let phase2_cost: Vec<f64> = (0..n + m).map(|j| if j < n { problem.cost[j] } else { 0.0 }).collect();
    let allowed_real = |j: usize| j < n;
    let outcome = tableau.optimize(&mut basis, &phase2_cost, &allowed_real, max_pivots, &mut pivots)?;
    if outcome != Outcome::Optimal {
        return Ok((outcome, None));
    }
    let (x_b, binv) = tableau.basic_solution(&basis)?;
    let c_b: Vec<f64> = basis.iter().map(|&j| phase2_cost[j]).collect();
    let duals_flipped = row_times(&c_b, &binv);
    let duals = duals_flipped.iter().zip(&sign).map(|(p, s)| p * s).collect();
    let objective = basis.iter().zip(&x_b).map(|(&j, v)| phase2_cost[j] * v).sum();
    Ok((Outcome::Optimal, Some(Solution { objective, duals, pivots })))
}

struct Tableau<'a> {
    columns: &'a [Vec<f64>],
    rhs: &'a [f64],
    m: usize,
}

impl Tableau<'_> {
    fn basis_inverse(&self, basis: &[usize]) -> Result<Vec<Vec<f64>>> {
        let m = self.m;
        let mut a: Vec<Vec<f64>> = (0..m).map(|i| basis.iter().map(|&j| self.columns[j][i]).collect()).collect();
        let mut inv: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
                .expect("nonempty");
            if a[piv][col].abs() < 1e-14 {
                return Err(Error::Lp("singular basis".into()));
            }
            a.swap(col, piv);
            inv.swap(col, piv);
            let p = a[col][col];
            for k in 0..m {
                a[col][k] /= p;
                inv[col][k] /= p;
            }
            for r in 0..m {
                if r != col && a[r][col] != 0.0 {
                    let f = a[r][col];
                    for k in 0..m {
                        a[r][k] -= f * a[col][k];
                        inv[r][k] -= f * inv[col][k];
                    }
                }
            }
        }
        Ok(inv)
    }

    fn basic_solution(&self, basis: &[usize]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let binv = self.basis_inverse(basis)?;
        let x_b = binv.iter().map(|row| dot(row, self.rhs)).collect();
        Ok((x_b, binv))
    }

    fn optimize(
        &mut self,
        basis: &mut [usize],
        cost: &[f64],
        allowed: &dyn Fn(usize) -> bool,
        max_pivots: usize,
        pivots: &mut usize,
    ) -> Result<Outcome> {
        let mut degenerate = 0;
        loop {
            if *pivots >= max_pivots {
                return Err(Error::Lp(format!("pivot limit {max_pivots} reached")));
            }
            let (x_b, binv) = self.basic_solution(basis)?;
            let c_b: Vec<f64> = basis.iter().map(|&j| cost[j]).collect();
            let pi = row_times(&c_b, &binv);

            let bland = degenerate >= DEGENERATE_RUN;
            let mut entering: Option<(usize, f64)> = None;
            for (j, col) in self.columns.iter().enumerate() {
                if !allowed(j) || basis.contains(&j) {
                    continue;
                }
                let reduced = cost[j] - dot(&pi, col);
                if reduced < -PRICE_TOL {
                    if bland {
                        entering = Some((j, reduced));
                        break;
                    }
                    if entering.is_none_or(|(_, r)| reduced < r) {
                        entering = Some((j, reduced));
                    }
                }
            }
            let Some((enter, _)) = entering else {
                return Ok(Outcome::Optimal);
            };

            let direction: Vec<f64> = binv.iter().map(|row| dot(row, &self.columns[enter])).collect();
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                if direction[i] > PIVOT_TOL {
                    let ratio = x_b[i].max(0.0) / direction[i];
                    let better = match leave {
                        None => true,
                        Some((k, r)) => ratio < r - 1e-15 || (ratio <= r + 1e-15 && basis[i] < basis[k]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((row, step)) = leave else {
                return Ok(Outcome::Unbounded);
            };
            degenerate = if step <= 1e-14 { degenerate + 1 } else { 0 };
            basis[row] = enter;
            *pivots += 1;
        }
    }

    /// Replaces zero-level artificial basics by real columns where the basis allows it.
    fn drive_out_artificials(&mut self, basis: &mut [usize], n: usize) -> Result<()> {
        for row in 0..self.m {
            if basis[row] < n {
                continue;
            }
            let binv = self.basis_inverse(basis)?;
            let replacement = (0..n)
                .filter(|j| !basis.contains(j))
                .find(|&j| dot(&binv[row], &self.columns[j]).abs() > 1e-9);
            if let Some(j) = replacement {
                basis[row] = j;
            }
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn row_times(v: &[f64], m: &[Vec<f64>]) -> Vec<f64> {
    let cols = m.first().map_or(0, Vec::len);
    (0..cols).map(|k| v.iter().zip(m).map(|(vi, row)| vi * row[k]).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve_dense(rows: &[&[f64]], rhs: &[f64], cost: &[f64]) -> (Outcome, Option<Solution>) {
        let n = cost.len();
        let columns: Vec<Vec<f64>> = (0..n).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        solve(&StandardForm { columns: &columns, rhs, cost }, 1000).unwrap()
    }

    #[test]
    fn small_optimum() {
        // min -x1 - 2x2  s.t. x1 + x2 + s1 = 4, x1 + 3x2 + s2 = 6  → x = (3, 1), objective -5.
        let (o, s) = solve_dense(&[&[1.0, 1.0, 1.0, 0.0], &[1.0, 3.0, 0.0, 1.0]], &[4.0, 6.0], &[-1.0, -2.0, 0.0, 0.0]);
        assert_eq!(o, Outcome::Optimal);
        let s = s.unwrap();
        assert!((s.objective + 5.0).abs() < 1e-12);
        // Dual optimum π = (-1/2, -1/2), bᵀπ = -5.
        assert!((s.duals[0] + 0.5).abs() < 1e-12 && (s.duals[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        // x1 + x2 = -1 with x ≥ 0 is infeasible.
        let (o, _) = solve_dense(&[&[1.0, 1.0]], &[-1.0], &[1.0, 1.0]);
        assert_eq!(o, Outcome::Infeasible);
        // min -x1 s.t. x1 - x2 = 0 is unbounded.
        let (o, _) = solve_dense(&[&[1.0, -1.0]], &[0.0], &[-1.0, 0.0]);
        assert_eq!(o, Outcome::Unbounded);
    }

    #[test]
    fn negative_rhs_rows_keep_dual_signs() {
        // min y1 + y2  s.t. -y1 = -2, y2 = 3 → objective 5, π = (-1, 1).
        let (o, s) = solve_dense(&[&[-1.0, 0.0], &[0.0, 1.0]], &[-2.0, 3.0], &[1.0, 1.0]);
        assert_eq!(o, Outcome::Optimal);
        let s = s.unwrap();
        assert!((s.objective - 5.0).abs() < 1e-12);
        assert!((s.duals[0] + 1.0).abs() < 1e-12 && (s.duals[1] - 1.0).abs() < 1e-12);
    }
}
