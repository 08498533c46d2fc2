//! Sparse direct solver: equilibrated LU with Markowitz pivot selection
//! and threshold partial pivoting, followed by iterative refinement.
//!
//! Saddle-point matrices have zero diagonal blocks, so the pivot search
//! works over the whole active submatrix rather than the diagonal.

use alloc::vec;
use alloc::vec::Vec;

use super::assembly::BlockSystem;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Relative threshold for accepting a pivot against its column maximum.
const PIVOT_THRESHOLD: f64 = 0.1;
/// Scaled pivots at or below this size are treated as rank deficiency.
const SINGULAR_TOL: f64 = 1e-11;
/// Columns inspected per elimination step.
const SEARCH_COLUMNS: usize = 4;
const RUIZ_SWEEPS: usize = 20;
const REFINEMENT_STEPS: usize = 4;
/// Acceptance bound on `‖Mx − b‖ / (‖M‖‖x‖ + ‖b‖)`.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
struct Step {
    row: usize,
    col: usize,
    pivot: f64,
    lower: Vec<(usize, f64)>,
    upper: Vec<(usize, f64)>,
}

/// LU factors of `diag(r) M diag(c)`.
#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    steps: Vec<Step>,
}

fn ruiz_scaling(m: &CsrMatrix) -> (Vec<f64>, Vec<f64>) {
    let mut r = vec![1.0; m.nrows];
    let mut c = vec![1.0; m.ncols];
    for _ in 0..RUIZ_SWEEPS {
        let mut rmax = vec![0.0f64; m.nrows];
        let mut cmax = vec![0.0f64; m.ncols];
        for (i, j, v) in m.iter() {
            let a = (r[i] * v * c[j]).abs();
            rmax[i] = rmax[i].max(a);
            cmax[j] = cmax[j].max(a);
        }
        let mut converged = true;
        for (ri, mx) in r.iter_mut().zip(&rmax) {
            if *mx > 0.0 {
                converged &= (mx - 1.0).abs() < 1e-3;
                *ri /= libm::sqrt(*mx);
            }
        }
        for (cj, mx) in c.iter_mut().zip(&cmax) {
            if *mx > 0.0 {
                converged &= (mx - 1.0).abs() < 1e-3;
                *cj /= libm::sqrt(*mx);
            }
        }
        if converged {
            break;
        }
    }
    (r, c)
}

impl SparseLu {
    pub fn factorize(m: &CsrMatrix) -> Result<Self> {
        if m.nrows != m.ncols {
            return Err(Error::DimensionMismatch {
                what: "square matrix",
                expected: m.nrows,
                found: m.ncols,
            });
        }
        let n = m.nrows;
        let (row_scale, col_scale) = ruiz_scaling(m);

        let mut rows: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                m.row(i)
                    .filter(|(_, v)| *v != 0.0)
                    .map(|(j, v)| (j, row_scale[i] * v * col_scale[j]))
                    .collect()
            })
            .collect();
        let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, r) in rows.iter().enumerate() {
            for &(j, _) in r {
                col_rows[j].push(i);
            }
        }
        let mut col_count: Vec<usize> = col_rows.iter().map(|c| c.len()).collect();
        let mut row_active = vec![true; n];
        let mut col_active = vec![true; n];
        let mut pos = vec![usize::MAX; n];
        let mut steps = Vec::with_capacity(n);

        for step in 0..n {
            // columns with the fewest active entries
            let mut cand: [(usize, usize); SEARCH_COLUMNS] = [(usize::MAX, usize::MAX); SEARCH_COLUMNS];
            for j in (0..n).filter(|&j| col_active[j]) {
                let key = (col_count[j], j);
                if key < cand[SEARCH_COLUMNS - 1] {
                    let mut k = SEARCH_COLUMNS - 1;
                    while k > 0 && key < cand[k - 1] {
                        cand[k] = cand[k - 1];
                        k -= 1;
                    }
                    cand[k] = key;
                }
            }

            // (cost, -|a|, row, col, value)
            let mut best: Option<(usize, f64, usize, usize, f64)> = None;
            let mut largest = 0.0f64;
            for &(count, j) in cand.iter().filter(|c| c.1 != usize::MAX) {
                let entries: Vec<(usize, f64)> = col_rows[j]
                    .iter()
                    .filter(|&&i| row_active[i])
                    .filter_map(|&i| rows[i].iter().find(|(c, _)| *c == j).map(|&(_, v)| (i, v)))
                    .collect();
                let colmax = entries.iter().fold(0.0f64, |a, (_, v)| a.max(v.abs()));
                largest = largest.max(colmax);
                if colmax <= SINGULAR_TOL {
                    continue;
                }
                for &(i, v) in &entries {
                    if v.abs() < PIVOT_THRESHOLD * colmax {
                        continue;
                    }
                    let cost = (rows[i].len() - 1) * (count.max(1) - 1);
                    let key = (cost, -v.abs(), i, j, v);
                    let better = match &best {
                        None => true,
                        Some(b) => {
                            (key.0, key.1, key.2, key.3) < (b.0, b.1, b.2, b.3)
                        }
                    };
                    if better {
                        best = Some(key);
                    }
                }
            }
            let Some((_, _, p, q, pivot)) = best else {
                return Err(Error::Singular {
                    step,
                    dim: n,
                    pivot: largest,
                });
            };

            row_active[p] = false;
            col_active[q] = false;
            let upper: Vec<(usize, f64)> = rows[p].iter().copied().filter(|&(j, _)| j != q).collect();
            for &(j, _) in &upper {
                col_count[j] -= 1;
            }
            let mut lower = Vec::new();
            let targets: Vec<usize> = col_rows[q].iter().copied().filter(|&i| row_active[i]).collect();
            for i in targets {
                let row = &mut rows[i];
                let Some(at) = row.iter().position(|(c, _)| *c == q) else {
                    continue;
                };
                let l = row[at].1 / pivot;
                row.swap_remove(at);
                for (k, &(c, _)) in row.iter().enumerate() {
                    pos[c] = k;
                }
                for &(j, u) in &upper {
                    if pos[j] != usize::MAX {
                        row[pos[j]].1 -= l * u;
                    } else {
                        pos[j] = row.len();
                        row.push((j, -l * u));
                        col_rows[j].push(i);
                        col_count[j] += 1;
                    }
                }
                for &(c, _) in row.iter() {
                    pos[c] = usize::MAX;
                }
                lower.push((i, l));
            }
            col_rows[q].clear();
            rows[p].clear();
            steps.push(Step {
                row: p,
                col: q,
                pivot,
                lower,
                upper,
            });
        }

        Ok(SparseLu {
            n,
            row_scale,
            col_scale,
            steps,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `M x = b` with the stored factors.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut c: Vec<f64> = b.iter().zip(&self.row_scale).map(|(v, r)| v * r).collect();
        for st in &self.steps {
            let cp = c[st.row];
            if cp != 0.0 {
                for &(i, l) in &st.lower {
                    c[i] -= l * cp;
                }
            }
        }
        let mut y = vec![0.0; self.n];
        for st in self.steps.iter().rev() {
            let acc: f64 = st.upper.iter().map(|&(j, u)| u * y[j]).sum();
            y[st.col] = (c[st.row] - acc) / st.pivot;
        }
        y.iter().zip(&self.col_scale).map(|(v, c)| v * c).collect()
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `‖Mx − b‖∞ / (‖M‖∞‖x‖∞ + ‖b‖∞)`.
pub fn relative_residual(m: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let r: Vec<f64> = m.mul_vec(x).iter().zip(b).map(|(a, b)| a - b).collect();
    let denom = m.norm_inf() * norm_inf(x) + norm_inf(b);
    if denom == 0.0 {
        norm_inf(&r)
    } else {
        norm_inf(&r) / denom
    }
}

/// Factorizes and solves `m x = b`, refining until the residual bound
/// [`RESIDUAL_TOL`] holds.
pub fn solve_matrix(m: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != m.nrows {
        return Err(Error::DimensionMismatch {
            what: "right-hand side",
            expected: m.nrows,
            found: b.len(),
        });
    }
    let lu = SparseLu::factorize(m)?;
    let mut x = lu.solve(b);
    let mut rel = relative_residual(m, &x, b);
    for _ in 0..REFINEMENT_STEPS {
        if rel <= 1e-3 * RESIDUAL_TOL {
            break;
        }
        let r: Vec<f64> = b.iter().zip(m.mul_vec(&x)).map(|(b, mx)| b - mx).collect();
        let dx = lu.solve(&r);
        let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        let cand_rel = relative_residual(m, &cand, b);
        if cand_rel >= rel {
            break;
        }
        x = cand;
        rel = cand_rel;
    }
    if !(rel <= RESIDUAL_TOL) {
        return Err(Error::Inaccurate {
            relative_residual: rel,
        });
    }
    Ok(x)
}

/// Solves an assembled block system.
pub fn solve_sparse(sys: &BlockSystem) -> Result<Vec<f64>> {
    solve_matrix(&sys.matrix, &sys.rhs)
}
