//! Dense linear solvers for the two numeric modes.
//!
//! Rational systems go through fraction-free (Bareiss) elimination on an
//! integer-scaled augmented matrix, so all intermediate divisions are exact.
//! Float systems use partially pivoted elimination with one iterative
//! refinement pass and a residual check.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

/// Residual tolerance for the float solver (relative to the right-hand side).
pub const FLOAT_RESIDUAL_TOL: f64 = 1e-10;

/// Solve `A x = b` exactly for each right-hand-side column.
pub fn solve_rational(
    a: Vec<Vec<BigRational>>,
    rhs_cols: Vec<Vec<BigRational>>,
) -> Result<Vec<Vec<BigRational>>> {
    let n = a.len();
    let m = rhs_cols.len();
    check_shapes(n, &a, &rhs_cols)?;
    if n == 0 {
        return Ok(vec![Vec::new(); m]);
    }

    // Scale each augmented row [A_i | b_i] by the lcm of its denominators.
    let width = n + m;
    let mut mat: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut lcm = BigInt::one();
        for v in a[i].iter().chain(rhs_cols.iter().map(|c| &c[i])) {
            lcm = lcm.lcm(v.denom());
        }
        let mut row: Vec<BigInt> = Vec::with_capacity(width);
        for v in a[i].iter().chain(rhs_cols.iter().map(|c| &c[i])) {
            debug_assert!((&lcm % v.denom()).is_zero());
            row.push(v.numer() * (&lcm / v.denom()));
        }
        mat.push(row);
    }

    // Bareiss forward elimination with row pivoting on the first nonzero entry.
    let mut prev = BigInt::one();
    for k in 0..n {
        let pivot_row = (k..n)
            .find(|&r| !mat[r][k].is_zero())
            .ok_or(Error::SingularSystem)?;
        mat.swap(k, pivot_row);
        for i in k + 1..n {
            for j in k + 1..width {
                let num = &mat[k][k] * &mat[i][j] - &mat[i][k] * &mat[k][j];
                debug_assert!((&num % &prev).is_zero());
                mat[i][j] = num / &prev;
            }
            mat[i][k] = BigInt::zero();
        }
        prev = mat[k][k].clone();
    }

    // Back-substitution in exact rationals.
    let mut out = vec![vec![BigRational::zero(); n]; m];
    for (c, col) in out.iter_mut().enumerate() {
        for i in (0..n).rev() {
            let mut acc = BigRational::from_integer(mat[i][n + c].clone());
            for j in i + 1..n {
                acc -= BigRational::from_integer(mat[i][j].clone()) * &col[j];
            }
            col[i] = acc / BigRational::from_integer(mat[i][i].clone());
        }
    }
    Ok(out)
}

/// Solve `A x = b` with partial pivoting plus one refinement pass.
pub fn solve_float(a: Vec<Vec<f64>>, rhs_cols: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let m = rhs_cols.len();
    check_shapes(n, &a, &rhs_cols)?;
    if n == 0 {
        return Ok(vec![Vec::new(); m]);
    }

    let lu = FloatLu::factor(&a)?;
    let mut out = Vec::with_capacity(m);
    for b in &rhs_cols {
        let mut x = lu.solve(b);
        // One iterative refinement pass.
        let r = residual(&a, &x, b);
        let dx = lu.solve(&r);
        for i in 0..n {
            x[i] += dx[i];
        }
        let r = residual(&a, &x, b);
        let scale = b.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        let worst = r.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if !(worst <= FLOAT_RESIDUAL_TOL * scale) {
            return Err(Error::SingularSystem);
        }
        out.push(x);
    }
    Ok(out)
}

fn check_shapes<T>(n: usize, a: &[Vec<T>], rhs_cols: &[Vec<T>]) -> Result<()> {
    if a.iter().any(|row| row.len() != n) {
        return Err(Error::Internal("non-square system".into()));
    }
    if rhs_cols.iter().any(|col| col.len() != n) {
        return Err(Error::Internal("rhs length mismatch".into()));
    }
    Ok(())
}

fn residual(a: &[Vec<f64>], x: &[f64], b: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let ax: f64 = (0..n).map(|j| a[i][j] * x[j]).sum();
            b[i] - ax
        })
        .collect()
}

struct FloatLu {
    lu: Vec<Vec<f64>>,
    perm: Vec<usize>,
}

impl FloatLu {
    fn factor(a: &[Vec<f64>]) -> Result<Self> {
        let n = a.len();
        let mut lu: Vec<Vec<f64>> = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let pivot_row = (k..n)
                .max_by(|&r, &s| lu[r][k].abs().total_cmp(&lu[s][k].abs()))
                .expect("non-empty pivot range");
            if lu[pivot_row][k] == 0.0 {
                return Err(Error::SingularSystem);
            }
            lu.swap(k, pivot_row);
            perm.swap(k, pivot_row);
            for i in k + 1..n {
                let f = lu[i][k] / lu[k][k];
                lu[i][k] = f;
                for j in k + 1..n {
                    lu[i][j] -= f * lu[k][j];
                }
            }
        }
        Ok(Self { lu, perm })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = b[self.perm[i]];
            for j in 0..i {
                acc -= self.lu[i][j] * y[j];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in i + 1..n {
                acc -= self.lu[i][j] * y[j];
            }
            y[i] = acc / self.lu[i][i];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn solves_rational_system_exactly() {
        // [2 1; 1 3] x = [5; 10] -> x = (1, 3)
        let a = vec![vec![q(2, 1), q(1, 1)], vec![q(1, 1), q(3, 1)]];
        let rhs = vec![vec![q(5, 1), q(10, 1)]];
        let x = solve_rational(a, rhs).unwrap();
        assert_eq!(x[0], vec![q(1, 1), q(3, 1)]);
    }

    #[test]
    fn rational_solver_handles_fractions_and_pivoting() {
        // First pivot is zero, forcing a swap.
        let a = vec![
            vec![q(0, 1), q(1, 2), q(1, 3)],
            vec![q(1, 5), q(0, 1), q(2, 7)],
            vec![q(3, 4), q(1, 9), q(0, 1)],
        ];
        let x_true = vec![q(2, 3), q(-7, 5), q(9, 11)];
        let b: Vec<BigRational> = (0..3)
            .map(|i| (0..3).map(|j| &a[i][j] * &x_true[j]).sum())
            .collect();
        let x = solve_rational(a, vec![b]).unwrap();
        assert_eq!(x[0], x_true);
    }

    #[test]
    fn rational_solver_rejects_singular() {
        let a = vec![vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(4, 1)]];
        let rhs = vec![vec![q(1, 1), q(2, 1)]];
        assert!(matches!(solve_rational(a, rhs), Err(Error::SingularSystem)));
    }

    #[test]
    fn float_solver_matches_rational_on_random_systems() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.random_range(1..6);
            let a_int: Vec<Vec<i64>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let v = rng.random_range(-5..=5);
                            if i == j {
                                v + 12
                            } else {
                                v
                            }
                        })
                        .collect()
                })
                .collect();
            let b_int: Vec<i64> = (0..n).map(|_| rng.random_range(-9..=9)).collect();
            let aq: Vec<Vec<BigRational>> = a_int
                .iter()
                .map(|r| r.iter().map(|&v| q(v, 1)).collect())
                .collect();
            let bq: Vec<BigRational> = b_int.iter().map(|&v| q(v, 1)).collect();
            let af: Vec<Vec<f64>> = a_int
                .iter()
                .map(|r| r.iter().map(|&v| v as f64).collect())
                .collect();
            let bf: Vec<f64> = b_int.iter().map(|&v| v as f64).collect();

            let xq = solve_rational(aq, vec![bq]).unwrap();
            let xf = solve_float(af, vec![bf]).unwrap();
            for i in 0..n {
                let exact = BigRational::from_f64(xf[0][i]).unwrap();
                let diff = (&xq[0][i] - exact).abs();
                assert!(diff < q(1, 1_000_000), "component {i} off: {diff}");
            }
        }
    }

    #[test]
    fn multiple_rhs_columns_share_one_elimination() {
        let a = vec![vec![q(3, 1), q(1, 1)], vec![q(1, 1), q(2, 1)]];
        let rhs = vec![vec![q(1, 1), q(0, 1)], vec![q(0, 1), q(1, 1)]];
        let cols = solve_rational(a.clone(), rhs).unwrap();
        // Columns of A^{-1}: det = 5.
        assert_eq!(cols[0], vec![q(2, 5), q(-1, 5)]);
        assert_eq!(cols[1], vec![q(-1, 5), q(3, 5)]);
    }
}
