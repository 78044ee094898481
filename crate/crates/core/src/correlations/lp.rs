//! Dense phase-1 simplex for the LVM membership problem: find p ≥ 0 with
//! A·p = b, or produce a Farkas certificate y with yᵀA ≥ 0 and yᵀb < 0.
//!
//! Bland's rule everywhere, so the tableau cannot cycle. Problem sizes are
//! 4^N rows and columns; fine for the guarded N.

pub enum PhaseOne {
    /// A nonnegative solution of A·p = b.
    Feasible(Vec<f64>),
    /// Farkas certificate: yᵀA ≥ 0 componentwise while yᵀb < 0.
    Infeasible(Vec<f64>),
}

/// `a` is row-major m×n. `tol` bounds the accepted phase-1 optimum (residual
/// mass) for feasibility.
pub fn solve_equality_nonneg(a: &[f64], m: usize, n: usize, b: &[f64], tol: f64) -> PhaseOne {
    assert_eq!(a.len(), m * n);
    assert_eq!(b.len(), m);
    let width = n + m + 1; // structural | artificial | rhs
    let rhs = n + m;
    let mut t = vec![0.0f64; m * width];
    // flip rows so the right-hand side is nonnegative; remember signs to
    // un-flip the dual certificate later
    let mut flipped = vec![false; m];
    for i in 0..m {
        let s = if b[i] < 0.0 {
            flipped[i] = true;
            -1.0
        } else {
            1.0
        };
        for j in 0..n {
            t[i * width + j] = s * a[i * n + j];
        }
        t[i * width + n + i] = 1.0;
        t[i * width + rhs] = s * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // reduced cost row for phase-1 objective min Σ artificials:
    // r_j = c_j − Σ_i over basic rows of column j (c of artificials is 1)
    let mut cost = vec![0.0f64; width];
    for j in 0..width {
        let mut z = 0.0;
        for i in 0..m {
            z += t[i * width + j];
        }
        let c_j = if (n..n + m).contains(&j) { 1.0 } else { 0.0 };
        cost[j] = c_j - z;
    }

    const PIVOT_EPS: f64 = 1e-11;
    loop {
        // Bland: entering = lowest-index column with negative reduced cost
        let mut entering = None;
        for (j, &c) in cost.iter().enumerate().take(n + m) {
            if c < -PIVOT_EPS {
                entering = Some(j);
                break;
            }
        }
        let Some(enter) = entering else { break };
        // ratio test, ties toward the lowest basis index (Bland)
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let aij = t[i * width + enter];
            if aij > PIVOT_EPS {
                let ratio = t[i * width + rhs] / aij;
                match leave {
                    Some((li, lr)) => {
                        if ratio < lr - 1e-14 || (ratio <= lr + 1e-14 && basis[i] < basis[li]) {
                            leave = Some((i, ratio));
                        }
                    }
                    None => leave = Some((i, ratio)),
                }
            }
        }
        let Some((pivot_row, _)) = leave else {
            // unbounded phase-1 cannot happen (objective bounded below by 0)
            break;
        };
        pivot(&mut t, &mut cost, m, width, pivot_row, enter);
        basis[pivot_row] = enter;
    }

    let objective: f64 = (0..m)
        .map(|i| if basis[i] >= n { t[i * width + rhs] } else { 0.0 })
        .sum();

    if objective <= tol {
        let mut x = vec![0.0f64; n];
        for i in 0..m {
            if basis[i] < n {
                x[basis[i]] = t[i * width + rhs].max(0.0);
            }
        }
        PhaseOne::Feasible(x)
    } else {
        // y* = c_B B^{-1}; B^{-1} sits under the artificial columns.
        // Dual feasibility gives (y*)ᵀA ≤ 0 and (y*)ᵀb = objective > 0,
        // so −y* (sign-unflipped) is the certificate in the ≥ convention.
        let mut y = vec![0.0f64; m];
        for (col, yj) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..m {
                if basis[i] >= n {
                    acc += t[i * width + n + col];
                }
            }
            *yj = acc;
        }
        for i in 0..m {
            let s = if flipped[i] { -1.0 } else { 1.0 };
            y[i] *= -s;
        }
        PhaseOne::Infeasible(y)
    }
}

fn pivot(t: &mut [f64], cost: &mut [f64], m: usize, width: usize, row: usize, col: usize) {
    let p = t[row * width + col];
    for j in 0..width {
        t[row * width + j] /= p;
    }
    for i in 0..m {
        if i == row {
            continue;
        }
        let f = t[i * width + col];
        if f != 0.0 {
            for j in 0..width {
                t[i * width + j] -= f * t[row * width + j];
            }
        }
    }
    let f = cost[col];
    if f != 0.0 {
        for j in 0..width {
            cost[j] -= f * t[row * width + j];
        }
    }
}
