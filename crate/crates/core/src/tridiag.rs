/// Solves a tridiagonal system in place with the Thomas algorithm.
///
/// `lower[i]` couples row `i` to `i - 1` (`lower[0]` unused), `upper[i]`
/// couples row `i` to `i + 1` (last entry unused). The right-hand side is
/// overwritten with the solution. Returns `false` on a zero pivot.
pub(crate) fn solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64], scratch: &mut Vec<f64>) -> bool {
    let n = diag.len();
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return false;
    }
    rhs[0] /= pivot;
    for i in 1..n {
        scratch[i] = upper[i - 1] / pivot;
        pivot = diag[i] - lower[i] * scratch[i];
        if pivot == 0.0 || !pivot.is_finite() {
            return false;
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i + 1] * rhs[i + 1];
    }
    true
}
