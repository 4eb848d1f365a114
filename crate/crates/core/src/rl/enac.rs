use super::{returns, Episode, Policy, ReturnNormalizer};
use crate::error::{Error, Result};

/// Natural-gradient direction `w` and baseline offset `C`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnacSolution {
    pub w: Vec<f64>,
    pub offset: f64,
}

/// In-place Cholesky factorization of a dense symmetric matrix (row-major,
/// lower triangle used). Fails when a pivot is not safely positive.
fn cholesky(a: &mut [f64], n: usize) -> Result<()> {
    let max_diag = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
    let tol = (n as f64) * f64::EPSILON * max_diag.max(f64::MIN_POSITIVE);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d.is_nan() || d <= tol {
            return Err(Error::Numeric(format!(
                "least-squares system is singular (pivot {d:e} at {j})"
            )));
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    Ok(())
}

fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `Σ_n (rows_n · x − y_n)² + ridge·|x|²` through the normal
/// equations. Uses the `N × N` dual system when there are fewer rows than
/// unknowns; both forms give the same solution.
pub fn solve_ridge(rows: &[Vec<f64>], targets: &[f64], ridge: f64) -> Result<Vec<f64>> {
    let n = rows.len();
    if n == 0 || n != targets.len() {
        return Err(Error::Numeric("least-squares batch is empty or ragged".into()));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Numeric("least-squares rows differ in length".into()));
    }
    if n < d {
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = dot(&rows[i], &rows[j]);
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
            g[i * n + i] += ridge;
        }
        cholesky(&mut g, n)?;
        let mut alpha = targets.to_vec();
        cholesky_solve(&g, n, &mut alpha);
        let mut x = vec![0.0; d];
        for (row, a) in rows.iter().zip(&alpha) {
            for (xi, r) in x.iter_mut().zip(row) {
                *xi += a * r;
            }
        }
        Ok(x)
    } else {
        let mut a = vec![0.0; d * d];
        let mut b = vec![0.0; d];
        for (row, &y) in rows.iter().zip(targets) {
            for i in 0..d {
                b[i] += row[i] * y;
                for j in 0..=i {
                    a[i * d + j] += row[i] * row[j];
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                a[j * d + i] = a[i * d + j];
            }
            a[i * d + i] += ridge;
        }
        cholesky(&mut a, d)?;
        cholesky_solve(&a, d, &mut b);
        Ok(b)
    }
}

/// Episodic natural actor-critic step: regresses each episode's normalized
/// return on its summed score vector plus a constant.
pub fn enac_step<P: Policy>(
    batch: &[&Episode<P::Obs, P::Action>],
    policy: &P,
    gamma: f64,
    ridge: f64,
    normalizer: &ReturnNormalizer,
) -> Result<EnacSolution> {
    if batch.len() < 2 {
        return Err(Error::Numeric("eNAC needs at least two episodes".into()));
    }
    let p = policy.params().len();
    let mut rows = Vec::with_capacity(batch.len());
    let mut targets = Vec::with_capacity(batch.len());
    for ep in batch {
        let mut row = vec![0.0; p + 1];
        for tr in &ep.transitions {
            policy.accumulate_score(&tr.features, &tr.action, 1.0, &mut row[..p])?;
        }
        row[p] = 1.0;
        rows.push(row);
        let total = returns(ep, gamma).first().copied().unwrap_or(0.0);
        targets.push(normalizer.normalize(total));
    }
    let mut x = solve_ridge(&rows, &targets, ridge)?;
    let offset = x.pop().unwrap();
    if x.iter().any(|v| !v.is_finite()) || !offset.is_finite() {
        return Err(Error::Numeric("non-finite natural gradient".into()));
    }
    Ok(EnacSolution { w: x, offset })
}

/// Likelihood-ratio gradient `1/N Σ_i 1/T_i Σ_t ∇log π(a_t|s_t) R_t`, with
/// per-step returns passed through `normalizer` when given.
pub fn reinforce_gradient<P: Policy>(
    batch: &[&Episode<P::Obs, P::Action>],
    policy: &P,
    gamma: f64,
    normalizer: Option<&ReturnNormalizer>,
) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::Numeric("REINFORCE needs a non-empty batch".into()));
    }
    let mut g = vec![0.0; policy.params().len()];
    let n = batch.len() as f64;
    for ep in batch {
        if ep.is_empty() {
            continue;
        }
        let t = ep.len() as f64;
        for (tr, r) in ep.transitions.iter().zip(returns(ep, gamma)) {
            let r = normalizer.map_or(r, |nz| nz.normalize(r));
            if r != 0.0 {
                policy.accumulate_score(&tr.features, &tr.action, r / (n * t), &mut g)?;
            }
        }
    }
    Ok(g)
}
