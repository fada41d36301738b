//! One-vs-rest L2 logistic regression fitted with L-BFGS.
//!
//! Each binary problem minimises
//! `(1/W) Σ s_i [softplus(z_i) − t_i z_i] + (λ / 2N) ‖w‖²` with
//! `z_i = w·x_i + b`, sample weights `s_i` taken from the class weights,
//! `W = Σ s_i` and `N` the number of rows. The bias is not penalised.
//! Dividing the data term by `W` makes the fit invariant to a uniform
//! rescaling of the class weights.

use serde::{Deserialize, Serialize};

use super::dataset::Matrix;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureScaling {
    #[default]
    None,
    /// Divide each column by its maximum absolute training value.
    MaxAbs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    pub l2: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub history: usize,
    pub scaling: FeatureScaling,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            l2: 1.0,
            max_iter: 500,
            tol: 1e-6,
            history: 10,
            scaling: FeatureScaling::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// One row of weights per class.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    /// Column divisors applied before the linear map, if any.
    pub scale: Option<Vec<f64>>,
    pub converged: bool,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Value and gradient of the binary objective at `theta = [w.., b]`.
/// `rows` are feature rows, `targets` are 0/1, `weights` are sample weights.
pub fn binary_objective(
    rows: &[&[f64]],
    targets: &[f64],
    weights: &[f64],
    l2: f64,
    theta: &[f64],
) -> (f64, Vec<f64>) {
    let d = theta.len() - 1;
    let (w, b) = (&theta[..d], theta[d]);
    let total: f64 = weights.iter().sum();
    let n = rows.len() as f64;
    let mut grad = vec![0.0; d + 1];
    let mut loss = 0.0;
    for ((row, &t), &s) in rows.iter().zip(targets).zip(weights) {
        let z = dot(w, row) + b;
        loss += s * (softplus(z) - t * z);
        let r = s * (sigmoid(z) - t);
        for (g, &x) in grad[..d].iter_mut().zip(row.iter()) {
            if x != 0.0 {
                *g += r * x;
            }
        }
        grad[d] += r;
    }
    let reg = l2 / n;
    let mut f = loss / total + 0.5 * reg * dot(w, w);
    for (g, &wj) in grad[..d].iter_mut().zip(w) {
        *g = *g / total + reg * wj;
    }
    grad[d] /= total;
    if !f.is_finite() {
        f = f64::INFINITY;
    }
    (f, grad)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Limited-memory BFGS with Armijo backtracking. Converged means the
/// gradient's max-norm fell below `tol`.
pub fn lbfgs(
    f: impl Fn(&[f64]) -> (f64, Vec<f64>),
    x0: Vec<f64>,
    max_iter: usize,
    tol: f64,
    history: usize,
) -> LbfgsResult {
    let norm_inf = |g: &[f64]| g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut mem: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> = Default::default();
    for it in 0..max_iter {
        if norm_inf(&g) < tol {
            return LbfgsResult {
                x,
                value: fx,
                iterations: it,
                converged: true,
            };
        }
        // Two-loop recursion for the search direction.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = mem.back().map_or_else(
            || 1.0 / norm_inf(&g).max(1.0),
            |(s, y, _)| dot(s, y) / dot(y, y),
        );
        for qi in &mut q {
            *qi *= gamma;
        }
        for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let beta = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - beta) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
            mem.clear();
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (fn_, gn) = f(&xn);
            if fn_ <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            return LbfgsResult {
                x,
                value: fx,
                iterations: it,
                converged: norm_inf(&g) < tol,
            };
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if mem.len() == history {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        fx = fn_;
        g = gn;
    }
    let converged = norm_inf(&g) < tol;
    LbfgsResult {
        x,
        value: fx,
        iterations: max_iter,
        converged,
    }
}

/// Fits one binary problem per class on the rows in `idx`.
pub fn fit_logistic(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    idx: &[usize],
    class_weights: &[f64],
    params: &LogisticParams,
) -> LogisticModel {
    let d = x.cols();
    let scale = match params.scaling {
        FeatureScaling::None => None,
        FeatureScaling::MaxAbs => {
            let mut m = vec![0.0f64; d];
            for &i in idx {
                for (mj, v) in m.iter_mut().zip(x.row(i)) {
                    *mj = mj.max(v.abs());
                }
            }
            Some(
                m.into_iter()
                    .map(|v| if v > 0.0 { v } else { 1.0 })
                    .collect::<Vec<f64>>(),
            )
        }
    };
    let scaled: Vec<Vec<f64>>;
    let rows: Vec<&[f64]> = match &scale {
        None => idx.iter().map(|&i| x.row(i)).collect(),
        Some(s) => {
            scaled = idx
                .iter()
                .map(|&i| x.row(i).iter().zip(s).map(|(v, c)| v / c).collect())
                .collect();
            scaled.iter().map(Vec::as_slice).collect()
        }
    };
    let sample_w: Vec<f64> = idx.iter().map(|&i| class_weights[y[i]]).collect();

    let mut weights = Vec::with_capacity(n_classes);
    let mut biases = Vec::with_capacity(n_classes);
    let mut converged = true;
    for c in 0..n_classes {
        let targets: Vec<f64> = idx
            .iter()
            .map(|&i| f64::from(u8::from(y[i] == c)))
            .collect();
        let res = lbfgs(
            |theta| binary_objective(&rows, &targets, &sample_w, params.l2, theta),
            vec![0.0; d + 1],
            params.max_iter,
            params.tol,
            params.history.max(1),
        );
        if !res.converged {
            log::warn!(
                "logistic regression for class {c} did not converge in {} iterations",
                res.iterations
            );
            converged = false;
        }
        biases.push(res.x[d]);
        let mut w = res.x;
        w.truncate(d);
        weights.push(w);
    }
    LogisticModel {
        weights,
        biases,
        scale,
        converged,
    }
}

impl LogisticModel {
    pub fn decision_scores(&self, row: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| {
                let z: f64 = match &self.scale {
                    None => dot(w, row),
                    Some(s) => w.iter().zip(row).zip(s).map(|((w, x), c)| w * x / c).sum(),
                };
                z + b
            })
            .collect()
    }

    /// Arg-max class; ties resolve to the lowest index.
    pub fn predict(&self, row: &[f64]) -> usize {
        argmax(&self.decision_scores(row))
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in v.iter().enumerate() {
        if s > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0);
        assert!((sigmoid(-800.0)).abs() < 1e-300);
    }

    #[test]
    fn lbfgs_minimises_a_quadratic() {
        let f = |x: &[f64]| {
            let v = (x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.0).powi(2);
            (v, vec![2.0 * (x[0] - 3.0), 20.0 * (x[1] + 1.0)])
        };
        let r = lbfgs(f, vec![0.0, 0.0], 100, 1e-10, 5);
        assert!(r.converged);
        assert!((r.x[0] - 3.0).abs() < 1e-8 && (r.x[1] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn separable_data_is_fit() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                if i < 20 {
                    vec![0.0, 1.0]
                } else {
                    vec![1.0, 0.0]
                }
            })
            .collect();
        let x = Matrix::from_rows(rows).unwrap();
        let y: Vec<usize> = (0..40).map(|i| usize::from(i >= 20)).collect();
        let idx: Vec<usize> = (0..40).collect();
        let m = fit_logistic(&x, &y, 2, &idx, &[1.0, 1.0], &LogisticParams::default());
        assert!(m.converged);
        for &i in &idx {
            assert_eq!(m.predict(x.row(i)), y[i]);
        }
    }

    #[test]
    fn constant_features_predict_the_majority() {
        let x = Matrix::from_rows(vec![vec![1.0, 2.0]; 30]).unwrap();
        let y: Vec<usize> = (0..30).map(|i| usize::from(i >= 20)).collect();
        let idx: Vec<usize> = (0..30).collect();
        let m = fit_logistic(&x, &y, 2, &idx, &[1.0, 1.0], &LogisticParams::default());
        assert_eq!(m.predict(x.row(0)), 0);
    }
}
