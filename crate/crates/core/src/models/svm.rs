//! Linear soft-margin SVM solved in the dual by SMO with second-order working
//! set selection, with per-sample box constraints `C * w_i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub c: f64,
    /// Stop once the relative duality gap is at or below this.
    pub tolerance: f64,
    /// Iteration cap; `None` means `max(10^7, 100 n)`.
    pub max_iterations: Option<usize>,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tolerance: 1e-4,
            max_iterations: None,
        }
    }
}

/// `f(x) = w . x + b`; stress when `f(x) >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LinearSvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) + self.b
    }

    /// Logistic squash of the decision value, slope 1.
    pub fn score(&self, x: &[f64]) -> f64 {
        1.0 / (1.0 + (-self.decision(x)).exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmFit {
    pub iterations: usize,
    pub primal: f64,
    pub dual: f64,
    pub relative_gap: f64,
    /// Largest first-order KKT violation at exit.
    pub kkt_violation: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

const TAU: f64 = 1e-12;

struct Smo<'a> {
    x: &'a [Vec<f64>],
    y: Vec<f64>,
    c: Vec<f64>,
    alpha: Vec<f64>,
    /// Gradient of the dual objective `0.5 a'Qa - e'a`.
    grad: Vec<f64>,
    w: Vec<f64>,
    diag: Vec<f64>,
}

impl Smo<'_> {
    fn up(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alpha[t] < self.c[t]) || (self.y[t] < 0.0 && self.alpha[t] > 0.0)
    }

    fn low(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alpha[t] > 0.0) || (self.y[t] < 0.0 && self.alpha[t] < self.c[t])
    }

    /// Working pair by maximal violation for `i` and second-order gain for `j`,
    /// with the current KKT violation `m(a) - M(a)`.
    fn select(&self) -> (Option<(usize, usize)>, f64) {
        let n = self.y.len();
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if self.up(t) {
                let v = -self.y[t] * self.grad[t];
                if v > gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        if i == usize::MAX {
            return (None, 0.0);
        }
        let mut gmin = f64::INFINITY;
        let mut best = f64::INFINITY;
        let mut j = usize::MAX;
        for t in 0..n {
            if !self.low(t) {
                continue;
            }
            let v = -self.y[t] * self.grad[t];
            gmin = gmin.min(v);
            let b = gmax - v;
            if b > 0.0 {
                let kit = dot(&self.x[i], &self.x[t]);
                let a = (self.diag[i] + self.diag[t] - 2.0 * kit).max(TAU);
                let gain = -b * b / a;
                if gain < best {
                    best = gain;
                    j = t;
                }
            }
        }
        let violation = gmax - gmin;
        if j == usize::MAX {
            (None, violation.max(0.0))
        } else {
            (Some((i, j)), violation)
        }
    }

    fn step(&mut self, i: usize, j: usize) {
        let (yi, yj) = (self.y[i], self.y[j]);
        let (ci, cj) = (self.c[i], self.c[j]);
        let (ai, aj) = (self.alpha[i], self.alpha[j]);
        let kij = dot(&self.x[i], &self.x[j]);
        let qij = yi * yj * kij;
        let (gi, gj) = (self.grad[i], self.grad[j]);
        let (mut ni, mut nj);
        if yi != yj {
            let quad = (self.diag[i] + self.diag[j] + 2.0 * qij).max(TAU);
            let delta = (-gi - gj) / quad;
            let diff = ai - aj;
            ni = ai + delta;
            nj = aj + delta;
            if diff > 0.0 {
                if nj < 0.0 {
                    nj = 0.0;
                    ni = diff;
                }
            } else if ni < 0.0 {
                ni = 0.0;
                nj = -diff;
            }
            if diff > ci - cj {
                if ni > ci {
                    ni = ci;
                    nj = ci - diff;
                }
            } else if nj > cj {
                nj = cj;
                ni = cj + diff;
            }
        } else {
            let quad = (self.diag[i] + self.diag[j] - 2.0 * qij).max(TAU);
            let delta = (gi - gj) / quad;
            let sum = ai + aj;
            ni = ai - delta;
            nj = aj + delta;
            if sum > ci {
                if ni > ci {
                    ni = ci;
                    nj = sum - ci;
                }
            } else if nj < 0.0 {
                nj = 0.0;
                ni = sum;
            }
            if sum > cj {
                if nj > cj {
                    nj = cj;
                    ni = sum - cj;
                }
            } else if ni < 0.0 {
                ni = 0.0;
                nj = sum;
            }
        }
        self.alpha[i] = ni;
        self.alpha[j] = nj;
        let (di, dj) = ((ni - ai) * yi, (nj - aj) * yj);
        let u: Vec<f64> = self.x[i].iter().zip(&self.x[j]).map(|(a, b)| di * a + dj * b).collect();
        for (wk, uk) in self.w.iter_mut().zip(&u) {
            *wk += uk;
        }
        for t in 0..self.y.len() {
            self.grad[t] += self.y[t] * dot(&self.x[t], &u);
        }
    }

    /// Mean of `-y_t G_t` over free variables, else the midpoint of the feasible range.
    fn bias(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut sum, mut free) = (0.0, 0usize);
        for t in 0..self.y.len() {
            let yg = self.y[t] * self.grad[t];
            let at_upper = self.alpha[t] >= self.c[t];
            let at_lower = self.alpha[t] <= 0.0;
            if at_upper {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if at_lower {
                if self.y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum += yg;
            }
        }
        let rho = if free > 0 { sum / free as f64 } else { (ub + lb) / 2.0 };
        -rho
    }

    fn objectives(&self, b: f64) -> (f64, f64) {
        let ww = dot(&self.w, &self.w);
        let hinge: f64 = (0..self.y.len())
            .map(|t| self.c[t] * (1.0 - self.y[t] * (dot(&self.w, &self.x[t]) + b)).max(0.0))
            .sum();
        let dual = self.alpha.iter().sum::<f64>() - 0.5 * ww;
        (0.5 * ww + hinge, dual)
    }
}

/// Minimizes `0.5 |w|^2 + C sum_i s_i max(0, 1 - y_i (w . x_i + b))`.
pub fn train_svm(x: &[Vec<f64>], y: &[u8], sample_weight: &[f64], p: &SvmParams) -> Result<(LinearSvm, SvmFit)> {
    super::require_both_classes(y)?;
    if !(p.c > 0.0 && p.c.is_finite() && p.tolerance > 0.0) {
        return Err(Error::InvalidSpec(format!("svm C {} / tolerance {}", p.c, p.tolerance)));
    }
    let n = x.len();
    let d = x[0].len();
    let mut s = Smo {
        x,
        y: y.iter().map(|&t| if t == 1 { 1.0 } else { -1.0 }).collect(),
        c: sample_weight.iter().map(|w| p.c * w).collect(),
        alpha: vec![0.0; n],
        grad: vec![-1.0; n],
        w: vec![0.0; d],
        diag: x.iter().map(|xi| dot(xi, xi)).collect(),
    };
    let cap = p.max_iterations.unwrap_or((100 * n).max(10_000_000));
    let check_every = n.max(100);
    let mut iterations = 0;
    let mut kkt_eps = 1e-3;
    loop {
        let (pair, violation) = s.select();
        let settled = pair.is_none() || violation < kkt_eps;
        if settled || iterations % check_every == 0 && iterations > 0 {
            let b = s.bias();
            let (primal, dual) = s.objectives(b);
            let gap = (primal - dual).max(0.0) / primal.abs().max(f64::MIN_POSITIVE);
            let fit = SvmFit {
                iterations,
                primal,
                dual,
                relative_gap: gap,
                kkt_violation: violation,
            };
            if gap <= p.tolerance || pair.is_none() || violation < 1e-12 {
                return Ok((LinearSvm { w: s.w.clone(), b }, fit));
            }
            if settled {
                kkt_eps = (violation / 10.0).max(1e-12);
            }
        }
        if iterations >= cap {
            let b = s.bias();
            let (primal, dual) = s.objectives(b);
            return Err(Error::Convergence {
                iterations,
                gap: (primal - dual) / primal.abs().max(f64::MIN_POSITIVE),
            });
        }
        let (i, j) = pair.expect("checked above");
        s.step(i, j);
        iterations += 1;
    }
}
