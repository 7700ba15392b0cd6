//! Two-coordinate descent for the dual of an intercept-carrying linear SVM
//! with general row bounds:
//!
//! ```text
//! min_α  ½ αᵀQα − lᵀα    s.t.  Σ s_r α_r = 0,   0 ≤ α_r ≤ u_r
//! Q_rs = s_r s_s ⟨x_r, x_s⟩
//! ```
//!
//! Hinge rows carry `l_r = 1, u_r = C`; hard sign constraints carry
//! `l_r = 0, u_r = ∞`. Working pairs are chosen by the second-order rule of
//! Fan, Chen and Lin (maximal violating index, then best predicted decrease).

use std::borrow::Cow;

use super::dot;

const TAU: f64 = 1e-12;
const DENSE_GRAM_LIMIT: usize = 2048;

#[derive(Debug, Clone, Copy)]
pub(crate) struct DualRow {
    pub point: usize,
    pub sign: f64,
    pub linear: f64,
    pub upper: f64,
}

enum Gram {
    Dense(Vec<f64>),
    OnDemand,
}

pub(crate) struct Smo<'a> {
    points: &'a [f64],
    dim: usize,
    rows: &'a [DualRow],
    gram: Gram,
    diag: Vec<f64>,
    pub alpha: Vec<f64>,
    grad: Vec<f64>,
    pub iterations: usize,
}

impl<'a> Smo<'a> {
    pub fn new(points: &'a [f64], dim: usize, rows: &'a [DualRow]) -> Self {
        let m = rows.len();
        let x = |r: usize| &points[rows[r].point * dim..(rows[r].point + 1) * dim];
        let gram = if m <= DENSE_GRAM_LIMIT {
            let mut k = vec![0.0; m * m];
            for r in 0..m {
                for s in r..m {
                    let v = dot(x(r), x(s));
                    k[r * m + s] = v;
                    k[s * m + r] = v;
                }
            }
            Gram::Dense(k)
        } else {
            Gram::OnDemand
        };
        let diag = (0..m).map(|r| dot(x(r), x(r))).collect();
        let grad = rows.iter().map(|r| -r.linear).collect();
        Smo { points, dim, rows, gram, diag, alpha: vec![0.0; m], grad, iterations: 0 }
    }

    fn x(&self, r: usize) -> &[f64] {
        let p = self.rows[r].point;
        &self.points[p * self.dim..(p + 1) * self.dim]
    }

    /// Kernel row `⟨x_r, x_s⟩` over all `s` (without the sign factors).
    fn kernel_row(&self, r: usize) -> Cow<'_, [f64]> {
        let m = self.rows.len();
        match &self.gram {
            Gram::Dense(k) => Cow::Borrowed(&k[r * m..(r + 1) * m]),
            Gram::OnDemand => Cow::Owned((0..m).map(|s| dot(self.x(r), self.x(s))).collect()),
        }
    }

    fn is_upper(&self, r: usize) -> bool {
        self.alpha[r] >= self.rows[r].upper
    }

    fn is_lower(&self, r: usize) -> bool {
        self.alpha[r] <= 0.0
    }

    /// Maximal KKT violation `m(α) − M(α)`; zero when no pair can move.
    pub fn violation(&self) -> f64 {
        let mut up = f64::NEG_INFINITY;
        let mut low = f64::INFINITY;
        for r in 0..self.rows.len() {
            let v = -self.rows[r].sign * self.grad[r];
            let s = self.rows[r].sign;
            if (s > 0.0 && !self.is_upper(r)) || (s < 0.0 && !self.is_lower(r)) {
                up = up.max(v);
            }
            if (s > 0.0 && !self.is_lower(r)) || (s < 0.0 && !self.is_upper(r)) {
                low = low.min(v);
            }
        }
        if up == f64::NEG_INFINITY || low == f64::INFINITY { 0.0 } else { (up - low).max(0.0) }
    }

    fn select_pair(&self, eps: f64) -> Option<(usize, usize)> {
        let m = self.rows.len();
        let mut gmax = f64::NEG_INFINITY;
        let mut i = None;
        for t in 0..m {
            let s = self.rows[t].sign;
            if s > 0.0 {
                if !self.is_upper(t) && -self.grad[t] >= gmax {
                    gmax = -self.grad[t];
                    i = Some(t);
                }
            } else if !self.is_lower(t) && self.grad[t] >= gmax {
                gmax = self.grad[t];
                i = Some(t);
            }
        }
        let i = i?;
        let si = self.rows[i].sign;
        let ki = self.kernel_row(i);
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best = f64::INFINITY;
        let mut j = None;
        for t in 0..m {
            let st = self.rows[t].sign;
            // Q_it * s_i = s_t K_it, so the libsvm expressions reduce to ±K_it.
            let q = si * st * ki[t];
            if st > 0.0 {
                if !self.is_lower(t) {
                    let diff = gmax + self.grad[t];
                    gmax2 = gmax2.max(self.grad[t]);
                    if diff > 0.0 {
                        let quad = self.diag[i] + self.diag[t] - 2.0 * si * q;
                        let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                        if obj <= best {
                            best = obj;
                            j = Some(t);
                        }
                    }
                }
            } else if !self.is_upper(t) {
                let diff = gmax - self.grad[t];
                gmax2 = gmax2.max(-self.grad[t]);
                if diff > 0.0 {
                    let quad = self.diag[i] + self.diag[t] + 2.0 * si * q;
                    let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                    if obj <= best {
                        best = obj;
                        j = Some(t);
                    }
                }
            }
        }
        if gmax + gmax2 < eps {
            return None;
        }
        j.map(|j| (i, j))
    }

    /// Runs pair updates until the KKT violation drops below `eps` or
    /// `max_iter` total updates have been made. Returns whether `eps` was met.
    pub fn run(&mut self, eps: f64, max_iter: usize) -> bool {
        while self.iterations < max_iter {
            let Some((i, j)) = self.select_pair(eps) else {
                return true;
            };
            self.update(i, j);
            self.iterations += 1;
        }
        false
    }

    fn update(&mut self, i: usize, j: usize) {
        let (si, sj) = (self.rows[i].sign, self.rows[j].sign);
        let (ci, cj) = (self.rows[i].upper, self.rows[j].upper);
        let kij = match &self.gram {
            Gram::Dense(k) => k[i * self.rows.len() + j],
            Gram::OnDemand => dot(self.x(i), self.x(j)),
        };
        let qij = si * sj * kij;
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if si != sj {
            let quad = self.diag[i] + self.diag[j] + 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let quad = self.diag[i] + self.diag[j] - 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        if di == 0.0 && dj == 0.0 {
            return;
        }
        let ki = self.kernel_row(i).into_owned();
        let kj = self.kernel_row(j).into_owned();
        for t in 0..self.rows.len() {
            let st = self.rows[t].sign;
            self.grad[t] += st * (si * ki[t] * di + sj * kj[t] * dj);
        }
    }

    /// `w = Σ α_r s_r x_r`, recomputed from the multipliers.
    pub fn primal_w(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.dim];
        for (r, row) in self.rows.iter().enumerate() {
            let a = self.alpha[r];
            if a != 0.0 {
                for (wj, xj) in w.iter_mut().zip(self.x(r)) {
                    *wj += a * row.sign * xj;
                }
            }
        }
        w
    }

    /// Dual objective `lᵀα − ½‖w‖²` (to be maximised); a valid lower bound on
    /// the primal optimum for any feasible `α`.
    pub fn dual_value(&self, w: &[f64]) -> f64 {
        let lin: f64 = self.rows.iter().zip(&self.alpha).map(|(r, a)| r.linear * a).sum();
        lin - 0.5 * dot(w, w)
    }
}
