//! Binary linear SVM trained by hinge-loss subgradient descent (Pegasos
//! schedule `eta_t = 1 / (lambda t)`) on standardized sparse inputs.
//!
//! Standardized samples `z = q*x - p` (with `q = 1/scale`, `p = mean/scale`)
//! are dense even when `x` is sparse. The weight vector is kept as
//! `w = sigma*v - rho*p` so each step touches only the nonzeros of `x`.
//! The bias is an extra always-one coordinate and is regularized with the rest.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sparse sample after the per-feature `1/scale` factor has been applied.
pub(crate) struct Row {
    pub qx: Vec<(usize, f64)>,
    /// `sum_k p_k * q_k * x_k`
    pub pqx: f64,
}

pub(crate) struct Problem<'a> {
    pub rows: &'a [Row],
    pub p: &'a [f64],
    /// `p . p`
    pub pp: f64,
}

pub(crate) struct Solution {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Objective at the end of each epoch.
    #[cfg_attr(not(test), allow(dead_code))]
    pub objectives: Vec<f64>,
}

struct State {
    v: Vec<f64>,
    v0: f64,
    sigma: f64,
    rho: f64,
    /// `v . p`
    vp: f64,
}

impl State {
    fn new(dim: usize) -> Self {
        State {
            v: vec![0.0; dim],
            v0: 0.0,
            sigma: 1.0,
            rho: 0.0,
            vp: 0.0,
        }
    }

    fn decision(&self, row: &Row, pp: f64) -> f64 {
        let vqx: f64 = row.qx.iter().map(|&(k, val)| self.v[k] * val).sum();
        self.sigma * (vqx - self.vp + self.v0) - self.rho * (row.pqx - pp)
    }

    fn reset(&mut self) {
        self.v.iter_mut().for_each(|x| *x = 0.0);
        self.v0 = 0.0;
        self.sigma = 1.0;
        self.rho = 0.0;
        self.vp = 0.0;
    }

    fn renormalize(&mut self) {
        let s = self.sigma;
        self.v.iter_mut().for_each(|x| *x *= s);
        self.v0 *= s;
        self.vp *= s;
        self.sigma = 1.0;
    }

    fn weights(&self, p: &[f64]) -> (Vec<f64>, f64) {
        let w = self
            .v
            .iter()
            .zip(p)
            .map(|(v, p)| self.sigma * v - self.rho * p)
            .collect();
        (w, self.sigma * self.v0)
    }
}

fn objective(state: &State, prob: &Problem<'_>, y: &[f64], lambda: f64) -> f64 {
    let (w, b) = state.weights(prob.p);
    let norm2 = w.iter().map(|x| x * x).sum::<f64>() + b * b;
    let hinge = prob
        .rows
        .iter()
        .zip(y)
        .map(|(r, &yi)| (1.0 - yi * state.decision(r, prob.pp)).max(0.0))
        .sum::<f64>()
        / prob.rows.len() as f64;
    0.5 * lambda * norm2 + hinge
}

/// Trains one binary classifier; `y` holds +1/-1. Returns the epoch-end
/// iterate with the lowest objective.
pub(crate) fn train_binary(
    prob: &Problem<'_>,
    y: &[f64],
    lambda: f64,
    epochs: usize,
    seed: u64,
) -> Solution {
    let m = prob.rows.len();
    let mut st = State::new(prob.p.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..m).collect();
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let mut objectives = Vec::with_capacity(epochs);
    let mut t = 0u64;

    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let margin = y[i] * st.decision(&prob.rows[i], prob.pp);
            let decay = 1.0 - 1.0 / t as f64;
            if decay == 0.0 {
                st.reset();
            } else {
                st.sigma *= decay;
                st.rho *= decay;
            }
            if margin < 1.0 {
                let step = eta * y[i];
                let g = step / st.sigma;
                for &(k, val) in &prob.rows[i].qx {
                    st.v[k] += g * val;
                }
                st.v0 += g;
                st.vp += g * prob.rows[i].pqx;
                st.rho += step;
            }
            if st.sigma < 1e-9 {
                st.renormalize();
            }
        }
        let obj = objective(&st, prob, y, lambda);
        objectives.push(obj);
        if best.as_ref().is_none_or(|(b, _, _)| obj < *b) {
            let (w, b) = st.weights(prob.p);
            best = Some((obj, w, b));
        }
    }

    match best {
        Some((_, weights, bias)) => Solution {
            weights,
            bias,
            objectives,
        },
        None => Solution {
            weights: vec![0.0; prob.p.len()],
            bias: 0.0,
            objectives,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Dense reference implementation of the same update rule.
    fn dense_pegasos(
        z: &[Vec<f64>],
        y: &[f64],
        lambda: f64,
        epochs: usize,
        seed: u64,
    ) -> (Vec<f64>, Vec<f64>) {
        let dim = z[0].len() + 1;
        let mut w = vec![0.0; dim];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..z.len()).collect();
        let mut t = 0u64;
        let mut objs = Vec::new();
        let dot =
            |w: &[f64], zi: &[f64]| zi.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + w[dim - 1];
        for _ in 0..epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let margin = y[i] * dot(&w, &z[i]);
                for x in w.iter_mut() {
                    *x *= 1.0 - 1.0 / t as f64;
                }
                if margin < 1.0 {
                    for (k, zk) in z[i].iter().enumerate() {
                        w[k] += eta * y[i] * zk;
                    }
                    w[dim - 1] += eta * y[i];
                }
            }
            let hinge: f64 = z
                .iter()
                .zip(y)
                .map(|(zi, yi)| (1.0 - yi * dot(&w, zi)).max(0.0))
                .sum::<f64>()
                / z.len() as f64;
            objs.push(0.5 * lambda * w.iter().map(|x| x * x).sum::<f64>() + hinge);
        }
        (w, objs)
    }

    #[test]
    fn sparse_updates_match_dense_reference() {
        let x = [
            vec![(0, 1.0), (2, 3.0)],
            vec![(1, 2.0)],
            vec![(0, 0.5), (1, 1.0), (2, 0.2)],
            vec![(2, 4.0)],
            vec![],
            vec![(0, 2.0), (1, 0.1)],
        ];
        let y = [1.0, -1.0, 1.0, -1.0, -1.0, 1.0];
        let mean = [0.6, 0.5, 1.2];
        let scale = [0.7, 0.8, 1.5];
        let q: Vec<f64> = scale.iter().map(|s| 1.0 / s).collect();
        let p: Vec<f64> = mean.iter().zip(&scale).map(|(m, s)| m / s).collect();
        let rows: Vec<Row> = x
            .iter()
            .map(|r| Row {
                qx: r.iter().map(|&(k, v)| (k, q[k] * v)).collect(),
                pqx: r.iter().map(|&(k, v)| p[k] * q[k] * v).sum(),
            })
            .collect();
        let z: Vec<Vec<f64>> = x
            .iter()
            .map(|r| {
                let mut d = [0.0; 3];
                for &(k, v) in r {
                    d[k] = v;
                }
                d.iter()
                    .enumerate()
                    .map(|(k, v)| (v - mean[k]) / scale[k])
                    .collect()
            })
            .collect();
        let prob = Problem {
            rows: &rows,
            p: &p,
            pp: p.iter().map(|v| v * v).sum(),
        };
        let lambda = 0.05;
        let sol = train_binary(&prob, &y, lambda, 7, 3);
        let (_, objs) = dense_pegasos(&z, &y, lambda, 7, 3);
        for (a, b) in sol.objectives.iter().zip(&objs) {
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn objective_is_finite_and_best_so_far_never_rises() {
        let rows: Vec<Row> = (0..40)
            .map(|i| {
                let v = (i as f64 * 0.37).sin();
                Row {
                    qx: vec![(i % 3, v), (3, 1.0 + v * v)],
                    pqx: 0.0,
                }
            })
            .collect();
        let y: Vec<f64> = (0..40)
            .map(|i| {
                if (i as f64 * 0.37).sin() > 0.1 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        let p = vec![0.0; 4];
        let prob = Problem {
            rows: &rows,
            p: &p,
            pp: 0.0,
        };
        let sol = train_binary(&prob, &y, 1e-4, 50, 8);
        assert_eq!(sol.objectives.len(), 50);
        assert!(sol.objectives.iter().all(|o| o.is_finite()));
        let best: Vec<f64> = sol
            .objectives
            .iter()
            .scan(f64::INFINITY, |b, &o| {
                *b = o.min(*b);
                Some(*b)
            })
            .collect();
        assert!(best.windows(2).all(|w| w[1] <= w[0]));
        assert!(sol.weights.iter().all(|w| w.is_finite()) && sol.bias.is_finite());
    }
}
