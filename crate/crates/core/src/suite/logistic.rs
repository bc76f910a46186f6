//! Constrained logistic regression across heterogeneous clients: minimize the
//! average loss subject to every client's loss staying within `eps` of it.

use std::sync::Arc;

use crate::kernel::{vec_ops, DenseMatrix, DeterministicRng};
use crate::problem::{ConstraintKind, ConstraintSpec, MetricSpec, ObjectiveSpec, ProblemInstance};
use crate::scalar::Scalar;

struct ClientData<S> {
    /// `per_client x d`, one sample per row.
    features: DenseMatrix<S>,
    /// Labels in `{-1, +1}`.
    labels: Vec<S>,
}

struct LogisticData<S> {
    clients: Vec<ClientData<S>>,
    dim: usize,
}

/// `log(1 + e^u)` without overflow.
fn log1pexp<S: Scalar>(u: S) -> S {
    if u > S::zero() {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

/// `1 / (1 + e^{-u})` without overflow.
fn sigmoid<S: Scalar>(u: S) -> S {
    if u >= S::zero() {
        S::one() / (S::one() + (-u).exp())
    } else {
        let e = u.exp();
        e / (S::one() + e)
    }
}

impl<S: Scalar> LogisticData<S> {
    fn client_count(&self) -> usize {
        self.clients.len()
    }

    /// Per-client mean losses `mean_i log(1 + exp(-y_i theta^T x_i))`.
    fn client_losses(&self, theta: &[S]) -> Vec<S> {
        self.clients
            .iter()
            .map(|client| {
                let mut total = S::zero();
                for (row, &y) in (0..client.features.rows()).zip(&client.labels) {
                    let margin = -y * vec_ops::dot(client.features.row(row), theta);
                    total = total + log1pexp(margin);
                }
                total / S::of(client.labels.len() as f64)
            })
            .collect()
    }

    /// Per-client loss gradients.
    fn client_grads(&self, theta: &[S]) -> Vec<Vec<S>> {
        self.clients
            .iter()
            .map(|client| {
                let mut grad = vec![S::zero(); self.dim];
                for (row, &y) in (0..client.features.rows()).zip(&client.labels) {
                    let x = client.features.row(row);
                    let weight = -y * sigmoid(-y * vec_ops::dot(x, theta));
                    for (g, &xi) in grad.iter_mut().zip(x) {
                        *g = *g + weight * xi;
                    }
                }
                let scale = S::one() / S::of(client.labels.len() as f64);
                vec_ops::scaled(&grad, scale)
            })
            .collect()
    }

    /// Hessian of the average loss.
    fn mean_hessian(&self, theta: &[S]) -> DenseMatrix<S> {
        let d = self.dim;
        let mut hess = DenseMatrix::zeros(d, d);
        let client_weight = S::one() / S::of(self.client_count() as f64);
        for client in &self.clients {
            let sample_weight = client_weight / S::of(client.labels.len() as f64);
            for (row, &y) in (0..client.features.rows()).zip(&client.labels) {
                let x = client.features.row(row);
                let s = sigmoid(-y * vec_ops::dot(x, theta));
                let w = sample_weight * s * (S::one() - s);
                for i in 0..d {
                    let wx = w * x[i];
                    for j in 0..d {
                        hess[(i, j)] = hess[(i, j)] + wx * x[j];
                    }
                }
            }
        }
        hess
    }
}

/// Builds the constrained logistic instance.
///
/// Data generation (all draws from one stream, clients in order `1..=C`,
/// samples in order, label before features): the label consumes one uniform
/// (`u < 0.5` maps to `-1`, else `+1`); the feature vector consumes `d`
/// normals and is shifted by the client mean `0.5 * c * e_1`. At `theta = 0`
/// every client loss is `ln 2`, so each constraint starts at exactly `-eps`.
pub fn constrained_logistic<S: Scalar>(
    clients: usize,
    per_client: usize,
    dim: usize,
    eps: f64,
    seed: u64,
) -> ProblemInstance<S> {
    assert!(clients >= 2, "need at least two clients");
    assert!(per_client >= 1 && dim >= 1 && eps > 0.0);
    let mut rng = DeterministicRng::new(seed);
    let mut data = LogisticData {
        clients: Vec::with_capacity(clients),
        dim,
    };
    for c in 1..=clients {
        let shift = 0.5 * c as f64;
        let mut features = DenseMatrix::zeros(per_client, dim);
        let mut labels = Vec::with_capacity(per_client);
        for i in 0..per_client {
            labels.push(if rng.next_f64() < 0.5 {
                -S::one()
            } else {
                S::one()
            });
            for j in 0..dim {
                let mut v = rng.standard_normal();
                if j == 0 {
                    v += shift;
                }
                features[(i, j)] = S::of(v);
            }
        }
        data.clients.push(ClientData { features, labels });
    }
    let data = Arc::new(data);
    let c_count = clients;
    let eps_s = S::of(eps);

    let d_value = Arc::clone(&data);
    let value = Arc::new(move |theta: &[S]| {
        let losses = d_value.client_losses(theta);
        losses.iter().copied().sum::<S>() / S::of(c_count as f64)
    });
    let d_grad = Arc::clone(&data);
    let gradient = Arc::new(move |theta: &[S]| {
        let grads = d_grad.client_grads(theta);
        let mut mean = vec![S::zero(); dim];
        for g in &grads {
            for (m, &v) in mean.iter_mut().zip(g) {
                *m = *m + v;
            }
        }
        vec_ops::scaled(&mean, S::one() / S::of(c_count as f64))
    });
    let d_hess = Arc::clone(&data);
    let hessian = Arc::new(move |theta: &[S]| d_hess.mean_hessian(theta));

    let d_cons = Arc::clone(&data);
    let cons_value = Arc::new(move |theta: &[S]| {
        let losses = d_cons.client_losses(theta);
        let mean = losses.iter().copied().sum::<S>() / S::of(c_count as f64);
        losses.iter().map(|&l| l - mean - eps_s).collect()
    });
    let d_jac = Arc::clone(&data);
    let jacobian = Arc::new(move |theta: &[S]| {
        let grads = d_jac.client_grads(theta);
        let mut mean = vec![S::zero(); dim];
        for g in &grads {
            for (m, &v) in mean.iter_mut().zip(g) {
                *m = *m + v;
            }
        }
        let mean = vec_ops::scaled(&mean, S::one() / S::of(c_count as f64));
        DenseMatrix::from_fn(c_count, dim, |c, j| grads[c][j] - mean[j])
    });

    ProblemInstance::new(
        format!("logistic(C={clients},per_client={per_client},d={dim},eps={eps},seed={seed})"),
        ObjectiveSpec::new(dim, value, gradient)
            .with_hessian(hessian)
            .with_lower_bound(S::zero()),
        ConstraintSpec::new(c_count, ConstraintKind::Inequality, cons_value, jacobian),
        MetricSpec::identity(),
    )
}
