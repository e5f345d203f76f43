use crate::graph::BipartiteGraph;

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

/// Node-level log-likelihood `Σ b log p + (1 − b) log(1 − p)` with
/// `p_iα = e^{-(θ_i+η_α)} / (1 + e^{-(θ_i+η_α)})`.
pub fn log_likelihood(graph: &BipartiteGraph, theta: &[f64], eta: &[f64]) -> f64 {
    let mut ll = 0.0;
    for (i, &t) in theta.iter().enumerate() {
        for (a, &e) in eta.iter().enumerate() {
            let z = -(t + e);
            if graph.has_edge(i, a) {
                ll += z;
            }
            ll -= softplus(z);
        }
    }
    ll
}

/// Analytic gradient of [`log_likelihood`] with respect to `θ` and `η`:
/// `∂L/∂θ_i = ⟨k_i⟩ − k_i`, `∂L/∂η_α = ⟨h_α⟩ − h_α`.
pub fn log_likelihood_gradient(
    graph: &BipartiteGraph,
    theta: &[f64],
    eta: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let k = graph.top_degrees();
    let h = graph.bottom_degrees();
    let mut gt: Vec<f64> = k.iter().map(|&d| -(d as f64)).collect();
    let mut ge: Vec<f64> = h.iter().map(|&d| -(d as f64)).collect();
    for (i, &t) in theta.iter().enumerate() {
        for (a, &e) in eta.iter().enumerate() {
            let p = sigmoid(-(t + e));
            gt[i] += p;
            ge[a] += p;
        }
    }
    (gt, ge)
}

pub(crate) fn link_sigmoid(log_x: f64, log_y: f64) -> f64 {
    sigmoid(log_x + log_y)
}

pub(crate) fn link_softplus(log_x: f64, log_y: f64) -> f64 {
    softplus(log_x + log_y)
}
