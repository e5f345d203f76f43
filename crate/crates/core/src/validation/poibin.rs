use statrs::function::factorial::ln_binomial;

use crate::bicm::BicmModel;
use crate::error::{Error, Result};
use crate::graph::Layer;

/// Exact distribution of a sum of independent Bernoulli variables whose
/// success probabilities come in groups of equal value.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonBinomial {
    pmf: Vec<f64>,
    /// `tail[v] = P(V ≥ v)`, summed from the far end.
    tail: Vec<f64>,
}

impl PoissonBinomial {
    /// Distribution of `Σ Bernoulli(q_α)`, one trial per probability.
    pub fn new(probabilities: &[f64]) -> Self {
        Self::from_groups(probabilities.iter().map(|&q| (1, q)))
    }

    /// Distribution for `(multiplicity, probability)` groups: a binomial
    /// term per group, convolved across groups.
    pub fn from_groups<I: IntoIterator<Item = (usize, f64)>>(groups: I) -> Self {
        let mut pmf = vec![1.0];
        for (count, q) in groups {
            if count == 0 || q <= 0.0 {
                continue;
            }
            pmf = convolve(&pmf, &binomial_pmf(count, q.min(1.0)));
        }
        // Each tail value comes from whichever of the upper sum and
        // `1 − lower sum` is smaller, the one with better relative accuracy.
        let mut upper = vec![0.0; pmf.len() + 1];
        for v in (0..pmf.len()).rev() {
            upper[v] = upper[v + 1] + pmf[v];
        }
        let mut lower = 0.0;
        let mut tail = Vec::with_capacity(upper.len());
        for (v, &up) in upper.iter().enumerate() {
            tail.push(if up <= 0.5 { up } else { 1.0 - lower }.clamp(0.0, 1.0));
            if v < pmf.len() {
                lower += pmf[v];
            }
        }
        PoissonBinomial { pmf, tail }
    }

    /// Largest value with non-zero probability mass in the support bound.
    pub fn max_value(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn pmf(&self, v: usize) -> f64 {
        self.pmf.get(v).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(v, p)| v as f64 * p).sum()
    }

    /// `P(V ≥ observed)`.
    pub fn upper_tail(&self, observed: usize) -> f64 {
        self.tail.get(observed).copied().unwrap_or(0.0)
    }
}

fn binomial_pmf(n: usize, q: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if q >= 1.0 {
        out[n] = 1.0;
        return out;
    }
    let (lq, lr) = (q.ln(), (-q).ln_1p());
    for (k, slot) in out.iter_mut().enumerate() {
        let log_p = ln_binomial(n as u64, k as u64) + k as f64 * lq + (n - k) as f64 * lr;
        *slot = log_p.exp();
    }
    out
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Co-occurrence distribution of nodes `i` and `j` of `layer`: one group
/// per opposite-layer degree class with probability `p_iα p_jα`.
pub(crate) fn pair_distribution(
    model: &BicmModel,
    layer: Layer,
    i: usize,
    j: usize,
) -> Result<PoissonBinomial> {
    let ci = model.class_of(layer, i)?;
    let cj = model.class_of(layer, j)?;
    Ok(class_pair_distribution(model, layer, ci, cj))
}

pub(crate) fn class_pair_distribution(
    model: &BicmModel,
    layer: Layer,
    ci: usize,
    cj: usize,
) -> PoissonBinomial {
    let prob = |c: usize, d: usize| match layer {
        Layer::Top => model.class_probability(c, d),
        Layer::Bottom => model.class_probability(d, c),
    };
    let groups = model
        .classes(layer.opposite())
        .iter()
        .enumerate()
        .map(|(d, class)| (class.members.len(), prob(ci, d) * prob(cj, d)));
    PoissonBinomial::from_groups(groups)
}

/// `P(V ≥ observed)` for the co-occurrence of nodes `i ≠ j` of `layer`.
pub fn pair_pvalue(
    model: &BicmModel,
    layer: Layer,
    i: usize,
    j: usize,
    observed: usize,
) -> Result<f64> {
    if i == j {
        return Err(Error::InvalidArgument(format!(
            "pair needs two distinct nodes, got {i} twice"
        )));
    }
    if observed == 0 {
        model.class_of(layer, i)?;
        model.class_of(layer, j)?;
        return Ok(1.0);
    }
    Ok(pair_distribution(model, layer, i, j)?.upper_tail(observed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bicm::{fit, FitOptions};
    use crate::graph::BipartiteGraph;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn enumerate_tail(q: &[f64], observed: usize) -> f64 {
        let n = q.len();
        let mut total = 0.0;
        for mask in 0u32..(1 << n) {
            if (mask.count_ones() as usize) < observed {
                continue;
            }
            let mut p = 1.0;
            for (a, &qa) in q.iter().enumerate() {
                p *= if mask & (1 << a) != 0 { qa } else { 1.0 - qa };
            }
            total += p;
        }
        total
    }

    #[test]
    fn two_fair_coins() {
        let d = PoissonBinomial::new(&[0.5, 0.5]);
        assert!((d.upper_tail(2) - 0.25).abs() < 1e-15);
        assert!((d.upper_tail(1) - 0.75).abs() < 1e-15);
        assert_eq!(d.upper_tail(3), 0.0);
    }

    #[test]
    fn zero_is_always_reached() {
        let d = PoissonBinomial::new(&[0.1; 10]);
        assert_eq!(d.upper_tail(0), 1.0);
        assert_eq!(d.upper_tail(11), 0.0);
    }

    #[test]
    fn grouped_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let q: Vec<f64> = (0..12).map(|_| rng.gen::<f64>()).collect();
            let d = PoissonBinomial::new(&q);
            for v in 0..=13 {
                assert!((d.upper_tail(v) - enumerate_tail(&q, v)).abs() < 1e-12);
            }
            let mean: f64 = q.iter().sum();
            assert!((d.mean() - mean).abs() < 1e-12);
        }
        let groups = PoissonBinomial::from_groups([(3, 0.2), (4, 0.7), (2, 1.0), (5, 0.0)]);
        let flat = PoissonBinomial::new(&[
            0.2, 0.2, 0.2, 0.7, 0.7, 0.7, 0.7, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        ]);
        for v in 0..12 {
            assert!((groups.upper_tail(v) - flat.upper_tail(v)).abs() < 1e-14);
        }
        assert_eq!(groups.upper_tail(2), 1.0);
    }

    #[test]
    fn model_pvalues_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let mut edges = Vec::new();
        for i in 0..8 {
            for a in 0..15 {
                if rng.gen_bool(0.35) {
                    edges.push((i, a));
                }
            }
        }
        let g = BipartiteGraph::from_indices(8, 15, &edges).unwrap();
        let m = fit(&g, &FitOptions::default()).unwrap();
        for i in 0..8 {
            for j in (i + 1)..8 {
                let q: Vec<f64> = (0..15)
                    .map(|a| m.link_probability(i, a).unwrap() * m.link_probability(j, a).unwrap())
                    .collect();
                for v in [0usize, 1, 2, 4, 7, 16] {
                    let ours = pair_pvalue(&m, Layer::Top, i, j, v).unwrap();
                    assert!((ours - enumerate_tail(&q, v)).abs() < 1e-12);
                }
            }
        }
        assert!(pair_pvalue(&m, Layer::Top, 1, 1, 2).is_err());
        assert!(pair_pvalue(&m, Layer::Top, 1, 99, 2).is_err());
    }
}
