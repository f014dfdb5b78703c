use rand::Rng;

use super::config::EvolutionConfig;
use super::genome::{ConnGene, Genome};

/// NEAT crossover. The child takes the fitter parent's structure (ties go
/// to `a`); each gene present in both parents is copied from either one
/// with equal probability, node biases included.
pub fn crossover<R: Rng>(a: &Genome, b: &Genome, rng: &mut R) -> Genome {
    let fa = a.fitness.unwrap_or(f64::NEG_INFINITY);
    let fb = b.fitness.unwrap_or(f64::NEG_INFINITY);
    let (fit, other) = if fb > fa { (b, a) } else { (a, b) };
    let mut child = fit.clone();
    child.fitness = None;
    for c in child.conns_mut() {
        if let Some(o) = other.conn(c.innovation) {
            if rng.gen::<bool>() {
                *c = *o;
            }
        }
    }
    for n in child.nodes_mut() {
        if let Some(o) = other.node(n.id) {
            if rng.gen::<bool>() {
                n.bias = o.bias;
            }
        }
    }
    child
}

/// `c_e·E/N + c_d·D/N + c_w·W̄` over connection genes aligned by
/// innovation number, with `N` the larger gene count (at least 1).
pub fn compatibility_distance(a: &Genome, b: &Genome, config: &EvolutionConfig) -> f64 {
    let (ca, cb) = (a.conns(), b.conns());
    let max_a = ca.last().map(|c| c.innovation);
    let max_b = cb.last().map(|c| c.innovation);
    let (mut excess, mut disjoint, mut matching, mut wdiff) = (0usize, 0usize, 0usize, 0.0);
    let classify = |c: &ConnGene, other_max: Option<u64>| !matches!(other_max, Some(m) if c.innovation <= m);
    let (mut i, mut j) = (0, 0);
    while i < ca.len() || j < cb.len() {
        match (ca.get(i), cb.get(j)) {
            (Some(x), Some(y)) if x.innovation == y.innovation => {
                matching += 1;
                wdiff += (x.weight - y.weight).abs();
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x.innovation < y.innovation => {
                disjoint += 1;
                i += 1;
            }
            (Some(_), Some(_)) => {
                disjoint += 1;
                j += 1;
            }
            (Some(x), None) => {
                if classify(x, max_b) {
                    excess += 1;
                } else {
                    disjoint += 1;
                }
                i += 1;
            }
            (None, Some(y)) => {
                if classify(y, max_a) {
                    excess += 1;
                } else {
                    disjoint += 1;
                }
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    let n = ca.len().max(cb.len()).max(1) as f64;
    let mean_w = if matching > 0 { wdiff / matching as f64 } else { 0.0 };
    config.c_excess * excess as f64 / n + config.c_disjoint * disjoint as f64 / n + config.c_weight * mean_w
}
