//! Executable phenotype of a goal-network genome: three normalized
//! measurements in, three goal weights out.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::neat::{Genome, NodeId, NodeKind};
use crate::policy::GoalVector;

/// Every non-input node applies the clamped linear response
/// `clamp(bias + Σ w·x, -1, 1)`.
pub fn clamped_linear(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
struct NodeEval {
    slot: usize,
    bias: f64,
    incoming: Vec<(usize, f64)>,
}

/// Topologically ordered feedforward network.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedForwardNet {
    slots: usize,
    inputs: [usize; 3],
    outputs: [usize; 3],
    order: Vec<NodeEval>,
    node_ids: Vec<NodeId>,
}

impl FeedForwardNet {
    /// Decodes the enabled subgraph of `genome`, dropping nodes that cannot
    /// influence any output.
    pub fn decode(genome: &Genome) -> Result<Self> {
        Self::decode_with(genome, true)
    }

    pub(crate) fn decode_with(genome: &Genome, prune: bool) -> Result<Self> {
        genome.validate()?;
        let enabled: Vec<_> = genome.conns().iter().filter(|c| c.enabled).collect();

        let outputs: Vec<NodeId> = nodes_of(genome, NodeKind::Output);
        let inputs: Vec<NodeId> = nodes_of(genome, NodeKind::Input);
        let keep: HashSet<NodeId> = if prune {
            let mut keep: HashSet<NodeId> = outputs.iter().copied().collect();
            let mut stack: Vec<NodeId> = outputs.clone();
            while let Some(n) = stack.pop() {
                for c in enabled.iter().filter(|c| c.dst == n) {
                    if keep.insert(c.src) {
                        stack.push(c.src);
                    }
                }
            }
            keep.extend(inputs.iter().copied());
            keep
        } else {
            genome.nodes().iter().map(|n| n.id).collect()
        };

        let mut node_ids: Vec<NodeId> = genome
            .nodes()
            .iter()
            .map(|n| n.id)
            .filter(|id| keep.contains(id))
            .collect();
        node_ids.sort_unstable();
        let slot: HashMap<NodeId, usize> = node_ids.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let edges: Vec<_> = enabled
            .iter()
            .filter(|c| keep.contains(&c.src) && keep.contains(&c.dst))
            .collect();

        // Kahn's algorithm; ties resolved by ascending node id so decoding is
        // deterministic.
        let mut indeg: HashMap<NodeId, usize> = node_ids.iter().map(|&n| (n, 0)).collect();
        for c in &edges {
            *indeg.get_mut(&c.dst).expect("kept") += 1;
        }
        let mut ready: std::collections::BTreeSet<NodeId> =
            indeg.iter().filter(|(_, &d)| d == 0).map(|(&n, _)| n).collect();
        let mut order = Vec::with_capacity(node_ids.len());
        while let Some(n) = ready.pop_first() {
            order.push(n);
            for c in edges.iter().filter(|c| c.src == n) {
                let d = indeg.get_mut(&c.dst).expect("kept");
                *d -= 1;
                if *d == 0 {
                    ready.insert(c.dst);
                }
            }
        }
        if order.len() != node_ids.len() {
            return Err(Error::Decode("enabled connections form a cycle".into()));
        }

        let evals = order
            .into_iter()
            .filter(|n| genome.node(*n).map(|g| g.kind) != Some(NodeKind::Input))
            .map(|n| NodeEval {
                slot: slot[&n],
                bias: genome.node(n).expect("known").bias,
                incoming: edges
                    .iter()
                    .filter(|c| c.dst == n)
                    .map(|c| (slot[&c.src], c.weight))
                    .collect(),
            })
            .collect();
        let to_slots = |ids: &[NodeId]| -> [usize; 3] { std::array::from_fn(|i| slot[&ids[i]]) };
        Ok(FeedForwardNet {
            slots: node_ids.len(),
            inputs: to_slots(&inputs),
            outputs: to_slots(&outputs),
            order: evals,
            node_ids,
        })
    }

    /// Maps normalized `(ammo, health, kills)` to a goal vector.
    pub fn activate(&self, inputs: [f64; 3]) -> GoalVector {
        let mut values = vec![0.0; self.slots];
        GoalVector::clamped(self.activate_into(inputs, &mut values))
    }

    fn activate_into(&self, inputs: [f64; 3], values: &mut [f64]) -> [f64; 3] {
        for (slot, x) in self.inputs.iter().zip(inputs) {
            values[*slot] = x;
        }
        for node in &self.order {
            let sum = node.bias + node.incoming.iter().map(|&(s, w)| w * values[s]).sum::<f64>();
            values[node.slot] = clamped_linear(sum);
        }
        self.outputs.map(|s| values[s])
    }

    /// Ids of the nodes that survived pruning, ascending.
    pub fn node_ids(&self) -> &[NodeId] {
        &self.node_ids
    }

    pub fn connection_count(&self) -> usize {
        self.order.iter().map(|n| n.incoming.len()).sum()
    }
}

fn nodes_of(genome: &Genome, kind: NodeKind) -> Vec<NodeId> {
    genome.nodes().iter().filter(|n| n.kind == kind).map(|n| n.id).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neat::{ConnGene, NodeGene};
    use proptest::prelude::*;

    fn conn(innovation: u64, src: NodeId, dst: NodeId, weight: f64) -> ConnGene {
        ConnGene {
            innovation,
            src,
            dst,
            weight,
            enabled: true,
        }
    }

    fn genome(hidden: &[(NodeId, f64)], out_bias: [f64; 3], conns: Vec<ConnGene>) -> Genome {
        let mut nodes: Vec<NodeGene> = (0..3)
            .map(|id| NodeGene {
                id,
                bias: 0.0,
                kind: NodeKind::Input,
            })
            .collect();
        nodes.extend((0..3).map(|i| NodeGene {
            id: 3 + i,
            bias: out_bias[i as usize],
            kind: NodeKind::Output,
        }));
        nodes.extend(hidden.iter().map(|&(id, bias)| NodeGene {
            id,
            bias,
            kind: NodeKind::Hidden,
        }));
        Genome::from_genes(nodes, conns).unwrap()
    }

    #[test]
    fn zero_genome_outputs_zero() {
        let net = FeedForwardNet::decode(&Genome::bare()).unwrap();
        assert_eq!(net.activate([0.3, 0.9, 0.1]).as_array(), &[0.0; 3]);
    }

    #[test]
    fn single_layer_computes_clamped_affine() {
        let g = genome(
            &[],
            [0.1, -0.2, 0.0],
            vec![
                conn(0, 0, 3, 0.5),
                conn(1, 1, 3, 0.25),
                conn(2, 2, 4, -1.0),
                conn(3, 1, 5, 30.0),
            ],
        );
        let out = FeedForwardNet::decode(&g).unwrap().activate([0.4, 0.8, 0.3]);
        let [a, h, k] = *out.as_array();
        assert!((a - (0.1 + 0.2 + 0.2)).abs() < 1e-12);
        assert!((h - (-0.2 - 0.3)).abs() < 1e-12);
        assert_eq!(k, 1.0, "saturates");
    }

    #[test]
    fn max_weight_saturates_and_identity_inside_clamp() {
        let g = genome(&[], [0.0; 3], vec![conn(0, 0, 3, 30.0), conn(1, 1, 4, 0.3)]);
        let out = FeedForwardNet::decode(&g).unwrap().activate([1.0, 1.0, 0.0]);
        assert_eq!(out.as_array()[0], 1.0);
        assert!((out.as_array()[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn disabled_connection_is_absent() {
        let mut c = conn(1, 1, 3, 5.0);
        c.enabled = false;
        let g = genome(&[], [0.0; 3], vec![conn(0, 0, 3, 0.5), c]);
        let net = FeedForwardNet::decode(&g).unwrap();
        assert_eq!(net.connection_count(), 1);
        assert_eq!(net.activate([0.2, 1.0, 0.0]).as_array()[0], 0.1);
    }

    #[test]
    fn hidden_chain_on_ammo_to_kill_goal() {
        // ammo -> h(bias 0.1, w 2.0) -> kills goal (w -0.5, out bias 0.2)
        let g = genome(
            &[(6, 0.1)],
            [0.0, 0.0, 0.2],
            vec![conn(0, 0, 6, 2.0), conn(1, 6, 5, -0.5)],
        );
        let net = FeedForwardNet::decode(&g).unwrap();
        // x = 0.3: h = clamp(0.6 + 0.1) = 0.7; out = clamp(-0.35 + 0.2) = -0.15
        let k = net.activate([0.3, 0.0, 0.0]).as_array()[2];
        assert!((k + 0.15).abs() < 1e-12);
        // x = 0.9: h = clamp(1.9) = 1.0; out = -0.5 + 0.2 = -0.3
        let k = net.activate([0.9, 0.0, 0.0]).as_array()[2];
        assert!((k + 0.3).abs() < 1e-12);
    }

    #[test]
    fn dead_end_nodes_are_pruned() {
        let g = genome(
            &[(6, 0.5), (7, 0.0)],
            [0.0; 3],
            vec![conn(0, 0, 6, 1.0), conn(1, 1, 7, 1.0), conn(2, 7, 4, 1.0)],
        );
        let net = FeedForwardNet::decode(&g).unwrap();
        assert_eq!(net.node_ids(), &[0, 1, 2, 3, 4, 5, 7]);
    }

    #[test]
    fn cycle_is_a_decode_error() {
        let g = genome(
            &[(6, 0.0), (7, 0.0)],
            [0.0; 3],
            vec![
                conn(0, 0, 6, 1.0),
                conn(1, 6, 7, 1.0),
                conn(2, 7, 6, 1.0),
                conn(3, 7, 3, 1.0),
            ],
        );
        assert!(matches!(FeedForwardNet::decode(&g), Err(Error::Decode(_))));
    }

    /// Random acyclic genomes: hidden node ids define a topological order and
    /// connections only go forward in it.
    fn arb_genome() -> impl Strategy<Value = Genome> {
        let hidden = 0usize..5;
        hidden
            .prop_flat_map(|h| {
                let n = 6 + h;
                let pairs = prop::collection::vec((0..n, 0..n, -30.0f64..30.0, any::<bool>()), 0..25);
                let biases = prop::collection::vec(-30.0f64..30.0, n);
                (Just(h), pairs, biases)
            })
            .prop_map(|(h, pairs, biases)| {
                // order: inputs 0..3, hidden 6..6+h, outputs 3..6
                let rank = |id: usize| -> usize {
                    match id {
                        0..=2 => 0,
                        3..=5 => 100,
                        _ => id,
                    }
                };
                let mut seen = HashSet::new();
                let mut conns = Vec::new();
                for (s, d, w, e) in pairs {
                    if rank(s) < rank(d) && seen.insert((s, d)) {
                        conns.push(ConnGene {
                            innovation: conns.len() as u64,
                            src: s as NodeId,
                            dst: d as NodeId,
                            weight: w,
                            enabled: e,
                        });
                    }
                }
                let hidden: Vec<(NodeId, f64)> = (0..h).map(|i| ((6 + i) as NodeId, biases[6 + i])).collect();
                genome(&hidden, [biases[3], biases[4], biases[5]], conns)
            })
    }

    proptest! {
        #[test]
        fn outputs_stay_in_range_and_pruning_is_sound(
            g in arb_genome(),
            x in prop::array::uniform3(0.0f64..=1.0),
        ) {
            let pruned = FeedForwardNet::decode(&g).unwrap();
            let full = FeedForwardNet::decode_with(&g, false).unwrap();
            let a = pruned.activate(x);
            prop_assert!(a.as_array().iter().all(|v| (-1.0..=1.0).contains(v)));
            prop_assert_eq!(a, full.activate(x));
            prop_assert_eq!(a, pruned.activate(x));
            prop_assert_eq!(pruned, FeedForwardNet::decode(&g).unwrap());
        }
    }
}
