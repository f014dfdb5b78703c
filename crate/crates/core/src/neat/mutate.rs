use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::EvolutionConfig;
use super::genome::{clamp_weight, ConnGene, Genome, Innovation, NodeGene, NodeId, NodeKind, WEIGHT_LIMIT};

/// Hands out innovation numbers and hidden-node ids. Within one generation
/// the same structural change always receives the same numbers; numbers
/// are never reused.
#[derive(Debug, Clone)]
pub struct InnovationRegistry {
    next_innovation: Innovation,
    next_node: NodeId,
    links: HashMap<(NodeId, NodeId), Innovation>,
    splits: HashMap<Innovation, (NodeId, Innovation, Innovation)>,
}

impl InnovationRegistry {
    /// A registry that continues after the genes already present in
    /// `genomes`.
    pub fn after<'a>(genomes: impl IntoIterator<Item = &'a Genome>) -> Self {
        let mut reg = InnovationRegistry {
            next_innovation: 0,
            next_node: 6,
            links: HashMap::new(),
            splits: HashMap::new(),
        };
        for g in genomes {
            if let Some(c) = g.conns().last() {
                reg.next_innovation = reg.next_innovation.max(c.innovation + 1);
            }
            if let Some(n) = g.nodes().last() {
                reg.next_node = reg.next_node.max(n.id + 1);
            }
        }
        reg
    }

    pub fn new() -> Self {
        Self::after([])
    }

    /// Forgets this generation's structural changes; counters keep going.
    pub fn next_generation(&mut self) {
        self.links.clear();
        self.splits.clear();
    }

    pub fn link(&mut self, src: NodeId, dst: NodeId) -> Innovation {
        let next = &mut self.next_innovation;
        *self.links.entry((src, dst)).or_insert_with(|| {
            *next += 1;
            *next - 1
        })
    }

    /// Node id and the two innovations for splitting connection `innovation`.
    pub fn split(&mut self, conn: &ConnGene) -> (NodeId, Innovation, Innovation) {
        if let Some(&s) = self.splits.get(&conn.innovation) {
            return s;
        }
        let node = self.next_node;
        self.next_node += 1;
        let a = self.next_innovation;
        let b = a + 1;
        self.next_innovation += 2;
        self.links.insert((conn.src, node), a);
        self.links.insert((node, conn.dst), b);
        self.splits.insert(conn.innovation, (node, a, b));
        (node, a, b)
    }

    pub fn peek_innovation(&self) -> Innovation {
        self.next_innovation
    }
}

impl Default for InnovationRegistry {
    fn default() -> Self {
        Self::new()
    }
}

/// Every input wired to every output with weights drawn from
/// `N(0, sigma)`; biases zero.
pub fn initial_genome<R: Rng>(config: &EvolutionConfig, reg: &mut InnovationRegistry, rng: &mut R) -> Genome {
    let mut g = Genome::bare();
    let normal = Normal::new(0.0, config.weight_sigma.max(1e-12)).expect("finite sigma");
    for src in Genome::input_ids() {
        for dst in Genome::output_ids() {
            g.insert_conn(ConnGene {
                innovation: reg.link(src, dst),
                src,
                dst,
                weight: clamp_weight(normal.sample(rng)),
                enabled: true,
            });
        }
    }
    g
}

fn mutate_value<R: Rng>(v: f64, config: &EvolutionConfig, normal: &Normal<f64>, rng: &mut R) -> f64 {
    let r: f64 = rng.gen();
    if r < config.weight_replacement {
        rng.gen_range(-WEIGHT_LIMIT..=WEIGHT_LIMIT)
    } else if r < config.weight_replacement + config.weight_mutation {
        clamp_weight(v + normal.sample(rng))
    } else {
        v
    }
}

/// Applies one round of structural and parametric mutation. Each structural
/// operator fires independently with its configured probability; operators
/// that cannot apply are no-ops. Biases follow the same rules as weights.
pub fn mutate<R: Rng>(genome: &mut Genome, config: &EvolutionConfig, reg: &mut InnovationRegistry, rng: &mut R) {
    if rng.gen::<f64>() < config.add_node {
        add_node(genome, reg, rng);
    }
    if rng.gen::<f64>() < config.add_connection {
        add_connection(genome, config, reg, rng);
    }
    if rng.gen::<f64>() < config.delete_node {
        delete_node(genome, rng);
    }
    if rng.gen::<f64>() < config.delete_connection {
        delete_connection(genome, rng);
    }
    let normal = Normal::new(0.0, config.weight_sigma.max(1e-12)).expect("finite sigma");
    for c in genome.conns_mut() {
        c.weight = mutate_value(c.weight, config, &normal, rng);
    }
    for n in genome.nodes_mut().iter_mut().filter(|n| n.kind != NodeKind::Input) {
        n.bias = mutate_value(n.bias, config, &normal, rng);
    }
    genome.fitness = None;
}

/// Splits a random enabled connection `src -> dst` (weight `w`) into
/// `src -> new` (weight 1) and `new -> dst` (weight `w`).
pub fn add_node<R: Rng>(genome: &mut Genome, reg: &mut InnovationRegistry, rng: &mut R) -> bool {
    let enabled: Vec<ConnGene> = genome.conns().iter().filter(|c| c.enabled).copied().collect();
    let Some(&conn) = enabled.choose(rng) else {
        return false;
    };
    let (node, a, b) = reg.split(&conn);
    if genome.node(node).is_some() {
        return false;
    }
    for c in genome
        .conns_mut()
        .iter_mut()
        .filter(|c| c.innovation == conn.innovation)
    {
        c.enabled = false;
    }
    genome.insert_node(NodeGene {
        id: node,
        bias: 0.0,
        kind: NodeKind::Hidden,
    });
    genome.insert_conn(ConnGene {
        innovation: a,
        src: conn.src,
        dst: node,
        weight: 1.0,
        enabled: true,
    });
    genome.insert_conn(ConnGene {
        innovation: b,
        src: node,
        dst: conn.dst,
        weight: conn.weight,
        enabled: true,
    });
    true
}

/// Adds a new feedforward connection between a random pair of nodes,
/// trying a bounded number of pairs. Pairs whose reverse path already
/// exists (enabled or not) are rejected.
pub fn add_connection<R: Rng>(
    genome: &mut Genome,
    config: &EvolutionConfig,
    reg: &mut InnovationRegistry,
    rng: &mut R,
) -> bool {
    const ATTEMPTS: usize = 20;
    let sources: Vec<NodeId> = genome
        .nodes()
        .iter()
        .filter(|n| n.kind != NodeKind::Output)
        .map(|n| n.id)
        .collect();
    let targets: Vec<NodeId> = genome
        .nodes()
        .iter()
        .filter(|n| n.kind != NodeKind::Input)
        .map(|n| n.id)
        .collect();
    for _ in 0..ATTEMPTS {
        let (&src, &dst) = (
            sources.choose(rng).expect("inputs exist"),
            targets.choose(rng).expect("outputs exist"),
        );
        if src == dst || genome.has_link(src, dst) || genome.reaches(dst, src) {
            continue;
        }
        let normal = Normal::new(0.0, config.weight_sigma.max(1e-12)).expect("finite sigma");
        genome.insert_conn(ConnGene {
            innovation: reg.link(src, dst),
            src,
            dst,
            weight: clamp_weight(normal.sample(rng)),
            enabled: true,
        });
        return true;
    }
    false
}

pub fn delete_connection<R: Rng>(genome: &mut Genome, rng: &mut R) -> bool {
    if genome.conns().is_empty() {
        return false;
    }
    let i = rng.gen_range(0..genome.conns().len());
    genome.conns_mut().remove(i);
    true
}

/// Removes a random hidden node together with all its connections.
pub fn delete_node<R: Rng>(genome: &mut Genome, rng: &mut R) -> bool {
    let hidden: Vec<NodeId> = genome
        .nodes()
        .iter()
        .filter(|n| n.kind == NodeKind::Hidden)
        .map(|n| n.id)
        .collect();
    let Some(&id) = hidden.choose(rng) else {
        return false;
    };
    genome.nodes_mut().retain(|n| n.id != id);
    genome.conns_mut().retain(|c| c.src != id && c.dst != id);
    true
}
