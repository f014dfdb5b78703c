use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

pub const NUM_INPUTS: usize = 3;
pub const NUM_OUTPUTS: usize = 3;
/// Bound on every connection weight and node bias.
pub const WEIGHT_LIMIT: f64 = 30.0;

pub type NodeId = u32;
pub type Innovation = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Input,
    Hidden,
    Output,
}

impl NodeKind {
    fn tag(self) -> &'static str {
        match self {
            NodeKind::Input => "in",
            NodeKind::Hidden => "hidden",
            NodeKind::Output => "out",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeGene {
    pub id: NodeId,
    pub bias: f64,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnGene {
    pub innovation: Innovation,
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: f64,
    pub enabled: bool,
}

/// NEAT genotype of a goal network: node genes sorted by id and connection
/// genes sorted by innovation number.
#[derive(Debug, Clone, PartialEq)]
pub struct Genome {
    nodes: Vec<NodeGene>,
    conns: Vec<ConnGene>,
    pub fitness: Option<f64>,
}

pub fn clamp_weight(w: f64) -> f64 {
    w.clamp(-WEIGHT_LIMIT, WEIGHT_LIMIT)
}

impl Genome {
    /// Input ids are `0..3`, output ids `3..6`.
    pub fn input_ids() -> [NodeId; NUM_INPUTS] {
        [0, 1, 2]
    }

    pub fn output_ids() -> [NodeId; NUM_OUTPUTS] {
        [3, 4, 5]
    }

    /// Inputs and outputs only, no connections, zero biases.
    pub fn bare() -> Genome {
        let nodes = Self::input_ids()
            .into_iter()
            .map(|id| NodeGene {
                id,
                bias: 0.0,
                kind: NodeKind::Input,
            })
            .chain(Self::output_ids().into_iter().map(|id| NodeGene {
                id,
                bias: 0.0,
                kind: NodeKind::Output,
            }))
            .collect();
        Genome {
            nodes,
            conns: Vec::new(),
            fitness: None,
        }
    }

    /// Builds and validates a genome from raw genes.
    pub fn from_genes(mut nodes: Vec<NodeGene>, mut conns: Vec<ConnGene>) -> Result<Genome> {
        nodes.sort_by_key(|n| n.id);
        conns.sort_by_key(|c| c.innovation);
        let g = Genome {
            nodes,
            conns,
            fitness: None,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Decode(m));
        let count = |k| self.nodes.iter().filter(|n| n.kind == k).count();
        if count(NodeKind::Input) != NUM_INPUTS || count(NodeKind::Output) != NUM_OUTPUTS {
            return bad("genome needs exactly 3 input and 3 output nodes".into());
        }
        if self.nodes.windows(2).any(|w| w[0].id >= w[1].id) {
            return bad("duplicate or unsorted node ids".into());
        }
        if self.conns.windows(2).any(|w| w[0].innovation >= w[1].innovation) {
            return bad("duplicate or unsorted innovation numbers".into());
        }
        let kinds: HashMap<NodeId, NodeKind> = self.nodes.iter().map(|n| (n.id, n.kind)).collect();
        let mut pairs = HashSet::new();
        for c in &self.conns {
            match (kinds.get(&c.src), kinds.get(&c.dst)) {
                (Some(_), Some(NodeKind::Input)) => {
                    return bad(format!("connection {} targets an input", c.innovation))
                }
                (Some(NodeKind::Output), _) => return bad(format!("connection {} leaves an output", c.innovation)),
                (Some(_), Some(_)) => {}
                _ => return bad(format!("connection {} references a missing node", c.innovation)),
            }
            if !pairs.insert((c.src, c.dst)) {
                return bad(format!("duplicate connection {} -> {}", c.src, c.dst));
            }
            if !c.weight.is_finite() || c.weight.abs() > WEIGHT_LIMIT {
                return bad(format!("weight {} out of range", c.weight));
            }
        }
        if self
            .nodes
            .iter()
            .any(|n| !n.bias.is_finite() || n.bias.abs() > WEIGHT_LIMIT)
        {
            return bad("bias out of range".into());
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[NodeGene] {
        &self.nodes
    }

    pub fn conns(&self) -> &[ConnGene] {
        &self.conns
    }

    pub(crate) fn nodes_mut(&mut self) -> &mut Vec<NodeGene> {
        &mut self.nodes
    }

    pub(crate) fn conns_mut(&mut self) -> &mut Vec<ConnGene> {
        &mut self.conns
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeGene> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn conn(&self, innovation: Innovation) -> Option<&ConnGene> {
        self.conns
            .binary_search_by_key(&innovation, |c| c.innovation)
            .ok()
            .map(|i| &self.conns[i])
    }

    pub fn has_link(&self, src: NodeId, dst: NodeId) -> bool {
        self.conns.iter().any(|c| c.src == src && c.dst == dst)
    }

    pub(crate) fn insert_node(&mut self, node: NodeGene) {
        match self.nodes.binary_search_by_key(&node.id, |n| n.id) {
            Ok(i) => self.nodes[i] = node,
            Err(i) => self.nodes.insert(i, node),
        }
    }

    pub(crate) fn insert_conn(&mut self, conn: ConnGene) {
        match self.conns.binary_search_by_key(&conn.innovation, |c| c.innovation) {
            Ok(i) => self.conns[i] = conn,
            Err(i) => self.conns.insert(i, conn),
        }
    }

    fn successors(&self) -> HashMap<NodeId, Vec<NodeId>> {
        let mut adj: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
        for c in &self.conns {
            adj.entry(c.src).or_default().push(c.dst);
        }
        adj
    }

    /// True if `to` is reachable from `from` along any connection gene,
    /// enabled or not. Adding `to -> from` is then unsafe: a later
    /// re-enable could close a cycle.
    pub fn reaches(&self, from: NodeId, to: NodeId) -> bool {
        if from == to {
            return true;
        }
        let adj = self.successors();
        let mut stack = vec![from];
        let mut seen = HashSet::from([from]);
        while let Some(n) = stack.pop() {
            for &d in adj.get(&n).map_or(&[][..], |v| v.as_slice()) {
                if d == to {
                    return true;
                }
                if seen.insert(d) {
                    stack.push(d);
                }
            }
        }
        false
    }

    /// Whether the directed graph of all connection genes is acyclic.
    pub fn is_acyclic(&self) -> bool {
        let adj = self.successors();
        let mut indeg: HashMap<NodeId, usize> = self.nodes.iter().map(|n| (n.id, 0)).collect();
        for c in &self.conns {
            *indeg.entry(c.dst).or_default() += 1;
        }
        let mut ready: Vec<NodeId> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&n, _)| n).collect();
        let mut visited = 0;
        while let Some(n) = ready.pop() {
            visited += 1;
            for &d in adj.get(&n).map_or(&[][..], |v| v.as_slice()) {
                let deg = indeg.get_mut(&d).expect("known node");
                *deg -= 1;
                if *deg == 0 {
                    ready.push(d);
                }
            }
        }
        visited == indeg.len()
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    /// Parses the line-oriented genome format:
    ///
    /// ```text
    /// node <id> <bias> <in|hidden|out>
    /// conn <innovation> <src> <dst> <weight> <enabled:0|1>
    /// ```
    ///
    /// Blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<Genome> {
        let mut nodes = Vec::new();
        let mut conns = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = i + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |idx: usize| -> Result<&str> {
                fields
                    .get(idx)
                    .copied()
                    .ok_or_else(|| Error::parse(lineno, "missing field"))
            };
            let parse_err = |what: &str| Error::parse(lineno, format!("bad {what}"));
            match fields[0] {
                "node" if fields.len() == 4 => {
                    let kind = match num(3)? {
                        "in" => NodeKind::Input,
                        "hidden" => NodeKind::Hidden,
                        "out" => NodeKind::Output,
                        _ => return Err(parse_err("node type")),
                    };
                    nodes.push(NodeGene {
                        id: num(1)?.parse().map_err(|_| parse_err("node id"))?,
                        bias: num(2)?.parse().map_err(|_| parse_err("bias"))?,
                        kind,
                    });
                }
                "conn" if fields.len() == 6 => {
                    let enabled = match num(5)? {
                        "1" => true,
                        "0" => false,
                        _ => return Err(parse_err("enabled flag")),
                    };
                    conns.push(ConnGene {
                        innovation: num(1)?.parse().map_err(|_| parse_err("innovation"))?,
                        src: num(2)?.parse().map_err(|_| parse_err("source"))?,
                        dst: num(3)?.parse().map_err(|_| parse_err("destination"))?,
                        weight: num(4)?.parse().map_err(|_| parse_err("weight"))?,
                        enabled,
                    });
                }
                _ => return Err(Error::parse(lineno, format!("unrecognized line `{line}`"))),
            }
        }
        Genome::from_genes(nodes, conns)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Genome> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Genome::from_text(&text)
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in &self.nodes {
            writeln!(f, "node {} {} {}", n.id, n.bias, n.kind.tag())?;
        }
        for c in &self.conns {
            writeln!(
                f,
                "conn {} {} {} {} {}",
                c.innovation,
                c.src,
                c.dst,
                c.weight,
                u8::from(c.enabled)
            )?;
        }
        Ok(())
    }
}
