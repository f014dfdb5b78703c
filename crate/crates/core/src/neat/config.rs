use crate::error::{Error, Result};
use crate::kv::{parse_value, KvMap};

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    pub add_connection: f64,
    pub delete_connection: f64,
    pub add_node: f64,
    pub delete_node: f64,
    /// Per-gene probability of a gaussian perturbation.
    pub weight_mutation: f64,
    /// Per-gene probability of a fresh uniform draw in the weight range.
    pub weight_replacement: f64,
    pub weight_sigma: f64,
    pub episodes_per_eval: usize,
    pub c_excess: f64,
    pub c_disjoint: f64,
    pub c_weight: f64,
    pub compatibility_threshold: f64,
    /// Generations without improvement before a species is dropped.
    pub stagnation: usize,
    /// Best members of each species copied unchanged.
    pub elitism: usize,
    /// Fraction of each species allowed to parent offspring.
    pub survival_fraction: f64,
    /// Probability that a non-elite child comes from crossover rather than
    /// cloning a single parent.
    pub crossover_rate: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population_size: 50,
            generations: 100,
            add_connection: 0.15,
            delete_connection: 0.1,
            add_node: 0.15,
            delete_node: 0.1,
            weight_mutation: 0.8,
            weight_replacement: 0.02,
            weight_sigma: 1.0,
            episodes_per_eval: 8,
            c_excess: 1.0,
            c_disjoint: 1.0,
            c_weight: 0.5,
            compatibility_threshold: 3.0,
            stagnation: 15,
            elitism: 2,
            survival_fraction: 0.2,
            crossover_rate: 0.75,
        }
    }
}

impl EvolutionConfig {
    pub fn evaluations(&self) -> usize {
        self.population_size * self.generations
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("add_connection", self.add_connection),
            ("delete_connection", self.delete_connection),
            ("add_node", self.add_node),
            ("delete_node", self.delete_node),
            ("weight_mutation", self.weight_mutation),
            ("weight_replacement", self.weight_replacement),
            ("survival_fraction", self.survival_fraction),
            ("crossover_rate", self.crossover_rate),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is not a probability")));
            }
        }
        if self.weight_mutation + self.weight_replacement > 1.0 {
            return Err(Error::Config("weight_mutation + weight_replacement exceeds 1".into()));
        }
        if self.population_size == 0 || self.episodes_per_eval == 0 {
            return Err(Error::Config(
                "population_size and episodes_per_eval must be positive".into(),
            ));
        }
        if !(self.weight_sigma >= 0.0) || !(self.compatibility_threshold > 0.0) {
            return Err(Error::Config(
                "weight_sigma must be >= 0 and compatibility_threshold > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn to_kv(&self) -> KvMap {
        let mut kv = KvMap::new();
        kv.set("population_size", self.population_size);
        kv.set("generations", self.generations);
        kv.set("add_connection", self.add_connection);
        kv.set("delete_connection", self.delete_connection);
        kv.set("add_node", self.add_node);
        kv.set("delete_node", self.delete_node);
        kv.set("weight_mutation", self.weight_mutation);
        kv.set("weight_replacement", self.weight_replacement);
        kv.set("weight_sigma", self.weight_sigma);
        kv.set("episodes_per_eval", self.episodes_per_eval);
        kv.set("c_excess", self.c_excess);
        kv.set("c_disjoint", self.c_disjoint);
        kv.set("c_weight", self.c_weight);
        kv.set("compatibility_threshold", self.compatibility_threshold);
        kv.set("stagnation", self.stagnation);
        kv.set("elitism", self.elitism);
        kv.set("survival_fraction", self.survival_fraction);
        kv.set("crossover_rate", self.crossover_rate);
        kv
    }

    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value;
        match key {
            "population_size" => self.population_size = parse_value(key, v)?,
            "generations" => self.generations = parse_value(key, v)?,
            "add_connection" => self.add_connection = parse_value(key, v)?,
            "delete_connection" => self.delete_connection = parse_value(key, v)?,
            "add_node" => self.add_node = parse_value(key, v)?,
            "delete_node" => self.delete_node = parse_value(key, v)?,
            "weight_mutation" => self.weight_mutation = parse_value(key, v)?,
            "weight_replacement" => self.weight_replacement = parse_value(key, v)?,
            "weight_sigma" => self.weight_sigma = parse_value(key, v)?,
            "episodes_per_eval" => self.episodes_per_eval = parse_value(key, v)?,
            "c_excess" => self.c_excess = parse_value(key, v)?,
            "c_disjoint" => self.c_disjoint = parse_value(key, v)?,
            "c_weight" => self.c_weight = parse_value(key, v)?,
            "compatibility_threshold" => self.compatibility_threshold = parse_value(key, v)?,
            "stagnation" => self.stagnation = parse_value(key, v)?,
            "elitism" => self.elitism = parse_value(key, v)?,
            "survival_fraction" => self.survival_fraction = parse_value(key, v)?,
            "crossover_rate" => self.crossover_rate = parse_value(key, v)?,
            other => return Err(Error::Config(format!("unknown evolution key `{other}`"))),
        }
        Ok(())
    }

    pub fn from_kv(kv: &KvMap) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in kv.iter() {
            cfg.apply(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
