//! Kripke models with identifiers.
//!
//! Propositions are split into ordinary symbols and distinguished ID-bit
//! symbols. The global proposition order lists all ordinary symbols first
//! (declaration order), then the ID bits `p_1, p_2, ...`. Bit `p_1` is the
//! least significant bit of a node's identifier.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("nodes {0} and {1} share the same identifier")]
    DuplicateId(usize, usize),
    #[error("node {0} has out-degree {1}, exceeding delta {2}")]
    DegreeExceeded(usize, usize, usize),
    #[error("graph is not simple: {0}")]
    NotSimpleGraph(String),
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(usize, usize, usize),
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error("proposition `{0}` declared twice")]
    DuplicateProposition(String),
    #[error("model must have at least one node")]
    Empty,
    #[error("valuation lists {0} nodes but the model has {1}")]
    ValuationLength(usize, usize),
}

/// The partitioned proposition set, ordinary symbols first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct PropositionSet {
    pub ordinary: Vec<String>,
    pub distinguished: Vec<String>,
}

impl PropositionSet {
    pub fn new(ordinary: Vec<String>, distinguished: Vec<String>) -> Result<Self, ModelError> {
        let mut seen = BTreeSet::new();
        for p in ordinary.iter().chain(distinguished.iter()) {
            if !seen.insert(p.as_str()) {
                return Err(ModelError::DuplicateProposition(p.clone()));
            }
        }
        Ok(PropositionSet { ordinary, distinguished })
    }

    /// `ell` ID bits named `p1..p_ell`, no ordinary symbols.
    pub fn id_bits(ell: usize) -> Self {
        PropositionSet { ordinary: vec![], distinguished: (1..=ell).map(|i| format!("p{i}")).collect() }
    }

    pub fn len(&self) -> usize {
        self.ordinary.len() + self.distinguished.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn id_len(&self) -> usize {
        self.distinguished.len()
    }

    /// All symbols in the global order.
    pub fn all(&self) -> impl Iterator<Item = &String> + '_ {
        self.ordinary.iter().chain(self.distinguished.iter())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.all().position(|p| p == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    /// Global index of the `i`-th ID bit (0-based, LSB first).
    pub fn id_index(&self, i: usize) -> usize {
        self.ordinary.len() + i
    }
}

/// A node's identifier; `bits[0]` is `p_1`, the least significant bit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Identifier {
    pub bits: Vec<bool>,
}

impl Identifier {
    pub fn value(&self) -> u128 {
        self.bits.iter().enumerate().map(|(i, &b)| (b as u128) << i).sum()
    }

    pub fn from_value(v: u128, len: usize) -> Self {
        Identifier { bits: (0..len).map(|i| (v >> i) & 1 == 1).collect() }
    }
}

/// Displayed most significant bit first, `p_ell ... p_1`.
impl fmt::Display for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in self.bits.iter().rev() {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeModel {
    props: PropositionSet,
    /// `succ[w]` sorted by the successors' identifiers.
    succ: Vec<Vec<usize>>,
    /// `valuation[w][i]` is the truth of the `i`-th proposition in global order.
    valuation: Vec<Vec<bool>>,
}

impl KripkeModel {
    /// Builds a model. `true_props[w]` lists the propositions true at `w`.
    pub fn new(
        props: PropositionSet,
        n: usize,
        edges: &[(usize, usize)],
        true_props: &[Vec<String>],
    ) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::Empty);
        }
        if true_props.len() != n {
            return Err(ModelError::ValuationLength(true_props.len(), n));
        }
        let mut valuation = vec![vec![false; props.len()]; n];
        for (w, names) in true_props.iter().enumerate() {
            for name in names {
                let i = props.index_of(name).ok_or_else(|| ModelError::UnknownProposition(name.clone()))?;
                valuation[w][i] = true;
            }
        }
        Self::from_valuation(props, edges, valuation)
    }

    pub fn from_valuation(
        props: PropositionSet,
        edges: &[(usize, usize)],
        valuation: Vec<Vec<bool>>,
    ) -> Result<Self, ModelError> {
        let n = valuation.len();
        if n == 0 {
            return Err(ModelError::Empty);
        }
        let mut sets = vec![BTreeSet::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(ModelError::NodeOutOfRange(u, v, n));
            }
            sets[u].insert(v);
        }
        let mut model = KripkeModel { props, succ: vec![], valuation };
        let succ = sets
            .into_iter()
            .map(|s| {
                let mut v: Vec<usize> = s.into_iter().collect();
                v.sort_by_key(|&x| (model.id(x).value(), x));
                v
            })
            .collect();
        model.succ = succ;
        Ok(model)
    }

    pub fn props(&self) -> &PropositionSet {
        &self.props
    }

    pub fn node_count(&self) -> usize {
        self.valuation.len()
    }

    pub fn nodes(&self) -> std::ops::Range<usize> {
        0..self.node_count()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.succ.iter().enumerate().flat_map(|(u, s)| s.iter().map(move |&v| (u, v))).collect()
    }

    pub fn holds(&self, w: usize, prop: usize) -> bool {
        self.valuation[w][prop]
    }

    pub fn holds_named(&self, w: usize, name: &str) -> Option<bool> {
        self.props.index_of(name).map(|i| self.valuation[w][i])
    }

    pub fn id(&self, w: usize) -> Identifier {
        let off = self.props.ordinary.len();
        Identifier { bits: self.valuation[w][off..].to_vec() }
    }

    /// Successors in identifier order; position `i` (0-based) is the `(i+1)`-th neighbour.
    pub fn neighbor_order(&self, w: usize) -> &[usize] {
        &self.succ[w]
    }

    /// The `i`-th neighbour (1-based), if any.
    pub fn neighbor(&self, w: usize, i: usize) -> Option<usize> {
        i.checked_sub(1).and_then(|j| self.succ[w].get(j).copied())
    }

    pub fn out_degree(&self, w: usize) -> usize {
        self.succ[w].len()
    }

    pub fn max_out_degree(&self) -> usize {
        self.succ.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Truth of every proposition at `w`, in global order.
    pub fn local_input(&self, w: usize) -> &[bool] {
        &self.valuation[w]
    }

    /// Checks distinct identifiers and out-degree at most `delta`.
    pub fn validate(&self, delta: usize) -> Result<(), ModelError> {
        let mut seen = std::collections::HashMap::new();
        for w in self.nodes() {
            if let Some(&other) = seen.get(&self.id(w)) {
                return Err(ModelError::DuplicateId(other, w));
            }
            seen.insert(self.id(w), w);
        }
        for w in self.nodes() {
            if self.out_degree(w) > delta {
                return Err(ModelError::DegreeExceeded(w, self.out_degree(w), delta));
            }
        }
        Ok(())
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            n: self.node_count(),
            edges: self.edges(),
            ordinary: self.props.ordinary.clone(),
            distinguished: self.props.distinguished.clone(),
            true_props: self
                .nodes()
                .map(|w| self.props.all().enumerate().filter(|(i, _)| self.valuation[w][*i]).map(|(_, p)| p.clone()).collect())
                .collect(),
        }
    }
}

/// Number of bits of `k`: `floor(log2 k) + 1` (and 1 for `k = 0`).
pub fn bit_len(k: u64) -> usize {
    if k == 0 {
        1
    } else {
        64 - k.leading_zeros() as usize
    }
}

/// Undirected simple graph on nodes with ids `1..=n` (stored 0-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub n: usize,
    /// Edges as pairs of ids in `1..=n`.
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, ModelError> {
        let g = Graph { n, edges };
        g.check()?;
        Ok(g)
    }

    pub fn check(&self) -> Result<(), ModelError> {
        if self.n == 0 {
            return Err(ModelError::Empty);
        }
        let mut seen = BTreeSet::new();
        for &(u, v) in &self.edges {
            if u == 0 || v == 0 || u > self.n || v > self.n {
                return Err(ModelError::NotSimpleGraph(format!("edge {{{u}, {v}}} outside ids 1..={}", self.n)));
            }
            if u == v {
                return Err(ModelError::NotSimpleGraph(format!("self-loop at {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(ModelError::NotSimpleGraph(format!("duplicate edge {{{u}, {v}}}")));
            }
        }
        Ok(())
    }

    /// Neighbour ids of `id`, ascending.
    pub fn neighbors(&self, id: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(u, v)| if u == id { Some(v) } else if v == id { Some(u) } else { None })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn max_degree(&self) -> usize {
        (1..=self.n).map(|v| self.neighbors(v).len()).max().unwrap_or(0)
    }

    pub fn cycle(n: usize) -> Self {
        Graph { n, edges: (1..=n).map(|i| (i, i % n + 1)).collect() }
    }

    pub fn path(n: usize) -> Self {
        Graph { n, edges: (1..n).map(|i| (i, i + 1)).collect() }
    }
}

/// The Kripke model of a graph: node handle `v - 1` for id `v`, both edge
/// directions, and `bit_len(n)` ID bits holding the binary form of the id.
pub fn graph_to_kripke(graph: &Graph) -> Result<KripkeModel, ModelError> {
    graph.check()?;
    let ell = bit_len(graph.n as u64);
    let props = PropositionSet::id_bits(ell);
    let valuation = (1..=graph.n).map(|id| Identifier::from_value(id as u128, ell).bits).collect();
    let edges: Vec<(usize, usize)> = graph.edges.iter().flat_map(|&(u, v)| [(u - 1, v - 1), (v - 1, u - 1)]).collect();
    KripkeModel::from_valuation(props, &edges, valuation)
}

/// On-disk model description (JSON).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    #[serde(default)]
    pub ordinary: Vec<String>,
    #[serde(default)]
    pub distinguished: Vec<String>,
    pub true_props: Vec<Vec<String>>,
}

impl ModelFile {
    pub fn into_model(self) -> Result<KripkeModel, ModelError> {
        let props = PropositionSet::new(self.ordinary, self.distinguished)?;
        KripkeModel::new(props, self.n, &self.edges, &self.true_props)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_node_validates() {
        let m = KripkeModel::new(PropositionSet::id_bits(1), 1, &[], &[vec![]]).unwrap();
        assert!(m.validate(0).is_ok());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let m = KripkeModel::new(PropositionSet::id_bits(1), 2, &[], &[vec![], vec![]]).unwrap();
        assert_eq!(m.validate(0), Err(ModelError::DuplicateId(0, 1)));
    }

    #[test]
    fn directed_cycle_degree() {
        let m = KripkeModel::new(
            PropositionSet::id_bits(2),
            3,
            &[(0, 1), (1, 2), (2, 0)],
            &[named(&["p1"]), named(&["p2"]), named(&["p1", "p2"])],
        )
        .unwrap();
        assert!(m.validate(1).is_ok());
        assert!(matches!(m.validate(0), Err(ModelError::DegreeExceeded(_, 1, 0))));
    }

    #[test]
    fn neighbours_sorted_by_identifier() {
        // succ IDs 111, 000, 010 given out of order
        let tp = vec![named(&["p1"]), named(&["p1", "p2", "p3"]), named(&[]), named(&["p2"])];
        let m = KripkeModel::new(PropositionSet::id_bits(3), 4, &[(0, 1), (0, 2), (0, 3)], &tp).unwrap();
        let ids: Vec<String> = m.neighbor_order(0).iter().map(|&v| m.id(v).to_string()).collect();
        assert_eq!(ids, ["000", "010", "111"]);
        let tp2 = vec![named(&[]), named(&["p1", "p2"]), named(&["p1"]), named(&["p2"])];
        let m2 = KripkeModel::new(PropositionSet::id_bits(2), 4, &[(0, 1), (0, 2), (0, 3)], &tp2).unwrap();
        let ids2: Vec<String> = m2.neighbor_order(0).iter().map(|&v| m2.id(v).to_string()).collect();
        assert_eq!(ids2, ["01", "10", "11"]);
        assert!(m2.neighbor_order(1).is_empty());
    }

    #[test]
    fn local_input_follows_global_order() {
        let props = PropositionSet::new(named(&["q"]), named(&["p1", "p2"])).unwrap();
        let m = KripkeModel::new(props, 1, &[], &[named(&["q", "p2"])]).unwrap();
        assert_eq!(m.local_input(0), &[true, false, true]);
        assert_eq!(m.id(0).to_string(), "10");
        let m1 = KripkeModel::new(PropositionSet::id_bits(2), 1, &[], &[named(&["p2"])]).unwrap();
        assert_eq!(m1.local_input(0), &[false, true]);
    }

    #[test]
    fn graph_models() {
        let m = graph_to_kripke(&Graph::new(1, vec![]).unwrap()).unwrap();
        assert_eq!(m.props().id_len(), 1);
        assert_eq!(m.id(0).to_string(), "1");
        let m2 = graph_to_kripke(&Graph::new(2, vec![(1, 2)]).unwrap()).unwrap();
        assert_eq!(m2.props().id_len(), 2);
        assert_ne!(m2.id(0), m2.id(1));
        let m5 = graph_to_kripke(&Graph::path(5)).unwrap();
        assert_eq!(m5.props().id_len(), 3);
        assert!(m5.validate(2).is_ok());
        assert_eq!(m5.id(4).to_string(), "101");
    }

    #[test]
    fn non_simple_graphs_rejected() {
        assert!(matches!(Graph::new(2, vec![(1, 1)]), Err(ModelError::NotSimpleGraph(_))));
        assert!(matches!(Graph::new(2, vec![(1, 2), (2, 1)]), Err(ModelError::NotSimpleGraph(_))));
    }

    #[test]
    fn model_file_round_trip() {
        let m = graph_to_kripke(&Graph::cycle(4)).unwrap();
        let text = serde_json::to_string(&m.to_file()).unwrap();
        let back: ModelFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_model().unwrap(), m);
    }

    #[test]
    fn bit_lengths() {
        assert_eq!(bit_len(1), 1);
        assert_eq!(bit_len(2), 2);
        assert_eq!(bit_len(4), 3);
        assert_eq!(bit_len(7), 3);
        assert_eq!(bit_len(16), 5);
    }
}
