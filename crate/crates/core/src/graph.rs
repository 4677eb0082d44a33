//! Directed networks on a small labelled node set.
//!
//! A network is a bitset over the `N(N-1)` ordered dyads. Dyads are indexed
//! row-major over ordered pairs with the diagonal skipped, so dyad `(i, j)`
//! has index `i*(N-1) + j - [j > i]`. The integer value of the bitset is the
//! network's index in the state space, which makes enumeration and lookup
//! tables trivial.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest node count representable in a single 64-bit dyad word.
pub const MAX_NODES: usize = 8;

/// Default exhaustive cap: at most `2^20` networks.
pub const DEFAULT_CAP_LOG2: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dyad {
    pub i: usize,
    pub j: usize,
}

impl Dyad {
    pub fn new(i: usize, j: usize, n_nodes: usize) -> Result<Self> {
        if i == j || i >= n_nodes || j >= n_nodes {
            return Err(Error::InvalidDyad { i, j, n_nodes });
        }
        Ok(Self { i, j })
    }

    /// Canonical index of this dyad among the `N(N-1)` ordered pairs.
    #[inline]
    pub fn index(self, n_nodes: usize) -> usize {
        self.i * (n_nodes - 1) + self.j - usize::from(self.j > self.i)
    }

    /// Inverse of [`Dyad::index`].
    #[inline]
    pub fn from_index(index: usize, n_nodes: usize) -> Self {
        let i = index / (n_nodes - 1);
        let r = index % (n_nodes - 1);
        let j = if r >= i { r + 1 } else { r };
        Self { i, j }
    }
}

impl fmt::Display for Dyad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.i, self.j)
    }
}

pub fn n_dyads(n_nodes: usize) -> usize {
    n_nodes * (n_nodes - 1)
}

fn check_nodes(n_nodes: usize) -> Result<()> {
    if !(2..=MAX_NODES).contains(&n_nodes) {
        return Err(Error::UnsupportedNodeCount(n_nodes));
    }
    Ok(())
}

/// A directed network; value type, `Copy`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Network {
    n_nodes: u8,
    bits: u64,
}

impl Network {
    pub fn empty(n_nodes: usize) -> Result<Self> {
        check_nodes(n_nodes)?;
        Ok(Self { n_nodes: n_nodes as u8, bits: 0 })
    }

    pub fn complete(n_nodes: usize) -> Result<Self> {
        check_nodes(n_nodes)?;
        let m = n_dyads(n_nodes);
        Ok(Self { n_nodes: n_nodes as u8, bits: low_mask(m) })
    }

    pub fn from_bits(n_nodes: usize, bits: u64) -> Result<Self> {
        check_nodes(n_nodes)?;
        if bits & !low_mask(n_dyads(n_nodes)) != 0 {
            return Err(Error::InvalidParameter(format!(
                "bitset {bits:#x} has bits beyond the {} dyads of N={n_nodes}",
                n_dyads(n_nodes)
            )));
        }
        Ok(Self { n_nodes: n_nodes as u8, bits })
    }

    pub fn from_dyads<I>(n_nodes: usize, dyads: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Self::empty(n_nodes)?;
        for (i, j) in dyads {
            let d = Dyad::new(i, j, n_nodes)?;
            g.bits |= 1 << d.index(n_nodes);
        }
        Ok(g)
    }

    /// Unchecked constructor for the hot loops that index the state space.
    #[inline]
    pub(crate) fn from_raw(n_nodes: usize, bits: u64) -> Self {
        Self { n_nodes: n_nodes as u8, bits }
    }

    #[inline]
    pub fn n_nodes(self) -> usize {
        self.n_nodes as usize
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.bits
    }

    /// Position of this network in the canonical enumeration.
    #[inline]
    pub fn index(self) -> usize {
        self.bits as usize
    }

    #[inline]
    pub fn n_links(self) -> usize {
        self.bits.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub fn has_index(self, dyad_index: usize) -> bool {
        self.bits >> dyad_index & 1 == 1
    }

    pub fn contains(self, d: Dyad) -> bool {
        self.has_index(d.index(self.n_nodes()))
    }

    /// `σ_d` by dyad index.
    #[inline]
    pub fn toggled(self, dyad_index: usize) -> Self {
        Self { n_nodes: self.n_nodes, bits: self.bits ^ (1 << dyad_index) }
    }

    /// Toggle dyad `d`, returning the new network.
    pub fn switch_link(self, d: Dyad) -> Result<Self> {
        let n = self.n_nodes();
        Dyad::new(d.i, d.j, n)?;
        Ok(self.toggled(d.index(n)))
    }

    pub fn links(self) -> impl Iterator<Item = Dyad> {
        let n = self.n_nodes();
        BitIter(self.bits).map(move |k| Dyad::from_index(k, n))
    }

    /// Dyad indices present in the network, ascending.
    pub fn link_indices(self) -> impl Iterator<Item = usize> {
        BitIter(self.bits)
    }

    fn row_mask(self, i: usize) -> u64 {
        let m = self.n_nodes() - 1;
        low_mask(m) << (i * m)
    }

    /// `S_i(g)`: the links of `g` with source `i`.
    pub fn out_subgraph(self, i: usize) -> Result<Self> {
        let n = self.n_nodes();
        if i >= n {
            return Err(Error::NodeOutOfRange { node: i, n_nodes: n });
        }
        Ok(Self { n_nodes: self.n_nodes, bits: self.bits & self.row_mask(i) })
    }

    /// Agent `i`'s row as a compact `N-1` bit word (bit `k` is dyad `i*(N-1)+k`).
    #[inline]
    pub fn out_row(self, i: usize) -> u64 {
        let m = self.n_nodes() - 1;
        (self.bits >> (i * m)) & low_mask(m)
    }

    pub fn out_degree(self, i: usize) -> usize {
        self.out_row(i).count_ones() as usize
    }

    pub fn typed_outdegrees(self, i: usize, profile: &TypeProfile) -> Result<Vec<usize>> {
        let n = self.n_nodes();
        if i >= n {
            return Err(Error::NodeOutOfRange { node: i, n_nodes: n });
        }
        let assignment = profile.assignment().ok_or_else(|| {
            Error::InvalidParameter("typed out-degrees need a finite-N type profile".into())
        })?;
        if assignment.len() != n {
            return Err(Error::SizeMismatch(format!(
                "type profile covers {} nodes, network has {n}",
                assignment.len()
            )));
        }
        let mut counts = vec![0; profile.n_types()];
        for d in self.out_subgraph(i)?.links() {
            counts[assignment[d.j]] += 1;
        }
        Ok(counts)
    }

    /// Number of reciprocated pairs `{ij, ji} ⊆ g`.
    pub fn reciprocated_pairs(self) -> usize {
        let n = self.n_nodes();
        let mut count = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                if self.has_index(Dyad { i, j }.index(n)) && self.has_index(Dyad { i: j, j: i }.index(n)) {
                    count += 1;
                }
            }
        }
        count
    }

    /// Parse the `g:<hex>` encoding; the node count is not part of the
    /// encoding and must be supplied.
    pub fn parse(n_nodes: usize, s: &str) -> Result<Self> {
        let hex = s.strip_prefix("g:").ok_or_else(|| Error::ParseNetwork(s.to_string()))?;
        let bits = u64::from_str_radix(hex, 16).map_err(|_| Error::ParseNetwork(s.to_string()))?;
        Self::from_bits(n_nodes, bits)
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g:{:x}", self.bits)
    }
}

impl fmt::Debug for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Network(N={}, {{", self.n_nodes)?;
        for (k, d) in self.links().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "}})")
    }
}

#[inline]
fn low_mask(m: usize) -> u64 {
    if m >= 64 {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let k = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(k)
    }
}

/// The set of all networks on `N` nodes, admitted only when `2^{N(N-1)}`
/// stays under an exhaustive cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    n_nodes: usize,
}

impl StateSpace {
    pub fn new(n_nodes: usize, cap_log2: u32) -> Result<Self> {
        check_nodes(n_nodes)?;
        let log2_states = n_dyads(n_nodes) as u32;
        let platform = usize::BITS - 1;
        if log2_states > cap_log2 || log2_states > platform {
            return Err(Error::StateSpaceOverflow { log2_states, cap: cap_log2.min(platform) });
        }
        Ok(Self { n_nodes })
    }

    pub fn with_default_cap(n_nodes: usize) -> Result<Self> {
        Self::new(n_nodes, DEFAULT_CAP_LOG2)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_dyads(&self) -> usize {
        n_dyads(self.n_nodes)
    }

    pub fn len(&self) -> usize {
        1usize << self.n_dyads()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn network(&self, index: usize) -> Network {
        debug_assert!(index < self.len());
        Network::from_raw(self.n_nodes, index as u64)
    }

    pub fn iter(&self) -> impl Iterator<Item = Network> + '_ {
        (0..self.len()).map(move |k| self.network(k))
    }

    pub fn dyads(&self) -> impl Iterator<Item = Dyad> + '_ {
        (0..self.n_dyads()).map(move |k| Dyad::from_index(k, self.n_nodes))
    }
}

/// All networks on `n_nodes` nodes in canonical bitset-integer order.
pub fn enumerate_networks(n_nodes: usize, cap_log2: u32) -> Result<impl Iterator<Item = Network>> {
    let space = StateSpace::new(n_nodes, cap_log2)?;
    Ok((0..space.len()).map(move |k| Network::from_raw(n_nodes, k as u64)))
}

/// Partition of agents into `C` types, either as an explicit finite-N
/// assignment or as limiting type weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeProfile {
    n_types: usize,
    assignment: Option<Vec<usize>>,
    weights: Vec<f64>,
}

impl TypeProfile {
    pub fn from_assignment(n_types: usize, assignment: Vec<usize>) -> Result<Self> {
        if n_types == 0 {
            return Err(Error::InvalidParameter("type profile needs at least one type".into()));
        }
        if let Some(&bad) = assignment.iter().find(|&&t| t >= n_types) {
            return Err(Error::InvalidParameter(format!("type label {bad} outside 0..{n_types}")));
        }
        let n = assignment.len() as f64;
        let mut weights = vec![0.0; n_types];
        for &t in &assignment {
            weights[t] += 1.0 / n;
        }
        Ok(Self { n_types, assignment: Some(assignment), weights })
    }

    /// Contiguous blocks of the given sizes: the first `sizes[0]` agents
    /// have type 0, and so on.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let assignment = sizes.iter().enumerate().flat_map(|(r, &n)| std::iter::repeat_n(r, n)).collect();
        Self::from_assignment(sizes.len(), assignment)
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("type weights must be strictly positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("type weights sum to {total}, expected 1")));
        }
        Ok(Self { n_types: weights.len(), assignment: None, weights })
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    pub fn assignment(&self) -> Option<&[usize]> {
        self.assignment.as_deref()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Group sizes `N_r` (finite-N mode only).
    pub fn sizes(&self) -> Option<Vec<usize>> {
        self.assignment.as_ref().map(|a| {
            let mut sizes = vec![0; self.n_types];
            for &t in a {
                sizes[t] += 1;
            }
            sizes
        })
    }

    pub fn type_of(&self, node: usize) -> Option<usize> {
        self.assignment.as_ref().and_then(|a| a.get(node).copied())
    }
}

impl FromStr for Dyad {
    type Err = Error;

    /// Parses `"i,j"`; range checks happen when the dyad is used.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s.split_once(',').ok_or_else(|| Error::InvalidParameter(format!("bad dyad {s:?}")))?;
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| Error::InvalidParameter(format!("bad dyad {s:?}")));
        Ok(Self { i: parse(a)?, j: parse(b)? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(n: usize, links: &[(usize, usize)]) -> Network {
        Network::from_dyads(n, links.iter().copied()).unwrap()
    }

    #[test]
    fn switch_creates_and_removes() {
        let empty = Network::empty(2).unwrap();
        let d01 = Dyad::new(0, 1, 2).unwrap();
        let d10 = Dyad::new(1, 0, 2).unwrap();
        let g = empty.switch_link(d01).unwrap();
        assert_eq!(g, net(2, &[(0, 1)]));
        assert_eq!(g.switch_link(d01).unwrap(), empty);
        let both = g.switch_link(d10).unwrap();
        assert_eq!(both, net(2, &[(0, 1), (1, 0)]));
        let other_order = empty.switch_link(d10).unwrap().switch_link(d01).unwrap();
        assert_eq!(both, other_order);
    }

    #[test]
    fn invalid_dyads_rejected() {
        assert!(Dyad::new(1, 1, 3).is_err());
        assert!(Dyad::new(0, 3, 3).is_err());
        let g = Network::empty(3).unwrap();
        assert!(matches!(g.switch_link(Dyad { i: 2, j: 2 }), Err(Error::InvalidDyad { .. })));
        assert!(g.switch_link(Dyad { i: 0, j: 5 }).is_err());
    }

    #[test]
    fn dyad_index_roundtrip() {
        for n in 2..=MAX_NODES {
            for k in 0..n_dyads(n) {
                let d = Dyad::from_index(k, n);
                assert_ne!(d.i, d.j);
                assert_eq!(d.index(n), k);
            }
        }
        // row-major, diagonal skipped
        assert_eq!(Dyad { i: 0, j: 1 }.index(3), 0);
        assert_eq!(Dyad { i: 0, j: 2 }.index(3), 1);
        assert_eq!(Dyad { i: 1, j: 0 }.index(3), 2);
        assert_eq!(Dyad { i: 2, j: 1 }.index(3), 5);
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_networks(2, DEFAULT_CAP_LOG2).unwrap().count(), 4);
        assert_eq!(enumerate_networks(3, DEFAULT_CAP_LOG2).unwrap().count(), 64);
        assert_eq!(enumerate_networks(4, DEFAULT_CAP_LOG2).unwrap().count(), 4096);
        let n2: Vec<_> = enumerate_networks(2, DEFAULT_CAP_LOG2).unwrap().collect();
        assert_eq!(n2, vec![net(2, &[]), net(2, &[(0, 1)]), net(2, &[(1, 0)]), net(2, &[(0, 1), (1, 0)])]);
    }

    #[test]
    fn enumeration_respects_cap() {
        assert!(matches!(
            enumerate_networks(5, DEFAULT_CAP_LOG2).map(|it| it.count()),
            Ok(1_048_576)
        ));
        assert!(matches!(
            StateSpace::new(6, DEFAULT_CAP_LOG2),
            Err(Error::StateSpaceOverflow { log2_states: 30, .. })
        ));
        assert!(StateSpace::new(4, 10).is_err());
        assert!(StateSpace::new(1, 20).is_err());
    }

    #[test]
    fn enumeration_is_a_bijection() {
        let space = StateSpace::with_default_cap(3).unwrap();
        let mut seen = std::collections::HashSet::new();
        for (k, g) in space.iter().enumerate() {
            assert_eq!(g.index(), k);
            assert!(seen.insert(g));
        }
        assert_eq!(seen.len(), 64);
    }

    #[test]
    fn out_subgraph_examples() {
        assert_eq!(net(2, &[(0, 1), (1, 0)]).out_subgraph(0).unwrap(), net(2, &[(0, 1)]));
        assert_eq!(Network::empty(3).unwrap().out_subgraph(1).unwrap(), Network::empty(3).unwrap());
        assert_eq!(net(3, &[(0, 1), (0, 2), (2, 1)]).out_subgraph(2).unwrap(), net(3, &[(2, 1)]));
        assert!(net(3, &[]).out_subgraph(3).is_err());
    }

    #[test]
    fn typed_outdegree_examples() {
        let tp = TypeProfile::from_assignment(2, vec![0, 1, 1]).unwrap();
        let g = net(3, &[(0, 1), (0, 2)]);
        assert_eq!(g.typed_outdegrees(0, &tp).unwrap(), vec![0, 2]);
        assert_eq!(Network::empty(3).unwrap().typed_outdegrees(1, &tp).unwrap(), vec![0, 0]);
        let tp1 = TypeProfile::from_assignment(1, vec![0, 0]).unwrap();
        assert_eq!(net(2, &[(0, 1), (1, 0)]).typed_outdegrees(1, &tp1).unwrap(), vec![1]);
        let mismatched = TypeProfile::from_assignment(1, vec![0, 0]).unwrap();
        assert!(matches!(g.typed_outdegrees(0, &mismatched), Err(Error::SizeMismatch(_))));
    }

    #[test]
    fn type_profile_validation() {
        let tp = TypeProfile::from_sizes(&[2, 3]).unwrap();
        assert_eq!(tp.sizes().unwrap(), vec![2, 3]);
        assert_eq!(tp.assignment().unwrap(), &[0, 0, 1, 1, 1]);
        assert!(TypeProfile::from_weights(vec![0.5, 0.5]).is_ok());
        assert!(TypeProfile::from_weights(vec![0.5, 0.4]).is_err());
        assert!(TypeProfile::from_weights(vec![1.0, 0.0]).is_err());
        assert!(TypeProfile::from_assignment(2, vec![0, 2]).is_err());
    }

    #[test]
    fn hex_encoding() {
        let g = Network::complete(3).unwrap();
        assert_eq!(g.to_string(), "g:3f");
        assert_eq!(Network::parse(3, "g:3f").unwrap(), g);
        assert_eq!(Network::empty(2).unwrap().to_string(), "g:0");
        assert!(Network::parse(2, "g:ff").is_err());
        assert!(Network::parse(2, "3").is_err());
    }

    #[test]
    fn reciprocity_count() {
        assert_eq!(net(3, &[(0, 1), (1, 0), (1, 2)]).reciprocated_pairs(), 1);
        assert_eq!(Network::complete(3).unwrap().reciprocated_pairs(), 3);
    }
}
