//! The topological replay graph: a nested hash table storing transition
//! indices on edges keyed by (successor vertex, predecessor vertex),
//! plus the terminal-vertex set, per-edge visitation counts, per-vertex
//! return statistics for pseudo-terminal sampling, and age-based pruning.

use std::collections::HashMap;
use std::fmt::Write as _;

use indexmap::{IndexMap, IndexSet};
use rand::seq::index::sample as index_sample;
use rand::Rng;
use thiserror::Error;

use crate::hashing::{HashingError, ProjectionMatrix, StateKey};
use crate::rng::Prng;
use crate::types::{Transition, TransitionIndex, TransitionStore};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error(transparent)]
    Hashing(#[from] HashingError),
    #[error("pseudo-terminal distribution requested on an empty graph")]
    EmptyGraph,
}

/// How predecessors of a frontier vertex are selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredecessorMode {
    /// Uniform without replacement over the available predecessors.
    Uniform,
    /// Proportional to per-edge visitation counts, normalized over the
    /// available predecessors of the frontier vertex.
    VisitationWeighted,
}

/// How many transitions to draw from each selected edge.
/// `None` pushes every transition stored on the edge.
pub type PerEdgeBudget = Option<usize>;

#[derive(Debug, Clone, Default)]
struct ReturnStat {
    mean: f64,
    visits: u64,
}

/// Replay graph over projected state keys.
///
/// Outer map key is the successor vertex v', inner key the predecessor
/// v, so retrieving all predecessor edges of v' is one outer lookup.
/// Insertion-ordered maps keep every sampling operation deterministic
/// under a seeded RNG.
#[derive(Debug, Default)]
pub struct TopologicalGraph {
    edges: IndexMap<StateKey, IndexMap<StateKey, Vec<TransitionIndex>>>,
    vertices: IndexSet<StateKey>,
    terminal_set: IndexSet<StateKey>,
    edge_counts: HashMap<(StateKey, StateKey), u64>,
    vertex_returns: HashMap<StateKey, ReturnStat>,
    incident: HashMap<StateKey, usize>,
    index_edge: HashMap<TransitionIndex, (StateKey, StateKey)>,
    transition_count: usize,
}

impl TopologicalGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn transition_count(&self) -> usize {
        self.transition_count
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn terminal_count(&self) -> usize {
        self.terminal_set.len()
    }

    pub fn contains_vertex(&self, v: &StateKey) -> bool {
        self.vertices.contains(v)
    }

    pub fn is_terminal(&self, v: &StateKey) -> bool {
        self.terminal_set.contains(v)
    }

    pub fn vertices(&self) -> impl Iterator<Item = &StateKey> {
        self.vertices.iter()
    }

    /// Insert the transition stored at `idx`: both endpoints join V, the
    /// index is appended to edge (phi(s), phi(s')), and if the transition
    /// is terminal its successor vertex joins the terminal set. Timeout
    /// transitions never contribute to the terminal set.
    pub fn insert_transition(
        &mut self,
        idx: TransitionIndex,
        t: &Transition,
        phi: &ProjectionMatrix,
    ) -> Result<(), GraphError> {
        let v = phi.project(&t.state)?;
        let v_prime = phi.project(&t.next_state)?;

        self.vertices.insert(v.clone());
        self.vertices.insert(v_prime.clone());

        let inner = self.edges.entry(v_prime.clone()).or_default();
        let list = inner.entry(v.clone()).or_default();
        if list.is_empty() {
            *self.incident.entry(v.clone()).or_insert(0) += 1;
            *self.incident.entry(v_prime.clone()).or_insert(0) += 1;
        }
        list.push(idx);
        *self
            .edge_counts
            .entry((v.clone(), v_prime.clone()))
            .or_insert(0) += 1;
        self.index_edge.insert(idx, (v, v_prime.clone()));
        self.transition_count += 1;

        if t.terminal {
            self.terminal_set.insert(v_prime);
        }
        Ok(())
    }

    /// Sample up to `budget` distinct predecessor vertices of `v_prime`,
    /// each paired with transitions sampled without replacement from its
    /// edge list per `per_edge`. Unknown or isolated vertices yield an
    /// empty result.
    pub fn predecessor_edges(
        &self,
        v_prime: &StateKey,
        budget: usize,
        per_edge: PerEdgeBudget,
        mode: PredecessorMode,
        rng: &mut Prng,
    ) -> Vec<(StateKey, Vec<TransitionIndex>)> {
        let Some(inner) = self.edges.get(v_prime) else {
            return Vec::new();
        };
        let n = inner.len();
        if n == 0 {
            return Vec::new();
        }
        let chosen: Vec<usize> = if n <= budget {
            (0..n).collect()
        } else {
            match mode {
                PredecessorMode::Uniform => index_sample(rng, n, budget).into_vec(),
                PredecessorMode::VisitationWeighted => {
                    let weights: Vec<f64> = inner
                        .iter()
                        .map(|(v, _)| {
                            self.edge_counts
                                .get(&(v.clone(), v_prime.clone()))
                                .copied()
                                .unwrap_or(0) as f64
                        })
                        .collect();
                    weighted_sample_without_replacement(&weights, budget, rng)
                }
            }
        };
        chosen
            .into_iter()
            .map(|i| {
                let (v, list) = inner.get_index(i).expect("index in range");
                let take = per_edge.unwrap_or(list.len()).min(list.len()).max(1);
                let picked = if take >= list.len() {
                    list.clone()
                } else {
                    index_sample(rng, list.len(), take)
                        .into_iter()
                        .map(|j| list[j])
                        .collect()
                };
                (v.clone(), picked)
            })
            .collect()
    }

    /// min(n, |V_E|) distinct terminal vertices, uniform without
    /// replacement; empty when no terminal vertex is known yet.
    pub fn sample_terminal_roots(&self, n: usize, rng: &mut Prng) -> Vec<StateKey> {
        let total = self.terminal_set.len();
        if total == 0 || n == 0 {
            return Vec::new();
        }
        if total <= n {
            return self.terminal_set.iter().cloned().collect();
        }
        index_sample(rng, total, n)
            .into_iter()
            .map(|i| self.terminal_set.get_index(i).unwrap().clone())
            .collect()
    }

    /// Fold an episode's accumulated return G into the running mean U(v).
    pub fn update_vertex_return(&mut self, v: &StateKey, g: f64) {
        let stat = self.vertex_returns.entry(v.clone()).or_default();
        stat.visits += 1;
        stat.mean += (g - stat.mean) / stat.visits as f64;
    }

    pub fn vertex_return(&self, v: &StateKey) -> Option<f64> {
        self.vertex_returns.get(v).map(|s| s.mean)
    }

    /// Boltzmann distribution over V proportional to exp(U(v)/kappa),
    /// computed with max-subtraction. Vertices with no recorded return
    /// use U(v) = 0. Entries follow the deterministic vertex order.
    pub fn pseudo_terminal_distribution(
        &self,
        kappa: f64,
    ) -> Result<Vec<(StateKey, f64)>, GraphError> {
        if self.vertices.is_empty() {
            return Err(GraphError::EmptyGraph);
        }
        assert!(kappa > 0.0, "temperature must be positive");
        let us: Vec<f64> = self
            .vertices
            .iter()
            .map(|v| self.vertex_return(v).unwrap_or(0.0) / kappa)
            .collect();
        let max = us.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = us.iter().map(|u| (u - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        Ok(self
            .vertices
            .iter()
            .cloned()
            .zip(exps.into_iter().map(|e| e / z))
            .collect())
    }

    /// Sample up to n distinct pseudo-terminal roots from the Boltzmann
    /// distribution over U(v).
    pub fn sample_pseudo_roots(
        &self,
        n: usize,
        kappa: f64,
        rng: &mut Prng,
    ) -> Result<Vec<StateKey>, GraphError> {
        let dist = self.pseudo_terminal_distribution(kappa)?;
        let weights: Vec<f64> = dist.iter().map(|(_, p)| *p).collect();
        let take = n.min(dist.len());
        Ok(weighted_sample_without_replacement(&weights, take, rng)
            .into_iter()
            .map(|i| dist[i].0.clone())
            .collect())
    }

    /// Drop expired members from `batch` and from their edge lists.
    /// Edges emptied by pruning leave the graph; vertices with no
    /// incident edges leave V and the terminal set.
    pub fn prune_batch(
        &mut self,
        store: &TransitionStore,
        batch: Vec<TransitionIndex>,
    ) -> Vec<TransitionIndex> {
        let mut surviving = Vec::with_capacity(batch.len());
        for idx in batch {
            if store.is_expired(idx).unwrap_or(true) {
                self.remove_transition(idx);
            } else {
                surviving.push(idx);
            }
        }
        surviving
    }

    /// Full-sweep prune over every edge; used as a memory safety valve
    /// when the stored transition count grows past twice the capacity.
    pub fn full_prune(&mut self, store: &TransitionStore) {
        let expired: Vec<TransitionIndex> = self
            .index_edge
            .keys()
            .copied()
            .filter(|&idx| store.is_expired(idx).unwrap_or(true))
            .collect();
        let mut expired = expired;
        expired.sort_unstable();
        for idx in expired {
            self.remove_transition(idx);
        }
    }

    pub fn remove_transition(&mut self, idx: TransitionIndex) {
        let Some((v, v_prime)) = self.index_edge.remove(&idx) else {
            return;
        };
        self.transition_count -= 1;
        let Some(inner) = self.edges.get_mut(&v_prime) else {
            return;
        };
        let Some(list) = inner.get_mut(&v) else {
            return;
        };
        if let Some(pos) = list.iter().position(|&i| i == idx) {
            list.remove(pos);
        }
        if list.is_empty() {
            inner.shift_remove(&v);
            self.edge_counts.remove(&(v.clone(), v_prime.clone()));
            if inner.is_empty() {
                self.edges.shift_remove(&v_prime);
            }
            self.drop_incident(&v);
            self.drop_incident(&v_prime);
        }
    }

    fn drop_incident(&mut self, v: &StateKey) {
        if let Some(c) = self.incident.get_mut(v) {
            *c -= 1;
            if *c == 0 {
                self.incident.remove(v);
                self.vertices.shift_remove(v);
                self.terminal_set.shift_remove(v);
                self.vertex_returns.remove(v);
            }
        }
    }

    pub fn edge_transitions(&self, v: &StateKey, v_prime: &StateKey) -> Option<&[TransitionIndex]> {
        self.edges.get(v_prime)?.get(v).map(|l| l.as_slice())
    }

    pub fn edge_count(&self, v: &StateKey, v_prime: &StateKey) -> u64 {
        self.edge_counts
            .get(&(v.clone(), v_prime.clone()))
            .copied()
            .unwrap_or(0)
    }

    pub fn num_edges(&self) -> usize {
        self.edges.values().map(|inner| inner.len()).sum()
    }

    /// Line-oriented debug dump: `v_hex v'_hex n_transitions count`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (v_prime, inner) in &self.edges {
            for (v, list) in inner {
                let count = self.edge_count(v, v_prime);
                writeln!(out, "{v} {v_prime} {} {count}", list.len()).unwrap();
            }
        }
        out
    }
}

/// Draw `n` distinct indices with probability proportional to `weights`,
/// removing each chosen index from the pool. Zero-weight entries are
/// only chosen once every positive-weight entry is exhausted.
fn weighted_sample_without_replacement(weights: &[f64], n: usize, rng: &mut Prng) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..weights.len()).collect();
    let mut out = Vec::with_capacity(n.min(weights.len()));
    while out.len() < n && !remaining.is_empty() {
        let total: f64 = remaining.iter().map(|&i| weights[i]).sum();
        let pick = if total <= 0.0 {
            rng.gen_range(0..remaining.len())
        } else {
            let mut u = rng.gen_range(0.0..total);
            let mut chosen = remaining.len() - 1;
            for (slot, &i) in remaining.iter().enumerate() {
                u -= weights[i];
                if u < 0.0 {
                    chosen = slot;
                    break;
                }
            }
            chosen
        };
        out.push(remaining.remove(pick));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use crate::types::Observation;

    fn one_hot(i: usize, d: usize) -> Observation {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        Observation(v)
    }

    fn tr(s: Observation, s2: Observation, terminal: bool, step: u64) -> Transition {
        Transition {
            state: s,
            action: 0,
            reward: 0.0,
            next_state: s2,
            terminal,
            timeout: false,
            insert_step: step,
        }
    }

    fn setup() -> (TopologicalGraph, ProjectionMatrix) {
        (TopologicalGraph::new(), ProjectionMatrix::new(11, 8, 3))
    }

    #[test]
    fn insert_into_empty_graph() {
        let (mut g, phi) = setup();
        g.insert_transition(0, &tr(one_hot(0, 8), one_hot(1, 8), false, 0), &phi)
            .unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.transition_count(), 1);
    }

    #[test]
    fn shared_successor_retrievable_under_one_outer_key() {
        let (mut g, phi) = setup();
        let s_prime = one_hot(2, 8);
        g.insert_transition(0, &tr(one_hot(0, 8), s_prime.clone(), false, 0), &phi)
            .unwrap();
        g.insert_transition(1, &tr(one_hot(1, 8), s_prime.clone(), false, 1), &phi)
            .unwrap();
        let v_prime = phi.project(&s_prime).unwrap();
        let mut rng = stream_rng(0, Stream::Sampler);
        let preds = g.predecessor_edges(&v_prime, 8, None, PredecessorMode::Uniform, &mut rng);
        assert_eq!(preds.len(), 2);
    }

    #[test]
    fn terminal_insert_populates_terminal_set() {
        let (mut g, phi) = setup();
        let t = tr(one_hot(0, 8), one_hot(1, 8), true, 0);
        g.insert_transition(0, &t, &phi).unwrap();
        let v_prime = phi.project(&t.next_state).unwrap();
        assert!(g.is_terminal(&v_prime));
    }

    #[test]
    fn timeout_never_enters_terminal_set() {
        let (mut g, phi) = setup();
        let mut t = tr(one_hot(0, 8), one_hot(1, 8), false, 0);
        t.timeout = true;
        g.insert_transition(0, &t, &phi).unwrap();
        let v_prime = phi.project(&t.next_state).unwrap();
        assert!(!g.is_terminal(&v_prime));
    }

    #[test]
    fn predecessor_edges_empty_cases() {
        let (mut g, phi) = setup();
        g.insert_transition(0, &tr(one_hot(0, 8), one_hot(1, 8), false, 0), &phi)
            .unwrap();
        let mut rng = stream_rng(0, Stream::Sampler);
        // Unknown vertex.
        let missing = phi.project(&one_hot(7, 8)).unwrap();
        assert!(g
            .predecessor_edges(&missing, 3, None, PredecessorMode::Uniform, &mut rng)
            .is_empty());
        // Known vertex with no predecessors (the source of the only edge).
        let src = phi.project(&one_hot(0, 8)).unwrap();
        assert!(g
            .predecessor_edges(&src, 3, None, PredecessorMode::Uniform, &mut rng)
            .is_empty());
    }

    #[test]
    fn budget_not_binding_returns_all_predecessors() {
        let (mut g, phi) = setup();
        let s_prime = one_hot(3, 8);
        for i in 0..2 {
            g.insert_transition(i, &tr(one_hot(i, 8), s_prime.clone(), false, i as u64), &phi)
                .unwrap();
        }
        let v_prime = phi.project(&s_prime).unwrap();
        let mut rng = stream_rng(0, Stream::Sampler);
        let preds = g.predecessor_edges(&v_prime, 3, None, PredecessorMode::Uniform, &mut rng);
        assert_eq!(preds.len(), 2);
    }

    #[test]
    fn uniform_predecessor_inclusion_frequency() {
        // 5 predecessors, budget 3: inclusion probability 3/5 each.
        let (mut g, phi) = setup();
        let s_prime = one_hot(5, 8);
        for i in 0..5 {
            g.insert_transition(i, &tr(one_hot(i, 8), s_prime.clone(), false, i as u64), &phi)
                .unwrap();
        }
        let v_prime = phi.project(&s_prime).unwrap();
        let keys: Vec<StateKey> = (0..5).map(|i| phi.project(&one_hot(i, 8)).unwrap()).collect();
        let mut rng = stream_rng(1, Stream::Sampler);
        let trials = 100_000;
        let mut hits = vec![0u64; 5];
        for _ in 0..trials {
            for (v, _) in g.predecessor_edges(&v_prime, 3, Some(1), PredecessorMode::Uniform, &mut rng)
            {
                let pos = keys.iter().position(|k| *k == v).unwrap();
                hits[pos] += 1;
            }
        }
        for h in hits {
            let freq = h as f64 / trials as f64;
            assert!((freq - 0.6).abs() < 0.01, "freq = {freq}");
        }
    }

    #[test]
    fn terminal_root_sampling_inclusion_frequency() {
        let (mut g, phi) = setup();
        let phi20 = ProjectionMatrix::new(11, 21, 3);
        // 20 distinct terminal vertices.
        for i in 0..20 {
            g.insert_transition(
                i,
                &tr(one_hot(20, 21), one_hot(i, 21), true, i as u64),
                &phi20,
            )
            .unwrap();
        }
        drop(phi);
        assert_eq!(g.terminal_count(), 20);
        let mut rng = stream_rng(2, Stream::Sampler);
        assert!(g.sample_terminal_roots(8, &mut rng).len() == 8);

        let trials = 100_000;
        let mut hits: HashMap<StateKey, u64> = HashMap::new();
        for _ in 0..trials {
            for k in g.sample_terminal_roots(8, &mut rng) {
                *hits.entry(k).or_insert(0) += 1;
            }
        }
        for (_, h) in hits {
            let freq = h as f64 / trials as f64;
            assert!((freq - 0.4).abs() < 0.01, "freq = {freq}");
        }
    }

    #[test]
    fn small_terminal_set_returned_whole() {
        let (mut g, phi) = setup();
        for i in 0..3 {
            g.insert_transition(i, &tr(one_hot(7, 8), one_hot(i, 8), true, i as u64), &phi)
                .unwrap();
        }
        let mut rng = stream_rng(0, Stream::Sampler);
        assert_eq!(g.sample_terminal_roots(8, &mut rng).len(), 3);
        assert!(TopologicalGraph::new()
            .sample_terminal_roots(8, &mut rng)
            .is_empty());
    }

    #[test]
    fn vertex_return_running_mean() {
        let (mut g, phi) = setup();
        let v = phi.project(&one_hot(0, 8)).unwrap();
        g.update_vertex_return(&v, 5.0);
        assert_eq!(g.vertex_return(&v), Some(5.0));
        let w = phi.project(&one_hot(1, 8)).unwrap();
        g.update_vertex_return(&w, 2.0);
        g.update_vertex_return(&w, 4.0);
        assert_eq!(g.vertex_return(&w), Some(3.0));
    }

    #[test]
    fn running_mean_matches_batch_mean() {
        let (mut g, phi) = setup();
        let v = phi.project(&one_hot(0, 8)).unwrap();
        let mut rng = stream_rng(3, Stream::Sampler);
        let gs: Vec<f64> = (0..1000).map(|_| rng.gen_range(-10.0..10.0)).collect();
        for &x in &gs {
            g.update_vertex_return(&v, x);
        }
        let mean = gs.iter().sum::<f64>() / gs.len() as f64;
        assert!((g.vertex_return(&v).unwrap() - mean).abs() < 1e-9);
    }

    #[test]
    fn pseudo_terminal_distribution_closed_forms() {
        let (mut g, phi) = setup();
        g.insert_transition(0, &tr(one_hot(0, 8), one_hot(1, 8), false, 0), &phi)
            .unwrap();
        let v0 = phi.project(&one_hot(0, 8)).unwrap();
        let v1 = phi.project(&one_hot(1, 8)).unwrap();
        g.update_vertex_return(&v0, 1.0);
        g.update_vertex_return(&v1, 0.0);

        let dist = g.pseudo_terminal_distribution(1.0).unwrap();
        let p: HashMap<_, _> = dist.into_iter().collect();
        let e = std::f64::consts::E;
        assert!((p[&v0] - e / (e + 1.0)).abs() < 1e-12);
        assert!((p[&v1] - 1.0 / (e + 1.0)).abs() < 1e-12);

        // kappa -> 0 limit: effectively argmax. The losing vertex's
        // mass exp(-100) underflows against 1.0 in f64.
        let dist = g.pseudo_terminal_distribution(0.01).unwrap();
        let p: HashMap<_, _> = dist.into_iter().collect();
        assert_eq!(p[&v0], 1.0);
        assert!(p[&v1] < 1e-40);
    }

    #[test]
    fn uniform_returns_when_all_equal() {
        let (mut g, phi) = setup();
        g.insert_transition(0, &tr(one_hot(0, 8), one_hot(1, 8), false, 0), &phi)
            .unwrap();
        let dist = g.pseudo_terminal_distribution(0.01).unwrap();
        for (_, p) in &dist {
            assert!((p - 0.5).abs() < 1e-12);
        }
        let total: f64 = dist.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_graph_distribution_is_error() {
        let g = TopologicalGraph::new();
        assert!(g.pseudo_terminal_distribution(1.0).is_err());
    }

    #[test]
    fn prune_removes_expired_and_empty_edges() {
        let (mut g, phi) = setup();
        let mut store = TransitionStore::new(5);
        let t0 = tr(one_hot(0, 8), one_hot(1, 8), false, 0);
        let i0 = store.append(t0.clone()).unwrap();
        g.insert_transition(i0, &t0, &phi).unwrap();

        // Batch with no expired members: unchanged.
        let kept = g.prune_batch(&store, vec![i0]);
        assert_eq!(kept, vec![i0]);
        assert_eq!(g.num_edges(), 1);

        // Age the transition past capacity.
        store.advance_step(6);
        let kept = g.prune_batch(&store, vec![i0]);
        assert!(kept.is_empty());
        assert_eq!(g.num_edges(), 0);
        assert_eq!(g.transition_count(), 0);
        assert_eq!(g.vertex_count(), 0);
        assert_eq!(g.dump(), "");
    }

    #[test]
    fn round_trip_edge_membership() {
        // Re-projecting stored observations reproduces the edge keys.
        let (mut g, phi) = setup();
        let mut rng = stream_rng(4, Stream::Sampler);
        let mut trs = Vec::new();
        for i in 0..30 {
            let a = rng.gen_range(0..8);
            let b = rng.gen_range(0..8);
            let t = tr(one_hot(a, 8), one_hot(b, 8), false, i as u64);
            g.insert_transition(i, &t, &phi).unwrap();
            trs.push(t);
        }
        for (i, t) in trs.iter().enumerate() {
            let v = phi.project(&t.state).unwrap();
            let v_prime = phi.project(&t.next_state).unwrap();
            assert!(g.edge_transitions(&v, &v_prime).unwrap().contains(&i));
        }
        let total: usize = g
            .dump()
            .lines()
            .map(|l| l.split_whitespace().nth(2).unwrap().parse::<usize>().unwrap())
            .sum();
        assert_eq!(total, g.transition_count());
    }

    #[test]
    fn pruning_trace_property() {
        // Fill to capacity 100 then keep inserting while consuming
        // batches: touched edges never retain an expired transition.
        let capacity = 100u64;
        let (mut g, phi) = setup();
        let mut store = TransitionStore::new(capacity);
        let mut rng = stream_rng(5, Stream::Sampler);
        for step in 0..300u64 {
            let a = rng.gen_range(0..8);
            let b = rng.gen_range(0..8);
            let t = tr(one_hot(a, 8), one_hot(b, 8), false, step);
            let idx = store.append(t.clone()).unwrap();
            g.insert_transition(idx, &t, &phi).unwrap();
            if step > capacity {
                let batch: Vec<usize> = (0..32)
                    .map(|_| rng.gen_range(0..store.len()))
                    .collect();
                let kept = g.prune_batch(&store, batch);
                for idx in kept {
                    assert!(!store.is_expired(idx).unwrap());
                }
            }
            if g.transition_count() > 2 * capacity as usize {
                g.full_prune(&store);
            }
        }
        g.full_prune(&store);
        for line in g.dump().lines() {
            let _ = line;
        }
        // After the full sweep every stored transition has age <= capacity.
        for &idx in g.index_edge.keys() {
            assert!(!store.is_expired(idx).unwrap());
        }
        assert!(g.transition_count() <= (capacity as usize + 1));
    }
}
