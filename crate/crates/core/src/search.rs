//! Optimal rule search.
//!
//! Best-first branch-and-bound over *core queries*: one canonical
//! conjunction per extent-equivalence class, generated by prefix-preserving
//! tail augmentations. Each node keeps, OPUS style, the list of augmentations
//! still worth trying together with their bound and critical index, so that
//! both bound pruning and non-core pruning are inherited by the subtree.
//!
//! Internally extents are bitsets over *ranks*, i.e. positions in the
//! round's `g/h` sort order, so an intersection is already ratio-sorted and
//! can be fed to the tight bound scan directly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::AddAssign;
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::bound::bound_sorted_pairs;
use crate::dataset::{intersect_extents, is_subset, PropositionSet};
use crate::error::{Error, Result};
use crate::loss::{GradientStats, ObjectiveContext};

/// Minimum objective increase that replaces the incumbent.
const IMPROVEMENT_EPS: f64 = 1e-12;

/// A conjunction of propositions and the rows it selects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    /// Strictly increasing indices into the proposition set; empty for ⊤.
    pub props: Vec<usize>,
    /// Sorted row indices.
    pub extent: Vec<usize>,
}

impl Query {
    pub fn top(n: usize) -> Self {
        Query { props: Vec::new(), extent: (0..n).collect() }
    }

    pub fn from_props(mut props: Vec<usize>, set: &PropositionSet) -> Self {
        props.sort_unstable();
        props.dedup();
        let extent =
            props.iter().fold((0..set.n()).collect::<Vec<_>>(), |ext, &j| intersect_extents(&ext, set.extent(j)));
        Query { props, extent }
    }

    pub fn tail(&self) -> Option<usize> {
        self.props.last().copied()
    }

    /// Number of propositions in the conjunction.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.props.len()
    }

    pub fn is_top(&self) -> bool {
        self.props.is_empty()
    }
}

/// An augmentation candidate carried by a search node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugEntry {
    /// Proposition index.
    pub a: usize,
    /// Bound on the gain of every refinement of `parent ∧ p_a`.
    pub b: f64,
    /// Critical index observed when `a` was last checked; `c == a` for core children.
    pub c: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneStats {
    pub immediate_bound: u64,
    pub immediate_equiv: u64,
    pub propagated_bound: u64,
    pub propagated_equiv: u64,
    pub nodes_expanded: u64,
    pub queries_evaluated: u64,
    /// Prefix-preservation checks answered by an inherited critical index.
    /// Not part of the four pruning counters.
    pub prefix_checks_skipped: u64,
}

impl AddAssign for PruneStats {
    fn add_assign(&mut self, o: Self) {
        self.immediate_bound += o.immediate_bound;
        self.immediate_equiv += o.immediate_equiv;
        self.propagated_bound += o.propagated_bound;
        self.propagated_equiv += o.propagated_equiv;
        self.nodes_expanded += o.nodes_expanded;
        self.queries_evaluated += o.queries_evaluated;
        self.prefix_checks_skipped += o.prefix_checks_skipped;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Approximation factor in (0, 1]; 1 means exact.
    pub alpha: f64,
    pub time_budget: Option<Duration>,
    /// Maximum number of propositions in a query.
    pub max_depth: Option<usize>,
    /// Bound-based pruning, both immediate and propagated.
    pub bounding: bool,
    /// Drop inherited augmentations whose critical index lies below the tail.
    pub propagate_equivalence: bool,
    /// Answer the prefix check from an inherited critical index when possible.
    pub skip_prefix_checks: bool,
    /// Collect every evaluated core query in [`SearchResult::core_queries`].
    pub record_core_queries: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            alpha: 1.0,
            time_budget: None,
            max_depth: None,
            bounding: true,
            propagate_equivalence: true,
            skip_prefix_checks: true,
            record_core_queries: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidConfig("max_depth must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    /// Best query found, converted to a short equivalent query.
    pub query: Query,
    pub objective: f64,
    /// Certified lower bound on `objective / optimum`.
    pub guarantee: f64,
    pub stats: PruneStats,
    /// False when the time budget or depth limit cut the search short.
    pub completed: bool,
    /// Evaluated core queries (⊤ first), only when recording is enabled.
    pub core_queries: Vec<Query>,
}

/// Whether `q` implies `p`, i.e. `I(q) ⊆ I(p)`.
pub fn implies(q_extent: &[usize], p_extent: &[usize]) -> bool {
    is_subset(q_extent, p_extent)
}

/// Smallest `j < a` with `child ⇒ p_j` and `parent ⇏ p_j`, or `a` if none.
///
/// The result equals `a` exactly when `parent ∧ p_a` is a prefix-preserving
/// (core) augmentation.
pub fn critical_index(parent: &Query, child_extent: &[usize], a: usize, props: &PropositionSet) -> usize {
    (0..a).find(|&j| implies(child_extent, props.extent(j)) && !implies(&parent.extent, props.extent(j))).unwrap_or(a)
}

/// Greedily shortens `q` to an equivalent conjunction.
///
/// Candidates are all propositions implied by `q`; each step adds the one
/// excluding most rows that are still selected but outside `I(q)`. Returns
/// `q` unchanged if the greedy cover is not shorter or equal.
pub fn shortest_equivalent(q: &Query, props: &PropositionSet) -> Query {
    if q.is_top() {
        return q.clone();
    }
    let candidates: Vec<usize> = (0..props.len()).filter(|&j| implies(&q.extent, props.extent(j))).collect();
    let mut current: Vec<usize> = (0..props.n()).collect();
    let mut chosen = Vec::new();
    while current.len() > q.extent.len() && chosen.len() < q.len() {
        let mut best: Option<(usize, usize)> = None;
        for &j in &candidates {
            let kept = intersect_extents(&current, props.extent(j)).len();
            let removed = current.len() - kept;
            if removed > 0 && best.is_none_or(|(_, r)| removed > r) {
                best = Some((j, removed));
            }
        }
        let Some((j, _)) = best else { break };
        chosen.push(j);
        current = intersect_extents(&current, props.extent(j));
    }
    if current != q.extent {
        return q.clone();
    }
    chosen.sort_unstable();
    Query { props: chosen, extent: q.extent.clone() }
}

/// Per-search view of the data in rank space.
struct RankSpace {
    n: usize,
    g: Vec<f64>,
    h: Vec<f64>,
    order: Vec<usize>,
    props: Vec<FixedBitSet>,
    sizes: Vec<usize>,
}

impl RankSpace {
    fn new(props: &PropositionSet, stats: &GradientStats) -> Self {
        let n = stats.n();
        let rank = stats.ranks();
        let order = stats.sorted_order().to_vec();
        let g = order.iter().map(|&r| stats.g()[r]).collect();
        let h = order.iter().map(|&r| stats.h()[r]).collect();
        let props: Vec<FixedBitSet> = props
            .props()
            .iter()
            .map(|p| {
                let mut bits = FixedBitSet::with_capacity(n);
                for &row in &p.extent {
                    bits.insert(rank[row]);
                }
                bits
            })
            .collect();
        let sizes = props.iter().map(|p| p.count_ones(..)).collect();
        RankSpace { n, g, h, order, props, sizes }
    }

    fn rows(&self, ext: &FixedBitSet) -> Vec<usize> {
        let mut rows: Vec<usize> = ext.ones().map(|k| self.order[k]).collect();
        rows.sort_unstable();
        rows
    }
}

struct Node {
    props: Vec<usize>,
    extent: FixedBitSet,
    size: usize,
    aug: Vec<AugEntry>,
    priority: f64,
    seq: u64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // max-heap on priority, earlier insertion first among equals
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority).then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Search<'a> {
    space: RankSpace,
    ctx: &'a ObjectiveContext,
    cfg: &'a SearchConfig,
    best_props: Vec<usize>,
    best_obj: f64,
    /// Largest bound of any region left unexplored for reasons other than
    /// exact (alpha = 1) bound pruning.
    residual: f64,
    truncated: bool,
    stats: PruneStats,
    boundary: BinaryHeap<Node>,
    seq: u64,
    core_queries: Vec<Query>,
    pairs: Vec<(f64, f64)>,
    scratch: FixedBitSet,
}

/// Tri-state cache of `parent ⇒ p_j`.
struct ImpliedCache(Vec<u8>);

impl ImpliedCache {
    fn get(&mut self, j: usize, parent: &FixedBitSet, props: &[FixedBitSet]) -> bool {
        if self.0[j] == 0 {
            self.0[j] = if parent.is_subset(&props[j]) { 1 } else { 2 };
        }
        self.0[j] == 1
    }
}

impl<'a> Search<'a> {
    fn prunable(&self, bound: f64) -> bool {
        self.cfg.bounding && self.cfg.alpha * bound <= self.best_obj
    }

    fn note_residual(&mut self, bound: f64) {
        if bound > self.best_obj {
            self.residual = self.residual.max(bound);
        }
    }

    fn gather(&mut self) -> (f64, f64) {
        self.pairs.clear();
        let (mut sg, mut sh) = (0.0, 0.0);
        for k in self.scratch.ones() {
            let (g, h) = (self.space.g[k], self.space.h[k]);
            sg += g;
            sh += h;
            self.pairs.push((g, h));
        }
        (sg, sh)
    }

    fn push(&mut self, node: Node) {
        self.boundary.push(node);
    }

    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    fn expand(&mut self, node: Node) -> Result<()> {
        self.stats.nodes_expanded += 1;
        let tail = node.props.last().copied();
        let mut implied = ImpliedCache(vec![0; self.space.props.len()]);
        let mut kept: Vec<(AugEntry, Option<(FixedBitSet, usize)>)> = Vec::new();

        for &entry in &node.aug {
            let a = entry.a;
            if self.prunable(entry.b) {
                self.stats.propagated_bound += 1;
                self.note_residual(entry.b);
                continue;
            }
            if self.cfg.propagate_equivalence && tail.is_some_and(|t| t > entry.c) {
                self.stats.propagated_equiv += 1;
                continue;
            }

            self.scratch.clone_from(&node.extent);
            self.scratch.intersect_with(&self.space.props[a]);
            let size = self.scratch.count_ones(..);
            self.stats.queries_evaluated += 1;
            if size == node.size {
                self.stats.immediate_equiv += 1;
                continue;
            }

            let (sg, sh) = self.gather();
            let obj = self.ctx.gain_or_zero(sg, sh)?;
            let bound = bound_sorted_pairs(&self.pairs, self.ctx)?.value.max(obj);

            let crt = if self.cfg.skip_prefix_checks
                && entry.c < a
                && !implied.get(entry.c, &node.extent, &self.space.props)
            {
                // the inherited witness p_c is implied by the child but not by this node
                self.stats.prefix_checks_skipped += 1;
                entry.c
            } else {
                let child = &self.scratch;
                let (props, sizes) = (&self.space.props, &self.space.sizes);
                (0..a)
                    .find(|&j| sizes[j] >= size && child.is_subset(&props[j]) && !implied.get(j, &node.extent, props))
                    .unwrap_or(a)
            };
            let core = crt == a;

            if core {
                if self.cfg.record_core_queries {
                    let mut props = node.props.clone();
                    props.push(a);
                    self.core_queries.push(Query { props, extent: self.space.rows(&self.scratch) });
                }
                if obj > self.best_obj + IMPROVEMENT_EPS {
                    self.best_obj = obj;
                    self.best_props = node.props.clone();
                    self.best_props.push(a);
                }
            }

            if self.prunable(bound) {
                self.stats.immediate_bound += 1;
                self.note_residual(bound);
                continue;
            }
            let child = core.then(|| (self.scratch.clone(), size));
            kept.push((AugEntry { a, b: bound, c: crt }, child));
        }

        let depth = node.props.len() + 1;
        let entries: Vec<AugEntry> = kept.iter().map(|(e, _)| *e).collect();
        for (k, (entry, child)) in kept.into_iter().enumerate() {
            let Some((extent, size)) = child else { continue };
            let aug = entries[k + 1..].to_vec();
            if aug.is_empty() {
                continue;
            }
            if self.prunable(entry.b) {
                self.stats.immediate_bound += 1;
                self.note_residual(entry.b);
                continue;
            }
            if self.cfg.max_depth.is_some_and(|d| depth >= d) {
                self.residual = self.residual.max(entry.b);
                self.truncated = true;
                continue;
            }
            let mut props = node.props.clone();
            props.push(entry.a);
            let seq = self.next_seq();
            self.push(Node { props, extent, size, aug, priority: entry.b, seq });
        }
        Ok(())
    }
}

/// Finds a conjunction maximizing the boosting gain over all conjunctions of `props`.
///
/// With `alpha = 1` and no budget the result is globally optimal. The
/// returned `guarantee` is `objective / max(unresolved bounds)`, capped at 1.
pub fn find_best_query(
    props: &PropositionSet,
    stats: &GradientStats,
    ctx: &ObjectiveContext,
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    cfg.validate()?;
    if props.is_empty() {
        return Err(Error::EmptyPropositions);
    }
    if stats.n() != props.n() || ctx.n != props.n() {
        return Err(Error::InvalidData(format!(
            "row counts disagree: propositions {}, stats {}, context {}",
            props.n(),
            stats.n(),
            ctx.n
        )));
    }
    let start = Instant::now();
    let space = RankSpace::new(props, stats);
    let n = space.n;

    let mut root_ext = FixedBitSet::with_capacity(n);
    root_ext.insert_range(..);
    let mut search = Search {
        ctx,
        cfg,
        best_props: Vec::new(),
        best_obj: 0.0,
        residual: 0.0,
        truncated: false,
        stats: PruneStats::default(),
        boundary: BinaryHeap::new(),
        seq: 0,
        core_queries: Vec::new(),
        pairs: Vec::with_capacity(n),
        scratch: root_ext.clone(),
        space,
    };
    let (sg, sh) = search.gather();
    search.best_obj = ctx.gain_or_zero(sg, sh)?;
    let root_bound = bound_sorted_pairs(&search.pairs, ctx)?.value.max(search.best_obj);
    if cfg.record_core_queries {
        search.core_queries.push(Query::top(n));
    }
    let aug = (0..props.len()).map(|a| AugEntry { a, b: root_bound, c: a }).collect();
    search.push(Node { props: Vec::new(), extent: root_ext, size: n, aug, priority: root_bound, seq: 0 });

    let mut completed = true;
    while let Some(node) = search.boundary.pop() {
        if search.prunable(node.priority) {
            // every remaining node is bounded by this one
            search.note_residual(node.priority);
            break;
        }
        if cfg.time_budget.is_some_and(|b| start.elapsed() >= b) {
            search.residual = search.residual.max(node.priority);
            completed = false;
            break;
        }
        search.expand(node)?;
    }
    if search.truncated {
        completed = false;
    }

    let guarantee = if search.residual <= search.best_obj { 1.0 } else { search.best_obj / search.residual };
    let best = Query::from_props(search.best_props.clone(), props);
    Ok(SearchResult {
        query: shortest_equivalent(&best, props),
        objective: search.best_obj,
        guarantee,
        stats: search.stats,
        completed,
        core_queries: search.core_queries,
    })
}
