//! Polychronous-group-pattern decoding.
//!
//! A trial's readout-layer spikes form an ordered token sequence (a PGP).
//! Patterns are compared by the ratio of order-preserving matching spikes
//! (longest common subsequence over (neuron, occurrence) tokens), merged
//! greedily into clusters against a threshold, and scored by how exclusively
//! each class occupies its modal cluster.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::sim::SpikeRecord;
use crate::topology::NetworkTopology;

/// Identity of one spike within a pattern: which neuron, and which of its
/// firings (1-based).
pub type TokenKey = (u32, u32);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeToken {
    pub neuron: u32,
    pub ordinal: u32,
    pub time_ms: f64,
}

/// One trial's ordered output spike sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Pgp {
    pub tokens: Vec<SpikeToken>,
    /// Position of the trial in its presentation sequence.
    pub trial: usize,
    pub label: u8,
}

impl Pgp {
    pub fn keys(&self) -> Vec<TokenKey> {
        self.tokens.iter().map(|t| (t.neuron, t.ordinal)).collect()
    }
}

/// Extract the PGP of one trial: all spikes of the selected layers, in
/// (time, neuron) order, with per-neuron occurrence ordinals.
pub fn extract(
    record: &SpikeRecord,
    topology: &NetworkTopology,
    layers: &[usize],
    trial: usize,
    label: u8,
) -> Pgp {
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    let mut tokens = Vec::new();
    for e in &record.events {
        let layer = topology.layer_of(e.neuron);
        if layer.is_some_and(|l| layers.contains(&l)) {
            let ordinal = counts.entry(e.neuron).or_insert(0);
            *ordinal += 1;
            tokens.push(SpikeToken {
                neuron: e.neuron,
                ordinal: *ordinal,
                time_ms: e.time_ms,
            });
        }
    }
    Pgp {
        tokens,
        trial,
        label,
    }
}

/// Longest common subsequence length of two key sequences.
pub fn lcs_len(a: &[TokenKey], b: &[TokenKey]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &ka in a {
        for (j, &kb) in b.iter().enumerate() {
            cur[j + 1] = if ka == kb {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Matching-spike ratio: LCS length over the mean of the two lengths.
/// Two empty patterns match fully; one empty pattern matches nothing.
pub fn match_ratio_keys(a: &[TokenKey], b: &[TokenKey]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    lcs_len(a, b) as f64 / ((a.len() + b.len()) as f64 / 2.0)
}

pub fn match_ratio(a: &Pgp, b: &Pgp) -> f64 {
    match_ratio_keys(&a.keys(), &b.keys())
}

/// A merged group of PGPs with an incrementally maintained centroid: the
/// keys present in at least half of the members, each at its mean time over
/// the members containing it, ordered by mean time.
#[derive(Debug, Clone)]
pub struct Cluster {
    pub members: Vec<usize>,
    key_stats: BTreeMap<TokenKey, (f64, usize)>,
    centroid: Vec<TokenKey>,
}

impl Cluster {
    fn new(member: usize, pgp: &Pgp) -> Self {
        let mut c = Cluster {
            members: Vec::new(),
            key_stats: BTreeMap::new(),
            centroid: Vec::new(),
        };
        c.add(member, pgp);
        c
    }

    fn add(&mut self, member: usize, pgp: &Pgp) {
        self.members.push(member);
        for t in &pgp.tokens {
            let e = self.key_stats.entry((t.neuron, t.ordinal)).or_insert((0.0, 0));
            e.0 += t.time_ms;
            e.1 += 1;
        }
        self.centroid = derive_centroid(&self.key_stats, self.members.len());
    }

    pub fn centroid_keys(&self) -> &[TokenKey] {
        &self.centroid
    }

    /// Full recomputation of the centroid from the member patterns; the
    /// incremental route must agree with this one.
    pub fn recompute_centroid(&self, pgps: &[Pgp]) -> Vec<TokenKey> {
        let mut stats: BTreeMap<TokenKey, (f64, usize)> = BTreeMap::new();
        for &m in &self.members {
            for t in &pgps[m].tokens {
                let e = stats.entry((t.neuron, t.ordinal)).or_insert((0.0, 0));
                e.0 += t.time_ms;
                e.1 += 1;
            }
        }
        derive_centroid(&stats, self.members.len())
    }
}

fn derive_centroid(stats: &BTreeMap<TokenKey, (f64, usize)>, n_members: usize) -> Vec<TokenKey> {
    let mut keyed: Vec<(f64, TokenKey)> = stats
        .iter()
        .filter(|(_, &(_, count))| 2 * count >= n_members)
        .map(|(&key, &(sum, count))| (sum / count as f64, key))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, key)| key).collect()
}

/// Single-pass greedy clustering in presentation order: each pattern joins
/// the highest-ratio cluster whose centroid matches at `theta` or better
/// (ties to the lowest cluster index), else opens a new cluster.
pub fn cluster(pgps: &[Pgp], theta: f64) -> Result<Vec<Cluster>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Config(format!("PGP threshold {theta} outside (0, 1]")));
    }
    let mut clusters: Vec<Cluster> = Vec::new();
    for (i, pgp) in pgps.iter().enumerate() {
        let keys = pgp.keys();
        let mut best: Option<(usize, f64)> = None;
        for (ci, c) in clusters.iter().enumerate() {
            let r = match_ratio_keys(&keys, c.centroid_keys());
            if r >= theta && best.is_none_or(|(_, br)| r > br) {
                best = Some((ci, r));
            }
        }
        match best {
            Some((ci, _)) => clusters[ci].add(i, pgp),
            None => clusters.push(Cluster::new(i, pgp)),
        }
    }
    Ok(clusters)
}

/// Modal cluster and per-class counts for one evaluated class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassOutcome {
    pub class: u8,
    /// Cluster holding the most test patterns of this class; ties resolve to
    /// the lowest cluster index.
    pub modal_cluster: Option<usize>,
    pub modal_count: usize,
    pub total: usize,
}

/// Classification scores for one clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub theta: f64,
    /// Pattern index -> cluster index.
    pub assignments: Vec<usize>,
    pub num_clusters: usize,
    pub trained: Vec<ClassOutcome>,
    pub unseen: Vec<ClassOutcome>,
    pub trained_separable: bool,
    pub unseen_separable: bool,
    pub trained_accuracy: f64,
    pub unseen_accuracy: f64,
}

fn class_outcome(class: u8, pgps: &[Pgp], assignments: &[usize], n_clusters: usize) -> ClassOutcome {
    let mut counts = vec![0usize; n_clusters];
    let mut total = 0usize;
    for (i, pgp) in pgps.iter().enumerate() {
        if pgp.label == class {
            counts[assignments[i]] += 1;
            total += 1;
        }
    }
    let modal = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .filter(|&(_, &c)| c > 0);
    ClassOutcome {
        class,
        modal_cluster: modal.map(|(i, _)| i),
        modal_count: modal.map_or(0, |(_, &c)| c),
        total,
    }
}

/// Score one clustering against the trained and unseen class sets.
///
/// Trained classes are separable iff their modal clusters are pairwise
/// distinct; accuracy is then the summed modal counts over the total trained
/// test inputs. The unseen classes are scored the same way but additionally
/// require modal clusters distinct from every trained class's. A
/// non-separable evaluation scores exactly zero.
pub fn score(clusters: &[Cluster], pgps: &[Pgp], theta: f64, trained_classes: &[u8], unseen_classes: &[u8]) -> ScoreReport {
    let mut assignments = vec![usize::MAX; pgps.len()];
    for (ci, c) in clusters.iter().enumerate() {
        for &m in &c.members {
            assignments[m] = ci;
        }
    }
    debug_assert!(assignments.iter().all(|&a| a != usize::MAX));

    let trained: Vec<ClassOutcome> = trained_classes
        .iter()
        .map(|&c| class_outcome(c, pgps, &assignments, clusters.len()))
        .collect();
    let unseen: Vec<ClassOutcome> = unseen_classes
        .iter()
        .map(|&c| class_outcome(c, pgps, &assignments, clusters.len()))
        .collect();

    let all_distinct = |outcomes: &[ClassOutcome]| -> bool {
        let mut seen = std::collections::HashSet::new();
        outcomes.iter().all(|o| match o.modal_cluster {
            Some(m) => seen.insert(m),
            None => false,
        })
    };

    let trained_separable = !trained.is_empty() && all_distinct(&trained);
    let trained_modals: std::collections::HashSet<usize> = trained
        .iter()
        .filter_map(|o| o.modal_cluster)
        .collect();
    let unseen_separable = !unseen.is_empty()
        && all_distinct(&unseen)
        && unseen
            .iter()
            .all(|o| o.modal_cluster.is_some_and(|m| !trained_modals.contains(&m)));

    let accuracy = |outcomes: &[ClassOutcome], separable: bool| -> f64 {
        let total: usize = outcomes.iter().map(|o| o.total).sum();
        if !separable || total == 0 {
            return 0.0;
        }
        outcomes.iter().map(|o| o.modal_count).sum::<usize>() as f64 / total as f64
    };

    ScoreReport {
        theta,
        num_clusters: clusters.len(),
        trained_accuracy: accuracy(&trained, trained_separable),
        unseen_accuracy: accuracy(&unseen, unseen_separable),
        trained,
        unseen,
        trained_separable,
        unseen_separable,
        assignments,
    }
}
