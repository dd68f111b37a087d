//! Train/val/test splitting with asset exclusivity.
//!
//! Scenes that share any asset are merged into one group and always land in
//! the same split. Groups are placed largest first into the split furthest
//! below its target; a swap pass then exchanges equal-sized groups between
//! splits to balance per-phenomenon counts without moving the totals.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::spec::SceneSpec;
use super::{Result, SceneError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// The parts of a scene that splitting looks at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitItem {
    pub id: String,
    pub assets: Vec<String>,
    pub phenomena: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub assignments: BTreeMap<String, Split>,
    /// Phenomenon index to scene counts per split.
    pub strata: BTreeMap<usize, [usize; 3]>,
    pub totals: [usize; 3],
}

impl DatasetSplit {
    /// Asset ids that appear in more than one split.
    pub fn shared_assets(&self, items: &[SplitItem]) -> Vec<String> {
        let mut seen: HashMap<&str, Split> = HashMap::new();
        let mut shared = BTreeSet::new();
        for item in items {
            let Some(&s) = self.assignments.get(&item.id) else { continue };
            for a in &item.assets {
                if *seen.entry(a).or_insert(s) != s {
                    shared.insert(a.clone());
                }
            }
        }
        shared.into_iter().collect()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

struct Group {
    scenes: Vec<usize>,
    /// Sparse phenomenon counts.
    strata: Vec<(usize, usize)>,
}

/// Squared deviation plus a steep penalty beyond one scene.
fn deviation_cost(count: f64, target: f64) -> f64 {
    let d = count - target;
    d * d + 1e3 * (d.abs() - 1.0).max(0.0)
}

struct Balance<'a> {
    counts: Vec<[usize; 3]>,
    targets: Vec<[f64; 3]>,
    groups: &'a [Group],
}

impl Balance<'_> {
    fn cost_of(&self, phen: usize) -> f64 {
        (0..3).map(|s| deviation_cost(self.counts[phen][s] as f64, self.targets[phen][s])).sum()
    }

    fn apply(&mut self, g: usize, from: usize, to: usize) {
        for &(p, c) in &self.groups[g].strata {
            self.counts[p][from] -= c;
            self.counts[p][to] += c;
        }
    }

    /// Cost change of swapping `g` (in split `a`) with `h` (in split `b`).
    fn swap_delta(&mut self, g: usize, a: usize, h: usize, b: usize) -> f64 {
        let touched: BTreeSet<usize> = self.groups[g]
            .strata
            .iter()
            .chain(&self.groups[h].strata)
            .map(|&(p, _)| p)
            .collect();
        let before: f64 = touched.iter().map(|&p| self.cost_of(p)).sum();
        self.apply(g, a, b);
        self.apply(h, b, a);
        let after: f64 = touched.iter().map(|&p| self.cost_of(p)).sum();
        self.apply(h, a, b);
        self.apply(g, b, a);
        after - before
    }
}

const MAX_SWAP_PASSES: usize = 50;

/// Splits scenes by `ratios` (train, val, test) keeping every asset inside a
/// single split.
pub fn split_dataset(items: &[SplitItem], ratios: [f64; 3], seed: u64) -> Result<DatasetSplit> {
    let n = items.len();
    if n < 10 {
        return Err(SceneError::TooFewScenes(n));
    }
    let ratio_sum: f64 = ratios.iter().sum();
    if !(ratios.iter().all(|r| *r >= 0.0 && r.is_finite()) && ratio_sum > 0.0) {
        return Err(SceneError::Invalid(format!("split ratios {ratios:?} are not valid")));
    }
    let shares = ratios.map(|r| r / ratio_sum);
    let mut ids = BTreeSet::new();
    for item in items {
        if !ids.insert(item.id.as_str()) {
            return Err(SceneError::Invalid(format!("duplicate scene id {:?}", item.id)));
        }
    }

    let mut uf = UnionFind::new(n);
    let mut owner: HashMap<&str, usize> = HashMap::new();
    for (i, item) in items.iter().enumerate() {
        for a in &item.assets {
            match owner.get(a.as_str()) {
                Some(&j) => uf.union(i, j),
                None => {
                    owner.insert(a, i);
                }
            }
        }
    }
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        by_root.entry(uf.find(i)).or_default().push(i);
    }
    let max_share = shares.iter().cloned().fold(0.0, f64::max);
    let mut groups: Vec<Group> = Vec::with_capacity(by_root.len());
    for scenes in by_root.into_values() {
        if scenes.len() as f64 > max_share * n as f64 + 1e-9 {
            let group: BTreeSet<String> = scenes.iter().flat_map(|&i| items[i].assets.iter().cloned()).collect();
            return Err(SceneError::Infeasible {
                group: group.into_iter().collect(),
                scenes: scenes.len(),
                total: n,
            });
        }
        let mut strata: BTreeMap<usize, usize> = BTreeMap::new();
        for &i in &scenes {
            for &p in &items[i].phenomena {
                *strata.entry(p).or_default() += 1;
            }
        }
        groups.push(Group {
            scenes,
            strata: strata.into_iter().collect(),
        });
    }

    let n_phen = items.iter().flat_map(|i| i.phenomena.iter().copied()).max().map_or(0, |m| m + 1);
    let mut phen_totals = vec![0usize; n_phen];
    for item in items {
        for &p in &item.phenomena {
            phen_totals[p] += 1;
        }
    }

    // Largest first; equal sizes in a seeded order.
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.sort_by_key(|&g| std::cmp::Reverse(groups[g].scenes.len()));

    let targets = shares.map(|s| s * n as f64);
    let mut totals = [0usize; 3];
    let mut balance = Balance {
        counts: vec![[0; 3]; n_phen],
        targets: phen_totals.iter().map(|&t| shares.map(|s| s * t as f64)).collect(),
        groups: &groups,
    };
    let mut placement = vec![0usize; groups.len()];
    for &g in &order {
        let size = groups[g].scenes.len();
        let mut best = 0;
        let mut best_key = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for s in 0..3 {
            if shares[s] == 0.0 {
                continue;
            }
            let deficit = targets[s] - totals[s] as f64;
            // Stratification only breaks ties between equally deficient splits.
            let strat: f64 = groups[g]
                .strata
                .iter()
                .map(|&(p, c)| balance.targets[p][s] - balance.counts[p][s] as f64 - c as f64 * 0.5)
                .sum();
            let key = ((deficit * 1e6).round(), strat);
            if key > best_key {
                best_key = key;
                best = s;
            }
        }
        placement[g] = best;
        totals[best] += size;
        for &(p, c) in &groups[g].strata {
            balance.counts[p][best] += c;
        }
    }

    // Equal-size swaps leave the totals untouched.
    let mut by_size: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &g in &order {
        by_size.entry(groups[g].scenes.len()).or_default().push(g);
    }
    for _ in 0..MAX_SWAP_PASSES {
        let mut improved = false;
        for members in by_size.values() {
            for (x, &g) in members.iter().enumerate() {
                for &h in &members[x + 1..] {
                    let (a, b) = (placement[g], placement[h]);
                    if a == b {
                        continue;
                    }
                    if balance.swap_delta(g, a, h, b) < -1e-9 {
                        balance.apply(g, a, b);
                        balance.apply(h, b, a);
                        placement[g] = b;
                        placement[h] = a;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }

    let mut assignments = BTreeMap::new();
    for (g, group) in groups.iter().enumerate() {
        for &i in &group.scenes {
            assignments.insert(items[i].id.clone(), Split::ALL[placement[g]]);
        }
    }
    let strata = phen_totals
        .iter()
        .enumerate()
        .filter(|(_, &t)| t > 0)
        .map(|(p, _)| (p, balance.counts[p]))
        .collect();
    Ok(DatasetSplit {
        assignments,
        strata,
        totals,
    })
}

pub fn split_scenes(scenes: &[SceneSpec], ratios: [f64; 3], seed: u64) -> Result<DatasetSplit> {
    let items: Vec<SplitItem> = scenes.iter().map(SceneSpec::split_item).collect();
    split_dataset(&items, ratios, seed)
}
