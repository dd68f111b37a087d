//! Phenomenon registry, compatibility data and activity enumeration.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Result, SceneError};

const BUILTIN_PHENOMENA: &str = include_str!("../../data/phenomena.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phenomenon {
    pub index: usize,
    pub name: String,
    pub laws: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arity {
    Single,
    Double,
    Triple,
}

impl Arity {
    pub fn count(self) -> usize {
        match self {
            Arity::Single => 1,
            Arity::Double => 2,
            Arity::Triple => 3,
        }
    }
}

impl std::str::FromStr for Arity {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" | "1" => Ok(Arity::Single),
            "double" | "2" => Ok(Arity::Double),
            "triple" | "3" => Ok(Arity::Triple),
            other => Err(SceneError::Invalid(format!("unknown arity {other:?}"))),
        }
    }
}

/// A combination of one to three distinct phenomena, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Activity {
    pub phenomena: Vec<usize>,
}

impl Activity {
    pub fn new(mut phenomena: Vec<usize>) -> Result<Self> {
        phenomena.sort_unstable();
        phenomena.dedup();
        if phenomena.is_empty() || phenomena.len() > 3 {
            return Err(SceneError::Invalid(format!(
                "an activity needs 1 to 3 distinct phenomena, got {phenomena:?}"
            )));
        }
        Ok(Self { phenomena })
    }

    pub fn arity(&self) -> Arity {
        match self.phenomena.len() {
            1 => Arity::Single,
            2 => Arity::Double,
            _ => Arity::Triple,
        }
    }
}

/// How triples are validated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TripleRule {
    /// A triple is valid when all three pairs are compatible.
    PairwiseAnd,
    /// Only the listed (sorted) triples are valid.
    Explicit(BTreeSet<[usize; 3]>),
}

/// User-supplied compatibility data: compatible pairs and optionally an
/// explicit list of valid triples.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompatibilityFile {
    pub pairs: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triples: Option<Vec<[usize; 3]>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhenomenonRegistry {
    entries: Vec<Phenomenon>,
    /// Row-major `n × n`, symmetric, false diagonal.
    compatibility: Vec<bool>,
    triples: TripleRule,
}

/// Coarse grouping used by the starter compatibility matrix.
fn starter_category(index: usize) -> u8 {
    match index {
        1..=3 => 0,   // collisions
        4..=8 => 1,   // wind
        9..=12 => 2,  // projectiles and slopes
        13..=14 => 3, // magnetism
        15..=21 => 4, // rotation and friction
        22..=27 => 5, // springs, breakage
        28..=29 => 6, // seesaw
        30..=32 => 7, // balloons
        33..=39 => 8, // optics
        40..=50 => 9, // mechanisms and structures
        51..=66 => 10, // fluids
        _ => 11,       // continuum materials
    }
}

impl PhenomenonRegistry {
    /// Registry with the given entries and no compatible pairs.
    pub fn new(entries: Vec<Phenomenon>) -> Result<Self> {
        let n = entries.len();
        for (k, e) in entries.iter().enumerate() {
            if e.index != k + 1 {
                return Err(SceneError::Invalid(format!(
                    "phenomenon indices must be dense from 1, found {} at position {}",
                    e.index,
                    k + 1
                )));
            }
        }
        Ok(Self {
            entries,
            compatibility: vec![false; n * n],
            triples: TripleRule::PairwiseAnd,
        })
    }

    /// The 71 shipped phenomena with the starter compatibility matrix.
    ///
    /// The starter matrix is not the selection used to build any published
    /// dataset: it marks two phenomena compatible when they belong to
    /// different coarse categories.
    pub fn builtin() -> Self {
        let entries: Vec<Phenomenon> = serde_json::from_str(BUILTIN_PHENOMENA).expect("shipped registry parses");
        let mut reg = Self::new(entries).expect("shipped registry is dense");
        let n = reg.len();
        for a in 1..=n {
            for b in a + 1..=n {
                if starter_category(a) != starter_category(b) {
                    reg.set_compatible(a, b, true).expect("indices in range");
                }
            }
        }
        reg
    }

    pub fn builtin_entries() -> Vec<Phenomenon> {
        serde_json::from_str(BUILTIN_PHENOMENA).expect("shipped registry parses")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Phenomenon] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> Option<&Phenomenon> {
        index.checked_sub(1).and_then(|i| self.entries.get(i))
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if (1..=self.len()).contains(&i) {
            Ok(())
        } else {
            Err(SceneError::UnknownPhenomenon(i))
        }
    }

    pub fn set_compatible(&mut self, a: usize, b: usize, value: bool) -> Result<()> {
        self.check_index(a)?;
        self.check_index(b)?;
        if a == b {
            return Err(SceneError::Invalid(format!("phenomenon {a} cannot be paired with itself")));
        }
        let n = self.len();
        self.compatibility[(a - 1) * n + (b - 1)] = value;
        self.compatibility[(b - 1) * n + (a - 1)] = value;
        Ok(())
    }

    pub fn compatible(&self, a: usize, b: usize) -> bool {
        let n = self.len();
        a != b && (1..=n).contains(&a) && (1..=n).contains(&b) && self.compatibility[(a - 1) * n + (b - 1)]
    }

    /// Replaces the matrix: every distinct pair set to `value`.
    pub fn fill_compatibility(&mut self, value: bool) {
        let n = self.len();
        for a in 0..n {
            for b in 0..n {
                self.compatibility[a * n + b] = value && a != b;
            }
        }
    }

    pub fn set_triple_rule(&mut self, rule: TripleRule) {
        self.triples = rule;
    }

    /// Installs user compatibility data, replacing the current matrix.
    pub fn apply_compatibility(&mut self, data: &CompatibilityFile) -> Result<()> {
        self.fill_compatibility(false);
        for &[a, b] in &data.pairs {
            self.set_compatible(a, b, true)?;
        }
        self.triples = match &data.triples {
            None => TripleRule::PairwiseAnd,
            Some(list) => {
                let mut set = BTreeSet::new();
                for t in list {
                    let mut t = *t;
                    t.sort_unstable();
                    for &i in &t {
                        self.check_index(i)?;
                    }
                    if t[0] == t[1] || t[1] == t[2] {
                        return Err(SceneError::Invalid(format!("triple {t:?} repeats a phenomenon")));
                    }
                    set.insert(t);
                }
                TripleRule::Explicit(set)
            }
        };
        Ok(())
    }

    pub fn load_compatibility(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let data: CompatibilityFile = serde_json::from_str(&text).map_err(|e| SceneError::Json {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        self.apply_compatibility(&data)
    }

    pub fn triple_valid(&self, a: usize, b: usize, c: usize) -> bool {
        match &self.triples {
            TripleRule::PairwiseAnd => self.compatible(a, b) && self.compatible(a, c) && self.compatible(b, c),
            TripleRule::Explicit(set) => {
                let mut t = [a, b, c];
                t.sort_unstable();
                set.contains(&t)
            }
        }
    }

    /// Checks that every phenomenon of `activity` exists and the set is valid.
    pub fn validate_activity(&self, activity: &Activity) -> Result<()> {
        for &p in &activity.phenomena {
            self.check_index(p)?;
        }
        let ok = match activity.phenomena.as_slice() {
            [_] => true,
            [a, b] => self.compatible(*a, *b),
            [a, b, c] => self.triple_valid(*a, *b, *c),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(SceneError::IncompatibleActivity(activity.phenomena.clone()))
        }
    }

    /// Matrix invariants: symmetric with a false diagonal.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        for a in 0..n {
            if self.compatibility[a * n + a] {
                return Err(SceneError::Invalid(format!("phenomenon {} is self-compatible", a + 1)));
            }
            for b in 0..a {
                if self.compatibility[a * n + b] != self.compatibility[b * n + a] {
                    return Err(SceneError::Invalid(format!("compatibility of {} and {} is asymmetric", a + 1, b + 1)));
                }
            }
        }
        Ok(())
    }

    pub fn compatible_pair_count(&self) -> usize {
        self.compatibility.iter().filter(|&&c| c).count() / 2
    }
}

/// All activities of the given arity, in lexicographic order.
pub fn enumerate_activities(reg: &PhenomenonRegistry, arity: Arity) -> Vec<Activity> {
    let n = reg.len();
    let mut out = Vec::new();
    match arity {
        Arity::Single => out.extend((1..=n).map(|a| Activity { phenomena: vec![a] })),
        Arity::Double => {
            for a in 1..=n {
                for b in a + 1..=n {
                    if reg.compatible(a, b) {
                        out.push(Activity { phenomena: vec![a, b] });
                    }
                }
            }
        }
        Arity::Triple => {
            for a in 1..=n {
                for b in a + 1..=n {
                    for c in b + 1..=n {
                        if reg.triple_valid(a, b, c) {
                            out.push(Activity { phenomena: vec![a, b, c] });
                        }
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_registry_shape() {
        let reg = PhenomenonRegistry::builtin();
        assert_eq!(reg.len(), 71);
        reg.validate().unwrap();
        assert_eq!(reg.get(13).unwrap().name, "Magnetic Attraction");
        assert_eq!(reg.get(71).unwrap().laws, vec!["Laws of Friction".to_string()]);
        assert!(reg.get(0).is_none() && reg.get(72).is_none());
    }

    #[test]
    fn enumeration_counts() {
        let mut reg = PhenomenonRegistry::builtin();
        assert_eq!(enumerate_activities(&reg, Arity::Single).len(), 71);
        reg.fill_compatibility(true);
        assert_eq!(enumerate_activities(&reg, Arity::Double).len(), 71 * 70 / 2);
        assert_eq!(enumerate_activities(&reg, Arity::Triple).len(), 71 * 70 * 69 / 6);
        reg.fill_compatibility(false);
        assert!(enumerate_activities(&reg, Arity::Double).is_empty());
        assert!(enumerate_activities(&reg, Arity::Triple).is_empty());
        assert_eq!(enumerate_activities(&reg, Arity::Single).len(), 71);
    }

    #[test]
    fn pair_and_triple_counts_follow_the_matrix() {
        let reg = PhenomenonRegistry::builtin();
        let pairs = enumerate_activities(&reg, Arity::Double);
        assert_eq!(pairs.len(), reg.compatible_pair_count());
        assert!(pairs.windows(2).all(|w| w[0] < w[1]));
        let triples = enumerate_activities(&reg, Arity::Triple);
        for t in triples.iter().take(500) {
            let p = &t.phenomena;
            assert!(reg.compatible(p[0], p[1]) && reg.compatible(p[0], p[2]) && reg.compatible(p[1], p[2]));
        }
        assert_eq!(enumerate_activities(&reg, Arity::Triple), triples);
    }

    #[test]
    fn explicit_compatibility_file() {
        let mut reg = PhenomenonRegistry::builtin();
        let data = CompatibilityFile {
            pairs: vec![[1, 2], [2, 3], [1, 3], [5, 9]],
            triples: Some(vec![[3, 2, 1]]),
        };
        reg.apply_compatibility(&data).unwrap();
        assert_eq!(enumerate_activities(&reg, Arity::Double).len(), 4);
        assert_eq!(enumerate_activities(&reg, Arity::Triple), vec![Activity { phenomena: vec![1, 2, 3] }]);
        reg.validate_activity(&Activity::new(vec![9, 5]).unwrap()).unwrap();
        assert!(matches!(
            reg.validate_activity(&Activity::new(vec![4, 5]).unwrap()),
            Err(SceneError::IncompatibleActivity(_))
        ));
        let bad = CompatibilityFile {
            pairs: vec![[1, 72]],
            triples: None,
        };
        assert!(matches!(reg.apply_compatibility(&bad), Err(SceneError::UnknownPhenomenon(72))));
    }

    #[test]
    fn activity_normalization() {
        let a = Activity::new(vec![9, 3, 9]).unwrap();
        assert_eq!(a.phenomena, vec![3, 9]);
        assert_eq!(a.arity(), Arity::Double);
        assert!(Activity::new(vec![]).is_err());
        assert!(Activity::new(vec![1, 2, 3, 4]).is_err());
    }
}
