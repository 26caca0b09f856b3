//! Role groups and role-replaced augmentation.
//!
//! Names are matched as whole words, case-sensitively: a match may not be
//! glued to a neighbouring letter, digit or underscore on a side where the
//! name itself starts or ends with one. `Ann` therefore never matches inside
//! `Annual`, while `Danny's` still matches `Danny`. All names of a map are
//! substituted in one left-to-right pass, longest name first at each
//! position, so swap maps work and no substitution feeds another.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::corpus::{find_reserved_marker, Dialogue, ParallelExample, SummaryOrigin};
use crate::seed::derive_rng;

const SHIPPED_NAMES: &str = include_str!("../data/names.txt");

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RoleError {
    #[error("name pool has {pool} names but {needed} are needed")]
    PoolTooSmall { needed: usize, pool: usize },
    #[error("invalid name pool: {0}")]
    InvalidPool(String),
    #[error("ambiguous role map: {0}")]
    AmbiguousMap(String),
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamePool {
    names: Vec<String>,
    members: HashSet<String>,
}

impl NamePool {
    pub fn new(names: Vec<String>) -> Result<Self, RoleError> {
        let mut members = HashSet::with_capacity(names.len());
        for n in &names {
            if n.trim().is_empty() || n.trim() != n {
                return Err(RoleError::InvalidPool(format!("bad name {n:?}")));
            }
            if let Some(m) = find_reserved_marker(n) {
                return Err(RoleError::InvalidPool(format!("name {n:?} contains {m}")));
            }
            if !members.insert(n.clone()) {
                return Err(RoleError::InvalidPool(format!("duplicate name {n:?}")));
            }
        }
        Ok(Self { names, members })
    }

    /// Parses one name per line; blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, RoleError> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect(),
        )
    }

    pub fn from_file(path: &Path) -> Result<Self, RoleError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RoleError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The bundled pool of real first names.
    pub fn shipped() -> Self {
        Self::parse(SHIPPED_NAMES).expect("bundled name pool is valid")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.members.contains(name)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Replaces the role table with distinct names drawn without replacement,
/// using a generator derived from `seed` and the dialogue id. Turns are left
/// untouched. Unless `force` is set, a dialogue whose roles already all come
/// from the pool is returned unchanged.
pub fn assign_role_group(
    d: &Dialogue,
    pool: &NamePool,
    seed: u64,
    force: bool,
) -> Result<Dialogue, RoleError> {
    if !force && d.roles.iter().all(|r| pool.contains(r)) {
        return Ok(d.clone());
    }
    if pool.len() < d.roles.len() {
        return Err(RoleError::PoolTooSmall {
            needed: d.roles.len(),
            pool: pool.len(),
        });
    }
    let mut rng = derive_rng(seed, &d.id, 0);
    let roles = sample(&mut rng, pool.len(), d.roles.len())
        .into_iter()
        .map(|i| pool.names[i].clone())
        .collect();
    Ok(Dialogue { roles, ..d.clone() })
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Injective old-name to new-name map.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleMap {
    pub pairs: BTreeMap<String, String>,
}

impl RoleMap {
    pub fn new<K: Into<String>, V: Into<String>>(pairs: impl IntoIterator<Item = (K, V)>) -> Self {
        Self {
            pairs: pairs
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn inverse(&self) -> RoleMap {
        RoleMap::new(self.pairs.iter().map(|(k, v)| (v.clone(), k.clone())))
    }

    pub fn validate(&self) -> Result<(), RoleError> {
        let mut targets = HashSet::new();
        for (old, new) in &self.pairs {
            for name in [old, new] {
                if name.trim().is_empty() || name.trim() != name {
                    return Err(RoleError::AmbiguousMap(format!("bad name {name:?}")));
                }
                if let Some(m) = find_reserved_marker(name) {
                    return Err(RoleError::AmbiguousMap(format!("{name:?} contains {m}")));
                }
            }
            if !targets.insert(new.as_str()) {
                return Err(RoleError::AmbiguousMap(format!(
                    "{new:?} is the target of more than one name"
                )));
            }
        }
        for side in [
            self.pairs.keys().collect::<Vec<_>>(),
            self.pairs.values().collect::<Vec<_>>(),
        ] {
            for a in &side {
                for b in &side {
                    if a != b && !find_names(b, &[a.as_str()]).is_empty() {
                        return Err(RoleError::AmbiguousMap(format!(
                            "{a:?} occurs inside {b:?}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn sorted_keys(&self) -> Vec<&str> {
        let mut keys: Vec<&str> = self.pairs.keys().map(String::as_str).collect();
        keys.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        keys
    }

    /// Applies the map to one text in a single simultaneous pass.
    pub fn apply(&self, text: &str) -> String {
        if self.pairs.is_empty() {
            return text.to_string();
        }
        let keys = self.sorted_keys();
        let mut out = String::with_capacity(text.len());
        let mut last = 0;
        for (start, name) in find_names(text, &keys) {
            out.push_str(&text[last..start]);
            out.push_str(&self.pairs[name]);
            last = start + name.len();
        }
        out.push_str(&text[last..]);
        out
    }
}

/// Non-overlapping whole-word occurrences of `names` in `text`, left to
/// right. `names` should be sorted longest first.
fn find_names<'n>(text: &str, names: &[&'n str]) -> Vec<(usize, &'n str)> {
    let mut hits = Vec::new();
    let mut prev: Option<char> = None;
    let mut pos = 0;
    while pos < text.len() {
        let rest = &text[pos..];
        let found = names.iter().copied().find(|name| {
            if name.is_empty() || !rest.starts_with(name) {
                return false;
            }
            let first = name.chars().next().unwrap();
            let last = name.chars().next_back().unwrap();
            let left_ok = !is_word_char(first) || !prev.is_some_and(is_word_char);
            let right_ok =
                !is_word_char(last) || !rest[name.len()..].chars().next().is_some_and(is_word_char);
            left_ok && right_ok
        });
        match found {
            Some(name) => {
                hits.push((pos, name));
                prev = name.chars().next_back();
                pos += name.len();
            }
            None => {
                let c = rest.chars().next().unwrap();
                prev = Some(c);
                pos += c.len_utf8();
            }
        }
    }
    hits
}

/// Whether `name` occurs as a whole word in `text`.
pub fn mentions(text: &str, name: &str) -> bool {
    !find_names(text, &[name]).is_empty()
}

/// Rewrites role names in the role table and in all texts.
/// Summaries whose text changes are marked `augmented`.
///
/// A target name that is not itself being replaced must not already occur in
/// the example; otherwise the rewrite could not be undone.
pub fn augment_role_replace(
    ex: &ParallelExample,
    map: &RoleMap,
) -> Result<ParallelExample, RoleError> {
    if map.is_empty() {
        return Ok(ex.clone());
    }
    map.validate()?;
    let d = &ex.dialogue;
    let texts = || {
        d.roles
            .iter()
            .chain(d.turns.iter().map(|t| &t.text))
            .chain(ex.summaries.iter().map(|s| &s.text))
    };
    for target in map.pairs.values() {
        if !map.pairs.contains_key(target) && texts().any(|t| mentions(t, target)) {
            return Err(RoleError::AmbiguousMap(format!(
                "target {target:?} already occurs in {}",
                d.id
            )));
        }
    }
    let roles: Vec<String> = d.roles.iter().map(|r| map.apply(r)).collect();
    let distinct: HashSet<&String> = roles.iter().collect();
    if distinct.len() != roles.len() {
        return Err(RoleError::AmbiguousMap(format!(
            "role names collide after replacement in {}",
            d.id
        )));
    }
    let mut out = ex.clone();
    out.dialogue.roles = roles;
    for t in &mut out.dialogue.turns {
        t.text = map.apply(&t.text);
    }
    for s in &mut out.summaries {
        let text = map.apply(&s.text);
        if text != s.text {
            s.text = text;
            s.origin = SummaryOrigin::Augmented;
        }
    }
    Ok(out)
}

/// Maps every role of `d` to a distinct pool name that does not already occur
/// anywhere in the example, seeded by `seed` and the dialogue id.
pub fn random_role_map(
    ex: &ParallelExample,
    pool: &NamePool,
    seed: u64,
) -> Result<RoleMap, RoleError> {
    let d = &ex.dialogue;
    let mut rng = derive_rng(seed, &d.id, 1);
    let order = sample(&mut rng, pool.len(), pool.len());
    let mut pairs = Vec::with_capacity(d.roles.len());
    let mut order = order.into_iter();
    for role in &d.roles {
        let fresh = order.by_ref().map(|i| &pool.names[i]).find(|name| {
            !d.roles.contains(name)
                && !d.turns.iter().any(|t| mentions(&t.text, name))
                && !ex.summaries.iter().any(|s| mentions(&s.text, name))
        });
        match fresh {
            Some(name) => pairs.push((role.clone(), name.clone())),
            None => {
                return Err(RoleError::PoolTooSmall {
                    needed: d.roles.len(),
                    pool: pool.len(),
                })
            }
        }
    }
    Ok(RoleMap::new(pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SummaryRecord;
    use proptest::prelude::*;

    fn support_example() -> ParallelExample {
        ParallelExample::new(
            Dialogue::from_pairs(
                "tw-1",
                "tweetsumm",
                &[
                    (
                        "Customer",
                        "My package never arrived. Agent, can you check?",
                    ),
                    ("Agent", "Sorry to hear that. Customer's order is delayed."),
                ],
            ),
            vec![SummaryRecord::new(
                "Customer reports a missing package and Agent says it is delayed.",
                SummaryOrigin::Annotated,
            )],
        )
    }

    #[test]
    fn shipped_pool_is_large() {
        let pool = NamePool::shipped();
        assert!(pool.len() >= 4000, "{}", pool.len());
    }

    #[test]
    fn role_group_is_seeded() {
        let pool = NamePool::shipped();
        let d = Dialogue::from_pairs("d1", "t", &[("#Person1#", "hi"), ("#Person2#", "yo")]);
        let a = assign_role_group(&d, &pool, 3442, false).unwrap();
        let b = assign_role_group(&d, &pool, 3442, false).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.roles.len(), 2);
        assert_ne!(a.roles[0], a.roles[1]);
        assert!(a.roles.iter().all(|r| pool.contains(r)));
        assert_eq!(a.turns, d.turns);
        let c = assign_role_group(&d, &pool, 3443, false).unwrap();
        assert_ne!(a.roles, c.roles);
        // already pool names: no-op unless forced
        assert_eq!(assign_role_group(&a, &pool, 1, false).unwrap(), a);
        assert_ne!(
            assign_role_group(&a, &pool, 1, true).unwrap().roles,
            a.roles
        );
    }

    #[test]
    fn pool_too_small() {
        let pool = NamePool::parse("Ann\n").unwrap();
        let d = Dialogue::from_pairs("d", "t", &[("A", "x"), ("B", "y")]);
        assert_eq!(
            assign_role_group(&d, &pool, 0, false),
            Err(RoleError::PoolTooSmall { needed: 2, pool: 1 })
        );
    }

    #[test]
    fn pool_rejects_duplicates() {
        assert!(NamePool::parse("Ann\nAnn\n").is_err());
    }

    #[test]
    fn word_boundaries() {
        let m = RoleMap::new([("Ann", "Zoe")]);
        assert_eq!(
            m.apply("Ann's Annual report, Ann."),
            "Zoe's Annual report, Zoe."
        );
        let m = RoleMap::new([("#Person1#", "Danny")]);
        assert_eq!(
            m.apply("#Person1#'s bag (#Person1#)"),
            "Danny's bag (Danny)"
        );
        assert_eq!(m.apply("x#Person1#"), "xDanny");
        assert_eq!(RoleMap::default().apply("Ann"), "Ann");
    }

    #[test]
    fn customer_service_map() {
        let ex = support_example();
        let map = RoleMap::new([("Agent", "Danny"), ("Customer", "Alejandra")]);
        let out = augment_role_replace(&ex, &map).unwrap();
        assert_eq!(out.dialogue.roles, vec!["Alejandra", "Danny"]);
        let all: Vec<&str> = out
            .dialogue
            .turns
            .iter()
            .map(|t| t.text.as_str())
            .chain(out.summaries.iter().map(|s| s.text.as_str()))
            .collect();
        for t in &all {
            assert!(!mentions(t, "Agent") && !mentions(t, "Customer"), "{t}");
        }
        assert!(out.summaries[0].text.contains("Alejandra reports"));
        assert_eq!(out.summaries[0].origin, SummaryOrigin::Augmented);
    }

    #[test]
    fn empty_map_is_identity() {
        let ex = support_example();
        assert_eq!(augment_role_replace(&ex, &RoleMap::default()).unwrap(), ex);
    }

    #[test]
    fn swap_twice_restores_text() {
        let ex = support_example();
        let swap = RoleMap::new([("Agent", "Customer"), ("Customer", "Agent")]);
        let once = augment_role_replace(&ex, &swap).unwrap();
        assert_eq!(once.dialogue.roles, vec!["Agent", "Customer"]);
        assert!(once.summaries[0].text.starts_with("Agent reports"));
        let twice = augment_role_replace(&once, &swap).unwrap();
        assert_eq!(twice.dialogue, ex.dialogue);
        assert_eq!(twice.summaries[0].text, ex.summaries[0].text);
    }

    #[test]
    fn ambiguous_maps_are_rejected() {
        let ex = support_example();
        let m = RoleMap::new([("Agent", "Danny"), ("Customer", "Danny")]);
        assert!(matches!(
            augment_role_replace(&ex, &m),
            Err(RoleError::AmbiguousMap(_))
        ));
        let m = RoleMap::new([("Ann", "X"), ("Ann Lee", "Y")]);
        assert!(m.validate().is_err());
        // target already present in the text
        let m = RoleMap::new([("Agent", "package")]);
        assert!(augment_role_replace(&ex, &m).is_err());
    }

    #[test]
    fn random_map_uses_fresh_names() {
        let ex = support_example();
        let pool = NamePool::shipped();
        let m = random_role_map(&ex, &pool, 3442).unwrap();
        assert_eq!(m.pairs.len(), 2);
        assert_eq!(m, random_role_map(&ex, &pool, 3442).unwrap());
        let out = augment_role_replace(&ex, &m).unwrap();
        let back = augment_role_replace(&out, &m.inverse()).unwrap();
        assert_eq!(back.dialogue, ex.dialogue);
    }

    proptest! {
        #[test]
        fn inverse_restores(words in prop::collection::vec(
                prop::sample::select(vec!["Ann", "Bob", "the", "Annual", "Bob's", "x", "Ann,"]), 1..20),
            swap in any::<bool>()) {
            let text = words.join(" ");
            let ex = ParallelExample::new(
                Dialogue::from_pairs("p", "t", &[("Ann", text.as_str()), ("Bob", "ok")]),
                vec![SummaryRecord::new(text.clone(), SummaryOrigin::Reference)],
            );
            let map = if swap {
                RoleMap::new([("Ann", "Bob"), ("Bob", "Ann")])
            } else {
                RoleMap::new([("Ann", "Zelda"), ("Bob", "Quinn")])
            };
            let out = augment_role_replace(&ex, &map).unwrap();
            let back = augment_role_replace(&out, &map.inverse()).unwrap();
            prop_assert_eq!(&back.dialogue, &ex.dialogue);
            prop_assert_eq!(&back.summaries[0].text, &ex.summaries[0].text);
            // single-token names keep the token count
            prop_assert_eq!(out.dialogue.turns[0].text.split(' ').count(), words.len());
        }
    }
}
