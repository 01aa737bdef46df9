use std::collections::{BTreeSet, HashMap, HashSet};
use std::ops::Bound;

use super::{RdfError, Term, Triple};

type Id = u32;
type Key = (Id, Id, Id);

/// Borrowed view of a stored triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TripleRef<'a> {
    pub subject: &'a Term,
    pub predicate: &'a Term,
    pub object: &'a Term,
}

impl TripleRef<'_> {
    pub fn to_owned(&self) -> Triple {
        Triple::new(self.subject.clone(), self.predicate.clone(), self.object.clone())
            .expect("stored triples are valid")
    }
}

/// Set of triples with SPO, POS and OSP permutation indexes over interned term ids.
///
/// Mutation needs `&mut self`, so a shared `&Graph` (or `Arc<Graph>`) is frozen
/// for the lifetime of the borrow.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    terms: Vec<Term>,
    ids: HashMap<Term, Id>,
    spo: BTreeSet<Key>,
    pos: BTreeSet<Key>,
    osp: BTreeSet<Key>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    /// Inserts a triple, returning `true` if it was not already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        let (s, p, o) = triple.into_parts();
        let (s, p, o) = (self.intern(s), self.intern(p), self.intern(o));
        if !self.spo.insert((s, p, o)) {
            return false;
        }
        self.pos.insert((p, o, s));
        self.osp.insert((o, s, p));
        true
    }

    /// Validates the parts and inserts them.
    pub fn insert_terms(&mut self, subject: Term, predicate: Term, object: Term) -> Result<bool, RdfError> {
        Ok(self.insert(Triple::new(subject, predicate, object)?))
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        match (
            self.ids.get(triple.subject()),
            self.ids.get(triple.predicate()),
            self.ids.get(triple.object()),
        ) {
            (Some(&s), Some(&p), Some(&o)) => self.spo.contains(&(s, p, o)),
            _ => false,
        }
    }

    fn intern(&mut self, term: Term) -> Id {
        if let Some(&id) = self.ids.get(&term) {
            return id;
        }
        let id = Id::try_from(self.terms.len()).expect("term dictionary overflow");
        self.terms.push(term.clone());
        self.ids.insert(term, id);
        id
    }

    fn view(&self, (s, p, o): Key) -> TripleRef<'_> {
        TripleRef {
            subject: &self.terms[s as usize],
            predicate: &self.terms[p as usize],
            object: &self.terms[o as usize],
        }
    }

    /// All triples in SPO index order.
    pub fn iter(&self) -> impl Iterator<Item = TripleRef<'_>> + '_ {
        self.spo.iter().map(|&k| self.view(k))
    }

    pub fn triples(&self) -> Vec<Triple> {
        self.iter().map(|t| t.to_owned()).collect()
    }

    /// Triples agreeing with every concrete position. Uses the index whose
    /// bound prefix is longest.
    pub fn matching<'a>(
        &'a self,
        subject: Option<&Term>,
        predicate: Option<&Term>,
        object: Option<&Term>,
    ) -> Box<dyn Iterator<Item = TripleRef<'a>> + 'a> {
        let lookup = |t: Option<&Term>| match t {
            None => Some(None),
            Some(t) => self.ids.get(t).map(|&id| Some(id)),
        };
        // A concrete term absent from the dictionary matches nothing.
        let (Some(s), Some(p), Some(o)) = (lookup(subject), lookup(predicate), lookup(object)) else {
            return Box::new(std::iter::empty());
        };
        match (s, p, o) {
            (Some(s), Some(p), Some(o)) => {
                let hit = self.spo.contains(&(s, p, o)).then(|| self.view((s, p, o)));
                Box::new(hit.into_iter())
            }
            (Some(s), Some(p), None) => Box::new(prefix2(&self.spo, s, p).map(|&k| self.view(k))),
            (Some(s), None, None) => Box::new(prefix1(&self.spo, s).map(|&k| self.view(k))),
            (None, Some(p), Some(o)) => Box::new(prefix2(&self.pos, p, o).map(|&(p, o, s)| self.view((s, p, o)))),
            (None, Some(p), None) => Box::new(prefix1(&self.pos, p).map(|&(p, o, s)| self.view((s, p, o)))),
            (Some(s), None, Some(o)) => Box::new(prefix2(&self.osp, o, s).map(|&(o, s, p)| self.view((s, p, o)))),
            (None, None, Some(o)) => Box::new(prefix1(&self.osp, o).map(|&(o, s, p)| self.view((s, p, o)))),
            (None, None, None) => Box::new(self.iter()),
        }
    }

    /// Owned variant of [`Graph::matching`].
    pub fn match_pattern(
        &self,
        subject: Option<&Term>,
        predicate: Option<&Term>,
        object: Option<&Term>,
    ) -> Vec<Triple> {
        self.matching(subject, predicate, object)
            .map(|t| t.to_owned())
            .collect()
    }

    pub fn blank_labels(&self) -> HashSet<&str> {
        self.terms
            .iter()
            .filter_map(|t| match t {
                Term::BlankNode(label) => Some(label.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Set union. Blank nodes of `other` are renamed under a prefix that no
    /// label of `self` uses, so blanks from the two sources never merge.
    pub fn union(&self, other: &Graph) -> Graph {
        let mut out = self.clone();
        out.absorb(other);
        out
    }

    /// In-place form of [`Graph::union`].
    pub fn absorb(&mut self, other: &Graph) {
        let ours = self.blank_labels();
        let prefix = if ours.is_empty() || other.blank_labels().is_empty() {
            None
        } else {
            let prefix = (0u64..)
                .map(|n| format!("u{n}x"))
                .find(|p| !ours.iter().any(|l| l.starts_with(p.as_str())))
                .expect("unbounded search");
            Some(prefix)
        };
        let rename = |t: &Term| match (t, &prefix) {
            (Term::BlankNode(label), Some(prefix)) => Term::BlankNode(format!("{prefix}{label}")),
            _ => t.clone(),
        };
        let incoming: Vec<Triple> = other
            .iter()
            .map(|t| {
                Triple::new(rename(t.subject), t.predicate.clone(), rename(t.object))
                    .expect("renaming keeps positions valid")
            })
            .collect();
        for t in incoming {
            self.insert(t);
        }
    }

    #[cfg(test)]
    pub(crate) fn indexes_agree(&self) -> bool {
        let from_pos: BTreeSet<Key> = self.pos.iter().map(|&(p, o, s)| (s, p, o)).collect();
        let from_osp: BTreeSet<Key> = self.osp.iter().map(|&(o, s, p)| (s, p, o)).collect();
        from_pos == self.spo && from_osp == self.spo
    }
}

impl PartialEq for Graph {
    /// Structural set equality over terms (blank labels compared literally).
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.iter().all(|t| other.contains(&t.to_owned()))
    }
}

impl Eq for Graph {}

impl FromIterator<Triple> for Graph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        let mut g = Graph::new();
        for t in iter {
            g.insert(t);
        }
        g
    }
}

impl Extend<Triple> for Graph {
    fn extend<I: IntoIterator<Item = Triple>>(&mut self, iter: I) {
        for t in iter {
            self.insert(t);
        }
    }
}

fn prefix1(index: &BTreeSet<Key>, a: Id) -> impl Iterator<Item = &Key> {
    index.range((Bound::Included((a, 0, 0)), Bound::Included((a, Id::MAX, Id::MAX))))
}

fn prefix2(index: &BTreeSet<Key>, a: Id, b: Id) -> impl Iterator<Item = &Key> {
    index.range((Bound::Included((a, b, 0)), Bound::Included((a, b, Id::MAX))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn iri(s: &str) -> Term {
        Term::iri(format!("http://ex/{s}")).unwrap()
    }

    fn triple(s: &str, p: &str, o: &str) -> Triple {
        Triple::new(iri(s), iri(p), iri(o)).unwrap()
    }

    fn random_term(rng: &mut ChaCha8Rng, pool: usize) -> Term {
        match rng.gen_range(0..4) {
            0 => Term::blank(format!("b{}", rng.gen_range(0..pool))).unwrap(),
            1 => Term::string(format!("v{}", rng.gen_range(0..pool))),
            _ => iri(&format!("n{}", rng.gen_range(0..pool))),
        }
    }

    fn random_triple(rng: &mut ChaCha8Rng, pool: usize) -> Triple {
        let s = loop {
            let t = random_term(rng, pool);
            if !t.is_literal() {
                break t;
            }
        };
        let p = iri(&format!("p{}", rng.gen_range(0..3)));
        Triple::new(s, p, random_term(rng, pool)).unwrap()
    }

    #[test]
    fn insert_into_empty() {
        let mut g = Graph::new();
        assert!(g.insert(triple("a", "p", "b")));
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn duplicate_insert_is_noop() {
        let mut g = Graph::new();
        g.insert(triple("a", "p", "b"));
        assert!(!g.insert(triple("a", "p", "b")));
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn literal_subject_rejected() {
        let mut g = Graph::new();
        assert_eq!(
            g.insert_terms(Term::string("x"), iri("p"), iri("o")),
            Err(RdfError::LiteralSubject)
        );
        assert_eq!(
            g.insert_terms(iri("s"), Term::string("p"), iri("o")),
            Err(RdfError::NonIriPredicate)
        );
        assert!(g.is_empty());
    }

    #[test]
    fn thousand_distinct_inserts() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut oracle = std::collections::HashSet::new();
        let mut g = Graph::new();
        while oracle.len() < 1000 {
            let t = random_triple(&mut rng, 400);
            if oracle.insert(t.clone()) {
                assert!(g.insert(t));
            }
        }
        assert_eq!(g.len(), 1000);
        assert_eq!(g.matching(None, None, None).count(), 1000);
        assert!(g.indexes_agree());
    }

    #[test]
    fn single_concrete_match() {
        let g: Graph = [triple("a", "p", "b"), triple("a", "q", "c")].into_iter().collect();
        let hits = g.match_pattern(Some(&iri("a")), Some(&iri("p")), None);
        assert_eq!(hits, vec![triple("a", "p", "b")]);
        assert_eq!(g.match_pattern(None, None, None).len(), 2);
        assert!(g.match_pattern(Some(&iri("zz")), None, None).is_empty());
    }

    #[test]
    fn match_agrees_with_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g: Graph = (0..60).map(|_| random_triple(&mut rng, 8)).collect();
        let all = g.triples();
        for _ in 0..100 {
            let probe = random_triple(&mut rng, 8);
            let s = rng.gen_bool(0.5).then(|| probe.subject().clone());
            let p = rng.gen_bool(0.5).then(|| probe.predicate().clone());
            let o = rng.gen_bool(0.5).then(|| probe.object().clone());
            let mut got = g.match_pattern(s.as_ref(), p.as_ref(), o.as_ref());
            let mut want: Vec<Triple> = all
                .iter()
                .filter(|t| {
                    s.as_ref().is_none_or(|s| s == t.subject())
                        && p.as_ref().is_none_or(|p| p == t.predicate())
                        && o.as_ref().is_none_or(|o| o == t.object())
                })
                .cloned()
                .collect();
            got.sort();
            want.sort();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn union_identity_and_idempotence() {
        let g: Graph = [triple("a", "p", "b"), triple("b", "p", "c")].into_iter().collect();
        assert_eq!(g.union(&Graph::new()), g);
        assert_eq!(g.union(&g).len(), g.len());
    }

    #[test]
    fn union_of_disjoint_ground_graphs() {
        let a: Graph = (0..10).map(|i| triple(&format!("a{i}"), "p", "x")).collect();
        let b: Graph = (0..15).map(|i| triple(&format!("b{i}"), "p", "x")).collect();
        assert_eq!(a.union(&b).len(), 25);
    }

    #[test]
    fn union_keeps_blank_nodes_apart() {
        let t = Triple::new(Term::blank("x").unwrap(), iri("p"), iri("o")).unwrap();
        let g: Graph = [t].into_iter().collect();
        let u = g.union(&g);
        assert_eq!(u.len(), 2);
        assert_eq!(u.blank_labels().len(), 2);
    }

    proptest::proptest! {
        #[test]
        fn exact_match_returns_inserted(seed in 0u64..500, n in 1usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut g = Graph::new();
            let mut inserted = Vec::new();
            for _ in 0..n {
                let t = random_triple(&mut rng, 6);
                g.insert(t.clone());
                inserted.push(t);
            }
            proptest::prop_assert!(g.indexes_agree());
            for t in inserted {
                let hits = g.match_pattern(Some(t.subject()), Some(t.predicate()), Some(t.object()));
                proptest::prop_assert_eq!(hits, vec![t]);
            }
        }
    }
}
