use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::{Hash, Hasher};

use super::{Graph, Term, Triple};

/// Graph isomorphism up to a bijection of blank nodes.
///
/// Color refinement narrows the candidates, then a backtracking search
/// checks an actual bijection.
pub fn isomorphic(a: &Graph, b: &Graph) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let (ground_a, blank_a) = split(a);
    let (ground_b, blank_b) = split(b);
    if ground_a != ground_b || blank_a.len() != blank_b.len() {
        return false;
    }
    let colors_a = refine(&blank_a);
    let colors_b = refine(&blank_b);
    let mut hist_a: Vec<u64> = colors_a.values().copied().collect();
    let mut hist_b: Vec<u64> = colors_b.values().copied().collect();
    hist_a.sort_unstable();
    hist_b.sort_unstable();
    if hist_a != hist_b {
        return false;
    }

    let target: HashSet<&Triple> = blank_b.iter().collect();
    let mut nodes: Vec<&str> = colors_a.keys().copied().collect();
    nodes.sort_by_key(|n| (colors_a[n], *n));
    let mut candidates: BTreeMap<u64, Vec<&str>> = BTreeMap::new();
    for (node, color) in &colors_b {
        candidates.entry(*color).or_default().push(node);
    }
    let mut by_node: HashMap<&str, Vec<&Triple>> = HashMap::new();
    for t in &blank_a {
        for label in blank_labels(t) {
            by_node.entry(label).or_default().push(t);
        }
    }
    let mut mapping = HashMap::new();
    let mut used = HashSet::new();
    search(
        0,
        &nodes,
        &colors_a,
        &candidates,
        &by_node,
        &target,
        &mut mapping,
        &mut used,
    )
}

fn split(g: &Graph) -> (HashSet<Triple>, Vec<Triple>) {
    let mut ground = HashSet::new();
    let mut blank = Vec::new();
    for t in g.iter() {
        let t = t.to_owned();
        if t.subject().is_blank() || t.object().is_blank() {
            blank.push(t);
        } else {
            ground.insert(t);
        }
    }
    (ground, blank)
}

fn blank_labels(t: &Triple) -> impl Iterator<Item = &str> {
    [t.subject(), t.object()].into_iter().filter_map(|x| match x {
        Term::BlankNode(l) => Some(l.as_str()),
        _ => None,
    })
}

fn refine(triples: &[Triple]) -> HashMap<&str, u64> {
    let mut colors: HashMap<&str, u64> = HashMap::new();
    for t in triples {
        for l in blank_labels(t) {
            colors.insert(l, 0);
        }
    }
    let rounds = colors.len().min(16) + 1;
    for _ in 0..rounds {
        let mut sigs: HashMap<&str, Vec<u64>> = HashMap::new();
        for t in triples {
            let shade = |term: &Term| -> u64 {
                let mut h = DefaultHasher::new();
                match term {
                    Term::BlankNode(l) => ("blank", colors[l.as_str()]).hash(&mut h),
                    other => ("ground", other).hash(&mut h),
                }
                h.finish()
            };
            let s = shade(t.subject());
            let o = shade(t.object());
            let mut h = DefaultHasher::new();
            t.predicate().hash(&mut h);
            let p = h.finish();
            if let Term::BlankNode(l) = t.subject() {
                sigs.entry(l).or_default().push(hash3(1, p, o));
            }
            if let Term::BlankNode(l) = t.object() {
                sigs.entry(l).or_default().push(hash3(2, p, s));
            }
        }
        let next: HashMap<&str, u64> = colors
            .iter()
            .map(|(node, old)| {
                let mut sig = sigs.remove(node).unwrap_or_default();
                sig.sort_unstable();
                let mut h = DefaultHasher::new();
                old.hash(&mut h);
                sig.hash(&mut h);
                (*node, h.finish())
            })
            .collect();
        colors = next;
    }
    colors
}

fn hash3(a: u64, b: u64, c: u64) -> u64 {
    let mut h = DefaultHasher::new();
    (a, b, c).hash(&mut h);
    h.finish()
}

#[allow(clippy::too_many_arguments)]
fn search<'a>(
    depth: usize,
    nodes: &[&'a str],
    colors: &HashMap<&'a str, u64>,
    candidates: &BTreeMap<u64, Vec<&'a str>>,
    by_node: &HashMap<&'a str, Vec<&'a Triple>>,
    target: &HashSet<&Triple>,
    mapping: &mut HashMap<&'a str, &'a str>,
    used: &mut HashSet<&'a str>,
) -> bool {
    let Some(&node) = nodes.get(depth) else {
        return true;
    };
    let Some(options) = candidates.get(&colors[node]) else {
        return false;
    };
    for &cand in options {
        if used.contains(cand) {
            continue;
        }
        mapping.insert(node, cand);
        used.insert(cand);
        if consistent(node, mapping, by_node, target)
            && search(depth + 1, nodes, colors, candidates, by_node, target, mapping, used)
        {
            return true;
        }
        mapping.remove(node);
        used.remove(cand);
    }
    false
}

fn consistent(
    node: &str,
    mapping: &HashMap<&str, &str>,
    by_node: &HashMap<&str, Vec<&Triple>>,
    target: &HashSet<&Triple>,
) -> bool {
    let map = |t: &Term| -> Option<Term> {
        match t {
            Term::BlankNode(l) => mapping.get(l.as_str()).map(|m| Term::BlankNode((*m).to_owned())),
            other => Some(other.clone()),
        }
    };
    by_node
        .get(node)
        .into_iter()
        .flatten()
        .all(|t| match (map(t.subject()), map(t.object())) {
            (Some(s), Some(o)) => {
                let mapped = Triple::new(s, t.predicate().clone(), o).expect("valid positions");
                target.contains(&mapped)
            }
            _ => true,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::parse_ntriples;

    #[test]
    fn relabeled_graphs_are_isomorphic() {
        let a = parse_ntriples("_:a <p:p> _:b .\n_:b <p:p> _:c .\n_:c <p:q> \"x\" .\n").unwrap();
        let b = parse_ntriples("_:z <p:p> _:y .\n_:y <p:p> _:x .\n_:x <p:q> \"x\" .\n").unwrap();
        assert!(isomorphic(&a, &b));
    }

    #[test]
    fn structure_differences_detected() {
        let a = parse_ntriples("_:a <p:p> _:b .\n_:b <p:p> _:a .\n").unwrap();
        let b = parse_ntriples("_:a <p:p> _:a .\n_:b <p:p> _:b .\n").unwrap();
        assert!(!isomorphic(&a, &b));
        let c = parse_ntriples("<p:s> <p:p> \"1\" .\n").unwrap();
        let d = parse_ntriples("<p:s> <p:p> \"2\" .\n").unwrap();
        assert!(!isomorphic(&c, &d));
    }

    #[test]
    fn symmetric_cycles_need_search() {
        // Two 3-cycles vs one 6-cycle: refinement alone cannot tell them apart.
        let two = parse_ntriples(
            "_:a <p:p> _:b .\n_:b <p:p> _:c .\n_:c <p:p> _:a .\n_:d <p:p> _:e .\n_:e <p:p> _:f .\n_:f <p:p> _:d .\n",
        )
        .unwrap();
        let six = parse_ntriples(
            "_:a <p:p> _:b .\n_:b <p:p> _:c .\n_:c <p:p> _:d .\n_:d <p:p> _:e .\n_:e <p:p> _:f .\n_:f <p:p> _:a .\n",
        )
        .unwrap();
        assert!(!isomorphic(&two, &six));
        assert!(isomorphic(&six, &six.clone()));
    }
}
