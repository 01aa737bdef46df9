//! Deterministic fixtures: an ortholog graph for the native endpoint and
//! protein-network JSON documents for the mock Web API.
//!
//! Gene 0 is the wheat gene OMT2 and gene 1 its rice ortholog, whose
//! protein OS01G0700900 is given exactly ten interaction partners when the
//! sizes allow it.

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::path::Path;
use std::str::FromStr;

use fedql_core::rdf::vocab::rdf;
use fedql_core::rdf::{serialize_ntriples, Graph, Term, Triple};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Number, Value as Json};

pub const WHEAT: u32 = 4565;
pub const RICE: u32 = 4530;
pub const ARABIDOPSIS: u32 = 3702;
pub const MAIZE: u32 = 4577;
pub const SPECIES: [u32; 4] = [WHEAT, RICE, ARABIDOPSIS, MAIZE];

pub const ORTH: &str = "http://example.org/orth#";
pub const TARGET_LABEL: &str = "OMT2";
pub const TARGET_PROTEIN: &str = "OS01G0700900";
/// Interactions engineered onto the target's rice ortholog.
pub const TARGET_INTERACTIONS: usize = 10;

pub const NETWORK_TYPES: [&str; 2] = ["functional", "physical"];

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_GENES: usize = 200;
pub const DEFAULT_INTERACTIONS: usize = 500;

pub fn gene_iri(id: usize) -> String {
    format!("http://example.org/oma/gene/{id}")
}

pub fn taxon_iri(species: u32) -> String {
    format!("http://example.org/taxonomy/{species}")
}

pub fn orth(local: &str) -> Term {
    Term::Iri(format!("{ORTH}{local}"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gene {
    pub id: usize,
    pub species: u32,
    pub label: String,
    pub protein: String,
}

/// An undirected interaction between the proteins of two genes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub a: usize,
    pub b: usize,
    /// Combined score in thousandths.
    pub score: u16,
    pub physical: bool,
}

impl Interaction {
    pub fn score_text(&self) -> String {
        score_text(self.score)
    }
}

pub fn score_text(thousandths: u16) -> String {
    format!("{}.{:03}", thousandths / 1000, thousandths % 1000)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureSet {
    pub seed: u64,
    pub genes: Vec<Gene>,
    /// Unordered pairs, smaller id first.
    pub orthologs: Vec<(usize, usize)>,
    pub interactions: Vec<Interaction>,
}

fn protein_id(id: usize, species: u32) -> String {
    match (id, species) {
        (1, _) => TARGET_PROTEIN.to_owned(),
        (_, WHEAT) => format!("TRAES{id:07}"),
        (_, RICE) => format!("OS{:02}G{:07}", id % 12 + 1, id),
        (_, ARABIDOPSIS) => format!("AT{}G{:05}", id % 5 + 1, id),
        _ => format!("ZM{id:08}"),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("at least 2 genes are required, got {0}")]
    TooFewGenes(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Builds the fixture lists. A pure function of its arguments.
pub fn gen_fixtures(seed: u64, n_genes: usize, n_interactions: usize) -> Result<FixtureSet, FixtureError> {
    if n_genes < 2 {
        return Err(FixtureError::TooFewGenes(n_genes));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let genes: Vec<Gene> = (0..n_genes)
        .map(|id| {
            let species = match id {
                0 => WHEAT,
                1 => RICE,
                _ => SPECIES[rng.gen_range(0..SPECIES.len())],
            };
            let label = if id == 0 {
                TARGET_LABEL.to_owned()
            } else {
                format!("GENE{id:04}")
            };
            Gene {
                id,
                species,
                label,
                protein: protein_id(id, species),
            }
        })
        .collect();

    // OMT2 has one ortholog per other species; only gene 1 lives in rice.
    let mut orthologs = BTreeSet::from([(0, 1)]);
    for sp in [ARABIDOPSIS, MAIZE] {
        if let Some(g) = genes.iter().find(|g| g.species == sp) {
            orthologs.insert((0, g.id));
        }
    }
    if n_genes > 2 {
        for _ in 0..n_genes {
            let i = rng.gen_range(1..n_genes);
            let j = rng.gen_range(1..n_genes);
            if genes[i].species != genes[j].species {
                orthologs.insert((i.min(j), i.max(j)));
            }
        }
    }

    let mut pairs = BTreeSet::new();
    let mut interactions = Vec::new();
    let mut partners: Vec<usize> = genes
        .iter()
        .filter(|g| g.species == RICE && g.id != 1)
        .map(|g| g.id)
        .collect();
    partners.shuffle(&mut rng);
    for &p in partners.iter().take(TARGET_INTERACTIONS.min(n_interactions)) {
        pairs.insert((1, p));
        interactions.push(Interaction {
            a: 1,
            b: p,
            score: rng.gen_range(150..1000),
            physical: rng.gen_bool(0.4),
        });
    }
    // The rest never touch the target protein, so its count stays exact.
    let mut attempts = 0;
    while interactions.len() < n_interactions && attempts < 50 * n_interactions.max(1) {
        attempts += 1;
        let i = rng.gen_range(0..n_genes);
        let j = rng.gen_range(0..n_genes);
        let key = (i.min(j), i.max(j));
        if i == j || i == 1 || j == 1 || genes[i].species != genes[j].species || pairs.contains(&key) {
            continue;
        }
        pairs.insert(key);
        interactions.push(Interaction {
            a: key.0,
            b: key.1,
            score: rng.gen_range(150..1000),
            physical: rng.gen_bool(0.4),
        });
    }

    Ok(FixtureSet {
        seed,
        genes,
        orthologs: orthologs.into_iter().collect(),
        interactions,
    })
}

impl FixtureSet {
    pub fn gene_by_label(&self, label: &str) -> Option<&Gene> {
        self.genes.iter().find(|g| g.label == label)
    }

    pub fn gene_by_protein(&self, protein: &str) -> Option<&Gene> {
        self.genes.iter().find(|g| g.protein == protein)
    }

    /// Ortholog partners of a gene, in id order.
    pub fn orthologs_of(&self, id: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .orthologs
            .iter()
            .filter_map(|&(a, b)| match (a == id, b == id) {
                (true, _) => Some(b),
                (_, true) => Some(a),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// The edges a network request for `protein` returns, oriented from
    /// `protein`: (partner gene id, score in thousandths).
    pub fn network(&self, protein: &str, network_type: &str) -> Vec<(usize, u16)> {
        let Some(gene) = self.gene_by_protein(protein) else {
            return Vec::new();
        };
        self.interactions
            .iter()
            .filter(|i| network_type != "physical" || i.physical)
            .filter_map(|i| match (i.a == gene.id, i.b == gene.id) {
                (true, _) => Some((i.b, i.score)),
                (_, true) => Some((i.a, i.score)),
                _ => None,
            })
            .collect()
    }

    /// The ortholog graph served by the native endpoint.
    pub fn oma_graph(&self) -> Graph {
        let mut g = Graph::new();
        let mut add = |s: &str, p: Term, o: Term| {
            g.insert(Triple::new(Term::Iri(s.to_owned()), p, o).expect("fixture triples are well formed"));
        };
        for gene in &self.genes {
            let s = gene_iri(gene.id);
            add(&s, Term::Iri(rdf::TYPE.to_owned()), orth("Gene"));
            add(&s, orth("label"), Term::string(gene.label.as_str()));
            add(&s, orth("organism"), Term::Iri(taxon_iri(gene.species)));
            add(&s, orth("hasProteinId"), Term::string(gene.protein.as_str()));
        }
        for &(a, b) in &self.orthologs {
            add(&gene_iri(a), orth("hasOrtholog"), Term::Iri(gene_iri(b)));
            add(&gene_iri(b), orth("hasOrtholog"), Term::Iri(gene_iri(a)));
        }
        g
    }

    /// The API document for one (protein, network type), or `None` when the
    /// protein has no edges of that type.
    pub fn network_doc(&self, protein: &str, network_type: &str) -> Option<Json> {
        let gene = self.gene_by_protein(protein)?;
        let edges = self.network(protein, network_type);
        if edges.is_empty() {
            return None;
        }
        let node = |g: &Gene| json!({"stringId": g.protein, "preferredName": g.label, "ncbiTaxonId": g.species});
        let mut nodes = vec![node(gene)];
        nodes.extend(edges.iter().map(|&(p, _)| node(&self.genes[p])));
        let edges: Vec<Json> = edges
            .iter()
            .map(|&(p, score)| {
                let score = Number::from_str(&score_text(score)).expect("decimal scores parse");
                json!({"stringId_A": gene.protein, "stringId_B": self.genes[p].protein, "score": score})
            })
            .collect();
        Some(json!({"nodes": nodes, "edges": edges}))
    }

    /// Every API document keyed by its fixture path
    /// `string/{network_type}/{species}_{identifiers}.json`.
    pub fn network_files(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for t in NETWORK_TYPES {
            for g in &self.genes {
                if let Some(doc) = self.network_doc(&g.protein, t) {
                    out.insert(network_path(t, g.species, &g.protein), format!("{doc}\n"));
                }
            }
        }
        out
    }

    /// Writes `oma.nt`, the API documents, `fixture.json` and `expected.json`.
    pub fn write(&self, out_dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(out_dir)?;
        std::fs::write(out_dir.join("oma.nt"), serialize_ntriples(&self.oma_graph()))?;
        for (path, doc) in self.network_files() {
            let full = out_dir.join(path);
            std::fs::create_dir_all(full.parent().expect("fixture paths have a parent"))?;
            std::fs::write(full, doc)?;
        }
        let raw = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        std::fs::write(out_dir.join("fixture.json"), raw + "\n")?;
        let expected = serde_json::to_string_pretty(&crate::oracle::expected(self)).map_err(io::Error::other)?;
        std::fs::write(out_dir.join("expected.json"), expected + "\n")?;
        Ok(())
    }
}

pub fn network_path(network_type: &str, species: u32, protein: &str) -> String {
    format!("string/{network_type}/{species}_{protein}.json")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_fixture_engineers_the_target() {
        let f = gen_fixtures(DEFAULT_SEED, DEFAULT_GENES, DEFAULT_INTERACTIONS).unwrap();
        assert_eq!(f.genes.len(), DEFAULT_GENES);
        assert_eq!(f.interactions.len(), DEFAULT_INTERACTIONS);
        let omt2 = f.gene_by_label(TARGET_LABEL).unwrap();
        let rice: Vec<usize> = f
            .orthologs_of(omt2.id)
            .into_iter()
            .filter(|&g| f.genes[g].species == RICE)
            .collect();
        assert_eq!(rice, [1]);
        assert_eq!(f.genes[1].protein, TARGET_PROTEIN);
        let net = f.network(TARGET_PROTEIN, "functional");
        assert_eq!(net.len(), TARGET_INTERACTIONS);
        let partners: BTreeSet<usize> = net.iter().map(|e| e.0).collect();
        assert_eq!(partners.len(), TARGET_INTERACTIONS);
        assert!(partners.iter().all(|&p| f.genes[p].species == RICE));
    }

    #[test]
    fn interactions_are_distinct_and_within_species() {
        let f = gen_fixtures(7, 120, 300).unwrap();
        let pairs: BTreeSet<(usize, usize)> = f.interactions.iter().map(|i| (i.a.min(i.b), i.a.max(i.b))).collect();
        assert_eq!(pairs.len(), f.interactions.len());
        for i in &f.interactions {
            assert_ne!(i.a, i.b);
            assert_eq!(f.genes[i.a].species, f.genes[i.b].species);
            assert!((150..1000).contains(&i.score));
        }
        let proteins: BTreeSet<&str> = f.genes.iter().map(|g| g.protein.as_str()).collect();
        assert_eq!(proteins.len(), f.genes.len());
    }

    #[test]
    fn minimal_fixture() {
        let f = gen_fixtures(1, 2, 0).unwrap();
        assert_eq!(f.orthologs, [(0, 1)]);
        assert!(f.interactions.is_empty());
        assert!(f.network_files().is_empty());
        assert!(matches!(gen_fixtures(1, 1, 0), Err(FixtureError::TooFewGenes(1))));
    }

    #[test]
    fn scores_keep_three_decimals() {
        assert_eq!(score_text(150), "0.150");
        assert_eq!(score_text(999), "0.999");
        let f = gen_fixtures(DEFAULT_SEED, 50, 60).unwrap();
        let doc = f.network_doc(TARGET_PROTEIN, "functional").unwrap().to_string();
        assert!(
            doc.contains(&format!("\"score\":{}", f.interactions[0].score_text())),
            "{doc}"
        );
    }
}
