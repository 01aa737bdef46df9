use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::*;
use crate::rdf::{isomorphic, serialize_ntriples};
use crate::testkit::{lift_count, random_json};

fn cfg() -> LiftConfig {
    LiftConfig::new("http://b/#", "http://r/doc").unwrap()
}

fn parse(text: &str) -> Json {
    serde_json::from_str(text).unwrap()
}

#[test]
fn single_key() {
    let g = lift_json(&json!({"name": "OMT2"}), &cfg());
    let expect = Triple::new(
        Term::iri("http://r/doc").unwrap(),
        Term::iri("http://b/#name").unwrap(),
        Term::string("OMT2"),
    )
    .unwrap();
    assert_eq!(g.triples(), vec![expect]);
}

#[test]
fn number_typing_keeps_lexical_form() {
    let g = lift_json(
        &parse(r#"{"score":0.92,"n":7,"big":123456789012345678901234567890,"e":1e3}"#),
        &cfg(),
    );
    let lits: BTreeMap<String, (String, String)> = g
        .triples()
        .iter()
        .map(|t| {
            let l = t.object().as_literal().unwrap();
            (
                t.predicate().as_iri().unwrap().to_owned(),
                (l.lexical().to_owned(), l.datatype().to_owned()),
            )
        })
        .collect();
    assert_eq!(lits["http://b/#score"], ("0.92".to_owned(), xsd::DOUBLE.to_owned()));
    assert_eq!(lits["http://b/#n"], ("7".to_owned(), xsd::INTEGER.to_owned()));
    assert_eq!(lits["http://b/#big"].0, "123456789012345678901234567890");
    // The JSON parser normalizes exponent notation; the value is unchanged.
    assert_eq!(lits["http://b/#e"], ("1e+3".to_owned(), xsd::DOUBLE.to_owned()));
}

#[test]
fn array_of_objects() {
    let g = lift_json(&json!({"edges": [{"a": 1}, {"a": 2}]}), &cfg());
    assert_eq!(g.len(), 6);
    assert_eq!(g.blank_labels().len(), 2);
    let index = Term::iri("http://b/#_index").unwrap();
    let mut positions: Vec<String> = g
        .matching(None, Some(&index), None)
        .map(|t| t.object.as_literal().unwrap().lexical().to_owned())
        .collect();
    positions.sort();
    assert_eq!(positions, ["0", "1"]);
}

#[test]
fn nulls_scalars_and_empties() {
    assert!(lift_json(&Json::Null, &cfg()).is_empty());
    assert!(lift_json(&json!("x"), &cfg()).is_empty());
    assert!(lift_json(&json!({}), &cfg()).is_empty());
    assert!(lift_json(&json!([]), &cfg()).is_empty());
    assert!(lift_json(&json!({"gone": null}), &cfg()).is_empty());
    // An empty object under a key still exists as a node.
    assert_eq!(lift_json(&json!({"meta": {}}), &cfg()).len(), 1);
    // Scalar array elements carry no position.
    assert_eq!(lift_json(&json!({"ids": ["a", "b", null]}), &cfg()).len(), 2);
}

#[test]
fn root_and_nested_arrays_use_item() {
    let g = lift_json(&json!([1, [2, 3]]), &cfg());
    let item = Term::iri("http://b/#_item").unwrap();
    assert_eq!(g.matching(None, Some(&item), None).count(), 4);
    assert_eq!(g.len(), 5);
}

#[test]
fn keys_are_percent_encoded() {
    let g = lift_json(&json!({"a b/c": true}), &cfg());
    assert_eq!(g.triples()[0].predicate().as_iri(), Some("http://b/#a%20b%2Fc"));
    assert_eq!(g.triples()[0].object(), &Term::boolean(true));
}

#[test]
fn config_validation() {
    assert!(LiftConfig::new("http://b/x", "http://r").is_err());
    assert!(LiftConfig::new("http://b/", "not an iri").is_err());
}

#[test]
fn counts_match_rule_oracle_and_lifting_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for i in 0..50 {
        let doc = random_json(&mut rng, 4);
        let a = lift_json(&doc, &cfg());
        assert_eq!(a.len(), lift_count(&doc), "document {i}: {doc}");
        let b = lift_json(&doc, &cfg());
        assert_eq!(serialize_ntriples(&a), serialize_ntriples(&b));
    }
}

#[test]
fn literals_come_from_the_document() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let index = Term::iri("http://b/#_index").unwrap();
    for _ in 0..50 {
        let doc = random_json(&mut rng, 4);
        let text = doc.to_string();
        for t in lift_json(&doc, &cfg()).triples() {
            if let (Some(lit), false) = (t.object().as_literal(), t.predicate() == &index) {
                let lex = serde_json::to_string(lit.lexical()).unwrap();
                let lex = if lit.is_simple() { lex.as_str() } else { lit.lexical() };
                assert!(text.contains(lex), "{lex} not in {text}");
            }
        }
    }
}

const STRING_LIKE: &str = r#"
PREFIX b: <http://b/#>
PREFIX s: <http://s/>
CONSTRUCT { ?na s:interactsWith ?nb } WHERE {
  ?doc b:edges ?e . ?e b:a ?x . ?e b:b ?y .
  ?doc b:nodes ?na . ?na b:id ?x . ?doc b:nodes ?nb . ?nb b:id ?y .
  FILTER(?sp = "4565")
}"#;

fn spec() -> MappingSpec {
    MappingSpec::from_parts(
        STRING_LIKE,
        r#"{"base": "http://b/#", "root": "http://r/doc", "param_vars": {"species": "?sp"}}"#,
    )
    .unwrap()
}

fn params(sp: &str) -> BTreeMap<String, String> {
    [("species".to_owned(), sp.to_owned())].into_iter().collect()
}

#[test]
fn mapping_rewrites_edges() {
    let doc = json!({"nodes": [{"id": "p1"}, {"id": "p2"}], "edges": [{"a": "p1", "b": "p2"}]});
    let out = map_response(&doc, &spec(), &params("4565")).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out.triples()[0].predicate().as_iri(), Some("http://s/interactsWith"));
}

#[test]
fn parameters_reach_the_mapping() {
    let doc = json!({
        "nodes": [{"id": "p1"}, {"id": "p2"}, {"id": "p3"}],
        "edges": [{"a": "p1", "b": "p2"}, {"a": "p1", "b": "p3"}]
    });
    assert_eq!(map_response(&doc, &spec(), &params("4565")).unwrap().len(), 2);
    assert!(map_response(&doc, &spec(), &params("9606")).unwrap().is_empty());
    assert_eq!(
        map_response(&doc, &spec(), &BTreeMap::new()),
        Err(MappingError::MissingParam { name: "species".into() })
    );
}

#[test]
fn empty_template_and_null_doc() {
    let empty = MappingSpec::from_parts(
        "CONSTRUCT {} WHERE { ?s ?p ?o }",
        r#"{"base":"http://b/#","root":"http://r/"}"#,
    )
    .unwrap();
    assert!(map_response(&json!({"a": 1}), &empty, &BTreeMap::new())
        .unwrap()
        .is_empty());
    assert!(map_response(&Json::Null, &spec(), &params("4565")).unwrap().is_empty());
}

#[test]
fn mapping_is_deterministic_up_to_blanks() {
    let spec = MappingSpec::from_parts(
        "PREFIX b: <http://b/#> CONSTRUCT { _:i <http://s/a> ?x ; <http://s/b> ?y } WHERE { ?d b:edges ?e . ?e b:a ?x . ?e b:b ?y }",
        r#"{"base":"http://b/#","root":"http://r/"}"#,
    )
    .unwrap();
    let doc = json!({"edges": [{"a": "p1", "b": "p2"}, {"a": "p3", "b": "p4"}]});
    let a = map_response(&doc, &spec, &BTreeMap::new()).unwrap();
    let b = map_response(&doc, &spec, &BTreeMap::new()).unwrap();
    assert_eq!(a.len(), 4);
    assert!(isomorphic(&a, &b));
}

#[test]
fn rejects_non_mappings() {
    let side = r#"{"base":"http://b/#","root":"http://r/"}"#;
    assert_eq!(
        MappingSpec::from_parts("SELECT * WHERE { ?s ?p ?o }", side),
        Err(MappingError::NotAMapping)
    );
    assert_eq!(
        MappingSpec::from_parts(
            "CONSTRUCT { ?s ?p ?o } WHERE { SERVICE <http://x/> { ?s ?p ?o } }",
            side
        ),
        Err(MappingError::NotAMapping)
    );
    assert!(matches!(
        MappingSpec::from_parts("CONSTRUCT { ?s ?p ?o } WHERE { ?s ?p ?o }", "{}"),
        Err(MappingError::InvalidConfig(_))
    ));
}

#[test]
fn loads_from_directory() {
    let dir = std::env::temp_dir().join(format!("fedql-mapping-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("mapping.rq"), STRING_LIKE).unwrap();
    std::fs::write(
        dir.join("mapping.json"),
        r#"{"base":"http://b/#","root":"http://r/doc","param_vars":{"species":"sp"}}"#,
    )
    .unwrap();
    let loaded = MappingSpec::load(&dir).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(loaded, spec());
    assert!(matches!(
        MappingSpec::load(Path::new("/nonexistent/fedql")),
        Err(MappingError::Io(_))
    ));
}
