//! Small generated datasets with matching replay fixtures, for tests,
//! demos and the `fixtures` command.

use crate::kg::{KnowledgeGraph, LoadMode, SplitKind};
use crate::llm::{FixtureRecord, GenerationParams};
use crate::prompt::{RelationMode, TemplateSet};

const TOY_ENTITIES: [(&str, &str, &str); 8] = [
    ("/m/0bay", "Michael Bay", "American film director and producer known for large-scale action films."),
    ("/m/0bryce", "Ian Bryce", ""),
    ("/m/0tf3", "Transformers: Dark of the Moon", "2011 science fiction action film about giant robots."),
    ("/m/0ph", "Pearl Harbor", "2001 war drama film set during the attack on Pearl Harbor."),
    ("/m/0spiel", "Steven Spielberg", "American film director and producer of adventure and war films."),
    ("/m/0jp", "Jurassic Park", "1993 science fiction adventure film about cloned dinosaurs."),
    ("/m/09usa", "United States", "Country in North America."),
    ("/m/0spr", "Saving Private Ryan", "1998 war film set during the Normandy invasion."),
];

const TOY_RELATIONS: [(&str, &str); 3] = [
    ("/film/film/directed_by", "directed by"),
    ("/film/film/produced_by", "produced by"),
    ("/film/film/release_region", "release region"),
];

const TOY_TRAIN: [(&str, &str, &str); 12] = [
    ("/m/0tf3", "/film/film/directed_by", "/m/0bay"),
    ("/m/0ph", "/film/film/directed_by", "/m/0bay"),
    ("/m/0jp", "/film/film/directed_by", "/m/0spiel"),
    ("/m/0spr", "/film/film/directed_by", "/m/0spiel"),
    ("/m/0tf3", "/film/film/produced_by", "/m/0bryce"),
    ("/m/0spr", "/film/film/produced_by", "/m/0bryce"),
    ("/m/0jp", "/film/film/produced_by", "/m/0spiel"),
    ("/m/0ph", "/film/film/produced_by", "/m/0bay"),
    ("/m/0tf3", "/film/film/release_region", "/m/09usa"),
    ("/m/0ph", "/film/film/release_region", "/m/09usa"),
    ("/m/0jp", "/film/film/release_region", "/m/09usa"),
    ("/m/0spr", "/film/film/release_region", "/m/09usa"),
];

const TOY_VALID: [(&str, &str, &str); 2] = [
    ("/m/0tf3", "/film/film/produced_by", "/m/0bay"),
    ("/m/0jp", "/film/film/produced_by", "/m/0bryce"),
];

const TOY_TEST: [(&str, &str, &str); 2] = [
    ("/m/0ph", "/film/film/produced_by", "/m/0bryce"),
    ("/m/0spr", "/film/film/produced_by", "/m/0spiel"),
];

/// Entity expansion answers, keyed by entity name.
const TOY_EXPANSIONS: [(&str, &str); 8] = [
    ("Michael Bay", "Michael Bay is an American director whose films are known for fast editing and large explosions.\nRationale: he directed the Transformers series."),
    ("Ian Bryce", "Ian Bryce is an English film producer who has worked on many blockbuster productions."),
    ("Transformers: Dark of the Moon", "The third film in the Transformers series, released in 2011 and directed by Michael Bay."),
    ("Pearl Harbor", "An American war film that dramatizes the 1941 attack and the lives of two pilots."),
    ("Steven Spielberg", "Steven Spielberg is one of the most commercially successful directors in film history."),
    ("Jurassic Park", "A film in which scientists clone dinosaurs for a theme park that then breaks down."),
    ("United States", "The United States is a federal republic and the largest film market in the world."),
    ("Saving Private Ryan", "A war film following a squad searching for a paratrooper after the D-Day landings."),
];

/// Relation explanations, keyed by relation name, in Global, Local, Reverse order.
const TOY_EXPLANATIONS: [(&str, [&str; 3]); 3] = [
    ("directed by", [
        "It connects a film to the person who directed it.",
        "The head film was directed by the tail person.",
        "The film is directed by the person.",
    ]),
    ("produced by", [
        "It connects a film to a person responsible for producing it.",
        "The head film was produced by the tail person.",
        "The film is produced by the producer.",
    ]),
    ("release region", [
        "It connects a film to a region where it was released.",
        "The head film was released in the tail region.",
        "The film is released in the region.",
    ]),
];

/// Keyword answers, keyed by the text the keyword prompt is built from.
const TOY_KEYWORDS: [(&str, &str); 8] = [
    ("American film director and producer known for large-scale action films.", "1. director\n2. producer\n3. american\n4. action\n5. film"),
    ("Ian Bryce", "producer, film, english, blockbuster, production"),
    ("2011 science fiction action film about giant robots.", "Keywords: science fiction, action, film, robots, 2011"),
    ("2001 war drama film set during the attack on Pearl Harbor.", "war, drama, film, pearl harbor, attack"),
    ("American film director and producer of adventure and war films.", "1. director\n2. producer\n3. american\n4. adventure\n5. war"),
    ("1993 science fiction adventure film about cloned dinosaurs.", "science fiction, adventure, film, dinosaurs, 1993"),
    ("Country in North America.", "country, north america, nation, united states, america"),
    ("1998 war film set during the Normandy invasion.", "war, film, normandy, invasion, 1998"),
];

fn triples(
    mut b: crate::kg::GraphBuilder,
    split: SplitKind,
    ts: &[(&str, &str, &str)],
) -> crate::kg::GraphBuilder {
    for (h, r, t) in ts {
        b = b.triple(split, h, r, t);
    }
    b
}

/// Eight films, people and places with 12/2/2 train/valid/test triples.
pub fn toy_dataset() -> KnowledgeGraph {
    let mut b = KnowledgeGraph::builder();
    for (id, name, desc) in TOY_ENTITIES {
        b = b.entity(id, name, desc);
    }
    for (id, name) in TOY_RELATIONS {
        b = b.relation(id, name);
    }
    b = triples(b, SplitKind::Train, &TOY_TRAIN);
    b = triples(b, SplitKind::Valid, &TOY_VALID);
    b = triples(b, SplitKind::Test, &TOY_TEST);
    b.build(LoadMode::Strict).expect("toy dataset is consistent").graph
}

fn lookup<'a>(table: &[(&str, &'a str)], key: &str) -> &'a str {
    table
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .unwrap_or_else(|| panic!("no canned answer for {key:?}"))
}

/// Replay records for every entity, relation (all modes) and keyword
/// prompt a default run over `kg` issues.
pub fn fixture_for(
    kg: &KnowledgeGraph,
    templates: &TemplateSet,
    params: &GenerationParams,
    expansion: impl Fn(&str) -> String,
    explanation: impl Fn(&str, RelationMode) -> String,
    keywords: impl Fn(&str) -> String,
) -> Vec<FixtureRecord> {
    let mut out = Vec::new();
    for e in kg.entities() {
        let name = kg.texts().entity_name(e);
        let prompt = templates.entity_prompt(name).expect("non-empty name");
        out.push(FixtureRecord::new(prompt.text, params, expansion(name)));
    }
    for r in kg.relations() {
        let name = kg.texts().relation_name(r);
        for mode in RelationMode::ALL {
            let prompt = templates.relation_prompt(name, mode).expect("non-empty name");
            out.push(FixtureRecord::new(prompt.text, params, explanation(name, mode)));
        }
    }
    for e in kg.entities() {
        let desc = kg.texts().entity_description(e);
        let source = if desc.trim().is_empty() {
            kg.texts().entity_name(e)
        } else {
            desc
        };
        let prompt = templates.keyword_prompt(source).expect("non-empty text");
        out.push(FixtureRecord::new(prompt.text, params, keywords(source)));
    }
    out
}

/// Canned answers for [`toy_dataset`] under default templates and params.
pub fn toy_fixture() -> Vec<FixtureRecord> {
    fixture_for(
        &toy_dataset(),
        &TemplateSet::default(),
        &GenerationParams::default(),
        |name| lookup(&TOY_EXPANSIONS, name).to_string(),
        |name, mode| {
            let row = TOY_EXPLANATIONS
                .iter()
                .find(|(n, _)| *n == name)
                .unwrap_or_else(|| panic!("no canned explanation for {name:?}"));
            let i = RelationMode::ALL.iter().position(|m| *m == mode).expect("known mode");
            row.1[i].to_string()
        },
        |text| lookup(&TOY_KEYWORDS, text).to_string(),
    )
}

/// Number of alias pairs in [`alias_dataset`].
pub const ALIAS_CONCEPTS: usize = 5;
const OBJECTS_PER_RELATION: usize = 2;
const CONCEPT_RELATIONS: usize = 4;
const HUBS: usize = 10;
const HUB_RELATION: &str = "r_hub";

fn alias_id(concept: usize, side: usize) -> String {
    format!("e{:02}", 2 * concept + side)
}

fn object_id(concept: usize, relation: usize, k: usize) -> String {
    format!("o{:02}", (concept * CONCEPT_RELATIONS + relation) * OBJECTS_PER_RELATION + k)
}

fn hub_of(concept: usize, relation: usize) -> String {
    format!("h{}", (concept * CONCEPT_RELATIONS + relation) % HUBS)
}

/// The planted alias pairs, `(e00, e01)` to `(e08, e09)`.
pub fn alias_pairs() -> Vec<(String, String)> {
    (0..ALIAS_CONCEPTS).map(|c| (alias_id(c, 0), alias_id(c, 1))).collect()
}

/// 60 entities: five concepts each split over two alias entities, 40
/// objects, and 10 hubs.
///
/// A concept has two objects per relation `r0..r3`. The alias `e(2c)` holds
/// the first object of every relation, `e(2c+1)` the second, so neither
/// alias sees the other half of the neighborhood. Objects point to a hub via
/// `r_hub`. Validation and test ask for the facts of one alias re-expressed
/// on the other (validation on `r0`, test on `r1..r3`), plus a few hub facts
/// of second objects.
pub fn alias_dataset() -> KnowledgeGraph {
    let mut b = KnowledgeGraph::builder();
    for c in 0..ALIAS_CONCEPTS {
        for side in 0..2 {
            let id = alias_id(c, side);
            b = b.entity(&id, &format!("concept {c} alias {side}"), &format!("Alias {side} of concept number {c}."));
        }
    }
    for c in 0..ALIAS_CONCEPTS {
        for j in 0..CONCEPT_RELATIONS {
            for k in 0..OBJECTS_PER_RELATION {
                let id = object_id(c, j, k);
                b = b.entity(&id, &format!("object {id}"), &format!("Object {id} attached to concept {c}."));
            }
        }
    }
    for h in 0..HUBS {
        b = b.entity(&format!("h{h}"), &format!("hub {h}"), &format!("Hub number {h}."));
    }
    for j in 0..CONCEPT_RELATIONS {
        b = b.relation(&format!("r{j}"), &format!("relation {j}"));
    }
    b = b.relation(HUB_RELATION, "located at");

    for c in 0..ALIAS_CONCEPTS {
        for j in 0..CONCEPT_RELATIONS {
            let r = format!("r{j}");
            for k in 0..OBJECTS_PER_RELATION {
                let obj = object_id(c, j, k);
                b = b.triple(SplitKind::Train, &alias_id(c, k), &r, &obj);
                let cross = if j == 0 { SplitKind::Valid } else { SplitKind::Test };
                b = b.triple(cross, &alias_id(c, 1 - k), &r, &obj);

                let hub_split = match (j, k) {
                    (0, 1) => SplitKind::Valid,
                    (2, 1) | (3, 1) => SplitKind::Test,
                    _ => SplitKind::Train,
                };
                b = b.triple(hub_split, &obj, HUB_RELATION, &hub_of(c, j));
            }
        }
    }
    b.build(LoadMode::Strict).expect("alias dataset is consistent").graph
}

/// Oracle keywords: the two aliases of a concept share five keywords, every
/// other entity gets five of its own.
pub fn alias_keywords(entity: &str) -> String {
    for c in 0..ALIAS_CONCEPTS {
        if entity == alias_id(c, 0) || entity == alias_id(c, 1) {
            return (1..=5).map(|i| format!("concept{c}word{i}")).collect::<Vec<_>>().join(", ");
        }
    }
    (1..=5).map(|i| format!("{entity}word{i}")).collect::<Vec<_>>().join(", ")
}

/// Canned answers for [`alias_dataset`] under default templates and params.
pub fn alias_fixture() -> Vec<FixtureRecord> {
    let kg = alias_dataset();
    let by_desc: Vec<(String, String)> = kg
        .entities()
        .iter()
        .map(|e| (kg.texts().entity_description(e).to_string(), e.to_string()))
        .collect();
    fixture_for(
        &kg,
        &TemplateSet::default(),
        &GenerationParams::default(),
        |name| format!("{name} is a synthetic entity."),
        |name, mode| format!("{name} explained from the {mode} view."),
        |text| {
            let id = &by_desc.iter().find(|(d, _)| d == text).expect("known description").1;
            alias_keywords(id)
        },
    )
}
