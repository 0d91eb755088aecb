//! Knowledge graph data model and the tab-separated dataset layout.
//!
//! A dataset directory contains:
//!
//! | file                  | content                          | required |
//! |-----------------------|----------------------------------|----------|
//! | `train.txt`           | `head\trelation\ttail[\tlabel]`  | yes      |
//! | `valid.txt`           | same                             | yes      |
//! | `test.txt`            | same                             | yes      |
//! | `entity2text.txt`     | `id\tname`                       | yes      |
//! | `relation2text.txt`   | `id\tname`                       | yes      |
//! | `entity2textlong.txt` | `id\tdescription`                | no       |
//! | `entities.txt`        | one entity id per line           | no       |
//! | `relations.txt`       | one relation id per line         | no       |
//!
//! When the id lists are absent the entity (relation) set is the key set of
//! the name file, in file order. The optional fourth triple column carries a
//! classification label (`1` or `-1`).

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TRAIN_FILE: &str = "train.txt";
pub const VALID_FILE: &str = "valid.txt";
pub const TEST_FILE: &str = "test.txt";
pub const ENTITY_LIST_FILE: &str = "entities.txt";
pub const RELATION_LIST_FILE: &str = "relations.txt";
pub const ENTITY_NAME_FILE: &str = "entity2text.txt";
pub const ENTITY_DESC_FILE: &str = "entity2textlong.txt";
pub const RELATION_NAME_FILE: &str = "relation2text.txt";

#[derive(Debug, thiserror::Error)]
pub enum KgError {
    #[error("missing dataset file {0}")]
    MissingFile(PathBuf),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: duplicate id {id:?}")]
    DuplicateId {
        path: PathBuf,
        line: usize,
        id: String,
    },
    #[error("{split} split, line {line}: unknown {kind} {id:?}")]
    Dangling {
        split: SplitKind,
        line: usize,
        kind: &'static str,
        id: String,
    },
    #[error("triple {0} appears in more than one split")]
    SplitOverlap(String),
    #[error("invalid identifier {0:?}: ids must be non-empty and free of tabs and line breaks")]
    InvalidId(String),
    #[error("text for {id:?} contains a line break")]
    InvalidText { id: String },
    #[error("unknown entity {0:?}")]
    UnknownEntity(String),
    #[error("unknown relation {0:?}")]
    UnknownRelation(String),
}

pub type Result<T, E = KgError> = std::result::Result<T, E>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> KgError + '_ {
    move |source| KgError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn valid_id(s: &str) -> bool {
    !s.is_empty() && !s.contains(['\t', '\n', '\r'])
}

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Result<Self> {
                let id = id.into();
                if valid_id(&id) {
                    Ok(Self(id))
                } else {
                    Err(KgError::InvalidId(id))
                }
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl TryFrom<String> for $name {
            type Error = KgError;
            fn try_from(s: String) -> Result<Self> {
                Self::new(s)
            }
        }

        impl From<$name> for String {
            fn from(id: $name) -> String {
                id.0
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

id_type!(
    /// Opaque entity identifier such as a Freebase MID or a WordNet synset token.
    EntityId
);
id_type!(
    /// Opaque relation identifier.
    RelationId
);

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Self {
            head,
            relation,
            tail,
        }
    }

    /// Builds a triple from raw strings, validating each id.
    pub fn parse(head: &str, relation: &str, tail: &str) -> Result<Self> {
        Ok(Self::new(
            EntityId::new(head)?,
            RelationId::new(relation)?,
            EntityId::new(tail)?,
        ))
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.head, self.relation, self.tail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Train,
    Valid,
    Test,
}

impl SplitKind {
    pub const ALL: [SplitKind; 3] = [SplitKind::Train, SplitKind::Valid, SplitKind::Test];

    pub fn file_name(self) -> &'static str {
        match self {
            SplitKind::Train => TRAIN_FILE,
            SplitKind::Valid => VALID_FILE,
            SplitKind::Test => TEST_FILE,
        }
    }
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitKind::Train => "train",
            SplitKind::Valid => "valid",
            SplitKind::Test => "test",
        })
    }
}

/// An ordered list of triples, optionally labelled true/false for
/// triplet classification benchmarks that ship their own negatives.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Split {
    triples: Vec<Triple>,
    labels: Option<Vec<bool>>,
}

impl Split {
    pub fn unlabeled(triples: Vec<Triple>) -> Self {
        Self {
            triples,
            labels: None,
        }
    }

    /// Panics if `labels` and `triples` differ in length.
    pub fn labeled(triples: Vec<Triple>, labels: Vec<bool>) -> Self {
        assert_eq!(triples.len(), labels.len(), "one label per triple");
        Self {
            triples,
            labels: Some(labels),
        }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn labels(&self) -> Option<&[bool]> {
        self.labels.as_deref()
    }

    pub fn has_labels(&self) -> bool {
        self.labels.is_some()
    }

    /// Every triple with its label; unlabelled splits are all positive.
    pub fn iter_labeled(&self) -> impl Iterator<Item = (&Triple, bool)> + '_ {
        self.triples.iter().enumerate().map(move |(i, t)| {
            let label = self.labels.as_ref().is_none_or(|l| l[i]);
            (t, label)
        })
    }

    pub fn positives(&self) -> impl Iterator<Item = &Triple> + '_ {
        self.iter_labeled().filter(|(_, l)| *l).map(|(t, _)| t)
    }
}

/// Entity names, entity descriptions and relation names.
///
/// Only entities and relations of the owning graph are stored. Empty
/// descriptions are not stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TextStore {
    entity_name: IndexMap<EntityId, String>,
    entity_desc: IndexMap<EntityId, String>,
    relation_name: IndexMap<RelationId, String>,
}

impl TextStore {
    pub fn entity_name<'a>(&'a self, id: &'a EntityId) -> &'a str {
        self.entity_name.get(id).map_or(id.as_str(), String::as_str)
    }

    pub fn entity_description(&self, id: &EntityId) -> &str {
        self.entity_desc.get(id).map_or("", String::as_str)
    }

    pub fn relation_name<'a>(&'a self, id: &'a RelationId) -> &'a str {
        self.relation_name.get(id).map_or(id.as_str(), String::as_str)
    }

    pub fn has_descriptions(&self) -> bool {
        !self.entity_desc.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_entities: usize,
    pub n_relations: usize,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
}

impl DatasetStats {
    pub fn as_tuple(&self) -> (usize, usize, usize, usize, usize) {
        (
            self.n_entities,
            self.n_relations,
            self.n_train,
            self.n_valid,
            self.n_test,
        )
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "entities\t{}\nrelations\t{}\ntrain\t{}\nvalid\t{}\ntest\t{}",
            self.n_entities, self.n_relations, self.n_train, self.n_valid, self.n_test
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadMode {
    #[default]
    Strict,
    Lenient,
}

/// A loaded graph together with the problems tolerated while loading it.
#[derive(Debug, Clone)]
pub struct LoadOutcome {
    pub graph: KnowledgeGraph,
    pub warnings: Vec<String>,
}

/// Entities, relations, the three splits and their texts. Immutable once built;
/// the `with_*` methods return modified copies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeGraph {
    entities: IndexSet<EntityId>,
    relations: IndexSet<RelationId>,
    train: Split,
    valid: Split,
    test: Split,
    texts: TextStore,
}

impl KnowledgeGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::default()
    }

    pub fn entities(&self) -> &IndexSet<EntityId> {
        &self.entities
    }

    pub fn relations(&self) -> &IndexSet<RelationId> {
        &self.relations
    }

    pub fn train(&self) -> &Split {
        &self.train
    }

    pub fn valid(&self) -> &Split {
        &self.valid
    }

    pub fn test(&self) -> &Split {
        &self.test
    }

    pub fn split(&self, kind: SplitKind) -> &Split {
        match kind {
            SplitKind::Train => &self.train,
            SplitKind::Valid => &self.valid,
            SplitKind::Test => &self.test,
        }
    }

    pub fn texts(&self) -> &TextStore {
        &self.texts
    }

    pub fn contains_entity(&self, id: &str) -> bool {
        self.entities.contains(id)
    }

    pub fn contains_relation(&self, id: &str) -> bool {
        self.relations.contains(id)
    }

    pub fn stats(&self) -> DatasetStats {
        DatasetStats {
            n_entities: self.entities.len(),
            n_relations: self.relations.len(),
            n_train: self.train.len(),
            n_valid: self.valid.len(),
            n_test: self.test.len(),
        }
    }

    /// Replaces entity descriptions. Every id must belong to the graph.
    pub fn with_entity_descriptions<I>(&self, descriptions: I) -> Result<Self>
    where
        I: IntoIterator<Item = (EntityId, String)>,
    {
        let mut out = self.clone();
        for (id, text) in descriptions {
            if !out.entities.contains(&id) {
                return Err(KgError::UnknownEntity(id.0));
            }
            if text.contains(['\n', '\r']) {
                return Err(KgError::InvalidText { id: id.0 });
            }
            if text.is_empty() {
                out.texts.entity_desc.shift_remove(&id);
            } else {
                out.texts.entity_desc.insert(id, text);
            }
        }
        // keep descriptions in entity order so the written file is canonical
        let order = &out.entities;
        out.texts
            .entity_desc
            .sort_by_cached_key(|k, _| order.get_index_of(k));
        Ok(out)
    }

    /// Replaces relation names. Every id must belong to the graph.
    pub fn with_relation_names<I>(&self, names: I) -> Result<Self>
    where
        I: IntoIterator<Item = (RelationId, String)>,
    {
        let mut out = self.clone();
        for (id, text) in names {
            if !out.relations.contains(&id) {
                return Err(KgError::UnknownRelation(id.0));
            }
            if text.contains(['\n', '\r']) {
                return Err(KgError::InvalidText { id: id.0 });
            }
            out.texts.relation_name.insert(id, text);
        }
        Ok(out)
    }

    /// Appends triples to the training split. Relations in `new_relations`
    /// are registered first (with their names); every other id must already
    /// be known.
    pub fn with_train_triples(
        &self,
        triples: &[Triple],
        new_relations: &[(RelationId, String)],
    ) -> Result<Self> {
        let mut out = self.clone();
        for (id, name) in new_relations {
            if out.relations.insert(id.clone()) {
                out.texts.relation_name.insert(id.clone(), name.clone());
            }
        }
        for t in triples {
            for e in [&t.head, &t.tail] {
                if !out.entities.contains(e) {
                    return Err(KgError::UnknownEntity(e.0.clone()));
                }
            }
            if !out.relations.contains(&t.relation) {
                return Err(KgError::UnknownRelation(t.relation.0.clone()));
            }
        }
        out.train.triples.extend(triples.iter().cloned());
        if let Some(labels) = out.train.labels.as_mut() {
            labels.extend(std::iter::repeat_n(true, triples.len()));
        }
        Ok(out)
    }

    /// Canonical on-disk form, file name and content, in a fixed order.
    pub fn render_files(&self) -> Result<Vec<(&'static str, String)>> {
        let mut files = Vec::with_capacity(8);

        let mut s = String::new();
        for e in &self.entities {
            s.push_str(e.as_str());
            s.push('\n');
        }
        files.push((ENTITY_LIST_FILE, s));

        let mut s = String::new();
        for r in &self.relations {
            s.push_str(r.as_str());
            s.push('\n');
        }
        files.push((RELATION_LIST_FILE, s));

        let mut s = String::new();
        for e in &self.entities {
            push_text_line(&mut s, e.as_str(), self.texts.entity_name(e))?;
        }
        files.push((ENTITY_NAME_FILE, s));

        if self.texts.has_descriptions() {
            let mut s = String::new();
            for (e, d) in &self.texts.entity_desc {
                push_text_line(&mut s, e.as_str(), d)?;
            }
            files.push((ENTITY_DESC_FILE, s));
        }

        let mut s = String::new();
        for r in &self.relations {
            push_text_line(&mut s, r.as_str(), self.texts.relation_name(r))?;
        }
        files.push((RELATION_NAME_FILE, s));

        for kind in SplitKind::ALL {
            files.push((kind.file_name(), render_split(self.split(kind))));
        }
        Ok(files)
    }

    /// Content hash of the canonical dataset files.
    pub fn fingerprint(&self) -> Result<String> {
        let mut hasher = Sha256::new();
        for (name, content) in self.render_files()? {
            hasher.update(name.as_bytes());
            hasher.update([0u8]);
            hasher.update((content.len() as u64).to_le_bytes());
            hasher.update(content.as_bytes());
        }
        Ok(hex::encode(hasher.finalize()))
    }
}

fn push_text_line(out: &mut String, id: &str, text: &str) -> Result<()> {
    if text.contains(['\n', '\r']) {
        return Err(KgError::InvalidText { id: id.to_string() });
    }
    out.push_str(id);
    out.push('\t');
    out.push_str(text);
    out.push('\n');
    Ok(())
}

/// Renders a split as triple-file content.
pub fn render_split(split: &Split) -> String {
    let mut s = String::new();
    for (t, label) in split.iter_labeled() {
        render_triple_into(&mut s, t);
        if split.has_labels() {
            s.push_str(if label { "\t1" } else { "\t-1" });
        }
        s.push('\n');
    }
    s
}

/// Renders unlabelled triples as triple-file content.
pub fn render_triples(triples: &[Triple]) -> String {
    let mut s = String::new();
    for t in triples {
        render_triple_into(&mut s, t);
        s.push('\n');
    }
    s
}

fn render_triple_into(s: &mut String, t: &Triple) {
    s.push_str(t.head.as_str());
    s.push('\t');
    s.push_str(t.relation.as_str());
    s.push('\t');
    s.push_str(t.tail.as_str());
}

/// Collects entities, relations, texts and raw triples, then validates them
/// into a [`KnowledgeGraph`].
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    entities: IndexSet<EntityId>,
    relations: IndexSet<RelationId>,
    texts: TextStore,
    splits: [RawSplit; 3],
}

#[derive(Debug, Default, Clone)]
struct RawSplit {
    triples: Vec<Triple>,
    labels: Option<Vec<bool>>,
}

fn split_index(kind: SplitKind) -> usize {
    match kind {
        SplitKind::Train => 0,
        SplitKind::Valid => 1,
        SplitKind::Test => 2,
    }
}

impl GraphBuilder {
    /// Adds an entity. Panics on an invalid id; use the loader for untrusted input.
    pub fn entity(mut self, id: &str, name: &str, description: &str) -> Self {
        let id = EntityId::new(id).expect("valid entity id");
        self.entities.insert(id.clone());
        self.texts.entity_name.insert(id.clone(), name.to_string());
        if !description.is_empty() {
            self.texts.entity_desc.insert(id, description.to_string());
        }
        self
    }

    pub fn relation(mut self, id: &str, name: &str) -> Self {
        let id = RelationId::new(id).expect("valid relation id");
        self.relations.insert(id.clone());
        self.texts.relation_name.insert(id, name.to_string());
        self
    }

    pub fn triple(self, split: SplitKind, head: &str, relation: &str, tail: &str) -> Self {
        let t = Triple::parse(head, relation, tail).expect("valid triple ids");
        self.push(split, t, None)
    }

    pub fn labeled(
        self,
        split: SplitKind,
        head: &str,
        relation: &str,
        tail: &str,
        label: bool,
    ) -> Self {
        let t = Triple::parse(head, relation, tail).expect("valid triple ids");
        self.push(split, t, Some(label))
    }

    fn push(mut self, split: SplitKind, t: Triple, label: Option<bool>) -> Self {
        let raw = &mut self.splits[split_index(split)];
        raw.push(t, label);
        self
    }

    pub fn build(self, mode: LoadMode) -> Result<LoadOutcome> {
        let GraphBuilder {
            entities,
            relations,
            texts,
            splits,
        } = self;
        let mut warnings = Vec::new();
        let mut built: Vec<Split> = Vec::with_capacity(3);

        for (kind, raw) in SplitKind::ALL.into_iter().zip(splits) {
            let mut triples = Vec::with_capacity(raw.triples.len());
            let mut labels = raw.labels.as_ref().map(|l| Vec::with_capacity(l.len()));
            for (i, t) in raw.triples.into_iter().enumerate() {
                let missing = if !entities.contains(&t.head) {
                    Some(("entity", t.head.as_str()))
                } else if !relations.contains(&t.relation) {
                    Some(("relation", t.relation.as_str()))
                } else if !entities.contains(&t.tail) {
                    Some(("entity", t.tail.as_str()))
                } else {
                    None
                };
                if let Some((what, id)) = missing {
                    match mode {
                        LoadMode::Strict => {
                            return Err(KgError::Dangling {
                                split: kind,
                                line: i + 1,
                                kind: what,
                                id: id.to_string(),
                            })
                        }
                        LoadMode::Lenient => {
                            warnings.push(format!(
                                "{kind} line {}: dropped {t}, unknown {what} {id:?}",
                                i + 1
                            ));
                            continue;
                        }
                    }
                }
                if let (Some(out), Some(src)) = (labels.as_mut(), raw.labels.as_ref()) {
                    out.push(src[i]);
                }
                triples.push(t);
            }
            built.push(Split { triples, labels });
        }

        let [train, valid, test]: [Split; 3] = built.try_into().expect("three splits");

        let train_set: HashSet<&Triple> = train.positives().collect();
        let valid_set: HashSet<&Triple> = valid.positives().collect();
        let overlap = valid
            .positives()
            .chain(test.positives())
            .find(|t| train_set.contains(t))
            .or_else(|| test.positives().find(|t| valid_set.contains(t)));
        if let Some(t) = overlap {
            match mode {
                LoadMode::Strict => return Err(KgError::SplitOverlap(t.to_string())),
                LoadMode::Lenient => {
                    warnings.push(format!("triple {t} appears in more than one split"))
                }
            }
        }

        Ok(LoadOutcome {
            graph: KnowledgeGraph {
                entities,
                relations,
                train,
                valid,
                test,
                texts,
            },
            warnings,
        })
    }
}

impl RawSplit {
    fn push(&mut self, t: Triple, label: Option<bool>) {
        match (label, self.labels.as_mut()) {
            (Some(l), Some(labels)) => labels.push(l),
            (Some(l), None) => {
                let mut labels = vec![true; self.triples.len()];
                labels.push(l);
                self.labels = Some(labels);
            }
            (None, Some(labels)) => labels.push(true),
            (None, None) => {}
        }
        self.triples.push(t);
    }
}

fn read_required(root: &Path, name: &str) -> Result<(PathBuf, String)> {
    let path = root.join(name);
    if !path.is_file() {
        return Err(KgError::MissingFile(path));
    }
    let content = read_utf8(&path)?;
    Ok((path, content))
}

fn read_optional(root: &Path, name: &str) -> Result<Option<(PathBuf, String)>> {
    let path = root.join(name);
    if !path.is_file() {
        return Ok(None);
    }
    let content = read_utf8(&path)?;
    Ok(Some((path, content)))
}

fn read_utf8(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    String::from_utf8(bytes).map_err(|e| KgError::Malformed {
        path: path.to_path_buf(),
        line: 0,
        message: format!("not valid UTF-8: {e}"),
    })
}

/// Non-blank lines with their 1-based line numbers; a trailing `\r` is dropped.
fn lines(content: &str) -> impl Iterator<Item = (usize, &str)> {
    content
        .split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn parse_id_list(path: &Path, content: &str) -> Result<Vec<String>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (n, line) in lines(content) {
        let id = line.split('\t').next().unwrap_or(line);
        if !valid_id(id) {
            return Err(KgError::Malformed {
                path: path.to_path_buf(),
                line: n,
                message: format!("invalid id {id:?}"),
            });
        }
        if !seen.insert(id) {
            return Err(KgError::DuplicateId {
                path: path.to_path_buf(),
                line: n,
                id: id.to_string(),
            });
        }
        out.push(id.to_string());
    }
    Ok(out)
}

fn parse_text_file(path: &Path, content: &str) -> Result<IndexMap<String, String>> {
    let mut out = IndexMap::new();
    for (n, line) in lines(content) {
        let Some((id, text)) = line.split_once('\t') else {
            return Err(KgError::Malformed {
                path: path.to_path_buf(),
                line: n,
                message: "expected `id<TAB>text`".to_string(),
            });
        };
        if !valid_id(id) {
            return Err(KgError::Malformed {
                path: path.to_path_buf(),
                line: n,
                message: format!("invalid id {id:?}"),
            });
        }
        if out.insert(id.to_string(), text.to_string()).is_some() {
            return Err(KgError::DuplicateId {
                path: path.to_path_buf(),
                line: n,
                id: id.to_string(),
            });
        }
    }
    Ok(out)
}

fn parse_triples(path: &Path, content: &str) -> Result<RawSplit> {
    let mut raw = RawSplit::default();
    for (n, line) in lines(content) {
        let malformed = |message: String| KgError::Malformed {
            path: path.to_path_buf(),
            line: n,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        let label = match fields.len() {
            3 => None,
            4 => Some(match fields[3].trim() {
                "1" => true,
                "-1" => false,
                other => return Err(malformed(format!("invalid label {other:?}"))),
            }),
            k => return Err(malformed(format!("expected 3 or 4 tab-separated fields, got {k}"))),
        };
        let t = Triple::parse(fields[0], fields[1], fields[2])
            .map_err(|e| malformed(e.to_string()))?;
        raw.push(t, label);
    }
    Ok(raw)
}

/// Loads a dataset directory.
///
/// Strict mode rejects dangling references and split overlap; lenient mode
/// drops dangling triples and reports them as warnings.
pub fn load_dataset(root: impl AsRef<Path>, mode: LoadMode) -> Result<LoadOutcome> {
    let root = root.as_ref();
    let mut warnings = Vec::new();

    // read every required file up front so a missing one is reported first
    let split_files = SplitKind::ALL
        .iter()
        .map(|k| read_required(root, k.file_name()))
        .collect::<Result<Vec<_>>>()?;
    let (name_path, name_content) = read_required(root, ENTITY_NAME_FILE)?;
    let (rel_path, rel_content) = read_required(root, RELATION_NAME_FILE)?;

    let names = parse_text_file(&name_path, &name_content)?;
    let rel_names = parse_text_file(&rel_path, &rel_content)?;
    let descriptions = match read_optional(root, ENTITY_DESC_FILE)? {
        Some((p, c)) => parse_text_file(&p, &c)?,
        None => IndexMap::new(),
    };

    let entity_ids = match read_optional(root, ENTITY_LIST_FILE)? {
        Some((p, c)) => parse_id_list(&p, &c)?,
        None => names.keys().cloned().collect(),
    };
    let relation_ids = match read_optional(root, RELATION_LIST_FILE)? {
        Some((p, c)) => parse_id_list(&p, &c)?,
        None => rel_names.keys().cloned().collect(),
    };

    let mut b = GraphBuilder::default();
    for id in entity_ids {
        let name = match names.get(&id) {
            Some(n) => n.clone(),
            None => {
                warnings.push(format!("entity {id:?} has no name; using its id"));
                id.clone()
            }
        };
        let id = EntityId::new(id)?;
        if let Some(d) = descriptions.get(id.as_str()).filter(|d| !d.is_empty()) {
            b.texts.entity_desc.insert(id.clone(), d.clone());
        }
        b.texts.entity_name.insert(id.clone(), name);
        b.entities.insert(id);
    }
    for id in relation_ids {
        let name = match rel_names.get(&id) {
            Some(n) => n.clone(),
            None => {
                warnings.push(format!("relation {id:?} has no name; using its id"));
                id.clone()
            }
        };
        let id = RelationId::new(id)?;
        b.texts.relation_name.insert(id.clone(), name);
        b.relations.insert(id);
    }
    for (kind, (path, content)) in SplitKind::ALL.into_iter().zip(split_files) {
        b.splits[split_index(kind)] = parse_triples(&path, &content)?;
    }

    let mut outcome = b.build(mode)?;
    warnings.append(&mut outcome.warnings);
    outcome.warnings = warnings;
    Ok(outcome)
}

/// Writes the canonical form of `kg` into `root`, creating it if needed.
pub fn write_dataset(kg: &KnowledgeGraph, root: impl AsRef<Path>) -> Result<()> {
    let root = root.as_ref();
    fs::create_dir_all(root).map_err(io_err(root))?;
    let files = kg.render_files()?;
    if !files.iter().any(|(n, _)| *n == ENTITY_DESC_FILE) {
        let stale = root.join(ENTITY_DESC_FILE);
        if stale.exists() {
            fs::remove_file(&stale).map_err(io_err(&stale))?;
        }
    }
    for (name, content) in files {
        let path = root.join(name);
        fs::write(&path, content).map_err(io_err(&path))?;
    }
    Ok(())
}

pub fn dataset_stats(kg: &KnowledgeGraph) -> DatasetStats {
    kg.stats()
}
