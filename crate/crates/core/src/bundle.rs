//! On-disk augmentation bundles and their composition onto a base dataset.
//!
//! A bundle directory holds `manifest.json`, the full `bundle.json`, an
//! `audit.json` with raw responses and per-item errors, and the plain-text
//! files a downstream model would consume.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::enrich::entity::EntityBundle;
use crate::enrich::relation::RelationBundle;
use crate::enrich::structure::{augment_training_set, StructureBundle};
use crate::enrich::{AuditItem, EnrichError, ItemError};
use crate::kg::{render_triples, KgError, KnowledgeGraph};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const BUNDLE_FILE: &str = "bundle.json";
pub const AUDIT_FILE: &str = "audit.json";
pub const SYNTHESIZED_FILE: &str = "synthesized.txt";
pub const KEYWORDS_FILE: &str = "keywords.json";

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("{kind} bundle was built for dataset {found}, base is {expected}")]
    FingerprintMismatch {
        kind: BundleKind,
        expected: String,
        found: String,
    },
    #[error("more than one {0} bundle")]
    DuplicateKind(BundleKind),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: manifest does not match bundle contents")]
    ManifestMismatch { path: PathBuf },
    #[error(transparent)]
    Graph(#[from] KgError),
    #[error(transparent)]
    Enrich(#[from] EnrichError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BundleKind {
    Entity,
    Relation,
    Structure,
}

impl BundleKind {
    pub fn letter(self) -> char {
        match self {
            BundleKind::Entity => 'E',
            BundleKind::Relation => 'R',
            BundleKind::Structure => 'S',
        }
    }
}

impl std::fmt::Display for BundleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BundleKind::Entity => "entity",
            BundleKind::Relation => "relation",
            BundleKind::Structure => "structure",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "bundle", rename_all = "lowercase")]
pub enum Bundle {
    Entity(EntityBundle),
    Relation(RelationBundle),
    Structure(StructureBundle),
}

impl From<EntityBundle> for Bundle {
    fn from(b: EntityBundle) -> Self {
        Bundle::Entity(b)
    }
}

impl From<RelationBundle> for Bundle {
    fn from(b: RelationBundle) -> Self {
        Bundle::Relation(b)
    }
}

impl From<StructureBundle> for Bundle {
    fn from(b: StructureBundle) -> Self {
        Bundle::Structure(b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: BundleKind,
    pub base_fingerprint: String,
    pub n_items: usize,
    pub n_errors: usize,
    pub settings: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AuditFile {
    items: Vec<AuditItem>,
    errors: Vec<ItemError>,
}

impl Bundle {
    pub fn kind(&self) -> BundleKind {
        match self {
            Bundle::Entity(_) => BundleKind::Entity,
            Bundle::Relation(_) => BundleKind::Relation,
            Bundle::Structure(_) => BundleKind::Structure,
        }
    }

    pub fn base_fingerprint(&self) -> &str {
        match self {
            Bundle::Entity(b) => &b.base_fingerprint,
            Bundle::Relation(b) => &b.base_fingerprint,
            Bundle::Structure(b) => &b.base_fingerprint,
        }
    }

    pub fn errors(&self) -> &[ItemError] {
        match self {
            Bundle::Entity(b) => &b.errors,
            Bundle::Relation(b) => &b.errors,
            Bundle::Structure(b) => &b.errors,
        }
    }

    pub fn audit(&self) -> Vec<AuditItem> {
        match self {
            Bundle::Entity(b) => b.audit(),
            Bundle::Relation(b) => b.audit(),
            Bundle::Structure(b) => b.audit.clone(),
        }
    }

    /// Augmented entities, relations, or synthesized triples.
    pub fn n_items(&self) -> usize {
        match self {
            Bundle::Entity(b) => b.augmentations.len(),
            Bundle::Relation(b) => b.augmentations.len(),
            Bundle::Structure(b) => b.triples.len(),
        }
    }

    pub fn manifest(&self) -> Manifest {
        let settings = match self {
            Bundle::Entity(b) => serde_json::json!({
                "budget_tokens": b.budget_tokens,
                "params": b.params,
            }),
            Bundle::Relation(b) => serde_json::json!({
                "modes": b.modes,
                "params": b.params,
            }),
            Bundle::Structure(b) => serde_json::json!({
                "config": b.config,
                "params": b.params,
                "n_pairs": b.pairs.len(),
                "n_self_loops": b.n_self_loops(),
                "n_without_keywords": b.n_without_keywords,
            }),
        };
        Manifest {
            kind: self.kind(),
            base_fingerprint: self.base_fingerprint().to_string(),
            n_items: self.n_items(),
            n_errors: self.errors().len(),
            settings,
        }
    }

    /// Applies this bundle alone to `kg`, without fingerprint checks.
    pub fn apply(&self, kg: &KnowledgeGraph) -> Result<KnowledgeGraph, BundleError> {
        Ok(match self {
            Bundle::Entity(b) => kg.with_entity_descriptions(
                b.augmentations.iter().map(|a| (a.entity.clone(), a.merged.clone())),
            )?,
            Bundle::Relation(b) => kg.with_relation_names(
                b.augmentations.iter().map(|a| (a.relation.clone(), a.composed.clone())),
            )?,
            Bundle::Structure(b) => augment_training_set(kg, &b.triples)?,
        })
    }

    fn text_files(&self) -> Result<Vec<(&'static str, String)>, BundleError> {
        let mut files = Vec::new();
        match self {
            Bundle::Entity(b) => {
                let mut s = String::new();
                for a in &b.augmentations {
                    s.push_str(&format!("{}\t{}\n", a.entity, a.merged));
                }
                files.push((crate::kg::ENTITY_DESC_FILE, s));
            }
            Bundle::Relation(b) => {
                let mut s = String::new();
                for a in &b.augmentations {
                    s.push_str(&format!("{}\t{}\n", a.relation, a.composed));
                }
                files.push((crate::kg::RELATION_NAME_FILE, s));
            }
            Bundle::Structure(b) => {
                files.push((SYNTHESIZED_FILE, render_triples(&b.triples)));
                files.push((KEYWORDS_FILE, to_json(&b.keywords)));
            }
        }
        Ok(files)
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn write_file(path: &Path, content: &str) -> Result<(), BundleError> {
    fs::write(path, content).map_err(|source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `bundle` into `dir`, creating it if needed.
pub fn write_bundle(bundle: &Bundle, dir: &Path) -> Result<(), BundleError> {
    fs::create_dir_all(dir).map_err(|source| BundleError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write_file(&dir.join(MANIFEST_FILE), &to_json(&bundle.manifest()))?;
    write_file(&dir.join(BUNDLE_FILE), &to_json(bundle))?;
    let audit = AuditFile {
        items: bundle.audit(),
        errors: bundle.errors().to_vec(),
    };
    write_file(&dir.join(AUDIT_FILE), &to_json(&audit))?;
    for (name, content) in bundle.text_files()? {
        write_file(&dir.join(name), &content)?;
    }
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, BundleError> {
    let text = fs::read_to_string(path).map_err(|source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| BundleError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_bundle(dir: &Path) -> Result<Bundle, BundleError> {
    let manifest: Manifest = read_json(&dir.join(MANIFEST_FILE))?;
    let bundle: Bundle = read_json(&dir.join(BUNDLE_FILE))?;
    if manifest.kind != bundle.kind() || manifest.base_fingerprint != bundle.base_fingerprint() {
        return Err(BundleError::ManifestMismatch {
            path: dir.to_path_buf(),
        });
    }
    Ok(bundle)
}

/// Applies entity, then relation, then structure bundles to `base`,
/// whatever order they are passed in. Every bundle must have been built
/// from `base`.
pub fn compose(base: &KnowledgeGraph, bundles: &[Bundle]) -> Result<KnowledgeGraph, BundleError> {
    let expected = base.fingerprint()?;
    let mut sorted: Vec<&Bundle> = bundles.iter().collect();
    sorted.sort_by_key(|b| b.kind());
    for pair in sorted.windows(2) {
        if pair[0].kind() == pair[1].kind() {
            return Err(BundleError::DuplicateKind(pair[0].kind()));
        }
    }
    for b in &sorted {
        if b.base_fingerprint() != expected {
            return Err(BundleError::FingerprintMismatch {
                kind: b.kind(),
                expected: expected.clone(),
                found: b.base_fingerprint().to_string(),
            });
        }
    }
    let mut kg = base.clone();
    for b in sorted {
        kg = b.apply(&kg)?;
    }
    Ok(kg)
}
