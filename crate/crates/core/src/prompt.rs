//! Prompt templates for the five querying strategies.
//!
//! Templates are data: a [`TemplateSet`] can be loaded from a JSON file that
//! maps strategy keys to template strings. The built-in defaults are golden
//! values and must not be edited.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const ENTITY_NAME: &str = "{Entity Name}";
pub const RELATION_NAME: &str = "{Relation Name}";
pub const ENTITY_DESCRIPTION: &str = "{Entity Description}";

const PLACEHOLDERS: [&str; 3] = [ENTITY_NAME, RELATION_NAME, ENTITY_DESCRIPTION];

pub const ENTITY_EXPAND_TEMPLATE: &str =
    "Please provide all information about {Entity Name}. Give the rationale before answering:";
pub const RELATION_GLOBAL_TEMPLATE: &str = "Please provide an explanation of the significance of the relation {Relation Name} in a knowledge graph with one sentence:";
pub const RELATION_LOCAL_TEMPLATE: &str = "Please provide an explanation of the meaning of the triplet (head entity, {Relation Name}, tail entity) and rephrase it into a sentence:";
pub const RELATION_REVERSE_TEMPLATE: &str = "Please convert the relation {Relation Name} into a verb form and provide a statement in the passive voice:";
pub const STRUCTURE_KEYWORDS_TEMPLATE: &str = "Please extract the five most representative keywords from the following text: {Entity Description}. Keywords:";

/// Current version of the template file format.
pub const TEMPLATE_FILE_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("cannot render a {0} prompt from empty input")]
    EmptyInput(Strategy),
    #[error("template for {strategy} must contain {placeholder} exactly once")]
    BadTemplate {
        strategy: Strategy,
        placeholder: &'static str,
    },
    #[error("template for {strategy} contains foreign placeholder {placeholder}")]
    ForeignPlaceholder {
        strategy: Strategy,
        placeholder: &'static str,
    },
    #[error("template file: {0}")]
    File(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    EntityExpand,
    RelationGlobal,
    RelationLocal,
    RelationReverse,
    StructureKeywords,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::EntityExpand,
        Strategy::RelationGlobal,
        Strategy::RelationLocal,
        Strategy::RelationReverse,
        Strategy::StructureKeywords,
    ];

    pub fn placeholder(self) -> &'static str {
        match self {
            Strategy::EntityExpand => ENTITY_NAME,
            Strategy::RelationGlobal | Strategy::RelationLocal | Strategy::RelationReverse => {
                RELATION_NAME
            }
            Strategy::StructureKeywords => ENTITY_DESCRIPTION,
        }
    }

    pub fn default_template(self) -> &'static str {
        match self {
            Strategy::EntityExpand => ENTITY_EXPAND_TEMPLATE,
            Strategy::RelationGlobal => RELATION_GLOBAL_TEMPLATE,
            Strategy::RelationLocal => RELATION_LOCAL_TEMPLATE,
            Strategy::RelationReverse => RELATION_REVERSE_TEMPLATE,
            Strategy::StructureKeywords => STRUCTURE_KEYWORDS_TEMPLATE,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::EntityExpand => "entity_expand",
            Strategy::RelationGlobal => "relation_global",
            Strategy::RelationLocal => "relation_local",
            Strategy::RelationReverse => "relation_reverse",
            Strategy::StructureKeywords => "structure_keywords",
        })
    }
}

/// The three relation prompting perspectives. Ordering is the canonical
/// composition order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationMode {
    Global,
    Local,
    Reverse,
}

impl RelationMode {
    pub const ALL: [RelationMode; 3] =
        [RelationMode::Global, RelationMode::Local, RelationMode::Reverse];

    pub fn strategy(self) -> Strategy {
        match self {
            RelationMode::Global => Strategy::RelationGlobal,
            RelationMode::Local => Strategy::RelationLocal,
            RelationMode::Reverse => Strategy::RelationReverse,
        }
    }
}

impl fmt::Display for RelationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelationMode::Global => "global",
            RelationMode::Local => "local",
            RelationMode::Reverse => "reverse",
        })
    }
}

impl std::str::FromStr for RelationMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "global" | "g" => Ok(RelationMode::Global),
            "local" | "l" => Ok(RelationMode::Local),
            "reverse" | "r" => Ok(RelationMode::Reverse),
            other => Err(format!("unknown relation mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub strategy: Strategy,
    /// Entity or relation id the prompt is about, when known.
    pub subject_id: Option<String>,
    pub text: String,
}

impl RenderedPrompt {
    pub fn for_subject(mut self, id: impl Into<String>) -> Self {
        self.subject_id = Some(id.into());
        self
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TemplateFile {
    version: u32,
    templates: BTreeMap<Strategy, String>,
}

/// A validated template per strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: BTreeMap<Strategy, String>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self {
            templates: Strategy::ALL
                .iter()
                .map(|s| (*s, s.default_template().to_string()))
                .collect(),
        }
    }
}

impl TemplateSet {
    /// Overrides the defaults with `overrides`, validating each template.
    pub fn with_overrides(overrides: BTreeMap<Strategy, String>) -> Result<Self, PromptError> {
        let mut set = Self::default();
        for (strategy, template) in overrides {
            validate(strategy, &template)?;
            set.templates.insert(strategy, template);
        }
        Ok(set)
    }

    pub fn from_json(json: &str) -> Result<Self, PromptError> {
        let file: TemplateFile =
            serde_json::from_str(json).map_err(|e| PromptError::File(e.to_string()))?;
        if file.version != TEMPLATE_FILE_VERSION {
            return Err(PromptError::File(format!(
                "unsupported template file version {}",
                file.version
            )));
        }
        Self::with_overrides(file.templates)
    }

    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let json = std::fs::read_to_string(path)
            .map_err(|e| PromptError::File(format!("{}: {e}", path.display())))?;
        Self::from_json(&json)
    }

    pub fn to_json(&self) -> String {
        let file = TemplateFile {
            version: TEMPLATE_FILE_VERSION,
            templates: self.templates.clone(),
        };
        serde_json::to_string_pretty(&file).expect("template file serializes")
    }

    pub fn template(&self, strategy: Strategy) -> &str {
        &self.templates[&strategy]
    }

    /// Substitutes `value` for the strategy's placeholder; no other edits.
    pub fn render(&self, strategy: Strategy, value: &str) -> Result<RenderedPrompt, PromptError> {
        if value.is_empty() {
            return Err(PromptError::EmptyInput(strategy));
        }
        let text = self
            .template(strategy)
            .replacen(strategy.placeholder(), value, 1);
        Ok(RenderedPrompt {
            strategy,
            subject_id: None,
            text,
        })
    }

    pub fn entity_prompt(&self, name: &str) -> Result<RenderedPrompt, PromptError> {
        self.render(Strategy::EntityExpand, name)
    }

    pub fn relation_prompt(
        &self,
        name: &str,
        mode: RelationMode,
    ) -> Result<RenderedPrompt, PromptError> {
        self.render(mode.strategy(), name)
    }

    pub fn keyword_prompt(&self, description: &str) -> Result<RenderedPrompt, PromptError> {
        self.render(Strategy::StructureKeywords, description)
    }
}

fn validate(strategy: Strategy, template: &str) -> Result<(), PromptError> {
    let own = strategy.placeholder();
    if template.matches(own).count() != 1 {
        return Err(PromptError::BadTemplate {
            strategy,
            placeholder: own,
        });
    }
    if let Some(foreign) = PLACEHOLDERS
        .iter()
        .find(|p| **p != own && template.contains(**p))
    {
        return Err(PromptError::ForeignPlaceholder {
            strategy,
            placeholder: foreign,
        });
    }
    Ok(())
}

pub fn render_entity_prompt(name: &str) -> Result<RenderedPrompt, PromptError> {
    TemplateSet::default().entity_prompt(name)
}

pub fn render_relation_prompt(
    name: &str,
    mode: RelationMode,
) -> Result<RenderedPrompt, PromptError> {
    TemplateSet::default().relation_prompt(name, mode)
}

pub fn render_keyword_prompt(description: &str) -> Result<RenderedPrompt, PromptError> {
    TemplateSet::default().keyword_prompt(description)
}
