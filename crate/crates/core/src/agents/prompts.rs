//! System-prompt assembly. The three role templates ship as text assets with
//! a single placeholder token that gets replaced by the rendered dataset
//! description; operators may override any template from a file.

use std::path::Path;

use crate::dataset::{render_description, Dataset};

pub const SCIENTIST_TEMPLATE: &str = include_str!("../../assets/prompts/scientist.txt");
pub const EXTRACTOR_TEMPLATE: &str = include_str!("../../assets/prompts/extractor.txt");
pub const TESTER_TEMPLATE: &str = include_str!("../../assets/prompts/tester.txt");

pub const PLACEHOLDER: &str = "[THE_DATASET_DESCRIPTION_IS_ENTERED_HERE]";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Scientist,
    Extractor,
    Tester,
}

impl Role {
    pub fn name(&self) -> &'static str {
        match self {
            Role::Scientist => "scientist",
            Role::Extractor => "extractor",
            Role::Tester => "tester",
        }
    }
}

/// The three templates in force for a run (built-in unless overridden).
#[derive(Debug, Clone)]
pub struct PromptSet {
    pub scientist: String,
    pub extractor: String,
    pub tester: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet {
            scientist: SCIENTIST_TEMPLATE.to_string(),
            extractor: EXTRACTOR_TEMPLATE.to_string(),
            tester: TESTER_TEMPLATE.to_string(),
        }
    }
}

impl PromptSet {
    pub fn template(&self, role: Role) -> &str {
        match role {
            Role::Scientist => &self.scientist,
            Role::Extractor => &self.extractor,
            Role::Tester => &self.tester,
        }
    }

    pub fn override_from_file(&mut self, role: Role, path: &Path) -> std::io::Result<()> {
        let text = std::fs::read_to_string(path)?;
        match role {
            Role::Scientist => self.scientist = text,
            Role::Extractor => self.extractor = text,
            Role::Tester => self.tester = text,
        }
        Ok(())
    }

    /// The role's system prompt: the template with exactly the dataset
    /// description substituted for the placeholder.
    pub fn render(&self, role: Role, dataset: &Dataset) -> String {
        self.template(role)
            .replace(PLACEHOLDER, &render_description(dataset))
    }
}
