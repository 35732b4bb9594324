//! Fully resolved run configuration, embedded in every report.

use std::path::PathBuf;

use serde::Serialize;

use sepcoef::oracles::ClosedFormModel;
use sepcoef::selection::SelectionMethod;
use sepcoef::simgen::ScenarioSpec;
use sepcoef::{PreprocessSpec, Variant};

use crate::args::OutputFormat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandName {
    Estimate,
    Permtest,
    Select,
    Simulate,
    Oracle,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: CommandName,
    pub input_path: Option<PathBuf>,
    pub response_column: Option<String>,
    pub predictor_columns: Vec<String>,
    pub preprocess: Option<PreprocessSpec>,
    pub variant: Option<Variant>,
    pub seed: Option<u64>,
    pub n_perms: Option<usize>,
    pub corrected: bool,
    pub method: Option<SelectionMethod>,
    pub standardize: Option<bool>,
    pub max_p: Option<usize>,
    pub scenario: Option<ScenarioSpec>,
    pub model: Option<ClosedFormModel>,
    pub output: OutputFormat,
    pub output_path: Option<PathBuf>,
    pub clip_negative: bool,
}

impl RunConfig {
    pub fn new(command: CommandName, output: OutputFormat, output_path: Option<PathBuf>) -> Self {
        Self {
            command,
            input_path: None,
            response_column: None,
            predictor_columns: Vec::new(),
            preprocess: None,
            variant: None,
            seed: None,
            n_perms: None,
            corrected: false,
            method: None,
            standardize: None,
            max_p: None,
            scenario: None,
            model: None,
            output,
            output_path,
            clip_negative: false,
        }
    }
}
