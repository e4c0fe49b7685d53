//! Project layout, read from an optional TOML file.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fruitnet::records::{REFERENCE_TEST_IMAGES, REFERENCE_TRAIN_IMAGES};
use serde::Deserialize;

/// Keys accepted in the config file. Relative paths are taken from
/// `root_dir`, which itself is relative to the file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    root_dir: Option<PathBuf>,
    data_dir: Option<PathBuf>,
    models_dir: Option<PathBuf>,
    labels_file: Option<PathBuf>,
    training_images_dir: Option<PathBuf>,
    test_images_dir: Option<PathBuf>,
    train_images: Option<usize>,
    test_images: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectConfig {
    pub root_dir: PathBuf,
    pub data_dir: PathBuf,
    pub models_dir: PathBuf,
    pub labels_file: PathBuf,
    pub training_images_dir: PathBuf,
    pub test_images_dir: PathBuf,
    pub train_images: usize,
    pub test_images: usize,
}

impl ProjectConfig {
    /// Defaults rooted at `root`: `data/`, `models/`, `labels.txt`,
    /// `Training/` and `Test/`.
    pub fn rooted(root: &Path) -> Self {
        Self {
            root_dir: root.to_path_buf(),
            data_dir: root.join("data"),
            models_dir: root.join("models"),
            labels_file: root.join("labels.txt"),
            training_images_dir: root.join("Training"),
            test_images_dir: root.join("Test"),
            train_images: REFERENCE_TRAIN_IMAGES,
            test_images: REFERENCE_TEST_IMAGES,
        }
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cwd = std::env::current_dir().context("reading the working directory")?;
        let Some(path) = path else {
            return Ok(Self::rooted(&cwd));
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let file: FileConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => cwd.join(p),
            _ => cwd,
        };
        let root = base.join(file.root_dir.unwrap_or_default());
        let defaults = Self::rooted(&root);
        let under = |p: Option<PathBuf>, fallback: PathBuf| p.map_or(fallback, |p| root.join(p));
        Ok(Self {
            data_dir: under(file.data_dir, defaults.data_dir),
            models_dir: under(file.models_dir, defaults.models_dir),
            labels_file: under(file.labels_file, defaults.labels_file),
            training_images_dir: under(file.training_images_dir, defaults.training_images_dir),
            test_images_dir: under(file.test_images_dir, defaults.test_images_dir),
            train_images: file.train_images.unwrap_or(defaults.train_images),
            test_images: file.test_images.unwrap_or(defaults.test_images),
            root_dir: root,
        })
    }
}

pub fn require_dir(path: &Path, what: &str) -> Result<()> {
    anyhow::ensure!(path.is_dir(), "{what} {} is not a directory", path.display());
    Ok(())
}

pub fn require_file(path: &Path, what: &str) -> Result<()> {
    anyhow::ensure!(path.is_file(), "{what} {} does not exist", path.display());
    Ok(())
}
