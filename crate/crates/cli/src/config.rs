//! Run configuration: a TOML file with `[model]`, `[train]`, `[corpus]`
//! and `[run]` tables, plus flat `--set section.key=value` overrides
//! applied on top. The resolved configuration is hashed into the run
//! manifest so a run can be reproduced from its output directory.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use replayguard_core::synth::CorpusConfig;
use replayguard_core::{ModelConfig, TrainConfig};

/// Output/input paths; command-line flags take precedence.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSection {
    pub out: Option<String>,
    pub manifest: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunFileConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub corpus: CorpusConfig,
    pub run: RunSection,
}

/// Parse the config file (if any) and apply `key=value` overrides.
/// Keys are dotted paths into the TOML tree, e.g. `train.lr_init=3e-4`.
pub fn resolve_config(
    config_path: Option<&std::path::Path>,
    overrides: &[String],
) -> Result<RunFileConfig, String> {
    let mut value: toml::Value = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            text.parse()
                .map_err(|e| format!("config {}: {e}", path.display()))?
        }
        None => toml::Value::Table(Default::default()),
    };

    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| format!("override '{item}' is not key=value"))?;
        set_path(&mut value, key.trim(), raw.trim())?;
    }

    value
        .try_into()
        .map_err(|e| format!("invalid configuration: {e}"))
}

fn set_path(root: &mut toml::Value, dotted: &str, raw: &str) -> Result<(), String> {
    let parts: Vec<&str> = dotted.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(format!("bad override key '{dotted}'"));
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| format!("'{dotted}' does not address a table"))?;
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let leaf = parts.last().unwrap();
    // Interpret the value as a TOML literal where possible, falling
    // back to a bare string ("d2", "dev_eer", ...).
    let parsed: toml::Value = match format!("v = {raw}").parse::<toml::Value>() {
        Ok(toml::Value::Table(mut t)) => t.remove("v").unwrap(),
        _ => toml::Value::String(raw.to_string()),
    };
    node.as_table_mut()
        .ok_or_else(|| format!("'{dotted}' does not address a table"))?
        .insert(leaf.to_string(), parsed);
    Ok(())
}

/// Hex SHA-256 of the fully resolved configuration.
pub fn config_hash(config: &RunFileConfig) -> String {
    let text = toml::to_string(config).unwrap_or_default();
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    format!("{:x}", hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_take_effect_and_hash_changes() {
        let base = resolve_config(None, &[]).unwrap();
        assert_eq!(base.train.batch_size, 64);

        let tuned = resolve_config(
            None,
            &[
                "train.batch_size=16".to_string(),
                "model.filters_per_channel=16".to_string(),
                "corpus.preset=d4".to_string(),
                "run.out=artifacts".to_string(),
            ],
        )
        .unwrap();
        assert_eq!(tuned.train.batch_size, 16);
        assert_eq!(tuned.model.filters_per_channel, 16);
        assert_eq!(tuned.run.out.as_deref(), Some("artifacts"));
        assert_ne!(config_hash(&base), config_hash(&tuned));
    }

    #[test]
    fn malformed_overrides_are_rejected() {
        assert!(resolve_config(None, &["no_equals".to_string()]).is_err());
        assert!(resolve_config(None, &["train.batch_size=zero".to_string()]).is_err());
    }
}
