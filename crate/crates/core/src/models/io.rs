use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::autodiff::{read_checkpoint, write_checkpoint, ParameterStore};

use super::config::ModelConfig;
use super::model::Model;
use super::ModelError;

/// Writes the parameters, tagged with the config hash.
pub fn save_checkpoint(path: &Path, config: &ModelConfig, store: &ParameterStore) -> Result<(), ModelError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, &config.hash(), store)?;
    w.flush()?;
    Ok(())
}

/// Rebuilds the model for `config` and fills it from a checkpoint whose
/// hash and parameter layout must match.
pub fn load_checkpoint(
    path: &Path,
    config: &ModelConfig,
    vocab_size: usize,
) -> Result<(Model, ParameterStore), ModelError> {
    let ckpt = read_checkpoint(BufReader::new(File::open(path)?))?;
    if ckpt.config_hash != config.hash() {
        return Err(ModelError::ConfigMismatch { expected: config.hash(), found: ckpt.config_hash });
    }
    let (model, mut store) = Model::new(config, vocab_size)?;
    if ckpt.store.len() != store.len() {
        return Err(ModelError::Config(format!(
            "checkpoint has {} parameters, model has {}",
            ckpt.store.len(),
            store.len()
        )));
    }
    for id in store.ids().collect::<Vec<_>>() {
        let name = store.name(id).to_string();
        let value = ckpt
            .store
            .by_name(&name)
            .ok_or_else(|| ModelError::Config(format!("checkpoint lacks parameter {name}")))?;
        store.set(id, value.clone())?;
    }
    Ok((model, store))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Variant;

    #[test]
    fn round_trip_and_hash_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let cfg = ModelConfig::tiny(Variant::ExplainAttention);
        let (_, mut store) = Model::new(&cfg, 20).unwrap();
        let id = store.ids().next().unwrap();
        let bumped = store.get(id).map(|x| x * 2.0);
        store.set(id, bumped).unwrap();
        save_checkpoint(&path, &cfg, &store).unwrap();
        let (_, back) = load_checkpoint(&path, &cfg, 20).unwrap();
        assert_eq!(back, store);
        let other = ModelConfig { seed: 5, ..cfg };
        assert!(matches!(load_checkpoint(&path, &other, 20), Err(ModelError::ConfigMismatch { .. })));
    }
}
