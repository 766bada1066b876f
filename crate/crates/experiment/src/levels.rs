//! Writing level files.

use std::path::{Path, PathBuf};

use ued_core::maze::assets::test_levels;
use ued_core::maze::{encode_level, sample_random_level, StaticParams};
use ued_core::Key;

use crate::error::ExperimentError;

/// Writes every shipped test level as `<Name>.txt`, plus `random_<i>.txt` for
/// `n_random` levels sampled from `params`.
pub fn make_levels(dir: &Path, n_random: usize, params: &StaticParams, seed: u64) -> Result<Vec<PathBuf>, ExperimentError> {
    std::fs::create_dir_all(dir).map_err(|e| ExperimentError::file(dir, e))?;
    let mut written = Vec::new();
    let mut write = |name: String, text: String| -> Result<(), ExperimentError> {
        let p = dir.join(format!("{name}.txt"));
        std::fs::write(&p, text).map_err(|e| ExperimentError::file(&p, e))?;
        written.push(p);
        Ok(())
    };
    for (name, level) in test_levels() {
        write(name.to_string(), encode_level(&level))?;
    }
    if n_random > 0 {
        params.validate()?;
        let key = Key::new(seed);
        for i in 0..n_random {
            write(format!("random_{i}"), encode_level(&sample_random_level(key.fold_in(i as u64), params)?))?;
        }
    }
    Ok(written)
}
