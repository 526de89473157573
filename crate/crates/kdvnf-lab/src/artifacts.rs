//! Report files: deterministic names, atomic writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::SessionConfig;

/// Stands in for a wall-clock timestamp: a digest of the subcommand and the
/// resolved configuration, so identical sessions produce identical file names.
pub fn stamp(subcommand: &str, config: &SessionConfig, extra: &str) -> String {
    let mut h = Sha256::new();
    h.update(subcommand.as_bytes());
    h.update(serde_json::to_vec(config).expect("config serializes"));
    h.update(extra.as_bytes());
    h.finalize().iter().take(6).map(|b| format!("{b:02x}")).collect()
}

/// Writes `bytes` to `dir/name` through a temporary file in the same directory.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.as_file().sync_all()?;
    let target = dir.join(name);
    tmp.persist(&target).map_err(|e| e.error)?;
    Ok(target)
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("reports serialize");
    out.push(b'\n');
    out
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize");
    }
    w.into_inner().expect("in-memory writer")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stamp_tracks_the_configuration() {
        let c = SessionConfig::default();
        assert_eq!(stamp("norms", &c, ""), stamp("norms", &c, ""));
        assert_ne!(stamp("norms", &c, ""), stamp("simulate", &c, ""));
        let mut d = c.clone();
        d.seed = 2;
        assert_ne!(stamp("norms", &c, ""), stamp("norms", &d, ""));
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "a.csv", b"one").unwrap();
        let p = write_atomic(dir.path(), "a.csv", b"two").unwrap();
        assert_eq!(std::fs::read(p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
