//! Layered run configuration.
//!
//! Each subcommand has a settings struct with defaults and a twin struct of
//! optional command-line flags. Values are merged as
//! defaults < top-level `seed` of the config file < the subcommand's section
//! < flags. Config keys use the flag names, e.g.
//!
//! ```toml
//! seed = 3
//!
//! [train]
//! steps = 500
//! batch-size = 16
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, Result};

pub const SNAPSHOT_FILE: &str = "effective-config.toml";

/// Declares `$settings` (resolved values, with defaults) and `$flags` (clap
/// arguments, all optional) with the same fields.
macro_rules! settings {
    (
        $(#[$meta:meta])*
        $settings:ident / $flags:ident {
            $( $(#[$fmeta:meta])* $field:ident : $ty:ty = $default:expr ),* $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
        #[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
        pub struct $settings {
            $( $(#[$fmeta])* pub $field: $ty, )*
        }

        impl Default for $settings {
            fn default() -> Self {
                $settings { $( $field: $default, )* }
            }
        }

        #[derive(Clone, Debug, Default, clap::Args, serde::Serialize)]
        #[serde(rename_all = "kebab-case")]
        pub struct $flags {
            $(
                $(#[$fmeta])*
                #[arg(long)]
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }
    };
}
pub(crate) use settings;

/// Parsed config file.
#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    table: toml::Table,
}

impl ConfigFile {
    pub fn load(path: &Path, sections: &[&str]) -> Result<ConfigFile> {
        let text = fs::read_to_string(path).map_err(|source| CliError::File { path: path.into(), source })?;
        let table: toml::Table =
            text.parse().map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?;
        for (key, value) in &table {
            let known = key == "seed" || (sections.contains(&key.as_str()) && value.is_table());
            if !known {
                return Err(CliError::config(format!("config {}: unknown top-level key `{key}`", path.display())));
            }
        }
        Ok(ConfigFile { table })
    }

    /// Merges defaults, this file and the flags into `S`.
    pub fn resolve<S, F>(&self, section: &str, flags: &F) -> Result<S>
    where
        S: Serialize + DeserializeOwned + Default,
        F: Serialize,
    {
        let bad = |e: &dyn std::fmt::Display| CliError::config(format!("[{section}]: {e}"));
        let mut merged = toml::Table::try_from(S::default()).map_err(|e| bad(&e))?;
        if let Some(seed) = self.table.get("seed") {
            if merged.contains_key("seed") {
                merged.insert("seed".into(), seed.clone());
            }
        }
        if let Some(toml::Value::Table(t)) = self.table.get(section) {
            merged.extend(t.clone());
        }
        merged.extend(toml::Table::try_from(flags).map_err(|e| bad(&e))?);
        S::deserialize(merged).map_err(|e| bad(&e.message()))
    }
}

/// Writes `[section]` with the effective settings into `dir`.
pub fn write_snapshot<S: Serialize>(dir: &Path, section: &str, settings: &S) -> Result<()> {
    let mut doc = toml::Table::new();
    let body = toml::Table::try_from(settings).map_err(|e| CliError::config(e.to_string()))?;
    doc.insert(section.into(), toml::Value::Table(body));
    let text = toml::to_string(&doc).map_err(|e| CliError::config(e.to_string()))?;
    write_file(&dir.join(SNAPSHOT_FILE), text.as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| CliError::File { path: path.into(), source };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io)?;
    }
    fs::write(path, bytes).map_err(io)
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::File { path: path.into(), source })
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::File { path: path.into(), source })
}

/// Rejects an unset path setting.
pub fn required<'a>(path: &'a PathBuf, key: &str) -> Result<&'a Path> {
    if path.as_os_str().is_empty() {
        Err(CliError::config(format!("missing `{key}` (flag --{key} or config key)")))
    } else {
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    settings! {
        Demo / DemoFlags {
            /// Number of things.
            count: usize = 4,
            rate: f64 = 0.5,
            seed: u64 = 0,
            out: PathBuf = PathBuf::new(),
        }
    }

    fn file(text: &str) -> ConfigFile {
        ConfigFile { table: text.parse().unwrap() }
    }

    #[test]
    fn layers_apply_in_order() {
        let f = file("seed = 9\n[demo]\ncount = 7\nrate = 0.25\n");
        let flags = DemoFlags { rate: Some(0.75), ..Default::default() };
        let s: Demo = f.resolve("demo", &flags).unwrap();
        assert_eq!(s, Demo { count: 7, rate: 0.75, seed: 9, out: PathBuf::new() });
        let plain: Demo = ConfigFile::default().resolve("demo", &DemoFlags::default()).unwrap();
        assert_eq!(plain, Demo::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let f = file("[demo]\ncuont = 7\n");
        assert!(f.resolve::<Demo, _>("demo", &DemoFlags::default()).is_err());
    }

    #[test]
    fn snapshot_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let s = Demo { count: 2, rate: 0.1, seed: 5, out: "x/y".into() };
        write_snapshot(dir.path(), "demo", &s).unwrap();
        let f = ConfigFile::load(&dir.path().join(SNAPSHOT_FILE), &["demo"]).unwrap();
        assert_eq!(f.resolve::<Demo, _>("demo", &DemoFlags::default()).unwrap(), s);
    }
}
