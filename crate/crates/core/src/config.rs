//! Flat `section.key = value` configuration files.
//!
//! Lines are `key = value`; `#` and `;` start comments. A `[section]` header
//! prefixes the following keys with `section.`, so both
//!
//! ```text
//! solver.tau = 1
//! ```
//!
//! and
//!
//! ```text
//! [solver]
//! tau = 1
//! ```
//!
//! give the key `solver.tau`. Keys under `result.` are ignored so that run
//! summaries can be fed back as configs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
    base_dir: PathBuf,
}

impl ConfigMap {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| {
                    Error::config(format!("line {}", lineno + 1), "unterminated section header")
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}", lineno + 1), format!("expected `key = value`, got `{line}`"))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::config(format!("line {}", lineno + 1), "empty key"));
            }
            let key = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if key.starts_with("result.") {
                continue;
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::config(key, "duplicate key"));
            }
        }
        Ok(Self {
            entries,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let dir = if dir.as_os_str().is_empty() { Path::new(".") } else { dir };
        let dir = dir.canonicalize().map_err(|e| Error::io(dir, e))?;
        Self::parse(&text, &dir)
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    /// Remove and return the raw value of `key`.
    pub fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn take_required(&mut self, key: &str) -> Result<String> {
        self.take(key).ok_or_else(|| Error::config(key, "missing required key"))
    }

    pub fn take_parsed<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::config(key, format!("cannot parse `{v}`"))),
        }
    }

    pub fn take_parsed_required<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.take_parsed(key)?
            .ok_or_else(|| Error::config(key, "missing required key"))
    }

    pub fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.take_parsed(key)?.unwrap_or(default))
    }

    pub fn take_bool(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.take(key).as_deref() {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(Error::config(key, format!("expected true or false, got `{v}`"))),
        }
    }

    /// A path resolved against the config file's directory.
    pub fn take_path(&mut self, key: &str) -> Option<PathBuf> {
        self.take(key).map(|v| self.base_dir.join(v))
    }

    /// Fails on the first key nobody consumed.
    pub fn finish(self) -> Result<()> {
        match self.entries.into_keys().next() {
            None => Ok(()),
            Some(key) => Err(Error::config(key, "unknown key")),
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(i) => &line[..i],
        None => line,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_and_sectioned_keys() {
        let text = "a.x = 1\n# comment\n[solver]\ntau = 2.5 ; trailing\n[result]\nsnr = 3\n";
        let mut c = ConfigMap::parse(text, Path::new("/tmp")).unwrap();
        assert_eq!(c.take_or("a.x", 0usize).unwrap(), 1);
        assert_eq!(c.take_parsed::<f64>("solver.tau").unwrap(), Some(2.5));
        c.finish().unwrap();
    }

    #[test]
    fn errors_name_the_key() {
        let mut c = ConfigMap::parse("solver.tau = abc\nbogus.key = 1", Path::new(".")).unwrap();
        let e = c.take_parsed::<f64>("solver.tau").unwrap_err();
        assert!(e.to_string().contains("solver.tau"));
        let e = c.finish().unwrap_err();
        assert!(e.is_config_error());
        assert!(e.to_string().contains("bogus.key"));
        assert!(ConfigMap::parse("a = 1\na = 2", Path::new(".")).is_err());
        assert!(ConfigMap::parse("no equals sign", Path::new(".")).is_err());
        let mut c = ConfigMap::parse("flag = yes", Path::new(".")).unwrap();
        assert!(c.take_bool("flag", false).is_err());
    }

    #[test]
    fn paths_resolve_against_base_dir() {
        let mut c = ConfigMap::parse("out = trace.csv", Path::new("/data/run")).unwrap();
        assert_eq!(c.take_path("out").unwrap(), PathBuf::from("/data/run/trace.csv"));
    }
}
