use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::Failure;

/// `key=value` settings; blank lines and `#` comments are skipped.
#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>, allowed: &[&str]) -> Result<Self, Failure> {
        let Some(path) = path else { return Ok(ConfigFile::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        Self::parse(&text, allowed).map_err(|msg| Failure::Usage(format!("{}: {msg}", path.display())))
    }

    pub fn parse(text: &str, allowed: &[&str]) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
            let k = k.trim().replace('_', "-");
            if !allowed.contains(&k.as_str()) {
                return Err(format!("line {}: unknown key `{k}`", i + 1));
            }
            values.insert(k, v.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    /// The flag value if given, else the file's value, else `None`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, Failure>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| Failure::Usage(format!("config key `{key}`: {e}"))))
            .transpose()
    }

    pub fn flag(&self, set: bool, key: &str) -> Result<bool, Failure> {
        Ok(set || self.pick::<bool>(None, key)?.unwrap_or(false))
    }
}
