//! Plain-text `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are
//! case-sensitive; `_` and `-` are interchangeable. Command-line flags are
//! layered on top with [`Config::set`].

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", k + 1)))?;
            let key = normalize(key);
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", k + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(normalize(key), value.to_string());
    }

    /// Sets `key` only when `value` is present.
    pub fn set_opt<T: ToString>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.set(key, v);
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize(key)).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list; a `lo:step:hi` range is also accepted.
    pub fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.raw(key).map(parse_list).transpose()
    }
}

/// Parses `2,2.5,3` or the inclusive range `2:0.5:3`.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("bad number list `{text}`"));
    let nums = |sep: char| -> Result<Vec<f64>> {
        text.split(sep)
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect()
    };
    if text.contains(':') {
        let p = nums(':')?;
        let [lo, step, hi] = p[..] else {
            return Err(bad());
        };
        if step.is_nan() || step <= 0.0 || hi < lo {
            return Err(bad());
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        // Snap to 1e-9: 2.0:0.1:2.3 yields 2.3, not 2.3000000000000003.
        return Ok((0..count)
            .map(|k| ((lo + k as f64 * step) * 1e9).round() / 1e9)
            .collect());
    }
    nums(',')
}
