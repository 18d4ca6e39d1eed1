//! Flat `key = value` text records and 17-significant-digit float formatting.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Scientific notation with 17 significant digits; parses back bit-exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_list(vs: &[f64]) -> String {
    vs.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(", ")
}

#[derive(Clone, Debug)]
pub struct Entry {
    pub line: usize,
    pub value: String,
}

/// Parsed `key = value` lines; `#` starts a comment. Later duplicates are rejected.
#[derive(Clone, Debug, Default)]
pub struct KeyValues {
    path: String,
    entries: BTreeMap<String, Entry>,
}

impl KeyValues {
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(Error::Config {
                    path: path.into(),
                    line,
                    key: content.into(),
                    message: "expected `key = value`".into(),
                });
            };
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config {
                    path: path.into(),
                    line,
                    key,
                    message: "empty key".into(),
                });
            }
            if entries.contains_key(&key) {
                return Err(Error::Config {
                    path: path.into(),
                    line,
                    key,
                    message: "duplicate key".into(),
                });
            }
            entries.insert(
                key,
                Entry {
                    line,
                    value: v.trim().to_string(),
                },
            );
        }
        Ok(KeyValues {
            path: path.into(),
            entries,
        })
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Overrides (or inserts) a value; used for sweeps.
    pub fn set(&mut self, key: &str, value: &str) {
        let line = self.entries.get(key).map_or(0, |e| e.line);
        self.entries.insert(
            key.to_string(),
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }

    pub fn error(&self, key: &str, message: impl Into<String>) -> Error {
        Error::Config {
            path: self.path.clone(),
            line: self.entries.get(key).map_or(0, |e| e.line),
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn required(&self, key: &str) -> Result<&str> {
        self.raw(key).ok_or_else(|| self.error(key, "missing required key"))
    }

    pub fn parse_value<T: std::str::FromStr>(&self, key: &str, value: &str) -> Result<T> {
        value
            .parse::<T>()
            .map_err(|_| self.error(key, format!("cannot parse `{value}`")))
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.required(key)?;
        self.parse_value(key, v)
    }

    pub fn get_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            Some(v) => self.parse_value(key, v),
            None => Ok(default),
        }
    }

    pub fn get_opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key).map(|v| self.parse_value(key, v)).transpose()
    }

    /// Comma-separated list; an empty value is an empty list.
    pub fn get_list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let v = self.required(key)?;
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',').map(|s| self.parse_value(key, s.trim())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_and_errors() {
        let kv = KeyValues::parse("# c\na = 1\n b.c = 2, 3 # trailing\n", "cfg").unwrap();
        assert_eq!(kv.get::<u32>("a").unwrap(), 1);
        assert_eq!(kv.get_list::<f64>("b.c").unwrap(), vec![2.0, 3.0]);
        let err = kv.get::<f64>("rho").unwrap_err().to_string();
        assert!(err.contains("rho"), "{err}");
        assert!(KeyValues::parse("a = 1\na = 2\n", "cfg").is_err());
        let err = KeyValues::parse("a = 1\nnonsense\n", "cfg").unwrap_err().to_string();
        assert!(err.contains("cfg:2"), "{err}");
    }

    proptest! {
        #[test]
        fn float_text_roundtrip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
            let s = fmt_f64(v);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
