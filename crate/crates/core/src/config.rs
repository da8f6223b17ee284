//! Structured-text configuration dialect shared by vehicle, scenario and plan files.
//!
//! The format is line oriented:
//!
//! ```text
//! # comment
//! [section]
//! key = value   # trailing comments are allowed
//! ```
//!
//! Keys that appear before the first header belong to the root section `""`.
//! Section names may contain dots (`[task.3]`) and so may keys (`pid.heave.kp`).

use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: key `{key}`: {msg}")]
    Value { line: usize, key: String, msg: String },
    #[error("missing key `{key}` in section [{section}]")]
    Missing { section: String, key: String },
    #[error("line {line}: unknown key `{key}` in section [{section}]")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("invalid configuration: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().rev().find(|e| e.key == key)
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|err| ConfigError::Value {
                line: e.line,
                key: key.to_string(),
                msg: err.to_string(),
            }),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.parse(key)?.ok_or_else(|| ConfigError::Missing {
            section: self.name.clone(),
            key: key.to_string(),
        })
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.parse::<f64>(key)?.unwrap_or(default))
    }

    /// Whitespace-separated list of numbers, e.g. `r_cb = 0 0 -0.05`.
    pub fn floats(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(e) = self.get(key) else {
            return Ok(None);
        };
        e.value
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|err| ConfigError::Value {
                    line: e.line,
                    key: key.to_string(),
                    msg: format!("`{tok}`: {err}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    pub fn float_array<const N: usize>(&self, key: &str) -> Result<Option<[f64; N]>, ConfigError> {
        let Some(values) = self.floats(key)? else {
            return Ok(None);
        };
        let line = self.get(key).map(|e| e.line).unwrap_or(self.line);
        <[f64; N]>::try_from(values.as_slice())
            .map(Some)
            .map_err(|_| ConfigError::Value {
                line,
                key: key.to_string(),
                msg: format!("expected {N} numbers, got {}", values.len()),
            })
    }

    pub fn flag(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        let Some(e) = self.get(key) else {
            return Ok(None);
        };
        parse_flag(&e.value).map(Some).ok_or_else(|| ConfigError::Value {
            line: e.line,
            key: key.to_string(),
            msg: format!("expected on/off, got `{}`", e.value),
        })
    }

    /// Rejects any key not in `known`.
    pub fn check_keys(&self, known: &[&str]) -> Result<(), ConfigError> {
        for e in &self.entries {
            if !known.contains(&e.key.as_str()) {
                return Err(ConfigError::UnknownKey {
                    line: e.line,
                    section: self.name.clone(),
                    key: e.key.clone(),
                });
            }
        }
        Ok(())
    }
}

pub fn parse_flag(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Some(true),
        "off" | "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigDoc {
    pub sections: Vec<Section>,
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut sections = vec![Section {
            name: String::new(),
            line: 0,
            entries: Vec::new(),
        }];
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Parse {
                    line,
                    msg: "unterminated section header".into(),
                })?;
                let name = name.trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(ConfigError::Parse {
                        line,
                        msg: format!("bad section name `{name}`"),
                    });
                }
                if sections.iter().any(|s| s.name == name) {
                    return Err(ConfigError::Parse {
                        line,
                        msg: format!("duplicate section [{name}]"),
                    });
                }
                sections.push(Section {
                    name: name.to_string(),
                    line,
                    entries: Vec::new(),
                });
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
                line,
                msg: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(ConfigError::Parse {
                    line,
                    msg: format!("bad key `{key}`"),
                });
            }
            let value = value.trim().trim_matches('"').to_string();
            sections
                .last_mut()
                .expect("root section always present")
                .entries
                .push(Entry {
                    key: key.to_string(),
                    value,
                    line,
                });
        }
        Ok(Self { sections })
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn root(&self) -> &Section {
        &self.sections[0]
    }

    /// Sections whose name starts with `prefix.`, in file order.
    pub fn sections_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Section> {
        self.sections.iter().filter(move |s| {
            s.name
                .strip_prefix(prefix)
                .is_some_and(|rest| rest.starts_with('.'))
        })
    }

    /// Rejects any section not in `known` (the root section is always allowed).
    pub fn check_sections(&self, known: &[&str]) -> Result<(), ConfigError> {
        for s in &self.sections[1..] {
            let base = s.name.split('.').next().unwrap_or("");
            if !known.contains(&s.name.as_str()) && !known.contains(&base) {
                return Err(ConfigError::Parse {
                    line: s.line,
                    msg: format!("unknown section [{}]", s.name),
                });
            }
        }
        Ok(())
    }
}
