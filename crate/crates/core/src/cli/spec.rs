//! Experiment spec files: `key = value` lines grouped under `[section]`
//! headers, `#` comments.
//!
//! ```text
//! [experiment]
//! name = conc
//! kind = concentration_table
//! seed = 7
//!
//! [model]
//! dim = 10
//! sigma = 1.0
//!
//! [prior]
//! source = synthetic
//! kind = two_point
//! n = 2
//!
//! [shape]
//! separation = 2
//!
//! [params]
//! dims = 10, 50, 100, 200
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use crate::error::{Error, Result};

const SECTIONS: [&str; 5] = ["experiment", "model", "prior", "shape", "params"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    ConcentrationTable,
    SamplerVsOracle,
    DriftProfile,
    RobustnessTheorem2,
    ImageReconstruction,
    SpecfunAudit,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::ConcentrationTable => "concentration_table",
            Self::SamplerVsOracle => "sampler_vs_oracle",
            Self::DriftProfile => "drift_profile",
            Self::RobustnessTheorem2 => "robustness_theorem2",
            Self::ImageReconstruction => "image_reconstruction",
            Self::SpecfunAudit => "specfun_audit",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "concentration_table" => Self::ConcentrationTable,
            "sampler_vs_oracle" => Self::SamplerVsOracle,
            "drift_profile" => Self::DriftProfile,
            "robustness_theorem2" => Self::RobustnessTheorem2,
            "image_reconstruction" => Self::ImageReconstruction,
            "specfun_audit" => Self::SpecfunAudit,
            other => return Err(format!("unknown experiment kind `{other}`")),
        })
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Default)]
pub struct Section {
    name: String,
    header_line: usize,
    entries: BTreeMap<String, (usize, String)>,
    used: Mutex<BTreeSet<String>>,
}

impl Section {
    fn err(&self, line: usize, reason: impl Into<String>) -> Error {
        Error::SpecParse {
            line,
            reason: reason.into(),
        }
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.entries.get(key).map(|(l, v)| {
            self.used.lock().expect("not poisoned").insert(key.to_string());
            (*l, v.as_str())
        })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| self.err(line, format!("[{}] {key} = {v}: {e}", self.name))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| self.err(self.header_line, format!("[{}] is missing `{key}`", self.name)))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|e| self.err(line, format!("[{}] {key}: `{}`: {e}", self.name, s.trim())))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// All entries as `f64`, for free-form shape parameters.
    pub fn numeric_map(&self) -> Result<BTreeMap<String, f64>> {
        self.entries
            .keys()
            .map(|k| Ok((k.clone(), self.require::<f64>(k)?)))
            .collect()
    }

    fn unused(&self) -> Option<(usize, String)> {
        let used = self.used.lock().expect("not poisoned");
        self.entries
            .iter()
            .find(|(k, _)| !used.contains(*k))
            .map(|(k, (l, _))| (*l, k.clone()))
    }
}

#[derive(Debug)]
pub struct SpecFile {
    sections: BTreeMap<String, Section>,
    empty: Section,
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, Section> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::SpecParse {
                        line,
                        reason: format!("unterminated section header `{content}`"),
                    })?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(Error::SpecParse {
                        line,
                        reason: format!("unknown section [{name}] (expected one of {})", SECTIONS.join(", ")),
                    });
                }
                if sections.contains_key(name) {
                    return Err(Error::SpecParse {
                        line,
                        reason: format!("section [{name}] appears twice"),
                    });
                }
                sections.insert(
                    name.to_string(),
                    Section {
                        name: name.to_string(),
                        header_line: line,
                        ..Section::default()
                    },
                );
                current = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::SpecParse {
                    line,
                    reason: format!("expected `key = value`, got `{content}`"),
                });
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::SpecParse {
                    line,
                    reason: "empty key".into(),
                });
            }
            let Some(sec) = current.as_ref().and_then(|c| sections.get_mut(c)) else {
                return Err(Error::SpecParse {
                    line,
                    reason: format!("`{key}` appears before any section header"),
                });
            };
            if sec.entries.insert(key.to_string(), (line, value.trim().to_string())).is_some() {
                return Err(Error::SpecParse {
                    line,
                    reason: format!("duplicate key `{key}` in [{}]", sec.name),
                });
            }
        }
        if !sections.contains_key("experiment") {
            return Err(Error::SpecParse {
                line: 0,
                reason: "missing [experiment] section".into(),
            });
        }
        Ok(Self {
            sections,
            empty: Section::default(),
        })
    }

    pub fn section(&self, name: &str) -> &Section {
        self.sections.get(name).unwrap_or(&self.empty)
    }

    pub fn has_section(&self, name: &str) -> bool {
        self.sections.contains_key(name)
    }

    /// Fails on the first key no experiment consumed, which is almost always a typo.
    pub fn check_all_used(&self) -> Result<()> {
        for s in self.sections.values() {
            if let Some((line, key)) = s.unused() {
                return Err(Error::SpecParse {
                    line,
                    reason: format!("unrecognised key `{key}` in [{}]", s.name),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_lists() {
        let s = SpecFile::parse(
            "# comment\n[experiment]\nname = a # trailing\nkind = drift_profile\n\n[params]\ndims = 10, 50 ,100\n",
        )
        .unwrap();
        let e = s.section("experiment");
        assert_eq!(e.require::<String>("name").unwrap(), "a");
        assert_eq!(e.require::<ExperimentKind>("kind").unwrap(), ExperimentKind::DriftProfile);
        assert_eq!(s.section("params").list::<usize>("dims").unwrap(), Some(vec![10, 50, 100]));
        assert!(s.check_all_used().is_ok());
        assert_eq!(s.section("model").get::<f64>("sigma").unwrap(), None);
    }

    #[test]
    fn errors_carry_lines() {
        let line = |text: &str| match SpecFile::parse(text) {
            Err(Error::SpecParse { line, .. }) => line,
            other => panic!("{other:?}"),
        };
        assert_eq!(line("[experiment]\nname\n"), 2);
        assert_eq!(line("name = x\n"), 1);
        assert_eq!(line("[experiment]\n[bogus]\n"), 2);
        assert_eq!(line("[experiment]\na = 1\na = 2\n"), 3);
        assert_eq!(line("[model]\n"), 0);

        let s = SpecFile::parse("[experiment]\nname = a\nseed = x\ntypo = 1\n").unwrap();
        assert!(matches!(
            s.section("experiment").get::<u64>("seed"),
            Err(Error::SpecParse { line: 3, .. })
        ));
        s.section("experiment").raw("name");
        assert!(matches!(s.check_all_used(), Err(Error::SpecParse { line: 4, .. })));
    }
}
