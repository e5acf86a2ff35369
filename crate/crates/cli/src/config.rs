//! Flat `key = value` configuration files with line-accurate diagnostics.
//!
//! The format is deliberately plain: one assignment per line, dotted keys for
//! grouping (`system.g_mhz = 7.6`), `#` comments, no nesting.  Every key must
//! be consumed by the experiment builder; leftovers are reported with their
//! line number so typos never pass silently.

use std::fmt;

/// A configuration problem, carrying the offending line when known.
#[derive(Debug, Clone)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }

    pub fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug)]
struct Entry {
    key: String,
    value: String,
    line: usize,
    used: bool,
}

/// Parsed file: an ordered list of assignments with consumption tracking.
#[derive(Debug, Default)]
pub struct RawConfig {
    entries: Vec<Entry>,
}

/// Parse the text of a configuration file.
pub fn parse(text: &str) -> Result<RawConfig, ConfigError> {
    let mut entries: Vec<Entry> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let content = content.trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::at(line, format!("expected `key = value`, got `{content}`")));
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(ConfigError::at(line, "missing key before `=`"));
        }
        if !key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
        {
            return Err(ConfigError::at(
                line,
                format!("key `{key}` contains characters outside [A-Za-z0-9_.]"),
            ));
        }
        if value.is_empty() {
            return Err(ConfigError::at(line, format!("key `{key}` has no value")));
        }
        if let Some(prev) = entries.iter().find(|e| e.key == key) {
            return Err(ConfigError::at(
                line,
                format!("key `{key}` already set on line {}", prev.line),
            ));
        }
        entries.push(Entry { key: key.to_string(), value: value.to_string(), line, used: false });
    }
    Ok(RawConfig { entries })
}

impl RawConfig {
    /// Remove and return the value for `key`, if present.
    pub fn take(&mut self, key: &str) -> Option<Value> {
        let entry = self.entries.iter_mut().find(|e| e.key == key)?;
        entry.used = true;
        Some(Value { key: entry.key.clone(), raw: entry.value.clone(), line: entry.line })
    }

    /// Whether any (possibly already consumed) key starts with `prefix`.
    pub fn has_prefix(&self, prefix: &str) -> bool {
        self.entries.iter().any(|e| e.key.starts_with(prefix))
    }

    /// Error if any key was never consumed.
    pub fn ensure_consumed(&self) -> Result<(), ConfigError> {
        match self.entries.iter().find(|e| !e.used) {
            Some(e) => Err(ConfigError::at(e.line, format!("unknown key `{}`", e.key))),
            None => Ok(()),
        }
    }
}

/// A single assignment with typed accessors; errors cite the source line.
#[derive(Debug, Clone)]
pub struct Value {
    key: String,
    raw: String,
    line: usize,
}

impl Value {
    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn line(&self) -> usize {
        self.line
    }

    pub fn str(&self) -> &str {
        &self.raw
    }

    fn expected(&self, what: &str) -> ConfigError {
        ConfigError::at(self.line, format!("{}: expected {what}, got `{}`", self.key, self.raw))
    }

    pub fn f64(&self) -> Result<f64, ConfigError> {
        self.raw
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.expected("a finite number"))
    }

    pub fn positive_f64(&self) -> Result<f64, ConfigError> {
        let v = self.f64()?;
        if v > 0.0 { Ok(v) } else { Err(self.expected("a positive number")) }
    }

    pub fn nonnegative_f64(&self) -> Result<f64, ConfigError> {
        let v = self.f64()?;
        if v >= 0.0 { Ok(v) } else { Err(self.expected("a non-negative number")) }
    }

    pub fn usize(&self) -> Result<usize, ConfigError> {
        self.raw.parse::<usize>().map_err(|_| self.expected("a non-negative integer"))
    }

    pub fn u64(&self) -> Result<u64, ConfigError> {
        self.raw.parse::<u64>().map_err(|_| self.expected("a non-negative integer"))
    }

    /// Lower-cased keyword from a fixed set.
    pub fn keyword(&self, allowed: &[&str]) -> Result<String, ConfigError> {
        let v = self.raw.to_ascii_lowercase();
        if allowed.contains(&v.as_str()) {
            Ok(v)
        } else {
            Err(self.expected(&format!("one of {}", allowed.join("|"))))
        }
    }

    /// Semicolon-separated integer pairs: `1,0; 0,2; -1,3`.
    pub fn sites(&self) -> Result<Vec<(i64, i64)>, ConfigError> {
        let mut out = Vec::new();
        for part in self.raw.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let Some((a, b)) = part.split_once(',') else {
                return Err(self.expected("site pairs like `1,0; 0,2`"));
            };
            let dnx = a.trim().parse::<i64>().map_err(|_| self.expected("integer site indices"))?;
            let dny = b.trim().parse::<i64>().map_err(|_| self.expected("integer site indices"))?;
            out.push((dnx, dny));
        }
        if out.is_empty() {
            return Err(self.expected("at least one site pair"));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_assignments_comments_and_blanks() {
        let text = "\n# full-line comment\nsystem.g_mhz = 7.6  # trailing comment\nseed=42\n";
        let mut cfg = parse(text).unwrap();
        assert_eq!(cfg.take("system.g_mhz").unwrap().f64().unwrap(), 7.6);
        let seed = cfg.take("seed").unwrap();
        assert_eq!(seed.u64().unwrap(), 42);
        assert_eq!(seed.line(), 4);
        cfg.ensure_consumed().unwrap();
    }

    #[test]
    fn rejects_duplicates_with_both_lines() {
        let err = parse("a.b = 1\na.b = 2\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        assert!(err.message.contains("already set on line 1"), "{}", err.message);
    }

    #[test]
    fn rejects_malformed_lines() {
        let err = parse("just words\n").unwrap_err();
        assert_eq!(err.line, Some(1));
        assert!(err.message.contains("key = value"));

        let err = parse("key =\n").unwrap_err();
        assert!(err.message.contains("no value"));

        let err = parse("bad key = 1\n").unwrap_err();
        assert!(err.message.contains("characters outside"));
    }

    #[test]
    fn unknown_keys_are_reported_with_lines() {
        let mut cfg = parse("known = 1\nmystery = 2\n").unwrap();
        cfg.take("known").unwrap();
        let err = cfg.ensure_consumed().unwrap_err();
        assert_eq!(err.line, Some(2));
        assert!(err.message.contains("mystery"));
    }

    #[test]
    fn typed_accessors_name_key_and_line() {
        let mut cfg = parse("thermal.quadrature_order = pony\n").unwrap();
        let err = cfg.take("thermal.quadrature_order").unwrap().usize().unwrap_err();
        assert_eq!(err.line, Some(1));
        assert!(err.message.contains("thermal.quadrature_order"));
        assert!(err.message.contains("pony"));
    }

    #[test]
    fn site_lists_parse_and_validate() {
        let mut cfg = parse("scan.sites = 1,0; 0,2 ;-1,3\nbad = 1;2,3\n").unwrap();
        let sites = cfg.take("scan.sites").unwrap().sites().unwrap();
        assert_eq!(sites, vec![(1, 0), (0, 2), (-1, 3)]);
        assert!(cfg.take("bad").unwrap().sites().is_err());
    }
}
