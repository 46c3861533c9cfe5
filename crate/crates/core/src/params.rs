//! Tiny parser for `name:key=value,key=value` spec strings.

use crate::error::{MddError, Result};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SpecString<'a> {
    pub name: &'a str,
    pub pairs: Vec<(&'a str, &'a str)>,
    what: &'static str,
    input: &'a str,
}

impl<'a> SpecString<'a> {
    pub fn parse(input: &'a str, what: &'static str) -> Result<Self> {
        let input_trim = input.trim();
        let (name, rest) = match input_trim.split_once(':') {
            Some((n, r)) => (n.trim(), r.trim()),
            None => (input_trim, ""),
        };
        if name.is_empty() {
            return Err(MddError::parse(what, input, "missing family name"));
        }
        let mut pairs = Vec::new();
        if !rest.is_empty() {
            for item in rest.split(',') {
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| MddError::parse(what, input, format!("expected key=value, got {item:?}")))?;
                pairs.push((k.trim(), v.trim()));
            }
        }
        Ok(SpecString {
            name,
            pairs,
            what,
            input,
        })
    }

    pub fn get(&self, key: &str) -> Option<&'a str> {
        self.pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v = self
            .get(key)
            .ok_or_else(|| MddError::parse(self.what, self.input, format!("missing {key}")))?;
        v.parse::<f64>()
            .map_err(|e| MddError::parse(self.what, self.input, format!("{key}: {e}")))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<usize>()
                .map_err(|e| MddError::parse(self.what, self.input, format!("{key}: {e}"))),
        }
    }

    /// Reject keys outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Result<()> {
        for (k, _) in &self.pairs {
            if !allowed.contains(k) {
                return Err(MddError::parse(self.what, self.input, format!("unknown key {k:?}")));
            }
        }
        Ok(())
    }

    pub fn error(&self, reason: impl Into<String>) -> MddError {
        MddError::parse(self.what, self.input, reason)
    }
}
