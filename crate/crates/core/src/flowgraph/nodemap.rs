use std::collections::BTreeMap;

use super::NodeMapError;

/// Sidecar that pins global node ids: one `function.key = id` per line,
/// `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeMap {
    entries: BTreeMap<String, BTreeMap<String, u32>>,
    order: Vec<String>,
}

impl NodeMap {
    pub fn parse(text: &str) -> Result<NodeMap, NodeMapError> {
        let mut map = NodeMap::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: &str| NodeMapError::Syntax { line: i + 1, message: message.to_string() };
            let (lhs, rhs) = line.split_once('=').ok_or_else(|| syntax("expected `function.key = id`"))?;
            let (function, key) = lhs.trim().split_once('.').ok_or_else(|| syntax("expected `function.key`"))?;
            let id: u32 = rhs.trim().parse().map_err(|_| syntax("id is not a non-negative integer"))?;
            let (function, key) = (function.trim(), key.trim());
            if function.is_empty() || key.is_empty() {
                return Err(syntax("empty function or key"));
            }
            if !map.entries.contains_key(function) {
                map.order.push(function.to_string());
            }
            let slot = map.entries.entry(function.to_string()).or_default();
            if slot.insert(key.to_string(), id).is_some() {
                return Err(syntax("key assigned twice"));
            }
        }
        Ok(map)
    }

    /// Functions in order of first mention.
    pub fn functions(&self) -> impl Iterator<Item = &str> {
        self.order.iter().map(String::as_str)
    }

    pub fn entries_for(&self, function: &str) -> Option<&BTreeMap<String, u32>> {
        self.entries.get(function)
    }

    pub fn insert(&mut self, function: &str, key: &str, id: u32) {
        if !self.entries.contains_key(function) {
            self.order.push(function.to_string());
        }
        self.entries.entry(function.to_string()).or_default().insert(key.to_string(), id);
    }
}
