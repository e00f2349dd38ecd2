//! TOML scenario files.
//!
//! A file is a partial [`Scenario`]: missing keys keep their defaults. A
//! top-level `preset = "<name>"` starts from that preset instead, and the
//! remaining keys are merged over it table by table. Unknown keys, type
//! mismatches and invalid parameters are reported with the offending line.

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::sim::presets::preset;
use crate::sim::{Scenario, TrajectorySpec};
use crate::{Error, Result};

const PRESET_KEY: &str = "preset";

pub fn parse_config(text: &str) -> Result<Scenario> {
    let mut user: Table = toml::from_str(text).map_err(|e| Error::Config {
        line: e.span().map(|s| line_of_offset(text, s.start)),
        message: e.message().to_string(),
    })?;

    let base = match user.remove(PRESET_KEY) {
        None => Scenario::default(),
        Some(Value::String(name)) => preset(&name)?,
        Some(_) => {
            return Err(Error::Config { line: locate(text, &[PRESET_KEY]), message: "preset must be a string".into() })
        }
    };
    let mut merged = to_table(&base)?;
    merge(&mut merged, user);

    let scenario = Scenario::deserialize(Value::Table(merged)).map_err(|e| {
        let full = e.to_string();
        let (message, path) = match full.split_once("\nin `") {
            Some((m, rest)) => (m.to_string(), rest.trim_end().trim_end_matches('`').to_string()),
            None => (full.clone(), String::new()),
        };
        let keys: Vec<&str> = path.split('.').filter(|k| !k.is_empty()).collect();
        let line = unknown_field(&message)
            .and_then(|field| locate(text, &[keys.as_slice(), &[field]].concat()))
            .or_else(|| locate(text, &keys));
        Error::Config { line, message: if path.is_empty() { message } else { format!("{message} (in `{path}`)") } }
    })?;

    scenario.validate().map_err(|e| Error::Config { line: validation_line(text, &e), message: e.to_string() })?;
    Ok(scenario)
}

/// Resolved scenario as TOML; parsing it back yields the same scenario.
pub fn echo(scenario: &Scenario) -> Result<String> {
    toml::to_string(scenario).map_err(|e| Error::Config { line: None, message: e.to_string() })
}

/// Copy of `scenario` with the dotted `path` set to `value`, given as a TOML
/// literal (`0.5`, `"pinv-t"`, `true`).
pub fn set_param(scenario: &Scenario, path: &str, value: &str) -> Result<Scenario> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config { line: None, message: format!("malformed parameter path `{path}`") });
    }
    let parsed: Table = toml::from_str(&format!("v = {value}")).or_else(|_| toml::from_str(&format!("v = {value:?}"))).map_err(
        |e: toml::de::Error| Error::Config { line: None, message: format!("value `{value}`: {}", e.message()) },
    )?;
    let mut table = to_table(scenario)?;
    let mut slot = &mut table;
    for key in &keys[..keys.len() - 1] {
        slot = match slot.entry(key.to_string()).or_insert_with(|| Value::Table(Table::new())) {
            Value::Table(t) => t,
            _ => return Err(Error::Config { line: None, message: format!("`{key}` in `{path}` is not a table") }),
        };
    }
    let last = keys[keys.len() - 1];
    slot.insert(last.to_string(), parsed["v"].clone());
    let out = Scenario::deserialize(Value::Table(table))
        .map_err(|e| Error::Config { line: None, message: format!("`{path}`: {}", e.to_string().replace('\n', " ")) })?;
    out.validate()?;
    Ok(out)
}

fn to_table<T: Serialize>(value: &T) -> Result<Table> {
    match Value::try_from(value) {
        Ok(Value::Table(t)) => Ok(t),
        Ok(_) => unreachable!("structs serialize to tables"),
        Err(e) => Err(Error::Config { line: None, message: e.to_string() }),
    }
}

/// Recursive merge of `over` into `base`. Arrays and scalars are replaced.
/// A table whose `kind` tag changes restarts from that kind's stock
/// trajectory, so fields of the old variant do not leak into the new one.
fn merge(base: &mut Table, over: Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(o)) => {
                let retagged = matches!((b.get("kind"), o.get("kind")), (Some(x), Some(y)) if x != y);
                if retagged {
                    *b = o.get("kind").and_then(Value::as_str).and_then(trajectory_template).unwrap_or_default();
                }
                merge(b, o);
            }
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn trajectory_template(kind: &str) -> Option<Table> {
    let spec = match kind {
        "helix" => TrajectorySpec::helix(),
        "polyline3d" => TrajectorySpec::polyline(),
        _ => return None,
    };
    to_table(&spec).ok()
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn unknown_field(message: &str) -> Option<&str> {
    message.strip_prefix("unknown field `")?.split('`').next()
}

/// Line of the deepest prefix of `path` found in `text`, by scanning table
/// headers and `key =` lines. Good enough for hand-written files; inline
/// tables are attributed to their parent key.
fn locate(text: &str, path: &[&str]) -> Option<usize> {
    if path.is_empty() {
        return None;
    }
    let mut header: Vec<String> = Vec::new();
    let mut best: Option<(usize, usize)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let full: Vec<String> = if let Some(h) = line.strip_prefix("[[").and_then(|l| l.split("]]").next()) {
            header = split_key(h);
            header.clone()
        } else if let Some(h) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
            header = split_key(h);
            header.clone()
        } else if let Some((k, _)) = line.split_once('=') {
            if line.starts_with('#') {
                continue;
            }
            header.iter().cloned().chain(split_key(k)).collect()
        } else {
            continue;
        };
        let depth = full.iter().zip(path).take_while(|(a, b)| a == *b).count();
        if depth == full.len() && depth > 0 && best.is_none_or(|(d, _)| depth > d) {
            best = Some((depth, i + 1));
        }
    }
    best.map(|(_, line)| line)
}

fn split_key(k: &str) -> Vec<String> {
    k.split('.').map(|p| p.trim().trim_matches('"').to_string()).collect()
}

/// Best-effort line for a validation failure: the first key of the named
/// section that the message mentions.
fn validation_line(text: &str, err: &Error) -> Option<usize> {
    let message = err.to_string();
    let body = message.strip_prefix("invalid parameter: ").unwrap_or(&message);
    let (section, rest) = body.split_once(": ").unwrap_or(("", body));
    let words: Vec<&str> = rest.split(|c: char| !(c.is_alphanumeric() || c == '_')).filter(|w| !w.is_empty()).collect();
    words.iter().find_map(|w| locate(text, &[section, w]).filter(|_| !section.is_empty()))
        .or_else(|| words.iter().find_map(|w| locate(text, &[w])))
        .or_else(|| locate(text, &[section]))
}
