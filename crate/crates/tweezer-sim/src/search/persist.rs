//! Plain-text persistence for optimization results.
//!
//! Results are stored as named blocks of `key = value` lines:
//!
//! ```text
//! [transport T=25us K=5]
//! objective = 0.0000234
//! coefficients = 0.0123 -0.0045 0.0011 0.0002 -0.0001
//! ```
//!
//! Keys inside a block are written in sorted order and floating-point
//! values use the shortest representation that parses back to the same
//! bits, so writing the same data twice produces byte-identical files and
//! long scans can resume by looking up finished blocks instead of
//! recomputing them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// One named group of `key = value` entries.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RecordBlock {
    pub name: String,
    pub fields: BTreeMap<String, String>,
}

impl RecordBlock {
    pub fn new(name: impl Into<String>) -> Self {
        RecordBlock {
            name: name.into(),
            fields: BTreeMap::new(),
        }
    }

    /// Store a raw string value.
    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.fields.insert(key.into(), value.into());
        self
    }

    /// Store one float, round-trip exact.
    pub fn set_f64(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.set(key, value.to_string())
    }

    /// Store a float list, space separated, round-trip exact.
    pub fn set_f64s(&mut self, key: impl Into<String>, values: &[f64]) -> &mut Self {
        let joined = values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        self.set(key, joined)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.get(key).map(String::as_str)
    }

    /// Parse one float field.
    pub fn f64(&self, key: &str) -> Result<f64> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::Domain(format!("block [{}] has no field {key}", self.name)))?;
        raw.parse()
            .map_err(|_| Error::Domain(format!("field {key} = {raw:?} is not a number")))
    }

    /// Parse a space-separated float list field.
    pub fn f64s(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::Domain(format!("block [{}] has no field {key}", self.name)))?;
        raw.split_whitespace()
            .map(|token| {
                token
                    .parse()
                    .map_err(|_| Error::Domain(format!("field {key} holds non-number {token:?}")))
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains([']', '\n']) {
            return Err(Error::Domain(format!(
                "invalid block name {:?}: must be non-empty without ']' or newlines",
                self.name
            )));
        }
        for (key, value) in &self.fields {
            if key.is_empty() || key.contains(['=', '\n']) || key.starts_with('[') {
                return Err(Error::Domain(format!("invalid field key {key:?}")));
            }
            if value.contains('\n') {
                return Err(Error::Domain(format!(
                    "field {key} holds a multi-line value"
                )));
            }
        }
        Ok(())
    }
}

/// Render blocks in order, fields sorted, one blank line between blocks.
pub fn render_blocks(blocks: &[RecordBlock]) -> Result<String> {
    let mut text = String::new();
    for (i, block) in blocks.iter().enumerate() {
        block.validate()?;
        if i > 0 {
            text.push('\n');
        }
        writeln!(text, "[{}]", block.name).expect("string write cannot fail");
        for (key, value) in &block.fields {
            writeln!(text, "{key} = {value}").expect("string write cannot fail");
        }
    }
    Ok(text)
}

/// Write `blocks` to `path`, replacing any existing file.
pub fn write_blocks(path: &Path, blocks: &[RecordBlock]) -> Result<()> {
    let text = render_blocks(blocks)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Append one block to `path`, creating the file if needed.
pub fn append_block(path: &Path, block: &RecordBlock) -> Result<()> {
    let rendered = render_blocks(std::slice::from_ref(block))?;
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let lead_in = if file.metadata()?.len() > 0 { "\n" } else { "" };
    file.write_all(lead_in.as_bytes())?;
    file.write_all(rendered.as_bytes())?;
    Ok(())
}

/// Parse a block file written by [`write_blocks`] / [`append_block`].
///
/// Blank lines and `#` comments are skipped; anything else outside a block
/// or without a `=` is an error.
pub fn read_blocks(path: &Path) -> Result<Vec<RecordBlock>> {
    let text = std::fs::read_to_string(path)?;
    parse_blocks(&text)
}

/// Parse block text (see [`read_blocks`]).
pub fn parse_blocks(text: &str) -> Result<Vec<RecordBlock>> {
    let mut blocks: Vec<RecordBlock> = Vec::new();
    for (index, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| Error::Domain(format!(
                "line {}: block header {line:?} is missing its closing bracket",
                index + 1
            )))?;
            blocks.push(RecordBlock::new(name));
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Domain(format!(
                "line {}: expected `key = value`, got {line:?}",
                index + 1
            )));
        };
        let block = blocks.last_mut().ok_or_else(|| {
            Error::Domain(format!(
                "line {}: field {line:?} appears before any block header",
                index + 1
            ))
        })?;
        let key = key.trim().to_owned();
        if block.fields.contains_key(&key) {
            return Err(Error::Domain(format!(
                "line {}: duplicate field {key:?} in block [{}]",
                index + 1,
                block.name
            )));
        }
        block.fields.insert(key, value.trim().to_owned());
    }
    Ok(blocks)
}

/// First block with the given name, if present.
pub fn find_block<'a>(blocks: &'a [RecordBlock], name: &str) -> Option<&'a RecordBlock> {
    blocks.iter().find(|block| block.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn scratch(tag: &str) -> PathBuf {
        std::env::temp_dir().join(format!("pulse-records-{tag}-{}", std::process::id()))
    }

    fn sample() -> Vec<RecordBlock> {
        let mut a = RecordBlock::new("transport T=25us K=5");
        a.set_f64("objective", 2.34e-5)
            .set_f64s("coefficients", &[0.0123, -0.0045, 1.0 / 3.0])
            .set("converged", "true");
        let mut b = RecordBlock::new("transport T=30us K=5");
        b.set_f64("objective", std::f64::consts::PI * 1e-6);
        vec![a, b]
    }

    #[test]
    fn blocks_round_trip_bit_exactly() {
        let path = scratch("roundtrip");
        let blocks = sample();
        write_blocks(&path, &blocks).unwrap();
        let back = read_blocks(&path).unwrap();
        assert_eq!(back, blocks);
        assert_eq!(
            back[0].f64s("coefficients").unwrap(),
            vec![0.0123, -0.0045, 1.0 / 3.0]
        );
        assert_eq!(
            back[1].f64("objective").unwrap(),
            std::f64::consts::PI * 1e-6
        );
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn rendering_is_deterministic() {
        let a = render_blocks(&sample()).unwrap();
        let b = render_blocks(&sample()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn append_extends_an_existing_scan_file() {
        let path = scratch("append");
        std::fs::remove_file(&path).ok();
        let blocks = sample();
        append_block(&path, &blocks[0]).unwrap();
        append_block(&path, &blocks[1]).unwrap();
        let back = read_blocks(&path).unwrap();
        assert_eq!(back, blocks);
        assert!(find_block(&back, "transport T=30us K=5").is_some());
        assert!(find_block(&back, "missing").is_none());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# scan results\n\n[point 1]\n# inline note\nvalue = 3\n";
        let blocks = parse_blocks(text).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].get("value"), Some("3"));
    }

    #[test]
    fn malformed_text_is_rejected() {
        assert!(parse_blocks("stray line\n").is_err());
        assert!(parse_blocks("[unclosed\n").is_err());
        assert!(parse_blocks("orphan = 1\n").is_err());
        assert!(parse_blocks("[b]\nk = 1\nk = 2\n").is_err());
    }

    #[test]
    fn invalid_names_refuse_to_render() {
        let mut block = RecordBlock::new("bad]name");
        block.set("k", "v");
        assert!(render_blocks(std::slice::from_ref(&block)).is_err());
        let mut block = RecordBlock::new("fine");
        block.set("bad=key", "v");
        assert!(render_blocks(std::slice::from_ref(&block)).is_err());
    }
}
