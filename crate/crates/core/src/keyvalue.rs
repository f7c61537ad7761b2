//! Flat `key = value` text with `[section]` headers, shared by run
//! configurations and cross-section libraries. `#` starts a comment.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    /// Header text between the brackets, trimmed; empty for leading entries.
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }
}

impl Entry {
    pub fn parse<T: std::str::FromStr>(&self) -> Result<T> {
        self.value
            .trim()
            .parse()
            .map_err(|_| Error::config(self.line, &self.key, format!("cannot parse `{}`", self.value)))
    }

    /// Whitespace- or comma-separated list.
    pub fn parse_list<T: std::str::FromStr>(&self) -> Result<Vec<T>> {
        self.value
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::config(self.line, &self.key, format!("cannot parse list item `{s}`")))
            })
            .collect()
    }
}

pub fn parse_sections(text: &str) -> Result<Vec<Section>> {
    let mut sections = vec![Section {
        name: String::new(),
        line: 0,
        entries: Vec::new(),
    }];
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::config(line, content, "unterminated section header"))?;
            sections.push(Section {
                name: name.trim().to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::config(line, content, "expected `key = value`"))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::config(line, "", "empty key"));
        }
        sections.last_mut().expect("root section").entries.push(Entry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    if sections[0].entries.is_empty() {
        sections.remove(0);
    }
    Ok(sections)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let s = parse_sections("# hi\n[a]\nx = 1 # trailing\n\n[b c]\ny=2,3\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].name, "a");
        assert_eq!(s[0].get("x").unwrap().parse::<i32>().unwrap(), 1);
        assert_eq!(s[1].name, "b c");
        assert_eq!(s[1].get("y").unwrap().parse_list::<i32>().unwrap(), vec![2, 3]);
    }

    #[test]
    fn bad_line_reported() {
        let err = parse_sections("[a]\nnot a pair\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }));
        let err = parse_sections("[a]\nx = abc\n").unwrap()[0].get("x").unwrap().parse::<f64>().unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, ref key, .. } if key == "x"));
    }
}
