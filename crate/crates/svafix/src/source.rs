//! Source files, byte spans, and line lookup shared by the HDL frontend
//! and everything downstream that reports locations.

use serde::{Deserialize, Serialize};

/// One input source file: a path label and its full text.
#[derive(Debug, Clone)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
    /// Byte offset of the start of each line, precomputed for line lookup.
    line_starts: Vec<usize>,
}

impl SourceFile {
    pub fn new(path: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let mut line_starts = vec![0];
        for (i, b) in text.bytes().enumerate() {
            if b == b'\n' {
                line_starts.push(i + 1);
            }
        }
        SourceFile {
            path: path.into(),
            text,
            line_starts,
        }
    }

    /// 1-based line number containing byte offset `pos`.
    pub fn line_of(&self, pos: usize) -> u32 {
        match self.line_starts.binary_search(&pos) {
            Ok(i) => i as u32 + 1,
            Err(i) => i as u32,
        }
    }

    /// 1-based column of byte offset `pos` within its line.
    pub fn col_of(&self, pos: usize) -> u32 {
        let line = self.line_of(pos) as usize;
        (pos - self.line_starts[line - 1]) as u32 + 1
    }

    /// Byte range covering 1-based lines `start..=end` (end exclusive of the
    /// trailing newline of `end`'s line when present).
    pub fn line_range(&self, start: u32, end: u32) -> (usize, usize) {
        let s = self.line_starts[(start as usize - 1).min(self.line_starts.len() - 1)];
        let e = if (end as usize) < self.line_starts.len() {
            self.line_starts[end as usize]
        } else {
            self.text.len()
        };
        (s, e)
    }

    pub fn line_count(&self) -> u32 {
        if self.text.ends_with('\n') {
            (self.line_starts.len() - 1) as u32
        } else {
            self.line_starts.len() as u32
        }
    }
}

/// The set of files a design was parsed from. Span file ids index into it.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    pub files: Vec<SourceFile>,
}

impl SourceMap {
    pub fn add(&mut self, path: impl Into<String>, text: impl Into<String>) -> u32 {
        self.files.push(SourceFile::new(path, text));
        (self.files.len() - 1) as u32
    }

    pub fn file(&self, id: u32) -> &SourceFile {
        &self.files[id as usize]
    }

    /// Text covered by a span.
    pub fn snippet(&self, span: Span) -> &str {
        &self.file(span.file).text[span.start..span.end]
    }
}

/// A byte span inside one source file, with cached 1-based line bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub file: u32,
    pub start: usize,
    pub end: usize,
    pub line_start: u32,
    pub line_end: u32,
}

impl Span {
    pub fn new(file: u32, start: usize, end: usize, src: &SourceFile) -> Self {
        Span {
            file,
            start,
            end,
            line_start: src.line_of(start),
            line_end: src.line_of(end.saturating_sub(1).max(start)),
        }
    }

    /// A span that contains another (used by the nesting invariant).
    pub fn contains(&self, other: Span) -> bool {
        self.file == other.file && self.start <= other.start && other.end <= self.end
    }

    pub fn dummy() -> Self {
        Span {
            file: 0,
            start: 0,
            end: 0,
            line_start: 1,
            line_end: 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_lookup() {
        let f = SourceFile::new("a.v", "one\ntwo\nthree\n");
        assert_eq!(f.line_of(0), 1);
        assert_eq!(f.line_of(3), 1);
        assert_eq!(f.line_of(4), 2);
        assert_eq!(f.line_of(8), 3);
        assert_eq!(f.col_of(5), 2);
        assert_eq!(f.line_count(), 3);
    }

    #[test]
    fn line_range_extraction() {
        let f = SourceFile::new("a.v", "one\ntwo\nthree\n");
        let (s, e) = f.line_range(2, 2);
        assert_eq!(&f.text[s..e], "two\n");
        let (s, e) = f.line_range(1, 3);
        assert_eq!(&f.text[s..e], "one\ntwo\nthree\n");
    }
}
