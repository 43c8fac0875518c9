use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// A 1-based, inclusive source range.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub file: Arc<str>,
    pub line_start: u32,
    pub col_start: u32,
    pub line_end: u32,
    pub col_end: u32,
}

impl Span {
    pub fn new(
        file: Arc<str>,
        line_start: u32,
        col_start: u32,
        line_end: u32,
        col_end: u32,
    ) -> Self {
        Span {
            file,
            line_start,
            col_start,
            line_end,
            col_end,
        }
    }

    /// Placeholder span used for synthesized nodes and when spans are cleared
    /// for structural comparison.
    pub fn dummy() -> Self {
        Span::new(Arc::from(""), 0, 0, 0, 0)
    }

    /// Smallest span covering both `self` and `other`.
    pub fn to(&self, other: &Span) -> Span {
        Span {
            file: self.file.clone(),
            line_start: self.line_start,
            col_start: self.col_start,
            line_end: other.line_end,
            col_end: other.col_end,
        }
    }

    /// True if `(line, col)` lies inside this span.
    pub fn contains(&self, line: u32, col: u32) -> bool {
        (line, col) >= (self.line_start, self.col_start)
            && (line, col) <= (self.line_end, self.col_end)
    }

    /// Short `line:col` label, used in obligation ids.
    pub fn start_label(&self) -> String {
        format!("{}:{}", self.line_start, self.col_start)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line_start, self.col_start)
    }
}
