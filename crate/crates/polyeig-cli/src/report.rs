//! Minimal CSV writer: `,` separator, header row, LF endings, `#` comments.

use std::fmt::{Display, Write as _};

pub struct Table {
    comments: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    current: Vec<String>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { comments: Vec::new(), header: header.into_iter().map(Into::into).collect(), rows: Vec::new(), current: Vec::new() }
    }

    pub fn comment(&mut self, line: &str) {
        self.comments.push(line.to_string());
    }

    /// Appends a field to the row in progress. `Display` for floats gives
    /// the shortest round-tripping form with a `.` separator.
    pub fn push(&mut self, value: impl Display) -> &mut Self {
        self.current.push(value.to_string());
        self
    }

    pub fn end_row(&mut self) {
        assert_eq!(self.current.len(), self.header.len(), "row width must match the header");
        self.rows.push(std::mem::take(&mut self.current));
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}
