//! CSV and report-file helpers. All writers take rows that are already
//! fully formatted and ordered, so file content is a pure function of the
//! run results.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Ensure `dir` exists and return the full path for `name` inside it.
pub fn prepare(dir: &Path, name: &str) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}

/// Write a CSV file: one header line, then the rows, newline-terminated.
pub fn write_csv(dir: &Path, name: &str, header: &str, rows: &[String]) -> io::Result<PathBuf> {
    let path = prepare(dir, name)?;
    let mut text = String::with_capacity(rows.iter().map(|r| r.len() + 1).sum::<usize>() + 64);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    fs::write(&path, text)?;
    Ok(path)
}

/// Write a plain-text report.
pub fn write_text(dir: &Path, name: &str, body: &str) -> io::Result<PathBuf> {
    let path = prepare(dir, name)?;
    fs::write(&path, body)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_is_exactly_header_then_rows() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec!["1,2".to_string(), "3,4".to_string()];
        let path = write_csv(dir.path(), "t.csv", "a,b", &rows).unwrap();
        let text = fs::read_to_string(path).unwrap();
        assert_eq!(text, "a,b\n1,2\n3,4\n");
    }
}
