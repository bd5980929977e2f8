//! File output shared by the library and the command-line tool.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// Library version embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Writes `bytes` to a temporary sibling of `path`, then renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Prefixes every line of `text` with `# `, for CSV preambles.
pub fn comment_block(text: &str) -> String {
    text.lines().map(|l| format!("# {l}\n")).collect()
}

/// CSV document: a commented preamble, one header row, then the rows.
pub fn csv_with_preamble(preamble: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = comment_block(preamble);
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Shortest round-trip representation of a float.
pub fn fmt(v: f64) -> String {
    format!("{v:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("a.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        let leftovers = fs::read_dir(p.parent().unwrap()).unwrap().count();
        assert_eq!(leftovers, 1);
    }

    #[test]
    fn csv_layout() {
        let s = csv_with_preamble("a = 1\nb = 2", &["x", "y"], vec![vec!["1".into(), "2".into()]]);
        assert_eq!(s, "# a = 1\n# b = 2\nx,y\n1,2\n");
        assert_eq!(fmt(0.5).parse::<f64>().unwrap(), 0.5);
    }
}
