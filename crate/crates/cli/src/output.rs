use std::fmt::Write as _;
use std::path::Path;

use bpswall::Profile;
use serde_json::Value;

use crate::error::CliError;

/// Named numeric columns of equal length.
#[derive(Debug, Clone, Default)]
pub struct Table {
    columns: Vec<(String, Vec<f64>)>,
}

impl Table {
    pub fn push(&mut self, name: &str, values: Vec<f64>) {
        if let Some((_, first)) = self.columns.first() {
            assert_eq!(first.len(), values.len(), "column {name} has the wrong length");
        }
        self.columns.push((name.to_string(), values));
    }

    pub fn with(mut self, name: &str, values: Vec<f64>) -> Self {
        self.push(name, values);
        self
    }

    /// `x` followed by every profile field.
    pub fn from_profile(p: &Profile) -> Self {
        let mut t = Self::default().with("x", p.grid().points());
        for (k, v) in p.fields() {
            t.push(k, v.clone());
        }
        t
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, v)| v.len())
    }

    /// 17 significant digits in scientific notation.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let names: Vec<&str> = self.columns.iter().map(|(k, _)| k.as_str()).collect();
        s.push_str(&names.join(","));
        s.push('\n');
        for i in 0..self.rows() {
            for (j, (_, v)) in self.columns.iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                write!(s, "{:.16e}", v[i]).unwrap();
            }
            s.push('\n');
        }
        s
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips() {
        let v = vec![0.1, -1.0 / 3.0, 6.02214076e23, 5e-324];
        let t = Table::default().with("a", v.clone()).with("b", vec![1.0; 4]);
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("a,b"));
        for (line, want) in lines.zip(&v) {
            let got: f64 = line.split(',').next().unwrap().parse().unwrap();
            assert_eq!(got.to_bits(), want.to_bits());
        }
    }
}
