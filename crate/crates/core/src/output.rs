//! Comma-separated tables with `#`-prefixed `key=value` metadata lines.
//!
//! Numbers are written with 17 significant digits so every `f64` survives a
//! text round trip. Lines end in LF.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dynamics::{success_probability, Trajectory};
use crate::error::{Error, Result};

/// Formats a float with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), ..Self::default() }
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Header line and data rows, without metadata.
    pub fn body(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.meta {
            // Metadata values are single-line by construction.
            let value = value.replace(['\n', '\r'], " ");
            let _ = writeln!(out, "# {key}={value}");
        }
        out + &self.body()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).map_err(|e| Error::io(path.display().to_string(), e))
    }
}

/// `t, s, alpha, p0, rho_x, rho_y, rho_z, purity` for every stored sample.
pub fn trajectory_table(trajectory: &Trajectory) -> CsvTable {
    let mut table = CsvTable::new(["t", "s", "alpha", "p0", "rho_x", "rho_y", "rho_z", "purity"]);
    for p in &trajectory.points {
        let [x, y, z] = p.state.bloch();
        table.push(vec![
            num(p.t),
            num(p.frame.s),
            num(p.frame.alpha),
            num(success_probability(&p.state)),
            num(x),
            num(y),
            num(z),
            num(p.state.purity()),
        ]);
    }
    let d = &trajectory.diagnostics;
    table
        .meta("steps", d.steps)
        .meta("step", num(d.step))
        .meta("grid_step", num(d.grid_step))
        .meta("max_bloch_norm_sq", num(d.max_bloch_norm_sq))
        .meta("left_bloch_ball", d.left_bloch_ball)
        .meta("flagged", d.flagged)
        .meta("max_slow_gap_ratio", num(d.max_slow_gap_ratio))
        .meta("correlation_time", num(d.correlation_time));
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn render_layout() {
        let mut t = CsvTable::new(["a", "b"]);
        t.meta("n", 10).meta("note", "two\nlines");
        t.push(vec!["1".into(), "2".into()]);
        assert_eq!(t.render(), "# n=10\n# note=two lines\na,b\n1,2\n");
        assert_eq!(t.body(), "a,b\n1,2\n");
    }
}
