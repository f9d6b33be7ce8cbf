//! Flat report tables: one schema for every command.

use std::fmt::Display;

use clap::ValueEnum;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    TextSummary,
}

pub const COLUMNS: [&str; 12] =
    ["command", "spec", "n", "u", "t", "p", "quantity", "value", "ci_low", "ci_high", "flag", "detail"];

/// Shortest round-trip rendering, in exponent form outside `[1e-4, 1e15)`.
pub struct Num(pub f64);

impl Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let a = self.0.abs();
        if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{:e}", self.0)
        }
    }
}

/// A value that can fill a table cell.
pub trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    fn cell(&self) -> String {
        Num(*self).to_string()
    }
}

macro_rules! display_cell {
    ($($t:ty),*) => {
        $(impl Cell for $t {
            fn cell(&self) -> String {
                self.to_string()
            }
        })*
    };
}

display_cell!(usize, u32, u64, i32, bool, str, String, Num, ustatlab_core::SumKind, std::path::Display<'_>);

impl<T: Cell + ?Sized> Cell for &T {
    fn cell(&self) -> String {
        (**self).cell()
    }
}

/// One table row. Empty fields stay empty in the output.
#[derive(Clone, Debug, Default)]
pub struct Row {
    pub spec: String,
    pub n: String,
    pub u: String,
    pub t: String,
    pub p: String,
    pub quantity: String,
    pub value: String,
    pub ci_low: String,
    pub ci_high: String,
    pub flag: String,
    pub detail: String,
}

impl Row {
    pub fn new(quantity: &str, value: impl Cell) -> Self {
        Row { quantity: quantity.to_string(), value: value.cell(), ..Row::default() }
    }

    pub fn spec(mut self, v: impl Cell) -> Self {
        self.spec = v.cell();
        self
    }

    pub fn n(mut self, v: impl Cell) -> Self {
        self.n = v.cell();
        self
    }

    pub fn u(mut self, v: impl Cell) -> Self {
        self.u = v.cell();
        self
    }

    pub fn t(mut self, v: impl Cell) -> Self {
        self.t = v.cell();
        self
    }

    pub fn p(mut self, v: impl Cell) -> Self {
        self.p = v.cell();
        self
    }

    pub fn ci(mut self, lo: f64, hi: f64) -> Self {
        self.ci_low = lo.cell();
        self.ci_high = hi.cell();
        self
    }

    pub fn flag(mut self, v: impl Cell) -> Self {
        self.flag = v.cell();
        self
    }

    pub fn detail(mut self, v: impl Cell) -> Self {
        self.detail = v.cell();
        self
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub command: &'static str,
    pub config: Vec<(String, String)>,
    pub constants: String,
    pub summary: Vec<(String, String)>,
    pub warnings: Vec<String>,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Report {
            command,
            config: Vec::new(),
            constants: String::new(),
            summary: Vec::new(),
            warnings: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn config(&mut self, key: &str, value: impl Cell) {
        self.config.push((key.to_string(), value.cell()));
    }

    pub fn summary(&mut self, key: &str, value: impl Cell) {
        self.summary.push((key.to_string(), value.cell()));
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    fn cells<'a>(&'a self, r: &'a Row) -> [&'a str; 12] {
        [
            self.command,
            &r.spec,
            &r.n,
            &r.u,
            &r.t,
            &r.p,
            &r.quantity,
            &r.value,
            &r.ci_low,
            &r.ci_high,
            &r.flag,
            &r.detail,
        ]
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Csv => self.render_csv(),
            Format::TextSummary => Ok(self.render_text()),
        }
    }

    fn render_csv(&self) -> Result<String, CliError> {
        let mut out = String::new();
        out.push_str(&format!("# command={}\n", self.command));
        for (k, v) in &self.config {
            out.push_str(&format!("# config.{k}={v}\n"));
        }
        out.push_str(&format!("# constants_used={}\n", self.constants));
        for (k, v) in &self.summary {
            out.push_str(&format!("# summary.{k}={v}\n"));
        }
        for w in &self.warnings {
            out.push_str(&format!("# warning: {w}\n"));
        }
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(COLUMNS).map_err(|e| CliError::Io(e.to_string()))?;
        for r in &self.rows {
            wtr.write_record(self.cells(r)).map_err(|e| CliError::Io(e.to_string()))?;
        }
        let bytes = wtr.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).expect("utf-8 cells"));
        Ok(out)
    }

    fn render_text(&self) -> String {
        let mut out = format!("ustatlab {}\n", self.command);
        out.push_str("config:\n");
        for (k, v) in &self.config {
            out.push_str(&format!("  {k}: {v}\n"));
        }
        out.push_str(&format!("constants_used: {}\n", self.constants));
        if !self.summary.is_empty() {
            out.push_str("summary:\n");
            for (k, v) in &self.summary {
                out.push_str(&format!("  {k}: {v}\n"));
            }
        }
        if !self.warnings.is_empty() {
            out.push_str("warnings:\n");
            for w in &self.warnings {
                out.push_str(&format!("  - {w}\n"));
            }
        }
        // Only columns that are used somewhere.
        let used: Vec<usize> = (1..COLUMNS.len())
            .filter(|&c| self.rows.iter().any(|r| !self.cells(r)[c].is_empty()))
            .collect();
        out.push_str(&format!("rows: {}\n", self.rows.len()));
        if self.rows.is_empty() {
            return out;
        }
        let width: Vec<usize> = used
            .iter()
            .map(|&c| self.rows.iter().map(|r| self.cells(r)[c].len()).max().unwrap_or(0).max(COLUMNS[c].len()))
            .collect();
        let line = |cells: Vec<&str>| {
            let parts: Vec<String> = cells.iter().zip(&width).map(|(s, w)| format!("{s:<w$}")).collect();
            format!("  {}\n", parts.join("  ").trim_end())
        };
        out.push_str(&line(used.iter().map(|&c| COLUMNS[c]).collect()));
        for r in &self.rows {
            let cells = self.cells(r);
            out.push_str(&line(used.iter().map(|&c| cells[c]).collect()));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_descriptors() {
        let mut r = Report::new("norms");
        r.config("seed", 1);
        r.push(Row::new("norm", 1.5).spec("K=1,2;J="));
        let text = r.render(Format::Csv).unwrap();
        assert!(text.starts_with("# command=norms\n# config.seed=1\n"));
        assert!(text.contains("norms,\"K=1,2;J=\",,,,,norm,1.5,,,,\n"));
    }

    #[test]
    fn numbers_switch_to_exponent_form() {
        assert_eq!(Num(1.5).to_string(), "1.5");
        assert_eq!(Num(2.5e-16).to_string(), "2.5e-16");
        assert_eq!(Num(0.0).to_string(), "0");
        assert_eq!(Num(3e20).to_string(), "3e20");
    }

    #[test]
    fn text_drops_empty_columns() {
        let mut r = Report::new("norms");
        r.push(Row::new("norm", 2).spec("K=1;J="));
        let text = r.render(Format::TextSummary).unwrap();
        assert!(text.contains("spec"));
        assert!(!text.contains("ci_low"));
    }
}
