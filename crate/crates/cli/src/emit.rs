//! Plot-data export: two-column (plus error band) whitespace-separated files
//! any plotting tool can consume directly.

use std::io::Write;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    GammaVsE,
    Ids,
    Decay,
    DimVsE,
}

impl PlotKind {
    fn columns(&self) -> &'static [&'static str] {
        match self {
            PlotKind::GammaVsE => &["energy", "sum_gamma", "band"],
            PlotKind::Ids => &["energy", "f_hat", "stderr"],
            PlotKind::Decay => &["L", "median", "q25", "q75"],
            PlotKind::DimVsE => &["energy", "dim"],
        }
    }

    fn name(&self) -> &'static str {
        match self {
            PlotKind::GammaVsE => "gamma_vs_E",
            PlotKind::Ids => "ids",
            PlotKind::Decay => "decay",
            PlotKind::DimVsE => "dim_vs_E",
        }
    }
}

/// A small numeric table with named columns.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Write the table as whitespace-separated plot data after checking its
/// schema against the plot kind.
pub fn emit_plot_data(table: &Table, kind: PlotKind, path: &Path) -> Result<(), CliError> {
    let want = kind.columns();
    if table.columns.len() != want.len()
        || table.columns.iter().zip(want).any(|(a, b)| a != b)
    {
        return Err(CliError::Config(format!(
            "table schema {:?} does not match plot kind '{}' ({:?})",
            table.columns,
            kind.name(),
            want
        )));
    }
    let mut out = std::fs::File::create(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    writeln!(out, "# plot: {}", kind.name()).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out, "# columns: {}", want.join(" ")).map_err(|e| CliError::Io(e.to_string()))?;
    for row in &table.rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", line.join(" ")).map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}
