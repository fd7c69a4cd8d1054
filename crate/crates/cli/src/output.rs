use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use decaylab_core::curve::fmt17;
use serde_json::json;

use crate::run::Outcome;
use crate::spec::ExperimentSpec;
use crate::CliError;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

pub fn write_csv<W: Write>(outcome: &Outcome, mut w: W) -> std::io::Result<()> {
    let header: Vec<&str> = std::iter::once(outcome.x_label).chain(outcome.columns.iter().map(|(n, _)| n.as_str())).collect();
    writeln!(w, "{}", header.join(","))?;
    for (i, x) in outcome.x.iter().enumerate() {
        write!(w, "{}", fmt17(*x + 0.0))?;
        for (_, col) in &outcome.columns {
            // `+ 0.0` turns -0 into 0
            write!(w, ",{}", fmt17(col[i] + 0.0))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Writes `<name>.csv` and the `<name>.json` sidecar into the output
/// directory and returns both paths.
pub fn write_artifacts(spec: &ExperimentSpec, outcome: &Outcome) -> Result<(PathBuf, PathBuf), CliError> {
    fs::create_dir_all(&spec.out).map_err(io_err(&spec.out))?;
    let csv = spec.out.join(format!("{}.csv", spec.name));
    let sidecar = spec.out.join(format!("{}.json", spec.name));

    write_file(&csv, |w| write_csv(outcome, w))?;

    let columns: Vec<&str> = std::iter::once(outcome.x_label).chain(outcome.columns.iter().map(|(n, _)| n.as_str())).collect();
    let meta = json!({
        "experiment": spec.name,
        "version": env!("CARGO_PKG_VERSION"),
        "config": spec.config,
        "seed": spec.config.seed(),
        "csv": format!("{}.csv", spec.name),
        "columns": columns,
        "runs": outcome.runs,
        "fits": outcome.fits,
    });
    write_file(&sidecar, |w| {
        serde_json::to_writer_pretty(&mut *w, &meta)?;
        writeln!(w)
    })?;
    Ok((csv, sidecar))
}
