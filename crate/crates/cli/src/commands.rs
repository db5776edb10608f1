//! One-shot commands: the experiment harness and keymap validation.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use afeis_core::keymap::Keymap;
use afeis_core::stream_sim::{run_experiment, write_csv, ExperimentRow, ExperimentSpec};

use crate::Failure;

pub struct ExperimentOverrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
}

pub fn load_spec(path: &Path, o: &ExperimentOverrides) -> Result<ExperimentSpec, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    let mut spec = ExperimentSpec::parse(&text).map_err(Failure::config)?;
    if o.seed.is_some() {
        spec.seed = o.seed;
    }
    if let Some(n) = o.trials {
        spec.trials = n;
    }
    Ok(spec)
}

/// Runs the experiment and writes its CSV to `out`.
pub fn experiment<W: Write>(spec: &ExperimentSpec, out: W) -> Result<Vec<ExperimentRow>, Failure> {
    let rows = run_experiment(spec).map_err(Failure::config)?;
    write_csv(&rows, out).map_err(Failure::invalid)?;
    Ok(rows)
}

pub fn summary(rows: &[ExperimentRow]) -> String {
    let mut s = String::new();
    for r in rows {
        let _ = writeln!(
            s,
            "{:<4} fn={:<3} param={:<3} {:>6.1}%  wrong={} missed={} parse={} effect={}",
            r.task,
            r.empty_fn,
            r.empty_param,
            100.0 * r.success_rate(),
            r.wrong_accept,
            r.missed_accept,
            r.parse_error,
            r.wrong_effect
        );
    }
    s
}

/// Checks a keymap file. The report lists warnings; errors come back as a
/// failure with one problem per line.
pub fn validate_keymap(path: &Path) -> Result<String, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    let index = path
        .file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let (keymap, warnings) = Keymap::parse_with_warnings(&text, index).map_err(|errs| {
        let mut msg = format!("{}: invalid keymap", path.display());
        for e in &errs.0 {
            let _ = write!(msg, "\n  {e}");
        }
        Failure::invalid(msg)
    })?;
    let mut s = String::new();
    for w in &warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    let _ = writeln!(
        s,
        "{}: ok ({} fn, {} param, {} aliases)",
        path.display(),
        keymap.fn_bindings().len(),
        keymap.param_bindings().len(),
        keymap.aliases().len()
    );
    Ok(s)
}
