//! Reading curve files named on the command line.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use pyrokin::tga::{read_curve_file, TgaCurve};

use crate::failure::input_err;

/// Expands directories into their `*.csv` files, sorted by name.
pub fn expand_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "csv"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

pub fn load_curves(paths: &[PathBuf]) -> Result<Vec<TgaCurve>> {
    let files = expand_paths(paths)?;
    if files.is_empty() {
        return Err(input_err("no curve files given"));
    }
    let mut curves: Vec<TgaCurve> = files.iter().map(|f| load_one(f)).collect::<Result<_>>()?;
    curves.sort_by(|a, b| {
        a.spec.sample_id.cmp(&b.spec.sample_id).then(a.heating_rate.total_cmp(&b.heating_rate))
    });
    Ok(curves)
}

fn load_one(path: &Path) -> Result<TgaCurve> {
    read_curve_file(path).with_context(|| format!("loading {}", path.display()))
}

/// Curve id turned into something usable as a file name.
pub fn file_stem(curve_id: &str) -> String {
    curve_id
        .chars()
        .map(|c| match c {
            '@' => '_',
            c if c.is_ascii_alphanumeric() || c == '-' || c == '.' || c == '_' => c,
            _ => '-',
        })
        .collect()
}
