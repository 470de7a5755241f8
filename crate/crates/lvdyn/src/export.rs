//! CSV exports for plotting and tabulation.

use std::fs;
use std::path::{Path, PathBuf};

use lvdyn_core::dynamics::PhaseGeometry;
use lvdyn_core::params::ContinuousParams;

use crate::error::{CliError, CliResult, Stage};
use crate::report::{round_significant, Layers, SobolSummary};

/// A sampled path through the state plane; `t` is time or step index.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTrajectory {
    pub name: String,
    pub t: Vec<f64>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

const PHASE_README: &str = "\
# Phase-plane data

All values are in the units of the input series.

- `nullclines.csv`: `nullcline,constant,coef_x,coef_y,x,y`. Each nullcline is the
  line `constant + coef_x*x + coef_y*y = 0`; `x,y` are points on it sampled across
  the grid's x range. `dx` is the nullcline of the first species, `dy` of the second.
- `signgrid.csv`: `x,y,sign_x,sign_y,region`. Signs of dx/dt and dy/dt on the grid;
  region is I (-,+), II (-,-), III (+,-), IV (+,+), empty on a nullcline.
- `vectorfield.csv`: `x,y,dxdt,dydt` on the same grid.
- `trajectory_<name>.csv`: `t,x,y`. `observed` and `map` use years since the first
  observation, `ode` uses model time.
";

fn fmt(v: f64) -> String {
    round_significant(v).to_string()
}

fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> CliResult<PathBuf> {
    let path = dir.join(name);
    let io = |e: std::io::Error| CliError::io(Stage::Export, &path, e);
    let mut w = csv::Writer::from_path(&path).map_err(|e| io(e.into()))?;
    w.write_record(header).map_err(|e| io(e.into()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(Stage::Export, dir, e))
}

/// Write the phase-plane CSVs and their README; returns the written paths.
pub fn export_phase_data(pg: &PhaseGeometry, trajectories: &[NamedTrajectory], dir: &Path) -> CliResult<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();

    let xs: Vec<f64> = (0..pg.grid_n)
        .map(|i| pg.bbox.x_min + i as f64 * (pg.bbox.x_max - pg.bbox.x_min) / (pg.grid_n - 1) as f64)
        .collect();
    let mut rows = Vec::new();
    for (name, line) in [("dx", pg.nullcline_x), ("dy", pg.nullcline_y)] {
        for &x in &xs {
            if let Some(y) = line.y_at(x) {
                rows.push(vec![
                    name.to_owned(),
                    fmt(line.constant),
                    fmt(line.coef_x),
                    fmt(line.coef_y),
                    fmt(x),
                    fmt(y),
                ]);
            }
        }
    }
    written.push(write_csv(dir, "nullclines.csv", &["nullcline", "constant", "coef_x", "coef_y", "x", "y"], rows)?);

    let signs = pg.grid.iter().map(|s| {
        let region = s.region().map(|r| format!("{r:?}")).unwrap_or_default();
        vec![fmt(s.x), fmt(s.y), s.sign_x.to_string(), s.sign_y.to_string(), region]
    });
    written.push(write_csv(dir, "signgrid.csv", &["x", "y", "sign_x", "sign_y", "region"], signs)?);

    let field = pg.grid.iter().map(|s| vec![fmt(s.x), fmt(s.y), fmt(s.dxdt), fmt(s.dydt)]);
    written.push(write_csv(dir, "vectorfield.csv", &["x", "y", "dxdt", "dydt"], field)?);

    for t in trajectories {
        let rows = (0..t.t.len()).map(|i| vec![fmt(t.t[i]), fmt(t.xs[i]), fmt(t.ys[i])]);
        written.push(write_csv(dir, &format!("trajectory_{}.csv", t.name), &["t", "x", "y"], rows)?);
    }

    let readme = dir.join("README.md");
    fs::write(&readme, PHASE_README).map_err(|e| CliError::io(Stage::Export, &readme, e))?;
    written.push(readme);
    Ok(written)
}

pub fn export_sobol_csv(s: &SobolSummary, dir: &Path) -> CliResult<PathBuf> {
    ensure_dir(dir)?;
    let mut rows = Vec::new();
    for o in &s.outputs {
        for (i, p) in s.parameters.iter().enumerate() {
            rows.push(vec![
                p.clone(),
                o.output.clone(),
                fmt(o.first_order[i]),
                fmt(o.total_order[i]),
                fmt(o.first_order_clipped[i]),
                fmt(o.total_order_clipped[i]),
            ]);
        }
    }
    write_csv(dir, "sobol.csv", &["parameter", "output", "S_i", "S_Ti", "S_i_clipped", "S_Ti_clipped"], rows)
}

pub fn export_layers_csv(l: &Layers, dir: &Path) -> CliResult<PathBuf> {
    ensure_dir(dir)?;
    let r = &l.regression;
    let d = &l.discrete;
    let mut rows: Vec<Vec<String>> = [
        ("regression", "intercept1", r.intercept1),
        ("regression", "self1", r.self1),
        ("regression", "cross1", r.cross1),
        ("regression", "intercept2", r.intercept2),
        ("regression", "cross2", r.cross2),
        ("regression", "self2", r.self2),
        ("discrete", "alpha1", d.alpha1),
        ("discrete", "self1", d.self1),
        ("discrete", "cross1", d.cross1),
        ("discrete", "alpha2", d.alpha2),
        ("discrete", "cross2", d.cross2),
        ("discrete", "self2", d.self2),
    ]
    .into_iter()
    .map(|(layer, name, v)| vec![layer.to_owned(), name.to_owned(), fmt(v)])
    .collect();
    for (name, v) in ContinuousParams::NAMES.iter().zip(l.continuous.to_array()) {
        rows.push(vec!["continuous".to_owned(), (*name).to_owned(), fmt(v)]);
    }
    write_csv(dir, "layers.csv", &["layer", "parameter", "value"], rows)
}
