use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::pde::LossReport;

pub const METRICS_HEADER: &str = "iteration,total,ic,bc,physics,operator,lr,wall_seconds";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsRecord {
    pub iteration: u64,
    pub total_loss: f64,
    pub ic_loss: f64,
    pub bc_loss: f64,
    pub physics_loss: f64,
    pub operator_loss: f64,
    pub lr: f64,
    pub wall_seconds: f64,
}

impl MetricsRecord {
    pub fn new(iteration: u64, loss: &LossReport, lr: f64, wall_seconds: f64) -> Self {
        Self {
            iteration,
            total_loss: loss.total,
            ic_loss: loss.ic,
            bc_loss: loss.bc,
            physics_loss: loss.physics,
            operator_loss: loss.operator(),
            lr,
            wall_seconds,
        }
    }
}

pub fn write_metrics_csv<W: Write>(records: &[MetricsRecord], mut w: W) -> Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.iteration, r.total_loss, r.ic_loss, r.bc_loss, r.physics_loss, r.operator_loss, r.lr, r.wall_seconds
        )?;
    }
    Ok(())
}

pub fn save_metrics(records: &[MetricsRecord], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_metrics_csv(records, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn read_metrics_csv<R: BufRead>(r: R, path: &Path) -> Result<Vec<MetricsRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != METRICS_HEADER {
                return Err(Error::Format(format!("{}: unexpected metrics header", path.display())));
            }
            continue;
        }
        let bad = |msg: &str| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: msg.to_string(),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(bad("expected 8 fields"));
        }
        let num = |k: usize| f[k].parse::<f64>().map_err(|_| bad("bad number"));
        out.push(MetricsRecord {
            iteration: f[0].parse().map_err(|_| bad("bad iteration"))?,
            total_loss: num(1)?,
            ic_loss: num(2)?,
            bc_loss: num(3)?,
            physics_loss: num(4)?,
            operator_loss: num(5)?,
            lr: num(6)?,
            wall_seconds: num(7)?,
        });
    }
    Ok(out)
}
