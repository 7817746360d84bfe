use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Mat;

/// An input function seen through fixed sensors.
///
/// For scalar fields `sensors` is `m x 1` and `values` holds `u(x_j)`.
/// For boundary curves `sensors` is `m x 2` and the branch input is the
/// interleaved coordinates `[x_1, y_1, x_2, y_2, ...]` (length `2m`).
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub id: u64,
    pub sensors: Mat,
    pub values: Vec<f64>,
}

impl FieldSample {
    pub fn new(id: u64, sensors: &[f64], values: Vec<f64>) -> Result<Self> {
        if sensors.len() != values.len() {
            return Err(Error::shape(format!(
                "{} sensors but {} values",
                sensors.len(),
                values.len()
            )));
        }
        Ok(Self {
            id,
            sensors: Mat::column(sensors),
            values,
        })
    }

    pub fn curve(id: u64, points: &Mat) -> Result<Self> {
        if points.cols() != 2 {
            return Err(Error::shape("curve points must be m x 2"));
        }
        Ok(Self {
            id,
            sensors: points.clone(),
            values: points.as_slice().to_vec(),
        })
    }

    pub fn m(&self) -> usize {
        self.sensors.rows()
    }

    /// Sensor coordinates for scalar fields.
    pub fn grid(&self) -> &[f64] {
        self.sensors.as_slice()
    }

    pub fn branch_input(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryPoint {
    pub y: Vec<f64>,
}

impl QueryPoint {
    pub fn new(y: &[f64]) -> Self {
        Self { y: y.to_vec() }
    }
}

/// Borrowed view of one dataset row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Row<'a> {
    pub sample_id: u64,
    pub u: &'a [f64],
    pub y: &'a [f64],
    pub target: Option<f64>,
}

/// Dense rows gathered from a dataset, ready for a forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Rows {
    pub u: Mat,
    pub y: Mat,
    pub target: Option<Vec<f64>>,
}

impl Rows {
    pub fn len(&self) -> usize {
        self.y.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.y.rows() == 0
    }

    pub fn targets(&self) -> Result<&[f64]> {
        self.target.as_deref().ok_or(Error::MissingTarget { row: 0 })
    }
}

/// `N` input functions, each paired with `P` query rows.
///
/// Each input is stored once; row `i` belongs to sample `i / P`, which is
/// exactly the block-repeated layout `(N·P, m), (N·P, d), (N·P, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorDataset {
    ids: Vec<u64>,
    inputs: Mat,
    p: usize,
    y: Mat,
    targets: Option<Vec<f64>>,
}

impl OperatorDataset {
    pub fn new(ids: Vec<u64>, inputs: Mat, p: usize, y: Mat, targets: Option<Vec<f64>>) -> Result<Self> {
        let n = ids.len();
        if inputs.rows() != n {
            return Err(Error::shape(format!("{n} ids but {} inputs", inputs.rows())));
        }
        if p == 0 && n > 0 {
            return Err(Error::shape("P must be at least 1"));
        }
        if y.rows() != n * p {
            return Err(Error::shape(format!("expected {} query rows, got {}", n * p, y.rows())));
        }
        if let Some(t) = &targets {
            if t.len() != y.rows() {
                return Err(Error::shape(format!("{} targets for {} rows", t.len(), y.rows())));
            }
        }
        if ids.iter().collect::<BTreeSet<_>>().len() != n {
            return Err(Error::invalid("sample ids must be distinct"));
        }
        Ok(Self {
            ids,
            inputs,
            p,
            y,
            targets,
        })
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn m(&self) -> usize {
        self.inputs.cols()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> usize {
        self.y.cols()
    }

    pub fn len(&self) -> usize {
        self.y.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.y.rows() == 0
    }

    pub fn has_targets(&self) -> bool {
        self.targets.is_some()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn inputs(&self) -> &Mat {
        &self.inputs
    }

    pub fn queries(&self) -> &Mat {
        &self.y
    }

    pub fn targets(&self) -> Option<&[f64]> {
        self.targets.as_deref()
    }

    pub fn sample_of_row(&self, i: usize) -> usize {
        i / self.p
    }

    pub fn row(&self, i: usize) -> Row<'_> {
        let s = self.sample_of_row(i);
        Row {
            sample_id: self.ids[s],
            u: self.inputs.row_slice(s),
            y: self.y.row_slice(i),
            target: self.targets.as_ref().map(|t| t[i]),
        }
    }

    /// Rows of sample `s` as a contiguous range.
    pub fn sample_rows(&self, s: usize) -> std::ops::Range<usize> {
        s * self.p..(s + 1) * self.p
    }

    /// The `(N·P) x m` branch tensor with each input repeated `P` times.
    pub fn branch_matrix(&self) -> Mat {
        let idx: Vec<usize> = (0..self.len()).collect();
        self.gather(&idx).u
    }

    pub fn gather(&self, rows: &[usize]) -> Rows {
        let (m, d) = (self.m(), self.d());
        let mut u = Vec::with_capacity(rows.len() * m);
        let mut y = Vec::with_capacity(rows.len() * d);
        for &i in rows {
            u.extend_from_slice(self.inputs.row_slice(self.sample_of_row(i)));
            y.extend_from_slice(self.y.row_slice(i));
        }
        Rows {
            u: Mat::from_vec(rows.len(), m, u),
            y: Mat::from_vec(rows.len(), d, y),
            target: self
                .targets
                .as_ref()
                .map(|t| rows.iter().map(|&i| t[i]).collect()),
        }
    }

    /// Collapses repeated rows back to one `(id, input)` pair per sample.
    pub fn distinct_inputs(&self) -> Vec<(u64, Vec<f64>)> {
        let mut out: Vec<(u64, Vec<f64>)> = Vec::new();
        for i in 0..self.len() {
            let r = self.row(i);
            if out.last().map(|(id, _)| *id) != Some(r.sample_id) {
                out.push((r.sample_id, r.u.to_vec()));
            }
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let has_t = u8::from(self.has_targets());
        writeln!(w, "{} {} {} {} {}", self.n(), self.m(), self.p, self.d(), has_t)?;
        let width = 1 + self.m() + self.d() + usize::from(has_t);
        let frame = u32::try_from(8 * width).map_err(|_| Error::Format("record too large".into()))?;
        let mut buf = Vec::with_capacity(4 + 8 * width);
        for i in 0..self.len() {
            let r = self.row(i);
            buf.clear();
            buf.extend_from_slice(&frame.to_le_bytes());
            buf.extend_from_slice(&(r.sample_id as f64).to_le_bytes());
            for v in r.u.iter().chain(r.y).chain(r.target.as_ref()) {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(mut r: R) -> Result<Self> {
        let mut header = String::new();
        r.read_line(&mut header)?;
        let fields: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Format(format!("bad dataset header `{}`", header.trim())))?;
        let [n, m, p, d, has_t] = fields[..] else {
            return Err(Error::Format(format!("bad dataset header `{}`", header.trim())));
        };
        if has_t > 1 {
            return Err(Error::Format("has_targets must be 0 or 1".into()));
        }
        let width = 1 + m + d + has_t;
        let mut ids = Vec::with_capacity(n);
        let mut inputs = Vec::with_capacity(n * m);
        let mut y = Vec::with_capacity(n * p * d);
        let mut targets = Vec::with_capacity(if has_t == 1 { n * p } else { 0 });
        let mut rec = vec![0u8; 8 * width];
        for i in 0..n * p {
            let mut len = [0u8; 4];
            r.read_exact(&mut len)?;
            if u32::from_le_bytes(len) as usize != 8 * width {
                return Err(Error::Format(format!("record {i} has the wrong length")));
            }
            r.read_exact(&mut rec)?;
            let vals: Vec<f64> = rec
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect();
            let (id, u) = (vals[0], &vals[1..1 + m]);
            if i % p == 0 {
                ids.push(id as u64);
                inputs.extend_from_slice(u);
            } else if id as u64 != *ids.last().expect("first row pushed")
                || u != &inputs[inputs.len() - m..]
            {
                return Err(Error::Format(format!("record {i} breaks the P-fold repetition")));
            }
            y.extend_from_slice(&vals[1 + m..1 + m + d]);
            if has_t == 1 {
                targets.push(vals[width - 1]);
            }
        }
        Self::new(
            ids,
            Mat::from_vec(n, m, inputs),
            p,
            Mat::from_vec(n * p, d, y),
            (has_t == 1).then_some(targets),
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }

    /// Lossless text export, 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut cols = vec!["sample_id".to_string()];
        cols.extend((0..self.m()).map(|j| format!("u{j}")));
        cols.extend((0..self.d()).map(|j| format!("y{j}")));
        if self.has_targets() {
            cols.push("target".into());
        }
        writeln!(w, "{}", cols.join(","))?;
        for i in 0..self.len() {
            let r = self.row(i);
            write!(w, "{}", r.sample_id)?;
            for v in r.u.iter().chain(r.y).chain(r.target.as_ref()) {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds the row layout from samples and their per-sample queries.
pub fn assemble_dataset(
    samples: &[FieldSample],
    queries: &[Vec<(QueryPoint, Option<f64>)>],
) -> Result<OperatorDataset> {
    if samples.len() != queries.len() {
        return Err(Error::shape(format!(
            "{} samples but {} query lists",
            samples.len(),
            queries.len()
        )));
    }
    let Some(first) = samples.first() else {
        return OperatorDataset::new(vec![], Mat::zeros(0, 0), 1, Mat::zeros(0, 0), None);
    };
    let m = first.values.len();
    let p = queries[0].len();
    let d = queries[0].first().map_or(0, |(q, _)| q.y.len());
    let has_t = queries[0].first().is_some_and(|(_, t)| t.is_some());
    let mut inputs = Vec::with_capacity(samples.len() * m);
    let mut y = Vec::with_capacity(samples.len() * p * d);
    let mut targets = Vec::new();
    for (i, (s, qs)) in samples.iter().zip(queries).enumerate() {
        if s.values.len() != m {
            return Err(Error::shape(format!("sample {i} has {} values, expected {m}", s.values.len())));
        }
        if qs.len() != p {
            return Err(Error::shape(format!("sample {i} has {} queries, expected P = {p}", qs.len())));
        }
        inputs.extend_from_slice(&s.values);
        for (q, t) in qs {
            if q.y.len() != d {
                return Err(Error::shape(format!("sample {i} has a {}-d query", q.y.len())));
            }
            if t.is_some() != has_t {
                return Err(Error::invalid("targets must be present on all rows or none"));
            }
            y.extend_from_slice(&q.y);
            targets.extend(t);
        }
    }
    OperatorDataset::new(
        samples.iter().map(|s| s.id).collect(),
        Mat::from_vec(samples.len(), m, inputs),
        p,
        Mat::from_vec(samples.len() * p, d, y),
        has_t.then_some(targets),
    )
}

/// `‖pred − truth‖₂ / ‖truth‖₂`.
pub fn relative_l2(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::shape(format!(
            "relative L2 needs equal non-empty lengths, got {} and {}",
            pred.len(),
            truth.len()
        )));
    }
    let den = truth.iter().map(|t| t * t).sum::<f64>().sqrt();
    if den == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let num = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(num / den)
}
