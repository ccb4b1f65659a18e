//! Time-stamped operational data and its delimited-text file form.
//!
//! Header: `t,q_1..q_n,dq_1..dq_n,ddq_1..ddq_n[,meas_1..meas_n][,power]`.
//! The measurement block (joint torque or motor current) and the total
//! power column are optional; all other columns are required and must
//! appear in this order. Values are written with shortest round-trip
//! precision.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kinematics::JointState;

#[derive(Debug, Clone, PartialEq)]
pub struct OperationalDataset {
    /// Seconds, strictly increasing.
    pub t: Vec<f64>,
    /// Samples by joints.
    pub q: DMatrix<f64>,
    pub dq: DMatrix<f64>,
    pub ddq: DMatrix<f64>,
    /// Joint torque or motor current, samples by joints.
    pub meas: Option<DMatrix<f64>>,
    /// Total electrical power, W.
    pub power: Option<Vec<f64>>,
}

impl OperationalDataset {
    pub fn new(
        t: Vec<f64>,
        q: DMatrix<f64>,
        dq: DMatrix<f64>,
        ddq: DMatrix<f64>,
        meas: Option<DMatrix<f64>>,
        power: Option<Vec<f64>>,
    ) -> Result<Self> {
        let data = OperationalDataset {
            t,
            q,
            dq,
            ddq,
            meas,
            power,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.t.len();
        let dof = self.q.ncols();
        let mut shapes = vec![("q", &self.q), ("dq", &self.dq), ("ddq", &self.ddq)];
        if let Some(m) = &self.meas {
            shapes.push(("meas", m));
        }
        for (name, m) in shapes {
            if m.nrows() != n || m.ncols() != dof {
                return Err(Error::schema(format!(
                    "channel block {name} is {}x{}, expected {n}x{dof}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if let Some(idx) = m.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "non-finite value in {name}_{} at sample {}",
                    idx / n + 1,
                    idx % n
                )));
            }
        }
        if let Some(p) = &self.power {
            if p.len() != n {
                return Err(Error::schema(format!("power has {} samples, expected {n}", p.len())));
            }
            if let Some(k) = p.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("non-finite power at sample {k}")));
            }
        }
        if let Some(k) = self.t.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite timestamp at sample {k}")));
        }
        if let Some(k) = self.t.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "timestamps must be strictly increasing: sample {} (t = {}) follows t = {}",
                k + 1,
                self.t[k + 1],
                self.t[k]
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn dof(&self) -> usize {
        self.q.ncols()
    }

    pub fn state(&self, k: usize) -> JointState {
        JointState {
            q: self.q.row(k).iter().copied().collect(),
            dq: self.dq.row(k).iter().copied().collect(),
            ddq: self.ddq.row(k).iter().copied().collect(),
        }
    }

    /// Checks the joint channel width against an expected joint count and
    /// names the first offending channel.
    pub fn check_dof(&self, dof: usize) -> Result<()> {
        let have = self.dof();
        if have == dof {
            return Ok(());
        }
        let channel = if have < dof {
            format!("channel q_{} is missing", have + 1)
        } else {
            format!("channel q_{} is unexpected", dof + 1)
        };
        Err(Error::schema(format!(
            "{channel}: dataset has {have} joint channels, robot has {dof} actuated joints"
        )))
    }

    /// Reorders samples, timestamps included. The result is no longer
    /// time-ordered; fitting and evaluation sort by timestamp where order
    /// matters, so their results do not depend on row order.
    pub fn permuted_rows(&self, order: &[usize]) -> Self {
        let pick = |m: &DMatrix<f64>| DMatrix::from_fn(order.len(), m.ncols(), |r, c| m[(order[r], c)]);
        OperationalDataset {
            t: order.iter().map(|&k| self.t[k]).collect(),
            q: pick(&self.q),
            dq: pick(&self.dq),
            ddq: pick(&self.ddq),
            meas: self.meas.as_ref().map(pick),
            power: self.power.as_ref().map(|p| order.iter().map(|&k| p[k]).collect()),
        }
    }

    /// Contiguous sample range.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        let rows = |m: &DMatrix<f64>| m.rows(range.start, range.len()).into_owned();
        OperationalDataset {
            t: self.t[range.clone()].to_vec(),
            q: rows(&self.q),
            dq: rows(&self.dq),
            ddq: rows(&self.ddq),
            meas: self.meas.as_ref().map(rows),
            power: self.power.as_ref().map(|p| p[range.clone()].to_vec()),
        }
    }
}

fn header(dof: usize, meas: bool, power: bool) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    let mut blocks = vec!["q", "dq", "ddq"];
    if meas {
        blocks.push("meas");
    }
    for b in blocks {
        h.extend((1..=dof).map(|j| format!("{b}_{j}")));
    }
    if power {
        h.push("power".into());
    }
    h
}

/// Works out the joint count and optional blocks from a header and checks
/// the column order.
fn read_header(cols: &[String]) -> std::result::Result<(usize, bool, bool), String> {
    if cols.first().map(String::as_str) != Some("t") {
        return Err("first column must be `t`".into());
    }
    let dof = cols.iter().filter(|c| c.starts_with("q_")).count();
    if dof == 0 {
        return Err("no joint position columns (q_1, q_2, ...)".into());
    }
    let meas = cols.iter().any(|c| c.starts_with("meas_"));
    let power = cols.last().map(String::as_str) == Some("power");
    let expected = header(dof, meas, power);
    for (i, want) in expected.iter().enumerate() {
        match cols.get(i) {
            Some(got) if got == want => {}
            Some(got) => return Err(format!("column {} is `{got}`, expected `{want}`", i + 1)),
            None => return Err(format!("missing column `{want}`")),
        }
    }
    if cols.len() > expected.len() {
        return Err(format!("unexpected column `{}`", cols[expected.len()]));
    }
    Ok((dof, meas, power))
}

/// Reads a dataset file and validates it against the robot's joint count.
pub fn load_dataset(path: impl AsRef<Path>, dof: usize) -> Result<OperationalDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, path, Some(dof))
}

/// Reads a dataset, taking the joint count from the header.
pub fn load_dataset_any(path: impl AsRef<Path>) -> Result<OperationalDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, path, None)
}

pub fn read_dataset(reader: impl std::io::Read, origin: &Path, dof: Option<usize>) -> Result<OperationalDataset> {
    let parse_err = |message: String| Error::Parse {
        path: origin.to_path_buf(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let cols: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let (width, has_meas, has_power) = read_header(&cols).map_err(|m| parse_err(format!("header: {m}")))?;
    if let Some(dof) = dof {
        if width != dof {
            let channel = if width < dof {
                format!("q_{}", width + 1)
            } else {
                format!("q_{}", dof + 1)
            };
            return Err(Error::schema(format!(
                "{}: header declares {width} joints, expected {dof} (offending channel {channel})",
                origin.display()
            )));
        }
    }

    let ncols = cols.len();
    let mut t = Vec::new();
    let mut blocks: Vec<Vec<f64>> = vec![Vec::new(); if has_meas { 4 } else { 3 }];
    let mut power = Vec::new();
    for (row_idx, record) in rdr.records().enumerate() {
        let row = row_idx + 1;
        let record = record.map_err(|e| parse_err(format!("data row {row}: {e}")))?;
        if record.len() != ncols {
            return Err(parse_err(format!(
                "data row {row}: {} fields, header declares {ncols}",
                record.len()
            )));
        }
        let mut values = Vec::with_capacity(ncols);
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(format!("data row {row}, column `{}`: cannot parse {field:?}", cols[c])))?;
            if !v.is_finite() {
                return Err(parse_err(format!("data row {row}, column `{}`: non-finite value", cols[c])));
            }
            values.push(v);
        }
        if let Some(&prev) = t.last() {
            if values[0] <= prev {
                return Err(parse_err(format!(
                    "data row {row}: timestamp {} does not increase (previous {prev})",
                    values[0]
                )));
            }
        }
        t.push(values[0]);
        for (b, block) in blocks.iter_mut().enumerate() {
            block.extend_from_slice(&values[1 + b * width..1 + (b + 1) * width]);
        }
        if has_power {
            power.push(values[ncols - 1]);
        }
    }
    let n = t.len();
    let mut mats = blocks
        .into_iter()
        .map(|b| DMatrix::from_row_slice(n, width, &b))
        .collect::<Vec<_>>()
        .into_iter();
    let q = mats.next().unwrap();
    let dq = mats.next().unwrap();
    let ddq = mats.next().unwrap();
    let meas = mats.next();
    OperationalDataset::new(t, q, dq, ddq, meas, has_power.then_some(power))
}

pub fn write_dataset(data: &OperationalDataset, writer: impl std::io::Write) -> Result<()> {
    let to_err = |e: csv::Error| Error::Numerical(format!("dataset write failed: {e}"));
    let dof = data.dof();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header(dof, data.meas.is_some(), data.power.is_some()))
        .map_err(to_err)?;
    let mut record = Vec::new();
    for k in 0..data.len() {
        record.clear();
        record.push(data.t[k].to_string());
        let mut blocks = vec![&data.q, &data.dq, &data.ddq];
        if let Some(m) = &data.meas {
            blocks.push(m);
        }
        for m in blocks {
            record.extend(m.row(k).iter().map(|v| v.to_string()));
        }
        if let Some(p) = &data.power {
            record.push(p[k].to_string());
        }
        w.write_record(&record).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::Numerical(format!("dataset write failed: {e}")))?;
    Ok(())
}

pub fn save_dataset(data: &OperationalDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_dataset(data, &mut buf)?;
    crate::datasets::write_atomic(path.as_ref(), &buf)
}
