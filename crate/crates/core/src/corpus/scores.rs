use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Manifest, SampleId};
use crate::error::{Error, Result};
use crate::operators::OperatorId;

/// Samples × operators matrix of real scores; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    sample_ids: Vec<SampleId>,
    operator_ids: Vec<OperatorId>,
    cells: Vec<Option<f64>>,
    row_index: HashMap<SampleId, usize>,
}

impl ScoreTable {
    /// `cells` is row-major: `cells[row * operators + col]`.
    pub fn new(
        sample_ids: Vec<SampleId>,
        operator_ids: Vec<OperatorId>,
        cells: Vec<Option<f64>>,
    ) -> Result<Self> {
        let expected = sample_ids.len() * operator_ids.len();
        if cells.len() != expected {
            return Err(Error::Shape {
                expected,
                actual: cells.len(),
            });
        }
        if let Some(bad) = cells.iter().flatten().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite score {bad}")));
        }
        let mut seen = HashSet::new();
        for op in &operator_ids {
            if !seen.insert(op.as_str()) {
                return Err(Error::invalid(format!("duplicate operator column `{op}`")));
            }
        }
        let mut row_index = HashMap::with_capacity(sample_ids.len());
        for (i, id) in sample_ids.iter().enumerate() {
            if row_index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId(id.to_string()));
            }
        }
        Ok(ScoreTable {
            sample_ids,
            operator_ids,
            cells,
            row_index,
        })
    }

    /// Builds a table from per-operator columns, each aligned with `sample_ids`.
    pub fn from_columns(
        sample_ids: Vec<SampleId>,
        columns: Vec<(OperatorId, Vec<Option<f64>>)>,
    ) -> Result<Self> {
        let n = sample_ids.len();
        let m = columns.len();
        let mut cells = vec![None; n * m];
        let mut ops = Vec::with_capacity(m);
        for (j, (op, col)) in columns.into_iter().enumerate() {
            if col.len() != n {
                return Err(Error::Shape {
                    expected: n,
                    actual: col.len(),
                });
            }
            for (i, v) in col.into_iter().enumerate() {
                cells[i * m + j] = v;
            }
            ops.push(op);
        }
        ScoreTable::new(sample_ids, ops, cells)
    }

    pub fn sample_ids(&self) -> &[SampleId] {
        &self.sample_ids
    }

    pub fn operator_ids(&self) -> &[OperatorId] {
        &self.operator_ids
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn n_operators(&self) -> usize {
        self.operator_ids.len()
    }

    pub fn operator_index(&self, op: &str) -> Option<usize> {
        self.operator_ids.iter().position(|o| o.as_str() == op)
    }

    pub fn row_of(&self, id: &str) -> Option<usize> {
        self.row_index.get(id).copied()
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row * self.operator_ids.len() + col]
    }

    pub fn value(&self, id: &str, op: &str) -> Option<f64> {
        let row = self.row_of(id)?;
        let col = self.operator_index(op)?;
        self.get(row, col)
    }

    pub fn column(&self, op: &str) -> Option<Vec<Option<f64>>> {
        let col = self.operator_index(op)?;
        Some((0..self.n_samples()).map(|r| self.get(r, col)).collect())
    }

    /// Column keyed by sample id; missing cells are kept as `None`.
    pub fn column_map(&self, op: &str) -> Option<BTreeMap<SampleId, Option<f64>>> {
        let col = self.column(op)?;
        Some(self.sample_ids.iter().cloned().zip(col).collect())
    }

    /// Restricts the table to the given rows (in the given order).
    pub fn select_rows(&self, ids: &[SampleId]) -> Result<ScoreTable> {
        let m = self.n_operators();
        let mut cells = Vec::with_capacity(ids.len() * m);
        for id in ids {
            let row = self
                .row_of(id.as_str())
                .ok_or_else(|| Error::UnknownSample(id.to_string()))?;
            cells.extend_from_slice(&self.cells[row * m..(row + 1) * m]);
        }
        ScoreTable::new(ids.to_vec(), self.operator_ids.clone(), cells)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("sample_id");
        for op in &self.operator_ids {
            out.push(',');
            out.push_str(op.as_str());
        }
        out.push('\n');
        for (r, id) in self.sample_ids.iter().enumerate() {
            out.push_str(id.as_str());
            for c in 0..self.n_operators() {
                out.push(',');
                if let Some(v) = self.get(r, c) {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_csv_string().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Loads a score CSV and aligns its rows to manifest order.
///
/// Manifest samples without a row get an all-missing row.
pub fn load_score_table(path: impl AsRef<Path>, manifest: &Manifest) -> Result<ScoreTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    let mut records = reader.records();

    let header = match records.next() {
        Some(h) => h?,
        None => return Err(parse_err(path, 1, "missing header")),
    };
    if header.get(0).map(str::trim) != Some("sample_id") {
        return Err(parse_err(path, 1, "header must start with `sample_id`"));
    }
    let operators: Vec<OperatorId> = header
        .iter()
        .skip(1)
        .map(|h| OperatorId::new(h.trim()))
        .collect::<Result<_>>()?;
    let m = operators.len();

    let index: HashMap<&str, usize> = manifest
        .ids()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut cells = vec![None; manifest.len() * m];
    let mut filled = vec![false; manifest.len()];

    for (k, rec) in records.enumerate() {
        let line = k + 2;
        let rec = rec?;
        if rec.len() == 1 && rec.get(0).is_some_and(|s| s.trim().is_empty()) {
            continue;
        }
        if rec.len() != m + 1 {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, found {}", m + 1, rec.len()),
            ));
        }
        let sid = rec[0].trim();
        let row = *index
            .get(sid)
            .ok_or_else(|| Error::UnknownSample(sid.to_string()))?;
        if std::mem::replace(&mut filled[row], true) {
            return Err(Error::DuplicateId(sid.to_string()));
        }
        for (c, raw) in rec.iter().skip(1).enumerate() {
            let raw = raw.trim();
            if raw.is_empty() {
                continue;
            }
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(path, line, format!("non-numeric cell `{raw}`")))?;
            if !v.is_finite() {
                return Err(parse_err(path, line, format!("non-finite cell `{raw}`")));
            }
            cells[row * m + c] = Some(v);
        }
    }
    ScoreTable::new(manifest.ids().cloned().collect(), operators, cells)
}

/// Per-sample detector confidences; samples without a record have none.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionSet {
    by_id: HashMap<SampleId, Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct DetectionLine {
    id: SampleId,
    confidences: Vec<f64>,
}

impl DetectionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: SampleId, confidences: Vec<f64>) -> Result<()> {
        if let Some(c) = confidences.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::invalid(format!(
                "confidence {c} for `{id}` outside [0, 1]"
            )));
        }
        self.by_id.insert(id, confidences);
        Ok(())
    }

    pub fn get(&self, id: &str) -> &[f64] {
        self.by_id.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    /// Writes records in id order.
    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut ids: Vec<&SampleId> = self.by_id.keys().collect();
        ids.sort();
        let mut out = Vec::new();
        for id in ids {
            serde_json::to_writer(
                &mut out,
                &DetectionLine {
                    id: id.clone(),
                    confidences: self.by_id[id].clone(),
                },
            )?;
            out.push(b'\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

pub fn load_detections(path: impl AsRef<Path>) -> Result<DetectionSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut set = DetectionSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DetectionLine =
            serde_json::from_str(&line).map_err(|e| parse_err(path, idx + 1, e.to_string()))?;
        set.insert(rec.id, rec.confidences)
            .map_err(|e| parse_err(path, idx + 1, e.to_string()))?;
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SampleRecord;

    fn manifest(ids: &[&str]) -> Manifest {
        Manifest::new(
            ids.iter()
                .map(|i| SampleRecord::new(SampleId::new(*i).unwrap(), "", ""))
                .collect(),
        )
        .unwrap()
    }

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn single_cell_table() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.csv", "sample_id,clip\na,0.31\n");
        let t = load_score_table(&p, &manifest(&["a"])).unwrap();
        assert_eq!((t.n_samples(), t.n_operators()), (1, 1));
        assert_eq!(t.value("a", "clip"), Some(0.31));
    }

    #[test]
    fn blank_cell_is_missing_not_zero() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.csv", "sample_id,clip,icc\na,,0.5\n");
        let t = load_score_table(&p, &manifest(&["a"])).unwrap();
        assert_eq!(t.value("a", "clip"), None);
        assert_eq!(t.value("a", "icc"), Some(0.5));
    }

    #[test]
    fn unknown_row_id_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.csv", "sample_id,clip\nzz,0.1\n");
        let err = load_score_table(&p, &manifest(&["a"])).unwrap_err();
        assert!(matches!(err, Error::UnknownSample(ref s) if s == "zz"));
    }

    #[test]
    fn non_numeric_cell_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.csv", "sample_id,clip\na,high\n");
        assert!(matches!(
            load_score_table(&p, &manifest(&["a"])),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn missing_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let empty = write(&dir, "e.csv", "");
        assert!(load_score_table(&empty, &manifest(&["a"])).is_err());
        let bad = write(&dir, "b.csv", "a,0.3\n");
        assert!(load_score_table(&bad, &manifest(&["a"])).is_err());
    }

    #[test]
    fn rows_follow_manifest_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.csv", "sample_id,clip\nc,3\na,1\nb,2\n");
        let t = load_score_table(&p, &manifest(&["a", "b", "c", "d"])).unwrap();
        let ids: Vec<_> = t.sample_ids().iter().map(SampleId::as_str).collect();
        assert_eq!(ids, ["a", "b", "c", "d"]);
        assert_eq!(t.column("clip").unwrap(), vec![Some(1.0), Some(2.0), Some(3.0), None]);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let body = "sample_id,clip,icc\na,0.1,\nb,,-2.5\n";
        let p = write(&dir, "s.csv", body);
        let t = load_score_table(&p, &manifest(&["a", "b"])).unwrap();
        assert_eq!(t.to_csv_string(), body);
    }

    #[test]
    fn detections_parse_and_default_empty() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "d.jsonl", "{\"id\":\"a\",\"confidences\":[0.3,0.05]}\n");
        let d = load_detections(&p).unwrap();
        assert_eq!(d.get("a"), &[0.3, 0.05]);
        assert!(d.get("b").is_empty());
    }

    #[test]
    fn detection_out_of_range_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "d.jsonl", "{\"id\":\"a\",\"confidences\":[1.2]}\n");
        assert!(matches!(load_detections(&p), Err(Error::Parse { line: 1, .. })));
        let p = write(&dir, "d2.jsonl", "{\"id\":\"a\"\n");
        assert!(load_detections(&p).is_err());
    }
}
