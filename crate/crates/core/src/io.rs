//! Files: point sequences and trajectories as CSV, records as JSON lines.
//!
//! Sequence CSV has header `t,c1,c2,...` and the chart is declared in a
//! TOML sidecar next to it (`orbit.csv` pairs with `orbit.meta.toml`).
//! Numbers are written with the shortest representation that parses back
//! to the same `f64`, so a write/read cycle is bit-exact.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::escort::PointSequence;
use crate::flows::Trajectory;
use crate::geometry::{ModelId, ModelPoint};

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn parse_f64(s: &str, row: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("row {row}: `{s}` is not a number")))
}

/// Writes `t,c1,...,cd` rows.
pub fn write_sequence_csv<W: Write>(seq: &PointSequence, w: W) -> Result<()> {
    let dim = seq.model.dim();
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((1..=dim).map(|i| format!("c{i}")));
    out.write_record(&header).map_err(csv_err)?;
    for (t, p) in seq.times.iter().zip(&seq.points) {
        let mut row = vec![fmt_f64(*t)];
        row.extend(p.coords.iter().map(|c| fmt_f64(*c)));
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads rows written by [`write_sequence_csv`] as points of `model`.
pub fn read_sequence_csv<R: Read>(r: R, model: ModelId) -> Result<PointSequence> {
    let dim = model.dim();
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let want: Vec<String> = std::iter::once("t".to_string()).chain((1..=dim).map(|i| format!("c{i}"))).collect();
    if header.iter().map(str::trim).ne(want.iter().map(String::as_str)) {
        return Err(Error::Parse(format!(
            "expected header `{}` for {model}, found `{}`",
            want.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut times = Vec::new();
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = i + 1;
        let vals: Vec<f64> = rec.iter().map(|s| parse_f64(s, row)).collect::<Result<_>>()?;
        times.push(vals[0]);
        let p = ModelPoint::new(model, vals[1..].to_vec())
            .map_err(|e| Error::Parse(format!("row {row}: {e}")))?;
        points.push(p);
    }
    PointSequence::new(model, points, times)
}

/// Chart declaration stored beside a sequence CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub model: ModelId,
    pub rows: usize,
}

/// `orbit.csv` ↦ `orbit.meta.toml`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.toml")
}

/// Writes `bytes` to a temporary file in the target directory, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

/// Writes the CSV and its sidecar.
pub fn save_sequence(path: &Path, seq: &PointSequence) -> Result<()> {
    let mut buf = Vec::new();
    write_sequence_csv(seq, &mut buf)?;
    write_atomic(path, &buf)?;
    let meta = Sidecar { model: seq.model, rows: seq.points.len() };
    let text = toml::to_string(&meta).map_err(|e| Error::Parse(e.to_string()))?;
    write_atomic(&sidecar_path(path), text.as_bytes())
}

/// Reads a CSV whose chart is given by its sidecar.
pub fn load_sequence(path: &Path) -> Result<PointSequence> {
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side)
        .map_err(|e| Error::Io(format!("{}: {e}", side.display())))?;
    let meta: Sidecar = toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", side.display())))?;
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let seq = read_sequence_csv(file, meta.model)?;
    if seq.points.len() != meta.rows {
        return Err(Error::Parse(format!(
            "{} declares {} rows, found {}",
            side.display(),
            meta.rows,
            seq.points.len()
        )));
    }
    Ok(seq)
}

/// Writes `t,c1,c2,v1,v2` rows.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "c1", "c2", "v1", "v2"]).map_err(csv_err)?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let row = [
            *t,
            s.position.coords[0],
            s.position.coords[1],
            s.velocity.components[0],
            s.velocity.components[1],
        ];
        out.write_record(row.iter().map(|x| fmt_f64(*x))).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Rows of a trajectory CSV: `(t, position, velocity)`.
pub fn read_trajectory_csv<R: Read>(r: R) -> Result<Vec<(f64, [f64; 2], [f64; 2])>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().map(str::trim).ne(["t", "c1", "c2", "v1", "v2"]) {
        return Err(Error::Parse("expected header `t,c1,c2,v1,v2`".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let v: Vec<f64> = rec.iter().map(|s| parse_f64(s, i + 1)).collect::<Result<_>>()?;
        rows.push((v[0], [v[1], v[2]], [v[3], v[4]]));
    }
    Ok(rows)
}

/// One JSON object with keys in sorted order, no trailing newline.
pub fn to_json_line<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| Error::Parse(e.to_string()))
}

/// Writes one sorted-key object per line.
pub fn write_jsonl<T: Serialize, W: Write>(records: &[T], mut w: W) -> Result<()> {
    for r in records {
        writeln!(w, "{}", to_json_line(r)?)?;
    }
    Ok(())
}

/// Parses every nonblank line as a JSON object.
pub fn read_jsonl<T: for<'de> Deserialize<'de>, R: Read>(mut r: R) -> Result<Vec<T>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let pts = [(0.1, 1e-300), (1.0 / 3.0, 7.5e300), (-2.5, 0.123_456_789_012_345_68)];
        let points: Vec<ModelPoint> = pts.iter().map(|&(x, y)| ModelPoint::planar(ModelId::UpperHalfPlane, x, y).unwrap()).collect();
        let seq = PointSequence::new(ModelId::UpperHalfPlane, points, vec![0.0, 0.5, 1e-9 + 0.5]).unwrap();
        let mut buf = Vec::new();
        write_sequence_csv(&seq, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,c1,c2\n"));
        let back = read_sequence_csv(buf.as_slice(), ModelId::UpperHalfPlane).unwrap();
        assert_eq!(back, seq);
    }

    #[test]
    fn header_must_match_the_model() {
        let text = "t,c1\n0,1\n";
        assert!(matches!(read_sequence_csv(text.as_bytes(), ModelId::PoincareDisk), Err(Error::Parse(_))));
        let text = "t,c1,c2\n0,0.5,x\n";
        assert!(matches!(read_sequence_csv(text.as_bytes(), ModelId::PoincareDisk), Err(Error::Parse(_))));
        let text = "t,c1,c2\n0,1.5,0\n";
        assert!(matches!(read_sequence_csv(text.as_bytes(), ModelId::PoincareDisk), Err(Error::Parse(_))));
    }

    #[test]
    fn sidecar_declares_the_chart() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("orbit.csv");
        let seq = PointSequence::from_points(
            ModelId::Euclidean(3),
            vec![ModelPoint::new(ModelId::Euclidean(3), vec![1.0, 2.0, 3.0]).unwrap()],
        )
        .unwrap();
        save_sequence(&path, &seq).unwrap();
        assert!(dir.path().join("orbit.meta.toml").exists());
        assert_eq!(load_sequence(&path).unwrap(), seq);
    }

    #[test]
    fn json_lines_sort_keys() {
        #[derive(Serialize)]
        struct R {
            zeta: u8,
            alpha: u8,
        }
        let mut buf = Vec::new();
        write_jsonl(&[R { zeta: 1, alpha: 2 }], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "{\"alpha\":2,\"zeta\":1}\n");
    }
}
