//! Readers and writers for MOTChallenge-style text files and the embedding sidecar.
//!
//! * detections: `frame,id,x,y,w,h,conf[,...]` (id ignored)
//! * ground truth: `frame,id,x,y,w,h,active,class,visibility` (inactive rows skipped)
//! * tracking output: `frame,track_id,x,y,w,h,-1,-1,-1,-1`, boxes at two decimals
//! * embeddings: CSV `frame,index,v1..vD`, or the binary container below
//!
//! Binary embedding layout, all little-endian:
//! `b"PMEB"`, `u32` version (1), `u32` dim, `u64` record count, then per record
//! `u32` frame, `u32` index, `dim` x `f64`.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::model_io::types::{BoundingBox, Detection, GroundTruthEntry, TrackBox, Trajectory};

const EMBEDDING_MAGIC: &[u8; 4] = b"PMEB";
const EMBEDDING_VERSION: u32 = 1;

/// Embedding vectors keyed by `(frame, index_in_frame)`.
pub type EmbeddingTable = BTreeMap<(u32, u32), Vec<f64>>;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn field_f64(fields: &[&str], i: usize, line: usize) -> Result<f64> {
    let raw = fields.get(i).ok_or_else(|| parse_err(line, format!("missing field {}", i + 1)))?;
    let value: f64 = raw
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("field {} is not a number: {raw:?}", i + 1)))?;
    if !value.is_finite() {
        return Err(parse_err(line, format!("field {} is not finite", i + 1)));
    }
    Ok(value)
}

/// Frames are positive integers; `3.0` is accepted, `3.5` is not.
fn field_frame(fields: &[&str], i: usize, line: usize) -> Result<u32> {
    let value = field_f64(fields, i, line)?;
    if value.fract() != 0.0 || value < 1.0 || value > u32::MAX as f64 {
        return Err(parse_err(line, format!("frame must be a positive integer, got {value}")));
    }
    Ok(value as u32)
}

fn field_box(fields: &[&str], start: usize, line: usize) -> Result<BoundingBox> {
    let x = field_f64(fields, start, line)?;
    let y = field_f64(fields, start + 1, line)?;
    let w = field_f64(fields, start + 2, line)?;
    let h = field_f64(fields, start + 3, line)?;
    BoundingBox::new(x, y, w, h).map_err(|e| parse_err(line, format!("rejected box: {e}")))
}

fn data_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(Ok((i + 1, l))),
        Err(e) => Some(Err(Error::Io(e))),
    })
}

/// Reads a detection file. Output is sorted by frame; `index_in_frame` counts
/// each frame's rows in file order from zero.
pub fn parse_detections<R: BufRead>(reader: R) -> Result<Vec<Detection>> {
    let mut rows = Vec::new();
    for item in data_lines(reader) {
        let (line, text) = item?;
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() < 7 {
            return Err(parse_err(line, format!("expected at least 7 fields, found {}", fields.len())));
        }
        let frame = field_frame(&fields, 0, line)?;
        let bbox = field_box(&fields, 2, line)?;
        let confidence = field_f64(&fields, 6, line)?;
        rows.push((frame, bbox, confidence));
    }
    // stable: rows within a frame keep file order
    rows.sort_by_key(|r| r.0);
    let mut out = Vec::with_capacity(rows.len());
    let mut current = 0u32;
    let mut next_index = 0u32;
    for (frame, bbox, confidence) in rows {
        if frame != current {
            current = frame;
            next_index = 0;
        }
        out.push(Detection::new(frame, next_index, bbox, confidence));
        next_index += 1;
    }
    Ok(out)
}

pub fn parse_detections_str(text: &str) -> Result<Vec<Detection>> {
    parse_detections(text.as_bytes())
}

/// Writes detections in the detection-file layout at full precision.
pub fn write_detections<W: Write>(detections: &[Detection], mut out: W) -> Result<()> {
    for d in detections {
        let b = &d.bbox;
        writeln!(out, "{},-1,{},{},{},{},{},-1,-1,-1", d.frame, b.x, b.y, b.w, b.h, d.confidence)?;
    }
    Ok(())
}

/// Reads a ground-truth file, skipping rows whose `active` flag is 0.
pub fn parse_ground_truth<R: BufRead>(reader: R) -> Result<Vec<GroundTruthEntry>> {
    let mut out = Vec::new();
    for item in data_lines(reader) {
        let (line, text) = item?;
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() < 6 {
            return Err(parse_err(line, format!("expected at least 6 fields, found {}", fields.len())));
        }
        let frame = field_frame(&fields, 0, line)?;
        let id = field_f64(&fields, 1, line)?;
        if id < 1.0 || id.fract() != 0.0 {
            return Err(parse_err(line, format!("identity must be a positive integer, got {id}")));
        }
        let bbox = field_box(&fields, 2, line)?;
        let active = if fields.len() > 6 { field_f64(&fields, 6, line)? } else { 1.0 };
        if active == 0.0 {
            continue;
        }
        let visibility = if fields.len() > 8 { field_f64(&fields, 8, line)? } else { 1.0 };
        out.push(GroundTruthEntry { frame, identity: id as u32, bbox, visibility });
    }
    out.sort_by_key(|g| (g.frame, g.identity));
    Ok(out)
}

pub fn write_ground_truth<W: Write>(entries: &[GroundTruthEntry], mut out: W) -> Result<()> {
    for g in entries {
        let b = &g.bbox;
        writeln!(out, "{},{},{},{},{},{},1,1,{}", g.frame, g.identity, b.x, b.y, b.w, b.h, g.visibility)?;
    }
    Ok(())
}

/// Writes one row per detection, sorted by frame then track id.
pub fn write_tracking_output<W: Write>(trajectories: &[Trajectory], mut out: W) -> Result<()> {
    let mut rows: Vec<(u32, u32, &BoundingBox)> = trajectories
        .iter()
        .flat_map(|t| t.detections.iter().map(move |d| (d.frame, t.track_id, &d.bbox)))
        .collect();
    rows.sort_by_key(|r| (r.0, r.1));
    for (frame, id, b) in rows {
        writeln!(out, "{frame},{id},{:.2},{:.2},{:.2},{:.2},-1,-1,-1,-1", b.x, b.y, b.w, b.h)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a tracking result (or any `frame,id,x,y,w,h,...` file) into rows.
pub fn parse_tracking_output<R: BufRead>(reader: R) -> Result<Vec<TrackBox>> {
    let mut out = Vec::new();
    for item in data_lines(reader) {
        let (line, text) = item?;
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() < 6 {
            return Err(parse_err(line, format!("expected at least 6 fields, found {}", fields.len())));
        }
        let frame = field_frame(&fields, 0, line)?;
        let id = field_f64(&fields, 1, line)?;
        if id < 0.0 || id.fract() != 0.0 {
            return Err(parse_err(line, format!("track id must be a non-negative integer, got {id}")));
        }
        let bbox = field_box(&fields, 2, line)?;
        out.push(TrackBox { frame, id: id as u32, bbox });
    }
    out.sort_by_key(|r| (r.frame, r.id));
    Ok(out)
}

fn insert_embedding(table: &mut EmbeddingTable, frame: u32, index: u32, v: Vec<f64>) -> Result<()> {
    if table.insert((frame, index), v).is_some() {
        return Err(Error::DuplicateKey { frame, index });
    }
    Ok(())
}

/// Loads an embedding sidecar, detecting the binary container by its magic bytes.
pub fn load_embeddings<R: Read>(mut reader: R, expected_dim: usize) -> Result<EmbeddingTable> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.starts_with(EMBEDDING_MAGIC) {
        load_embeddings_binary(&bytes, expected_dim)
    } else {
        load_embeddings_csv(bytes.as_slice(), expected_dim)
    }
}

pub fn load_embeddings_csv<R: BufRead>(reader: R, expected_dim: usize) -> Result<EmbeddingTable> {
    let mut table = EmbeddingTable::new();
    for item in data_lines(reader) {
        let (line, text) = item?;
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() < 2 {
            return Err(parse_err(line, "expected frame,index,v1..vD"));
        }
        let frame = field_frame(&fields, 0, line)?;
        let index = field_f64(&fields, 1, line)?;
        if index < 0.0 || index.fract() != 0.0 {
            return Err(parse_err(line, format!("index must be a non-negative integer, got {index}")));
        }
        let found = fields.len() - 2;
        if found != expected_dim {
            return Err(Error::Dimension { line, expected: expected_dim, found });
        }
        let v = (2..fields.len()).map(|i| field_f64(&fields, i, line)).collect::<Result<Vec<_>>>()?;
        insert_embedding(&mut table, frame, index as u32, v)?;
    }
    Ok(table)
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::Input("truncated binary embedding file".into()));
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

fn take_u32(bytes: &mut &[u8]) -> Result<u32> {
    Ok(u32::from_le_bytes(take(bytes, 4)?.try_into().unwrap()))
}

pub fn load_embeddings_binary(bytes: &[u8], expected_dim: usize) -> Result<EmbeddingTable> {
    let mut rest = bytes;
    if take(&mut rest, 4)? != EMBEDDING_MAGIC {
        return Err(Error::Input("missing embedding magic".into()));
    }
    let version = take_u32(&mut rest)?;
    if version != EMBEDDING_VERSION {
        return Err(Error::Input(format!("unsupported embedding container version {version}")));
    }
    let dim = take_u32(&mut rest)? as usize;
    if dim != expected_dim {
        return Err(Error::Dimension { line: 0, expected: expected_dim, found: dim });
    }
    let count = u64::from_le_bytes(take(&mut rest, 8)?.try_into().unwrap());
    let mut table = EmbeddingTable::new();
    for _ in 0..count {
        let frame = take_u32(&mut rest)?;
        let index = take_u32(&mut rest)?;
        let raw = take(&mut rest, 8 * dim)?;
        let v = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        insert_embedding(&mut table, frame, index, v)?;
    }
    if !rest.is_empty() {
        return Err(Error::Input("trailing bytes after embedding records".into()));
    }
    Ok(table)
}

/// Writes the CSV sidecar; `{}` formatting of `f64` is shortest round-trip.
pub fn write_embeddings_csv<W: Write>(table: &EmbeddingTable, mut out: W) -> Result<()> {
    for ((frame, index), v) in table {
        write!(out, "{frame},{index}")?;
        for x in v {
            write!(out, ",{x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_embeddings_binary<W: Write>(table: &EmbeddingTable, dim: usize, mut out: W) -> Result<()> {
    out.write_all(EMBEDDING_MAGIC)?;
    out.write_all(&EMBEDDING_VERSION.to_le_bytes())?;
    out.write_all(&(dim as u32).to_le_bytes())?;
    out.write_all(&(table.len() as u64).to_le_bytes())?;
    for ((frame, index), v) in table {
        if v.len() != dim {
            return Err(Error::Dimension { line: 0, expected: dim, found: v.len() });
        }
        out.write_all(&frame.to_le_bytes())?;
        out.write_all(&index.to_le_bytes())?;
        for x in v {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Copies each detection's embedding out of the table.
pub fn attach_embeddings(detections: &mut [Detection], table: &EmbeddingTable) -> Result<()> {
    for d in detections.iter_mut() {
        let v = table
            .get(&d.key())
            .ok_or(Error::MissingEmbedding { frame: d.frame, index: d.index_in_frame })?;
        d.embedding = v.clone();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_detection_line() {
        let dets = parse_detections_str("1,-1,10,20,30,40,0.9").unwrap();
        assert_eq!(dets.len(), 1);
        let d = &dets[0];
        assert_eq!((d.frame, d.index_in_frame), (1, 0));
        assert_eq!(d.bbox, BoundingBox { x: 10.0, y: 20.0, w: 30.0, h: 40.0 });
        assert_eq!(d.confidence, 0.9);
        assert!(d.embedding.is_empty());
    }

    #[test]
    fn empty_stream() {
        assert!(parse_detections_str("").unwrap().is_empty());
        assert!(parse_detections_str("\n\n").unwrap().is_empty());
    }

    #[test]
    fn sorted_by_frame_with_per_frame_indices() {
        let dets = parse_detections_str("2,-1,0,0,1,1,1\n1,-1,5,5,1,1,1\n2,-1,9,9,1,1,1\n").unwrap();
        let keys: Vec<_> = dets.iter().map(|d| (d.key(), d.bbox.x)).collect();
        assert_eq!(keys, vec![((1, 0), 5.0), ((2, 0), 0.0), ((2, 1), 9.0)]);
    }

    #[test]
    fn malformed_lines_report_line_number() {
        match parse_detections_str("1,-1,0,0,1,1,1\n1,-1,zz,0,1,1,1").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
        match parse_detections_str("1,-1,0,0,0,1,1").unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 1);
                assert!(message.contains("rejected"));
            }
            e => panic!("unexpected {e}"),
        }
        assert!(parse_detections_str("1.5,-1,0,0,1,1,1").is_err());
        assert!(parse_detections_str("0,-1,0,0,1,1,1").is_err());
        assert!(parse_detections_str("1,-1,0,0,1,1").is_err());
    }

    #[test]
    fn ground_truth_skips_inactive() {
        let gt = parse_ground_truth("1,1,0,0,10,10,1,1,1.0\n1,2,0,0,10,10,0,1,1.0\n".as_bytes()).unwrap();
        assert_eq!(gt.len(), 1);
        assert_eq!(gt[0].identity, 1);
    }

    #[test]
    fn embedding_csv_basic_and_errors() {
        let t = load_embeddings("1,0,0.6,0.8\n".as_bytes(), 2).unwrap();
        assert_eq!(t[&(1, 0)], vec![0.6, 0.8]);
        assert!(matches!(
            load_embeddings("1,0,0.1,0.2,0.3\n".as_bytes(), 2),
            Err(Error::Dimension { expected: 2, found: 3, .. })
        ));
        assert!(matches!(
            load_embeddings("1,0,0.1,0.2\n1,0,0.3,0.4\n".as_bytes(), 2),
            Err(Error::DuplicateKey { frame: 1, index: 0 })
        ));
    }

    #[test]
    fn missing_embedding_at_attach() {
        let mut dets = parse_detections_str("1,-1,0,0,1,1,1\n1,-1,0,0,1,1,1").unwrap();
        let t = load_embeddings("1,0,1.0\n".as_bytes(), 1).unwrap();
        assert!(matches!(
            attach_embeddings(&mut dets, &t),
            Err(Error::MissingEmbedding { frame: 1, index: 1 })
        ));
    }

    #[test]
    fn tracking_output_format() {
        let b = BoundingBox::new(1.0, 2.5, 3.25, 4.0).unwrap();
        let t = Trajectory { track_id: 7, detections: vec![Detection::new(3, 0, b, 1.0)] };
        let mut buf = Vec::new();
        write_tracking_output(&[t], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "3,7,1.00,2.50,3.25,4.00,-1,-1,-1,-1\n");

        let mut empty = Vec::new();
        write_tracking_output(&[], &mut empty).unwrap();
        assert!(empty.is_empty());
    }
}
