//! On-disk formats: EVSF frame files, the JSON sequence manifest, and event CSVs.
//!
//! EVSF layout (little-endian): magic `EVSF`, `u32` version (1), `u32` width,
//! `u32` height, `u32` channel count (10), `f64` time in seconds, then the
//! planes as `width * height` `f32` values each, row-major, in [`Channel`] order.
//!
//! Event files are CSV with header `t,x,y,p`. Sensor metadata lives in a JSON
//! sidecar next to the CSV (`events.csv` -> `events.meta.json`).

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{Event, EventStream, Polarity, StreamMeta};
use crate::frame::{Channel, FeatureFrame, CHANNELS};

pub const FRAME_MAGIC: &[u8; 4] = b"EVSF";
pub const FRAME_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 * 4 + 8;

/// Directory-level description of a frame sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceManifest {
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    pub dt: f64,
    pub spp: u32,
    pub frames: Vec<String>,
    #[serde(default = "default_channels")]
    pub channels: Vec<String>,
}

fn default_channels() -> Vec<String> {
    Channel::ALL.iter().map(|c| c.name().to_string()).collect()
}

impl SequenceManifest {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("manifest dimensions must be positive".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("manifest dt must be > 0, got {}", self.dt)));
        }
        if self.frames.len() != self.frame_count {
            return Err(Error::Input(format!(
                "manifest lists {} frames but frame_count is {}",
                self.frames.len(),
                self.frame_count
            )));
        }
        if self.channels != default_channels() {
            return Err(Error::Input(format!(
                "unsupported channel ordering {:?}",
                self.channels
            )));
        }
        Ok(())
    }

    pub fn stream_meta(&self) -> StreamMeta {
        StreamMeta {
            width: self.width as u32,
            height: self.height as u32,
            duration: self.dt * self.frame_count.saturating_sub(1) as f64,
            frame_count: self.frame_count,
            dt: self.dt,
        }
    }
}

pub fn encode_frame(frame: &FeatureFrame) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + CHANNELS * frame.pixels() * 4);
    buf.extend_from_slice(FRAME_MAGIC);
    buf.extend_from_slice(&FRAME_VERSION.to_le_bytes());
    buf.extend_from_slice(&(frame.width() as u32).to_le_bytes());
    buf.extend_from_slice(&(frame.height() as u32).to_le_bytes());
    buf.extend_from_slice(&(CHANNELS as u32).to_le_bytes());
    buf.extend_from_slice(&frame.time().to_le_bytes());
    for plane in frame.planes() {
        for v in plane {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

/// Decodes an EVSF buffer. `file` only labels errors. The frame's spp comes
/// from the manifest, not the file, so it is set to `spp` here.
pub fn decode_frame(bytes: &[u8], file: &Path, spp: u32) -> Result<FeatureFrame> {
    let err = |offset: usize, msg: &str| Error::parse(file, format!("byte offset {offset}"), msg);
    if bytes.len() < HEADER_LEN {
        return Err(err(bytes.len(), "truncated header"));
    }
    if &bytes[0..4] != FRAME_MAGIC {
        return Err(err(0, "bad magic, expected \"EVSF\""));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != FRAME_VERSION {
        return Err(err(4, &format!("unsupported version {version}")));
    }
    let width = u32_at(8) as usize;
    let height = u32_at(12) as usize;
    let channels = u32_at(16) as usize;
    if channels != CHANNELS {
        return Err(err(16, &format!("expected {CHANNELS} channels, found {channels}")));
    }
    if width == 0 || height == 0 {
        return Err(err(8, "zero frame dimension"));
    }
    let time = f64::from_le_bytes(bytes[20..28].try_into().unwrap());
    let n = width * height;
    let mut planes = Vec::with_capacity(CHANNELS);
    for (c, ch) in Channel::ALL.iter().enumerate() {
        let start = HEADER_LEN + c * n * 4;
        let end = start + n * 4;
        if bytes.len() < end {
            return Err(err(
                bytes.len(),
                &format!("truncated plane {} (needs {} bytes)", ch.name(), end),
            ));
        }
        let plane = bytes[start..end]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        planes.push(plane);
    }
    let expected = HEADER_LEN + CHANNELS * n * 4;
    if bytes.len() != expected {
        return Err(err(expected, "trailing bytes after last plane"));
    }
    FeatureFrame::from_planes(width, height, time, spp.max(1), planes)
}

pub fn write_frame(path: &Path, frame: &FeatureFrame) -> Result<()> {
    fs::write(path, encode_frame(frame)).map_err(|e| Error::io(path, e))
}

pub fn read_frame(path: &Path, spp: u32) -> Result<FeatureFrame> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_frame(&bytes, path, spp)
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:05}.evsf")
}

/// Writes `frames` plus `manifest.json` into `dir` (created if missing).
pub fn write_sequence(dir: &Path, frames: &[FeatureFrame], dt: f64) -> Result<SequenceManifest> {
    let first = frames
        .first()
        .ok_or_else(|| Error::Input("cannot write an empty sequence".into()))?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = Vec::with_capacity(frames.len());
    for (i, frame) in frames.iter().enumerate() {
        if !frame.same_shape(first) {
            return Err(Error::Input(format!("frame {i} has mismatched dimensions")));
        }
        let name = frame_file_name(i);
        write_frame(&dir.join(&name), frame)?;
        names.push(name);
    }
    let manifest = SequenceManifest {
        width: first.width(),
        height: first.height(),
        frame_count: frames.len(),
        dt,
        spp: first.spp(),
        frames: names,
        channels: default_channels(),
    };
    manifest.validate()?;
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Reads a manifest; frame paths in it are relative to the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<SequenceManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: SequenceManifest = serde_json::from_str(&text).map_err(|e| {
        Error::parse(
            path,
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    manifest.validate()?;
    Ok(manifest)
}

/// Accepts either a manifest path or a directory containing `manifest.json`.
pub fn resolve_manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join("manifest.json")
    } else {
        path.to_path_buf()
    }
}

pub fn read_sequence(path: &Path) -> Result<(SequenceManifest, Vec<FeatureFrame>)> {
    let path = resolve_manifest_path(path);
    let manifest = read_manifest(&path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut frames = Vec::with_capacity(manifest.frame_count);
    for name in &manifest.frames {
        let file = dir.join(name);
        let frame = read_frame(&file, manifest.spp)?;
        if frame.width() != manifest.width || frame.height() != manifest.height {
            return Err(Error::Input(format!(
                "{}: {}x{} frame in a {}x{} sequence",
                file.display(),
                frame.width(),
                frame.height(),
                manifest.width,
                manifest.height
            )));
        }
        frames.push(frame);
    }
    Ok((manifest, frames))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Sidecar path holding the [`StreamMeta`] of an event CSV.
pub fn meta_path(events_path: &Path) -> PathBuf {
    events_path.with_extension("meta.json")
}

pub fn write_event_records(path: &Path, events: &[Event]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = csv::Writer::from_writer(BufWriter::new(file));
    let io_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    out.write_record(["t", "x", "y", "p"]).map_err(io_err)?;
    for e in events {
        out.write_record([
            e.t.to_string(),
            e.x.to_string(),
            e.y.to_string(),
            e.p.sign().to_string(),
        ])
        .map_err(io_err)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Writes the CSV and its metadata sidecar.
pub fn write_events(path: &Path, stream: &EventStream) -> Result<()> {
    write_event_records(path, &stream.events)?;
    write_json(&meta_path(path), &stream.meta)
}

/// Parses an event CSV without metadata.
pub fn read_event_records(path: &Path) -> Result<Vec<Event>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_event_csv(BufReader::new(file), path)
}

pub fn parse_event_csv<R: Read>(reader: R, path: &Path) -> Result<Vec<Event>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(path, "line 1", e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["t", "x", "y", "p"] {
        return Err(Error::parse(path, "line 1", "header must be \"t,x,y,p\""));
    }
    let mut events = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::parse(path, format!("line {line}"), e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let loc = || format!("line {line}");
        let field = |i: usize, name: &str| {
            record
                .get(i)
                .ok_or_else(|| Error::parse(path, loc(), format!("missing field {name}")))
        };
        let t: f64 = field(0, "t")?
            .parse()
            .map_err(|e| Error::parse(path, loc(), format!("bad t: {e}")))?;
        if !t.is_finite() {
            return Err(Error::parse(path, loc(), "non-finite t"));
        }
        let x: u32 = field(1, "x")?
            .parse()
            .map_err(|e| Error::parse(path, loc(), format!("bad x: {e}")))?;
        let y: u32 = field(2, "y")?
            .parse()
            .map_err(|e| Error::parse(path, loc(), format!("bad y: {e}")))?;
        let p: i64 = field(3, "p")?
            .parse()
            .map_err(|e| Error::parse(path, loc(), format!("bad p: {e}")))?;
        let p = Polarity::from_sign(p).map_err(|e| Error::parse(path, loc(), e.to_string()))?;
        events.push(Event::new(t, x, y, p));
    }
    Ok(events)
}

pub fn read_stream_meta(path: &Path) -> Result<StreamMeta> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| {
        Error::parse(
            path,
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })
}

/// Reads an event CSV together with its metadata sidecar.
pub fn read_events(path: &Path) -> Result<EventStream> {
    let events = read_event_records(path)?;
    let meta = read_stream_meta(&meta_path(path))?;
    let stream = EventStream::new(events, meta);
    stream.validate()?;
    Ok(stream)
}
