//! Event-stream parsing, serialization and constant-event-count windowing.
//!
//! Two interchange formats are supported:
//!
//! * `evt-csv`: one event per line, `t_us,x,y,polarity`, ASCII, LF-terminated.
//!   Sensor geometry travels out of band (CLI flag or sidecar).
//! * `evt-bin`: a 16-byte header (magic `EVTB`, u16 version = 1, u16 width,
//!   u16 height, 6 reserved bytes) followed by 16-byte little-endian records
//!   (u64 t, u16 x, u16 y, i8 polarity, 3 pad bytes).

use crate::{Error, Result};
use byteorder::{ByteOrder, LittleEndian};

pub const EVT_BIN_MAGIC: &[u8; 4] = b"EVTB";
pub const EVT_BIN_VERSION: u16 = 1;
pub const EVT_BIN_HEADER_LEN: usize = 16;
pub const EVT_BIN_RECORD_LEN: usize = 16;

/// One spike event: timestamp in microseconds, pixel address, polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub t: u64,
    pub x: u16,
    pub y: u16,
    /// +1 or -1.
    pub polarity: i8,
}

/// Linear ground-truth pose-angle annotation: `angle(t) = offset + slope * t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AngleAnnotation {
    pub offset_deg: f64,
    pub deg_per_us: f64,
}

impl AngleAnnotation {
    pub fn angle_deg(&self, t_us: u64) -> f64 {
        self.offset_deg + self.deg_per_us * t_us as f64
    }
}

/// Optional recording metadata carried alongside a stream (never serialized
/// into the event file itself; the manifest and label sidecars hold it).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StreamMeta {
    pub object_id: Option<u32>,
    pub omega_rad_s: Option<f64>,
    pub distance_scale: Option<f64>,
    pub angle: Option<AngleAnnotation>,
}

/// A validated, timestamp-ordered sequence of events with sensor geometry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventStream {
    pub width: u16,
    pub height: u16,
    pub events: Vec<Event>,
    pub metadata: StreamMeta,
}

/// Fixed-count slice of a stream.
#[derive(Debug, Clone, PartialEq)]
pub struct EventWindow {
    pub events: Vec<Event>,
    pub start_t: u64,
    pub end_t: u64,
    pub window_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    EvtCsv,
    EvtBin,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "evt-csv" | "csv" => Ok(Format::EvtCsv),
            "evt-bin" | "bin" => Ok(Format::EvtBin),
            other => Err(Error::Config(format!("unknown event format '{other}'"))),
        }
    }
}

/// Outcome of parsing: the validated stream plus how many out-of-bounds
/// events were dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedStream {
    pub stream: EventStream,
    pub rejected_out_of_bounds: usize,
}

/// Parse a byte buffer in the given format.
///
/// For `evt-csv` the sensor geometry must be supplied; for `evt-bin` it comes
/// from the header (a supplied geometry is cross-checked). Events outside the
/// geometry are dropped and counted. Timestamps must be non-decreasing among
/// the kept events.
pub fn parse_event_stream(
    source: &[u8],
    format: Format,
    geometry: Option<(u16, u16)>,
) -> Result<ParsedStream> {
    match format {
        Format::EvtCsv => {
            let (width, height) = geometry.ok_or_else(|| {
                Error::Config("evt-csv requires sensor geometry (width, height)".into())
            })?;
            parse_csv(source, width, height)
        }
        Format::EvtBin => parse_bin(source, geometry),
    }
}

fn validate_push(
    events: &mut Vec<Event>,
    rejected: &mut usize,
    ev: Event,
    record_index: usize,
    width: u16,
    height: u16,
) -> Result<()> {
    if ev.x >= width || ev.y >= height {
        *rejected += 1;
        return Ok(());
    }
    if let Some(prev) = events.last() {
        if ev.t < prev.t {
            return Err(Error::NonMonotonicTimestamp {
                index: record_index,
                t: ev.t,
                prev: prev.t,
            });
        }
    }
    events.push(ev);
    Ok(())
}

fn parse_csv(source: &[u8], width: u16, height: u16) -> Result<ParsedStream> {
    let text = std::str::from_utf8(source).map_err(|e| Error::Parse {
        location: format!("byte {}", e.valid_up_to()),
        message: "not valid UTF-8".into(),
    })?;
    let mut events = Vec::new();
    let mut rejected = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        fn parse_field<'a>(f: Option<&'a str>, name: &str, lineno: usize) -> Result<&'a str> {
            f.map(str::trim).ok_or_else(|| Error::Parse {
                location: format!("line {}", lineno + 1),
                message: format!("missing field '{name}'"),
            })
        }
        let t: u64 = parse_num(parse_field(fields.next(), "t", lineno)?, lineno, "t")?;
        let x: u16 = parse_num(parse_field(fields.next(), "x", lineno)?, lineno, "x")?;
        let y: u16 = parse_num(parse_field(fields.next(), "y", lineno)?, lineno, "y")?;
        let p_str = parse_field(fields.next(), "polarity", lineno)?;
        let polarity: i8 = match p_str {
            "1" | "+1" => 1,
            "-1" => -1,
            other => {
                return Err(Error::Parse {
                    location: format!("line {}", lineno + 1),
                    message: format!("polarity must be 1 or -1, got '{other}'"),
                })
            }
        };
        if fields.next().is_some() {
            return Err(Error::Parse {
                location: format!("line {}", lineno + 1),
                message: "trailing fields after polarity".into(),
            });
        }
        validate_push(
            &mut events,
            &mut rejected,
            Event { t, x, y, polarity },
            lineno + 1,
            width,
            height,
        )?;
    }
    Ok(ParsedStream {
        stream: EventStream {
            width,
            height,
            events,
            metadata: StreamMeta::default(),
        },
        rejected_out_of_bounds: rejected,
    })
}

fn parse_num<T: std::str::FromStr>(s: &str, lineno: usize, name: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        location: format!("line {}", lineno + 1),
        message: format!("invalid {name} value '{s}'"),
    })
}

fn parse_bin(source: &[u8], geometry: Option<(u16, u16)>) -> Result<ParsedStream> {
    if source.len() < EVT_BIN_HEADER_LEN {
        return Err(Error::Parse {
            location: "byte 0".into(),
            message: format!(
                "evt-bin file too short for header ({} bytes)",
                source.len()
            ),
        });
    }
    if &source[0..4] != EVT_BIN_MAGIC {
        return Err(Error::Parse {
            location: "byte 0".into(),
            message: "bad magic, expected 'EVTB'".into(),
        });
    }
    let version = LittleEndian::read_u16(&source[4..6]);
    if version != EVT_BIN_VERSION {
        return Err(Error::Parse {
            location: "byte 4".into(),
            message: format!("unsupported evt-bin version {version}"),
        });
    }
    let width = LittleEndian::read_u16(&source[6..8]);
    let height = LittleEndian::read_u16(&source[8..10]);
    if let Some((w, h)) = geometry {
        if (w, h) != (width, height) {
            return Err(Error::Parse {
                location: "byte 6".into(),
                message: format!(
                    "header geometry {width}x{height} differs from declared {w}x{h}"
                ),
            });
        }
    }
    let body = &source[EVT_BIN_HEADER_LEN..];
    if body.len() % EVT_BIN_RECORD_LEN != 0 {
        return Err(Error::Parse {
            location: format!("byte {}", EVT_BIN_HEADER_LEN + body.len()),
            message: format!(
                "truncated record: body length {} not a multiple of {}",
                body.len(),
                EVT_BIN_RECORD_LEN
            ),
        });
    }
    let mut events = Vec::with_capacity(body.len() / EVT_BIN_RECORD_LEN);
    let mut rejected = 0usize;
    for (i, rec) in body.chunks_exact(EVT_BIN_RECORD_LEN).enumerate() {
        let ev = Event {
            t: LittleEndian::read_u64(&rec[0..8]),
            x: LittleEndian::read_u16(&rec[8..10]),
            y: LittleEndian::read_u16(&rec[10..12]),
            polarity: rec[12] as i8,
        };
        if ev.polarity != 1 && ev.polarity != -1 {
            return Err(Error::Parse {
                location: format!("record {i}"),
                message: format!("polarity byte must be +1/-1, got {}", ev.polarity),
            });
        }
        validate_push(&mut events, &mut rejected, ev, i, width, height)?;
    }
    Ok(ParsedStream {
        stream: EventStream {
            width,
            height,
            events,
            metadata: StreamMeta::default(),
        },
        rejected_out_of_bounds: rejected,
    })
}

/// Serialize a stream. `parse_event_stream(serialize_event_stream(s)) == s`
/// up to metadata, which never travels in the event file.
pub fn serialize_event_stream(stream: &EventStream, format: Format) -> Vec<u8> {
    match format {
        Format::EvtCsv => {
            let mut out = String::new();
            for ev in &stream.events {
                out.push_str(&format!("{},{},{},{}\n", ev.t, ev.x, ev.y, ev.polarity));
            }
            out.into_bytes()
        }
        Format::EvtBin => {
            let mut out =
                Vec::with_capacity(EVT_BIN_HEADER_LEN + stream.events.len() * EVT_BIN_RECORD_LEN);
            out.extend_from_slice(EVT_BIN_MAGIC);
            out.extend_from_slice(&EVT_BIN_VERSION.to_le_bytes());
            out.extend_from_slice(&stream.width.to_le_bytes());
            out.extend_from_slice(&stream.height.to_le_bytes());
            out.extend_from_slice(&[0u8; 6]);
            for ev in &stream.events {
                out.extend_from_slice(&ev.t.to_le_bytes());
                out.extend_from_slice(&ev.x.to_le_bytes());
                out.extend_from_slice(&ev.y.to_le_bytes());
                out.push(ev.polarity as u8);
                out.extend_from_slice(&[0u8; 3]);
            }
            out
        }
    }
}

/// Cut the stream into constant-event-count windows.
///
/// Window `i` covers events `[i*stride, i*stride + count)`; a trailing
/// partial window is discarded. `count > |events|` yields no windows.
pub fn window_by_count(stream: &EventStream, count: usize, stride: usize) -> Vec<EventWindow> {
    assert!(count >= 1, "count must be >= 1");
    assert!(stride >= 1, "stride must be >= 1");
    let mut windows = Vec::new();
    let n = stream.events.len();
    let mut index = 0usize;
    let mut start = 0usize;
    while start + count <= n {
        let slice = &stream.events[start..start + count];
        windows.push(EventWindow {
            events: slice.to_vec(),
            start_t: slice.first().map(|e| e.t).unwrap_or(0),
            end_t: slice.last().map(|e| e.t).unwrap_or(0),
            window_index: index,
        });
        index += 1;
        start += stride;
    }
    windows
}
