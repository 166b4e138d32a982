//! Event file formats.
//!
//! CSV: header `t_us,x,y,p`, one event per line, `p` is `1` or `-1`.
//!
//! Binary: magic `EVT1`, then `u16 width`, `u16 height`, followed by 13-byte
//! little-endian records `(u64 t_us, u16 x, u16 y, i8 p)`.
//!
//! Readers are streaming iterators and check bounds, ordering and polarity
//! as records are decoded.

use std::io::{BufRead, ErrorKind, Read, Write};

use super::{Event, EventError, Polarity};

pub const CSV_HEADER: &str = "t_us,x,y,p";
pub const BINARY_MAGIC: &[u8; 4] = b"EVT1";
const RECORD_LEN: usize = 13;

struct Validator {
    width: u16,
    height: u16,
    last_t: Option<u64>,
    index: usize,
}

impl Validator {
    fn check(&mut self, ev: Event) -> Result<Event, EventError> {
        let index = self.index;
        self.index += 1;
        if ev.x >= self.width || ev.y >= self.height {
            return Err(EventError::OutOfBounds {
                index,
                x: ev.x,
                y: ev.y,
                width: self.width,
                height: self.height,
            });
        }
        if let Some(prev) = self.last_t {
            if ev.t < prev {
                return Err(EventError::Unordered { index, prev, t: ev.t });
            }
        }
        self.last_t = Some(ev.t);
        Ok(ev)
    }
}

/// Streaming CSV event reader. The sensor size is supplied by the caller since
/// the CSV carries none.
pub struct CsvEventReader<R> {
    lines: std::io::Lines<R>,
    validator: Validator,
    line_no: usize,
    done: bool,
}

impl<R: BufRead> CsvEventReader<R> {
    pub fn new(reader: R, width: u16, height: u16) -> Result<Self, EventError> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| EventError::Format("empty event CSV".into()))??;
        if header.trim() != CSV_HEADER {
            return Err(EventError::Format(format!(
                "expected header `{CSV_HEADER}`, found `{}`",
                header.trim()
            )));
        }
        Ok(Self {
            lines,
            validator: Validator {
                width,
                height,
                last_t: None,
                index: 0,
            },
            line_no: 1,
            done: false,
        })
    }

    fn parse_line(&self, line: &str) -> Result<Event, EventError> {
        let bad = || EventError::Format(format!("line {}: cannot parse `{line}`", self.line_no));
        let mut it = line.split(',').map(str::trim);
        let t = it.next().and_then(|s| s.parse::<u64>().ok()).ok_or_else(bad)?;
        let x = it.next().and_then(|s| s.parse::<u16>().ok()).ok_or_else(bad)?;
        let y = it.next().and_then(|s| s.parse::<u16>().ok()).ok_or_else(bad)?;
        let p = it
            .next()
            .and_then(|s| s.parse::<i8>().ok())
            .and_then(Polarity::from_sign)
            .ok_or_else(bad)?;
        if it.next().is_some() {
            return Err(bad());
        }
        Ok(Event::new(t, x, y, p))
    }
}

impl<R: BufRead> Iterator for CsvEventReader<R> {
    type Item = Result<Event, EventError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let res = self.parse_line(&line).and_then(|ev| self.validator.check(ev));
            if res.is_err() {
                self.done = true;
            }
            return Some(res);
        }
    }
}

pub fn write_csv<W: Write>(mut out: W, events: impl IntoIterator<Item = Event>) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for ev in events {
        writeln!(out, "{},{},{},{}", ev.t, ev.x, ev.y, ev.polarity.sign())?;
    }
    out.flush()
}

/// Streaming binary event reader.
pub struct BinaryEventReader<R> {
    reader: R,
    validator: Validator,
    done: bool,
}

impl<R: Read> BinaryEventReader<R> {
    pub fn new(mut reader: R) -> Result<Self, EventError> {
        let mut header = [0u8; 8];
        reader
            .read_exact(&mut header)
            .map_err(|_| EventError::Format("truncated binary header".into()))?;
        if &header[..4] != BINARY_MAGIC {
            return Err(EventError::Format("missing EVT1 magic".into()));
        }
        let width = u16::from_le_bytes([header[4], header[5]]);
        let height = u16::from_le_bytes([header[6], header[7]]);
        if width == 0 || height == 0 {
            return Err(EventError::Format("zero sensor size in header".into()));
        }
        Ok(Self {
            reader,
            validator: Validator {
                width,
                height,
                last_t: None,
                index: 0,
            },
            done: false,
        })
    }

    pub fn width(&self) -> u16 {
        self.validator.width
    }

    pub fn height(&self) -> u16 {
        self.validator.height
    }

    fn read_record(&mut self) -> Result<Option<Event>, EventError> {
        let mut rec = [0u8; RECORD_LEN];
        let mut filled = 0;
        while filled < RECORD_LEN {
            match self.reader.read(&mut rec[filled..]) {
                Ok(0) if filled == 0 => return Ok(None),
                Ok(0) => return Err(EventError::Format("truncated event record".into())),
                Ok(n) => filled += n,
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        let t = u64::from_le_bytes(rec[0..8].try_into().unwrap());
        let x = u16::from_le_bytes([rec[8], rec[9]]);
        let y = u16::from_le_bytes([rec[10], rec[11]]);
        let p = Polarity::from_sign(rec[12] as i8)
            .ok_or_else(|| EventError::Format(format!("invalid polarity byte {}", rec[12] as i8)))?;
        Ok(Some(Event::new(t, x, y, p)))
    }
}

impl<R: Read> Iterator for BinaryEventReader<R> {
    type Item = Result<Event, EventError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let res = match self.read_record() {
            Ok(None) => {
                self.done = true;
                return None;
            }
            Ok(Some(ev)) => self.validator.check(ev),
            Err(e) => Err(e),
        };
        if res.is_err() {
            self.done = true;
        }
        Some(res)
    }
}

pub struct BinaryEventWriter<W: Write> {
    out: W,
}

impl<W: Write> BinaryEventWriter<W> {
    pub fn new(mut out: W, width: u16, height: u16) -> std::io::Result<Self> {
        out.write_all(BINARY_MAGIC)?;
        out.write_all(&width.to_le_bytes())?;
        out.write_all(&height.to_le_bytes())?;
        Ok(Self { out })
    }

    pub fn write(&mut self, ev: &Event) -> std::io::Result<()> {
        let mut rec = [0u8; RECORD_LEN];
        rec[0..8].copy_from_slice(&ev.t.to_le_bytes());
        rec[8..10].copy_from_slice(&ev.x.to_le_bytes());
        rec[10..12].copy_from_slice(&ev.y.to_le_bytes());
        rec[12] = ev.polarity.sign() as u8;
        self.out.write_all(&rec)
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}
