//! Event-stream representation and fixed-window accumulation into
//! per-polarity count histograms.

pub mod io;

use thiserror::Error;

/// Errors raised while validating or binning an event stream.
#[derive(Debug, Error)]
pub enum EventError {
    #[error("event {index} at ({x}, {y}) lies outside the {width}x{height} sensor")]
    OutOfBounds {
        index: usize,
        x: u16,
        y: u16,
        width: u16,
        height: u16,
    },
    #[error("event {index} has timestamp {t} us, earlier than the preceding {prev} us")]
    Unordered { index: usize, prev: u64, t: u64 },
    #[error("invalid accumulation config: {0}")]
    InvalidConfig(String),
    #[error("malformed event data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sign of the log-intensity change that triggered an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn from_sign(p: i8) -> Option<Self> {
        match p {
            1 => Some(Polarity::Positive),
            -1 => Some(Polarity::Negative),
            _ => None,
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }
}

/// A single sensor sample: timestamp in microseconds, pixel column/row, polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

impl Event {
    pub fn new(t: u64, x: u16, y: u16, polarity: Polarity) -> Self {
        Self { t, x, y, polarity }
    }
}

/// How the two polarity histograms are turned into one intensity channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MergeMode {
    /// Per-pixel sum of positive and negative counts.
    #[default]
    Sum,
    /// Positive-polarity channel only.
    Positive,
    /// Negative-polarity channel only.
    Negative,
}

impl MergeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MergeMode::Sum => "sum",
            MergeMode::Positive => "positive",
            MergeMode::Negative => "negative",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sum" => Some(MergeMode::Sum),
            "positive" => Some(MergeMode::Positive),
            "negative" => Some(MergeMode::Negative),
            _ => None,
        }
    }
}

pub const DEFAULT_COUNT_CAP: u16 = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct AccumulationConfig {
    /// Window length in microseconds.
    pub window_us: u64,
    pub width: u16,
    pub height: u16,
    /// Per-pixel, per-polarity count ceiling.
    pub count_cap: u16,
    pub merge: MergeMode,
}

impl AccumulationConfig {
    pub fn new(window_us: u64, width: u16, height: u16) -> Self {
        Self {
            window_us,
            width,
            height,
            count_cap: DEFAULT_COUNT_CAP,
            merge: MergeMode::Sum,
        }
    }

    pub fn validate(&self) -> Result<(), EventError> {
        if self.window_us == 0 {
            return Err(EventError::InvalidConfig("window must be > 0".into()));
        }
        if self.count_cap == 0 {
            return Err(EventError::InvalidConfig("count_cap must be >= 1".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(EventError::InvalidConfig("sensor size must be non-zero".into()));
        }
        Ok(())
    }

    pub fn window_secs(&self) -> f64 {
        self.window_us as f64 * 1e-6
    }
}

/// Per-polarity count histogram over one accumulation window `[t_start, t_end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventFrame {
    pub t_start: u64,
    pub t_end: u64,
    pub width: u16,
    pub height: u16,
    pub count_cap: u16,
    pub pos_counts: Vec<u16>,
    pub neg_counts: Vec<u16>,
    /// Events binned into this frame, including those lost to clipping.
    pub event_total: u64,
}

impl EventFrame {
    pub fn empty(t_start: u64, cfg: &AccumulationConfig) -> Self {
        let n = cfg.width as usize * cfg.height as usize;
        Self {
            t_start,
            t_end: t_start + cfg.window_us,
            width: cfg.width,
            height: cfg.height,
            count_cap: cfg.count_cap,
            pos_counts: vec![0; n],
            neg_counts: vec![0; n],
            event_total: 0,
        }
    }

    #[inline]
    fn index(&self, x: u16, y: u16) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub fn pos(&self, x: u16, y: u16) -> u16 {
        self.pos_counts[self.index(x, y)]
    }

    pub fn neg(&self, x: u16, y: u16) -> u16 {
        self.neg_counts[self.index(x, y)]
    }

    /// Bins one event, clipping at the count cap. Bounds are the caller's job.
    fn add(&mut self, ev: &Event) {
        let i = self.index(ev.x, ev.y);
        let cell = match ev.polarity {
            Polarity::Positive => &mut self.pos_counts[i],
            Polarity::Negative => &mut self.neg_counts[i],
        };
        if *cell < self.count_cap {
            *cell += 1;
        }
        self.event_total += 1;
    }

    pub fn binned_total(&self) -> u64 {
        self.pos_counts
            .iter()
            .chain(self.neg_counts.iter())
            .map(|&c| c as u64)
            .sum()
    }

    /// Midpoint of the window in microseconds.
    pub fn t_mid(&self) -> f64 {
        (self.t_start + self.t_end) as f64 * 0.5
    }
}

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl GrayImage {
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }
}

/// Maps a frame to an 8-bit image: merged counts are clipped at the cap and
/// rescaled linearly so that `cap` lands on 255 (round half up).
pub fn to_intensity(frame: &EventFrame, merge: MergeMode) -> GrayImage {
    let cap = frame.count_cap.max(1) as u32;
    let data = frame
        .pos_counts
        .iter()
        .zip(&frame.neg_counts)
        .map(|(&p, &n)| {
            let c = match merge {
                MergeMode::Sum => p as u32 + n as u32,
                MergeMode::Positive => p as u32,
                MergeMode::Negative => n as u32,
            }
            .min(cap);
            // round(c * 255 / cap) with halves rounded up, in integer arithmetic
            ((2 * c * 255 + cap) / (2 * cap)) as u8
        })
        .collect();
    GrayImage {
        width: frame.width as usize,
        height: frame.height as usize,
        data,
    }
}

/// Streaming accumulator: pulls events from `source` and yields consecutive
/// frames of length `cfg.window_us`.
///
/// Windows are anchored at the first event's timestamp unless an explicit
/// span is given with [`FrameStream::with_span`]. Empty windows between events
/// come out as all-zero frames. Ordering and bounds are validated as events
/// are consumed; the first violation ends the stream with an error.
pub struct FrameStream<I> {
    source: I,
    cfg: AccumulationConfig,
    span: Option<(u64, u64)>,
    pending: Option<Event>,
    window_start: Option<u64>,
    last_t: Option<u64>,
    index: usize,
    exhausted: bool,
    emitted_any: bool,
    failed: bool,
}

impl<I> FrameStream<I>
where
    I: Iterator<Item = Result<Event, EventError>>,
{
    pub fn new(source: I, cfg: AccumulationConfig) -> Result<Self, EventError> {
        cfg.validate()?;
        Ok(Self {
            source,
            cfg,
            span: None,
            pending: None,
            window_start: None,
            last_t: None,
            index: 0,
            exhausted: false,
            emitted_any: false,
            failed: false,
        })
    }

    /// Anchors windows at `start_us` and keeps emitting (possibly empty)
    /// frames until the window start reaches `end_us`.
    pub fn with_span(mut self, start_us: u64, end_us: u64) -> Self {
        self.span = Some((start_us, end_us));
        self.window_start = Some(start_us);
        self
    }

    fn pull(&mut self) -> Result<Option<Event>, EventError> {
        if let Some(ev) = self.pending.take() {
            return Ok(Some(ev));
        }
        if self.exhausted {
            return Ok(None);
        }
        match self.source.next() {
            None => {
                self.exhausted = true;
                Ok(None)
            }
            Some(Err(e)) => Err(e),
            Some(Ok(ev)) => {
                let index = self.index;
                self.index += 1;
                if ev.x >= self.cfg.width || ev.y >= self.cfg.height {
                    return Err(EventError::OutOfBounds {
                        index,
                        x: ev.x,
                        y: ev.y,
                        width: self.cfg.width,
                        height: self.cfg.height,
                    });
                }
                if let Some(prev) = self.last_t {
                    if ev.t < prev {
                        return Err(EventError::Unordered { index, prev, t: ev.t });
                    }
                }
                self.last_t = Some(ev.t);
                Ok(Some(ev))
            }
        }
    }

    fn next_frame(&mut self) -> Result<Option<EventFrame>, EventError> {
        let first = self.pull()?;
        let start = match (self.window_start, first) {
            (Some(s), _) => s,
            (None, Some(ev)) => ev.t,
            (None, None) => {
                if self.emitted_any {
                    return Ok(None);
                }
                0
            }
        };
        if let Some((_, end)) = self.span {
            if start >= end && self.emitted_any {
                return Ok(None);
            }
        } else if first.is_none() && self.emitted_any {
            return Ok(None);
        }

        let mut frame = EventFrame::empty(start, &self.cfg);
        let mut next = first;
        while let Some(ev) = next {
            if ev.t < start {
                // only reachable with an explicit span starting after the data
                next = self.pull()?;
                continue;
            }
            if ev.t >= frame.t_end {
                self.pending = Some(ev);
                break;
            }
            frame.add(&ev);
            next = self.pull()?;
        }
        self.window_start = Some(frame.t_end);
        self.emitted_any = true;
        Ok(Some(frame))
    }
}

impl<I> Iterator for FrameStream<I>
where
    I: Iterator<Item = Result<Event, EventError>>,
{
    type Item = Result<EventFrame, EventError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        match self.next_frame() {
            Ok(Some(f)) => Some(Ok(f)),
            Ok(None) => None,
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

/// Bins a whole, in-memory event sequence.
pub fn accumulate(events: &[Event], cfg: &AccumulationConfig) -> Result<Vec<EventFrame>, EventError> {
    FrameStream::new(events.iter().copied().map(Ok), cfg.clone())?.collect()
}
