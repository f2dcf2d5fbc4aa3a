//! Text tag-file format.
//!
//! ```text
//! # seqtpe-tags v1
//! # rep_period_ps=12500
//! # n_cycles=1000
//! # channel_map=1:B,2:B,3:X,4:X
//! # seed=42
//! channel,time_ps
//! 1,1834
//! 3,2101
//! ```
//!
//! Records are sorted by time, ties by channel. Header keys other than the
//! ones above are kept in order and written back unchanged.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use thiserror::Error;

use super::TimeTag;

pub const TAG_FORMAT_MAGIC: &str = "# seqtpe-tags v1";
const COLUMNS: &str = "channel,time_ps";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelLabel {
    B,
    X,
    OutC,
    OutD,
}

impl fmt::Display for ChannelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelLabel::B => "B",
            ChannelLabel::X => "X",
            ChannelLabel::OutC => "OUT_C",
            ChannelLabel::OutD => "OUT_D",
        })
    }
}

impl FromStr for ChannelLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "B" => Ok(ChannelLabel::B),
            "X" => Ok(ChannelLabel::X),
            "OUT_C" => Ok(ChannelLabel::OutC),
            "OUT_D" => Ok(ChannelLabel::OutD),
            other => Err(format!("unknown channel label {other:?}")),
        }
    }
}

/// Channel id → physical meaning, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelMap(Vec<(u8, ChannelLabel)>);

impl ChannelMap {
    pub fn new(entries: Vec<(u8, ChannelLabel)>) -> Self {
        Self(entries)
    }

    pub fn hom() -> Self {
        Self(vec![(1, ChannelLabel::OutC), (2, ChannelLabel::OutD)])
    }

    pub fn entries(&self) -> &[(u8, ChannelLabel)] {
        &self.0
    }

    pub fn label(&self, channel: u8) -> Option<ChannelLabel> {
        self.0.iter().find(|(c, _)| *c == channel).map(|(_, l)| *l)
    }

    pub fn channels_for(&self, label: ChannelLabel) -> Vec<u8> {
        self.0
            .iter()
            .filter(|(_, l)| *l == label)
            .map(|(c, _)| *c)
            .collect()
    }
}

impl fmt::Display for ChannelMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(c, l)| format!("{c}:{l}")).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for ChannelMap {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut entries = Vec::new();
        for item in s.split(',') {
            let (c, l) = item
                .split_once(':')
                .ok_or_else(|| format!("channel_map entry {item:?} lacks ':'"))?;
            let c: u8 = c
                .trim()
                .parse()
                .map_err(|_| format!("bad channel id {c:?}"))?;
            if entries.iter().any(|(e, _)| *e == c) {
                return Err(format!("channel {c} listed twice"));
            }
            entries.push((c, l.trim().parse()?));
        }
        Ok(Self(entries))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TagIoErrorKind {
    MissingMagic,
    MalformedHeader(String),
    MissingKey(&'static str),
    MalformedRecord(String),
    UnknownChannel(u8),
    NonMonotonic,
    Io(String),
}

impl fmt::Display for TagIoErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TagIoErrorKind::MissingMagic => write!(f, "expected {TAG_FORMAT_MAGIC:?}"),
            TagIoErrorKind::MalformedHeader(s) => write!(f, "malformed header: {s}"),
            TagIoErrorKind::MissingKey(k) => write!(f, "missing header key {k}"),
            TagIoErrorKind::MalformedRecord(s) => write!(f, "malformed record: {s}"),
            TagIoErrorKind::UnknownChannel(c) => write!(f, "channel {c} not in channel_map"),
            TagIoErrorKind::NonMonotonic => write!(f, "records out of time order"),
            TagIoErrorKind::Io(s) => write!(f, "i/o: {s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct TagIoError {
    pub line: usize,
    pub kind: TagIoErrorKind,
}

fn err(line: usize, kind: TagIoErrorKind) -> TagIoError {
    TagIoError { line, kind }
}

/// Header key/value pairs in file order plus the records.
#[derive(Debug, Clone, PartialEq)]
pub struct TagFile {
    header: Vec<(String, String)>,
    rep_period: u64,
    n_cycles: u64,
    channel_map: ChannelMap,
    seed: Option<u64>,
    pub tags: Vec<TimeTag>,
}

impl TagFile {
    pub fn new(
        rep_period: u64,
        n_cycles: u64,
        channel_map: ChannelMap,
        seed: Option<u64>,
        extra: Vec<(String, String)>,
        tags: Vec<TimeTag>,
    ) -> Self {
        let mut header = vec![
            ("rep_period_ps".to_string(), rep_period.to_string()),
            ("n_cycles".to_string(), n_cycles.to_string()),
            ("channel_map".to_string(), channel_map.to_string()),
        ];
        if let Some(s) = seed {
            header.push(("seed".to_string(), s.to_string()));
        }
        header.extend(extra);
        Self {
            header,
            rep_period,
            n_cycles,
            channel_map,
            seed,
            tags,
        }
    }

    pub fn rep_period(&self) -> u64 {
        self.rep_period
    }

    pub fn n_cycles(&self) -> u64 {
        self.n_cycles
    }

    pub fn channel_map(&self) -> &ChannelMap {
        &self.channel_map
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn header(&self) -> &[(String, String)] {
        &self.header
    }

    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

pub fn write_tags<W: Write>(file: &TagFile, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TAG_FORMAT_MAGIC}")?;
    for (k, v) in &file.header {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "{COLUMNS}")?;
    for tag in &file.tags {
        writeln!(out, "{},{}", tag.channel, tag.time)?;
    }
    out.flush()
}

fn parse_key<T: FromStr>(
    header: &[(String, String, usize)],
    key: &'static str,
) -> Result<Option<T>, TagIoError> {
    match header.iter().find(|(k, _, _)| k == key) {
        None => Ok(None),
        Some((_, v, line)) => v
            .parse()
            .map(Some)
            .map_err(|_| err(*line, TagIoErrorKind::MalformedHeader(format!("{key}={v}")))),
    }
}

/// Parses a tag file. Errors carry the 1-based line number of the first
/// offending line.
pub fn read_tags<R: BufRead>(input: R) -> Result<TagFile, TagIoError> {
    let mut lines = input.lines().enumerate();
    let next = |lines: &mut std::iter::Enumerate<std::io::Lines<R>>| {
        lines
            .next()
            .map(|(i, l)| (i + 1, l.map_err(|e| err(i + 1, TagIoErrorKind::Io(e.to_string())))))
    };

    match next(&mut lines) {
        Some((_, Ok(l))) if l == TAG_FORMAT_MAGIC => {}
        Some((n, Ok(_))) => return Err(err(n, TagIoErrorKind::MissingMagic)),
        Some((_, Err(e))) => return Err(e),
        None => return Err(err(1, TagIoErrorKind::MissingMagic)),
    }

    let mut header: Vec<(String, String, usize)> = Vec::new();
    let columns_line;
    loop {
        match next(&mut lines) {
            None => {
                return Err(err(
                    header.len() + 2,
                    TagIoErrorKind::MalformedHeader("missing column line".into()),
                ))
            }
            Some((_, Err(e))) => return Err(e),
            Some((n, Ok(l))) => {
                if let Some(body) = l.strip_prefix("# ") {
                    let (k, v) = body
                        .split_once('=')
                        .ok_or_else(|| err(n, TagIoErrorKind::MalformedHeader(l.clone())))?;
                    header.push((k.to_string(), v.to_string(), n));
                } else if l == COLUMNS {
                    columns_line = n;
                    break;
                } else {
                    return Err(err(n, TagIoErrorKind::MalformedHeader(l)));
                }
            }
        }
    }

    let rep_period: u64 = parse_key(&header, "rep_period_ps")?
        .ok_or(err(columns_line, TagIoErrorKind::MissingKey("rep_period_ps")))?;
    let n_cycles: u64 = parse_key(&header, "n_cycles")?
        .ok_or(err(columns_line, TagIoErrorKind::MissingKey("n_cycles")))?;
    let channel_map: ChannelMap = parse_key(&header, "channel_map")?
        .ok_or(err(columns_line, TagIoErrorKind::MissingKey("channel_map")))?;
    let seed: Option<u64> = parse_key(&header, "seed")?;

    let mut tags = Vec::new();
    let mut prev: Option<TimeTag> = None;
    while let Some((n, line)) = next(&mut lines) {
        let line = line?;
        let (c, t) = line
            .split_once(',')
            .ok_or_else(|| err(n, TagIoErrorKind::MalformedRecord(line.clone())))?;
        let channel: u8 = c
            .parse()
            .map_err(|_| err(n, TagIoErrorKind::MalformedRecord(line.clone())))?;
        let time: u64 = t
            .parse()
            .map_err(|_| err(n, TagIoErrorKind::MalformedRecord(line.clone())))?;
        if channel_map.label(channel).is_none() {
            return Err(err(n, TagIoErrorKind::UnknownChannel(channel)));
        }
        let tag = TimeTag::new(channel, time);
        if prev.is_some_and(|p| tag < p) {
            return Err(err(n, TagIoErrorKind::NonMonotonic));
        }
        prev = Some(tag);
        tags.push(tag);
    }

    Ok(TagFile {
        header: header.into_iter().map(|(k, v, _)| (k, v)).collect(),
        rep_period,
        n_cycles,
        channel_map,
        seed,
        tags,
    })
}
