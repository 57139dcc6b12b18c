//! `events-v1` files: one decimal-second timestamp per line, with optional
//! `#resolution=<s>`, `#session=HH:MM-HH:MM` and `#interval=<start>,<end>`
//! header lines.
//!
//! With a session, timestamps are read as seconds from an epoch that starts
//! on a Thursday (the Unix epoch), filtered to the session on calendar days,
//! and concatenated into continuous trading time. Without one, the
//! observation window is `#interval` if given, else `[0, last event]`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use hawkes_core::{randomize_timestamps, EventSeries};

use crate::error::{CliError, Result};

const DAY: f64 = 86_400.0;
const DEFAULT_RESOLUTION: f64 = 1e-3;

/// Daily trading window in seconds after midnight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Session {
    pub open: f64,
    pub close: f64,
}

impl Session {
    pub fn parse(text: &str) -> Option<Self> {
        let (a, b) = text.trim().split_once('-')?;
        let hm = |s: &str| -> Option<f64> {
            let (h, m) = s.trim().split_once(':')?;
            let (h, m): (u32, u32) = (h.parse().ok()?, m.parse().ok()?);
            (h <= 24 && m < 60 && h * 60 + m <= 24 * 60).then_some((h * 3600 + m * 60) as f64)
        };
        let (open, close) = (hm(a)?, hm(b)?);
        (close > open).then_some(Self { open, close })
    }

    pub fn length(&self) -> f64 {
        self.close - self.open
    }

    pub fn label(&self) -> String {
        let f = |s: f64| format!("{:02}:{:02}", (s / 3600.0) as u32, ((s % 3600.0) / 60.0) as u32);
        format!("{}-{}", f(self.open), f(self.close))
    }
}

/// Which calendar days carry a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Calendar {
    Weekdays,
    Daily,
}

impl Calendar {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "weekdays" => Ok(Self::Weekdays),
            "daily" => Ok(Self::Daily),
            other => Err(CliError::Config(format!(
                "unknown session calendar '{other}' (expected weekdays or daily)"
            ))),
        }
    }

    fn trades(&self, day: i64) -> bool {
        match self {
            Self::Daily => true,
            // day 0 is a Thursday
            Self::Weekdays => (day + 3).rem_euclid(7) < 5,
        }
    }
}

/// Raw contents of an events file.
#[derive(Debug, Clone, PartialEq)]
pub struct EventsFile {
    pub resolution: f64,
    pub session: Option<Session>,
    pub interval: Option<(f64, f64)>,
    pub timestamps: Vec<f64>,
    /// Source line of each timestamp.
    pub lines: Vec<usize>,
}

pub fn read_events(path: &Path) -> Result<EventsFile> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_events(BufReader::new(file), &path.display().to_string())
}

pub fn parse_events(reader: impl BufRead, name: &str) -> Result<EventsFile> {
    let err = |line: usize, message: String| CliError::Parse {
        path: name.to_string(),
        line,
        message,
    };
    let mut out = EventsFile {
        resolution: DEFAULT_RESOLUTION,
        session: None,
        interval: None,
        timestamps: Vec::new(),
        lines: Vec::new(),
    };
    let mut previous = f64::NEG_INFINITY;
    for (i, line) in reader.lines().enumerate() {
        let no = i + 1;
        let line = line.map_err(|e| err(no, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            let Some((key, value)) = header.split_once('=') else {
                continue;
            };
            match key.trim() {
                "resolution" => {
                    out.resolution = value
                        .trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|r| *r > 0.0 && r.is_finite())
                        .ok_or_else(|| err(no, format!("invalid resolution '{value}'")))?;
                }
                "session" => {
                    out.session =
                        Some(Session::parse(value).ok_or_else(|| err(no, format!("invalid session '{value}'")))?);
                }
                "interval" => {
                    let parsed = value
                        .split_once(',')
                        .and_then(|(a, b)| Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?)));
                    out.interval = Some(
                        parsed
                            .filter(|(a, b)| b > a)
                            .ok_or_else(|| err(no, format!("invalid interval '{value}'")))?,
                    );
                }
                _ => {}
            }
            continue;
        }
        let t: f64 = line
            .parse()
            .map_err(|_| err(no, format!("not a timestamp: '{line}'")))?;
        if !t.is_finite() {
            return Err(err(no, format!("non-finite timestamp '{line}'")));
        }
        if t < previous - out.resolution {
            return Err(err(
                no,
                format!("timestamp {t} precedes the previous one ({previous}) by more than the resolution"),
            ));
        }
        previous = previous.max(t);
        out.timestamps.push(t);
        out.lines.push(no);
    }
    Ok(out)
}

/// Ingested series plus the number of events dropped by the session filter.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub series: EventSeries,
    pub dropped: usize,
    pub resolution: f64,
}

/// Filters to trading hours, concatenates sessions and re-draws every
/// timestamp uniformly within its resolution cell.
pub fn ingest(file: &EventsFile, calendar: Calendar, seed: u64) -> Result<Ingested> {
    let mut raw = file.timestamps.clone();
    // ties within the resolution tolerance are allowed in the file
    raw.sort_by(f64::total_cmp);
    let (times, sessions, dropped) = match file.session {
        Some(session) => concatenate(&raw, session, calendar)?,
        None => {
            let (a, b) = file
                .interval
                .unwrap_or((0.0, raw.last().map_or(0.0, |t| t + file.resolution)));
            let kept: Vec<f64> = raw.iter().copied().filter(|t| *t >= a && *t < b).collect();
            let dropped = raw.len() - kept.len();
            (kept, vec![(a, b)], dropped)
        }
    };
    if dropped > 0 {
        log::info!("dropped {dropped} events outside the observation window");
    }
    if times.is_empty() {
        return Err(hawkes_core::HawkesError::Data("no events inside the observation window".into()).into());
    }
    let series = randomize_timestamps(&times, sessions, file.resolution, seed)?;
    Ok(Ingested {
        series,
        dropped,
        resolution: file.resolution,
    })
}

/// Trading-time stamps, sessions and the dropped count.
type Concatenated = (Vec<f64>, Vec<(f64, f64)>, usize);

fn concatenate(raw: &[f64], session: Session, calendar: Calendar) -> Result<Concatenated> {
    let length = session.length();
    let in_session = |t: f64| {
        let day = (t / DAY).floor() as i64;
        let tod = t - day as f64 * DAY;
        (calendar.trades(day) && tod >= session.open && tod < session.close).then_some((day, tod))
    };
    let kept: Vec<(i64, f64)> = raw.iter().filter_map(|&t| in_session(t)).collect();
    let dropped = raw.len() - kept.len();
    let Some(&(first_day, _)) = kept.first() else {
        return Ok((Vec::new(), vec![(0.0, length)], dropped));
    };
    let last_day = kept.last().map(|k| k.0).unwrap_or(first_day);
    let mut index = std::collections::HashMap::new();
    let mut sessions = Vec::new();
    for day in first_day..=last_day {
        if calendar.trades(day) {
            let k = sessions.len();
            index.insert(day, k);
            sessions.push((k as f64 * length, (k + 1) as f64 * length));
        }
    }
    let times = kept
        .iter()
        .map(|(day, tod)| index[day] as f64 * length + (tod - session.open))
        .collect();
    Ok((times, sessions, dropped))
}

/// Writes a single-window series with an `#interval` header.
pub fn write_events(path: &Path, series: &EventSeries, resolution: f64) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "#format=events-v1")?;
        writeln!(out, "#resolution={resolution}")?;
        writeln!(out, "#interval={},{}", series.start(), series.end())?;
        for t in series.timestamps() {
            writeln!(out, "{t:.9}")?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| CliError::io(path, e))
}
