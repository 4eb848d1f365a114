//! Line-delimited session and rating logs, and the rating-consistency filter.

use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use dpn_core::db::VenueDatabase;
use dpn_core::dialogue::Transcript;
use dpn_core::live::{objective_success, Utterances};
use dpn_core::rl::Episode;
use dpn_core::{Error, Ontology, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const LOG_VERSION: u32 = 1;

/// A closed session, written once when it closes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub version: u32,
    pub session_id: String,
    pub created: u64,
    pub closed: u64,
    pub utterances: Vec<Utterances>,
    pub transcript: Transcript,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub version: u32,
    pub session_id: String,
    pub success: bool,
    pub quality: u8,
    pub rated: u64,
}

trait Versioned {
    fn version(&self) -> u32;
}

impl Versioned for SessionRecord {
    fn version(&self) -> u32 {
        self.version
    }
}

impl Versioned for RatingRecord {
    fn version(&self) -> u32 {
        self.version
    }
}

fn read_records<T: DeserializeOwned + Versioned>(r: impl BufRead) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: T = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if rec.version() != LOG_VERSION {
            return Err(Error::UnknownVersion {
                found: rec.version().to_string(),
                expected: LOG_VERSION.to_string(),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn read_sessions(r: impl BufRead) -> Result<Vec<SessionRecord>> {
    read_records(r)
}

pub fn read_ratings(r: impl BufRead) -> Result<Vec<RatingRecord>> {
    read_records(r)
}

/// Reads a log file; a missing file is an empty log.
fn load<T: DeserializeOwned + Versioned>(path: &Path) -> Result<Vec<T>> {
    match File::open(path) {
        Ok(f) => read_records(BufReader::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(e.into()),
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Logs {
    pub sessions: Vec<SessionRecord>,
    pub ratings: Vec<RatingRecord>,
}

impl Logs {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        Ok(Logs {
            sessions: load(&dir.join(SESSION_LOG))?,
            ratings: load(&dir.join(RATING_LOG))?,
        })
    }
}

/// Episodes of rated dialogues whose objective verdict, judged against the
/// goal the user declared, agrees with the user's own success rating. Only
/// the first rating of a session counts.
pub fn consistent_dialogues(ontology: &Ontology, db: &VenueDatabase, logs: &Logs) -> Vec<Episode> {
    let sessions: HashMap<&str, &SessionRecord> =
        logs.sessions.iter().map(|s| (s.session_id.as_str(), s)).collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for r in &logs.ratings {
        if !seen.insert(r.session_id.as_str()) {
            continue;
        }
        let Some(s) = sessions.get(r.session_id.as_str()) else {
            continue;
        };
        if s.transcript.turns.is_empty() {
            continue;
        }
        if objective_success(ontology, db, &s.transcript) == r.success {
            out.push(s.transcript.to_episode(r.success));
        }
    }
    out
}

pub const SESSION_LOG: &str = "sessions.jsonl";
pub const RATING_LOG: &str = "ratings.jsonl";

/// Append-only writer for both logs. Each record is flushed as it is written.
#[derive(Debug)]
pub struct LogSink {
    sessions: Option<File>,
    ratings: Option<File>,
}

impl LogSink {
    /// Discards everything.
    pub fn disabled() -> Self {
        LogSink { sessions: None, ratings: None }
    }

    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let open = |name: &str| -> Result<File> {
            let p: PathBuf = dir.join(name);
            Ok(OpenOptions::new().create(true).append(true).open(p)?)
        };
        Ok(LogSink {
            sessions: Some(open(SESSION_LOG)?),
            ratings: Some(open(RATING_LOG)?),
        })
    }

    fn append(file: &mut Option<File>, rec: &impl Serialize) -> Result<()> {
        if let Some(f) = file {
            let mut line = serde_json::to_string(rec).map_err(|e| Error::Data(e.to_string()))?;
            line.push('\n');
            f.write_all(line.as_bytes())?;
            f.flush()?;
        }
        Ok(())
    }

    pub fn session(&mut self, rec: &SessionRecord) -> Result<()> {
        Self::append(&mut self.sessions, rec)
    }

    pub fn rating(&mut self, rec: &RatingRecord) -> Result<()> {
        Self::append(&mut self.ratings, rec)
    }
}
