//! Evaluation artifacts: per-head F-measures on a corpus split, success
//! tables over semantic error rates, and training-curve files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{DialogueCorpus, Split};
use crate::dialogue::DialogueEnv;
use crate::error::{Error, Result};
use crate::policy::PolicyNetwork;
use crate::rl::{evaluate, RlCheckpoint};
use crate::sl::{f1_scores, F1Scores};

/// Default semantic error rates for success curves.
pub const DEFAULT_SERS: [f64; 4] = [0.0, 0.15, 0.30, 0.45];

pub fn eval_f1(net: &PolicyNetwork, corpus: &DialogueCorpus, split: Split) -> Result<F1Scores> {
    f1_scores(net, corpus.turns(split))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessRow {
    pub ser: f64,
    pub n: usize,
    pub success_rate: f64,
    pub std_error: f64,
    pub mean_turns: f64,
    pub mean_return: f64,
}

/// Greedy success over `n` dialogues per error rate. `errors` supplies
/// everything but the rate itself.
/// Greedy success of `net` at each error rate, using `env` for everything
/// but the rate.
pub fn eval_success(
    env: &DialogueEnv,
    net: &PolicyNetwork,
    sers: &[f64],
    n: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<SuccessRow>> {
    if n == 0 {
        return Err(Error::Config("evaluation needs at least one dialogue".into()));
    }
    sers.iter()
        .map(|&ser| {
            let s = evaluate(&env.with_ser(ser)?, net, n, seed, workers)?;
            Ok(SuccessRow {
                ser,
                n,
                success_rate: s.success_rate,
                std_error: s.std_error,
                mean_turns: s.mean_turns,
                mean_return: s.mean_return,
            })
        })
        .collect()
}

pub const SUCCESS_HEADER: [&str; 6] = ["ser", "n", "success_rate", "std_error", "mean_turns", "mean_return"];

pub fn write_success_table(rows: &[SuccessRow], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SUCCESS_HEADER).map_err(csv_err)?;
    for r in rows {
        out.write_record([
            r.ser.to_string(),
            r.n.to_string(),
            r.success_rate.to_string(),
            r.std_error.to_string(),
            r.mean_turns.to_string(),
            r.mean_return.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// One row of a training curve: a checkpoint evaluated at one error rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub dialogues: usize,
    pub ser: f64,
    pub success_rate: f64,
    pub mean_return: f64,
    pub mean_turns: f64,
}

impl CurveRecord {
    pub fn from_checkpoint(ser: f64, c: &RlCheckpoint) -> Self {
        CurveRecord {
            dialogues: c.dialogues,
            ser,
            success_rate: c.success_rate,
            mean_return: c.mean_return,
            mean_turns: c.mean_turns,
        }
    }
}

pub const CURVE_HEADER: [&str; 5] = ["dialogues", "ser", "success_rate", "mean_return", "mean_turns"];

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Data(format!("{other:?}")),
    }
}

pub fn write_curve(records: &[CurveRecord], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CURVE_HEADER).map_err(csv_err)?;
    for r in records {
        out.write_record([
            r.dialogues.to_string(),
            r.ser.to_string(),
            r.success_rate.to_string(),
            r.mean_return.to_string(),
            r.mean_turns.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_curve(r: impl BufRead) -> Result<Vec<CurveRecord>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
    let mut rows = rd.records();
    match rows.next() {
        None => return Err(Error::parse(1, "missing header")),
        Some(h) => {
            let h = h.map_err(|e| Error::parse(1, e.to_string()))?;
            if !h.iter().eq(CURVE_HEADER) {
                return Err(Error::parse(1, "unexpected curve header"));
            }
        }
    }
    let mut out = Vec::new();
    for (i, rec) in rows.enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        if rec.len() != CURVE_HEADER.len() {
            return Err(Error::parse(line, format!("expected {} columns", CURVE_HEADER.len())));
        }
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(line, format!("{} is not a number", CURVE_HEADER[k])))
        };
        out.push(CurveRecord {
            dialogues: rec[0]
                .parse()
                .map_err(|_| Error::parse(line, "dialogues is not a count"))?,
            ser: num(1)?,
            success_rate: num(2)?,
            mean_return: num(3)?,
            mean_turns: num(4)?,
        });
    }
    Ok(out)
}

/// Whitespace-separated plot data, one block per error rate separated by
/// two blank lines (gnuplot `index` blocks).
pub fn write_plot_data(records: &[CurveRecord], mut w: impl Write) -> Result<()> {
    let mut sers: Vec<f64> = Vec::new();
    for r in records {
        if !sers.iter().any(|s| s.to_bits() == r.ser.to_bits()) {
            sers.push(r.ser);
        }
    }
    writeln!(w, "# dialogues success_rate mean_return mean_turns")?;
    for (i, ser) in sers.iter().enumerate() {
        if i > 0 {
            writeln!(w, "\n")?;
        }
        writeln!(w, "# ser {ser}")?;
        for r in records.iter().filter(|r| r.ser.to_bits() == ser.to_bits()) {
            writeln!(w, "{} {} {} {}", r.dialogues, r.success_rate, r.mean_return, r.mean_turns)?;
        }
    }
    Ok(())
}

/// Writes the curve file and its plot-data companion.
pub fn emit_curve(records: &[CurveRecord], curve: impl AsRef<Path>, plot: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(curve)?);
    write_curve(records, &mut w)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(plot)?);
    write_plot_data(records, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_curve(path: impl AsRef<Path>) -> Result<Vec<CurveRecord>> {
    read_curve(BufReader::new(File::open(path)?))
}
