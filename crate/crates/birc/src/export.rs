//! On-disk formats: environments as CSV plus a JSON header, passage records
//! as per-checkpoint CSV or a compact binary batch with a JSON manifest, and
//! generic CSV/JSON helpers for reports and sample vectors.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::env::Environment;
use crate::error::Error;
use crate::traps::TrapRecord;
use crate::walk::{Engine, PassageRecord};
use crate::Result;

/// JSON header accompanying an environment CSV.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnvironmentHeader {
    pub lambda: f64,
    pub left: i64,
    pub right: i64,
    pub seed: u64,
}

/// Write `<prefix>.json` (lambda, window, seed) and `<prefix>.csv`
/// (site, conductance).
pub fn export_environment(env: &Environment, prefix: &Path) -> Result<()> {
    let header = EnvironmentHeader {
        lambda: env.lambda(),
        left: env.left(),
        right: env.right(),
        seed: env.seed(),
    };
    write_json(&prefix.with_extension("json"), &header)?;
    let mut w = BufWriter::new(File::create(prefix.with_extension("csv"))?);
    writeln!(w, "x,c")?;
    for (i, c) in env.conductances().iter().enumerate() {
        writeln!(w, "{},{}", env.left() + i as i64, fmt_f64(*c))?;
    }
    w.flush()?;
    Ok(())
}

/// Read an environment back from its `<prefix>.json` / `<prefix>.csv` pair.
pub fn import_environment(prefix: &Path) -> Result<Environment> {
    let header: EnvironmentHeader = read_json(&prefix.with_extension("json"))?;
    let reader = BufReader::new(File::open(prefix.with_extension("csv"))?);
    let mut c = Vec::new();
    for (ln, line) in reader.lines().enumerate() {
        let line = line?;
        if ln == 0 {
            continue; // column header
        }
        let mut cols = line.split(',');
        let x: i64 = parse_col(cols.next(), "x")?;
        let value: f64 = parse_col(cols.next(), "c")?;
        if x != header.left + c.len() as i64 {
            return Err(Error::Config(format!(
                "environment CSV sites out of order at line {}",
                ln + 1
            )));
        }
        c.push(value);
    }
    if header.left + c.len() as i64 - 1 != header.right {
        return Err(Error::Config(
            "environment CSV length disagrees with its header window".into(),
        ));
    }
    Environment::from_conductances(header.lambda, header.left, c, header.seed)
}

fn parse_col<T: std::str::FromStr>(col: Option<&str>, name: &str) -> Result<T> {
    col.ok_or_else(|| Error::Config(format!("missing CSV column {name}")))?
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad CSV value in column {name}")))
}

/// Shortest round-trip decimal form.
fn fmt_f64(v: f64) -> String {
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

/// Stream passage records as CSV, one row per checkpoint.
pub fn write_passage_csv<W: Write>(records: &[PassageRecord], out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(
        w,
        "replica_id,seed,engine,joint_law,n,checkpoint_u,steps,total_steps,max_backtrack"
    )?;
    for r in records {
        let engine = match r.engine {
            Engine::Direct => "direct",
            Engine::Branching => "branching",
        };
        for &(u, steps) in &r.checkpoints {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.replica_id,
                r.seed,
                engine,
                r.joint_law,
                r.n,
                fmt_f64(u),
                steps,
                r.total_steps,
                r.max_backtrack
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

const BATCH_MAGIC: &[u8; 8] = b"PASSBAT1";

/// Manifest sitting next to a binary passage batch.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BatchManifest {
    pub format: String,
    pub record_count: usize,
    pub checkpoint_grid: Vec<f64>,
    pub engine: Engine,
    pub n: u64,
}

/// Compact binary batch: all records share the manifest's grid, so each record
/// is a fixed-size row of little-endian words.
pub fn write_passage_batch(
    records: &[PassageRecord],
    bin_path: &Path,
    manifest_path: &Path,
) -> Result<()> {
    let first = records
        .first()
        .ok_or_else(|| Error::Config("cannot write an empty passage batch".into()))?;
    let grid: Vec<f64> = first.checkpoints.iter().map(|&(u, _)| u).collect();
    for r in records {
        let same = r.n == first.n
            && r.engine == first.engine
            && r.checkpoints.len() == grid.len()
            && r.checkpoints.iter().zip(&grid).all(|(&(u, _), &g)| u == g);
        if !same {
            return Err(Error::Config(
                "passage batch requires a common n, engine and checkpoint grid".into(),
            ));
        }
    }
    let manifest = BatchManifest {
        format: "passage-batch-v1".into(),
        record_count: records.len(),
        checkpoint_grid: grid,
        engine: first.engine,
        n: first.n,
    };
    write_json(manifest_path, &manifest)?;
    let mut w = BufWriter::new(File::create(bin_path)?);
    w.write_all(BATCH_MAGIC)?;
    for r in records {
        w.write_all(&r.replica_id.to_le_bytes())?;
        w.write_all(&r.seed.to_le_bytes())?;
        w.write_all(&r.total_steps.to_le_bytes())?;
        w.write_all(&r.max_backtrack.to_le_bytes())?;
        for &(_, steps) in &r.checkpoints {
            w.write_all(&steps.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a binary passage batch back into full records.
pub fn read_passage_batch(bin_path: &Path, manifest_path: &Path) -> Result<Vec<PassageRecord>> {
    let manifest: BatchManifest = read_json(manifest_path)?;
    if manifest.format != "passage-batch-v1" {
        return Err(Error::Config(format!(
            "unknown passage batch format {}",
            manifest.format
        )));
    }
    let mut r = BufReader::new(File::open(bin_path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != BATCH_MAGIC {
        return Err(Error::Config("bad passage batch magic".into()));
    }
    let mut records = Vec::with_capacity(manifest.record_count);
    let mut u64buf = [0u8; 8];
    let mut read_u64 = |r: &mut BufReader<File>| -> Result<u64> {
        r.read_exact(&mut u64buf)?;
        Ok(u64::from_le_bytes(u64buf))
    };
    for _ in 0..manifest.record_count {
        let replica_id = read_u64(&mut r)?;
        let seed = read_u64(&mut r)?;
        let total_steps = read_u64(&mut r)?;
        let max_backtrack = read_u64(&mut r)? as i64;
        let mut checkpoints = Vec::with_capacity(manifest.checkpoint_grid.len());
        for &u in &manifest.checkpoint_grid {
            checkpoints.push((u, read_u64(&mut r)?));
        }
        records.push(PassageRecord {
            n: manifest.n,
            checkpoints,
            total_steps,
            max_backtrack,
            engine: manifest.engine,
            joint_law: manifest.engine == Engine::Direct,
            replica_id,
            seed,
        });
    }
    Ok(records)
}

/// Trap records as CSV.
pub fn write_traps_csv<W: Write>(records: &[TrapRecord], out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(
        w,
        "x,kind,k,depth,atypical,in_good_triblock,triblock_index"
    )?;
    for t in records {
        writeln!(
            w,
            "{},{:?},{},{},{},{},{}",
            t.x, t.kind, t.k, fmt_f64(t.depth), t.atypical, t.in_good_triblock, t.triblock_index
        )?;
    }
    w.flush()?;
    Ok(())
}

/// A single numeric column as CSV.
pub fn write_samples_csv<W: Write>(name: &str, samples: &[f64], out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{name}")?;
    for s in samples {
        writeln!(w, "{}", fmt_f64(*s))?;
    }
    w.flush()?;
    Ok(())
}

/// (x, y) pairs as CSV, e.g. an aging curve as (h, value).
pub fn write_curve_csv<W: Write>(
    x_name: &str,
    y_name: &str,
    points: &[(f64, f64)],
    out: W,
) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{x_name},{y_name}")?;
    for (x, y) in points {
        writeln!(w, "{},{}", fmt_f64(*x), fmt_f64(*y))?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty-printed JSON to a file.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::Config(format!("JSON serialization failed: {e}")))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// JSON from a file.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path)?;
    serde_json::from_reader(BufReader::new(f))
        .map_err(|e| Error::Config(format!("bad JSON in {}: {e}", path.display())))
}
