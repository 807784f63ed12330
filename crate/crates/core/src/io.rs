//! Plain-text persistence: ensemble CSVs with `# key=value` header lines,
//! rescaled-curve CSVs and a JSON manifest for sweeps.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::circuit::{InitialState, MeasurementSchedule};
use crate::ensemble::EnsembleSeries;
use crate::error::{Error, Result};
use crate::scaling::RescaledCurve;

/// Ordered `key=value` metadata written as `#` lines.
pub type Metadata = Vec<(String, String)>;

/// `S_L{L}_p{p}_init{kind}_n{n}.csv`.
pub fn series_file_name(series: &EnsembleSeries) -> String {
    format!(
        "S_L{}_p{}_init{}_n{}.csv",
        series.l,
        series.p,
        series.initial_state.tag(),
        series.n_trajectories
    )
}

/// Metadata describing a series and the circuit conventions behind it.
pub fn series_metadata(series: &EnsembleSeries) -> Metadata {
    let kv = |k: &str, v: String| (k.to_string(), v);
    vec![
        kv("code_version", series.code_version.clone()),
        kv("L", series.l.to_string()),
        kv("p", series.p.to_string()),
        kv("initial_state", series.initial_state.tag().to_string()),
        kv("n_trajectories", series.n_trajectories.to_string()),
        kv("seed", series.seed.to_string()),
        kv("prep_time", series.prep_time.to_string()),
        kv(
            "measurement_layers_per_unit",
            series.schedule.layers_per_unit().to_string(),
        ),
        kv("mean_measurements", series.mean_measurements.to_string()),
        kv("entropy_units", "bits".into()),
        kv("time_unit", "odd sublayer then even sublayer".into()),
        kv("odd_pairs", "(1,2),(3,4),...,(L-1,0)".into()),
        kv("even_pairs", "(0,1),(2,3),...,(L-2,L-1)".into()),
        kv("region", "[0,L/2)".into()),
        kv("axes", "t linear; S linear".into()),
    ]
}

/// Appends `extra` to `meta`, replacing entries whose key already exists.
pub fn merge_metadata(meta: &mut Metadata, extra: &Metadata) {
    for (k, v) in extra {
        match meta.iter_mut().find(|e| e.0 == *k) {
            Some(e) => e.1 = v.clone(),
            None => meta.push((k.clone(), v.clone())),
        }
    }
}

fn write_header(out: &mut impl Write, meta: &Metadata) -> Result<()> {
    for (k, v) in meta {
        if k.contains('=') || k.contains('\n') || v.contains('\n') {
            return Err(Error::Parse(format!(
                "metadata entry `{k}` cannot be written"
            )));
        }
        writeln!(out, "# {k}={v}")?;
    }
    Ok(())
}

/// Writes the series with its metadata merged with `extra`.
pub fn write_series_csv(path: &Path, series: &EnsembleSeries, extra: &Metadata) -> Result<()> {
    let mut buf = Vec::new();
    let mut meta = series_metadata(series);
    merge_metadata(&mut meta, extra);
    write_header(&mut buf, &meta)?;
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["t", "S_mean", "S_stderr"])?;
        for ((t, m), e) in series.t.iter().zip(&series.s_mean).zip(&series.s_stderr) {
            w.write_record([t.to_string(), m.to_string(), e.to_string()])?;
        }
        w.flush()?;
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Splits a file into its `#` metadata and the remaining CSV text.
pub fn read_metadata(path: &Path) -> Result<(BTreeMap<String, String>, String)> {
    let file = fs::File::open(path)?;
    let mut meta = BTreeMap::new();
    let mut body = String::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest.trim_start().split_once('=').ok_or_else(|| {
                Error::Parse(format!(
                    "{}:{}: malformed metadata line",
                    path.display(),
                    lineno + 1
                ))
            })?;
            meta.insert(k.trim().to_string(), v.to_string());
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    Ok((meta, body))
}

fn field<T: std::str::FromStr>(
    meta: &BTreeMap<String, String>,
    key: &str,
    path: &Path,
) -> Result<T> {
    let raw = meta
        .get(key)
        .ok_or_else(|| Error::Parse(format!("{}: missing `{key}`", path.display())))?;
    raw.parse()
        .map_err(|_| Error::Parse(format!("{}: bad value for `{key}`: {raw}", path.display())))
}

/// Reads a file written by [`write_series_csv`].
pub fn read_series_csv(path: &Path) -> Result<EnsembleSeries> {
    let (meta, body) = read_metadata(path)?;
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let (mut t, mut s_mean, mut s_stderr) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = || Error::Parse(format!("{}: data row {}", path.display(), i + 1));
        if rec.len() != 3 {
            return Err(bad());
        }
        t.push(rec[0].parse().map_err(|_| bad())?);
        s_mean.push(rec[1].parse().map_err(|_| bad())?);
        s_stderr.push(rec[2].parse().map_err(|_| bad())?);
    }
    let layers: u32 = field(&meta, "measurement_layers_per_unit", path)?;
    let kind: String = field(&meta, "initial_state", path)?;
    Ok(EnsembleSeries {
        l: field(&meta, "L", path)?,
        p: field(&meta, "p", path)?,
        initial_state: InitialState::from_tag(&kind)?,
        t,
        s_mean,
        s_stderr,
        n_trajectories: field(&meta, "n_trajectories", path)?,
        seed: field(&meta, "seed", path)?,
        code_version: field(&meta, "code_version", path)?,
        schedule: MeasurementSchedule::from_layers(layers)?,
        prep_time: field(&meta, "prep_time", path)?,
        mean_measurements: field(&meta, "mean_measurements", path).unwrap_or(f64::NAN),
    })
}

/// Writes a rescaled curve as columns `t,x,y,y_stderr`.
pub fn write_curve_csv(path: &Path, curve: &RescaledCurve, meta: &Metadata) -> Result<()> {
    let mut buf = Vec::new();
    let mut all = vec![
        ("L".to_string(), curve.l.to_string()),
        ("p".to_string(), curve.p.to_string()),
        ("w".to_string(), curve.w.to_string()),
    ];
    merge_metadata(&mut all, meta);
    write_header(&mut buf, &all)?;
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["t", "x", "y", "y_stderr"])?;
        for i in 0..curve.len() {
            w.write_record([
                curve.t[i].to_string(),
                curve.x[i].to_string(),
                curve.y[i].to_string(),
                curve.stderr[i].to_string(),
            ])?;
        }
        w.flush()?;
    }
    fs::write(path, buf)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub file: String,
    pub l: usize,
    pub p: f64,
    pub initial_state: InitialState,
    pub n_trajectories: usize,
    pub t_max: usize,
}

/// JSON sidecar listing the files of a sweep.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub metadata: BTreeMap<String, String>,
    pub entries: Vec<SweepEntry>,
}

impl SweepManifest {
    pub fn push(&mut self, file: &str, series: &EnsembleSeries) {
        self.entries.push(SweepEntry {
            file: file.to_string(),
            l: series.l,
            p: series.p,
            initial_state: series.initial_state,
            n_trajectories: series.n_trajectories,
            t_max: series.t_max(),
        });
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Writes every series into `dir` plus `manifest.json`; returns the paths of
/// the series files.
pub fn write_sweep(
    dir: &Path,
    series: &[EnsembleSeries],
    extra: &Metadata,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut manifest = SweepManifest {
        metadata: extra.iter().cloned().collect(),
        entries: Vec::new(),
    };
    let mut paths = Vec::with_capacity(series.len());
    for s in series {
        let name = series_file_name(s);
        let path = dir.join(&name);
        write_series_csv(&path, s, extra)?;
        manifest.push(&name, s);
        paths.push(path);
    }
    manifest.write(&dir.join("manifest.json"))?;
    Ok(paths)
}
