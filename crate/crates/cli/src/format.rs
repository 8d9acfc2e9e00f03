//! Plain-text file formats: trajectory CSVs, the dataset manifest and the
//! versioned artifact files for every fitted model.
//!
//! Artifacts are line oriented. The first line names the kind and version,
//! then `key value...` lines follow. Floats are written with Rust's shortest
//! round-trip representation, so reading an artifact back reproduces the
//! exact bits that were saved.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use coldstart_core::dynamics::{BrusselatorParams, Dataset, IcRanges, SamplingConfig, Trajectory};
use coldstart_core::harmonics::{GeometricHarmonics, Standardize};
use coldstart_core::latent::LatentModel;
use coldstart_core::linalg::Matrix;
use coldstart_core::lstm::{LstmModel, BLOCKS};
use coldstart_core::manifold::{DiffusionMap, WindowSet};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Lowercase hex SHA-256 of `bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn hash_file(path: &Path) -> CliResult<String> {
    Ok(content_hash(&read_bytes(path)?))
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    let mut s = String::new();
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v:?}");
    }
    s
}

// ---------------------------------------------------------------- CSV

pub fn trajectory_csv(t: &Trajectory) -> String {
    let mut s = String::from(if t.v.is_some() { "t,u,v\n" } else { "t,u\n" });
    for (k, time) in t.times().enumerate() {
        let _ = match &t.v {
            Some(v) => writeln!(s, "{time:?},{:?},{:?}", t.u[k], v[k]),
            None => writeln!(s, "{time:?},{:?}", t.u[k]),
        };
    }
    s
}

/// Parses a `t,u[,v]` CSV. The sampling interval is read off the first two
/// time stamps.
pub fn parse_trajectory_csv(text: &str, origin: &Path) -> CliResult<Trajectory> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').map(str::trim).collect();
    let with_v = match header.as_slice() {
        ["t", "u"] => false,
        ["t", "u", "v"] => true,
        _ => return Err(CliError::parse(origin, "expected a `t,u` or `t,u,v` header")),
    };
    let (mut t, mut u, mut v) = (Vec::new(), Vec::new(), Vec::new());
    for (n, line) in lines.enumerate() {
        let cols = parse_floats(line, ',', origin, n + 2)?;
        if cols.len() != header.len() {
            return Err(CliError::parse(origin, format!("line {}: expected {} columns", n + 2, header.len())));
        }
        t.push(cols[0]);
        u.push(cols[1]);
        if with_v {
            v.push(cols[2]);
        }
    }
    if t.len() < 2 {
        return Err(CliError::parse(origin, "a trajectory needs at least two samples"));
    }
    let dt = t[1] - t[0];
    Trajectory::new(dt, u, with_v.then_some(v)).map_err(|e| CliError::parse(origin, e.to_string()))
}

pub fn parse_floats(line: &str, sep: char, origin: &Path, line_no: usize) -> CliResult<Vec<f64>> {
    line.split(sep)
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|_| CliError::parse(origin, format!("line {line_no}: `{}` is not a number", c.trim())))
        })
        .collect()
}

/// Rows of a numeric CSV with a header line; returns `(header, rows)`.
pub fn parse_numeric_csv(text: &str, origin: &Path) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> =
        lines.next().ok_or_else(|| CliError::parse(origin, "empty file"))?.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let row = parse_floats(line, ',', origin, n + 2)?;
        if row.len() != header.len() {
            return Err(CliError::parse(origin, format!("line {}: expected {} columns", n + 2, header.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

// ---------------------------------------------------------------- dataset

const DATASET_MAGIC: &str = "coldstart-dataset v1";

fn split_file(dir: &Path, split: &str, i: usize) -> PathBuf {
    dir.join(split).join(format!("{i:04}.csv"))
}

/// Writes `manifest.txt` plus one CSV per trajectory under `train/`,
/// `val/` and `test/`.
pub fn write_dataset(dir: &Path, ds: &Dataset) -> CliResult<()> {
    let s = &ds.sampling;
    let mut m = String::new();
    let _ = writeln!(m, "{DATASET_MAGIC}");
    let _ = writeln!(m, "seed {}", ds.seed);
    let _ = writeln!(m, "a {:?}", s.params.a());
    let _ = writeln!(m, "b {:?}", s.params.b());
    let _ = writeln!(m, "t_end {:?}", s.t_end);
    let _ = writeln!(m, "dt_sample {:?}", s.dt_sample);
    let _ = writeln!(m, "u0_range {:?} {:?}", s.ic_ranges.u.0, s.ic_ranges.u.1);
    let _ = writeln!(m, "v0_range {:?} {:?}", s.ic_ranges.v.0, s.ic_ranges.v.1);
    for (name, split) in [("train", &ds.train), ("val", &ds.val), ("test", &ds.test)] {
        let _ = writeln!(m, "{name} {}", split.len());
        for (i, t) in split.iter().enumerate() {
            write_text(&split_file(dir, name, i), &trajectory_csv(t))?;
        }
    }
    write_text(&dir.join("manifest.txt"), &m)
}

/// Loads a dataset directory and its content hash (manifest plus every
/// trajectory file, in split order).
pub fn read_dataset(dir: &Path) -> CliResult<(Dataset, String)> {
    let manifest_path = dir.join("manifest.txt");
    let manifest = read_text(&manifest_path)?;
    let kv = KeyValues::parse(&manifest, DATASET_MAGIC, &manifest_path)?;
    let params = BrusselatorParams::new(kv.f64("a")?, kv.f64("b")?).map_err(|e| CliError::parse(&manifest_path, e.to_string()))?;
    let ur = kv.floats("u0_range")?;
    let vr = kv.floats("v0_range")?;
    if ur.len() != 2 || vr.len() != 2 {
        return Err(CliError::parse(&manifest_path, "initial-condition ranges need two values"));
    }
    let sampling = SamplingConfig {
        params,
        ic_ranges: IcRanges { u: (ur[0], ur[1]), v: (vr[0], vr[1]) },
        t_end: kv.f64("t_end")?,
        dt_sample: kv.f64("dt_sample")?,
    };
    let mut hasher = Sha256::new();
    hasher.update(manifest.as_bytes());
    let mut splits = Vec::new();
    for name in ["train", "val", "test"] {
        let n = kv.usize(name)?;
        let mut trajs = Vec::with_capacity(n);
        for i in 0..n {
            let path = split_file(dir, name, i);
            let bytes = read_bytes(&path)?;
            hasher.update(&bytes);
            let text = String::from_utf8(bytes).map_err(|_| CliError::parse(&path, "not UTF-8"))?;
            trajs.push(parse_trajectory_csv(&text, &path)?);
        }
        splits.push(trajs);
    }
    let hash = hasher.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    });
    let test = splits.pop().unwrap_or_default();
    let val = splits.pop().unwrap_or_default();
    let train = splits.pop().unwrap_or_default();
    Ok((Dataset { train, val, test, seed: kv.u64("seed")?, sampling }, hash))
}

// ---------------------------------------------------------------- key/value

/// `key value...` lines after a magic header line.
pub struct KeyValues<'a> {
    origin: PathBuf,
    entries: Vec<(&'a str, &'a str)>,
}

impl<'a> KeyValues<'a> {
    pub fn parse(text: &'a str, magic: &str, origin: &Path) -> CliResult<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(l) if l.trim() == magic => {}
            Some(l) => {
                return Err(CliError::parse(origin, format!("expected header `{magic}`, found `{}`", l.trim())));
            }
            None => return Err(CliError::parse(origin, "empty file")),
        }
        let entries = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let l = l.trim();
                l.split_once(' ').unwrap_or((l, ""))
            })
            .collect();
        Ok(KeyValues { origin: origin.to_path_buf(), entries })
    }

    fn get(&self, key: &str) -> CliResult<&'a str> {
        self.entries
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| CliError::parse(&self.origin, format!("missing `{key}`")))
    }

    /// All values of a repeated key, in order.
    fn all(&self, key: &str) -> Vec<&'a str> {
        self.entries.iter().filter(|(k, _)| *k == key).map(|(_, v)| *v).collect()
    }

    pub fn str(&self, key: &str) -> CliResult<&'a str> {
        self.get(key)
    }

    pub fn f64(&self, key: &str) -> CliResult<f64> {
        let v = self.get(key)?;
        v.trim().parse().map_err(|_| CliError::parse(&self.origin, format!("`{key}`: `{v}` is not a number")))
    }

    pub fn usize(&self, key: &str) -> CliResult<usize> {
        let v = self.get(key)?;
        v.trim().parse().map_err(|_| CliError::parse(&self.origin, format!("`{key}`: `{v}` is not a count")))
    }

    pub fn u64(&self, key: &str) -> CliResult<u64> {
        let v = self.get(key)?;
        v.trim().parse().map_err(|_| CliError::parse(&self.origin, format!("`{key}`: `{v}` is not an integer")))
    }

    pub fn floats(&self, key: &str) -> CliResult<Vec<f64>> {
        parse_floats_ws(self.get(key)?, &self.origin, key)
    }

    fn float_rows(&self, key: &str) -> CliResult<Vec<Vec<f64>>> {
        self.all(key).into_iter().map(|v| parse_floats_ws(v, &self.origin, key)).collect()
    }
}

fn parse_floats_ws(v: &str, origin: &Path, key: &str) -> CliResult<Vec<f64>> {
    v.split_whitespace()
        .map(|x| x.parse::<f64>().map_err(|_| CliError::parse(origin, format!("`{key}`: `{x}` is not a number"))))
        .collect()
}

fn expect_len(v: Vec<f64>, n: usize, what: &str, origin: &Path) -> CliResult<Vec<f64>> {
    if v.len() != n {
        return Err(CliError::parse(origin, format!("`{what}` has {} values, expected {n}", v.len())));
    }
    Ok(v)
}

fn pair(v: Vec<f64>, what: &str, origin: &Path) -> CliResult<[f64; 2]> {
    let v = expect_len(v, 2, what, origin)?;
    Ok([v[0], v[1]])
}

// ---------------------------------------------------------------- LSTM

const LSTM_MAGIC: &str = "coldstart-lstm v1";

pub struct LstmArtifact {
    pub model: LstmModel,
    pub data_hash: String,
}

pub fn lstm_text(model: &LstmModel, data_hash: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{LSTM_MAGIC}");
    let _ = writeln!(s, "data {data_hash}");
    for b in BLOCKS {
        let vals = &model.params()[b.offset..b.offset + b.rows * b.cols];
        let _ = writeln!(s, "{} {} {} {}", b.name, b.rows, b.cols, join(vals.iter().copied()));
    }
    s
}

pub fn parse_lstm(text: &str, origin: &Path) -> CliResult<LstmArtifact> {
    let kv = KeyValues::parse(text, LSTM_MAGIC, origin)?;
    let mut params = Vec::new();
    for b in BLOCKS {
        let raw = kv.floats(b.name)?;
        let ok = raw.len() == 2 + b.rows * b.cols && raw[0] == b.rows as f64 && raw[1] == b.cols as f64;
        if !ok {
            return Err(CliError::parse(origin, format!("block `{}` must be {}x{}", b.name, b.rows, b.cols)));
        }
        params.extend_from_slice(&raw[2..]);
    }
    let model = LstmModel::from_params(params).map_err(|e| CliError::parse(origin, e.to_string()))?;
    Ok(LstmArtifact { model, data_hash: kv.str("data")?.to_string() })
}

// ---------------------------------------------------------------- diffusion map

const DMAP_MAGIC: &str = "coldstart-dmap v1";

pub struct DmapArtifact {
    pub dmap: DiffusionMap,
    pub data_hash: String,
}

pub fn dmap_text(d: &DiffusionMap, data_hash: &str) -> String {
    let mut s = String::new();
    let n = d.windows.len();
    let _ = writeln!(s, "{DMAP_MAGIC}");
    let _ = writeln!(s, "data {data_hash}");
    let _ = writeln!(s, "epsilon {:?}", d.epsilon);
    let _ = writeln!(s, "alpha {:?}", d.alpha);
    let _ = writeln!(s, "window_len {}", d.windows.window_len);
    let _ = writeln!(s, "n {n}");
    let _ = writeln!(s, "n_eig {}", d.eigenvalues.len());
    let sel: Vec<String> = d.selected.iter().map(|k| k.to_string()).collect();
    let _ = writeln!(s, "selected {}", sel.join(" "));
    let _ = writeln!(s, "eigenvalues {}", join(d.eigenvalues.iter().copied()));
    for v in &d.eigenvectors {
        let _ = writeln!(s, "eigenvector {}", join(v.iter().copied()));
    }
    let _ = writeln!(s, "p {}", join(d.p.iter().copied()));
    for (i, (ti, start)) in d.windows.provenance.iter().enumerate() {
        let _ = writeln!(s, "window {ti} {start} {}", join(d.windows.row(i).iter().copied()));
    }
    s
}

pub fn parse_dmap(text: &str, origin: &Path) -> CliResult<DmapArtifact> {
    let kv = KeyValues::parse(text, DMAP_MAGIC, origin)?;
    let n = kv.usize("n")?;
    let n_eig = kv.usize("n_eig")?;
    let l = kv.usize("window_len")?;
    let eigenvalues = expect_len(kv.floats("eigenvalues")?, n_eig, "eigenvalues", origin)?;
    let eigenvectors = kv.float_rows("eigenvector")?;
    if eigenvectors.len() != n_eig || eigenvectors.iter().any(|v| v.len() != n) {
        return Err(CliError::parse(origin, format!("expected {n_eig} eigenvectors of length {n}")));
    }
    let selected = kv
        .str("selected")?
        .split_whitespace()
        .map(|x| x.parse::<usize>().ok().filter(|&k| k < n_eig))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| CliError::parse(origin, "bad `selected` list"))?;
    let p = expect_len(kv.floats("p")?, n, "p", origin)?;
    let rows = kv.float_rows("window")?;
    if rows.len() != n || rows.iter().any(|r| r.len() != l + 2) {
        return Err(CliError::parse(origin, format!("expected {n} windows of length {l}")));
    }
    let provenance = rows.iter().map(|r| (r[0] as usize, r[1] as usize)).collect();
    let data: Vec<f64> = rows.iter().flat_map(|r| r[2..].iter().copied()).collect();
    let windows = WindowSet {
        window_len: l,
        windows: Matrix::from_rows(n, l, data).map_err(|e| CliError::parse(origin, e.to_string()))?,
        provenance,
    };
    let dmap = DiffusionMap { epsilon: kv.f64("epsilon")?, alpha: kv.f64("alpha")?, eigenvalues, eigenvectors, selected, windows, p };
    Ok(DmapArtifact { dmap, data_hash: kv.str("data")?.to_string() })
}

// ---------------------------------------------------------------- geometric harmonics

const GH_MAGIC: &str = "coldstart-gh v1";

pub struct GhArtifact {
    pub gh: GeometricHarmonics,
    pub dmap_hash: String,
    pub model_hash: String,
    pub maturity: usize,
}

fn standardize_name(s: Standardize) -> &'static str {
    match s {
        Standardize::None => "none",
        Standardize::Scale => "scale",
        Standardize::MeanScale => "mean-scale",
    }
}

pub fn gh_text(gh: &GeometricHarmonics, dmap_hash: &str, model_hash: &str, maturity: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{GH_MAGIC}");
    let _ = writeln!(s, "dmap {dmap_hash}");
    let _ = writeln!(s, "model {model_hash}");
    let _ = writeln!(s, "maturity {maturity}");
    let _ = writeln!(s, "epsilon_star {:?}", gh.epsilon_star);
    let _ = writeln!(s, "delta {:?}", gh.delta);
    let _ = writeln!(s, "m {}", gh.phi.len());
    let _ = writeln!(s, "d {}", gh.phi.first().map_or(0, |p| p.len()));
    let _ = writeln!(s, "q {}", gh.offset.len());
    let _ = writeln!(s, "kept {}", gh.sigma.len());
    let _ = writeln!(s, "sigma {}", join(gh.sigma.iter().copied()));
    for p in &gh.psi {
        let _ = writeln!(s, "psi {}", join(p.iter().copied()));
    }
    for c in &gh.coefficients {
        let _ = writeln!(s, "coefficients {}", join(c.iter().copied()));
    }
    for p in &gh.phi {
        let _ = writeln!(s, "phi {}", join(p.iter().copied()));
    }
    let _ = writeln!(s, "offset {}", join(gh.offset.iter().copied()));
    let _ = writeln!(s, "scale {}", join(gh.scale.iter().copied()));
    s
}

/// The standardization mode is implied by the stored offsets and scales, so
/// only its name is informational.
pub fn standardize_label(s: Standardize) -> &'static str {
    standardize_name(s)
}

pub fn parse_gh(text: &str, origin: &Path) -> CliResult<GhArtifact> {
    let kv = KeyValues::parse(text, GH_MAGIC, origin)?;
    let (m, d, q, kept) = (kv.usize("m")?, kv.usize("d")?, kv.usize("q")?, kv.usize("kept")?);
    let sigma = expect_len(kv.floats("sigma")?, kept, "sigma", origin)?;
    let psi = kv.float_rows("psi")?;
    let coefficients = kv.float_rows("coefficients")?;
    let phi = kv.float_rows("phi")?;
    let shapes_ok = psi.len() == kept
        && psi.iter().all(|p| p.len() == m)
        && coefficients.len() == kept
        && coefficients.iter().all(|c| c.len() == q)
        && phi.len() == m
        && phi.iter().all(|p| p.len() == d);
    if !shapes_ok {
        return Err(CliError::parse(origin, "inconsistent harmonics shapes"));
    }
    let gh = GeometricHarmonics {
        epsilon_star: kv.f64("epsilon_star")?,
        delta: kv.f64("delta")?,
        sigma,
        psi,
        coefficients,
        phi,
        offset: expect_len(kv.floats("offset")?, q, "offset", origin)?,
        scale: expect_len(kv.floats("scale")?, q, "scale", origin)?,
    };
    Ok(GhArtifact {
        gh,
        dmap_hash: kv.str("dmap")?.to_string(),
        model_hash: kv.str("model")?.to_string(),
        maturity: kv.usize("maturity")?,
    })
}

// ---------------------------------------------------------------- latent model

const LATENT_MAGIC: &str = "coldstart-latent v1";

pub struct LatentArtifact {
    pub model: LatentModel,
    pub dmap_hash: String,
}

pub fn latent_text(m: &LatentModel, dmap_hash: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{LATENT_MAGIC}");
    let _ = writeln!(s, "dmap {dmap_hash}");
    let widths: Vec<String> = coldstart_core::latent::WIDTHS.iter().map(|w| w.to_string()).collect();
    let _ = writeln!(s, "widths {}", widths.join(" "));
    let _ = writeln!(s, "in_mean {}", join(m.in_mean));
    let _ = writeln!(s, "in_std {}", join(m.in_std));
    let _ = writeln!(s, "out_mean {}", join(m.out_mean));
    let _ = writeln!(s, "out_std {}", join(m.out_std));
    let _ = writeln!(s, "params {}", join(m.params().iter().copied()));
    s
}

pub fn parse_latent(text: &str, origin: &Path) -> CliResult<LatentArtifact> {
    let kv = KeyValues::parse(text, LATENT_MAGIC, origin)?;
    let widths: Vec<usize> = kv.str("widths")?.split_whitespace().filter_map(|w| w.parse().ok()).collect();
    if widths != coldstart_core::latent::WIDTHS {
        return Err(CliError::parse(origin, "unsupported layer widths"));
    }
    let model = LatentModel::from_parts(
        kv.floats("params")?,
        pair(kv.floats("in_mean")?, "in_mean", origin)?,
        pair(kv.floats("in_std")?, "in_std", origin)?,
        pair(kv.floats("out_mean")?, "out_mean", origin)?,
        pair(kv.floats("out_std")?, "out_std", origin)?,
    )
    .map_err(|e| CliError::parse(origin, e.to_string()))?;
    Ok(LatentArtifact { model, dmap_hash: kv.str("dmap")?.to_string() })
}
