//! Datasets: seeded generation, simplex normalisation and vector files.
//!
//! Random data comes from ChaCha8 (`rand_chacha`) seeded with a `u64`, which
//! yields the same stream on every platform. Components are drawn as `f32`
//! uniforms on `[0, 1)` and widened to `f64`, so generated datasets survive
//! the 32-bit binary format bit for bit.
//!
//! Two file formats are supported:
//!
//! * text: one vector per line, whitespace-separated decimals, with an
//!   optional `# dim=<d> count=<n>` header. Other `#` lines are comments.
//! * binary: the magic bytes `HLBX1`, a little-endian `u32` dimension, a
//!   little-endian `u64` count, then `count × dim` little-endian `f32`s.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{input, Error, Result};
use crate::metrics::{normalize_to_simplex, Metric};

pub const BINARY_MAGIC: &[u8; 5] = b"HLBX1";

/// The generator behind every seeded operation in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A set of vectors sharing one dimension, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    data: Vec<f64>,
    label: String,
    seed: Option<u64>,
}

impl Dataset {
    /// Wraps row-major data. Every component must be finite.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return input("dimension must be at least 1");
        }
        if data.len() % dim != 0 {
            return input(format!("{} values do not split into rows of {dim}", data.len()));
        }
        if let Some(i) = data.iter().position(|c| !c.is_finite()) {
            return input(format!("row {} holds a non-finite value", i / dim));
        }
        Ok(Dataset {
            dim,
            data,
            label: String::new(),
            seed: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = match rows.first() {
            Some(r) => r.as_ref().len(),
            None => return input("no rows"),
        };
        let mut data = Vec::with_capacity(dim * rows.len());
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return input(format!("row {i} has {} values, expected {dim}", r.len()));
            }
            data.extend_from_slice(r);
        }
        Self::from_flat(dim, data)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Seed the dataset was generated from, if it was generated.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Copies the listed rows, in order, into a new dataset.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Dataset {
            dim: self.dim,
            data,
            label: self.label.clone(),
            seed: self.seed,
        }
    }

    /// Checks every row is a legal point for `metric`.
    pub fn validate_for(&self, metric: &Metric) -> Result<()> {
        for (i, r) in self.rows().enumerate() {
            metric
                .validate(r)
                .map_err(|e| Error::Input(format!("row {i}: {e}")))?;
        }
        Ok(())
    }
}

/// `n` vectors with i.i.d. uniform components on `[0, 1)`.
pub fn gen_uniform(n: usize, dim: usize, seed: u64) -> Result<Dataset> {
    if n == 0 || dim == 0 {
        return input("need at least one vector of at least one dimension");
    }
    let mut rng = seeded_rng(seed);
    let data = (0..n * dim).map(|_| f64::from(rng.gen::<f32>())).collect();
    let mut d = Dataset::from_flat(dim, data)?;
    d.seed = Some(seed);
    Ok(d)
}

/// Normalises every row to sum to 1.
pub fn to_simplex(d: &Dataset) -> Result<Dataset> {
    let mut data = Vec::with_capacity(d.data.len());
    for (i, r) in d.rows().enumerate() {
        let v = normalize_to_simplex(r).map_err(|e| Error::Input(format!("row {i}: {e}")))?;
        data.extend_from_slice(&v);
    }
    Ok(Dataset {
        dim: d.dim,
        data,
        label: d.label.clone(),
        seed: d.seed,
    })
}

/// A named synthetic space such as `euc_10` or `jsd_12`: a metric plus the
/// dimension of the unit hypercube data is drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    pub metric: Metric,
    pub dim: usize,
}

impl Space {
    pub fn new(metric: Metric, dim: usize) -> Self {
        Space { metric, dim }
    }

    pub fn label(&self) -> String {
        format!("{}_{}", self.metric.name(), self.dim)
    }

    /// Uniform hypercube data, projected onto the simplex when the metric
    /// needs probability vectors.
    pub fn generate(&self, n: usize, seed: u64) -> Result<Dataset> {
        let d = gen_uniform(n, self.dim, seed)?;
        let d = if self.metric.requires_simplex() {
            to_simplex(&d)?
        } else {
            d
        };
        Ok(d.with_label(self.label()))
    }

    /// Readies loaded data for the metric. Simplex rows are renormalised,
    /// since the binary format rounds them to `f32`.
    pub fn prepare(&self, d: Dataset) -> Result<Dataset> {
        if d.dim() != self.dim {
            return input(format!("space {} expects dimension {}, data has {}", self.label(), self.dim, d.dim()));
        }
        let d = if self.metric.requires_simplex() {
            to_simplex(&d)?
        } else {
            d
        };
        d.validate_for(&self.metric)?;
        Ok(d.with_label(self.label()))
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (metric, dim) = s
            .rsplit_once('_')
            .ok_or_else(|| Error::Input(format!("expected <metric>_<dim>, got {s:?}")))?;
        let dim: usize = dim
            .parse()
            .map_err(|_| Error::Input(format!("bad dimension in space {s:?}")))?;
        if dim == 0 {
            return input("dimension must be at least 1");
        }
        Ok(Space::new(metric.parse()?, dim))
    }
}

/// On-disk vector format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Binary,
}

impl Format {
    /// `.bin` and `.hlbx` files are binary, anything else is text.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("hlbx") => Format::Binary,
            _ => Format::Text,
        }
    }
}

/// Writes `d` in the given format. Binary output rounds to `f32`.
pub fn save_vectors(d: &Dataset, path: &Path, format: Format) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        Format::Text => write_text(d, &mut w)?,
        Format::Binary => write_binary(d, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

/// Reads a vector file, recognising the binary format by its magic bytes.
pub fn load_vectors(path: &Path) -> Result<Dataset> {
    let mut f = BufReader::new(File::open(path)?);
    let is_binary = f.fill_buf()?.starts_with(BINARY_MAGIC);
    let d = if is_binary {
        read_binary(&mut f)?
    } else {
        read_text(f, path)?
    };
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(d.with_label(label))
}

pub fn write_text<W: Write>(d: &Dataset, w: &mut W) -> Result<()> {
    writeln!(w, "# dim={} count={}", d.dim(), d.len())?;
    for r in d.rows() {
        let mut first = true;
        for c in r {
            if !first {
                w.write_all(b" ")?;
            }
            first = false;
            // shortest representation that parses back to the same f64
            write!(w, "{c}")?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn parse_header(line: &str) -> Option<(Option<usize>, Option<usize>)> {
    let body = line.strip_prefix('#')?.trim();
    let mut dim = None;
    let mut count = None;
    for tok in body.split_whitespace() {
        let (k, v) = tok.split_once('=')?;
        match k {
            "dim" => dim = Some(v.parse().ok()?),
            "count" => count = Some(v.parse().ok()?),
            _ => return None,
        }
    }
    (dim.is_some() || count.is_some()).then_some((dim, count))
}

pub fn read_text<R: BufRead>(r: R, path: &Path) -> Result<Dataset> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut dim: Option<usize> = None;
    let mut declared_count = None;
    let mut data = Vec::new();
    let mut rows = 0usize;
    let mut last_line = 0;
    for (i, line) in r.lines().enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            if rows == 0 {
                if let Some((d, c)) = parse_header(trimmed) {
                    dim = d.or(dim);
                    declared_count = c;
                }
            }
            continue;
        }
        let before = data.len();
        for tok in trimmed.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| err(lineno, format!("not a number: {tok:?}")))?;
            if !v.is_finite() {
                return Err(err(lineno, format!("non-finite value {tok:?}")));
            }
            data.push(v);
        }
        let width = data.len() - before;
        match dim {
            None => dim = Some(width),
            Some(d) if d != width => {
                return Err(err(lineno, format!("expected {d} values, found {width}")));
            }
            Some(_) => {}
        }
        rows += 1;
    }
    let dim = match dim {
        Some(d) if rows > 0 => d,
        _ => return Err(err(last_line.max(1), "no vectors in file".into())),
    };
    if let Some(c) = declared_count {
        if c != rows {
            return Err(err(last_line, format!("header declares {c} vectors, found {rows}")));
        }
    }
    Dataset::from_flat(dim, data)
}

pub fn write_binary<W: Write>(d: &Dataset, w: &mut W) -> Result<()> {
    let dim = u32::try_from(d.dim()).map_err(|_| Error::Input("dimension exceeds u32".into()))?;
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&dim.to_le_bytes())?;
    w.write_all(&(d.len() as u64).to_le_bytes())?;
    for &c in d.as_flat() {
        w.write_all(&(c as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(r: &mut R) -> Result<Dataset> {
    let mut header = [0u8; 17];
    r.read_exact(&mut header)
        .map_err(|_| Error::Input("binary file shorter than its header".into()))?;
    if &header[..5] != BINARY_MAGIC {
        return input("missing HLBX1 magic");
    }
    let dim = u32::from_le_bytes(header[5..9].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(header[9..17].try_into().unwrap()) as usize;
    if dim == 0 || count == 0 {
        return input("binary file holds no vectors");
    }
    let n = dim
        .checked_mul(count)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Input("binary header sizes overflow".into()))?;
    let mut bytes = Vec::with_capacity(n);
    r.read_to_end(&mut bytes)?;
    if bytes.len() != n {
        return input(format!("expected {n} payload bytes, found {}", bytes.len()));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|b| f64::from(f32::from_le_bytes(b.try_into().unwrap())))
        .collect();
    Dataset::from_flat(dim, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn text(s: &str) -> Result<Dataset> {
        read_text(Cursor::new(s), Path::new("mem"))
    }

    #[test]
    fn uniform_examples() {
        let d = gen_uniform(1, 1, 3).unwrap();
        assert_eq!(d.len(), 1);
        assert!((0.0..1.0).contains(&d.row(0)[0]));
        assert_eq!(gen_uniform(100, 4, 9).unwrap(), gen_uniform(100, 4, 9).unwrap());
        assert_ne!(gen_uniform(100, 4, 9).unwrap(), gen_uniform(100, 4, 10).unwrap());
        assert!(gen_uniform(0, 4, 1).is_err());
    }

    #[test]
    fn simplex_examples() {
        let d = Dataset::from_rows(&[[0.2, 0.2]]).unwrap();
        assert_eq!(to_simplex(&d).unwrap().row(0), &[0.5, 0.5]);
        let g = to_simplex(&gen_uniform(500, 7, 1).unwrap()).unwrap();
        for r in g.rows() {
            assert!((r.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        let again = to_simplex(&g).unwrap();
        for (a, b) in g.as_flat().iter().zip(again.as_flat()) {
            assert!((a - b).abs() <= 1e-15);
        }
        let zero = Dataset::from_rows(&[[0.0, 0.0]]).unwrap();
        assert!(to_simplex(&zero).is_err());
    }

    #[test]
    fn text_examples() {
        let d = text("1 2 3\n4 5 6\n").unwrap();
        assert_eq!((d.len(), d.dim()), (2, 3));
        assert_eq!(d.row(1), &[4.0, 5.0, 6.0]);

        match text("1 2\n3\n") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match text("1 2\n3 x\n") {
            Err(Error::Parse { line: 2, msg, .. }) => assert!(msg.contains("x")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(text(""), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(text("# dim=3 count=1\n"), Err(Error::Parse { .. })));
        assert!(matches!(text("1 nan\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn text_header_is_checked() {
        let d = text("# dim=2 count=2\n# a comment\n1 2\n\n3 4\n").unwrap();
        assert_eq!(d.len(), 2);
        assert!(matches!(text("# dim=3 count=1\n1 2\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(text("# dim=2 count=3\n1 2\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn binary_layout_is_exact() {
        let d = Dataset::from_rows(&[[1.0, 0.5], [-2.0, 0.25]]).unwrap();
        let mut buf = Vec::new();
        write_binary(&d, &mut buf).unwrap();
        let mut expect = b"HLBX1".to_vec();
        expect.extend_from_slice(&2u32.to_le_bytes());
        expect.extend_from_slice(&2u64.to_le_bytes());
        for v in [1.0f32, 0.5, -2.0, 0.25] {
            expect.extend_from_slice(&v.to_le_bytes());
        }
        assert_eq!(buf, expect);
        assert_eq!(read_binary(&mut Cursor::new(&buf)).unwrap(), d);
        assert!(read_binary(&mut Cursor::new(&buf[..buf.len() - 1])).is_err());
        assert!(read_binary(&mut Cursor::new(b"HLBX2")).is_err());
    }

    #[test]
    fn space_labels() {
        let s: Space = "jsd_12".parse().unwrap();
        assert_eq!(s, Space::new(Metric::JensenShannon, 12));
        assert_eq!(s.label(), "jsd_12");
        let p: Space = "pow:euc:0.5_3".parse().unwrap();
        assert_eq!(p.dim, 3);
        assert_eq!(p.label(), "pow:euc:0.5_3");
        assert!("euc".parse::<Space>().is_err());
        assert!("euc_0".parse::<Space>().is_err());
        assert!("nope_3".parse::<Space>().is_err());
    }

    #[test]
    fn generated_simplex_space_is_valid() {
        let d = "tri_6".parse::<Space>().unwrap().generate(200, 5).unwrap();
        assert_eq!(d.label(), "tri_6");
        d.validate_for(&Metric::Triangular).unwrap();
    }
}
