//! Text formats for matrices and instance manifests.
//!
//! Matrix files are bit-stable: the header line holds `rows cols`, then one
//! row per line with entries printed to 17 significant digits, so write ->
//! read -> write reproduces the bytes exactly.

use super::Instance;
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use std::fmt::Write as _;
use std::path::Path;

pub fn format_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row = m.row(i);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let mut hp = header.split_whitespace();
    let rows: usize = hp
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse("bad matrix header".into()))?;
    let cols: usize = hp
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse("bad matrix header".into()))?;
    let mut data = Vec::with_capacity(rows * cols);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if i >= rows {
            return Err(Error::Parse("too many matrix rows".into()));
        }
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::Parse(format!("bad entry {tok:?} in row {i}")))?;
            data.push(v);
        }
    }
    if data.len() != rows * cols {
        return Err(Error::Parse(format!(
            "matrix body has {} entries, want {}",
            data.len(),
            rows * cols
        )));
    }
    Ok(Matrix::from_vec(rows, cols, data))
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    std::fs::write(path, format_matrix(m))?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix(&text)
}

/// Names the matrix files of a generated instance plus its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceManifest {
    pub x_file: String,
    pub a_file: String,
    pub e_file: String,
    pub u_file: String,
    pub v_file: String,
    pub activation: String,
    pub noise: String,
    pub seed: u64,
    pub kappa_u: f64,
    pub kappa_v: f64,
    pub k: usize,
}

impl InstanceManifest {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "x {}", self.x_file);
        let _ = writeln!(out, "a {}", self.a_file);
        let _ = writeln!(out, "e {}", self.e_file);
        let _ = writeln!(out, "u {}", self.u_file);
        let _ = writeln!(out, "v {}", self.v_file);
        let _ = writeln!(out, "activation {}", self.activation);
        let _ = writeln!(out, "noise {}", self.noise);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "k {}", self.k);
        let _ = writeln!(out, "kappa_u {:.16e}", self.kappa_u);
        let _ = writeln!(out, "kappa_v {:.16e}", self.kappa_v);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut fields = std::collections::BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once(' ')
                .ok_or_else(|| Error::Parse(format!("bad manifest line {line:?}")))?;
            fields.insert(key.to_string(), value.trim().to_string());
        }
        let get = |k: &str| -> Result<String> {
            fields
                .get(k)
                .cloned()
                .ok_or_else(|| Error::Parse(format!("manifest missing key {k:?}")))
        };
        Ok(InstanceManifest {
            x_file: get("x")?,
            a_file: get("a")?,
            e_file: get("e")?,
            u_file: get("u")?,
            v_file: get("v")?,
            activation: get("activation")?,
            noise: get("noise")?,
            seed: get("seed")?
                .parse()
                .map_err(|_| Error::Parse("bad seed".into()))?,
            k: get("k")?.parse().map_err(|_| Error::Parse("bad k".into()))?,
            kappa_u: get("kappa_u")?
                .parse()
                .map_err(|_| Error::Parse("bad kappa_u".into()))?,
            kappa_v: get("kappa_v")?
                .parse()
                .map_err(|_| Error::Parse("bad kappa_v".into()))?,
        })
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Writes the five matrix files plus `manifest.txt` into `dir`.
pub fn write_instance(dir: &Path, inst: &Instance, seed: u64) -> Result<InstanceManifest> {
    std::fs::create_dir_all(dir)?;
    write_matrix(&dir.join("X.mat"), &inst.x)?;
    write_matrix(&dir.join("A.mat"), &inst.a)?;
    write_matrix(&dir.join("E.mat"), &inst.e)?;
    write_matrix(&dir.join("U.mat"), &inst.weights.u)?;
    write_matrix(&dir.join("V.mat"), &inst.weights.v)?;
    let manifest = InstanceManifest {
        x_file: "X.mat".into(),
        a_file: "A.mat".into(),
        e_file: "E.mat".into(),
        u_file: "U.mat".into(),
        v_file: "V.mat".into(),
        activation: inst.activation.name(),
        noise: inst.noise.describe(),
        seed,
        kappa_u: crate::numerics::cond_number(&inst.weights.u).unwrap_or(f64::INFINITY),
        kappa_v: crate::numerics::cond_number(&inst.weights.v).unwrap_or(f64::INFINITY),
        k: inst.weights.k(),
    };
    manifest.write_to(&dir.join("manifest.txt"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gaussian_matrix;
    use crate::rng::SeedStream;
    use proptest::prelude::*;

    #[test]
    fn matrix_text_roundtrip_bit_stable() {
        let mut s = SeedStream::new(21);
        let m = gaussian_matrix(4, 3, 0.0, 10.0, &mut s);
        let t1 = format_matrix(&m);
        let back = parse_matrix(&t1).unwrap();
        assert_eq!(m, back);
        assert_eq!(t1, format_matrix(&back));
    }

    #[test]
    fn manifest_roundtrip() {
        let m = InstanceManifest {
            x_file: "X.mat".into(),
            a_file: "A.mat".into(),
            e_file: "E.mat".into(),
            u_file: "U.mat".into(),
            v_file: "V.mat".into(),
            activation: "power(2)".into(),
            noise: "gaussian:0.25".into(),
            seed: 77,
            kappa_u: 3.5,
            kappa_v: 1.25,
            k: 2,
        };
        assert_eq!(InstanceManifest::from_text(&m.to_text()).unwrap(), m);
    }

    #[test]
    fn parse_rejects_bad_bodies() {
        assert!(parse_matrix("").is_err());
        assert!(parse_matrix("2 2\n1 2\n3").is_err());
        assert!(parse_matrix("1 2\n1 fish").is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_exact_for_arbitrary_floats(values in proptest::collection::vec(-1e12f64..1e12, 1..40)) {
            let m = Matrix::from_vec(values.len(), 1, values);
            let back = parse_matrix(&format_matrix(&m)).unwrap();
            prop_assert_eq!(m, back);
        }
    }
}
