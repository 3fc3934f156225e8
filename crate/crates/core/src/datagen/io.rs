use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::planted::{planted_instance, PlantedInstance, PlantedParams};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix};
use crate::truncation::SupportSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixFormat {
    /// Plain numeric rows.
    #[default]
    Csv,
    /// A header row and a leading label column, both dropped.
    LabeledCsv,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    pub format: MatrixFormat,
    /// Skip the first line (always done for `LabeledCsv`).
    pub header: bool,
    /// Subtract column means.
    pub center: bool,
    /// Return `XᵀX/n` instead of `X`.
    pub covariance: bool,
}

pub fn load_matrix(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Matrix> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_matrix(file, path, opts)
}

/// Parses CSV from any reader; `path` is only used in error messages.
pub fn read_matrix<R: Read>(reader: R, path: &Path, opts: &LoadOptions) -> Result<Matrix> {
    let labeled = opts.format == MatrixFormat::LabeledCsv;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.header || labeled)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let skip = usize::from(labeled);
    let parse_err = |line: usize, column: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message,
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let fields: Vec<&str> = rec.iter().skip(skip).collect();
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(parse_err(
                    line,
                    fields.len().min(w) + 1 + skip,
                    format!("expected {w} fields, found {}", fields.len()),
                ));
            }
            _ => {}
        }
        let mut row = Vec::with_capacity(fields.len());
        for (j, f) in fields.iter().enumerate() {
            let v: f64 = f
                .parse()
                .map_err(|_| parse_err(line, j + 1 + skip, format!("not a number: {f:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(line, j + 1 + skip, format!("non-finite value {f:?}")));
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::Empty);
    }
    let mut x = Matrix::from_rows(&rows)?;
    if opts.center {
        let n = x.rows() as f64;
        for j in 0..x.cols() {
            let col = x.col_mut(j);
            let mean = col.iter().sum::<f64>() / n;
            col.iter_mut().for_each(|v| *v -= mean);
        }
    }
    if opts.covariance {
        let n = x.rows() as f64;
        x = SymMatrix::gram(&x, 1.0 / n).into_matrix();
    }
    Ok(x)
}

pub fn write_matrix_csv(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix(&mut w, m)?;
    w.flush()?;
    Ok(())
}

/// One row per line; `{}` formatting of `f64` round-trips exactly.
pub fn write_matrix<W: Write>(w: &mut W, m: &Matrix) -> Result<()> {
    for i in 0..m.rows() {
        let line: Vec<String> = (0..m.cols()).map(|j| m[(i, j)].to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

const INSTANCE_JSON: &str = "instance.json";

#[derive(Debug, Serialize, Deserialize)]
struct InstanceManifest {
    params: PlantedParams,
    supports: Vec<Vec<usize>>,
    files: [String; 4],
}

/// Writes `instance.json` plus `a_bar.csv`, `e.csv`, `a.csv` and `truth.csv`.
pub fn dump_instance(dir: impl AsRef<Path>, inst: &PlantedInstance) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let files = ["a_bar.csv", "e.csv", "a.csv", "truth.csv"].map(String::from);
    write_matrix_csv(dir.join(&files[0]), inst.a_bar.as_matrix())?;
    write_matrix_csv(dir.join(&files[1]), inst.e.as_matrix())?;
    write_matrix_csv(dir.join(&files[2]), inst.a.as_matrix())?;
    write_matrix_csv(dir.join(&files[3]), inst.truth.matrix())?;
    let manifest = InstanceManifest {
        params: inst.params.clone(),
        supports: inst.supports.iter().map(|s| s.indices().to_vec()).collect(),
        files,
    };
    fs::write(dir.join(INSTANCE_JSON), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

/// Reads a bundle written by [`dump_instance`].
pub fn load_instance(dir: impl AsRef<Path>) -> Result<PlantedInstance> {
    let dir = dir.as_ref();
    let manifest: InstanceManifest = serde_json::from_str(&fs::read_to_string(dir.join(INSTANCE_JSON))?)?;
    let opts = LoadOptions::default();
    let read_sym = |f: &str| -> Result<SymMatrix> { SymMatrix::new(load_matrix(dir.join(f), &opts)?) };
    let p = manifest.params.p;
    let supports = manifest
        .supports
        .into_iter()
        .map(|s| SupportSet::new(s, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(PlantedInstance {
        a_bar: read_sym(&manifest.files[0])?,
        e: read_sym(&manifest.files[1])?,
        a: read_sym(&manifest.files[2])?,
        truth: crate::subspace::Basis::orthonormal(load_matrix(dir.join(&manifest.files[3]), &opts)?)?,
        supports,
        params: manifest.params,
    })
}

/// Regenerates the instance from the parameters stored in a bundle.
pub fn regenerate_instance(dir: impl AsRef<Path>) -> Result<PlantedInstance> {
    let manifest: InstanceManifest = serde_json::from_str(&fs::read_to_string(dir.as_ref().join(INSTANCE_JSON))?)?;
    planted_instance(&manifest.params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::OverlapCase;
    use crate::rng::{gaussian_matrix, seeded};
    use proptest::prelude::*;

    fn parse(s: &str, opts: LoadOptions) -> Result<Matrix> {
        read_matrix(s.as_bytes(), Path::new("mem.csv"), &opts)
    }

    #[test]
    fn plain_two_by_two() {
        let m = parse("1,2\n3,4\n", LoadOptions::default()).unwrap();
        assert_eq!(m.to_rows(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }

    #[test]
    fn header_skipped_on_request() {
        let opts = LoadOptions {
            header: true,
            ..Default::default()
        };
        let m = parse("a,b\n1,2\n", opts).unwrap();
        assert_eq!(m.to_rows(), vec![vec![1.0, 2.0]]);
        assert!(matches!(
            parse("a,b\n1,2\n", LoadOptions::default()),
            Err(Error::Parse { line: 1, column: 1, .. })
        ));
    }

    #[test]
    fn labeled_rows() {
        let opts = LoadOptions {
            format: MatrixFormat::LabeledCsv,
            ..Default::default()
        };
        let m = parse("id,x,y\nr1,1,2\nr2,3,4\n", opts).unwrap();
        assert_eq!(m.to_rows(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }

    #[test]
    fn errors_report_position() {
        match parse("1,2\n3,x\n", LoadOptions::default()) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 2)),
            other => panic!("{other:?}"),
        }
        match parse("1,2\n3\n", LoadOptions::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn centering_and_covariance() {
        let opts = LoadOptions {
            center: true,
            covariance: true,
            ..Default::default()
        };
        let c = parse("1,0\n3,2\n", opts).unwrap();
        assert_eq!(c.to_rows(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn instance_bundle_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let inst = planted_instance(&PlantedParams::simulation(25, OverlapCase::Partial, 0.1, 5)).unwrap();
        dump_instance(dir.path(), &inst).unwrap();
        let back = load_instance(dir.path()).unwrap();
        assert_eq!(back.a, inst.a);
        assert_eq!(back.truth.matrix(), inst.truth.matrix());
        assert_eq!(back.supports, inst.supports);
        assert_eq!(regenerate_instance(dir.path()).unwrap().a, inst.a);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn write_read_round_trip(seed in any::<u64>(), r in 1usize..8, c in 1usize..8) {
            let m = gaussian_matrix(&mut seeded(seed), r, c).scale(1e3);
            let mut buf = Vec::new();
            write_matrix(&mut buf, &m).unwrap();
            let back = read_matrix(buf.as_slice(), Path::new("mem"), &LoadOptions::default()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
