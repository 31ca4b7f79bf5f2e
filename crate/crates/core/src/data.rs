//! Iris ingestion, binary class selection, stratified splitting and scaling.

use std::f64::consts::{FRAC_PI_4, PI};
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const IRIS_HEADER: [&str; 5] = [
    "sepal_length",
    "sepal_width",
    "petal_length",
    "petal_width",
    "species",
];

/// The canonical 150-row Iris table shipped with the crate.
pub const BUNDLED_IRIS: &str = include_str!("../data/iris.csv");

/// Raw rows as loaded: four measurements (cm) and a species name per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub species: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn species_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for s in &self.species {
            if !names.contains(&s.as_str()) {
                names.push(s);
            }
        }
        names
    }
}

/// Binary-labelled samples. `rows` are indices into the originating [`Dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSet {
    pub rows: Vec<usize>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<i8>,
}

impl LabeledSet {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<i8>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::data(format!(
                "{} samples but {} labels",
                features.len(),
                labels.len()
            )));
        }
        crate::svm::check_labels(&labels)?;
        Ok(Self {
            rows: (0..features.len()).collect(),
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Same samples with features replaced (e.g. after scaling).
    pub fn with_features(&self, features: Vec<Vec<f64>>) -> Self {
        assert_eq!(features.len(), self.len());
        Self {
            rows: self.rows.clone(),
            features,
            labels: self.labels.clone(),
        }
    }

    /// Subset at the given source-row ids, in the order given.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut out = Self {
            rows: Vec::with_capacity(rows.len()),
            features: Vec::with_capacity(rows.len()),
            labels: Vec::with_capacity(rows.len()),
        };
        for &r in rows {
            let pos = self
                .rows
                .iter()
                .position(|&x| x == r)
                .ok_or_else(|| Error::data(format!("row {r} is not part of the dataset")))?;
            out.rows.push(r);
            out.features.push(self.features[pos].clone());
            out.labels.push(self.labels[pos]);
        }
        Ok(out)
    }
}

pub fn load_iris(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::ingestion(path.display().to_string(), format!("cannot open: {e}")))?;
    parse_iris(file, &path.display().to_string())
}

pub fn bundled_iris() -> Dataset {
    parse_iris(BUNDLED_IRIS.as_bytes(), "bundled iris.csv").expect("bundled dataset is well formed")
}

/// Parses Iris CSV from any reader; `source` names it in error messages.
pub fn parse_iris<R: Read>(input: R, source: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(Error::ingestion(source, "file is empty")),
        Some(r) => r.map_err(|e| Error::ingestion(format!("{source}:1"), e.to_string()))?,
    };
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != IRIS_HEADER {
        return Err(Error::ingestion(
            format!("{source}:1"),
            format!(
                "expected header `{}`, found `{}`",
                IRIS_HEADER.join(","),
                got.join(",")
            ),
        ));
    }

    let mut ds = Dataset {
        features: Vec::new(),
        species: Vec::new(),
    };
    for record in records {
        let record = record.map_err(|e| Error::ingestion(source, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let loc = || format!("{source}:{line}");
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != IRIS_HEADER.len() {
            return Err(Error::ingestion(
                loc(),
                format!(
                    "expected {} columns, found {}",
                    IRIS_HEADER.len(),
                    record.len()
                ),
            ));
        }
        let mut row = Vec::with_capacity(4);
        for (col, field) in record.iter().take(4).enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::ingestion(
                    loc(),
                    format!("{}: `{field}` is not a number", IRIS_HEADER[col]),
                )
            })?;
            if !v.is_finite() {
                return Err(Error::ingestion(
                    loc(),
                    format!("{}: value is not finite", IRIS_HEADER[col]),
                ));
            }
            row.push(v);
        }
        let species = record[4].trim();
        if species.is_empty() {
            return Err(Error::ingestion(loc(), "species is empty"));
        }
        ds.features.push(row);
        ds.species.push(species.to_string());
    }
    if ds.is_empty() {
        return Err(Error::ingestion(source, "no data rows"));
    }
    Ok(ds)
}

/// Keeps rows of two species, labelling `positive` +1 and `negative` -1.
pub fn select_binary(ds: &Dataset, positive: &str, negative: &str) -> Result<LabeledSet> {
    if positive == negative {
        return Err(Error::config(format!(
            "class pair must be distinct, got {positive} twice"
        )));
    }
    let names = ds.species_names();
    for name in [positive, negative] {
        if !names.contains(&name) {
            return Err(Error::config(format!(
                "unknown class `{name}` (available: {})",
                names.join(", ")
            )));
        }
    }
    let mut out = LabeledSet {
        rows: Vec::new(),
        features: Vec::new(),
        labels: Vec::new(),
    };
    for (i, (x, s)) in ds.features.iter().zip(&ds.species).enumerate() {
        let label = if s == positive {
            1
        } else if s == negative {
            -1
        } else {
            continue;
        };
        out.rows.push(i);
        out.features.push(x.clone());
        out.labels.push(label);
    }
    Ok(out)
}

/// Which rows went to each side of a split; enough to replay it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub test_fraction: f64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitManifest {
    pub fn apply(&self, set: &LabeledSet) -> Result<(LabeledSet, LabeledSet)> {
        Ok((set.select_rows(&self.train)?, set.select_rows(&self.test)?))
    }
}

/// Stratified split: per class, `floor(fraction · count)` rows go to test
/// after a seeded shuffle; the rest train. Row lists come back sorted.
pub fn split(
    set: &LabeledSet,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledSet, LabeledSet, SplitManifest)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::config(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [1i8, -1] {
        let mut members: Vec<usize> = set
            .labels
            .iter()
            .enumerate()
            .filter(|(_, &y)| y == class)
            .map(|(i, _)| set.rows[i])
            .collect();
        members.shuffle(&mut rng);
        // The epsilon keeps e.g. 0.3 · 50 from flooring to 14.
        let n_test = (test_fraction * members.len() as f64 + 1e-9).floor() as usize;
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    let manifest = SplitManifest {
        seed,
        test_fraction,
        train,
        test,
    };
    let (tr, te) = manifest.apply(set)?;
    Ok((tr, te, manifest))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMethod {
    /// `(x - mean) / std · π/4`.
    #[default]
    Standard,
    /// `(x - min) / (max - min) · π`, mapping the training range onto [0, π].
    MinMax,
}

/// Per-feature affine map fitted on training data only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub method: ScalingMethod,
    pub center: Vec<f64>,
    pub spread: Vec<f64>,
    pub factor: f64,
}

pub fn fit_scaler(xs: &[Vec<f64>], method: ScalingMethod) -> Result<Scaler> {
    let n = xs.len();
    if n == 0 {
        return Err(Error::data("cannot fit a scaler on an empty set"));
    }
    let f = xs[0].len();
    let mut center = Vec::with_capacity(f);
    let mut spread = Vec::with_capacity(f);
    for j in 0..f {
        let col = xs.iter().map(|x| x[j]);
        let (c, s) = match method {
            ScalingMethod::Standard => {
                let mean = col.clone().sum::<f64>() / n as f64;
                let var = col.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                (mean, var.sqrt())
            }
            ScalingMethod::MinMax => {
                let lo = col.clone().fold(f64::INFINITY, f64::min);
                let hi = col.fold(f64::NEG_INFINITY, f64::max);
                (lo, hi - lo)
            }
        };
        if s.is_nan() || s <= 0.0 {
            return Err(Error::data(format!(
                "feature {j} is constant on the training set"
            )));
        }
        center.push(c);
        spread.push(s);
    }
    let factor = match method {
        ScalingMethod::Standard => FRAC_PI_4,
        ScalingMethod::MinMax => PI,
    };
    Ok(Scaler {
        method,
        center,
        spread,
        factor,
    })
}

impl Scaler {
    pub fn apply(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        xs.iter()
            .map(|x| {
                if x.len() != self.center.len() {
                    return Err(Error::data(format!(
                        "sample has {} features, scaler expects {}",
                        x.len(),
                        self.center.len()
                    )));
                }
                Ok(x.iter()
                    .zip(&self.center)
                    .zip(&self.spread)
                    .map(|((v, c), s)| (v - c) / s * self.factor)
                    .collect())
            })
            .collect()
    }
}
