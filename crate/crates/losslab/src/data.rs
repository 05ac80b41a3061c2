//! Dataset ingestion and encoding.
//!
//! The loader takes comma-separated text with a header plus a [`Schema`]
//! naming one binary label column, the numeric columns and the categoric
//! columns. Numeric features are z-scored with the loaded set's own
//! statistics (population variance); categoric features are one-hot
//! encoded over the levels observed in the data, levels sorted
//! lexicographically so the encoding never depends on row order.
//!
//! Feature layout: numeric columns in schema order first, then each
//! categoric column's levels in sorted order.

use crate::error::{Error, Result};
use crate::rng::Rng;

/// One encoded row: a dense feature vector and a binary label.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSample {
    pub features: Vec<f64>,
    pub label: bool,
}

impl EncodedSample {
    #[inline]
    pub fn label_f64(&self) -> f64 {
        if self.label {
            1.0
        } else {
            0.0
        }
    }
}

/// Column roles for the CSV loader.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub label: String,
    pub numeric: Vec<String>,
    pub categoric: Vec<String>,
}

/// An encoded dataset plus the names of the produced feature slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<EncodedSample>,
    pub input_dim: usize,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn data_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Data(format!("line {line}: {msg}"))
}

/// Parse and encode CSV text under `schema`.
pub fn parse_csv(text: &str, schema: &Schema) -> Result<Dataset> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Data("empty input".into()))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let col_index = |name: &str| -> Result<usize> {
        columns
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::Data(format!("column '{name}' not found in header")))
    };

    let label_col = col_index(&schema.label)?;
    let numeric_cols: Vec<usize> =
        schema.numeric.iter().map(|n| col_index(n)).collect::<Result<_>>()?;
    let categoric_cols: Vec<usize> =
        schema.categoric.iter().map(|n| col_index(n)).collect::<Result<_>>()?;

    // first pass: raw values
    let mut raw_numeric: Vec<Vec<f64>> = vec![Vec::new(); numeric_cols.len()];
    let mut raw_categoric: Vec<Vec<String>> = vec![Vec::new(); categoric_cols.len()];
    let mut labels: Vec<bool> = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(data_err(
                lineno + 1,
                format!("expected {} fields, found {}", columns.len(), fields.len()),
            ));
        }
        labels.push(match fields[label_col] {
            "0" => false,
            "1" => true,
            other => return Err(data_err(lineno + 1, format!("label must be 0 or 1, got '{other}'"))),
        });
        for (slot, &c) in numeric_cols.iter().enumerate() {
            let v: f64 = fields[c]
                .parse()
                .map_err(|_| data_err(lineno + 1, format!("bad numeric value '{}'", fields[c])))?;
            if !v.is_finite() {
                return Err(data_err(lineno + 1, "non-finite numeric value"));
            }
            raw_numeric[slot].push(v);
        }
        for (slot, &c) in categoric_cols.iter().enumerate() {
            raw_categoric[slot].push(fields[c].to_string());
        }
    }
    if labels.is_empty() {
        return Err(Error::Data("no data rows".into()));
    }

    // column statistics and level tables
    let n = labels.len() as f64;
    let stats: Vec<(f64, f64)> = raw_numeric
        .iter()
        .map(|col| {
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            (mean, var.sqrt())
        })
        .collect();
    let levels: Vec<Vec<String>> = raw_categoric
        .iter()
        .map(|col| {
            let mut ls: Vec<String> = col.clone();
            ls.sort();
            ls.dedup();
            ls
        })
        .collect();

    let mut feature_names = Vec::new();
    for name in &schema.numeric {
        feature_names.push(name.clone());
    }
    for (name, ls) in schema.categoric.iter().zip(&levels) {
        for l in ls {
            feature_names.push(format!("{name}={l}"));
        }
    }
    let input_dim = feature_names.len();

    let samples = (0..labels.len())
        .map(|row| {
            let mut features = Vec::with_capacity(input_dim);
            for (slot, &(mean, std)) in stats.iter().enumerate() {
                let v = raw_numeric[slot][row];
                // constant columns encode to zero
                features.push(if std > 0.0 { (v - mean) / std } else { 0.0 });
            }
            for (slot, ls) in levels.iter().enumerate() {
                let v = &raw_categoric[slot][row];
                for l in ls {
                    features.push(if v == l { 1.0 } else { 0.0 });
                }
            }
            EncodedSample { features, label: labels[row] }
        })
        .collect();

    Ok(Dataset { samples, input_dim, feature_names })
}

/// Schema of the bundled sample file: one numeric and two categoric
/// features plus a binary label.
pub fn bundled_schema() -> Schema {
    Schema {
        label: "label".into(),
        numeric: vec!["size".into()],
        categoric: vec!["hue".into(), "shape".into()],
    }
}

/// The sample dataset shipped with the crate (60 rows).
pub fn bundled() -> Dataset {
    parse_csv(include_str!("../data/samples.csv"), &bundled_schema())
        .expect("bundled dataset is well-formed")
}

/// Seeded synthetic set with a planted linear rule.
///
/// Three numeric features uniform in [-1, 1]; the clean label is the sign
/// of a fixed linear score, kept at margin >= 0.05 by rejection so the
/// clean problem is strictly linearly separable; `noise_rate` labels are
/// then flipped (seeded). Same `(n, noise_rate, seed)` always produces
/// the same set.
pub fn synthetic(n: usize, noise_rate: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&noise_rate) {
        return Err(Error::Domain(format!("noise rate must be in [0,1], got {noise_rate}")));
    }
    const W: [f64; 3] = [1.0, -0.7, 0.4];
    const B: f64 = 0.1;
    const MARGIN: f64 = 0.05;
    let mut rng = Rng::from_indexed(seed, 0x5EED);
    let mut samples = Vec::with_capacity(n);
    while samples.len() < n {
        let x = [
            rng.uniform_in(-1.0, 1.0),
            rng.uniform_in(-1.0, 1.0),
            rng.uniform_in(-1.0, 1.0),
        ];
        let score = W[0] * x[0] + W[1] * x[1] + W[2] * x[2] + B;
        if score.abs() < MARGIN {
            continue;
        }
        let mut label = score > 0.0;
        if rng.uniform() < noise_rate {
            label = !label;
        }
        samples.push(EncodedSample { features: x.to_vec(), label });
    }
    Ok(Dataset {
        samples,
        input_dim: 3,
        feature_names: vec!["x0".into(), "x1".into(), "x2".into()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_shape() {
        let ds = bundled();
        assert_eq!(ds.len(), 60);
        // 1 numeric + 3 hue levels + 2 shape levels
        assert_eq!(ds.input_dim, 6);
        assert_eq!(
            ds.feature_names,
            vec!["size", "hue=blue", "hue=green", "hue=red", "shape=circle", "shape=square"]
        );
        for s in &ds.samples {
            assert_eq!(s.features.len(), 6);
        }
    }

    #[test]
    fn zscore_and_onehot() {
        let text = "a,b,label\n1.0,x,0\n2.0,y,1\n3.0,x,1\n";
        let schema = Schema {
            label: "label".into(),
            numeric: vec!["a".into()],
            categoric: vec!["b".into()],
        };
        let ds = parse_csv(text, &schema).unwrap();
        assert_eq!(ds.input_dim, 3);
        // mean 2, population std sqrt(2/3)
        let std = (2.0f64 / 3.0).sqrt();
        assert!((ds.samples[0].features[0] + 1.0 / std).abs() < 1e-12);
        assert!((ds.samples[1].features[0]).abs() < 1e-12);
        assert_eq!(&ds.samples[0].features[1..], &[1.0, 0.0]);
        assert_eq!(&ds.samples[1].features[1..], &[0.0, 1.0]);
        // z-scored column has zero mean / unit population variance
        let mean: f64 = ds.samples.iter().map(|s| s.features[0]).sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn loader_errors_carry_line_numbers() {
        let schema = bundled_schema();
        let bad_label = "size,hue,shape,label\n1.0,red,circle,2\n";
        let err = parse_csv(bad_label, &schema).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let bad_width = "size,hue,shape,label\n1.0,red,circle\n";
        assert!(parse_csv(bad_width, &schema).is_err());
        let missing = Schema { label: "nope".into(), numeric: vec![], categoric: vec![] };
        assert!(parse_csv("a,b\n1,2\n", &missing).is_err());
    }

    #[test]
    fn synthetic_is_deterministic_and_separable() {
        let a = synthetic(100, 0.0, 5).unwrap();
        let b = synthetic(100, 0.0, 5).unwrap();
        assert_eq!(a, b);
        // clean labels match the planted rule
        for s in &a.samples {
            let score = s.features[0] - 0.7 * s.features[1] + 0.4 * s.features[2] + 0.1;
            assert_eq!(s.label, score > 0.0);
            assert!(score.abs() >= 0.05);
        }
        // noisy set differs from the clean one
        let noisy = synthetic(100, 0.3, 5).unwrap();
        assert!(noisy.samples.iter().zip(&a.samples).any(|(x, y)| x.label != y.label));
    }
}
