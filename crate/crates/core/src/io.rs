//! File formats: point CSVs, partition text, and model specifications.
//!
//! Partitions have two text forms. The line form is `n` space-separated
//! 1-based canonical labels (`1 1 2 2`). The structured form is a list of
//! blocks of 0-based point indices (`[[0, 1], [2, 3]]`).
//!
//! A model specification is TOML:
//!
//! ```toml
//! dimension = 1
//! labels = 2
//!
//! [prior]
//! kind = "size-multiset"   # or "fixed-sizes", "explicit"
//! sizes = [2, 2]           # optional; may come from the command line
//! # explicit priors list 1-based label lines and probabilities:
//! # table = [{ labels = [1, 1, 2], prob = 0.5 }, { labels = [1, 2, 2], prob = 0.5 }]
//!
//! [[label]]
//! m = [0.0]
//! nu = 1.0
//! kappa = 3.0
//! psi = [[1.0]]
//! ```
//!
//! An uncertainty class replaces the `[[label]]` tables by `[[state]]`
//! tables, each with a `weight` and its own `[[state.label]]` list. A state
//! label gives either `sigma` (known covariance) or `kappa` and `psi`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::gaussian::{
    build_effective, EffectiveRlpp, KnownCovLabel, KnownCovModel, LabelLikelihood, LabelPrior,
    NiwLabel, NiwModel, PointSet, StateModel, UncertainState, UncertaintyClass,
};
use crate::partition::{LabelFunction, Partition};
use crate::{Error, Result};

/// Reads points from CSV text: one row per point, one numeric column per
/// coordinate, with an optional non-numeric header row.
pub fn parse_points_csv(text: &str) -> Result<PointSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(line, e.to_string())
        })?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => {
                if let Some(bad) = row.iter().position(|v| !v.is_finite()) {
                    return Err(Error::parse(
                        line,
                        format!("column {} is not finite", bad + 1),
                    ));
                }
                if let Some(first) = rows.first() {
                    if first.len() != row.len() {
                        return Err(Error::parse(
                            line,
                            format!("expected {} columns, found {}", first.len(), row.len()),
                        ));
                    }
                }
                rows.push(row);
            }
            Err(_) if i == 0 => {}
            Err(_) => {
                let col = record
                    .iter()
                    .position(|f| f.parse::<f64>().is_err())
                    .unwrap_or(0);
                return Err(Error::parse(
                    line,
                    format!("column {} is not a number: {:?}", col + 1, &record[col]),
                ));
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::parse(1, "no data rows"));
    }
    PointSet::new(rows)
}

pub fn points_to_csv(points: &PointSet) -> String {
    let mut s = String::new();
    for p in points.iter() {
        let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

/// `1 1 2 2` style line of canonical 1-based labels.
pub fn partition_to_line(p: &Partition) -> String {
    let labels: Vec<String> = p.encoding().iter().map(|&c| (c + 1).to_string()).collect();
    labels.join(" ")
}

/// `[[0, 1], [2, 3]]` style list of 0-based index blocks.
pub fn partition_to_structured(p: &Partition) -> String {
    serde_json::to_string(&p.blocks())
        .expect("vectors of integers serialize")
        .replace(',', ", ")
}

/// Parses either partition text form.
pub fn parse_partition(text: &str) -> Result<Partition> {
    let t = text.trim();
    if t.starts_with('[') {
        let blocks: Vec<Vec<usize>> = serde_json::from_str(t)
            .map_err(|e| Error::parse(e.line(), format!("invalid block list: {e}")))?;
        let n = blocks.iter().map(Vec::len).sum();
        return Partition::from_blocks(&blocks, n);
    }
    let mut lines = t.lines().filter(|l| !l.trim().is_empty());
    let first = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty partition"))?;
    if lines.next().is_some() {
        return Err(Error::parse(2, "trailing content after the label line"));
    }
    let labels = first
        .split_whitespace()
        .map(|tok| match tok.parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v - 1),
            _ => Err(Error::parse(
                1,
                format!("invalid label {tok:?}; labels are integers from 1"),
            )),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Partition::from_labels(&labels))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    dimension: usize,
    labels: usize,
    prior: Option<PriorFile>,
    #[serde(default)]
    label: Vec<LabelFile>,
    #[serde(default)]
    state: Vec<StateFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PriorFile {
    kind: String,
    sizes: Option<Vec<usize>>,
    table: Option<Vec<ExplicitEntry>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplicitEntry {
    labels: Vec<usize>,
    prob: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelFile {
    m: Vec<f64>,
    nu: f64,
    kappa: Option<f64>,
    psi: Option<Vec<Vec<f64>>>,
    sigma: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    #[serde(default)]
    id: Option<String>,
    weight: f64,
    label: Vec<LabelFile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorKind {
    FixedSizes,
    SizeMultiset,
    Explicit,
}

/// A loaded model: a single NIW model or an effective mixture over states.
#[derive(Debug, Clone)]
pub enum LoadedModel {
    Niw(NiwModel),
    Effective(EffectiveRlpp),
}

impl LoadedModel {
    pub fn likelihood(&self) -> &dyn LabelLikelihood {
        match self {
            LoadedModel::Niw(m) => m,
            LoadedModel::Effective(m) => m,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub dimension: usize,
    pub labels: usize,
    pub model: LoadedModel,
    pub prior_kind: PriorKind,
    pub prior_sizes: Option<Vec<usize>>,
    pub explicit: Option<Vec<(LabelFunction, f64)>>,
}

impl ModelSpec {
    /// Label prior, with `sizes` overriding the file's sizes.
    pub fn prior(&self, sizes: Option<&[usize]>) -> Result<LabelPrior> {
        if self.prior_kind == PriorKind::Explicit {
            return Ok(LabelPrior::Explicit(
                self.explicit.clone().unwrap_or_default(),
            ));
        }
        let sizes = sizes
            .map(<[usize]>::to_vec)
            .or_else(|| self.prior_sizes.clone())
            .ok_or_else(|| {
                Error::invalid("cluster sizes are required (from --sizes or the model's prior)")
            })?;
        Ok(match self.prior_kind {
            PriorKind::FixedSizes => LabelPrior::FixedSizes(sizes),
            _ => LabelPrior::SizeMultiset(sizes),
        })
    }
}

fn matrix(rows: &[Vec<f64>], d: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::invalid(format!("{what} must be a {d}x{d} matrix")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

enum LabelKind {
    Niw(NiwLabel),
    Known(KnownCovLabel),
}

fn label_from_file(l: &LabelFile, d: usize, where_: &str) -> Result<LabelKind> {
    if l.m.len() != d {
        return Err(Error::invalid(format!(
            "{where_}: m has {} entries, expected {d}",
            l.m.len()
        )));
    }
    let m = DVector::from_column_slice(&l.m);
    match (&l.sigma, l.kappa, &l.psi) {
        (Some(s), None, None) => Ok(LabelKind::Known(KnownCovLabel {
            m,
            nu: l.nu,
            sigma: matrix(s, d, "sigma")?,
        })),
        (None, Some(kappa), Some(psi)) => Ok(LabelKind::Niw(NiwLabel {
            m,
            nu: l.nu,
            kappa,
            psi: matrix(psi, d, "psi")?,
        })),
        _ => Err(Error::invalid(format!(
            "{where_}: give either sigma, or kappa and psi"
        ))),
    }
}

fn niw_model(labels: &[LabelFile], d: usize, where_: &str) -> Result<NiwModel> {
    let mut out = Vec::new();
    for (y, l) in labels.iter().enumerate() {
        match label_from_file(l, d, &format!("{where_} label {}", y + 1))? {
            LabelKind::Niw(n) => out.push(n),
            LabelKind::Known(_) => {
                return Err(Error::invalid(format!(
                    "{where_}: sigma is only allowed inside states"
                )))
            }
        }
    }
    NiwModel::new(out)
}

pub fn parse_model_spec(text: &str) -> Result<ModelSpec> {
    let file: SpecFile = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map_or(0, |s| text[..s.start].lines().count().max(1));
        Error::parse(line, e.message().to_string())
    })?;
    let d = file.dimension;
    let l = file.labels;
    if d == 0 || l == 0 {
        return Err(Error::invalid("dimension and labels must be positive"));
    }
    let model = match (file.label.is_empty(), file.state.is_empty()) {
        (false, true) => {
            if file.label.len() != l {
                return Err(Error::invalid(format!(
                    "expected {l} [[label]] tables, found {}",
                    file.label.len()
                )));
            }
            LoadedModel::Niw(niw_model(&file.label, d, "model")?)
        }
        (true, false) => {
            let mut states = Vec::new();
            for (k, s) in file.state.iter().enumerate() {
                let id = s.id.clone().unwrap_or_else(|| format!("state-{}", k + 1));
                if s.label.len() != l {
                    return Err(Error::invalid(format!(
                        "{id}: expected {l} labels, found {}",
                        s.label.len()
                    )));
                }
                let kinds = s
                    .label
                    .iter()
                    .enumerate()
                    .map(|(y, lf)| label_from_file(lf, d, &format!("{id} label {}", y + 1)));
                let kinds = kinds.collect::<Result<Vec<_>>>()?;
                let model = if kinds.iter().all(|k| matches!(k, LabelKind::Known(_))) {
                    let labels = kinds
                        .into_iter()
                        .map(|k| match k {
                            LabelKind::Known(x) => x,
                            LabelKind::Niw(_) => unreachable!(),
                        })
                        .collect();
                    StateModel::KnownCovariance(KnownCovModel::new(labels)?)
                } else if kinds.iter().all(|k| matches!(k, LabelKind::Niw(_))) {
                    StateModel::Niw(niw_model(&s.label, d, &id)?)
                } else {
                    return Err(Error::invalid(format!(
                        "{id}: labels mix sigma and kappa/psi forms"
                    )));
                };
                states.push(UncertainState {
                    id,
                    weight: s.weight,
                    model,
                });
            }
            LoadedModel::Effective(build_effective(UncertaintyClass::new(states)?))
        }
        _ => {
            return Err(Error::invalid(
                "give either [[label]] tables or [[state]] tables",
            ))
        }
    };

    let (prior_kind, prior_sizes, explicit) = match file.prior {
        None => (PriorKind::SizeMultiset, None, None),
        Some(p) => {
            let kind = match p.kind.as_str() {
                "fixed-sizes" => PriorKind::FixedSizes,
                "size-multiset" => PriorKind::SizeMultiset,
                "explicit" => PriorKind::Explicit,
                other => return Err(Error::invalid(format!("unknown prior kind {other:?}"))),
            };
            let explicit = match (kind, p.table) {
                (PriorKind::Explicit, Some(t)) => Some(
                    t.into_iter()
                        .map(|e| {
                            if e.labels.contains(&0) {
                                return Err(Error::invalid("explicit prior labels are 1-based"));
                            }
                            Ok((
                                LabelFunction::new(e.labels.iter().map(|v| v - 1).collect(), l)?,
                                e.prob,
                            ))
                        })
                        .collect::<Result<Vec<_>>>()?,
                ),
                (PriorKind::Explicit, None) => {
                    return Err(Error::invalid("explicit prior needs a table"))
                }
                (_, Some(_)) => return Err(Error::invalid("only explicit priors take a table")),
                (_, None) => None,
            };
            (kind, p.sizes, explicit)
        }
    };
    Ok(ModelSpec {
        dimension: d,
        labels: l,
        model,
        prior_kind,
        prior_sizes,
        explicit,
    })
}
