//! JSON model descriptions.
//!
//! ```json
//! { "kind": "markov",
//!   "transition": [["0.9", "0.1"], ["0.2", "0.8"]],
//!   "rho": [["0", "1"], ["1", "0"]] }
//! ```
//!
//! `kind` is `"iid"` (with `probs`), `"markov"` (with `transition`) or
//! `"hmm"` (with `transition` and `emission`). Entries are decimal or `p/q`
//! strings; plain JSON numbers are read through their shortest decimal
//! form. `rho` is optional in process files and is the only field of a
//! distortion file. Rows must sum to one within `1e-12`.

use std::path::Path;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::parse_rational;
use crate::measures::{DistortionMatrix, FiniteDistribution, HiddenMarkov, MarkovChain, ProcessModel, StochasticMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Text(String),
    Number(f64),
}

impl Entry {
    fn rational(&self, field: &str) -> Result<BigRational> {
        let text = match self {
            Entry::Text(s) => s.clone(),
            Entry::Number(v) => format!("{v}"),
        };
        parse_rational(&text).map_err(|_| Error::invalid(field, format!("cannot parse {text:?} as a rational")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Iid,
    Markov,
    Hmm,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ModelKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<Entry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<Entry>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emission: Option<Vec<Vec<Entry>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<Vec<Entry>>>,
}

fn vector(entries: &[Entry], field: &str) -> Result<Vec<BigRational>> {
    entries.iter().map(|e| e.rational(field)).collect()
}

fn matrix(rows: &[Vec<Entry>], field: &str) -> Result<Vec<Vec<BigRational>>> {
    rows.iter().map(|r| vector(r, field)).collect()
}

fn required<'a, T>(v: &'a Option<T>, field: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::invalid(field, "missing for this model kind"))
}

fn rename(err: Error, field: &str) -> Error {
    match err {
        Error::InvalidArgument { reason, .. } => Error::InvalidArgument {
            field: field.to_string(),
            reason,
        },
        other => other,
    }
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid("model file", e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid("model file", format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::InvalidArgument { field, reason } => Error::InvalidArgument {
                field,
                reason: format!("{}: {reason}", path.display()),
            },
            other => other,
        })
    }

    pub fn process(&self) -> Result<ProcessModel> {
        match self.kind {
            None => Err(Error::invalid("kind", "missing; expected \"iid\", \"markov\" or \"hmm\"")),
            Some(ModelKind::Iid) => {
                let probs = vector(required(&self.probs, "probs")?, "probs")?;
                Ok(ProcessModel::iid(FiniteDistribution::from_exact(probs).map_err(|e| rename(e, "probs"))?))
            }
            Some(ModelKind::Markov) => {
                let t = matrix(required(&self.transition, "transition")?, "transition")?;
                let t = StochasticMatrix::from_exact(t).map_err(|e| rename(e, "transition"))?;
                Ok(ProcessModel::Markov(MarkovChain::new(t)?))
            }
            Some(ModelKind::Hmm) => {
                let t = matrix(required(&self.transition, "transition")?, "transition")?;
                let e = matrix(required(&self.emission, "emission")?, "emission")?;
                let t = StochasticMatrix::from_exact(t).map_err(|e| rename(e, "transition"))?;
                let e = StochasticMatrix::from_exact(e).map_err(|e| rename(e, "emission"))?;
                Ok(ProcessModel::Hmm(HiddenMarkov::new(t, e)?))
            }
        }
    }

    pub fn distortion(&self) -> Result<Option<DistortionMatrix>> {
        match &self.rho {
            None => Ok(None),
            Some(rows) => Ok(Some(DistortionMatrix::from_rationals(&matrix(rows, "rho")?)?)),
        }
    }

    /// Describe `model` (and optionally `rho`) with exact `p/q` strings.
    pub fn describe(model: &ProcessModel, rho: Option<&DistortionMatrix>) -> Self {
        let text_rows = |m: &StochasticMatrix| -> Vec<Vec<Entry>> {
            (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| Entry::Text(m.exact(i, j).to_string())).collect())
                .collect()
        };
        let mut file = ModelFile {
            rho: rho.map(|r| {
                r.to_strings()
                    .into_iter()
                    .map(|row| row.into_iter().map(Entry::Text).collect())
                    .collect()
            }),
            ..Default::default()
        };
        match model {
            ProcessModel::Iid(d) => {
                file.kind = Some(ModelKind::Iid);
                file.probs = Some(d.exact().iter().map(|v| Entry::Text(v.to_string())).collect());
            }
            ProcessModel::Markov(m) => {
                file.kind = Some(ModelKind::Markov);
                file.transition = Some(text_rows(m.transition()));
            }
            ProcessModel::Hmm(h) => {
                file.kind = Some(ModelKind::Hmm);
                file.transition = Some(text_rows(h.transition()));
                file.emission = Some(text_rows(h.emission()));
            }
        }
        file
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files serialize")
    }
}

/// Load a process model from a JSON file.
pub fn load_process(path: impl AsRef<Path>) -> Result<ProcessModel> {
    ModelFile::load(path)?.process()
}

/// Load the `rho` field of a JSON file.
pub fn load_distortion(path: impl AsRef<Path>) -> Result<DistortionMatrix> {
    ModelFile::load(path)?
        .distortion()?
        .ok_or_else(|| Error::invalid("rho", "file has no \"rho\" field"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_kind() {
        let iid = ModelFile::parse(r#"{"kind":"iid","probs":["1/3","2/3"],"rho":[["0","1/2"],["1","0"]]}"#).unwrap();
        let m = iid.process().unwrap();
        assert_eq!(m.marginal().exact()[0], BigRational::new(1.into(), 3.into()));
        assert_eq!(iid.distortion().unwrap().unwrap().scale(), 2);

        let markov = ModelFile::parse(r#"{"kind":"markov","transition":[["0.9","0.1"],[0.2,0.8]]}"#).unwrap();
        let m = markov.process().unwrap();
        assert_eq!(m.marginal().exact()[0], BigRational::new(2.into(), 3.into()));

        let hmm = ModelFile::parse(
            r#"{"kind":"hmm","transition":[["1/2","1/2"],["1/2","1/2"]],"emission":[["1","0","0"],["0","1/2","1/2"]]}"#,
        )
        .unwrap();
        assert_eq!(hmm.process().unwrap().alphabet_size(), 3);
    }

    #[test]
    fn rejects_bad_rows_with_field_names() {
        let bad = ModelFile::parse(r#"{"kind":"markov","transition":[["0.9","0.2"],["0.2","0.8"]]}"#).unwrap();
        let err = bad.process().unwrap_err().to_string();
        assert!(err.contains("transition"), "{err}");
        let bad = ModelFile::parse(r#"{"kind":"iid"}"#).unwrap();
        assert!(bad.process().unwrap_err().to_string().contains("probs"));
        assert!(ModelFile::parse(r#"{"kind":"iid","prob":["1"]}"#).is_err());
    }

    #[test]
    fn describe_round_trips() {
        let m = ProcessModel::markov(vec![vec![0.6, 0.4], vec![0.4, 0.6]]).unwrap();
        let rho = DistortionMatrix::hamming(2);
        let text = ModelFile::describe(&m, Some(&rho)).to_json();
        let back = ModelFile::parse(&text).unwrap();
        assert_eq!(back.process().unwrap(), m);
        assert_eq!(back.distortion().unwrap().unwrap(), rho);
    }
}
