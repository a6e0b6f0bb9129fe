//! Genuine/impostor similarity analysis split by beard-area pair category.
//!
//! Embeddings come from an external face matcher and are read from the `EMB1`
//! binary format (see [`format`]). Scores are cosine similarities between all
//! image pairs inside one demographic; a single threshold calibrated on the
//! impostor scores of a reference demographic is then applied everywhere.

mod format;
mod scores;
mod synth;

pub use format::{load_embeddings, read_embeddings, save_embeddings, write_embeddings, EMBEDDING_MAGIC};
pub use scores::{
    calibrate_threshold, cosine_similarity, distribution_histograms, fmr_by_category, histograms_to_csv,
    pair_scores, render_fmr_table, Calibration, CategoryScore, FmrReport, FmrRow, Histogram, PairScores, PairSide,
};
pub use synth::{generate_embeddings, SyntheticEmbeddingSpec};

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Default confidence cut for the beard-area classifier output.
pub const DEFAULT_MIN_CONFIDENCE: f64 = 0.9;

/// Default target false-match rate, one in ten thousand.
pub const DEFAULT_TARGET_FMR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum BeardArea {
    #[serde(rename = "CS")]
    CleanShaven,
    #[serde(rename = "CA")]
    ChinArea,
    #[serde(rename = "S2S")]
    SideToSide,
}

impl BeardArea {
    pub const ALL: [BeardArea; 3] = [BeardArea::CleanShaven, BeardArea::ChinArea, BeardArea::SideToSide];

    pub fn code(self) -> u8 {
        match self {
            BeardArea::CleanShaven => 0,
            BeardArea::ChinArea => 1,
            BeardArea::SideToSide => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<BeardArea> {
        BeardArea::ALL.get(code as usize).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            BeardArea::CleanShaven => "CS",
            BeardArea::ChinArea => "CA",
            BeardArea::SideToSide => "S2S",
        }
    }
}

impl fmt::Display for BeardArea {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Unordered pair of beard areas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum PairCategory {
    #[serde(rename = "CA-CA")]
    CaCa,
    #[serde(rename = "CA-CS")]
    CaCs,
    #[serde(rename = "CA-S2S")]
    CaS2s,
    #[serde(rename = "CS-CS")]
    CsCs,
    #[serde(rename = "CS-S2S")]
    CsS2s,
    #[serde(rename = "S2S-S2S")]
    S2sS2s,
}

impl PairCategory {
    pub const ALL: [PairCategory; 6] = [
        PairCategory::CaCa,
        PairCategory::CaCs,
        PairCategory::CaS2s,
        PairCategory::CsCs,
        PairCategory::CsS2s,
        PairCategory::S2sS2s,
    ];

    pub fn of(a: BeardArea, b: BeardArea) -> PairCategory {
        use BeardArea::*;
        match (a.min(b), a.max(b)) {
            (CleanShaven, CleanShaven) => PairCategory::CsCs,
            (CleanShaven, ChinArea) => PairCategory::CaCs,
            (CleanShaven, SideToSide) => PairCategory::CsS2s,
            (ChinArea, ChinArea) => PairCategory::CaCa,
            (ChinArea, SideToSide) => PairCategory::CaS2s,
            (SideToSide, SideToSide) => PairCategory::S2sS2s,
            _ => unreachable!("min/max ordering"),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            PairCategory::CaCa => "CA-CA",
            PairCategory::CaCs => "CA-CS",
            PairCategory::CaS2s => "CA-S2S",
            PairCategory::CsCs => "CS-CS",
            PairCategory::CsS2s => "CS-S2S",
            PairCategory::S2sS2s => "S2S-S2S",
        }
    }
}

impl fmt::Display for PairCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One-byte demographic code. Codes 0 to 7 have short tags (`WM`, `WF`, `BM`,
/// `BF`, `IM`, `IF`, `AM`, `AF`); any other code is shown as `D<code>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Demographic(pub u8);

const DEMOGRAPHIC_TAGS: [&str; 8] = ["WM", "WF", "BM", "BF", "IM", "IF", "AM", "AF"];

impl Demographic {
    pub fn tag(self) -> String {
        match DEMOGRAPHIC_TAGS.get(self.0 as usize) {
            Some(t) => (*t).to_string(),
            None => format!("D{}", self.0),
        }
    }

    /// Accepts a short tag, `D<code>`, or a bare code.
    pub fn parse(s: &str) -> Option<Demographic> {
        if let Some(i) = DEMOGRAPHIC_TAGS.iter().position(|t| t.eq_ignore_ascii_case(s)) {
            return Some(Demographic(i as u8));
        }
        let digits = s.strip_prefix('D').or_else(|| s.strip_prefix('d')).unwrap_or(s);
        digits.parse().ok().map(Demographic)
    }
}

impl fmt::Display for Demographic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl Serialize for Demographic {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.tag())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub id: String,
    pub subject: String,
    pub demographic: Demographic,
    pub beard: BeardArea,
    pub confidence: f32,
    pub vector: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    records: Vec<EmbeddingRecord>,
}

impl EmbeddingSet {
    pub fn new(dim: usize, records: Vec<EmbeddingRecord>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Input("embedding dimension must be positive".into()));
        }
        for r in &records {
            if r.vector.len() != dim {
                return Err(Error::Dimension(format!(
                    "record `{}` has {} components, expected {dim}",
                    r.id,
                    r.vector.len()
                )));
            }
            if !(0.0..=1.0).contains(&r.confidence) {
                return Err(Error::Input(format!("record `{}` has confidence {} outside [0, 1]", r.id, r.confidence)));
            }
            if r.vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::Input(format!("record `{}` has a non-finite component", r.id)));
            }
            if r.vector.iter().all(|&v| v == 0.0) {
                return Err(Error::Input(format!("record `{}` has a zero vector", r.id)));
            }
        }
        Ok(EmbeddingSet { dim, records })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct demographics present, in code order.
    pub fn demographics(&self) -> Vec<Demographic> {
        self.records.iter().map(|r| r.demographic).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// Keeps records with `confidence >= min_conf`, in their original order.
    pub fn filter_high_confidence(&self, min_conf: f64) -> Result<EmbeddingSet> {
        if !(0.0..=1.0).contains(&min_conf) {
            return Err(Error::Input(format!("min_conf {min_conf} outside [0, 1]")));
        }
        let records = self.records.iter().filter(|r| f64::from(r.confidence) >= min_conf).cloned().collect();
        Ok(EmbeddingSet { dim: self.dim, records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, conf: f32) -> EmbeddingRecord {
        EmbeddingRecord {
            id: id.into(),
            subject: "s".into(),
            demographic: Demographic(0),
            beard: BeardArea::ChinArea,
            confidence: conf,
            vector: vec![1.0, 0.0],
        }
    }

    #[test]
    fn pair_category_is_unordered_and_covers_six_values() {
        let mut seen = BTreeSet::new();
        for a in BeardArea::ALL {
            for b in BeardArea::ALL {
                assert_eq!(PairCategory::of(a, b), PairCategory::of(b, a));
                seen.insert(PairCategory::of(a, b));
            }
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), PairCategory::ALL.to_vec());
        for (i, c) in PairCategory::ALL.iter().enumerate() {
            assert_eq!(c.index(), i);
        }
    }

    #[test]
    fn demographic_tags_parse_back() {
        for code in 0..12u8 {
            let d = Demographic(code);
            assert_eq!(Demographic::parse(&d.tag()), Some(d));
        }
        assert_eq!(Demographic::parse("wm"), Some(Demographic(0)));
        assert_eq!(Demographic::parse("3"), Some(Demographic(3)));
        assert_eq!(Demographic::parse("XX"), None);
    }

    #[test]
    fn confidence_filter_bounds() {
        let set = EmbeddingSet::new(2, vec![rec("a", 0.2), rec("b", 0.95), rec("c", 1.0)]).unwrap();
        assert_eq!(set.filter_high_confidence(0.0).unwrap(), set);
        let top = set.filter_high_confidence(1.0).unwrap();
        assert_eq!(top.records().iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["c"]);
        assert_eq!(set.filter_high_confidence(DEFAULT_MIN_CONFIDENCE).unwrap().len(), 2);
        assert!(set.filter_high_confidence(1.0 + 1e-9).is_err());
        assert!(set.filter_high_confidence(-0.1).is_err());
    }

    #[test]
    fn rejects_bad_records() {
        assert!(EmbeddingSet::new(2, vec![rec("a", 1.5)]).is_err());
        let mut zero = rec("z", 0.5);
        zero.vector = vec![0.0, 0.0];
        assert!(EmbeddingSet::new(2, vec![zero]).is_err());
        assert!(matches!(EmbeddingSet::new(3, vec![rec("a", 0.5)]), Err(Error::Dimension(_))));
    }
}
