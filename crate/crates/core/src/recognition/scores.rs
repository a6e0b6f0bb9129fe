use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::{Demographic, EmbeddingSet, PairCategory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PairSide {
    Genuine,
    Impostor,
}

impl PairSide {
    pub fn label(self) -> &'static str {
        match self {
            PairSide::Genuine => "genuine",
            PairSide::Impostor => "impostor",
        }
    }
}

/// One scored pair; `i < j` index the records of the source set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CategoryScore {
    pub i: usize,
    pub j: usize,
    pub category: PairCategory,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairScores {
    pub demographic: Demographic,
    pub genuine: Vec<CategoryScore>,
    pub impostor: Vec<CategoryScore>,
}

impl PairScores {
    pub fn side(&self, side: PairSide) -> &[CategoryScore] {
        match side {
            PairSide::Genuine => &self.genuine,
            PairSide::Impostor => &self.impostor,
        }
    }

    pub fn impostor_scores(&self) -> Vec<f64> {
        self.impostor.iter().map(|s| s.score).collect()
    }
}

fn normalized(v: &[f32]) -> Vec<f64> {
    let norm = v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt();
    v.iter().map(|&x| f64::from(x) / norm).collect()
}

fn dot_clamped(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0)
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &[f32], b: &[f32]) -> f64 {
    dot_clamped(&normalized(a), &normalized(b))
}

/// Scores every unordered pair of records in `demographic` exactly once,
/// ordered by `(i, j)`.
pub fn pair_scores(set: &EmbeddingSet, demographic: Demographic) -> Result<PairScores> {
    let members: Vec<usize> =
        set.records().iter().enumerate().filter(|(_, r)| r.demographic == demographic).map(|(i, _)| i).collect();
    if members.len() < 2 {
        return Err(Error::EmptyDemographic(demographic.tag()));
    }
    let units: Vec<Vec<f64>> = members.iter().map(|&i| normalized(&set.records()[i].vector)).collect();
    let records = set.records();
    let rows: Vec<Vec<(bool, CategoryScore)>> = (0..members.len())
        .into_par_iter()
        .map(|a| {
            let ra = &records[members[a]];
            ((a + 1)..members.len())
                .map(|b| {
                    let rb = &records[members[b]];
                    let s = CategoryScore {
                        i: members[a],
                        j: members[b],
                        category: PairCategory::of(ra.beard, rb.beard),
                        score: dot_clamped(&units[a], &units[b]),
                    };
                    (ra.subject == rb.subject, s)
                })
                .collect()
        })
        .collect();
    let mut genuine = Vec::new();
    let mut impostor = Vec::new();
    for (same, s) in rows.into_iter().flatten() {
        if same {
            genuine.push(s);
        } else {
            impostor.push(s);
        }
    }
    Ok(PairScores { demographic, genuine, impostor })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub target_fmr: f64,
    pub threshold: f64,
    /// Fraction of calibration scores `>= threshold`.
    pub achieved_fmr: f64,
    pub n_scores: usize,
    pub n_at_or_above: usize,
}

/// Smallest observed score `t` with `#{s >= t} <= floor(target * N)`.
///
/// When the top score is tied more often than the budget allows, no observed
/// score qualifies and the threshold is the next float above the maximum.
pub fn calibrate_threshold(impostor: &[f64], target_fmr: f64) -> Result<Calibration> {
    if !(target_fmr > 0.0 && target_fmr <= 1.0) {
        return Err(Error::Input(format!("target FMR {target_fmr} outside (0, 1]")));
    }
    if let Some(s) = impostor.iter().find(|s| !s.is_finite()) {
        return Err(Error::Input(format!("non-finite score {s}")));
    }
    let n = impostor.len();
    let need = (1.0 / target_fmr - 1e-9).ceil() as usize;
    if n < need {
        return Err(Error::InsufficientScores { have: n, need });
    }
    let budget = (target_fmr * n as f64 + 1e-9).floor() as usize;
    let mut sorted = impostor.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut threshold = sorted[0].next_up();
    let mut count = 0;
    let mut i = 0;
    while i < n {
        let v = sorted[i];
        let mut k = i;
        while k < n && sorted[k] == v {
            k += 1;
        }
        if k > budget {
            break;
        }
        threshold = v;
        count = k;
        i = k;
    }
    Ok(Calibration { target_fmr, threshold, achieved_fmr: count as f64 / n as f64, n_scores: n, n_at_or_above: count })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FmrRow {
    pub demographic: Demographic,
    pub category: PairCategory,
    /// Impostor pairs in this category.
    pub n_pairs: u64,
    /// Share of the demographic's impostor pairs in this category.
    pub fraction: Option<f64>,
    pub n_false_matches: u64,
    /// Absent when the category has no pairs.
    pub fmr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FmrReport {
    pub reference: Demographic,
    pub target_fmr: f64,
    pub threshold: f64,
    pub reference_fmr: f64,
    pub rows: Vec<FmrRow>,
}

/// Per-demographic, per-category false-match rates at one shared threshold.
/// Every stream contributes six rows, in [`PairCategory::ALL`] order.
pub fn fmr_by_category(streams: &[PairScores], calibration: &Calibration, reference: Demographic) -> FmrReport {
    let mut rows = Vec::with_capacity(6 * streams.len());
    for stream in streams {
        let mut pairs = [0u64; 6];
        let mut hits = [0u64; 6];
        for s in &stream.impostor {
            pairs[s.category.index()] += 1;
            if s.score >= calibration.threshold {
                hits[s.category.index()] += 1;
            }
        }
        let total = stream.impostor.len() as u64;
        for c in PairCategory::ALL {
            let (n, h) = (pairs[c.index()], hits[c.index()]);
            rows.push(FmrRow {
                demographic: stream.demographic,
                category: c,
                n_pairs: n,
                fraction: (total > 0).then(|| n as f64 / total as f64),
                n_false_matches: h,
                fmr: (n > 0).then(|| h as f64 / n as f64),
            });
        }
    }
    FmrReport {
        reference,
        target_fmr: calibration.target_fmr,
        threshold: calibration.threshold,
        reference_fmr: calibration.achieved_fmr,
        rows,
    }
}

pub fn render_fmr_table(report: &FmrReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "threshold {:.6} (reference {}, target FMR {:e}, achieved {:e})",
        report.threshold, report.reference, report.target_fmr, report.reference_fmr
    );
    let _ = writeln!(out, "{:<6} {:<8} {:>14} {:>10} {:>10}", "demo", "pair", "N_pairs", "fraction", "FMR");
    for r in &report.rows {
        let fraction = r.fraction.map_or("-".to_string(), |f| format!("{:.4}", f));
        let fmr = r.fmr.map_or("-".to_string(), |f| format!("{:.4}", f));
        let _ = writeln!(
            out,
            "{:<6} {:<8} {:>14} {:>10} {:>10}",
            r.demographic.tag(),
            r.category.label(),
            r.n_pairs,
            fraction,
            fmr
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub demographic: Demographic,
    pub side: PairSide,
    pub category: PairCategory,
    /// Equal-width bins over `[-1, 1]`; a score of exactly 1 lands in the
    /// top bin.
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn bin_edges(&self, bin: usize) -> (f64, f64) {
        let n = self.counts.len() as f64;
        (-1.0 + 2.0 * bin as f64 / n, -1.0 + 2.0 * (bin + 1) as f64 / n)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn bin_of(score: f64, bins: usize) -> usize {
    let pos = ((score + 1.0) / 2.0 * bins as f64).floor();
    (pos.max(0.0) as usize).min(bins - 1)
}

/// Genuine and impostor histograms for every demographic and category.
pub fn distribution_histograms(streams: &[PairScores], bins: usize) -> Result<Vec<Histogram>> {
    if bins < 2 {
        return Err(Error::Input(format!("need at least 2 bins, got {bins}")));
    }
    let mut out = Vec::with_capacity(streams.len() * 12);
    for stream in streams {
        for side in [PairSide::Genuine, PairSide::Impostor] {
            let mut by_cat = vec![vec![0u64; bins]; 6];
            for s in stream.side(side) {
                by_cat[s.category.index()][bin_of(s.score, bins)] += 1;
            }
            for (c, counts) in PairCategory::ALL.into_iter().zip(by_cat) {
                out.push(Histogram { demographic: stream.demographic, side, category: c, counts });
            }
        }
    }
    Ok(out)
}

/// `demographic,side,category,bin_low,bin_high,count`, one line per bin.
pub fn histograms_to_csv(histograms: &[Histogram]) -> String {
    let mut out = String::from("demographic,side,category,bin_low,bin_high,count\n");
    for h in histograms {
        for (b, count) in h.counts.iter().enumerate() {
            let (lo, hi) = h.bin_edges(b);
            let _ = writeln!(out, "{},{},{},{lo},{hi},{count}", h.demographic, h.side.label(), h.category);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recognition::{BeardArea, EmbeddingRecord};

    fn set(vectors: &[(&str, u8, BeardArea, [f32; 2])]) -> EmbeddingSet {
        let records = vectors
            .iter()
            .enumerate()
            .map(|(i, (subject, demo, beard, v))| EmbeddingRecord {
                id: format!("i{i}"),
                subject: (*subject).into(),
                demographic: Demographic(*demo),
                beard: *beard,
                confidence: 1.0,
                vector: v.to_vec(),
            })
            .collect();
        EmbeddingSet::new(2, records).unwrap()
    }

    #[test]
    fn cosine_identities() {
        assert_eq!(cosine_similarity(&[0.3, 0.4], &[0.3, 0.4]), 1.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 2.0]), 0.0);
        assert!((cosine_similarity(&[1.0, 1.0], &[-2.0, -2.0]) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pairs_split_by_subject_within_demographic() {
        use BeardArea::*;
        let s = set(&[
            ("a", 0, CleanShaven, [1.0, 0.0]),
            ("a", 0, ChinArea, [1.0, 0.1]),
            ("b", 0, SideToSide, [0.0, 1.0]),
            ("c", 2, ChinArea, [0.5, 0.5]),
        ]);
        let p = pair_scores(&s, Demographic(0)).unwrap();
        assert_eq!(p.genuine.len(), 1);
        assert_eq!(p.impostor.len(), 2);
        assert_eq!((p.genuine[0].i, p.genuine[0].j, p.genuine[0].category), (0, 1, PairCategory::CaCs));
        assert_eq!(p.impostor[0].category, PairCategory::CsS2s);
        assert_eq!(p.impostor[1].category, PairCategory::CaS2s);
        assert!(matches!(pair_scores(&s, Demographic(2)), Err(Error::EmptyDemographic(_))));
        assert!(matches!(pair_scores(&s, Demographic(5)), Err(Error::EmptyDemographic(_))));
    }

    #[test]
    fn calibration_on_distinct_scores_keeps_one_above() {
        let scores: Vec<f64> = (0..10_000).map(|i| i as f64 / 10_000.0).collect();
        let c = calibrate_threshold(&scores, 1e-4).unwrap();
        assert_eq!(c.n_at_or_above, 1);
        assert_eq!(c.threshold, 0.9999);
        assert_eq!(scores.iter().filter(|&&s| s >= c.threshold).count(), 1);
        assert!(matches!(calibrate_threshold(&scores[..9_999], 1e-4), Err(Error::InsufficientScores { need: 10_000, .. })));
    }

    #[test]
    fn calibration_at_unit_target_takes_everything() {
        let scores = [0.3, -0.2, 0.9];
        let c = calibrate_threshold(&scores, 1.0).unwrap();
        assert!(c.threshold <= -0.2);
        assert_eq!(c.achieved_fmr, 1.0);
    }

    #[test]
    fn calibration_with_tied_maximum_moves_above_it() {
        let mut scores = vec![0.0; 8];
        scores.extend([0.5, 0.5]);
        let c = calibrate_threshold(&scores, 0.1).unwrap();
        assert!(c.threshold > 0.5);
        assert_eq!(c.n_at_or_above, 0);
    }

    #[test]
    fn threshold_above_everything_gives_zero_rates() {
        use BeardArea::*;
        let s = set(&[("a", 0, CleanShaven, [1.0, 0.0]), ("b", 0, ChinArea, [1.0, 0.2]), ("c", 0, ChinArea, [0.1, 1.0])]);
        let p = pair_scores(&s, Demographic(0)).unwrap();
        let calib = Calibration { target_fmr: 1e-4, threshold: 1.5, achieved_fmr: 0.0, n_scores: 3, n_at_or_above: 0 };
        let report = fmr_by_category(&[p], &calib, Demographic(0));
        assert_eq!(report.rows.len(), 6);
        for r in &report.rows {
            assert!(r.fmr.is_none() || r.fmr == Some(0.0));
        }
        assert_eq!(report.rows.iter().map(|r| r.n_pairs).sum::<u64>(), 3);
        let table = render_fmr_table(&report);
        for c in PairCategory::ALL {
            assert!(table.contains(c.label()));
        }
    }

    #[test]
    fn histogram_of_perfect_scores_fills_top_bin() {
        let stream = PairScores {
            demographic: Demographic(0),
            genuine: (0..5).map(|k| CategoryScore { i: 0, j: k + 1, category: PairCategory::CaCa, score: 1.0 }).collect(),
            impostor: vec![CategoryScore { i: 0, j: 9, category: PairCategory::CsCs, score: -1.0 }],
        };
        let h = distribution_histograms(&[stream], 10).unwrap();
        assert_eq!(h.len(), 12);
        let top = &h[0];
        assert_eq!((top.side, top.category), (PairSide::Genuine, PairCategory::CaCa));
        assert_eq!(top.counts[9], 5);
        assert_eq!(top.total(), 5);
        let bottom = h.iter().find(|x| x.side == PairSide::Impostor && x.category == PairCategory::CsCs).unwrap();
        assert_eq!(bottom.counts[0], 1);
        assert!(distribution_histograms(&[], 1).is_err());
        let csv = histograms_to_csv(&h[..1]);
        assert_eq!(csv.lines().count(), 11);
        assert!(csv.lines().nth(10).unwrap().ends_with("WM,genuine,CA-CA,0.8,1,5"));
    }
}
