use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::auth::{enroll, verify, AuthOptions};
use crate::error::{Error, Result};
use crate::extrema::MorphologyClass;
use crate::features::FeatureVector;
use crate::ident::{identify, train_ident, IdentConfig, IdentKind};
use crate::pipeline::{process_signal, FilterMode, ProcessedSubject};
use crate::segment::SegmentConfig;
use crate::signal::PpgSignal;
use crate::spectral::FilterConfig;

use super::metrics::{acquisition, bac, AcquisitionStats, ConfusionCounts, Rates};
use super::subsets::{
    emulate_subsets, EmulatedSubset, SubjectCte, DEFAULT_FINITE_CAPS, MIN_SUBJECT_PERIODS,
};

use MorphologyClass::{M1, M2, M3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "SoA-ident")]
    SoaIdent,
    #[serde(rename = "MS")]
    Ms,
    #[serde(rename = "MC")]
    Mc,
    #[serde(rename = "CardioID-LDA")]
    CardioIdLda,
    #[serde(rename = "CardioID-NN")]
    CardioIdNn,
    #[serde(rename = "SoA-auth")]
    SoaAuth,
    #[serde(rename = "MS-auth")]
    MsAuth,
    #[serde(rename = "MC-auth")]
    McAuth,
    #[serde(rename = "Mahal")]
    Mahal,
    #[serde(rename = "CardioID-auth")]
    CardioIdAuth,
}

impl Variant {
    pub const IDENT: [Variant; 5] = [
        Self::SoaIdent,
        Self::Ms,
        Self::Mc,
        Self::CardioIdLda,
        Self::CardioIdNn,
    ];
    pub const AUTH: [Variant; 5] = [
        Self::SoaAuth,
        Self::MsAuth,
        Self::McAuth,
        Self::Mahal,
        Self::CardioIdAuth,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Self::SoaIdent => "SoA-ident",
            Self::Ms => "MS",
            Self::Mc => "MC",
            Self::CardioIdLda => "CardioID-LDA",
            Self::CardioIdNn => "CardioID-NN",
            Self::SoaAuth => "SoA-auth",
            Self::MsAuth => "MS-auth",
            Self::McAuth => "MC-auth",
            Self::Mahal => "Mahal",
            Self::CardioIdAuth => "CardioID-auth",
        }
    }

    pub fn is_ident(self) -> bool {
        Self::IDENT.contains(&self)
    }

    pub fn filter_mode(self) -> FilterMode {
        match self {
            Self::SoaIdent | Self::SoaAuth => FilterMode::Soa,
            _ => FilterMode::Harmonic,
        }
    }

    /// Morphologies whose periods the variant accepts. The fixed-band
    /// baselines and the single-morphology variants keep M2 only.
    pub fn morphologies(self) -> &'static [MorphologyClass] {
        match self {
            Self::SoaIdent | Self::Ms | Self::SoaAuth | Self::MsAuth => &[M2],
            _ => &[M1, M2, M3],
        }
    }

    pub fn ident_kind(self) -> Option<IdentKind> {
        match self {
            Self::SoaIdent | Self::Ms | Self::Mc => Some(IdentKind::Knn),
            Self::CardioIdLda => Some(IdentKind::Lda),
            Self::CardioIdNn => Some(IdentKind::Nn),
            _ => None,
        }
    }

    /// Enrollment options derived from `base`.
    pub fn auth_options(self, base: &AuthOptions) -> Option<AuthOptions> {
        use crate::auth::Metric;
        let (metric, multi_cluster) = match self {
            Self::SoaAuth | Self::MsAuth | Self::McAuth => (Metric::Euclidean, false),
            Self::Mahal => (Metric::Mahalanobis, false),
            Self::CardioIdAuth => (Metric::Mahalanobis, true),
            _ => return None,
        };
        Some(AuthOptions {
            metric,
            multi_cluster,
            ..*base
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::IDENT
            .iter()
            .chain(&Self::AUTH)
            .find(|v| v.id().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| Error::InvalidConfig(format!("unknown variant {s}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Variance caps; an unbounded subset is always appended.
    pub finite_caps: Vec<f64>,
    pub train_fraction: f64,
    pub min_subject_periods: usize,
    pub variants: Vec<Variant>,
    /// Filled from the top-level pipeline configuration.
    #[serde(skip)]
    pub ident: IdentConfig,
    #[serde(skip)]
    pub auth: AuthOptions,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            finite_caps: DEFAULT_FINITE_CAPS.to_vec(),
            train_fraction: 0.8,
            min_subject_periods: MIN_SUBJECT_PERIODS,
            variants: Variant::IDENT
                .iter()
                .chain(&Variant::AUTH)
                .copied()
                .collect(),
            ident: IdentConfig::default(),
            auth: AuthOptions::default(),
        }
    }
}

impl BenchConfig {
    pub fn caps(&self) -> Vec<Option<f64>> {
        self.finite_caps
            .iter()
            .map(|&t| Some(t))
            .chain([None])
            .collect()
    }
}

/// One recording processed with both filters.
#[derive(Debug, Clone)]
pub struct SubjectData {
    pub subject_id: String,
    pub harmonic: ProcessedSubject,
    pub soa: ProcessedSubject,
}

impl SubjectData {
    pub fn processed(&self, mode: FilterMode) -> &ProcessedSubject {
        match mode {
            FilterMode::Harmonic => &self.harmonic,
            FilterMode::Soa => &self.soa,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub subjects: Vec<SubjectData>,
    /// Recordings that could not be processed, with the reason.
    pub failed: Vec<(String, String)>,
}

impl Dataset {
    pub fn total_subjects(&self) -> usize {
        self.subjects.len() + self.failed.len()
    }

    pub fn subject(&self, id: &str) -> Option<&SubjectData> {
        self.subjects.iter().find(|s| s.subject_id == id)
    }
}

pub fn build_dataset(signals: &[PpgSignal], filter: &FilterConfig, seg: &SegmentConfig) -> Dataset {
    let results: Vec<(String, Result<SubjectData>)> = signals
        .par_iter()
        .enumerate()
        .map(|(i, sig)| {
            let id = sig
                .subject_id
                .clone()
                .unwrap_or_else(|| format!("subject{i}"));
            let sig = sig.clone().with_subject(id.clone());
            let r = (|| {
                Ok(SubjectData {
                    subject_id: id.clone(),
                    harmonic: process_signal(&sig, FilterMode::Harmonic, filter, seg)?,
                    soa: process_signal(&sig, FilterMode::Soa, filter, seg)?,
                })
            })();
            (id, r)
        })
        .collect();
    let mut ds = Dataset::default();
    for (id, r) in results {
        match r {
            Ok(s) => ds.subjects.push(s),
            Err(e) => ds.failed.push((id, e.to_string())),
        }
    }
    ds
}

/// Variance subsets from the harmonic-filter CTE.
pub fn dataset_subsets(
    ds: &Dataset,
    caps: &[Option<f64>],
    min_periods: usize,
) -> Vec<EmulatedSubset> {
    let ctes: Vec<SubjectCte> = ds
        .subjects
        .iter()
        .map(|s| SubjectCte {
            subject_id: s.subject_id.clone(),
            cte: s.harmonic.cte.clone(),
        })
        .collect();
    emulate_subsets(&ctes, caps, min_periods)
}

/// Chronological split of `n` items: the first `fraction` for training, at
/// least one on each side when `n >= 2`.
pub fn split_point(n: usize, fraction: f64) -> usize {
    if n < 2 {
        return n;
    }
    ((n as f64 * fraction).floor() as usize).clamp(1, n - 1)
}

#[derive(Debug, Clone, Default)]
pub struct VariantData {
    /// Per subject: (train, test) accepted feature vectors.
    pub per_subject: BTreeMap<String, (Vec<FeatureVector>, Vec<FeatureVector>)>,
    pub acquisition: Option<AcquisitionStats>,
}

/// Periods a variant sees in a subset, split chronologically.
pub fn variant_data(
    ds: &Dataset,
    variant: Variant,
    subset: &EmulatedSubset,
    train_fraction: f64,
) -> Result<VariantData> {
    let mode = variant.filter_mode();
    let allowed = variant.morphologies();
    let mut out = VariantData::default();
    let (mut total, mut accepted, mut elapsed) = (0u64, 0u64, 0.0);
    for (id, kept) in &subset.included {
        let Some(s) = ds.subject(id) else { continue };
        let proc = s.processed(mode);
        let idx: Vec<usize> = match mode {
            FilterMode::Harmonic => kept.clone(),
            // fixed-band periods differ from the harmonic ones; apply the
            // same cap to their own CTE
            FilterMode::Soa => (0..proc.periods.len())
                .filter(|&i| subset.admits(proc.cte.get(i).copied().unwrap_or(0.0)))
                .collect(),
        };
        let fvs: Vec<FeatureVector> = idx
            .iter()
            .filter_map(|&i| proc.outcomes.get(i).and_then(|o| o.features()))
            .filter(|f| allowed.contains(&f.morphology))
            .cloned()
            .collect();
        total += idx.len() as u64;
        accepted += fvs.len() as u64;
        elapsed += proc.elapsed_s;
        let cut = split_point(fvs.len(), train_fraction);
        let (train, test) = fvs.split_at(cut);
        out.per_subject
            .insert(id.clone(), (train.to_vec(), test.to_vec()));
    }
    out.acquisition = Some(acquisition(total, accepted, elapsed)?);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub rates: Rates,
    pub counts: ConfusionCounts,
}

/// Macro one-vs-rest BAC over `classes`. A `None` prediction counts as a
/// miss for the true class and a false alarm for nobody. Classes without
/// test samples are left out of the average.
pub fn macro_bac(truth: &[String], pred: &[Option<String>], classes: &[String]) -> Result<Outcome> {
    let mut per_class = vec![];
    let mut counts = ConfusionCounts::default();
    for class in classes {
        let mut c = ConfusionCounts::default();
        for (t, p) in truth.iter().zip(pred) {
            match (t == class, p.as_ref() == Some(class)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fn_ += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
            }
        }
        if let Ok(r) = bac(&c) {
            per_class.push(r);
        }
        counts += c;
    }
    let rates = Rates::mean(&per_class).ok_or(Error::EmptySubset)?;
    Ok(Outcome { rates, counts })
}

/// Trains on `train` and scores single-period identification of `test`.
/// Test vectors whose morphology has no sub-model count as misses.
pub fn ident_outcome(
    train: &[FeatureVector],
    test: &[FeatureVector],
    kind: IdentKind,
    cfg: &IdentConfig,
) -> Result<Outcome> {
    if test.is_empty() {
        return Err(Error::EmptySubset);
    }
    let model = train_ident(train, kind, cfg)?;
    let preds: Vec<Option<String>> = test
        .iter()
        .map(|f| identify(&model, f).ok().map(|p| p.0))
        .collect();
    let truth: Vec<String> = test.iter().map(|f| f.subject_id.clone()).collect();
    macro_bac(&truth, &preds, &model.labels)
}

/// Enrolls every subject on its own training periods and tests against its
/// held-out periods (positives) and every other subject's (negatives).
/// Rates are averaged over subjects that could be enrolled.
pub fn auth_outcome(
    per_subject: &BTreeMap<String, (Vec<FeatureVector>, Vec<FeatureVector>)>,
    opts: &AuthOptions,
) -> Result<Outcome> {
    if per_subject.len() < 2 {
        return Err(Error::TooFewSubjects(per_subject.len()));
    }
    let rows: Vec<Option<(Rates, ConfusionCounts)>> = per_subject
        .par_iter()
        .map(|(id, (train, test))| {
            let profile = enroll(train, id, opts).ok()?;
            let mut c = ConfusionCounts::default();
            for f in test {
                if verify(&profile, f).0 {
                    c.tp += 1
                } else {
                    c.fn_ += 1
                }
            }
            for (other, (_, otest)) in per_subject {
                if other == id {
                    continue;
                }
                for f in otest {
                    if verify(&profile, f).0 {
                        c.fp += 1
                    } else {
                        c.tn += 1
                    }
                }
            }
            bac(&c).ok().map(|r| (r, c))
        })
        .collect();
    let mut rates = vec![];
    let mut counts = ConfusionCounts::default();
    for (r, c) in rows.into_iter().flatten() {
        rates.push(r);
        counts += c;
    }
    let rates = Rates::mean(&rates)
        .ok_or_else(|| Error::InsufficientData("no subject could be enrolled".into()))?;
    Ok(Outcome { rates, counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub subset: String,
    pub variant: String,
    pub subjects_included_pct: f64,
    pub acq_rate: f64,
    pub acq_speed: f64,
    pub tpr: f64,
    pub tnr: f64,
    pub bac: f64,
    pub counts: Option<ConfusionCounts>,
    pub error: Option<String>,
}

pub fn run_ident_benchmark(
    ds: &Dataset,
    variant: Variant,
    subset: &EmulatedSubset,
    cfg: &BenchConfig,
) -> Result<ReportRow> {
    let kind = variant.ident_kind().ok_or_else(|| {
        Error::InvalidConfig(format!("{} is not an identification variant", variant.id()))
    })?;
    if subset.included.is_empty() {
        return Err(Error::EmptySubset);
    }
    let data = variant_data(ds, variant, subset, cfg.train_fraction)?;
    let train: Vec<FeatureVector> = data
        .per_subject
        .values()
        .flat_map(|(t, _)| t.iter().cloned())
        .collect();
    let test: Vec<FeatureVector> = data
        .per_subject
        .values()
        .flat_map(|(_, t)| t.iter().cloned())
        .collect();
    let res = ident_outcome(&train, &test, kind, &cfg.ident);
    Ok(row(ds, variant, subset, data.acquisition, res))
}

pub fn run_auth_benchmark(
    ds: &Dataset,
    variant: Variant,
    subset: &EmulatedSubset,
    cfg: &BenchConfig,
) -> Result<ReportRow> {
    let opts = variant.auth_options(&cfg.auth).ok_or_else(|| {
        Error::InvalidConfig(format!("{} is not an authentication variant", variant.id()))
    })?;
    if subset.included.len() < 2 {
        return Err(Error::TooFewSubjects(subset.included.len()));
    }
    let data = variant_data(ds, variant, subset, cfg.train_fraction)?;
    let res = auth_outcome(&data.per_subject, &opts);
    Ok(row(ds, variant, subset, data.acquisition, res))
}

fn row(
    ds: &Dataset,
    variant: Variant,
    subset: &EmulatedSubset,
    acq: Option<AcquisitionStats>,
    res: Result<Outcome>,
) -> ReportRow {
    let pct = 100.0 * subset.included.len() as f64 / ds.total_subjects().max(1) as f64;
    let (acq_rate, acq_speed) = acq.map_or((f64::NAN, f64::NAN), |a| (a.rate, a.speed));
    let (rates, counts, error) = match res {
        Ok(o) => (o.rates, Some(o.counts), None),
        Err(e) => (
            Rates {
                tpr: f64::NAN,
                tnr: f64::NAN,
                bac: f64::NAN,
            },
            None,
            Some(e.to_string()),
        ),
    };
    ReportRow {
        subset: subset.label(),
        variant: variant.id().into(),
        subjects_included_pct: pct,
        acq_rate,
        acq_speed,
        tpr: rates.tpr,
        tnr: rates.tnr,
        bac: rates.bac,
        counts,
        error,
    }
}

/// Every configured variant on every subset. Rows are ordered by subset,
/// then variant, regardless of scheduling.
pub fn run_benchmark(ds: &Dataset, cfg: &BenchConfig) -> Vec<ReportRow> {
    let subsets = dataset_subsets(ds, &cfg.caps(), cfg.min_subject_periods);
    let jobs: Vec<(&EmulatedSubset, Variant)> = subsets
        .iter()
        .flat_map(|s| cfg.variants.iter().map(move |&v| (s, v)))
        .collect();
    jobs.par_iter()
        .map(|&(s, v)| {
            let r = if v.is_ident() {
                run_ident_benchmark(ds, v, s, cfg)
            } else {
                run_auth_benchmark(ds, v, s, cfg)
            };
            r.unwrap_or_else(|e| row(ds, v, s, None, Err(e)))
        })
        .collect()
}

pub const CSV_HEADER: [&str; 8] = [
    "subset",
    "variant",
    "subjects_included_pct",
    "acq_rate",
    "acq_speed",
    "tpr",
    "tnr",
    "bac",
];

pub fn write_report_csv<W: Write>(out: W, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.subset.clone(),
            r.variant.clone(),
            format!("{:.4}", r.subjects_included_pct),
            format!("{:.6}", r.acq_rate),
            format!("{:.6}", r.acq_speed),
            format!("{:.6}", r.tpr),
            format!("{:.6}", r.tnr),
            format!("{:.6}", r.bac),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// JSON array of rows; undefined metrics become `null`.
pub fn report_json(rows: &[ReportRow]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rows)?)
}

/// Reads rows written by [`write_report_csv`]; counts and errors are not
/// part of the CSV.
pub fn read_report_csv<R: std::io::Read>(input: R) -> Result<Vec<ReportRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::MalformedInput {
            line: 1,
            reason: format!(
                "unexpected report header {:?}",
                header.iter().collect::<Vec<_>>()
            ),
        });
    }
    let mut rows = vec![];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec[k].parse().map_err(|_| Error::MalformedInput {
                line: i + 2,
                reason: format!("column {} is not a number", CSV_HEADER[k]),
            })
        };
        rows.push(ReportRow {
            subset: rec[0].to_string(),
            variant: rec[1].to_string(),
            subjects_included_pct: num(2)?,
            acq_rate: num(3)?,
            acq_speed: num(4)?,
            tpr: num(5)?,
            tnr: num(6)?,
            bac: num(7)?,
            counts: None,
            error: None,
        });
    }
    Ok(rows)
}
