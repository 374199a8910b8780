//! Data-mix planning, record-level sampling and token-budget arithmetic.
//!
//! A plan takes per-(data type, category) token counts and sampling rates and
//! derives final token counts and each row's share of the bilingual mix (all
//! rows) and the monolingual mix (all rows except bilingual ones). Rates are
//! exact decimals, so `original x rate` is computed in integer arithmetic and
//! rounded half up.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::cleanse::ContentKey;

const MAX_RATE_SCALE: u32 = 12;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RateError {
    #[error("invalid rate {0:?}: expected a non-negative decimal")]
    Syntax(String),
    #[error("rate {0:?} has more than {MAX_RATE_SCALE} decimal places")]
    Precision(String),
}

/// An exact non-negative decimal `numerator / 10^scale`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rate {
    numerator: u64,
    scale: u32,
}

impl Rate {
    pub fn from_parts(numerator: u64, scale: u32) -> Self {
        let mut r = Rate { numerator, scale };
        while r.scale > 0 && r.numerator.is_multiple_of(10) {
            r.numerator /= 10;
            r.scale -= 1;
        }
        r
    }

    fn denominator(&self) -> u64 {
        10u64.pow(self.scale)
    }

    pub fn to_f64(&self) -> f64 {
        self.numerator as f64 / self.denominator() as f64
    }

    pub fn is_positive(&self) -> bool {
        self.numerator > 0
    }

    pub fn whole(&self) -> u64 {
        self.numerator / self.denominator()
    }

    /// `value x rate`, rounded half up. `None` on overflow.
    pub fn apply(&self, value: u64) -> Option<u64> {
        let den = self.denominator() as u128;
        let scaled = (value as u128).checked_mul(self.numerator as u128)?;
        u64::try_from((2 * scaled + den) / (2 * den)).ok()
    }

    /// Fractional part as a threshold on a uniform 64-bit hash: a hash `h`
    /// passes when `h < threshold`, i.e. `h / 2^64 < frac(rate)`.
    fn residual_threshold(&self) -> u128 {
        let den = self.denominator() as u128;
        let frac = (self.numerator as u128) % den;
        (frac << 64) / den
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let den = self.denominator();
        let whole = self.numerator / den;
        if self.scale == 0 {
            write!(f, "{whole}.0")
        } else {
            let frac = self.numerator % den;
            write!(f, "{whole}.{frac:0width$}", width = self.scale as usize)
        }
    }
}

impl fmt::Debug for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rate({self})")
    }
}

impl FromStr for Rate {
    type Err = RateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let (whole, frac) = t.split_once('.').unwrap_or((t, ""));
        let digits_ok = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if (whole.is_empty() && frac.is_empty()) || !digits_ok(whole) || !digits_ok(frac) {
            return Err(RateError::Syntax(s.to_owned()));
        }
        let frac = frac.trim_end_matches('0');
        if frac.len() as u32 > MAX_RATE_SCALE {
            return Err(RateError::Precision(s.to_owned()));
        }
        let scale = frac.len() as u32;
        let whole: u64 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| RateError::Syntax(s.to_owned()))?
        };
        let frac_val: u64 = if frac.is_empty() { 0 } else { frac.parse().unwrap_or(0) };
        let numerator = whole
            .checked_mul(10u64.pow(scale))
            .and_then(|w| w.checked_add(frac_val))
            .ok_or_else(|| RateError::Syntax(s.to_owned()))?;
        Ok(Rate::from_parts(numerator, scale))
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        let text = match Raw::deserialize(deserializer)? {
            // Shortest round-trip form, so 0.1 parses as exactly 1/10.
            Raw::Num(x) if x.is_finite() && x >= 0.0 => format!("{x}"),
            Raw::Num(x) => return Err(serde::de::Error::custom(format!("invalid rate {x}"))),
            Raw::Str(s) => s,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataType {
    Instruction,
    Code,
    Book,
    Paper,
    Monolingual,
    Bilingual,
}

impl DataType {
    pub fn as_str(&self) -> &'static str {
        match self {
            DataType::Instruction => "instruction",
            DataType::Code => "code",
            DataType::Book => "book",
            DataType::Paper => "paper",
            DataType::Monolingual => "monolingual",
            DataType::Bilingual => "bilingual",
        }
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DataType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "instruction" => Ok(DataType::Instruction),
            "code" => Ok(DataType::Code),
            "book" => Ok(DataType::Book),
            "paper" => Ok(DataType::Paper),
            "monolingual" => Ok(DataType::Monolingual),
            "bilingual" => Ok(DataType::Bilingual),
            other => Err(format!("unknown data type {other:?}")),
        }
    }
}

/// One configured mix row. `reported_final`, when given, is checked against
/// the computed final count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixInput {
    pub data_type: DataType,
    pub category: String,
    pub original_tokens: u64,
    pub rate: Rate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported_final: Option<u64>,
}

/// Which final count feeds the percentage columns when a row's reported final
/// disagrees with `original x rate`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinalPolicy {
    #[default]
    Computed,
    Reported,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    pub data_type: DataType,
    pub category: String,
    pub rate: Rate,
    pub computed_final: u64,
    pub reported_final: u64,
    /// `reported_final / original_tokens`.
    pub implied_rate: f64,
}

impl fmt::Display for Discrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "warning: {}/{}: rate {} gives final {} but the reported final is {} (implied rate {:.6})",
            self.data_type, self.category, self.rate, self.computed_final, self.reported_final, self.implied_rate
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanRow {
    pub data_type: DataType,
    pub category: String,
    pub rate: Rate,
    pub original_tokens: u64,
    /// Always `round_half_up(original_tokens x rate)`.
    pub final_tokens: u64,
    /// Tokens this row contributes to the percentage denominators.
    pub mix_tokens: u64,
    pub pct_bilingual_mix: f64,
    pub pct_monolingual_mix: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reported_final: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixPlan {
    pub rows: Vec<PlanRow>,
    pub bilingual_denominator: u64,
    pub monolingual_denominator: u64,
    pub policy: FinalPolicy,
    pub discrepancies: Vec<Discrepancy>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MixError {
    #[error("mix plan has no rows")]
    Empty,
    #[error("duplicate mix row {data_type}/{category}")]
    Duplicate { data_type: DataType, category: String },
    #[error("row {data_type}/{category}: rate must be positive")]
    NonPositiveRate { data_type: DataType, category: String },
    #[error("row {data_type}/{category}: token count overflows")]
    Overflow { data_type: DataType, category: String },
}

fn share(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 / whole as f64
    }
}

fn fill_percentages(rows: &mut [PlanRow]) -> Result<(u64, u64), MixError> {
    let overflow = |r: &PlanRow| MixError::Overflow {
        data_type: r.data_type,
        category: r.category.clone(),
    };
    let mut bi_total = 0u64;
    let mut mono_total = 0u64;
    for r in rows.iter() {
        bi_total = bi_total.checked_add(r.mix_tokens).ok_or_else(|| overflow(r))?;
        if r.data_type != DataType::Bilingual {
            mono_total = mono_total.checked_add(r.mix_tokens).ok_or_else(|| overflow(r))?;
        }
    }
    for r in rows.iter_mut() {
        r.pct_bilingual_mix = share(r.mix_tokens, bi_total);
        r.pct_monolingual_mix = (r.data_type != DataType::Bilingual).then(|| share(r.mix_tokens, mono_total));
    }
    Ok((bi_total, mono_total))
}

pub fn plan_mix(inputs: &[MixInput]) -> Result<MixPlan, MixError> {
    plan_mix_with(inputs, FinalPolicy::default())
}

pub fn plan_mix_with(inputs: &[MixInput], policy: FinalPolicy) -> Result<MixPlan, MixError> {
    if inputs.is_empty() {
        return Err(MixError::Empty);
    }
    let mut seen = HashSet::new();
    let mut rows = Vec::with_capacity(inputs.len());
    let mut discrepancies = Vec::new();
    for input in inputs {
        if !seen.insert((input.data_type, input.category.as_str())) {
            return Err(MixError::Duplicate {
                data_type: input.data_type,
                category: input.category.clone(),
            });
        }
        if !input.rate.is_positive() {
            return Err(MixError::NonPositiveRate {
                data_type: input.data_type,
                category: input.category.clone(),
            });
        }
        let final_tokens = input
            .rate
            .apply(input.original_tokens)
            .ok_or_else(|| MixError::Overflow {
                data_type: input.data_type,
                category: input.category.clone(),
            })?;
        let mut mix_tokens = final_tokens;
        if let Some(reported) = input.reported_final.filter(|&r| r != final_tokens) {
            discrepancies.push(Discrepancy {
                data_type: input.data_type,
                category: input.category.clone(),
                rate: input.rate,
                computed_final: final_tokens,
                reported_final: reported,
                implied_rate: share(reported, input.original_tokens),
            });
            if policy == FinalPolicy::Reported {
                mix_tokens = reported;
            }
        }
        rows.push(PlanRow {
            data_type: input.data_type,
            category: input.category.clone(),
            rate: input.rate,
            original_tokens: input.original_tokens,
            final_tokens,
            mix_tokens,
            pct_bilingual_mix: 0.0,
            pct_monolingual_mix: None,
            reported_final: input.reported_final,
        });
    }
    let (bilingual_denominator, monolingual_denominator) = fill_percentages(&mut rows)?;
    Ok(MixPlan {
        rows,
        bilingual_denominator,
        monolingual_denominator,
        policy,
        discrepancies,
    })
}

/// Drops bilingual rows and recomputes shares over the remaining rows. Final
/// counts are untouched.
pub fn derive_monolingual_mix(plan: &MixPlan) -> MixPlan {
    let mut rows: Vec<PlanRow> = plan
        .rows
        .iter()
        .filter(|r| r.data_type != DataType::Bilingual)
        .cloned()
        .collect();
    // Cannot overflow: the sum is bounded by the original denominator.
    let (total, mono_total) = fill_percentages(&mut rows).unwrap_or((0, 0));
    for r in &mut rows {
        r.pct_monolingual_mix = Some(r.pct_bilingual_mix);
    }
    MixPlan {
        rows,
        bilingual_denominator: total,
        monolingual_denominator: mono_total,
        policy: plan.policy,
        discrepancies: plan
            .discrepancies
            .iter()
            .filter(|d| d.data_type != DataType::Bilingual)
            .cloned()
            .collect(),
    }
}

impl MixPlan {
    pub fn row(&self, data_type: DataType, category: &str) -> Option<&PlanRow> {
        self.rows
            .iter()
            .find(|r| r.data_type == data_type && r.category == category)
    }

    pub fn total_final_tokens(&self) -> u64 {
        self.rows.iter().map(|r| r.final_tokens).sum()
    }

    /// Aligned text table: type, category, rate, original, final, percentages.
    pub fn render_table(&self) -> String {
        let header = [
            "Type",
            "Category",
            "Rate",
            "Original",
            "Final",
            "Bilingual",
            "Monolingual",
        ];
        let body: Vec<[String; 7]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.data_type.to_string(),
                    r.category.clone(),
                    r.rate.to_string(),
                    group_thousands(r.original_tokens),
                    group_thousands(r.final_tokens),
                    format_pct(r.pct_bilingual_mix),
                    format_pct(r.pct_monolingual_mix.unwrap_or(0.0)),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        let mut push_row = |cells: &[&str]| {
            let line: Vec<String> = cells
                .iter()
                .zip(widths)
                .enumerate()
                .map(|(i, (c, w))| if i < 2 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        };
        push_row(&header);
        for row in &body {
            push_row(&row.iter().map(String::as_str).collect::<Vec<_>>());
        }
        for d in &self.discrepancies {
            out.push_str(&d.to_string());
            out.push('\n');
        }
        out
    }
}

/// Percentage with two decimals, ties rounded up.
pub fn format_pct(fraction: f64) -> String {
    format!("{:.2}%", round_pct(fraction))
}

/// Fraction to percentage points rounded half up to two decimals.
pub fn round_pct(fraction: f64) -> f64 {
    (fraction * 10_000.0).round() / 100.0
}

pub fn group_thousands(n: u64) -> String {
    let s = n.to_string();
    let mut out = String::with_capacity(s.len() + s.len() / 3);
    for (i, c) in s.chars().enumerate() {
        if i > 0 && (s.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// Per-source sampling: every record repeats `repeats` times, plus once more
/// when its seeded hash falls below the fractional part of the rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplePlan {
    pub repeats: u64,
    pub residual: f64,
    pub seed: u64,
    #[serde(skip)]
    threshold: u128,
}

impl SamplePlan {
    pub fn new(rate: Rate, seed: u64) -> Self {
        let repeats = rate.whole();
        Self {
            repeats,
            residual: rate.to_f64() - repeats as f64,
            seed,
            threshold: rate.residual_threshold(),
        }
    }

    /// Copies emitted for a record with this digest.
    pub fn copies(&self, digest_bytes: &[u8]) -> u64 {
        self.repeats + u64::from((record_hash64(digest_bytes, self.seed) as u128) < self.threshold)
    }
}

/// Uniform 64-bit hash of a record digest under a seed.
pub fn record_hash64(digest_bytes: &[u8], seed: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(digest_bytes);
    h.update(seed.to_le_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("8 bytes"))
}

/// Copy count per record, computed in parallel.
pub fn sample_counts<T: ContentKey + Sync>(records: &[T], plan: &SamplePlan) -> Vec<u64> {
    records.par_iter().map(|r| plan.copies(&r.content_digest().0)).collect()
}

/// Emits each record's copies contiguously in input order.
pub fn sample_records<T: ContentKey + Clone + Sync>(records: &[T], plan: &SamplePlan) -> Vec<T> {
    let counts = sample_counts(records, plan);
    let mut out = Vec::with_capacity(counts.iter().sum::<u64>() as usize);
    for (r, n) in records.iter().zip(counts) {
        for _ in 0..n {
            out.push(r.clone());
        }
    }
    out
}

/// Seeded shuffle used at write-out so repeated copies are not adjacent.
pub fn interleave<T>(records: &mut [T], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    records.shuffle(&mut rng);
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum BudgetError {
    #[error("steps, batch size and sequence length must all be positive")]
    Zero,
    #[error("token budget {steps} x {batch} x {seqlen} overflows 64 bits")]
    Overflow { steps: u64, batch: u64, seqlen: u64 },
}

/// `steps x batch x seqlen` training tokens.
pub fn training_budget(steps: u64, batch: u64, seqlen: u64) -> Result<u64, BudgetError> {
    if steps == 0 || batch == 0 || seqlen == 0 {
        return Err(BudgetError::Zero);
    }
    steps
        .checked_mul(batch)
        .and_then(|x| x.checked_mul(seqlen))
        .ok_or(BudgetError::Overflow { steps, batch, seqlen })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rate(s: &str) -> Rate {
        s.parse().unwrap()
    }

    fn input(t: DataType, c: &str, orig: u64, r: &str) -> MixInput {
        MixInput {
            data_type: t,
            category: c.into(),
            original_tokens: orig,
            rate: rate(r),
            reported_final: None,
        }
    }

    #[test]
    fn rate_parsing() {
        assert_eq!(rate("0.1").to_string(), "0.1");
        assert_eq!(rate("50.0").to_string(), "50.0");
        assert_eq!(rate("5").whole(), 5);
        assert_eq!(rate(".25").to_string(), "0.25");
        assert_eq!(rate("0.10"), rate("0.1"));
        assert!("abc".parse::<Rate>().is_err());
        assert!("-1".parse::<Rate>().is_err());
        assert!("".parse::<Rate>().is_err());
        assert!("0.0000000000001".parse::<Rate>().is_err());
        let from_json: Rate = serde_json::from_str("0.1").unwrap();
        assert_eq!(from_json, rate("0.1"));
        let from_str: Rate = serde_json::from_str("\"20.0\"").unwrap();
        assert_eq!(from_str, rate("20"));
    }

    #[test]
    fn rounding_half_up() {
        assert_eq!(rate("0.2").apply(39_403_448_029), Some(7_880_689_606));
        assert_eq!(rate("0.1").apply(3_002_029_817), Some(300_202_982));
        assert_eq!(rate("0.5").apply(3), Some(2));
        assert_eq!(rate("0.5").apply(1), Some(1));
        assert_eq!(rate("1.0").apply(12345), Some(12345));
        assert_eq!(rate("2").apply(u64::MAX), None);
    }

    #[test]
    fn first_table_rows() {
        let plan = plan_mix(&[
            input(DataType::Instruction, "EN", 9_204_199_807, "0.1"),
            input(DataType::Bilingual, "high", 207_688_940_222, "0.1"),
        ])
        .unwrap();
        assert_eq!(plan.rows[0].final_tokens, 920_419_981);
        assert_eq!(plan.rows[1].final_tokens, 20_768_894_022);
        assert_eq!(plan.rows[1].pct_monolingual_mix, None);
        assert_eq!(plan.rows[0].pct_monolingual_mix, Some(1.0));
    }

    #[test]
    fn plan_errors() {
        assert_eq!(plan_mix(&[]), Err(MixError::Empty));
        let dup = [
            input(DataType::Code, "code", 1, "1"),
            input(DataType::Code, "code", 2, "1"),
        ];
        assert!(matches!(plan_mix(&dup), Err(MixError::Duplicate { .. })));
        let zero = [input(DataType::Code, "code", 1, "0")];
        assert!(matches!(plan_mix(&zero), Err(MixError::NonPositiveRate { .. })));
        let big = [
            input(DataType::Code, "a", u64::MAX, "1"),
            input(DataType::Code, "b", 1, "1"),
        ];
        assert!(matches!(plan_mix(&big), Err(MixError::Overflow { .. })));
    }

    #[test]
    fn discrepancy_flagged_and_policy_applied() {
        let mut row = input(DataType::Bilingual, "very high", 85_001_097_362, "0.1");
        row.reported_final = Some(4_250_054_868);
        let rows = [row, input(DataType::Code, "code", 100, "1")];
        let plan = plan_mix(&rows).unwrap();
        assert_eq!(plan.rows[0].final_tokens, 8_500_109_736);
        assert_eq!(plan.rows[0].mix_tokens, 8_500_109_736);
        assert_eq!(plan.discrepancies.len(), 1);
        assert!((plan.discrepancies[0].implied_rate - 0.05).abs() < 1e-9);
        assert!(plan.render_table().contains("warning: bilingual/very high"));
        let reported = plan_mix_with(&rows, FinalPolicy::Reported).unwrap();
        assert_eq!(reported.rows[0].final_tokens, 8_500_109_736);
        assert_eq!(reported.rows[0].mix_tokens, 4_250_054_868);
        assert_eq!(reported.bilingual_denominator, 4_250_054_968);
    }

    #[test]
    fn monolingual_derivation() {
        let plan = plan_mix(&[
            input(DataType::Monolingual, "x", 75, "1"),
            input(DataType::Bilingual, "y", 25, "1"),
        ])
        .unwrap();
        assert_eq!(plan.rows[0].pct_bilingual_mix, 0.75);
        let mono = derive_monolingual_mix(&plan);
        assert_eq!(mono.rows.len(), 1);
        assert_eq!(mono.rows[0].pct_bilingual_mix, 1.0);
        assert_eq!(mono.rows[0].pct_monolingual_mix, Some(1.0));
        assert_eq!(mono.rows[0].final_tokens, 75);

        let no_bi = plan_mix(&[
            input(DataType::Monolingual, "x", 75, "1"),
            input(DataType::Paper, "EN", 25, "2"),
        ])
        .unwrap();
        assert_eq!(derive_monolingual_mix(&no_bi), no_bi);
    }

    #[test]
    fn display_helpers() {
        assert_eq!(group_thousands(9_204_199_807), "9,204,199,807");
        assert_eq!(group_thousands(999), "999");
        assert_eq!(group_thousands(0), "0");
        assert_eq!(format_pct(0.003174), "0.32%");
        assert_eq!(format_pct(0.149927), "14.99%");
    }

    #[test]
    fn sample_plan_parts() {
        let p = SamplePlan::new(rate("2.0"), 7);
        assert_eq!((p.repeats, p.residual), (2, 0.0));
        assert_eq!(p.copies(b"anything"), 2);
        let p = SamplePlan::new(rate("0.5"), 7);
        assert_eq!(p.repeats, 0);
        assert_eq!(p.threshold, 1u128 << 63);
        assert!((p.residual - 0.5).abs() < 1e-15);
    }

    #[test]
    fn interleave_is_seeded() {
        let mut a: Vec<u32> = (0..100).collect();
        let mut b = a.clone();
        interleave(&mut a, 3);
        interleave(&mut b, 3);
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn budgets() {
        assert_eq!(training_budget(25_000, 2048, 8192), Ok(419_430_400_000));
        assert_eq!(training_budget(40_000, 2048, 8192), Ok(671_088_640_000));
        assert_eq!(training_budget(1, 1, 1), Ok(1));
        assert_eq!(training_budget(0, 1, 1), Err(BudgetError::Zero));
        assert!(matches!(
            training_budget(u64::MAX, 2, 1),
            Err(BudgetError::Overflow { .. })
        ));
    }
}
