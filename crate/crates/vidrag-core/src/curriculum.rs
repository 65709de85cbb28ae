//! Curriculum-learning data machinery: SFT filtering, next-token-prediction
//! and preference-optimization losses, and preference-pair construction.
//!
//! The losses operate on supplied log-likelihoods rather than an in-process
//! language model — that makes them exactly computable and lets the
//! gradient checks run against finite differences.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memory::ClueSet;

/// Per-step probabilities of the realized tokens of one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenProbTable {
    probs: Vec<f64>,
}

impl TokenProbTable {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::domain("token probability table must be non-empty"));
        }
        for (i, p) in probs.iter().enumerate() {
            if !(p.is_finite() && *p > 0.0 && *p <= 1.0) {
                return Err(Error::domain(format!(
                    "probability at step {i} must be in (0, 1], got {p}"
                )));
            }
        }
        Ok(Self { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Concatenate two tables; the loss over the result is the sum of the
    /// individual losses.
    pub fn concat(&self, other: &TokenProbTable) -> TokenProbTable {
        let mut probs = self.probs.clone();
        probs.extend_from_slice(&other.probs);
        TokenProbTable { probs }
    }
}

/// Next-token-prediction loss: the summed negative log-likelihood
/// `-sum_t ln p_t`. Uses compensated summation so the result is accurate
/// to the last bit regardless of sequence length.
pub fn ntp_loss(table: &TokenProbTable) -> f64 {
    neumaier_sum(table.probs.iter().map(|p| -p.ln()))
}

/// Neumaier-compensated summation.
fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

/// Log-likelihoods for one preference pair under the trained policy and the
/// frozen reference, plus the divergence-control coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpoInputs {
    pub logp_theta_pos: f64,
    pub logp_theta_neg: f64,
    pub logp_ref_pos: f64,
    pub logp_ref_neg: f64,
    pub beta: f64,
}

impl DpoInputs {
    pub fn new(
        logp_theta_pos: f64,
        logp_theta_neg: f64,
        logp_ref_pos: f64,
        logp_ref_neg: f64,
        beta: f64,
    ) -> Result<Self> {
        let inputs = Self {
            logp_theta_pos,
            logp_theta_neg,
            logp_ref_pos,
            logp_ref_neg,
            beta,
        };
        inputs.validate()?;
        Ok(inputs)
    }

    fn validate(&self) -> Result<()> {
        let logps = [
            self.logp_theta_pos,
            self.logp_theta_neg,
            self.logp_ref_pos,
            self.logp_ref_neg,
        ];
        if logps.iter().any(|v| !v.is_finite() || *v > 0.0) {
            return Err(Error::domain(
                "log-likelihoods must be finite and non-positive",
            ));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::domain(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// The inner argument `beta * [(logp_t+ - logp_r+) - (logp_t- - logp_r-)]`.
    fn inner(&self) -> f64 {
        self.beta
            * ((self.logp_theta_pos - self.logp_ref_pos)
                - (self.logp_theta_neg - self.logp_ref_neg))
    }
}

/// `softplus(x) = ln(1 + e^x)` with the standard large-|x| branch.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Numerically stable logistic sigmoid.
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Preference-optimization loss: `sum_i -ln sigma(z_i)` over the batch,
/// where `z_i` is each pair's inner argument.
pub fn dpo_loss(batch: &[DpoInputs]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::domain("dpo_loss requires a non-empty batch"));
    }
    for inputs in batch {
        inputs.validate()?;
    }
    Ok(neumaier_sum(batch.iter().map(|i| softplus(-i.inner()))))
}

/// Partial derivatives of the loss for one pair with respect to the policy
/// log-likelihoods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpoGrad {
    pub d_logp_theta_pos: f64,
    pub d_logp_theta_neg: f64,
}

/// Analytic gradient of [`dpo_loss`] per input:
/// `d/dlogp+ = -beta * sigma(-z)` and `d/dlogp- = +beta * sigma(-z)`.
pub fn dpo_grad(batch: &[DpoInputs]) -> Result<Vec<DpoGrad>> {
    if batch.is_empty() {
        return Err(Error::domain("dpo_grad requires a non-empty batch"));
    }
    batch
        .iter()
        .map(|inputs| {
            inputs.validate()?;
            let slope = inputs.beta * sigmoid(-inputs.inner());
            Ok(DpoGrad {
                d_logp_theta_pos: -slope,
                d_logp_theta_neg: slope,
            })
        })
        .collect()
}

/// A clue set with its generator-derived quality score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredClue {
    pub clue_set: ClueSet,
    pub score: f64,
    pub provenance: String,
}

impl ScoredClue {
    pub fn new(clue_set: ClueSet, score: f64, provenance: String) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::validation(format!(
                "score must be in [0, 1], got {score}"
            )));
        }
        Ok(Self {
            clue_set,
            score,
            provenance,
        })
    }
}

/// A (winning, losing) clue-set pair for preference optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub positive: ScoredClue,
    pub negative: ScoredClue,
    pub question_id: String,
}

/// Candidate clue sets for one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateGroup {
    pub question_id: String,
    pub candidates: Vec<ScoredClue>,
}

/// Build preference pairs per question: every (positive, negative)
/// combination where the positive scores above `pos_threshold`, the
/// negative below `neg_threshold`, and the margin is at least `tau`.
/// With a cap, highest-margin pairs win.
pub fn build_preference_pairs(
    groups: &[CandidateGroup],
    tau: f64,
    pos_threshold: f64,
    neg_threshold: f64,
    max_pairs_per_question: Option<usize>,
) -> Result<Vec<PreferencePair>> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::validation(format!("tau must be >= 0, got {tau}")));
    }
    if !(0.0..=1.0).contains(&pos_threshold) || !(0.0..=1.0).contains(&neg_threshold) {
        return Err(Error::validation("thresholds must be in [0, 1]"));
    }
    if pos_threshold <= neg_threshold {
        return Err(Error::validation(
            "positive threshold must exceed negative threshold",
        ));
    }
    let mut pairs = Vec::new();
    for group in groups {
        let mut group_pairs: Vec<PreferencePair> = Vec::new();
        for pos in &group.candidates {
            if pos.score <= pos_threshold {
                continue;
            }
            for neg in &group.candidates {
                if neg.score >= neg_threshold {
                    continue;
                }
                if pos.score - neg.score < tau {
                    continue;
                }
                group_pairs.push(PreferencePair {
                    positive: pos.clone(),
                    negative: neg.clone(),
                    question_id: group.question_id.clone(),
                });
            }
        }
        group_pairs.sort_by(|a, b| {
            let ma = a.positive.score - a.negative.score;
            let mb = b.positive.score - b.negative.score;
            mb.total_cmp(&ma)
                .then_with(|| a.positive.score.total_cmp(&b.positive.score))
                .then_with(|| a.negative.score.total_cmp(&b.negative.score))
        });
        if let Some(cap) = max_pairs_per_question {
            group_pairs.truncate(cap);
        }
        pairs.extend(group_pairs);
    }
    Ok(pairs)
}

/// Keep exactly the clue sets whose downstream answer was correct.
pub fn filter_sft_examples(records: &[(ClueSet, bool)]) -> Vec<ClueSet> {
    records
        .iter()
        .filter(|(_, correct)| *correct)
        .map(|(cs, _)| cs.clone())
        .collect()
}

/// Scores a clue set by the downstream generator's confidence.
pub trait ScoringOracle {
    fn score_clues(&self, clue_set: &ClueSet) -> Result<f64>;

    fn name(&self) -> &str;
}

/// Deterministic stand-in for generator confidence: the fraction of clues
/// containing a planted evidence keyword (case-insensitive).
#[derive(Debug, Clone)]
pub struct KeywordOracle {
    pub keyword: String,
}

impl KeywordOracle {
    pub fn new(keyword: impl Into<String>) -> Self {
        Self {
            keyword: keyword.into(),
        }
    }
}

impl ScoringOracle for KeywordOracle {
    fn score_clues(&self, clue_set: &ClueSet) -> Result<f64> {
        let needle = self.keyword.to_lowercase();
        if needle.is_empty() {
            return Err(Error::validation("oracle keyword must be non-empty"));
        }
        let matching = clue_set
            .clues
            .iter()
            .filter(|c| c.to_lowercase().contains(&needle))
            .count();
        Ok(matching as f64 / clue_set.clues.len() as f64)
    }

    fn name(&self) -> &str {
        "keyword-fraction"
    }
}

/// Score one clue set, recording the oracle's name as provenance.
pub fn score_clue_set(clue_set: &ClueSet, oracle: &dyn ScoringOracle) -> Result<ScoredClue> {
    let score = oracle.score_clues(clue_set)?;
    ScoredClue::new(clue_set.clone(), score, oracle.name().to_string())
}

#[derive(Serialize)]
struct PreferenceSide<'a> {
    clues: &'a [String],
    draft: &'a str,
    score: f64,
}

#[derive(Serialize)]
struct PreferenceRecord<'a> {
    question_id: &'a str,
    positive: PreferenceSide<'a>,
    negative: PreferenceSide<'a>,
}

/// Export preference pairs as the line-delimited DPO training set.
pub fn write_preference_dataset(pairs: &[PreferencePair], writer: &mut impl Write) -> Result<()> {
    for pair in pairs {
        let record = PreferenceRecord {
            question_id: &pair.question_id,
            positive: PreferenceSide {
                clues: &pair.positive.clue_set.clues,
                draft: &pair.positive.clue_set.draft_answer,
                score: pair.positive.score,
            },
            negative: PreferenceSide {
                clues: &pair.negative.clue_set.clues,
                draft: &pair.negative.clue_set.draft_answer,
                score: pair.negative.score,
            },
        };
        writeln!(writer, "{}", serde_json::to_string(&record)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SftRecord<'a> {
    question: &'a str,
    clues: &'a [String],
    draft_answer: &'a str,
}

/// Export filtered clue sets as the line-delimited SFT training set.
pub fn write_sft_dataset(clue_sets: &[ClueSet], writer: &mut impl Write) -> Result<()> {
    for cs in clue_sets {
        let record = SftRecord {
            question: &cs.question,
            clues: &cs.clues,
            draft_answer: &cs.draft_answer,
        };
        writeln!(writer, "{}", serde_json::to_string(&record)?)?;
    }
    Ok(())
}
