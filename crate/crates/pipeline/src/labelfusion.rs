//! Two-scorer label fusion with a suspension override, and quota-aware
//! planning of scorer queries.
//!
//! Scorer A reports integers in `0..=100`, scorer B reals in `[0, 5]`. Each
//! score is cut into bot / normal / mid by strict thresholds. A user is a bot
//! when suspended or when both scorers say bot, normal when both say normal
//! and the user is not suspended, and unlabeled otherwise. Only users that
//! scorer A places in its bot or normal band are forwarded to scorer B.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{parse_timestamp, Timestamp};

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("unknown scorer id {0:?}")]
    UnknownScorer(String),
    #[error("{scorer} score {score} outside its range")]
    ScoreOutOfRange { scorer: ScorerId, score: f64 },
    #[error("invalid fusion policy: {0}")]
    InvalidPolicy(String),
    #[error("duplicate {scorer} score for user {user_id}")]
    DuplicateScore { scorer: ScorerId, user_id: String },
    #[error("score file line {line}: {message}")]
    ScoreFile { line: usize, message: String },
    #[error("label table line {line}: {message}")]
    LabelFile { line: usize, message: String },
    #[error("daily quota for {0} must be positive")]
    ZeroQuota(ScorerId),
    #[error("survivor ratio {0} outside [0, 1]")]
    BadSurvivorRatio(f64),
    #[error("{0} daily quota exhausted")]
    QuotaExhausted(ScorerId),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScorerId {
    #[serde(rename = "scorer_A")]
    A,
    #[serde(rename = "scorer_B")]
    B,
}

impl fmt::Display for ScorerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScorerId::A => "scorer_A",
            ScorerId::B => "scorer_B",
        })
    }
}

impl FromStr for ScorerId {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "scorer_a" | "a" | "botsentinel" => Ok(ScorerId::A),
            "scorer_b" | "b" | "botometer" => Ok(ScorerId::B),
            _ => Err(LabelError::UnknownScorer(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerOutput {
    scorer: ScorerId,
    user_id: String,
    score: f64,
    queried_at: Option<Timestamp>,
}

impl ScorerOutput {
    pub fn new(scorer: ScorerId, user_id: impl Into<String>, score: f64, queried_at: Option<Timestamp>) -> Result<Self, LabelError> {
        let in_range = match scorer {
            ScorerId::A => (0.0..=100.0).contains(&score) && score.fract() == 0.0,
            ScorerId::B => (0.0..=5.0).contains(&score),
        };
        if !in_range {
            return Err(LabelError::ScoreOutOfRange { scorer, score });
        }
        Ok(Self {
            scorer,
            user_id: user_id.into(),
            score,
            queried_at,
        })
    }

    pub fn scorer(&self) -> ScorerId {
        self.scorer
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn queried_at(&self) -> Option<Timestamp> {
        self.queried_at
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionPolicy {
    pub bot_threshold_a: i64,
    pub normal_threshold_a: i64,
    pub bot_threshold_b: f64,
    pub normal_threshold_b: f64,
    pub suspended_is_bot: bool,
}

impl Default for FusionPolicy {
    fn default() -> Self {
        Self {
            bot_threshold_a: 75,
            normal_threshold_a: 25,
            bot_threshold_b: 4.0,
            normal_threshold_b: 1.0,
            suspended_is_bot: true,
        }
    }
}

impl FusionPolicy {
    pub fn validate(&self) -> Result<(), LabelError> {
        if self.normal_threshold_a >= self.bot_threshold_a {
            return Err(LabelError::InvalidPolicy("scorer_A normal threshold must be below bot threshold".into()));
        }
        if !(self.normal_threshold_b < self.bot_threshold_b) {
            return Err(LabelError::InvalidPolicy("scorer_B normal threshold must be below bot threshold".into()));
        }
        Ok(())
    }

    fn thresholds(&self, scorer: ScorerId) -> (f64, f64) {
        match scorer {
            ScorerId::A => (self.normal_threshold_a as f64, self.bot_threshold_a as f64),
            ScorerId::B => (self.normal_threshold_b, self.bot_threshold_b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreTag {
    Bot,
    Normal,
    Mid,
}

/// Bands a score with strict inequalities; scores equal to a threshold are mid.
pub fn verdict_per_scorer(output: &ScorerOutput, policy: &FusionPolicy) -> ScoreTag {
    let (normal, bot) = policy.thresholds(output.scorer);
    if output.score > bot {
        ScoreTag::Bot
    } else if output.score < normal {
        ScoreTag::Normal
    } else {
        ScoreTag::Mid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Bot,
    Normal,
    Unlabeled,
}

impl Verdict {
    /// Class label: 1 for bot, 0 for normal.
    pub fn label(self) -> Option<u8> {
        match self {
            Verdict::Bot => Some(1),
            Verdict::Normal => Some(0),
            Verdict::Unlabeled => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Verdict::Bot => "bot",
            Verdict::Normal => "normal",
            Verdict::Unlabeled => "unlabeled",
        }
    }
}

impl FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bot" => Ok(Verdict::Bot),
            "normal" => Ok(Verdict::Normal),
            "unlabeled" => Ok(Verdict::Unlabeled),
            _ => Err(format!("unknown verdict {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Evidence {
    #[serde(rename = "A_bot")]
    ABot,
    #[serde(rename = "A_normal")]
    ANormal,
    #[serde(rename = "A_mid")]
    AMid,
    #[serde(rename = "B_bot")]
    BBot,
    #[serde(rename = "B_normal")]
    BNormal,
    #[serde(rename = "B_mid")]
    BMid,
    #[serde(rename = "suspended")]
    Suspended,
    #[serde(rename = "missing_A")]
    MissingA,
    #[serde(rename = "missing_B")]
    MissingB,
}

const EVIDENCE_NAMES: [(Evidence, &str); 9] = [
    (Evidence::ABot, "A_bot"),
    (Evidence::ANormal, "A_normal"),
    (Evidence::AMid, "A_mid"),
    (Evidence::BBot, "B_bot"),
    (Evidence::BNormal, "B_normal"),
    (Evidence::BMid, "B_mid"),
    (Evidence::Suspended, "suspended"),
    (Evidence::MissingA, "missing_A"),
    (Evidence::MissingB, "missing_B"),
];

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = EVIDENCE_NAMES.iter().find(|(e, _)| e == self).map(|(_, n)| *n).unwrap();
        f.write_str(name)
    }
}

impl FromStr for Evidence {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EVIDENCE_NAMES
            .iter()
            .find(|(_, n)| *n == s)
            .map(|(e, _)| *e)
            .ok_or_else(|| format!("unknown evidence tag {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusedLabel {
    pub user_id: String,
    pub verdict: Verdict,
    pub provenance: BTreeSet<Evidence>,
}

/// Total fusion rule. `a` must come from scorer A and `b` from scorer B.
pub fn fuse(
    user_id: &str,
    a: Option<&ScorerOutput>,
    b: Option<&ScorerOutput>,
    suspended: bool,
    policy: &FusionPolicy,
) -> FusedLabel {
    debug_assert!(a.is_none_or(|o| o.scorer == ScorerId::A));
    debug_assert!(b.is_none_or(|o| o.scorer == ScorerId::B));
    let ta = a.map(|o| verdict_per_scorer(o, policy));
    let tb = b.map(|o| verdict_per_scorer(o, policy));
    let mut provenance = BTreeSet::new();
    provenance.insert(match ta {
        Some(ScoreTag::Bot) => Evidence::ABot,
        Some(ScoreTag::Normal) => Evidence::ANormal,
        Some(ScoreTag::Mid) => Evidence::AMid,
        None => Evidence::MissingA,
    });
    provenance.insert(match tb {
        Some(ScoreTag::Bot) => Evidence::BBot,
        Some(ScoreTag::Normal) => Evidence::BNormal,
        Some(ScoreTag::Mid) => Evidence::BMid,
        None => Evidence::MissingB,
    });
    if suspended {
        provenance.insert(Evidence::Suspended);
    }
    let verdict = if suspended && policy.suspended_is_bot {
        Verdict::Bot
    } else {
        match (ta, tb) {
            (Some(ScoreTag::Bot), Some(ScoreTag::Bot)) => Verdict::Bot,
            (Some(ScoreTag::Normal), Some(ScoreTag::Normal)) if !suspended => Verdict::Normal,
            _ => Verdict::Unlabeled,
        }
    };
    FusedLabel {
        user_id: user_id.to_string(),
        verdict,
        provenance,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub scored: usize,
    pub bot: usize,
    pub normal: usize,
    pub mid: usize,
    pub missing: usize,
}

impl StageCounts {
    fn add(&mut self, tag: Option<ScoreTag>) {
        match tag {
            Some(t) => {
                self.scored += 1;
                match t {
                    ScoreTag::Bot => self.bot += 1,
                    ScoreTag::Normal => self.normal += 1,
                    ScoreTag::Mid => self.mid += 1,
                }
            }
            None => self.missing += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunnelReport {
    pub input: usize,
    /// Scorer A bands over every input user.
    pub stage_a: StageCounts,
    /// Users in scorer A's bot or normal band, sent on to scorer B.
    pub forwarded: usize,
    /// Scorer B bands over forwarded users.
    pub stage_b: StageCounts,
    /// Forwarded users on which both scorers agree.
    pub agreed_bot: usize,
    pub agreed_normal: usize,
    pub suspended: usize,
    pub final_bot: usize,
    pub final_normal: usize,
    pub unlabeled: usize,
    pub skipped_unknown_scores: usize,
    pub skipped_unknown_suspensions: usize,
    pub ignored_unforwarded_b: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunnelOutput {
    pub labels: Vec<FusedLabel>,
    pub report: FunnelReport,
}

/// Runs the labeling funnel over `users`. Scores and suspensions for users
/// outside `users` are counted and skipped.
pub fn run_funnel<'a>(
    users: impl IntoIterator<Item = &'a str>,
    scores: &[ScorerOutput],
    suspended: &BTreeSet<String>,
    policy: &FusionPolicy,
) -> Result<FunnelOutput, LabelError> {
    policy.validate()?;
    let users: BTreeSet<&str> = users.into_iter().collect();
    let mut by_scorer: [BTreeMap<&str, &ScorerOutput>; 2] = [BTreeMap::new(), BTreeMap::new()];
    let mut skipped_unknown_scores = 0;
    for s in scores {
        if !users.contains(s.user_id.as_str()) {
            skipped_unknown_scores += 1;
            continue;
        }
        let slot = &mut by_scorer[s.scorer as usize];
        if slot.insert(s.user_id.as_str(), s).is_some() {
            return Err(LabelError::DuplicateScore {
                scorer: s.scorer,
                user_id: s.user_id.clone(),
            });
        }
    }
    let skipped_unknown_suspensions = suspended.iter().filter(|u| !users.contains(u.as_str())).count();

    let mut report = FunnelReport {
        input: users.len(),
        stage_a: StageCounts::default(),
        forwarded: 0,
        stage_b: StageCounts::default(),
        agreed_bot: 0,
        agreed_normal: 0,
        suspended: 0,
        final_bot: 0,
        final_normal: 0,
        unlabeled: 0,
        skipped_unknown_scores,
        skipped_unknown_suspensions,
        ignored_unforwarded_b: 0,
    };
    let mut labels = Vec::with_capacity(users.len());
    for &user in &users {
        let a = by_scorer[0].get(user).copied();
        let ta = a.map(|o| verdict_per_scorer(o, policy));
        report.stage_a.add(ta);
        let forwarded = matches!(ta, Some(ScoreTag::Bot | ScoreTag::Normal));
        let b = if forwarded {
            report.forwarded += 1;
            let b = by_scorer[1].get(user).copied();
            let tb = b.map(|o| verdict_per_scorer(o, policy));
            report.stage_b.add(tb);
            match (ta, tb) {
                (Some(ScoreTag::Bot), Some(ScoreTag::Bot)) => report.agreed_bot += 1,
                (Some(ScoreTag::Normal), Some(ScoreTag::Normal)) => report.agreed_normal += 1,
                _ => {}
            }
            b
        } else {
            if by_scorer[1].contains_key(user) {
                report.ignored_unforwarded_b += 1;
            }
            None
        };
        let is_suspended = suspended.contains(user);
        if is_suspended {
            report.suspended += 1;
        }
        let label = fuse(user, a, b, is_suspended, policy);
        match label.verdict {
            Verdict::Bot => report.final_bot += 1,
            Verdict::Normal => report.final_normal += 1,
            Verdict::Unlabeled => report.unlabeled += 1,
        }
        labels.push(label);
    }
    Ok(FunnelOutput { labels, report })
}

#[derive(Debug, Deserialize)]
struct ScoreRow {
    user_id: String,
    scorer_id: String,
    score: f64,
    #[serde(default)]
    queried_at: Option<String>,
}

/// Reads `user_id,scorer_id,score,queried_at` rows (header required).
pub fn read_scores<R: Read>(reader: R) -> Result<Vec<ScorerOutput>, LabelError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<ScoreRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| LabelError::ScoreFile {
            line,
            message: e.to_string(),
        })?;
        let err = |message: String| LabelError::ScoreFile { line, message };
        let scorer: ScorerId = row.scorer_id.parse().map_err(|e: LabelError| err(e.to_string()))?;
        let queried_at = match row.queried_at.as_deref().filter(|s| !s.is_empty()) {
            Some(s) => Some(parse_timestamp(s).map_err(err)?),
            None => None,
        };
        out.push(ScorerOutput::new(scorer, row.user_id, row.score, queried_at).map_err(|e| err(e.to_string()))?);
    }
    Ok(out)
}

pub fn write_scores<W: Write>(writer: W, scores: &[ScorerOutput]) -> Result<(), LabelError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["user_id", "scorer_id", "score", "queried_at"])?;
    for s in scores {
        let at = s.queried_at.map(|t| t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)).unwrap_or_default();
        w.write_record([s.user_id.as_str(), &s.scorer.to_string(), &s.score.to_string(), &at])?;
    }
    w.flush()?;
    Ok(())
}

/// One user id per line; blank lines and `#` comments are ignored.
pub fn read_suspensions<R: Read>(mut reader: R) -> Result<BTreeSet<String>, LabelError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

/// Writes `user_id,verdict,provenance`, provenance tags joined by `|`.
pub fn write_labels<W: Write>(writer: W, labels: &[FusedLabel]) -> Result<(), LabelError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["user_id", "verdict", "provenance"])?;
    for l in labels {
        let prov: Vec<String> = l.provenance.iter().map(Evidence::to_string).collect();
        w.write_record([l.user_id.as_str(), l.verdict.as_str(), &prov.join("|")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels<R: Read>(reader: R) -> Result<Vec<FusedLabel>, LabelError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let err = |message: String| LabelError::LabelFile { line, message };
        if rec.len() != 3 {
            return Err(err(format!("expected 3 fields, got {}", rec.len())));
        }
        let verdict: Verdict = rec[1].parse().map_err(err)?;
        let provenance = rec[2]
            .split('|')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<Evidence>())
            .collect::<Result<_, _>>()
            .map_err(err)?;
        out.push(FusedLabel {
            user_id: rec[0].to_string(),
            verdict,
            provenance,
        });
    }
    Ok(out)
}

/// How many users survive the first stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Survivors {
    Ratio(f64),
    Count(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanRequest {
    pub n_users: u64,
    /// Users per day; `None` is unlimited.
    pub quota_a: Option<u64>,
    pub quota_b: Option<u64>,
    pub survivors: Survivors,
}

impl Default for PlanRequest {
    fn default() -> Self {
        Self {
            n_users: 0,
            quota_a: None,
            quota_b: Some(2000),
            survivors: Survivors::Ratio(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StagePlan {
    pub scorer: ScorerId,
    pub daily_quota: Option<u64>,
    pub input_size: u64,
    pub days: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderingPlan {
    pub stages: Vec<StagePlan>,
    pub total_days: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotaPlan {
    /// Scorer A first, then scorer B first.
    pub orderings: Vec<OrderingPlan>,
    pub recommended: usize,
}

fn stage_days(input: u64, quota: Option<u64>) -> u64 {
    quota.map_or(0, |q| input.div_ceil(q))
}

/// Estimates labeling time for both scorer orderings. The same survivor
/// count applies to whichever scorer runs first; ties favour scorer A first.
pub fn plan_labeling(req: &PlanRequest) -> Result<QuotaPlan, LabelError> {
    for (scorer, q) in [(ScorerId::A, req.quota_a), (ScorerId::B, req.quota_b)] {
        if q == Some(0) {
            return Err(LabelError::ZeroQuota(scorer));
        }
    }
    let survivors = match req.survivors {
        Survivors::Ratio(r) => {
            if !(0.0..=1.0).contains(&r) {
                return Err(LabelError::BadSurvivorRatio(r));
            }
            (r * req.n_users as f64).ceil() as u64
        }
        Survivors::Count(c) => c.min(req.n_users),
    };
    let quota = |s: ScorerId| match s {
        ScorerId::A => req.quota_a,
        ScorerId::B => req.quota_b,
    };
    let orderings: Vec<OrderingPlan> = [[ScorerId::A, ScorerId::B], [ScorerId::B, ScorerId::A]]
        .iter()
        .map(|order| {
            let stages: Vec<StagePlan> = order
                .iter()
                .zip([req.n_users, survivors])
                .map(|(&scorer, input_size)| StagePlan {
                    scorer,
                    daily_quota: quota(scorer),
                    input_size,
                    days: stage_days(input_size, quota(scorer)),
                })
                .collect();
            OrderingPlan {
                total_days: stages.iter().map(|s| s.days).sum(),
                stages,
            }
        })
        .collect();
    let recommended = usize::from(orderings[1].total_days < orderings[0].total_days);
    Ok(QuotaPlan { orderings, recommended })
}

/// Scorer service seen through a daily request limit.
pub trait ScorerClient {
    fn scorer(&self) -> ScorerId;
    fn daily_quota(&self) -> Option<u64>;
    /// Score for `user_id`, `Ok(None)` when the service has no score.
    fn query(&mut self, user_id: &str) -> Result<Option<ScorerOutput>, LabelError>;
    /// Moves to the next day, resetting the quota.
    fn next_day(&mut self);
}

/// Replays recorded scores under a daily quota.
#[derive(Debug, Clone)]
pub struct RecordedScorer {
    scorer: ScorerId,
    scores: BTreeMap<String, ScorerOutput>,
    daily_quota: Option<u64>,
    used_today: u64,
}

impl RecordedScorer {
    pub fn new(scorer: ScorerId, scores: &[ScorerOutput], daily_quota: Option<u64>) -> Self {
        let scores = scores
            .iter()
            .filter(|s| s.scorer == scorer)
            .map(|s| (s.user_id.clone(), s.clone()))
            .collect();
        Self {
            scorer,
            scores,
            daily_quota,
            used_today: 0,
        }
    }
}

impl ScorerClient for RecordedScorer {
    fn scorer(&self) -> ScorerId {
        self.scorer
    }

    fn daily_quota(&self) -> Option<u64> {
        self.daily_quota
    }

    fn query(&mut self, user_id: &str) -> Result<Option<ScorerOutput>, LabelError> {
        if self.daily_quota.is_some_and(|q| self.used_today >= q) {
            return Err(LabelError::QuotaExhausted(self.scorer));
        }
        self.used_today += 1;
        Ok(self.scores.get(user_id).cloned())
    }

    fn next_day(&mut self) {
        self.used_today = 0;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    /// Quota-limited days spent per stage.
    pub stage_days: Vec<u64>,
    pub total_days: u64,
    pub scores: Vec<ScorerOutput>,
}

/// Queries `first` for every user, forwards users in its bot or normal band
/// to `second`, and counts the days spent when a quota forces a wait.
pub fn simulate_schedule(
    users: &[String],
    first: &mut dyn ScorerClient,
    second: &mut dyn ScorerClient,
    policy: &FusionPolicy,
) -> Result<SimulationReport, LabelError> {
    fn run(client: &mut dyn ScorerClient, users: &[String]) -> Result<(u64, Vec<ScorerOutput>), LabelError> {
        let mut days = 0u64;
        let mut out = Vec::new();
        let mut queried_today = 0u64;
        for u in users {
            let result = match client.query(u) {
                Err(LabelError::QuotaExhausted(_)) => {
                    client.next_day();
                    days += 1;
                    queried_today = 0;
                    client.query(u)?
                }
                other => other?,
            };
            queried_today += 1;
            out.extend(result);
        }
        // unlimited services finish within the day they are queried and
        // are not counted, matching the plan
        if queried_today > 0 && client.daily_quota().is_some() {
            days += 1;
        }
        client.next_day();
        Ok((days, out))
    }
    let (d1, s1) = run(first, users)?;
    let forwarded: Vec<String> = s1
        .iter()
        .filter(|s| verdict_per_scorer(s, policy) != ScoreTag::Mid)
        .map(|s| s.user_id.clone())
        .collect();
    let (d2, s2) = run(second, &forwarded)?;
    let mut scores = s1;
    scores.extend(s2);
    Ok(SimulationReport {
        stage_days: vec![d1, d2],
        total_days: d1 + d2,
        scores,
    })
}
