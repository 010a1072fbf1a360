//! ConvQA model contract, a trainable lexical reference model, training-set
//! augmentation, and a line-protocol adapter for external models.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::corpus::{self, AnnotatedQuestion};
use crate::error::{Error, Result};
use crate::kg::{ItemKind, KnowledgeGraph};
use crate::reformulator::Reformulation;
use crate::text;

/// Most candidates a ranked list keeps.
pub const MAX_CANDIDATES: usize = 50;
/// Relative weight of history tokens against current-question tokens.
pub const HISTORY_WEIGHT: f64 = 0.5;

const STOPWORDS: [&str; 24] = [
    "the", "a", "an", "of", "on", "in", "is", "was", "by", "for", "to", "and", "did", "does", "do", "at", "it", "he",
    "she", "they", "him", "her", "them", "its",
];

/// One earlier ⟨question, answer⟩ exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub question: Vec<String>,
    pub answer: String,
}

impl Exchange {
    pub fn text(&self) -> String {
        let q = text::detokenize(&self.question);
        if self.answer.is_empty() {
            q
        } else {
            format!("{q} {}", self.answer)
        }
    }
}

pub fn exchanges(aq: &AnnotatedQuestion) -> Vec<Exchange> {
    aq.history
        .iter()
        .map(|h| Exchange {
            question: h.question.clone(),
            answer: h.answer_label.clone(),
        })
        .collect()
}

/// A training or evaluation instance for a QA model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QaPair {
    pub conversation_id: String,
    pub turn_index: usize,
    pub history: Vec<Exchange>,
    pub question: Vec<String>,
    pub gold: Vec<String>,
}

impl QaPair {
    pub fn from_annotated(aq: &AnnotatedQuestion) -> Self {
        QaPair {
            conversation_id: aq.conversation_id.clone(),
            turn_index: aq.turn_index,
            history: exchanges(aq),
            question: aq.question.clone(),
            gold: aq.gold_answers.clone(),
        }
    }
}

/// Scored answers, best first, ids unique.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedAnswerList {
    entries: Vec<(String, f64)>,
}

impl RankedAnswerList {
    /// Sorts by score (descending, ties by id), drops repeated ids keeping
    /// the best score, and truncates to [`MAX_CANDIDATES`].
    pub fn from_scores(scores: impl IntoIterator<Item = (String, f64)>) -> Self {
        let mut best: HashMap<String, f64> = HashMap::new();
        for (id, s) in scores {
            let e = best.entry(id).or_insert(f64::NEG_INFINITY);
            if s > *e {
                *e = s;
            }
        }
        let mut entries: Vec<(String, f64)> = best.into_iter().collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        entries.truncate(MAX_CANDIDATES);
        Self { entries }
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(id, _)| id.as_str())
    }

    pub fn top(&self) -> Option<&str> {
        self.entries.first().map(|(id, _)| id.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Softmax mass of the rank-1 entry; 0 for an empty list.
    pub fn top1_probability(&self) -> f64 {
        let Some((_, top)) = self.entries.first() else {
            return 0.0;
        };
        let z: f64 = self.entries.iter().map(|(_, s)| (s - top).exp()).sum();
        1.0 / z
    }
}

/// The ConvQA contract used for rewards, augmentation, and evaluation.
pub trait ConvQa {
    fn answer(&self, history: &[Exchange], question: &[String]) -> Result<RankedAnswerList>;

    fn train(&mut self, pairs: &[QaPair]) -> Result<()>;

    /// Probability the model assigns to its own top answer.
    fn top1_probability(&self, history: &[Exchange], question: &[String]) -> Result<f64> {
        Ok(self.answer(history, question)?.top1_probability())
    }
}

fn content_tokens<S: AsRef<str>>(tokens: &[S]) -> BTreeSet<String> {
    tokens
        .iter()
        .map(|t| t.as_ref().to_lowercase())
        .filter(|t| !text::is_terminal_punct(t) && !STOPWORDS.contains(&t.as_str()))
        .collect()
}

fn surface_tokens(kg: &KnowledgeGraph, id: &str) -> HashSet<String> {
    kg.get(id)
        .map(|item| {
            item.surfaces()
                .flat_map(|s| s.split_whitespace())
                .map(str::to_lowercase)
                .filter(|t| !STOPWORDS.contains(&t.as_str()))
                .collect()
        })
        .unwrap_or_default()
}

/// A fact seen from one of its answerable slots.
#[derive(Debug, Clone)]
struct Slot {
    candidate: String,
    /// Predicate credited when this slot is the answer.
    predicate: String,
    context: HashSet<String>,
}

/// Lexical-overlap retrieval over KG facts with learned token→predicate
/// weights.
///
/// A fact is a candidate source when any of its surface tokens occurs in
/// the question or history. Each answerable slot of the fact (subject,
/// object, qualifier objects) not itself mentioned in the question or the
/// history is scored as
///
/// ```text
/// Σ_{t ∈ question} (1[t ∈ context] + ŵ(t, p)) + ½ · Σ_{t ∈ history} (1[t ∈ context] + ŵ(t, p))
/// ```
///
/// where `context` is the token set of the fact's other slots, `p` the
/// slot's predicate, and `ŵ(t, p) = w(t, p) / (smoothing + Σ_p' w(t, p'))`
/// the normalized training count. A candidate keeps its best slot score.
#[derive(Debug, Clone)]
pub struct OverlapQaModel {
    kg: Arc<KnowledgeGraph>,
    smoothing: f64,
    weights: BTreeMap<(String, String), f64>,
    token_totals: HashMap<String, f64>,
    slots: Vec<Slot>,
    token_index: HashMap<String, Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    smoothing: f64,
    weights: Vec<(String, String, f64)>,
}

impl OverlapQaModel {
    pub fn new(kg: Arc<KnowledgeGraph>) -> Self {
        Self::with_smoothing(kg, 1.0)
    }

    pub fn with_smoothing(kg: Arc<KnowledgeGraph>, smoothing: f64) -> Self {
        assert!(smoothing > 0.0, "smoothing must be positive");
        let mut slots = Vec::new();
        let mut token_index: HashMap<String, Vec<usize>> = HashMap::new();
        for f in kg.facts() {
            let mut parts: Vec<(&str, HashSet<String>)> = vec![
                (&f.subject, surface_tokens(&kg, &f.subject)),
                (&f.predicate, surface_tokens(&kg, &f.predicate)),
                (&f.object, surface_tokens(&kg, &f.object)),
            ];
            for (qp, qo) in &f.qualifiers {
                parts.push((qp, surface_tokens(&kg, qp)));
                parts.push((qo, surface_tokens(&kg, qo)));
            }
            let context_without = |skip: usize| -> HashSet<String> {
                parts
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .flat_map(|(_, (_, toks))| toks.iter().cloned())
                    .collect()
            };
            let mut answerable = vec![(0, f.predicate.clone()), (2, f.predicate.clone())];
            for (qi, (qp, _)) in f.qualifiers.iter().enumerate() {
                answerable.push((4 + 2 * qi, qp.clone()));
            }
            let first_slot = slots.len();
            for (pos, predicate) in answerable {
                slots.push(Slot {
                    candidate: parts[pos].0.to_owned(),
                    predicate,
                    context: context_without(pos),
                });
            }
            let all: HashSet<&String> = parts.iter().flat_map(|(_, t)| t.iter()).collect();
            for tok in all {
                token_index
                    .entry(tok.clone())
                    .or_default()
                    .extend(first_slot..slots.len());
            }
        }
        Self {
            kg,
            smoothing,
            weights: BTreeMap::new(),
            token_totals: HashMap::new(),
            slots,
            token_index,
        }
    }

    pub fn kg(&self) -> &Arc<KnowledgeGraph> {
        &self.kg
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn weight(&self, token: &str, predicate: &str) -> f64 {
        self.weights
            .get(&(token.to_owned(), predicate.to_owned()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn weights(&self) -> &BTreeMap<(String, String), f64> {
        &self.weights
    }

    fn normalized_weight(&self, token: &str, predicate: &str) -> f64 {
        match self.token_totals.get(token) {
            Some(total) => self.weight(token, predicate) / (self.smoothing + total),
            None => 0.0,
        }
    }

    fn rebuild_totals(&mut self) {
        self.token_totals.clear();
        for ((tok, _), w) in &self.weights {
            *self.token_totals.entry(tok.clone()).or_default() += w;
        }
    }

    fn history_tokens(history: &[Exchange]) -> Vec<String> {
        history
            .iter()
            .flat_map(|h| {
                h.question
                    .iter()
                    .cloned()
                    .chain(h.answer.split_whitespace().map(str::to_owned))
            })
            .collect()
    }

    fn linked_items(&self, tokens: &[String]) -> Vec<String> {
        corpus::link_spans(&self.kg, tokens)
            .into_iter()
            .map(|(_, _, id)| id)
            .collect()
    }

    /// Predicates of facts tying a mentioned item to a gold answer, each
    /// credited once.
    fn gold_predicates(&self, mentioned: &HashSet<String>, gold: &[String]) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for f in self.kg.facts() {
            if f.predicate == self.kg.type_predicate() {
                continue;
            }
            if mentioned.contains(&f.subject) {
                if gold.contains(&f.object) {
                    out.insert(f.predicate.clone());
                }
                for (qp, qo) in &f.qualifiers {
                    if gold.contains(qo) {
                        out.insert(qp.clone());
                    }
                }
            }
            if mentioned.contains(&f.object) && gold.contains(&f.subject) {
                out.insert(f.predicate.clone());
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            smoothing: self.smoothing,
            weights: self
                .weights
                .iter()
                .map(|((t, p), w)| (t.clone(), p.clone(), *w))
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes") + "\n"
    }

    pub fn load(kg: Arc<KnowledgeGraph>, path: &Path) -> Result<Self> {
        let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&body).map_err(|e| Error::Load {
            path: path.to_owned(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if file.smoothing.is_nan() || file.smoothing <= 0.0 {
            return Err(Error::Validation(format!(
                "{}: smoothing must be positive",
                path.display()
            )));
        }
        let mut model = Self::with_smoothing(kg, file.smoothing);
        for (t, p, w) in file.weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Validation(format!(
                    "{}: bad weight for ({t}, {p})",
                    path.display()
                )));
            }
            model.weights.insert((t, p), w);
        }
        model.rebuild_totals();
        Ok(model)
    }
}

impl ConvQa for OverlapQaModel {
    fn answer(&self, history: &[Exchange], question: &[String]) -> Result<RankedAnswerList> {
        let q = content_tokens(question);
        let h: BTreeSet<String> = content_tokens(&Self::history_tokens(history))
            .difference(&q)
            .cloned()
            .collect();
        let mut excluded: HashSet<String> = self.linked_items(question).into_iter().collect();
        for ex in history {
            excluded.extend(self.linked_items(&ex.question));
            excluded.extend(self.kg.lookup_surface(&ex.answer).iter().cloned());
        }

        let mut touched: BTreeSet<usize> = BTreeSet::new();
        for tok in q.iter().chain(h.iter()) {
            if let Some(slots) = self.token_index.get(tok) {
                touched.extend(slots.iter().copied());
            }
        }

        let mut scores = Vec::new();
        for si in touched {
            let slot = &self.slots[si];
            if excluded.contains(&slot.candidate) {
                continue;
            }
            let term =
                |t: &String| f64::from(u8::from(slot.context.contains(t))) + self.normalized_weight(t, &slot.predicate);
            let score: f64 = q.iter().map(term).sum::<f64>() + HISTORY_WEIGHT * h.iter().map(term).sum::<f64>();
            if score > 0.0 {
                scores.push((slot.candidate.clone(), score));
            }
        }
        Ok(RankedAnswerList::from_scores(scores))
    }

    /// Resets the weights, then for every pair credits each predicate
    /// linking a mentioned item to a gold answer with +1 per question token.
    fn train(&mut self, pairs: &[QaPair]) -> Result<()> {
        self.weights.clear();
        for pair in pairs {
            for g in &pair.gold {
                if !self.kg.contains(g) {
                    return Err(Error::Validation(format!(
                        "gold answer `{g}` of {}#{} is not in the KG",
                        pair.conversation_id, pair.turn_index
                    )));
                }
            }
            let mut mentioned: HashSet<String> = self.linked_items(&pair.question).into_iter().collect();
            for ex in &pair.history {
                mentioned.extend(self.linked_items(&ex.question));
                mentioned.extend(
                    self.kg
                        .lookup_surface(&ex.answer)
                        .iter()
                        .filter(|id| self.kg.get(id).is_some_and(|i| i.kind != ItemKind::Predicate))
                        .cloned(),
                );
            }
            let predicates = self.gold_predicates(&mentioned, &pair.gold);
            let tokens = content_tokens(&pair.question);
            for p in &predicates {
                for t in &tokens {
                    *self.weights.entry((t.clone(), p.clone())).or_default() += 1.0;
                }
            }
        }
        self.rebuild_totals();
        Ok(())
    }
}

/// Adds each reformulation as a new pair with its source's history and gold
/// answers. Originals are always kept; a reformulation identical to a
/// question already present for its turn is skipped.
pub fn augment_training_set(train_pairs: &[QaPair], reformulations: &[Reformulation]) -> Result<Vec<QaPair>> {
    let mut by_source: HashMap<(&str, usize), usize> = HashMap::new();
    let mut seen: HashSet<(&str, usize, &[String])> = HashSet::new();
    for (i, p) in train_pairs.iter().enumerate() {
        by_source.entry((&p.conversation_id, p.turn_index)).or_insert(i);
        seen.insert((&p.conversation_id, p.turn_index, &p.question));
    }
    let mut out = train_pairs.to_vec();
    for r in reformulations {
        let key = (r.conversation_id.as_str(), r.turn_index);
        let &src = by_source.get(&key).ok_or_else(|| {
            Error::Validation(format!(
                "reformulation source {}#{} is not a training question",
                r.conversation_id, r.turn_index
            ))
        })?;
        if !seen.insert((&r.conversation_id, r.turn_index, &r.tokens)) {
            continue;
        }
        let base = &train_pairs[src];
        out.push(QaPair {
            question: r.tokens.clone(),
            ..base.clone()
        });
    }
    Ok(out)
}

#[derive(Serialize)]
struct ExternalRequest<'a> {
    history: Vec<String>,
    question: &'a str,
}

#[derive(Deserialize)]
struct ExternalResponse {
    ranked: Vec<(String, f64)>,
}

/// Talks to an external QA process over stdin/stdout, one JSON object per
/// line: `{"history": [...], "question": str}` in, `{"ranked": [[id, score], ...]}` out.
/// Training happens outside this process.
pub struct ExternalQa {
    child: Child,
    io: Mutex<(ChildStdin, BufReader<ChildStdout>)>,
}

impl ExternalQa {
    pub fn spawn(program: &str, args: &[&str]) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::External(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            child,
            io: Mutex::new((stdin, stdout)),
        })
    }
}

impl Drop for ExternalQa {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl ConvQa for ExternalQa {
    fn answer(&self, history: &[Exchange], question: &[String]) -> Result<RankedAnswerList> {
        let q = text::detokenize(question);
        let request = ExternalRequest {
            history: history.iter().map(Exchange::text).collect(),
            question: &q,
        };
        let mut guard = self
            .io
            .lock()
            .map_err(|_| Error::External("adapter lock poisoned".into()))?;
        let (stdin, stdout) = &mut *guard;
        let line = serde_json::to_string(&request).expect("request serializes");
        writeln!(stdin, "{line}")
            .and_then(|_| stdin.flush())
            .map_err(|e| Error::External(format!("write failed: {e}")))?;
        let mut reply = String::new();
        let n = stdout
            .read_line(&mut reply)
            .map_err(|e| Error::External(format!("read failed: {e}")))?;
        if n == 0 {
            return Err(Error::External("model process closed its output".into()));
        }
        let resp: ExternalResponse = serde_json::from_str(&reply)
            .map_err(|e| Error::External(format!("bad response `{}`: {e}", reply.trim())))?;
        Ok(RankedAnswerList::from_scores(resp.ranked))
    }

    fn train(&mut self, _pairs: &[QaPair]) -> Result<()> {
        Err(Error::External("external models are trained out of band".into()))
    }
}
