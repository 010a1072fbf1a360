//! Rule-based reformulation generation.
//!
//! Edits operate on token spans of annotated mentions:
//!
//! * delete removes the span;
//! * substitute replaces it in place (aliases are sampled uniformly from
//!   the item's aliases other than the one used);
//! * insert places answer types and relations right after the wh-word
//!   (position 0 without one), entity types right before their entity,
//!   and entities at the end before the terminal punctuation;
//! * retain copies the question.
//!
//! When several mentions qualify for an operand the one with the smallest
//! start wins.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, AnnotatedQuestion, Mention, MentionRole};
use crate::error::{Error, Result};
use crate::kg::{Gender, ItemKind, KnowledgeGraph};
use crate::taxonomy::{self, valid_actions, Category};
use crate::text;
use crate::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Rule,
    RuleNoisy,
    /// Supplied from an external completion file.
    Completion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reformulation {
    pub conversation_id: String,
    pub turn_index: usize,
    pub category: Category,
    pub tokens: Vec<String>,
    pub provenance: Provenance,
}

impl Reformulation {
    pub fn text(&self) -> String {
        text::detokenize(&self.tokens)
    }
}

/// Anything that turns a question plus a category into a reformulation.
/// Returns `None` exactly when the category does not apply.
pub trait Generator {
    fn generate(&self, aq: &AnnotatedQuestion, category: Category, rng: &mut SeededRng) -> Option<Reformulation>;
}

/// The deterministic-given-rng rule generator.
#[derive(Debug, Clone, Copy)]
pub struct RuleGenerator<'k> {
    kg: &'k KnowledgeGraph,
}

impl<'k> RuleGenerator<'k> {
    pub fn new(kg: &'k KnowledgeGraph) -> Self {
        Self { kg }
    }
}

impl Generator for RuleGenerator<'_> {
    fn generate(&self, aq: &AnnotatedQuestion, category: Category, rng: &mut SeededRng) -> Option<Reformulation> {
        apply_category(self.kg, aq, category, rng)
    }
}

fn wh_insert_position(tokens: &[String]) -> usize {
    tokens.iter().position(|t| text::is_wh_word(t)).map_or(0, |i| i + 1)
}

fn end_insert_position(tokens: &[String]) -> usize {
    match tokens.last() {
        Some(last) if text::is_terminal_punct(last) => tokens.len() - 1,
        _ => tokens.len(),
    }
}

fn words(surface: &str) -> Vec<String> {
    surface.split_whitespace().map(str::to_owned).collect()
}

fn splice(tokens: &[String], start: usize, end: usize, with: Vec<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len() + with.len());
    out.extend_from_slice(&tokens[..start]);
    out.extend(with);
    out.extend_from_slice(&tokens[end..]);
    out
}

fn first_type<'k>(kg: &'k KnowledgeGraph, id: &str) -> Option<&'k str> {
    kg.types_of(id).ok().and_then(|t| t.first().copied())
}

fn pronoun(kg: &KnowledgeGraph, mention: &Mention) -> &'static str {
    if kg.lookup_key(&text::surface_key(&mention.surface)).len() > 1 {
        return "they";
    }
    match kg.gender_of(&mention.item) {
        Ok(Some(Gender::Male)) => "he",
        Ok(Some(Gender::Female)) => "she",
        _ => "it",
    }
}

/// Entities from earlier turns that the question does not mention, oldest
/// turn first; within a turn, question mentions precede gold answers.
pub fn history_entities<'a>(kg: &KnowledgeGraph, aq: &'a AnnotatedQuestion) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for h in &aq.history {
        let mentioned = h
            .mentions
            .iter()
            .filter(|m| m.role == MentionRole::Entity)
            .map(|m| m.item.as_str());
        for id in mentioned.chain(h.answer_ids.iter().map(String::as_str)) {
            let is_entity = kg.get(id).is_some_and(|i| i.kind == ItemKind::Entity);
            if is_entity && !aq.mentions_item(id) && !out.contains(&id) {
                out.push(id);
            }
        }
    }
    out
}

/// Predicates that could be missing from the question: those of facts
/// tying a question entity to a gold answer, then relations mentioned in
/// earlier turns.
pub fn recoverable_relations<'a>(kg: &'a KnowledgeGraph, aq: &'a AnnotatedQuestion) -> Vec<&'a str> {
    let entities: Vec<&str> = aq.mentions_with(MentionRole::Entity).map(|m| m.item.as_str()).collect();
    let gold = &aq.gold_answers;
    let mut out: Vec<&str> = Vec::new();
    for f in kg.facts() {
        if f.predicate == kg.type_predicate() {
            continue;
        }
        let forward = entities.contains(&f.subject.as_str())
            && (gold.contains(&f.object) || f.qualifiers.iter().any(|(_, o)| gold.contains(o)));
        let backward = entities.contains(&f.object.as_str()) && gold.contains(&f.subject);
        if (forward || backward) && !out.contains(&f.predicate.as_str()) {
            out.push(&f.predicate);
        }
    }
    for h in &aq.history {
        for m in h.mentions.iter().filter(|m| m.role == MentionRole::Relation) {
            if !out.contains(&m.item.as_str()) {
                out.push(&m.item);
            }
        }
    }
    out
}

/// Applies one category to an annotated question.
pub fn apply_category(
    kg: &KnowledgeGraph,
    aq: &AnnotatedQuestion,
    category: Category,
    rng: &mut SeededRng,
) -> Option<Reformulation> {
    use Category::*;
    let q = &aq.question;
    let role_of = |c: Category| c.operand().role();

    let tokens = match category {
        Retain => q.clone(),

        DelEntity | DelRelation | DelEntityType | DelAnswerType => {
            let role = role_of(category)?;
            let content = taxonomy::content_len(q);
            let m = aq.mentions_with(role).find(|m| content > m.len())?;
            splice(q, m.start, m.end, vec![])
        }

        SubsRelation | SubsEntityType | SubsAnswerType | SubsEntityWithAlias => {
            let role = role_of(category)?;
            let (m, choices) = aq
                .mentions_with(role)
                .map(|m| (m, taxonomy::unused_aliases(kg, m)))
                .find(|(_, c)| !c.is_empty())?;
            let alias = choices.choose(rng)?;
            splice(q, m.start, m.end, words(alias))
        }

        SubsEntityWithPronoun => {
            let m = aq.mentions_with(MentionRole::Entity).next()?;
            splice(q, m.start, m.end, vec![pronoun(kg, m).to_owned()])
        }

        SubsEntityWithType => {
            let (m, ty) = aq
                .mentions_with(MentionRole::Entity)
                .find_map(|m| first_type(kg, &m.item).map(|t| (m, t)))?;
            let mut with = vec!["the".to_owned()];
            with.extend(words(kg.label(ty).ok()?));
            splice(q, m.start, m.end, with)
        }

        InsEntity => {
            if aq.has_role(MentionRole::Entity) {
                return None;
            }
            let id = *history_entities(kg, aq).first()?;
            let at = end_insert_position(q);
            splice(q, at, at, words(kg.label(id).ok()?))
        }

        InsRelation => {
            if aq.has_role(MentionRole::Relation) {
                return None;
            }
            let id = *recoverable_relations(kg, aq).first()?;
            let at = wh_insert_position(q);
            splice(q, at, at, words(kg.label(id).ok()?))
        }

        InsEntityType => {
            if aq.has_role(MentionRole::EntityType) {
                return None;
            }
            let (m, ty) = aq
                .mentions_with(MentionRole::Entity)
                .find_map(|m| first_type(kg, &m.item).map(|t| (m, t)))?;
            splice(q, m.start, m.start, words(kg.label(ty).ok()?))
        }

        InsAnswerType => {
            if aq.has_role(MentionRole::AnswerType) {
                return None;
            }
            let ty = aq.gold_answers.iter().find_map(|g| first_type(kg, g))?;
            let at = wh_insert_position(q);
            splice(q, at, at, words(kg.label(ty).ok()?))
        }
    };

    Some(Reformulation {
        conversation_id: aq.conversation_id.clone(),
        turn_index: aq.turn_index,
        category,
        tokens,
        provenance: Provenance::Rule,
    })
}

/// Wraps a generator and perturbs its output to mimic an imperfect learned
/// generator. Each token outside a KG mention is dropped with probability
/// `noise_rate`; each mention is swapped for another surface form of its
/// item with the same probability.
#[derive(Debug, Clone)]
pub struct NoisyGenerator<'k, G> {
    inner: G,
    kg: &'k KnowledgeGraph,
    noise_rate: f64,
}

impl<'k, G: Generator> NoisyGenerator<'k, G> {
    pub fn new(inner: G, kg: &'k KnowledgeGraph, noise_rate: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&noise_rate) {
            return Err(Error::Validation(format!("noise rate {noise_rate} outside [0, 1]")));
        }
        Ok(Self { inner, kg, noise_rate })
    }
}

impl<G: Generator> Generator for NoisyGenerator<'_, G> {
    fn generate(&self, aq: &AnnotatedQuestion, category: Category, rng: &mut SeededRng) -> Option<Reformulation> {
        noisy_generate(&self.inner, self.kg, aq, category, rng, self.noise_rate)
    }
}

pub fn noisy_generate<G: Generator + ?Sized>(
    inner: &G,
    kg: &KnowledgeGraph,
    aq: &AnnotatedQuestion,
    category: Category,
    rng: &mut SeededRng,
    noise_rate: f64,
) -> Option<Reformulation> {
    let mut out = inner.generate(aq, category, rng)?;
    out.provenance = Provenance::RuleNoisy;
    if noise_rate <= 0.0 {
        return Some(out);
    }
    let spans = corpus::link_spans(kg, &out.tokens);
    let mut noisy = Vec::with_capacity(out.tokens.len());
    let mut first_dropped = None;
    let mut i = 0;
    while i < out.tokens.len() {
        if let Some((start, end, id)) = spans.iter().find(|s| s.0 == i) {
            let own = text::surface_key(&out.tokens[*start..*end]);
            let others: Vec<&str> = kg
                .get(id)
                .map(|item| item.surfaces().filter(|s| text::normalize(s) != own).collect())
                .unwrap_or_default();
            if !others.is_empty() && rng.gen_bool(noise_rate) {
                noisy.extend(words(others.choose(rng).expect("nonempty")));
            } else {
                noisy.extend_from_slice(&out.tokens[*start..*end]);
            }
            i = *end;
            continue;
        }
        let tok = &out.tokens[i];
        if !text::is_terminal_punct(tok) && rng.gen_bool(noise_rate) {
            first_dropped.get_or_insert((noisy.len(), tok.clone()));
        } else {
            noisy.push(tok.clone());
        }
        i += 1;
    }
    if taxonomy::content_len(&noisy) == 0 {
        if let Some((at, tok)) = first_dropped {
            noisy.insert(at, tok);
        }
    }
    out.tokens = noisy;
    Some(out)
}

/// One supervised example for training an external generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistantPair {
    pub history: String,
    pub question: String,
    pub category: Category,
    pub reformulation: String,
}

/// Flattens the first and previous turns into `question answer` segments
/// joined by ` | `.
pub fn history_text(aq: &AnnotatedQuestion) -> String {
    aq.short_history()
        .iter()
        .map(|h| {
            let q = text::detokenize(&h.question);
            if h.answer_label.is_empty() {
                q
            } else {
                format!("{q} {}", h.answer_label)
            }
        })
        .collect::<Vec<_>>()
        .join(" | ")
}

/// Builds one pair per (question, valid category), keeps at most
/// `per_category_cap` pairs per category (uniform sample), and shuffles.
pub fn generate_distant_pairs<G: Generator + ?Sized>(
    kg: &KnowledgeGraph,
    questions: &[AnnotatedQuestion],
    generator: &G,
    rng: &mut SeededRng,
    per_category_cap: usize,
) -> Result<Vec<DistantPair>> {
    let mut by_category: BTreeMap<Category, Vec<DistantPair>> = BTreeMap::new();
    for aq in questions {
        let mask = valid_actions(aq, kg);
        for category in mask.valid_categories() {
            let reform = generator.generate(aq, category, rng).ok_or_else(|| {
                Error::Contract(format!(
                    "generator produced nothing for valid {category} on {}#{}",
                    aq.conversation_id, aq.turn_index
                ))
            })?;
            by_category.entry(category).or_default().push(DistantPair {
                history: history_text(aq),
                question: aq.text(),
                category,
                reformulation: reform.text(),
            });
        }
    }
    let mut out = Vec::new();
    for (_, mut pairs) in by_category {
        if pairs.len() > per_category_cap {
            pairs.shuffle(rng);
            pairs.truncate(per_category_cap);
        }
        out.extend(pairs);
    }
    out.shuffle(rng);
    Ok(out)
}

pub fn write_distant_pairs(path: &Path, pairs: &[DistantPair]) -> Result<()> {
    let mut body = String::new();
    for p in pairs {
        body.push_str(&serde_json::to_string(p).expect("pair serializes"));
        body.push('\n');
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct ReformulationRecord {
    conv: String,
    turn: usize,
    category: Category,
    text: String,
    provenance: Provenance,
}

pub fn reformulations_to_jsonl(reformulations: &[Reformulation]) -> String {
    let mut body = String::new();
    for r in reformulations {
        let rec = ReformulationRecord {
            conv: r.conversation_id.clone(),
            turn: r.turn_index,
            category: r.category,
            text: r.text(),
            provenance: r.provenance,
        };
        body.push_str(&serde_json::to_string(&rec).expect("reformulation serializes"));
        body.push('\n');
    }
    body
}

pub fn write_reformulations(path: &Path, reformulations: &[Reformulation]) -> Result<()> {
    fs::write(path, reformulations_to_jsonl(reformulations)).map_err(|e| Error::io(path, e))
}

pub fn read_reformulations(path: &Path) -> Result<Vec<Reformulation>> {
    let records: Vec<ReformulationRecord> = crate::kg::read_jsonl(path)?;
    Ok(records
        .into_iter()
        .map(|r| Reformulation {
            conversation_id: r.conv,
            turn_index: r.turn,
            category: r.category,
            tokens: text::tokenize(&r.text),
            provenance: r.provenance,
        })
        .collect())
}
