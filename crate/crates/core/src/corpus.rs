//! Benchmark ingestion and question annotation.
//!
//! Mentions are found by greedy longest match of question n-grams against
//! the KG alias index. Candidate spans are ranked by length (longer first),
//! then start position, then item id, and accepted while they do not
//! overlap an already accepted span. The outcome does not depend on the
//! order in which candidates were enumerated.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{ItemKind, KnowledgeGraph};
use crate::text;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Turn {
    /// 1-based.
    pub index: usize,
    pub question: Vec<String>,
    pub gold_answers: Vec<String>,
    pub paraphrases: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conversation {
    pub id: String,
    pub domain: String,
    pub turns: Vec<Turn>,
}

impl Conversation {
    pub fn turn(&self, index: usize) -> Option<&Turn> {
        index.checked_sub(1).and_then(|i| self.turns.get(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MentionRole {
    Entity,
    Relation,
    EntityType,
    AnswerType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub start: usize,
    pub end: usize,
    pub surface: Vec<String>,
    pub item: String,
    pub role: MentionRole,
}

impl Mention {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn overlaps(&self, other: &Mention) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// A preceding turn as seen by the current one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryTurn {
    pub question: Vec<String>,
    pub answer_ids: Vec<String>,
    /// Label of the first gold answer.
    pub answer_label: String,
    pub mentions: Vec<Mention>,
}

impl HistoryTurn {
    /// Question tokens followed by the answer label tokens.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.question
            .iter()
            .map(String::as_str)
            .chain(self.answer_label.split_whitespace())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedQuestion {
    pub conversation_id: String,
    pub turn_index: usize,
    pub question: Vec<String>,
    pub mentions: Vec<Mention>,
    pub history: Vec<HistoryTurn>,
    pub gold_answers: Vec<String>,
}

impl AnnotatedQuestion {
    pub fn mentions_with(&self, role: MentionRole) -> impl Iterator<Item = &Mention> {
        self.mentions.iter().filter(move |m| m.role == role)
    }

    pub fn has_role(&self, role: MentionRole) -> bool {
        self.mentions_with(role).next().is_some()
    }

    pub fn mentions_item(&self, id: &str) -> bool {
        self.mentions.iter().any(|m| m.item == id)
    }

    pub fn text(&self) -> String {
        text::detokenize(&self.question)
    }

    /// First turn plus the immediately preceding one (deduplicated), the
    /// context slice handed to generators and encoders.
    pub fn short_history(&self) -> Vec<&HistoryTurn> {
        match self.history.len() {
            0 => vec![],
            1 => vec![&self.history[0]],
            n => vec![&self.history[0], &self.history[n - 1]],
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TurnRecord {
    question: String,
    answers: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    paraphrases: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ConversationRecord {
    id: String,
    domain: String,
    turns: Vec<TurnRecord>,
}

/// Reads `benchmark.jsonl`, one conversation per line.
pub fn load_benchmark(path: &Path) -> Result<Vec<Conversation>> {
    let records: Vec<ConversationRecord> = crate::kg::read_jsonl(path)?;
    records.into_iter().map(conversation_from_record).collect()
}

fn conversation_from_record(rec: ConversationRecord) -> Result<Conversation> {
    let mut turns = Vec::with_capacity(rec.turns.len());
    for (i, t) in rec.turns.into_iter().enumerate() {
        if t.answers.is_empty() {
            return Err(Error::Validation(format!(
                "conversation `{}` turn {} has no gold answers",
                rec.id,
                i + 1
            )));
        }
        let mut seen = HashSet::new();
        for p in &t.paraphrases {
            if !seen.insert(p.as_str()) {
                return Err(Error::Validation(format!(
                    "conversation `{}` turn {}: duplicate paraphrase `{p}`",
                    rec.id,
                    i + 1
                )));
            }
        }
        turns.push(Turn {
            index: i + 1,
            question: text::tokenize(&t.question),
            gold_answers: t.answers,
            paraphrases: t.paraphrases.iter().map(|p| text::tokenize(p)).collect(),
        });
    }
    Ok(Conversation {
        id: rec.id,
        domain: rec.domain,
        turns,
    })
}

pub fn benchmark_to_jsonl(conversations: &[Conversation]) -> String {
    let mut out = String::new();
    for c in conversations {
        let rec = ConversationRecord {
            id: c.id.clone(),
            domain: c.domain.clone(),
            turns: c
                .turns
                .iter()
                .map(|t| TurnRecord {
                    question: text::detokenize(&t.question),
                    answers: t.gold_answers.clone(),
                    paraphrases: t.paraphrases.iter().map(|p| text::detokenize(p)).collect(),
                })
                .collect(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("benchmark serializes"));
        out.push('\n');
    }
    out
}

pub fn write_benchmark(path: &Path, conversations: &[Conversation]) -> Result<()> {
    fs::write(path, benchmark_to_jsonl(conversations)).map_err(|e| Error::io(path, e))
}

/// Raw alias matches `(start, end, item)` selected by greedy longest match.
pub fn link_spans(kg: &KnowledgeGraph, tokens: &[String]) -> Vec<(usize, usize, String)> {
    let max_len = kg.max_surface_len() + 1; // leading article absorbed into the key
    let mut candidates = Vec::new();
    for start in 0..tokens.len() {
        for end in start + 1..=tokens.len().min(start + max_len) {
            if text::is_terminal_punct(&tokens[end - 1]) {
                break;
            }
            let ids = kg.lookup_key(&text::surface_key(&tokens[start..end]));
            if let Some(first) = ids.first() {
                candidates.push((start, end, first.clone()));
            }
        }
    }
    candidates.sort_by(|a, b| {
        (b.1 - b.0)
            .cmp(&(a.1 - a.0))
            .then(a.0.cmp(&b.0))
            .then_with(|| a.2.cmp(&b.2))
    });
    let mut taken = vec![false; tokens.len()];
    let mut chosen = Vec::new();
    for (start, end, id) in candidates {
        if taken[start..end].iter().any(|&t| t) {
            continue;
        }
        taken[start..end].iter_mut().for_each(|t| *t = true);
        chosen.push((start, end, id));
    }
    chosen.sort_by_key(|c| c.0);
    chosen
}

/// Decides whether a type mention names the expected answer type or a type
/// of a question entity. A type that matches both counts as answer type.
pub fn classify_type_mention(
    kg: &KnowledgeGraph,
    type_id: &str,
    _annotated_entities: &[&str],
    gold_answers: &[String],
) -> Result<MentionRole> {
    let item = kg.item(type_id)?;
    if item.kind != ItemKind::Type && !kg.is_type(type_id)? {
        return Err(Error::Contract(format!("`{type_id}` is not a KG type")));
    }
    for gold in gold_answers {
        if kg.get(gold).is_some() && kg.types_of(gold)?.contains(&type_id) {
            return Ok(MentionRole::AnswerType);
        }
    }
    Ok(MentionRole::EntityType)
}

/// Links and role-labels mentions in a token sequence.
pub fn find_mentions(kg: &KnowledgeGraph, tokens: &[String], gold_answers: &[String]) -> Vec<Mention> {
    let spans = link_spans(kg, tokens);
    let entities: Vec<&str> = spans
        .iter()
        .filter(|(_, _, id)| {
            kg.get(id)
                .is_some_and(|i| !matches!(i.kind, ItemKind::Predicate | ItemKind::Type))
        })
        .map(|(_, _, id)| id.as_str())
        .collect();
    spans
        .iter()
        .map(|(start, end, id)| {
            let kind = kg.get(id).map(|i| i.kind).unwrap_or(ItemKind::Entity);
            let role = match kind {
                ItemKind::Predicate => MentionRole::Relation,
                ItemKind::Type => {
                    classify_type_mention(kg, id, &entities, gold_answers).unwrap_or(MentionRole::EntityType)
                }
                ItemKind::Entity | ItemKind::Literal => MentionRole::Entity,
            };
            Mention {
                start: *start,
                end: *end,
                surface: tokens[*start..*end].to_vec(),
                item: id.clone(),
                role,
            }
        })
        .collect()
}

fn history_of(kg: &KnowledgeGraph, conversation: &Conversation, turn_index: usize) -> Vec<HistoryTurn> {
    conversation
        .turns
        .iter()
        .take(turn_index.saturating_sub(1))
        .map(|t| HistoryTurn {
            question: t.question.clone(),
            answer_ids: t.gold_answers.clone(),
            answer_label: t
                .gold_answers
                .first()
                .and_then(|id| kg.get(id))
                .map(|i| i.label.clone())
                .unwrap_or_default(),
            mentions: find_mentions(kg, &t.question, &t.gold_answers),
        })
        .collect()
}

/// Annotates turn `turn_index` (1-based) of a conversation.
pub fn annotate(kg: &KnowledgeGraph, conversation: &Conversation, turn_index: usize) -> Result<AnnotatedQuestion> {
    let turn = conversation
        .turn(turn_index)
        .ok_or_else(|| Error::Contract(format!("conversation `{}` has no turn {turn_index}", conversation.id)))?;
    Ok(AnnotatedQuestion {
        conversation_id: conversation.id.clone(),
        turn_index,
        question: turn.question.clone(),
        mentions: find_mentions(kg, &turn.question, &turn.gold_answers),
        history: history_of(kg, conversation, turn_index),
        gold_answers: turn.gold_answers.clone(),
    })
}

/// Annotates every turn of every conversation, in order.
pub fn annotate_all(kg: &KnowledgeGraph, conversations: &[Conversation]) -> Result<Vec<AnnotatedQuestion>> {
    let mut out = Vec::new();
    for c in conversations {
        for t in &c.turns {
            out.push(annotate(kg, c, t.index)?);
        }
    }
    Ok(out)
}

/// Re-annotates a different surface form of an already annotated question,
/// keeping its history and gold answers.
pub fn reannotate(kg: &KnowledgeGraph, base: &AnnotatedQuestion, tokens: Vec<String>) -> AnnotatedQuestion {
    AnnotatedQuestion {
        conversation_id: base.conversation_id.clone(),
        turn_index: base.turn_index,
        mentions: find_mentions(kg, &tokens, &base.gold_answers),
        question: tokens,
        history: base.history.clone(),
        gold_answers: base.gold_answers.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{Fact, KgItem};

    fn item(id: &str, label: &str, aliases: &[&str], kind: ItemKind) -> KgItem {
        KgItem {
            id: id.into(),
            label: label.into(),
            aliases: aliases.iter().map(|s| s.to_string()).collect(),
            kind,
            gender: None,
        }
    }

    fn fact(s: &str, p: &str, o: &str) -> Fact {
        Fact {
            subject: s.into(),
            predicate: p.into(),
            object: o.into(),
            qualifiers: vec![],
        }
    }

    fn toy() -> KnowledgeGraph {
        use ItemKind::*;
        let items = vec![
            item("instance_of", "instance of", &[], Predicate),
            item("broadcaster", "original broadcaster", &["airing on"], Predicate),
            item("cast", "cast member", &["starring"], Predicate),
            item("trop", "The Rings of Power", &["Rings of Power", "TROP"], Entity),
            item("apv", "Amazon Prime Video", &["Prime Video"], Entity),
            item("baldry", "Maxim Baldry", &[], Entity),
            item("power_mag", "Power", &[], Entity),
            item("streaming", "video streaming service", &["network"], Type),
            item("tv_series", "TV series", &["series"], Type),
            item("human", "human", &["person"], Type),
        ];
        let facts = vec![
            fact("trop", "instance_of", "tv_series"),
            fact("apv", "instance_of", "streaming"),
            fact("baldry", "instance_of", "human"),
            fact("trop", "broadcaster", "apv"),
            fact("trop", "cast", "baldry"),
        ];
        KnowledgeGraph::new(items, facts, "instance_of").unwrap()
    }

    fn tokens(s: &str) -> Vec<String> {
        text::tokenize(s)
    }

    fn summary(ms: &[Mention]) -> Vec<(String, &str, MentionRole)> {
        ms.iter()
            .map(|m| (m.surface.join(" "), m.item.as_str(), m.role))
            .collect()
    }

    #[test]
    fn annotates_network_trop_airing_on() {
        let kg = toy();
        let ms = find_mentions(&kg, &tokens("Network TROP airing on?"), &["apv".into()]);
        assert_eq!(
            summary(&ms),
            vec![
                ("Network".into(), "streaming", MentionRole::AnswerType),
                ("TROP".into(), "trop", MentionRole::Entity),
                ("airing on".into(), "broadcaster", MentionRole::Relation),
            ]
        );
    }

    #[test]
    fn no_surface_forms_means_no_mentions() {
        let kg = toy();
        assert!(find_mentions(&kg, &tokens("And who?"), &["apv".into()]).is_empty());
    }

    #[test]
    fn longest_match_beats_nested_alias() {
        let kg = toy();
        let q = tokens("cast of Rings of Power?");
        // brute-force enumeration of every alias-matching span
        let mut all = vec![];
        for s in 0..q.len() {
            for e in s + 1..=q.len() {
                if !kg.lookup_key(&text::surface_key(&q[s..e])).is_empty() {
                    all.push((s, e));
                }
            }
        }
        assert!(all.contains(&(2, 5)) && all.contains(&(4, 5)), "{all:?}");
        let ms = find_mentions(&kg, &q, &["baldry".into()]);
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].surface, ["Rings", "of", "Power"]);
        assert_eq!(ms[0].item, "trop");
    }

    #[test]
    fn leading_article_is_absorbed() {
        let kg = toy();
        let ms = find_mentions(&kg, &tokens("cast of the series TROP?"), &["baldry".into()]);
        assert_eq!(ms[0].surface, ["the", "series"]);
        assert_eq!(ms[0].role, MentionRole::EntityType);
    }

    #[test]
    fn type_roles() {
        let kg = toy();
        assert_eq!(
            classify_type_mention(&kg, "streaming", &[], &["apv".into()]).unwrap(),
            MentionRole::AnswerType
        );
        // question entity TROP is a TV series, the answer is a person
        assert_eq!(
            classify_type_mention(&kg, "tv_series", &["trop"], &["baldry".into()]).unwrap(),
            MentionRole::EntityType
        );
        // a type both of a question entity and of the answer resolves to answer type
        assert_eq!(
            classify_type_mention(&kg, "human", &["baldry"], &["baldry".into()]).unwrap(),
            MentionRole::AnswerType
        );
        assert!(matches!(
            classify_type_mention(&kg, "trop", &[], &[]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn benchmark_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.jsonl");
        fs::write(
            &path,
            r#"{"id":"c1","domain":"tv","turns":[{"question":"Who?","answers":[]}]}"#,
        )
        .unwrap();
        assert!(matches!(load_benchmark(&path), Err(Error::Validation(_))));

        fs::write(
            &path,
            r#"{"id":"c1","domain":"tv","turns":[{"question":"TROP airing on?","answers":["apv"],"paraphrases":["a?","a?"]}]}"#,
        )
        .unwrap();
        assert!(matches!(load_benchmark(&path), Err(Error::Validation(_))));

        fs::write(
            &path,
            r#"{"id":"c1","domain":"tv","turns":[{"question":"TROP airing on?","answers":["apv"]}]}"#,
        )
        .unwrap();
        let convs = load_benchmark(&path).unwrap();
        assert_eq!(convs.len(), 1);
        assert_eq!(convs[0].turns[0].index, 1);
        assert_eq!(convs[0].turns[0].question, ["TROP", "airing", "on", "?"]);
    }

    #[test]
    fn history_holds_previous_turns() {
        let kg = toy();
        let conv = Conversation {
            id: "c".into(),
            domain: "tv".into(),
            turns: vec![
                Turn {
                    index: 1,
                    question: tokens("TROP airing on?"),
                    gold_answers: vec!["apv".into()],
                    paraphrases: vec![],
                },
                Turn {
                    index: 2,
                    question: tokens("starring?"),
                    gold_answers: vec!["baldry".into()],
                    paraphrases: vec![],
                },
            ],
        };
        let aq = annotate(&kg, &conv, 2).unwrap();
        assert_eq!(aq.history.len(), 1);
        assert_eq!(aq.history[0].answer_label, "Amazon Prime Video");
        assert!(aq.history[0].mentions.iter().any(|m| m.item == "trop"));
        assert!(annotate(&kg, &conv, 3).is_err());
        assert!(annotate(&kg, &conv, 0).is_err());
    }
}
