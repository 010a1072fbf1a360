//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use reign::corpus::{find_mentions, AnnotatedQuestion, MentionRole};
use reign::kg::{ItemKind, KnowledgeGraph};
use reign::taxonomy::{Category, Operation, SubstituteMode};
use reign::text;

pub fn annotated(kg: &KnowledgeGraph, question: &str, gold: &[&str]) -> AnnotatedQuestion {
    let question = text::tokenize(question);
    let gold: Vec<String> = gold.iter().map(|s| s.to_string()).collect();
    AnnotatedQuestion {
        conversation_id: "probe".into(),
        turn_index: 1,
        mentions: find_mentions(kg, &question, &gold),
        question,
        history: vec![],
        gold_answers: gold,
    }
}

fn kind_matches(kg: &KnowledgeGraph, surface: &[String], role: MentionRole) -> bool {
    kg.lookup_surface(&text::detokenize(surface)).iter().any(|id| {
        let kind = kg.get(id).map(|i| i.kind);
        match role {
            MentionRole::Entity => kind == Some(ItemKind::Entity),
            MentionRole::Relation => kind == Some(ItemKind::Predicate),
            MentionRole::EntityType | MentionRole::AnswerType => kind == Some(ItemKind::Type),
        }
    })
}

fn wh_position(q: &[String]) -> usize {
    q.iter().position(|t| text::is_wh_word(t)).map_or(0, |i| i + 1)
}

fn end_position(q: &[String]) -> usize {
    match q.last() {
        Some(t) if text::is_terminal_punct(t) => q.len() - 1,
        _ => q.len(),
    }
}

/// Token-wise check that `out` differs from the question exactly as the
/// category prescribes.
pub fn structural_check(
    kg: &KnowledgeGraph,
    aq: &AnnotatedQuestion,
    category: Category,
    out: &[String],
) -> Result<(), String> {
    let q = &aq.question;
    let role = category.operand().role();
    let fail = |why: &str| {
        Err(format!(
            "{category} on `{}` -> `{}`: {why}",
            text::detokenize(q),
            text::detokenize(out)
        ))
    };
    match category.operation() {
        Operation::Retain => {
            if out != q.as_slice() {
                return fail("retain changed the question");
            }
        }
        Operation::Delete => {
            let role = role.expect("delete has a role");
            let ok = aq.mentions_with(role).any(|m| {
                out.len() + m.len() == q.len() && out[..m.start] == q[..m.start] && out[m.start..] == q[m.end..]
            });
            if !ok {
                return fail("not the question minus one role span");
            }
        }
        Operation::Substitute => {
            let role = role.expect("substitute has a role");
            let ok = aq.mentions_with(role).any(|m| {
                let tail = q.len() - m.end;
                if out.len() < m.start + tail + 1
                    || out[..m.start] != q[..m.start]
                    || out[out.len() - tail..] != q[m.end..]
                {
                    return false;
                }
                let with = &out[m.start..out.len() - tail];
                if text::surface_key(with) == text::surface_key(&m.surface) {
                    return false;
                }
                match category.substitute_mode() {
                    Some(SubstituteMode::Pronoun) => {
                        with.len() == 1 && ["he", "she", "it", "they"].contains(&with[0].as_str())
                    }
                    Some(SubstituteMode::Type) => {
                        with.len() >= 2
                            && with[0] == "the"
                            && kg.types_of(&m.item).is_ok_and(|ts| {
                                ts.iter().any(|t| {
                                    kg.label(t)
                                        .is_ok_and(|l| text::normalize(l) == text::surface_key(&with[1..]))
                                })
                            })
                    }
                    _ => kg.lookup_surface(&text::detokenize(with)).contains(&m.item),
                }
            });
            if !ok {
                return fail("not one span replaced in place");
            }
        }
        Operation::Insert => {
            let role = role.expect("insert has a role");
            if out.len() <= q.len() {
                return fail("nothing inserted");
            }
            let n = out.len() - q.len();
            let positions: Vec<usize> = match category {
                Category::InsEntity => vec![end_position(q)],
                Category::InsRelation | Category::InsAnswerType => vec![wh_position(q)],
                _ => aq.mentions_with(MentionRole::Entity).map(|m| m.start).collect(),
            };
            let ok = positions.iter().any(|&at| {
                out[..at] == q[..at] && out[at + n..] == q[at..] && kind_matches(kg, &out[at..at + n], role)
            });
            if !ok {
                return fail("not one span inserted at the mandated position");
            }
        }
    }
    Ok(())
}
