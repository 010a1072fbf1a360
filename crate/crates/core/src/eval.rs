//! Rewards and answer-quality metrics.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Conversation;
use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;
use crate::qa::{ConvQa, Exchange, RankedAnswerList};

fn require_gold(gold: &[String]) -> Result<()> {
    if gold.is_empty() {
        Err(Error::Contract("metric needs at least one gold answer".into()))
    } else {
        Ok(())
    }
}

/// 1/r for the first 1-based rank r holding a gold answer, 0 if none.
pub fn reciprocal_rank(ranked: &RankedAnswerList, gold: &[String]) -> Result<f64> {
    require_gold(gold)?;
    Ok(ranked
        .ids()
        .position(|id| gold.iter().any(|g| g == id))
        .map_or(0.0, |i| 1.0 / (i + 1) as f64))
}

pub fn precision_at_1(ranked: &RankedAnswerList, gold: &[String]) -> Result<f64> {
    require_gold(gold)?;
    Ok(f64::from(u8::from(
        ranked.top().is_some_and(|id| gold.iter().any(|g| g == id)),
    )))
}

pub fn hit_at_5(ranked: &RankedAnswerList, gold: &[String]) -> Result<f64> {
    require_gold(gold)?;
    Ok(f64::from(u8::from(
        ranked.ids().take(5).any(|id| gold.iter().any(|g| g == id)),
    )))
}

/// Arithmetic mean; 0 for no values.
pub fn mrr(reciprocal_ranks: &[f64]) -> f64 {
    mean(reciprocal_ranks.iter().copied())
}

/// Sums in sorted order so the result does not depend on input order.
fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

/// RR(reformulation) − RR(original), in [-1, 1].
pub fn reward_extrinsic(reformulated: &RankedAnswerList, original: &RankedAnswerList, gold: &[String]) -> Result<f64> {
    Ok(reciprocal_rank(reformulated, gold)? - reciprocal_rank(original, gold)?)
}

/// Difference of the model's top-1 probabilities for the reformulation and
/// the original, in [-1, 1]. Needs no gold answers.
pub fn reward_intrinsic<Q: ConvQa + ?Sized>(
    qa: &Q,
    history: &[Exchange],
    reformulated: &[String],
    original: &[String],
) -> Result<f64> {
    Ok(qa.top1_probability(history, reformulated)? - qa.top1_probability(history, original)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormulationKind {
    Original,
    Paraphrase(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormulationOutcome {
    pub kind: FormulationKind,
    pub ranked: RankedAnswerList,
    pub p_at_1: f64,
    pub rr: f64,
    pub hit_at_5: f64,
}

impl FormulationOutcome {
    pub fn score(kind: FormulationKind, ranked: RankedAnswerList, gold: &[String]) -> Result<Self> {
        Ok(Self {
            kind,
            p_at_1: precision_at_1(&ranked, gold)?,
            rr: reciprocal_rank(&ranked, gold)?,
            hit_at_5: hit_at_5(&ranked, gold)?,
            ranked,
        })
    }
}

/// All formulations of one test question.
#[derive(Debug, Clone, PartialEq)]
pub struct IntentResult {
    pub conversation_id: String,
    pub turn_index: usize,
    pub domain: String,
    pub outcomes: Vec<FormulationOutcome>,
}

impl IntentResult {
    pub fn correct_formulations(&self) -> usize {
        self.outcomes.iter().filter(|o| o.p_at_1 == 1.0).count()
    }
}

/// Mean over intents of the number of formulations (original included)
/// answered correctly at rank 1.
pub fn robust_metric(results: &[IntentResult]) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::Contract("robust metric over zero intents".into()));
    }
    for r in results {
        let originals = r
            .outcomes
            .iter()
            .filter(|o| o.kind == FormulationKind::Original)
            .count();
        if originals != 1 {
            return Err(Error::Contract(format!(
                "intent {}#{} has {originals} original formulations",
                r.conversation_id, r.turn_index
            )));
        }
    }
    Ok(mean(results.iter().map(|r| r.correct_formulations() as f64)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub p_at_1: f64,
    pub mrr: f64,
    pub hit_at_5: f64,
    pub n_formulations: usize,
}

impl Breakdown {
    fn of<'a>(outcomes: impl Iterator<Item = &'a FormulationOutcome> + Clone) -> Self {
        Self {
            p_at_1: mean(outcomes.clone().map(|o| o.p_at_1)),
            mrr: mean(outcomes.clone().map(|o| o.rr)),
            hit_at_5: mean(outcomes.clone().map(|o| o.hit_at_5)),
            n_formulations: outcomes.count(),
        }
    }
}

/// Aggregates written as `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub p_at_1: f64,
    pub mrr: f64,
    pub hit_at_5: f64,
    pub robust: Option<f64>,
    pub n_intents: usize,
    pub n_formulations: usize,
    pub by_domain: BTreeMap<String, Breakdown>,
    pub by_turn: BTreeMap<String, Breakdown>,
}

impl MetricsReport {
    /// Uniform averages over every formulation; Robust only when asked.
    pub fn from_results(results: &[IntentResult], with_robust: bool) -> Result<Self> {
        let all = results.iter().flat_map(|r| r.outcomes.iter());
        let overall = Breakdown::of(all);

        let mut domains: BTreeMap<&str, Vec<&FormulationOutcome>> = BTreeMap::new();
        let mut turns: BTreeMap<usize, Vec<&FormulationOutcome>> = BTreeMap::new();
        for r in results {
            domains.entry(&r.domain).or_default().extend(r.outcomes.iter());
            turns.entry(r.turn_index).or_default().extend(r.outcomes.iter());
        }

        Ok(Self {
            p_at_1: overall.p_at_1,
            mrr: overall.mrr,
            hit_at_5: overall.hit_at_5,
            robust: if with_robust && !results.is_empty() {
                Some(robust_metric(results)?)
            } else {
                None
            },
            n_intents: results.len(),
            n_formulations: overall.n_formulations,
            by_domain: domains
                .into_iter()
                .map(|(d, os)| (d.to_owned(), Breakdown::of(os.into_iter())))
                .collect(),
            by_turn: turns
                .into_iter()
                .map(|(t, os)| (t.to_string(), Breakdown::of(os.into_iter())))
                .collect(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// Gold conversational context before `turn_index`: earlier questions with
/// the label of their first gold answer.
pub fn gold_history(kg: &KnowledgeGraph, conversation: &Conversation, turn_index: usize) -> Vec<Exchange> {
    conversation
        .turns
        .iter()
        .take(turn_index.saturating_sub(1))
        .map(|t| Exchange {
            question: t.question.clone(),
            answer: t
                .gold_answers
                .first()
                .and_then(|g| kg.get(g))
                .map(|i| i.label.clone())
                .unwrap_or_default(),
        })
        .collect()
}

/// Answers every test question (and, if requested, its paraphrases under
/// the same gold history) and scores each formulation.
pub fn score_intents<Q: ConvQa + ?Sized>(
    qa: &Q,
    kg: &KnowledgeGraph,
    conversations: &[Conversation],
    include_paraphrases: bool,
) -> Result<Vec<IntentResult>> {
    let mut results = Vec::new();
    for conv in conversations {
        for turn in &conv.turns {
            let history = gold_history(kg, conv, turn.index);
            let mut outcomes = vec![FormulationOutcome::score(
                FormulationKind::Original,
                qa.answer(&history, &turn.question)?,
                &turn.gold_answers,
            )?];
            if include_paraphrases {
                for (i, p) in turn.paraphrases.iter().enumerate() {
                    outcomes.push(FormulationOutcome::score(
                        FormulationKind::Paraphrase(i),
                        qa.answer(&history, p)?,
                        &turn.gold_answers,
                    )?);
                }
            }
            results.push(IntentResult {
                conversation_id: conv.id.clone(),
                turn_index: turn.index,
                domain: conv.domain.clone(),
                outcomes,
            });
        }
    }
    Ok(results)
}

pub fn evaluate<Q: ConvQa + ?Sized>(
    qa: &Q,
    kg: &KnowledgeGraph,
    conversations: &[Conversation],
    include_paraphrases: bool,
) -> Result<MetricsReport> {
    let results = score_intents(qa, kg, conversations, include_paraphrases)?;
    MetricsReport::from_results(&results, include_paraphrases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Turn;
    use crate::kg::{ItemKind, KgItem};
    use crate::qa::QaPair;
    use crate::text::tokenize;

    fn list(ids: &[&str]) -> RankedAnswerList {
        RankedAnswerList::from_scores(ids.iter().enumerate().map(|(i, id)| (id.to_string(), 100.0 - i as f64)))
    }

    fn gold(ids: &[&str]) -> Vec<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn reciprocal_ranks() {
        let l = list(&["a", "b", "c", "d", "e", "f"]);
        assert_eq!(reciprocal_rank(&l, &gold(&["a"])).unwrap(), 1.0);
        assert!((reciprocal_rank(&l, &gold(&["c"])).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(reciprocal_rank(&l, &gold(&["z"])).unwrap(), 0.0);
        assert_eq!(
            reciprocal_rank(&RankedAnswerList::default(), &gold(&["a"])).unwrap(),
            0.0
        );
        assert!(matches!(reciprocal_rank(&l, &[]), Err(Error::Contract(_))));
    }

    #[test]
    fn rank_five_and_six() {
        let l = list(&["a", "b", "c", "d", "e", "f"]);
        let g5 = gold(&["e"]);
        assert_eq!(precision_at_1(&l, &g5).unwrap(), 0.0);
        assert_eq!(hit_at_5(&l, &g5).unwrap(), 1.0);
        assert!((reciprocal_rank(&l, &g5).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(hit_at_5(&l, &gold(&["f"])).unwrap(), 0.0);
    }

    #[test]
    fn mean_reciprocal_rank() {
        assert_eq!(mrr(&[1.0, 0.5, 0.0]), 0.5);
        assert_eq!(mrr(&[]), 0.0);
    }

    #[test]
    fn extrinsic_reward_cases() {
        let g = gold(&["a"]);
        let first = list(&["a", "b", "c"]);
        let third = list(&["b", "c", "a"]);
        let none = list(&["b"]);
        let r = reward_extrinsic(&first, &third, &g).unwrap();
        assert!((r - (1.0 - 1.0 / 3.0)).abs() < 1e-15);
        assert_eq!(reward_extrinsic(&third, &third, &g).unwrap(), 0.0);
        assert_eq!(reward_extrinsic(&none, &first, &g).unwrap(), -1.0);
    }

    /// Maps exact question text to a fixed ranked list.
    struct Lookup(Vec<(String, RankedAnswerList)>);

    impl ConvQa for Lookup {
        fn answer(&self, _: &[Exchange], question: &[String]) -> Result<RankedAnswerList> {
            let q = crate::text::detokenize(question);
            Ok(self
                .0
                .iter()
                .find(|(k, _)| *k == q)
                .map(|(_, v)| v.clone())
                .unwrap_or_default())
        }
        fn train(&mut self, _: &[QaPair]) -> Result<()> {
            Ok(())
        }
    }

    #[test]
    fn intrinsic_reward_cases() {
        let uniform4 = RankedAnswerList::from_scores((0..4).map(|i| (format!("e{i}"), 1.0)));
        let two = RankedAnswerList::from_scores(vec![("a".into(), 1.0), ("b".into(), 1.0)]);
        let qa = Lookup(vec![("orig?".into(), uniform4), ("reform?".into(), two)]);
        let (orig, reform, empty) = (tokenize("orig?"), tokenize("reform?"), tokenize("nothing?"));
        assert_eq!(reward_intrinsic(&qa, &[], &orig, &orig).unwrap(), 0.0);
        assert!((reward_intrinsic(&qa, &[], &reform, &orig).unwrap() - 0.25).abs() < 1e-12);
        assert!((reward_intrinsic(&qa, &[], &empty, &orig).unwrap() + 0.25).abs() < 1e-12);
    }

    fn outcome(kind: FormulationKind, correct: bool) -> FormulationOutcome {
        let ranked = list(&[if correct { "g" } else { "x" }]);
        FormulationOutcome::score(kind, ranked, &gold(&["g"])).unwrap()
    }

    fn intent(correct: &[bool]) -> IntentResult {
        IntentResult {
            conversation_id: "c".into(),
            turn_index: 1,
            domain: "books".into(),
            outcomes: correct
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    let kind = if i == 0 {
                        FormulationKind::Original
                    } else {
                        FormulationKind::Paraphrase(i - 1)
                    };
                    outcome(kind, c)
                })
                .collect(),
        }
    }

    #[test]
    fn robust_counts_original_too() {
        let perfect: Vec<_> = (0..3).map(|_| intent(&[true; 21])).collect();
        assert_eq!(robust_metric(&perfect).unwrap(), 21.0);
        assert_eq!(robust_metric(&[intent(&[false; 21])]).unwrap(), 0.0);
        assert_eq!(
            robust_metric(&[intent(&[true, true, false, true, false])]).unwrap(),
            3.0
        );
        assert!(robust_metric(&[]).is_err());
        let mut two_originals = intent(&[true, true]);
        two_originals.outcomes[1].kind = FormulationKind::Original;
        assert!(robust_metric(&[two_originals]).is_err());
    }

    fn tiny() -> (KnowledgeGraph, Vec<Conversation>) {
        let items = ["a", "b"]
            .iter()
            .map(|id| KgItem {
                id: id.to_string(),
                label: id.to_uppercase(),
                aliases: vec![],
                kind: ItemKind::Entity,
                gender: None,
            })
            .collect();
        let kg = KnowledgeGraph::new(items, vec![], "instance_of").unwrap();
        let turn = |i: usize, q: &str, g: &str, ps: &[&str]| Turn {
            index: i,
            question: tokenize(q),
            gold_answers: vec![g.into()],
            paraphrases: ps.iter().map(|p| tokenize(p)).collect(),
        };
        let convs = vec![
            Conversation {
                id: "c1".into(),
                domain: "books".into(),
                turns: vec![turn(1, "q1?", "a", &["p1?", "p2?"]), turn(2, "q2?", "b", &["p3?"])],
            },
            Conversation {
                id: "c2".into(),
                domain: "movies".into(),
                turns: vec![turn(1, "q3?", "b", &[])],
            },
        ];
        (kg, convs)
    }

    #[test]
    fn perfect_model_scores_one_everywhere() {
        let (kg, convs) = tiny();
        let mut table = vec![];
        for c in &convs {
            for t in &c.turns {
                let l = RankedAnswerList::from_scores(vec![(t.gold_answers[0].clone(), 1.0)]);
                table.push((crate::text::detokenize(&t.question), l.clone()));
                for p in &t.paraphrases {
                    table.push((crate::text::detokenize(p), l.clone()));
                }
            }
        }
        let qa = Lookup(table);
        let report = evaluate(&qa, &kg, &convs, true).unwrap();
        assert_eq!((report.p_at_1, report.mrr, report.hit_at_5), (1.0, 1.0, 1.0));
        assert_eq!(report.n_intents, 3);
        assert_eq!(report.n_formulations, 6);
        // (3 + 2 + 1) / 3
        assert_eq!(report.robust, Some(2.0));
        assert_eq!(report.by_domain["books"].n_formulations, 5);
        assert_eq!(report.by_turn["2"].n_formulations, 2);

        let plain = evaluate(&qa, &kg, &convs, false).unwrap();
        assert_eq!(plain.robust, None);
        assert_eq!(plain.n_formulations, 3);
        let json: serde_json::Value = serde_json::from_str(&plain.to_json()).unwrap();
        assert!(json["robust"].is_null());
        for key in [
            "p_at_1",
            "mrr",
            "hit_at_5",
            "n_intents",
            "n_formulations",
            "by_domain",
            "by_turn",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn gold_history_uses_first_answer_label() {
        let (kg, convs) = tiny();
        let h = gold_history(&kg, &convs[0], 2);
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].answer, "A");
        assert!(gold_history(&kg, &convs[0], 1).is_empty());
    }
}
