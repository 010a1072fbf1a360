//! The fifteen reformulation categories and per-question validity masks.
//!
//! Fixed tag assignment:
//!
//! | tag | operation | operand |
//! |-----|-----------|---------|
//! | rc1–rc4 | insert | entity, relation, entity type, answer type |
//! | rc5–rc8 | delete | entity, relation, entity type, answer type |
//! | rc9–rc11 | substitute | relation, entity type, answer type |
//! | rc12–rc14 | substitute entity | with pronoun, with type, with alias |
//! | rc15 | retain | whole question |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::{AnnotatedQuestion, Mention, MentionRole};
use crate::error::Error;
use crate::kg::{ItemKind, KnowledgeGraph};
use crate::text;

pub const NUM_CATEGORIES: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operation {
    Insert,
    Delete,
    Substitute,
    Retain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operand {
    Entity,
    Relation,
    EntityType,
    AnswerType,
    WholeQuestion,
}

impl Operand {
    pub fn role(self) -> Option<MentionRole> {
        match self {
            Operand::Entity => Some(MentionRole::Entity),
            Operand::Relation => Some(MentionRole::Relation),
            Operand::EntityType => Some(MentionRole::EntityType),
            Operand::AnswerType => Some(MentionRole::AnswerType),
            Operand::WholeQuestion => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SubstituteMode {
    Pronoun,
    Type,
    Alias,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    InsEntity,
    InsRelation,
    InsEntityType,
    InsAnswerType,
    DelEntity,
    DelRelation,
    DelEntityType,
    DelAnswerType,
    SubsRelation,
    SubsEntityType,
    SubsAnswerType,
    SubsEntityWithPronoun,
    SubsEntityWithType,
    SubsEntityWithAlias,
    Retain,
}

const ALL: [Category; NUM_CATEGORIES] = [
    Category::InsEntity,
    Category::InsRelation,
    Category::InsEntityType,
    Category::InsAnswerType,
    Category::DelEntity,
    Category::DelRelation,
    Category::DelEntityType,
    Category::DelAnswerType,
    Category::SubsRelation,
    Category::SubsEntityType,
    Category::SubsAnswerType,
    Category::SubsEntityWithPronoun,
    Category::SubsEntityWithType,
    Category::SubsEntityWithAlias,
    Category::Retain,
];

/// The categories in rc1..rc15 order.
pub fn all_categories() -> &'static [Category; NUM_CATEGORIES] {
    &ALL
}

impl Category {
    /// 0-based position, i.e. the action index.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Category> {
        ALL.get(i).copied()
    }

    pub fn tag(self) -> String {
        format!("rc{}", self.index() + 1)
    }

    pub fn operation(self) -> Operation {
        use Category::*;
        match self {
            InsEntity | InsRelation | InsEntityType | InsAnswerType => Operation::Insert,
            DelEntity | DelRelation | DelEntityType | DelAnswerType => Operation::Delete,
            SubsRelation
            | SubsEntityType
            | SubsAnswerType
            | SubsEntityWithPronoun
            | SubsEntityWithType
            | SubsEntityWithAlias => Operation::Substitute,
            Retain => Operation::Retain,
        }
    }

    pub fn operand(self) -> Operand {
        use Category::*;
        match self {
            InsEntity | DelEntity | SubsEntityWithPronoun | SubsEntityWithType | SubsEntityWithAlias => Operand::Entity,
            InsRelation | DelRelation | SubsRelation => Operand::Relation,
            InsEntityType | DelEntityType | SubsEntityType => Operand::EntityType,
            InsAnswerType | DelAnswerType | SubsAnswerType => Operand::AnswerType,
            Retain => Operand::WholeQuestion,
        }
    }

    pub fn substitute_mode(self) -> Option<SubstituteMode> {
        match self {
            Category::SubsEntityWithPronoun => Some(SubstituteMode::Pronoun),
            Category::SubsEntityWithType => Some(SubstituteMode::Type),
            Category::SubsEntityWithAlias => Some(SubstituteMode::Alias),
            _ => None,
        }
    }

    /// Short human name such as `DEL ent-type`.
    pub fn name(self) -> &'static str {
        use Category::*;
        match self {
            InsEntity => "INS ent",
            InsRelation => "INS rel",
            InsEntityType => "INS ent-type",
            InsAnswerType => "INS ans-type",
            DelEntity => "DEL ent",
            DelRelation => "DEL rel",
            DelEntityType => "DEL ent-type",
            DelAnswerType => "DEL ans-type",
            SubsRelation => "SUBS rel",
            SubsEntityType => "SUBS ent-type",
            SubsAnswerType => "SUBS ans-type",
            SubsEntityWithPronoun => "SUBS ent-pronoun",
            SubsEntityWithType => "SUBS ent-with-type",
            SubsEntityWithAlias => "SUBS ent-alias",
            Retain => "RETAIN",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rc{}", self.index() + 1)
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix("rc")
            .and_then(|n| n.parse::<usize>().ok())
            .and_then(|n| n.checked_sub(1))
            .and_then(Category::from_index)
            .ok_or_else(|| Error::Validation(format!("unknown reformulation category `{s}`")))
    }
}

impl Serialize for Category {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.tag())
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Validity bit per category; RETAIN is always set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActionMask([bool; NUM_CATEGORIES]);

impl ActionMask {
    pub fn only_retain() -> Self {
        let mut bits = [false; NUM_CATEGORIES];
        bits[Category::Retain.index()] = true;
        ActionMask(bits)
    }

    pub fn all() -> Self {
        ActionMask([true; NUM_CATEGORIES])
    }

    /// Rejects masks with no valid action.
    pub fn from_bits(bits: [bool; NUM_CATEGORIES]) -> Option<Self> {
        bits.iter().any(|&b| b).then_some(ActionMask(bits))
    }

    pub fn set(&mut self, c: Category, valid: bool) {
        self.0[c.index()] = valid;
    }

    pub fn is_valid(&self, c: Category) -> bool {
        self.0[c.index()]
    }

    pub fn get(&self, index: usize) -> bool {
        self.0[index]
    }

    pub fn bits(&self) -> [u8; NUM_CATEGORIES] {
        self.0.map(u8::from)
    }

    pub fn as_bools(&self) -> &[bool; NUM_CATEGORIES] {
        &self.0
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn valid_categories(&self) -> impl Iterator<Item = Category> + '_ {
        ALL.iter().copied().filter(|c| self.is_valid(*c))
    }
}

pub(crate) fn content_len(tokens: &[String]) -> usize {
    tokens.iter().filter(|t| !text::is_terminal_punct(t)).count()
}

/// Aliases of the mentioned item that differ from the mention's own surface.
pub(crate) fn unused_aliases<'k>(kg: &'k KnowledgeGraph, mention: &Mention) -> Vec<&'k str> {
    let own = text::surface_key(&mention.surface);
    kg.get(&mention.item)
        .map(|item| {
            item.aliases
                .iter()
                .filter(|a| text::normalize(a) != own)
                .map(String::as_str)
                .collect()
        })
        .unwrap_or_default()
}

fn has_types(kg: &KnowledgeGraph, id: &str) -> bool {
    kg.types_of(id).map(|t| !t.is_empty()).unwrap_or(false)
}

fn history_entity_available(kg: &KnowledgeGraph, aq: &AnnotatedQuestion) -> bool {
    aq.history.iter().any(|h| {
        let from_question = h
            .mentions
            .iter()
            .filter(|m| m.role == MentionRole::Entity)
            .map(|m| &m.item);
        from_question
            .chain(h.answer_ids.iter())
            .any(|id| !aq.mentions_item(id) && kg.get(id).is_some_and(|i| i.kind == ItemKind::Entity))
    })
}

fn relation_recoverable(kg: &KnowledgeGraph, aq: &AnnotatedQuestion) -> bool {
    let entities: Vec<&str> = aq.mentions_with(MentionRole::Entity).map(|m| m.item.as_str()).collect();
    let links_gold = kg.facts().iter().any(|f| {
        f.predicate != kg.type_predicate()
            && ((entities.contains(&f.subject.as_str())
                && (aq.gold_answers.contains(&f.object)
                    || f.qualifiers.iter().any(|(_, o)| aq.gold_answers.contains(o))))
                || (entities.contains(&f.object.as_str()) && aq.gold_answers.contains(&f.subject)))
    });
    links_gold
        || aq
            .history
            .iter()
            .any(|h| h.mentions.iter().any(|m| m.role == MentionRole::Relation))
}

/// Validity of every category for an annotated question.
pub fn valid_actions(aq: &AnnotatedQuestion, kg: &KnowledgeGraph) -> ActionMask {
    use Category::*;
    let mut mask = ActionMask::only_retain();
    let has = |role| aq.has_role(role);
    let content = content_len(&aq.question);

    mask.set(InsEntity, !has(MentionRole::Entity) && history_entity_available(kg, aq));
    mask.set(InsRelation, !has(MentionRole::Relation) && relation_recoverable(kg, aq));
    mask.set(
        InsEntityType,
        !has(MentionRole::EntityType) && aq.mentions_with(MentionRole::Entity).any(|m| has_types(kg, &m.item)),
    );
    mask.set(
        InsAnswerType,
        !has(MentionRole::AnswerType) && aq.gold_answers.iter().any(|g| has_types(kg, g)),
    );

    for (cat, role) in [
        (DelEntity, MentionRole::Entity),
        (DelRelation, MentionRole::Relation),
        (DelEntityType, MentionRole::EntityType),
        (DelAnswerType, MentionRole::AnswerType),
    ] {
        mask.set(cat, aq.mentions_with(role).any(|m| content > m.len()));
    }

    for (cat, role) in [
        (SubsRelation, MentionRole::Relation),
        (SubsEntityType, MentionRole::EntityType),
        (SubsAnswerType, MentionRole::AnswerType),
        (SubsEntityWithAlias, MentionRole::Entity),
    ] {
        mask.set(cat, aq.mentions_with(role).any(|m| !unused_aliases(kg, m).is_empty()));
    }
    mask.set(SubsEntityWithPronoun, has(MentionRole::Entity));
    mask.set(
        SubsEntityWithType,
        aq.mentions_with(MentionRole::Entity).any(|m| has_types(kg, &m.item)),
    );
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_categories_in_fixed_order() {
        let cats = all_categories();
        assert_eq!(cats.len(), 15);
        assert_eq!(*cats.last().unwrap(), Category::Retain);
        assert_eq!(Category::Retain.tag(), "rc15");
        assert_eq!(
            cats.iter().filter(|c| c.operation() == Operation::Substitute).count(),
            6
        );
        for (i, c) in cats.iter().enumerate() {
            assert_eq!(c.index(), i);
            assert_eq!(c.tag().parse::<Category>().unwrap(), *c);
        }
    }

    #[test]
    fn operation_operand_grid() {
        use Category::*;
        assert_eq!(
            (InsAnswerType.operation(), InsAnswerType.operand()),
            (Operation::Insert, Operand::AnswerType)
        );
        assert_eq!(
            (DelEntityType.operation(), DelEntityType.operand()),
            (Operation::Delete, Operand::EntityType)
        );
        assert_eq!(SubsEntityWithType.substitute_mode(), Some(SubstituteMode::Type));
        assert_eq!(SubsEntityType.substitute_mode(), None);
        assert_eq!(Retain.operand(), Operand::WholeQuestion);
        let subs_entity = all_categories()
            .iter()
            .filter(|c| c.operation() == Operation::Substitute && c.operand() == Operand::Entity)
            .count();
        assert_eq!(subs_entity, 3);
    }

    #[test]
    fn bad_tags_are_rejected() {
        for s in ["rc0", "rc16", "RC1", "rc", "x"] {
            assert!(s.parse::<Category>().is_err(), "{s}");
        }
    }

    #[test]
    fn serde_uses_tags() {
        let json = serde_json::to_string(&Category::SubsRelation).unwrap();
        assert_eq!(json, "\"rc9\"");
        assert_eq!(
            serde_json::from_str::<Category>("\"rc4\"").unwrap(),
            Category::InsAnswerType
        );
    }

    #[test]
    fn masks_never_empty() {
        assert!(ActionMask::from_bits([false; NUM_CATEGORIES]).is_none());
        let m = ActionMask::only_retain();
        assert_eq!(m.count(), 1);
        assert_eq!(m.valid_categories().collect::<Vec<_>>(), vec![Category::Retain]);
        assert_eq!(m.bits()[14], 1);
    }
}
