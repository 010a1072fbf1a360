//! In-memory knowledge graph: items with aliases, SPO facts with
//! qualifiers, and a normalized alias index used for mention linking.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text;

/// Id of the predicate that plays the role of Wikidata's "instance of".
pub const DEFAULT_TYPE_PREDICATE: &str = "instance_of";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemKind {
    Entity,
    Predicate,
    Type,
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KgItem {
    pub id: String,
    pub label: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    pub kind: ItemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<Gender>,
}

impl KgItem {
    /// Label followed by aliases.
    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.label.as_str()).chain(self.aliases.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fact {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub qualifiers: Vec<(String, String)>,
}

impl Fact {
    /// Every item id the fact touches, main triple first.
    pub fn item_ids(&self) -> impl Iterator<Item = &str> {
        [&self.subject, &self.predicate, &self.object]
            .into_iter()
            .map(String::as_str)
            .chain(self.qualifiers.iter().flat_map(|(p, o)| [p.as_str(), o.as_str()]))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FactRecord {
    s: String,
    p: String,
    o: String,
    #[serde(default)]
    qualifiers: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    items: BTreeMap<String, KgItem>,
    facts: Vec<Fact>,
    alias_index: HashMap<String, Vec<String>>,
    type_predicate: String,
    // facts by subject, in fact order
    by_subject: HashMap<String, Vec<usize>>,
    type_objects: HashSet<String>,
    max_surface_len: usize,
}

impl KnowledgeGraph {
    /// Builds and validates a graph from already-parsed parts.
    pub fn new(items: Vec<KgItem>, facts: Vec<Fact>, type_predicate: &str) -> Result<Self> {
        let mut by_id = BTreeMap::new();
        for item in items {
            validate_item(&item)?;
            if by_id.contains_key(&item.id) {
                return Err(Error::Integrity(format!("duplicate item id `{}`", item.id)));
            }
            by_id.insert(item.id.clone(), item);
        }

        let kind_of = |id: &str| by_id.get(id).map(|i: &KgItem| i.kind);
        for (n, fact) in facts.iter().enumerate() {
            for id in fact.item_ids() {
                if !by_id.contains_key(id) {
                    return Err(Error::Integrity(format!("fact #{n} references unknown id `{id}`")));
                }
            }
            if kind_of(&fact.subject) != Some(ItemKind::Entity) {
                return Err(Error::Integrity(format!(
                    "fact #{n}: subject `{}` is not an entity",
                    fact.subject
                )));
            }
            let predicates = std::iter::once(&fact.predicate).chain(fact.qualifiers.iter().map(|(p, _)| p));
            for p in predicates {
                if kind_of(p) != Some(ItemKind::Predicate) {
                    return Err(Error::Integrity(format!("fact #{n}: `{p}` is not a predicate")));
                }
            }
        }

        let mut alias_index: HashMap<String, Vec<String>> = HashMap::new();
        let mut max_surface_len = 0;
        for item in by_id.values() {
            for surface in item.surfaces() {
                let key = text::normalize(surface);
                max_surface_len = max_surface_len.max(key.split(' ').count());
                let ids = alias_index.entry(key).or_default();
                if !ids.contains(&item.id) {
                    ids.push(item.id.clone());
                }
            }
        }
        // BTreeMap iteration already yields ids in sorted order

        let mut by_subject: HashMap<String, Vec<usize>> = HashMap::new();
        let mut type_objects = HashSet::new();
        for (i, fact) in facts.iter().enumerate() {
            by_subject.entry(fact.subject.clone()).or_default().push(i);
            if fact.predicate == type_predicate {
                type_objects.insert(fact.object.clone());
            }
        }

        Ok(Self {
            items: by_id,
            facts,
            alias_index,
            type_predicate: type_predicate.to_owned(),
            by_subject,
            type_objects,
            max_surface_len,
        })
    }

    /// Reads `kg_items.jsonl` and `kg_facts.jsonl` with the default type predicate.
    pub fn load(items_path: &Path, facts_path: &Path) -> Result<Self> {
        Self::load_with_type_predicate(items_path, facts_path, DEFAULT_TYPE_PREDICATE)
    }

    pub fn load_with_type_predicate(items_path: &Path, facts_path: &Path, type_predicate: &str) -> Result<Self> {
        let items: Vec<KgItem> = read_jsonl(items_path)?;
        let facts = read_jsonl::<FactRecord>(facts_path)?
            .into_iter()
            .map(|r| Fact {
                subject: r.s,
                predicate: r.p,
                object: r.o,
                qualifiers: r.qualifiers,
            })
            .collect();
        Self::new(items, facts, type_predicate)
    }

    pub fn to_items_jsonl(&self) -> String {
        let mut out = String::new();
        for item in self.items.values() {
            out.push_str(&serde_json::to_string(item).expect("items serialize"));
            out.push('\n');
        }
        out
    }

    pub fn to_facts_jsonl(&self) -> String {
        let mut out = String::new();
        for f in &self.facts {
            let rec = FactRecord {
                s: f.subject.clone(),
                p: f.predicate.clone(),
                o: f.object.clone(),
                qualifiers: f.qualifiers.clone(),
            };
            out.push_str(&serde_json::to_string(&rec).expect("facts serialize"));
            out.push('\n');
        }
        out
    }

    pub fn item(&self, id: &str) -> Result<&KgItem> {
        self.items.get(id).ok_or_else(|| Error::Lookup(id.to_owned()))
    }

    pub fn get(&self, id: &str) -> Option<&KgItem> {
        self.items.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.items.contains_key(id)
    }

    pub fn items(&self) -> impl Iterator<Item = &KgItem> {
        self.items.values()
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn type_predicate(&self) -> &str {
        &self.type_predicate
    }

    pub fn label(&self, id: &str) -> Result<&str> {
        self.item(id).map(|i| i.label.as_str())
    }

    pub fn aliases_of(&self, id: &str) -> Result<&[String]> {
        self.item(id).map(|i| i.aliases.as_slice())
    }

    /// Objects of `⟨id, type_predicate, ·⟩` facts in fact order.
    pub fn types_of(&self, id: &str) -> Result<Vec<&str>> {
        self.item(id)?;
        Ok(self
            .facts_with_subject(id)
            .filter(|f| f.predicate == self.type_predicate)
            .map(|f| f.object.as_str())
            .collect())
    }

    pub fn is_type(&self, id: &str) -> Result<bool> {
        self.item(id)?;
        Ok(self.type_objects.contains(id))
    }

    pub fn gender_of(&self, id: &str) -> Result<Option<Gender>> {
        self.item(id).map(|i| i.gender)
    }

    pub fn facts_with_subject<'a>(&'a self, id: &str) -> impl Iterator<Item = &'a Fact> + 'a {
        self.by_subject
            .get(id)
            .into_iter()
            .flatten()
            .map(move |&i| &self.facts[i])
    }

    /// Item ids whose label or an alias normalizes to `key` (sorted).
    pub fn lookup_key(&self, key: &str) -> &[String] {
        self.alias_index.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn lookup_surface(&self, surface: &str) -> &[String] {
        self.lookup_key(&text::normalize(surface))
    }

    /// Longest label/alias length in tokens.
    pub fn max_surface_len(&self) -> usize {
        self.max_surface_len
    }

    pub fn alias_keys(&self) -> impl Iterator<Item = &str> {
        self.alias_index.keys().map(String::as_str)
    }
}

fn validate_item(item: &KgItem) -> Result<()> {
    if item.id.is_empty() {
        return Err(Error::Integrity("item with empty id".into()));
    }
    if item.label.trim().is_empty() {
        return Err(Error::Integrity(format!("item `{}` has an empty label", item.id)));
    }
    for (i, alias) in item.aliases.iter().enumerate() {
        if alias == &item.label {
            return Err(Error::Integrity(format!("item `{}`: alias equals label", item.id)));
        }
        if item.aliases[..i].contains(alias) {
            return Err(Error::Integrity(format!(
                "item `{}`: duplicate alias `{alias}`",
                item.id
            )));
        }
    }
    if item.gender.is_some() && item.kind != ItemKind::Entity {
        return Err(Error::Integrity(format!("item `{}`: gender on a non-entity", item.id)));
    }
    Ok(())
}

/// Parses one JSON object per non-blank line.
pub(crate) fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::Load {
            path: path.to_owned(),
            line: n + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn entity(id: &str, label: &str, aliases: &[&str]) -> KgItem {
        KgItem {
            id: id.into(),
            label: label.into(),
            aliases: aliases.iter().map(|s| s.to_string()).collect(),
            kind: ItemKind::Entity,
            gender: None,
        }
    }

    fn with_kind(mut item: KgItem, kind: ItemKind) -> KgItem {
        item.kind = kind;
        item
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
        let items = vec![
            entity("trop", "The Rings of Power", &["Rings of Power", "TROP"]),
            with_kind(entity("instance_of", "instance of", &[]), ItemKind::Predicate),
            with_kind(entity("tv_series", "TV series", &["series"]), ItemKind::Type),
            entity("baldry", "Maxim Baldry", &[]),
            KgItem {
                gender: Some(Gender::Male),
                ..entity("updike", "John Updike", &[])
            },
        ];
        let facts = vec![fact("trop", "instance_of", "tv_series")];
        KnowledgeGraph::new(items, facts, "instance_of").unwrap()
    }

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    #[test]
    fn loads_qualified_fact() {
        let dir = tempfile::tempdir().unwrap();
        let items = write(
            dir.path(),
            "items.jsonl",
            r#"{"id":"trop","label":"The Rings of Power","aliases":["TROP"],"kind":"entity"}
{"id":"cast","label":"cast member","aliases":[],"kind":"predicate"}
{"id":"role","label":"character role","kind":"predicate"}
{"id":"baldry","label":"Maxim Baldry","aliases":[],"kind":"entity","gender":"male"}
{"id":"isildur","label":"Isildur","aliases":[],"kind":"entity"}
"#,
        );
        let facts = write(
            dir.path(),
            "facts.jsonl",
            r#"{"s":"trop","p":"cast","o":"baldry","qualifiers":[["role","isildur"]]}"#,
        );
        let kg = KnowledgeGraph::load(&items, &facts).unwrap();
        assert_eq!(kg.items().count(), 5);
        assert_eq!(kg.facts().len(), 1);
        assert_eq!(
            kg.facts()[0].qualifiers,
            vec![("role".to_string(), "isildur".to_string())]
        );
        assert_eq!(kg.gender_of("baldry").unwrap(), Some(Gender::Male));
    }

    #[test]
    fn empty_facts_file_still_indexes_items() {
        let dir = tempfile::tempdir().unwrap();
        let items = write(
            dir.path(),
            "items.jsonl",
            r#"{"id":"x","label":"Ozark","aliases":[],"kind":"entity"}"#,
        );
        let facts = write(dir.path(), "facts.jsonl", "");
        let kg = KnowledgeGraph::load(&items, &facts).unwrap();
        assert!(kg.facts().is_empty());
        assert_eq!(kg.lookup_surface("ozark"), ["x"]);
        assert!(!kg.is_type("x").unwrap());
    }

    #[test]
    fn dangling_fact_id_is_integrity_error() {
        let dir = tempfile::tempdir().unwrap();
        let items = write(
            dir.path(),
            "items.jsonl",
            r#"{"id":"x","label":"Ozark","kind":"entity"}
{"id":"p","label":"creator","kind":"predicate"}"#,
        );
        let facts = write(dir.path(), "facts.jsonl", r#"{"s":"x","p":"p","o":"E999"}"#);
        let err = KnowledgeGraph::load(&items, &facts).unwrap_err();
        assert!(matches!(err, Error::Integrity(ref m) if m.contains("E999")), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let items = write(
            dir.path(),
            "items.jsonl",
            "{\"id\":\"x\",\"label\":\"Ozark\",\"kind\":\"entity\"}\n{not json\n",
        );
        let facts = write(dir.path(), "facts.jsonl", "");
        match KnowledgeGraph::load(&items, &facts).unwrap_err() {
            Error::Load { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn item_invariants_are_enforced() {
        let bad_alias = entity("a", "Ozark", &["Ozark"]);
        assert!(KnowledgeGraph::new(vec![bad_alias], vec![], "t").is_err());
        let dup = vec![entity("a", "A", &[]), entity("a", "B", &[])];
        assert!(KnowledgeGraph::new(dup, vec![], "t").is_err());
        let gendered_type = KgItem {
            gender: Some(Gender::Female),
            ..with_kind(entity("t", "band", &[]), ItemKind::Type)
        };
        assert!(KnowledgeGraph::new(vec![gendered_type], vec![], "t").is_err());
    }

    #[test]
    fn lookups() {
        let kg = toy();
        assert_eq!(kg.aliases_of("trop").unwrap(), ["Rings of Power", "TROP"]);
        assert!(kg.aliases_of("baldry").unwrap().is_empty());
        assert!(matches!(kg.aliases_of("?"), Err(Error::Lookup(_))));
        assert_eq!(kg.types_of("trop").unwrap(), ["tv_series"]);
        assert!(kg.types_of("baldry").unwrap().is_empty());
        assert!(kg.is_type("tv_series").unwrap());
        assert!(!kg.is_type("baldry").unwrap());
        assert_eq!(kg.gender_of("updike").unwrap(), Some(Gender::Male));
        assert_eq!(kg.gender_of("trop").unwrap(), None);
        assert!(kg.gender_of("nobody").is_err());
    }

    #[test]
    fn every_surface_resolves_to_its_item() {
        let kg = toy();
        for item in kg.items() {
            for s in item.surfaces() {
                assert!(kg.lookup_surface(s).contains(&item.id), "{s}");
            }
        }
        assert_eq!(kg.lookup_surface("  rings OF   power"), ["trop"]);
    }
}
