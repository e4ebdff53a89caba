//! Entity vocabulary: ids, display names, types and synonyms.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EntityRef, EntityType};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityInfo {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: EntityType,
    pub synonyms: Vec<String>,
}

/// One vocabulary entry as it appears on the wire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityRecord {
    pub id: String,
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub synonyms: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabularyFile {
    entities: Vec<EntityRecord>,
    predicates: Vec<String>,
}

#[derive(Debug, Error)]
pub enum VocabularyError {
    #[error("malformed vocabulary: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("vocabulary entity with empty id")]
    EmptyId,
    #[error("duplicate vocabulary entity id {0:?}")]
    DuplicateEntity(String),
    #[error("entity {0:?} uses the reserved type \"Literal\"")]
    ReservedType(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    entities: BTreeMap<EntityRef, EntityInfo>,
    predicates: BTreeSet<String>,
    // lowercased name/synonym -> entities
    surface: HashMap<String, BTreeSet<EntityRef>>,
}

fn fold(form: &str) -> String {
    form.trim().to_lowercase()
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_json(text: &str) -> Result<Self, VocabularyError> {
        let file: VocabularyFile = serde_json::from_str(text)?;
        let mut vocab = Vocabulary::new();
        for rec in file.entities {
            vocab.insert(rec)?;
        }
        for p in file.predicates {
            vocab.add_predicate(p);
        }
        Ok(vocab)
    }

    /// Canonical JSON form: entities by id, predicates sorted.
    pub fn to_json(&self) -> String {
        let file = VocabularyFile {
            entities: self
                .entities
                .iter()
                .map(|(id, info)| EntityRecord {
                    id: id.as_str().to_owned(),
                    name: info.name.clone(),
                    ty: info.ty.as_str().to_owned(),
                    synonyms: info.synonyms.clone(),
                })
                .collect(),
            predicates: self.predicates.iter().cloned().collect(),
        };
        serde_json::to_string_pretty(&file).expect("vocabulary serializes")
    }

    pub fn insert(&mut self, rec: EntityRecord) -> Result<(), VocabularyError> {
        if rec.id.is_empty() {
            return Err(VocabularyError::EmptyId);
        }
        if rec.ty == crate::model::LITERAL_TYPE {
            return Err(VocabularyError::ReservedType(rec.id));
        }
        let id = EntityRef::new(rec.id.clone());
        if self.entities.contains_key(&id) {
            return Err(VocabularyError::DuplicateEntity(rec.id));
        }
        for form in std::iter::once(&rec.name).chain(&rec.synonyms) {
            let key = fold(form);
            if !key.is_empty() {
                self.surface.entry(key).or_default().insert(id.clone());
            }
        }
        self.entities.insert(
            id,
            EntityInfo {
                name: rec.name,
                ty: EntityType::new(rec.ty),
                synonyms: rec.synonyms,
            },
        );
        Ok(())
    }

    pub fn add_predicate(&mut self, p: impl Into<String>) {
        self.predicates.insert(p.into());
    }

    pub fn entity(&self, id: &EntityRef) -> Option<&EntityInfo> {
        self.entities.get(id)
    }

    pub fn contains(&self, id: &EntityRef) -> bool {
        self.entities.contains_key(id)
    }

    pub fn entity_type(&self, id: &EntityRef) -> Option<&EntityType> {
        self.entities.get(id).map(|e| &e.ty)
    }

    pub fn entities(&self) -> impl Iterator<Item = (&EntityRef, &EntityInfo)> {
        self.entities.iter()
    }

    pub fn has_predicate(&self, p: &str) -> bool {
        self.predicates.contains(p)
    }

    pub fn predicates(&self) -> impl Iterator<Item = &str> {
        self.predicates.iter().map(String::as_str)
    }

    /// Display name for an entity; the raw id when unknown or unnamed.
    pub fn display_name<'a>(&'a self, id: &'a EntityRef) -> &'a str {
        match self.entities.get(id) {
            Some(info) if !info.name.trim().is_empty() => &info.name,
            _ => id.as_str(),
        }
    }

    /// All entities whose name or a synonym equals `form`, ignoring case.
    pub fn resolve_surface(&self, form: &str) -> Vec<EntityRef> {
        self.surface
            .get(&fold(form))
            .map(|ids| ids.iter().cloned().collect())
            .unwrap_or_default()
    }

    /// Case-insensitive prefix search over names and synonyms, optionally
    /// restricted to one type. Results are ordered by name (ignoring case), then id.
    pub fn search(&self, query: &str, ty: Option<&str>, limit: usize) -> Vec<(&EntityRef, &EntityInfo)> {
        let q = fold(query);
        let mut hits: Vec<_> = self
            .entities
            .iter()
            .filter(|(_, info)| ty.is_none_or(|t| info.ty.as_str() == t))
            .filter(|(_, info)| {
                std::iter::once(&info.name)
                    .chain(&info.synonyms)
                    .any(|form| fold(form).starts_with(&q))
            })
            .collect();
        hits.sort_by(|a, b| {
            fold(&a.1.name)
                .cmp(&fold(&b.1.name))
                .then_with(|| a.1.name.cmp(&b.1.name))
                .then_with(|| a.0.cmp(b.0))
        });
        hits.truncate(limit);
        hits
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, name: &str, ty: &str, syn: &[&str]) -> EntityRecord {
        EntityRecord {
            id: id.into(),
            name: name.into(),
            ty: ty.into(),
            synonyms: syn.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn resolves_synonym_case_insensitively() {
        let mut v = Vocabulary::new();
        v.insert(rec("D020225", "Cerebral Venous Sinus Thrombosis", "Disease", &["CVST"]))
            .unwrap();
        assert_eq!(v.resolve_surface("CVST"), vec![EntityRef::new("D020225")]);
        assert_eq!(v.resolve_surface("  cerebral venous sinus THROMBOSIS "), vec![EntityRef::new("D020225")]);
        assert!(v.resolve_surface("zzz-unknown").is_empty());
    }

    #[test]
    fn shared_surface_form_returns_every_candidate() {
        let mut v = Vocabulary::new();
        v.insert(rec("e1", "Mercury", "Planet", &["MSG"])).unwrap();
        v.insert(rec("e2", "Monosodium glutamate", "Chemical", &["msg"])).unwrap();
        v.insert(rec("e3", "Other", "Chemical", &[])).unwrap();

        // Oracle: direct scan over every name and synonym.
        let expected: Vec<EntityRef> = v
            .entities()
            .filter(|(_, info)| {
                std::iter::once(&info.name)
                    .chain(&info.synonyms)
                    .any(|s| s.eq_ignore_ascii_case("Msg"))
            })
            .map(|(id, _)| id.clone())
            .collect();
        assert_eq!(expected.len(), 2);
        assert_eq!(v.resolve_surface("Msg"), expected);
    }

    #[test]
    fn rejects_duplicates_and_reserved_type() {
        let mut v = Vocabulary::new();
        v.insert(rec("a", "A", "T", &[])).unwrap();
        assert!(matches!(v.insert(rec("a", "B", "T", &[])), Err(VocabularyError::DuplicateEntity(_))));
        assert!(matches!(v.insert(rec("", "B", "T", &[])), Err(VocabularyError::EmptyId)));
        assert!(matches!(v.insert(rec("l", "L", "Literal", &[])), Err(VocabularyError::ReservedType(_))));
    }

    #[test]
    fn json_rejects_unknown_keys() {
        assert!(Vocabulary::from_json(r#"{"entities": [], "predicates": [], "extra": 1}"#).is_err());
        assert!(Vocabulary::from_json(
            r#"{"entities": [{"id": "a", "name": "A", "type": "T", "synonyms": [], "x": 1}], "predicates": []}"#
        )
        .is_err());
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"entities": [{"id": "b", "name": "Bee", "type": "T", "synonyms": ["b1"]},
                                     {"id": "a", "name": "", "type": "U", "synonyms": []}],
                       "predicates": ["q", "p"]}"#;
        let v = Vocabulary::from_json(text).unwrap();
        assert_eq!(Vocabulary::from_json(&v.to_json()).unwrap(), v);
        assert_eq!(v.display_name(&EntityRef::new("a")), "a");
        assert_eq!(v.display_name(&EntityRef::new("b")), "Bee");
        assert_eq!(v.display_name(&EntityRef::new("zz")), "zz");
    }

    #[test]
    fn search_by_prefix_and_type() {
        let mut v = Vocabulary::new();
        v.insert(rec("v1", "ChAdOx1 nCov-19", "Vaccine", &["Astra Zeneca"])).unwrap();
        v.insert(rec("d1", "CVST", "Disease", &[])).unwrap();
        v.insert(rec("d2", "Covid 19", "Disease", &["SARS-CoV-2 infection"])).unwrap();
        let names = |hits: Vec<(&EntityRef, &EntityInfo)>| hits.into_iter().map(|(id, _)| id.to_string()).collect::<Vec<_>>();
        assert_eq!(names(v.search("chad", None, 50)), ["v1"]);
        assert_eq!(names(v.search("astra", None, 50)), ["v1"]);
        assert_eq!(names(v.search("c", Some("Disease"), 50)), ["d2", "d1"]);
        assert!(v.search("zzz", None, 50).is_empty());
    }
}
