//! Question phrasings, per relation. Every relation carries at least two
//! phrasings so a question can be re-asked in different words.

use super::Relation;
use crate::error::{Error, Result};

pub const ENTITY_SLOT: &str = "{E}";
pub const YEAR_SLOT: &str = "{Y}";

pub fn templates(relation: Relation) -> &'static [&'static str] {
    match relation {
        Relation::Position => &[
            "What position did {E} hold in {Y}?",
            "{E} took which position in {Y}?",
            "What position was held by {E} in {Y}?",
        ],
        Relation::Team => &[
            "Which team did {E} play for in {Y}?",
            "Which team did the player {E} belong to in {Y}?",
            "{E} played for which team in {Y}?",
        ],
        Relation::Employer => &[
            "Which employer did {E} work for in {Y}?",
            "{E} was an employee for whom in {Y}?",
            "Who was the employer of {E} in {Y}?",
        ],
        Relation::Residence => &["What was the residence of {E} in {Y}?", "Where did {E} live in {Y}?"],
        Relation::Title => &["Which title was conferred to {E} in {Y}?", "What title did {E} hold in {Y}?"],
    }
}

pub fn realize(relation: Relation, template_id: usize, entity: &str, year: i32) -> Result<String> {
    let t = templates(relation)
        .get(template_id)
        .ok_or(Error::UnknownTemplate { relation: relation.as_str().to_string(), template_id })?;
    Ok(t.replace(ENTITY_SLOT, entity).replace(YEAR_SLOT, &year.to_string()))
}

/// Recover which built-in phrasing produced `text`, if any.
pub fn match_template(text: &str, entity: &str, year: i32) -> Option<(Relation, usize)> {
    Relation::ALL.iter().find_map(|&rel| {
        (0..templates(rel).len())
            .find(|&id| realize(rel, id, entity, year).is_ok_and(|s| s == text))
            .map(|id| (rel, id))
    })
}
