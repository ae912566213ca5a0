//! Answer-string metrics: exact match and token-overlap F1.
//!
//! Both use answer normalisation (lowercase, punctuation stripped, articles
//! dropped, whitespace collapsed). Two empty answers count as a correct
//! abstention on an unanswerable question.

use std::collections::HashMap;

pub fn normalize_answer(s: &str) -> String {
    let lower = s.to_lowercase();
    let no_punct: String = lower.chars().filter(|c| c.is_alphanumeric() || c.is_whitespace()).collect();
    no_punct.split_whitespace().filter(|w| !matches!(*w, "a" | "an" | "the")).collect::<Vec<_>>().join(" ")
}

pub fn exact_match(pred: &str, gold: &str) -> f64 {
    if normalize_answer(pred) == normalize_answer(gold) {
        1.0
    } else {
        0.0
    }
}

pub fn token_f1(pred: &str, gold: &str) -> f64 {
    let p = normalize_answer(pred);
    let g = normalize_answer(gold);
    let p_toks: Vec<&str> = p.split_whitespace().collect();
    let g_toks: Vec<&str> = g.split_whitespace().collect();
    match (p_toks.is_empty(), g_toks.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &g_toks {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &p_toks {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    // 2PR/(P+R) simplifies to 2c/(|pred|+|gold|).
    (2 * common) as f64 / (p_toks.len() + g_toks.len()) as f64
}

/// Which per-sample metric ranks replay candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardnessMetric {
    F1,
    Em,
}

impl std::str::FromStr for HardnessMetric {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "f1" => Ok(HardnessMetric::F1),
            "em" => Ok(HardnessMetric::Em),
            other => Err(crate::Error::validation(format!("unknown hardness metric '{other}' (f1 or em)"))),
        }
    }
}

impl HardnessMetric {
    pub fn score(self, pred: &str, gold: &str) -> f64 {
        match self {
            HardnessMetric::F1 => token_f1(pred, gold),
            HardnessMetric::Em => exact_match(pred, gold),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_match_cases() {
        assert_eq!(exact_match("lord advocate", "Lord Advocate"), 1.0);
        assert_eq!(exact_match("", ""), 1.0);
        assert_eq!(exact_match("Sydney United", "South Coast Wolves"), 0.0);
        assert_eq!(exact_match("The Lord Advocate.", "lord  advocate"), 1.0);
    }

    #[test]
    fn f1_cases() {
        assert_eq!(token_f1("Royal Challengers Bangalore", "Royal Challengers Bangalore"), 1.0);
        assert_eq!(token_f1("University Hall", "St Andrews University"), 0.4);
        assert_eq!(token_f1("", "Royal Challengers Bangalore"), 0.0);
        assert_eq!(token_f1("Royal", ""), 0.0);
        assert_eq!(token_f1("the", ""), 1.0);
        assert_eq!(token_f1("a b c", "x y"), 0.0);
    }

    #[test]
    fn normalisation() {
        assert_eq!(normalize_answer("  The  Kolkata-Knight Riders! "), "kolkataknight riders");
        assert_eq!(normalize_answer("An apple a day"), "apple day");
    }
}
