//! Seeded synthetic corpus generation.
//!
//! Contexts are short biographies: a birth sentence followed by a timeline of
//! consecutive facts about one relation, each realised in one of the four
//! surface forms. Questions are then drawn per (subset, type) slot, which
//! balances the subsets and meets the type mix exactly.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::templates::{self, templates as phrasings};
use super::{
    assign_subset, Context, Corpus, CorpusSpec, Question, QuestionType, Relation, Split, SurfaceForm, TimelineFact,
};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};
use crate::temporal_text::TimeRange;

const POOL_SIZE: usize = 48;

const SYLLABLES_A: &[&str] = &[
    "Var", "Tor", "Bel", "Ash", "Cor", "Del", "Fen", "Gal", "Hal", "Ist", "Kel", "Lun", "Mor", "Nor", "Ost", "Pel",
    "Ros", "Sel", "Tam", "Vel", "Wen", "Yar", "Zan", "Brev", "Cal",
];
const SYLLABLES_B: &[&str] = &[
    "an", "ber", "cast", "dor", "el", "ford", "gate", "holm", "ira", "kin", "ley", "mont", "nar", "ova", "port",
    "quin", "rith", "sby", "ton", "ula", "vik", "wick",
];
const GIVEN: &[&str] = &[
    "Ada", "Bram", "Cora", "Dario", "Elin", "Fabian", "Greta", "Hugo", "Ines", "Jonas", "Katya", "Lior", "Mara",
    "Nils", "Orla", "Pavel", "Quinn", "Rhea", "Soren", "Talia", "Ugo", "Vera", "Wim", "Xenia", "Yusuf", "Zora",
];
const OFFICES: &[&str] = &[
    "Lord Advocate",
    "Chancellor",
    "Governor",
    "Treasurer",
    "Chief Justice",
    "Secretary of State",
    "Mayor",
    "Ambassador",
    "Speaker",
    "Minister of Trade",
    "Senator",
    "Prefect",
];
const MASCOTS: &[&str] = &[
    "Wolves",
    "Rovers",
    "United",
    "Knights",
    "Falcons",
    "Rangers",
    "Athletic",
    "Wanderers",
    "Harriers",
    "Dragons",
    "Comets",
    "Titans",
];
const EMPLOYER_KINDS: &[&str] = &[
    "University of {P}",
    "{P} Institute",
    "{P} Works",
    "{P} Bank",
    "{P} College of the Arts",
    "{P} Railway Company",
    "{P} Observatory",
    "{P} Trading House",
];
const RANKS: &[&str] = &["Grandmaster", "Duke", "Earl", "Baron", "Laureate", "Champion", "Marshal", "Knight Commander"];
const NATIONS: &[&str] = &["Norvalian", "Estrian", "Calderish", "Ombrean", "Veskan", "Talorian"];
const FILLERS: &[&str] = &[
    "{E} gained wide recognition for this work.",
    "Colleagues described {E} as diligent and reserved.",
    "The period was marked by considerable public attention.",
    "{E} was often mentioned in the press during these years.",
];

struct Phrases {
    start: &'static str,
    end: &'static str,
    was: &'static str,
    perfect: &'static str,
    profession: &'static str,
}

fn phrases(rel: Relation) -> Phrases {
    match rel {
        Relation::Position => Phrases {
            start: "was appointed",
            end: "stepped down as",
            was: "served as",
            perfect: "has served as",
            profession: "politician",
        },
        Relation::Team => Phrases {
            start: "signed for",
            end: "left",
            was: "played for",
            perfect: "has played for",
            profession: "footballer",
        },
        Relation::Employer => Phrases {
            start: "joined",
            end: "left",
            was: "worked for",
            perfect: "has worked for",
            profession: "scientist",
        },
        Relation::Residence => Phrases {
            start: "moved to",
            end: "moved away from",
            was: "lived in",
            perfect: "has lived in",
            profession: "writer",
        },
        Relation::Title => Phrases {
            start: "was awarded the title of",
            end: "relinquished the title of",
            was: "held the title of",
            perfect: "has held the title of",
            profession: "chess player",
        },
    }
}

const NUMBER_WORDS: [&str; 21] = [
    "zero",
    "one",
    "two",
    "three",
    "four",
    "five",
    "six",
    "seven",
    "eight",
    "nine",
    "ten",
    "eleven",
    "twelve",
    "thirteen",
    "fourteen",
    "fifteen",
    "sixteen",
    "seventeen",
    "eighteen",
    "nineteen",
    "twenty",
];

struct Pools {
    places: Vec<String>,
    values: Vec<Vec<String>>,
}

impl Pools {
    fn new(rng: &mut StreamRng) -> Self {
        let mut places = HashSet::new();
        let mut place_list = Vec::new();
        while place_list.len() < 40 {
            let p = format!("{}{}", SYLLABLES_A.choose(rng).unwrap(), SYLLABLES_B.choose(rng).unwrap());
            if places.insert(p.clone()) {
                place_list.push(p);
            }
        }
        let values = Relation::ALL
            .iter()
            .map(|&rel| {
                let mut seen = HashSet::new();
                let mut out = Vec::new();
                let mut attempts = 0;
                while out.len() < POOL_SIZE && attempts < 10_000 {
                    attempts += 1;
                    let place = place_list.choose(rng).unwrap();
                    let v = match rel {
                        Relation::Position => {
                            format!("{} of {}", OFFICES.choose(rng).unwrap(), place)
                        }
                        Relation::Team => format!("{} {}", place, MASCOTS.choose(rng).unwrap()),
                        Relation::Employer => EMPLOYER_KINDS.choose(rng).unwrap().replace("{P}", place),
                        Relation::Residence => place.clone(),
                        Relation::Title => format!("{} of {}", RANKS.choose(rng).unwrap(), place),
                    };
                    if seen.insert(v.clone()) {
                        out.push(v);
                    }
                }
                out
            })
            .collect();
        Pools { places: place_list, values }
    }

    fn pool(&self, rel: Relation) -> &[String] {
        &self.values[Relation::ALL.iter().position(|r| *r == rel).unwrap()]
    }
}

fn weighted_index(rng: &mut StreamRng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return rng.gen_range(0..weights.len());
    }
    let mut x = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap()
}

/// Largest-remainder apportionment of `n` items over `weights`.
pub(crate) fn apportion(weights: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut rest = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        counts[i] += 1;
        rest -= 1;
    }
    counts
}

fn pick_values(rng: &mut StreamRng, pool: &[String], n: usize) -> Vec<String> {
    let mut chosen: Vec<String> = Vec::with_capacity(n);
    let mut guard = 0;
    while chosen.len() < n && guard < 10_000 {
        guard += 1;
        let v = pool.choose(rng).unwrap();
        if chosen.iter().any(|c| c.contains(v.as_str()) || v.contains(c.as_str())) {
            continue;
        }
        chosen.push(v.clone());
    }
    chosen
}

struct FactPlan {
    valid: TimeRange,
    form: SurfaceForm,
    value: String,
}

fn plan_timeline(rng: &mut StreamRng, spec: &CorpusSpec, home: usize, pool: &[String]) -> (i32, Vec<FactPlan>) {
    let now = spec.now_year;
    let b = spec.boundaries[home];
    let lo = b.start;
    let hi = b.end_or(now).min(now);
    let last_subset = home + 1 == spec.k();
    let start = if !last_subset && rng.gen_bool(0.8) {
        rng.gen_range((hi - 40).max(lo)..=(hi - 2).max(lo))
    } else if last_subset {
        rng.gen_range(lo..=(now - 4).max(lo))
    } else {
        rng.gen_range(lo..=(hi - 2).max(lo))
    };

    let mp = spec.max_paragraphs >= 2;
    let mix = &spec.type_mix;
    let weights = [mix[0], mix[1], mix[2], if mp { mix[3] } else { 0.0 }];
    let n_facts = rng.gen_range(2..=5usize);
    let values = pick_values(rng, pool, n_facts);

    let mut facts = Vec::new();
    let mut cur = start;
    for value in values {
        if cur > now {
            break;
        }
        let mut form = SurfaceForm::ALL[weighted_index(rng, &weights)];
        let len = match form {
            SurfaceForm::ExplicitYear => rng.gen_range(0..=2),
            _ => rng.gen_range(2..=12),
        };
        let end = cur + len;
        let valid = if end >= now && form != SurfaceForm::ExplicitYear {
            form = SurfaceForm::DurationCommonsense;
            TimeRange::open(cur)
        } else {
            TimeRange { start: cur, end: Some(end.min(now)) }
        };
        let open = valid.end.is_none();
        facts.push(FactPlan { valid, form, value });
        if open {
            break;
        }
        let gap = if rng.gen_bool(0.7) { 0 } else { rng.gen_range(1..=4) };
        cur = valid.end.unwrap() + 1 + gap;
    }
    let birth = start - rng.gen_range(18..=35);
    (birth, facts)
}

fn entity_name(rng: &mut StreamRng, used: &mut HashSet<String>) -> String {
    loop {
        let name = format!(
            "{} {}{}",
            GIVEN.choose(rng).unwrap(),
            SYLLABLES_A.choose(rng).unwrap(),
            SYLLABLES_B.choose(rng).unwrap()
        );
        if used.insert(name.clone()) {
            return name;
        }
        // fall back to a middle name once the plain space is crowded
        let name = format!(
            "{} {} {}{}",
            GIVEN.choose(rng).unwrap(),
            GIVEN.choose(rng).unwrap(),
            SYLLABLES_A.choose(rng).unwrap(),
            SYLLABLES_B.choose(rng).unwrap()
        );
        if used.insert(name.clone()) {
            return name;
        }
    }
}

fn build_context(
    rng: &mut StreamRng,
    spec: &CorpusSpec,
    pools: &Pools,
    idx: usize,
    used_names: &mut HashSet<String>,
) -> Context {
    let relation = *Relation::ALL.choose(rng).unwrap();
    let home = idx % spec.k();
    let (birth, plans) = plan_timeline(rng, spec, home, pools.pool(relation));
    let entity = entity_name(rng, used_names);
    let ph = phrases(relation);
    let max_p = spec.max_paragraphs;

    let mut paragraphs: Vec<Vec<String>> = vec![vec![
        format!("{entity} was born in {birth}."),
        format!("{entity} is a {} {}.", NATIONS.choose(rng).unwrap(), ph.profession),
    ]];
    let ensure = |paragraphs: &mut Vec<Vec<String>>, p: usize| {
        while paragraphs.len() <= p {
            paragraphs.push(Vec::new());
        }
    };

    let mut facts = Vec::new();
    for (j, plan) in plans.into_iter().enumerate() {
        let p = if max_p == 1 { 0 } else { (1 + j / 2).min(max_p - 1) };
        ensure(&mut paragraphs, p);
        let v = &plan.value;
        let s = plan.valid.start;
        let mut form = plan.form;
        if form == SurfaceForm::SplitAcrossParagraphs && p + 1 >= max_p {
            form = SurfaceForm::SplitAcrossSentences;
        }
        match (form, plan.valid.end) {
            (SurfaceForm::ExplicitYear, Some(e)) => {
                let years = match e - s {
                    0 => format!("{s}"),
                    1 => format!("{s} and {e}"),
                    _ => format!("{s}, {} and {e}", s + 1),
                };
                paragraphs[p].push(format!("{entity} {} {v} in {years}.", ph.was));
            }
            (_, None) => {
                form = SurfaceForm::DurationCommonsense;
                paragraphs[p].push(format!("{entity} {} {v} since {s}.", ph.perfect));
            }
            (SurfaceForm::DurationCommonsense, Some(e)) => {
                let text = match rng.gen_range(0..3) {
                    0 => {
                        let n = e - s;
                        let n_txt = if n <= 20 && rng.gen_bool(0.5) {
                            NUMBER_WORDS[n as usize].to_string()
                        } else {
                            n.to_string()
                        };
                        format!("In {s}, {entity} {} {v} for the next {n_txt} years.", ph.start)
                    }
                    1 => format!("{entity} {} {v} from {s} to {e}.", ph.was),
                    _ => format!("{entity} {} {v} ({s}\u{2013}{e}).", ph.was),
                };
                paragraphs[p].push(text);
            }
            (SurfaceForm::SplitAcrossSentences, Some(e)) => {
                paragraphs[p].push(format!("In {s}, {entity} {} {v}.", ph.start));
                if rng.gen_bool(0.6) {
                    paragraphs[p].push(FILLERS.choose(rng).unwrap().replace("{E}", &entity));
                }
                paragraphs[p].push(format!("In {e}, {entity} {} {v}.", ph.end));
            }
            (SurfaceForm::SplitAcrossParagraphs, Some(e)) => {
                ensure(&mut paragraphs, p + 1);
                let age_s = s - birth;
                let age_e = e - birth;
                if age_e < 100 && rng.gen_bool(0.5) {
                    paragraphs[p].push(format!("At the age of {age_s}, {entity} {} {v}.", ph.start));
                    paragraphs[p + 1].push(format!("At the age of {age_e}, {entity} {} {v}.", ph.end));
                } else {
                    paragraphs[p].push(format!("In {s}, {entity} {} {v}.", ph.start));
                    paragraphs[p + 1].push(format!("In {e}, {entity} {} {v}.", ph.end));
                }
            }
        }
        facts.push(TimelineFact {
            relation,
            value: plan.value,
            valid: plan.valid,
            paragraph_index: p,
            surface_form: form,
        });
    }

    // keep paragraph indices valid if a trailing paragraph stayed empty
    let paragraphs: Vec<String> = paragraphs
        .into_iter()
        .map(|sents| {
            if sents.is_empty() {
                format!("Little else is recorded about {entity} from this time.")
            } else {
                sents.join(" ")
            }
        })
        .collect();

    Context { context_id: format!("c{idx:05}"), entity, paragraphs, facts }
}

/// Build one question about `fact` anchored at `anchor`.
///
/// The question is answerable (typed by the fact's surface form) when the
/// anchor falls inside the fact's validity, and unanswerable otherwise. An
/// anchor outside `fact` but covered by a sibling fact is an error.
pub fn generate_question(
    ctx: &Context,
    fact: &TimelineFact,
    anchor: i32,
    template_id: usize,
    question_id: impl Into<String>,
    boundaries: &[TimeRange],
) -> Result<Question> {
    let text = templates::realize(fact.relation, template_id, &ctx.entity, anchor)?;
    let (qtype, answer) = if fact.valid.contains(anchor) {
        (QuestionType::for_surface(fact.surface_form), fact.value.clone())
    } else {
        let covering = ctx.answer_at(fact.relation, anchor);
        if !covering.is_empty() {
            return Err(Error::validation(format!(
                "anchor {anchor} lies outside '{}' but is covered by '{covering}'",
                fact.value
            )));
        }
        (QuestionType::Unanswerable, String::new())
    };
    Ok(Question {
        question_id: question_id.into(),
        context_id: ctx.context_id.clone(),
        text,
        anchor_year: anchor,
        qtype,
        answer,
        subset: assign_subset(anchor, boundaries),
        split: Split::Train,
    })
}

struct SlotEntry {
    ctx: usize,
    fact: usize,
    years: Vec<i32>,
}

fn build_slot_index(spec: &CorpusSpec, contexts: &[Context]) -> Vec<[Vec<SlotEntry>; 5]> {
    let now = spec.now_year;
    let earliest = spec.earliest_year();
    spec.boundaries
        .iter()
        .map(|b| {
            let lo = b.start;
            let hi = b.end_or(now).min(now);
            let mut slots: [Vec<SlotEntry>; 5] = Default::default();
            for (ci, ctx) in contexts.iter().enumerate() {
                for (fi, f) in ctx.facts.iter().enumerate() {
                    let s = f.valid.start.max(lo);
                    let e = f.valid.end_or(now).min(hi);
                    if s <= e {
                        let t = QuestionType::for_surface(f.surface_form).index();
                        slots[t].push(SlotEntry { ctx: ci, fact: fi, years: (s..=e).collect() });
                    }
                }
                let (Some(first), Some(last)) = (ctx.facts.first(), ctx.facts.last()) else {
                    continue;
                };
                let w_lo = (first.valid.start - 15).max(lo).max(earliest);
                let w_hi = (last.valid.end_or(now) + 15).min(hi);
                let years: Vec<i32> = (w_lo..=w_hi).filter(|&y| ctx.answer_at(first.relation, y).is_empty()).collect();
                if !years.is_empty() {
                    slots[QuestionType::Unanswerable.index()].push(SlotEntry { ctx: ci, fact: 0, years });
                }
            }
            slots
        })
        .collect()
}

pub fn synthesize_corpus(spec: &CorpusSpec) -> Result<Corpus> {
    spec.validate()?;
    let mp_share = spec.type_mix[QuestionType::MultiParagraph.index()];
    if mp_share > 0.0 && spec.max_paragraphs < 2 {
        return Err(Error::Infeasible(format!(
            "type_mix asks for {:.1}% multi_paragraph questions but max_paragraphs = {}",
            mp_share * 100.0,
            spec.max_paragraphs
        )));
    }

    let mut rng = rng::stream(spec.seed, rng::CORPUS, &[]);
    let pools = Pools::new(&mut rng);
    debug_assert!(!pools.places.is_empty());
    let mut used_names = HashSet::new();
    let contexts: Vec<Context> =
        (0..spec.n_contexts).map(|i| build_context(&mut rng, spec, &pools, i, &mut used_names)).collect();

    let k = spec.k();
    let n = spec.n_questions;
    let index = build_slot_index(spec, &contexts);

    let type_counts = apportion(&spec.type_mix, n);
    let mut types: Vec<QuestionType> =
        type_counts.iter().enumerate().flat_map(|(t, &c)| std::iter::repeat_n(QuestionType::ALL[t], c)).collect();
    types.shuffle(&mut rng);

    let mut per_subset_splits: Vec<Vec<Split>> = (0..k)
        .map(|s| {
            let n_s = n / k + usize::from(s < n % k);
            let counts = apportion(&spec.split_mix, n_s);
            let mut v: Vec<Split> =
                counts.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(Split::ALL[i], c)).collect();
            v.shuffle(&mut rng);
            v.reverse();
            v
        })
        .collect();

    let mut seen: HashSet<(usize, i32, usize)> = HashSet::new();
    let mut questions = Vec::with_capacity(n);
    for (i, qtype) in types.into_iter().enumerate() {
        let subset = i % k;
        let entries = &index[subset][qtype.index()];
        if entries.is_empty() {
            return Err(Error::Infeasible(format!(
                "no context can host a {qtype} question in subset {} ({}); raise n_contexts or adjust type_mix",
                subset + 1,
                spec.boundaries[subset]
            )));
        }
        let mut pick = None;
        for _ in 0..20 {
            let entry = entries.choose(&mut rng).unwrap();
            let year = *entry.years.choose(&mut rng).unwrap();
            let rel = contexts[entry.ctx].facts[entry.fact].relation;
            let template = rng.gen_range(0..phrasings(rel).len());
            let key = (entry.ctx, year, template);
            pick = Some((entry, year, template));
            if seen.insert(key) {
                break;
            }
        }
        let (entry, year, template) = pick.unwrap();
        let ctx = &contexts[entry.ctx];
        let mut q =
            generate_question(ctx, &ctx.facts[entry.fact], year, template, format!("q{i:06}"), &spec.boundaries)?;
        debug_assert_eq!(q.qtype, qtype);
        debug_assert_eq!(q.subset, subset + 1);
        q.split = per_subset_splits[subset].pop().expect("split quota");
        questions.push(q);
    }

    let mut corpus = Corpus { contexts, questions };
    corpus.sort();
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::default_boundaries;
    use crate::temporal_text::{extract_years, parse_range, year_in_range};

    fn small_spec(seed: u64) -> CorpusSpec {
        CorpusSpec { n_contexts: 80, n_questions: 600, seed, ..CorpusSpec::default() }
    }

    fn fact(value: &str, s: i32, e: i32, form: SurfaceForm, p: usize) -> TimelineFact {
        TimelineFact {
            relation: Relation::Position,
            value: value.into(),
            valid: TimeRange { start: s, end: Some(e) },
            paragraph_index: p,
            surface_form: form,
        }
    }

    #[test]
    fn apportion_is_exact() {
        assert_eq!(apportion(&[0.5, 0.5], 3), vec![2, 1]);
        assert_eq!(apportion(&[0.7, 0.15, 0.15], 100), vec![70, 15, 15]);
        assert_eq!(apportion(&[1.0, 0.0], 0), vec![0, 0]);
        let c = apportion(&CorpusSpec::default().type_mix, 1000);
        assert_eq!(c.iter().sum::<usize>(), 1000);
    }

    #[test]
    fn lord_advocate_question() {
        let ctx = Context {
            context_id: "c1".into(),
            entity: "Henry Dundas, 1st Viscount Melville".into(),
            paragraphs: vec![
                "He was appointed Lord Advocate in 1775.".into(),
                "In 1791, he left Lord Advocate.".into(),
            ],
            facts: vec![fact("Lord Advocate", 1775, 1791, SurfaceForm::SplitAcrossParagraphs, 0)],
        };
        let q = generate_question(&ctx, &ctx.facts[0], 1776, 0, "q1", &default_boundaries()).unwrap();
        assert_eq!(q.text, "What position did Henry Dundas, 1st Viscount Melville hold in 1776?");
        assert_eq!(q.answer, "Lord Advocate");
        assert_eq!(q.qtype, QuestionType::MultiParagraph);
        assert_eq!(q.subset, 1);

        let out = generate_question(&ctx, &ctx.facts[0], 1700, 2, "q2", &default_boundaries()).unwrap();
        assert_eq!(out.answer, "");
        assert_eq!(out.qtype, QuestionType::Unanswerable);
        assert!(generate_question(&ctx, &ctx.facts[0], 1776, 7, "q3", &default_boundaries()).is_err());
    }

    #[test]
    fn commonsense_team_question() {
        let ctx = Context {
            context_id: "c2".into(),
            entity: "Eoin Morgan".into(),
            paragraphs: vec![
                "He was purchased by the Kolkata Knight Riders at the 2011 IPL auctions for the next 3 years.".into(),
            ],
            facts: vec![TimelineFact {
                relation: Relation::Team,
                value: "Kolkata Knight Riders".into(),
                valid: TimeRange { start: 2011, end: Some(2014) },
                paragraph_index: 0,
                surface_form: SurfaceForm::DurationCommonsense,
            }],
        };
        let q = generate_question(&ctx, &ctx.facts[0], 2012, 1, "q1", &default_boundaries()).unwrap();
        assert_eq!(q.text, "Which team did the player Eoin Morgan belong to in 2012?");
        assert_eq!(q.qtype, QuestionType::Commonsense);
        assert_eq!(q.answer, "Kolkata Knight Riders");
        assert_eq!(parse_range(&ctx.paragraphs[0]), Some(ctx.facts[0].valid));
    }

    #[test]
    fn sibling_coverage_is_rejected() {
        let ctx = Context {
            context_id: "c3".into(),
            entity: "Ada Verin".into(),
            paragraphs: vec!["Ada Verin served as Mayor of X in 2000. Ada Verin served as Senator of Y in 2001.".into()],
            facts: vec![
                fact("Mayor of X", 2000, 2000, SurfaceForm::ExplicitYear, 0),
                fact("Senator of Y", 2001, 2001, SurfaceForm::ExplicitYear, 0),
            ],
        };
        assert!(generate_question(&ctx, &ctx.facts[0], 2001, 0, "q", &default_boundaries()).is_err());
    }

    #[test]
    fn deterministic_and_sound() {
        let a = synthesize_corpus(&small_spec(3)).unwrap();
        let b = synthesize_corpus(&small_spec(3)).unwrap();
        assert_eq!(a, b);
        let c = synthesize_corpus(&small_spec(4)).unwrap();
        assert_ne!(a, c);
        for q in &a.questions {
            let ctx = a.context(&q.context_id).unwrap();
            let rel = ctx.facts[0].relation;
            let covering: Vec<&TimelineFact> =
                ctx.facts.iter().filter(|f| f.relation == rel && year_in_range(q.anchor_year, &f.valid)).collect();
            assert!(covering.len() <= 1);
            match covering.first() {
                Some(f) => assert_eq!(q.answer, f.value),
                None => {
                    assert_eq!(q.answer, "");
                    assert_eq!(q.qtype, QuestionType::Unanswerable);
                }
            }
            assert!(extract_years(&q.text).iter().any(|m| m.value == q.anchor_year));
            assert_eq!(q.subset, assign_subset(q.anchor_year, &default_boundaries()));
        }
    }

    #[test]
    fn facts_are_realised_in_their_paragraph() {
        let corpus = synthesize_corpus(&small_spec(9)).unwrap();
        for ctx in &corpus.contexts {
            for f in &ctx.facts {
                assert!(ctx.paragraphs[f.paragraph_index].contains(&f.value), "{}", f.value);
                if matches!(f.surface_form, SurfaceForm::DurationCommonsense) {
                    let sentence =
                        ctx.paragraphs[f.paragraph_index].split(". ").find(|s| s.contains(&f.value)).unwrap();
                    assert_eq!(parse_range(sentence), Some(f.valid), "{sentence}");
                }
            }
            for w in ctx.facts.windows(2) {
                assert!(!w[0].valid.overlaps(&w[1].valid));
            }
        }
    }

    #[test]
    fn empty_question_budget() {
        let corpus = synthesize_corpus(&CorpusSpec { n_questions: 0, n_contexts: 5, ..CorpusSpec::default() }).unwrap();
        assert!(corpus.questions.is_empty());
        assert_eq!(corpus.contexts.len(), 5);
    }

    #[test]
    fn single_paragraph_contexts_cannot_host_multi_paragraph() {
        let spec = CorpusSpec { max_paragraphs: 1, ..small_spec(1) };
        match synthesize_corpus(&spec) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("multi_paragraph"), "{msg}"),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn too_few_contexts_is_infeasible() {
        let spec = CorpusSpec { n_contexts: 1, n_questions: 50, ..CorpusSpec::default() };
        assert!(matches!(synthesize_corpus(&spec), Err(Error::Infeasible(_))));
    }
}
