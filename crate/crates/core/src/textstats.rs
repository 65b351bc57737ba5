//! Non-LLM baseline features: 29 surface statistics computed from the
//! prompt-response pair with small, auditable lexicons shipped as assets
//! (one term per line, `#` comments). Tokenization is Unicode word
//! segmentation; sentences split on `.`, `!`, `?` boundaries.
//!
//! The feature list is frozen here as the canonical definition and versioned
//! with the crate; every category gets a named field, no hidden features.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::dataset::AnnotatedSample;

/// Ordered names of the 29 features, aligned with `TextStatFeatures::to_vector`.
pub const TEXT_STAT_NAMES: [&str; 29] = [
    "response_char_len",
    "response_word_count",
    "response_sentence_count",
    "avg_word_len",
    "avg_sentence_len",
    "hedge_word_count",
    "hedge_ratio",
    "certainty_word_count",
    "negation_count",
    "modal_verb_count",
    "first_person_count",
    "second_person_count",
    "question_mark_count",
    "exclamation_count",
    "punctuation_ratio",
    "comma_count",
    "colon_semicolon_count",
    "paren_count",
    "quote_count",
    "digit_count",
    "number_token_count",
    "capitalized_token_ratio",
    "unique_word_ratio",
    "stopword_ratio",
    "url_count",
    "prompt_word_count",
    "len_ratio_response_prompt",
    "jaccard_word_overlap",
    "crisis_keyword_count",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextStatFeatures {
    pub response_char_len: f64,
    pub response_word_count: f64,
    pub response_sentence_count: f64,
    pub avg_word_len: f64,
    pub avg_sentence_len: f64,
    pub hedge_word_count: f64,
    pub hedge_ratio: f64,
    pub certainty_word_count: f64,
    pub negation_count: f64,
    pub modal_verb_count: f64,
    pub first_person_count: f64,
    pub second_person_count: f64,
    pub question_mark_count: f64,
    pub exclamation_count: f64,
    pub punctuation_ratio: f64,
    pub comma_count: f64,
    pub colon_semicolon_count: f64,
    pub paren_count: f64,
    pub quote_count: f64,
    pub digit_count: f64,
    pub number_token_count: f64,
    pub capitalized_token_ratio: f64,
    pub unique_word_ratio: f64,
    pub stopword_ratio: f64,
    pub url_count: f64,
    pub prompt_word_count: f64,
    pub len_ratio_response_prompt: f64,
    pub jaccard_word_overlap: f64,
    pub crisis_keyword_count: f64,
}

impl TextStatFeatures {
    /// Values in `TEXT_STAT_NAMES` order.
    pub fn to_vector(&self) -> Vec<f64> {
        vec![
            self.response_char_len,
            self.response_word_count,
            self.response_sentence_count,
            self.avg_word_len,
            self.avg_sentence_len,
            self.hedge_word_count,
            self.hedge_ratio,
            self.certainty_word_count,
            self.negation_count,
            self.modal_verb_count,
            self.first_person_count,
            self.second_person_count,
            self.question_mark_count,
            self.exclamation_count,
            self.punctuation_ratio,
            self.comma_count,
            self.colon_semicolon_count,
            self.paren_count,
            self.quote_count,
            self.digit_count,
            self.number_token_count,
            self.capitalized_token_ratio,
            self.unique_word_ratio,
            self.stopword_ratio,
            self.url_count,
            self.prompt_word_count,
            self.len_ratio_response_prompt,
            self.jaccard_word_overlap,
            self.crisis_keyword_count,
        ]
    }
}

/// A lexicon of single terms and multi-word phrases. Entries are tokenized
/// with the same segmenter as the target text so hyphenated or multi-word
/// entries match consistently.
#[derive(Debug, Clone)]
pub struct Lexicon {
    singles: BTreeSet<String>,
    phrases: Vec<Vec<String>>,
}

impl Lexicon {
    pub fn parse(text: &str) -> Self {
        let mut singles = BTreeSet::new();
        let mut phrases = Vec::new();
        for line in text.lines() {
            let entry = line.trim();
            if entry.is_empty() || entry.starts_with('#') {
                continue;
            }
            let tokens = tokenize_lower(entry);
            match tokens.len() {
                0 => {}
                1 => {
                    singles.insert(tokens.into_iter().next().unwrap());
                }
                _ => phrases.push(tokens),
            }
        }
        Self { singles, phrases }
    }

    /// Count occurrences over a lowercased token stream. Phrases are matched
    /// greedily without overlap, so the total never exceeds the token count.
    pub fn count(&self, tokens: &[String]) -> usize {
        let mut count = 0;
        let mut i = 0;
        'outer: while i < tokens.len() {
            for phrase in &self.phrases {
                if tokens[i..].starts_with(phrase.as_slice()) {
                    count += 1;
                    i += phrase.len();
                    continue 'outer;
                }
            }
            if self.singles.contains(&tokens[i]) {
                count += 1;
            }
            i += 1;
        }
        count
    }
}

/// Built-in lexicons embedded from `assets/lexicons/`.
pub struct Lexicons {
    pub hedges: Lexicon,
    pub certainty: Lexicon,
    pub negation: Lexicon,
    pub modals: Lexicon,
    pub stopwords: Lexicon,
    pub crisis: Lexicon,
}

impl Lexicons {
    pub fn builtin() -> &'static Lexicons {
        static BUILTIN: OnceLock<Lexicons> = OnceLock::new();
        BUILTIN.get_or_init(|| Lexicons {
            hedges: Lexicon::parse(include_str!("../assets/lexicons/hedges.txt")),
            certainty: Lexicon::parse(include_str!("../assets/lexicons/certainty.txt")),
            negation: Lexicon::parse(include_str!("../assets/lexicons/negation.txt")),
            modals: Lexicon::parse(include_str!("../assets/lexicons/modals.txt")),
            stopwords: Lexicon::parse(include_str!("../assets/lexicons/stopwords.txt")),
            crisis: Lexicon::parse(include_str!("../assets/lexicons/crisis.txt")),
        })
    }
}

const FIRST_PERSON: [&str; 10] = [
    "i",
    "me",
    "my",
    "mine",
    "myself",
    "we",
    "us",
    "our",
    "ours",
    "ourselves",
];
const SECOND_PERSON: [&str; 5] = ["you", "your", "yours", "yourself", "yourselves"];

fn tokenize(text: &str) -> Vec<&str> {
    text.unicode_words().collect()
}

fn tokenize_lower(text: &str) -> Vec<String> {
    text.unicode_words().map(|w| w.to_lowercase()).collect()
}

fn sentence_count(text: &str) -> usize {
    text.split(['.', '!', '?'])
        .filter(|segment| !segment.trim().is_empty())
        .count()
}

fn substring_count(haystack: &str, needle: &str) -> usize {
    if needle.is_empty() {
        return 0;
    }
    let mut count = 0;
    let mut start = 0;
    while let Some(pos) = haystack[start..].find(needle) {
        count += 1;
        start += pos + needle.len();
    }
    count
}

/// Compute the 29 features for one sample. Pure and total: every ratio is
/// guarded against zero denominators.
pub fn compute_text_stats(prompt: &str, response: &str) -> TextStatFeatures {
    let lex = Lexicons::builtin();

    let response_tokens = tokenize(response);
    let response_lower = tokenize_lower(response);
    let prompt_lower = tokenize_lower(prompt);
    let word_count = response_tokens.len();
    let sentences = sentence_count(response);
    let char_len = response.chars().count();

    let word_denom = word_count.max(1) as f64;
    let char_denom = char_len.max(1) as f64;

    let total_word_chars: usize = response_tokens.iter().map(|w| w.chars().count()).sum();
    let capitalized = response_tokens
        .iter()
        .filter(|w| w.chars().next().is_some_and(char::is_uppercase))
        .count();
    let unique: BTreeSet<&String> = response_lower.iter().collect();
    let number_tokens = response_lower
        .iter()
        .filter(|w| w.replace(',', "").parse::<f64>().is_ok())
        .count();

    let count_chars = |pred: fn(char) -> bool| response.chars().filter(|&c| pred(c)).count() as f64;

    let first_person = response_lower
        .iter()
        .filter(|w| FIRST_PERSON.contains(&w.as_str()))
        .count();
    let second_person = response_lower
        .iter()
        .filter(|w| SECOND_PERSON.contains(&w.as_str()))
        .count();

    let response_lc = response.to_lowercase();
    let url_count = substring_count(&response_lc, "http://")
        + substring_count(&response_lc, "https://")
        + substring_count(&response_lc, "www.");

    let prompt_set: BTreeSet<&String> = prompt_lower.iter().collect();
    let response_set: BTreeSet<&String> = response_lower.iter().collect();
    let intersection = prompt_set.intersection(&response_set).count();
    let union = prompt_set.union(&response_set).count();
    let jaccard = if union == 0 {
        // Both sides tokenless; identical by convention.
        1.0
    } else {
        intersection as f64 / union as f64
    };

    TextStatFeatures {
        response_char_len: char_len as f64,
        response_word_count: word_count as f64,
        response_sentence_count: sentences as f64,
        avg_word_len: if word_count == 0 {
            0.0
        } else {
            total_word_chars as f64 / word_count as f64
        },
        avg_sentence_len: word_count as f64 / sentences.max(1) as f64,
        hedge_word_count: lex.hedges.count(&response_lower) as f64,
        hedge_ratio: lex.hedges.count(&response_lower) as f64 / word_denom,
        certainty_word_count: lex.certainty.count(&response_lower) as f64,
        negation_count: lex.negation.count(&response_lower) as f64,
        modal_verb_count: lex.modals.count(&response_lower) as f64,
        first_person_count: first_person as f64,
        second_person_count: second_person as f64,
        question_mark_count: count_chars(|c| c == '?'),
        exclamation_count: count_chars(|c| c == '!'),
        punctuation_ratio: count_chars(|c| c.is_ascii_punctuation()) / char_denom,
        comma_count: count_chars(|c| c == ','),
        colon_semicolon_count: count_chars(|c| c == ':' || c == ';'),
        paren_count: count_chars(|c| c == '(' || c == ')'),
        quote_count: count_chars(|c| {
            matches!(
                c,
                '"' | '\'' | '\u{201C}' | '\u{201D}' | '\u{2018}' | '\u{2019}'
            )
        }),
        digit_count: count_chars(|c| c.is_ascii_digit()),
        number_token_count: number_tokens as f64,
        capitalized_token_ratio: capitalized as f64 / word_denom,
        unique_word_ratio: unique.len() as f64 / word_denom,
        stopword_ratio: lex.stopwords.count(&response_lower) as f64 / word_denom,
        url_count: url_count as f64,
        prompt_word_count: prompt_lower.len() as f64,
        len_ratio_response_prompt: word_count as f64 / prompt_lower.len().max(1) as f64,
        jaccard_word_overlap: jaccard,
        crisis_keyword_count: lex.crisis.count(&response_lower) as f64,
    }
}

/// Convenience wrapper over a loaded sample.
pub fn text_stats_for(sample: &AnnotatedSample) -> TextStatFeatures {
    compute_text_stats(&sample.prompt, &sample.response)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hedges_and_sentences_hand_count() {
        let stats = compute_text_stats("Will it help?", "It might help. Perhaps.");
        assert_eq!(stats.hedge_word_count, 2.0);
        assert_eq!(stats.response_sentence_count, 2.0);
    }

    #[test]
    fn minimal_response_has_guarded_ratios() {
        let stats = compute_text_stats("Is this fine?", "ok");
        assert_eq!(stats.response_word_count, 1.0);
        assert_eq!(stats.response_sentence_count, 1.0);
        assert_eq!(stats.avg_sentence_len, 1.0);
        assert!(stats.to_vector().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn identical_prompt_and_response_have_full_overlap() {
        let text = "Take slow breaths and reach out for support.";
        let stats = compute_text_stats(text, text);
        assert_eq!(stats.jaccard_word_overlap, 1.0);
    }

    #[test]
    fn crisis_keywords_counted_with_phrases() {
        let stats = compute_text_stats(
            "I have been thinking about hurting myself.",
            "Please call 988 or the crisis hotline right away.",
        );
        // 988, crisis, hotline
        assert_eq!(stats.crisis_keyword_count, 3.0);
    }

    #[test]
    fn phrase_hedge_could_be_counts_once() {
        let stats = compute_text_stats("q", "This could be true.");
        assert_eq!(stats.hedge_word_count, 1.0);
    }

    #[test]
    fn url_and_number_counting() {
        let stats = compute_text_stats(
            "any sources?",
            "See https://example.org and www.example.org; about 80 percent, or 0.8.",
        );
        assert_eq!(stats.url_count, 2.0);
        assert!(stats.number_token_count >= 2.0);
    }

    #[test]
    fn vector_aligns_with_names() {
        let stats = compute_text_stats("a question", "An answer, quite certain!");
        let vec = stats.to_vector();
        assert_eq!(vec.len(), TEXT_STAT_NAMES.len());
        assert_eq!(vec[0], stats.response_char_len);
        assert_eq!(vec[28], stats.crisis_keyword_count);
    }

    #[test]
    fn deterministic_and_order_independent() {
        let a = compute_text_stats("p one", "r might be fine.");
        let b = compute_text_stats("p one", "r might be fine.");
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn ratios_stay_bounded(prompt in ".{1,80}", response in ".{1,200}") {
            let stats = compute_text_stats(&prompt, &response);
            for (name, value) in TEXT_STAT_NAMES.iter().zip(stats.to_vector()) {
                prop_assert!(value.is_finite(), "{name} not finite");
                prop_assert!(value >= 0.0, "{name} negative: {value}");
            }
            for (name, value) in [
                ("hedge_ratio", stats.hedge_ratio),
                ("punctuation_ratio", stats.punctuation_ratio),
                ("capitalized_token_ratio", stats.capitalized_token_ratio),
                ("unique_word_ratio", stats.unique_word_ratio),
                ("stopword_ratio", stats.stopword_ratio),
                ("jaccard_word_overlap", stats.jaccard_word_overlap),
            ] {
                prop_assert!((0.0..=1.0).contains(&value), "{name} out of range: {value}");
            }
        }
    }
}
