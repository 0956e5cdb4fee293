use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use unicode_normalization::UnicodeNormalization;

use super::script::is_token_char;
use super::LanguageTag;
use crate::error::{Error, Result};

const EN_STOPWORDS: &str = include_str!("../../data/stopwords/en.txt");
const BN_STOPWORDS: &str = include_str!("../../data/stopwords/bn.txt");

/// Per-language stop-word lists, one token per line.
#[derive(Debug, Clone)]
pub struct StopWords {
    english: HashSet<String>,
    bangla: HashSet<String>,
}

fn parse_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase().nfc().collect())
        .collect()
}

impl Default for StopWords {
    fn default() -> Self {
        Self {
            english: parse_list(EN_STOPWORDS),
            bangla: parse_list(BN_STOPWORDS),
        }
    }
}

impl StopWords {
    pub fn from_strs(english: &str, bangla: &str) -> Self {
        Self {
            english: parse_list(english),
            bangla: parse_list(bangla),
        }
    }

    /// Load `en.txt` and `bn.txt` from `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|e| Error::io(path, e))
        };
        Ok(Self::from_strs(&read("en.txt")?, &read("bn.txt")?))
    }

    pub fn contains(&self, language: LanguageTag, token: &str) -> bool {
        match language {
            LanguageTag::English => self.english.contains(token),
            LanguageTag::Bangla => self.bangla.contains(token),
            LanguageTag::Other => false,
        }
    }
}

fn url_pattern() -> &'static Regex {
    static URL: OnceLock<Regex> = OnceLock::new();
    URL.get_or_init(|| Regex::new(r"(?:[a-z][a-z0-9+.\-]*://|www\.)\S+").expect("valid url regex"))
}

/// Pictographic code points, replaced by a space.
fn is_pictograph(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1F0FF   // mahjong, dominoes, playing cards
        | 0x1F100..=0x1F1FF // enclosed alphanumerics, regional indicators
        | 0x1F300..=0x1F5FF // misc symbols and pictographs (incl. skin tones)
        | 0x1F600..=0x1F64F // emoticons
        | 0x1F680..=0x1F6FF // transport and map
        | 0x1F700..=0x1F7FF
        | 0x1F900..=0x1F9FF // supplemental symbols and pictographs
        | 0x1FA00..=0x1FAFF
        | 0x2600..=0x26FF   // misc symbols
        | 0x2700..=0x27BF   // dingbats
        | 0x2B00..=0x2BFF)
}

/// Emoji glue, deleted outright so it never splits a word: ZWJ, variation
/// selectors, keycap combiner and tag characters.
fn is_emoji_joiner(c: char) -> bool {
    matches!(c as u32, 0x200D | 0xFE00..=0xFE0F | 0x20E3 | 0xE0020..=0xE007F)
}

/// Lowercasing, URL and emoji removal, tokenization and stop-word filtering.
#[derive(Debug, Clone, Default)]
pub struct Normalizer {
    stopwords: StopWords,
}

impl Normalizer {
    pub fn new(stopwords: StopWords) -> Self {
        Self { stopwords }
    }

    /// Everything but stop-word removal: lowercase (then NFC), strip URLs and emoji,
    /// split on whitespace and punctuation. Tokens come back in order.
    pub fn clean_tokens(&self, text: &str) -> Vec<String> {
        // NFC so that e.g. the two encodings of Bangla YYA compare equal.
        let lowered: String = text.to_lowercase().nfc().collect();
        let no_urls = url_pattern().replace_all(&lowered, " ");
        let mut cleaned = String::with_capacity(no_urls.len());
        for c in no_urls.chars() {
            if is_emoji_joiner(c) {
                continue;
            }
            cleaned.push(if is_pictograph(c) { ' ' } else { c });
        }
        cleaned
            .split(|c: char| !is_token_char(c))
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect()
    }

    pub fn normalize(&self, text: &str, language: LanguageTag) -> String {
        let tokens = self.clean_tokens(text);
        let kept: Vec<&str> = tokens
            .iter()
            .map(String::as_str)
            .filter(|t| !self.stopwords.contains(language, t))
            .collect();
        kept.join(" ")
    }
}

fn default_normalizer() -> &'static Normalizer {
    static DEFAULT: OnceLock<Normalizer> = OnceLock::new();
    DEFAULT.get_or_init(Normalizer::default)
}

/// Normalize with the shipped stop-word lists.
///
/// Steps, in order: Unicode lowercasing, URL removal, emoji removal,
/// whitespace/punctuation tokenization rejoined with single spaces, and
/// stop-word removal for `language`. The result may be empty.
pub fn normalize_text(text: &str, language: LanguageTag) -> String {
    default_normalizer().normalize(text, language)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lowercases_and_strips_urls_and_punctuation() {
        assert_eq!(
            normalize_text("Great APP!!! visit http://x.co", LanguageTag::English),
            "great app visit"
        );
        assert_eq!(
            normalize_text("see www.sonali.com.bd/help now", LanguageTag::English),
            "see"
        );
    }

    #[test]
    fn all_stopwords_normalize_to_empty() {
        assert_eq!(normalize_text("the the the", LanguageTag::English), "");
        assert_eq!(normalize_text("", LanguageTag::English), "");
    }

    #[test]
    fn emoji_are_removed_without_splitting_words() {
        assert_eq!(
            normalize_text("good👍app 👨\u{200D}👩\u{200D}👧 fast", LanguageTag::English),
            "good app fast"
        );
        assert_eq!(
            normalize_text("❤\u{FE0F}love", LanguageTag::English),
            "love"
        );
    }

    #[test]
    fn bangla_stopwords_and_danda() {
        assert_eq!(
            normalize_text("অ্যাপটি খুব ভালো। কিন্তু ধীর", LanguageTag::Bangla),
            "অ্যাপটি ভালো ধীর"
        );
    }

    #[test]
    fn stopword_lists_are_language_specific() {
        // English stop word survives under the Bangla list.
        assert_eq!(normalize_text("the app", LanguageTag::Bangla), "the app");
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(text in "\\PC{0,60}") {
            for lang in [LanguageTag::English, LanguageTag::Bangla] {
                let once = normalize_text(&text, lang);
                prop_assert_eq!(normalize_text(&once, lang), once.clone());
            }
        }

        #[test]
        fn mixed_script_idempotent(text in "[a-zA-Z অআইকখগ্যাি।!,.:/ 👍\u{200D}]{0,40}") {
            let once = normalize_text(&text, LanguageTag::Bangla);
            prop_assert_eq!(normalize_text(&once, LanguageTag::Bangla), once.clone());
        }
    }
}
