//! Character-script classification and the script-ratio language detector.

use serde::{Deserialize, Serialize};

use super::LanguageTag;

/// Code point in the Bengali block (U+0980..=U+09FF).
pub fn is_bangla(c: char) -> bool {
    ('\u{0980}'..='\u{09FF}').contains(&c)
}

/// Alphabetic code point of the Latin script.
pub fn is_latin_letter(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_alphabetic();
    }
    if !c.is_alphabetic() {
        return false;
    }
    matches!(c as u32,
        0x00AA | 0x00BA
        | 0x00C0..=0x02AF
        | 0x1D00..=0x1D7F
        | 0x1E00..=0x1EFF
        | 0x2C60..=0x2C7F
        | 0xA720..=0xA7FF
        | 0xAB30..=0xAB6F
        | 0xFB00..=0xFB06
        | 0xFF21..=0xFF3A
        | 0xFF41..=0xFF5A)
}

/// Letter in either of the two supported scripts.
pub fn is_letter(c: char) -> bool {
    is_latin_letter(c) || (is_bangla(c) && c.is_alphabetic())
}

/// Characters that belong inside a token: letters, digits and combining
/// marks (Bangla vowel signs and the virama are marks, not letters).
pub fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || unicode_normalization::char::is_combining_mark(c)
}

/// Share thresholds used by [`detect_language`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanguageThresholds {
    /// Minimum Bangla share of script characters to call a text Bangla.
    pub bangla: f64,
    /// Minimum Latin share to call a text English.
    pub english: f64,
}

impl Default for LanguageThresholds {
    fn default() -> Self {
        Self {
            bangla: 0.30,
            english: 0.50,
        }
    }
}

/// Classify `text` by its script composition.
///
/// Counts Bengali-block code points `b` and Latin letters `l`. With
/// `t = b + l`, the text is Bangla when `b / t` reaches the Bangla threshold,
/// else English when `l / t` reaches the English threshold, else Other. A text
/// with no script characters at all is Other.
pub fn detect_language(text: &str, thresholds: &LanguageThresholds) -> LanguageTag {
    let (mut bangla, mut latin) = (0usize, 0usize);
    for c in text.chars() {
        if is_bangla(c) {
            bangla += 1;
        } else if is_latin_letter(c) {
            latin += 1;
        }
    }
    let total = bangla + latin;
    if total == 0 {
        return LanguageTag::Other;
    }
    let total = total as f64;
    if bangla as f64 / total >= thresholds.bangla {
        LanguageTag::Bangla
    } else if latin as f64 / total >= thresholds.english {
        LanguageTag::English
    } else {
        LanguageTag::Other
    }
}
