//! Character-class helpers shared by feature extraction, analysis and alignment.

use alloc::string::String;

/// Punctuation in the broad sense: anything that is neither alphanumeric
/// nor whitespace (so `-`, `€` and quotes all count).
pub fn is_punct_char(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

/// A token made up entirely of punctuation characters.
pub fn is_punct_token(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_punct_char)
}

pub fn has_digit(s: &str) -> bool {
    s.chars().any(|c| c.is_ascii_digit())
}

/// Numeric token: digits with at most one `.` or `,` separator between
/// digits, e.g. `2020`, `3,5`, `1.000`. Dotted dates such as `30.09.2020`
/// are not numbers (they still carry `has_digit`).
pub fn is_number(s: &str) -> bool {
    let bytes = s.as_bytes();
    if bytes.is_empty() || !bytes[0].is_ascii_digit() || !bytes[bytes.len() - 1].is_ascii_digit() {
        return false;
    }
    let mut separators = 0;
    for &b in bytes {
        match b {
            b'0'..=b'9' => {}
            b'.' | b',' => separators += 1,
            _ => return false,
        }
    }
    separators <= 1
}

/// First character is uppercase and at least one alphabetic char exists.
pub fn is_capitalized(s: &str) -> bool {
    s.chars().next().is_some_and(char::is_uppercase)
}

pub fn is_all_upper(s: &str) -> bool {
    let mut any = false;
    for c in s.chars().filter(|c| c.is_alphabetic()) {
        if !c.is_uppercase() {
            return false;
        }
        any = true;
    }
    any
}

pub fn is_all_lower(s: &str) -> bool {
    let mut any = false;
    for c in s.chars().filter(|c| c.is_alphabetic()) {
        if !c.is_lowercase() {
            return false;
        }
        any = true;
    }
    any
}

/// Lowercase and strip leading/trailing punctuation. May return an empty
/// string for tokens that are pure punctuation.
pub fn normalize(s: &str) -> String {
    s.trim_matches(is_punct_char).to_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_date_is_not_a_number() {
        assert!(!is_number("30.09.2020"));
        assert!(has_digit("30.09.2020"));
        assert!(!is_punct_token("30.09.2020"));
    }

    #[test]
    fn plain_numbers() {
        assert!(is_number("2020"));
        assert!(is_number("3,5"));
        assert!(is_number("1.000"));
        assert!(!is_number("21-Jähriger"));
        assert!(!is_number(".5"));
        assert!(!is_number(""));
    }

    #[test]
    fn casing() {
        assert!(is_capitalized("Krise"));
        assert!(!is_capitalized("krise"));
        assert!(is_all_upper("EU"));
        assert!(is_all_upper("EU-"));
        assert!(!is_all_upper("123"));
        assert!(is_all_lower("über"));
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize("\"Krise!\""), "krise");
        assert_eq!(normalize("EU-Gipfel:"), "eu-gipfel");
        assert_eq!(normalize("--"), "");
    }
}
