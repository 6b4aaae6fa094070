//! Text normalization helpers shared by scoring, mocks, and fidelity.

/// Lowercased alphanumeric tokens, punctuation stripped.
pub fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Normalized form used for phrase containment: tokens joined by one space.
pub fn normalize(text: &str) -> String {
    tokens(text).join(" ")
}

/// True when `label` occurs in `subject` on token boundaries.
///
/// Single-word labels match a token exactly; multi-word labels match as a
/// contiguous token phrase.
pub fn subject_contains_label(subject: &str, label: &str) -> bool {
    let subj = normalize(subject);
    let lab = normalize(label);
    if lab.is_empty() || subj.is_empty() {
        return false;
    }
    subj == lab
        || subj.starts_with(&format!("{lab} "))
        || subj.ends_with(&format!(" {lab}"))
        || subj.contains(&format!(" {lab} "))
}

/// Sentence segmentation: split on terminal punctuation and newlines.
pub fn sentences(text: &str) -> Vec<String> {
    text.split(['.', '!', '?', ';', '\n'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}
