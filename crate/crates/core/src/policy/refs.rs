//! Cross-reference extraction and resolution.
//!
//! Explicit references are matched by regular expressions over the declared
//! citation grammar — "Article N", "Art. N", "Articles N and M",
//! "Articles N to M" / "Articles N–M" — and canonicalized to tokens:
//! `A<number>` for an article, `A<number>.<number>` for a numbered paragraph
//! or point. Paragraph-only mentions ("paragraph 1") and recitals are not
//! explicit article references; those are resolved by the implicit pass.

use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;

use super::{segment_kind, segment_label, PolicyGraph};

/// A parsed canonical reference token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefToken<'a> {
    pub article: &'a str,
    pub point: Option<&'a str>,
}

/// Parse "A9" / "A37.1" into its parts; `None` when not in the grammar.
pub fn parse_ref_token(token: &str) -> Option<RefToken<'_>> {
    let rest = token.strip_prefix('A')?;
    let (article, point) = match rest.split_once('.') {
        Some((a, p)) => (a, Some(p)),
        None => (rest, None),
    };
    let numeric = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_digit());
    if !numeric(article) || !point.is_none_or(numeric) {
        return None;
    }
    Some(RefToken { article, point })
}

fn singular_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b(?:Article|Art\.)\s*(\d+)").expect("static regex"))
}

fn plural_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"\bArticles\s+\d+(?:\s*\(\d+\))?(?:(?:\s*,\s*|\s+(?:and|or)\s+|\s+to\s+|\s*[\u{2013}\u{2014}-]\s*)\d+(?:\s*\(\d+\))?)*",
        )
        .expect("static regex")
    })
}

/// Extract canonical article tokens from text, deduplicated, document order.
pub fn explicit_refs(text: &str) -> Vec<String> {
    // (position, token) pairs from both citation forms.
    let mut found: Vec<(usize, String)> = Vec::new();

    for caps in singular_re().captures_iter(text) {
        let m = caps.get(0).expect("whole match");
        found.push((m.start(), format!("A{}", &caps[1])));
    }

    for m in plural_re().find_iter(text) {
        for token in expand_plural(m.as_str()) {
            found.push((m.start(), token));
        }
    }

    found.sort_by_key(|a| a.0);
    let mut out: Vec<String> = Vec::new();
    for (_, token) in found {
        if !out.contains(&token) {
            out.push(token);
        }
    }
    out
}

/// Expand a matched "Articles ..." span into tokens, handling ranges
/// ("44 to 49", "44–49") and lists ("13, 14 and 15").
fn expand_plural(span: &str) -> Vec<String> {
    static PAREN: OnceLock<Regex> = OnceLock::new();
    static NUM: OnceLock<Regex> = OnceLock::new();
    let paren = PAREN.get_or_init(|| Regex::new(r"\(\d+\)").expect("static regex"));
    let num = NUM.get_or_init(|| Regex::new(r"\d+").expect("static regex"));

    let stripped = paren.replace_all(span, "");
    let mut numbers: Vec<(usize, u64)> = Vec::new();
    for m in num.find_iter(&stripped) {
        if let Ok(n) = m.as_str().parse::<u64>() {
            numbers.push((m.start(), n));
        }
    }

    let mut out: Vec<u64> = Vec::new();
    for (i, &(start, n)) in numbers.iter().enumerate() {
        if i == 0 {
            out.push(n);
            continue;
        }
        let prev_end = {
            let (ps, pn) = numbers[i - 1];
            ps + pn.to_string().len()
        };
        let joiner = &stripped[prev_end..start];
        let is_range = joiner.contains("to")
            || joiner.contains('\u{2013}')
            || joiner.contains('\u{2014}')
            || joiner.contains('-');
        if is_range {
            let prev = *out.last().expect("range has a start");
            if n > prev {
                for k in prev + 1..=n {
                    out.push(k);
                }
            } else {
                out.push(n);
            }
        } else {
            out.push(n);
        }
    }
    out.into_iter().map(|n| format!("A{n}")).collect()
}

/// Index from article label to the node ids carrying it, for token lookup.
pub struct RefResolver<'g> {
    graph: &'g PolicyGraph,
    articles: HashMap<String, Vec<String>>,
}

impl<'g> RefResolver<'g> {
    pub fn new(graph: &'g PolicyGraph) -> Self {
        let mut articles: HashMap<String, Vec<String>> = HashMap::new();
        for node in graph.nodes() {
            if segment_kind(&node.id) == "ARTICLE" {
                articles
                    .entry(segment_label(&node.id).to_string())
                    .or_default()
                    .push(node.id.clone());
            }
        }
        Self { graph, articles }
    }

    /// Resolve a token to a node id, preferring the finest existing node and
    /// falling back to the article. `None` when the target does not exist or
    /// the article label is ambiguous within the document.
    pub fn resolve(&self, token: &str) -> Option<&str> {
        let parsed = parse_ref_token(token)?;
        let candidates = self.articles.get(parsed.article)?;
        if candidates.len() != 1 {
            return None;
        }
        let article_id = &candidates[0];
        if let Some(point) = parsed.point {
            let point_id = format!("{article_id}/POINT:{point}");
            if self.graph.node(&point_id).is_some() {
                return self.graph.node(&point_id).map(|n| n.id.as_str());
            }
        }
        self.graph.node(article_id).map(|n| n.id.as_str())
    }
}
