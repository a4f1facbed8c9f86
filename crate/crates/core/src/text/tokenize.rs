/// Whitespace tokenizer: lowercases, drops URLs, trims punctuation from both
/// ends while keeping a leading `#` or `@` marker.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().filter_map(normalize_token).collect()
}

fn is_trimmed(c: char) -> bool {
    !(c.is_alphanumeric() || c == '_')
}

fn normalize_token(raw: &str) -> Option<String> {
    let lower = raw.to_lowercase();
    if lower.starts_with("http://") || lower.starts_with("https://") {
        return None;
    }
    let (marker, rest) = match lower.chars().next() {
        Some(c @ ('#' | '@')) => (Some(c), &lower[1..]),
        _ => (None, lower.as_str()),
    };
    let core = rest.trim_matches(is_trimmed);
    if core.is_empty() {
        return None;
    }
    Some(match marker {
        Some(m) => format!("{m}{core}"),
        None => core.to_string(),
    })
}

/// Hashtag or mention token as produced by [`tokenize`].
pub fn is_marker(token: &str) -> bool {
    token.starts_with('#') || token.starts_with('@')
}

/// Tokens of one tweet with hashtags and mentions removed.
pub fn content_tokens(text: &str) -> Vec<String> {
    tokenize(text).into_iter().filter(|t| !is_marker(t)).collect()
}
