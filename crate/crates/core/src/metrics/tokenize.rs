/// Name recorded in reports next to every token count.
pub const TOKENIZER_LABEL: &str = "lowercase-alphanumeric-runs";

/// Lowercases `text` and splits it on every run of non-alphanumeric
/// characters. No stemming, stopwords kept.
///
/// Contractions split at the apostrophe: `"don't"` becomes `["don", "t"]`.
pub fn tokenize_for_metrics(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_and_lowercases() {
        assert_eq!(
            tokenize_for_metrics("Hello, world!"),
            vec!["hello", "world"]
        );
        assert!(tokenize_for_metrics("").is_empty());
        assert_eq!(tokenize_for_metrics("don't stop"), vec!["don", "t", "stop"]);
        assert_eq!(tokenize_for_metrics("  --  "), Vec::<String>::new());
        assert_eq!(
            tokenize_for_metrics("Café at 9am"),
            vec!["café", "at", "9am"]
        );
    }
}
