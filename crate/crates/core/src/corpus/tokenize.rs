/// Lowercases, splits on whitespace, and emits every punctuation character
/// as its own token.
///
/// ```
/// assert_eq!(
///     esnli::corpus::tokenize("A man doesn't sleep."),
///     ["a", "man", "doesn", "'", "t", "sleep", "."]
/// );
/// ```
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_whitespace() {
            flush(&mut current, &mut tokens);
        } else if is_punctuation(c) {
            flush(&mut current, &mut tokens);
            tokens.extend(c.to_lowercase().map(String::from));
        } else {
            current.extend(c.to_lowercase());
        }
    }
    flush(&mut current, &mut tokens);
    tokens
}

fn flush(current: &mut String, tokens: &mut Vec<String>) {
    if !current.is_empty() {
        tokens.push(std::mem::take(current));
    }
}

pub(crate) fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace() && !c.is_control())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_punctuation_and_lowercases() {
        assert_eq!(tokenize("Hello, World!"), ["hello", ",", "world", "!"]);
        assert_eq!(tokenize("  two   spaces "), ["two", "spaces"]);
        assert_eq!(tokenize("empty-handed"), ["empty", "-", "handed"]);
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" \t\n").is_empty());
    }

    #[test]
    fn non_ascii_letters_stay_in_words() {
        assert_eq!(tokenize("Café au lait"), ["café", "au", "lait"]);
    }
}
