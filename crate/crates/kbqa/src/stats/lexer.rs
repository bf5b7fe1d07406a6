//! Tokenizer for the SPARQL subset the analyzer understands.

use super::StatsError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    /// `?name` or `$name`, normalized to the `?` form.
    Var(String),
    /// `prefix:local` (either part may be empty, as in `:p` or `wd:`).
    Prefixed { prefix: String, local: String },
    /// `<...>`
    Iri(String),
    /// Quoted string content, quotes and escapes resolved.
    Str(String),
    /// Numeric literal, verbatim.
    Num(String),
    /// Bare word: keyword, function name, or `a`.
    Word(String),
    /// `@en`, `@en-GB`
    LangTag(String),
    /// `^^` datatype marker
    DatatypeMarker,
    /// Single punctuation/operator character: `{}()[];,.|/^*?+!=<>&-`
    Punct(char),
}

impl Token {
    /// Case-insensitive keyword check.
    pub fn is_word(&self, word: &str) -> bool {
        matches!(self, Token::Word(w) if w.eq_ignore_ascii_case(word))
    }
}

pub fn tokenize(input: &str) -> Result<Vec<Token>, StatsError> {
    let bytes = input.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;

    let err = |message: String| StatsError::UnsupportedSyntax { message };

    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '<' => {
                // IRI if it closes before whitespace; comparison operator otherwise
                let rest = &input[i + 1..];
                let close = rest.find('>');
                let ws = rest.find(char::is_whitespace).unwrap_or(rest.len());
                match close {
                    Some(end) if end <= ws => {
                        tokens.push(Token::Iri(rest[..end].to_string()));
                        i += end + 2;
                    }
                    _ => {
                        tokens.push(Token::Punct('<'));
                        i += 1;
                        if i < bytes.len() && bytes[i] == b'=' {
                            i += 1; // fold <= into <
                        }
                    }
                }
            }
            '?' | '$' => {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len() && is_var_char(bytes[j] as char) {
                    j += 1;
                }
                if j > start {
                    tokens.push(Token::Var(format!("?{}", &input[start..j])));
                    i = j;
                } else {
                    // path modifier / operator
                    tokens.push(Token::Punct(c));
                    i += 1;
                }
            }
            '"' | '\'' => {
                let (content, consumed) = lex_string(&input[i..])
                    .ok_or_else(|| err("unterminated string literal".to_string()))?;
                tokens.push(Token::Str(content));
                i += consumed;
            }
            '^' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'^' {
                    tokens.push(Token::DatatypeMarker);
                    i += 2;
                } else {
                    tokens.push(Token::Punct('^'));
                    i += 1;
                }
            }
            '@' => {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len()
                    && ((bytes[j] as char).is_ascii_alphanumeric() || bytes[j] == b'-')
                {
                    j += 1;
                }
                tokens.push(Token::LangTag(input[start..j].to_string()));
                i = j;
            }
            '0'..='9' => {
                let (num, consumed) = lex_number(&input[i..]);
                tokens.push(Token::Num(num));
                i += consumed;
            }
            '.' => {
                // dot may start a decimal (.5) or terminate a triple
                if i + 1 < bytes.len() && (bytes[i + 1] as char).is_ascii_digit() {
                    let (num, consumed) = lex_number(&input[i..]);
                    tokens.push(Token::Num(num));
                    i += consumed;
                } else {
                    tokens.push(Token::Punct('.'));
                    i += 1;
                }
            }
            '{' | '}' | '(' | ')' | '[' | ']' | ';' | ',' | '|' | '/' | '*' | '+' | '!'
            | '=' | '>' | '&' | '-' => {
                tokens.push(Token::Punct(c));
                i += 1;
                // fold two-char operators into their head character
                if i < bytes.len()
                    && matches!(
                        (c, bytes[i] as char),
                        ('>', '=') | ('!', '=') | ('&', '&') | ('|', '|')
                    )
                {
                    i += 1;
                }
            }
            _ if is_name_start(c) => {
                let start = i;
                let mut j = i;
                while j < bytes.len() && is_name_char(bytes[j] as char) {
                    j += 1;
                }
                // prefixed name when a colon follows immediately
                if j < bytes.len() && bytes[j] == b':' {
                    let prefix = input[start..j].to_string();
                    let local_start = j + 1;
                    let mut k = local_start;
                    while k < bytes.len() && is_name_char(bytes[k] as char) {
                        k += 1;
                    }
                    tokens.push(Token::Prefixed {
                        prefix,
                        local: input[local_start..k].to_string(),
                    });
                    i = k;
                } else {
                    tokens.push(Token::Word(input[start..j].to_string()));
                    i = j;
                }
            }
            ':' => {
                // empty prefix, e.g. `:localName`
                let local_start = i + 1;
                let mut k = local_start;
                while k < bytes.len() && is_name_char(bytes[k] as char) {
                    k += 1;
                }
                tokens.push(Token::Prefixed {
                    prefix: String::new(),
                    local: input[local_start..k].to_string(),
                });
                i = k;
            }
            other => return Err(err(format!("unexpected character {other:?}"))),
        }
    }
    Ok(tokens)
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

/// Characters allowed inside prefixed-name parts (PN_CHARS, minus the dot:
/// a dot here is a triple terminator).
fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

/// Variable names are stricter: no dash, so `?year-1` lexes as a
/// subtraction.
fn is_var_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Lexes a quoted string starting at the opening quote; returns the content
/// and how many bytes were consumed. Handles `'`, `"`, and their long forms.
fn lex_string(input: &str) -> Option<(String, usize)> {
    let quote = input.chars().next()?;
    let long = input.len() >= 3 && input[..3].chars().all(|c| c == quote);
    let (open_len, closer) = if long {
        (3, format!("{quote}{quote}{quote}"))
    } else {
        (1, quote.to_string())
    };
    let mut content = String::new();
    let body = &input[open_len..];
    let mut chars = body.char_indices().peekable();
    while let Some((pos, c)) = chars.next() {
        if c == '\\' {
            if let Some((_, esc)) = chars.next() {
                content.push(match esc {
                    'n' => '\n',
                    't' => '\t',
                    'r' => '\r',
                    other => other,
                });
            }
            continue;
        }
        if body[pos..].starts_with(closer.as_str()) {
            return Some((content, open_len + pos + closer.len()));
        }
        content.push(c);
    }
    None
}

fn lex_number(input: &str) -> (String, usize) {
    let mut end = 0;
    let bytes = input.as_bytes();
    let mut seen_exp = false;
    while end < bytes.len() {
        let c = bytes[end] as char;
        let ok = c.is_ascii_digit()
            || c == '.' && !seen_exp
            || (c == 'e' || c == 'E') && !seen_exp && end > 0
            || (c == '+' || c == '-')
                && end > 0
                && matches!(bytes[end - 1] as char, 'e' | 'E');
        if !ok {
            break;
        }
        if c == 'e' || c == 'E' {
            seen_exp = true;
        }
        end += 1;
    }
    // a trailing dot is a triple terminator, not part of the number
    if input[..end].ends_with('.') {
        end -= 1;
    }
    (input[..end].to_string(), end)
}
