use super::ast::Span;
use super::FrontendError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Punct(&'static str),
    /// `//@ assert`
    AtAssert,
    /// `//@ domain`
    AtDomain,
    /// End of an annotation line.
    AtEnd,
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const PUNCTS: [&str; 44] = [
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=", "-=",
    "*=", "/=", "%=", "&=", "|=", "^=", "..", "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<",
    ">", "=", "(", ")", "{", "}", "[", "]", ";", ",",
];
const PUNCTS2: [&str; 3] = [".", ":", "?"];

/// Resolve `//@ if FLAG` / `//@ else` / `//@ endif` blocks. Lines that are
/// compiled out are blanked so positions stay stable.
pub fn preprocess(text: &str, flags: &[String]) -> Result<String, FrontendError> {
    let mut out = String::with_capacity(text.len());
    // (active-before, branch-taken, in-else)
    let mut stack: Vec<(bool, bool, bool)> = Vec::new();
    let mut active = true;
    for (lineno, line) in text.lines().enumerate() {
        let t = line.trim_start();
        let span = Span { line: lineno as u32 + 1, col: 1 };
        if let Some(rest) = t.strip_prefix("//@") {
            let rest = rest.trim();
            let mut words = rest.split_whitespace();
            match words.next() {
                Some("if") => {
                    let flag = words
                        .next()
                        .ok_or_else(|| FrontendError::parse(span, "missing flag after //@ if"))?;
                    let on = flags.iter().any(|f| f == flag);
                    stack.push((active, on, false));
                    active = active && on;
                    out.push('\n');
                    continue;
                }
                Some("else") => {
                    let top = stack
                        .last_mut()
                        .ok_or_else(|| FrontendError::parse(span, "//@ else without //@ if"))?;
                    if top.2 {
                        return Err(FrontendError::parse(span, "duplicate //@ else"));
                    }
                    top.2 = true;
                    active = top.0 && !top.1;
                    out.push('\n');
                    continue;
                }
                Some("endif") => {
                    let top = stack
                        .pop()
                        .ok_or_else(|| FrontendError::parse(span, "//@ endif without //@ if"))?;
                    active = top.0;
                    out.push('\n');
                    continue;
                }
                _ => {}
            }
        }
        if active {
            out.push_str(line);
        }
        out.push('\n');
    }
    if !stack.is_empty() {
        return Err(FrontendError::parse(
            Span { line: text.lines().count() as u32, col: 1 },
            "unterminated //@ if",
        ));
    }
    Ok(out)
}

pub fn lex(text: &str) -> Result<Vec<Token>, FrontendError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let mut in_annot = false;

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        if c == '\n' {
            if in_annot {
                toks.push(Token { tok: Tok::AtEnd, span });
                in_annot = false;
            }
            bump!();
            continue;
        }
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            if !in_annot && chars.get(i + 2) == Some(&'@') {
                // Annotation line: lex its contents as tokens.
                for _ in 0..3 {
                    bump!();
                }
                while i < chars.len() && chars[i].is_whitespace() && chars[i] != '\n' {
                    bump!();
                }
                let word_start = i;
                while i < chars.len() && chars[i].is_ascii_alphabetic() {
                    bump!();
                }
                let word: String = chars[word_start..i].iter().collect();
                match word.as_str() {
                    "assert" => toks.push(Token { tok: Tok::AtAssert, span }),
                    "domain" => toks.push(Token { tok: Tok::AtDomain, span }),
                    _ => {
                        return Err(FrontendError::parse(
                            span,
                            format!("unknown annotation `{word}`"),
                        ));
                    }
                }
                in_annot = true;
                continue;
            }
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            loop {
                if i + 1 >= chars.len() {
                    return Err(FrontendError::parse(span, "unterminated comment"));
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        if c == '#' {
            // Preprocessor lines (includes) carry no meaning here.
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            toks.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), span });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                bump!();
            }
            let raw: String = chars[start..i].iter().collect();
            let digits = raw.trim_end_matches(['u', 'U', 'l', 'L']);
            let v = if let Some(h) = digits.strip_prefix("0x").or_else(|| digits.strip_prefix("0X")) {
                i64::from_str_radix(h, 16)
            } else if digits.len() > 1 && digits.starts_with('0') {
                i64::from_str_radix(&digits[1..], 8)
            } else {
                digits.parse::<i64>()
            }
            .map_err(|_| FrontendError::parse(span, format!("bad integer literal `{raw}`")))?;
            if v > u32::MAX as i64 {
                return Err(FrontendError::parse(span, format!("integer literal `{raw}` too large")));
            }
            toks.push(Token { tok: Tok::Int(v), span });
            continue;
        }
        if c == '\'' {
            bump!();
            let v = if i < chars.len() && chars[i] == '\\' {
                bump!();
                let e = *chars.get(i).ok_or_else(|| FrontendError::parse(span, "bad char literal"))?;
                bump!();
                match e {
                    'n' => 10,
                    't' => 9,
                    'r' => 13,
                    '0' => 0,
                    '\\' => 92,
                    '\'' => 39,
                    _ => return Err(FrontendError::parse(span, "unknown escape")),
                }
            } else {
                let ch = *chars.get(i).ok_or_else(|| FrontendError::parse(span, "bad char literal"))?;
                bump!();
                ch as i64
            };
            if chars.get(i) != Some(&'\'') {
                return Err(FrontendError::parse(span, "unterminated char literal"));
            }
            bump!();
            toks.push(Token { tok: Tok::Int(v), span });
            continue;
        }
        if c == '"' {
            bump!();
            let start = i;
            while i < chars.len() && chars[i] != '"' && chars[i] != '\n' {
                bump!();
            }
            if chars.get(i) != Some(&'"') {
                return Err(FrontendError::parse(span, "unterminated string"));
            }
            let s: String = chars[start..i].iter().collect();
            bump!();
            toks.push(Token { tok: Tok::Str(s), span });
            continue;
        }
        let rest: String = chars[i..(i + 3).min(chars.len())].iter().collect();
        if let Some(p) = PUNCTS.iter().chain(PUNCTS2.iter()).find(|p| rest.starts_with(**p)) {
            for _ in 0..p.len() {
                bump!();
            }
            toks.push(Token { tok: Tok::Punct(p), span });
            continue;
        }
        return Err(FrontendError::parse(span, format!("unexpected character `{c}`")));
    }
    if in_annot {
        toks.push(Token { tok: Tok::AtEnd, span: Span { line, col } });
    }
    toks.push(Token { tok: Tok::Eof, span: Span { line, col } });
    Ok(toks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn basic_tokens() {
        assert_eq!(
            kinds("x = 0xff ^ y;"),
            vec![
                Tok::Ident("x".into()),
                Tok::Punct("="),
                Tok::Int(255),
                Tok::Punct("^"),
                Tok::Ident("y".into()),
                Tok::Punct(";"),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn annotations() {
        let t = kinds("//@ assert i < 256;\nx;");
        assert_eq!(t[0], Tok::AtAssert);
        assert!(t.contains(&Tok::AtEnd));
        let t = kinds("//@ domain n = 1..4;");
        assert_eq!(t[0], Tok::AtDomain);
        assert!(t.contains(&Tok::Punct("..")));
    }

    #[test]
    fn conditional_blocks() {
        let src = "a\n//@ if FIXES\nb\n//@ else\nc\n//@ endif\nd\n";
        let on = preprocess(src, &["FIXES".to_string()]).unwrap();
        assert_eq!(on.lines().filter(|l| !l.is_empty()).collect::<Vec<_>>(), vec!["a", "b", "d"]);
        let off = preprocess(src, &[]).unwrap();
        assert_eq!(off.lines().filter(|l| !l.is_empty()).collect::<Vec<_>>(), vec!["a", "c", "d"]);
        assert_eq!(off.lines().count(), src.lines().count());
        assert!(preprocess("//@ if X\n", &[]).is_err());
    }

    #[test]
    fn char_literals_and_suffixes() {
        assert_eq!(kinds("'a' 10u")[..2], [Tok::Int(97), Tok::Int(10)]);
    }
}
