use super::ast::Pos;
use super::FrontendError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Num(f64),
    Kw(&'static str),
    /// Punctuation and operators.
    Sym(&'static str),
    Eof,
}

const KEYWORDS: &[&str] = &[
    "input", "output", "if", "then", "else", "while", "do", "begin", "end", "and", "or", "not", "true", "false",
];

// Longest first so that `:=`, `<=`, `<>` win over their prefixes.
const SYMBOLS: &[&str] = &[":=", "<=", ">=", "<>", "!=", "<", ">", "=", "+", "-", "*", "/", "(", ")", ";", ","];

pub fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, FrontendError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word),
            };
            out.push((tok, pos));
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let value = text
                .parse::<f64>()
                .map_err(|_| FrontendError::Lex { pos, message: format!("malformed number '{text}'") })?;
            out.push((Tok::Num(value), pos));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                i += sym.len();
                col += sym.len();
                out.push((Tok::Sym(sym), pos));
            }
            None => return Err(FrontendError::Lex { pos, message: format!("unexpected character '{c}'") }),
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_positions() {
        let toks = lex("y := 3*x # trailing\n  <= 1.5e2").unwrap();
        let kinds: Vec<Tok> = toks.iter().map(|t| t.0.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Ident("y".into()),
                Tok::Sym(":="),
                Tok::Num(3.0),
                Tok::Sym("*"),
                Tok::Ident("x".into()),
                Tok::Sym("<="),
                Tok::Num(150.0),
                Tok::Eof
            ]
        );
        assert_eq!(toks[5].1, Pos { line: 2, col: 3 });
    }

    #[test]
    fn bad_character() {
        let err = lex("x := 1 @").unwrap_err();
        assert!(err.to_string().contains("1:8"), "{err}");
    }
}
