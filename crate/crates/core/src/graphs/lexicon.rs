use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::graphs::fsa::ByteCursor;

pub type PhoneId = u32;

/// Phone unit reserved for the CTC blank.
pub const BLANK: PhoneId = 0;
pub const BLANK_SYMBOL: &str = "<blk>";
pub const DEFAULT_SILENCE_PROB: f64 = 0.5;
const DEFAULT_SILENCE_SYMBOL: &str = "sil";

/// Dense token index into a [`Lexicon`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenId(pub u32);

impl TokenId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Phone-level lexicon with context-independent phones.
///
/// Unit 0 is the blank; declared phones follow in header order.
#[derive(Clone, Debug, PartialEq)]
pub struct Lexicon {
    phones: Vec<String>,
    tokens: Vec<String>,
    pronunciations: Vec<Vec<PhoneId>>,
    silence_phone: PhoneId,
    silence_prob: f64,
    token_index: HashMap<String, TokenId>,
}

const MAGIC: &[u8; 4] = b"LLEX";
pub const LEXICON_FORMAT_VERSION: u32 = 1;

impl Lexicon {
    /// Builds a lexicon from already-resolved parts.
    pub fn new(
        phones: Vec<String>,
        silence_phone: PhoneId,
        silence_prob: f64,
        entries: Vec<(String, Vec<PhoneId>)>,
    ) -> Result<Self> {
        let num_units = phones.len() + 1;
        if num_units < 2 {
            return Err(Error::TooFewPhones(num_units));
        }
        if silence_phone == BLANK || silence_phone as usize >= num_units {
            return Err(Error::InvalidParameter(format!(
                "silence phone {silence_phone} is not a declared phone"
            )));
        }
        if !(0.0..=1.0).contains(&silence_prob) {
            return Err(Error::InvalidParameter(format!(
                "silence probability {silence_prob} outside [0, 1]"
            )));
        }
        let mut lex = Self {
            phones: std::iter::once(BLANK_SYMBOL.to_string())
                .chain(phones)
                .collect(),
            tokens: Vec::new(),
            pronunciations: Vec::new(),
            silence_phone,
            silence_prob,
            token_index: HashMap::new(),
        };
        for (i, (token, pron)) in entries.into_iter().enumerate() {
            lex.insert(&token, pron).map_err(|message| Error::Lexicon {
                line: i + 1,
                message,
            })?;
        }
        Ok(lex)
    }

    fn insert(&mut self, token: &str, pron: Vec<PhoneId>) -> std::result::Result<(), String> {
        if pron.is_empty() {
            return Err(format!("token `{token}` has an empty pronunciation"));
        }
        if let Some(&p) = pron
            .iter()
            .find(|&&p| p == BLANK || p as usize >= self.phones.len())
        {
            return Err(format!("token `{token}` uses invalid phone id {p}"));
        }
        if let Some(&id) = self.token_index.get(token) {
            if self.pronunciations[id.index()] == pron {
                return Ok(());
            }
            return Err(format!("token `{token}` redefined with a different pronunciation"));
        }
        let id = TokenId(self.tokens.len() as u32);
        self.tokens.push(token.to_string());
        self.pronunciations.push(pron);
        self.token_index.insert(token.to_string(), id);
        Ok(())
    }

    /// Parses the text lexicon format:
    ///
    /// ```text
    /// phones: sil a b
    /// ab a b
    /// ```
    ///
    /// Optional `silence: <sym>` and `silence_prob: <p>` lines may follow the
    /// phone header. The silence phone defaults to `sil`. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .peekable();

        let (header_line, header) = lines.next().ok_or(Error::Lexicon {
            line: 1,
            message: "missing `phones:` header".into(),
        })?;
        let symbols = header.strip_prefix("phones:").ok_or_else(|| Error::Lexicon {
            line: header_line,
            message: "first line must be the `phones:` header".into(),
        })?;
        let phones: Vec<String> = symbols.split_whitespace().map(str::to_string).collect();
        if phones.is_empty() {
            return Err(Error::Lexicon {
                line: header_line,
                message: "phone header declares no phones".into(),
            });
        }
        let mut phone_ids = HashMap::new();
        for (i, p) in phones.iter().enumerate() {
            if p == BLANK_SYMBOL {
                return Err(Error::Lexicon {
                    line: header_line,
                    message: format!("`{BLANK_SYMBOL}` is reserved for the blank unit"),
                });
            }
            if phone_ids.insert(p.as_str(), i as PhoneId + 1).is_some() {
                return Err(Error::Lexicon {
                    line: header_line,
                    message: format!("phone `{p}` declared twice"),
                });
            }
        }

        let mut silence_symbol = DEFAULT_SILENCE_SYMBOL.to_string();
        let mut silence_line = header_line;
        let mut silence_prob = DEFAULT_SILENCE_PROB;
        while let Some(&(n, line)) = lines.peek() {
            if let Some(sym) = line.strip_prefix("silence:") {
                silence_symbol = sym.trim().to_string();
                silence_line = n;
            } else if let Some(p) = line.strip_prefix("silence_prob:") {
                silence_prob = p.trim().parse().map_err(|_| Error::Lexicon {
                    line: n,
                    message: format!("invalid silence probability `{}`", p.trim()),
                })?;
                if !(0.0..=1.0).contains(&silence_prob) {
                    return Err(Error::Lexicon {
                        line: n,
                        message: format!("silence probability {silence_prob} outside [0, 1]"),
                    });
                }
            } else {
                break;
            }
            lines.next();
        }
        let silence_phone = *phone_ids
            .get(silence_symbol.as_str())
            .ok_or_else(|| Error::Lexicon {
                line: silence_line,
                message: format!("silence phone `{silence_symbol}` is not declared"),
            })?;

        let mut lex = Self::new(phones.clone(), silence_phone, silence_prob, Vec::new())?;
        for (n, line) in lines {
            let mut fields = line.split_whitespace();
            let token = fields.next().expect("non-empty line");
            let pron = fields
                .map(|sym| {
                    phone_ids.get(sym).copied().ok_or_else(|| Error::Lexicon {
                        line: n,
                        message: format!("unknown phone `{sym}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            lex.insert(token, pron)
                .map_err(|message| Error::Lexicon { line: n, message })?;
        }
        Ok(lex)
    }

    /// Phone-unit count including blank.
    pub fn num_units(&self) -> usize {
        self.phones.len()
    }

    pub fn phone_symbol(&self, id: PhoneId) -> Option<&str> {
        self.phones.get(id as usize).map(String::as_str)
    }

    pub fn silence_phone(&self) -> PhoneId {
        self.silence_phone
    }

    pub fn silence_prob(&self) -> f64 {
        self.silence_prob
    }

    /// Non-blank, non-silence phones in id order.
    pub fn real_phones(&self) -> impl Iterator<Item = PhoneId> + '_ {
        (1..self.num_units() as PhoneId).filter(move |&p| p != self.silence_phone)
    }

    pub fn num_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token_id(&self, token: &str) -> Option<TokenId> {
        self.token_index.get(token).copied()
    }

    pub fn token_symbol(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id.index()).map(String::as_str)
    }

    pub fn pronunciation(&self, id: TokenId) -> Option<&[PhoneId]> {
        self.pronunciations.get(id.index()).map(Vec::as_slice)
    }

    /// Resolves whitespace-free token strings to ids.
    pub fn lookup_all<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<TokenId>> {
        tokens
            .iter()
            .map(|t| {
                self.token_id(t.as_ref())
                    .ok_or_else(|| Error::OutOfVocabulary(t.as_ref().to_string()))
            })
            .collect()
    }

    /// Concatenated pronunciation of a token sequence.
    pub fn expand(&self, tokens: &[TokenId]) -> Result<Vec<PhoneId>> {
        let mut phones = Vec::new();
        for &t in tokens {
            let pron = self.pronunciation(t).ok_or(Error::UnknownTokenId(t.0))?;
            phones.extend_from_slice(pron);
        }
        Ok(phones)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        fn put_str<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
            w.write_all(&(s.len() as u32).to_le_bytes())?;
            w.write_all(s.as_bytes())
        }
        w.write_all(MAGIC)?;
        w.write_all(&LEXICON_FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&self.silence_prob.to_le_bytes())?;
        w.write_all(&self.silence_phone.to_le_bytes())?;
        w.write_all(&(self.phones.len() as u32 - 1).to_le_bytes())?;
        for p in &self.phones[1..] {
            put_str(&mut w, p)?;
        }
        w.write_all(&(self.tokens.len() as u32).to_le_bytes())?;
        for (tok, pron) in self.tokens.iter().zip(&self.pronunciations) {
            put_str(&mut w, tok)?;
            w.write_all(&(pron.len() as u32).to_le_bytes())?;
            for p in pron {
                w.write_all(&p.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        fn get_str(cur: &mut ByteCursor<'_>) -> Result<String> {
            let n = cur.u32()? as usize;
            String::from_utf8(cur.take(n)?.to_vec())
                .map_err(|_| Error::Format("lexicon string is not UTF-8".into()))
        }
        let mut cur = ByteCursor::new(bytes);
        if cur.take(4)? != MAGIC {
            return Err(Error::Format("missing LLEX magic".into()));
        }
        let version = cur.u32()?;
        if version != LEXICON_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                kind: "LLEX",
                found: version,
                expected: LEXICON_FORMAT_VERSION,
            });
        }
        let silence_prob = cur.f64()?;
        let silence_phone = cur.u32()?;
        let num_phones = cur.u32()? as usize;
        let phones = (0..num_phones)
            .map(|_| get_str(&mut cur))
            .collect::<Result<Vec<_>>>()?;
        let num_tokens = cur.u32()? as usize;
        let mut entries = Vec::with_capacity(num_tokens);
        for _ in 0..num_tokens {
            let tok = get_str(&mut cur)?;
            let n = cur.u32()? as usize;
            let pron = (0..n).map(|_| cur.u32()).collect::<Result<Vec<_>>>()?;
            entries.push((tok, pron));
        }
        if cur.remaining() != 0 {
            return Err(Error::Format("trailing bytes after lexicon".into()));
        }
        Self::new(phones, silence_phone, silence_prob, entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_header_and_entry() {
        let lex = Lexicon::parse("phones: sil a b\nab a b\n").unwrap();
        assert_eq!(lex.num_units(), 4);
        assert_eq!(lex.silence_phone(), 1);
        let ab = lex.token_id("ab").unwrap();
        assert_eq!(lex.pronunciation(ab).unwrap(), &[2, 3]);
        assert_eq!(lex.silence_prob(), 0.5);
        assert_eq!(lex.real_phones().collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn empty_pronunciation_is_an_error() {
        let err = Lexicon::parse("phones: sil a\nx\n").unwrap_err();
        assert!(matches!(err, Error::Lexicon { line: 2, .. }), "{err}");
    }

    #[test]
    fn identical_duplicate_is_accepted_once() {
        let lex = Lexicon::parse("phones: sil a\nx a\nx a\n").unwrap();
        assert_eq!(lex.num_tokens(), 1);
    }

    #[test]
    fn conflicting_duplicate_is_rejected() {
        let err = Lexicon::parse("phones: sil a b\nx a\nx b\n").unwrap_err();
        assert!(matches!(err, Error::Lexicon { line: 3, .. }), "{err}");
    }

    #[test]
    fn unknown_phone_names_the_line() {
        let err = Lexicon::parse("phones: sil a\n\nx a\ny q\n").unwrap_err();
        match err {
            Error::Lexicon { line, message } => {
                assert_eq!(line, 4);
                assert!(message.contains('q'));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_header_is_rejected() {
        assert!(Lexicon::parse("x a\n").is_err());
        assert!(Lexicon::parse("").is_err());
        assert!(Lexicon::parse("phones: a b\nx a\n").is_err(), "no silence phone");
    }

    #[test]
    fn optional_silence_lines() {
        let lex =
            Lexicon::parse("phones: a SIL\nsilence: SIL\nsilence_prob: 0.25\nx a\n").unwrap();
        assert_eq!(lex.silence_phone(), 2);
        assert_eq!(lex.silence_prob(), 0.25);
    }

    #[test]
    fn binary_round_trip() {
        let lex = Lexicon::parse("phones: sil a b\nab a b\nba b a\nq a\n").unwrap();
        let bytes = lex.to_bytes().unwrap();
        let back = Lexicon::from_bytes(&bytes).unwrap();
        assert_eq!(back, lex);
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }
}
