use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graphs::{Lexicon, TokenId};

pub const SOS: &str = "<sos>";
pub const EOS: &str = "<eos>";
pub const BLK: &str = "<blk>";

/// Ordered output-token set. Reserved symbols never appear as tokens.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut vocab = Self {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        for tok in tokens {
            let tok = tok.into();
            if [SOS, EOS, BLK].contains(&tok.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "`{tok}` is a reserved symbol"
                )));
            }
            let id = TokenId(vocab.tokens.len() as u32);
            if vocab.index.insert(tok.clone(), id).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate token `{tok}`")));
            }
            vocab.tokens.push(tok);
        }
        Ok(vocab)
    }

    /// Token ids match the lexicon's, so MMI scoring can map tokens to phones.
    pub fn from_lexicon(lex: &Lexicon) -> Result<Self> {
        Self::new(lex.tokens().iter().cloned())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = TokenId> {
        (0..self.tokens.len() as u32).map(TokenId)
    }

    pub fn symbol(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id.index()).map(String::as_str)
    }

    pub fn id(&self, symbol: &str) -> Option<TokenId> {
        self.index.get(symbol).copied()
    }

    pub fn symbols(&self, ids: &[TokenId]) -> Result<Vec<String>> {
        ids.iter()
            .map(|&id| {
                self.symbol(id)
                    .map(str::to_string)
                    .ok_or(Error::UnknownTokenId(id.0))
            })
            .collect()
    }

    pub fn ids_of<S: AsRef<str>>(&self, symbols: &[S]) -> Result<Vec<TokenId>> {
        symbols
            .iter()
            .map(|s| {
                self.id(s.as_ref())
                    .ok_or_else(|| Error::OutOfVocabulary(s.as_ref().to_string()))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_symbols_are_rejected() {
        assert!(Vocabulary::new(["a", "<eos>"]).is_err());
        assert!(Vocabulary::new(["a", "a"]).is_err());
        let v = Vocabulary::new(["a", "b"]).unwrap();
        assert_eq!(v.id("b"), Some(TokenId(1)));
        assert_eq!(v.symbols(&[TokenId(1), TokenId(0)]).unwrap(), vec!["b", "a"]);
    }
}
