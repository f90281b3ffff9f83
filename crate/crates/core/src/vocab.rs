//! Token-id layout.
//!
//! | id                         | token                       |
//! |----------------------------|-----------------------------|
//! | 0                          | PAD                         |
//! | 1                          | BOS                         |
//! | 2                          | EOS                         |
//! | 3                          | `/` segment break           |
//! | 4                          | `<` nbset open              |
//! | 5                          | `>` nbset close             |
//! | 6 ..= 5 + max_nodes        | node indices 1..=max_nodes  |
//! | then `node_label_count`    | node labels                 |
//! | then `edge_label_count`    | edge labels                 |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
pub const SEP: u32 = 3;
pub const OPEN: u32 = 4;
pub const CLOSE: u32 = 5;
pub const FIRST_NODE: u32 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Vocab {
    pub max_nodes: usize,
    pub node_label_count: usize,
    pub edge_label_count: usize,
}

/// Symbolic view of a token id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Token {
    Pad,
    Bos,
    Eos,
    Sep,
    Open,
    Close,
    /// 1-based node index.
    Node(usize),
    NodeLabel(u32),
    EdgeLabel(u32),
}

impl Vocab {
    pub fn new(max_nodes: usize) -> Self {
        Vocab { max_nodes, node_label_count: 0, edge_label_count: 0 }
    }

    pub fn attributed(max_nodes: usize, node_label_count: usize, edge_label_count: usize) -> Self {
        Vocab { max_nodes, node_label_count, edge_label_count }
    }

    pub fn size(&self) -> usize {
        FIRST_NODE as usize + self.max_nodes + self.node_label_count + self.edge_label_count
    }

    pub fn is_attributed(&self) -> bool {
        self.node_label_count > 0
    }

    pub fn node_token(&self, node: usize) -> Result<u32> {
        if node == 0 || node > self.max_nodes {
            return Err(Error::Capacity(format!(
                "node index {node} outside vocabulary range 1..={}",
                self.max_nodes
            )));
        }
        Ok(FIRST_NODE + node as u32 - 1)
    }

    pub fn node_label_token(&self, label: u32) -> Result<u32> {
        if label as usize >= self.node_label_count {
            return Err(Error::Capacity(format!("node label {label} outside vocabulary")));
        }
        Ok(FIRST_NODE + (self.max_nodes as u32) + label)
    }

    pub fn edge_label_token(&self, label: u32) -> Result<u32> {
        if label as usize >= self.edge_label_count {
            return Err(Error::Capacity(format!("edge label {label} outside vocabulary")));
        }
        Ok(FIRST_NODE + (self.max_nodes + self.node_label_count) as u32 + label)
    }

    /// First id of the node-label block.
    pub fn node_label_base(&self) -> u32 {
        FIRST_NODE + self.max_nodes as u32
    }

    /// First id of the edge-label block.
    pub fn edge_label_base(&self) -> u32 {
        self.node_label_base() + self.node_label_count as u32
    }

    pub fn classify(&self, id: u32) -> Option<Token> {
        let nl = self.node_label_base();
        let el = self.edge_label_base();
        Some(match id {
            PAD => Token::Pad,
            BOS => Token::Bos,
            EOS => Token::Eos,
            SEP => Token::Sep,
            OPEN => Token::Open,
            CLOSE => Token::Close,
            x if x < nl => Token::Node((x - FIRST_NODE) as usize + 1),
            x if x < el => Token::NodeLabel(x - nl),
            x if (x as usize) < self.size() => Token::EdgeLabel(x - el),
            _ => return None,
        })
    }

    /// `key=value` lines recorded next to token corpora.
    pub fn to_header(&self, encoding: Encoding) -> String {
        format!(
            "max_nodes={}\nnode_labels={}\nedge_labels={}\nencoding={}\nvocab_size={}\n",
            self.max_nodes,
            self.node_label_count,
            self.edge_label_count,
            encoding,
            self.size()
        )
    }

    pub fn from_header(text: &str) -> Result<(Vocab, Encoding)> {
        let mut vocab = Vocab::new(0);
        let mut encoding = Encoding::Sent;
        let mut have_nodes = false;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::input(format!("malformed vocab header line `{line}`")))?;
            let num = || {
                value
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::input(format!("bad value in vocab header line `{line}`")))
            };
            match key.trim() {
                "max_nodes" => {
                    vocab.max_nodes = num()?;
                    have_nodes = true;
                }
                "node_labels" => vocab.node_label_count = num()?,
                "edge_labels" => vocab.edge_label_count = num()?,
                "encoding" => encoding = value.trim().parse()?,
                "vocab_size" => {}
                other => return Err(Error::input(format!("unknown vocab header key `{other}`"))),
            }
        }
        if !have_nodes {
            return Err(Error::input("vocab header lacks max_nodes"));
        }
        Ok((vocab, encoding))
    }
}

/// Which trail family a token corpus encodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    #[default]
    Sent,
    Set,
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::Sent => "sent",
            Encoding::Set => "set",
        })
    }
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sent" => Ok(Encoding::Sent),
            "set" => Ok(Encoding::Set),
            other => Err(Error::input(format!("unknown encoding `{other}`"))),
        }
    }
}

/// A token sequence, BOS first and EOS last when complete.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TokenSeq {
    pub tokens: Vec<u32>,
}

impl TokenSeq {
    pub fn new(tokens: Vec<u32>) -> Self {
        TokenSeq { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens strictly between BOS and EOS.
    pub fn content(&self) -> &[u32] {
        let t = &self.tokens[..];
        let t = t.strip_prefix(&[BOS]).unwrap_or(t);
        t.strip_suffix(&[EOS]).unwrap_or(t)
    }

    /// Whitespace-separated ids on one line.
    pub fn to_line(&self) -> String {
        let mut out = String::with_capacity(self.tokens.len() * 3);
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&t.to_string());
        }
        out
    }

    pub fn from_line(line: &str) -> Result<Self> {
        line.split_whitespace()
            .map(|w| w.parse::<u32>().map_err(|_| Error::input(format!("bad token id `{w}`"))))
            .collect::<Result<Vec<_>>>()
            .map(TokenSeq::new)
    }
}

/// Reads a token corpus: one sequence per non-empty line.
pub fn read_corpus(text: &str) -> Result<Vec<TokenSeq>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(TokenSeq::from_line)
        .collect()
}

pub fn write_corpus(seqs: &[TokenSeq]) -> String {
    let mut out = String::new();
    for s in seqs {
        out.push_str(&s.to_line());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_bit_exact() {
        let v = Vocab::attributed(4, 2, 3);
        assert_eq!(v.size(), 6 + 4 + 2 + 3);
        assert_eq!(v.node_token(1).unwrap(), 6);
        assert_eq!(v.node_token(4).unwrap(), 9);
        assert_eq!(v.node_label_token(0).unwrap(), 10);
        assert_eq!(v.edge_label_token(2).unwrap(), 14);
        assert!(v.node_token(5).is_err());
        assert!(v.node_token(0).is_err());
        for id in 0..v.size() as u32 {
            let tok = v.classify(id).unwrap();
            let back = match tok {
                Token::Pad => PAD,
                Token::Bos => BOS,
                Token::Eos => EOS,
                Token::Sep => SEP,
                Token::Open => OPEN,
                Token::Close => CLOSE,
                Token::Node(n) => v.node_token(n).unwrap(),
                Token::NodeLabel(l) => v.node_label_token(l).unwrap(),
                Token::EdgeLabel(l) => v.edge_label_token(l).unwrap(),
            };
            assert_eq!(back, id);
        }
        assert_eq!(v.classify(v.size() as u32), None);
    }

    #[test]
    fn header_round_trip() {
        let v = Vocab::attributed(30, 4, 2);
        let text = v.to_header(Encoding::Set);
        assert_eq!(Vocab::from_header(&text).unwrap(), (v, Encoding::Set));
        assert!(Vocab::from_header("node_labels=1").is_err());
    }
}
