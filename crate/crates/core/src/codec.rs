//! Token encoding of reindexed SENTs and SETs, and the way back.
//!
//! Unattributed tuples are written `v < u1 .. up >`, trails are concatenated
//! and segments joined with `/`. Attributed tuples become
//! `v L(v) < e1 u1 .. ep up >` with the trail-edge label between the `>` of a
//! tuple and the head of the next one. SET sequences are bare node tokens
//! with `/` between segments. Every sequence is wrapped in BOS/EOS.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::grammar::{DecoderState, SetDecoderState, TokenGrammar, Violation};
use crate::graph::{edge_key, Graph};
use crate::rng::Draw;
use crate::sent::{reconstruct, reindex_with_map, sample_sent, NbTuple, Relabeling, Sent};
use crate::set::{sample_set, SegmentedTrail};
use crate::vocab::{Encoding, Token, TokenSeq, Vocab, BOS, CLOSE, EOS, OPEN, SEP};

/// Labels keyed by reindexed (1-based) node ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelMaps {
    /// `node[i]` labels node `i + 1`.
    pub node: Vec<u32>,
    /// Keyed by `(min, max)`.
    pub edge: BTreeMap<(usize, usize), u32>,
}

impl LabelMaps {
    /// Carries `g`'s labels over to the ids assigned by reindexing.
    pub fn from_graph(g: &Graph, relabeling: &Relabeling) -> Result<LabelMaps> {
        let node_labels = g
            .node_labels()
            .ok_or_else(|| Error::input("attributed encoding needs node labels"))?;
        let node = relabeling.order.iter().map(|&v| node_labels[v]).collect();
        let mut edge = BTreeMap::new();
        for (u, v) in g.edges() {
            let label = g
                .edge_label(u, v)
                .ok_or_else(|| Error::input(format!("edge ({u}, {v}) has no label")))?;
            edge.insert(edge_key(relabeling.new_id[&u], relabeling.new_id[&v]), label);
        }
        Ok(LabelMaps { node, edge })
    }

    fn node_label(&self, v: usize) -> Result<u32> {
        self.node
            .get(v.wrapping_sub(1))
            .copied()
            .ok_or_else(|| Error::input(format!("node {v} has no label")))
    }

    fn edge_label(&self, u: usize, v: usize) -> Result<u32> {
        self.edge
            .get(&edge_key(u, v))
            .copied()
            .ok_or_else(|| Error::input(format!("edge ({u}, {v}) has no label")))
    }
}

/// Result of parsing a token sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub sent: Sent,
    pub labels: Option<LabelMaps>,
    /// Lenient mode cut an invalid or unterminated suffix.
    pub truncated: bool,
    /// Number of tokens (BOS included) that made it into `sent`.
    pub consumed: usize,
}

/// Tokenizes a reindexed SENT. Labels switch on the attributed layout.
pub fn tokenize(s: &Sent, vocab: &Vocab, labels: Option<&LabelMaps>) -> Result<TokenSeq> {
    if s.tuple_count() == 0 {
        return Err(Error::input("cannot tokenize an empty SENT"));
    }
    if labels.is_some() != vocab.is_attributed() {
        return Err(Error::input("label maps must be given exactly when the vocabulary is attributed"));
    }
    let mut out = Vec::with_capacity(3 * s.tuple_count() + 2 * s.nbset_total() + 2 * s.segments.len() + 1);
    out.push(BOS);
    for (si, seg) in s.segments.iter().enumerate() {
        if si > 0 {
            out.push(SEP);
        }
        for (i, t) in seg.iter().enumerate() {
            if let (Some(l), true) = (labels, i > 0) {
                out.push(vocab.edge_label_token(l.edge_label(seg[i - 1].node, t.node)?)?);
            }
            out.push(vocab.node_token(t.node)?);
            if let Some(l) = labels {
                out.push(vocab.node_label_token(l.node_label(t.node)?)?);
            }
            out.push(OPEN);
            for &u in &t.nbset {
                if let Some(l) = labels {
                    out.push(vocab.edge_label_token(l.edge_label(t.node, u)?)?);
                }
                out.push(vocab.node_token(u)?);
            }
            out.push(CLOSE);
        }
    }
    out.push(EOS);
    replay_checked(DecoderState::new(*vocab), &out)?;
    Ok(TokenSeq::new(out))
}

/// Tokenizes a reindexed SET.
pub fn tokenize_set(trail: &SegmentedTrail, vocab: &Vocab) -> Result<TokenSeq> {
    if trail.segments.iter().all(Vec::is_empty) {
        return Err(Error::input("cannot tokenize an empty SET"));
    }
    let mut out = vec![BOS];
    for (si, seg) in trail.segments.iter().enumerate() {
        if si > 0 {
            out.push(SEP);
        }
        for &v in seg {
            out.push(vocab.node_token(v)?);
        }
    }
    out.push(EOS);
    replay_checked(SetDecoderState::new(*vocab), &out)?;
    Ok(TokenSeq::new(out))
}

fn replay_checked<G: TokenGrammar>(st: G, tokens: &[u32]) -> Result<()> {
    crate::grammar::replay(st, tokens).map(|_| ()).map_err(|(position, violation)| {
        Error::Contract(format!(
            "trail is not in reindexed form: token {position} rejected ({violation})"
        ))
    })
}

/// Runs the acceptor as far as it goes. Returns the number of tokens consumed
/// through the last complete unit (EOS included when reached), and the first
/// violation, if any.
fn scan<G: TokenGrammar>(mut st: G, tokens: &[u32]) -> (usize, Option<(usize, Violation)>) {
    if tokens.first() != Some(&BOS) {
        return (0, Some((0, Violation::MissingBos)));
    }
    let mut boundary = 0;
    for (i, &t) in tokens.iter().enumerate().skip(1) {
        if let Err(v) = st.step(t) {
            return (boundary, Some((i, v)));
        }
        if st.is_done() {
            if i + 1 < tokens.len() {
                return (i + 1, Some((i + 1, Violation::AfterDone(tokens[i + 1]))));
            }
            return (i + 1, None);
        }
        if st.at_boundary() {
            boundary = i + 1;
        }
    }
    (boundary, Some((tokens.len(), Violation::Unterminated)))
}

fn checked_prefix<G: TokenGrammar>(st: G, tokens: &[u32], lenient: bool) -> Result<(usize, bool)> {
    match scan(st, tokens) {
        (end, None) => Ok((end, false)),
        (end, Some(_)) if lenient && end > 0 => Ok((end, true)),
        (_, Some((position, violation))) => Err(Error::Parse { position, violation }),
    }
}

/// Strict parse of a SENT token sequence.
pub fn detokenize(t: &TokenSeq, vocab: &Vocab) -> Result<Decoded> {
    parse_sent(t, vocab, false)
}

/// Parses the longest prefix that ends on a complete tuple, flagging the cut.
pub fn detokenize_lenient(t: &TokenSeq, vocab: &Vocab) -> Result<Decoded> {
    parse_sent(t, vocab, true)
}

fn parse_sent(t: &TokenSeq, vocab: &Vocab, lenient: bool) -> Result<Decoded> {
    let (end, truncated) = checked_prefix(DecoderState::new(*vocab), &t.tokens, lenient)?;
    let attributed = vocab.is_attributed();
    let mut labels = LabelMaps::default();
    let mut segments: Vec<Vec<NbTuple>> = vec![Vec::new()];
    let mut in_nbset = false;
    let mut pending_edge: Option<u32> = None;
    for &tok in &t.tokens[1..end] {
        let seg = segments.last_mut().expect("at least one segment");
        match vocab.classify(tok).expect("validated by the grammar") {
            Token::Node(x) if in_nbset => {
                let head = seg.last_mut().expect("nbset follows a head");
                if let Some(l) = pending_edge.take() {
                    labels.edge.insert(edge_key(head.node, x), l);
                }
                head.nbset.push(x);
            }
            Token::Node(x) => {
                if let Some(l) = pending_edge.take() {
                    let prev = seg.last().expect("trail label follows a tuple").node;
                    labels.edge.insert(edge_key(prev, x), l);
                }
                seg.push(NbTuple::bare(x));
            }
            Token::NodeLabel(l) => labels.node.push(l),
            Token::EdgeLabel(l) => pending_edge = Some(l),
            Token::Open => in_nbset = true,
            Token::Close => in_nbset = false,
            Token::Sep => segments.push(Vec::new()),
            Token::Eos => {}
            Token::Pad | Token::Bos => unreachable!("rejected by the grammar"),
        }
    }
    Ok(Decoded {
        sent: Sent::new(segments),
        labels: attributed.then_some(labels),
        truncated,
        consumed: end,
    })
}

/// Parses a SET token sequence into its trails (as a SENT with empty nbsets).
pub fn detokenize_set(t: &TokenSeq, vocab: &Vocab, lenient: bool) -> Result<Decoded> {
    let (end, truncated) = checked_prefix(SetDecoderState::new(*vocab), &t.tokens, lenient)?;
    let mut segments: Vec<Vec<usize>> = vec![Vec::new()];
    for &tok in &t.tokens[1..end] {
        match vocab.classify(tok).expect("validated by the grammar") {
            Token::Node(x) => segments.last_mut().unwrap().push(x),
            Token::Sep => segments.push(Vec::new()),
            _ => {}
        }
    }
    Ok(Decoded {
        sent: SegmentedTrail::new(segments).to_sent(),
        labels: None,
        truncated,
        consumed: end,
    })
}

/// Samples one trail of `g` and tokenizes it.
pub fn encode_graph<R: Draw + ?Sized>(
    g: &Graph,
    vocab: &Vocab,
    encoding: Encoding,
    rng: &mut R,
) -> Result<TokenSeq> {
    if g.n() > vocab.max_nodes {
        return Err(Error::Capacity(format!(
            "graph has {} nodes, vocabulary allows {}",
            g.n(),
            vocab.max_nodes
        )));
    }
    match encoding {
        Encoding::Sent => {
            let s = sample_sent(g, rng)?;
            let (s, relabeling) = reindex_with_map(&s)?;
            let labels = if vocab.is_attributed() {
                Some(LabelMaps::from_graph(g, &relabeling)?)
            } else {
                None
            };
            tokenize(&s, vocab, labels.as_ref())
        }
        Encoding::Set => {
            if vocab.is_attributed() {
                return Err(Error::input("the SET encoding is unattributed"));
            }
            let trail = sample_set(g, rng)?.reindexed();
            tokenize_set(&trail, vocab)
        }
    }
}

/// Parses a token sequence and rebuilds its graph. Node `i` of the graph is
/// token node `i + 1`.
pub fn decode_graph(t: &TokenSeq, vocab: &Vocab, encoding: Encoding, lenient: bool) -> Result<(Graph, Decoded)> {
    let decoded = match encoding {
        Encoding::Sent => parse_sent(t, vocab, lenient)?,
        Encoding::Set => detokenize_set(t, vocab, lenient)?,
    };
    let mut g = reconstruct(&decoded.sent)?;
    if let Some(labels) = &decoded.labels {
        g.set_node_labels(labels.node.clone())?;
        g.set_edge_labels(labels.edge.iter().map(|(&(u, v), &l)| ((u - 1, v - 1), l)).collect())?;
    }
    Ok((g, decoded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sent::reindex;
    use crate::vocab::FIRST_NODE;

    fn figure_sent() -> Sent {
        Sent::new(vec![
            vec![NbTuple::bare(0), NbTuple::bare(1), NbTuple::bare(2)],
            vec![NbTuple::new(4, vec![1]), NbTuple::bare(3)],
        ])
    }

    fn n(i: u32) -> u32 {
        FIRST_NODE + i - 1
    }

    #[test]
    fn figure_tokens() {
        let v = Vocab::new(8);
        let s = reindex(&figure_sent()).unwrap();
        let t = tokenize(&s, &v, None).unwrap();
        let expected = vec![
            BOS, n(1), OPEN, CLOSE, n(2), OPEN, CLOSE, n(3), OPEN, CLOSE, SEP, n(4), OPEN, n(2), CLOSE,
            n(5), OPEN, CLOSE, EOS,
        ];
        assert_eq!(t.tokens, expected);
        assert_eq!(t.content().len(), 17);
        let d = detokenize(&t, &v).unwrap();
        assert_eq!(d.sent, s);
        assert!(!d.truncated);
    }

    #[test]
    fn single_node_and_empty() {
        let v = Vocab::new(4);
        let t = tokenize(&Sent::new(vec![vec![NbTuple::bare(1)]]), &v, None).unwrap();
        assert_eq!(t.tokens, vec![BOS, n(1), OPEN, CLOSE, EOS]);
        let err = detokenize(&TokenSeq::new(vec![BOS, EOS]), &v).unwrap_err();
        assert!(matches!(err, Error::Parse { position: 1, .. }));
        assert!(tokenize(&Sent::default(), &v, None).is_err());
    }

    #[test]
    fn attributed_path() {
        let v = Vocab::attributed(4, 2, 1);
        let s = Sent::new(vec![vec![NbTuple::bare(1), NbTuple::bare(2)]]);
        let labels = LabelMaps { node: vec![0, 1], edge: [((1, 2), 0)].into_iter().collect() };
        let t = tokenize(&s, &v, Some(&labels)).unwrap();
        let (a, b, x) = (v.node_label_token(0).unwrap(), v.node_label_token(1).unwrap(), v.edge_label_token(0).unwrap());
        assert_eq!(t.tokens, vec![BOS, n(1), a, OPEN, CLOSE, x, n(2), b, OPEN, CLOSE, EOS]);
        let d = detokenize(&t, &v).unwrap();
        assert_eq!(d.sent, s);
        assert_eq!(d.labels.unwrap(), labels);
    }

    #[test]
    fn non_reindexed_input_is_rejected() {
        let v = Vocab::new(8);
        assert!(matches!(tokenize(&figure_sent(), &v, None), Err(Error::Input(_) | Error::Capacity(_) | Error::Contract(_))));
        let skipped = Sent::new(vec![vec![NbTuple::bare(2)]]);
        assert!(matches!(tokenize(&skipped, &v, None), Err(Error::Contract(_))));
        assert!(matches!(tokenize(&Sent::new(vec![vec![NbTuple::bare(9)]]), &v, None), Err(Error::Capacity(_))));
    }

    #[test]
    fn lenient_cuts_to_last_tuple() {
        let v = Vocab::new(8);
        let t = TokenSeq::new(vec![BOS, n(1), OPEN, CLOSE, n(2), OPEN, CLOSE, n(2), OPEN]);
        assert!(detokenize(&t, &v).is_err());
        let d = detokenize_lenient(&t, &v).unwrap();
        assert!(d.truncated);
        assert_eq!(d.consumed, 7);
        assert_eq!(d.sent, Sent::new(vec![vec![NbTuple::bare(1), NbTuple::bare(2)]]));
        assert!(detokenize_lenient(&TokenSeq::new(vec![BOS, n(1)]), &v).is_err());
    }

    #[test]
    fn strict_reports_trailing_tokens() {
        let v = Vocab::new(4);
        let t = TokenSeq::new(vec![BOS, n(1), OPEN, CLOSE, EOS, n(2)]);
        match detokenize(&t, &v) {
            Err(Error::Parse { position: 5, violation: Violation::AfterDone(_) }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn set_round_trip_has_no_brackets() {
        let v = Vocab::new(8);
        let g = Graph::cycle(5);
        let mut rng = crate::rng::stream_rng(3, 0);
        let t = encode_graph(&g, &v, Encoding::Set, &mut rng).unwrap();
        assert!(!t.tokens.contains(&OPEN) && !t.tokens.contains(&CLOSE));
        let (h, _) = decode_graph(&t, &v, Encoding::Set, false).unwrap();
        assert!(crate::canon::are_isomorphic(&g, &h));
    }
}
