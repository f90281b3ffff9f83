//! Incremental acceptors for tokenized trails.
//!
//! [`DecoderState`] tracks a SENT token stream and answers which tokens may
//! come next; [`SetDecoderState`] does the same for the neighborhood-free SET
//! encoding. Both are plain values: cloning one forks a decoding stream.
//!
//! SENT rules enforced here:
//! - a tuple head is always a fresh node, numbered `max_node_used + 1`;
//! - `<` follows a node (or its label), and `>` closes every nbset;
//! - nbset members are visited nodes, strictly ascending, never an endpoint
//!   of an edge that was already generated;
//! - EOS only after a completed tuple, and `/` only when a fresh node can
//!   still be named.

use std::collections::HashSet;

use thiserror::Error;

use crate::graph::edge_key;
use crate::vocab::{Token, Vocab, BOS, CLOSE, EOS, OPEN, SEP};

/// A rejected token, with a stable machine-readable code.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("E_MISSING_BOS: sequence does not start with BOS")]
    MissingBos,
    #[error("E_OUT_OF_VOCAB: token {0} is not a legal symbol")]
    OutOfVocab(u32),
    #[error("E_AFTER_DONE: token {0} after EOS")]
    AfterDone(u32),
    #[error("E_UNEXPECTED: token {token} not allowed in state {mode:?}")]
    Unexpected { token: u32, mode: Mode },
    #[error("E_GAP_INDEX: expected fresh node {expected}, got {found}")]
    GapIndex { expected: usize, found: usize },
    #[error("E_REPEAT_NODE: node {0} already heads a tuple")]
    RepeatNode(usize),
    #[error("E_NOT_VISITED: nbset member {member} of node {node} not visited yet")]
    NotVisited { node: usize, member: usize },
    #[error("E_ORDER: nbset member {member} does not follow {last}")]
    Order { member: usize, last: usize },
    #[error("E_DUP_EDGE: edge ({0}, {1}) already generated")]
    DupEdge(usize, usize),
    #[error("E_SELF_LOOP: node {0} cannot be adjacent to itself")]
    SelfLoop(usize),
    #[error("E_CAPACITY: no node index left (max {0})")]
    Capacity(usize),
    #[error("E_UNTERMINATED: sequence ended before EOS")]
    Unterminated,
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::MissingBos => "E_MISSING_BOS",
            Violation::OutOfVocab(_) => "E_OUT_OF_VOCAB",
            Violation::AfterDone(_) => "E_AFTER_DONE",
            Violation::Unexpected { .. } => "E_UNEXPECTED",
            Violation::GapIndex { .. } => "E_GAP_INDEX",
            Violation::RepeatNode(_) => "E_REPEAT_NODE",
            Violation::NotVisited { .. } => "E_NOT_VISITED",
            Violation::Order { .. } => "E_ORDER",
            Violation::DupEdge(..) => "E_DUP_EDGE",
            Violation::SelfLoop(_) => "E_SELF_LOOP",
            Violation::Capacity(_) => "E_CAPACITY",
            Violation::Unterminated => "E_UNTERMINATED",
        }
    }
}

/// Common interface of the SENT and SET acceptors.
pub trait TokenGrammar: Clone {
    fn vocab(&self) -> &Vocab;

    /// Sorted ids of every token that keeps the stream parseable.
    fn legal_next(&self) -> Vec<u32>;

    fn step(&mut self, tok: u32) -> Result<(), Violation>;

    fn is_done(&self) -> bool;

    /// True right after a complete unit (tuple or trail segment), i.e. where
    /// a truncated stream still denotes a graph.
    fn at_boundary(&self) -> bool;

    fn stepped(&self, tok: u32) -> Result<Self, Violation> {
        let mut next = self.clone();
        next.step(tok)?;
        Ok(next)
    }

    /// Sets every illegal entry to `-inf`; legal entries are left unchanged.
    fn mask_logits(&self, logits: &mut [f64]) {
        let legal = self.legal_next();
        let mut j = 0;
        for (i, x) in logits.iter_mut().enumerate() {
            if j < legal.len() && legal[j] as usize == i {
                j += 1;
            } else {
                *x = f64::NEG_INFINITY;
            }
        }
    }
}

/// Feeds `tokens` (starting with BOS) into `state`, returning the failing
/// position on the first violation.
pub fn replay<G: TokenGrammar>(mut state: G, tokens: &[u32]) -> Result<G, (usize, Violation)> {
    match tokens.first() {
        Some(&BOS) => {}
        _ => return Err((0, Violation::MissingBos)),
    }
    for (i, &t) in tokens.iter().enumerate().skip(1) {
        state.step(t).map_err(|v| (i, v))?;
    }
    Ok(state)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// A fresh tuple head must follow; `trail` says whether it extends the
    /// current segment.
    ExpectNode { trail: bool },
    ExpectNodeLabel,
    ExpectNbOpen,
    /// Inside `< ... >`: a member (or an edge label when attributed) or `>`.
    InNbSet,
    /// Attributed only: the member that follows an nbset edge label.
    ExpectNbNode,
    /// After `>`: continue the trail, break with `/`, or stop.
    AfterNbClose,
    Done,
}

/// Decoding state for SENT token streams, positioned after BOS.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecoderState {
    vocab: Vocab,
    mode: Mode,
    max_node_used: usize,
    current_node: usize,
    trail_pred: Option<usize>,
    nbset_last: usize,
    used_edges: HashSet<(usize, usize)>,
}

impl DecoderState {
    pub fn new(vocab: Vocab) -> Self {
        DecoderState {
            vocab,
            mode: Mode::ExpectNode { trail: false },
            max_node_used: 0,
            current_node: 0,
            trail_pred: None,
            nbset_last: 0,
            used_edges: HashSet::new(),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn max_node_used(&self) -> usize {
        self.max_node_used
    }

    pub fn current_node(&self) -> usize {
        self.current_node
    }

    pub fn attributed(&self) -> bool {
        self.vocab.is_attributed()
    }

    fn can_name_fresh(&self) -> bool {
        self.max_node_used < self.vocab.max_nodes
    }

    fn member_ok(&self, u: usize) -> bool {
        u > self.nbset_last
            && u < self.current_node
            && !self.used_edges.contains(&edge_key(u, self.current_node))
    }

    fn members(&self) -> impl Iterator<Item = usize> + '_ {
        (self.nbset_last + 1..self.current_node).filter(move |&u| self.member_ok(u))
    }

    fn fresh_token(&self) -> u32 {
        self.vocab
            .node_token(self.max_node_used + 1)
            .expect("capacity checked by caller")
    }

    fn check_member(&self, u: usize) -> Result<(), Violation> {
        if u == self.current_node {
            return Err(Violation::SelfLoop(u));
        }
        if u > self.current_node {
            return Err(Violation::NotVisited { node: self.current_node, member: u });
        }
        if u <= self.nbset_last {
            return Err(Violation::Order { member: u, last: self.nbset_last });
        }
        if self.used_edges.contains(&edge_key(u, self.current_node)) {
            return Err(Violation::DupEdge(u, self.current_node));
        }
        Ok(())
    }
}

impl TokenGrammar for DecoderState {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn legal_next(&self) -> Vec<u32> {
        let v = &self.vocab;
        let node_labels = || (0..v.node_label_count as u32).map(move |l| v.node_label_base() + l);
        let edge_labels = || (0..v.edge_label_count as u32).map(move |l| v.edge_label_base() + l);
        let mut out = Vec::new();
        match self.mode {
            Mode::ExpectNode { .. } => {
                if self.can_name_fresh() {
                    out.push(self.fresh_token());
                }
            }
            Mode::ExpectNodeLabel => out.extend(node_labels()),
            Mode::ExpectNbOpen => out.push(OPEN),
            Mode::InNbSet => {
                out.push(CLOSE);
                if self.attributed() {
                    if self.members().next().is_some() {
                        out.extend(edge_labels());
                    }
                } else {
                    out.extend(self.members().map(|u| v.node_token(u).unwrap()));
                }
            }
            Mode::ExpectNbNode => out.extend(self.members().map(|u| v.node_token(u).unwrap())),
            Mode::AfterNbClose => {
                out.push(EOS);
                if self.can_name_fresh() {
                    out.push(SEP);
                    if self.attributed() {
                        out.extend(edge_labels());
                    } else {
                        out.push(self.fresh_token());
                    }
                }
            }
            Mode::Done => {}
        }
        out.sort_unstable();
        out
    }

    fn step(&mut self, tok: u32) -> Result<(), Violation> {
        let class = self.vocab.classify(tok).ok_or(Violation::OutOfVocab(tok))?;
        let unexpected = Violation::Unexpected { token: tok, mode: self.mode };
        match (self.mode, class) {
            (Mode::Done, _) => return Err(Violation::AfterDone(tok)),
            (_, Token::Pad | Token::Bos) => return Err(Violation::OutOfVocab(tok)),
            (Mode::ExpectNode { trail }, Token::Node(x)) => {
                let expected = self.max_node_used + 1;
                if x <= self.max_node_used {
                    return Err(Violation::RepeatNode(x));
                }
                if x != expected {
                    return Err(Violation::GapIndex { expected, found: x });
                }
                self.trail_pred = trail.then_some(self.current_node);
                if let Some(p) = self.trail_pred {
                    self.used_edges.insert(edge_key(p, x));
                }
                self.max_node_used = x;
                self.current_node = x;
                self.mode = if self.attributed() { Mode::ExpectNodeLabel } else { Mode::ExpectNbOpen };
            }
            (Mode::ExpectNodeLabel, Token::NodeLabel(_)) => self.mode = Mode::ExpectNbOpen,
            (Mode::ExpectNbOpen, Token::Open) => {
                self.nbset_last = 0;
                self.mode = Mode::InNbSet;
            }
            (Mode::InNbSet, Token::Close) => self.mode = Mode::AfterNbClose,
            (Mode::InNbSet, Token::EdgeLabel(_)) if self.attributed() => {
                if self.members().next().is_none() {
                    return Err(unexpected);
                }
                self.mode = Mode::ExpectNbNode;
            }
            (Mode::InNbSet, Token::Node(u)) if !self.attributed() => {
                self.check_member(u)?;
                self.used_edges.insert(edge_key(u, self.current_node));
                self.nbset_last = u;
            }
            (Mode::ExpectNbNode, Token::Node(u)) => {
                self.check_member(u)?;
                self.used_edges.insert(edge_key(u, self.current_node));
                self.nbset_last = u;
                self.mode = Mode::InNbSet;
            }
            (Mode::AfterNbClose, Token::Eos) => self.mode = Mode::Done,
            (Mode::AfterNbClose, Token::Sep) => {
                if !self.can_name_fresh() {
                    return Err(Violation::Capacity(self.vocab.max_nodes));
                }
                self.mode = Mode::ExpectNode { trail: false };
            }
            (Mode::AfterNbClose, Token::EdgeLabel(_)) if self.attributed() => {
                if !self.can_name_fresh() {
                    return Err(Violation::Capacity(self.vocab.max_nodes));
                }
                self.mode = Mode::ExpectNode { trail: true };
            }
            (Mode::AfterNbClose, Token::Node(_)) if !self.attributed() => {
                self.mode = Mode::ExpectNode { trail: true };
                return self.step(tok);
            }
            _ => return Err(unexpected),
        }
        Ok(())
    }

    fn is_done(&self) -> bool {
        self.mode == Mode::Done
    }

    fn at_boundary(&self) -> bool {
        self.mode == Mode::AfterNbClose
    }
}

/// Decoding state for SET token streams (node tokens and `/` only).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetDecoderState {
    vocab: Vocab,
    max_node_used: usize,
    /// Current trail end, or `None` at a segment start.
    current: Option<usize>,
    seg_len: usize,
    seg_started_fresh: bool,
    done: bool,
    used_edges: HashSet<(usize, usize)>,
    used_degree: Vec<usize>,
}

impl SetDecoderState {
    pub fn new(vocab: Vocab) -> Self {
        SetDecoderState {
            vocab,
            max_node_used: 0,
            current: None,
            seg_len: 0,
            seg_started_fresh: false,
            done: false,
            used_edges: HashSet::new(),
            used_degree: vec![0; vocab.max_nodes + 1],
        }
    }

    fn can_name_fresh(&self) -> bool {
        self.max_node_used < self.vocab.max_nodes
    }

    /// Some unused edge can still leave `x`.
    fn can_leave(&self, x: usize) -> bool {
        self.can_name_fresh() || self.used_degree[x] + 1 < self.max_node_used
    }

    fn segment_complete(&self) -> bool {
        self.seg_len >= 2 || (self.seg_len == 1 && self.seg_started_fresh)
    }

    fn any_restart(&self) -> bool {
        self.can_name_fresh() || (1..=self.max_node_used).any(|x| self.can_leave(x))
    }
}

impl TokenGrammar for SetDecoderState {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn legal_next(&self) -> Vec<u32> {
        let v = &self.vocab;
        let mut out = Vec::new();
        if self.done {
            return out;
        }
        match self.current {
            None => {
                let first = self.max_node_used == 0;
                if !first {
                    out.extend((1..=self.max_node_used).filter(|&x| self.can_leave(x)).map(|x| v.node_token(x).unwrap()));
                }
                if self.can_name_fresh() {
                    out.push(v.node_token(self.max_node_used + 1).unwrap());
                }
            }
            Some(c) => {
                out.extend(
                    (1..=self.max_node_used)
                        .filter(|&y| y != c && !self.used_edges.contains(&edge_key(c, y)))
                        .map(|y| v.node_token(y).unwrap()),
                );
                if self.can_name_fresh() {
                    out.push(v.node_token(self.max_node_used + 1).unwrap());
                }
                if self.segment_complete() {
                    out.push(EOS);
                    if self.any_restart() {
                        out.push(SEP);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn step(&mut self, tok: u32) -> Result<(), Violation> {
        if self.done {
            return Err(Violation::AfterDone(tok));
        }
        let class = self.vocab.classify(tok).ok_or(Violation::OutOfVocab(tok))?;
        let unexpected = Violation::Unexpected { token: tok, mode: Mode::AfterNbClose };
        match class {
            Token::Node(x) => {
                let fresh = x == self.max_node_used + 1;
                if x > self.max_node_used + 1 {
                    return Err(Violation::GapIndex { expected: self.max_node_used + 1, found: x });
                }
                match self.current {
                    None => {
                        if self.max_node_used == 0 && !fresh {
                            return Err(Violation::GapIndex { expected: 1, found: x });
                        }
                        if !fresh && !self.can_leave(x) {
                            return Err(Violation::Capacity(self.vocab.max_nodes));
                        }
                        self.seg_started_fresh = fresh;
                        self.seg_len = 1;
                    }
                    Some(c) => {
                        if x == c {
                            return Err(Violation::SelfLoop(x));
                        }
                        if !self.used_edges.insert(edge_key(c, x)) {
                            return Err(Violation::DupEdge(c.min(x), c.max(x)));
                        }
                        self.used_degree[c] += 1;
                        self.used_degree[x] += 1;
                        self.seg_len += 1;
                    }
                }
                if fresh {
                    self.max_node_used = x;
                }
                self.current = Some(x);
            }
            Token::Sep if self.current.is_some() && self.segment_complete() && self.any_restart() => {
                self.current = None;
                self.seg_len = 0;
            }
            Token::Eos if self.current.is_some() && self.segment_complete() => self.done = true,
            _ => return Err(unexpected),
        }
        Ok(())
    }

    fn is_done(&self) -> bool {
        self.done
    }

    fn at_boundary(&self) -> bool {
        !self.done && self.current.is_some() && self.segment_complete()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::FIRST_NODE;

    fn node(i: u32) -> u32 {
        FIRST_NODE + i - 1
    }

    fn feed(st: &mut DecoderState, toks: &[u32]) {
        for &t in toks {
            st.step(t).unwrap();
        }
    }

    #[test]
    fn after_bos_only_node_one() {
        let st = DecoderState::new(Vocab::new(8));
        assert_eq!(st.legal_next(), vec![node(1)]);
    }

    #[test]
    fn first_nbset_must_close() {
        let mut st = DecoderState::new(Vocab::new(8));
        feed(&mut st, &[node(1), OPEN]);
        assert_eq!(st.legal_next(), vec![CLOSE]);
    }

    #[test]
    fn trail_predecessor_is_not_a_member() {
        let mut st = DecoderState::new(Vocab::new(8));
        feed(&mut st, &[node(1), OPEN, CLOSE, node(2), OPEN]);
        assert_eq!(st.legal_next(), vec![CLOSE]);
        assert_eq!(st.step(node(1)).unwrap_err().code(), "E_DUP_EDGE");
    }

    #[test]
    fn figure_sequence_is_accepted() {
        let toks = [
            node(1), OPEN, CLOSE, node(2), OPEN, CLOSE, node(3), OPEN, CLOSE, SEP,
            node(4), OPEN, node(2), CLOSE, node(5), OPEN, CLOSE, EOS,
        ];
        let mut st = DecoderState::new(Vocab::new(8));
        for &t in &toks {
            assert!(st.legal_next().contains(&t), "{t} not legal in {:?}", st.mode());
            st.step(t).unwrap();
        }
        assert!(st.is_done());
        assert!(st.legal_next().is_empty());
    }

    #[test]
    fn rule_codes() {
        let st = DecoderState::new(Vocab::new(8));
        assert_eq!(st.stepped(SEP).unwrap_err().code(), "E_UNEXPECTED");
        assert_eq!(st.stepped(EOS).unwrap_err().code(), "E_UNEXPECTED");
        assert_eq!(st.stepped(99).unwrap_err().code(), "E_OUT_OF_VOCAB");
        let mut st = DecoderState::new(Vocab::new(8));
        feed(&mut st, &[node(1), OPEN, CLOSE]);
        assert_eq!(st.stepped(node(3)).unwrap_err().code(), "E_GAP_INDEX");
        assert_eq!(st.stepped(node(1)).unwrap_err().code(), "E_REPEAT_NODE");
        feed(&mut st, &[SEP, node(2), OPEN, CLOSE, SEP, node(3), OPEN, node(2)]);
        assert_eq!(st.stepped(node(1)).unwrap_err().code(), "E_ORDER");
        assert_eq!(st.stepped(node(3)).unwrap_err().code(), "E_SELF_LOOP");
        assert_eq!(st.stepped(node(4)).unwrap_err().code(), "E_NOT_VISITED");
        feed(&mut st, &[CLOSE, EOS]);
        assert_eq!(st.stepped(EOS).unwrap_err().code(), "E_AFTER_DONE");
    }

    #[test]
    fn capacity_blocks_separator_but_not_eos() {
        let mut st = DecoderState::new(Vocab::new(2));
        feed(&mut st, &[node(1), OPEN, CLOSE, node(2), OPEN, CLOSE]);
        assert_eq!(st.legal_next(), vec![EOS]);
        assert_eq!(st.stepped(SEP).unwrap_err().code(), "E_CAPACITY");
    }

    #[test]
    fn mask_keeps_only_legal_entries() {
        let v = Vocab::new(4);
        let st = DecoderState::new(v);
        let mut logits = vec![0.0; v.size()];
        st.mask_logits(&mut logits);
        for (i, &x) in logits.iter().enumerate() {
            if i as u32 == node(1) {
                assert_eq!(x, 0.0);
            } else {
                assert_eq!(x, f64::NEG_INFINITY);
            }
        }
    }

    #[test]
    fn attributed_flow() {
        let v = Vocab::attributed(4, 2, 2);
        let nl = v.node_label_base();
        let el = v.edge_label_base();
        let mut st = DecoderState::new(v);
        feed(&mut st, &[node(1)]);
        assert_eq!(st.legal_next(), vec![nl, nl + 1]);
        feed(&mut st, &[nl, OPEN]);
        assert_eq!(st.legal_next(), vec![CLOSE]);
        feed(&mut st, &[CLOSE]);
        assert_eq!(st.legal_next(), vec![EOS, SEP, el, el + 1]);
        feed(&mut st, &[el + 1, node(2), nl + 1, OPEN, CLOSE, SEP, node(3), nl, OPEN]);
        assert_eq!(st.legal_next(), vec![CLOSE, el, el + 1]);
        feed(&mut st, &[el]);
        assert_eq!(st.legal_next(), vec![node(1), node(2)]);
        feed(&mut st, &[node(2), CLOSE, EOS]);
        assert!(st.is_done());
    }

    #[test]
    fn set_grammar_basics() {
        let v = Vocab::new(5);
        let mut st = SetDecoderState::new(v);
        assert_eq!(st.legal_next(), vec![node(1)]);
        for t in [node(1), node(2), node(3), node(4), node(1)] {
            st.step(t).unwrap();
        }
        assert!(st.legal_next().contains(&node(3)));
        assert!(!st.legal_next().contains(&node(2)));
        assert_eq!(st.stepped(node(2)).unwrap_err().code(), "E_DUP_EDGE");
        st.step(node(3)).unwrap();
        st.step(EOS).unwrap();
        assert!(st.is_done());

        let mut st = SetDecoderState::new(v);
        assert_eq!(st.stepped(SEP).unwrap_err().code(), "E_UNEXPECTED");
        st.step(node(1)).unwrap();
        assert!(st.legal_next().contains(&EOS));
        st.step(SEP).unwrap();
        // Node 1 has no possible partner besides a fresh node, which is fine.
        assert_eq!(st.legal_next(), vec![node(1), node(2)]);
        st.step(node(1)).unwrap();
        assert!(!st.legal_next().contains(&EOS));
    }
}
