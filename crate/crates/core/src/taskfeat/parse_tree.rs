//! Penn-style bracketed constituency trees, e.g. `(ROOT (S (NP (DT the) (NN boy))))`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tree {
    Leaf(String),
    Node { label: String, children: Vec<Tree> },
}

impl Tree {
    /// Leaves have depth 0; a node is one deeper than its deepest child.
    pub fn depth(&self) -> usize {
        match self {
            Tree::Leaf(_) => 0,
            Tree::Node { children, .. } => 1 + children.iter().map(Tree::depth).max().unwrap_or(0),
        }
    }
}

#[derive(Debug, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn lex(s: &str) -> Vec<Tok<'_>> {
    let mut toks = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if let Some(st) = start.take() {
                toks.push(Tok::Atom(&s[st..i]));
            }
            match c {
                '(' => toks.push(Tok::Open),
                ')' => toks.push(Tok::Close),
                _ => {}
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(st) = start {
        toks.push(Tok::Atom(&s[st..]));
    }
    toks
}

/// Parses exactly one tree. The root label may be empty, as in `( (S ...))`.
pub fn parse_tree(s: &str) -> std::result::Result<Tree, String> {
    let toks = lex(s);
    let mut pos = 0;
    let tree = parse_node(&toks, &mut pos)?;
    if pos != toks.len() {
        return Err("unexpected material after the tree".into());
    }
    Ok(tree)
}

fn parse_node(toks: &[Tok<'_>], pos: &mut usize) -> std::result::Result<Tree, String> {
    match toks.get(*pos) {
        Some(Tok::Open) => *pos += 1,
        Some(_) => return Err("expected '('".into()),
        None => return Err("empty tree".into()),
    }
    let label = match toks.get(*pos) {
        Some(Tok::Atom(a)) => {
            *pos += 1;
            a.to_string()
        }
        _ => String::new(),
    };
    let mut children = Vec::new();
    loop {
        match toks.get(*pos) {
            Some(Tok::Close) => {
                *pos += 1;
                break;
            }
            Some(Tok::Open) => children.push(parse_node(toks, pos)?),
            Some(Tok::Atom(a)) => {
                children.push(Tree::Leaf(a.to_string()));
                *pos += 1;
            }
            None => return Err("unbalanced parentheses".into()),
        }
    }
    if children.is_empty() {
        return Err(format!("empty node {label:?}"));
    }
    Ok(Tree::Node { label, children })
}

/// Mean depth over one tree per utterance; 0 for no trees.
pub fn avg_parse_depth<S: AsRef<str>>(trees: &[S]) -> Result<f64> {
    if trees.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0usize;
    for (index, s) in trees.iter().enumerate() {
        let tree = parse_tree(s.as_ref()).map_err(|message| Error::TreeParse { index, message })?;
        total += tree.depth();
    }
    Ok(total as f64 / trees.len() as f64)
}

/// Reads a tree file: one bracketed tree per non-blank line.
pub fn read_tree_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(avg_parse_depth(&["(ROOT (S (NP (DT the) (NN boy))))"]).unwrap(), 4.0);
        assert_eq!(avg_parse_depth(&["(A x)", "(A (B x))"]).unwrap(), 1.5);
        assert_eq!(avg_parse_depth::<&str>(&[]).unwrap(), 0.0);
    }

    #[test]
    fn errors_name_the_utterance() {
        let err = avg_parse_depth(&["(A x)", "(A (B x)"]).unwrap_err();
        assert!(matches!(err, Error::TreeParse { index: 1, .. }));
        assert!(matches!(avg_parse_depth(&["()"]), Err(Error::TreeParse { index: 0, .. })));
        assert!(avg_parse_depth(&["(A x))"]).is_err());
        assert!(avg_parse_depth(&["(A x) (B y)"]).is_err());
        assert!(avg_parse_depth(&["x"]).is_err());
        assert!(avg_parse_depth(&[""]).is_err());
    }

    #[test]
    fn empty_root_label_accepted() {
        let t = parse_tree("( (S (NP (PRP she)) (VP (VBZ washes))))").unwrap();
        assert_eq!(t.depth(), 4);
    }

    #[test]
    fn tree_lines_skip_blanks() {
        assert_eq!(read_tree_lines("(A x)\n\n (B y) \n"), vec!["(A x)", "(B y)"]);
    }

    proptest! {
        #[test]
        fn left_linear_tree_depth(n in 1usize..60) {
            let mut s = "w".to_string();
            for i in 0..n {
                s = format!("(L{i} {s} w)");
            }
            prop_assert_eq!(avg_parse_depth(&[s]).unwrap(), n as f64);
        }
    }
}
