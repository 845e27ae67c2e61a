//! Graphviz export of a final node matching: the reference graph's nodes on
//! the left, the candidate's on the right, one edge per matched pair
//! labelled `(weight, similarity)`.

use std::fmt::Write;

use crate::model::{MatchedPair, SceneGraph};

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => {}
            c => out.push(c),
        }
    }
    out
}

pub fn matching_to_dot(g1: &SceneGraph, g2: &SceneGraph, matching: &[MatchedPair]) -> String {
    let mut out = String::from("graph matching {\n  rankdir=LR;\n  node [shape=box];\n");
    for (side, g, prefix) in [("reference", g1, "a"), ("candidate", g2, "b")] {
        let _ = writeln!(out, "  subgraph cluster_{prefix} {{\n    label=\"{side}\";");
        for n in &g.nodes {
            let _ = writeln!(out, "    {prefix}{} [label=\"{} #{}\"];", n.id, escape(&n.label), n.id);
        }
        out.push_str("  }\n");
    }
    for p in matching {
        let _ = writeln!(
            out,
            "  a{} -- b{} [label=\"({:.4}, {:.4})\"];",
            p.node1, p.node2, p.weight, p.similarity
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mock::mock_provider;
    use rand::SeedableRng;

    #[test]
    fn labels_pairs_and_escapes() {
        let p = mock_provider(1, 4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut g = p.random_graph(&mut rng, 2, 0.0);
        g.nodes[0].label = "say \"hi\"".into();
        let ids: Vec<u64> = g.nodes.iter().map(|n| n.id).collect();
        let pairs = vec![MatchedPair {
            node1: ids[0],
            node2: ids[1],
            weight: 0.5,
            similarity: 0.91234,
        }];
        let dot = matching_to_dot(&g, &g, &pairs);
        assert!(dot.contains("say \\\"hi\\\""));
        assert!(dot.contains(&format!("a{} -- b{} [label=\"(0.5000, 0.9123)\"]", ids[0], ids[1])));
        assert_eq!(dot.matches(" -- ").count(), 1);
    }
}
