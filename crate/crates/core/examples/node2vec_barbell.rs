//! node2vec on two cliques joined by one edge. Nodes in the same clique
//! should end up closer than nodes across the bridge.

use spamdetect::embed::{embed, Node2VecConfig};
use spamdetect::graph::SocialGraph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut edges = Vec::new();
    for base in [0, 6] {
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    edges.push((base + i, base + j));
                }
            }
        }
    }
    edges.push((5, 6));
    let g = SocialGraph::from_index_edges(12, &edges);

    let cfg = Node2VecConfig {
        dimensions: 16,
        seed: 7,
        ..Default::default()
    };
    let m = embed(&g, &cfg)?;
    println!("{} nodes, {} dimensions", m.len(), m.dim());
    println!("cos(0, 1)  same clique:   {:.3}", m.cosine(0, 1));
    println!("cos(0, 11) across bridge: {:.3}", m.cosine(0, 11));
    println!("cos(5, 6)  bridge ends:   {:.3}", m.cosine(5, 6));
    Ok(())
}
