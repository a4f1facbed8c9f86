//! Centrality measures on a tiny follow graph.

use spamdetect::graph::{build_graph, CentralityTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // a star feeding "hub", which bridges into a core holding a 2-cycle and
    // a 3-cycle (mixed cycle lengths keep the eigenvector iteration aperiodic)
    let edges: Vec<(String, String)> = [
        ("a", "hub"),
        ("b", "hub"),
        ("c", "hub"),
        ("hub", "x"),
        ("x", "y"),
        ("y", "z"),
        ("z", "x"),
        ("y", "x"),
    ]
    .iter()
    .map(|(s, t)| (s.to_string(), t.to_string()))
    .collect();
    let g = build_graph(&edges);
    let t = CentralityTable::compute(&g)?;

    println!("{:>4} {:>8} {:>8} {:>8} {:>8} {:>8}", "node", "degree", "between", "eig_in", "eig_out", "pagerank");
    for (i, id) in t.ids.iter().enumerate() {
        let r = t.row(i).map(|v| v + 0.0);
        println!("{id:>4} {:8.4} {:8.4} {:8.4} {:8.4} {:8.4}", r[0], r[1], r[2], r[3], r[4]);
    }

    Ok(())
}
