//! d-separation, equivalence classes and consistent extensions.

use catci::graph::{consistent_extension, cpdag_of, d_connected_pairs, d_separated, implied_cis, Dag};

fn main() -> catci::Result<()> {
    // 0 -> 2 <- 1, 2 -> 3
    let g = Dag::new(4, &[(0, 2), (1, 2), (2, 3)])?;
    println!("0 _||_ 1        : {}", d_separated(&g, 0, 1, &[])?);
    println!("0 _||_ 1 | {{3}}  : {}", d_separated(&g, 0, 1, &[3])?);
    println!("0 _||_ 3 | {{2}}  : {}", d_separated(&g, 0, 3, &[2])?);

    for c in implied_cis(&g) {
        println!("implied: {} _||_ {} | {:?}", c.x, c.y, c.z);
    }

    let chain = Dag::new(3, &[(0, 1), (1, 2)])?;
    let cpdag = cpdag_of(&chain);
    print!("CPDAG of a chain:\n{}", cpdag.to_edge_list());
    let ext = consistent_extension(&cpdag)?;
    print!("one extension:\n{}", ext.to_edge_list());
    println!("Markov equivalent to the chain: {}", ext.markov_equivalent(&chain));
    let (pairs, _) = d_connected_pairs(&cpdag);
    println!("marginally d-connected pairs: {pairs:?}");
    Ok(())
}
