//! Round trip through the binary TNSR and TNET formats: save a network,
//! load it back, contract it and compare.
//!
//! cargo run --example network_files

use greedy_tn::io;
use greedy_tn::network::RankMatrix;
use greedy_tn::TensorNetwork;

fn main() -> anyhow::Result<()> {
    let dir = std::env::temp_dir().join("greedy-tn-example");
    std::fs::create_dir_all(&dir)?;
    let ranks = RankMatrix::from_edges(4, &[(0, 1, 2), (1, 2, 3), (2, 3, 2), (0, 3, 2)])?;
    let net = TensorNetwork::random(ranks, vec![3, 4, 3, 2], 11, 1.0)?;

    let net_path = dir.join("ring.tnet");
    io::write_network(&net_path, &net)?;
    let loaded = io::read_network(&net_path)?;
    assert_eq!(loaded, net);
    println!("{}: {} bytes, {} params", net_path.display(), std::fs::metadata(&net_path)?.len(), loaded.param_count());

    let full = loaded.evaluate();
    let tensor_path = dir.join("ring.tnsr");
    io::write_tensor(&tensor_path, &full)?;
    let back = io::read_tensor(&tensor_path)?;
    let identical = back.data().iter().zip(full.data()).all(|(a, b)| a.to_bits() == b.to_bits());
    println!("{}: dims {:?}, bit-identical {identical}", tensor_path.display(), back.dims());

    let mut bytes = std::fs::read(&tensor_path)?;
    bytes.truncate(bytes.len() - 5);
    match io::decode_tensor(&bytes) {
        Err(e) => println!("truncated file rejected: {e}"),
        Ok(_) => println!("truncated file unexpectedly accepted"),
    }
    Ok(())
}
