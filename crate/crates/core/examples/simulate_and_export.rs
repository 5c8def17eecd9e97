//! Simulate a dataset, write it as CSV with a schema and read it back.

use catci::data::{load_csv, subsample, write_csv};
use catci::sim::{simulate, Protocol, SimSpec};

fn main() -> catci::Result<()> {
    let spec = SimSpec {
        protocol: Protocol::DagLogistic,
        n: 500,
        k: 6,
        beta: 1.0,
        p_edge: 0.4,
        dependent: false,
        seed: 42,
    };
    let sim = simulate(&spec)?;
    let dag = sim.dag.expect("the DAG protocol returns its graph");
    print!("generating graph:\n{}", dag.to_edge_list());

    let dir = std::env::temp_dir().join("catci-example");
    std::fs::create_dir_all(&dir).map_err(|e| catci::Error::InvalidArgument(e.to_string()))?;
    let (data, schema) = (dir.join("sim.csv"), dir.join("sim_schema.json"));
    write_csv(&sim.data, &data, &schema)?;
    let (back, _) = load_csv(&data, &schema)?;
    println!("round trip identical: {}", back == sim.data);
    println!("subsample of 100 rows has {} rows", subsample(&back, 100, 1)?.n());
    Ok(())
}
