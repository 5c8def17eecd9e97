//! Learn a CPDAG with PC-stable and compare it to the known graph.

use catci::citest::TestSpec;
use catci::data::load_csv;
use catci::graph::{parse_edge_list, skeleton_f1};
use catci::pc::{cpdag_edge_list, pc, write_test_log, PcConfig};

fn main() -> catci::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");
    let (ds, _) = load_csv(format!("{dir}/lung.csv").as_ref(), format!("{dir}/lung_schema.json").as_ref())?;
    let names: Vec<String> = ds.names().map(str::to_string).collect();
    let truth_text = std::fs::read_to_string(format!("{dir}/lung_truth.txt")).expect("fixture exists");
    let truth = parse_edge_list(&truth_text, Some(&names))?;

    for test in ["qtest:glm", "qtest:rft", "g2"] {
        let cfg = PcConfig {
            test: test.parse::<TestSpec>()?,
            ..PcConfig::default()
        };
        let res = pc(&ds, &cfg)?;
        let f1 = skeleton_f1(&res.skeleton.edges, &truth.skeleton());
        println!("== {test}: skeleton F1 {:.3}, {} tests", f1.f1, res.skeleton.test_log.len());
        print!("{}", cpdag_edge_list(&res.cpdag, &names));
        if test == "g2" {
            write_test_log(&res.skeleton.test_log[..3], &names, std::io::stdout())?;
        }
    }
    Ok(())
}
