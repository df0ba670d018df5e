//! Round-trip a flow through its JSON document.

use learned_harmonic::{FlowPreset, RealNvpFlow};

fn main() -> learned_harmonic::Result<()> {
    let flow = RealNvpFlow::new(3, &FlowPreset::pima(), 11)?;
    let path = std::env::temp_dir().join("lhm_flow_example.json");
    flow.save(&path)?;
    let back = RealNvpFlow::load(&path)?;
    let theta = [0.3, -1.2, 0.7];
    println!("{} parameters written to {}", flow.n_params(), path.display());
    println!("log density before {:.12}, after {:.12}", flow.log_density(&theta, 0.9)?, back.log_density(&theta, 0.9)?);
    assert_eq!(flow, back);
    Ok(())
}
