//! Fit a real NVP flow to banana-shaped samples and draw from it at two
//! temperatures.

use learned_harmonic::{run_sampler, train_flow, FlowPreset, RealNvpFlow, SamplerConfig, TrainingConfig};

fn main() -> learned_harmonic::Result<()> {
    let banana = |x: &[f64]| -0.5 * x[0] * x[0] - 0.5 * (x[1] - x[0] * x[0]).powi(2) / 0.25;
    let cfg = SamplerConfig { n_walkers: 20, n_steps: 1000, init_center: vec![0.0, 0.0], ..SamplerConfig::default() };
    let chains = run_sampler(banana, &cfg)?.chains;

    let preset = FlowPreset::default();
    let mut flow = RealNvpFlow::new(2, &preset, 0)?;
    flow.fit_standardization(&chains)?;
    let trained = train_flow(&flow, &chains, &TrainingConfig { epochs: 60, ..TrainingConfig::default() })?;
    for (epoch, loss) in trained.loss_trace.iter().enumerate().step_by(10) {
        println!("epoch {epoch:3}  mean nll {loss:.4}");
    }
    for t in [1.0, 0.5] {
        let draws = trained.flow.sample(20_000, t, 1)?;
        let var_y = draws.iter().map(|d| d[1] * d[1]).sum::<f64>() / draws.len() as f64;
        println!("T = {t}: E[y^2] = {var_y:.3}");
    }
    Ok(())
}
