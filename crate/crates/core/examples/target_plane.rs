//! Where the light goes: the optimal probe concentrates intensity on the
//! target pixels, the average probe spreads it over the whole plane.

use helion::discrim::{average_state, build_discrimination_operator, optimal_state, spectrum};
use helion::scatter::{gen_system, target_intensity_fraction, LossModel, SystemConfig};

pub fn run() -> helion::Result<()> {
    let pair = gen_system(&SystemConfig {
        m_in: 48,
        n_out: 48,
        n_plane: 96,
        target_pixels: vec![30, 31, 32],
        target_transmittance: 0.0,
        target_phase: 0.0,
        loss_model: LossModel::GinibreSubunitary,
        seed: 4,
    })?;
    let spec = spectrum(&build_discrimination_operator(&pair))?;
    let opt = optimal_state(&spec, 1.0)?;
    let avg = average_state(&spec, 1.0)?;
    let share = 3.0 / 96.0;
    println!("target pixels cover {:.2}% of the plane", 100.0 * share);
    println!("optimal probe: {:.2}% of the intensity on target", 100.0 * target_intensity_fraction(&pair, opt.amplitudes())?);
    println!("average probe: {:.2}% of the intensity on target", 100.0 * target_intensity_fraction(&pair, avg.amplitudes())?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> helion::Result<()> {
    run()
}
