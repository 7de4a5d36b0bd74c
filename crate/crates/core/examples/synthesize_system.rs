//! Synthesize a scattering pair with one bead in the target plane, then
//! write it to disk and read it back.
//!
//! ```text
//! cargo run -p helion --example synthesize_system
//! ```

use helion::scatter::{gen_system, load_pair, save_pair, LossModel, SystemConfig};

pub fn run() -> helion::Result<()> {
    let cfg = SystemConfig {
        m_in: 32,
        n_out: 48,
        n_plane: 40,
        target_pixels: vec![7, 8],
        target_transmittance: 0.1,
        target_phase: 0.0,
        loss_model: LossModel::GinibreSubunitary,
        seed: 2024,
    };
    let pair = gen_system(&cfg)?;
    println!(
        "S1, S2 are {}x{}, largest singular value {:.4}, physical = {}",
        pair.n_out(),
        pair.m_in(),
        pair.sigma_max(),
        pair.is_physical()
    );

    let dir = tempfile::tempdir().map_err(|e| helion::Error::Validation(e.to_string()))?;
    save_pair(dir.path(), &pair)?;
    let back = load_pair(dir.path())?;
    assert_eq!(back.s1().max_abs_diff(pair.s1()), 0.0);
    assert_eq!(back.s2().max_abs_diff(pair.s2()), 0.0);
    println!("round trip through {} is lossless", dir.path().display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> helion::Result<()> {
    run()
}
