use secrecy_effcap::{
    build_grid, solve_full_csi, solve_main_csi, solve_pc, ChannelConfig, FadingDistribution,
    StateGrid,
};

fn grid() -> StateGrid {
    let dist = FadingDistribution::rayleigh(1.0, 1.0).unwrap();
    build_grid(&dist, 60, 1.0).unwrap()
}

fn cfg(theta: f64, snr_db: f64) -> ChannelConfig {
    ChannelConfig::from_snr_db(1.0, snr_db, theta).unwrap()
}

#[test]
fn wiretap_throughput_rises_with_snr() {
    let g = grid();
    for solve in [solve_full_csi, solve_main_csi] {
        let c: Vec<f64> = [-10.0, -5.0, 0.0, 5.0, 10.0]
            .iter()
            .map(|&db| solve(&cfg(0.01, db), &g).unwrap().throughput)
            .collect();
        assert!(c.windows(2).all(|w| w[1] > w[0]), "{c:?}");
    }
}

#[test]
fn wiretap_throughput_falls_with_theta() {
    let g = grid();
    for solve in [solve_full_csi, solve_main_csi] {
        let c: Vec<f64> = [0.0, 1e-3, 1e-2, 1e-1, 1.0]
            .iter()
            .map(|&t| solve(&cfg(t, 0.0), &g).unwrap().throughput)
            .collect();
        assert!(c.windows(2).all(|w| w[1] < w[0]), "{c:?}");
    }
}

#[test]
fn main_csi_never_beats_full_csi() {
    let g = grid();
    for theta in [0.0, 1e-3, 1e-2, 1e-1] {
        for db in [-10.0, 0.0, 10.0] {
            let c = cfg(theta, db);
            let full = solve_full_csi(&c, &g).unwrap().throughput;
            let main = solve_main_csi(&c, &g).unwrap().throughput;
            assert!(main <= full + 1e-9, "theta {theta}, {db} dB");
        }
    }
}

#[test]
fn broadcast_endpoints_bracket_interior_point() {
    let g = grid();
    let c = cfg(0.01, 0.0);
    let conf = solve_pc(&c, &g, 0.0, 1.0).unwrap().point;
    let mid = solve_pc(&c, &g, 0.5, 0.5).unwrap().point;
    let common = solve_pc(&c, &g, 1.0, 0.0).unwrap().point;
    assert!(mid.c0 > conf.c0 && mid.c0 < common.c0);
    assert!(mid.c1 < conf.c1 && mid.c1 > common.c1);
    // the interior point is optimal for its own weights
    let w = |p: secrecy_effcap::ThroughputPoint| 0.5 * p.c0 + 0.5 * p.c1;
    assert!(w(mid) >= w(conf) - 1e-9 && w(mid) >= w(common) - 1e-9);
}
