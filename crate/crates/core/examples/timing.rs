use finsler_gbc::metric::MetricSpec;
use finsler_gbc::quadrature::{grid_survey, Resolution, SurveyOptions};
use std::collections::BTreeMap;
use std::time::Instant;

fn main() {
    for (name, res) in [
        ("round-s2", Resolution { fiber_nodes: 32, base_w: 24, base_h: 24 }),
        ("round-s2", Resolution { fiber_nodes: 64, base_w: 48, base_h: 48 }),
        ("randers-s2", Resolution { fiber_nodes: 64, base_w: 48, base_h: 48 }),
        ("quartic-t2", Resolution { fiber_nodes: 64, base_w: 48, base_h: 48 }),
    ] {
        let spec = MetricSpec::catalog(name, &BTreeMap::new()).unwrap();
        let t = Instant::now();
        let s = grid_survey(&spec, res, SurveyOptions { t2: true, ..Default::default() }).unwrap();
        println!(
            "{name} {res:?}: t2 chi={:?} nodes={} in {:.2?}",
            s.chi_t2(),
            s.nodes,
            t.elapsed()
        );
    }
    // One instrumented everything-on survey at mid resolution.
    let spec = MetricSpec::catalog("randers-s2", &BTreeMap::new()).unwrap();
    let t = Instant::now();
    let s = grid_survey(
        &spec,
        Resolution { fiber_nodes: 64, base_w: 48, base_h: 48 },
        SurveyOptions { t2: true, c1: true, berwald: false, residuals: true, equivalence: true },
    )
    .unwrap();
    println!(
        "randers full survey: chi_t2={:?} chi_c1={:?} equiv={:.3e} metricity={:.3e} in {:.2?}",
        s.chi_t2(),
        s.chi_c1(),
        s.equivalence_max,
        s.residuals.metricity,
        t.elapsed()
    );
}
