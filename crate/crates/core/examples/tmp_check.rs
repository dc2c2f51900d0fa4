use bvn_core::experiments::*;
fn main() {
    for (p, mo) in [(StudyPreset::Table3M32, 16), (StudyPreset::Table3M32, 24), (StudyPreset::Table3M8, 4), (StudyPreset::EnronSim, 5)] {
        let mut spec = p.spec();
        spec.m_obs = mo;
        spec.n_graphs = 200;
        let t = std::time::Instant::now();
        let r = run_study(&spec).unwrap();
        println!("{} m'={mo} {:?} rate {} ci {:?} fusion {} @{} thr0.4 {:?}", p.name(), t.elapsed(), r.rate, r.ci, r.fusion.best_rate, r.fusion.best_lambda, r.threshold_curve[8].rate);
    }
}
