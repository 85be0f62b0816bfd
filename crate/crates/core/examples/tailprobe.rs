use std::sync::Arc;

use nsr2d_core::amplitude::TimeCutoff;
use nsr2d_core::jets::{build_jets, JetParams};
use nsr2d_core::perturbation::{PerturbationBuilder, StressTrajectory};
use nsr2d_core::stress::StressAssembler;
use nsr2d_core::temporal::{build_temporal, standard_offsets, TemporalParams};
use nsr2d_core::universality::{universality_init, FractionalHeatFlow};
use nsr2d_core::{Grid, ScalarField, SymTensorField};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn rss(tag: &str) {
    let s = std::fs::read_to_string("/proc/self/status").unwrap();
    let line = s.lines().find(|l| l.starts_with("VmRSS")).unwrap();
    let hwm = s.lines().find(|l| l.starts_with("VmHWM")).unwrap();
    println!("[{tag}] {line}  {hwm}");
}

struct FlowStress(Arc<FractionalHeatFlow>);
impl StressTrajectory for FlowStress {
    fn stress_at(&self, t: f64) -> nsr2d_core::Result<SymTensorField> {
        self.0.stress(t)
    }
}

fn main() {
    let grid = Grid::new(512, 1).unwrap();
    rss("start");
    let psi = ScalarField::from_fn(grid, |x, y| {
        0.004 * (TWO_PI * x).sin() * (TWO_PI * y).cos() + 0.0016 * (TWO_PI * (x + 2.0 * y)).cos()
    });
    let u0 = psi.truncated(2).0.grad_perp();
    let flow = Arc::new(universality_init(u0, 1.5, 2e-3).unwrap());
    rss("baseline");
    let stress = FlowStress(flow.clone());
    let jets = build_jets(JetParams::standard(grid, 16.0, 64.0)).unwrap();
    rss("jets");
    let profiles = build_temporal(TemporalParams {
        kappa: 16.0,
        sigma: 2,
        omega: 64.0,
        offsets: standard_offsets(4),
    })
    .unwrap();
    let cutoff = TimeCutoff::new((0.0, 1.0), 1.0).unwrap();
    let b = PerturbationBuilder::new(&jets, &profiles, cutoff, &stress, 48).unwrap();
    rss("builder");
    let asm = StressAssembler::new(&b, flow.as_ref(), 1e-3, 1e-7).unwrap();
    rss("assembler");
    let (lo, hi) = profiles.g_support(0).components()[0];
    let t = 0.5 * (lo + hi);
    let w = b.w_total(t).unwrap();
    rss("w_total");
    let r = asm.osc_x(t).unwrap();
    println!("osc_x grid n = {}", r.0.grid().n());
    rss("osc_x");
    drop((w, r));
    let res = asm.verify_nsr(&[t], 1e-8).unwrap();
    rss("verify");
    println!("aggregate {:.3e}", res.aggregate);
}
