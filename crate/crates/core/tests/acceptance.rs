//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --release --test acceptance -- 4 5`.

use std::process::ExitCode;
use std::time::Instant;

use diracnet_core::ablation::{compare_architectures, direct_minimization, large_component_output};
use diracnet_core::analytic::{count_nodes, hydrogen_energy, hydrogen_wavefunction, orbital_l};
use diracnet_core::gradient::{Objective, TrialGraph};
use diracnet_core::oracle::{shift_invert_eigs, states_in_window, Eigenpair, OracleOptions};
use diracnet_core::potential::SPEED_OF_LIGHT_AU as C;
use diracnet_core::solver::{orthonormal_project, train_state};
use diracnet_core::spectrum::{fermi_fill, levels_for_kappa, Level};
use diracnet_core::{
    Architecture, DiracOperator, Method, NetParams, OutputMode, PotentialSpec, RadialMesh,
    RadialSpinor, SolveConfig, SolvedState, Units, WoodsSaxon,
};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const HYDROGEN_EPOCHS: usize = 40_000;
const CHAIN_GROUND_EPOCHS: usize = 100_000;
const CHAIN_EPOCHS: usize = 20_000;
const NUCLEAR_EPOCHS: usize = 20_000;
const SPECTRUM_EPOCHS: usize = 30_000;
const ABLATION_EPOCHS: usize = 20_000;

const HYDROGEN_PRINTED: [&str; 6] = [
    "-0.50000666",
    "-0.125002",
    "-0.055556",
    "-0.0312503",
    "-0.020000",
    "-0.013889",
];
const HYDROGEN_SHIFTS: [f64; 6] = [-0.51, -0.13, -0.06, -0.04, -0.021, -0.015];
const HYDROGEN_BOXES: [f64; 6] = [20.0, 40.0, 40.0, 60.0, 90.0, 100.0];
const OXYGEN_BENCHMARK: [(i32, f64, f64); 3] = [
    (-1, -45.0, -43.16880),
    (-2, -28.0, -24.6354),
    (1, -20.0, -18.9746),
];
const LEAD_BENCHMARK: [(f64, f64); 3] = [(-60.0, -58.0026), (-45.0, -41.0773), (-20.0, -18.7560)];

const NUCLEAR_UNITS: Units = Units {
    kinetic: 197.32698,
    rest_energy: 939.0,
};

fn relative(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn matches_printed(value: f64, printed: &str) -> bool {
    let decimals = printed.split('.').nth(1).map_or(0, str::len);
    format!("{value:.decimals$}") == printed
}

fn hydrogen_op(r_max: f64, points: usize, x0: f64) -> DiracOperator {
    let mesh = RadialMesh::log_with_box(x0, r_max, points).unwrap();
    let pot = PotentialSpec::Coulomb { charge: 1.0 }
        .evaluate(&mesh)
        .unwrap();
    DiracOperator::assemble(&mesh, &pot, -1, Units::default()).unwrap()
}

fn nucleus_op(ws: WoodsSaxon, kappa: i32) -> DiracOperator {
    let mesh = RadialMesh::uniform(20.0, 2000).unwrap();
    let pot = PotentialSpec::WoodsSaxon(ws).evaluate(&mesh).unwrap();
    DiracOperator::assemble(&mesh, &pot, kappa, NUCLEAR_UNITS).unwrap()
}

fn inverse(shift: f64, epochs: usize, tolerance: f64) -> SolveConfig {
    let mut c = SolveConfig::new(Method::Inverse, shift);
    c.max_epochs = epochs;
    c.tolerance = tolerance;
    c
}

fn bound_levels(op: &DiracOperator, floor: f64) -> Vec<Eigenpair> {
    states_in_window(op, floor, 0.0, &OracleOptions::default()).unwrap()
}

struct Outcome {
    failures: Vec<String>,
}

impl Outcome {
    fn verdict(&mut self, id: &str, pass: bool, summary: String) {
        println!("{} [{id}] {summary}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures.push(id.to_string());
        }
    }
}

fn detail(line: String) {
    println!("    {line}");
}

fn criterion_1(out: &mut Outcome) {
    let mut ok = true;
    for (n, printed) in (1..=6).zip(HYDROGEN_PRINTED) {
        let e = hydrogen_energy(n, -1, 1.0, C).unwrap();
        let hit = matches_printed(e, printed);
        ok &= hit;
        detail(format!(
            "n={n} ε = {e:.12} printed {printed} {}",
            if hit { "ok" } else { "MISMATCH" }
        ));
    }
    out.verdict(
        "1",
        ok,
        "exact hydrogen energies reproduce every printed digit".into(),
    );
}

/// Trained inverse-method hydrogen states n = 1..6, reused by later criteria.
struct HydrogenRuns {
    states: Vec<SolvedState>,
}

fn criterion_2(out: &mut Outcome) -> HydrogenRuns {
    let mut ok = true;
    let mut states = Vec::new();
    for n in 1..=6u32 {
        let i = n as usize - 1;
        let op = hydrogen_op(HYDROGEN_BOXES[i], 1700, -10.0);
        let start = Instant::now();
        let s = train_state(&inverse(HYDROGEN_SHIFTS[i], HYDROGEN_EPOCHS, 1e-9), &op).unwrap();
        let exact = hydrogen_energy(n, -1, 1.0, C).unwrap();
        let rel = relative(s.epsilon, exact);
        let nodes_ok = s.nodes == i;
        ok &= rel <= 5e-3 && nodes_ok;
        detail(format!(
            "n={n} box {:>5} ε′ {:>6} ε = {:.10} exact {:.10} rel {rel:.3e} nodes {} epochs {} ({:.0} s)",
            HYDROGEN_BOXES[i],
            HYDROGEN_SHIFTS[i],
            s.epsilon,
            exact,
            s.nodes,
            s.epochs,
            start.elapsed().as_secs_f64()
        ));
        states.push(s);
    }
    out.verdict(
        "2",
        ok,
        "inverse method, hydrogen n=1..6: relative error ≤ 5e-3 and n−1 nodes".into(),
    );
    HydrogenRuns { states }
}

fn criterion_3(out: &mut Outcome) {
    let op = hydrogen_op(100.0, 1700, -10.0);
    let mesh = op.mesh();
    let g = train_state(&inverse(-0.51, CHAIN_GROUND_EPOCHS, 1e-9), &op).unwrap();
    detail(format!(
        "ground in the 100 a.u. box: ε = {:.10} after {} epochs",
        g.epsilon, g.epochs
    ));
    let mut lower = vec![g.spinor];
    let mut ok = true;
    for n in 2..=6u32 {
        let mut c = SolveConfig::new(Method::Orthonormal, -0.51);
        c.max_epochs = CHAIN_EPOCHS;
        c.lower_states = lower.clone();
        let s = train_state(&c, &op).unwrap();
        let exact = hydrogen_energy(n, -1, 1.0, C).unwrap();
        let rel = relative(s.epsilon, exact);
        let ortho = lower
            .iter()
            .map(|l| l.inner(&s.spinor, mesh).abs())
            .fold(0.0, f64::max);
        ok &= rel <= 1e-2 && ortho <= 1e-8;
        detail(format!(
            "n={n} ε = {:.10} exact {:.10} rel {rel:.3e} max overlap {ortho:.1e} nodes {}",
            s.epsilon, exact, s.nodes
        ));
        lower.push(s.spinor);
    }
    out.verdict(
        "3",
        ok,
        "orthonormal method, hydrogen n=2..6: relative error ≤ 1e-2 and overlaps ≤ 1e-8".into(),
    );
}

fn criterion_4(out: &mut Outcome) {
    let ws = WoodsSaxon::oxygen16();
    let mut levels: Vec<Level> = Vec::new();
    let mut ops = Vec::new();
    for kappa in [-1, 1, -2, 2, -3, 3] {
        let op = nucleus_op(ws, kappa);
        levels.extend(
            levels_for_kappa(
                &op,
                1.1 * ws.central_depth(),
                0.0,
                &OracleOptions::default(),
            )
            .unwrap(),
        );
        ops.push(op);
    }
    let occupied = fermi_fill(levels, ws.neutrons).unwrap();
    let labels: Vec<String> = occupied.iter().map(Level::label).collect();
    let mut ok = labels == ["1s1/2", "1p3/2", "1p1/2"];
    detail(format!("occupied levels: {labels:?}"));
    for (kappa, shift, benchmark) in OXYGEN_BENCHMARK {
        let op = ops.iter().find(|o| o.kappa() == kappa).unwrap();
        let oracle = bound_levels(op, 1.1 * ws.central_depth())[0].energy;
        let s = train_state(&inverse(shift, NUCLEAR_EPOCHS, 1e-6), op).unwrap();
        let dnn = relative(s.epsilon, oracle);
        let tab = relative(oracle, benchmark);
        ok &= dnn <= 1e-3 && tab <= 1e-2 && s.nodes == 0;
        detail(format!(
            "κ={kappa:>2} ε′ {shift} DNN {:.6} oracle {:.6} benchmark {benchmark} | DNN−oracle {dnn:.2e} oracle−bench {tab:.2e} nodes {}",
            s.epsilon, oracle, s.nodes
        ));
    }
    out.verdict(
        "4",
        ok,
        "16O: three occupied levels, DNN vs oracle ≤ 1e-3, oracle vs benchmark within 1%".into(),
    );
}

fn criterion_5(out: &mut Outcome) {
    let ws = WoodsSaxon::lead208();
    let floor = 1.1 * ws.central_depth();

    let op = nucleus_op(ws, -1);
    let oracle: Vec<f64> = bound_levels(&op, floor).iter().map(|p| p.energy).collect();
    let mut ok = oracle.len() >= 3;
    let mut lower = Vec::new();
    for (i, (shift, benchmark)) in LEAD_BENCHMARK.into_iter().enumerate() {
        let inv = train_state(&inverse(shift, NUCLEAR_EPOCHS, 1e-6), &op).unwrap();
        let orth = if i == 0 {
            let ground =
                train_state(&inverse(LEAD_BENCHMARK[0].0, 2 * NUCLEAR_EPOCHS, 1e-6), &op).unwrap();
            lower.push(ground.spinor.clone());
            ground
        } else {
            let mut c = SolveConfig::new(Method::Orthonormal, LEAD_BENCHMARK[0].0);
            c.max_epochs = NUCLEAR_EPOCHS;
            c.tolerance = 1e-6;
            c.lower_states = lower.clone();
            let s = train_state(&c, &op).unwrap();
            lower.push(s.spinor.clone());
            s
        };
        let e = oracle[i];
        let (ri, ro, rt) = (
            relative(inv.epsilon, e),
            relative(orth.epsilon, e),
            relative(e, benchmark),
        );
        ok &= ri <= 1e-3 && ro <= 1e-3 && rt <= 1e-2;
        detail(format!(
            "{}s1/2 oracle {e:.6} benchmark {benchmark} ({rt:.2e}) | inverse {:.6} ({ri:.2e}) | orthonormal {:.6} ({ro:.2e})",
            i + 1,
            inv.epsilon,
            orth.epsilon
        ));
    }

    let mut levels: Vec<Level> = Vec::new();
    let mut ops = Vec::new();
    for l in 0..=7i32 {
        for kappa in [-(l + 1), l] {
            if kappa == 0 {
                continue;
            }
            let op = nucleus_op(ws, kappa);
            levels.extend(levels_for_kappa(&op, floor, 0.0, &OracleOptions::default()).unwrap());
            ops.push(op);
        }
    }
    let occupied = fermi_fill(levels, ws.neutrons).unwrap();
    let mut worst: f64 = 0.0;
    let mut nodes_ok = true;
    for level in &occupied {
        let op = ops.iter().find(|o| o.kappa() == level.kappa).unwrap();
        let s = train_state(&inverse(level.shift, SPECTRUM_EPOCHS, 1e-6), op).unwrap();
        let rel = relative(s.epsilon, level.energy);
        worst = worst.max(rel);
        nodes_ok &= s.nodes == level.index as usize - 1;
        detail(format!(
            "{:<8} occ {:>2} ε′ {:>9.4} oracle {:>10.5} DNN {:>10.5} rel {rel:.2e} nodes {}",
            level.label(),
            level.occupancy,
            level.shift,
            level.energy,
            s.epsilon,
            s.nodes
        ));
    }
    ok &= worst <= 1e-3 && nodes_ok;
    out.verdict(
        "5",
        ok,
        format!(
            "208Pb: 1s-3s both methods vs oracle ≤ 1e-3, oracle vs benchmark within 1%, {} occupied levels with worst DNN error {worst:.2e} ≤ 1e-3",
            occupied.len()
        ),
    );
}

fn criteria_6_and_7(out: &mut Outcome, hydrogen: Option<&HydrogenRuns>) {
    let op = hydrogen_op(20.0, 1700, -10.0);
    let ground = hydrogen_energy(1, -1, 1.0, C).unwrap();
    let reference = hydrogen_wavefunction(1, -1, 1.0, C, op.mesh()).unwrap();
    let base = inverse(-0.51, ABLATION_EPOCHS, 1e-9);
    let threshold = ground - Units::default().dirac_gap();

    let direct = direct_minimization(&base, &op, Architecture::SplitTwoHead).unwrap();
    detail(format!(
        "direct loss, split network: min ε = {:.6e} (threshold {threshold:.6e}), collapse epoch {:?}",
        direct.min_epsilon(),
        direct.collapse_epoch
    ));
    let fc_direct = direct_minimization(&base, &op, Architecture::FullyConnected).unwrap();
    detail(format!(
        "direct loss, fully connected: min ε = {:.6e}, collapse epoch {:?}",
        fc_direct.min_epsilon(),
        fc_direct.collapse_epoch
    ));
    let archs = compare_architectures(&base, &op, &reference).unwrap();
    let mut floor = archs
        .split
        .trace
        .min_epsilon()
        .unwrap()
        .min(archs.fully_connected.trace.min_epsilon().unwrap());
    if let Some(h) = hydrogen {
        for s in &h.states {
            floor = floor.min(s.trace.min_epsilon().unwrap());
        }
    }
    detail(format!(
        "inverse loss, same settings: lowest ε over every epoch {floor:.8} (ε′ = -0.51)"
    ));
    let collapsed = direct.min_epsilon() < threshold;
    let never_below = floor >= -0.51 && archs.split.trace.min_epsilon().unwrap() >= -0.51;
    out.verdict(
        "6",
        collapsed && never_below,
        "direct loss with the split network falls below −2mc² + ε₁; the inverse loss never goes below ε′".into(),
    );

    let ratio = archs.g_error_ratio();
    detail(format!(
        "G max error: fully connected {:.3e}, split {:.3e}, ratio {ratio:.1}",
        archs.fully_connected_error.g_max(),
        archs.split_error.g_max()
    ));
    let direct_f = large_component_output(&base, &op, &reference).unwrap();
    detail(format!(
        "direct F output: |G(r₁)| = {:.3e}, exact {:.3e}, ratio {:.1}",
        direct_f.state.spinor.g[0].abs(),
        reference.g[0].abs(),
        direct_f.origin_ratio
    ));
    out.verdict(
        "7",
        ratio >= 10.0 && direct_f.origin_ratio >= 10.0,
        "split-network G error ≥ 10× fully connected; direct-F |G(r₁)| ≥ 10× exact".into(),
    );
}

fn fd_gradient_error(
    graph: &mut TrialGraph<'_>,
    arch: Architecture,
    eps_lag: f64,
    seed: u64,
) -> f64 {
    const STEP: f64 = 1e-5;
    let params = NetParams::init(seed, arch, 16);
    let analytic = graph
        .evaluate(&params, eps_lag, true)
        .unwrap()
        .gradient
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xac);
    let (mut diff, mut norm) = (0.0, 0.0);
    for i in sample(&mut rng, params.len(), 20) {
        let mut plus = params.clone();
        plus.as_mut_slice()[i] += STEP;
        let mut minus = params.clone();
        minus.as_mut_slice()[i] -= STEP;
        let fd = (graph.evaluate(&plus, eps_lag, false).unwrap().loss
            - graph.evaluate(&minus, eps_lag, false).unwrap().loss)
            / (2.0 * STEP);
        diff += (fd - analytic[i]).powi(2);
        norm += analytic[i].powi(2);
    }
    (diff / norm).sqrt()
}

fn criterion_8(out: &mut Outcome) {
    let op = hydrogen_op(20.0, 100, -8.0);
    let mesh = op.mesh();
    let inv = op.factorize_shifted(-0.51).unwrap();
    let lower: Vec<RadialSpinor> = shift_invert_eigs(&op, -0.51, 2, &OracleOptions::default())
        .unwrap()
        .into_iter()
        .map(|p| p.spinor)
        .collect();

    let mut grad: f64 = 0.0;
    for arch in [Architecture::FullyConnected, Architecture::SplitTwoHead] {
        let cases: [(Objective, &[RadialSpinor]); 3] = [
            (Objective::Inverse(&inv), &[]),
            (Objective::Inverse(&inv), &lower),
            (Objective::Direct, &[]),
        ];
        for (objective, states) in cases {
            let mut graph =
                TrialGraph::new(&op, objective, OutputMode::RadialQuotient, states).unwrap();
            grad = grad.max(fd_gradient_error(&mut graph, arch, -0.51, 3));
        }
    }
    detail(format!(
        "worst normwise finite-difference gradient error {grad:.2e}"
    ));

    let exact = OracleOptions {
        physical_only: false,
        ..Default::default()
    };
    let mut mapping: f64 = 0.0;
    for p in shift_invert_eigs(&op, -0.51, 4, &exact).unwrap() {
        let v = p.spinor.stacked();
        let theta = 1.0 / (-0.51 - p.energy);
        let image = inv.apply_inverse(&v);
        let err: f64 = image
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - theta * b).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = v.iter().map(|x| (theta * x).powi(2)).sum::<f64>().sqrt();
        mapping = mapping.max(err / scale);
    }
    detail(format!("worst spectral-mapping defect {mapping:.2e}"));

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut projection: f64 = 0.0;
    for _ in 0..20 {
        let phi = RadialSpinor::new(
            (0..mesh.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            (0..mesh.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        );
        let once = orthonormal_project(&phi, &lower, mesh).unwrap();
        let twice = orthonormal_project(&once, &lower, mesh).unwrap();
        let scale = once.norm_squared(mesh).sqrt();
        for s in &lower {
            projection = projection.max(s.inner(&once, mesh).abs() / scale);
        }
        let mut d = twice.clone();
        d.f.iter_mut().zip(&once.f).for_each(|(a, b)| *a -= b);
        d.g.iter_mut().zip(&once.g).for_each(|(a, b)| *a -= b);
        projection = projection.max(d.norm_squared(mesh).sqrt() / scale);
    }
    detail(format!(
        "worst projection overlap or idempotence defect {projection:.2e}"
    ));

    let big = hydrogen_op(100.0, 1700, -10.0);
    let mut nodes_ok = true;
    for kappa in [-1, 1, -2, 2, -3] {
        let l = orbital_l(kappa);
        for n in (l + 1)..=6 {
            let f = hydrogen_wavefunction(n, kappa, 1.0, C, big.mesh())
                .unwrap()
                .f;
            nodes_ok &= count_nodes(&f).unwrap() == (n - 1 - l) as usize;
        }
    }
    detail(format!(
        "analytic node counts n−1−l for n ≤ 6: {}",
        if nodes_ok { "all match" } else { "MISMATCH" }
    ));

    let mut short = inverse(-0.51, 200, 1e-9);
    short.seed = 11;
    let a = train_state(&short, &op).unwrap();
    let b = train_state(&short, &op).unwrap();
    let norm = (a.spinor.norm_squared(mesh) - 1.0).abs();
    let same = a
        .params
        .as_slice()
        .iter()
        .zip(b.params.as_slice())
        .all(|(x, y)| x.to_bits() == y.to_bits())
        && a.trace.entries.iter().zip(&b.trace.entries).all(|(x, y)| {
            x.epsilon.to_bits() == y.epsilon.to_bits() && x.loss.to_bits() == y.loss.to_bits()
        });
    detail(format!(
        "normalization defect {norm:.1e}; seed determinism {}",
        if same { "bit-exact" } else { "DIFFERS" }
    ));

    out.verdict(
        "8",
        grad <= 1e-6 && mapping <= 1e-8 && projection <= 1e-10 && nodes_ok && norm <= 1e-10 && same,
        "gradient ≤ 1e-6, spectral mapping ≤ 1e-8, projection ≤ 1e-10, node counts, normalization ≤ 1e-10, determinism"
            .into(),
    );
}

fn main() -> ExitCode {
    let wanted: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let run = |id: &str| wanted.is_empty() || wanted.iter().any(|w| w == id);
    let mut out = Outcome {
        failures: Vec::new(),
    };
    let start = Instant::now();

    if run("1") {
        criterion_1(&mut out);
    }
    let hydrogen = run("2").then(|| criterion_2(&mut out));
    if run("3") {
        criterion_3(&mut out);
    }
    if run("4") {
        criterion_4(&mut out);
    }
    if run("5") {
        criterion_5(&mut out);
    }
    if run("6") || run("7") {
        criteria_6_and_7(&mut out, hydrogen.as_ref());
    }
    if run("8") {
        criterion_8(&mut out);
    }

    println!(
        "acceptance finished in {:.0} s",
        start.elapsed().as_secs_f64()
    );
    if out.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {}", out.failures.join(", "));
        ExitCode::FAILURE
    }
}
