//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! Every derived quantity is recomputed here from first principles (generative
//! coefficients, brute-force geometry, closed-form recursions, hand-evaluated rewards,
//! direct error sums) and compared against what the library or the binary reports.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use cli::StartsFile;
use evalkit::{build_benchmark, plain_vs_ofs, rollout, Env, Outcome, Start, TreePolicy};
use explain::{AttributionFrame, DISTANCE_FEATURES, HEADING_FEATURES, OBSTACLE_FEATURES, VELOCITY_FEATURES};
use harbor_env::{
    collision, reward, step, wrap_angle, Action, HarborGeometry, Pose, RewardParams, StateVector,
    Velocity, ACTION_BOUNDS,
};
use lmt_core::{BuildConfig, Coefficients, Dataset, LmTree, N_FEATURES, N_OUTPUTS};
use policy::{BaselineController, Policy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_lmtdock");

type Verdict = Result<String, String>;

fn lmtdock(out: &Path, args: &[&str]) -> Result<(), String> {
    let o = Command::new(BIN)
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("LMTDOCK_OUT")
        .output()
        .map_err(|e| format!("cannot run lmtdock: {e}"))?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("lmtdock {args:?} failed: {}", String::from_utf8_lossy(&o.stderr).trim()))
    }
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Artifacts of one seeded end-to-end run of the binary.
struct Pipeline {
    starts: PathBuf,
    data: PathBuf,
    tree: PathBuf,
    fidelity: PathBuf,
    report: PathBuf,
}

/// 1000 starts (seed 42), baseline data on the training split, a 100-leaf tree
/// (seed 7), evaluation with 50 closed-loop starts, one rollout and its report.
fn pipeline(root: &Path) -> Result<Pipeline, String> {
    let p = Pipeline {
        starts: root.join("starts/starts.json"),
        data: root.join("data/dataset.csv"),
        tree: root.join("tree/tree.json"),
        fidelity: root.join("eval/fidelity.json"),
        report: root.join("plot/report.svg"),
    };
    lmtdock(&root.join("starts"), &["gen-starts", "--n", "1000", "--seed", "42"])?;
    lmtdock(&root.join("data"), &["gen-data", "--starts", s(&p.starts), "--split", "train"])?;
    lmtdock(&root.join("tree"), &["build", "--data", s(&p.data), "--leaves", "100", "--seed", "7"])?;
    lmtdock(
        &root.join("eval"),
        &["eval", "--tree", s(&p.tree), "--starts", s(&p.starts), "--closed-loop", "50", "--seed", "42"],
    )?;
    lmtdock(&root.join("rollout"), &["rollout", "--starts", s(&p.starts), "--tree", s(&p.tree)])?;
    let episode = root.join("rollout/episode.ndjson");
    lmtdock(&root.join("plot"), &["plot", "--episode", s(&episode), "--tree", s(&p.tree)])?;
    Ok(p)
}

fn test_starts(p: &Pipeline) -> Result<Vec<Start>, String> {
    let text = std::fs::read_to_string(&p.starts).map_err(|e| e.to_string())?;
    let f: StartsFile = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    Ok(f.splits.test)
}

fn load_tree(path: &Path) -> Result<LmTree, String> {
    LmTree::load(path).map_err(|e| e.to_string())
}

/// Tree action in physical units, clipped like any commanded action.
fn tree_action(tree: &LmTree, x: &StateVector) -> [f64; N_OUTPUTS] {
    Action::from_array(tree.denormalize(&tree.predict(&x.to_array())))
        .clamp()
        .to_array()
}

// ---------------------------------------------------------------------------------
// Piecewise-linear oracle recovery
// ---------------------------------------------------------------------------------

/// Four quadrants over (x̃, ỹ) split at zero, each with its own affine map of
/// (x̃, ỹ, u). Rows keep clear of the region boundaries.
fn oracle_rows(n: usize, seed: u64, coef: &[[[f64; 4]; N_OUTPUTS]; 4]) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coord = |rng: &mut ChaCha8Rng| loop {
        let v: f64 = rng.random_range(-1.0..=1.0);
        if v.abs() > 0.1 {
            return v;
        }
    };
    let mut data = Dataset::with_capacity(n);
    for _ in 0..n {
        let mut x = [0.0; N_FEATURES];
        x[0] = coord(&mut rng);
        x[1] = coord(&mut rng);
        x[2] = rng.random_range(-1.0..1.0);
        x[3] = rng.random_range(-1.0..1.0);
        x[4] = rng.random_range(-0.5..0.5);
        x[5] = rng.random_range(-0.05..0.05);
        x[7] = rng.random_range(0.0..50.0);
        x[8] = rng.random_range(-PI..PI);
        let region = usize::from(x[0] > 0.0) * 2 + usize::from(x[1] > 0.0);
        let y = std::array::from_fn(|a| {
            let c = coef[region][a];
            c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[3]
        });
        data.push(x, y);
    }
    data
}

fn oracle_recovery(dir: &Path) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let coef: [[[f64; 4]; N_OUTPUTS]; 4] =
        std::array::from_fn(|_| std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-0.25..0.25))));
    let train = oracle_rows(20_000, 1, &coef);
    let held_out = oracle_rows(5_000, 2, &coef);
    let csv = dir.join("oracle.csv");
    train.save_csv(&csv).map_err(|e| e.to_string())?;

    let out = dir.join("oracle");
    let t0 = Instant::now();
    lmtdock(
        &out,
        &["build", "--data", s(&csv), "--leaves", "4", "--ofs", "--jitter", "0", "--min-samples", "30"],
    )?;
    let elapsed = t0.elapsed().as_secs_f64();
    let tree = load_tree(&out.join("tree.json"))?;

    let sse: f64 = held_out
        .features
        .iter()
        .zip(&held_out.targets)
        .map(|(x, y)| {
            let p = tree.predict(x);
            (0..N_OUTPUTS).map(|a| (p[a] - y[a]).powi(2)).sum::<f64>()
        })
        .sum();
    let mse = sse / (held_out.len() * N_OUTPUTS) as f64;
    let splits: Vec<String> = tree
        .metadata
        .history
        .iter()
        .filter_map(|h| Some(format!("x{}<={:.3}", h.feature?, h.threshold?)))
        .collect();
    let detail = format!(
        "held-out MSE {mse:.3e} (< 1e-8), splits [{}], build {elapsed:.2} s (< 10 s)",
        splits.join(", ")
    );
    if mse < 1e-8 && elapsed < 10.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------------
// OFS speedup
// ---------------------------------------------------------------------------------

/// Rows kept for timing; whole leading episodes of the baseline dataset.
const BENCH_ROWS: usize = 250_000;

fn ofs_speedup(p: &Pipeline) -> Verdict {
    let full = Dataset::load_csv(&p.data).map_err(|e| e.to_string())?;
    let rows: Vec<usize> = (0..full.len().min(BENCH_ROWS)).collect();
    let data = full.subset(&rows);
    if data.len() < 200_000 {
        return Err(format!("only {} rows available (need >= 200000)", data.len()));
    }
    let cases = plain_vs_ofs(&[10, 50], &BuildConfig::default());
    let table = build_benchmark(&data, &cases, 5).map_err(|e| e.to_string())?;

    let median_of = |label: &str| {
        table
            .rows
            .iter()
            .find(|r| r.label == label)
            .map(|r| median(&r.times_s))
            .ok_or_else(|| format!("no timing row {label}"))
    };
    let mut parts = Vec::new();
    let mut pass = true;
    for leaves in [10, 50] {
        let plain = median_of(&format!("plain-{leaves}"))?;
        let ofs = median_of(&format!("ofs-{leaves}"))?;
        let ratio = ofs / plain;
        pass &= ratio <= 0.85;
        parts.push(format!("{leaves} leaves ofs/plain {ratio:.3} ({ofs:.2}s/{plain:.2}s)"));
    }
    let detail = format!("{} rows, {} (<= 0.85)", data.len(), parts.join(", "));
    if pass {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------------
// Fidelity
// ---------------------------------------------------------------------------------

fn fidelity(p: &Pipeline, env: &Env) -> Verdict {
    let tree = load_tree(&p.tree)?;
    if tree.n_leaves() != 100 {
        return Err(format!("tree has {} leaves, expected 100", tree.n_leaves()));
    }
    let baseline = BaselineController::default();
    let starts = test_starts(p)?;
    if starts.len() != 150 {
        return Err(format!("test split has {} starts, expected 150", starts.len()));
    }

    let mut abs_sum = [0.0; N_OUTPUTS];
    let mut n = 0usize;
    for start in &starts {
        let ep = rollout(&baseline, None, env, start).map_err(|e| e.to_string())?;
        for rec in &ep.steps {
            let reference = baseline.predict(&rec.state).map_err(|e| e.to_string())?.clamp().to_array();
            let candidate = tree_action(&tree, &rec.state);
            for a in 0..N_OUTPUTS {
                abs_sum[a] += (reference[a] - candidate[a]).abs();
            }
            n += 1;
        }
    }
    let pct: [f64; N_OUTPUTS] =
        std::array::from_fn(|a| 100.0 * abs_sum[a] / n as f64 / (ACTION_BOUNDS[a].max - ACTION_BOUNDS[a].min));

    let report = read_json(&p.fidelity)?;
    let reported = &report["output_error"]["actions"];
    for (a, mine) in pct.iter().enumerate() {
        let theirs = reported[a]["mae_pct"].as_f64().ok_or("fidelity.json lacks mae_pct")?;
        if !close(*mine, theirs, 1e-9) {
            return Err(format!("action {a}: recomputed MAE {mine:.6}% but fidelity.json says {theirs:.6}%"));
        }
    }
    let worst = pct.iter().cloned().fold(0.0, f64::max);
    let detail = format!(
        "{n} test states, MAE % of range [{}] worst {worst:.2} (<= 5)",
        pct.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join(", ")
    );
    if worst <= 5.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------------
// Attribution invariants
// ---------------------------------------------------------------------------------

fn attribution_invariants(p: &Pipeline) -> Verdict {
    let tree = load_tree(&p.tree)?;
    let data = Dataset::load_csv(&p.data).map_err(|e| e.to_string())?;
    let leaves: Vec<Coefficients> = tree
        .leaf_ids()
        .into_iter()
        .map(|id| tree.leaf(id).expect("listed leaf").coefficients)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut n_constant = 0;
    let mut n_rows_checked = 0;

    for pair in 0..100_000u64 {
        let leaf_index = rng.random_range(0..leaves.len());
        let mut w = leaves[leaf_index];
        let constant = pair % 10 == 0;
        if constant {
            for row in w.iter_mut() {
                row[..N_FEATURES].fill(0.0);
            }
        }
        let x = data.features[rng.random_range(0..data.len())];
        let frame = AttributionFrame::from_leaf(&w, &x, leaf_index, pair);

        if constant {
            n_constant += 1;
            let zero_rows = frame.raw.iter().all(|r| r.iter().all(|v| *v == 0.0));
            if !(zero_rows && frame.degenerate && frame.degenerate_outputs.iter().all(|d| *d)) {
                return Err(format!("pair {pair}: constant leaf not flagged degenerate with zero rows"));
            }
        }
        for a in 0..N_OUTPUTS {
            let terms: [f64; N_FEATURES] = std::array::from_fn(|f| w[a][f] * x[f]);
            let denom: f64 = terms.iter().map(|t| t.abs()).sum();
            if denom == 0.0 {
                if !frame.degenerate_outputs[a] || frame.raw[a].iter().any(|v| *v != 0.0) {
                    return Err(format!("pair {pair} output {a}: all-zero terms not flagged"));
                }
                continue;
            }
            n_rows_checked += 1;
            let l1: f64 = frame.raw[a].iter().map(|v| v.abs()).sum();
            if (l1 - 1.0).abs() > 1e-9 {
                return Err(format!("pair {pair} output {a}: L1 sum {l1}"));
            }
            for f in 0..N_FEATURES {
                if (frame.raw[a][f] - terms[f] / denom).abs() > 1e-12 {
                    return Err(format!("pair {pair} output {a} feature {f}: share differs"));
                }
            }
        }
        let combined: [f64; N_FEATURES] =
            std::array::from_fn(|f| (0..N_OUTPUTS).map(|a| frame.raw[a][f].abs()).sum());
        let group = |idx: &[usize]| idx.iter().map(|&f| combined[f]).sum::<f64>();
        let expected = [
            group(&DISTANCE_FEATURES),
            group(&VELOCITY_FEATURES),
            group(&OBSTACLE_FEATURES),
            group(&HEADING_FEATURES),
        ];
        let combined_ok = combined.iter().zip(&frame.combined).all(|(a, b)| (a - b).abs() <= 1e-12);
        let compressed_ok = expected
            .iter()
            .zip(frame.compressed.to_array())
            .all(|(a, b)| (a - b).abs() <= 1e-12);
        if !(combined_ok && compressed_ok) {
            return Err(format!("pair {pair}: combined or compressed sums differ"));
        }
    }
    Ok(format!(
        "100000 pairs over {} leaves ({n_constant} constant), {n_rows_checked} rows with L1 = 1 (1e-9), groups exact (1e-12)",
        leaves.len()
    ))
}

// ---------------------------------------------------------------------------------
// Simulator oracles
// ---------------------------------------------------------------------------------

/// Vertices of `{p : a p <= b}` from all pairwise line intersections that satisfy
/// every constraint.
fn brute_vertices(a: &[[f64; 2]], b: &[f64]) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let det = a[i][0] * a[j][1] - a[i][1] * a[j][0];
            if det.abs() < 1e-12 {
                continue;
            }
            let p = [
                (b[i] * a[j][1] - a[i][1] * b[j]) / det,
                (a[i][0] * b[j] - b[i] * a[j][0]) / det,
            ];
            let inside = (0..a.len()).all(|k| a[k][0] * p[0] + a[k][1] * p[1] - b[k] <= 1e-9 * a[k][0].hypot(a[k][1]));
            if inside {
                out.push(p);
            }
        }
    }
    out
}

fn brute_collision(pose: &Pose, geom: &HarborGeometry) -> bool {
    let b: Vec<f64> = geom.hull.b.iter().map(|b| b * geom.hull_margin).collect();
    let (sn, cs) = pose.psi.sin_cos();
    brute_vertices(&geom.hull.a, &b).iter().any(|v| {
        let p = [cs * v[0] - sn * v[1] + pose.x, sn * v[0] + cs * v[1] + pose.y];
        geom.dock.a.iter().zip(&geom.dock.b).any(|(n, bk)| {
            (n[0] * p[0] + n[1] * p[1] - bk) / n[0].hypot(n[1]) > 1e-9
        })
    })
}

fn collision_oracle(env: &Env) -> Result<String, String> {
    let geom = &env.geometry;
    let dock = brute_vertices(&geom.dock.a, &geom.dock.b);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in &dock {
        for k in 0..2 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut hits = 0;
    for i in 0..10_000 {
        let pose = Pose::new(
            rng.random_range(lo[0] - 20.0..hi[0] + 20.0),
            rng.random_range(lo[1] - 20.0..hi[1] + 20.0),
            rng.random_range(-PI..PI),
        );
        let brute = brute_collision(&pose, geom);
        if brute != (collision(&pose, geom) == 1) {
            return Err(format!("pose {i} {pose:?}: brute force says {brute}"));
        }
        hits += usize::from(brute);
    }
    Ok(format!("collision agrees on 10000 poses ({hits} colliding)"))
}

/// Force and moment (N, N·m) of an action on the default thruster layout.
fn generalized_force(action: &Action, env: &Env) -> [f64; 3] {
    let angles = [action.alpha1, action.alpha2, FRAC_PI_2];
    let forces = [action.f1, action.f2, action.f3];
    let mut tau = [0.0; 3];
    for ((f, alpha), t) in forces.iter().zip(angles).zip(&env.vessel.thrusters) {
        tau[0] += f * alpha.cos();
        tau[1] += f * alpha.sin();
        tau[2] += f * (t.lx * alpha.sin() - t.ly * alpha.cos());
    }
    tau.map(|v| v * 1e3)
}

fn euler_oracle(env: &Env) -> Result<String, String> {
    let h = env.config.h;
    let m = [env.vessel.mass[0][0], env.vessel.mass[1][1], env.vessel.mass[2][2]];
    let d = [env.vessel.damping[0][0], env.vessel.damping[1][1], env.vessel.damping[2][2]];
    let q: [f64; 3] = std::array::from_fn(|i| 1.0 - h * d[i] / m[i]);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    const STEPS: i32 = 400;

    for trial in 0..400 {
        let torque_free = trial % 2 == 1;
        let action = if torque_free {
            // equal aft thrusts; the bow thruster cancels their moment
            let f = rng.random_range(-20.0..20.0);
            let alpha = rng.random_range(-1.0..1.0);
            let f3 = 70.0 * f * f64::sin(alpha) / 30.0;
            Action { f1: f, f2: f, f3, alpha1: alpha, alpha2: alpha }
        } else {
            Action::from_array(std::array::from_fn(|k| {
                rng.random_range(ACTION_BOUNDS[k].min..=ACTION_BOUNDS[k].max)
            }))
        };
        let tau = generalized_force(&action, env);
        let ss: [f64; 3] = std::array::from_fn(|i| tau[i] / d[i]);
        let pose0 = Pose::new(rng.random_range(-200.0..200.0), rng.random_range(-200.0..200.0), rng.random_range(-PI..PI));
        let nu0 = [
            rng.random_range(-2.0..2.0),
            rng.random_range(-0.5..0.5),
            if torque_free { 0.0 } else { rng.random_range(-0.01..0.01) },
        ];

        let (mut pose, mut vel) = (pose0, Velocity { u: nu0[0], v: nu0[1], r: nu0[2] });
        for k in 1..=STEPS {
            (pose, vel) = step(&pose, &vel, &action, h, &env.vessel).map_err(|e| e.to_string())?;
            let nu_k: [f64; 3] = std::array::from_fn(|i| ss[i] + q[i].powi(k) * (nu0[i] - ss[i]));
            // sum of the velocities used by the first k steps
            let nu_sum: [f64; 3] =
                std::array::from_fn(|i| k as f64 * ss[i] + (nu0[i] - ss[i]) * (1.0 - q[i].powi(k)) / (1.0 - q[i]));
            let got = [vel.u, vel.v, vel.r];
            for i in 0..3 {
                let err = (got[i] - nu_k[i]).abs() / nu_k[i].abs().max(1.0);
                worst = worst.max(err);
            }
            let psi = pose0.psi + h * nu_sum[2];
            worst = worst.max(wrap_angle(pose.psi - psi).abs() / psi.abs().max(1.0));
            if torque_free {
                let (sn, cs) = pose0.psi.sin_cos();
                let x = pose0.x + h * (cs * nu_sum[0] - sn * nu_sum[1]);
                let y = pose0.y + h * (sn * nu_sum[0] + cs * nu_sum[1]);
                worst = worst.max((pose.x - x).abs() / x.abs().max(1.0));
                worst = worst.max((pose.y - y).abs() / y.abs().max(1.0));
            }
            if worst > 1e-12 {
                return Err(format!("trial {trial} step {k}: deviation {worst:.3e} from the closed form"));
            }
        }
    }
    Ok(format!("Euler steps match the closed form over 400 x {STEPS} steps (max rel dev {worst:.1e})"))
}

/// `(x̃, ỹ, ψ̃, l, d_obs, ḋ)` and hand-evaluated `[r_dd, r_psi, r_obs, r_ddot]`.
const REWARD_CASES: [([f64; 6], [f64; 4]); 20] = [
    ([0.0, 0.0, 0.0, 0.0, 50.0, 0.0], [2.5, 2.5, -0.0, 0.0]),
    ([0.0, 0.0, 0.0, 1.0, 0.0, 0.0], [0.0, 0.0, -600.0, 0.0]),
    ([1.0, 1.0, 0.05, 0.0, 30.0, -0.3], [2.450496683266888, 2.4997296858952733, -0.0, -0.3]),
    ([2.5, -1.0, 0.1, 0.0, 10.0, 0.2], [1.9222151248269799, 2.4956784799015668, -0.0, 0.0]),
    ([3.0, 0.0, 0.0, 0.0, 2.0, -1.5], [1.667442027146186, 2.5, -0.0008386565697562796, -1.5]),
    ([0.0, 3.5, -0.2, 0.0, 1.0, 0.0], [1.1805474031391345, 0.0, -1.5163266492815834, 0.0]),
    ([5.0, 5.0, 0.0, 0.0, 0.5, 0.1], [9.316632930196628e-06, 0.0, -2.4230830861908603, 0.0]),
    ([10.0, 0.0, 0.3, 0.0, 0.8, -0.5], [4.821874619909794e-22, 0.0, -2.0370256554218233, -0.5]),
    ([-20.0, 15.0, 1.0, 0.0, 5.0, -2.0], [0.0, 0.0, -4.7963891723369625e-136, -2.0]),
    ([0.0, 0.0, 2.0, 0.0, 40.0, 0.4], [0.0, 0.0, -600.0, 0.4]),
    ([0.0, 0.0, -2.0, 0.0, 40.0, -0.4], [0.0, 0.0, -600.0, -0.4]),
    ([100.0, 50.0, 0.5, 0.0, 60.0, -1.0], [0.0, 0.0, -0.0, -1.0]),
    ([1.0, 0.0, 1.6, 0.0, 3.0, 0.7], [0.0, 0.0, -600.0, 0.7]),
    ([0.5, -0.5, 0.02, 0.0, 1.2, 0.0], [2.4968769523114522, 2.4999930795943532, -0.8864688714022474, 0.0]),
    ([4.0, 2.0, 0.0, 1.0, 0.0, -0.1], [0.0, 0.0, -600.0, -0.1]),
    ([3.3, 0.0, 0.01, 0.0, 0.0, 0.05], [1.3817215640750842, 2.499999567474086, -2.5, 0.0]),
    ([-1.0, -2.0, -0.15, 0.0, 0.3, -0.05], [2.2062422564614885, 2.4781989868002023, -2.4898954754737836, -0.05]),
    ([0.0, 0.0, 3.1315926535897933, 1.0, 0.0, 0.3], [0.0, 0.0, -600.0, 0.3]),
    ([2.0, 2.0, 0.25, 0.0, 7.0, -3.0], [1.815372592684227, 2.3366272697822725, -0.0, -3.0]),
    ([30.0, -40.0, -1.2, 0.0, 200.0, 1.2], [0.0, 0.0, -0.0, 0.0]),
];

fn reward_oracle() -> Result<String, String> {
    let params = RewardParams::default();
    let mut contact_cases = 0;
    for (i, (s, want)) in REWARD_CASES.iter().enumerate() {
        let (total, c) = reward(s[0], s[1], s[2], s[3], s[4], s[5], &params);
        let got = [c.r_dd, c.r_psi, c.r_obs, c.r_ddot];
        for k in 0..4 {
            if !close(got[k], want[k], 1e-12) {
                return Err(format!("reward case {i} component {k}: {} vs {}", got[k], want[k]));
            }
        }
        if !close(total, want.iter().sum(), 1e-12) {
            return Err(format!("reward case {i}: total {total} is not the component sum"));
        }
        if s[3] == 1.0 {
            contact_cases += 1;
        }
    }
    Ok(format!("20 reward cases match ({contact_cases} in contact give -600)"))
}

fn simulator_oracles(env: &Env) -> Verdict {
    let parts = [collision_oracle(env)?, euler_oracle(env)?, reward_oracle()?];
    Ok(parts.join("; "))
}

// ---------------------------------------------------------------------------------
// Monotone build
// ---------------------------------------------------------------------------------

fn monotone_build(p: &Pipeline) -> Verdict {
    let full = Dataset::load_csv(&p.data).map_err(|e| e.to_string())?;
    let mut splits = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let rows: Vec<usize> = (0..20_000).map(|_| rng.random_range(0..full.len())).collect();
        let data = full.subset(&rows);
        let base = if seed % 2 == 0 { BuildConfig::default() } else { BuildConfig::plain() };
        let cfg = BuildConfig {
            max_leaves: 40,
            min_samples: 50,
            rng_seed: seed,
            ..base
        };
        let tree = lmt_core::grow(&data, &cfg).map_err(|e| e.to_string())?;
        let history = &tree.metadata.history;
        for w in history.windows(2) {
            if w[1].training_loss > w[0].training_loss {
                return Err(format!(
                    "seed {seed}: loss rose from {} to {} at {} leaves",
                    w[0].training_loss, w[1].training_loss, w[1].n_leaves
                ));
            }
        }
        splits += history.len().saturating_sub(1);

        let sse: f64 = data
            .features
            .iter()
            .zip(&data.targets)
            .map(|(x, y)| {
                let pred = tree.predict(x);
                (0..N_OUTPUTS).map(|a| (pred[a] - y[a]).powi(2)).sum::<f64>()
            })
            .sum();
        let mse = sse / (data.len() * N_OUTPUTS) as f64;
        let last = history.last().ok_or("empty growth history")?.training_loss;
        if (mse - last).abs() > 1e-9 * mse.max(1e-12) {
            return Err(format!("seed {seed}: recorded loss {last} but recomputed {mse}"));
        }
    }
    Ok(format!("20 builds, {splits} accepted splits, loss never increased; final loss matches recomputed MSE"))
}

// ---------------------------------------------------------------------------------
// Determinism
// ---------------------------------------------------------------------------------

fn determinism(first: &Pipeline, root: &Path) -> Verdict {
    let second = pipeline(root)?;
    let mut same = Vec::new();
    for (name, a, b) in [
        ("tree.json", &first.tree, &second.tree),
        ("fidelity.json", &first.fidelity, &second.fidelity),
        ("report.svg", &first.report, &second.report),
    ] {
        let (x, y) = (std::fs::read(a).map_err(|e| e.to_string())?, std::fs::read(b).map_err(|e| e.to_string())?);
        if x != y {
            return Err(format!("{name} differs between two seeded runs"));
        }
        same.push(format!("{name} ({} bytes)", x.len()));
    }
    Ok(format!("byte-identical across two runs: {}", same.join(", ")))
}

// ---------------------------------------------------------------------------------
// Closed-loop agreement
// ---------------------------------------------------------------------------------

fn closed_loop(p: &Pipeline, env: &Env) -> Verdict {
    let tree = load_tree(&p.tree)?;
    let surrogate = TreePolicy::new(tree);
    let baseline = BaselineController::default();
    let starts: Vec<Start> = test_starts(p)?.into_iter().take(50).collect();

    let mut agree = 0;
    let mut gaps = Vec::new();
    let mut outcomes = Vec::new();
    for start in &starts {
        let a = rollout(&baseline, None, env, start).map_err(|e| e.to_string())?;
        let b = rollout(&surrogate, None, env, start).map_err(|e| e.to_string())?;
        let total = |steps: &[evalkit::StepRecord]| steps.iter().map(|r| r.reward_total).sum::<f64>();
        let (ra, rb) = (total(&a.steps), total(&b.steps));
        if a.outcome == b.outcome {
            agree += 1;
            gaps.push(if ra == rb { 0.0 } else { (rb - ra).abs() / ra.abs() });
        }
        outcomes.push((a.outcome, b.outcome));
    }
    let agreement = agree as f64 / starts.len() as f64;
    let gap = if gaps.is_empty() { f64::INFINITY } else { median(&gaps) };

    let report = read_json(&p.fidelity)?;
    let cl = &report["closed_loop"];
    let reported_agreement = cl["outcome_agreement"].as_f64().ok_or("fidelity.json lacks agreement")?;
    let reported_gap = cl["median_relative_reward_gap"].as_f64().ok_or("fidelity.json lacks reward gap")?;
    if !close(agreement, reported_agreement, 1e-12) || !close(gap, reported_gap, 1e-9) {
        return Err(format!(
            "recomputed agreement {agreement} / gap {gap} differ from fidelity.json {reported_agreement} / {reported_gap}"
        ));
    }
    let reached = outcomes.iter().filter(|(a, _)| *a == Outcome::ReachedBerth).count();
    let detail = format!(
        "{} starts, outcome agreement {agreement:.2} (>= 0.80), median reward gap {gap:.4} (<= 0.15), baseline reached {reached}",
        starts.len()
    );
    if agreement >= 0.8 && gap <= 0.15 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------------

fn report(name: &str, limit: Duration, f: impl FnOnce() -> Verdict) -> bool {
    let t0 = Instant::now();
    let verdict = f();
    let elapsed = t0.elapsed();
    let in_time = elapsed <= limit;
    let (pass, detail) = match verdict {
        Ok(d) => (in_time, d),
        Err(d) => (false, d),
    };
    let timing = format!("{:.1} s, limit {} s", elapsed.as_secs_f64(), limit.as_secs());
    println!("{} [{name}] {detail} [{timing}]", if pass { "PASS" } else { "FAIL" });
    pass
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let env = Env::default();
    let min = |m: u64| Duration::from_secs(60 * m);

    let mut results = Vec::new();
    results.push(report("oracle-recovery", Duration::from_secs(10), || oracle_recovery(dir.path())));
    results.push(report("simulator-oracles", Duration::from_secs(30), || simulator_oracles(&env)));

    let t0 = Instant::now();
    let shared = pipeline(&dir.path().join("run-a"));
    let pipeline_s = t0.elapsed();
    match &shared {
        Ok(p) => {
            let with_pipeline = |limit: Duration| limit.saturating_sub(pipeline_s);
            results.push(report("fidelity", with_pipeline(min(20)), || fidelity(p, &env)));
            results.push(report("closed-loop", with_pipeline(min(15)), || closed_loop(p, &env)));
            results.push(report("attribution-invariants", Duration::from_secs(30), || attribution_invariants(p)));
            results.push(report("monotone-build", min(5), || monotone_build(p)));
            results.push(report("ofs-speedup", min(15), || ofs_speedup(p)));
            results.push(report("determinism", min(30), || determinism(p, &dir.path().join("run-b"))));
        }
        Err(e) => {
            for name in [
                "fidelity",
                "closed-loop",
                "attribution-invariants",
                "monotone-build",
                "ofs-speedup",
                "determinism",
            ] {
                println!("FAIL [{name}] pipeline did not run: {e}");
                results.push(false);
            }
        }
    }

    let failed = results.iter().filter(|r| !**r).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
