//! Built-in consistency checks against the slow reference implementations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{estimate_lyapunov, integrate_rk4, LorenzParams, NodeDynamics};
use crate::filtration::{eh_filtration, FiltrationParams};
use crate::metrics::{bottleneck, wasserstein};
use crate::oracle;
use crate::persistence::{barcodes, rips_filtration};
use crate::pipeline::{EhConfig, EhSystem};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

/// Regular hexagon of the given side, centred at the origin.
pub fn hexagon(side: f64) -> Vec<[f64; 3]> {
    (0..6)
        .map(|k| {
            let a = std::f64::consts::PI / 3.0 * k as f64;
            [side * a.cos(), side * a.sin(), 0.0]
        })
        .collect()
}

pub fn persistence_oracle(seed: u64, cases: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let m = rng.gen_range(0..=7);
        let f = oracle::random_flag_filtration(&mut rng, m, 2);
        let fast = match barcodes(&f, 2, u64::MAX) {
            Ok(b) => b,
            Err(e) => return Check::new("persistence oracle", false, format!("case {case}: {e}")),
        };
        let slow = oracle::dense_barcodes(&f, 2);
        for k in 0..=2 {
            if oracle::multiset(&fast[k]) != oracle::multiset(&slow[k]) {
                return Check::new("persistence oracle", false, format!("case {case}: dimension {k} differs"));
            }
        }
    }
    Check::new("persistence oracle", true, format!("{cases} filtrations"))
}

pub fn matching_oracle(seed: u64, cases: usize) -> Check {
    use crate::metrics::PNorm;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d61);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let a = oracle::random_bars(&mut rng, 4);
        let b = oracle::random_bars(&mut rng, 4);
        let pairs = [
            (wasserstein(&a, &b, 1.0), PNorm::Finite(1.0)),
            (wasserstein(&a, &b, 2.0), PNorm::Finite(2.0)),
            (bottleneck(&a, &b), PNorm::Infinity),
        ];
        for (fast, p) in pairs {
            match fast {
                Ok(v) => worst = worst.max((v - oracle::brute_force_distance(&a, &b, p)).abs()),
                Err(e) => return Check::new("matching oracle", false, e.to_string()),
            }
        }
    }
    Check::new("matching oracle", worst <= 1e-9, format!("{cases} pairs, max error {worst:e}"))
}

pub fn hexagon_rips() -> Check {
    let f = match rips_filtration(&hexagon(8.0), 20.0) {
        Ok(f) => f,
        Err(e) => return Check::new("hexagon rips", false, e.to_string()),
    };
    let expected = (8.0, 8.0 * 3f64.sqrt());
    let fast = barcodes(&f, 2, u64::MAX).map(|b| b[1].pairs());
    let slow = oracle::dense_barcodes(&f, 2)[1].pairs();
    let ok = |bars: &[(f64, f64)]| {
        bars.len() == 1 && (bars[0].0 - expected.0).abs() <= 1e-9 && (bars[0].1 - expected.1).abs() <= 1e-9
    };
    match fast {
        Ok(bars) => Check::new(
            "hexagon rips",
            ok(&bars) && ok(&slow),
            format!("H1 {bars:?}; a death of 20 is not what the geometry gives, 8*sqrt(3) = {}", expected.1),
        ),
        Err(e) => Check::new("hexagon rips", false, e.to_string()),
    }
}

/// Least-squares slope of log error against log step for `u' = -u` on `[0, 1]`.
pub fn rk4_slope(steps: &[f64]) -> f64 {
    let points: Vec<(f64, f64)> = steps
        .iter()
        .map(|&h| {
            let traj = integrate_rk4(|_, u: &[f64], out: &mut [f64]| out[0] = -u[0], &[1.0], 0.0, 1.0, h)
                .expect("linear decay integrates");
            (h.ln(), (traj.last_state()[0] - (-1f64).exp()).abs().ln())
        })
        .collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn rk4_order() -> Check {
    let slope = rk4_slope(&[0.1, 0.05, 0.025]);
    Check::new("rk4 order", slope >= 3.9, format!("slope {slope:.4}"))
}

struct Linear(f64);

impl NodeDynamics for Linear {
    fn dim(&self) -> usize {
        1
    }
    fn rhs(&self, u: &[f64], out: &mut [f64]) {
        out[0] = self.0 * u[0];
    }
}

/// Largest exponent of the chaotic Lorenz system after a 50 time unit
/// transient from `(1, 1, 1)`.
pub fn lorenz_lyapunov(t_total: f64) -> crate::Result<f64> {
    let lorenz = LorenzParams::chaotic();
    let warm = integrate_rk4(|_, u: &[f64], out: &mut [f64]| lorenz.rhs(u, out), &[1.0, 1.0, 1.0], 0.0, 50.0, 0.01)?;
    estimate_lyapunov(&lorenz, warm.last_state(), t_total, 0.01, 10)
}

pub fn lyapunov() -> Check {
    let chaotic = lorenz_lyapunov(1000.0);
    let up = estimate_lyapunov(&Linear(1.0), &[0.0], 100.0, 0.01, 10);
    let down = estimate_lyapunov(&Linear(-1.0), &[0.0], 100.0, 0.01, 10);
    match (chaotic, up, down) {
        (Ok(c), Ok(u), Ok(d)) => Check::new(
            "lyapunov",
            (0.8..=1.0).contains(&c) && (u - 1.0).abs() <= 0.05 && (d + 1.0).abs() <= 0.05,
            format!("lorenz {c:.4}, +u {u:.4}, -u {d:.4}"),
        ),
        (c, u, d) => Check::new("lyapunov", false, format!("{c:?} {u:?} {d:?}")),
    }
}

/// Runs every node of the hexagon system and returns the serialized results.
pub fn hexagon_eh_json(workers: usize) -> crate::Result<String> {
    let system = EhSystem::prepare(&hexagon(8.0), EhConfig::default())?;
    let nodes = system.all_nodes(workers)?;
    Ok(serde_json::to_string(&nodes)?)
}

pub fn eh_determinism(workers: usize) -> Check {
    let runs: Vec<crate::Result<String>> = vec![hexagon_eh_json(1), hexagon_eh_json(1), hexagon_eh_json(workers.max(2))];
    match runs.into_iter().collect::<crate::Result<Vec<_>>>() {
        Ok(out) => Check::new(
            "eh determinism",
            out.windows(2).all(|w| w[0] == w[1]),
            format!("{} bytes per run", out[0].len()),
        ),
        Err(e) => Check::new("eh determinism", false, e.to_string()),
    }
}

pub fn filtration_fuzz(seed: u64, cases: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x66757a7a);
    let params = FiltrationParams {
        eps_p: 0.05,
        eps_sync: 0.1,
        eps_d: 8.0,
    };
    for case in 0..cases {
        let n = rng.gen_range(1..=8);
        let (set, points) = oracle::random_trajectory_set(&mut rng, n, 300);
        let perturbed = rng.gen_range(0..n);
        let eh = match eh_filtration(&set, &oracle::distances(&points), &params, perturbed, false, 2) {
            Ok(eh) => eh,
            Err(e) => return Check::new("filtration fuzz", false, format!("case {case}: {e}")),
        };
        let f = &eh.filtration;
        for j in 0..f.len() {
            for k in 0..f.len() {
                if j != k && !(f.vertex(j) <= f.edge(j, k) && f.edge(j, k) <= eh.sync.time) {
                    return Check::new("filtration fuzz", false, format!("case {case}: edge ({j}, {k}) out of order"));
                }
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let (set2, points2) = oracle::permute_trajectory_set(&set, &points, &perm);
        let eh2 = match eh_filtration(&set2, &oracle::distances(&points2), &params, perm[perturbed], false, 2) {
            Ok(eh) => eh,
            Err(e) => return Check::new("filtration fuzz", false, format!("case {case}: {e}")),
        };
        if !oracle::same_up_to_relabeling(&eh, &eh2, &perm) {
            return Check::new("filtration fuzz", false, format!("case {case}: relabeling changed the filtration"));
        }
    }
    Check::new("filtration fuzz", true, format!("{cases} trajectory sets"))
}

/// Every check, in a fixed order.
pub fn run_all(seed: u64, workers: usize) -> Vec<Check> {
    vec![
        persistence_oracle(seed, 200),
        matching_oracle(seed, 200),
        hexagon_rips(),
        rk4_order(),
        lyapunov(),
        eh_determinism(workers),
        filtration_fuzz(seed, 1000),
    ]
}
