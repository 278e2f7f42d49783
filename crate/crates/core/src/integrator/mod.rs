//! Order-preserving adaptive time stepping.
//!
//! Each macro step of length h treats the far-field repulsion and the
//! confinement explicitly and the near-field repulsion (pairs at most
//! `implicit_band` indices apart) implicitly:
//!
//! 1. z = x + h(−U′(x) + f_far(x)) + sqrt(2σ_N)·ΔW
//! 2. y = argmin over ordered y of ½|y − z|² + (h/N)Σ_{0<j−i≤band} V(y_j − y_i)
//!
//! The near-field energy is convex and blows up at collisions, so y is strictly
//! ordered whatever z is. Step 2 is a proximal map and hence non-expansive,
//! which makes synchronously coupled pairs contract by (1 − λh) per step under
//! quadratic confinement. Steps live on a dyadic grid; a rejected step is retried
//! at half length on the bisected Brownian path.

mod banded;
mod kernel;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::brownian::{PathGrid, PathSet, DEFAULT_MAX_DEPTH};
use crate::dynamics::{check_ordered, energy_h_alpha, lyapunov_hcal, weighted_interaction_stat, ModelParams, ParticleConfig};
use crate::error::{Error, Result};

use banded::BandedSpd;
use kernel::{far_field, PairKernel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    /// Largest macro step.
    pub h_max: f64,
    /// Explicit-part stability: h·(L_U + far-field stiffness) ≤ 2·theta_drift.
    pub theta_drift: f64,
    /// Noise standard deviation sqrt(2σ_N h) ≤ theta_diff · mean gap.
    pub theta_diff: f64,
    pub gap_floor: f64,
    pub max_rejections: usize,
    /// Pairs at most this many indices apart are treated implicitly; by
    /// default 4 for α ≤ 1.25 and 12 above.
    pub implicit_band: Option<usize>,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Base step of the Brownian path grid; defaults to h_max. Must be h_max·2^k.
    pub path_step: Option<f64>,
    pub path_depth: u32,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            h_max: 1e-3,
            theta_drift: 0.5,
            theta_diff: 0.9,
            gap_floor: 1e-12,
            max_rejections: 60,
            implicit_band: None,
            newton_tol: 1e-9,
            newton_max_iter: 100,
            path_step: None,
            path_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

impl SchemeConfig {
    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_max.is_finite() && self.h_max > 0.0) {
            return Err(Error::param("h_max", "h_max must be finite and > 0"));
        }
        if !(self.theta_drift > 0.0 && self.theta_drift < 1.0) {
            return Err(Error::param("theta_drift", "theta_drift must lie in (0,1)"));
        }
        if !(self.theta_diff > 0.0 && self.theta_diff < 1.0) {
            return Err(Error::param("theta_diff", "theta_diff must lie in (0,1)"));
        }
        if !(self.gap_floor.is_finite() && self.gap_floor > 0.0) {
            return Err(Error::param("gap_floor", "gap_floor must be finite and > 0"));
        }
        if self.implicit_band == Some(0) {
            return Err(Error::param("implicit_band", "implicit_band must be >= 1"));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return Err(Error::param("newton_tol", "newton_tol must be > 0 and newton_max_iter >= 1"));
        }
        self.path_levels()?;
        Ok(())
    }

    fn path_levels(&self) -> Result<(PathGrid, u32)> {
        let base = self.path_step.unwrap_or(self.h_max);
        let grid = PathGrid::new(base, self.path_depth)?;
        let ratio = base / self.h_max;
        let k = ratio.log2().round();
        if !(k >= 0.0) || (2f64.powi(k as i32) - ratio).abs() > 1e-12 * ratio {
            return Err(Error::param("path_step", "path_step must equal h_max times a power of two"));
        }
        Ok((grid, k as u32))
    }

    /// Implicit band used for exponent `alpha`.
    pub fn band_for(&self, alpha: f64) -> usize {
        self.implicit_band.unwrap_or(if alpha <= 1.25 { 4 } else { 12 })
    }

    /// Brownian path grid implied by this scheme.
    pub fn path_grid(&self) -> Result<PathGrid> {
        Ok(self.path_levels()?.0)
    }
}

/// Functionals recorded at every output time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub hcal: f64,
    pub h_alpha: f64,
    pub s_stat: f64,
    pub m2: f64,
    pub m4: f64,
}

impl Diagnostics {
    pub fn compute(x: &[f64], alpha: f64) -> Result<Self> {
        let nf = x.len() as f64;
        Ok(Self {
            hcal: lyapunov_hcal(x),
            h_alpha: energy_h_alpha(x, alpha)?,
            s_stat: weighted_interaction_stat(x, alpha)?,
            m2: x.iter().map(|v| v * v).sum::<f64>() / nf,
            m4: x.iter().map(|v| v.powi(4)).sum::<f64>() / nf,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<ParticleConfig>,
    pub diagnostics: Vec<Diagnostics>,
    pub accepted: u64,
    pub rejected: u64,
    /// Smallest nearest-neighbour gap over every committed step.
    pub min_gap: f64,
}

impl SampledTrajectory {
    pub fn final_state(&self) -> &ParticleConfig {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    /// Index of `t` in the output grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|s| *s == t)
    }

    /// CSV with columns time, particle_index, position.
    pub fn write_positions_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["time", "particle_index", "position"])?;
        for (t, state) in self.times.iter().zip(&self.states) {
            for (i, x) in state.positions().iter().enumerate() {
                w.write_record([format!("{t:?}"), i.to_string(), format!("{x:?}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// CSV with columns time, Hcal, H_alpha, S_stat, m2, m4.
    pub fn write_diagnostics_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["time", "Hcal", "H_alpha", "S_stat", "m2", "m4"])?;
        for (t, d) in self.times.iter().zip(&self.diagnostics) {
            w.write_record(
                [*t, d.hcal, d.h_alpha, d.s_stat, d.m2, d.m4]
                    .iter()
                    .map(|v| format!("{v:?}")),
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

enum Rejection {
    Newton,
    Gap(f64),
    NonFinite,
}

/// Buffers and state of one particle system.
struct System {
    x: Vec<f64>,
    far: Vec<f64>,
    stiffness: Vec<f64>,
    z: Vec<f64>,
    y: Vec<f64>,
    grad: Vec<f64>,
    delta: Vec<f64>,
    trial: Vec<f64>,
    hess: BandedSpd,
    band: usize,
}

fn min_gap(x: &[f64]) -> f64 {
    x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

fn strictly_ordered(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[0] < w[1])
}

/// Newton start: the closest point to z whose gaps are at least half the
/// current gaps, by pool-adjacent-violators on z minus the cumulative margins.
fn ordered_start(x: &[f64], z: &[f64], y: &mut [f64], margin: &mut [f64]) {
    let n = x.len();
    margin[0] = 0.0;
    for i in 1..n {
        margin[i] = margin[i - 1] + 0.5 * (x[i] - x[i - 1]);
    }
    // blocks of (start index, mean)
    let mut starts: Vec<usize> = Vec::with_capacity(n);
    let mut sums: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        starts.push(i);
        sums.push(z[i] - margin[i]);
        while sums.len() > 1 {
            let k = sums.len() - 1;
            let len_k = (if k + 1 < starts.len() { starts[k + 1] } else { i + 1 }) - starts[k];
            let len_prev = starts[k] - starts[k - 1];
            if sums[k - 1] / len_prev as f64 <= sums[k] / len_k as f64 {
                break;
            }
            let merged = sums[k - 1] + sums[k];
            sums.pop();
            starts.pop();
            sums[k - 1] = merged;
        }
    }
    for (b, (&start, &sum)) in starts.iter().zip(&sums).enumerate() {
        let end = if b + 1 < starts.len() { starts[b + 1] } else { n };
        let mean = sum / (end - start) as f64;
        for i in start..end {
            y[i] = mean + margin[i];
        }
    }
    if !strictly_ordered(y) {
        y.copy_from_slice(x);
    }
}

impl System {
    fn new(x: Vec<f64>, band: usize) -> Self {
        let n = x.len();
        let band = band.min(n.saturating_sub(1)).max(1);
        Self {
            far: vec![0.0; n],
            stiffness: vec![0.0; n],
            z: vec![0.0; n],
            y: vec![0.0; n],
            grad: vec![0.0; n],
            delta: vec![0.0; n],
            trial: vec![0.0; n],
            hess: BandedSpd::new(n, band),
            band,
            x,
        }
    }

    /// Far field at the current state; returns the far-field stiffness bound.
    fn prepare(&mut self, kernel: &PairKernel) -> f64 {
        if self.x.len() < 2 {
            self.far.iter_mut().for_each(|f| *f = 0.0);
            return 0.0;
        }
        far_field(&self.x, kernel, self.band, &mut self.far, &mut self.stiffness)
    }

    fn mean_gap(&self) -> f64 {
        let n = self.x.len();
        (self.x[n - 1] - self.x[0]) / (n - 1) as f64
    }

    fn near_energy(y: &[f64], z: &[f64], c: f64, band: usize, kernel: &PairKernel) -> f64 {
        let n = y.len();
        let mut quad = 0.0;
        let mut pair = 0.0;
        for i in 0..n {
            let d = y[i] - z[i];
            quad += d * d;
            for j in (i + 1)..(i + band + 1).min(n) {
                pair += kernel.potential(y[j] - y[i]);
            }
        }
        0.5 * quad + c * pair
    }

    /// Forms z and solves the near-field proximal problem into `y`.
    fn attempt(
        &mut self,
        h: f64,
        noise: &[f64],
        noise_scale: f64,
        params: &ModelParams,
        kernel: &PairKernel,
        scheme: &SchemeConfig,
        gap_floor: f64,
    ) -> std::result::Result<(), Rejection> {
        let n = self.x.len();
        for i in 0..n {
            let xi = self.x[i];
            self.z[i] = xi + h * (self.far[i] - params.confinement.grad(xi)) + noise_scale * noise[i];
        }
        if n == 1 {
            self.y[0] = self.z[0];
            return if self.y[0].is_finite() { Ok(()) } else { Err(Rejection::NonFinite) };
        }
        if self.z.iter().any(|v| !v.is_finite()) {
            return Err(Rejection::NonFinite);
        }
        let c = h / n as f64;
        let band = self.band;
        let alpha = kernel.alpha();
        // predictor: explicit near-field force at x, then projection
        self.grad.copy_from_slice(&self.z);
        for i in 0..n {
            for j in (i + 1)..(i + band + 1).min(n) {
                let p = c * kernel.phi(self.x[j] - self.x[i]);
                self.grad[i] -= p;
                self.grad[j] += p;
            }
        }
        ordered_start(&self.x, &self.grad, &mut self.y, &mut self.trial);
        let scale = 1.0 + self.z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = scheme.newton_tol * scale;
        let mut converged = false;
        for _ in 0..scheme.newton_max_iter {
            self.hess.reset();
            for i in 0..n {
                self.grad[i] = self.y[i] - self.z[i];
                self.hess.add(i, i, 1.0);
            }
            for i in 0..n {
                for j in (i + 1)..(i + band + 1).min(n) {
                    let d = self.y[j] - self.y[i];
                    let p = kernel.phi(d);
                    let k2 = c * alpha * p / d;
                    self.grad[i] += c * p;
                    self.grad[j] -= c * p;
                    self.hess.add(i, i, k2);
                    self.hess.add(j, j, k2);
                    self.hess.add(j, i, -k2);
                }
            }
            if !self.hess.factorize() {
                return Err(Rejection::Newton);
            }
            for i in 0..n {
                self.delta[i] = -self.grad[i];
            }
            self.hess.solve(&mut self.delta);
            let dmax = self.delta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !dmax.is_finite() {
                return Err(Rejection::NonFinite);
            }
            if dmax <= tol {
                for i in 0..n {
                    self.trial[i] = self.y[i] + self.delta[i];
                }
                if strictly_ordered(&self.trial) {
                    std::mem::swap(&mut self.y, &mut self.trial);
                }
                converged = true;
                break;
            }
            let gap = min_gap(&self.y);
            let slope: f64 = self.grad.iter().zip(&self.delta).map(|(g, d)| g * d).sum();
            let mut energy0 = None;
            let mut s = 1.0;
            loop {
                for i in 0..n {
                    self.trial[i] = self.y[i] + s * self.delta[i];
                }
                if strictly_ordered(&self.trial) {
                    if s * dmax <= 0.1 * gap {
                        break;
                    }
                    let e0 = *energy0.get_or_insert_with(|| Self::near_energy(&self.y, &self.z, c, band, kernel));
                    let e1 = Self::near_energy(&self.trial, &self.z, c, band, kernel);
                    if e1 <= e0 + 1e-4 * s * slope {
                        break;
                    }
                }
                s *= 0.5;
                if s < 1e-12 {
                    return Err(Rejection::Newton);
                }
            }
            std::mem::swap(&mut self.y, &mut self.trial);
        }
        if !converged {
            return Err(Rejection::Newton);
        }
        if self.y.iter().any(|v| !v.is_finite()) {
            return Err(Rejection::NonFinite);
        }
        let g = min_gap(&self.y);
        if !(g >= gap_floor) {
            return Err(Rejection::Gap(g));
        }
        Ok(())
    }

    fn commit(&mut self) -> f64 {
        std::mem::swap(&mut self.x, &mut self.y);
        if self.x.len() > 1 {
            min_gap(&self.x)
        } else {
            f64::INFINITY
        }
    }
}

/// Advances several systems in lockstep on one path set.
struct Lockstep<'a> {
    params: &'a ModelParams,
    scheme: &'a SchemeConfig,
    kernel: PairKernel,
    grid: PathGrid,
    h_max_level: u32,
    noise_scale: f64,
    systems: Vec<System>,
    paths: &'a mut PathSet,
    noise: Vec<f64>,
    accepted: u64,
    rejected: u64,
    min_gap: f64,
}

impl<'a> Lockstep<'a> {
    fn new(params: &'a ModelParams, scheme: &'a SchemeConfig, initials: Vec<Vec<f64>>, paths: &'a mut PathSet) -> Result<Self> {
        let (grid, h_max_level) = scheme.path_levels()?;
        let n = params.n;
        let min_gap = initials.iter().map(|x| if n > 1 { min_gap(x) } else { f64::INFINITY }).fold(f64::INFINITY, f64::min);
        Ok(Self {
            params,
            scheme,
            kernel: PairKernel::new(params.alpha),
            grid,
            h_max_level,
            noise_scale: (2.0 * params.sigma_n()).sqrt(),
            systems: initials.into_iter().map(|x| System::new(x, scheme.band_for(params.alpha))).collect(),
            paths,
            noise: vec![0.0; n],
            accepted: 0,
            rejected: 0,
            min_gap,
        })
    }

    fn h_of_level(&self, level: u32) -> Result<(u128, f64)> {
        let ticks = self.grid.ticks_at_level(self.h_max_level + level)?;
        Ok((ticks, self.scheme.h_max / 2f64.powi(level as i32)))
    }

    fn advance(&mut self, from: u128, to: u128) -> Result<()> {
        let lipschitz = self.params.confinement.lipschitz();
        let sigma = self.params.sigma_n();
        let n = self.params.n;
        let mut t = from;
        while t < to {
            let mut h_crit = self.scheme.h_max;
            for sys in &mut self.systems {
                let rho = sys.prepare(&self.kernel);
                let stiff = lipschitz + rho;
                if stiff > 0.0 {
                    h_crit = h_crit.min(2.0 * self.scheme.theta_drift / stiff);
                }
                if sigma > 0.0 && n > 1 {
                    let g = self.scheme.theta_diff * sys.mean_gap();
                    h_crit = h_crit.min(g * g / (2.0 * sigma));
                }
            }
            let mut level = 0u32;
            loop {
                let (ticks, h) = self.h_of_level(level)?;
                if h <= h_crit && t % ticks == 0 && t + ticks <= to {
                    break;
                }
                level += 1;
            }
            let mut rejections = 0usize;
            loop {
                let (ticks, h) = self.h_of_level(level)?;
                self.paths.increments_into(t, t + ticks, &mut self.noise);
                let mut failure = None;
                for sys in &mut self.systems {
                    if let Err(r) = sys.attempt(
                        h,
                        &self.noise,
                        self.noise_scale,
                        self.params,
                        &self.kernel,
                        self.scheme,
                        self.scheme.gap_floor,
                    ) {
                        failure = Some(r);
                        break;
                    }
                }
                match failure {
                    None => {
                        for sys in &mut self.systems {
                            let g = sys.commit();
                            self.min_gap = self.min_gap.min(g);
                        }
                        self.accepted += 1;
                        t += ticks;
                        break;
                    }
                    Some(reason) => {
                        self.rejected += 1;
                        rejections += 1;
                        if rejections > self.scheme.max_rejections {
                            let time = self.grid.time_of(t);
                            return Err(match reason {
                                Rejection::Gap(gap) => Error::NearCollision {
                                    time,
                                    gap,
                                    floor: self.scheme.gap_floor,
                                },
                                _ => Error::StepFailure {
                                    time,
                                    rejections,
                                    state: self.systems[0].x.clone(),
                                },
                            });
                        }
                        level += 1;
                    }
                }
            }
        }
        Ok(())
    }
}

fn output_ticks(grid: &PathGrid, t_end: f64, output_times: &[f64]) -> Result<(Vec<f64>, Vec<u128>)> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::param("t_end", "t_end must be finite and >= 0"));
    }
    let mut times = vec![0.0];
    for &t in output_times {
        if !(t.is_finite() && t >= 0.0 && t <= t_end) {
            return Err(Error::param("output_times", format!("output time {t} outside [0, {t_end}]")));
        }
        times.push(t);
    }
    times.push(t_end);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let ticks = times.iter().map(|t| grid.tick_of(*t)).collect::<Result<Vec<_>>>()?;
    for w in ticks.windows(2) {
        if w[0] == w[1] {
            return Err(Error::param("output_times", "output times closer than the path resolution"));
        }
    }
    Ok((times, ticks))
}

fn run_systems(
    params: &ModelParams,
    scheme: &SchemeConfig,
    initials: Vec<Vec<f64>>,
    t_end: f64,
    output_times: &[f64],
    paths: &mut PathSet,
) -> Result<Vec<SampledTrajectory>> {
    scheme.validate()?;
    for x in &initials {
        check_ordered(x)?;
        if x.len() != params.n {
            return Err(Error::SizeMismatch {
                left: x.len(),
                right: params.n,
            });
        }
    }
    let grid = scheme.path_grid()?;
    let (times, ticks) = output_ticks(&grid, t_end, output_times)?;
    let count = initials.len();
    let mut out: Vec<SampledTrajectory> = initials
        .iter()
        .map(|x| -> Result<SampledTrajectory> {
            Ok(SampledTrajectory {
                times: vec![0.0],
                states: vec![ParticleConfig::new(x.clone(), 0.0)?],
                diagnostics: vec![Diagnostics::compute(x, params.alpha)?],
                accepted: 0,
                rejected: 0,
                min_gap: f64::INFINITY,
            })
        })
        .collect::<Result<_>>()?;
    let mut lock = Lockstep::new(params, scheme, initials, paths)?;
    for k in 1..times.len() {
        lock.advance(ticks[k - 1], ticks[k])?;
        for s in 0..count {
            let x = lock.systems[s].x.clone();
            out[s].diagnostics.push(Diagnostics::compute(&x, params.alpha)?);
            out[s].states.push(ParticleConfig::new(x, times[k])?);
            out[s].times.push(times[k]);
        }
    }
    for traj in &mut out {
        traj.accepted = lock.accepted;
        traj.rejected = lock.rejected;
        traj.min_gap = lock.min_gap;
    }
    Ok(out)
}

fn annotate(replica: u64, e: Error) -> Error {
    let time = match e {
        Error::StepFailure { time, .. } | Error::NearCollision { time, .. } => time,
        _ => 0.0,
    };
    Error::Trajectory {
        replica,
        time,
        source: Box::new(e),
    }
}

/// Samples one trajectory at the requested times (plus 0 and t_end).
pub fn simulate(
    params: &ModelParams,
    scheme: &SchemeConfig,
    initial: &ParticleConfig,
    t_end: f64,
    output_times: &[f64],
    seed: u64,
    replica: u64,
) -> Result<SampledTrajectory> {
    let grid = scheme.path_grid()?;
    let mut paths = PathSet::new(seed, replica, params.n, grid);
    run_systems(params, scheme, vec![initial.positions().to_vec()], t_end, output_times, &mut paths)
        .map(|mut v| v.remove(0))
        .map_err(|e| annotate(replica, e))
}

/// Two systems driven by the identical Brownian paths, stepped in lockstep.
#[allow(clippy::too_many_arguments)]
pub fn simulate_synchronous_pair(
    params: &ModelParams,
    scheme: &SchemeConfig,
    init_x: &ParticleConfig,
    init_y: &ParticleConfig,
    t_end: f64,
    output_times: &[f64],
    seed: u64,
    replica: u64,
) -> Result<(SampledTrajectory, SampledTrajectory)> {
    let grid = scheme.path_grid()?;
    let mut paths = PathSet::new(seed, replica, params.n, grid);
    let mut v = run_systems(
        params,
        scheme,
        vec![init_x.positions().to_vec(), init_y.positions().to_vec()],
        t_end,
        output_times,
        &mut paths,
    )
    .map_err(|e| annotate(replica, e))?;
    let y = v.pop().expect("two trajectories");
    let x = v.pop().expect("two trajectories");
    Ok((x, y))
}

/// Advances `state` by exactly h on the given paths, subdividing on rejection.
pub fn step(
    state: &ParticleConfig,
    h: f64,
    params: &ModelParams,
    scheme: &SchemeConfig,
    paths: &mut PathSet,
) -> Result<ParticleConfig> {
    scheme.validate()?;
    check_ordered(state.positions())?;
    if !(h > 0.0 && h <= scheme.h_max) {
        return Err(Error::param("h", "step must satisfy 0 < h <= h_max"));
    }
    let grid = paths.grid();
    if grid != scheme.path_grid()? {
        return Err(Error::param("paths", "path grid does not match the scheme"));
    }
    let from = grid.tick_of(state.time)?;
    let to = grid.tick_of(state.time + h)?;
    let mut lock = Lockstep::new(params, scheme, vec![state.positions().to_vec()], paths)?;
    lock.advance(from, to)?;
    let x = lock.systems.pop().expect("one system").x;
    ParticleConfig::new(x, state.time + h)
}

#[cfg(test)]
mod tests;
