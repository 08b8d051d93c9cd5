//! Master-equation integration of the linearized two-mode model in a
//! truncated Fock space, without the rotating-wave approximation.
//!
//! H(t) = −Δ c†c + ωm d†d + g (e^{iφ(t)} c† + e^{−iφ(t)} c)(d† + d)
//!
//! with Lindblad dissipators κ(n̄c+1)D[c] + κn̄c D[c†] and the mechanical
//! analogue. The thermal terms are only included on request.

use nalgebra::DMatrix;
use num_complex::Complex64;
use ode_solvers::{DVector, System};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::PhaseSequence;
use crate::params::DerivedParams;

type C = Complex64;

pub const DEFAULT_CUTOFF: usize = 7;
pub const LEAKAGE_THRESHOLD: f64 = 1e-6;

/// Product space with levels 0..=cutoff in each mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FockSpace {
    pub cutoff_cavity: usize,
    pub cutoff_mech: usize,
}

impl Default for FockSpace {
    fn default() -> Self {
        FockSpace { cutoff_cavity: DEFAULT_CUTOFF, cutoff_mech: DEFAULT_CUTOFF }
    }
}

impl FockSpace {
    pub fn new(cutoff_cavity: usize, cutoff_mech: usize) -> Result<Self> {
        if cutoff_cavity < 2 || cutoff_mech < 2 {
            return Err(Error::invalid("cutoff", "each mode needs at least three levels"));
        }
        Ok(FockSpace { cutoff_cavity, cutoff_mech })
    }

    pub fn dim(&self) -> usize {
        (self.cutoff_cavity + 1) * (self.cutoff_mech + 1)
    }

    pub fn index(&self, n_cavity: usize, n_mech: usize) -> usize {
        n_cavity * (self.cutoff_mech + 1) + n_mech
    }

    fn levels(&self, k: usize) -> (usize, usize) {
        (k / (self.cutoff_mech + 1), k % (self.cutoff_mech + 1))
    }

    fn is_edge(&self, k: usize) -> bool {
        let (nc, nm) = self.levels(k);
        nc + 1 >= self.cutoff_cavity || nm + 1 >= self.cutoff_mech
    }
}

/// Sparse matrix as (row, column, value) triplets.
#[derive(Debug, Clone)]
struct SparseOp(Vec<(usize, usize, C)>);

impl SparseOp {
    fn annihilate(space: &FockSpace, cavity: bool) -> Self {
        let mut out = Vec::new();
        for k in 0..space.dim() {
            let (nc, nm) = space.levels(k);
            let n = if cavity { nc } else { nm };
            if n > 0 {
                let to = if cavity { space.index(nc - 1, nm) } else { space.index(nc, nm - 1) };
                out.push((to, k, C::from((n as f64).sqrt())));
            }
        }
        SparseOp(out)
    }

    fn adjoint(&self) -> Self {
        SparseOp(self.0.iter().map(|&(r, c, v)| (c, r, v.conj())).collect())
    }

    fn dense(&self, dim: usize) -> DMatrix<C> {
        let mut m = DMatrix::zeros(dim, dim);
        for &(r, c, v) in &self.0 {
            m[(r, c)] += v;
        }
        m
    }

    fn from_dense(m: &DMatrix<C>) -> Self {
        let mut out = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                if m[(r, c)] != C::from(0.0) {
                    out.push((r, c, m[(r, c)]));
                }
            }
        }
        SparseOp(out)
    }

    fn diagonal(m: &DMatrix<C>) -> Vec<f64> {
        (0..m.nrows()).map(|k| m[(k, k)].re).collect()
    }
}

/// Density operator of the two modes at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedState {
    pub space: FockSpace,
    pub rho: DMatrix<C>,
    pub time: f64,
}

impl TruncatedState {
    /// |n_c, n_m⟩⟨n_c, n_m|.
    pub fn fock(space: FockSpace, n_cavity: usize, n_mech: usize) -> Result<Self> {
        Self::pure(space, &[(n_cavity, n_mech, C::from(1.0))])
    }

    /// Normalized pure state Σ a |n_c, n_m⟩.
    pub fn pure(space: FockSpace, amplitudes: &[(usize, usize, C)]) -> Result<Self> {
        let mut psi = nalgebra::DVector::<C>::zeros(space.dim());
        for &(nc, nm, a) in amplitudes {
            if nc > space.cutoff_cavity || nm > space.cutoff_mech {
                return Err(Error::invalid("state", "Fock level above the cutoff"));
            }
            psi[space.index(nc, nm)] += a;
        }
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::invalid("state", "zero vector"));
        }
        psi /= C::from(norm);
        Ok(TruncatedState { space, rho: &psi * psi.adjoint(), time: 0.0 })
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * C::from(0.5);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Population in the top two levels of either mode.
    pub fn leakage(&self) -> f64 {
        (0..self.space.dim())
            .filter(|&k| self.space.is_edge(k))
            .map(|k| self.rho[(k, k)].re)
            .sum()
    }

    pub fn photons(&self) -> f64 {
        (0..self.space.dim()).map(|k| self.space.levels(k).0 as f64 * self.rho[(k, k)].re).sum()
    }

    pub fn phonons(&self) -> f64 {
        (0..self.space.dim()).map(|k| self.space.levels(k).1 as f64 * self.rho[(k, k)].re).sum()
    }

    /// Checks trace, Hermiticity and positivity.
    pub fn validate(&self) -> Result<()> {
        if (self.trace() - 1.0).abs() > 1e-8 {
            return Err(Error::invalid("state", format!("trace {} differs from 1", self.trace())));
        }
        if self.hermiticity_error() > 1e-10 {
            return Err(Error::invalid("state", "not Hermitian"));
        }
        if self.min_eigenvalue() < -1e-8 {
            return Err(Error::invalid("state", "not positive semidefinite"));
        }
        Ok(())
    }

    fn to_vector(&self) -> DVector<f64> {
        let n = self.space.dim();
        let mut y = DVector::zeros(2 * n * n);
        for i in 0..n {
            for j in 0..n {
                let v = self.rho[(i, j)];
                y[2 * (i * n + j)] = v.re;
                y[2 * (i * n + j) + 1] = v.im;
            }
        }
        y
    }

    fn from_vector(space: FockSpace, y: &DVector<f64>, time: f64) -> Self {
        let n = space.dim();
        let mut rho = DMatrix::from_fn(n, n, |i, j| C::new(y[2 * (i * n + j)], y[2 * (i * n + j) + 1]));
        rho = (&rho + rho.adjoint()) * C::from(0.5);
        TruncatedState { space, rho, time }
    }
}

/// Schwinger two-mode angular momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngularMomentum {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
}

/// Jx = (c†d + cd†)/2, Jy = −i(c†d − cd†)/2, Jz = (c†c − d†d)/2.
pub fn schwinger_expectations(state: &TruncatedState) -> AngularMomentum {
    let space = state.space;
    let c = SparseOp::annihilate(&space, true);
    let d = SparseOp::annihilate(&space, false);
    let op = SparseOp::from_dense(&(c.adjoint().dense(space.dim()) * d.dense(space.dim())));
    // ⟨c†d⟩ = Tr(ρ c†d)
    let z: C = op.0.iter().map(|&(r, col, v)| v * state.rho[(col, r)]).sum();
    AngularMomentum {
        jx: z.re,
        jy: z.im,
        jz: 0.5 * (state.photons() - state.phonons()),
    }
}

/// Order of the parameters carried by a [`NoiseTrajectory`].
pub const NOISE_PARAMETERS: [&str; 5] = ["coupling", "mech_freq", "detuning", "cavity_decay", "mech_decay"];
pub const NOISE_KNOTS: usize = 50;

/// Smooth multiplicative factors for g, ωm, Δ, κ, γ: monotone cubic
/// (PCHIP) interpolation of values on equally spaced knots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseTrajectory {
    pub t_span: f64,
    pub knots: Vec<f64>,
    pub values: [Vec<f64>; 5],
    #[serde(skip)]
    slopes: [Vec<f64>; 5],
}

impl NoiseTrajectory {
    pub fn from_draws(t_span: f64, values: [Vec<f64>; 5]) -> Result<Self> {
        if !(t_span > 0.0 && t_span.is_finite()) {
            return Err(Error::invalid("t_span", "must be positive"));
        }
        let n = values[0].len();
        if n < 2 || values.iter().any(|v| v.len() != n) {
            return Err(Error::invalid("noise", "need at least two draws per parameter, equal in number"));
        }
        let knots: Vec<f64> = (0..n).map(|k| t_span * k as f64 / (n - 1) as f64).collect();
        let slopes = [0, 1, 2, 3, 4].map(|p| pchip_slopes(&knots, &values[p]));
        Ok(NoiseTrajectory { t_span, knots, values, slopes })
    }

    /// Factors at time `t`, clamped to the span.
    pub fn factors(&self, t: f64) -> [f64; 5] {
        let t = t.clamp(0.0, self.t_span);
        let n = self.knots.len();
        let h = self.knots[1];
        let k = ((t / h).floor() as usize).min(n - 2);
        let s = (t - self.knots[k]) / h;
        [0, 1, 2, 3, 4].map(|p| {
            let (y0, y1) = (self.values[p][k], self.values[p][k + 1]);
            let (d0, d1) = (self.slopes[p][k] * h, self.slopes[p][k + 1] * h);
            let s2 = s * s;
            let s3 = s2 * s;
            (2.0 * s3 - 3.0 * s2 + 1.0) * y0
                + (s3 - 2.0 * s2 + s) * d0
                + (-2.0 * s3 + 3.0 * s2) * y1
                + (s3 - s2) * d1
        })
    }
}

/// 50 uniform draws in [0.95, 1.05] per parameter from a ChaCha8 stream.
pub fn noisy_trajectory(seed: u64, t_span: f64) -> Result<NoiseTrajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(0.95, 1.05).map_err(|e| Error::invalid("noise", e.to_string()))?;
    let values = [0; 5].map(|_| (0..NOISE_KNOTS).map(|_| dist.sample(&mut rng)).collect::<Vec<f64>>());
    NoiseTrajectory::from_draws(t_span, values)
}

/// Fritsch–Carlson derivative estimates with one-sided shape-preserving ends.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: f64, h1: f64, m0: f64, m1: f64| {
        let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
        if d.signum() != m0.signum() || m0 == 0.0 {
            0.0
        } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
            3.0 * m0
        } else {
            d
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    /// Defaults to the end of the sequence.
    pub t_end: Option<f64>,
    /// Sorted sample times in [0, t_end].
    pub grid: Vec<f64>,
    pub thermal: bool,
    pub rtol: f64,
    pub atol: f64,
    pub leakage_threshold: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            t_end: None,
            grid: Vec::new(),
            thermal: false,
            rtol: 1e-9,
            atol: 1e-12,
            leakage_threshold: LEAKAGE_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LindbladSample {
    pub t: f64,
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub photons: f64,
    pub phonons: f64,
    pub trace: f64,
    pub leakage: f64,
}

impl LindbladSample {
    fn of(state: &TruncatedState) -> Self {
        let j = schwinger_expectations(state);
        LindbladSample {
            t: state.time,
            jx: j.jx,
            jy: j.jy,
            jz: j.jz,
            photons: state.photons(),
            phonons: state.phonons(),
            trace: state.trace(),
            leakage: state.leakage(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LindbladTrajectory {
    pub samples: Vec<LindbladSample>,
    pub final_state: TruncatedState,
}

struct Operators {
    dim: usize,
    n_cavity: Vec<f64>,
    n_mech: Vec<f64>,
    cc_dag: Vec<f64>,
    dd_dag: Vec<f64>,
    /// c†(d + d†)
    exchange: SparseOp,
    exchange_dag: SparseOp,
    c: SparseOp,
    d: SparseOp,
    c_dag: SparseOp,
    d_dag: SparseOp,
}

impl Operators {
    fn new(space: &FockSpace) -> Self {
        let dim = space.dim();
        let c = SparseOp::annihilate(space, true);
        let d = SparseOp::annihilate(space, false);
        let (cm, dm) = (c.dense(dim), d.dense(dim));
        let (cdm, ddm) = (cm.adjoint(), dm.adjoint());
        let exchange = SparseOp::from_dense(&(&cdm * (&dm + &ddm)));
        Operators {
            dim,
            n_cavity: SparseOp::diagonal(&(&cdm * &cm)),
            n_mech: SparseOp::diagonal(&(&ddm * &dm)),
            cc_dag: SparseOp::diagonal(&(&cm * &cdm)),
            dd_dag: SparseOp::diagonal(&(&dm * &ddm)),
            exchange_dag: exchange.adjoint(),
            exchange,
            c_dag: c.adjoint(),
            d_dag: d.adjoint(),
            c,
            d,
        }
    }
}

struct Generator<'a> {
    ops: &'a Operators,
    base: [f64; 5],
    thermal: [f64; 2],
    phase: f64,
    noise: Option<&'a NoiseTrajectory>,
}

impl Generator<'_> {
    fn rates(&self, t: f64) -> [f64; 5] {
        match self.noise {
            Some(n) => {
                let f = n.factors(t);
                [0, 1, 2, 3, 4].map(|k| self.base[k] * f[k])
            }
            None => self.base,
        }
    }
}

impl System<f64, DVector<f64>> for Generator<'_> {
    fn system(&self, t: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        let ops = self.ops;
        let n = ops.dim;
        let [g, wm, delta, kappa, gamma] = self.rates(t);
        let [nc, nm] = self.thermal;
        let rho: Vec<C> = (0..n * n).map(|k| C::new(y[2 * k], y[2 * k + 1])).collect();
        let mut out = vec![C::from(0.0); n * n];

        // H_eff = diag − i/2 Σ L†L  +  off-diagonal exchange terms
        let diag: Vec<C> = (0..n)
            .map(|k| {
                let re = -delta * ops.n_cavity[k] + wm * ops.n_mech[k];
                let im = -0.5
                    * (kappa * ((nc + 1.0) * ops.n_cavity[k] + nc * ops.cc_dag[k])
                        + gamma * ((nm + 1.0) * ops.n_mech[k] + nm * ops.dd_dag[k]));
                C::new(re, im)
            })
            .collect();
        let mi = C::new(0.0, -1.0);
        for i in 0..n {
            for j in 0..n {
                // −i(H ρ − ρ H†) for diagonal H
                out[i * n + j] += mi * (diag[i] * rho[i * n + j] - rho[i * n + j] * diag[j].conj());
            }
        }
        let e = C::from_polar(g, self.phase);
        for (op, coef) in [(&ops.exchange, e), (&ops.exchange_dag, e.conj())] {
            for &(r, c, v) in &op.0 {
                let h = coef * v;
                let left = mi * h;
                let right = -mi * h.conj();
                for j in 0..n {
                    out[r * n + j] += left * rho[c * n + j];
                }
                for i in 0..n {
                    out[i * n + r] += right * rho[i * n + c];
                }
            }
        }
        for (op, rate) in [
            (&ops.c, kappa * (nc + 1.0)),
            (&ops.c_dag, kappa * nc),
            (&ops.d, gamma * (nm + 1.0)),
            (&ops.d_dag, gamma * nm),
        ] {
            if rate == 0.0 {
                continue;
            }
            for &(a, c1, v1) in &op.0 {
                for &(b, e1, v2) in &op.0 {
                    out[a * n + b] += rate * v1 * v2.conj() * rho[c1 * n + e1];
                }
            }
        }
        for (k, v) in out.iter().enumerate() {
            dy[2 * k] = v.re;
            dy[2 * k + 1] = v.im;
        }
    }
}

/// Integrates the master equation under `seq` from `initial` (taken at
/// t = 0) and samples observables on `opts.grid`.
pub fn evolve(
    initial: &TruncatedState,
    seq: &PhaseSequence,
    d: &DerivedParams,
    noise: Option<&NoiseTrajectory>,
    opts: &EvolveOptions,
) -> Result<LindbladTrajectory> {
    let end = seq.total_duration();
    let t_end = opts.t_end.unwrap_or(end);
    if !(t_end >= 0.0) || t_end > end * (1.0 + 1e-12) {
        return Err(Error::OutOfRange { t: t_end, end });
    }
    if opts.grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("grid", "times must be sorted"));
    }
    if let Some(&t) = opts.grid.iter().find(|&&t| t < 0.0 || t > t_end * (1.0 + 1e-12)) {
        return Err(Error::OutOfRange { t, end: t_end });
    }

    let ops = Operators::new(&initial.space);
    let thermal = if opts.thermal { [d.thermal_occ_cavity, d.thermal_occ_mech] } else { [0.0, 0.0] };
    let base = [d.enhanced_coupling, d.mech_freq, d.detuning, d.cavity_decay, d.mech_decay];

    // Breakpoints: segment boundaries, sample times and the end point.
    let mut bounds = vec![0.0];
    let mut acc = 0.0;
    for s in seq.segments() {
        acc += s.duration;
        bounds.push(acc);
    }
    let mut stops: Vec<f64> = bounds.iter().cloned().filter(|&b| b > 0.0 && b < t_end).collect();
    stops.extend(opts.grid.iter().cloned().filter(|&t| t > 0.0));
    stops.push(t_end);
    stops.sort_by(f64::total_cmp);
    stops.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));

    let mut state = TruncatedState { time: 0.0, ..initial.clone() };
    let mut samples = Vec::with_capacity(opts.grid.len());
    let mut grid = opts.grid.iter().peekable();
    let record = |state: &TruncatedState, grid: &mut std::iter::Peekable<std::slice::Iter<f64>>, samples: &mut Vec<LindbladSample>| {
        while let Some(&&t) = grid.peek() {
            if (t - state.time).abs() <= 1e-12 * state.time.abs().max(1.0) {
                samples.push(LindbladSample { t, ..LindbladSample::of(state) });
                grid.next();
            } else {
                break;
            }
        }
    };
    record(&state, &mut grid, &mut samples);

    let mut t = 0.0;
    for &stop in &stops {
        if stop <= t {
            continue;
        }
        let mid = 0.5 * (t + stop);
        let k = bounds.iter().rposition(|&b| b <= mid).unwrap_or(0).min(seq.len() - 1);
        let generator = Generator {
            ops: &ops,
            base,
            thermal,
            phase: seq.segments()[k].phase,
            noise,
        };
        let y = crate::ode::integrate(generator, t, stop, state.to_vector(), opts.rtol, opts.atol)?;
        state = TruncatedState::from_vector(initial.space, &y, stop);
        let leakage = state.leakage();
        if leakage > opts.leakage_threshold {
            return Err(Error::CutoffTooSmall { leakage, threshold: opts.leakage_threshold });
        }
        record(&state, &mut grid, &mut samples);
        t = stop;
    }
    Ok(LindbladTrajectory { samples, final_state: state })
}
