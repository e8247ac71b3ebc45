//! Mild-solution evolution engine: exponential-integrator time stepping for
//! the semilinear model equations, with per-step invariant monitoring, a
//! persistence verdict, and the three concrete solvers (reaction-diffusion,
//! nonlinear Schroedinger by Strang splitting, and the incompressible-flow
//! analogue with Jordan-product advection).

use ndarray::Array2;
use num_complex::Complex64;

use crate::doi::{KernelMode, ScalarFunction};
use crate::lp::{
    build_partition, divergence, leray_project, max_block_index, DyadicPartition,
};
use crate::ncpoly::NcPolynomial;
use crate::operator::NcOperator;
use crate::symbol::{dequantize_unchecked, quantize, twisted_convolution, Symbol};
use crate::weyl::LaplacianSuperoperator;
use crate::{MoyalError, Result};

/// The linear generator of the flow, diagonal on symbols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearPart {
    /// Delta: multiplier e^(-t |xi|^2)
    Heat,
    /// -i Delta: multiplier e^(-i t |xi|^2)
    Schroedinger,
}

impl LinearPart {
    fn eigenvalue(&self, xi2: f64) -> Complex64 {
        match self {
            LinearPart::Heat => Complex64::new(-xi2, 0.0),
            LinearPart::Schroedinger => Complex64::new(0.0, -xi2),
        }
    }
}

/// How the reaction term F(u) is evaluated on the matrix side.
#[derive(Debug, Clone)]
pub enum NemytskijRoute {
    FunctionalCalculus,
    Meyer(KernelMode),
}

/// The nonlinear term of the evolution.
#[derive(Debug, Clone)]
pub enum Nonlinearity {
    Zero,
    /// F(u) = c u
    ScalarLinear(f64),
    /// F(u) for real smooth F, through the Hermitian functional calculus (or
    /// the dyadic Meyer route, cross-checked)
    Reaction { f: ScalarFunction, route: NemytskijRoute },
    /// a noncommutative polynomial in (u, d1 u, d2 u), products realized as
    /// twisted convolutions
    DerivativePolynomial(NcPolynomial),
}

/// Norm pairing (X, Y) used by the persistence ratio ||F(u)||_X / ||u||_Y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioSpaces {
    /// X = Y = L2
    L2,
    /// X = Y = the weighted-sup surrogate of B^s_(inf,inf):
    /// sup_t (1 + |t|^2)^(s/2) |f(t)|
    BesovSupSurrogate { s: f64 },
    /// X = H^s, Y = H^(s+1); the flow pairing
    SobolevShift { s: f64 },
}

#[derive(Debug, Clone)]
pub struct EvolutionProblem {
    pub linear: LinearPart,
    pub nonlinearity: Nonlinearity,
    pub spaces: RatioSpaces,
    /// t^(-gamma) blow-up rate of ||e^(tL)||_{X -> Y}; must be < 1
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integrator {
    Etd1,
    Etd2Rk,
}

#[derive(Debug, Clone, Copy)]
pub struct PicardConfig {
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub dt: f64,
    pub min_dt: f64,
    pub integrator: Integrator,
    pub picard: Option<PicardConfig>,
    /// matrix truncation for operator-side work and diagnostics
    pub n: usize,
    /// record norms every this many steps (and always at the horizon)
    pub record_every: usize,
    /// persistence threshold on sup ||F(u)||_X / ||u||_Y
    pub ratio_cap: f64,
    /// norm level declared a numerical blow-up
    pub norm_cap: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            dt: 1e-2,
            min_dt: 1e-5,
            integrator: Integrator::Etd1,
            picard: None,
            n: 64,
            record_every: 5,
            ratio_cap: 1e3,
            norm_cap: 1e6,
        }
    }
}

/// One row of the trajectory norm series.
#[derive(Debug, Clone, Copy)]
pub struct NormRecord {
    pub t: f64,
    pub l2: f64,
    pub linf: f64,
    pub hermitian_residual: f64,
    pub divergence_residual: f64,
    /// |Re <P X(u), u>| scaled by ||u||_2^2 ||u||_inf-surrogate; flow runs only
    pub advection_orthogonality: f64,
    /// ||F(u)||_X / ||u||_Y
    pub ratio: f64,
    /// dealiasing tail mass removed at this step
    pub dealias_tail: f64,
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<Vec<Symbol>>,
    pub norms: Vec<NormRecord>,
    pub blow_up: Option<f64>,
    pub dt_final: f64,
    pub dt_collapsed: bool,
    /// contraction factors observed by the Picard refinement, when enabled
    pub picard_factors: Vec<f64>,
}

impl TrajectoryRecord {
    fn new(dt: f64) -> Self {
        TrajectoryRecord {
            times: Vec::new(),
            states: Vec::new(),
            norms: Vec::new(),
            blow_up: None,
            dt_final: dt,
            dt_collapsed: false,
            picard_factors: Vec::new(),
        }
    }

    pub fn final_l2(&self) -> f64 {
        self.norms.last().map(|r| r.l2).unwrap_or(0.0)
    }

    pub fn conservation_drift(&self) -> f64 {
        let base = self.norms.first().map(|r| r.l2).unwrap_or(0.0);
        if base == 0.0 {
            return 0.0;
        }
        self.norms
            .iter()
            .map(|r| (r.l2 - base).abs() / base)
            .fold(0.0, f64::max)
    }

    pub fn energy_monotone(&self, slack: f64) -> bool {
        self.norms.windows(2).all(|w| w[1].l2 * w[1].l2 <= w[0].l2 * w[0].l2 + slack)
    }

    pub fn max_ratio(&self) -> f64 {
        self.norms.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }
}

/// Persistence verdict from a finished trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    GlobalOk,
    Flagged,
}

#[derive(Debug, Clone, Copy)]
pub struct PersistenceReport {
    pub sup_ratio: f64,
    pub verdict: Verdict,
    /// int_0^T (1 + s^-gamma) ds, the Duhamel convolution bound at the
    /// recorded horizon; finite for gamma < 1
    pub duhamel_bound: f64,
}

/// The sufficient condition for global continuation at desk scale: a bounded
/// ratio series and no blow-up declaration.
pub fn blow_up_monitor(record: &TrajectoryRecord, gamma: f64, ratio_cap: f64) -> PersistenceReport {
    let sup_ratio = record.max_ratio();
    let horizon = record.times.last().copied().unwrap_or(0.0);
    let duhamel_bound = horizon + horizon.powf(1.0 - gamma) / (1.0 - gamma);
    let verdict = if sup_ratio <= ratio_cap && record.blow_up.is_none() && !record.dt_collapsed {
        Verdict::GlobalOk
    } else {
        Verdict::Flagged
    };
    PersistenceReport { sup_ratio, verdict, duhamel_bound }
}

/// phi1(z) = (e^z - 1)/z with the series continuation at small |z|.
pub fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-6 {
        Complex64::new(1.0, 0.0) + z / 2.0 + z * z / 6.0
    } else {
        (z.exp() - 1.0) / z
    }
}

/// phi2(z) = (e^z - 1 - z)/z^2 with the series continuation at small |z|.
pub fn phi2(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        Complex64::new(0.5, 0.0) + z / 6.0 + z * z / 24.0
    } else {
        (z.exp() - 1.0 - z) / (z * z)
    }
}

struct EtdTables {
    exp: Array2<Complex64>,
    phi1: Array2<Complex64>,
    phi2: Array2<Complex64>,
}

fn etd_tables(grid: &crate::symbol::GridSpec, linear: LinearPart, dt: f64) -> EtdTables {
    let m = grid.points();
    let mut exp = Array2::zeros((m, m));
    let mut p1 = Array2::zeros((m, m));
    let mut p2 = Array2::zeros((m, m));
    for i in 0..m {
        for j in 0..m {
            let t = grid.node(i, j);
            let z = linear.eigenvalue(t[0] * t[0] + t[1] * t[1]) * dt;
            exp[[i, j]] = z.exp();
            p1[[i, j]] = phi1(z);
            p2[[i, j]] = phi2(z);
        }
    }
    EtdTables { exp, phi1: p1, phi2: p2 }
}

fn mul_table(table: &Array2<Complex64>, u: &Symbol) -> Symbol {
    Symbol::new(u.grid.clone(), &u.data * table)
}

/// Sharp dealiasing projector at half the usable grid extent (so Minkowski
/// sums of two dealiased supports stay strictly on the grid); returns the
/// clipped symbol and the removed Parseval mass.
fn dealias(u: &Symbol) -> (Symbol, f64) {
    let r = 0.5 * (u.grid.t_max() - u.grid.spacing());
    let mut out = u.clone();
    let mut tail = 0.0f64;
    let m = u.grid.points();
    for i in 0..m {
        for j in 0..m {
            let t = u.grid.node(i, j);
            if t[0] * t[0] + t[1] * t[1] > r * r {
                tail += out.data[[i, j]].norm_sqr();
                out.data[[i, j]] = Complex64::new(0.0, 0.0);
            }
        }
    }
    let h = u.grid.spacing();
    let d = crate::theta::ThetaData::D as i32;
    (out, ((2.0 * std::f64::consts::PI).powi(d) * h * h * tail).sqrt())
}

struct NonlinearityEval<'a> {
    problem: &'a EvolutionProblem,
    n: usize,
    partition: Option<DyadicPartition>,
}

impl NonlinearityEval<'_> {
    fn eval(&self, u: &Symbol) -> Result<(Symbol, f64)> {
        let out = match &self.problem.nonlinearity {
            Nonlinearity::Zero => Symbol::zeros(u.grid.clone()),
            Nonlinearity::ScalarLinear(c) => {
                Symbol::new(u.grid.clone(), u.data.clone() * Complex64::new(*c, 0.0))
            }
            Nonlinearity::Reaction { f, route } => {
                let op = quantize(u, self.n)?.symmetrize();
                let f_op = match route {
                    NemytskijRoute::FunctionalCalculus => {
                        op.hermitian_calculus(|x| f.eval(x))?
                    }
                    NemytskijRoute::Meyer(mode) => {
                        let part = self.partition.as_ref().expect("partition for Meyer route");
                        crate::doi::meyer_decompose(f, &op, part, mode)?.total().symmetrize()
                    }
                };
                dequantize_unchecked(&f_op, &u.grid)?
            }
            Nonlinearity::DerivativePolynomial(p) => {
                let d1 = u.derivative(1)?;
                let d2 = u.derivative(2)?;
                p.eval_symbols(&[u.clone(), d1, d2])?
            }
        };
        let (clipped, tail) = dealias(&out);
        Ok((clipped, tail))
    }
}

fn sobolev_symbol_norm(u: &Symbol, s: f64) -> f64 {
    let h = u.grid.spacing();
    let mut acc = 0.0;
    for ((i, j), z) in u.data.indexed_iter() {
        let t = u.grid.node(i, j);
        let w = (1.0 + t[0] * t[0] + t[1] * t[1]).powf(s);
        acc += w * z.norm_sqr();
    }
    let d = crate::theta::ThetaData::D as i32;
    ((2.0 * std::f64::consts::PI).powi(d) * h * h * acc).sqrt()
}

fn weighted_sup_norm(u: &Symbol, s: f64) -> f64 {
    let mut sup = 0.0f64;
    for ((i, j), z) in u.data.indexed_iter() {
        let t = u.grid.node(i, j);
        sup = sup.max((1.0 + t[0] * t[0] + t[1] * t[1]).powf(s / 2.0) * z.norm());
    }
    sup
}

fn ratio_value(problem: &EvolutionProblem, fu: &Symbol, u: &Symbol) -> f64 {
    let (num, den) = match problem.spaces {
        RatioSpaces::L2 => (fu.parseval_norm(), u.parseval_norm()),
        RatioSpaces::BesovSupSurrogate { s } => {
            (weighted_sup_norm(fu, s), weighted_sup_norm(u, s))
        }
        RatioSpaces::SobolevShift { s } => {
            (sobolev_symbol_norm(fu, s), sobolev_symbol_norm(u, s + 1.0))
        }
    };
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Advance u(t) = e^(tL) u0 + int_0^t e^((t-s)L) F(u(s)) ds by exponential
/// integrator steps. ETD1 by default; ETD2RK adds the phi2 corrector; the
/// optional Picard loop iterates the corrector to verify the contraction the
/// fixed-point argument relies on, halving dt on non-contraction.
pub fn mild_solve(
    problem: &EvolutionProblem,
    u0: &Symbol,
    horizon: f64,
    cfg: &SolveConfig,
) -> Result<TrajectoryRecord> {
    if !(cfg.dt > 0.0) {
        return Err(MoyalError::Config(format!("dt must be positive, got {}", cfg.dt)));
    }
    if problem.gamma >= 1.0 {
        return Err(MoyalError::Config(format!(
            "smoothing exponent gamma must be < 1, got {}",
            problem.gamma
        )));
    }
    let needs_partition = matches!(
        problem.nonlinearity,
        Nonlinearity::Reaction { route: NemytskijRoute::Meyer(_), .. }
    );
    let partition = if needs_partition {
        Some(build_partition(&u0.grid, max_block_index(&u0.grid))?)
    } else {
        None
    };
    let evaluator = NonlinearityEval { problem, n: cfg.n, partition };

    let mut dt = cfg.dt;
    let mut tables = etd_tables(&u0.grid, problem.linear, dt);
    let mut record = TrajectoryRecord::new(dt);
    let mut u = u0.clone();
    let mut t = 0.0;
    let mut step_index = 0usize;

    let push_record = |record: &mut TrajectoryRecord,
                       t: f64,
                       u: &Symbol,
                       fu: &Symbol,
                       tail: f64| {
        record.times.push(t);
        record.states.push(vec![u.clone()]);
        record.norms.push(NormRecord {
            t,
            l2: u.parseval_norm(),
            linf: f64::NAN, // filled on demand by callers that need it
            hermitian_residual: u.hermitian_residual(),
            divergence_residual: 0.0,
            advection_orthogonality: 0.0,
            ratio: ratio_value(problem, fu, u),
            dealias_tail: tail,
        });
    };

    let (mut fu, mut tail) = evaluator.eval(&u)?;
    push_record(&mut record, t, &u, &fu, tail);

    while t < horizon - 1e-12 {
        let h = dt.min(horizon - t);
        let (tab, owned);
        if (h - dt).abs() > 1e-15 {
            owned = etd_tables(&u0.grid, problem.linear, h);
            tab = &owned;
        } else {
            tab = &tables;
        }

        let hs = Complex64::new(h, 0.0);
        let linear_part = mul_table(&tab.exp, &u);
        let mut next = Symbol::new(
            u.grid.clone(),
            &linear_part.data + &(mul_table(&tab.phi1, &fu).data * hs),
        );
        let mut f_next = evaluator.eval(&next)?;

        if cfg.integrator == Integrator::Etd2Rk || cfg.picard.is_some() {
            // corrector: u <- predictor + h phi2 (F(u_pred) - F(u_n))
            let correct = |f_new: &Symbol| -> Symbol {
                let diff = Symbol::new(u.grid.clone(), &f_new.data - &fu.data);
                Symbol::new(
                    u.grid.clone(),
                    &next.data + &(mul_table(&tab.phi2, &diff).data * hs),
                )
            };
            let mut corrected = correct(&f_next.0);
            if let Some(pic) = cfg.picard {
                let mut prev_delta = f64::INFINITY;
                let mut contracted = true;
                for _ in 0..pic.max_iter {
                    let f_corr = evaluator.eval(&corrected)?;
                    let new_corrected = correct(&f_corr.0);
                    let delta = Symbol::new(
                        u.grid.clone(),
                        &new_corrected.data - &corrected.data,
                    )
                    .parseval_norm();
                    if prev_delta.is_finite() {
                        let factor = if prev_delta > 0.0 { delta / prev_delta } else { 0.0 };
                        record.picard_factors.push(factor);
                        if factor >= 1.0 && delta > pic.tol {
                            contracted = false;
                        }
                    }
                    corrected = new_corrected;
                    f_next = f_corr;
                    if delta <= pic.tol {
                        break;
                    }
                    prev_delta = delta;
                }
                if !contracted {
                    // the Duhamel map failed to contract at this step size
                    dt *= 0.5;
                    if dt < cfg.min_dt {
                        record.dt_collapsed = true;
                        return Err(MoyalError::StepUnderflow { min_dt: cfg.min_dt });
                    }
                    tables = etd_tables(&u0.grid, problem.linear, dt);
                    continue;
                }
            }
            next = corrected;
            if cfg.picard.is_none() {
                f_next = evaluator.eval(&next)?;
            }
        }

        u = next;
        (fu, tail) = f_next;
        t += h;
        step_index += 1;

        let l2 = u.parseval_norm();
        if !l2.is_finite() || l2 > cfg.norm_cap {
            record.blow_up = Some(t);
            push_record(&mut record, t, &u, &fu, tail);
            record.dt_final = dt;
            return Ok(record);
        }
        if step_index % cfg.record_every == 0 || t >= horizon - 1e-12 {
            push_record(&mut record, t, &u, &fu, tail);
        }
    }
    record.dt_final = dt;
    Ok(record)
}

/// Reaction-diffusion solve: d_t u = Delta u + F(u) with real smooth F
/// applied through the functional calculus (or the Meyer route).
pub fn solve_allen_cahn(
    f: &ScalarFunction,
    u0: &Symbol,
    horizon: f64,
    cfg: &SolveConfig,
    route: NemytskijRoute,
) -> Result<TrajectoryRecord> {
    let problem = EvolutionProblem {
        linear: LinearPart::Heat,
        nonlinearity: Nonlinearity::Reaction { f: f.clone(), route },
        spaces: RatioSpaces::BesovSupSurrogate { s: 0.5 },
        gamma: 0.5,
    };
    mild_solve(&problem, u0, horizon, cfg)
}

/// Reaction-diffusion with a noncommutative polynomial in (u, d1 u, d2 u).
pub fn solve_allen_cahn_polynomial(
    p: &NcPolynomial,
    u0: &Symbol,
    horizon: f64,
    cfg: &SolveConfig,
) -> Result<TrajectoryRecord> {
    let problem = EvolutionProblem {
        linear: LinearPart::Heat,
        nonlinearity: Nonlinearity::DerivativePolynomial(p.clone()),
        spaces: RatioSpaces::L2,
        gamma: 0.5,
    };
    mild_solve(&problem, u0, horizon, cfg)
}

/// The closed-form nonlinear substep of the Schroedinger splitting:
/// u <- u exp(-i mu h |u|^(p-1)). Since |u| is constant along the substep
/// flow, this is its exact solution, and it is an exact L2 isometry (right
/// multiplication by a unitary).
pub fn nls_nonlinear_substep(u: &NcOperator, mu: f64, p: u32, h: f64) -> Result<NcOperator> {
    let w = u.adjoint().mul(u); // |u|^2, Hermitian PSD
    let (vals, vecs) = w.eigh()?;
    let half_power = (p as f64 - 1.0) / 2.0;
    let phases: ndarray::Array1<Complex64> = vals
        .iter()
        .map(|&x| Complex64::from_polar(1.0, -mu * h * x.max(0.0).powf(half_power)))
        .collect();
    let rotation = crate::operator::conjugate_diag(&vecs, &phases);
    Ok(NcOperator::new(u.theta, u.entries.dot(&rotation)))
}

/// Strang-splitting solve of i d_t u = Delta u + mu u |u|^(p-1) for odd
/// p >= 3. The state lives on the matrix side; the linear half-steps use the
/// exactly unitary Fock-space Laplacian group, the nonlinear step its closed
/// form, so the l2 norm is conserved to rounding. mu = 0 falls back to the
/// exact symbol multiplier.
pub fn solve_nls(
    mu: f64,
    p: u32,
    u0: &Symbol,
    horizon: f64,
    cfg: &SolveConfig,
) -> Result<TrajectoryRecord> {
    if p % 2 == 0 || p < 3 {
        return Err(MoyalError::Config(format!(
            "u |u|^(p-1) is polynomial only for odd p >= 3, got {p}"
        )));
    }
    if mu == 0.0 {
        let problem = EvolutionProblem {
            linear: LinearPart::Schroedinger,
            nonlinearity: Nonlinearity::Zero,
            spaces: RatioSpaces::L2,
            gamma: 0.0,
        };
        return mild_solve(&problem, u0, horizon, cfg);
    }

    let theta = u0.grid.theta();
    let trace_scale = theta.trace_unit().sqrt();
    let superop = LaplacianSuperoperator::new(theta, cfg.n)?;
    let mut u = quantize(u0, cfg.n)?;
    let mut record = TrajectoryRecord::new(cfg.dt);
    let mut t = 0.0;
    let mut step_index = 0usize;

    let push = |record: &mut TrajectoryRecord, t: f64, u: &NcOperator| {
        let l2 = trace_scale * crate::operator::frobenius(&u.entries);
        let ratio_num = {
            // || mu u |u|^(p-1) ||_2 through singular values: same singular
            // vectors scale as sigma^p
            let sv = u.singular_values();
            let sum: f64 = sv.iter().map(|s| s.powi(2 * p as i32)).sum();
            mu.abs() * trace_scale * sum.sqrt()
        };
        record.times.push(t);
        record.norms.push(NormRecord {
            t,
            l2,
            linf: u.singular_values().first().copied().unwrap_or(0.0),
            hermitian_residual: 0.0,
            divergence_residual: 0.0,
            advection_orthogonality: 0.0,
            ratio: if l2 > 0.0 { ratio_num / l2 } else { 0.0 },
            dealias_tail: 0.0,
        });
    };
    push(&mut record, t, &u);

    let half = Complex64::new(0.0, -0.5 * cfg.dt);
    while t < horizon - 1e-12 {
        let h = cfg.dt.min(horizon - t);
        let c = if (h - cfg.dt).abs() > 1e-15 { Complex64::new(0.0, -0.5 * h) } else { half };
        u = superop.exp_apply(c, &u);
        u = nls_nonlinear_substep(&u, mu, p, h)?;
        u = superop.exp_apply(c, &u);
        t += h;
        step_index += 1;
        if step_index % cfg.record_every == 0 || t >= horizon - 1e-12 {
            push(&mut record, t, &u);
        }
        let l2 = trace_scale * crate::operator::frobenius(&u.entries);
        if !l2.is_finite() || l2 > cfg.norm_cap {
            record.blow_up = Some(t);
            break;
        }
    }
    record.dt_final = cfg.dt;
    Ok(record)
}

/// Jordan-product advection X(u)_k = 1/2 sum_j (u_j o d_j u_k + d_j u_k o u_j)
/// in the symbol algebra; self-adjoint whenever the components are. The
/// one-sided variant sum_j u_j d_j(u_k) does not preserve self-adjointness
/// and is left as an extension point.
pub fn advection(u: &[Symbol; 2]) -> Result<[Symbol; 2]> {
    let mut out = Vec::with_capacity(2);
    for k in 0..2 {
        let mut acc = Symbol::zeros(u[0].grid.clone());
        for j in 0..2 {
            let duk = u[k].derivative(j + 1)?;
            let a = twisted_convolution(&u[j], &duk)?;
            let b = twisted_convolution(&duk, &u[j])?;
            for ((x, y), z) in acc.data.iter_mut().zip(a.data.iter()).zip(b.data.iter()) {
                *x += 0.5 * (y + z);
            }
        }
        out.push(acc);
    }
    Ok([out.remove(0), out.remove(0)])
}

/// Parseval inner product of vector fields.
fn field_inner(a: &[Symbol; 2], b: &[Symbol; 2]) -> Complex64 {
    a[0].parseval_inner(&b[0]) + a[1].parseval_inner(&b[1])
}

fn field_l2(a: &[Symbol; 2]) -> f64 {
    (a[0].parseval_norm().powi(2) + a[1].parseval_norm().powi(2)).sqrt()
}

/// Incompressible-flow solve: d_t u = Delta u - P X(u) with the Leray
/// projection applied in symbol space each step. The advection, projection,
/// derivatives and pairings are all exact grid-algebra operations, so the
/// divergence, Hermiticity, and the advection-energy orthogonality
/// Re <P X(u), u> = 0 hold to rounding at every step.
pub fn solve_navier_stokes(
    u0: &[Symbol; 2],
    horizon: f64,
    cfg: &SolveConfig,
) -> Result<TrajectoryRecord> {
    u0[0].same_grid(&u0[1])?;
    let div0 = divergence(u0)?.parseval_norm();
    let scale0 = field_l2(u0).max(1e-300);
    if div0 > 1e-10 * scale0 {
        return Err(MoyalError::Config(format!(
            "initial field is not divergence-free: residual {div0:.3e}"
        )));
    }
    for comp in u0 {
        if comp.hermitian_residual() > 1e-10 {
            return Err(MoyalError::Config(
                "initial field components must be self-adjoint".into(),
            ));
        }
    }

    let grid = u0[0].grid.clone();
    let mut dt = cfg.dt;
    let mut tables = etd_tables(&grid, LinearPart::Heat, dt);
    let mut u = u0.clone();
    let mut t = 0.0;
    let mut record = TrajectoryRecord::new(dt);
    let mut step_index = 0usize;

    let push = |record: &mut TrajectoryRecord,
                t: f64,
                u: &[Symbol; 2],
                ortho: f64,
                ratio: f64,
                tail: f64| {
        let div = divergence(u).map(|d| d.parseval_norm()).unwrap_or(f64::NAN);
        let herm = u[0].hermitian_residual().max(u[1].hermitian_residual());
        record.times.push(t);
        record.states.push(u.to_vec());
        record.norms.push(NormRecord {
            t,
            l2: field_l2(u),
            linf: f64::NAN,
            hermitian_residual: herm,
            divergence_residual: div,
            advection_orthogonality: ortho,
            ratio,
            dealias_tail: tail,
        });
    };

    // initial diagnostics
    {
        let x = advection(&u)?;
        let px = leray_project(&x)?;
        let ortho = field_inner(&px, &u).re.abs();
        let ratio = {
            let num = (sobolev_symbol_norm(&px[0], 0.0).powi(2)
                + sobolev_symbol_norm(&px[1], 0.0).powi(2))
            .sqrt();
            let den = (sobolev_symbol_norm(&u[0], 1.0).powi(2)
                + sobolev_symbol_norm(&u[1], 1.0).powi(2))
            .sqrt();
            if den > 0.0 { num / den } else { 0.0 }
        };
        push(&mut record, t, &u, ortho, ratio, 0.0);
    }

    while t < horizon - 1e-12 {
        let h = dt.min(horizon - t);
        let (tab, owned);
        if (h - dt).abs() > 1e-15 {
            owned = etd_tables(&grid, LinearPart::Heat, h);
            tab = &owned;
        } else {
            tab = &tables;
        }

        let x = advection(&u)?;
        let px = leray_project(&x)?;
        // the energy-orthogonality pairing, evaluated before any truncation
        let ortho = field_inner(&px, &u).re.abs();

        let hs = Complex64::new(-h, 0.0); // minus: d_t u = Delta u - P X(u)
        let mut next = [
            Symbol::new(grid.clone(), &mul_table(&tab.exp, &u[0]).data + &(mul_table(&tab.phi1, &px[0]).data * hs)),
            Symbol::new(grid.clone(), &mul_table(&tab.exp, &u[1]).data + &(mul_table(&tab.phi1, &px[1]).data * hs)),
        ];
        let (c0, tail0) = dealias(&next[0]);
        let (c1, tail1) = dealias(&next[1]);
        next = [c0, c1];
        let tail = (tail0 * tail0 + tail1 * tail1).sqrt();

        // invariant gates: reject the step and halve dt on drift
        let div = divergence(&next)?.parseval_norm();
        let herm = next[0].hermitian_residual().max(next[1].hermitian_residual());
        let scale = field_l2(&next).max(1e-300);
        if div > 1e-8 * scale || herm > 1e-8 {
            dt *= 0.5;
            if dt < cfg.min_dt {
                record.dt_collapsed = true;
                return Err(MoyalError::StepUnderflow { min_dt: cfg.min_dt });
            }
            tables = etd_tables(&grid, LinearPart::Heat, dt);
            continue;
        }

        u = next;
        t += h;
        step_index += 1;
        let l2 = field_l2(&u);
        if !l2.is_finite() || l2 > cfg.norm_cap {
            record.blow_up = Some(t);
            push(&mut record, t, &u, ortho, 0.0, tail);
            record.dt_final = dt;
            return Ok(record);
        }
        if step_index % cfg.record_every == 0 || t >= horizon - 1e-12 {
            let ratio = {
                let num = (sobolev_symbol_norm(&px[0], 0.0).powi(2)
                    + sobolev_symbol_norm(&px[1], 0.0).powi(2))
                .sqrt();
                let den = (sobolev_symbol_norm(&u[0], 1.0).powi(2)
                    + sobolev_symbol_norm(&u[1], 1.0).powi(2))
                .sqrt();
                if den > 0.0 { num / den } else { 0.0 }
            };
            push(&mut record, t, &u, ortho, ratio, tail);
        }
    }
    record.dt_final = dt;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::heat_semigroup;
    use crate::random::{band_limited_symbol, hermitian_band_limited_symbol, rng_from_seed};
    use crate::symbol::GridSpec;
    use crate::theta::ThetaData;

    fn grid() -> GridSpec {
        GridSpec::new(8.0, 64, ThetaData::new(1.0).unwrap()).unwrap()
    }

    fn heat_problem(nl: Nonlinearity) -> EvolutionProblem {
        EvolutionProblem {
            linear: LinearPart::Heat,
            nonlinearity: nl,
            spaces: RatioSpaces::L2,
            gamma: 0.5,
        }
    }

    #[test]
    fn linear_problem_reproduces_heat_semigroup() {
        let g = grid();
        let mut rng = rng_from_seed(1);
        let u0 = band_limited_symbol(&g, 3.5, &mut rng);
        let cfg = SolveConfig { dt: 0.02, record_every: 1, ..Default::default() };
        let rec = mild_solve(&heat_problem(Nonlinearity::Zero), &u0, 1.0, &cfg).unwrap();
        let exact = heat_semigroup(1.0, &u0).unwrap();
        let last = rec.states.last().unwrap()[0].clone();
        let num: f64 = (&last.data - &exact.data).iter().map(|z| z.norm_sqr()).sum();
        let rel = num.sqrt() / exact.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(rel <= 1e-12, "linear flow error {rel}");
    }

    #[test]
    fn free_heat_flow_contracts_every_lp_norm() {
        let g = grid();
        let mut rng = rng_from_seed(19);
        let u0 = band_limited_symbol(&g, 3.5, &mut rng);
        let cfg = SolveConfig { dt: 0.05, record_every: 1, ..Default::default() };
        let rec = mild_solve(&heat_problem(Nonlinearity::Zero), &u0, 0.5, &cfg).unwrap();
        for p in [1.0, 2.0, f64::INFINITY] {
            let series: Vec<f64> = rec
                .states
                .iter()
                .map(|s| {
                    crate::symbol::quantize(&s[0], 48).unwrap().lp_norm(p).unwrap()
                })
                .collect();
            for w in series.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-9), "p={p} series not contracting: {series:?}");
            }
        }
    }

    #[test]
    fn scalar_linear_orders_of_accuracy() {
        // F(u) = c u has the exact symbolwise solution e^((-|xi|^2 + c) T) f0
        let g = grid();
        let mut rng = rng_from_seed(2);
        let u0 = band_limited_symbol(&g, 3.5, &mut rng);
        let c = 0.8;
        let horizon = 0.5;
        let exact = {
            let mut e = u0.clone();
            let m = g.points();
            for i in 0..m {
                for j in 0..m {
                    let t = g.node(i, j);
                    let z = (-(t[0] * t[0] + t[1] * t[1]) + c) * horizon;
                    e.data[[i, j]] *= Complex64::new(z.exp(), 0.0);
                }
            }
            e
        };
        let err_for = |dt: f64, integ: Integrator| -> f64 {
            let cfg = SolveConfig { dt, integrator: integ, record_every: 1000, ..Default::default() };
            let rec =
                mild_solve(&heat_problem(Nonlinearity::ScalarLinear(c)), &u0, horizon, &cfg)
                    .unwrap();
            let last = rec.states.last().unwrap()[0].clone();
            (&last.data - &exact.data).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
        };
        let e1a = err_for(0.05, Integrator::Etd1);
        let e1b = err_for(0.025, Integrator::Etd1);
        let order1 = (e1a / e1b).log2();
        assert!((order1 - 1.0).abs() <= 0.25, "ETD1 order {order1}");
        let e2a = err_for(0.05, Integrator::Etd2Rk);
        let e2b = err_for(0.025, Integrator::Etd2Rk);
        let order2 = (e2a / e2b).log2();
        assert!((order2 - 2.0).abs() <= 0.35, "ETD2RK order {order2}");
    }

    #[test]
    fn allen_cahn_self_convergence_under_step_halving() {
        let g = grid();
        let mut rng = rng_from_seed(3);
        let mut u0 = hermitian_band_limited_symbol(&g, 3.0, &mut rng);
        crate::random::normalize_symbol(&mut u0);
        let f = ScalarFunction::cubic_reaction(3.0);
        let run = |dt: f64| -> Symbol {
            let cfg = SolveConfig { dt, n: 48, record_every: 1000, ..Default::default() };
            solve_allen_cahn(&f, &u0, 0.2, &cfg, NemytskijRoute::FunctionalCalculus)
                .unwrap()
                .states
                .last()
                .unwrap()[0]
                .clone()
        };
        let a = run(0.05);
        let b = run(0.025);
        let c = run(0.0125);
        let e_ab: f64 = (&a.data - &c.data).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let e_bc: f64 = (&b.data - &c.data).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        // Richardson: halving dt should at least halve the gap to the finer run
        let order = (e_ab / e_bc).log2();
        assert!(order >= 0.8, "Allen-Cahn self-convergence order {order}");
    }

    #[test]
    fn blow_up_monitor_verdicts() {
        let g = grid();
        let mut rng = rng_from_seed(4);
        let u0 = band_limited_symbol(&g, 3.0, &mut rng);
        // linear F: constant ratio, GLOBAL_OK
        let cfg = SolveConfig { dt: 0.02, record_every: 2, ..Default::default() };
        let rec = mild_solve(&heat_problem(Nonlinearity::ScalarLinear(0.7)), &u0, 0.4, &cfg).unwrap();
        for r in &rec.norms {
            assert!((r.ratio - 0.7).abs() <= 1e-9, "linear ratio {}", r.ratio);
        }
        let report = blow_up_monitor(&rec, 0.5, 10.0);
        assert_eq!(report.verdict, Verdict::GlobalOk);
        assert!(report.duhamel_bound.is_finite());

        // forced blow-up toy: u' = u^2 on the origin mode, u0 = 2 * identity.
        // the origin mode sees no diffusion and follows c' = c^2, whose exact
        // solution 1/(1/2 - t) leaves any cap before t = 1.2
        let mut delta = Symbol::delta(g.clone());
        delta.data.mapv_inplace(|z| z * 2.0);
        let square = NcPolynomial::new(3, vec![(Complex64::new(1.0, 0.0), vec![0, 0])]);
        let cfg2 = SolveConfig {
            dt: 5e-3,
            record_every: 1,
            norm_cap: 1e4,
            ..Default::default()
        };
        let rec2 = mild_solve(
            &heat_problem(Nonlinearity::DerivativePolynomial(square)),
            &delta,
            1.2,
            &cfg2,
        )
        .unwrap();
        assert!(rec2.blow_up.is_some(), "scalar u^2 mode failed to blow up");
        let report2 = blow_up_monitor(&rec2, 0.5, 10.0);
        assert_eq!(report2.verdict, Verdict::Flagged);
        // check the trajectory against the ODE oracle at t = 0.25
        let idx = rec2
            .norms
            .iter()
            .position(|r| r.t >= 0.25)
            .expect("record near t = 0.25");
        let t = rec2.norms[idx].t;
        let expected_coeff = 1.0 / (0.5 - t);
        let l2_expected = expected_coeff * Symbol::delta(g.clone()).parseval_norm();
        let got = rec2.norms[idx].l2;
        assert!(
            (got - l2_expected).abs() <= 0.15 * l2_expected,
            "scalar mode at t={t}: {got} vs ODE oracle {l2_expected}"
        );
    }

    #[test]
    fn picard_refinement_contracts_on_moderate_steps() {
        let g = grid();
        let mut rng = rng_from_seed(5);
        let mut u0 = hermitian_band_limited_symbol(&g, 3.0, &mut rng);
        crate::random::normalize_symbol(&mut u0);
        let f = ScalarFunction::cubic_reaction(3.0);
        let cfg = SolveConfig {
            dt: 0.02,
            n: 48,
            picard: Some(PicardConfig { tol: 1e-10, max_iter: 6 }),
            record_every: 1000,
            ..Default::default()
        };
        let rec = solve_allen_cahn(&f, &u0, 0.1, &cfg, NemytskijRoute::FunctionalCalculus).unwrap();
        assert!(!rec.picard_factors.is_empty());
        let max_factor = rec.picard_factors.iter().cloned().fold(0.0f64, f64::max);
        assert!(max_factor < 1.0, "Picard factor {max_factor} >= 1");
    }

    #[test]
    fn allen_cahn_stays_hermitian_and_smooths() {
        let g = grid();
        let mut rng = rng_from_seed(6);
        let mut u0 = hermitian_band_limited_symbol(&g, 3.0, &mut rng);
        crate::random::normalize_symbol(&mut u0);
        let f = ScalarFunction::cubic_reaction(3.0);
        let cfg = SolveConfig { dt: 0.01, n: 48, record_every: 2, ..Default::default() };
        let rec = solve_allen_cahn(&f, &u0, 0.3, &cfg, NemytskijRoute::FunctionalCalculus).unwrap();
        for r in &rec.norms {
            assert!(r.hermitian_residual <= 1e-8, "hermitian drift {}", r.hermitian_residual);
        }
        // instantaneous smoothing: the relative weight of the higher Besov
        // level (the high-frequency content) decays along the trajectory
        let part = build_partition(&g, max_block_index(&g)).unwrap();
        let states = &rec.states;
        let ratio = |s: &Symbol| {
            crate::lp::besov_22_symbol_side(s, 1.5, &part)
                / crate::lp::besov_22_symbol_side(s, 1.0, &part).max(1e-300)
        };
        let early = ratio(&states[1][0]);
        let late = ratio(&states.last().unwrap()[0]);
        assert!(early.is_finite() && late.is_finite());
        assert!(late <= early * 1.02, "no smoothing: early {early}, late {late}");
    }

    #[test]
    fn allen_cahn_meyer_route_agrees_with_functional_calculus() {
        let g = grid();
        let mut rng = rng_from_seed(7);
        let mut u0 = hermitian_band_limited_symbol(&g, 3.0, &mut rng);
        crate::random::normalize_symbol(&mut u0);
        let f = ScalarFunction::cubic_reaction(2.0);
        let cfg = SolveConfig { dt: 0.02, n: 48, record_every: 1000, ..Default::default() };
        let a = solve_allen_cahn(&f, &u0, 0.1, &cfg, NemytskijRoute::FunctionalCalculus).unwrap();
        let quad = crate::doi::bs_decompose(&f, 1e-6).unwrap();
        let b = solve_allen_cahn(&f, &u0, 0.1, &cfg, NemytskijRoute::Meyer(KernelMode::Quadrature(quad)))
            .unwrap();
        let ua = &a.states.last().unwrap()[0];
        let ub = &b.states.last().unwrap()[0];
        let num: f64 = (&ua.data - &ub.data).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = ua.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(num / den <= 1e-3, "route disagreement {}", num / den);
    }

    #[test]
    fn allen_cahn_polynomial_nonlinearity_runs() {
        // p(u, d1 u, d2 u) = (u o d1 u): the symmetrized convective term
        let g = grid();
        let mut rng = rng_from_seed(8);
        let mut u0 = hermitian_band_limited_symbol(&g, 3.0, &mut rng);
        crate::random::normalize_symbol(&mut u0);
        let p = NcPolynomial::jordan(3, 0, 1);
        let cfg = SolveConfig { dt: 0.01, record_every: 5, ..Default::default() };
        let rec = solve_allen_cahn_polynomial(&p, &u0, 0.2, &cfg).unwrap();
        assert!(rec.blow_up.is_none());
        for r in &rec.norms {
            assert!(r.hermitian_residual <= 1e-8);
            assert!(r.l2.is_finite());
        }
    }

    #[test]
    fn free_schroedinger_is_exactly_unitary_on_symbols() {
        let g = grid();
        let mut rng = rng_from_seed(9);
        let u0 = band_limited_symbol(&g, 3.5, &mut rng);
        let cfg = SolveConfig { dt: 0.01, record_every: 10, ..Default::default() };
        let rec = solve_nls(0.0, 3, &u0, 1.0, &cfg).unwrap();
        let drift = rec.conservation_drift();
        assert!(drift <= 1e-12, "free flow drift {drift}");
    }

    #[test]
    fn nls_conserves_l2_for_both_signs() {
        let g = grid();
        let mut rng = rng_from_seed(10);
        let mut u0 = band_limited_symbol(&g, 3.0, &mut rng);
        crate::random::normalize_symbol(&mut u0);
        for mu in [1.0, -1.0] {
            let cfg = SolveConfig { dt: 5e-3, n: 48, record_every: 10, ..Default::default() };
            let rec = solve_nls(mu, 3, &u0, 1.0, &cfg).unwrap();
            assert_eq!(rec.blow_up, None);
            let drift = rec.conservation_drift();
            assert!(drift <= 1e-10, "mu={mu}: drift {drift}");
        }
    }

    #[test]
    fn nls_rejects_even_power() {
        let g = grid();
        let mut rng = rng_from_seed(11);
        let u0 = band_limited_symbol(&g, 3.0, &mut rng);
        assert!(solve_nls(1.0, 4, &u0, 0.1, &SolveConfig::default()).is_err());
        assert!(solve_nls(1.0, 1, &u0, 0.1, &SolveConfig::default()).is_err());
    }

    #[test]
    fn nls_substep_closed_form_on_rank_one() {
        // u0 = c |0><0|: |u| is constant, so the substep is the phase rotation
        // u0 e^(-i mu t |c|^2)
        let th = ThetaData::new(1.0).unwrap();
        let c = Complex64::new(0.7, -0.3);
        let mut u = NcOperator::zeros(th, 16);
        u.entries[[0, 0]] = c;
        let (mu, p, h) = (0.9, 3u32, 0.25);
        let stepped = nls_nonlinear_substep(&u, mu, p, h).unwrap();
        let expected = c * Complex64::from_polar(1.0, -mu * h * c.norm_sqr());
        assert!((stepped.entries[[0, 0]] - expected).norm() <= 1e-13);
        for ((i, j), z) in stepped.entries.indexed_iter() {
            if (i, j) != (0, 0) {
                assert!(z.norm() <= 1e-14);
            }
        }
    }

    #[test]
    fn nls_strang_self_convergence_is_second_order() {
        // compare the observable trajectory (largest singular value series)
        // at matching times across dt refinements
        let g = grid();
        let mut rng = rng_from_seed(12);
        let mut u0 = band_limited_symbol(&g, 3.0, &mut rng);
        crate::random::normalize_symbol(&mut u0);
        let run_series = |dt: f64| -> Vec<f64> {
            let cfg = SolveConfig {
                dt,
                n: 32,
                record_every: (0.1 / dt).round() as usize,
                ..Default::default()
            };
            solve_nls(1.0, 3, &u0, 0.4, &cfg)
                .unwrap()
                .norms
                .iter()
                .map(|r| r.linf)
                .collect()
        };
        let a = run_series(0.02);
        let b = run_series(0.01);
        let c = run_series(0.005);
        let n = a.len().min(b.len()).min(c.len());
        let e_ac: f64 = (0..n).map(|i| (a[i] - c[i]).abs()).fold(0.0, f64::max);
        let e_bc: f64 = (0..n).map(|i| (b[i] - c[i]).abs()).fold(0.0, f64::max);
        let order = (e_ac / e_bc).log2();
        assert!(order >= 1.5, "Strang order estimate {order}");
    }

    fn divergence_free_field(g: &GridSpec, seed: u64, amp: f64) -> [Symbol; 2] {
        let mut rng = rng_from_seed(seed);
        let a = hermitian_band_limited_symbol(g, 3.0, &mut rng);
        let b = hermitian_band_limited_symbol(g, 3.0, &mut rng);
        let mut f = leray_project(&[a, b]).unwrap();
        let scale = field_l2(&f).max(1e-300);
        for comp in &mut f {
            comp.data.mapv_inplace(|z| z * (amp / scale));
        }
        f
    }

    #[test]
    fn navier_stokes_zero_initial_state_stays_zero() {
        let g = grid();
        let z = [Symbol::zeros(g.clone()), Symbol::zeros(g)];
        let cfg = SolveConfig { dt: 0.02, record_every: 2, ..Default::default() };
        let rec = solve_navier_stokes(&z, 0.2, &cfg).unwrap();
        for r in &rec.norms {
            assert_eq!(r.l2, 0.0);
        }
    }

    #[test]
    fn navier_stokes_linearized_regime_matches_heat() {
        // for tiny amplitude the advection is O(||u0||^2) relative
        let g = grid();
        let amp = 1e-4;
        let u0 = divergence_free_field(&g, 13, amp);
        let cfg = SolveConfig { dt: 0.01, record_every: 1000, ..Default::default() };
        let rec = solve_navier_stokes(&u0, 0.3, &cfg).unwrap();
        let last = &rec.states.last().unwrap()[..];
        let mut worst = 0.0f64;
        for k in 0..2 {
            let heat = heat_semigroup(0.3, &u0[k]).unwrap();
            let num: f64 =
                (&last[k].data - &heat.data).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max(num);
        }
        let scale = field_l2(&u0);
        assert!(
            worst <= 10.0 * amp * scale,
            "linearized deviation {worst} vs O(amp^2) bound {}",
            10.0 * amp * scale
        );
    }

    #[test]
    fn navier_stokes_invariants_along_moderate_run() {
        let g = grid();
        let u0 = divergence_free_field(&g, 14, 0.25);
        let cfg = SolveConfig { dt: 5e-3, record_every: 4, ..Default::default() };
        let rec = solve_navier_stokes(&u0, 0.5, &cfg).unwrap();
        assert!(rec.blow_up.is_none());
        assert!(!rec.dt_collapsed);
        let scale = rec.norms[0].l2;
        for r in &rec.norms {
            assert!(r.divergence_residual <= 1e-8 * scale.max(1.0), "div {}", r.divergence_residual);
            assert!(r.hermitian_residual <= 1e-8, "herm {}", r.hermitian_residual);
            assert!(
                r.advection_orthogonality <= 1e-8 * scale * scale * scale.max(1.0),
                "orthogonality {}",
                r.advection_orthogonality
            );
        }
        assert!(rec.energy_monotone(1e-8), "energy not monotone");
        let report = blow_up_monitor(&rec, 0.5, 1e3);
        assert_eq!(report.verdict, Verdict::GlobalOk);
    }

    #[test]
    fn navier_stokes_rejects_bad_initial_data() {
        let g = grid();
        let mut rng = rng_from_seed(15);
        let a = hermitian_band_limited_symbol(&g, 3.0, &mut rng);
        let b = hermitian_band_limited_symbol(&g, 3.0, &mut rng);
        // not divergence-free
        let cfg = SolveConfig::default();
        assert!(solve_navier_stokes(&[a.clone(), b.clone()], 0.1, &cfg).is_err());
        // not self-adjoint
        let mut rng2 = rng_from_seed(16);
        let c = band_limited_symbol(&g, 3.0, &mut rng2);
        let proj = leray_project(&[c.clone(), c]).unwrap();
        assert!(solve_navier_stokes(&proj, 0.1, &cfg).is_err());
    }

    #[test]
    fn persistence_survives_horizon_doubling() {
        let g = grid();
        let mut rng = rng_from_seed(17);
        let mut u0 = band_limited_symbol(&g, 3.0, &mut rng);
        crate::random::normalize_symbol(&mut u0);
        let cfg = SolveConfig { dt: 5e-3, n: 48, record_every: 20, ..Default::default() };
        let short = solve_nls(1.0, 3, &u0, 0.5, &cfg).unwrap();
        let long = solve_nls(1.0, 3, &u0, 1.0, &cfg).unwrap();
        for rec in [&short, &long] {
            let report = blow_up_monitor(rec, 0.0, 1e3);
            assert_eq!(report.verdict, Verdict::GlobalOk);
            assert!(!rec.dt_collapsed);
        }
        assert!((long.dt_final - cfg.dt).abs() < 1e-15);
    }
}
