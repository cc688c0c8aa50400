//! Level-dependent QBD for the nested ED: level = urgent count, phase = non-urgent count.
//!
//! Levels `0..h` are solved by the backward recursion `x_i = x_h U_i`; levels beyond
//! `h` are geometric with ratio `rho_u` because, once `i >= max(k, c)`, no non-urgent
//! patient is admitted or served and only urgent dynamics remain.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::params::{CapacityMode, ModelParams};

/// Entries in `(-NEGATIVE_TOLERANCE, 0)` are treated as round-off and clamped.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;

/// Generator blocks. `B = lambda_u I` and `C_i = mu_u min(i, c) I` are scaled identities
/// and stored as scalars.
#[derive(Debug, Clone)]
pub struct QbdBlocks {
    pub k: usize,
    pub h: usize,
    pub lambda_u: f64,
    pub rho_u: f64,
    /// `A_0 ..= A_h`; `A_h` is the repeating block.
    pub a: Vec<DMatrix<f64>>,
    /// `down[i]` is the scalar of `C_i`; `down[0]` is unused and zero.
    pub down: Vec<f64>,
}

impl QbdBlocks {
    pub fn b(&self) -> DMatrix<f64> {
        DMatrix::identity(self.k, self.k) * self.lambda_u
    }

    /// `C_i`, with `C_i = C_h` for every `i >= h`.
    pub fn c(&self, level: usize) -> DMatrix<f64> {
        DMatrix::identity(self.k, self.k) * self.down[level.min(self.h)]
    }

    /// `A_i`, with `A_i = A_h` for every `i >= h`.
    pub fn a(&self, level: usize) -> &DMatrix<f64> {
        &self.a[level.min(self.h)]
    }

    /// Largest absolute row sum of `[C_i | A_i | B]` over all stored levels (level 0
    /// has no down block).
    pub fn max_generator_row_sum(&self) -> f64 {
        let mut worst = 0.0f64;
        for (level, a) in self.a.iter().enumerate() {
            let down = if level == 0 { 0.0 } else { self.down[level] };
            for r in 0..self.k {
                let s: f64 = a.row(r).iter().sum::<f64>() + down + self.lambda_u;
                worst = worst.max(s.abs());
            }
        }
        worst
    }

    /// Writes one CSV per block (`A_<i>.csv`, `B.csv`, `C_<i>.csv`) into `dir`.
    pub fn dump_csv(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
        for (level, a) in self.a.iter().enumerate() {
            write_block(&dir.join(format!("A_{level}.csv")), level, a)?;
        }
        write_block(&dir.join("B.csv"), 0, &self.b())?;
        for level in 1..=self.h {
            write_block(&dir.join(format!("C_{level}.csv")), level, &self.c(level))?;
        }
        Ok(())
    }
}

fn write_block(path: &Path, level: usize, m: &DMatrix<f64>) -> Result<()> {
    let mut out = String::from("level,phase");
    for col in 0..m.ncols() {
        out.push_str(&format!(",c{col}"));
    }
    out.push('\n');
    for r in 0..m.nrows() {
        out.push_str(&format!("{level},{r}"));
        for col in 0..m.ncols() {
            out.push_str(&format!(",{:?}", m[(r, col)]));
        }
        out.push('\n');
    }
    crate::report::write_atomic(path, out.as_bytes())
}

/// Builds the QBD blocks. Rejects parameters that are unstable in nested mode.
pub fn build_blocks(params: &ModelParams) -> Result<QbdBlocks> {
    let d = params.derive()?;
    params.check_stability(CapacityMode::Nested)?.into_result()?;
    let k = params.k as usize;
    let h = d.h;
    let c = d.c_total as usize;

    let mut a = Vec::with_capacity(h + 1);
    let mut down = Vec::with_capacity(h + 1);
    for level in 0..=h {
        let urgent_out = params.mu_u * params.servers_urgent(level) as f64;
        down.push(if level == 0 { 0.0 } else { params.mu_u * level.min(c) as f64 });
        let mut block = DMatrix::zeros(k, k);
        for j in 0..k {
            // the phase space stops at k-1, so the top phase has no upward move
            let up = if j + 1 < k { d.lambda_n * params.alpha(level, j) } else { 0.0 };
            let service = params.mu_n * params.servers_nonurgent(level, j) as f64;
            if j + 1 < k {
                block[(j, j + 1)] = up;
            }
            if j > 0 {
                block[(j, j - 1)] = service;
            }
            block[(j, j)] = -(d.lambda_u + up + urgent_out + service);
        }
        a.push(block);
    }
    Ok(QbdBlocks {
        k,
        h,
        lambda_u: d.lambda_u,
        rho_u: d.rho_u,
        a,
        down,
    })
}

/// Closed-form geometric tail sums for levels `i >= h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSums {
    /// `sum_{i>=h} rho^(i-h) = 1 / (1 - rho)`
    pub level_count: f64,
    /// `sum_{i>=h} i rho^(i-h) = h / (1 - rho) + rho / (1 - rho)^2`
    pub level_index: f64,
    /// `x_h e / (1 - rho)`: probability of being at level `h` or above.
    pub mass: f64,
    /// `x_h e * level_index`: contribution of the tail to `E[N_u]`.
    pub urgent_moment: f64,
    /// `(sum_j j x_h[j]) / (1 - rho)`: contribution of the tail to `E[N_n]`.
    pub nonurgent_moment: f64,
}

/// `(sum_{n>=0} rho^n, sum_{n>=0} (h + n) rho^n)`.
///
/// Differentiating `sum rho^n = 1/(1-rho)` gives `sum n rho^n = rho/(1-rho)^2`, so the
/// index sum is `h/(1-rho) + rho/(1-rho)^2`.
pub fn geometric_tail(rho: f64, h: usize) -> (f64, f64) {
    let inv = 1.0 / (1.0 - rho);
    (inv, h as f64 * inv + rho * inv * inv)
}

/// Stationary distribution of the nested QBD.
#[derive(Debug, Clone)]
pub struct StationaryDistribution {
    /// `x_0 ..= x_h`.
    pub x_rows: Vec<RowDVector<f64>>,
    pub rho_u: f64,
    pub h: usize,
    pub k: usize,
}

impl StationaryDistribution {
    /// `pi(i, j)`, exact for every level through the geometric extension.
    pub fn pi(&self, level: usize, phase: usize) -> Result<f64> {
        if phase >= self.k {
            return Err(Error::PhaseOutOfRange { phase, k: self.k });
        }
        Ok(self.pi_unchecked(level, phase))
    }

    pub(crate) fn pi_unchecked(&self, level: usize, phase: usize) -> f64 {
        if level <= self.h {
            self.x_rows[level][phase]
        } else {
            self.x_rows[self.h][phase] * self.rho_u.powi((level - self.h) as i32)
        }
    }

    /// `P(N_u = i)`.
    pub fn level_marginal(&self, level: usize) -> f64 {
        if level <= self.h {
            self.x_rows[level].sum()
        } else {
            self.x_rows[self.h].sum() * self.rho_u.powi((level - self.h) as i32)
        }
    }

    pub fn tail_sums(&self) -> TailSums {
        let (level_count, level_index) = geometric_tail(self.rho_u, self.h);
        let top = &self.x_rows[self.h];
        let top_mass = top.sum();
        let phase_moment: f64 = top.iter().enumerate().map(|(j, p)| j as f64 * p).sum();
        TailSums {
            level_count,
            level_index,
            mass: top_mass * level_count,
            urgent_moment: top_mass * level_index,
            nonurgent_moment: phase_moment * level_count,
        }
    }

    /// `sum_{i<h} x_i e + x_h e / (1 - rho)`.
    pub fn total_mass(&self) -> f64 {
        self.x_rows[..self.h].iter().map(|r| r.sum()).sum::<f64>() + self.tail_sums().mass
    }

    /// Largest absolute entry of the balance rows at levels `0..=h`, using
    /// `x_{h+1} = rho x_h` at the top.
    pub fn balance_residual(&self, blocks: &QbdBlocks) -> f64 {
        let mut worst = 0.0f64;
        for level in 0..=self.h {
            let mut row = &self.x_rows[level] * blocks.a(level);
            if level > 0 {
                row += &self.x_rows[level - 1] * blocks.lambda_u;
            }
            let above = if level < self.h {
                self.x_rows[level + 1].clone()
            } else {
                &self.x_rows[self.h] * self.rho_u
            };
            row += above * blocks.down[(level + 1).min(self.h)];
            worst = worst.max(row.amax());
        }
        worst
    }

    /// Writes `x_rows` as long-format CSV (`level,phase,probability`).
    pub fn dump_csv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        writeln!(out, "level,phase,probability").expect("write to Vec");
        for (level, row) in self.x_rows.iter().enumerate() {
            for (phase, p) in row.iter().enumerate() {
                writeln!(out, "{level},{phase},{p:?}").expect("write to Vec");
            }
        }
        crate::report::write_atomic(path, &out)
    }
}

/// Stationary distribution by linear level reduction. Working down from the
/// repeating level, `x_{i+1} = x_i R_i` with `R_{h-1} = -B (A_h + rho_u C_h)^{-1}` and
/// `R_{i-1} = -B (A_i + R_i C_{i+1})^{-1}`; then `x_0 (A_0 + R_0 C_1) = 0` is solved with
/// the normalization row. Every `R_i` is nonnegative, so nothing cancels.
pub fn solve(blocks: &QbdBlocks) -> Result<StationaryDistribution> {
    let k = blocks.k;
    let h = blocks.h;
    if blocks.lambda_u == 0.0 {
        return solve_without_urgent(blocks);
    }
    if !(blocks.rho_u < 1.0) {
        return Err(Error::Unstable { mode: "nested", intensity: blocks.rho_u });
    }
    let lambda = blocks.lambda_u;

    // r[i] = R_i for i in 0..h
    let mut r: Vec<DMatrix<f64>> = vec![DMatrix::zeros(0, 0); h];
    let mut pivot = blocks.a(h) + DMatrix::identity(k, k) * (blocks.rho_u * blocks.down[h]);
    for level in (0..h).rev() {
        r[level] = invert(&pivot)? * -lambda;
        if level > 0 {
            pivot = blocks.a(level) + &r[level] * blocks.down[level + 1];
        }
    }
    let boundary = blocks.a(0) + &r[0] * blocks.down[1];

    // x_i = x_0 P_i with P_0 = I, P_{i+1} = P_i R_i
    let mut prefix: Vec<DMatrix<f64>> = Vec::with_capacity(h + 1);
    prefix.push(DMatrix::identity(k, k));
    for level in 0..h {
        let next = &prefix[level] * &r[level];
        prefix.push(next);
    }
    let mut normalization = &prefix[h] / (1.0 - blocks.rho_u);
    for p in &prefix[..h] {
        normalization += p;
    }
    let x0 = solve_with_normalization(boundary, &normalization.column_sum())?;
    let x_rows: Vec<RowDVector<f64>> = prefix.iter().map(|p| &x0 * p).collect();

    let mut dist = StationaryDistribution { x_rows, rho_u: blocks.rho_u, h, k };
    clamp_round_off(&mut dist)?;
    Ok(dist)
}

fn invert(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone().lu().try_inverse().ok_or_else(|| Error::Numerical("level block is singular".into()))
}

/// The textbook backward recursion `U_h = I`, `U_{h-1} = -A_h / lambda_u - I`,
/// `U_{i-1} = -(U_i A_i + mu_u min(i+1, c) U_{i+1}) / lambda_u`, with `x_i = x_h U_i` and
/// `x_h (U_0 A_0 + U_1 C_1) = 0`. The `U_i` grow geometrically in `h`, so this loses
/// accuracy on long boundaries; kept as a cross-check of [`solve`].
pub fn solve_backward(blocks: &QbdBlocks) -> Result<StationaryDistribution> {
    let k = blocks.k;
    let h = blocks.h;
    if blocks.lambda_u == 0.0 {
        return solve_without_urgent(blocks);
    }
    if !(blocks.rho_u < 1.0) {
        return Err(Error::Unstable { mode: "nested", intensity: blocks.rho_u });
    }
    let lambda = blocks.lambda_u;
    let identity = DMatrix::<f64>::identity(k, k);

    let mut u: Vec<DMatrix<f64>> = vec![DMatrix::zeros(0, 0); h + 1];
    u[h] = identity.clone();
    u[h - 1] = -(blocks.a(h) / lambda) - &identity;
    for level in (1..h).rev() {
        let next = &u[level] * blocks.a(level) + &u[level + 1] * blocks.down[level + 1];
        u[level - 1] = next / -lambda;
    }
    let boundary = &u[0] * blocks.a(0) + &u[1] * blocks.down[1];

    let mut normalization: DMatrix<f64> = identity / (1.0 - blocks.rho_u);
    for ui in &u[..h] {
        normalization += ui;
    }
    let top = solve_with_normalization(boundary, &normalization.column_sum())?;
    let x_rows: Vec<RowDVector<f64>> = u.iter().map(|ui| &top * ui).collect();

    let mut dist = StationaryDistribution { x_rows, rho_u: blocks.rho_u, h, k };
    clamp_round_off(&mut dist)?;
    Ok(dist)
}

/// Solves `x M = 0` with `x n = 1` by overwriting the last column of `M` with `n`.
fn solve_with_normalization(mut m: DMatrix<f64>, norm_col: &DVector<f64>) -> Result<RowDVector<f64>> {
    let k = m.nrows();
    m.set_column(k - 1, norm_col);
    // x M' = e_k  <=>  M'^T x^T = e_k
    let system = m.transpose();
    let lu = system.clone().lu();
    let diag = lu.u().diagonal();
    let max_pivot = diag.amax();
    let min_pivot = diag.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    let condition = if min_pivot > 0.0 { max_pivot / min_pivot } else { f64::INFINITY };
    let mut rhs = DVector::zeros(k);
    rhs[k - 1] = 1.0;
    match lu.solve(&rhs) {
        Some(x) if min_pivot > 0.0 && condition.is_finite() && condition < 1e300 => {
            if x.iter().all(|v| v.is_finite()) {
                Ok(x.transpose())
            } else {
                Err(Error::SingularBoundary { pivot: min_pivot, condition })
            }
        }
        _ => Err(Error::SingularBoundary { pivot: min_pivot, condition }),
    }
}

/// With no urgent traffic the chain lives on level 0 and `x_0 A_0 = 0`.
fn solve_without_urgent(blocks: &QbdBlocks) -> Result<StationaryDistribution> {
    let k = blocks.k;
    let ones = DVector::from_element(k, 1.0);
    let x0 = solve_with_normalization(blocks.a(0).clone(), &ones)?;
    let mut x_rows = vec![RowDVector::zeros(k); blocks.h + 1];
    x_rows[0] = x0;
    let mut dist = StationaryDistribution {
        x_rows,
        rho_u: 0.0,
        h: blocks.h,
        k,
    };
    clamp_round_off(&mut dist)?;
    Ok(dist)
}

fn clamp_round_off(dist: &mut StationaryDistribution) -> Result<()> {
    let mut clamped = false;
    for (level, row) in dist.x_rows.iter_mut().enumerate() {
        for (phase, v) in row.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::Numerical(format!("non-finite probability at ({level}, {phase})")));
            }
            if *v < 0.0 {
                if *v <= -NEGATIVE_TOLERANCE {
                    return Err(Error::NegativeProbability { level, phase, value: *v });
                }
                *v = 0.0;
                clamped = true;
            }
        }
    }
    if clamped {
        let mass = dist.total_mass();
        for row in &mut dist.x_rows {
            *row /= mass;
        }
    }
    Ok(())
}

/// Builds and solves in one step.
pub fn solve_params(params: &ModelParams) -> Result<(QbdBlocks, StationaryDistribution)> {
    let blocks = build_blocks(params)?;
    let dist = solve(&blocks)?;
    Ok((blocks, dist))
}

/// Probability-weighted relative error of the urgent level marginals against the exact
/// M/M/c distribution with `c = c_u + c_n`. Levels at or above `h` share the geometric
/// ratio with the exact tail, so their contribution is summed in closed form.
pub fn validate_mmc(dist: &StationaryDistribution, params: &ModelParams) -> Result<f64> {
    const UNDERFLOW_FLOOR: f64 = 1e-300;
    let d = params.derive()?;
    let exact = crate::fixed::erlang_mmc(d.lambda_u / params.mu_u, d.c_total)?;
    let mut err = 0.0;
    for level in 0..dist.h {
        let pe = exact.prob(level);
        if pe > UNDERFLOW_FLOOR {
            err += (dist.level_marginal(level) - pe).abs();
        }
    }
    let pe_h = exact.prob(dist.h);
    if pe_h > UNDERFLOW_FLOOR {
        let rel_h = (dist.level_marginal(dist.h) - pe_h).abs() / pe_h;
        err += rel_h * exact.tail_from(dist.h);
    }
    Ok(err)
}
