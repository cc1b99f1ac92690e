//! Eigenvalues near a shift and over energy windows.
//!
//! Every solve goes through [`SweepFactorization`]. A single level comes from
//! shifted inverse iteration; windows are covered by block inverse iteration
//! at a sequence of shifts, each of which certifies a disc around itself in
//! which all eigenvalues have been found.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::BlockBandedHamiltonian;
use crate::linalg::{dot, general_eigen, general_eigenvalues, norm, orthonormalize_against, CMatrix, C64, ZERO};
use crate::par::{self, Execution};
use crate::sweep::SweepFactorization;

/// Refuse windows holding more levels than this.
pub const MAX_LEVELS: usize = 10_000;

/// Largest operator dimension accepted by the dense oracle.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// relative eigenvalue change between iterations
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// block size of the subspace iteration in window scans
    pub block: usize,
    /// shifts processed per round of a window scan
    pub batch: usize,
    pub execution: Execution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 300,
            seed: 0x5eed,
            block: 24,
            batch: 4,
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub energy: f64,
    /// imaginary part of the Ritz value; zero up to rounding
    pub imag: f64,
    /// Euclidean-normalized vector, radial-major
    pub vector: Vec<C64>,
    /// `‖Hv - Ev‖` for the unit vector
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Residual below which a Ritz pair counts as converged.
pub fn residual_tolerance(h: &BlockBandedHamiltonian, energy: f64, tol: f64) -> f64 {
    (10.0 * tol * energy.abs().max(1.0)).max(64.0 * f64::EPSILON * h.norm_estimate())
}

fn residual(h: &BlockBandedHamiltonian, v: &[C64], e: C64) -> f64 {
    let hv = h.matvec(v);
    hv.iter()
        .zip(v)
        .map(|(a, b)| (a - b * e).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

/// Factorizes `H - σ`, nudging the shift off an eigenvalue if needed.
fn factor_near(h: &BlockBandedHamiltonian, shift: f64) -> Result<SweepFactorization> {
    let step = 1e-9 * shift.abs().max(1.0);
    let mut last = None;
    for k in 0..6 {
        let s = shift + step * (k as f64) * if k % 2 == 0 { 1.0 } else { -1.0 };
        match SweepFactorization::new(h, s) {
            Ok(f) => return Ok(f),
            Err(e @ Error::NearSingular { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or(Error::NearSingular { shift, block: 0 }))
}

/// Inverse iteration with `(H - σ)⁻¹`, orthogonalizing against `deflate`
/// (orthonormal vectors of levels already found).
pub fn shifted_inverse_iteration(
    h: &BlockBandedHamiltonian,
    shift: f64,
    deflate: &[Vec<C64>],
    opts: &SolverOptions,
) -> Result<Eigenpair> {
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive (got {})", opts.tol)));
    }
    let f = factor_near(h, shift)?;
    let n = h.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v = random_vector(&mut rng, n);
    orthonormalize_against(&mut v, deflate);
    let mut theta = C64::new(f64::NAN, 0.0);
    let mut res = f64::INFINITY;
    for it in 1..=opts.max_iter {
        f.solve_in_place(&mut v);
        if orthonormalize_against(&mut v, deflate) == 0.0 {
            v = random_vector(&mut rng, n);
            orthonormalize_against(&mut v, deflate);
        }
        let hv = h.matvec(&v);
        let next = dot(&v, &hv);
        res = hv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b * next).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let change = (next - theta).norm();
        theta = next;
        if change < opts.tol * theta.re.abs().max(1.0) && res < residual_tolerance(h, theta.re, opts.tol) {
            return Ok(Eigenpair {
                energy: theta.re,
                imag: theta.im,
                vector: v,
                residual: res,
                converged: true,
                iterations: it,
            });
        }
    }
    Ok(Eigenpair {
        energy: theta.re,
        imag: theta.im,
        vector: v,
        residual: res,
        converged: false,
        iterations: opts.max_iter,
    })
}

/// Result of block inverse iteration at one shift.
#[derive(Debug, Clone)]
pub struct ShiftResult {
    pub shift: f64,
    /// all eigenvalues with `|E - shift| ≤ radius` are in `pairs`
    pub radius: f64,
    pub pairs: Vec<Eigenpair>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftRecord {
    pub shift: f64,
    pub radius: f64,
    pub found: usize,
    pub iterations: usize,
}

/// Block inverse iteration with Rayleigh-Ritz extraction around `shift`.
pub fn block_inverse_iteration(
    h: &BlockBandedHamiltonian,
    shift: f64,
    opts: &SolverOptions,
    seed: u64,
) -> Result<ShiftResult> {
    let n = h.dim();
    let p = opts.block.clamp(1, n);
    let f = factor_near(h, shift)?;
    let sigma = f.shift();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(p);
    let mut prev: Vec<C64> = Vec::new();
    let mut ritz: Vec<(C64, Vec<C64>, f64)> = Vec::new();
    let mut radius = 0.0;
    let mut it = 0;
    let mut current: Vec<Vec<C64>> = (0..p).map(|_| random_vector(&mut rng, n)).collect();
    while it < opts.max_iter {
        it += 1;
        basis.clear();
        for mut v in current.drain(..) {
            f.solve_in_place(&mut v);
            let mut left = orthonormalize_against(&mut v, &basis);
            while left == 0.0 || !left.is_finite() {
                v = random_vector(&mut rng, n);
                left = orthonormalize_against(&mut v, &basis);
            }
            basis.push(v);
        }
        let hq: Vec<Vec<C64>> = basis.iter().map(|q| h.matvec(q)).collect();
        let g = CMatrix::from_fn(p, p, |i, j| dot(&basis[i], &hq[j]));
        let (vals, y) = general_eigen(&g)?;
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| (vals[a] - sigma).norm().total_cmp(&(vals[b] - sigma).norm()));
        ritz.clear();
        for &k in &order {
            let mut u = vec![ZERO; n];
            let mut hu = vec![ZERO; n];
            for (i, (q, hqi)) in basis.iter().zip(&hq).enumerate() {
                let c = y[(i, k)];
                for ((ui, hui), (qv, hv)) in u.iter_mut().zip(hu.iter_mut()).zip(q.iter().zip(hqi)) {
                    *ui += qv * c;
                    *hui += hv * c;
                }
            }
            let nu = norm(&u);
            let r = hu
                .iter()
                .zip(&u)
                .map(|(a, b)| (a - b * vals[k]).norm_sqr())
                .sum::<f64>()
                .sqrt()
                / nu;
            for x in u.iter_mut() {
                *x /= nu;
            }
            ritz.push((vals[k], u, r));
        }
        // leading converged run, ordered by distance from the shift
        let mut count = 0;
        for (i, (v, _, r)) in ritz.iter().enumerate() {
            let stable = prev
                .get(i)
                .map(|old| (old - v).norm() < opts.tol * v.re.abs().max(1.0))
                .unwrap_or(false);
            if stable && *r < residual_tolerance(h, v.re, opts.tol) {
                count += 1;
            } else {
                break;
            }
        }
        prev = ritz.iter().map(|(v, _, _)| *v).collect();
        // the farthest Ritz value is never trusted: its neighbor outside the
        // subspace can be arbitrarily close
        let usable = count.min(p.saturating_sub(1));
        radius = if usable == 0 {
            0.0
        } else {
            (ritz[usable - 1].0 - sigma).norm()
        };
        if usable >= (p / 3).max(1) || usable == n {
            break;
        }
        current = ritz.iter().map(|(_, u, _)| u.clone()).collect();
    }
    let trusted = ritz
        .iter()
        .filter(|(v, _, r)| (v - sigma).norm() <= radius && *r < residual_tolerance(h, v.re, opts.tol))
        .map(|(v, u, r)| Eigenpair {
            energy: v.re,
            imag: v.im,
            vector: u.clone(),
            residual: *r,
            converged: true,
            iterations: it,
        })
        .collect();
    // a full-dimension basis sees everything
    if p == n {
        radius = f64::INFINITY;
    }
    Ok(ShiftResult {
        shift: sigma,
        radius,
        pairs: trusted,
        iterations: it,
    })
}

/// One distinct level of a [`Spectrum`].
#[derive(Debug, Clone)]
pub struct Level {
    pub energy: f64,
    pub imag: f64,
    pub residual: f64,
    pub converged: bool,
    pub multiplicity: usize,
    /// orthonormal basis of the eigenspace, one vector per multiplicity
    pub vectors: Vec<Vec<C64>>,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub window: (f64, f64),
    pub levels: Vec<Level>,
    pub dedup_tol: f64,
    pub shifts: Vec<ShiftRecord>,
    /// false when a level cap cut the scan short of the window top
    pub complete_window: bool,
}

impl Spectrum {
    /// Energies with degenerate levels repeated by multiplicity.
    pub fn energies(&self) -> Vec<f64> {
        self.levels
            .iter()
            .flat_map(|l| std::iter::repeat_n(l.energy, l.multiplicity))
            .collect()
    }

    pub fn distinct_energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(|l| l.multiplicity).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// Which part of a window to resolve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRequest {
    pub lo: f64,
    pub hi: f64,
    /// stop once the lowest `count` levels of the window are certified
    pub count: Option<usize>,
}

impl ScanRequest {
    pub fn window(lo: f64, hi: f64) -> Self {
        Self { lo, hi, count: None }
    }

    pub fn lowest(lo: f64, hi: f64, count: usize) -> Self {
        Self {
            lo,
            hi,
            count: Some(count),
        }
    }
}

pub fn dedup_tolerance(e: f64) -> f64 {
    1e-9 * e.abs().max(1.0)
}

/// Finds every eigenvalue in `[lo, hi]` (or the lowest `count` of them).
pub fn spectrum_scan(h: &BlockBandedHamiltonian, req: ScanRequest, opts: &SolverOptions) -> Result<Spectrum> {
    let (lo, hi) = (req.lo, req.hi);
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Usage(format!("empty or invalid window [{lo}, {hi}]")));
    }
    let mut covered: Vec<(f64, f64)> = Vec::new();
    let mut found: Vec<Eigenpair> = Vec::new();
    let mut records = Vec::new();
    let mut radius_guess: Option<f64> = None;
    let mut shift_index: u64 = 0;
    let batch = opts.batch.max(1);
    loop {
        let gaps = uncovered(&covered, lo, hi);
        if gaps.is_empty() {
            break;
        }
        if let Some(c) = req.count {
            let edge = gaps[0].0;
            // distinct energies only: overlapping shifts report the same level
            let mut below: Vec<f64> = found.iter().map(|p| p.energy).filter(|&e| e < edge).collect();
            below.sort_by(f64::total_cmp);
            below.dedup_by(|b, a| (*b - *a).abs() <= dedup_tolerance(*a));
            if below.len() > c {
                break;
            }
        }
        let shifts = match radius_guess {
            None => vec![lo],
            Some(r) => place_shifts(&gaps, r, batch),
        };
        let jobs: Vec<(f64, u64)> = shifts
            .iter()
            .enumerate()
            .map(|(k, &s)| (s, opts.seed.wrapping_add(shift_index + k as u64)))
            .collect();
        shift_index += jobs.len() as u64;
        let results = par::map(opts.execution, &jobs, |&(s, seed)| {
            block_inverse_iteration(h, s, opts, seed)
        });
        let mut frontier_radius = None;
        for r in results {
            let r = r?;
            records.push(ShiftRecord {
                shift: r.shift,
                radius: r.radius,
                found: r.pairs.len(),
                iterations: r.iterations,
            });
            if r.radius > 0.0 {
                covered.push((r.shift - r.radius, r.shift + r.radius));
                // the lowest productive shift sets the step for the next round
                frontier_radius.get_or_insert(r.radius);
            }
            found.extend(r.pairs.into_iter().filter(|p| p.energy >= lo && p.energy <= hi));
        }
        merge_intervals(&mut covered);
        let next = match (frontier_radius, radius_guess) {
            (Some(r), _) => r,
            (None, Some(g)) => g / 4.0,
            (None, None) => (hi - lo) / 64.0,
        };
        if next < 1e-12 * (hi - lo).max(1.0) {
            return Err(Error::NoConvergence(format!(
                "window scan stalled near {:.10} after {} shifts",
                gaps[0].0,
                records.len()
            )));
        }
        radius_guess = Some(next);
        if found.len() > 4 * MAX_LEVELS {
            return Err(Error::Resource(format!(
                "window [{lo}, {hi}] holds more than {MAX_LEVELS} levels"
            )));
        }
    }
    let mut levels = merge_levels(found);
    if levels.iter().map(|l| l.multiplicity).sum::<usize>() > MAX_LEVELS {
        return Err(Error::Resource(format!(
            "window [{lo}, {hi}] holds more than {MAX_LEVELS} levels"
        )));
    }
    let mut complete = true;
    if let Some(c) = req.count {
        let mut total = 0;
        let mut keep = 0;
        for l in &levels {
            if total >= c {
                break;
            }
            total += l.multiplicity;
            keep += 1;
        }
        complete = keep == levels.len();
        levels.truncate(keep);
    }
    Ok(Spectrum {
        window: (lo, hi),
        levels,
        dedup_tol: 1e-9,
        shifts: records,
        complete_window: complete,
    })
}

fn uncovered(covered: &[(f64, f64)], lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut gaps = Vec::new();
    let mut cursor = lo;
    for &(a, b) in covered {
        if b < cursor {
            continue;
        }
        if a > cursor {
            gaps.push((cursor, a.min(hi)));
        }
        cursor = cursor.max(b);
        if cursor >= hi {
            break;
        }
    }
    if cursor < hi {
        gaps.push((cursor, hi));
    }
    gaps.retain(|(a, b)| b > a);
    gaps
}

fn merge_intervals(v: &mut Vec<(f64, f64)>) {
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for &(a, b) in v.iter() {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    *v = out;
}

/// Shifts for the lowest gaps, stepping by the expected certified radius.
fn place_shifts(gaps: &[(f64, f64)], radius: f64, batch: usize) -> Vec<f64> {
    let mut shifts = Vec::with_capacity(batch);
    for &(a, b) in gaps {
        let mut cursor = a;
        while cursor < b && shifts.len() < batch {
            if b - cursor <= 2.0 * radius {
                shifts.push(0.5 * (cursor + b));
                cursor = b;
            } else {
                shifts.push(cursor + radius);
                cursor += 2.0 * radius;
            }
        }
        if shifts.len() == batch {
            break;
        }
    }
    shifts
}

/// Groups pairs by energy and extracts an orthonormal eigenspace basis.
fn merge_levels(mut pairs: Vec<Eigenpair>) -> Vec<Level> {
    pairs.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    let mut levels: Vec<Level> = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i + 1;
        while j < pairs.len() && pairs[j].energy - pairs[j - 1].energy <= dedup_tolerance(pairs[j].energy) {
            j += 1;
        }
        let group = &pairs[i..j];
        let mut basis: Vec<Vec<C64>> = Vec::new();
        for p in group {
            let mut v = p.vector.clone();
            if orthonormalize_against(&mut v, &basis) > 0.5 {
                basis.push(v);
            }
        }
        let best = group
            .iter()
            .min_by(|a, b| a.residual.total_cmp(&b.residual))
            .expect("non-empty group");
        levels.push(Level {
            energy: best.energy,
            imag: best.imag,
            residual: best.residual,
            converged: group.iter().all(|p| p.converged),
            multiplicity: basis.len().max(1),
            vectors: basis,
        });
        i = j;
    }
    levels
}

/// All eigenvalues of the dense matrix, sorted by real part.
pub fn dense_reference_diagonalization(h: &BlockBandedHamiltonian) -> Result<Vec<C64>> {
    if h.dim() > DENSE_LIMIT {
        return Err(Error::Resource(format!(
            "dense diagonalization limited to dimension {DENSE_LIMIT} (got {})",
            h.dim()
        )));
    }
    general_eigenvalues(&h.to_dense())
}

/// Lowest energy any level can have: the field-free ground state bounds the
/// spectrum from below for every field and tilt.
pub fn ground_state_bound(cfg: &crate::model::SystemConfig) -> f64 {
    -2.0 * cfg.reduced_mass() / (cfg.epsilon * cfg.epsilon)
}

/// Residual check used by tests and callers that rebuild vectors.
pub fn eigen_residual(h: &BlockBandedHamiltonian, v: &[C64], energy: f64) -> f64 {
    residual(h, v, C64::new(energy, 0.0)) / norm(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::AngularScheme;
    use crate::model::PresetSystem;
    use crate::radial::{RadialScheme, StencilBasis};

    fn diag2() -> BlockBandedHamiltonian {
        let d = vec![
            CMatrix::from_fn(1, 1, |_, _| C64::new(1.0, 0.0)),
            CMatrix::from_fn(1, 1, |_, _| C64::new(3.0, 0.0)),
        ];
        BlockBandedHamiltonian::from_parts(d, vec![vec![], vec![]]).unwrap()
    }

    #[test]
    fn inverse_iteration_on_diagonal() {
        let p = shifted_inverse_iteration(&diag2(), 0.9, &[], &SolverOptions::default()).unwrap();
        assert!(p.converged);
        assert!((p.energy - 1.0).abs() < 1e-12);
        let p = shifted_inverse_iteration(&diag2(), 1.0, &[], &SolverOptions::default()).unwrap();
        assert!((p.energy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deflation_finds_next_level() {
        let h = diag2();
        let o = SolverOptions::default();
        let first = shifted_inverse_iteration(&h, 0.9, &[], &o).unwrap();
        let second = shifted_inverse_iteration(&h, 0.9, &[first.vector], &o).unwrap();
        assert!((second.energy - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dense_oracle_trivial_cases() {
        let one =
            BlockBandedHamiltonian::from_parts(vec![CMatrix::from_fn(1, 1, |_, _| C64::new(-0.7, 0.0))], vec![vec![]])
                .unwrap();
        assert_eq!(
            dense_reference_diagonalization(&one).unwrap(),
            vec![C64::new(-0.7, 0.0)]
        );
        let ang = AngularScheme::new(3);
        let h0 = BlockBandedHamiltonian::from_parts(vec![ang.h0().clone()], vec![vec![]]).unwrap();
        let e: Vec<f64> = dense_reference_diagonalization(&h0)
            .unwrap()
            .iter()
            .map(|z| z.re)
            .collect();
        let want = [-9.0, -9.0, -4.0, -4.0, -1.0, -1.0, 0.0];
        for (a, b) in e.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_guard() {
        let cfg = PresetSystem::Hydrogen2D.config(0.5, 0.3).unwrap();
        let h = BlockBandedHamiltonian::assemble(
            &cfg,
            &AngularScheme::new(20),
            &RadialScheme::new(60, 20.0, StencilBasis::SqrtRho).unwrap(),
        )
        .unwrap();
        assert!(matches!(dense_reference_diagonalization(&h), Err(Error::Resource(_))));
    }

    #[test]
    fn interval_bookkeeping() {
        let mut v = vec![(2.0, 3.0), (0.0, 1.0), (0.5, 1.5)];
        merge_intervals(&mut v);
        assert_eq!(v, vec![(0.0, 1.5), (2.0, 3.0)]);
        assert_eq!(uncovered(&v, -1.0, 4.0), vec![(-1.0, 0.0), (1.5, 2.0), (3.0, 4.0)]);
        assert!(uncovered(&[(-5.0, 5.0)], 0.0, 1.0).is_empty());
        let s = place_shifts(&[(0.0, 10.0)], 1.0, 3);
        assert_eq!(s, vec![1.0, 3.0, 5.0]);
    }
}
