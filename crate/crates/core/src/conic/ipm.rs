//! Infeasible-start primal-dual path following with the Nesterov-Todd search
//! direction and Mehrotra predictor-corrector steps.
//!
//! Solves `max b'y  s.t.  Z = C - A*(y) >= 0,  E y = f` together with its dual
//! `min <C, X> + f'l  s.t.  A(X) + E'l = b,  X >= 0`.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::compile::{Compiled, PsdBlock};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct IpmSettings {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Converged,
    /// Stopped early but within a loose tolerance.
    Near,
    Infeasible,
    Unbounded,
    Failed,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmResult {
    pub outcome: Outcome,
    pub y: DVector<f64>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub rel_gap: f64,
    pub pinf: f64,
    pub dinf: f64,
    pub iterations: usize,
}

#[derive(Clone)]
struct Iterate {
    x: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
    xl: DVector<f64>,
    zl: DVector<f64>,
    y: DVector<f64>,
    lam: DVector<f64>,
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dz: Vec<DMatrix<f64>>,
    /// `dx`, `dz` in the scaled frame.
    dxs: Vec<DMatrix<f64>>,
    dzs: Vec<DMatrix<f64>>,
    dxl: DVector<f64>,
    dzl: DVector<f64>,
    dy: DVector<f64>,
    dlam: DVector<f64>,
}

/// `W = G G'` with `G' Z G = G^-1 X G^-T = diag(lam)`.
struct Scaling {
    g: DMatrix<f64>,
    w: DMatrix<f64>,
    lam: DVector<f64>,
}

fn nt_scaling(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<Scaling> {
    let lx = x.clone().cholesky()?.unpack();
    let lz = z.clone().cholesky()?.unpack();
    let svd = (lz.transpose() * &lx).svd(false, true);
    let lam = svd.singular_values;
    if lam.iter().any(|s| !(*s > 0.0)) {
        return None;
    }
    let g = lx * svd.v_t?.transpose() * DMatrix::from_diagonal(&lam.map(|s| 1.0 / s.sqrt()));
    let w = &g * g.transpose();
    Some(Scaling { g, w, lam })
}

/// Largest `a` with `diag(lam) + a ds >= 0` (infinite if unconstrained).
fn scaled_step(lam: &DVector<f64>, ds: &DMatrix<f64>) -> f64 {
    let n = lam.len();
    let s = DMatrix::from_fn(n, n, |i, j| ds[(i, j)] / (lam[i] * lam[j]).sqrt());
    let lmin = sym(&s).symmetric_eigenvalues().min();
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// `sum_i y_i A_i` on one block.
fn adjoint(blk: &PsdBlock, y: &DVector<f64>) -> DMatrix<f64> {
    let k = blk.dict.ncols();
    let mut t = DMatrix::zeros(k, k);
    for (local, &i) in blk.vars.iter().enumerate() {
        let yi = y[i];
        if yi == 0.0 {
            continue;
        }
        for &(a, b, c) in &blk.terms[local] {
            t[(a, b)] += yi * c;
        }
    }
    let s = &t + t.transpose();
    &blk.dict * s * blk.dict.transpose()
}

/// `out_i += <A_i, W>` for symmetric `W`.
fn forward(blk: &PsdBlock, w: &DMatrix<f64>, out: &mut DVector<f64>) {
    let kw = blk.dict.transpose() * w * &blk.dict;
    for (local, &i) in blk.vars.iter().enumerate() {
        out[i] += blk.terms[local].iter().map(|&(a, b, c)| 2.0 * c * kw[(a, b)]).sum::<f64>();
    }
}

/// Adds `tr(A_i X A_j W)` over the block's unknowns to the lower triangle of `m`.
fn schur_block(blk: &PsdBlock, x: &DMatrix<f64>, w: &DMatrix<f64>, m: &mut Mat<f64>) {
    let kx = blk.dict.transpose() * x * &blk.dict;
    let kw = blk.dict.transpose() * w * &blk.dict;
    let k = kx.nrows();
    let kx = kx.as_slice();
    let kw = kw.as_slice();
    let at = |s: &[f64], r: usize, c: usize| s[r + c * k];
    let n = blk.vars.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ti = &blk.terms[i];
            (0..=i)
                .map(|j| {
                    let mut acc = 0.0;
                    for &(a, b, ci) in ti {
                        for &(c, d, cj) in &blk.terms[j] {
                            let v = at(kx, b, c) * at(kw, d, a)
                                + at(kx, b, d) * at(kw, c, a)
                                + at(kx, a, c) * at(kw, d, b)
                                + at(kx, a, d) * at(kw, c, b);
                            acc += ci * cj * v;
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    for (i, row) in rows.iter().enumerate() {
        let gi = blk.vars[i];
        for (j, v) in row.iter().enumerate() {
            let gj = blk.vars[j];
            // vars ascend, so gi >= gj
            m[(gi, gj)] += v;
        }
    }
}

fn lp_step(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    x.iter()
        .zip(dx.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

struct Factor {
    chol: faer::linalg::solvers::Llt<f64>,
    /// `M^-1 E'` and the Cholesky factor of `E M^-1 E'` when equalities exist.
    eq: Option<(Mat<f64>, faer::linalg::solvers::Llt<f64>)>,
}

pub(crate) struct Ipm<'a> {
    data: &'a Compiled,
    lp_cols: Vec<(usize, usize, f64)>,
    nu: f64,
    b_norm: f64,
    c_norm: f64,
}

impl<'a> Ipm<'a> {
    pub fn new(data: &'a Compiled) -> Self {
        let nu = (data.psd.iter().map(|b| b.dim).sum::<usize>() + data.lp.len()).max(1) as f64;
        let c_norm = (data.psd.iter().map(|b| b.c.norm_squared()).sum::<f64>()
            + data.lp.c.iter().map(|x| x * x).sum::<f64>())
        .sqrt();
        let mut lp_cols = Vec::new();
        for (k, row) in data.lp.rows.iter().enumerate() {
            for &(i, a) in row {
                lp_cols.push((k, i, a));
            }
        }
        Ipm { data, lp_cols, nu, b_norm: data.b.norm(), c_norm }
    }

    fn initial(&self) -> Iterate {
        let d = self.data;
        let m = d.m;
        let mut a_norm_psd = vec![vec![0.0; 0]; d.psd.len()];
        for (bi, blk) in d.psd.iter().enumerate() {
            a_norm_psd[bi] = blk
                .terms
                .iter()
                .map(|ts| {
                    ts.iter()
                        .map(|&(a, b, c)| 2.0 * c.abs() * blk.dict.column(a).norm() * blk.dict.column(b).norm())
                        .sum::<f64>()
                })
                .collect();
        }
        let mut x = Vec::new();
        let mut z = Vec::new();
        for (bi, blk) in d.psd.iter().enumerate() {
            let n = blk.dim as f64;
            let mut xi = 10f64.max(n.sqrt());
            let mut eta = 10f64.max(n.sqrt()).max(blk.c.norm());
            for (local, &i) in blk.vars.iter().enumerate() {
                let an = a_norm_psd[bi][local];
                xi = xi.max(n * (1.0 + d.b[i].abs()) / (1.0 + an));
                eta = eta.max(an);
            }
            x.push(DMatrix::identity(blk.dim, blk.dim) * xi);
            z.push(DMatrix::identity(blk.dim, blk.dim) * (1.0 + eta));
        }
        let nl = d.lp.len();
        let (mut xi, mut eta) = (10f64.max((nl as f64).sqrt()), 10f64.max((nl as f64).sqrt()));
        let mut col_norm = vec![0.0; m];
        for &(_, i, a) in &self.lp_cols {
            col_norm[i] += a * a;
        }
        for i in 0..m {
            let cn = col_norm[i].sqrt();
            if cn > 0.0 {
                xi = xi.max(nl as f64 * (1.0 + d.b[i].abs()) / (1.0 + cn));
                eta = eta.max(cn);
            }
        }
        let cmax = d.lp.c.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        eta = eta.max(cmax);
        Iterate {
            x,
            z,
            xl: DVector::from_element(nl, xi),
            zl: DVector::from_element(nl, 1.0 + eta),
            y: DVector::zeros(m),
            lam: DVector::zeros(d.eq_rows.len()),
        }
    }

    fn lp_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.data.lp.len());
        for &(k, i, a) in &self.lp_cols {
            out[k] += a * y[i];
        }
        out
    }

    fn lp_forward(&self, w: &DVector<f64>, out: &mut DVector<f64>) {
        for &(k, i, a) in &self.lp_cols {
            out[i] += a * w[k];
        }
    }

    fn eq_apply(&self, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.data.eq_rows.len(),
            self.data.eq_rows.iter().map(|r| r.iter().map(|&(i, a)| a * y[i]).sum::<f64>()),
        )
    }

    fn eq_transpose(&self, l: &DVector<f64>, out: &mut DVector<f64>) {
        for (k, r) in self.data.eq_rows.iter().enumerate() {
            for &(i, a) in r {
                out[i] += a * l[k];
            }
        }
    }

    /// Factor the Schur complement, regularizing on failure.
    fn factor(&self, it: &Iterate, scal: &[Scaling]) -> Option<Factor> {
        let d = self.data;
        let m = d.m;
        let mut mm = Mat::<f64>::zeros(m, m);
        for (bi, blk) in d.psd.iter().enumerate() {
            schur_block(blk, &scal[bi].w, &scal[bi].w, &mut mm);
        }
        for (k, row) in d.lp.rows.iter().enumerate() {
            let s = it.xl[k] / it.zl[k];
            for &(i, a) in row {
                for &(j, b) in row {
                    if j <= i {
                        mm[(i, j)] += s * a * b;
                    }
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                mm[(j, i)] = mm[(i, j)];
            }
        }
        let diag_max = (0..m).map(|i| mm[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
        let mut chol = mm.llt(Side::Lower).ok();
        let mut delta = 1e-14;
        while chol.is_none() && delta <= 1e-4 {
            let mut reg = mm.clone();
            for i in 0..m {
                reg[(i, i)] += delta * diag_max;
            }
            chol = reg.llt(Side::Lower).ok();
            delta *= 100.0;
        }
        let chol = chol?;
        let eq = if d.eq_rows.is_empty() {
            None
        } else {
            let ne = d.eq_rows.len();
            let mut et = Mat::<f64>::zeros(m, ne);
            for (k, r) in d.eq_rows.iter().enumerate() {
                for &(i, a) in r {
                    et[(i, k)] += a;
                }
            }
            let minv_et = chol.solve(&et);
            let s = et.transpose() * &minv_et;
            let sl = s.llt(Side::Lower).ok()?;
            Some((minv_et, sl))
        };
        Some(Factor { chol, eq })
    }

    fn solve_schur(&self, f: &Factor, g: &DVector<f64>, r_e: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let m = g.len();
        let gm = Mat::<f64>::from_fn(m, 1, |i, _| g[i]);
        let minv_g = f.chol.solve(&gm);
        match &f.eq {
            None => (DVector::from_fn(m, |i, _| minv_g[(i, 0)]), DVector::zeros(0)),
            Some((minv_et, sl)) => {
                let ne = r_e.len();
                let mut rhs = Mat::<f64>::zeros(ne, 1);
                for (k, r) in self.data.eq_rows.iter().enumerate() {
                    rhs[(k, 0)] = r.iter().map(|&(i, a)| a * minv_g[(i, 0)]).sum::<f64>() - r_e[k];
                }
                let dl = sl.solve(&rhs);
                let corr = minv_et * &dl;
                (
                    DVector::from_fn(m, |i, _| minv_g[(i, 0)] - corr[(i, 0)]),
                    DVector::from_fn(ne, |k, _| dl[(k, 0)]),
                )
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        it: &Iterate,
        scal: &[Scaling],
        rd: &[DMatrix<f64>],
        rd_l: &DVector<f64>,
        r_p: &DVector<f64>,
        r_e: &DVector<f64>,
        sigma_mu: f64,
        corr: Option<&Direction>,
        f: &Factor,
    ) -> Direction {
        let d = self.data;
        let mut rs = Vec::with_capacity(d.psd.len());
        let mut g = r_p.clone();
        for (bi, blk) in d.psd.iter().enumerate() {
            let sc = &scal[bi];
            let n = blk.dim;
            let mut r = DMatrix::from_fn(n, n, |i, j| if i == j { sigma_mu - sc.lam[i] * sc.lam[i] } else { 0.0 });
            if let Some(c) = corr {
                r -= sym(&(&c.dxs[bi] * &c.dzs[bi]));
            }
            let rsb = DMatrix::from_fn(n, n, |i, j| 2.0 * r[(i, j)] / (sc.lam[i] + sc.lam[j]));
            let hb = &sc.g * &rsb * sc.g.transpose();
            let w = sym(&(&hb - &sc.w * &rd[bi] * &sc.w));
            let mut aw = DVector::zeros(d.m);
            forward(blk, &w, &mut aw);
            g -= aw;
            rs.push(rsb);
        }
        let nl = d.lp.len();
        let mut hl = DVector::zeros(nl);
        let mut wl = DVector::zeros(nl);
        for k in 0..nl {
            let (x, z) = (it.xl[k], it.zl[k]);
            let mut v = sigma_mu / z - x;
            if let Some(c) = corr {
                v -= c.dxl[k] * c.dzl[k] / z;
            }
            hl[k] = v;
            wl[k] = v - x * rd_l[k] / z;
        }
        let mut awl = DVector::zeros(d.m);
        self.lp_forward(&wl, &mut awl);
        g -= awl;

        let (mut dy, mut dlam) = self.solve_schur(f, &g, r_e);
        let rp_norm = r_p.norm();
        let mut refine = 0;
        loop {
            let mut dx = Vec::with_capacity(d.psd.len());
            let mut dz = Vec::with_capacity(d.psd.len());
            let mut dxs = Vec::with_capacity(d.psd.len());
            let mut dzs = Vec::with_capacity(d.psd.len());
            for (bi, blk) in d.psd.iter().enumerate() {
                let g = &scal[bi].g;
                let dzb = &rd[bi] - adjoint(blk, &dy);
                let dzsb = sym(&(g.transpose() * &dzb * g));
                let dxsb = &rs[bi] - &dzsb;
                dx.push(sym(&(g * &dxsb * g.transpose())));
                dz.push(dzb);
                dxs.push(dxsb);
                dzs.push(dzsb);
            }
            let dzl = rd_l - self.lp_adjoint(&dy);
            let dxl = DVector::from_fn(nl, |k, _| hl[k] - it.xl[k] * dzl[k] / it.zl[k]);
            if refine == 2 {
                return Direction { dx, dz, dxs, dzs, dxl, dzl, dy, dlam };
            }
            // correct the Schur solve against the exact operator
            let mut res = r_p.clone();
            let mut adx = DVector::zeros(d.m);
            for (bi, blk) in d.psd.iter().enumerate() {
                forward(blk, &dx[bi], &mut adx);
            }
            self.lp_forward(&dxl, &mut adx);
            self.eq_transpose(&dlam, &mut adx);
            res -= adx;
            let res_e = r_e - self.eq_apply(&dy);
            if res.norm() + res_e.norm() <= 1e-13 * (1.0 + rp_norm) {
                return Direction { dx, dz, dxs, dzs, dxl, dzl, dy, dlam };
            }
            let (ddy, ddl) = self.solve_schur(f, &res, &res_e);
            dy += ddy;
            dlam += ddl;
            refine += 1;
        }
    }

    fn max_steps(&self, it: &Iterate, scal: &[Scaling], dir: &Direction) -> (f64, f64) {
        let mut ap = lp_step(&it.xl, &dir.dxl);
        let mut ad = lp_step(&it.zl, &dir.dzl);
        for (bi, sc) in scal.iter().enumerate() {
            ap = ap.min(scaled_step(&sc.lam, &dir.dxs[bi]));
            ad = ad.min(scaled_step(&sc.lam, &dir.dzs[bi]));
        }
        (ap, ad)
    }

    fn complementarity(x: &[DMatrix<f64>], z: &[DMatrix<f64>], xl: &DVector<f64>, zl: &DVector<f64>) -> f64 {
        x.iter().zip(z).map(|(a, b)| inner(a, b)).sum::<f64>() + xl.dot(zl)
    }

    pub fn run(&self, settings: IpmSettings) -> IpmResult {
        let d = self.data;
        let mut it = self.initial();
        let f_vec = DVector::from_vec(d.eq_rhs.clone());
        let mut best: Option<(f64, IpmResult)> = None;
        let mut stalls = 0;
        let mut mark = (f64::INFINITY, f64::INFINITY, 0);

        for iter in 0..=settings.max_iters {
            let rd: Vec<DMatrix<f64>> = d
                .psd
                .iter()
                .enumerate()
                .map(|(bi, blk)| &blk.c - adjoint(blk, &it.y) - &it.z[bi])
                .collect();
            let rd_l = DVector::from_vec(d.lp.c.clone()) - self.lp_adjoint(&it.y) - &it.zl;
            let mut ax = DVector::zeros(d.m);
            for (bi, blk) in d.psd.iter().enumerate() {
                forward(blk, &it.x[bi], &mut ax);
            }
            self.lp_forward(&it.xl, &mut ax);
            self.eq_transpose(&it.lam, &mut ax);
            let r_p = &d.b - &ax;
            let r_e = &f_vec - self.eq_apply(&it.y);

            let pobj = d.psd.iter().zip(&it.x).map(|(b, x)| inner(&b.c, x)).sum::<f64>()
                + d.lp.c.iter().zip(it.xl.iter()).map(|(c, x)| c * x).sum::<f64>()
                + f_vec.dot(&it.lam);
            let dobj = d.b.dot(&it.y);
            let mu = Self::complementarity(&it.x, &it.z, &it.xl, &it.zl) / self.nu;
            let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
            let pinf = r_p.norm() / (1.0 + self.b_norm);
            let dinf = (rd.iter().map(|r| r.norm_squared()).sum::<f64>() + rd_l.norm_squared() + r_e.norm_squared())
                .sqrt()
                / (1.0 + self.c_norm);

            let snapshot = |outcome| IpmResult {
                outcome,
                y: it.y.clone(),
                primal_obj: pobj,
                dual_obj: dobj,
                rel_gap,
                pinf,
                dinf,
                iterations: iter,
            };
            let score = rel_gap.max(pinf).max(dinf);
            if best.as_ref().map_or(true, |(s, _)| score < *s) {
                best = Some((score, snapshot(Outcome::Failed)));
            }
            // progress means halving the score or a tenfold drop in mu since the last mark
            if score < 0.5 * mark.0 || mu < 0.1 * mark.1 {
                mark = (score, mu, iter);
            }
            if rel_gap <= settings.gap_tol && pinf <= settings.feas_tol && dinf <= settings.feas_tol {
                return snapshot(Outcome::Converged);
            }
            if pobj < 0.0 && (&d.b - &r_p).norm() / (-pobj) < 1e-10 && dinf > settings.feas_tol {
                return snapshot(Outcome::Infeasible);
            }
            if dobj > 0.0 && dobj > 1e12 * (1.0 + pobj.abs().min(dobj)) && pinf > settings.feas_tol {
                return snapshot(Outcome::Unbounded);
            }
            if iter == settings.max_iters || stalls >= 5 || iter >= mark.2 + 10 {
                break;
            }

            let Some(scal) = it.x.iter().zip(&it.z).map(|(x, z)| nt_scaling(x, z)).collect::<Option<Vec<_>>>() else {
                break;
            };
            let Some(fac) = self.factor(&it, &scal) else {
                break;
            };

            let aff = self.direction(&it, &scal, &rd, &rd_l, &r_p, &r_e, 0.0, None, &fac);
            let (ap, ad) = self.max_steps(&it, &scal, &aff);
            let (ap, ad) = (ap.min(1.0), ad.min(1.0));
            let shifted = |ds: &DMatrix<f64>, lam: &DVector<f64>, a: f64| ds * a + DMatrix::from_diagonal(lam);
            let xa: Vec<_> = scal.iter().zip(&aff.dxs).map(|(sc, ds)| shifted(ds, &sc.lam, ap)).collect();
            let za: Vec<_> = scal.iter().zip(&aff.dzs).map(|(sc, ds)| shifted(ds, &sc.lam, ad)).collect();
            let mu_aff = Self::complementarity(&xa, &za, &(&it.xl + &aff.dxl * ap), &(&it.zl + &aff.dzl * ad)) / self.nu;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            let mut dir = self.direction(&it, &scal, &rd, &rd_l, &r_p, &r_e, sigma * mu, Some(&aff), &fac);
            let (mut ap, mut ad) = self.max_steps(&it, &scal, &dir);
            if ap.min(ad) < 0.2 {
                // short corrected step: fall back to a centering direction if it does better
                let alt = self.direction(&it, &scal, &rd, &rd_l, &r_p, &r_e, sigma.max(0.5) * mu, None, &fac);
                let (bp, bd) = self.max_steps(&it, &scal, &alt);
                if bp.min(bd) > ap.min(ad) {
                    dir = alt;
                    (ap, ad) = (bp, bd);
                }
            }
            let tau = 0.9 + 0.09 * ap.min(ad).min(1.0);
            let ap = (tau * ap).min(1.0);
            let ad = (tau * ad).min(1.0);
            if ap < 1e-10 && ad < 1e-10 {
                stalls += 1;
            } else {
                stalls = 0;
            }
            for bi in 0..it.x.len() {
                it.x[bi] += &dir.dx[bi] * ap;
                it.z[bi] += &dir.dz[bi] * ad;
            }
            it.xl += &dir.dxl * ap;
            it.zl += &dir.dzl * ad;
            it.y += &dir.dy * ad;
            it.lam += &dir.dlam * ap;
        }

        let (_, mut res) = best.expect("at least one iterate is scored");
        let loose = settings.gap_tol.max(settings.feas_tol).sqrt().max(1e-5);
        res.outcome = if res.rel_gap <= loose && res.pinf <= loose && res.dinf <= loose {
            Outcome::Near
        } else {
            Outcome::Failed
        };
        res
    }
}
