#include "isabc/conic.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>
#include <ostream>

namespace isabc {

std::size_t ConicProblem::add_psd_block(const std::string& name, std::size_t dim) {
    psd_blocks.push_back({name, dim});
    objective_matrices.emplace_back(dim, dim);
    for (LinearConstraint& row : constraints) row.coeff_matrices.emplace_back(dim, dim);
    return psd_blocks.size() - 1;
}

std::size_t ConicProblem::add_scalar(const std::string& name, std::optional<double> lower,
                                     std::optional<double> upper) {
    scalar_vars.push_back({name, lower, upper});
    objective_scalars.push_back(0.0);
    for (LinearConstraint& row : constraints) row.scalar_coeffs.push_back(0.0);
    return scalar_vars.size() - 1;
}

LinearConstraint ConicProblem::make_row() const {
    LinearConstraint row;
    for (const PsdBlockSpec& blk : psd_blocks)
        row.coeff_matrices.emplace_back(blk.dim, blk.dim);
    row.scalar_coeffs.assign(scalar_vars.size(), 0.0);
    return row;
}

namespace {

double re_tr(const CMatrix& a, const CMatrix& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            s += std::real(a(i, j) * b(j, i));
    return s;
}

// Equality-form SDP over a product of PSD blocks:
// min sum <C_b, X_b> + const  s.t.  sum <A_ib, X_b> = b_i,  X_b >= 0.
struct StdProblem {
    std::vector<std::size_t> dims;
    std::vector<CMatrix> C;
    double obj_const = 0.0;
    std::vector<std::vector<std::pair<std::size_t, CMatrix>>> rows;
    std::vector<double> b;

    std::size_t add_block(std::size_t dim) {
        dims.push_back(dim);
        C.emplace_back(dim, dim);
        return dims.size() - 1;
    }
};

struct IpmState {
    std::vector<CMatrix> X, Z;
    std::vector<double> y;
    bool converged = false;
    std::size_t iterations = 0;
};

// Largest alpha with X + alpha*D >= 0, via lambda_min of L^-1 D L^-H.
double step_to_boundary(const CMatrix& x, const CMatrix& d) {
    const std::size_t n = x.rows();
    if (n == 1) {
        const double xv = std::real(x(0, 0));
        const double dv = std::real(d(0, 0));
        if (dv >= 0.0) return std::numeric_limits<double>::infinity();
        return -xv / dv;
    }
    CMatrix l;
    try {
        l = cholesky_factor(x);
    } catch (const NotPositiveDefinite&) {
        return 0.0;
    }
    // Y = L^-1 D
    CMatrix y = d;
    for (std::size_t col = 0; col < n; ++col)
        for (std::size_t i = 0; i < n; ++i) {
            cplx s = y(i, col);
            for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y(k, col);
            y(i, col) = s / std::real(l(i, i));
        }
    // W = Y L^-H = (L^-1 Y^H)^H
    CMatrix yh = y.adjoint();
    for (std::size_t col = 0; col < n; ++col)
        for (std::size_t i = 0; i < n; ++i) {
            cplx s = yh(i, col);
            for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * yh(k, col);
            yh(i, col) = s / std::real(l(i, i));
        }
    CMatrix w = hermitian_part(yh.adjoint());
    EigenPair e = hermitian_eig(w);
    const double lmin = e.values.back();
    if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
    return -1.0 / lmin;
}

IpmState ipm_solve(const StdProblem& sp, double tol, std::size_t max_iter) {
    const std::size_t nb = sp.dims.size();
    const std::size_t m = sp.rows.size();

    IpmState st;
    st.X.reserve(nb);
    st.Z.reserve(nb);
    double total_n = 0.0;
    for (std::size_t dim : sp.dims) total_n += static_cast<double>(dim);

    double max_b = 0.0;
    for (double v : sp.b) max_b = std::max(max_b, std::abs(v));
    double max_c = 0.0;
    for (const CMatrix& c : sp.C) max_c = std::max(max_c, c.max_abs());
    double max_a = 0.0;
    for (const auto& row : sp.rows)
        for (const auto& [bi, a] : row) max_a = std::max(max_a, a.max_abs());

    const double xi_p = std::max(10.0, max_b);
    const double xi_d = std::max(10.0, std::max(max_c, max_a));
    for (std::size_t bidx = 0; bidx < nb; ++bidx) {
        st.X.push_back(CMatrix::identity(sp.dims[bidx]) * xi_p);
        st.Z.push_back(CMatrix::identity(sp.dims[bidx]) * xi_d);
    }
    st.y.assign(m, 0.0);
    if (m == 0) {
        // Unconstrained cone minimum sits at the origin when C is PSD.
        st.converged = true;
        for (std::size_t bidx = 0; bidx < nb; ++bidx) {
            st.X[bidx] = CMatrix(sp.dims[bidx], sp.dims[bidx]);
            if (hermitian_eig(hermitian_part(sp.C[bidx])).values.back() < -tol)
                st.converged = false;
        }
        return st;
    }

    // Per-block row adjacency for Schur assembly.
    std::vector<std::vector<std::pair<std::size_t, const CMatrix*>>> block_rows(nb);
    for (std::size_t i = 0; i < m; ++i)
        for (const auto& [bidx, a] : sp.rows[i]) block_rows[bidx].push_back({i, &a});

    std::vector<double> rp(m);
    std::vector<CMatrix> rd(nb), zinv(nb);
    double stall_best = std::numeric_limits<double>::infinity();
    int stall_count = 0;

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        st.iterations = iter + 1;

        double pobj = sp.obj_const, dobj = sp.obj_const;
        for (std::size_t bidx = 0; bidx < nb; ++bidx) pobj += inner(sp.C[bidx], st.X[bidx]);
        for (std::size_t i = 0; i < m; ++i) dobj += sp.b[i] * st.y[i];

        // Judge each row against its own activity, not just |b|: rows that mix
        // coefficient scales can cancel down to a value far below the largest
        // term, and an absolute tolerance would wave through violations that
        // are enormous relative to the row's actual magnitude.
        double rel_p = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double lhs = 0.0, act = 0.0;
            for (const auto& [bidx, a] : sp.rows[i]) {
                const double t = inner(a, st.X[bidx]);
                lhs += t;
                act += std::abs(t);
            }
            rp[i] = sp.b[i] - lhs;
            const double r = std::abs(rp[i]) / std::max(1e-6, act + std::abs(sp.b[i]));
            if (r > rel_p && std::getenv("ISABC_IPM_TRACE"))
                std::fprintf(stderr, "      worst row %zu rp=%.3g act=%.3g b=%.3g\n", i, rp[i],
                             act, sp.b[i]);
            rel_p = std::max(rel_p, r);
        }

        double rel_d = 0.0;
        for (std::size_t bidx = 0; bidx < nb; ++bidx) {
            CMatrix r = sp.C[bidx] - st.Z[bidx];
            for (const auto& [i, a] : block_rows[bidx]) r -= (*a) * st.y[i];
            rd[bidx] = hermitian_part(r);
            rel_d = std::max(rel_d, rd[bidx].max_abs());
        }
        rel_d /= 1.0 + std::max(max_c, max_a);

        const double gap =
            std::abs(pobj - dobj) / (1.0 + std::max(std::abs(pobj), std::abs(dobj)));
        if (std::getenv("ISABC_IPM_TRACE"))
            std::fprintf(stderr, "it %3zu rel_p=%.3g rel_d=%.3g gap=%.3g pobj=%.6g dobj=%.6g\n",
                         iter, rel_p, rel_d, gap, pobj, dobj);
        if (rel_p <= tol && rel_d <= tol && gap <= tol) {
            st.converged = true;
            return st;
        }
        // Give up once a nearly-converged iteration hits its numerical floor;
        // the caller decides whether the iterate is close enough to use. Far
        // from convergence long plateaus are normal, so leave those alone.
        const double err = std::max({rel_p, rel_d, gap});
        if (err >= 1e-2 || err < 0.9 * stall_best) {
            stall_best = std::min(stall_best, err);
            stall_count = 0;
        } else if (++stall_count >= 10) {
            return st;
        }

        double mu = 0.0;
        for (std::size_t bidx = 0; bidx < nb; ++bidx) mu += inner(st.X[bidx], st.Z[bidx]);
        mu /= total_n;
        if (!(mu > 0.0) || !std::isfinite(mu)) {
            if (std::getenv("ISABC_IPM_TRACE")) std::fprintf(stderr, "      exit: mu=%.3g\n", mu);
            return st;
        }

        try {
            for (std::size_t bidx = 0; bidx < nb; ++bidx)
                zinv[bidx] = solve_hermitian(st.Z[bidx], CMatrix::identity(sp.dims[bidx]));
        } catch (const NotPositiveDefinite&) {
            if (std::getenv("ISABC_IPM_TRACE")) std::fprintf(stderr, "      exit: Z not pd\n");
            return st;
        }

        // Schur complement M_ij = sum_b Re tr(A_jb Zinv_b A_ib X_b).
        CMatrix schur(m, m);
        for (std::size_t bidx = 0; bidx < nb; ++bidx) {
            const auto& touching = block_rows[bidx];
            for (const auto& [i, ai] : touching) {
                CMatrix p = zinv[bidx] * (*ai) * st.X[bidx];
                for (const auto& [j, aj] : touching)
                    schur(i, j) += re_tr(*aj, p);
            }
        }
        schur = hermitian_part(schur);

        CMatrix schur_l;
        bool factored = false;
        for (double reg = 1e-13; reg <= 1e-4; reg *= 100.0) {
            CMatrix damped = schur;
            for (std::size_t i = 0; i < m; ++i)
                damped(i, i) += reg * (1.0 + std::abs(std::real(schur(i, i))));
            try {
                schur_l = cholesky_factor(damped);
                schur = damped;
                factored = true;
                break;
            } catch (const NotPositiveDefinite&) {
            }
        }
        if (!factored) {
            if (std::getenv("ISABC_IPM_TRACE")) std::fprintf(stderr, "      exit: schur not pd\n");
            return st;
        }
        auto chol_solve = [&](const std::vector<double>& rhs) {
            CMatrix x(m, 1);
            for (std::size_t i = 0; i < m; ++i) x(i, 0) = rhs[i];
            for (std::size_t i = 0; i < m; ++i) {
                cplx s = x(i, 0);
                for (std::size_t k = 0; k < i; ++k) s -= schur_l(i, k) * x(k, 0);
                x(i, 0) = s / std::real(schur_l(i, i));
            }
            for (std::size_t ii = m; ii-- > 0;) {
                cplx s = x(ii, 0);
                for (std::size_t k = ii + 1; k < m; ++k) s -= std::conj(schur_l(k, ii)) * x(k, 0);
                x(ii, 0) = s / std::real(schur_l(ii, ii));
            }
            std::vector<double> out(m);
            for (std::size_t i = 0; i < m; ++i) out[i] = std::real(x(i, 0));
            return out;
        };
        auto schur_solve = [&](const std::vector<double>& rhs) {
            std::vector<double> sol = chol_solve(rhs);
            // Iterative refinement recovers digits lost to the wide dynamic
            // range of the Schur diagonal near convergence.
            for (int pass = 0; pass < 2; ++pass) {
                std::vector<double> res(m);
                for (std::size_t i = 0; i < m; ++i) {
                    double acc = rhs[i];
                    for (std::size_t j = 0; j < m; ++j)
                        acc -= std::real(schur(i, j)) * sol[j];
                    res[i] = acc;
                }
                std::vector<double> corr = chol_solve(res);
                for (std::size_t i = 0; i < m; ++i) sol[i] += corr[i];
            }
            return sol;
        };

        auto direction = [&](const std::vector<CMatrix>& rc) {
            // Solve for (dX, dy, dZ) given the complementarity target rc.
            std::vector<double> h(m);
            std::vector<CMatrix> g(nb);
            for (std::size_t bidx = 0; bidx < nb; ++bidx)
                g[bidx] = (rc[bidx] - st.X[bidx] * rd[bidx]) * zinv[bidx];
            for (std::size_t i = 0; i < m; ++i) {
                h[i] = rp[i];
                for (const auto& [bidx, a] : sp.rows[i]) h[i] -= re_tr(a, g[bidx]);
            }
            std::vector<double> dy = schur_solve(h);
            std::vector<CMatrix> dz(nb), dx(nb);
            for (std::size_t bidx = 0; bidx < nb; ++bidx) {
                CMatrix z = rd[bidx];
                for (const auto& [i, a] : block_rows[bidx]) z -= (*a) * dy[i];
                dz[bidx] = hermitian_part(z);
                dx[bidx] = hermitian_part((rc[bidx] - st.X[bidx] * dz[bidx]) * zinv[bidx]);
            }
            return std::tuple<std::vector<CMatrix>, std::vector<double>, std::vector<CMatrix>>(
                std::move(dx), std::move(dy), std::move(dz));
        };

        // Predictor (affine scaling, rc = -X Z).
        std::vector<CMatrix> rc(nb);
        for (std::size_t bidx = 0; bidx < nb; ++bidx)
            rc[bidx] = (st.X[bidx] * st.Z[bidx]) * -1.0;
        auto [dx_aff, dy_aff, dz_aff] = direction(rc);

        double ap = std::numeric_limits<double>::infinity();
        double ad = std::numeric_limits<double>::infinity();
        for (std::size_t bidx = 0; bidx < nb; ++bidx) {
            ap = std::min(ap, step_to_boundary(st.X[bidx], dx_aff[bidx]));
            ad = std::min(ad, step_to_boundary(st.Z[bidx], dz_aff[bidx]));
        }
        ap = std::min(1.0, 0.98 * ap);
        ad = std::min(1.0, 0.98 * ad);

        double mu_aff = 0.0;
        for (std::size_t bidx = 0; bidx < nb; ++bidx)
            mu_aff += inner(st.X[bidx] + dx_aff[bidx] * ap, st.Z[bidx] + dz_aff[bidx] * ad);
        mu_aff = std::max(mu_aff / total_n, 0.0);
        double sigma = std::pow(mu_aff / mu, 3.0);
        sigma = std::clamp(sigma, 1e-8, 1.0);
        // Letting mu collapse while primal residuals linger blows up Z^-1 and
        // destroys the accuracy of the Schur directions, so tie the barrier
        // target to the remaining infeasibility.
        if (rel_p > tol && sigma * mu < rel_p)
            sigma = std::min(1.0, rel_p / mu);

        // Corrector.
        for (std::size_t bidx = 0; bidx < nb; ++bidx) {
            CMatrix target = CMatrix::identity(sp.dims[bidx]) * (sigma * mu);
            rc[bidx] = target - st.X[bidx] * st.Z[bidx] - dx_aff[bidx] * dz_aff[bidx];
        }
        auto [dx, dy, dz] = direction(rc);

        ap = std::numeric_limits<double>::infinity();
        ad = std::numeric_limits<double>::infinity();
        for (std::size_t bidx = 0; bidx < nb; ++bidx) {
            ap = std::min(ap, step_to_boundary(st.X[bidx], dx[bidx]));
            ad = std::min(ad, step_to_boundary(st.Z[bidx], dz[bidx]));
        }
        ap = std::min(1.0, 0.98 * ap);
        ad = std::min(1.0, 0.98 * ad);
        if (std::getenv("ISABC_IPM_TRACE"))
            std::fprintf(stderr, "      mu=%.3g sigma=%.3g ap=%.3g ad=%.3g\n", mu, sigma, ap, ad);
        if (ap < 1e-10 && ad < 1e-10) return st;

        for (std::size_t bidx = 0; bidx < nb; ++bidx) {
            st.X[bidx] = hermitian_part(st.X[bidx] + dx[bidx] * ap);
            st.Z[bidx] = hermitian_part(st.Z[bidx] + dz[bidx] * ad);
        }
        for (std::size_t i = 0; i < m; ++i) st.y[i] += ad * dy[i];
    }
    return st;
}

// Scalar-variable handling when lowering to equality form.
struct ScalarMap {
    enum class Mode { Shifted, Flipped, Split } mode = Mode::Shifted;
    std::size_t block_a = 0;  // u in x = lb + u, or ub - u, or x = u - v
    std::size_t block_b = 0;  // v for Split
    double offset = 0.0;
};

struct Lowering {
    StdProblem sp;
    std::vector<std::size_t> psd_map;    // declared block -> std block
    std::vector<ScalarMap> scalar_map;
    std::vector<double> row_scale;       // per original constraint
    std::vector<std::size_t> row_map;    // original constraint -> std row
};

Lowering lower(const ConicProblem& p) {
    Lowering lo;
    StdProblem& sp = lo.sp;

    for (const PsdBlockSpec& blk : p.psd_blocks) lo.psd_map.push_back(sp.add_block(blk.dim));

    double obj_scale = 0.0;
    for (const CMatrix& c : p.objective_matrices) obj_scale = std::max(obj_scale, c.max_abs());
    for (double c : p.objective_scalars) obj_scale = std::max(obj_scale, std::abs(c));
    if (obj_scale <= 0.0) obj_scale = 1.0;

    for (std::size_t bidx = 0; bidx < p.psd_blocks.size(); ++bidx)
        sp.C[lo.psd_map[bidx]] = hermitian_part(p.objective_matrices[bidx]) * (1.0 / obj_scale);

    for (std::size_t s = 0; s < p.scalar_vars.size(); ++s) {
        const ScalarSpec& sv = p.scalar_vars[s];
        const double c = p.objective_scalars[s] / obj_scale;
        ScalarMap sm;
        if (sv.lower.has_value()) {
            sm.mode = ScalarMap::Mode::Shifted;
            sm.offset = *sv.lower;
            sm.block_a = sp.add_block(1);
            sp.C[sm.block_a](0, 0) = c;
            sp.obj_const += c * sm.offset;
        } else if (sv.upper.has_value()) {
            sm.mode = ScalarMap::Mode::Flipped;
            sm.offset = *sv.upper;
            sm.block_a = sp.add_block(1);
            sp.C[sm.block_a](0, 0) = -c;
            sp.obj_const += c * sm.offset;
        } else {
            sm.mode = ScalarMap::Mode::Split;
            sm.block_a = sp.add_block(1);
            sm.block_b = sp.add_block(1);
            // Tiny pull keeps the split interior-friendly.
            const double eps = 1e-10 * (1.0 + std::abs(c));
            sp.C[sm.block_a](0, 0) = c + eps;
            sp.C[sm.block_b](0, 0) = -c + eps;
        }
        lo.scalar_map.push_back(sm);
    }

    auto emit_row = [&](const std::vector<std::pair<std::size_t, CMatrix>>& terms, Sense sense,
                        double rhs) {
        std::vector<std::pair<std::size_t, CMatrix>> row = terms;
        if (sense != Sense::EQ) {
            std::size_t slack = sp.add_block(1);
            CMatrix one(1, 1);
            one(0, 0) = sense == Sense::LE ? 1.0 : -1.0;
            row.push_back({slack, one});
        }
        sp.rows.push_back(std::move(row));
        sp.b.push_back(rhs);
        return sp.rows.size() - 1;
    };

    for (const LinearConstraint& con : p.constraints) {
        double scale = 0.0;
        for (std::size_t bidx = 0; bidx < p.psd_blocks.size(); ++bidx)
            scale = std::max(scale, con.coeff_matrices[bidx].max_abs());
        for (double sc : con.scalar_coeffs) scale = std::max(scale, std::abs(sc));
        // Only renormalize rows whose coefficients are wildly out of range;
        // callers that pre-balance their rows know the right scale better
        // than a max-coefficient heuristic does.
        if (scale <= 0.0 || (scale > 1e-6 && scale < 1e6)) scale = 1.0;
        lo.row_scale.push_back(scale);
        const double inv = 1.0 / scale;

        double rhs = con.rhs * inv;
        std::vector<std::pair<std::size_t, CMatrix>> terms;
        for (std::size_t bidx = 0; bidx < p.psd_blocks.size(); ++bidx) {
            const CMatrix& a = con.coeff_matrices[bidx];
            if (a.empty() || a.max_abs() == 0.0) continue;
            terms.push_back({lo.psd_map[bidx], hermitian_part(a) * inv});
        }
        for (std::size_t s = 0; s < p.scalar_vars.size(); ++s) {
            const double sc = con.scalar_coeffs[s] * inv;
            if (sc == 0.0) continue;
            const ScalarMap& sm = lo.scalar_map[s];
            CMatrix one(1, 1);
            switch (sm.mode) {
                case ScalarMap::Mode::Shifted:
                    one(0, 0) = sc;
                    terms.push_back({sm.block_a, one});
                    rhs -= sc * sm.offset;
                    break;
                case ScalarMap::Mode::Flipped:
                    one(0, 0) = -sc;
                    terms.push_back({sm.block_a, one});
                    rhs -= sc * sm.offset;
                    break;
                case ScalarMap::Mode::Split: {
                    one(0, 0) = sc;
                    terms.push_back({sm.block_a, one});
                    CMatrix neg(1, 1);
                    neg(0, 0) = -sc;
                    terms.push_back({sm.block_b, neg});
                    break;
                }
            }
        }
        lo.row_map.push_back(emit_row(terms, con.sense, rhs));
    }

    // Box rows for doubly-bounded scalars.
    for (std::size_t s = 0; s < p.scalar_vars.size(); ++s) {
        const ScalarSpec& sv = p.scalar_vars[s];
        if (!sv.lower.has_value() || !sv.upper.has_value()) continue;
        const ScalarMap& sm = lo.scalar_map[s];
        CMatrix one(1, 1);
        one(0, 0) = 1.0;
        emit_row({{sm.block_a, one}}, Sense::LE, *sv.upper - *sv.lower);
    }
    return lo;
}

double scalar_value(const ScalarMap& sm, const std::vector<CMatrix>& x) {
    switch (sm.mode) {
        case ScalarMap::Mode::Shifted:
            return sm.offset + std::real(x[sm.block_a](0, 0));
        case ScalarMap::Mode::Flipped:
            return sm.offset - std::real(x[sm.block_a](0, 0));
        case ScalarMap::Mode::Split:
            return std::real(x[sm.block_a](0, 0)) - std::real(x[sm.block_b](0, 0));
    }
    return 0.0;
}

bool phase_one_feasible(const StdProblem& sp, double tol, std::size_t max_iter) {
    StdProblem f;
    f.dims = sp.dims;
    for (std::size_t dim : sp.dims) f.C.emplace_back(dim, dim);
    f.rows = sp.rows;
    f.b = sp.b;
    for (std::size_t i = 0; i < f.rows.size(); ++i) {
        std::size_t pb = f.add_block(1);
        std::size_t qb = f.add_block(1);
        f.C[pb](0, 0) = 1.0;
        f.C[qb](0, 0) = 1.0;
        CMatrix one(1, 1), neg(1, 1);
        one(0, 0) = 1.0;
        neg(0, 0) = -1.0;
        f.rows[i].push_back({pb, one});
        f.rows[i].push_back({qb, neg});
    }
    IpmState st = ipm_solve(f, std::max(tol, 1e-8), max_iter);
    double value = 0.0;
    for (std::size_t bidx = 0; bidx < f.dims.size(); ++bidx) value += inner(f.C[bidx], st.X[bidx]);
    double max_b = 0.0;
    for (double v : f.b) max_b = std::max(max_b, std::abs(v));
    return value <= 1e-6 * (1.0 + max_b);
}

}  // namespace

ConicSolution solve(const ConicProblem& problem, double tol, std::size_t max_iter) {
    if (problem.objective_matrices.size() != problem.psd_blocks.size() ||
        problem.objective_scalars.size() != problem.scalar_vars.size())
        throw DimensionMismatch("conic solve: objective arity mismatch");
    for (const LinearConstraint& con : problem.constraints) {
        if (con.coeff_matrices.size() != problem.psd_blocks.size() ||
            con.scalar_coeffs.size() != problem.scalar_vars.size())
            throw DimensionMismatch("conic solve: constraint arity mismatch");
        for (std::size_t bidx = 0; bidx < problem.psd_blocks.size(); ++bidx) {
            const CMatrix& a = con.coeff_matrices[bidx];
            if (!a.empty() &&
                (a.rows() != problem.psd_blocks[bidx].dim || a.cols() != problem.psd_blocks[bidx].dim))
                throw DimensionMismatch("conic solve: coefficient block dim mismatch");
        }
    }

    Lowering lo = lower(problem);
    IpmState st = ipm_solve(lo.sp, tol, max_iter);

    if (std::getenv("ISABC_LOWER_CHECK")) {
        for (std::size_t ci = 0; ci < problem.constraints.size(); ++ci) {
            const std::size_t ri = lo.row_map[ci];
            double lhs = 0.0;
            for (const auto& [bidx, a] : lo.sp.rows[ri]) lhs += re_tr(a, st.X[bidx]);
            std::fprintf(stderr, "[lower] %-18s lowered lhs=%.6g b=%.6g scale=%.3g\n",
                         problem.constraints[ci].label.c_str(), lhs, lo.sp.b[ri],
                         lo.row_scale[ci]);
        }
    }

    ConicSolution sol;
    sol.iterations = st.iterations;
    for (std::size_t bidx = 0; bidx < problem.psd_blocks.size(); ++bidx)
        sol.psd_values[problem.psd_blocks[bidx].name] = st.X[lo.psd_map[bidx]];
    for (std::size_t s = 0; s < problem.scalar_vars.size(); ++s)
        sol.scalar_values[problem.scalar_vars[s].name] = scalar_value(lo.scalar_map[s], st.X);

    double obj = 0.0;
    for (std::size_t bidx = 0; bidx < problem.psd_blocks.size(); ++bidx)
        obj += inner(hermitian_part(problem.objective_matrices[bidx]),
                     sol.psd_values.at(problem.psd_blocks[bidx].name));
    for (std::size_t s = 0; s < problem.scalar_vars.size(); ++s)
        obj += problem.objective_scalars[s] * sol.scalar_values.at(problem.scalar_vars[s].name);
    sol.objective_value = obj;

    double max_violation = 0.0;
    for (const LinearConstraint& con : problem.constraints) {
        double lhs = 0.0;
        double mag = 0.0;
        for (std::size_t bidx = 0; bidx < problem.psd_blocks.size(); ++bidx) {
            const CMatrix& a = con.coeff_matrices[bidx];
            if (a.empty()) continue;
            const double term =
                inner(hermitian_part(a), sol.psd_values.at(problem.psd_blocks[bidx].name));
            lhs += term;
            mag += std::abs(term);
        }
        for (std::size_t s = 0; s < problem.scalar_vars.size(); ++s) {
            const double term =
                con.scalar_coeffs[s] * sol.scalar_values.at(problem.scalar_vars[s].name);
            lhs += term;
            mag += std::abs(term);
        }
        double viol = 0.0;
        if (con.sense == Sense::LE)
            viol = std::max(0.0, lhs - con.rhs);
        else if (con.sense == Sense::GE)
            viol = std::max(0.0, con.rhs - lhs);
        else
            viol = std::abs(lhs - con.rhs);
        // Relative residual: rows routinely mix magnitudes across many orders,
        // so an absolute measure would misread near-feasible iterates. The
        // scale comes from the row's own terms, never an additive unit.
        const double scale = std::max({std::abs(con.rhs), mag, 1e-300});
        if (std::getenv("ISABC_LOWER_CHECK") && viol / scale > 1e-4)
            std::fprintf(stderr, "[viol] %-18s lhs=%.6g rhs=%.6g mag=%.3g rel=%.3g\n",
                         con.label.c_str(), lhs, con.rhs, mag, viol / scale);
        max_violation = std::max(max_violation, viol / scale);
    }
    sol.max_constraint_violation = max_violation;

    if (st.converged) {
        sol.status = SolveStatus::Optimal;
    } else if (max_violation <= 1e-2) {
        // Stalled but essentially feasible; no need to litigate feasibility.
        sol.status = SolveStatus::MaxIterations;
    } else {
        sol.status = phase_one_feasible(lo.sp, tol, max_iter) ? SolveStatus::MaxIterations
                                                              : SolveStatus::Infeasible;
    }
    return sol;
}

std::vector<TangentCut> log_tangent_cuts(std::vector<double> anchors, double offset) {
    if (anchors.empty()) throw InvalidAnchor("log_tangent_cuts: empty anchor list");
    for (double a : anchors)
        if (!(a + offset > 1e-12)) throw InvalidAnchor("log_tangent_cuts: anchor at or below -offset");
    std::sort(anchors.begin(), anchors.end());
    anchors.erase(std::unique(anchors.begin(), anchors.end(),
                              [](double a, double b) {
                                  return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a));
                              }),
                  anchors.end());

    auto f = [offset](double x) { return std::log2(offset + x); };
    std::vector<TangentCut> cuts;
    for (std::size_t i = 0; i + 1 < anchors.size(); ++i) {
        const double a = anchors[i], b = anchors[i + 1];
        TangentCut cut;
        cut.anchor = a;
        cut.slope = (f(b) - f(a)) / (b - a);
        cut.intercept = f(a) - cut.slope * a;
        cuts.push_back(cut);
    }
    TangentCut cap;
    cap.anchor = anchors.back();
    cap.slope = 0.0;
    cap.intercept = f(anchors.back());
    cuts.push_back(cap);
    return cuts;
}

double min_cut_value(const std::vector<TangentCut>& cuts, double x) {
    double v = std::numeric_limits<double>::infinity();
    for (const TangentCut& cut : cuts) v = std::min(v, cut.value(x));
    return v;
}

void dump_problem(const ConicProblem& problem, std::ostream& out) {
    out << "psd_blocks " << problem.psd_blocks.size() << "\n";
    for (const PsdBlockSpec& blk : problem.psd_blocks)
        out << "  block " << blk.name << " dim " << blk.dim << "\n";
    out << "scalars " << problem.scalar_vars.size() << "\n";
    for (const ScalarSpec& sv : problem.scalar_vars) {
        out << "  scalar " << sv.name;
        if (sv.lower) out << " lb " << *sv.lower;
        if (sv.upper) out << " ub " << *sv.upper;
        out << "\n";
    }
    out << "constraints " << problem.constraints.size() << "\n";
    for (std::size_t ci = 0; ci < problem.constraints.size(); ++ci) {
        const LinearConstraint& con = problem.constraints[ci];
        const char* sense = con.sense == Sense::LE ? "<=" : con.sense == Sense::GE ? ">=" : "==";
        out << "  row " << ci << " [" << con.label << "] " << sense << " " << con.rhs << "\n";
        for (std::size_t bidx = 0; bidx < con.coeff_matrices.size(); ++bidx) {
            const CMatrix& a = con.coeff_matrices[bidx];
            if (a.empty() || a.max_abs() == 0.0) continue;
            out << "    block " << problem.psd_blocks[bidx].name << "\n";
            for (std::size_t i = 0; i < a.rows(); ++i)
                for (std::size_t j = 0; j < a.cols(); ++j)
                    if (std::abs(a(i, j)) > 0.0)
                        out << "      " << i << " " << j << " " << std::real(a(i, j)) << " "
                            << std::imag(a(i, j)) << "\n";
        }
        for (std::size_t s = 0; s < con.scalar_coeffs.size(); ++s)
            if (con.scalar_coeffs[s] != 0.0)
                out << "    scalar " << problem.scalar_vars[s].name << " "
                    << con.scalar_coeffs[s] << "\n";
    }
}

}  // namespace isabc
