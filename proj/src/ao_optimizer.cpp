#include "isabc/ao_optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace isabc {

namespace {

constexpr double kInitPowerCap = 1e3;  // W
constexpr double kAlphaBox = 1e-4;

double beam_power(const CMatrix& v, const CMatrix& w) { return std::norm(dot(v, w)); }

double quad(const CMatrix& v, const CMatrix& s) { return std::real(dot(v, s * v)); }

double full_signal_power(const CMatrix& a, const BeamformingSolution& sol) {
    double p = beam_power(a, sol.w_c);
    for (const CMatrix& w : sol.w_l) p += beam_power(a, w);
    p += quad(a, sol.S);
    return p;
}

/// Interference-plus-noise at user l for the private stream, following the
/// scheme's decoding model. Includes sigma^2.
double private_denominator(const ChannelSet& ch, const BeamformingSolution& sol,
                           const SystemConfig& cfg, std::size_t l) {
    const SchemeToggles tg = toggles_for(cfg.scheme);
    const CMatrix& f = ch.f_l[l];
    double den = cfg.sigma2();
    if (tg.access == AccessMode::Noma) {
        for (std::size_t j = 0; j < l; ++j) den += cfg.delta_p * beam_power(f, sol.w_l[j]);
        for (std::size_t j = l + 1; j < sol.w_l.size(); ++j) den += beam_power(f, sol.w_l[j]);
    } else {
        den += cfg.delta_c * beam_power(f, sol.w_c);
        for (std::size_t j = 0; j < sol.w_l.size(); ++j)
            if (j != l) den += beam_power(f, sol.w_l[j]);
    }
    den += cfg.delta_s * quad(f, sol.S);
    for (std::size_t k = 0; k < ch.h_lk[l].size(); ++k) {
        const CMatrix& h = ch.h_lk[l][k];
        double p = 0.0;
        if (tg.access != AccessMode::Noma) p += beam_power(h, sol.w_c);
        for (const CMatrix& w : sol.w_l) p += beam_power(h, w);
        p += quad(h, sol.S);
        den += sol.alpha[k] * p;
    }
    return den;
}

/// Interference-plus-noise at user l for the common stream (sigma^2 included).
double common_denominator(const ChannelSet& ch, const BeamformingSolution& sol,
                          const SystemConfig& cfg, std::size_t l) {
    const CMatrix& f = ch.f_l[l];
    double den = cfg.sigma2();
    for (const CMatrix& w : sol.w_l) den += beam_power(f, w);
    den += cfg.delta_s * quad(f, sol.S);
    for (std::size_t k = 0; k < ch.h_lk[l].size(); ++k)
        den += sol.alpha[k] * full_signal_power(ch.h_lk[l][k], sol);
    return den;
}

CMatrix mmse_matrix(const ChannelSet& ch, const BeamformingSolution& sol,
                    const SystemConfig& cfg, std::size_t k) {
    const std::size_t n = sol.u_k.empty() ? ch.G_SI.cols() : sol.u_k[k].rows();
    const CMatrix rx = covariance_rx(sol);
    CMatrix q = CMatrix::identity(n) * cfg.sigma2();
    for (std::size_t i = 0; i < ch.G_k.size(); ++i) {
        if (i == k) continue;
        q += (ch.G_k[i] * rx * ch.G_k[i].adjoint()) * sol.alpha[i];
    }
    q += (ch.G_SI.adjoint() * rx * ch.G_SI) * cfg.beta;
    return hermitian_part(q);
}

/// Closed-form receive beamformer candidates for tag k; keeps whichever of
/// {current, MMSE response, whitened matched filter} scores highest.
CMatrix best_receive_beamformer(const ChannelSet& ch, const BeamformingSolution& sol,
                                const SystemConfig& cfg, std::size_t k) {
    const CMatrix q = mmse_matrix(ch, sol, cfg, k);
    CMatrix wsum = sol.w_c;
    for (const CMatrix& w : sol.w_l) wsum += w;
    if (sol.S.frobenius_norm() > 0.0) wsum += principal_component(sol.S).vector;

    std::vector<CMatrix> candidates;
    candidates.push_back(sol.u_k[k]);
    const CMatrix gtilde = ch.G_k[k] * wsum * std::sqrt(sol.alpha[k]);
    if (norm(gtilde) > 1e-300) {
        CMatrix u = solve_hermitian(q, gtilde);
        candidates.push_back(u * (1.0 / norm(u)));
    }
    {
        CMatrix u = solve_hermitian(q, ch.g_bk[k]);
        if (norm(u) > 0.0) candidates.push_back(u * (1.0 / norm(u)));
    }

    BeamformingSolution probe = sol;
    double best = -1.0;
    CMatrix best_u = sol.u_k[k];
    for (const CMatrix& u : candidates) {
        probe.u_k[k] = u;
        const double v = sinr_sensing(ch, probe, cfg, k);
        if (v > best) {
            best = v;
            best_u = u;
        }
    }
    return best_u;
}

BeamformingSolution scaled(const BeamformingSolution& sol, double tau) {
    BeamformingSolution out = sol;
    const double r = std::sqrt(tau);
    out.w_c = sol.w_c * r;
    for (std::size_t l = 0; l < sol.w_l.size(); ++l) out.w_l[l] = sol.w_l[l] * r;
    out.S = sol.S * tau;
    return out;
}

/// Minimal uniform power scale that makes the candidate satisfy every active
/// constraint; every SINR has the form tau*a / (tau*b + sigma^2), monotone in
/// tau, so each row yields a closed-form bound. Returns +inf when no scale works.
double min_feasible_scale(const ChannelSet& ch, const BeamformingSolution& sol,
                          const SystemConfig& cfg) {
    const SchemeToggles tg = toggles_for(cfg.scheme);
    const double s2 = cfg.sigma2();
    double tau = 0.0;
    const double inf = std::numeric_limits<double>::infinity();

    auto ratio_bound = [&](double num, double den, double target) {
        // num/(den + s2) must reach target under scaling of both by tau.
        if (target <= 0.0) return 0.0;
        const double margin = num - target * den;
        if (margin <= 0.0) return inf;
        return target * s2 / margin;
    };

    const std::size_t l_count = ch.f_l.size();
    const std::size_t k_count = ch.h_k.size();

    if (tg.has_sensing_covariance)
        for (std::size_t k = 0; k < k_count; ++k) {
            const double ups = sinr_sensing(ch, sol, cfg, k);
            // Recover the noise-free part of the denominator from the SINR.
            const CMatrix rx = covariance_rx(sol);
            const CMatrix gu = ch.G_k[k].adjoint() * sol.u_k[k];
            const double num = sol.alpha[k] * quad(gu, rx);
            const double den = ups > 0.0 ? num / ups - s2 : inf;
            tau = std::max(tau, ratio_bound(num, std::max(den, 0.0), cfg.upsilon_th()));
            if (ups <= 0.0 && cfg.upsilon_th() > 0.0) return inf;
        }

    if (tg.has_tag_rate)
        for (std::size_t k = 0; k < k_count; ++k) {
            const double num = sol.alpha[k] * full_signal_power(ch.h_k[k], sol);
            double den = cfg.delta_c * beam_power(ch.f0, sol.w_c);
            for (const CMatrix& w : sol.w_l) den += cfg.delta_p * beam_power(ch.f0, w);
            den += cfg.delta_s * quad(ch.f0, sol.S);
            for (std::size_t i = 0; i < k_count; ++i)
                if (i != k) den += sol.alpha[i] * full_signal_power(ch.h_k[i], sol);
            tau = std::max(tau, ratio_bound(num, den, cfg.gamma_t_th()));
        }

    if (tg.has_private_streams)
        for (std::size_t l = 0; l < l_count; ++l) {
            const double target = std::pow(2.0, cfg.r_p_th - sol.C[l]) - 1.0;
            const double num = beam_power(ch.f_l[l], sol.w_l[l]);
            const double den = private_denominator(ch, sol, cfg, l) - s2;
            tau = std::max(tau, ratio_bound(num, den, target));
        }

    if (tg.has_common_stream) {
        double c_sum = 0.0;
        for (double c : sol.C) c_sum += c;
        const double target = std::pow(2.0, c_sum) - 1.0;
        for (std::size_t l = 0; l < l_count; ++l) {
            const double num = beam_power(ch.f_l[l], sol.w_c);
            const double den = common_denominator(ch, sol, cfg, l) - s2;
            tau = std::max(tau, ratio_bound(num, den, target));
        }
    }

    const double p_th = eh_input_threshold(cfg);
    for (std::size_t k = 0; k < k_count; ++k) {
        const double avail = (1.0 - sol.alpha[k]) * incident_power(ch, sol, k);
        if (avail <= 0.0) return inf;
        tau = std::max(tau, p_th / avail);
    }

    if (!std::isfinite(tau)) return inf;
    return std::max(tau, 1e-12);
}

std::vector<double> cut_anchor_set(double pivot) {
    std::vector<double> anchors{0.0};
    if (pivot > 0.0)
        for (double f : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) anchors.push_back(pivot * f);
    return anchors;
}

struct BlockLayout {
    SchemeToggles tg;
    std::size_t l_count = 0;
    std::size_t k_count = 0;
    int wc = -1;
    std::vector<std::size_t> wl;
    int s = -1;
    std::vector<std::size_t> c_idx, mu_idx, phi_idx;
};

BlockLayout layout_for(const SystemConfig& cfg) {
    BlockLayout lo;
    lo.tg = toggles_for(cfg.scheme);
    lo.l_count = cfg.L;
    lo.k_count = cfg.K;
    return lo;
}

}  // namespace

ConstraintMargins constraint_margins(const ChannelSet& ch, const BeamformingSolution& sol,
                                     const SystemConfig& cfg) {
    const SchemeToggles tg = toggles_for(cfg.scheme);
    ConstraintMargins m;
    const SinrReport rep = evaluate(ch, sol, cfg);
    double worst = 0.0;
    auto bump = [&](double shortfall, double scale) {
        worst = std::max(worst, shortfall / std::max(scale, 1e-30));
    };

    if (tg.has_sensing_covariance)
        for (std::size_t k = 0; k < cfg.K; ++k) {
            m.sensing.push_back(rep.upsilon[k] - cfg.upsilon_th());
            bump(-m.sensing.back(), cfg.upsilon_th());
        }
    if (tg.has_tag_rate)
        for (std::size_t k = 0; k < cfg.K; ++k) {
            m.tag.push_back(rep.gamma_t[k] - cfg.gamma_t_th());
            bump(-m.tag.back(), cfg.gamma_t_th());
        }
    if (tg.has_private_streams)
        for (std::size_t l = 0; l < cfg.L; ++l) {
            m.private_rate.push_back(rep.R_p_total[l] - cfg.r_p_th);
            bump(-m.private_rate.back(), cfg.r_p_th);
        }
    if (tg.has_common_stream) {
        double c_sum = 0.0;
        for (double c : sol.C) c_sum += c;
        m.common_rate = rep.R_c - c_sum;
        bump(-m.common_rate, std::max(1.0, c_sum));
    }
    const double p_th = eh_input_threshold(cfg);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        m.eh.push_back((1.0 - sol.alpha[k]) * rep.p_in[k] - p_th);
        bump(-m.eh.back(), p_th);
    }
    m.worst = worst;
    return m;
}

void ConvergenceTrace::write_csv(std::ostream& out) const {
    out << "iteration,objective_W,max_violation,status,wall_time_s\n";
    for (const TraceEntry& e : entries)
        out << e.iteration << "," << e.objective_w << "," << e.max_violation << ","
            << e.status << "," << e.wall_time_s << "\n";
}

void refresh_anchors(const ChannelSet& ch, AoState& state, const SystemConfig& cfg) {
    const SchemeToggles tg = toggles_for(cfg.scheme);
    ScaAnchors& a = state.anchors;
    a.mu.assign(cfg.L, 0.0);
    a.phi.assign(cfg.L, cfg.sigma2());
    a.t_total.assign(cfg.L, 0.0);
    a.lambda.assign(cfg.L, cfg.sigma2());
    if (tg.has_private_streams)
        for (std::size_t l = 0; l < cfg.L; ++l) {
            const double den = private_denominator(ch, state.solution, cfg, l);
            a.phi[l] = den;
            a.mu[l] = beam_power(ch.f_l[l], state.solution.w_l[l]) / den;
        }
    if (tg.has_common_stream)
        for (std::size_t l = 0; l < cfg.L; ++l) {
            const double den = common_denominator(ch, state.solution, cfg, l);
            a.lambda[l] = den;
            a.t_total[l] =
                beam_power(ch.f_l[l], state.solution.w_c) + (den - cfg.sigma2());
        }
    a.ready = true;
}

void optimize_receive_beamformers(const ChannelSet& ch, AoState& state,
                                  const SystemConfig& cfg) {
    if (!toggles_for(cfg.scheme).has_sensing_covariance) return;
    for (std::size_t k = 0; k < cfg.K; ++k)
        state.solution.u_k[k] = best_receive_beamformer(ch, state.solution, cfg, k);
}

ConicProblem build_transmit_sdp(const ChannelSet& ch, const AoState& state,
                                const SystemConfig& cfg) {
    BlockLayout lo = layout_for(cfg);
    const SchemeToggles& tg = lo.tg;
    if (tg.has_private_streams && !state.anchors.ready)
        throw MissingAnchors("build_transmit_sdp: anchors not initialized");

    const std::size_t m_tx = ch.G_SI.rows();
    const double s2 = cfg.sigma2();
    const BeamformingSolution& cur = state.solution;

    ConicProblem p;
    if (tg.has_common_stream) lo.wc = static_cast<int>(p.add_psd_block("W_c", m_tx));
    if (tg.has_private_streams)
        for (std::size_t l = 0; l < lo.l_count; ++l)
            lo.wl.push_back(p.add_psd_block("W_" + std::to_string(l + 1), m_tx));
    if (tg.has_sensing_covariance) lo.s = static_cast<int>(p.add_psd_block("S", m_tx));
    for (std::size_t b = 0; b < p.psd_blocks.size(); ++b)
        p.objective_matrices[b] = CMatrix::identity(m_tx);

    if (tg.has_common_stream)
        for (std::size_t l = 0; l < lo.l_count; ++l)
            lo.c_idx.push_back(p.add_scalar("C_" + std::to_string(l + 1), 0.0));
    if (tg.has_private_streams)
        for (std::size_t l = 0; l < lo.l_count; ++l) {
            lo.mu_idx.push_back(p.add_scalar("mu_" + std::to_string(l + 1), 0.0));
            lo.phi_idx.push_back(p.add_scalar("phi_" + std::to_string(l + 1), 0.0));
        }

    auto add_dir = [&](LinearConstraint& row, int block, const CMatrix& a, double scale) {
        if (block < 0 || scale == 0.0) return;
        row.coeff_matrices[block] += outer(a) * scale;
    };
    auto add_full = [&](LinearConstraint& row, const CMatrix& a, double scale) {
        add_dir(row, lo.wc, a, scale);
        for (std::size_t idx : lo.wl) add_dir(row, static_cast<int>(idx), a, scale);
        add_dir(row, lo.s, a, scale);
    };
    // Backscatter pickup terms common to every user-side denominator.
    auto add_tag_pickup = [&](LinearConstraint& row, std::size_t l, double scale) {
        for (std::size_t k = 0; k < lo.k_count; ++k)
            add_full(row, ch.h_lk[l][k], scale * cur.alpha[k]);
    };

    if (tg.has_sensing_covariance)
        for (std::size_t k = 0; k < lo.k_count; ++k) {
            LinearConstraint row = p.make_row();
            const double th = cfg.upsilon_th();
            const CMatrix ck = ch.G_k[k].adjoint() * cur.u_k[k];
            add_full(row, ck, cur.alpha[k]);
            for (std::size_t i = 0; i < lo.k_count; ++i) {
                if (i == k) continue;
                add_full(row, ch.G_k[i].adjoint() * cur.u_k[k], -th * cur.alpha[i]);
            }
            add_full(row, ch.G_SI * cur.u_k[k], -th * cfg.beta);
            row.sense = Sense::GE;
            row.rhs = th * s2;
            row.label = "sens_" + std::to_string(k + 1);
            p.constraints.push_back(row);
        }

    if (tg.has_tag_rate)
        for (std::size_t k = 0; k < lo.k_count; ++k) {
            LinearConstraint row = p.make_row();
            const double th = cfg.gamma_t_th();
            add_full(row, ch.h_k[k], cur.alpha[k]);
            add_dir(row, lo.wc, ch.f0, -th * cfg.delta_c);
            for (std::size_t idx : lo.wl)
                add_dir(row, static_cast<int>(idx), ch.f0, -th * cfg.delta_p);
            add_dir(row, lo.s, ch.f0, -th * cfg.delta_s);
            for (std::size_t i = 0; i < lo.k_count; ++i)
                if (i != k) add_full(row, ch.h_k[i], -th * cur.alpha[i]);
            row.sense = Sense::GE;
            row.rhs = th * s2;
            row.label = "tag_" + std::to_string(k + 1);
            p.constraints.push_back(row);
        }

    const double p_th = eh_input_threshold(cfg);
    for (std::size_t k = 0; k < lo.k_count; ++k) {
        LinearConstraint row = p.make_row();
        add_full(row, ch.g_fk[k], 1.0 - cur.alpha[k]);
        row.sense = Sense::GE;
        row.rhs = p_th;
        row.label = "eh_" + std::to_string(k + 1);
        p.constraints.push_back(row);
    }

    if (tg.has_private_streams)
        for (std::size_t l = 0; l < lo.l_count; ++l) {
            const double mu_t = std::max(state.anchors.mu[l], 1e-9);
            const double phi_t = std::max(state.anchors.phi[l], s2);

            {  // interference + noise <= phi_l
                LinearConstraint row = p.make_row();
                if (tg.access == AccessMode::Noma) {
                    for (std::size_t j = 0; j < l; ++j)
                        add_dir(row, static_cast<int>(lo.wl[j]), ch.f_l[l], cfg.delta_p);
                    for (std::size_t j = l + 1; j < lo.l_count; ++j)
                        add_dir(row, static_cast<int>(lo.wl[j]), ch.f_l[l], 1.0);
                } else {
                    add_dir(row, lo.wc, ch.f_l[l], cfg.delta_c);
                    for (std::size_t j = 0; j < lo.l_count; ++j)
                        if (j != l) add_dir(row, static_cast<int>(lo.wl[j]), ch.f_l[l], 1.0);
                }
                add_dir(row, lo.s, ch.f_l[l], cfg.delta_s);
                add_tag_pickup(row, l, 1.0);
                // phi_l lives in noise-normalized units so its coefficients
                // stay commensurate with the matrix entries.
                for (CMatrix& a : row.coeff_matrices) a = a * (1.0 / s2);
                row.scalar_coeffs[lo.phi_idx[l]] = -1.0;
                row.sense = Sense::LE;
                row.rhs = -1.0;
                row.label = "priv_den_" + std::to_string(l + 1);
                p.constraints.push_back(row);
            }
            const double phi_nt = phi_t / s2;
            {
                // Signal must dominate mu*phi. With a = mu/mu_t and
                // b = phi/phi_t, AM-GM gives mu*phi <= mu_t*phi_t ((a+b)/2)^2,
                // tight along the whole ray a = b through the anchor, so a
                // uniform power rescale costs nothing and every iterate stays
                // exactly feasible for the true rate constraint. The square
                // enters through one 2x2 PSD lift per stream.
                const std::size_t bl = p.add_psd_block("Bp_" + std::to_string(l + 1), 2);
                {
                    LinearConstraint row = p.make_row();
                    row.coeff_matrices[bl](1, 1) = 1.0;
                    row.sense = Sense::EQ;
                    row.rhs = 1.0;
                    row.label = "bp_unit_" + std::to_string(l + 1);
                    p.constraints.push_back(row);
                }
                {
                    LinearConstraint row = p.make_row();
                    row.coeff_matrices[bl](0, 1) = 0.5;
                    row.coeff_matrices[bl](1, 0) = 0.5;
                    row.scalar_coeffs[lo.mu_idx[l]] = -0.5 / mu_t;
                    row.scalar_coeffs[lo.phi_idx[l]] = -0.5 / phi_nt;
                    row.sense = Sense::EQ;
                    row.rhs = 0.0;
                    row.label = "bp_link_" + std::to_string(l + 1);
                    p.constraints.push_back(row);
                }
                LinearConstraint row = p.make_row();
                add_dir(row, static_cast<int>(lo.wl[l]), ch.f_l[l],
                        1.0 / (s2 * mu_t * phi_nt));
                row.coeff_matrices[bl](0, 0) = -1.0;
                row.sense = Sense::GE;
                row.rhs = 0.0;
                row.label = "priv_prod_" + std::to_string(l + 1);
                p.constraints.push_back(row);
            }
            const auto cuts = log_tangent_cuts(cut_anchor_set(mu_t), 1.0);
            for (std::size_t i = 0; i < cuts.size(); ++i) {
                LinearConstraint row = p.make_row();
                if (tg.has_common_stream) row.scalar_coeffs[lo.c_idx[l]] = 1.0;
                row.scalar_coeffs[lo.mu_idx[l]] = cuts[i].slope;
                row.sense = Sense::GE;
                row.rhs = cfg.r_p_th - cuts[i].intercept;
                row.label = "priv_rate_" + std::to_string(l + 1) + "_" + std::to_string(i);
                p.constraints.push_back(row);
            }
        }

    if (tg.has_common_stream)
        for (std::size_t l = 0; l < lo.l_count; ++l) {
            const double lam = state.anchors.lambda[l];
            const double inv = 1.0 / (lam * std::numbers::ln2);
            // Work in noise-normalized power so the cut anchors sit at O(1):
            // log2(s2 + T) = log2(s2) + log2(1 + T / s2).
            const auto cuts =
                log_tangent_cuts(cut_anchor_set(state.anchors.t_total[l] / s2), 1.0);
            for (std::size_t i = 0; i < cuts.size(); ++i) {
                LinearConstraint row = p.make_row();
                for (std::size_t idx : lo.c_idx) row.scalar_coeffs[idx] = 1.0;
                // Linearized interference log, coefficient inv on D_l.
                for (std::size_t j = 0; j < lo.l_count; ++j)
                    add_dir(row, static_cast<int>(lo.wl[j]), ch.f_l[l], inv);
                add_dir(row, lo.s, ch.f_l[l], inv * cfg.delta_s);
                add_tag_pickup(row, l, inv);
                // Secant on the total received power log, coefficient -slope
                // per normalized watt.
                const double slope_w = cuts[i].slope / s2;
                add_dir(row, lo.wc, ch.f_l[l], -slope_w);
                for (std::size_t j = 0; j < lo.l_count; ++j)
                    add_dir(row, static_cast<int>(lo.wl[j]), ch.f_l[l], -slope_w);
                add_dir(row, lo.s, ch.f_l[l], -slope_w * cfg.delta_s);
                add_tag_pickup(row, l, -slope_w);
                row.sense = Sense::LE;
                row.rhs = cuts[i].intercept + std::log2(s2) - std::log2(lam) -
                          (s2 - lam) * inv;
                row.label = "common_" + std::to_string(l + 1) + "_" + std::to_string(i);
                p.constraints.push_back(row);
            }
        }

    // Equilibrate every row by its magnitude at the incumbent. Link gains span
    // many decades, so without this the Newton systems inside the solver mix
    // rows fifteen orders of magnitude apart and lose the small ones. The
    // incumbent satisfies the restriction, which makes its per-row activity a
    // meaningful scale.
    std::vector<CMatrix> ref_blocks;
    for (const PsdBlockSpec& blk : p.psd_blocks) {
        if (blk.name == "W_c") ref_blocks.push_back(outer(cur.w_c));
        else if (blk.name == "S") ref_blocks.push_back(cur.S);
        else if (blk.name.rfind("W_", 0) == 0)
            ref_blocks.push_back(outer(cur.w_l[std::stoul(blk.name.substr(2)) - 1]));
        else {
            CMatrix ones(blk.dim, blk.dim);
            for (std::size_t r = 0; r < blk.dim; ++r)
                for (std::size_t c = 0; c < blk.dim; ++c) ones(r, c) = 1.0;
            ref_blocks.push_back(ones);
        }
    }
    std::vector<double> ref_scalars(p.scalar_vars.size(), 0.0);
    for (std::size_t i = 0; i < p.scalar_vars.size(); ++i) {
        const std::string& nm = p.scalar_vars[i].name;
        if (nm.rfind("C_", 0) == 0)
            ref_scalars[i] = cur.C[std::stoul(nm.substr(2)) - 1];
        else if (nm.rfind("mu_", 0) == 0)
            ref_scalars[i] = std::max(state.anchors.mu[std::stoul(nm.substr(3)) - 1], 1e-9);
        else if (nm.rfind("phi_", 0) == 0)
            ref_scalars[i] = std::max(state.anchors.phi[std::stoul(nm.substr(4)) - 1], s2) / s2;
    }
    for (LinearConstraint& row : p.constraints) {
        double act = std::abs(row.rhs);
        for (std::size_t b = 0; b < row.coeff_matrices.size(); ++b)
            if (!row.coeff_matrices[b].empty())
                act += std::abs(std::real((row.coeff_matrices[b] * ref_blocks[b]).trace()));
        for (std::size_t i = 0; i < row.scalar_coeffs.size(); ++i)
            act += std::abs(row.scalar_coeffs[i] * ref_scalars[i]);
        if (!(act > 0.0) || !std::isfinite(act)) continue;
        const double inv_act = 1.0 / act;
        for (CMatrix& cm : row.coeff_matrices)
            if (!cm.empty()) cm = cm * inv_act;
        for (double& c : row.scalar_coeffs) c *= inv_act;
        row.rhs *= inv_act;
    }

    return p;
}

namespace {

std::string transmit_sca_step(const ChannelSet& ch, AoState& state, const SystemConfig& cfg,
                              Rng& rng) {
    const SchemeToggles tg = toggles_for(cfg.scheme);
    const ConicProblem prob = build_transmit_sdp(ch, state, cfg);
    const ConicSolution sdp = solve(prob);
    if (sdp.status == SolveStatus::Infeasible) {
        // The restriction is feasible by construction at the incumbent, so an
        // infeasibility report really means the solver ran aground; keep the
        // incumbent rather than abort the whole descent.
        if (constraint_margins(ch, state.solution, cfg).worst <= 1e-6) return "sdp:stall";
        std::ostringstream msg;
        msg << "transmit SDP reported infeasible (violation "
            << sdp.max_constraint_violation << ")";
        throw SdpInfeasible(msg.str());
    }
    // Recovery below rescales every candidate to exact feasibility, so a
    // stalled-but-close iterate is still worth mining; only give up when the
    // iterate is nowhere near the feasible set.
    if (sdp.status == SolveStatus::MaxIterations && sdp.max_constraint_violation > 1e-2)
        return "sdp:maxiter";

    // Factorizations for rank-one recovery.
    struct BlockFactor {
        EigenPair eig;
        CMatrix pc;       // sqrt(lambda1) v1
        bool rank_one = false;
    };
    auto factor = [&](const CMatrix& w) {
        BlockFactor f;
        f.eig = hermitian_eig(hermitian_part(w));
        const PrincipalComponent pc = principal_component(hermitian_part(w));
        f.pc = pc.vector;
        f.rank_one = pc.residual_ratio <= 1e-6;
        return f;
    };
    auto draw = [&](const BlockFactor& f) {
        if (f.rank_one) return f.pc;
        CMatrix w(f.pc.rows(), 1);
        for (std::size_t i = 0; i < f.eig.values.size(); ++i) {
            if (f.eig.values[i] <= 0.0) break;
            const cplx r = rng.circular_gaussian();
            const double s = std::sqrt(f.eig.values[i]);
            for (std::size_t row = 0; row < w.rows(); ++row)
                w(row, 0) += f.eig.vectors(row, i) * r * s;
        }
        return w;
    };

    BeamformingSolution base = state.solution;
    if (tg.has_common_stream)
        for (std::size_t l = 0; l < cfg.L; ++l)
            base.C[l] = sdp.scalar_values.at("C_" + std::to_string(l + 1));
    if (tg.has_sensing_covariance) {
        // Clip tiny negative eigenvalues from solver tolerance.
        const EigenPair se = hermitian_eig(hermitian_part(sdp.psd_values.at("S")));
        CMatrix s_clean(se.vectors.rows(), se.vectors.rows());
        for (std::size_t i = 0; i < se.values.size(); ++i) {
            if (se.values[i] <= 0.0) continue;
            CMatrix v(se.vectors.rows(), 1);
            for (std::size_t r = 0; r < v.rows(); ++r) v(r, 0) = se.vectors(r, i);
            s_clean += outer(v) * se.values[i];
        }
        base.S = s_clean;
    } else {
        base.S = CMatrix(base.S.rows(), base.S.cols());
    }

    BlockFactor fc;
    std::vector<BlockFactor> fl;
    bool all_rank_one = true;
    if (tg.has_common_stream) {
        fc = factor(sdp.psd_values.at("W_c"));
        all_rank_one = all_rank_one && fc.rank_one;
    }
    if (tg.has_private_streams)
        for (std::size_t l = 0; l < cfg.L; ++l) {
            fl.push_back(factor(sdp.psd_values.at("W_" + std::to_string(l + 1))));
            all_rank_one = all_rank_one && fl.back().rank_one;
        }

    const std::size_t trials =
        all_rank_one ? 1 : std::max<std::size_t>(1, cfg.randomization_trials);
    double best_power = std::numeric_limits<double>::infinity();
    BeamformingSolution best = state.solution;
    bool found = false;
    for (std::size_t t = 0; t < trials; ++t) {
        BeamformingSolution cand = base;
        if (tg.has_common_stream) cand.w_c = t == 0 ? fc.pc : draw(fc);
        else cand.w_c = CMatrix(cand.w_c.rows(), 1);
        if (tg.has_private_streams)
            for (std::size_t l = 0; l < cfg.L; ++l)
                cand.w_l[l] = t == 0 ? fl[l].pc : draw(fl[l]);
        else
            for (CMatrix& w : cand.w_l) w = CMatrix(w.rows(), 1);

        const double tau = min_feasible_scale(ch, cand, cfg);
        if (t == 0 && std::getenv("ISABC_DEBUG")) {
            std::fprintf(stderr, "[rand t0] tau=%.4g\n", tau);
            auto m = constraint_margins(ch, scaled(cand, std::isfinite(tau) ? tau : 1.0), cfg);
            std::fprintf(stderr, "[rand t0] worst=%.4g sens=%.3g/%.3g tag=%.3g/%.3g", m.worst,
                         m.sensing.empty() ? 0 : m.sensing[0],
                         m.sensing.size() > 1 ? m.sensing[1] : 0,
                         m.tag.empty() ? 0 : m.tag[0], m.tag.size() > 1 ? m.tag[1] : 0);
            std::fprintf(stderr, " priv=%.3g/%.3g/%.3g common=%.3g eh=%.3g/%.3g\n",
                         m.private_rate.empty() ? 0 : m.private_rate[0],
                         m.private_rate.size() > 1 ? m.private_rate[1] : 0,
                         m.private_rate.size() > 2 ? m.private_rate[2] : 0, m.common_rate,
                         m.eh.empty() ? 0 : m.eh[0], m.eh.size() > 1 ? m.eh[1] : 0);
        }
        if (!std::isfinite(tau)) continue;
        const BeamformingSolution fixed = scaled(cand, tau);
        const double power = std::real(covariance_rx(fixed).trace());
        if (power < best_power) {
            best_power = power;
            best = fixed;
            found = true;
        }
    }
    if (!found) return "rand:none";
    if (best_power > state.objective + 1e-6 * (1.0 + state.objective)) return "sdp:keep";

    state.solution = best;
    state.objective = best_power;
    return all_rank_one ? "sdp:rank1" : "sdp:rand";
}

}  // namespace

std::string solve_transmit_subproblem(const ChannelSet& ch, AoState& state,
                                      const SystemConfig& cfg, Rng& rng) {
    // The convexified transmit problem is a restriction around the incumbent,
    // so a single solve leaves most of the available descent on the table.
    // Iterate solve-then-reanchor until the inner objective settles; the outer
    // loop then only has to reconcile the blocks, not grind out the power.
    std::string last = "sdp:none";
    for (int inner = 0; inner < 16; ++inner) {
        const double prev = state.objective;
        last = transmit_sca_step(ch, state, cfg, rng);
        if (std::getenv("ISABC_SCA_TRACE"))
            std::fprintf(stderr, "  [sca %d] %.4f -> %.4f %s\n", inner, prev, state.objective,
                         last.c_str());
        if (last != "sdp:rank1" && last != "sdp:rand") break;
        refresh_anchors(ch, state, cfg);
        const double rel = (prev - state.objective) / std::max(state.objective, 1e-30);
        if (rel < 1e-4) break;
    }
    return last;
}

std::string optimize_reflection_coefficients(const ChannelSet& ch, AoState& state,
                                             const SystemConfig& cfg) {
    const SchemeToggles tg = toggles_for(cfg.scheme);
    if (cfg.K == 0) return "alpha:skip";
    BeamformingSolution& sol = state.solution;
    const double s2 = cfg.sigma2();

    ConicProblem p;
    std::vector<std::size_t> a_idx;
    for (std::size_t k = 0; k < cfg.K; ++k)
        a_idx.push_back(
            p.add_scalar("alpha_" + std::to_string(k + 1), kAlphaBox, 1.0 - kAlphaBox));
    std::size_t t1_idx = 0, t2_idx = 0;
    if (tg.has_tag_rate) {
        t1_idx = p.add_scalar("t1", 0.0);
    }
    t2_idx = p.add_scalar("t2", 0.0);

    // Fixed-beam power coefficients.
    std::vector<double> p_tag(cfg.K), p_in(cfg.K);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        p_tag[k] = full_signal_power(ch.h_k[k], sol);
        p_in[k] = incident_power(ch, sol, k);
    }

    // Rows that hold for every admissible alpha only degrade the solve (their
    // coefficients can sit ten orders of magnitude below their slack); drop
    // them instead of handing them to the interior-point iteration.
    auto push_unless_trivial = [&](LinearConstraint row) {
        double lhs_min = 0.0;
        double row_scale = std::abs(row.rhs);
        for (std::size_t k = 0; k < cfg.K; ++k) {
            const double c = row.scalar_coeffs[a_idx[k]];
            lhs_min += std::min(c * kAlphaBox, c * (1.0 - kAlphaBox));
            row_scale = std::max(row_scale, std::abs(c));
        }
        if (lhs_min >= row.rhs) return;
        // These rows carry no slack variable, so the solver leaves them at its
        // own tolerance; ask for a strictly interior point instead.
        row.rhs += 1e-5 * row_scale;
        p.constraints.push_back(std::move(row));
    };

    if (tg.has_sensing_covariance) {
        const CMatrix rx = covariance_rx(sol);
        for (std::size_t k = 0; k < cfg.K; ++k) {
            const double th = cfg.upsilon_th();
            LinearConstraint row = p.make_row();
            for (std::size_t i = 0; i < cfg.K; ++i) {
                const CMatrix gu = ch.G_k[i].adjoint() * sol.u_k[k];
                const double coeff = quad(gu, rx);
                row.scalar_coeffs[a_idx[i]] += i == k ? coeff : -th * coeff;
            }
            const CMatrix su = ch.G_SI * sol.u_k[k];
            row.sense = Sense::GE;
            row.rhs = th * (cfg.beta * quad(su, rx) + s2);
            row.label = "sens_" + std::to_string(k + 1);
            push_unless_trivial(std::move(row));
        }
    }

    if (tg.has_tag_rate) {
        double leak = cfg.delta_c * beam_power(ch.f0, sol.w_c);
        for (const CMatrix& w : sol.w_l) leak += cfg.delta_p * beam_power(ch.f0, w);
        leak += cfg.delta_s * quad(ch.f0, sol.S);
        // Normalize by the largest signal power so the slack variable lives in
        // O(1) units; raw powers near 1e-12 would leave t1 unresolvable at the
        // solver's duality-gap tolerance.
        double tag_scale = 0.0;
        for (double pk : p_tag) tag_scale = std::max(tag_scale, pk);
        if (tag_scale <= 0.0) tag_scale = 1.0;
        for (std::size_t k = 0; k < cfg.K; ++k) {
            const double th = cfg.gamma_t_th();
            LinearConstraint row = p.make_row();
            row.scalar_coeffs[a_idx[k]] = p_tag[k] / tag_scale;
            for (std::size_t i = 0; i < cfg.K; ++i)
                if (i != k) row.scalar_coeffs[a_idx[i]] = -th * p_tag[i] / tag_scale;
            row.scalar_coeffs[t1_idx] = -1.0;
            row.sense = Sense::GE;
            row.rhs = th * (leak + s2) / tag_scale + 1e-5;
            row.label = "tag_" + std::to_string(k + 1);
            p.constraints.push_back(row);
        }
    }

    if (tg.has_common_stream) {
        double c_sum = 0.0;
        for (double c : sol.C) c_sum += c;
        const double th = std::pow(2.0, c_sum) - 1.0;
        if (th > 0.0)
            for (std::size_t l = 0; l < cfg.L; ++l) {
                LinearConstraint row = p.make_row();
                double base = s2;
                for (const CMatrix& w : sol.w_l) base += beam_power(ch.f_l[l], w);
                base += cfg.delta_s * quad(ch.f_l[l], sol.S);
                for (std::size_t k = 0; k < cfg.K; ++k)
                    row.scalar_coeffs[a_idx[k]] =
                        -th * full_signal_power(ch.h_lk[l][k], sol);
                row.sense = Sense::GE;
                row.rhs = th * base - beam_power(ch.f_l[l], sol.w_c);
                row.label = "common_" + std::to_string(l + 1);
                push_unless_trivial(std::move(row));
            }
    }

    if (tg.has_private_streams)
        for (std::size_t l = 0; l < cfg.L; ++l) {
            const double th = std::pow(2.0, cfg.r_p_th - sol.C[l]) - 1.0;
            if (th <= 0.0) continue;
            LinearConstraint row = p.make_row();
            const CMatrix& f = ch.f_l[l];
            double base = s2;
            if (tg.access == AccessMode::Noma) {
                for (std::size_t j = 0; j < l; ++j)
                    base += cfg.delta_p * beam_power(f, sol.w_l[j]);
                for (std::size_t j = l + 1; j < cfg.L; ++j) base += beam_power(f, sol.w_l[j]);
            } else {
                base += cfg.delta_c * beam_power(f, sol.w_c);
                for (std::size_t j = 0; j < cfg.L; ++j)
                    if (j != l) base += beam_power(f, sol.w_l[j]);
            }
            base += cfg.delta_s * quad(f, sol.S);
            for (std::size_t k = 0; k < cfg.K; ++k) {
                double pickup = 0.0;
                const CMatrix& h = ch.h_lk[l][k];
                if (tg.access != AccessMode::Noma) pickup += beam_power(h, sol.w_c);
                for (const CMatrix& w : sol.w_l) pickup += beam_power(h, w);
                pickup += quad(h, sol.S);
                row.scalar_coeffs[a_idx[k]] = -th * pickup;
            }
            row.sense = Sense::GE;
            row.rhs = th * base - beam_power(f, sol.w_l[l]);
            row.label = "priv_" + std::to_string(l + 1);
            push_unless_trivial(std::move(row));
        }

    const double p_th = eh_input_threshold(cfg);
    double eh_scale = 0.0;
    for (double pk : p_in) eh_scale = std::max(eh_scale, pk);
    eh_scale = std::max(eh_scale, p_th);
    if (eh_scale <= 0.0) eh_scale = 1.0;
    for (std::size_t k = 0; k < cfg.K; ++k) {
        LinearConstraint row = p.make_row();
        row.scalar_coeffs[a_idx[k]] = -p_in[k] / eh_scale;
        row.scalar_coeffs[t2_idx] = -1.0;
        row.sense = Sense::GE;
        row.rhs = (p_th - p_in[k]) / eh_scale + 1e-5;
        row.label = "eh_" + std::to_string(k + 1);
        p.constraints.push_back(row);
    }

    p.objective_scalars.assign(p.scalar_vars.size(), 0.0);
    if (tg.has_tag_rate) p.objective_scalars[t1_idx] = -cfg.lambda1;
    p.objective_scalars[t2_idx] = -cfg.lambda2;

    const ConicSolution lp = solve(p);
    // A stalled solve is still usable when its iterate is good enough; the
    // exact margin recheck below decides, so only a certified infeasibility
    // rejects outright.
    if (lp.status == SolveStatus::Infeasible) return "alpha:keep";
    std::vector<double> alpha_new(cfg.K);
    for (std::size_t k = 0; k < cfg.K; ++k)
        alpha_new[k] = std::clamp(lp.scalar_values.at("alpha_" + std::to_string(k + 1)),
                                  kAlphaBox, 1.0 - kAlphaBox);
    // Interior-point iterates are feasible only to solver tolerance; walk back
    // toward the incumbent until the exact margins stop regressing.
    const double before = constraint_margins(ch, sol, cfg).worst;
    const double gate = std::max(before, 1e-7);
    std::string verdict = "alpha:keep";
    BeamformingSolution probe = sol;
    for (double theta : {1.0, 0.7, 0.4, 0.2, 0.1, 0.03, 0.01}) {
        for (std::size_t k = 0; k < cfg.K; ++k)
            probe.alpha[k] = sol.alpha[k] + theta * (alpha_new[k] - sol.alpha[k]);
        if (constraint_margins(ch, probe, cfg).worst <= gate) {
            sol.alpha = probe.alpha;
            verdict = "alpha:ok";
            break;
        }
    }

    // The slack LP balances margins but is blind to transmit power, which
    // leaves the outer loop zigzagging: the beams shrink a little, the LP
    // answers with the same vertex, repeat. Close the loop here by searching
    // the reflection coefficients for the smallest uniform power scale that
    // stays feasible with the current beam shapes, then taking that rescale.
    probe = sol;
    auto scale_needed = [&](const std::vector<double>& a) {
        probe.alpha = a;
        return min_feasible_scale(ch, probe, cfg);
    };
    std::vector<double> a_best = sol.alpha;
    double tau_best = scale_needed(a_best);
    if (std::isfinite(tau_best)) {
        constexpr double kGolden = 0.6180339887498949;
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t k = 0; k < cfg.K; ++k) {
                std::vector<double> a = a_best;
                double lo = kAlphaBox, hi = 1.0 - kAlphaBox;
                double m1 = hi - kGolden * (hi - lo), m2 = lo + kGolden * (hi - lo);
                a[k] = m1;
                double f1 = scale_needed(a);
                a[k] = m2;
                double f2 = scale_needed(a);
                for (int it = 0; it < 24; ++it) {
                    if (f1 <= f2) {
                        hi = m2;
                        m2 = m1;
                        f2 = f1;
                        m1 = hi - kGolden * (hi - lo);
                        a[k] = m1;
                        f1 = scale_needed(a);
                    } else {
                        lo = m1;
                        m1 = m2;
                        f1 = f2;
                        m2 = lo + kGolden * (hi - lo);
                        a[k] = m2;
                        f2 = scale_needed(a);
                    }
                }
                a[k] = f1 <= f2 ? m1 : m2;
                const double f = std::min(f1, f2);
                if (f < tau_best) {
                    tau_best = f;
                    a_best = a;
                }
            }
        // Keep a sliver of headroom: landing exactly on the boundary starves
        // the next transmit solve of an interior starting point.
        if (tau_best * 1.001 < 1.0) {
            probe.alpha = a_best;
            BeamformingSolution stepped = scaled(probe, tau_best * 1.001);
            if (constraint_margins(ch, stepped, cfg).worst <= gate) {
                sol = stepped;
                state.objective = std::real(covariance_rx(sol).trace());
                return "alpha:ok";
            }
        }
    }
    return verdict;
}

BeamformingSolution initialize_feasible(const ChannelSet& ch, const SystemConfig& cfg,
                                        Rng& rng) {
    (void)rng;
    const SchemeToggles tg = toggles_for(cfg.scheme);
    const std::size_t m_tx = ch.G_SI.rows();
    BeamformingSolution sol = BeamformingSolution::zeros(cfg);

    const double f0n2 = norm(ch.f0) * norm(ch.f0);
    auto project = [&](const CMatrix& v) {
        if (f0n2 <= 0.0) return v;
        return v - ch.f0 * (dot(ch.f0, v) / f0n2);
    };
    auto unit = [](const CMatrix& v) {
        const double n = norm(v);
        if (n <= 0.0) return v;
        return v * (1.0 / n);
    };

    // Direction templates, all orthogonal to the reader channel so that the
    // residual direct-link leakage does not cap the tag SINR.
    CMatrix dir_c(m_tx, 1);
    std::vector<CMatrix> dir_l(cfg.L, CMatrix(m_tx, 1));
    CMatrix s_dir(m_tx, m_tx);
    if (tg.has_common_stream) {
        CMatrix sum(m_tx, 1);
        for (const CMatrix& f : ch.f_l) sum += f;
        dir_c = unit(project(sum));
        if (norm(dir_c) == 0.0) {
            CMatrix e1(m_tx, 1);
            e1(0, 0) = 1.0;
            dir_c = unit(project(e1));
        }
    }
    if (tg.has_private_streams)
        for (std::size_t l = 0; l < cfg.L; ++l) {
            // Zero-forcing flavor: private beams avoid the reader channel and
            // the other users, otherwise the rate saturates below threshold.
            std::vector<CMatrix> basis;
            auto absorb = [&](const CMatrix& v) {
                CMatrix r = v;
                for (const CMatrix& b : basis) r -= b * dot(b, r);
                const double n = norm(r);
                if (n > 1e-12 * norm(v) && n > 0.0) basis.push_back(r * (1.0 / n));
            };
            if (f0n2 > 0.0) absorb(ch.f0);
            for (std::size_t j = 0; j < cfg.L; ++j)
                if (j != l) absorb(ch.f_l[j]);
            CMatrix d = ch.f_l[l];
            for (const CMatrix& b : basis) d -= b * dot(b, d);
            dir_l[l] = unit(d);
        }
    if (tg.has_sensing_covariance) {
        if (cfg.K == 0) {
            s_dir = CMatrix::identity(m_tx) * (1.0 / static_cast<double>(m_tx));
        } else {
            // Weight each tag beam inversely to its reader-side cascade power
            // so the two tag SINRs start balanced.
            double wsum = 0.0;
            std::vector<double> weight(cfg.K);
            double w_max = 0.0;
            for (std::size_t k = 0; k < cfg.K; ++k) {
                const double hn = norm(ch.h_k[k]) * norm(ch.h_k[k]);
                weight[k] = 1.0 / std::max(hn, 1e-300);
                w_max = std::max(w_max, weight[k]);
            }
            // Cap the asymmetry so the lightly weighted tag keeps enough
            // illumination for its sensing SINR.
            for (std::size_t k = 0; k < cfg.K; ++k) {
                weight[k] = std::max(weight[k], w_max / 2.0);
                wsum += weight[k];
            }
            std::vector<CMatrix> avoid;
            auto absorb = [&](const CMatrix& v) {
                CMatrix r = v;
                for (const CMatrix& b : avoid) r -= b * dot(b, r);
                const double n = norm(r);
                if (n > 1e-12 * norm(v) && n > 0.0) avoid.push_back(r * (1.0 / n));
            };
            if (f0n2 > 0.0) absorb(ch.f0);
            for (const CMatrix& f : ch.f_l) absorb(f);
            for (std::size_t k = 0; k < cfg.K; ++k) {
                CMatrix b = steering_vector(ch.tag_angles[k], m_tx, 1.0);
                for (const CMatrix& v : avoid) b -= v * dot(v, b);
                s_dir += outer(unit(b)) * (weight[k] / wsum);
            }
            const double tr = std::real(s_dir.trace());
            if (tr > 0.0) s_dir = s_dir * (1.0 / tr);
        }
    }

    double w_share = 0.0;
    const double s_share = tg.has_sensing_covariance ? 12.0 : 0.0;
    const double c_share = tg.has_common_stream ? 1.0 : 0.0;
    const double l_share = tg.has_private_streams ? 2.0 : 0.0;
    w_share = s_share + c_share + l_share;
    if (w_share == 0.0) w_share = 1.0;

    auto apply_scale = [&](BeamformingSolution& s, double total) {
        if (tg.has_common_stream) s.w_c = dir_c * std::sqrt(total * c_share / w_share);
        if (tg.has_private_streams)
            for (std::size_t l = 0; l < cfg.L; ++l)
                s.w_l[l] = dir_l[l] *
                           std::sqrt(total * l_share / (w_share * static_cast<double>(cfg.L)));
        if (tg.has_sensing_covariance) s.S = s_dir * (total * s_share / w_share);
    };

    auto feasible_at = [&](BeamformingSolution& s, double total) {
        apply_scale(s, total);
        if (tg.has_sensing_covariance)
            for (std::size_t k = 0; k < cfg.K; ++k)
                s.u_k[k] = best_receive_beamformer(ch, s, cfg, k);
        return constraint_margins(ch, s, cfg).feasible(1e-9);
    };

    auto search = [&](BeamformingSolution& s) -> bool {
        double hi = 1e-6;
        while (!feasible_at(s, hi)) {
            if (hi >= kInitPowerCap) return false;
            hi = std::min(hi * 2.0, kInitPowerCap);
        }
        double lo = hi / 2.0;
        for (int it = 0; it < 40; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (feasible_at(s, mid)) hi = mid;
            else lo = mid;
        }
        feasible_at(s, hi);
        return true;
    };

    if (search(sol)) return sol;

    // The symmetric split fails when the reader-side cascades are very
    // asymmetric; rebalance the reflection coefficients with the slack LP at
    // the power cap and search again.
    if (cfg.K >= 1) {
        AoState tmp;
        tmp.solution = sol;
        apply_scale(tmp.solution, kInitPowerCap);
        if (tg.has_sensing_covariance)
            for (std::size_t k = 0; k < cfg.K; ++k)
                tmp.solution.u_k[k] = best_receive_beamformer(ch, tmp.solution, cfg, k);
        if (optimize_reflection_coefficients(ch, tmp, cfg) == "alpha:ok") {
            sol.alpha = tmp.solution.alpha;
            if (search(sol)) return sol;
        }
    }

    throw InfeasibleAtCap("initialize_feasible: no feasible scale below 1e3 W");
}

std::pair<BeamformingSolution, ConvergenceTrace> run_ao(const ChannelSet& raw_ch,
                                                        const SystemConfig& cfg, Rng& rng) {
    const ChannelSet ch = prepare_channels(raw_ch, cfg.scheme);
    AoState state;
    state.solution = initialize_feasible(ch, cfg, rng);
    state.objective = std::real(covariance_rx(state.solution).trace());
    refresh_anchors(ch, state, cfg);
    state.trace.entries.push_back(
        {0, state.objective, constraint_margins(ch, state.solution, cfg).worst, "init", 0.0});

    std::vector<double> prev_alpha = state.solution.alpha;
    for (std::size_t t = 1; t <= cfg.max_ao_iterations; ++t) {
        const auto tick = std::chrono::steady_clock::now();
        const double prev = state.objective;
        optimize_receive_beamformers(ch, state, cfg);
        const std::string s2 = solve_transmit_subproblem(ch, state, cfg, rng);
        std::string s3 = optimize_reflection_coefficients(ch, state, cfg);
        refresh_anchors(ch, state, cfg);

        // The two inner problems are individually converged long before the
        // pair is: the reflection coefficients creep along a valley and every
        // small move unlocks another sliver of transmit power. Jump ahead
        // along that drift direction on a scratch copy and keep the result
        // only when it genuinely lands lower.
        double drift = 0.0;
        for (std::size_t k = 0; k < cfg.K; ++k)
            drift = std::max(drift, std::abs(state.solution.alpha[k] - prev_alpha[k]));
        if (t >= 2 && drift > 1e-5) {
            for (double eta : {16.0, 8.0, 4.0}) {
                AoState probe = state;
                for (std::size_t k = 0; k < cfg.K; ++k)
                    probe.solution.alpha[k] =
                        std::clamp(prev_alpha[k] + (1.0 + eta) * (state.solution.alpha[k] -
                                                                  prev_alpha[k]),
                                   kAlphaBox, 1.0 - kAlphaBox);
                const double tau = min_feasible_scale(ch, probe.solution, cfg);
                if (!std::isfinite(tau) || tau > 1.05) continue;
                probe.solution = scaled(probe.solution, tau * 1.001);
                probe.objective = std::real(covariance_rx(probe.solution).trace());
                refresh_anchors(ch, probe, cfg);
                solve_transmit_subproblem(ch, probe, cfg, rng);
                if (probe.objective < state.objective * (1.0 - 1e-3)) {
                    optimize_reflection_coefficients(ch, probe, cfg);
                    refresh_anchors(ch, probe, cfg);
                    state = probe;
                    s3 += " alpha:jump";
                    break;
                }
            }
        }
        prev_alpha = state.solution.alpha;
        state.iteration = t;
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - tick).count();
        state.trace.entries.push_back({t, state.objective,
                                       constraint_margins(ch, state.solution, cfg).worst,
                                       "u:ok " + s2 + " " + s3, wall});
        const double rel = (prev - state.objective) / std::max(state.objective, 1e-30);
        if (rel < cfg.epsilon) break;
    }
    return {state.solution, state.trace};
}

}  // namespace isabc
