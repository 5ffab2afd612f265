#include "isabc/system_model.hpp"

#include "isabc/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace isabc {

double SystemConfig::sigma2() const {
    const double dbm = -174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
    return std::pow(10.0, (dbm - 30.0) / 10.0);
}

double SystemConfig::upsilon_th() const { return std::pow(2.0, r_s_th) - 1.0; }
double SystemConfig::gamma_t_th() const { return std::pow(2.0, r_t_th) - 1.0; }

BeamformingSolution BeamformingSolution::zeros(const SystemConfig& cfg) {
    BeamformingSolution sol;
    sol.w_c = CMatrix(cfg.M, 1);
    sol.w_l.assign(cfg.L, CMatrix(cfg.M, 1));
    sol.S = CMatrix(cfg.M, cfg.M);
    sol.u_k.assign(cfg.K, CMatrix(cfg.N, 1));
    for (std::size_t k = 0; k < cfg.K; ++k) sol.u_k[k](0, 0) = 1.0;
    sol.alpha.assign(cfg.K, 0.5);
    sol.C.assign(cfg.L, 0.0);
    return sol;
}

namespace {

double quad(const CMatrix& v, const CMatrix& s) {
    return std::real(std::real(dot(v, s * v)));
}

double beam_power(const CMatrix& v, const CMatrix& w) {
    return std::norm(dot(v, w));
}

// |a^H w_c|^2 + sum_j |a^H w_j|^2 + a^H S a: power a receiver at channel a
// picks up from the full transmit signal.
double full_signal_power(const CMatrix& a, const BeamformingSolution& sol) {
    double p = beam_power(a, sol.w_c);
    for (const CMatrix& w : sol.w_l) p += beam_power(a, w);
    p += quad(a, sol.S);
    return p;
}

double backscatter_interference(const ChannelSet& ch, const BeamformingSolution& sol,
                                std::size_t l) {
    double p = 0.0;
    for (std::size_t k = 0; k < ch.h_lk[l].size(); ++k)
        p += sol.alpha[k] * full_signal_power(ch.h_lk[l][k], sol);
    return p;
}

}  // namespace

CMatrix covariance_rx(const BeamformingSolution& sol) {
    CMatrix rx = outer(sol.w_c);
    for (const CMatrix& w : sol.w_l) rx += outer(w);
    rx += hermitian_part(sol.S);
    return rx;
}

double sinr_common(const ChannelSet& ch, const BeamformingSolution& sol,
                   const SystemConfig& cfg, std::size_t l) {
    const CMatrix& f = ch.f_l[l];
    const double num = beam_power(f, sol.w_c);
    double den = cfg.sigma2();
    for (const CMatrix& w : sol.w_l) den += beam_power(f, w);
    den += cfg.delta_s * quad(f, sol.S);
    den += backscatter_interference(ch, sol, l);
    return num / den;
}

double sinr_private(const ChannelSet& ch, const BeamformingSolution& sol,
                    const SystemConfig& cfg, std::size_t l) {
    const CMatrix& f = ch.f_l[l];
    const double num = beam_power(f, sol.w_l[l]);
    double den = cfg.sigma2() + cfg.delta_c * beam_power(f, sol.w_c);
    for (std::size_t j = 0; j < sol.w_l.size(); ++j)
        if (j != l) den += beam_power(f, sol.w_l[j]);
    den += cfg.delta_s * quad(f, sol.S);
    den += backscatter_interference(ch, sol, l);
    return num / den;
}

double sinr_tag(const ChannelSet& ch, const BeamformingSolution& sol,
                const SystemConfig& cfg, std::size_t k) {
    const double num = sol.alpha[k] * full_signal_power(ch.h_k[k], sol);
    double den = cfg.sigma2();
    den += cfg.delta_c * beam_power(ch.f0, sol.w_c);
    for (const CMatrix& w : sol.w_l) den += cfg.delta_p * beam_power(ch.f0, w);
    den += cfg.delta_s * quad(ch.f0, sol.S);
    for (std::size_t i = 0; i < ch.h_k.size(); ++i)
        if (i != k) den += sol.alpha[i] * full_signal_power(ch.h_k[i], sol);
    return num / den;
}

double sinr_sensing(const ChannelSet& ch, const BeamformingSolution& sol,
                    const SystemConfig& cfg, std::size_t k) {
    const CMatrix rx = covariance_rx(sol);
    const CMatrix& u = sol.u_k[k];
    const CMatrix gk_u = ch.G_k[k].adjoint() * u;  // M x 1
    const double num = sol.alpha[k] * quad(gk_u, rx);
    double den = cfg.sigma2() * std::real(dot(u, u));
    for (std::size_t i = 0; i < ch.G_k.size(); ++i) {
        if (i == k) continue;
        const CMatrix gi_u = ch.G_k[i].adjoint() * u;
        den += sol.alpha[i] * quad(gi_u, rx);
    }
    const CMatrix gsi_u = ch.G_SI * u;  // M x 1; the BS hears G_SI^H x
    den += cfg.beta * quad(gsi_u, rx);
    return num / den;
}

double noma_sinr(const ChannelSet& ch, const BeamformingSolution& sol,
                 const SystemConfig& cfg, std::size_t l) {
    for (std::size_t j = 0; j + 1 < ch.f_l.size(); ++j)
        if (norm(ch.f_l[j]) < norm(ch.f_l[j + 1]) - 1e-15)
            throw UnsortedUsers("noma_sinr: users must be sorted by descending gain");
    const CMatrix& f = ch.f_l[l];
    const double num = beam_power(f, sol.w_l[l]);
    double den = cfg.sigma2();
    for (std::size_t j = 0; j < l; ++j) den += cfg.delta_p * beam_power(f, sol.w_l[j]);
    for (std::size_t j = l + 1; j < sol.w_l.size(); ++j) den += beam_power(f, sol.w_l[j]);
    den += cfg.delta_s * quad(f, sol.S);
    for (std::size_t k = 0; k < ch.h_lk[l].size(); ++k) {
        double p = 0.0;
        for (const CMatrix& w : sol.w_l) p += beam_power(ch.h_lk[l][k], w);
        p += quad(ch.h_lk[l][k], sol.S);
        den += sol.alpha[k] * p;
    }
    return num / den;
}

double rate(double sinr) {
    if (sinr < 0.0) throw NegativeSinr("rate: negative SINR");
    return std::log2(1.0 + sinr);
}

double incident_power(const ChannelSet& ch, const BeamformingSolution& sol, std::size_t k) {
    return full_signal_power(ch.g_fk[k], sol);
}

namespace {

double sigmoid_omega(const SystemConfig& cfg) {
    return 1.0 / (1.0 + std::exp(cfg.eh_a * cfg.eh_b));
}

double phi(double p, const SystemConfig& cfg) {
    const double omega = sigmoid_omega(cfg);
    const double psi = cfg.eh_m_sat / (1.0 + std::exp(-cfg.eh_a * (p - cfg.eh_b)));
    return (psi - cfg.eh_m_sat * omega) / (1.0 - omega);
}

double phi_inverse(double h, const SystemConfig& cfg) {
    const double omega = sigmoid_omega(cfg);
    const double psi = h * (1.0 - omega) + cfg.eh_m_sat * omega;
    return cfg.eh_b - std::log(cfg.eh_m_sat / psi - 1.0) / cfg.eh_a;
}

}  // namespace

double harvested_power(double p_in, double alpha_k, const SystemConfig& cfg) {
    const double split = (1.0 - alpha_k) * p_in;
    if (cfg.eh_model == EhModel::Linear) return cfg.eh_eta * split;
    return phi(split, cfg);
}

double eh_input_threshold(const SystemConfig& cfg) {
    if (cfg.eh_model == EhModel::Linear) return cfg.p_b_w / cfg.eh_eta;
    return phi_inverse(cfg.p_b_w, cfg);
}

double eh_margin(const ChannelSet& ch, const BeamformingSolution& sol,
                 const SystemConfig& cfg, std::size_t k) {
    return (1.0 - sol.alpha[k]) * incident_power(ch, sol, k) - eh_input_threshold(cfg);
}

SinrReport evaluate(const ChannelSet& ch, const BeamformingSolution& sol,
                    const SystemConfig& cfg) {
    SinrReport rep;
    rep.gamma_c.resize(cfg.L);
    rep.gamma_p.resize(cfg.L);
    rep.R_p_total.resize(cfg.L);
    for (std::size_t l = 0; l < cfg.L; ++l) {
        rep.gamma_c[l] = sinr_common(ch, sol, cfg, l);
        rep.gamma_p[l] = cfg.scheme == Scheme::NomaIsabc ? noma_sinr(ch, sol, cfg, l)
                                                         : sinr_private(ch, sol, cfg, l);
        rep.R_p_total[l] = sol.C[l] + rate(rep.gamma_p[l]);
    }
    double r_c = std::numeric_limits<double>::infinity();
    for (double g : rep.gamma_c) r_c = std::min(r_c, rate(g));
    rep.R_c = cfg.L > 0 ? r_c : 0.0;

    rep.gamma_t.resize(cfg.K);
    rep.upsilon.resize(cfg.K);
    rep.R_t.resize(cfg.K);
    rep.R_s.resize(cfg.K);
    rep.p_in.resize(cfg.K);
    rep.p_harv.resize(cfg.K);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        rep.gamma_t[k] = sinr_tag(ch, sol, cfg, k);
        rep.upsilon[k] = sinr_sensing(ch, sol, cfg, k);
        rep.R_t[k] = rate(rep.gamma_t[k]);
        rep.R_s[k] = rate(rep.upsilon[k]);
        rep.p_in[k] = incident_power(ch, sol, k);
        rep.p_harv[k] = harvested_power(rep.p_in[k], sol.alpha[k], cfg);
    }
    rep.total_tx_power = std::real(covariance_rx(sol).trace());
    return rep;
}

}  // namespace isabc
