#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "isabc/channel.hpp"
#include "isabc/system_model.hpp"

#include <algorithm>
#include <cmath>

using namespace isabc;

namespace {

struct Instance {
    SystemConfig cfg;
    Topology topo;
    ChannelSet ch;
    BeamformingSolution sol;
};

Instance make_instance(std::uint64_t seed, SystemConfig cfg = SystemConfig::table_defaults()) {
    Instance inst;
    inst.cfg = cfg;
    Rng rng(seed);
    inst.topo = place_nodes(cfg, rng);
    inst.ch = build_channel_set(inst.topo, cfg, rng);
    inst.sol = BeamformingSolution::zeros(cfg);
    inst.sol.w_c = sample_gaussian_vector(cfg.M, rng) * 0.1;
    for (std::size_t l = 0; l < cfg.L; ++l)
        inst.sol.w_l[l] = sample_gaussian_vector(cfg.M, rng) * 0.1;
    CMatrix s_half = sample_gaussian_vector(cfg.M, rng) * 0.05;
    inst.sol.S = outer(s_half);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        CMatrix u = sample_gaussian_vector(cfg.N, rng);
        inst.sol.u_k[k] = u * (1.0 / norm(u));
    }
    return inst;
}

}  // namespace

TEST_CASE("covariance_rx") {
    SystemConfig cfg;
    BeamformingSolution zero = BeamformingSolution::zeros(cfg);
    CHECK(covariance_rx(zero).frobenius_norm() == 0.0);

    BeamformingSolution e1 = BeamformingSolution::zeros(cfg);
    e1.w_c(0, 0) = 1.0;
    CMatrix rx = covariance_rx(e1);
    CHECK(std::abs(rx(0, 0) - cplx(1.0, 0.0)) < 1e-15);
    CHECK(rx.frobenius_norm() == doctest::Approx(1.0));

    Instance inst = make_instance(3);
    double power = norm(inst.sol.w_c) * norm(inst.sol.w_c);
    for (const CMatrix& w : inst.sol.w_l) power += norm(w) * norm(w);
    power += std::real(inst.sol.S.trace());
    CHECK(std::real(covariance_rx(inst.sol).trace()) == doctest::Approx(power).epsilon(1e-12));
}

TEST_CASE("sinr_common basic") {
    Instance inst = make_instance(5);
    BeamformingSolution no_c = inst.sol;
    no_c.w_c = CMatrix(inst.cfg.M, 1);
    CHECK(sinr_common(inst.ch, no_c, inst.cfg, 0) == 0.0);

    SystemConfig small;
    small.L = 1;
    small.K = 0;
    Instance tiny = make_instance(6, small);
    tiny.sol.S = CMatrix(small.M, small.M);
    tiny.sol.w_l[0] = CMatrix(small.M, 1);
    const double expected =
        std::norm(dot(tiny.ch.f_l[0], tiny.sol.w_c)) / small.sigma2();
    CHECK(sinr_common(tiny.ch, tiny.sol, small, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("sinr_common trace-form identity") {
    Instance inst = make_instance(7);
    const CMatrix& f = inst.ch.f_l[1];
    const CMatrix wc_mat = outer(inst.sol.w_c);
    const double direct = std::norm(dot(f, inst.sol.w_c));
    const double traced = inner(outer(f), wc_mat);
    CHECK(direct == doctest::Approx(traced).epsilon(1e-10));
}

TEST_CASE("sinr_private") {
    SystemConfig small;
    small.L = 1;
    small.K = 0;
    small.delta_c = 0.0;
    Instance tiny = make_instance(8, small);
    tiny.sol.S = CMatrix(small.M, small.M);
    const double expected =
        std::norm(dot(tiny.ch.f_l[0], tiny.sol.w_l[0])) / small.sigma2();
    CHECK(sinr_private(tiny.ch, tiny.sol, small, 0) == doctest::Approx(expected).epsilon(1e-12));

    Instance inst = make_instance(9);
    SystemConfig perfect = inst.cfg;
    perfect.delta_c = 0.0;
    SystemConfig worst = inst.cfg;
    worst.delta_c = 1.0;
    CHECK(sinr_private(inst.ch, inst.sol, worst, 0) <=
          sinr_private(inst.ch, inst.sol, perfect, 0));
}

TEST_CASE("sinr_private dual coding") {
    Instance inst = make_instance(10);
    const std::size_t l = 2;
    const CMatrix& f = inst.ch.f_l[l];
    double den = inst.cfg.delta_c * std::norm(dot(f, inst.sol.w_c));
    for (std::size_t j = 0; j < inst.cfg.L; ++j)
        if (j != l) den += std::norm(dot(f, inst.sol.w_l[j]));
    den += inst.cfg.delta_s * std::real(dot(f, inst.sol.S * f));
    for (std::size_t k = 0; k < inst.cfg.K; ++k) {
        const CMatrix& h = inst.ch.h_lk[l][k];
        double p = std::norm(dot(h, inst.sol.w_c));
        for (const CMatrix& w : inst.sol.w_l) p += std::norm(dot(h, w));
        p += std::real(dot(h, inst.sol.S * h));
        den += inst.sol.alpha[k] * p;
    }
    den += inst.cfg.sigma2();
    const double expected = std::norm(dot(f, inst.sol.w_l[l])) / den;
    CHECK(sinr_private(inst.ch, inst.sol, inst.cfg, l) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("sinr_tag") {
    Instance inst = make_instance(11);
    BeamformingSolution off = inst.sol;
    off.alpha[0] = 0.0;
    CHECK(sinr_tag(inst.ch, off, inst.cfg, 0) == 0.0);

    SystemConfig one_tag;
    one_tag.K = 1;
    one_tag.delta_c = one_tag.delta_p = one_tag.delta_s = 0.0;
    Instance tiny = make_instance(12, one_tag);
    const CMatrix& h = tiny.ch.h_k[0];
    double num = std::norm(dot(h, tiny.sol.w_c));
    for (const CMatrix& w : tiny.sol.w_l) num += std::norm(dot(h, w));
    num += std::real(dot(h, tiny.sol.S * h));
    num *= tiny.sol.alpha[0];
    CHECK(sinr_tag(tiny.ch, tiny.sol, one_tag, 0) ==
          doctest::Approx(num / one_tag.sigma2()).epsilon(1e-12));

    // Strictly increasing in alpha_k when other-tag terms are absent.
    double prev = 0.0;
    for (double a = 0.1; a < 1.0; a += 0.1) {
        BeamformingSolution probe = tiny.sol;
        probe.alpha[0] = a;
        const double g = sinr_tag(tiny.ch, probe, one_tag, 0);
        CHECK(g > prev);
        prev = g;
    }
}

TEST_CASE("sinr_sensing") {
    Instance inst = make_instance(13);
    const double base = sinr_sensing(inst.ch, inst.sol, inst.cfg, 0);
    BeamformingSolution rotated = inst.sol;
    rotated.u_k[0] *= std::exp(cplx(0.0, 1.1));
    CHECK(sinr_sensing(inst.ch, rotated, inst.cfg, 0) == doctest::Approx(base).epsilon(1e-12));

    SystemConfig quiet;
    quiet.K = 1;
    quiet.beta = 0.0;
    Instance tiny = make_instance(14, quiet);
    const CMatrix rx = covariance_rx(tiny.sol);
    const CMatrix gu = tiny.ch.G_k[0].adjoint() * tiny.sol.u_k[0];
    const double expected = tiny.sol.alpha[0] * std::real(dot(gu, rx * gu)) / quiet.sigma2();
    CHECK(sinr_sensing(tiny.ch, tiny.sol, quiet, 0) ==
          doctest::Approx(expected).epsilon(1e-12));

    // Non-increasing in beta.
    SystemConfig noisy = inst.cfg;
    noisy.beta = 1e-6;
    CHECK(sinr_sensing(inst.ch, inst.sol, noisy, 0) <= base);
}

TEST_CASE("noma_sinr") {
    SystemConfig cfg;
    cfg.L = 2;
    Instance inst = make_instance(15, cfg);
    if (norm(inst.ch.f_l[0]) < norm(inst.ch.f_l[1]))
        std::swap(inst.ch.f_l[0], inst.ch.f_l[1]);

    SystemConfig perfect = cfg;
    perfect.delta_p = 0.0;
    const double g2 = noma_sinr(inst.ch, inst.sol, perfect, 1);
    const CMatrix& f = inst.ch.f_l[1];
    double den = perfect.sigma2() + perfect.delta_s * std::real(dot(f, inst.sol.S * f));
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const CMatrix& h = inst.ch.h_lk[1][k];
        double p = 0.0;
        for (const CMatrix& w : inst.sol.w_l) p += std::norm(dot(h, w));
        p += std::real(dot(h, inst.sol.S * h));
        den += inst.sol.alpha[k] * p;
    }
    CHECK(g2 == doctest::Approx(std::norm(dot(f, inst.sol.w_l[1])) / den).epsilon(1e-12));

    std::swap(inst.ch.f_l[0], inst.ch.f_l[1]);
    CHECK_THROWS_AS(noma_sinr(inst.ch, inst.sol, cfg, 0), UnsortedUsers);
}

TEST_CASE("noma_sinr single user") {
    SystemConfig cfg;
    cfg.L = 1;
    Instance inst = make_instance(16, cfg);
    const CMatrix& f = inst.ch.f_l[0];
    double den = cfg.sigma2() + cfg.delta_s * std::real(dot(f, inst.sol.S * f));
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const CMatrix& h = inst.ch.h_lk[0][k];
        double p = std::norm(dot(h, inst.sol.w_l[0]));
        p += std::real(dot(h, inst.sol.S * h));
        den += inst.sol.alpha[k] * p;
    }
    CHECK(noma_sinr(inst.ch, inst.sol, cfg, 0) ==
          doctest::Approx(std::norm(dot(f, inst.sol.w_l[0])) / den).epsilon(1e-12));
}

TEST_CASE("rate") {
    CHECK(rate(0.0) == 0.0);
    CHECK(rate(1.0) == doctest::Approx(1.0));
    CHECK(rate(3.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(rate(-0.1), NegativeSinr);
}

TEST_CASE("incident power") {
    SystemConfig cfg;
    Instance inst = make_instance(17, cfg);
    BeamformingSolution zero = BeamformingSolution::zeros(cfg);
    CHECK(incident_power(inst.ch, zero, 0) == 0.0);

    const CMatrix rx = covariance_rx(inst.sol);
    const double traced = inner(outer(inst.ch.g_fk[0]), rx);
    CHECK(incident_power(inst.ch, inst.sol, 0) == doctest::Approx(traced).epsilon(1e-10));
}

TEST_CASE("harvested power") {
    SystemConfig cfg;
    CHECK(harvested_power(0.0, 0.5, cfg) == doctest::Approx(0.0).epsilon(1e-12));

    SystemConfig linear = cfg;
    linear.eh_model = EhModel::Linear;
    linear.eh_eta = 1.0;
    CHECK(harvested_power(2e-3, 0.0, linear) == doctest::Approx(2e-3));

    // Inverse round trip at the activation threshold.
    const double pth = eh_input_threshold(cfg);
    CHECK(harvested_power(pth, 0.0, cfg) == doctest::Approx(cfg.p_b_w).epsilon(1e-12));
}

TEST_CASE("eh margin") {
    SystemConfig cfg;
    Instance inst = make_instance(18, cfg);
    const double pin = incident_power(inst.ch, inst.sol, 0);
    const double pth = eh_input_threshold(cfg);

    BeamformingSolution greedy = inst.sol;
    greedy.alpha[0] = 1.0 - 1e-12;
    CHECK(eh_margin(inst.ch, greedy, cfg, 0) < 0.0);

    CHECK(eh_margin(inst.ch, inst.sol, cfg, 0) ==
          doctest::Approx((1.0 - inst.sol.alpha[0]) * pin - pth).epsilon(1e-12));

    if (pin > pth) {
        BeamformingSolution boundary = inst.sol;
        boundary.alpha[0] = 1.0 - pth / pin;
        CHECK(eh_margin(inst.ch, boundary, cfg, 0) == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("evaluate composition") {
    SystemConfig cfg;
    Instance inst = make_instance(19, cfg);
    BeamformingSolution zero = BeamformingSolution::zeros(cfg);
    SinrReport zrep = evaluate(inst.ch, zero, cfg);
    CHECK(zrep.total_tx_power == 0.0);
    for (double g : zrep.gamma_c) CHECK(g == 0.0);
    for (double g : zrep.gamma_t) CHECK(g == 0.0);

    SinrReport rep = evaluate(inst.ch, inst.sol, cfg);
    for (std::size_t l = 0; l < cfg.L; ++l) {
        CHECK(rep.gamma_c[l] == sinr_common(inst.ch, inst.sol, cfg, l));
        CHECK(rep.gamma_p[l] == sinr_private(inst.ch, inst.sol, cfg, l));
    }
    for (std::size_t k = 0; k < cfg.K; ++k) {
        CHECK(rep.gamma_t[k] == sinr_tag(inst.ch, inst.sol, cfg, k));
        CHECK(rep.upsilon[k] == sinr_sensing(inst.ch, inst.sol, cfg, k));
        CHECK(rep.p_in[k] == incident_power(inst.ch, inst.sol, k));
    }
    double rc = 1e300;
    for (double g : rep.gamma_c) rc = std::min(rc, rate(g));
    CHECK(rep.R_c == doctest::Approx(rc));
    CHECK(rep.total_tx_power ==
          doctest::Approx(std::real(covariance_rx(inst.sol).trace())).epsilon(1e-12));
}

TEST_CASE("no tags collapses backscatter terms") {
    SystemConfig cfg;
    cfg.K = 0;
    Instance inst = make_instance(20, cfg);
    SinrReport rep = evaluate(inst.ch, inst.sol, cfg);
    CHECK(rep.gamma_t.empty());
    CHECK(rep.upsilon.empty());
    CHECK(rep.gamma_c[0] > 0.0);
}

TEST_CASE("vector trace duality") {
    Rng rng(2025);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t dim = 2 + rng.integer() % 7;
        CMatrix a = sample_gaussian_vector(dim, rng);
        CMatrix w = sample_gaussian_vector(dim, rng);
        const double direct = std::norm(dot(a, w));
        const double traced = inner(outer(a), outer(w));
        CHECK(std::abs(direct - traced) <= 1e-10 * std::max(1.0, std::abs(direct)));
    }
}
