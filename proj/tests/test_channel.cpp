#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "isabc/channel.hpp"

#include <cmath>

using namespace isabc;

TEST_CASE("place_nodes defaults and determinism") {
    SystemConfig cfg = SystemConfig::table_defaults();
    Rng rng(1);
    Topology topo = place_nodes(cfg, rng);
    CHECK(topo.bs_position[0] == 0.0);
    CHECK(topo.bs_position[1] == 0.0);
    CHECK(topo.reader_position[0] == 12.0);
    CHECK(topo.reader_position[1] == 0.0);
    CHECK(topo.tag_positions.size() == cfg.K);
    CHECK(topo.user_positions.size() == cfg.L);

    Rng rng2(1);
    Topology again = place_nodes(cfg, rng2);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        CHECK(topo.tag_positions[k][0] == again.tag_positions[k][0]);
        CHECK(topo.tag_angles[k] == again.tag_angles[k]);
    }
}

TEST_CASE("degenerate tag disc") {
    SystemConfig cfg;
    cfg.K = 1;
    cfg.tag_radius = 0.0;
    Rng rng(9);
    Topology topo = place_nodes(cfg, rng);
    CHECK(topo.tag_positions[0][0] == doctest::Approx(6.0));
    CHECK(topo.tag_positions[0][1] == doctest::Approx(-4.0));
    CHECK(topo.tag_angles[0] == doctest::Approx(std::atan2(-4.0, 6.0)));
}

TEST_CASE("pathloss formula") {
    SystemConfig cfg;
    CHECK(pathloss_db(1.0, cfg) == doctest::Approx(28.0 + 20.0 * std::log10(3.0)));
    CHECK(pathloss_db(10.0, cfg) - pathloss_db(5.0, cfg) ==
          doctest::Approx(22.0 * std::log10(2.0)));
    CHECK(pathloss_db(10.0, cfg) > pathloss_db(5.0, cfg));
    CHECK_THROWS_AS(pathloss_db(0.1, cfg), DistanceTooSmall);
}

TEST_CASE("steering vector") {
    CMatrix b0 = steering_vector(0.0, 4, 2.0);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(std::abs(b0(i, 0) - cplx(std::sqrt(0.5), 0.0)) < 1e-12);

    CMatrix b1 = steering_vector(M_PI / 2.0, 2, 2.0);
    CHECK(std::abs(b1(0, 0) - cplx(1.0, 0.0)) < 1e-12);
    CHECK(std::abs(b1(1, 0) + cplx(1.0, 0.0)) < 1e-12);

    for (double th : {-1.2, -0.3, 0.7, 1.4}) {
        CMatrix b = steering_vector(th, 8, 3.5);
        CHECK(norm(b) * norm(b) == doctest::Approx(3.5).epsilon(1e-12));
    }
}

TEST_CASE("rayleigh generator") {
    Rng rng(5);
    CHECK(norm(gen_rayleigh(3, 0.0, rng)) == 0.0);

    Rng r1(6), r2(6);
    CHECK((gen_rayleigh(4, 1.0, r1) - gen_rayleigh(4, 1.0, r2)).frobenius_norm() == 0.0);

    Rng rm(7);
    double acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) acc += std::norm(gen_rayleigh(1, 2.0, rm)(0, 0));
    acc /= n;
    CHECK(acc > 1.9);
    CHECK(acc < 2.1);
}

TEST_CASE("rician generator") {
    CMatrix los(3, 1);
    for (int i = 0; i < 3; ++i) los(i, 0) = cplx(0.5, -0.2);

    Rng rng(11);
    CMatrix nearly_los = gen_rician(3, 1.0, 1e9, los, rng);
    CHECK((nearly_los - los).frobenius_norm() < 1e-4 * norm(los));

    // The deterministic part carries kappa/(kappa+1) of the power.
    const double kappa = std::pow(10.0, 3.0 / 10.0);  // 3 dB
    const int n = 100000;
    Rng rp(17);
    double total = 0.0;
    cplx mean = 0.0;
    for (int i = 0; i < n; ++i) {
        CMatrix h = gen_rician(1, 1.0, kappa, CMatrix::column({cplx(1.0, 0.0)}), rp);
        total += std::norm(h(0, 0));
        mean += h(0, 0);
    }
    total /= n;
    mean /= static_cast<double>(n);
    const double los_power = std::norm(mean);
    CHECK(std::abs(los_power / (kappa / (kappa + 1.0)) - 1.0) < 0.02);
    CHECK(std::abs(total - 1.0) < 0.02);
}

TEST_CASE("rician at kappa zero matches rayleigh statistics") {
    Rng rm(19);
    CMatrix los = CMatrix::column({cplx(1.0, 0.0)});
    double acc = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) acc += std::norm(gen_rician(1, 1.5, 0.0, los, rm)(0, 0));
    acc /= n;
    CHECK(acc > 1.42);
    CHECK(acc < 1.58);
}

TEST_CASE("build_channel_set") {
    SystemConfig cfg;
    cfg.tag_radius = 0.0;
    cfg.user_radius = 0.0;
    Rng rng_a(23), rng_b(23);
    Topology topo_a = place_nodes(cfg, rng_a);
    Topology topo_b = place_nodes(cfg, rng_b);
    ChannelSet ch_a = build_channel_set(topo_a, cfg, rng_a);
    ChannelSet ch_b = build_channel_set(topo_b, cfg, rng_b);
    CHECK((ch_a.f0 - ch_b.f0).frobenius_norm() == 0.0);
    CHECK((ch_a.G_SI - ch_b.G_SI).frobenius_norm() == 0.0);

    for (std::size_t k = 0; k < cfg.K; ++k) {
        const double d = std::hypot(topo_a.tag_positions[k][0], topo_a.tag_positions[k][1]);
        const double zeta = pathloss_gain(d, cfg);
        const double g2 = norm(ch_a.g_fk[k]) * norm(ch_a.g_fk[k]);
        CHECK(g2 == doctest::Approx(zeta).epsilon(1e-12));
    }

    for (std::size_t l = 0; l < cfg.L; ++l)
        for (std::size_t k = 0; k < cfg.K; ++k)
            for (std::size_t i = 0; i < cfg.M; ++i)
                CHECK(ch_a.h_lk[l][k](i, 0) == ch_a.g_fk[k](i, 0) * ch_a.v_lk[l][k]);
}

TEST_CASE("channels stay finite over seeds") {
    SystemConfig cfg;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng = Rng::split(99, seed);
        Topology topo = place_nodes(cfg, rng);
        ChannelSet ch = build_channel_set(topo, cfg, rng);
        auto finite = [](const CMatrix& m) {
            for (const cplx& e : m.entries())
                if (!std::isfinite(std::real(e)) || !std::isfinite(std::imag(e))) return false;
            return true;
        };
        CHECK(finite(ch.f0));
        CHECK(finite(ch.G_SI));
        for (const CMatrix& f : ch.f_l) CHECK(finite(f));
        for (const CMatrix& h : ch.h_k) CHECK(finite(h));
    }
}
