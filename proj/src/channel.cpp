#include "isabc/channel.hpp"

#include <cmath>
#include <ostream>

namespace isabc {

namespace {

std::array<double, 2> draw_in_disc(double cx, double cy, double radius, Rng& rng) {
    const double r = radius * std::sqrt(rng.uniform());
    const double phi = 2.0 * M_PI * rng.uniform();
    return {cx + r * std::cos(phi), cy + r * std::sin(phi)};
}

double distance(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
}

}  // namespace

Topology place_nodes(const SystemConfig& cfg, Rng& rng) {
    Topology topo;
    topo.bs_position = {0.0, 0.0};
    topo.reader_position = {cfg.reader_x, cfg.reader_y};
    topo.tag_positions.reserve(cfg.K);
    for (std::size_t k = 0; k < cfg.K; ++k)
        topo.tag_positions.push_back(
            draw_in_disc(cfg.tag_center_x, cfg.tag_center_y, cfg.tag_radius, rng));
    topo.user_positions.reserve(cfg.L);
    for (std::size_t l = 0; l < cfg.L; ++l)
        topo.user_positions.push_back(
            draw_in_disc(cfg.user_center_x, cfg.user_center_y, cfg.user_radius, rng));
    topo.tag_angles.reserve(cfg.K);
    for (const auto& pos : topo.tag_positions)
        topo.tag_angles.push_back(std::atan2(pos[1] - topo.bs_position[1],
                                             pos[0] - topo.bs_position[0]));
    return topo;
}

double pathloss_db(double distance_m, const SystemConfig& cfg) {
    if (distance_m < 0.5) throw DistanceTooSmall("pathloss_db: distance below 0.5 m");
    return cfg.pl_intercept + cfg.pl_exponent * std::log10(distance_m) +
           20.0 * std::log10(cfg.fc_hz / 1e9);
}

double pathloss_gain(double distance_m, const SystemConfig& cfg) {
    return std::pow(10.0, -pathloss_db(distance_m, cfg) / 10.0);
}

CMatrix steering_vector(double theta, std::size_t count, double gain) {
    if (count < 1) throw DimensionMismatch("steering_vector: count must be >= 1");
    CMatrix b(count, 1);
    const double amp = std::sqrt(gain / static_cast<double>(count));
    const double phase_step = M_PI * std::sin(theta);
    for (std::size_t n = 0; n < count; ++n)
        b(n, 0) = amp * std::exp(cplx(0.0, phase_step * static_cast<double>(n)));
    return b;
}

CMatrix gen_rayleigh(std::size_t dim, double zeta, Rng& rng) {
    CMatrix a = sample_gaussian_vector(dim, rng);
    return a * std::sqrt(zeta);
}

CMatrix gen_rician(std::size_t dim, double zeta, double kappa, const CMatrix& los, Rng& rng) {
    if (kappa < 0.0) throw ChannelError("gen_rician: negative Rician factor");
    CMatrix nlos = gen_rayleigh(dim, zeta, rng);
    const double w_los = std::sqrt(kappa / (kappa + 1.0));
    const double w_nlos = std::sqrt(1.0 / (kappa + 1.0));
    return los * w_los + nlos * w_nlos;
}

ChannelSet build_channel_set(const Topology& topo, const SystemConfig& cfg, Rng& rng) {
    ChannelSet ch;
    ch.tag_angles = topo.tag_angles;

    auto comm_vector = [&](std::size_t dim, double zeta) {
        if (!cfg.comm_rician) return gen_rayleigh(dim, zeta, rng);
        // Fixed-phase LoS component of matching mean power.
        CMatrix los(dim, 1);
        const double amp = std::sqrt(zeta);
        for (std::size_t i = 0; i < dim; ++i) los(i, 0) = amp;
        return gen_rician(dim, zeta, cfg.comm_kappa, los, rng);
    };

    const double d_reader = distance(topo.bs_position, topo.reader_position);
    ch.f0 = comm_vector(cfg.M, pathloss_gain(d_reader, cfg));

    ch.f_l.reserve(cfg.L);
    for (std::size_t l = 0; l < cfg.L; ++l) {
        const double d = distance(topo.bs_position, topo.user_positions[l]);
        ch.f_l.push_back(comm_vector(cfg.M, pathloss_gain(d, cfg)));
    }

    ch.g_fk.reserve(cfg.K);
    ch.g_bk.reserve(cfg.K);
    ch.G_k.reserve(cfg.K);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const double d = distance(topo.bs_position, topo.tag_positions[k]);
        const double zeta_b = pathloss_gain(d, cfg);
        ch.g_fk.push_back(steering_vector(topo.tag_angles[k], cfg.M, zeta_b));
        ch.g_bk.push_back(steering_vector(topo.tag_angles[k], cfg.N, zeta_b));
        ch.G_k.push_back(ch.g_bk[k] * ch.g_fk[k].adjoint());
    }

    ch.v_lk.assign(cfg.L, std::vector<cplx>(cfg.K));
    ch.h_lk.assign(cfg.L, std::vector<CMatrix>(cfg.K));
    for (std::size_t l = 0; l < cfg.L; ++l)
        for (std::size_t k = 0; k < cfg.K; ++k) {
            const double d = distance(topo.tag_positions[k], topo.user_positions[l]);
            ch.v_lk[l][k] = comm_vector(1, pathloss_gain(d, cfg))(0, 0);
            ch.h_lk[l][k] = ch.g_fk[k] * ch.v_lk[l][k];
        }

    ch.q_k.reserve(cfg.K);
    ch.h_k.reserve(cfg.K);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const double d = distance(topo.tag_positions[k], topo.reader_position);
        ch.q_k.push_back(comm_vector(1, pathloss_gain(d, cfg))(0, 0));
        ch.h_k.push_back(ch.g_fk[k] * ch.q_k[k]);
    }

    // Unit large-scale gain; residual strength enters through beta.
    const double k_si = std::pow(10.0, cfg.k_si_db / 10.0);
    CMatrix g_si(cfg.M, cfg.N);
    CMatrix los(cfg.M, cfg.N);
    for (auto& e : los.entries()) e = 1.0;
    {
        CMatrix nlos(cfg.M, cfg.N);
        for (auto& e : nlos.entries()) e = rng.circular_gaussian();
        const double w_los = std::sqrt(k_si / (k_si + 1.0));
        const double w_nlos = std::sqrt(1.0 / (k_si + 1.0));
        g_si = los * w_los + nlos * w_nlos;
    }
    ch.G_SI = g_si;
    return ch;
}

void export_channels(const Topology& topo, const ChannelSet& ch, std::ostream& out) {
    auto put_vec = [&](const char* name, const CMatrix& v) {
        out << name << " " << v.rows() << " " << v.cols() << "\n";
        for (const cplx& e : v.entries())
            out << "  " << std::real(e) << " " << std::imag(e) << "\n";
    };
    out << "bs " << topo.bs_position[0] << " " << topo.bs_position[1] << "\n";
    out << "reader " << topo.reader_position[0] << " " << topo.reader_position[1] << "\n";
    for (const auto& p : topo.tag_positions) out << "tag " << p[0] << " " << p[1] << "\n";
    for (const auto& p : topo.user_positions) out << "user " << p[0] << " " << p[1] << "\n";
    put_vec("f0", ch.f0);
    for (const CMatrix& f : ch.f_l) put_vec("f_l", f);
    for (const CMatrix& g : ch.g_fk) put_vec("g_fk", g);
    for (const CMatrix& g : ch.g_bk) put_vec("g_bk", g);
    put_vec("G_SI", ch.G_SI);
}

}  // namespace isabc
