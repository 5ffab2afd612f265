#pragma once

#include "isabc/numerics.hpp"
#include "isabc/system_model.hpp"

#include <array>
#include <iosfwd>
#include <vector>

namespace isabc {

struct ChannelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DistanceTooSmall : ChannelError {
    using ChannelError::ChannelError;
};

struct Topology {
    std::array<double, 2> bs_position{0.0, 0.0};
    std::array<double, 2> reader_position{12.0, 0.0};
    std::vector<std::array<double, 2>> user_positions;
    std::vector<std::array<double, 2>> tag_positions;
    std::vector<double> tag_angles;  // radians from BS array broadside
};

struct ChannelSet {
    CMatrix f0;                            // M x 1, BS -> reader
    std::vector<CMatrix> f_l;              // L of M x 1, BS -> user
    std::vector<CMatrix> g_fk;             // K of M x 1, BS -> tag (LoS)
    std::vector<CMatrix> g_bk;             // K of N x 1, tag -> BS (LoS)
    std::vector<std::vector<cplx>> v_lk;   // [l][k] tag -> user
    std::vector<cplx> q_k;                 // tag -> reader
    CMatrix G_SI;                          // M x N
    std::vector<std::vector<CMatrix>> h_lk;  // cascades g_fk * v_lk
    std::vector<CMatrix> h_k;              // cascades g_fk * q_k
    std::vector<CMatrix> G_k;              // N x M, g_bk g_fk^H
    std::vector<double> tag_angles;
};

Topology place_nodes(const SystemConfig& cfg, Rng& rng);
double pathloss_db(double distance_m, const SystemConfig& cfg);
double pathloss_gain(double distance_m, const SystemConfig& cfg);  // linear
CMatrix steering_vector(double theta, std::size_t count, double gain);
CMatrix gen_rayleigh(std::size_t dim, double zeta, Rng& rng);
CMatrix gen_rician(std::size_t dim, double zeta, double kappa, const CMatrix& los, Rng& rng);
ChannelSet build_channel_set(const Topology& topo, const SystemConfig& cfg, Rng& rng);

void export_channels(const Topology& topo, const ChannelSet& ch, std::ostream& out);

}  // namespace isabc
