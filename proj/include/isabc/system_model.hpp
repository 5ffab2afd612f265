#pragma once

#include "isabc/numerics.hpp"

#include <cstdint>
#include <vector>

namespace isabc {

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NegativeSinr : ModelError {
    using ModelError::ModelError;
};
struct UnsortedUsers : ModelError {
    using ModelError::ModelError;
};

enum class Scheme {
    RsmaIsabc,
    NomaIsabc,
    RsmaBackcom,
    ConvBackcom,
    ConvIsabc,
    SensingOnly,
};

enum class EhModel { Linear, Nonlinear };

struct SystemConfig {
    std::size_t M = 8;   // BS transmit antennas
    std::size_t N = 8;   // BS receive antennas
    std::size_t L = 3;   // users
    std::size_t K = 2;   // tags

    double fc_hz = 3e9;
    double bandwidth_hz = 10e6;
    double noise_figure_db = 10.0;
    double k_si_db = 3.0;        // Rician factor of the SI channel
    double beta = 1e-9;          // residual SI fraction (-90 dB)
    double delta_c = 0.1;        // SIC quality, common stream (-10 dB)
    double delta_p = 0.1;        // SIC quality, private streams
    double delta_s = 0.1;        // SIC quality, sensing signal

    double p_b_w = 1e-5;         // EH activation threshold (-20 dBm)
    EhModel eh_model = EhModel::Nonlinear;
    double eh_eta = 0.7;         // linear model conversion efficiency
    double eh_m_sat = 24e-3;     // sigmoid saturation (W)
    double eh_a = 150.0;         // sigmoid steepness (1/W)
    double eh_b = 0.014;         // sigmoid midpoint (W)

    double r_s_th = 1.0;         // sensing rate threshold (bps/Hz)
    double r_t_th = 1.0;         // tag rate threshold
    double r_p_th = 2.0;         // per-user rate threshold

    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double epsilon = 1e-3;       // AO stopping tolerance
    std::size_t max_ao_iterations = 20;
    std::size_t randomization_trials = 10000;

    Scheme scheme = Scheme::RsmaIsabc;
    std::uint64_t seed = 1;

    // Geometry (meters); radius 0 collapses a disc to its center.
    double reader_x = 12.0, reader_y = 0.0;
    double tag_center_x = 6.0, tag_center_y = -4.0, tag_radius = 3.0;
    double user_center_x = 55.0, user_center_y = 0.0, user_radius = 5.0;

    // UMi-LoS path loss PL(dB) = pl_exponent*log10(d) + pl_intercept + 20*log10(fc_GHz).
    double pl_exponent = 22.0;
    double pl_intercept = 28.0;

    // Rician study for the communication channels (Rayleigh when disabled).
    bool comm_rician = false;
    double comm_kappa = 0.0;

    double sigma2() const;           // noise power (W)
    double upsilon_th() const;       // 2^{r_s_th} - 1
    double gamma_t_th() const;       // 2^{r_t_th} - 1

    static SystemConfig table_defaults() { return SystemConfig{}; }
};

struct BeamformingSolution {
    CMatrix w_c;                  // M x 1
    std::vector<CMatrix> w_l;     // L of M x 1
    CMatrix S;                    // M x M Hermitian PSD
    std::vector<CMatrix> u_k;     // K of N x 1, unit norm
    std::vector<double> alpha;    // K, in (0,1)
    std::vector<double> C;        // L, nonnegative common-rate shares

    static BeamformingSolution zeros(const SystemConfig& cfg);
};

struct SinrReport {
    std::vector<double> gamma_c;     // per user
    std::vector<double> gamma_p;     // per user
    std::vector<double> gamma_t;     // per tag
    std::vector<double> upsilon;     // per tag
    double R_c = 0.0;                // min over users of the common-stream rates
    std::vector<double> R_p_total;   // C_l + private rate
    std::vector<double> R_t;         // per tag
    std::vector<double> R_s;         // per tag
    std::vector<double> p_in;        // incident power (W)
    std::vector<double> p_harv;      // harvested power (W)
    double total_tx_power = 0.0;     // W
};

struct ChannelSet;  // channel.hpp

CMatrix covariance_rx(const BeamformingSolution& sol);

double sinr_common(const ChannelSet& ch, const BeamformingSolution& sol,
                   const SystemConfig& cfg, std::size_t l);
double sinr_private(const ChannelSet& ch, const BeamformingSolution& sol,
                    const SystemConfig& cfg, std::size_t l);
double sinr_tag(const ChannelSet& ch, const BeamformingSolution& sol,
                const SystemConfig& cfg, std::size_t k);
double sinr_sensing(const ChannelSet& ch, const BeamformingSolution& sol,
                    const SystemConfig& cfg, std::size_t k);
/// Requires users pre-sorted by descending ||f_l||^2.
double noma_sinr(const ChannelSet& ch, const BeamformingSolution& sol,
                 const SystemConfig& cfg, std::size_t l);

double rate(double sinr);

double incident_power(const ChannelSet& ch, const BeamformingSolution& sol, std::size_t k);
double harvested_power(double p_in, double alpha_k, const SystemConfig& cfg);
/// Pre-conversion input the nonlinear harvester needs to output p_b.
double eh_input_threshold(const SystemConfig& cfg);
/// Margin (1-alpha)p_in - Phi^-1(p_b); feasible when >= 0.
double eh_margin(const ChannelSet& ch, const BeamformingSolution& sol,
                 const SystemConfig& cfg, std::size_t k);

SinrReport evaluate(const ChannelSet& ch, const BeamformingSolution& sol,
                    const SystemConfig& cfg);

}  // namespace isabc
