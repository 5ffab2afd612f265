#pragma once

#include "isabc/benchmarks.hpp"
#include "isabc/channel.hpp"
#include "isabc/conic.hpp"
#include "isabc/system_model.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace isabc {

struct AoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InfeasibleAtCap : AoError {
    using AoError::AoError;
};
struct SdpInfeasible : AoError {
    using AoError::AoError;
};
struct MissingAnchors : AoError {
    using AoError::AoError;
};

/// Slack of each design constraint at a candidate solution; positive means
/// satisfied. `worst` is the largest normalized violation (0 when feasible).
struct ConstraintMargins {
    std::vector<double> sensing;       // Upsilon_k - Upsilon_th
    std::vector<double> tag;           // gamma_{t,k} - Gamma_th
    std::vector<double> private_rate;  // C_l + rate(gamma_{p,l}) - R_p_th
    double common_rate = 0.0;          // min_l rate(gamma_{c,l}) - sum C_l
    std::vector<double> eh;            // (1 - alpha_k) p_in - Phi^{-1}(p_b), W
    double worst = 0.0;

    bool feasible(double tol = 0.0) const { return worst <= tol; }
};

ConstraintMargins constraint_margins(const ChannelSet& ch, const BeamformingSolution& sol,
                                     const SystemConfig& cfg);

struct TraceEntry {
    std::size_t iteration = 0;
    double objective_w = 0.0;
    double max_violation = 0.0;
    std::string status;
    double wall_time_s = 0.0;
};

struct ConvergenceTrace {
    std::vector<TraceEntry> entries;

    void write_csv(std::ostream& out) const;
};

/// Linearization anchors carried between outer iterations: previous private
/// SINR (mu), private interference power (phi), total received power at each
/// user, and the common-stream interference-plus-noise level.
struct ScaAnchors {
    std::vector<double> mu;
    std::vector<double> phi;
    std::vector<double> t_total;
    std::vector<double> lambda;
    bool ready = false;
};

struct AoState {
    BeamformingSolution solution;
    std::size_t iteration = 0;
    double objective = 0.0;
    ConvergenceTrace trace;
    ScaAnchors anchors;
};

BeamformingSolution initialize_feasible(const ChannelSet& ch, const SystemConfig& cfg,
                                        Rng& rng);

void refresh_anchors(const ChannelSet& ch, AoState& state, const SystemConfig& cfg);

/// Closed-form MMSE receive beamformers; never lowers any sensing SINR.
void optimize_receive_beamformers(const ChannelSet& ch, AoState& state,
                                  const SystemConfig& cfg);

ConicProblem build_transmit_sdp(const ChannelSet& ch, const AoState& state,
                                const SystemConfig& cfg);

/// Solves the relaxed transmit problem, recovers rank-one beams, and accepts
/// the update only if it does not increase the power. Returns a status tag.
std::string solve_transmit_subproblem(const ChannelSet& ch, AoState& state,
                                      const SystemConfig& cfg, Rng& rng);

/// Slack LP over the reflection coefficients; transmit power is unchanged.
std::string optimize_reflection_coefficients(const ChannelSet& ch, AoState& state,
                                             const SystemConfig& cfg);

std::pair<BeamformingSolution, ConvergenceTrace> run_ao(const ChannelSet& ch,
                                                        const SystemConfig& cfg, Rng& rng);

}  // namespace isabc
