#pragma once

#include "isabc/channel.hpp"
#include "isabc/system_model.hpp"

#include <string>

namespace isabc {

enum class AccessMode { Rsma, Noma, Sdma, None };

/// Structural switches that turn the full engine into one of the
/// comparison schemes. Every Scheme maps to exactly one combination.
struct SchemeToggles {
    bool has_common_stream = true;       // w_c block and C_l shares
    bool has_sensing_covariance = true;  // S block and sensing SINR rows
    bool has_private_streams = true;     // per-user beams and rate rows
    bool has_tag_rate = true;            // reader-side tag SINR rows
    AccessMode access = AccessMode::Rsma;
};

SchemeToggles toggles_for(Scheme scheme);

/// Applies a scheme to a base configuration.
SystemConfig configure(Scheme scheme, const SystemConfig& base);

const char* scheme_name(Scheme scheme);
Scheme parse_scheme(const std::string& name);
std::vector<Scheme> all_schemes();

/// NOMA decodes users in descending channel-gain order; returns a copy of
/// the channels with users permuted accordingly (identity otherwise).
ChannelSet prepare_channels(const ChannelSet& ch, Scheme scheme);

}  // namespace isabc
