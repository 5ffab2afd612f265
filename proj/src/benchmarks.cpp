#include "isabc/benchmarks.hpp"

#include <algorithm>
#include <numeric>

namespace isabc {

SchemeToggles toggles_for(Scheme scheme) {
    SchemeToggles t;
    switch (scheme) {
        case Scheme::RsmaIsabc:
            break;
        case Scheme::NomaIsabc:
            t.has_common_stream = false;
            t.access = AccessMode::Noma;
            break;
        case Scheme::RsmaBackcom:
            t.has_sensing_covariance = false;
            break;
        case Scheme::ConvBackcom:
            t.has_common_stream = false;
            t.has_sensing_covariance = false;
            t.access = AccessMode::Sdma;
            break;
        case Scheme::ConvIsabc:
            t.has_common_stream = false;
            t.access = AccessMode::Sdma;
            break;
        case Scheme::SensingOnly:
            t.has_common_stream = false;
            t.has_private_streams = false;
            t.has_tag_rate = false;
            t.access = AccessMode::None;
            break;
    }
    return t;
}

SystemConfig configure(Scheme scheme, const SystemConfig& base) {
    SystemConfig cfg = base;
    cfg.scheme = scheme;
    return cfg;
}

const char* scheme_name(Scheme scheme) {
    switch (scheme) {
        case Scheme::RsmaIsabc: return "RsmaIsabc";
        case Scheme::NomaIsabc: return "NomaIsabc";
        case Scheme::RsmaBackcom: return "RsmaBackcom";
        case Scheme::ConvBackcom: return "ConvBackcom";
        case Scheme::ConvIsabc: return "ConvIsabc";
        case Scheme::SensingOnly: return "SensingOnly";
    }
    return "unknown";
}

Scheme parse_scheme(const std::string& name) {
    for (Scheme s : all_schemes())
        if (name == scheme_name(s)) return s;
    throw ModelError("parse_scheme: unknown scheme '" + name + "'");
}

std::vector<Scheme> all_schemes() {
    return {Scheme::RsmaIsabc,  Scheme::NomaIsabc,  Scheme::RsmaBackcom,
            Scheme::ConvBackcom, Scheme::ConvIsabc, Scheme::SensingOnly};
}

ChannelSet prepare_channels(const ChannelSet& ch, Scheme scheme) {
    if (scheme != Scheme::NomaIsabc) return ch;
    const std::size_t l_count = ch.f_l.size();
    std::vector<std::size_t> order(l_count);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return norm(ch.f_l[a]) > norm(ch.f_l[b]);
    });
    ChannelSet out = ch;
    for (std::size_t l = 0; l < l_count; ++l) {
        out.f_l[l] = ch.f_l[order[l]];
        out.v_lk[l] = ch.v_lk[order[l]];
        out.h_lk[l] = ch.h_lk[order[l]];
    }
    return out;
}

}  // namespace isabc
