#pragma once

// Wireless link model: Shannon-Hartley rate with an SNR of P + G - noise (dB).

#include <cmath>

#include "edgesim/error.hpp"
#include "edgesim/types.hpp"

namespace edgesim::comm {

/// Logarithm used in the capacity term. Swap for std::log to use nats.
inline double capacity_log(double x) { return std::log2(x); }

struct LinkBudget {
    NodeId source = 0;
    NodeId target = 0;
    double bits = 0.0;
    double snr_db = 0.0;
    double rate = 0.0;  // bits per step
    double time = 0.0;  // steps
};

inline double distance(Position a, Position b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Channel gain in dB between two positions.
inline double channel_gain(Position a, Position b, const GainModel& model) {
    if (model.kind == GainKind::constant) return model.db;
    const double d = distance(a, b);
    if (!(d > 0.0)) throw Error("degenerate distance");
    return model.db - 20.0 * std::log10(d);
}

/// Achievable rate in bits per step for the given bandwidth and SNR.
inline double link_rate(double bandwidth_hz, double snr_db) {
    return bandwidth_hz * capacity_log(1.0 + std::pow(10.0, snr_db / 10.0));
}

/// Time in steps to move `bits` over a link. Fractional; the engine rounds
/// deliveries up to step boundaries.
inline double transmission_time(double bits, double bandwidth_hz, double power_dbm, double gain_db,
                                 double noise_dbm) {
    if (bits == 0.0) return 0.0;
    const double rate = link_rate(bandwidth_hz, power_dbm + gain_db - noise_dbm);
    if (!(rate > 0.0) || !std::isfinite(rate)) throw Error("unusable channel");
    return bits / rate;
}

/// Full budget for a directed link of a topology.
inline LinkBudget link_budget(const Topology& topo, const ChannelParams& channel, NodeId from,
                              NodeId to, double bits) {
    const NodeSpec& src = topo.nodes.at(from);
    const NodeSpec& dst = topo.nodes.at(to);
    LinkBudget lb;
    lb.source = from;
    lb.target = to;
    lb.bits = bits;
    const double gain = channel_gain(src.position, dst.position, channel.gain);
    lb.snr_db = src.transmit_power + gain - channel.noise_power;
    const double bw = topo.link_bandwidth(from, to, channel.default_bandwidth);
    lb.rate = link_rate(bw, lb.snr_db);
    lb.time = transmission_time(bits, bw, src.transmit_power, gain, channel.noise_power);
    return lb;
}

}  // namespace edgesim::comm
