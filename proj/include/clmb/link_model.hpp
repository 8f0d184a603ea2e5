#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "clmb/ratio.hpp"
#include "clmb/stream_catalog.hpp"

namespace clmb {

enum class Generation { LTE, NR };
enum class UlModulation { QAM64, QAM256 };

inline const char* to_string(Generation g) { return g == Generation::LTE ? "LTE" : "NR"; }
inline const char* to_string(UlModulation m) { return m == UlModulation::QAM64 ? "QAM64" : "QAM256"; }

/// TDD/scheduling parameters as configured on the testbed. Informational:
/// they never enter the latency arithmetic.
struct RadioParams {
    int dl_slots = 0;
    int ul_slots = 0;
    int sr_period_ms = 0;
    UlModulation ul_modulation = UlModulation::QAM64;
};

/// One measured access-network configuration.
struct LinkProfile {
    std::string name;          // short id, e.g. "5g100opt"
    std::string display_name;  // e.g. "5G (100 MHz) opt."
    Generation generation = Generation::LTE;
    int bandwidth_mhz = 0;
    bool optimized = false;
    DataRate uplink_rate;
    DataRate downlink_rate;
    Ratio rtt_mean_ms;
    std::optional<RadioParams> radio_params;
};

/// End-to-end response window for comfortable closed-loop control.
struct LatencyBudget {
    Ratio lower_ms = Ratio(100);
    Ratio upper_ms = Ratio(125);

    void validate() const {
        if (!(Ratio(0) < lower_ms && lower_ms <= upper_ms))
            throw std::domain_error("latency budget requires 0 < lower <= upper");
    }
};

enum class Verdict { Feasible, Marginal, Infeasible };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Feasible: return "feasible";
        case Verdict::Marginal: return "marginal";
        case Verdict::Infeasible: return "infeasible";
    }
    return "?";
}

enum class RttJitter { Deterministic, ShiftedLognormal };

/// Round-trip time model. The measurements report averages only, so the
/// default mode reproduces them deterministically; the shifted-lognormal
/// mode adds jitter for robustness studies while preserving the mean.
struct RttModel {
    Ratio mean_ms;
    RttJitter jitter = RttJitter::Deterministic;
    double sigma = 0.0;      // lognormal shape
    Ratio minimum_ms;        // hard floor of the shifted distribution

    static RttModel deterministic(Ratio mean_ms) {
        RttModel m;
        m.mean_ms = mean_ms;
        m.minimum_ms = mean_ms;
        return m;
    }

    static RttModel shifted_lognormal(Ratio mean_ms, double sigma, Ratio minimum_ms) {
        RttModel m;
        m.mean_ms = mean_ms;
        m.jitter = RttJitter::ShiftedLognormal;
        m.sigma = sigma;
        m.minimum_ms = minimum_ms;
        return m;
    }

    static RttModel shifted_lognormal(Ratio mean_ms, double sigma) {
        return shifted_lognormal(mean_ms, sigma, mean_ms / Ratio(2));
    }

    void validate() const {
        if (sigma < 0) throw std::domain_error("rtt sigma must be >= 0");
        if (mean_ms.is_negative()) throw std::domain_error("rtt mean must be >= 0");
        if (jitter == RttJitter::ShiftedLognormal && sigma > 0) {
            if (!(Ratio(0) < minimum_ms && minimum_ms < mean_ms))
                throw std::domain_error("shifted lognormal requires 0 < minimum < mean");
        }
    }
};

/// Uniform double in [0,1) from the top 53 bits; avoids the
/// implementation-defined std::<distribution> algorithms so that seeded
/// runs replay identically everywhere.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double standard_normal(std::mt19937_64& gen) {
    double u1 = 1.0 - uniform01(gen); // (0,1], keeps log finite
    double u2 = uniform01(gen);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

/// One RTT draw in milliseconds. Stochastic draws are rounded to whole
/// nanoseconds so downstream time arithmetic stays exact.
inline Ratio sample_rtt(const RttModel& model, std::mt19937_64& gen) {
    model.validate();
    if (model.jitter == RttJitter::Deterministic || model.sigma == 0.0)
        return model.mean_ms;
    double shift = model.minimum_ms.to_double();
    double scale = model.mean_ms.to_double() - shift;
    double mu = std::log(scale) - 0.5 * model.sigma * model.sigma;
    double sample = shift + std::exp(mu + model.sigma * standard_normal(gen));
    auto ns = static_cast<std::int64_t>(std::llround(sample * 1e6));
    if (ns < 0) ns = 0;
    return Ratio(ns, 1000000);
}

/// Uplink serialization delay for one frame, exact rational milliseconds.
inline Ratio frame_transmission_time(std::int64_t frame_bits, DataRate uplink_rate) {
    if (frame_bits < 0) throw std::domain_error("negative frame size");
    if (!(Ratio(0) < uplink_rate.bps)) throw std::domain_error("nonpositive link rate");
    return Ratio(frame_bits) * Ratio(1000) / uplink_rate.bps;
}

/// Frame transmission time plus RTT; the command leg is small enough that
/// its serialization is neglected here.
inline Ratio access_network_latency(Ratio tx_time_ms, Ratio rtt_ms) {
    if (tx_time_ms.is_negative() || rtt_ms.is_negative())
        throw std::domain_error("negative latency component");
    return tx_time_ms + rtt_ms;
}

/// Budget headroom left for edge processing; negative when already blown.
inline Ratio remaining_budget(Ratio access_latency_ms, const LatencyBudget& budget) {
    budget.validate();
    return budget.upper_ms - access_latency_ms;
}

inline Verdict budget_verdict(Ratio access_latency_ms, Ratio edge_processing_ms,
                              const LatencyBudget& budget) {
    if (access_latency_ms.is_negative() || edge_processing_ms.is_negative())
        throw std::domain_error("negative latency component");
    budget.validate();
    Ratio total = access_latency_ms + edge_processing_ms;
    if (total > budget.upper_ms) return Verdict::Infeasible;
    if (total > budget.lower_ms) return Verdict::Marginal;
    return Verdict::Feasible;
}

inline std::vector<LinkProfile> builtin_profiles() {
    auto mk = [](std::string name, std::string display, Generation gen, int bw,
                 bool opt, std::int64_t ul_mbps, std::int64_t dl_mbps, std::int64_t rtt,
                 std::optional<RadioParams> radio) {
        LinkProfile p;
        p.name = std::move(name);
        p.display_name = std::move(display);
        p.generation = gen;
        p.bandwidth_mhz = bw;
        p.optimized = opt;
        p.uplink_rate = DataRate::from_mbps(ul_mbps);
        p.downlink_rate = DataRate::from_mbps(dl_mbps);
        p.rtt_mean_ms = Ratio(rtt);
        p.radio_params = radio;
        return p;
    };
    const RadioParams nr_std{6, 3, 20, UlModulation::QAM64};
    const RadioParams nr_opt{2, 7, 10, UlModulation::QAM256};
    return {
        mk("4g10", "4G (10 MHz)", Generation::LTE, 10, false, 22, 47, 24, std::nullopt),
        mk("4g20", "4G (20 MHz)", Generation::LTE, 20, false, 48, 93, 27, std::nullopt),
        mk("5g60", "5G (60 MHz)", Generation::NR, 60, false, 60, 302, 23, nr_std),
        mk("5g100", "5G (100 MHz)", Generation::NR, 100, false, 107, 244, 30, nr_std),
        mk("5g60opt", "5G (60 MHz) opt.", Generation::NR, 60, true, 180, 99, 27, nr_opt),
        mk("5g100opt", "5G (100 MHz) opt.", Generation::NR, 100, true, 236, 160, 27, nr_opt),
    };
}

inline const LinkProfile* find_profile(const std::vector<LinkProfile>& profiles,
                                       const std::string& name) {
    for (const auto& p : profiles)
        if (p.name == name) return &p;
    return nullptr;
}

inline std::optional<LinkProfile> builtin_profile(const std::string& name) {
    auto all = builtin_profiles();
    if (const auto* p = find_profile(all, name)) return *p;
    return std::nullopt;
}

} // namespace clmb
