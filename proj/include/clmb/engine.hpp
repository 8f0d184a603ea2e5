#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "clmb/control_plane.hpp"
#include "clmb/link_model.hpp"
#include "clmb/qos_scheduler.hpp"
#include "clmb/ratio.hpp"
#include "clmb/stream_catalog.hpp"

namespace clmb {

/// Scenario validation failure; names the offending field.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string field, const std::string& constraint)
        : std::runtime_error(field + ": " + constraint), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Edge compute time per frame: fixed, or truncated normal (resampled
/// below zero) when sigma > 0.
struct EdgeProcessingModel {
    Ratio mean_ms;
    double sigma_ms = 0.0;

    static EdgeProcessingModel fixed(Ratio mean_ms) { return {mean_ms, 0.0}; }
    static EdgeProcessingModel truncated_normal(Ratio mean_ms, double sigma_ms) {
        return {mean_ms, sigma_ms};
    }

    Ratio sample(std::mt19937_64& gen) const {
        if (sigma_ms == 0.0) return mean_ms;
        double m = mean_ms.to_double();
        for (int i = 0; i < 64; ++i) {
            double v = m + sigma_ms * standard_normal(gen);
            if (v >= 0.0) return Ratio(static_cast<std::int64_t>(std::llround(v * 1e6)), 1000000);
        }
        return Ratio(0);
    }
};

struct OutageWindow {
    std::int64_t start_ns = 0;
    std::int64_t end_ns = 0;
};

/// Complete simulation input. The default scenario mirrors the hardware
/// testbed: one raw RGBD uplink stream and the small command downlink.
struct Scenario {
    std::vector<StreamSpec> streams;
    LinkProfile link;
    std::optional<RttModel> rtt; // defaults to deterministic(link.rtt_mean_ms)
    SchedulerPolicy qos = SchedulerPolicy::strict();
    EdgeProcessingModel edge;
    LatencyBudget budget;
    FailsafeConfig failsafe;
    std::vector<OutageWindow> outages;
    int video_queue_bound = 3; // pending camera frames per stream; 0 = unbounded
    Ratio duration_s = Ratio(2);
    std::uint64_t seed = 1;

    RttModel rtt_model() const {
        return rtt ? *rtt : RttModel::deterministic(link.rtt_mean_ms);
    }

    static Scenario testbed(const LinkProfile& profile, Ratio fps = Ratio(30)) {
        Scenario s;
        s.streams.push_back(
            StreamSpec::make_video("rgbd_camera", Direction::Uplink, 424, 240, 32, fps, 4));
        s.streams.push_back(StreamSpec::make_command("command", 64, fps, 0));
        s.link = profile;
        return s;
    }

    void validate() const {
        if (!(Ratio(0) < duration_s))
            throw ValidationError("duration_s", "must be > 0");
        if (link.name.empty())
            throw ValidationError("link.name", "must be set");
        if (!(Ratio(0) < link.uplink_rate.bps))
            throw ValidationError("link.ul_mbps", "must be > 0");
        if (!(Ratio(0) < link.downlink_rate.bps))
            throw ValidationError("link.dl_mbps", "must be > 0");
        if (!(Ratio(0) < link.rtt_mean_ms))
            throw ValidationError("link.rtt_ms", "must be > 0");
        for (std::size_t i = 0; i < streams.size(); ++i) {
            for (std::size_t j = i + 1; j < streams.size(); ++j)
                if (streams[i].id == streams[j].id)
                    throw ValidationError("streams[" + std::to_string(j) + "].id",
                                          "duplicate stream id '" + streams[j].id + "'");
        }
        try {
            qos.validate();
        } catch (const std::exception& e) {
            throw ValidationError("qos", e.what());
        }
        try {
            budget.validate();
        } catch (const std::exception& e) {
            throw ValidationError("budget", e.what());
        }
        try {
            failsafe.validate();
        } catch (const std::exception& e) {
            throw ValidationError("failsafe", e.what());
        }
        try {
            rtt_model().validate();
        } catch (const std::exception& e) {
            throw ValidationError("rtt_model", e.what());
        }
        if (edge.mean_ms.is_negative())
            throw ValidationError("edge_processing_ms", "must be >= 0");
        if (edge.sigma_ms < 0)
            throw ValidationError("edge_processing_ms.sigma", "must be >= 0");
        if (video_queue_bound < 0)
            throw ValidationError("video_queue_bound", "must be >= 0");
        std::int64_t prev_end = 0;
        for (std::size_t i = 0; i < outages.size(); ++i) {
            const auto& w = outages[i];
            std::string f = "link_outages[" + std::to_string(i) + "]";
            if (w.start_ns < 0 || w.end_ns <= w.start_ns)
                throw ValidationError(f, "requires 0 <= start < end");
            if (w.start_ns < prev_end)
                throw ValidationError(f, "windows must be sorted and disjoint");
            prev_end = w.end_ns;
        }
    }
};

enum class FrameOutcome { Delivered, Dropped, InFlightAtEnd };

inline const char* to_string(FrameOutcome o) {
    switch (o) {
        case FrameOutcome::Delivered: return "delivered";
        case FrameOutcome::Dropped: return "dropped";
        case FrameOutcome::InFlightAtEnd: return "in_flight_at_end";
    }
    return "?";
}

/// Per-frame lifecycle timestamps, integer nanoseconds (-1 = not reached).
/// For uplink streams the record spans the whole control loop up to command
/// arrival; for downlink streams it covers edge-side generation to delivery.
struct FrameRecord {
    std::string stream_id;
    std::uint64_t seq = 0;
    bool uplink_loop = false;
    std::int64_t t_generated_ns = -1;
    std::int64_t t_tx_start_ns = -1;
    std::int64_t t_tx_done_ns = -1;
    std::int64_t t_edge_arrival_ns = -1;
    std::int64_t t_edge_done_ns = -1;
    std::int64_t t_dl_done_ns = -1;
    std::int64_t t_cmd_received_ns = -1;
    FrameOutcome outcome = FrameOutcome::InFlightAtEnd;
    std::int64_t control_latency_ns = -1;
    std::int64_t rtt_ns = 0;  // this frame's RTT draw
    std::int64_t proc_ns = 0; // this frame's edge-processing draw
    bool deadline_fired = false;
};

struct LatencyStats {
    std::uint64_t count = 0;
    double mean_ms = 0.0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    double p99_ms = 0.0;
    double max_ms = 0.0;
};

struct StreamMetrics {
    std::uint64_t generated = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
    std::uint64_t in_flight = 0;
    LatencyStats latency;
    double budget_violation_fraction = 0.0;
};

struct Metrics {
    std::map<std::string, StreamMetrics> per_stream;
    StreamMetrics total;
    std::uint64_t fallback_episodes = 0;
    std::int64_t fallback_total_ns = 0;
    std::uint64_t mode_transitions = 0;
};

struct RunResult {
    std::vector<FrameRecord> frames;        // generation order
    std::vector<ModeTransition> transitions; // time order, times in ns
    Metrics metrics;
};

namespace detail {

inline std::int64_t ns_round(Ratio ms) { return (ms * Ratio(1000000)).round_half_up(); }
inline std::int64_t ns_ceil(Ratio ms) { return (ms * Ratio(1000000)).ceil(); }
inline Ratio ms_of_ns(std::int64_t ns) { return Ratio(ns, 1000000); }

/// Nearest-rank percentile over an ascending vector.
inline double percentile_ms(const std::vector<std::int64_t>& sorted_ns, double q) {
    if (sorted_ns.empty()) return 0.0;
    std::size_t n = sorted_ns.size();
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    if (rank == 0) rank = 1;
    if (rank > n) rank = n;
    return static_cast<double>(sorted_ns[rank - 1]) / 1e6;
}

} // namespace detail

// Deterministic discrete-event simulation of the device->edge->device
// loop. Event times are integer nanoseconds; the fluid link queues run on
// exact rationals and their completion times are rounded once at the event
// boundary. All stochastic draws happen at frame generation in a fixed
// order, so a (scenario, seed) pair replays bit-identically.
class Engine {
public:
    explicit Engine(Scenario scenario) : sc_(std::move(scenario)) { sc_.validate(); }

    RunResult run() {
        init();
        while (!events_.empty()) {
            Event ev = events_.top();
            if (ev.t > end_ns_) break;
            events_.pop();
            dispatch(ev);
        }
        finalize();
        RunResult out;
        out.frames = std::move(records_);
        out.transitions = failsafe_->transitions();
        out.metrics = std::move(metrics_);
        return out;
    }

private:
    enum Kind : int {
        KLinkDown = 0,
        KLinkUp = 1,
        KGenerate = 2,
        KUplinkTimer = 3,
        KEdgeDone = 4,
        KDownlinkTimer = 5,
        KArrival = 6,
        KDeadline = 7,
    };

    struct Event {
        std::int64_t t = 0;
        int kind = 0;
        std::uint64_t a = 0; // stream index or record index
        std::uint64_t b = 0; // seq or timer epoch
    };

    struct EventAfter {
        bool operator()(const Event& x, const Event& y) const {
            if (x.t != y.t) return x.t > y.t;
            if (x.kind != y.kind) return x.kind > y.kind;
            if (x.a != y.a) return x.a > y.a;
            return x.b > y.b;
        }
    };

    void init() {
        end_ns_ = detail::ns_round(sc_.duration_s * Ratio(1000));
        gen_.seed(sc_.seed);
        failsafe_.emplace(sc_.failsafe);
        uplink_.emplace(sc_.link.uplink_rate, sc_.qos);
        downlink_.emplace(sc_.link.downlink_rate, sc_.qos);
        deadline_ns_ = sc_.failsafe.command_deadline_ms * 1000000;

        command_id_ = "command";
        command_bits_ = 64;
        command_rank_ = 0;
        for (const auto& s : sc_.streams) {
            if (s.kind == StreamKind::Command) {
                command_id_ = s.id;
                command_bits_ = s.payload_bits;
                command_rank_ = s.priority.rank;
            }
        }

        for (std::size_t i = 0; i < sc_.streams.size(); ++i) {
            const auto& s = sc_.streams[i];
            if (s.kind == StreamKind::Command || !s.is_framed()) continue;
            schedule_generation(i, 1);
        }
        for (const auto& w : sc_.outages) {
            if (w.start_ns <= end_ns_) events_.push({w.start_ns, KLinkDown, 0, 0});
            if (w.end_ns <= end_ns_) events_.push({w.end_ns, KLinkUp, 0, 0});
        }
    }

    void schedule_generation(std::size_t stream_idx, std::uint64_t k) {
        const auto& s = sc_.streams[stream_idx];
        Ratio interval_ms = *s.frame_interval_s() * Ratio(1000);
        std::int64_t t = detail::ns_round(interval_ms * Ratio(static_cast<std::int64_t>(k)));
        if (t > end_ns_) return;
        events_.push({t, KGenerate, stream_idx, k});
    }

    void dispatch(const Event& ev) {
        switch (ev.kind) {
            case KLinkDown: on_link_down(ev.t); break;
            case KLinkUp: on_link_up(ev.t); break;
            case KGenerate: on_generate(ev.t, ev.a, ev.b); break;
            case KUplinkTimer:
                if (ev.b == ul_epoch_) {
                    process_uplink(uplink_->advance_to(clamped_ms(*uplink_, ev.t)));
                    arm_uplink_timer();
                }
                break;
            case KDownlinkTimer:
                if (ev.b == dl_epoch_) {
                    process_downlink(downlink_->advance_to(clamped_ms(*downlink_, ev.t)));
                    arm_downlink_timer();
                }
                break;
            case KEdgeDone: on_edge_done(ev.t, ev.a); break;
            case KArrival: on_arrival(ev.t, ev.a); break;
            case KDeadline: on_deadline(ev.t, ev.a); break;
            default: break;
        }
    }

    static Ratio clamped_ms(LinkQueue& q, std::int64_t t_ns) {
        Ratio t = detail::ms_of_ns(t_ns);
        return t < q.clock_ms() ? q.clock_ms() : t;
    }

    void on_link_down(std::int64_t now) {
        process_uplink(uplink_->advance_to(clamped_ms(*uplink_, now)));
        process_downlink(downlink_->advance_to(clamped_ms(*downlink_, now)));
        uplink_->set_rate(DataRate(Ratio(0)));
        downlink_->set_rate(DataRate(Ratio(0)));
        note_transition(failsafe_->on_link_event(false, now));
        arm_uplink_timer();
        arm_downlink_timer();
    }

    void on_link_up(std::int64_t now) {
        process_uplink(uplink_->advance_to(clamped_ms(*uplink_, now)));
        process_downlink(downlink_->advance_to(clamped_ms(*downlink_, now)));
        uplink_->set_rate(sc_.link.uplink_rate);
        downlink_->set_rate(sc_.link.downlink_rate);
        note_transition(failsafe_->on_link_event(true, now));
        arm_uplink_timer();
        arm_downlink_timer();
    }

    void on_generate(std::int64_t now, std::size_t stream_idx, std::uint64_t seq) {
        const auto& s = sc_.streams[stream_idx];
        FrameRecord rec;
        rec.stream_id = s.id;
        rec.seq = seq;
        rec.uplink_loop = s.direction == Direction::Uplink;
        rec.t_generated_ns = now;
        rec.rtt_ns = detail::ns_round(sample_rtt(rtt_model_, gen_));
        rec.proc_ns = detail::ns_round(sc_.edge.sample(gen_));
        std::uint64_t tag = records_.size();
        records_.push_back(std::move(rec));

        TransferJob job;
        job.stream_id = s.id;
        job.frame_seq = seq;
        job.size_bits = *s.frame_bits();
        job.enqueue_ms = detail::ms_of_ns(now);
        job.rank = s.priority.rank;
        job.tag = tag;

        if (s.direction == Direction::Uplink) {
            if (s.kind == StreamKind::Video && sc_.video_queue_bound > 0 &&
                uplink_->pending_unstarted(s.id) >=
                    static_cast<std::size_t>(sc_.video_queue_bound)) {
                if (auto dropped = uplink_->remove_oldest_unstarted(s.id))
                    records_[dropped->tag].outcome = FrameOutcome::Dropped;
            }
            process_uplink(uplink_->enqueue(std::move(job)));
            arm_uplink_timer();
            events_.push({now + deadline_ns_, KDeadline, tag, 0});
        } else {
            process_downlink(downlink_->enqueue(std::move(job)));
            arm_downlink_timer();
        }
        schedule_generation(stream_idx, seq + 1);
    }

    void process_uplink(const std::vector<Completion>& done) {
        for (const auto& c : done) {
            FrameRecord& rec = records_[c.job.tag];
            rec.t_tx_start_ns = detail::ns_round(c.first_service_ms);
            rec.t_tx_done_ns = detail::ns_round(c.finish_ms);
            std::int64_t half_up = rec.rtt_ns / 2;
            rec.t_edge_arrival_ns = rec.t_tx_done_ns + half_up;
            std::int64_t edge_done = rec.t_edge_arrival_ns + rec.proc_ns;
            events_.push({edge_done, KEdgeDone, c.job.tag, 0});
        }
    }

    void on_edge_done(std::int64_t now, std::uint64_t tag) {
        FrameRecord& rec = records_[tag];
        rec.t_edge_done_ns = now;
        TransferJob cmd;
        cmd.stream_id = command_id_;
        cmd.frame_seq = ++command_seq_;
        cmd.size_bits = command_bits_;
        cmd.enqueue_ms = clamped_ms(*downlink_, now);
        cmd.rank = command_rank_;
        cmd.tag = tag;
        process_downlink(downlink_->enqueue(std::move(cmd)));
        arm_downlink_timer();
    }

    void process_downlink(const std::vector<Completion>& done) {
        for (const auto& c : done) {
            FrameRecord& rec = records_[c.job.tag];
            std::int64_t finish = detail::ns_round(c.finish_ms);
            std::int64_t half_down = rec.rtt_ns - rec.rtt_ns / 2;
            if (rec.uplink_loop) {
                rec.t_dl_done_ns = finish;
            } else {
                rec.t_tx_start_ns = detail::ns_round(c.first_service_ms);
                rec.t_tx_done_ns = finish;
                rec.t_edge_done_ns = rec.t_generated_ns;
                rec.t_dl_done_ns = finish;
            }
            events_.push({finish + half_down, KArrival, c.job.tag, 0});
        }
    }

    void on_arrival(std::int64_t now, std::uint64_t tag) {
        FrameRecord& rec = records_[tag];
        rec.t_cmd_received_ns = now;
        rec.outcome = FrameOutcome::Delivered;
        rec.control_latency_ns = now - rec.t_generated_ns;
        if (rec.uplink_loop && !rec.deadline_fired)
            note_transition(failsafe_->on_command_outcome(CommandOutcome::OnTime, now));
    }

    void on_deadline(std::int64_t now, std::uint64_t tag) {
        FrameRecord& rec = records_[tag];
        if (rec.outcome == FrameOutcome::Delivered || rec.deadline_fired) return;
        rec.deadline_fired = true;
        note_transition(failsafe_->on_command_outcome(CommandOutcome::Missed, now));
    }

    void note_transition(const std::optional<ModeTransition>&) {
        // transitions accumulate inside the machine; hook kept for clarity
    }

    void arm_uplink_timer() {
        ++ul_epoch_;
        if (auto t = uplink_->next_completion_time())
            events_.push({std::max<std::int64_t>(detail::ns_ceil(*t), 0), KUplinkTimer, 0,
                          ul_epoch_});
    }

    void arm_downlink_timer() {
        ++dl_epoch_;
        if (auto t = downlink_->next_completion_time())
            events_.push({std::max<std::int64_t>(detail::ns_ceil(*t), 0), KDownlinkTimer, 0,
                          dl_epoch_});
    }

    void finalize() {
        std::map<std::string, std::vector<std::int64_t>> latencies;
        std::int64_t upper_ns = detail::ns_round(sc_.budget.upper_ms);
        std::map<std::string, std::uint64_t> violations;

        for (const auto& rec : records_) {
            auto& m = metrics_.per_stream[rec.stream_id];
            ++m.generated;
            ++metrics_.total.generated;
            switch (rec.outcome) {
                case FrameOutcome::Delivered:
                    ++m.delivered;
                    ++metrics_.total.delivered;
                    latencies[rec.stream_id].push_back(rec.control_latency_ns);
                    if (rec.control_latency_ns > upper_ns) ++violations[rec.stream_id];
                    break;
                case FrameOutcome::Dropped:
                    ++m.dropped;
                    ++metrics_.total.dropped;
                    break;
                case FrameOutcome::InFlightAtEnd:
                    ++m.in_flight;
                    ++metrics_.total.in_flight;
                    break;
            }
        }

        std::vector<std::int64_t> all;
        for (auto& [id, v] : latencies) {
            std::sort(v.begin(), v.end());
            all.insert(all.end(), v.begin(), v.end());
            auto& m = metrics_.per_stream[id];
            m.latency = stats_of(v);
            m.budget_violation_fraction =
                m.delivered ? static_cast<double>(violations[id]) /
                                  static_cast<double>(m.delivered)
                            : 0.0;
        }
        std::sort(all.begin(), all.end());
        metrics_.total.latency = stats_of(all);
        std::uint64_t total_viol = 0;
        for (auto& [id, n] : violations) total_viol += n;
        metrics_.total.budget_violation_fraction =
            metrics_.total.delivered
                ? static_cast<double>(total_viol) / static_cast<double>(metrics_.total.delivered)
                : 0.0;

        // fallback accounting
        std::int64_t fallback_since = -1;
        for (const auto& tr : failsafe_->transitions()) {
            ++metrics_.mode_transitions;
            if (tr.to == ControlModeKind::LocalFallback) {
                ++metrics_.fallback_episodes;
                fallback_since = tr.time;
            } else if (fallback_since >= 0) {
                metrics_.fallback_total_ns += tr.time - fallback_since;
                fallback_since = -1;
            }
        }
        if (fallback_since >= 0) metrics_.fallback_total_ns += end_ns_ - fallback_since;

        // conservation holds by construction; make violations loud
        for (const auto& [id, m] : metrics_.per_stream) {
            if (m.generated != m.delivered + m.dropped + m.in_flight)
                throw std::logic_error("frame conservation violated for stream " + id);
        }
    }

    static LatencyStats stats_of(const std::vector<std::int64_t>& sorted_ns) {
        LatencyStats st;
        st.count = sorted_ns.size();
        if (sorted_ns.empty()) return st;
        double sum = 0;
        for (auto v : sorted_ns) sum += static_cast<double>(v);
        st.mean_ms = sum / static_cast<double>(sorted_ns.size()) / 1e6;
        st.p50_ms = detail::percentile_ms(sorted_ns, 0.50);
        st.p95_ms = detail::percentile_ms(sorted_ns, 0.95);
        st.p99_ms = detail::percentile_ms(sorted_ns, 0.99);
        st.max_ms = static_cast<double>(sorted_ns.back()) / 1e6;
        return st;
    }

    Scenario sc_;
    RttModel rtt_model_ = RttModel::deterministic(Ratio(1));
    std::mt19937_64 gen_;
    std::priority_queue<Event, std::vector<Event>, EventAfter> events_;
    std::optional<LinkQueue> uplink_;
    std::optional<LinkQueue> downlink_;
    std::optional<FailsafeMachine> failsafe_;
    std::vector<FrameRecord> records_;
    Metrics metrics_;
    std::int64_t end_ns_ = 0;
    std::int64_t deadline_ns_ = 0;
    std::uint64_t ul_epoch_ = 0;
    std::uint64_t dl_epoch_ = 0;
    std::uint64_t command_seq_ = 0;
    std::string command_id_;
    std::int64_t command_bits_ = 64;
    int command_rank_ = 0;
};

inline RunResult run(const Scenario& scenario) { return Engine(scenario).run(); }

/// Closed-form steady-state control latency for the single-stream,
/// deterministic case: frame transmission time + RTT + edge processing.
/// Defined only when the network is underloaded, so no queueing occurs.
inline Ratio analytic_crosscheck(const Scenario& scenario) {
    scenario.validate();
    RttModel rtt = scenario.rtt_model();
    if (rtt.jitter != RttJitter::Deterministic && rtt.sigma != 0.0)
        throw std::domain_error("crosscheck undefined: stochastic rtt");
    if (scenario.edge.sigma_ms != 0.0)
        throw std::domain_error("crosscheck undefined: stochastic edge processing");
    const StreamSpec* up = nullptr;
    for (const auto& s : scenario.streams) {
        if (s.direction != Direction::Uplink) continue;
        if (up) throw std::domain_error("crosscheck undefined: multiple uplink streams");
        up = &s;
    }
    if (!up || !up->is_framed())
        throw std::domain_error("crosscheck undefined: need one framed uplink stream");
    if (!(up->rate().bps < scenario.link.uplink_rate.bps))
        throw std::domain_error("crosscheck undefined: uplink utilization >= 1");
    Ratio tx = frame_transmission_time(*up->frame_bits(), scenario.link.uplink_rate);
    return tx + rtt.mean_ms + scenario.edge.mean_ms;
}

} // namespace clmb
