#pragma once

#include <cstdint>
#include <deque>
#include <iterator>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "clmb/link_model.hpp"
#include "clmb/ratio.hpp"
#include "clmb/stream_catalog.hpp"

namespace clmb {

struct SliceReservation {
    int rank = 0;
    Ratio fraction; // of link rate, in [0,1]
};

struct SchedulerPolicy {
    enum class Discipline { StrictPriority, SlicedWeightedShare };

    Discipline discipline = Discipline::StrictPriority;
    bool preemptive = true; // StrictPriority only
    std::vector<SliceReservation> slices;

    static SchedulerPolicy strict(bool preemptive = true) {
        SchedulerPolicy p;
        p.discipline = Discipline::StrictPriority;
        p.preemptive = preemptive;
        return p;
    }

    static SchedulerPolicy sliced(std::vector<SliceReservation> slices) {
        SchedulerPolicy p;
        p.discipline = Discipline::SlicedWeightedShare;
        p.slices = std::move(slices);
        return p;
    }

    void validate() const {
        if (discipline == Discipline::StrictPriority) {
            if (!slices.empty())
                throw std::domain_error("strict policy takes no slices");
            return;
        }
        Ratio sum;
        for (const auto& s : slices) {
            if (s.fraction.is_negative() || s.fraction > Ratio(1))
                throw std::domain_error("slice fraction must be in [0,1]");
            sum += s.fraction;
        }
        if (sum > Ratio(1))
            throw std::domain_error("slice fractions must sum to <= 1");
    }
};

/// One frame's worth of bits to move across the link.
struct TransferJob {
    std::string stream_id;
    std::uint64_t frame_seq = 0;
    std::int64_t size_bits = 0;
    Ratio enqueue_ms;
    int rank = 0;
    std::uint64_t tag = 0; // opaque caller cookie, not part of identity
};

struct Completion {
    TransferJob job;
    Ratio finish_ms;
    Ratio first_service_ms;
};

struct ServiceSegment {
    std::string stream_id;
    std::uint64_t seq = 0;
    Ratio start_ms;
    Ratio end_ms;
    Ratio rate_bps;
};

// Fluid per-direction link scheduler. Service is continuous at the link
// rate with no packet boundaries, so a lone job's service time reduces to
// frame_transmission_time exactly. Time flows only through enqueue() /
// advance_to() / next_completion(); all arithmetic is exact rational.
//
// StrictPriority: the head job of the lowest backlogged rank owns the whole
// link. Preemption happens at enqueue boundaries; preempted jobs keep their
// residual bits. The non-preemptive variant pins the job in service until
// it drains. SlicedWeightedShare: every backlogged slice is served at
// rate * fraction / sum(backlogged fractions); idle and unreserved capacity
// redistributes proportionally, so a lone backlogged slice still gets the
// whole link.
class LinkQueue {
public:
    LinkQueue(DataRate rate, SchedulerPolicy policy, bool record_segments = false)
        : rate_bits_per_ms_(rate.bps / Ratio(1000)),
          policy_(std::move(policy)),
          record_segments_(record_segments) {
        policy_.validate();
        if (!(Ratio(0) < rate.bps)) throw std::domain_error("nonpositive link rate");
        for (const auto& s : policy_.slices) reserved_[s.rank] = s.fraction;
    }

    Ratio clock_ms() const { return clock_; }
    bool backlogged() const { return job_count_ > 0; }
    std::size_t pending_jobs() const { return job_count_; }

    Ratio pending_bits() const {
        Ratio total;
        for (const auto& [rank, q] : queues_)
            for (const auto& a : q) total += a.remaining_bits;
        return total;
    }

    const std::vector<ServiceSegment>& segments() const { return segments_; }

    void set_rate(DataRate rate) { rate_bits_per_ms_ = rate.bps / Ratio(1000); }
    bool stalled() const { return rate_bits_per_ms_.is_zero(); }

    /// Queue depth for one stream, not counting a job already in service.
    std::size_t pending_unstarted(const std::string& stream_id) const {
        std::size_t n = 0;
        for (const auto& [rank, q] : queues_)
            for (const auto& a : q)
                if (a.job.stream_id == stream_id && !a.first_service) ++n;
        return n;
    }

    /// Removes the oldest not-yet-started job of a stream (drop policy).
    std::optional<TransferJob> remove_oldest_unstarted(const std::string& stream_id) {
        for (auto& [rank, q] : queues_) {
            for (auto it = q.begin(); it != q.end(); ++it) {
                if (it->job.stream_id == stream_id && !it->first_service) {
                    TransferJob job = it->job;
                    q.erase(it);
                    --job_count_;
                    prune_empty(rank);
                    return job;
                }
            }
        }
        return std::nullopt;
    }

    /// Advances the fluid state to the job's arrival instant, then admits it.
    /// Returns any completions that occurred on the way.
    std::vector<Completion> enqueue(TransferJob job) {
        if (job.size_bits <= 0) throw std::domain_error("job size must be positive");
        if (job.enqueue_ms < clock_)
            throw std::logic_error("enqueue before queue clock");
        auto [it, fresh] = per_stream_.try_emplace(job.stream_id);
        if (!fresh) {
            if (job.frame_seq == it->second.last_seq)
                throw std::domain_error("duplicate frame");
            if (job.frame_seq < it->second.last_seq)
                throw std::domain_error("frame_seq must increase per stream");
            if (job.enqueue_ms < it->second.last_enqueue)
                throw std::domain_error("enqueue_time must be nondecreasing per stream");
        }
        it->second.last_seq = job.frame_seq;
        it->second.last_enqueue = job.enqueue_ms;

        auto done = advance_to(job.enqueue_ms);

        Active a;
        a.remaining_bits = Ratio(job.size_bits);
        a.job = std::move(job);
        auto& q = queues_[a.job.rank];
        // FIFO by (enqueue_time, stream_id, seq); arrivals come in time order
        // so the slot is near the back. Never displace a job already in service.
        auto pos = q.end();
        while (pos != q.begin()) {
            auto prev = std::prev(pos);
            if (prev->first_service) break;
            if (!ordered_after(a, *prev)) pos = prev;
            else break;
        }
        q.insert(pos, std::move(a));
        ++job_count_;
        return done;
    }

    /// Serves fluid up to absolute time t, emitting completions in order.
    std::vector<Completion> advance_to(Ratio t) {
        if (t < clock_) throw std::logic_error("link queue time regression");
        std::vector<Completion> done;
        drain_buffer(done);
        while (clock_ < t && job_count_ > 0 && !rate_bits_per_ms_.is_zero()) {
            auto alloc = current_allocation();
            // earliest head to drain under the current allocation
            Ratio dt_min = t - clock_;
            bool completion_within = false;
            for (const auto& [rank, service_rate] : alloc) {
                Ratio dt = queues_[rank].front().remaining_bits / service_rate;
                if (dt < dt_min || (!completion_within && dt == dt_min)) {
                    completion_within = true;
                    if (dt < dt_min) dt_min = dt;
                }
            }
            Ratio step = dt_min;
            Ratio until = clock_ + step;
            for (const auto& [rank, service_rate] : alloc) {
                Active& head = queues_[rank].front();
                if (!head.first_service && !step.is_zero()) head.first_service = clock_;
                head.remaining_bits -= service_rate * step;
                if (record_segments_ && !step.is_zero())
                    segments_.push_back({head.job.stream_id, head.job.frame_seq, clock_,
                                         until, service_rate * Ratio(1000)});
            }
            clock_ = until;
            // pop drained heads (several slices may finish simultaneously)
            for (const auto& [rank, service_rate] : alloc) {
                auto& q = queues_[rank];
                if (!q.empty() && q.front().remaining_bits.is_zero()) {
                    Active& head = q.front();
                    done.push_back({head.job, clock_,
                                    head.first_service ? *head.first_service : clock_});
                    if (pinned_ && pinned_->first == rank &&
                        pinned_->second == head.job.frame_seq)
                        pinned_.reset();
                    q.pop_front();
                    --job_count_;
                    prune_empty(rank);
                }
            }
            if (!completion_within) break; // time exhausted mid-service
        }
        if (clock_ < t) clock_ = t; // idle or stalled remainder
        return done;
    }

    /// Absolute finish time of the next completion assuming no further
    /// arrivals; nullopt when idle or stalled.
    std::optional<Ratio> next_completion_time() {
        if (!buffer_.empty()) return buffer_.front().finish_ms;
        if (job_count_ == 0 || rate_bits_per_ms_.is_zero()) return std::nullopt;
        auto alloc = current_allocation();
        std::optional<Ratio> best;
        for (const auto& [rank, service_rate] : alloc) {
            Ratio t = clock_ + queues_[rank].front().remaining_bits / service_rate;
            if (!best || t < *best) best = t;
        }
        return best;
    }

    /// Runs the fluid model from `now` until the next job drains and returns
    /// it. Simultaneous completions are handed out one call at a time.
    Completion next_completion(Ratio now) {
        if (buffer_.empty()) {
            auto done = advance_to(now < clock_ ? clock_ : now);
            for (auto& c : done) buffer_.push_back(std::move(c));
        }
        if (buffer_.empty()) {
            if (job_count_ == 0) throw std::domain_error("no pending work");
            if (rate_bits_per_ms_.is_zero())
                throw std::domain_error("link stalled, no completion forthcoming");
            auto t = next_completion_time();
            auto done = advance_to(*t);
            for (auto& c : done) buffer_.push_back(std::move(c));
        }
        Completion c = std::move(buffer_.front());
        buffer_.pop_front();
        return c;
    }

private:
    struct Active {
        TransferJob job;
        Ratio remaining_bits;
        std::optional<Ratio> first_service;
    };

    struct StreamHistory {
        std::uint64_t last_seq = 0;
        Ratio last_enqueue;
    };

    static bool ordered_after(const Active& a, const Active& b) {
        // true when a belongs after b in FIFO order
        if (a.job.enqueue_ms != b.job.enqueue_ms) return b.job.enqueue_ms < a.job.enqueue_ms;
        if (a.job.stream_id != b.job.stream_id) return b.job.stream_id < a.job.stream_id;
        return b.job.frame_seq < a.job.frame_seq;
    }

    void prune_empty(int rank) {
        auto it = queues_.find(rank);
        if (it != queues_.end() && it->second.empty()) queues_.erase(it);
    }

    void drain_buffer(std::vector<Completion>& out) {
        while (!buffer_.empty()) {
            out.push_back(std::move(buffer_.front()));
            buffer_.pop_front();
        }
    }

    /// (rank, service rate in bits/ms) for every head currently being served.
    std::vector<std::pair<int, Ratio>> current_allocation() {
        std::vector<std::pair<int, Ratio>> alloc;
        if (policy_.discipline == SchedulerPolicy::Discipline::StrictPriority) {
            int rank = 0;
            if (!policy_.preemptive && pinned_) {
                rank = pinned_->first;
            } else {
                rank = queues_.begin()->first; // lowest rank backlogged
                if (!policy_.preemptive)
                    pinned_ = {rank, queues_.begin()->second.front().job.frame_seq};
            }
            alloc.emplace_back(rank, rate_bits_per_ms_);
            return alloc;
        }
        // Sliced: normalize reserved fractions over the backlogged set.
        Ratio sum;
        for (const auto& [rank, q] : queues_) sum += reserved_fraction(rank);
        if (sum.is_zero()) {
            Ratio equal = Ratio(1) / Ratio(static_cast<std::int64_t>(queues_.size()));
            for (const auto& [rank, q] : queues_)
                alloc.emplace_back(rank, rate_bits_per_ms_ * equal);
        } else {
            for (const auto& [rank, q] : queues_) {
                Ratio share = reserved_fraction(rank) / sum;
                if (!share.is_zero())
                    alloc.emplace_back(rank, rate_bits_per_ms_ * share);
            }
        }
        return alloc;
    }

    Ratio reserved_fraction(int rank) const {
        auto it = reserved_.find(rank);
        return it == reserved_.end() ? Ratio(0) : it->second;
    }

    Ratio rate_bits_per_ms_;
    SchedulerPolicy policy_;
    bool record_segments_ = false;
    Ratio clock_;
    std::map<int, std::deque<Active>> queues_;
    std::map<int, Ratio> reserved_;
    std::unordered_map<std::string, StreamHistory> per_stream_;
    std::deque<Completion> buffer_;
    std::optional<std::pair<int, std::uint64_t>> pinned_; // non-preemptive strict
    std::size_t job_count_ = 0;
};

struct DirectionLoad {
    DataRate offered;
    DataRate capacity;
    double utilization = 0.0;
    bool feasible = true;
};

struct FeasibilityReport {
    DirectionLoad uplink;
    DirectionLoad downlink;
};

/// Sums stream rates per direction against a link profile's capacity.
inline FeasibilityReport feasibility_report(const std::vector<StreamSpec>& streams,
                                            const LinkProfile& profile) {
    FeasibilityReport r;
    r.uplink.capacity = profile.uplink_rate;
    r.downlink.capacity = profile.downlink_rate;
    for (const auto& s : streams) {
        auto& side = s.direction == Direction::Uplink ? r.uplink : r.downlink;
        side.offered = side.offered + s.rate();
    }
    for (auto* side : {&r.uplink, &r.downlink}) {
        side->feasible = side->offered <= side->capacity;
        side->utilization = (side->offered.bps / side->capacity.bps).to_double();
    }
    return r;
}

} // namespace clmb
