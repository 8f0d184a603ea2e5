#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace clmb {

/// Failsafe thresholds. The defaults fail over quickly (3 consecutive
/// command deadline misses) and restore conservatively (10 consecutive
/// on-time commands).
struct FailsafeConfig {
    int miss_threshold = 3;
    std::int64_t command_deadline_ms = 125;
    int recovery_probes = 10;
    std::string alert_channel = "haptic_feedback";

    void validate() const {
        if (miss_threshold < 1) throw std::domain_error("miss_threshold must be >= 1");
        if (recovery_probes < 1) throw std::domain_error("recovery_probes must be >= 1");
        if (command_deadline_ms <= 0) throw std::domain_error("command_deadline must be > 0");
    }
};

enum class ControlModeKind { EdgeActive, LocalFallback };
enum class Capability { FullDexterity, GrossMotions };
enum class TransitionCause { TimeoutStreak, LinkDown, RecoveryStreak, LinkUpProbes };

inline const char* to_string(ControlModeKind m) {
    return m == ControlModeKind::EdgeActive ? "edge_active" : "local_fallback";
}
inline const char* to_string(Capability c) {
    return c == Capability::FullDexterity ? "full_dexterity" : "gross_motions";
}
inline const char* to_string(TransitionCause c) {
    switch (c) {
        case TransitionCause::TimeoutStreak: return "timeout_streak";
        case TransitionCause::LinkDown: return "link_down";
        case TransitionCause::RecoveryStreak: return "recovery_streak";
        case TransitionCause::LinkUpProbes: return "link_up_probes";
    }
    return "?";
}

struct ControlMode {
    ControlModeKind mode = ControlModeKind::EdgeActive;
    Capability capability = Capability::FullDexterity;
    std::int64_t since = 0;
};

struct ModeTransition {
    std::int64_t time = 0;
    ControlModeKind from = ControlModeKind::EdgeActive;
    ControlModeKind to = ControlModeKind::LocalFallback;
    TransitionCause cause = TransitionCause::TimeoutStreak;
    bool alert_emitted = true;
};

enum class CommandOutcome { OnTime, Missed };

// Edge<->local shared-control state machine. In EdgeActive a streak of
// miss_threshold consecutive deadline misses, or an explicit link-down,
// drops to LocalFallback (gross motions only). Recovery is hysteretic:
// link-up alone does not restore edge control, recovery_probes consecutive
// on-time commands must flow first. Every transition carries a user alert.
//
// Time is caller-defined ticks (the engine feeds nanoseconds, tests feed
// milliseconds); the machine only requires monotonicity.
class FailsafeMachine {
public:
    explicit FailsafeMachine(FailsafeConfig config) : cfg_(config) { cfg_.validate(); }

    const FailsafeConfig& config() const { return cfg_; }
    ControlModeKind mode() const { return state_.mode; }
    const ControlMode& control_mode() const { return state_; }
    int miss_streak() const { return miss_streak_; }
    int recovery_streak() const { return recovery_streak_; }

    Capability capability() const {
        return state_.mode == ControlModeKind::EdgeActive ? Capability::FullDexterity
                                                          : Capability::GrossMotions;
    }

    std::optional<ModeTransition> on_command_outcome(CommandOutcome outcome,
                                                     std::int64_t now) {
        check_clock(now);
        if (state_.mode == ControlModeKind::EdgeActive) {
            if (outcome == CommandOutcome::OnTime) {
                miss_streak_ = 0;
                return std::nullopt;
            }
            if (++miss_streak_ >= cfg_.miss_threshold)
                return transition(ControlModeKind::LocalFallback,
                                  TransitionCause::TimeoutStreak, now);
            return std::nullopt;
        }
        // LocalFallback: only a clean run of on-time probes restores edge mode.
        if (outcome == CommandOutcome::Missed) {
            recovery_streak_ = 0;
            return std::nullopt;
        }
        if (++recovery_streak_ >= cfg_.recovery_probes)
            return transition(ControlModeKind::EdgeActive,
                              episode_saw_down_ ? TransitionCause::LinkUpProbes
                                                : TransitionCause::RecoveryStreak,
                              now);
        return std::nullopt;
    }

    std::optional<ModeTransition> on_link_event(bool link_up, std::int64_t now) {
        check_clock(now);
        if (!link_up) {
            if (state_.mode == ControlModeKind::EdgeActive)
                return transition(ControlModeKind::LocalFallback, TransitionCause::LinkDown,
                                  now);
            // already fallen back: absorb, but stale probes no longer count
            recovery_streak_ = 0;
            episode_saw_down_ = true;
            return std::nullopt;
        }
        // link recovered: hysteresis, stay local until the probes succeed
        return std::nullopt;
    }

    const std::vector<ModeTransition>& transitions() const { return history_; }

private:
    std::optional<ModeTransition> transition(ControlModeKind to, TransitionCause cause,
                                             std::int64_t now) {
        ModeTransition t;
        t.time = now;
        t.from = state_.mode;
        t.to = to;
        t.cause = cause;
        t.alert_emitted = true;
        state_.mode = to;
        state_.capability = capability();
        state_.since = now;
        miss_streak_ = 0;
        recovery_streak_ = 0;
        episode_saw_down_ = (to == ControlModeKind::LocalFallback &&
                             cause == TransitionCause::LinkDown);
        history_.push_back(t);
        return t;
    }

    void check_clock(std::int64_t now) {
        if (now < last_now_) throw std::logic_error("non-monotone clock");
        last_now_ = now;
    }

    FailsafeConfig cfg_;
    ControlMode state_;
    int miss_streak_ = 0;
    int recovery_streak_ = 0;
    bool episode_saw_down_ = false;
    std::int64_t last_now_ = 0;
    std::vector<ModeTransition> history_;
};

} // namespace clmb
