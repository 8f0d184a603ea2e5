#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "clmb/ratio.hpp"

namespace clmb {

// Decimal SI units throughout: 1 kb/s = 1e3 b/s, 1 Mb/s = 1e6 b/s, 1 Gb/s = 1e9 b/s.

/// Exact data rate in bits per second.
struct DataRate {
    Ratio bps;

    DataRate() = default;
    explicit DataRate(Ratio bits_per_second) : bps(bits_per_second) {
        if (bps.is_negative()) throw std::domain_error("negative data rate");
    }

    static DataRate from_bps(std::int64_t v) { return DataRate(Ratio(v)); }
    static DataRate from_kbps(std::int64_t v) { return DataRate(Ratio(v * 1000)); }
    static DataRate from_mbps(std::int64_t v) { return DataRate(Ratio(v * 1000000)); }

    Ratio kbps() const { return bps / Ratio(1000); }
    Ratio mbps() const { return bps / Ratio(1000000); }
    Ratio gbps() const { return bps / Ratio(1000000000); }

    friend DataRate operator+(const DataRate& a, const DataRate& b) {
        return DataRate(a.bps + b.bps);
    }
    friend bool operator==(const DataRate& a, const DataRate& b) { return a.bps == b.bps; }
    friend bool operator!=(const DataRate& a, const DataRate& b) { return !(a == b); }
    friend bool operator<(const DataRate& a, const DataRate& b) { return a.bps < b.bps; }
    friend bool operator<=(const DataRate& a, const DataRate& b) { return a.bps <= b.bps; }
};

enum class StreamKind { SampledSensor, Video, Feedback, Command };
enum class Direction { Uplink, Downlink };

/// Total priority order over streams; rank 0 is served first.
struct PriorityClass {
    int rank = 0;

    friend bool operator==(const PriorityClass& a, const PriorityClass& b) { return a.rank == b.rank; }
    friend bool operator<(const PriorityClass& a, const PriorityClass& b) { return a.rank < b.rank; }
};

inline const char* to_string(StreamKind k) {
    switch (k) {
        case StreamKind::SampledSensor: return "sampled_sensor";
        case StreamKind::Video: return "video";
        case StreamKind::Feedback: return "feedback";
        case StreamKind::Command: return "command";
    }
    return "?";
}

inline const char* to_string(Direction d) {
    return d == Direction::Uplink ? "uplink" : "downlink";
}

/// channels x sample_rate x bits_per_sample, exact.
inline DataRate sampled_stream_rate(std::int64_t channels, Ratio sample_rate_hz,
                                    std::int64_t bits_per_sample) {
    if (channels < 0 || bits_per_sample < 0 || sample_rate_hz.is_negative())
        throw std::domain_error("negative stream parameter");
    return DataRate(Ratio(channels) * sample_rate_hz * Ratio(bits_per_sample));
}

/// width x height x bits_per_pixel x fps, exact.
inline DataRate video_stream_rate(std::int64_t width, std::int64_t height,
                                  std::int64_t bits_per_pixel, Ratio fps) {
    if (width < 0 || height < 0 || bits_per_pixel < 0 || fps.is_negative())
        throw std::domain_error("negative stream parameter");
    return DataRate(Ratio(width) * Ratio(height) * Ratio(bits_per_pixel) * fps);
}

/// Bits in one raw video frame: width x height x bits_per_pixel.
inline std::int64_t frame_size(std::int64_t width, std::int64_t height,
                               std::int64_t bits_per_pixel) {
    if (width < 0 || height < 0 || bits_per_pixel < 0)
        throw std::domain_error("negative stream parameter");
    return width * height * bits_per_pixel;
}

struct SampledParams {
    std::int64_t channels = 0;
    Ratio sample_rate_hz;
    std::int64_t bits_per_sample = 0;
};

struct VideoParams {
    std::int64_t width = 0;
    std::int64_t height = 0;
    std::int64_t bits_per_pixel = 0;
    Ratio fps;
};

/// One sensory/feedback/command stream. Construct through the factories;
/// they enforce the per-kind field rules.
struct StreamSpec {
    std::string id;
    StreamKind kind = StreamKind::SampledSensor;
    Direction direction = Direction::Uplink;
    PriorityClass priority;

    std::optional<SampledParams> sampled;   // SampledSensor / sampled Feedback
    std::optional<VideoParams> video;       // Video only
    std::optional<DataRate> constant_rate;  // opaque constant-rate streams (e.g. XR)
    std::int64_t payload_bits = 0;          // Command: bits per decision
    Ratio decision_rate_hz;                 // Command: decisions per second

    static StreamSpec make_sampled(std::string id, StreamKind kind, Direction dir,
                                   std::int64_t channels, Ratio sample_rate_hz,
                                   std::int64_t bits_per_sample, int rank) {
        if (kind == StreamKind::Video || kind == StreamKind::Command)
            throw std::domain_error("sampled stream must be a sensor or feedback stream");
        if (channels < 0) throw std::domain_error("channels must be >= 0");
        if (sample_rate_hz.is_negative()) throw std::domain_error("sample_rate must be >= 0");
        if (bits_per_sample < 1 || bits_per_sample > 64)
            throw std::domain_error("bits_per_sample must be in 1..64");
        StreamSpec s;
        s.id = std::move(id);
        s.kind = kind;
        s.direction = dir;
        s.priority = {rank};
        s.sampled = SampledParams{channels, sample_rate_hz, bits_per_sample};
        return s;
    }

    static StreamSpec make_video(std::string id, Direction dir, std::int64_t width,
                                 std::int64_t height, std::int64_t bits_per_pixel,
                                 Ratio fps, int rank) {
        if (width < 0 || height < 0 || bits_per_pixel < 0 || fps.is_negative())
            throw std::domain_error("negative video parameter");
        StreamSpec s;
        s.id = std::move(id);
        s.kind = StreamKind::Video;
        s.direction = dir;
        s.priority = {rank};
        s.video = VideoParams{width, height, bits_per_pixel, fps};
        return s;
    }

    static StreamSpec make_constant_rate(std::string id, StreamKind kind, Direction dir,
                                         DataRate rate, int rank) {
        StreamSpec s;
        s.id = std::move(id);
        s.kind = kind;
        s.direction = dir;
        s.priority = {rank};
        s.constant_rate = rate;
        return s;
    }

    static StreamSpec make_command(std::string id, std::int64_t payload_bits,
                                   Ratio decision_rate_hz, int rank) {
        if (payload_bits <= 0) throw std::domain_error("command payload must be positive");
        StreamSpec s;
        s.id = std::move(id);
        s.kind = StreamKind::Command;
        s.direction = Direction::Downlink;
        s.priority = {rank};
        s.payload_bits = payload_bits;
        s.decision_rate_hz = decision_rate_hz;
        return s;
    }

    DataRate rate() const {
        if (sampled)
            return sampled_stream_rate(sampled->channels, sampled->sample_rate_hz,
                                       sampled->bits_per_sample);
        if (video)
            return video_stream_rate(video->width, video->height, video->bits_per_pixel,
                                     video->fps);
        if (constant_rate) return *constant_rate;
        return DataRate(Ratio(payload_bits) * decision_rate_hz);
    }

    /// Bits per frame, or nullopt for rate-only streams without frame structure.
    std::optional<std::int64_t> frame_bits() const {
        if (sampled) return sampled->channels * sampled->bits_per_sample;
        if (video) return frame_size(video->width, video->height, video->bits_per_pixel);
        if (kind == StreamKind::Command) return payload_bits;
        return std::nullopt;
    }

    /// Seconds between frames; nullopt when unframed or the frame rate is zero.
    std::optional<Ratio> frame_interval_s() const {
        if (sampled && !sampled->sample_rate_hz.is_zero())
            return Ratio(1) / sampled->sample_rate_hz;
        if (video && !video->fps.is_zero()) return Ratio(1) / video->fps;
        if (kind == StreamKind::Command && !decision_rate_hz.is_zero())
            return Ratio(1) / decision_rate_hz;
        return std::nullopt;
    }

    bool is_framed() const { return frame_bits().has_value() && frame_interval_s().has_value(); }
};

// Catalog priority ranks: command outranks everything, EMG leads the uplink
// sensors, feedback trails the downlink.
inline std::vector<StreamSpec> builtin_catalog() {
    std::vector<StreamSpec> v;
    v.push_back(StreamSpec::make_command("command", 64, Ratio(30), 0));
    v.push_back(StreamSpec::make_sampled("emg64", StreamKind::SampledSensor,
                                         Direction::Uplink, 64, Ratio(2000), 16, 1));
    v.push_back(StreamSpec::make_sampled("imu", StreamKind::SampledSensor,
                                         Direction::Uplink, 9, Ratio(50), 8, 2));
    v.push_back(StreamSpec::make_sampled("tactile64", StreamKind::SampledSensor,
                                         Direction::Uplink, 64, Ratio(2000), 8, 3));
    v.push_back(StreamSpec::make_video("rgbd_camera", Direction::Uplink, 424, 240, 32,
                                       Ratio(30), 4));
    v.push_back(StreamSpec::make_sampled("haptic_feedback", StreamKind::Feedback,
                                         Direction::Downlink, 64, Ratio(100), 8, 5));
    v.push_back(StreamSpec::make_constant_rate("xr_feedback", StreamKind::Feedback,
                                               Direction::Downlink,
                                               DataRate::from_mbps(400), 6));
    return v;
}

inline const StreamSpec* find_stream(const std::vector<StreamSpec>& catalog,
                                     const std::string& id) {
    for (const auto& s : catalog)
        if (s.id == id) return &s;
    return nullptr;
}

} // namespace clmb
