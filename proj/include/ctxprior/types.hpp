#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctxprior/errors.hpp"

namespace ctxprior {

// ---------------------------------------------------------------------------
// Feature channels
// ---------------------------------------------------------------------------

enum class ChannelId { Target, Nontarget, Coarse };

inline constexpr std::array<ChannelId, 3> kAllChannels = {
    ChannelId::Target, ChannelId::Nontarget, ChannelId::Coarse};

const char* channel_name(ChannelId id);    // "target" / "nontarget" / "coarse"
char channel_letter(ChannelId id);         // 'T' / 'N' / 'C'
ChannelId parse_channel(const std::string& name);

// Nonempty subset of the three channels, e.g. "NC". Iteration order is always
// the canonical T, N, C order regardless of how the subset was written.
class ChannelSet {
  public:
    ChannelSet() = default;

    static ChannelSet of(std::initializer_list<ChannelId> ids) {
        ChannelSet s;
        for (ChannelId id : ids) s.insert(id);
        return s;
    }

    // Parses letter strings like "T", "NC", "TNC".
    static ChannelSet parse(const std::string& letters);

    // The seven nonempty subsets in enumeration order T, N, C, TN, TC, NC, TNC.
    static const std::array<ChannelSet, 7>& all_nonempty();

    void insert(ChannelId id) { bits_ |= bit(id); }
    bool contains(ChannelId id) const { return (bits_ & bit(id)) != 0; }
    bool empty() const { return bits_ == 0; }
    int size() const;

    // Member channels in canonical order.
    std::vector<ChannelId> channels() const;

    std::string to_string() const;  // letters, e.g. "NC"

    bool operator==(const ChannelSet& o) const { return bits_ == o.bits_; }
    bool operator!=(const ChannelSet& o) const { return bits_ != o.bits_; }
    bool operator<(const ChannelSet& o) const { return bits_ < o.bits_; }

  private:
    static std::uint8_t bit(ChannelId id) { return static_cast<std::uint8_t>(1u << static_cast<int>(id)); }
    std::uint8_t bits_ = 0;
};

// ---------------------------------------------------------------------------
// Ratings
// ---------------------------------------------------------------------------

enum class RatingDimension { Likelihood, XPos, YPos, Scale, Aspect };

inline constexpr std::array<RatingDimension, 5> kAllDimensions = {
    RatingDimension::Likelihood, RatingDimension::XPos, RatingDimension::YPos,
    RatingDimension::Scale, RatingDimension::Aspect};

const char* dimension_name(RatingDimension d);  // "likelihood", "xpos", ...
RatingDimension parse_dimension(const std::string& name);

struct FrameSize {
    double width_px = 640.0;
    double height_px = 480.0;
};

struct SliderRange {
    double min = 0.0;
    double max = 100.0;
};

// Pixel-space box drawn by one subject; (x, y) is the top-left corner.
struct BoxPx {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
};

struct RawRating {
    std::string subject_id;
    std::string scene_id;
    std::string category;       // e.g. "car" or "person"
    double likelihood_raw = 0.0;  // in slider units
    std::optional<BoxPx> box;
};

// Per-scene, per-category summary over subjects. Geometry fields are present
// iff at least one subject drew a box (n_boxes >= 1).
struct RatingAggregate {
    std::string scene_id;
    std::string category;
    double likelihood = 0.0;          // in [0, 1]
    std::optional<double> xpos;       // box-center x / frame width
    std::optional<double> ypos;       // box-center y / frame height
    std::optional<double> scale;      // box area / frame area
    std::optional<double> aspect;     // box height / width
    int n_subjects = 0;
    int n_boxes = 0;

    std::optional<double> value(RatingDimension d) const {
        switch (d) {
            case RatingDimension::Likelihood: return likelihood;
            case RatingDimension::XPos: return xpos;
            case RatingDimension::YPos: return ypos;
            case RatingDimension::Scale: return scale;
            case RatingDimension::Aspect: return aspect;
        }
        return std::nullopt;
    }
};

// ---------------------------------------------------------------------------
// Scenes and detector scores
// ---------------------------------------------------------------------------

struct SceneRecord {
    std::string scene_id;
    std::string scene_category;  // optional metadata, may be empty
    std::map<ChannelId, Eigen::VectorXd> channel_features;
    std::map<std::string, bool> ground_truth;  // category -> target present

    bool has_channel(ChannelId id) const { return channel_features.count(id) != 0; }
    const Eigen::VectorXd& features(ChannelId id) const;
    std::optional<bool> truth(const std::string& category) const;
};

struct DetectorScore {
    std::string scene_id;
    std::string detector_id;
    std::string category;
    double confidence = 0.0;
};

// ---------------------------------------------------------------------------
// Object-label presence
// ---------------------------------------------------------------------------

struct PresenceMatrix {
    std::vector<std::string> vocabulary;
    std::vector<std::string> scene_ids;
    std::vector<std::vector<std::uint8_t>> rows;  // scene-major, 0/1

    void validate() const;
    int label_index(const std::string& label) const;  // -1 when absent
    bool present(std::size_t scene_row, int label_idx) const {
        return rows[scene_row][static_cast<std::size_t>(label_idx)] != 0;
    }
};

}  // namespace ctxprior
