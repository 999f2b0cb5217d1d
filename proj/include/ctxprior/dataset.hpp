#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctxprior/numerics.hpp"
#include "ctxprior/types.hpp"

namespace ctxprior {

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

// Describes the on-disk dataset. Per-channel feature CSVs have header
// `scene_id,f0,f1,...`; ratings CSV is
// `subject_id,scene_id,category,likelihood_raw,box_x,box_y,box_w,box_h`
// (box cells empty when no box was drawn); scores CSV is
// `scene_id,detector_id,category,confidence`. Ground truth and nontarget
// presence share the JSON schema
// `{ "vocabulary": [...], "rows": { scene_id: [0/1,...] } }`.
struct SchemaConfig {
    std::map<ChannelId, std::string> feature_files;
    std::string ratings_file;
    std::string scores_file;        // optional
    std::string ground_truth_file;  // optional
    std::string presence_file;      // optional
    std::string scene_meta_file;    // optional CSV `scene_id,scene_category`
    SliderRange slider;
    FrameSize frame;
};

struct Dataset {
    std::vector<SceneRecord> scenes;
    std::vector<RawRating> ratings;
    std::vector<DetectorScore> scores;
    std::optional<PresenceMatrix> presence;
    SliderRange slider;
    FrameSize frame;

    int scene_index(const std::string& scene_id) const;  // -1 when absent
    const SceneRecord& scene(const std::string& scene_id) const;

  private:
    mutable std::map<std::string, int> index_;
    void ensure_index() const;
};

// Validates everything on the way in; any invariant violation raises an Error
// naming the offending file, row and field.
Dataset load_dataset(const SchemaConfig& schema);

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

// Per-(scene, category) means over subjects. Subjects without boxes contribute
// to the likelihood mean only. Output is sorted by (scene_id, category).
std::vector<RatingAggregate> aggregate_ratings(const std::vector<RawRating>& ratings,
                                               const FrameSize& frame, const SliderRange& slider);

// Lookup helper; EmptyRatingSet when the pair has no aggregate.
const RatingAggregate& aggregate_for(const std::vector<RatingAggregate>& aggregates,
                                     const std::string& scene_id, const std::string& category);

// Subjects x scenes matrix (NaN gaps) for one category and rating dimension,
// restricted to `scene_ids` in the given order. Feeds split_half_ceiling.
SubjectRatings subject_matrix(const std::vector<RawRating>& ratings,
                              const std::vector<std::string>& scene_ids,
                              const std::string& category, RatingDimension dimension,
                              const FrameSize& frame, const SliderRange& slider);

// ---------------------------------------------------------------------------
// Persistence (versioned JSON; see save_model/load_model in expectations and
// fusion headers for the typed entry points)
// ---------------------------------------------------------------------------

struct ModelEnvelope {
    std::string kind;     // "expectation-model" or "fusion-classifier"
    int version = 0;
    std::string payload;  // inner JSON object, serialized
};

// CorruptPayload on malformed bytes; VersionMismatch is checked by the typed
// loaders, which know their supported version.
ModelEnvelope parse_envelope(const std::string& bytes, const std::string& expected_kind);
std::string serialize_envelope(const ModelEnvelope& envelope);

}  // namespace ctxprior
