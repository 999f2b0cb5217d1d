#include "ctxprior/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "ctxprior/csv.hpp"
#include "ctxprior/errors.hpp"

namespace ctxprior {

using nlohmann::json;

int Dataset::scene_index(const std::string& scene_id) const {
    ensure_index();
    auto it = index_.find(scene_id);
    return it == index_.end() ? -1 : it->second;
}

const SceneRecord& Dataset::scene(const std::string& scene_id) const {
    const int idx = scene_index(scene_id);
    require(idx >= 0, ErrorCode::UnknownSceneReference, "unknown scene '" + scene_id + "'");
    return scenes[static_cast<std::size_t>(idx)];
}

void Dataset::ensure_index() const {
    if (index_.size() == scenes.size() && !scenes.empty()) return;
    index_.clear();
    for (std::size_t i = 0; i < scenes.size(); ++i)
        index_[scenes[i].scene_id] = static_cast<int>(i);
}

namespace {

std::string row_context(const std::string& path, std::size_t row) {
    // +2: 1-based lines with the header on line 1.
    return path + " line " + std::to_string(row + 2);
}

void load_feature_file(ChannelId channel, const std::string& path,
                       std::vector<SceneRecord>& scenes, std::map<std::string, int>& index) {
    CsvTable table = read_csv(path);
    table.require_column("scene_id");
    require(table.header.size() >= 2, ErrorCode::MissingColumn,
            path + ": expected feature columns f0,f1,... after scene_id");
    const int dim = static_cast<int>(table.header.size()) - 1;
    for (int j = 0; j < dim; ++j) {
        const std::string expected = "f" + std::to_string(j);
        require(table.header[static_cast<std::size_t>(j + 1)] == expected, ErrorCode::MissingColumn,
                path + ": feature column " + std::to_string(j + 1) + " is '" +
                    table.header[static_cast<std::size_t>(j + 1)] + "', expected '" + expected + "'");
    }
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cells = table.rows[r];
        const std::string& scene_id = cells[0];
        require(!scene_id.empty(), ErrorCode::ParseError, row_context(path, r) + ": empty scene_id");
        Eigen::VectorXd v(dim);
        for (int j = 0; j < dim; ++j) {
            const double x = parse_double(cells[static_cast<std::size_t>(j + 1)],
                                          row_context(path, r) + " column f" + std::to_string(j));
            require(std::isfinite(x), ErrorCode::NonFiniteValue,
                    row_context(path, r) + ": non-finite value in column f" + std::to_string(j) +
                        " for scene '" + scene_id + "'");
            v[j] = x;
        }
        auto it = index.find(scene_id);
        if (it == index.end()) {
            SceneRecord rec;
            rec.scene_id = scene_id;
            index[scene_id] = static_cast<int>(scenes.size());
            scenes.push_back(std::move(rec));
            it = index.find(scene_id);
        }
        SceneRecord& rec = scenes[static_cast<std::size_t>(it->second)];
        require(rec.channel_features.count(channel) == 0, ErrorCode::DuplicateEntry,
                row_context(path, r) + ": duplicate " + channel_name(channel) +
                    " features for scene '" + scene_id + "'");
        rec.channel_features[channel] = std::move(v);
    }
    // Per-channel dimensionality is uniform by construction (fixed column count).
}

json parse_json_file(const std::string& path) {
    const std::string text = read_file(path);
    json parsed = json::parse(text, nullptr, false);
    require(!parsed.is_discarded(), ErrorCode::ParseError, path + ": invalid JSON");
    return parsed;
}

}  // namespace

Dataset load_dataset(const SchemaConfig& schema) {
    require(!schema.feature_files.empty(), ErrorCode::InvalidConfig,
            "load_dataset: no feature files configured");
    require(schema.slider.max > schema.slider.min, ErrorCode::InvalidConfig,
            "load_dataset: slider range is empty");
    require(schema.frame.width_px > 0 && schema.frame.height_px > 0, ErrorCode::InvalidConfig,
            "load_dataset: frame dimensions must be positive");

    Dataset ds;
    ds.slider = schema.slider;
    ds.frame = schema.frame;

    std::map<std::string, int> index;
    for (ChannelId channel : kAllChannels) {
        auto it = schema.feature_files.find(channel);
        if (it != schema.feature_files.end())
            load_feature_file(channel, it->second, ds.scenes, index);
    }

    if (!schema.scene_meta_file.empty()) {
        CsvTable meta = read_csv(schema.scene_meta_file);
        const int id_col = meta.require_column("scene_id");
        const int cat_col = meta.require_column("scene_category");
        for (std::size_t r = 0; r < meta.rows.size(); ++r) {
            const std::string& scene_id = meta.rows[r][static_cast<std::size_t>(id_col)];
            auto it = index.find(scene_id);
            require(it != index.end(), ErrorCode::UnknownSceneReference,
                    row_context(schema.scene_meta_file, r) + ": unknown scene '" + scene_id + "'");
            ds.scenes[static_cast<std::size_t>(it->second)].scene_category =
                meta.rows[r][static_cast<std::size_t>(cat_col)];
        }
    }

    if (!schema.ratings_file.empty()) {
        CsvTable table = read_csv(schema.ratings_file);
        const int c_subject = table.require_column("subject_id");
        const int c_scene = table.require_column("scene_id");
        const int c_category = table.require_column("category");
        const int c_lik = table.require_column("likelihood_raw");
        const int c_bx = table.require_column("box_x");
        const int c_by = table.require_column("box_y");
        const int c_bw = table.require_column("box_w");
        const int c_bh = table.require_column("box_h");
        std::set<std::tuple<std::string, std::string, std::string>> seen;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const auto& cells = table.rows[r];
            const std::string ctx = row_context(schema.ratings_file, r);
            RawRating rating;
            rating.subject_id = cells[static_cast<std::size_t>(c_subject)];
            rating.scene_id = cells[static_cast<std::size_t>(c_scene)];
            rating.category = cells[static_cast<std::size_t>(c_category)];
            require(!rating.subject_id.empty() && !rating.scene_id.empty() &&
                        !rating.category.empty(),
                    ErrorCode::ParseError, ctx + ": empty id field");
            require(index.count(rating.scene_id) != 0, ErrorCode::UnknownSceneReference,
                    ctx + ": rating references unknown scene '" + rating.scene_id + "'");
            require(seen.insert({rating.subject_id, rating.scene_id, rating.category}).second,
                    ErrorCode::DuplicateEntry,
                    ctx + ": duplicate rating for (subject '" + rating.subject_id + "', scene '" +
                        rating.scene_id + "', category '" + rating.category + "')");
            rating.likelihood_raw =
                parse_double(cells[static_cast<std::size_t>(c_lik)], ctx + " likelihood_raw");
            require(rating.likelihood_raw >= schema.slider.min &&
                        rating.likelihood_raw <= schema.slider.max,
                    ErrorCode::InvariantViolation,
                    ctx + ": likelihood_raw " + format_double(rating.likelihood_raw) +
                        " outside slider range [" + format_double(schema.slider.min) + ", " +
                        format_double(schema.slider.max) + "]");
            auto bx = parse_optional_double(cells[static_cast<std::size_t>(c_bx)], ctx + " box_x");
            auto by = parse_optional_double(cells[static_cast<std::size_t>(c_by)], ctx + " box_y");
            auto bw = parse_optional_double(cells[static_cast<std::size_t>(c_bw)], ctx + " box_w");
            auto bh = parse_optional_double(cells[static_cast<std::size_t>(c_bh)], ctx + " box_h");
            const int present = int(bool(bx)) + int(bool(by)) + int(bool(bw)) + int(bool(bh));
            require(present == 0 || present == 4, ErrorCode::ParseError,
                    ctx + ": box fields must be all present or all empty");
            if (present == 4) {
                BoxPx box{*bx, *by, *bw, *bh};
                require(rating.likelihood_raw > schema.slider.min, ErrorCode::InvariantViolation,
                        ctx + ": box drawn but likelihood_raw is at the slider minimum");
                require(box.w > 0 && box.h > 0, ErrorCode::InvariantViolation,
                        ctx + ": box has non-positive extent");
                require(box.x >= 0 && box.y >= 0 && box.x + box.w <= schema.frame.width_px &&
                            box.y + box.h <= schema.frame.height_px,
                        ErrorCode::InvariantViolation,
                        ctx + ": box (" + format_double(box.x) + "," + format_double(box.y) + "," +
                            format_double(box.w) + "," + format_double(box.h) +
                            ") lies outside the " + format_double(schema.frame.width_px) + "x" +
                            format_double(schema.frame.height_px) + " frame");
                rating.box = box;
            }
            ds.ratings.push_back(std::move(rating));
        }
    }

    if (!schema.scores_file.empty()) {
        CsvTable table = read_csv(schema.scores_file);
        const int c_scene = table.require_column("scene_id");
        const int c_detector = table.require_column("detector_id");
        const int c_category = table.require_column("category");
        const int c_conf = table.require_column("confidence");
        std::set<std::tuple<std::string, std::string, std::string>> seen;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const auto& cells = table.rows[r];
            const std::string ctx = row_context(schema.scores_file, r);
            DetectorScore score;
            score.scene_id = cells[static_cast<std::size_t>(c_scene)];
            score.detector_id = cells[static_cast<std::size_t>(c_detector)];
            score.category = cells[static_cast<std::size_t>(c_category)];
            require(index.count(score.scene_id) != 0, ErrorCode::UnknownSceneReference,
                    ctx + ": score references unknown scene '" + score.scene_id + "'");
            require(seen.insert({score.scene_id, score.detector_id, score.category}).second,
                    ErrorCode::DuplicateEntry,
                    ctx + ": duplicate score for (scene '" + score.scene_id + "', detector '" +
                        score.detector_id + "', category '" + score.category + "')");
            score.confidence =
                parse_double(cells[static_cast<std::size_t>(c_conf)], ctx + " confidence");
            require(std::isfinite(score.confidence), ErrorCode::NonFiniteValue,
                    ctx + ": non-finite confidence");
            ds.scores.push_back(std::move(score));
        }
    }

    if (!schema.ground_truth_file.empty()) {
        json truth = parse_json_file(schema.ground_truth_file);
        require(truth.contains("vocabulary") && truth.contains("rows"), ErrorCode::ParseError,
                schema.ground_truth_file + ": expected keys 'vocabulary' and 'rows'");
        std::vector<std::string> categories =
            truth["vocabulary"].get<std::vector<std::string>>();
        for (const auto& [scene_id, row] : truth["rows"].items()) {
            auto it = index.find(scene_id);
            require(it != index.end(), ErrorCode::UnknownSceneReference,
                    schema.ground_truth_file + ": ground truth for unknown scene '" + scene_id +
                        "'");
            require(row.is_array() && row.size() == categories.size(), ErrorCode::DimensionMismatch,
                    schema.ground_truth_file + ": row for scene '" + scene_id + "' has " +
                        std::to_string(row.size()) + " entries, vocabulary has " +
                        std::to_string(categories.size()));
            SceneRecord& rec = ds.scenes[static_cast<std::size_t>(it->second)];
            for (std::size_t j = 0; j < categories.size(); ++j) {
                const int v = row[j].get<int>();
                require(v == 0 || v == 1, ErrorCode::ParseError,
                        schema.ground_truth_file + ": scene '" + scene_id +
                            "' has non-binary entry " + std::to_string(v));
                rec.ground_truth[categories[j]] = (v == 1);
            }
        }
    }

    if (!schema.presence_file.empty()) {
        json presence = parse_json_file(schema.presence_file);
        require(presence.contains("vocabulary") && presence.contains("rows"), ErrorCode::ParseError,
                schema.presence_file + ": expected keys 'vocabulary' and 'rows'");
        PresenceMatrix matrix;
        matrix.vocabulary = presence["vocabulary"].get<std::vector<std::string>>();
        for (const auto& [scene_id, row] : presence["rows"].items()) {
            require(index.count(scene_id) != 0, ErrorCode::UnknownSceneReference,
                    schema.presence_file + ": presence row for unknown scene '" + scene_id + "'");
            require(row.is_array() && row.size() == matrix.vocabulary.size(),
                    ErrorCode::DimensionMismatch,
                    schema.presence_file + ": row for scene '" + scene_id + "' has " +
                        std::to_string(row.size()) + " entries, vocabulary has " +
                        std::to_string(matrix.vocabulary.size()));
            matrix.scene_ids.push_back(scene_id);
            std::vector<std::uint8_t> bits;
            bits.reserve(row.size());
            for (const auto& cell : row) {
                const int v = cell.get<int>();
                require(v == 0 || v == 1, ErrorCode::ParseError,
                        schema.presence_file + ": scene '" + scene_id + "' has non-binary entry " +
                            std::to_string(v));
                bits.push_back(static_cast<std::uint8_t>(v));
            }
            matrix.rows.push_back(std::move(bits));
        }
        matrix.validate();
        ds.presence = std::move(matrix);
    }

    return ds;
}

namespace {

double normalize_likelihood(double raw, const SliderRange& slider) {
    return (raw - slider.min) / (slider.max - slider.min);
}

}  // namespace

std::vector<RatingAggregate> aggregate_ratings(const std::vector<RawRating>& ratings,
                                               const FrameSize& frame, const SliderRange& slider) {
    require(slider.max > slider.min, ErrorCode::InvalidConfig,
            "aggregate_ratings: slider range is empty");
    require(frame.width_px > 0 && frame.height_px > 0, ErrorCode::InvalidConfig,
            "aggregate_ratings: frame dimensions must be positive");

    struct Accumulator {
        double likelihood = 0.0;
        double xpos = 0.0, ypos = 0.0, scale = 0.0, aspect = 0.0;
        int n_subjects = 0;
        int n_boxes = 0;
    };
    std::map<std::pair<std::string, std::string>, Accumulator> groups;
    for (const RawRating& r : ratings) {
        Accumulator& acc = groups[{r.scene_id, r.category}];
        acc.likelihood += normalize_likelihood(r.likelihood_raw, slider);
        acc.n_subjects += 1;
        if (r.box) {
            const BoxPx& b = *r.box;
            acc.xpos += (b.x + b.w / 2.0) / frame.width_px;
            acc.ypos += (b.y + b.h / 2.0) / frame.height_px;
            acc.scale += (b.w * b.h) / (frame.width_px * frame.height_px);
            acc.aspect += b.h / b.w;
            acc.n_boxes += 1;
        }
    }

    std::vector<RatingAggregate> out;
    out.reserve(groups.size());
    for (const auto& [key, acc] : groups) {
        RatingAggregate agg;
        agg.scene_id = key.first;
        agg.category = key.second;
        agg.n_subjects = acc.n_subjects;
        agg.n_boxes = acc.n_boxes;
        agg.likelihood = acc.likelihood / acc.n_subjects;
        if (acc.n_boxes >= 1) {
            agg.xpos = acc.xpos / acc.n_boxes;
            agg.ypos = acc.ypos / acc.n_boxes;
            agg.scale = acc.scale / acc.n_boxes;
            agg.aspect = acc.aspect / acc.n_boxes;
        }
        out.push_back(std::move(agg));
    }
    // std::map iteration already yields (scene_id, category) order.
    return out;
}

const RatingAggregate& aggregate_for(const std::vector<RatingAggregate>& aggregates,
                                     const std::string& scene_id, const std::string& category) {
    auto it = std::lower_bound(aggregates.begin(), aggregates.end(),
                               std::make_pair(scene_id, category),
                               [](const RatingAggregate& a, const std::pair<std::string, std::string>& k) {
                                   return std::tie(a.scene_id, a.category) < std::tie(k.first, k.second);
                               });
    require(it != aggregates.end() && it->scene_id == scene_id && it->category == category,
            ErrorCode::EmptyRatingSet,
            "no ratings aggregated for scene '" + scene_id + "', category '" + category + "'");
    return *it;
}

SubjectRatings subject_matrix(const std::vector<RawRating>& ratings,
                              const std::vector<std::string>& scene_ids,
                              const std::string& category, RatingDimension dimension,
                              const FrameSize& frame, const SliderRange& slider) {
    std::map<std::string, int> scene_pos;
    for (std::size_t i = 0; i < scene_ids.size(); ++i)
        scene_pos[scene_ids[i]] = static_cast<int>(i);

    std::set<std::string> subjects;
    for (const RawRating& r : ratings)
        if (r.category == category && scene_pos.count(r.scene_id)) subjects.insert(r.subject_id);
    require(!subjects.empty(), ErrorCode::EmptyRatingSet,
            "subject_matrix: no ratings for category '" + category + "' on the requested scenes");

    SubjectRatings out;
    out.subject_ids.assign(subjects.begin(), subjects.end());
    std::map<std::string, int> subject_pos;
    for (std::size_t i = 0; i < out.subject_ids.size(); ++i)
        subject_pos[out.subject_ids[i]] = static_cast<int>(i);

    out.values.setConstant(static_cast<int>(out.subject_ids.size()),
                           static_cast<int>(scene_ids.size()),
                           std::numeric_limits<double>::quiet_NaN());
    for (const RawRating& r : ratings) {
        if (r.category != category) continue;
        auto it = scene_pos.find(r.scene_id);
        if (it == scene_pos.end()) continue;
        double value = std::numeric_limits<double>::quiet_NaN();
        switch (dimension) {
            case RatingDimension::Likelihood:
                value = normalize_likelihood(r.likelihood_raw, slider);
                break;
            case RatingDimension::XPos:
                if (r.box) value = (r.box->x + r.box->w / 2.0) / frame.width_px;
                break;
            case RatingDimension::YPos:
                if (r.box) value = (r.box->y + r.box->h / 2.0) / frame.height_px;
                break;
            case RatingDimension::Scale:
                if (r.box) value = (r.box->w * r.box->h) / (frame.width_px * frame.height_px);
                break;
            case RatingDimension::Aspect:
                if (r.box) value = r.box->h / r.box->w;
                break;
        }
        if (!std::isnan(value)) out.values(subject_pos[r.subject_id], it->second) = value;
    }
    return out;
}

ModelEnvelope parse_envelope(const std::string& bytes, const std::string& expected_kind) {
    json parsed = json::parse(bytes, nullptr, false);
    require(!parsed.is_discarded() && parsed.is_object(), ErrorCode::CorruptPayload,
            "model payload is not valid JSON");
    require(parsed.contains("kind") && parsed["kind"].is_string(), ErrorCode::CorruptPayload,
            "model payload has no 'kind' tag");
    require(parsed.contains("version") && parsed["version"].is_number_integer(),
            ErrorCode::CorruptPayload, "model payload has no integer 'version'");
    require(parsed.contains("payload") && parsed["payload"].is_object(), ErrorCode::CorruptPayload,
            "model payload has no 'payload' object");
    ModelEnvelope env;
    env.kind = parsed["kind"].get<std::string>();
    require(env.kind == expected_kind, ErrorCode::CorruptPayload,
            "model payload kind is '" + env.kind + "', expected '" + expected_kind + "'");
    env.version = parsed["version"].get<int>();
    env.payload = parsed["payload"].dump();
    return env;
}

std::string serialize_envelope(const ModelEnvelope& envelope) {
    json out;
    out["kind"] = envelope.kind;
    out["version"] = envelope.version;
    out["payload"] = json::parse(envelope.payload);
    return out.dump(2) + "\n";
}

}  // namespace ctxprior
