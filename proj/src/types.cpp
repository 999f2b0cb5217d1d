#include "ctxprior/types.hpp"

#include <algorithm>
#include <set>

namespace ctxprior {

const char* channel_name(ChannelId id) {
    switch (id) {
        case ChannelId::Target: return "target";
        case ChannelId::Nontarget: return "nontarget";
        case ChannelId::Coarse: return "coarse";
    }
    return "?";
}

char channel_letter(ChannelId id) {
    switch (id) {
        case ChannelId::Target: return 'T';
        case ChannelId::Nontarget: return 'N';
        case ChannelId::Coarse: return 'C';
    }
    return '?';
}

ChannelId parse_channel(const std::string& name) {
    if (name == "target" || name == "T") return ChannelId::Target;
    if (name == "nontarget" || name == "N") return ChannelId::Nontarget;
    if (name == "coarse" || name == "C") return ChannelId::Coarse;
    fail(ErrorCode::ParseError, "unknown channel '" + name + "'");
}

ChannelSet ChannelSet::parse(const std::string& letters) {
    ChannelSet s;
    for (char c : letters) {
        switch (c) {
            case 'T': s.insert(ChannelId::Target); break;
            case 'N': s.insert(ChannelId::Nontarget); break;
            case 'C': s.insert(ChannelId::Coarse); break;
            default:
                fail(ErrorCode::ParseError,
                     "channel subset '" + letters + "' contains unknown letter '" + std::string(1, c) + "'");
        }
    }
    require(!s.empty(), ErrorCode::ParseError, "channel subset must be nonempty");
    return s;
}

const std::array<ChannelSet, 7>& ChannelSet::all_nonempty() {
    static const std::array<ChannelSet, 7> sets = {
        ChannelSet::parse("T"),  ChannelSet::parse("N"),  ChannelSet::parse("C"),
        ChannelSet::parse("TN"), ChannelSet::parse("TC"), ChannelSet::parse("NC"),
        ChannelSet::parse("TNC")};
    return sets;
}

int ChannelSet::size() const {
    int n = 0;
    for (ChannelId id : kAllChannels)
        if (contains(id)) ++n;
    return n;
}

std::vector<ChannelId> ChannelSet::channels() const {
    std::vector<ChannelId> out;
    for (ChannelId id : kAllChannels)
        if (contains(id)) out.push_back(id);
    return out;
}

std::string ChannelSet::to_string() const {
    std::string s;
    for (ChannelId id : kAllChannels)
        if (contains(id)) s.push_back(channel_letter(id));
    return s;
}

const char* dimension_name(RatingDimension d) {
    switch (d) {
        case RatingDimension::Likelihood: return "likelihood";
        case RatingDimension::XPos: return "xpos";
        case RatingDimension::YPos: return "ypos";
        case RatingDimension::Scale: return "scale";
        case RatingDimension::Aspect: return "aspect";
    }
    return "?";
}

RatingDimension parse_dimension(const std::string& name) {
    for (RatingDimension d : kAllDimensions)
        if (name == dimension_name(d)) return d;
    fail(ErrorCode::ParseError, "unknown rating dimension '" + name + "'");
}

const Eigen::VectorXd& SceneRecord::features(ChannelId id) const {
    auto it = channel_features.find(id);
    require(it != channel_features.end(), ErrorCode::MissingChannel,
            "scene '" + scene_id + "' has no " + channel_name(id) + " features");
    return it->second;
}

std::optional<bool> SceneRecord::truth(const std::string& category) const {
    auto it = ground_truth.find(category);
    if (it == ground_truth.end()) return std::nullopt;
    return it->second;
}

void PresenceMatrix::validate() const {
    std::set<std::string> seen(vocabulary.begin(), vocabulary.end());
    require(seen.size() == vocabulary.size(), ErrorCode::DuplicateEntry,
            "presence vocabulary contains duplicate labels");
    require(rows.size() == scene_ids.size(), ErrorCode::DimensionMismatch,
            "presence matrix row count does not match scene id count");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != vocabulary.size())
            fail(ErrorCode::DimensionMismatch,
                 "presence row for scene '" + scene_ids[i] + "' has " + std::to_string(rows[i].size()) +
                     " entries, vocabulary has " + std::to_string(vocabulary.size()));
    }
}

int PresenceMatrix::label_index(const std::string& label) const {
    auto it = std::find(vocabulary.begin(), vocabulary.end(), label);
    if (it == vocabulary.end()) return -1;
    return static_cast<int>(it - vocabulary.begin());
}

}  // namespace ctxprior
