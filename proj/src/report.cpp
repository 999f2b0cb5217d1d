#include "ctxprior/report.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "ctxprior/csv.hpp"
#include "ctxprior/errors.hpp"

namespace ctxprior {

using nlohmann::json;

namespace {

json config_json(const std::map<std::string, std::string>& config) {
    json out = json::object();
    for (const auto& [key, value] : config) out[key] = value;
    return out;
}

json breakdown_json(const ErrorBreakdown& b) {
    return {{"misses", b.misses},
            {"false_alarms", b.false_alarms},
            {"hits", b.hits},
            {"correct_rejections", b.correct_rejections},
            {"accuracy", b.accuracy()}};
}

std::string fixed(double value, int digits) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
    return buf;
}

json parse_report(const std::string& text, const char* expected) {
    json parsed = json::parse(text, nullptr, false);
    require(!parsed.is_discarded() && parsed.is_object(), ErrorCode::ParseError,
            "report is not valid JSON");
    require(parsed.value("report", "") == expected, ErrorCode::ParseError,
            std::string("expected a '") + expected + "' report");
    return parsed;
}

}  // namespace

std::string spec_table_json(const SpecTable& table,
                            const std::map<std::string, std::string>& config) {
    json out;
    out["report"] = "channel-subset-table";
    out["category"] = table.category;
    out["dimension"] = dimension_name(table.dimension);
    out["n_scenes"] = table.n_scenes;
    if (table.ceiling) {
        out["ceiling"] = {{"mean", table.ceiling->mean},
                          {"sd", table.ceiling->sd},
                          {"split_half_r", table.ceiling->split_half_r},
                          {"corrected_rc", table.ceiling->corrected_rc},
                          {"n_resamples", table.ceiling->n_resamples}};
    } else {
        out["ceiling"] = nullptr;
    }
    json rows = json::array();
    for (const SpecRow& row : table.rows) {
        json k = json::object();
        for (const auto& [channel, dims] : row.k_effective) k[channel] = dims;
        rows.push_back({{"spec", row.spec},
                        {"mean", row.mean},
                        {"sd", row.sd},
                        {"p_frac", row.p_frac},
                        {"flag", row.flag},
                        {"best", row.best},
                        {"k_effective", std::move(k)}});
    }
    out["rows"] = std::move(rows);
    out["best_spec"] = table.best_spec;
    out["config"] = config_json(config);
    return out.dump(2) + "\n";
}

std::string spec_table_csv(const SpecTable& table) {
    std::vector<std::vector<std::string>> rows;
    if (table.ceiling) {
        rows.push_back({"Ceil", format_double(table.ceiling->mean),
                        format_double(table.ceiling->sd), "", "", ""});
    }
    for (const SpecRow& row : table.rows) {
        rows.push_back({row.spec, format_double(row.mean), format_double(row.sd),
                        row.best ? "" : format_double(row.p_frac), row.flag,
                        row.best ? "1" : "0"});
    }
    std::ostringstream out;
    out << "spec,mean,sd,p_frac,flag,best\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i];
        }
        out << '\n';
    }
    return out.str();
}

std::string nontarget_report_json(const NontargetWeightReport& report,
                                  const std::string& category_a, const std::string& category_b,
                                  const std::map<std::string, std::string>& config) {
    auto labels_json = [](const std::vector<LabelWeight>& items) {
        json out = json::array();
        for (const LabelWeight& item : items)
            out.push_back({{"label", item.label}, {"weight", item.weight}});
        return out;
    };
    json out;
    out["report"] = "nontarget-weights";
    out["category_a"] = category_a;
    out["category_b"] = category_b;
    out["r"] = report.r;
    out["vocabulary"] = report.vocabulary;
    out["weights_a"] = report.weights_a;
    out["weights_b"] = report.weights_b;
    out["top_positive_a"] = labels_json(report.top_positive_a);
    out["top_negative_a"] = labels_json(report.top_negative_a);
    out["top_positive_b"] = labels_json(report.top_positive_b);
    out["top_negative_b"] = labels_json(report.top_negative_b);
    out["config"] = config_json(config);
    return out.dump(2) + "\n";
}

std::string accuracy_table_json(const std::vector<AccuracyRow>& rows,
                                const std::map<std::string, std::string>& config) {
    json out;
    out["report"] = "accuracy-table";
    json jrows = json::array();
    for (const AccuracyRow& row : rows) {
        json cells = json::array();
        for (const AccuracyCell& cell : row.cells) {
            cells.push_back({{"feature_set", cell.feature_set},
                             {"cv_accuracy", cell.cv_accuracy},
                             {"delta_vs_baseline", cell.delta_vs_baseline}});
        }
        jrows.push_back({{"detector", row.detector_id},
                         {"scene_set", row.scene_set},
                         {"n_scenes", row.n_scenes},
                         {"cells", std::move(cells)},
                         {"baseline_breakdown", breakdown_json(row.baseline_breakdown)},
                         {"augmented_breakdown", breakdown_json(row.augmented_breakdown)}});
    }
    out["rows"] = std::move(jrows);
    out["config"] = config_json(config);
    return out.dump(2) + "\n";
}

std::string accuracy_table_csv(const std::vector<AccuracyRow>& rows) {
    std::ostringstream out;
    out << "detector,scene_set,n_scenes,feature_set,cv_accuracy,delta_vs_baseline\n";
    for (const AccuracyRow& row : rows) {
        for (const AccuracyCell& cell : row.cells) {
            out << row.detector_id << ',' << row.scene_set << ',' << row.n_scenes << ','
                << cell.feature_set << ',' << format_double(cell.cv_accuracy) << ','
                << format_double(cell.delta_vs_baseline) << '\n';
        }
    }
    return out.str();
}

std::string roc_csv(const RocCurve& curve) {
    std::ostringstream out;
    out << "threshold,fpr,tpr\n";
    for (const RocPoint& point : curve.points) {
        out << format_double(point.threshold) << ',' << format_double(point.fpr) << ','
            << format_double(point.tpr) << '\n';
    }
    return out.str();
}

std::string transfer_report_json(const std::vector<TransferRow>& rows, const TransferReport& stats,
                                 const std::map<std::string, std::string>& config) {
    json out;
    out["report"] = "transfer-analysis";
    json jrows = json::array();
    for (const TransferRow& row : rows) {
        jrows.push_back({{"category", row.category},
                         {"n_scenes", row.n_scenes},
                         {"baseline_accuracy", row.baseline_accuracy},
                         {"augmented_accuracy", row.augmented_accuracy},
                         {"benefit", row.benefit},
                         {"association", row.association}});
    }
    out["rows"] = std::move(jrows);
    json jstats;
    jstats["n_categories"] = stats.n_categories;
    jstats["n_permutations"] = stats.n_permutations;
    jstats["r_association"] = stats.r_association ? json(*stats.r_association) : json(nullptr);
    jstats["p_association"] = stats.p_association ? json(*stats.p_association) : json(nullptr);
    jstats["r_baseline"] = stats.r_baseline ? json(*stats.r_baseline) : json(nullptr);
    jstats["p_baseline"] = stats.p_baseline ? json(*stats.p_baseline) : json(nullptr);
    out["stats"] = std::move(jstats);
    out["config"] = config_json(config);
    return out.dump(2) + "\n";
}

std::string render_spec_table_text(const std::string& json_text) {
    json parsed = parse_report(json_text, "channel-subset-table");
    std::ostringstream out;
    out << "Model performance: category=" << parsed["category"].get<std::string>()
        << " dimension=" << parsed["dimension"].get<std::string>()
        << " (n=" << parsed["n_scenes"].get<int>() << " scenes)\n";
    out << "  spec   mean     sd       p_frac   flag\n";
    if (!parsed["ceiling"].is_null()) {
        out << "  Ceil   " << fixed(parsed["ceiling"]["mean"].get<double>(), 3) << "    "
            << fixed(parsed["ceiling"]["sd"].get<double>(), 3) << "\n";
    }
    for (const json& row : parsed["rows"]) {
        out << "  " << row["spec"].get<std::string>();
        for (std::size_t pad = row["spec"].get<std::string>().size(); pad < 5; ++pad) out << ' ';
        out << ' ' << fixed(row["mean"].get<double>(), 3) << "    "
            << fixed(row["sd"].get<double>(), 3) << "    ";
        if (row["best"].get<bool>()) {
            out << "best    ";
        } else {
            out << fixed(row["p_frac"].get<double>(), 3) << "    "
                << row["flag"].get<std::string>();
        }
        out << "\n";
    }
    return out.str();
}

std::string render_accuracy_table_text(const std::string& json_text) {
    json parsed = parse_report(json_text, "accuracy-table");
    std::ostringstream out;
    out << "Detection accuracy by feature set\n";
    for (const json& row : parsed["rows"]) {
        out << "  " << row["detector"].get<std::string>() << " / "
            << row["scene_set"].get<std::string>() << " (n=" << row["n_scenes"].get<int>()
            << ")\n";
        for (const json& cell : row["cells"]) {
            out << "    " << cell["feature_set"].get<std::string>() << ": "
                << fixed(100.0 * cell["cv_accuracy"].get<double>(), 1) << "%";
            if (cell["feature_set"].get<std::string>() != "baseline")
                out << " (" << (cell["delta_vs_baseline"].get<double>() >= 0 ? "+" : "")
                    << fixed(100.0 * cell["delta_vs_baseline"].get<double>(), 1) << ")";
            out << "\n";
        }
        const json& base = row["baseline_breakdown"];
        const json& aug = row["augmented_breakdown"];
        out << "    errors baseline: " << base["misses"].get<int>() << " misses, "
            << base["false_alarms"].get<int>() << " false alarms; augmented: "
            << aug["misses"].get<int>() << " misses, " << aug["false_alarms"].get<int>()
            << " false alarms\n";
    }
    return out.str();
}

}  // namespace ctxprior
