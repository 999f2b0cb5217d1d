#pragma once

#include <map>
#include <string>
#include <vector>

#include "ctxprior/expectations.hpp"
#include "ctxprior/fusion.hpp"

namespace ctxprior {

// JSON / CSV report writers. Every JSON report embeds the resolved run config
// and seed under "config" so outputs are self-describing.

std::string spec_table_json(const SpecTable& table,
                            const std::map<std::string, std::string>& config);
std::string spec_table_csv(const SpecTable& table);

std::string nontarget_report_json(const NontargetWeightReport& report,
                                  const std::string& category_a, const std::string& category_b,
                                  const std::map<std::string, std::string>& config);

struct AccuracyCell {
    std::string feature_set;
    double cv_accuracy = 0.0;
    double delta_vs_baseline = 0.0;
};

struct AccuracyRow {
    std::string detector_id;
    std::string scene_set;  // e.g. "car" or "car_matched"
    int n_scenes = 0;
    std::vector<AccuracyCell> cells;  // first cell is the baseline
    // operating-point error counts for baseline and the last (richest) set
    ErrorBreakdown baseline_breakdown;
    ErrorBreakdown augmented_breakdown;
};

std::string accuracy_table_json(const std::vector<AccuracyRow>& rows,
                                const std::map<std::string, std::string>& config);
std::string accuracy_table_csv(const std::vector<AccuracyRow>& rows);

std::string roc_csv(const RocCurve& curve);

struct TransferRow {
    std::string category;
    int n_scenes = 0;
    double baseline_accuracy = 0.0;
    double augmented_accuracy = 0.0;
    double benefit = 0.0;
    double association = 0.0;
};

std::string transfer_report_json(const std::vector<TransferRow>& rows, const TransferReport& stats,
                                 const std::map<std::string, std::string>& config);

// Plain-text rendering used by the `report` subcommand.
std::string render_spec_table_text(const std::string& json_text);
std::string render_accuracy_table_text(const std::string& json_text);

}  // namespace ctxprior
