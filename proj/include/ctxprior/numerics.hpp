#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ctxprior/types.hpp"

namespace ctxprior {

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

// Rows of `components` are orthonormal, ordered by decreasing explained
// variance. Eigenvector sign ambiguity is broken by making each component's
// largest-magnitude entry positive; degenerate eigenvalue ties are ordered
// lexicographically by the sign-fixed components.
struct PcaBasis {
    Eigen::VectorXd mean;              // d
    Eigen::MatrixXd components;        // k x d
    Eigen::VectorXd explained_variance;  // k, eigenvalues of the sample covariance

    int dim() const { return static_cast<int>(mean.size()); }
    int n_components() const { return static_cast<int>(components.rows()); }
};

PcaBasis pca_fit(const Eigen::MatrixXd& X, int k);
Eigen::MatrixXd pca_project(const PcaBasis& basis, const Eigen::MatrixXd& X);
Eigen::VectorXd pca_project_row(const PcaBasis& basis, const Eigen::VectorXd& x);

// ---------------------------------------------------------------------------
// Least squares
// ---------------------------------------------------------------------------

struct RegressionModel {
    Eigen::VectorXd weights;
    double intercept = 0.0;
    int input_dim = 0;

    double predict(const Eigen::VectorXd& x) const { return weights.dot(x) + intercept; }
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const {
        return (X * weights).array() + intercept;
    }
};

// Minimizes ||y - X b - intercept||^2 + ridge * ||b||^2 (intercept unpenalized).
// ridge = 0 solves via column-pivoted QR; the normal-equations route exists only
// as an independent test oracle.
RegressionModel ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double ridge = 0.0);

// ---------------------------------------------------------------------------
// Correlation and reliability
// ---------------------------------------------------------------------------

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// rc = 2r / (1 + r); defined on r in (-1, 1].
double spearman_brown(double r);

// Per-subject rating matrix with NaN gaps for unrated cells. Rows are sorted by
// subject_id internally so half-assignments depend on ids, not input order.
struct SubjectRatings {
    std::vector<std::string> subject_ids;  // one per row
    Eigen::MatrixXd values;                // subjects x scenes, NaN = missing

    int n_subjects() const { return static_cast<int>(values.rows()); }
    int n_scenes() const { return static_cast<int>(values.cols()); }
};

struct ReliabilityEstimate {
    double split_half_r = 0.0;   // deterministic odd/even-subject split
    double corrected_rc = 0.0;   // Spearman-Brown correction of split_half_r
    int n_resamples = 0;
    double mean = 0.0;           // mean corrected value over random resamples
    double sd = 0.0;
};

// Random half-splits are drawn without replacement. Scenes with an empty half
// in a given resample are dropped from that resample only.
ReliabilityEstimate split_half_ceiling(const SubjectRatings& ratings, int n_resamples,
                                       std::uint64_t seed);

}  // namespace ctxprior
