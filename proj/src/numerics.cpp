#include "ctxprior/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "ctxprior/errors.hpp"
#include "ctxprior/rng.hpp"

namespace ctxprior {

namespace {

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    int best = 0;
    double mag = 0.0;
    for (int i = 0; i < v.size(); ++i) {
        const double m = std::abs(v[i]);
        if (m > mag + 1e-12) {
            mag = m;
            best = i;
        }
    }
    if (v[best] < 0.0) v = -v;
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (int i = 0; i < a.size(); ++i) {
        if (a[i] < b[i] - 1e-12) return true;
        if (a[i] > b[i] + 1e-12) return false;
    }
    return false;
}

}  // namespace

PcaBasis pca_fit(const Eigen::MatrixXd& X, int k) {
    const int n = static_cast<int>(X.rows());
    const int d = static_cast<int>(X.cols());
    require(n >= 2, ErrorCode::InvalidShape, "pca_fit needs at least 2 rows, got " + std::to_string(n));
    require(k >= 1, ErrorCode::InvalidK, "pca_fit needs k >= 1, got " + std::to_string(k));
    require(k <= std::min(n - 1, d), ErrorCode::InvalidK,
            "pca_fit: k=" + std::to_string(k) + " exceeds min(n-1, d)=" +
                std::to_string(std::min(n - 1, d)));
    require(X.allFinite(), ErrorCode::NonFiniteValue, "pca_fit: input has non-finite entries");

    PcaBasis basis;
    basis.mean = X.colwise().mean();
    Eigen::MatrixXd Xc = X.rowwise() - basis.mean.transpose();

    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd directions;  // d x m, columns are candidate components

    if (d <= n) {
        Eigen::MatrixXd cov = (Xc.transpose() * Xc) / double(n - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
        require(solver.info() == Eigen::Success, ErrorCode::NonConvergence,
                "pca_fit: eigendecomposition failed");
        eigenvalues = solver.eigenvalues();
        directions = solver.eigenvectors();
    } else {
        // Gram route: eigenvectors of X Xᵀ lift to feature space as Xᵀ v / √((n-1)λ).
        Eigen::MatrixXd gram = (Xc * Xc.transpose()) / double(n - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
        require(solver.info() == Eigen::Success, ErrorCode::NonConvergence,
                "pca_fit: eigendecomposition failed");
        eigenvalues = solver.eigenvalues();
        directions.resize(d, n);
        for (int j = 0; j < n; ++j) {
            const double lambda = std::max(eigenvalues[j], 0.0);
            if (lambda * double(n - 1) > 1e-12) {
                directions.col(j) = Xc.transpose() * solver.eigenvectors().col(j) /
                                    std::sqrt(lambda * double(n - 1));
            } else {
                directions.col(j).setZero();
            }
        }
    }

    // Eigen returns ascending order; sort descending with a stable rule for ties.
    const int m = static_cast<int>(eigenvalues.size());
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::vector<Eigen::VectorXd> cols(m);
    for (int j = 0; j < m; ++j) {
        cols[j] = directions.col(j);
        if (cols[j].norm() > 1e-9) fix_sign(cols[j]);
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (std::abs(eigenvalues[a] - eigenvalues[b]) > 1e-12) return eigenvalues[a] > eigenvalues[b];
        return lex_less(cols[a], cols[b]);
    });

    basis.components.resize(k, d);
    basis.explained_variance.resize(k);
    for (int j = 0; j < k; ++j) {
        const int src = order[j];
        Eigen::VectorXd v = cols[src];
        if (v.norm() <= 1e-9) {
            // Zero-variance direction (rank-deficient input). Complete the basis
            // deterministically from canonical axes, orthogonal to what we have.
            for (int axis = 0; axis < d; ++axis) {
                Eigen::VectorXd cand = Eigen::VectorXd::Zero(d);
                cand[axis] = 1.0;
                for (int prev = 0; prev < j; ++prev)
                    cand -= basis.components.row(prev).dot(cand) * basis.components.row(prev).transpose();
                if (cand.norm() > 1e-6) {
                    v = cand / cand.norm();
                    break;
                }
            }
            require(v.norm() > 1e-9, ErrorCode::InvariantViolation,
                    "pca_fit: failed to complete basis");
        }
        basis.components.row(j) = v.transpose();
        basis.explained_variance[j] = std::max(eigenvalues[src], 0.0);
    }
    return basis;
}

Eigen::MatrixXd pca_project(const PcaBasis& basis, const Eigen::MatrixXd& X) {
    require(static_cast<int>(X.cols()) == basis.dim(), ErrorCode::DimensionMismatch,
            "pca_project: input has " + std::to_string(X.cols()) + " columns, basis expects " +
                std::to_string(basis.dim()));
    return (X.rowwise() - basis.mean.transpose()) * basis.components.transpose();
}

Eigen::VectorXd pca_project_row(const PcaBasis& basis, const Eigen::VectorXd& x) {
    require(static_cast<int>(x.size()) == basis.dim(), ErrorCode::DimensionMismatch,
            "pca_project_row: input has " + std::to_string(x.size()) + " entries, basis expects " +
                std::to_string(basis.dim()));
    return basis.components * (x - basis.mean);
}

RegressionModel ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double ridge) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    require(n == static_cast<int>(y.size()), ErrorCode::DimensionMismatch,
            "ols_fit: X has " + std::to_string(n) + " rows, y has " + std::to_string(y.size()));
    require(p >= 1, ErrorCode::InvalidShape, "ols_fit: X has no columns");
    require(ridge >= 0.0, ErrorCode::InvalidConfig, "ols_fit: ridge must be >= 0");
    require(X.allFinite() && y.allFinite(), ErrorCode::NonFiniteValue,
            "ols_fit: non-finite entries in input");

    RegressionModel model;
    model.input_dim = p;

    // Center so the intercept drops out of the penalized system.
    Eigen::VectorXd x_mean = X.colwise().mean();
    const double y_mean = y.mean();
    Eigen::MatrixXd Xc = X.rowwise() - x_mean.transpose();
    Eigen::VectorXd yc = y.array() - y_mean;

    if (ridge == 0.0) {
        require(n >= p + 1, ErrorCode::InvalidShape,
                "ols_fit: need at least " + std::to_string(p + 1) + " rows for " +
                    std::to_string(p) + " predictors, got " + std::to_string(n));
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xc);
        qr.setThreshold(1e-10);
        require(qr.rank() == p, ErrorCode::SingularSystem,
                "ols_fit: design matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                    " of " + std::to_string(p) + ")");
        model.weights = qr.solve(yc);
    } else {
        Eigen::MatrixXd A = Xc.transpose() * Xc;
        A.diagonal().array() += ridge;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
        require(ldlt.info() == Eigen::Success, ErrorCode::SingularSystem,
                "ols_fit: ridge system not positive definite");
        model.weights = ldlt.solve(Xc.transpose() * yc);
    }
    model.intercept = y_mean - model.weights.dot(x_mean);
    require(model.weights.allFinite() && std::isfinite(model.intercept),
            ErrorCode::NonFiniteValue, "ols_fit: solution is non-finite");
    return model;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    require(a.size() == b.size(), ErrorCode::DimensionMismatch,
            "pearson: lengths differ (" + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()) + ")");
    const int n = static_cast<int>(a.size());
    require(n >= 3, ErrorCode::InvalidShape,
            "pearson: need at least 3 observations, got " + std::to_string(n));
    require(a.allFinite() && b.allFinite(), ErrorCode::NonFiniteValue,
            "pearson: non-finite entries");
    Eigen::VectorXd ac = a.array() - a.mean();
    Eigen::VectorXd bc = b.array() - b.mean();
    const double denom = ac.norm() * bc.norm();
    require(denom > 0.0, ErrorCode::ConstantInput, "pearson: constant input vector");
    return ac.dot(bc) / denom;
}

double spearman_brown(double r) {
    require(std::isfinite(r), ErrorCode::NonFiniteValue, "spearman_brown: r is not finite");
    require(r > -1.0 && r <= 1.0, ErrorCode::DomainError,
            "spearman_brown: r must lie in (-1, 1], got " + std::to_string(r));
    return 2.0 * r / (1.0 + r);
}

namespace {

// Mean over subjects in `rows` for each scene; NaN where no subject rated it.
Eigen::VectorXd half_mean(const Eigen::MatrixXd& values, const std::vector<int>& rows) {
    const int n_scenes = static_cast<int>(values.cols());
    Eigen::VectorXd out(n_scenes);
    for (int s = 0; s < n_scenes; ++s) {
        double sum = 0.0;
        int count = 0;
        for (int r : rows) {
            const double v = values(r, s);
            if (!std::isnan(v)) {
                sum += v;
                ++count;
            }
        }
        out[s] = count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

// Correlate two half-means over scenes where both are defined. Returns NaN when
// undefined (fewer than 3 shared scenes, or a constant half).
double half_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    std::vector<double> xs, ys;
    for (int s = 0; s < a.size(); ++s) {
        if (!std::isnan(a[s]) && !std::isnan(b[s])) {
            xs.push_back(a[s]);
            ys.push_back(b[s]);
        }
    }
    if (xs.size() < 3) return std::numeric_limits<double>::quiet_NaN();
    Eigen::Map<Eigen::VectorXd> va(xs.data(), static_cast<int>(xs.size()));
    Eigen::Map<Eigen::VectorXd> vb(ys.data(), static_cast<int>(ys.size()));
    Eigen::VectorXd ac = va.array() - va.mean();
    Eigen::VectorXd bc = vb.array() - vb.mean();
    const double denom = ac.norm() * bc.norm();
    if (denom <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return ac.dot(bc) / denom;
}

}  // namespace

ReliabilityEstimate split_half_ceiling(const SubjectRatings& ratings, int n_resamples,
                                       std::uint64_t seed) {
    const int n_subjects = ratings.n_subjects();
    require(n_subjects >= 2, ErrorCode::TooFewSubjects,
            "split_half_ceiling: need at least 2 subjects, got " + std::to_string(n_subjects));
    require(static_cast<int>(ratings.subject_ids.size()) == n_subjects, ErrorCode::InvalidShape,
            "split_half_ceiling: subject id count does not match matrix rows");
    require(n_resamples >= 1, ErrorCode::InvalidConfig,
            "split_half_ceiling: n_resamples must be >= 1");

    // Order rows by subject id so results do not depend on input row order.
    std::vector<int> by_id(n_subjects);
    std::iota(by_id.begin(), by_id.end(), 0);
    std::stable_sort(by_id.begin(), by_id.end(), [&](int a, int b) {
        return ratings.subject_ids[a] < ratings.subject_ids[b];
    });

    ReliabilityEstimate est;

    // Deterministic reference split: alternate id-sorted subjects.
    {
        std::vector<int> odd, even;
        for (int i = 0; i < n_subjects; ++i)
            (i % 2 == 0 ? even : odd).push_back(by_id[i]);
        const double r = half_correlation(half_mean(ratings.values, even),
                                          half_mean(ratings.values, odd));
        require(!std::isnan(r), ErrorCode::ConstantInput,
                "split_half_ceiling: reference split correlation is undefined");
        est.split_half_r = r;
        est.corrected_rc = spearman_brown(r);
    }

    const int half = n_subjects / 2;
    std::vector<double> corrected;
    corrected.reserve(n_resamples);
    for (int i = 0; i < n_resamples; ++i) {
        auto rng = make_engine(derive_seed(seed, static_cast<std::uint64_t>(i)));
        auto perm = random_permutation(n_subjects, rng);
        std::vector<int> a, b;
        for (int j = 0; j < n_subjects; ++j)
            (j < half ? a : b).push_back(by_id[perm[j]]);
        const double r = half_correlation(half_mean(ratings.values, a),
                                          half_mean(ratings.values, b));
        if (std::isnan(r) || r <= -1.0) continue;
        corrected.push_back(spearman_brown(std::min(r, 1.0)));
    }
    require(!corrected.empty(), ErrorCode::ConstantInput,
            "split_half_ceiling: no resample produced a defined correlation");

    est.n_resamples = static_cast<int>(corrected.size());
    double mean = 0.0;
    for (double v : corrected) mean += v;
    mean /= corrected.size();
    double var = 0.0;
    for (double v : corrected) var += (v - mean) * (v - mean);
    est.mean = mean;
    est.sd = corrected.size() > 1 ? std::sqrt(var / (corrected.size() - 1)) : 0.0;
    return est;
}

}  // namespace ctxprior
