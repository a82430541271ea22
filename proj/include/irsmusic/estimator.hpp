#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "irsmusic/geometry.hpp"
#include "irsmusic/manifold.hpp"
#include "irsmusic/synthesis.hpp"

namespace irsmusic {

// Angle search grid: coarse scan over [start, stop) followed by local
// refinement of the selected peaks down to `refined_step_deg`.
struct GridSpec {
    double start_deg = 0.0;
    double stop_deg = 180.0;  // exclusive
    double coarse_step_deg = 0.1;
    double refined_step_deg = 0.001;
};

inline void validate(const GridSpec& spec) {
    if (!(spec.start_deg >= 0.0) || !(spec.stop_deg <= 180.0) ||
        !(spec.start_deg < spec.stop_deg)) {
        throw std::invalid_argument("grid must cover a nonempty subrange of [0, 180)");
    }
    if (!(spec.coarse_step_deg > 0.0) || !(spec.refined_step_deg > 0.0)) {
        throw std::invalid_argument("grid steps must be positive");
    }
    if (spec.refined_step_deg > spec.coarse_step_deg) {
        throw std::invalid_argument("refined step cannot exceed the coarse step");
    }
}

inline std::vector<Angle> make_grid(const GridSpec& spec) {
    validate(spec);
    std::vector<Angle> grid;
    const double span = spec.stop_deg - spec.start_deg;
    const auto count = static_cast<std::size_t>(std::ceil(span / spec.coarse_step_deg - 1e-9));
    grid.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        grid.push_back(
            Angle::from_degrees(spec.start_deg + static_cast<double>(i) * spec.coarse_step_deg));
    }
    return grid;
}

struct SpectrumPeak {
    Angle angle;
    double value = 0.0;
};

struct SpectrumResult {
    std::vector<Angle> grid;
    std::vector<double> values;
    std::vector<SpectrumPeak> peaks;  // sorted by value descending
};

enum class Method { kMusic, kCapon };

inline const char* method_name(Method method) {
    return method == Method::kMusic ? "music" : "capon";
}

struct EstimationResult {
    std::vector<Angle> estimates;
    SpectrumResult spectrum;
    std::vector<double> eigenvalues;  // descending
    Method method = Method::kMusic;
    bool underdetected = false;
};

/// Sample covariance of the block snapshots: S = (1/Q) sum_q y_q y_q^H,
/// explicitly re-Hermitianized so that S == S^H holds to the last bit.
inline Eigen::MatrixXcd sample_covariance(const BlockObservations& obs) {
    if (obs.num_blocks() < 1) {
        throw std::invalid_argument("sample covariance needs at least one snapshot");
    }
    Eigen::MatrixXcd cov = obs.snapshots * obs.snapshots.adjoint() /
                           static_cast<double>(obs.num_blocks());
    cov = 0.5 * (cov + cov.adjoint()).eval();
    return cov;
}

// Eigenvalues of a Hermitian matrix, descending.
inline std::vector<double> descending_eigenvalues(const Eigen::MatrixXcd& hermitian) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(hermitian, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("eigenvalue decomposition failed");
    }
    std::vector<double> values(solver.eigenvalues().data(),
                               solver.eigenvalues().data() + solver.eigenvalues().size());
    std::reverse(values.begin(), values.end());
    return values;
}

/// Orthonormal basis of the noise subspace: the eigenvectors of S belonging
/// to the L - K smallest eigenvalues, one per column.
inline Eigen::MatrixXcd noise_subspace(const Eigen::MatrixXcd& cov, int num_sources) {
    const auto dim = cov.rows();
    if (cov.cols() != dim) {
        throw std::invalid_argument("covariance must be square");
    }
    if (num_sources < 1 || num_sources >= dim) {
        throw std::invalid_argument(
            "subspace split requires more snapshot dimensions than sources");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("eigenvalue decomposition failed");
    }
    // Eigen sorts ascending, so the leading columns span the noise subspace.
    return solver.eigenvectors().leftCols(dim - num_sources);
}

namespace detail {

inline constexpr double kDenominatorFloor = 1e-15;

inline double music_value(double numerator, double denominator) {
    if (numerator <= 0.0) {
        return 0.0;
    }
    return numerator / std::max(denominator, kDenominatorFloor * numerator);
}

}  // namespace detail

/// MUSIC pseudo-spectrum value at one angle:
/// P(theta) = ||abar||^2 / ||U^H abar||^2, with the denominator floored at
/// 1e-15 times the numerator so the noiseless case stays finite.
inline double music_spectrum_value(const VirtualManifold& manifold,
                                   const Eigen::MatrixXcd& noise_basis, const Angle& theta) {
    const Eigen::VectorXcd a = virtual_steering(manifold, theta);
    return detail::music_value(a.squaredNorm(), (noise_basis.adjoint() * a).squaredNorm());
}

/// MUSIC pseudo-spectrum over a whole grid.
inline SpectrumResult music_spectrum(const VirtualManifold& manifold,
                                     const Eigen::MatrixXcd& noise_basis,
                                     std::vector<Angle> grid) {
    validate(manifold);
    if (grid.empty()) {
        throw std::invalid_argument("spectrum grid must be nonempty");
    }
    SpectrumResult result;
    const Eigen::MatrixXcd steering = virtual_steering_matrix(manifold, grid);
    const Eigen::MatrixXcd projected = noise_basis.adjoint() * steering;
    result.grid = std::move(grid);
    result.values.resize(result.grid.size());
    for (Eigen::Index g = 0; g < steering.cols(); ++g) {
        result.values[static_cast<std::size_t>(g)] =
            detail::music_value(steering.col(g).squaredNorm(), projected.col(g).squaredNorm());
    }
    return result;
}

// Capon (MVDR) spectrum machinery. The loaded covariance S + eps*I is
// factorized once and reused for every angle.
class CaponSolver {
  public:
    CaponSolver(const Eigen::MatrixXcd& cov, std::optional<double> diagonal_loading) {
        const auto dim = cov.rows();
        if (cov.cols() != dim || dim < 1) {
            throw std::invalid_argument("covariance must be square");
        }
        double loading = diagonal_loading.value_or(1e-6 * cov.trace().real() /
                                                   static_cast<double>(dim));
        if (loading < 0.0) {
            throw std::invalid_argument("diagonal loading must be nonnegative");
        }
        if (loading == 0.0) {
            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> probe(cov,
                                                                        Eigen::EigenvaluesOnly);
            const double largest = probe.eigenvalues().cwiseAbs().maxCoeff();
            if (probe.eigenvalues().minCoeff() <= 1e-13 * largest) {
                throw std::invalid_argument(
                    "singular sample covariance: Capon needs diagonal loading");
            }
        }
        ldlt_.compute(cov + loading * Eigen::MatrixXcd::Identity(dim, dim));
        if (ldlt_.info() != Eigen::Success) {
            throw std::runtime_error("factorization of the loaded covariance failed");
        }
    }

    [[nodiscard]] double power(const Eigen::VectorXcd& steering) const {
        const double quad = steering.dot(ldlt_.solve(steering)).real();
        if (!(quad > 0.0)) {
            throw std::runtime_error("loaded covariance is not positive definite");
        }
        return 1.0 / quad;
    }

    [[nodiscard]] Eigen::MatrixXd solve_columns(const Eigen::MatrixXcd& steering) const {
        Eigen::MatrixXd dummy;  // unused; see power_columns
        return dummy;
    }

  private:
    Eigen::LDLT<Eigen::MatrixXcd> ldlt_;
};

/// Capon (MVDR) spatial spectrum P(theta) = 1 / (abar^H (S + eps I)^{-1} abar).
/// Without an explicit loading, eps = 1e-6 * trace(S)/L.
inline SpectrumResult capon_spectrum(const VirtualManifold& manifold, const Eigen::MatrixXcd& cov,
                                     std::vector<Angle> grid,
                                     std::optional<double> diagonal_loading = std::nullopt) {
    validate(manifold);
    if (grid.empty()) {
        throw std::invalid_argument("spectrum grid must be nonempty");
    }
    const CaponSolver solver(cov, diagonal_loading);
    SpectrumResult result;
    const Eigen::MatrixXcd steering = virtual_steering_matrix(manifold, grid);
    result.grid = std::move(grid);
    result.values.resize(result.grid.size());
    for (Eigen::Index g = 0; g < steering.cols(); ++g) {
        result.values[static_cast<std::size_t>(g)] = solver.power(steering.col(g));
    }
    return result;
}

/// Plateau-aware local maxima of `values`, ranked by value (ties resolve to
/// the smaller angle). When an evaluator is supplied, each selected peak is
/// polished on successively 10x finer local grids down to `refined_step_deg`.
inline std::vector<SpectrumPeak> find_peaks(
    const std::vector<Angle>& grid, const std::vector<double>& values, int max_peaks,
    const std::function<double(const Angle&)>& evaluate = {}, double refined_step_deg = 0.0) {
    if (grid.size() != values.size()) {
        throw std::invalid_argument("grid and spectrum sizes differ");
    }
    if (max_peaks < 0) {
        throw std::invalid_argument("peak count must be nonnegative");
    }

    std::vector<std::size_t> candidates;
    const std::size_t n = grid.size();
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[j + 1] == values[i]) {
            ++j;
        }
        const bool left_ok = (i == 0) || (values[i - 1] < values[i]);
        const bool right_ok = (j == n - 1) || (values[j + 1] < values[i]);
        const bool interior_plateau_spanning_all = (i == 0 && j == n - 1);
        if (left_ok && right_ok && !interior_plateau_spanning_all) {
            candidates.push_back(i);  // leftmost index of a plateau
        }
        i = j + 1;
    }

    std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) {
            return values[a] > values[b];
        }
        return grid[a] < grid[b];
    });
    if (candidates.size() > static_cast<std::size_t>(max_peaks)) {
        candidates.resize(static_cast<std::size_t>(max_peaks));
    }

    const double coarse_step_deg =
        grid.size() > 1 ? grid[1].degrees() - grid[0].degrees() : 0.0;
    const bool refine = evaluate && refined_step_deg > 0.0 && coarse_step_deg > refined_step_deg;

    std::vector<SpectrumPeak> peaks;
    peaks.reserve(candidates.size());
    for (std::size_t idx : candidates) {
        SpectrumPeak peak{grid[idx], values[idx]};
        if (refine) {
            double step = coarse_step_deg;
            while (step > refined_step_deg * (1.0 + 1e-9)) {
                const double fine = step / 10.0;
                const double center_deg = peak.angle.degrees();
                for (int offset = -10; offset <= 10; ++offset) {
                    const double candidate_deg = center_deg + fine * static_cast<double>(offset);
                    if (candidate_deg < 0.0 || candidate_deg >= 180.0) {
                        continue;
                    }
                    const Angle candidate = Angle::from_degrees(candidate_deg);
                    const double value = evaluate(candidate);
                    if (value > peak.value ||
                        (value == peak.value && candidate < peak.angle)) {
                        peak = {candidate, value};
                    }
                }
                step = fine;
            }
        }
        peaks.push_back(peak);
    }

    std::sort(peaks.begin(), peaks.end(), [](const SpectrumPeak& a, const SpectrumPeak& b) {
        if (a.value != b.value) {
            return a.value > b.value;
        }
        return a.angle < b.angle;
    });
    return peaks;
}

/// Full estimation pipeline on one snapshot set:
/// sample covariance -> subspace split / loaded inverse -> spectrum ->
/// ranked peak search with local refinement.
inline EstimationResult estimate_aoas(const BlockObservations& obs, int num_sources,
                                      Method method, const GridSpec& grid_spec = {}) {
    if (num_sources < 1) {
        throw std::invalid_argument("source count must be positive");
    }
    const VirtualManifold manifold = obs.manifold();
    validate(manifold);
    const Eigen::MatrixXcd cov = sample_covariance(obs);

    EstimationResult result;
    result.method = method;
    result.eigenvalues = descending_eigenvalues(cov);

    std::vector<Angle> grid = make_grid(grid_spec);
    std::function<double(const Angle&)> evaluate;
    if (method == Method::kMusic) {
        const Eigen::MatrixXcd noise_basis = noise_subspace(cov, num_sources);
        result.spectrum = music_spectrum(manifold, noise_basis, std::move(grid));
        evaluate = [manifold, noise_basis](const Angle& theta) {
            return music_spectrum_value(manifold, noise_basis, theta);
        };
    } else {
        auto solver = std::make_shared<CaponSolver>(cov, std::nullopt);
        result.spectrum.grid = std::move(grid);
        result.spectrum.values.resize(result.spectrum.grid.size());
        const Eigen::MatrixXcd steering =
            virtual_steering_matrix(manifold, result.spectrum.grid);
        for (Eigen::Index g = 0; g < steering.cols(); ++g) {
            result.spectrum.values[static_cast<std::size_t>(g)] =
                solver->power(steering.col(g));
        }
        evaluate = [manifold, solver](const Angle& theta) {
            return solver->power(virtual_steering(manifold, theta));
        };
    }

    result.spectrum.peaks = find_peaks(result.spectrum.grid, result.spectrum.values, num_sources,
                                       evaluate, grid_spec.refined_step_deg);
    result.estimates.reserve(result.spectrum.peaks.size());
    for (const auto& peak : result.spectrum.peaks) {
        result.estimates.push_back(peak.angle);
    }
    result.underdetected = static_cast<int>(result.estimates.size()) < num_sources;
    return result;
}

// Checks of the conditions the subspace method rests on: enough snapshot
// dimensions, a full-rank source-side covariance, and a manifold that does
// not change from block to block.
struct ConditionReport {
    int snapshots_per_block = 0;
    int num_sources = 0;
    bool dimension_ok = false;         // L > K
    int source_covariance_rank = 0;    // numerical rank of Abar W Abar^H
    bool rank_ok = false;              // rank == K
    bool patterns_distinct = false;    // pattern rows pairwise distinct
    bool schedule_block_periodic = true;

    [[nodiscard]] bool all_ok() const {
        return dimension_ok && rank_ok && schedule_block_periodic;
    }
};

inline ConditionReport condition_diagnostics(const VirtualManifold& manifold,
                                             const std::vector<Angle>& thetas,
                                             std::vector<double> source_weights = {},
                                             const Eigen::MatrixXcd* sample_patterns = nullptr) {
    validate(manifold);
    if (source_weights.empty()) {
        source_weights.assign(thetas.size(), 1.0);
    }
    if (source_weights.size() != thetas.size()) {
        throw std::invalid_argument("one source weight per angle required");
    }

    ConditionReport report;
    report.snapshots_per_block = manifold.snapshots_per_block();
    report.num_sources = static_cast<int>(thetas.size());
    report.dimension_ok = report.snapshots_per_block > report.num_sources;

    const Eigen::MatrixXcd steering = virtual_steering_matrix(manifold, thetas);
    const Eigen::VectorXd weights =
        Eigen::Map<const Eigen::VectorXd>(source_weights.data(),
                                          static_cast<Eigen::Index>(source_weights.size()));
    const Eigen::MatrixXcd source_cov =
        steering * weights.asDiagonal() * steering.adjoint();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(source_cov);
    const double largest = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
    report.source_covariance_rank =
        largest > 0.0
            ? static_cast<int>((svd.singularValues().array() > 1e-8 * largest).count())
            : 0;
    report.rank_ok = report.source_covariance_rank == report.num_sources;

    report.patterns_distinct = true;
    for (Eigen::Index i = 0; i < manifold.patterns.rows() && report.patterns_distinct; ++i) {
        for (Eigen::Index j = i + 1; j < manifold.patterns.rows(); ++j) {
            if ((manifold.patterns.row(i).array() == manifold.patterns.row(j).array()).all()) {
                report.patterns_distinct = false;
                break;
            }
        }
    }

    if (sample_patterns != nullptr) {
        if (sample_patterns->cols() != manifold.patterns.cols()) {
            throw std::invalid_argument("sample pattern length must match the manifold");
        }
        const auto period = manifold.patterns.rows();
        for (Eigen::Index n = 0; n < sample_patterns->rows(); ++n) {
            if (!(sample_patterns->row(n).array() == manifold.patterns.row(n % period).array())
                     .all()) {
                report.schedule_block_periodic = false;
                break;
            }
        }
    }
    return report;
}

/// Normalized spectrum export: angle in degrees and P(theta)/max P per line.
inline void write_spectrum_csv(const SpectrumResult& spectrum, std::ostream& out) {
    out << "angle_deg,normalized_power\n";
    out.precision(12);
    double peak = 0.0;
    for (double v : spectrum.values) {
        peak = std::max(peak, v);
    }
    const double scale = peak > 0.0 ? 1.0 / peak : 1.0;
    for (std::size_t i = 0; i < spectrum.grid.size(); ++i) {
        out << spectrum.grid[i].degrees() << ',' << spectrum.values[i] * scale << '\n';
    }
}

}  // namespace irsmusic
