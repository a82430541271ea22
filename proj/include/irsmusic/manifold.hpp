#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "irsmusic/geometry.hpp"

namespace irsmusic {

// The temporal-domain array manifold seen by the estimator. The IRS cycles
// the same L reflection patterns in every block, so the L first-antenna
// samples of a block respond to a user at theta through the virtual steering
// vector returned by virtual_steering() below. gamma and the pattern matrix
// are known at the BS; rows of `patterns` are the per-sample IRS patterns.
struct VirtualManifold {
    Angle gamma;
    Eigen::MatrixXcd patterns;  // L x I
    ArrayGeometry irs_geom;

    [[nodiscard]] int snapshots_per_block() const { return static_cast<int>(patterns.rows()); }
};

inline void validate(const VirtualManifold& manifold) {
    if (manifold.patterns.rows() < 1) {
        throw std::invalid_argument("manifold needs at least one reflection pattern");
    }
    if (manifold.patterns.cols() != manifold.irs_geom.num_elements) {
        throw std::invalid_argument("pattern length must match the IRS element count");
    }
}

// b(gamma) ⊙ b(theta): the IRS response a user at theta produces towards
// gamma, before the reflection pattern is applied.
inline Eigen::VectorXcd effective_irs_response(const ArrayGeometry& irs_geom, const Angle& gamma,
                                               const Angle& theta) {
    return steering_vector(irs_geom, gamma).cwiseProduct(steering_vector(irs_geom, theta));
}

/// Virtual steering vector of length L towards theta: element l equals
/// b(gamma)^T diag(pattern_l) b(theta), evaluated as the pattern matrix
/// applied to the elementwise product b(gamma) ⊙ b(theta).
inline Eigen::VectorXcd virtual_steering(const VirtualManifold& manifold, const Angle& theta) {
    return manifold.patterns * effective_irs_response(manifold.irs_geom, manifold.gamma, theta);
}

/// Virtual steering vectors for a whole set of angles, one column per angle.
inline Eigen::MatrixXcd virtual_steering_matrix(const VirtualManifold& manifold,
                                                const std::vector<Angle>& angles) {
    Eigen::MatrixXcd responses(manifold.irs_geom.num_elements,
                               static_cast<Eigen::Index>(angles.size()));
    const Eigen::VectorXcd towards_bs = steering_vector(manifold.irs_geom, manifold.gamma);
    for (Eigen::Index i = 0; i < responses.cols(); ++i) {
        responses.col(i) = towards_bs.cwiseProduct(
            steering_vector(manifold.irs_geom, angles[static_cast<std::size_t>(i)]));
    }
    return manifold.patterns * responses;
}

}  // namespace irsmusic
