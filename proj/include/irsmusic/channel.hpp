#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "irsmusic/geometry.hpp"
#include "irsmusic/random.hpp"

namespace irsmusic {

enum class PathLossKind { kUnit, kFreeSpaceAmplitude };

struct PathLossModel {
    PathLossKind kind = PathLossKind::kUnit;
    double wavelength_m = 0.1;  // only used by the free-space kind
};

// Deterministic magnitude of the path loss factor.
inline double path_loss_amplitude(const PathLossModel& model, double dist_m) {
    if (!(dist_m > 0.0)) {
        throw std::invalid_argument("path loss requires a positive distance");
    }
    switch (model.kind) {
        case PathLossKind::kUnit:
            return 1.0;
        case PathLossKind::kFreeSpaceAmplitude:
            return model.wavelength_m / (2.0 * kTwoPi * dist_m);
    }
    throw std::logic_error("unknown path loss kind");
}

// Complex path loss factor. The unit kind is exactly 1; the free-space kind
// carries lambda/(4*pi*d) with a phase drawn uniformly from `rng`.
inline std::complex<double> path_loss(const PathLossModel& model, double dist_m, Rng& rng) {
    const double amplitude = path_loss_amplitude(model, dist_m);
    if (model.kind == PathLossKind::kUnit) {
        return {amplitude, 0.0};
    }
    return std::polar(amplitude, uniform_phase(rng));
}

// All channel-side parameters of one scenario draw. The IRS->BS link is LOS
// and rank one; users reach the BS only through the IRS.
struct ChannelRealization {
    std::vector<Angle> thetas;                // AOA of user k at the IRS
    std::vector<std::complex<double>> betas;  // user k -> IRS path loss factor
    Angle gamma;                              // AOD of the IRS->BS path at the IRS
    Angle varphi;                             // AOA of the IRS->BS path at the BS
    std::complex<double> delta{1.0, 0.0};     // IRS -> BS path loss factor
    ArrayGeometry irs_geom;
    ArrayGeometry bs_geom;

    [[nodiscard]] int num_users() const { return static_cast<int>(thetas.size()); }
};

inline void validate(const ChannelRealization& real, double min_separation_deg = 0.0) {
    if (real.thetas.empty()) {
        throw std::invalid_argument("channel realization needs at least one user");
    }
    if (real.betas.size() != real.thetas.size()) {
        throw std::invalid_argument("betas and thetas must have equal length");
    }
    for (const auto& beta : real.betas) {
        if (!(std::abs(beta) > 0.0)) {
            throw std::invalid_argument("user path loss factor must be nonzero");
        }
    }
    if (!(std::abs(real.delta) > 0.0)) {
        throw std::invalid_argument("IRS->BS path loss factor must be nonzero");
    }
    for (std::size_t i = 0; i < real.thetas.size(); ++i) {
        for (std::size_t j = i + 1; j < real.thetas.size(); ++j) {
            if (angular_distance_deg(real.thetas[i], real.thetas[j]) < min_separation_deg) {
                throw std::invalid_argument("user AOAs closer than the minimum separation");
            }
        }
    }
}

/// LOS channel from user k to the IRS: h_k = beta_k * b(theta_k).
inline Eigen::VectorXcd user_irs_channel(const ChannelRealization& real, int user) {
    if (user < 0 || user >= real.num_users()) {
        throw std::out_of_range("user index out of range");
    }
    return real.betas[static_cast<std::size_t>(user)] *
           steering_vector(real.irs_geom, real.thetas[static_cast<std::size_t>(user)]);
}

/// LOS channel from the IRS to the BS: delta * c(varphi) * b(gamma)^T.
/// The outer product makes the matrix rank one.
inline Eigen::MatrixXcd irs_bs_channel(const ChannelRealization& real) {
    return real.delta * (steering_vector(real.bs_geom, real.varphi) *
                         steering_vector(real.irs_geom, real.gamma).transpose());
}

}  // namespace irsmusic
