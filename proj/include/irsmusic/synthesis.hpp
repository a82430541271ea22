#pragma once

#include <cmath>
#include <complex>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "irsmusic/channel.hpp"
#include "irsmusic/geometry.hpp"
#include "irsmusic/manifold.hpp"
#include "irsmusic/random.hpp"

namespace irsmusic {

// Transmission plan for Q blocks of L samples each. Every user repeats one
// message symbol for the whole block, and the IRS cycles the same L
// reflection patterns (rows of `patterns`) in every block.
struct Schedule {
    int snapshots_per_block = 0;  // L
    int num_blocks = 0;           // Q
    Eigen::MatrixXcd symbols;     // K x Q, per-block messages
    std::vector<double> powers;   // K transmit powers
    Eigen::MatrixXcd patterns;    // L x I

    [[nodiscard]] int num_users() const { return static_cast<int>(symbols.rows()); }
    [[nodiscard]] int num_samples() const { return snapshots_per_block * num_blocks; }
};

inline void validate(const Schedule& sched) {
    const int num_users = sched.num_users();
    if (num_users < 1 || sched.num_blocks < 1) {
        throw std::invalid_argument("schedule needs at least one user and one block");
    }
    if (sched.snapshots_per_block <= num_users) {
        throw std::invalid_argument("snapshots per block must exceed the user count");
    }
    if (sched.symbols.cols() != sched.num_blocks) {
        throw std::invalid_argument("symbol matrix must have one column per block");
    }
    if (static_cast<int>(sched.powers.size()) != num_users) {
        throw std::invalid_argument("one transmit power per user required");
    }
    for (double p : sched.powers) {
        if (!(p >= 0.0)) {
            throw std::invalid_argument("transmit powers must be nonnegative");
        }
    }
    if ((sched.patterns.cwiseAbs().array() - 1.0).abs().maxCoeff() > 1e-12) {
        throw std::invalid_argument("IRS reflection coefficients must have unit modulus");
    }
    for (Eigen::Index i = 0; i < sched.patterns.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < sched.patterns.rows(); ++j) {
            if ((sched.patterns.row(i).array() == sched.patterns.row(j).array()).all()) {
                throw std::invalid_argument("IRS reflection patterns must be pairwise distinct");
            }
        }
    }
}

/// Per-block messages: K x Q i.i.d. CN(0,1) draws.
inline Eigen::MatrixXcd generate_messages(int num_users, int num_blocks, Rng& rng) {
    if (num_users < 1 || num_blocks < 1) {
        throw std::invalid_argument("message matrix needs at least one user and one block");
    }
    Eigen::MatrixXcd symbols(num_users, num_blocks);
    for (Eigen::Index q = 0; q < num_blocks; ++q) {
        for (Eigen::Index k = 0; k < num_users; ++k) {
            symbols(k, q) = complex_gaussian(rng);
        }
    }
    return symbols;
}

/// Expand block messages to the per-sample stream of length Q*L: column q of
/// `symbols` is repeated for the L samples of block q.
inline Eigen::MatrixXcd repeated_symbol_stream(const Eigen::MatrixXcd& symbols,
                                               int snapshots_per_block) {
    if (snapshots_per_block < 1) {
        throw std::invalid_argument("block length must be positive");
    }
    Eigen::MatrixXcd stream(symbols.rows(), symbols.cols() * snapshots_per_block);
    for (Eigen::Index n = 0; n < stream.cols(); ++n) {
        stream.col(n) = symbols.col(n / snapshots_per_block);
    }
    return stream;
}

/// L random IRS reflection patterns of length I, entries exp(j*psi) with psi
/// uniform on [0, 2*pi). Rows are pairwise distinct with probability one.
inline Eigen::MatrixXcd generate_irs_patterns(int num_elements, int snapshots_per_block,
                                              Rng& rng) {
    if (num_elements < 1 || snapshots_per_block < 1) {
        throw std::invalid_argument("pattern matrix needs positive dimensions");
    }
    Eigen::MatrixXcd patterns(snapshots_per_block, num_elements);
    for (Eigen::Index l = 0; l < patterns.rows(); ++l) {
        for (Eigen::Index i = 0; i < patterns.cols(); ++i) {
            patterns(l, i) = std::polar(1.0, uniform_phase(rng));
        }
    }
    return patterns;
}

/// Draw a complete schedule: CN(0,1) block messages and random unit-modulus
/// IRS patterns. `powers` defaults to all ones when empty.
inline Schedule make_schedule(int num_users, int snapshots_per_block, int num_blocks,
                              int num_irs_elements, Rng& rng, std::vector<double> powers = {}) {
    if (powers.empty()) {
        powers.assign(static_cast<std::size_t>(num_users), 1.0);
    }
    Schedule sched;
    sched.snapshots_per_block = snapshots_per_block;
    sched.num_blocks = num_blocks;
    sched.symbols = generate_messages(num_users, num_blocks, rng);
    sched.powers = std::move(powers);
    sched.patterns = generate_irs_patterns(num_irs_elements, snapshots_per_block, rng);
    validate(sched);
    return sched;
}

/// Same as make_schedule but with caller-supplied reflection patterns
/// (e.g. DFT rows) instead of random ones.
inline Schedule make_schedule_with_patterns(int num_users, int num_blocks,
                                            Eigen::MatrixXcd patterns, Rng& rng,
                                            std::vector<double> powers = {}) {
    if (powers.empty()) {
        powers.assign(static_cast<std::size_t>(num_users), 1.0);
    }
    Schedule sched;
    sched.snapshots_per_block = static_cast<int>(patterns.rows());
    sched.num_blocks = num_blocks;
    sched.symbols = generate_messages(num_users, num_blocks, rng);
    sched.powers = std::move(powers);
    sched.patterns = std::move(patterns);
    validate(sched);
    return sched;
}

/// IRS pattern applied at 0-based sample n; the schedule is periodic with
/// period L, so this is row (n mod L) of the pattern matrix.
inline Eigen::RowVectorXcd pattern_for_sample(const Schedule& sched, int sample) {
    if (sample < 0 || sample >= sched.num_samples()) {
        throw std::out_of_range("sample index outside the schedule");
    }
    return sched.patterns.row(sample % sched.snapshots_per_block);
}

/// Simulate the BS receive chain for all Q*L samples. Column n of the result
/// is y(n) = Gbar diag(phi(n)) sum_k h_k sqrt(p_k) s_k(n) + z(n) with noise
/// z(n) ~ CN(0, noise_power * I).
inline Eigen::MatrixXcd synthesize_bs_signal(const ChannelRealization& real,
                                             const Schedule& sched, double noise_power,
                                             Rng& rng) {
    validate(real);
    validate(sched);
    if (sched.patterns.cols() != real.irs_geom.num_elements) {
        throw std::invalid_argument("schedule pattern length must match the IRS element count");
    }
    if (sched.num_users() != real.num_users()) {
        throw std::invalid_argument("schedule and realization disagree on the user count");
    }
    if (!(noise_power >= 0.0)) {
        throw std::invalid_argument("noise power must be nonnegative");
    }

    const int num_samples = sched.num_samples();
    const int num_antennas = real.bs_geom.num_elements;

    Eigen::MatrixXcd user_channels(real.irs_geom.num_elements, real.num_users());
    for (int k = 0; k < real.num_users(); ++k) {
        user_channels.col(k) =
            std::sqrt(sched.powers[static_cast<std::size_t>(k)]) * user_irs_channel(real, k);
    }
    const Eigen::MatrixXcd irs_bs = irs_bs_channel(real);
    const Eigen::MatrixXcd symbol_stream =
        repeated_symbol_stream(sched.symbols, sched.snapshots_per_block);
    const double noise_scale = std::sqrt(noise_power);

    Eigen::MatrixXcd received(num_antennas, num_samples);
    for (int n = 0; n < num_samples; ++n) {
        const Eigen::VectorXcd incident = user_channels * symbol_stream.col(n);
        const Eigen::VectorXcd reflected =
            pattern_for_sample(sched, n).transpose().cwiseProduct(incident);
        received.col(n) = irs_bs * reflected;
        if (noise_power > 0.0) {
            for (int m = 0; m < num_antennas; ++m) {
                received(m, n) += noise_scale * complex_gaussian(rng);
            }
        }
    }
    return received;
}

// The Q temporal-domain snapshots assembled from one BS antenna, together
// with everything the estimator is allowed to know.
struct BlockObservations {
    Eigen::MatrixXcd snapshots;  // L x Q, column q = block-q samples of one antenna
    Angle gamma;
    Eigen::MatrixXcd patterns;  // L x I
    ArrayGeometry irs_geom;
    double noise_power = 0.0;

    [[nodiscard]] int snapshots_per_block() const { return static_cast<int>(snapshots.rows()); }
    [[nodiscard]] int num_blocks() const { return static_cast<int>(snapshots.cols()); }
    [[nodiscard]] VirtualManifold manifold() const { return {gamma, patterns, irs_geom}; }
};

/// Reshape one antenna's sample stream into per-block snapshot columns.
inline BlockObservations extract_blocks(const Eigen::MatrixXcd& received, const Schedule& sched,
                                        const ChannelRealization& real, double noise_power,
                                        int antenna = 0) {
    if (antenna < 0 || antenna >= received.rows()) {
        throw std::out_of_range("antenna index out of range");
    }
    if (received.cols() % sched.snapshots_per_block != 0) {
        throw std::invalid_argument("stream length must be divisible by the block length");
    }
    if (received.cols() != sched.num_samples()) {
        throw std::invalid_argument("stream length must equal blocks x block length");
    }

    const int length = sched.snapshots_per_block;
    const int blocks = sched.num_blocks;
    BlockObservations obs;
    obs.snapshots.resize(length, blocks);
    for (int q = 0; q < blocks; ++q) {
        for (int l = 0; l < length; ++l) {
            obs.snapshots(l, q) = received(antenna, q * length + l);
        }
    }
    obs.gamma = real.gamma;
    obs.patterns = sched.patterns;
    obs.irs_geom = real.irs_geom;
    obs.noise_power = noise_power;
    return obs;
}

/// Noise power that puts the mean per-snapshot-element signal power at the
/// requested SNR: sigma^2 = (sum_k ||abar(theta_k)||^2 p_k |delta beta_k|^2 / L)
/// / 10^(snr_db/10). The expectation is over the CN(0,1) message model.
inline double snr_to_noise_power(double target_snr_db, const ChannelRealization& real,
                                 const Schedule& sched) {
    validate(real);
    validate(sched);
    if (sched.num_users() != real.num_users()) {
        throw std::invalid_argument("schedule and realization disagree on the user count");
    }
    const VirtualManifold manifold{real.gamma, sched.patterns, real.irs_geom};
    double mean_signal_power = 0.0;
    for (int k = 0; k < real.num_users(); ++k) {
        const double gain = std::norm(real.delta * real.betas[static_cast<std::size_t>(k)]) *
                            sched.powers[static_cast<std::size_t>(k)];
        mean_signal_power +=
            gain * virtual_steering(manifold, real.thetas[static_cast<std::size_t>(k)])
                       .squaredNorm();
    }
    mean_signal_power /= static_cast<double>(sched.snapshots_per_block);
    if (!(mean_signal_power > 0.0)) {
        throw std::invalid_argument("scenario has zero signal power");
    }
    return mean_signal_power / std::pow(10.0, target_snr_db / 10.0);
}

/// Snapshot dump for external tooling, one row per sample:
/// block index, sample index within the block (both 0-based), real, imag.
inline void write_snapshots_csv(const BlockObservations& obs, std::ostream& out) {
    out << "block,sample,re,im\n";
    out.precision(17);
    for (int q = 0; q < obs.num_blocks(); ++q) {
        for (int l = 0; l < obs.snapshots_per_block(); ++l) {
            const std::complex<double> value = obs.snapshots(l, q);
            out << q << ',' << l << ',' << value.real() << ',' << value.imag() << '\n';
        }
    }
}

}  // namespace irsmusic
