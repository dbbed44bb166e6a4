#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <string>
#include <vector>

#include "ddpc/errors.hpp"
#include "ddpc/trajectory.hpp"

namespace ddpc {

// Relative cutoff for rank decisions: singular values below
// kRankRelTol * sigma_max count as zero.
inline constexpr double kRankRelTol = 1e-9;

// Depth-L block Hankel of a multichannel series. Block row i, column j holds
// sample i+j; channels interleave within each block row (sample-major), so a
// q-channel series of length T yields a (q*L) x (T-L+1) scalar matrix whose
// column j stacks samples j, j+1, ..., j+L-1.
struct HankelView {
    int depth = 0;        // L, in block rows
    int channels = 0;
    int block_cols = 0;   // T - L + 1
    int past_depth = 0;   // leading block rows exposed by past()
    int future_depth = 0; // trailing block rows exposed by future()
    Eigen::MatrixXd m;    // materialized (channels*depth) x block_cols

    // Sample shared by block row i and column j (equals source sample i+j).
    Eigen::VectorXd block(int i, int j) const {
        if (i < 0 || i >= depth || j < 0 || j >= block_cols)
            throw DimensionError("HankelView: block (" + std::to_string(i) + ", " +
                                 std::to_string(j) + ") out of range " + std::to_string(depth) +
                                 " x " + std::to_string(block_cols));
        return m.block(static_cast<Eigen::Index>(i) * channels, j, channels, 1);
    }

    Eigen::MatrixXd past() const {
        return m.topRows(static_cast<Eigen::Index>(past_depth) * channels);
    }
    Eigen::MatrixXd future() const {
        return m.bottomRows(static_cast<Eigen::Index>(future_depth) * channels);
    }
};

inline HankelView build_hankel(const Trajectory& w, int L, int past_depth = 0,
                               int future_depth = 0) {
    if (L < 1) throw ArgumentError("build_hankel: depth must be >= 1, got " + std::to_string(L));
    if (w.length() < L)
        throw DimensionError("build_hankel: trajectory length " + std::to_string(w.length()) +
                             " shorter than Hankel depth " + std::to_string(L));
    if (past_depth < 0 || future_depth < 0 || past_depth + future_depth > L)
        throw ArgumentError("build_hankel: past/future split " + std::to_string(past_depth) +
                            "+" + std::to_string(future_depth) + " exceeds depth " +
                            std::to_string(L));
    HankelView h;
    h.depth = L;
    h.channels = w.channels();
    h.block_cols = w.length() - L + 1;
    h.past_depth = past_depth;
    h.future_depth = future_depth;
    h.m.resize(static_cast<Eigen::Index>(h.channels) * L, h.block_cols);
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < h.block_cols; ++j)
            h.m.block(static_cast<Eigen::Index>(i) * h.channels, j, h.channels, 1) =
                w.sample(i + j);
    return h;
}

inline int rank_by_svd(const Eigen::MatrixXd& m, double rel_tol = kRankRelTol) {
    if (m.rows() == 0 || m.cols() == 0) return 0;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    if (smax == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > rel_tol * smax) ++r;
    return r;
}

// Largest L such that the depth-L Hankel of w has full row rank. Only depths
// with T - L >= L - 1 are searched (deeper Hankels cannot have more columns
// than rows even for scalar signals). Degenerate inputs return 0.
inline int persistent_excitation_order(const Trajectory& w, int max_order = 0,
                                       double rel_tol = kRankRelTol) {
    const int T = w.length();
    int best = 0;
    int cap = (T + 1) / 2;  // feasibility: T - L >= L - 1
    if (max_order > 0 && max_order < cap) cap = max_order;
    for (int L = 1; L <= cap; ++L) {
        const int rows = w.channels() * L;
        const int cols = T - L + 1;
        if (rows > cols) break;  // cannot be full row rank
        if (rank_by_svd(build_hankel(w, L).m, rel_tol) != rows) break;  // order is monotone
        best = L;
    }
    return best;
}

// Minimal l2 misfit of b against the column span of A.
inline double least_squares_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    if (A.rows() != b.size())
        throw DimensionError("least_squares_residual: matrix has " + std::to_string(A.rows()) +
                             " rows, vector has " + std::to_string(b.size()));
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    const Eigen::VectorXd g = cod.solve(b);
    return (A * g - b).norm();
}

// How far the probe (u, y) window is from being explainable as a linear
// combination of depth-L windows of the recorded data:
//   min_g ||[H_L(data_u); H_L(data_y)] g - [probe_u; probe_y]||_2
// A residual near zero means the probe lies in the span of the data.
inline double behavioral_residual(const Trajectory& data_u, const Trajectory& data_y,
                                  const Trajectory& probe_u, const Trajectory& probe_y, int L) {
    if (data_u.length() != data_y.length())
        throw DimensionError("behavioral_residual: data streams have lengths " +
                             std::to_string(data_u.length()) + " and " +
                             std::to_string(data_y.length()));
    if (data_u.channels() != probe_u.channels())
        throw DimensionError("behavioral_residual: input data has " +
                             std::to_string(data_u.channels()) + " channels, probe has " +
                             std::to_string(probe_u.channels()));
    if (data_y.channels() != probe_y.channels())
        throw DimensionError("behavioral_residual: output data has " +
                             std::to_string(data_y.channels()) + " channels, probe has " +
                             std::to_string(probe_y.channels()));
    if (probe_u.length() != L || probe_y.length() != L)
        throw DimensionError("behavioral_residual: probe lengths " +
                             std::to_string(probe_u.length()) + "/" +
                             std::to_string(probe_y.length()) + " must equal depth " +
                             std::to_string(L));
    const HankelView hu = build_hankel(data_u, L);
    const HankelView hy = build_hankel(data_y, L);
    Eigen::MatrixXd H(hu.m.rows() + hy.m.rows(), hu.m.cols());
    H << hu.m, hy.m;
    Eigen::VectorXd b(H.rows());
    b << probe_u.stacked(0, L), probe_y.stacked(0, L);
    return least_squares_residual(H, b);
}

// Bounded store of synchronized parallel streams (e.g. input/output pairs,
// or lifted-state/input/output triples). Frozen buffers reject appends;
// rolling buffers evict the oldest sample once at capacity. Consumers rebuild
// Hankels from the streams on demand.
class DataBuffer {
public:
    enum class Mode { frozen, rolling };

    DataBuffer(const std::vector<int>& channel_counts, double dt, int capacity, Mode mode)
        : capacity_(capacity), mode_(mode) {
        if (capacity < 1)
            throw ArgumentError("DataBuffer: capacity must be >= 1, got " +
                                std::to_string(capacity));
        if (channel_counts.empty())
            throw ArgumentError("DataBuffer: at least one stream required");
        for (int c : channel_counts) streams_.emplace_back(c, dt);
    }

    static DataBuffer from_pair(const Trajectory& u, const Trajectory& y, int capacity,
                                Mode mode) {
        if (u.length() != y.length())
            throw DimensionError("DataBuffer: streams have lengths " +
                                 std::to_string(u.length()) + " and " +
                                 std::to_string(y.length()));
        DataBuffer b({u.channels(), y.channels()}, u.dt(), capacity, mode);
        for (int k = 0; k < u.length(); ++k) b.append_any({u.sample(k), y.sample(k)});
        return b;
    }

    static DataBuffer from_streams(const std::vector<Trajectory>& streams, int capacity,
                                   Mode mode) {
        if (streams.empty()) throw ArgumentError("DataBuffer: at least one stream required");
        std::vector<int> counts;
        for (const Trajectory& s : streams) {
            if (s.length() != streams.front().length())
                throw DimensionError("DataBuffer: streams have lengths " +
                                     std::to_string(streams.front().length()) + " and " +
                                     std::to_string(s.length()));
            counts.push_back(s.channels());
        }
        DataBuffer b(counts, streams.front().dt(), capacity, mode);
        for (int k = 0; k < streams.front().length(); ++k) {
            std::vector<Eigen::VectorXd> row;
            for (const Trajectory& s : streams) row.push_back(s.sample(k));
            b.append_any(row);
        }
        return b;
    }

    int capacity() const { return capacity_; }
    Mode mode() const { return mode_; }
    int length() const { return streams_.front().length(); }
    int stream_count() const { return static_cast<int>(streams_.size()); }

    const Trajectory& stream(int i) const { return streams_.at(static_cast<std::size_t>(i)); }

    void append(const Eigen::VectorXd& u_sample, const Eigen::VectorXd& y_sample) {
        if (stream_count() != 2)
            throw DimensionError("DataBuffer: pair append on a " +
                                 std::to_string(stream_count()) + "-stream buffer");
        if (mode_ == Mode::frozen)
            throw ModeError("DataBuffer: append rejected, buffer is frozen");
        append_any({u_sample, y_sample});
    }

    void append(const std::vector<Eigen::VectorXd>& samples) {
        if (mode_ == Mode::frozen)
            throw ModeError("DataBuffer: append rejected, buffer is frozen");
        append_any(samples);
    }

private:
    // Initial fill and rolling appends share this path; mode is checked by
    // the public append entry points only, so construction can fill frozen
    // buffers.
    void append_any(const std::vector<Eigen::VectorXd>& samples) {
        if (static_cast<int>(samples.size()) != stream_count())
            throw DimensionError("DataBuffer: got " + std::to_string(samples.size()) +
                                 " samples for " + std::to_string(stream_count()) + " streams");
        if (length() == capacity_)
            for (auto& s : streams_) s.pop_front();
        for (std::size_t i = 0; i < streams_.size(); ++i) streams_[i].push_back(samples[i]);
    }

    int capacity_;
    Mode mode_;
    std::vector<Trajectory> streams_;
};

}  // namespace ddpc
