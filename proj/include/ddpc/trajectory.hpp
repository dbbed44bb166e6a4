#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ddpc/errors.hpp"

namespace ddpc {

// Shortest text representation that round-trips a double exactly.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Fixed-rate multichannel time series. Each sample is a column vector with
// `channels` entries; sample k is taken at time k * dt.
class Trajectory {
public:
    Trajectory(int channels, double dt) : channels_(channels), dt_(dt) {
        if (channels < 1)
            throw DimensionError("Trajectory: channels must be >= 1, got " +
                                 std::to_string(channels));
        if (!(dt > 0.0))
            throw ArgumentError("Trajectory: dt must be > 0, got " + format_double(dt));
    }

    static Trajectory from_matrix(const Eigen::MatrixXd& m, double dt) {
        Trajectory t(static_cast<int>(m.rows()), dt);
        t.samples_.reserve(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j) t.samples_.push_back(m.col(j));
        return t;
    }

    int channels() const { return channels_; }
    double dt() const { return dt_; }
    int length() const { return static_cast<int>(samples_.size()); }

    void push_back(const Eigen::VectorXd& sample) {
        if (sample.size() != channels_)
            throw DimensionError("Trajectory: sample has " + std::to_string(sample.size()) +
                                 " channels, trajectory has " + std::to_string(channels_));
        samples_.push_back(sample);
    }

    void push_back(double v) {
        push_back(Eigen::VectorXd::Constant(1, v));
    }

    void pop_front() {
        if (samples_.empty()) throw ArgumentError("Trajectory: pop_front on empty trajectory");
        samples_.erase(samples_.begin());
    }

    const Eigen::VectorXd& sample(int k) const {
        if (k < 0 || k >= length())
            throw DimensionError("Trajectory: sample index " + std::to_string(k) +
                                 " out of range [0, " + std::to_string(length()) + ")");
        return samples_[static_cast<std::size_t>(k)];
    }

    double value(int k, int ch = 0) const { return sample(k)(ch); }

    // channels x length
    Eigen::MatrixXd matrix() const {
        Eigen::MatrixXd m(channels_, length());
        for (int k = 0; k < length(); ++k) m.col(k) = samples_[static_cast<std::size_t>(k)];
        return m;
    }

    Trajectory segment(int start, int count) const {
        if (start < 0 || count < 0 || start + count > length())
            throw DimensionError("Trajectory: segment [" + std::to_string(start) + ", " +
                                 std::to_string(start + count) + ") out of range, length " +
                                 std::to_string(length()));
        Trajectory t(channels_, dt_);
        t.samples_.assign(samples_.begin() + start, samples_.begin() + start + count);
        return t;
    }

    Trajectory tail(int count) const { return segment(length() - count, count); }

    // Samples start .. start+count-1 concatenated into one column vector
    // (sample-major: all channels of sample k, then sample k+1, ...).
    Eigen::VectorXd stacked(int start, int count) const {
        if (start < 0 || count < 0 || start + count > length())
            throw DimensionError("Trajectory: stacked window [" + std::to_string(start) + ", " +
                                 std::to_string(start + count) + ") out of range, length " +
                                 std::to_string(length()));
        Eigen::VectorXd v(static_cast<Eigen::Index>(count) * channels_);
        for (int k = 0; k < count; ++k)
            v.segment(static_cast<Eigen::Index>(k) * channels_, channels_) =
                samples_[static_cast<std::size_t>(start + k)];
        return v;
    }

    bool operator==(const Trajectory& other) const {
        if (channels_ != other.channels_ || dt_ != other.dt_ || length() != other.length())
            return false;
        for (int k = 0; k < length(); ++k)
            if (samples_[static_cast<std::size_t>(k)] != other.samples_[static_cast<std::size_t>(k)])
                return false;
        return true;
    }

    // CSV: header "t,ch0,ch1,...", one row per sample, full precision.
    void write_csv(std::ostream& os) const {
        os << "t";
        for (int c = 0; c < channels_; ++c) os << ",ch" << c;
        os << "\n";
        for (int k = 0; k < length(); ++k) {
            os << format_double(k * dt_);
            for (int c = 0; c < channels_; ++c) os << "," << format_double(value(k, c));
            os << "\n";
        }
    }

    std::string to_csv() const {
        std::ostringstream os;
        write_csv(os);
        return os.str();
    }

    // Inverse of write_csv. dt is inferred from the first two rows
    // (fallback_dt is used for trajectories with fewer than two samples).
    static Trajectory read_csv(std::istream& is, double fallback_dt = 1.0) {
        std::string line;
        if (!std::getline(is, line)) throw DataError("Trajectory: empty CSV stream");
        int columns = 1;
        for (char ch : line)
            if (ch == ',') ++columns;
        const int channels = columns - 1;
        if (channels < 1) throw DataError("Trajectory: CSV header has no channel columns");

        std::vector<double> times;
        std::vector<Eigen::VectorXd> rows;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::string cell;
            if (!std::getline(ls, cell, ',')) break;
            times.push_back(std::stod(cell));
            Eigen::VectorXd s(channels);
            for (int c = 0; c < channels; ++c) {
                if (!std::getline(ls, cell, ','))
                    throw DataError("Trajectory: CSV row has fewer than " +
                                    std::to_string(channels) + " channel cells");
                s(c) = std::stod(cell);
            }
            rows.push_back(std::move(s));
        }
        const double dt = rows.size() >= 2 ? times[1] - times[0] : fallback_dt;
        Trajectory t(channels, dt);
        for (auto& s : rows) t.push_back(s);
        return t;
    }

private:
    int channels_;
    double dt_;
    std::vector<Eigen::VectorXd> samples_;
};

}  // namespace ddpc
