#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dprp/rng.hpp"

namespace dprp::projection {

// Entry law of the random projection matrix. All three families have
// zero-mean, unit-variance entries; the sparse family takes values
// +/-sqrt(s) with probability 1/(2s) each and 0 otherwise, so sparsity 1
// collapses to the +/-1 law.
class DistributionKind {
  public:
    enum class Family { kRademacher, kGaussian, kAchlioptas };

    static DistributionKind rademacher() { return DistributionKind(Family::kRademacher, 1); }
    static DistributionKind gaussian() { return DistributionKind(Family::kGaussian, 1); }
    static DistributionKind achlioptas(int sparsity) {
        if (sparsity < 1) throw std::invalid_argument("achlioptas sparsity must be >= 1");
        return DistributionKind(Family::kAchlioptas, sparsity);
    }

    Family family() const { return family_; }
    int sparsity() const { return sparsity_; }

    // Sub-Gaussian variance proxy of a single entry: s for the sparse law,
    // 1 otherwise. Drives the sensitivity tail and the second-moment bound.
    int sub_gaussian_scale() const {
        return family_ == Family::kAchlioptas ? sparsity_ : 1;
    }

    std::string name() const {
        switch (family_) {
            case Family::kRademacher: return "rademacher";
            case Family::kGaussian: return "gaussian";
            case Family::kAchlioptas: return "achlioptas" + std::to_string(sparsity_);
        }
        return "?";
    }

    bool operator==(const DistributionKind& o) const {
        return family_ == o.family_ && sparsity_ == o.sparsity_;
    }

  private:
    DistributionKind(Family family, int sparsity) : family_(family), sparsity_(sparsity) {}
    Family family_;
    int sparsity_;
};

struct ProjectionSpec {
    DistributionKind kind = DistributionKind::rademacher();
    int d = 0;  // model dimension
    int r = 0;  // reduced dimension, 1 <= r <= d
    std::uint64_t seed = 0;
};

// Seed for the round-t matrix, derived from the root seed shared between the
// clients and the server (see rng::derive for the chain).
inline std::uint64_t round_seed(std::uint64_t root_seed, std::uint64_t t) {
    return rng::derive(root_seed, t);
}

// The r x d reduced projection matrix: the first r rows of the conceptual
// d x d matrix. Only those rows are ever drawn, so the draw for a given
// (kind, d, r, seed) differs from slicing a full d x d realization.
// Entries are drawn row-major. Immutable once built; safe to share.
class ProjectionMatrix {
  public:
    explicit ProjectionMatrix(ProjectionSpec spec) : spec_(spec) {
        if (spec.d < 1) throw std::invalid_argument("projection: d must be >= 1");
        if (spec.r < 1) throw std::invalid_argument("projection: r must be >= 1");
        if (spec.r > spec.d) throw std::invalid_argument("projection: r must be <= d");
        rows_.resize(static_cast<std::size_t>(spec.r) * spec.d);
        rng::SplitMix64 gen(spec.seed);
        switch (spec.kind.family()) {
            case DistributionKind::Family::kRademacher:
                for (auto& e : rows_) e = gen.next_sign();
                break;
            case DistributionKind::Family::kGaussian:
                for (auto& e : rows_) e = gen.next_gaussian();
                break;
            case DistributionKind::Family::kAchlioptas: {
                const double s = spec.kind.sparsity();
                const double root_s = std::sqrt(s);
                const double p_half = 1.0 / (2.0 * s);
                for (auto& e : rows_) {
                    const double u = gen.next_unit_half_open();
                    e = u < p_half ? root_s : (u >= 1.0 - p_half ? -root_s : 0.0);
                }
                break;
            }
        }
    }

    const ProjectionSpec& spec() const { return spec_; }
    int rows() const { return spec_.r; }
    int cols() const { return spec_.d; }
    double entry(int row, int col) const {
        return rows_[static_cast<std::size_t>(row) * spec_.d + col];
    }
    std::span<const double> row(int k) const {
        return {rows_.data() + static_cast<std::size_t>(k) * spec_.d,
                static_cast<std::size_t>(spec_.d)};
    }
    std::span<const double> data() const { return rows_; }

  private:
    ProjectionSpec spec_;
    std::vector<double> rows_;
};

inline ProjectionMatrix generate(const ProjectionSpec& spec) { return ProjectionMatrix(spec); }

// Forward projection (1/sqrt(r)) U_r g; preserves the squared norm in
// expectation over the matrix draw.
inline std::vector<double> project(const ProjectionMatrix& m, std::span<const double> g) {
    if (static_cast<int>(g.size()) != m.cols())
        throw std::invalid_argument("project: gradient length != d");
    const int r = m.rows();
    const int d = m.cols();
    const double scale = 1.0 / std::sqrt(static_cast<double>(r));
    std::vector<double> z(static_cast<std::size_t>(r));
    for (int k = 0; k < r; ++k) {
        const double* row = m.data().data() + static_cast<std::size_t>(k) * d;
        double acc = 0.0;
        for (int j = 0; j < d; ++j) acc += row[j] * g[j];
        z[static_cast<std::size_t>(k)] = scale * acc;
    }
    return z;
}

// Transpose step (1/sqrt(r)) U_r^T y used by the server before the 1/(nc)
// rescale.
inline std::vector<double> back_project(const ProjectionMatrix& m, std::span<const double> y) {
    if (static_cast<int>(y.size()) != m.rows())
        throw std::invalid_argument("back_project: input length != r");
    const int r = m.rows();
    const int d = m.cols();
    const double scale = 1.0 / std::sqrt(static_cast<double>(r));
    std::vector<double> out(static_cast<std::size_t>(d), 0.0);
    for (int k = 0; k < r; ++k) {
        const double* row = m.data().data() + static_cast<std::size_t>(k) * d;
        const double yk = y[static_cast<std::size_t>(k)];
        for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(j)] += row[j] * yk;
    }
    for (auto& v : out) v *= scale;
    return out;
}

}  // namespace dprp::projection
