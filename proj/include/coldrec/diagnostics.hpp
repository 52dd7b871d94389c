#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "coldrec/fbsm.hpp"

namespace coldrec {

/// |a - b| / max(1, |a|, |b|): relative for large values, absolute below 1.
double relative_error(double a, double b) noexcept;

// =============================================================================
// Gradient and fast-path verification on random instances
// =============================================================================

struct GradcheckOptions {
    std::size_t n_features = 32;
    std::size_t latent_dim = 4;
    std::size_t trials = 100;
    std::size_t max_nnz = 16;
    std::size_t profile_size = 5;
    double step = 1e-6;
    double gradient_tolerance = 1e-5;
    double rank_tolerance = 1e-9;   // fast path vs dense oracle, scaled by 1 + |oracle|
    std::uint64_t seed = 1;
    bool inject_sign_flip = false;  // harness self-test: negate the analytic V gradient
};

struct GradcheckReport {
    std::size_t trials = 0;
    double max_error_d = 0.0;
    double max_error_v = 0.0;
    double max_error_rank = 0.0;  // |fast - oracle| / (1 + |oracle|)
    bool passed = false;
};

/// Central finite differences of relative_rank against grad_d / grad_v, plus
/// relative_rank against dense_oracle_relative_rank, on `trials` instances.
GradcheckReport run_gradcheck(const GradcheckOptions& options);

// =============================================================================
// Cost accounting
// =============================================================================

/// Operation counts of one relative_rank + grad_d + grad_v evaluation from a
/// prepared workspace (the f_u aggregation is not included).
OpCounters triplet_kernel_cost(const FbsmModel& model, const TripletWorkspace& workspace);

struct BenchPoint {
    std::size_t n_features = 0;
    std::size_t latent_dim = 0;
    std::size_t nnz = 0;
    double seconds_per_triplet = 0.0;
    std::uint64_t multiply_adds = 0;  // per triplet
};

struct BenchOptions {
    std::vector<std::size_t> n_features{256, 512, 1024};
    std::vector<std::size_t> latent_dims{4, 8, 16};
    double nnz_ratio = 0.25;        // nnz of every vector = ratio * n_F
    std::size_t repetitions = 2000;
    std::uint64_t seed = 1;
};

std::vector<BenchPoint> run_bench(const BenchOptions& options);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

void write_bench_table(std::ostream& out, std::span<const BenchPoint> points);

}  // namespace coldrec
