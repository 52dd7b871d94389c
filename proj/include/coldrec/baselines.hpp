#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coldrec/fbsm.hpp"
#include "coldrec/scorer.hpp"
#include "coldrec/sparse.hpp"

namespace coldrec {

// =============================================================================
// CoSim: sum over the profile of cosine similarity between item features.
// =============================================================================

/// sum_{j in R_u+ \ {i}} cos(f_i, f_j); cos is 0 when either norm is 0.
/// Normalizes every touched row; use CosineScorer for bulk scoring.
double cosim_score(const ItemFeatureMatrix& features, const PreferenceData& prefs, UserId user,
                   ItemId item);

/// Bulk CoSim. Rows are L2-normalized once and summed into per-user
/// aggregates, so a score is f^_i . (g_u - [i in R_u+] f^_i).
class CosineScorer final : public Scorer {
public:
    CosineScorer(const ItemFeatureMatrix& features, const PreferenceData& train);

    void score(UserId user, std::span<const ItemId> items, std::span<double> out) const override;
    std::string name() const override { return "cosim"; }

    const ItemFeatureMatrix& normalized_features() const noexcept { return normalized_; }

private:
    ItemFeatureMatrix normalized_;
    UserProfiles profiles_;
};

// =============================================================================
// UFSM: l global feature-weight vectors mixed per user.
//   sim_u(i, j) = sum_d m_{u,d} w_d^T (f_i (.) f_j)
// =============================================================================

class LinearSimilarityModel {
public:
    LinearSimilarityModel() = default;

    /// weights: l x n_F row-major; memberships: n_users x l row-major.
    LinearSimilarityModel(std::size_t n_functions, std::size_t n_features,
                          std::vector<double> weights, std::vector<double> memberships);

    /// w_d = 1, m_{u,d} = 1/l plus a small uniform jitter when l > 1.
    static LinearSimilarityModel initialized(std::size_t n_functions, std::size_t n_features,
                                             std::size_t n_users, std::uint64_t seed);

    std::size_t n_functions() const noexcept { return n_functions_; }
    std::size_t n_features() const noexcept { return n_features_; }
    std::size_t n_users() const noexcept {
        return n_functions_ == 0 ? 0 : memberships_.size() / n_functions_;
    }

    std::span<const double> weights(std::size_t d) const noexcept {
        return {weights_.data() + d * n_features_, n_features_};
    }
    std::span<double> mutable_weights(std::size_t d) noexcept {
        return {weights_.data() + d * n_features_, n_features_};
    }

    /// Row m_u. Users without a row get the mean of all rows.
    std::span<const double> memberships(UserId user) const noexcept;
    std::span<double> mutable_memberships(UserId user);

    std::span<const double> raw_weights() const noexcept { return weights_; }
    std::span<const double> raw_memberships() const noexcept { return memberships_; }

    bool all_finite() const noexcept;

    friend bool operator==(const LinearSimilarityModel& a, const LinearSimilarityModel& b) {
        return a.n_functions_ == b.n_functions_ && a.n_features_ == b.n_features_ &&
               a.weights_ == b.weights_ && a.memberships_ == b.memberships_;
    }

    /// Recomputes the mean membership row served to cold users. Call after
    /// editing memberships; the trainer does so after every epoch.
    void refresh_cold_user_row();

private:
    std::size_t n_functions_ = 0;
    std::size_t n_features_ = 0;
    std::vector<double> weights_;
    std::vector<double> memberships_;
    std::vector<double> mean_row_;
};

/// sum_d m_{u,d} w_d^T (f_i (.) (f_u - [i in R_u+] f_i)).
double linear_score(const LinearSimilarityModel& model, const ItemFeatureMatrix& features,
                    const UserProfiles& profiles, UserId user, ItemId item);

/// Relative rank of the linear model from a prepared (sparse-only) workspace.
double linear_relative_rank(const LinearSimilarityModel& model, const TripletWorkspace& ws,
                            UserId user);

struct LinearGradient {
    SparseVector direction;                 // delta (.) f_u - f_i (.) f_i
    std::vector<double> weight_scale;       // grad w_d = weight_scale[d] * direction
    std::vector<double> membership_grad;    // grad m_{u,d}
};

LinearGradient linear_gradients(const LinearSimilarityModel& model, const TripletWorkspace& ws,
                                UserId user);

class LinearScorer final : public Scorer {
public:
    LinearScorer(const LinearSimilarityModel& model, const ItemFeatureMatrix& features,
                 const UserProfiles& profiles);

    void score(UserId user, std::span<const ItemId> items, std::span<double> out) const override;
    std::string name() const override { return "ufsm"; }

private:
    const LinearSimilarityModel& model_;
    const ItemFeatureMatrix& features_;
    const UserProfiles& profiles_;
};

}  // namespace coldrec
