#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coldrec/scorer.hpp"
#include "coldrec/sparse.hpp"

namespace coldrec {

// =============================================================================
// Factorized bilinear similarity: sim(i, j) = f_i^T (D + V^T V) f_j
//
// D = diag(d) holds one weight per feature, V (h x n_F) holds one latent
// factor per feature. h = 0 is allowed and gives the pure diagonal model.
// V^T V includes the k = p self-interaction terms.
// =============================================================================

class FbsmModel {
public:
    FbsmModel() = default;

    /// Throws DimensionError if d and V disagree on n_F, or if any entry is
    /// not finite.
    FbsmModel(std::vector<double> diagonal, DenseFactorMatrix factors);

    /// d = 1 everywhere, V ~ uniform(-0.01/sqrt(h), 0.01/sqrt(h)).
    static FbsmModel initialized(std::size_t n_features, std::size_t latent_dim,
                                 std::uint64_t seed);

    std::size_t n_features() const noexcept { return diagonal_.size(); }
    std::size_t latent_dim() const noexcept { return factors_.latent_dim(); }

    std::span<const double> diagonal() const noexcept { return diagonal_; }
    const DenseFactorMatrix& factors() const noexcept { return factors_; }

    // Mutable access bumps the revision; workspaces prepared earlier become stale.
    std::span<double> mutable_diagonal() noexcept {
        ++revision_;
        return diagonal_;
    }
    DenseFactorMatrix& mutable_factors() noexcept {
        ++revision_;
        return factors_;
    }

    std::uint64_t revision() const noexcept { return revision_; }
    bool all_finite() const noexcept;

    friend bool operator==(const FbsmModel& a, const FbsmModel& b) {
        return a.diagonal_ == b.diagonal_ && a.factors_ == b.factors_;
    }

private:
    std::vector<double> diagonal_;
    DenseFactorMatrix factors_;
    std::uint64_t revision_ = 0;
};

double similarity(const FbsmModel& model, const SparseVector& f_i, const SparseVector& f_j);

/// r_{u,i} from the user's cached aggregate. With `estimation_constraint` set
/// and i in R_u+, item i is excluded from its own profile. Users outside the
/// profile table score 0.
double score(const FbsmModel& model, const ItemFeatureMatrix& features,
             const UserProfiles& profiles, UserId user, ItemId item, bool estimation_constraint);

// =============================================================================
// TripletWorkspace
//
// Per-triplet cache for (u, i, j): f_u, f_i, delta = f_i - f_j and the three
// projections V f_u, V f_i, V delta. With these, relative rank and both
// gradients cost O(nnz * h) regardless of |R_u+|.
//
// f_u and f_i are held by pointer; the caller keeps them alive while the
// workspace is in use. Workspaces are per-thread scratch.
// =============================================================================

class TripletWorkspace {
public:
    /// Sparse part only (f_u, f_i, delta). Enough for the linear model.
    void prepare(const SparseVector& user_vector, const SparseVector& positive,
                 const SparseVector& negative);

    /// Recomputes the V projections against the current model.
    void project(const FbsmModel& model);

    void prepare(const FbsmModel& model, const SparseVector& user_vector,
                 const SparseVector& positive, const SparseVector& negative) {
        prepare(user_vector, positive, negative);
        project(model);
    }

    const SparseVector& user_vector() const noexcept { return *user_vector_; }
    const SparseVector& positive() const noexcept { return *positive_; }
    const SparseVector& delta() const noexcept { return delta_; }

    std::span<const double> vf_user() const noexcept { return vf_user_; }
    std::span<const double> vf_positive() const noexcept { return vf_positive_; }
    std::span<const double> vf_delta() const noexcept { return vf_delta_; }

    /// True when the projections were computed from this exact model state.
    bool is_current(const FbsmModel& model) const noexcept {
        return model_ == &model && revision_ == model.revision();
    }

    /// Recomputes every cached projection and compares exactly.
    bool coherent_with(const FbsmModel& model) const;

private:
    const SparseVector* user_vector_ = nullptr;
    const SparseVector* positive_ = nullptr;
    SparseVector delta_;
    std::vector<double> vf_user_;
    std::vector<double> vf_positive_;
    std::vector<double> vf_delta_;
    const FbsmModel* model_ = nullptr;
    std::uint64_t revision_ = 0;
};

/// r~_{u,ij} = (delta^T D f_u - f_i^T D f_i) + ((V delta)^T (V f_u) - (V f_i)^T (V f_i)).
/// Throws InternalError when the workspace was projected against another
/// model state.
double relative_rank(const FbsmModel& model, const TripletWorkspace& workspace);

/// d r~ / d d = delta (.) f_u - f_i (.) f_i, sparse over the touched features.
SparseVector grad_d(const TripletWorkspace& workspace);

/// Gradient of r~ with respect to V, stored only for the columns that can be
/// nonzero (support of delta, f_u and f_i).
struct FactorGradient {
    std::size_t latent_dim = 0;
    std::vector<FeatureId> columns;
    std::vector<double> values;  // columns.size() * latent_dim, column-major

    std::span<const double> column(std::size_t k) const noexcept {
        return {values.data() + k * latent_dim, latent_dim};
    }
};

/// Column p: delta_p (V f_u) + f_u,p (V delta) - 2 f_i,p (V f_i).
FactorGradient grad_v(const TripletWorkspace& workspace);

// =============================================================================
// Dense reference path (tests, gradcheck). Materializes W = diag(d) + V^T V.
// =============================================================================

inline constexpr std::size_t kDefaultOracleCap = 512;

/// Row-major n_F x n_F. Throws DimensionError when n_F > cap.
std::vector<double> dense_similarity_matrix(const FbsmModel& model,
                                            std::size_t cap = kDefaultOracleCap);

/// r_{u,i} - r_{u,j} by direct summation over R_u+ with the estimation
/// constraint, using the dense W. No cached aggregates are involved.
double dense_oracle_relative_rank(const FbsmModel& model, const ItemFeatureMatrix& features,
                                  const PreferenceData& prefs, UserId user, ItemId positive,
                                  ItemId negative, std::size_t cap = kDefaultOracleCap);

// =============================================================================
// Scorer over cold items. Projections V f_i and V f_u are precomputed, so each
// score costs one sparse merge plus an h-length dot product.
// =============================================================================

class FbsmScorer final : public Scorer {
public:
    /// Keeps references to `model`, `features` and `profiles`.
    FbsmScorer(const FbsmModel& model, const ItemFeatureMatrix& features,
               const UserProfiles& profiles);

    void score(UserId user, std::span<const ItemId> items, std::span<double> out) const override;
    std::string name() const override { return "fbsm"; }

private:
    const FbsmModel& model_;
    const ItemFeatureMatrix& features_;
    const UserProfiles& profiles_;
    std::vector<double> item_proj_;  // n_items x h
    std::vector<double> user_proj_;  // n_users x h
};

}  // namespace coldrec
