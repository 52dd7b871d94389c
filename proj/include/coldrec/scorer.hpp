#pragma once

#include <span>
#include <string>

#include "coldrec/sparse.hpp"

namespace coldrec {

/// f_u cache for every user of a preference matrix. Features are static, so
/// the aggregates are computed once and never invalidated.
class UserProfiles {
public:
    UserProfiles() = default;
    UserProfiles(const ItemFeatureMatrix& features, const PreferenceData& prefs);

    std::size_t n_users() const noexcept { return aggregates_.size(); }
    const PreferenceData& preferences() const noexcept { return prefs_; }

    /// f_u; the empty vector for users outside the matrix.
    const SparseVector& aggregate(UserId user) const noexcept;
    bool contains(UserId user, ItemId item) const { return prefs_.is_positive(user, item); }

private:
    PreferenceData prefs_;
    std::vector<SparseVector> aggregates_;
    SparseVector empty_;
};

/// Read-only item scorer used by top-n generation and evaluation.
/// Implementations must be safe to call concurrently from several threads.
class Scorer {
public:
    virtual ~Scorer() = default;

    /// Writes the score of user `user` for each of `items` into `out`.
    virtual void score(UserId user, std::span<const ItemId> items, std::span<double> out) const = 0;

    virtual std::string name() const = 0;
};

}  // namespace coldrec
