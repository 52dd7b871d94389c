#include "coldrec/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coldrec/random.hpp"

namespace coldrec {

namespace {

double cosine(const SparseVector& a, const SparseVector& b) {
    const double na = a.squared_norm();
    const double nb = b.squared_norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return sparse_dot(a, b) / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

double cosim_score(const ItemFeatureMatrix& features, const PreferenceData& prefs, UserId user,
                   ItemId item) {
    const SparseVector& f_i = features.row(item);
    if (user >= prefs.n_users()) return 0.0;
    double s = 0.0;
    for (ItemId j : prefs.positives(user)) {
        if (j == item) continue;
        s += cosine(f_i, features.row(j));
    }
    return s;
}

CosineScorer::CosineScorer(const ItemFeatureMatrix& features, const PreferenceData& train)
    : normalized_(features.l2_normalized()), profiles_(normalized_, train) {}

void CosineScorer::score(UserId user, std::span<const ItemId> items, std::span<double> out) const {
    if (out.size() != items.size()) throw DimensionError("scorer: output size mismatch");
    const SparseVector& g_u = profiles_.aggregate(user);
    for (std::size_t k = 0; k < items.size(); ++k) {
        const SparseVector& f_i = normalized_.row(items[k]);
        out[k] = profiles_.contains(user, items[k]) ? sparse_dot(f_i, sparse_sub(g_u, f_i))
                                                    : sparse_dot(f_i, g_u);
    }
}

// ---------------------------------------------------------------------------
// LinearSimilarityModel

LinearSimilarityModel::LinearSimilarityModel(std::size_t n_functions, std::size_t n_features,
                                             std::vector<double> weights,
                                             std::vector<double> memberships)
    : n_functions_(n_functions),
      n_features_(n_features),
      weights_(std::move(weights)),
      memberships_(std::move(memberships)) {
    if (n_functions_ == 0) throw DimensionError("ufsm: need at least one similarity function");
    if (weights_.size() != n_functions_ * n_features_) {
        throw DimensionError("ufsm: weight matrix has " + std::to_string(weights_.size()) +
                             " entries, expected " + std::to_string(n_functions_ * n_features_));
    }
    if (memberships_.size() % n_functions_ != 0) {
        throw DimensionError("ufsm: membership matrix is not a multiple of l");
    }
    if (!all_finite()) throw DimensionError("ufsm: parameters must be finite");
    refresh_cold_user_row();
}

LinearSimilarityModel LinearSimilarityModel::initialized(std::size_t n_functions,
                                                         std::size_t n_features,
                                                         std::size_t n_users, std::uint64_t seed) {
    std::vector<double> m(n_users * n_functions, 1.0);
    if (n_functions > 1) {
        Rng rng(seed);
        const double base = 1.0 / static_cast<double>(n_functions);
        for (double& x : m) x = base + rng.uniform(-0.01, 0.01);
    }
    return LinearSimilarityModel(n_functions, n_features,
                                 std::vector<double>(n_functions * n_features, 1.0), std::move(m));
}

void LinearSimilarityModel::refresh_cold_user_row() {
    mean_row_.assign(n_functions_, n_functions_ == 1 ? 1.0 : 0.0);
    const std::size_t users = n_users();
    if (users == 0) return;
    std::fill(mean_row_.begin(), mean_row_.end(), 0.0);
    for (std::size_t u = 0; u < users; ++u)
        for (std::size_t d = 0; d < n_functions_; ++d)
            mean_row_[d] += memberships_[u * n_functions_ + d];
    for (double& x : mean_row_) x /= static_cast<double>(users);
}

std::span<const double> LinearSimilarityModel::memberships(UserId user) const noexcept {
    if (user < n_users()) return {memberships_.data() + user * n_functions_, n_functions_};
    return mean_row_;
}

std::span<double> LinearSimilarityModel::mutable_memberships(UserId user) {
    if (user >= n_users()) {
        throw DimensionError("ufsm: user " + std::to_string(user) + " has no membership row");
    }
    return {memberships_.data() + user * n_functions_, n_functions_};
}

bool LinearSimilarityModel::all_finite() const noexcept {
    auto finite = [](double x) { return std::isfinite(x); };
    return std::all_of(weights_.begin(), weights_.end(), finite) &&
           std::all_of(memberships_.begin(), memberships_.end(), finite);
}

// ---------------------------------------------------------------------------
// Scoring and gradients

namespace {

double mix(const LinearSimilarityModel& model, std::span<const double> m, const SparseVector& a,
           const SparseVector& b) {
    double s = 0.0;
    for (std::size_t d = 0; d < model.n_functions(); ++d)
        s += m[d] * weighted_hadamard_dot(a, b, model.weights(d));
    return s;
}

}  // namespace

double linear_score(const LinearSimilarityModel& model, const ItemFeatureMatrix& features,
                    const UserProfiles& profiles, UserId user, ItemId item) {
    if (features.n_features() != model.n_features()) {
        throw DimensionError("ufsm: model n_F " + std::to_string(model.n_features()) +
                             " != feature n_F " + std::to_string(features.n_features()));
    }
    const SparseVector& f_i = features.row(item);
    if (user >= profiles.n_users()) return 0.0;
    const SparseVector& f_u = profiles.aggregate(user);
    const auto m = model.memberships(user);
    if (profiles.contains(user, item)) return mix(model, m, f_i, sparse_sub(f_u, f_i));
    return mix(model, m, f_i, f_u);
}

double linear_relative_rank(const LinearSimilarityModel& model, const TripletWorkspace& ws,
                            UserId user) {
    const auto m = model.memberships(user);
    double s = 0.0;
    for (std::size_t d = 0; d < model.n_functions(); ++d) {
        const auto w = model.weights(d);
        s += m[d] * (weighted_hadamard_dot(ws.delta(), ws.user_vector(), w) -
                     weighted_hadamard_dot(ws.positive(), ws.positive(), w));
    }
    return s;
}

LinearGradient linear_gradients(const LinearSimilarityModel& model, const TripletWorkspace& ws,
                                UserId user) {
    LinearGradient g;
    g.direction = grad_d(ws);
    const auto m = model.memberships(user);
    g.weight_scale.assign(m.begin(), m.end());
    g.membership_grad.resize(model.n_functions());
    const auto idx = g.direction.indices();
    const auto val = g.direction.values();
    for (std::size_t d = 0; d < model.n_functions(); ++d) {
        const auto w = model.weights(d);
        double s = 0.0;
        for (std::size_t k = 0; k < idx.size(); ++k) s += w[idx[k]] * val[k];
        g.membership_grad[d] = s;
    }
    op_counters().multiply_adds += idx.size() * model.n_functions();
    return g;
}

LinearScorer::LinearScorer(const LinearSimilarityModel& model, const ItemFeatureMatrix& features,
                           const UserProfiles& profiles)
    : model_(model), features_(features), profiles_(profiles) {
    if (features.n_features() != model.n_features()) {
        throw DimensionError("scorer: model n_F " + std::to_string(model.n_features()) +
                             " != feature n_F " + std::to_string(features.n_features()));
    }
}

void LinearScorer::score(UserId user, std::span<const ItemId> items, std::span<double> out) const {
    if (out.size() != items.size()) throw DimensionError("scorer: output size mismatch");
    for (std::size_t k = 0; k < items.size(); ++k)
        out[k] = linear_score(model_, features_, profiles_, user, items[k]);
}

}  // namespace coldrec
