#include "coldrec/fbsm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coldrec/random.hpp"

namespace coldrec {

// ---------------------------------------------------------------------------
// UserProfiles

UserProfiles::UserProfiles(const ItemFeatureMatrix& features, const PreferenceData& prefs)
    : prefs_(prefs), aggregates_(accumulate_user_vectors(features, prefs)) {}

const SparseVector& UserProfiles::aggregate(UserId user) const noexcept {
    return user < aggregates_.size() ? aggregates_[user] : empty_;
}

// ---------------------------------------------------------------------------
// FbsmModel

FbsmModel::FbsmModel(std::vector<double> diagonal, DenseFactorMatrix factors)
    : diagonal_(std::move(diagonal)), factors_(std::move(factors)) {
    if (factors_.n_features() != diagonal_.size() && factors_.latent_dim() > 0) {
        throw DimensionError("fbsm: diagonal has " + std::to_string(diagonal_.size()) +
                             " features but V has " + std::to_string(factors_.n_features()));
    }
    if (factors_.n_features() != diagonal_.size()) {
        factors_ = DenseFactorMatrix(0, diagonal_.size());
    }
    if (!all_finite()) throw DimensionError("fbsm: parameters must be finite");
}

FbsmModel FbsmModel::initialized(std::size_t n_features, std::size_t latent_dim,
                                 std::uint64_t seed) {
    DenseFactorMatrix v(latent_dim, n_features);
    if (latent_dim > 0) {
        Rng rng(seed);
        const double bound = 0.01 / std::sqrt(static_cast<double>(latent_dim));
        for (double& x : v.raw()) x = rng.uniform(-bound, bound);
    }
    return FbsmModel(std::vector<double>(n_features, 1.0), std::move(v));
}

bool FbsmModel::all_finite() const noexcept {
    return factors_.all_finite() &&
           std::all_of(diagonal_.begin(), diagonal_.end(), [](double x) { return std::isfinite(x); });
}

// ---------------------------------------------------------------------------
// Scoring

double similarity(const FbsmModel& model, const SparseVector& f_i, const SparseVector& f_j) {
    const auto vi = factor_times_sparse(model.factors(), f_i);
    const auto vj = factor_times_sparse(model.factors(), f_j);
    return weighted_hadamard_dot(f_i, f_j, model.diagonal()) + dense_dot(vi, vj);
}

double score(const FbsmModel& model, const ItemFeatureMatrix& features,
             const UserProfiles& profiles, UserId user, ItemId item, bool estimation_constraint) {
    if (features.n_features() != model.n_features()) {
        throw DimensionError("score: model n_F " + std::to_string(model.n_features()) +
                             " != feature n_F " + std::to_string(features.n_features()));
    }
    const SparseVector& f_i = features.row(item);
    if (user >= profiles.n_users()) return 0.0;
    const SparseVector& f_u = profiles.aggregate(user);
    if (estimation_constraint && profiles.contains(user, item)) {
        return similarity(model, f_i, sparse_sub(f_u, f_i));
    }
    return similarity(model, f_i, f_u);
}

// ---------------------------------------------------------------------------
// TripletWorkspace

void TripletWorkspace::prepare(const SparseVector& user_vector, const SparseVector& positive,
                               const SparseVector& negative) {
    user_vector_ = &user_vector;
    positive_ = &positive;
    delta_ = sparse_sub(positive, negative);
    model_ = nullptr;
}

void TripletWorkspace::project(const FbsmModel& model) {
    const auto& v = model.factors();
    const std::size_t h = v.latent_dim();
    vf_user_.resize(h);
    vf_positive_.resize(h);
    vf_delta_.resize(h);
    factor_times_sparse(v, *user_vector_, vf_user_);
    factor_times_sparse(v, *positive_, vf_positive_);
    factor_times_sparse(v, delta_, vf_delta_);
    model_ = &model;
    revision_ = model.revision();
}

bool TripletWorkspace::coherent_with(const FbsmModel& model) const {
    if (user_vector_ == nullptr) return false;
    const auto& v = model.factors();
    return factor_times_sparse(v, *user_vector_) == vf_user_ &&
           factor_times_sparse(v, *positive_) == vf_positive_ &&
           factor_times_sparse(v, delta_) == vf_delta_;
}

double relative_rank(const FbsmModel& model, const TripletWorkspace& ws) {
    if (!ws.is_current(model)) {
        throw InternalError("relative_rank: workspace is stale for this model");
    }
#ifndef NDEBUG
    if (!ws.coherent_with(model)) {
        throw InternalError("relative_rank: cached projections do not match V");
    }
#endif
    const auto d = model.diagonal();
    const double diag_part = weighted_hadamard_dot(ws.delta(), ws.user_vector(), d) -
                             weighted_hadamard_dot(ws.positive(), ws.positive(), d);
    const double factor_part = dense_dot(ws.vf_delta(), ws.vf_user()) -
                               dense_dot(ws.vf_positive(), ws.vf_positive());
    return diag_part + factor_part;
}

SparseVector grad_d(const TripletWorkspace& ws) {
    return sparse_sub(sparse_hadamard(ws.delta(), ws.user_vector()),
                      sparse_hadamard(ws.positive(), ws.positive()));
}

FactorGradient grad_v(const TripletWorkspace& ws) {
    const std::size_t h = ws.vf_user().size();
    FactorGradient g;
    g.latent_dim = h;
    if (h == 0) return g;

    const auto di = ws.delta().indices();
    const auto dv = ws.delta().values();
    const auto ui = ws.user_vector().indices();
    const auto uv = ws.user_vector().values();
    const auto pi = ws.positive().indices();
    const auto pv = ws.positive().values();
    const auto vf_u = ws.vf_user(), vf_i = ws.vf_positive(), vf_d = ws.vf_delta();

    g.columns.reserve(di.size() + ui.size() + pi.size());
    g.values.reserve((di.size() + ui.size() + pi.size()) * h);

    // Three-way merge over supp(delta) U supp(f_u) U supp(f_i).
    std::size_t a = 0, b = 0, c = 0;
    constexpr FeatureId kEnd = ~FeatureId{0};
    while (a < di.size() || b < ui.size() || c < pi.size()) {
        const FeatureId ka = a < di.size() ? di[a] : kEnd;
        const FeatureId kb = b < ui.size() ? ui[b] : kEnd;
        const FeatureId kc = c < pi.size() ? pi[c] : kEnd;
        const FeatureId p = std::min({ka, kb, kc});
        const double delta_p = ka == p ? dv[a++] : 0.0;
        const double user_p = kb == p ? uv[b++] : 0.0;
        const double pos_p = kc == p ? pv[c++] : 0.0;
        g.columns.push_back(p);
        for (std::size_t k = 0; k < h; ++k) {
            g.values.push_back(delta_p * vf_u[k] + user_p * vf_d[k] - 2.0 * pos_p * vf_i[k]);
        }
    }
    op_counters().multiply_adds += 3 * g.columns.size() * h;
    op_counters().merge_steps += di.size() + ui.size() + pi.size();
    return g;
}

// ---------------------------------------------------------------------------
// Dense reference path

std::vector<double> dense_similarity_matrix(const FbsmModel& model, std::size_t cap) {
    const std::size_t n = model.n_features();
    if (n > cap) {
        throw DimensionError("dense oracle refuses n_F " + std::to_string(n) + " > cap " +
                             std::to_string(cap));
    }
    const auto& v = model.factors();
    const std::size_t h = v.latent_dim();
    std::vector<double> w(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            double s = a == b ? model.diagonal()[a] : 0.0;
            for (std::size_t k = 0; k < h; ++k) s += v(k, a) * v(k, b);
            w[a * n + b] = s;
        }
    }
    return w;
}

double dense_oracle_relative_rank(const FbsmModel& model, const ItemFeatureMatrix& features,
                                  const PreferenceData& prefs, UserId user, ItemId positive,
                                  ItemId negative, std::size_t cap) {
    const std::size_t n = model.n_features();
    const auto w = dense_similarity_matrix(model, cap);
    auto bilinear = [&](const std::vector<double>& x, const std::vector<double>& y) {
        double s = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            if (x[a] == 0.0) continue;
            double row = 0.0;
            for (std::size_t b = 0; b < n; ++b) row += w[a * n + b] * y[b];
            s += x[a] * row;
        }
        return s;
    };
    auto estimate = [&](ItemId target) {
        const auto f_t = features.row(target).to_dense(n);
        double s = 0.0;
        for (ItemId q : prefs.positives(user)) {
            if (q == target) continue;
            s += bilinear(f_t, features.row(q).to_dense(n));
        }
        return s;
    };
    return estimate(positive) - estimate(negative);
}

// ---------------------------------------------------------------------------
// FbsmScorer

FbsmScorer::FbsmScorer(const FbsmModel& model, const ItemFeatureMatrix& features,
                       const UserProfiles& profiles)
    : model_(model), features_(features), profiles_(profiles) {
    if (features.n_features() != model.n_features()) {
        throw DimensionError("scorer: model n_F " + std::to_string(model.n_features()) +
                             " != feature n_F " + std::to_string(features.n_features()));
    }
    const std::size_t h = model.latent_dim();
    item_proj_.resize(features.n_items() * h);
    for (ItemId i = 0; i < features.n_items(); ++i) {
        factor_times_sparse(model.factors(), features.row(i),
                            std::span<double>(item_proj_.data() + i * h, h));
    }
    user_proj_.resize(profiles.n_users() * h);
    for (UserId u = 0; u < profiles.n_users(); ++u) {
        factor_times_sparse(model.factors(), profiles.aggregate(u),
                            std::span<double>(user_proj_.data() + u * h, h));
    }
}

void FbsmScorer::score(UserId user, std::span<const ItemId> items, std::span<double> out) const {
    if (out.size() != items.size()) throw DimensionError("scorer: output size mismatch");
    const std::size_t h = model_.latent_dim();
    if (user >= profiles_.n_users()) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    const SparseVector& f_u = profiles_.aggregate(user);
    const std::span<const double> vu(user_proj_.data() + user * h, h);
    for (std::size_t k = 0; k < items.size(); ++k) {
        const ItemId i = items[k];
        if (profiles_.contains(user, i)) {
            out[k] = coldrec::score(model_, features_, profiles_, user, i, true);
            continue;
        }
        const std::span<const double> vi(item_proj_.data() + i * h, h);
        out[k] = weighted_hadamard_dot(features_.row(i), f_u, model_.diagonal()) + dense_dot(vi, vu);
    }
}

}  // namespace coldrec
