#include "coldrec/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "coldrec/evaluator.hpp"

namespace coldrec {

namespace {

std::string describe(const Triplet& t) {
    return "(u=" + std::to_string(t.user) + ", i=" + std::to_string(t.positive) +
           ", j=" + std::to_string(t.negative) + ")";
}

std::string format_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Sorted union of the supports of three vectors.
std::vector<FeatureId> support_union(const SparseVector& a, const SparseVector& b,
                                     const SparseVector& c) {
    std::vector<FeatureId> out;
    out.reserve(a.nnz() + b.nnz() + c.nnz());
    out.insert(out.end(), a.indices().begin(), a.indices().end());
    out.insert(out.end(), b.indices().begin(), b.indices().end());
    out.insert(out.end(), c.indices().begin(), c.indices().end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double decay_power(double factor, std::uint64_t steps) {
    if (steps == 0 || factor == 1.0) return 1.0;
    return std::pow(factor, static_cast<double>(steps));
}

}  // namespace

void TrainConfig::validate() const {
    auto fail = [](const std::string& what) { throw ConfigError("train config: " + what); };
    if (!(alpha_d > 0.0) || !std::isfinite(alpha_d)) fail("alpha_d must be > 0");
    if (!(alpha_v > 0.0) || !std::isfinite(alpha_v)) fail("alpha_v must be > 0");
    if (!(lambda_v >= 0.0)) fail("lambda must be >= 0");
    if (!(beta_d >= 0.0)) fail("beta must be >= 0");
    if (!(mu_w >= 0.0) || !(membership_regularization() >= 0.0)) fail("mu must be >= 0");
    if (patience == 0) fail("patience must be >= 1");
    if (eval_n == 0) fail("eval_n must be >= 1");
    if (n_functions == 0) fail("the linear model needs at least one similarity function");
    if (convergence_window == 0) fail("convergence window must be >= 1");
}

// ---------------------------------------------------------------------------
// Loss

double bpr_term(double r) noexcept {
    // -ln sigmoid(r) = ln(1 + e^{-r})
    return r > 0.0 ? std::log1p(std::exp(-r)) : -r + std::log1p(std::exp(r));
}

double bpr_weight(double r) noexcept {
    if (r >= 0.0) {
        const double e = std::exp(-r);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(r));
}

double bpr_loss(const FbsmModel& model, const ItemFeatureMatrix& features,
                const UserProfiles& profiles, std::span<const Triplet> sample) {
    TripletWorkspace ws;
    double loss = 0.0;
    for (const auto& t : sample) {
        ws.prepare(model, profiles.aggregate(t.user), features.row(t.positive),
                   features.row(t.negative));
        loss += bpr_term(relative_rank(model, ws));
    }
    return loss;
}

double bpr_loss(const LinearSimilarityModel& model, const ItemFeatureMatrix& features,
                const UserProfiles& profiles, std::span<const Triplet> sample) {
    TripletWorkspace ws;
    double loss = 0.0;
    for (const auto& t : sample) {
        ws.prepare(profiles.aggregate(t.user), features.row(t.positive), features.row(t.negative));
        loss += bpr_term(linear_relative_rank(model, ws, t.user));
    }
    return loss;
}

// ---------------------------------------------------------------------------
// TripletSampler

TripletSampler::TripletSampler(const PreferenceData& prefs, std::span<const ItemId> train_items)
    : items_(train_items.begin(), train_items.end()) {
    std::sort(items_.begin(), items_.end());
    items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
    auto in_train = [&](ItemId i) { return std::binary_search(items_.begin(), items_.end(), i); };

    positives_.resize(prefs.n_users());
    negatives_.resize(prefs.n_users());
    for (UserId u = 0; u < prefs.n_users(); ++u) {
        for (ItemId i : prefs.positives(u))
            if (in_train(i)) positives_[u].push_back(i);
        for (ItemId j : prefs.explicit_negatives(u))
            if (in_train(j)) negatives_[u].push_back(j);
        for (ItemId i : positives_[u]) {
            pair_user_.push_back(u);
            pair_item_.push_back(i);
        }
    }
}

std::optional<ItemId> TripletSampler::sample_negative(UserId user, Rng& rng) const {
    const auto& neg = negatives_[user];
    if (!neg.empty()) return neg[rng.uniform_index(neg.size())];

    const auto& pos = positives_[user];
    if (pos.size() >= items_.size()) return std::nullopt;
    constexpr int kRejectionTries = 32;
    for (int attempt = 0; attempt < kRejectionTries; ++attempt) {
        const ItemId j = items_[rng.uniform_index(items_.size())];
        if (!std::binary_search(pos.begin(), pos.end(), j)) return j;
    }
    // Dense profiles: enumerate the complement and draw from it.
    std::vector<ItemId> unknown;
    unknown.reserve(items_.size() - pos.size());
    std::set_difference(items_.begin(), items_.end(), pos.begin(), pos.end(),
                        std::back_inserter(unknown));
    if (unknown.empty()) return std::nullopt;
    return unknown[rng.uniform_index(unknown.size())];
}

std::optional<Triplet> TripletSampler::sample(UserId user, Rng& rng) const {
    if (user >= positives_.size() || positives_[user].empty()) return std::nullopt;
    const auto& pos = positives_[user];
    const ItemId i = pos[rng.uniform_index(pos.size())];
    const auto j = sample_negative(user, rng);
    if (!j) return std::nullopt;
    return Triplet{user, i, *j};
}

std::optional<Triplet> TripletSampler::sample_weighted(Rng& rng) const {
    if (pair_user_.empty()) return std::nullopt;
    const std::size_t k = rng.uniform_index(pair_user_.size());
    const auto j = sample_negative(pair_user_[k], rng);
    if (!j) return std::nullopt;
    return Triplet{pair_user_[k], pair_item_[k], *j};
}

// ---------------------------------------------------------------------------
// FbsmSgd

FbsmSgd::FbsmSgd(FbsmModel& model, const TrainConfig& config)
    : model_(model),
      config_(config),
      synced_(model.n_features(), 0),
      d_factor_(1.0 - 2.0 * config.alpha_d * config.beta_d),
      v_factor_(1.0 - 2.0 * config.alpha_v * config.lambda_v) {}

void FbsmSgd::catch_up(FeatureId p) {
    const std::uint64_t lag = step_ - synced_[p];
    if (lag == 0) return;
    const double dm = decay_power(d_factor_, lag);
    const double vm = decay_power(v_factor_, lag);
    if (dm != 1.0) model_.mutable_diagonal()[p] *= dm;
    if (vm != 1.0)
        for (double& x : model_.mutable_factors().column(p)) x *= vm;
    synced_[p] = step_;
}

void FbsmSgd::flush() {
    for (FeatureId p = 0; p < synced_.size(); ++p) catch_up(p);
}

void FbsmSgd::check_finite(const Triplet& t, std::span<const FeatureId> columns) const {
    auto bad = [&](FeatureId p) {
        if (!std::isfinite(model_.diagonal()[p])) return true;
        for (double x : model_.factors().column(p))
            if (!std::isfinite(x)) return true;
        return false;
    };
    for (FeatureId p : columns) {
        if (bad(p)) {
            throw DivergenceError("non-finite parameter for feature " + std::to_string(p) +
                                  " after triplet " + describe(t) +
                                  " with alpha_d=" + format_real(config_.alpha_d) +
                                  ", alpha_v=" + format_real(config_.alpha_v));
        }
    }
}

StepResult FbsmSgd::step(const Triplet& t, const SparseVector& user_vector,
                         const SparseVector& positive, const SparseVector& negative) {
    const auto touched = support_union(user_vector, positive, negative);
    if (config_.lazy_regularization)
        for (FeatureId p : touched) catch_up(p);

    ws_.prepare(model_, user_vector, positive, negative);
    StepResult result;
    result.relative_rank = relative_rank(model_, ws_);
    result.loss = bpr_term(result.relative_rank);
    if (frozen) return result;

    const double tau = bpr_weight(result.relative_rank);
    const SparseVector gd = grad_d(ws_);
    const FactorGradient gv = grad_v(ws_);
    const std::size_t h = model_.latent_dim();
    const double a1 = config_.alpha_d, a2 = config_.alpha_v;
    const double beta = config_.beta_d, lambda = config_.lambda_v;

    auto d = model_.mutable_diagonal();
    auto& v = model_.mutable_factors();

    if (config_.lazy_regularization) {
        // Both gradient supports are subsets of `touched`; walk them in step.
        std::size_t a = 0, b = 0;
        const auto gd_idx = gd.indices();
        const auto gd_val = gd.values();
        for (FeatureId p : touched) {
            double g = 0.0;
            if (a < gd_idx.size() && gd_idx[a] == p) g = gd_val[a++];
            d[p] += a1 * (tau * g - 2.0 * beta * d[p]);
            auto col = v.column(p);
            if (b < gv.columns.size() && gv.columns[b] == p) {
                const auto gcol = gv.column(b++);
                for (std::size_t k = 0; k < h; ++k)
                    col[k] += a2 * (tau * gcol[k] - 2.0 * lambda * col[k]);
            } else {
                for (std::size_t k = 0; k < h; ++k) col[k] += a2 * (-2.0 * lambda * col[k]);
            }
            synced_[p] = step_ + 1;
        }
        ++step_;
        check_finite(t, touched);
    } else {
        const std::size_t n = model_.n_features();
        std::vector<double> gd_dense = gd.to_dense(n);
        std::vector<double> gv_dense(n * h, 0.0);
        for (std::size_t c = 0; c < gv.columns.size(); ++c)
            std::copy(gv.column(c).begin(), gv.column(c).end(),
                      gv_dense.begin() + static_cast<std::ptrdiff_t>(gv.columns[c] * h));
        for (std::size_t p = 0; p < n; ++p) {
            d[p] += a1 * (tau * gd_dense[p] - 2.0 * beta * d[p]);
            auto col = v.column(p);
            for (std::size_t k = 0; k < h; ++k)
                col[k] += a2 * (tau * gv_dense[p * h + k] - 2.0 * lambda * col[k]);
        }
        ++step_;
        std::fill(synced_.begin(), synced_.end(), step_);
        if (!model_.all_finite()) {
            std::vector<FeatureId> all(n);
            for (std::size_t p = 0; p < n; ++p) all[p] = static_cast<FeatureId>(p);
            check_finite(t, all);
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// LinearSgd

LinearSgd::LinearSgd(LinearSimilarityModel& model, const TrainConfig& config)
    : model_(model),
      config_(config),
      feature_synced_(model.n_features(), 0),
      user_synced_(model.n_users(), 0),
      w_factor_(1.0 - 2.0 * config.alpha_d * config.mu_w),
      m_factor_(model.n_functions() > 1
                    ? 1.0 - 2.0 * config.alpha_v * config.membership_regularization()
                    : 1.0) {}

void LinearSgd::catch_up_feature(FeatureId p) {
    const std::uint64_t lag = step_ - feature_synced_[p];
    if (lag == 0) return;
    const double m = decay_power(w_factor_, lag);
    if (m != 1.0)
        for (std::size_t d = 0; d < model_.n_functions(); ++d) model_.mutable_weights(d)[p] *= m;
    feature_synced_[p] = step_;
}

void LinearSgd::catch_up_user(UserId u) {
    if (u >= user_synced_.size()) return;
    const std::uint64_t lag = step_ - user_synced_[u];
    if (lag == 0) return;
    const double m = decay_power(m_factor_, lag);
    if (m != 1.0)
        for (double& x : model_.mutable_memberships(u)) x *= m;
    user_synced_[u] = step_;
}

void LinearSgd::flush() {
    for (FeatureId p = 0; p < feature_synced_.size(); ++p) catch_up_feature(p);
    for (UserId u = 0; u < user_synced_.size(); ++u) catch_up_user(u);
    model_.refresh_cold_user_row();
}

StepResult LinearSgd::step(const Triplet& t, const SparseVector& user_vector,
                           const SparseVector& positive, const SparseVector& negative) {
    const auto touched = support_union(user_vector, positive, negative);
    for (FeatureId p : touched) catch_up_feature(p);
    catch_up_user(t.user);

    ws_.prepare(user_vector, positive, negative);
    StepResult result;
    result.relative_rank = linear_relative_rank(model_, ws_, t.user);
    result.loss = bpr_term(result.relative_rank);
    if (frozen) return result;

    const double tau = bpr_weight(result.relative_rank);
    const LinearGradient g = linear_gradients(model_, ws_, t.user);
    const double a1 = config_.alpha_d, a2 = config_.alpha_v;
    const double mu_w = config_.mu_w, mu_m = config_.membership_regularization();

    const auto idx = g.direction.indices();
    const auto val = g.direction.values();
    for (std::size_t d = 0; d < model_.n_functions(); ++d) {
        auto w = model_.mutable_weights(d);
        std::size_t a = 0;
        for (FeatureId p : touched) {
            double gp = 0.0;
            if (a < idx.size() && idx[a] == p) gp = g.weight_scale[d] * val[a++];
            w[p] += a1 * (tau * gp - 2.0 * mu_w * w[p]);
        }
    }
    for (FeatureId p : touched) feature_synced_[p] = step_ + 1;

    if (model_.n_functions() > 1 && t.user < model_.n_users()) {
        auto m = model_.mutable_memberships(t.user);
        for (std::size_t d = 0; d < m.size(); ++d)
            m[d] += a2 * (tau * g.membership_grad[d] - 2.0 * mu_m * m[d]);
        user_synced_[t.user] = step_ + 1;
    }
    ++step_;

    for (FeatureId p : touched) {
        for (std::size_t d = 0; d < model_.n_functions(); ++d) {
            if (!std::isfinite(model_.weights(d)[p])) {
                throw DivergenceError("non-finite UFSM weight for feature " + std::to_string(p) +
                                      " after triplet " + describe(t) +
                                      " with alpha_d=" + format_real(a1));
            }
        }
    }
    if (t.user < model_.n_users()) {
        for (double x : model_.memberships(t.user)) {
            if (!std::isfinite(x)) {
                throw DivergenceError("non-finite UFSM membership after triplet " + describe(t) +
                                      " with alpha_v=" + format_real(a2));
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Epochs

namespace {

template <typename Sgd, typename Model>
EpochStats run_epoch(Model& model, const ItemFeatureMatrix& features, const UserProfiles& profiles,
                     const TripletSampler& sampler, const TrainConfig& config, Rng& rng,
                     bool frozen) {
    Sgd sgd(model, config);
    sgd.frozen = frozen;
    EpochStats stats;
    for (std::size_t k = 0; k < sampler.nnz(); ++k) {
        const auto t = sampler.sample_weighted(rng);
        if (!t) {
            ++stats.skipped;
            continue;
        }
        const auto r = sgd.step(*t, profiles.aggregate(t->user), features.row(t->positive),
                                features.row(t->negative));
        stats.loss += r.loss;
        ++stats.triplets;
    }
    sgd.flush();
    return stats;
}

}  // namespace

EpochStats sgd_epoch(FbsmModel& model, const ItemFeatureMatrix& features,
                     const UserProfiles& profiles, const TripletSampler& sampler,
                     const TrainConfig& config, Rng& rng, bool frozen) {
    if (model.n_features() != features.n_features()) {
        throw DimensionError("sgd_epoch: model n_F " + std::to_string(model.n_features()) +
                             " != feature n_F " + std::to_string(features.n_features()));
    }
    return run_epoch<FbsmSgd>(model, features, profiles, sampler, config, rng, frozen);
}

EpochStats sgd_epoch(LinearSimilarityModel& model, const ItemFeatureMatrix& features,
                     const UserProfiles& profiles, const TripletSampler& sampler,
                     const TrainConfig& config, Rng& rng, bool frozen) {
    if (model.n_features() != features.n_features()) {
        throw DimensionError("sgd_epoch: model n_F " + std::to_string(model.n_features()) +
                             " != feature n_F " + std::to_string(features.n_features()));
    }
    return run_epoch<LinearSgd>(model, features, profiles, sampler, config, rng, frozen);
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

struct FbsmTraits {
    using Model = FbsmModel;
    static Model init(const TrainingData& data, const TrainConfig& cfg) {
        return FbsmModel::initialized(data.features.n_features(), cfg.latent_dim, mix64(cfg.seed));
    }
    static EvalReport validate(const Model& m, const TrainingData& data,
                               const UserProfiles& profiles, const TrainConfig& cfg) {
        FbsmScorer scorer(m, data.features, profiles);
        return evaluate(scorer, data.validation, data.validation_items, cfg.eval_n,
                        {.workers = cfg.workers});
    }
};

struct LinearTraits {
    using Model = LinearSimilarityModel;
    static Model init(const TrainingData& data, const TrainConfig& cfg) {
        return LinearSimilarityModel::initialized(cfg.n_functions, data.features.n_features(),
                                                  data.train.n_users(), mix64(cfg.seed));
    }
    static EvalReport validate(const Model& m, const TrainingData& data,
                               const UserProfiles& profiles, const TrainConfig& cfg) {
        LinearScorer scorer(m, data.features, profiles);
        return evaluate(scorer, data.validation, data.validation_items, cfg.eval_n,
                        {.workers = cfg.workers});
    }
};

template <typename Traits>
TrainResult<typename Traits::Model> run_training(const TrainingData& data,
                                                 const TrainConfig& config,
                                                 const TrainHooks& hooks) {
    using Clock = std::chrono::steady_clock;
    config.validate();
    if (data.validation_items.empty() || data.validation.active_users() == 0) {
        throw ConfigError("train: validation split has no evaluable users");
    }
    if (data.train.n_items() != data.features.n_items()) {
        throw DimensionError("train: preferences cover " + std::to_string(data.train.n_items()) +
                             " items but the feature matrix has " +
                             std::to_string(data.features.n_items()));
    }
    const UserProfiles profiles(data.features, data.train);
    const TripletSampler sampler(data.train, data.train_items);
    if (sampler.nnz() == 0) throw EmptyDataError("train: no positive preferences among training items");

    TrainResult<typename Traits::Model> result;
    auto model = Traits::init(data, config);
    Rng rng(config.seed);

    auto record = [&](std::size_t epoch, const EpochStats& stats, Clock::time_point start) {
        const auto report = Traits::validate(model, data, profiles, config);
        EpochLog row;
        row.epoch = epoch;
        row.loss = stats.loss;
        row.triplets = stats.triplets;
        row.val_rec = report.mean_rec;
        row.val_dcg = report.mean_dcg;
        row.seconds = std::chrono::duration<double>(Clock::now() - start).count();
        result.log.push_back(row);
        if (hooks.on_epoch) hooks.on_epoch(row);
        return row;
    };

    {
        // Epoch 0: the initial model, with its loss measured on an independent draw.
        const auto start = Clock::now();
        Rng probe(mix64(config.seed ^ 0x5eedULL));
        const auto stats = sgd_epoch(model, data.features, profiles, sampler, config, probe, true);
        record(0, stats, start);
    }

    bool have_best = false;
    double best_rec = 0.0;
    std::size_t since_best = 0;
    result.stop_reason = "max_epochs";
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto start = Clock::now();
        const auto stats = sgd_epoch(model, data.features, profiles, sampler, config, rng,
                                     hooks.freeze_parameters);
        const auto row = record(epoch, stats, start);

        if (!have_best || row.val_rec > best_rec) {
            have_best = true;
            best_rec = row.val_rec;
            result.model = model;
            result.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            result.stop_reason = "patience";
            break;
        }

        const std::size_t w = config.convergence_window;
        if (epoch > w) {
            const double now = result.log[epoch].loss;
            const double then = result.log[epoch - w].loss;
            if (std::abs(now - then) < config.convergence_tol * std::abs(then)) {
                result.stop_reason = "converged";
                break;
            }
        }
    }
    if (!have_best) result.model = model;
    return result;
}

}  // namespace

TrainResult<FbsmModel> train_fbsm(const TrainingData& data, const TrainConfig& config,
                                  const TrainHooks& hooks) {
    return run_training<FbsmTraits>(data, config, hooks);
}

TrainResult<LinearSimilarityModel> train_ufsm(const TrainingData& data, const TrainConfig& config,
                                              const TrainHooks& hooks) {
    return run_training<LinearTraits>(data, config, hooks);
}

void write_training_log(std::ostream& out, std::span<const EpochLog> log, bool include_timing,
                        std::span<const std::string> header) {
    for (const auto& line : header) out << "# " << line << '\n';
    out << "epoch\tloss\tval_rec\tval_dcg\tseconds\n";
    for (const auto& row : log) {
        out << row.epoch << '\t' << format_real(row.loss) << '\t' << format_real(row.val_rec) << '\t'
            << format_real(row.val_dcg) << '\t' << (include_timing ? format_real(row.seconds) : "0")
            << '\n';
    }
}

}  // namespace coldrec
