#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coldrec/baselines.hpp"
#include "coldrec/fbsm.hpp"
#include "coldrec/random.hpp"
#include "coldrec/sparse.hpp"

namespace coldrec {

struct TrainConfig {
    double alpha_d = 0.01;    // learning rate of d (and of W for the linear model)
    double alpha_v = 0.001;   // learning rate of V (and of M for the linear model)
    double lambda_v = 0.0;    // L2 weight on V
    double beta_d = 0.0;      // L2 weight on d
    std::size_t latent_dim = 5;
    std::size_t max_epochs = 100;
    std::size_t patience = 10;
    std::uint64_t seed = 1;
    std::size_t eval_n = 10;
    std::size_t workers = 1;  // validation scoring only

    // Stop when |L_t - L_{t-w}| < tol * |L_{t-w}| for the sampled epoch loss.
    double convergence_tol = 1e-5;
    std::size_t convergence_window = 3;

    // Regularize only the columns a triplet touches and catch the others up on
    // their next use. Off means the textbook dense update of every parameter.
    bool lazy_regularization = true;

    // Linear (UFSM) model.
    std::size_t n_functions = 1;
    double mu_w = 0.0;               // L2 weight on the global weight vectors
    std::optional<double> mu_m;      // L2 weight on memberships; defaults to mu_w

    double membership_regularization() const noexcept { return mu_m.value_or(mu_w); }

    /// Throws ConfigError on non-positive rates, negative regularizers,
    /// patience 0 or eval_n 0.
    void validate() const;
};

struct Triplet {
    UserId user = 0;
    ItemId positive = 0;
    ItemId negative = 0;

    friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// -ln sigmoid(x), stable for large |x|.
double bpr_term(double relative_rank) noexcept;

/// sigmoid(-x).
double bpr_weight(double relative_rank) noexcept;

double bpr_loss(const FbsmModel& model, const ItemFeatureMatrix& features,
                const UserProfiles& profiles, std::span<const Triplet> sample);
double bpr_loss(const LinearSimilarityModel& model, const ItemFeatureMatrix& features,
                const UserProfiles& profiles, std::span<const Triplet> sample);

// =============================================================================
// TripletSampler
//
// Positives are R_u+ restricted to the training items. Negatives come from the
// user's explicit negatives among training items when there are any, otherwise
// from training items outside R_u+. Draws are with replacement.
// =============================================================================

class TripletSampler {
public:
    TripletSampler(const PreferenceData& prefs, std::span<const ItemId> train_items);

    /// Uniform positive, then uniform negative. nullopt when the user has no
    /// positive or no valid negative.
    std::optional<Triplet> sample(UserId user, Rng& rng) const;

    /// Users drawn proportionally to their number of positives (a uniform
    /// draw over all (u, i) pairs), then a negative for that user.
    std::optional<Triplet> sample_weighted(Rng& rng) const;

    std::optional<ItemId> sample_negative(UserId user, Rng& rng) const;

    /// Number of (user, positive) pairs; one epoch draws this many triplets.
    std::size_t nnz() const noexcept { return pair_user_.size(); }
    std::span<const ItemId> positives(UserId user) const { return positives_.at(user); }

private:
    std::vector<std::vector<ItemId>> positives_;
    std::vector<std::vector<ItemId>> negatives_;
    std::vector<ItemId> items_;  // sorted training items
    std::vector<UserId> pair_user_;
    std::vector<ItemId> pair_item_;
};

// =============================================================================
// Per-triplet SGD steps
// =============================================================================

struct StepResult {
    double relative_rank = 0.0;
    double loss = 0.0;
};

/// One BPR step per call on an FbsmModel:
///   d   <- d   + alpha_d (tau * grad_d - 2 beta d)
///   v_p <- v_p + alpha_v (tau * grad_v_p - 2 lambda v_p),   tau = sigmoid(-r~)
/// With lazy regularization, the decay of untouched entries is deferred and
/// applied exactly (as a power of the per-step factor) on first touch or on
/// flush(). Read the model only after flush().
class FbsmSgd {
public:
    FbsmSgd(FbsmModel& model, const TrainConfig& config);

    StepResult step(const Triplet& triplet, const SparseVector& user_vector,
                    const SparseVector& positive, const SparseVector& negative);

    /// Brings every parameter up to date with the steps taken so far.
    void flush();

    bool frozen = false;  // test hook: compute losses but never update

private:
    void catch_up(FeatureId p);
    void check_finite(const Triplet& t, std::span<const FeatureId> columns) const;

    FbsmModel& model_;
    TrainConfig config_;
    TripletWorkspace ws_;
    std::uint64_t step_ = 0;
    std::vector<std::uint64_t> synced_;
    double d_factor_;
    double v_factor_;
};

/// Same contract for the linear model: W entries per feature with mu_w, user
/// membership rows with mu_m. With l = 1 memberships stay fixed at 1. Decay is
/// always deferred (lazy_regularization is ignored).
class LinearSgd {
public:
    LinearSgd(LinearSimilarityModel& model, const TrainConfig& config);

    StepResult step(const Triplet& triplet, const SparseVector& user_vector,
                    const SparseVector& positive, const SparseVector& negative);
    void flush();

    bool frozen = false;

private:
    void catch_up_feature(FeatureId p);
    void catch_up_user(UserId u);

    LinearSimilarityModel& model_;
    TrainConfig config_;
    TripletWorkspace ws_;
    std::uint64_t step_ = 0;
    std::vector<std::uint64_t> feature_synced_;
    std::vector<std::uint64_t> user_synced_;
    double w_factor_;
    double m_factor_;
};

// =============================================================================
// Epochs and the training loop
// =============================================================================

struct EpochStats {
    double loss = 0.0;           // sum of -ln sigmoid(r~) over the drawn triplets
    std::size_t triplets = 0;
    std::size_t skipped = 0;     // draws for users without a valid negative
};

EpochStats sgd_epoch(FbsmModel& model, const ItemFeatureMatrix& features,
                     const UserProfiles& profiles, const TripletSampler& sampler,
                     const TrainConfig& config, Rng& rng, bool frozen = false);
EpochStats sgd_epoch(LinearSimilarityModel& model, const ItemFeatureMatrix& features,
                     const UserProfiles& profiles, const TripletSampler& sampler,
                     const TrainConfig& config, Rng& rng, bool frozen = false);

struct TrainingData {
    const ItemFeatureMatrix& features;
    const PreferenceData& train;
    std::span<const ItemId> train_items;
    const PreferenceData& validation;
    std::span<const ItemId> validation_items;
};

struct EpochLog {
    std::size_t epoch = 0;  // 0 is the initial model, before any update
    double loss = 0.0;
    double val_rec = 0.0;
    double val_dcg = 0.0;
    double seconds = 0.0;
    std::size_t triplets = 0;
};

struct TrainHooks {
    bool freeze_parameters = false;
    std::function<void(const EpochLog&)> on_epoch;
};

template <typename Model>
struct TrainResult {
    Model model;                 // best snapshot by validation Rec@n
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
    std::string stop_reason;     // "max_epochs", "patience" or "converged"
};

TrainResult<FbsmModel> train_fbsm(const TrainingData& data, const TrainConfig& config,
                                  const TrainHooks& hooks = {});
TrainResult<LinearSimilarityModel> train_ufsm(const TrainingData& data, const TrainConfig& config,
                                              const TrainHooks& hooks = {});

/// Tab-separated `epoch loss val_rec val_dcg seconds`. With `include_timing`
/// false the seconds column is written as 0 so logs of identical runs compare
/// byte-for-byte.
void write_training_log(std::ostream& out, std::span<const EpochLog> log, bool include_timing,
                        std::span<const std::string> header = {});

}  // namespace coldrec
