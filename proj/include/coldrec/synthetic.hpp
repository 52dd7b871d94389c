#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coldrec/fbsm.hpp"
#include "coldrec/random.hpp"
#include "coldrec/sparse.hpp"

namespace coldrec {

// =============================================================================
// Planted-structure data
//
// Features are grouped into `rank` topic blocks plus a few noise features.
// The ground-truth similarity W* = D* + V*^T V* couples every pair of
// features inside a block (strong off-diagonal blocks) and ignores noise
// features. Each item carries a few topic features of one block and a few
// noise features. A user likes the items that score highest under W*
// against a handful of anchor items from the user's favourite block(s),
// after adding Gaussian noise to the scores.
//
// Items of the same topic rarely share an exact feature, so a diagonal model
// sees little of the block structure while a low-rank one can learn it.
// =============================================================================

struct PlantedConfig {
    std::size_t n_features = 50;
    std::size_t n_items = 200;
    std::size_t n_users = 100;
    std::size_t rank = 3;
    std::size_t noise_features = 8;         // features outside every topic block
    std::size_t topic_features_per_item = 1;
    std::size_t noise_features_per_item = 2;
    double block_strength = 1.0;            // V*(t, p) for p in block t
    double diagonal_strength = 0.05;        // D* on topic features
    std::size_t anchors_per_user = 3;
    double second_topic_probability = 0.0;  // chance a user also likes another block
    double positive_fraction = 0.12;        // top quantile marked positive
    double score_noise = 0.3;               // noise sd relative to the score sd
    std::uint64_t seed = 7;
};

struct PlantedData {
    ItemFeatureMatrix features;
    PreferenceData prefs;
    FbsmModel truth;
    std::vector<std::size_t> item_topic;
    std::vector<std::string> item_names;
};

PlantedData make_planted_dataset(const PlantedConfig& config);

// =============================================================================
// Small random instances for verification
// =============================================================================

/// Up to `max_nnz` distinct features with values uniform in [-1, 1].
SparseVector random_sparse_vector(std::size_t n_features, std::size_t max_nnz, Rng& rng,
                                  std::size_t min_nnz = 0);

/// d and V entries uniform in [-1, 1].
FbsmModel random_model(std::size_t n_features, std::size_t latent_dim, Rng& rng);

/// One user whose profile holds items 0..profile_size-1 (the positive is one
/// of them) and an extra item `negative` outside the profile.
struct TripletInstance {
    ItemFeatureMatrix features;
    PreferenceData prefs;
    UserId user = 0;
    ItemId positive = 0;
    ItemId negative = 0;
};

TripletInstance random_triplet_instance(std::size_t n_features, std::size_t max_nnz,
                                        std::size_t profile_size, Rng& rng);

}  // namespace coldrec
