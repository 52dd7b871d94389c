#include "coldrec/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace coldrec {

namespace {

// k distinct values from [0, n) in ascending order (partial Fisher-Yates).
std::vector<std::size_t> choose(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    k = std::min(k, n);
    for (std::size_t a = 0; a < k; ++a) {
        const std::size_t b = a + rng.uniform_index(n - a);
        std::swap(pool[a], pool[b]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace

PlantedData make_planted_dataset(const PlantedConfig& cfg) {
    if (cfg.rank == 0 || cfg.noise_features >= cfg.n_features) {
        throw ConfigError("planted: need rank >= 1 and fewer noise features than features");
    }
    const std::size_t block = (cfg.n_features - cfg.noise_features) / cfg.rank;
    if (block == 0) throw ConfigError("planted: topic blocks would be empty");
    const std::size_t noise_begin = block * cfg.rank;  // leftovers count as noise
    const std::size_t n_noise = cfg.n_features - noise_begin;

    Rng rng(cfg.seed);
    PlantedData data;

    // Ground truth.
    std::vector<double> d(cfg.n_features, 0.0);
    DenseFactorMatrix v(cfg.rank, cfg.n_features);
    for (std::size_t t = 0; t < cfg.rank; ++t) {
        for (std::size_t p = t * block; p < (t + 1) * block; ++p) {
            v(t, p) = cfg.block_strength;
            d[p] = cfg.diagonal_strength;
        }
    }
    data.truth = FbsmModel(std::move(d), std::move(v));

    // Items.
    std::vector<SparseVector> rows;
    rows.reserve(cfg.n_items);
    for (std::size_t i = 0; i < cfg.n_items; ++i) {
        const std::size_t topic = rng.uniform_index(cfg.rank);
        data.item_topic.push_back(topic);
        std::vector<std::pair<FeatureId, double>> entries;
        for (std::size_t p : choose(block, cfg.topic_features_per_item, rng))
            entries.emplace_back(static_cast<FeatureId>(topic * block + p), rng.uniform(0.5, 1.5));
        for (std::size_t p : choose(n_noise, cfg.noise_features_per_item, rng))
            entries.emplace_back(static_cast<FeatureId>(noise_begin + p), rng.uniform(0.5, 1.5));
        rows.push_back(SparseVector::from_entries(std::move(entries)));
        data.item_names.push_back("item" + std::to_string(i));
    }
    data.features = ItemFeatureMatrix(cfg.n_features, std::move(rows));

    std::vector<std::vector<ItemId>> by_topic(cfg.rank);
    for (ItemId i = 0; i < cfg.n_items; ++i) by_topic[data.item_topic[i]].push_back(i);

    // Users.
    const auto positives_per_user = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(cfg.positive_fraction * static_cast<double>(cfg.n_items))));
    std::vector<std::vector<ItemId>> positives(cfg.n_users);
    std::vector<double> scores(cfg.n_items);
    for (std::size_t u = 0; u < cfg.n_users; ++u) {
        std::vector<std::size_t> topics{rng.uniform_index(cfg.rank)};
        if (cfg.rank > 1 && rng.uniform01() < cfg.second_topic_probability) {
            std::size_t other = rng.uniform_index(cfg.rank - 1);
            if (other >= topics[0]) ++other;
            topics.push_back(other);
        }
        std::vector<ItemId> anchors;
        for (std::size_t t : topics) {
            const auto& pool = by_topic[t];
            if (pool.empty()) continue;
            for (std::size_t a = 0; a < cfg.anchors_per_user; ++a)
                anchors.push_back(pool[rng.uniform_index(pool.size())]);
        }
        const SparseVector taste = accumulate_user_vector(data.features, anchors);

        double mean = 0.0, sq = 0.0;
        for (ItemId i = 0; i < cfg.n_items; ++i) {
            scores[i] = similarity(data.truth, data.features.row(i), taste);
            mean += scores[i];
            sq += scores[i] * scores[i];
        }
        mean /= static_cast<double>(cfg.n_items);
        const double sd = std::sqrt(std::max(0.0, sq / static_cast<double>(cfg.n_items) - mean * mean));
        for (double& s : scores) s += cfg.score_noise * sd * rng.normal();

        std::vector<ItemId> order(cfg.n_items);
        std::iota(order.begin(), order.end(), ItemId{0});
        std::partial_sort(order.begin(),
                          order.begin() + static_cast<std::ptrdiff_t>(positives_per_user),
                          order.end(), [&](ItemId a, ItemId b) {
                              return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
                          });
        positives[u].assign(order.begin(),
                            order.begin() + static_cast<std::ptrdiff_t>(positives_per_user));
    }
    data.prefs = PreferenceData(cfg.n_users, cfg.n_items, std::move(positives));
    return data;
}

SparseVector random_sparse_vector(std::size_t n_features, std::size_t max_nnz, Rng& rng,
                                  std::size_t min_nnz) {
    max_nnz = std::min(max_nnz, n_features);
    min_nnz = std::min(min_nnz, max_nnz);
    const std::size_t nnz = min_nnz + rng.uniform_index(max_nnz - min_nnz + 1);
    std::vector<FeatureId> idx;
    std::vector<double> val;
    for (std::size_t p : choose(n_features, nnz, rng)) {
        double x = 0.0;
        while (x == 0.0) x = rng.uniform(-1.0, 1.0);
        idx.push_back(static_cast<FeatureId>(p));
        val.push_back(x);
    }
    return SparseVector::from_sorted(std::move(idx), std::move(val));
}

FbsmModel random_model(std::size_t n_features, std::size_t latent_dim, Rng& rng) {
    std::vector<double> d(n_features);
    for (double& x : d) x = rng.uniform(-1.0, 1.0);
    DenseFactorMatrix v(latent_dim, n_features);
    for (double& x : v.raw()) x = rng.uniform(-1.0, 1.0);
    return FbsmModel(std::move(d), std::move(v));
}

TripletInstance random_triplet_instance(std::size_t n_features, std::size_t max_nnz,
                                        std::size_t profile_size, Rng& rng) {
    profile_size = std::max<std::size_t>(1, profile_size);
    std::vector<SparseVector> rows;
    for (std::size_t k = 0; k < profile_size + 1; ++k)
        rows.push_back(random_sparse_vector(n_features, max_nnz, rng, 1));
    TripletInstance inst;
    inst.features = ItemFeatureMatrix(n_features, std::move(rows));
    std::vector<ItemId> profile(profile_size);
    std::iota(profile.begin(), profile.end(), ItemId{0});
    inst.prefs = PreferenceData(1, profile_size + 1, {profile});
    inst.user = 0;
    inst.positive = static_cast<ItemId>(rng.uniform_index(profile_size));
    inst.negative = static_cast<ItemId>(profile_size);
    return inst;
}

}  // namespace coldrec
