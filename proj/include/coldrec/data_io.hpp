#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "coldrec/baselines.hpp"
#include "coldrec/fbsm.hpp"
#include "coldrec/sparse.hpp"

namespace coldrec {

/// String id <-> dense integer id, in order of first appearance.
class IdMap {
public:
    std::uint32_t add(const std::string& name);
    std::optional<std::uint32_t> find(const std::string& name) const;
    const std::string& name(std::uint32_t id) const { return names_.at(id); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    std::size_t size() const noexcept { return names_.size(); }

private:
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<std::string> names_;
};

/// Warnings collected by loaders (duplicate entries, empty rows, ...).
using Warnings = std::vector<std::string>;

// =============================================================================
// Preferences: `user<TAB>item[<TAB>rating]`, `#` comments, blank lines skipped.
// =============================================================================

struct PreferenceLoadOptions {
    double binarize_threshold = 3.0;
    bool keep_explicit_negatives = false;
    // When false, an item missing from `items` is a parse error; pass false
    // when `items` already holds the feature file's item ids.
    bool allow_new_items = true;
};

/// Ratings >= threshold are positives; lower ratings are explicit negatives
/// (kept only on request). A line without a rating is a positive. Throws
/// ParseError with the line number, EmptyDataError on a file with no records.
PreferenceData load_preferences(const std::filesystem::path& path,
                                const PreferenceLoadOptions& options, IdMap& users, IdMap& items);

/// Writes `user<TAB>item` for positives and `user<TAB>item<TAB>0` for
/// explicit negatives.
void write_preferences(const std::filesystem::path& path, const PreferenceData& prefs,
                       const IdMap& users, const IdMap& items);

// =============================================================================
// Features
// =============================================================================

/// Raw term counts per item, items in order of first appearance.
struct TermBags {
    IdMap items;
    std::vector<std::map<std::string, double>> counts;  // counts[item][term]
};

/// `item<TAB>term<TAB>count`, count >= 1. Duplicate (item, term) lines add up.
TermBags load_term_features(const std::filesystem::path& path);

struct TfidfOptions {
    std::size_t min_item_df = 20;
    double max_item_fraction = 0.20;
    bool smooth_idf = false;     // ln(1 + n/df) instead of ln(n/df)
    bool l2_normalize = false;
};

struct Vocabulary {
    std::vector<std::string> terms;              // feature id -> term (sorted)
    std::vector<std::size_t> document_frequency; // per retained term
    std::size_t n_items_seen = 0;

    std::optional<FeatureId> find(const std::string& term) const;
    /// FNV-1a over the term list; 0 for an empty vocabulary.
    std::uint64_t hash() const;
};

struct TfidfResult {
    Vocabulary vocabulary;
    ItemFeatureMatrix features;
    std::size_t empty_rows = 0;  // items left without any retained term
};

/// Drops terms with df < min_item_df or df > max_item_fraction * n_items,
/// assigns dense ids in lexicographic term order, and sets
/// value = tf * ln(n_items / df). Throws PipelineError when nothing survives.
TfidfResult build_tfidf(const TermBags& bags, const TfidfOptions& options);

void write_vocabulary(const std::filesystem::path& path, const Vocabulary& vocabulary);

struct LoadedFeatures {
    IdMap items;
    ItemFeatureMatrix features;
    std::uint64_t feature_hash = 0;  // from a `%feature_hash=` header, else 0
    Warnings warnings;
};

/// `item<TAB>feature_id<TAB>value` with optional `%n_features=<int>` and
/// `%feature_hash=<hex>` headers. n_F defaults to 1 + the largest id. A
/// repeated (item, feature) keeps the last value and records a warning.
LoadedFeatures load_sparse_features(const std::filesystem::path& path);

/// Values are printed with 17 significant digits so a reload is bit-exact.
void write_sparse_features(const std::filesystem::path& path, const ItemFeatureMatrix& features,
                           const IdMap& items, std::uint64_t feature_hash = 0);

// =============================================================================
// Item-wise split
// =============================================================================

struct ItemSplit {
    std::vector<ItemId> train_items;
    std::vector<ItemId> validation_items;
    std::vector<ItemId> test_items;
    std::uint64_t seed = 0;
};

struct SplitResult {
    PreferenceData train;
    PreferenceData validation;
    PreferenceData test;
    ItemSplit items;
    // active[u] is false when the user has no positive in that partition; such
    // users are skipped by evaluation there.
    std::vector<bool> train_active;
    std::vector<bool> validation_active;
    std::vector<bool> test_active;
};

/// Orders items by a seeded hash of their names and cuts the order at
/// round(f0 * n) and round((f0 + f1) * n). Keying on names makes the split
/// independent of how integer ids were assigned. Throws SplitError when a
/// partition would be empty or the fractions are invalid.
SplitResult split_by_items(const PreferenceData& prefs, std::span<const std::string> item_names,
                           std::array<double, 3> fractions, std::uint64_t seed);

/// One line per item: `item_name<TAB>{train|val|test}` after a `# seed=<n>` header.
void write_split_manifest(const std::filesystem::path& path, const ItemSplit& split,
                          const IdMap& items);
ItemSplit read_split_manifest(const std::filesystem::path& path, const IdMap& items);

// =============================================================================
// Model containers. Little-endian binary:
//   magic[8] ("FBSM1" / "UFSM1", NUL padded), u32 version, u64 n_F, u64 h or l,
//   [u64 n_users for UFSM], u64 feature_hash, then f64 payload row-major:
//   FBSM: d[n_F], V[h][n_F];  UFSM: W[l][n_F], M[n_users][l].
// =============================================================================

inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(std::ostream& out, const FbsmModel& model, std::uint64_t feature_hash = 0);
void save_model(const std::filesystem::path& path, const FbsmModel& model,
                std::uint64_t feature_hash = 0);
void save_model(std::ostream& out, const LinearSimilarityModel& model,
                std::uint64_t feature_hash = 0);
void save_model(const std::filesystem::path& path, const LinearSimilarityModel& model,
                std::uint64_t feature_hash = 0);

enum class ModelKind { fbsm, ufsm };

struct LoadedModel {
    ModelKind kind = ModelKind::fbsm;
    FbsmModel fbsm;
    LinearSimilarityModel ufsm;
    std::uint64_t feature_hash = 0;
};

/// Throws FormatError on bad magic, unknown version or truncated payload.
LoadedModel load_model(std::istream& in);
LoadedModel load_model(const std::filesystem::path& path);

/// Throws DimensionError when the model's n_F differs from the feature
/// matrix, FormatError when both hashes are set and differ.
void check_model_matches(const LoadedModel& model, const ItemFeatureMatrix& features,
                         std::uint64_t feature_hash);

}  // namespace coldrec
