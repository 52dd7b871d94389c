#include "coldrec/data_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "coldrec/random.hpp"

namespace coldrec {

namespace {

std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string format_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw EmptyDataError("cannot open " + path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

// Reads data lines, skipping blanks and `#` comments, and hands each split
// into tab-separated fields to `visit(fields, line_no)`.
template <typename Visit>
std::size_t for_each_record(std::istream& in, Visit visit) {
    std::string line;
    std::size_t line_no = 0, records = 0;
    std::vector<std::string_view> fields;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        fields.clear();
        std::string_view rest(line);
        while (true) {
            const auto tab = rest.find('\t');
            fields.push_back(rest.substr(0, tab));
            if (tab == std::string_view::npos) break;
            rest.remove_prefix(tab + 1);
        }
        visit(fields, line_no, line);
        ++records;
    }
    return records;
}

double parse_real(std::string_view text, const std::string& file, std::size_t line_no,
                  const char* what) {
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParseError(file, line_no, std::string("invalid ") + what + " '" + std::string(text) + "'");
    }
    if (!std::isfinite(value)) {
        throw ParseError(file, line_no, std::string(what) + " must be finite");
    }
    return value;
}

std::uint64_t parse_unsigned(std::string_view text, const std::string& file, std::size_t line_no,
                             const char* what, int base = 10) {
    std::uint64_t value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value, base);
    if (ec != std::errc() || ptr != end || text.empty()) {
        throw ParseError(file, line_no, std::string("invalid ") + what + " '" + std::string(text) + "'");
    }
    return value;
}

void require_name(std::string_view field, const std::string& file, std::size_t line_no,
                  const char* what) {
    if (field.empty()) throw ParseError(file, line_no, std::string("empty ") + what + " id");
}

}  // namespace

// ---------------------------------------------------------------------------
// IdMap

std::uint32_t IdMap::add(const std::string& name) {
    auto [it, inserted] = index_.try_emplace(name, static_cast<std::uint32_t>(names_.size()));
    if (inserted) names_.push_back(name);
    return it->second;
}

std::optional<std::uint32_t> IdMap::find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

// ---------------------------------------------------------------------------
// Preferences

PreferenceData load_preferences(const std::filesystem::path& path,
                                const PreferenceLoadOptions& options, IdMap& users, IdMap& items) {
    auto in = open_input(path);
    const std::string file = path.string();
    // Last line wins when a (user, item) pair repeats.
    std::map<std::pair<UserId, ItemId>, bool> labels;
    const std::size_t records =
        for_each_record(in, [&](const std::vector<std::string_view>& f, std::size_t line_no,
                                const std::string&) {
            if (f.size() < 2 || f.size() > 3) {
                throw ParseError(file, line_no, "expected user<TAB>item[<TAB>rating]");
            }
            require_name(f[0], file, line_no, "user");
            require_name(f[1], file, line_no, "item");
            bool positive = true;
            if (f.size() == 3) {
                positive = parse_real(f[2], file, line_no, "rating") >= options.binarize_threshold;
            }
            const std::string item_name(f[1]);
            ItemId item;
            if (auto known = items.find(item_name)) {
                item = *known;
            } else if (options.allow_new_items) {
                item = items.add(item_name);
            } else {
                throw ParseError(file, line_no, "unknown item '" + item_name + "'");
            }
            const UserId user = users.add(std::string(f[0]));
            if (positive || options.keep_explicit_negatives) labels[{user, item}] = positive;
        });
    if (records == 0) throw EmptyDataError(file + ": no preference records");

    std::vector<std::vector<ItemId>> pos(users.size()), neg;
    if (options.keep_explicit_negatives) neg.resize(users.size());
    for (const auto& [key, positive] : labels) {
        if (positive)
            pos[key.first].push_back(key.second);
        else
            neg[key.first].push_back(key.second);
    }
    return PreferenceData(users.size(), items.size(), std::move(pos), std::move(neg));
}

void write_preferences(const std::filesystem::path& path, const PreferenceData& prefs,
                       const IdMap& users, const IdMap& items) {
    auto out = open_output(path);
    for (UserId u = 0; u < prefs.n_users(); ++u) {
        for (ItemId i : prefs.positives(u)) out << users.name(u) << '\t' << items.name(i) << '\n';
        for (ItemId j : prefs.explicit_negatives(u))
            out << users.name(u) << '\t' << items.name(j) << "\t0\n";
    }
}

// ---------------------------------------------------------------------------
// Term features and TF-IDF

TermBags load_term_features(const std::filesystem::path& path) {
    auto in = open_input(path);
    const std::string file = path.string();
    TermBags bags;
    const std::size_t records =
        for_each_record(in, [&](const std::vector<std::string_view>& f, std::size_t line_no,
                                const std::string&) {
            if (f.size() != 3) throw ParseError(file, line_no, "expected item<TAB>term<TAB>count");
            require_name(f[0], file, line_no, "item");
            if (f[1].empty()) throw ParseError(file, line_no, "empty term");
            const double count = parse_real(f[2], file, line_no, "count");
            if (count < 1.0) throw ParseError(file, line_no, "count must be >= 1");
            const auto item = bags.items.add(std::string(f[0]));
            if (item >= bags.counts.size()) bags.counts.resize(item + 1);
            bags.counts[item][std::string(f[1])] += count;
        });
    if (records == 0) throw EmptyDataError(file + ": no term records");
    return bags;
}

std::optional<FeatureId> Vocabulary::find(const std::string& term) const {
    auto it = std::lower_bound(terms.begin(), terms.end(), term);
    if (it == terms.end() || *it != term) return std::nullopt;
    return static_cast<FeatureId>(it - terms.begin());
}

std::uint64_t Vocabulary::hash() const {
    if (terms.empty()) return 0;
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : terms) {
        h = fnv1a(t, h);
        h = fnv1a(std::string_view("\n", 1), h);
    }
    return h;
}

TfidfResult build_tfidf(const TermBags& bags, const TfidfOptions& options) {
    if (options.min_item_df < 1) throw ConfigError("tfidf: min_item_df must be >= 1");
    if (!(options.max_item_fraction > 0.0 && options.max_item_fraction <= 1.0)) {
        throw ConfigError("tfidf: max_item_fraction must be in (0, 1]");
    }
    const std::size_t n_items = bags.counts.size();
    std::map<std::string, std::size_t> df;
    for (const auto& bag : bags.counts)
        for (const auto& entry : bag) ++df[entry.first];

    TfidfResult result;
    result.vocabulary.n_items_seen = n_items;
    const double ceiling = options.max_item_fraction * static_cast<double>(n_items);
    std::vector<double> idf;
    for (const auto& [term, count] : df) {
        if (count < options.min_item_df || static_cast<double>(count) > ceiling) continue;
        result.vocabulary.terms.push_back(term);
        result.vocabulary.document_frequency.push_back(count);
        const double ratio = static_cast<double>(n_items) / static_cast<double>(count);
        idf.push_back(options.smooth_idf ? std::log1p(ratio) : std::log(ratio));
    }
    if (result.vocabulary.terms.empty()) {
        throw PipelineError("tfidf: no term survives the document-frequency filter (min_df=" +
                            std::to_string(options.min_item_df) + ", max_frac=" +
                            format_real(options.max_item_fraction) + ")");
    }

    std::vector<SparseVector> rows;
    rows.reserve(n_items);
    for (const auto& bag : bags.counts) {
        std::vector<FeatureId> idx;
        std::vector<double> val;
        for (const auto& [term, tf] : bag) {  // std::map: lexicographic, like the vocabulary
            if (auto id = result.vocabulary.find(term)) {
                idx.push_back(*id);
                val.push_back(tf * idf[*id]);
            }
        }
        rows.push_back(SparseVector::from_sorted(std::move(idx), std::move(val)));
    }
    result.features = ItemFeatureMatrix(result.vocabulary.terms.size(), std::move(rows));
    if (options.l2_normalize) result.features = result.features.l2_normalized();
    result.empty_rows = result.features.empty_rows();
    return result;
}

void write_vocabulary(const std::filesystem::path& path, const Vocabulary& vocabulary) {
    auto out = open_output(path);
    out << "# n_items=" << vocabulary.n_items_seen << '\n';
    for (std::size_t k = 0; k < vocabulary.terms.size(); ++k)
        out << k << '\t' << vocabulary.terms[k] << '\t' << vocabulary.document_frequency[k] << '\n';
}

// ---------------------------------------------------------------------------
// Sparse features

LoadedFeatures load_sparse_features(const std::filesystem::path& path) {
    auto in = open_input(path);
    const std::string file = path.string();
    LoadedFeatures loaded;
    std::optional<std::size_t> declared;
    std::vector<std::map<FeatureId, double>> entries;
    std::size_t max_dim = 0;
    std::string line;
    std::size_t line_no = 0, records = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (line[0] == '%') {
            const auto eq = line.find('=');
            const std::string key = line.substr(1, eq == std::string::npos ? eq : eq - 1);
            const std::string value = eq == std::string::npos ? "" : line.substr(eq + 1);
            if (key == "n_features") {
                declared = parse_unsigned(value, file, line_no, "n_features");
            } else if (key == "feature_hash") {
                loaded.feature_hash = parse_unsigned(value, file, line_no, "feature_hash", 16);
            } else {
                throw ParseError(file, line_no, "unknown header '" + key + "'");
            }
            continue;
        }
        ++records;
        std::vector<std::string_view> f;
        std::string_view rest(line);
        while (true) {
            const auto tab = rest.find('\t');
            f.push_back(rest.substr(0, tab));
            if (tab == std::string_view::npos) break;
            rest.remove_prefix(tab + 1);
        }
        if (f.size() != 1 && f.size() != 3) {
            throw ParseError(file, line_no, "expected item<TAB>feature_id<TAB>value");
        }
        require_name(f[0], file, line_no, "item");
        const auto item = loaded.items.add(std::string(f[0]));
        if (item >= entries.size()) entries.resize(item + 1);
        if (f.size() == 1) continue;  // item declared with an empty feature row
        const auto feature = parse_unsigned(f[1], file, line_no, "feature id");
        if (feature >= UINT32_MAX) throw ParseError(file, line_no, "feature id too large");
        const double value = parse_real(f[2], file, line_no, "value");
        const auto [it, inserted] = entries[item].insert_or_assign(static_cast<FeatureId>(feature), value);
        if (!inserted) {
            loaded.warnings.push_back(file + ":" + std::to_string(line_no) + ": duplicate (" +
                                      std::string(f[0]) + ", " + std::to_string(feature) +
                                      "), keeping the last value");
        }
        max_dim = std::max<std::size_t>(max_dim, feature + 1);
    }
    if (records == 0) throw EmptyDataError(file + ": no feature records");
    const std::size_t n_features = declared.value_or(max_dim);
    if (n_features < max_dim) {
        throw DimensionError(file + ": feature id " + std::to_string(max_dim - 1) +
                             " exceeds declared n_features " + std::to_string(n_features));
    }
    std::vector<SparseVector> rows;
    rows.reserve(entries.size());
    for (const auto& row : entries) {
        std::vector<FeatureId> idx;
        std::vector<double> val;
        for (const auto& [k, v] : row) {
            idx.push_back(k);
            val.push_back(v);
        }
        rows.push_back(SparseVector::from_sorted(std::move(idx), std::move(val)));
    }
    loaded.features = ItemFeatureMatrix(n_features, std::move(rows));
    return loaded;
}

void write_sparse_features(const std::filesystem::path& path, const ItemFeatureMatrix& features,
                           const IdMap& items, std::uint64_t feature_hash) {
    if (items.size() != features.n_items()) {
        throw DimensionError("write_sparse_features: " + std::to_string(items.size()) +
                             " item names for " + std::to_string(features.n_items()) + " rows");
    }
    auto out = open_output(path);
    out << "%n_features=" << features.n_features() << '\n';
    if (feature_hash != 0) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(feature_hash));
        out << "%feature_hash=" << buf << '\n';
    }
    for (ItemId i = 0; i < features.n_items(); ++i) {
        const auto& row = features.row(i);
        if (row.empty()) {
            out << items.name(i) << '\n';
            continue;
        }
        for (std::size_t k = 0; k < row.nnz(); ++k) {
            out << items.name(i) << '\t' << row.indices()[k] << '\t' << format_real(row.values()[k])
                << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Split

SplitResult split_by_items(const PreferenceData& prefs, std::span<const std::string> item_names,
                           std::array<double, 3> fractions, std::uint64_t seed) {
    const std::size_t n = prefs.n_items();
    for (double f : fractions) {
        if (!(f >= 0.0 && f <= 1.0)) throw SplitError("split fractions must lie in [0, 1]");
    }
    if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) {
        throw SplitError("split fractions must sum to 1");
    }
    if (n < 3) throw SplitError("split needs at least 3 items, got " + std::to_string(n));
    if (!item_names.empty() && item_names.size() != n) {
        throw DimensionError("split: " + std::to_string(item_names.size()) + " names for " +
                             std::to_string(n) + " items");
    }

    struct Keyed {
        std::uint64_t key;
        std::string name;
        ItemId item;
    };
    std::vector<Keyed> order;
    order.reserve(n);
    for (ItemId i = 0; i < n; ++i) {
        std::string name = item_names.empty() ? std::to_string(i) : item_names[i];
        const std::uint64_t key = mix64(fnv1a(name) ^ mix64(seed));
        order.push_back({key, std::move(name), i});
    }
    std::sort(order.begin(), order.end(), [](const Keyed& a, const Keyed& b) {
        return a.key != b.key ? a.key < b.key : a.name < b.name;
    });

    const auto cut1 = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n)));
    const auto cut2 = static_cast<std::size_t>(
        std::llround((fractions[0] + fractions[1]) * static_cast<double>(n)));
    if (cut1 == 0 || cut2 <= cut1 || cut2 >= n) {
        throw SplitError("split of " + std::to_string(n) + " items leaves an empty partition");
    }

    SplitResult result;
    result.items.seed = seed;
    std::vector<bool> in_train(n, false), in_val(n, false), in_test(n, false);
    for (std::size_t k = 0; k < n; ++k) {
        const ItemId i = order[k].item;
        if (k < cut1) {
            result.items.train_items.push_back(i);
            in_train[i] = true;
        } else if (k < cut2) {
            result.items.validation_items.push_back(i);
            in_val[i] = true;
        } else {
            result.items.test_items.push_back(i);
            in_test[i] = true;
        }
    }
    std::sort(result.items.train_items.begin(), result.items.train_items.end());
    std::sort(result.items.validation_items.begin(), result.items.validation_items.end());
    std::sort(result.items.test_items.begin(), result.items.test_items.end());

    result.train = prefs.restricted_to(in_train);
    result.validation = prefs.restricted_to(in_val);
    result.test = prefs.restricted_to(in_test);
    auto active = [](const PreferenceData& p) {
        std::vector<bool> a(p.n_users());
        for (UserId u = 0; u < p.n_users(); ++u) a[u] = !p.positives(u).empty();
        return a;
    };
    result.train_active = active(result.train);
    result.validation_active = active(result.validation);
    result.test_active = active(result.test);
    return result;
}

void write_split_manifest(const std::filesystem::path& path, const ItemSplit& split,
                          const IdMap& items) {
    std::vector<const char*> label(items.size(), nullptr);
    for (ItemId i : split.train_items) label.at(i) = "train";
    for (ItemId i : split.validation_items) label.at(i) = "val";
    for (ItemId i : split.test_items) label.at(i) = "test";
    auto out = open_output(path);
    out << "# seed=" << split.seed << '\n';
    for (ItemId i = 0; i < items.size(); ++i)
        if (label[i] != nullptr) out << items.name(i) << '\t' << label[i] << '\n';
}

ItemSplit read_split_manifest(const std::filesystem::path& path, const IdMap& items) {
    auto in = open_input(path);
    const std::string file = path.string();
    ItemSplit split;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# seed=", 0) == 0)
                split.seed = parse_unsigned(std::string_view(line).substr(7), file, line_no, "seed");
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError(file, line_no, "expected item<TAB>partition");
        const auto id = items.find(line.substr(0, tab));
        if (!id) throw ParseError(file, line_no, "unknown item '" + line.substr(0, tab) + "'");
        const std::string part = line.substr(tab + 1);
        if (part == "train")
            split.train_items.push_back(*id);
        else if (part == "val")
            split.validation_items.push_back(*id);
        else if (part == "test")
            split.test_items.push_back(*id);
        else
            throw ParseError(file, line_no, "partition must be train, val or test");
    }
    std::sort(split.train_items.begin(), split.train_items.end());
    std::sort(split.validation_items.begin(), split.validation_items.end());
    std::sort(split.test_items.begin(), split.test_items.end());
    return split;
}

// ---------------------------------------------------------------------------
// Model containers

namespace {

constexpr std::array<char, 8> kFbsmMagic{'F', 'B', 'S', 'M', '1', 0, 0, 0};
constexpr std::array<char, 8> kUfsmMagic{'U', 'F', 'S', 'M', '1', 0, 0, 0};

void put_u64(std::ostream& out, std::uint64_t x) {
    char buf[8];
    for (int k = 0; k < 8; ++k) buf[k] = static_cast<char>((x >> (8 * k)) & 0xff);
    out.write(buf, 8);
}

void put_u32(std::ostream& out, std::uint32_t x) {
    char buf[4];
    for (int k = 0; k < 4; ++k) buf[k] = static_cast<char>((x >> (8 * k)) & 0xff);
    out.write(buf, 4);
}

void put_f64(std::ostream& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

std::uint64_t get_u64(std::istream& in) {
    unsigned char buf[8];
    if (!in.read(reinterpret_cast<char*>(buf), 8)) throw FormatError("model file truncated");
    std::uint64_t x = 0;
    for (int k = 7; k >= 0; --k) x = (x << 8) | buf[k];
    return x;
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) throw FormatError("model file truncated");
    std::uint32_t x = 0;
    for (int k = 3; k >= 0; --k) x = (x << 8) | buf[k];
    return x;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

// Guards against absurd shapes from corrupted headers before allocating.
constexpr std::uint64_t kMaxEntries = std::uint64_t{1} << 34;

}  // namespace

void save_model(std::ostream& out, const FbsmModel& model, std::uint64_t feature_hash) {
    if (!model.all_finite()) throw DivergenceError("save_model: model has non-finite entries");
    out.write(kFbsmMagic.data(), 8);
    put_u32(out, kModelFormatVersion);
    const std::size_t n = model.n_features(), h = model.latent_dim();
    put_u64(out, n);
    put_u64(out, h);
    put_u64(out, feature_hash);
    for (double x : model.diagonal()) put_f64(out, x);
    for (std::size_t k = 0; k < h; ++k)
        for (std::size_t p = 0; p < n; ++p) put_f64(out, model.factors()(k, p));
}

void save_model(std::ostream& out, const LinearSimilarityModel& model, std::uint64_t feature_hash) {
    if (!model.all_finite()) throw DivergenceError("save_model: model has non-finite entries");
    out.write(kUfsmMagic.data(), 8);
    put_u32(out, kModelFormatVersion);
    put_u64(out, model.n_features());
    put_u64(out, model.n_functions());
    put_u64(out, model.n_users());
    put_u64(out, feature_hash);
    for (double x : model.raw_weights()) put_f64(out, x);
    for (double x : model.raw_memberships()) put_f64(out, x);
}

void save_model(const std::filesystem::path& path, const FbsmModel& model,
                std::uint64_t feature_hash) {
    auto out = open_output(path, true);
    save_model(out, model, feature_hash);
}

void save_model(const std::filesystem::path& path, const LinearSimilarityModel& model,
                std::uint64_t feature_hash) {
    auto out = open_output(path, true);
    save_model(out, model, feature_hash);
}

LoadedModel load_model(std::istream& in) {
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), 8)) throw FormatError("model file too short for a header");
    const bool is_fbsm = magic == kFbsmMagic;
    if (!is_fbsm && magic != kUfsmMagic) throw FormatError("not a model file (bad magic)");
    const std::uint32_t version = get_u32(in);
    if (version != kModelFormatVersion) {
        throw FormatError("unsupported model format version " + std::to_string(version));
    }
    LoadedModel loaded;
    const std::uint64_t n = get_u64(in);
    const std::uint64_t second = get_u64(in);
    if (is_fbsm) {
        loaded.kind = ModelKind::fbsm;
        loaded.feature_hash = get_u64(in);
        if (n > kMaxEntries || second > kMaxEntries || n * second > kMaxEntries) {
            throw FormatError("model header has implausible shape");
        }
        std::vector<double> d(n);
        for (auto& x : d) x = get_f64(in);
        DenseFactorMatrix v(second, n);
        for (std::size_t k = 0; k < second; ++k)
            for (std::size_t p = 0; p < n; ++p) v(k, p) = get_f64(in);
        try {
            loaded.fbsm = FbsmModel(std::move(d), std::move(v));
        } catch (const DimensionError& e) {
            throw FormatError(std::string("model payload rejected: ") + e.what());
        }
    } else {
        loaded.kind = ModelKind::ufsm;
        const std::uint64_t users = get_u64(in);
        loaded.feature_hash = get_u64(in);
        if (n > kMaxEntries || second > kMaxEntries || users > kMaxEntries ||
            n * second > kMaxEntries || users * second > kMaxEntries) {
            throw FormatError("model header has implausible shape");
        }
        std::vector<double> w(second * n), m(users * second);
        for (auto& x : w) x = get_f64(in);
        for (auto& x : m) x = get_f64(in);
        try {
            loaded.ufsm = LinearSimilarityModel(second, n, std::move(w), std::move(m));
        } catch (const DimensionError& e) {
            throw FormatError(std::string("model payload rejected: ") + e.what());
        }
    }
    return loaded;
}

LoadedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EmptyDataError("cannot open " + path.string());
    return load_model(in);
}

void check_model_matches(const LoadedModel& model, const ItemFeatureMatrix& features,
                         std::uint64_t feature_hash) {
    const std::size_t n = model.kind == ModelKind::fbsm ? model.fbsm.n_features()
                                                        : model.ufsm.n_features();
    if (n != features.n_features()) {
        throw DimensionError("model has n_F " + std::to_string(n) + " but features have " +
                             std::to_string(features.n_features()));
    }
    if (model.feature_hash != 0 && feature_hash != 0 && model.feature_hash != feature_hash) {
        throw FormatError("model was trained on a different feature vocabulary");
    }
}

}  // namespace coldrec
