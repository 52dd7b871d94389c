#include "coldrec/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace coldrec {

namespace {

thread_local OpCounters tls_counters;

void count(std::uint64_t multiply_adds, std::uint64_t merge_steps = 0) noexcept {
    tls_counters.multiply_adds += multiply_adds;
    tls_counters.merge_steps += merge_steps;
}

// Merge-join over two supports. `combine(index, a_value, b_value)` is called
// for every index in the union, with 0 for the missing side.
template <typename Combine>
SparseVector merge_union(const SparseVector& a, const SparseVector& b, Combine combine) {
    auto ai = a.indices(), bi = b.indices();
    auto av = a.values(), bv = b.values();
    std::vector<FeatureId> idx;
    std::vector<double> val;
    idx.reserve(ai.size() + bi.size());
    val.reserve(ai.size() + bi.size());
    std::size_t p = 0, q = 0;
    while (p < ai.size() || q < bi.size()) {
        FeatureId k;
        double x = 0.0, y = 0.0;
        if (q == bi.size() || (p < ai.size() && ai[p] < bi[q])) {
            k = ai[p];
            x = av[p++];
        } else if (p == ai.size() || bi[q] < ai[p]) {
            k = bi[q];
            y = bv[q++];
        } else {
            k = ai[p];
            x = av[p++];
            y = bv[q++];
        }
        const double r = combine(x, y);
        if (r != 0.0) {
            idx.push_back(k);
            val.push_back(r);
        }
    }
    count(0, ai.size() + bi.size());
    return SparseVector::from_sorted(std::move(idx), std::move(val));
}

}  // namespace

OpCounters& op_counters() noexcept { return tls_counters; }
void reset_op_counters() noexcept { tls_counters = {}; }

// ---------------------------------------------------------------------------
// SparseVector

SparseVector SparseVector::from_entries(std::vector<std::pair<FeatureId, double>> entries) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    SparseVector out;
    out.indices_.reserve(entries.size());
    out.values_.reserve(entries.size());
    for (std::size_t k = 0; k < entries.size();) {
        const FeatureId index = entries[k].first;
        double sum = 0.0;
        for (; k < entries.size() && entries[k].first == index; ++k) sum += entries[k].second;
        if (sum != 0.0) {
            out.indices_.push_back(index);
            out.values_.push_back(sum);
        }
    }
    return out;
}

SparseVector SparseVector::from_sorted(std::vector<FeatureId> indices, std::vector<double> values) {
    if (indices.size() != values.size()) {
        throw DimensionError("sparse vector: " + std::to_string(indices.size()) + " indices but " +
                             std::to_string(values.size()) + " values");
    }
    for (std::size_t k = 1; k < indices.size(); ++k) {
        if (indices[k - 1] >= indices[k]) {
            throw DimensionError("sparse vector: indices not strictly increasing at position " +
                                 std::to_string(k));
        }
    }
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!std::isfinite(values[k]))
            throw DimensionError("sparse vector: non-finite value at index " + std::to_string(indices[k]));
    }
    SparseVector out;
    const bool has_zero = std::find(values.begin(), values.end(), 0.0) != values.end();
    if (!has_zero) {
        out.indices_ = std::move(indices);
        out.values_ = std::move(values);
        return out;
    }
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (values[k] != 0.0) {
            out.indices_.push_back(indices[k]);
            out.values_.push_back(values[k]);
        }
    }
    return out;
}

SparseVector SparseVector::from_dense(std::span<const double> dense) {
    SparseVector out;
    for (std::size_t k = 0; k < dense.size(); ++k) {
        if (dense[k] != 0.0) {
            out.indices_.push_back(static_cast<FeatureId>(k));
            out.values_.push_back(dense[k]);
        }
    }
    return out;
}

double SparseVector::at(FeatureId index) const noexcept {
    auto it = std::lower_bound(indices_.begin(), indices_.end(), index);
    if (it == indices_.end() || *it != index) return 0.0;
    return values_[static_cast<std::size_t>(it - indices_.begin())];
}

double SparseVector::squared_norm() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v * v;
    count(values_.size());
    return s;
}

SparseVector SparseVector::scaled(double factor) const {
    std::vector<double> vals(values_.size());
    for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = values_[k] * factor;
    return from_sorted(indices_, std::move(vals));
}

std::vector<double> SparseVector::to_dense(std::size_t n_features) const {
    if (min_dimension() > n_features) {
        throw DimensionError("sparse vector index " + std::to_string(indices_.back()) +
                             " does not fit dimension " + std::to_string(n_features));
    }
    std::vector<double> out(n_features, 0.0);
    for (std::size_t k = 0; k < indices_.size(); ++k) out[indices_[k]] = values_[k];
    return out;
}

// ---------------------------------------------------------------------------
// Kernels

double sparse_dot(const SparseVector& a, const SparseVector& b) noexcept {
    auto ai = a.indices(), bi = b.indices();
    auto av = a.values(), bv = b.values();
    double sum = 0.0;
    std::size_t p = 0, q = 0, shared = 0;
    while (p < ai.size() && q < bi.size()) {
        if (ai[p] < bi[q]) {
            ++p;
        } else if (bi[q] < ai[p]) {
            ++q;
        } else {
            sum += av[p++] * bv[q++];
            ++shared;
        }
    }
    count(shared, p + q);
    return sum;
}

double weighted_hadamard_dot(const SparseVector& a, const SparseVector& b,
                             std::span<const double> w) {
    auto ai = a.indices(), bi = b.indices();
    auto av = a.values(), bv = b.values();
    double sum = 0.0;
    std::size_t p = 0, q = 0, shared = 0;
    while (p < ai.size() && q < bi.size()) {
        if (ai[p] < bi[q]) {
            ++p;
        } else if (bi[q] < ai[p]) {
            ++q;
        } else {
            if (ai[p] >= w.size()) {
                throw DimensionError("weighted_hadamard_dot: feature " + std::to_string(ai[p]) +
                                     " outside weight vector of length " +
                                     std::to_string(w.size()));
            }
            sum += w[ai[p]] * (av[p] * bv[q]);
            ++p;
            ++q;
            ++shared;
        }
    }
    count(2 * shared, p + q);
    return sum;
}

SparseVector sparse_add(const SparseVector& a, const SparseVector& b) {
    return merge_union(a, b, [](double x, double y) { return x + y; });
}

SparseVector sparse_sub(const SparseVector& a, const SparseVector& b) {
    return merge_union(a, b, [](double x, double y) { return x - y; });
}

SparseVector sparse_hadamard(const SparseVector& a, const SparseVector& b) {
    auto ai = a.indices(), bi = b.indices();
    auto av = a.values(), bv = b.values();
    std::vector<FeatureId> idx;
    std::vector<double> val;
    std::size_t p = 0, q = 0;
    while (p < ai.size() && q < bi.size()) {
        if (ai[p] < bi[q]) {
            ++p;
        } else if (bi[q] < ai[p]) {
            ++q;
        } else {
            const double r = av[p] * bv[q];
            if (r != 0.0) {
                idx.push_back(ai[p]);
                val.push_back(r);
            }
            ++p;
            ++q;
        }
    }
    count(idx.size(), p + q);
    return SparseVector::from_sorted(std::move(idx), std::move(val));
}

bool DenseFactorMatrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void factor_times_sparse(const DenseFactorMatrix& factors, const SparseVector& x,
                         std::span<double> out) {
    const std::size_t h = factors.latent_dim();
    if (out.size() != h) {
        throw DimensionError("factor_times_sparse: output length " + std::to_string(out.size()) +
                             " != h " + std::to_string(h));
    }
    if (x.min_dimension() > factors.n_features()) {
        throw DimensionError("factor_times_sparse: feature " + std::to_string(x.indices().back()) +
                             " outside factor matrix with n_F " +
                             std::to_string(factors.n_features()));
    }
    std::fill(out.begin(), out.end(), 0.0);
    auto idx = x.indices();
    auto val = x.values();
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto col = factors.column(idx[k]);
        const double scale = val[k];
        for (std::size_t r = 0; r < h; ++r) out[r] += scale * col[r];
    }
    count(idx.size() * h);
}

std::vector<double> factor_times_sparse(const DenseFactorMatrix& factors, const SparseVector& x) {
    std::vector<double> out(factors.latent_dim());
    factor_times_sparse(factors, x, out);
    return out;
}

double dense_dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
    count(n);
    return s;
}

// ---------------------------------------------------------------------------
// ItemFeatureMatrix

ItemFeatureMatrix::ItemFeatureMatrix(std::size_t n_features, std::vector<SparseVector> rows)
    : n_features_(n_features), rows_(std::move(rows)) {
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        if (rows_[i].min_dimension() > n_features_) {
            throw DimensionError("item " + std::to_string(i) + " has feature " +
                                 std::to_string(rows_[i].indices().back()) +
                                 " but n_features is " + std::to_string(n_features_));
        }
    }
}

const SparseVector& ItemFeatureMatrix::row(ItemId item) const {
    if (item >= rows_.size()) {
        throw DimensionError("item id " + std::to_string(item) + " out of range (n_items " +
                             std::to_string(rows_.size()) + ")");
    }
    return rows_[item];
}

std::size_t ItemFeatureMatrix::nnz() const noexcept {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.nnz();
    return n;
}

std::size_t ItemFeatureMatrix::empty_rows() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(rows_.begin(), rows_.end(), [](const SparseVector& r) { return r.empty(); }));
}

ItemFeatureMatrix ItemFeatureMatrix::l2_normalized() const {
    std::vector<SparseVector> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) {
        const double norm = std::sqrt(r.squared_norm());
        out.push_back(norm > 0.0 ? r.scaled(1.0 / norm) : r);
    }
    return ItemFeatureMatrix(n_features_, std::move(out));
}

SparseVector accumulate_user_vector(const ItemFeatureMatrix& features,
                                    std::span<const ItemId> items) {
    std::vector<std::pair<FeatureId, double>> entries;
    for (ItemId item : items) {
        const auto& row = features.row(item);
        for (std::size_t k = 0; k < row.nnz(); ++k)
            entries.emplace_back(row.indices()[k], row.values()[k]);
    }
    return SparseVector::from_entries(std::move(entries));
}

// ---------------------------------------------------------------------------
// PreferenceData

PreferenceData::PreferenceData(std::size_t n_users, std::size_t n_items,
                               std::vector<std::vector<ItemId>> positives,
                               std::vector<std::vector<ItemId>> explicit_negatives)
    : n_items_(n_items), positives_(std::move(positives)), negatives_(std::move(explicit_negatives)) {
    positives_.resize(n_users);
    if (!negatives_.empty()) negatives_.resize(n_users);
    auto normalize = [&](std::vector<ItemId>& list, UserId u) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
        if (!list.empty() && list.back() >= n_items_) {
            throw DimensionError("user " + std::to_string(u) + " references item " +
                                 std::to_string(list.back()) + " but n_items is " +
                                 std::to_string(n_items_));
        }
    };
    for (UserId u = 0; u < positives_.size(); ++u) {
        normalize(positives_[u], u);
        nnz_ += positives_[u].size();
    }
    for (UserId u = 0; u < negatives_.size(); ++u) {
        normalize(negatives_[u], u);
        for (ItemId j : negatives_[u]) {
            if (std::binary_search(positives_[u].begin(), positives_[u].end(), j)) {
                throw DimensionError("user " + std::to_string(u) + " has item " +
                                     std::to_string(j) + " as both positive and negative");
            }
        }
    }
}

std::span<const ItemId> PreferenceData::positives(UserId user) const {
    if (user >= positives_.size()) {
        throw DimensionError("user id " + std::to_string(user) + " out of range (n_users " +
                             std::to_string(positives_.size()) + ")");
    }
    return positives_[user];
}

std::span<const ItemId> PreferenceData::explicit_negatives(UserId user) const {
    if (negatives_.empty()) return {};
    if (user >= negatives_.size()) {
        throw DimensionError("user id " + std::to_string(user) + " out of range");
    }
    return negatives_[user];
}

bool PreferenceData::is_positive(UserId user, ItemId item) const {
    if (user >= positives_.size()) return false;
    const auto& p = positives_[user];
    return std::binary_search(p.begin(), p.end(), item);
}

std::size_t PreferenceData::active_users() const noexcept {
    return static_cast<std::size_t>(std::count_if(
        positives_.begin(), positives_.end(), [](const auto& p) { return !p.empty(); }));
}

PreferenceData PreferenceData::restricted_to(const std::vector<bool>& keep) const {
    if (keep.size() != n_items_) {
        throw DimensionError("restricted_to: mask length " + std::to_string(keep.size()) +
                             " != n_items " + std::to_string(n_items_));
    }
    auto filter = [&](const std::vector<std::vector<ItemId>>& lists) {
        std::vector<std::vector<ItemId>> out(lists.size());
        for (std::size_t u = 0; u < lists.size(); ++u)
            for (ItemId i : lists[u])
                if (keep[i]) out[u].push_back(i);
        return out;
    };
    return PreferenceData(n_users(), n_items_, filter(positives_), filter(negatives_));
}

std::vector<SparseVector> accumulate_user_vectors(const ItemFeatureMatrix& features,
                                                  const PreferenceData& prefs) {
    std::vector<SparseVector> out;
    out.reserve(prefs.n_users());
    for (UserId u = 0; u < prefs.n_users(); ++u)
        out.push_back(accumulate_user_vector(features, prefs.positives(u)));
    return out;
}

}  // namespace coldrec
