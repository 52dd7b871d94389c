#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "coldrec/error.hpp"

namespace coldrec {

using FeatureId = std::uint32_t;
using ItemId = std::uint32_t;
using UserId = std::uint32_t;

// =============================================================================
// Operation counters
//
// Every kernel below adds the number of scalar multiply-adds it performs to a
// thread-local counter. Complexity checks compare these counts instead of wall
// clock. The increment happens once per call, never inside the inner loop.
// =============================================================================

struct OpCounters {
    std::uint64_t multiply_adds = 0;
    std::uint64_t merge_steps = 0;
};

OpCounters& op_counters() noexcept;
void reset_op_counters() noexcept;

// =============================================================================
// SparseVector
//
// INVARIANT: indices strictly increasing, values.size() == indices.size(), no
// stored value equal to zero. Near-zero values are kept as-is.
// =============================================================================

class SparseVector {
public:
    SparseVector() = default;

    /// Sorts by index, sums duplicate indices and drops exact zeros.
    static SparseVector from_entries(std::vector<std::pair<FeatureId, double>> entries);

    /// Takes already sorted, duplicate-free data. Exact zeros are dropped.
    /// Throws DimensionError on unsorted or mismatched input.
    static SparseVector from_sorted(std::vector<FeatureId> indices, std::vector<double> values);

    /// Dense -> sparse, dropping exact zeros.
    static SparseVector from_dense(std::span<const double> dense);

    std::span<const FeatureId> indices() const noexcept { return indices_; }
    std::span<const double> values() const noexcept { return values_; }
    std::size_t nnz() const noexcept { return indices_.size(); }
    bool empty() const noexcept { return indices_.empty(); }

    /// One past the largest stored index (0 for the empty vector).
    std::size_t min_dimension() const noexcept {
        return indices_.empty() ? 0 : static_cast<std::size_t>(indices_.back()) + 1;
    }

    /// Value at `index`, 0 when not stored. O(log nnz).
    double at(FeatureId index) const noexcept;

    double squared_norm() const noexcept;
    SparseVector scaled(double factor) const;
    std::vector<double> to_dense(std::size_t n_features) const;

    friend bool operator==(const SparseVector&, const SparseVector&) = default;

private:
    std::vector<FeatureId> indices_;
    std::vector<double> values_;
};

/// sum_k a_k * b_k by merge-join over the two supports.
double sparse_dot(const SparseVector& a, const SparseVector& b) noexcept;

/// sum_k w_k * a_k * b_k. Throws DimensionError when a shared index is outside w.
double weighted_hadamard_dot(const SparseVector& a, const SparseVector& b,
                             std::span<const double> w);

SparseVector sparse_add(const SparseVector& a, const SparseVector& b);

/// a - b with exact-zero results pruned.
SparseVector sparse_sub(const SparseVector& a, const SparseVector& b);

/// Elementwise product (support is the intersection).
SparseVector sparse_hadamard(const SparseVector& a, const SparseVector& b);

// =============================================================================
// DenseFactorMatrix: h x n_F, stored column-major so that the latent factor
// v_p of feature p is a contiguous span of length h.
// =============================================================================

class DenseFactorMatrix {
public:
    DenseFactorMatrix() = default;
    DenseFactorMatrix(std::size_t h, std::size_t n_features)
        : h_(h), n_features_(n_features), data_(h * n_features, 0.0) {}

    std::size_t latent_dim() const noexcept { return h_; }
    std::size_t n_features() const noexcept { return n_features_; }

    std::span<const double> column(std::size_t p) const noexcept {
        return {data_.data() + p * h_, h_};
    }
    std::span<double> column(std::size_t p) noexcept { return {data_.data() + p * h_, h_}; }

    double operator()(std::size_t k, std::size_t p) const noexcept { return data_[p * h_ + k]; }
    double& operator()(std::size_t k, std::size_t p) noexcept { return data_[p * h_ + k]; }

    std::span<const double> raw() const noexcept { return data_; }
    std::span<double> raw() noexcept { return data_; }

    bool all_finite() const noexcept;

    friend bool operator==(const DenseFactorMatrix&, const DenseFactorMatrix&) = default;

private:
    std::size_t h_ = 0;
    std::size_t n_features_ = 0;
    std::vector<double> data_;
};

/// sum_{k in support(x)} x_k * v_k written into `out` (length h). O(nnz(x) * h).
void factor_times_sparse(const DenseFactorMatrix& factors, const SparseVector& x,
                         std::span<double> out);
std::vector<double> factor_times_sparse(const DenseFactorMatrix& factors, const SparseVector& x);

/// Plain dense dot product of two equal-length spans (counted).
double dense_dot(std::span<const double> a, std::span<const double> b) noexcept;

// =============================================================================
// ItemFeatureMatrix: one SparseVector per item, all indexed against n_features.
// =============================================================================

class ItemFeatureMatrix {
public:
    ItemFeatureMatrix() = default;

    /// Throws DimensionError if any row stores an index >= n_features.
    ItemFeatureMatrix(std::size_t n_features, std::vector<SparseVector> rows);

    std::size_t n_items() const noexcept { return rows_.size(); }
    std::size_t n_features() const noexcept { return n_features_; }

    const SparseVector& row(ItemId item) const;
    std::span<const SparseVector> rows() const noexcept { return rows_; }

    std::size_t nnz() const noexcept;
    std::size_t empty_rows() const noexcept;

    /// Every row scaled to unit Euclidean norm; empty rows stay empty.
    ItemFeatureMatrix l2_normalized() const;

private:
    std::size_t n_features_ = 0;
    std::vector<SparseVector> rows_;
};

/// f_u = sum of the feature vectors of `items`.
SparseVector accumulate_user_vector(const ItemFeatureMatrix& features,
                                    std::span<const ItemId> items);

// =============================================================================
// PreferenceData: binary user x item matrix, one sorted positive list per user
// and optionally one sorted explicit-negative list per user.
// =============================================================================

class PreferenceData {
public:
    PreferenceData() = default;

    /// Sorts and deduplicates each list. Throws DimensionError on an out of
    /// range item and on an item that is both positive and negative for a user.
    PreferenceData(std::size_t n_users, std::size_t n_items,
                   std::vector<std::vector<ItemId>> positives,
                   std::vector<std::vector<ItemId>> explicit_negatives = {});

    std::size_t n_users() const noexcept { return positives_.size(); }
    std::size_t n_items() const noexcept { return n_items_; }

    std::span<const ItemId> positives(UserId user) const;
    std::span<const ItemId> explicit_negatives(UserId user) const;
    bool has_explicit_negatives() const noexcept { return !negatives_.empty(); }

    bool is_positive(UserId user, ItemId item) const;

    /// Total number of positive entries.
    std::size_t nnz() const noexcept { return nnz_; }

    /// Users with at least one positive.
    std::size_t active_users() const noexcept;

    /// Keep only entries whose item satisfies `keep[item]`.
    PreferenceData restricted_to(const std::vector<bool>& keep) const;

private:
    std::size_t n_items_ = 0;
    std::size_t nnz_ = 0;
    std::vector<std::vector<ItemId>> positives_;
    std::vector<std::vector<ItemId>> negatives_;
};

/// f_u for every user of `prefs`.
std::vector<SparseVector> accumulate_user_vectors(const ItemFeatureMatrix& features,
                                                  const PreferenceData& prefs);

}  // namespace coldrec
