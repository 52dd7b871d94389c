#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "coldrec/scorer.hpp"
#include "coldrec/sparse.hpp"

namespace coldrec {

struct TopNList {
    std::vector<ItemId> items;
    std::vector<double> scores;
    bool truncated = false;  // fewer candidates than requested
};

/// The n best candidates by score, ties broken by ascending item id.
TopNList top_n(const Scorer& scorer, std::span<const ItemId> candidates, UserId user,
               std::size_t n);

/// Same ordering rule over precomputed scores (scores[k] belongs to candidates[k]).
TopNList top_n_from_scores(std::span<const ItemId> candidates, std::span<const double> scores,
                           std::size_t n);

enum class RecallDenominator {
    list_length,  // |top-n list| (hits per recommended slot)
    relevant,     // |relevant| (conventional recall)
};

/// Hits among the first n entries of `list`, divided per `denominator`.
/// `relevant` must be sorted. An empty list yields 0.
double recall_at_n(std::span<const ItemId> list, std::span<const ItemId> relevant, std::size_t n,
                   RecallDenominator denominator = RecallDenominator::list_length);

/// imp_1 + sum_{p=2..n} imp_p / log2(p), imp_p = 1/n for relevant items.
double dcg_at_n(std::span<const ItemId> list, std::span<const ItemId> relevant, std::size_t n);

/// Largest DCG@n any list can reach: (1 + sum_{p=2..n} 1/log2 p) / n.
double dcg_upper_bound(std::size_t n);

struct UserMetrics {
    UserId user = 0;
    double rec = 0.0;
    double dcg = 0.0;
};

struct EvalReport {
    std::size_t n = 0;
    std::vector<UserMetrics> per_user;  // ascending user id
    double mean_rec = 0.0;
    double mean_dcg = 0.0;
    std::size_t n_users_evaluated = 0;
    bool no_evaluable_users = false;
};

struct EvalOptions {
    std::size_t workers = 1;
    RecallDenominator denominator = RecallDenominator::list_length;
};

/// Ranks `candidates` for every user with at least one positive in
/// `eval_prefs` and averages Rec@n and DCG@n over those users. Results do not
/// depend on the worker count.
EvalReport evaluate(const Scorer& scorer, const PreferenceData& eval_prefs,
                    std::span<const ItemId> candidates, std::size_t n,
                    const EvalOptions& options = {});

/// Tab-separated `user rec dcg` rows followed by `MEAN rec dcg`. Lines in
/// `header` are written first as `# ` comments. `user_names` may be empty.
void write_report(std::ostream& out, const EvalReport& report,
                  std::span<const std::string> user_names = {},
                  std::span<const std::string> header = {});

/// One JSON object per user plus a final {"mean": ...} object.
void write_report_jsonl(std::ostream& out, const EvalReport& report,
                        std::span<const std::string> user_names = {});

struct ReportSummary {
    double mean_rec = 0.0;
    double mean_dcg = 0.0;
};

/// Reads the MEAN row of a report written by write_report.
ReportSummary read_report_summary(std::istream& in, const std::string& source);

/// Arithmetic mean of per-split means.
ReportSummary aggregate_reports(std::span<const ReportSummary> reports);

}  // namespace coldrec
