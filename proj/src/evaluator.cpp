#include "coldrec/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace coldrec {

namespace {

std::string format_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::size_t count_hits(std::span<const ItemId> list, std::span<const ItemId> relevant,
                       std::size_t n) {
    std::size_t hits = 0;
    for (std::size_t p = 0; p < std::min(n, list.size()); ++p)
        if (std::binary_search(relevant.begin(), relevant.end(), list[p])) ++hits;
    return hits;
}

}  // namespace

TopNList top_n_from_scores(std::span<const ItemId> candidates, std::span<const double> scores,
                           std::size_t n) {
    if (candidates.size() != scores.size()) throw DimensionError("top_n: score count mismatch");
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t take = std::min(n, order.size());
    auto better = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return candidates[a] < candidates[b];
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      better);
    TopNList out;
    out.truncated = n > candidates.size();
    out.items.reserve(take);
    out.scores.reserve(take);
    for (std::size_t k = 0; k < take; ++k) {
        out.items.push_back(candidates[order[k]]);
        out.scores.push_back(scores[order[k]]);
    }
    return out;
}

TopNList top_n(const Scorer& scorer, std::span<const ItemId> candidates, UserId user,
               std::size_t n) {
    std::vector<double> scores(candidates.size());
    scorer.score(user, candidates, scores);
    return top_n_from_scores(candidates, scores, n);
}

double recall_at_n(std::span<const ItemId> list, std::span<const ItemId> relevant, std::size_t n,
                   RecallDenominator denominator) {
    if (n == 0) throw ConfigError("recall_at_n: n must be >= 1");
    const std::size_t len = std::min(n, list.size());
    if (len == 0) return 0.0;
    const double hits = static_cast<double>(count_hits(list, relevant, n));
    if (denominator == RecallDenominator::relevant) {
        return relevant.empty() ? 0.0 : hits / static_cast<double>(relevant.size());
    }
    return hits / static_cast<double>(len);
}

double dcg_at_n(std::span<const ItemId> list, std::span<const ItemId> relevant, std::size_t n) {
    if (n == 0) throw ConfigError("dcg_at_n: n must be >= 1");
    const double importance = 1.0 / static_cast<double>(n);
    double s = 0.0;
    for (std::size_t p = 1; p <= std::min(n, list.size()); ++p) {
        if (!std::binary_search(relevant.begin(), relevant.end(), list[p - 1])) continue;
        s += p == 1 ? importance : importance / std::log2(static_cast<double>(p));
    }
    return s;
}

double dcg_upper_bound(std::size_t n) {
    if (n == 0) return 0.0;
    double s = 1.0;
    for (std::size_t p = 2; p <= n; ++p) s += 1.0 / std::log2(static_cast<double>(p));
    return s / static_cast<double>(n);
}

EvalReport evaluate(const Scorer& scorer, const PreferenceData& eval_prefs,
                    std::span<const ItemId> candidates, std::size_t n,
                    const EvalOptions& options) {
    if (n == 0) throw ConfigError("evaluate: n must be >= 1");
    EvalReport report;
    report.n = n;

    std::vector<UserId> users;
    for (UserId u = 0; u < eval_prefs.n_users(); ++u)
        if (!eval_prefs.positives(u).empty()) users.push_back(u);
    report.per_user.resize(users.size());

    auto work = [&](std::size_t begin, std::size_t end) {
        std::vector<double> scores(candidates.size());
        for (std::size_t k = begin; k < end; ++k) {
            const UserId u = users[k];
            scorer.score(u, candidates, scores);
            const auto list = top_n_from_scores(candidates, scores, n);
            const auto relevant = eval_prefs.positives(u);
            report.per_user[k] = {u, recall_at_n(list.items, relevant, n, options.denominator),
                                  dcg_at_n(list.items, relevant, n)};
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, users.size()));
    if (workers <= 1) {
        work(0, users.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (users.size() + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(users.size(), begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(work, begin, end);
        }
        for (auto& t : pool) t.join();
    }

    report.n_users_evaluated = users.size();
    report.no_evaluable_users = users.empty();
    if (!users.empty()) {
        double rec = 0.0, dcg = 0.0;
        for (const auto& m : report.per_user) {
            rec += m.rec;
            dcg += m.dcg;
        }
        report.mean_rec = rec / static_cast<double>(users.size());
        report.mean_dcg = dcg / static_cast<double>(users.size());
    }
    return report;
}

void write_report(std::ostream& out, const EvalReport& report,
                  std::span<const std::string> user_names, std::span<const std::string> header) {
    for (const auto& line : header) out << "# " << line << '\n';
    for (const auto& m : report.per_user) {
        if (m.user < user_names.size())
            out << user_names[m.user];
        else
            out << m.user;
        out << '\t' << format_real(m.rec) << '\t' << format_real(m.dcg) << '\n';
    }
    out << "MEAN\t" << format_real(report.mean_rec) << '\t' << format_real(report.mean_dcg) << '\n';
}

void write_report_jsonl(std::ostream& out, const EvalReport& report,
                        std::span<const std::string> user_names) {
    for (const auto& m : report.per_user) {
        nlohmann::json row;
        if (m.user < user_names.size())
            row["user"] = user_names[m.user];
        else
            row["user"] = m.user;
        row["rec"] = m.rec;
        row["dcg"] = m.dcg;
        out << row.dump() << '\n';
    }
    nlohmann::json mean{{"mean", {{"rec", report.mean_rec}, {"dcg", report.mean_dcg}}},
                        {"n", report.n},
                        {"users", report.n_users_evaluated}};
    out << mean.dump() << '\n';
}

ReportSummary read_report_summary(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.rfind("MEAN\t", 0) != 0) continue;
        std::istringstream fields(line.substr(5));
        ReportSummary s;
        if (!(fields >> s.mean_rec >> s.mean_dcg)) {
            throw ParseError(source, line_no, "malformed MEAN row");
        }
        return s;
    }
    throw EmptyDataError(source + ": no MEAN row found");
}

ReportSummary aggregate_reports(std::span<const ReportSummary> reports) {
    if (reports.empty()) throw EmptyDataError("aggregate: no reports given");
    ReportSummary s;
    for (const auto& r : reports) {
        s.mean_rec += r.mean_rec;
        s.mean_dcg += r.mean_dcg;
    }
    s.mean_rec /= static_cast<double>(reports.size());
    s.mean_dcg /= static_cast<double>(reports.size());
    return s;
}

}  // namespace coldrec
