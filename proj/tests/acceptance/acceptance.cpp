// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "coldrec/baselines.hpp"
#include "coldrec/data_io.hpp"
#include "coldrec/diagnostics.hpp"
#include "coldrec/evaluator.hpp"
#include "coldrec/fbsm.hpp"
#include "coldrec/synthetic.hpp"
#include "coldrec/trainer.hpp"
#include "cli.hpp"

using namespace coldrec;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
    return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* spec, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, x);
    return buf;
}

// 1 -------------------------------------------------------------------------
Outcome gradients() {
    const auto start = Clock::now();
    GradcheckReport worst;
    worst.passed = true;
    std::size_t trials = 0;
    // Two configurations covering the required envelope.
    for (auto [nf, h, seed] : {std::tuple{32, 4, 1}, std::tuple{64, 8, 2}}) {
        GradcheckOptions opt;
        opt.n_features = static_cast<std::size_t>(nf);
        opt.latent_dim = static_cast<std::size_t>(h);
        opt.trials = 100;
        opt.max_nnz = 16;
        opt.seed = static_cast<std::uint64_t>(seed);
        const GradcheckReport r = run_gradcheck(opt);
        trials += r.trials;
        worst.max_error_d = std::max(worst.max_error_d, r.max_error_d);
        worst.max_error_v = std::max(worst.max_error_v, r.max_error_v);
        worst.passed = worst.passed && r.max_error_d <= 1e-5 && r.max_error_v <= 1e-5;
    }
    const double secs = seconds_since(start);
    return {worst.passed && secs < 10.0,
            std::to_string(trials) + " instances, max rel err d " + fmt("%.2e", worst.max_error_d) +
                ", V " + fmt("%.2e", worst.max_error_v) + ", " + fmt("%.2f", secs) + " s"};
}

// 2 -------------------------------------------------------------------------
Outcome fast_path() {
    const auto start = Clock::now();
    Rng rng(11);
    TripletWorkspace ws;
    double worst = 0.0;
    const std::size_t trials = 2000;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t nf = 8 + rng.uniform_index(57);
        const std::size_t h = rng.uniform_index(9);
        const auto inst = random_triplet_instance(nf, 16, 1 + rng.uniform_index(8), rng);
        const FbsmModel model = random_model(nf, h, rng);
        const SparseVector f_u = accumulate_user_vector(inst.features, inst.prefs.positives(inst.user));
        ws.prepare(model, f_u, inst.features.row(inst.positive), inst.features.row(inst.negative));
        const double fast = relative_rank(model, ws);
        const double oracle = dense_oracle_relative_rank(model, inst.features, inst.prefs, inst.user,
                                                         inst.positive, inst.negative);
        worst = std::max(worst, relative_error(fast, oracle));
    }
    const double secs = seconds_since(start);
    return {worst <= 1e-9 && secs < 10.0, std::to_string(trials) + " triplets, max rel err " +
                                              fmt("%.2e", worst) + ", " + fmt("%.2f", secs) + " s"};
}

// 3 -------------------------------------------------------------------------
Outcome reductions() {
    PlantedConfig pc;
    pc.seed = 3;
    const PlantedData data = make_planted_dataset(pc);
    const std::size_t n_f = data.features.n_features();
    std::vector<ItemId> all(data.features.n_items());
    for (ItemId i = 0; i < all.size(); ++i) all[i] = i;

    // (a) FBSM with d = 1, V = 0 on normalized features against CoSim.
    const ItemFeatureMatrix normalized = data.features.l2_normalized();
    const FbsmModel identity(std::vector<double>(n_f, 1.0), DenseFactorMatrix(0, n_f));
    const UserProfiles norm_profiles(normalized, data.prefs);
    const FbsmScorer fbsm_cos(identity, normalized, norm_profiles);
    const CosineScorer cosim(data.features, data.prefs);
    std::size_t mismatched_scores = 0;
    std::vector<double> a(all.size()), b(all.size());
    for (UserId u = 0; u < data.prefs.n_users(); ++u) {
        fbsm_cos.score(u, all, a);
        cosim.score(u, all, b);
        for (std::size_t k = 0; k < all.size(); ++k)
            if (std::memcmp(&a[k], &b[k], sizeof(double)) != 0) ++mismatched_scores;
    }

    // (b) Diagonal-only FBSM against single-function UFSM with equal weights.
    Rng rng(5);
    std::vector<double> w(n_f);
    for (double& x : w) x = rng.uniform(0.0, 2.0);
    const FbsmModel diagonal(w, DenseFactorMatrix(0, n_f));
    const LinearSimilarityModel linear(1, n_f, w, std::vector<double>(data.prefs.n_users(), 1.0));
    const UserProfiles profiles(data.features, data.prefs);
    const FbsmScorer fbsm_diag(diagonal, data.features, profiles);
    const LinearScorer ufsm(linear, data.features, profiles);
    std::size_t mismatched_rankings = 0;
    for (UserId u = 0; u < data.prefs.n_users(); ++u) {
        const TopNList x = top_n(fbsm_diag, all, u, all.size());
        const TopNList y = top_n(ufsm, all, u, all.size());
        if (x.items != y.items) ++mismatched_rankings;
    }
    return {mismatched_scores == 0 && mismatched_rankings == 0,
            "(a) " + std::to_string(mismatched_scores) + " score mismatches over " +
                std::to_string(all.size() * data.prefs.n_users()) + "; (b) " +
                std::to_string(mismatched_rankings) + " ranking mismatches over " +
                std::to_string(data.prefs.n_users()) + " users"};
}

// 4 -------------------------------------------------------------------------
struct PlantedScores {
    double fbsm = 0.0, diagonal = 0.0, cosim = 0.0;
};

double test_recall(const Scorer& scorer, const SplitResult& split) {
    return evaluate(scorer, split.test, split.items.test_items, 10).mean_rec;
}

Outcome planted() {
    const auto start = Clock::now();
    PlantedConfig pc;
    const PlantedData data = make_planted_dataset(pc);

    PlantedScores mean;
    std::string per_seed;
    for (std::uint64_t seed : {1, 2, 3}) {
        const SplitResult split = split_by_items(data.prefs, data.item_names, {0.6, 0.2, 0.2}, seed);
        const TrainingData td{data.features, split.train, split.items.train_items, split.validation,
                              split.items.validation_items};
        const UserProfiles profiles(data.features, split.train);

        TrainConfig cfg;
        cfg.seed = seed;
        cfg.alpha_d = 0.005;
        cfg.alpha_v = 0.01;
        cfg.lambda_v = 0.01;
        cfg.beta_d = 0.01;
        cfg.max_epochs = 60;
        cfg.patience = 10;

        cfg.latent_dim = 5;
        const auto full = train_fbsm(td, cfg);
        cfg.latent_dim = 0;
        const auto diag = train_fbsm(td, cfg);

        const double r_full = test_recall(FbsmScorer(full.model, data.features, profiles), split);
        const double r_diag = test_recall(FbsmScorer(diag.model, data.features, profiles), split);
        const double r_cos = test_recall(CosineScorer(data.features, split.train), split);
        mean.fbsm += r_full / 3.0;
        mean.diagonal += r_diag / 3.0;
        mean.cosim += r_cos / 3.0;
        per_seed += " [seed " + std::to_string(seed) + ": " + fmt("%.4f", r_full) + "/" +
                    fmt("%.4f", r_diag) + "/" + fmt("%.4f", r_cos) + "]";
    }
    const double secs = seconds_since(start);
    const double ratio = mean.diagonal > 0.0 ? mean.fbsm / mean.diagonal : 0.0;
    const bool pass = ratio >= 1.15 && mean.fbsm > mean.cosim && mean.diagonal > mean.cosim && secs < 300.0;
    return {pass, "Rec@10 h=5 " + fmt("%.4f", mean.fbsm) + ", h=0 " + fmt("%.4f", mean.diagonal) +
                      ", cosim " + fmt("%.4f", mean.cosim) + ", ratio " + fmt("%.3f", ratio) + ", " +
                      fmt("%.1f", secs) + " s;" + per_seed};
}

// 5 -------------------------------------------------------------------------
struct MetricCase {
    std::vector<ItemId> list;
    std::vector<ItemId> relevant;  // sorted
    std::size_t n;
    double rec;                    // list-length denominator
    double rec_relevant;           // |relevant| denominator
    double dcg;
};

Outcome metrics() {
    const double l3 = std::log2(3.0), l4 = 2.0, l5 = std::log2(5.0), l6 = std::log2(6.0),
                 l7 = std::log2(7.0), l8 = 3.0, l9 = std::log2(9.0), l10 = std::log2(10.0);
    const std::vector<ItemId> ten{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    const std::vector<MetricCase> cases{
        // 1. all relevant
        {ten, ten, 10, 1.0, 1.0,
         0.1 + 0.1 + 0.1 / l3 + 0.1 / l4 + 0.1 / l5 + 0.1 / l6 + 0.1 / l7 + 0.1 / l8 + 0.1 / l9 + 0.1 / l10},
        // 2. none relevant
        {ten, {20, 21}, 10, 0.0, 0.0, 0.0},
        // 3. three hits in ten
        {ten, {1, 4, 8}, 10, 0.3, 1.0, 0.1 + 0.1 / l5 + 0.1 / l9},
        // 4. only rank 1
        {ten, {0}, 10, 0.1, 1.0, 0.1},
        // 5. only rank 2 (log2 2 = 1)
        {ten, {1}, 10, 0.1, 1.0, 0.1},
        // 6. ranks 1 and 4
        {ten, {0, 3}, 10, 0.2, 1.0, 0.1 + 0.1 / l4},
        // 7. n = 1, hit
        {{7}, {7}, 1, 1.0, 1.0, 1.0},
        // 8. n = 1, miss
        {{7}, {8}, 1, 0.0, 0.0, 0.0},
        // 9. list shorter than n: denominator is the list length
        {{3, 5, 9}, {5}, 10, 1.0 / 3.0, 1.0, 0.1},
        // 10. list longer than n: only the first n count
        {ten, {0, 6, 9}, 5, 0.2, 1.0 / 3.0, 0.2},
        // 11. relevant item just past the cutoff
        {ten, {5}, 5, 0.0, 0.0, 0.0},
        // 12. rank 3 only
        {ten, {2}, 10, 0.1, 1.0, 0.1 / l3},
        // 13. last rank only
        {ten, {9}, 10, 0.1, 1.0, 0.1 / l10},
        // 14. empty list
        {{}, {1, 2}, 10, 0.0, 0.0, 0.0},
        // 15. empty relevant set
        {ten, {}, 10, 0.0, 0.0, 0.0},
        // 16. n = 2, both relevant (undiscounted ranks 1 and 2)
        {{4, 2}, {2, 4}, 2, 1.0, 1.0, 1.0},
        // 17. many relevant, few hits
        {{10, 11, 12, 13}, {11, 13, 20, 21, 22, 23, 24, 25}, 4, 0.5, 0.25, 0.25 + 0.25 / l4},
        // 18. unordered ids
        {{9, 3, 7, 1, 5}, {1, 3}, 5, 0.4, 1.0, 0.2 + 0.2 / l4},
        // 19. half the list
        {ten, {0, 2, 4, 6, 8}, 10, 0.5, 1.0, 0.1 + 0.1 / l3 + 0.1 / l5 + 0.1 / l7 + 0.1 / l9},
        // 20. n = 3, ranks 2 and 3
        {{0, 1, 2}, {1, 2}, 3, 2.0 / 3.0, 1.0, 1.0 / 3.0 + (1.0 / 3.0) / l3},
    };
    std::size_t bad = 0;
    std::string first_bad;
    for (std::size_t k = 0; k < cases.size(); ++k) {
        const auto& c = cases[k];
        const double rec = recall_at_n(c.list, c.relevant, c.n);
        const double rec_rel = recall_at_n(c.list, c.relevant, c.n, RecallDenominator::relevant);
        const double dcg = dcg_at_n(c.list, c.relevant, c.n);
        if (rec != c.rec || rec_rel != c.rec_relevant || dcg != c.dcg) {
            ++bad;
            if (first_bad.empty())
                first_bad = "; first mismatch case " + std::to_string(k + 1) + " rec " + fmt("%.17g", rec) +
                            " dcg " + fmt("%.17g", dcg);
        }
    }
    return {bad == 0, std::to_string(cases.size()) + " configurations, " + std::to_string(bad) +
                          " mismatches" + first_bad};
}

// 6 -------------------------------------------------------------------------
Outcome complexity() {
    Rng rng(17);

    // Profiles of 1..1000 items over one shared 16-feature support: f_u keeps
    // the same support, so the per-triplet cost must not move.
    const std::size_t nf = 256, h = 8;
    const FbsmModel model = random_model(nf, h, rng);
    const SparseVector pattern = random_sparse_vector(nf, 16, rng, 16);
    std::vector<std::uint64_t> costs;
    for (std::size_t profile : {1, 10, 100, 1000}) {
        std::vector<SparseVector> rows;
        for (std::size_t k = 0; k < profile + 1; ++k) {
            std::vector<std::pair<FeatureId, double>> e;
            for (FeatureId p : pattern.indices()) e.emplace_back(p, rng.uniform(0.5, 1.5));
            rows.push_back(SparseVector::from_entries(std::move(e)));
        }
        const ItemFeatureMatrix fm(nf, std::move(rows));
        std::vector<ItemId> ids(profile);
        for (ItemId k = 0; k < profile; ++k) ids[k] = k;
        const SparseVector f_u = accumulate_user_vector(fm, ids);
        TripletWorkspace ws;
        const OpCounters before = op_counters();
        ws.prepare(model, f_u, fm.row(0), fm.row(static_cast<ItemId>(profile)));
        (void)triplet_kernel_cost(model, ws);
        costs.push_back(op_counters().multiply_adds - before.multiply_adds);
    }
    const bool independent = std::all_of(costs.begin(), costs.end(), [&](auto c) { return c == costs.front(); });

    // 3x3 grid at nnz = n_F / 4: cost / (n_F * h) must stay flat or fall.
    double max_ratio = 0.0, min_ratio = 1e300;
    double first = 0.0, last = 0.0;
    for (std::size_t n : {64, 128, 256}) {
        for (std::size_t k : {2, 4, 8}) {
            const std::size_t nnz = n / 4;
            const FbsmModel m = random_model(n, k, rng);
            const SparseVector f_u = random_sparse_vector(n, nnz, rng, nnz);
            const SparseVector f_i = random_sparse_vector(n, nnz, rng, nnz);
            const SparseVector f_j = random_sparse_vector(n, nnz, rng, nnz);
            TripletWorkspace ws;
            const OpCounters before = op_counters();
            ws.prepare(m, f_u, f_i, f_j);
            (void)triplet_kernel_cost(m, ws);
            const double total = static_cast<double>(op_counters().multiply_adds - before.multiply_adds);
            const double ratio = total / static_cast<double>(n * k);
            if (n == 64 && k == 2) first = ratio;
            last = ratio;
            max_ratio = std::max(max_ratio, ratio);
            min_ratio = std::min(min_ratio, ratio);
        }
    }
    const bool linear = last <= first * 1.05 && max_ratio <= first * 1.05;
    return {independent && linear,
            "cost over profiles 1/10/100/1000: " + std::to_string(costs[0]) + "/" + std::to_string(costs[1]) +
                "/" + std::to_string(costs[2]) + "/" + std::to_string(costs[3]) +
                " multiply-adds; ops/(n_F*h) in [" + fmt("%.3f", min_ratio) + ", " + fmt("%.3f", max_ratio) + "]"};
}

// 7 -------------------------------------------------------------------------
std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "coldrec_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);

    PlantedConfig pc;
    pc.seed = 21;
    const PlantedData data = make_planted_dataset(pc);
    IdMap items, users;
    for (const auto& name : data.item_names) items.add(name);
    for (UserId u = 0; u < data.prefs.n_users(); ++u) users.add("user" + std::to_string(u));
    write_sparse_features(dir / "features.tsv", data.features, items);
    write_preferences(dir / "prefs.tsv", data.prefs, users, items);

    std::ostringstream sink;
    auto run = [&](std::vector<std::string> args) { return run_cli(args, sink, sink); };
    int rc = run({"split", "--prefs", (dir / "prefs.tsv").string(), "--features",
                  (dir / "features.tsv").string(), "--out-dir", dir.string(), "--seed", "4"});
    for (const char* tag : {"a", "b"}) {
        rc |= run({"train", "--model", "fbsm", "--features", (dir / "features.tsv").string(), "--train",
                   (dir / "train.tsv").string(), "--val", (dir / "val.tsv").string(), "--manifest",
                   (dir / "manifest.tsv").string(), "--h", "5", "--alpha-d", "0.005", "--alpha-v", "0.01",
                   "--lambda", "0.01", "--beta", "0.01", "--seed", "99", "--out",
                   (dir / (std::string("model_") + tag + ".bin")).string(), "--log",
                   (dir / (std::string("log_") + tag + ".tsv")).string()});
    }
    const std::string ma = slurp(dir / "model_a.bin"), mb = slurp(dir / "model_b.bin");
    const std::string la = slurp(dir / "log_a.tsv"), lb = slurp(dir / "log_b.tsv");
    fs::remove_all(dir);
    const bool pass = rc == 0 && !ma.empty() && !la.empty() && ma == mb && la == lb;
    return {pass, "exit " + std::to_string(rc) + ", model " + std::to_string(ma.size()) + " bytes " +
                      (ma == mb ? "identical" : "DIFFER") + ", log " + std::to_string(la.size()) +
                      " bytes " + (la == lb ? "identical" : "DIFFER")};
}

// 8 -------------------------------------------------------------------------
Outcome single_step() {
    // Three features, h = 2. Profile {item0, item1}; positive item0, negative item2.
    const std::size_t nf = 3;
    const ItemFeatureMatrix fm(nf, {SparseVector::from_entries({{0, 1.0}, {1, 2.0}}),
                                    SparseVector::from_entries({{1, 1.0}, {2, -1.0}}),
                                    SparseVector::from_entries({{0, 0.5}, {2, 3.0}})});
    const PreferenceData prefs(1, 3, {{0, 1}});
    const std::vector<double> d0{0.5, -0.25, 1.0};
    DenseFactorMatrix v0(2, nf);
    const double vv[2][3] = {{0.1, -0.2, 0.3}, {0.4, 0.05, -0.6}};
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t p = 0; p < nf; ++p) v0(k, p) = vv[k][p];

    TrainConfig cfg;
    cfg.alpha_d = 0.1;
    cfg.alpha_v = 0.01;
    cfg.beta_d = 0.3;
    cfg.lambda_v = 0.2;
    cfg.latent_dim = 2;
    cfg.lazy_regularization = false;

    // Closed form by hand on dense vectors.
    const double fi[3] = {1.0, 2.0, 0.0}, fj[3] = {0.5, 0.0, 3.0};
    const double fu[3] = {1.0, 3.0, -1.0};  // f_item0 + f_item1
    double delta[3];
    for (int p = 0; p < 3; ++p) delta[p] = fi[p] - fj[p];
    auto vmul = [&](const double* x, double* out) {
        for (int k = 0; k < 2; ++k) {
            out[k] = 0.0;
            for (int p = 0; p < 3; ++p) out[k] += vv[k][p] * x[p];
        }
    };
    double vfu[2], vfi[2], vdelta[2];
    vmul(fu, vfu);
    vmul(fi, vfi);
    vmul(delta, vdelta);
    double r = 0.0;
    for (int p = 0; p < 3; ++p) r += d0[p] * (delta[p] * fu[p] - fi[p] * fi[p]);
    for (int k = 0; k < 2; ++k) r += vdelta[k] * vfu[k] - vfi[k] * vfi[k];
    const double tau = 1.0 / (1.0 + std::exp(r));

    double d1[3], v1[2][3];
    for (int p = 0; p < 3; ++p) {
        const double g = delta[p] * fu[p] - fi[p] * fi[p];
        d1[p] = d0[p] + cfg.alpha_d * (tau * g - 2.0 * cfg.beta_d * d0[p]);
        for (int k = 0; k < 2; ++k) {
            const double gv = delta[p] * vfu[k] + fu[p] * vdelta[k] - 2.0 * fi[p] * vfi[k];
            v1[k][p] = vv[k][p] + cfg.alpha_v * (tau * gv - 2.0 * cfg.lambda_v * vv[k][p]);
        }
    }

    double worst = 0.0;
    for (bool lazy : {false, true}) {
        FbsmModel model(d0, v0);
        TrainConfig c = cfg;
        c.lazy_regularization = lazy;
        FbsmSgd sgd(model, c);
        const SparseVector f_u = accumulate_user_vector(fm, prefs.positives(0));
        sgd.step({0, 0, 2}, f_u, fm.row(0), fm.row(2));
        sgd.flush();
        for (std::size_t p = 0; p < nf; ++p) {
            worst = std::max(worst, std::abs(model.diagonal()[p] - d1[p]));
            for (std::size_t k = 0; k < 2; ++k)
                worst = std::max(worst, std::abs(model.factors()(k, p) - v1[k][p]));
        }
    }
    return {worst <= 1e-12, "max abs deviation " + fmt("%.2e", worst) + " (dense and lazy updates)"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"gradient suite", gradients},
        {"fast-path equivalence", fast_path},
        {"model-reduction identities", reductions},
        {"planted-structure recovery", planted},
        {"metric oracle", metrics},
        {"complexity counters", complexity},
        {"determinism", determinism},
        {"single-step SGD oracle", single_step},
    };
    std::vector<int> only;
    for (int k = 1; k < argc; ++k) only.push_back(std::atoi(argv[k]));

    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k + 1);
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %d %-28s %s  %s\n", id, criteria[k].first.c_str(), o.pass ? "PASS" : "FAIL",
                    o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
