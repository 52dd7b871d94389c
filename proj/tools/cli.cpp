#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <ostream>
#include <sstream>

#include "coldrec/baselines.hpp"
#include "coldrec/data_io.hpp"
#include "coldrec/diagnostics.hpp"
#include "coldrec/error.hpp"
#include "coldrec/evaluator.hpp"
#include "coldrec/fbsm.hpp"
#include "coldrec/trainer.hpp"

namespace coldrec {
namespace {

namespace fs = std::filesystem;

std::string fmt(double x, const char* spec = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, x);
    return buf;
}

// Config echo: every option of the subcommand as `key=value`, output
// destinations excluded so reruns into other paths stay byte-identical.
std::vector<std::string> echo_config(const CLI::App& sub) {
    std::vector<std::string> lines{"command=" + sub.get_name()};
    std::istringstream in(sub.config_to_str(true, false));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '[') continue;
        line.erase(std::remove(line.begin(), line.end(), ' '), line.end());
        const std::string key = line.substr(0, line.find('='));
        if (key == "config" || key == "out" || key == "log" || key == "jsonl") continue;
        lines.push_back(line);
    }
    return lines;
}

void require_output_dir(const fs::path& path) {
    const fs::path parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
    if (!fs::is_directory(parent))
        throw ConfigError("output directory does not exist: " + parent.string());
}

PreferenceData pad_users(const PreferenceData& prefs, std::size_t n_users) {
    std::vector<std::vector<ItemId>> pos(n_users), neg(n_users);
    for (UserId u = 0; u < prefs.n_users(); ++u) {
        const auto p = prefs.positives(u);
        pos[u].assign(p.begin(), p.end());
        const auto n = prefs.explicit_negatives(u);
        neg[u].assign(n.begin(), n.end());
    }
    return PreferenceData(n_users, prefs.n_items(), std::move(pos), std::move(neg));
}

std::vector<ItemId> items_present(const PreferenceData& prefs) {
    std::vector<ItemId> items;
    for (UserId u = 0; u < prefs.n_users(); ++u) {
        for (ItemId i : prefs.positives(u)) items.push_back(i);
        for (ItemId i : prefs.explicit_negatives(u)) items.push_back(i);
    }
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    return items;
}

// Features plus a training file and one held-out file, loaded in a fixed
// order so user ids agree between `train` and `evaluate`.
struct LoadedRun {
    LoadedFeatures features;
    IdMap users;
    PreferenceData train;
    PreferenceData held_out;
    std::vector<ItemId> train_items;
    std::vector<ItemId> held_out_items;
};

enum class HeldOut { validation, test };

LoadedRun load_run(const std::string& features, const std::string& train,
                   const std::string& held_out, const std::string& manifest, HeldOut which,
                   const PreferenceLoadOptions& base, std::ostream& err) {
    LoadedRun run;
    run.features = load_sparse_features(features);
    for (const auto& w : run.features.warnings) err << "warning: " << w << '\n';
    PreferenceLoadOptions opts = base;
    opts.allow_new_items = false;
    IdMap items = run.features.items;
    PreferenceData train_prefs = load_preferences(train, opts, run.users, items);
    PreferenceData held_prefs = load_preferences(held_out, opts, run.users, items);
    run.train = pad_users(train_prefs, run.users.size());
    run.held_out = pad_users(held_prefs, run.users.size());
    if (!manifest.empty()) {
        ItemSplit split = read_split_manifest(manifest, items);
        run.train_items = std::move(split.train_items);
        run.held_out_items =
            which == HeldOut::validation ? std::move(split.validation_items) : std::move(split.test_items);
    } else {
        run.train_items = items_present(run.train);
        run.held_out_items = items_present(run.held_out);
    }
    if (run.train_items.empty()) throw EmptyDataError(train + ": no training items");
    if (run.held_out_items.empty()) throw EmptyDataError(held_out + ": no held-out items");
    return run;
}

// ---------------------------------------------------------------------------

struct PrepArgs {
    std::string terms, sparse, out, vocab;
    std::size_t min_df = 20;
    double max_frac = 0.20;
    bool smooth_idf = false, l2 = false;
};

int cmd_prep(const PrepArgs& a, std::ostream& out, std::ostream& err) {
    require_output_dir(a.out);
    if (!a.vocab.empty()) require_output_dir(a.vocab);
    ItemFeatureMatrix features;
    IdMap items;
    std::uint64_t hash = 0;
    if (!a.terms.empty()) {
        const TermBags bags = load_term_features(a.terms);
        TfidfOptions opt;
        opt.min_item_df = a.min_df;
        opt.max_item_fraction = a.max_frac;
        opt.smooth_idf = a.smooth_idf;
        opt.l2_normalize = a.l2;
        TfidfResult r = build_tfidf(bags, opt);
        if (r.empty_rows > 0) err << "warning: " << r.empty_rows << " items have no retained term\n";
        if (!a.vocab.empty()) write_vocabulary(a.vocab, r.vocabulary);
        hash = r.vocabulary.hash();
        features = std::move(r.features);
        items = bags.items;
    } else {
        LoadedFeatures loaded = load_sparse_features(a.sparse);
        for (const auto& w : loaded.warnings) err << "warning: " << w << '\n';
        features = a.l2 ? loaded.features.l2_normalized() : std::move(loaded.features);
        items = std::move(loaded.items);
        hash = loaded.feature_hash;
    }
    write_sparse_features(a.out, features, items, hash);
    const double cells = static_cast<double>(features.n_items()) * static_cast<double>(features.n_features());
    out << "n_items\t" << features.n_items() << '\n'
        << "n_features\t" << features.n_features() << '\n'
        << "density\t" << fmt(cells > 0 ? static_cast<double>(features.nnz()) / cells : 0.0, "%.6g")
        << '\n';
    return 0;
}

struct SplitArgs {
    std::string prefs, features, out_dir;
    std::vector<double> fractions{0.6, 0.2, 0.2};
    std::uint64_t seed = 1;
    double threshold = 3.0;
    bool keep_negatives = false;
};

int cmd_split(const SplitArgs& a, std::ostream& out) {
    if (a.fractions.size() != 3) throw ConfigError("--fractions needs three values");
    double total = 0.0;
    for (double f : a.fractions) {
        if (!(f >= 0.0)) throw ConfigError("--fractions must be nonnegative");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("--fractions must sum to 1");
    if (!fs::is_directory(a.out_dir)) throw ConfigError("output directory does not exist: " + a.out_dir);

    IdMap users, items;
    if (!a.features.empty()) items = load_sparse_features(a.features).items;
    PreferenceLoadOptions opt;
    opt.binarize_threshold = a.threshold;
    opt.keep_explicit_negatives = a.keep_negatives;
    const PreferenceData prefs = load_preferences(a.prefs, opt, users, items);
    const SplitResult s = split_by_items(prefs, items.names(),
                                         {a.fractions[0], a.fractions[1], a.fractions[2]}, a.seed);
    const fs::path dir(a.out_dir);
    write_preferences(dir / "train.tsv", s.train, users, items);
    write_preferences(dir / "val.tsv", s.validation, users, items);
    write_preferences(dir / "test.tsv", s.test, users, items);
    write_split_manifest(dir / "manifest.tsv", s.items, items);
    out << "train_items\t" << s.items.train_items.size() << '\n'
        << "val_items\t" << s.items.validation_items.size() << '\n'
        << "test_items\t" << s.items.test_items.size() << '\n';
    return 0;
}

struct TrainArgs {
    std::string model = "fbsm";
    std::string features, train, val, manifest, out, log;
    TrainConfig cfg;
    double mu_m = -1.0;
    double threshold = 3.0;
    bool keep_negatives = false, dense_reg = false, timing = false;
};

int cmd_train(TrainArgs a, const std::vector<std::string>& echo, std::ostream& out,
              std::ostream& err) {
    if (a.model == "cosim") throw ConfigError("cosim has no training; use `evaluate --cosim`");
    require_output_dir(a.out);
    if (!a.log.empty()) require_output_dir(a.log);
    if (a.mu_m >= 0.0) a.cfg.mu_m = a.mu_m;
    a.cfg.lazy_regularization = !a.dense_reg;
    a.cfg.validate();

    PreferenceLoadOptions opt;
    opt.binarize_threshold = a.threshold;
    opt.keep_explicit_negatives = a.keep_negatives;
    const LoadedRun run = load_run(a.features, a.train, a.val, a.manifest, HeldOut::validation, opt, err);
    const TrainingData data{run.features.features, run.train, run.train_items, run.held_out,
                            run.held_out_items};
    TrainHooks hooks;
    hooks.on_epoch = [&](const EpochLog& e) {
        err << "epoch " << e.epoch << "  loss " << fmt(e.loss, "%.6g") << "  val_rec "
            << fmt(e.val_rec) << '\n';
    };

    std::vector<EpochLog> log;
    std::size_t best = 0;
    std::string reason;
    if (a.model == "fbsm") {
        auto r = train_fbsm(data, a.cfg, hooks);
        save_model(a.out, r.model, run.features.feature_hash);
        log = std::move(r.log);
        best = r.best_epoch;
        reason = r.stop_reason;
    } else {
        auto r = train_ufsm(data, a.cfg, hooks);
        save_model(a.out, r.model, run.features.feature_hash);
        log = std::move(r.log);
        best = r.best_epoch;
        reason = r.stop_reason;
    }
    if (!a.log.empty()) {
        std::ofstream f(a.log);
        if (!f) throw ConfigError("cannot write " + a.log);
        write_training_log(f, log, a.timing, echo);
    }
    const auto& b = *std::find_if(log.begin(), log.end(), [&](const EpochLog& e) { return e.epoch == best; });
    out << "stop\t" << reason << '\n'
        << "best_epoch\t" << best << '\n'
        << "val_rec@" << a.cfg.eval_n << '\t' << fmt(b.val_rec) << '\n'
        << "val_dcg@" << a.cfg.eval_n << '\t' << fmt(b.val_dcg) << '\n';
    return 0;
}

struct EvalArgs {
    std::string model, features, train, test, manifest, out, jsonl;
    bool cosim = false, by_relevant = false, keep_negatives = false;
    std::size_t n = 10, workers = 1;
    double threshold = 3.0;
};

int cmd_evaluate(const EvalArgs& a, const std::vector<std::string>& echo, std::ostream& out,
                 std::ostream& err) {
    if (a.cosim == !a.model.empty()) throw ConfigError("give exactly one of --model or --cosim");
    if (a.n == 0) throw ConfigError("--n must be positive");
    if (!a.out.empty()) require_output_dir(a.out);
    if (!a.jsonl.empty()) require_output_dir(a.jsonl);

    PreferenceLoadOptions opt;
    opt.binarize_threshold = a.threshold;
    opt.keep_explicit_negatives = a.keep_negatives;
    const LoadedRun run = load_run(a.features, a.train, a.test, a.manifest, HeldOut::test, opt, err);
    const ItemFeatureMatrix& features = run.features.features;

    EvalOptions eo;
    eo.workers = a.workers;
    eo.denominator = a.by_relevant ? RecallDenominator::relevant : RecallDenominator::list_length;
    EvalReport report;
    if (a.cosim) {
        const CosineScorer scorer(features, run.train);
        report = evaluate(scorer, run.held_out, run.held_out_items, a.n, eo);
    } else {
        const LoadedModel m = load_model(a.model);
        check_model_matches(m, features, run.features.feature_hash);
        const UserProfiles profiles(features, run.train);
        if (m.kind == ModelKind::fbsm) {
            const FbsmScorer scorer(m.fbsm, features, profiles);
            report = evaluate(scorer, run.held_out, run.held_out_items, a.n, eo);
        } else {
            const LinearScorer scorer(m.ufsm, features, profiles);
            report = evaluate(scorer, run.held_out, run.held_out_items, a.n, eo);
        }
    }
    if (report.no_evaluable_users) err << "warning: no user has a held-out positive\n";
    if (!a.out.empty()) {
        std::ofstream f(a.out);
        write_report(f, report, run.users.names(), echo);
    }
    if (!a.jsonl.empty()) {
        std::ofstream f(a.jsonl);
        write_report_jsonl(f, report, run.users.names());
    }
    out << "users\t" << report.n_users_evaluated << '\n'
        << "Rec@" << a.n << '\t' << fmt(report.mean_rec) << '\n'
        << "DCG@" << a.n << '\t' << fmt(report.mean_dcg) << '\n';
    return 0;
}

int cmd_aggregate(const std::vector<std::string>& reports, std::ostream& out) {
    std::vector<ReportSummary> summaries;
    for (const auto& path : reports) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read " + path);
        summaries.push_back(read_report_summary(in, path));
    }
    const ReportSummary mean = aggregate_reports(summaries);
    out << "reports\t" << summaries.size() << '\n'
        << "mean_rec\t" << fmt(mean.mean_rec, "%.17g") << '\n'
        << "mean_dcg\t" << fmt(mean.mean_dcg, "%.17g") << '\n';
    return 0;
}

int cmd_gradcheck(const GradcheckOptions& opt, std::ostream& out, std::ostream& err) {
    const GradcheckReport r = run_gradcheck(opt);
    out << "trials\t" << r.trials << '\n'
        << "max_rel_err_d\t" << fmt(r.max_error_d, "%.3e") << '\n'
        << "max_rel_err_v\t" << fmt(r.max_error_v, "%.3e") << '\n'
        << "max_rel_err_rank\t" << fmt(r.max_error_rank, "%.3e") << '\n'
        << (r.passed ? "PASS" : "FAIL") << '\n';
    if (!r.passed) {
        err << "gradient check failed\n";
        return 3;
    }
    return 0;
}

int cmd_bench(const BenchOptions& opt, const std::string& out_path, std::ostream& out) {
    if (opt.n_features.empty() || opt.latent_dims.empty()) throw ConfigError("bench grid is empty");
    if (!(opt.nnz_ratio > 0.0 && opt.nnz_ratio <= 1.0)) throw ConfigError("--nnz-ratio must be in (0, 1]");
    if (!out_path.empty()) require_output_dir(out_path);
    const auto points = run_bench(opt);
    write_bench_table(out, points);
    if (!out_path.empty()) {
        std::ofstream f(out_path);
        write_bench_table(f, points);
    }
    for (std::size_t h : opt.latent_dims) {
        std::vector<double> x, t, ops;
        for (const auto& p : points) {
            if (p.latent_dim != h) continue;
            x.push_back(static_cast<double>(p.n_features));
            t.push_back(std::max(p.seconds_per_triplet, 1e-12));
            ops.push_back(static_cast<double>(p.multiply_adds));
        }
        if (x.size() < 2) continue;
        out << "slope_vs_n_features\th=" << h << "\ttime " << fmt(loglog_slope(x, t), "%.3f")
            << "\tops " << fmt(loglog_slope(x, ops), "%.3f") << '\n';
    }
    return 0;
}

int exit_code(const Error& e) {
    switch (e.category()) {
        case ErrorCategory::usage: return 1;
        case ErrorCategory::data: return 2;
        case ErrorCategory::numerical: return 3;
    }
    return 2;
}

void add_config(CLI::App* sub) {
    sub->add_option("--config", "Read `key = value` lines from FILE; flags win");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Replaces `--config FILE` after a subcommand by the options it lists.
std::vector<std::string> expand_config(CLI::App& app, const std::vector<std::string>& args) {
    if (args.empty()) return args;
    CLI::App* sub = app.get_subcommand_no_throw(args[0]);
    if (sub == nullptr || sub->get_option_no_throw("--config") == nullptr) return args;

    std::vector<std::string> rest;
    std::string file;
    for (std::size_t k = 1; k < args.size(); ++k) {
        if (args[k] == "--config") {
            if (k + 1 == args.size()) throw ConfigError("--config needs a file");
            file = args[++k];
        } else if (args[k].rfind("--config=", 0) == 0) {
            file = args[k].substr(9);
        } else {
            rest.push_back(args[k]);
        }
    }
    if (file.empty()) return args;

    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config file " + file);
    std::set<std::string> given;
    for (const auto& a : rest)
        if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));

    std::vector<std::string> expanded{args[0]};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(file + ":" + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        std::replace(key.begin(), key.end(), '_', '-');
        const CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr || key == "config")
            throw ConfigError(file + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
        if (given.count(key)) continue;
        if (opt->get_expected_min() == 0) {
            if (value == "true" || value == "1") expanded.push_back("--" + key);
            else if (value != "false" && value != "0")
                throw ConfigError(file + ":" + std::to_string(line_no) + ": flag '" + key + "' needs true or false");
        } else {
            expanded.push_back("--" + key + "=" + value);
        }
    }
    expanded.insert(expanded.end(), rest.begin(), rest.end());
    return expanded;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"coldrec: feature-based similarity models for cold-start items", "coldrec"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);

    // prep
    PrepArgs prep;
    auto* p = app.add_subcommand("prep", "Build a TF-IDF sparse-feature file");
    add_config(p);
    auto* in_group = p->add_option_group("input");
    in_group->add_option("--terms", prep.terms, "Term file: item<TAB>term<TAB>count")
        ->check(CLI::ExistingFile)->envname("COLDREC_TERMS");
    in_group->add_option("--sparse", prep.sparse, "Sparse-feature file to re-emit")
        ->check(CLI::ExistingFile)->envname("COLDREC_SPARSE");
    in_group->require_option(1);
    p->add_option("--out", prep.out, "Sparse-feature output")->required()->envname("COLDREC_OUT");
    p->add_option("--vocab", prep.vocab, "Vocabulary output")->envname("COLDREC_VOCAB");
    p->add_option("--min-df", prep.min_df, "Drop terms in fewer items")->capture_default_str()->check(CLI::PositiveNumber);
    p->add_option("--max-frac", prep.max_frac, "Drop terms in a larger fraction of items")
        ->capture_default_str()->check(CLI::Range(0.0, 1.0));
    p->add_flag("--smooth-idf", prep.smooth_idf, "Use ln(1 + n/df)");
    p->add_flag("--l2-normalize", prep.l2, "L2-normalize rows");

    // split
    SplitArgs split;
    auto* s = app.add_subcommand("split", "Split preferences by items into train/val/test");
    add_config(s);
    s->add_option("--prefs", split.prefs, "Preference file: user<TAB>item[<TAB>rating]")
        ->required()->check(CLI::ExistingFile)->envname("COLDREC_PREFS");
    s->add_option("--features", split.features, "Feature file; its items join the split")
        ->check(CLI::ExistingFile)->envname("COLDREC_FEATURES");
    s->add_option("--out-dir", split.out_dir, "Directory for train.tsv, val.tsv, test.tsv, manifest.tsv")
        ->required()->envname("COLDREC_OUT_DIR");
    s->add_option("--fractions", split.fractions, "Train, validation and test fractions")
        ->delimiter(',')->expected(3)->capture_default_str();
    s->add_option("--seed", split.seed, "Split seed")->capture_default_str();
    s->add_option("--threshold", split.threshold, "Ratings at or above are positive")->capture_default_str();
    s->add_flag("--keep-negatives", split.keep_negatives, "Keep ratings below the threshold as negatives");

    // train
    TrainArgs train;
    auto* t = app.add_subcommand("train", "Train an FBSM or UFSM model");
    add_config(t);
    t->add_option("--model", train.model, "Model kind")
        ->check(CLI::IsMember({"fbsm", "ufsm", "cosim"}))->capture_default_str();
    t->add_option("--features", train.features, "Sparse-feature file")
        ->required()->check(CLI::ExistingFile)->envname("COLDREC_FEATURES");
    t->add_option("--train", train.train, "Training preferences")
        ->required()->check(CLI::ExistingFile)->envname("COLDREC_TRAIN");
    t->add_option("--val", train.val, "Validation preferences")
        ->required()->check(CLI::ExistingFile)->envname("COLDREC_VAL");
    t->add_option("--manifest", train.manifest, "Split manifest (item partitions)")
        ->check(CLI::ExistingFile)->envname("COLDREC_MANIFEST");
    t->add_option("--out", train.out, "Model output")->required()->envname("COLDREC_MODEL_OUT");
    t->add_option("--log", train.log, "Training log output")->envname("COLDREC_LOG");
    t->add_option("--h", train.cfg.latent_dim, "Latent dimension (0 = diagonal only)")->capture_default_str();
    t->add_option("--lambda", train.cfg.lambda_v, "L2 weight on V")->capture_default_str();
    t->add_option("--beta", train.cfg.beta_d, "L2 weight on d")->capture_default_str();
    t->add_option("--alpha-d", train.cfg.alpha_d, "Learning rate of d (W for ufsm)")->capture_default_str();
    t->add_option("--alpha-v", train.cfg.alpha_v, "Learning rate of V (M for ufsm)")->capture_default_str();
    t->add_option("--l", train.cfg.n_functions, "Number of global functions (ufsm)")->capture_default_str();
    t->add_option("--mu-w", train.cfg.mu_w, "L2 weight on W (ufsm)")->capture_default_str();
    t->add_option("--mu-m", train.mu_m, "L2 weight on M (ufsm); negative means mu-w")->capture_default_str();
    t->add_option("--epochs", train.cfg.max_epochs, "Maximum epochs")->capture_default_str();
    t->add_option("--patience", train.cfg.patience, "Epochs without validation gain before stopping")
        ->capture_default_str();
    t->add_option("--seed", train.cfg.seed, "Seed")->capture_default_str();
    t->add_option("--n", train.cfg.eval_n, "Validation cutoff")->capture_default_str();
    t->add_option("--workers", train.cfg.workers, "Validation threads")->capture_default_str();
    t->add_option("--threshold", train.threshold, "Ratings at or above are positive")->capture_default_str();
    t->add_flag("--keep-negatives", train.keep_negatives, "Sample explicit negatives");
    t->add_flag("--dense-regularization", train.dense_reg, "Decay every parameter each step");
    t->add_flag("--timing", train.timing, "Write wall-clock seconds to the log");

    // evaluate
    EvalArgs ev;
    auto* e = app.add_subcommand("evaluate", "Score held-out items and report Rec@n and DCG@n");
    add_config(e);
    e->add_option("--model", ev.model, "Model file")->check(CLI::ExistingFile)->envname("COLDREC_MODEL");
    e->add_flag("--cosim", ev.cosim, "Use cosine similarity (no model file)");
    e->add_option("--features", ev.features, "Sparse-feature file")
        ->required()->check(CLI::ExistingFile)->envname("COLDREC_FEATURES");
    e->add_option("--train", ev.train, "Training preferences (user profiles)")
        ->required()->check(CLI::ExistingFile)->envname("COLDREC_TRAIN");
    e->add_option("--test", ev.test, "Held-out preferences")
        ->required()->check(CLI::ExistingFile)->envname("COLDREC_TEST");
    e->add_option("--manifest", ev.manifest, "Split manifest (item partitions)")
        ->check(CLI::ExistingFile)->envname("COLDREC_MANIFEST");
    e->add_option("--out", ev.out, "Report output")->envname("COLDREC_REPORT");
    e->add_option("--jsonl", ev.jsonl, "Per-user JSON lines output")->envname("COLDREC_JSONL");
    e->add_option("--n", ev.n, "List length")->capture_default_str();
    e->add_option("--workers", ev.workers, "Scoring threads")->capture_default_str();
    e->add_option("--threshold", ev.threshold, "Ratings at or above are positive")->capture_default_str();
    e->add_flag("--keep-negatives", ev.keep_negatives, "Keep ratings below the threshold");
    e->add_flag("--recall-by-relevant", ev.by_relevant, "Divide hits by |relevant| instead of list length");

    // aggregate
    std::vector<std::string> reports;
    auto* ag = app.add_subcommand("aggregate", "Average the means of several reports");
    ag->add_option("reports", reports, "Report files")->required()->check(CLI::ExistingFile);

    // gradcheck
    GradcheckOptions gc;
    auto* g = app.add_subcommand("gradcheck", "Finite-difference and dense-oracle checks");
    add_config(g);
    g->add_option("--n-features", gc.n_features, "Feature dimension")->capture_default_str();
    g->add_option("--h", gc.latent_dim, "Latent dimension")->capture_default_str();
    g->add_option("--trials", gc.trials, "Random instances")->capture_default_str();
    g->add_option("--max-nnz", gc.max_nnz, "Maximum nonzeros per item")->capture_default_str();
    g->add_option("--profile-size", gc.profile_size, "Items in the user profile")->capture_default_str();
    g->add_option("--step", gc.step, "Finite-difference step")->capture_default_str();
    g->add_option("--tol", gc.gradient_tolerance, "Gradient tolerance")->capture_default_str();
    g->add_option("--seed", gc.seed, "Seed")->capture_default_str();
    g->add_flag("--inject-sign-flip", gc.inject_sign_flip, "Negate the analytic V gradient");

    // bench
    BenchOptions bo;
    std::string bench_out;
    auto* b = app.add_subcommand("bench", "Time relative rank plus gradients on a grid");
    add_config(b);
    b->add_option("--n-features", bo.n_features, "Feature dimensions")->delimiter(',')->capture_default_str();
    b->add_option("--h", bo.latent_dims, "Latent dimensions")->delimiter(',')->capture_default_str();
    b->add_option("--nnz-ratio", bo.nnz_ratio, "Nonzeros per vector / n_features")->capture_default_str();
    b->add_option("--reps", bo.repetitions, "Repetitions per grid point")->capture_default_str();
    b->add_option("--seed", bo.seed, "Seed")->capture_default_str();
    b->add_option("--out", bench_out, "Table output")->envname("COLDREC_BENCH_OUT");

    try {
        const std::vector<std::string> expanded = expand_config(app, args);
        std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? 0 : 1;
    } catch (const ConfigError& ex) {
        err << "error: " << ex.what() << '\n';
        return 1;
    }

    try {
        if (*p) return cmd_prep(prep, out, err);
        if (*s) return cmd_split(split, out);
        if (*t) return cmd_train(train, echo_config(*t), out, err);
        if (*e) return cmd_evaluate(ev, echo_config(*e), out, err);
        if (*ag) return cmd_aggregate(reports, out);
        if (*g) return cmd_gradcheck(gc, out, err);
        if (*b) return cmd_bench(bo, bench_out, out);
    } catch (const Error& ex) {
        err << "error: " << ex.what() << '\n';
        return exit_code(ex);
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return 2;
    }
    return 1;
}

}  // namespace coldrec
