#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "coldrec/error.hpp"
#include "coldrec/synthetic.hpp"
#include "coldrec/trainer.hpp"

using namespace coldrec;

namespace {

std::vector<ItemId> iota_items(std::size_t n) {
    std::vector<ItemId> v(n);
    std::iota(v.begin(), v.end(), ItemId{0});
    return v;
}

// Planted data with the items cut into train and validation halves.
struct Fixture {
    PlantedData data = make_planted_dataset({});
    std::vector<ItemId> train_items, val_items;
    PreferenceData train, val;
    Fixture() {
        std::vector<bool> in_train(data.features.n_items()), in_val(data.features.n_items());
        for (ItemId i = 0; i < data.features.n_items(); ++i) {
            (i % 4 == 0 ? val_items : train_items).push_back(i);
            (i % 4 == 0 ? in_val : in_train)[i] = true;
        }
        train = data.prefs.restricted_to(in_train);
        val = data.prefs.restricted_to(in_val);
    }
    TrainingData view() const { return {data.features, train, train_items, val, val_items}; }
};

TrainConfig planted_config() {
    TrainConfig c;
    c.alpha_d = 0.005;
    c.alpha_v = 0.01;
    c.lambda_v = 0.01;
    c.beta_d = 0.01;
    c.max_epochs = 15;
    return c;
}

}  // namespace

TEST_CASE("bpr loss") {
    CHECK(bpr_term(0.0) == doctest::Approx(std::log(2.0)));
    CHECK(bpr_term(800.0) == doctest::Approx(0.0));
    CHECK(bpr_term(-800.0) == doctest::Approx(800.0));
    CHECK(std::isfinite(bpr_term(-1e6)));
    CHECK(bpr_weight(0.0) == 0.5);
    CHECK(bpr_weight(1e6) == 0.0);

    // Zero model: every relative rank is 0, so the loss is N ln 2.
    const PlantedData data = make_planted_dataset({});
    const std::size_t nf = data.features.n_features();
    const FbsmModel zero(std::vector<double>(nf, 0.0), DenseFactorMatrix(2, nf));
    const UserProfiles prof(data.features, data.prefs);
    std::vector<Triplet> sample;
    const auto& pos = data.prefs.positives(0);
    for (std::size_t k = 0; k < 7; ++k) sample.push_back({0, pos[k % pos.size()], 199});
    CHECK(bpr_loss(zero, data.features, prof, sample) == doctest::Approx(7 * std::log(2.0)));

    Rng rng(2);
    const auto m = random_model(nf, 3, rng);
    double direct = 0.0;
    for (const auto& t : sample) {
        const double r = score(m, data.features, prof, 0, t.positive, true) -
                         score(m, data.features, prof, 0, t.negative, true);
        direct += std::log1p(std::exp(-r));
    }
    CHECK(bpr_loss(m, data.features, prof, sample) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("triplet sampler") {
    SUBCASE("one positive, one unknown") {
        const PreferenceData p(1, 2, {{0}});
        const TripletSampler s(p, iota_items(2));
        Rng rng(1);
        for (int k = 0; k < 20; ++k) CHECK(*s.sample(0, rng) == Triplet{0, 0, 1});
    }
    SUBCASE("all items positive") {
        const PreferenceData p(1, 3, {{0, 1, 2}});
        const TripletSampler s(p, iota_items(3));
        Rng rng(1);
        CHECK_FALSE(s.sample(0, rng).has_value());
        CHECK_FALSE(s.sample_weighted(rng).has_value());
    }
    SUBCASE("explicit negatives are preferred") {
        const PreferenceData p(1, 5, {{0}}, {{3}});
        const TripletSampler s(p, iota_items(5));
        Rng rng(1);
        for (int k = 0; k < 20; ++k) CHECK(s.sample(0, rng)->negative == 3);
    }
    SUBCASE("negatives are uniform over unknown items") {
        const PreferenceData p(1, 11, {{0}});
        const TripletSampler s(p, iota_items(11));
        Rng rng(5);
        std::vector<double> counts(11, 0.0);
        const int draws = 10000;
        for (int k = 0; k < draws; ++k) counts[s.sample(0, rng)->negative] += 1.0;
        CHECK(counts[0] == 0.0);
        const double expected = draws / 10.0;
        double chi2 = 0.0;
        for (int j = 1; j < 11; ++j) chi2 += (counts[j] - expected) * (counts[j] - expected) / expected;
        CHECK(chi2 < 27.88);  // 9 dof, p = 0.001
    }
    SUBCASE("only training items are drawn") {
        const PreferenceData p(1, 6, {{0, 5}});
        const std::vector<ItemId> train{0, 1, 2};
        const TripletSampler s(p, train);
        CHECK(s.nnz() == 1);
        Rng rng(2);
        for (int k = 0; k < 50; ++k) {
            const auto t = s.sample_weighted(rng);
            CHECK(t->positive == 0);
            CHECK(t->negative <= 2);
        }
    }
}

TEST_CASE("frozen epochs leave the model unchanged") {
    const Fixture fx;
    const auto cfg = planted_config();
    const UserProfiles prof(fx.data.features, fx.train);
    const TripletSampler sampler(fx.train, fx.train_items);
    auto m = FbsmModel::initialized(fx.data.features.n_features(), 3, 1);
    const auto before = m;
    Rng rng(1);
    const auto stats = sgd_epoch(m, fx.data.features, prof, sampler, cfg, rng, true);
    CHECK(m == before);
    CHECK(stats.triplets == sampler.nnz());
    CHECK(stats.loss > 0.0);

    auto lin = LinearSimilarityModel::initialized(2, fx.data.features.n_features(), fx.train.n_users(), 1);
    const auto lbefore = lin;
    (void)sgd_epoch(lin, fx.data.features, prof, sampler, cfg, rng, true);
    CHECK(lin == lbefore);
}

TEST_CASE("single fbsm step by hand") {
    // n_F = 2, h = 1; f_u = (1, 1) holds i = (1, 0); j = (0, 1).
    TrainConfig cfg;
    cfg.alpha_d = 0.1;
    cfg.alpha_v = 0.2;
    cfg.beta_d = 0.5;
    cfg.lambda_v = 0.25;
    for (bool lazy : {true, false}) {
        cfg.lazy_regularization = lazy;
        DenseFactorMatrix v(1, 2);
        v(0, 0) = 0.3;
        v(0, 1) = -0.4;
        FbsmModel m({1.0, 2.0}, v);
        const auto fu = SparseVector::from_entries({{0, 1}, {1, 1}});
        const auto fi = SparseVector::from_entries({{0, 1}});
        const auto fj = SparseVector::from_entries({{1, 1}});
        FbsmSgd sgd(m, cfg);
        const auto r = sgd.step({0, 0, 1}, fu, fi, fj);
        sgd.flush();
        // delta = (1, -1); Vf_u = -0.1, Vf_i = 0.3, V delta = 0.7.
        const double rr = (1.0 * 1 - 2.0 * 1 - 1.0) + (0.7 * -0.1 - 0.3 * 0.3);
        CHECK(r.relative_rank == doctest::Approx(rr).epsilon(1e-14));
        const double tau = 1.0 / (1.0 + std::exp(rr));
        const double gd0 = 1 * 1 - 1, gd1 = -1 * 1;
        CHECK(m.diagonal()[0] == doctest::Approx(1.0 + 0.1 * (tau * gd0 - 2 * 0.5 * 1.0)).epsilon(1e-13));
        CHECK(m.diagonal()[1] == doctest::Approx(2.0 + 0.1 * (tau * gd1 - 2 * 0.5 * 2.0)).epsilon(1e-13));
        const double gv0 = 1 * -0.1 + 1 * 0.7 - 2 * 1 * 0.3, gv1 = -1 * -0.1 + 1 * 0.7;
        CHECK(m.factors()(0, 0) == doctest::Approx(0.3 + 0.2 * (tau * gv0 - 2 * 0.25 * 0.3)).epsilon(1e-13));
        CHECK(m.factors()(0, 1) == doctest::Approx(-0.4 + 0.2 * (tau * gv1 - 2 * 0.25 * -0.4)).epsilon(1e-13));
    }
}

TEST_CASE("lazy and dense regularization agree") {
    const Fixture fx;
    auto cfg = planted_config();
    const UserProfiles prof(fx.data.features, fx.train);
    const TripletSampler sampler(fx.train, fx.train_items);
    auto a = FbsmModel::initialized(fx.data.features.n_features(), 3, 4);
    auto b = a;
    Rng ra(9), rb(9);
    cfg.lazy_regularization = true;
    (void)sgd_epoch(a, fx.data.features, prof, sampler, cfg, ra);
    cfg.lazy_regularization = false;
    (void)sgd_epoch(b, fx.data.features, prof, sampler, cfg, rb);
    for (std::size_t p = 0; p < a.n_features(); ++p) CHECK(a.diagonal()[p] == doctest::Approx(b.diagonal()[p]).epsilon(1e-9));
    for (std::size_t k = 0; k < a.factors().raw().size(); ++k)
        CHECK(a.factors().raw()[k] == doctest::Approx(b.factors().raw()[k]).epsilon(1e-9));
}

TEST_CASE("training loop") {
    const Fixture fx;
    SUBCASE("patience with frozen parameters stops after two epochs") {
        auto cfg = planted_config();
        cfg.patience = 1;
        TrainHooks hooks;
        hooks.freeze_parameters = true;
        const auto r = train_fbsm(fx.view(), cfg, hooks);
        CHECK(r.stop_reason == "patience");
        CHECK(r.log.size() == 3);
        CHECK(r.best_epoch == 1);
        CHECK(r.model == FbsmModel::initialized(fx.data.features.n_features(), cfg.latent_dim, mix64(cfg.seed)));
    }
    SUBCASE("loss falls and validation improves on planted data") {
        const auto r = train_fbsm(fx.view(), planted_config());
        REQUIRE(r.log.size() > 10);
        CHECK(r.log[10].loss < r.log[1].loss);
        double best = 0.0;
        for (const auto& row : r.log) best = std::max(best, row.val_rec);
        CHECK(best > r.log[0].val_rec);
        CHECK(r.best_epoch >= 1);
        CHECK(r.model.all_finite());
    }
    SUBCASE("identical seeds give identical runs") {
        auto cfg = planted_config();
        cfg.max_epochs = 4;
        const auto a = train_fbsm(fx.view(), cfg);
        const auto b = train_fbsm(fx.view(), cfg);
        CHECK(a.model == b.model);
        std::ostringstream la, lb;
        write_training_log(la, a.log, false);
        write_training_log(lb, b.log, false);
        CHECK(la.str() == lb.str());
        cfg.workers = 3;
        const auto c = train_fbsm(fx.view(), cfg);
        CHECK(c.model == a.model);
    }
    SUBCASE("small rates stay finite for many epochs") {
        auto cfg = planted_config();
        cfg.alpha_d = cfg.alpha_v = 0.01;
        cfg.max_epochs = 100;
        cfg.patience = 100;
        cfg.convergence_tol = 0.0;
        const auto r = train_fbsm(fx.view(), cfg);
        for (const auto& row : r.log) CHECK(std::isfinite(row.loss));
    }
    SUBCASE("linear model trains too") {
        auto cfg = planted_config();
        cfg.n_functions = 2;
        cfg.mu_w = 0.01;
        cfg.max_epochs = 5;
        const auto r = train_ufsm(fx.view(), cfg);
        CHECK(r.model.all_finite());
        CHECK(r.log.size() >= 2);
    }
    SUBCASE("bad configurations") {
        auto cfg = planted_config();
        const PreferenceData empty(fx.val.n_users(), fx.val.n_items(),
                                   std::vector<std::vector<ItemId>>(fx.val.n_users()));
        const TrainingData d{fx.data.features, fx.train, fx.train_items, empty, fx.val_items};
        CHECK_THROWS_AS(train_fbsm(d, cfg), ConfigError);
        cfg.alpha_d = 0.0;
        CHECK_THROWS_AS(train_fbsm(fx.view(), cfg), ConfigError);
        cfg = planted_config();
        cfg.patience = 0;
        CHECK_THROWS_AS(train_fbsm(fx.view(), cfg), ConfigError);
    }
    SUBCASE("huge rates are reported as divergence") {
        auto cfg = planted_config();
        cfg.alpha_d = cfg.alpha_v = 1e6;
        cfg.max_epochs = 20;
        CHECK_THROWS_AS(train_fbsm(fx.view(), cfg), DivergenceError);
    }
}

TEST_CASE("training log format") {
    std::vector<EpochLog> log(2);
    log[1].epoch = 1;
    log[1].loss = 0.5;
    log[1].seconds = 3.0;
    std::ostringstream a, b;
    write_training_log(a, log, false, std::vector<std::string>{"seed=1"});
    write_training_log(b, log, true);
    CHECK(a.str().rfind("# seed=1\n", 0) == 0);
    CHECK(a.str().find("\t3\n") == std::string::npos);
    CHECK(b.str().find("\t3\n") != std::string::npos);
}
