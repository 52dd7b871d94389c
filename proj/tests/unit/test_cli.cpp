#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "coldrec/data_io.hpp"
#include "coldrec/synthetic.hpp"

using namespace coldrec;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// Planted data written to a scratch directory and split once.
struct CliFixture {
    fs::path dir;
    std::ostringstream out, err;

    CliFixture() {
        static int counter = 0;
        dir = fs::temp_directory_path() /
              ("coldrec_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(dir);
        PlantedConfig pc;
        pc.seed = 3;
        const PlantedData data = make_planted_dataset(pc);
        IdMap items, users;
        for (const auto& n : data.item_names) items.add(n);
        for (UserId u = 0; u < data.prefs.n_users(); ++u) users.add("u" + std::to_string(u));
        write_sparse_features(dir / "features.tsv", data.features, items);
        write_preferences(dir / "prefs.tsv", data.prefs, users, items);
    }
    ~CliFixture() { fs::remove_all(dir); }

    std::string p(const std::string& name) const { return (dir / name).string(); }
    int run(std::vector<std::string> args) {
        out.str("");
        err.str("");
        return run_cli(args, out, err);
    }
    int split(const std::string& sub = "s", const std::string& seed = "1") {
        fs::create_directories(dir / sub);
        return run({"split", "--prefs", p("prefs.tsv"), "--features", p("features.tsv"), "--out-dir",
                    p(sub), "--seed", seed});
    }
    std::vector<std::string> train_args(const std::string& h, const std::string& model_out) const {
        return {"train", "--model", "fbsm", "--features", p("features.tsv"), "--train", p("s/train.tsv"),
                "--val", p("s/val.tsv"), "--manifest", p("s/manifest.tsv"), "--h", h, "--alpha-d", "0.005",
                "--alpha-v", "0.01", "--epochs", "5", "--out", p(model_out)};
    }
};

}  // namespace

TEST_CASE("cli: prep") {
    CliFixture fx;
    std::ofstream terms(fx.dir / "terms.tsv");
    for (int i = 0; i < 30; ++i) {
        terms << "item" << i << "\tcommon\t1\n";
        terms << "item" << i << "\tt" << (i % 5) << "\t" << (1 + i % 3) << "\n";
        terms << "item" << i << "\tw" << i << "\t1\n";
    }
    terms.close();
    SUBCASE("defaults leave nothing for such a small corpus") {
        CHECK(fx.run({"prep", "--terms", fx.p("terms.tsv"), "--out", fx.p("f.tsv")}) == 2);
    }
    SUBCASE("relaxed filters") {
        CHECK(fx.run({"prep", "--terms", fx.p("terms.tsv"), "--out", fx.p("f.tsv"), "--vocab", fx.p("v.tsv"),
                      "--min-df", "1", "--max-frac", "1.0"}) == 0);
        CHECK(fx.out.str().find("n_items") != std::string::npos);
        const auto loaded = load_sparse_features(fx.dir / "f.tsv");
        CHECK(loaded.features.n_items() == 30);
        CHECK(fs::exists(fx.dir / "v.tsv"));
        // Re-running on its own output reproduces it.
        CHECK(fx.run({"prep", "--sparse", fx.p("f.tsv"), "--out", fx.p("g.tsv")}) == 0);
        CHECK(slurp(fx.dir / "f.tsv") == slurp(fx.dir / "g.tsv"));
    }
    SUBCASE("exactly one input") {
        CHECK(fx.run({"prep", "--out", fx.p("f.tsv")}) == 1);
    }
}

TEST_CASE("cli: split, train, evaluate, aggregate") {
    CliFixture fx;
    REQUIRE(fx.split() == 0);
    REQUIRE(fx.split("t") == 0);
    CHECK(slurp(fx.dir / "s/manifest.tsv") == slurp(fx.dir / "t/manifest.tsv"));
    CHECK(slurp(fx.dir / "s/test.tsv") == slurp(fx.dir / "t/test.tsv"));
    REQUIRE(fx.split("x", "2") == 0);
    CHECK(slurp(fx.dir / "s/manifest.tsv") != slurp(fx.dir / "x/manifest.tsv"));

    CHECK(fx.run({"split", "--prefs", fx.p("prefs.tsv"), "--features", fx.p("features.tsv"), "--out-dir",
                  fx.p("s"), "--fractions", "0.5,0.2,0.2"}) == 1);

    REQUIRE(fx.run(fx.train_args("0", "m0.bin")) == 0);
    CHECK(fx.out.str().find("best_epoch") != std::string::npos);
    REQUIRE(fx.run(fx.train_args("3", "m3.bin")) == 0);

    auto cosim_train = fx.train_args("3", "c.bin");
    cosim_train[2] = "cosim";
    CHECK(fx.run(cosim_train) == 1);

    const std::vector<std::string> common{"--features", fx.p("features.tsv"), "--train", fx.p("s/train.tsv"),
                                          "--test",     fx.p("s/test.tsv"),     "--manifest",
                                          fx.p("s/manifest.tsv")};
    auto eval = [&](std::vector<std::string> head, const std::string& report) {
        head.insert(head.end(), common.begin(), common.end());
        head.push_back("--out");
        head.push_back(fx.p(report));
        return fx.run(head);
    };
    CHECK(eval({"evaluate", "--cosim"}, "r1.tsv") == 0);
    CHECK(fx.out.str().find("Rec@10") != std::string::npos);
    CHECK(eval({"evaluate", "--model", fx.p("m0.bin")}, "r2.tsv") == 0);
    CHECK(eval({"evaluate", "--model", fx.p("m3.bin")}, "r3.tsv") == 0);
    CHECK(eval({"evaluate", "--model", fx.p("m3.bin"), "--cosim"}, "r4.tsv") == 1);
    std::ofstream(fx.dir / "junk.bin") << "junk";
    CHECK(eval({"evaluate", "--model", fx.p("junk.bin")}, "r5.tsv") == 2);

    CHECK(fx.run({"aggregate", fx.p("r1.tsv"), fx.p("r2.tsv"), fx.p("r3.tsv")}) == 0);
    CHECK(fx.out.str().find("reports\t3") != std::string::npos);

    CHECK(fx.run({"train", "--model", "fbsm", "--features", fx.p("missing.tsv"), "--train", fx.p("s/train.tsv"),
                  "--val", fx.p("s/val.tsv"), "--out", fx.p("m.bin")}) == 1);
}

TEST_CASE("cli: gradcheck and bench") {
    CliFixture fx;
    CHECK(fx.run({"gradcheck"}) == 0);
    CHECK(fx.run({"gradcheck", "--h", "0", "--trials", "10"}) == 0);
    CHECK(fx.run({"gradcheck", "--inject-sign-flip", "--trials", "5"}) == 3);
    CHECK(fx.run({"bench", "--n-features", "64", "--h", "4", "--reps", "10", "--out", fx.p("b.tsv")}) == 0);
    std::ifstream in(fx.dir / "b.tsv");
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);)
        if (!line.empty() && line[0] != '#' && line.rfind("n_features", 0) != 0) ++rows;
    CHECK(rows == 1);
}

TEST_CASE("cli: config files") {
    CliFixture fx;
    std::ofstream(fx.dir / "ok.conf") << "# gradient check\ntrials = 4\nh = 0\n";
    CHECK(fx.run({"gradcheck", "--config", fx.p("ok.conf")}) == 0);
    CHECK(fx.out.str().find("trials\t4\n") != std::string::npos);
    CHECK(fx.run({"gradcheck", "--config", fx.p("ok.conf"), "--trials", "6"}) == 0);
    CHECK(fx.out.str().find("trials\t6\n") != std::string::npos);
    std::ofstream(fx.dir / "bad.conf") << "bogus = 3\n";
    CHECK(fx.run({"gradcheck", "--config", fx.p("bad.conf")}) == 1);
    CHECK(fx.run({"gradcheck", "--config", fx.p("nope.conf")}) == 1);
}

TEST_CASE("cli: usage errors") {
    std::ostringstream out, err;
    CHECK(run_cli({}, out, err) == 1);
    CHECK(run_cli({"frobnicate"}, out, err) == 1);
    CHECK(run_cli({"--help"}, out, err) == 0);
}
