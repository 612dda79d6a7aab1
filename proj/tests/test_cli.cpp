#include "cli.hpp"
#include "dbevo/fmx.hpp"
#include "dbevo/run_store.hpp"
#include "dbevo/store.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

using namespace dbevo;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

// One short run shared by the analysis commands.
const fs::path& trained_run() {
    static const fs::path dir = [] {
        const auto root = oracle::temp_dir("cli_run");
        const auto d = root / "run";
        const auto r = run_cli({"train", "--out", d.string(), "--epochs", "10", "--per-class", "60", "--hidden",
                                "16,16"});
        REQUIRE(r.code == 0);
        return d;
    }();
    return dir;
}

std::size_t line_count(const std::string& s) {
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

} // namespace

TEST_CASE("cli train writes a loadable run") {
    const auto stored = load_run(trained_run());
    CHECK(stored.archive.final_milestone().epoch == 10);
    CHECK(stored.train_set.size() == 4 * 48);
    CHECK(stored.test_set.size() == 4 * 12);
}

TEST_CASE("cli centers has one row per milestone") {
    const auto stored = load_run(trained_run());
    const auto r = run_cli({"centers", "--run", trained_run().string(), "--pair", "0,1"});
    CHECK(r.code == 0);
    CHECK(line_count(r.out) == stored.archive.milestones.size() + 1);

    const auto by_name = run_cli({"centers", "--run", trained_run().string(), "--pair",
                                  stored.train_set.class_names[0] + "," + stored.train_set.class_names[1]});
    CHECK(by_name.code == 0);
    CHECK(by_name.out == r.out);
}

TEST_CASE("cli boundary writes grids") {
    const auto out = oracle::temp_dir("cli_boundary");
    const auto r = run_cli({"boundary", "--run", trained_run().string(), "--pair", "0,1", "--out", out.string(),
                            "--resolution", "6", "--milestone", "final"});
    CHECK(r.code == 0);
    std::size_t csv = 0;
    std::size_t svg = 0;
    for (const auto& e : fs::directory_iterator(out)) {
        csv += e.path().extension() == ".csv" ? 1 : 0;
        svg += e.path().extension() == ".svg" ? 1 : 0;
    }
    CHECK(csv == 2);
    CHECK(svg == 1);
}

TEST_CASE("cli spectra on a duplicated-column feature file") {
    const auto dir = oracle::temp_dir("cli_spectra");
    Rng rng(4);
    FmxData f;
    f.features = oracle::random_matrix(rng, 30, 6);
    for (std::size_t r = 0; r < 30; ++r) {
        f.features(r, 5) = f.features(r, 2);
    }
    for (std::size_t r = 0; r < 30; ++r) {
        f.labels.push_back(static_cast<std::uint32_t>(r % 2));
    }
    f.num_classes = 2;
    write_fmx(dir / "f.fmx", f);
    const auto r = run_cli({"spectra", "--features", (dir / "f.fmx").string(), "--out", (dir / "s.csv").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("rank 5") != std::string::npos);
    CHECK(parse_simple_csv(read_text(dir / "s.csv")).size() == 7);
}

TEST_CASE("cli export round trip feeds spectra with a head") {
    const auto dir = oracle::temp_dir("cli_export");
    const auto r = run_cli({"export-features", "--run", trained_run().string(), "--features-out",
                            (dir / "e.fmx").string(), "--head-out", (dir / "h.json").string()});
    REQUIRE(r.code == 0);
    const auto fmx = read_fmx(dir / "e.fmx");
    CHECK(fmx.features.cols() == 16);
    CHECK(fmx.num_classes == 4);
    const auto s = run_cli({"spectra", "--features", (dir / "e.fmx").string(), "--head", (dir / "h.json").string(),
                            "--pair", "0,1"});
    CHECK(s.code == 0);
    CHECK(s.out.find("head accuracy") != std::string::npos);
}

TEST_CASE("cli resistors, decision space, triple and variances") {
    const auto run = trained_run().string();
    const auto res = run_cli({"resistors", "--run", run, "--pair", "0,1", "--overlap", run});
    CHECK(res.code == 0);
    CHECK(res.out.find(" 1\n") != std::string::npos);
    CHECK(run_cli({"decision-space", "--run", run, "--pair", "1,0"}).code == 0);
    const auto tri = run_cli({"triple", "--run", run, "--triple", "0,1,2"});
    CHECK(tri.code == 0);
    CHECK(line_count(tri.out) == 3 * 48 + 1);
    CHECK(run_cli({"variance-evolution", "--run", run, "--pair", "0,1", "-m", "2"}).code == 0);
}

TEST_CASE("cli usage errors exit 2 and write nothing") {
    const auto dir = oracle::temp_dir("cli_usage");
    const auto a = run_cli({"train", "--out", (dir / "x").string(), "--bogus", "1"});
    CHECK(a.code == 2);
    CHECK_FALSE(fs::exists(dir / "x"));
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"nonsense"}).code == 2);
    CHECK(run_cli({"centers", "--run", trained_run().string(), "--pair", "0,0"}).code != 0);
    CHECK(run_cli({"centers", "--run", trained_run().string(), "--pair", "0"}).code == 2);

    write_text(dir / "bad.cfg", "epochs=3\nunknown_key=1\n");
    const auto b = run_cli({"train", "--config", (dir / "bad.cfg").string(), "--out", (dir / "y").string()});
    CHECK(b.code == 2);
    CHECK_FALSE(fs::exists(dir / "y"));
    CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("cli analysis errors exit 1") {
    const auto dir = oracle::temp_dir("cli_errors");
    CHECK(run_cli({"centers", "--run", (dir / "missing").string(), "--pair", "0,1"}).code == 1);
    write_text(dir / "junk.fmx", "not an fmx file at all");
    const auto r = run_cli({"spectra", "--features", (dir / "junk.fmx").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("BadMagic") != std::string::npos);
}

TEST_CASE("cli config files set defaults that flags override") {
    const auto dir = oracle::temp_dir("cli_config");
    write_text(dir / "c.cfg", "# short run\nepochs=2\nper-class=20\nhidden=8,8\nrecipe=adam\n");
    const auto a = run_cli({"train", "--config", (dir / "c.cfg").string(), "--out", (dir / "a").string()});
    REQUIRE(a.code == 0);
    const auto ra = load_run(dir / "a");
    CHECK(ra.archive.final_milestone().epoch == 2);
    CHECK(ra.archive.config.at("optimizer") == "adam");

    const auto b = run_cli(
        {"train", "--config", (dir / "c.cfg").string(), "--epochs", "3", "--out", (dir / "b").string()});
    REQUIRE(b.code == 0);
    CHECK(load_run(dir / "b").archive.final_milestone().epoch == 3);
}

TEST_CASE("cli sweep writes a profile row per recipe") {
    const auto dir = oracle::temp_dir("cli_sweep");
    const auto r = run_cli({"sweep-optimizers", "--out", (dir / "s").string(), "--recipes", "sgd-anneal,adam,rmsprop",
                            "--epochs", "3", "--per-class", "30", "--hidden", "8,8"});
    REQUIRE(r.code == 0);
    const auto rows = parse_simple_csv(read_text(dir / "s" / "profile.csv"));
    REQUIRE(rows.size() == 4);
    CHECK(rows[0][0] == "optimizer");
    for (std::size_t k = 1; k < rows.size(); ++k) {
        CHECK(fs::exists(dir / "s" / rows[k].back()));
        CHECK(parse_number(rows[k][3]) <= 8.0);
    }
    CHECK(parse_number(rows[1][2]) >= parse_number(rows[2][2]));
}
