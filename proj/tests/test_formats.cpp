#include "dbevo/checkpoint.hpp"
#include "dbevo/fmx.hpp"
#include "dbevo/run_store.hpp"
#include "dbevo/store.hpp"
#include "support/check.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

using namespace dbevo;
namespace fs = std::filesystem;

namespace {

FmxData small_fmx() {
    FmxData d;
    d.features = Matrix{{1.5, -2.0}, {0.25, 3.0}, {100.0, -0.125}};
    d.labels = {0, 2, 1};
    d.num_classes = 3;
    d.class_names = {"cat", "dog", "car"};
    return d;
}

void put_u32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) {
        b[at + static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(v >> (8 * k));
    }
}

} // namespace

TEST_CASE("fmx round trip") {
    const FmxData d = small_fmx();
    const auto bytes = encode_fmx(d);
    const FmxData back = decode_fmx(bytes);
    CHECK(back.features == d.features);
    CHECK(back.labels == d.labels);
    CHECK(back.num_classes == 3);
    CHECK(back.class_names == d.class_names);
    CHECK(encode_fmx(back) == bytes);

    const auto dir = oracle::temp_dir("fmx_rt");
    write_fmx(dir / "a.fmx", d);
    CHECK(read_fmx(dir / "a.fmx").features == d.features);
    CHECK(read_file_bytes(dir / "a.fmx") == bytes);
}

TEST_CASE("fmx unlabeled and empty files") {
    FmxData empty;
    empty.features = Matrix(0, 4);
    const auto bytes = encode_fmx(empty);
    CHECK(bytes.size() == kFmxHeaderBytes);
    const auto back = decode_fmx(bytes);
    CHECK(back.features.rows() == 0);
    CHECK(back.features.cols() == 4);
    CHECK_FALSE(back.labeled());

    FmxData unlabeled;
    unlabeled.features = Matrix{{1, 2}};
    CHECK(encode_fmx(unlabeled).size() == kFmxHeaderBytes + 8);
    unlabeled.labels = {0};
    CHECK_ERRC(encode_fmx(unlabeled), Errc::InvalidArgument);
}

TEST_CASE("fmx narrows to 32-bit floats") {
    FmxData d;
    d.features = Matrix{{0.1}};
    const auto back = decode_fmx(encode_fmx(d));
    CHECK(back.features(0, 0) == static_cast<double>(0.1f));
    d.features(0, 0) = 1e300;
    CHECK_ERRC(encode_fmx(d), Errc::NonFinite);
}

TEST_CASE("malformed fmx files") {
    const auto good = encode_fmx(small_fmx());

    auto bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_ERRC(decode_fmx(bad_magic), Errc::BadMagic);

    CHECK_ERRC(decode_fmx(std::vector<std::uint8_t>(good.begin(), good.begin() + 10)), Errc::Truncated);
    CHECK_ERRC(decode_fmx(std::vector<std::uint8_t>(good.begin(), good.begin() + 30)), Errc::Truncated);

    auto bad_label = good;
    // Labels start after 16 + 3*2*4 bytes; set the first to c = 3.
    bad_label[16 + 24] = 3;
    bad_label[16 + 25] = 0;
    CHECK_ERRC(decode_fmx(bad_label), Errc::LabelOutOfRange);

    auto trailing = good;
    trailing.push_back(0);
    CHECK_ERRC(decode_fmx(trailing), Errc::SizeMismatch);

    auto big_n = good;
    put_u32(big_n, 4, 1000);
    CHECK_ERRC(decode_fmx(big_n), Errc::Truncated);

    FmxData out_of_range = small_fmx();
    out_of_range.labels[1] = 3;
    CHECK_ERRC(encode_fmx(out_of_range), Errc::LabelOutOfRange);

    CHECK_ERRC(read_fmx("/nonexistent/dir/x.fmx"), Errc::IoFailure);
}

TEST_CASE("dataset conversion through fmx") {
    const auto ds = gaussian_mixture(reference_mixture(3.0, 10), 1);
    const auto back = from_fmx(decode_fmx(encode_fmx(to_fmx(ds))));
    CHECK(back.features == ds.features);
    CHECK(back.labels == ds.labels);
    CHECK(back.class_names == ds.class_names);

    FmxData unnamed = small_fmx();
    unnamed.class_names.clear();
    CHECK(from_fmx(unnamed).class_names == std::vector<std::string>{"0", "1", "2"});
    FmxData unlabeled;
    unlabeled.features = Matrix{{1.0}};
    CHECK_ERRC(from_fmx(unlabeled), Errc::InvalidArgument);
}

TEST_CASE("checkpoint round trip") {
    NetConfig cfg;
    cfg.seed = 3;
    cfg.class_names = {"a", "b", "c", "d"};
    NetParams p = init_params(cfg);
    p.layers[0].bias[3] = -0.1234567890123;
    CheckpointMeta meta{12, 0.875, {{"run_id", "r1"}}};
    const auto bytes = encode_checkpoint(p, meta);
    CHECK(encode_checkpoint(p, meta) == bytes);
    const Checkpoint back = decode_checkpoint(bytes);
    CHECK(back.meta == meta);
    CHECK(back.params.config == p.config);
    const auto a = param_refs(std::as_const(p));
    const auto b = param_refs(std::as_const(back.params));
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(std::equal(a[k].values.begin(), a[k].values.end(), b[k].values.begin(), b[k].values.end()));
    }
    const auto ds = gaussian_mixture(reference_mixture(3.0, 20), 2);
    CHECK(evaluate(back.params, ds).accuracy == evaluate(p, ds).accuracy);
    CHECK(evaluate(back.params, ds).loss == evaluate(p, ds).loss);

    const auto dir = oracle::temp_dir("ckpt_rt");
    write_checkpoint(dir / "a.ckp", p, meta);
    write_checkpoint(dir / "b.ckp", p, meta);
    CHECK(read_file_bytes(dir / "a.ckp") == read_file_bytes(dir / "b.ckp"));
    CHECK(read_checkpoint(dir / "a.ckp").meta == meta);
}

TEST_CASE("malformed checkpoints") {
    NetConfig cfg;
    cfg.hidden = {4};
    const NetParams p = init_params(cfg);
    const auto good = encode_checkpoint(p, CheckpointMeta{});

    auto magic = good;
    magic[1] = 'X';
    CHECK_ERRC(decode_checkpoint(magic), Errc::BadMagic);

    CHECK_ERRC(decode_checkpoint(std::vector<std::uint8_t>(good.begin(), good.end() - 8)), Errc::ManifestMismatch);
    auto extra = good;
    extra.insert(extra.end(), 8, 0);
    CHECK_ERRC(decode_checkpoint(extra), Errc::ManifestMismatch);

    CHECK_ERRC(decode_checkpoint(std::vector<std::uint8_t>(good.begin(), good.begin() + 6)), Errc::BadHeader);
    auto header = good;
    header[9] = '!';
    CHECK_ERRC(decode_checkpoint(header), Errc::BadHeader);
}

TEST_CASE("head file round trip and errors") {
    ClassifierHead h;
    h.weight = Matrix{{0.1, -0.2}, {1e-300, 3.5}, {0.0, 1.0 / 3.0}};
    h.bias = {0.5, -0.5, 0.0};
    h.class_names = {"a", "b", "c"};
    const std::string text = encode_head(h);
    const auto back = decode_head(text);
    CHECK(back.weight == h.weight);
    CHECK(back.bias == h.bias);
    CHECK(back.class_names == h.class_names);

    const auto dir = oracle::temp_dir("head_rt");
    write_head(dir / "h.json", h);
    CHECK(read_head(dir / "h.json").weight == h.weight);

    CHECK_ERRC(decode_head("{not json"), Errc::BadHeader);
    CHECK_ERRC(decode_head(R"({"format":"head2","num_classes":1,"dim":1,"weight":[[1]],"bias":[0]})"),
               Errc::BadHeader);
    CHECK_ERRC(decode_head(R"({"format":"head1","num_classes":2,"dim":1,"weight":[[1]],"bias":[0,0]})"),
               Errc::ShapeMismatch);
    CHECK_ERRC(decode_head(R"({"format":"head1","num_classes":1,"dim":2,"weight":[[1]],"bias":[0]})"),
               Errc::ShapeMismatch);
}

TEST_CASE("run store save and load") {
    const auto ds = gaussian_mixture(reference_mixture(3.0, 30), 5);
    const auto split = split_train_test(ds, 0.2, 5);
    TrainConfig cfg;
    cfg.run_id = "demo";
    cfg.net.hidden = {8, 8};
    cfg.epochs = 4;
    const RunArchive run = train(cfg, split.train);

    const auto root = oracle::temp_dir("run_store");
    save_run(root / "a", run, split.train, split.test);
    save_run(root / "b", run, split.train, split.test);
    for (const auto& entry : fs::directory_iterator(root / "a")) {
        CHECK(read_file_bytes(entry.path()) == read_file_bytes(root / "b" / entry.path().filename()));
    }
    CHECK_ERRC(save_run(root / "a", run, split.train, split.test), Errc::IoFailure);

    const StoredRun back = load_run(root / "a");
    CHECK(back.archive.run_id == "demo");
    CHECK(back.archive.config == run.config);
    REQUIRE(back.archive.milestones.size() == run.milestones.size());
    for (std::size_t k = 0; k < run.milestones.size(); ++k) {
        CHECK(back.archive.milestones[k].epoch == run.milestones[k].epoch);
        CHECK(back.archive.milestones[k].train_accuracy == run.milestones[k].train_accuracy);
        CHECK(back.archive.milestones[k].params.head.weight == run.milestones[k].params.head.weight);
    }
    REQUIRE(back.archive.log.size() == run.log.size());
    CHECK(back.archive.log.back().train_loss == run.log.back().train_loss);
    CHECK(back.archive.log.back().recall == run.log.back().recall);
    CHECK(back.train_set.features == split.train.features);
    CHECK(back.test_set.labels == split.test.labels);

    fs::remove(root / "b" / "ckpt_001.ckp");
    CHECK_THROWS_AS(load_run(root / "b"), Error);
    write_text(root / "a" / "manifest.json", "{}");
    CHECK_ERRC(load_run(root / "a"), Errc::BadHeader);
}

TEST_CASE("key-value files") {
    const auto kv = parse_key_values("# comment\nb=2\n\na = x=y\n");
    CHECK(kv.at("a") == "x=y");
    CHECK(kv.at("b") == "2");
    CHECK(format_key_values(kv) == "a=x=y\nb=2\n");
    CHECK_ERRC(parse_key_values("novalue\n"), Errc::BadHeader);
}

TEST_CASE("numbers round trip through text") {
    Rng rng(1);
    for (int k = 0; k < 200; ++k) {
        const double x = rng.normal() * std::pow(10.0, static_cast<double>(rng.below(40)) - 20.0);
        CHECK(parse_number(format_number(x)) == x);
    }
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_number(NAN) == "nan");
    CHECK(std::isnan(parse_number("nan")));
    CHECK(format_number(0.5) == "0.5");
    CHECK_ERRC(parse_number("1.5x"), Errc::InvalidArgument);
    CHECK_ERRC(parse_number(""), Errc::InvalidArgument);
}

TEST_CASE("csv quoting and tables") {
    const std::string text = to_csv({"a", "b"}, {{"1", "x,y"}, {"say \"hi\"", "2"}});
    CHECK(text == "a,b\n1,\"x,y\"\n\"say \"\"hi\"\"\",2\n");
    const auto rows = parse_simple_csv("a,b\n1,2\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[1] == CsvRow{"1", "2"});

    HeatmapGrid g;
    g.x_min = -1;
    g.x_max = 1;
    g.y_min = 0;
    g.y_max = 2;
    g.resolution = 2;
    g.values = Matrix{{0.1, 0.2}, {0.3, 0.4}};
    CHECK(heatmap_csv(g) == "0.10000000000000001,0.20000000000000001\n0.29999999999999999,0.40000000000000002\n");
    const auto bounds = parse_simple_csv(heatmap_bounds_csv(g));
    REQUIRE(bounds.size() == 2);
    CHECK(bounds[0] == CsvRow{"x_min", "x_max", "y_min", "y_max", "resolution"});
    CHECK(parse_number(bounds[1][3]) == 2.0);

    std::vector<TrajectoryPoint> traj(2);
    traj[0].centers = {{-1, -2}, {1, 2}};
    traj[0].variances = {3, 2, 1};
    traj[1].epoch = 5;
    traj[1].train_accuracy = 0.5;
    traj[1].centers = {{-3, 0}, {3, 0}};
    traj[1].variances = {4, 1};
    const auto trows = parse_simple_csv(trajectory_csv(traj));
    REQUIRE(trows.size() == 3);
    CHECK(std::vector<std::string>(trows[0].begin(), trows[0].begin() + 9) ==
          std::vector<std::string>{"milestone_id", "train_acc", "c1x", "c1y", "c2x", "c2y", "var1", "var2", "var3"});
    CHECK(trows[2][0] == "1");
    CHECK(trows[2][2] == "-3");
    CHECK(trows[2][8].empty());
}

TEST_CASE("svg heat map") {
    HeatmapGrid g;
    g.x_min = -1;
    g.x_max = 1;
    g.y_min = -1;
    g.y_max = 1;
    g.resolution = 2;
    g.values = Matrix(2, 2, 0.5);
    PairCoords pc;
    pc.coords = Matrix{{-0.5, 0}, {0.5, 0}};
    pc.side = {kFirst, kSecond};
    pc.names = {"a<b", "c&d"};
    const std::string svg = render_svg_heatmap(g, pc);
    CHECK(oracle::xml_well_formed(svg));
    std::size_t cells = 0;
    std::size_t pos = 0;
    std::set<std::string> fills;
    while ((pos = svg.find("class=\"cell\"", pos)) != std::string::npos) {
        ++cells;
        const auto f = svg.find("fill=\"", pos);
        const auto end = svg.find('"', f + 6);
        fills.insert(svg.substr(f + 6, end - f - 6));
        pos += 5;
    }
    CHECK(cells == 4);
    CHECK(fills.size() == 1);
    CHECK(svg.find("a&lt;b") != std::string::npos);

    g.values(0, 0) = 0.0;
    g.values(1, 1) = 1.0;
    const std::string mixed = render_svg_heatmap(g, pc);
    CHECK(mixed.find("rgb(0,0,0)") != std::string::npos);
    CHECK(mixed.find("rgb(255,255,255)") != std::string::npos);
}
