#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <aqua/aqua.hpp>

#include "helpers.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunResult run_cli(const std::string& args, const fs::path& dir) {
    const char* bin = std::getenv("AQUA_CLI");
    REQUIRE(bin != nullptr);
    const fs::path out_path = dir / "cli-stdout.txt";
    const fs::path err_path = dir / "cli-stderr.txt";
    const std::string cmd = std::string(bin) + " " + args + " >" + out_path.string() + " 2>" +
                            err_path.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("distort builds a manifest and reruns byte-identically") {
    testutil::TempDir dir;
    const auto d1 = (dir.path() / "run1").string();
    const auto d2 = (dir.path() / "run2").string();
    auto r1 = run_cli("--seed 3 distort --synthetic 2 --width 48 --height 48 --out " + d1,
                      dir.path());
    INFO(r1.err);
    REQUIRE(r1.exit_code == 0);
    CHECK(r1.out.find("entries=86") != std::string::npos);

    auto manifest = aqua::load_manifest(d1 + "/manifest.jsonl");
    CHECK(manifest.entries.size() == 86);
    CHECK(manifest.corpus_seed == 3);
    std::size_t images = 0;
    for (const auto& e : fs::directory_iterator(d1 + "/images")) images += e.is_regular_file();
    CHECK(images == 86);
    CHECK(fs::exists(d1 + "/images/tex-0000__none.png"));

    auto r2 = run_cli("--seed 3 distort --synthetic 2 --width 48 --height 48 --out " + d2,
                      dir.path());
    REQUIRE(r2.exit_code == 0);
    CHECK(testutil::read_bytes(d2 + "/manifest.jsonl") ==
          testutil::read_bytes(d1 + "/manifest.jsonl"));
    CHECK(testutil::read_bytes(d2 + "/images/tex-0001__compression-d5.png") ==
          testutil::read_bytes(d1 + "/images/tex-0001__compression-d5.png"));
}

TEST_CASE("the pipeline runs end to end") {
    testutil::TempDir dir;
    const std::string ws = dir.path().string();
    const std::string data = ws + "/data";

    auto distort = run_cli("--seed 11 distort --synthetic 6 --width 48 --height 48"
                           " --kinds brightness,gaussian_noise --degrees 4 --out " + data,
                           dir.path());
    INFO(distort.err);
    REQUIRE(distort.exit_code == 0);
    CHECK(distort.out.find("entries=54") != std::string::npos);

    auto label = run_cli("--seed 11 label --manifest " + data + "/manifest.jsonl"
                         " --surrogate --records-out " + ws + "/records.jsonl"
                         " --mode semi_supervised --distance mad --out " + ws + "/targets.jsonl",
                         dir.path());
    INFO(label.err);
    REQUIRE(label.exit_code == 0);
    CHECK(label.out.find("targets=54") != std::string::npos);
    CHECK(aqua::load_targets(ws + "/targets.jsonl").size() == 54);

    auto features = run_cli("features --manifest " + data + "/manifest.jsonl"
                            " --images-dir " + data + "/images --extractor nss --out " +
                            ws + "/features.jsonl",
                            dir.path());
    INFO(features.err);
    REQUIRE(features.exit_code == 0);
    CHECK(features.out.find("vectors=54 dim=36") != std::string::npos);

    auto train = run_cli("--seed 11 train --features " + ws + "/features.jsonl"
                         " --targets " + ws + "/targets.jsonl"
                         " --manifest " + data + "/manifest.jsonl --split train"
                         " --lr 1e-3 --epochs 10 --batch 16 --hidden 8 --out " + ws +
                         "/model.jsonl",
                         dir.path());
    INFO(train.err);
    REQUIRE(train.exit_code == 0);
    auto model = aqua::load_model(ws + "/model.jsonl");
    CHECK(model.extractor_id == aqua::kNssExtractorId);
    CHECK(model.layer_dims == std::vector<int>{36, 8, 1});

    auto score = run_cli("score --model " + ws + "/model.jsonl --features " + ws +
                         "/features.jsonl --out " + ws + "/scores.jsonl",
                         dir.path());
    INFO(score.err);
    REQUIRE(score.exit_code == 0);
    auto scores = aqua::load_scores(ws + "/scores.jsonl");
    CHECK(scores.size() == 54);

    auto eval = run_cli("eval --manifest " + data + "/manifest.jsonl --records " + ws +
                        "/records.jsonl --scores " + ws + "/scores.jsonl --split all"
                        " --classifier surrogate-0 --out " + ws + "/report.jsonl --roc-csv " +
                        ws + "/roc.csv",
                        dir.path());
    INFO(eval.err);
    REQUIRE(eval.exit_code == 0);
    CHECK(eval.out.find("all") != std::string::npos);
    CHECK(eval.out.find("auc=") != std::string::npos);
    auto report = aqua::jsonl::read_file(ws + "/report.jsonl", "aqua-report", 1);
    CHECK(report.header.at("classifier") == "surrogate-0");
    CHECK(slurp(ws + "/roc.csv").rfind("threshold,fpr,tpr\n", 0) == 0);

    // Gate a stream that mixes replayed qualities with on-disk frames.
    {
        std::ofstream stream(ws + "/stream.jsonl");
        stream << R"({"format":"aqua-stream","version":1})" << "\n";
        stream << R"({"frame_id":"a","byte_size":1000,"path":")" << data
               << R"(/images/tex-0000__none.png"})" << "\n";
        stream << R"({"frame_id":"b","byte_size":1000,"path":")" << data
               << R"(/images/tex-0000__gaussian_noise-d3.png"})" << "\n";
        stream << R"({"frame_id":"c","byte_size":2000,"quality":-99.0})" << "\n";
    }
    auto filter = run_cli("filter --stream " + ws + "/stream.jsonl --model " + ws +
                          "/model.jsonl --threshold -1e6 --stride 1 --out " + ws +
                          "/filter.jsonl",
                          dir.path());
    INFO(filter.err);
    REQUIRE(filter.exit_code == 0);
    CHECK(filter.out.find("pass_rate=1.0") != std::string::npos);
    CHECK(filter.out.find("frames_scored=3") != std::string::npos);
    auto filter_doc = aqua::jsonl::read_file(ws + "/filter.jsonl", "aqua-filter", 1);
    CHECK(filter_doc.header.at("threshold") == -1e6);
}

TEST_CASE("sweep dedupes and writes the grid csv") {
    testutil::TempDir dir;
    const std::string ws = dir.path().string();
    {
        auto stream = aqua::make_blocky_stream(60, 6, 2);
        aqua::save_stream(stream, ws + "/stream.jsonl");
    }
    auto r = run_cli("sweep --stream " + ws + "/stream.jsonl"
                     " --thresholds 0.5,0.5,-inf --strides 1,2 --out " + ws + "/sweep.csv",
                     dir.path());
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("cells=4") != std::string::npos);
    CHECK(r.err.find("duplicate threshold 0.5 dropped from sweep") != std::string::npos);
    const std::string csv = slurp(ws + "/sweep.csv");
    CHECK(count_lines(csv) == 5);  // header + 2x2 grid
    CHECK(csv.rfind("threshold,stride,pass_rate,bandwidth_fraction,net_compute_fraction\n", 0) ==
          0);
    CHECK(csv.find("-inf,1,1.0,1.0,") != std::string::npos);
}

TEST_CASE("training zero epochs reproduces the seeded init") {
    testutil::TempDir dir;
    const std::string ws = dir.path().string();
    std::vector<aqua::FeatureVector> feats;
    std::vector<aqua::TargetRecord> targets;
    aqua::rng::Stream s(1);
    for (int i = 0; i < 3; ++i) {
        aqua::FeatureVector fv;
        fv.image_id = "img" + std::to_string(i);
        fv.extractor_id = aqua::kNssExtractorId;
        for (int k = 0; k < aqua::kNssDim; ++k) fv.values.push_back(s.next_gaussian());
        feats.push_back(fv);
        targets.push_back({fv.image_id, 0.5 * i});
    }
    aqua::save_embeddings(feats, ws + "/features.jsonl");
    aqua::save_targets(targets, ws + "/targets.jsonl");

    auto r = run_cli("--seed 7 train --features " + ws + "/features.jsonl --targets " + ws +
                     "/targets.jsonl --split all --epochs 0 --hidden 4 --out " + ws +
                     "/model.jsonl",
                     dir.path());
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("final_loss=n/a") != std::string::npos);
    auto model = aqua::load_model(ws + "/model.jsonl");
    auto fresh = aqua::init_model({aqua::kNssDim, 4, 1}, aqua::kNssExtractorId, 7);
    CHECK(model.weights == fresh.weights);
    CHECK(model.biases == fresh.biases);
}

TEST_CASE("score refuses features from a different extractor") {
    testutil::TempDir dir;
    const std::string ws = dir.path().string();
    auto model = aqua::init_model({4, 1}, "nss-v1", 1);
    aqua::save_model(model, ws + "/model.jsonl");
    std::vector<aqua::FeatureVector> feats{{"a", "fbank-v1-k1.3.5-f4-s0", {1.0, 2.0, 3.0, 4.0}}};
    aqua::save_embeddings(feats, ws + "/features.jsonl");
    auto r = run_cli("score --model " + ws + "/model.jsonl --features " + ws +
                     "/features.jsonl --out " + ws + "/scores.jsonl",
                     dir.path());
    CHECK(r.exit_code == 1);
    CHECK(r.err.rfind("aqua: error category=validation:", 0) == 0);
    CHECK(r.err.find("does not match") != std::string::npos);
}

TEST_CASE("failures exit 1 with a one-line categorized error") {
    testutil::TempDir dir;
    const std::string ws = dir.path().string();

    auto missing = run_cli("label --manifest " + ws + "/nope.jsonl --surrogate --out " + ws +
                           "/t.jsonl",
                           dir.path());
    CHECK(missing.exit_code == 1);
    CHECK(missing.err.rfind("aqua: error category=io:", 0) == 0);
    CHECK(count_lines(missing.err) == 1);

    auto unknown = run_cli("distort --nope", dir.path());
    CHECK(unknown.exit_code == 1);
    CHECK(unknown.err.rfind("aqua: error category=validation:", 0) == 0);
    CHECK(count_lines(unknown.err) == 1);

    auto no_sub = run_cli("", dir.path());
    CHECK(no_sub.exit_code == 1);
    CHECK(no_sub.err.rfind("aqua: error category=validation:", 0) == 0);

    auto both = run_cli("distort --synthetic 2 --images-dir " + ws + " --out " + ws + "/x",
                        dir.path());
    CHECK(both.exit_code == 1);
    CHECK(both.err.rfind("aqua: error category=validation:", 0) == 0);
    CHECK(both.err.find("exactly one of") != std::string::npos);
}

TEST_CASE("config files feed subcommand options") {
    testutil::TempDir dir;
    const std::string ws = dir.path().string();
    {
        std::ofstream cfg(ws + "/aqua.ini");
        cfg << "[distort]\n" << "degrees=2\n";
    }
    auto r = run_cli("--config " + ws + "/aqua.ini --seed 5 distort --synthetic 2 --width 48"
                     " --height 48 --out " + ws + "/run",
                     dir.path());
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("entries=30") != std::string::npos);  // 2 x (1 + 7 kinds x 2 degrees)

    {
        std::ofstream cfg(ws + "/bad.ini");
        cfg << "[distort]\n" << "nonsense=1\n";
    }
    auto bad = run_cli("--config " + ws + "/bad.ini distort --synthetic 2 --out " + ws + "/x",
                       dir.path());
    CHECK(bad.exit_code == 1);
    CHECK(bad.err.rfind("aqua: error category=validation:", 0) == 0);
}

TEST_CASE("bench reports a median per stage") {
    testutil::TempDir dir;
    const std::string ws = dir.path().string();
    auto r = run_cli("--seed 2 bench --width 64 --height 64 --runs 2 --warmup 1 --frames 4"
                     " --out " + ws + "/bench.jsonl",
                     dir.path());
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    for (const char* stage : {"nss_features ", "forward ", "filter_stride1 ", "filter_stride4 "})
        CHECK(r.out.find(stage) != std::string::npos);
    auto doc = aqua::jsonl::read_file(ws + "/bench.jsonl", "aqua-bench", 1);
    REQUIRE(doc.records.size() == 4);
    for (const auto& rec : doc.records) CHECK(rec.at("median_ms").get<double>() >= 0.0);
}
