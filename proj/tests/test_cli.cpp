#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gapstat/corpus.hpp"
#include "gapstat/ensemble.hpp"

using namespace gapstat;
namespace fs = std::filesystem;

namespace {

const char* cli = GAPSTAT_CLI_PATH;

struct Workdir {
    fs::path dir;
    Workdir() {
        dir = fs::temp_directory_path() / ("gapstat_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~Workdir() { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args) {
    std::string cmd = std::string(cli) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<PredictorOutput> read_preds(const std::string& path) {
    std::ifstream in(path);
    std::vector<PredictorOutput> outs;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) outs.push_back(predictor_output_from_jsonl(line));
    return outs;
}

void make_corpus(const Workdir& w) {
    REQUIRE(run("synth --out " + w.path("src.jsonl") +
                " --strategy topic_shuffle --pairs 400 --seed 7") == 0);
    REQUIRE(run("synth --out " + w.path("tgt.jsonl") +
                " --strategy word_swap --pairs 400 --seed 7") == 0);
    Dataset src = load_pairs(w.path("src.jsonl"), PairFormat::jsonl);
    auto parts = split(src, 3, {0.6, 0.2, 0.2});
    save_pairs(parts[0], w.path("train.jsonl"));
    save_pairs(parts[1], w.path("dev.jsonl"));
    save_pairs(parts[2], w.path("test.jsonl"));
}

}  // namespace

TEST_CASE("train writes five artifacts plus a manifest, reproducibly") {
    Workdir w;
    make_corpus(w);
    std::string train_cmd = "train --train " + w.path("train.jsonl") + " --dev " +
                            w.path("dev.jsonl") + " --out " + w.path("m") + " --seed 5";
    REQUIRE(run(train_cmd) == 0);
    for (const char* f : {"positive.lm.json", "negative.lm.json", "distribution.lm.json",
                          "calibrator.json", "disc.json", "manifest.json"})
        CHECK(fs::exists(w.dir / "m" / f));

    std::string first = slurp(w.path("m/positive.lm.json")) + slurp(w.path("m/disc.json")) +
                        slurp(w.path("m/calibrator.json"));
    REQUIRE(run("train --train " + w.path("train.jsonl") + " --dev " + w.path("dev.jsonl") +
                " --out " + w.path("m2") + " --seed 5") == 0);
    std::string second = slurp(w.path("m2/positive.lm.json")) + slurp(w.path("m2/disc.json")) +
                         slurp(w.path("m2/calibrator.json"));
    CHECK(first == second);
}

TEST_CASE("exit codes follow the error taxonomy") {
    Workdir w;
    make_corpus(w);
    SUBCASE("missing input file is a data error") {
        CHECK(run("train --train " + w.path("absent.jsonl") + " --dev " + w.path("dev.jsonl") +
                  " --out " + w.path("m")) == 2);
    }
    SUBCASE("unlabeled training data is a data error") {
        Dataset train = load_pairs(w.path("train.jsonl"), PairFormat::jsonl);
        for (auto& p : train.pairs) p.label.reset();
        save_pairs(train, w.path("nolabel.jsonl"));
        CHECK(run("train --train " + w.path("nolabel.jsonl") + " --dev " + w.path("dev.jsonl") +
                  " --out " + w.path("m")) == 2);
    }
    SUBCASE("manifest version mismatch is an artifact error") {
        REQUIRE(run("train --train " + w.path("train.jsonl") + " --dev " + w.path("dev.jsonl") +
                    " --out " + w.path("m")) == 0);
        std::string manifest = slurp(w.path("m/manifest.json"));
        auto pos = manifest.find("\"version\": 1");
        REQUIRE(pos != std::string::npos);
        manifest.replace(pos, 12, "\"version\": 9");
        std::ofstream(w.path("m/manifest.json")) << manifest;
        CHECK(run("predict --test " + w.path("test.jsonl") + " --out " + w.path("m") +
                  " --predictor idp") == 3);
    }
    SUBCASE("too-few dev pairs for the calibrator is a numeric error") {
        Dataset dev = load_pairs(w.path("dev.jsonl"), PairFormat::jsonl);
        dev.pairs.resize(10);
        save_pairs(dev, w.path("tiny_dev.jsonl"));
        CHECK(run("train --train " + w.path("train.jsonl") + " --dev " +
                  w.path("tiny_dev.jsonl") + " --out " + w.path("m")) == 4);
    }
}

TEST_CASE("predict schema per predictor and oodp independence from the negative model") {
    Workdir w;
    make_corpus(w);
    REQUIRE(run("train --train " + w.path("train.jsonl") + " --dev " + w.path("dev.jsonl") +
                " --out " + w.path("m") + " --seed 1") == 0);

    REQUIRE(run("predict --test " + w.path("test.jsonl") + " --out " + w.path("m") +
                " --predictor gapx --predictions " + w.path("gapx.jsonl")) == 0);
    for (const auto& o : read_preds(w.path("gapx.jsonl"))) CHECK(o.s_star.has_value());

    REQUIRE(run("predict --test " + w.path("test.jsonl") + " --out " + w.path("m") +
                " --predictor idp --predictions " + w.path("idp.jsonl")) == 0);
    for (const auto& o : read_preds(w.path("idp.jsonl"))) CHECK_FALSE(o.s_star.has_value());

    fs::remove(w.dir / "m" / "negative.lm.json");
    CHECK(run("predict --test " + w.path("test.jsonl") + " --out " + w.path("m") +
              " --predictor oodp --predictions " + w.path("oodp.jsonl")) == 0);
    CHECK(read_preds(w.path("oodp.jsonl")).size() == read_preds(w.path("idp.jsonl")).size());
    CHECK(run("predict --test " + w.path("test.jsonl") + " --out " + w.path("m") +
              " --predictor idp") == 2);
}

TEST_CASE("a calibrator pinned far right forces lambda 0 and gap equals idp") {
    Workdir w;
    make_corpus(w);
    REQUIRE(run("train --train " + w.path("train.jsonl") + " --dev " + w.path("dev.jsonl") +
                " --out " + w.path("m") + " --seed 2") == 0);
    // loc beyond any pair's perplexity pins cdf at 0
    std::ofstream(w.path("m/calibrator.json"))
        << R"({"version":1,"source_metric":"perplexity","a":1.0,"c":1.0,"loc":1e9,)"
        << R"("scale":1.0,"fit_sample_count":100})";

    REQUIRE(run("predict --test " + w.path("test.jsonl") + " --out " + w.path("m") +
                " --predictor gap --predictions " + w.path("gap0.jsonl")) == 0);
    REQUIRE(run("predict --test " + w.path("test.jsonl") + " --out " + w.path("m") +
                " --predictor idp --predictions " + w.path("idp.jsonl")) == 0);
    auto gap = read_preds(w.path("gap0.jsonl"));
    auto idp = read_preds(w.path("idp.jsonl"));
    REQUIRE(gap.size() == idp.size());
    for (std::size_t i = 0; i < gap.size(); ++i) {
        CHECK(gap[i].lambda == 0.0);
        CHECK(gap[i].s == doctest::Approx(idp[i].s).epsilon(1e-12));
    }
}

TEST_CASE("evaluate a perfect oracle file") {
    Workdir w;
    make_corpus(w);
    Dataset test = load_pairs(w.path("test.jsonl"), PairFormat::jsonl);
    std::ofstream preds(w.path("oracle.jsonl"));
    for (const auto& p : test.pairs) {
        PredictorOutput o;
        o.id = p.id;
        o.s = *p.label == 1 ? 1.0 : -1.0;
        o.predicted = *p.label;
        preds << predictor_output_to_jsonl(o) << "\n";
    }
    preds.close();
    REQUIRE(run("evaluate --predictions " + w.path("oracle.jsonl") + " --test " +
                w.path("test.jsonl") + " --out " + w.path("rep")) == 0);
    std::string report = slurp(w.path("rep/report.json"));
    CHECK(report.find("\"macro_f1\":1.0") != std::string::npos);
    CHECK(report.find("\"accuracy\":1.0") != std::string::npos);
    CHECK(report.find("\"auroc\":1.0") != std::string::npos);
    std::string csv = slurp(w.path("rep/report.csv"));
    CHECK(csv.rfind("dataset_src,dataset_tgt,model,f1,acc,auroc", 0) == 0);
}

TEST_CASE("ood-ablate emits one csv row per metric") {
    Workdir w;
    make_corpus(w);
    REQUIRE(run("train --train " + w.path("train.jsonl") + " --dev " + w.path("dev.jsonl") +
                " --out " + w.path("m") + " --seed 3") == 0);
    REQUIRE(run("ood-ablate --out " + w.path("m") + " --dev " + w.path("dev.jsonl") + " --test " +
                w.path("tgt.jsonl") + " --predictions " + w.path("ablate.csv")) == 0);
    std::string csv = slurp(w.path("ablate.csv"));
    int rows = 0;
    for (char ch : csv)
        if (ch == '\n') ++rows;
    CHECK(rows == 6);  // header + 5 metrics
    for (const char* metric : {"gapx(perplexity)", "gapx(softmax)", "gapx(energy)", "gapx(maha)",
                               "gapx(cosine)"})
        CHECK(csv.find(metric) != std::string::npos);
}

TEST_CASE("rca self-measurement lands near zero") {
    Workdir w;
    make_corpus(w);
    REQUIRE(run("rca --train " + w.path("train.jsonl") + " --dev " + w.path("dev.jsonl") +
                " --test " + w.path("test.jsonl") + " --target " + w.path("src.jsonl") +
                " --out " + w.path("rca.json") + " --seed 4") == 0);
    std::string j = slurp(w.path("rca.json"));
    CHECK(j.find("rca_star") != std::string::npos);
}

TEST_CASE("synth rejects unknown strategies with a data error") {
    Workdir w;
    CHECK(run("synth --out " + w.path("x.jsonl") + " --strategy nonsense --pairs 10") == 2);
}
