#include "gapstat/eval.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "gapstat/errors.hpp"

namespace gapstat {

using nlohmann::json;

namespace {

double class_f1(const std::vector<int>& preds, const std::vector<int>& labels, int cls) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        bool p = preds[i] == cls;
        bool a = labels[i] == cls;
        if (p && a) ++tp;
        else if (p && !a) ++fp;
        else if (!p && a) ++fn;
    }
    double prec = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    double rec = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (prec + rec == 0.0) return 0.0;
    return 2.0 * prec * rec / (prec + rec);
}

}  // namespace

double macro_f1(const std::vector<int>& preds, const std::vector<int>& labels) {
    require(preds.size() == labels.size(), ErrorKind::eval,
            "macro_f1: prediction/label length mismatch");
    require(!preds.empty(), ErrorKind::eval, "macro_f1: empty input");
    return 0.5 * (class_f1(preds, labels, 0) + class_f1(preds, labels, 1));
}

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
    require(preds.size() == labels.size(), ErrorKind::eval,
            "accuracy: prediction/label length mismatch");
    require(!preds.empty(), ErrorKind::eval, "accuracy: empty input");
    long hit = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == labels[i]) ++hit;
    return static_cast<double>(hit) / static_cast<double>(preds.size());
}

Confusion confusion_counts(const std::vector<int>& preds, const std::vector<int>& labels) {
    Confusion c;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == 1 && labels[i] == 1) ++c.tp;
        else if (preds[i] == 1 && labels[i] == 0) ++c.fp;
        else if (preds[i] == 0 && labels[i] == 0) ++c.tn;
        else ++c.fn;
    }
    return c;
}

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    require(scores.size() == labels.size(), ErrorKind::eval,
            "auroc: score/label length mismatch");
    long n_pos = std::count(labels.begin(), labels.end(), 1);
    long n_neg = static_cast<long>(labels.size()) - n_pos;
    require(n_pos > 0 && n_neg > 0, ErrorKind::eval, "auroc: both classes must be present");

    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks over tie groups; the rank-sum form is then exactly the
    // pairwise statistic with half-credit ties.
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
        double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k)
            if (labels[idx[k]] == 1) pos_rank_sum += avg_rank;
        i = j + 1;
    }
    double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

EvalReport evaluate(const std::vector<PredictorOutput>& outputs, const Dataset& gold) {
    std::unordered_map<std::string, int> gold_labels;
    for (const SentencePair& p : gold.pairs)
        if (p.label) gold_labels.emplace(p.id, *p.label);

    std::string missing;
    for (const PredictorOutput& o : outputs)
        if (!gold_labels.count(o.id)) missing += (missing.empty() ? "" : ", ") + o.id;
    require(missing.empty(), ErrorKind::eval, "missing gold labels for: " + missing);
    require(!outputs.empty(), ErrorKind::eval, "evaluate: no predictions");

    EvalReport r;
    std::vector<int> preds, labels;
    std::vector<double> scores;
    for (const PredictorOutput& o : outputs) {
        int label = gold_labels.at(o.id);
        double score = o.s_star ? *o.s_star : o.s;
        r.scores.push_back({o.id, score, label, o.predicted});
        preds.push_back(o.predicted);
        labels.push_back(label);
        scores.push_back(score);
    }
    r.n = static_cast<long>(outputs.size());
    r.macro_f1 = macro_f1(preds, labels);
    r.accuracy = accuracy(preds, labels);
    r.auroc = auroc(scores, labels);
    r.confusion = confusion_counts(preds, labels);
    return r;
}

std::string report_to_json(const EvalReport& r) {
    json rows = json::array();
    for (const ScoredRow& row : r.scores)
        rows.push_back({{"id", row.id},
                        {"score", row.score},
                        {"label", row.label},
                        {"predicted", row.predicted}});
    json j{{"macro_f1", r.macro_f1},
           {"accuracy", r.accuracy},
           {"auroc", r.auroc},
           {"confusion",
            {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn},
             {"fn", r.confusion.fn}}},
           {"n", r.n},
           {"scores", rows}};
    return j.dump();
}

EvalReport report_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("invalid report json: ") + e.what());
    }
    EvalReport r;
    r.macro_f1 = j.at("macro_f1").get<double>();
    r.accuracy = j.at("accuracy").get<double>();
    r.auroc = j.at("auroc").get<double>();
    r.confusion.tp = j.at("confusion").at("tp").get<long>();
    r.confusion.fp = j.at("confusion").at("fp").get<long>();
    r.confusion.tn = j.at("confusion").at("tn").get<long>();
    r.confusion.fn = j.at("confusion").at("fn").get<long>();
    r.n = j.at("n").get<long>();
    for (const auto& row : j.at("scores"))
        r.scores.push_back({row.at("id").get<std::string>(), row.at("score").get<double>(),
                            row.at("label").get<int>(), row.at("predicted").get<int>()});
    return r;
}

std::string report_csv_row(const EvalReport& r, const std::string& dataset_src,
                           const std::string& dataset_tgt, const std::string& model) {
    std::ostringstream ss;
    ss << dataset_src << "," << dataset_tgt << "," << model << "," << r.macro_f1 << ","
       << r.accuracy << "," << r.auroc;
    return ss.str();
}

}  // namespace gapstat
