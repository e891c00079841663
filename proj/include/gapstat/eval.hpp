#pragma once

#include <string>
#include <vector>

#include "gapstat/corpus.hpp"
#include "gapstat/ensemble.hpp"

namespace gapstat {

struct Confusion {
    long tp = 0;
    long fp = 0;
    long tn = 0;
    long fn = 0;
};

struct ScoredRow {
    std::string id;
    double score = 0.0;
    int label = 0;
    int predicted = 0;
};

struct EvalReport {
    double macro_f1 = 0.0;
    double accuracy = 0.0;
    double auroc = 0.0;
    Confusion confusion;
    long n = 0;
    std::vector<ScoredRow> scores;
};

/// Unweighted mean of per-class F1; a class with zero predicted and zero
/// actual members contributes F1 = 0.
double macro_f1(const std::vector<int>& preds, const std::vector<int>& labels);

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels);

Confusion confusion_counts(const std::vector<int>& preds, const std::vector<int>& labels);

/// Mann-Whitney statistic P(score_pos > score_neg) + 0.5 * P(tie), computed
/// exactly via average ranks. Both classes must be present.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Joins outputs to gold labels by id and computes every metric. AUROC uses
/// the real-valued governing score (S_star when present, else S).
EvalReport evaluate(const std::vector<PredictorOutput>& outputs, const Dataset& gold);

std::string report_to_json(const EvalReport& r);
EvalReport report_from_json(const std::string& text);

/// One CSV row per run; header emitted separately.
inline const char* kReportCsvHeader = "dataset_src,dataset_tgt,model,f1,acc,auroc";
std::string report_csv_row(const EvalReport& r, const std::string& dataset_src,
                           const std::string& dataset_tgt, const std::string& model);

}  // namespace gapstat
