// gapstat: train/predict/evaluate pipeline for distribution-shift-robust
// sentence-pair classification, plus OOD-metric ablation, RCA* shift
// measurement, and a synthetic pair generator.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gapstat/corpus.hpp"
#include "gapstat/disc.hpp"
#include "gapstat/ensemble.hpp"
#include "gapstat/errors.hpp"
#include "gapstat/eval.hpp"
#include "gapstat/log.hpp"
#include "gapstat/oodmetrics.hpp"
#include "gapstat/oodw.hpp"
#include "gapstat/pipeline.hpp"
#include "gapstat/rca.hpp"
#include "gapstat/synth.hpp"

namespace fs = std::filesystem;
using namespace gapstat;

namespace {

PairFormat format_from_name(const std::string& name) {
    if (name == "jsonl") return PairFormat::jsonl;
    if (name == "tsv") return PairFormat::tsv;
    fail(ErrorKind::config, "unknown format: " + name);
}

Smoothing smoothing_from(const std::string& name, double k) {
    if (name == "add_k") return Smoothing::add_k(k);
    if (name == "interpolated_wb") return Smoothing::witten_bell();
    fail(ErrorKind::config, "unknown smoothing: " + name);
}

struct CPolicy {
    bool sweep = false;
    std::optional<StyleHint> hint;
};

CPolicy parse_c_policy(const std::string& text) {
    CPolicy p;
    if (text == "sweep") {
        p.sweep = true;
        return p;
    }
    if (text.rfind("hint:", 0) == 0) {
        std::string h = text.substr(5);
        if (h == "adversarial") p.hint = StyleHint::adversarial;
        else if (h == "standard") p.hint = StyleHint::standard;
        else if (h == "informal") p.hint = StyleHint::informal;
        else fail(ErrorKind::config, "unknown style hint: " + h);
        return p;
    }
    fail(ErrorKind::config, "c-policy must be sweep or hint:{adversarial|standard|informal}");
}

std::string basename_of(const std::string& path) { return fs::path(path).stem().string(); }

std::vector<PredictorOutput> read_predictions(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot open " + path);
    std::vector<PredictorOutput> outs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        outs.push_back(predictor_output_from_jsonl(line));
    }
    return outs;
}

void write_report(const EvalReport& report, const std::string& out_dir, const std::string& src,
                  const std::string& tgt, const std::string& model) {
    fs::create_directories(out_dir);
    std::ofstream j(out_dir + "/report.json");
    require(j.good(), ErrorKind::io, "cannot write report.json");
    j << report_to_json(report) << "\n";
    std::ofstream c(out_dir + "/report.csv");
    require(c.good(), ErrorKind::io, "cannot write report.csv");
    c << kReportCsvHeader << "\n" << report_csv_row(report, src, tgt, model) << "\n";
    std::cout << "macro_f1=" << report.macro_f1 << " acc=" << report.accuracy
              << " auroc=" << report.auroc << " n=" << report.n << "\n";
}

int run(int argc, char** argv) {
    CLI::App app{"generative paraphrase identification with OOD-weighted ensembling"};
    app.require_subcommand(1);

    std::string train_path, dev_path, test_path, target_path, out_path, predictions_path;
    std::string format = "jsonl";
    std::string smoothing_name = "add_k";
    std::string predictor_name_str = "gap";
    std::string c_policy_str = "hint:standard";
    std::string metric_name_str = "perplexity";
    std::string strategy = "topic_shuffle";
    std::string src_name, tgt_name, model_name;
    std::uint64_t seed = 0;
    int order = 3;
    double k = 0.1;
    double tau_threshold = 0.9;
    double m_const = 1e6;
    long relabel_count = 1000;
    int reps = 100;
    std::size_t pairs_n = 200;
    std::size_t vocab = 160;
    bool attributions = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "master random seed");
        cmd->add_option("--format", format, "pair file format: jsonl or tsv");
    };

    CLI::App* cmd_train = app.add_subcommand("train", "train the five artifacts and a manifest");
    cmd_train->add_option("--train", train_path, "training pairs")->required();
    cmd_train->add_option("--dev", dev_path, "held-back validation pairs (calibrator)")->required();
    cmd_train->add_option("--out", out_path, "output artifact directory")->required();
    cmd_train->add_option("--order", order, "n-gram order");
    cmd_train->add_option("--smoothing", smoothing_name, "add_k or interpolated_wb");
    cmd_train->add_option("--k", k, "add_k constant");
    cmd_train->add_option("--metric", metric_name_str, "lambda source: perplexity or nll");
    add_common(cmd_train);

    CLI::App* cmd_predict = app.add_subcommand("predict", "score pairs with a trained manifest");
    cmd_predict->add_option("--test", test_path, "input pairs")->required();
    cmd_predict->add_option("--out", out_path, "artifact directory")->required();
    cmd_predict->add_option("--predictor", predictor_name_str, "idp, oodp, gap, or gapx");
    cmd_predict->add_option("--c-policy", c_policy_str,
                            "sweep or hint:{adversarial|standard|informal}");
    cmd_predict->add_option("--dev", dev_path, "labeled dev pairs (required for sweep)");
    cmd_predict->add_option("--tau-threshold", tau_threshold, "lambda cutoff");
    cmd_predict->add_option("--m-const", m_const, "dominance constant M");
    cmd_predict->add_option("--predictions", predictions_path, "output jsonl (default stdout)");
    cmd_predict->add_flag("--attributions", attributions, "emit per-token attributions");
    add_common(cmd_predict);

    CLI::App* cmd_eval = app.add_subcommand("evaluate", "score predictions against gold labels");
    cmd_eval->add_option("--predictions", predictions_path, "prediction jsonl")->required();
    cmd_eval->add_option("--test", test_path, "gold pairs")->required();
    cmd_eval->add_option("--out", out_path, "report directory")->required();
    cmd_eval->add_option("--src-name", src_name, "csv dataset_src column");
    cmd_eval->add_option("--tgt-name", tgt_name, "csv dataset_tgt column");
    cmd_eval->add_option("--model-name", model_name, "csv model column");
    add_common(cmd_eval);

    CLI::App* cmd_ablate = app.add_subcommand(
        "ood-ablate", "evaluate gapx with each OOD metric driving lambda");
    cmd_ablate->add_option("--out", out_path, "artifact directory")->required();
    cmd_ablate->add_option("--dev", dev_path, "labeled source dev pairs")->required();
    cmd_ablate->add_option("--test", test_path, "labeled target pairs")->required();
    cmd_ablate->add_option("--predictions", predictions_path, "csv output (default stdout)");
    cmd_ablate->add_option("--c-policy", c_policy_str,
                           "sweep or hint:{adversarial|standard|informal}");
    cmd_ablate->add_option("--tau-threshold", tau_threshold, "lambda cutoff");
    cmd_ablate->add_option("--m-const", m_const, "dominance constant M");
    add_common(cmd_ablate);

    CLI::App* cmd_rca = app.add_subcommand(
        "rca", "RCA* distribution-shift measurement or self-calibration");
    cmd_rca->add_option("--train", train_path, "source train pairs")->required();
    cmd_rca->add_option("--dev", dev_path, "source dev pairs")->required();
    cmd_rca->add_option("--test", test_path, "source test pairs")->required();
    cmd_rca->add_option("--target", target_path, "target pool (omit for self-calibration)");
    cmd_rca->add_option("--relabel-count", relabel_count, "relabeled pool size");
    cmd_rca->add_option("--reps", reps, "calibration repetitions");
    cmd_rca->add_option("--out", out_path, "output json path")->required();
    add_common(cmd_rca);

    CLI::App* cmd_synth = app.add_subcommand("synth", "generate a synthetic pair dataset");
    cmd_synth->add_option("--out", out_path, "output jsonl path")->required();
    cmd_synth->add_option("--strategy", strategy,
                          "word_swap, topic_shuffle, or random_unrelated");
    cmd_synth->add_option("--pairs", pairs_n, "total pair count (balanced)");
    cmd_synth->add_option("--vocab", vocab, "approximate entity vocabulary size");
    add_common(cmd_synth);

    CLI11_PARSE(app, argc, argv);
    PairFormat fmt = format_from_name(format);

    if (cmd_train->parsed()) {
        TrainOptions opts;
        opts.order = order;
        opts.smoothing = smoothing_from(smoothing_name, k);
        opts.seed = seed;
        if (metric_name_str == "perplexity") opts.lambda_metric = SourceMetric::perplexity;
        else if (metric_name_str == "nll") opts.lambda_metric = SourceMetric::neg_log_likelihood;
        else fail(ErrorKind::config, "train --metric must be perplexity or nll");

        Dataset train = load_pairs(train_path, fmt);
        Dataset dev = load_pairs(dev_path, fmt);
        TrainSummary summary;
        Artifacts a = train_artifacts(train, dev, opts, &summary);
        save_artifacts(a, out_path, opts, basename_of(train_path));
        std::cout << "trained on " << train.size() << " pairs (" << summary.n_pos << " pos / "
                  << summary.n_neg << " neg); artifacts in " << out_path << "\n";
    } else if (cmd_predict->parsed()) {
        PredictOptions opts;
        opts.predictor = predictor_from_name(predictor_name_str);
        opts.gap.tau_threshold = tau_threshold;
        opts.gap.m_const = m_const;
        opts.attributions = attributions;
        Artifacts a = load_artifacts(out_path, opts.predictor);

        CPolicy policy = parse_c_policy(c_policy_str);
        if (policy.sweep) {
            require(!dev_path.empty(), ErrorKind::config, "--c-policy sweep needs --dev");
            Dataset dev = load_pairs(dev_path, fmt);
            if (!a.neg) a.neg = load_lm(out_path + "/negative.lm.json");
            opts.gap.c = choose_c_on_dev(default_c_candidates(),
                                         make_c_evaluator(a, dev, opts.conv, opts.gap));
            log::info("sweep chose C = " + std::to_string(opts.gap.c));
        } else {
            opts.gap.c = choose_c_by_hint(*policy.hint);
        }

        Dataset test = load_pairs(test_path, fmt);
        std::vector<PredictorOutput> outs = predict_pairs(a, test, opts);
        std::ofstream file;
        std::ostream* sink = &std::cout;
        if (!predictions_path.empty()) {
            file.open(predictions_path);
            require(file.good(), ErrorKind::io, "cannot write " + predictions_path);
            sink = &file;
        }
        for (const PredictorOutput& o : outs) *sink << predictor_output_to_jsonl(o) << "\n";
    } else if (cmd_eval->parsed()) {
        std::vector<PredictorOutput> outs = read_predictions(predictions_path);
        Dataset gold = load_pairs(test_path, fmt);
        EvalReport report = evaluate(outs, gold);
        write_report(report, out_path,
                     src_name.empty() ? basename_of(predictions_path) : src_name,
                     tgt_name.empty() ? basename_of(test_path) : tgt_name,
                     model_name.empty() ? "gapstat" : model_name);
    } else if (cmd_ablate->parsed()) {
        Artifacts a = load_artifacts(out_path, Predictor::gapx);
        Dataset dev = load_pairs(dev_path, fmt);
        Dataset test = load_pairs(test_path, fmt);
        MetricModels models{&*a.dist, &*a.disc};

        PredictOptions opts;
        opts.predictor = Predictor::gapx;
        opts.gap.tau_threshold = tau_threshold;
        opts.gap.m_const = m_const;
        CPolicy policy = parse_c_policy(c_policy_str);
        opts.gap.c = policy.sweep
                         ? choose_c_on_dev(default_c_candidates(),
                                           make_c_evaluator(a, dev, opts.conv, opts.gap))
                         : choose_c_by_hint(*policy.hint);

        std::ostringstream csv;
        csv << kReportCsvHeader << "\n";
        for (OodMetric metric : {OodMetric::perplexity, OodMetric::softmax, OodMetric::energy,
                                 OodMetric::maha, OodMetric::cosine}) {
            CalibratedMetric cm = metric_calibrator(metric, dev, models);
            PredictOptions mo = opts;
            mo.lambda_override = [&cm, &models](const SentencePair& p) {
                return metric_lambda(cm, models, p);
            };
            EvalReport report = evaluate(predict_pairs(a, test, mo), test);
            csv << report_csv_row(report, basename_of(dev_path), basename_of(test_path),
                                  std::string("gapx(") + ood_metric_name(metric) + ")")
                << "\n";
        }
        if (predictions_path.empty()) {
            std::cout << csv.str();
        } else {
            std::ofstream out(predictions_path);
            require(out.good(), ErrorKind::io, "cannot write " + predictions_path);
            out << csv.str();
        }
    } else if (cmd_rca->parsed()) {
        Dataset train = load_pairs(train_path, fmt);
        Dataset dev = load_pairs(dev_path, fmt);
        Dataset test = load_pairs(test_path, fmt);
        RcaTrainer trainer;
        trainer.selection_dev = &dev;
        std::ofstream out(out_path);
        require(out.good(), ErrorKind::io, "cannot write " + out_path);
        if (!target_path.empty()) {
            Dataset target = load_pairs(target_path, fmt);
            SourceSplits splits{&train, &test, &dev};
            RcaResult r = rca_star(splits, target, trainer, seed);
            out << rca_result_to_json(r) << "\n";
            std::cout << "rca_star=" << r.rca_star << " (st=" << r.rca_st << ", ss=" << r.rca_ss
                      << ")\n";
        } else {
            Dataset all = train;
            all.pairs.insert(all.pairs.end(), dev.pairs.begin(), dev.pairs.end());
            all.pairs.insert(all.pairs.end(), test.pairs.begin(), test.pairs.end());
            RcaTrainer cal_trainer;  // per-rep dev selection
            RcaCalibration c = rca_calibrate(all, cal_trainer, reps, relabel_count, seed);
            out << rca_calibration_to_json(c) << "\n";
            std::cout << "rca calibration: mean=" << c.mean << " std=" << c.std_dev
                      << " ood_threshold=" << c.ood_threshold << "\n";
        }
    } else if (cmd_synth->parsed()) {
        SynthSpec spec;
        spec.strategy = neg_strategy_from_name(strategy);
        spec.pair_count = pairs_n;
        spec.vocab_target = vocab;
        Dataset d = synth_generate(spec, seed);
        save_pairs(d, out_path);
        std::cout << "wrote " << d.size() << " pairs to " << out_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        log::error(e.what());
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
