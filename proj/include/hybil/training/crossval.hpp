#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <thread>

#include "hybil/training/kfold.hpp"
#include "hybil/training/trainer.hpp"

namespace hybil {

struct CrossValConfig {
  std::size_t folds = 5;
  Strata strata = Strata::event;
  std::vector<ModelKind> kinds{ModelKind::hybrid};
  ModelDims dims;
  TrainConfig train;
  std::size_t jobs = 1;  // folds trained concurrently
  // Called after every trained stage; may be called from several threads.
  std::function<void(const std::string&)> progress;
};

// One trained stage, named for reporting ("base", "head", "finetune").
struct NamedStage {
  std::string name;
  StageResult result;
};

struct FoldOutcome {
  std::size_t fold = 0;
  std::vector<std::size_t> validation;  // dataset indices
  std::vector<std::size_t> predictions;
  ConfusionMatrix confusion;
  ClassReport report;
  std::vector<NamedStage> stages;
  std::optional<Model> model;
};

struct KindResult {
  ModelKind kind = ModelKind::hybrid;
  std::vector<FoldOutcome> folds;
  double mean_f1 = 0.0;  // weighted F1
  double std_f1 = 0.0;   // population standard deviation
  double mean_macro_f1 = 0.0;

  std::vector<double> fold_f1() const {
    std::vector<double> out;
    for (const auto& f : folds) out.push_back(f.report.weighted_f1);
    return out;
  }
};

struct CrossValResult {
  FoldPlan plan;
  std::vector<KindResult> kinds;

  const KindResult& of(ModelKind kind) const {
    for (const auto& k : kinds) {
      if (k.kind == kind) return k;
    }
    throw ConfigError(std::string(to_string(kind)) + " was not cross-validated");
  }
};

inline FoldPlan make_fold_plan(const Dataset& ds, std::size_t k, Strata unit, std::uint64_t seed) {
  std::vector<std::string> events;
  for (const auto& s : ds.samples) events.push_back(s.provenance.recording + "#" + s.provenance.event);
  return stratified_kfold(ds.labels(), events, k, unit, seed);
}

namespace detail {

inline FoldOutcome score_fold(std::size_t fold, const SampleSet& val, Model model, std::vector<NamedStage> stages) {
  FoldOutcome out;
  out.fold = fold;
  out.validation = val.indices;
  const auto e = evaluate(model, val);
  out.predictions = e.predictions;
  out.confusion = e.confusion;
  out.report = class_report(e.confusion);
  out.stages = std::move(stages);
  out.model.emplace(std::move(model));
  return out;
}

// Every requested kind on one fold. Base models are trained once and reused as
// extractor sources for the bilinear kinds.
inline void report_stage(const CrossValConfig& cfg, std::size_t fold, std::string_view what, const StageResult& s) {
  if (!cfg.progress || s.history.empty()) return;
  const auto& best = *std::find_if(s.history.begin(), s.history.end(),
                                   [&](const EpochRecord& r) { return r.epoch == s.best_epoch; });
  char scores[64];
  std::snprintf(scores, sizeof scores, "val loss %.4f, val F1 %.4f", s.best_val_loss, best.val_f1);
  cfg.progress("fold " + std::to_string(fold) + " " + std::string(what) + ": " +
               std::to_string(s.history.back().epoch) + " epochs, best " + std::to_string(s.best_epoch) + ", " +
               scores);
}

inline std::vector<FoldOutcome> run_fold(const Dataset& ds, const FoldPlan& plan, std::size_t fold,
                                         const CrossValConfig& cfg) {
  const SampleSet train(ds, plan.training(fold)), val(ds, plan.validation[fold]);
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.train.seed, 1000 + fold);
  const std::size_t k = ds.schema.size();
  auto needs = [&](ExtractorKind e) {
    return std::any_of(cfg.kinds.begin(), cfg.kinds.end(), [&](ModelKind m) {
      const auto [a, b] = stream_layout(m);
      return a == e || b == e;
    });
  };
  std::optional<TrainResult> cnn, rnn;
  if (needs(ExtractorKind::cnn)) {
    cnn.emplace(train_base(ModelKind::cnn, train, val, tc, cfg.dims, k));
    report_stage(cfg, fold, "cnn base", cnn->stage);
  }
  if (needs(ExtractorKind::rnn)) {
    rnn.emplace(train_base(ModelKind::rnn, train, val, tc, cfg.dims, k));
    report_stage(cfg, fold, "rnn base", rnn->stage);
  }

  std::vector<FoldOutcome> out;
  for (auto kind : cfg.kinds) {
    if (kind == ModelKind::cnn) {
      out.push_back(score_fold(fold, val, cnn->model, {{"base", cnn->stage}}));
    } else if (kind == ModelKind::rnn) {
      out.push_back(score_fold(fold, val, rnn->model, {{"base", rnn->stage}}));
    } else {
      auto r = train_bilinear_two_step(kind, cnn ? &cnn->model : nullptr, rnn ? &rnn->model : nullptr, train, val,
                                       tc, cfg.dims, k);
      report_stage(cfg, fold, std::string(to_string(kind)) + " head", r.head);
      report_stage(cfg, fold, std::string(to_string(kind)) + " finetune", r.finetune);
      out.push_back(score_fold(fold, val, std::move(r.model), {{"head", r.head}, {"finetune", r.finetune}}));
    }
  }
  return out;
}

}  // namespace detail

// Runs the full protocol on every fold and aggregates per model kind. Results do
// not depend on `jobs`.
inline CrossValResult cross_validate(const Dataset& ds, const CrossValConfig& cfg) {
  cfg.train.validate();
  if (cfg.kinds.empty()) throw ConfigError("cross-validation: no model kinds selected");
  ds.validate();
  CrossValResult result;
  result.plan = make_fold_plan(ds, cfg.folds, cfg.strata, cfg.train.seed);
  for (std::size_t f = 0; f < cfg.folds; ++f) {
    if (result.plan.validation[f].empty() || result.plan.training(f).empty()) {
      throw ConfigError("cross-validation: fold " + std::to_string(f) + " is empty; too few " +
                        std::string(to_string(cfg.strata)) + "s for " + std::to_string(cfg.folds) + " folds");
    }
  }

  std::vector<std::vector<FoldOutcome>> per_fold(cfg.folds);
  std::vector<std::exception_ptr> failures(cfg.folds);
  std::atomic<std::size_t> next{0};
  const std::function<void()> worker = [&] {
    for (std::size_t f; (f = next.fetch_add(1)) < cfg.folds;) {
      try {
        per_fold[f] = detail::run_fold(ds, result.plan, f, cfg);
      } catch (...) {
        failures[f] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < std::max<std::size_t>(1, std::min(cfg.jobs, cfg.folds)); ++t) pool.emplace_back(worker);
    worker();
  }
  for (std::size_t f = 0; f < cfg.folds; ++f) {
    if (!failures[f]) continue;
    try {
      std::rethrow_exception(failures[f]);
    } catch (const std::exception& e) {
      throw TrainingError("fold " + std::to_string(f) + ": " + e.what());
    }
  }

  for (std::size_t i = 0; i < cfg.kinds.size(); ++i) {
    KindResult kr;
    kr.kind = cfg.kinds[i];
    for (std::size_t f = 0; f < cfg.folds; ++f) kr.folds.push_back(std::move(per_fold[f][i]));
    const auto scores = kr.fold_f1();
    const double n = static_cast<double>(scores.size());
    for (std::size_t f = 0; f < scores.size(); ++f) {
      kr.mean_f1 += scores[f] / n;
      kr.mean_macro_f1 += kr.folds[f].report.macro_f1 / n;
    }
    for (double s : scores) kr.std_f1 += (s - kr.mean_f1) * (s - kr.mean_f1) / n;
    kr.std_f1 = std::sqrt(kr.std_f1);
    result.kinds.push_back(std::move(kr));
  }
  return result;
}

}  // namespace hybil
