#pragma once

// Pipeline commands behind the `hybil` tool. Each command writes its outputs
// under an output directory and throws hybil::Error when its primary output
// cannot be produced. Result documents are deterministic; wall-clock data goes
// to meta.json only.

#include <nlohmann/json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>

#include "hybil/cli/config.hpp"
#include "hybil/dataio/checkpoint.hpp"
#include "hybil/dataio/dataset_io.hpp"
#include "hybil/dataio/manifest.hpp"
#include "hybil/dataio/synth.hpp"
#include "hybil/metrics/mann_whitney.hpp"
#include "hybil/preprocess/corpus.hpp"

namespace hybil {

namespace detail {

using ojson = nlohmann::ordered_json;

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw FormatError("cannot write " + path.string());
}

inline void write_json(const std::filesystem::path& path, const ojson& j) { write_text(path, j.dump(2) + "\n"); }

inline void prepare_output(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.output);
  write_json(cfg.output / "config.json", to_json(cfg));
}

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline void write_meta(const std::filesystem::path& dir, const std::string& command, const std::string& started,
                       double seconds, ojson extra = ojson::object()) {
  ojson j;
  j["command"] = command;
  j["started"] = started;
  j["finished"] = utc_now();
  j["seconds"] = seconds;
  for (auto& [k, v] : extra.items()) j[k] = v;
  write_json(dir / "meta.json", j);
}

inline std::string shape_text(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ", " : "") + std::to_string(s[i]);
  return out + ")";
}

inline std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline ojson confusion_json(const ConfusionMatrix& cm) {
  ojson rows = ojson::array();
  for (std::size_t t = 0; t < cm.classes(); ++t) {
    ojson row = ojson::array();
    for (std::size_t p = 0; p < cm.classes(); ++p) row.push_back(cm.at(t, p));
    rows.push_back(row);
  }
  return rows;
}

inline std::string confusion_csv(const ConfusionMatrix& cm, const LabelSchema& schema) {
  std::string out = "true\\predicted";
  for (std::size_t p = 0; p < cm.classes(); ++p) out += "," + csv_quote(schema.at(p).code);
  out += "\n";
  for (std::size_t t = 0; t < cm.classes(); ++t) {
    out += csv_quote(schema.at(t).code);
    for (std::size_t p = 0; p < cm.classes(); ++p) out += "," + std::to_string(cm.at(t, p));
    out += "\n";
  }
  return out;
}

inline ojson report_json(const ConfusionMatrix& cm, const LabelSchema& schema) {
  const auto r = class_report(cm);
  const auto acc = per_class_accuracy(cm);
  ojson j;
  j["weighted_f1"] = r.weighted_f1;
  j["macro_f1"] = r.macro_f1;
  j["accuracy"] = r.accuracy;
  j["total"] = r.total;
  j["per_class"] = ojson::array();
  for (std::size_t c = 0; c < r.classes.size(); ++c) {
    const auto& s = r.classes[c];
    ojson e;
    e["class"] = schema.at(c).code;
    e["support"] = s.support;
    e["precision"] = s.precision;
    e["recall"] = s.recall;
    e["f1"] = s.f1;
    e["accuracy"] = acc.recall[c];
    e["undefined"] = s.f1_undefined;
    j["per_class"].push_back(e);
  }
  j["confusion"] = confusion_json(cm);
  return j;
}

inline ojson stage_json(const NamedStage& s) {
  ojson j;
  j["stage"] = s.name;
  j["best_epoch"] = s.result.best_epoch;
  j["best_val_loss"] = s.result.best_val_loss;
  j["history"] = ojson::array();
  for (const auto& h : s.result.history) {
    j["history"].push_back(
        {{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"val_loss", h.val_loss}, {"val_f1", h.val_f1}});
  }
  return j;
}

inline std::string dataset_label(const Dataset& ds) {
  return ds.schema.name() + " (" + std::to_string(ds.size()) + " windows)";
}

// Stage progress lines, serialized across fold threads.
inline void attach_progress(CrossValConfig& cv, std::ostream& log) {
  auto lock = std::make_shared<std::mutex>();
  cv.progress = [lock, &log](const std::string& line) {
    const std::scoped_lock guard(*lock);
    log << line << std::endl;
  };
}

inline const char* kPreprocessingLabel = "log-STFT (32, 9, 19)";

}  // namespace detail

// ---- synth ---------------------------------------------------------------------

inline SynthCorpus cmd_synth(const RunConfig& cfg, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto started = detail::utc_now();
  detail::prepare_output(cfg);
  auto corpus = generate_synthetic(cfg.synth_spec(), cfg.output);
  std::string table = "class  events  minutes\n";
  detail::ojson summary = detail::ojson::array();
  for (const auto& c : corpus.summary) {
    std::ostringstream row;
    row << std::left << std::setw(7) << c.code << std::right << std::setw(6) << c.events << "  " << std::setw(7)
        << detail::fixed(c.minutes, 2) << "\n";
    table += row.str();
    summary.push_back({{"class", c.code}, {"events", c.events}, {"minutes", c.minutes}});
  }
  detail::write_text(cfg.output / "summary.txt", table);
  detail::write_json(cfg.output / "summary.json", {{"schema", corpus.manifest.schema.name()}, {"classes", summary}});
  log << "synthetic corpus: " << corpus.manifest.rows.size() << " recordings in " << cfg.output.string() << "\n"
      << table;
  detail::write_meta(cfg.output, "synth", started,
                     std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return corpus;
}

// ---- preprocess ------------------------------------------------------------------

inline PreprocessResult cmd_preprocess(const RunConfig& cfg, const std::filesystem::path& manifest_path,
                                       std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto started = detail::utc_now();
  const auto manifest = load_manifest(manifest_path, schema_by_name(cfg.schema));
  detail::prepare_output(cfg);
  auto result = preprocess_corpus(manifest, cfg.stft, kCanonicalMontage, cfg.jobs);
  const auto& rep = result.report;

  detail::ojson j;
  j["schema"] = manifest.schema.name();
  j["recordings"] = rep.recordings;
  j["recordings_ok"] = rep.recordings_ok;
  j["samples"] = result.dataset.size();
  j["sample_shape"] = kSampleShape;
  j["samples_per_class"] = detail::ojson::object();
  for (std::size_t c = 0; c < manifest.schema.size(); ++c) {
    j["samples_per_class"][manifest.schema.at(c).code] = rep.samples_per_class.at(c);
  }
  j["errors"] = detail::ojson::array();
  for (const auto& e : rep.errors) j["errors"].push_back({{"file", e.file}, {"message", e.message}});
  detail::write_json(cfg.output / "preprocess_report.json", j);

  log << "recordings: " << rep.recordings_ok << " of " << rep.recordings << " processed\n";
  for (const auto& e : rep.errors) log << "  error: " << e.file << ": " << e.message << "\n";
  for (std::size_t c = 0; c < manifest.schema.size(); ++c) {
    log << "  " << manifest.schema.at(c).code << ": " << rep.samples_per_class.at(c) << " windows\n";
  }
  if (result.dataset.size() == 0) throw IngestionError("no samples produced from " + manifest_path.string());
  write_dataset(cfg.output, result.dataset);
  log << "dataset: " << result.dataset.size() << " samples of shape " << detail::shape_text(kSampleShape) << "\n";
  detail::write_meta(cfg.output, "preprocess", started,
                     std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return result;
}

// ---- crossval ---------------------------------------------------------------------

inline nlohmann::ordered_json crossval_results_json(const CrossValResult& r, const Dataset& ds,
                                                    const RunConfig& cfg) {
  using detail::ojson;
  ojson j;
  j["format"] = "hybil-crossval";
  j["version"] = 1;
  j["settings"] = settings_json(cfg);
  j["dataset"] = {{"schema", ds.schema.name()}, {"samples", ds.size()}, {"class_counts", ds.class_counts()}};
  j["folds"] = {{"k", r.plan.k}, {"unit", to_string(r.plan.unit)}, {"validation", r.plan.validation},
                {"warnings", r.plan.warnings}};
  j["models"] = ojson::array();
  for (const auto& kr : r.kinds) {
    ojson m;
    m["model"] = to_string(kr.kind);
    m["name"] = display_name(kr.kind);
    m["fold_f1"] = kr.fold_f1();
    m["mean_f1"] = kr.mean_f1;
    m["std_f1"] = kr.std_f1;
    m["mean_macro_f1"] = kr.mean_macro_f1;
    m["folds"] = ojson::array();
    for (const auto& f : kr.folds) {
      ojson fj;
      fj["fold"] = f.fold;
      fj["report"] = detail::report_json(f.confusion, ds.schema);
      fj["stages"] = ojson::array();
      for (const auto& s : f.stages) fj["stages"].push_back(detail::stage_json(s));
      m["folds"].push_back(fj);
    }
    j["models"].push_back(m);
  }
  j["comparisons"] = ojson::array();
  for (std::size_t a = 0; a < r.kinds.size(); ++a) {
    for (std::size_t b = a + 1; b < r.kinds.size(); ++b) {
      const auto mw = mann_whitney_u(r.kinds[a].fold_f1(), r.kinds[b].fold_f1());
      j["comparisons"].push_back({{"a", to_string(r.kinds[a].kind)},
                                  {"b", to_string(r.kinds[b].kind)},
                                  {"test", "mann-whitney-u"},
                                  {"u_a", mw.u_a},
                                  {"u_b", mw.u_b},
                                  {"u", mw.u},
                                  {"p", mw.p},
                                  {"exact", mw.exact}});
    }
  }
  return j;
}

// Table with one row per model: dataset, preprocessing, model, F1.
inline std::string crossval_summary(const CrossValResult& r, const Dataset& ds, const RunConfig& cfg) {
  std::ostringstream os;
  os << std::left << std::setw(28) << "dataset" << std::setw(24) << "preprocessing" << std::setw(10) << "model"
     << "weighted F1 (mean +/- std over " << r.plan.k << " " << to_string(cfg.strata) << "-stratified folds)\n";
  for (const auto& kr : r.kinds) {
    os << std::left << std::setw(28) << detail::dataset_label(ds) << std::setw(24) << detail::kPreprocessingLabel
       << std::setw(10) << display_name(kr.kind) << detail::fixed(kr.mean_f1) << " +/- " << detail::fixed(kr.std_f1)
       << "\n";
  }
  return os.str();
}

inline CrossValResult cmd_crossval(const RunConfig& cfg, const std::filesystem::path& dataset_dir, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto started = detail::utc_now();
  const Dataset ds = read_dataset(dataset_dir);
  if (ds.schema.name() != cfg.schema) {
    throw SchemaError("dataset uses schema '" + ds.schema.name() + "' but the configuration names '" + cfg.schema +
                      "'");
  }
  detail::prepare_output(cfg);
  auto cv = cfg.crossval_config();
  detail::attach_progress(cv, log);
  const auto result = cross_validate(ds, cv);
  for (const auto& w : result.plan.warnings) log << "warning: " << w << "\n";

  const auto cm_dir = cfg.output / "confusion";
  const auto ck_dir = cfg.output / "checkpoints";
  std::filesystem::create_directories(cm_dir);
  for (const auto& kr : result.kinds) {
    for (const auto& f : kr.folds) {
      const std::string stem = std::string(to_string(kr.kind)) + "_fold" + std::to_string(f.fold);
      detail::write_text(cm_dir / (stem + ".csv"), detail::confusion_csv(f.confusion, ds.schema));
      if (f.model) save_checkpoint(ck_dir / to_string(kr.kind) / ("fold" + std::to_string(f.fold)), *f.model, ds.schema);
    }
  }
  detail::write_json(cfg.output / "results.json", crossval_results_json(result, ds, cfg));
  const auto summary = crossval_summary(result, ds, cfg);
  detail::write_text(cfg.output / "summary.txt", summary);
  log << summary;
  detail::write_meta(cfg.output, "crossval", started,
                     std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
                     {{"dataset", std::filesystem::absolute(dataset_dir).string()}});
  return result;
}

// ---- train -------------------------------------------------------------------------

// Trains every configured model once, validating on fold 0 of the fold plan, and
// saves one checkpoint per model.
inline std::vector<FoldOutcome> cmd_train(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
                                          std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto started = detail::utc_now();
  const Dataset ds = read_dataset(dataset_dir);
  detail::prepare_output(cfg);
  auto cv = cfg.crossval_config();
  detail::attach_progress(cv, log);
  const auto plan = make_fold_plan(ds, cv.folds, cv.strata, cv.train.seed);
  const auto outcomes = detail::run_fold(ds, plan, 0, cv);
  detail::ojson j;
  j["format"] = "hybil-train";
  j["settings"] = settings_json(cfg);
  j["validation"] = plan.validation[0];
  j["models"] = detail::ojson::array();
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    const auto kind = cfg.models[i];
    save_checkpoint(cfg.output / "checkpoints" / to_string(kind), *o.model, ds.schema);
    detail::ojson m;
    m["model"] = to_string(kind);
    m["report"] = detail::report_json(o.confusion, ds.schema);
    m["stages"] = detail::ojson::array();
    for (const auto& s : o.stages) m["stages"].push_back(detail::stage_json(s));
    j["models"].push_back(m);
    log << display_name(kind) << ": validation weighted F1 " << detail::fixed(o.report.weighted_f1) << "\n";
  }
  detail::write_json(cfg.output / "train.json", j);
  detail::write_meta(cfg.output, "train", started,
                     std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return outcomes;
}

// ---- evaluate -------------------------------------------------------------------------

struct EvaluateResult {
  Evaluation evaluation;
  ClassReport report;
  double latency_ms = 0.0;  // mean forward time per sample
};

// Forward-only evaluation of a checkpoint, on the whole dataset or on one
// validation fold of the configured fold plan.
inline EvaluateResult cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& checkpoint_dir,
                                   const std::filesystem::path& dataset_dir, std::optional<std::size_t> fold,
                                   std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto started = detail::utc_now();
  const Checkpoint ck = load_checkpoint(checkpoint_dir);
  const Dataset ds = read_dataset(dataset_dir);
  if (!(ck.schema == ds.schema)) {
    throw SchemaError("checkpoint schema '" + ck.schema.name() + "' (" + std::to_string(ck.schema.size()) +
                      " classes) does not match dataset schema '" + ds.schema.name() + "' (" +
                      std::to_string(ds.schema.size()) + " classes)");
  }
  SampleSet set(ds);
  if (fold) {
    const auto plan = make_fold_plan(ds, cfg.folds, cfg.strata, cfg.seed);
    if (*fold >= plan.k) throw ConfigError("fold " + std::to_string(*fold) + " outside 0.." + std::to_string(plan.k - 1));
    set = SampleSet(ds, plan.validation[*fold]);
  }
  if (set.empty()) throw ConfigError("nothing to evaluate");
  detail::prepare_output(cfg);

  EvaluateResult r;
  const auto f0 = std::chrono::steady_clock::now();
  r.evaluation = evaluate(ck.model, set);
  const auto f1 = std::chrono::steady_clock::now();
  r.report = class_report(r.evaluation.confusion);
  r.latency_ms = std::chrono::duration<double, std::milli>(f1 - f0).count() / static_cast<double>(set.size());

  detail::ojson j;
  j["format"] = "hybil-evaluate";
  j["model"] = to_string(ck.model.kind());
  j["samples"] = set.size();
  if (fold) j["fold"] = *fold;
  j["loss"] = r.evaluation.loss;
  j["report"] = detail::report_json(r.evaluation.confusion, ds.schema);
  detail::write_json(cfg.output / "report.json", j);
  detail::write_text(cfg.output / "confusion.csv", detail::confusion_csv(r.evaluation.confusion, ds.schema));
  log << display_name(ck.model.kind()) << " on " << set.size() << " samples: weighted F1 "
      << detail::fixed(r.report.weighted_f1) << ", " << detail::fixed(r.latency_ms, 3) << " ms per sample\n";
  detail::write_meta(cfg.output, "evaluate", started,
                     std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
                     {{"checkpoint", std::filesystem::absolute(checkpoint_dir).string()},
                      {"latency_ms_per_sample", r.latency_ms}});
  return r;
}

}  // namespace hybil
