#pragma once

// Run configuration: one JSON document covering every stage of the pipeline.
// Missing keys keep their defaults; unknown keys are rejected with their path.

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <concepts>
#include <set>

#include "hybil/dataio/schema.hpp"
#include "hybil/dataio/synth.hpp"
#include "hybil/preprocess/stft.hpp"
#include "hybil/training/crossval.hpp"

namespace hybil {

struct RunConfig {
  std::uint64_t seed = 1;
  std::string schema = "synth8";
  std::vector<ModelKind> models{ModelKind::hybrid};
  Strata strata = Strata::event;
  std::size_t folds = 5;
  std::size_t jobs = 1;
  std::filesystem::path output = "hybil-out";
  StftConfig stft;
  ModelDims dims;
  TrainConfig train;
  SynthSpec synth;  // its seed is taken from `seed`

  SynthSpec synth_spec() const {
    SynthSpec s = synth;
    s.seed = seed;
    return s;
  }

  TrainConfig train_config() const {
    TrainConfig t = train;
    t.seed = seed;
    return t;
  }

  CrossValConfig crossval_config() const {
    return {folds, strata, models, dims, train_config(), jobs, {}};
  }

  bool operator==(const RunConfig&) const = default;

  void validate() const {
    schema_by_name(schema);
    if (models.empty()) throw ConfigError("models: at least one model kind is required");
    if (folds < 2) throw ConfigError("folds must be at least 2");
    if (jobs == 0) throw ConfigError("jobs must be positive");
    if (dims.cnn_filters1 == 0 || dims.cnn_filters2 == 0 || dims.lstm_hidden1 == 0 || dims.feature_dim == 0) {
      throw ConfigError("dims: every width must be positive");
    }
    stft.validate();
    if (stft.freq_bins != kFreqBins || stft.frames != kTimeFrames) {
      throw ConfigError("stft: the models take " + std::to_string(kFreqBins) + " frequency bins and " +
                        std::to_string(kTimeFrames) + " frames");
    }
    train_config().validate();
    hybil::validate(synth_spec());
  }
};

namespace detail {

inline std::string strip_prefix(std::string_view what) {
  constexpr std::string_view p = "config error: ";
  if (what.starts_with(p)) what.remove_prefix(p.size());
  return std::string(what);
}

// Walks one JSON object, remembering which keys were read.
class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + "must be an object");
  }

  ~ConfigReader() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key '" + qualified(key) + "'");
    }
  }

  ConfigReader(const ConfigReader&) = delete;
  ConfigReader& operator=(const ConfigReader&) = delete;

  const nlohmann::json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <std::unsigned_integral U>
  void get(const std::string& key, U& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(qualified(key) + " must be a non-negative integer");
      out = v->get<U>();
    }
  }

  void get(const std::string& key, double& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number()) throw ConfigError(qualified(key) + " must be a number");
      out = v->get<double>();
    }
  }

  void get(const std::string& key, std::string& out) {
    if (const auto* v = find(key)) {
      if (!v->is_string()) throw ConfigError(qualified(key) + " must be a string");
      out = v->get<std::string>();
    }
  }

  template <typename F>
  void object(const std::string& key, F&& read) {
    if (const auto* v = find(key)) {
      ConfigReader sub(*v, qualified(key));
      read(sub);
    }
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "config " : path_ + " "; }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Parse, typename T>
void get_parsed(ConfigReader& r, const std::string& key, T& out, Parse parse) {
  std::string text;
  r.get(key, text);
  if (r.find(key)) {
    try {
      out = parse(text);
    } catch (const ConfigError& e) {
      throw ConfigError(r.qualified(key) + ": " + strip_prefix(e.what()));
    }
  }
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig c;
  {
    detail::ConfigReader r(j, "");
    r.get("seed", c.seed);
    r.get("schema", c.schema);
    if (const auto* m = r.find("models")) {
      if (!m->is_array()) throw ConfigError("models must be an array of model names");
      c.models.clear();
      for (const auto& e : *m) {
        if (!e.is_string()) throw ConfigError("models must be an array of model names");
        try {
          c.models.push_back(parse_model_kind(e.get<std::string>()));
        } catch (const ConfigError& err) {
          throw ConfigError("models: " + detail::strip_prefix(err.what()));
        }
      }
    }
    detail::get_parsed(r, "strata", c.strata, parse_strata);
    r.get("folds", c.folds);
    r.get("jobs", c.jobs);
    std::string output = c.output.string();
    r.get("output", output);
    c.output = output;
    r.object("stft", [&](detail::ConfigReader& s) {
      s.get("fft_size", c.stft.fft_size);
      s.get("overlap", c.stft.overlap);
      s.get("log_floor", c.stft.log_floor);
      s.get("target_rate", c.stft.target_rate);
      s.get("frames", c.stft.frames);
      s.get("freq_bins", c.stft.freq_bins);
    });
    r.object("dims", [&](detail::ConfigReader& s) {
      s.get("cnn_filters1", c.dims.cnn_filters1);
      s.get("cnn_filters2", c.dims.cnn_filters2);
      s.get("lstm_hidden1", c.dims.lstm_hidden1);
      s.get("feature_dim", c.dims.feature_dim);
    });
    r.object("train", [&](detail::ConfigReader& s) {
      s.get("learning_rate", c.train.learning_rate);
      s.get("fine_tune_rate", c.train.fine_tune_rate);
      s.get("batch_size", c.train.batch_size);
      s.get("max_epochs_base", c.train.max_epochs_base);
      s.get("max_epochs_head", c.train.max_epochs_head);
      s.get("max_epochs_finetune", c.train.max_epochs_finetune);
      s.get("patience", c.train.patience);
    });
    r.object("synth", [&](detail::ConfigReader& s) {
      s.get("classes", c.synth.classes);
      if (const auto* bands = s.find("bands")) {
        if (!bands->is_array()) throw ConfigError("synth.bands must be an array");
        c.synth.bands.clear();
        for (std::size_t i = 0; i < bands->size(); ++i) {
          Band b;
          detail::ConfigReader br((*bands)[i], "synth.bands[" + std::to_string(i) + "]");
          br.get("center", b.center);
          br.get("bandwidth", b.bandwidth);
          br.get("amplitude", b.amplitude);
          c.synth.bands.push_back(b);
        }
      }
      s.get("noise", c.synth.noise);
      s.get("events_per_class", c.synth.events_per_class);
      s.get("event_duration", c.synth.event_duration);
      s.get("margin", c.synth.margin);
      s.get("source_rate", c.synth.source_rate);
      s.get("nyquist_rate", c.synth.nyquist_rate);
      s.get("components", c.synth.components);
    });
  }
  c.validate();
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return parse_run_config(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// Everything except the output directory, which does not affect results.
inline nlohmann::ordered_json settings_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["schema"] = c.schema;
  j["models"] = nlohmann::ordered_json::array();
  for (auto m : c.models) j["models"].push_back(to_string(m));
  j["strata"] = to_string(c.strata);
  j["folds"] = c.folds;
  j["jobs"] = c.jobs;
  j["stft"] = {{"fft_size", c.stft.fft_size},       {"overlap", c.stft.overlap},
               {"log_floor", c.stft.log_floor},     {"target_rate", c.stft.target_rate},
               {"frames", c.stft.frames},           {"freq_bins", c.stft.freq_bins}};
  j["dims"] = {{"cnn_filters1", c.dims.cnn_filters1},
               {"cnn_filters2", c.dims.cnn_filters2},
               {"lstm_hidden1", c.dims.lstm_hidden1},
               {"feature_dim", c.dims.feature_dim}};
  j["train"] = {{"learning_rate", c.train.learning_rate},
                {"fine_tune_rate", c.train.fine_tune_rate},
                {"batch_size", c.train.batch_size},
                {"max_epochs_base", c.train.max_epochs_base},
                {"max_epochs_head", c.train.max_epochs_head},
                {"max_epochs_finetune", c.train.max_epochs_finetune},
                {"patience", c.train.patience}};
  nlohmann::ordered_json bands = nlohmann::ordered_json::array();
  for (const auto& b : c.synth.bands) {
    bands.push_back({{"center", b.center}, {"bandwidth", b.bandwidth}, {"amplitude", b.amplitude}});
  }
  j["synth"] = {{"classes", c.synth.classes},
                {"bands", bands},
                {"noise", c.synth.noise},
                {"events_per_class", c.synth.events_per_class},
                {"event_duration", c.synth.event_duration},
                {"margin", c.synth.margin},
                {"source_rate", c.synth.source_rate},
                {"nyquist_rate", c.synth.nyquist_rate},
                {"components", c.synth.components}};
  // jobs never changes results; leave it out so documents compare across job counts.
  j.erase("jobs");
  return j;
}

inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j = settings_json(c);
  j["jobs"] = c.jobs;
  j["output"] = c.output.string();
  return j;
}

}  // namespace hybil
