#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "hybil/core/random.hpp"
#include "hybil/dataio/manifest.hpp"
#include "hybil/dataio/tensor_io.hpp"

namespace hybil {

struct Band {
  double center = 10.0;    // Hz
  double bandwidth = 4.0;  // Hz
  double amplitude = 1.0;

  bool operator==(const Band&) const = default;
};

// Seeded synthetic corpus: one recording per event, each event a class-specific
// band-limited sinusoid mixture over 19-channel Gaussian noise.
struct SynthSpec {
  std::size_t classes = 8;
  std::vector<Band> bands;  // one per class; empty = default_bands(classes)
  double noise = 1.0;       // noise standard deviation
  std::size_t events_per_class = 20;
  double event_duration = 4.0;  // s
  double margin = 1.0;          // s of background before and after each event
  double source_rate = 256.0;   // Hz
  double nyquist_rate = 250.0;  // bands must stay below half of this
  std::size_t components = 3;   // sinusoids per event
  std::uint64_t seed = 1;

  bool operator==(const SynthSpec&) const = default;
};

// Evenly spaced centers from 6 Hz, at most 12 Hz apart, all below 100 Hz.
inline std::vector<Band> default_bands(std::size_t classes) {
  std::vector<Band> out;
  const double step = classes > 1 ? std::min(12.0, 94.0 / static_cast<double>(classes - 1)) : 0.0;
  for (std::size_t k = 0; k < classes; ++k) out.push_back({6.0 + step * static_cast<double>(k), 4.0, 1.0});
  return out;
}

inline std::vector<Band> resolved_bands(const SynthSpec& spec) {
  return spec.bands.empty() ? default_bands(spec.classes) : spec.bands;
}

inline void validate(const SynthSpec& spec) {
  if (spec.classes < 2) throw ConfigError("synth.classes must be at least 2");
  const auto bands = resolved_bands(spec);
  if (bands.size() != spec.classes) {
    throw ConfigError("synth.bands lists " + std::to_string(bands.size()) + " bands for " +
                      std::to_string(spec.classes) + " classes");
  }
  const double nyquist = 0.5 * std::min(spec.nyquist_rate, spec.source_rate);
  for (std::size_t k = 0; k < bands.size(); ++k) {
    const auto& b = bands[k];
    const std::string who = "synth band of class C" + std::to_string(k);
    if (!(b.bandwidth >= 0.0) || !(b.amplitude >= 0.0) || !(b.center - 0.5 * b.bandwidth > 0.0)) {
      throw ConfigError(who + ": center must exceed half the bandwidth, bandwidth and amplitude must be non-negative");
    }
    if (!(b.center + 0.5 * b.bandwidth < nyquist)) {
      throw ConfigError(who + " (" + format_real(b.center) + " +/- " + format_real(0.5 * b.bandwidth) +
                        " Hz) reaches the Nyquist frequency " + format_real(nyquist) + " Hz");
    }
  }
  if (!(spec.noise >= 0.0)) throw ConfigError("synth.noise must be non-negative");
  if (spec.events_per_class == 0) throw ConfigError("synth.events_per_class must be positive");
  if (!(spec.event_duration > 0.0)) throw ConfigError("synth.event_duration must be positive");
  if (!(spec.margin >= 0.0)) throw ConfigError("synth.margin must be non-negative");
  if (!(spec.source_rate > 0.0)) throw ConfigError("synth.source_rate must be positive");
  if (spec.components == 0) throw ConfigError("synth.components must be positive");
}

// 19 montage electrodes plus two reference electrodes, stored in a shuffled
// order with "EEG <NAME>-REF" labels as raw recordings typically are.
inline const std::vector<std::string>& synthetic_electrodes() {
  static const std::vector<std::string> names{"FP1", "FP2", "F7", "F3", "FZ", "F4", "F8", "T3", "C3", "CZ", "C4",
                                              "T4",  "T5",  "P3", "PZ", "P4", "T6", "O1", "O2", "A1", "A2"};
  return names;
}

struct SynthClassSummary {
  std::string code;
  std::size_t events = 0;
  double minutes = 0.0;  // annotated seizure time
};

struct SynthCorpus {
  CorpusManifest manifest;
  std::vector<SynthClassSummary> summary;
};

// Writes <out>/recordings/*.eegt and <out>/manifest.csv.
inline SynthCorpus generate_synthetic(const SynthSpec& spec, const std::filesystem::path& out) {
  validate(spec);
  const auto bands = resolved_bands(spec);
  SynthCorpus corpus;
  corpus.manifest.schema = synthetic_schema(spec.classes);
  corpus.manifest.root = out;
  for (std::size_t k = 0; k < spec.classes; ++k) corpus.summary.push_back({corpus.manifest.schema.at(k).code, 0, 0.0});

  const auto& electrodes = synthetic_electrodes();
  const std::size_t channels = electrodes.size();
  const auto total = static_cast<std::size_t>(std::llround((2.0 * spec.margin + spec.event_duration) * spec.source_rate));
  const std::size_t events = spec.classes * spec.events_per_class;
  for (std::size_t e = 0; e < events; ++e) {
    const std::size_t label = e % spec.classes;
    Rng rng(derive_seed(spec.seed, e));

    std::vector<std::size_t> order(channels);
    for (std::size_t i = 0; i < channels; ++i) order[i] = i;
    rng.shuffle(std::span<std::size_t>(order));

    Tensor data({channels, total});
    for (auto& v : data.data()) v = static_cast<float>(spec.noise * rng.normal());

    const auto& band = bands[label];
    std::vector<double> freq(spec.components), phase(spec.components);
    for (std::size_t m = 0; m < spec.components; ++m) {
      freq[m] = band.center + band.bandwidth * (rng.uniform() - 0.5);
      phase[m] = 2.0 * std::numbers::pi * rng.uniform();
    }
    const auto first = static_cast<std::size_t>(std::llround(spec.margin * spec.source_rate));
    const auto last = static_cast<std::size_t>(std::llround((spec.margin + spec.event_duration) * spec.source_rate));
    for (std::size_t r = 0; r < channels; ++r) {
      const std::size_t electrode = order[r];
      if (electrode >= 19) continue;  // reference electrodes carry noise only
      const double gain = 0.5 + rng.uniform();
      float* row = data.raw() + r * total;
      for (std::size_t s = first; s < last; ++s) {
        const double t = static_cast<double>(s) / spec.source_rate;
        double v = 0.0;
        for (std::size_t m = 0; m < spec.components; ++m) v += std::sin(2.0 * std::numbers::pi * freq[m] * t + phase[m]);
        row[s] += static_cast<float>(gain * band.amplitude * v);
      }
    }

    char name[32];
    std::snprintf(name, sizeof(name), "%05zu", e);
    ManifestRow row;
    row.file = std::string("recordings/rec_") + name + ".eegt";
    row.sample_rate = spec.source_rate;
    for (auto i : order) row.channels.push_back("EEG " + electrodes[i] + "-REF");
    row.annotations.push_back({spec.margin, spec.margin + spec.event_duration, label});
    row.patient_id = "P" + std::to_string(e % 10);
    row.event_id = std::string("E") + name;
    write_tensor(out / row.file, data);
    corpus.manifest.rows.push_back(std::move(row));
    ++corpus.summary[label].events;
    corpus.summary[label].minutes += spec.event_duration / 60.0;
  }
  std::filesystem::create_directories(out);
  write_manifest(out / "manifest.csv", corpus.manifest);
  return corpus;
}

}  // namespace hybil
