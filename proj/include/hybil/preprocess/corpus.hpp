#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <thread>

#include "hybil/dataio/manifest.hpp"
#include "hybil/dataio/tensor_io.hpp"
#include "hybil/preprocess/montage.hpp"
#include "hybil/preprocess/resample.hpp"
#include "hybil/preprocess/segment.hpp"
#include "hybil/preprocess/stft.hpp"

namespace hybil {

struct FileError {
  std::string file;
  std::string message;
};

struct PreprocessReport {
  std::size_t recordings = 0;
  std::size_t recordings_ok = 0;
  std::vector<std::size_t> samples_per_class;
  std::vector<FileError> errors;
};

struct PreprocessResult {
  Dataset dataset;
  PreprocessReport report;
};

inline Recording load_recording(const CorpusManifest& manifest, const ManifestRow& row) {
  Recording rec;
  rec.id = row.file;
  rec.channels = row.channels;
  rec.sample_rate = row.sample_rate;
  rec.data = read_tensor(manifest.root / row.file);
  rec.annotations = row.annotations;
  rec.patient_id = row.patient_id;
  rec.event_id = row.event_id;
  rec.validate();
  return rec;
}

// resample -> select_channels -> segment -> stft_features for one recording.
inline std::vector<SpectroSample> preprocess_recording(const Recording& raw, const StftConfig& cfg,
                                                       const Montage& montage = kCanonicalMontage) {
  const Recording rec = select_channels(resample(raw, cfg.target_rate), montage);
  std::vector<SpectroSample> out;
  for (auto& w : segment(rec, cfg.target_rate)) {
    out.push_back({stft_features(w.data, cfg), w.label, std::move(w.provenance)});
  }
  return out;
}

// Per-file failures are collected in the report; the rest of the corpus is
// still processed. Output order is (recording id, window start) regardless of
// manifest order or thread count.
inline PreprocessResult preprocess_corpus(const CorpusManifest& manifest, const StftConfig& cfg = {},
                                          const Montage& montage = kCanonicalMontage, std::size_t jobs = 1) {
  cfg.validate();
  const std::size_t n = manifest.rows.size();
  std::vector<std::vector<SpectroSample>> per_file(n);
  std::vector<std::string> failures(n);
  std::atomic<std::size_t> next{0};
  const std::function<void()> worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        per_file[i] = preprocess_recording(load_recording(manifest, manifest.rows[i]), cfg, montage);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < std::max<std::size_t>(1, std::min(jobs, n)); ++t) pool.emplace_back(worker);
    worker();
  }

  PreprocessResult result;
  result.dataset.schema = manifest.schema;
  result.report.recordings = n;
  result.report.samples_per_class.assign(manifest.schema.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!failures[i].empty()) {
      result.report.errors.push_back({manifest.rows[i].file, failures[i]});
      continue;
    }
    ++result.report.recordings_ok;
    for (auto& s : per_file[i]) result.dataset.samples.push_back(std::move(s));
  }
  std::stable_sort(result.dataset.samples.begin(), result.dataset.samples.end(), [](const auto& a, const auto& b) {
    return std::tie(a.provenance.recording, a.provenance.start) < std::tie(b.provenance.recording, b.provenance.start);
  });
  std::sort(result.report.errors.begin(), result.report.errors.end(),
            [](const auto& a, const auto& b) { return a.file < b.file; });
  for (const auto& s : result.dataset.samples) ++result.report.samples_per_class[s.label];
  return result;
}

}  // namespace hybil
