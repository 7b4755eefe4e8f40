#pragma once

// Dataset directory:
//   dataset.json   schema name, class codes, sample count, sample shape
//   features.eegt  [N, 32, 9, 19] (absent when N == 0)
//   samples.csv    index,label,recording,event,start

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

#include "hybil/dataio/manifest.hpp"
#include "hybil/dataio/tensor_io.hpp"
#include "hybil/preprocess/sample.hpp"

namespace hybil {

inline void write_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  ds.validate();
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json meta;
  meta["schema"] = ds.schema.name();
  meta["classes"] = nlohmann::json::array();
  for (const auto& c : ds.schema.classes()) meta["classes"].push_back(c.code);
  meta["count"] = ds.size();
  meta["sample_shape"] = kSampleShape;
  std::ofstream(dir / "dataset.json") << meta.dump(2) << '\n';

  const std::size_t per = shape_size(kSampleShape);
  if (!ds.samples.empty()) {
    Tensor all({ds.size(), kFreqBins, kTimeFrames, kChannels});
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto& f = ds.samples[i].features;
      std::copy(f.raw(), f.raw() + per, all.raw() + i * per);
    }
    write_tensor(dir / "features.eegt", all);
  } else {
    std::filesystem::remove(dir / "features.eegt");
  }
  std::ofstream csv(dir / "samples.csv");
  csv << "index,label,recording,event,start\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& s = ds.samples[i];
    csv << i << ',' << ds.schema.at(s.label).code << ',' << detail::csv_quote(s.provenance.recording) << ','
        << detail::csv_quote(s.provenance.event) << ',' << format_real(s.provenance.start) << '\n';
  }
}

inline Dataset read_dataset(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "dataset.json");
  if (!meta_in) throw FormatError("cannot open " + (dir / "dataset.json").string());
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError((dir / "dataset.json").string() + ": " + e.what());
  }
  Dataset ds;
  try {
    ds.schema = schema_by_name(meta.at("schema").get<std::string>());
    if (meta.at("sample_shape").get<Shape>() != kSampleShape) {
      throw FormatError("dataset sample shape " + meta.at("sample_shape").dump() + " is not (32, 9, 19)");
    }
    const auto codes = meta.at("classes").get<std::vector<std::string>>();
    if (codes.size() != ds.schema.size()) throw SchemaError("dataset class list does not match " + ds.schema.name());
    for (std::size_t k = 0; k < codes.size(); ++k) {
      if (codes[k] != ds.schema.at(k).code) throw SchemaError("dataset class " + codes[k] + " out of schema order");
    }
    const auto count = meta.at("count").get<std::size_t>();
    std::ifstream csv(dir / "samples.csv");
    if (!csv) throw FormatError("cannot open " + (dir / "samples.csv").string());
    std::string line;
    std::getline(csv, line);
    while (std::getline(csv, line)) {
      if (trim(line).empty()) continue;
      const auto f = detail::csv_fields(line);
      if (f.size() != 5) throw FormatError("samples.csv: malformed line \"" + line + "\"");
      ds.samples.push_back({Tensor(), ds.schema.resolve(f[1]), {f[2], f[3], parse_real(f[4], "samples.csv start")}});
    }
    if (ds.samples.size() != count) {
      throw FormatError("samples.csv lists " + std::to_string(ds.samples.size()) + " samples, dataset.json " +
                        std::to_string(count));
    }
    if (count > 0) {
      const Tensor all = read_tensor(dir / "features.eegt");
      if (all.shape() != Shape{count, kFreqBins, kTimeFrames, kChannels}) {
        throw FormatError("features.eegt has shape " + shape_string(all.shape()) + " for " + std::to_string(count) +
                          " samples");
      }
      const std::size_t per = shape_size(kSampleShape);
      for (std::size_t i = 0; i < count; ++i) {
        ds.samples[i].features =
            Tensor(kSampleShape, std::vector<float>(all.raw() + i * per, all.raw() + (i + 1) * per));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError((dir / "dataset.json").string() + ": " + e.what());
  }
  ds.validate();
  return ds;
}

}  // namespace hybil
