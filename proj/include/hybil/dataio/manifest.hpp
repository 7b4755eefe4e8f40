#pragma once

// Corpus manifest: a CSV file with header
//
//   file,sample_rate,channels,annotations,patient_id,event_id
//
// `file` is an EEGT tensor [channels, samples] relative to the manifest's
// directory; `channels` is a ';'-separated label list; `annotations` is a
// ';'-separated list of start:end:label triples in seconds.

#include <boost/tokenizer.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "hybil/core/text.hpp"
#include "hybil/dataio/schema.hpp"

namespace hybil {

struct Annotation {
  double start = 0.0;  // s
  double end = 0.0;    // s
  std::size_t label = 0;

  bool operator==(const Annotation&) const = default;
};

struct ManifestRow {
  std::string file;
  double sample_rate = 0.0;
  std::vector<std::string> channels;
  std::vector<Annotation> annotations;
  std::string patient_id;
  std::string event_id;

  bool operator==(const ManifestRow&) const = default;
};

struct CorpusManifest {
  LabelSchema schema;
  std::filesystem::path root;  // directory that `file` entries are relative to
  std::vector<ManifestRow> rows;
};

inline const std::vector<std::string> kManifestColumns{"file",        "sample_rate", "channels",
                                                       "annotations", "patient_id",  "event_id"};

namespace detail {

inline std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  try {
    boost::tokenizer<boost::escaped_list_separator<char>> tok(line);
    for (const auto& f : tok) out.emplace_back(trim(f));
  } catch (const boost::escaped_list_error& e) {
    throw FormatError(std::string("malformed CSV line: ") + e.what());
  }
  return out;
}

inline std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\\") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + "\"";
}

}  // namespace detail

inline std::vector<Annotation> parse_annotations(const std::string& text, const LabelSchema& schema,
                                                 const std::string& where) {
  std::vector<Annotation> out;
  if (trim(text).empty()) return out;
  for (const auto& triple : split(text, ';')) {
    const auto parts = split(triple, ':');
    if (parts.size() != 3) throw FormatError(where + ": annotation \"" + triple + "\" is not start:end:label");
    Annotation a;
    a.start = parse_real(parts[0], where + " annotation start");
    a.end = parse_real(parts[1], where + " annotation end");
    const auto label = schema.find(parts[2]);
    if (!label) {
      throw SchemaError(where + ": label \"" + parts[2] + "\" is not a class of schema '" + schema.name() + "'");
    }
    a.label = *label;
    if (!(a.start >= 0.0) || !(a.end > a.start)) {
      throw FormatError(where + ": annotation " + triple + " must satisfy 0 <= start < end");
    }
    out.push_back(a);
  }
  return out;
}

inline CorpusManifest parse_manifest(std::istream& in, const LabelSchema& schema, std::filesystem::path root = {}) {
  CorpusManifest m{schema, std::move(root), {}};
  std::string line;
  if (!std::getline(in, line)) throw FormatError("manifest is empty (missing header)");
  if (detail::csv_fields(line) != kManifestColumns) {
    throw FormatError("manifest header must be: file,sample_rate,channels,annotations,patient_id,event_id");
  }
  std::set<std::string> events;
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    if (trim(line).empty()) continue;
    const std::string where = "manifest row " + std::to_string(lineno);
    const auto f = detail::csv_fields(line);
    if (f.size() != kManifestColumns.size()) {
      throw FormatError(where + ": expected 6 fields, got " + std::to_string(f.size()));
    }
    ManifestRow row;
    row.file = f[0];
    row.sample_rate = parse_real(f[1], where + " sample_rate");
    if (!(row.sample_rate > 0.0)) throw FormatError(where + ": sample_rate must be positive");
    row.channels = split(f[2], ';');
    row.annotations = parse_annotations(f[3], schema, where);
    row.patient_id = f[4];
    row.event_id = f[5];
    if (row.event_id.empty()) throw FormatError(where + ": empty event_id");
    if (!events.insert(row.event_id).second) throw SchemaError(where + ": duplicate event_id " + row.event_id);
    m.rows.push_back(std::move(row));
  }
  return m;
}

inline CorpusManifest load_manifest(const std::filesystem::path& path, const LabelSchema& schema) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  return parse_manifest(in, schema, path.parent_path());
}

inline void write_manifest(const std::filesystem::path& path, const CorpusManifest& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write manifest " + path.string());
  out << "file,sample_rate,channels,annotations,patient_id,event_id\n";
  for (const auto& r : m.rows) {
    std::string channels, annotations;
    for (std::size_t i = 0; i < r.channels.size(); ++i) channels += (i ? ";" : "") + r.channels[i];
    for (std::size_t i = 0; i < r.annotations.size(); ++i) {
      const auto& a = r.annotations[i];
      annotations += (i ? ";" : "") + format_real(a.start) + ":" + format_real(a.end) + ":" + m.schema.at(a.label).code;
    }
    out << detail::csv_quote(r.file) << ',' << format_real(r.sample_rate) << ',' << detail::csv_quote(channels) << ','
        << detail::csv_quote(annotations) << ',' << detail::csv_quote(r.patient_id) << ','
        << detail::csv_quote(r.event_id) << '\n';
  }
}

}  // namespace hybil
