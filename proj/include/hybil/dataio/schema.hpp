#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hybil/core/error.hpp"

namespace hybil {

struct ClassInfo {
  std::string code;
  std::string name;

  bool operator==(const ClassInfo&) const = default;
};

// Named, ordered class list. Class id = position in the list.
class LabelSchema {
 public:
  LabelSchema() = default;
  LabelSchema(std::string name, std::vector<ClassInfo> classes) : name_(std::move(name)), classes_(std::move(classes)) {
    if (classes_.size() < 2) throw ConfigError("schema '" + name_ + "' needs at least 2 classes");
  }

  const std::string& name() const noexcept { return name_; }
  std::size_t size() const noexcept { return classes_.size(); }
  const std::vector<ClassInfo>& classes() const noexcept { return classes_; }
  const ClassInfo& at(std::size_t id) const { return classes_.at(id); }

  // Matches a class code or full name, ignoring case, spaces, '-' and '_'.
  std::optional<std::size_t> find(std::string_view label) const {
    const auto key = fold(label);
    for (std::size_t i = 0; i < classes_.size(); ++i) {
      if (fold(classes_[i].code) == key || fold(classes_[i].name) == key) return i;
    }
    return std::nullopt;
  }

  std::size_t resolve(std::string_view label) const {
    if (auto id = find(label)) return *id;
    throw SchemaError("label \"" + std::string(label) + "\" is not a class of schema '" + name_ + "'");
  }

  bool operator==(const LabelSchema&) const = default;

 private:
  static std::string fold(std::string_view s) {
    std::string out;
    for (char c : s) {
      if (c == ' ' || c == '-' || c == '_') continue;
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
  }

  std::string name_;
  std::vector<ClassInfo> classes_;
};

inline LabelSchema tuh_schema() {
  return {"tuh8",
          {{"FNSZ", "focal non-specific"},
           {"GNSZ", "generalized non-specific"},
           {"SPSZ", "simple partial"},
           {"CPSZ", "complex partial"},
           {"ABSZ", "absence"},
           {"TNSZ", "tonic"},
           {"TCSZ", "tonic-clonic"},
           {"MYSZ", "myoclonic"}}};
}

inline LabelSchema epilepsiae_schema() {
  return {"epi4",
          {{"CP", "complex partial"},
           {"UC", "unclassified"},
           {"SP", "simple partial"},
           {"SG", "secondarily generalized"}}};
}

inline LabelSchema synthetic_schema(std::size_t k) {
  std::vector<ClassInfo> classes;
  for (std::size_t i = 0; i < k; ++i) classes.push_back({"C" + std::to_string(i), "synthetic class " + std::to_string(i)});
  return {"synth" + std::to_string(k), std::move(classes)};
}

// "tuh8", "epi4" or "synthK" with K >= 2.
inline LabelSchema schema_by_name(std::string_view name) {
  if (name == "tuh8") return tuh_schema();
  if (name == "epi4") return epilepsiae_schema();
  if (name.starts_with("synth") && name.size() > 5 &&
      std::all_of(name.begin() + 5, name.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    const auto k = std::stoul(std::string(name.substr(5)));
    if (k >= 2 && k <= 1000) return synthetic_schema(k);
  }
  throw ConfigError("unknown schema '" + std::string(name) + "' (expected tuh8, epi4 or synthK)");
}

}  // namespace hybil
