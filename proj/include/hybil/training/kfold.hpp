#pragma once

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hybil/core/random.hpp"
#include "hybil/core/text.hpp"

namespace hybil {

// Stratification unit: whole seizure events, or individual windows.
enum class Strata { event, window };

inline std::string_view to_string(Strata s) { return s == Strata::event ? "event" : "window"; }

inline Strata parse_strata(std::string_view text) {
  if (text == "event") return Strata::event;
  if (text == "window") return Strata::window;
  throw ConfigError("unknown stratification unit '" + std::string(text) + "' (expected event|window)");
}

struct FoldPlan {
  std::size_t k = 0;
  Strata unit = Strata::event;
  std::vector<std::vector<std::size_t>> validation;  // sorted sample indices per fold
  std::vector<std::string> warnings;

  // Complement of fold f, sorted.
  std::vector<std::size_t> training(std::size_t f) const {
    std::vector<std::size_t> out;
    std::size_t n = 0;
    for (const auto& v : validation) n += v.size();
    std::vector<bool> held(n, false);
    for (auto i : validation.at(f)) held[i] = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (!held[i]) out.push_back(i);
    }
    return out;
  }

  bool operator==(const FoldPlan&) const = default;
};

// Per class, the units (events or windows) are shuffled with a class-specific
// seed and dealt to folds round-robin; the dealing position carries over from
// one class to the next so fold sizes stay balanced overall. In event mode
// `groups[i]` names the event of sample i and a unit takes the label of its
// first window.
inline FoldPlan stratified_kfold(std::span<const std::size_t> labels, std::span<const std::string> groups,
                                 std::size_t k, Strata unit, std::uint64_t seed) {
  if (k < 2) throw ConfigError("cross-validation needs k >= 2, got " + std::to_string(k));
  if (labels.empty()) throw ConfigError("cross-validation: empty dataset");
  if (unit == Strata::event && groups.size() != labels.size()) {
    throw ConfigError("cross-validation: event mode needs one event id per sample");
  }
  // Units in order of first appearance, each with its member samples.
  std::vector<std::vector<std::size_t>> members;
  std::vector<std::size_t> unit_label;
  if (unit == Strata::window) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      members.push_back({i});
      unit_label.push_back(labels[i]);
    }
  } else {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto [it, fresh] = index.try_emplace(groups[i], members.size());
      if (fresh) {
        members.emplace_back();
        unit_label.push_back(labels[i]);
      }
      members[it->second].push_back(i);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t u = 0; u < members.size(); ++u) by_class[unit_label[u]].push_back(u);

  FoldPlan plan{k, unit, std::vector<std::vector<std::size_t>>(k), {}};
  std::size_t deal = 0;
  for (auto& [label, units] : by_class) {
    if (units.size() < k) {
      plan.warnings.push_back("class " + std::to_string(label) + " has " + std::to_string(units.size()) + " " +
                              std::string(to_string(unit)) + (units.size() == 1 ? "" : "s") + " for " +
                              std::to_string(k) + " folds; some folds will not validate on it");
    }
    Rng rng(derive_seed(seed, label));
    rng.shuffle(std::span<std::size_t>(units));
    for (auto u : units) {
      auto& fold = plan.validation[deal++ % k];
      fold.insert(fold.end(), members[u].begin(), members[u].end());
    }
  }
  for (auto& fold : plan.validation) std::sort(fold.begin(), fold.end());
  return plan;
}

}  // namespace hybil
