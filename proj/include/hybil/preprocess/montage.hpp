#pragma once

#include <array>
#include <cctype>
#include <string>
#include <string_view>

#include "hybil/preprocess/recording.hpp"

namespace hybil {

using Montage = std::array<std::string_view, 19>;

// Left-to-right, front-to-back 10-20 ordering.
inline constexpr Montage kCanonicalMontage{"Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T3", "C3", "Cz",
                                           "C4",  "T4",  "T5", "P3", "Pz", "P4", "T6", "O1", "O2"};

// "EEG FP1-REF" -> "FP1"
inline std::string normalize_channel_label(std::string_view label) {
  std::string s;
  for (char c : label) s.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  auto start = s.find_first_not_of(' ');
  s = start == std::string::npos ? "" : s.substr(start);
  if (s.starts_with("EEG ")) s = s.substr(4);
  if (auto dash = s.find('-'); dash != std::string::npos) s = s.substr(0, dash);
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

// Picks the montage channels in montage order.
inline Recording select_channels(const Recording& rec, const Montage& montage = kCanonicalMontage) {
  std::vector<std::size_t> rows;
  std::string missing;
  for (auto want : montage) {
    const auto key = normalize_channel_label(want);
    std::size_t found = rec.channels.size();
    for (std::size_t i = 0; i < rec.channels.size(); ++i) {
      if (normalize_channel_label(rec.channels[i]) == key) {
        found = i;
        break;
      }
    }
    if (found == rec.channels.size()) {
      missing += (missing.empty() ? "" : ", ") + std::string(want);
    } else {
      rows.push_back(found);
    }
  }
  if (!missing.empty()) throw IngestionError(rec.id + ": missing channels " + missing);

  Recording out = rec;
  const std::size_t n = rec.samples();
  out.data = Tensor({montage.size(), n});
  out.channels.clear();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const float* src = rec.data.raw() + rows[r] * n;
    std::copy(src, src + n, out.data.raw() + r * n);
    out.channels.emplace_back(montage[r]);
  }
  return out;
}

}  // namespace hybil
