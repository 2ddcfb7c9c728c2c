#include "xover/sequence.hpp"

#include <stdexcept>

namespace xover {

TreatmentSequence::TreatmentSequence(std::vector<Treatment> entries)
    : entries_(std::move(entries)) {
  const auto p = entries_.size();
  if (p < kMinPeriods || p > kMaxPeriods) {
    throw std::invalid_argument("treatment sequence length must be in [2, 8], got " +
                                std::to_string(p));
  }
}

TreatmentSequence TreatmentSequence::parse(std::string_view text) {
  std::vector<Treatment> entries;
  entries.reserve(text.size());
  for (char ch : text) {
    if (ch == 'A' || ch == 'a') {
      entries.push_back(Treatment::A);
    } else if (ch == 'B' || ch == 'b') {
      entries.push_back(Treatment::B);
    } else {
      throw std::invalid_argument("invalid treatment symbol '" + std::string(1, ch) +
                                  "' in sequence \"" + std::string(text) + "\"");
    }
  }
  return TreatmentSequence(std::move(entries));
}

TreatmentSequence TreatmentSequence::dual() const {
  std::vector<Treatment> flipped;
  flipped.reserve(entries_.size());
  for (Treatment t : entries_) flipped.push_back(other(t));
  return TreatmentSequence(std::move(flipped));
}

std::string TreatmentSequence::str() const {
  std::string out;
  out.reserve(entries_.size());
  for (Treatment t : entries_) out.push_back(t == Treatment::A ? 'A' : 'B');
  return out;
}

std::vector<TreatmentSequence> all_sequences(int periods) {
  if (periods < TreatmentSequence::kMinPeriods || periods > TreatmentSequence::kMaxPeriods) {
    throw std::invalid_argument("period count must be in [2, 8]");
  }
  std::vector<TreatmentSequence> out;
  const unsigned count = 1u << periods;
  out.reserve(count);
  for (unsigned code = 0; code < count; ++code) {
    std::vector<Treatment> entries(static_cast<std::size_t>(periods));
    for (int i = 0; i < periods; ++i) {
      // most significant bit first, so A..A < A..B < ... < B..B
      const bool is_b = (code >> (periods - 1 - i)) & 1u;
      entries[static_cast<std::size_t>(i)] = is_b ? Treatment::B : Treatment::A;
    }
    out.emplace_back(std::move(entries));
  }
  return out;
}

}  // namespace xover
