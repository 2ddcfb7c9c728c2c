#ifndef XOVER_SEQUENCE_HPP
#define XOVER_SEQUENCE_HPP

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace xover {

enum class Treatment : std::uint8_t { A = 0, B = 1 };

/// Opposite treatment (A <-> B).
constexpr Treatment other(Treatment t) {
  return t == Treatment::A ? Treatment::B : Treatment::A;
}

/// +1 for treatment A, -1 for treatment B (two-treatment sign coding).
constexpr double phi_code(Treatment t) {
  return t == Treatment::A ? 1.0 : -1.0;
}

/// An ordered assignment of treatments to a subject's periods, e.g. "ABB".
/// Periods are restricted to 2..8.
class TreatmentSequence {
 public:
  static constexpr int kMinPeriods = 2;
  static constexpr int kMaxPeriods = 8;

  explicit TreatmentSequence(std::vector<Treatment> entries);

  /// Parses a string over {A, B}, e.g. "ABB". Throws std::invalid_argument
  /// on bad characters or out-of-range length.
  static TreatmentSequence parse(std::string_view text);

  int periods() const { return static_cast<int>(entries_.size()); }
  Treatment at(int period) const { return entries_.at(static_cast<std::size_t>(period)); }
  const std::vector<Treatment>& entries() const { return entries_; }

  /// Swaps A and B elementwise. An involution: s.dual().dual() == s.
  TreatmentSequence dual() const;

  /// Canonical string form, e.g. "ABB".
  std::string str() const;

  friend bool operator==(const TreatmentSequence&, const TreatmentSequence&) = default;
  friend auto operator<=>(const TreatmentSequence& a, const TreatmentSequence& b) {
    return a.entries_ <=> b.entries_;
  }

 private:
  std::vector<Treatment> entries_;
};

/// All 2^p sequences of length p in lexicographic order (A < B).
std::vector<TreatmentSequence> all_sequences(int periods);

}  // namespace xover

#endif  // XOVER_SEQUENCE_HPP
