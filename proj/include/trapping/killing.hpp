#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace trapping {

/// Killing rate per trap. Infinity (hard traps, instant killing) is its own
/// state and never encoded as a large finite number.
class KillingRate {
 public:
  explicit KillingRate(double value) : value_(value), infinite_(false) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
      throw std::invalid_argument("killing rate must be finite and >= 0 (use KillingRate::infinite())");
    }
  }

  static KillingRate infinite() { return KillingRate(); }

  /// Accepts "inf" or a decimal number.
  static KillingRate parse(const std::string& text) {
    if (text == "inf" || text == "infinity") return infinite();
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("bad killing rate '" + text + "'");
    return KillingRate(v);
  }

  bool is_infinite() const { return infinite_; }
  bool is_zero() const { return !infinite_ && value_ == 0.0; }

  double value() const {
    if (infinite_) throw std::logic_error("infinite killing rate has no finite value");
    return value_;
  }

  /// exp(-gamma * integral); for gamma = inf, survival iff the walk never
  /// shared a site with a trap for positive time.
  double survival_weight(double integral) const {
    if (infinite_) return integral > 0.0 ? 0.0 : 1.0;
    return std::exp(-value_ * integral);
  }

  std::string to_string() const;

  friend bool operator==(const KillingRate& a, const KillingRate& b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }
  friend bool operator<(const KillingRate& a, const KillingRate& b) {
    if (a.infinite_) return false;
    return b.infinite_ || a.value_ < b.value_;
  }

 private:
  KillingRate() : value_(0.0), infinite_(true) {}
  double value_;
  bool infinite_;
};

}  // namespace trapping
