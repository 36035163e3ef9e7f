#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace ledgerlens {

inline constexpr double kNumberTolerance = 1e-9;

struct NumberSpan {
  double value = 0.0;
  std::size_t begin = 0;  // byte offset of the first character (sign or digit)
  std::size_t end = 0;    // one past the last digit
};

// Sorted multiset of numbers found in a piece of text.
class NumberMultiset {
 public:
  NumberMultiset() = default;
  explicit NumberMultiset(std::vector<double> values);

  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  bool contains(double v, double tol = kNumberTolerance) const;

  // Multiset equality under tolerance.
  bool equivalent(const NumberMultiset& other, double tol = kNumberTolerance) const;

  void merge(const NumberMultiset& other);

 private:
  std::vector<double> values_;
};

// Number grammar shared by chunk rendering and response scoring:
//  - optional sign, optional '$', digits with optional ',ddd' groups and an
//    optional fraction; "%" and "percent" are suffixes, not numbers
//  - digits glued to a preceding letter (FY23, Q3, H2) are not numbers
//  - an integer directly after an "FY" / "Q" / "Qn" word, or directly before
//    a "Qn" / "FYnn" word, is a calendar token when it is a year 1900-2100
//    or a two-digit year
std::vector<NumberSpan> extract_number_spans(std::string_view text);
NumberMultiset extract_numbers(std::string_view text);

}  // namespace ledgerlens
