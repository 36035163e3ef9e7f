#include "ledgerlens/numbers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace ledgerlens {

NumberMultiset::NumberMultiset(std::vector<double> values) : values_(std::move(values)) {
  std::sort(values_.begin(), values_.end());
}

bool NumberMultiset::contains(double v, double tol) const {
  auto it = std::lower_bound(values_.begin(), values_.end(), v - tol);
  return it != values_.end() && std::fabs(*it - v) <= tol;
}

bool NumberMultiset::equivalent(const NumberMultiset& other, double tol) const {
  if (values_.size() != other.values_.size()) return false;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (std::fabs(values_[i] - other.values_[i]) > tol) return false;
  }
  return true;
}

void NumberMultiset::merge(const NumberMultiset& other) {
  std::vector<double> merged;
  merged.reserve(values_.size() + other.values_.size());
  std::merge(values_.begin(), values_.end(), other.values_.begin(), other.values_.end(),
             std::back_inserter(merged));
  values_ = std::move(merged);
}

namespace {

bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool blank(char c) { return c == ' ' || c == '\t'; }

struct Item {
  enum class Kind { Word, Number } kind;
  std::size_t begin, end;
  std::string word;  // lowercase, words only
  NumberSpan number;
  bool calendar_candidate = false;  // plain unsigned integer that could be a year
};

bool is_fiscal_prefix(const std::string& w) {
  return w == "fy" || w == "q" || w == "q1" || w == "q2" || w == "q3" || w == "q4";
}

bool is_fiscal_suffix(const std::string& w) {
  if (w.size() == 2 && w[0] == 'q' && w[1] >= '1' && w[1] <= '4') return true;
  if (w.size() >= 2 && w[0] == 'f' && w[1] == 'y') {
    return std::all_of(w.begin() + 2, w.end(), [](char c) { return digit(c); });
  }
  return false;
}

// Only blanks between two items counts as adjoining.
bool adjoining(std::string_view text, std::size_t a_end, std::size_t b_begin) {
  if (b_begin <= a_end) return false;
  for (std::size_t i = a_end; i < b_begin; ++i) {
    if (!blank(text[i])) return false;
  }
  return true;
}

}  // namespace

std::vector<NumberSpan> extract_number_spans(std::string_view text) {
  std::vector<Item> items;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    const char c = text[i];
    if (alpha(c)) {
      const std::size_t b = i;
      while (i < n && (alnum(text[i]) || text[i] == '_')) ++i;
      Item it{Item::Kind::Word, b, i, {}, {}, false};
      for (std::size_t k = b; k < i; ++k) {
        it.word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[k]))));
      }
      items.push_back(std::move(it));
      continue;
    }

    const char prev = i > 0 ? text[i - 1] : ' ';
    const bool prev_ok = !alnum(prev) && !(prev == '.' && i >= 2 && digit(text[i - 2]));
    std::size_t j = i;
    bool signed_number = false;
    bool negative = false;
    if ((c == '-' || c == '+') && prev_ok) {
      std::size_t k = i + 1;
      if (k < n && text[k] == '$') ++k;
      if (k < n && (digit(text[k]) || (text[k] == '.' && k + 1 < n && digit(text[k + 1])))) {
        signed_number = true;
        negative = c == '-';
        j = k;
      }
    }
    const bool starts_digit = j < n && digit(text[j]);
    const bool starts_fraction = j < n && text[j] == '.' && j + 1 < n && digit(text[j + 1]);
    if (!(signed_number || (prev_ok && (starts_digit || starts_fraction)))) {
      ++i;
      continue;
    }

    std::string cleaned;
    std::size_t int_digits = 0;
    bool grouped = false;
    bool fractional = false;
    while (j < n && digit(text[j])) {
      cleaned.push_back(text[j++]);
      ++int_digits;
    }
    if (int_digits >= 1 && int_digits <= 3) {
      while (j + 3 < n && text[j] == ',' && digit(text[j + 1]) && digit(text[j + 2]) &&
             digit(text[j + 3]) && (j + 4 >= n || !digit(text[j + 4]))) {
        cleaned.append(text.substr(j + 1, 3));
        j += 4;
        grouped = true;
      }
    }
    if (j + 1 < n && text[j] == '.' && digit(text[j + 1])) {
      fractional = true;
      cleaned.push_back('.');
      ++j;
      while (j < n && digit(text[j])) cleaned.push_back(text[j++]);
    }
    if (cleaned.front() == '.') cleaned.insert(cleaned.begin(), '0');

    double value = std::stod(cleaned);
    if (negative) value = -value;
    Item it{Item::Kind::Number, i, j, {}, NumberSpan{value, i, j}, false};
    it.calendar_candidate = !signed_number && !grouped && !fractional &&
                            ((value >= 1900 && value <= 2100) || int_digits == 2);
    items.push_back(std::move(it));

    i = j;
    // unit suffix glued to the number ("3.5M", "10x") belongs to it
    while (i < n && (alnum(text[i]) || text[i] == '_')) ++i;
  }

  std::vector<NumberSpan> out;
  for (std::size_t k = 0; k < items.size(); ++k) {
    const auto& it = items[k];
    if (it.kind != Item::Kind::Number) continue;
    if (it.calendar_candidate) {
      bool calendar = false;
      if (k > 0 && items[k - 1].kind == Item::Kind::Word && is_fiscal_prefix(items[k - 1].word) &&
          adjoining(text, items[k - 1].end, it.begin)) {
        calendar = true;
      }
      if (k + 1 < items.size() && items[k + 1].kind == Item::Kind::Word &&
          is_fiscal_suffix(items[k + 1].word) && adjoining(text, it.end, items[k + 1].begin)) {
        calendar = true;
      }
      if (calendar) continue;
    }
    out.push_back(it.number);
  }
  return out;
}

NumberMultiset extract_numbers(std::string_view text) {
  std::vector<double> values;
  for (const auto& span : extract_number_spans(text)) values.push_back(span.value);
  return NumberMultiset(std::move(values));
}

}  // namespace ledgerlens
