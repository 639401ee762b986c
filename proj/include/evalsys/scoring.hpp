#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>

#include "evalsys/question_bank.hpp"

namespace evalsys {

/// A raw Likert answer on the presented 1..5 scale.
class ResponseValue {
 public:
  /// Throws InvalidValue outside 1..5.
  explicit ResponseValue(int value);

  int value() const { return value_; }
  auto operator<=>(const ResponseValue&) const = default;

 private:
  int value_;
};

/// Post-reversal quality score, 5 = best.
class ItemScore {
 public:
  explicit ItemScore(int value);

  int value() const { return value_; }
  auto operator<=>(const ItemScore&) const = default;

 private:
  int value_;
};

enum class CategoryMark { VeryPoor, Poor, Medium, Good, VeryGood };

std::string_view to_string(CategoryMark m);

/// Non-negative exact fraction, kept in lowest terms.
class Rational {
 public:
  Rational(std::int64_t num = 0, std::int64_t den = 1);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  bool operator==(const Rational& o) const {
    return num_ == o.num_ && den_ == o.den_;
  }
  std::strong_ordering operator<=>(const Rational& o) const;

 private:
  std::int64_t num_;
  std::int64_t den_;
};

struct CompetenceScore {
  Rational mean;
  CategoryMark mark = CategoryMark::Medium;

  bool operator==(const CompetenceScore&) const = default;
};

struct QuestionnaireReport {
  std::map<Competence, CompetenceScore> per_competence;
  CompetenceScore overall;

  bool operator==(const QuestionnaireReport&) const = default;
};

ItemScore score_item(Polarity polarity, ResponseValue response);

/// Throws IncompleteAnswers unless answers.size() == bank.size().
Rational category_mean(std::span<const ResponseValue> answers,
                       const QuestionBank& bank, Competence competence);

/// [1,1.5) VeryPoor, [1.5,2.5) Poor, [2.5,3.5) Medium, [3.5,4.5) Good,
/// [4.5,5] VeryGood. Throws OutOfRange outside [1,5].
CategoryMark mark_from_mean(const Rational& mean);
CategoryMark mark_from_mean(double mean);

QuestionnaireReport questionnaire_report(std::span<const ResponseValue> answers,
                                         const QuestionBank& bank);

}  // namespace evalsys
