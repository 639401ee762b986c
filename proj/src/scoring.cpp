#include "evalsys/scoring.hpp"

#include <numeric>

#include "evalsys/error.hpp"

namespace evalsys {

ResponseValue::ResponseValue(int value) : value_(value) {
  if (value < 1 || value > 5) {
    fail(ErrorCode::InvalidValue,
         "response must be in 1..5, got " + std::to_string(value));
  }
}

ItemScore::ItemScore(int value) : value_(value) {
  if (value < 1 || value > 5) {
    fail(ErrorCode::InvalidValue,
         "item score must be in 1..5, got " + std::to_string(value));
  }
}

std::string_view to_string(CategoryMark m) {
  switch (m) {
    case CategoryMark::VeryPoor: return "VeryPoor";
    case CategoryMark::Poor: return "Poor";
    case CategoryMark::Medium: return "Medium";
    case CategoryMark::Good: return "Good";
    case CategoryMark::VeryGood: return "VeryGood";
  }
  return "?";
}

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) fail(ErrorCode::InvalidValue, "zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = num / (g == 0 ? 1 : g);
  den_ = den / (g == 0 ? 1 : g);
}

std::strong_ordering Rational::operator<=>(const Rational& o) const {
  // Operands stay small (sums of at most a few million scores), so the cross
  // products cannot overflow 64 bits.
  return num_ * o.den_ <=> o.num_ * den_;
}

ItemScore score_item(Polarity polarity, ResponseValue response) {
  return ItemScore(polarity == Polarity::Direct ? response.value()
                                                : 6 - response.value());
}

namespace {

void require_complete(std::span<const ResponseValue> answers,
                      const QuestionBank& bank) {
  if (answers.size() != bank.size()) {
    fail(ErrorCode::IncompleteAnswers,
         "expected " + std::to_string(bank.size()) + " answers, got " +
             std::to_string(answers.size()));
  }
}

CompetenceScore scored(const Rational& mean) {
  return {mean, mark_from_mean(mean)};
}

}  // namespace

Rational category_mean(std::span<const ResponseValue> answers,
                       const QuestionBank& bank, Competence competence) {
  require_complete(answers, bank);
  std::int64_t sum = 0;
  std::int64_t count = 0;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const QuestionItem& item = bank.items()[i];
    if (item.competence != competence) continue;
    sum += score_item(item.polarity, answers[i]).value();
    ++count;
  }
  return Rational(sum, count);
}

CategoryMark mark_from_mean(const Rational& mean) {
  if (mean < Rational(1) || mean > Rational(5)) {
    fail(ErrorCode::OutOfRange,
         "mean " + std::to_string(mean.to_double()) + " outside [1,5]");
  }
  // Bins are half-open on the right; each boundary belongs to the upper bin.
  if (mean < Rational(3, 2)) return CategoryMark::VeryPoor;
  if (mean < Rational(5, 2)) return CategoryMark::Poor;
  if (mean < Rational(7, 2)) return CategoryMark::Medium;
  if (mean < Rational(9, 2)) return CategoryMark::Good;
  return CategoryMark::VeryGood;
}

CategoryMark mark_from_mean(double mean) {
  if (!(mean >= 1.0 && mean <= 5.0)) {
    fail(ErrorCode::OutOfRange,
         "mean " + std::to_string(mean) + " outside [1,5]");
  }
  if (mean < 1.5) return CategoryMark::VeryPoor;
  if (mean < 2.5) return CategoryMark::Poor;
  if (mean < 3.5) return CategoryMark::Medium;
  if (mean < 4.5) return CategoryMark::Good;
  return CategoryMark::VeryGood;
}

QuestionnaireReport questionnaire_report(std::span<const ResponseValue> answers,
                                         const QuestionBank& bank) {
  require_complete(answers, bank);
  QuestionnaireReport report;
  std::int64_t total = 0;
  for (Competence c : kAllCompetences) {
    report.per_competence[c] = scored(category_mean(answers, bank, c));
  }
  for (std::size_t i = 0; i < answers.size(); ++i) {
    total += score_item(bank.items()[i].polarity, answers[i]).value();
  }
  report.overall = scored(Rational(total, static_cast<std::int64_t>(answers.size())));
  return report;
}

}  // namespace evalsys
