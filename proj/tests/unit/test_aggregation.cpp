#include <gtest/gtest.h>

#include <random>

#include "evalsys/aggregation.hpp"
#include "evalsys/error.hpp"
#include "support.hpp"

namespace evalsys {
namespace {

using testing::t0;

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no Error thrown";
  return ErrorCode::StorageError;
}

OrgMap sample_org() {
  return OrgMap::parse(R"({"university": "UVT", "faculties": [
    {"id": "F1", "chairs": [{"id": "C1", "teachers": ["T1", "T2"]},
                            {"id": "C2", "teachers": ["T3"]}]},
    {"id": "F2", "chairs": [{"id": "C3", "teachers": ["T4"]}]}]})");
}

std::vector<ResultRecord> random_results(const QuestionBank& bank,
                                         const std::vector<std::string>& teachers,
                                         int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ResultRecord> out;
  for (int i = 0; i < n; ++i) {
    ResultRecord r;
    r.result_id = i + 1;
    r.teacher_id = teachers[rng() % teachers.size()];
    r.bank_digest = bank.digest();
    r.completed_at = t0();
    for (std::size_t k = 0; k < bank.size(); ++k) {
      r.answers.emplace_back(1 + static_cast<int>(rng() % 5));
    }
    out.push_back(std::move(r));
  }
  return out;
}

TEST(OrgMap, ParseAndQuery) {
  const OrgMap org = sample_org();
  EXPECT_EQ(org.university(), "UVT");
  EXPECT_EQ(org.chair_of("T3"), "C2");
  EXPECT_EQ(org.faculty_of_chair("C3"), "F2");
  EXPECT_EQ(org.teachers_in_chair("C1"), (std::vector<std::string>{"T1", "T2"}));
  EXPECT_EQ(org.chairs_in_faculty("F1"), (std::vector<std::string>{"C1", "C2"}));
  EXPECT_EQ(org.faculties(), (std::vector<std::string>{"F1", "F2"}));
  EXPECT_EQ(OrgMap::parse(org.dump()).dump(), org.dump());
}

TEST(OrgMap, Conflicts) {
  OrgMap org;
  org.assign("T1", "C1", "F1");
  EXPECT_EQ(code_of([&] { org.assign("T2", "C1", "F2"); }), ErrorCode::OrgConflict);
  EXPECT_EQ(code_of([&] { org.assign("T1", "C2", "F1"); }), ErrorCode::OrgConflict);
  EXPECT_EQ(code_of([&] { org.assign("T3", "C3", ""); }), ErrorCode::OrgConflict);
  org.assign("T4", "", "");
  EXPECT_TRUE(org.has_teacher("T4"));
  EXPECT_FALSE(org.chair_of("T4"));
  EXPECT_EQ(code_of([] {
              OrgMap::parse(R"({"faculties": [{"id": "F", "chairs": [
                {"id": "C", "teachers": ["T"]}, {"id": "D", "teachers": ["T"]}]}]})");
            }),
            ErrorCode::OrgConflict);
  EXPECT_EQ(code_of([] { OrgMap::parse("[]"); }), ErrorCode::ParseError);
}

TEST(Aggregation, TeacherReportMatchesFlatSum) {
  const QuestionBank bank = testing::small_bank();
  const auto results = random_results(bank, {"T1"}, 40, 11);
  const UnitReport r = teacher_report("T1", results, bank);
  EXPECT_EQ(r.questionnaire_count, 40);
  std::map<Competence, std::int64_t> sum;
  for (const auto& res : results) {
    for (const auto& item : bank.items()) {
      const int v = res.answers[static_cast<std::size_t>(item.index - 1)].value();
      sum[item.competence] += item.polarity == Polarity::Reverse ? 6 - v : v;
    }
  }
  for (Competence c : kAllCompetences) {
    EXPECT_EQ(r.per_competence.at(c)->mean,
              Rational(sum[c], 40 * static_cast<std::int64_t>(bank.count(c))));
  }
}

TEST(Aggregation, EmptyScopeHasNoMeans) {
  const QuestionBank bank = testing::small_bank();
  const UnitReport r = unit_report(Scope::chair("C3"), sample_org(), {}, bank);
  EXPECT_EQ(r.questionnaire_count, 0);
  EXPECT_EQ(r.per_competence.size(), 4u);
  for (const auto& [c, s] : r.per_competence) EXPECT_FALSE(s);
  EXPECT_FALSE(r.overall);
}

TEST(Aggregation, RollupConservationAndAgreement) {
  const QuestionBank bank = testing::small_bank();
  const OrgMap org = sample_org();
  const auto results = random_results(bank, {"T1", "T2", "T3", "T4"}, 120, 5);
  std::int64_t teacher_total = 0;
  for (const std::string t : {"T1", "T2", "T3", "T4"}) {
    teacher_total += unit_report(Scope::teacher(t), org, results, bank).questionnaire_count;
  }
  const auto c1 = unit_report(Scope::chair("C1"), org, results, bank);
  const auto c2 = unit_report(Scope::chair("C2"), org, results, bank);
  const auto f1 = unit_report(Scope::faculty("F1"), org, results, bank);
  const auto f2 = unit_report(Scope::faculty("F2"), org, results, bank);
  const auto u = unit_report(Scope::university(), org, results, bank);
  EXPECT_EQ(c1.questionnaire_count + c2.questionnaire_count, f1.questionnaire_count);
  EXPECT_EQ(f1.questionnaire_count + f2.questionnaire_count, u.questionnaire_count);
  EXPECT_EQ(teacher_total, 120);
  EXPECT_EQ(u.questionnaire_count, 120);

  for (const Scope& s : {Scope::teacher("T2"), Scope::chair("C1"), Scope::faculty("F2"),
                         Scope::university()}) {
    const auto pooled = unit_report(s, org, results, bank);
    const auto mom = mean_of_questionnaire_means(s, org, results, bank);
    for (Competence c : kAllCompetences) {
      EXPECT_NEAR(pooled.per_competence.at(c)->mean.to_double(), mom.per_competence.at(c),
                  1e-12);
    }
    EXPECT_NEAR(pooled.overall->mean.to_double(), *mom.overall, 1e-12);
  }
}

TEST(Aggregation, ErrorsAndDistribution) {
  const QuestionBank bank = testing::small_bank();
  const OrgMap org = sample_org();
  auto results = random_results(bank, {"T1"}, 10, 3);
  EXPECT_EQ(code_of([&] { unit_report(Scope::chair("nope"), org, results, bank); }),
            ErrorCode::UnknownUnit);
  EXPECT_EQ(code_of([&] { unit_report(Scope::faculty("F9"), org, results, bank); }),
            ErrorCode::UnknownUnit);

  const ItemDistribution d = item_distribution(results, bank, 2);
  EXPECT_EQ(d.total(), 10);
  std::array<std::int64_t, 5> expected{};
  for (const auto& r : results) ++expected[static_cast<std::size_t>(r.answers[1].value() - 1)];
  EXPECT_EQ(d.counts, expected);
  EXPECT_EQ(code_of([&] { item_distribution(results, bank, 7); }),
            ErrorCode::IndexOutOfRange);

  results[3].bank_digest = "other";
  EXPECT_EQ(code_of([&] { teacher_report("T1", results, bank); }), ErrorCode::BankMismatch);
}

TEST(Aggregation, ScopeKindNames) {
  for (auto k : {Scope::Kind::Teacher, Scope::Kind::Chair, Scope::Kind::Faculty,
                 Scope::Kind::University}) {
    EXPECT_EQ(parse_scope_kind(to_string(k)), k);
  }
  EXPECT_FALSE(parse_scope_kind("department"));
}

}  // namespace
}  // namespace evalsys
