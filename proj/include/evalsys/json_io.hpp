#pragma once

#include <nlohmann/json.hpp>

#include "evalsys/aggregation.hpp"
#include "evalsys/question_bank.hpp"
#include "evalsys/records.hpp"
#include "evalsys/scoring.hpp"

// JSON shapes shared by the HTTP API, the CLI and the Python module.
namespace evalsys::json_io {

using nlohmann::json;

json to_json(const Rational& r);  // {"num","den","value"}
json to_json(const CompetenceScore& s);
json to_json(const QuestionnaireReport& r);
json to_json(const UnitReport& r);
json to_json(const ItemDistribution& d);
json to_json(const ResultRecord& r);
json to_json(const TeacherRecord& t);
json to_json(const AppStateRecord& s);
json to_json(const Scope& s);

/// {"index","text","options":[{"value","label"}...]} with the five raw-scale
/// options in presentation order.
json question_json(int index, const QuestionItem& item, const QuestionBank& bank);

std::vector<ResponseValue> answers_from_json(const json& j);
json answers_to_json(const std::vector<ResponseValue>& answers);

}  // namespace evalsys::json_io
