#include "evalsys/question_bank.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evalsys/crypto.hpp"
#include "evalsys/error.hpp"

namespace evalsys {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::ranges::transform(out, out.begin(),
                         [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool blank(std::string_view s) {
  return std::ranges::all_of(
      s, [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

std::string_view to_string(Competence c) {
  switch (c) {
    case Competence::Scientific: return "Scientific";
    case Competence::PsychoPedagogical: return "PsychoPedagogical";
    case Competence::Psychosocial: return "Psychosocial";
    case Competence::Managerial: return "Managerial";
  }
  return "?";
}

std::string_view to_string(Polarity p) {
  return p == Polarity::Direct ? "direct" : "reverse";
}

std::optional<Competence> parse_competence(std::string_view name) {
  const std::string key = lower(name);
  for (Competence c : kAllCompetences) {
    if (lower(to_string(c)) == key) return c;
  }
  if (key == "psycho_pedagogical" || key == "psycho-pedagogical") {
    return Competence::PsychoPedagogical;
  }
  return std::nullopt;
}

std::optional<Polarity> parse_polarity(std::string_view name) {
  if (name == "direct") return Polarity::Direct;
  if (name == "reverse") return Polarity::Reverse;
  return std::nullopt;
}

ScaleLabels default_scale_labels() {
  return {"Very Poor", "Poor", "Medium", "Good", "Very Good"};
}

std::string bank_digest(const std::vector<QuestionItem>& items) {
  // Unit/record separators cannot appear in the decimal index or the
  // vocabulary names, so the stream is unambiguous for any item text.
  std::string stream;
  for (const auto& item : items) {
    stream += std::to_string(item.index);
    stream += '\x1f';
    stream += item.text;
    stream += '\x1f';
    stream += to_string(item.competence);
    stream += '\x1f';
    stream += to_string(item.polarity);
    stream += '\x1e';
  }
  return sha256_hex(stream);
}

QuestionBank QuestionBank::from_items(std::vector<QuestionItem> items,
                                      ScaleLabels labels) {
  if (items.empty()) fail(ErrorCode::ValidationError, "bank has no items");

  std::ranges::sort(items, {}, &QuestionItem::index);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const int expected = static_cast<int>(i) + 1;
    if (items[i].index != expected) {
      fail(ErrorCode::ValidationError,
           "item indices must be 1..N without gaps; expected " +
               std::to_string(expected) + ", found " +
               std::to_string(items[i].index));
    }
    if (blank(items[i].text)) {
      fail(ErrorCode::ValidationError,
           "item " + std::to_string(expected) + " has empty text");
    }
  }
  for (Competence c : kAllCompetences) {
    if (std::ranges::none_of(items, [c](const QuestionItem& it) {
          return it.competence == c;
        })) {
      fail(ErrorCode::ValidationError,
           "no item for competence " + std::string(to_string(c)));
    }
  }
  for (const auto& label : labels) {
    if (blank(label)) fail(ErrorCode::ValidationError, "empty scale label");
  }

  QuestionBank bank;
  bank.digest_ = bank_digest(items);
  bank.items_ = std::move(items);
  bank.labels_ = std::move(labels);
  return bank;
}

const QuestionItem& QuestionBank::item_at(int index) const {
  if (index < 1 || static_cast<std::size_t>(index) > items_.size()) {
    fail(ErrorCode::IndexOutOfRange,
         "item index " + std::to_string(index) + " outside 1.." +
             std::to_string(items_.size()));
  }
  return items_[static_cast<std::size_t>(index) - 1];
}

std::size_t QuestionBank::count(Competence c) const {
  return static_cast<std::size_t>(std::ranges::count(
      items_, c, &QuestionItem::competence));
}

QuestionBank load_bank(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, std::string("bank document: ") + e.what());
  }

  const json* entries = &doc;
  ScaleLabels labels = default_scale_labels();
  if (doc.is_object()) {
    if (!doc.contains("items")) {
      fail(ErrorCode::ParseError, "bank document has no \"items\" list");
    }
    entries = &doc["items"];
    if (doc.contains("scale_labels")) {
      const json& l = doc["scale_labels"];
      if (!l.is_array() || l.size() != 5) {
        fail(ErrorCode::ParseError, "scale_labels must list five strings");
      }
      for (std::size_t i = 0; i < 5; ++i) {
        if (!l[i].is_string()) {
          fail(ErrorCode::ParseError, "scale_labels must list five strings");
        }
        labels[i] = l[i].get<std::string>();
      }
    }
  }
  if (!entries->is_array()) {
    fail(ErrorCode::ParseError, "bank items must be a list");
  }

  std::vector<QuestionItem> items;
  items.reserve(entries->size());
  for (const json& e : *entries) {
    if (!e.is_object() || !e.contains("index") || !e["index"].is_number_integer() ||
        !e.contains("text") || !e["text"].is_string() ||
        !e.contains("competence") || !e["competence"].is_string() ||
        !e.contains("polarity") || !e["polarity"].is_string()) {
      fail(ErrorCode::ParseError,
           "each item needs integer index and string text, competence, "
           "polarity");
    }
    auto competence = parse_competence(e["competence"].get<std::string>());
    if (!competence) {
      fail(ErrorCode::ParseError,
           "unknown competence " + e["competence"].get<std::string>());
    }
    auto polarity = parse_polarity(e["polarity"].get<std::string>());
    if (!polarity) {
      fail(ErrorCode::ParseError,
           "polarity must be \"direct\" or \"reverse\", got " +
               e["polarity"].get<std::string>());
    }
    items.push_back({e["index"].get<int>(), e["text"].get<std::string>(),
                     *competence, *polarity});
  }
  return QuestionBank::from_items(std::move(items), std::move(labels));
}

QuestionBank load_bank_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::ParseError, "cannot read bank file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_bank(buf.str());
}

std::string dump_bank(const QuestionBank& bank) {
  json items = json::array();
  for (const auto& it : bank.items()) {
    items.push_back({{"index", it.index},
                     {"text", it.text},
                     {"competence", to_string(it.competence)},
                     {"polarity", to_string(it.polarity)}});
  }
  json doc = {{"scale_labels", bank.scale_labels()}, {"items", items}};
  return doc.dump(2) + "\n";
}

namespace {

struct Seed {
  Competence competence;
  const char* text;
};

// Placeholder statements. Polarity alternates within each competence,
// starting with a direct item; reverse items describe undesirable behaviour.
constexpr Seed kDefaultItems[] = {
    {Competence::Scientific, "The teacher masters the subject matter of the course."},
    {Competence::Scientific, "The teacher makes factual errors when presenting the material."},
    {Competence::Scientific, "The teacher relates the course content to current research in the field."},
    {Competence::Scientific, "The teacher's explanations remain superficial."},
    {Competence::Scientific, "The teacher answers subject questions competently."},
    {Competence::Scientific, "The teacher relies on outdated sources and references."},
    {Competence::Scientific, "The teacher recommends relevant bibliography."},
    {Competence::Scientific, "The teacher avoids questions that go beyond the lecture notes."},
    {Competence::Scientific, "The teacher shows how the discipline connects with related fields."},
    {Competence::Scientific, "The teacher reads the lecture without being able to elaborate on it."},
    {Competence::Scientific, "The teacher illustrates theory with pertinent examples."},
    {Competence::Scientific, "The teacher confuses basic concepts of the discipline."},
    {Competence::Scientific, "The teacher presents the practical applications of the subject."},
    {Competence::Scientific, "The course repeats other courses without adding anything new."},
    {Competence::Scientific, "The teacher keeps the course content up to date."},
    {Competence::Scientific, "The teacher cannot justify the statements made in class."},
    {Competence::PsychoPedagogical, "The teacher structures each class clearly."},
    {Competence::PsychoPedagogical, "The teacher speaks too fast to be followed."},
    {Competence::PsychoPedagogical, "The teacher checks that the students have understood."},
    {Competence::PsychoPedagogical, "The requirements for the exam are unclear."},
    {Competence::PsychoPedagogical, "The teacher uses teaching aids that support learning."},
    {Competence::PsychoPedagogical, "The teacher ignores the students' level of preparation."},
    {Competence::PsychoPedagogical, "The teacher encourages the students to ask questions."},
    {Competence::PsychoPedagogical, "The teacher grades in an inconsistent way."},
    {Competence::PsychoPedagogical, "The teacher adapts the pace to the audience."},
    {Competence::PsychoPedagogical, "The teacher makes the lessons monotonous."},
    {Competence::PsychoPedagogical, "The teacher gives useful feedback on student work."},
    {Competence::PsychoPedagogical, "The teacher assigns tasks without explaining their purpose."},
    {Competence::PsychoPedagogical, "The teacher stimulates independent thinking."},
    {Competence::PsychoPedagogical, "The teacher discourages students who make mistakes."},
    {Competence::PsychoPedagogical, "The teacher summarizes the key ideas at the end of the class."},
    {Competence::PsychoPedagogical, "The teacher rewards memorization rather than understanding."},
    {Competence::Psychosocial, "The teacher treats all students with respect."},
    {Competence::Psychosocial, "The teacher is ironic or dismissive towards students."},
    {Competence::Psychosocial, "The teacher is available for consultations."},
    {Competence::Psychosocial, "The teacher shows favouritism towards some students."},
    {Competence::Psychosocial, "The teacher creates a relaxed atmosphere in class."},
    {Competence::Psychosocial, "The teacher loses patience easily."},
    {Competence::Psychosocial, "The teacher listens to the students' opinions."},
    {Competence::Psychosocial, "The teacher is distant and hard to approach."},
    {Competence::Psychosocial, "The teacher is a positive model of conduct."},
    {Competence::Psychosocial, "The teacher reacts badly to criticism."},
    {Competence::Psychosocial, "The teacher motivates the students to attend classes."},
    {Competence::Psychosocial, "The teacher creates tension during evaluations."},
    {Competence::Psychosocial, "The teacher is fair when conflicts arise between students."},
    {Competence::Managerial, "The teacher starts and ends classes on time."},
    {Competence::Managerial, "The teacher cancels or postpones classes without notice."},
    {Competence::Managerial, "The teacher announces the evaluation criteria at the start of the semester."},
    {Competence::Managerial, "The teacher manages class time poorly."},
    {Competence::Managerial, "The teacher organizes the course materials well."},
    {Competence::Managerial, "The teacher publishes grades late."},
    {Competence::Managerial, "The teacher coordinates well with the seminar and laboratory staff."},
    {Competence::Managerial, "The teacher changes the requirements during the semester."},
    {Competence::Managerial, "The teacher keeps discipline in the classroom."},
    {Competence::Managerial, "The teacher loses track of the work students hand in."},
    {Competence::Managerial, "The teacher spreads the workload evenly across the semester."},
    {Competence::Managerial, "The teacher comes to class unprepared."},
    {Competence::Managerial, "The teacher communicates course announcements effectively."},
};

QuestionBank build_default_bank() {
  std::vector<QuestionItem> items;
  std::array<int, 4> seen{};
  int index = 0;
  for (const Seed& s : kDefaultItems) {
    int& n = seen[static_cast<std::size_t>(s.competence)];
    items.push_back({++index, s.text, s.competence,
                     n++ % 2 == 0 ? Polarity::Direct : Polarity::Reverse});
  }
  // Raw-scale labels of the Romanian instrument; the own-answers view pairs
  // them with the post-reversal score ("5 - foarte puțin sau deloc").
  ScaleLabels labels = {"foarte puțin sau deloc", "puțin", "moderat", "mult",
                        "foarte mult"};
  return QuestionBank::from_items(std::move(items), std::move(labels));
}

}  // namespace

const QuestionBank& default_bank() {
  static const QuestionBank bank = build_default_bank();
  return bank;
}

}  // namespace evalsys
