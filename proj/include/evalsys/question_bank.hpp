#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evalsys {

enum class Competence { Scientific, PsychoPedagogical, Psychosocial, Managerial };

inline constexpr std::array<Competence, 4> kAllCompetences = {
    Competence::Scientific, Competence::PsychoPedagogical,
    Competence::Psychosocial, Competence::Managerial};

enum class Polarity { Direct, Reverse };

std::string_view to_string(Competence c);
std::string_view to_string(Polarity p);
std::optional<Competence> parse_competence(std::string_view name);
std::optional<Polarity> parse_polarity(std::string_view name);

struct QuestionItem {
  int index = 0;  // 1-based
  std::string text;
  Competence competence = Competence::Scientific;
  Polarity polarity = Polarity::Direct;

  bool operator==(const QuestionItem&) const = default;
};

/// Labels shown for the raw responses 1..5, in presentation order.
using ScaleLabels = std::array<std::string, 5>;

ScaleLabels default_scale_labels();

/// Immutable, validated ordered item list. Construct through load_bank() or
/// QuestionBank::from_items(); both run the full validation.
class QuestionBank {
 public:
  static QuestionBank from_items(std::vector<QuestionItem> items,
                                 ScaleLabels labels = default_scale_labels());

  const std::vector<QuestionItem>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  const std::string& digest() const { return digest_; }
  const ScaleLabels& scale_labels() const { return labels_; }

  /// Throws IndexOutOfRange unless 1 <= index <= size().
  const QuestionItem& item_at(int index) const;

  /// Number of items tagged with the competence.
  std::size_t count(Competence c) const;

  bool operator==(const QuestionBank& other) const {
    return digest_ == other.digest_ && items_ == other.items_ &&
           labels_ == other.labels_;
  }

 private:
  QuestionBank() = default;

  std::vector<QuestionItem> items_;
  ScaleLabels labels_;
  std::string digest_;
};

/// Parses and validates a bank document (JSON). Throws ParseError or
/// ValidationError.
QuestionBank load_bank(std::string_view document);
QuestionBank load_bank_file(const std::string& path);

/// Serializes a bank back into the document format accepted by load_bank().
std::string dump_bank(const QuestionBank& bank);

/// SHA-256 over the canonical (index, text, competence, polarity) stream.
std::string bank_digest(const std::vector<QuestionItem>& items);

/// The 58-item placeholder instrument shipped with the service.
const QuestionBank& default_bank();

}  // namespace evalsys
