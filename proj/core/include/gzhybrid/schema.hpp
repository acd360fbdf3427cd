#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gzhybrid {

struct QuestionSlice {
  std::string question_id;
  std::size_t begin = 0;
  std::size_t end = 0;  // half-open, answers occupy [begin, end)
};

// Registry of campaigns, questions and answers across all Galaxy Zoo style
// campaigns. The global answer index is a bijection answer id <-> position in
// [0, A), assigned in document order (campaign, then question, then answer),
// so encoded vote vectors are reproducible byte-for-byte. Immutable after
// load; safe to share across threads.
class AnswerSchema {
 public:
  struct Question {
    std::string id;
    std::string campaign;
    std::vector<std::string> answers;
    std::size_t begin = 0;  // global position of answers[0]
  };

  // Parses the schema document (JSON text). Unknown keys, duplicate ids and
  // questions with fewer than two answers are rejected.
  static AnswerSchema from_document(const std::string& json_text);
  static AnswerSchema from_file(const std::string& path);

  std::size_t answer_count() const { return answer_ids_.size(); }
  const std::vector<std::string>& campaigns() const { return campaigns_; }
  const std::vector<Question>& questions() const { return questions_; }
  const std::vector<QuestionSlice>& slices() const { return slices_; }

  bool has_campaign(const std::string& name) const;
  std::optional<std::size_t> answer_position(const std::string& answer_id) const;
  const std::string& answer_id(std::size_t position) const;
  // Index into questions() of the question owning this answer position.
  std::size_t question_of_answer(std::size_t position) const;
  // Indices into questions() for one campaign.
  std::vector<std::size_t> campaign_questions(const std::string& campaign) const;

 private:
  std::vector<std::string> campaigns_;
  std::vector<Question> questions_;
  std::vector<QuestionSlice> slices_;
  std::vector<std::string> answer_ids_;             // position -> id
  std::map<std::string, std::size_t> answer_index_;  // id -> position
  std::vector<std::size_t> answer_question_;         // position -> question idx
};

// Ordered, disjoint question slices covering [0, A).
std::vector<QuestionSlice> question_slices(const AnswerSchema& schema);

// One galaxy's volunteer responses within a single campaign.
struct VoteRecord {
  std::string galaxy_id;
  std::string campaign;
  std::map<std::string, std::int64_t> votes;  // answer id -> count
};

// Dense multi-campaign vote counts over the global answer index. Positions
// for answers outside the record's campaign are structurally zero.
struct VoteVector {
  std::vector<std::int64_t> counts;

  std::int64_t question_total(const QuestionSlice& slice) const {
    std::int64_t n = 0;
    for (std::size_t i = slice.begin; i < slice.end; ++i) n += counts[i];
    return n;
  }
};

// Validates the record against the schema and produces the dense vector.
VoteVector encode_votes(const VoteRecord& record, const AnswerSchema& schema);

// Nonzero counts mapped back through the global index.
std::map<std::string, std::int64_t> decode_votes(const VoteVector& votes,
                                                 const AnswerSchema& schema);

// N_q for every question, in slice order.
std::vector<std::int64_t> question_totals(const VoteVector& votes,
                                          const AnswerSchema& schema);

}  // namespace gzhybrid
