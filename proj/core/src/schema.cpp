#include "gzhybrid/schema.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gzhybrid/errors.hpp"

namespace gzhybrid {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw SchemaError("schema document: unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace

AnswerSchema AnswerSchema::from_document(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("schema document: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("schema document: top level must be an object");
  reject_unknown_keys(doc, {"campaigns"}, "top level");
  if (!doc.contains("campaigns") || !doc["campaigns"].is_array())
    throw SchemaError("schema document: missing 'campaigns' array");

  AnswerSchema schema;
  std::set<std::string> seen_ids;

  for (const auto& campaign : doc["campaigns"]) {
    if (!campaign.is_object())
      throw SchemaError("schema document: campaign entries must be objects");
    reject_unknown_keys(campaign, {"name", "questions"}, "campaign");
    if (!campaign.contains("name") || !campaign["name"].is_string())
      throw SchemaError("schema document: campaign needs a string 'name'");
    const std::string cname = campaign["name"].get<std::string>();
    if (!seen_ids.insert(cname).second)
      throw SchemaError("schema document: duplicate id '" + cname + "'");
    schema.campaigns_.push_back(cname);

    if (!campaign.contains("questions") || !campaign["questions"].is_array())
      throw SchemaError("schema document: campaign '" + cname +
                        "' needs a 'questions' array");
    for (const auto& q : campaign["questions"]) {
      if (!q.is_object())
        throw SchemaError("schema document: question entries must be objects");
      reject_unknown_keys(q, {"id", "answers"}, "question");
      if (!q.contains("id") || !q["id"].is_string())
        throw SchemaError("schema document: question needs a string 'id'");
      const std::string qid = q["id"].get<std::string>();
      if (!seen_ids.insert(qid).second)
        throw SchemaError("schema document: duplicate id '" + qid + "'");
      if (!q.contains("answers") || !q["answers"].is_array())
        throw SchemaError("schema document: question '" + qid +
                          "' needs an 'answers' array");
      if (q["answers"].size() < 2)
        throw SchemaError("schema document: question '" + qid +
                          "' needs at least two answers");

      Question question;
      question.id = qid;
      question.campaign = cname;
      question.begin = schema.answer_ids_.size();
      for (const auto& a : q["answers"]) {
        if (!a.is_string())
          throw SchemaError("schema document: answers must be strings");
        const std::string aid = a.get<std::string>();
        if (!seen_ids.insert(aid).second)
          throw SchemaError("schema document: duplicate id '" + aid + "'");
        schema.answer_index_.emplace(aid, schema.answer_ids_.size());
        schema.answer_ids_.push_back(aid);
        schema.answer_question_.push_back(schema.questions_.size());
        question.answers.push_back(aid);
      }
      schema.slices_.push_back(
          {qid, question.begin, question.begin + question.answers.size()});
      schema.questions_.push_back(std::move(question));
    }
  }
  return schema;
}

AnswerSchema AnswerSchema::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("schema document: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_document(buf.str());
}

bool AnswerSchema::has_campaign(const std::string& name) const {
  for (const auto& c : campaigns_)
    if (c == name) return true;
  return false;
}

std::optional<std::size_t> AnswerSchema::answer_position(
    const std::string& answer_id) const {
  auto it = answer_index_.find(answer_id);
  if (it == answer_index_.end()) return std::nullopt;
  return it->second;
}

const std::string& AnswerSchema::answer_id(std::size_t position) const {
  return answer_ids_.at(position);
}

std::size_t AnswerSchema::question_of_answer(std::size_t position) const {
  return answer_question_.at(position);
}

std::vector<std::size_t> AnswerSchema::campaign_questions(
    const std::string& campaign) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < questions_.size(); ++i)
    if (questions_[i].campaign == campaign) out.push_back(i);
  return out;
}

std::vector<QuestionSlice> question_slices(const AnswerSchema& schema) {
  return schema.slices();
}

VoteVector encode_votes(const VoteRecord& record, const AnswerSchema& schema) {
  if (!schema.has_campaign(record.campaign))
    throw EncodingError("encode_votes: unknown campaign '" + record.campaign +
                        "' in record " + record.galaxy_id);
  VoteVector out;
  out.counts.assign(schema.answer_count(), 0);
  for (const auto& [answer_id, count] : record.votes) {
    if (count < 0)
      throw EncodingError("encode_votes: negative count for '" + answer_id + "'");
    const auto pos = schema.answer_position(answer_id);
    if (!pos)
      throw EncodingError("encode_votes: unknown answer id '" + answer_id + "'");
    const auto& q = schema.questions()[schema.question_of_answer(*pos)];
    if (q.campaign != record.campaign)
      throw EncodingError("encode_votes: answer '" + answer_id +
                          "' belongs to campaign '" + q.campaign +
                          "', record is in '" + record.campaign + "'");
    out.counts[*pos] = count;
  }
  return out;
}

std::map<std::string, std::int64_t> decode_votes(const VoteVector& votes,
                                                 const AnswerSchema& schema) {
  std::map<std::string, std::int64_t> out;
  for (std::size_t i = 0; i < votes.counts.size(); ++i)
    if (votes.counts[i] != 0) out.emplace(schema.answer_id(i), votes.counts[i]);
  return out;
}

std::vector<std::int64_t> question_totals(const VoteVector& votes,
                                          const AnswerSchema& schema) {
  std::vector<std::int64_t> out;
  out.reserve(schema.slices().size());
  for (const auto& s : schema.slices()) out.push_back(votes.question_total(s));
  return out;
}

}  // namespace gzhybrid
