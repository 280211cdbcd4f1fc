#include "pjudge/datasets.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "pjudge/json_io.h"
#include "pjudge/kernels/similarity.h"
#include "pjudge/parallel.h"
#include "pjudge/persona.h"
#include "pjudge/random.h"

namespace pjudge {

namespace fs = std::filesystem;

namespace {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw DataError(std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

std::string string_field(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw DataError(std::string("field '") + key + "' must be a string");
}

double number_field(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_number()) throw DataError(std::string("field '") + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw DataError(std::string("field '") + key + "' is not finite");
  return d;
}

/// Persona objects in source layouts map attribute name -> value.
Persona persona_field(const json& j, DatasetTag tag) {
  const auto& p = field(j, "persona");
  if (!p.is_object()) throw DataError("persona must be an object of attribute -> value");
  std::vector<Attribute> attrs;
  for (const auto& [name, value] : p.items()) {
    if (value.is_null()) continue;
    attrs.push_back({name, value.is_string() ? value.get<std::string>() : value.dump()});
  }
  return make_persona(tag, std::move(attrs));
}

json parse_document(std::istream& in) {
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed JSON document: ") + e.what());
  }
}

template <typename Fn>
auto with_index(std::size_t index, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const DataError& e) {
    if (e.index()) throw;
    throw DataError(e.what(), index);
  } catch (const json::exception& e) {
    throw DataError(e.what(), index);
  }
}

std::ifstream open_or_throw(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  return in;
}

void require_non_empty(const LoadResult& result, std::string_view dataset) {
  if (result.tasks.empty()) {
    throw DataError(std::string(dataset) + ": no tasks left after filtering (empty dataset)");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// PRISM
// ---------------------------------------------------------------------------

Choice tie_label_prism(double score_a, double score_b, double threshold) {
  if (std::fabs(score_a - score_b) <= threshold) return Choice::Tie;
  return score_a > score_b ? Choice::A : Choice::B;
}

LoadResult load_prism(std::istream& in, const PrismOptions& options) {
  static const RefusalDetector default_refusal;
  const RefusalDetector& refusal = options.refusal ? *options.refusal : default_refusal;

  LoadResult result;
  std::string line;
  std::size_t index = 0;
  while (result.report.considered < options.limit && std::getline(in, line)) {
    const std::size_t line_index = index++;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    const auto pair = with_index(line_index, [&] {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw DataError(std::string("malformed JSON: ") + e.what());
      }
      RawPreferencePair p;
      p.id = j.contains("id") ? string_field(j, "id")
                              : "prism-" + string_field(j, "conversation_id") + "-" +
                                    std::to_string(line_index);
      p.turn = j.contains("turn") ? field(j, "turn").get<int>() : 0;
      p.question = string_field(j, "question");
      p.response_a = string_field(j, "response_a");
      p.response_b = string_field(j, "response_b");
      p.score_a = number_field(j, "score_a");
      p.score_b = number_field(j, "score_b");
      p.generator_a = string_field(j, "generator_a");
      p.generator_b = string_field(j, "generator_b");
      p.persona = persona_field(j, DatasetTag::PRISM);
      return p;
    });

    if (pair.turn != 0) continue;  // first turn of each conversation only
    ++result.report.considered;

    const auto& judges = options.judge_model_ids;
    if (std::find(judges.begin(), judges.end(), pair.generator_a) != judges.end() ||
        std::find(judges.begin(), judges.end(), pair.generator_b) != judges.end()) {
      ++result.report.dropped["judge_generated"];
      continue;
    }
    if (refusal.is_refusal(pair.response_a) || refusal.is_refusal(pair.response_b)) {
      ++result.report.dropped["refusal"];
      continue;
    }
    if (pair.response_a == pair.response_b) {
      ++result.report.dropped["identical_responses"];
      continue;
    }
    const Choice label = tie_label_prism(pair.score_a, pair.score_b, options.tie_threshold);
    if (label == Choice::Tie && !options.include_ties) {
      ++result.report.dropped["tie"];
      continue;
    }

    JudgeTask task;
    task.id = pair.id;
    task.dataset_tag = DatasetTag::PRISM;
    task.question = pair.question;
    task.response_a = pair.response_a;
    task.response_b = pair.response_b;
    task.persona = pair.persona;
    task.ground_truth = label;
    task.meta = {{"score_a", format_number(pair.score_a)},
                 {"score_b", format_number(pair.score_b)},
                 {"generator_a", pair.generator_a},
                 {"generator_b", pair.generator_b}};
    with_index(line_index, [&] { validate_task(task); });
    result.tasks.push_back(std::move(task));
  }
  require_non_empty(result, "PRISM");
  return result;
}

LoadResult load_prism(const fs::path& path, const PrismOptions& options) {
  auto in = open_or_throw(path);
  return load_prism(in, options);
}

// ---------------------------------------------------------------------------
// OpinionQA
// ---------------------------------------------------------------------------

namespace {

struct SurveyQuestion {
  std::string id;
  std::string topic;
  std::string text;
  std::vector<std::string> options;
};

struct Respondent {
  std::string id;
  Persona persona;
  json answers;
};

/// Index of the respondent's answer among the options, or -1 when the answer
/// is absent or not one of them (e.g. "Refused").
int answer_index(const Respondent& r, const SurveyQuestion& q) {
  if (!r.answers.is_object() || !r.answers.contains(q.id)) return -1;
  const auto& a = r.answers.at(q.id);
  if (a.is_number_integer()) {
    const auto i = a.get<long long>();
    return i >= 0 && i < static_cast<long long>(q.options.size()) ? static_cast<int>(i) : -1;
  }
  if (a.is_string()) {
    const auto it = std::find(q.options.begin(), q.options.end(), a.get<std::string>());
    return it == q.options.end() ? -1 : static_cast<int>(it - q.options.begin());
  }
  return -1;
}

}  // namespace

LoadResult load_opinionqa(std::istream& in, const OpinionQaOptions& options) {
  const json doc = parse_document(in);
  LoadResult result;

  std::vector<SurveyQuestion> questions;
  const auto& qs = field(doc, "questions");
  for (std::size_t i = 0; i < qs.size(); ++i) {
    questions.push_back(with_index(i, [&] {
      SurveyQuestion q;
      q.id = string_field(qs[i], "id");
      q.topic = string_field(qs[i], "topic");
      q.text = string_field(qs[i], "text");
      for (const auto& o : field(qs[i], "options")) q.options.push_back(o.get<std::string>());
      if (q.options.size() < 2) {
        throw DataError("question " + q.id + " has fewer than 2 answer options");
      }
      return q;
    }));
  }

  std::vector<Respondent> respondents;
  const auto& rs = field(doc, "respondents");
  for (std::size_t i = 0; i < rs.size(); ++i) {
    respondents.push_back(with_index(i, [&] {
      Respondent r;
      r.id = string_field(rs[i], "id");
      r.persona = persona_field(rs[i], DatasetTag::OpinionQA);
      r.answers = field(rs[i], "answers");
      return r;
    }));
  }

  std::vector<std::string> topics;
  for (const auto& q : questions) {
    if (std::find(topics.begin(), topics.end(), q.topic) == topics.end()) {
      topics.push_back(q.topic);
    }
  }

  for (const auto& topic : topics) {
    std::vector<std::size_t> binary;
    for (std::size_t i = 0; i < questions.size(); ++i) {
      if (questions[i].topic != topic) continue;
      if (questions[i].options.size() == 2) {
        binary.push_back(i);
      } else {
        ++result.report.dropped["non_binary_question"];
      }
    }
    if (binary.empty()) {
      result.report.notes.push_back("topic '" + topic + "' has no binary question; skipped");
      continue;
    }
    Rng topic_rng(derive_seed(options.seed, "opinionqa-topic:" + topic));
    topic_rng.shuffle(std::span(binary));
    binary.resize(std::min(binary.size(), options.questions_per_topic));

    for (const auto qi : binary) {
      const auto& q = questions[qi];
      if (q.options[0] == q.options[1]) {
        throw DataError("question " + q.id + " has identical answer options", qi);
      }
      std::vector<std::size_t> answered;
      for (std::size_t ri = 0; ri < respondents.size(); ++ri) {
        if (answer_index(respondents[ri], q) >= 0) answered.push_back(ri);
      }
      result.report.considered += answered.size();
      Rng sample_rng(derive_seed(options.seed, "opinionqa-question:" + q.id));
      sample_rng.shuffle(std::span(answered));
      const auto keep = std::min(answered.size(), options.respondents_per_question);
      answered.resize(keep);
      std::sort(answered.begin(), answered.end());

      for (const auto ri : answered) {
        const auto& r = respondents[ri];
        JudgeTask task;
        task.id = "opinionqa-" + q.id + "-" + r.id;
        task.dataset_tag = DatasetTag::OpinionQA;
        task.question = q.text;
        task.response_a = q.options[0];
        task.response_b = q.options[1];
        task.persona = r.persona;
        task.ground_truth = answer_index(r, q) == 0 ? Choice::A : Choice::B;
        task.meta = {{"topic", q.topic}, {"question_id", q.id}, {"respondent_id", r.id}};
        result.tasks.push_back(std::move(task));
      }
    }
  }
  require_non_empty(result, "OpinionQA");
  return result;
}

LoadResult load_opinionqa(const fs::path& path, const OpinionQaOptions& options) {
  auto in = open_or_throw(path);
  return load_opinionqa(in, options);
}

// ---------------------------------------------------------------------------
// EC
// ---------------------------------------------------------------------------

Choice tie_label_ec(double empathy_a, double empathy_b, double distress_a, double distress_b,
                    double threshold) {
  if (std::fabs(empathy_a - empathy_b) < threshold ||
      std::fabs(distress_a - distress_b) < threshold) {
    return Choice::Tie;
  }
  return empathy_a > empathy_b ? Choice::A : Choice::B;
}

TieRatioPlan plan_tie_ratio(std::size_t ties_available, std::size_t non_ties_available,
                            std::size_t n, double target, double tolerance) {
  if (!(target >= 0.0 && target < 1.0)) {
    throw UsageError("tie ratio target must be in [0, 1)");
  }
  TieRatioPlan plan;
  if (n == 0) {
    plan.non_ties = non_ties_available;
    plan.ties = static_cast<std::size_t>(
        std::llround(static_cast<double>(non_ties_available) * target / (1.0 - target)));
  } else {
    plan.ties = static_cast<std::size_t>(std::llround(static_cast<double>(n) * target));
    plan.non_ties = n - plan.ties;
  }
  if (plan.ties + plan.non_ties == 0 || plan.ties > ties_available ||
      plan.non_ties > non_ties_available) {
    throw DataError("unachievable tie ratio " + format_number(target) + ": need " +
                    std::to_string(plan.ties) + " ties and " + std::to_string(plan.non_ties) +
                    " non-ties, have " + std::to_string(ties_available) + " and " +
                    std::to_string(non_ties_available));
  }
  if (std::fabs(plan.ratio() - target) > tolerance) {
    throw DataError("tie ratio " + format_number(plan.ratio()) + " is outside " +
                    format_number(target) + " +/- " + format_number(tolerance) +
                    " at this sample size");
  }
  return plan;
}

LoadResult load_ec(std::istream& in, const EcOptions& options) {
  struct Essay {
    std::string id;
    std::string article_id;
    std::string article_text;
    std::string text;
    double empathy = 0;
    double distress = 0;
    Persona persona;
  };

  std::vector<Essay> essays;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    const std::size_t line_index = index++;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    essays.push_back(with_index(line_index, [&] {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw DataError(std::string("malformed JSON: ") + e.what());
      }
      Essay e;
      e.id = string_field(j, "essay_id");
      e.article_id = string_field(j, "article_id");
      e.article_text = j.contains("article_text") ? string_field(j, "article_text") : "";
      e.text = string_field(j, "essay");
      e.empathy = number_field(j, "empathy");
      e.distress = number_field(j, "distress");
      e.persona = persona_field(j, DatasetTag::EC);
      return e;
    }));
  }

  LoadResult result;
  std::vector<std::string> articles;
  std::map<std::string, std::vector<std::size_t>> by_article;
  for (std::size_t i = 0; i < essays.size(); ++i) {
    auto& list = by_article[essays[i].article_id];
    if (list.empty()) articles.push_back(essays[i].article_id);
    list.push_back(i);
  }

  std::vector<JudgeTask> ties;
  std::vector<JudgeTask> non_ties;
  for (const auto& article : articles) {
    const auto& members = by_article[article];
    if (members.size() < 2) {
      result.report.notes.push_back("article '" + article + "' has a single essay; skipped");
      continue;
    }
    for (std::size_t x = 0; x < members.size(); ++x) {
      for (std::size_t y = x + 1; y < members.size(); ++y) {
        const auto& a = essays[members[x]];
        const auto& b = essays[members[y]];
        ++result.report.considered;
        if (a.text == b.text) {
          ++result.report.dropped["identical_responses"];
          continue;
        }
        const Choice label = tie_label_ec(a.empathy, b.empathy, a.distress, b.distress,
                                          options.tie_threshold);
        JudgeTask task;
        task.id = "ec-" + a.id + "-" + b.id;
        task.dataset_tag = DatasetTag::EC;
        task.question = a.article_text.empty() ? "Written response to news article " + article
                                               : a.article_text;
        task.response_a = a.text;
        task.response_b = b.text;
        // Target author: the higher-empathy writer for decided pairs.
        task.persona = label == Choice::B ? b.persona : a.persona;
        task.ground_truth = label;
        task.meta = {{"article_id", article},
                     {"essay_a", a.id},
                     {"essay_b", b.id},
                     {"empathy_a", format_number(a.empathy)},
                     {"empathy_b", format_number(b.empathy)},
                     {"distress_a", format_number(a.distress)},
                     {"distress_b", format_number(b.distress)}};
        (label == Choice::Tie ? ties : non_ties).push_back(std::move(task));
      }
    }
  }

  std::size_t keep_ties = 0;
  std::size_t keep_non_ties = 0;
  if (options.include_ties) {
    const auto plan = plan_tie_ratio(ties.size(), non_ties.size(), options.n,
                                     options.tie_ratio_target, options.tie_ratio_tolerance);
    keep_ties = plan.ties;
    keep_non_ties = plan.non_ties;
  } else {
    keep_non_ties = options.n == 0 ? non_ties.size() : options.n;
    if (keep_non_ties > non_ties.size()) {
      throw DataError("EC: requested " + std::to_string(options.n) + " non-tie pairs, only " +
                      std::to_string(non_ties.size()) + " available");
    }
  }
  result.report.dropped["tie"] = ties.size() - keep_ties;
  result.report.dropped["subsampled"] = non_ties.size() - keep_non_ties;

  // Uniform seeded subsampling of each pool, then restore pair order.
  auto take = [&](std::vector<JudgeTask>& pool, std::size_t k, std::string_view key) {
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(options.seed, key));
    rng.shuffle(std::span(order));
    order.resize(k);
    std::sort(order.begin(), order.end());
    std::vector<std::pair<std::size_t, JudgeTask>> out;
    for (auto i : order) out.emplace_back(i, std::move(pool[i]));
    return out;
  };
  auto kept_ties = take(ties, keep_ties, "ec-ties");
  auto kept_non = take(non_ties, keep_non_ties, "ec-non-ties");
  // Merge by task id for a stable, input-derived order.
  std::vector<JudgeTask> merged;
  for (auto& [i, t] : kept_non) merged.push_back(std::move(t));
  for (auto& [i, t] : kept_ties) merged.push_back(std::move(t));
  std::stable_sort(merged.begin(), merged.end(),
                   [](const JudgeTask& x, const JudgeTask& y) { return x.id < y.id; });
  result.tasks = std::move(merged);
  require_non_empty(result, "EC");
  return result;
}

LoadResult load_ec(const fs::path& path, const EcOptions& options) {
  auto in = open_or_throw(path);
  return load_ec(in, options);
}

// ---------------------------------------------------------------------------
// PR
// ---------------------------------------------------------------------------

FileEmbedder::FileEmbedder(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings file " + path.string());
  load(in);
}

FileEmbedder::FileEmbedder(std::istream& in) { load(in); }

void FileEmbedder::load(std::istream& in) {
  const auto lines = read_jsonl(in);
  std::size_t dim = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    with_index(i, [&] {
      auto text = string_field(lines[i], "text");
      EmbeddingVector v;
      for (const auto& x : field(lines[i], "vector")) v.push_back(x.get<float>());
      if (v.empty()) throw DataError("empty embedding vector");
      if (dim == 0) dim = v.size();
      if (v.size() != dim) throw DataError("embedding dimension mismatch");
      table_[std::move(text)] = std::move(v);
    });
  }
}

EmbeddingVector FileEmbedder::embed(std::string_view text) {
  const auto it = table_.find(text);
  if (it == table_.end()) throw EmbeddingError("no precomputed embedding for text");
  return it->second;
}

EmbeddingVector HashingEmbedder::embed(std::string_view text) {
  EmbeddingVector v(dim_, 0.0f);
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    const auto h = splitmix64(fnv1a64(token));
    v[h % dim_] += (h >> 63) ? 1.0f : -1.0f;
    token.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      token += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
  }
  flush();
  if (std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; })) v[0] = 1.0f;
  return v;
}

std::vector<PrTriple> read_pr_triples(std::istream& in) {
  std::vector<PrTriple> triples;
  const auto lines = read_jsonl(in);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    triples.push_back(with_index(i, [&] {
      PrTriple t;
      t.persona_id = string_field(lines[i], "persona_id");
      t.persona = persona_field(lines[i], DatasetTag::PR);
      t.question_id = string_field(lines[i], "question_id");
      t.question = string_field(lines[i], "question");
      t.response = string_field(lines[i], "response");
      return t;
    }));
  }
  return triples;
}

std::vector<PrTriple> read_pr_triples(const fs::path& path) {
  auto in = open_or_throw(path);
  return read_pr_triples(in);
}

LoadResult pair_pr_tasks(const std::vector<PrTriple>& triples, Embedder& embedder,
                         std::size_t jobs) {
  // Unique personas in first-appearance order.
  std::vector<std::string> persona_ids;
  std::map<std::string, std::size_t> persona_index;
  std::vector<std::vector<std::size_t>> triples_of;
  std::vector<const Persona*> personas;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const auto [it, inserted] = persona_index.emplace(triples[i].persona_id, persona_ids.size());
    if (inserted) {
      persona_ids.push_back(triples[i].persona_id);
      personas.push_back(&triples[i].persona);
      triples_of.emplace_back();
    } else if (!(*personas[it->second] == triples[i].persona)) {
      throw DataError("persona '" + triples[i].persona_id + "' has conflicting attributes", i);
    }
    triples_of[it->second].push_back(i);
  }
  if (persona_ids.size() < 2) throw DataError("PR pairing needs at least 2 personas");

  std::vector<EmbeddingVector> vectors(persona_ids.size());
  parallel_for(persona_ids.size(), jobs, [&](std::size_t p) {
    try {
      vectors[p] = embedder.embed(render_persona(*personas[p]));
    } catch (const EmbeddingError& e) {
      throw EmbeddingError("persona '" + persona_ids[p] + "': " + e.what());
    }
  });

  kernels::EmbeddingMatrix matrix(vectors.front().size());
  for (std::size_t p = 0; p < vectors.size(); ++p) {
    try {
      matrix.add_row(vectors[p]);
    } catch (const std::invalid_argument& e) {
      throw DataError("persona '" + persona_ids[p] + "': " + e.what());
    }
  }

  LoadResult result;
  std::vector<std::vector<std::size_t>> ranked(persona_ids.size());
  std::vector<std::vector<double>> scores(persona_ids.size());
  for (std::size_t p = 0; p < persona_ids.size(); ++p) {
    ranked[p] = matrix.ranked_neighbors(p);
    scores[p].resize(matrix.rows());
    matrix.similarities(p, scores[p]);
  }

  std::set<std::string> seen_ids;
  for (std::size_t ti = 0; ti < triples.size(); ++ti) {
    const auto& target = triples[ti];
    ++result.report.considered;
    const auto p = persona_index.at(target.persona_id);
    const PrTriple* distractor = nullptr;
    std::size_t neighbor = 0;
    for (const auto candidate : ranked[p]) {
      for (const auto di : triples_of[candidate]) {
        if (triples[di].question_id != target.question_id &&
            triples[di].response != target.response) {
          distractor = &triples[di];
          break;
        }
      }
      if (distractor) {
        neighbor = candidate;
        break;
      }
    }
    if (!distractor) {
      ++result.report.dropped["no_distractor"];
      continue;
    }
    JudgeTask task;
    task.id = "pr-" + target.persona_id + "-" + target.question_id;
    if (!seen_ids.insert(task.id).second) {
      throw DataError("duplicate (persona_id, question_id) " + target.persona_id + "/" +
                          target.question_id,
                      ti);
    }
    task.dataset_tag = DatasetTag::PR;
    task.question = target.question;
    task.response_a = target.response;
    task.response_b = distractor->response;
    task.persona = target.persona;
    task.ground_truth = Choice::A;
    char sim[32];
    std::snprintf(sim, sizeof sim, "%.6f", scores[p][neighbor]);
    task.meta = {{"target_persona_id", target.persona_id},
                 {"distractor_persona_id", distractor->persona_id},
                 {"distractor_question_id", distractor->question_id},
                 {"persona_similarity", sim}};
    with_index(ti, [&] { validate_task(task); });
    result.tasks.push_back(std::move(task));
  }
  require_non_empty(result, "PR");
  return result;
}

}  // namespace pjudge
