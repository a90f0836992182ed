#include "leakeval/trec_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "leakeval/errors.hpp"
#include "leakeval/rng.hpp"
#include "leakeval/text_util.hpp"

namespace leakeval {

namespace {

using nlohmann::json;

int parse_int_field(const std::string& token, std::size_t line_no, const char* what) {
  int value = 0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw ParseError("line " + std::to_string(line_no) + ": invalid " + what + " '" + token + "'");
  }
  return value;
}

double parse_double_field(const std::string& token, std::size_t line_no, const char* what) {
  double value = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size() || !std::isfinite(value)) {
    throw ParseError("line " + std::to_string(line_no) + ": invalid " + what + " '" + token + "'");
  }
  return value;
}

json parse_json_line(const std::string& line, std::size_t line_no) {
  json obj = json::parse(sanitize_utf8(line), nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    throw ParseError("line " + std::to_string(line_no) + ": not a JSON object");
  }
  return obj;
}

std::string require_string(const json& obj, const char* key, std::size_t line_no) {
  if (!obj.contains(key) || !obj.at(key).is_string()) {
    throw ParseError("line " + std::to_string(line_no) + ": missing string field '" + key + "'");
  }
  return obj.at(key).get<std::string>();
}

// Canonical within-topic order: score desc, doc_id desc on ties.
bool entry_before(const RunEntry& a, const RunEntry& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id > b.doc_id;
}

}  // namespace

bool Run::operator==(const Run& other) const {
  if (topics.size() != other.topics.size()) return false;
  for (const auto& [topic_id, entries] : topics) {
    auto it = other.topics.find(topic_id);
    if (it == other.topics.end() || it->second.size() != entries.size()) return false;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const RunEntry& a = entries[i];
      const RunEntry& b = it->second[i];
      if (a.topic_id != b.topic_id || a.doc_id != b.doc_id || a.rank != b.rank ||
          a.score != b.score || a.tag != b.tag) {
        return false;
      }
    }
  }
  return true;
}

QrelsSet parse_qrels(const std::string& text) {
  QrelsSet qrels;
  const std::vector<std::string> lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (trim(lines[i]).empty()) continue;
    const std::vector<std::string> fields = split_ws(lines[i]);
    if (fields.size() != 4) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 4 fields, got " +
                       std::to_string(fields.size()));
    }
    const int grade = parse_int_field(fields[3], line_no, "grade");
    if (grade < 0) {
      throw ParseError("line " + std::to_string(line_no) + ": negative grade");
    }
    auto [it, inserted] = qrels[fields[0]].emplace(fields[2], grade);
    if (!inserted) {
      throw ParseError("line " + std::to_string(line_no) + ": duplicate judgment for topic '" +
                       fields[0] + "', doc '" + fields[2] + "'");
    }
  }
  return qrels;
}

std::string write_qrels(const QrelsSet& qrels) {
  std::string out;
  for (const auto& [topic_id, judgments] : qrels) {
    for (const auto& [doc_id, grade] : judgments) {
      out += topic_id + " 0 " + doc_id + " " + std::to_string(grade) + "\n";
    }
  }
  return out;
}

Run parse_run(const std::string& text) {
  Run run;
  std::map<std::string, std::set<std::string>> seen;
  const std::vector<std::string> lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (trim(lines[i]).empty()) continue;
    const std::vector<std::string> fields = split_ws(lines[i]);
    if (fields.size() != 6) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 6 fields, got " +
                       std::to_string(fields.size()));
    }
    RunEntry entry;
    entry.topic_id = fields[0];
    entry.doc_id = fields[2];
    entry.rank = parse_int_field(fields[3], line_no, "rank");
    entry.score = parse_double_field(fields[4], line_no, "score");
    entry.tag = fields[5];
    if (!seen[entry.topic_id].insert(entry.doc_id).second) {
      throw ParseError("line " + std::to_string(line_no) + ": duplicate doc '" + entry.doc_id +
                       "' in topic '" + entry.topic_id + "'");
    }
    run.topics[entry.topic_id].push_back(std::move(entry));
  }
  for (auto& [topic_id, entries] : run.topics) {
    std::stable_sort(entries.begin(), entries.end(), entry_before);
    for (std::size_t r = 0; r < entries.size(); ++r) entries[r].rank = static_cast<int>(r + 1);
  }
  return run;
}

std::string write_run(const Run& run) {
  std::string out;
  for (const auto& [topic_id, entries] : run.topics) {
    for (const RunEntry& e : entries) {
      out += e.topic_id + " Q0 " + e.doc_id + " " + std::to_string(e.rank) + " " +
             format_double(e.score) + " " + e.tag + "\n";
    }
  }
  return out;
}

TopicSet parse_topics_tsv(const std::string& text) {
  TopicSet topics;
  const std::vector<std::string> lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (trim(lines[i]).empty()) continue;
    const std::size_t tab = lines[i].find('\t');
    if (tab == std::string::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": expected topic_id<TAB>text");
    }
    const std::string topic_id = trim(lines[i].substr(0, tab));
    const std::string topic_text = sanitize_utf8(trim(lines[i].substr(tab + 1)));
    if (topic_id.empty() || topic_text.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty topic id or text");
    }
    if (!topics.emplace(topic_id, topic_text).second) {
      throw ParseError("line " + std::to_string(line_no) + ": duplicate topic '" + topic_id + "'");
    }
  }
  return topics;
}

TopicSet parse_topics_jsonl(const std::string& text) {
  TopicSet topics;
  const std::vector<std::string> lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (trim(lines[i]).empty()) continue;
    const json obj = parse_json_line(lines[i], line_no);
    if (obj.contains("_meta")) continue;
    const std::string topic_id = require_string(obj, "topic_id", line_no);
    const std::string topic_text = require_string(obj, "text", line_no);
    if (topic_id.empty() || topic_text.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty topic id or text");
    }
    if (!topics.emplace(topic_id, topic_text).second) {
      throw ParseError("line " + std::to_string(line_no) + ": duplicate topic '" + topic_id + "'");
    }
  }
  return topics;
}

Corpus parse_corpus_jsonl(const std::string& text) {
  Corpus corpus;
  const std::vector<std::string> lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (trim(lines[i]).empty()) continue;
    const json obj = parse_json_line(lines[i], line_no);
    if (obj.contains("_meta")) continue;
    const std::string doc_id = require_string(obj, "doc_id", line_no);
    const std::string doc_text = require_string(obj, "text", line_no);
    if (doc_text.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty text for doc '" + doc_id + "'");
    }
    if (!corpus.emplace(doc_id, doc_text).second) {
      throw ParseError("line " + std::to_string(line_no) + ": duplicate doc '" + doc_id + "'");
    }
  }
  return corpus;
}

std::string write_corpus_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& [doc_id, doc_text] : corpus) {
    json obj{{"doc_id", doc_id}, {"text", doc_text}};
    out += obj.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path);
  out << content;
  if (!out) throw Error("write failed: " + path);
}

QrelsSet load_qrels(const std::string& path) {
  try {
    return parse_qrels(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

Run load_run(const std::string& path) {
  try {
    return parse_run(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

TopicSet load_topics(const std::string& path) {
  const std::string text = read_file(path);
  std::string first_line;
  for (const std::string& line : split_lines(text)) {
    if (!trim(line).empty()) {
      first_line = trim(line);
      break;
    }
  }
  try {
    if (!first_line.empty() && first_line.front() == '{') return parse_topics_jsonl(text);
    return parse_topics_tsv(text);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

Corpus load_corpus(const std::string& path) {
  try {
    return parse_corpus_jsonl(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::vector<SampledPassage> sample_relevant_passages(const QrelsSet& qrels, const Corpus& corpus,
                                                     const std::string& topic_id, std::size_t n,
                                                     std::uint64_t seed,
                                                     std::vector<std::string>* warnings) {
  if (n < 1) throw Error("sample size must be >= 1");
  auto topic_it = qrels.find(topic_id);
  if (topic_it == qrels.end()) throw Error("topic '" + topic_id + "' not present in qrels");

  // Candidates in doc_id order (qrels map is sorted), so the sampled subset
  // depends only on (seed, topic_id) and the candidate set.
  std::vector<std::string> candidates;
  for (const auto& [doc_id, grade] : topic_it->second) {
    if (grade <= 0) continue;
    if (corpus.find(doc_id) == corpus.end()) {
      if (warnings) {
        warnings->push_back("topic " + topic_id + ": relevant doc '" + doc_id +
                            "' missing from corpus, skipped");
      }
      continue;
    }
    candidates.push_back(doc_id);
  }
  if (candidates.empty()) {
    throw Error("topic '" + topic_id + "' has no relevant passage available in the corpus");
  }

  // Partial Fisher-Yates: the first min(n, |candidates|) slots are a uniform
  // sample without replacement.
  SplitMix64 rng(derive_stream(seed, topic_id));
  const std::size_t take = std::min(n, candidates.size());
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.bounded(candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
  }

  std::vector<SampledPassage> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.push_back({candidates[i], corpus.at(candidates[i])});
  }
  return out;
}

}  // namespace leakeval
