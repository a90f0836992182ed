#include "leakeval/rerank.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "leakeval/errors.hpp"
#include "leakeval/text_util.hpp"

namespace leakeval {

namespace {

void validate(const RerankConfig& config) {
  if (config.stride < 1 || config.stride > config.window_size ||
      config.window_size > config.depth) {
    throw Error("rerank config requires 1 <= stride <= window_size <= depth");
  }
}

}  // namespace

std::vector<std::size_t> parse_permutation(const std::string& raw, std::size_t window_len) {
  std::vector<std::size_t> order;
  std::set<std::size_t> seen;
  std::size_t i = 0;
  while (i < raw.size()) {
    if (raw[i] != '[') {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    std::size_t value = 0;
    bool any_digit = false;
    while (j < raw.size() && std::isdigit(static_cast<unsigned char>(raw[j]))) {
      value = value * 10 + static_cast<std::size_t>(raw[j] - '0');
      any_digit = true;
      ++j;
    }
    if (any_digit && j < raw.size() && raw[j] == ']') {
      if (value >= 1 && value <= window_len && seen.insert(value).second) {
        order.push_back(value);
      }
      i = j + 1;
    } else {
      ++i;
    }
  }
  for (std::size_t v = 1; v <= window_len; ++v) {
    if (!seen.count(v)) order.push_back(v);
  }
  return order;
}

std::string render_rerank_prompt(const std::string& prompt_template, const std::string& topic_text,
                                 const std::vector<RerankCandidate>& window,
                                 std::size_t max_passage_tokens) {
  std::string passages;
  for (std::size_t i = 0; i < window.size(); ++i) {
    passages += "[" + std::to_string(i + 1) + "] " +
                truncate_tokens(window[i].text, max_passage_tokens) + "\n";
  }
  std::string prompt = replace_all(prompt_template, "{topic}", topic_text);
  return replace_all(prompt, "{passages}", passages);
}

std::vector<std::string> rerank_topic(const Topic& topic,
                                      const std::vector<RerankCandidate>& candidates,
                                      const RerankConfig& config, CompletionSource& model,
                                      std::vector<std::string>* warnings) {
  validate(config);
  if (config.prompt_template.find("{topic}") == std::string::npos ||
      config.prompt_template.find("{passages}") == std::string::npos) {
    throw Error("rerank prompt template must contain {topic} and {passages}");
  }
  {
    std::set<std::string> ids;
    for (const RerankCandidate& c : candidates) {
      if (!ids.insert(c.doc_id).second) {
        throw Error("duplicate candidate doc '" + c.doc_id + "' for topic " + topic.topic_id);
      }
    }
  }

  std::vector<RerankCandidate> head(candidates.begin(),
                                    candidates.begin() +
                                        std::min(config.depth, candidates.size()));

  // Window start offsets, bottom-up; the last window is clamped to 0 so the
  // head of the list is always covered.
  std::vector<std::size_t> starts;
  if (head.size() <= config.window_size) {
    starts.push_back(0);
  } else {
    std::size_t start = head.size() - config.window_size;
    for (;;) {
      starts.push_back(start);
      if (start == 0) break;
      start = start >= config.stride ? start - config.stride : 0;
    }
  }

  for (const std::size_t start : starts) {
    const std::size_t len = std::min(config.window_size, head.size() - start);
    const std::vector<RerankCandidate> window(head.begin() + start, head.begin() + start + len);
    const std::string response = model.complete(
        render_rerank_prompt(config.prompt_template, topic.text, window, config.max_passage_tokens));
    const std::vector<std::size_t> order = parse_permutation(response, len);
    bool identity = true;
    for (std::size_t i = 0; i < len; ++i) identity = identity && order[i] == i + 1;
    if (identity && warnings != nullptr && response.find('[') == std::string::npos) {
      warnings->push_back("topic " + topic.topic_id + ": window at " + std::to_string(start) +
                          " had no parseable permutation, order kept");
    }
    for (std::size_t i = 0; i < len; ++i) head[start + i] = window[order[i] - 1];
  }

  std::vector<std::string> out;
  out.reserve(candidates.size());
  for (const RerankCandidate& c : head) out.push_back(c.doc_id);
  for (std::size_t i = head.size(); i < candidates.size(); ++i) out.push_back(candidates[i].doc_id);
  return out;
}

Run rerank_run(const Run& first_stage, const TopicSet& topics, const Corpus& corpus,
               const RerankConfig& config, CompletionSource& model, const std::string& tag,
               std::vector<std::string>* warnings) {
  Run out;
  for (const auto& [topic_id, entries] : first_stage.topics) {
    auto topic_it = topics.find(topic_id);
    if (topic_it == topics.end()) {
      if (warnings) warnings->push_back("topic " + topic_id + ": no topic text, copied unranked");
      out.topics[topic_id] = entries;
      for (std::size_t i = 0; i < out.topics[topic_id].size(); ++i) {
        RunEntry& e = out.topics[topic_id][i];
        e.rank = static_cast<int>(i + 1);
        e.score = static_cast<double>(entries.size() - i);
        e.tag = tag;
      }
      continue;
    }
    std::vector<RerankCandidate> candidates;
    candidates.reserve(entries.size());
    for (const RunEntry& e : entries) {
      auto doc_it = corpus.find(e.doc_id);
      if (doc_it == corpus.end()) {
        throw Error("doc '" + e.doc_id + "' from the run is missing from the corpus");
      }
      candidates.push_back({e.doc_id, doc_it->second});
    }
    const Topic topic{topic_id, topic_it->second};
    const std::vector<std::string> reordered =
        rerank_topic(topic, candidates, config, model, warnings);

    std::vector<RunEntry>& out_entries = out.topics[topic_id];
    out_entries.reserve(reordered.size());
    for (std::size_t i = 0; i < reordered.size(); ++i) {
      RunEntry e;
      e.topic_id = topic_id;
      e.doc_id = reordered[i];
      e.rank = static_cast<int>(i + 1);
      e.score = static_cast<double>(reordered.size() - i);
      e.tag = tag;
      out_entries.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace leakeval
