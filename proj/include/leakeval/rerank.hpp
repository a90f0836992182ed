#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "leakeval/llm_client.hpp"
#include "leakeval/trec_io.hpp"

namespace leakeval {

struct RerankConfig {
  std::size_t depth = 100;        // top candidates to rerank
  std::size_t window_size = 20;
  std::size_t stride = 10;
  std::size_t max_passage_tokens = 300;  // whitespace tokens per candidate in prompts
  std::string prompt_template;           // {topic} and {passages} placeholders
};

struct RerankCandidate {
  std::string doc_id;
  std::string text;
};

/// Extracts bracketed indices like "[3] > [1] > [2]" in order, drops
/// out-of-range and duplicate indices, and appends any missing indices in
/// ascending order, so the result is always a valid 1-based permutation of
/// 1..window_len. Garbage input yields the identity.
std::vector<std::size_t> parse_permutation(const std::string& raw, std::size_t window_len);

/// Builds the prompt for one window: the topic plus "[i] passage" lines.
std::string render_rerank_prompt(const std::string& prompt_template, const std::string& topic_text,
                                 const std::vector<RerankCandidate>& window,
                                 std::size_t max_passage_tokens);

/// Listwise sliding-window rerank of the top `depth` candidates, windows
/// processed from the bottom of the list upward. Returns the full doc list:
/// a permutation of the head followed by the untouched tail. An identity or
/// unparseable window answer leaves that window unchanged.
std::vector<std::string> rerank_topic(const Topic& topic,
                                      const std::vector<RerankCandidate>& candidates,
                                      const RerankConfig& config, CompletionSource& model,
                                      std::vector<std::string>* warnings = nullptr);

/// Reranks every topic of a first-stage run, pulling passage texts from the
/// corpus. Output entries carry the given tag and strictly decreasing scores
/// so the reordering survives the canonical (score desc, doc desc) sort.
Run rerank_run(const Run& first_stage, const TopicSet& topics, const Corpus& corpus,
               const RerankConfig& config, CompletionSource& model, const std::string& tag,
               std::vector<std::string>* warnings = nullptr);

}  // namespace leakeval
