#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace leakeval {

struct Topic {
  std::string topic_id;
  std::string text;
};

/// topic_id -> query text.
using TopicSet = std::map<std::string, std::string>;

/// doc_id -> graded relevance (>= 0).
using Judgments = std::map<std::string, int>;

/// topic_id -> judgments.
using QrelsSet = std::map<std::string, Judgments>;

/// doc_id -> passage text.
using Corpus = std::map<std::string, std::string>;

struct RunEntry {
  std::string topic_id;
  std::string doc_id;
  int rank = 0;
  double score = 0.0;
  std::string tag;
};

/// Ranked results grouped by topic. Within a topic, entries are sorted by
/// (score desc, doc_id desc) and ranks are contiguous from 1. parse_run and
/// the rerank pipeline only ever produce Runs in this canonical form.
struct Run {
  std::map<std::string, std::vector<RunEntry>> topics;

  bool operator==(const Run& other) const;
};

/// Parses `topic_id 0 doc_id grade` lines. Blank lines are skipped.
/// Throws ParseError with the line number on malformed input or a duplicate
/// (topic, doc) pair.
QrelsSet parse_qrels(const std::string& text);

std::string write_qrels(const QrelsSet& qrels);

/// Parses `topic_id Q0 doc_id rank score tag` lines, regroups by topic,
/// re-sorts each topic by (score desc, doc_id desc) and recomputes ranks so
/// the result is canonical regardless of the input's own ordering.
Run parse_run(const std::string& text);

/// Emits TREC run lines. Scores are serialized in shortest round-trip form,
/// so parse_run(write_run(r)) == r for any canonical run.
std::string write_run(const Run& run);

/// `topic_id<TAB>text` lines.
TopicSet parse_topics_tsv(const std::string& text);

/// One {"topic_id": ..., "text": ...} object per line.
TopicSet parse_topics_jsonl(const std::string& text);

/// One {"doc_id": ..., "text": ...} object per line. Input bytes are cleaned
/// up with sanitize_utf8 before JSON parsing.
Corpus parse_corpus_jsonl(const std::string& text);

std::string write_corpus_jsonl(const Corpus& corpus);

// File loaders; errors mention the path. load_topics sniffs JSONL vs TSV
// from the first non-empty line.
QrelsSet load_qrels(const std::string& path);
Run load_run(const std::string& path);
TopicSet load_topics(const std::string& path);
Corpus load_corpus(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

struct SampledPassage {
  std::string doc_id;
  std::string text;
};

/// Uniform sample (without replacement) of up to n relevant passages for one
/// topic: grade > 0 and text present in the corpus. Relevant docs missing
/// from the corpus are skipped with a warning pushed to `warnings`. The
/// random stream is derived from (seed, topic_id), so results are
/// deterministic per topic for a fixed seed.
/// Throws Error if the topic is absent from qrels or has no usable passage.
std::vector<SampledPassage> sample_relevant_passages(const QrelsSet& qrels, const Corpus& corpus,
                                                     const std::string& topic_id, std::size_t n,
                                                     std::uint64_t seed,
                                                     std::vector<std::string>* warnings = nullptr);

}  // namespace leakeval
