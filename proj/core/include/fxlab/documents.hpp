#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fxlab/date.hpp"

namespace fxlab {

enum class DocCategory { news, analysis };

std::string to_string(DocCategory c);
DocCategory doc_category_from_string(const std::string& s);

// One dated text item plus whatever per-document scores the upstream
// scoring stage attached. Scores are data here, not something we compute.
struct DocumentRecord {
  Date date;
  DocCategory category = DocCategory::news;
  std::string text;
  std::optional<double> sentiment;     // [-1, 1]
  std::optional<double> class_prob;    // [0, 1]
  std::optional<double> polarity;      // [-1, 1]
  std::optional<double> subjectivity;  // [0, 1]
};

// JSONL: one object per line with keys `date`, `category`, `text` and an
// optional `scores` object. Out-of-range scores are rejected.
std::vector<DocumentRecord> load_documents_jsonl(const std::string& path);
void save_documents_jsonl(const std::string& path,
                          const std::vector<DocumentRecord>& docs);

}  // namespace fxlab
