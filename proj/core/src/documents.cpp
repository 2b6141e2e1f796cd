#include "fxlab/documents.hpp"

#include <fstream>

#include <json.hpp>

#include "fxlab/error.hpp"
#include "fxlab/io.hpp"

namespace fxlab {

std::string to_string(DocCategory c) {
  return c == DocCategory::news ? "news" : "analysis";
}

DocCategory doc_category_from_string(const std::string& s) {
  if (s == "news") return DocCategory::news;
  if (s == "analysis") return DocCategory::analysis;
  throw Error("unknown document category '" + s +
              "' (expected 'news' or 'analysis')");
}

namespace {

void check_range(const char* key, double v, double lo, double hi, int line) {
  if (!(v >= lo && v <= hi)) {
    throw Error("documents line " + std::to_string(line) + ": score '" + key +
                "' = " + std::to_string(v) + " outside [" + std::to_string(lo) +
                ", " + std::to_string(hi) + "]");
  }
}

}  // namespace

std::vector<DocumentRecord> load_documents_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open documents file '" + path + "'");
  std::vector<DocumentRecord> docs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error("documents line " + std::to_string(lineno) + ": " + e.what());
    }
    DocumentRecord doc;
    try {
      doc.date = Date::parse(j.at("date").get<std::string>());
      doc.category = doc_category_from_string(j.at("category").get<std::string>());
      doc.text = j.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error("documents line " + std::to_string(lineno) + ": " + e.what());
    }
    if (j.contains("scores")) {
      const auto& s = j["scores"];
      if (s.contains("sentiment")) {
        doc.sentiment = s["sentiment"].get<double>();
        check_range("sentiment", *doc.sentiment, -1.0, 1.0, lineno);
      }
      if (s.contains("class_prob")) {
        doc.class_prob = s["class_prob"].get<double>();
        check_range("class_prob", *doc.class_prob, 0.0, 1.0, lineno);
      }
      if (s.contains("polarity")) {
        doc.polarity = s["polarity"].get<double>();
        check_range("polarity", *doc.polarity, -1.0, 1.0, lineno);
      }
      if (s.contains("subjectivity")) {
        doc.subjectivity = s["subjectivity"].get<double>();
        check_range("subjectivity", *doc.subjectivity, 0.0, 1.0, lineno);
      }
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

void save_documents_jsonl(const std::string& path,
                          const std::vector<DocumentRecord>& docs) {
  std::string body;
  for (const auto& doc : docs) {
    nlohmann::json j;
    j["date"] = doc.date.to_string();
    j["category"] = to_string(doc.category);
    j["text"] = doc.text;
    nlohmann::json scores;
    if (doc.sentiment) scores["sentiment"] = *doc.sentiment;
    if (doc.class_prob) scores["class_prob"] = *doc.class_prob;
    if (doc.polarity) scores["polarity"] = *doc.polarity;
    if (doc.subjectivity) scores["subjectivity"] = *doc.subjectivity;
    if (!scores.empty()) j["scores"] = scores;
    body += j.dump();
    body += '\n';
  }
  write_file_atomic(path, body);
}

}  // namespace fxlab
