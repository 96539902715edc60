#include "acp/store.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "acp/amr.hpp"
#include "acp/util.hpp"
#include "json.hpp"

namespace acp {

void ConceptStore::add(const Assertion& a) {
  std::string key = a.head + "\t" + a.relation + "\t" + a.tail;
  auto it = triple_ids_.find(key);
  if (it != triple_ids_.end()) {
    assertions_[it->second].weight = std::max(assertions_[it->second].weight, a.weight);
    return;
  }
  std::size_t id = assertions_.size();
  triple_ids_[key] = id;
  assertions_.push_back(a);
  index_[a.head].push_back(id);
  if (a.tail != a.head) index_[a.tail].push_back(id);
  if (std::find(relation_vocab_.begin(), relation_vocab_.end(), a.relation) ==
      relation_vocab_.end())
    relation_vocab_.push_back(a.relation);
}

std::vector<Assertion> ConceptStore::neighbors(const std::string& key) const {
  std::vector<Assertion> out;
  auto it = index_.find(key);
  if (it == index_.end()) return out;
  for (std::size_t id : it->second) {
    if (out.size() >= max_neighbors) break;
    out.push_back(assertions_[id]);
  }
  return out;
}

bool ConceptStore::contains(const std::string& key) const {
  return index_.count(key) > 0;
}

std::string ConceptStore::to_text() const {
  std::ostringstream os;
  os << "acp-store v1\n";
  os.precision(17);
  for (const Assertion& a : assertions_)
    os << a.head << '\t' << a.relation << '\t' << a.tail << '\t' << a.weight << '\n';
  return os.str();
}

ConceptStore ConceptStore::from_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line.rfind("acp-store v1", 0) != 0)
    throw std::runtime_error("bad store file: missing 'acp-store v1' header");
  ConceptStore store;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto fields = split_char(line, '\t');
    if (fields.size() != 4)
      throw std::runtime_error("bad store line: " + line);
    store.add({fields[0], fields[1], fields[2], std::stod(fields[3])});
  }
  return store;
}

std::string normalize_concept(const std::string& label) {
  std::string s = label;
  if (is_frame_concept(s)) s = s.substr(0, s.size() - 3);
  std::string out;
  for (char c : s) {
    if (c == ' ')
      out.push_back('_');
    else
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

namespace {

// "/c/en/home_entertainment/n/wn" -> key "home_entertainment", lang "en".
// Returns false when the URI is not a concept URI.
bool parse_concept_uri(const std::string& uri, std::string* lang, std::string* key) {
  auto parts = split_char(uri, '/');
  // parts[0] empty, parts[1]=="c", parts[2]=lang, parts[3]=term
  if (parts.size() < 4 || !parts[0].empty() || parts[1] != "c") return false;
  *lang = parts[2];
  *key = parts[3];
  return !key->empty();
}

std::string strip_relation_uri(const std::string& uri) {
  auto parts = split_char(uri, '/');
  if (parts.size() >= 3 && parts[1] == "r") return parts[2];
  return uri;
}

}  // namespace

ConceptStore ingest_csv(const std::string& text, const std::string& language,
                        IngestReport* report) {
  IngestReport local;
  IngestReport& rep = report ? *report : local;
  ConceptStore store;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto fields = split_char(line, '\t');
    if (fields.size() < 5) {
      ++rep.skipped_malformed;
      continue;
    }
    std::string lang1, lang2, head, tail;
    if (!parse_concept_uri(fields[2], &lang1, &head) ||
        !parse_concept_uri(fields[3], &lang2, &tail)) {
      ++rep.skipped_malformed;
      continue;
    }
    if (lang1 != language || lang2 != language) {
      ++rep.skipped_language;
      continue;
    }
    double weight = 1.0;
    try {
      auto meta = nlohmann::json::parse(fields[4]);
      if (meta.contains("weight")) weight = meta["weight"].get<double>();
    } catch (const nlohmann::json::exception&) {
      ++rep.skipped_malformed;
      continue;
    }
    std::size_t before = store.size();
    store.add({head, strip_relation_uri(fields[1]), tail, weight});
    if (store.size() == before)
      ++rep.deduplicated;
    else
      ++rep.accepted;
  }
  if (rep.skipped_malformed > 0)
    log_line("warn", "ingest",
             std::to_string(rep.skipped_malformed) + " malformed records skipped");
  return store;
}

}  // namespace acp
