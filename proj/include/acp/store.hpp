#ifndef ACP_STORE_HPP_
#define ACP_STORE_HPP_

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace acp {

struct Assertion {
  std::string head;
  std::string relation;  // e.g. "AtLocation"
  std::string tail;
  double weight = 1.0;
};

struct IngestReport {
  std::size_t accepted = 0;
  std::size_t skipped_malformed = 0;
  std::size_t skipped_language = 0;
  std::size_t deduplicated = 0;
};

// Indexed, immutable collection of ConceptNet assertions. Concurrent
// readers need no synchronization.
class ConceptStore {
 public:
  void add(const Assertion& a);  // dedupe on (head, relation, tail), max weight

  // All assertions with `key` as head or tail, in insertion order,
  // truncated to max_neighbors.
  std::vector<Assertion> neighbors(const std::string& key) const;

  bool contains(const std::string& key) const;
  std::size_t size() const { return assertions_.size(); }
  const std::vector<Assertion>& assertions() const { return assertions_; }
  const std::vector<std::string>& relation_vocab() const { return relation_vocab_; }

  std::size_t max_neighbors = 100;

  // Versioned line format: "acp-store v1" header, then
  // head<TAB>relation<TAB>tail<TAB>weight.
  std::string to_text() const;
  static ConceptStore from_text(const std::string& text);

 private:
  std::vector<Assertion> assertions_;
  std::map<std::string, std::vector<std::size_t>> index_;  // key -> assertion ids
  std::map<std::string, std::size_t> triple_ids_;
  std::vector<std::string> relation_vocab_;
};

// Lowercase, strip a frame suffix ("-NN"), underscores for spaces.
std::string normalize_concept(const std::string& label);

// ConceptNet 5.x assertion dump: tab-separated
// edge-URI, relation-URI, start-URI, end-URI, JSON metadata.
// Only assertions with both endpoints in `language` are kept.
ConceptStore ingest_csv(const std::string& text, const std::string& language,
                        IngestReport* report = nullptr);

}  // namespace acp

#endif  // ACP_STORE_HPP_
