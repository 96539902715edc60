#ifndef ACP_AMR_HPP_
#define ACP_AMR_HPP_

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace acp {

struct AmrNode {
  std::string id;       // variable name, e.g. "vv1"
  std::string label;  // concept label, e.g. "require-01"
  bool is_frame = false;
};

struct AmrEdge {
  std::string source;
  std::string target;
  std::string label;  // normalized role, e.g. ":ARG0", ":mod"
};

// Rooted labeled directed graph. Immutable after parsing; every node is
// reachable from the root by undirected traversal and node ids are unique.
struct AmrGraph {
  std::string root;
  std::vector<AmrNode> nodes;
  std::vector<AmrEdge> edges;

  const AmrNode* find(const std::string& id) const;
  int index_of(const std::string& id) const;  // -1 if absent
};

struct RelationStats {
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
};

class PenmanError : public std::runtime_error {
 public:
  PenmanError(const std::string& msg, int line, int column)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ")"),
        line(line),
        column(column) {}
  int line;
  int column;
};

// True iff the label carries a PropBank frame suffix: a dash followed by
// exactly two digits at the end ("require-01", "play-11").
bool is_frame_concept(const std::string& label);

// ":arg0" -> ":ARG0", ":Mod" -> ":mod". Accepts labels with or without the
// leading colon; the result always has one.
std::string normalize_role(const std::string& role);

AmrGraph parse_penman(const std::string& text);

// Blank-line separated records; "#"-prefixed lines are comments. A
// "# ::id <id>" comment names the following graph.
std::vector<AmrGraph> parse_penman_corpus(const std::string& text);
std::vector<std::pair<std::string, AmrGraph>> parse_penman_corpus_with_ids(
    const std::string& text);

// Inverse of parse_penman up to isomorphism; variable names are regenerated.
std::string serialize_penman(const AmrGraph& g);

RelationStats corpus_role_stats(const std::vector<AmrGraph>& graphs);

}  // namespace acp

#endif  // ACP_AMR_HPP_
