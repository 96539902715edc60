#include "acp/amr.hpp"

#include <algorithm>
#include <cctype>
#include <queue>
#include <set>
#include <sstream>

namespace acp {

const AmrNode* AmrGraph::find(const std::string& id) const {
  for (const AmrNode& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

int AmrGraph::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == id) return static_cast<int>(i);
  return -1;
}

bool is_frame_concept(const std::string& label) {
  if (label.size() < 4) return false;
  std::size_t n = label.size();
  return label[n - 3] == '-' &&
         std::isdigit(static_cast<unsigned char>(label[n - 2])) &&
         std::isdigit(static_cast<unsigned char>(label[n - 1])) &&
         label[n - 4] != '-';
}

std::string normalize_role(const std::string& role) {
  std::string body = role;
  if (!body.empty() && body[0] == ':') body = body.substr(1);
  std::string lower;
  for (char c : body)
    lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower.rfind("arg", 0) == 0 && lower.size() > 3 &&
      std::isdigit(static_cast<unsigned char>(lower[3]))) {
    std::string out = ":ARG" + lower.substr(3);
    return out;
  }
  return ":" + lower;
}

namespace {

struct Token {
  enum Kind { kLParen, kRParen, kSlash, kRole, kAtom, kEnd } kind;
  std::string text;
  int line;
  int col;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  Token next() {
    skip_ws();
    if (pos_ >= text_.size()) return {Token::kEnd, "", line_, col_};
    int ln = line_, cl = col_;
    char c = text_[pos_];
    if (c == '(') { advance(); return {Token::kLParen, "(", ln, cl}; }
    if (c == ')') { advance(); return {Token::kRParen, ")", ln, cl}; }
    if (c == '/') { advance(); return {Token::kSlash, "/", ln, cl}; }
    if (c == '"') {
      std::string s;
      advance();
      while (pos_ < text_.size() && text_[pos_] != '"') {
        s.push_back(text_[pos_]);
        advance();
      }
      if (pos_ >= text_.size())
        throw PenmanError("unterminated string literal", ln, cl);
      advance();  // closing quote
      return {Token::kAtom, s, ln, cl};
    }
    std::string s;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != '/') {
      s.push_back(text_[pos_]);
      advance();
    }
    if (s.empty()) throw PenmanError("unexpected character", ln, cl);
    if (s[0] == ':') return {Token::kRole, s, ln, cl};
    return {Token::kAtom, s, ln, cl};
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      advance();
  }
  void advance() {
    if (text_[pos_] == '\n') { ++line_; col_ = 1; } else { ++col_; }
    ++pos_;
  }
  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(const std::string& text) : lex_(text) {
    collect_variables(text);
    cur_ = lex_.next();
  }

  AmrGraph parse() {
    expect(Token::kLParen, "expected '('");
    g_.root = parse_node();
    if (cur_.kind != Token::kEnd)
      throw PenmanError("trailing input after graph", cur_.line, cur_.col);
    validate();
    return std::move(g_);
  }

 private:
  // Pre-scan "( var /" occurrences so re-entrant references can be told
  // apart from constants even when they appear before the definition.
  void collect_variables(const std::string& text) {
    Lexer scan(text);
    Token prev2{Token::kEnd, "", 0, 0}, prev{Token::kEnd, "", 0, 0};
    int depth = 0;
    for (Token t = scan.next(); t.kind != Token::kEnd; t = scan.next()) {
      if (t.kind == Token::kLParen) ++depth;
      if (t.kind == Token::kRParen) {
        --depth;
        if (depth < 0)
          throw PenmanError("unbalanced ')'", t.line, t.col);
      }
      if (t.kind == Token::kSlash && prev.kind == Token::kAtom &&
          prev2.kind == Token::kLParen)
        declared_.insert(prev.text);
      prev2 = prev;
      prev = t;
    }
    if (depth != 0)
      throw PenmanError("unbalanced '('", prev.line, prev.col);
  }

  void expect(Token::Kind k, const std::string& msg) {
    if (cur_.kind != k) throw PenmanError(msg, cur_.line, cur_.col);
    cur_ = lex_.next();
  }

  // After '(' has been consumed: var '/' concept (role target)* ')'.
  // Returns the node id.
  std::string parse_node() {
    if (cur_.kind != Token::kAtom)
      throw PenmanError("expected variable name", cur_.line, cur_.col);
    std::string var = cur_.text;
    int vline = cur_.line, vcol = cur_.col;
    cur_ = lex_.next();
    if (cur_.kind != Token::kSlash)
      throw PenmanError("missing '/' after variable '" + var + "'", cur_.line,
                        cur_.col);
    cur_ = lex_.next();
    if (cur_.kind != Token::kAtom)
      throw PenmanError("expected concept label", cur_.line, cur_.col);
    std::string label = cur_.text;
    cur_ = lex_.next();

    auto it = defined_.find(var);
    if (it != defined_.end()) {
      if (it->second != label)
        throw PenmanError("variable '" + var + "' redefined with conflicting concept",
                          vline, vcol);
    } else {
      defined_[var] = label;
      g_.nodes.push_back({var, label, is_frame_concept(label)});
    }

    while (cur_.kind == Token::kRole) {
      std::string role = normalize_role(cur_.text);
      cur_ = lex_.next();
      std::string target = parse_target();
      add_edge(var, target, role);
    }
    expect(Token::kRParen, "expected ')' or role");
    return var;
  }

  std::string parse_target() {
    if (cur_.kind == Token::kLParen) {
      cur_ = lex_.next();
      return parse_node();
    }
    if (cur_.kind != Token::kAtom)
      throw PenmanError("expected role target", cur_.line, cur_.col);
    std::string atom = cur_.text;
    cur_ = lex_.next();
    if (declared_.count(atom)) return atom;  // re-entrant reference
    // Constant leaf (number, string, polarity "-").
    std::string id = "_c" + std::to_string(const_counter_++);
    g_.nodes.push_back({id, atom, false});
    return id;
  }

  void add_edge(const std::string& src, const std::string& dst, std::string role) {
    // Inverse roles become forward edges with swapped endpoints.
    bool inv = false;
    std::string suffix = "-of";
    if (role.size() > suffix.size() &&
        role.compare(role.size() - suffix.size(), suffix.size(), suffix) == 0) {
      inv = true;
      role = role.substr(0, role.size() - suffix.size());
    }
    if (inv)
      g_.edges.push_back({dst, src, role});
    else
      g_.edges.push_back({src, dst, role});
  }

  void validate() {
    std::set<std::string> ids;
    for (const AmrNode& n : g_.nodes) {
      if (!ids.insert(n.id).second)
        throw PenmanError("duplicate node id '" + n.id + "'", 0, 0);
    }
    for (const AmrEdge& e : g_.edges) {
      if (!ids.count(e.source) || !ids.count(e.target))
        throw PenmanError("edge endpoint '" +
                              (ids.count(e.source) ? e.target : e.source) +
                              "' never defined",
                          0, 0);
    }
    // Undirected reachability from root.
    std::map<std::string, std::vector<std::string>> adj;
    for (const AmrEdge& e : g_.edges) {
      adj[e.source].push_back(e.target);
      adj[e.target].push_back(e.source);
    }
    std::set<std::string> seen{g_.root};
    std::queue<std::string> q;
    q.push(g_.root);
    while (!q.empty()) {
      std::string u = q.front();
      q.pop();
      for (const std::string& v : adj[u])
        if (seen.insert(v).second) q.push(v);
    }
    if (seen.size() != g_.nodes.size())
      throw PenmanError("graph not connected from root", 0, 0);
  }

  Lexer lex_;
  Token cur_{Token::kEnd, "", 0, 0};
  AmrGraph g_;
  std::map<std::string, std::string> defined_;
  std::set<std::string> declared_;
  int const_counter_ = 0;
};

}  // namespace

AmrGraph parse_penman(const std::string& text) {
  Parser p(text);
  return p.parse();
}

std::vector<std::pair<std::string, AmrGraph>> parse_penman_corpus_with_ids(
    const std::string& text) {
  std::vector<std::pair<std::string, AmrGraph>> out;
  std::istringstream is(text);
  std::string line, block, pending_id;
  int record = 0;
  auto flush = [&]() {
    if (block.find_first_not_of(" \t\r\n") == std::string::npos) {
      block.clear();
      return;
    }
    std::string id = pending_id.empty() ? ("g" + std::to_string(record)) : pending_id;
    out.emplace_back(id, parse_penman(block));
    ++record;
    block.clear();
    pending_id.clear();
  };
  while (std::getline(is, line)) {
    if (!line.empty() && line[0] == '#') {
      std::string tag = "# ::id";
      if (line.rfind(tag, 0) == 0) {
        std::istringstream ls(line.substr(tag.size()));
        ls >> pending_id;
      }
      continue;
    }
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      flush();
      continue;
    }
    block += line;
    block.push_back('\n');
  }
  flush();
  return out;
}

std::vector<AmrGraph> parse_penman_corpus(const std::string& text) {
  std::vector<AmrGraph> out;
  for (auto& [id, g] : parse_penman_corpus_with_ids(text)) out.push_back(std::move(g));
  return out;
}

namespace {

bool needs_quotes(const std::string& s) {
  if (s.empty()) return true;
  for (char c : s)
    if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' ||
        c == '/' || c == ':' || c == '"')
      return true;
  return false;
}

struct Serializer {
  const AmrGraph& g;
  std::map<std::string, std::string> var_of;  // node id -> fresh variable
  std::set<std::string> emitted;
  std::set<std::size_t> used_edges;
  std::ostringstream out;

  explicit Serializer(const AmrGraph& graph) : g(graph) {
    int i = 0;
    for (const AmrNode& n : g.nodes)
      var_of[n.id] = "v" + std::to_string(i++);
  }

  struct Nbr {
    std::string other;
    std::string role;
    bool forward;  // edge direction matches traversal direction
    std::size_t edge;
  };

  std::vector<Nbr> neighbors(const std::string& id) const {
    std::vector<Nbr> out;
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
      const AmrEdge& e = g.edges[i];
      if (e.source == id) out.push_back({e.target, e.label, true, i});
      if (e.target == id) out.push_back({e.source, e.label, false, i});
    }
    return out;
  }

  void emit_node(const std::string& id) {
    const AmrNode* n = g.find(id);
    emitted.insert(id);
    out << '(' << var_of[id] << " / ";
    if (needs_quotes(n->label))
      out << '"' << n->label << '"';
    else
      out << n->label;
    for (const Nbr& nb : neighbors(id)) {
      if (used_edges.count(nb.edge)) continue;
      used_edges.insert(nb.edge);
      std::string role = nb.forward ? nb.role : nb.role + "-of";
      if (!emitted.count(nb.other)) {
        out << ' ' << role << ' ';
        emit_node(nb.other);
      } else {
        out << ' ' << role << ' ' << var_of[nb.other];  // re-entrancy
      }
    }
    out << ')';
  }

  std::string run() {
    emit_node(g.root);
    return out.str();
  }
};

}  // namespace

std::string serialize_penman(const AmrGraph& g) {
  Serializer s(g);
  return s.run();
}

RelationStats corpus_role_stats(const std::vector<AmrGraph>& graphs) {
  RelationStats stats;
  for (const AmrGraph& g : graphs)
    for (const AmrEdge& e : g.edges) {
      ++stats.counts[e.label];
      ++stats.total;
    }
  return stats;
}

}  // namespace acp
