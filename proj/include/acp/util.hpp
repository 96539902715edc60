#ifndef ACP_UTIL_HPP_
#define ACP_UTIL_HPP_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace acp {

// Seeded RNG used everywhere so runs are reproducible bit-for-bit.
using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

std::string to_lower(const std::string& s);
std::vector<std::string> split_ws(const std::string& s);
std::vector<std::string> split_char(const std::string& s, char sep);

// Lowercase, strip punctuation at token edges. Used by the question
// tokenizer; stop-words are kept.
std::vector<std::string> tokenize_question(const std::string& text);

// Write `content` to `path` via a temp file + rename so an interrupted
// run never leaves a truncated artifact.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

void log_line(const std::string& level, const std::string& component,
              const std::string& message);

}  // namespace acp

#endif  // ACP_UTIL_HPP_
