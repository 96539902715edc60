// Independent reference implementations used to cross-check the library.
// Everything here is deliberately written in the most naive way possible.

#ifndef ACP_TESTS_SUPPORT_ORACLES_HPP_
#define ACP_TESTS_SUPPORT_ORACLES_HPP_

#include <string>
#include <vector>

#include "acp/amr.hpp"
#include "acp/graph.hpp"
#include "acp/util.hpp"

namespace testsupport {

// Resolves a fixture file against the ACP_FIXTURES environment variable.
std::string fixture_path(const std::string& name);
std::string read_fixture(const std::string& name);

// Label-preserving isomorphism between rooted AMR graphs (variable names
// are ignored). Backtracking search; fine for test-sized graphs.
bool isomorphic(const acp::AmrGraph& a, const acp::AmrGraph& b);

// Random rooted AMR graph: tree skeleton with optional re-entrant edges,
// constants, frame and plain concepts, and inverse-role-worthy shapes.
acp::AmrGraph random_amr(acp::Rng& rng, std::size_t max_nodes = 8);

// All-pairs shortest hop counts via Floyd-Warshall over an undirected
// adjacency matrix. kInf for unreachable.
inline constexpr int kInf = 1 << 20;
std::vector<std::vector<int>> floyd_warshall(std::size_t n,
                                             const std::vector<std::pair<int, int>>& arcs);

// One GRU step on plain doubles; weight matrices are row-major
// (input x hidden) resp. (hidden x hidden).
std::vector<double> gru_step_oracle(
    const std::vector<double>& x, const std::vector<double>& h,
    const std::vector<double>& wz, const std::vector<double>& uz,
    const std::vector<double>& bz, const std::vector<double>& wr,
    const std::vector<double>& ur, const std::vector<double>& br,
    const std::vector<double>& wc, const std::vector<double>& uc,
    const std::vector<double>& bc, std::size_t in_dim, std::size_t hid_dim);

// Explicit four-term expansion of the relation-enhanced score:
// s_ij = c_i Wq (c_j Wk)^T + c_i Wq r_ji^T + r_ij (c_j Wk)^T + r_ij r_ji^T.
// c: (n x d), wq/wk: (d x hd), rf/rb: (n*n x hd). Returns the n x n matrix.
std::vector<std::vector<double>> four_term_expansion_oracle(
    const std::vector<double>& c, const std::vector<double>& wq,
    const std::vector<double>& wk, const std::vector<double>& rf,
    const std::vector<double>& rb, std::size_t n, std::size_t d, std::size_t hd);

// Random store over a small closed concept universe.
acp::ConceptStore random_store(acp::Rng& rng, std::size_t n_assertions,
                               const std::vector<std::string>& universe);

}  // namespace testsupport

#endif  // ACP_TESTS_SUPPORT_ORACLES_HPP_
