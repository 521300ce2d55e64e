#pragma once

// Shared helpers for the test suites. Everything here is deliberately
// independent of the library's own algorithms.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "anderson/topology.hpp"

namespace testing {

inline std::vector<std::size_t> plain_bfs(const anderson::Topology& t, anderson::VertexId s) {
  std::vector<std::size_t> d(t.vertex_count(), static_cast<std::size_t>(-1));
  std::queue<anderson::VertexId> q;
  d[s] = 0;
  q.push(s);
  while (!q.empty()) {
    const auto u = q.front();
    q.pop();
    for (auto v : t.neighbors(u)) {
      if (d[v] == static_cast<std::size_t>(-1)) {
        d[v] = d[u] + 1;
        q.push(v);
      }
    }
  }
  return d;
}

/// Adjacency matrix built straight from the edge list.
inline Eigen::MatrixXd adjacency(const anderson::Topology& t) {
  const auto n = static_cast<Eigen::Index>(t.vertex_count());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [u, v] : t.edges()) {
    a(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) = 1.0;
    a(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u)) = 1.0;
  }
  return a;
}

inline Eigen::MatrixXcd inverse_shifted(const Eigen::MatrixXd& h, std::complex<double> z) {
  Eigen::MatrixXcd m = h.cast<std::complex<double>>();
  m.diagonal().array() -= z;
  return m.fullPivLu().inverse();
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("anderson_tests_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
