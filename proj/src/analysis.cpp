#include "videograph/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "videograph/errors.hpp"

namespace videograph {

double track_node_distances(const Tensor& nodes_hat) {
  if (nodes_hat.dim() != 2 || nodes_hat.size(0) < 2) {
    throw ShapeError("track_node_distances expects N x C with N >= 2, got " + shape_to_string(nodes_hat.shape()));
  }
  const std::size_t n = nodes_hat.size(0), c = nodes_hat.size(1);
  std::vector<double> rows(nodes_hat.data().begin(), nodes_hat.data().end());
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (std::size_t k = 0; k < c; ++k) norm += rows[i * c + k] * rows[i * c + k];
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    for (std::size_t k = 0; k < c; ++k) rows[i * c + k] /= norm;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < c; ++k) {
        const double d = rows[i * c + k] - rows[j * c + k];
        d2 += d * d;
      }
      total += std::sqrt(d2);
    }
  }
  return total / static_cast<double>(n * (n - 1) / 2);
}

ActivationStack ActivationStack::from_model_order(const Tensor& activations) {
  if (activations.dim() != 4) {
    throw ShapeError("activations must be (M, T', N', C), got " + shape_to_string(activations.shape()));
  }
  const std::size_t m = activations.size(0), t = activations.size(1), n = activations.size(2),
                    c = activations.size(3);
  std::vector<double> out(activations.numel());
  const auto src = activations.data();
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t ti = 0; ti < t; ++ti)
      for (std::size_t ni = 0; ni < n; ++ni)
        for (std::size_t k = 0; k < c; ++k)
          out[((a * n + ni) * t + ti) * c + k] = src[((a * t + ti) * n + ni) * c + k];
  return ActivationStack{Tensor({m, n, t, c}, std::move(out))};
}

ExtractedGraph extract_activity_graph(const ActivationStack& stack, int class_id) {
  const Tensor& z1 = stack.z1;
  if (!z1.defined() || z1.dim() != 4) throw ShapeError("activation stack must be M x N' x T' x C");
  const std::size_t m = z1.size(0), n = z1.size(1), t = z1.size(2), c = z1.size(3);
  if (m == 0) throw ShapeError("activation stack is empty");
  const auto v = z1.data();

  std::vector<double> z2(n * t * c, 0.0);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t i = 0; i < n * t * c; ++i) z2[i] += v[a * n * t * c + i];
  for (double& x : z2) x /= static_cast<double>(m);

  std::vector<double> z3(n * c, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t ti = 0; ti < t; ++ti)
      for (std::size_t k = 0; k < c; ++k) z3[j * c + k] += z2[(j * t + ti) * c + k];
  for (double& x : z3) x /= static_cast<double>(t);

  ExtractedGraph g;
  g.class_id = class_id;
  g.num_nodes = n;
  g.node_importance.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < c; ++k) g.node_importance[j] += z3[j * c + k];
  g.edge_weights.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < c; ++k) {
        const double d = z3[i * c + k] - z3[j * c + k];
        d2 += d * d;
      }
      g.edge_weights[i * n + j] = g.edge_weights[j * n + i] = std::sqrt(d2);
    }
  }
  return g;
}

std::vector<std::array<double, 2>> force_layout(const ExtractedGraph& graph, std::size_t iterations,
                                                std::uint64_t seed) {
  const std::size_t n = graph.num_nodes;
  if (n == 0) throw ShapeError("force_layout needs at least one node");
  std::vector<std::array<double, 2>> pos(n, {0.0, 0.0});
  if (n == 1) return pos;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  for (auto& p : pos) p = {unit(rng), unit(rng)};

  const double k = std::sqrt(1.0 / static_cast<double>(n));
  const double t0 = 0.1;
  constexpr double kMinDistance = 0.01;
  std::vector<std::array<double, 2>> disp(n);
  for (std::size_t it = 0; it < iterations; ++it) {
    const double temperature = t0 * (1.0 - static_cast<double>(it) / static_cast<double>(iterations));
    std::fill(disp.begin(), disp.end(), std::array<double, 2>{0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = pos[i][0] - pos[j][0], dy = pos[i][1] - pos[j][1];
        const double d = std::max(kMinDistance, std::hypot(dx, dy));
        // repulsion k^2/d minus weighted attraction w*d^2/k, along the unit vector
        const double force = k * k / d - graph.edge(i, j) * d * d / k;
        const double fx = dx / d * force, fy = dy / d * force;
        disp[i][0] += fx;
        disp[i][1] += fy;
        disp[j][0] -= fx;
        disp[j][1] -= fy;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double len = std::hypot(disp[i][0], disp[i][1]);
      if (len == 0.0) continue;
      const double step = std::min(len, temperature);
      pos[i][0] += disp[i][0] / len * step;
      pos[i][1] += disp[i][1] / len * step;
    }
  }
  double cx = 0.0, cy = 0.0;
  for (const auto& p : pos) {
    cx += p[0];
    cy += p[1];
  }
  cx /= static_cast<double>(n);
  cy /= static_cast<double>(n);
  for (auto& p : pos) {
    p[0] -= cx;
    p[1] -= cy;
    if (!std::isfinite(p[0]) || !std::isfinite(p[1])) throw NumericError("force_layout produced a non-finite position");
  }
  return pos;
}

std::vector<std::vector<std::size_t>> confusion_matrix(std::span<const int> predictions,
                                                       std::span<const int> labels, std::size_t classes) {
  if (predictions.size() != labels.size()) throw ShapeError("confusion_matrix: length mismatch");
  std::vector<std::vector<std::size_t>> m(classes, std::vector<std::size_t>(classes, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int t = labels[i], p = predictions[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= classes || static_cast<std::size_t>(p) >= classes) {
      throw std::out_of_range("confusion_matrix: sample " + std::to_string(i) + " has label " + std::to_string(t) +
                              " / prediction " + std::to_string(p) + " outside [0, " + std::to_string(classes) + ")");
    }
    ++m[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return m;
}

std::string confusion_to_csv(const std::vector<std::vector<std::size_t>>& matrix) {
  std::ostringstream out;
  out << "true\\predicted";
  for (std::size_t j = 0; j < matrix.size(); ++j) out << ',' << j;
  out << '\n';
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    out << i;
    for (std::size_t v : matrix[i]) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

namespace {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void check_graph(const ExtractedGraph& g) {
  if (g.node_importance.size() != g.num_nodes || g.edge_weights.size() != g.num_nodes * g.num_nodes) {
    throw ShapeError("graph arrays do not match its node count");
  }
  if (!g.positions.empty() && g.positions.size() != g.num_nodes) throw ShapeError("graph positions do not match its node count");
}

}  // namespace

std::string graph_to_dot(const ExtractedGraph& g) {
  check_graph(g);
  double lo = 0.0, hi = 0.0;
  if (g.num_nodes > 0) {
    const auto [mn, mx] = std::minmax_element(g.node_importance.begin(), g.node_importance.end());
    lo = *mn;
    hi = *mx;
  }
  std::ostringstream out;
  out << "graph class_" << g.class_id << " {\n";
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    const double size = hi > lo ? 0.2 + 1.8 * (g.node_importance[i] - lo) / (hi - lo) : 1.1;
    out << "  n" << i << " [size=" << format_number(size) << ", importance=" << format_number(g.node_importance[i]);
    if (!g.positions.empty()) {
      out << ", pos=\"" << format_number(g.positions[i][0]) << ',' << format_number(g.positions[i][1]) << "\"";
    }
    out << "];\n";
  }
  for (std::size_t i = 0; i < g.num_nodes; ++i)
    for (std::size_t j = i + 1; j < g.num_nodes; ++j)
      out << "  n" << i << " -- n" << j << " [weight=" << format_number(g.edge(i, j)) << "];\n";
  out << "}\n";
  return out.str();
}

std::string graph_to_json(const ExtractedGraph& g) {
  check_graph(g);
  nlohmann::json j;
  j["class_id"] = g.class_id;
  j["num_nodes"] = g.num_nodes;
  j["node_importance"] = g.node_importance;
  j["edge_weights"] = g.edge_weights;
  if (!g.positions.empty()) j["positions"] = g.positions;
  return j.dump(2) + "\n";
}

ExtractedGraph graph_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ExtractedGraph g;
    g.class_id = j.at("class_id").get<int>();
    g.num_nodes = j.at("num_nodes").get<std::size_t>();
    g.node_importance = j.at("node_importance").get<std::vector<double>>();
    g.edge_weights = j.at("edge_weights").get<std::vector<double>>();
    if (j.contains("positions")) g.positions = j.at("positions").get<std::vector<std::array<double, 2>>>();
    check_graph(g);
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("graph json: ") + e.what());
  }
}

void export_graph(const ExtractedGraph& graph, GraphFormat format, const std::filesystem::path& path) {
  const std::string text = format == GraphFormat::kDot ? graph_to_dot(graph) : graph_to_json(graph);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace videograph
