#include "anderson/io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "anderson/error.hpp"

namespace anderson::io {

std::string format_double(double x) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, result.ptr);
}

json topology_to_json(const Topology& topology) {
  json doc;
  doc["schema"] = schema_version;
  doc["kind"] = to_string(topology.kind());
  json params;
  switch (topology.kind()) {
    case TopologyKind::lattice:
      params["sides"] = topology.sides();
      params["boundary"] = to_string(topology.boundary());
      break;
    case TopologyKind::bethe:
      params["branching"] = topology.branching();
      params["depth"] = topology.depth();
      break;
    case TopologyKind::delone:
      params["sides"] = topology.sides();
      params["radius"] = topology.delone_radius();
      params["seed"] = topology.delone_seed();
      break;
  }
  doc["parameters"] = params;
  doc["vertex_count"] = topology.vertex_count();
  json edges = json::array();
  for (const auto& [u, v] : topology.edges()) edges.push_back({u, v});
  doc["edges"] = std::move(edges);
  json mask = json::array();
  if (topology.kind() == TopologyKind::delone) {
    for (VertexId v = 0; v < topology.vertex_count(); ++v) {
      if (topology.mask()[v]) mask.push_back(v);
    }
  }
  doc["mask"] = std::move(mask);
  return doc;
}

Topology topology_from_json(const json& doc) {
  try {
    const std::string kind = doc.at("kind");
    const auto& params = doc.at("parameters");
    auto build = [&]() {
      if (kind == "lattice") {
        const std::string b = params.at("boundary");
        return Topology::lattice(params.at("sides").get<std::vector<int>>(),
                                 b == "periodic" ? Boundary::periodic : Boundary::open);
      }
      if (kind == "bethe") return Topology::bethe(params.at("branching"), params.at("depth"));
      if (kind == "delone") {
        return Topology::delone(params.at("sides").get<std::vector<int>>(), params.at("radius"),
                                params.at("seed").get<std::uint64_t>());
      }
      throw ValidationError("topology json: unknown kind '" + kind + "'");
    };
    Topology t = build();
    if (doc.at("vertex_count").get<std::size_t>() != t.vertex_count()) {
      throw ValidationError("topology json: vertex_count does not match the parameters");
    }
    std::vector<Edge> edges;
    for (const auto& e : doc.at("edges")) edges.emplace_back(e.at(0).get<VertexId>(), e.at(1).get<VertexId>());
    if (edges != t.edges()) throw ValidationError("topology json: edge list does not match the parameters");
    if (t.kind() == TopologyKind::delone) {
      std::vector<bool> mask(t.vertex_count(), false);
      for (const auto& v : doc.at("mask")) mask.at(v.get<VertexId>()) = true;
      t.set_mask(std::move(mask));
    }
    return t;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("topology json: ") + e.what());
  }
}

json disorder_to_json(const DisorderSpec& spec) {
  json doc;
  if (const auto* u = std::get_if<UniformLaw>(&spec.law)) {
    doc["family"] = "uniform";
    doc["a"] = u->a;
    doc["b"] = u->b;
  } else if (const auto* b = std::get_if<BernoulliLaw>(&spec.law)) {
    doc["family"] = "bernoulli";
    doc["p"] = b->p;
  } else {
    const auto& d = std::get<DiscreteLaw>(spec.law);
    doc["family"] = "discrete";
    doc["values"] = d.values;
    doc["probs"] = d.probs;
  }
  doc["lambda"] = spec.lambda;
  doc["seed"] = spec.seed;
  return doc;
}

json potential_to_json(const PotentialSample& potential, const DisorderSpec& spec) {
  json doc;
  doc["schema"] = schema_version;
  doc["disorder"] = disorder_to_json(spec);
  doc["realization"] = potential.realization;
  doc["values"] = potential.values;
  return doc;
}

PotentialSample potential_from_json(const json& doc) {
  PotentialSample p;
  p.realization = doc.at("realization").get<std::uint64_t>();
  p.values = doc.at("values").get<std::vector<double>>();
  return p;
}

json matrix_metadata(const Hamiltonian& h) {
  json doc;
  doc["schema"] = schema_version;
  doc["convention"] = to_string(h.convention);
  doc["dimension"] = h.dimension();
  doc["nonzeros"] = h.matrix.nonZeros();
  doc["index_map"] = h.index_map;
  return doc;
}

void write_matrix_csv(std::ostream& out, const Hamiltonian& h) {
  out << "row,col,value\n";
  for (Eigen::Index j = 0; j < h.matrix.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(h.matrix, j); it; ++it) {
      out << it.row() << ',' << it.col() << ',' << format_double(it.value()) << '\n';
    }
  }
}

Hamiltonian read_matrix(const json& metadata, std::istream& triplets) {
  Hamiltonian h;
  h.convention = metadata.at("convention").get<std::string>() == "laplacian" ? Convention::laplacian
                                                                             : Convention::adjacency;
  h.index_map = metadata.at("index_map").get<std::vector<VertexId>>();
  const auto n = metadata.at("dimension").get<Eigen::Index>();
  std::string line;
  std::getline(triplets, line);
  std::vector<Eigen::Triplet<double>> entries;
  while (std::getline(triplets, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string a, b, c;
    std::getline(row, a, ',');
    std::getline(row, b, ',');
    std::getline(row, c, ',');
    double value = 0.0;
    std::from_chars(c.data(), c.data() + c.size(), value);
    entries.emplace_back(std::stol(a), std::stol(b), value);
  }
  h.matrix.resize(n, n);
  h.matrix.setFromTriplets(entries.begin(), entries.end());
  return h;
}

void Table::add(std::vector<json> row) {
  if (row.size() != columns.size()) throw ValidationError("table: row width does not match the header");
  rows.push_back(std::move(row));
}

namespace {

std::string csv_cell(const json& cell) {
  if (cell.is_null()) return "";
  if (cell.is_number_float()) return format_double(cell.get<double>());
  if (cell.is_number_unsigned()) return std::to_string(cell.get<std::uint64_t>());
  if (cell.is_number_integer()) return std::to_string(cell.get<std::int64_t>());
  if (cell.is_boolean()) return cell.get<bool>() ? "true" : "false";
  const std::string s = cell.get<std::string>();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char ch : s) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  return quoted + '"';
}

}  // namespace

void write_table(std::ostream& out, const Table& table, Format format) {
  if (format == Format::json) {
    json records = json::array();
    for (const auto& row : table.rows) {
      json record = json::object();
      for (std::size_t i = 0; i < row.size(); ++i) record[table.columns[i]] = row[i];
      records.push_back(std::move(record));
    }
    json doc;
    doc["schema"] = schema_version;
    doc["columns"] = table.columns;
    doc["rows"] = std::move(records);
    out << doc.dump(1) << '\n';
    return;
  }
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_cell(row[i]);
    out << '\n';
  }
}

Table green_column_table(const Eigen::VectorXcd& column, const Topology& topology, VertexId source) {
  Table t{{"vertex", "re", "im", "abs", "distance"}, {}};
  for (Eigen::Index x = 0; x < column.size(); ++x) {
    t.add({x, column(x).real(), column(x).imag(), std::abs(column(x)),
           topology.distance(source, static_cast<VertexId>(x))});
  }
  return t;
}

Table histogram_table(const PopulationResult& result) {
  Table t{{"bin_lo", "bin_hi", "count"}, {}};
  for (std::size_t b = 0; b < result.counts.size(); ++b) {
    t.add({result.bin_edges[b], result.bin_edges[b + 1], result.counts[b]});
  }
  return t;
}

json population_summary(const PopulationResult& result, const PopulationParams& params, const DisorderSpec& spec) {
  json doc;
  doc["schema"] = schema_version;
  doc["branching"] = params.branching;
  doc["energy"] = params.z.energy;
  doc["eps"] = params.z.eps;
  doc["pool_size"] = params.pool_size;
  doc["sweeps"] = params.sweeps;
  doc["s"] = params.s;
  doc["init"] = params.init == PoolInit::clean_fixed_point ? "clean_fixed_point" : "constant_i";
  doc["disorder"] = disorder_to_json(spec);
  doc["mean_im_g"] = result.mean_im;
  doc["mean_abs_g_s"] = result.mean_abs_s;
  doc["mean_abs_g_2"] = result.mean_abs2;
  doc["drift"] = result.drift;
  doc["converged"] = result.converged;
  doc["mean_im_history"] = result.mean_im_history;
  return doc;
}

Table estimate_table() {
  return {{"parameters", "mean", "stderr", "n", "seed", "bound", "verdict"}, {}};
}

void add_estimate_row(Table& table, const std::string& parameters, const DiagnosticEstimate& e) {
  json bound = e.bound_value ? json(*e.bound_value) : json(nullptr);
  std::string verdict = e.bound_satisfied ? (*e.bound_satisfied ? "satisfied" : "violated") : "n/a";
  table.add({parameters, e.mean, e.stderr_, e.n_samples, e.seed, bound, verdict});
}

Table time_series_table(const std::vector<double>& times, const std::vector<double>& values) {
  Table t{{"t", "value"}, {}};
  for (std::size_t i = 0; i < times.size(); ++i) t.add({times[i], values[i]});
  return t;
}

Table correlator_table(const std::vector<std::vector<double>>& rows, const std::vector<VertexId>& sources) {
  Table t{{"x", "y", "value"}, {}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t y = 0; y < rows[i].size(); ++y) t.add({sources[i], y, rows[i][y]});
  }
  return t;
}

json profile_to_json(const EigenfunctionProfile& profile, double energy) {
  json doc;
  doc["energy"] = energy;
  doc["center"] = profile.center;
  doc["rate"] = std::isinf(profile.rate) ? json("-inf") : json(profile.rate);
  doc["r_squared"] = profile.r_squared;
  doc["max_amplitude"] = profile.max_amplitude;
  return doc;
}

}  // namespace anderson::io
