#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "anderson/criteria.hpp"
#include "anderson/dynamics.hpp"
#include "anderson/green.hpp"
#include "anderson/operator.hpp"
#include "anderson/topology.hpp"

namespace anderson::io {

using nlohmann::json;

inline constexpr const char* schema_version = "anderson/1";

/// Shortest text that parses back to the same double.
std::string format_double(double x);

// Topology: {schema, kind, parameters, vertex_count, edges, mask}.
json topology_to_json(const Topology& topology);
Topology topology_from_json(const json& doc);

// Potentials and matrices: JSON metadata plus coordinate triplets in CSV.
json potential_to_json(const PotentialSample& potential, const DisorderSpec& spec);
PotentialSample potential_from_json(const json& doc);
void write_matrix_csv(std::ostream& out, const Hamiltonian& h);
json matrix_metadata(const Hamiltonian& h);
Hamiltonian read_matrix(const json& metadata, std::istream& triplets);

enum class Format { csv, json };

/// A rectangular result table. Cells are JSON scalars so the same table can
/// be written as CSV or as a JSON array of records.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;

  void add(std::vector<json> row);
};

void write_table(std::ostream& out, const Table& table, Format format);

/// vertex, re, im, abs, distance
Table green_column_table(const Eigen::VectorXcd& column, const Topology& topology, VertexId source);

/// bin_lo, bin_hi, count
Table histogram_table(const PopulationResult& result);
json population_summary(const PopulationResult& result, const PopulationParams& params, const DisorderSpec& spec);

/// parameters, mean, stderr, n, seed, bound, verdict
Table estimate_table();
void add_estimate_row(Table& table, const std::string& parameters, const DiagnosticEstimate& estimate);

/// t, value
Table time_series_table(const std::vector<double>& times, const std::vector<double>& values);
/// Coordinate format (x, y, value) of correlator rows Q(x, .) for x in sources.
Table correlator_table(const std::vector<std::vector<double>>& rows, const std::vector<VertexId>& sources);
json profile_to_json(const EigenfunctionProfile& profile, double energy);

json disorder_to_json(const DisorderSpec& spec);

}  // namespace anderson::io
