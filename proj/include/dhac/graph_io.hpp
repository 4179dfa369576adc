#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dhac/graph.hpp"
#include "dhac/interp.hpp"
#include "json.hpp"

namespace dhac {

// Graph documents are JSON objects with fields name, type, nodes, inputs and
// outputs. A node is {id, op, operands?, value?, type?}; a missing node type
// is taken from the first operand, or from the graph type for operand-less
// nodes. Int16 values are decimal numbers, Float64 values are shortest
// round-trip decimal strings.
Graph parse_program(std::string_view text);
Graph graph_from_json(const nlohmann::json& doc);
nlohmann::json graph_to_json(const Graph& g);
std::string serialize_program(const Graph& g);

std::string format_double(double v);  // shortest round-trip
double parse_double(std::string_view s);  // throws ParseError

nlohmann::json scalar_to_json(const Scalar& v);
Scalar scalar_from_json(const nlohmann::json& j, ScalarType type);

// Input vectors: a JSON array, converted against the graph's input types.
std::vector<Scalar> inputs_from_json(const nlohmann::json& j, const Graph& g);
nlohmann::json inputs_to_json(const std::vector<Scalar>& v);

// Traces: {"outputs": [...], "exports": {"<id>": value}}. Floats are strings,
// integers numbers, so a trace reads back without the graph.
nlohmann::json trace_to_json(const Trace& t);
Trace trace_from_json(const nlohmann::json& j);

nlohmann::json parse_json(std::string_view text);  // ParseError on malformed text
std::string read_file(const std::string& path);    // InputError if unreadable
void write_file(const std::string& path, std::string_view content);

}  // namespace dhac
