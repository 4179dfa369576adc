#include "dhac/graph_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace dhac {

using nlohmann::json;

namespace {

std::string where(std::size_t k, const char* field) {
    return "nodes[" + std::to_string(k) + "]." + field;
}

std::int16_t int16_from_json(const json& j, const std::string& loc) {
    if (!j.is_number_integer()) throw ParseError("value", loc + ": expected an integer");
    const auto v = j.get<std::int64_t>();
    if (v < -32768 || v > 32767) throw ParseError("value", loc + ": integer out of int16 range");
    return static_cast<std::int16_t>(v);
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError("value", "malformed float '" + std::string(s) + "'");
    return v;
}

json scalar_to_json(const Scalar& v) {
    if (v.type == ScalarType::Int16) return v.i;
    return format_double(v.f);
}

Scalar scalar_from_json(const json& j, ScalarType type) {
    if (type == ScalarType::Int16) return Scalar::int16(int16_from_json(j, "value"));
    if (j.is_string()) return Scalar::float64(parse_double(j.get<std::string>()));
    if (j.is_number()) return Scalar::float64(j.get<double>());
    throw ParseError("value", "expected a float64 value");
}

json parse_json(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("syntax", "malformed document at byte " + std::to_string(e.byte) + ": " + e.what());
    }
}

Graph graph_from_json(const json& doc) {
    try {
        if (!doc.is_object()) throw ParseError("shape", "graph document must be an object");
        for (const char* f : {"name", "type", "nodes", "inputs", "outputs"})
            if (!doc.contains(f)) throw ParseError("missing", std::string("missing field '") + f + "'");
        const ScalarType gtype = scalar_type_from_string(doc.at("type").get<std::string>());
        const json& jn = doc.at("nodes");
        if (!jn.is_array()) throw ParseError("shape", "'nodes' must be an array");

        std::vector<Node> nodes(jn.size());
        std::vector<bool> typed(jn.size(), false);
        std::vector<const json*> values(jn.size(), nullptr);
        for (std::size_t k = 0; k < jn.size(); ++k) {
            const json& e = jn[k];
            if (!e.is_object()) throw ParseError("shape", where(k, "") + " must be an object");
            if (!e.contains("id") || !e.at("id").is_number_integer())
                throw ParseError("id", where(k, "id") + ": integer id required");
            if (!e.contains("op") || !e.at("op").is_string()) throw ParseError("op", where(k, "op") + ": op required");
            Node& n = nodes[k];
            n.id = e.at("id").get<NodeId>();
            try {
                n.op = op_from_string(e.at("op").get<std::string>());
            } catch (const ParseError& pe) {
                throw ParseError("op", where(k, "op") + ": " + pe.what());
            }
            if (e.contains("operands")) {
                if (!e.at("operands").is_array()) throw ParseError("operands", where(k, "operands") + ": array required");
                for (const json& o : e.at("operands")) {
                    if (!o.is_number_integer()) throw ParseError("operands", where(k, "operands") + ": integer ids required");
                    n.operands.push_back(o.get<NodeId>());
                }
            }
            if (e.contains("type")) {
                n.type = scalar_type_from_string(e.at("type").get<std::string>());
                typed[k] = true;
            } else {
                n.type = gtype;
                typed[k] = n.op == Op::Input || n.op == Op::Const || n.operands.empty();
            }
            if (n.op == Op::Const) {
                if (!e.contains("value")) throw ParseError("value", where(k, "value") + ": const needs a value");
                values[k] = &e.at("value");
            }
        }
        // Untyped nodes inherit their first operand's type; iterate to a fixed point
        // so that file order does not matter.
        std::unordered_map<NodeId, std::size_t> pos;
        for (std::size_t k = 0; k < nodes.size(); ++k) pos.emplace(nodes[k].id, k);
        for (bool changed = true; changed;) {
            changed = false;
            for (std::size_t k = 0; k < nodes.size(); ++k) {
                if (typed[k]) continue;
                auto it = pos.find(nodes[k].operands.front());
                if (it == pos.end() || it->second == k) {
                    typed[k] = true;  // validation reports the dangling id or cycle
                    continue;
                }
                if (typed[it->second]) {
                    nodes[k].type = nodes[it->second].type;
                    typed[k] = true;
                    changed = true;
                }
            }
        }
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            if (!values[k]) continue;
            try {
                nodes[k].value = scalar_from_json(*values[k], nodes[k].type);
            } catch (const ParseError& pe) {
                throw ParseError("value", where(k, "value") + ": " + pe.what());
            }
        }
        auto ids = [](const json& a, const char* f) {
            if (!a.is_array()) throw ParseError("shape", std::string("'") + f + "' must be an array");
            std::vector<NodeId> out;
            for (const json& x : a) {
                if (!x.is_number_integer()) throw ParseError("shape", std::string("'") + f + "' must hold integer ids");
                out.push_back(x.get<NodeId>());
            }
            return out;
        };
        return Graph(doc.at("name").get<std::string>(), gtype, std::move(nodes), ids(doc.at("inputs"), "inputs"),
                     ids(doc.at("outputs"), "outputs"));
    } catch (const json::exception& e) {
        throw ParseError("shape", std::string("malformed graph document: ") + e.what());
    }
}

Graph parse_program(std::string_view text) { return graph_from_json(parse_json(text)); }

json graph_to_json(const Graph& g) {
    json nodes = json::array();
    for (const Node& n : g.nodes()) {
        json e;
        e["id"] = n.id;
        e["op"] = std::string(to_string(n.op));
        if (!n.operands.empty()) e["operands"] = n.operands;
        if (n.type != g.type()) e["type"] = std::string(to_string(n.type));
        if (n.op == Op::Const) e["value"] = scalar_to_json(n.value);
        nodes.push_back(std::move(e));
    }
    json doc;
    doc["name"] = g.name();
    doc["type"] = std::string(to_string(g.type()));
    doc["nodes"] = std::move(nodes);
    doc["inputs"] = g.inputs();
    doc["outputs"] = g.outputs();
    return doc;
}

std::string serialize_program(const Graph& g) { return graph_to_json(g).dump(1) + "\n"; }

std::vector<Scalar> inputs_from_json(const json& j, const Graph& g) {
    if (!j.is_array()) throw InputError("shape", "inputs must be a JSON array");
    if (j.size() != g.inputs().size())
        throw InputError("arity", "expected " + std::to_string(g.inputs().size()) + " inputs, got " +
                                      std::to_string(j.size()));
    std::vector<Scalar> out;
    out.reserve(j.size());
    for (std::size_t k = 0; k < j.size(); ++k) {
        try {
            out.push_back(scalar_from_json(j[k], g.node(g.inputs()[k]).type));
        } catch (const ParseError& e) {
            throw InputError("type", "input " + std::to_string(k) + ": " + e.what());
        }
    }
    return out;
}

json inputs_to_json(const std::vector<Scalar>& v) {
    json a = json::array();
    for (const Scalar& s : v) a.push_back(scalar_to_json(s));
    return a;
}

json trace_to_json(const Trace& t) {
    json doc;
    doc["outputs"] = json::array();
    for (const Scalar& s : t.outputs) doc["outputs"].push_back(scalar_to_json(s));
    doc["exports"] = json::object();
    for (const auto& [id, s] : t.exports) doc["exports"][std::to_string(id)] = scalar_to_json(s);
    return doc;
}

Trace trace_from_json(const json& j) {
    auto value = [](const json& x) {
        return x.is_string() ? Scalar::float64(parse_double(x.get<std::string>()))
                             : Scalar::int16(int16_from_json(x, "trace value"));
    };
    try {
        Trace t;
        for (const json& x : j.at("outputs")) t.outputs.push_back(value(x));
        if (j.contains("exports"))
            for (const auto& [key, x] : j.at("exports").items()) t.exports.emplace(std::stoll(key), value(x));
        return t;
    } catch (const json::exception& e) {
        throw TraceError("shape", std::string("malformed trace: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw TraceError("shape", "malformed export id in trace");
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("io", "cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("io", "cannot write '" + path + "'");
    out << content;
}

}  // namespace dhac
