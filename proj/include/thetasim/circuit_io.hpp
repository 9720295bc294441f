#pragma once

#include <string>

#include "json.hpp"
#include "thetasim/circuit.hpp"

namespace thetasim {

// Circuit spec file schema (JSON):
//
//   {
//     "name": "...",
//     "elements": [ {"id": "BS1", "kind": "beamsplitter", "params": {"reflectivity": 0.5}}, ... ],
//     "segments": [ {"from": "SPS.out0", "to": "BS1.in0", "delay": 0.0}, ... ]
//   }
//
// kinds and their params:
//   source            {}
//   beamsplitter      {"reflectivity": r}           r in [0,1], default 0.5
//   mirror            {}
//   phase_shifter     {"phase": radians}            default 0
//   obstacle          {"category": "bomb"|"opaque", "transmittance": t, "usable": bool}
//   nonlinear_crystal {}                            ports: in0 pump, in1 idler-in, out0 signal, out1 idler
//   detector          {"label": "D1"}               default label = id
//
// Ports are written "ELEM.inN" / "ELEM.outN"; "from" must be an output port
// and "to" an input port. Parse errors report the offending line or field.

namespace detail {

inline int line_of_offset(const std::string& text, std::size_t byte) {
    int line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

inline double number_field(const nlohmann::json& obj, const std::string& field, const std::string& where, double fallback,
                           bool required = false) {
    if (!obj.contains(field)) {
        if (required) throw CircuitError(CircuitFault::ParseError, where + ": missing field '" + field + "'");
        return fallback;
    }
    if (!obj[field].is_number())
        throw CircuitError(CircuitFault::ParseError, where + ": field '" + field + "' must be a number");
    return obj[field].get<double>();
}

inline std::string string_field(const nlohmann::json& obj, const std::string& field, const std::string& where) {
    if (!obj.contains(field)) throw CircuitError(CircuitFault::ParseError, where + ": missing field '" + field + "'");
    if (!obj[field].is_string())
        throw CircuitError(CircuitFault::ParseError, where + ": field '" + field + "' must be a string");
    return obj[field].get<std::string>();
}

}  // namespace detail

/// Parses a circuit spec document and builds the validated circuit.
inline Circuit parse_circuit_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw CircuitError(CircuitFault::ParseError,
                           "line " + std::to_string(detail::line_of_offset(text, e.byte)) + ": " + e.what());
    }
    if (!doc.is_object()) throw CircuitError(CircuitFault::ParseError, "top level must be an object");
    if (!doc.contains("elements") || !doc["elements"].is_array())
        throw CircuitError(CircuitFault::ParseError, "missing 'elements' array");
    if (!doc.contains("segments") || !doc["segments"].is_array())
        throw CircuitError(CircuitFault::ParseError, "missing 'segments' array");

    CircuitBuilder builder(doc.value("name", std::string("circuit")));

    std::size_t ei = 0;
    for (const auto& je : doc["elements"]) {
        const std::string where = "elements[" + std::to_string(ei++) + "]";
        if (!je.is_object()) throw CircuitError(CircuitFault::ParseError, where + ": must be an object");
        const std::string id = detail::string_field(je, "id", where);
        const std::string kind = detail::string_field(je, "kind", where);
        const nlohmann::json params = je.value("params", nlohmann::json::object());

        if (kind == "source") {
            builder.source(id);
        } else if (kind == "beamsplitter") {
            builder.beamsplitter(id, detail::number_field(params, "reflectivity", where, 0.5));
        } else if (kind == "mirror") {
            builder.mirror(id);
        } else if (kind == "phase_shifter") {
            builder.phase_shifter(id, detail::number_field(params, "phase", where, 0.0));
        } else if (kind == "obstacle") {
            const std::string cat = detail::string_field(params, "category", where + ".params");
            if (cat != "bomb" && cat != "opaque")
                throw CircuitError(CircuitFault::ParseError, where + ".params.category: expected 'bomb' or 'opaque'");
            builder.obstacle(id, cat == "bomb" ? ObstacleCategory::Bomb : ObstacleCategory::Opaque,
                             detail::number_field(params, "transmittance", where, 1.0, true),
                             params.value("usable", false));
        } else if (kind == "nonlinear_crystal") {
            builder.crystal(id);
        } else if (kind == "detector") {
            builder.detector(id, params.value("label", id));
        } else {
            throw CircuitError(CircuitFault::ParseError, where + ".kind: unknown kind '" + kind + "'");
        }
    }

    std::size_t si = 0;
    for (const auto& js : doc["segments"]) {
        const std::string where = "segments[" + std::to_string(si++) + "]";
        if (!js.is_object()) throw CircuitError(CircuitFault::ParseError, where + ": must be an object");
        builder.connect(detail::string_field(js, "from", where), detail::string_field(js, "to", where),
                        detail::number_field(js, "delay", where, 0.0, true));
    }

    return builder.build();
}

/// Serializes a circuit back to the spec file schema. Round-trips through
/// parse_circuit_json.
inline std::string circuit_to_json(const Circuit& c, int indent = 2) {
    nlohmann::ordered_json doc;
    doc["name"] = c.name();
    doc["elements"] = nlohmann::ordered_json::array();
    for (const auto& e : c.elements()) {
        nlohmann::ordered_json je;
        je["id"] = e.id;
        je["kind"] = to_string(e.kind);
        nlohmann::ordered_json params = nlohmann::ordered_json::object();
        switch (e.kind) {
            case ElementKind::BeamSplitter: params["reflectivity"] = e.reflectivity; break;
            case ElementKind::PhaseShifter: params["phase"] = e.phase; break;
            case ElementKind::Obstacle:
                params["category"] = e.category == ObstacleCategory::Bomb ? "bomb" : "opaque";
                params["transmittance"] = e.transmittance;
                if (e.category == ObstacleCategory::Bomb) params["usable"] = e.usable;
                break;
            case ElementKind::Detector: params["label"] = e.label; break;
            default: break;
        }
        if (!params.empty()) je["params"] = params;
        doc["elements"].push_back(je);
    }
    doc["segments"] = nlohmann::ordered_json::array();
    for (const auto& s : c.segments()) {
        nlohmann::ordered_json js;
        const auto& from = c.element(s.from_element);
        const auto& to = c.element(s.to_element);
        js["from"] = from.id + ".out" + std::to_string(s.from_port);
        js["to"] = to.id + ".in" + std::to_string(s.to_port);
        js["delay"] = s.delay;
        doc["segments"].push_back(js);
    }
    return doc.dump(indent) + "\n";
}

}  // namespace thetasim
